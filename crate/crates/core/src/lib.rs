pub mod cells;
pub mod cubical;
pub mod cut_complex;
pub mod gi_decomposition;
pub mod jsj_gluing;
pub mod norm_homology;
pub mod normal_surface;
pub mod polyhedral;
pub mod scalar;
pub mod seifert;
pub mod signature;
pub mod smith;
pub mod triangulation;
