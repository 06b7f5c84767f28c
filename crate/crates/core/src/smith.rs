//! Dense integer matrices and Smith normal form.
//!
//! Elimination always uses checked arithmetic. Callers working over a
//! fixed-width ring get [`Overflow`] instead of a wrong answer and can retry
//! over [`num_bigint::BigInt`]; [`smith_big`] does that automatically.

use std::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::scalar::Ring;

/// Elimination left the range of a fixed-width scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("integer overflow during elimination")]
pub struct Overflow;

/// Row-major dense integer matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix<I> {
    rows: usize,
    cols: usize,
    data: Vec<I>,
}

impl<I: Ring> IntMatrix<I> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![I::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, I::one());
        }
        m
    }

    /// Build from rows; every row must have length `cols`.
    pub fn from_rows(cols: usize, rows: Vec<Vec<I>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix row");
            data.extend(r);
        }
        IntMatrix { rows: n, cols, data }
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(cols, rows.iter().map(|r| r.iter().map(|&x| I::of(x)).collect()).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &I {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: I) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[I] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    /// Product `self · v` for a column vector.
    pub fn mul_vec(&self, v: &[I]) -> Vec<I> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(I::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.get(r, c).clone() + a.clone() * other.get(k, c).clone();
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Convert entrywise into another ring.
    pub fn convert<J: Ring>(&self) -> Option<IntMatrix<J>> {
        let data = self.data.iter().map(|x| J::from_big(&x.to_big())).collect::<Option<Vec<_>>>()?;
        Some(IntMatrix { rows: self.rows, cols: self.cols, data })
    }

    /// Append the rows of `other` below `self`.
    pub fn stack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        IntMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }
}

impl<I: fmt::Debug> fmt::Debug for IntMatrix<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:?}", self.data[r * self.cols + c])?;
            }
        }
        write!(f, "]")
    }
}

/// Result of a Smith reduction `U·A·V = D`.
#[derive(Clone, Debug)]
pub struct SmithForm<I> {
    /// Non-zero diagonal entries of `D`, positive and in divisibility order.
    pub invariants: Vec<I>,
    /// The column transform `V`, when requested.
    pub right: Option<IntMatrix<I>>,
    /// The inverse of `V`, when requested.
    pub right_inv: Option<IntMatrix<I>>,
}

impl<I: Ring> SmithForm<I> {
    pub fn rank(&self) -> usize {
        self.invariants.len()
    }

    /// Invariant factors greater than one.
    pub fn torsion(&self) -> Vec<I> {
        self.invariants.iter().filter(|d| !d.is_one()).cloned().collect()
    }
}

struct Work<I> {
    a: Vec<Vec<I>>,
    cols: usize,
    v: Option<Vec<Vec<I>>>,
    vinv: Option<Vec<Vec<I>>>,
}

fn add_mul<I: Ring>(x: &I, c: &I, y: &I) -> Result<I, Overflow> {
    // x + c*y
    let p = c.checked_mul(y).ok_or(Overflow)?;
    x.checked_add(&p).ok_or(Overflow)
}

impl<I: Ring> Work<I> {
    /// row_dst += c * row_src
    fn row_add(&mut self, dst: usize, src: usize, c: &I) -> Result<(), Overflow> {
        for j in 0..self.cols {
            if self.a[src][j].is_zero() {
                continue;
            }
            let val = add_mul(&self.a[dst][j], c, &self.a[src][j])?;
            self.a[dst][j] = val;
        }
        Ok(())
    }

    /// col_dst += c * col_src, tracked in V and V^-1.
    fn col_add(&mut self, dst: usize, src: usize, c: &I) -> Result<(), Overflow> {
        for row in self.a.iter_mut() {
            if row[src].is_zero() {
                continue;
            }
            let val = add_mul(&row[dst], c, &row[src])?;
            row[dst] = val;
        }
        if let Some(v) = self.v.as_mut() {
            for row in v.iter_mut() {
                if row[src].is_zero() {
                    continue;
                }
                let val = add_mul(&row[dst], c, &row[src])?;
                row[dst] = val;
            }
        }
        if let Some(w) = self.vinv.as_mut() {
            // inverse elementary matrix acts on rows: row_src -= c * row_dst
            let neg = -c.clone();
            let n = w[0].len();
            for j in 0..n {
                if w[dst][j].is_zero() {
                    continue;
                }
                let val = add_mul(&w[src][j], &neg, &w[dst][j])?;
                w[src][j] = val;
            }
        }
        Ok(())
    }

    fn col_swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for row in self.a.iter_mut() {
            row.swap(i, j);
        }
        if let Some(v) = self.v.as_mut() {
            for row in v.iter_mut() {
                row.swap(i, j);
            }
        }
        if let Some(w) = self.vinv.as_mut() {
            w.swap(i, j);
        }
    }

    fn col_negate(&mut self, j: usize) {
        for row in self.a.iter_mut() {
            row[j] = -row[j].clone();
        }
        if let Some(v) = self.v.as_mut() {
            for row in v.iter_mut() {
                row[j] = -row[j].clone();
            }
        }
        if let Some(w) = self.vinv.as_mut() {
            for x in w[j].iter_mut() {
                *x = -x.clone();
            }
        }
    }
}

/// Smith normal form with deterministic pivoting: the pivot is the entry of
/// least absolute value, ties broken by row then column index.
pub fn smith_normal_form<I: Ring>(m: &IntMatrix<I>, track_right: bool) -> Result<SmithForm<I>, Overflow> {
    let rows = m.rows;
    let cols = m.cols;
    let mut w = Work {
        a: (0..rows).map(|r| m.row(r).to_vec()).collect(),
        cols,
        v: None,
        vinv: None,
    };
    if track_right {
        let id: Vec<Vec<I>> = (0..cols)
            .map(|i| (0..cols).map(|j| if i == j { I::one() } else { I::zero() }).collect())
            .collect();
        w.v = Some(id.clone());
        w.vinv = Some(id);
    }

    let mut invariants = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // global minimal pivot in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                let x = &w.a[i][j];
                if x.is_zero() {
                    continue;
                }
                if best.is_none_or(|(bi, bj)| x.abs() < w.a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        w.a.swap(t, pi);
        w.col_swap(t, pj);

        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if w.a[i][t].is_zero() {
                    continue;
                }
                let q = w.a[i][t].clone() / w.a[t][t].clone();
                if !q.is_zero() {
                    w.row_add(i, t, &-q)?;
                }
                if !w.a[i][t].is_zero() {
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                if w.a[t][j].is_zero() {
                    continue;
                }
                let q = w.a[t][j].clone() / w.a[t][t].clone();
                if !q.is_zero() {
                    w.col_add(j, t, &-q)?;
                }
                if !w.a[t][j].is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                // bring the smallest remainder in row t / column t to the pivot
                let mut bi = t;
                let mut bj = t;
                for i in t + 1..rows {
                    let x = &w.a[i][t];
                    if !x.is_zero() && x.abs() < w.a[bi][bj].abs() {
                        bi = i;
                        bj = t;
                    }
                }
                for j in t + 1..cols {
                    let x = &w.a[t][j];
                    if !x.is_zero() && x.abs() < w.a[bi][bj].abs() {
                        bi = t;
                        bj = j;
                    }
                }
                w.a.swap(t, bi);
                w.col_swap(t, bj);
                continue;
            }
            // divisibility of the trailing block by the pivot
            let p = w.a[t][t].clone();
            let mut offender = None;
            'scan: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(w.a[i][j].clone() % p.clone()).is_zero() {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            match offender {
                Some(i) => w.row_add(t, i, &I::one())?,
                None => break,
            }
        }
        if w.a[t][t].is_negative() {
            w.col_negate(t);
        }
        invariants.push(w.a[t][t].clone());
        t += 1;
    }

    let to_matrix = |rowsv: Vec<Vec<I>>| IntMatrix::from_rows(cols, rowsv);
    Ok(SmithForm {
        invariants,
        right: w.v.map(to_matrix),
        right_inv: w.vinv.map(to_matrix),
    })
}

/// Smith form over `i64` first, falling back to arbitrary precision.
pub fn smith_big(m: &IntMatrix<BigInt>, track_right: bool) -> SmithForm<BigInt> {
    if let Some(small) = m.convert::<i64>() {
        if let Ok(s) = smith_normal_form(&small, track_right) {
            return SmithForm {
                invariants: s.invariants.iter().map(|x| BigInt::from(*x)).collect(),
                right: s.right.map(|r| r.convert().expect("widening")),
                right_inv: s.right_inv.map(|r| r.convert().expect("widening")),
            };
        }
    }
    smith_normal_form(m, track_right).expect("arbitrary precision never overflows")
}

/// Invariant factors of an `i64` matrix, computed without overflow.
pub fn invariant_factors(m: &IntMatrix<i64>) -> Vec<BigInt> {
    if let Ok(s) = smith_normal_form(m, false) {
        return s.invariants.into_iter().map(BigInt::from).collect();
    }
    let big: IntMatrix<BigInt> = m.convert().expect("widening");
    smith_normal_form(&big, false).expect("arbitrary precision never overflows").invariants
}

/// A finitely generated abelian group `Z^rank ⊕ ⊕ Z/d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbelianGroup {
    pub rank: usize,
    /// Torsion divisors greater than one, in divisibility order.
    pub torsion: Vec<BigInt>,
}

impl AbelianGroup {
    pub fn trivial() -> Self {
        AbelianGroup { rank: 0, torsion: Vec::new() }
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    /// Cokernel of a relation matrix whose columns are relations among `rows` generators.
    pub fn cokernel(relations: &IntMatrix<i64>) -> Self {
        let inv = invariant_factors(relations);
        AbelianGroup {
            rank: relations.rows() - inv.len(),
            torsion: inv.into_iter().filter(|d| !d.is_one()).collect(),
        }
    }

    /// Order of the group, or `None` when infinite.
    pub fn order(&self) -> Option<BigInt> {
        (self.rank == 0).then(|| self.torsion.iter().fold(BigInt::one(), |a, b| a * b))
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        for d in &self.torsion {
            parts.push(format!("Z/{d}"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonalizes_small_example() {
        let m = IntMatrix::<i64>::from_i64_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]);
        let s = smith_normal_form(&m, false).unwrap();
        assert_eq!(s.invariants, vec![2, 6, 12]);
    }

    #[test]
    fn right_transform_and_inverse_agree() {
        let m = IntMatrix::<i64>::from_i64_rows(&[vec![1, 2, 3, 4], vec![2, 4, 6, 8], vec![0, 1, 1, 0]]);
        let s = smith_normal_form(&m, true).unwrap();
        let v = s.right.unwrap();
        let vi = s.right_inv.unwrap();
        assert_eq!(v.mul(&vi), IntMatrix::identity(4));
        let av = m.mul(&v);
        for c in s.invariants.len()..4 {
            for r in 0..3 {
                assert_eq!(*av.get(r, c), 0);
            }
        }
    }

    #[test]
    fn overflow_falls_back() {
        let big = i64::MAX / 3;
        let m = IntMatrix::<i64>::from_i64_rows(&[vec![big, big - 1], vec![big - 1, big - 2]]);
        let inv = invariant_factors(&m);
        assert_eq!(inv.len(), 2);
        assert_eq!(inv[0], BigInt::one());
    }

    #[test]
    fn group_display() {
        let g = AbelianGroup { rank: 2, torsion: vec![BigInt::from(2)] };
        assert_eq!(g.to_string(), "Z^2 + Z/2");
        assert_eq!(AbelianGroup::trivial().to_string(), "0");
    }
}

/// Invariant factors of a sparse integer matrix given as `(row, col, value)`
/// triples. Unit pivots are eliminated sparsely first; the remaining core is
/// reduced densely.
pub fn sparse_invariant_factors(rows: usize, cols: usize, entries: &[(usize, usize, i64)]) -> Vec<BigInt> {
    match sparse_reduce(rows, cols, entries) {
        Some((units, core)) => {
            let mut inv: Vec<BigInt> = vec![BigInt::one(); units];
            inv.extend(invariant_factors(&core));
            inv.sort();
            inv
        }
        None => {
            let mut dense = IntMatrix::<BigInt>::zeros(rows, cols);
            for &(r, c, v) in entries {
                let cur = dense.get(r, c).clone();
                dense.set(r, c, cur + BigInt::from(v));
            }
            let mut inv = smith_normal_form(&dense, false).expect("arbitrary precision").invariants;
            inv.sort();
            inv
        }
    }
}

/// Eliminate unit pivots. Returns the number eliminated and the dense core,
/// or `None` on overflow.
fn sparse_reduce(rows: usize, cols: usize, entries: &[(usize, usize, i64)]) -> Option<(usize, IntMatrix<i64>)> {
    use std::collections::{BTreeMap, BTreeSet};
    let mut row_map: Vec<BTreeMap<usize, i64>> = vec![BTreeMap::new(); rows];
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); cols];
    for &(r, c, v) in entries {
        let e = row_map[r].entry(c).or_insert(0);
        *e = e.checked_add(v)?;
    }
    for (r, row) in row_map.iter_mut().enumerate() {
        row.retain(|_, v| *v != 0);
        for &c in row.keys() {
            col_rows[c].insert(r);
        }
    }
    let mut alive_rows: BTreeSet<usize> = (0..rows).filter(|&r| !row_map[r].is_empty()).collect();
    let mut units = 0;
    loop {
        // unit entry in the sparsest row
        let mut pick: Option<(usize, usize, usize)> = None;
        for &r in &alive_rows {
            let len = row_map[r].len();
            if pick.is_some_and(|(l, _, _)| l <= len) {
                continue;
            }
            if let Some((&c, _)) = row_map[r].iter().find(|(_, v)| v.abs() == 1) {
                pick = Some((len, r, c));
                if len == 1 {
                    break;
                }
            }
        }
        let Some((_, r, c)) = pick else { break };
        let pv = row_map[r][&c];
        let pivot_row = std::mem::take(&mut row_map[r]);
        alive_rows.remove(&r);
        for &cc in pivot_row.keys() {
            col_rows[cc].remove(&r);
        }
        let others: Vec<usize> = col_rows[c].iter().copied().collect();
        for r2 in others {
            let factor = row_map[r2][&c].checked_mul(pv)?; // pv = ±1, so a/pv = a*pv
            for (&cc, &v) in &pivot_row {
                let e = row_map[r2].entry(cc).or_insert(0);
                *e = e.checked_sub(factor.checked_mul(v)?)?;
                if *e == 0 {
                    row_map[r2].remove(&cc);
                    col_rows[cc].remove(&r2);
                } else {
                    col_rows[cc].insert(r2);
                }
            }
            if row_map[r2].is_empty() {
                alive_rows.remove(&r2);
            }
        }
        col_rows[c].clear();
        units += 1;
    }
    let live_cols: BTreeSet<usize> = alive_rows.iter().flat_map(|&r| row_map[r].keys().copied()).collect();
    let col_pos: BTreeMap<usize, usize> = live_cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut core = IntMatrix::<i64>::zeros(alive_rows.len(), live_cols.len());
    for (i, &r) in alive_rows.iter().enumerate() {
        for (&c, &v) in &row_map[r] {
            core.set(i, col_pos[&c], v);
        }
    }
    Some((units, core))
}

#[cfg(test)]
mod sparse_tests {
    use super::*;

    #[test]
    fn sparse_matches_dense() {
        let rows = vec![vec![2, 4, 4, 0], vec![-6, 6, 12, 1], vec![10, -4, -16, 0], vec![0, 0, 0, 3]];
        let mut entries = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0 {
                    entries.push((r, c, v));
                }
            }
        }
        let m = IntMatrix::<i64>::from_i64_rows(&rows);
        let mut dense = invariant_factors(&m);
        dense.sort();
        assert_eq!(sparse_invariant_factors(4, 4, &entries), dense);
    }
}
