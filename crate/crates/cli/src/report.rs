//! Structured-text reports and run manifests.

use std::fmt::{self, Display};

use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "normcut-report 1";
pub const MANIFEST_SCHEMA: &str = "normcut-manifest 1";

/// A report is a header line, `key value` lines grouped under `[section]`
/// markers, and a closing `manifest <digest>` line.
#[derive(Debug, Clone)]
pub struct Report {
    lines: Vec<String>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { lines: vec![SCHEMA.to_string(), format!("command {command}")] }
    }

    pub fn section(&mut self, name: impl Display) -> &mut Self {
        self.lines.push(format!("[{name}]"));
        self
    }

    pub fn kv(&mut self, key: impl Display, value: impl Display) -> &mut Self {
        self.lines.push(format!("{key} {value}"));
        self
    }

    pub fn line(&mut self, text: impl Display) -> &mut Self {
        self.lines.push(text.to_string());
        self
    }

    /// Everything except the manifest line.
    pub fn body(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    pub fn finish(&self, manifest_digest: &str) -> String {
        format!("{}manifest {manifest_digest}\n", self.body())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one run. The digest covers every field except wall time,
/// so identical inputs and tool version give identical digests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub version: String,
    pub wall_time_ms: u128,
    pub result_digest: String,
}

impl RunManifest {
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(MANIFEST_SCHEMA.as_bytes());
        for a in &self.command_line {
            h.update(b"\0arg\0");
            h.update(a.as_bytes());
        }
        for i in &self.inputs {
            h.update(b"\0input\0");
            h.update(i.path.as_bytes());
            h.update(b"\0");
            h.update(i.sha256.as_bytes());
        }
        h.update(b"\0version\0");
        h.update(self.version.as_bytes());
        h.update(b"\0result\0");
        h.update(self.result_digest.as_bytes());
        hex::encode(h.finalize())
    }
}

impl Display for RunManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{MANIFEST_SCHEMA}")?;
        writeln!(f, "command {}", self.command_line.join(" "))?;
        for i in &self.inputs {
            writeln!(f, "input {} {}", i.path, i.sha256)?;
        }
        writeln!(f, "version {}", self.version)?;
        writeln!(f, "wall_time_ms {}", self.wall_time_ms)?;
        writeln!(f, "result {}", self.result_digest)?;
        writeln!(f, "digest {}", self.digest())
    }
}

/// `a,b,c` for a list.
pub fn list<T: Display>(xs: impl IntoIterator<Item = T>) -> String {
    let v: Vec<String> = xs.into_iter().map(|x| x.to_string()).collect();
    if v.is_empty() {
        "-".to_string()
    } else {
        v.join(",")
    }
}
