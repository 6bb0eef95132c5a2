//! CSV and JSON emission with a checksummed run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::GrowthEstimate;
use crate::error::{HopeError, Result};
use crate::io::config::Config;

/// Full-precision text for a float: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<Cell>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| HopeError::Parse(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(HopeError::ShapeMismatch(format!(
                "csv row has {} cells, header has {}",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(Cell::render)).map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| HopeError::Parse(format!("csv: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub p_max: usize,
    pub q_max: usize,
    pub nodes_per_element: usize,
    pub nodes: usize,
    pub elements: usize,
    pub max_element: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub wood_margin: f64,
    pub min_abs_eps0: f64,
    pub max_condition: f64,
    pub condition_mode: [i64; 2],
    pub transverse_deviation: f64,
    pub face_mismatch: f64,
    pub pole_flags: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub subcommand: String,
    pub code_version: String,
    pub config: Config,
    pub seed: u64,
    pub threads: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridInfo>,
    #[serde(default)]
    pub xnorms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(default)]
    pub timings: Vec<Timing>,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Parses a manifest and checks that its file entries are well formed.
pub fn parse_manifest(text: &str) -> Result<RunManifest> {
    let m: RunManifest =
        serde_json::from_str(text).map_err(|e| HopeError::Parse(format!("manifest: {e}")))?;
    for f in &m.files {
        let p = Path::new(&f.path);
        if p.is_absolute()
            || p.components()
                .any(|c| !matches!(c, std::path::Component::Normal(_)))
        {
            return Err(HopeError::Parse(format!(
                "manifest: file path '{}' escapes the run directory",
                f.path
            )));
        }
        if f.sha256.len() != 64 || !f.sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(HopeError::Parse(format!(
                "manifest: bad checksum for '{}'",
                f.path
            )));
        }
    }
    m.config.validate()?;
    Ok(m)
}

/// Files whose current checksum differs from the manifest in `dir`.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let m = parse_manifest(&std::fs::read_to_string(dir.join(MANIFEST_NAME))?)?;
    let mut bad = Vec::new();
    for f in &m.files {
        match std::fs::read(dir.join(&f.path)) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
            _ => bad.push(f.path.clone()),
        }
    }
    Ok(bad)
}

/// Output directory that records a checksum for every file written through it.
#[derive(Debug)]
pub struct OutputDir {
    pub root: PathBuf,
    pub files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.root.join(name), bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        let bytes = csv_bytes(header, rows)?;
        self.write(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| HopeError::Parse(format!("json: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest, which lists every file emitted so far.
    pub fn finish(&mut self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.files = self.files.clone();
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| HopeError::Parse(format!("json: {e}")))?;
        text.push('\n');
        std::fs::write(self.root.join(MANIFEST_NAME), text)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let v = 0.1 + 0.2;
        let s = fmt_f64(v);
        assert_eq!(s, "3.0000000000000004e-1");
        assert_eq!(s.parse::<f64>().unwrap(), v);
        assert_eq!(fmt_f64(-0.0), "-0.0000000000000000e0");
    }

    #[test]
    fn csv_rows_must_match_header() {
        let ok = csv_bytes(&["a", "b"], &[vec![1.5.into(), 2usize.into()]]).unwrap();
        assert_eq!(
            String::from_utf8(ok).unwrap(),
            "a,b\n1.5000000000000000e0,2\n"
        );
        assert!(csv_bytes(&["a"], &[vec![1.0.into(), 2.0.into()]]).is_err());
    }

    #[test]
    fn checksum_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_csv("t.csv", &["x"], &[vec![1.0.into()]]).unwrap();
        let config = Config::parse("[wave]\nk0 = 1.0\nh = 0.5\n").unwrap();
        out.finish(RunManifest {
            subcommand: "test".into(),
            code_version: "0".into(),
            config,
            seed: 0,
            threads: 1,
            grid: None,
            xnorms: vec![],
            growth: None,
            diagnostics: None,
            timings: vec![],
            files: vec![],
        })
        .unwrap();
        assert!(verify_manifest(dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("t.csv"), "x\n2\n").unwrap();
        assert_eq!(
            verify_manifest(dir.path()).unwrap(),
            vec!["t.csv".to_string()]
        );
    }

    #[test]
    fn manifest_rejects_escaping_paths() {
        let text = r#"{"subcommand":"s","code_version":"0","config":{"wave":{"k0":1.0,"h":0.5}},
            "seed":0,"threads":1,"files":[{"path":"../x","sha256":"00","bytes":0}]}"#;
        assert!(matches!(parse_manifest(text), Err(HopeError::Parse(_))));
    }
}
