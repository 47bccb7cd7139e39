//! CSV and JSON output with a digest manifest.
//!
//! Every experiment writes `<name>.csv` and `<name>.json` plus `manifest.json`.
//! The two data files depend only on the configuration and the seed; wall-clock
//! times and the thread count live in the manifest alone, so the recorded
//! SHA-256 digests are reproducible across machines and pool sizes.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::convergence::RateReport;
use crate::density::BoundReport;
use crate::error::{Error, Result};
use crate::estimates::EstimateReport;
use crate::parametrix::{HistogramReport, SeriesAccumulator};

/// Anything that renders as a CSV table.
pub trait Tabular {
    fn csv_header(&self) -> Vec<String>;
    fn csv_rows(&self) -> Vec<Vec<String>>;
}

/// A plain table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

impl Tabular for Table {
    fn csv_header(&self) -> Vec<String> {
        self.header.clone()
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows.clone()
    }
}

fn owned(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

impl Tabular for RateReport {
    fn csv_header(&self) -> Vec<String> {
        owned(&Self::CSV_HEADER)
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        RateReport::csv_rows(self)
    }
}

impl Tabular for EstimateReport {
    fn csv_header(&self) -> Vec<String> {
        owned(&Self::CSV_HEADER)
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        EstimateReport::csv_rows(self)
    }
}

impl Tabular for HistogramReport {
    fn csv_header(&self) -> Vec<String> {
        owned(&Self::CSV_HEADER)
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        HistogramReport::csv_rows(self)
    }
}

impl Tabular for SeriesAccumulator {
    fn csv_header(&self) -> Vec<String> {
        SeriesAccumulator::csv_header(self)
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        SeriesAccumulator::csv_rows(self)
    }
}

impl Tabular for BoundReport {
    fn csv_header(&self) -> Vec<String> {
        owned(&Self::CSV_HEADER)
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        vec![self.csv_row()]
    }
}

impl<T: Tabular + ?Sized> Tabular for &T {
    fn csv_header(&self) -> Vec<String> {
        (**self).csv_header()
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        (**self).csv_rows()
    }
}

impl<T: Tabular> Tabular for Vec<T> {
    fn csv_header(&self) -> Vec<String> {
        self.first().map(Tabular::csv_header).unwrap_or_default()
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.iter().flat_map(Tabular::csv_rows).collect()
    }
}

pub fn csv_string<T: Tabular + ?Sized>(table: &T) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(table.csv_header()).map_err(ser)?;
    for row in table.csv_rows() {
        w.write_record(row).map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
}

fn ser(e: csv::Error) -> Error {
    Error::Serialize(e.to_string())
}

/// JSON with a trailing newline. Struct fields keep declaration order and maps
/// are sorted, so equal values give equal bytes.
pub fn json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Serialize(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub master_seed: u64,
    pub threads: usize,
    pub config: serde_json::Value,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub pass: Option<bool>,
    pub outputs: Vec<OutputDigest>,
}

impl Manifest {
    /// Digests only, for comparing two runs.
    pub fn digests(&self) -> Vec<(String, String)> {
        self.outputs
            .iter()
            .map(|o| (o.file.clone(), o.sha256.clone()))
            .collect()
    }
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// What an experiment hands to [`write_outputs`].
pub struct RunRecord<'a, C: Serialize, R: Serialize + Tabular> {
    pub experiment: &'a str,
    pub master_seed: u64,
    pub config: &'a C,
    pub report: &'a R,
    pub pass: Option<bool>,
    pub started_unix: f64,
}

/// Writes `<experiment>.csv`, `<experiment>.json` and `manifest.json` into `dir`.
pub fn write_outputs<C, R>(dir: &Path, run: &RunRecord<'_, C, R>) -> Result<Manifest>
where
    C: Serialize,
    R: Serialize + Tabular,
{
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let files = [
        (format!("{}.csv", run.experiment), csv_string(run.report)?),
        (format!("{}.json", run.experiment), json_string(run.report)?),
    ];
    let mut outputs = Vec::new();
    for (name, body) in &files {
        write_file(&dir.join(name), body)?;
        outputs.push(OutputDigest {
            file: name.clone(),
            sha256: sha256_hex(body.as_bytes()),
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: run.experiment.into(),
        master_seed: run.master_seed,
        threads: rayon::current_num_threads(),
        config: serde_json::to_value(run.config).map_err(|e| Error::Serialize(e.to_string()))?,
        started_unix: run.started_unix,
        finished_unix: unix_now(),
        pass: run.pass,
        outputs,
    };
    write_file(&manifest_path(dir), &json_string(&manifest)?)?;
    Ok(manifest)
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = manifest_path(dir);
    let text = fs::read_to_string(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Serialize(format!("{}: {e}", path.display())))
}

/// Recomputes the digests of the files listed in a manifest.
pub fn verify_manifest(dir: &Path, manifest: &Manifest) -> Result<bool> {
    for o in &manifest.outputs {
        let path = dir.join(&o.file);
        let bytes = fs::read(&path).map_err(|source| Error::Io { path, source })?;
        if sha256_hex(&bytes) != o.sha256 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Cfg {
        seed: u64,
        alpha: f64,
    }

    fn sample() -> Table {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        t.push(vec!["2".into(), "z".into()]);
        t
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn csv_quotes_fields() {
        assert_eq!(csv_string(&sample()).unwrap(), "a,b\n1,\"x,y\"\n2,z\n");
    }

    #[test]
    fn outputs_round_trip_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Cfg { seed: 3, alpha: 1.5 };
        let table = sample();
        let run = RunRecord {
            experiment: "demo",
            master_seed: 3,
            config: &cfg,
            report: &table,
            pass: Some(true),
            started_unix: unix_now(),
        };
        let m = write_outputs(dir.path(), &run).unwrap();
        assert_eq!(m.outputs.len(), 2);
        let back = read_manifest(dir.path()).unwrap();
        assert_eq!(back.digests(), m.digests());
        assert!(verify_manifest(dir.path(), &back).unwrap());
        fs::write(dir.path().join("demo.csv"), "tampered").unwrap();
        assert!(!verify_manifest(dir.path(), &back).unwrap());
    }

    #[test]
    fn digests_ignore_timestamps() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = Cfg { seed: 1, alpha: 1.2 };
        let table = sample();
        let mk = |t| RunRecord {
            experiment: "demo",
            master_seed: 1,
            config: &cfg,
            report: &table,
            pass: None,
            started_unix: t,
        };
        let ma = write_outputs(a.path(), &mk(0.0)).unwrap();
        let mb = write_outputs(b.path(), &mk(1e9)).unwrap();
        assert_eq!(ma.digests(), mb.digests());
    }
}
