//! On-disk formats: dataset CSV with a JSON metadata sidecar, and the
//! fitted-model JSON document.
//!
//! Floating-point values in CSV files are printed with 17 significant
//! digits so re-reading reproduces the exact `f64` bits; JSON goes through
//! serde_json's shortest-roundtrip encoding, which is also exact.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::model::{Dataset, ModelConstants};
use crate::pipeline::{FitMode, FitResult};
use crate::{Error, Result};

/// Current model-file schema version.
pub const MODEL_VERSION: u32 = 1;

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `x1,...,xd,y` rows.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let (n, d) = data.x.dim();
    let mut out = String::new();
    for j in 0..d {
        let _ = write!(out, "x{},", j + 1);
    }
    out.push_str("y\n");
    for i in 0..n {
        for j in 0..d {
            out.push_str(&fmt_f64(data.x[[i, j]]));
            out.push(',');
        }
        out.push_str(&fmt_f64(data.y[i]));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a dataset CSV; parse failures carry the 1-based line number.
pub fn read_dataset_csv(path: &Path) -> Result<(Array2<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("line 1: empty dataset file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[cols.len() - 1].trim() != "y" {
        return Err(Error::Parse("line 1: header must be x1,...,xd,y".into()));
    }
    let d = cols.len() - 1;
    for (j, c) in cols[..d].iter().enumerate() {
        let expected = format!("x{}", j + 1);
        if c.trim() != expected {
            return Err(Error::Parse(format!(
                "line 1: expected column {expected}, found {c}"
            )));
        }
    }
    let mut rows: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    let mut n = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 1 {
            return Err(Error::Parse(format!(
                "line {}: expected {} fields, found {}",
                idx + 1,
                d + 1,
                fields.len()
            )));
        }
        for (col, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Parse(format!("line {}: invalid number in field {}", idx + 1, col + 1))
            })?;
            if col < d {
                rows.push(v);
            } else {
                y.push(v);
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::Parse("line 2: dataset has no rows".into()));
    }
    let x = Array2::from_shape_vec((n, d), rows)
        .map_err(|e| Error::Parse(format!("shape error: {e}")))?;
    Ok((x, y))
}

/// Dumps the sphere points of a near-net, one row of `k` coordinates per
/// point.
pub fn write_net_csv(path: &Path, net: &crate::net::NearNet) -> Result<()> {
    let mut out = String::new();
    for j in 0..net.k() {
        if j > 0 {
            out.push(',');
        }
        let _ = write!(out, "u{}", j + 1);
    }
    out.push('\n');
    for i in 0..net.len() {
        for (j, v) in net.vector(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Sidecar document describing how a dataset was generated.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub d: usize,
    pub k: usize,
    #[serde(rename = "sStar")]
    pub s_star: usize,
    pub r: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub b: f64,
    pub eta: f64,
    pub seed: u64,
}

impl DatasetMeta {
    pub fn from_constants(constants: &ModelConstants, seed: u64) -> Self {
        DatasetMeta {
            d: constants.d,
            k: constants.k,
            s_star: constants.s_star,
            r: constants.r,
            c: constants.c,
            b: constants.b,
            eta: constants.eta,
            seed,
        }
    }

    pub fn to_constants(self) -> ModelConstants {
        ModelConstants::new(self.d, self.k, self.s_star, self.r, self.c, self.b, self.eta)
    }
}

/// Conventional sidecar path: `<dataset>.meta.json`.
pub fn sidecar_path(dataset: &Path) -> std::path::PathBuf {
    let mut name = dataset.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    dataset.with_file_name(name)
}

pub fn write_meta(path: &Path, meta: &DatasetMeta) -> Result<()> {
    let text = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Parse(format!("serialize metadata: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<DatasetMeta> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("metadata: {e}")))
}

/// Seeds recorded in the model file.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SeedRecord {
    pub config: u64,
    pub net: u64,
}

/// Serialized fitted model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub mode: FitMode,
    pub d: usize,
    pub k: usize,
    /// Row-major `d × k`.
    #[serde(rename = "Qn")]
    pub qn: Vec<f64>,
    /// Row-major `k × k`.
    #[serde(rename = "Rbar")]
    pub rbar: Vec<f64>,
    #[serde(rename = "In")]
    pub support: Vec<usize>,
    /// Pairs of (projected point, fitted value).
    pub anchors: Vec<(Vec<f64>, f64)>,
    pub constants: ModelConstants,
    pub seeds: SeedRecord,
    #[serde(rename = "empiricalLoss")]
    pub empirical_loss: f64,
    #[serde(rename = "sdpConverged")]
    pub sdp_converged: bool,
    pub tau: f64,
    pub lambda: f64,
}

impl ModelFile {
    pub fn from_fit(fit: &FitResult, constants: &ModelConstants, seeds: SeedRecord) -> Self {
        let (d, k) = fit.qn.dim();
        ModelFile {
            version: MODEL_VERSION,
            mode: fit.mode,
            d,
            k,
            qn: fit.qn.iter().copied().collect(),
            rbar: fit.rbar.iter().copied().collect(),
            support: fit.support.clone(),
            anchors: fit.anchors.clone(),
            constants: *constants,
            seeds,
            empirical_loss: fit.empirical_loss,
            sdp_converged: fit.sdp_converged,
            tau: fit.tau,
            lambda: fit.lambda,
        }
    }

    pub fn to_fit(&self) -> Result<FitResult> {
        let qn = Array2::from_shape_vec((self.d, self.k), self.qn.clone())
            .map_err(|e| Error::Parse(format!("Qn shape: {e}")))?;
        let rbar = Array2::from_shape_vec((self.k, self.k), self.rbar.clone())
            .map_err(|e| Error::Parse(format!("Rbar shape: {e}")))?;
        Ok(FitResult {
            qn,
            rbar,
            support: self.support.clone(),
            anchors: self.anchors.clone(),
            mode: self.mode,
            empirical_loss: self.empirical_loss,
            sdp_converged: self.sdp_converged,
            tau: self.tau,
            lambda: self.lambda,
            b: self.constants.b,
        })
    }
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<()> {
    let text = serde_json::to_string_pretty(model)
        .map_err(|e| Error::Parse(format!("serialize model: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)?;
    let model: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("model file: {e}")))?;
    if model.version != MODEL_VERSION {
        return Err(Error::Parse(format!(
            "model file version {} does not match supported version {MODEL_VERSION}",
            model.version
        )));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_ground_truth, sample_dataset};

    #[test]
    fn dataset_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let constants = ModelConstants::desk_default(4, 1, 2);
        let gt = make_ground_truth(&constants, 5).unwrap();
        let data = sample_dataset(&gt, 20, 9).unwrap();
        let path = dir.path().join("data.csv");
        write_dataset_csv(&path, &data).unwrap();
        let (x, y) = read_dataset_csv(&path).unwrap();
        assert_eq!(x, data.x);
        assert_eq!(y, data.y);
    }

    #[test]
    fn dataset_csv_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x1,x2,y\n1.0,2.0,0.5\n1.0,oops,0.5\n").unwrap();
        let err = read_dataset_csv(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        std::fs::write(&path, "x1,x2,y\n1.0,2.0\n").unwrap();
        let err = read_dataset_csv(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn meta_roundtrip_and_unknown_fields() {
        let dir = tempfile::tempdir().unwrap();
        let constants = ModelConstants::desk_default(6, 2, 3);
        let meta = DatasetMeta::from_constants(&constants, 42);
        let path = dir.path().join("data.csv.meta.json");
        write_meta(&path, &meta).unwrap();
        assert_eq!(read_meta(&path).unwrap(), meta);

        std::fs::write(&path, r#"{"d":2,"k":1,"sStar":1,"r":1.0,"C":1.0,"b":1.0,"eta":0.0,"seed":1,"bogus":3}"#)
            .unwrap();
        assert!(read_meta(&path).is_err(), "unknown keys are rejected");
    }

    #[test]
    fn model_file_rejects_version_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let constants = ModelConstants::desk_default(3, 1, 1);
        let model = ModelFile {
            version: 99,
            mode: FitMode::Step,
            d: 3,
            k: 1,
            qn: vec![1.0, 0.0, 0.0],
            rbar: vec![1.0],
            support: vec![0],
            anchors: vec![(vec![0.0], 0.5)],
            constants,
            seeds: SeedRecord { config: 1, net: 2 },
            empirical_loss: 0.0,
            sdp_converged: true,
            tau: 1.0,
            lambda: 0.1,
        };
        let path = dir.path().join("model.json");
        let text = serde_json::to_string(&model).unwrap();
        std::fs::write(&path, text).unwrap();
        let err = read_model(&path).unwrap_err();
        assert!(err.to_string().contains("version"));
    }

    #[test]
    fn sidecar_path_appends_suffix() {
        let p = sidecar_path(Path::new("/tmp/run/data.csv"));
        assert_eq!(p, Path::new("/tmp/run/data.csv.meta.json"));
    }
}
