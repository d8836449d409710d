//! CSV persistence for designs and responses, plus a JSON metadata sidecar.
//!
//! Design files are headerless CSV with one row per observation; response
//! files are a single headerless column. The sidecar records provenance that
//! the CSV itself cannot carry (seed, noise level, normalization state).

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::problem::RegressionProblem;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::Path;

/// Sidecar metadata stored next to the CSV pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemMetadata {
    pub n: usize,
    pub p: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    /// Whether the stored design satisfies the `|X_j|² = n` convention.
    pub normalized: bool,
}

impl ProblemMetadata {
    pub fn describe(problem: &RegressionProblem, seed: Option<u64>) -> Self {
        ProblemMetadata {
            n: problem.n(),
            p: problem.p(),
            seed,
            noise_sigma: problem.noise_sigma(),
            normalized: problem.is_normalized(),
        }
    }
}

pub fn write_design(path: &Path, design: &Mat) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(File::create(path)?));
    for i in 0..design.rows() {
        let row: Vec<String> = (0..design.cols())
            .map(|j| format_value(design.get(i, j)))
            .collect();
        writer.write_record(&row)?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_design(path: &Path) -> Result<Mat> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(BufReader::new(File::open(path)?));
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row: Vec<f64> = record
            .iter()
            .map(parse_value)
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::InvalidArgs(format!(
                    "ragged CSV: row {} has {} fields, expected {}",
                    rows.len(),
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgs("design CSV is empty".into()));
    }
    let (n, p) = (rows.len(), rows[0].len());
    Ok(Mat::from_fn(n, p, |i, j| rows[i][j]))
}

pub fn write_response(path: &Path, response: &[f64]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    for y in response {
        writeln!(file, "{}", format_value(*y))?;
    }
    file.flush()?;
    Ok(())
}

pub fn read_response(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(BufReader::new(File::open(path)?));
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 1 {
            return Err(Error::InvalidArgs(format!(
                "response CSV row {} has {} fields, expected 1",
                values.len(),
                record.len()
            )));
        }
        values.push(parse_value(&record[0])?);
    }
    if values.is_empty() {
        return Err(Error::InvalidArgs("response CSV is empty".into()));
    }
    Ok(values)
}

pub fn write_metadata(path: &Path, metadata: &ProblemMetadata) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, metadata)?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

pub fn read_metadata(path: &Path) -> Result<ProblemMetadata> {
    let file = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

/// Writes design.csv, response.csv, and meta.json under `dir`.
pub fn write_problem(dir: &Path, problem: &RegressionProblem, seed: Option<u64>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_design(&dir.join("design.csv"), problem.design())?;
    write_response(&dir.join("response.csv"), problem.response())?;
    write_metadata(
        &dir.join("meta.json"),
        &ProblemMetadata::describe(problem, seed),
    )?;
    Ok(())
}

/// Reads a problem written by [`write_problem`], checking CSV shapes against
/// the sidecar.
pub fn read_problem(dir: &Path) -> Result<(RegressionProblem, ProblemMetadata)> {
    let design = read_design(&dir.join("design.csv"))?;
    let response = read_response(&dir.join("response.csv"))?;
    let metadata = read_metadata(&dir.join("meta.json"))?;
    if design.rows() != metadata.n || design.cols() != metadata.p {
        return Err(Error::InvalidArgs(format!(
            "design is {}x{} but sidecar says {}x{}",
            design.rows(),
            design.cols(),
            metadata.n,
            metadata.p
        )));
    }
    let problem = RegressionProblem::new(design, response, metadata.noise_sigma)?;
    Ok((problem, metadata))
}

fn format_value(v: f64) -> String {
    // The Display impl picks the shortest decimal that round-trips.
    let mut buf = format!("{v}");
    if !buf.contains(['.', 'e', 'n', 'i']) {
        buf.push_str(".0");
    }
    buf
}

fn parse_value(field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::InvalidArgs(format!("bad numeric field {field:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{simulate, DesignKind, SyntheticSpec};
    use tempfile::tempdir;

    #[test]
    fn round_trip_problem() {
        let spec = SyntheticSpec {
            n: 25,
            p: 6,
            s: 2,
            sigma: 0.4,
            design_kind: DesignKind::IidGaussian,
            seed: 3,
        };
        let (problem, _) = simulate(&spec).unwrap();
        let dir = tempdir().unwrap();
        write_problem(dir.path(), &problem, Some(spec.seed)).unwrap();
        let (back, meta) = read_problem(dir.path()).unwrap();
        assert_eq!(meta.n, 25);
        assert_eq!(meta.p, 6);
        assert_eq!(meta.seed, Some(3));
        assert!(meta.normalized);
        assert_eq!(back.design(), problem.design());
        assert_eq!(back.response(), problem.response());
        assert_eq!(back.noise_sigma(), Some(0.4));
    }

    #[test]
    fn exact_float_round_trip() {
        // Values with no short decimal representation survive the format.
        let vals = vec![1.0 / 3.0, 2.0f64.sqrt(), -1e-17, 0.1 + 0.2];
        let dir = tempdir().unwrap();
        let path = dir.path().join("y.csv");
        write_response(&path, &vals).unwrap();
        assert_eq!(read_response(&path).unwrap(), vals);
    }

    #[test]
    fn ragged_design_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        assert!(read_design(&path).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let spec = SyntheticSpec {
            n: 10,
            p: 3,
            s: 1,
            sigma: 0.0,
            design_kind: DesignKind::IidGaussian,
            seed: 1,
        };
        let (problem, _) = simulate(&spec).unwrap();
        let dir = tempdir().unwrap();
        write_problem(dir.path(), &problem, None).unwrap();
        let mut meta = read_metadata(&dir.path().join("meta.json")).unwrap();
        meta.p = 4;
        write_metadata(&dir.path().join("meta.json"), &meta).unwrap();
        assert!(read_problem(dir.path()).is_err());
    }
}
