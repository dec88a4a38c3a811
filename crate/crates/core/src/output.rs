//! File formats: wave profiles and kernel tables as CSV, summaries as TOML.
//!
//! Numbers are written in shortest round-trip exponent form so that files
//! re-ingest losslessly and identical runs give identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::RegularityReport;
use crate::error::{Error, Result};
use crate::kernel::KernelRow;
use crate::steady::{BranchPoint, SteadyProblem};

pub const WAVE_HEADER: &str = "x,phi,mu_minus_phi";
pub const KERNEL_HEADER: &str = "x,K_alpha,singular,regular";
pub const KERNEL_CHECK_HEADER: &str = "x,quadrature,quadrature_error,fourier,fourier_error,difference,agree";

/// Shortest round-trip representation.
pub fn number(v: f64) -> String {
    format!("{v:e}")
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    let record = |w: &mut csv::Writer<Vec<u8>>, fields: &[String]| w.write_record(fields).expect("in-memory write");
    record(&mut writer, &header.split(',').map(String::from).collect::<Vec<_>>());
    for row in rows {
        record(&mut writer, &row);
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Wave profile at the grid nodes: `x, φ(x), μ^ε - φ(x)`.
pub fn wave_csv(point: &BranchPoint, problem: &SteadyProblem) -> Result<String> {
    let values = problem.values(&point.phi)?;
    Ok(csv(
        WAVE_HEADER,
        values
            .iter()
            .enumerate()
            .map(|(j, &v)| vec![number(problem.grid.node(j)), number(v), number(point.mu_eps - v)]),
    ))
}

pub fn kernel_csv(rows: &[KernelRow]) -> String {
    csv(
        KERNEL_HEADER,
        rows.iter()
            .map(|r| vec![number(r.x), number(r.value), number(r.singular), number(r.regular)]),
    )
}

/// One cross-check of the quadrature path against the Fourier sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub x: f64,
    pub quadrature: f64,
    pub quadrature_error: f64,
    pub fourier: f64,
    pub fourier_error: f64,
}

impl KernelCheck {
    pub fn difference(&self) -> f64 {
        (self.quadrature - self.fourier).abs()
    }

    pub fn agrees(&self) -> bool {
        self.difference() <= self.quadrature_error + self.fourier_error
    }
}

pub fn kernel_check_csv(checks: &[KernelCheck]) -> String {
    csv(
        KERNEL_CHECK_HEADER,
        checks.iter().map(|c| {
            vec![
                number(c.x),
                number(c.quadrature),
                number(c.quadrature_error),
                number(c.fourier),
                number(c.fourier_error),
                number(c.difference()),
                c.agrees().to_string(),
            ]
        }),
    )
}

/// Columns of a wave CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveTable {
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub mu_minus_phi: Vec<f64>,
}

impl WaveTable {
    /// `μ^ε` recorded in the file (mean of `φ + (μ^ε - φ)` over rows).
    pub fn mu_eps(&self) -> f64 {
        let n = self.phi.len() as f64;
        self.phi.iter().zip(&self.mu_minus_phi).map(|(a, b)| a + b).sum::<f64>() / n
    }
}

pub fn parse_wave_csv(text: &str, path: &Path) -> Result<WaveTable> {
    let parse_error = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_error(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != WAVE_HEADER {
        return Err(parse_error(1, format!("expected header `{WAVE_HEADER}`")));
    }
    let mut table = WaveTable {
        x: Vec::new(),
        phi: Vec::new(),
        mu_minus_phi: Vec::new(),
    };
    for row in reader.deserialize::<(f64, f64, f64)>() {
        let (x, phi, gap) = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        table.x.push(x);
        table.phi.push(phi);
        table.mu_minus_phi.push(gap);
    }
    if table.x.is_empty() {
        return Err(parse_error(2, "no data rows".into()));
    }
    Ok(table)
}

pub fn read_wave_csv(path: &Path) -> Result<WaveTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_wave_csv(&text, path)
}

/// Rebuilds a [`BranchPoint`] from a wave table on `problem`'s grid.
///
/// The speed is recovered from the recorded crest value through
/// `(n^ε)'(μ^ε) = c`.
pub fn wave_from_table(
    table: &WaveTable,
    problem: &SteadyProblem,
    base_mode: usize,
    path: &Path,
) -> Result<BranchPoint> {
    let n = problem.grid.n();
    if table.phi.len() != n {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("{} rows but the grid has {n} nodes", table.phi.len()),
        });
    }
    let mu = table.mu_eps();
    let c = problem.nonlinearity.d1(mu);
    let phi = problem.grid.analyze(&table.phi, problem.m)?;
    problem.branch_point(phi, c, base_mode)
}

/// Summary record of one branch point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub s: f64,
    pub c: f64,
    pub max_value: f64,
    pub mu_eps: f64,
    pub residual_norm: f64,
    pub monotone_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antisymmetry_defect: Option<f64>,
}

impl PointRecord {
    pub fn new(point: &BranchPoint, report: &RegularityReport) -> Self {
        PointRecord {
            s: point.s,
            c: point.c,
            max_value: point.max_value,
            mu_eps: point.mu_eps,
            residual_norm: point.residual_norm,
            monotone_ok: report.monotone_ok,
            antisymmetry_defect: report.antisymmetry_defect,
        }
    }
}

/// TOML text of a serialisable summary.
pub fn summary_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("summary serialises")
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Machine-readable error record for the command line.
pub fn error_record(error: &Error) -> String {
    let mut record = serde_json::json!({
        "status": "error",
        "kind": error.kind(),
        "exit_code": error.exit_code(),
        "message": error.to_string(),
    });
    if let Error::Config { field, .. } = error.root() {
        record["field"] = serde_json::Value::String(field.clone());
    }
    record.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{NonlinearityKind, NonlinearitySpec};
    use crate::spectral::{CosineSeries, SymbolSpec};

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0, std::f64::consts::PI] {
            assert_eq!(number(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn wave_csv_round_trips() {
        let problem = SteadyProblem::new(
            SymbolSpec::neg_order(0.5),
            NonlinearitySpec::new(NonlinearityKind::Abs, 2.5, 1e-2),
            64,
            16,
        )
        .unwrap();
        let mut phi = CosineSeries::mode(1, 0.2, 16);
        phi.set(2, 0.03);
        let point = problem.branch_point(phi, 1.1, 1).unwrap();
        let text = wave_csv(&point, &problem).unwrap();
        assert!(text.starts_with("x,phi,mu_minus_phi\n"));
        let path = Path::new("wave.csv");
        let table = parse_wave_csv(&text, path).unwrap();
        assert_eq!(table.x.len(), 64);
        let back = wave_from_table(&table, &problem, 1, path).unwrap();
        assert!((back.c - point.c).abs() < 1e-12 * point.c);
        for k in 1..=16 {
            assert!((back.phi.coeff(k) - point.phi.coeff(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn malformed_csv_is_a_parse_error() {
        let path = Path::new("bad.csv");
        assert!(matches!(parse_wave_csv("a,b\n", path), Err(Error::Parse { .. })));
        let err = parse_wave_csv("x,phi,mu_minus_phi\n1,2\n", path).unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(parse_wave_csv("x,phi,mu_minus_phi\n1,2,zz\n", path).is_err());
    }

    #[test]
    fn error_record_is_json() {
        let err = Error::config("p", "must satisfy p > 1");
        let v: serde_json::Value = serde_json::from_str(&error_record(&err)).unwrap();
        assert_eq!(v["kind"], "config");
        assert_eq!(v["exit_code"], 2);
        assert_eq!(v["field"], "p");
    }
}
