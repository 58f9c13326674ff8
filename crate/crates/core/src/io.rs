//! File formats: design CSV, per-run JSON records, summary CSV, reference
//! catalog JSON, and scenario lists. Writers replace their target atomically.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::bench::{ReferenceCatalog, ReplicateSummary, Scenario};
use crate::criteria::{CriterionKind, CriterionValue};
use crate::error::{Error, Result};
use crate::model::DesignMatrix;
use crate::pso::{RunResult, StopReason, Topology, RNG_ALGORITHM};

/// Values within this distance outside `[-1, 1]` are clamped rather than rejected.
pub const DESIGN_BOUND_SLACK: f64 = 1e-12;

/// Scientific notation with 17 significant digits (`inf` when not finite).
pub fn format_sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Six significant digits for human-readable tables.
pub fn format_sig6(v: f64) -> String {
    if !v.is_finite() {
        return format_sig17(v);
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

/// Parses a headerless design CSV: one point per line, `factors` values each.
pub fn parse_design_csv(text: &str, factors: usize, origin: &Path) -> Result<DesignMatrix> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(factors);
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("{:?} is not a number", field.trim())))?;
            if !(-1.0 - DESIGN_BOUND_SLACK..=1.0 + DESIGN_BOUND_SLACK).contains(&v) {
                return Err(err(line_no, format!("value {v} lies outside [-1, 1]")));
            }
            row.push(v.clamp(-1.0, 1.0));
        }
        if row.len() != factors {
            return Err(err(
                line_no,
                format!("expected {factors} values, found {}", row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            message: "design contains no points".into(),
        });
    }
    DesignMatrix::from_rows(&rows)
}

pub fn read_design_csv(path: &Path, factors: usize) -> Result<DesignMatrix> {
    parse_design_csv(&fs::read_to_string(path)?, factors, path)
}

pub fn design_to_csv(design: &DesignMatrix) -> String {
    let mut s = String::new();
    for row in design.to_rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

/// Writes `contents` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// One line of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    #[serde(rename = "K")]
    pub factors: usize,
    #[serde(rename = "N")]
    pub points: usize,
    pub criterion: CriterionKind,
    pub variant: String,
    pub swarm_size: usize,
    pub replicate: usize,
    pub seed: u64,
    pub rng: String,
    /// 17 significant digits; `inf` for singular designs.
    pub best_value: String,
    pub singular: bool,
    pub iterations: u64,
    pub function_evaluations: u64,
    pub wall_time_seconds: f64,
    pub stop_reason: StopReason,
    /// Row-major, `N` rows of `K` values.
    pub best_design: Vec<Vec<f64>>,
}

impl RunRecord {
    pub fn new(scenario: &Scenario, replicate: usize, run: &RunResult) -> Self {
        Self {
            scenario: scenario.fingerprint(),
            factors: scenario.factors,
            points: scenario.points,
            criterion: scenario.criterion,
            variant: scenario.variant.tag().to_string(),
            swarm_size: scenario.swarm_size,
            replicate,
            seed: run.seed,
            rng: RNG_ALGORITHM.to_string(),
            best_value: format_sig17(run.best_fitness.value()),
            singular: run.best_fitness.is_singular(),
            iterations: run.iterations,
            function_evaluations: run.function_evaluations,
            wall_time_seconds: run.wall_time_seconds,
            stop_reason: run.stop_reason,
            best_design: run.best_design.to_rows(),
        }
    }

    pub fn variant(&self) -> Result<Topology> {
        Topology::from_tag(&self.variant)
    }

    pub fn to_run_result(&self) -> Result<RunResult> {
        let best_fitness = if self.singular {
            CriterionValue::singular(self.criterion)
        } else {
            let v: f64 = self.best_value.parse().map_err(|_| {
                Error::InvalidCriterionValue(format!(
                    "unparseable best_value {:?}",
                    self.best_value
                ))
            })?;
            CriterionValue::finite(self.criterion, v)
        };
        Ok(RunResult {
            best_design: DesignMatrix::from_rows(&self.best_design)?,
            best_fitness,
            iterations: self.iterations,
            function_evaluations: self.function_evaluations,
            wall_time_seconds: self.wall_time_seconds,
            stop_reason: self.stop_reason,
            seed: self.seed,
        })
    }
}

pub fn records_to_jsonl(records: &[RunRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<RunRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

pub const SUMMARY_HEADER: &str = "scenario,K,N,criterion,variant,swarm_size,replicates,root_seed,\
reference_source,reference_value,best_value,median_value,success_probability,\
prop_highly_efficient,median_function_evaluations,median_wall_time_seconds";

pub fn summary_row(s: &ReplicateSummary) -> String {
    let sc = &s.scenario;
    [
        sc.fingerprint(),
        sc.factors.to_string(),
        sc.points.to_string(),
        sc.criterion.to_string(),
        sc.variant.tag().to_string(),
        sc.swarm_size.to_string(),
        sc.replicates.to_string(),
        sc.root_seed.to_string(),
        s.reference_source.as_str().to_string(),
        format_sig17(s.reference_value),
        format_sig17(s.best_value),
        format_sig17(s.median_value),
        format_sig17(s.success_probability),
        format_sig17(s.prop_highly_efficient),
        format_sig17(s.median_function_evaluations),
        format_sig17(s.median_wall_time_seconds),
    ]
    .join(",")
}

pub fn summaries_to_csv(summaries: &[ReplicateSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in summaries {
        out.push_str(&summary_row(s));
        out.push('\n');
    }
    out
}

pub fn read_catalog(path: &Path) -> Result<ReferenceCatalog> {
    let text = fs::read_to_string(path)?;
    let cat: ReferenceCatalog = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cat.validate()?;
    Ok(cat)
}

/// Entry of a scenarios file: a JSON array of `{"factors": K, "points": N}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSize {
    pub factors: usize,
    pub points: usize,
}

pub fn read_scenarios(path: &Path) -> Result<Vec<DesignSize>> {
    let text = fs::read_to_string(path)?;
    let sizes: Vec<DesignSize> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if sizes.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: "no scenarios listed".into(),
        });
    }
    for s in &sizes {
        if s.factors == 0 || s.points == 0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                message: format!("invalid scenario {s:?}: K and N must be at least 1"),
            });
        }
    }
    Ok(sizes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("design.csv")
    }

    #[test]
    fn parses_and_clamps() {
        let d = parse_design_csv("-1,0.5\n\n1.0000000000001, -0.25\n", 2, p()).unwrap();
        assert_eq!(d.to_rows(), vec![vec![-1.0, 0.5], vec![1.0, -0.25]]);
    }

    #[test]
    fn rejects_bad_designs() {
        assert!(parse_design_csv("1.01\n", 1, p()).is_err());
        assert!(parse_design_csv("0.5,0.5\n", 1, p()).is_err());
        assert!(parse_design_csv("abc\n", 1, p()).is_err());
        assert!(parse_design_csv("\n", 1, p()).is_err());
        assert!(parse_design_csv("nan\n", 1, p()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = DesignMatrix::from_rows(&[vec![0.1, -1.0 / 3.0], vec![1.0, 0.7]]).unwrap();
        let back = parse_design_csv(&design_to_csv(&d), 2, p()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn number_formats() {
        assert_eq!(format_sig17(6.75), "6.7500000000000000e0");
        assert_eq!(format_sig17(f64::INFINITY), "inf");
        assert_eq!("inf".parse::<f64>().unwrap(), f64::INFINITY);
        let x = 0.1 + 0.2;
        assert_eq!(format_sig17(x).parse::<f64>().unwrap(), x);
        assert_eq!(format_sig6(6.75), "6.75");
        assert_eq!(format_sig6(2.4000000000000004), "2.4");
        assert_eq!(format_sig6(125.99210498948732), "125.992");
        assert_eq!(format_sig6(1234567.0), "1.23457e6");
        assert_eq!(format_sig6(0.0), "0");
    }

    #[test]
    fn summary_header_matches_row_width() {
        assert_eq!(SUMMARY_HEADER.split(',').count(), 16);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
