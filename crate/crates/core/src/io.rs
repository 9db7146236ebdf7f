//! Dataset ingestion, configuration files and report serialization.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;

use crate::baselines::{BaselineResult, Method};
use crate::error::{PchError, Result};
use crate::experiment::{ExperimentConfig, ExperimentReport};
use crate::inference::{Branch, ConfidenceInterval, InferenceResult};
use crate::oracle::{Extended, OracleIdentification, PopulationSpec};
use crate::pch::PchPair;
use crate::stats::Dataset;

pub const NA: &str = "NA";
pub const INF: &str = "INF";

/// Which columns hold X, Y and the instruments. `None` means the default:
/// first column X, second Y, all remaining columns Z.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnRoles {
    pub x: Option<String>,
    pub y: Option<String>,
    pub z: Option<Vec<String>>,
}

/// Uncentered columns as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DMatrix<f64>,
    pub z_names: Vec<String>,
}

fn column_index(headers: &[String], name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| PchError::MissingColumn(name.to_string()))
}

/// Reads a comma-separated file with a header row. Row numbers in errors are
/// file line numbers, the header being line 1.
pub fn read_table(path: &Path, roles: &ColumnRoles) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.len() < 3 {
        return Err(PchError::Dimension(format!(
            "need at least three columns (X, Y and one instrument), found {}",
            headers.len()
        )));
    }
    let xi = match &roles.x {
        Some(name) => column_index(&headers, name)?,
        None => 0,
    };
    let yi = match &roles.y {
        Some(name) => column_index(&headers, name)?,
        None => 1,
    };
    if xi == yi {
        return Err(PchError::Config("X and Y must be different columns".into()));
    }
    let zi: Vec<usize> = match &roles.z {
        Some(names) => names
            .iter()
            .map(|n| column_index(&headers, n))
            .collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&j| j != xi && j != yi).collect(),
    };
    if zi.is_empty() {
        return Err(PchError::Dimension("no instrument columns".into()));
    }
    if let Some(j) = zi.iter().find(|&&j| j == xi || j == yi) {
        return Err(PchError::Config(format!(
            "column '{}' cannot be both a trait and an instrument",
            headers[*j]
        )));
    }

    let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let cell = |j: usize| -> Result<f64> {
            let raw = rec.get(j).unwrap_or("");
            let parsed = raw.parse::<f64>().ok().filter(|v| v.is_finite());
            parsed.ok_or_else(|| PchError::Parse {
                row: line,
                column: headers[j].clone(),
                message: if raw.is_empty() {
                    "empty cell".into()
                } else {
                    format!("'{raw}' is not a finite number")
                },
            })
        };
        x.push(cell(xi)?);
        y.push(cell(yi)?);
        for &j in &zi {
            z.push(cell(j)?);
        }
    }
    let n = x.len();
    Ok(RawTable {
        x: DVector::from_vec(x),
        y: DVector::from_vec(y),
        z: DMatrix::from_row_slice(n, zi.len(), &z),
        z_names: zi.iter().map(|&j| headers[j].clone()).collect(),
    })
}

pub fn load_dataset(path: &Path, roles: &ColumnRoles) -> Result<Dataset> {
    let t = read_table(path, roles)?;
    Dataset::new(t.x, t.y, t.z)
}

/// Writes `X,Y,Z1..Zp` with shortest round-trip float formatting.
pub fn write_dataset(
    path: &Path,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DMatrix<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["X".to_string(), "Y".to_string()];
    header.extend((1..=z.ncols()).map(|j| format!("Z{j}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..x.len() {
        row.clear();
        row.push(x[i].to_string());
        row.push(y[i].to_string());
        row.extend(z.row(i).iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| NA.to_string(), |v| v.to_string())
}

fn parse_opt<T: FromStr>(s: &str, column: &str, row: usize) -> Result<Option<T>> {
    if s == NA {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| PchError::Parse {
        row,
        column: column.to_string(),
        message: format!("cannot parse '{s}'"),
    })
}

/// One row of analysis output.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRecord {
    pub method: Method,
    pub h_hat: i8,
    pub beta_xy: Option<f64>,
    pub ci_xy: (Option<f64>, Option<f64>),
    pub beta_yx: Option<f64>,
    pub ci_yx: (Option<f64>, Option<f64>),
    pub level: f64,
    pub branch: Option<Branch>,
    /// `|V̂_{X→Y,I}|`, `|V̂_{Y→X,II}|`.
    pub valid_xy: Option<usize>,
    pub valid_yx: Option<usize>,
    pub mode_unique_i: Option<bool>,
    pub mode_unique_ii: Option<bool>,
    pub ch_passed_i: Option<bool>,
    pub ch_passed_ii: Option<bool>,
    pub undetectable: Option<bool>,
}

pub const REPORT_COLUMNS: [&str; 17] = [
    "method",
    "h_hat",
    "beta_xy",
    "ci_xy_lower",
    "ci_xy_upper",
    "beta_yx",
    "ci_yx_lower",
    "ci_yx_upper",
    "level",
    "branch",
    "valid_xy",
    "valid_yx",
    "mode_unique_i",
    "mode_unique_ii",
    "ch_passed_i",
    "ch_passed_ii",
    "undetectable",
];

fn bounds(ci: &ConfidenceInterval) -> (Option<f64>, Option<f64>) {
    (ci.lower(), ci.upper())
}

impl ReportRecord {
    pub fn from_pch(result: &InferenceResult, outputs: &PchPair) -> Self {
        ReportRecord {
            method: Method::Pch,
            h_hat: result.h_hat,
            beta_xy: result.beta_xy(),
            ci_xy: bounds(&result.ci_xy),
            beta_yx: result.beta_yx(),
            ci_yx: bounds(&result.ci_yx),
            level: result.ci_xy.level,
            branch: Some(result.branch),
            valid_xy: Some(result.valid_set_sizes.0),
            valid_yx: Some(result.valid_set_sizes.1),
            mode_unique_i: Some(outputs.xy.diagnostics.mode_unique),
            mode_unique_ii: Some(outputs.yx.diagnostics.mode_unique),
            ch_passed_i: outputs.xy.diagnostics.ch_passed,
            ch_passed_ii: outputs.yx.diagnostics.ch_passed,
            undetectable: Some(result.undetectable),
        }
    }

    pub fn from_baseline(b: &BaselineResult) -> Self {
        ReportRecord {
            method: b.method,
            h_hat: b.h_call,
            beta_xy: b.xy.map(|e| e.beta),
            ci_xy: bounds(&b.ci_xy),
            beta_yx: b.yx.map(|e| e.beta),
            ci_yx: bounds(&b.ci_yx),
            level: b.ci_xy.level,
            branch: None,
            valid_xy: None,
            valid_yx: None,
            mode_unique_i: None,
            mode_unique_ii: None,
            ch_passed_i: None,
            ch_passed_ii: None,
            undetectable: None,
        }
    }

    pub fn tsv_header() -> String {
        REPORT_COLUMNS.join("\t")
    }

    pub fn to_tsv(&self) -> String {
        [
            self.method.to_string(),
            self.h_hat.to_string(),
            fmt_opt(self.beta_xy),
            fmt_opt(self.ci_xy.0),
            fmt_opt(self.ci_xy.1),
            fmt_opt(self.beta_yx),
            fmt_opt(self.ci_yx.0),
            fmt_opt(self.ci_yx.1),
            self.level.to_string(),
            fmt_opt(self.branch),
            fmt_opt(self.valid_xy),
            fmt_opt(self.valid_yx),
            fmt_opt(self.mode_unique_i),
            fmt_opt(self.mode_unique_ii),
            fmt_opt(self.ch_passed_i),
            fmt_opt(self.ch_passed_ii),
            fmt_opt(self.undetectable),
        ]
        .join("\t")
    }

    /// Parses a row produced by [`ReportRecord::to_tsv`]; `row` is used in
    /// error messages only.
    pub fn from_tsv(line: &str, row: usize) -> Result<Self> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != REPORT_COLUMNS.len() {
            return Err(PchError::Parse {
                row,
                column: String::new(),
                message: format!(
                    "expected {} fields, found {}",
                    REPORT_COLUMNS.len(),
                    f.len()
                ),
            });
        }
        let req = |i: usize| -> Result<String> {
            if f[i] == NA {
                Err(PchError::Parse {
                    row,
                    column: REPORT_COLUMNS[i].into(),
                    message: "value is required".into(),
                })
            } else {
                Ok(f[i].to_string())
            }
        };
        let c = |i: usize| REPORT_COLUMNS[i];
        Ok(ReportRecord {
            method: req(0)?.parse()?,
            h_hat: parse_opt(&req(1)?, c(1), row)?.unwrap_or_default(),
            beta_xy: parse_opt(f[2], c(2), row)?,
            ci_xy: (parse_opt(f[3], c(3), row)?, parse_opt(f[4], c(4), row)?),
            beta_yx: parse_opt(f[5], c(5), row)?,
            ci_yx: (parse_opt(f[6], c(6), row)?, parse_opt(f[7], c(7), row)?),
            level: parse_opt(&req(8)?, c(8), row)?.unwrap_or_default(),
            branch: parse_opt(f[9], c(9), row)?,
            valid_xy: parse_opt(f[10], c(10), row)?,
            valid_yx: parse_opt(f[11], c(11), row)?,
            mode_unique_i: parse_opt(f[12], c(12), row)?,
            mode_unique_ii: parse_opt(f[13], c(13), row)?,
            ch_passed_i: parse_opt(f[14], c(14), row)?,
            ch_passed_ii: parse_opt(f[15], c(15), row)?,
            undetectable: parse_opt(f[16], c(16), row)?,
        })
    }
}

pub fn records_to_tsv(records: &[ReportRecord]) -> String {
    let mut s = ReportRecord::tsv_header();
    s.push('\n');
    for r in records {
        s.push_str(&r.to_tsv());
        s.push('\n');
    }
    s
}

pub fn records_from_tsv(text: &str) -> Result<Vec<ReportRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == ReportRecord::tsv_header() => {}
        _ => {
            return Err(PchError::Parse {
                row: 1,
                column: String::new(),
                message: "missing or unexpected header".into(),
            })
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| ReportRecord::from_tsv(l, i + 2))
        .collect()
}

fn fmt_interval(ci: (Option<f64>, Option<f64>)) -> String {
    match ci {
        (Some(lo), Some(hi)) => format!("({lo:.3}, {hi:.3})"),
        _ => NA.to_string(),
    }
}

fn fmt_beta(b: Option<f64>) -> String {
    b.map_or_else(|| NA.to_string(), |b| format!("{b:.3}"))
}

/// Fixed-width table with the columns
/// `Method  H  beta_xy  CI_xy  beta_yx  CI_yx`.
pub fn human_table(records: &[ReportRecord]) -> String {
    let pct = records.first().map_or(95.0, |r| r.level * 100.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<7}{:>4}  {:>9}  {:<22}{:>9}  {:<22}",
        "Method",
        "H",
        "beta_xy",
        format!("CI_xy({pct:.0}%)"),
        "beta_yx",
        format!("CI_yx({pct:.0}%)")
    );
    for r in records {
        let _ = writeln!(
            s,
            "{:<7}{:>4}  {:>9}  {:<22}{:>9}  {:<22}",
            r.method.as_str(),
            r.h_hat,
            fmt_beta(r.beta_xy),
            fmt_interval(r.ci_xy),
            fmt_beta(r.beta_yx),
            fmt_interval(r.ci_yx)
        );
    }
    s
}

fn fmt_extended(e: Extended) -> String {
    match e {
        Extended::Finite(v) => v.to_string(),
        Extended::Infinite => INF.to_string(),
    }
}

pub fn parse_extended(s: &str) -> Result<Extended> {
    if s == INF {
        return Ok(Extended::Infinite);
    }
    s.parse()
        .map(Extended::Finite)
        .map_err(|_| PchError::Parse {
            row: 0,
            column: String::new(),
            message: format!("'{s}' is neither a number nor {INF}"),
        })
}

fn fmt_set(set: &[usize]) -> String {
    if set.is_empty() {
        return "-".into();
    }
    set.iter()
        .map(|j| (j + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// TSV rendering of the population identification. Instrument indices are
/// 1-based.
pub fn oracle_tsv(id: &OracleIdentification) -> String {
    let mut s = String::from("side\tbeta_fwd\tbeta_rev\tvalid_set\n");
    let _ = writeln!(
        s,
        "I\t{}\t{}\t{}",
        fmt_extended(id.side_i.beta_fwd),
        fmt_extended(id.side_i.beta_rev),
        fmt_set(&id.side_i.valid_set)
    );
    let _ = writeln!(
        s,
        "II\t{}\t{}\t{}",
        fmt_extended(id.side_ii.beta_fwd),
        fmt_extended(id.side_ii.beta_rev),
        fmt_set(&id.side_ii.valid_set)
    );
    let _ = writeln!(
        s,
        "selected\t{}\t{}\t-",
        fmt_extended(id.selected.0),
        fmt_extended(id.selected.1)
    );
    let _ = writeln!(s, "direction\t{}\tNA\t-", id.direction);
    s
}

/// Rejects keys outside `allowed`, naming all of them at once.
fn check_keys(table: &toml::Table, allowed: &[&str], section: &str) -> Result<()> {
    let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
    let unknown: Vec<String> = table
        .keys()
        .filter(|k| !allowed.contains(k.as_str()))
        .map(|k| {
            if section.is_empty() {
                k.clone()
            } else {
                format!("{section}.{k}")
            }
        })
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(PchError::Config(format!(
            "unknown keys: {}",
            unknown.join(", ")
        )))
    }
}

fn from_table<T: DeserializeOwned>(table: toml::Table) -> Result<T> {
    T::deserialize(toml::Value::Table(table)).map_err(|e| PchError::Config(e.to_string()))
}

const SIM_KEYS: [&str; 11] = [
    "n",
    "p",
    "s_x",
    "s_xy",
    "s_y",
    "beta_xy",
    "beta_yx",
    "pi_strength_x",
    "pi_strength_y",
    "seed",
    "replications",
];
const EXPERIMENT_KEYS: [&str; 6] = ["base", "cases", "grid", "methods", "alpha", "sign_prior"];
const SPEC_KEYS: [&str; 7] = [
    "beta_xy",
    "beta_yx",
    "pi_x",
    "pi_y",
    "sigma",
    "zeta_moment",
    "eta_moment",
];

pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| PchError::Config(e.to_string()))?;
    check_keys(&table, &EXPERIMENT_KEYS, "")?;
    if let Some(base) = table.get("base") {
        let base = base
            .as_table()
            .ok_or_else(|| PchError::Config("'base' must be a table".into()))?;
        check_keys(base, &SIM_KEYS, "base")?;
    }
    let cfg: ExperimentConfig = from_table(table)?;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(PchError::Config(format!(
            "alpha must lie in (0, 1), got {}",
            cfg.alpha
        )));
    }
    if cfg.methods.is_empty() || cfg.cases.is_empty() || cfg.grid.is_empty() {
        return Err(PchError::Config(
            "methods, cases and grid must be nonempty".into(),
        ));
    }
    cfg.base.validate()?;
    Ok(cfg)
}

pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig> {
    parse_experiment_config(&fs::read_to_string(path)?)
}

pub fn parse_population_spec(text: &str) -> Result<PopulationSpec> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| PchError::Config(e.to_string()))?;
    check_keys(&table, &SPEC_KEYS, "")?;
    let spec: PopulationSpec = from_table(table)?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_population_spec(path: &Path) -> Result<PopulationSpec> {
    parse_population_spec(&fs::read_to_string(path)?)
}

/// One row per (case, grid point, method).
pub fn experiment_tsv(report: &ExperimentReport) -> String {
    let mut s = String::from(
        "case\tbeta\tbeta_xy\tbeta_yx\th_true\tmethod\treps\taccuracy\trmse_xy\trmse_yx\tcoverage_xy\tcoverage_yx\tna_xy\tna_yx\tfailed\n",
    );
    for p in &report.points {
        for m in &p.methods {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.case,
                p.beta,
                p.beta_xy,
                p.beta_yx,
                p.h_true,
                m.method,
                m.reps,
                m.accuracy,
                fmt_opt(m.rmse_xy),
                fmt_opt(m.rmse_yx),
                fmt_opt(m.coverage_xy),
                fmt_opt(m.coverage_yx),
                m.na_xy,
                m.na_yx,
                m.failed
            );
        }
    }
    s
}

/// Long-format plot data: one row per panel point, `x` the varied effect.
pub fn plot_tsv(report: &ExperimentReport) -> String {
    let mut s = String::from("case\tmetric\tmethod\tx\ty\n");
    for p in &report.points {
        for m in &p.methods {
            let rows = [
                ("accuracy", Some(m.accuracy)),
                ("rmse_xy", m.rmse_xy),
                ("rmse_yx", m.rmse_yx),
                ("coverage_xy", m.coverage_xy),
                ("coverage_yx", m.coverage_yx),
            ];
            for (metric, y) in rows {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{}\t{}",
                    p.case,
                    metric,
                    m.method,
                    p.beta,
                    fmt_opt(y)
                );
            }
        }
    }
    s
}

/// Short text summary: PCH accuracy per case over the grid.
pub fn summary_text(report: &ExperimentReport) -> String {
    let mut s = String::new();
    for p in &report.points {
        let cells: Vec<String> = p
            .methods
            .iter()
            .map(|m| {
                format!(
                    "{} acc={:.2} rmse_xy={} rmse_yx={}",
                    m.method,
                    m.accuracy,
                    fmt_opt(m.rmse_xy.map(|v| format!("{v:.4}"))),
                    fmt_opt(m.rmse_yx.map(|v| format!("{v:.4}")))
                )
            })
            .collect();
        let _ = writeln!(
            s,
            "case {} beta={:+.1}: {}",
            p.case,
            p.beta,
            cells.join("; ")
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn toy_file_is_centered() {
        let f = write_tmp("X,Y,Z1,Z2\n1,2,1,0\n2,4,0,1\n3,9,2,2\n");
        let d = load_dataset(f.path(), &ColumnRoles::default()).unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert!(d.x.sum().abs() < 1e-12 && d.z.column(1).sum().abs() < 1e-12);
        assert_eq!(d.x[0], -1.0);
    }

    #[test]
    fn blank_cell_reports_location() {
        let f = write_tmp("X,Y,Z1,Z2\n1,2,1,0\n2,,0,1\n3,9,2,2\n");
        match load_dataset(f.path(), &ColumnRoles::default()) {
            Err(PchError::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "Y");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn named_roles_and_missing_column() {
        let f = write_tmp("g1,out,exp,g2\n1,2,1,0\n0,4,2,1\n2,9,3,2\n5,1,1,1\n");
        let roles = ColumnRoles {
            x: Some("exp".into()),
            y: Some("out".into()),
            z: None,
        };
        let t = read_table(f.path(), &roles).unwrap();
        assert_eq!(t.z_names, vec!["g1", "g2"]);
        assert_eq!(t.x[2], 3.0);
        let bad = ColumnRoles {
            x: Some("nope".into()),
            ..ColumnRoles::default()
        };
        assert!(
            matches!(read_table(f.path(), &bad), Err(PchError::MissingColumn(c)) if c == "nope")
        );
    }

    #[test]
    fn too_few_rows_is_dimension_error() {
        let f = write_tmp("X,Y,Z1,Z2\n1,2,1,0\n2,4,0,1\n");
        assert!(matches!(
            load_dataset(f.path(), &ColumnRoles::default()),
            Err(PchError::Dimension(_))
        ));
    }

    #[test]
    fn record_round_trip() {
        let r = ReportRecord {
            method: Method::Pch,
            h_hat: -1,
            beta_xy: Some(0.1 + 0.2),
            ci_xy: (Some(-1e-300), Some(2.5)),
            beta_yx: None,
            ci_yx: (None, None),
            level: 0.95,
            branch: Some(Branch::VoteCompareIi),
            valid_xy: Some(15),
            valid_yx: Some(0),
            mode_unique_i: Some(true),
            mode_unique_ii: Some(false),
            ch_passed_i: None,
            ch_passed_ii: Some(true),
            undetectable: Some(false),
        };
        let text = records_to_tsv(std::slice::from_ref(&r));
        assert_eq!(records_from_tsv(&text).unwrap(), vec![r]);
    }

    #[test]
    fn unknown_keys_are_listed() {
        let err =
            parse_experiment_config("grid = [0.5]\nfoo = 1\n[base]\nn = 100\np = 30\nbar = 2\n")
                .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("foo"), "{msg}");
        let err =
            parse_experiment_config("[base]\nn = 100\np = 30\nbar = 2\nbaz = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("base.bar") && msg.contains("base.baz"),
            "{msg}"
        );
    }

    #[test]
    fn experiment_config_parses() {
        let cfg = parse_experiment_config(
            "cases = [\"a\", \"b\"]\ngrid = [0.2]\nmethods = [\"PCH\", \"IVW\"]\nsign_prior = \"MAGNITUDE_LT_1\"\n[base]\nn = 500\np = 30\nreplications = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.base.n, 500);
        assert_eq!(cfg.base.s_x, 15);
        assert_eq!(cfg.methods, vec![Method::Pch, Method::Ivw]);
    }

    #[test]
    fn extended_sentinel() {
        assert_eq!(parse_extended("INF").unwrap(), Extended::Infinite);
        assert_eq!(parse_extended("0.25").unwrap(), Extended::Finite(0.25));
        assert_eq!(fmt_extended(Extended::Infinite), "INF");
    }
}
