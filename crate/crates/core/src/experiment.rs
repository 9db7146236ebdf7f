//! Monte Carlo harness: replications over a grid of cases and effect sizes,
//! scored for direction accuracy, RMSE and coverage.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_baselines, Method};
use crate::dgp::{generate, Case, SimConfig};
use crate::error::Result;
use crate::inference::{infer, ConfidenceInterval, SignPrior};
use crate::pch::{pch_both, PchOptions};
use crate::stats::Design;
use crate::tsht::PointEstimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub base: SimConfig,
    pub cases: Vec<Case>,
    pub grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub alpha: f64,
    pub sign_prior: SignPrior,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            base: SimConfig::default(),
            cases: Case::ALL.to_vec(),
            grid: vec![-1.0, -0.6, -0.2, 0.2, 0.6, 1.0],
            methods: Method::ALL.to_vec(),
            alpha: 0.05,
            sign_prior: SignPrior::MagnitudeLt1,
        }
    }
}

impl ExperimentConfig {
    pub fn points(&self) -> Vec<(Case, f64)> {
        self.cases
            .iter()
            .flat_map(|&c| self.grid.iter().map(move |&b| (c, b)))
            .collect()
    }
}

/// What one method produced on one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub h: i8,
    pub xy: Option<PointEstimate>,
    pub yx: Option<PointEstimate>,
    pub ci_xy: ConfidenceInterval,
    pub ci_yx: ConfidenceInterval,
}

/// Runs every requested method on one dataset. Failures of a single
/// replication (for instance a singular design) are returned as errors and
/// counted as NA by the caller.
pub fn run_replication(
    cfg: &SimConfig,
    rep: u64,
    exp: &ExperimentConfig,
) -> Result<Vec<MethodOutcome>> {
    let data = generate(cfg, rep)?;
    let design = Design::new(&data.z)?;
    let n = data.n();
    let mut out = Vec::with_capacity(exp.methods.len());
    if exp.methods.contains(&Method::Pch) {
        let both = pch_both(&design, &data.x, &data.y, PchOptions::default())?;
        let r = infer(&both.xy, &both.yx, n, exp.alpha, exp.sign_prior)?;
        out.push(MethodOutcome {
            method: Method::Pch,
            h: r.h_hat,
            xy: r.xy,
            yx: r.yx,
            ci_xy: r.ci_xy,
            ci_yx: r.ci_yx,
        });
    }
    for b in run_baselines(&design, &data.x, &data.y, &exp.methods, exp.alpha)? {
        out.push(MethodOutcome {
            method: b.method,
            h: b.h_call,
            xy: b.xy,
            yx: b.yx,
            ci_xy: b.ci_xy,
            ci_yx: b.ci_yx,
        });
    }
    Ok(out)
}

/// Aggregate for one method at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub reps: usize,
    /// Fraction of replications with the correct direction code.
    pub accuracy: f64,
    /// RMSE over replications with a non-NA estimate.
    pub rmse_xy: Option<f64>,
    pub rmse_yx: Option<f64>,
    /// Coverage over replications with a non-NA interval.
    pub coverage_xy: Option<f64>,
    pub coverage_yx: Option<f64>,
    pub na_xy: usize,
    pub na_yx: usize,
    /// Replications that failed outright.
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub case: Case,
    pub beta: f64,
    pub beta_xy: f64,
    pub beta_yx: f64,
    pub h_true: i8,
    pub methods: Vec<MethodSummary>,
}

impl PointReport {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub points: Vec<PointReport>,
}

impl ExperimentReport {
    pub fn point(&self, case: Case, beta: f64) -> Option<&PointReport> {
        self.points
            .iter()
            .find(|p| p.case == case && p.beta == beta)
    }
}

/// Per-point seeds differ so that grid points do not share draws.
pub fn point_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn run_experiment(exp: &ExperimentConfig) -> Result<ExperimentReport> {
    exp.base.validate()?;
    let mut points = Vec::new();
    for (idx, (case, beta)) in exp.points().into_iter().enumerate() {
        let mut cfg = case.configure(&exp.base, beta);
        cfg.seed = point_seed(exp.base.seed, idx);
        cfg.validate()?;
        // Ordered collection keeps the aggregate independent of scheduling.
        let runs: Vec<Option<Vec<MethodOutcome>>> = (0..cfg.replications as u64)
            .into_par_iter()
            .map(|rep| run_replication(&cfg, rep, exp).ok())
            .collect();
        points.push(summarize(case, beta, &cfg, &exp.methods, &runs));
    }
    Ok(ExperimentReport { points })
}

pub fn summarize(
    case: Case,
    beta: f64,
    cfg: &SimConfig,
    methods: &[Method],
    runs: &[Option<Vec<MethodOutcome>>],
) -> PointReport {
    let h_true = cfg.h_true();
    let summaries = methods
        .iter()
        .map(|&m| {
            let outcomes: Vec<Option<&MethodOutcome>> = runs
                .iter()
                .map(|r| r.as_ref().and_then(|v| v.iter().find(|o| o.method == m)))
                .collect();
            let failed = outcomes.iter().filter(|o| o.is_none()).count();
            let ok: Vec<&MethodOutcome> = outcomes.into_iter().flatten().collect();
            let correct = ok.iter().filter(|o| o.h == h_true).count();
            let xs: Vec<(Option<f64>, &ConfidenceInterval)> = ok
                .iter()
                .map(|o| (o.xy.map(|e| e.beta), &o.ci_xy))
                .collect();
            let ys: Vec<(Option<f64>, &ConfidenceInterval)> = ok
                .iter()
                .map(|o| (o.yx.map(|e| e.beta), &o.ci_yx))
                .collect();
            let (rmse_xy, coverage_xy, na_xy) = score(&xs, cfg.beta_xy);
            let (rmse_yx, coverage_yx, na_yx) = score(&ys, cfg.beta_yx);
            MethodSummary {
                method: m,
                reps: runs.len(),
                accuracy: correct as f64 / runs.len().max(1) as f64,
                rmse_xy,
                rmse_yx,
                coverage_xy,
                coverage_yx,
                na_xy: na_xy + failed,
                na_yx: na_yx + failed,
                failed,
            }
        })
        .collect();
    PointReport {
        case,
        beta,
        beta_xy: cfg.beta_xy,
        beta_yx: cfg.beta_yx,
        h_true,
        methods: summaries,
    }
}

fn score(
    est: &[(Option<f64>, &ConfidenceInterval)],
    truth: f64,
) -> (Option<f64>, Option<f64>, usize) {
    let mut sq = 0.0;
    let mut count = 0usize;
    let mut covered = 0usize;
    let mut with_ci = 0usize;
    for (b, ci) in est {
        if let Some(b) = b {
            sq += (b - truth).powi(2);
            count += 1;
        }
        if let Some(c) = ci.contains(truth) {
            with_ci += 1;
            covered += usize::from(c);
        }
    }
    let rmse = (count > 0).then(|| (sq / count as f64).sqrt());
    let cov = (with_ci > 0).then(|| covered as f64 / with_ci as f64);
    (rmse, cov, est.len() - count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_replication_report_matches_single_run() {
        let exp = ExperimentConfig {
            base: SimConfig {
                n: 3000,
                p: 30,
                replications: 1,
                ..SimConfig::default()
            },
            cases: vec![Case::B],
            grid: vec![0.6],
            methods: vec![Method::Pch],
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&exp).unwrap();
        let mut cfg = Case::B.configure(&exp.base, 0.6);
        cfg.seed = point_seed(exp.base.seed, 0);
        let single = run_replication(&cfg, 0, &exp).unwrap();
        let s = report.points[0].method(Method::Pch).unwrap();
        assert_eq!(s.reps, 1);
        assert_eq!(s.accuracy, f64::from(u8::from(single[0].h == 1)));
        match single[0].xy {
            Some(e) => assert_eq!(s.rmse_xy, Some((e.beta - 0.6).abs())),
            None => assert_eq!(s.na_xy, 1),
        }
    }

    #[test]
    fn score_excludes_na() {
        let ci = ConfidenceInterval {
            bounds: Some((0.0, 1.0)),
            level: 0.95,
        };
        let na = ConfidenceInterval::na(0.95);
        let (rmse, cov, nas) = score(&[(Some(0.7), &ci), (None, &na)], 0.5);
        assert!((rmse.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(cov, Some(1.0));
        assert_eq!(nas, 1);
    }
}
