//! Two-stage hard thresholding with a mode-uniqueness check.
//!
//! Instruments are first screened for relevance to the exposure, then every
//! relevant instrument votes for each other instrument whose Wald ratio lies
//! within its noise tolerance. The most-voted instruments form the plurality
//! set; if that set is not a single cluster the plurality rule is flagged as
//! failing for this direction.

use std::collections::BTreeSet;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{PchError, Result};
use crate::stats::{Design, ReducedForm};

/// Reduced forms of exposure `D` and outcome `D'` on the same instruments,
/// together with the robust covariance between matching coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedFormPair {
    pub exposure: ReducedForm,
    pub outcome: ReducedForm,
    /// `Cov(γ̂_{D,j}, γ̂_{D',j})` for each instrument.
    pub cross_cov: DVector<f64>,
    pub n: usize,
}

impl ReducedFormPair {
    pub fn new(design: &Design, d: &DVector<f64>, dp: &DVector<f64>) -> Result<Self> {
        let exposure = design.reduced_form(d)?;
        let outcome = design.reduced_form(dp)?;
        let w = exposure.residuals.component_mul(&outcome.residuals);
        let cross_cov = design.sandwich_diagonal(&w);
        Ok(ReducedFormPair {
            exposure,
            outcome,
            cross_cov,
            n: design.n(),
        })
    }

    /// Same fits with exposure and outcome exchanged.
    pub fn swapped(&self) -> Self {
        ReducedFormPair {
            exposure: self.outcome.clone(),
            outcome: self.exposure.clone(),
            cross_cov: self.cross_cov.clone(),
            n: self.n,
        }
    }

    pub fn p(&self) -> usize {
        self.exposure.gamma.len()
    }

    /// Wald ratio `γ̂_{D',j} / γ̂_{D,j}`.
    pub fn ratio(&self, j: usize) -> f64 {
        self.outcome.gamma[j] / self.exposure.gamma[j]
    }

    /// First-order delta-method variance of the Wald ratio (not n-scaled).
    pub fn ratio_variance(&self, j: usize) -> f64 {
        let g = self.exposure.gamma[j];
        let r = self.ratio(j);
        let v_out = self.outcome.se[j].powi(2);
        let v_exp = self.exposure.se[j].powi(2);
        let v = (v_out - 2.0 * r * self.cross_cov[j] + r * r * v_exp) / (g * g);
        v.max(0.0)
    }
}

/// `sqrt(log n)`: the √(log n / n) threshold applied to n-scaled deviations.
pub(crate) fn threshold_multiplier(n: usize) -> f64 {
    (n as f64).ln().sqrt()
}

/// Indices `j` with `|γ̂_j| ≥ √n·se_j · √(log n / n)`. The boundary is inclusive.
pub fn select_relevant(rf: &ReducedForm, n: usize) -> Vec<usize> {
    let t = threshold_multiplier(n);
    rf.gamma
        .iter()
        .zip(rf.se.iter())
        .enumerate()
        .filter(|(_, (g, se))| g.abs() >= *se * t)
        .map(|(j, _)| j)
        .collect()
}

/// Outcome of relevance screening and ratio voting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionResult {
    pub relevant: Vec<usize>,
    /// `(j, Q̂_j)` for each relevant `j`, in index order.
    pub votes: Vec<(usize, usize)>,
    pub plurality_set: Vec<usize>,
    /// `|plurality_set| == max Q̂`: the most-voted instruments form one cluster.
    pub mode_unique: bool,
}

impl SelectionResult {
    pub fn empty() -> Self {
        SelectionResult {
            relevant: Vec::new(),
            votes: Vec::new(),
            plurality_set: Vec::new(),
            mode_unique: false,
        }
    }

    pub fn max_votes(&self) -> usize {
        self.votes.iter().map(|(_, q)| *q).max().unwrap_or(0)
    }
}

/// Whether instrument `k` votes for `j`:
/// `|r_k - r_j| ≤ σ̂_{k→j} √(log n / n)` with
/// `σ̂²_{k→j} = n (Var̂ r_k + Var̂ r_j)`.
pub fn votes_for(pair: &ReducedFormPair, k: usize, j: usize) -> bool {
    let tol = ((pair.ratio_variance(k) + pair.ratio_variance(j)) * (pair.n as f64).ln()).sqrt();
    (pair.ratio(k) - pair.ratio(j)).abs() <= tol
}

pub fn vote(pair: &ReducedFormPair, relevant: &[usize]) -> SelectionResult {
    if relevant.is_empty() {
        return SelectionResult::empty();
    }
    let votes: Vec<(usize, usize)> = relevant
        .iter()
        .map(|&j| {
            let q = relevant.iter().filter(|&&k| votes_for(pair, k, j)).count();
            (j, q)
        })
        .collect();
    let max_q = votes.iter().map(|(_, q)| *q).max().unwrap_or(0);
    let plurality_set: Vec<usize> = votes
        .iter()
        .filter(|(_, q)| *q == max_q)
        .map(|(j, _)| *j)
        .collect();
    let mode_unique = plurality_set.len() == max_q;
    SelectionResult {
        relevant: relevant.to_vec(),
        votes,
        plurality_set,
        mode_unique,
    }
}

/// A point estimate with its n-scaled asymptotic variance `σ̂²`, so that a
/// confidence interval is `β̂ ± z σ̂ / √n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub beta: f64,
    pub variance: f64,
}

/// Estimate of one directional effect; `estimate` is `None` for NA.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DirectionalEstimate {
    pub estimate: Option<PointEstimate>,
    pub valid_set: Vec<usize>,
}

impl DirectionalEstimate {
    pub fn na() -> Self {
        DirectionalEstimate::default()
    }

    pub fn beta(&self) -> Option<f64> {
        self.estimate.map(|e| e.beta)
    }

    pub fn variance(&self) -> Option<f64> {
        self.estimate.map(|e| e.variance)
    }

    pub fn is_na(&self) -> bool {
        self.estimate.is_none()
    }
}

/// Modified TSLS fit plus the per-observation influence of `β̂`
/// (`β̂ - β ≈ Σ_i influence_i`).
#[derive(Debug, Clone)]
pub struct TslsFit {
    pub estimate: DirectionalEstimate,
    pub influence: DVector<f64>,
}

/// TSLS of `dp` on `d` with instruments `Z_V` and the remaining columns
/// `Z_{V^c}` as exogenous controls, with a heteroscedasticity-robust variance
/// built from the structural residuals.
pub fn modified_tsls(
    design: &Design,
    d: &DVector<f64>,
    dp: &DVector<f64>,
    valid_set: &[usize],
) -> Result<DirectionalEstimate> {
    Ok(modified_tsls_fit(design, d, dp, valid_set)?.estimate)
}

pub fn modified_tsls_fit(
    design: &Design,
    d: &DVector<f64>,
    dp: &DVector<f64>,
    valid_set: &[usize],
) -> Result<TslsFit> {
    design.check_len(d)?;
    design.check_len(dp)?;
    let (n, p) = (design.n(), design.p());
    if valid_set.is_empty() {
        return Ok(TslsFit {
            estimate: DirectionalEstimate::na(),
            influence: DVector::zeros(n),
        });
    }
    let valid: BTreeSet<usize> = valid_set.iter().copied().collect();
    if let Some(&bad) = valid.iter().find(|&&j| j >= p) {
        return Err(PchError::Dimension(format!(
            "instrument index {bad} out of range for p = {p}"
        )));
    }
    let controls: Vec<usize> = (0..p).filter(|j| !valid.contains(j)).collect();

    // Every second-stage regressor lies in the column space of Z, so the
    // second stage reduces to p-dimensional algebra: regressors = Z C.
    let gamma_d = design.coefficients(d);
    let gamma_dp = design.coefficients(dp);
    let k = 1 + controls.len();
    let mut c = DMatrix::zeros(p, k);
    c.set_column(0, &gamma_d);
    for (col, &j) in controls.iter().enumerate() {
        c[(j, col + 1)] = 1.0;
    }
    let gram = design.gram();
    let gram_c = &gram * &c;
    let a = c.tr_mul(&gram_c);
    let rhs = gram_c.tr_mul(&gamma_dp);
    let chol = Cholesky::new(a).ok_or_else(|| {
        PchError::singular(
            "second-stage design [fitted exposure, controls] is rank deficient",
            controls.clone(),
        )
    })?;
    let coef = chol.solve(&rhs);
    let beta = coef[0];

    // Structural residual with the raw exposure.
    let mut control_coef = DVector::zeros(p);
    for (col, &j) in controls.iter().enumerate() {
        control_coef[j] = coef[col + 1];
    }
    let u = dp - d * beta - design.z() * &control_coef;

    let mut e1 = DVector::zeros(k);
    e1[0] = 1.0;
    let a_inv_e1 = chol.solve(&e1);
    let weights = design.z() * (&c * a_inv_e1);
    let influence = weights.component_mul(&u);
    let var = influence.norm_squared();

    Ok(TslsFit {
        estimate: DirectionalEstimate {
            estimate: Some(PointEstimate {
                beta,
                variance: n as f64 * var,
            }),
            valid_set: valid.into_iter().collect(),
        },
        influence,
    })
}
