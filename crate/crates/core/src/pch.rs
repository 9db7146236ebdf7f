//! Finite-sample plurality-then-covariance-heterogeneity pipeline for one
//! ordering `(D, D')` of the two traits.

use nalgebra::{DMatrix, DVector};

use crate::ch::{self, ChInputs, ChVariance, ForwardFit};
use crate::error::Result;
use crate::stats::Design;
use crate::tsht::{self, DirectionalEstimate, ReducedFormPair, SelectionResult};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PchOptions {
    pub ch_variance: ChVariance,
}

/// Intermediate checks, reported alongside the estimates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PchDiagnostics {
    pub relevant: usize,
    pub max_votes: usize,
    pub mode_unique: bool,
    /// `None` when the heterogeneity step was not reached.
    pub ch_statistic: Option<f64>,
    pub ch_passed: Option<bool>,
    pub omega_pseudo_inverse: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PchOutput {
    /// `β̂_{D→D'}` from the plurality step.
    pub forward: DirectionalEstimate,
    /// `β̂_{D'→D}` from the heterogeneity step.
    pub reverse: DirectionalEstimate,
    pub valid_set: Vec<usize>,
    pub diagnostics: PchDiagnostics,
}

impl PchOutput {
    /// Both effects NA, as when the plurality mode is not unique.
    pub fn all_na(diagnostics: PchDiagnostics) -> Self {
        PchOutput {
            diagnostics,
            ..Default::default()
        }
    }

    /// Any of the two estimates is NA.
    pub fn has_na(&self) -> bool {
        self.forward.is_na() || self.reverse.is_na()
    }
}

/// Run the pipeline on raw (uncentered or centered) data.
pub fn pch(d: &DVector<f64>, dp: &DVector<f64>, z: &DMatrix<f64>) -> Result<PchOutput> {
    let design = Design::new(z)?;
    pch_with_design(&design, d, dp, PchOptions::default())
}

/// Run the pipeline against an already factored design. `d`, `dp` and the
/// design's `Z` are assumed centered.
pub fn pch_with_design(
    design: &Design,
    d: &DVector<f64>,
    dp: &DVector<f64>,
    options: PchOptions,
) -> Result<PchOutput> {
    let pair = ReducedFormPair::new(design, d, dp)?;
    pch_with_pair(design, &pair, d, dp, options)
}

pub(crate) fn pch_with_pair(
    design: &Design,
    pair: &ReducedFormPair,
    d: &DVector<f64>,
    dp: &DVector<f64>,
    options: PchOptions,
) -> Result<PchOutput> {
    let n = design.n();
    let relevant = tsht::select_relevant(&pair.exposure, n);
    let selection = tsht::vote(pair, &relevant);
    let mut diagnostics = diagnostics_from(&selection);
    if !selection.mode_unique {
        return Ok(PchOutput::all_na(diagnostics));
    }

    let valid_set = selection.plurality_set;
    let fit = tsht::modified_tsls_fit(design, d, dp, &valid_set)?;
    let Some(fwd) = fit.estimate.estimate else {
        return Ok(PchOutput::all_na(diagnostics));
    };

    let lambda = ch::lambda_hat(design, d, dp, fwd.beta)?;
    let tp = ch::theta_hats(design, d, dp, &lambda)?;
    let passed = ch::ch_test(&tp, n)?;
    diagnostics.ch_statistic = Some(tp.statistic());
    diagnostics.ch_passed = Some(passed);
    diagnostics.omega_pseudo_inverse = tp.pseudo_inverse;

    let reverse = if passed {
        ch::ch_estimate(
            ChInputs {
                design,
                d,
                dp,
                lambda: &lambda,
            },
            &tp,
            &design.sigma_hat(),
            Some(ForwardFit {
                influence: &fit.influence,
                exposure_residuals: &pair.exposure.residuals,
            }),
            options.ch_variance,
        )
    } else {
        DirectionalEstimate::na()
    };

    Ok(PchOutput {
        forward: fit.estimate,
        reverse,
        valid_set,
        diagnostics,
    })
}

fn diagnostics_from(sel: &SelectionResult) -> PchDiagnostics {
    PchDiagnostics {
        relevant: sel.relevant.len(),
        max_votes: sel.max_votes(),
        mode_unique: sel.mode_unique,
        ..Default::default()
    }
}

/// Both orderings on one dataset: `PCH(X, Y, Z)` and `PCH(Y, X, Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PchPair {
    pub xy: PchOutput,
    pub yx: PchOutput,
}

pub fn pch_both(
    design: &Design,
    x: &DVector<f64>,
    y: &DVector<f64>,
    options: PchOptions,
) -> Result<PchPair> {
    let pair = ReducedFormPair::new(design, x, y)?;
    let xy = pch_with_pair(design, &pair, x, y, options)?;
    let yx = pch_with_pair(design, &pair.swapped(), y, x, options)?;
    Ok(PchPair { xy, yx })
}
