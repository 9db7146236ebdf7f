//! Comparison estimators applied separately to each direction: inverse-variance
//! weighting, Egger regression and plain TSHT.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{PchError, Result};
use crate::inference::{ci_for, detection_alpha, direction_call, ConfidenceInterval};
use crate::stats::Design;
use crate::tsht::{self, PointEstimate, ReducedFormPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "PCH")]
    Pch,
    #[serde(rename = "TSHT")]
    Tsht,
    #[serde(rename = "Egger")]
    Egger,
    #[serde(rename = "IVW")]
    Ivw,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pch, Method::Tsht, Method::Egger, Method::Ivw];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pch => "PCH",
            Method::Tsht => "TSHT",
            Method::Egger => "Egger",
            Method::Ivw => "IVW",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = PchError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| PchError::Config(format!("unknown method '{s}'")))
    }
}

/// Inverse-variance weighted mean of Wald ratios over `relevant`.
/// Variance is n-scaled like every other estimate.
pub fn ivw(pair: &ReducedFormPair, relevant: &[usize]) -> Option<PointEstimate> {
    let (mut sw, mut swr) = (0.0, 0.0);
    for &j in relevant {
        let v = pair.ratio_variance(j);
        if v > 0.0 && v.is_finite() {
            sw += 1.0 / v;
            swr += pair.ratio(j) / v;
        }
    }
    if sw <= 0.0 {
        return None;
    }
    Some(PointEstimate {
        beta: swr / sw,
        variance: pair.n as f64 / sw,
    })
}

/// Egger slope: weighted least squares of outcome on exposure coefficients
/// with an intercept, after orienting every instrument so that its exposure
/// coefficient is positive. Weights are the inverse first-order variances of
/// `γ̂_{out,j} - β γ̂_{exp,j}`; the slope variance is the HC0 sandwich.
pub fn egger(pair: &ReducedFormPair, relevant: &[usize]) -> Option<PointEstimate> {
    egger_fit(pair, relevant).map(|f| f.slope)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EggerFit {
    pub intercept: f64,
    pub slope: PointEstimate,
}

pub fn egger_fit(pair: &ReducedFormPair, relevant: &[usize]) -> Option<EggerFit> {
    if relevant.len() < 3 {
        return None;
    }
    let mut rows = Vec::with_capacity(relevant.len());
    for &j in relevant {
        let g = pair.exposure.gamma[j];
        let s = g.signum();
        let v = pair.ratio_variance(j) * g * g;
        if v > 0.0 && v.is_finite() {
            rows.push((s * g, s * pair.outcome.gamma[j], 1.0 / v));
        }
    }
    if rows.len() < 3 {
        return None;
    }
    let mut xtwx = Matrix2::zeros();
    let mut xtwy = Vector2::zeros();
    for &(x, y, w) in &rows {
        let r = Vector2::new(1.0, x);
        xtwx += r * r.transpose() * w;
        xtwy += r * (w * y);
    }
    let inv = xtwx.try_inverse()?;
    let coef = inv * xtwy;
    let mut meat = Matrix2::zeros();
    for &(x, y, w) in &rows {
        let r = Vector2::new(1.0, x);
        let e = y - coef.dot(&r);
        meat += r * r.transpose() * (w * w * e * e);
    }
    let cov = inv * meat * inv;
    Some(EggerFit {
        intercept: coef[0],
        slope: PointEstimate {
            beta: coef[1],
            variance: pair.n as f64 * cov[(1, 1)].max(0.0),
        },
    })
}

/// TSHT in one direction without the mode-uniqueness guard: the plurality
/// set is used even when it spans several clusters.
pub fn plain_tsht(
    design: &Design,
    pair: &ReducedFormPair,
    d: &DVector<f64>,
    dp: &DVector<f64>,
) -> Result<Option<PointEstimate>> {
    let relevant = tsht::select_relevant(&pair.exposure, design.n());
    let sel = tsht::vote(pair, &relevant);
    Ok(tsht::modified_tsls(design, d, dp, &sel.plurality_set)?.estimate)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub method: Method,
    pub xy: Option<PointEstimate>,
    pub yx: Option<PointEstimate>,
    pub ci_xy: ConfidenceInterval,
    pub ci_yx: ConfidenceInterval,
    pub h_call: i8,
}

impl BaselineResult {
    fn new(
        method: Method,
        xy: Option<PointEstimate>,
        yx: Option<PointEstimate>,
        n: usize,
        alpha: f64,
    ) -> Result<Self> {
        let a_n = detection_alpha(n);
        let h_call = direction_call(&ci_for(xy, n, a_n)?, &ci_for(yx, n, a_n)?);
        Ok(BaselineResult {
            method,
            xy,
            yx,
            ci_xy: ci_for(xy, n, alpha)?,
            ci_yx: ci_for(yx, n, alpha)?,
            h_call,
        })
    }
}

/// Runs the requested baselines (PCH entries are skipped) in both directions.
pub fn run_baselines(
    design: &Design,
    x: &DVector<f64>,
    y: &DVector<f64>,
    methods: &[Method],
    alpha: f64,
) -> Result<Vec<BaselineResult>> {
    let n = design.n();
    let fwd = ReducedFormPair::new(design, x, y)?;
    let rev = fwd.swapped();
    let rel_x = tsht::select_relevant(&fwd.exposure, n);
    let rel_y = tsht::select_relevant(&rev.exposure, n);
    let mut out = Vec::new();
    for &m in methods {
        let (xy, yx) = match m {
            Method::Pch => continue,
            Method::Tsht => (
                plain_tsht(design, &fwd, x, y)?,
                plain_tsht(design, &rev, y, x)?,
            ),
            Method::Egger => (egger(&fwd, &rel_x), egger(&rev, &rel_y)),
            Method::Ivw => (ivw(&fwd, &rel_x), ivw(&rev, &rel_y)),
        };
        out.push(BaselineResult::new(m, xy, yx, n, alpha)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ReducedForm;

    fn pair(gamma_exp: &[f64], gamma_out: &[f64], se_out: &[f64]) -> ReducedFormPair {
        let p = gamma_exp.len();
        let rf = |g: &[f64], se: &[f64]| ReducedForm {
            gamma: DVector::from_column_slice(g),
            residuals: DVector::zeros(1),
            se: DVector::from_column_slice(se),
        };
        ReducedFormPair {
            exposure: rf(gamma_exp, &vec![0.0; p]),
            outcome: rf(gamma_out, se_out),
            cross_cov: DVector::zeros(p),
            n: 100,
        }
    }

    #[test]
    fn ivw_weighted_mean() {
        // Ratios 1 and 3, ratio variances 1/3 and 1.
        let pr = pair(&[1.0, 1.0], &[1.0, 3.0], &[(1.0f64 / 3.0).sqrt(), 1.0]);
        let e = ivw(&pr, &[0, 1]).unwrap();
        assert!((e.beta - 1.5).abs() < 1e-12);
        assert!((e.variance - 100.0 / 4.0).abs() < 1e-10);
        assert!(ivw(&pr, &[]).is_none());
    }

    #[test]
    fn egger_exact_line() {
        let g = [0.5, -1.0, 2.0, 1.5];
        let out: Vec<f64> = g.iter().map(|x| 0.7 * x).collect();
        let pr = pair(&g, &out, &[0.1; 4]);
        let f = egger_fit(&pr, &[0, 1, 2, 3]).unwrap();
        assert!((f.slope.beta - 0.7).abs() < 1e-12 && f.intercept.abs() < 1e-12);

        // Intercept after orientation: sign(γ_exp)·γ_out = 0.7|γ_exp| + 0.2.
        let out: Vec<f64> = g.iter().map(|x| 0.7 * x + 0.2 * x.signum()).collect();
        let pr = pair(&g, &out, &[0.1; 4]);
        let f = egger_fit(&pr, &[0, 1, 2, 3]).unwrap();
        assert!((f.slope.beta - 0.7).abs() < 1e-12 && (f.intercept - 0.2).abs() < 1e-12);
        assert!(egger(&pr, &[0, 1]).is_none());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }
}
