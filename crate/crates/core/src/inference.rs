//! Combining the two orderings into a direction call, point estimates and
//! confidence intervals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PchError, Result};
use crate::pch::PchOutput;
use crate::quantile::normal_quantile;
use crate::tsht::{DirectionalEstimate, PointEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    /// `(lower, upper)`, or `None` for NA.
    pub bounds: Option<(f64, f64)>,
    /// Nominal coverage `1 - α`.
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn na(level: f64) -> Self {
        ConfidenceInterval {
            bounds: None,
            level,
        }
    }

    pub fn is_na(&self) -> bool {
        self.bounds.is_none()
    }

    pub fn lower(&self) -> Option<f64> {
        self.bounds.map(|b| b.0)
    }

    pub fn upper(&self) -> Option<f64> {
        self.bounds.map(|b| b.1)
    }

    /// `None` when the interval is NA.
    pub fn contains(&self, x: f64) -> Option<bool> {
        self.bounds.map(|(lo, hi)| lo <= x && x <= hi)
    }

    /// `1(0 ∉ CI)`, with an NA interval counted as not significant.
    pub fn excludes_zero(&self) -> bool {
        self.contains(0.0) == Some(false)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(PchError::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// `β ± z_{1-α/2} σ / √n` where `variance = σ²`.
pub fn ci(beta: f64, variance: f64, n: usize, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    if variance < 0.0 || !variance.is_finite() || !beta.is_finite() {
        return Err(PchError::Domain(format!(
            "need finite beta and nonnegative variance, got ({beta}, {variance})"
        )));
    }
    let half = normal_quantile(1.0 - alpha / 2.0)? * (variance / n as f64).sqrt();
    Ok(ConfidenceInterval {
        bounds: Some((beta - half, beta + half)),
        level: 1.0 - alpha,
    })
}

/// Interval for a possibly-NA estimate.
pub fn ci_for(est: Option<PointEstimate>, n: usize, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    match est {
        Some(e) => ci(e.beta, e.variance, n, alpha),
        None => Ok(ConfidenceInterval::na(1.0 - alpha)),
    }
}

/// Prior sign knowledge used to pick between the two candidate pairs when
/// both effects are detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SignPrior {
    /// `β_{X→Y} > 0`, `β_{Y→X} < 0`: keep the larger `β̂_{X→Y}`.
    #[default]
    XyPosYxNeg,
    /// `β_{X→Y} < 0`, `β_{Y→X} > 0`: keep the smaller `β̂_{X→Y}`.
    XyNegYxPos,
    /// Both `|β| < 1`: keep the pair whose larger magnitude is smaller.
    #[serde(rename = "MAGNITUDE_LT_1")]
    MagnitudeLt1,
}

impl SignPrior {
    pub fn as_str(self) -> &'static str {
        match self {
            SignPrior::XyPosYxNeg => "XY_POS_YX_NEG",
            SignPrior::XyNegYxPos => "XY_NEG_YX_POS",
            SignPrior::MagnitudeLt1 => "MAGNITUDE_LT_1",
        }
    }
}

impl fmt::Display for SignPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignPrior {
    type Err = PchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "XY_POS_YX_NEG" => Ok(SignPrior::XyPosYxNeg),
            "XY_NEG_YX_POS" => Ok(SignPrior::XyNegYxPos),
            "MAGNITUDE_LT_1" => Ok(SignPrior::MagnitudeLt1),
            other => Err(PchError::Config(format!(
                "unknown sign prior '{other}' (expected XY_POS_YX_NEG, XY_NEG_YX_POS or MAGNITUDE_LT_1)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Branch {
    /// Uni-directional; side II had an NA, side I used.
    IiNa,
    /// Uni-directional; side I had an NA, side II used.
    INa,
    /// Uni-directional; `|V̂_{X→Y,I}| ≥ |V̂_{Y→X,II}|`.
    VoteCompareI,
    VoteCompareIi,
    /// Both effects detected; prior picked side I.
    BidirI,
    BidirIi,
}

impl Branch {
    pub const ALL: [Branch; 6] = [
        Branch::IiNa,
        Branch::INa,
        Branch::VoteCompareI,
        Branch::VoteCompareIi,
        Branch::BidirI,
        Branch::BidirIi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::IiNa => "II_NA",
            Branch::INa => "I_NA",
            Branch::VoteCompareI => "VOTE_COMPARE_I",
            Branch::VoteCompareIi => "VOTE_COMPARE_II",
            Branch::BidirI => "BIDIR_I",
            Branch::BidirIi => "BIDIR_II",
        }
    }

    pub fn side_i(self) -> bool {
        matches!(self, Branch::IiNa | Branch::VoteCompareI | Branch::BidirI)
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Branch {
    type Err = PchError;

    fn from_str(s: &str) -> Result<Self> {
        Branch::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| PchError::Config(format!("unknown branch '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    /// Direction code: 1 for X→Y, -1 for Y→X, 2 for both, 0 for none.
    pub h_hat: i8,
    pub xy: Option<PointEstimate>,
    pub yx: Option<PointEstimate>,
    /// Intervals at the requested level.
    pub ci_xy: ConfidenceInterval,
    pub ci_yx: ConfidenceInterval,
    pub branch: Branch,
    pub sign_prior: SignPrior,
    /// `(|V̂_{X→Y,I}|, |V̂_{Y→X,II}|)`.
    pub valid_set_sizes: (usize, usize),
    /// Every estimate on both sides was NA, so neither identification
    /// condition could be detected.
    pub undetectable: bool,
}

impl InferenceResult {
    pub fn beta_xy(&self) -> Option<f64> {
        self.xy.map(|e| e.beta)
    }

    pub fn beta_yx(&self) -> Option<f64> {
        self.yx.map(|e| e.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pair {
    xy: Option<PointEstimate>,
    yx: Option<PointEstimate>,
}

impl Pair {
    fn has_na(&self) -> bool {
        self.xy.is_none() || self.yx.is_none()
    }
}

fn estimate(d: &DirectionalEstimate) -> Option<PointEstimate> {
    d.estimate
}

/// Level `1 - 1/n` significance used for direction decisions.
pub(crate) fn detection_alpha(n: usize) -> f64 {
    1.0 / n as f64
}

/// `out_i` comes from the ordering `(X, Y)`, `out_ii` from `(Y, X)`, both on
/// the same `n` observations.
pub fn infer(
    out_i: &PchOutput,
    out_ii: &PchOutput,
    n: usize,
    alpha: f64,
    prior: SignPrior,
) -> Result<InferenceResult> {
    check_alpha(alpha)?;
    if n < 2 {
        return Err(PchError::Dimension(format!("need n >= 2, got {n}")));
    }
    let side_i = Pair {
        xy: estimate(&out_i.forward),
        yx: estimate(&out_i.reverse),
    };
    let side_ii = Pair {
        xy: estimate(&out_ii.reverse),
        yx: estimate(&out_ii.forward),
    };
    let a_n = detection_alpha(n);
    let strict = [side_i.xy, side_i.yx, side_ii.xy, side_ii.yx]
        .into_iter()
        .map(|e| ci_for(e, n, a_n))
        .collect::<Result<Vec<_>>>()?;
    // The union is NA if any member is; otherwise 0 is in it if in any member.
    let union_na = strict.iter().any(ConfidenceInterval::is_na);
    let zero_in_union = strict.iter().any(|c| c.contains(0.0) == Some(true));

    let sizes = (out_i.valid_set.len(), out_ii.valid_set.len());
    let (branch, h_hat) = if union_na || zero_in_union {
        let branch = if side_ii.has_na() {
            Branch::IiNa
        } else if side_i.has_na() {
            Branch::INa
        } else if sizes.0 >= sizes.1 {
            Branch::VoteCompareI
        } else {
            Branch::VoteCompareIi
        };
        let chosen = if branch.side_i() { side_i } else { side_ii };
        let sig_xy = ci_for(chosen.xy, n, a_n)?.excludes_zero();
        let sig_yx = ci_for(chosen.yx, n, a_n)?.excludes_zero();
        (branch, i8::from(sig_xy) - i8::from(sig_yx))
    } else {
        let beta = |e: Option<PointEstimate>| e.map(|e| e.beta).unwrap_or(f64::NAN);
        let pick_i = match prior {
            SignPrior::XyPosYxNeg => beta(side_i.xy) > beta(side_ii.xy),
            SignPrior::XyNegYxPos => beta(side_i.xy) < beta(side_ii.xy),
            SignPrior::MagnitudeLt1 => {
                let m = |p: Pair| beta(p.xy).abs().max(beta(p.yx).abs());
                m(side_i) <= m(side_ii)
            }
        };
        (
            if pick_i {
                Branch::BidirI
            } else {
                Branch::BidirIi
            },
            2,
        )
    };

    let chosen = if branch.side_i() { side_i } else { side_ii };
    Ok(InferenceResult {
        h_hat,
        xy: chosen.xy,
        yx: chosen.yx,
        ci_xy: ci_for(chosen.xy, n, alpha)?,
        ci_yx: ci_for(chosen.yx, n, alpha)?,
        branch,
        sign_prior: prior,
        valid_set_sizes: sizes,
        undetectable: [side_i.xy, side_i.yx, side_ii.xy, side_ii.yx]
            .iter()
            .all(Option::is_none),
    })
}

/// The true direction code for a pair of effects.
pub fn true_direction(beta_xy: f64, beta_yx: f64) -> i8 {
    match (beta_xy != 0.0, beta_yx != 0.0) {
        (true, true) => 2,
        (true, false) => 1,
        (false, true) => -1,
        (false, false) => 0,
    }
}

/// Direction call from two intervals at level `1 - 1/n`; both significant
/// gives 2.
pub fn direction_call(ci_xy: &ConfidenceInterval, ci_yx: &ConfidenceInterval) -> i8 {
    match (ci_xy.excludes_zero(), ci_yx.excludes_zero()) {
        (true, true) => 2,
        (a, b) => i8::from(a) - i8::from(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_examples() {
        let c = ci(0.0, 1.0, 100, 0.05).unwrap();
        let (lo, hi) = c.bounds.unwrap();
        assert!((hi - 0.1959963984540054).abs() < 1e-12 && (lo + hi).abs() < 1e-15);
        let p = ci(0.3, 0.0, 100, 0.05).unwrap();
        assert_eq!(p.bounds, Some((0.3, 0.3)));
        assert!(ci(0.0, -1.0, 10, 0.05).is_err());
        assert!(ci(0.0, 1.0, 10, 0.0).is_err());
    }

    #[test]
    fn ci_nesting() {
        let wide = ci(0.4, 2.0, 500, 0.01).unwrap().bounds.unwrap();
        let narrow = ci(0.4, 2.0, 500, 0.1).unwrap().bounds.unwrap();
        assert!(wide.0 < narrow.0 && narrow.1 < wide.1);
    }

    #[test]
    fn true_direction_cases() {
        assert_eq!(true_direction(0.5, 0.4), 2);
        assert_eq!(true_direction(0.5, 0.0), 1);
        assert_eq!(true_direction(0.0, -0.6), -1);
        assert_eq!(true_direction(0.0, 0.0), 0);
    }

    #[test]
    fn sign_prior_parsing() {
        for p in [
            SignPrior::XyPosYxNeg,
            SignPrior::XyNegYxPos,
            SignPrior::MagnitudeLt1,
        ] {
            assert_eq!(p.as_str().parse::<SignPrior>().unwrap(), p);
        }
        assert!("bogus".parse::<SignPrior>().is_err());
    }

    #[test]
    fn na_interval_never_significant() {
        let na = ConfidenceInterval::na(0.95);
        assert!(!na.excludes_zero());
        assert_eq!(na.contains(0.0), None);
    }
}
