//! Population-level version of the pipeline, computed from exact structural
//! parameters rather than data. Used for identification studies and as a
//! limit that the finite-sample estimators should approach.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PchError, Result};

/// Tolerance for treating two population ratios as equal.
pub const RATIO_TOL: f64 = 1e-9;
/// Reduced-form coefficients below this magnitude count as irrelevant.
pub const RELEVANCE_TOL: f64 = 1e-12;
const DENOM_TOL: f64 = 1e-20;

/// True structural parameters of the bi-directional model.
///
/// `zeta_moment` and `eta_moment` are `E(ζ² Z)` and `E(η² Z)`, the only
/// features of the error distribution the oracle needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub beta_xy: f64,
    pub beta_yx: f64,
    pub pi_x: Vec<f64>,
    pub pi_y: Vec<f64>,
    /// `E(Z Z^T)`, row-major p x p.
    pub sigma: Vec<Vec<f64>>,
    pub zeta_moment: Vec<f64>,
    pub eta_moment: Vec<f64>,
}

impl PopulationSpec {
    pub fn p(&self) -> usize {
        self.pi_x.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        let lens = [
            ("pi_y", self.pi_y.len()),
            ("zeta_moment", self.zeta_moment.len()),
            ("eta_moment", self.eta_moment.len()),
            ("sigma", self.sigma.len()),
        ];
        for (name, len) in lens {
            if len != p {
                return Err(PchError::Dimension(format!(
                    "{name} has length {len}, pi_x has {p}"
                )));
            }
        }
        if self.sigma.iter().any(|row| row.len() != p) {
            return Err(PchError::Dimension("sigma must be p x p".into()));
        }
        if (1.0 - self.beta_xy * self.beta_yx).abs() < 1e-12 {
            return Err(PchError::singular(
                "beta_xy * beta_yx = 1: I - B is not invertible",
                Vec::new(),
            ));
        }
        if Cholesky::new(self.sigma_matrix()).is_none() {
            return Err(PchError::singular(
                "sigma is not positive definite",
                Vec::new(),
            ));
        }
        Ok(())
    }

    pub fn sigma_matrix(&self) -> DMatrix<f64> {
        let p = self.p();
        DMatrix::from_fn(p, p, |i, j| self.sigma[i][j])
    }

    fn det(&self) -> f64 {
        1.0 - self.beta_xy * self.beta_yx
    }

    /// `γ_X = (π_X + β_{Y→X} π_Y) / (1 - β_{X→Y} β_{Y→X})`.
    pub fn gamma_x(&self) -> DVector<f64> {
        (DVector::from_column_slice(&self.pi_x)
            + DVector::from_column_slice(&self.pi_y) * self.beta_yx)
            / self.det()
    }

    /// `γ_Y = (π_Y + β_{X→Y} π_X) / (1 - β_{X→Y} β_{Y→X})`.
    pub fn gamma_y(&self) -> DVector<f64> {
        (DVector::from_column_slice(&self.pi_y)
            + DVector::from_column_slice(&self.pi_x) * self.beta_xy)
            / self.det()
    }

    /// `E(ε_a ε_b Z)` for the reduced-form errors `ε = (I - B)^{-1} R`,
    /// returned as `(E ε_Y² Z, E ε_X² Z, E ε_Y ε_X Z)`.
    fn error_products(&self) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let mz = DVector::from_column_slice(&self.zeta_moment);
        let me = DVector::from_column_slice(&self.eta_moment);
        let d2 = self.det().powi(2);
        let (bxy, byx) = (self.beta_xy, self.beta_yx);
        let yy = (&mz + &me * (bxy * bxy)) / d2;
        let xx = (&mz * (byx * byx) + &me) / d2;
        let xy = (&mz * byx + &me * bxy) / d2;
        (yy, xx, xy)
    }
}

/// Which trait plays the exposure `D` in the plurality step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ordering {
    /// `(D, D') = (X, Y)`.
    XY,
    /// `(D, D') = (Y, X)`.
    YX,
}

/// A population effect that may be undefined (the `∞` convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => f.write_str("INF"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTriplet {
    pub beta_fwd: Extended,
    pub beta_rev: Extended,
    pub valid_set: Vec<usize>,
}

/// Unique mode of `ratios` under [`RATIO_TOL`], with its support.
/// `None` when two or more separate clusters share the maximal size.
pub fn population_mode(ratios: &[(usize, f64)]) -> Option<(f64, Vec<usize>)> {
    if ratios.is_empty() {
        return None;
    }
    let counts: Vec<usize> = ratios
        .iter()
        .map(|(_, r)| {
            ratios
                .iter()
                .filter(|(_, s)| (s - r).abs() <= RATIO_TOL)
                .count()
        })
        .collect();
    let max = *counts.iter().max()?;
    let support: Vec<usize> = ratios
        .iter()
        .zip(&counts)
        .filter(|(_, c)| **c == max)
        .map(|((j, _), _)| *j)
        .collect();
    if support.len() != max {
        return None;
    }
    let first = ratios.iter().find(|(j, _)| *j == support[0])?.1;
    Some((first, support))
}

pub fn oracle_pch(spec: &PopulationSpec, ordering: Ordering) -> Result<OracleTriplet> {
    spec.validate()?;
    let (gamma_x, gamma_y) = (spec.gamma_x(), spec.gamma_y());
    let (yy, xx, xy) = spec.error_products();
    // (γ_D, γ_D', E ε_D² Z, E ε_D'² Z)
    let (gamma_d, gamma_dp, dd, dpdp) = match ordering {
        Ordering::XY => (gamma_x, gamma_y, xx, yy),
        Ordering::YX => (gamma_y, gamma_x, yy, xx),
    };
    let ratios: Vec<(usize, f64)> = (0..spec.p())
        .filter(|&j| gamma_d[j].abs() > RELEVANCE_TOL)
        .map(|j| (j, gamma_dp[j] / gamma_d[j]))
        .collect();
    let Some((b, valid_set)) = population_mode(&ratios) else {
        return Ok(OracleTriplet {
            beta_fwd: Extended::Infinite,
            beta_rev: Extended::Infinite,
            valid_set: Vec::new(),
        });
    };

    // Λ = ε_{D'} - b ε_D, so E(Λ D Z) = E(ε_D' ε_D Z) - b E(ε_D² Z), etc.
    let sigma = spec.sigma_matrix();
    let chol = Cholesky::new(sigma.clone())
        .ok_or_else(|| PchError::singular("sigma is not positive definite", Vec::new()))?;
    let theta_d = chol.solve(&(&xy - &dd * b));
    let theta_dp = chol.solve(&(&dpdp - &xy * b));
    let den = theta_dp.dot(&(&sigma * &theta_dp));
    let beta_rev = if den.abs() <= DENOM_TOL {
        Extended::Infinite
    } else {
        Extended::Finite(theta_d.dot(&(&sigma * &theta_dp)) / den)
    };
    Ok(OracleTriplet {
        beta_fwd: Extended::Finite(b),
        beta_rev,
        valid_set,
    })
}

/// Population identification of the effects and the causal direction from
/// the two oracle triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleIdentification {
    /// `oPCH(X, Y)`: (β_{X→Y,I}, β_{Y→X,I}, V_{X→Y,I}).
    pub side_i: OracleTriplet,
    /// `oPCH(Y, X)`: (β_{Y→X,II}, β_{X→Y,II}, V_{Y→X,II}).
    pub side_ii: OracleTriplet,
    /// Pair selected by the uni-directional rule, `(β°_{X→Y}, β°_{Y→X})`.
    pub selected: (Extended, Extended),
    /// Direction code in {-1, 0, 1, 2}.
    pub direction: i8,
}

pub fn identify(spec: &PopulationSpec) -> Result<OracleIdentification> {
    let side_i = oracle_pch(spec, Ordering::XY)?;
    let side_ii = oracle_pch(spec, Ordering::YX)?;
    let pair_i = (side_i.beta_fwd, side_i.beta_rev);
    let pair_ii = (side_ii.beta_rev, side_ii.beta_fwd);
    let inf_i = pair_i.0.is_infinite() || pair_i.1.is_infinite();
    let inf_ii = pair_ii.0.is_infinite() || pair_ii.1.is_infinite();

    let selected = if inf_ii {
        pair_i
    } else if inf_i {
        pair_ii
    } else if side_i.valid_set.len() >= side_ii.valid_set.len() {
        pair_i
    } else {
        pair_ii
    };

    let all_nonzero = [pair_i.0, pair_i.1, pair_ii.0, pair_ii.1]
        .iter()
        .all(|b| match b {
            Extended::Finite(v) => v.abs() > RATIO_TOL,
            Extended::Infinite => true,
        });
    let direction = if !inf_i && !inf_ii && all_nonzero {
        2
    } else {
        let nonzero = |b: Extended| match b {
            Extended::Finite(v) => v.abs() > RATIO_TOL,
            Extended::Infinite => false,
        };
        i8::from(nonzero(selected.0)) - i8::from(nonzero(selected.1))
    };

    Ok(OracleIdentification {
        side_i,
        side_ii,
        selected,
        direction,
    })
}
