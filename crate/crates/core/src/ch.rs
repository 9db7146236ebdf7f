//! Covariance-heterogeneity estimation of the reverse effect.
//!
//! Given a forward estimate `β̂_{D→D'}`, the residual `Λ̂ = P_Z^⊥ (D' - β̂ D)`
//! carries the heteroscedastic structural error of `D'`. Regressing the
//! products `D ⊙ Λ̂` and `D' ⊙ Λ̂` on `Z` yields moment vectors `θ̂_D`,
//! `θ̂_{D'}`; the reverse effect is the TSLS-form ratio of the two.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::Result;
use crate::quantile::chi2_quantile;
use crate::stats::{Design, SigmaHat};
use crate::tsht::{DirectionalEstimate, PointEstimate};

/// `P_Z^⊥ (D' - β D)`.
pub fn lambda_hat(
    design: &Design,
    d: &DVector<f64>,
    dp: &DVector<f64>,
    beta_fwd: f64,
) -> Result<DVector<f64>> {
    design.check_len(d)?;
    design.check_len(dp)?;
    Ok(design.residualize(&(dp - d * beta_fwd)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPair {
    pub theta_d: DVector<f64>,
    pub theta_dp: DVector<f64>,
    /// Inverse robust covariance of `θ̂_{D'}`.
    pub omega: DMatrix<f64>,
    /// Set when the robust covariance was singular and a pseudo-inverse was used.
    pub pseudo_inverse: bool,
}

impl ThetaPair {
    /// Wald statistic `θ̂_{D'}^T Ω̂ θ̂_{D'}`; χ²_p under `θ_{D'} = 0`.
    pub fn statistic(&self) -> f64 {
        self.theta_dp.dot(&(&self.omega * &self.theta_dp)).max(0.0)
    }
}

pub fn theta_hats(
    design: &Design,
    d: &DVector<f64>,
    dp: &DVector<f64>,
    lambda: &DVector<f64>,
) -> Result<ThetaPair> {
    design.check_len(d)?;
    design.check_len(dp)?;
    design.check_len(lambda)?;
    let a = d.component_mul(lambda);
    let b = dp.component_mul(lambda);
    let theta_d = design.coefficients(&a);
    let theta_dp = design.coefficients(&b);
    let resid = &b - design.z() * &theta_dp;
    let cov = design.sandwich(&resid.map(|e| e * e));
    let (omega, pseudo_inverse) = match Cholesky::new(cov.clone()) {
        Some(chol) if chol.l_dirty().diagonal().min() > 1e-14 * cov.diagonal().max().sqrt() => {
            (chol.inverse(), false)
        }
        _ => (pseudo_inverse(&cov), true),
    };
    Ok(ThetaPair {
        theta_d,
        theta_dp,
        omega,
        pseudo_inverse,
    })
}

fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.amax();
    let tol = max * 1e-12 * m.nrows() as f64;
    let inv = eig
        .eigenvalues
        .map(|l| if l > tol && max > 0.0 { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// Level-`1/n` test of `θ_{D'} = 0`; `true` means heterogeneity was detected.
pub fn ch_test(tp: &ThetaPair, n: usize) -> Result<bool> {
    let threshold = chi2_quantile(tp.theta_dp.len(), 1.0 - 1.0 / n as f64)?;
    Ok(tp.statistic() >= threshold)
}

/// `(θ̂_{D'}^T Σ̂ θ̂_D) / (θ̂_{D'}^T Σ̂ θ̂_{D'})`, or `None` on a zero denominator.
pub fn ch_ratio(tp: &ThetaPair, sigma: &SigmaHat) -> Option<f64> {
    let den = sigma.bilinear(&tp.theta_dp, &tp.theta_dp);
    if den.abs() <= f64::MIN_POSITIVE || !den.is_finite() {
        return None;
    }
    Some(sigma.bilinear(&tp.theta_dp, &tp.theta_d) / den)
}

/// How the variance of the reverse estimate treats the first-step quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChVariance {
    /// Propagates the estimation error of `β̂_{D→D'}` and of the projection
    /// that defines `Λ̂` through their influence functions.
    #[default]
    Propagated,
    /// Treats `Λ̂` as known.
    PlugIn,
}

/// Forward-direction quantities needed to propagate first-step error.
#[derive(Debug, Clone, Copy)]
pub struct ForwardFit<'a> {
    /// Per-observation influence of `β̂_{D→D'}`.
    pub influence: &'a DVector<f64>,
    /// Reduced-form residual of `D` on `Z`.
    pub exposure_residuals: &'a DVector<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct ChInputs<'a> {
    pub design: &'a Design,
    pub d: &'a DVector<f64>,
    pub dp: &'a DVector<f64>,
    pub lambda: &'a DVector<f64>,
}

/// Reverse-effect estimate with an empirical-residual sandwich variance.
///
/// Linearizing the estimating equation `θ̂_{D'}^T Z^T (D - β D') ⊙ Λ̂ = 0`
/// gives the influence of observation `i`
///
/// ```text
/// φ_i = [ẑ_i μ̂_i - (Z v)_i Λ̂_i] / ‖ẑ‖²  -  κ̂ / ‖ẑ‖² · h_i
/// ```
///
/// with `ẑ = Z θ̂_{D'}`, `μ̂ = (D - β̂ D') ⊙ Λ̂`,
/// `v = (Z^T Z)^{-1} Z^T ((D - β̂ D') ⊙ ẑ)`,
/// `κ̂ = ẑ^T ((D - β̂ D') ⊙ ê_D)` and `h` the forward influence. The second
/// and third terms vanish under [`ChVariance::PlugIn`].
pub fn ch_estimate(
    inputs: ChInputs<'_>,
    tp: &ThetaPair,
    sigma: &SigmaHat,
    forward: Option<ForwardFit<'_>>,
    mode: ChVariance,
) -> DirectionalEstimate {
    let ChInputs {
        design,
        d,
        dp,
        lambda,
    } = inputs;
    if lambda.iter().all(|l| *l == 0.0) {
        return DirectionalEstimate::na();
    }
    let Some(beta) = ch_ratio(tp, sigma) else {
        return DirectionalEstimate::na();
    };
    let n = design.n();
    let zhat = design.z() * &tp.theta_dp;
    let zz = zhat.norm_squared();
    if zz <= 0.0 {
        return DirectionalEstimate::na();
    }
    // (D - β D') per observation.
    let contrast = d - dp * beta;
    let mu = contrast.component_mul(lambda);
    let mut phi = zhat.component_mul(&mu);
    if mode == ChVariance::Propagated {
        let v = design.coefficients(&contrast.component_mul(&zhat));
        let zv = design.z() * v;
        phi -= zv.component_mul(lambda);
        if let Some(fwd) = forward {
            let kappa = zhat.dot(&contrast.component_mul(fwd.exposure_residuals));
            phi -= fwd.influence * kappa;
        }
    }
    phi /= zz;
    let var = phi.norm_squared();
    DirectionalEstimate {
        estimate: Some(PointEstimate {
            beta,
            variance: n as f64 * var,
        }),
        valid_set: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::center;

    fn design() -> (Design, DMatrix<f64>) {
        let raw = DMatrix::from_fn(50, 2, |i, j| (((i + 3) * (j + 5) * 104_729) % 11) as f64);
        let z = center(&raw).unwrap();
        (Design::new(&z).unwrap(), z)
    }

    #[test]
    fn zero_forward_effect_gives_reduced_form_residual() {
        let (design, z) = design();
        let d = DVector::from_fn(50, |i, _| (i % 7) as f64);
        let dp = DVector::from_fn(50, |i, _| ((i * i) % 9) as f64);
        let lam = lambda_hat(&design, &d, &dp, 0.0).unwrap();
        let rf = design.reduced_form(&dp).unwrap();
        assert!((lam - rf.residuals).amax() < 1e-12);
        let _ = z;
    }

    #[test]
    fn noiseless_structural_fit_gives_zero_lambda() {
        let (design, z) = design();
        let d = DVector::from_fn(50, |i, _| (i % 7) as f64);
        let dp = &d * 0.4 + &z * DVector::from_vec(vec![1.5, -2.0]);
        let lam = lambda_hat(&design, &d, &dp, 0.4).unwrap();
        assert!(lam.amax() < 1e-12);
    }

    #[test]
    fn zero_lambda_means_zero_thetas_and_na() {
        let (design, _) = design();
        let d = DVector::from_fn(50, |i, _| (i % 7) as f64);
        let lam = DVector::zeros(50);
        let tp = theta_hats(&design, &d, &d, &lam).unwrap();
        assert!(tp.theta_d.amax() == 0.0 && tp.theta_dp.amax() == 0.0);
        assert!(!ch_test(&tp, 50).unwrap());
        let est = ch_estimate(
            ChInputs {
                design: &design,
                d: &d,
                dp: &d,
                lambda: &lam,
            },
            &tp,
            &design.sigma_hat(),
            None,
            ChVariance::Propagated,
        );
        assert!(est.is_na());
    }

    #[test]
    fn proportional_moments_give_exact_ratio() {
        let theta_dp = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        let tp = ThetaPair {
            theta_d: &theta_dp * -1.25,
            theta_dp,
            omega: DMatrix::identity(3, 3),
            pseudo_inverse: false,
        };
        let sigma = SigmaHat(DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5],
        ));
        assert!((ch_ratio(&tp, &sigma).unwrap() + 1.25).abs() < 1e-15);
    }

    #[test]
    fn zero_denominator_is_none() {
        let tp = ThetaPair {
            theta_d: DVector::from_vec(vec![1.0, 1.0]),
            theta_dp: DVector::zeros(2),
            omega: DMatrix::identity(2, 2),
            pseudo_inverse: false,
        };
        assert!(ch_ratio(&tp, &SigmaHat(DMatrix::identity(2, 2))).is_none());
    }

    #[test]
    fn singular_covariance_falls_back_to_pseudo_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let pinv = pseudo_inverse(&m);
        // Moore-Penrose: M M^+ M = M
        assert!((&m * &pinv * &m - &m).amax() < 1e-12);
    }
}
