//! Shared numerical primitives: centering, reduced-form least squares,
//! heteroscedasticity-robust (sandwich) covariances and residual projection.
//!
//! Most estimators in this crate regress several different responses on the
//! same instrument matrix. [`Design`] factors `Z^T Z` once and caches
//! `G = Z (Z^T Z)^{-1}`, so that every OLS coefficient vector is `G^T v` and
//! every sandwich covariance is `G^T diag(w) G`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{PchError, Result};

/// Relative tolerance used when deciding that a column is linearly dependent
/// on the preceding ones.
const RANK_TOL: f64 = 1e-10;

/// Subtract column means.
pub fn center(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(PchError::Dimension(format!(
            "cannot center an empty {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    Ok(out)
}

pub fn center_vector(v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.is_empty() {
        return Err(PchError::Dimension("cannot center an empty vector".into()));
    }
    Ok(v.add_scalar(-v.mean()))
}

/// Centered observations of the two traits and the candidate instruments.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DMatrix<f64>,
}

impl Dataset {
    /// Center `x`, `y` and every column of `z`, checking shapes and `n > p`.
    pub fn new(x: DVector<f64>, y: DVector<f64>, z: DMatrix<f64>) -> Result<Self> {
        let n = x.len();
        if y.len() != n || z.nrows() != n {
            return Err(PchError::Dimension(format!(
                "row counts differ: x has {}, y has {}, z has {}",
                n,
                y.len(),
                z.nrows()
            )));
        }
        if z.ncols() == 0 {
            return Err(PchError::Dimension("no candidate instruments".into()));
        }
        if n <= z.ncols() {
            return Err(PchError::Dimension(format!(
                "need more observations than instruments (n = {}, p = {})",
                n,
                z.ncols()
            )));
        }
        Ok(Dataset {
            x: center_vector(&x)?,
            y: center_vector(&y)?,
            z: center(&z)?,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn p(&self) -> usize {
        self.z.ncols()
    }
}

/// Sample second-moment matrix `(1/n) Z^T Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaHat(pub DMatrix<f64>);

impl SigmaHat {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `a^T Σ̂ b`.
    pub fn bilinear(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.0 * b))
    }
}

pub fn sigma_hat(z: &DMatrix<f64>) -> Result<SigmaHat> {
    let n = z.nrows();
    if n == 0 || z.ncols() == 0 {
        return Err(PchError::Dimension("empty instrument matrix".into()));
    }
    let s = z.tr_mul(z) / n as f64;
    if Cholesky::new(s.clone()).is_none() {
        return Err(PchError::singular(
            "sample second-moment matrix is not positive definite",
            dependent_columns(z),
        ));
    }
    Ok(SigmaHat(s))
}

/// OLS fit of one response on the instruments.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedForm {
    pub gamma: DVector<f64>,
    pub residuals: DVector<f64>,
    /// Heteroscedasticity-robust (HC0) standard error of each coefficient.
    pub se: DVector<f64>,
}

/// Factored instrument matrix shared by every regression on `Z`.
#[derive(Debug, Clone)]
pub struct Design {
    z: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    /// `Z (Z^T Z)^{-1}`, n x p.
    g: DMatrix<f64>,
}

impl Design {
    pub fn new(z: &DMatrix<f64>) -> Result<Self> {
        let (n, p) = z.shape();
        if n == 0 || p == 0 {
            return Err(PchError::Dimension("empty instrument matrix".into()));
        }
        if n <= p {
            return Err(PchError::Dimension(format!(
                "need more observations than instruments (n = {n}, p = {p})"
            )));
        }
        let gram = z.tr_mul(z);
        let chol = match Cholesky::new(gram) {
            Some(c) => c,
            None => {
                return Err(PchError::singular(
                    "Z^T Z is not positive definite",
                    dependent_columns(z),
                ))
            }
        };
        // A Cholesky that succeeds numerically can still be useless when a
        // column is (nearly) a combination of the others.
        let diag = chol.l_dirty().diagonal();
        let scale = z.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        if diag.iter().any(|d| *d <= RANK_TOL * scale) {
            return Err(PchError::singular(
                "Z^T Z is numerically singular",
                dependent_columns(z),
            ));
        }
        let g = chol.solve(&z.transpose()).transpose();
        Ok(Design {
            z: z.clone(),
            chol,
            g,
        })
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn p(&self) -> usize {
        self.z.ncols()
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// `Z (Z^T Z)^{-1}`.
    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.z.tr_mul(&self.z)
    }

    pub fn sigma_hat(&self) -> SigmaHat {
        SigmaHat(self.gram() / self.n() as f64)
    }

    /// Solve `(Z^T Z) x = rhs`.
    pub fn solve_gram(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    /// OLS coefficients `(Z^T Z)^{-1} Z^T v`.
    pub fn coefficients(&self, v: &DVector<f64>) -> DVector<f64> {
        self.g.tr_mul(v)
    }

    /// `v - Z (Z^T Z)^{-1} Z^T v`.
    pub fn residualize(&self, v: &DVector<f64>) -> DVector<f64> {
        v - &self.z * self.coefficients(v)
    }

    pub fn reduced_form(&self, d: &DVector<f64>) -> Result<ReducedForm> {
        self.check_len(d)?;
        let gamma = self.coefficients(d);
        let residuals = d - &self.z * &gamma;
        let sq = residuals.map(|e| e * e);
        let se = self.sandwich_diagonal(&sq).map(f64::sqrt);
        Ok(ReducedForm {
            gamma,
            residuals,
            se,
        })
    }

    /// Diagonal of `G^T diag(w) G`. With `w = e ⊙ e'` this is the robust
    /// covariance between matching coordinates of two OLS fits.
    pub fn sandwich_diagonal(&self, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.p(),
            self.g.column_iter().map(|col| {
                col.iter()
                    .zip(w.iter())
                    .map(|(gij, wi)| gij * gij * wi)
                    .sum::<f64>()
            }),
        )
    }

    /// Full `G^T diag(w) G`.
    pub fn sandwich(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let mut scaled = self.g.clone();
        for mut col in scaled.column_iter_mut() {
            col.component_mul_assign(w);
        }
        let mut out = self.g.tr_mul(&scaled);
        // symmetrize away rounding
        let t = out.transpose();
        out += t;
        out * 0.5
    }

    pub(crate) fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.n() {
            return Err(PchError::Dimension(format!(
                "vector has {} entries, design has {} rows",
                v.len(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// Regress `d` on `z` with robust standard errors.
pub fn ols_reduced_form(z: &DMatrix<f64>, d: &DVector<f64>) -> Result<ReducedForm> {
    Design::new(z)?.reduced_form(d)
}

/// `v - Z (Z^T Z)^{-1} Z^T v`.
pub fn residual_projection(z: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    let design = Design::new(z)?;
    design.check_len(v)?;
    Ok(design.residualize(v))
}

/// Columns that are (numerically) linear combinations of earlier columns,
/// found by modified Gram-Schmidt.
pub fn dependent_columns(z: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for (j, col) in z.column_iter().enumerate() {
        let mut v = col.clone_owned();
        let norm0 = v.norm();
        for q in &basis {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= 1e-9 * norm0 {
            dependent.push(j);
        } else {
            basis.push(v / norm);
        }
    }
    dependent
}
