//! Simulation design with three-level instruments and heteroscedastic
//! structural errors.
//!
//! Each replication draws from a ChaCha8 stream keyed by `(seed, rep)`, so any
//! replication can be regenerated on its own and in any order.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{PchError, Result};
use crate::oracle::PopulationSpec;
use crate::stats::Dataset;

/// Support and probabilities of each instrument.
pub const Z_LEVELS: [f64; 3] = [1.0, 2.0, 3.0];
pub const Z_PROBS: [f64; 3] = [0.6, 0.2, 0.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub s_x: usize,
    pub s_xy: usize,
    pub s_y: usize,
    pub beta_xy: f64,
    pub beta_yx: f64,
    pub pi_strength_x: f64,
    pub pi_strength_y: f64,
    pub seed: u64,
    pub replications: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 50_000,
            p: 100,
            s_x: 15,
            s_xy: 8,
            s_y: 5,
            beta_xy: 0.0,
            beta_yx: 0.0,
            pi_strength_x: 0.6,
            pi_strength_y: 0.4,
            seed: 20_240_601,
            replications: 200,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_x + self.s_xy + self.s_y > self.p {
            return Err(PchError::Config(format!(
                "s_x + s_xy + s_y = {} exceeds p = {}",
                self.s_x + self.s_xy + self.s_y,
                self.p
            )));
        }
        // The error terms use Z_1, Z_2 and Z_{s_x+1}, Z_{s_x+2}.
        if self.p < 2 || self.s_x + 2 > self.p {
            return Err(PchError::Config(format!(
                "need p >= max(2, s_x + 2), got p = {} and s_x = {}",
                self.p, self.s_x
            )));
        }
        if self.n <= self.p {
            return Err(PchError::Dimension(format!(
                "n = {} must exceed p = {}",
                self.n, self.p
            )));
        }
        if self.replications == 0 {
            return Err(PchError::Config("replications must be positive".into()));
        }
        if (1.0 - self.beta_xy * self.beta_yx).abs() < 1e-12 {
            return Err(PchError::singular(
                "beta_xy * beta_yx = 1: the structural system has no solution",
                Vec::new(),
            ));
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        if self.beta_yx == 0.0 {
            -0.5
        } else {
            1.0
        }
    }

    pub fn kappa(&self) -> f64 {
        if self.beta_yx == 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn pi_x(&self) -> Vec<f64> {
        (0..self.p)
            .map(|j| {
                if j < self.s_x + self.s_xy {
                    self.pi_strength_x
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn pi_y(&self) -> Vec<f64> {
        let (lo, hi) = (self.s_x, self.s_x + self.s_xy + self.s_y);
        (0..self.p)
            .map(|j| {
                if (lo..hi).contains(&j) {
                    self.pi_strength_y
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Exact population quantities for centered instruments.
    pub fn population_spec(&self) -> Result<PopulationSpec> {
        self.validate()?;
        let (mean, var, m3) = z_moments();
        // E(W² Z̃) and E(W) E(W Z̃) for a raw level W and its centered version Z̃.
        let own = m3 + 3.0 * mean * var + mean.powi(3) - mean * (var + mean * mean);
        let cross = mean * var;
        let moment = |first: usize, second: usize, c: f64| {
            let mut v = vec![0.0; self.p];
            v[first] = own + 2.0 * c * cross;
            v[second] = c * c * own + 2.0 * c * cross;
            v
        };
        Ok(PopulationSpec {
            beta_xy: self.beta_xy,
            beta_yx: self.beta_yx,
            pi_x: self.pi_x(),
            pi_y: self.pi_y(),
            sigma: (0..self.p)
                .map(|i| {
                    (0..self.p)
                        .map(|j| if i == j { var } else { 0.0 })
                        .collect()
                })
                .collect(),
            zeta_moment: moment(self.s_x, self.s_x + 1, self.tau()),
            eta_moment: moment(0, 1, self.kappa()),
        })
    }

    pub fn h_true(&self) -> i8 {
        crate::inference::true_direction(self.beta_xy, self.beta_yx)
    }
}

/// Mean, variance and central third moment of one instrument.
pub fn z_moments() -> (f64, f64, f64) {
    let raw = |k: i32| -> f64 {
        Z_LEVELS
            .iter()
            .zip(Z_PROBS)
            .map(|(z, p)| p * z.powi(k))
            .sum()
    };
    let mean = raw(1);
    let var = raw(2) - mean * mean;
    let m3 = raw(3) - 3.0 * mean * raw(2) + 2.0 * mean.powi(3);
    (mean, var, m3)
}

/// The four simulation panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    /// `β_{X→Y} = 0`, `β_{Y→X}` varies.
    A,
    /// `β_{Y→X} = 0`, `β_{X→Y}` varies.
    B,
    /// `β_{X→Y} = 0.5`, `β_{Y→X}` varies.
    C,
    /// `β_{Y→X} = 0.5`, `β_{X→Y}` varies.
    D,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::A, Case::B, Case::C, Case::D];

    /// `(β_{X→Y}, β_{Y→X})` at grid value `beta`.
    pub fn effects(self, beta: f64) -> (f64, f64) {
        match self {
            Case::A => (0.0, beta),
            Case::B => (beta, 0.0),
            Case::C => (0.5, beta),
            Case::D => (beta, 0.5),
        }
    }

    /// Which effect the grid varies.
    pub fn varies_xy(self) -> bool {
        matches!(self, Case::B | Case::D)
    }

    pub fn configure(self, base: &SimConfig, beta: f64) -> SimConfig {
        let (beta_xy, beta_yx) = self.effects(beta);
        SimConfig {
            beta_xy,
            beta_yx,
            ..base.clone()
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Case::A => 'a',
            Case::B => 'b',
            Case::C => 'c',
            Case::D => 'd',
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Case {
    type Err = PchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Case::A),
            "b" => Ok(Case::B),
            "c" => Ok(Case::C),
            "d" => Ok(Case::D),
            other => Err(PchError::Config(format!("unknown case '{other}'"))),
        }
    }
}

/// One uncentered draw with its structural error components.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDraw {
    pub z: DMatrix<f64>,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    /// `R_X = U + η`.
    pub r_x: DVector<f64>,
    /// `R_Y = U + ζ`.
    pub r_y: DVector<f64>,
}

pub fn rng_for(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn draw_level(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    if u < Z_PROBS[0] {
        Z_LEVELS[0]
    } else if u < Z_PROBS[0] + Z_PROBS[1] {
        Z_LEVELS[1]
    } else {
        Z_LEVELS[2]
    }
}

pub fn generate_raw(cfg: &SimConfig, rep: u64) -> Result<RawDraw> {
    cfg.validate()?;
    let (n, p) = (cfg.n, cfg.p);
    let mut rng = rng_for(cfg.seed, rep);
    let (tau, kappa) = (cfg.tau(), cfg.kappa());
    let pi_x = DVector::from_vec(cfg.pi_x());
    let pi_y = DVector::from_vec(cfg.pi_y());

    let mut z = DMatrix::zeros(n, p);
    let mut r_x = DVector::zeros(n);
    let mut r_y = DVector::zeros(n);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = draw_level(&mut rng);
        }
        let u: f64 = rng.sample(StandardNormal);
        let zeta_star: f64 = rng.sample(StandardNormal);
        let eta_star: f64 = rng.sample(StandardNormal);
        let zeta = zeta_star * (z[(i, cfg.s_x)] + tau * z[(i, cfg.s_x + 1)]);
        let eta = eta_star * (z[(i, 0)] + kappa * z[(i, 1)]);
        r_y[i] = u + zeta;
        r_x[i] = u + eta;
    }

    // Solve X = β_yx Y + π_X'Z + R_X, Y = β_xy X + π_Y'Z + R_Y jointly.
    let sx = &z * &pi_x + &r_x;
    let sy = &z * &pi_y + &r_y;
    let det = 1.0 - cfg.beta_xy * cfg.beta_yx;
    let x = (&sx + &sy * cfg.beta_yx) / det;
    let y = (&sy + &sx * cfg.beta_xy) / det;
    Ok(RawDraw { z, x, y, r_x, r_y })
}

/// Centered dataset for replication `rep`.
pub fn generate(cfg: &SimConfig, rep: u64) -> Result<Dataset> {
    let raw = generate_raw(cfg, rep)?;
    Dataset::new(raw.x, raw.y, raw.z)
}

/// Fixed-point iteration `V(t) = B V(t-1) + π'Z + R` from `V(0) = 0`, with
/// `V = (X, Y)`. Converges to the joint solution when the spectral norm of
/// `B` is below one.
pub fn equilibrium_iterate(
    cfg: &SimConfig,
    raw: &RawDraw,
    steps: usize,
) -> (DVector<f64>, DVector<f64>) {
    let b = Matrix2::new(0.0, cfg.beta_yx, cfg.beta_xy, 0.0);
    let sx = &raw.z * DVector::from_vec(cfg.pi_x()) + &raw.r_x;
    let sy = &raw.z * DVector::from_vec(cfg.pi_y()) + &raw.r_y;
    let n = raw.z.nrows();
    let mut x = DVector::zeros(n);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let s = Vector2::new(sx[i], sy[i]);
        let mut v = Vector2::zeros();
        for _ in 0..steps {
            v = b * v + s;
        }
        x[i] = v[0];
        y[i] = v[1];
    }
    (x, y)
}
