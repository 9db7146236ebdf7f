#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pch::oracle::PopulationSpec;
use pch::pch::{PchDiagnostics, PchOutput};
use pch::stats::ReducedForm;
use pch::tsht::{DirectionalEstimate, PointEstimate, ReducedFormPair};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on `[lo, hi]` with a random sign.
pub fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let m = rng.random_range(lo..=hi);
    if rng.random::<bool>() {
        m
    } else {
        -m
    }
}

/// `A Aᵀ / p + I` for a random `A`.
pub fn random_spd(rng: &mut ChaCha8Rng, p: usize) -> Vec<Vec<f64>> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
    let s = &a * a.transpose() / p as f64 + DMatrix::identity(p, p);
    (0..p)
        .map(|i| (0..p).map(|j| s[(i, j)]).collect())
        .collect()
}

pub fn random_spec(rng: &mut ChaCha8Rng) -> PopulationSpec {
    let p = rng.random_range(2..=12);
    let mut v =
        |lo: f64, hi: f64| -> Vec<f64> { (0..p).map(|_| rng.random_range(lo..hi)).collect() };
    let pi_x = v(-1.0, 1.0);
    let pi_y = v(-1.0, 1.0);
    let zeta_moment = v(-2.0, 2.0);
    let eta_moment = v(-2.0, 2.0);
    let sigma = random_spd(rng, p);
    PopulationSpec {
        beta_xy: rng.random_range(-0.95..0.95),
        beta_yx: rng.random_range(-0.95..0.95),
        pi_x,
        pi_y,
        sigma,
        zeta_moment,
        eta_moment,
    }
}

/// Bi-directional spec with 8 instruments valid for X→Y, 6 valid for Y→X
/// and `extra` instruments acting on both traits.
pub fn bidirectional_spec(rng: &mut ChaCha8Rng, extra: usize) -> PopulationSpec {
    let p = 14 + extra;
    let mut pi_x = vec![0.0; p];
    let mut pi_y = vec![0.0; p];
    for j in 0..p {
        if j < 8 {
            pi_x[j] = signed(rng, 0.3, 1.5);
        } else if j < 14 {
            pi_y[j] = signed(rng, 0.3, 1.5);
        } else {
            pi_x[j] = signed(rng, 0.3, 1.5);
            pi_y[j] = signed(rng, 0.3, 1.5);
        }
    }
    let zeta_moment = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    let eta_moment = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    PopulationSpec {
        beta_xy: signed(rng, 0.2, 0.9),
        beta_yx: signed(rng, 0.2, 0.9),
        pi_x,
        pi_y,
        sigma: random_spd(rng, p),
        zeta_moment,
        eta_moment,
    }
}

pub fn estimate(beta: f64, variance: f64) -> Option<PointEstimate> {
    Some(PointEstimate { beta, variance })
}

/// A hand-built PCH output. `fwd` and `rev` are `(β̂, σ̂²)` or NA.
pub fn side(fwd: Option<PointEstimate>, rev: Option<PointEstimate>, valid: usize) -> PchOutput {
    let valid_set: Vec<usize> = (0..valid).collect();
    PchOutput {
        forward: DirectionalEstimate {
            estimate: fwd,
            valid_set: valid_set.clone(),
        },
        reverse: DirectionalEstimate {
            estimate: rev,
            valid_set: valid_set.clone(),
        },
        valid_set,
        diagnostics: PchDiagnostics {
            mode_unique: fwd.is_some(),
            ..Default::default()
        },
    }
}

/// Reduced-form pair assembled from summary statistics.
pub fn summary_pair(
    gamma_d: Vec<f64>,
    se_d: Vec<f64>,
    gamma_dp: Vec<f64>,
    se_dp: Vec<f64>,
    cross_cov: Vec<f64>,
    n: usize,
) -> ReducedFormPair {
    let rf = |g: Vec<f64>, s: Vec<f64>| ReducedForm {
        gamma: DVector::from_vec(g),
        residuals: DVector::zeros(0),
        se: DVector::from_vec(s),
    };
    ReducedFormPair {
        exposure: rf(gamma_d, se_d),
        outcome: rf(gamma_dp, se_dp),
        cross_cov: DVector::from_vec(cross_cov),
        n,
    }
}

/// Least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Replaces every field of the listed columns that parses as a float.
pub fn mask_numeric(tsv: &str, columns: &[&str]) -> String {
    let mut lines = tsv.lines();
    let Some(header) = lines.next() else {
        return String::new();
    };
    let names: Vec<&str> = header.split('\t').collect();
    let mut out = format!("{header}\n");
    for line in lines {
        let fields: Vec<String> = line
            .split('\t')
            .zip(&names)
            .map(|(f, name)| {
                if columns.contains(name) && f.parse::<f64>().is_ok() {
                    "<num>".to_string()
                } else {
                    f.to_string()
                }
            })
            .collect();
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    out
}
