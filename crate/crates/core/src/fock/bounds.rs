//! Sampled checks of the pointwise, derivative and embedding inequalities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{fock_norm, FockParams, NormEstimate, NormMethod, SymbolFn};
use crate::error::{Error, Result};
use crate::linalg::{random, CVector};

/// Outcome of checking `lhs(z) ≤ rhs(z)` at sampled points.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub checked: usize,
    /// Smallest `1 − lhs/rhs` seen, using the central norm estimate.
    pub worst_margin: f64,
    pub worst_point: Option<CVector>,
    /// Points where `lhs` exceeds `rhs` even at the top of the norm interval.
    pub violations: usize,
    pub norm: NormEstimate,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Origin, term frequencies, then seeded points on shells of radius 0.5..8.
fn sample_points(f: &SymbolFn, samples: usize, seed: u64) -> Vec<CVector> {
    let n = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![CVector::zeros(n)];
    pts.extend(f.frequencies());
    let shells = [0.5, 1.0, 2.0, 4.0, 8.0];
    let mut k = 0;
    while pts.len() < samples.max(pts.len()) {
        pts.push(random::vector_with_norm(n, shells[k % shells.len()], &mut rng));
        k += 1;
    }
    pts
}

fn run_check(
    f: &SymbolFn,
    norm: NormEstimate,
    samples: usize,
    seed: u64,
    log_sides: impl Fn(&CVector) -> Result<(f64, f64)>,
) -> Result<BoundReport> {
    let mut report = BoundReport {
        checked: 0,
        worst_margin: f64::INFINITY,
        worst_point: None,
        violations: 0,
        norm,
    };
    let log_value = norm.value.ln();
    let log_upper = norm.upper().ln() + 1e-12;
    for z in sample_points(f, samples, seed) {
        // sides are logs of the z-dependent factors; the norm enters additively
        let (lhs, rhs_factor) = log_sides(&z)?;
        let margin = 1.0 - (lhs - rhs_factor - log_value).exp();
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_point = Some(z.clone());
        }
        if lhs > rhs_factor + log_upper {
            report.violations += 1;
        }
        report.checked += 1;
    }
    Ok(report)
}

/// `|f(z)| e^{−|z|²/2} ≤ ‖f‖_{n,p}`.
pub fn check_pointwise_bound(
    f: &SymbolFn,
    params: FockParams,
    method: NormMethod,
    samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    let norm = fock_norm(f, params, method)?;
    run_check(f, norm, samples, seed, |z| {
        Ok((f.log_abs(z)? - z.norm_sqr() / 2.0, 0.0))
    })
}

/// `|∂f/∂z_i(z)| ≤ e²(1 + |z_i|) e^{|z|²/2} ‖f‖_{n,p}`.
pub fn check_derivative_bound(
    f: &SymbolFn,
    params: FockParams,
    i: usize,
    method: NormMethod,
    samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    let d = f.partial_derivative(i)?;
    let norm = fock_norm(f, params, method)?;
    run_check(f, norm, samples, seed, |z| {
        let rhs = 2.0 + (1.0 + z.get(i).norm()).ln() + z.norm_sqr() / 2.0;
        Ok((d.log_abs(z)?, rhs))
    })
}

/// Result of comparing `‖f‖_{n,q}` with `(q/p)^{n/q} ‖f‖_{n,p}`.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingReport {
    pub norm_p: NormEstimate,
    pub norm_q: NormEstimate,
    pub constant: f64,
    /// `1 − ‖f‖_q / (C ‖f‖_p)` on central estimates.
    pub margin: f64,
    /// The inequality fails even after widening both estimates by their errors.
    pub violated: bool,
}

/// `‖f‖_{n,q} ≤ (q/p)^{n/q} ‖f‖_{n,p}` for `p < q`.
pub fn check_embedding(
    f: &SymbolFn,
    p: f64,
    q: f64,
    method: NormMethod,
) -> Result<EmbeddingReport> {
    if !(p > 0.0 && p < q && q.is_finite()) {
        return Err(Error::Input(format!("embedding needs 0 < p < q < ∞, got p = {p}, q = {q}")));
    }
    let n = f.dim();
    let norm_p = fock_norm(f, FockParams::new(n, p)?, method)?;
    let norm_q = fock_norm(f, FockParams::new(n, q)?, method)?;
    let constant = (q / p).powf(n as f64 / q);
    let margin = if norm_p.value > 0.0 {
        1.0 - norm_q.value / (constant * norm_p.value)
    } else {
        1.0
    };
    Ok(EmbeddingReport {
        norm_p,
        norm_q,
        constant,
        margin,
        violated: norm_q.lower() > constant * norm_p.upper() * (1.0 + 1e-12),
    })
}
