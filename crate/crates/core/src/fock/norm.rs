use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SymbolFn;
use crate::error::{check_dim, Error, Result};
use crate::integrate::{log_sum_exp, mc_log_mean, tensor_gauss_hermite};
use crate::linalg::{c, C64};

/// Smallest exponent accepted; below it every estimator's variance explodes.
pub const MIN_P: f64 = 0.05;

/// Largest real dimension handled by tensor quadrature.
pub const MAX_QUADRATURE_DIM: usize = 8;

/// Dimension and exponent of `F^p(ℂⁿ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockParams {
    pub n: usize,
    pub p: f64,
}

impl FockParams {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("dimension n must be at least 1".into()));
        }
        if !p.is_finite() || p < MIN_P {
            return Err(Error::Input(format!("exponent p = {p} outside [{MIN_P}, ∞)")));
        }
        Ok(FockParams { n, p })
    }
}

/// How to evaluate `‖f‖_{n,p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormMethod {
    /// Reproducing-kernel Gram identity; `p = 2` and no polynomial factors.
    ExactGram,
    /// Tensor Gauss–Hermite with this many nodes per real axis.
    Quadrature { nodes: usize },
    /// Importance-sampled Monte Carlo.
    MonteCarlo { samples: u64, seed: u64 },
    /// Exact when possible (zero, single kernel term, `p = 2` kernel sums),
    /// otherwise Monte Carlo with the given sample count.
    Auto { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormMethodKind {
    ExactGram,
    /// Closed form `‖c·K_w‖ = |c|·e^{|w|²/2}`, valid for every `p`.
    Analytic,
    Quadrature,
    MonteCarlo,
}

/// A norm value with the half-width of its uncertainty interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub method: NormMethodKind,
    pub samples_or_nodes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl NormEstimate {
    fn exact(value: f64, method: NormMethodKind) -> Self {
        NormEstimate {
            value,
            abs_error: 0.0,
            method,
            samples_or_nodes: 0,
            seed: None,
        }
    }

    pub fn lower(&self) -> f64 {
        (self.value - self.abs_error).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.value + self.abs_error
    }

    pub fn is_exact(&self) -> bool {
        self.abs_error == 0.0
    }
}

/// `‖f‖_{n,p} = ((p/2π)ⁿ ∫ |f|^p e^{−p|z|²/2} dA)^{1/p}`.
pub fn fock_norm(f: &SymbolFn, params: FockParams, method: NormMethod) -> Result<NormEstimate> {
    let params = FockParams::new(params.n, params.p)?;
    check_dim(params.n, f.dim())?;
    match method {
        NormMethod::ExactGram => exact_gram(f, params.p),
        NormMethod::Quadrature { nodes } => quadrature(f, params, nodes),
        NormMethod::MonteCarlo { samples, seed } => Ok(monte_carlo(f, params, samples, seed)),
        NormMethod::Auto { samples, seed } => {
            if f.is_zero() {
                Ok(NormEstimate::exact(0.0, NormMethodKind::ExactGram))
            } else if f.terms().len() == 1 && f.is_pure_kernel() {
                let t = &f.terms()[0];
                let log = t.coeff.norm().ln() + t.w.norm_sqr() / 2.0;
                Ok(NormEstimate::exact(log.exp(), NormMethodKind::Analytic))
            } else if params.p == 2.0 && f.is_pure_kernel() {
                exact_gram(f, 2.0)
            } else {
                Ok(monte_carlo(f, params, samples, seed))
            }
        }
    }
}

/// `‖Σ c_k K_{w_k}‖₂² = Σ_{k,l} c_k conj(c_l) e^{⟨w_l, w_k⟩}`.
fn exact_gram(f: &SymbolFn, p: f64) -> Result<NormEstimate> {
    if p != 2.0 {
        return Err(Error::Unsupported(format!("exact Gram norm needs p = 2, got {p}")));
    }
    if !f.is_pure_kernel() {
        return Err(Error::Unsupported(
            "exact Gram norm needs a pure kernel combination (no polynomial factors)".into(),
        ));
    }
    let terms = f.terms();
    if terms.is_empty() {
        return Ok(NormEstimate::exact(0.0, NormMethodKind::ExactGram));
    }
    let mut parts: Vec<(f64, C64)> = Vec::with_capacity(terms.len() * terms.len());
    for a in terms {
        for b in terms {
            let e = b.w.inner(&a.w);
            let log = a.coeff.norm().ln() + b.coeff.norm().ln() + e.re;
            let phase = (a.coeff * b.coeff.conj()) / (a.coeff.norm() * b.coeff.norm())
                * c(e.im.cos(), e.im.sin());
            parts.push((log, phase));
        }
    }
    let max = parts.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = parts.iter().map(|(l, ph)| ph.re * (l - max).exp()).sum();
    let value = (sum.max(0.0).ln() / 2.0 + max / 2.0).exp();
    Ok(NormEstimate::exact(value, NormMethodKind::ExactGram))
}

fn log_integrand(f: &SymbolFn, p: f64, x: &[f64]) -> f64 {
    let z: Vec<C64> = x.chunks(2).map(|q| c(q[0], q[1])).collect();
    let r2: f64 = x.iter().map(|v| v * v).sum();
    p * f.log_abs_unchecked(&z) - p * r2 / 2.0
}

/// Centre the rule on the term with the largest individual norm.
fn dominant_centre(f: &SymbolFn) -> Vec<f64> {
    let best = f
        .terms()
        .iter()
        .max_by(|a, b| {
            let la = a.coeff.norm().ln() + a.w.norm_sqr() / 2.0;
            let lb = b.coeff.norm().ln() + b.w.norm_sqr() / 2.0;
            la.total_cmp(&lb)
        })
        .expect("nonzero function");
    best.w.as_slice().iter().flat_map(|z| [z.re, z.im]).collect()
}

fn quadrature(f: &SymbolFn, params: FockParams, nodes: usize) -> Result<NormEstimate> {
    let d = 2 * params.n;
    if d > MAX_QUADRATURE_DIM {
        return Err(Error::Budget(format!(
            "tensor quadrature over {d} real dimensions exceeds {MAX_QUADRATURE_DIM}; use Monte Carlo"
        )));
    }
    if nodes < 2 {
        return Err(Error::Input("quadrature needs at least 2 nodes per axis".into()));
    }
    if f.is_zero() {
        return Ok(NormEstimate {
            value: 0.0,
            abs_error: f64::MIN_POSITIVE,
            method: NormMethodKind::Quadrature,
            samples_or_nodes: nodes as u64,
            seed: None,
        });
    }
    let p = params.p;
    let centre = dominant_centre(f);
    let log_c = params.n as f64 * (p / (2.0 * std::f64::consts::PI)).ln();
    let run = |m: usize| -> Result<f64> {
        let li = tensor_gauss_hermite(&centre, p / 2.0, m, |x| log_integrand(f, p, x))?;
        Ok(((li + log_c) / p).exp())
    };
    let value = run(nodes)?;
    let coarse = run((2 * nodes / 3).max(2))?;
    let floor = 4.0 * f64::EPSILON * value.max(1.0);
    Ok(NormEstimate {
        value,
        abs_error: (value - coarse).abs().max(floor),
        method: NormMethodKind::Quadrature,
        samples_or_nodes: nodes as u64,
        seed: None,
    })
}

/// Importance sampling from an equal-weight mixture of complex Gaussians
/// `∝ e^{−p|z−μ|²/2}` centred at the origin and at every term frequency.
/// For a single kernel term the weight ratio is bounded by the mixture size.
fn monte_carlo(f: &SymbolFn, params: FockParams, samples: u64, seed: u64) -> NormEstimate {
    let p = params.p;
    if f.is_zero() {
        return NormEstimate {
            value: 0.0,
            abs_error: f64::MIN_POSITIVE,
            method: NormMethodKind::MonteCarlo,
            samples_or_nodes: samples,
            seed: Some(seed),
        };
    }
    let mut centres: Vec<Vec<C64>> = vec![vec![c(0.0, 0.0); params.n]];
    for w in f.frequencies() {
        if w.norm() > 1e-12 {
            centres.push(w.as_slice().to_vec());
        }
    }
    let k = centres.len();
    let sd = (1.0 / p).sqrt();
    let est = mc_log_mean(samples, seed, |rng| {
        let pick = if k == 1 { 0 } else { rng.random_range(0..k) };
        let z: Vec<C64> = centres[pick]
            .iter()
            .map(|m| {
                let gr: f64 = StandardNormal.sample(rng);
                let gi: f64 = StandardNormal.sample(rng);
                m + c(gr * sd, gi * sd)
            })
            .collect();
        let r2: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let log_q = log_sum_exp(centres.iter().map(|m| {
            let d2: f64 = z.iter().zip(m).map(|(a, b)| (a - b).norm_sqr()).sum();
            -p * d2 / 2.0
        })) - (k as f64).ln();
        p * f.log_abs_unchecked(&z) - p * r2 / 2.0 - log_q
    });
    let value = (est.log_mean / p).exp();
    let rel = 3.0 * est.rel_se;
    let upper = value * (1.0 + rel).powf(1.0 / p);
    let lower = value * (1.0 - rel).max(0.0).powf(1.0 / p);
    let floor = 4.0 * f64::EPSILON * value.max(1.0);
    NormEstimate {
        value,
        abs_error: (upper - value).max(value - lower).max(floor),
        method: NormMethodKind::MonteCarlo,
        samples_or_nodes: est.samples,
        seed: Some(seed),
    }
}
