//! Gaussian-weighted integration over `ℝᵈ` in the log domain.
//!
//! Integrands are supplied as `log F(x)`; results come back as `log ∫ F`, so
//! huge exponential factors such as `e^{p|w|²/2}` never overflow mid-sum.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Samples per independently seeded block.
pub const MC_BLOCK: usize = 8192;

/// Largest tensor grid evaluated before giving up.
pub const MAX_TENSOR_POINTS: u64 = 60_000_000;

/// Gauss–Hermite rule for the weight `e^{-x²}` (Golub–Welsch).
pub fn gauss_hermite(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let jacobi = DMatrix::from_fn(m, m, |i, k| {
        if i + 1 == k || k + 1 == i {
            (i.max(k) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `log ∫_{ℝᵈ} F(x) dx` by a tensor Gauss–Hermite rule with `m` nodes per
/// axis, after the substitution `x = centre + v/√decay`.
///
/// Exact for `F = poly · e^{-decay|x−centre|²}` up to degree `2m−1` per axis.
pub fn tensor_gauss_hermite<F>(centre: &[f64], decay: f64, m: usize, log_f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = centre.len();
    let points = (m as u64).checked_pow(d as u32).unwrap_or(u64::MAX);
    if points > MAX_TENSOR_POINTS {
        return Err(Error::Budget(format!(
            "{m}^{d} quadrature nodes exceed the limit of {MAX_TENSOR_POINTS}"
        )));
    }
    let (nodes, weights) = gauss_hermite(m);
    let scale = 1.0 / decay.sqrt();
    let axes: Vec<Axis> = centre
        .iter()
        .map(|&c0| Axis {
            x: nodes.iter().map(|v| c0 + v * scale).collect(),
            // undo the e^{-v²} built into the rule, and rescale
            log_w: nodes
                .iter()
                .zip(&weights)
                .map(|(v, w)| w.ln() + v * v + scale.ln())
                .collect(),
        })
        .collect();
    Ok(log_tensor_sum(&axes, &log_f))
}

/// Gauss–Legendre rule on `[-1, 1]` (Golub–Welsch).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let jacobi = DMatrix::from_fn(m, m, |i, k| {
        if i + 1 == k || k + 1 == i {
            let j = i.max(k) as f64;
            j / (4.0 * j * j - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], 2.0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `log ∫_{[lo₁,hi₁]×…×[lo_d,hi_d]} F(x) dx` by a tensor Gauss–Legendre rule.
pub fn tensor_gauss_legendre<F>(bounds: &[(f64, f64)], m: usize, log_f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = bounds.len();
    let points = (m as u64).checked_pow(d as u32).unwrap_or(u64::MAX);
    if points > MAX_TENSOR_POINTS {
        return Err(Error::Budget(format!(
            "{m}^{d} quadrature nodes exceed the limit of {MAX_TENSOR_POINTS}"
        )));
    }
    let (nodes, weights) = gauss_legendre(m);
    let axes: Vec<Axis> = bounds
        .iter()
        .map(|&(lo, hi)| {
            let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
            Axis {
                x: nodes.iter().map(|v| mid + half * v).collect(),
                log_w: weights.iter().map(|w| (w * half).ln()).collect(),
            }
        })
        .collect();
    Ok(log_tensor_sum(&axes, &log_f))
}

/// One axis of a tensor rule: nodes and log weights.
struct Axis {
    x: Vec<f64>,
    log_w: Vec<f64>,
}

fn log_tensor_sum<F>(axes: &[Axis], log_f: &F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = axes.len();
    if d == 0 {
        return log_f(&[]);
    }
    // Split the grid on the first axis so each chunk is a deterministic unit.
    let partials: Vec<f64> = (0..axes[0].x.len())
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; d];
            idx[0] = first;
            let mut x = vec![0.0; d];
            let mut terms = Vec::new();
            loop {
                let mut lw = 0.0;
                for (k, &i) in idx.iter().enumerate() {
                    x[k] = axes[k].x[i];
                    lw += axes[k].log_w[i];
                }
                terms.push(lw + log_f(&x));
                // odometer over axes 1..d
                let mut k = 1;
                while k < d {
                    idx[k] += 1;
                    if idx[k] < axes[k].x.len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == d {
                    break;
                }
            }
            log_sum_exp(terms)
        })
        .collect();
    log_sum_exp(partials)
}

/// Outcome of a Monte Carlo mean of positive ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMean {
    /// `log` of the sample mean.
    pub log_mean: f64,
    /// Standard error divided by the mean.
    pub rel_se: f64,
    pub samples: u64,
}

/// Mean of `exp(draw(rng))` over `samples` draws.
///
/// Block `k` uses ChaCha stream `k` of `seed`, so results do not depend on the
/// number of worker threads.
pub fn mc_log_mean<F>(samples: u64, seed: u64, draw: F) -> McMean
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let samples = samples.max(2);
    let blocks = samples.div_ceil(MC_BLOCK as u64);
    let logs: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let len = (samples - b * MC_BLOCK as u64).min(MC_BLOCK as u64) as usize;
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    let max = logs
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return McMean {
            log_mean: f64::NEG_INFINITY,
            rel_se: 0.0,
            samples,
        };
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    for l in logs.iter().flatten() {
        let r = (l - max).exp();
        s1 += r;
        s2 += r * r;
    }
    let nf = samples as f64;
    let mean = s1 / nf;
    let var = ((s2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    McMean {
        log_mean: max + mean.ln(),
        rel_se: (var / nf).sqrt() / mean,
        samples,
    }
}

/// `log ∫_{ℝᵈ} F(x) dx` by importance sampling from `N(0, 1/(2·decay))` per axis.
pub fn mc_gaussian<F>(d: usize, decay: f64, samples: u64, seed: u64, log_f: F) -> McMean
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let sd = (0.5 / decay).sqrt();
    let log_norm = 0.5 * d as f64 * (decay / std::f64::consts::PI).ln();
    mc_log_mean(samples, seed, |rng| {
        let x: Vec<f64> = (0..d)
            .map(|_| {
                let g: f64 = StandardNormal.sample(rng);
                g * sd
            })
            .collect();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        log_f(&x) - (log_norm - decay * r2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(6);
        let m0: f64 = w.iter().sum();
        let m10: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((m0 - 2.0).abs() < 1e-14);
        assert!((m10 - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_tensor_box() {
        // ∫_{[0,2]×[1,3]} x·y² = 2 · 26/3
        let log = tensor_gauss_legendre(&[(0.0, 2.0), (1.0, 3.0)], 4, |x| {
            x[0].ln() + 2.0 * x[1].ln()
        })
        .unwrap();
        assert!((log.exp() - 52.0 / 3.0).abs() < 1e-12);
        let gauss = tensor_gauss_legendre(&[(0.0, 12.0)], 64, |x| -x[0] * x[0]).unwrap();
        assert!((gauss.exp() - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn hermite_rule_moments() {
        // ∫ x^{2k} e^{-x²} = Γ(k + 1/2)
        let (x, w) = gauss_hermite(10);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - sqrt_pi).abs() < 1e-13);
        assert!((m2 - sqrt_pi / 2.0).abs() < 1e-13);
        assert!((m4 - 0.75 * sqrt_pi).abs() < 1e-12);
    }

    #[test]
    fn hermite_three_point_nodes() {
        // H_3 roots: 0, ±√(3/2); weights √π·(1/6, 2/3, 1/6)
        let (x, w) = gauss_hermite(3);
        let r = 1.5f64.sqrt();
        assert!((x[0] + r).abs() < 1e-14 && x[1].abs() < 1e-14 && (x[2] - r).abs() < 1e-14);
        let sp = std::f64::consts::PI.sqrt();
        assert!((w[1] - 2.0 * sp / 3.0).abs() < 1e-14);
        assert!((w[0] - sp / 6.0).abs() < 1e-14);
    }

    #[test]
    fn shifted_gaussian_integral() {
        // ∫_{ℝ²} e^{-3|x - c|²} dx = π/3
        let c = [0.7, -1.2];
        let got = tensor_gauss_hermite(&[0.0, 0.0], 3.0, 40, |x| {
            -3.0 * ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2))
        })
        .unwrap();
        assert!((got.exp() - std::f64::consts::PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn tensor_budget_error() {
        let err = tensor_gauss_hermite(&[0.0; 8], 1.0, 20, |_| 0.0).unwrap_err();
        assert!(matches!(err, Error::Budget(_)));
    }

    #[test]
    fn monte_carlo_gaussian_moment() {
        // ∫_ℝ x² e^{-x²} dx = √π / 2
        let r = mc_gaussian(1, 0.5, 200_000, 7, |x| 2.0 * x[0].abs().ln() - x[0] * x[0]);
        let exact = std::f64::consts::PI.sqrt() / 2.0;
        let est = r.log_mean.exp();
        assert!((est - exact).abs() <= 3.0 * r.rel_se * est);
    }

    #[test]
    fn monte_carlo_is_bit_reproducible() {
        let f = |x: &[f64]| -x[0] * x[0] + x[1].cos();
        let a = mc_gaussian(2, 0.7, 50_000, 11, f);
        let b = mc_gaussian(2, 0.7, 50_000, 11, f);
        assert_eq!(a, b);
        let c = mc_gaussian(2, 0.7, 50_000, 12, f);
        assert_ne!(a.log_mean, c.log_mean);
    }
}
