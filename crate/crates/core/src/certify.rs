//! Numerical certificates: kernel lower bounds on operator distances, the
//! separation of distinct components and the closedness witnesses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::fock::{fock_norm, normalized_kernel, FockParams, NormEstimate, NormMethod};
use crate::linalg::{fixed_subspace, projector, random, svd, CMatrix, CVector};
use crate::operators::{
    apply, classify_composition, extract_psi_star, AffineMap, Regime, WeightedSymbol,
};
use crate::topology::matrices_equivalent;

/// Radii of the default test-point shells.
pub const SHELLS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];
pub const DIRECTIONS_PER_SHELL: usize = 16;

/// Origin plus `DIRECTIONS_PER_SHELL` seeded directions on each shell.
pub fn default_test_points(n: usize, seed: u64) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![CVector::zeros(n)];
    for r in SHELLS {
        for _ in 0..DIRECTIONS_PER_SHELL {
            pts.push(random::vector_with_norm(n, r, &mut rng));
        }
    }
    pts
}

/// `max_w ‖(W₁ − W₂) k_w‖_{n,q}`, a lower bound on `‖W₁ − W₂‖` because
/// `‖k_w‖_{n,p} = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceBound {
    pub estimate: NormEstimate,
    /// The test point achieving the reported estimate.
    pub witness: CVector,
    pub points: usize,
}

/// Sweeps `test_points`; per point the norm uses `NormMethod::Auto` with seed
/// `seed + index`. The reported point maximizes the lower end of the
/// estimate's interval.
pub fn op_distance_lower_bound(
    w1: &WeightedSymbol,
    w2: &WeightedSymbol,
    q: f64,
    test_points: &[CVector],
    samples: u64,
    seed: u64,
) -> Result<DistanceBound> {
    let n = w1.dim();
    check_dim(n, w2.dim())?;
    if test_points.is_empty() {
        return Err(Error::Input("no test points".into()));
    }
    let params = FockParams::new(n, q)?;
    let results: Vec<Result<NormEstimate>> = test_points
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            check_dim(n, w.dim())?;
            let k = normalized_kernel(w);
            let diff = apply(w1, &k)?.sub(&apply(w2, &k)?)?;
            let method = NormMethod::Auto {
                samples,
                seed: seed.wrapping_add(i as u64),
            };
            fock_norm(&diff, params, method)
        })
        .collect();
    let mut best: Option<(usize, NormEstimate)> = None;
    for (i, r) in results.into_iter().enumerate() {
        let est = r?;
        if best.is_none_or(|(_, b)| est.lower() > b.lower()) {
            best = Some((i, est));
        }
    }
    let (i, estimate) = best.expect("non-empty sweep");
    Ok(DistanceBound {
        estimate,
        witness: test_points[i].clone(),
        points: test_points.len(),
    })
}

/// Which symbol fixes the separating direction isometrically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    First,
    Second,
}

/// `‖C_φ₁ − C_φ₂‖ ≥ value` for maps with non-equivalent matrices.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationCertificate {
    pub value: f64,
    pub side: Side,
    /// Unit vector with `|Mξ| = |ξ|` for the fixing map `M`.
    pub xi: CVector,
    /// `|Aξ − Dξ|`.
    pub defect: f64,
    pub lambda: [f64; 2],
    /// `φ₁(λξ)` and `φ₂(λξ)`: at one of these kernels the distance is at
    /// least `value`.
    pub witness_points: [CVector; 2],
}

/// Grid `λ = 2^k`, `k = 0..=LAMBDA_STEPS`.
pub const LAMBDA_STEPS: i32 = 30;

/// `½ e^{|b|²/2} (1 − e^{−|φ(λξ) − ϕ(λξ)|²/2})`, maximized over the `λ` grid
/// and over which side fixes `ξ`.
pub fn separation_certificate(
    phi1: &AffineMap,
    phi2: &AffineMap,
    p: f64,
    q: f64,
    tol: f64,
) -> Result<SeparationCertificate> {
    check_dim(phi1.dim(), phi2.dim())?;
    if Regime::of(p, q) != Regime::PLeQ {
        return Err(Error::Unsupported(
            "separation only holds for p ≤ q; for q < p the space is connected".into(),
        ));
    }
    for (phi, which) in [(phi1, "first"), (phi2, "second")] {
        if !classify_composition(phi, p, q, tol)?.is_bounded() {
            return Err(Error::Unbounded(format!("{which} symbol is unbounded")));
        }
    }
    if matrices_equivalent(&phi1.a, &phi2.a, tol)? {
        return Err(Error::Domain(
            "A ~ D: the operators share a component, no separation".into(),
        ));
    }
    let mut best: Option<SeparationCertificate> = None;
    for (side, fix, other) in [(Side::First, phi1, phi2), (Side::Second, phi2, phi1)] {
        let Some((xi, defect)) = separating_direction(&fix.a, &other.a, tol)? else {
            continue;
        };
        let diff_a = fix.a.sub(&other.a).mul_vec(&xi);
        let diff_b = fix.b.sub(&other.b);
        // rotate λ so that λ(A − D)ξ points along b − e
        let c = diff_b.inner(&diff_a);
        let phase = if c.norm() > 0.0 { c / c.norm() } else { crate::linalg::c(1.0, 0.0) };
        let prefactor = 0.5 * (fix.b.norm_sqr() / 2.0).exp();
        for k in 0..=LAMBDA_STEPS {
            let lambda = phase * 2f64.powi(k);
            let gap = diff_a.scale(lambda).add(&diff_b).norm_sqr();
            let value = -prefactor * (-gap / 2.0).exp_m1();
            if best.as_ref().is_none_or(|b| value > b.value) {
                let z = xi.scale(lambda);
                let (w1, w2) = if side == Side::First {
                    (fix.apply(&z), other.apply(&z))
                } else {
                    (other.apply(&z), fix.apply(&z))
                };
                best = Some(SeparationCertificate {
                    value,
                    side,
                    xi: xi.clone(),
                    defect,
                    lambda: [lambda.re, lambda.im],
                    witness_points: [w1, w2],
                });
            }
        }
    }
    best.ok_or_else(|| Error::Domain("no separating direction found".into()))
}

/// Unit `ξ ∈ S_A` maximizing `|(A − D)ξ|`, or `None` when `S_A = {0}`.
fn separating_direction(a: &CMatrix, d: &CMatrix, tol: f64) -> Result<Option<(CVector, f64)>> {
    let basis = fixed_subspace(a, tol)?;
    if basis.is_empty() {
        return Ok(None);
    }
    let restricted = a.sub(d).mul(&projector(a.dim(), &basis));
    let f = svd(&restricted)?;
    let xi = f.u.adjoint().column(0);
    Ok(Some((xi, f.sigma[0])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WitnessCase {
    /// `ψ̃_*(0) ≠ 0`.
    Origin,
    /// `ψ̃_*` vanishes at the origin; a shifted point is used.
    Shifted,
}

/// Uniform lower bound on the distance from `W_{ψ,φ}` (`‖A‖ = 1`) to every
/// weighted operator with `‖A'‖ < 1`.
#[derive(Debug, Clone, Serialize)]
pub struct ClosednessWitness {
    pub value: f64,
    pub case: WitnessCase,
    /// The point `z'₀ ∈ ℂ^{n−j}` where `ψ̃_*` is evaluated.
    pub z0: CVector,
    /// `|ψ̃_*(z'₀)|`.
    pub psi_star_value: f64,
    /// Kernel centres `φ(U*(λe₁ + (0, z'₀)))`, `λ = 1, 2, 4, 8, 16`, at which
    /// the bound is approached.
    pub points: Vec<CVector>,
}

/// Random candidates tried after the coordinate directions.
const SHIFT_CANDIDATES: usize = 64;

pub fn closedness_witness(
    w: &WeightedSymbol,
    p: f64,
    q: f64,
    tol: f64,
    seed: u64,
) -> Result<ClosednessWitness> {
    if Regime::of(p, q) != Regime::PLeQ {
        return Err(Error::Unsupported("closedness witnesses need p ≤ q".into()));
    }
    let ps = extract_psi_star(w, tol, seed)?;
    let nz = &ps.normalization;
    let (n, j) = (w.dim(), ps.j);
    let m = n - j;
    let scale = ps
        .psi_star
        .terms()
        .iter()
        .map(|t| t.coeff.norm())
        .fold(0.0, f64::max);
    let nonzero = |z: &CVector| -> Result<Option<f64>> {
        let v = ps.psi_star.evaluate(z)?.norm();
        Ok((v > 1e-12 * scale).then_some(v))
    };
    let origin = CVector::zeros(m);
    let mut found = nonzero(&origin)?.map(|v| (origin.clone(), v, WitnessCase::Origin));
    if found.is_none() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let candidates = (0..m)
            .map(|k| CVector::basis(m, k))
            .chain((0..SHIFT_CANDIDATES).map(|_| random::vector_with_norm(m, 1.0, &mut rng)));
        for z in candidates {
            if let Some(v) = nonzero(&z)? {
                found = Some((z, v, WitnessCase::Shifted));
                break;
            }
        }
    }
    let (z0, psi_star_value, case) = found.ok_or_else(|| {
        Error::NotBoundedCompatible("ψ̃_* vanishes at every probed point".into())
    })?;
    let shifted = CVector::zeros(j).concat(&z0);
    let b0 = nz.phi_tilde().apply(&shifted);
    let value = psi_star_value * ((b0.norm_sqr() - z0.norm_sqr()) / 2.0).exp();
    let points = [1.0, 2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&lambda| {
            let z = CVector::basis(n, 0).scale_real(lambda).add(&shifted);
            w.phi.apply(&nz.u.adjoint().mul_vec(&z))
        })
        .collect();
    Ok(ClosednessWitness {
        value,
        case,
        z0,
        psi_star_value,
        points,
    })
}
