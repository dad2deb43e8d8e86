//! Affine symbols, weighted symbols and what can be decided about them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fock::{fock_norm, kernel, FockParams, NormEstimate, NormMethod, SymbolFn};
use crate::integrate::log_sum_exp;
use crate::linalg::{
    self, c, fixed_subspace, operator_norm, orthonormalize, random, CMatrix, CVector, C64,
};

/// `φ(z) = Az + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    #[serde(rename = "A")]
    pub a: CMatrix,
    pub b: CVector,
}

impl AffineMap {
    pub fn new(a: CMatrix, b: CVector) -> Result<Self> {
        check_dim(a.dim(), b.dim())?;
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Input("affine map has non-finite entries".into()));
        }
        Ok(AffineMap { a, b })
    }

    pub fn identity(n: usize) -> Self {
        AffineMap {
            a: CMatrix::identity(n),
            b: CVector::zeros(n),
        }
    }

    pub fn linear(a: CMatrix) -> Self {
        let n = a.dim();
        AffineMap {
            a,
            b: CVector::zeros(n),
        }
    }

    /// The constant map `z ↦ b`.
    pub fn constant(b: CVector) -> Self {
        AffineMap {
            a: CMatrix::zeros(b.dim()),
            b,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn apply(&self, z: &CVector) -> CVector {
        self.a.mul_vec(z).add(&self.b)
    }

    pub fn norm(&self) -> f64 {
        operator_norm(&self.a)
    }

    pub fn approx_eq(&self, other: &AffineMap, tol: f64) -> bool {
        self.dim() == other.dim()
            && self.a.max_abs_diff(&other.a) <= tol
            && self.b.sub(&other.b).norm() <= tol
    }
}

/// A pair `(ψ, φ)` inducing `W_{ψ,φ} f = ψ·(f∘φ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedSymbol {
    pub psi: SymbolFn,
    pub phi: AffineMap,
}

impl WeightedSymbol {
    pub fn new(psi: SymbolFn, phi: AffineMap) -> Result<Self> {
        check_dim(phi.dim(), psi.dim())?;
        if psi.is_zero() {
            return Err(Error::Input("weight ψ must be nonzero".into()));
        }
        Ok(WeightedSymbol { psi, phi })
    }

    /// `C_φ`, i.e. `ψ ≡ 1`.
    pub fn composition(phi: AffineMap) -> Self {
        WeightedSymbol {
            psi: SymbolFn::one(phi.dim()),
            phi,
        }
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn is_composition(&self) -> bool {
        self.psi == SymbolFn::one(self.dim())
    }
}

/// `W_{ψ,φ} f = ψ · (f ∘ φ)`.
pub fn apply(w: &WeightedSymbol, f: &SymbolFn) -> Result<SymbolFn> {
    w.psi.multiply(&f.compose_affine(&w.phi.a, &w.phi.b)?)
}

/// `(ψ̃, φ̃)` with `A = V·diag(ã)·U`, `ψ̃ = ψ(U*·)`, `b̃ = V*b`.
#[derive(Debug, Clone, Serialize)]
pub struct Normalization {
    #[serde(rename = "U")]
    pub u: CMatrix,
    #[serde(rename = "V")]
    pub v: CMatrix,
    pub a_tilde: Vec<f64>,
    pub b_tilde: CVector,
    pub psi_tilde: SymbolFn,
    /// `rank A`.
    pub s: usize,
    /// Number of singular values equal to one.
    pub j: usize,
    pub tol: f64,
}

impl Normalization {
    pub fn a_tilde_matrix(&self) -> CMatrix {
        CMatrix::diag_real(&self.a_tilde)
    }

    pub fn phi_tilde(&self) -> AffineMap {
        AffineMap {
            a: self.a_tilde_matrix(),
            b: self.b_tilde.clone(),
        }
    }

    pub fn symbol(&self) -> WeightedSymbol {
        WeightedSymbol {
            psi: self.psi_tilde.clone(),
            phi: self.phi_tilde(),
        }
    }

    /// `C_U W_{ψ̃,φ̃} C_V f`, built step by step from the factors.
    pub fn conjugated_apply(&self, f: &SymbolFn) -> Result<SymbolFn> {
        let n = f.dim();
        let zero = CVector::zeros(n);
        let cv = f.compose_affine(&self.v, &zero)?;
        let inner = apply(&self.symbol(), &cv)?;
        inner.compose_affine(&self.u, &zero)
    }
}

/// Already diagonal with real, nonnegative, nonincreasing entries.
fn is_normal_form(a: &CMatrix) -> bool {
    let n = a.dim();
    for i in 0..n {
        for k in 0..n {
            let x = a.get(i, k);
            if i != k && x != c(0.0, 0.0) {
                return false;
            }
            if i == k && (x.im != 0.0 || x.re < 0.0 || (i > 0 && x.re > a.get(i - 1, i - 1).re)) {
                return false;
            }
        }
    }
    true
}

pub fn normalize(w: &WeightedSymbol, tol: f64) -> Result<Normalization> {
    let n = w.dim();
    let a = &w.phi.a;
    let (v, sigma, u) = if is_normal_form(a) {
        let d = (0..n).map(|i| a.get(i, i).re).collect();
        (CMatrix::identity(n), d, CMatrix::identity(n))
    } else {
        let f = linalg::svd(a)?;
        (f.v, f.sigma, f.u)
    };
    if sigma[0] > 1.0 + tol {
        return Err(Error::Domain(format!(
            "symbol cannot induce a bounded operator: ‖A‖ = {} > 1",
            sigma[0]
        )));
    }
    let j = sigma.iter().filter(|&&x| x >= 1.0 - tol).count();
    let s = sigma.iter().filter(|&&x| x > tol).count();
    let psi_tilde = w.psi.compose_affine(&u.adjoint(), &CVector::zeros(n))?;
    Ok(Normalization {
        b_tilde: v.adjoint().mul_vec(&w.phi.b),
        a_tilde: sigma,
        psi_tilde,
        u,
        v,
        s,
        j,
        tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Unbounded,
    BoundedNotCompact,
    Compact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `p ≤ q`.
    #[serde(rename = "p<=q")]
    PLeQ,
    /// `q < p`.
    #[serde(rename = "q<p")]
    QLtP,
}

impl Regime {
    pub fn of(p: f64, q: f64) -> Self {
        if q < p {
            Regime::QLtP
        } else {
            Regime::PLeQ
        }
    }
}

/// Classification of `C_φ : F^p → F^q` with the evidence behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub regime: Regime,
    /// Distance of the deciding quantity from its threshold.
    pub margin: f64,
    pub tol: f64,
    pub op_norm: f64,
    /// `‖P b‖` with `P` the projector onto `A(S_A)`, when it was needed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<f64>,
}

impl Verdict {
    pub fn is_bounded(&self) -> bool {
        self.kind != VerdictKind::Unbounded
    }
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("exponents must lie in (0, ∞), got p = {p}, q = {q}")))
    }
}

/// Orthonormal basis of `A(S_A)`; `A` is isometric on `S_A`.
pub(crate) fn image_basis(a: &CMatrix, tol: f64) -> Result<Vec<CVector>> {
    let s = fixed_subspace(a, tol)?;
    let images: Vec<CVector> = s.iter().map(|z| a.mul_vec(z)).collect();
    Ok(orthonormalize(&images, 1e-6))
}

pub(crate) fn project(basis: &[CVector], b: &CVector) -> CVector {
    basis
        .iter()
        .fold(CVector::zeros(b.dim()), |acc, q| acc.add(&q.scale(b.inner(q))))
}

/// Threshold for `‖P b‖ = 0`.
pub(crate) fn projection_threshold(tol: f64, b: &CVector) -> f64 {
    10.0 * tol * (1.0 + b.norm())
}

pub fn classify_composition(phi: &AffineMap, p: f64, q: f64, tol: f64) -> Result<Verdict> {
    check_exponents(p, q)?;
    if !phi.a.is_finite() || !phi.b.is_finite() {
        return Err(Error::Input("affine map has non-finite entries".into()));
    }
    let norm = phi.norm();
    let regime = Regime::of(p, q);
    let verdict = |kind, margin, projection| Verdict {
        kind,
        regime,
        margin,
        tol,
        op_norm: norm,
        projection,
    };
    if norm > 1.0 + tol {
        return Ok(verdict(VerdictKind::Unbounded, norm - 1.0, None));
    }
    if norm < 1.0 - tol {
        return Ok(verdict(VerdictKind::Compact, 1.0 - norm, None));
    }
    if regime == Regime::QLtP {
        return Ok(verdict(VerdictKind::Unbounded, (norm - (1.0 - tol)).max(0.0), None));
    }
    let proj = project(&image_basis(&phi.a, tol)?, &phi.b).norm();
    let threshold = projection_threshold(tol, &phi.b);
    if proj <= threshold {
        Ok(verdict(VerdictKind::BoundedNotCompact, threshold - proj, Some(proj)))
    } else {
        Ok(verdict(VerdictKind::Unbounded, proj - threshold, Some(proj)))
    }
}

/// `log m_z(ψ, φ) = log|ψ(z)| + (|φ(z)|² − |z|²)/2`.
pub fn log_m_quantity(w: &WeightedSymbol, z: &CVector) -> Result<f64> {
    check_dim(w.dim(), z.dim())?;
    Ok(w.psi.log_abs(z)? + (w.phi.apply(z).norm_sqr() - z.norm_sqr()) / 2.0)
}

/// `m_z(ψ, φ) = |ψ(z)| e^{(|φ(z)|² − |z|²)/2}`.
pub fn m_quantity(w: &WeightedSymbol, z: &CVector) -> Result<f64> {
    Ok(log_m_quantity(w, z)?.exp())
}

/// Heuristic estimate of `m(ψ, φ) = sup_z m_z`.
#[derive(Debug, Clone, Serialize)]
pub struct SupEstimate {
    pub value: f64,
    pub log_value: f64,
    pub argmax: CVector,
    /// Still growing at the outermost search radius.
    pub diverging: bool,
    /// Best `log m` found inside each search radius.
    pub by_radius: Vec<(f64, f64)>,
    pub heuristic: bool,
}

pub const M_SUP_STARTS: usize = 32;
pub const M_SUP_RADII: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

/// Multi-start projected gradient ascent of `log m_z` on balls of growing radius.
pub fn m_sup_estimate(w: &WeightedSymbol, seed: u64) -> Result<SupEstimate> {
    let n = w.dim();
    let derivs: Vec<SymbolFn> = (0..n)
        .map(|i| w.psi.partial_derivative(i))
        .collect::<Result<_>>()?;
    let adj = w.phi.a.adjoint();
    let value = |z: &CVector| log_m_quantity(w, z).unwrap_or(f64::NEG_INFINITY);
    // ∇ of log|ψ| + |Az+b|²/2 − |z|²/2 as a complex vector (∂x + i∂y)
    let grad = |z: &CVector| -> CVector {
        let psi = w.psi.evaluate(z).unwrap_or(c(0.0, 0.0));
        let mut g = adj.mul_vec(&w.phi.apply(z)).sub(z);
        if psi.norm() > 0.0 {
            let log_grad: Vec<C64> = derivs
                .iter()
                .map(|d| (d.evaluate(z).unwrap_or(c(0.0, 0.0)) / psi).conj())
                .collect();
            g = g.add(&CVector::from_vec(log_grad));
        }
        g
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![CVector::zeros(n)];
    while starts.len() < M_SUP_STARTS {
        let r = M_SUP_RADII[0] * (starts.len() as f64 / M_SUP_STARTS as f64);
        starts.push(random::vector_with_norm(n, r, &mut rng));
    }
    let mut by_radius = Vec::new();
    let mut best = (f64::NEG_INFINITY, CVector::zeros(n));
    for &radius in &M_SUP_RADII {
        let results: Vec<(f64, CVector)> = starts
            .par_iter()
            .map(|z0| ascend(z0.clone(), radius, &value, &grad))
            .collect();
        for (v, z) in &results {
            if *v > best.0 {
                best = (*v, z.clone());
            }
        }
        by_radius.push((radius, best.0));
        // later radii restart from the optimisers found so far
        starts = results.into_iter().map(|r| r.1).collect();
    }
    let outer = M_SUP_RADII[M_SUP_RADII.len() - 1];
    let prev = by_radius[by_radius.len() - 2].1;
    let on_shell = best.1.norm() >= outer * (1.0 - 1e-3);
    let growing = best.0 > prev + 1e-6 * (1.0 + prev.abs());
    Ok(SupEstimate {
        value: best.0.exp(),
        log_value: best.0,
        argmax: best.1,
        diverging: on_shell && growing,
        by_radius,
        heuristic: true,
    })
}

fn clamp_to_ball(z: CVector, radius: f64) -> CVector {
    let r = z.norm();
    if r > radius {
        z.scale_real(radius / r)
    } else {
        z
    }
}

fn ascend(
    mut z: CVector,
    radius: f64,
    value: &(impl Fn(&CVector) -> f64 + Sync),
    grad: &(impl Fn(&CVector) -> CVector + Sync),
) -> (f64, CVector) {
    z = clamp_to_ball(z, radius);
    let mut v = value(&z);
    let mut step = 0.5;
    for _ in 0..300 {
        let g = grad(&z);
        let gn = g.norm();
        if !gn.is_finite() || gn < 1e-12 {
            break;
        }
        let mut improved = false;
        while step > 1e-10 {
            let cand = clamp_to_ball(z.add(&g.scale_real(step / gn.max(1.0))), radius);
            let cv = value(&cand);
            if cv > v {
                let moved = cand.sub(&z).norm();
                z = cand;
                v = cv;
                improved = moved > 1e-12;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (v, z)
}

/// Diagonal, real, nonnegative and nonincreasing (the normal form of a symbol).
fn check_normalized(w: &WeightedSymbol) -> Result<Vec<f64>> {
    let a = &w.phi.a;
    let n = a.dim();
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        for k in 0..n {
            let x = a.get(i, k);
            let bad = if i == k {
                x.im.abs() > 1e-12 || x.re < -1e-12 || (i > 0 && x.re > d[i - 1] + 1e-12)
            } else {
                x.norm() > 1e-12
            };
            if bad {
                return Err(Error::Input(
                    "ℓ needs a normalized symbol (diagonal, nonnegative, nonincreasing)".into(),
                ));
            }
        }
        d.push(a.get(i, i).re);
    }
    Ok(d)
}

/// `ℓ_{z_[s]}(ψ, φ) = e^{(|φ(z)|² − |z_[s]|²)/2} ‖ψ(z_[s], ·)‖_{n−s,q}`
/// for a normalized symbol; for `s = n` the norm is `|ψ(z)|`.
pub fn ell_quantity(
    w: &WeightedSymbol,
    z_slice: &CVector,
    q: f64,
    method: NormMethod,
) -> Result<NormEstimate> {
    let d = check_normalized(w)?;
    let n = w.dim();
    let s = d.iter().filter(|&&x| x > 0.0).count();
    if s == 0 {
        return Err(Error::Domain(
            "ℓ is undefined for a constant map (s = 0); use m_quantity".into(),
        ));
    }
    check_dim(s, z_slice.dim())?;
    let z = z_slice.concat(&CVector::zeros(n - s));
    let log_factor = (w.phi.apply(&z).norm_sqr() - z_slice.norm_sqr()) / 2.0;
    let scale = log_factor.exp();
    if s == n {
        let v = w.psi.log_abs(&z)?.exp();
        return Ok(NormEstimate {
            value: v * scale,
            abs_error: 0.0,
            method: crate::fock::NormMethodKind::Analytic,
            samples_or_nodes: 0,
            seed: None,
        });
    }
    let slice = w.psi.fix_leading(z_slice)?;
    let norm = fock_norm(&slice, FockParams::new(n - s, q)?, method)?;
    Ok(NormEstimate {
        value: norm.value * scale,
        abs_error: norm.abs_error * scale,
        ..norm
    })
}

/// Heuristic check of `ℓ ∈ L^{pq/(p−q)}(ℂˢ)`.
#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityEstimate {
    /// `(r0, r1, log ∫_{r0<|z|<r1} ℓ^r dA)` per shell.
    pub shells: Vec<(f64, f64, f64)>,
    pub log_total: f64,
    /// Share of the truncated integral carried by the outermost shell.
    pub outer_fraction: f64,
    pub non_integrable: bool,
    pub heuristic: bool,
}

pub const ELL_SHELLS: [(f64, f64); 4] = [(0.0, 2.0), (2.0, 4.0), (4.0, 8.0), (8.0, 16.0)];

/// Monte Carlo over the shells of `ELL_SHELLS`; flags non-integrability when
/// the outermost shell carries more than half of the truncated integral.
pub fn ell_integrability_estimate(
    w: &WeightedSymbol,
    p: f64,
    q: f64,
    samples_per_shell: usize,
    seed: u64,
) -> Result<IntegrabilityEstimate> {
    if Regime::of(p, q) != Regime::QLtP {
        return Err(Error::Input("ℓ-integrability is the q < p criterion".into()));
    }
    let d = check_normalized(w)?;
    let s = d.iter().filter(|&&x| x > 0.0).count();
    if s == 0 {
        return Err(Error::Domain("ℓ is undefined for a constant map (s = 0)".into()));
    }
    let r = p * q / (p - q);
    let dim_real = 2 * s;
    let mut shells = Vec::new();
    for (k, &(r0, r1)) in ELL_SHELLS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut logs = Vec::with_capacity(samples_per_shell);
        for i in 0..samples_per_shell {
            // radius with density ∝ ρ^{2s−1} on [r0, r1]
            use rand::Rng;
            let u: f64 = rng.random();
            let a0 = r0.powi(dim_real as i32);
            let a1 = r1.powi(dim_real as i32);
            let rho = (a0 + u * (a1 - a0)).powf(1.0 / dim_real as f64);
            let z = random::vector_with_norm(s, rho, &mut rng);
            let method = NormMethod::Auto {
                samples: 4_000,
                seed: seed ^ ((k as u64) << 32 | i as u64),
            };
            let ell = ell_quantity(w, &z, q, method)?;
            logs.push(r * ell.value.ln());
        }
        let log_mean = log_sum_exp(logs) - (samples_per_shell as f64).ln();
        let log_vol = s as f64 * std::f64::consts::PI.ln() - ln_factorial(s)
            + (r1.powi(dim_real as i32) - r0.powi(dim_real as i32)).ln();
        shells.push((r0, r1, log_mean + log_vol));
    }
    let log_total = log_sum_exp(shells.iter().map(|s| s.2));
    let outer_fraction = (shells[shells.len() - 1].2 - log_total).exp();
    Ok(IntegrabilityEstimate {
        shells,
        log_total,
        outer_fraction,
        non_integrable: outer_fraction > 0.5 || !log_total.is_finite(),
        heuristic: true,
    })
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// `ψ̃ = e^{−⟨z_[j], b̃_[j]⟩} ψ̃_*(z'_[j])`, verified numerically.
#[derive(Debug, Clone, Serialize)]
pub struct PsiStar {
    pub j: usize,
    pub b_tilde_head: CVector,
    /// Function of the last `n − j` coordinates.
    pub psi_star: SymbolFn,
    /// Largest relative variation of `ψ̃·e^{⟨z_[j], b̃_[j]⟩}` in `z_[j]`.
    pub residual: f64,
    pub normalization: Normalization,
}

pub const PSI_STAR_RESIDUAL: f64 = 1e-9;

pub fn extract_psi_star(w: &WeightedSymbol, tol: f64, seed: u64) -> Result<PsiStar> {
    let nz = normalize(w, tol)?;
    let j = nz.j;
    if j == 0 {
        return Err(Error::Domain("ψ̃_* is defined only when ‖A‖ = 1".into()));
    }
    let head = nz.b_tilde.head(j);
    if w.is_composition() && head.norm() > PSI_STAR_RESIDUAL * (1.0 + w.phi.b.norm()) {
        return Err(Error::NotBoundedCompatible(format!(
            "ψ ≡ 1 forces b̃_i = 0 for i ≤ j, but |b̃_[j]| = {:e}",
            head.norm()
        )));
    }
    let (psi_star, residual) = split_weight(&nz.psi_tilde, &head, seed)?;
    Ok(PsiStar {
        j,
        b_tilde_head: head,
        psi_star,
        residual,
        normalization: nz,
    })
}

/// Splits a normal-frame weight as `ψ̃ = e^{−⟨z_[j], h⟩}·ψ_*(z'_[j])` with
/// `j = dim h`, returning `ψ_*` and the measured relative dependence of
/// `ψ̃·e^{⟨z_[j], h⟩}` on `z_[j]` (100 seeded probes).
pub fn split_weight(psi_tilde: &SymbolFn, head: &CVector, seed: u64) -> Result<(SymbolFn, f64)> {
    let (n, j) = (psi_tilde.dim(), head.dim());
    if j > n {
        return Err(Error::Dimension { expected: n, got: j });
    }
    let shift = kernel(&head.concat(&CVector::zeros(n - j)));
    let g = psi_tilde.multiply(&shift)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residual: f64 = 0.0;
    for _ in 0..10 {
        let tail = random::vector(n - j, &mut rng);
        let base = g.evaluate(&CVector::zeros(j).concat(&tail))?;
        for _ in 0..10 {
            let lead = random::vector(j, &mut rng).scale_real(2.0);
            let v = g.evaluate(&lead.concat(&tail))?;
            let scale = base.norm().max(v.norm());
            if scale > 1e-300 {
                residual = residual.max((v - base).norm() / scale);
            }
        }
    }
    if residual >= PSI_STAR_RESIDUAL {
        return Err(Error::NotBoundedCompatible(format!(
            "ψ̃·e^{{⟨z_[j], b̃_[j]⟩}} depends on z_[j] (relative variation {residual:e})"
        )));
    }
    let psi_star = g.fix_leading(&CVector::zeros(j))?;
    if psi_star.is_zero() {
        return Err(Error::NotBoundedCompatible("ψ̃_* vanishes identically".into()));
    }
    Ok((psi_star, residual))
}

/// Builds `ψ(z) = ψ̃(Uz)` from normal-frame data: `ψ̃ = e^{−⟨z_[j], h⟩}·ψ_*(z'_[j])`.
pub fn weight_from_normal_frame(
    u: &CMatrix,
    head: &CVector,
    psi_star: &SymbolFn,
) -> Result<SymbolFn> {
    let j = head.dim();
    let n = j + psi_star.dim();
    check_dim(n, u.dim())?;
    let lead = kernel(&head.scale_real(-1.0).concat(&CVector::zeros(n - j)));
    let tilde = lead.multiply(&psi_star.embed(n, j)?)?;
    tilde.compose_affine(u, &CVector::zeros(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::normalized_kernel;
    use crate::linalg::DEFAULT_TOL;
    use proptest::prelude::*;

    const TOL: f64 = DEFAULT_TOL;

    fn diag(d: &[f64], b: &[f64]) -> AffineMap {
        AffineMap::new(CMatrix::diag_real(d), CVector::from_real(b)).unwrap()
    }

    #[test]
    fn classify_examples() {
        let zero = AffineMap::constant(CVector::from_real(&[1.0, 0.0]));
        for (p, q) in [(2.0, 2.0), (1.0, 3.0), (3.0, 1.0)] {
            let v = classify_composition(&zero, p, q, TOL).unwrap();
            assert_eq!(v.kind, VerdictKind::Compact);
            assert!((v.margin - 1.0).abs() < 1e-15);
        }
        // ⟨A e₁, b⟩ = 1 ≠ 0
        let v = classify_composition(&diag(&[1.0, 0.5], &[1.0, 0.0]), 2.0, 2.0, TOL).unwrap();
        assert_eq!(v.kind, VerdictKind::Unbounded);
        assert!((v.projection.unwrap() - 1.0).abs() < 1e-12);
        let v = classify_composition(&diag(&[1.0, 0.5], &[0.0, 1.0]), 2.0, 2.0, TOL).unwrap();
        assert_eq!(v.kind, VerdictKind::BoundedNotCompact);
        assert!(v.margin >= 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = AffineMap::linear(random::unitary(3, &mut rng));
        assert_eq!(classify_composition(&u, 2.0, 1.0, TOL).unwrap().kind, VerdictKind::Unbounded);
        assert_eq!(
            classify_composition(&u, 1.0, 2.0, TOL).unwrap().kind,
            VerdictKind::BoundedNotCompact
        );
        let big = diag(&[1.5, 0.0], &[0.0, 0.0]);
        let v = classify_composition(&big, 2.0, 2.0, TOL).unwrap();
        assert_eq!(v.kind, VerdictKind::Unbounded);
        assert!((v.margin - 0.5).abs() < 1e-12);
        assert!(classify_composition(&big, -1.0, 2.0, TOL).is_err());
    }

    #[test]
    fn normalize_examples() {
        let w = WeightedSymbol::composition(diag(&[0.8, 0.3], &[1.0, -2.0]));
        let nz = normalize(&w, TOL).unwrap();
        assert_eq!(nz.u, CMatrix::identity(2));
        assert_eq!(nz.b_tilde, w.phi.b);
        assert_eq!(nz.psi_tilde, SymbolFn::one(2));
        // [[0, 0.5], [0, 0]]: A*A = diag(0, 0.25)
        let a = CMatrix::from_real_rows(&[&[0.0, 0.5], &[0.0, 0.0]]).unwrap();
        let nz = normalize(&WeightedSymbol::composition(AffineMap::linear(a)), TOL).unwrap();
        assert!((nz.a_tilde[0] - 0.5).abs() < 1e-15 && nz.a_tilde[1].abs() < 1e-15);
        assert_eq!((nz.s, nz.j), (1, 0));
        let big = WeightedSymbol::composition(diag(&[1.1], &[0.0]));
        assert!(matches!(normalize(&big, TOL), Err(Error::Domain(_))));
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random::with_norm(3, 0.9, &mut rng);
        let b = random::vector(3, &mut rng);
        let psi = kernel(&random::vector(3, &mut rng));
        let w = WeightedSymbol::new(psi, AffineMap::new(a, b).unwrap()).unwrap();
        let once = normalize(&w, TOL).unwrap();
        let twice = normalize(&once.symbol(), TOL).unwrap();
        assert_eq!(twice.a_tilde, once.a_tilde);
        assert_eq!(twice.b_tilde, once.b_tilde);
        assert!(twice.psi_tilde.approx_eq(&once.psi_tilde, 1e-15));
    }

    #[test]
    fn apply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = kernel(&random::vector(2, &mut rng)).add(&SymbolFn::coordinate(2, 1)).unwrap();
        let id = WeightedSymbol::composition(AffineMap::identity(2));
        assert!(apply(&id, &f).unwrap().approx_eq(&f, 1e-15));
        // C_φ k_w = e^{−|w|²/2} e^{⟨b,w⟩} K_{A*w}
        let phi = AffineMap::new(random::matrix(2, &mut rng), random::vector(2, &mut rng)).unwrap();
        let w = random::vector(2, &mut rng);
        let got = apply(&WeightedSymbol::composition(phi.clone()), &normalized_kernel(&w)).unwrap();
        let factor = (c(-w.norm_sqr() / 2.0, 0.0) + phi.b.inner(&w)).exp();
        let expected = kernel(&phi.a.adjoint().mul_vec(&w)).scale(factor);
        assert!(got.approx_eq(&expected, 1e-14));
        // ψ = K_c, f = 1
        let kc = kernel(&w);
        let wk = WeightedSymbol::new(kc.clone(), phi).unwrap();
        assert_eq!(apply(&wk, &SymbolFn::one(2)).unwrap(), kc);
    }

    #[test]
    fn m_quantity_examples() {
        let id = WeightedSymbol::composition(AffineMap::identity(2));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = random::vector(2, &mut rng);
        assert!((m_quantity(&id, &z).unwrap() - 1.0).abs() < 1e-15);
        let est = m_sup_estimate(&id, 1).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12 && !est.diverging);
        // ψ = 1, φ = z + 1 diverges along the positive real axis
        let shift = WeightedSymbol::composition(diag(&[1.0], &[1.0]));
        let along: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&t| m_quantity(&shift, &CVector::from_real(&[t])).unwrap())
            .collect();
        assert!(along[0] < along[1] && along[1] < along[2]);
        assert!(m_sup_estimate(&shift, 1).unwrap().diverging);
        // ψ = e^{−⟨z,b⟩}, φ = z + b: m_z ≡ e^{|b|²/2}
        let b = CVector::from_vec(vec![c(0.6, -0.8)]);
        let w = WeightedSymbol::new(
            kernel(&b.scale_real(-1.0)),
            AffineMap::new(CMatrix::identity(1), b.clone()).unwrap(),
        )
        .unwrap();
        for _ in 0..100 {
            let z = random::vector(1, &mut rng).scale_real(5.0);
            assert!((m_quantity(&w, &z).unwrap() - 0.5f64.exp()).abs() < 1e-12);
        }
        let est = m_sup_estimate(&w, 2).unwrap();
        assert!(!est.diverging);
        assert!((est.value - 0.5f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn m_sup_of_compact_symbol() {
        // ψ = 1, φ = z/2 + 1: log m_z = (|z/2+1|² − |z|²)/2, max at z = 2/3, value e^{2/3}
        let w = WeightedSymbol::composition(diag(&[0.5], &[1.0]));
        let est = m_sup_estimate(&w, 3).unwrap();
        assert!(!est.diverging);
        assert!((est.log_value - 2.0 / 3.0).abs() < 1e-8, "{}", est.log_value);
    }

    #[test]
    fn ell_examples() {
        // s = n: ℓ_z = m_z
        let w = WeightedSymbol::new(
            kernel(&CVector::from_real(&[0.3, 0.1])),
            diag(&[0.9, 0.4], &[0.2, 0.0]),
        )
        .unwrap();
        let z = CVector::from_vec(vec![c(0.5, 0.5), c(-1.0, 0.0)]);
        let ell = ell_quantity(&w, &z, 1.0, NormMethod::ExactGram).unwrap();
        assert!((ell.value - m_quantity(&w, &z).unwrap()).abs() < 1e-14);
        // ψ = 1, φ = a z: ℓ_z = e^{(a²−1)|z|²/2}
        let a = 0.6;
        let w = WeightedSymbol::composition(diag(&[a], &[0.0]));
        let z = CVector::from_real(&[1.7]);
        let ell = ell_quantity(&w, &z, 1.0, NormMethod::ExactGram).unwrap();
        assert!((ell.value - ((a * a - 1.0) * 1.7 * 1.7 / 2.0).exp()).abs() < 1e-15);
        let est = ell_integrability_estimate(&w, 2.0, 1.0, 200, 1).unwrap();
        assert!(!est.non_integrable);
        // s < n: slice norm over ℂ^{n−s}; ψ = K_{(0, 1)} gives ‖K_1‖_q = e^{1/2}
        let w = WeightedSymbol::new(kernel(&CVector::from_real(&[0.0, 1.0])), diag(&[0.5, 0.0], &[0.0, 0.0]))
            .unwrap();
        let z = CVector::from_real(&[1.0]);
        let ell = ell_quantity(&w, &z, 3.0, NormMethod::Auto { samples: 10, seed: 0 }).unwrap();
        let expected = ((0.25 - 1.0) / 2.0 + 0.5f64).exp();
        assert!((ell.value - expected).abs() < 1e-14);
        let constant = WeightedSymbol::composition(AffineMap::constant(CVector::zeros(1)));
        assert!(matches!(
            ell_quantity(&constant, &CVector::zeros(0), 1.0, NormMethod::ExactGram),
            Err(Error::Domain(_)) | Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn ell_flags_isometric_direction() {
        // ã₁₁ = 1 and ψ independent of z₁: ℓ constant in z₁
        let w = WeightedSymbol::composition(diag(&[1.0, 0.0], &[0.0, 0.0]));
        let est = ell_integrability_estimate(&w, 2.0, 1.0, 100, 2).unwrap();
        assert!(est.non_integrable, "{est:?}");
    }

    #[test]
    fn extract_examples() {
        let id = WeightedSymbol::composition(AffineMap::identity(3));
        let ps = extract_psi_star(&id, TOL, 1).unwrap();
        assert_eq!(ps.j, 3);
        assert_eq!(ps.psi_star.dim(), 0);
        assert!(ps.residual < 1e-12);
        // ψ = e^{−⟨z₁, h⟩}·K_{(0, c)}, Ã = diag(1, 0.5), b̃ = (h, 0.3)
        let h = CVector::from_vec(vec![c(0.4, 0.2)]);
        let cc = CVector::from_vec(vec![c(-0.7, 0.1)]);
        let psi = weight_from_normal_frame(&CMatrix::identity(2), &h, &kernel(&cc)).unwrap();
        let phi = AffineMap::new(
            CMatrix::diag_real(&[1.0, 0.5]),
            h.concat(&CVector::from_real(&[0.3])),
        )
        .unwrap();
        let ps = extract_psi_star(&WeightedSymbol::new(psi, phi).unwrap(), TOL, 2).unwrap();
        assert_eq!(ps.j, 1);
        assert!(ps.psi_star.approx_eq(&kernel(&cc), 1e-14));
        assert!(ps.b_tilde_head.sub(&h).norm() < 1e-15);
        // ψ = z₁ with A = I
        let bad = WeightedSymbol::new(SymbolFn::coordinate(2, 0), AffineMap::identity(2)).unwrap();
        assert!(matches!(extract_psi_star(&bad, TOL, 3), Err(Error::NotBoundedCompatible(_))));
        // ψ ≡ 1 with b̃_[j] ≠ 0
        let shifted = WeightedSymbol::composition(diag(&[1.0], &[0.5]));
        assert!(matches!(
            extract_psi_star(&shifted, TOL, 4),
            Err(Error::NotBoundedCompatible(_))
        ));
        let compact = WeightedSymbol::composition(diag(&[0.5], &[0.0]));
        assert!(matches!(extract_psi_star(&compact, TOL, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn conjugation_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random::with_norm(2, 0.95, &mut rng);
        let w = WeightedSymbol::new(
            kernel(&random::vector(2, &mut rng)).add(&SymbolFn::coordinate(2, 0)).unwrap(),
            AffineMap::new(a, random::vector(2, &mut rng)).unwrap(),
        )
        .unwrap();
        let nz = normalize(&w, TOL).unwrap();
        let f = kernel(&random::vector(2, &mut rng)).multiply(&SymbolFn::coordinate(2, 1)).unwrap();
        let lhs = apply(&w, &f).unwrap();
        let rhs = nz.conjugated_apply(&f).unwrap();
        for _ in 0..50 {
            let z = random::vector(2, &mut rng);
            let (x, y) = (lhs.evaluate(&z).unwrap(), rhs.evaluate(&z).unwrap());
            assert!((x - y).norm() < 1e-10 * (1.0 + x.norm()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn verdict_invariant_under_unitary_conjugation(seed in any::<u64>(), n in 1usize..=3, j in 0usize..=3, bounded in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let j = j.min(n);
            let g = random::contraction_values(n - j, 0.9, &mut rng);
            let mut d = vec![1.0; j];
            d.extend(g);
            let mut b = random::vector(n, &mut rng);
            if bounded {
                b = b.sub(&project(&image_basis(&CMatrix::diag_real(&d), TOL).unwrap(), &b));
            }
            let (u0, v0) = (random::unitary(n, &mut rng), random::unitary(n, &mut rng));
            let a = v0.mul(&CMatrix::diag_real(&d)).mul(&u0);
            let phi = AffineMap::new(a.clone(), v0.mul_vec(&b)).unwrap();
            // (V*AU*, V*b) recovers the diagonal symbol
            let back = AffineMap::new(v0.adjoint().mul(&a).mul(&u0.adjoint()), v0.adjoint().mul_vec(&phi.b)).unwrap();
            for (p, q) in [(2.0, 2.0), (1.0, 2.0), (2.0, 1.0)] {
                let x = classify_composition(&phi, p, q, TOL).unwrap();
                let y = classify_composition(&back, p, q, TOL).unwrap();
                prop_assert_eq!(x.kind, y.kind);
            }
        }

        #[test]
        fn projection_criterion_matches_inner_products(seed in any::<u64>(), n in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let j = 1 + (seed as usize) % n;
            let mut d = vec![1.0; j];
            d.extend(random::contraction_values(n - j, 0.9, &mut rng));
            let (u0, v0) = (random::unitary(n, &mut rng), random::unitary(n, &mut rng));
            let a = v0.mul(&CMatrix::diag_real(&d)).mul(&u0);
            let basis = fixed_subspace(&a, TOL).unwrap();
            let mut b = random::vector(n, &mut rng);
            if seed % 2 == 0 {
                b = b.sub(&project(&image_basis(&a, TOL).unwrap(), &b));
            }
            let proj_zero = project(&image_basis(&a, TOL).unwrap(), &b).norm() <= projection_threshold(TOL, &b);
            let inner_zero = basis.iter().all(|z| a.mul_vec(z).inner(&b).norm() <= projection_threshold(TOL, &b));
            prop_assert_eq!(proj_zero, inner_zero);
            prop_assert_eq!(proj_zero, seed % 2 == 0);
        }

        #[test]
        fn apply_is_linear(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = WeightedSymbol::new(
                kernel(&random::vector(2, &mut rng)),
                AffineMap::new(random::matrix(2, &mut rng), random::vector(2, &mut rng)).unwrap(),
            ).unwrap();
            let f = kernel(&random::vector(2, &mut rng)).add(&SymbolFn::coordinate(2, 0)).unwrap();
            let g = kernel(&random::vector(2, &mut rng));
            let lhs = apply(&w, &f.add(&g).unwrap()).unwrap();
            let rhs = apply(&w, &f).unwrap().add(&apply(&w, &g).unwrap()).unwrap();
            prop_assert!(lhs.approx_eq(&rhs, 1e-13));
        }
    }
}
