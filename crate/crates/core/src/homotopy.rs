//! Explicit norm-continuous paths between operators of one component, with
//! Lipschitz constants taken from the continuity estimates, and a numerical
//! checker for them.
//!
//! A [`Homotopy`] is a chain of equal-length segments. Each segment linearly
//! interpolates `A` and `b` between two symbols and moves the weight along
//! `u_s = (1 − α(s))ψ₀ + α(s)ψ₁`; every path built here has that shape in
//! the original coordinates, including the conjugated and translated ones.

use std::f64::consts::PI;

use serde::Serialize;

use crate::certify::{default_test_points, op_distance_lower_bound};
use crate::error::{check_dim, Error, Result};
use crate::fock::{fock_norm, FockParams, NormEstimate, NormMethod, NormMethodKind, SymbolFn};
use crate::integrate::{log_sum_exp, mc_gaussian, tensor_gauss_legendre};
use crate::linalg::{c, CMatrix, CVector, C64, DEFAULT_TOL};
use crate::operators::{
    classify_composition, normalize, split_weight, weight_from_normal_frame, AffineMap, Regime,
    WeightedSymbol,
};
use crate::topology::{b_equivalent, matrices_equivalent, same_component_weighted, ClassFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Recipe {
    /// `φ_t = tAz + b`, from the constant map `b` to `φ`.
    ScaleToConstant,
    /// Constant maps `γ_t = (1 − t)α + tβ`.
    ConstantLine,
    /// `φ_t = Az + tb`, from `C_A` to `C_φ`.
    DropTranslation,
    /// `A_t = (1 − t)A + tD` with `A, D = V(I_j ⊕ ·)U`.
    BlockInterp,
    /// `u_t = (1 − α(t))ψ + α(t)χ` at a fixed map.
    WeightInterp,
    /// Primitive segments conjugated by `C_U`, `C_V`.
    ConjugatedChain,
    /// As above with the translation operator `T_h` in between.
    TranslationConjugatedChain,
}

/// How the weight coefficient `α` runs from 0 to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AlphaPath {
    /// `α(s) = s`.
    Linear,
    /// `α(s) = ½ − ½e^{iπs}`, through the lower half-plane; avoids the real
    /// zero of `(1 − α)ψ + αcψ` when `c ≤ 0`.
    Semicircle,
}

impl AlphaPath {
    pub fn at(self, s: f64) -> C64 {
        match self {
            AlphaPath::Linear => c(s, 0.0),
            AlphaPath::Semicircle => c(0.5, 0.0) - C64::from_polar(0.5, PI * s),
        }
    }

    /// `max |α'|`.
    pub fn speed(self) -> f64 {
        match self {
            AlphaPath::Linear => 1.0,
            AlphaPath::Semicircle => PI / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundMethod {
    Zero,
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

/// Lipschitz constant of a segment in its own parameter `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzBound {
    pub value: f64,
    pub abs_error: f64,
    pub method: BoundMethod,
    /// `C` in `(x₁ + … + x_k)^q ≤ C^q Σ x_i^q`, where the estimate uses it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holder: Option<f64>,
}

impl LipschitzBound {
    pub fn zero() -> Self {
        LipschitzBound {
            value: 0.0,
            abs_error: 0.0,
            method: BoundMethod::Zero,
            holder: None,
        }
    }

    fn closed_form(value: f64) -> Self {
        LipschitzBound {
            value,
            abs_error: 0.0,
            method: BoundMethod::ClosedForm,
            holder: None,
        }
    }

    /// Conservative value used by the checks.
    pub fn upper(&self) -> f64 {
        self.value + self.abs_error
    }
}

/// Numerical settings for path construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    pub tol: f64,
    pub seed: u64,
    /// Monte Carlo samples for weight norms and high-dimensional integrals.
    pub samples: u64,
    /// Gauss–Legendre nodes per radial axis.
    pub nodes: usize,
    /// Largest tensor grid before switching to Monte Carlo.
    pub budget: u64,
    /// The caller vouches that weighted endpoints induce bounded operators.
    pub assume_bounded: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            tol: DEFAULT_TOL,
            seed: 0,
            samples: 200_000,
            nodes: 48,
            budget: 8_000_000,
            assume_bounded: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Segment {
    pub recipe: Recipe,
    pub t0: f64,
    pub t1: f64,
    pub start: WeightedSymbol,
    pub end: WeightedSymbol,
    pub alpha: AlphaPath,
    pub m: LipschitzBound,
    /// Norm of the outer factors, `‖T_h‖ = e^{|h|²/2}` (one without `T`).
    pub scale: f64,
}

impl Segment {
    fn new(recipe: Recipe, start: WeightedSymbol, end: WeightedSymbol, m: LipschitzBound) -> Self {
        Segment {
            recipe,
            t0: 0.0,
            t1: 1.0,
            start,
            end,
            alpha: AlphaPath::Linear,
            m,
            scale: 1.0,
        }
    }

    /// Symbol at local parameter `s ∈ [0, 1]`; exact at both ends.
    pub fn symbol_at(&self, s: f64) -> Result<WeightedSymbol> {
        if s <= 0.0 {
            return Ok(self.start.clone());
        }
        if s >= 1.0 {
            return Ok(self.end.clone());
        }
        let a = self.start.phi.a.lerp(&self.end.phi.a, s);
        let b = self.start.phi.b.scale_real(1.0 - s).add(&self.end.phi.b.scale_real(s));
        let psi = if self.start.psi == self.end.psi {
            self.start.psi.clone()
        } else {
            self.start.psi.affine_combination(&self.end.psi, self.alpha.at(s))?
        };
        Ok(WeightedSymbol {
            psi,
            phi: AffineMap { a, b },
        })
    }

    /// Lipschitz constant in the global parameter.
    pub fn rate(&self) -> f64 {
        self.m.upper() * self.scale / (self.t1 - self.t0)
    }

    fn reversed(self) -> Self {
        debug_assert_eq!(self.alpha, AlphaPath::Linear);
        Segment {
            start: self.end,
            end: self.start,
            ..self
        }
    }

    fn is_trivial(&self) -> bool {
        self.start.phi.approx_eq(&self.end.phi, 1e-14) && self.start.psi.approx_eq(&self.end.psi, 1e-14)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Homotopy {
    pub recipe: Recipe,
    pub p: f64,
    pub q: f64,
    pub segments: Vec<Segment>,
    pub start: WeightedSymbol,
    pub end: WeightedSymbol,
}

impl Homotopy {
    /// Drops constant segments (keeping one if all are), spreads the rest
    /// evenly over `[0, 1]` and pins the ends to the requested symbols.
    fn assemble(
        recipe: Recipe,
        p: f64,
        q: f64,
        segments: Vec<Segment>,
        from: &WeightedSymbol,
        to: &WeightedSymbol,
    ) -> Result<Self> {
        let mut segs: Vec<Segment> = segments.iter().filter(|s| !s.is_trivial()).cloned().collect();
        if segs.is_empty() {
            let mut only = segments.into_iter().next().expect("at least one segment");
            only.m = LipschitzBound::zero();
            segs.push(only);
        }
        let k = segs.len();
        for (i, s) in segs.iter_mut().enumerate() {
            s.t0 = i as f64 / k as f64;
            s.t1 = (i + 1) as f64 / k as f64;
        }
        pin(&mut segs[0].start, from)?;
        pin(&mut segs[k - 1].end, to)?;
        Ok(Homotopy {
            recipe,
            p,
            q,
            segments: segs,
            start: from.clone(),
            end: to.clone(),
        })
    }

    pub fn symbol_at(&self, t: f64) -> Result<WeightedSymbol> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Input(format!("path parameter {t} outside [0, 1]")));
        }
        if t == 0.0 {
            return Ok(self.start.clone());
        }
        if t == 1.0 {
            return Ok(self.end.clone());
        }
        let k = self.segments.len();
        let i = ((t * k as f64).floor() as usize).min(k - 1);
        self.segments[i].symbol_at(t * k as f64 - i as f64)
    }

    /// `M`: the largest segment rate, a Lipschitz constant of the whole path.
    pub fn lipschitz(&self) -> f64 {
        self.segments.iter().map(Segment::rate).fold(0.0, f64::max)
    }

    /// Bound on `‖P(t) − P(t')‖` from the segment rates over `[t, t']`.
    pub fn bound_between(&self, t: f64, t2: f64) -> f64 {
        let (lo, hi) = if t <= t2 { (t, t2) } else { (t2, t) };
        self.segments
            .iter()
            .map(|s| s.rate() * (hi.min(s.t1) - lo.max(s.t0)).max(0.0))
            .sum()
    }
}

/// Replaces a reconstructed endpoint with the requested symbol after checking
/// they agree.
fn pin(slot: &mut WeightedSymbol, exact: &WeightedSymbol) -> Result<()> {
    let scale = 1.0 + exact.phi.a.max_abs_diff(&CMatrix::zeros(exact.dim())) + exact.phi.b.norm();
    if !slot.phi.approx_eq(&exact.phi, 1e-9 * scale) || !slot.psi.approx_eq(&exact.psi, 1e-9) {
        return Err(Error::Domain(
            "internal: reconstructed endpoint differs from the requested symbol".into(),
        ));
    }
    *slot = exact.clone();
    Ok(())
}

fn holder_constant(k: usize, q: f64) -> f64 {
    (k.max(1) as f64).powf((1.0 - 1.0 / q).max(0.0))
}

/// `log ∫_{ℝ₊ᵈ} F(r) Π r_k dr` for a radial integrand with Gaussian decay
/// `e^{−q(1−a²)|r|²/2}` whose growth term is `e^{q(a|r| + shift)²/2}`.
///
/// Returns the log value and a relative error estimate.
fn radial_log_integral<F>(
    d: usize,
    a: f64,
    shift: f64,
    q: f64,
    opts: &PathOptions,
    log_f: F,
) -> Result<(f64, f64, BoundMethod)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if d == 0 {
        return Ok((log_f(&[]), 0.0, BoundMethod::ClosedForm));
    }
    let decay = 1.0 - a * a;
    let sigma = 1.0 / (q * decay).sqrt();
    let peak = a * shift / decay;
    let reach = peak + sigma * ((2.0 * q + 1.0).sqrt() + 12.0);
    let with_jacobian = |r: &[f64]| log_f(r) + r.iter().map(|x| x.ln()).sum::<f64>();
    let m = opts.nodes.min((opts.budget as f64).powf(1.0 / d as f64).floor() as usize);
    if m >= 12 {
        let bounds = vec![(0.0, reach); d];
        let fine = tensor_gauss_legendre(&bounds, m, with_jacobian)?;
        let coarse = tensor_gauss_legendre(&bounds, (2 * m).div_ceil(3), with_jacobian)?;
        let rel = (coarse - fine).exp_m1().abs() + 1e-13;
        return Ok((fine, rel, BoundMethod::Quadrature));
    }
    // over ℂᵈ ≅ ℝ^{2d}: ∫ F(|z|) dA = (2π)ᵈ ∫ F(r) Π r_k dr
    let mc = mc_gaussian(2 * d, q * decay / 4.0, opts.samples, opts.seed, |x| {
        let r: Vec<f64> = x.chunks(2).map(|p| p[0].hypot(p[1])).collect();
        log_f(&r)
    });
    Ok((
        mc.log_mean - d as f64 * (2.0 * PI).ln(),
        3.0 * mc.rel_se,
        BoundMethod::MonteCarlo,
    ))
}

/// Turns `log M^q` with relative error `rel` on `M^q` into a bound on `M`.
fn from_log_power(log_mq: f64, rel: f64, q: f64, method: BoundMethod, holder: f64) -> LipschitzBound {
    let value = (log_mq / q).exp();
    LipschitzBound {
        value,
        abs_error: value * ((1.0 + rel).powf(1.0 / q) - 1.0),
        method,
        holder: Some(holder),
    }
}

/// Lipschitz constant of `t ↦ C_{tAz+b}`; needs `‖A‖ < 1`.
fn scale_to_constant_bound(phi: &AffineMap, q: f64, opts: &PathOptions) -> Result<LipschitzBound> {
    let nz = normalize(&WeightedSymbol::composition(phi.clone()), opts.tol)?;
    let s = nz.s;
    if s == 0 {
        return Ok(LipschitzBound::zero());
    }
    let a = nz.a_tilde[..s].to_vec();
    let bt: Vec<f64> = nz.b_tilde.as_slice().iter().map(|x| x.norm()).collect();
    let head = nz.b_tilde.head(s).norm();
    let tail = nz.b_tilde.tail(s).norm_sqr();
    let log_f = |r: &[f64]| {
        let sum = log_sum_exp((0..s).map(|i| q * ((a[i] * r[i]).ln() + (1.0 + a[i] * r[i] + bt[i]).ln())));
        let ar = r.iter().zip(&a).map(|(r, a)| (a * r).powi(2)).sum::<f64>().sqrt();
        let r2: f64 = r.iter().map(|x| x * x).sum();
        sum + q * (ar + head).powi(2) / 2.0 + q * tail / 2.0 - q * r2 / 2.0
    };
    let (log_i, rel, method) = radial_log_integral(s, a[0], head, q, opts, log_f)?;
    let holder = holder_constant(s, q);
    let log_mq = q * holder.ln() + 2.0 * q + s as f64 * q.ln() + log_i;
    Ok(from_log_power(log_mq, rel, q, method, holder))
}

/// Lipschitz constant of `t ↦ C_{Az+tb}` for bounded `C_φ`, `p ≤ q`.
fn drop_translation_bound(phi: &AffineMap, p: f64, q: f64, opts: &PathOptions) -> Result<LipschitzBound> {
    let nz = normalize(&WeightedSymbol::composition(phi.clone()), opts.tol)?;
    let (n, j, s) = (phi.dim(), nz.j, nz.s);
    let tail = nz.b_tilde.tail(j);
    if j == n || tail.norm() == 0.0 {
        return Ok(LipschitzBound::zero());
    }
    let d = s.max(j) - j;
    let a: Vec<f64> = nz.a_tilde[j..].to_vec();
    let bt: Vec<f64> = tail.as_slice().iter().map(|x| x.norm()).collect();
    let shift = tail.norm();
    let log_f = |r: &[f64]| {
        let sum = log_sum_exp((0..n - j).map(|i| {
            let ri = if i < d { a[i] * r[i] } else { 0.0 };
            q * (bt[i].ln() + (1.0 + ri + bt[i]).ln())
        }));
        let ar = r.iter().zip(&a).map(|(r, a)| (a * r).powi(2)).sum::<f64>().sqrt();
        let r2: f64 = r.iter().map(|x| x * x).sum();
        sum + q * (ar + shift).powi(2) / 2.0 - q * r2 / 2.0
    };
    let lead = if d > 0 { a[0] } else { 0.0 };
    let (log_i, rel, method) = radial_log_integral(d, lead, shift, q, opts, log_f)?;
    let holder = holder_constant(n - j, q);
    let log_mq = q * holder.ln() + 2.0 * q + n as f64 * (q / p).ln() + d as f64 * q.ln() + log_i;
    Ok(from_log_power(log_mq, rel, q, method, holder))
}

/// Lipschitz constant of `t ↦ C_{(I_j ⊕ tG)z}` in dimension `n`, where `g`
/// are the singular values of `G`.
fn block_bound(g: &[f64], n: usize, p: f64, q: f64, opts: &PathOptions) -> Result<LipschitzBound> {
    if g.iter().all(|&x| x == 0.0) {
        return Ok(LipschitzBound::zero());
    }
    let log_det: Vec<f64> = g.iter().map(|x| (1.0 - x * x).ln()).collect();
    let total_log_det: f64 = log_det.iter().sum();
    let mut logs = Vec::new();
    let mut rel: f64 = 0.0;
    let mut method = BoundMethod::Quadrature;
    for (i, &gi) in g.iter().enumerate() {
        if gi == 0.0 {
            continue;
        }
        let log_f = |r: &[f64]| {
            let x = gi * r[0];
            q * (x.ln() + (1.0 + x).ln()) - q * (1.0 - gi * gi) * r[0] * r[0] / 2.0
        };
        let (log_i1, e, m) = radial_log_integral(1, gi, 0.0, q, opts, log_f)?;
        rel = rel.max(e);
        method = m;
        // Π_{k≠i} 1/(1 − g_k²)
        logs.push(q.ln() + log_i1 - (total_log_det - log_det[i]));
    }
    let holder = holder_constant(g.len(), q);
    let log_mq = q * holder.ln() + 2.0 * q + n as f64 * (q / p).ln() + log_sum_exp(logs);
    Ok(from_log_power(log_mq, rel, q, method, holder))
}

/// Upper bound on `‖W_{g,φ}‖ : F^p → F^q`.
///
/// In the normal frame `g̃ = e^{−⟨z_[j],h⟩} g_*(z')` and the operator factors
/// as `T_h W_{g_*, (z_[j], G̃z' + c)}`. The pointwise estimate gives
/// `N^q = (q/p)^j (q/2π)^{n−j} ∫ |g_*|^q e^{q(|G̃z'+c|² − |z'|²)/2}`, and
/// completing the square turns that into a Fock norm of `g_*` composed with
/// an affine map.
fn weight_operator_bound(
    g: &SymbolFn,
    phi: &AffineMap,
    p: f64,
    q: f64,
    opts: &PathOptions,
) -> Result<LipschitzBound> {
    if g.is_zero() {
        return Ok(LipschitzBound::zero());
    }
    let w = WeightedSymbol {
        psi: g.clone(),
        phi: phi.clone(),
    };
    let nz = normalize(&w, opts.tol)?;
    let (n, j) = (phi.dim(), nz.j);
    if j > 0 && Regime::of(p, q) == Regime::QLtP {
        return Err(Error::Unsupported(
            "weight paths at ‖A‖ = 1 are only estimated for p ≤ q".into(),
        ));
    }
    let h = nz.b_tilde.head(j);
    let g_star = if j == 0 {
        nz.psi_tilde.clone()
    } else {
        split_weight(&nz.psi_tilde, &h, opts.seed)?.0
    };
    let m = n - j;
    let log_prefactor = j as f64 * (q / p).ln() / q + h.norm_sqr() / 2.0;
    if m == 0 {
        let v = g_star.evaluate(&CVector::zeros(0))?.norm();
        return Ok(LipschitzBound::closed_form(log_prefactor.exp() * v));
    }
    let gs = &nz.a_tilde[j..];
    let cv = nz.b_tilde.tail(j);
    let z0 = CVector::from_vec(
        (0..m).map(|k| cv.get(k) * (gs[k] / (1.0 - gs[k] * gs[k]))).collect(),
    );
    let q0 = (0..m).map(|k| (1.0 - gs[k] * gs[k]) * z0.get(k).norm_sqr()).sum::<f64>() + cv.norm_sqr();
    let log_det: f64 = gs.iter().map(|x| (1.0 - x * x).ln()).sum();
    let inv_sqrt: Vec<f64> = gs.iter().map(|x| 1.0 / (1.0 - x * x).sqrt()).collect();
    let composed = g_star.compose_affine(&CMatrix::diag_real(&inv_sqrt), &z0)?;
    let est = fock_norm(
        &composed,
        FockParams::new(m, q)?,
        NormMethod::Auto {
            samples: opts.samples,
            seed: opts.seed,
        },
    )?;
    let factor = (log_prefactor + q0 / 2.0 - log_det / q).exp();
    Ok(LipschitzBound {
        value: factor * est.value,
        abs_error: factor * est.abs_error,
        method: match est.method {
            NormMethodKind::ExactGram | NormMethodKind::Analytic => BoundMethod::ClosedForm,
            NormMethodKind::Quadrature => BoundMethod::Quadrature,
            NormMethodKind::MonteCarlo => BoundMethod::MonteCarlo,
        },
        holder: None,
    })
}

/// `χ = cψ` for some constant `c`.
fn proportionality(psi: &SymbolFn, chi: &SymbolFn) -> Option<C64> {
    if psi.terms().len() != chi.terms().len() || psi.is_zero() {
        return None;
    }
    let (k, lead) = psi
        .terms()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.coeff.norm().total_cmp(&b.1.coeff.norm()))?;
    let other = &chi.terms()[k];
    if other.alpha != lead.alpha || other.w.sub(&lead.w).norm() > 1e-12 {
        return None;
    }
    let ratio = other.coeff / lead.coeff;
    chi.approx_eq(&psi.scale(ratio), 1e-10).then_some(ratio)
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("exponents must lie in (0, ∞), got p = {p}, q = {q}")))
    }
}

fn scale_segment(phi: &AffineMap, q: f64, opts: &PathOptions) -> Result<Segment> {
    let norm = phi.norm();
    if norm >= 1.0 - opts.tol {
        return Err(Error::Domain(format!(
            "scaling to a constant needs ‖A‖ < 1, got {norm}"
        )));
    }
    let m = scale_to_constant_bound(phi, q, opts)?;
    Ok(Segment::new(
        Recipe::ScaleToConstant,
        WeightedSymbol::composition(AffineMap::constant(phi.b.clone())),
        WeightedSymbol::composition(phi.clone()),
        m,
    ))
}

fn constant_segment(alpha: &CVector, beta: &CVector) -> Result<Segment> {
    check_dim(alpha.dim(), beta.dim())?;
    let spread = (alpha.norm() + beta.norm()).powi(2) / 2.0;
    let sum: f64 = alpha
        .as_slice()
        .iter()
        .zip(beta.as_slice())
        .map(|(a, b)| (b - a).norm() * (1.0 + a.norm() + b.norm()))
        .sum();
    // ‖1‖_{n,q} = 1 for every q
    let m = if sum == 0.0 {
        LipschitzBound::zero()
    } else {
        LipschitzBound::closed_form((2.0 + spread).exp() * sum)
    };
    Ok(Segment::new(
        Recipe::ConstantLine,
        WeightedSymbol::composition(AffineMap::constant(alpha.clone())),
        WeightedSymbol::composition(AffineMap::constant(beta.clone())),
        m,
    ))
}

fn drop_segment(phi: &AffineMap, p: f64, q: f64, opts: &PathOptions) -> Result<Segment> {
    if Regime::of(p, q) == Regime::QLtP {
        return Err(Error::Unsupported("dropping translations is estimated only for p ≤ q".into()));
    }
    if !classify_composition(phi, p, q, opts.tol)?.is_bounded() {
        return Err(Error::Unbounded("C_φ is unbounded; no translation path".into()));
    }
    let m = drop_translation_bound(phi, p, q, opts)?;
    Ok(Segment::new(
        Recipe::DropTranslation,
        WeightedSymbol::composition(AffineMap::linear(phi.a.clone())),
        WeightedSymbol::composition(phi.clone()),
        m,
    ))
}

/// `V(I ⊕ from)U → V(I ⊕ to)U` where one of the blocks is zero.
fn block_segment(
    frame: &ClassFrame,
    from: &CMatrix,
    to: &CMatrix,
    p: f64,
    q: f64,
    opts: &PathOptions,
) -> Result<Segment> {
    let zero = CMatrix::zeros(from.dim());
    let moving = if from.max_abs_diff(&zero) == 0.0 {
        to
    } else if to.max_abs_diff(&zero) == 0.0 {
        from
    } else {
        return Err(Error::Input("block segments run to or from the zero block".into()));
    };
    let m = block_bound(&moving.singular_values(), frame.dim(), p, q, opts)?;
    Ok(Segment::new(
        Recipe::BlockInterp,
        WeightedSymbol::composition(AffineMap::linear(frame.member(from)?)),
        WeightedSymbol::composition(AffineMap::linear(frame.member(to)?)),
        m,
    ))
}

fn weight_segment(
    psi: &SymbolFn,
    chi: &SymbolFn,
    phi: &AffineMap,
    p: f64,
    q: f64,
    opts: &PathOptions,
) -> Result<Segment> {
    check_dim(phi.dim(), psi.dim())?;
    check_dim(phi.dim(), chi.dim())?;
    if psi.is_zero() || chi.is_zero() {
        return Err(Error::Input("weights must be nonzero".into()));
    }
    let alpha = match proportionality(psi, chi) {
        Some(ratio) if ratio.im.abs() <= 1e-12 * ratio.norm() && ratio.re <= 0.0 => AlphaPath::Semicircle,
        _ => AlphaPath::Linear,
    };
    let n = weight_operator_bound(&chi.sub(psi)?, phi, p, q, opts)?;
    let m = LipschitzBound {
        value: alpha.speed() * n.value,
        abs_error: alpha.speed() * n.abs_error,
        ..n
    };
    let mut seg = Segment::new(
        Recipe::WeightInterp,
        WeightedSymbol {
            psi: psi.clone(),
            phi: phi.clone(),
        },
        WeightedSymbol {
            psi: chi.clone(),
            phi: phi.clone(),
        },
        m,
    );
    seg.alpha = alpha;
    Ok(seg)
}

/// `C_b → C_φ` through `φ_t = tAz + b`.
pub fn path_scale_to_constant(phi: &AffineMap, p: f64, q: f64, opts: &PathOptions) -> Result<Homotopy> {
    check_exponents(p, q)?;
    let seg = scale_segment(phi, q, opts)?;
    let (a, b) = (seg.start.clone(), seg.end.clone());
    Homotopy::assemble(Recipe::ScaleToConstant, p, q, vec![seg], &a, &b)
}

/// `C_α → C_β` through constant maps.
pub fn path_between_constants(alpha: &CVector, beta: &CVector, p: f64, q: f64) -> Result<Homotopy> {
    check_exponents(p, q)?;
    let seg = constant_segment(alpha, beta)?;
    let (a, b) = (seg.start.clone(), seg.end.clone());
    Homotopy::assemble(Recipe::ConstantLine, p, q, vec![seg], &a, &b)
}

/// `C_A → C_φ` through `φ_t = Az + tb`; `C_φ` bounded and `p ≤ q`.
pub fn path_drop_translation(phi: &AffineMap, p: f64, q: f64, opts: &PathOptions) -> Result<Homotopy> {
    check_exponents(p, q)?;
    let seg = drop_segment(phi, p, q, opts)?;
    let (a, b) = (seg.start.clone(), seg.end.clone());
    Homotopy::assemble(Recipe::DropTranslation, p, q, vec![seg], &a, &b)
}

/// `C_A → C_D` for `A = V(I_j ⊕ G)U`, `D = V(I_j ⊕ G₁)U`, passing through
/// `V(I_j ⊕ 0)U` when both blocks are nonzero. The frame is taken from `A`.
pub fn path_block_interpolation(a: &CMatrix, d: &CMatrix, p: f64, q: f64, opts: &PathOptions) -> Result<Homotopy> {
    check_exponents(p, q)?;
    if Regime::of(p, q) == Regime::QLtP {
        return Err(Error::Unsupported("block paths are estimated only for p ≤ q".into()));
    }
    let from = WeightedSymbol::composition(AffineMap::linear(a.clone()));
    let to = WeightedSymbol::composition(AffineMap::linear(d.clone()));
    let segs = block_chain(a, d, p, q, opts)?;
    Homotopy::assemble(Recipe::BlockInterp, p, q, segs, &from, &to)
}

fn block_chain(a: &CMatrix, d: &CMatrix, p: f64, q: f64, opts: &PathOptions) -> Result<Vec<Segment>> {
    let frame = ClassFrame::of(a, opts.tol)?;
    if frame.j == 0 {
        return Err(Error::Domain("block paths need ‖A‖ = 1".into()));
    }
    let g = frame.block_of(a)?;
    let g1 = frame.block_of(d)?;
    let zero = CMatrix::zeros(g.dim());
    Ok(vec![
        block_segment(&frame, &g, &zero, p, q, opts)?,
        block_segment(&frame, &zero, &g1, p, q, opts)?,
    ])
}

/// `W_{ψ,φ} → W_{χ,φ}` through `u_t = (1 − α(t))ψ + α(t)χ`, every `u_t ≠ 0`.
pub fn path_weight_interpolation(
    psi: &SymbolFn,
    chi: &SymbolFn,
    phi: &AffineMap,
    p: f64,
    q: f64,
    opts: &PathOptions,
) -> Result<Homotopy> {
    check_exponents(p, q)?;
    let seg = weight_segment(psi, chi, phi, p, q, opts)?;
    let (a, b) = (seg.start.clone(), seg.end.clone());
    Homotopy::assemble(Recipe::WeightInterp, p, q, vec![seg], &a, &b)
}

/// Segments joining two composition symbols of one component.
fn composition_chain(phi1: &AffineMap, phi2: &AffineMap, p: f64, q: f64, opts: &PathOptions) -> Result<Vec<Segment>> {
    for (phi, which) in [(phi1, "first"), (phi2, "second")] {
        if !classify_composition(phi, p, q, opts.tol)?.is_bounded() {
            return Err(Error::Unbounded(format!("{which} symbol induces an unbounded C_φ")));
        }
    }
    let compact = |phi: &AffineMap| phi.norm() < 1.0 - opts.tol;
    if compact(phi1) && compact(phi2) {
        return Ok(vec![
            scale_segment(phi1, q, opts)?.reversed(),
            constant_segment(&phi1.b, &phi2.b)?,
            scale_segment(phi2, q, opts)?,
        ]);
    }
    if Regime::of(p, q) == Regime::QLtP || !matrices_equivalent(&phi1.a, &phi2.a, opts.tol)? {
        return Err(Error::DifferentComponents("A ≁ D".into()));
    }
    let frame = ClassFrame::of(&phi1.a, opts.tol)?;
    if frame.j == frame.dim() {
        // A = D unitary and b = e = 0: the component is a single point
        let w = WeightedSymbol::composition(phi1.clone());
        return Ok(vec![Segment::new(Recipe::BlockInterp, w.clone(), w, LipschitzBound::zero())]);
    }
    let mut segs = vec![drop_segment(phi1, p, q, opts)?.reversed()];
    segs.extend(block_chain(&phi1.a, &phi2.a, p, q, opts)?);
    segs.push(drop_segment(phi2, p, q, opts)?);
    Ok(segs)
}

/// Maps a frame-level symbol `(u, Ãz + c)` to `C_U T_h W_{u,·} C_V`.
fn lift(w: &WeightedSymbol, frame: &ClassFrame, h: &CVector) -> Result<WeightedSymbol> {
    let (n, j) = (frame.dim(), frame.j);
    let u_star = w.psi.fix_leading(&CVector::zeros(j))?;
    let psi = weight_from_normal_frame(&frame.u, h, &u_star)?;
    let shifted = w.phi.b.add(&h.concat(&CVector::zeros(n - j)));
    Ok(WeightedSymbol {
        psi,
        phi: AffineMap {
            a: frame.from_frame(&w.phi.a),
            b: frame.v.mul_vec(&shifted),
        },
    })
}

/// A path from `w1` to `w2` inside their common component.
///
/// Composition endpoints follow the scale/constant chain when both are
/// compact and the drop-translation/block chain otherwise. Weighted
/// endpoints first move their weights to `1` (in the normal frame when
/// `‖A‖ = 1`, where the translation operator `T_h` stays outside).
pub fn build_component_path(
    w1: &WeightedSymbol,
    w2: &WeightedSymbol,
    p: f64,
    q: f64,
    opts: &PathOptions,
) -> Result<Homotopy> {
    check_exponents(p, q)?;
    check_dim(w1.dim(), w2.dim())?;
    if w1 == w2 {
        if w1.is_composition() {
            if !classify_composition(&w1.phi, p, q, opts.tol)?.is_bounded() {
                return Err(Error::Unbounded("symbol induces an unbounded C_φ".into()));
            }
        } else {
            same_component_weighted(w1, w2, p, q, opts.tol, opts.assume_bounded)?;
        }
        let seg = Segment::new(Recipe::ConstantLine, w1.clone(), w2.clone(), LipschitzBound::zero());
        return Homotopy::assemble(Recipe::ConstantLine, p, q, vec![seg], w1, w2);
    }
    if w1.is_composition() && w2.is_composition() {
        let segs = composition_chain(&w1.phi, &w2.phi, p, q, opts)?;
        return Homotopy::assemble(Recipe::ConjugatedChain, p, q, segs, w1, w2);
    }
    if !same_component_weighted(w1, w2, p, q, opts.tol, opts.assume_bounded)? {
        return Err(Error::DifferentComponents("([A], [b]) differ".into()));
    }
    let compact = |w: &WeightedSymbol| w.phi.norm() < 1.0 - opts.tol;
    if compact(w1) && compact(w2) {
        let n = w1.dim();
        let one = SymbolFn::one(n);
        let mut segs = vec![weight_segment(&w1.psi, &one, &w1.phi, p, q, opts)?];
        segs.extend(composition_chain(&w1.phi, &w2.phi, p, q, opts)?);
        segs.push(weight_segment(&one, &w2.psi, &w2.phi, p, q, opts)?);
        return Homotopy::assemble(Recipe::ConjugatedChain, p, q, segs, w1, w2);
    }
    if Regime::of(p, q) == Regime::QLtP {
        return Err(Error::Unsupported("weighted paths with ‖A‖ = 1 need p ≤ q".into()));
    }
    let frame = ClassFrame::of(&w1.phi.a, opts.tol)?;
    let (n, j) = (frame.dim(), frame.j);
    let g1 = frame.block_of(&w1.phi.a)?;
    let g2 = frame.block_of(&w2.phi.a)?;
    let b1 = frame.v.adjoint().mul_vec(&w1.phi.b);
    let b2 = frame.v.adjoint().mul_vec(&w2.phi.b);
    let h = b1.head(j);
    let zero = CVector::zeros(n);
    let star = |psi: &SymbolFn| -> Result<SymbolFn> {
        let tilde = psi.compose_affine(&frame.u.adjoint(), &zero)?;
        split_weight(&tilde, &h, opts.seed)?.0.embed(n, j)
    };
    let (u1, u2) = (star(&w1.psi)?, star(&w2.psi)?);
    let frame_map = |g: &CMatrix, b: &CVector| AffineMap {
        a: CMatrix::block_diag(&CMatrix::identity(j), g),
        b: CVector::zeros(j).concat(&b.tail(j)),
    };
    let (f1, f2) = (frame_map(&g1, &b1), frame_map(&g2, &b2));
    let one = SymbolFn::one(n);
    let mut inner = vec![weight_segment(&u1, &one, &f1, p, q, opts)?];
    inner.extend(composition_chain(&f1, &f2, p, q, opts)?);
    inner.push(weight_segment(&one, &u2, &f2, p, q, opts)?);
    let t_norm = (h.norm_sqr() / 2.0).exp();
    let segs = inner
        .into_iter()
        .map(|s| {
            Ok(Segment {
                start: lift(&s.start, &frame, &h)?,
                end: lift(&s.end, &frame, &h)?,
                scale: s.scale * t_norm,
                ..s
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Homotopy::assemble(Recipe::TranslationConjugatedChain, p, q, segs, w1, w2)
}

/// Settings for [`verify_path`].
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub grid: usize,
    pub samples: u64,
    pub seed: u64,
    pub tol: f64,
    /// Multiplies every segment rate; values below one are a negative control.
    pub m_scale: f64,
    /// Kernel centres for the distance lower bounds; defaults to the shells.
    pub test_points: Option<Vec<CVector>>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            grid: 21,
            samples: 20_000,
            seed: 0,
            tol: DEFAULT_TOL,
            m_scale: 1.0,
            test_points: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapCheck {
    pub t0: f64,
    pub t1: f64,
    pub estimate: NormEstimate,
    pub witness: CVector,
    /// `M·Δt` from the segment rates.
    pub bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentFailure {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub grid: usize,
    pub m_scale: f64,
    pub gaps: Vec<GapCheck>,
    pub component_failures: Vec<ComponentFailure>,
    pub endpoints_exact: bool,
    pub violations: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Relative slack for gaps that meet the bound with equality.
const GAP_SLACK: f64 = 1e-9;

/// Why `w` is not in the component of `reference`, if it is not.
fn component_failure(w: &WeightedSymbol, reference: &WeightedSymbol, p: f64, q: f64, tol: f64) -> Result<Option<String>> {
    if w.psi.is_zero() {
        return Ok(Some("weight vanishes".into()));
    }
    let weighted = !(w.is_composition() && reference.is_composition());
    let norm = w.phi.norm();
    let compact_class = reference.phi.norm() < 1.0 - tol;
    if Regime::of(p, q) == Regime::QLtP || compact_class {
        if weighted || compact_class {
            return Ok((norm >= 1.0 - tol).then(|| format!("‖A_t‖ = {norm} left the compact class")));
        }
        let ok = classify_composition(&w.phi, p, q, tol)?.is_bounded();
        return Ok((!ok).then(|| "C_φ_t unbounded".to_string()));
    }
    if !weighted && !classify_composition(&w.phi, p, q, tol)?.is_bounded() {
        return Ok(Some("C_φ_t unbounded".into()));
    }
    // sampled matrices carry rounding from the frame products
    let loose = tol.max(1e-8);
    if !matrices_equivalent(&w.phi.a, &reference.phi.a, loose)? {
        return Ok(Some("A_t left the class [A]".into()));
    }
    if weighted && !b_equivalent(&reference.phi.a, &reference.phi.b, &w.phi.b, loose)? {
        return Ok(Some("b_t left the class [b]".into()));
    }
    Ok(None)
}

/// Samples the path on a uniform grid and checks component membership,
/// `lower bound ≤ M·Δt` for consecutive samples, and exact endpoints.
pub fn verify_path(h: &Homotopy, opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.grid < 2 {
        return Err(Error::Input("verification grid needs at least 2 points".into()));
    }
    let n = h.start.dim();
    let points = opts.test_points.clone().unwrap_or_else(|| default_test_points(n, opts.seed));
    let ts: Vec<f64> = (0..opts.grid).map(|i| i as f64 / (opts.grid - 1) as f64).collect();
    let samples = ts.iter().map(|&t| h.symbol_at(t)).collect::<Result<Vec<_>>>()?;
    let mut failures = Vec::new();
    for (t, w) in ts.iter().zip(&samples) {
        if let Some(reason) = component_failure(w, &h.start, h.p, h.q, opts.tol)? {
            failures.push(ComponentFailure { t: *t, reason });
        }
    }
    let mut gaps = Vec::with_capacity(opts.grid - 1);
    for i in 0..opts.grid - 1 {
        let d = op_distance_lower_bound(
            &samples[i],
            &samples[i + 1],
            h.q,
            &points,
            opts.samples,
            opts.seed.wrapping_add(1000 * i as u64),
        )?;
        let bound = opts.m_scale * h.bound_between(ts[i], ts[i + 1]);
        let violated = d.estimate.lower() > bound * (1.0 + GAP_SLACK) + 1e-12;
        gaps.push(GapCheck {
            t0: ts[i],
            t1: ts[i + 1],
            estimate: d.estimate,
            witness: d.witness,
            bound,
            violated,
        });
    }
    let endpoints_exact = samples[0] == h.start && samples[opts.grid - 1] == h.end;
    let violations = failures.len() + gaps.iter().filter(|g| g.violated).count() + usize::from(!endpoints_exact);
    Ok(VerifyReport {
        grid: opts.grid,
        m_scale: opts.m_scale,
        gaps,
        component_failures: failures,
        endpoints_exact,
        violations,
    })
}
