//! Entire functions of the form `Σ c_k · z^{α_k} · e^{⟨z, w_k⟩}` and their
//! Fock norms.
//!
//! The class contains kernels, constants and every image `ψ·(f∘φ)` of an
//! affine symbol, and is closed under composition with affine maps, products
//! and partial derivatives.

mod bounds;
mod norm;

pub use bounds::{check_derivative_bound, check_embedding, check_pointwise_bound, BoundReport};
pub use norm::{fock_norm, FockParams, NormEstimate, NormMethod, NormMethodKind};

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{c, CMatrix, CVector, C64};

/// One term `coeff · z^alpha · e^{⟨z, w⟩}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(with = "complex_pair")]
    pub coeff: C64,
    pub alpha: Vec<u32>,
    pub w: CVector,
}

mod complex_pair {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

/// Entire function on `ℂⁿ` in canonical form. Serialized as its term list.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SymbolFn {
    #[serde(skip)]
    n: usize,
    terms: Vec<Term>,
}

/// Coefficients whose cancellation leaves less than this fraction are zeroed.
const CANCEL_REL: f64 = 1e-14;

fn round12(x: f64) -> f64 {
    (x * 1e12).round()
}

fn key_cmp(a: &Term, b: &Term) -> Ordering {
    a.alpha.cmp(&b.alpha).then_with(|| {
        for (x, y) in a.w.as_slice().iter().zip(b.w.as_slice()) {
            let o = round12(x.re)
                .total_cmp(&round12(y.re))
                .then(round12(x.im).total_cmp(&round12(y.im)));
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

impl SymbolFn {
    /// Builds and canonicalizes; every term must have dimension `n`.
    pub fn from_terms(n: usize, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            check_dim(n, t.alpha.len())?;
            check_dim(n, t.w.dim())?;
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) || !t.w.is_finite() {
                return Err(Error::Input("term has non-finite data".into()));
            }
        }
        Ok(Self::canonical(n, terms))
    }

    fn canonical(n: usize, mut terms: Vec<Term>) -> Self {
        terms.retain(|t| t.coeff != c(0.0, 0.0));
        terms.sort_by(key_cmp);
        let mut out: Vec<Term> = Vec::with_capacity(terms.len());
        let mut scale: Vec<f64> = Vec::new();
        for t in terms {
            if let Some(last) = out.last_mut() {
                if key_cmp(last, &t) == Ordering::Equal {
                    let s = scale.last_mut().unwrap();
                    *s = s.max(t.coeff.norm());
                    last.coeff += t.coeff;
                    continue;
                }
            }
            scale.push(t.coeff.norm());
            out.push(t);
        }
        let terms = out
            .into_iter()
            .zip(scale)
            .filter(|(t, s)| t.coeff.norm() > CANCEL_REL * s)
            .map(|(t, _)| t)
            .collect();
        SymbolFn { n, terms }
    }

    pub fn zero(n: usize) -> Self {
        SymbolFn { n, terms: vec![] }
    }

    pub fn constant(n: usize, value: C64) -> Self {
        Self::canonical(
            n,
            vec![Term {
                coeff: value,
                alpha: vec![0; n],
                w: CVector::zeros(n),
            }],
        )
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, c(1.0, 0.0))
    }

    /// The coordinate function `z_i`.
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut alpha = vec![0; n];
        alpha[i] = 1;
        Self::canonical(
            n,
            vec![Term {
                coeff: c(1.0, 0.0),
                alpha,
                w: CVector::zeros(n),
            }],
        )
    }

    /// Monomial `coeff · z^alpha`.
    pub fn monomial(coeff: C64, alpha: Vec<u32>) -> Self {
        let n = alpha.len();
        Self::canonical(
            n,
            vec![Term {
                coeff,
                alpha,
                w: CVector::zeros(n),
            }],
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// No polynomial factors: a finite combination of kernels.
    pub fn is_pure_kernel(&self) -> bool {
        self.terms.iter().all(|t| t.alpha.iter().all(|&a| a == 0))
    }

    pub fn evaluate(&self, z: &CVector) -> Result<C64> {
        check_dim(self.n, z.dim())?;
        Ok(self
            .terms
            .iter()
            .map(|t| t.coeff * monomial_value(&t.alpha, z) * z.inner(&t.w).exp())
            .sum())
    }

    /// `log |f(z)|`, robust to overflow of the individual exponentials.
    pub fn log_abs(&self, z: &CVector) -> Result<f64> {
        check_dim(self.n, z.dim())?;
        Ok(self.log_abs_unchecked(z.as_slice()))
    }

    pub(crate) fn log_abs_unchecked(&self, z: &[C64]) -> f64 {
        // log-magnitude and phase per term, then a scaled sum
        let mut parts: Vec<(f64, C64)> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut log_mag = t.coeff.norm().ln();
            let mut phase = t.coeff / t.coeff.norm();
            let mut vanishes = false;
            for (zi, &a) in z.iter().zip(&t.alpha) {
                if a > 0 {
                    let r = zi.norm();
                    if r == 0.0 {
                        vanishes = true;
                        break;
                    }
                    log_mag += a as f64 * r.ln();
                    phase *= (zi / r).powu(a);
                }
            }
            if vanishes {
                continue;
            }
            let e: C64 = z.iter().zip(t.w.as_slice()).map(|(a, b)| a * b.conj()).sum();
            log_mag += e.re;
            phase *= c(e.im.cos(), e.im.sin());
            parts.push((log_mag, phase));
        }
        let max = parts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return max;
        }
        let sum: C64 = parts
            .iter()
            .map(|(l, ph)| ph * (l - max).exp())
            .sum();
        max + sum.norm().ln()
    }

    pub fn add(&self, other: &SymbolFn) -> Result<SymbolFn> {
        check_dim(self.n, other.n)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self::canonical(self.n, terms))
    }

    pub fn sub(&self, other: &SymbolFn) -> Result<SymbolFn> {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> SymbolFn {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff * s,
                ..t.clone()
            })
            .collect();
        Self::canonical(self.n, terms)
    }

    /// Linear combination `(1 − a)·self + a·other`.
    pub fn affine_combination(&self, other: &SymbolFn, a: C64) -> Result<SymbolFn> {
        self.scale(c(1.0, 0.0) - a).add(&other.scale(a))
    }

    /// Term-wise equality with coefficients and frequencies within `tol`
    /// (relative to the larger coefficient).
    pub fn approx_eq(&self, other: &SymbolFn, tol: f64) -> bool {
        if self.n != other.n {
            return false;
        }
        let diff = match self.sub(other) {
            Ok(d) => d,
            Err(_) => return false,
        };
        let scale = self
            .terms
            .iter()
            .chain(&other.terms)
            .map(|t| t.coeff.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        diff.terms.iter().all(|t| t.coeff.norm() <= tol * scale)
    }

    /// `self · other`.
    pub fn multiply(&self, other: &SymbolFn) -> Result<SymbolFn> {
        check_dim(self.n, other.n)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    alpha: a.alpha.iter().zip(&b.alpha).map(|(x, y)| x + y).collect(),
                    w: a.w.add(&b.w),
                });
            }
        }
        Ok(Self::canonical(self.n, terms))
    }

    /// `∂f/∂z_i`, using `∂/∂z_i e^{⟨z,w⟩} = conj(w_i)·e^{⟨z,w⟩}`.
    pub fn partial_derivative(&self, i: usize) -> Result<SymbolFn> {
        if i >= self.n {
            return Err(Error::Input(format!("coordinate {i} out of range for n = {}", self.n)));
        }
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            let a = t.alpha[i];
            if a > 0 {
                let mut alpha = t.alpha.clone();
                alpha[i] -= 1;
                terms.push(Term {
                    coeff: t.coeff * a as f64,
                    alpha,
                    w: t.w.clone(),
                });
            }
            terms.push(Term {
                coeff: t.coeff * t.w.get(i).conj(),
                alpha: t.alpha.clone(),
                w: t.w.clone(),
            });
        }
        Ok(Self::canonical(self.n, terms))
    }

    /// `f(Az + b)`, expanded exactly.
    pub fn compose_affine(&self, a: &CMatrix, b: &CVector) -> Result<SymbolFn> {
        check_dim(self.n, a.dim())?;
        check_dim(self.n, b.dim())?;
        let n = self.n;
        let adj = a.adjoint();
        let mut terms = Vec::new();
        for t in &self.terms {
            // e^{⟨Az+b, w⟩} = e^{⟨b,w⟩} · e^{⟨z, A*w⟩}
            let factor = t.coeff * b.inner(&t.w).exp();
            let w = adj.mul_vec(&t.w);
            let mut poly = Poly::one(n);
            for (row, &power) in t.alpha.iter().enumerate() {
                if power == 0 {
                    continue;
                }
                let linear = Poly::linear((0..n).map(|k| a.get(row, k)).collect(), b.get(row));
                for _ in 0..power {
                    poly = poly.mul(&linear);
                }
            }
            for (alpha, coeff) in poly.0 {
                terms.push(Term {
                    coeff: factor * coeff,
                    alpha,
                    w: w.clone(),
                });
            }
        }
        Ok(Self::canonical(n, terms))
    }

    /// `z' ↦ f(head, z')`: fixes the first `head.dim()` coordinates.
    pub fn fix_leading(&self, head: &CVector) -> Result<SymbolFn> {
        let s = head.dim();
        if s > self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: s,
            });
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let lead = monomial_value(&t.alpha[..s], head) * head.inner(&t.w.head(s)).exp();
                Term {
                    coeff: t.coeff * lead,
                    alpha: t.alpha[s..].to_vec(),
                    w: t.w.tail(s),
                }
            })
            .collect();
        Ok(Self::canonical(self.n - s, terms))
    }

    /// Regards `self` (on `ℂᵐ`) as a function on `ℂⁿ` of the coordinates
    /// `offset..offset+m`.
    pub fn embed(&self, n: usize, offset: usize) -> Result<SymbolFn> {
        if offset + self.n > n {
            return Err(Error::Input(format!(
                "cannot embed a function of {} variables at offset {offset} in dimension {n}",
                self.n
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut alpha = vec![0; n];
                alpha[offset..offset + self.n].copy_from_slice(&t.alpha);
                let mut w = vec![c(0.0, 0.0); n];
                w[offset..offset + self.n].copy_from_slice(t.w.as_slice());
                Term {
                    coeff: t.coeff,
                    alpha,
                    w: CVector::from_vec(w),
                }
            })
            .collect();
        Ok(Self::canonical(n, terms))
    }

    /// Distinct term frequencies.
    pub(crate) fn frequencies(&self) -> Vec<CVector> {
        let mut out: Vec<CVector> = Vec::new();
        for t in &self.terms {
            if !out.iter().any(|w| w.sub(&t.w).norm() < 1e-12) {
                out.push(t.w.clone());
            }
        }
        out
    }
}

/// `K_w(z) = e^{⟨z, w⟩}`.
pub fn kernel(w: &CVector) -> SymbolFn {
    let n = w.dim();
    SymbolFn::canonical(
        n,
        vec![Term {
            coeff: c(1.0, 0.0),
            alpha: vec![0; n],
            w: w.clone(),
        }],
    )
}

/// `k_w = e^{-|w|²/2} K_w`, a unit vector in every `F^p`.
pub fn normalized_kernel(w: &CVector) -> SymbolFn {
    kernel(w).scale(c((-w.norm_sqr() / 2.0).exp(), 0.0))
}

fn monomial_value(alpha: &[u32], z: &CVector) -> C64 {
    alpha
        .iter()
        .zip(z.as_slice())
        .filter(|(&a, _)| a > 0)
        .map(|(&a, zi)| zi.powu(a))
        .product()
}

/// Sparse polynomial: multi-index → coefficient.
struct Poly(BTreeMap<Vec<u32>, C64>);

impl Poly {
    fn one(n: usize) -> Self {
        Poly(BTreeMap::from([(vec![0; n], c(1.0, 0.0))]))
    }

    /// `Σ_k coeffs_k z_k + constant`.
    fn linear(coeffs: Vec<C64>, constant: C64) -> Self {
        let n = coeffs.len();
        let mut map = BTreeMap::new();
        if constant != c(0.0, 0.0) {
            map.insert(vec![0; n], constant);
        }
        for (k, a) in coeffs.into_iter().enumerate() {
            if a != c(0.0, 0.0) {
                let mut alpha = vec![0; n];
                alpha[k] = 1;
                map.insert(alpha, a);
            }
        }
        Poly(map)
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut map: BTreeMap<Vec<u32>, C64> = BTreeMap::new();
        for (a, x) in &self.0 {
            for (b, y) in &other.0 {
                let alpha: Vec<u32> = a.iter().zip(b).map(|(i, j)| i + j).collect();
                *map.entry(alpha).or_insert(c(0.0, 0.0)) += x * y;
            }
        }
        Poly(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_symbol(n: usize, terms: usize, max_deg: u32, rng: &mut ChaCha8Rng) -> SymbolFn {
        let terms = (0..terms)
            .map(|_| Term {
                coeff: random::gaussian(rng),
                alpha: (0..n).map(|_| rng.random_range(0..=max_deg)).collect(),
                w: random::vector(n, rng),
            })
            .collect();
        SymbolFn::from_terms(n, terms).unwrap()
    }

    fn close(a: C64, b: C64, rel: f64) -> bool {
        (a - b).norm() <= rel * (1.0 + b.norm())
    }

    #[test]
    fn kernel_at_origin_is_one() {
        let k0 = kernel(&CVector::zeros(3));
        assert_eq!(k0, SymbolFn::one(3));
        let w = CVector::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.0)]);
        let kw = kernel(&w);
        assert!(close(kw.evaluate(&CVector::zeros(2)).unwrap(), c(1.0, 0.0), 1e-15));
        let at_w = kw.evaluate(&w).unwrap();
        assert!(close(at_w, c(w.norm_sqr().exp(), 0.0), 1e-14));
    }

    #[test]
    fn evaluate_conjugates_frequency() {
        // f = z₁·e^{⟨z,(0,1)⟩} at z = (2, 3i): 2·e^{3i·conj(1)}... ⟨z,w⟩ = z₂·conj(1) = 3i
        let f = SymbolFn::coordinate(2, 0)
            .multiply(&kernel(&CVector::from_real(&[0.0, 1.0])))
            .unwrap();
        let z = CVector::from_vec(vec![c(2.0, 0.0), c(0.0, 3.0)]);
        let expected = c(2.0, 0.0) * c(0.0, 3.0).exp();
        assert!(close(f.evaluate(&z).unwrap(), expected, 1e-14));
        // with w = (0, i) the conjugation flips the sign of the phase
        let g = kernel(&CVector::from_vec(vec![c(0.0, 0.0), c(0.0, 1.0)]));
        let got = g.evaluate(&z).unwrap();
        assert!(close(got, c(3.0, 0.0).exp(), 1e-14));
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let f = SymbolFn::one(2);
        assert!(matches!(
            f.evaluate(&CVector::zeros(3)),
            Err(Error::Dimension { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn compose_with_swap() {
        // f = z₁, φ(z) = (z₂ + 1, z₁) → z₂ + 1
        let a = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let b = CVector::from_real(&[1.0, 0.0]);
        let g = SymbolFn::coordinate(2, 0).compose_affine(&a, &b).unwrap();
        let expected = SymbolFn::coordinate(2, 1).add(&SymbolFn::one(2)).unwrap();
        assert_eq!(g, expected);
    }

    #[test]
    fn compose_with_identity_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_symbol(2, 4, 2, &mut rng);
        let g = f.compose_affine(&CMatrix::identity(2), &CVector::zeros(2)).unwrap();
        assert!(g.approx_eq(&f, 1e-14));
    }

    #[test]
    fn compose_kernel_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random::matrix(3, &mut rng);
        let b = random::vector(3, &mut rng);
        let w = random::vector(3, &mut rng);
        let got = kernel(&w).compose_affine(&a, &b).unwrap();
        let expected = kernel(&a.adjoint().mul_vec(&w)).scale(b.inner(&w).exp());
        assert!(got.approx_eq(&expected, 1e-14));
        for _ in 0..100 {
            let z = random::vector(3, &mut rng);
            let lhs = got.evaluate(&z).unwrap();
            let rhs = kernel(&w).evaluate(&a.mul_vec(&z).add(&b)).unwrap();
            assert!(close(lhs, rhs, 1e-12));
        }
    }

    #[test]
    fn derivative_examples() {
        let z1sq = SymbolFn::monomial(c(1.0, 0.0), vec![2]);
        let d = z1sq.partial_derivative(0).unwrap();
        assert_eq!(d, SymbolFn::monomial(c(2.0, 0.0), vec![1]));
        assert!(SymbolFn::one(2).partial_derivative(1).unwrap().is_zero());
    }

    #[test]
    fn derivative_of_kernel_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random::vector(2, &mut rng);
        let kw = kernel(&w);
        let d = kw.partial_derivative(0).unwrap();
        assert!(d.approx_eq(&kw.scale(w.get(0).conj()), 1e-15));
        let h = 1e-5;
        for _ in 0..20 {
            let z = random::vector(2, &mut rng);
            let step = CVector::basis(2, 0).scale_real(h);
            let fd = (kw.evaluate(&z.add(&step)).unwrap() - kw.evaluate(&z.sub(&step)).unwrap())
                / (2.0 * h);
            let exact = d.evaluate(&z).unwrap();
            assert!((fd - exact).norm() <= 1e-6 * exact.norm().max(1e-300));
        }
    }

    #[test]
    fn canonical_merging_and_cancellation() {
        let w = CVector::from_real(&[0.3]);
        let f = kernel(&w).add(&kernel(&w)).unwrap();
        assert_eq!(f.terms().len(), 1);
        assert_eq!(f.terms()[0].coeff, c(2.0, 0.0));
        assert!(kernel(&w).sub(&kernel(&w)).unwrap().is_zero());
        // frequencies equal after rounding to 12 decimals merge
        let near = CVector::from_real(&[0.3 + 1e-14]);
        assert_eq!(kernel(&w).add(&kernel(&near)).unwrap().terms().len(), 1);
        // tiny but genuine coefficients survive: they can carry large norm
        let big = CVector::from_real(&[10.0]);
        let g = SymbolFn::one(1).add(&kernel(&big).scale(c(1e-20, 0.0))).unwrap();
        assert_eq!(g.terms().len(), 2);
    }

    #[test]
    fn fix_leading_and_embed() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = random_symbol(3, 5, 2, &mut rng);
        let head = random::vector(1, &mut rng);
        let g = f.fix_leading(&head).unwrap();
        assert_eq!(g.dim(), 2);
        for _ in 0..20 {
            let tail = random::vector(2, &mut rng);
            let lhs = g.evaluate(&tail).unwrap();
            let rhs = f.evaluate(&head.concat(&tail)).unwrap();
            assert!(close(lhs, rhs, 1e-12));
        }
        let e = g.embed(3, 1).unwrap();
        let z = random::vector(3, &mut rng);
        assert!(close(e.evaluate(&z).unwrap(), g.evaluate(&z.tail(1)).unwrap(), 1e-14));
        let all = f.fix_leading(&random::vector(3, &mut rng)).unwrap();
        assert_eq!(all.dim(), 0);
        assert!(all.terms().len() <= 1);
    }

    #[test]
    fn log_abs_survives_overflow() {
        let w = CVector::from_real(&[40.0]);
        let f = kernel(&w).add(&SymbolFn::one(1)).unwrap();
        let z = CVector::from_real(&[40.0]);
        // |f(z)| = e^{1600} + 1
        assert!((f.log_abs(&z).unwrap() - 1600.0).abs() < 1e-9);
        assert_eq!(SymbolFn::zero(1).log_abs(&z).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn json_shape() {
        let f = kernel(&CVector::from_vec(vec![c(1.0, -1.0)])).scale(c(0.5, 0.0));
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"[{"coeff":[0.5,0.0],"alpha":[0],"w":[[1.0,-1.0]]}]"#);
        let terms: Vec<Term> = serde_json::from_str(&s).unwrap();
        assert_eq!(SymbolFn::from_terms(1, terms).unwrap(), f);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closure_commutes_with_evaluation(seed in any::<u64>(), n in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_symbol(n, 3, 2, &mut rng);
            let g = random_symbol(n, 2, 1, &mut rng);
            let a = random::matrix(n, &mut rng);
            let b = random::vector(n, &mut rng);
            let comp = f.compose_affine(&a, &b).unwrap();
            let prod = f.multiply(&g).unwrap();
            let i = rng.random_range(0..n);
            let der = f.partial_derivative(i).unwrap();
            for _ in 0..100 {
                let z = random::vector(n, &mut rng);
                let fz = f.evaluate(&z).unwrap();
                let lhs = comp.evaluate(&z).unwrap();
                let rhs = f.evaluate(&a.mul_vec(&z).add(&b)).unwrap();
                prop_assert!(close(lhs, rhs, 1e-8));
                prop_assert!(close(prod.evaluate(&z).unwrap(), fz * g.evaluate(&z).unwrap(), 1e-8));
                let h = 1e-6;
                let step = CVector::basis(n, i).scale_real(h);
                let fd = (f.evaluate(&z.add(&step)).unwrap() - f.evaluate(&z.sub(&step)).unwrap()) / (2.0 * h);
                prop_assert!((der.evaluate(&z).unwrap() - fd).norm() <= 1e-5 * (1.0 + fd.norm()));
            }
        }

        #[test]
        fn log_abs_matches_evaluate(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_symbol(2, 4, 2, &mut rng);
            let z = random::vector(2, &mut rng);
            let v = f.evaluate(&z).unwrap().norm();
            prop_assume!(v > 1e-8);
            prop_assert!((f.log_abs(&z).unwrap() - v.ln()).abs() < 1e-9);
        }
    }
}
