//! The component atlas: which operators can be joined by a norm-continuous path.
//!
//! Every predicate here works from fixed subspaces and projectors rather than
//! from a particular SVD, so the gauge freedom in `A = V(I_j ⊕ G)U` never
//! leaks into an answer.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{fixed_subspace, is_unitary, operator_norm, projector, svd, CMatrix, CVector};
use crate::operators::{classify_composition, image_basis, project, AffineMap, Regime, WeightedSymbol};

/// Canonical descriptor of `([A], [b])`.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentKey {
    /// `dim S_A`, the number of unit singular values.
    pub j: usize,
    /// Orthonormal basis of `S_A = {ζ : |Aζ| = |ζ|}`.
    #[serde(skip)]
    pub s_basis: Vec<CVector>,
    /// Projector onto `A(S_A)`.
    #[serde(rename = "P")]
    pub p: CMatrix,
    /// `A ζ` for each `ζ` in `s_basis`; two matrices are equivalent iff they
    /// share `S_A` and these images.
    #[serde(skip)]
    pub images: Vec<CVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_proj: Option<CVector>,
}

impl ComponentKey {
    /// Same `[A]` and, when both keys carry one, the same `[b]`.
    pub fn same_class(&self, other: &ComponentKey, tol: f64) -> bool {
        if self.j != other.j || self.p.max_abs_diff(&other.p) > 1e-8 {
            return false;
        }
        match (&self.b_proj, &other.b_proj) {
            (Some(a), Some(b)) => a.sub(b).norm() <= tol * (1.0 + a.norm() + b.norm()),
            _ => true,
        }
    }
}

/// Largest `|Aξ − Dξ|` over the orthonormal bases of `S_A` and `S_D`.
pub fn equivalence_defect(a: &CMatrix, d: &CMatrix, tol: f64) -> Result<f64> {
    check_dim(a.dim(), d.dim())?;
    let sa = fixed_subspace(a, tol)?;
    let sd = fixed_subspace(d, tol)?;
    Ok(sa
        .iter()
        .chain(&sd)
        .map(|xi| a.mul_vec(xi).sub(&d.mul_vec(xi)).norm())
        .fold(0.0, f64::max))
}

/// `A ~ D`: `Aξ = Dξ` whenever `|Aξ| = |ξ|` or `|Dξ| = |ξ|`.
///
/// Checked on the basis vectors of both fixed subspaces; linearity covers the
/// rest because each fixed subspace is a linear space when `‖A‖ ≤ 1`.
pub fn matrices_equivalent(a: &CMatrix, d: &CMatrix, tol: f64) -> Result<bool> {
    Ok(equivalence_defect(a, d, tol)? <= 10.0 * tol)
}

pub fn component_key(a: &CMatrix, b: Option<&CVector>, tol: f64) -> Result<ComponentKey> {
    let n = a.dim();
    if let Some(b) = b {
        check_dim(n, b.dim())?;
    }
    let s_basis = fixed_subspace(a, tol)?;
    let images = s_basis.iter().map(|z| a.mul_vec(z)).collect();
    let range = image_basis(a, tol)?;
    let p = projector(n, &range);
    Ok(ComponentKey {
        j: s_basis.len(),
        s_basis,
        p,
        images,
        b_proj: b.map(|b| project(&range, b)),
    })
}

/// `b1 ~ b2` by `[A]`: equal projections onto `A(S_A)`.
pub fn b_equivalent(a: &CMatrix, b1: &CVector, b2: &CVector, tol: f64) -> Result<bool> {
    check_dim(a.dim(), b1.dim())?;
    check_dim(a.dim(), b2.dim())?;
    let range = image_basis(a, tol)?;
    let diff = project(&range, &b1.sub(b2)).norm();
    Ok(diff <= tol * (1.0 + b1.norm() + b2.norm()))
}

fn require_bounded(phi: &AffineMap, p: f64, q: f64, tol: f64, which: &str) -> Result<()> {
    let v = classify_composition(phi, p, q, tol)?;
    if v.is_bounded() {
        Ok(())
    } else {
        let proj = v.projection.map(|x| format!(", ‖Pb‖ = {x:.3e}")).unwrap_or_default();
        Err(Error::Unbounded(format!(
            "{which} does not induce a bounded C_φ : F^{p} → F^{q} (‖A‖ = {:.12}{proj})",
            v.op_norm
        )))
    }
}

/// Whether `C_φ1` and `C_φ2` lie in one path component of the bounded
/// composition operators `F^p → F^q`.
pub fn same_component_composition(
    phi1: &AffineMap,
    phi2: &AffineMap,
    p: f64,
    q: f64,
    tol: f64,
) -> Result<bool> {
    check_dim(phi1.dim(), phi2.dim())?;
    require_bounded(phi1, p, q, tol, "first symbol")?;
    require_bounded(phi2, p, q, tol, "second symbol")?;
    match Regime::of(p, q) {
        Regime::QLtP => Ok(true),
        Regime::PLeQ => matrices_equivalent(&phi1.a, &phi2.a, tol),
    }
}

/// Same component of the nonzero bounded weighted composition operators.
///
/// Boundedness of `W_{ψ,φ}` is not decided by this crate; the caller asserts it
/// with `assume_bounded` (see `operators::m_sup_estimate` for a heuristic).
pub fn same_component_weighted(
    w1: &WeightedSymbol,
    w2: &WeightedSymbol,
    p: f64,
    q: f64,
    tol: f64,
    assume_bounded: bool,
) -> Result<bool> {
    check_dim(w1.dim(), w2.dim())?;
    if !assume_bounded {
        return Err(Error::Domain(
            "boundedness of weighted operators must be asserted by the caller".into(),
        ));
    }
    for (w, which) in [(w1, "first"), (w2, "second")] {
        let norm = w.phi.norm();
        if norm > 1.0 + tol {
            return Err(Error::Unbounded(format!(
                "{which} symbol has ‖A‖ = {norm} > 1; no weight makes W_ψ,φ bounded"
            )));
        }
    }
    match Regime::of(p, q) {
        Regime::QLtP => Ok(true),
        Regime::PLeQ => Ok(matrices_equivalent(&w1.phi.a, &w2.phi.a, tol)?
            && b_equivalent(&w1.phi.a, &w1.phi.b, &w2.phi.b, tol)?),
    }
}

/// `C_φ` is an isolated point of the bounded composition operators.
pub fn is_isolated(phi: &AffineMap, p: f64, q: f64, tol: f64) -> Result<bool> {
    require_bounded(phi, p, q, tol, "symbol")?;
    Ok(match Regime::of(p, q) {
        Regime::QLtP => false,
        // bounded with A unitary forces b = 0, and [A] = {A}
        Regime::PLeQ => is_unitary(&phi.a, 10.0 * tol),
    })
}

/// Weighted operators are never isolated: `W_{cψ,φ}` for `c` near one stays in
/// the component, since `c ↦ W_{cψ,φ}` is norm continuous.
pub fn is_isolated_weighted(_w: &WeightedSymbol, _p: f64, _q: f64) -> bool {
    false
}

/// A shared frame `(V, U, j)` in which every member of a class reads
/// `V (I_j ⊕ G) U` with `‖G‖ < 1`.
#[derive(Debug, Clone, Serialize)]
pub struct ClassFrame {
    #[serde(rename = "V")]
    pub v: CMatrix,
    #[serde(rename = "U")]
    pub u: CMatrix,
    pub j: usize,
    pub tol: f64,
}

impl ClassFrame {
    /// Frame from an SVD of a class representative.
    pub fn of(a: &CMatrix, tol: f64) -> Result<Self> {
        let f = svd(a)?;
        if f.sigma[0] > 1.0 + tol {
            return Err(Error::Domain(format!(
                "symbol cannot induce a bounded operator: ‖A‖ = {} > 1",
                f.sigma[0]
            )));
        }
        let j = f.sigma.iter().filter(|&&s| s >= 1.0 - tol).count();
        Ok(ClassFrame {
            v: f.v,
            u: f.u,
            j,
            tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    /// `V* M U*`.
    pub fn to_frame(&self, m: &CMatrix) -> CMatrix {
        self.v.adjoint().mul(m).mul(&self.u.adjoint())
    }

    /// `V M U`.
    pub fn from_frame(&self, m: &CMatrix) -> CMatrix {
        self.v.mul(m).mul(&self.u)
    }

    /// `V (I_j ⊕ G) U`.
    pub fn member(&self, g: &CMatrix) -> Result<CMatrix> {
        check_dim(self.dim() - self.j, g.dim())?;
        Ok(self.from_frame(&CMatrix::block_diag(&CMatrix::identity(self.j), g)))
    }

    /// The block `G` of a class member `D = V (I_j ⊕ G) U`.
    ///
    /// Fails when `D` does not have that shape in this frame, which happens
    /// exactly when `D` is outside the class.
    pub fn block_of(&self, d: &CMatrix) -> Result<CMatrix> {
        check_dim(self.dim(), d.dim())?;
        let m = self.to_frame(d);
        let (n, j) = (self.dim(), self.j);
        let slack = 1e-7;
        for r in 0..n {
            for c in 0..n {
                if r < j || c < j {
                    let target = if r == c { 1.0 } else { 0.0 };
                    let dev = (m.get(r, c) - crate::linalg::c(target, 0.0)).norm();
                    if dev > slack {
                        return Err(Error::DifferentComponents(format!(
                            "matrix is not of the form V(I_{j} ⊕ G)U in this frame (entry ({r},{c}) off by {dev:e})"
                        )));
                    }
                }
            }
        }
        let g = m.trailing_block(j);
        if j < n && operator_norm(&g) >= 1.0 - self.tol {
            return Err(Error::DifferentComponents(format!(
                "trailing block has norm {} ≥ 1, so the class has more than {j} unit directions",
                operator_norm(&g)
            )));
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::SymbolFn;
    use crate::linalg::{random, DEFAULT_TOL};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = DEFAULT_TOL;

    fn diag(d: &[f64]) -> CMatrix {
        CMatrix::diag_real(d)
    }

    fn map(d: &[f64], b: &[f64]) -> AffineMap {
        AffineMap::new(diag(d), CVector::from_real(b)).unwrap()
    }

    /// `V (I_j ⊕ G) U` with random unitaries and a random contraction `G`.
    fn class_member(n: usize, j: usize, rng: &mut ChaCha8Rng) -> (CMatrix, ClassFrame) {
        let v = random::unitary(n, rng);
        let u = random::unitary(n, rng);
        let frame = ClassFrame { v, u, j, tol: TOL };
        let g = random::with_norm(n - j, 0.9 * rand::Rng::random::<f64>(rng), rng);
        (frame.member(&g).unwrap(), frame)
    }

    #[test]
    fn equivalence_examples() {
        assert!(matrices_equivalent(&diag(&[0.3, 0.1]), &diag(&[0.9, 0.0]), TOL).unwrap());
        assert!(matrices_equivalent(&diag(&[1.0, 0.0]), &diag(&[1.0, 0.5]), TOL).unwrap());
        assert!(!matrices_equivalent(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]), TOL).unwrap());
        // ‖A‖ < 1 is never equivalent to a matrix with a unit direction
        assert!(!matrices_equivalent(&diag(&[0.99, 0.0]), &diag(&[1.0, 0.0]), TOL).unwrap());
        let err = matrices_equivalent(&diag(&[1.2, 0.0]), &diag(&[1.0, 0.0]), TOL).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn key_examples() {
        let k = component_key(&CMatrix::zeros(2), Some(&CVector::from_real(&[4.0, -1.0])), TOL)
            .unwrap();
        assert_eq!(k.j, 0);
        assert_eq!(k.p.frobenius_norm(), 0.0);
        assert_eq!(k.b_proj.unwrap().norm(), 0.0);

        let k = component_key(&diag(&[1.0, 0.3]), Some(&CVector::from_real(&[3.0, 7.0])), TOL)
            .unwrap();
        assert_eq!(k.j, 1);
        assert!(k.p.max_abs_diff(&diag(&[1.0, 0.0])) < 1e-14);
        assert!(k.b_proj.unwrap().sub(&CVector::from_real(&[3.0, 0.0])).norm() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random::unitary(3, &mut rng);
        let b = random::vector(3, &mut rng);
        let k = component_key(&u, Some(&b), TOL).unwrap();
        assert_eq!(k.j, 3);
        assert!(k.p.max_abs_diff(&CMatrix::identity(3)) < 1e-12);
        assert!(k.b_proj.unwrap().sub(&b).norm() < 1e-12);

        let json = serde_json::to_value(component_key(&diag(&[1.0, 0.0]), None, TOL).unwrap())
            .unwrap();
        assert_eq!(json["j"], 1);
        assert!(json.get("P").is_some() && json.get("b_proj").is_none());
    }

    #[test]
    fn b_equivalence_examples() {
        let a = diag(&[1.0, 0.5]);
        let v = |x: &[f64]| CVector::from_real(x);
        assert!(b_equivalent(&diag(&[0.5, 0.5]), &v(&[1.0, 0.0]), &v(&[9.0, 9.0]), TOL).unwrap());
        assert!(b_equivalent(&a, &v(&[1.0, 5.0]), &v(&[1.0, -3.0]), TOL).unwrap());
        assert!(!b_equivalent(&a, &v(&[1.0, 0.0]), &v(&[2.0, 0.0]), TOL).unwrap());
    }

    #[test]
    fn same_component_composition_examples() {
        let c1 = map(&[0.5, 0.0], &[3.0, 1.0]);
        let c2 = map(&[0.0, 0.9], &[-1.0, 0.0]);
        assert!(same_component_composition(&c1, &c2, 2.0, 2.0, TOL).unwrap());
        assert!(same_component_composition(&c1, &c2, 3.0, 1.0, TOL).unwrap());

        let f = map(&[1.0, 0.0], &[0.0, 1.0]);
        let g = map(&[0.0, 1.0], &[1.0, 0.0]);
        assert!(!same_component_composition(&f, &g, 2.0, 2.0, TOL).unwrap());
        assert!(!same_component_composition(&f, &g, 1.0, 4.0, TOL).unwrap());
        let err = same_component_composition(&f, &g, 4.0, 1.0, TOL).unwrap_err();
        assert!(matches!(err, Error::Unbounded(_)));
        // ⟨A e₁, b⟩ ≠ 0
        let bad = map(&[1.0, 0.0], &[1.0, 0.0]);
        assert!(matches!(
            same_component_composition(&bad, &f, 2.0, 2.0, TOL),
            Err(Error::Unbounded(_))
        ));
    }

    #[test]
    fn same_component_weighted_examples() {
        let ws = |d: &[f64], b: &[f64], psi: SymbolFn| WeightedSymbol::new(psi, map(d, b)).unwrap();
        let psi = SymbolFn::coordinate(2, 1);
        let chi = crate::fock::kernel(&CVector::from_real(&[0.0, 2.0]));
        let a = ws(&[1.0, 0.5], &[0.0, 1.0], psi.clone());
        let b = ws(&[1.0, 0.5], &[0.0, 1.0], chi.clone());
        assert!(same_component_weighted(&a, &b, 2.0, 2.0, TOL, true).unwrap());
        let e = ws(&[1.0, 0.5], &[0.0, -4.0], chi);
        assert!(same_component_weighted(&a, &e, 2.0, 2.0, TOL, true).unwrap());
        let f1 = ws(&[1.0, 0.5], &[1.0, 0.0], psi.clone());
        let f2 = ws(&[1.0, 0.5], &[2.0, 0.0], psi.clone());
        assert!(!same_component_weighted(&f1, &f2, 2.0, 2.0, TOL, true).unwrap());
        assert!(same_component_weighted(&f1, &f2, 2.0, 1.0, TOL, true).unwrap());
        assert!(matches!(
            same_component_weighted(&f1, &f2, 2.0, 2.0, TOL, false),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn isolation_examples() {
        assert!(is_isolated(&AffineMap::identity(2), 2.0, 2.0, TOL).unwrap());
        assert!(!is_isolated(&map(&[1.0, 0.5], &[0.0, 1.0]), 2.0, 2.0, TOL).unwrap());
        // the witness that [A] is not a singleton
        assert!(matrices_equivalent(&diag(&[1.0, 0.5]), &diag(&[1.0, 0.4]), TOL).unwrap());
        assert!(!is_isolated(&AffineMap::linear(CMatrix::zeros(2)), 3.0, 2.0, TOL).unwrap());
        assert!(matches!(
            is_isolated(&AffineMap::identity(2), 3.0, 2.0, TOL),
            Err(Error::Unbounded(_))
        ));
        let w = WeightedSymbol::composition(AffineMap::identity(1));
        assert!(!is_isolated_weighted(&w, 2.0, 2.0));
    }

    #[test]
    fn frame_recovers_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (a, frame) = class_member(4, 2, &mut rng);
        let g1 = random::with_norm(2, 0.7, &mut rng);
        let d = frame.member(&g1).unwrap();
        assert!(frame.block_of(&d).unwrap().max_abs_diff(&g1) < 1e-12);
        assert!(matrices_equivalent(&a, &d, TOL).unwrap());
        // the frame built from an SVD of A works for every class member
        let own = ClassFrame::of(&a, TOL).unwrap();
        assert_eq!(own.j, 2);
        let g1_own = own.block_of(&d).unwrap();
        assert!(own.member(&g1_own).unwrap().max_abs_diff(&d) < 1e-12);
        let outsider = random::unitary(4, &mut rng);
        assert!(matches!(own.block_of(&outsider), Err(Error::DifferentComponents(_))));
    }

    #[test]
    fn key_is_conjugation_covariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let (a, _) = class_member(3, 1, &mut rng);
            let b = random::vector(3, &mut rng);
            let v0 = random::unitary(3, &mut rng);
            let u0 = random::unitary(3, &mut rng);
            let a2 = v0.adjoint().mul(&a).mul(&u0.adjoint());
            let b2 = v0.adjoint().mul_vec(&b);
            let k1 = component_key(&a, Some(&b), TOL).unwrap();
            let k2 = component_key(&a2, Some(&b2), TOL).unwrap();
            assert_eq!(k1.j, k2.j);
            let moved = v0.adjoint().mul(&k1.p).mul(&v0);
            assert!(moved.max_abs_diff(&k2.p) < 1e-9);
            let bp = v0.adjoint().mul_vec(k1.b_proj.as_ref().unwrap());
            assert!(bp.sub(k2.b_proj.as_ref().unwrap()).norm() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn equivalence_is_an_equivalence(seed in any::<u64>(), n in 2usize..5, j in 0usize..4) {
            let j = j.min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, frame) = class_member(n, j, &mut rng);
            let d = frame.member(&random::with_norm(n - j, 0.8, &mut rng)).unwrap();
            let e = frame.member(&random::with_norm(n - j, 0.5, &mut rng)).unwrap();
            prop_assert!(matrices_equivalent(&a, &a, TOL).unwrap());
            prop_assert!(matrices_equivalent(&a, &d, TOL).unwrap());
            prop_assert!(matrices_equivalent(&d, &a, TOL).unwrap());
            prop_assert!(matrices_equivalent(&d, &e, TOL).unwrap());
            prop_assert!(matrices_equivalent(&a, &e, TOL).unwrap());
            let other = ClassFrame { v: random::unitary(n, &mut rng), ..frame.clone() };
            if j > 0 {
                let x = other.member(&random::with_norm(n - j, 0.5, &mut rng)).unwrap();
                prop_assert!(!matrices_equivalent(&a, &x, TOL).unwrap());
                prop_assert!(!matrices_equivalent(&x, &a, TOL).unwrap());
            }
        }

        #[test]
        fn key_ignores_svd_gauge(seed in any::<u64>(), n in 2usize..5, j in 1usize..4) {
            let j = j.min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, frame) = class_member(n, j, &mut rng);
            // another valid frame: rotate inside the unit block
            let h = random::unitary(j, &mut rng);
            let rot = CMatrix::block_diag(&h, &CMatrix::identity(n - j));
            let other = ClassFrame {
                v: frame.v.mul(&rot),
                u: rot.adjoint().mul(&frame.u),
                j,
                tol: TOL,
            };
            let g = frame.block_of(&a).unwrap();
            let g_other = other.block_of(&a).unwrap();
            prop_assert!(other.member(&g_other).unwrap().max_abs_diff(&a) < 1e-10);
            prop_assert!(g.singular_values().iter().zip(g_other.singular_values()).all(|(x, y)| (x - y).abs() < 1e-10));
            // the projector onto the first j columns of V is the same in both frames
            let cols = |f: &ClassFrame| (0..j).map(|k| f.v.column(k)).collect::<Vec<_>>();
            let p1 = projector(n, &cols(&frame));
            let p2 = projector(n, &cols(&other));
            let key = component_key(&a, None, TOL).unwrap();
            prop_assert!(p1.max_abs_diff(&p2) < 1e-10);
            prop_assert!(key.p.max_abs_diff(&p1) < 1e-8);
            prop_assert_eq!(key.j, j);
        }

        #[test]
        fn fixed_basis_is_isometric(seed in any::<u64>(), n in 1usize..5, j in 0usize..5) {
            let j = j.min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, _) = class_member(n, j, &mut rng);
            let key = component_key(&a, Some(&random::vector(n, &mut rng)), TOL).unwrap();
            for (z, az) in key.s_basis.iter().zip(&key.images) {
                prop_assert!((az.norm() - z.norm()).abs() <= 10.0 * TOL);
            }
            let p2 = key.p.mul(&key.p);
            prop_assert!(p2.max_abs_diff(&key.p) < 1e-8);
            prop_assert!(key.p.adjoint().max_abs_diff(&key.p) < 1e-12);
        }
    }
}
