//! Conjugating a weighted symbol to its normal form and checking
//! `W_{ψ,φ} = C_U W_{ψ̃,φ̃} C_V` pointwise.

use focklab::fock::{kernel, SymbolFn};
use focklab::linalg::random;
use focklab::operators::{apply, extract_psi_star, normalize, AffineMap, WeightedSymbol};
use focklab::topology::ClassFrame;
use focklab::{CMatrix, CVector, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> focklab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let frame = ClassFrame {
        v: random::unitary(3, &mut rng),
        u: random::unitary(3, &mut rng),
        j: 1,
        tol: 1e-9,
    };
    let a = frame.member(&CMatrix::diag_real(&[0.6, 0.2]))?;
    let b = frame.v.mul_vec(&CVector::from_real(&[0.0, 0.4, -0.7]));
    let psi = kernel(&CVector::from_real(&[0.1, 0.0, 0.3])).add(&SymbolFn::coordinate(3, 2))?;
    let w = WeightedSymbol::new(psi, AffineMap::new(a, b)?)?;

    let nz = normalize(&w, 1e-9)?;
    println!("singular values {:?}, j = {}, s = {}", nz.a_tilde, nz.j, nz.s);
    println!("b̃ = {:?}", nz.b_tilde.as_slice());

    let f = kernel(&CVector::from_vec(vec![C64::new(0.2, 0.5), C64::new(-1.0, 0.0), C64::new(0.0, 0.3)]));
    let z = CVector::from_real(&[0.7, -0.2, 1.3]);
    let direct = apply(&w, &f)?.evaluate(&z)?;
    let conjugated = nz.conjugated_apply(&f)?.evaluate(&z)?;
    println!("W f(z) = {direct:.12}\nC_U W̃ C_V f(z) = {conjugated:.12}");

    // ψ ≡ 1 with a bounded C_φ always factors, with b̃_[j] = 0
    let ps = extract_psi_star(&WeightedSymbol::composition(w.phi.clone()), 1e-9, 0)?;
    println!("ψ = 1: j = {}, |b̃_[j]| = {:.1e}, residual {:.1e}", ps.j, ps.b_tilde_head.norm(), ps.residual);
    Ok(())
}
