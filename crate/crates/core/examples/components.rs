//! Component membership: matrix equivalence, `[b]`-classes, isolated points.

use focklab::operators::{AffineMap, WeightedSymbol};
use focklab::topology::{
    component_key, is_isolated, matrices_equivalent, same_component_composition, same_component_weighted,
};
use focklab::fock::SymbolFn;
use focklab::{CMatrix, CVector};

fn main() -> focklab::Result<()> {
    let tol = 1e-9;
    let a = CMatrix::diag_real(&[1.0, 0.5]);
    let d = CMatrix::diag_real(&[1.0, 0.0]);
    let e = CMatrix::diag_real(&[0.0, 1.0]);
    println!("diag(1, ½) ~ diag(1, 0): {}", matrices_equivalent(&a, &d, tol)?);
    println!("diag(1, 0) ~ diag(0, 1): {}", matrices_equivalent(&d, &e, tol)?);

    let key = component_key(&a, Some(&CVector::from_real(&[0.0, 2.0])), tol)?;
    println!("key of diag(1, ½): j = {}, P b = {:?}", key.j, key.b_proj.map(|v| v.norm()));

    let phi1 = AffineMap::new(a.clone(), CVector::from_real(&[0.0, 1.0]))?;
    let phi2 = AffineMap::new(d.clone(), CVector::from_real(&[0.0, -3.0]))?;
    for (p, q) in [(2.0, 2.0), (2.0, 1.0)] {
        match same_component_composition(&phi1, &phi2, p, q, tol) {
            Ok(same) => println!("p = {p}, q = {q}: same component {same}"),
            Err(err) => println!("p = {p}, q = {q}: {err}"),
        }
    }
    println!("C_z isolated for p ≤ q: {}", is_isolated(&AffineMap::identity(2), 1.0, 2.0, tol)?);

    // weighted: same [A] but translations in different [b]-classes
    let w1 = WeightedSymbol::new(SymbolFn::one(2), AffineMap::new(a.clone(), CVector::from_real(&[0.3, 0.0]))?)?;
    let w2 = WeightedSymbol::new(SymbolFn::one(2), AffineMap::new(a, CVector::from_real(&[-0.3, 0.0]))?)?;
    println!("weighted, [b] differ: same component {}", same_component_weighted(&w1, &w2, 2.0, 2.0, tol, true)?);
    Ok(())
}
