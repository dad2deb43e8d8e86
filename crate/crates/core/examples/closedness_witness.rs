//! A weighted operator with `‖A‖ = 1` stays a fixed distance away from every
//! operator with `‖A'‖ < 1`.

use focklab::certify::{closedness_witness, default_test_points, op_distance_lower_bound};
use focklab::fock::SymbolFn;
use focklab::operators::{AffineMap, WeightedSymbol};
use focklab::{CMatrix, CVector};

fn main() -> focklab::Result<()> {
    // ψ = z₂ vanishes at the origin of the normal frame, so the shifted case applies
    let phi = AffineMap::new(CMatrix::diag_real(&[1.0, 0.5]), CVector::from_real(&[0.0, 1.0]))?;
    let w = WeightedSymbol::new(SymbolFn::coordinate(2, 1), phi)?;
    let wit = closedness_witness(&w, 2.0, 2.0, 1e-9, 0)?;
    println!("witness {:.6} ({:?}, z₀' = {:?})", wit.value, wit.case, wit.z0.as_slice());

    let mut points = default_test_points(2, 1);
    points.extend(wit.points.iter().cloned());
    for t in [0.0, 0.5, 0.9, 0.99] {
        let near = WeightedSymbol::new(
            SymbolFn::coordinate(2, 1),
            AffineMap::new(CMatrix::diag_real(&[t, 0.5]), CVector::from_real(&[0.0, 1.0]))?,
        )?;
        let d = op_distance_lower_bound(&w, &near, 2.0, &points, 40_000, 2)?;
        println!("A' = diag({t}, ½): ‖W − W'‖ ≥ {:.4}", d.estimate.value);
    }
    Ok(())
}
