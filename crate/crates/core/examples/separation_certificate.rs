//! Lower bound ≥ ½ on `‖C_φ − C_ϕ‖` for non-equivalent matrices, checked
//! against the kernel test at the witness points.

use focklab::certify::{op_distance_lower_bound, separation_certificate};
use focklab::operators::{AffineMap, WeightedSymbol};
use focklab::{CMatrix, CVector};

fn main() -> focklab::Result<()> {
    let phi1 = AffineMap::new(CMatrix::diag_real(&[1.0, 0.0]), CVector::from_real(&[0.0, 1.0]))?;
    let phi2 = AffineMap::new(CMatrix::diag_real(&[0.0, 1.0]), CVector::zeros(2))?;
    let cert = separation_certificate(&phi1, &phi2, 2.0, 2.0, 1e-9)?;
    println!(
        "certificate {:.6} on side {:?}, ξ = {:?}, |Aξ − Dξ| = {:.3}, λ = {:?}",
        cert.value,
        cert.side,
        cert.xi.as_slice(),
        cert.defect,
        cert.lambda
    );
    let measured = op_distance_lower_bound(
        &WeightedSymbol::composition(phi1),
        &WeightedSymbol::composition(phi2),
        2.0,
        &cert.witness_points,
        10_000,
        0,
    )?;
    println!("kernel bound at the witness points: {:.6}", measured.estimate.value);
    Ok(())
}
