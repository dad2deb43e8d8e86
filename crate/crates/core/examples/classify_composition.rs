//! Bounded / compact verdicts for `C_φ`, including the projection boundary.

use focklab::operators::{classify_composition, AffineMap};
use focklab::{CMatrix, CVector};

fn main() -> focklab::Result<()> {
    let cases = [
        ("A = 0, b = (1, 0)", AffineMap::constant(CVector::from_real(&[1.0, 0.0]))),
        ("A = diag(1, ½), b = (0, 1)", AffineMap::new(CMatrix::diag_real(&[1.0, 0.5]), CVector::from_real(&[0.0, 1.0]))?),
        ("A = diag(1, ½), b = (1, 0)", AffineMap::new(CMatrix::diag_real(&[1.0, 0.5]), CVector::from_real(&[1.0, 0.0]))?),
        ("A = I", AffineMap::identity(2)),
        ("A = 1.1·I", AffineMap::linear(CMatrix::identity(2).scale(1.1))),
    ];
    for (p, q) in [(2.0, 2.0), (1.0, 3.0), (3.0, 1.0)] {
        println!("p = {p}, q = {q}");
        for (label, phi) in &cases {
            let v = classify_composition(phi, p, q, 1e-9)?;
            let proj = v.projection.map(|x| format!(", ‖Pb‖ = {x:.3}")).unwrap_or_default();
            println!("  {label:<28} {:?} (‖A‖ = {:.3}{proj})", v.kind, v.op_norm);
        }
    }
    Ok(())
}
