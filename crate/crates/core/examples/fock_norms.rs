//! Fock norms of kernels and mixed functions by each available method.

use focklab::fock::{check_embedding, fock_norm, kernel, normalized_kernel, FockParams, NormMethod, SymbolFn};
use focklab::{CVector, C64};

fn main() -> focklab::Result<()> {
    let w = CVector::from_vec(vec![C64::new(0.8, -0.3), C64::new(0.0, 1.1)]);
    let k = normalized_kernel(&w);
    for p in [0.5, 1.0, 2.0, 4.0] {
        let params = FockParams::new(2, p)?;
        let mc = fock_norm(&k, params, NormMethod::MonteCarlo { samples: 200_000, seed: 1 })?;
        println!("‖k_w‖_{{2,{p}}} ≈ {:.5} ± {:.5}", mc.value, mc.abs_error);
    }
    let exact = fock_norm(&k, FockParams::new(2, 2.0)?, NormMethod::ExactGram)?;
    println!("exact Gram at p = 2: {:.15}", exact.value);

    // z₁ + i·K_w is not a pure kernel sum, so only quadrature and sampling apply
    let f = SymbolFn::coordinate(2, 0).add(&kernel(&w).scale(C64::new(0.0, 1.0)))?;
    let params = FockParams::new(2, 1.0)?;
    let quad = fock_norm(&f, params, NormMethod::Quadrature { nodes: 24 })?;
    let mc = fock_norm(&f, params, NormMethod::MonteCarlo { samples: 400_000, seed: 2 })?;
    println!("‖z₁ + i K_w‖_{{2,1}}: quadrature {:.6}, Monte Carlo {:.6} ± {:.6}", quad.value, mc.value, mc.abs_error);

    let rep = check_embedding(&f, 1.0, 2.0, NormMethod::Auto { samples: 400_000, seed: 3 })?;
    println!(
        "embedding F¹ → F²: ‖f‖₂ = {:.5} ≤ {:.4}·‖f‖₁ = {:.5} (margin {:.3})",
        rep.norm_q.value,
        rep.constant,
        rep.constant * rep.norm_p.value,
        rep.margin
    );
    Ok(())
}
