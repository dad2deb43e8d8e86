//! Build paths inside one component, print their Lipschitz constants and check
//! them against kernel lower bounds on a grid.

use focklab::fock::{kernel, SymbolFn};
use focklab::homotopy::{build_component_path, verify_path, PathOptions, VerifyOptions};
use focklab::operators::{AffineMap, WeightedSymbol};
use focklab::{CMatrix, CVector, C64};

fn report(label: &str, w1: &WeightedSymbol, w2: &WeightedSymbol, p: f64, q: f64) -> focklab::Result<()> {
    let opts = PathOptions { assume_bounded: true, ..PathOptions::default() };
    let h = build_component_path(w1, w2, p, q, &opts)?;
    println!("{label}: {:?}, M = {:.4}", h.recipe, h.lipschitz());
    for s in &h.segments {
        println!("  [{:.2}, {:.2}] {:?} α {:?} M_seg = {:.4}", s.t0, s.t1, s.recipe, s.alpha, s.rate());
    }
    let rep = verify_path(&h, &VerifyOptions { samples: 5000, ..VerifyOptions::default() })?;
    let worst = rep
        .gaps
        .iter()
        .filter(|g| g.bound > 0.0)
        .map(|g| g.estimate.value / g.bound)
        .fold(0.0, f64::max);
    println!("  verified: {} (largest gap / bound = {worst:.3})", rep.passed());
    Ok(())
}

fn main() -> focklab::Result<()> {
    let map = |a: &[f64], b: &[f64]| AffineMap::new(CMatrix::diag_real(a), CVector::from_real(b));
    let comp = WeightedSymbol::composition;

    report("compact", &comp(map(&[0.5, 0.1], &[0.3, 0.0])?), &comp(map(&[0.0, 0.4], &[0.0, -0.5])?), 2.0, 2.0)?;
    report("‖A‖ = 1", &comp(map(&[1.0, 0.5], &[0.0, 1.0])?), &comp(map(&[1.0, -0.3], &[0.0, 0.2])?), 2.0, 2.0)?;

    let h = 0.5;
    let lead = kernel(&CVector::from_real(&[-h, 0.0]));
    let w1 = WeightedSymbol::new(lead.clone(), map(&[1.0, 0.3], &[h, 0.0])?)?;
    let chi = lead.multiply(&SymbolFn::one(2).add(&SymbolFn::coordinate(2, 1))?)?;
    let w2 = WeightedSymbol::new(chi.scale(C64::new(-1.0, 0.0)), map(&[1.0, 0.0], &[h, 0.4])?)?;
    report("weighted with translation", &w1, &w2, 1.0, 2.0)?;
    Ok(())
}
