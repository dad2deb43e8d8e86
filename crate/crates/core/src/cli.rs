//! Batch front-end: JSON job specs in, JSON reports out.
//!
//! Every command is a pure function of the job and its settings, so the
//! same file and seed reproduce the same bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certify::{
    closedness_witness, default_test_points, op_distance_lower_bound, separation_certificate,
};
use crate::error::{check_dim, Error, Result};
use crate::fock::{fock_norm, kernel, normalized_kernel, FockParams, NormMethod, SymbolFn, Term};
use crate::homotopy::{
    build_component_path, path_between_constants, path_scale_to_constant, verify_path, PathOptions,
    VerifyOptions,
};
use crate::linalg::{c, fixed_subspace, CMatrix, CVector, DEFAULT_TOL};
use crate::operators::{
    apply, classify_composition, extract_psi_star, m_sup_estimate, normalize, AffineMap, Regime,
    WeightedSymbol,
};
use crate::topology::{
    component_key, is_isolated, matrices_equivalent, same_component_composition,
    same_component_weighted,
};

/// Default Monte Carlo sample budget per norm estimate.
pub const DEFAULT_BUDGET: u64 = 20_000;

/// One operator of a job: `W_{ψ,φ}` with `φ(z) = Az + b`; `C_φ` when `psi`
/// is absent.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    #[serde(default)]
    pub psi: Option<Vec<Term>>,
    #[serde(rename = "A")]
    pub a: CMatrix,
    #[serde(default)]
    pub b: Option<CVector>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Monte Carlo samples per norm estimate.
    #[serde(default)]
    pub budget: Option<u64>,
    /// Sample count along paths.
    #[serde(default)]
    pub grid: Option<usize>,
    /// Vouch that the weighted operators of the job are bounded.
    #[serde(default)]
    pub assume_bounded: bool,
    pub operators: BTreeMap<String, OperatorSpec>,
    #[serde(default)]
    pub functions: BTreeMap<String, Vec<Term>>,
}

/// Command-line values that take precedence over the job file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub budget: Option<u64>,
    pub grid: Option<usize>,
}

/// A validated job with resolved settings.
#[derive(Debug, Clone)]
pub struct Job {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
    pub tol: f64,
    pub budget: u64,
    pub grid: usize,
    pub assume_bounded: bool,
    pub operators: BTreeMap<String, WeightedSymbol>,
    pub functions: BTreeMap<String, SymbolFn>,
}

impl Job {
    /// Parses and validates; schema errors name the offending JSON path.
    pub fn from_json(text: &str, overrides: &Overrides) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: JobSpec = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Input(format!("schema error at `{}`: {}", e.path(), e.inner())))?;
        Job::from_spec(spec, overrides)
    }

    pub fn from_path(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        Job::from_json(&text, overrides)
    }

    pub fn from_spec(spec: JobSpec, overrides: &Overrides) -> Result<Self> {
        let n = spec.n;
        if n == 0 {
            return Err(Error::Input("`n` must be positive".into()));
        }
        for (name, v) in [("p", spec.p), ("q", spec.q)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Input(format!("`{name}` must lie in (0, ∞), got {v}")));
            }
        }
        let tol = overrides.tol.or(spec.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1e-2) {
            return Err(Error::Input(format!("`tol` must lie in (0, 0.01), got {tol}")));
        }
        let grid = overrides.grid.or(spec.grid).unwrap_or(21);
        if grid < 2 {
            return Err(Error::Input("`grid` needs at least 2 points".into()));
        }
        let mut operators = BTreeMap::new();
        for (name, op) in spec.operators {
            let at = |e: Error| Error::Input(format!("operators.{name}: {e}"));
            check_dim(n, op.a.dim()).map_err(at)?;
            let b = op.b.unwrap_or_else(|| CVector::zeros(n));
            let phi = AffineMap::new(op.a, b).map_err(at)?;
            let w = match op.psi {
                None => WeightedSymbol::composition(phi),
                Some(terms) => {
                    let psi = SymbolFn::from_terms(n, terms).map_err(at)?;
                    WeightedSymbol::new(psi, phi).map_err(at)?
                }
            };
            operators.insert(name, w);
        }
        let mut functions = BTreeMap::new();
        for (name, terms) in spec.functions {
            let f = SymbolFn::from_terms(n, terms)
                .map_err(|e| Error::Input(format!("functions.{name}: {e}")))?;
            functions.insert(name, f);
        }
        Ok(Job {
            n,
            p: spec.p,
            q: spec.q,
            seed: overrides.seed.or(spec.seed).unwrap_or(0),
            tol,
            budget: overrides.budget.or(spec.budget).unwrap_or(DEFAULT_BUDGET),
            grid,
            assume_bounded: spec.assume_bounded,
            operators,
            functions,
        })
    }

    pub fn operator(&self, name: &str) -> Result<&WeightedSymbol> {
        self.operators
            .get(name)
            .ok_or_else(|| Error::Input(format!("no operator named `{name}`")))
    }

    fn header(&self) -> Value {
        json!({"n": self.n, "p": self.p, "q": self.q, "seed": self.seed, "tol": self.tol})
    }

    fn path_options(&self) -> PathOptions {
        PathOptions {
            tol: self.tol,
            seed: self.seed,
            samples: self.budget.max(1000) * 10,
            assume_bounded: self.assume_bounded,
            ..PathOptions::default()
        }
    }
}

/// Process exit status for an error: 2 when boundedness was required and
/// failed, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Unbounded(_) => 2,
        _ => 1,
    }
}

fn to_text(v: &impl Serialize) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Input(format!("serialization failed: {e}")))
}

fn to_line(v: &impl Serialize) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Input(format!("serialization failed: {e}")))
}

fn err_value(e: &Error) -> Value {
    json!({"error": e.to_string()})
}

fn classify_one(job: &Job, w: &WeightedSymbol) -> Result<Value> {
    if w.is_composition() {
        let verdict = classify_composition(&w.phi, job.p, job.q, job.tol)?;
        let mut v = serde_json::to_value(verdict).expect("verdict serializes");
        if verdict.is_bounded() {
            let key = component_key(&w.phi.a, Some(&w.phi.b), job.tol)?;
            v["j"] = json!(key.j);
            v["isolated"] = json!(is_isolated(&w.phi, job.p, job.q, job.tol)?);
        }
        return Ok(v);
    }
    let op_norm = w.phi.norm();
    if op_norm > 1.0 + job.tol {
        return Ok(json!({"kind": "Unbounded", "weighted": true, "op_norm": op_norm}));
    }
    // boundedness of weighted operators is reported as evidence, not decided
    let nz = normalize(w, job.tol)?;
    let sup = m_sup_estimate(w, job.seed)?;
    let psi_star = if nz.j > 0 && Regime::of(job.p, job.q) == Regime::PLeQ {
        Some(match extract_psi_star(w, job.tol, job.seed) {
            Ok(ps) => json!({"ok": true, "residual": ps.residual, "b_tilde_head": ps.b_tilde_head}),
            Err(e) => json!({"ok": false, "error": e.to_string()}),
        })
    } else {
        None
    };
    Ok(json!({
        "kind": "Undecided",
        "weighted": true,
        "op_norm": op_norm,
        "j": nz.j,
        "m_sup": sup,
        "psi_star": psi_star,
    }))
}

/// Classification of every operator in the job.
pub fn cmd_classify(job: &Job) -> Result<String> {
    let mut ops = serde_json::Map::new();
    for (name, w) in &job.operators {
        let v = classify_one(job, w).unwrap_or_else(|e| err_value(&e));
        ops.insert(name.clone(), v);
    }
    let mut out = job.header();
    out["operators"] = Value::Object(ops);
    to_text(&out)
}

fn same_component(job: &Job, w1: &WeightedSymbol, w2: &WeightedSymbol) -> Result<bool> {
    if w1.is_composition() && w2.is_composition() {
        same_component_composition(&w1.phi, &w2.phi, job.p, job.q, job.tol)
    } else {
        same_component_weighted(w1, w2, job.p, job.q, job.tol, job.assume_bounded)
    }
}

/// Component comparison, a kernel lower bound on the distance and, when one
/// applies, a certificate of separation.
pub fn cmd_compare(job: &Job, name1: &str, name2: &str) -> Result<String> {
    let (w1, w2) = (job.operator(name1)?, job.operator(name2)?);
    let same = same_component(job, w1, w2)?;
    let points = default_test_points(job.n, job.seed);
    let distance = op_distance_lower_bound(w1, w2, job.q, &points, job.budget, job.seed)?;
    let mut out = job.header();
    out["operators"] = json!([name1, name2]);
    out["same_component"] = json!(same);
    out["distance_lower_bound"] = serde_json::to_value(&distance).expect("serializes");
    if !same {
        if let Some(cert) = certificate(job, w1, w2)? {
            out["certificate"] = cert;
        }
    }
    to_text(&out)
}

/// Separation certificate for non-equivalent composition symbols, else a
/// closedness witness when exactly one side has `‖A‖ = 1`.
fn certificate(job: &Job, w1: &WeightedSymbol, w2: &WeightedSymbol) -> Result<Option<Value>> {
    if Regime::of(job.p, job.q) == Regime::QLtP {
        return Ok(None);
    }
    if w1.is_composition() && w2.is_composition() && !matrices_equivalent(&w1.phi.a, &w2.phi.a, job.tol)? {
        let cert = separation_certificate(&w1.phi, &w2.phi, job.p, job.q, job.tol)?;
        return Ok(Some(json!({"type": "separation", "value": cert.value, "detail": cert})));
    }
    let unit = |w: &WeightedSymbol| w.phi.norm() >= 1.0 - job.tol;
    let target = match (unit(w1), unit(w2)) {
        (true, false) => w1,
        (false, true) => w2,
        _ => return Ok(None),
    };
    let wit = closedness_witness(target, job.p, job.q, job.tol, job.seed)?;
    Ok(Some(json!({"type": "closedness", "value": wit.value, "detail": wit})))
}

/// Certificate JSON for a pair in different components.
pub fn cmd_certify(job: &Job, name1: &str, name2: &str) -> Result<String> {
    let (w1, w2) = (job.operator(name1)?, job.operator(name2)?);
    let cert = certificate(job, w1, w2)?.ok_or_else(|| {
        Error::Domain("no certificate applies: the operators are not separated by a known bound".into())
    })?;
    let mut out = job.header();
    out["operators"] = json!([name1, name2]);
    out["certificate"] = cert;
    to_text(&out)
}

#[derive(Serialize)]
struct PathSample<'a> {
    t: f64,
    #[serde(rename = "A")]
    a: &'a CMatrix,
    b: &'a CVector,
    psi: &'a SymbolFn,
}

/// JSON lines: a header with recipes and Lipschitz constants, one line per
/// grid sample, and the verification summary.
pub fn cmd_path(job: &Job, name1: &str, name2: &str) -> Result<String> {
    let (w1, w2) = (job.operator(name1)?, job.operator(name2)?);
    let h = build_component_path(w1, w2, job.p, job.q, &job.path_options())?;
    let segments: Vec<Value> = h
        .segments
        .iter()
        .map(|s| {
            json!({"recipe": s.recipe, "t0": s.t0, "t1": s.t1, "alpha": s.alpha,
                   "m": s.m, "scale": s.scale, "rate": s.rate()})
        })
        .collect();
    let mut lines = Vec::with_capacity(job.grid + 2);
    let mut head = job.header();
    head["operators"] = json!([name1, name2]);
    head["recipe"] = json!(h.recipe);
    head["M"] = json!(h.lipschitz());
    head["segments"] = Value::Array(segments);
    lines.push(to_line(&head)?);
    for i in 0..job.grid {
        let t = i as f64 / (job.grid - 1) as f64;
        let w = h.symbol_at(t)?;
        lines.push(to_line(&PathSample {
            t,
            a: &w.phi.a,
            b: &w.phi.b,
            psi: &w.psi,
        })?);
    }
    let report = verify_path(
        &h,
        &VerifyOptions {
            grid: job.grid,
            samples: job.budget,
            seed: job.seed,
            tol: job.tol,
            ..VerifyOptions::default()
        },
    )?;
    let max_ratio = report
        .gaps
        .iter()
        .filter(|g| g.bound > 0.0)
        .map(|g| g.estimate.value / g.bound)
        .fold(0.0, f64::max);
    lines.push(to_line(&json!({
        "verify": {
            "passed": report.passed(),
            "violations": report.violations,
            "endpoints_exact": report.endpoints_exact,
            "component_failures": report.component_failures,
            "max_gap_ratio": max_ratio,
        }
    }))?);
    Ok(lines.join("\n"))
}

/// `‖f‖_{n,p}` and `‖f‖_{n,q}` for a named function, or for the weight of a
/// named operator.
pub fn cmd_norms(job: &Job, name: &str) -> Result<String> {
    let f = match job.functions.get(name) {
        Some(f) => f,
        None => &job.operator(name)?.psi,
    };
    let method = NormMethod::Auto {
        samples: job.budget,
        seed: job.seed,
    };
    let mut out = job.header();
    out["function"] = json!(name);
    out["norm_p"] = serde_json::to_value(fock_norm(f, FockParams::new(job.n, job.p)?, method)?).expect("serializes");
    out["norm_q"] = serde_json::to_value(fock_norm(f, FockParams::new(job.n, job.q)?, method)?).expect("serializes");
    to_text(&out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> SelfCheck {
    match run() {
        Ok((passed, detail)) => SelfCheck { name, passed, detail },
        Err(e) => SelfCheck {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Quick invariant suite over every module.
pub fn selftest(seed: u64) -> Vec<SelfCheck> {
    let diag = |d: &[f64]| CMatrix::diag_real(d);
    let v = |x: &[f64]| CVector::from_real(x);
    vec![
        check("kernel norm, exact Gram", || {
            let k = normalized_kernel(&CVector::from_vec(vec![c(0.7, -0.4), c(1.2, 0.0)]));
            let e = fock_norm(&k, FockParams::new(2, 2.0)?, NormMethod::ExactGram)?;
            Ok(((e.value - 1.0).abs() < 1e-12, format!("{}", e.value)))
        }),
        check("kernel norm, Monte Carlo p = 1", || {
            let k = normalized_kernel(&v(&[1.0]));
            let e = fock_norm(&k, FockParams::new(1, 1.0)?, NormMethod::MonteCarlo { samples: 100_000, seed })?;
            Ok(((e.lower()..=e.upper()).contains(&1.0), format!("{} ± {}", e.value, e.abs_error)))
        }),
        check("fixed subspace of diag(1, 0.5)", || {
            let s = fixed_subspace(&diag(&[1.0, 0.5]), DEFAULT_TOL)?;
            Ok((s.len() == 1, format!("dim {}", s.len())))
        }),
        check("projection criterion at the boundary", || {
            let ok = classify_composition(&AffineMap::new(diag(&[1.0, 0.5]), v(&[0.0, 1.0]))?, 2.0, 2.0, DEFAULT_TOL)?;
            let bad = classify_composition(&AffineMap::new(diag(&[1.0, 0.5]), v(&[1.0, 0.0]))?, 2.0, 2.0, DEFAULT_TOL)?;
            Ok((ok.is_bounded() && !bad.is_bounded(), format!("{:?} / {:?}", ok.kind, bad.kind)))
        }),
        check("normalization conjugation", || {
            let psi = kernel(&v(&[0.3, -0.2])).add(&SymbolFn::coordinate(2, 1))?;
            let a = CMatrix::from_rows(&[vec![c(0.3, 0.4), c(0.1, 0.0)], vec![c(0.0, -0.2), c(0.5, 0.1)]])?;
            let w = WeightedSymbol::new(psi, AffineMap::new(a, v(&[0.2, 0.1]))?)?;
            let f = kernel(&v(&[0.5, 1.0]));
            let nz = normalize(&w, DEFAULT_TOL)?;
            let (lhs, rhs) = (apply(&w, &f)?, nz.conjugated_apply(&f)?);
            let z = CVector::from_vec(vec![c(0.4, 0.9), c(-1.1, 0.3)]);
            let r = (lhs.evaluate(&z)? - rhs.evaluate(&z)?).norm();
            Ok((r < 1e-10, format!("residual {r:e}")))
        }),
        check("separation certificate", || {
            let phi1 = AffineMap::new(diag(&[1.0, 0.0]), v(&[0.0, 1.0]))?;
            let phi2 = AffineMap::new(diag(&[0.0, 1.0]), v(&[0.0, 0.0]))?;
            let cert = separation_certificate(&phi1, &phi2, 2.0, 2.0, DEFAULT_TOL)?;
            Ok((cert.value >= 0.499, format!("{}", cert.value)))
        }),
        check("constant path Lipschitz constant", || {
            let m = path_between_constants(&v(&[0.0]), &v(&[1.0]), 2.0, 2.0)?.lipschitz();
            let expected = 2.0 * 2.5f64.exp();
            Ok(((m - expected).abs() < 1e-12 * expected, format!("{m}")))
        }),
        check("verified scaling path", || {
            let h = path_scale_to_constant(&AffineMap::linear(diag(&[0.5])), 2.0, 2.0, &PathOptions::default())?;
            let rep = verify_path(&h, &VerifyOptions { samples: 4000, seed, ..VerifyOptions::default() })?;
            Ok((rep.passed(), format!("{} violations", rep.violations)))
        }),
        check("closedness witness of the identity", || {
            let w = WeightedSymbol::composition(AffineMap::identity(2));
            let wit = closedness_witness(&w, 2.0, 2.0, DEFAULT_TOL, seed)?;
            Ok(((wit.value - 1.0).abs() < 1e-12, format!("{}", wit.value)))
        }),
    ]
}

pub fn cmd_selftest(seed: u64) -> Result<(String, bool)> {
    let checks = selftest(seed);
    let passed = checks.iter().all(|c| c.passed);
    Ok((to_text(&json!({"seed": seed, "passed": passed, "checks": checks}))?, passed))
}
