//! Exhaustive Knill-Laflamme checking: `<i|A^dag B|j> = Lambda_AB delta_ij`
//! for every pattern pair of a family and every pair of encoded kets.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{Boundary, CodeSpec};
use crate::error::{Error, Result};
use crate::operator::SingleRegisterError;
use crate::pattern::{ErrorPattern, PatternFamily};
use crate::scalar::Overlap;
use crate::state::{inner_product, BasisKet, RegisterState};

pub const SCHEMA_VERSION: u32 = 1;

/// Full Lambda matrices are kept for families up to this size.
pub const MAX_LAMBDA_FAMILY: usize = 2048;

const BOUNDARY_WITNESS_CAP: usize = 16;
const LAMBDA_SAMPLE_CAP: usize = 32;
const FAIL_FAST_CHUNK: usize = 32;

/// Upper bound on stored amplitudes across all error-applied kets.
pub const MAX_CACHED_TERMS: u128 = 50_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct KlOptions {
    pub tol: f64,
    /// Compare exactly where amplitudes allow; otherwise everything is float.
    pub exact: bool,
    pub fail_fast: bool,
}

impl Default for KlOptions {
    fn default() -> Self {
        KlOptions {
            tol: 1e-9,
            exact: true,
            fail_fast: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// A failing `<i|A^dag B|j>` entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub a_index: usize,
    pub b_index: usize,
    pub a: ErrorPattern,
    pub b: ErrorPattern,
    pub i: Vec<u32>,
    pub j: Vec<u32>,
    pub observed: [f64; 2],
    /// `Lambda_AB` (taken from logical ket 0) on the diagonal, 0 off it.
    pub expected: [f64; 2],
    pub deviation: f64,
    /// True when the pair touches a boundary register of the truncated window.
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub width: usize,
    pub window: usize,
    pub max_errors: usize,
    pub basis: Vec<SingleRegisterError>,
    pub support: (usize, usize),
    pub size: usize,
}

impl FamilySummary {
    pub fn of(family: &PatternFamily, size: usize) -> Self {
        FamilySummary {
            width: family.width(),
            window: family.window(),
            max_errors: family.max_errors(),
            basis: family.basis().to_vec(),
            support: family.support_range(),
            size,
        }
    }
}

/// Result restricted to pattern pairs whose joint support avoids the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorSummary {
    pub verdict: Verdict,
    pub max_deviation: f64,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSample {
    pub a: usize,
    pub b: usize,
    pub value: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaKind {
    Identity,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSummary {
    pub kind: LambdaKind,
    pub rank: usize,
    pub min_eigenvalue: f64,
    pub hermitian_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlReport {
    pub schema_version: u32,
    pub code: String,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub exact: bool,
    pub family: FamilySummary,
    pub logical_dim: usize,
    pub pairs_checked: u64,
    /// Whether every pair was checked; streaming runs stop after the first failing chunk.
    pub exhaustive: bool,
    pub max_deviation: f64,
    pub witness: Option<Witness>,
    pub interior: InteriorSummary,
    pub boundary_failures: u64,
    pub boundary_witnesses: Vec<Witness>,
    pub lambda_samples: Vec<LambdaSample>,
    pub lambda_summary: Option<LambdaSummary>,
    pub elapsed_ms: u64,
    #[serde(skip)]
    pub lambda: Option<DMatrix<Complex64>>,
}

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn touches_boundary(a: &ErrorPattern, b: &ErrorPattern, boundary: Boundary, width: usize) -> bool {
    a.iter()
        .chain(b.iter())
        .any(|(p, _)| p <= boundary.head || p + boundary.tail > width)
}

struct PairOutcome {
    a: usize,
    b: usize,
    lambda: Complex64,
    max_dev: f64,
    /// `(i, j, observed, expected, deviation)` of the worst failing entry.
    failure: Option<(usize, usize, Complex64, Complex64, f64)>,
}

fn check_pair(a: usize, b: usize, cache: &[Vec<RegisterState>], tol: f64) -> Result<PairOutcome> {
    let (ka, kb) = (&cache[a], &cache[b]);
    let lam = inner_product(&ka[0], &kb[0])?;
    let zero = Overlap::Float(Complex64::new(0.0, 0.0));
    let mut max_dev: f64 = 0.0;
    let mut failure: Option<(usize, usize, Complex64, Complex64, f64)> = None;
    for (i, si) in ka.iter().enumerate() {
        for (j, sj) in kb.iter().enumerate() {
            if i == 0 && j == 0 {
                continue;
            }
            let v = inner_product(si, sj)?;
            let (ok, expected) = if i == j {
                (v.equals_within(&lam, tol), lam.to_complex())
            } else {
                (v.is_zero_within(tol), zero.to_complex())
            };
            let exact_hit = ok && v.is_exact() && lam.is_exact();
            let dev = if exact_hit {
                0.0
            } else {
                (v.to_complex() - expected).norm()
            };
            max_dev = max_dev.max(dev);
            if !ok && failure.as_ref().is_none_or(|f| dev > f.4) {
                failure = Some((i, j, v.to_complex(), expected, dev));
            }
        }
    }
    Ok(PairOutcome {
        a,
        b,
        lambda: lam.to_complex(),
        max_dev,
        failure,
    })
}

/// Checks `code` against every pattern pair of `family`.
pub fn kl_check(code: &CodeSpec, family: &PatternFamily, opts: &KlOptions) -> Result<KlReport> {
    let start = Instant::now();
    if family.width() != code.width() {
        return Err(Error::Shape(format!(
            "family spans {} registers but the code has {}",
            family.width(),
            code.width()
        )));
    }
    if code.kets().is_empty() {
        return Err(Error::Config("code has no encoded kets".into()));
    }
    // graded order: pattern pairs are visited by weight, then enumeration order,
    // so low-weight witnesses surface first; reports keep enumeration indices
    let mut order: Vec<(usize, ErrorPattern)> = family.iter().enumerate().collect();
    order.sort_by_key(|(_, p)| p.weight());
    let (index, patterns): (Vec<usize>, Vec<ErrorPattern>) = order.into_iter().unzip();
    let kets: Vec<RegisterState> = if opts.exact {
        code.kets().to_vec()
    } else {
        code.kets().iter().map(RegisterState::to_float).collect()
    };
    let f = patterns.len();
    let per_pattern: u128 = kets.iter().map(|k| k.len() as u128).sum();
    // families too large to cache whole are walked chunk by chunk and stop at the
    // first failing chunk, as with fail-fast
    let streaming = opts.fail_fast || per_pattern * f as u128 > MAX_CACHED_TERMS;
    // error-applied kets, extended chunk by chunk when streaming
    let mut cache: Vec<Vec<RegisterState>> = Vec::new();
    let mut exact = true;

    let keep_lambda = f <= MAX_LAMBDA_FAMILY;
    let mut lambda = keep_lambda.then(|| DMatrix::from_element(f, f, Complex64::new(0.0, 0.0)));
    let mut samples = Vec::new();
    let mut max_dev: f64 = 0.0;
    let mut pairs_checked = 0u64;
    let mut first: Option<Witness> = None;
    let mut interior_first: Option<Witness> = None;
    let mut interior_max: f64 = 0.0;
    let mut boundary_failures = 0u64;
    let mut boundary_witnesses = Vec::new();

    let logical = |idx: usize| -> Vec<u32> {
        BasisKet::from_index(code.levels(), code.logical_symbols(), idx as u128)
            .map(|k| k.digits().to_vec())
            .unwrap_or_default()
    };

    let chunk = if streaming { FAIL_FAST_CHUNK } else { f.max(1) };
    let mut b0 = 0;
    while b0 < f {
        let b1 = (b0 + chunk).min(f);
        if per_pattern * b1 as u128 > MAX_CACHED_TERMS {
            return Err(Error::Config(format!(
                "{b1} of {f} patterns checked without a failure; {per_pattern} amplitudes per pattern exceeds the cache budget beyond that, restrict the support range"
            )));
        }
        let fresh: Vec<Vec<RegisterState>> = patterns[cache.len()..b1]
            .par_iter()
            .map(|p| kets.iter().map(|k| p.apply(k)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        exact &= fresh.iter().flatten().all(RegisterState::is_exact);
        cache.extend(fresh);
        let outcomes: Vec<Vec<PairOutcome>> = (b0..b1)
            .into_par_iter()
            .map(|b| {
                (0..=b)
                    .map(|a| check_pair(a, b, &cache, opts.tol))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for o in outcomes.into_iter().flatten() {
            pairs_checked += 1;
            max_dev = max_dev.max(o.max_dev);
            if let Some(l) = lambda.as_mut() {
                l[(index[o.a], index[o.b])] = o.lambda;
                l[(index[o.b], index[o.a])] = o.lambda.conj();
            }
            if samples.len() < LAMBDA_SAMPLE_CAP {
                samples.push(LambdaSample {
                    a: index[o.a],
                    b: index[o.b],
                    value: pair(o.lambda),
                });
            }
            let boundary = touches_boundary(
                &patterns[o.a],
                &patterns[o.b],
                code.boundary(),
                code.width(),
            );
            if !boundary {
                interior_max = interior_max.max(o.max_dev);
            }
            if let Some((i, j, obs, exp, dev)) = o.failure {
                let w = Witness {
                    a_index: index[o.a],
                    b_index: index[o.b],
                    a: patterns[o.a].clone(),
                    b: patterns[o.b].clone(),
                    i: logical(i),
                    j: logical(j),
                    observed: pair(obs),
                    expected: pair(exp),
                    deviation: dev,
                    boundary,
                };
                if boundary {
                    boundary_failures += 1;
                    if boundary_witnesses.len() < BOUNDARY_WITNESS_CAP {
                        boundary_witnesses.push(w.clone());
                    }
                } else if interior_first.is_none() {
                    interior_first = Some(w.clone());
                }
                if first.is_none() {
                    first = Some(w);
                }
            }
        }
        b0 = b1;
        if streaming && first.is_some() {
            break;
        }
    }

    let verdict = if first.is_some() {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    let lambda_summary = match (&lambda, verdict) {
        (Some(l), Verdict::Pass) => Some(summarize_lambda(l, opts.tol)),
        _ => None,
    };
    Ok(KlReport {
        schema_version: SCHEMA_VERSION,
        code: code.label().to_string(),
        verdict,
        tolerance: opts.tol,
        exact,
        family: FamilySummary::of(family, f),
        logical_dim: code.logical_dim(),
        pairs_checked,
        exhaustive: pairs_checked == f as u64 * (f as u64 + 1) / 2,
        max_deviation: max_dev,
        witness: first,
        interior: InteriorSummary {
            verdict: if interior_first.is_some() {
                Verdict::Fail
            } else {
                Verdict::Pass
            },
            max_deviation: interior_max,
            witness: interior_first,
        },
        boundary_failures,
        boundary_witnesses,
        lambda_samples: samples,
        lambda_summary,
        elapsed_ms: start.elapsed().as_millis() as u64,
        lambda: if verdict.passed() { lambda } else { None },
    })
}

fn summarize_lambda(l: &DMatrix<Complex64>, tol: f64) -> LambdaSummary {
    let f = l.nrows();
    let herm = (l - l.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let eig = l.clone().symmetric_eigen().eigenvalues;
    let top = eig.iter().cloned().fold(0.0, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let rank = eig
        .iter()
        .filter(|&&e| e > tol.max(1e-9) * top.max(1.0))
        .count();
    let identity = (0..f).all(|r| {
        (0..f).all(|c| {
            let target = if r == c { 1.0 } else { 0.0 };
            (l[(r, c)] - Complex64::new(target, 0.0)).norm() <= tol.max(1e-12)
        })
    });
    LambdaSummary {
        kind: if identity {
            LambdaKind::Identity
        } else {
            LambdaKind::Degenerate
        },
        rank,
        min_eigenvalue: min,
        hermitian_deviation: herm,
    }
}

/// The full Hermitian Lambda matrix with its diagnostics.
#[derive(Clone, Debug)]
pub struct LambdaMatrix {
    pub matrix: DMatrix<Complex64>,
    pub summary: LambdaSummary,
}

/// Lambda over all family pairs; errors when the code fails the family.
pub fn lambda_matrix(
    code: &CodeSpec,
    family: &PatternFamily,
    opts: &KlOptions,
) -> Result<LambdaMatrix> {
    let report = kl_check(code, family, opts)?;
    if !report.verdict.passed() {
        return Err(Error::KlFailed {
            max_deviation: report.max_deviation,
        });
    }
    let matrix = report.lambda.ok_or_else(|| {
        Error::Config(format!(
            "Lambda is only formed for families of at most {MAX_LAMBDA_FAMILY} patterns"
        ))
    })?;
    let summary = report
        .lambda_summary
        .expect("passing report carries a summary");
    Ok(LambdaMatrix { matrix, summary })
}

/// Recomputes a witness entry from scratch in float arithmetic and returns its deviation.
pub fn reevaluate(code: &CodeSpec, w: &Witness) -> Result<f64> {
    let zero = vec![0u32; code.logical_symbols()];
    let amp = |pa: &ErrorPattern, pb: &ErrorPattern, i: &[u32], j: &[u32]| -> Result<Complex64> {
        let left = pa.apply(&code.ket(i)?.to_float())?;
        let right = pb.apply(&code.ket(j)?.to_float())?;
        Ok(inner_product(&left, &right)?.to_complex())
    };
    let observed = amp(&w.a, &w.b, &w.i, &w.j)?;
    let expected = if w.i == w.j {
        amp(&w.a, &w.b, &zero, &zero)?
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok((observed - expected).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::BuiltinCode;
    use crate::operator::{additive_basis, weyl_basis};

    #[test]
    fn shor_single_errors() {
        let c = CodeSpec::builtin(BuiltinCode::Shor9, 2, 1).unwrap();
        let fam = PatternFamily::single_register(9, weyl_basis(2)).unwrap();
        let r = kl_check(&c, &fam, &KlOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.family.size, 28);
        assert!(r.exact);
        assert_eq!(r.max_deviation, 0.0);
        let s = r.lambda_summary.unwrap();
        assert_eq!(s.kind, LambdaKind::Degenerate);
        assert!(s.min_eigenvalue > -1e-9);
        assert!(s.hermitian_deviation < 1e-12);
    }

    #[test]
    fn identity_code_fails() {
        let c = CodeSpec::builtin(BuiltinCode::Identity, 2, 2).unwrap();
        let fam = PatternFamily::new(2, 2, 1, weyl_basis(2)).unwrap();
        let r = kl_check(&c, &fam, &KlOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.witness.unwrap();
        assert!(reevaluate(&c, &w).unwrap() > 1e-6);
    }

    #[test]
    fn spin_conv_lambda_identity() {
        let c = CodeSpec::builtin(BuiltinCode::SpinConv, 2, 2).unwrap();
        let fam = PatternFamily::new(8, 4, 1, additive_basis(2)).unwrap();
        let l = lambda_matrix(&c, &fam, &KlOptions::default()).unwrap();
        assert_eq!(l.summary.kind, LambdaKind::Identity);
        assert_eq!(l.summary.rank, l.matrix.nrows());
        assert_eq!(l.matrix[(0, 0)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn width_mismatch() {
        let c = CodeSpec::builtin(BuiltinCode::Shor9, 2, 1).unwrap();
        let fam = PatternFamily::single_register(8, weyl_basis(2)).unwrap();
        assert!(matches!(
            kl_check(&c, &fam, &KlOptions::default()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn float_mode_agrees() {
        let c = CodeSpec::builtin(BuiltinCode::Perfect5, 2, 1).unwrap();
        let fam = PatternFamily::single_register(5, weyl_basis(2)).unwrap();
        let opts = KlOptions {
            exact: false,
            ..KlOptions::default()
        };
        let r = kl_check(&c, &fam, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(!r.exact);
        assert!(r.max_deviation < 1e-12);
    }

    #[test]
    fn lambda_of_failing_code_is_an_error() {
        let c = CodeSpec::builtin(BuiltinCode::Identity, 2, 1).unwrap();
        let fam = PatternFamily::single_register(1, weyl_basis(2)).unwrap();
        assert!(matches!(
            lambda_matrix(&c, &fam, &KlOptions::default()),
            Err(Error::KlFailed { .. })
        ));
    }
}
