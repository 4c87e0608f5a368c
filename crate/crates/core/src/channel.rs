//! Monte-Carlo noise injection and brute-force maximum-likelihood recovery.

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::CodeSpec;
use crate::error::{Error, Result};
use crate::kl::SCHEMA_VERSION;
use crate::operator::{weyl_basis, SingleRegisterError};
use crate::pattern::{ErrorPattern, PatternFamily};
use crate::scalar::PhaseScalar;
use crate::state::{inner_product, RegisterState};

/// Recovered states below this projection weight count as uncorrectable.
pub const MIN_PROJECTION: f64 = 1e-9;

/// A trial succeeds at or above this logical fidelity.
pub const SUCCESS_FIDELITY: f64 = 1.0 - 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Independent per-register error probability.
    pub p: f64,
    pub menu: Vec<(SingleRegisterError, f64)>,
    pub seed: u64,
    pub trials: u64,
}

impl ChannelConfig {
    /// Uniform over the `N^2 - 1` Weyl errors.
    pub fn uniform_weyl(levels: u32, p: f64, seed: u64, trials: u64) -> Self {
        let basis = weyl_basis(levels);
        let w = 1.0 / basis.len() as f64;
        ChannelConfig {
            p,
            menu: basis.into_iter().map(|e| (e, w)).collect(),
            seed,
            trials,
        }
    }

    pub fn validate(&self, levels: u32) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!(
                "error probability {} is outside [0, 1]",
                self.p
            )));
        }
        if self.menu.is_empty() {
            return Err(Error::Config("error menu is empty".into()));
        }
        if self.menu.iter().any(|(_, w)| w.is_nan() || *w < 0.0) {
            return Err(Error::Config("menu weights must be nonnegative".into()));
        }
        let total: f64 = self.menu.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("menu weights sum to {total}, not 1")));
        }
        self.menu.iter().try_for_each(|(e, _)| e.validate(levels))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `trial`; independent of how trials are scheduled.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(seed ^ splitmix64(trial))
}

/// The error pattern realized in trial `trial` over `width` registers.
pub fn sample_pattern(width: usize, cfg: &ChannelConfig, trial: u64) -> Result<ErrorPattern> {
    let weights = WeightedIndex::new(cfg.menu.iter().map(|(_, w)| *w))
        .map_err(|e| Error::Config(format!("menu weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, trial));
    let mut pattern = ErrorPattern::identity();
    for pos in 1..=width {
        if rng.gen::<f64>() < cfg.p {
            pattern = pattern.with(pos, cfg.menu[weights.sample(&mut rng)].0.clone());
        }
    }
    Ok(pattern)
}

/// Corrupts `state` with the pattern of trial `trial`.
pub fn sample_channel(
    state: &RegisterState,
    cfg: &ChannelConfig,
    trial: u64,
) -> Result<(RegisterState, ErrorPattern)> {
    cfg.validate(state.levels())?;
    let pattern = sample_pattern(state.width(), cfg, trial)?;
    Ok((pattern.apply(state)?, pattern))
}

#[derive(Clone, Debug)]
pub struct Decoded {
    /// Normalized logical state over the code's logical window.
    pub logical: RegisterState,
    pub chosen: ErrorPattern,
    /// Squared norm of the projection onto the code space after correction.
    pub weight: f64,
}

/// Candidate corrections with their images `s|i_enc>` precomputed.
///
/// Candidates are tried by weight, then enumeration order; the first
/// maximal projection wins.
pub struct Decoder<'a> {
    code: &'a CodeSpec,
    candidates: Vec<ErrorPattern>,
    images: Vec<Vec<RegisterState>>,
}

impl<'a> Decoder<'a> {
    pub fn new(code: &'a CodeSpec, family: &PatternFamily) -> Result<Self> {
        if family.width() != code.width() {
            return Err(Error::Shape(format!(
                "family spans {} registers but the code has {}",
                family.width(),
                code.width()
            )));
        }
        let mut candidates: Vec<ErrorPattern> = family.iter().collect();
        candidates.sort_by_key(ErrorPattern::weight);
        let images = candidates
            .par_iter()
            .map(|s| {
                code.kets()
                    .iter()
                    .map(|k| s.apply(k))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Decoder {
            code,
            candidates,
            images,
        })
    }

    pub fn candidates(&self) -> &[ErrorPattern] {
        &self.candidates
    }

    pub fn decode(&self, corrupted: &RegisterState) -> Result<Decoded> {
        let mut best: Option<(usize, f64, Vec<Complex64>)> = None;
        for (idx, imgs) in self.images.iter().enumerate() {
            let amps = imgs
                .iter()
                .map(|img| inner_product(img, corrupted).map(|o| o.to_complex()))
                .collect::<Result<Vec<_>>>()?;
            let weight: f64 = amps.iter().map(Complex64::norm_sqr).sum();
            if best.as_ref().is_none_or(|b| weight > b.1 + 1e-12) {
                best = Some((idx, weight, amps));
            }
            if weight >= 1.0 - MIN_PROJECTION {
                break;
            }
        }
        let (idx, weight, amps) = best.ok_or(Error::Uncorrectable)?;
        if weight < MIN_PROJECTION {
            return Err(Error::Uncorrectable);
        }
        let terms = amps
            .into_iter()
            .enumerate()
            .map(|(i, a)| (i as u128, PhaseScalar::Float(a)))
            .collect();
        let logical =
            RegisterState::from_indexed(self.code.levels(), self.code.logical_symbols(), terms)?
                .normalized()?;
        Ok(Decoded {
            logical,
            chosen: self.candidates[idx].clone(),
            weight,
        })
    }
}

/// One-shot decode; prefer [`Decoder`] when decoding many states.
pub fn decode_mld(
    code: &CodeSpec,
    corrupted: &RegisterState,
    family: &PatternFamily,
) -> Result<Decoded> {
    Decoder::new(code, family)?.decode(corrupted)
}

/// `|<a|b>|^2` for normalized states.
pub fn fidelity(a: &RegisterState, b: &RegisterState) -> Result<f64> {
    Ok(inner_product(a, b)?.to_complex().norm_sqr())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub injected: ErrorPattern,
    pub in_family: bool,
    /// `None` when no candidate projects onto the code space.
    pub chosen: Option<ErrorPattern>,
    pub logical_fidelity: f64,
    pub success: bool,
}

/// Runs a single trial.
pub fn run_trial(
    decoder: &Decoder<'_>,
    family: &PatternFamily,
    encoded: &RegisterState,
    input: &RegisterState,
    cfg: &ChannelConfig,
    trial: u64,
) -> Result<TrialRecord> {
    let (corrupted, injected) = sample_channel(encoded, cfg, trial)?;
    let in_family = family.contains(&injected);
    let (chosen, logical_fidelity) = match decoder.decode(&corrupted) {
        Ok(d) => (Some(d.chosen), fidelity(input, &d.logical)?),
        Err(Error::Uncorrectable) => (None, 0.0),
        Err(e) => return Err(e),
    };
    Ok(TrialRecord {
        trial,
        injected,
        in_family,
        chosen,
        logical_fidelity,
        success: logical_fidelity >= SUCCESS_FIDELITY,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub schema_version: u32,
    pub code: String,
    #[serde(rename = "N")]
    pub levels: u32,
    #[serde(rename = "L")]
    pub logical_len: usize,
    pub p: f64,
    pub trials: u64,
    pub in_family: u64,
    pub success: u64,
    pub in_family_success: u64,
    pub conditional_success: f64,
    pub mean_fidelity: f64,
    pub seed: u64,
    /// First in-family trial that failed, if any.
    pub first_in_family_failure: Option<TrialRecord>,
}

/// Encodes `input`, then samples and decodes `cfg.trials` times.
pub fn run_trials(
    code: &CodeSpec,
    cfg: &ChannelConfig,
    family: &PatternFamily,
    input: &RegisterState,
) -> Result<TrialSummary> {
    cfg.validate(code.levels())?;
    let input = input.normalized()?;
    let encoded = code.encode(&input)?;
    let decoder = Decoder::new(code, family)?;
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(&decoder, family, &encoded, &input, cfg, t))
        .collect::<Result<_>>()?;

    let mut summary = TrialSummary {
        schema_version: SCHEMA_VERSION,
        code: code.label().to_string(),
        levels: code.levels(),
        logical_len: code.logical_len(),
        p: cfg.p,
        trials: cfg.trials,
        in_family: 0,
        success: 0,
        in_family_success: 0,
        conditional_success: 1.0,
        mean_fidelity: 0.0,
        seed: cfg.seed,
        first_in_family_failure: None,
    };
    let mut fid_sum = 0.0;
    for r in records {
        fid_sum += r.logical_fidelity;
        summary.success += r.success as u64;
        if r.in_family {
            summary.in_family += 1;
            summary.in_family_success += r.success as u64;
            if !r.success && summary.first_in_family_failure.is_none() {
                summary.first_in_family_failure = Some(r);
            }
        }
    }
    if cfg.trials > 0 {
        summary.mean_fidelity = fid_sum / cfg.trials as f64;
    }
    if summary.in_family > 0 {
        summary.conditional_success = summary.in_family_success as f64 / summary.in_family as f64;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::BuiltinCode;

    fn plus_logical() -> RegisterState {
        let h = PhaseScalar::Float(Complex64::new(0.5f64.sqrt(), 0.0));
        RegisterState::from_indexed(2, 1, vec![(0, h.clone()), (1, h)]).unwrap()
    }

    #[test]
    fn zero_probability_is_identity() {
        let cfg = ChannelConfig::uniform_weyl(2, 0.0, 7, 10);
        let s = RegisterState::basis(2, &[0, 1, 1]).unwrap();
        for t in 0..10 {
            let (out, pat) = sample_channel(&s, &cfg, t).unwrap();
            assert!(pat.is_identity());
            assert_eq!(out.keys(), s.keys());
        }
    }

    #[test]
    fn certain_flip_hits_every_register() {
        let cfg = ChannelConfig {
            p: 1.0,
            menu: vec![(SingleRegisterError::weyl(1, 0), 1.0)],
            seed: 1,
            trials: 1,
        };
        let s = RegisterState::basis(2, &[0, 1, 0, 0]).unwrap();
        let (out, pat) = sample_channel(&s, &cfg, 0).unwrap();
        assert_eq!(pat.weight(), 4);
        assert_eq!(
            out.keys(),
            RegisterState::basis(2, &[1, 0, 1, 1]).unwrap().keys()
        );
    }

    #[test]
    fn seeded_replay() {
        let cfg = ChannelConfig::uniform_weyl(3, 0.3, 42, 0);
        let a: Vec<ErrorPattern> = (0..20)
            .map(|t| sample_pattern(12, &cfg, t).unwrap())
            .collect();
        let b: Vec<ErrorPattern> = (0..20)
            .rev()
            .map(|t| sample_pattern(12, &cfg, t).unwrap())
            .rev()
            .collect();
        assert_eq!(a, b);
        assert!(a.iter().any(|p| !p.is_identity()));
    }

    #[test]
    fn bad_configs() {
        let mut cfg = ChannelConfig::uniform_weyl(2, 1.5, 0, 1);
        assert!(cfg.validate(2).is_err());
        cfg.p = 0.1;
        cfg.menu[0].1 = 0.5;
        assert!(cfg.validate(2).is_err());
    }

    #[test]
    fn shor_recovers_flip() {
        let code = CodeSpec::builtin(BuiltinCode::Shor9, 2, 1).unwrap();
        let family = PatternFamily::single_register(9, weyl_basis(2)).unwrap();
        let input = plus_logical();
        let encoded = code.encode(&input).unwrap();
        let clean = decode_mld(&code, &encoded, &family).unwrap();
        assert!(clean.chosen.is_identity());
        assert!((fidelity(&input, &clean.logical).unwrap() - 1.0).abs() < 1e-9);

        let e = ErrorPattern::identity().with(4, SingleRegisterError::weyl(1, 0));
        let d = decode_mld(&code, &e.apply(&encoded).unwrap(), &family).unwrap();
        assert!((fidelity(&input, &d.logical).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unprotected_code_loses_fidelity() {
        let code = CodeSpec::builtin(BuiltinCode::Identity, 2, 1).unwrap();
        let family = PatternFamily::single_register(1, weyl_basis(2)).unwrap();
        let cfg = ChannelConfig::uniform_weyl(2, 0.5, 3, 200);
        let s = run_trials(&code, &cfg, &family, &plus_logical()).unwrap();
        assert!(s.mean_fidelity < 0.9);
        let cfg = ChannelConfig::uniform_weyl(2, 0.0, 3, 50);
        let s = run_trials(&code, &cfg, &family, &plus_logical()).unwrap();
        assert_eq!(s.success, 50);
        assert_eq!(s.conditional_success, 1.0);
    }
}
