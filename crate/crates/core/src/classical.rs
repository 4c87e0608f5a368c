//! Exhaustive certificate that the classical (7,5) convolutional code decodes
//! sparse additive corruptions uniquely by Hamming distance.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::classical_conv_encode;
use crate::error::{Error, Result};
use crate::kl::{Verdict, SCHEMA_VERSION};
use crate::operator::{additive_basis, SingleRegisterError};
use crate::pattern::PatternFamily;

/// Longest message length searched exhaustively.
pub const MAX_MESSAGE_LEN: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub message: Vec<u32>,
    pub codeword: Vec<u32>,
    pub error: Vec<u32>,
    pub corrupted: Vec<u32>,
    pub rival_message: Vec<u32>,
    pub rival_codeword: Vec<u32>,
    pub true_distance: usize,
    pub rival_distance: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReport {
    pub schema_version: u32,
    #[serde(rename = "N")]
    pub levels: u32,
    pub message_len_max: usize,
    pub window: usize,
    pub max_errors: usize,
    pub verdict: Verdict,
    /// Whether corruptions of different messages never produce the same word.
    pub distinguishable: bool,
    pub messages_checked: u64,
    pub corruptions_checked: u64,
    pub counterexample: Option<Counterexample>,
    pub elapsed_ms: u128,
}

fn hamming(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn messages(levels: u32, len: usize) -> impl Iterator<Item = Vec<u32>> {
    let total = (levels as u64).pow(len as u32);
    (0..total).map(move |mut idx| {
        let mut m = vec![0u32; len];
        for d in m.iter_mut().rev() {
            *d = (idx % levels as u64) as u32;
            idx /= levels as u64;
        }
        m
    })
}

fn additive_errors(
    levels: u32,
    width: usize,
    window: usize,
    max_errors: usize,
) -> Result<Vec<Vec<u32>>> {
    let family = PatternFamily::new(width, window, max_errors, additive_basis(levels))?;
    family
        .iter()
        .map(|p| {
            let mut e = vec![0u32; width];
            for (pos, op) in p.iter() {
                match op {
                    SingleRegisterError::Weyl { a, .. } => e[pos - 1] = *a,
                    SingleRegisterError::AdditiveFlip { alpha } => e[pos - 1] = *alpha,
                    other => {
                        return Err(Error::Domain(format!("{other:?} is not an additive flip")))
                    }
                }
            }
            Ok(e)
        })
        .collect()
}

fn first_violation(
    levels: u32,
    msg: &[u32],
    codeword: &[u32],
    errors: &[Vec<u32>],
    rivals: &[(Vec<u32>, Vec<u32>)],
) -> Option<Counterexample> {
    for e in errors {
        let corrupted: Vec<u32> = codeword
            .iter()
            .zip(e)
            .map(|(c, x)| (c + x) % levels)
            .collect();
        let true_distance = hamming(&corrupted, codeword);
        for (rival_message, rival_codeword) in rivals {
            if rival_message.as_slice() == msg {
                continue;
            }
            let rival_distance = hamming(&corrupted, rival_codeword);
            if rival_distance <= true_distance {
                return Some(Counterexample {
                    message: msg.to_vec(),
                    codeword: codeword.to_vec(),
                    error: e.clone(),
                    corrupted,
                    rival_message: rival_message.clone(),
                    rival_codeword: rival_codeword.clone(),
                    true_distance,
                    rival_distance,
                });
            }
        }
    }
    None
}

fn distinguishable(levels: u32, words: &[(Vec<u32>, Vec<u32>)], errors: &[Vec<u32>]) -> bool {
    let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
    for (m, (_, c)) in words.iter().enumerate() {
        for e in errors {
            let y: Vec<u32> = c.iter().zip(e).map(|(c, x)| (c + x) % levels).collect();
            if *seen.entry(y).or_insert(m) != m {
                return false;
            }
        }
    }
    true
}

/// Checks every message of length `1..=message_len_max` against every
/// corruption with at most `max_errors` nonzero symbols in any `window`
/// consecutive positions. Only the first counterexample is kept; the
/// distinguishability check still covers every length.
pub fn certify_radius(
    levels: u32,
    message_len_max: usize,
    window: usize,
    max_errors: usize,
) -> Result<ClassicalReport> {
    if levels < 2 {
        return Err(Error::Domain(format!("alphabet size {levels} is below 2")));
    }
    if message_len_max == 0 || message_len_max > MAX_MESSAGE_LEN {
        return Err(Error::Domain(format!(
            "message length bound {message_len_max} is outside 1..={MAX_MESSAGE_LEN}"
        )));
    }
    let start = std::time::Instant::now();
    let mut report = ClassicalReport {
        schema_version: SCHEMA_VERSION,
        levels,
        message_len_max,
        window,
        max_errors,
        verdict: Verdict::Pass,
        distinguishable: true,
        messages_checked: 0,
        corruptions_checked: 0,
        counterexample: None,
        elapsed_ms: 0,
    };
    for len in 1..=message_len_max {
        let words: Vec<(Vec<u32>, Vec<u32>)> = messages(levels, len)
            .map(|m| classical_conv_encode(levels, &m, true).map(|c| (m, c)))
            .collect::<Result<_>>()?;
        let errors = additive_errors(levels, words[0].1.len(), window, max_errors)?;
        let found = if report.counterexample.is_some() {
            None
        } else {
            words
                .par_iter()
                .map(|(m, c)| first_violation(levels, m, c, &errors, &words))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .next()
        };
        report.distinguishable &= distinguishable(levels, &words, &errors);
        report.messages_checked += words.len() as u64;
        report.corruptions_checked += (words.len() * errors.len()) as u64;
        if let Some(cx) = found {
            report.verdict = Verdict::Fail;
            report.counterexample = Some(cx);
        }
    }
    report.elapsed_ms = start.elapsed().as_millis();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_one_per_four() {
        let r = certify_radius(2, 4, 4, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.messages_checked, 2 + 4 + 8 + 16);
        assert!(r.distinguishable);
    }

    #[test]
    fn ternary_one_per_four() {
        assert_eq!(certify_radius(3, 3, 4, 1).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn two_per_four_breaks() {
        let r = certify_radius(2, 4, 4, 2).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let cx = r.counterexample.unwrap();
        assert!(cx.rival_distance <= cx.true_distance);
        assert_eq!(
            hamming(&cx.corrupted, &cx.rival_codeword),
            cx.rival_distance
        );
        assert_ne!(cx.message, cx.rival_message);
    }

    #[test]
    fn ties_without_collisions() {
        let r = certify_radius(2, 6, 4, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.counterexample.as_ref().unwrap().message.len(), 5);
        assert!(r.distinguishable);
    }

    #[test]
    fn bounds() {
        assert!(certify_radius(2, 9, 4, 1).is_err());
        assert!(certify_radius(1, 2, 4, 1).is_err());
    }
}
