//! Error patterns and sliding-window pattern families.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::SingleRegisterError;
use crate::state::RegisterState;

/// A tensor product of single-register operators; unlisted registers carry the identity.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<PatternEntry>", into = "Vec<PatternEntry>")]
pub struct ErrorPattern {
    ops: BTreeMap<usize, SingleRegisterError>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PatternEntry {
    pos: usize,
    op: SingleRegisterError,
}

impl From<Vec<PatternEntry>> for ErrorPattern {
    fn from(v: Vec<PatternEntry>) -> Self {
        v.into_iter()
            .fold(ErrorPattern::identity(), |p, e| p.with(e.pos, e.op))
    }
}

impl From<ErrorPattern> for Vec<PatternEntry> {
    fn from(p: ErrorPattern) -> Self {
        p.ops
            .into_iter()
            .map(|(pos, op)| PatternEntry { pos, op })
            .collect()
    }
}

impl ErrorPattern {
    pub fn identity() -> Self {
        ErrorPattern::default()
    }

    /// Sets the operator on register `pos` (1-based); identities are not stored.
    pub fn with(mut self, pos: usize, op: SingleRegisterError) -> Self {
        if op.is_identity() {
            self.ops.remove(&pos);
        } else {
            self.ops.insert(pos, op);
        }
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &SingleRegisterError)> {
        self.ops.iter().map(|(p, o)| (*p, o))
    }

    pub fn support(&self) -> Vec<usize> {
        self.ops.keys().copied().collect()
    }

    pub fn weight(&self) -> usize {
        self.ops.len()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn apply(&self, state: &RegisterState) -> Result<RegisterState> {
        self.iter()
            .try_fold(state.clone(), |s, (p, op)| s.apply_single(p, op))
    }

    pub fn apply_adjoint(&self, state: &RegisterState) -> Result<RegisterState> {
        self.iter()
            .try_fold(state.clone(), |s, (p, op)| s.apply_single_adjoint(p, op))
    }
}

impl fmt::Display for ErrorPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ops.is_empty() {
            return write!(f, "I");
        }
        let parts: Vec<String> = self
            .ops
            .iter()
            .map(|(p, op)| match op {
                SingleRegisterError::Weyl { a, b } => format!("X^{a}Z^{b}@{p}"),
                SingleRegisterError::AdditiveFlip { alpha } => format!("X^{alpha}@{p}"),
                SingleRegisterError::SpinFlip { table } => format!("S{table:?}@{p}"),
                SingleRegisterError::PhaseShift { .. } => format!("P@{p}"),
                SingleRegisterError::General { .. } => format!("U@{p}"),
                SingleRegisterError::Identity => format!("I@{p}"),
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// All patterns with at most `max_errors` non-identity registers in every
/// `window` consecutive registers, drawing each error from `basis`.
///
/// Patterns are enumerated with supports in lexicographic order (the identity
/// first), then operator assignments in lexicographic order of `basis`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternFamily {
    width: usize,
    window: usize,
    max_errors: usize,
    basis: Vec<SingleRegisterError>,
    /// Inclusive 1-based range that error supports are drawn from.
    support: (usize, usize),
}

impl PatternFamily {
    pub fn new(
        width: usize,
        window: usize,
        max_errors: usize,
        basis: Vec<SingleRegisterError>,
    ) -> Result<Self> {
        if width == 0 || window == 0 {
            return Err(Error::Domain("width and window must be positive".into()));
        }
        if window > width {
            return Err(Error::Domain(format!(
                "window {window} is longer than the {width} registers"
            )));
        }
        if max_errors > window {
            return Err(Error::Domain(format!(
                "{max_errors} errors cannot fit a window of {window}"
            )));
        }
        if basis.iter().any(SingleRegisterError::is_identity) {
            return Err(Error::Domain(
                "the error basis must not contain the identity".into(),
            ));
        }
        Ok(PatternFamily {
            width,
            window,
            max_errors,
            basis,
            support: (1, width),
        })
    }

    /// At most one error anywhere.
    pub fn single_register(width: usize, basis: Vec<SingleRegisterError>) -> Result<Self> {
        Self::new(width, width, 1, basis)
    }

    /// Restricts error supports to registers `lo..=hi`.
    pub fn restricted_to(mut self, lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || lo > hi || hi > self.width {
            return Err(Error::Index {
                pos: if lo == 0 { 0 } else { hi },
                width: self.width,
            });
        }
        self.support = (lo, hi);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn max_errors(&self) -> usize {
        self.max_errors
    }

    pub fn basis(&self) -> &[SingleRegisterError] {
        &self.basis
    }

    pub fn support_range(&self) -> (usize, usize) {
        self.support
    }

    fn admits(&self, support: &[usize], p: usize) -> bool {
        let crowd = support
            .iter()
            .rev()
            .take_while(|&&c| p - c < self.window)
            .count();
        crowd < self.max_errors
    }

    fn next_support(&self, cur: &mut Vec<usize>) -> bool {
        let (lo, hi) = self.support;
        let start = cur.last().map_or(lo, |l| l + 1);
        if let Some(p) = (start..=hi).find(|&p| self.admits(cur, p)) {
            cur.push(p);
            return true;
        }
        while let Some(x) = cur.pop() {
            if let Some(p) = (x + 1..=hi).find(|&p| self.admits(cur, p)) {
                cur.push(p);
                return true;
            }
        }
        false
    }

    /// Every admissible support, identity first.
    pub fn supports(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let mut cur: Option<Vec<usize>> = None;
        std::iter::from_fn(move || match cur.as_mut() {
            None => {
                cur = Some(Vec::new());
                Some(Vec::new())
            }
            Some(c) => self.next_support(c).then(|| c.clone()),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = ErrorPattern> + '_ {
        let k = self.basis.len();
        self.supports().flat_map(move |support| {
            let total = k.pow(support.len() as u32);
            (0..total).map(move |mut code| {
                let mut digits = vec![0usize; support.len()];
                for d in digits.iter_mut().rev() {
                    *d = code % k;
                    code /= k;
                }
                support
                    .iter()
                    .zip(digits)
                    .fold(ErrorPattern::identity(), |p, (&pos, d)| {
                        p.with(pos, self.basis[d].clone())
                    })
            })
        })
    }

    pub fn len(&self) -> u128 {
        let k = self.basis.len() as u128;
        self.supports().map(|s| k.pow(s.len() as u32)).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, pattern: &ErrorPattern) -> bool {
        let support = pattern.support();
        let (lo, hi) = self.support;
        support.iter().all(|&p| p >= lo && p <= hi)
            && pattern.iter().all(|(_, op)| self.basis.contains(op))
            && (0..support.len()).all(|i| self.admits(&support[..i], support[i]))
    }
}
