//! Exact amplitudes of the form `c * sqrt(d) * w^e`, where `w` is a root of
//! unity of fixed order, plus exact cyclotomic sums of such values.
//!
//! Every amplitude produced by the code constructions in this crate (spin
//! flips, Weyl operators, register Fourier transforms, pasting) stays inside
//! this family, so Knill-Laflamme equalities can be decided without rounding.
//! Anything that leaves the family (dense error matrices, arbitrary phase
//! tables) falls back to `Complex64`.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

/// Order of the root-of-unity group used for `levels`-state registers.
///
/// This is `lcm(2, levels)` so that `-1` always has an exact exponent.
pub fn phase_order(levels: u32) -> u32 {
    if levels.is_multiple_of(2) {
        levels
    } else {
        2 * levels
    }
}

fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Splits `n` into `(s, d)` with `n = s^2 * d` and `d` squarefree.
fn square_split(mut n: u128) -> (u128, u128) {
    let (mut s, mut d) = (1u128, 1u128);
    let mut p = 2u128;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        s *= p.pow(e / 2);
        if e % 2 == 1 {
            d *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (s, d * n)
}

/// A positive real `coef * sqrt(rad)` with `rad` squarefree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Magnitude {
    coef: Rational,
    rad: u128,
}

impl Magnitude {
    pub fn one() -> Self {
        Magnitude {
            coef: Rational::one(),
            rad: 1,
        }
    }

    pub fn from_rational(coef: Rational) -> Self {
        assert!(coef.is_positive(), "magnitude must be positive");
        Magnitude { coef, rad: 1 }
    }

    /// `sqrt(q)` for a positive rational `q`.
    pub fn from_sqrt(q: Rational) -> Self {
        assert!(q.is_positive(), "square root of a non-positive rational");
        let (sn, dn) = square_split(*q.numer() as u128);
        let (sd, dd) = square_split(*q.denom() as u128);
        // sqrt(n/m) = sn*sqrt(dn) * sd*sqrt(dd) / m
        let g = dn.gcd(&dd);
        let coef = Rational::new((sn * sd * g) as i128, *q.denom());
        Magnitude {
            coef,
            rad: (dn / g) * (dd / g),
        }
    }

    pub fn coef(&self) -> &Rational {
        &self.coef
    }

    pub fn rad(&self) -> u128 {
        self.rad
    }

    pub fn mul(&self, other: &Magnitude) -> Magnitude {
        let g = self.rad.gcd(&other.rad);
        Magnitude {
            coef: self.coef * other.coef * Rational::from_integer(g as i128),
            rad: (self.rad / g) * (other.rad / g),
        }
    }

    pub fn recip(&self) -> Magnitude {
        Magnitude {
            coef: (self.coef * Rational::from_integer(self.rad as i128)).recip(),
            rad: self.rad,
        }
    }

    /// The exact square `coef^2 * rad`.
    pub fn square(&self) -> Rational {
        self.coef * self.coef * Rational::from_integer(self.rad as i128)
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.coef) * (self.rad as f64).sqrt()
    }
}

/// `mag * w^exp` with `w = exp(2 pi i / order)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RootPhase {
    order: u32,
    exp: u32,
    mag: Magnitude,
}

impl RootPhase {
    pub fn new(order: u32, exp: i64, mag: Magnitude) -> Self {
        let exp = exp.rem_euclid(order as i64) as u32;
        RootPhase { order, exp, mag }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    pub fn magnitude(&self) -> &Magnitude {
        &self.mag
    }

    pub fn mul(&self, other: &RootPhase) -> RootPhase {
        debug_assert_eq!(self.order, other.order);
        RootPhase {
            order: self.order,
            exp: (self.exp + other.exp) % self.order,
            mag: self.mag.mul(&other.mag),
        }
    }

    pub fn conj(&self) -> RootPhase {
        RootPhase {
            order: self.order,
            exp: (self.order - self.exp) % self.order,
            mag: self.mag.clone(),
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.mag.to_f64(), TAU * self.exp as f64 / self.order as f64)
    }
}

/// A single amplitude: exact root-of-unity monomial or a float fallback.
#[derive(Clone, Debug, PartialEq)]
pub enum PhaseScalar {
    Exact(RootPhase),
    Float(Complex64),
}

impl PhaseScalar {
    pub fn one(levels: u32) -> Self {
        PhaseScalar::Exact(RootPhase::new(phase_order(levels), 0, Magnitude::one()))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, PhaseScalar::Exact(_))
    }

    pub fn to_complex(&self) -> Complex64 {
        match self {
            PhaseScalar::Exact(r) => r.to_complex(),
            PhaseScalar::Float(c) => *c,
        }
    }

    pub fn conj(&self) -> Self {
        match self {
            PhaseScalar::Exact(r) => PhaseScalar::Exact(r.conj()),
            PhaseScalar::Float(c) => PhaseScalar::Float(c.conj()),
        }
    }

    pub fn mul(&self, other: &PhaseScalar) -> PhaseScalar {
        match (self, other) {
            (PhaseScalar::Exact(a), PhaseScalar::Exact(b)) if a.order == b.order => {
                PhaseScalar::Exact(a.mul(b))
            }
            _ => PhaseScalar::Float(self.to_complex() * other.to_complex()),
        }
    }
}

impl fmt::Display for PhaseScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseScalar::Exact(r) => {
                write!(f, "{}", r.mag.coef)?;
                if r.mag.rad != 1 {
                    write!(f, "*sqrt({})", r.mag.rad)?;
                }
                write!(f, "*w{}^{}", r.order, r.exp)
            }
            PhaseScalar::Float(c) => write!(f, "{c}"),
        }
    }
}

/// `exp(2 pi i e / levels)` as an exact scalar.
pub fn root_of_unity(levels: u32, e: i64) -> Result<PhaseScalar> {
    if levels < 2 {
        return Err(Error::Domain(format!(
            "register needs at least 2 levels, got {levels}"
        )));
    }
    let order = phase_order(levels);
    let step = (order / levels) as i64;
    Ok(PhaseScalar::Exact(RootPhase::new(
        order,
        e.rem_euclid(levels as i64) * step,
        Magnitude::one(),
    )))
}

/// Integer coefficients of the `order`-th cyclotomic polynomial, lowest degree first.
pub fn cyclotomic_poly(order: u32) -> &'static [i128] {
    static CACHE: OnceLock<Mutex<HashMap<u32, &'static [i128]>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&order) {
        return p;
    }
    // x^n - 1 divided by every cyclotomic factor of a proper divisor.
    let mut poly = vec![0i128; order as usize + 1];
    poly[0] = -1;
    poly[order as usize] = 1;
    for d in (1..order).filter(|d| order.is_multiple_of(*d)) {
        poly = divide_monic(&poly, cyclotomic_poly(d));
    }
    let leaked: &'static [i128] = Box::leak(poly.into_boxed_slice());
    cache.lock().unwrap().insert(order, leaked);
    leaked
}

fn divide_monic(num: &[i128], den: &[i128]) -> Vec<i128> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let mut quot = vec![0i128; num.len() - dd];
    for k in (dd..num.len()).rev() {
        let c = rem[k];
        if c != 0 {
            quot[k - dd] = c;
            for (i, d) in den.iter().enumerate() {
                rem[k - dd + i] -= c * d;
            }
        }
    }
    debug_assert!(rem.iter().all(|c| *c == 0));
    quot
}

/// Reduces a polynomial in `w` (coefficient `k` multiplies `w^k`) modulo the
/// minimal polynomial of `w`.
fn reduce<T>(mut coeffs: Vec<T>, order: u32) -> Vec<T>
where
    T: Clone + Zero + std::ops::Mul<Output = T> + std::ops::SubAssign + From<i128>,
{
    let phi = cyclotomic_poly(order);
    let deg = phi.len() - 1;
    for k in (deg..coeffs.len()).rev() {
        let c = coeffs[k].clone();
        if !c.is_zero() {
            for (i, p) in phi.iter().enumerate() {
                coeffs[k - deg + i] -= c.clone() * T::from(*p);
            }
        }
    }
    coeffs.truncate(deg);
    coeffs
}

/// An element `sqrt(rad) * sum_k coeffs[k] w^k` of a cyclotomic field, kept in
/// canonical reduced form so that equality is structural.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycloValue {
    order: u32,
    rad: u128,
    coeffs: Vec<Rational>,
}

impl CycloValue {
    pub fn zero(order: u32) -> Self {
        let deg = cyclotomic_poly(order).len() - 1;
        CycloValue {
            order,
            rad: 1,
            coeffs: vec![Rational::zero(); deg],
        }
    }

    fn canonical(order: u32, rad: u128, coeffs: Vec<Rational>) -> Self {
        let rad = if coeffs.iter().all(Zero::is_zero) {
            1
        } else {
            rad
        };
        CycloValue { order, rad, coeffs }
    }

    /// `scale * sum_e counts[e] w^e`.
    pub fn from_counts(order: u32, counts: &[i64], scale: &Magnitude) -> Self {
        let reduced = reduce(counts.iter().map(|&c| c as i128).collect(), order);
        let coeffs = reduced
            .into_iter()
            .map(|c| scale.coef * Rational::from_integer(c))
            .collect();
        Self::canonical(order, scale.rad, coeffs)
    }

    /// Exact sum of monomials. Returns `None` when the terms carry different
    /// square-root radicals, which this representation cannot combine.
    pub fn sum_of<I>(order: u32, terms: I) -> Option<Self>
    where
        I: IntoIterator<Item = (u32, Magnitude)>,
    {
        let mut acc = vec![Rational::zero(); order as usize];
        let mut rad = None;
        for (e, m) in terms {
            match rad {
                None => rad = Some(m.rad),
                Some(r) if r != m.rad => return None,
                _ => {}
            }
            acc[(e % order) as usize] += m.coef;
        }
        Some(Self::canonical(order, rad.unwrap_or(1), reduce(acc, order)))
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Structural equality where it is decisive. Two nonzero values with
    /// different radicals are undecided here; callers compare numerically.
    pub fn exact_eq(&self, other: &CycloValue) -> Option<bool> {
        if self.order != other.order {
            return None;
        }
        if self.is_zero() || other.is_zero() || self.rad == other.rad {
            Some(self == other)
        } else {
            None
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        let s = (self.rad as f64).sqrt();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                Complex64::from_polar(rational_to_f64(c), TAU * k as f64 / self.order as f64)
            })
            .sum::<Complex64>()
            * s
    }

    /// The value as a single monomial, when it is one (and nonzero).
    pub fn to_root_phase(&self) -> Option<RootPhase> {
        if self.is_zero() {
            return None;
        }
        let n = self.order as usize;
        for e in 0..n {
            // multiply by w^(-e) and see whether only a constant survives
            let mut rotated = vec![Rational::zero(); n];
            for (k, c) in self.coeffs.iter().enumerate() {
                rotated[(k + n - e) % n] = *c;
            }
            let r = reduce(rotated, self.order);
            if r.iter().skip(1).all(Zero::is_zero) && !r[0].is_zero() {
                let c = r[0];
                let (c, exp) = if c.is_negative() {
                    (-c, e + n / 2)
                } else {
                    (c, e)
                };
                return Some(RootPhase::new(
                    self.order,
                    exp as i64,
                    Magnitude {
                        coef: c,
                        rad: self.rad,
                    },
                ));
            }
        }
        None
    }
}

/// Result of an inner product: exact cyclotomic value or float fallback.
#[derive(Clone, Debug, PartialEq)]
pub enum Overlap {
    Exact(CycloValue),
    Float(Complex64),
}

impl Overlap {
    pub fn to_complex(&self) -> Complex64 {
        match self {
            Overlap::Exact(v) => v.to_complex(),
            Overlap::Float(c) => *c,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Overlap::Exact(_))
    }

    /// Exact zero test when available, else `|z| <= tol`.
    pub fn is_zero_within(&self, tol: f64) -> bool {
        match self {
            Overlap::Exact(v) => v.is_zero(),
            Overlap::Float(c) => c.norm() <= tol,
        }
    }

    /// Exact comparison when both sides are exact and decidable, else `|a - b| <= tol`.
    pub fn equals_within(&self, other: &Overlap, tol: f64) -> bool {
        if let (Overlap::Exact(a), Overlap::Exact(b)) = (self, other) {
            if let Some(eq) = a.exact_eq(b) {
                return eq;
            }
        }
        (self.to_complex() - other.to_complex()).norm() <= tol
    }

    pub fn conj(&self) -> Overlap {
        match self {
            Overlap::Exact(v) => {
                // conjugation maps w^k to w^(-k); re-reduce from the full basis
                let n = v.order as usize;
                let mut acc = vec![Rational::zero(); n];
                for (k, c) in v.coeffs.iter().enumerate() {
                    acc[(n - k) % n] += *c;
                }
                Overlap::Exact(CycloValue::canonical(v.order, v.rad, reduce(acc, v.order)))
            }
            Overlap::Float(c) => Overlap::Float(c.conj()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn roots_of_unity() {
        assert!(close(
            root_of_unity(2, 1).unwrap().to_complex(),
            Complex64::new(-1.0, 0.0)
        ));
        assert!(close(
            root_of_unity(4, 1).unwrap().to_complex(),
            Complex64::new(0.0, 1.0)
        ));
        assert_eq!(root_of_unity(3, 3).unwrap(), root_of_unity(3, 0).unwrap());
        assert_eq!(root_of_unity(5, -1).unwrap(), root_of_unity(5, 4).unwrap());
        assert!(matches!(root_of_unity(1, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic_poly(1), &[-1, 1]);
        assert_eq!(cyclotomic_poly(2), &[1, 1]);
        assert_eq!(cyclotomic_poly(4), &[1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), &[1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), &[1, 0, -1, 0, 1]);
    }

    #[test]
    fn sqrt_magnitudes() {
        let m = Magnitude::from_sqrt(Rational::new(1, 8));
        assert_eq!(m.coef(), &Rational::new(1, 4));
        assert_eq!(m.rad(), 2);
        assert!((m.to_f64() - 8f64.powf(-0.5)).abs() < 1e-15);
        let half = Magnitude::from_sqrt(Rational::new(1, 2));
        assert_eq!(
            half.mul(&half),
            Magnitude::from_rational(Rational::new(1, 2))
        );
        assert_eq!(m.mul(&m.recip()), Magnitude::one());
        assert_eq!(Magnitude::from_sqrt(Rational::new(12, 1)).rad(), 3);
    }

    #[test]
    fn sums_cancel_exactly() {
        // 1 + w3 + w3^2 = 0 in order 6: exponents 0, 2, 4
        let v = CycloValue::sum_of(6, [0, 2, 4].map(|e| (e, Magnitude::one()))).unwrap();
        assert!(v.is_zero());
        // 1 + w3 = -w3^2, a monomial
        let v = CycloValue::sum_of(6, [0, 2].map(|e| (e, Magnitude::one()))).unwrap();
        let r = v.to_root_phase().unwrap();
        assert!(close(
            r.to_complex(),
            root_of_unity(3, 2).unwrap().to_complex() * -1.0
        ));
        // 1 + i is not a monomial in order 4
        let v = CycloValue::sum_of(4, [0, 1].map(|e| (e, Magnitude::one()))).unwrap();
        assert!(v.to_root_phase().is_none());
        assert!(close(v.to_complex(), Complex64::new(1.0, 1.0)));
    }

    #[test]
    fn conjugate_overlap() {
        let v = CycloValue::from_counts(6, &[1, 2, 0, 0, 5, 0], &Magnitude::one());
        let o = Overlap::Exact(v);
        assert!(close(o.conj().to_complex(), o.to_complex().conj()));
        assert_eq!(o.conj().conj(), o);
    }
}
