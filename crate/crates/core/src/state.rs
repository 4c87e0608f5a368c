//! Sparse superpositions over `Z_N^width`.
//!
//! Basis kets are addressed by their big-endian index in `[0, N^width)`;
//! register positions are 1-based, position 1 being the most significant digit.

use std::f64::consts::TAU;

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::operator::SingleRegisterError;
use crate::scalar::{
    phase_order, CycloValue, Magnitude, Overlap, PhaseScalar, Rational, RootPhase,
};

/// Amplitudes below this magnitude are dropped from float states.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Default comparison tolerance for float states.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// A computational basis ket `|k_1, ..., k_m>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisKet {
    digits: Vec<u32>,
}

impl BasisKet {
    pub fn new(levels: u32, digits: Vec<u32>) -> Result<Self> {
        check_levels(levels)?;
        if digits.is_empty() {
            return Err(Error::Domain(
                "a basis ket needs at least one register".into(),
            ));
        }
        if let Some(d) = digits.iter().find(|&&d| d >= levels) {
            return Err(Error::Domain(format!("digit {d} is not in Z_{levels}")));
        }
        Ok(BasisKet { digits })
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn width(&self) -> usize {
        self.digits.len()
    }

    pub fn index(&self, levels: u32) -> Result<u128> {
        let place = place_values(levels, self.width())?;
        Ok(self
            .digits
            .iter()
            .zip(&place)
            .map(|(&d, &p)| d as u128 * p)
            .sum())
    }

    pub fn from_index(levels: u32, width: usize, index: u128) -> Result<Self> {
        let place = place_values(levels, width)?;
        if index >= place[0] * levels as u128 {
            return Err(Error::Domain(format!(
                "index {index} out of range for {levels}^{width}"
            )));
        }
        Ok(BasisKet {
            digits: place
                .iter()
                .map(|&p| ((index / p) % levels as u128) as u32)
                .collect(),
        })
    }
}

fn check_levels(levels: u32) -> Result<()> {
    if levels < 2 {
        Err(Error::Domain(format!(
            "register needs at least 2 levels, got {levels}"
        )))
    } else {
        Ok(())
    }
}

/// `place[p] = N^(width - 1 - p)`; fails when `N^width` overflows `u128`.
pub(crate) fn place_values(levels: u32, width: usize) -> Result<Vec<u128>> {
    check_levels(levels)?;
    let mut place = vec![1u128; width];
    let mut acc: u128 = 1;
    for p in (0..width).rev() {
        place[p] = acc;
        acc = acc
            .checked_mul(levels as u128)
            .ok_or(Error::WindowTooLarge { levels, width })?;
    }
    Ok(place)
}

#[derive(Clone, Debug)]
enum Amp {
    Exact(u32, Magnitude),
    Float(Complex64),
}

#[derive(Clone, Debug)]
enum Mags {
    Uniform(Magnitude),
    PerTerm(Vec<Magnitude>),
}

impl Mags {
    fn get(&self, i: usize) -> &Magnitude {
        match self {
            Mags::Uniform(m) => m,
            Mags::PerTerm(v) => &v[i],
        }
    }
}

#[derive(Clone, Debug)]
enum Amplitudes {
    Exact { exps: Vec<u32>, mags: Mags },
    Float(Vec<Complex64>),
}

/// Multiplier attached to one entry of a register transformation.
#[derive(Clone, Debug)]
enum Factor {
    Phase(u32),
    Scaled(u32, Magnitude),
    Float(Complex64),
}

impl Factor {
    fn from_scalar(s: &PhaseScalar, order: u32) -> Factor {
        match s {
            PhaseScalar::Exact(r) if r.order() == order => {
                if *r.magnitude() == Magnitude::one() {
                    Factor::Phase(r.exp())
                } else {
                    Factor::Scaled(r.exp(), r.magnitude().clone())
                }
            }
            other => Factor::Float(other.to_complex()),
        }
    }

    fn to_complex(&self, order: u32) -> Complex64 {
        match self {
            Factor::Phase(e) => Complex64::from_polar(1.0, TAU * *e as f64 / order as f64),
            Factor::Scaled(e, m) => {
                Complex64::from_polar(m.to_f64(), TAU * *e as f64 / order as f64)
            }
            Factor::Float(c) => *c,
        }
    }

    fn conj(&self, order: u32) -> Factor {
        match self {
            Factor::Phase(e) => Factor::Phase((order - e) % order),
            Factor::Scaled(e, m) => Factor::Scaled((order - e) % order, m.clone()),
            Factor::Float(c) => Factor::Float(c.conj()),
        }
    }
}

/// `images[j]` lists `(i, f)` meaning `|j> -> sum f |i>` on one register.
type RegisterMap = Vec<Vec<(u32, Factor)>>;

fn transpose_conj(map: &RegisterMap, levels: u32) -> RegisterMap {
    let order = phase_order(levels);
    let mut out: RegisterMap = vec![Vec::new(); levels as usize];
    for (j, images) in map.iter().enumerate() {
        for (i, f) in images {
            out[*i as usize].push((j as u32, f.conj(order)));
        }
    }
    out
}

fn operator_map(op: &SingleRegisterError, levels: u32) -> RegisterMap {
    let n = levels;
    let order = phase_order(levels);
    let step = order / levels;
    (0..n)
        .map(|j| match op {
            SingleRegisterError::Identity => vec![(j, Factor::Phase(0))],
            SingleRegisterError::AdditiveFlip { alpha } => {
                vec![((j + alpha) % n, Factor::Phase(0))]
            }
            SingleRegisterError::SpinFlip { table } => vec![(table[j as usize], Factor::Phase(0))],
            SingleRegisterError::PhaseShift { phases } => {
                vec![(j, Factor::from_scalar(&phases[j as usize], order))]
            }
            SingleRegisterError::Weyl { a, b } => {
                vec![((j + a) % n, Factor::Phase((b * j % n) * step))]
            }
            SingleRegisterError::General { matrix } => (0..n)
                .filter(|&i| matrix[i as usize][j as usize] != Complex64::zero())
                .map(|i| (i, Factor::Float(matrix[i as usize][j as usize])))
                .collect(),
        })
        .collect()
}

fn dft_map(levels: u32, inverse: bool) -> RegisterMap {
    let order = phase_order(levels);
    let step = order / levels;
    let scale = Magnitude::from_sqrt(Rational::new(1, levels as i128));
    (0..levels)
        .map(|j| {
            (0..levels)
                .map(|p| {
                    let e = (j * p % levels) * step;
                    let e = if inverse { (order - e) % order } else { e };
                    (p, Factor::Scaled(e, scale.clone()))
                })
                .collect()
        })
        .collect()
}

/// Sparse state over `width` registers of `levels` states each.
///
/// Keys are kept sorted and unique. Exact states hold root-of-unity monomials;
/// a state drops to float amplitudes as soon as any contribution is not exact.
#[derive(Clone, Debug)]
pub struct RegisterState {
    levels: u32,
    width: usize,
    keys: Vec<u128>,
    amps: Amplitudes,
}

impl RegisterState {
    /// The single basis ket `|digits>`.
    pub fn basis(levels: u32, digits: &[u32]) -> Result<Self> {
        let ket = BasisKet::new(levels, digits.to_vec())?;
        let idx = ket.index(levels)?;
        Ok(RegisterState {
            levels,
            width: digits.len(),
            keys: vec![idx],
            amps: Amplitudes::Exact {
                exps: vec![0],
                mags: Mags::Uniform(Magnitude::one()),
            },
        })
    }

    /// The zero vector.
    pub fn zero(levels: u32, width: usize) -> Result<Self> {
        place_values(levels, width)?;
        Ok(RegisterState {
            levels,
            width,
            keys: Vec::new(),
            amps: Amplitudes::Exact {
                exps: Vec::new(),
                mags: Mags::Uniform(Magnitude::one()),
            },
        })
    }

    /// Builds a state from explicit kets; repeated kets are summed.
    pub fn from_kets<I>(levels: u32, width: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisKet, PhaseScalar)>,
    {
        let mut indexed = Vec::new();
        for (ket, amp) in terms {
            if ket.width() != width {
                return Err(Error::Shape(format!(
                    "ket of width {} in a {width}-register state",
                    ket.width()
                )));
            }
            if ket.digits().iter().any(|&d| d >= levels) {
                return Err(Error::Domain(format!(
                    "ket {:?} has digits outside Z_{levels}",
                    ket.digits()
                )));
            }
            indexed.push((ket.index(levels)?, amp));
        }
        Self::from_indexed(levels, width, indexed)
    }

    /// Builds a state from `(index, amplitude)` pairs; repeated indices are summed.
    pub fn from_indexed(
        levels: u32,
        width: usize,
        terms: Vec<(u128, PhaseScalar)>,
    ) -> Result<Self> {
        let place = place_values(levels, width)?;
        let limit = place.first().map_or(1, |p| p * levels as u128);
        if let Some((k, _)) = terms.iter().find(|(k, _)| *k >= limit) {
            return Err(Error::Domain(format!(
                "index {k} out of range for {levels}^{width}"
            )));
        }
        let order = phase_order(levels);
        let raw = terms
            .into_iter()
            .map(|(k, a)| {
                let amp = match a {
                    PhaseScalar::Exact(r) if r.order() == order => {
                        Amp::Exact(r.exp(), r.magnitude().clone())
                    }
                    other => Amp::Float(other.to_complex()),
                };
                (k, amp)
            })
            .collect();
        Ok(Self::assemble(levels, width, raw))
    }

    fn assemble(levels: u32, width: usize, mut terms: Vec<(u128, Amp)>) -> Self {
        let order = phase_order(levels);
        terms.sort_unstable_by_key(|(k, _)| *k);
        let any_float = terms.iter().any(|(_, a)| matches!(a, Amp::Float(_)));
        if !any_float {
            let mut keys = Vec::with_capacity(terms.len());
            let mut exps = Vec::with_capacity(terms.len());
            let mut mags = Vec::with_capacity(terms.len());
            let mut i = 0;
            let mut exact = true;
            while i < terms.len() {
                let mut j = i + 1;
                while j < terms.len() && terms[j].0 == terms[i].0 {
                    j += 1;
                }
                if j == i + 1 {
                    if let Amp::Exact(e, m) = &terms[i].1 {
                        keys.push(terms[i].0);
                        exps.push(*e);
                        mags.push(m.clone());
                    }
                } else {
                    let group = terms[i..j].iter().map(|(_, a)| match a {
                        Amp::Exact(e, m) => (*e, m.clone()),
                        Amp::Float(_) => unreachable!(),
                    });
                    match CycloValue::sum_of(order, group) {
                        Some(v) if v.is_zero() => {}
                        Some(v) => match v.to_root_phase() {
                            Some(r) => {
                                keys.push(terms[i].0);
                                exps.push(r.exp());
                                mags.push(r.magnitude().clone());
                            }
                            None => {
                                exact = false;
                                break;
                            }
                        },
                        None => {
                            exact = false;
                            break;
                        }
                    }
                }
                i = j;
            }
            if exact {
                return RegisterState {
                    levels,
                    width,
                    keys,
                    amps: Amplitudes::Exact {
                        exps,
                        mags: pack_mags(mags),
                    },
                };
            }
        }
        let mut keys: Vec<u128> = Vec::with_capacity(terms.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(terms.len());
        for (k, a) in terms {
            let c = match a {
                Amp::Exact(e, m) => {
                    Complex64::from_polar(m.to_f64(), TAU * e as f64 / order as f64)
                }
                Amp::Float(c) => c,
            };
            if keys.last() == Some(&k) {
                *vals.last_mut().unwrap() += c;
            } else {
                keys.push(k);
                vals.push(c);
            }
        }
        let (keys, vals) = keys
            .into_iter()
            .zip(vals)
            .filter(|(_, c)| c.norm() >= PRUNE_THRESHOLD)
            .unzip();
        RegisterState {
            levels,
            width,
            keys,
            amps: Amplitudes::Float(vals),
        }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of stored basis kets.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.amps, Amplitudes::Exact { .. })
    }

    pub fn keys(&self) -> &[u128] {
        &self.keys
    }

    fn amp_at(&self, i: usize) -> PhaseScalar {
        match &self.amps {
            Amplitudes::Exact { exps, mags } => PhaseScalar::Exact(RootPhase::new(
                phase_order(self.levels),
                exps[i] as i64,
                mags.get(i).clone(),
            )),
            Amplitudes::Float(v) => PhaseScalar::Float(v[i]),
        }
    }

    fn complex_at(&self, i: usize) -> Complex64 {
        match &self.amps {
            Amplitudes::Exact { exps, mags } => Complex64::from_polar(
                mags.get(i).to_f64(),
                TAU * exps[i] as f64 / phase_order(self.levels) as f64,
            ),
            Amplitudes::Float(v) => v[i],
        }
    }

    /// `(index, amplitude)` pairs in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (u128, PhaseScalar)> + '_ {
        (0..self.keys.len()).map(move |i| (self.keys[i], self.amp_at(i)))
    }

    pub fn ket(&self, index: u128) -> BasisKet {
        BasisKet::from_index(self.levels, self.width, index).expect("stored index is in range")
    }

    pub fn amplitude(&self, ket: &BasisKet) -> Option<PhaseScalar> {
        let idx = ket.index(self.levels).ok()?;
        self.keys.binary_search(&idx).ok().map(|i| self.amp_at(i))
    }

    pub fn norm_sqr(&self) -> f64 {
        (0..self.len()).map(|i| self.complex_at(i).norm_sqr()).sum()
    }

    /// Exact squared norm, when every amplitude is exact.
    pub fn norm_sqr_exact(&self) -> Option<Rational> {
        match &self.amps {
            Amplitudes::Exact {
                mags: Mags::Uniform(m),
                exps,
            } => Some(m.square() * Rational::from_integer(exps.len() as i128)),
            Amplitudes::Exact {
                mags: Mags::PerTerm(v),
                ..
            } => Some(
                v.iter()
                    .map(Magnitude::square)
                    .fold(Rational::zero(), |a, b| a + b),
            ),
            Amplitudes::Float(_) => None,
        }
    }

    pub fn is_normalized(&self) -> bool {
        match self.norm_sqr_exact() {
            Some(r) => r == Rational::from_integer(1),
            None => (self.norm_sqr() - 1.0).abs() <= FLOAT_TOLERANCE,
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        if self.is_empty() {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        match self.norm_sqr_exact() {
            Some(r) => {
                let f = Magnitude::from_sqrt(r.recip());
                Ok(self.map_magnitudes(|m| m.mul(&f)))
            }
            None => {
                let s = 1.0 / self.norm_sqr().sqrt();
                Ok(self.scaled(&PhaseScalar::Float(Complex64::new(s, 0.0))))
            }
        }
    }

    fn map_magnitudes(&self, f: impl Fn(&Magnitude) -> Magnitude) -> Self {
        let amps = match &self.amps {
            Amplitudes::Exact { exps, mags } => Amplitudes::Exact {
                exps: exps.clone(),
                mags: match mags {
                    Mags::Uniform(m) => Mags::Uniform(f(m)),
                    Mags::PerTerm(v) => pack_mags(v.iter().map(f).collect()),
                },
            },
            Amplitudes::Float(_) => unreachable!("float state has no exact magnitudes"),
        };
        RegisterState {
            amps,
            ..self.clone()
        }
    }

    /// Multiplies every amplitude by `c`.
    pub fn scaled(&self, c: &PhaseScalar) -> Self {
        let order = phase_order(self.levels);
        match (&self.amps, c) {
            (Amplitudes::Exact { exps, mags }, PhaseScalar::Exact(r)) if r.order() == order => {
                let exps = exps.iter().map(|e| (e + r.exp()) % order).collect();
                let mags = match mags {
                    Mags::Uniform(m) => Mags::Uniform(m.mul(r.magnitude())),
                    Mags::PerTerm(v) => {
                        Mags::PerTerm(v.iter().map(|m| m.mul(r.magnitude())).collect())
                    }
                };
                RegisterState {
                    amps: Amplitudes::Exact { exps, mags },
                    ..self.clone()
                }
            }
            _ => {
                let z = c.to_complex();
                let terms = (0..self.len())
                    .map(|i| (self.keys[i], Amp::Float(self.complex_at(i) * z)))
                    .collect();
                Self::assemble(self.levels, self.width, terms)
            }
        }
    }

    pub fn to_float(&self) -> Self {
        let vals = (0..self.len()).map(|i| self.complex_at(i)).collect();
        RegisterState {
            amps: Amplitudes::Float(vals),
            ..self.clone()
        }
    }

    /// `self (x) other`, with `other`'s registers appended after `self`'s.
    pub fn tensor(&self, other: &RegisterState) -> Result<Self> {
        if self.levels != other.levels {
            return Err(Error::Shape(format!(
                "cannot tensor {} and {} level registers",
                self.levels, other.levels
            )));
        }
        let width = self.width + other.width;
        place_values(self.levels, width)?;
        // index(a (x) b) = index(a) * N^width_b + index(b)
        let stride = (self.levels as u128).pow(other.width as u32);
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for i in 0..self.len() {
            for j in 0..other.len() {
                let amp = self.amp_at(i).mul(&other.amp_at(j));
                terms.push((
                    self.keys[i] * stride + other.keys[j],
                    to_amp(&amp, self.levels),
                ));
            }
        }
        Ok(Self::assemble(self.levels, width, terms))
    }

    /// `sum_k c_k |psi_k>` over states of identical shape.
    pub fn superpose(
        levels: u32,
        width: usize,
        items: &[(PhaseScalar, &RegisterState)],
    ) -> Result<Self> {
        place_values(levels, width)?;
        let mut terms = Vec::new();
        for (c, s) in items {
            if s.levels != levels || s.width != width {
                return Err(Error::Shape("superposed states differ in shape".into()));
            }
            for i in 0..s.len() {
                terms.push((s.keys[i], to_amp(&c.mul(&s.amp_at(i)), levels)));
            }
        }
        Ok(Self::assemble(levels, width, terms))
    }

    fn check_pos(&self, pos: usize) -> Result<()> {
        if pos == 0 || pos > self.width {
            Err(Error::Index {
                pos,
                width: self.width,
            })
        } else {
            Ok(())
        }
    }

    fn transform_register(&self, pos: usize, map: &RegisterMap) -> Result<Self> {
        self.check_pos(pos)?;
        let place = place_values(self.levels, self.width)?;
        let pv = place[pos - 1];
        let n = self.levels as u128;
        let order = phase_order(self.levels);

        let phase_only = map
            .iter()
            .all(|im| im.len() == 1 && matches!(im[0].1, Factor::Phase(_)));
        if let (
            true,
            Amplitudes::Exact {
                exps,
                mags: Mags::Uniform(m),
            },
        ) = (phase_only, &self.amps)
        {
            let mut out: Vec<(u128, u32)> = self
                .keys
                .iter()
                .zip(exps)
                .map(|(&k, &e)| {
                    let j = ((k / pv) % n) as usize;
                    let (i, f) = &map[j][0];
                    let Factor::Phase(fe) = f else { unreachable!() };
                    (k - j as u128 * pv + *i as u128 * pv, (e + fe) % order)
                })
                .collect();
            out.sort_unstable_by_key(|(k, _)| *k);
            if out.windows(2).all(|w| w[0].0 != w[1].0) {
                let (keys, exps) = out.into_iter().unzip();
                return Ok(RegisterState {
                    levels: self.levels,
                    width: self.width,
                    keys,
                    amps: Amplitudes::Exact {
                        exps,
                        mags: Mags::Uniform(m.clone()),
                    },
                });
            }
        }

        let mut terms = Vec::with_capacity(self.len());
        for (idx, &k) in self.keys.iter().enumerate() {
            let j = ((k / pv) % n) as usize;
            let base = k - j as u128 * pv;
            for (i, f) in &map[j] {
                let key = base + *i as u128 * pv;
                let amp = match (&self.amps, f) {
                    (Amplitudes::Exact { exps, mags }, Factor::Phase(fe)) => {
                        Amp::Exact((exps[idx] + fe) % order, mags.get(idx).clone())
                    }
                    (Amplitudes::Exact { exps, mags }, Factor::Scaled(fe, fm)) => {
                        Amp::Exact((exps[idx] + fe) % order, mags.get(idx).mul(fm))
                    }
                    _ => Amp::Float(self.complex_at(idx) * f.to_complex(order)),
                };
                terms.push((key, amp));
            }
        }
        Ok(Self::assemble(self.levels, self.width, terms))
    }

    /// Applies `op` to register `pos` (1-based).
    pub fn apply_single(&self, pos: usize, op: &SingleRegisterError) -> Result<Self> {
        op.validate(self.levels)?;
        if op.is_identity() {
            self.check_pos(pos)?;
            return Ok(self.clone());
        }
        self.transform_register(pos, &operator_map(op, self.levels))
    }

    /// Applies the adjoint of `op` to register `pos`.
    pub fn apply_single_adjoint(&self, pos: usize, op: &SingleRegisterError) -> Result<Self> {
        op.validate(self.levels)?;
        if op.is_identity() {
            self.check_pos(pos)?;
            return Ok(self.clone());
        }
        let map = transpose_conj(&operator_map(op, self.levels), self.levels);
        self.transform_register(pos, &map)
    }

    /// Replaces digit `j` at `pos` by `sum_p w^(+-jp)/sqrt(N) |p>`.
    pub fn dft_register(&self, pos: usize, inverse: bool) -> Result<Self> {
        self.transform_register(pos, &dft_map(self.levels, inverse))
    }

    /// Returns `c` with `other = c * self`, if such a scalar exists.
    pub fn proportionality(&self, other: &RegisterState, tol: f64) -> Option<PhaseScalar> {
        if self.levels != other.levels
            || self.width != other.width
            || self.keys != other.keys
            || self.is_empty()
        {
            return None;
        }
        let order = phase_order(self.levels);
        if let (
            Amplitudes::Exact { exps: ea, mags: ma },
            Amplitudes::Exact { exps: eb, mags: mb },
        ) = (&self.amps, &other.amps)
        {
            let ratio = |i: usize| {
                (
                    (eb[i] + order - ea[i]) % order,
                    mb.get(i).mul(&ma.get(i).recip()),
                )
            };
            let first = ratio(0);
            return (1..self.len())
                .all(|i| ratio(i) == first)
                .then(|| PhaseScalar::Exact(RootPhase::new(order, first.0 as i64, first.1)));
        }
        let c = other.complex_at(0) / self.complex_at(0);
        (0..self.len())
            .all(|i| (other.complex_at(i) - c * self.complex_at(i)).norm() <= tol)
            .then_some(PhaseScalar::Float(c))
    }
}

fn to_amp(s: &PhaseScalar, levels: u32) -> Amp {
    match s {
        PhaseScalar::Exact(r) if r.order() == phase_order(levels) => {
            Amp::Exact(r.exp(), r.magnitude().clone())
        }
        other => Amp::Float(other.to_complex()),
    }
}

fn pack_mags(mags: Vec<Magnitude>) -> Mags {
    match mags.first() {
        None => Mags::Uniform(Magnitude::one()),
        Some(f) if mags.iter().all(|m| m == f) => Mags::Uniform(f.clone()),
        _ => Mags::PerTerm(mags),
    }
}

/// Calls `f(i, j)` for every `i, j` with `a[i] == b[j]`; both slices sorted.
fn for_each_match(a: &[u128], b: &[u128], mut f: impl FnMut(usize, usize)) {
    if a.len() * 16 < b.len() {
        for (i, k) in a.iter().enumerate() {
            if let Ok(j) = b.binary_search(k) {
                f(i, j);
            }
        }
    } else if b.len() * 16 < a.len() {
        for (j, k) in b.iter().enumerate() {
            if let Ok(i) = a.binary_search(k) {
                f(i, j);
            }
        }
    } else {
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    f(i, j);
                    i += 1;
                    j += 1;
                }
            }
        }
    }
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner_product(a: &RegisterState, b: &RegisterState) -> Result<Overlap> {
    if a.levels != b.levels || a.width != b.width {
        return Err(Error::Shape(format!(
            "inner product of {}x{} and {}x{} register states",
            a.width, a.levels, b.width, b.levels
        )));
    }
    let order = phase_order(a.levels);
    match (&a.amps, &b.amps) {
        (
            Amplitudes::Exact {
                exps: ea,
                mags: Mags::Uniform(ma),
            },
            Amplitudes::Exact {
                exps: eb,
                mags: Mags::Uniform(mb),
            },
        ) => {
            let mut counts = vec![0i64; order as usize];
            for_each_match(&a.keys, &b.keys, |i, j| {
                counts[((eb[j] + order - ea[i]) % order) as usize] += 1;
            });
            Ok(Overlap::Exact(CycloValue::from_counts(
                order,
                &counts,
                &ma.mul(mb),
            )))
        }
        (Amplitudes::Exact { exps: ea, mags: ma }, Amplitudes::Exact { exps: eb, mags: mb }) => {
            let mut terms = Vec::new();
            for_each_match(&a.keys, &b.keys, |i, j| {
                terms.push(((eb[j] + order - ea[i]) % order, ma.get(i).mul(mb.get(j))));
            });
            match CycloValue::sum_of(order, terms) {
                Some(v) => Ok(Overlap::Exact(v)),
                None => Ok(Overlap::Float(float_inner(a, b))),
            }
        }
        _ => Ok(Overlap::Float(float_inner(a, b))),
    }
}

fn float_inner(a: &RegisterState, b: &RegisterState) -> Complex64 {
    let mut acc = Complex64::zero();
    for_each_match(&a.keys, &b.keys, |i, j| {
        acc += a.complex_at(i).conj() * b.complex_at(j)
    });
    acc
}
