//! Code construction: built-in codes, the classical rate-1/2 convolutional
//! encoder, block-to-convolutional lifting, and materialized encoded kets.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{phase_order, Magnitude, PhaseScalar, Rational, RootPhase};
use crate::state::{inner_product, BasisKet, RegisterState};

/// Largest logical dimension `N^(n L)` that is materialized.
pub const MAX_LOGICAL_DIM: u128 = 1 << 16;

/// Rate-1/2 memory-2 encoder `b_i = a_i + a_{i-2}`, `c_i = a_i + a_{i-1} + a_{i-2}`
/// over `Z_N`, output interleaved as `(b_1, c_1, b_2, c_2, ...)`.
///
/// With `flush`, two zero symbols are appended to the message first.
pub fn classical_conv_encode(levels: u32, message: &[u32], flush: bool) -> Result<Vec<u32>> {
    if levels < 2 {
        return Err(Error::Domain(format!(
            "register needs at least 2 levels, got {levels}"
        )));
    }
    if let Some(a) = message.iter().find(|&&a| a >= levels) {
        return Err(Error::Domain(format!("symbol {a} is not in Z_{levels}")));
    }
    let mut a = message.to_vec();
    if flush {
        a.extend([0, 0]);
    }
    let at = |i: isize| if i < 0 { 0 } else { a[i as usize] };
    Ok((0..a.len() as isize)
        .flat_map(|i| {
            let b = (at(i) + at(i - 2)) % levels;
            let c = (at(i) + at(i - 1) + at(i - 2)) % levels;
            [b, c]
        })
        .collect())
}

/// Codes with a closed-form encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinCode {
    /// No encoding: `|k> -> |k>`.
    Identity,
    /// `|k> -> |k, k, k>` per logical symbol.
    Majority3,
    /// Nine-register code, `sum w^(k(p+q+r)) |ppp qqq rrr>` per logical symbol.
    Shor9,
    /// Five-register block code, `sum w^(k(p+q+r) + pr) |p, q, p+r, q+r, p+q+k>`.
    Perfect5Block,
    /// The five-register block code driven by `k_i + k_{i-1}`.
    Perfect5,
    /// Classical rate-1/2 convolutional code, flushed.
    SpinConv,
    /// Classical rate-1/2 convolutional code without the flush tail.
    SpinConvOpen,
    /// Rate-1/4 convolutional code in closed form, both stages flushed.
    Rate14Conv,
}

impl BuiltinCode {
    pub const ALL: [BuiltinCode; 8] = [
        BuiltinCode::Identity,
        BuiltinCode::Majority3,
        BuiltinCode::Shor9,
        BuiltinCode::Perfect5Block,
        BuiltinCode::Perfect5,
        BuiltinCode::SpinConv,
        BuiltinCode::SpinConvOpen,
        BuiltinCode::Rate14Conv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinCode::Identity => "identity",
            BuiltinCode::Majority3 => "majority3",
            BuiltinCode::Shor9 => "shor9",
            BuiltinCode::Perfect5Block => "perfect5_block",
            BuiltinCode::Perfect5 => "perfect5",
            BuiltinCode::SpinConv => "spin_conv",
            BuiltinCode::SpinConvOpen => "spin_conv_open",
            BuiltinCode::Rate14Conv => "rate14_conv",
        }
    }

    fn shape(self) -> Shape {
        let (m, memory, flush, head, tail) = match self {
            BuiltinCode::Identity => (1, 0, 0, 0, 0),
            BuiltinCode::Majority3 => (3, 0, 0, 0, 0),
            BuiltinCode::Shor9 => (9, 0, 0, 0, 0),
            BuiltinCode::Perfect5Block => (5, 0, 0, 0, 0),
            BuiltinCode::Perfect5 => (5, 1, 0, 0, 0),
            BuiltinCode::SpinConv => (2, 2, 2, 2, 4),
            BuiltinCode::SpinConvOpen => (2, 2, 0, 2, 0),
            BuiltinCode::Rate14Conv => (4, 2, 3, 4, 4),
        };
        Shape {
            n: 1,
            m,
            memory,
            flush,
            head,
            tail,
        }
    }
}

impl fmt::Display for BuiltinCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinCode::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCode(s.to_string()))
    }
}

/// Mixing matrix for lifting a block code to a convolutional one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MuKind {
    Identity,
    /// `mu_ip = 1` iff `p` is `i` or `i - 1`.
    Bidiagonal,
    Explicit {
        entries: Vec<Vec<u32>>,
    },
}

/// An `L x L` matrix over `Z_N` with unit determinant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuMatrix {
    levels: u32,
    entries: Vec<Vec<u32>>,
}

impl MuMatrix {
    pub fn new(levels: u32, entries: Vec<Vec<u32>>) -> Result<Self> {
        let l = entries.len();
        if l == 0 || entries.iter().any(|r| r.len() != l) {
            return Err(Error::Shape(
                "mixing matrix must be square and non-empty".into(),
            ));
        }
        let entries: Vec<Vec<u32>> = entries
            .into_iter()
            .map(|r| r.into_iter().map(|x| x % levels).collect())
            .collect();
        let det = determinant(&entries)?.rem_euclid(levels as i128) as i64;
        if num_integer::gcd(det, levels as i64) != 1 {
            return Err(Error::SingularMixing {
                det,
                modulus: levels,
            });
        }
        Ok(MuMatrix { levels, entries })
    }

    pub fn from_kind(levels: u32, kind: &MuKind, len: usize) -> Result<Self> {
        let entries = match kind {
            MuKind::Identity => (0..len)
                .map(|i| (0..len).map(|p| (i == p) as u32).collect())
                .collect(),
            MuKind::Bidiagonal => (0..len)
                .map(|i| (0..len).map(|p| (p == i || p + 1 == i) as u32).collect())
                .collect(),
            MuKind::Explicit { entries } => {
                if entries.len() != len {
                    return Err(Error::FixedLength(format!(
                        "explicit {0}x{0} mixing matrix",
                        entries.len()
                    )));
                }
                entries.clone()
            }
        };
        MuMatrix::new(levels, entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn apply(&self, k: &[u32]) -> Vec<u32> {
        self.entries
            .iter()
            .map(|row| {
                (row.iter()
                    .zip(k)
                    .map(|(&m, &x)| m as u64 * x as u64)
                    .sum::<u64>()
                    % self.levels as u64) as u32
            })
            .collect()
    }
}

/// Integer determinant by fraction-free elimination.
fn determinant(m: &[Vec<u32>]) -> Result<i128> {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut sign = 1;
    let mut prev = 1i128;
    let overflow = || Error::Domain("mixing matrix determinant overflows".into());
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = a[i][j]
                    .checked_mul(a[k][k])
                    .and_then(|x| a[i][k].checked_mul(a[k][j]).and_then(|y| x.checked_sub(y)))
                    .ok_or_else(overflow)?;
                a[i][j] = v / prev;
            }
        }
        prev = a[k][k];
    }
    Ok(sign * a[n - 1][n - 1])
}

/// How a code is built; recipes can be re-instantiated at any logical length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Recipe {
    Builtin {
        code: BuiltinCode,
    },
    Lifted {
        base: BuiltinCode,
        mu: MuKind,
    },
    Dual {
        inner: Box<Recipe>,
    },
    Paste {
        first: Box<Recipe>,
        second: Box<Recipe>,
    },
}

impl Recipe {
    pub fn builtin(code: BuiltinCode) -> Self {
        Recipe::Builtin { code }
    }

    pub fn dual(inner: Recipe) -> Self {
        Recipe::Dual {
            inner: Box::new(inner),
        }
    }

    pub fn paste(first: Recipe, second: Recipe) -> Self {
        Recipe::Paste {
            first: Box::new(first),
            second: Box::new(second),
        }
    }

    pub fn pipeline(classical: Recipe) -> Self {
        Recipe::paste(Recipe::dual(classical.clone()), classical)
    }

    pub fn label(&self) -> String {
        match self {
            Recipe::Builtin { code } => code.name().to_string(),
            Recipe::Lifted { base, mu } => format!("lift({base},{})", mu_name(mu)),
            Recipe::Dual { inner } => format!("{}-dual", inner.label()),
            Recipe::Paste { first, second } => {
                format!("paste({},{})", first.label(), second.label())
            }
        }
    }

    /// Logical symbols per block.
    pub fn logical_block(&self) -> usize {
        match self {
            Recipe::Builtin { .. } | Recipe::Lifted { .. } => 1,
            Recipe::Dual { inner } => inner.logical_block(),
            Recipe::Paste { first, .. } => first.logical_block(),
        }
    }

    /// Metadata for a window of `len` logical symbols.
    fn shape(&self, levels: u32, len: usize) -> Result<Shape> {
        match self {
            Recipe::Builtin { code } => Ok(code.shape()),
            Recipe::Lifted { base, .. } => {
                let b = base.shape();
                if b.memory != 0 || b.flush != 0 {
                    return Err(Error::Domain(format!("`{base}` is not a block code")));
                }
                Ok(Shape { memory: 1, ..b })
            }
            Recipe::Dual { inner } => inner.shape(levels, len),
            Recipe::Paste { first, second } => {
                let s1 = first.shape(levels, len)?;
                let s2 = second.shape(levels, len)?;
                let w2 = self.width(levels, len)?;
                let m = s1.m * s2.m / s2.n;
                let n = s1.n;
                let flush = (w2 / m).saturating_sub(len / n);
                Ok(Shape {
                    n,
                    m,
                    memory: s1.memory.max(s2.memory),
                    flush,
                    head: s2.head.max(s1.head * s2.m / s2.n),
                    tail: s2.tail,
                })
            }
        }
    }

    fn width(&self, levels: u32, len: usize) -> Result<usize> {
        match self {
            Recipe::Paste { first, second } => {
                let w1 = first.width(levels, len)?;
                let n2 = second.logical_block();
                if w1 % n2 != 0 {
                    return Err(Error::Shape(format!(
                        "{w1} registers do not fill logical blocks of {n2}"
                    )));
                }
                second.width(levels, w1)
            }
            Recipe::Dual { inner } => inner.width(levels, len),
            _ => Ok(self.shape(levels, len)?.width(len)),
        }
    }

    /// Encodes the logical digits `k_1 .. k_{nL}`.
    pub fn encode(&self, levels: u32, digits: &[u32]) -> Result<RegisterState> {
        if let Some(d) = digits.iter().find(|&&d| d >= levels) {
            return Err(Error::Domain(format!(
                "logical symbol {d} is not in Z_{levels}"
            )));
        }
        match self {
            Recipe::Builtin { code } => encode_builtin(*code, levels, digits),
            Recipe::Lifted { base, mu } => {
                let mu = MuMatrix::from_kind(levels, mu, digits.len())?;
                let u = mu.apply(digits);
                let mut out: Option<RegisterState> = None;
                for &ui in &u {
                    let block = encode_builtin(*base, levels, &[ui])?;
                    out = Some(match out {
                        None => block,
                        Some(s) => s.tensor(&block)?,
                    });
                }
                out.ok_or_else(|| Error::Domain("empty logical window".into()))
            }
            Recipe::Dual { inner } => {
                let s = inner.encode(levels, digits)?;
                (1..=s.width()).try_fold(s, |s, pos| s.dft_register(pos, false))
            }
            Recipe::Paste { first, second } => {
                let outer = first.encode(levels, digits)?;
                let mut memo: HashMap<u128, RegisterState> = HashMap::new();
                let mut parts = Vec::with_capacity(outer.len());
                for (key, amp) in outer.iter() {
                    let stream = outer.ket(key);
                    let enc = match memo.get(&key) {
                        Some(s) => s.clone(),
                        None => {
                            let s = second.encode(levels, stream.digits())?;
                            memo.insert(key, s.clone());
                            s
                        }
                    };
                    parts.push((amp, enc));
                }
                let width = self.width(levels, digits.len())?;
                let refs: Vec<(PhaseScalar, &RegisterState)> =
                    parts.iter().map(|(a, s)| (a.clone(), s)).collect();
                RegisterState::superpose(levels, width, &refs)
            }
        }
    }
}

fn mu_name(mu: &MuKind) -> String {
    match mu {
        MuKind::Identity => "identity".into(),
        MuKind::Bidiagonal => "bidiagonal".into(),
        MuKind::Explicit { entries } => format!("{entries:?}").replace(' ', ""),
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recipe::Builtin { code } => write!(f, "{code}"),
            Recipe::Lifted { base, mu } => write!(f, "lift({base},{})", mu_name(mu)),
            Recipe::Dual { inner } => write!(f, "dual({inner})"),
            Recipe::Paste { first, second } => write!(f, "paste({first},{second})"),
        }
    }
}

/// Parses `name`, `dual(e)`, `paste(e,e)`, `pipeline(e)` and `lift(block,identity|bidiagonal)`.
impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (r, rest) = parse_expr(&compact)?;
        if !rest.is_empty() {
            return Err(Error::UnknownCode(s.to_string()));
        }
        Ok(r)
    }
}

fn parse_expr(s: &str) -> Result<(Recipe, &str)> {
    let end = s
        .find(['(', ',', ')'])
        .unwrap_or(s.len());
    let (head, rest) = s.split_at(end);
    if !rest.starts_with('(') {
        return Ok((Recipe::builtin(head.parse()?), rest));
    }
    let rest = &rest[1..];
    let close = |rest| expect_char(rest, ')', s);
    match head {
        "dual" | "pipeline" => {
            let (inner, rest) = parse_expr(rest)?;
            let r = if head == "dual" {
                Recipe::dual(inner)
            } else {
                Recipe::pipeline(inner)
            };
            Ok((r, close(rest)?))
        }
        "paste" => {
            let (a, rest) = parse_expr(rest)?;
            let rest = expect_char(rest, ',', s)?;
            let (b, rest) = parse_expr(rest)?;
            Ok((Recipe::paste(a, b), close(rest)?))
        }
        "lift" => {
            let comma = rest
                .find(',')
                .ok_or_else(|| Error::UnknownCode(s.to_string()))?;
            let base: BuiltinCode = rest[..comma].parse()?;
            let rest = &rest[comma + 1..];
            let end = rest
                .find(')')
                .ok_or_else(|| Error::UnknownCode(s.to_string()))?;
            let mu = match &rest[..end] {
                "identity" => MuKind::Identity,
                "bidiagonal" => MuKind::Bidiagonal,
                other => return Err(Error::UnknownCode(format!("mixing matrix `{other}`"))),
            };
            Ok((Recipe::Lifted { base, mu }, &rest[end + 1..]))
        }
        other => Err(Error::UnknownCode(other.to_string())),
    }
}

fn expect_char<'a>(rest: &'a str, c: char, whole: &str) -> Result<&'a str> {
    rest.strip_prefix(c)
        .ok_or_else(|| Error::UnknownCode(whole.to_string()))
}

#[derive(Clone, Copy, Debug)]
struct Shape {
    n: usize,
    m: usize,
    memory: usize,
    flush: usize,
    head: usize,
    tail: usize,
}

impl Shape {
    fn width(&self, len: usize) -> usize {
        self.m * (len / self.n.max(1) + self.flush)
    }
}

fn exact(levels: u32, exp: u64, mag: &Magnitude) -> PhaseScalar {
    let order = phase_order(levels);
    let step = (order / levels) as u64;
    PhaseScalar::Exact(RootPhase::new(
        order,
        ((exp % levels as u64) * step) as i64,
        mag.clone(),
    ))
}

fn index_of(levels: u32, digits: &[u32]) -> u128 {
    digits
        .iter()
        .fold(0u128, |acc, &d| acc * levels as u128 + d as u128)
}

fn tensor_blocks(
    levels: u32,
    digits: &[u32],
    block: impl Fn(u32) -> Result<RegisterState>,
) -> Result<RegisterState> {
    let mut out: Option<RegisterState> = None;
    for &k in digits {
        let b = block(k)?;
        out = Some(match out {
            None => b,
            Some(s) => s.tensor(&b)?,
        });
    }
    out.ok_or_else(|| Error::Domain(format!("empty logical window over Z_{levels}")))
}

fn shor9_block(levels: u32, k: u32) -> Result<RegisterState> {
    let n = levels;
    let mag = Magnitude::from_sqrt(Rational::new(1, (n as i128).pow(3)));
    let mut terms = Vec::new();
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                let digits = [p, p, p, q, q, q, r, r, r];
                terms.push((
                    index_of(n, &digits),
                    exact(n, k as u64 * (p + q + r) as u64, &mag),
                ));
            }
        }
    }
    RegisterState::from_indexed(n, 9, terms)
}

fn perfect5_block(levels: u32, k: u32) -> Result<RegisterState> {
    let n = levels;
    let mag = Magnitude::from_sqrt(Rational::new(1, (n as i128).pow(3)));
    let mut terms = Vec::new();
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                let digits = [p, q, (p + r) % n, (q + r) % n, (p + q + k) % n];
                let e = k as u64 * (p + q + r) as u64 + p as u64 * r as u64;
                terms.push((index_of(n, &digits), exact(n, e, &mag)));
            }
        }
    }
    RegisterState::from_indexed(n, 5, terms)
}

/// `sum_{p,q} w^(sum_i b_i p_i + c_i q_i) / N^(L+2)` over blocks
/// `|p_i + p_{i-1}, p_i + p_{i-1} + q_{i-1}, q_i + q_{i-1}, q_i + q_{i-1} + p_i>`,
/// where `(b, c)` is the flushed classical encoding of `k` and the stream
/// `p, q` is itself flushed by one block.
fn rate14_closed_form(levels: u32, k: &[u32]) -> Result<RegisterState> {
    let n = levels;
    let len = k.len();
    let free = len + 2;
    let blocks = len + 3;
    let bc = classical_conv_encode(n, k, true)?;
    let mag = Magnitude::from_rational(Rational::new(1, (n as i128).pow(free as u32)));
    let total = (n as u64).pow(2 * free as u32);
    let mut terms = Vec::with_capacity(total as usize);
    let mut pq = vec![0u32; 2 * free];
    for code in 0..total {
        let mut c = code;
        for d in pq.iter_mut().rev() {
            *d = (c % n as u64) as u32;
            c /= n as u64;
        }
        let p = |i: usize| {
            if i == 0 || i > free {
                0
            } else {
                pq[2 * (i - 1)]
            }
        };
        let q = |i: usize| {
            if i == 0 || i > free {
                0
            } else {
                pq[2 * (i - 1) + 1]
            }
        };
        let e: u64 = (0..free)
            .map(|i| {
                bc[2 * i] as u64 * pq[2 * i] as u64 + bc[2 * i + 1] as u64 * pq[2 * i + 1] as u64
            })
            .sum();
        let mut digits = Vec::with_capacity(4 * blocks);
        for i in 1..=blocks {
            digits.push((p(i) + p(i - 1)) % n);
            digits.push((p(i) + p(i - 1) + q(i - 1)) % n);
            digits.push((q(i) + q(i - 1)) % n);
            digits.push((q(i) + q(i - 1) + p(i)) % n);
        }
        terms.push((index_of(n, &digits), exact(n, e, &mag)));
    }
    RegisterState::from_indexed(n, 4 * blocks, terms)
}

fn encode_builtin(code: BuiltinCode, levels: u32, k: &[u32]) -> Result<RegisterState> {
    match code {
        BuiltinCode::Identity => RegisterState::basis(levels, k),
        BuiltinCode::Majority3 => {
            let d: Vec<u32> = k.iter().flat_map(|&x| [x, x, x]).collect();
            RegisterState::basis(levels, &d)
        }
        BuiltinCode::Shor9 => tensor_blocks(levels, k, |x| shor9_block(levels, x)),
        BuiltinCode::Perfect5Block => tensor_blocks(levels, k, |x| perfect5_block(levels, x)),
        BuiltinCode::Perfect5 => {
            let u: Vec<u32> = (0..k.len())
                .map(|i| (k[i] + if i > 0 { k[i - 1] } else { 0 }) % levels)
                .collect();
            tensor_blocks(levels, &u, |x| perfect5_block(levels, x))
        }
        BuiltinCode::SpinConv => {
            RegisterState::basis(levels, &classical_conv_encode(levels, k, true)?)
        }
        BuiltinCode::SpinConvOpen => {
            RegisterState::basis(levels, &classical_conv_encode(levels, k, false)?)
        }
        BuiltinCode::Rate14Conv => rate14_closed_form(levels, k),
    }
}

/// Registers near either end of a truncated window, where the encoder sees
/// the zero prefix or the flush tail rather than live logical data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary {
    pub head: usize,
    pub tail: usize,
}

/// An isometry from `Z_N^(nL)` into `width` registers, stored as its encoded kets.
#[derive(Clone, Debug)]
pub struct CodeSpec {
    label: String,
    recipe: Recipe,
    levels: u32,
    n: usize,
    m: usize,
    memory: usize,
    flush: usize,
    logical_len: usize,
    width: usize,
    boundary: Boundary,
    kets: Vec<RegisterState>,
}

/// Code metadata as written to JSON manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub label: String,
    pub recipe: String,
    #[serde(rename = "N")]
    pub levels: u32,
    pub n: usize,
    pub m: usize,
    pub memory: usize,
    pub flush: usize,
    pub logical_length: usize,
    pub width: usize,
    pub rate: f64,
    pub boundary: Boundary,
}

impl CodeSpec {
    /// Materializes `recipe` over logical windows of `logical_len` blocks.
    pub fn build(recipe: Recipe, levels: u32, logical_len: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Domain(format!(
                "register needs at least 2 levels, got {levels}"
            )));
        }
        if logical_len == 0 {
            return Err(Error::Domain("logical length must be at least 1".into()));
        }
        let symbols = recipe.logical_block() * logical_len;
        let shape = recipe.shape(levels, symbols)?;
        let dim = (levels as u128)
            .checked_pow(symbols as u32)
            .filter(|&d| d <= MAX_LOGICAL_DIM)
            .ok_or_else(|| {
                Error::Config(format!(
                    "{levels}^{symbols} logical kets is too many to materialize"
                ))
            })?;
        let width = recipe.width(levels, symbols)?;
        let mut kets = Vec::with_capacity(dim as usize);
        for idx in 0..dim {
            let digits = BasisKet::from_index(levels, symbols, idx)?;
            let ket = recipe.encode(levels, digits.digits())?;
            if ket.width() != width {
                return Err(Error::Shape(format!(
                    "encoder produced {} registers, expected {width}",
                    ket.width()
                )));
            }
            kets.push(ket.normalized()?);
        }
        Ok(CodeSpec {
            label: recipe.label(),
            recipe,
            levels,
            n: shape.n,
            m: shape.m,
            memory: shape.memory,
            flush: shape.flush,
            logical_len,
            width,
            boundary: Boundary {
                head: shape.head,
                tail: shape.tail,
            },
            kets,
        })
    }

    pub fn builtin(code: BuiltinCode, levels: u32, logical_len: usize) -> Result<Self> {
        Self::build(Recipe::builtin(code), levels, logical_len)
    }

    /// Builds from a recipe expression such as `paste(dual(spin_conv),spin_conv)`.
    pub fn parse(expr: &str, levels: u32, logical_len: usize) -> Result<Self> {
        Self::build(expr.parse()?, levels, logical_len)
    }

    /// A copy with replaced kets and label; metadata is kept.
    pub(crate) fn with_kets(
        &self,
        recipe: Recipe,
        label: String,
        kets: Vec<RegisterState>,
    ) -> Self {
        CodeSpec {
            recipe,
            label,
            kets,
            ..self.clone()
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn recipe(&self) -> &Recipe {
        &self.recipe
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn logical_block(&self) -> usize {
        self.n
    }

    pub fn physical_block(&self) -> usize {
        self.m
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn flush(&self) -> usize {
        self.flush
    }

    pub fn logical_len(&self) -> usize {
        self.logical_len
    }

    /// Logical symbols per window, `n * L`.
    pub fn logical_symbols(&self) -> usize {
        self.n * self.logical_len
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rate(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn logical_dim(&self) -> usize {
        self.kets.len()
    }

    /// Encoded kets indexed by the big-endian logical index.
    pub fn kets(&self) -> &[RegisterState] {
        &self.kets
    }

    pub fn ket(&self, logical: &[u32]) -> Result<&RegisterState> {
        if logical.len() != self.logical_symbols() {
            return Err(Error::Shape(format!(
                "{} logical symbols, expected {}",
                logical.len(),
                self.logical_symbols()
            )));
        }
        let idx = BasisKet::new(self.levels, logical.to_vec())?.index(self.levels)?;
        Ok(&self.kets[idx as usize])
    }

    /// True when every encoded ket is a single basis state.
    pub fn is_classical(&self) -> bool {
        self.kets.iter().all(|k| k.len() == 1)
    }

    /// Largest `|<i|j> - delta_ij|` over the encoded kets.
    pub fn gram_deviation(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (i, a) in self.kets.iter().enumerate() {
            for (j, b) in self.kets.iter().enumerate().skip(i) {
                let v = inner_product(a, b)?.to_complex();
                let target = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((v - target).norm());
            }
        }
        Ok(worst)
    }

    /// Encodes a logical state `sum_k a_k |k>` into the code space.
    pub fn encode(&self, logical: &RegisterState) -> Result<RegisterState> {
        if logical.levels() != self.levels || logical.width() != self.logical_symbols() {
            return Err(Error::Shape(
                "logical state does not match the code's logical window".into(),
            ));
        }
        let items: Vec<(PhaseScalar, &RegisterState)> = logical
            .iter()
            .map(|(k, a)| (a, &self.kets[k as usize]))
            .collect();
        RegisterState::superpose(self.levels, self.width, &items)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            label: self.label.clone(),
            recipe: self.recipe.to_string(),
            levels: self.levels,
            n: self.n,
            m: self.m,
            memory: self.memory,
            flush: self.flush,
            logical_length: self.logical_len,
            width: self.width,
            rate: self.rate(),
            boundary: self.boundary,
        }
    }

    /// Encoded kets as `{logical, terms: [{digits, amplitude: [re, im]}]}` records.
    pub fn export_kets(&self) -> serde_json::Value {
        let records: Vec<serde_json::Value> = self
            .kets
            .iter()
            .enumerate()
            .map(|(i, ket)| {
                let logical = BasisKet::from_index(self.levels, self.logical_symbols(), i as u128)
                    .map(|k| k.digits().to_vec())
                    .unwrap_or_default();
                let terms: Vec<serde_json::Value> = ket
                    .iter()
                    .map(|(k, a)| {
                        let c = a.to_complex();
                        serde_json::json!({"digits": ket.ket(k).digits(), "amplitude": [c.re, c.im]})
                    })
                    .collect();
                serde_json::json!({"logical": logical, "terms": terms})
            })
            .collect();
        serde_json::Value::Array(records)
    }
}

/// The single unit scalar `c` with `b_k = c a_k` for every logical `k`, if any.
pub fn equivalent_up_to_phase(a: &CodeSpec, b: &CodeSpec, tol: f64) -> Option<PhaseScalar> {
    if a.levels != b.levels || a.width != b.width || a.kets.len() != b.kets.len() {
        return None;
    }
    let c = a.kets.first()?.proportionality(&b.kets[0], tol)?;
    if (c.to_complex().norm() - 1.0).abs() > tol.max(1e-12) {
        return None;
    }
    let same = |x: &PhaseScalar| match (x, &c) {
        (PhaseScalar::Exact(_), PhaseScalar::Exact(_)) => *x == c,
        _ => (x.to_complex() - c.to_complex()).norm() <= tol,
    };
    a.kets
        .iter()
        .zip(&b.kets)
        .all(|(x, y)| x.proportionality(y, tol).is_some_and(|r| same(&r)))
        .then_some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_encoder_examples() {
        assert_eq!(
            classical_conv_encode(2, &[0, 0, 0], false).unwrap(),
            vec![0; 6]
        );
        assert_eq!(
            classical_conv_encode(2, &[1, 0, 0], false).unwrap(),
            vec![1, 1, 0, 1, 1, 1]
        );
        assert_eq!(
            classical_conv_encode(3, &[2], true).unwrap(),
            vec![2, 2, 0, 2, 2, 2]
        );
        assert!(classical_conv_encode(2, &[2], true).is_err());
    }

    #[test]
    fn spin_conv_kets() {
        let c = CodeSpec::builtin(BuiltinCode::SpinConv, 2, 2).unwrap();
        assert_eq!(c.width(), 8);
        assert_eq!(c.rate(), 0.5);
        let k = c.ket(&[1, 0]).unwrap();
        assert_eq!(
            k.keys(),
            RegisterState::basis(2, &[1, 1, 0, 1, 1, 1, 0, 0])
                .unwrap()
                .keys()
        );
        assert_eq!(
            c.ket(&[0]).err(),
            Some(Error::Shape("1 logical symbols, expected 2".into()))
        );
        assert!(c.is_classical());
        assert_eq!(c.gram_deviation().unwrap(), 0.0);
        let one = CodeSpec::builtin(BuiltinCode::SpinConv, 2, 1).unwrap();
        assert_eq!(one.kets()[0].keys(), &[0]);
    }

    #[test]
    fn shor9_zero_ket() {
        let c = CodeSpec::builtin(BuiltinCode::Shor9, 2, 1).unwrap();
        let z = &c.kets()[0];
        assert_eq!(z.len(), 8);
        assert!(z.is_exact());
        for (_, a) in z.iter() {
            assert!((a.to_complex() - Complex64::new(1.0 / 8f64.sqrt(), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn rate14_single_block() {
        let c = CodeSpec::builtin(BuiltinCode::Rate14Conv, 2, 1).unwrap();
        assert_eq!(c.width(), 16);
        assert_eq!(c.flush(), 3);
        let one = &c.kets()[1];
        assert_eq!(one.len(), 64);
        // k = (1) encodes classically to b = (1, 0, 1), c = (1, 1, 1), so the
        // phase is (-1)^(p_1 + q_1 + q_2 + p_3 + q_3); p_i, q_i are recovered
        // as running sums of registers 1 and 3 of each block.
        for (key, a) in one.iter() {
            let d = one.ket(key);
            let d = d.digits();
            let (mut p, mut q) = (vec![0u32], vec![0u32]);
            for i in 0..3 {
                p.push((d[4 * i] + p[i]) % 2);
                q.push((d[4 * i + 2] + q[i]) % 2);
            }
            let sign = if (p[1] + q[1] + q[2] + p[3] + q[3]) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            assert!((a.to_complex() - Complex64::new(sign * 0.125, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn perfect5_orthogonal() {
        let c = CodeSpec::builtin(BuiltinCode::Perfect5, 2, 1).unwrap();
        assert!(inner_product(&c.kets()[0], &c.kets()[1])
            .unwrap()
            .is_zero_within(0.0));
    }

    #[test]
    fn isometries() {
        for code in BuiltinCode::ALL {
            for levels in [2u32, 3] {
                for len in 1..=2usize {
                    let c = CodeSpec::builtin(code, levels, len).unwrap();
                    assert_eq!(
                        c.gram_deviation().unwrap(),
                        0.0,
                        "{code} N={levels} L={len}"
                    );
                    assert!(c.kets().iter().all(RegisterState::is_exact));
                }
            }
        }
    }

    #[test]
    fn lifting() {
        let lifted = CodeSpec::build(
            Recipe::Lifted {
                base: BuiltinCode::Perfect5Block,
                mu: MuKind::Bidiagonal,
            },
            2,
            2,
        )
        .unwrap();
        let direct = CodeSpec::builtin(BuiltinCode::Perfect5, 2, 2).unwrap();
        assert!(equivalent_up_to_phase(&lifted, &direct, 0.0).is_some());

        let ident = CodeSpec::build(
            Recipe::Lifted {
                base: BuiltinCode::Shor9,
                mu: MuKind::Identity,
            },
            2,
            2,
        )
        .unwrap();
        let tensor = CodeSpec::builtin(BuiltinCode::Shor9, 2, 2).unwrap();
        assert_eq!(
            equivalent_up_to_phase(&ident, &tensor, 0.0),
            Some(PhaseScalar::one(2))
        );

        assert_eq!(
            MuMatrix::new(2, vec![vec![0, 0], vec![0, 0]]),
            Err(Error::SingularMixing { det: 0, modulus: 2 })
        );
        assert!(MuMatrix::new(4, vec![vec![2, 0], vec![0, 1]]).is_err());
        assert!(MuMatrix::new(3, vec![vec![2, 1], vec![1, 1]]).is_ok());
        assert!(MuMatrix::new(3, vec![vec![1, 2], vec![2, 1]]).is_err());
        assert_eq!(
            MuMatrix::new(5, vec![vec![1, 1], vec![0, 1]])
                .unwrap()
                .apply(&[3, 4]),
            vec![2, 4]
        );
    }

    #[test]
    fn recipe_parsing() {
        let r: Recipe = "paste(dual(spin_conv), spin_conv)".parse().unwrap();
        assert_eq!(r, Recipe::pipeline(Recipe::builtin(BuiltinCode::SpinConv)));
        assert_eq!(r.to_string(), "paste(dual(spin_conv),spin_conv)");
        assert_eq!(r.label(), "paste(spin_conv-dual,spin_conv)");
        let l: Recipe = "lift(perfect5_block,bidiagonal)".parse().unwrap();
        assert_eq!(l.to_string(), "lift(perfect5_block,bidiagonal)");
        assert!(matches!(
            "nope".parse::<Recipe>(),
            Err(Error::UnknownCode(_))
        ));
        assert!("dual(shor9".parse::<Recipe>().is_err());
        assert!("paste(shor9)".parse::<Recipe>().is_err());
    }

    #[test]
    fn manifest_fields() {
        let c = CodeSpec::builtin(BuiltinCode::Rate14Conv, 2, 3).unwrap();
        let m = serde_json::to_value(c.manifest()).unwrap();
        assert_eq!(m["N"], 2);
        assert_eq!(m["width"], 24);
        assert_eq!(m["rate"], 0.25);
        assert_eq!(m["logical_length"], 3);
        let exported = c.export_kets();
        assert_eq!(exported.as_array().unwrap().len(), 8);
    }
}
