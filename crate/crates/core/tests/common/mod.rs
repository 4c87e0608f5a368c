#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qcc_core::{CodeSpec, ErrorPattern, PatternFamily, RegisterState, SingleRegisterError};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `X^a Z^b` built from its definition on `Z_N`.
pub fn weyl_dense(levels: u32, a: u32, b: u32) -> DMatrix<Complex64> {
    let n = levels as usize;
    let omega =
        |k: usize| Complex64::from_polar(1.0, std::f64::consts::TAU * (k % n) as f64 / n as f64);
    DMatrix::from_fn(n, n, |r, col| {
        if r == (col + a as usize) % n {
            omega(b as usize * col)
        } else {
            c(0.0, 0.0)
        }
    })
}

pub fn single_dense(levels: u32, op: &SingleRegisterError) -> DMatrix<Complex64> {
    match op {
        SingleRegisterError::Weyl { a, b } => weyl_dense(levels, *a, *b),
        SingleRegisterError::AdditiveFlip { alpha } => weyl_dense(levels, *alpha, 0),
        SingleRegisterError::Identity => DMatrix::identity(levels as usize, levels as usize),
        other => {
            let m = other.to_matrix(levels);
            DMatrix::from_fn(levels as usize, levels as usize, |r, col| m[r][col])
        }
    }
}

/// Register 1 is the most significant tensor factor.
pub fn pattern_dense(levels: u32, width: usize, p: &ErrorPattern) -> DMatrix<Complex64> {
    let ops: std::collections::BTreeMap<usize, &SingleRegisterError> = p.iter().collect();
    (1..=width).fold(DMatrix::identity(1, 1), |acc, pos| {
        let m = ops
            .get(&pos)
            .map(|op| single_dense(levels, op))
            .unwrap_or_else(|| DMatrix::identity(levels as usize, levels as usize));
        acc.kronecker(&m)
    })
}

pub fn state_dense(s: &RegisterState) -> DVector<Complex64> {
    let dim = (s.levels() as usize).pow(s.width() as u32);
    let mut v = DVector::from_element(dim, c(0.0, 0.0));
    for (k, a) in s.iter() {
        v[k as usize] = a.to_complex();
    }
    v
}

pub struct DenseVerdict {
    pub pass: bool,
    pub max_deviation: f64,
    /// `Lambda[a][b]` in family enumeration order.
    pub lambda: DMatrix<Complex64>,
}

/// Forms `P = sum_i |i><i|` and tests `P A^dag B P = lambda_AB P` for every pair.
pub fn dense_kl(code: &CodeSpec, family: &PatternFamily, tol: f64) -> DenseVerdict {
    let levels = code.levels();
    let dim = (levels as usize).pow(code.width() as u32);
    let mut proj = DMatrix::from_element(dim, dim, c(0.0, 0.0));
    for k in code.kets() {
        let v = state_dense(k);
        proj += &v * v.adjoint();
    }
    let rank = code.kets().len() as f64;
    let applied: Vec<DMatrix<Complex64>> = family
        .iter()
        .map(|p| pattern_dense(levels, code.width(), &p) * &proj)
        .collect();
    let f = applied.len();
    let mut lambda = DMatrix::from_element(f, f, c(0.0, 0.0));
    let mut max_dev: f64 = 0.0;
    for a in 0..f {
        let lhs = applied[a].adjoint();
        for b in a..f {
            let m = &lhs * &applied[b];
            let lam = m.trace() / rank;
            let dev = (m - &proj * lam)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            max_dev = max_dev.max(dev);
            lambda[(a, b)] = lam;
            lambda[(b, a)] = lam.conj();
        }
    }
    DenseVerdict {
        pass: max_dev <= tol,
        max_deviation: max_dev,
        lambda,
    }
}
