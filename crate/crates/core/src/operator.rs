//! Single-register error operators.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::PhaseScalar;

/// An operator acting on one `N`-level register.
///
/// `Weyl { a, b }` is `X^a Z^b` with `X|j> = |j+1>` and `Z|j> = w^j |j>`;
/// `Z` acts first. `AdditiveFlip(a)` is the same operator as `Weyl { a, b: 0 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingleRegisterError {
    Identity,
    AdditiveFlip {
        alpha: u32,
    },
    /// `|j> -> |table[j]>`; the table need not be a permutation.
    SpinFlip {
        table: Vec<u32>,
    },
    /// `|j> -> phases[j] |j>` with unit-modulus entries.
    PhaseShift {
        #[serde(serialize_with = "phases_out", deserialize_with = "phases_in")]
        phases: Vec<PhaseScalar>,
    },
    Weyl {
        a: u32,
        b: u32,
    },
    /// Dense `N x N` matrix, row-major; column `j` is the image of `|j>`.
    General {
        matrix: Vec<Vec<Complex64>>,
    },
}

fn phases_out<S: Serializer>(phases: &[PhaseScalar], s: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<[f64; 2]> = phases
        .iter()
        .map(|p| {
            let c = p.to_complex();
            [c.re, c.im]
        })
        .collect();
    v.serialize(s)
}

fn phases_in<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<PhaseScalar>, D::Error> {
    let v: Vec<[f64; 2]> = Vec::deserialize(d)?;
    Ok(v.into_iter()
        .map(|[re, im]| PhaseScalar::Float(Complex64::new(re, im)))
        .collect())
}

impl SingleRegisterError {
    pub fn weyl(a: u32, b: u32) -> Self {
        SingleRegisterError::Weyl { a, b }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            SingleRegisterError::Identity => true,
            SingleRegisterError::AdditiveFlip { alpha } => *alpha == 0,
            SingleRegisterError::Weyl { a, b } => *a == 0 && *b == 0,
            _ => false,
        }
    }

    /// Permutation, phase and Weyl operators keep sparse states sparse.
    pub fn is_monomial(&self) -> bool {
        match self {
            SingleRegisterError::SpinFlip { table } => {
                let mut seen = vec![false; table.len()];
                table
                    .iter()
                    .all(|&t| !std::mem::replace(&mut seen[t as usize], true))
            }
            SingleRegisterError::General { .. } => false,
            _ => true,
        }
    }

    pub fn validate(&self, levels: u32) -> Result<()> {
        let n = levels as usize;
        let bad = |msg: String| Err(Error::Domain(msg));
        match self {
            SingleRegisterError::Identity => Ok(()),
            SingleRegisterError::AdditiveFlip { alpha } if *alpha >= levels => {
                bad(format!("shift {alpha} is not in Z_{levels}"))
            }
            SingleRegisterError::Weyl { a, b } if *a >= levels || *b >= levels => {
                bad(format!("Weyl exponents ({a},{b}) are not in Z_{levels}"))
            }
            SingleRegisterError::SpinFlip { table } => {
                if table.len() != n || table.iter().any(|&t| t >= levels) {
                    bad(format!("spin flip table must map Z_{levels} into itself"))
                } else {
                    Ok(())
                }
            }
            SingleRegisterError::PhaseShift { phases } => {
                if phases.len() != n {
                    return bad(format!("phase table needs {n} entries"));
                }
                if phases
                    .iter()
                    .any(|p| (p.to_complex().norm_sqr() - 1.0).abs() > 1e-12)
                {
                    return bad("phase shift entries must have unit modulus".into());
                }
                Ok(())
            }
            SingleRegisterError::General { matrix } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    bad(format!("general error must be a {n}x{n} matrix"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Dense matrix of the operator (row = output digit, column = input digit).
    pub fn to_matrix(&self, levels: u32) -> Vec<Vec<Complex64>> {
        let n = levels as usize;
        let w =
            |k: u64| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / levels as f64);
        let mut m = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for j in 0..n {
            match self {
                SingleRegisterError::Identity => m[j][j] = Complex64::new(1.0, 0.0),
                SingleRegisterError::AdditiveFlip { alpha } => {
                    m[(j + *alpha as usize) % n][j] = Complex64::new(1.0, 0.0)
                }
                SingleRegisterError::SpinFlip { table } => {
                    m[table[j] as usize][j] += Complex64::new(1.0, 0.0)
                }
                SingleRegisterError::PhaseShift { phases } => m[j][j] = phases[j].to_complex(),
                SingleRegisterError::Weyl { a, b } => {
                    m[(j + *a as usize) % n][j] = w(*b as u64 * j as u64)
                }
                SingleRegisterError::General { matrix } => {
                    for i in 0..n {
                        m[i][j] = matrix[i][j];
                    }
                }
            }
        }
        m
    }
}

/// The `N^2 - 1` non-identity Weyl operators `X^a Z^b`, ordered by `(a, b)`.
pub fn weyl_basis(levels: u32) -> Vec<SingleRegisterError> {
    (0..levels)
        .flat_map(|a| (0..levels).map(move |b| (a, b)))
        .filter(|&(a, b)| (a, b) != (0, 0))
        .map(|(a, b)| SingleRegisterError::weyl(a, b))
        .collect()
}

/// Pure additive spin flips `X^a`, `a = 1..N-1`.
pub fn additive_basis(levels: u32) -> Vec<SingleRegisterError> {
    (1..levels)
        .map(|a| SingleRegisterError::weyl(a, 0))
        .collect()
}

/// Pure phase errors `Z^b`, `b = 1..N-1`.
pub fn phase_basis(levels: u32) -> Vec<SingleRegisterError> {
    (1..levels)
        .map(|b| SingleRegisterError::weyl(0, b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_sizes() {
        assert_eq!(weyl_basis(2).len(), 3);
        assert_eq!(weyl_basis(3).len(), 8);
        assert!(weyl_basis(2).contains(&SingleRegisterError::weyl(1, 1)));
        assert_eq!(
            additive_basis(3),
            vec![
                SingleRegisterError::weyl(1, 0),
                SingleRegisterError::weyl(2, 0)
            ]
        );
    }

    #[test]
    fn validation() {
        assert!(SingleRegisterError::weyl(2, 0).validate(2).is_err());
        assert!(SingleRegisterError::SpinFlip { table: vec![0, 0] }
            .validate(2)
            .is_ok());
        assert!(!SingleRegisterError::SpinFlip { table: vec![0, 0] }.is_monomial());
        let bad = SingleRegisterError::PhaseShift {
            phases: vec![
                PhaseScalar::Float(Complex64::new(1.0, 0.0)),
                PhaseScalar::Float(Complex64::new(0.5, 0.0)),
            ],
        };
        assert!(bad.validate(2).is_err());
    }

    #[test]
    fn serde_shape() {
        let json = serde_json::to_string(&SingleRegisterError::weyl(1, 0)).unwrap();
        assert_eq!(json, r#"{"kind":"weyl","a":1,"b":0}"#);
        let back: SingleRegisterError = serde_json::from_str(&json).unwrap();
        assert_eq!(back, SingleRegisterError::weyl(1, 0));
    }
}
