//! Closed-form Neumann–Kirchhoff spectra (unit density) for a few families.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OracleFamily {
    Interval { length: f64 },
    Loop { length: f64 },
    /// `m` parallel edges of one length between two vertices.
    EquilateralPumpkin { m: usize, length: f64 },
    /// `m` loops of one length at a single vertex.
    EquilateralFlower { m: usize, length: f64 },
    /// Chain of parallel-edge pairs; both edges of pair `j` have length `lengths[j]`.
    SymmetricNecklace { lengths: Vec<f64> },
}

/// Family names accepted by [`OracleFamily::from_name`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    Interval,
    Loop,
    EquilateralPumpkin,
    EquilateralFlower,
    SymmetricNecklace,
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(FamilyName::Interval),
            "loop" => Ok(FamilyName::Loop),
            "pumpkin" | "equilateral_pumpkin" => Ok(FamilyName::EquilateralPumpkin),
            "flower" | "equilateral_flower" => Ok(FamilyName::EquilateralFlower),
            "necklace" | "symmetric_necklace" => Ok(FamilyName::SymmetricNecklace),
            other => Err(Error::UnsupportedFamily(other.to_string())),
        }
    }
}

impl OracleFamily {
    /// Builds a family from a name and its edge lengths. Pumpkins and
    /// flowers list one length per edge; necklaces one length per pair.
    pub fn from_name(name: &str, lengths: &[f64]) -> Result<Self> {
        if lengths.is_empty() || lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::Validation("oracle lengths must be positive".into()));
        }
        let equal = |what: &str| -> Result<f64> {
            let l = lengths[0];
            if lengths.iter().all(|&x| (x - l).abs() <= 1e-12 * l) {
                Ok(l)
            } else {
                Err(Error::UnsupportedFamily(format!("{what} with unequal edge lengths")))
            }
        };
        let single = |what: &str| -> Result<f64> {
            match lengths {
                [l] => Ok(*l),
                _ => Err(Error::UnsupportedFamily(format!("{what} takes exactly one length"))),
            }
        };
        Ok(match name.parse::<FamilyName>()? {
            FamilyName::Interval => OracleFamily::Interval {
                length: single("interval")?,
            },
            FamilyName::Loop => OracleFamily::Loop {
                length: single("loop")?,
            },
            // Two parallel edges form a circle whatever their lengths.
            FamilyName::EquilateralPumpkin if lengths.len() == 2 => OracleFamily::Loop {
                length: lengths.iter().sum(),
            },
            FamilyName::EquilateralPumpkin => OracleFamily::EquilateralPumpkin {
                m: lengths.len(),
                length: equal("pumpkin")?,
            },
            FamilyName::EquilateralFlower => OracleFamily::EquilateralFlower {
                m: lengths.len(),
                length: equal("flower")?,
            },
            FamilyName::SymmetricNecklace => OracleFamily::SymmetricNecklace {
                lengths: lengths.to_vec(),
            },
        })
    }

    /// `(value, multiplicity)` terms with frequency index `1..=terms`.
    fn terms(&self, terms: usize) -> Vec<(f64, usize)> {
        let mut out = vec![(0.0, 1)];
        let sq = |j: usize, l: f64| (j as f64 * PI / l).powi(2);
        match self {
            OracleFamily::Interval { length } => {
                out.extend((1..=terms).map(|j| (sq(j, *length), 1)));
            }
            OracleFamily::Loop { length } => {
                out.extend((1..=terms).map(|j| (sq(2 * j, *length), 2)));
            }
            OracleFamily::EquilateralPumpkin { m, length } => {
                out.extend((1..=terms).map(|j| (sq(j, *length), *m)));
            }
            OracleFamily::EquilateralFlower { m, length } => {
                for j in 1..=2 * terms {
                    let mult = if j % 2 == 1 { m - 1 } else { m + 1 };
                    if mult > 0 {
                        out.push((sq(j, *length), mult));
                    }
                }
            }
            OracleFamily::SymmetricNecklace { lengths } => {
                let total: f64 = lengths.iter().sum();
                out.extend((1..=terms).map(|j| (sq(j, total), 1)));
                for &l in lengths {
                    out.extend((1..=terms).map(|j| (sq(j, l), 1)));
                }
            }
        }
        out
    }

    /// The lowest `count` eigenvalues `λ_0, λ_1, ...` with multiplicity.
    pub fn eigenvalues(&self, count: usize) -> Vec<f64> {
        let mut terms = self.terms(count + 1);
        terms.sort_by(|a, b| a.0.total_cmp(&b.0));
        terms
            .into_iter()
            .flat_map(|(v, m)| std::iter::repeat_n(v, m))
            .take(count)
            .collect()
    }

    /// Total length of the metric graph.
    pub fn total_length(&self) -> f64 {
        match self {
            OracleFamily::Interval { length } | OracleFamily::Loop { length } => *length,
            OracleFamily::EquilateralPumpkin { m, length } | OracleFamily::EquilateralFlower { m, length } => {
                *m as f64 * length
            }
            OracleFamily::SymmetricNecklace { lengths } => 2.0 * lengths.iter().sum::<f64>(),
        }
    }
}

/// Closed-form `λ_0 ..= λ_k_max` for a named family.
pub fn oracle_spectrum(family: &OracleFamily, k_max: usize) -> Vec<f64> {
    family.eigenvalues(k_max + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn interval_and_loop() {
        let v = oracle_spectrum(&OracleFamily::Interval { length: PI }, 3);
        assert_eq!(v.len(), 4);
        assert!(v.iter().zip([0.0, 1.0, 4.0, 9.0]).all(|(a, b)| close(*a, b)));
        let v = oracle_spectrum(&OracleFamily::Loop { length: 2.0 * PI }, 4);
        assert!(v.iter().zip([0.0, 1.0, 1.0, 4.0, 4.0]).all(|(a, b)| close(*a, b)));
    }

    #[test]
    fn two_pumpkin_is_scale_free() {
        for lengths in [[0.3, 1.7], [1.0, 1.0], [2.5, 0.1]] {
            let fam = OracleFamily::from_name("pumpkin", &lengths).unwrap();
            let l = fam.total_length();
            let v = oracle_spectrum(&fam, 1);
            assert!(close(v[1] * l * l, 4.0 * PI * PI));
        }
    }

    #[test]
    fn flower_and_necklace() {
        let v = oracle_spectrum(&OracleFamily::EquilateralFlower { m: 3, length: PI }, 7);
        assert!(v.iter().zip([0.0, 1.0, 1.0, 4.0, 4.0, 4.0, 4.0, 9.0]).all(|(a, b)| close(*a, b)));
        let v = oracle_spectrum(&OracleFamily::SymmetricNecklace { lengths: vec![1.0; 3] }, 1);
        assert!(close(v[1], (PI / 3.0).powi(2)));
    }

    #[test]
    fn pumpkin_multiplicity() {
        let v = oracle_spectrum(&OracleFamily::EquilateralPumpkin { m: 3, length: PI }, 4);
        assert!(v.iter().zip([0.0, 1.0, 1.0, 1.0, 4.0]).all(|(a, b)| close(*a, b)));
    }

    #[test]
    fn unknown_family() {
        assert!(matches!(
            OracleFamily::from_name("star", &[1.0]),
            Err(Error::UnsupportedFamily(_))
        ));
        assert!(matches!(
            OracleFamily::from_name("flower", &[1.0, 2.0]),
            Err(Error::UnsupportedFamily(_))
        ));
    }
}
