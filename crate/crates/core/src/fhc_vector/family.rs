//! Coefficient families.
//!
//! The dense family walks every finite vector with dyadic Gaussian
//! coefficients. Stage `t` holds the vectors on offsets `|j| ≤ t` whose real
//! and imaginary parts are `k / 2^t` with `|k| ≤ t·2^t`; pairs `(t, v)` are
//! visited along anti-diagonals,
//! `(1,0); (2,0), (1,1); (3,0), (2,1), (1,2); …`, so every stage is
//! eventually exhausted. Each vector takes the smallest free level `s` with
//! `t ≤ 2^s` and all coefficients bounded by `c_s`.

use crate::error::{invalid, Result};
use crate::scalar::{self, dyadic, modulus_sq, Scalar};

use super::{CSequence, CoefficientBlock, MAX_LEVEL};

/// Which coefficient blocks to place at the levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `a_0^(1) = 1`, every other coefficient zero.
    OneBlock,
    /// The dense enumeration.
    Enumerated,
}

impl std::str::FromStr for Family {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-block" | "one_block" | "oneblock" => Ok(Family::OneBlock),
            "enumerated" | "dense" => Ok(Family::Enumerated),
            _ => Err(invalid(format!("unknown family {s:?}, expected one-block or enumerated"))),
        }
    }
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Family::OneBlock => "one-block",
            Family::Enumerated => "enumerated",
        }
    }
}

/// One enumerated vector: `coeffs[j + radius] = a_j` for `|j| ≤ radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyVector {
    pub stage: u32,
    pub rank: u64,
    pub radius: u32,
    pub coeffs: Vec<Scalar>,
}

/// `0, 1, 2, … ↦ 1, 0, -1, 2, -2, 3, -3, …`
fn alphabet(idx: u64) -> i64 {
    match idx {
        0 => 1,
        1 => 0,
        _ => {
            let k = (idx - 2) as i64;
            if k % 2 == 0 {
                -(k / 2 + 1)
            } else {
                (k + 1) / 2 + 1
            }
        }
    }
}

/// Offset of digit slot `slot`, in the order `0, -1, 1, -2, 2, …`.
fn offset(slot: u64) -> i64 {
    if slot == 0 {
        0
    } else if slot % 2 == 1 {
        -(slot as i64).div_euclid(2) - 1
    } else {
        slot as i64 / 2
    }
}

/// Iterator over the dense family in visiting order.
#[derive(Debug, Clone, Default)]
pub struct DyadicEnumerator {
    diagonal: u64,
    pos: u64,
}

impl DyadicEnumerator {
    pub fn new() -> Self {
        Self::default()
    }

    /// The vector of stage `t` with rank `v`; ranks wrap around the stage.
    pub fn vector(t: u32, v: u64) -> FamilyVector {
        let radius = t;
        let digits = 2 * (2 * radius as u64 + 1);
        let base = 2 * t as u128 * (1u128 << t) + 1;
        let mut rest = match base.checked_pow(digits as u32) {
            Some(size) => v as u128 % size,
            None => v as u128,
        };
        let mut parts = vec![0i64; digits as usize];
        for part in parts.iter_mut() {
            *part = alphabet((rest % base) as u64);
            rest /= base;
        }
        let mut coeffs = vec![scalar::zero(); 2 * radius as usize + 1];
        for slot in 0..(2 * radius as u64 + 1) {
            let j = offset(slot);
            let (re, im) = (parts[2 * slot as usize], parts[2 * slot as usize + 1]);
            coeffs[(j + radius as i64) as usize] = scalar::complex(dyadic(re, t), dyadic(im, t));
        }
        FamilyVector { stage: t, rank: v, radius, coeffs }
    }
}

impl Iterator for DyadicEnumerator {
    type Item = FamilyVector;

    fn next(&mut self) -> Option<FamilyVector> {
        let t = (self.diagonal - self.pos + 1) as u32;
        let v = self.pos;
        if self.pos == self.diagonal {
            self.diagonal += 1;
            self.pos = 0;
        } else {
            self.pos += 1;
        }
        Some(Self::vector(t, v))
    }
}

/// Blocks for levels `1..=s_max` from the dense enumeration.
pub fn enumerate_dense_family(cseq: &CSequence, s_max: u32) -> Result<Vec<CoefficientBlock>> {
    check_levels(s_max)?;
    let mut blocks = Vec::with_capacity(s_max as usize);
    let mut level = 0u32;
    for y in DyadicEnumerator::new() {
        let max_sq = y.coeffs.iter().map(modulus_sq).max().unwrap_or_default();
        let mut s = level + 1;
        while (y.radius as u64) > 1u64 << s || max_sq > cseq.c(s) * cseq.c(s) {
            s += 1;
        }
        if s > s_max {
            break;
        }
        while level + 1 < s {
            level += 1;
            blocks.push(CoefficientBlock::zero(level, cseq.c(level))?);
        }
        let r = y.radius as i64;
        let entries = y.coeffs.into_iter().enumerate().map(|(i, a)| (i as i64 - r, a));
        blocks.push(CoefficientBlock::new(s, entries, cseq.c(s))?);
        level = s;
        if level == s_max {
            break;
        }
    }
    while level < s_max {
        level += 1;
        blocks.push(CoefficientBlock::zero(level, cseq.c(level))?);
    }
    Ok(blocks)
}

/// `a_0^(1) = 1` and nothing else.
pub fn one_block_family(cseq: &CSequence, s_max: u32) -> Result<Vec<CoefficientBlock>> {
    check_levels(s_max)?;
    let mut blocks = vec![CoefficientBlock::new(1, [(0, scalar::one())], cseq.c(1))?];
    for s in 2..=s_max {
        blocks.push(CoefficientBlock::zero(s, cseq.c(s))?);
    }
    Ok(blocks)
}

pub fn build_family(family: Family, cseq: &CSequence, s_max: u32) -> Result<Vec<CoefficientBlock>> {
    match family {
        Family::OneBlock => one_block_family(cseq, s_max),
        Family::Enumerated => enumerate_dense_family(cseq, s_max),
    }
}

fn check_levels(s_max: u32) -> Result<()> {
    if s_max == 0 || s_max > MAX_LEVEL {
        return Err(invalid(format!("s_max = {s_max} outside 1..={MAX_LEVEL}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fhc_vector::build_c_sequence;
    use crate::scalar::complex;
    use crate::shift_model::ShiftOperator;
    use std::collections::HashSet;

    #[test]
    fn alphabet_is_a_bijection_onto_a_window() {
        let vals: Vec<i64> = (0..9).map(alphabet).collect();
        assert_eq!(vals, vec![1, 0, -1, 2, -2, 3, -3, 4, -4]);
        assert_eq!((0..4).map(offset).collect::<Vec<_>>(), vec![0, -1, 1, -2]);
        assert_eq!(offset(4), 2);
    }

    #[test]
    fn visiting_order() {
        let seen: Vec<(u32, u64)> = DyadicEnumerator::new().take(6).map(|y| (y.stage, y.rank)).collect();
        assert_eq!(seen, vec![(1, 0), (2, 0), (1, 1), (3, 0), (2, 1), (1, 2)]);
    }

    #[test]
    fn stage_one_covers_its_lattice() {
        // stage 1: three offsets, six parts, five numerators per part
        let base: u64 = 5;
        let size = base.pow(6);
        let distinct: HashSet<Vec<(i64, i64)>> = (0..size)
            .map(|v| {
                DyadicEnumerator::vector(1, v)
                    .coeffs
                    .iter()
                    .map(|z| {
                        let f = |r: &crate::scalar::Rational| (r * crate::scalar::integer(2)).to_integer().try_into().unwrap();
                        (f(&z.re), f(&z.im))
                    })
                    .collect()
            })
            .collect();
        assert_eq!(distinct.len() as u64, size);
        assert_eq!(DyadicEnumerator::vector(1, size).coeffs, DyadicEnumerator::vector(1, 0).coeffs);
    }

    #[test]
    fn dense_family_levels() {
        let op = ShiftOperator::default_l2();
        let cseq = build_c_sequence(&|s| op.epsilon(s), 6).unwrap();
        let blocks = enumerate_dense_family(&cseq, 6).unwrap();
        assert_eq!(blocks.len(), 6);
        let half = crate::scalar::rational(1, 2);
        assert_eq!(blocks[0].get(0), complex(half.clone(), half.clone()));
        assert_eq!(blocks[0].get(-1), complex(half.clone(), half.clone()));
        let positives: Vec<usize> = blocks.iter().map(|b| b.positive_offsets().len()).collect();
        assert_eq!(positives, vec![3, 5, 2, 7, 4, 2]);
    }

    #[test]
    fn one_block_layout() {
        let op = ShiftOperator::default_l2();
        let cseq = build_c_sequence(&|s| op.epsilon(s), 6).unwrap();
        let blocks = one_block_family(&cseq, 6).unwrap();
        assert_eq!(blocks[0].positive_offsets(), vec![0]);
        assert!(blocks[1..].iter().all(CoefficientBlock::is_zero));
        assert!(one_block_family(&cseq, 0).is_err());
    }
}
