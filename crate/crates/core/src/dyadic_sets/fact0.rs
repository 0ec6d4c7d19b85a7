//! The normalised geometric sums `S(a, b) = 2^(-b) Σ_{a<j≤b, j∈J} 2^j`.
//!
//! Along each residue class of `b` mod 5 these converge to
//! `36/31, 18/31, 40/31, 20/31, 10/31`, and they never exceed `64/31`.
//! The difference between the two classes that contain checkpoints
//! (`36/31` vs `40/31`) is what makes the prefix densities of `D_s`
//! oscillate.

use std::io::Write;

use num::bigint::BigInt;
use num::{One, Signed, Zero};
use serde::Serialize;

use super::in_residue_set;
use crate::error::{invalid, Result};
use crate::scalar::{pow2, rational, rational_to_f64, Rational};

/// `sup_{b>a} S(a, b) ≤ 64/31`.
pub const FACT0_SUP: (i64, i64) = (64, 31);

/// Exact `S(a, b)` for `0 ≤ a < b`.
pub fn s_sum(a: u32, b: u32) -> Result<Rational> {
    if a >= b {
        return Err(invalid(format!("S(a, b) needs a < b, got a = {a}, b = {b}")));
    }
    let total = (a + 1..=b)
        .filter(|&j| in_residue_set(j))
        .fold(BigInt::zero(), |acc, j| acc + (BigInt::one() << j as usize));
    Ok(Rational::new(total, BigInt::one() << b as usize))
}

/// `lim S(a, b)` as `b → ∞` with `b ≡ residue (mod 5)`.
pub fn s_limit(residue: u32) -> Result<Rational> {
    let num = match residue {
        0 => 36,
        1 => 18,
        2 => 40,
        3 => 20,
        4 => 10,
        _ => return Err(invalid(format!("residue {residue} outside 0..=4"))),
    };
    Ok(rational(num, 31))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fact0Row {
    pub a: u32,
    pub b: u32,
    pub sum: Rational,
    pub limit: Rational,
}

impl Fact0Row {
    pub fn b_mod_5(&self) -> u32 {
        self.b % 5
    }

    pub fn abs_err(&self) -> Rational {
        (&self.sum - &self.limit).abs()
    }

    /// `|S(a,b) - limit| ≤ 64 · 2^(a-b)`.
    pub fn within_tail_bound(&self) -> bool {
        self.abs_err() <= pow2(a_minus_b(self.a, self.b)) * rational(64, 1)
    }

    pub fn below_sup(&self) -> bool {
        self.sum <= rational(FACT0_SUP.0, FACT0_SUP.1)
    }
}

fn a_minus_b(a: u32, b: u32) -> i64 {
    a as i64 - b as i64
}

/// One row per `(a, b)` with `a` in `a_range` and `a < b ≤ b_max`.
pub fn fact0_table(a_range: std::ops::RangeInclusive<u32>, b_max: u32) -> Result<Vec<Fact0Row>> {
    if a_range.is_empty() || *a_range.start() >= b_max {
        return Err(invalid(format!(
            "empty range for S(a, b): a in {:?}, b up to {b_max}",
            a_range
        )));
    }
    let mut rows = Vec::new();
    for a in a_range {
        for b in a + 1..=b_max {
            rows.push(Fact0Row { a, b, sum: s_sum(a, b)?, limit: s_limit(b % 5)? });
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct Fact0Record {
    a: u32,
    b: u32,
    b_mod_5: u32,
    #[serde(rename = "S_num")]
    s_num: String,
    #[serde(rename = "S_den")]
    s_den: String,
    limit_num: String,
    limit_den: String,
    abs_err_float: f64,
}

/// CSV columns `a,b,b_mod_5,S_num,S_den,limit_num,limit_den,abs_err_float`.
pub fn write_fact0_csv<W: Write>(rows: &[Fact0Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(Fact0Record {
            a: row.a,
            b: row.b,
            b_mod_5: row.b_mod_5(),
            s_num: row.sum.numer().to_string(),
            s_den: row.sum.denom().to_string(),
            limit_num: row.limit.numer().to_string(),
            limit_den: row.limit.denom().to_string(),
            abs_err_float: rational_to_f64(&row.abs_err()),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: `Σ_{j ∈ 5ℤ, j ≤ c} 2^j = (32/31)·2^(5⌊c/5⌋)`, so
    /// `S(a,b)` is a difference of two such closed forms per residue.
    fn closed_form(a: u32, b: u32) -> Rational {
        let floor5 = |c: i64| c.div_euclid(5) * 5;
        let (a, b) = (a as i64, b as i64);
        let bracket = (pow2(floor5(b)) - pow2(floor5(a)))
            + rational(4, 1) * (pow2(floor5(b - 2)) - pow2(floor5(a - 2)));
        pow2(-b) * rational(32, 31) * bracket
    }

    #[test]
    fn examples() {
        assert_eq!(s_sum(0, 2).unwrap(), rational(1, 1));
        assert_eq!(s_sum(5, 6).unwrap(), rational(0, 1));
        assert!(s_sum(3, 3).is_err());
        assert_eq!(s_limit(0).unwrap(), rational(36, 31));
        assert_eq!(s_limit(2).unwrap(), rational(40, 31));
        assert_eq!(s_limit(4).unwrap(), rational(10, 31));
        assert!(s_limit(5).is_err());
    }

    #[test]
    fn direct_sum_matches_closed_form() {
        for a in 0..15 {
            for b in a + 1..70 {
                assert_eq!(s_sum(a, b).unwrap(), closed_form(a, b), "a = {a}, b = {b}");
            }
        }
    }

    #[test]
    fn limits_from_residue_formula() {
        // 32/31 · (2^-r(b) + 2^-r(b-2))
        for r in 0..5u32 {
            let r2 = (r + 3) % 5;
            let expected = rational(32, 31) * (pow2(-(r as i64)) + pow2(-(r2 as i64)));
            assert_eq!(s_limit(r).unwrap(), expected);
        }
    }

    #[test]
    fn tail_bound_and_sup() {
        let rows = fact0_table(5..=12, 72).unwrap();
        assert!(rows.iter().all(Fact0Row::within_tail_bound));
        assert!(rows.iter().all(Fact0Row::below_sup));
        let rows = fact0_table(0..=4, 40).unwrap();
        assert!(rows.iter().all(Fact0Row::below_sup));
    }

    #[test]
    fn csv_header_and_rows() {
        let rows = fact0_table(0..=0, 2).unwrap();
        let mut buf = Vec::new();
        write_fact0_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("a,b,b_mod_5,S_num,S_den,limit_num,limit_den,abs_err_float"));
        assert_eq!(lines.next(), Some("0,1,1,0,1,18,31,0.5806451612903226"));
        assert_eq!(lines.next(), Some("0,2,2,1,1,40,31,0.2903225806451613"));
    }

    #[test]
    fn empty_ranges_rejected() {
        assert!(fact0_table(5..=4, 10).is_err());
        assert!(fact0_table(10..=12, 10).is_err());
    }
}
