//! Exhaustive and exact checks of the properties the construction needs
//! from the family `(D_s)`.

use num::bigint::BigInt;
use num::{One, Signed};

use super::{level_run, CheckpointClass, Checkpoints, LevelSet, SeparationParams};
use crate::densities::IntegerSet;
use crate::error::Result;
use crate::report::{CheckRange, CheckReport, Violation};
use crate::scalar::{pow2, rational, Rational};

/// Relative tolerance for the class limits of `D_s` at `q_l ≥ 20`.
pub const CLASS_LIMIT_TOLERANCE: (i64, i64) = (2, 100);

fn violation(property: &str, level: u32, at: u64, observed: impl ToString, required: impl ToString) -> Violation {
    Violation {
        property: property.to_string(),
        level,
        other_level: None,
        at,
        other_at: None,
        observed: observed.to_string(),
        required: required.to_string(),
    }
}

/// (i) `min D_s ≥ 2^(s+1)` together with `min Δ_s ≥ 2^(2s+p+2)`;
/// (ii') same-level gaps `≥ 2^(s+1) + 2d + 1`;
/// (iii') cross-level gaps `≥ 2^(max(s,s')+1) + 2d + 1`;
/// over all members of `D_1, …, D_{s_max}` up to `horizon`.
///
/// Every pair closer than the largest threshold is compared, so the check is
/// exhaustive over the range.
pub fn verify_separation(params: &SeparationParams, s_max: u32, horizon: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "separation",
        params.record(),
        CheckRange { s_max, horizon: Some(horizon), ..Default::default() },
    );
    let mut merged: Vec<(u64, u32)> = Vec::new();
    for s in 1..=s_max {
        let d_s = LevelSet::restricted(*params, s)?;
        let delta_s = LevelSet::unrestricted(*params, s)?;
        if let Some(first) = d_s.successor(1) {
            let floor = 1u64 << (s + 1);
            report.record(first >= floor, || violation("(i)", s, first, first, floor));
        }
        if let Some(first) = delta_s.successor(1) {
            let floor = 1u64 << params.first_scale(s);
            report.record(first >= floor, || violation("(i) on Δ_s", s, first, first, floor));
        }
        merged.extend(d_s.members_up_to(horizon).into_iter().map(|k| (k, s)));
    }
    merged.sort_unstable();
    let widest = params.separation_threshold(s_max, s_max);
    for (idx, &(k, s)) in merged.iter().enumerate() {
        for &(k2, s2) in merged[idx + 1..].iter().take_while(|&&(k2, _)| k2 - k < widest) {
            let required = params.separation_threshold(s, s2);
            let gap = k2 - k;
            let property = if s == s2 { "(ii')" } else { "(iii')" };
            report.record(gap >= required, || Violation {
                other_level: Some(s2),
                other_at: Some(k2),
                ..violation(property, s, k, gap, required)
            });
        }
    }
    Ok(report)
}

/// (v-a) `d(N_l, D_s) ≥ 2^s + d` for `s ≤ s_max`, `l ≤ count`, with exact
/// distances to the nearest members on either side.
pub fn verify_checkpoint_gap(params: &SeparationParams, s_max: u32, count: usize) -> Result<CheckReport> {
    let cps = super::checkpoints(params, count)?;
    let mut report = CheckReport::new(
        "checkpoint_gap",
        params.record(),
        CheckRange { s_max, checkpoints: Some(count), ..Default::default() },
    );
    for s in 1..=s_max {
        let d_s = LevelSet::restricted(*params, s)?;
        let required = (1u64 << s) + params.d();
        for cp in cps.iter() {
            let dist = d_s.distance_from(cp.n).unwrap_or(u64::MAX);
            report.record(dist >= required, || violation("(v-a)", s, cp.n, dist, required));
        }
    }
    Ok(report)
}

/// `2^(j-2s-p-1) - 2 ≤ #L_j^(s) ≤ 2^(j-2s-p-1)` for every admissible
/// `(s, j)` with `s ≤ s_max` and `j ≤ j_max`.
pub fn verify_counting_bounds(params: &SeparationParams, s_max: u32, j_max: u32) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "counting_bounds",
        params.record(),
        CheckRange { s_max, scale_max: Some(j_max), ..Default::default() },
    );
    for s in 1..=s_max {
        for j in params.first_scale(s)..=j_max {
            let count = level_run(params, s, j)?.len as i128;
            let top = 1i128 << (j - 2 * s - params.p() - 1);
            report.record(count <= top && count >= top - 2, || {
                violation("#L_j^(s) bounds", s, j as u64, count, format!("[{}, {}]", top - 2, top))
            });
        }
    }
    Ok(report)
}

fn ratio(count: u64, n: u64) -> Rational {
    Rational::new(BigInt::from(count), BigInt::from(n))
}

/// Upper mass bound `#(D_s ∩ [1,n]) / n ≤ (64/31)·2^(-2s-p-1)` for every
/// `n ≤ horizon` and at every checkpoint in `cps`.
///
/// Between members the prefix ratio decreases, so for `n ≤ horizon` it is
/// enough to test `n` at each member.
pub fn verify_mass_bound(
    params: &SeparationParams,
    s_max: u32,
    horizon: u64,
    cps: &Checkpoints,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "mass_bound",
        params.record(),
        CheckRange { s_max, horizon: Some(horizon), checkpoints: Some(cps.len()), ..Default::default() },
    );
    for s in 1..=s_max {
        let d_s = LevelSet::restricted(*params, s)?;
        let exp = 2 * s + params.p() + 1;
        // rank · 31 · 2^exp ≤ 64 · n
        let fits = |rank: u64, n: u64| (rank as u128) * 31 * (1u128 << exp) <= 64 * n as u128;
        for (rank, k) in d_s.members_up_to(horizon).into_iter().enumerate() {
            let rank = rank as u64 + 1;
            report.record(fits(rank, k), || {
                violation("(v-b) mass bound", s, k, ratio(rank, k), rational(64, 31) * pow2(-(exp as i64)))
            });
        }
        for cp in cps.iter() {
            let count = d_s.count_up_to(cp.n);
            report.record(fits(count, cp.n), || {
                violation("(v-b) mass bound", s, cp.n, ratio(count, cp.n), rational(64, 31) * pow2(-(exp as i64)))
            });
        }
    }
    Ok(report)
}

/// Lower bound behind positive lower density: at checkpoints with
/// `q_l ≥ 15`,
/// `#(D_s ∩ [1,N_l]) / N_l ≥ (10/31)·2^(-2s-p-3)·(1 - 2^(-(q_l-2s-p-8)))`.
pub fn verify_lower_density(params: &SeparationParams, s_max: u32, cps: &Checkpoints) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "lower_density",
        params.record(),
        CheckRange { s_max, checkpoints: Some(cps.len()), ..Default::default() },
    );
    for s in 1..=s_max {
        let d_s = LevelSet::restricted(*params, s)?;
        let base = rational(10, 31) * pow2(-((2 * s + params.p() + 3) as i64));
        for cp in cps.iter().filter(|cp| cp.q >= 15) {
            let correction = Rational::one() - pow2(-(cp.q as i64 - (2 * s + params.p() + 8) as i64));
            let bound = &base * correction;
            let got = ratio(d_s.count_up_to(cp.n), cp.n);
            report.record(got >= bound, || violation("(iv) lower bound", s, cp.n, &got, &bound));
        }
    }
    Ok(report)
}

/// `β_s = 2^(-2s-p-2)·36/31` (CLASS1) or `γ_s = 2^(-2s-p-2)·40/31` (CLASS2).
pub fn class_limit(params: &SeparationParams, s: u32, class: CheckpointClass) -> Rational {
    let num = match class {
        CheckpointClass::Class1 => 36,
        CheckpointClass::Class2 => 40,
    };
    rational(num, 31) * pow2(-((2 * s + params.p() + 2) as i64))
}

/// (v-c) ratios at CLASS1/CLASS2 checkpoints with `q_l ≥ q_min` lie within
/// `tolerance` (relative) of `β_s` / `γ_s`.
pub fn verify_class_limits(
    params: &SeparationParams,
    s_max: u32,
    cps: &Checkpoints,
    q_min: u32,
    tolerance: &Rational,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "class_limits",
        params.record(),
        CheckRange { s_max, checkpoints: Some(cps.len()), ..Default::default() },
    );
    for s in 1..=s_max {
        let d_s = LevelSet::restricted(*params, s)?;
        for cp in cps.iter().filter(|cp| cp.q >= q_min) {
            let limit = class_limit(params, s, cp.class);
            let got = ratio(d_s.count_up_to(cp.n), cp.n);
            let err = (&got - &limit).abs();
            report.record(err <= &limit * tolerance, || {
                violation(
                    &format!("(v-c) {} limit", cp.class.label()),
                    s,
                    cp.n,
                    &got,
                    format!("{limit} ± {}", &limit * tolerance),
                )
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic_sets::{checkpoints, checkpoints_through};

    fn p1() -> SeparationParams {
        SeparationParams::minimal(1).unwrap()
    }

    #[test]
    fn separation_holds_for_default_params() {
        let r = verify_separation(&p1(), 4, 1 << 16).unwrap();
        assert!(r.pass, "{:?}", r.first_violation);
        assert!(r.checked > 0);
    }

    #[test]
    fn concrete_gap_values() {
        let d1 = LevelSet::restricted(p1(), 1).unwrap();
        let members = d1.members_up_to(256);
        assert_eq!(members[0], 40);
        assert!(members[0] >= 4 && members[0] >= 32);
        assert_eq!(members[1] - members[0], 96);
        assert!(96 >= p1().separation_threshold(1, 1));
    }

    #[test]
    fn p_zero_breaks_same_level_separation() {
        let broken = SeparationParams::unchecked(1, 0);
        let r = verify_separation(&broken, 4, 1 << 16).unwrap();
        assert!(!r.pass);
        let v = r.first_violation.unwrap();
        assert_eq!(v.property, "(ii')");
        assert_eq!(v.other_at.unwrap() - v.at, v.observed.parse::<u64>().unwrap());
        assert!(v.observed.parse::<u64>().unwrap() < v.required.parse::<u64>().unwrap());
    }

    #[test]
    fn checkpoint_gaps() {
        let params = p1();
        let d1 = LevelSet::restricted(params, 1).unwrap();
        assert_eq!(d1.distance_from(64), Some(24));
        let d2 = LevelSet::restricted(params, 2).unwrap();
        assert_eq!(d2.distance_from(64), Some(144));
        let r = verify_checkpoint_gap(&params, 4, 8).unwrap();
        assert!(r.pass, "{:?}", r.first_violation);
        assert_eq!(r.checked, 32);
    }

    #[test]
    fn counting_bounds_hold() {
        for (d, p) in [(1, 1), (2, 2), (14, 4)] {
            let params = SeparationParams::new(d, p).unwrap();
            let r = verify_counting_bounds(&params, 5, 30).unwrap();
            assert!(r.pass, "{:?}", r.first_violation);
        }
    }

    #[test]
    fn density_bounds_hold() {
        let params = p1();
        let cps = checkpoints_through(&params, 32).unwrap();
        assert!(verify_mass_bound(&params, 3, 1 << 18, &cps).unwrap().pass);
        assert!(verify_lower_density(&params, 3, &cps).unwrap().pass);
        let tol = rational(CLASS_LIMIT_TOLERANCE.0, CLASS_LIMIT_TOLERANCE.1);
        let r = verify_class_limits(&params, 3, &cps, 20, &tol).unwrap();
        assert!(r.pass, "{:?}", r.first_violation);
    }

    #[test]
    fn class_limits_fail_at_tiny_tolerance() {
        let params = p1();
        let cps = checkpoints(&params, 8).unwrap();
        let r = verify_class_limits(&params, 1, &cps, 0, &rational(1, 1_000_000)).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn report_json_shape() {
        let r = verify_checkpoint_gap(&p1(), 1, 1).unwrap();
        let v = r.to_json();
        assert_eq!(v["check"], "checkpoint_gap");
        assert_eq!(v["params"]["d"], 1);
        assert_eq!(v["pass"], true);
        assert!(v["first_violation"].is_null());
    }
}
