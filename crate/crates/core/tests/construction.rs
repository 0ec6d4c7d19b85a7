use proptest::prelude::*;

use irregular_orbits::densities::{density_ratios, upper_banach_density_estimate, IntegerSet};
use irregular_orbits::dyadic_sets::{checkpoints, CheckpointClass, LevelSet, SeparationParams};
use irregular_orbits::fhc_vector::{build_c_sequence, enumerate_dense_family, AssembledVector};
use irregular_orbits::scalar::{complex, integer, rational, to_f64_pair};
use irregular_orbits::shift_model::{ShiftOperator, Space};

fn dense(op: ShiftOperator, d: u64) -> AssembledVector {
    let params = SeparationParams::minimal(d).unwrap();
    let cseq = build_c_sequence(&|s| op.epsilon(s), 6).unwrap();
    let blocks = enumerate_dense_family(&cseq, 6).unwrap();
    AssembledVector::new(params, op, cseq, blocks).unwrap()
}

#[test]
fn complex_weight_on_lp() {
    // ω = 1 + i, |ω| = √2
    let op = ShiftOperator::new(complex(integer(1), integer(1)), Space::Lp(1.5)).unwrap();
    let x = dense(op, 1);
    let oracle = x.numeric_oracle(1 << 12).unwrap();
    let rep = oracle.cross_check(&x, 1e-12);
    assert_eq!(rep.disagreements, 0);
    assert!(rep.max_abs_diff < 1e-9, "{rep:?}");
    for r in 1..=3 {
        let n = x.level_set(r).unwrap().successor(1 << 14).unwrap();
        assert!(x.verify_fhc_approx(r, n, 1e-12).unwrap().holds);
    }
}

#[test]
fn larger_slack_keeps_the_structure() {
    let x = dense(ShiftOperator::default_l2(), 6);
    assert_eq!(x.params().p(), 3);
    let rs = x.return_set(1 << 20).unwrap();
    assert!(rs.decomposition_holds());
    let exp = x.density_experiment(&checkpoints(x.params(), 12).unwrap(), 20).unwrap();
    assert!(exp.separation_flag());
}

#[test]
fn return_set_densities_through_the_generic_estimators() {
    let x = dense(ShiftOperator::default_l2(), 1);
    let view = x.return_set_view();
    let cps: Vec<u64> = checkpoints(x.params(), 7).unwrap().values();
    let report = density_ratios(&view, &cps).unwrap();
    for (sample, n) in report.samples.iter().zip(&cps) {
        assert_eq!(sample.count, x.count_return_set_by_blocks(*n));
    }
    let banach = upper_banach_density_estimate(&view, 1 << 10, 1 << 16).unwrap();
    assert!(banach >= *report.ratios().last().unwrap());
    assert!(banach <= rational(1, 1));
}

#[test]
fn class_limits_order() {
    let params = SeparationParams::minimal(1).unwrap();
    let set = LevelSet::restricted(params, 1).unwrap();
    let cps = checkpoints(&params, 14).unwrap();
    let mut last = None;
    for cp in cps.iter().filter(|c| c.q >= 20) {
        let r = rational(set.count_up_to(cp.n) as i64, 1) / rational(cp.n as i64, 1);
        if let Some((prev_class, prev)) = last.take() {
            match (prev_class, cp.class) {
                (CheckpointClass::Class1, CheckpointClass::Class2) => assert!(r > prev),
                (CheckpointClass::Class2, CheckpointClass::Class1) => assert!(r < prev),
                _ => unreachable!("classes alternate"),
            }
        }
        last = Some((cp.class, r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coefficients_follow_the_covering_interval(n in 1u64..(1 << 30)) {
        let x = dense(ShiftOperator::default_l2(), 1);
        let b = x.coefficient_b(n);
        match x.locate(n) {
            Some(c) => {
                prop_assert!(c.k.abs_diff(n) <= 1 << c.s);
                prop_assert!(x.level_set(c.s).unwrap().contains(c.k));
                prop_assert_eq!(b.clone(), x.block(c.s).unwrap().get(c.k as i64 - n as i64));
            }
            None => {
                for s in 1..=6u32 {
                    let d = x.level_set(s).unwrap().distance_from(n).unwrap();
                    prop_assert!(d > 1 << s);
                }
                prop_assert_eq!(to_f64_pair(&b), (0.0, 0.0));
            }
        }
        prop_assert_eq!(x.in_return_set(n), to_f64_pair(&b).0 > 0.0);
    }
}
