//! The return set `D = {n : Re ⟨e₀*, T^n x⟩ > 0}`, its predicted density
//! limits and the experiment that samples it.

use std::io::Write;

use num::bigint::BigInt;
use num::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::densities::IntegerSet;
use crate::dyadic_sets::{checkpoints_through, class_limit, Checkpoint, CheckpointClass, Checkpoints};
use crate::error::{invalid, Error, Result};
use crate::scalar::{rational_to_f64, to_f64_pair, Rational};
use crate::shift_model::ScaledComplex;

use super::AssembledVector;

/// Prefix counts up to this horizon are done by scanning; beyond it by block
/// arithmetic.
pub const SCAN_LIMIT: u64 = 1 << 23;

/// `D` as an [`IntegerSet`].
#[derive(Debug, Clone, Copy)]
pub struct ReturnSetView<'a>(pub &'a AssembledVector);

impl IntegerSet for ReturnSetView<'_> {
    fn contains(&self, n: u64) -> bool {
        n >= 1 && self.0.in_return_set(n)
    }

    fn members_up_to(&self, horizon: u64) -> Vec<u64> {
        (1..=horizon).into_par_iter().filter(|&n| self.0.in_return_set(n)).collect()
    }

    fn count_up_to(&self, horizon: u64) -> u64 {
        self.0.count_return_set(horizon)
    }
}

/// One structural identity check `#D∩[1,N] = Σ_s r_s #D_s∩[1,N]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecompositionCheck {
    pub checkpoint: Checkpoint,
    pub direct: u64,
    pub via_levels: u64,
}

impl DecompositionCheck {
    pub fn holds(&self) -> bool {
        self.direct == self.via_levels
    }
}

/// `D ∩ [1, horizon]` together with the level decomposition at every
/// checkpoint inside the horizon.
#[derive(Debug, Clone)]
pub struct ReturnSet {
    pub horizon: u64,
    pub members: Vec<u64>,
    pub r_values: Vec<u64>,
    pub decomposition: Vec<DecompositionCheck>,
}

impl ReturnSet {
    pub fn count_up_to(&self, n: u64) -> u64 {
        self.members.partition_point(|&m| m <= n) as u64
    }

    pub fn decomposition_holds(&self) -> bool {
        self.decomposition.iter().all(DecompositionCheck::holds)
    }
}

/// `(Σ r_s β_s, Σ r_s γ_s)`, the liminf and limsup of `#D∩[1,N]/N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictedLimits {
    pub lower: Rational,
    pub upper: Rational,
}

impl PredictedLimits {
    pub fn for_class(&self, class: CheckpointClass) -> &Rational {
        match class {
            CheckpointClass::Class1 => &self.lower,
            CheckpointClass::Class2 => &self.upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub checkpoint: Checkpoint,
    pub count: u64,
    pub predicted: Rational,
}

impl ExperimentRow {
    pub fn ratio(&self) -> Rational {
        Rational::new(BigInt::from(self.count), BigInt::from(self.checkpoint.n))
    }

    /// `|ratio - predicted| / predicted`.
    pub fn relative_error(&self) -> f64 {
        rational_to_f64(&((self.ratio() - &self.predicted).abs() / &self.predicted))
    }
}

/// Prefix densities of `D` at the checkpoints, against their predictions.
#[derive(Debug, Clone)]
pub struct DensityExperiment {
    pub rows: Vec<ExperimentRow>,
    pub r_values: Vec<u64>,
    pub limits: PredictedLimits,
    pub tail_from_q: u32,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    q_l: u32,
    #[serde(rename = "N_l")]
    n_l: u64,
    class: &'a str,
    #[serde(rename = "count_D")]
    count_d: u64,
    ratio_num: String,
    ratio_den: String,
    ratio_float: f64,
    predicted_limit_float: f64,
}

fn rational_json(r: &Rational) -> serde_json::Value {
    json!({ "num": r.numer().to_string(), "den": r.denom().to_string(), "float": rational_to_f64(r) })
}

impl DensityExperiment {
    fn tail(&self, class: CheckpointClass) -> impl Iterator<Item = &ExperimentRow> {
        self.rows.iter().filter(move |r| r.checkpoint.q >= self.tail_from_q && r.checkpoint.class == class)
    }

    /// Largest CLASS1 ratio in the tail.
    pub fn class1_tail_max(&self) -> Option<Rational> {
        self.tail(CheckpointClass::Class1).map(ExperimentRow::ratio).max()
    }

    /// Smallest CLASS2 ratio in the tail.
    pub fn class2_tail_min(&self) -> Option<Rational> {
        self.tail(CheckpointClass::Class2).map(ExperimentRow::ratio).min()
    }

    /// Every tail CLASS1 ratio lies strictly below every tail CLASS2 ratio.
    pub fn separation_flag(&self) -> bool {
        match (self.class1_tail_max(), self.class2_tail_min()) {
            (Some(a), Some(b)) => a < b,
            _ => false,
        }
    }

    /// Largest relative deviation from the prediction over the tail.
    pub fn tail_max_relative_error(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.checkpoint.q >= self.tail_from_q)
            .map(ExperimentRow::relative_error)
            .fold(0.0, f64::max)
    }

    /// Columns `q_l,N_l,class,count_D,ratio_num,ratio_den,ratio_float,predicted_limit_float`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            let r = row.ratio();
            w.serialize(CsvRow {
                q_l: row.checkpoint.q,
                n_l: row.checkpoint.n,
                class: row.checkpoint.class.label(),
                count_d: row.count,
                ratio_num: r.numer().to_string(),
                ratio_den: r.denom().to_string(),
                ratio_float: rational_to_f64(&r),
                predicted_limit_float: rational_to_f64(&row.predicted),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        json!({
            "r_values": self.r_values,
            "predicted_lower": rational_json(&self.limits.lower),
            "predicted_upper": rational_json(&self.limits.upper),
            "separation_flag": self.separation_flag(),
            "tail_from_q": self.tail_from_q,
            "class1_tail_max": self.class1_tail_max().as_ref().map(rational_json),
            "class2_tail_min": self.class2_tail_min().as_ref().map(rational_json),
        })
    }
}

impl AssembledVector {
    pub fn return_set_view(&self) -> ReturnSetView<'_> {
        ReturnSetView(self)
    }

    /// `#D ∩ [1, N]` by scanning every index.
    pub fn count_return_set_scan(&self, horizon: u64) -> u64 {
        (1..=horizon).into_par_iter().filter(|&n| self.in_return_set(n)).count() as u64
    }

    /// `#D ∩ [1, N]` from the blocks: `n = k - j` with `k ∈ D_s` and
    /// `Re a_j^(s) > 0`, so each positive offset `j` contributes
    /// `#D_s ∩ [1 + j, N + j]`.
    pub fn count_return_set_by_blocks(&self, horizon: u64) -> u64 {
        let mut total = 0;
        for (s, block) in (1u32..).zip(self.blocks()) {
            let set = self.level_set(s).expect("level in range");
            let count = |x: i64| if x <= 0 { 0 } else { set.count_up_to(x as u64) };
            for j in block.positive_offsets() {
                total += count(horizon as i64 + j) - count(j);
            }
        }
        total
    }

    pub fn count_return_set(&self, horizon: u64) -> u64 {
        if horizon <= SCAN_LIMIT {
            self.count_return_set_scan(horizon)
        } else {
            self.count_return_set_by_blocks(horizon)
        }
    }

    /// Scans `D ∩ [1, horizon]` and checks the level decomposition at each
    /// checkpoint up to the horizon.
    pub fn return_set(&self, horizon: u64) -> Result<ReturnSet> {
        if horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        let members = self.return_set_view().members_up_to(horizon);
        let r_values = self.r_values()?;
        let q_max = 63 - horizon.leading_zeros();
        let mut decomposition = Vec::new();
        if q_max >= 1 {
            for cp in checkpoints_through(self.params(), q_max - 1)?.iter().filter(|cp| cp.n <= horizon) {
                let direct = members.partition_point(|&m| m <= cp.n) as u64;
                let via_levels = (1u32..)
                    .zip(&r_values)
                    .map(|(s, r)| r * self.level_set(s).expect("level in range").count_up_to(cp.n))
                    .sum();
                decomposition.push(DecompositionCheck { checkpoint: *cp, direct, via_levels });
            }
        }
        Ok(ReturnSet { horizon, members, r_values, decomposition })
    }

    /// `Σ r_s β_s` and `Σ r_s γ_s`. Fails with [`Error::Vacuous`] when every
    /// block has an empty positive part.
    pub fn predicted_limits(&self) -> Result<PredictedLimits> {
        let r = self.r_values()?;
        if r.iter().all(|&v| v == 0) {
            return Err(Error::Vacuous);
        }
        let mut lower = Rational::zero();
        let mut upper = Rational::zero();
        for (s, &rs) in (1u32..).zip(&r) {
            let rs = Rational::from_integer(BigInt::from(rs));
            lower += &rs * class_limit(self.params(), s, CheckpointClass::Class1);
            upper += &rs * class_limit(self.params(), s, CheckpointClass::Class2);
        }
        Ok(PredictedLimits { lower, upper })
    }

    /// Counts `D` at every checkpoint; ratios at `q_l ≥ tail_from_q` form the
    /// tail used for the summary statistics.
    pub fn density_experiment(&self, cps: &Checkpoints, tail_from_q: u32) -> Result<DensityExperiment> {
        if cps.is_empty() {
            return Err(invalid("checkpoint list is empty"));
        }
        let limits = self.predicted_limits()?;
        let r_values = self.r_values()?;
        let rows = cps
            .iter()
            .map(|cp| ExperimentRow {
                checkpoint: *cp,
                count: self.count_return_set(cp.n),
                predicted: limits.for_class(cp.class).clone(),
            })
            .collect();
        Ok(DensityExperiment { rows, r_values, limits, tail_from_q })
    }

    /// A floating-point evaluator of `ω^n x_n` built from the level sets
    /// directly, independent of [`AssembledVector::locate`].
    pub fn numeric_oracle(&self, horizon: u64) -> Result<NumericOracle> {
        NumericOracle::new(self, horizon)
    }
}

/// Evaluates `⟨e₀*, T^n x⟩ = ω^n x_n` by summing the defining series in
/// floating point: every `k ∈ D_s` near `n` contributes `a_j ω^(-(k-j))`
/// whenever `k - j = n`.
pub struct NumericOracle {
    horizon: u64,
    omega: ScaledComplex,
    levels: Vec<(i64, Vec<u64>, Vec<(f64, f64)>)>,
}

/// Agreement of the analytic and numeric evaluations over `[1, N]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossOracleReport {
    pub horizon: u64,
    pub checked: u64,
    /// Sign mismatches excused because the numeric real part was within
    /// `2·tol` of zero.
    pub guarded: u64,
    pub disagreements: u64,
    pub first_disagreement: Option<u64>,
    pub max_abs_diff: f64,
}

impl NumericOracle {
    fn new(x: &AssembledVector, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        let (re, im) = to_f64_pair(x.operator().omega());
        let levels = (1..=x.s_max())
            .map(|s| {
                let r = 1i64 << s;
                let members = x.level_set(s).expect("level in range").members_up_to(horizon + r as u64);
                let block = x.block(s).expect("level in range");
                let coeffs = (-r..=r).map(|j| to_f64_pair(&block.get(j))).collect();
                (r, members, coeffs)
            })
            .collect();
        Ok(NumericOracle { horizon, omega: ScaledComplex::new(re, im), levels })
    }

    /// `ω^n x_n` as `(re, im)`.
    pub fn eval(&self, n: u64) -> Result<(f64, f64)> {
        if n == 0 || n > self.horizon {
            return Err(Error::HorizonExceeded { index: n, horizon: self.horizon });
        }
        let mut coord = ScaledComplex::ZERO;
        for (r, members, coeffs) in &self.levels {
            let lo = members.partition_point(|&k| (k as i64) < n as i64 - r);
            for &k in members[lo..].iter().take_while(|&&k| (k as i64) <= n as i64 + r) {
                for j in -r..=*r {
                    if k as i64 - j != n as i64 {
                        continue;
                    }
                    let (re, im) = coeffs[(j + r) as usize];
                    let term = ScaledComplex::new(re, im).mul(self.omega.powu((k as i64 - j) as u64).inv());
                    coord = coord.add(term);
                }
            }
        }
        Ok(coord.mul(self.omega.powu(n)).to_f64_pair())
    }

    /// Compares the sign of `Re eval(n)` with `Re b_n > 0` for every
    /// `n ≤ horizon`. Mismatches with `|Re eval(n)| ≤ 2·tol` are counted as
    /// guarded rather than as disagreements.
    pub fn cross_check(&self, x: &AssembledVector, tol: f64) -> CrossOracleReport {
        let rows: Vec<(u64, f64, bool, bool)> = (1..=self.horizon)
            .into_par_iter()
            .map(|n| {
                let (re, im) = self.eval(n).expect("n within horizon");
                let (bre, bim) = to_f64_pair(&x.orbit_functional_analytic(n));
                let same_sign = (re > 0.0) == x.in_return_set(n);
                let guarded = !same_sign && re.abs() <= 2.0 * tol;
                (n, (re - bre).hypot(im - bim), guarded, same_sign || guarded)
            })
            .collect();
        let bad: Vec<u64> = rows.iter().filter(|r| !r.3).map(|r| r.0).collect();
        CrossOracleReport {
            horizon: self.horizon,
            checked: rows.len() as u64,
            guarded: rows.iter().filter(|r| r.2).count() as u64,
            disagreements: bad.len() as u64,
            first_disagreement: bad.first().copied(),
            max_abs_diff: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic_sets::{checkpoints, SeparationParams};
    use crate::fhc_vector::{build_c_sequence, enumerate_dense_family, one_block_family, CoefficientBlock};
    use crate::scalar::rational;
    use crate::shift_model::ShiftOperator;

    fn vector(dense: bool) -> AssembledVector {
        let params = SeparationParams::minimal(1).unwrap();
        let op = ShiftOperator::default_l2();
        let cseq = build_c_sequence(&|s| op.epsilon(s), 6).unwrap();
        let blocks =
            if dense { enumerate_dense_family(&cseq, 6).unwrap() } else { one_block_family(&cseq, 6).unwrap() };
        AssembledVector::new(params, op, cseq, blocks).unwrap()
    }

    #[test]
    fn one_block_limits() {
        let l = vector(false).predicted_limits().unwrap();
        assert_eq!(l.lower, rational(9, 248));
        assert_eq!(l.upper, rational(5, 124));
    }

    #[test]
    fn vacuous_family() {
        let params = SeparationParams::minimal(1).unwrap();
        let op = ShiftOperator::default_l2();
        let cseq = build_c_sequence(&|s| op.epsilon(s), 6).unwrap();
        let blocks = (1..=6).map(|s| CoefficientBlock::zero(s, cseq.c(s)).unwrap()).collect();
        let x = AssembledVector::new(params, op, cseq, blocks).unwrap();
        assert!(matches!(x.predicted_limits(), Err(Error::Vacuous)));
        assert_eq!(x.count_return_set_scan(1 << 12), 0);
    }

    #[test]
    fn block_counting_matches_scan() {
        for dense in [false, true] {
            let x = vector(dense);
            for n in [1u64, 39, 40, 41, 100, 137, 1000, 4096, 65_537, 1 << 20] {
                assert_eq!(x.count_return_set_by_blocks(n), x.count_return_set_scan(n), "N = {n}");
            }
        }
    }

    #[test]
    fn decomposition_at_checkpoints() {
        let rs = vector(true).return_set(1 << 18).unwrap();
        assert!(!rs.decomposition.is_empty());
        assert!(rs.decomposition_holds(), "{:?}", rs.decomposition);
        assert_eq!(rs.r_values, vec![3, 5, 2, 7, 4, 2]);
    }

    #[test]
    fn oracle_agreement_small() {
        let x = vector(true);
        let oracle = x.numeric_oracle(1 << 12).unwrap();
        let rep = oracle.cross_check(&x, 1e-12);
        assert_eq!(rep.disagreements, 0, "{rep:?}");
        assert!(rep.max_abs_diff < 1e-12);
        assert!(oracle.eval(0).is_err() && oracle.eval((1 << 12) + 1).is_err());
    }

    #[test]
    fn experiment_csv_header() {
        let x = vector(false);
        let cps = checkpoints(x.params(), 4).unwrap();
        let exp = x.density_experiment(&cps, 0).unwrap();
        let mut buf = Vec::new();
        exp.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("q_l,N_l,class,count_D,ratio_num,ratio_den,ratio_float,predicted_limit_float\n"));
        assert_eq!(text.lines().count(), 5);
        let v = exp.summary_json();
        assert_eq!(v["r_values"], json!([1, 0, 0, 0, 0, 0]));
        assert_eq!(v["predicted_lower"]["num"], "9");
    }
}
