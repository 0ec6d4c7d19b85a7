//! The operator `T = ωB` on `ℓ_p` or `c₀`, with `|ω| > 1`.
//!
//! `B` is the unilateral backward shift, `B e_0 = 0`, `B e_m = e_{m-1}`.
//! `T` is not invertible, but `x₀ = e₀` admits the backward chain
//!
//! ```text
//! T^(-n) x₀ = ω^(-n) e_n   (n ≥ 0),        T^n x₀ = 0   (n > 0),
//! ```
//!
//! with `T · T^(-n) x₀ = T^(-(n-1)) x₀`. The chain spans every finite
//! coordinate section, and `Σ_n T^(-n) x₀` converges unconditionally. The
//! coordinate functional `e₀*` pairs with the chain only at `n = 0`, so the
//! exceptional set is `F = {0}`.
//!
//! For `G ⊆ [2^s, ∞)` and `|β_n| ≤ β`,
//! `‖Σ_{n∈G} β_n T^(-n) x₀‖_p ≤ β · |ω|^(-2^s) (1 - |ω|^(-p))^(-1/p)`,
//! with equality in the limit of `β_n ≡ β` on `G = [2^s, ∞)`. That closed
//! form is `ε_s` (`|ω|^(-2^s)` on `c₀`).

mod lazy;
mod scaled;

use num::Zero;

use crate::error::{invalid, Error, Result};
use crate::scalar::{self, abs_f64, modulus_sq, powi, rational_to_f64, Scalar};

pub use lazy::{Decay, LazyVector, Tail};
pub use scaled::ScaledComplex;

/// Default absolute tolerance for norm truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Truncation horizons longer than this are refused.
const MAX_NORM_TERMS: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Space {
    /// `ℓ_p`, `1 ≤ p < ∞`.
    Lp(f64),
    /// `c₀` with the sup norm.
    C0,
}

impl Space {
    pub fn l2() -> Self {
        Space::Lp(2.0)
    }

    pub fn label(&self) -> String {
        match self {
            Space::Lp(p) => format!("l{p}"),
            Space::C0 => "c0".to_string(),
        }
    }
}

impl std::str::FromStr for Space {
    type Err = Error;

    /// `c0`, `l2`, `lp:1.5`, `l1.5`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "c0" {
            return Ok(Space::C0);
        }
        let num = t
            .strip_prefix("lp:")
            .or_else(|| t.strip_prefix("lp"))
            .or_else(|| t.strip_prefix('l'))
            .ok_or_else(|| invalid(format!("unknown space {s:?}")))?;
        let p: f64 = num.parse().map_err(|_| invalid(format!("unknown space {s:?}")))?;
        Ok(Space::Lp(p))
    }
}

/// A certified norm: the true norm lies in `[value, value + tail_bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub tail_bound: f64,
    /// First index not summed explicitly.
    pub horizon: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub norm: NormEstimate,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOperator {
    omega: Scalar,
    omega_abs: f64,
    space: Space,
}

impl ShiftOperator {
    pub fn new(omega: Scalar, space: Space) -> Result<Self> {
        if modulus_sq(&omega) <= scalar::integer(1) {
            return Err(invalid(format!("|ω| must exceed 1, got ω = {}", scalar::format_scalar(&omega))));
        }
        if let Space::Lp(p) = space {
            if !(p.is_finite() && p >= 1.0) {
                return Err(invalid(format!("space exponent must be finite and >= 1, got {p}")));
            }
        }
        let omega_abs = rational_to_f64(&modulus_sq(&omega)).sqrt();
        Ok(ShiftOperator { omega, omega_abs, space })
    }

    /// `2B` on `ℓ₂`.
    pub fn default_l2() -> Self {
        Self::new(scalar::real(scalar::integer(2)), Space::l2()).expect("valid")
    }

    pub fn omega(&self) -> &Scalar {
        &self.omega
    }

    pub fn omega_abs(&self) -> f64 {
        self.omega_abs
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// `ln ε_s`, finite even when `ε_s` underflows.
    pub fn log_epsilon(&self, s: u32) -> f64 {
        let head = -(2f64.powi(s as i32)) * self.omega_abs.ln();
        match self.space {
            Space::Lp(p) => head - (1.0 - self.omega_abs.powf(-p)).ln() / p,
            Space::C0 => head,
        }
    }

    /// `ε_s` in closed form.
    pub fn epsilon(&self, s: u32) -> f64 {
        self.log_epsilon(s).exp()
    }

    /// `T^(-n) x₀`; zero for `n < 0`.
    pub fn chain(&self, n: i64) -> LazyVector {
        if n < 0 {
            return LazyVector::zero();
        }
        let c = powi(&self.omega, -n).expect("ω is non-zero");
        LazyVector::from_terms([(n as u64, c)])
    }

    /// `T^n v`: `(T^n v)_m = ω^n · v_{m+n}`.
    pub fn apply_power(&self, v: &LazyVector, n: u64) -> LazyVector {
        if n == 0 {
            return v.clone();
        }
        let factor = powi(&self.omega, n as i64).expect("non-negative power");
        v.shifted_down(n, factor, n as f64 * self.omega_abs.ln())
    }

    pub fn apply(&self, v: &LazyVector) -> LazyVector {
        self.apply_power(v, 1)
    }

    /// Certified `ℓ_p` (or sup) norm.
    pub fn norm(&self, v: &LazyVector, tail_tol: f64) -> Result<NormEstimate> {
        if !(tail_tol > 0.0) {
            return Err(invalid("tail tolerance must be positive"));
        }
        let (horizon, tail_bound) = match v.tail() {
            None => (v.ranges().last().map_or(0, |r| r.end), 0.0),
            Some(Tail { decay: None, .. }) => return Err(Error::MissingDecayCertificate),
            Some(Tail { start, decay: Some(d) }) => {
                if !(d.log_ratio < 0.0) {
                    return Err(Error::Certificate(format!("decay ratio e^{} is not below 1", d.log_ratio)));
                }
                let geometric = match self.space {
                    Space::Lp(p) => -(1.0 - (p * d.log_ratio).exp()).ln() / p,
                    Space::C0 => 0.0,
                };
                let log_tail = |m: u64| d.log_amplitude + m as f64 * d.log_ratio + geometric;
                let needed = ((tail_tol.ln() - d.log_amplitude - geometric) / d.log_ratio).ceil();
                let m = if needed.is_finite() && needed > start as f64 { needed as u64 } else { start };
                if m - start > MAX_NORM_TERMS {
                    return Err(Error::Certificate(format!("truncation horizon {m} too far")));
                }
                (m, log_tail(m).exp())
            }
        };
        let mut indices: Vec<std::ops::Range<u64>> = v.ranges().to_vec();
        if let Some(t) = v.tail() {
            indices.push(t.start..horizon);
        }
        let mut acc = 0.0f64;
        for m in indices.into_iter().flatten() {
            let a = abs_f64(&v.coeff(m));
            match self.space {
                Space::Lp(p) => acc += a.powf(p),
                Space::C0 => acc = acc.max(a),
            }
        }
        let value = match self.space {
            Space::Lp(p) => acc.powf(1.0 / p),
            Space::C0 => acc,
        };
        Ok(NormEstimate { value, tail_bound, horizon })
    }

    /// Checks `‖Σ_{n∈G} β_n T^(-n) x₀‖ ≤ ε_s · max|β_n| + tail_tol`.
    ///
    /// Negative indices contribute the zero vector and are dropped; any
    /// remaining index below `2^s` is rejected.
    pub fn unconditional_bound_check(
        &self,
        s: u32,
        terms: &[(i64, Scalar)],
        tail_tol: f64,
    ) -> Result<BoundCheck> {
        let floor = 1i64 << s;
        if let Some(&(n, _)) = terms.iter().find(|(n, _)| *n >= 0 && *n < floor) {
            return Err(invalid(format!("index {n} is below 2^s = {floor}")));
        }
        let beta_max = terms.iter().map(|(_, b)| abs_f64(b)).fold(0.0, f64::max);
        let v = LazyVector::from_terms(terms.iter().filter(|(n, _)| *n >= 0).map(|(n, b)| {
            let c = powi(&self.omega, -n).expect("ω is non-zero");
            (*n as u64, b * &c)
        }));
        let norm = self.norm(&v, tail_tol)?;
        let bound = self.epsilon(s) * beta_max;
        Ok(BoundCheck { norm, bound, holds: norm.value + norm.tail_bound <= bound + tail_tol })
    }

    /// The chain vectors `T^(-n) x₀`, `0 ≤ n ≤ N`, are triangular in the
    /// coordinates `0..=N`: `T^(-n) x₀` vanishes below `n` and has a non-zero
    /// entry at `n`. They therefore span the first `N + 1` coordinates.
    pub fn verify_bicyclicity_desk(&self, n_max: u64) -> bool {
        let chain_relation = (1..=n_max as i64).all(|n| {
            let image = self.apply(&self.chain(n));
            let expect = self.chain(n - 1);
            (0..=n_max).all(|m| image.coeff(m) == expect.coeff(m))
        });
        let triangular = (0..=n_max).all(|n| {
            let v = self.chain(n as i64);
            !v.coeff(n).is_zero() && (0..=n_max).all(|m| m == n || v.coeff(m).is_zero())
        });
        let below_origin = (0..=n_max).all(|m| self.apply(&self.chain(0)).coeff(m).is_zero());
        chain_relation && triangular && below_origin
    }
}

/// `⟨e₀*, v⟩ = v_0`.
pub fn functional_eval(v: &LazyVector) -> Scalar {
    v.coeff(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{dyadic, integer, rational, real};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_c0() -> ShiftOperator {
        ShiftOperator::new(real(integer(2)), Space::C0).unwrap()
    }

    #[test]
    fn rejects_non_expanding_weights() {
        assert!(ShiftOperator::new(real(integer(1)), Space::l2()).is_err());
        assert!(ShiftOperator::new(scalar::complex(rational(3, 5), rational(4, 5)), Space::l2()).is_err());
        assert!(ShiftOperator::new(real(integer(2)), Space::Lp(0.5)).is_err());
        assert!(ShiftOperator::new(scalar::complex(integer(1), integer(1)), Space::l2()).is_ok());
    }

    #[test]
    fn parses_spaces() {
        assert_eq!("c0".parse::<Space>().unwrap(), Space::C0);
        assert_eq!("l2".parse::<Space>().unwrap(), Space::Lp(2.0));
        assert_eq!("lp:1.5".parse::<Space>().unwrap(), Space::Lp(1.5));
        assert!("h2".parse::<Space>().is_err());
    }

    #[test]
    fn epsilon_closed_forms() {
        let op = ShiftOperator::default_l2();
        assert!((op.epsilon(1) - 0.25 / 0.75f64.sqrt()).abs() < 1e-15);
        assert!((op.epsilon(1) - 0.2886751).abs() < 1e-7);
        assert!((two_c0().epsilon(1) - 0.25).abs() < 1e-15);
        for s in 1..5 {
            let ratio = op.epsilon(s + 1) / op.epsilon(s);
            assert!((ratio / 2f64.powi(-(1 << s)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn powers_shift_coordinates() {
        let op = ShiftOperator::default_l2();
        let v = LazyVector::unit(5);
        assert_eq!(op.apply_power(&v, 0).coeff(5), scalar::one());
        let w = op.apply_power(&v, 5);
        assert_eq!(w.coeff(0), real(integer(32)));
        assert!(w.ranges().len() == 1 && w.ranges()[0] == (0..1));
        let z = op.apply_power(&LazyVector::unit(3), 5);
        assert!((0..10).all(|m| scalar::is_zero(&z.coeff(m))));
    }

    #[test]
    fn functional_on_units() {
        assert_eq!(functional_eval(&LazyVector::unit(0)), scalar::one());
        assert!(scalar::is_zero(&functional_eval(&LazyVector::unit(1))));
    }

    #[test]
    fn chain_entries() {
        let op = ShiftOperator::default_l2();
        let c3 = op.chain(3);
        assert_eq!(c3.coeff(3), real(rational(1, 8)));
        assert_eq!(c3.ranges(), &[3..4]);
        assert!(op.chain(-1).ranges().is_empty());
        assert!(op.verify_bicyclicity_desk(10));
        let rot = ShiftOperator::new(scalar::complex(integer(1), integer(1)), Space::C0).unwrap();
        assert!(rot.verify_bicyclicity_desk(6));
    }

    fn geometric(start: u64) -> LazyVector {
        LazyVector::from_fn(
            |m| real(dyadic(1, m as u32)),
            vec![],
            Some(Tail { start, decay: Some(Decay::new(1.0, 0.5)) }),
        )
    }

    #[test]
    fn certified_norms() {
        let op = ShiftOperator::default_l2();
        let n = op.norm(&LazyVector::unit(0), DEFAULT_TAIL_TOL).unwrap();
        assert_eq!((n.value, n.tail_bound), (1.0, 0.0));

        let exact = (1.0f64 / 12.0).sqrt();
        let n = op.norm(&geometric(2), DEFAULT_TAIL_TOL).unwrap();
        assert!(n.value <= exact + 1e-15 && exact <= n.value + n.tail_bound + 1e-15);
        assert!(n.tail_bound < DEFAULT_TAIL_TOL);
        assert!((n.value - op.epsilon(1)).abs() < 1e-11);

        let n = two_c0().norm(&geometric(2), 1e-9).unwrap();
        assert_eq!(n.value, 0.25);

        let l1 = ShiftOperator::new(real(integer(2)), Space::Lp(1.0)).unwrap();
        let n = l1.norm(&geometric(0), 1e-10).unwrap();
        assert!((n.value - 2.0).abs() <= n.tail_bound + 1e-12);
    }

    #[test]
    fn norm_needs_a_certificate() {
        let op = ShiftOperator::default_l2();
        let v = LazyVector::from_fn(|_| scalar::one(), vec![], Some(Tail { start: 0, decay: None }));
        assert!(matches!(op.norm(&v, 1e-9), Err(Error::MissingDecayCertificate)));
        let v = LazyVector::from_fn(|_| scalar::one(), vec![], Some(Tail { start: 0, decay: Some(Decay::new(1.0, 1.0)) }));
        assert!(op.norm(&v, 1e-9).is_err());
    }

    #[test]
    fn apply_power_keeps_certificates_valid() {
        let op = ShiftOperator::default_l2();
        // v_m = 2^-m; (T^3 v)_m = 8 · 2^-(m+3) = 2^-m
        let w = op.apply_power(&geometric(0), 3);
        assert_eq!(w.coeff(4), real(dyadic(1, 4)));
        let d = w.tail().unwrap().decay.unwrap();
        assert!((d.bound_at(4) - 1.0 / 16.0).abs() < 1e-12);
        let n = op.norm(&w, 1e-12).unwrap();
        assert!((n.value - (4.0f64 / 3.0).sqrt()).abs() < 1e-11);
    }

    #[test]
    fn unconditional_bound_examples() {
        let op = ShiftOperator::default_l2();
        let c = op.unconditional_bound_check(1, &[(2, scalar::one())], 1e-12).unwrap();
        assert!((c.norm.value - 0.25).abs() < 1e-15 && c.holds);
        assert!(op.unconditional_bound_check(1, &[], 1e-12).unwrap().holds);
        assert!(op.unconditional_bound_check(2, &[(3, scalar::one())], 1e-12).is_err());
        // negative indices vanish
        let c = op.unconditional_bound_check(2, &[(-7, scalar::one()), (4, scalar::one())], 1e-12).unwrap();
        assert!((c.norm.value - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn epsilon_is_sharp_on_long_constant_prefixes() {
        let op = ShiftOperator::default_l2();
        for s in 1..=3u32 {
            let g: Vec<(i64, Scalar)> = ((1i64 << s)..(1i64 << s) + 60).map(|n| (n, scalar::one())).collect();
            let c = op.unconditional_bound_check(s, &g, 1e-12).unwrap();
            assert!(c.holds);
            assert!((c.norm.value / c.bound - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn epsilon_bound_random_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for op in [ShiftOperator::default_l2(), two_c0(), ShiftOperator::new(real(rational(3, 2)), Space::Lp(1.0)).unwrap()] {
            for s in 1..=6u32 {
                for _ in 0..1000 {
                    let lo = 1i64 << s;
                    let len = rng.gen_range(0..40);
                    let g: Vec<(i64, Scalar)> = (0..len)
                        .map(|_| {
                            let n = lo + rng.gen_range(0..80);
                            let b = scalar::complex(
                                rational(rng.gen_range(-8..=8), 8),
                                rational(rng.gen_range(-8..=8), 8),
                            );
                            (n, b)
                        })
                        .collect();
                    // duplicates are summed, so collapse them first
                    let mut seen = std::collections::BTreeMap::new();
                    for (n, b) in g {
                        seen.insert(n, b);
                    }
                    let g: Vec<(i64, Scalar)> = seen.into_iter().collect();
                    assert!(op.unconditional_bound_check(s, &g, 1e-12).unwrap().holds);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn forward_shift_identity(coeffs in proptest::collection::vec((-50i64..50, 1u32..6), 1..20), n in 0u64..25) {
            let op = ShiftOperator::new(scalar::complex(integer(2), integer(1)), Space::l2()).unwrap();
            let v = LazyVector::from_terms(coeffs.iter().enumerate().map(|(m, &(a, e))| (m as u64, real(dyadic(a, e)))));
            let lhs = functional_eval(&op.apply_power(&v, n));
            let rhs = &powi(op.omega(), n as i64).unwrap() * &v.coeff(n);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn triangle_inequality(a in proptest::collection::vec(-40i64..40, 0..30),
                               b in proptest::collection::vec(-40i64..40, 0..30)) {
            let op = ShiftOperator::default_l2();
            let va = LazyVector::from_terms(a.iter().enumerate().map(|(m, &x)| (m as u64, real(integer(x)))));
            let vb = LazyVector::from_terms(b.iter().enumerate().map(|(m, &x)| (m as u64 + 3, real(integer(x)))));
            let na = op.norm(&va, 1e-12).unwrap().value;
            let nb = op.norm(&vb, 1e-12).unwrap().value;
            let nab = op.norm(&va.add(&vb), 1e-12).unwrap().value;
            prop_assert!(nab <= na + nb + 1e-9 * (1.0 + na + nb));
        }
    }
}
