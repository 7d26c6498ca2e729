//! Closed-form covertness and rate expressions.
//!
//! All functions are methods on [`Scenario`] so the derived coefficients are
//! computed once per parameter set. Powers are in watts, probabilities in
//! `[0, 1]`, rates in bits/s/Hz.

use std::fmt;

use crate::config::Scenario;
use crate::error::{Error, Result};

/// Warden's radiometer threshold. The infinite threshold (never declare a
/// transmission) is its own variant rather than a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Finite(f64),
    Infinite,
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Finite(t) => write!(f, "{t}"),
            Threshold::Infinite => f.write_str("inf"),
        }
    }
}

/// False-alarm, missed-detection and total error probabilities for one
/// threshold and prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOutcome {
    pub p_fa: f64,
    pub p_md: f64,
    pub xi: f64,
}

impl DetectionOutcome {
    /// Builds the outcome for prior `q`, fixing `xi = (1 − q) p_fa + q p_md`.
    pub fn new(q: f64, p_fa: f64, p_md: f64) -> Self {
        DetectionOutcome {
            p_fa,
            p_md,
            xi: (1.0 - q) * p_fa + q * p_md,
        }
    }
}

impl Scenario {
    /// Unconditional probability that a slot carries a transmission when the
    /// sensor transmits with probability `p` whenever its battery allows:
    /// `q = 1 / (1 + (1 − p)/p² + μ₁ Pₛ)`.
    pub fn prior_transmit_probability(&self, p: f64, p_s: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("conditional prior p must be in (0, 1], got {p}")));
        }
        if p_s.is_nan() || p_s <= 0.0 {
            return Err(Error::Domain(format!("transmit power must be > 0, got {p_s}")));
        }
        Ok(1.0 / (1.0 + (1.0 - p) / (p * p) + self.coeff.mu1 * p_s))
    }

    /// Largest reachable prior at power `p_s`, attained at `p = 1`.
    pub fn max_prior(&self, p_s: f64) -> f64 {
        1.0 / (1.0 + self.coeff.mu1 * p_s)
    }

    /// `λ_sr β / Pₛ`, the outage exponent.
    fn outage_exponent(&self, p_s: f64) -> f64 {
        self.outage_scale() / p_s
    }

    pub fn outage_probability(&self, p_s: f64) -> f64 {
        -(-self.outage_exponent(p_s)).exp_m1()
    }

    /// `R_c = q R exp(−λ_sr β / Pₛ)`.
    pub fn effective_covert_rate(&self, q: f64, p_s: f64) -> f64 {
        q * self.params.rate * (-self.outage_exponent(p_s)).exp()
    }

    /// Prior below which the warden's best threshold is `+∞`:
    /// `1 / (1 + exp(μ₂ Pₛ))`.
    pub fn covertness_boundary(&self, p_s: f64) -> f64 {
        1.0 / (1.0 + (self.coeff.mu2 * p_s).exp())
    }

    /// Smallest prior meeting the rate floor, `(R_m/R) exp(λ_sr β / Pₛ)`,
    /// evaluated in log space and clamped to 1.
    pub fn rate_floor_prior(&self, p_s: f64, r_m: f64) -> f64 {
        if r_m <= 0.0 {
            return 0.0;
        }
        let log = (r_m / self.params.rate).ln() + self.outage_exponent(p_s);
        if log >= 0.0 {
            1.0
        } else {
            log.exp()
        }
    }

    pub fn detection_error(&self, tau: Threshold, q: f64, p_s: f64) -> DetectionOutcome {
        let sigma2_w = self.params.sigma2_w;
        let signal = p_s * self.params.h_sw_gain;
        let scale = self.params.lambda_rw / self.params.p_r;
        let (p_fa, p_md) = match tau {
            Threshold::Infinite => (0.0, 1.0),
            Threshold::Finite(t) if t <= sigma2_w => (1.0, 0.0),
            Threshold::Finite(t) if t <= sigma2_w + signal => ((-scale * (t - sigma2_w)).exp(), 0.0),
            Threshold::Finite(t) => {
                let phi1 = (-scale * (t - sigma2_w)).exp();
                // 1 − φ₂
                let one_minus_phi2 = -(-scale * (t - sigma2_w - signal)).exp_m1();
                (phi1, one_minus_phi2)
            }
        };
        DetectionOutcome::new(q, p_fa, p_md)
    }

    /// Warden's error-minimising threshold; ties at the boundary prior go
    /// to `+∞`, where both branches give the same error.
    pub fn optimal_threshold(&self, q: f64, p_s: f64) -> Threshold {
        if q <= self.covertness_boundary(p_s) {
            Threshold::Infinite
        } else {
            Threshold::Finite(self.params.sigma2_w + p_s * self.params.h_sw_gain)
        }
    }

    /// `ξ*`: `q` below the boundary prior, `(1 − q) exp(−μ₂ Pₛ)` above it.
    pub fn min_detection_error(&self, q: f64, p_s: f64) -> f64 {
        self.detection_error(self.optimal_threshold(q, p_s), q, p_s).xi
    }

    /// Rate margin at `p = 1`: `R/(1 + μ₁Pₛ) · exp(−λ_sr β/Pₛ) − R_m`.
    pub fn wpcc_margin_f1(&self, p_s: f64, r_m: f64) -> f64 {
        self.max_prior(p_s) * self.params.rate * (-self.outage_exponent(p_s)).exp() - r_m
    }

    /// Best `ξ*` reachable at power `p_s` over admissible `p` in the
    /// wireless-powered system.
    pub fn wpcc_objective_f2(&self, p_s: f64, r_m: f64) -> f64 {
        let mu1_ps = self.coeff.mu1 * p_s;
        let mu2_ps = self.coeff.mu2 * p_s;
        let f4 = mu1_ps - mu2_ps.exp();
        if f4 > 0.0 {
            1.0 / (1.0 + mu1_ps)
        } else {
            let f3 = self.rate_floor_prior(p_s, r_m).max(self.covertness_boundary(p_s));
            (1.0 - f3) * (-mu2_ps).exp()
        }
    }

    /// Best `ξ*` reachable at power `p_s` over `q ∈ (0, 1]` in the
    /// cable-powered system.
    pub fn cpcc_objective_f5(&self, p_s: f64, r_m: f64) -> f64 {
        let f6 = self.rate_floor_prior(p_s, r_m);
        let f7 = self.covertness_boundary(p_s);
        if f6 >= f7 {
            (1.0 - f6) * (-self.coeff.mu2 * p_s).exp()
        } else {
            f7
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{dbm_to_watts, SystemParams};
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn reference() -> Scenario {
        Scenario::reference()
    }

    /// Scenario where μ₂ = 1 per watt and σ_w² = 1 W so test powers are O(1).
    fn unit_scenario() -> Scenario {
        let mut p = SystemParams::reference();
        p.p_r = 1.0;
        p.lambda_rw = 1.0;
        p.h_sw_gain = 1.0;
        p.sigma2_w = 1.0;
        Scenario::new(p).unwrap()
    }

    #[test]
    fn prior_examples() {
        let sc = reference();
        let ps = 1.0 / sc.coeff.mu1;
        assert!((sc.prior_transmit_probability(1.0, ps).unwrap() - 0.5).abs() < 1e-15);
        assert!((sc.prior_transmit_probability(0.5, ps).unwrap() - 0.25).abs() < 1e-15);
        assert!(sc.prior_transmit_probability(0.0, ps).is_err());
        assert!(sc.prior_transmit_probability(1.01, ps).is_err());
        assert!(sc.prior_transmit_probability(-0.2, ps).is_err());
    }

    #[test]
    fn outage_and_rate_examples() {
        let sc = reference();
        let ps = sc.outage_scale() / LN_2;
        assert!((sc.outage_probability(ps) - 0.5).abs() < 1e-15);
        assert!(sc.outage_probability(1e30) < 1e-25);
        assert!((sc.effective_covert_rate(1.0, ps) - 0.5).abs() < 1e-15);
        assert_eq!(sc.effective_covert_rate(0.0, 1e-3), 0.0);
        assert!((sc.effective_covert_rate(0.5, 1e30) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn detection_error_branches() {
        let sc = unit_scenario();
        let ps = 4f64.ln(); // μ₂ Pₛ = ln 4
        let q = 0.3;
        let low = sc.detection_error(Threshold::Finite(0.5), q, ps);
        assert_eq!((low.p_fa, low.p_md), (1.0, 0.0));
        assert!((low.xi - (1.0 - q)).abs() < 1e-15);

        let at_sigma = sc.detection_error(Threshold::Finite(1.0), q, ps);
        assert_eq!(at_sigma.p_fa, 1.0);

        let kink = sc.detection_error(Threshold::Finite(1.0 + ps), q, ps);
        assert_eq!(kink.p_md, 0.0);
        assert!((kink.xi - (1.0 - q) * 0.25).abs() < 1e-15);

        let inf = sc.detection_error(Threshold::Infinite, q, ps);
        assert_eq!((inf.p_fa, inf.p_md, inf.xi), (0.0, 1.0, q));

        // Third branch: P_MD = 1 − φ₂ adds to the false-alarm term.
        let t = 1.0 + ps + 0.7;
        let d = sc.detection_error(Threshold::Finite(t), q, ps);
        let phi1 = (-(t - 1.0)).exp();
        let phi2 = (-0.7f64).exp();
        assert!((d.xi - ((1.0 - q) * phi1 + q * (1.0 - phi2))).abs() < 1e-15);
    }

    #[test]
    fn optimal_threshold_examples() {
        let sc = unit_scenario();
        let ps = 4f64.ln(); // boundary prior 0.2
        assert_eq!(sc.optimal_threshold(0.1, ps), Threshold::Infinite);
        assert_eq!(sc.optimal_threshold(0.5, ps), Threshold::Finite(1.0 + ps));
        assert!((sc.covertness_boundary(ps) - 0.2).abs() < 1e-15);
        let q_tie = sc.covertness_boundary(ps);
        assert_eq!(sc.optimal_threshold(q_tie, ps), Threshold::Infinite);
        assert!((sc.min_detection_error(0.2, ps) - 0.2).abs() < 1e-15);
        assert!((sc.min_detection_error(0.5, ps) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn min_error_matches_both_closed_branches() {
        let sc = reference();
        for &ps in &[1e-6, 1e-4, dbm_to_watts(5.0), 0.5] {
            for i in 1..100 {
                let q = i as f64 / 100.0;
                let b = sc.covertness_boundary(ps);
                let closed = if q <= b { q } else { (1.0 - q) * (-sc.coeff.mu2 * ps).exp() };
                assert!((sc.min_detection_error(q, ps) - closed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn f1_examples() {
        let sc = reference();
        for ps in [1e-5, 1e-3, 1.0, 1e3] {
            assert!(sc.wpcc_margin_f1(ps, 0.0) > 0.0);
        }
        let mu3 = sc.coeff.mu3;
        let peak = sc.wpcc_margin_f1(mu3, 0.0);
        assert_eq!(sc.wpcc_margin_f1(mu3, peak), 0.0);
        assert!((sc.wpcc_margin_f1(1e-12, 0.3) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn f1_is_unimodal_with_peak_at_mu3() {
        for pr_dbm in [10.0, 30.0, 45.0] {
            let sc = Scenario::new(SystemParams::reference().with_p_r(dbm_to_watts(pr_dbm))).unwrap();
            let mu3 = sc.coeff.mu3;
            let grid: Vec<f64> = (0..400).map(|i| mu3 * 10f64.powf(-4.0 + 8.0 * i as f64 / 399.0)).collect();
            for w in grid.windows(2) {
                let d = sc.wpcc_margin_f1(w[1], 0.0) - sc.wpcc_margin_f1(w[0], 0.0);
                if w[1] <= mu3 {
                    assert!(d >= 0.0, "not increasing below mu3 at {}", w[0]);
                } else if w[0] >= mu3 {
                    assert!(d <= 0.0, "not decreasing above mu3 at {}", w[0]);
                }
            }
        }
    }

    #[test]
    fn f2_second_branch_and_small_rate_limit() {
        // μ₁ ≫ μ₂ so f₄ > 0 for moderate Pₛ.
        let mut p = SystemParams::reference();
        p.lambda_rs = 1e4;
        let sc = Scenario::new(p).unwrap();
        let ps = 1e-3;
        assert!(sc.coeff.mu1 * ps - (sc.coeff.mu2 * ps).exp() > 0.0);
        assert_eq!(sc.wpcc_objective_f2(ps, 0.1), 1.0 / (1.0 + sc.coeff.mu1 * ps));

        let sc = unit_scenario();
        let ps = 20.0;
        let f2 = sc.wpcc_objective_f2(ps, 0.0);
        let b = 1.0 / (1.0 + ps.exp());
        assert!((f2 - (1.0 - b) * (-ps).exp()).abs() < 1e-20);
    }

    #[test]
    fn f5_branch_continuity_and_limit() {
        let sc = reference();
        let r_m = 0.3;
        // Locate f₆ = f₇ by bisection on the sign change.
        let g = |ps: f64| sc.rate_floor_prior(ps, r_m) - sc.covertness_boundary(ps);
        let (mut a, mut b) = (1e-6, sc.params.p_max);
        assert!(g(a) > 0.0 && g(b) < 0.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m) > 0.0 {
                a = m
            } else {
                b = m
            }
        }
        let left = sc.cpcc_objective_f5(a, r_m);
        let right = sc.cpcc_objective_f5(b, r_m);
        assert!((left - right).abs() < 1e-12);
        assert!((right - sc.covertness_boundary(b)).abs() < 1e-15);

        let tiny = sc.cpcc_objective_f5(1e-15, 0.0);
        assert!((tiny - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rate_floor_prior_is_clamped_in_log_space() {
        let sc = reference();
        assert_eq!(sc.rate_floor_prior(1e-300, 0.5), 1.0);
        assert_eq!(sc.rate_floor_prior(1e-3, 0.0), 0.0);
        assert!(sc.wpcc_objective_f2(1e-300, 0.5).is_finite());
    }

    proptest! {
        #[test]
        fn prior_is_monotone_and_capped(
            p1 in 0.01f64..1.0, dp in 1e-3f64..0.5,
            ps in 1e-6f64..1e-2, dps in 1e-6f64..1e-2,
            pr_dbm in 0.0f64..50.0,
        ) {
            let sc = Scenario::new(SystemParams::reference().with_p_r(dbm_to_watts(pr_dbm))).unwrap();
            let p2 = (p1 + dp).min(1.0);
            prop_assume!(p2 > p1);
            let q1 = sc.prior_transmit_probability(p1, ps).unwrap();
            let q2 = sc.prior_transmit_probability(p2, ps).unwrap();
            prop_assert!(q2 > q1);
            prop_assert!(sc.prior_transmit_probability(p1, ps + dps).unwrap() < q1);
            prop_assert!(q1 < sc.max_prior(ps));
            prop_assert_eq!(sc.prior_transmit_probability(1.0, ps).unwrap(), sc.max_prior(ps));
            prop_assert!(q1 > 0.0 && q1 < 1.0);
        }

        #[test]
        fn min_error_range_and_grid_consistency(q in 0.0f64..=1.0, ps in 1e-7f64..1e-1, pr_dbm in 0.0f64..50.0) {
            let sc = Scenario::new(SystemParams::reference().with_p_r(dbm_to_watts(pr_dbm))).unwrap();
            let xi = sc.min_detection_error(q, ps);
            prop_assert!((0.0..=0.5).contains(&xi));
            let s2 = sc.params.sigma2_w;
            let kink = s2 + ps * sc.params.h_sw_gain;
            let exact = [Threshold::Finite(s2), Threshold::Finite(kink), Threshold::Infinite]
                .iter()
                .map(|&t| sc.detection_error(t, q, ps).xi)
                .fold(f64::INFINITY, f64::min);
            prop_assert!((exact - xi).abs() < 1e-15);
            for i in 0..64 {
                let t = s2 * 0.5 + (2.0 * kink) * i as f64 / 63.0;
                prop_assert!(sc.detection_error(Threshold::Finite(t), q, ps).xi >= xi - 1e-15);
            }
        }

        #[test]
        fn min_error_rises_then_falls_in_q(ps in 1e-6f64..1e-1) {
            let sc = reference();
            let b = sc.covertness_boundary(ps);
            let qs: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
            for w in qs.windows(2) {
                let d = sc.min_detection_error(w[1], ps) - sc.min_detection_error(w[0], ps);
                if w[1] <= b { prop_assert!(d >= 0.0); }
                if w[0] > b { prop_assert!(d <= 0.0); }
            }
        }

        #[test]
        fn covert_rate_never_exceeds_q_r(q in 0.0f64..=1.0, ps in 1e-9f64..10.0) {
            let sc = reference();
            prop_assert!(sc.effective_covert_rate(q, ps) <= q * sc.params.rate);
            prop_assert!(sc.effective_covert_rate(q, ps) >= 0.0);
        }
    }
}
