//! Covertness-maximising designs.
//!
//! Each solver maximises the warden's minimum detection error `ξ*` subject
//! to an effective covert rate floor `R_m` and the peak power `P_m`:
//!
//! * [`solve_wpcc`]: wireless-powered sensor, jointly over `Pₛ` and `p`;
//! * [`solve_wpcc_fixed_p1`]: same system with `p = 1` (plain ATT);
//! * [`solve_cpcc`]: cable-powered sensor, jointly over `Pₛ` and `q`;
//! * [`solve_cpcc_fixed_qhalf`]: cable-powered with `q = 1/2`.
//!
//! [`grid_oracle`] evaluates the same problems by exhaustive search and is
//! used only to cross-check the solvers. Infeasible problems return a
//! solution with every starred field set to zero.

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::Scenario;
use crate::error::Error;
use crate::numerics::{find_root, lambert_w0, maximize_on_interval, SearchOptions};

/// Smallest transmit power considered by any search, watts.
pub const PS_FLOOR: f64 = 1e-12;
/// Lower end of the oracle's log-spaced power grid, relative to `P_m`.
pub const ORACLE_SPAN: f64 = 1e-6;

const HALF_OPEN: f64 = 1e-9;
const EQUALITY_RTOL: f64 = 1e-9;
const ROOT_TOL: f64 = 1e-13;
const S2_SEARCH_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Wpcc,
    WpccP1,
    Cpcc,
    CpccQhalf,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Wpcc, Mode::WpccP1, Mode::Cpcc, Mode::CpccQhalf];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Wpcc => "wpcc",
            Mode::WpccP1 => "wpcc-p1",
            Mode::Cpcc => "cpcc",
            Mode::CpccQhalf => "cpcc-qhalf",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown mode `{s}` (expected wpcc, wpcc-p1, cpcc or cpcc-qhalf)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WpccSolution {
    pub feasible: bool,
    pub p_s_star: f64,
    pub p_star: f64,
    pub q_star: f64,
    pub xi_star: f64,
    pub r_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CpccSolution {
    pub feasible: bool,
    pub p_s_star: f64,
    pub q_star: f64,
    pub xi_star: f64,
    pub r_c: f64,
}

/// Mode-independent view of a design: `prob_star` is `p*` for the
/// wireless-powered modes and `q*` for the cable-powered ones.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DesignSolution {
    pub feasible: bool,
    pub p_s_star: f64,
    pub prob_star: f64,
    pub q_star: f64,
    pub xi_star: f64,
    pub r_c: f64,
}

impl From<WpccSolution> for DesignSolution {
    fn from(s: WpccSolution) -> Self {
        DesignSolution {
            feasible: s.feasible,
            p_s_star: s.p_s_star,
            prob_star: s.p_star,
            q_star: s.q_star,
            xi_star: s.xi_star,
            r_c: s.r_c,
        }
    }
}

impl From<CpccSolution> for DesignSolution {
    fn from(s: CpccSolution) -> Self {
        DesignSolution {
            feasible: s.feasible,
            p_s_star: s.p_s_star,
            prob_star: s.q_star,
            q_star: s.q_star,
            xi_star: s.xi_star,
            r_c: s.r_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// `min(μ₃, P_m)`, where the `p = 1` covert rate peaks within the power cap.
    pub kappa1: f64,
    /// Largest achievable effective covert rate.
    pub bound: f64,
}

pub fn wpcc_feasibility(sc: &Scenario, r_m: f64) -> Feasibility {
    let kappa1 = sc.coeff.mu3.min(sc.params.p_max);
    let bound = sc.wpcc_margin_f1(kappa1, 0.0);
    Feasibility {
        feasible: r_m <= bound,
        kappa1,
        bound,
    }
}

/// Largest rate floor the cable-powered system can meet: `R exp(−λ_sr β / P_m)`.
pub fn cpcc_rate_bound(sc: &Scenario) -> f64 {
    sc.effective_covert_rate(1.0, sc.params.p_max)
}

/// Largest rate floor the `q = 1/2` baseline can meet.
pub fn cpcc_qhalf_rate_bound(sc: &Scenario) -> f64 {
    sc.effective_covert_rate(0.5, sc.params.p_max)
}

/// The two roots `s₁ ≤ s₂` of the `p = 1` rate margin. `s₂` is `+∞` when
/// the margin stays non-negative up to the search cap, and `(0, ∞)` is
/// returned for a zero rate floor. `None` when the margin never reaches 0.
pub fn rate_roots(sc: &Scenario, r_m: f64) -> Option<(f64, f64)> {
    if r_m <= 0.0 {
        return Some((0.0, f64::INFINITY));
    }
    let f = |x: f64| sc.wpcc_margin_f1(x, r_m);
    let peak = sc.coeff.mu3;
    if f(peak) < 0.0 {
        return None;
    }
    let s1 = find_root(f, PS_FLOOR, peak, ROOT_TOL).ok()?;
    let cap = S2_SEARCH_CAP * sc.params.p_max.max(peak);
    let mut hi = 2.0 * peak;
    while f(hi) >= 0.0 {
        if hi >= cap {
            return Some((s1, f64::INFINITY));
        }
        hi = (hi * 2.0).min(cap);
    }
    let s2 = find_root(f, peak, hi, ROOT_TOL).ok()?;
    Some((s1, s2))
}

/// Root of `θ p² + p − 1 = 0` in `(0, 1]` for `θ ≥ 0`, in the form that
/// stays accurate as `θ → 0`.
fn unit_quadratic_root(theta: f64) -> f64 {
    let theta = theta.max(0.0);
    2.0 / (1.0 + (1.0 + 4.0 * theta).sqrt())
}

/// Optimal conditional prior at a fixed transmit power.
///
/// `p = 1` when full-rate transmission keeps the prior below the warden's
/// boundary (`exp(μ₂Pₛ) < μ₁Pₛ`); otherwise the larger of the `p` that puts
/// `q` on the boundary and the `p` that meets the rate floor with equality.
pub fn wpcc_optimal_p(sc: &Scenario, p_s: f64, r_m: f64) -> f64 {
    let Scenario { coeff, params } = sc;
    let theta1 = (coeff.mu2 * p_s).exp() - coeff.mu1 * p_s;
    if theta1 < 0.0 {
        return 1.0;
    }
    let ratio = coeff.mu2 / coeff.mu1;
    let on_boundary_root = ratio <= 1.0 / E
        && lambert_w0(-ratio)
            .map(|w| -w / coeff.mu2)
            .map(|x0| (p_s - x0).abs() <= EQUALITY_RTOL * x0)
            .unwrap_or(false);
    let kappa2 = if on_boundary_root { 1.0 } else { unit_quadratic_root(theta1) };

    let kappa3 = if r_m <= 0.0 {
        0.0
    } else {
        let reach = params.rate / r_m * (-sc.outage_scale() / p_s).exp();
        let theta2 = reach - coeff.mu1 * p_s - 1.0;
        if theta2.abs() <= EQUALITY_RTOL * reach {
            1.0
        } else {
            unit_quadratic_root(theta2)
        }
    };
    kappa2.max(kappa3).min(1.0)
}

/// Power maximising `ξ*` at `p = 1` when the rate floor is slack.
pub fn wpcc_p1_unconstrained_power(sc: &Scenario) -> f64 {
    let (mu1, mu2) = (sc.coeff.mu1, sc.coeff.mu2);
    if mu1 / mu2 <= E {
        2.0 / (mu2 * (1.0 + (1.0 + 4.0 * mu1 / mu2).sqrt()))
    } else {
        let w = lambert_w0(-mu2 / mu1).expect("-mu2/mu1 > -1/e when mu1/mu2 > e");
        -w / mu2
    }
}

fn wpcc_design(sc: &Scenario, p_s: f64, p: f64) -> WpccSolution {
    let q = sc
        .prior_transmit_probability(p, p_s)
        .expect("solver keeps p in (0, 1] and Ps > 0");
    WpccSolution {
        feasible: true,
        p_s_star: p_s,
        p_star: p,
        q_star: q,
        xi_star: sc.min_detection_error(q, p_s),
        r_c: sc.effective_covert_rate(q, p_s),
    }
}

fn cpcc_design(sc: &Scenario, p_s: f64, q: f64) -> CpccSolution {
    CpccSolution {
        feasible: true,
        p_s_star: p_s,
        q_star: q,
        xi_star: sc.min_detection_error(q, p_s),
        r_c: sc.effective_covert_rate(q, p_s),
    }
}

pub fn solve_wpcc(sc: &Scenario, r_m: f64) -> WpccSolution {
    solve_wpcc_with(sc, r_m, &SearchOptions::default())
}

pub fn solve_wpcc_with(sc: &Scenario, r_m: f64, opts: &SearchOptions) -> WpccSolution {
    if !wpcc_feasibility(sc, r_m).feasible {
        return WpccSolution::default();
    }
    let Some((s1, s2)) = rate_roots(sc, r_m) else {
        return WpccSolution::default();
    };
    let hi = s2.min(sc.params.p_max);
    let lo = if s1 > 0.0 { s1 * (1.0 + HALF_OPEN) } else { PS_FLOOR }.min(hi);
    let (p_s, _) = maximize_on_interval(|x| sc.wpcc_objective_f2(x, r_m), lo, hi, opts);
    wpcc_design(sc, p_s, wpcc_optimal_p(sc, p_s, r_m))
}

pub fn solve_wpcc_fixed_p1(sc: &Scenario, r_m: f64) -> WpccSolution {
    if !wpcc_feasibility(sc, r_m).feasible {
        return WpccSolution::default();
    }
    let Some((s1, s2)) = rate_roots(sc, r_m) else {
        return WpccSolution::default();
    };
    let kappa4 = wpcc_p1_unconstrained_power(sc);
    let p_s = s1.max(kappa4).min(s2.min(sc.params.p_max));
    wpcc_design(sc, p_s, 1.0)
}

pub fn solve_cpcc(sc: &Scenario, r_m: f64) -> CpccSolution {
    solve_cpcc_with(sc, r_m, &SearchOptions::default())
}

pub fn solve_cpcc_with(sc: &Scenario, r_m: f64, opts: &SearchOptions) -> CpccSolution {
    let p_max = sc.params.p_max;
    if r_m > cpcc_rate_bound(sc) {
        return CpccSolution::default();
    }
    // κ₅: power at which the rate floor needs q = 1.
    let kappa5 = if r_m > 0.0 {
        sc.outage_scale() / (sc.params.rate / r_m).ln()
    } else {
        0.0
    };
    let lo = kappa5.max(PS_FLOOR).min(p_max);
    let (p_s, _) = maximize_on_interval(|x| sc.cpcc_objective_f5(x, r_m), lo, p_max, opts);
    let q = sc.rate_floor_prior(p_s, r_m).max(sc.covertness_boundary(p_s));
    cpcc_design(sc, p_s, q)
}

pub fn solve_cpcc_fixed_qhalf(sc: &Scenario, r_m: f64) -> CpccSolution {
    solve_cpcc_fixed_qhalf_with(sc, r_m, &SearchOptions::default())
}

pub fn solve_cpcc_fixed_qhalf_with(sc: &Scenario, r_m: f64, opts: &SearchOptions) -> CpccSolution {
    let p_max = sc.params.p_max;
    if r_m > cpcc_qhalf_rate_bound(sc) {
        return CpccSolution::default();
    }
    let lo = if r_m > 0.0 {
        sc.outage_scale() / (sc.params.rate / (2.0 * r_m)).ln()
    } else {
        0.0
    };
    let lo = lo.max(PS_FLOOR).min(p_max);
    let (p_s, _) = maximize_on_interval(|x| sc.min_detection_error(0.5, x), lo, p_max, opts);
    cpcc_design(sc, p_s, 0.5)
}

pub fn solve(sc: &Scenario, mode: Mode, r_m: f64) -> DesignSolution {
    match mode {
        Mode::Wpcc => solve_wpcc(sc, r_m).into(),
        Mode::WpccP1 => solve_wpcc_fixed_p1(sc, r_m).into(),
        Mode::Cpcc => solve_cpcc(sc, r_m).into(),
        Mode::CpccQhalf => solve_cpcc_fixed_qhalf(sc, r_m).into(),
    }
}

/// Exhaustive search over a log-spaced power grid on `[P_m·10⁻⁶, P_m]`
/// and a uniform probability grid on `(0, 1]` that contains 1/2 and 1.
///
/// Points violating the rate floor are discarded. Ties resolve to the
/// smallest power, then the smallest probability, independent of how rows
/// are scheduled across threads.
pub fn grid_oracle(sc: &Scenario, r_m: f64, mode: Mode, n_ps: usize, n_prob: usize) -> DesignSolution {
    let n_ps = n_ps.max(2);
    let n_prob = n_prob.max(1);
    let p_max = sc.params.p_max;
    let log_lo = (p_max * ORACLE_SPAN).ln();
    let log_hi = p_max.ln();
    let power = |i: usize| {
        if i == n_ps - 1 {
            p_max
        } else {
            (log_lo + (log_hi - log_lo) * i as f64 / (n_ps - 1) as f64).exp()
        }
    };
    let probs: Vec<f64> = match mode {
        Mode::WpccP1 => vec![1.0],
        Mode::CpccQhalf => vec![0.5],
        Mode::Wpcc | Mode::Cpcc => {
            let mut v: Vec<f64> = (1..=n_prob).map(|j| j as f64 / n_prob as f64).collect();
            if n_prob % 2 == 1 {
                v.push(0.5);
                v.sort_by(f64::total_cmp);
            }
            v
        }
    };
    let to_q = |prob: f64, p_s: f64| match mode {
        Mode::Wpcc | Mode::WpccP1 => sc.prior_transmit_probability(prob, p_s).unwrap_or(0.0),
        Mode::Cpcc | Mode::CpccQhalf => prob,
    };

    let row_best: Vec<Option<(f64, usize)>> = (0..n_ps)
        .into_par_iter()
        .map(|i| {
            let p_s = power(i);
            let mut best: Option<(f64, usize)> = None;
            for (j, &prob) in probs.iter().enumerate() {
                let q = to_q(prob, p_s);
                if sc.effective_covert_rate(q, p_s) < r_m {
                    continue;
                }
                let xi = sc.min_detection_error(q, p_s);
                if best.is_none_or(|(b, _)| xi > b) {
                    best = Some((xi, j));
                }
            }
            best
        })
        .collect();

    let mut best: Option<(f64, usize, usize)> = None;
    for (i, row) in row_best.into_iter().enumerate() {
        if let Some((xi, j)) = row {
            if best.is_none_or(|(b, _, _)| xi > b) {
                best = Some((xi, i, j));
            }
        }
    }
    match best {
        None => DesignSolution::default(),
        Some((xi, i, j)) => {
            let p_s = power(i);
            let q = to_q(probs[j], p_s);
            DesignSolution {
                feasible: true,
                p_s_star: p_s,
                prob_star: probs[j],
                q_star: q,
                xi_star: xi,
                r_c: sc.effective_covert_rate(q, p_s),
            }
        }
    }
}
