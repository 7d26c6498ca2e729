use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wpcc_core::config::dbm_to_watts;
use wpcc_core::simulator::{
    default_tau_grid, estimate_detection, estimate_outage, insufficient_gap_test, residual_distribution_test,
    scan_argmin, simulate_att, threshold_scan,
};
use wpcc_core::{Scenario, SystemParams, Threshold};

fn sim_scenario() -> Scenario {
    Scenario::new(SystemParams::reference().with_p_r(1.0)).unwrap()
}

#[test]
fn closed_form_prior_and_gap_mean_at_reference_instance() {
    let sc = sim_scenario();
    let p_s = dbm_to_watts(5.0);
    let p = 0.7;
    let s = simulate_att(&sc.params, p_s, p, 1_000_000, 42).unwrap();
    let q = sc.prior_transmit_probability(p, p_s).unwrap();
    let m = sc.coeff.mu1 * p_s + (1.0 - p) / (p * p);
    assert!(s.q_hat.contains(q), "q_hat {:?} vs {q}", s.q_hat);
    assert!(s.gap_mean_hat.contains(m), "gap {:?} vs {m}", s.gap_mean_hat);
}

#[test]
fn closed_form_prior_over_random_pairs() {
    let sc = sim_scenario();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut misses = Vec::new();
    for i in 0..10 {
        let p: f64 = rng.random_range(0.05..=1.0);
        let p_s = dbm_to_watts(rng.random_range(-10.0..10.0));
        let s = simulate_att(&sc.params, p_s, p, 1_000_000, 100 + i).unwrap();
        let q = sc.prior_transmit_probability(p, p_s).unwrap();
        if !s.q_hat.contains_99(q) {
            misses.push((p, p_s, s.q_hat.point, q));
        }
    }
    assert!(misses.len() <= 1, "{misses:?}");
}

#[test]
fn residual_law_at_reference_instance() {
    let sc = sim_scenario();
    let p_s = dbm_to_watts(5.0);
    let s = simulate_att(&sc.params, p_s, 0.7, 1_000_000, 42).unwrap();
    let samples = &s.residual_samples[..100_000.min(s.residual_samples.len())];
    assert!(samples.len() >= 100_000);
    let ks = wpcc_core::simulator::ks_exponential(samples, sc.coeff.lambda_e).unwrap();
    assert!(ks.passes(), "{ks:?}");
}

#[test]
fn residual_law_at_full_rate() {
    let sc = sim_scenario();
    let s = simulate_att(&sc.params, dbm_to_watts(5.0), 1.0, 1_000_000, 42).unwrap();
    let ks = residual_distribution_test(&s, &sc.coeff).unwrap();
    assert!(ks.n >= 100_000 && ks.passes(), "{ks:?}");
}

#[test]
fn gap_deciles_match_poisson_means() {
    let sc = sim_scenario();
    let p_s = dbm_to_watts(5.0);
    // Below the energy-balance rate the battery drifts upward and short gaps stop occurring.
    for p in [0.7, 0.9, 1.0] {
        let s = simulate_att(&sc.params, p_s, p, 2_000_000, 7).unwrap();
        let r = insufficient_gap_test(&s, p_s, &sc.params, &sc.coeff).unwrap();
        assert!(r.n >= 100_000, "p={p}: {}", r.n);
        assert_eq!(r.insufficient_bins(), 0);
        assert!(r.max_abs_z < 4.0, "p={p}: {r:?}");
    }
}

#[test]
fn energy_never_goes_negative() {
    let sc = sim_scenario();
    for p in [0.2, 0.6, 1.0] {
        let s = simulate_att(&sc.params, dbm_to_watts(3.0), p, 200_000, 4).unwrap();
        assert!(s.residual_samples.iter().all(|&r| r >= 0.0));
        assert!(s.insufficient_gap_samples.iter().all(|g| g.start_energy >= 0.0));
    }
}

#[test]
fn scan_overlay_and_argmin_above_boundary() {
    // Low receiver power makes the signal large against the jamming spread.
    let sc = Scenario::new(SystemParams::reference().with_p_r(dbm_to_watts(0.0))).unwrap();
    let p_s = dbm_to_watts(5.0);
    let q = 0.3;
    assert!(q > sc.covertness_boundary(p_s));
    let grid = default_tau_grid(&sc.params, p_s, 201);
    let scan = threshold_scan(&sc.params, p_s, q, &grid, 1_000_000, 42).unwrap();
    for pt in &scan {
        let exact = sc.detection_error(pt.tau, q, p_s).xi;
        assert!(
            (pt.estimate.xi.point - exact).abs() <= pt.estimate.xi.half_width_99(),
            "tau={} {:?} vs {exact}",
            pt.tau,
            pt.estimate.xi
        );
    }
    let best = scan_argmin(&scan).unwrap();
    let target = sc.params.sigma2_w + p_s * sc.params.h_sw_gain;
    let step = match (grid[0], grid[1]) {
        (Threshold::Finite(a), Threshold::Finite(b)) => b - a,
        _ => unreachable!(),
    };
    match scan[best].tau {
        Threshold::Finite(t) => assert!((t - target).abs() <= step * (1.0 + 1e-9), "{t} vs {target}"),
        Threshold::Infinite => panic!("argmin at infinity"),
    }
}

#[test]
fn scan_argmin_below_boundary_is_infinite() {
    let sc = Scenario::reference();
    let p_s = dbm_to_watts(0.0);
    let q = 0.2;
    assert!(q < sc.covertness_boundary(p_s));
    let grid = default_tau_grid(&sc.params, p_s, 201);
    let scan = threshold_scan(&sc.params, p_s, q, &grid, 1_000_000, 42).unwrap();
    assert_eq!(scan[scan_argmin(&scan).unwrap()].tau, Threshold::Infinite);
}

#[test]
fn detection_at_optimum() {
    let sc = Scenario::reference();
    let p_s = dbm_to_watts(0.0);
    let tau = sc.optimal_threshold(0.3, p_s);
    let est = estimate_detection(&sc.params, p_s, 0.3, tau, 1_000_000, 42).unwrap();
    assert!(est.xi.contains_99(sc.min_detection_error(0.3, p_s)));
}

#[test]
fn outage_matches_closed_form() {
    let sc = Scenario::reference();
    let p_s = dbm_to_watts(5.0);
    let est = estimate_outage(&sc.params, p_s, 1_000_000, 3).unwrap();
    assert!(est.contains_99(sc.outage_probability(p_s)), "{est:?}");
}

#[test]
fn matched_seed_monotonicity() {
    let sc = Scenario::new(SystemParams::reference().with_p_r(dbm_to_watts(30.0))).unwrap();
    let p_s = dbm_to_watts(0.0);
    let lo = simulate_att(&sc.params, p_s, 0.3, 1_000_000, 77).unwrap();
    let hi = simulate_att(&sc.params, p_s, 0.9, 1_000_000, 77).unwrap();
    assert!(hi.q_hat.point > lo.q_hat.point);
}
