//! Monte-Carlo oracles for the energy dynamics, the radiometer and the
//! outage event.
//!
//! Randomness comes from ChaCha8 streams keyed by `(seed, stream id)`. Work
//! is cut into fixed chunks of [`CHUNK`] slots or trials, and chunk `k`
//! always draws from its own stream, so results do not depend on how many
//! worker threads process the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::Threshold;
use crate::config::{Coefficients, Scenario, SystemParams};
use crate::error::{Error, Result};

pub const CHUNK: usize = 1 << 16;
pub const Z95: f64 = 1.959_963_984_540_054;
pub const Z99: f64 = 2.575_829_303_548_900_4;
/// Batches used for the batch-means intervals of correlated chain outputs.
pub const BATCHES: usize = 100;
/// Smallest sample accepted by the distribution tests.
pub const MIN_TEST_SAMPLES: usize = 1000;
/// Bins with fewer samples are reported but excluded from the gap test verdict.
pub const MIN_BIN_SAMPLES: usize = 30;

const DOMAIN_ATT: u64 = 1;
const DOMAIN_DETECTION: u64 = 2;
const DOMAIN_OUTAGE: u64 = 3;

fn chunk_rng(seed: u64, domain: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 48) | chunk as u64);
    rng
}

/// Uniform on `(0, 1]`.
fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -open_uniform(rng).ln() / rate
}

fn chunks(n: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(move |k| (k, CHUNK.min(n - k * CHUNK)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub point: f64,
    pub std_error: f64,
    pub half_width_95: f64,
    pub n: usize,
}

impl MonteCarloEstimate {
    pub fn from_std_error(point: f64, std_error: f64, n: usize) -> Self {
        MonteCarloEstimate {
            point,
            std_error,
            half_width_95: Z95 * std_error,
            n,
        }
    }

    /// Fraction `successes / n` with the normal-approximation binomial error.
    pub fn proportion(successes: u64, n: u64) -> Self {
        let nf = n.max(1) as f64;
        let p = successes as f64 / nf;
        Self::from_std_error(p, (p * (1.0 - p) / nf).sqrt(), n as usize)
    }

    /// Batch-means estimate over consecutive equal-size batches of `batch_means`.
    pub fn from_batch_means(point: f64, batch_means: &[f64], n: usize) -> Self {
        let b = batch_means.len();
        if b < 2 {
            return Self::from_std_error(point, f64::NAN, n);
        }
        let mean = batch_means.iter().sum::<f64>() / b as f64;
        let var = batch_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
        Self::from_std_error(point, (var / b as f64).sqrt(), n)
    }

    pub fn half_width_99(&self) -> f64 {
        Z99 * self.std_error
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.point).abs() <= self.half_width_95
    }

    pub fn contains_99(&self, x: f64) -> bool {
        (x - self.point).abs() <= self.half_width_99()
    }
}

/// Gap that began with too little energy: residual at its start and the
/// number of forced harvest slots minus one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub start_energy: f64,
    pub m_prime: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttStats {
    pub n_slots: usize,
    pub n_it_slots: usize,
    pub q_hat: MonteCarloEstimate,
    pub gap_mean_hat: MonteCarloEstimate,
    pub residual_samples: Vec<f64>,
    pub insufficient_gap_samples: Vec<GapSample>,
}

/// Slot-level simulation of probabilistic accumulate-then-transmit.
///
/// The battery starts empty and is unbounded. A slot is an IT slot when
/// the battery holds at least `PₛT` and a `p`-coin succeeds; otherwise the
/// sensor harvests `ηP_r|h_rs|²T` with a fresh exponential gain.
pub fn simulate_att(params: &SystemParams, p_s: f64, p: f64, n_slots: usize, seed: u64) -> Result<AttStats> {
    if n_slots == 0 {
        return Err(Error::Domain("n_slots must be >= 1".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("p must lie in (0, 1], got {p}")));
    }
    if !(p_s >= 0.0 && p_s.is_finite()) {
        return Err(Error::Domain(format!("Ps must be finite and >= 0, got {p_s}")));
    }
    let cost = p_s * params.slot_duration;
    let harvest_scale = params.eta * params.p_r * params.slot_duration;
    let batch_len = n_slots.div_ceil(BATCHES);

    let mut energy = 0.0f64;
    let mut n_it = 0usize;
    let mut batch_it = Vec::with_capacity(BATCHES);
    let mut it_in_batch = 0usize;
    let mut gaps = Vec::new();
    let mut residuals = Vec::new();
    let mut short_gaps = Vec::new();

    let mut seen_it = false;
    let mut gap = 0u64;
    // Set while a gap that began short of energy is still below PₛT.
    let mut short_start: Option<(f64, u32)> = None;

    let mut rng = chunk_rng(seed, DOMAIN_ATT, 0);
    for slot in 0..n_slots {
        if slot > 0 && slot % CHUNK == 0 {
            rng = chunk_rng(seed, DOMAIN_ATT, slot / CHUNK);
        }
        let transmit = energy >= cost && (p >= 1.0 || rng.random::<f64>() < p);
        if transmit {
            energy -= cost;
            n_it += 1;
            it_in_batch += 1;
            if seen_it {
                gaps.push(gap as f64);
            }
            seen_it = true;
            gap = 0;
            residuals.push(energy);
            short_start = (energy < cost).then_some((energy, 0));
        } else {
            energy += harvest_scale * exponential(&mut rng, params.lambda_rs);
            gap += 1;
            if let Some((start, forced)) = short_start.as_mut() {
                *forced += 1;
                if energy >= cost {
                    short_gaps.push(GapSample {
                        start_energy: *start,
                        m_prime: *forced - 1,
                    });
                    short_start = None;
                }
            }
        }
        if (slot + 1) % batch_len == 0 || slot + 1 == n_slots {
            let len = (slot % batch_len) + 1;
            batch_it.push(it_in_batch as f64 / len as f64);
            it_in_batch = 0;
        }
    }

    let q_point = n_it as f64 / n_slots as f64;
    // Batches of unequal length only arise for the trailing batch; dropping
    // it from the spread estimate keeps the batches exchangeable.
    let full = if n_slots % batch_len == 0 { batch_it.len() } else { batch_it.len() - 1 };
    let q_hat = MonteCarloEstimate::from_batch_means(q_point, &batch_it[..full], n_slots);

    let gap_mean_hat = if gaps.is_empty() {
        MonteCarloEstimate::from_std_error(f64::NAN, f64::NAN, 0)
    } else {
        let point = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let b = BATCHES.min(gaps.len());
        let per = gaps.len() / b;
        let means: Vec<f64> = (0..b)
            .map(|i| gaps[i * per..(i + 1) * per].iter().sum::<f64>() / per as f64)
            .collect();
        MonteCarloEstimate::from_batch_means(point, &means, gaps.len())
    };

    Ok(AttStats {
        n_slots,
        n_it_slots: n_it,
        q_hat,
        gap_mean_hat,
        residual_samples: residuals,
        insufficient_gap_samples: short_gaps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    pub statistic: f64,
    /// `1.63/√n`, the 1% critical value.
    pub critical_1pct: f64,
    pub n: usize,
}

impl KsReport {
    pub fn passes(&self) -> bool {
        self.statistic < self.critical_1pct
    }
}

/// Kolmogorov-Smirnov statistic of `samples` against Exponential(`rate`).
pub fn ks_exponential(samples: &[f64], rate: f64) -> Result<KsReport> {
    if samples.len() < MIN_TEST_SAMPLES {
        return Err(Error::SampleSize {
            required: MIN_TEST_SAMPLES,
            got: samples.len(),
        });
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = -(-rate * x).exp_m1();
            (cdf - i as f64 / n).max((i + 1) as f64 / n - cdf)
        })
        .fold(0.0, f64::max);
    Ok(KsReport {
        statistic,
        critical_1pct: 1.63 / n.sqrt(),
        n: xs.len(),
    })
}

/// KS test of the post-IT residual energies against Exponential(`λ_E`).
pub fn residual_distribution_test(stats: &AttStats, coeff: &Coefficients) -> Result<KsReport> {
    ks_exponential(&stats.residual_samples, coeff.lambda_e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBin {
    pub start_lo: f64,
    pub start_hi: f64,
    pub n: usize,
    pub mean_count: f64,
    pub mean_expected: f64,
    pub z: f64,
}

impl GapBin {
    pub fn sufficient(&self) -> bool {
        self.n >= MIN_BIN_SAMPLES
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub bins: Vec<GapBin>,
    /// Largest `|z|` over bins holding at least [`MIN_BIN_SAMPLES`] samples.
    pub max_abs_z: f64,
    pub n: usize,
}

impl GapReport {
    pub fn insufficient_bins(&self) -> usize {
        self.bins.iter().filter(|b| !b.sufficient()).count()
    }
}

/// Expected count of extra harvest slots for a gap starting at `start_energy`.
pub fn expected_m_prime(coeff: &Coefficients, p_s: f64, slot_duration: f64, start_energy: f64) -> f64 {
    (coeff.lambda_e * (p_s * slot_duration - start_energy)).max(0.0)
}

/// Compares `M′` counts with their Poisson means, grouped into deciles of
/// the starting residual. Each bin's `z` is the summed deviation over the
/// square root of the summed Poisson variance.
pub fn insufficient_gap_test(stats: &AttStats, p_s: f64, params: &SystemParams, coeff: &Coefficients) -> Result<GapReport> {
    let samples = &stats.insufficient_gap_samples;
    if samples.len() < MIN_TEST_SAMPLES {
        return Err(Error::SampleSize {
            required: MIN_TEST_SAMPLES,
            got: samples.len(),
        });
    }
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.start_energy.total_cmp(&b.start_energy));
    let n = sorted.len();
    let bins: Vec<GapBin> = (0..10)
        .map(|d| {
            let group = &sorted[d * n / 10..(d + 1) * n / 10];
            let mut count = 0.0;
            let mut expected = 0.0;
            for s in group {
                count += f64::from(s.m_prime);
                expected += expected_m_prime(coeff, p_s, params.slot_duration, s.start_energy);
            }
            let z = if expected > 0.0 {
                (count - expected) / expected.sqrt()
            } else if count == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            let len = group.len().max(1) as f64;
            GapBin {
                start_lo: group.first().map_or(f64::NAN, |s| s.start_energy),
                start_hi: group.last().map_or(f64::NAN, |s| s.start_energy),
                n: group.len(),
                mean_count: count / len,
                mean_expected: expected / len,
                z,
            }
        })
        .collect();
    let max_abs_z = bins
        .iter()
        .filter(|b| b.sufficient())
        .map(|b| b.z.abs())
        .fold(0.0, f64::max);
    Ok(GapReport { bins, max_abs_z, n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEstimate {
    pub q_hat: MonteCarloEstimate,
    pub p_fa: MonteCarloEstimate,
    pub p_md: MonteCarloEstimate,
    pub xi: MonteCarloEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub tau: Threshold,
    pub estimate: DetectionEstimate,
}

fn detection_estimate(n: u64, n_h1: u64, false_alarms: u64, misses: u64) -> DetectionEstimate {
    DetectionEstimate {
        q_hat: MonteCarloEstimate::proportion(n_h1, n),
        p_fa: MonteCarloEstimate::proportion(false_alarms, n - n_h1),
        p_md: MonteCarloEstimate::proportion(misses, n_h1),
        xi: MonteCarloEstimate::proportion(false_alarms + misses, n),
    }
}

fn check_detection_inputs(q: f64, n_trials: usize) -> Result<()> {
    if n_trials == 0 {
        return Err(Error::Domain("n_trials must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("q must lie in [0, 1], got {q}")));
    }
    Ok(())
}

/// Monte-Carlo radiometer at a single threshold.
pub fn estimate_detection(params: &SystemParams, p_s: f64, q: f64, tau: Threshold, n_trials: usize, seed: u64) -> Result<DetectionEstimate> {
    let scan = threshold_scan(params, p_s, q, &[tau], n_trials, seed)?;
    Ok(scan[0].estimate)
}

/// Radiometer errors at every threshold of `taus`, all evaluated on the
/// same trials. The warden decides `H₁` when `P_w > τ`.
pub fn threshold_scan(params: &SystemParams, p_s: f64, q: f64, taus: &[Threshold], n_trials: usize, seed: u64) -> Result<Vec<ScanPoint>> {
    check_detection_inputs(q, n_trials)?;
    let signal = p_s * params.h_sw_gain;
    let g = taus.len();

    let (n_h1, fa, md) = chunks(n_trials)
        .map(|(k, len)| {
            let mut rng = chunk_rng(seed, DOMAIN_DETECTION, k);
            let mut h0 = Vec::with_capacity(len);
            let mut h1 = Vec::with_capacity(len);
            for _ in 0..len {
                let active = rng.random::<f64>() < q;
                let p_w = params.p_r * exponential(&mut rng, params.lambda_rw) + params.sigma2_w;
                if active {
                    h1.push(p_w + signal);
                } else {
                    h0.push(p_w);
                }
            }
            h0.sort_by(f64::total_cmp);
            h1.sort_by(f64::total_cmp);
            let mut fa = vec![0u64; g];
            let mut md = vec![0u64; g];
            for (i, tau) in taus.iter().enumerate() {
                match *tau {
                    Threshold::Infinite => md[i] = h1.len() as u64,
                    Threshold::Finite(t) => {
                        fa[i] = (h0.len() - h0.partition_point(|&x| x <= t)) as u64;
                        md[i] = h1.partition_point(|&x| x <= t) as u64;
                    }
                }
            }
            (h1.len() as u64, fa, md)
        })
        .reduce(
            || (0, vec![0u64; g], vec![0u64; g]),
            |(a1, mut afa, mut amd), (b1, bfa, bmd)| {
                afa.iter_mut().zip(&bfa).for_each(|(x, y)| *x += y);
                amd.iter_mut().zip(&bmd).for_each(|(x, y)| *x += y);
                (a1 + b1, afa, amd)
            },
        );

    let n = n_trials as u64;
    Ok(taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| ScanPoint {
            tau,
            estimate: detection_estimate(n, n_h1, fa[i], md[i]),
        })
        .collect())
}

/// Index of the smallest `ξ̂` in a scan; ties go to the earliest point.
pub fn scan_argmin(scan: &[ScanPoint]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, pt) in scan.iter().enumerate() {
        if best.is_none_or(|(_, b)| pt.estimate.xi.point < b) {
            best = Some((i, pt.estimate.xi.point));
        }
    }
    best.map(|(i, _)| i)
}

/// Uniform grid of `n_finite` thresholds on `[σ_w²/2, 2(σ_w² + Pₛ|h_sw|²)]`
/// followed by `+∞`.
pub fn default_tau_grid(params: &SystemParams, p_s: f64, n_finite: usize) -> Vec<Threshold> {
    let lo = 0.5 * params.sigma2_w;
    let hi = 2.0 * (params.sigma2_w + p_s * params.h_sw_gain);
    let n = n_finite.max(2);
    (0..n)
        .map(|i| Threshold::Finite(if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }))
        .chain(std::iter::once(Threshold::Infinite))
        .collect()
}

/// Fraction of fading draws for which `log₂(1 + Pₛ|h_sr|²/(φP_r + σ_r²)) < R`.
pub fn estimate_outage(params: &SystemParams, p_s: f64, n_trials: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if n_trials == 0 {
        return Err(Error::Domain("n_trials must be >= 1".into()));
    }
    let noise = params.phi * params.p_r + params.sigma2_r;
    let outages: u64 = chunks(n_trials)
        .map(|(k, len)| {
            let mut rng = chunk_rng(seed, DOMAIN_OUTAGE, k);
            (0..len)
                .filter(|_| {
                    let h = exponential(&mut rng, params.lambda_sr);
                    (p_s * h / noise).ln_1p() / std::f64::consts::LN_2 < params.rate
                })
                .count() as u64
        })
        .sum();
    Ok(MonteCarloEstimate::proportion(outages, n_trials as u64))
}

/// Draws `n` Exponential(`rate`) samples on the simulator's streams; used to
/// calibrate [`ks_exponential`].
pub fn exponential_samples(rate: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(k, block)| {
        let mut rng = chunk_rng(seed, DOMAIN_OUTAGE + 1, k);
        block.iter_mut().for_each(|x| *x = exponential(&mut rng, rate));
    });
    out
}

impl Scenario {
    /// Energy-balance prior: the long-run IT fraction cannot exceed the
    /// average harvest divided by the per-slot cost.
    pub fn energy_balance_prior(&self, p: f64, p_s: f64) -> f64 {
        p.min(1.0 / (1.0 + self.coeff.mu1 * p_s))
    }
}
