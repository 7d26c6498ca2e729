//! Experiment configuration and derived constants.
//!
//! Everything downstream of this module works in linear SI units (watts,
//! joules, seconds). Logarithmic units are accepted only by the config
//! parser and the conversion helpers below.
//!
//! The config format is a flat `key=value` document:
//!
//! ```text
//! # reference geometry
//! eta=0.8
//! slot_duration_s=1
//! rate_bps_hz=1
//! p_max_dbm=5
//! p_r_dbm=30
//! sigma2_r_dbm=-60
//! sigma2_w_dbm=-60
//! phi_db=-60
//! gain_db=12
//! freq_hz=470e6
//! dist_m=100
//! ref_dist_m=50
//! pathloss_exp=2.7
//! ```
//!
//! Channel statistics come either from the explicit keys `lambda_sr`,
//! `lambda_rs`, `lambda_rw`, `h_sw_gain` or from the path-loss keys. An
//! explicit key always wins over the path-loss value for that link.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

const SCALAR_KEYS: [&str; 8] = [
    "eta",
    "slot_duration_s",
    "rate_bps_hz",
    "p_max_dbm",
    "p_r_dbm",
    "sigma2_r_dbm",
    "sigma2_w_dbm",
    "phi_db",
];
const CHANNEL_KEYS: [&str; 4] = ["lambda_sr", "lambda_rs", "lambda_rw", "h_sw_gain"];
const PATHLOSS_KEYS: [&str; 5] = ["gain_db", "freq_hz", "dist_m", "ref_dist_m", "pathloss_exp"];

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts) + 30.0
}

/// Mean channel power gain `G·K²·(d/d₀)^(−α)` with `K = c/(4πf)`.
pub fn channel_mean_gain(gain_db: f64, freq: f64, dist: f64, ref_dist: f64, exponent: f64) -> f64 {
    let k = SPEED_OF_LIGHT / (4.0 * PI * freq);
    db_to_linear(gain_db) * k * k * (dist / ref_dist).powf(-exponent)
}

/// Physical parameters of one scenario, linear units.
///
/// `sigma2_r` is the receiver noise power; it is also the noise term inside
/// the outage threshold `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub eta: f64,
    pub slot_duration: f64,
    pub rate: f64,
    pub p_max: f64,
    pub p_r: f64,
    pub sigma2_r: f64,
    pub sigma2_w: f64,
    pub phi: f64,
    /// Inverse mean of `|h_sr|²`.
    pub lambda_sr: f64,
    /// Inverse mean of `|h_rs|²`.
    pub lambda_rs: f64,
    /// Inverse mean of `|h_rw|²`.
    pub lambda_rw: f64,
    /// Sensor-to-warden gain, known to the warden.
    pub h_sw_gain: f64,
}

impl SystemParams {
    /// The reference scenario: η = 0.8, T = 1 s, R = 1 bit/s/Hz,
    /// P_m = 5 dBm, P_r = 30 dBm, noise −60 dBm, φ = −60 dB and every link
    /// at 100 m with 12 dB antenna gain, 470 MHz, α = 2.7, d₀ = 50 m.
    pub fn reference() -> Self {
        let gain = channel_mean_gain(12.0, 470e6, 100.0, 50.0, 2.7);
        SystemParams {
            eta: 0.8,
            slot_duration: 1.0,
            rate: 1.0,
            p_max: dbm_to_watts(5.0),
            p_r: dbm_to_watts(30.0),
            sigma2_r: dbm_to_watts(-60.0),
            sigma2_w: dbm_to_watts(-60.0),
            phi: db_to_linear(-60.0),
            lambda_sr: 1.0 / gain,
            lambda_rs: 1.0 / gain,
            lambda_rw: 1.0 / gain,
            h_sw_gain: gain,
        }
    }

    pub fn with_p_r(mut self, p_r: f64) -> Self {
        self.p_r = p_r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |key: &str, value: f64, ok: bool, bound: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(Error::OutOfRange {
                    key: key.to_string(),
                    value,
                    bound,
                })
            }
        };
        let positive = |v: f64| v > 0.0 && v.is_finite();
        check("eta", self.eta, self.eta > 0.0 && self.eta < 1.0, "0 < eta < 1")?;
        check("phi", self.phi, (0.0..=1.0).contains(&self.phi), "0 <= phi <= 1")?;
        for (key, value) in [
            ("slot_duration", self.slot_duration),
            ("rate", self.rate),
            ("p_max", self.p_max),
            ("p_r", self.p_r),
            ("sigma2_r", self.sigma2_r),
            ("sigma2_w", self.sigma2_w),
            ("lambda_sr", self.lambda_sr),
            ("lambda_rs", self.lambda_rs),
            ("lambda_rw", self.lambda_rw),
            ("h_sw_gain", self.h_sw_gain),
        ] {
            check(key, value, positive(value), "finite and > 0")?;
        }
        Ok(())
    }
}

/// Parse a `key=value` configuration document.
pub fn load_params(text: &str) -> Result<SystemParams> {
    let mut values: HashMap<&str, f64> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Syntax {
            line: line_no,
            text: line.to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let known = SCALAR_KEYS
            .iter()
            .chain(CHANNEL_KEYS.iter())
            .chain(PATHLOSS_KEYS.iter())
            .find(|k| **k == key)
            .ok_or_else(|| Error::UnknownKey {
                line: line_no,
                key: key.to_string(),
            })?;
        let parsed: f64 = value.parse().map_err(|_| Error::InvalidNumber {
            key: key.to_string(),
            value: value.to_string(),
        })?;
        if !parsed.is_finite() {
            return Err(Error::InvalidNumber {
                key: key.to_string(),
                value: value.to_string(),
            });
        }
        if values.insert(known, parsed).is_some() {
            return Err(Error::DuplicateKey {
                line: line_no,
                key: key.to_string(),
            });
        }
    }

    let get = |key: &str| {
        values
            .get(key)
            .copied()
            .ok_or_else(|| Error::MissingKey(key.to_string()))
    };

    let pathloss_gain = if PATHLOSS_KEYS.iter().all(|k| values.contains_key(k)) {
        let positive = |key: &str| -> Result<f64> {
            let v = get(key)?;
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::OutOfRange {
                    key: key.to_string(),
                    value: v,
                    bound: "> 0",
                })
            }
        };
        Some(channel_mean_gain(
            get("gain_db")?,
            positive("freq_hz")?,
            positive("dist_m")?,
            positive("ref_dist_m")?,
            positive("pathloss_exp")?,
        ))
    } else {
        None
    };
    let channel = |key: &str, from_gain: fn(f64) -> f64| -> Result<f64> {
        match (values.get(key), pathloss_gain) {
            (Some(v), _) => Ok(*v),
            (None, Some(g)) => Ok(from_gain(g)),
            (None, None) => Err(Error::MissingKey(key.to_string())),
        }
    };

    let params = SystemParams {
        eta: get("eta")?,
        slot_duration: get("slot_duration_s")?,
        rate: get("rate_bps_hz")?,
        p_max: dbm_to_watts(get("p_max_dbm")?),
        p_r: dbm_to_watts(get("p_r_dbm")?),
        sigma2_r: dbm_to_watts(get("sigma2_r_dbm")?),
        sigma2_w: dbm_to_watts(get("sigma2_w_dbm")?),
        phi: db_to_linear(get("phi_db")?),
        lambda_sr: channel("lambda_sr", |g| 1.0 / g)?,
        lambda_rs: channel("lambda_rs", |g| 1.0 / g)?,
        lambda_rw: channel("lambda_rw", |g| 1.0 / g)?,
        h_sw_gain: channel("h_sw_gain", |g| g)?,
    };
    params.validate()?;
    Ok(params)
}

pub fn load_params_file(path: impl AsRef<Path>) -> Result<SystemParams> {
    load_params(&std::fs::read_to_string(path)?)
}

/// Constants shared by the closed forms and the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    /// λ_rs / (η P_r), per watt.
    pub mu1: f64,
    /// λ_rw |h_sw|² / P_r, per watt.
    pub mu2: f64,
    /// Transmit power maximising the p = 1 covert rate, watts.
    pub mu3: f64,
    /// (2^R − 1)(φ P_r + σ_r²), watts.
    pub beta: f64,
    /// Rate of the exponential harvested-energy law, per joule.
    pub lambda_e: f64,
}

pub fn derive_coefficients(params: &SystemParams) -> Coefficients {
    let mu1 = params.lambda_rs / (params.eta * params.p_r);
    let mu2 = params.lambda_rw * params.h_sw_gain / params.p_r;
    let beta = (2f64.powf(params.rate) - 1.0) * (params.phi * params.p_r + params.sigma2_r);
    let lb = params.lambda_sr * beta;
    let mu3 = 0.5 * lb * ((1.0 + 4.0 / (mu1 * lb)).sqrt() + 1.0);
    Coefficients {
        mu1,
        mu2,
        mu3,
        beta,
        lambda_e: mu1 / params.slot_duration,
    }
}

/// Validated parameters together with their derived coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub params: SystemParams,
    pub coeff: Coefficients,
}

impl Scenario {
    pub fn new(params: SystemParams) -> Result<Self> {
        params.validate()?;
        Ok(Scenario {
            params,
            coeff: derive_coefficients(&params),
        })
    }

    pub fn reference() -> Self {
        Self::new(SystemParams::reference()).expect("reference scenario is valid")
    }

    /// λ_sr β, the outage scale in watts.
    pub fn outage_scale(&self) -> f64 {
        self.params.lambda_sr * self.coeff.beta
    }
}
