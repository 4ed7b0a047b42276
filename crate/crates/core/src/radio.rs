//! LoRa-style physical layer constants.
//!
//! Powers are kept in linear milliwatts everywhere inside the crate; the dB
//! forms only show up in the constructors and in [`ProfileAudit`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thermal noise density at room temperature, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// AWGN variance over a channel of `bandwidth_hz`, in milliwatts.
pub fn noise_variance(bandwidth_hz: f64, noise_figure_db: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(Error::Config(format!(
            "bandwidth must be positive, got {bandwidth_hz}"
        )));
    }
    Ok(dbm_to_mw(
        THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db,
    ))
}

/// Time on air of a `payload_bits` frame at spreading factor `sf`.
///
/// Each chirp carries `sf` bits and lasts `2^sf / bandwidth` seconds.
/// Fractional symbol counts are kept as is.
pub fn transmission_time(sf: u32, payload_bits: f64, bandwidth_hz: f64) -> f64 {
    debug_assert!(sf >= 1 && payload_bits > 0.0 && bandwidth_hz > 0.0);
    (payload_bits / f64::from(sf)) * (2f64.powi(sf as i32) / bandwidth_hz)
}

/// Minimum received power for demodulation: the noise floor raised by the
/// required SNR (a sum in the dB domain).
pub fn sensitivity_threshold(noise_mw: f64, demod_snr_db: f64) -> f64 {
    noise_mw * 10f64.powf(demod_snr_db / 10.0)
}

/// SX1272/73 demodulation SNR for spreading factors 6..=12.
pub fn default_demod_snr(sf: u32) -> Option<f64> {
    (6..=12)
        .contains(&sf)
        .then(|| -7.5 - 2.5 * (f64::from(sf) - 7.0))
}

/// User-facing inputs from which a [`RadioProfile`] is derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub bandwidth_hz: f64,
    pub sf_values: Vec<u32>,
    pub payload_bits: f64,
    pub noise_figure_db: f64,
    /// One entry per spreading factor; `None` picks the SX1272 table.
    pub demod_snr_db: Option<Vec<f64>>,
    pub p_min_dbm: f64,
    pub p_max_dbm: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            bandwidth_hz: 125_000.0,
            sf_values: (7..=12).collect(),
            payload_bits: 70.0,
            noise_figure_db: 6.0,
            demod_snr_db: None,
            p_min_dbm: 0.0,
            p_max_dbm: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadioProfile {
    params: RadioParams,
    noise_mw: f64,
    times_s: Vec<f64>,
    demod_snr_db: Vec<f64>,
    thresholds_mw: Vec<f64>,
    p_min_mw: f64,
    p_max_mw: f64,
}

impl RadioProfile {
    pub fn new(params: RadioParams) -> Result<Self> {
        if params.sf_values.is_empty() {
            return Err(Error::Config("at least one spreading factor is required".into()));
        }
        if let Some(&sf) = params.sf_values.iter().find(|&&sf| sf == 0 || sf > 30) {
            return Err(Error::Config(format!("spreading factor {sf} out of range")));
        }
        if !(params.payload_bits > 0.0) {
            return Err(Error::Config(format!(
                "payload_bits must be positive, got {}",
                params.payload_bits
            )));
        }
        if params.p_min_dbm > params.p_max_dbm {
            return Err(Error::Config(format!(
                "p_min ({} dBm) exceeds p_max ({} dBm)",
                params.p_min_dbm, params.p_max_dbm
            )));
        }
        let noise_mw = noise_variance(params.bandwidth_hz, params.noise_figure_db)?;

        let demod_snr_db = match &params.demod_snr_db {
            Some(v) if v.len() != params.sf_values.len() => {
                return Err(Error::Config(format!(
                    "{} demodulation SNR values given for {} spreading factors",
                    v.len(),
                    params.sf_values.len()
                )))
            }
            Some(v) => v.clone(),
            None => params
                .sf_values
                .iter()
                .map(|&sf| {
                    default_demod_snr(sf).ok_or_else(|| {
                        Error::Config(format!(
                            "no default demodulation SNR for SF{sf}; set demod_snr explicitly"
                        ))
                    })
                })
                .collect::<Result<_>>()?,
        };

        let times_s = params
            .sf_values
            .iter()
            .map(|&sf| transmission_time(sf, params.payload_bits, params.bandwidth_hz))
            .collect();
        let thresholds_mw = demod_snr_db
            .iter()
            .map(|&snr| sensitivity_threshold(noise_mw, snr))
            .collect();

        Ok(RadioProfile {
            p_min_mw: dbm_to_mw(params.p_min_dbm),
            p_max_mw: dbm_to_mw(params.p_max_dbm),
            params,
            noise_mw,
            times_s,
            demod_snr_db,
            thresholds_mw,
        })
    }

    /// The default LoRa profile: 125 kHz, SF 7..12, 70-bit payload, NF 6 dB,
    /// 0..20 dBm transmit power.
    pub fn lora_default() -> Self {
        RadioProfile::new(RadioParams::default()).expect("default profile is valid")
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.params.bandwidth_hz
    }

    /// Number of transmission times `F`.
    pub fn time_count(&self) -> usize {
        self.times_s.len()
    }

    pub fn sf_values(&self) -> &[u32] {
        &self.params.sf_values
    }

    pub fn noise_mw(&self) -> f64 {
        self.noise_mw
    }

    pub fn times_s(&self) -> &[f64] {
        &self.times_s
    }

    pub fn time_s(&self, f: usize) -> f64 {
        self.times_s[f]
    }

    pub fn demod_snr_db(&self) -> &[f64] {
        &self.demod_snr_db
    }

    pub fn thresholds_mw(&self) -> &[f64] {
        &self.thresholds_mw
    }

    pub fn threshold_mw(&self, f: usize) -> f64 {
        self.thresholds_mw[f]
    }

    pub fn p_min_mw(&self) -> f64 {
        self.p_min_mw
    }

    pub fn p_max_mw(&self) -> f64 {
        self.p_max_mw
    }

    pub fn audit(&self) -> ProfileAudit {
        ProfileAudit {
            bandwidth_hz: self.params.bandwidth_hz,
            noise_figure_db: self.params.noise_figure_db,
            payload_bits: self.params.payload_bits,
            noise_mw: self.noise_mw,
            noise_dbm: mw_to_dbm(self.noise_mw),
            p_min_mw: self.p_min_mw,
            p_max_mw: self.p_max_mw,
            rows: self
                .params
                .sf_values
                .iter()
                .enumerate()
                .map(|(f, &sf)| AuditRow {
                    index: f + 1,
                    sf,
                    time_ms: self.times_s[f] * 1e3,
                    demod_snr_db: self.demod_snr_db[f],
                    threshold_mw: self.thresholds_mw[f],
                    threshold_dbm: mw_to_dbm(self.thresholds_mw[f]),
                })
                .collect(),
        }
    }
}

impl Default for RadioProfile {
    fn default() -> Self {
        RadioProfile::lora_default()
    }
}

/// Derived constants, as printed by `noma-lpwa print-profile`.
#[derive(Clone, Debug, Serialize)]
pub struct ProfileAudit {
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub payload_bits: f64,
    pub noise_mw: f64,
    pub noise_dbm: f64,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    pub rows: Vec<AuditRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditRow {
    /// 1-based time index `f`.
    pub index: usize,
    pub sf: u32,
    pub time_ms: f64,
    pub demod_snr_db: f64,
    pub threshold_mw: f64,
    pub threshold_dbm: f64,
}

impl std::fmt::Display for ProfileAudit {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(out, "bandwidth_hz     {:.3}", self.bandwidth_hz)?;
        writeln!(out, "noise_figure_db  {:.3}", self.noise_figure_db)?;
        writeln!(out, "payload_bits     {}", self.payload_bits)?;
        writeln!(out, "noise_dbm        {:.6}", self.noise_dbm)?;
        writeln!(out, "noise_mw         {:.9e}", self.noise_mw)?;
        writeln!(out, "p_min_mw         {:.9e}", self.p_min_mw)?;
        writeln!(out, "p_max_mw         {:.9e}", self.p_max_mw)?;
        writeln!(
            out,
            "{:>3} {:>4} {:>14} {:>14} {:>17} {:>15}",
            "f", "sf", "time_ms", "demod_snr_db", "threshold_mw", "threshold_dbm"
        )?;
        for row in &self.rows {
            writeln!(
                out,
                "{:>3} {:>4} {:>14.6} {:>14.3} {:>17.9e} {:>15.6}",
                row.index, row.sf, row.time_ms, row.demod_snr_db, row.threshold_mw, row.threshold_dbm
            )?;
        }
        Ok(())
    }
}
