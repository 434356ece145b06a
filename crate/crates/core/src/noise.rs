//! Noise budget for the readout: thermal energy floor, drive phase noise
//! filtered by the hybrid-system reflection, and their ratio.
//!
//! Thermal noise is the Johnson-like floor `L_th = k_B T`. Phase noise rides
//! on the carrier: the single-sideband spectrum of the source (dBc/Hz,
//! tabulated against offset frequency) scales with carrier power and is
//! filtered by the one-port reflection coefficient of the cavity-spin
//! system before reaching the detector,
//!
//! ```text
//! L_ph = P * S_phi(f) * |Gamma_p(f)|^2,    f = 1 / t_meas,
//! ```
//!
//! with `S_phi = 2 * 10^(ssb/10)` the double-sideband phase spectral
//! density. Near critical coupling the carrier and its close-in sidebands
//! are absorbed (`Gamma_p ~ 0`), which is what keeps phase noise below the
//! thermal floor at low power.

use num_complex::Complex64 as C64;
use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::model::SystemParams;
use crate::K_BOLTZMANN;

/// Single-sideband phase-noise spectrum of the drive source, interpolated
/// linearly in (log offset, dBc/Hz) and clamped at the table edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNoiseTable {
    offsets_hz: Vec<f64>,
    ssb_dbc: Vec<f64>,
}

impl PhaseNoiseTable {
    pub fn new(offsets_hz: Vec<f64>, ssb_dbc: Vec<f64>) -> Result<Self> {
        if offsets_hz.len() != ssb_dbc.len() {
            return Err(Error::TableError {
                message: "offset and level columns differ in length".into(),
            });
        }
        if offsets_hz.len() < 2 {
            return Err(Error::TableError {
                message: "need at least two points".into(),
            });
        }
        if offsets_hz[0] <= 0.0 {
            return Err(Error::TableError {
                message: "offsets must be positive".into(),
            });
        }
        for w in offsets_hz.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::TableError {
                    message: "offsets must be strictly increasing".into(),
                });
            }
        }
        if ssb_dbc.iter().any(|v| !v.is_finite()) {
            return Err(Error::TableError {
                message: "levels must be finite".into(),
            });
        }
        Ok(Self {
            offsets_hz,
            ssb_dbc,
        })
    }

    /// Parse the two-column CSV format `offset_hz, ssb_dbc_per_hz`.
    /// Lines starting with `#` are comments; one optional header row is
    /// tolerated.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut offsets = Vec::new();
        let mut levels = Vec::new();
        let mut header_seen = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::TableError {
                        message: format!("line {}: expected two columns", lineno + 1),
                    })
                }
            };
            if cols.next().is_some() {
                return Err(Error::TableError {
                    message: format!("line {}: expected exactly two columns", lineno + 1),
                });
            }
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(f), Ok(v)) => {
                    offsets.push(f);
                    levels.push(v);
                }
                _ if !header_seen && offsets.is_empty() => {
                    header_seen = true;
                }
                _ => {
                    return Err(Error::TableError {
                        message: format!("line {}: cannot parse `{line}`", lineno + 1),
                    })
                }
            }
        }
        Self::new(offsets, levels)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::TableError {
            message: format!("{}: {e}", path.display()),
        })?;
        Self::from_csv_str(&text)
    }

    pub fn offsets_hz(&self) -> &[f64] {
        &self.offsets_hz
    }

    /// Single-sideband level at offset `f`, dBc/Hz. Queries outside the
    /// table clamp to the nearest endpoint.
    pub fn ssb_dbc(&self, f_hz: f64) -> f64 {
        let n = self.offsets_hz.len();
        if f_hz <= self.offsets_hz[0] {
            return self.ssb_dbc[0];
        }
        if f_hz >= self.offsets_hz[n - 1] {
            return self.ssb_dbc[n - 1];
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.offsets_hz[mid] <= f_hz {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = (f_hz.ln() - self.offsets_hz[lo].ln())
            / (self.offsets_hz[hi].ln() - self.offsets_hz[lo].ln());
        self.ssb_dbc[lo] + x * (self.ssb_dbc[hi] - self.ssb_dbc[lo])
    }

    /// Double-sideband phase spectral density, rad^2/Hz.
    pub fn s_phi(&self, f_hz: f64) -> f64 {
        2.0 * 10f64.powf(self.ssb_dbc(f_hz) / 10.0)
    }
}

/// Thermal and phase-noise energy contributions and their ratio
/// `R = sqrt(L_ph / L_th + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    /// Thermal noise energy, J.
    pub l_th: f64,
    /// Phase-noise energy equivalent, J.
    pub l_ph: f64,
    /// `sqrt(l_ph / l_th + 1)`, at least 1.
    pub ratio_r: f64,
}

impl NoiseBudget {
    /// Total noise energy used by the readout metrics.
    pub fn total(&self) -> f64 {
        self.l_th + self.l_ph
    }
}

/// Thermal noise floor `k_B T`.
pub fn thermal_noise(params: &SystemParams) -> Result<f64> {
    if !(params.temperature > 0.0) {
        return Err(invalid(
            "temperature",
            format!("must be strictly positive, got {}", params.temperature),
        ));
    }
    Ok(K_BOLTZMANN * params.temperature)
}

/// One-port reflection coefficient of the cavity-spin system for a sideband
/// at offset `+f` from the drive, with the spin susceptibility evaluated at
/// inversion `w`.
pub fn reflection_coeff(f_hz: f64, params: &SystemParams, inversion_w: f64) -> C64 {
    let i_omega = C64::new(0.0, TAU * f_hz);
    let spin = params.g_s * params.g_s * params.n_spins * inversion_w
        / (i_omega + C64::new(0.5 * params.gamma, params.delta_s()));
    let den = i_omega + C64::new(0.5 * params.kappa(), params.delta_c()) + spin;
    1.0 - params.kappa_c1 / den
}

/// Phase-noise energy equivalent at offset `f`:
/// `P * S_phi(f) * |Gamma_p(f)|^2`.
pub fn phase_noise(
    power: f64,
    f_hz: f64,
    table: &PhaseNoiseTable,
    params: &SystemParams,
    inversion_w: f64,
) -> Result<f64> {
    if !(power >= 0.0) || !power.is_finite() {
        return Err(invalid("power", "must be non-negative"));
    }
    if !(f_hz > 0.0) {
        return Err(invalid("f", "offset frequency must be positive"));
    }
    let gp = reflection_coeff(f_hz, params, inversion_w);
    Ok(power * table.s_phi(f_hz) * gp.norm_sqr())
}

/// Full noise budget at measurement time `t_meas`; the sideband offset is
/// the inverse measurement time. `table = None` disables phase noise
/// (thermal-only mode).
pub fn noise_total(
    power: f64,
    t_meas: f64,
    table: Option<&PhaseNoiseTable>,
    params: &SystemParams,
    inversion_w: f64,
) -> Result<NoiseBudget> {
    if !(t_meas > 0.0) {
        return Err(invalid("t_meas", "must be positive"));
    }
    let l_th = thermal_noise(params)?;
    let l_ph = match table {
        Some(table) => phase_noise(power, 1.0 / t_meas, table, params, inversion_w)?,
        None => 0.0,
    };
    Ok(NoiseBudget {
        l_th,
        l_ph,
        ratio_r: (l_ph / l_th + 1.0).sqrt(),
    })
}
