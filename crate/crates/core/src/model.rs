//! Physical parameters, system state, and the semiclassical Maxwell-Bloch
//! equations of motion for a driven cavity coupled to a homogeneous spin
//! ensemble.
//!
//! The ensemble is treated as a single collective pair: the per-spin
//! coherence `s = <sigma->` and the excited-state population `p`. Together
//! with the coherent cavity amplitude `alpha = <a>` they obey
//!
//! ```text
//! d(alpha)/dt = -(i*Delta_c + kappa/2) alpha - i g_s N s + sqrt(kappa_c1) beta
//! d(s)/dt     = -(i*Delta_s + Gamma/2) s   - i g_s alpha (1 - 2p)
//! d(p)/dt     = -gamma_th (p - p_eq)       - 2 g_s Im[conj(alpha) s]
//! ```
//!
//! Sign convention: the relative sign of the coherence drive term is fixed
//! (once, here) such that adiabatic elimination of `s` yields a cavity pole
//! at `-kappa/2 + i chi (1-2p)` with `chi = g_s^2 N / Delta_s`, i.e. an
//! ensemble in its ground state pulls the cavity resonance away from the
//! spin transition (level repulsion). The population coupling then follows
//! from excitation-number conservation: the coherent part of `N dp/dt`
//! exactly balances the photon flux `-i g_s N s` feeds into the cavity.

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::quad::simpson_uniform;
use crate::HBAR;

/// Slack allowed on the population and coherence bounds before a trajectory
/// is rejected as unphysical. Adaptive integration keeps roundoff well below
/// this.
const STATE_BOUND_EPS: f64 = 1e-9;

/// All physical rates, frequencies, ensemble size and environment constants
/// in one validated record. Angular units (rad/s) throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Cavity resonance, rad/s.
    pub omega_c: f64,
    /// Spin transition, rad/s.
    pub omega_s: f64,
    /// Drive (probe), rad/s.
    pub omega_d: f64,
    /// Intrinsic cavity loss, rad/s.
    pub kappa_c: f64,
    /// External (port) coupling, rad/s.
    pub kappa_c1: f64,
    /// Spin decoherence rate, rad/s.
    pub gamma: f64,
    /// Thermal depolarization rate, 1/s.
    pub gamma_th: f64,
    /// Thermal-equilibrium excited-state population, in [0, 0.5].
    pub p_eq: f64,
    /// Single-spin coupling, rad/s.
    pub g_s: f64,
    /// Number of spins in the ensemble.
    pub n_spins: f64,
    /// Environment temperature, K.
    pub temperature: f64,
}

impl SystemParams {
    /// Validate every field constraint; returns the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 8] = [
            ("omega_c", self.omega_c),
            ("omega_s", self.omega_s),
            ("omega_d", self.omega_d),
            ("kappa_c", self.kappa_c),
            ("kappa_c1", self.kappa_c1),
            ("gamma", self.gamma),
            ("gamma_th", self.gamma_th),
            ("temperature", self.temperature),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be strictly positive, got {v}")));
            }
        }
        // g_s = 0 is allowed: it disables the coupling for bare-cavity
        // baselines and trivial limits.
        if !(self.g_s >= 0.0) || !self.g_s.is_finite() {
            return Err(invalid("g_s", format!("must be non-negative, got {}", self.g_s)));
        }
        if !(self.n_spins >= 1.0) {
            return Err(invalid(
                "n_spins",
                format!("must be at least 1, got {}", self.n_spins),
            ));
        }
        if !(0.0..=0.5).contains(&self.p_eq) {
            return Err(invalid(
                "p_eq",
                format!("must lie in [0, 0.5], got {}", self.p_eq),
            ));
        }
        Ok(())
    }

    /// Total cavity loss `kappa = kappa_c + kappa_c1`.
    pub fn kappa(&self) -> f64 {
        self.kappa_c + self.kappa_c1
    }

    /// Cavity-drive detuning `Delta_c = omega_c - omega_d`.
    pub fn delta_c(&self) -> f64 {
        self.omega_c - self.omega_d
    }

    /// Spin-drive detuning `Delta_s = omega_s - omega_d`.
    pub fn delta_s(&self) -> f64 {
        self.omega_s - self.omega_d
    }

    /// Collective coupling `g = g_s sqrt(N)`.
    pub fn g_collective(&self) -> f64 {
        self.g_s * self.n_spins.sqrt()
    }

    /// Bundle of derived quantities; see [`DerivedQuantities`].
    pub fn derived(&self) -> DerivedQuantities {
        derived_quantities(self)
    }

    /// Copy with the spin transition moved so that `Delta_s` takes the given
    /// value (drive and cavity untouched).
    pub fn with_delta_s(&self, delta_s: f64) -> Self {
        Self {
            omega_s: self.omega_d + delta_s,
            ..*self
        }
    }

    /// Copy with a different ensemble size.
    pub fn with_n_spins(&self, n: f64) -> Self {
        Self { n_spins: n, ..*self }
    }
}

/// Quantities derived from [`SystemParams`]: total loss, detunings,
/// collective coupling, cooperativity and the dispersive shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    pub kappa: f64,
    pub delta_c: f64,
    pub delta_s: f64,
    pub g_collective: f64,
    pub cooperativity: f64,
    g_s2_n: f64,
}

/// Compute the derived quantities for a parameter set.
pub fn derived_quantities(params: &SystemParams) -> DerivedQuantities {
    let kappa = params.kappa();
    let g = params.g_collective();
    DerivedQuantities {
        kappa,
        delta_c: params.delta_c(),
        delta_s: params.delta_s(),
        g_collective: g,
        cooperativity: 4.0 * g * g / (kappa * params.gamma),
        g_s2_n: params.g_s * params.g_s * params.n_spins,
    }
}

impl DerivedQuantities {
    /// Dispersive cavity shift `chi(w) = g_s^2 N w / Delta_s` for inversion
    /// `w = 1 - 2p`. Errors when the spin-drive detuning vanishes.
    pub fn chi(&self, inversion_w: f64) -> Result<f64> {
        if self.delta_s == 0.0 {
            return Err(Error::DegenerateDetuning);
        }
        Ok(self.g_s2_n * inversion_w / self.delta_s)
    }
}

/// Input drive: carrier power and the coherent input-field amplitude
/// `beta`, normalized so `|beta|^2` is the incident photon flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    /// Carrier power at the port, W.
    pub power: f64,
    /// Input field amplitude, sqrt(photons/s); `|beta|^2 hbar omega_d = P`.
    pub beta: C64,
}

impl DriveParams {
    /// Build from carrier power, with `beta` real and positive.
    pub fn from_power(power: f64, omega_d: f64) -> Result<Self> {
        if !(power >= 0.0) || !power.is_finite() {
            return Err(invalid("power", format!("must be non-negative, got {power}")));
        }
        if !(omega_d > 0.0) {
            return Err(invalid("omega_d", "must be strictly positive"));
        }
        Ok(Self {
            power,
            beta: C64::new((power / (HBAR * omega_d)).sqrt(), 0.0),
        })
    }

    /// Verify `|beta|^2 hbar omega_d == power` to relative tolerance 1e-12.
    pub fn validate(&self, omega_d: f64) -> Result<()> {
        let implied = self.beta.norm_sqr() * HBAR * omega_d;
        let scale = self.power.abs().max(implied.abs()).max(f64::MIN_POSITIVE);
        if (implied - self.power).abs() > 1e-12 * scale {
            return Err(invalid(
                "beta",
                format!(
                    "|beta|^2 hbar omega_d = {implied:.6e} W disagrees with power = {:.6e} W",
                    self.power
                ),
            ));
        }
        Ok(())
    }

    /// Copy with the drive phase rotated by `phi` radians (power unchanged).
    pub fn with_phase(&self, phi: f64) -> Self {
        Self {
            power: self.power,
            beta: self.beta * C64::from_polar(1.0, phi),
        }
    }
}

/// Instantaneous state of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState {
    /// Coherent cavity amplitude `<a>`.
    pub alpha: C64,
    /// Collective spin coherence per spin `<sigma->`.
    pub s: C64,
    /// Excited-state population, in [0, 1].
    pub p: f64,
}

impl FullState {
    /// Cavity empty, no coherence, population `p0`.
    pub fn initial(p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(invalid("p0", format!("must lie in [0, 1], got {p0}")));
        }
        Ok(Self {
            alpha: C64::new(0.0, 0.0),
            s: C64::new(0.0, 0.0),
            p: p0,
        })
    }

    /// Check the physicality bounds `p in [0, 1]`, `|s| <= 1/2`.
    pub fn check_bounds(&self) -> Result<()> {
        if !self.alpha.re.is_finite() || !self.alpha.im.is_finite() {
            return Err(invalid("alpha", "non-finite"));
        }
        if !self.s.re.is_finite() || !self.s.im.is_finite() {
            return Err(invalid("s", "non-finite"));
        }
        if !(-STATE_BOUND_EPS..=1.0 + STATE_BOUND_EPS).contains(&self.p) {
            return Err(invalid("p", format!("population {} outside [0, 1]", self.p)));
        }
        if self.s.norm() > 0.5 + STATE_BOUND_EPS {
            return Err(invalid(
                "s",
                format!("|s| = {} exceeds the coherence bound 1/2", self.s.norm()),
            ));
        }
        Ok(())
    }

    pub(crate) fn to_raw(self) -> [f64; 5] {
        [self.alpha.re, self.alpha.im, self.s.re, self.s.im, self.p]
    }

    pub(crate) fn from_raw(y: &[f64; 5]) -> Self {
        Self {
            alpha: C64::new(y[0], y[1]),
            s: C64::new(y[2], y[3]),
            p: y[4],
        }
    }
}

/// Time derivative of a [`FullState`]; plain data, not bound by the state
/// invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub d_alpha: C64,
    pub d_s: C64,
    pub d_p: f64,
}

/// Right-hand side of the Maxwell-Bloch system. Pure function of its inputs.
pub fn mb_rhs(state: &FullState, params: &SystemParams, drive: &DriveParams) -> StateDerivative {
    let raw = state.to_raw();
    let out = mb_rhs_raw(&raw, params, drive);
    StateDerivative {
        d_alpha: C64::new(out[0], out[1]),
        d_s: C64::new(out[2], out[3]),
        d_p: out[4],
    }
}

/// Same right-hand side on the flat layout `[alpha_re, alpha_im, s_re, s_im, p]`
/// used by the integrator. Kept allocation- and branch-free.
#[inline]
pub(crate) fn mb_rhs_raw(y: &[f64; 5], params: &SystemParams, drive: &DriveParams) -> [f64; 5] {
    let (a_re, a_im, s_re, s_im, p) = (y[0], y[1], y[2], y[3], y[4]);
    let half_kappa = 0.5 * params.kappa();
    let delta_c = params.delta_c();
    let delta_s = params.delta_s();
    let half_gamma = 0.5 * params.gamma;
    let gn = params.g_s * params.n_spins;
    let w = 1.0 - 2.0 * p;
    let drive_re = params.kappa_c1.sqrt() * drive.beta.re;
    let drive_im = params.kappa_c1.sqrt() * drive.beta.im;

    // d(alpha)/dt = -(i dc + k/2) a - i g_s N s + sqrt(kc1) beta
    let da_re = -half_kappa * a_re + delta_c * a_im + gn * s_im + drive_re;
    let da_im = -half_kappa * a_im - delta_c * a_re - gn * s_re + drive_im;

    // d(s)/dt = -(i ds + G/2) s - i g_s a w
    let ds_re = -half_gamma * s_re + delta_s * s_im + params.g_s * w * a_im;
    let ds_im = -half_gamma * s_im - delta_s * s_re - params.g_s * w * a_re;

    // d(p)/dt = -g_th (p - p_eq) - 2 g_s Im[conj(a) s]
    let im_as = a_re * s_im - a_im * s_re;
    let dp = -params.gamma_th * (p - params.p_eq) - 2.0 * params.g_s * im_as;

    [da_re, da_im, ds_re, ds_im, dp]
}

/// Densely sampled time history of a trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<FullState>,
    /// Exact right-hand-side values at the grid nodes, for Hermite
    /// interpolation between them.
    derivs: Vec<[f64; 5]>,
}

impl Trajectory {
    pub(crate) fn new(times: Vec<f64>, states: Vec<FullState>, derivs: Vec<[f64; 5]>) -> Self {
        debug_assert_eq!(times.len(), states.len());
        debug_assert_eq!(times.len(), derivs.len());
        Self {
            times,
            states,
            derivs,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[FullState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn alpha(&self) -> Vec<C64> {
        self.states.iter().map(|st| st.alpha).collect()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.states.iter().map(|st| st.p).collect()
    }

    pub(crate) fn deriv(&self, i: usize) -> &[f64; 5] {
        &self.derivs[i]
    }

    /// Verify the stored invariants: t0 = 0, strictly increasing times,
    /// every state within physical bounds.
    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(invalid("times", "trajectory is empty"));
        }
        if self.times[0] != 0.0 {
            return Err(invalid("times", "must start at t = 0"));
        }
        for w in self.times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(invalid("times", "must be strictly increasing"));
            }
        }
        for (i, st) in self.states.iter().enumerate() {
            st.check_bounds().map_err(|e| match e {
                Error::InvalidParam { field, message } => Error::InvalidParam {
                    field: format!("states[{i}].{field}"),
                    message,
                },
                other => other,
            })?;
        }
        Ok(())
    }
}

/// Residual of the photon-flux balance over a trajectory, relative to the
/// dominant flux scale. This is a bookkeeping check on the sign conventions
/// of [`mb_rhs`], not a physical observable: delivered input flux must equal
/// cavity loss plus coherent spin absorption plus the change in stored
/// photon number.
pub fn energy_flux_check(
    traj: &Trajectory,
    params: &SystemParams,
    drive: &DriveParams,
) -> f64 {
    let n = traj.len();
    if n < 2 {
        return 0.0;
    }
    let dt = traj.times()[1] - traj.times()[0];
    let sqrt_kc1 = params.kappa_c1.sqrt();
    let kappa = params.kappa();

    let mut delivered = Vec::with_capacity(n);
    let mut lost = Vec::with_capacity(n);
    let mut absorbed = Vec::with_capacity(n);
    for st in traj.states() {
        // d|a|^2/dt picks up 2 Re[conj(a) * sqrt(kc1) beta] from the drive.
        delivered.push(2.0 * sqrt_kc1 * (st.alpha.conj() * drive.beta).re);
        lost.push(kappa * st.alpha.norm_sqr());
        // Coherent part of N dp/dt.
        absorbed.push(-2.0 * params.g_s * params.n_spins * (st.alpha.conj() * st.s).im);
    }
    let in_flux = simpson_uniform(&delivered, dt);
    let out_flux = simpson_uniform(&lost, dt);
    let spin_flux = simpson_uniform(&absorbed, dt);
    let stored = traj.states()[n - 1].alpha.norm_sqr() - traj.states()[0].alpha.norm_sqr();

    let residual = in_flux - out_flux - spin_flux - stored;
    let scale = in_flux
        .abs()
        .max(out_flux.abs())
        .max(spin_flux.abs())
        .max(stored.abs())
        .max(f64::MIN_POSITIVE);
    residual.abs() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    pub(crate) fn reference_params() -> SystemParams {
        SystemParams {
            omega_c: TAU * 3.0e9,
            omega_s: TAU * (3.0e9 + 2.0e6),
            omega_d: TAU * 3.0e9,
            kappa_c: TAU * 130.0e3,
            kappa_c1: TAU * 130.0e3,
            gamma: TAU * 330.0e3,
            gamma_th: 200.0,
            p_eq: 0.5,
            g_s: TAU * 0.019,
            n_spins: 1.0e15,
            temperature: 300.0,
        }
    }

    #[test]
    fn collective_coupling_from_reference_values() {
        // g = g_s sqrt(N) with g_s = 2pi*0.019 and N = 1e15.
        let params = reference_params();
        let d = derived_quantities(&params);
        let expected = TAU * 0.019 * 1.0e15_f64.sqrt();
        assert!((d.g_collective - expected).abs() < 1e-6 * expected);
        // Printed to four significant figures this is 2pi * 6.008e5.
        assert!((d.g_collective / TAU - 6.008e5).abs() < 0.5e2);
    }

    #[test]
    fn dispersive_shift_at_2mhz() {
        let params = reference_params();
        let d = derived_quantities(&params);
        let chi = d.chi(1.0).unwrap();
        // chi = g^2 / Delta_s = (2pi 6.00833e5)^2 / (2pi 2e6)
        let expected = d.g_collective * d.g_collective / (TAU * 2.0e6);
        assert!((chi - expected).abs() < 1e-9 * expected);
        assert!((chi / TAU - 1.805e5).abs() < 0.5e2);
    }

    #[test]
    fn single_spin_identity() {
        let params = SystemParams {
            n_spins: 1.0,
            ..reference_params()
        };
        let d = derived_quantities(&params);
        assert_eq!(d.g_collective, params.g_s);
    }

    #[test]
    fn chi_errors_on_zero_detuning() {
        let mut params = reference_params();
        params.omega_s = params.omega_d;
        let d = derived_quantities(&params);
        assert_eq!(d.chi(1.0), Err(Error::DegenerateDetuning));
    }

    #[test]
    fn kappa_and_cooperativity() {
        let params = reference_params();
        let d = derived_quantities(&params);
        assert_eq!(d.kappa, params.kappa_c + params.kappa_c1);
        let g = d.g_collective;
        let expected = 4.0 * g * g / (d.kappa * params.gamma);
        assert!((d.cooperativity - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn drive_power_identity() {
        let params = reference_params();
        let drive = DriveParams::from_power(1.0e-3, params.omega_d).unwrap();
        drive.validate(params.omega_d).unwrap();
        assert!((drive.beta.norm_sqr() * HBAR * params.omega_d - 1.0e-3).abs() < 1e-15);
        // Phase rotation keeps the power identity.
        let rotated = drive.with_phase(1.234);
        rotated.validate(params.omega_d).unwrap();
    }

    #[test]
    fn rhs_decoupled_decaying_cavity() {
        // g_s = 0, beta = 0, alpha = 1, s = 0, p = p_eq: the cavity decays
        // at (i Delta_c + kappa/2) and nothing else moves.
        let mut params = reference_params();
        params.g_s = 0.0;
        params.omega_c = params.omega_d + TAU * 1.0e5;
        let drive = DriveParams::from_power(0.0, params.omega_d).unwrap();
        let state = FullState {
            alpha: C64::new(1.0, 0.0),
            s: C64::new(0.0, 0.0),
            p: params.p_eq,
        };
        let d = mb_rhs(&state, &params, &drive);
        let expected = -C64::new(0.5 * params.kappa(), params.delta_c());
        assert!((d.d_alpha - expected).norm() < 1e-12 * expected.norm());
        assert!(d.d_s.norm() < 1e-30);
        assert!(d.d_p.abs() < 1e-30);
    }

    #[test]
    fn rhs_bare_cavity_steady_state() {
        // On resonance the bare cavity settles at 2 sqrt(kc1) beta / kappa.
        let mut params = reference_params();
        params.g_s = 0.0;
        let drive = DriveParams::from_power(1.0e-6, params.omega_d).unwrap();
        let alpha_ss = 2.0 * params.kappa_c1.sqrt() * drive.beta / params.kappa();
        let state = FullState {
            alpha: alpha_ss,
            s: C64::new(0.0, 0.0),
            p: params.p_eq,
        };
        let d = mb_rhs(&state, &params, &drive);
        let scale = params.kappa() * alpha_ss.norm();
        assert!(d.d_alpha.norm() < 1e-12 * scale);
    }

    #[test]
    fn rhs_is_deterministic() {
        let params = reference_params();
        let drive = DriveParams::from_power(1.0e-5, params.omega_d).unwrap();
        let state = FullState {
            alpha: C64::new(321.5, -12.25),
            s: C64::new(0.01, -0.002),
            p: 0.3,
        };
        let a = mb_rhs(&state, &params, &drive);
        let b = mb_rhs(&state, &params, &drive);
        assert_eq!(a, b);
    }

    #[test]
    fn excitation_number_balance_in_rhs() {
        // Coherent exchange conserves photons + spin excitations:
        // 2 Re[conj(a) (-i g_s N s)] + N * (coherent dp/dt) = 0.
        let params = reference_params();
        let drive = DriveParams::from_power(0.0, params.omega_d).unwrap();
        let state = FullState {
            alpha: C64::new(1.0e3, -2.0e2),
            s: C64::new(0.2, 0.13),
            p: 0.25,
        };
        let d = mb_rhs(&state, &params, &drive);
        let gn = params.g_s * params.n_spins;
        // Exchange part of d|a|^2/dt, isolated by removing the cavity loss
        // (beta = 0, Delta_c contributes nothing to |a|^2).
        let exchange = 2.0 * (state.alpha.conj() * C64::new(0.0, -gn) * state.s).re;
        let d_photon =
            2.0 * (state.alpha.conj() * d.d_alpha).re + params.kappa() * state.alpha.norm_sqr();
        assert!((d_photon - exchange).abs() < 1e-9 * exchange.abs().max(1.0));
        // Coherent part of N dp/dt balances it exactly.
        let spin_gain = params.n_spins * (d.d_p + params.gamma_th * (state.p - params.p_eq));
        assert!((d_photon + spin_gain).abs() < 1e-9 * d_photon.abs().max(1.0));
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut params = reference_params();
        params.gamma = -1.0;
        let err = params.validate().unwrap_err();
        match err {
            Error::InvalidParam { field, .. } => assert_eq!(field, "gamma"),
            other => panic!("unexpected error {other:?}"),
        }
        let mut params = reference_params();
        params.p_eq = 0.7;
        assert!(params.validate().is_err());
        let mut params = reference_params();
        params.n_spins = 0.0;
        assert!(params.validate().is_err());
    }
}

#[cfg(test)]
pub(crate) use tests::reference_params;
