//! Readout metrics: signal energy, inverse readout fidelity, and
//! magnetometric sensitivity, plus the drive optimizer used by the
//! parameter studies.
//!
//! The readout discriminates two candidate populations `p0` and `p0'` by
//! the quadrature energy their cavity responses accumulate at the output
//! port:
//!
//! ```text
//! S(t_r) = hbar omega_c kappa_c1 *
//!          | integral_0^{t_r} (Im^2[alpha_p0] - Im^2[alpha_p0']) / (p0 - p0') dtau |
//! ```
//!
//! The absolute value makes the signal independent of which population is
//! labeled primed. The inverse readout fidelity compares it against the
//! ensemble-scaled noise energy, `sigma_e(t) = sqrt(N L(t) / S(t))`, with
//! the noise evaluated at sideband offset `1/t`. Sensitivity folds in the
//! protocol timing overhead.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dispersive::solve_self_consistent;
use crate::error::{invalid, Error, Result};
use crate::model::{DriveParams, FullState, SystemParams};
use crate::noise::{noise_total, NoiseBudget, PhaseNoiseTable};
use crate::ode::{integrate, IntegratorConfig};
use crate::quad::cumtrapz;
use crate::HBAR;
use std::f64::consts::TAU;

/// Sensing sequence whose coherent evolution time bounds the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Ramsey,
    Echo,
}

/// How to obtain the cavity quadrature histories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Integrate the full equations of motion.
    FullOde,
    /// Self-consistent dispersive solution.
    Dispersive,
    /// Full dynamics close to resonance, dispersive beyond the crossover
    /// detuning (a configurable multiple of Gamma).
    Auto,
}

/// The mode actually used after resolving [`SolveMode::Auto`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolvedMode {
    FullOde,
    Dispersive,
}

impl ResolvedMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResolvedMode::FullOde => "full_ode",
            ResolvedMode::Dispersive => "dispersive",
        }
    }
}

/// Protocol-level definition of the readout: the population pair to
/// discriminate, the timing budget, and the sensing sequence constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// First candidate population.
    pub p0: f64,
    /// Second candidate population.
    pub p0_prime: f64,
    /// Readout window, s.
    pub t_read: f64,
    /// Initialization overhead per cycle, s.
    pub t_init: f64,
    /// Override for the sensing time; defaults to T2* (Ramsey) or T2 (echo).
    pub t_sense: Option<f64>,
    pub protocol: Protocol,
    /// Inhomogeneous dephasing time, s.
    pub t2_star: f64,
    /// Coherence time under echo, s.
    pub t2: f64,
    /// Electron gyromagnetic ratio, rad/(s T).
    pub gamma_e: f64,
}

impl ProtocolParams {
    /// Defaults tied to a parameter set: T2* = 2/Gamma and T2 = 10 T2*.
    /// The T2/T2* ratio of ten makes the echo sequence an order of
    /// magnitude more sensitive than Ramsey once overhead dominates the
    /// cycle, matching the intended operating picture.
    pub fn defaults_for(params: &SystemParams) -> Self {
        let t2_star = 2.0 / params.gamma;
        Self {
            p0: 0.2,
            p0_prime: 0.3,
            t_read: 1e-3,
            t_init: 1e-3,
            t_sense: None,
            protocol: Protocol::Ramsey,
            t2_star,
            t2: 10.0 * t2_star,
            gamma_e: TAU * 28.024e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p0", self.p0), ("p0_prime", self.p0_prime)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if self.p0 == self.p0_prime {
            return Err(Error::DegenerateDiscrimination);
        }
        for (name, v) in [
            ("t_read", self.t_read),
            ("t_init", self.t_init),
            ("t2_star", self.t2_star),
            ("t2", self.t2),
            ("gamma_e", self.gamma_e),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be strictly positive, got {v}")));
            }
        }
        if let Some(t) = self.t_sense {
            if !(t > 0.0) {
                return Err(invalid("t_sense", "must be strictly positive"));
            }
        }
        if self.t2_star > self.t2 {
            return Err(invalid("t2_star", "must not exceed t2"));
        }
        Ok(())
    }

    /// Sensing time for the configured protocol.
    pub fn sensing_time(&self) -> f64 {
        self.t_sense.unwrap_or(match self.protocol {
            Protocol::Ramsey => self.t2_star,
            Protocol::Echo => self.t2,
        })
    }

    pub fn with_t_read(&self, t_read: f64) -> Self {
        Self { t_read, ..*self }
    }

    pub fn with_protocol(&self, protocol: Protocol) -> Self {
        Self { protocol, ..*self }
    }
}

/// Numerical knobs shared by every metric evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutConfig {
    pub integrator: IntegratorConfig,
    /// Auto mode integrates the full dynamics below this multiple of Gamma.
    pub crossover_gamma: f64,
    /// Inversion entering the reflection coefficient of the phase-noise
    /// filter. The drive saturates the ensemble wherever phase noise
    /// competes with the thermal floor, so the saturated value 0 is the
    /// default; configurable for sensitivity studies of that choice.
    pub noise_inversion_w: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            crossover_gamma: 10.0,
            noise_inversion_w: 0.0,
        }
    }
}

impl ReadoutConfig {
    pub fn resolve_mode(&self, mode: SolveMode, params: &SystemParams) -> ResolvedMode {
        match mode {
            SolveMode::FullOde => ResolvedMode::FullOde,
            SolveMode::Dispersive => ResolvedMode::Dispersive,
            SolveMode::Auto => {
                if params.delta_s().abs() < self.crossover_gamma * params.gamma {
                    ResolvedMode::FullOde
                } else {
                    ResolvedMode::Dispersive
                }
            }
        }
    }
}

/// Everything a single readout evaluation produces: the signal and
/// fidelity histories on the dense grid plus the end-of-window summary.
#[derive(Debug, Clone)]
pub struct ReadoutEvaluation {
    pub times: Vec<f64>,
    /// Signal energy accumulated up to each grid time, J.
    pub signal_of_t: Vec<f64>,
    /// Ensemble noise energy N * L(t) at each grid time, J.
    pub noise_of_t: Vec<f64>,
    /// Inverse readout fidelity at each grid time (infinite where the
    /// signal has not yet accumulated).
    pub sigma_e_of_t: Vec<f64>,
    pub sigma_e_final: f64,
    /// True when sigma_e moved by less than 5% between t_read/2 and t_read.
    pub converged: bool,
    pub budget_final: NoiseBudget,
    pub mode: ResolvedMode,
}

/// Protocol summary: signal, inverse readout fidelity, sensitivity and the
/// noise budget at the end of the readout window.
#[derive(Debug, Clone, Copy)]
pub struct ReadoutResult {
    /// Signal energy S at t_read, J.
    pub signal: f64,
    pub sigma_e: f64,
    /// Sensitivity, T/sqrt(Hz).
    pub eta: f64,
    pub budget: NoiseBudget,
    pub mode: ResolvedMode,
}

/// Cavity quadrature histories for the two candidate populations.
pub fn quadrature_paths(
    proto: &ProtocolParams,
    params: &SystemParams,
    drive: &DriveParams,
    mode: SolveMode,
    cfg: &ReadoutConfig,
) -> Result<(Vec<f64>, Vec<C64>, Vec<C64>, ResolvedMode)> {
    proto.validate()?;
    params.validate()?;
    let resolved = cfg.resolve_mode(mode, params);
    match resolved {
        ResolvedMode::FullOde => {
            let run = |p0: f64| -> Result<_> {
                let traj = integrate(
                    params,
                    drive,
                    FullState::initial(p0)?,
                    proto.t_read,
                    &cfg.integrator,
                )?;
                Ok(traj)
            };
            let t1 = run(proto.p0)?;
            let t2 = run(proto.p0_prime)?;
            Ok((t1.times().to_vec(), t1.alpha(), t2.alpha(), resolved))
        }
        ResolvedMode::Dispersive => {
            let dt = cfg.integrator.dense_sample_dt;
            let (_, f1) = solve_self_consistent(proto.p0, params, drive, proto.t_read, dt)?;
            let (_, f2) =
                solve_self_consistent(proto.p0_prime, params, drive, proto.t_read, dt)?;
            Ok((f1.times, f1.alpha, f2.alpha, resolved))
        }
    }
}

/// Signal energy accumulated up to each grid time from two quadrature
/// histories (absolute value, so the labeling of the pair is irrelevant).
pub fn signal_curve(
    times: &[f64],
    alpha_p0: &[C64],
    alpha_p0_prime: &[C64],
    proto: &ProtocolParams,
    params: &SystemParams,
) -> Result<Vec<f64>> {
    if times.len() != alpha_p0.len() || times.len() != alpha_p0_prime.len() {
        return Err(invalid("alpha", "history length mismatch"));
    }
    let dp = proto.p0 - proto.p0_prime;
    if dp == 0.0 {
        return Err(Error::DegenerateDiscrimination);
    }
    let prefactor = HBAR * params.omega_c * params.kappa_c1;
    let integrand: Vec<f64> = alpha_p0
        .iter()
        .zip(alpha_p0_prime)
        .map(|(a, b)| (a.im * a.im - b.im * b.im) / dp)
        .collect();
    Ok(cumtrapz(times, &integrand)
        .into_iter()
        .map(|v| prefactor * v.abs())
        .collect())
}

/// Signal energy at the end of the readout window.
pub fn signal_s(
    proto: &ProtocolParams,
    params: &SystemParams,
    drive: &DriveParams,
    mode: SolveMode,
    cfg: &ReadoutConfig,
) -> Result<f64> {
    let (times, a1, a2, _) = quadrature_paths(proto, params, drive, mode, cfg)?;
    let s = signal_curve(&times, &a1, &a2, proto, params)?;
    Ok(*s.last().unwrap())
}

/// Full fidelity evaluation over the readout window.
pub fn inverse_fidelity(
    proto: &ProtocolParams,
    params: &SystemParams,
    drive: &DriveParams,
    table: Option<&PhaseNoiseTable>,
    mode: SolveMode,
    cfg: &ReadoutConfig,
) -> Result<ReadoutEvaluation> {
    let (times, a1, a2, resolved) = quadrature_paths(proto, params, drive, mode, cfg)?;
    let signal_of_t = signal_curve(&times, &a1, &a2, proto, params)?;
    let s_max = signal_of_t.iter().cloned().fold(0.0, f64::max);
    if s_max == 0.0 {
        return Err(Error::EmptySignal {
            detail: format!(
                "no quadrature separation over [0, {:.3e}] s (g_s = {:.3e} rad/s, \
                 p0 = {}, p0' = {})",
                proto.t_read, params.g_s, proto.p0, proto.p0_prime
            ),
        });
    }

    let n_spins = params.n_spins;
    let mut noise_of_t = Vec::with_capacity(times.len());
    let mut sigma_e_of_t = Vec::with_capacity(times.len());
    let mut budget_final = NoiseBudget {
        l_th: 0.0,
        l_ph: 0.0,
        ratio_r: 1.0,
    };
    for (i, &t) in times.iter().enumerate() {
        if i == 0 {
            noise_of_t.push(f64::NAN);
            sigma_e_of_t.push(f64::INFINITY);
            continue;
        }
        let budget = noise_total(drive.power, t, table, params, cfg.noise_inversion_w)?;
        let nl = n_spins * budget.total();
        noise_of_t.push(nl);
        let s = signal_of_t[i];
        sigma_e_of_t.push(if s > 0.0 {
            (nl / s).sqrt()
        } else {
            f64::INFINITY
        });
        if i == times.len() - 1 {
            budget_final = budget;
        }
    }

    let sigma_e_final = *sigma_e_of_t.last().unwrap();
    if !sigma_e_final.is_finite() {
        return Err(Error::EmptySignal {
            detail: format!("signal still zero at t_read = {:.3e} s", proto.t_read),
        });
    }
    // Convergence: compare against the value half a window earlier.
    let half_idx = (times.len() - 1) / 2;
    let sigma_half = sigma_e_of_t[half_idx.max(1)];
    let converged = sigma_half.is_finite()
        && ((sigma_e_final - sigma_half) / sigma_e_final).abs() < 0.05;

    Ok(ReadoutEvaluation {
        times,
        signal_of_t,
        noise_of_t,
        sigma_e_of_t,
        sigma_e_final,
        converged,
        budget_final,
        mode: resolved,
    })
}

/// Sensitivity from an already-computed inverse readout fidelity:
/// `eta = sigma_e / (gamma_e sqrt(N T)) * sqrt(t_f / T)` with
/// `t_f = t_init + T + t_read`.
pub fn sensitivity(proto: &ProtocolParams, sigma_e: f64, params: &SystemParams) -> Result<f64> {
    proto.validate()?;
    if !(sigma_e > 0.0) || !sigma_e.is_finite() {
        return Err(invalid("sigma_e", "must be positive and finite"));
    }
    let t_sense = proto.sensing_time();
    let t_f = proto.t_init + t_sense + proto.t_read;
    Ok(sigma_e / (proto.gamma_e * (params.n_spins * t_sense).sqrt()) * (t_f / t_sense).sqrt())
}

/// One-call protocol summary.
pub fn evaluate(
    proto: &ProtocolParams,
    params: &SystemParams,
    drive: &DriveParams,
    table: Option<&PhaseNoiseTable>,
    mode: SolveMode,
    cfg: &ReadoutConfig,
) -> Result<ReadoutResult> {
    let eval = inverse_fidelity(proto, params, drive, table, mode, cfg)?;
    let eta = sensitivity(proto, eval.sigma_e_final, params)?;
    Ok(ReadoutResult {
        signal: *eval.signal_of_t.last().unwrap(),
        sigma_e: eval.sigma_e_final,
        eta,
        budget: eval.budget_final,
        mode: eval.mode,
    })
}

/// Search rectangle for [`optimize_drive`], log-spaced on both axes.
/// Equal bounds collapse an axis to a single evaluated point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeBounds {
    /// Power range, W.
    pub power_w: (f64, f64),
    pub power_points: usize,
    /// Spin-drive detuning range, rad/s; `None` keeps the detuning fixed.
    pub detuning: Option<(f64, f64)>,
    pub detuning_points: usize,
}

impl OptimizeBounds {
    pub fn power_only(min_w: f64, max_w: f64, points: usize) -> Self {
        Self {
            power_w: (min_w, max_w),
            power_points: points,
            detuning: None,
            detuning_points: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.power_w;
        if !(lo > 0.0) || !(hi >= lo) {
            return Err(invalid("power_w", "need 0 < min <= max"));
        }
        if self.power_points == 0 {
            return Err(invalid("power_points", "must be at least 1"));
        }
        if let Some((lo, hi)) = self.detuning {
            if !(lo > 0.0) || !(hi >= lo) {
                return Err(invalid("detuning", "need 0 < min <= max"));
            }
            if self.detuning_points == 0 {
                return Err(invalid("detuning_points", "must be at least 1"));
            }
        }
        Ok(())
    }
}

/// One evaluated point of the optimizer's coarse scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanPoint {
    pub power_w: f64,
    pub detuning: f64,
    /// Inverse readout fidelity, NaN when the evaluation failed.
    pub sigma_e: f64,
}

/// Result of a drive optimization.
#[derive(Debug, Clone)]
pub struct DriveOptimum {
    pub power_w: f64,
    pub detuning: f64,
    pub sigma_e: f64,
    /// The coarse scan, axis-major (power fastest), for plotting.
    pub scan: Vec<ScanPoint>,
    /// Set when the optimum sits on a search boundary (bounds too tight).
    pub on_edge: bool,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Minimize the inverse readout fidelity over drive power (and optionally
/// spin-drive detuning): deterministic coarse log-grid scan, then
/// golden-section refinement along each axis in log space.
pub fn optimize_drive(
    proto: &ProtocolParams,
    params: &SystemParams,
    table: Option<&PhaseNoiseTable>,
    bounds: &OptimizeBounds,
    mode: SolveMode,
    cfg: &ReadoutConfig,
) -> Result<DriveOptimum> {
    bounds.validate()?;
    proto.validate()?;
    let powers = log_grid(bounds.power_w.0, bounds.power_w.1, bounds.power_points);
    let detunings = match bounds.detuning {
        Some((lo, hi)) => log_grid(lo, hi, bounds.detuning_points),
        None => vec![params.delta_s()],
    };

    let eval = |power: f64, delta_s: f64| -> f64 {
        let p = params.with_delta_s(delta_s);
        match DriveParams::from_power(power, p.omega_d)
            .and_then(|drive| inverse_fidelity(proto, &p, &drive, table, mode, cfg))
        {
            Ok(ev) => ev.sigma_e_final,
            Err(_) => f64::NAN,
        }
    };

    // Coarse scan, detuning-major, deterministic regardless of worker count.
    let cells: Vec<(usize, usize)> = (0..detunings.len())
        .flat_map(|j| (0..powers.len()).map(move |i| (j, i)))
        .collect();
    let scan: Vec<ScanPoint> = cells
        .par_iter()
        .map(|&(j, i)| ScanPoint {
            power_w: powers[i],
            detuning: detunings[j],
            sigma_e: eval(powers[i], detunings[j]),
        })
        .collect();

    let mut best: Option<(usize, ScanPoint)> = None;
    for (idx, pt) in scan.iter().enumerate() {
        if pt.sigma_e.is_finite() {
            let better = match &best {
                Some((_, b)) => pt.sigma_e < b.sigma_e,
                None => true,
            };
            if better {
                best = Some((idx, *pt));
            }
        }
    }
    let (best_idx, mut incumbent) = best.ok_or(Error::EmptySignal {
        detail: "every scan point failed to evaluate".into(),
    })?;
    let (bj, bi) = (best_idx / powers.len(), best_idx % powers.len());

    // Golden-section passes: power, detuning (if present), power again.
    let refine = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64, best_x: f64, best_v: f64| -> (f64, f64) {
        if lo >= hi {
            return (best_x, best_v);
        }
        golden_section_log(lo, hi, f, best_x, best_v)
    };

    let bracket = |grid: &[f64], k: usize| -> (f64, f64) {
        let lo = if k == 0 { grid[0] } else { grid[k - 1] };
        let hi = if k + 1 >= grid.len() {
            grid[grid.len() - 1]
        } else {
            grid[k + 1]
        };
        (lo, hi)
    };

    let (plo, phi_) = bracket(&powers, bi);
    let f_power = |p: f64| eval(p, incumbent.detuning);
    let (px, pv) = refine(plo, phi_, &f_power, incumbent.power_w, incumbent.sigma_e);
    incumbent.power_w = px;
    incumbent.sigma_e = pv;

    if detunings.len() > 1 {
        let (dlo, dhi) = bracket(&detunings, bj);
        let f_det = |d: f64| eval(incumbent.power_w, d);
        let (dx, dv) = refine(dlo, dhi, &f_det, incumbent.detuning, incumbent.sigma_e);
        incumbent.detuning = dx;
        incumbent.sigma_e = dv;

        let f_power2 = |p: f64| eval(p, incumbent.detuning);
        let (px2, pv2) = refine(plo, phi_, &f_power2, incumbent.power_w, incumbent.sigma_e);
        incumbent.power_w = px2;
        incumbent.sigma_e = pv2;
    }

    let edge_tol = 1e-3;
    let near = |x: f64, b: f64| (x.ln() - b.ln()).abs() < edge_tol;
    let on_edge = near(incumbent.power_w, bounds.power_w.0)
        || near(incumbent.power_w, bounds.power_w.1)
        || bounds
            .detuning
            .map(|(lo, hi)| near(incumbent.detuning, lo) || near(incumbent.detuning, hi))
            .unwrap_or(false);

    Ok(DriveOptimum {
        power_w: incumbent.power_w,
        detuning: incumbent.detuning,
        sigma_e: incumbent.sigma_e,
        scan,
        on_edge,
    })
}

/// Golden-section minimization in log space; keeps the starting incumbent
/// when nothing in the bracket beats it. NaN evaluations are treated as
/// worse than anything finite.
fn golden_section_log(
    lo: f64,
    hi: f64,
    f: &dyn Fn(f64) -> f64,
    best_x: f64,
    best_v: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let cmp = |v: f64, w: f64| -> bool { v.is_finite() && (!w.is_finite() || v < w) };

    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp());
    let mut fd = f(d.exp());
    let mut best = (best_x, best_v);
    for _ in 0..40 {
        if cmp(fc, best.1) {
            best = (c.exp(), fc);
        }
        if cmp(fd, best.1) {
            best = (d.exp(), fd);
        }
        if (b - a).abs() < 1e-3 {
            break;
        }
        if cmp(fc, fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp());
        }
    }
    best
}
