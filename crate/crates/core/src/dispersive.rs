//! Analytic solution of the cavity field in the dispersive regime.
//!
//! For spin-drive detunings large against the linewidths the coherence
//! follows the slow variables adiabatically and the cavity amplitude becomes
//! a time-integrated response governed by the kernel
//!
//! ```text
//! A(t) = exp(-kappa/2 t + i chi0 * integral_0^t (1 - 2 p) dt'),
//! chi0 = g_s^2 N / Delta_s,
//! ```
//!
//! with the driven solution (empty cavity, drive on cavity resonance)
//!
//! ```text
//! alpha(t) = sqrt(kappa_c1) beta * integral_0^t A(t) / A(t') dt'.
//! ```
//!
//! The integrand decays into the past at kappa/2, so the field remembers
//! roughly one cavity lifetime of population history. The slow population
//! obeys a closed rate equation with the measurement-induced depolarization
//! rate obtained by substituting the adiabatic coherence into the population
//! equation of motion:
//!
//! ```text
//! dp/dt = -gamma_th (p - p_eq) - gamma_meas(t) (p - 1/2),
//! gamma_meas = 2 g_s^2 |alpha|^2 Gamma / (Delta_s^2 + (Gamma/2)^2).
//! ```
//!
//! `alpha` depends on the population history and vice versa; the two are
//! reconciled by fixed-point iteration in [`solve_self_consistent`].

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::model::{DriveParams, SystemParams};

/// Excited-state population sampled on a strictly increasing time grid
/// starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationPath {
    pub times: Vec<f64>,
    pub p: Vec<f64>,
}

impl PopulationPath {
    /// Constant population over a uniform grid.
    pub fn constant(p: f64, t_end: f64, n: usize) -> Self {
        let times = uniform_grid(t_end, n);
        Self {
            p: vec![p; times.len()],
            times,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.p.len() {
            return Err(invalid("p", "length mismatch with times"));
        }
        if self.times.len() < 2 {
            return Err(invalid("times", "need at least two samples"));
        }
        if self.times[0] != 0.0 {
            return Err(invalid("times", "must start at t = 0"));
        }
        for w in self.times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(invalid("times", "must be strictly increasing"));
            }
        }
        for &p in &self.p {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("p", format!("population {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("validated non-empty")
    }

    /// Linear interpolation of p at time `t` (clamped to the grid range).
    pub(crate) fn p_at(&self, t: f64) -> f64 {
        let times = &self.times;
        if t <= times[0] {
            return self.p[0];
        }
        if t >= *times.last().unwrap() {
            return *self.p.last().unwrap();
        }
        let mut lo = 0usize;
        let mut hi = times.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if times[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let f = (t - times[lo]) / (times[hi] - times[lo]);
        self.p[lo] + f * (self.p[hi] - self.p[lo])
    }

    /// Resample onto a grid refined by the given factor (linear in p).
    pub(crate) fn refined(&self, factor: usize) -> Self {
        let mut times = Vec::with_capacity((self.times.len() - 1) * factor + 1);
        let mut p = Vec::with_capacity((self.times.len() - 1) * factor + 1);
        for i in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            for k in 0..factor {
                let f = k as f64 / factor as f64;
                times.push(t0 + f * (t1 - t0));
                p.push(self.p[i] + f * (self.p[i + 1] - self.p[i]));
            }
        }
        times.push(*self.times.last().unwrap());
        p.push(*self.p.last().unwrap());
        Self { times, p }
    }
}

/// Cavity field sampled on the same kind of grid as [`PopulationPath`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPath {
    pub times: Vec<f64>,
    pub alpha: Vec<C64>,
}

impl FieldPath {
    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// Relative L2 distance to another field on the same grid.
    pub fn rel_l2_distance(&self, other: &FieldPath) -> f64 {
        debug_assert_eq!(self.alpha.len(), other.alpha.len());
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in self.alpha.iter().zip(&other.alpha) {
            num += (a - b).norm_sqr();
            den += b.norm_sqr();
        }
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    }
}

pub(crate) fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let dt = t_end / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { t_end } else { i as f64 * dt })
        .collect()
}

fn check_dispersive_preconditions(params: &SystemParams) -> Result<()> {
    params.validate()?;
    if params.delta_s() == 0.0 {
        return Err(Error::DegenerateDetuning);
    }
    // The analytic solution is derived for a drive on cavity resonance.
    if params.delta_c().abs() > 1e-9 * params.kappa() {
        return Err(invalid(
            "delta_c",
            "dispersive solution assumes the drive on cavity resonance (Delta_c = 0)",
        ));
    }
    Ok(())
}

/// Dispersive phase accumulated up to `t`: `chi0 * integral_0^t (1-2p) dt'`,
/// trapezoidal on the path grid with exact handling of the final partial
/// interval.
fn dispersive_phase(path: &PopulationPath, chi0: f64, t: f64) -> f64 {
    let times = &path.times;
    let mut acc = 0.0;
    let mut i = 0;
    while i + 1 < times.len() && times[i + 1] <= t {
        let w0 = 1.0 - 2.0 * path.p[i];
        let w1 = 1.0 - 2.0 * path.p[i + 1];
        acc += (times[i + 1] - times[i]) * 0.5 * (w0 + w1);
        i += 1;
    }
    if i + 1 < times.len() && t > times[i] {
        let w0 = 1.0 - 2.0 * path.p[i];
        let wt = 1.0 - 2.0 * path.p_at(t);
        acc += (t - times[i]) * 0.5 * (w0 + wt);
    }
    chi0 * acc
}

/// The integral kernel `A(t)`; `|A|` decays at `kappa/2` while the argument
/// tracks the accumulated dispersive phase.
pub fn kernel_a(path: &PopulationPath, params: &SystemParams, t: f64) -> Result<C64> {
    check_dispersive_preconditions(params)?;
    path.validate()?;
    if !(0.0..=path.end_time()).contains(&t) {
        return Err(Error::OutOfRange {
            what: "kernel time",
            value: t,
            min: 0.0,
            max: path.end_time(),
        });
    }
    let chi0 = params.g_s * params.g_s * params.n_spins / params.delta_s();
    let phase = dispersive_phase(path, chi0, t);
    Ok(C64::from_polar((-0.5 * params.kappa() * t).exp(), phase))
}

/// March the driven-field solution across one grid interval, treating the
/// inversion as constant at its interval average. Exact for piecewise
/// constant populations.
#[inline]
fn field_step(alpha: C64, drive_amp: C64, lambda: C64, dt: f64) -> C64 {
    let growth = (lambda * dt).exp();
    alpha * growth + drive_amp * (growth - 1.0) / lambda
}

/// Cavity field on the full path grid, assuming an empty cavity at t = 0.
pub fn alpha_dispersive_path(
    path: &PopulationPath,
    params: &SystemParams,
    drive: &DriveParams,
) -> Result<FieldPath> {
    check_dispersive_preconditions(params)?;
    path.validate()?;
    drive.validate(params.omega_d)?;
    let chi0 = params.g_s * params.g_s * params.n_spins / params.delta_s();
    let half_kappa = 0.5 * params.kappa();
    let drive_amp = params.kappa_c1.sqrt() * drive.beta;

    let mut alpha = Vec::with_capacity(path.times.len());
    let mut a = C64::new(0.0, 0.0);
    alpha.push(a);
    for i in 0..path.times.len() - 1 {
        let dt = path.times[i + 1] - path.times[i];
        let w_avg = 1.0 - (path.p[i] + path.p[i + 1]);
        let lambda = C64::new(-half_kappa, chi0 * w_avg);
        a = field_step(a, drive_amp, lambda, dt);
        alpha.push(a);
    }
    Ok(FieldPath {
        times: path.times.clone(),
        alpha,
    })
}

/// Cavity field at a single time, with the path grid refined until two
/// successive refinements agree to 1e-6 relative.
pub fn alpha_dispersive(
    path: &PopulationPath,
    params: &SystemParams,
    drive: &DriveParams,
    t: f64,
) -> Result<C64> {
    check_dispersive_preconditions(params)?;
    path.validate()?;
    if !(0.0..=path.end_time()).contains(&t) {
        return Err(Error::OutOfRange {
            what: "field time",
            value: t,
            min: 0.0,
            max: path.end_time(),
        });
    }
    if t == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }

    // Restrict to [0, t] so refinement effort is spent where it counts.
    let mut sub_times: Vec<f64> = path.times.iter().copied().take_while(|&u| u < t).collect();
    let mut sub_p: Vec<f64> = sub_times.iter().map(|&u| path.p_at(u)).collect();
    sub_times.push(t);
    sub_p.push(path.p_at(t));
    let base = PopulationPath {
        times: sub_times,
        p: sub_p,
    };

    let eval = |p: &PopulationPath| -> Result<C64> {
        Ok(*alpha_dispersive_path(p, params, drive)?
            .alpha
            .last()
            .unwrap())
    };
    let mut prev = eval(&base)?;
    let mut factor = 2usize;
    for _ in 0..8 {
        let fine = base.refined(factor);
        let cur = eval(&fine)?;
        if (cur - prev).norm() <= 1e-6 * cur.norm().max(f64::MIN_POSITIVE) {
            return Ok(cur);
        }
        prev = cur;
        factor *= 2;
    }
    Ok(prev)
}

/// Measurement-induced depolarization rate for a given field amplitude.
#[inline]
fn gamma_meas(alpha_sq: f64, params: &SystemParams, delta_s: f64) -> f64 {
    let half_gamma = 0.5 * params.gamma;
    2.0 * params.g_s * params.g_s * alpha_sq * params.gamma
        / (delta_s * delta_s + half_gamma * half_gamma)
}

/// Evolve the slow population under thermal relaxation plus
/// measurement-induced depolarization toward saturation (p -> 1/2), given
/// the cavity field history. Exact per interval for a piecewise-constant
/// field.
pub fn p_path_dispersive(
    p0: f64,
    params: &SystemParams,
    _drive: &DriveParams,
    t_end: f64,
    alpha_path: &FieldPath,
) -> Result<PopulationPath> {
    check_dispersive_preconditions(params)?;
    if !(0.0..=1.0).contains(&p0) {
        return Err(invalid("p0", format!("must lie in [0, 1], got {p0}")));
    }
    if (alpha_path.end_time() - t_end).abs() > 1e-12 * t_end.max(1e-300) {
        return Err(invalid(
            "alpha_path",
            "field history must cover exactly [0, t_end]",
        ));
    }
    let delta_s = params.delta_s();
    let times = &alpha_path.times;
    let mut p = Vec::with_capacity(times.len());
    let mut cur = p0;
    p.push(cur);
    for i in 0..times.len() - 1 {
        let dt = times[i + 1] - times[i];
        let a_sq = 0.5 * (alpha_path.alpha[i].norm_sqr() + alpha_path.alpha[i + 1].norm_sqr());
        let gm = gamma_meas(a_sq, params, delta_s);
        let a = params.gamma_th + gm;
        let b = params.gamma_th * params.p_eq + 0.5 * gm;
        let target = b / a;
        cur = target + (cur - target) * (-a * dt).exp();
        p.push(cur);
    }
    Ok(PopulationPath {
        times: times.clone(),
        p,
    })
}

/// Alternate the field and population solutions until the field stops
/// moving (relative L2 below 1e-8), starting from a thermally decaying
/// population guess. Errors after 100 iterations; non-convergence signals
/// operation outside the dispersive regime's validity.
pub fn solve_self_consistent(
    p0: f64,
    params: &SystemParams,
    drive: &DriveParams,
    t_end: f64,
    grid_dt: f64,
) -> Result<(PopulationPath, FieldPath)> {
    check_dispersive_preconditions(params)?;
    if !(t_end > 0.0) {
        return Err(invalid("t_end", "must be positive"));
    }
    if !(grid_dt > 0.0) || grid_dt >= t_end {
        return Err(invalid("grid_dt", "must be positive and smaller than t_end"));
    }
    let n = ((t_end / grid_dt).round() as usize).max(1) + 1;
    let times = uniform_grid(t_end, n);
    let guess: Vec<f64> = times
        .iter()
        .map(|&t| (p0 * (-params.gamma_th * t).exp()).clamp(0.0, 1.0))
        .collect();
    let mut p_path = PopulationPath {
        times: times.clone(),
        p: guess,
    };

    let mut alpha_prev: Option<FieldPath> = None;
    let mut last_residual = f64::INFINITY;
    for _iteration in 0..100 {
        let mut alpha = alpha_dispersive_path(&p_path, params, drive)?;
        if let Some(prev) = &alpha_prev {
            let residual = alpha.rel_l2_distance(prev);
            if residual < 1e-8 {
                let p_final = p_path_dispersive(p0, params, drive, t_end, &alpha)?;
                return Ok((p_final, alpha));
            }
            // Damp the update when the iteration stops contracting.
            if residual > last_residual {
                for (a, b) in alpha.alpha.iter_mut().zip(&prev.alpha) {
                    *a = 0.5 * (*a + b);
                }
            }
            last_residual = residual;
        }
        p_path = p_path_dispersive(p0, params, drive, t_end, &alpha)?;
        alpha_prev = Some(alpha);
    }
    Err(Error::NonConvergence {
        iterations: 100,
        residual: last_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_params, FullState};
    use crate::ode::{integrate, IntegratorConfig};
    use std::f64::consts::TAU;

    fn grid_path(p: f64, t_end: f64, n: usize) -> PopulationPath {
        PopulationPath::constant(p, t_end, n)
    }

    #[test]
    fn kernel_is_one_at_t_zero() {
        let params = reference_params();
        let path = grid_path(0.2, 1e-3, 101);
        let a = kernel_a(&path, &params, 0.0).unwrap();
        assert_eq!(a, C64::new(1.0, 0.0));
    }

    #[test]
    fn kernel_pure_decay_at_saturation() {
        // p = 1/2 zeroes the inversion: A(t) = e^{-kappa t / 2}.
        let params = reference_params();
        let path = grid_path(0.5, 1e-4, 101);
        let t = 3.7e-5;
        let a = kernel_a(&path, &params, t).unwrap();
        let expected = (-0.5 * params.kappa() * t).exp();
        assert!((a.re - expected).abs() < 1e-14);
        assert!(a.im.abs() < 1e-18);
    }

    #[test]
    fn kernel_constant_ground_population() {
        // p = 0 gives |A| = e^{-kappa t/2}, arg A = chi t with
        // chi = 2 pi * 1.805e5 rad/s at Delta_s = 2 pi * 2 MHz.
        let params = reference_params();
        let path = grid_path(0.0, 2e-6, 801);
        let t = 1e-6;
        let a = kernel_a(&path, &params, t).unwrap();
        let chi = params.derived().chi(1.0).unwrap();
        assert!((a.norm() - (-0.5 * params.kappa() * t).exp()).abs() < 1e-12);
        assert!((a.arg() - chi * t).abs() < 1e-9 * (chi * t).abs());
        assert!((chi / TAU - 1.805e5).abs() < 0.5e2);
    }

    #[test]
    fn kernel_magnitude_is_population_independent() {
        let params = reference_params();
        let t_end = 5e-4;
        let mut path = grid_path(0.0, t_end, 301);
        for (i, p) in path.p.iter_mut().enumerate() {
            *p = 0.3 + 0.15 * ((i as f64) * 0.05).sin();
        }
        for &t in &[1e-5, 1e-4, 4.4e-4] {
            let a = kernel_a(&path, &params, t).unwrap();
            assert!((a.norm() - (-0.5 * params.kappa() * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_inversion_antisymmetry() {
        // p -> 1 - p conjugates the dispersive phase.
        let params = reference_params();
        let t_end = 2e-4;
        let mut path = grid_path(0.0, t_end, 401);
        for (i, p) in path.p.iter_mut().enumerate() {
            *p = 0.25 + 0.2 * ((i as f64) * 0.03).cos();
        }
        let mirrored = PopulationPath {
            times: path.times.clone(),
            p: path.p.iter().map(|&p| 1.0 - p).collect(),
        };
        let t = 1.3e-4;
        let a = kernel_a(&path, &params, t).unwrap();
        let b = kernel_a(&mirrored, &params, t).unwrap();
        assert!((a.arg() + b.arg()).abs() < 1e-12);
        assert!((a.norm() - b.norm()).abs() < 1e-14);
    }

    #[test]
    fn kernel_rejects_zero_detuning() {
        let mut params = reference_params();
        params.omega_s = params.omega_d;
        let path = grid_path(0.2, 1e-4, 11);
        assert_eq!(
            kernel_a(&path, &params, 1e-5),
            Err(Error::DegenerateDetuning)
        );
    }

    #[test]
    fn saturated_field_is_bare_cavity_ringup() {
        // p = 1/2: alpha(t) = (2 sqrt(kc1) beta / kappa)(1 - e^{-kappa t/2}).
        let params = reference_params();
        let drive = DriveParams::from_power(1e-6, params.omega_d).unwrap();
        let t_end = 2e-5;
        let path = grid_path(0.5, t_end, 2001);
        let field = alpha_dispersive_path(&path, &params, &drive).unwrap();
        let amp = 2.0 * params.kappa_c1.sqrt() * drive.beta / params.kappa();
        for (i, &t) in field.times.iter().enumerate() {
            let expected = amp * (1.0 - (-0.5 * params.kappa() * t).exp());
            assert!((field.alpha[i] - expected).norm() <= 1e-10 * amp.norm());
        }
    }

    #[test]
    fn constant_population_matches_linear_response() {
        // Frozen inversion w: alpha(t) relaxes to
        // sqrt(kc1) beta / (kappa/2 - i chi w). The stepping is exact here.
        let params = reference_params();
        let drive = DriveParams::from_power(1e-6, params.omega_d).unwrap();
        let chi = params.derived().chi(1.0).unwrap();
        for &p in &[0.0, 0.2, 0.35, 0.8] {
            let w = 1.0 - 2.0 * p;
            let t_end = 6e-5;
            let path = grid_path(p, t_end, 601);
            let field = alpha_dispersive_path(&path, &params, &drive).unwrap();
            let pole = C64::new(0.5 * params.kappa(), -chi * w);
            let amp = params.kappa_c1.sqrt() * drive.beta / pole;
            for (i, &t) in field.times.iter().enumerate() {
                let expected =
                    amp * (1.0 - (C64::new(-0.5 * params.kappa(), chi * w) * t).exp());
                assert!(
                    (field.alpha[i] - expected).norm() <= 1e-6 * amp.norm(),
                    "p = {p}, node {i}"
                );
            }
        }
    }

    #[test]
    fn steady_state_imaginary_part_flips_about_saturation() {
        // Inversion symmetry about p = 1/2: Im[alpha_ss] changes sign.
        let params = reference_params();
        let drive = DriveParams::from_power(1e-6, params.omega_d).unwrap();
        let t_end = 1e-4;
        let lo = alpha_dispersive_path(&grid_path(0.2, t_end, 1001), &params, &drive).unwrap();
        let hi = alpha_dispersive_path(&grid_path(0.8, t_end, 1001), &params, &drive).unwrap();
        let im_lo = lo.alpha.last().unwrap().im;
        let im_hi = hi.alpha.last().unwrap().im;
        assert!(im_lo * im_hi < 0.0);
        assert!((im_lo + im_hi).abs() < 1e-9 * im_lo.abs());
    }

    #[test]
    fn single_time_field_refines_against_fine_reference() {
        let params = reference_params();
        let drive = DriveParams::from_power(1e-6, params.omega_d).unwrap();
        let t_end = 1e-4;
        // Coarse, smoothly varying population history.
        let mut path = grid_path(0.2, t_end, 41);
        for (i, p) in path.p.iter_mut().enumerate() {
            *p = 0.2 + 0.25 * (1.0 - (-(i as f64) * 0.1).exp());
        }
        let t = 7.3e-5;
        let refined = alpha_dispersive(&path, &params, &drive, t).unwrap();
        // Reference: direct evaluation on a 64x finer sub-grid ending at t.
        let fine = path.refined(64);
        let mut sub_t: Vec<f64> = fine.times.iter().copied().take_while(|&u| u < t).collect();
        let mut sub_p: Vec<f64> = sub_t.iter().map(|&u| fine.p_at(u)).collect();
        sub_t.push(t);
        sub_p.push(fine.p_at(t));
        let sub = PopulationPath {
            times: sub_t,
            p: sub_p,
        };
        let reference = *alpha_dispersive_path(&sub, &params, &drive)
            .unwrap()
            .alpha
            .last()
            .unwrap();
        assert!((refined - reference).norm() < 5e-6 * reference.norm());
        // t = 0 gives the empty cavity.
        assert_eq!(
            alpha_dispersive(&path, &params, &drive, 0.0).unwrap(),
            C64::new(0.0, 0.0)
        );
    }

    #[test]
    fn population_relaxes_thermally_without_field() {
        let params = reference_params();
        let drive = DriveParams::from_power(0.0, params.omega_d).unwrap();
        let t_end = 2e-2;
        let times = uniform_grid(t_end, 2001);
        let field = FieldPath {
            alpha: vec![C64::new(0.0, 0.0); times.len()],
            times,
        };
        let path = p_path_dispersive(0.1, &params, &drive, t_end, &field).unwrap();
        for (i, &t) in path.times.iter().enumerate() {
            let expected = params.p_eq + (0.1 - params.p_eq) * (-params.gamma_th * t).exp();
            assert!((path.p[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_population_is_fixed_point() {
        let params = reference_params(); // p_eq = 0.5
        let drive = DriveParams::from_power(1e-4, params.omega_d).unwrap();
        let t_end = 1e-3;
        let times = uniform_grid(t_end, 101);
        let field = FieldPath {
            alpha: vec![C64::new(1e7, -3e6); times.len()],
            times,
        };
        let path = p_path_dispersive(0.5, &params, &drive, t_end, &field).unwrap();
        for &p in &path.p {
            assert_eq!(p, 0.5);
        }
    }

    #[test]
    fn population_law_matches_full_dynamics() {
        // At moderate drive and Delta_s = 2 pi * 2 MHz the closed rate law
        // reproduces the integrated population to better than 2e-2 absolute.
        let params = reference_params();
        let drive = DriveParams::from_power(2e-5, params.omega_d).unwrap();
        let t_end = 1e-3;
        let cfg = IntegratorConfig {
            dense_sample_dt: 5e-7,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&params, &drive, FullState::initial(0.2).unwrap(), t_end, &cfg)
            .unwrap();
        let field = FieldPath {
            times: traj.times().to_vec(),
            alpha: traj.alpha(),
        };
        let path = p_path_dispersive(0.2, &params, &drive, t_end, &field).unwrap();
        let mut worst = 0.0_f64;
        for (pd, st) in path.p.iter().zip(traj.states()) {
            worst = worst.max((pd - st.p).abs());
        }
        assert!(worst < 2e-2, "worst absolute deviation {worst:.3e}");
    }

    #[test]
    fn self_consistent_uncoupled_is_bare_cavity() {
        let mut params = reference_params();
        params.g_s = 0.0;
        let drive = DriveParams::from_power(1e-6, params.omega_d).unwrap();
        let t_end = 2e-5;
        let (_, field) = solve_self_consistent(0.2, &params, &drive, t_end, 1e-8).unwrap();
        let amp = 2.0 * params.kappa_c1.sqrt() * drive.beta / params.kappa();
        for (i, &t) in field.times.iter().enumerate() {
            let expected = amp * (1.0 - (-0.5 * params.kappa() * t).exp());
            assert!((field.alpha[i] - expected).norm() <= 1e-9 * amp.norm());
        }
    }

    #[test]
    fn self_consistent_matches_full_dynamics_deep_dispersive() {
        // Delta_s = 100 Gamma, moderate drive: field error below 1%
        // relative L2 against the integrated dynamics.
        let params = reference_params().with_delta_s(100.0 * TAU * 330.0e3);
        let drive = DriveParams::from_power(1e-4, params.omega_d).unwrap();
        let t_end = 1e-3;
        let dt = 5e-7;
        let (_, field) = solve_self_consistent(0.2, &params, &drive, t_end, dt).unwrap();
        let cfg = IntegratorConfig {
            dense_sample_dt: dt,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&params, &drive, FullState::initial(0.2).unwrap(), t_end, &cfg)
            .unwrap();
        let reference = FieldPath {
            times: traj.times().to_vec(),
            alpha: traj.alpha(),
        };
        assert_eq!(field.times.len(), reference.times.len());
        let err = field.rel_l2_distance(&reference);
        assert!(err < 1e-2, "relative L2 error {err:.3e}");
    }

    #[test]
    fn self_consistent_out_of_validity_at_small_detuning() {
        // Delta_s = Gamma is far outside the dispersive regime: either the
        // iteration fails or the field deviates by more than 5% from the
        // full dynamics. Kept as a regression anchor on the validity edge.
        let params = reference_params().with_delta_s(TAU * 330.0e3);
        let drive = DriveParams::from_power(1e-5, params.omega_d).unwrap();
        let t_end = 5e-4;
        let dt = 2.5e-7;
        match solve_self_consistent(0.2, &params, &drive, t_end, dt) {
            Err(_) => {}
            Ok((_, field)) => {
                let cfg = IntegratorConfig {
                    dense_sample_dt: dt,
                    ..IntegratorConfig::default()
                };
                let traj = integrate(
                    &params,
                    &drive,
                    FullState::initial(0.2).unwrap(),
                    t_end,
                    &cfg,
                )
                .unwrap();
                let reference = FieldPath {
                    times: traj.times().to_vec(),
                    alpha: traj.alpha(),
                };
                let err = field.rel_l2_distance(&reference);
                assert!(err > 5e-2, "unexpectedly accurate: {err:.3e}");
            }
        }
    }

    #[test]
    fn distinct_initial_populations_separate_then_saturate() {
        // Two quadrature histories for p0 = 0.2 and 0.3: the separation
        // grows through the cavity ring-up, then levels off on the slow
        // population timescale instead of collapsing.
        let params = reference_params();
        let drive = DriveParams::from_power(2e-6, params.omega_d).unwrap();
        let t_end = 1e-3;
        let dt = 5e-7;
        let (_, f1) = solve_self_consistent(0.2, &params, &drive, t_end, dt).unwrap();
        let (_, f2) = solve_self_consistent(0.3, &params, &drive, t_end, dt).unwrap();
        let sep = |i: usize| (f1.alpha[i].im - f2.alpha[i].im).abs();
        let n = f1.times.len();
        let ring_up = sep(2); // 1 us, mid ring-up
        let mid = sep(n / 10); // 100 us, quasi-steady
        let late = sep(n - 1); // 1 ms
        assert!(
            mid > ring_up,
            "separation should grow through ring-up: {ring_up:.3e} vs {mid:.3e}"
        );
        assert!(
            (late - mid).abs() < 0.8 * mid,
            "separation should level off: mid {mid:.3e}, late {late:.3e}"
        );
    }
}
