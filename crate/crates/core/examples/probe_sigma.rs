use spin_cavity::model::{DriveParams, SystemParams};
use spin_cavity::readout::{
    inverse_fidelity, optimize_drive, OptimizeBounds, ProtocolParams, ReadoutConfig, SolveMode,
};
use spin_cavity::IntegratorConfig;
use std::f64::consts::TAU;
use std::time::Instant;

fn main() {
    let params = SystemParams {
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
    };
    let cfg = ReadoutConfig {
        integrator: IntegratorConfig {
            dense_sample_dt: 1e-6,
            ..IntegratorConfig::default()
        },
        ..ReadoutConfig::default()
    };
    let proto = ProtocolParams::defaults_for(&params); // t_read = 1 ms

    // sigma_e vs power at Delta_s = 2 MHz (full ODE)
    println!("== sigma_e(P) at Delta_s = 2 MHz, t_read = 1 ms, thermal only ==");
    for dbm in [-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0] {
        let p = 1e-3 * 10f64.powf(dbm / 10.0);
        let drive = DriveParams::from_power(p, params.omega_d).unwrap();
        let t0 = Instant::now();
        match inverse_fidelity(&proto, &params, &drive, None, SolveMode::Auto, &cfg) {
            Ok(ev) => println!(
                "P = {dbm:>6.1} dBm: sigma_e = {:>8.2}  (S = {:.3e} J, {:?}, {} ms)",
                ev.sigma_e_final,
                ev.signal_of_t.last().unwrap(),
                ev.mode,
                t0.elapsed().as_millis()
            ),
            Err(e) => println!("P = {dbm:>6.1} dBm: ERROR {e}"),
        }
    }

    // Optimized over power at several detunings
    println!("\n== optimized sigma_e vs Delta_s (thermal only) ==");
    for f_mhz in [1.0, 1.5, 2.0, 3.0, 5.0, 7.0, 10.0] {
        let p = params.with_delta_s(TAU * f_mhz * 1e6);
        let bounds = OptimizeBounds::power_only(1e-7, 1e-1, 13);
        let t0 = Instant::now();
        match optimize_drive(&proto, &p, None, &bounds, SolveMode::Auto, &cfg) {
            Ok(opt) => println!(
                "Delta_s = {f_mhz:>5.1} MHz: sigma_e* = {:>8.3} at P = {:>7.2} dBm{} ({} ms)",
                opt.sigma_e,
                10.0 * (opt.power_w / 1e-3).log10(),
                if opt.on_edge { " [EDGE]" } else { "" },
                t0.elapsed().as_millis()
            ),
            Err(e) => println!("Delta_s = {f_mhz:>5.1} MHz: ERROR {e}"),
        }
    }
}
