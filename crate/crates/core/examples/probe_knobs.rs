use spin_cavity::model::SystemParams;
use spin_cavity::readout::{
    optimize_drive, OptimizeBounds, ProtocolParams, ReadoutConfig, SolveMode,
};
use spin_cavity::IntegratorConfig;
use std::f64::consts::TAU;

fn base() -> SystemParams {
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

fn run(tag: &str, params: &SystemParams, t_read: f64, pair: (f64, f64)) {
    let cfg = ReadoutConfig {
        integrator: IntegratorConfig {
            dense_sample_dt: t_read / 1000.0,
            ..IntegratorConfig::default()
        },
        ..ReadoutConfig::default()
    };
    let proto = ProtocolParams {
        t_read,
        p0: pair.0,
        p0_prime: pair.1,
        ..ProtocolParams::defaults_for(params)
    };
    print!("{tag:<46}");
    for f_mhz in [1.0, 2.0, 5.0, 10.0] {
        let p = params.with_delta_s(TAU * f_mhz * 1e6);
        let bounds = OptimizeBounds::power_only(1e-7, 1e-1, 13);
        match optimize_drive(&proto, &p, None, &bounds, SolveMode::Auto, &cfg) {
            Ok(opt) => print!("  {:>7.2}", opt.sigma_e),
            Err(_) => print!("      ERR"),
        }
    }
    println!();
}

fn main() {
    println!(
        "{:<46}  {:>7}  {:>7}  {:>7}  {:>7}",
        "variant (sigma_e* at Delta_s)", "1 MHz", "2 MHz", "5 MHz", "10 MHz"
    );
    let b = base();
    run("baseline (T1=5ms, t_r=1ms, pair 0.2/0.3)", &b, 1e-3, (0.2, 0.3));
    let mut slow = b;
    slow.gamma_th = 100.0;
    run("T1 = 10 ms", &slow, 1e-3, (0.2, 0.3));
    let mut vslow = b;
    vslow.gamma_th = 50.0;
    run("T1 = 20 ms", &vslow, 1e-3, (0.2, 0.3));
    run("t_read = 2 ms", &b, 2e-3, (0.2, 0.3));
    run("t_read = 4 ms", &b, 4e-3, (0.2, 0.3));
    let mut both = b;
    both.gamma_th = 100.0;
    run("T1 = 10 ms + t_read = 4 ms", &both, 4e-3, (0.2, 0.3));
    run("pair 0.0/0.1", &b, 1e-3, (0.0, 0.1));
    run("pair 0.0/0.5", &b, 1e-3, (0.0, 0.5));
    let mut cold = b;
    cold.temperature = 150.0;
    run("T = 150 K", &cold, 1e-3, (0.2, 0.3));
}
