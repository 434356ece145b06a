use spin_cavity::model::{DriveParams, SystemParams};
use spin_cavity::readout::{inverse_fidelity, ProtocolParams, ReadoutConfig, SolveMode};
use spin_cavity::IntegratorConfig;
use std::f64::consts::TAU;

fn main() {
    let params = SystemParams {
        omega_c: TAU * 3.0e9,
        omega_s: TAU * (3.0e9 + 5.0e6),
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
    let t_read = 4e-3;
    for dbm in [0.0, 5.0, 10.0] {
        let p = 1e-3 * 10f64.powf(dbm / 10.0);
        let drive = DriveParams::from_power(p, params.omega_d).unwrap();
        println!("P = {dbm} dBm:");
        for dense in [4e-6, 2e-6, 1e-6, 5e-7, 2.5e-7] {
            let cfg = ReadoutConfig {
                integrator: IntegratorConfig {
                    dense_sample_dt: dense,
                    ..IntegratorConfig::default()
                },
                ..ReadoutConfig::default()
            };
            let proto = ProtocolParams {
                t_read,
                ..ProtocolParams::defaults_for(&params)
            };
            let d = inverse_fidelity(&proto, &params, &drive, None, SolveMode::Dispersive, &cfg)
                .map(|e| e.sigma_e_final);
            let o = inverse_fidelity(&proto, &params, &drive, None, SolveMode::FullOde, &cfg)
                .map(|e| e.sigma_e_final);
            println!(
                "  dense = {dense:.1e}: dispersive = {}, full_ode = {}",
                d.map(|v| format!("{v:.4}")).unwrap_or_else(|e| e.to_string()),
                o.map(|v| format!("{v:.4}")).unwrap_or_else(|e| e.to_string()),
            );
        }
    }
}
