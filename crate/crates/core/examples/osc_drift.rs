use spin_cavity::ode::{solve, IntegratorConfig};
use std::f64::consts::TAU;

fn main() {
    for rtol in [1e-9_f64, 1e-10, 1e-11, 1e-12] {
        let cfg = IntegratorConfig {
            rel_tol: rtol,
            abs_tol: 1e-14,
            max_step: 1.0,
            initial_step: 1e-4,
            dense_sample_dt: TAU,
        };
        let t_end = 1000.0 * TAU;
        let sol = solve(|_, y: &[f64; 2]| [-y[1], y[0]], [1.0, 0.0], t_end, &cfg).unwrap();
        let worst = sol
            .states
            .iter()
            .map(|y| (y[0] * y[0] + y[1] * y[1] - 1.0).abs())
            .fold(0.0, f64::max);
        println!("rtol {rtol:>8.1e}: worst |y|^2 drift = {worst:.3e}");
    }
}
