//! Position, velocity and relativistic force along a TrigFlow path between
//! a noise point and a data point.

use std::f64::consts::FRAC_PI_2;

use form_lab::interpolants::{interpolate, trigflow_force, TrigFlow};
use form_lab::relativity::{lorentz_factor, PhysicsConfig};

fn main() -> form_lab::error::Result<()> {
    let cfg = PhysicsConfig::default();
    let x0 = [0.0, 1.0];
    let x1 = [3.0, -2.0];
    println!("{:>6} {:>18} {:>18} {:>7} {:>18}", "t", "x_t", "x_dot", "gamma", "force");
    for k in 0..=8 {
        let t = FRAC_PI_2 * k as f64 / 8.0;
        let path = interpolate(&x0, &x1, t, &TrigFlow)?;
        let f = trigflow_force(&x0, &x1, t, &cfg)?;
        let pair = |v: &[f64]| format!("({:.3}, {:.3})", v[0], v[1]);
        println!(
            "{t:>6.3} {:>18} {:>18} {:>7.4} {:>18}",
            pair(&path.x),
            pair(&path.x_dot),
            lorentz_factor(&path.x_dot, &cfg)?,
            pair(&f)
        );
    }
    Ok(())
}
