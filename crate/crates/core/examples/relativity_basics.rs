//! Lorentz factor, momentum, force and its co-moving decomposition for a
//! few velocities, in units where c = 10.

use form_lab::relativity::{
    acceleration_from_force, compose_from_components, decompose_parallel_perp, lorentz_factor, momentum,
    relativistic_force, speed_sq_derivative, Handedness, PhysicsConfig,
};

fn main() -> form_lab::error::Result<()> {
    let cfg = PhysicsConfig::default();
    let a = [0.0, 2.0];
    println!("{:>12} {:>8} {:>22} {:>24} {:>10}", "v", "gamma", "p", "f for a = (0, 2)", "d(v^2/2)");
    for speed in [0.0, 3.0, 6.0, 9.0, 9.99] {
        let v = [speed, 0.0];
        let g = lorentz_factor(&v, &cfg)?;
        let p = momentum(&v, &cfg)?;
        let f = relativistic_force(&v, &a, &cfg)?;
        let back = acceleration_from_force(&v, &f, &cfg)?;
        assert!((back[1] - a[1]).abs() < 1e-12);
        println!(
            "{:>12} {g:>8.4} {:>22} {:>24} {:>10.4}",
            format!("({speed}, 0)"),
            format!("({:.3}, {:.3})", p[0], p[1]),
            format!("({:.3}, {:.3})", f[0], f[1]),
            speed_sq_derivative(&v, &f, &cfg)?
        );
    }

    let v = [3.0, 4.0];
    let f = [1.0, 2.0];
    for hand in [Handedness::Ccw, Handedness::Cw] {
        let fc = decompose_parallel_perp(&f, &v, hand)?;
        let again = compose_from_components(fc, &v, hand)?;
        println!("{hand:?}: f = (1, 2) at v = (3, 4) -> parallel {:.3}, perpendicular {:.3} -> ({:.3}, {:.3})",
            fc.parallel, fc.perpendicular, again[0], again[1]);
    }
    Ok(())
}
