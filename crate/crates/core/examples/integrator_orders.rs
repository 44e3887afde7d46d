//! Endpoint error against a fine RK4 reference as the step count doubles,
//! for RK4 and the first-order ForM update, on the Halfmoons force schedule.

use form_lab::dynamics::{DatasetKind, DatasetSpec};
use form_lab::relativity::{norm, ForceComponents, PhysicsConfig};
use form_lab::sampling::{ode_solve, sample_form, InitVelocity, SamplerConfig};

fn main() -> form_lab::error::Result<()> {
    let physics = PhysicsConfig::default();
    let spec = DatasetSpec::new(DatasetKind::Halfmoons);
    let schedule = spec.forces.clone();
    let field = move |_x: &[f64], t: f64| -> ForceComponents { schedule.at(t) };
    let x0 = [0.3, 0.4];
    let config = |m| SamplerConfig::new(m, physics).with_init(InitVelocity::DatasetMatched(Box::new(spec.clone())));
    let reference = ode_solve(&field, &x0, &config(20_000))?.endpoint().to_vec();
    let err = |end: &[f64]| norm(&[end[0] - reference[0], end[1] - reference[1]]);

    println!("{:>6} {:>12} {:>7} {:>12} {:>7}", "M", "RK4", "ratio", "ForM step", "ratio");
    let mut prev: Option<(f64, f64)> = None;
    for m in [25, 50, 100, 200, 400, 800] {
        let rk = err(ode_solve(&field, &x0, &config(m))?.endpoint());
        let fm = err(sample_form(&field, &x0, &config(m))?.endpoint());
        let (r1, r2) = prev.map(|(a, b)| (a / rk, b / fm)).unwrap_or((f64::NAN, f64::NAN));
        println!("{m:>6} {rk:>12.3e} {r1:>7.2} {fm:>12.3e} {r2:>7.2}");
        prev = Some((rk, fm));
    }
    Ok(())
}
