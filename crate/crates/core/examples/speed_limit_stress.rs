//! Drives the ForM sampler with forces 100x and 10^4x the dataset scale
//! and reports how close the particles get to c. The plain Euler velocity
//! update is included for contrast; it can step past c.

use form_lab::dynamics::{DatasetKind, DatasetSpec};
use form_lab::relativity::{norm, ForceComponents, PhysicsConfig};
use form_lab::sampling::{sample_form, InitVelocity, SamplerConfig, VelocityUpdate};

fn main() -> form_lab::error::Result<()> {
    let physics = PhysicsConfig::default();
    for kind in DatasetKind::ALL {
        let spec = DatasetSpec::new(kind);
        for scale in [1.0, 100.0, 1e4] {
            let schedule = spec.forces.scaled(scale);
            let field = move |_x: &[f64], t: f64| -> ForceComponents { schedule.at(t) };
            for update in [VelocityUpdate::Momentum, VelocityUpdate::Euler] {
                let mut sc = SamplerConfig::new(100, physics).with_init(InitVelocity::DatasetMatched(Box::new(spec.clone())));
                sc.velocity_update = update;
                let path = match sample_form(&field, &[0.5, -0.5], &sc) {
                    Ok(path) => path,
                    Err(e) => {
                        println!("{:<10} x{scale:<7} {update:?}: {e}", kind.title());
                        continue;
                    }
                };
                let top = path.v.as_ref().map(|v| v.iter().map(|u| norm(u)).fold(0.0, f64::max)).unwrap_or(0.0);
                println!(
                    "{:<10} x{scale:<7} {update:?}: max |v|/c = {:.12}, endpoint ({:.3}, {:.3})",
                    kind.title(),
                    top / physics.c,
                    path.endpoint()[0],
                    path.endpoint()[1]
                );
            }
        }
    }
    Ok(())
}
