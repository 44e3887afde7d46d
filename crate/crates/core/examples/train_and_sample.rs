//! Trains a ForM force model on Halfmoons with a short budget, transports
//! the held-out sources and compares against the simulated endpoints.
//!
//! Usage: `cargo run --release --example train_and_sample [STEPS]`

use form_lab::dynamics::{generate, DatasetKind, DatasetSpec};
use form_lab::eval::{euclidean_distance_loss, split_train_eval, LossMode};
use form_lab::relativity::{norm, PhysicsConfig};
use form_lab::sampling::{sample_batch, InitVelocity, Integrator, SamplerConfig};
use form_lab::training::{train, ForceField, Method, TrainConfig};

fn main() -> form_lab::error::Result<()> {
    let steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3000);
    let physics = PhysicsConfig::default();
    let spec = DatasetSpec::new(DatasetKind::Halfmoons);
    let data = generate(&spec, &physics)?;
    let (train_set, held) = split_train_eval(&data);

    let cfg = TrainConfig { steps, ..TrainConfig::new(Method::Form) };
    let model = train(&train_set, &cfg, physics)?;
    println!("trained ForM for {steps} steps, final loss {:.4e}", model.meta.final_loss);
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let got = model.components(&[0.0, 0.0], t)?;
        let want = spec.forces.at(t);
        println!(
            "  t = {t:.2}: F = ({:7.3}, {:7.3})  schedule = ({:7.3}, {:7.3})",
            got.parallel, got.perpendicular, want.parallel, want.perpendicular
        );
    }

    let sources: Vec<Vec<f64>> = held.iter().map(|r| r.start().x.clone()).collect();
    let targets: Vec<Vec<f64>> = held.iter().map(|r| r.end().x.clone()).collect();
    for (label, integrator) in [("ForM step", Integrator::Native), ("RK4", Integrator::Rk4)] {
        for m in [25, 100, 400] {
            let sc = SamplerConfig::new(m, physics).with_init(InitVelocity::DatasetMatched(Box::new(spec.clone())));
            let paths = sample_batch(&model, &sources, &sc, integrator)?;
            let ends: Vec<Vec<f64>> = paths.iter().map(|p| p.endpoint().to_vec()).collect();
            let max_speed = paths.iter().filter_map(|p| p.max_speed()).fold(0.0, f64::max);
            println!(
                "{label:>9}, M = {m:>3}: paired loss {:.5} du, chamfer {:.5} du, max |v| {:.3}",
                euclidean_distance_loss(&ends, &targets, LossMode::Paired)?,
                euclidean_distance_loss(&ends, &targets, LossMode::Chamfer)?,
                max_speed
            );
        }
    }
    let spread = targets.iter().map(|t| norm(t)).sum::<f64>() / targets.len() as f64;
    println!("mean target distance from origin: {spread:.3} du");
    Ok(())
}
