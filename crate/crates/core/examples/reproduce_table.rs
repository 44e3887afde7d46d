//! Trains all three methods on all three datasets with default settings and
//! prints the held-out loss table next to the published numbers.
//!
//! Takes several minutes in release mode. Pass a smaller step budget to get
//! a rough table quickly: `cargo run --release --example reproduce_table 2000`

use form_lab::dynamics::{generate, DatasetKind, DatasetSpec};
use form_lab::eval::{config_hash, evaluate_model, make_report, split_train_eval, EvalCell, LossMode, ReportMeta};
use form_lab::relativity::PhysicsConfig;
use form_lab::sampling::{InitVelocity, Integrator, SamplerConfig};
use form_lab::training::{train, Method, TrainConfig};

fn main() -> form_lab::error::Result<()> {
    let steps: Option<usize> = std::env::args().nth(1).and_then(|s| s.parse().ok());
    let physics = PhysicsConfig::default();
    let m = 100;
    let mut cells = Vec::new();
    let mut configs = Vec::new();
    for kind in DatasetKind::ALL {
        let spec = DatasetSpec::new(kind);
        let data = generate(&spec, &physics)?;
        let (train_set, held) = split_train_eval(&data);
        let sc = SamplerConfig::new(m, physics).with_init(InitVelocity::DatasetMatched(Box::new(spec.clone())));
        for method in Method::ALL {
            let mut cfg = TrainConfig::new(method);
            if let Some(s) = steps {
                cfg.steps = s;
            }
            let model = train(&train_set, &cfg, physics)?;
            let loss = evaluate_model(&model, &held, &sc, LossMode::Paired, Integrator::Native)?;
            eprintln!("{:<10} {:<6} {loss:.5}", kind.title(), method.title());
            cells.push(EvalCell { dataset: kind, method, loss, n_samples: held.len(), m, seed: 0, mode: LossMode::Paired });
            configs.push(cfg);
        }
    }
    let report = make_report(cells, ReportMeta { commit: None, config_hash: config_hash(&configs)? })?;
    print!("{}", report.render_table(true));
    for (dataset, order) in &report.ranking {
        let names: Vec<&str> = order.iter().map(|m| m.title()).collect();
        println!("{dataset}: {}", names.join(" < "));
    }
    Ok(())
}
