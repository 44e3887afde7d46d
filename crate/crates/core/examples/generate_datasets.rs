//! Simulates the three datasets at their default sizes and writes each as
//! NDJSON plus an SVG figure with trajectories.
//!
//! Usage: `cargo run --release --example generate_datasets [OUT_DIR]`

use std::path::PathBuf;

use form_lab::dynamics::{generate, DatasetKind, DatasetSpec, UnitSystem};
use form_lab::io::DatasetFile;
use form_lab::plot::Figure;

fn main() -> form_lab::error::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("form-lab"));
    std::fs::create_dir_all(&out)?;
    let units = UnitSystem::default();
    let physics = units.physics();
    for kind in DatasetKind::ALL {
        let spec = DatasetSpec::new(kind);
        let data = generate(&spec, &physics)?;
        let max_speed = data.iter().map(|r| r.max_speed()).fold(0.0, f64::max);
        let file = DatasetFile::new(&spec, units.clone(), physics, data);
        let ndjson = out.join(format!("{kind}.ndjson"));
        file.write(&ndjson)?;
        let svg = out.join(format!("{kind}.svg"));
        std::fs::write(&svg, Figure::from_dataset(&file, true).to_svg())?;
        println!(
            "{:<10} {:>5} trajectories, max |v|/c = {:.4}  -> {}, {}",
            kind.title(),
            spec.n_points,
            max_speed / physics.c,
            ndjson.display(),
            svg.display()
        );
    }
    Ok(())
}
