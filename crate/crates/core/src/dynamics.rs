//! Relativistic trajectory simulation and the Onedot / Halfmoons / Spiral
//! dataset generators.
//!
//! Distances are in du (0.1 light-second), so `c = 10 du/s` and SI forces per
//! unit mass divide by `3e7`. Each generated trajectory draws from its own
//! ChaCha stream selected by `(seed, index)`, which makes the output
//! independent of how many worker threads ran the generation.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relativity::{
    acceleration_from_force, compose_from_components, momentum, norm, velocity_from_momentum,
    ForceComponents, PhysicsConfig,
};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT_SI: f64 = 3e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub meters_per_du: f64,
    pub c_du: f64,
    pub distance_label: String,
    pub time_label: String,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::with_meters_per_du(3e7)
    }
}

impl UnitSystem {
    pub fn with_meters_per_du(meters_per_du: f64) -> Self {
        Self {
            meters_per_du,
            c_du: SPEED_OF_LIGHT_SI / meters_per_du,
            distance_label: "du (0.1 light-second)".into(),
            time_label: "s".into(),
        }
    }

    /// Converts an SI force per unit mass (m/s²) to du/s².
    pub fn accel_from_si(&self, si: f64) -> f64 {
        si / self.meters_per_du
    }

    pub fn physics(&self) -> PhysicsConfig {
        PhysicsConfig { c: self.c_du, ..PhysicsConfig::default() }
    }
}

/// A scalar function of time used for one force component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Waveform {
    Constant { value: f64 },
    /// `amplitude · sin(frequency · t)`.
    Sine { amplitude: f64, frequency: f64 },
}

impl Waveform {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Waveform::Constant { value } => value,
            Waveform::Sine { amplitude, frequency } => amplitude * (frequency * t).sin(),
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        match *self {
            Waveform::Constant { value } => Waveform::Constant { value: value * k },
            Waveform::Sine { amplitude, frequency } => Waveform::Sine { amplitude: amplitude * k, frequency },
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            Waveform::Constant { value } => value.is_finite(),
            Waveform::Sine { amplitude, frequency } => amplitude.is_finite() && frequency.is_finite(),
        }
    }
}

/// Co-moving force per unit mass (du/s²) as a function of lab time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceSchedule {
    pub parallel: Waveform,
    pub perpendicular: Waveform,
}

impl ForceSchedule {
    pub fn zero() -> Self {
        Self {
            parallel: Waveform::Constant { value: 0.0 },
            perpendicular: Waveform::Constant { value: 0.0 },
        }
    }

    pub fn at(&self, t: f64) -> ForceComponents {
        ForceComponents::new(self.parallel.eval(t), self.perpendicular.eval(t))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { parallel: self.parallel.scaled(k), perpendicular: self.perpendicular.scaled(k) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    /// Lab-frame force vector.
    pub f: Vec<f64>,
    pub f_par: f64,
    pub f_perp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub index: usize,
    pub steps: Vec<TrajectoryStep>,
}

impl TrajectoryRecord {
    pub fn start(&self) -> &TrajectoryStep {
        &self.steps[0]
    }

    pub fn end(&self) -> &TrajectoryStep {
        self.steps.last().expect("trajectory has at least one step")
    }

    pub fn max_speed(&self) -> f64 {
        self.steps.iter().map(|s| crate::relativity::norm(&s.v)).fold(0.0, f64::max)
    }
}

/// Classical RK4 on `(x, p)` with `p = m γ v`, so that `dx/dt = v(p)` and
/// `dp/dt = f`. The recovered speed is below `c` for every finite momentum,
/// whatever the step size.
pub fn simulate_trajectory(
    x0: &[f64],
    v0: &[f64],
    forces: &ForceSchedule,
    duration: f64,
    n_steps: usize,
    cfg: &PhysicsConfig,
) -> Result<Vec<TrajectoryStep>> {
    if n_steps < 2 {
        return Err(Error::InvalidConfig(format!("n_steps must be >= 2, got {n_steps}")));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidConfig(format!("duration must be positive, got {duration}")));
    }
    if x0.len() != v0.len() {
        return Err(Error::Dimension { expected: x0.len(), got: v0.len() });
    }
    let dim = x0.len();
    let dt = duration / n_steps as f64;

    let deriv = |t: f64, x: &[f64]| -> Result<Vec<f64>> {
        let v = velocity_from_momentum(&x[dim..], cfg);
        let f = compose_from_components(forces.at(t), &v, cfg.perp)?;
        Ok(v.into_iter().chain(f).collect())
    };

    let record = |t: f64, state: &[f64]| -> Result<TrajectoryStep> {
        let v = velocity_from_momentum(&state[dim..], cfg);
        let fc = forces.at(t);
        let f = compose_from_components(fc, &v, cfg.perp)?;
        let a = acceleration_from_force(&v, &f, cfg)?;
        let step = TrajectoryStep {
            t,
            x: state[..dim].to_vec(),
            v,
            a,
            f,
            f_par: fc.parallel,
            f_perp: fc.perpendicular,
        };
        if step.x.iter().chain(&step.v).chain(&step.a).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("state at t = {t}")));
        }
        Ok(step)
    };

    let mut state: Vec<f64> = x0.iter().copied().chain(momentum(v0, cfg)?).collect();
    let mut steps = Vec::with_capacity(n_steps + 1);
    steps.push(record(0.0, &state)?);
    for k in 0..n_steps {
        let t = k as f64 * dt;
        state = crate::ode::rk4_step(&state, t, dt, &deriv)?;
        steps.push(record((k + 1) as f64 * dt, &state)?);
    }
    Ok(steps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Onedot,
    Halfmoons,
    Spiral,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 3] = [DatasetKind::Onedot, DatasetKind::Halfmoons, DatasetKind::Spiral];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Onedot => "onedot",
            DatasetKind::Halfmoons => "halfmoons",
            DatasetKind::Spiral => "spiral",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            DatasetKind::Onedot => "Onedot",
            DatasetKind::Halfmoons => "Halfmoons",
            DatasetKind::Spiral => "Spiral",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onedot" => Ok(DatasetKind::Onedot),
            "halfmoons" => Ok(DatasetKind::Halfmoons),
            "spiral" => Ok(DatasetKind::Spiral),
            other => Err(Error::InvalidConfig(format!("unknown dataset `{other}`"))),
        }
    }
}

/// Generator parameters. Speeds are in du/s, distances in du, forces in
/// du/s² per unit mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub n_points: usize,
    pub n_steps: usize,
    pub duration: f64,
    pub seed: u64,
    /// Per-axis standard deviation of the Gaussian source (Onedot, Halfmoons).
    pub source_std: f64,
    /// Radius of the uniform source disc (Spiral).
    pub disc_radius: f64,
    /// Onedot: `v0 = velocity_scale · x0` (1/s).
    pub velocity_scale: f64,
    /// Halfmoons: initial speed along ±x.
    pub initial_speed: f64,
    /// Spiral: speed for points inside half the disc radius.
    pub core_speed: f64,
    /// Spiral: speed for points in the outer ring.
    pub ring_speed: f64,
    pub forces: ForceSchedule,
}

impl DatasetSpec {
    pub fn new(kind: DatasetKind) -> Self {
        let units = UnitSystem::default();
        let (n_points, forces) = match kind {
            DatasetKind::Onedot => {
                let both = Waveform::Constant { value: units.accel_from_si(1.5e8) };
                (200, ForceSchedule { parallel: both, perpendicular: both })
            }
            DatasetKind::Halfmoons => (
                1000,
                ForceSchedule {
                    parallel: Waveform::Sine { amplitude: units.accel_from_si(1e7), frequency: 1.0 },
                    perpendicular: Waveform::Sine { amplitude: units.accel_from_si(7e8), frequency: 8.0 },
                },
            ),
            DatasetKind::Spiral => (
                1000,
                ForceSchedule {
                    parallel: Waveform::Sine { amplitude: units.accel_from_si(1e7), frequency: 1.0 },
                    perpendicular: Waveform::Sine { amplitude: units.accel_from_si(7e8), frequency: 1.0 },
                },
            ),
        };
        Self {
            kind,
            n_points,
            n_steps: 200,
            duration: 1.0,
            seed: 42,
            source_std: 0.3f64.sqrt(),
            disc_radius: 1.0,
            velocity_scale: 4.0,
            initial_speed: 4.0,
            core_speed: 2.0,
            ring_speed: 6.0,
            forces,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_points == 0 {
            return bad("n_points must be > 0".into());
        }
        if self.n_steps < 2 {
            return bad(format!("n_steps must be >= 2, got {}", self.n_steps));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        let params = [
            self.source_std,
            self.disc_radius,
            self.velocity_scale,
            self.initial_speed,
            self.core_speed,
            self.ring_speed,
        ];
        if params.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return bad("generator parameters must be finite and non-negative".into());
        }
        if !(self.forces.parallel.is_finite() && self.forces.perpendicular.is_finite()) {
            return bad("force schedule must be finite".into());
        }
        Ok(())
    }

    /// Random stream for trajectory `index`.
    pub fn stream(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }

    /// Draws one source point.
    pub fn sample_source<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.kind {
            DatasetKind::Onedot | DatasetKind::Halfmoons => (0..2)
                .map(|_| self.source_std * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            DatasetKind::Spiral => {
                let r = self.disc_radius * rng.random::<f64>().sqrt();
                let th = TAU * rng.random::<f64>();
                vec![r * th.cos(), r * th.sin()]
            }
        }
    }

    /// Draws source points until the assigned initial velocity is below `c`.
    /// Only the far tail of the Onedot Gaussian is ever rejected.
    pub fn sample_admissible_source<R: Rng + ?Sized>(&self, rng: &mut R, c: f64) -> Result<Vec<f64>> {
        for _ in 0..1000 {
            let x0 = self.sample_source(rng);
            if norm(&self.initial_velocity(&x0)) < c {
                return Ok(x0);
            }
        }
        Err(Error::InvalidConfig(format!("initial velocities of {} sources keep reaching c = {c}", self.kind)))
    }

    /// Initial velocity assigned to a source point.
    pub fn initial_velocity(&self, x0: &[f64]) -> Vec<f64> {
        match self.kind {
            DatasetKind::Onedot => x0.iter().map(|x| self.velocity_scale * x).collect(),
            DatasetKind::Halfmoons => {
                let dir = if x0[1] > 0.0 { 1.0 } else { -1.0 };
                vec![dir * self.initial_speed, 0.0]
            }
            DatasetKind::Spiral => {
                let r = x0[0].hypot(x0[1]);
                let th = x0[1].atan2(x0[0]).rem_euclid(TAU);
                let base = if r < 0.5 * self.disc_radius { self.core_speed } else { self.ring_speed };
                let speed = base * th / TAU;
                vec![-speed * th.sin(), speed * th.cos()]
            }
        }
    }
}

fn generate_one(spec: &DatasetSpec, index: usize, cfg: &PhysicsConfig) -> Result<TrajectoryRecord> {
    let mut rng = spec.stream(index);
    let x0 = spec
        .sample_admissible_source(&mut rng, cfg.c)
        .map_err(|e| Error::Trajectory { index, source: Box::new(e) })?;
    let v0 = spec.initial_velocity(&x0);
    let steps = simulate_trajectory(&x0, &v0, &spec.forces, spec.duration, spec.n_steps, cfg)
        .map_err(|e| Error::Trajectory { index, source: Box::new(e) })?;
    Ok(TrajectoryRecord { index, steps })
}

/// Generates every trajectory of `spec`, in index order. Runs on the current
/// rayon pool.
pub fn generate(spec: &DatasetSpec, cfg: &PhysicsConfig) -> Result<Vec<TrajectoryRecord>> {
    spec.validate()?;
    cfg.validate()?;
    (0..spec.n_points).into_par_iter().map(|i| generate_one(spec, i, cfg)).collect()
}

fn generate_kind(kind: DatasetKind, spec: &DatasetSpec, cfg: &PhysicsConfig) -> Result<Vec<TrajectoryRecord>> {
    if spec.kind != kind {
        return Err(Error::InvalidConfig(format!("expected a {kind} spec, got {}", spec.kind)));
    }
    generate(spec, cfg)
}

pub fn gen_onedot(spec: &DatasetSpec, cfg: &PhysicsConfig) -> Result<Vec<TrajectoryRecord>> {
    generate_kind(DatasetKind::Onedot, spec, cfg)
}

pub fn gen_halfmoons(spec: &DatasetSpec, cfg: &PhysicsConfig) -> Result<Vec<TrajectoryRecord>> {
    generate_kind(DatasetKind::Halfmoons, spec, cfg)
}

pub fn gen_spiral(spec: &DatasetSpec, cfg: &PhysicsConfig) -> Result<Vec<TrajectoryRecord>> {
    generate_kind(DatasetKind::Spiral, spec, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relativity::speed_sq_derivative;

    fn physics() -> PhysicsConfig {
        UnitSystem::default().physics()
    }

    #[test]
    fn onedot_tail_sources_are_redrawn() {
        // seed 43 puts trajectory 101 at |x0| > 2.5, i.e. v0 = 4 x0 above c
        let spec = DatasetSpec { seed: 43, ..DatasetSpec::new(DatasetKind::Onedot) };
        let raw = spec.sample_source(&mut spec.stream(101));
        assert!(norm(&spec.initial_velocity(&raw)) >= 10.0);
        let data = generate(&spec, &physics()).unwrap();
        assert!(data.iter().all(|r| norm(&r.start().v) < 10.0));
        assert_ne!(data[101].start().x, raw);
        assert_eq!(data[100].start().x, spec.sample_source(&mut spec.stream(100)));
    }

    #[test]
    fn units() {
        let u = UnitSystem::default();
        assert_eq!(u.c_du, 10.0);
        assert_eq!(u.c_du, SPEED_OF_LIGHT_SI / u.meters_per_du);
        assert_eq!(u.accel_from_si(1.5e8), 5.0);
        assert!((u.accel_from_si(1e7) - 1.0 / 3.0).abs() < 1e-15);
        assert!((u.accel_from_si(7e8) - 70.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn force_free_motion() {
        let steps = simulate_trajectory(&[1.0, 2.0], &[3.0, 0.0], &ForceSchedule::zero(), 1.0, 200, &physics()).unwrap();
        let end = steps.last().unwrap();
        assert!((end.x[0] - 4.0).abs() < 1e-12 && (end.x[1] - 2.0).abs() < 1e-12);
        assert!((end.v[0] - 3.0).abs() < 1e-12 && end.v[1].abs() < 1e-12);
        assert_eq!(steps.len(), 201);
    }

    #[test]
    fn perpendicular_force_does_no_work() {
        let forces = ForceSchedule {
            parallel: Waveform::Constant { value: 0.0 },
            perpendicular: Waveform::Constant { value: 5.0 },
        };
        let steps = simulate_trajectory(&[0.0, 0.0], &[5.0, 0.0], &forces, 1.0, 200, &physics()).unwrap();
        for s in &steps {
            assert!((norm(&s.v) - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn richardson_fourth_order() {
        let forces = DatasetSpec::new(DatasetKind::Halfmoons).forces;
        let end = |n| {
            let s = simulate_trajectory(&[0.2, 0.3], &[4.0, 0.0], &forces, 1.0, n, &physics()).unwrap();
            s.last().unwrap().x.clone()
        };
        let (a, b, c) = (end(200), end(400), end(800));
        let d1 = norm(&[a[0] - b[0], a[1] - b[1]]);
        let d2 = norm(&[b[0] - c[0], b[1] - c[1]]);
        assert!(d2 <= d1 / 15.0, "d1 = {d1:e}, d2 = {d2:e}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = ForceSchedule::zero();
        assert!(simulate_trajectory(&[0.0, 0.0], &[1.0, 0.0], &f, 1.0, 1, &physics()).is_err());
        assert!(matches!(
            simulate_trajectory(&[0.0, 0.0], &[10.0, 0.0], &f, 1.0, 10, &physics()),
            Err(Error::SpeedOfLight { .. })
        ));
        let push = ForceSchedule { parallel: Waveform::Constant { value: 1.0 }, ..ForceSchedule::zero() };
        assert!(matches!(
            simulate_trajectory(&[0.0, 0.0], &[0.0, 0.0], &push, 1.0, 10, &physics()),
            Err(Error::DegenerateVelocity { .. })
        ));
    }

    #[test]
    fn onedot_defaults() {
        let spec = DatasetSpec::new(DatasetKind::Onedot);
        let data = gen_onedot(&spec, &physics()).unwrap();
        assert_eq!(data.len(), 200);
        assert!(data.iter().all(|r| r.max_speed() < 10.0));
        assert!(gen_halfmoons(&spec, &physics()).is_err());
    }

    #[test]
    fn onedot_force_free_endpoints() {
        let mut spec = DatasetSpec::new(DatasetKind::Onedot);
        spec.n_points = 20;
        spec.forces = ForceSchedule::zero();
        for r in gen_onedot(&spec, &physics()).unwrap() {
            let s = r.start();
            let e = r.end();
            for d in 0..2 {
                assert!((e.x[d] - (s.x[d] + s.v[d] * spec.duration)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut spec = DatasetSpec::new(DatasetKind::Spiral);
        spec.n_points = 64;
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| gen_spiral(&spec, &physics()).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn halfmoons_direction_rule() {
        let spec = DatasetSpec::new(DatasetKind::Halfmoons);
        assert_eq!(spec.initial_velocity(&[0.5, 0.2]), vec![4.0, 0.0]);
        assert_eq!(spec.initial_velocity(&[0.5, -0.2]), vec![-4.0, 0.0]);
        assert_eq!(spec.initial_velocity(&[0.5, 0.0]), vec![-4.0, 0.0]);
    }

    #[test]
    fn spiral_ring_faster_than_core() {
        let spec = DatasetSpec::new(DatasetKind::Spiral);
        let th: f64 = 2.0;
        let core = spec.initial_velocity(&[0.2 * th.cos(), 0.2 * th.sin()]);
        let ring = spec.initial_velocity(&[0.8 * th.cos(), 0.8 * th.sin()]);
        assert!(norm(&ring) > norm(&core));
        // tangential, counter-clockwise
        let x = [0.8 * th.cos(), 0.8 * th.sin()];
        assert!((ring[0] * x[0] + ring[1] * x[1]).abs() < 1e-12);
        assert!(x[0] * ring[1] - x[1] * ring[0] > 0.0);
    }

    #[test]
    fn generated_sets_respect_speed_limit_and_consistency() {
        let cfg = physics();
        for kind in DatasetKind::ALL {
            let mut spec = DatasetSpec::new(kind);
            spec.n_points = 100;
            let data = generate(&spec, &cfg).unwrap();
            let mut disp = 0.0;
            for r in &data {
                for s in &r.steps {
                    assert!(norm(&s.v) < cfg.c);
                    let a = acceleration_from_force(&s.v, &s.f, &cfg).unwrap();
                    assert!(a.iter().zip(&s.a).all(|(p, q)| (p - q).abs() <= 1e-10));
                }
                disp += norm(&[r.end().x[0] - r.start().x[0], r.end().x[1] - r.start().x[1]]);
            }
            assert!(disp / data.len() as f64 > 0.0);
        }
    }

    #[test]
    fn work_identity_along_trajectory() {
        let cfg = physics();
        let mut spec = DatasetSpec::new(DatasetKind::Onedot);
        spec.n_points = 5;
        for r in generate(&spec, &cfg).unwrap() {
            let dt = r.steps[1].t - r.steps[0].t;
            let ke: Vec<f64> = r.steps.iter().map(|s| 0.5 * norm(&s.v).powi(2)).collect();
            for k in 1..r.steps.len() - 1 {
                let numeric = (ke[k + 1] - ke[k - 1]) / (2.0 * dt);
                let s = &r.steps[k];
                let exact = speed_sq_derivative(&s.v, &s.f, &cfg).unwrap();
                assert!((numeric - exact).abs() <= 1e-4 * exact.abs(), "k = {k}");
            }
        }
    }
}
