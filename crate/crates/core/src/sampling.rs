//! Samplers for the three methods and a fourth-order reference integrator.
//!
//! * [`sample_o1`]: explicit Euler on `ẋ = u1(x, t)`.
//! * [`sample_o1o2`]: second-order Taylor step `x + d u1 + d²/2 u2`.
//! * [`sample_form`]: the ForM step. Force components are read at the start
//!   of each step, the velocity is advanced, and the position takes the
//!   trapezoidal average of old and new velocity.
//! * [`ode_solve`]: RK4 on the same relativistic second-order system.
//!
//! The ForM velocity update defaults to [`VelocityUpdate::Momentum`], which
//! advances `p = m γ v` exactly for force components held constant over the
//! step, then maps back to `v`. The recovered speed is below `c` for any step
//! size, and a purely perpendicular force rotates `p` without changing the
//! speed. [`VelocityUpdate::Euler`] is the plain `v + d·a` update; it can
//! overshoot `c` on coarse grids, which is reported as an error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::DatasetSpec;
use crate::error::{Error, Result};
use crate::relativity::{
    acceleration_from_force, compose_from_components, momentum, norm, velocity_from_momentum,
    ForceComponents, Handedness, PhysicsConfig, DEGENERATE_SPEED,
};
use crate::training::{AccelerationField, ForceField, Method, TrainedModel, VelocityField};

/// How ForM picks the starting velocity for a source point.
#[derive(Clone, Debug, PartialEq)]
pub enum InitVelocity {
    /// Apply the dataset's own initial-velocity rule to `x0`.
    DatasetMatched(Box<DatasetSpec>),
    Zero,
    Explicit(Vec<f64>),
}

impl InitVelocity {
    pub fn resolve(&self, x0: &[f64]) -> Vec<f64> {
        match self {
            InitVelocity::DatasetMatched(spec) => spec.initial_velocity(x0),
            InitVelocity::Zero => vec![0.0; x0.len()],
            InitVelocity::Explicit(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityUpdate {
    #[default]
    Momentum,
    Euler,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Number of steps `M`.
    pub steps: usize,
    /// Horizon; the step is `duration / M`.
    pub duration: f64,
    pub init: InitVelocity,
    pub physics: PhysicsConfig,
    pub velocity_update: VelocityUpdate,
    /// Apply force components along the lab axes for a step whose velocity
    /// is too small to define a co-moving frame, instead of failing.
    pub lab_frame_fallback: bool,
}

impl SamplerConfig {
    pub fn new(steps: usize, physics: PhysicsConfig) -> Self {
        Self {
            steps,
            duration: 1.0,
            init: InitVelocity::Zero,
            physics,
            velocity_update: VelocityUpdate::Momentum,
            lab_frame_fallback: false,
        }
    }

    pub fn with_init(mut self, init: InitVelocity) -> Self {
        self.init = init;
        self
    }

    fn step_size(&self) -> Result<f64> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("sampler needs M >= 1".into()));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidConfig("sampler duration must be positive".into()));
        }
        Ok(self.duration / self.steps as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    /// Velocities, recorded by the second-order samplers only.
    pub v: Option<Vec<Vec<f64>>>,
}

impl SamplePath {
    pub fn endpoint(&self) -> &[f64] {
        self.x.last().expect("path has at least one point")
    }

    pub fn max_speed(&self) -> Option<f64> {
        self.v.as_ref().map(|vs| vs.iter().map(|v| norm(v)).fold(0.0, f64::max))
    }
}

fn check_finite(x: &[f64], t: f64) -> Result<()> {
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite(format!("sampler state at t = {t}")));
    }
    Ok(())
}

pub fn sample_o1<V: VelocityField + ?Sized>(u1: &V, x0: &[f64], sc: &SamplerConfig) -> Result<SamplePath> {
    let d = sc.step_size()?;
    let mut x = x0.to_vec();
    let mut path = SamplePath { t: vec![0.0], x: vec![x.clone()], v: None };
    for n in 0..sc.steps {
        let t = n as f64 * d;
        let u = u1.velocity(&x, t)?;
        for (xi, ui) in x.iter_mut().zip(&u) {
            *xi += d * ui;
        }
        let t_next = (n + 1) as f64 * d;
        check_finite(&x, t_next)?;
        path.t.push(t_next);
        path.x.push(x.clone());
    }
    Ok(path)
}

pub fn sample_o1o2<V, A>(u1: &V, u2: &A, x0: &[f64], sc: &SamplerConfig) -> Result<SamplePath>
where
    V: VelocityField + ?Sized,
    A: AccelerationField + ?Sized,
{
    let d = sc.step_size()?;
    let mut x = x0.to_vec();
    let mut path = SamplePath { t: vec![0.0], x: vec![x.clone()], v: None };
    for n in 0..sc.steps {
        let t = n as f64 * d;
        let u = u1.velocity(&x, t)?;
        let a = u2.acceleration(&u, &x, t)?;
        for ((xi, ui), ai) in x.iter_mut().zip(&u).zip(&a) {
            *xi += d * ui + 0.5 * d * d * ai;
        }
        let t_next = (n + 1) as f64 * d;
        check_finite(&x, t_next)?;
        path.t.push(t_next);
        path.x.push(x.clone());
    }
    Ok(path)
}

/// Lab-frame force for components `fc` at velocity `v`.
fn lab_force(fc: ForceComponents, v: &[f64], sc: &SamplerConfig) -> Result<Vec<f64>> {
    match compose_from_components(fc, v, sc.physics.perp) {
        Err(Error::DegenerateVelocity { .. }) if sc.lab_frame_fallback => Ok(vec![fc.parallel, fc.perpendicular]),
        other => other,
    }
}

fn log_mean(a: f64, b: f64) -> f64 {
    if (a - b).abs() <= 1e-12 * a.max(b) {
        0.5 * (a + b)
    } else {
        (a - b) / (a.ln() - b.ln())
    }
}

/// Advances momentum over `d` under co-moving components held fixed:
/// `|p|` changes linearly at rate `f_∥` while the direction turns at rate
/// `f_⊥ / |p|`.
fn momentum_step(v: &[f64], fc: ForceComponents, d: f64, sc: &SamplerConfig) -> Result<Vec<f64>> {
    let cfg = &sc.physics;
    if fc.is_zero() {
        return Ok(v.to_vec());
    }
    let p = momentum(v, cfg)?;
    let p_norm = norm(&p);
    if v.len() != 2 || !(norm(v) > DEGENERATE_SPEED) {
        // no co-moving frame (or not 2-D): plain impulse on the lab force
        let f = lab_force(fc, v, sc)?;
        let p_new: Vec<f64> = p.iter().zip(&f).map(|(pi, fi)| pi + d * fi).collect();
        return Ok(velocity_from_momentum(&p_new, cfg));
    }
    let p_next = p_norm + d * fc.parallel;
    if p_next <= 0.0 {
        // decelerates through rest within the step
        let f = lab_force(fc, v, sc)?;
        let p_new: Vec<f64> = p.iter().zip(&f).map(|(pi, fi)| pi + d * fi).collect();
        return Ok(velocity_from_momentum(&p_new, cfg));
    }
    let mut angle = d * fc.perpendicular / log_mean(p_norm, p_next);
    if cfg.perp == Handedness::Cw {
        angle = -angle;
    }
    let (s, c) = angle.sin_cos();
    let k = p_next / p_norm;
    let p_new = [k * (c * p[0] - s * p[1]), k * (s * p[0] + c * p[1])];
    Ok(velocity_from_momentum(&p_new, cfg))
}

fn euler_velocity_step(v: &[f64], fc: ForceComponents, d: f64, sc: &SamplerConfig) -> Result<Vec<f64>> {
    let f = lab_force(fc, v, sc)?;
    let a = acceleration_from_force(v, &f, &sc.physics)?;
    Ok(v.iter().zip(&a).map(|(vi, ai)| vi + d * ai).collect())
}

fn check_speed(v: &[f64], cfg: &PhysicsConfig) -> Result<()> {
    let s = norm(v);
    if !s.is_finite() {
        return Err(Error::NonFinite("sampler velocity".into()));
    }
    if s >= cfg.c {
        return Err(Error::SpeedOfLight { speed: s, c: cfg.c });
    }
    Ok(())
}

pub fn sample_form<F: ForceField + ?Sized>(force: &F, x0: &[f64], sc: &SamplerConfig) -> Result<SamplePath> {
    let d = sc.step_size()?;
    let mut x = x0.to_vec();
    let mut v = sc.init.resolve(x0);
    if v.len() != x.len() {
        return Err(Error::Dimension { expected: x.len(), got: v.len() });
    }
    check_speed(&v, &sc.physics)?;
    let mut path = SamplePath { t: vec![0.0], x: vec![x.clone()], v: Some(vec![v.clone()]) };
    for n in 0..sc.steps {
        let t = n as f64 * d;
        let fc = force.components(&x, t)?;
        let v_next = match sc.velocity_update {
            VelocityUpdate::Momentum => momentum_step(&v, fc, d, sc)?,
            VelocityUpdate::Euler => euler_velocity_step(&v, fc, d, sc)?,
        };
        check_speed(&v_next, &sc.physics)?;
        for ((xi, a), b) in x.iter_mut().zip(&v_next).zip(&v) {
            *xi += d * 0.5 * (a + b);
        }
        v = v_next;
        let t_next = (n + 1) as f64 * d;
        check_finite(&x, t_next)?;
        path.t.push(t_next);
        path.x.push(x.clone());
        path.v.as_mut().unwrap().push(v.clone());
    }
    Ok(path)
}

/// Classical RK4 on `(x, p)` for `ẋ = v(p)`, `ṗ = f(F(x, t), v)`.
pub fn ode_solve<F: ForceField + ?Sized>(force: &F, x0: &[f64], sc: &SamplerConfig) -> Result<SamplePath> {
    let d = sc.step_size()?;
    let dim = x0.len();
    let v0 = sc.init.resolve(x0);
    if v0.len() != dim {
        return Err(Error::Dimension { expected: dim, got: v0.len() });
    }
    let cfg = &sc.physics;
    let deriv = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let v = velocity_from_momentum(&y[dim..], cfg);
        let fc = force.components(&y[..dim], t)?;
        let f = lab_force(fc, &v, sc)?;
        Ok(v.into_iter().chain(f).collect())
    };
    let mut y: Vec<f64> = x0.iter().copied().chain(momentum(&v0, cfg)?).collect();
    let mut path = SamplePath { t: vec![0.0], x: vec![x0.to_vec()], v: Some(vec![v0]) };
    for n in 0..sc.steps {
        y = crate::ode::rk4_step(&y, n as f64 * d, d, &deriv)?;
        let t_next = (n + 1) as f64 * d;
        check_finite(&y, t_next)?;
        let v = velocity_from_momentum(&y[dim..], cfg);
        check_speed(&v, cfg)?;
        path.t.push(t_next);
        path.x.push(y[..dim].to_vec());
        path.v.as_mut().unwrap().push(v);
    }
    Ok(path)
}

/// Integrator used when sampling a [`TrainedModel`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// The method's own update rule.
    #[default]
    Native,
    /// RK4 (ForM models only).
    Rk4,
}

/// Samples `model` from `x0` using the update rule matching its method.
pub fn sample_model(model: &TrainedModel, x0: &[f64], sc: &SamplerConfig, integrator: Integrator) -> Result<SamplePath> {
    match (model.method, integrator) {
        (Method::O1, Integrator::Native) => sample_o1(model, x0, sc),
        (Method::O1o2, Integrator::Native) => sample_o1o2(model, model, x0, sc),
        (Method::Form, Integrator::Native) => sample_form(model, x0, sc),
        (Method::Form, Integrator::Rk4) => ode_solve(model, x0, sc),
        (m, Integrator::Rk4) => Err(Error::InvalidConfig(format!("RK4 sampling needs a ForM model, got {m}"))),
    }
}

/// Samples every source point on the current rayon pool, in order.
pub fn sample_batch(
    model: &TrainedModel,
    sources: &[Vec<f64>],
    sc: &SamplerConfig,
    integrator: Integrator,
) -> Result<Vec<SamplePath>> {
    sources.par_iter().map(|x0| sample_model(model, x0, sc, integrator)).collect()
}

/// Where sampler starting points come from.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceDistribution {
    /// The dataset's own source distribution.
    Dataset(Box<DatasetSpec>),
    /// `N(0, I)` in two dimensions.
    StandardNormal,
}

/// Draws `n` starting points; point `i` uses its own stream of `seed`.
/// Dataset sources whose assigned initial velocity would reach `c` are redrawn.
pub fn draw_sources(dist: &SourceDistribution, n: usize, seed: u64, c: f64) -> Result<Vec<Vec<f64>>> {
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            match dist {
                SourceDistribution::Dataset(spec) => spec.sample_admissible_source(&mut rng, c),
                SourceDistribution::StandardNormal => Ok((0..2).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()),
            }
        })
        .collect()
}
