//! Training loops for first-order flow matching (O1), first+second-order
//! flow matching (O1+O2) and Force Matching (ForM).
//!
//! All three regress a network onto per-step targets stored in the simulated
//! trajectories: O1 onto `ẋ_t`, O1+O2 additionally onto `ẍ_t` with the
//! acceleration head fed the velocity head's output, ForM onto the co-moving
//! force components `(f_∥, f_⊥)`. A training sample is a uniformly chosen
//! trajectory and grid index. Network time inputs are `t / duration`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DatasetKind, TrajectoryRecord, TrajectoryStep, UnitSystem};
use crate::error::{Error, Result};
use crate::neural::{adam_step, AdamConfig, AdamState, InitScheme, MlpParams, Workspace};
use crate::relativity::{ForceComponents, PhysicsConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    O1,
    O1o2,
    Form,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::O1, Method::O1o2, Method::Form];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::O1 => "o1",
            Method::O1o2 => "o1o2",
            Method::Form => "form",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Method::O1 => "O1",
            Method::O1o2 => "O1+O2",
            Method::Form => "ForM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "o1" => Ok(Method::O1),
            "o1o2" | "o1+o2" => Ok(Method::O1o2),
            "form" => Ok(Method::Form),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// What the force head sees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForceInput {
    #[default]
    TimeOnly,
    TimeAndPosition,
}

impl FromStr for ForceInput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time-only" => Ok(ForceInput::TimeOnly),
            "time-and-position" => Ok(ForceInput::TimeAndPosition),
            other => Err(Error::InvalidConfig(format!("unknown force input mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    /// Number of Adam steps.
    pub steps: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub force_input: ForceInput,
    pub hidden: Vec<usize>,
    /// Window length for the recorded loss curve.
    pub log_every: usize,
    /// How the acceleration loss reaches `u1` in O1+O2 training.
    #[serde(default)]
    pub o1o2_gradient: O1o2Gradient,
}

/// Whether `u2`'s loss also trains `u1` through `u2`'s velocity input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum O1o2Gradient {
    /// `u1`'s output enters `u2` as a constant; each head follows its own term.
    #[default]
    Detached,
    /// Full gradient of the summed loss, including the path through `u2`.
    Joint,
}

impl FromStr for O1o2Gradient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "detached" => Ok(O1o2Gradient::Detached),
            "joint" => Ok(O1o2Gradient::Joint),
            other => Err(Error::InvalidConfig(format!("unknown gradient mode `{other}` (detached|joint)"))),
        }
    }
}

impl TrainConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            steps: 20_000,
            batch_size: 128,
            adam: AdamConfig::default(),
            seed: 0,
            force_input: ForceInput::TimeOnly,
            hidden: vec![64, 64],
            log_every: 100,
            o1o2_gradient: O1o2Gradient::Detached,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch_size == 0 || self.log_every == 0 {
            return Err(Error::InvalidConfig("steps, batch_size and log_every must be > 0".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("hidden widths must be > 0".into()));
        }
        if !(self.adam.lr.is_finite() && self.adam.lr > 0.0) {
            return Err(Error::InvalidConfig(format!("learning rate must be positive, got {}", self.adam.lr)));
        }
        Ok(())
    }

    fn dims(&self, input: usize, output: usize) -> Vec<usize> {
        std::iter::once(input).chain(self.hidden.iter().copied()).chain(std::iter::once(output)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    /// Mean batch loss over consecutive `log_every`-step windows.
    pub loss_curve: Vec<f64>,
    pub final_loss: f64,
    pub dataset_kind: Option<DatasetKind>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub method: Method,
    /// `u1(x, t) → ẋ`.
    pub velocity: Option<MlpParams>,
    /// `u2(u1, x, t) → ẍ`.
    pub acceleration: Option<MlpParams>,
    /// `F(t) → (f_∥, f_⊥)` or `F(x, t)`.
    pub force: Option<MlpParams>,
    pub force_input: ForceInput,
    pub physics: PhysicsConfig,
    pub units: UnitSystem,
    /// Time horizon the networks were trained on; time inputs are `t / duration`.
    pub duration: f64,
    pub config: TrainConfig,
    pub meta: TrainingMeta,
}

impl TrainedModel {
    pub fn validate(&self) -> Result<()> {
        let need = |h: &Option<MlpParams>, name: &str, wanted: bool| -> Result<()> {
            match (h, wanted) {
                (Some(p), true) => p.validate(),
                (None, false) => Ok(()),
                (None, true) => Err(Error::InvalidConfig(format!("{} model is missing the {name} head", self.method))),
                (Some(_), false) => Err(Error::InvalidConfig(format!("{} model has an unexpected {name} head", self.method))),
            }
        };
        need(&self.velocity, "u1", self.method != Method::Form)?;
        need(&self.acceleration, "u2", self.method == Method::O1o2)?;
        need(&self.force, "F", self.method == Method::Form)?;
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidConfig("duration must be positive".into()));
        }
        Ok(())
    }

    fn head<'a>(&self, h: &'a Option<MlpParams>, name: &str) -> &'a MlpParams {
        h.as_ref().unwrap_or_else(|| panic!("{} model has no {name} head", self.method))
    }
}

/// A learned or analytic velocity field `u1(x, t)`.
pub trait VelocityField {
    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>>;
}

/// A learned or analytic acceleration field `u2(u1, x, t)`.
pub trait AccelerationField {
    fn acceleration(&self, u1: &[f64], x: &[f64], t: f64) -> Result<Vec<f64>>;
}

/// A learned or analytic co-moving force `F(x, t)`.
pub trait ForceField {
    fn components(&self, x: &[f64], t: f64) -> Result<ForceComponents>;
}

impl<F: Fn(&[f64], f64) -> Vec<f64>> VelocityField for F {
    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self(x, t))
    }
}

impl<F: Fn(&[f64], &[f64], f64) -> Vec<f64>> AccelerationField for F {
    fn acceleration(&self, u1: &[f64], x: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self(u1, x, t))
    }
}

impl<F: Fn(&[f64], f64) -> ForceComponents> ForceField for F {
    fn components(&self, x: &[f64], t: f64) -> Result<ForceComponents> {
        Ok(self(x, t))
    }
}

fn velocity_input(x: &[f64], tau: f64) -> Vec<f64> {
    x.iter().copied().chain(std::iter::once(tau)).collect()
}

fn acceleration_input(u1: &[f64], x: &[f64], tau: f64) -> Vec<f64> {
    u1.iter().chain(x).copied().chain(std::iter::once(tau)).collect()
}

fn force_input(mode: ForceInput, x: &[f64], tau: f64) -> Vec<f64> {
    match mode {
        ForceInput::TimeOnly => vec![tau],
        ForceInput::TimeAndPosition => velocity_input(x, tau),
    }
}

impl VelocityField for TrainedModel {
    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.head(&self.velocity, "u1").forward(&velocity_input(x, t / self.duration))
    }
}

impl AccelerationField for TrainedModel {
    fn acceleration(&self, u1: &[f64], x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.head(&self.acceleration, "u2").forward(&acceleration_input(u1, x, t / self.duration))
    }
}

impl ForceField for TrainedModel {
    fn components(&self, x: &[f64], t: f64) -> Result<ForceComponents> {
        let out = self.head(&self.force, "F").forward(&force_input(self.force_input, x, t / self.duration))?;
        Ok(ForceComponents::new(out[0], out[1]))
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn all_steps(data: &[TrajectoryRecord]) -> impl Iterator<Item = &TrajectoryStep> {
    data.iter().flat_map(|r| r.steps.iter())
}

/// Mean of `‖u1(x_t, t) − ẋ_t‖²` over every stored step.
pub fn o1_loss<V: VelocityField + ?Sized>(data: &[TrajectoryRecord], u1: &V) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in all_steps(data) {
        sum += sq_dist(&u1.velocity(&s.x, s.t)?, &s.v);
        n += 1;
    }
    Ok(sum / n.max(1) as f64)
}

/// Mean of `‖u1 − ẋ‖² + ‖u2(u1, x, t) − ẍ‖²` over every stored step.
pub fn o1o2_loss<V, A>(data: &[TrajectoryRecord], u1: &V, u2: &A) -> Result<f64>
where
    V: VelocityField + ?Sized,
    A: AccelerationField + ?Sized,
{
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in all_steps(data) {
        let v = u1.velocity(&s.x, s.t)?;
        let a = u2.acceleration(&v, &s.x, s.t)?;
        sum += sq_dist(&v, &s.v) + sq_dist(&a, &s.a);
        n += 1;
    }
    Ok(sum / n.max(1) as f64)
}

/// Mean of `‖F(x_t, t) − (f_∥, f_⊥)‖²` over every stored step.
pub fn form_loss<F: ForceField + ?Sized>(data: &[TrajectoryRecord], force: &F) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in all_steps(data) {
        let fc = force.components(&s.x, s.t)?;
        sum += (fc.parallel - s.f_par).powi(2) + (fc.perpendicular - s.f_perp).powi(2);
        n += 1;
    }
    Ok(sum / n.max(1) as f64)
}

/// Checks shape consistency and returns the shared duration.
fn check_data(data: &[TrajectoryRecord]) -> Result<f64> {
    let first = data.first().ok_or_else(|| Error::Empty("training data".into()))?;
    let len = first.steps.len();
    if len < 2 {
        return Err(Error::InvalidConfig("trajectories need at least two steps".into()));
    }
    for r in data {
        if r.steps.len() != len {
            return Err(Error::Shape(format!("trajectory {} has {} steps, expected {len}", r.index, r.steps.len())));
        }
        if r.steps.iter().any(|s| s.x.len() != 2 || s.v.len() != 2 || s.a.len() != 2) {
            return Err(Error::Dimension { expected: 2, got: r.steps[0].x.len() });
        }
    }
    Ok(first.end().t)
}

struct Head {
    params: MlpParams,
    grads: MlpParams,
    adam: AdamState,
    ws: Workspace,
}

impl Head {
    fn new(dims: &[usize], seed: u64, adam: AdamConfig) -> Result<Self> {
        let params = MlpParams::init(dims, seed, InitScheme::XavierUniform)?;
        Ok(Self { grads: params.zeros_like(), adam: AdamState::new(&params, adam), params, ws: Workspace::default() })
    }

    fn zero_grad(&mut self) {
        self.grads.values_mut().for_each(|g| *g = 0.0);
    }

    fn forward(&mut self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.params.forward_with(input, &mut self.ws)?.to_vec())
    }

    fn backward(&mut self, grad_output: &[f64]) -> Result<Vec<f64>> {
        self.params.backward_with(&mut self.ws, grad_output, &mut self.grads)
    }

    fn step(&mut self) -> Result<()> {
        adam_step(&mut self.params, &self.grads, &mut self.adam)
    }
}

/// Tracks the windowed loss curve and aborts on non-finite loss.
struct LossLog {
    window: usize,
    acc: f64,
    count: usize,
    curve: Vec<f64>,
}

impl LossLog {
    fn new(window: usize) -> Self {
        Self { window, acc: 0.0, count: 0, curve: Vec::new() }
    }

    fn push(&mut self, step: usize, loss: f64) -> Result<()> {
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at step {step}")));
        }
        self.acc += loss;
        self.count += 1;
        if self.count == self.window {
            self.curve.push(self.acc / self.count as f64);
            self.acc = 0.0;
            self.count = 0;
        }
        Ok(())
    }

    fn finish(mut self) -> (Vec<f64>, f64) {
        if self.count > 0 {
            self.curve.push(self.acc / self.count as f64);
        }
        let last = *self.curve.last().unwrap_or(&f64::NAN);
        (self.curve, last)
    }
}

/// Draws `(trajectory, step)` pairs for one batch.
fn draw_batch<'a>(rng: &mut ChaCha8Rng, data: &'a [TrajectoryRecord], batch: usize) -> Vec<&'a TrajectoryStep> {
    (0..batch)
        .map(|_| {
            let r = &data[rng.random_range(0..data.len())];
            &r.steps[rng.random_range(0..r.steps.len())]
        })
        .collect()
}

fn batch_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn finish_model(
    cfg: &TrainConfig,
    duration: f64,
    physics: PhysicsConfig,
    units: UnitSystem,
    heads: (Option<MlpParams>, Option<MlpParams>, Option<MlpParams>),
    log: LossLog,
) -> TrainedModel {
    let (loss_curve, final_loss) = log.finish();
    TrainedModel {
        method: cfg.method,
        velocity: heads.0,
        acceleration: heads.1,
        force: heads.2,
        force_input: cfg.force_input,
        physics,
        units,
        duration,
        config: cfg.clone(),
        meta: TrainingMeta { loss_curve, final_loss, dataset_kind: None },
    }
}

fn expect_method(cfg: &TrainConfig, m: Method) -> Result<()> {
    if cfg.method != m {
        return Err(Error::InvalidConfig(format!("config is for {}, not {m}", cfg.method)));
    }
    cfg.validate()
}

pub fn train_o1(data: &[TrajectoryRecord], cfg: &TrainConfig, physics: PhysicsConfig) -> Result<TrainedModel> {
    expect_method(cfg, Method::O1)?;
    let duration = check_data(data)?;
    let mut u1 = Head::new(&cfg.dims(3, 2), cfg.seed, cfg.adam)?;
    let mut rng = batch_rng(cfg.seed);
    let mut log = LossLog::new(cfg.log_every);
    let scale = 2.0 / cfg.batch_size as f64;
    for step in 0..cfg.steps {
        u1.zero_grad();
        let mut loss = 0.0;
        for s in draw_batch(&mut rng, data, cfg.batch_size) {
            let out = u1.forward(&velocity_input(&s.x, s.t / duration))?;
            let err: Vec<f64> = out.iter().zip(&s.v).map(|(o, y)| o - y).collect();
            loss += err.iter().map(|e| e * e).sum::<f64>();
            u1.backward(&err.iter().map(|e| scale * e).collect::<Vec<_>>())?;
        }
        log.push(step, loss / cfg.batch_size as f64)?;
        u1.step()?;
    }
    Ok(finish_model(cfg, duration, physics, UnitSystem::default(), (Some(u1.params), None, None), log))
}

/// Minimizes the summed velocity and acceleration losses; see
/// [`O1o2Gradient`] for how `u1` is updated.
pub fn train_o1o2(data: &[TrajectoryRecord], cfg: &TrainConfig, physics: PhysicsConfig) -> Result<TrainedModel> {
    expect_method(cfg, Method::O1o2)?;
    let duration = check_data(data)?;
    let mut u1 = Head::new(&cfg.dims(3, 2), cfg.seed, cfg.adam)?;
    let mut u2 = Head::new(&cfg.dims(5, 2), cfg.seed.wrapping_add(1), cfg.adam)?;
    let mut rng = batch_rng(cfg.seed);
    let mut log = LossLog::new(cfg.log_every);
    let scale = 2.0 / cfg.batch_size as f64;
    for step in 0..cfg.steps {
        u1.zero_grad();
        u2.zero_grad();
        let mut loss = 0.0;
        for s in draw_batch(&mut rng, data, cfg.batch_size) {
            let tau = s.t / duration;
            let vel = u1.forward(&velocity_input(&s.x, tau))?;
            let acc = u2.forward(&acceleration_input(&vel, &s.x, tau))?;
            let ev: Vec<f64> = vel.iter().zip(&s.v).map(|(o, y)| o - y).collect();
            let ea: Vec<f64> = acc.iter().zip(&s.a).map(|(o, y)| o - y).collect();
            loss += ev.iter().chain(&ea).map(|e| e * e).sum::<f64>();
            let d_in = u2.backward(&ea.iter().map(|e| scale * e).collect::<Vec<_>>())?;
            let g1: Vec<f64> = match cfg.o1o2_gradient {
                O1o2Gradient::Joint => ev.iter().zip(&d_in[..2]).map(|(e, d)| scale * e + d).collect(),
                O1o2Gradient::Detached => ev.iter().map(|e| scale * e).collect(),
            };
            u1.backward(&g1)?;
        }
        log.push(step, loss / cfg.batch_size as f64)?;
        u1.step()?;
        u2.step()?;
    }
    Ok(finish_model(cfg, duration, physics, UnitSystem::default(), (Some(u1.params), Some(u2.params), None), log))
}

pub fn train_form(data: &[TrajectoryRecord], cfg: &TrainConfig, physics: PhysicsConfig) -> Result<TrainedModel> {
    expect_method(cfg, Method::Form)?;
    let duration = check_data(data)?;
    let input_dim = match cfg.force_input {
        ForceInput::TimeOnly => 1,
        ForceInput::TimeAndPosition => 3,
    };
    let mut head = Head::new(&cfg.dims(input_dim, 2), cfg.seed, cfg.adam)?;
    let mut rng = batch_rng(cfg.seed);
    let mut log = LossLog::new(cfg.log_every);
    let scale = 2.0 / cfg.batch_size as f64;
    for step in 0..cfg.steps {
        head.zero_grad();
        let mut loss = 0.0;
        for s in draw_batch(&mut rng, data, cfg.batch_size) {
            let out = head.forward(&force_input(cfg.force_input, &s.x, s.t / duration))?;
            let err = [out[0] - s.f_par, out[1] - s.f_perp];
            loss += err[0] * err[0] + err[1] * err[1];
            head.backward(&[scale * err[0], scale * err[1]])?;
        }
        log.push(step, loss / cfg.batch_size as f64)?;
        head.step()?;
    }
    Ok(finish_model(cfg, duration, physics, UnitSystem::default(), (None, None, Some(head.params)), log))
}

/// Dispatches on `cfg.method`.
pub fn train(data: &[TrajectoryRecord], cfg: &TrainConfig, physics: PhysicsConfig) -> Result<TrainedModel> {
    match cfg.method {
        Method::O1 => train_o1(data, cfg, physics),
        Method::O1o2 => train_o1o2(data, cfg, physics),
        Method::Form => train_form(data, cfg, physics),
    }
}
