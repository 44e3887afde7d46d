//! Stochastic-interpolation schedules `x_t = α_t x1 + σ_t x0` and the
//! closed-form relativistic force along the TrigFlow path.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::relativity::PhysicsConfig;

/// A pair of coefficient functions with `α(0)=0, σ(0)=1, α(T)=1, σ(T)=0`,
/// supplied together with their first and second derivatives.
pub trait Schedule {
    fn terminal(&self) -> f64;
    fn alpha(&self, t: f64) -> f64;
    fn sigma(&self, t: f64) -> f64;
    fn alpha_dot(&self, t: f64) -> f64;
    fn sigma_dot(&self, t: f64) -> f64;
    fn alpha_ddot(&self, t: f64) -> f64;
    fn sigma_ddot(&self, t: f64) -> f64;
}

/// `α = t/T`, `σ = 1 − t/T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linear {
    pub terminal: f64,
}

impl Default for Linear {
    fn default() -> Self {
        Self { terminal: 1.0 }
    }
}

impl Schedule for Linear {
    fn terminal(&self) -> f64 {
        self.terminal
    }
    fn alpha(&self, t: f64) -> f64 {
        t / self.terminal
    }
    fn sigma(&self, t: f64) -> f64 {
        1.0 - t / self.terminal
    }
    fn alpha_dot(&self, _t: f64) -> f64 {
        1.0 / self.terminal
    }
    fn sigma_dot(&self, _t: f64) -> f64 {
        -1.0 / self.terminal
    }
    fn alpha_ddot(&self, _t: f64) -> f64 {
        0.0
    }
    fn sigma_ddot(&self, _t: f64) -> f64 {
        0.0
    }
}

/// `α = sin t`, `σ = cos t` on `[0, π/2]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrigFlow;

impl Schedule for TrigFlow {
    fn terminal(&self) -> f64 {
        FRAC_PI_2
    }
    fn alpha(&self, t: f64) -> f64 {
        t.sin()
    }
    fn sigma(&self, t: f64) -> f64 {
        t.cos()
    }
    fn alpha_dot(&self, t: f64) -> f64 {
        t.cos()
    }
    fn sigma_dot(&self, t: f64) -> f64 {
        -t.sin()
    }
    fn alpha_ddot(&self, t: f64) -> f64 {
        -t.sin()
    }
    fn sigma_ddot(&self, t: f64) -> f64 {
        -t.cos()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Interpolated {
    pub x: Vec<f64>,
    pub x_dot: Vec<f64>,
    pub x_ddot: Vec<f64>,
}

fn check_time(t: f64, hi: f64) -> Result<()> {
    if !(0.0..=hi).contains(&t) {
        return Err(Error::OutOfRange { t, lo: 0.0, hi });
    }
    Ok(())
}

fn combine(a: f64, x1: &[f64], s: f64, x0: &[f64]) -> Vec<f64> {
    x1.iter().zip(x0).map(|(p, q)| a * p + s * q).collect()
}

pub fn interpolate<S: Schedule + ?Sized>(
    x0: &[f64],
    x1: &[f64],
    t: f64,
    schedule: &S,
) -> Result<Interpolated> {
    check_time(t, schedule.terminal())?;
    if x0.len() != x1.len() {
        return Err(Error::Dimension { expected: x0.len(), got: x1.len() });
    }
    Ok(Interpolated {
        x: combine(schedule.alpha(t), x1, schedule.sigma(t), x0),
        x_dot: combine(schedule.alpha_dot(t), x1, schedule.sigma_dot(t), x0),
        x_ddot: combine(schedule.alpha_ddot(t), x1, schedule.sigma_ddot(t), x0),
    })
}

/// Flow-matching regression target `α̇_t x1 + σ̇_t x0`.
pub fn fm_target_velocity<S: Schedule + ?Sized>(
    x0: &[f64],
    x1: &[f64],
    t: f64,
    schedule: &S,
) -> Result<Vec<f64>> {
    check_time(t, schedule.terminal())?;
    if x0.len() != x1.len() {
        return Err(Error::Dimension { expected: x0.len(), got: x1.len() });
    }
    Ok(combine(schedule.alpha_dot(t), x1, schedule.sigma_dot(t), x0))
}

/// Relativistic force needed to move a particle along the TrigFlow path,
/// `m (γ ẍ + γ³ ⟨ẋ, ẍ⟩ / c² ẋ)` with `ẋ = cos t x1 − sin t x0` and
/// `ẍ = −x_t`.
pub fn trigflow_force(x0: &[f64], x1: &[f64], t: f64, cfg: &PhysicsConfig) -> Result<Vec<f64>> {
    check_time(t, FRAC_PI_2)?;
    if x0.len() != x1.len() {
        return Err(Error::Dimension { expected: x0.len(), got: x1.len() });
    }
    let (s, c) = t.sin_cos();
    let vel: Vec<f64> = x1.iter().zip(x0).map(|(p, q)| c * p - s * q).collect();
    let acc: Vec<f64> = x1.iter().zip(x0).map(|(p, q)| -(s * p + c * q)).collect();
    let speed_sq: f64 = vel.iter().map(|v| v * v).sum();
    let c2 = cfg.c * cfg.c;
    if !speed_sq.is_finite() {
        return Err(Error::NonFinite("trigflow path velocity".into()));
    }
    if speed_sq >= c2 {
        return Err(Error::SpeedOfLight { speed: speed_sq.sqrt(), c: cfg.c });
    }
    let gamma = 1.0 / (1.0 - speed_sq / c2).sqrt();
    let power: f64 = vel.iter().zip(&acc).map(|(v, a)| v * a).sum();
    let k = gamma * gamma * gamma * power / c2;
    Ok(acc.iter().zip(&vel).map(|(a, v)| cfg.mass * (gamma * a + k * v)).collect())
}
