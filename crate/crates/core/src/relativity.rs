//! Special-relativity kinematics in the lab frame.
//!
//! Vectors are plain `&[f64]` slices of any dimension; the co-moving
//! parallel/perpendicular decomposition is 2-D only. A speed at or above `c`
//! is always reported as [`Error::SpeedOfLight`] and never clamped: the
//! dynamics built on these maps cannot reach `c`, so hitting it means an
//! integrator or unit bug upstream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speeds at or below this (du/s) have no usable direction.
pub const DEGENERATE_SPEED: f64 = 1e-12;

/// Orientation of the perpendicular axis relative to the velocity in 2-D.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handedness {
    /// `+90°` rotation of the velocity direction.
    #[default]
    Ccw,
    /// `-90°` rotation of the velocity direction.
    Cw,
}

impl Handedness {
    pub fn rotate(self, u: [f64; 2]) -> [f64; 2] {
        match self {
            Handedness::Ccw => [-u[1], u[0]],
            Handedness::Cw => [u[1], -u[0]],
        }
    }
}

impl std::str::FromStr for Handedness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ccw" => Ok(Handedness::Ccw),
            "cw" => Ok(Handedness::Cw),
            other => Err(Error::InvalidConfig(format!("unknown handedness `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    /// Speed of light in du/s.
    pub c: f64,
    /// Rest mass.
    pub mass: f64,
    #[serde(default)]
    pub perp: Handedness,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { c: 10.0, mass: 1.0, perp: Handedness::Ccw }
    }
}

impl PhysicsConfig {
    pub fn new(c: f64, mass: f64) -> Result<Self> {
        let cfg = Self { c, mass, perp: Handedness::Ccw };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_handedness(mut self, perp: Handedness) -> Self {
        self.perp = perp;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidConfig(format!("c must be positive, got {}", self.c)));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::InvalidConfig(format!("mass must be positive, got {}", self.mass)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleState {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

/// Force expressed in the frame co-moving with the velocity direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ForceComponents {
    pub parallel: f64,
    pub perpendicular: f64,
}

impl ForceComponents {
    pub fn new(parallel: f64, perpendicular: f64) -> Self {
        Self { parallel, perpendicular }
    }

    pub fn is_zero(&self) -> bool {
        self.parallel == 0.0 && self.perpendicular == 0.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn same_dim(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension { expected: a.len(), got: b.len() });
    }
    Ok(())
}

/// Returns `‖v‖²/c²` after checking the speed is finite and subluminal.
fn beta_sq(v: &[f64], cfg: &PhysicsConfig) -> Result<f64> {
    let speed_sq = dot(v, v);
    if !speed_sq.is_finite() {
        return Err(Error::NonFinite("velocity".into()));
    }
    let b2 = speed_sq / (cfg.c * cfg.c);
    if b2 >= 1.0 {
        return Err(Error::SpeedOfLight { speed: speed_sq.sqrt(), c: cfg.c });
    }
    Ok(b2)
}

pub fn lorentz_factor(v: &[f64], cfg: &PhysicsConfig) -> Result<f64> {
    Ok(1.0 / (1.0 - beta_sq(v, cfg)?).sqrt())
}

/// `dτ = dt / γ`.
pub fn proper_time_increment(dt: f64, gamma: f64) -> f64 {
    dt / gamma
}

/// Lab-frame momentum `m γ v`.
pub fn momentum(v: &[f64], cfg: &PhysicsConfig) -> Result<Vec<f64>> {
    let g = lorentz_factor(v, cfg)?;
    Ok(v.iter().map(|vi| cfg.mass * g * vi).collect())
}

/// Inverse of [`momentum`]. Always returns a speed strictly below `c` for
/// finite input, which makes momentum a convenient unconstrained state
/// variable for integrators.
pub fn velocity_from_momentum(p: &[f64], cfg: &PhysicsConfig) -> Vec<f64> {
    let mc = cfg.mass * cfg.c;
    let p_sq = dot(p, p);
    let denom = cfg.mass * (1.0 + p_sq / (mc * mc)).sqrt();
    p.iter().map(|pi| pi / denom).collect()
}

/// `m (γ a + γ³ ⟨v, a⟩ / c² v)`, the time derivative of `m γ v`.
pub fn relativistic_force(v: &[f64], a: &[f64], cfg: &PhysicsConfig) -> Result<Vec<f64>> {
    same_dim(v, a)?;
    let g = lorentz_factor(v, cfg)?;
    let k = g * g * g * dot(v, a) / (cfg.c * cfg.c);
    Ok(v.iter().zip(a).map(|(vi, ai)| cfg.mass * (g * ai + k * vi)).collect())
}

/// `(f − ⟨v, f⟩ / c² v) / (m γ)`: the acceleration produced by force `f`,
/// the exact inverse of [`relativistic_force`].
pub fn acceleration_from_force(v: &[f64], f: &[f64], cfg: &PhysicsConfig) -> Result<Vec<f64>> {
    same_dim(v, f)?;
    let g = lorentz_factor(v, cfg)?;
    let k = dot(v, f) / (cfg.c * cfg.c);
    let scale = 1.0 / (cfg.mass * g);
    Ok(v.iter().zip(f).map(|(vi, fi)| scale * (fi - k * vi)).collect())
}

fn unit_2d(v: &[f64]) -> Result<[f64; 2]> {
    if v.len() != 2 {
        return Err(Error::Dimension { expected: 2, got: v.len() });
    }
    let n = norm(v);
    if !(n > DEGENERATE_SPEED) {
        return Err(Error::DegenerateVelocity { speed: n });
    }
    Ok([v[0] / n, v[1] / n])
}

/// Projects `f` onto `v̂` and its rotated partner.
pub fn decompose_parallel_perp(
    f: &[f64],
    v: &[f64],
    handedness: Handedness,
) -> Result<ForceComponents> {
    same_dim(v, f)?;
    let u = unit_2d(v)?;
    let n = handedness.rotate(u);
    Ok(ForceComponents {
        parallel: f[0] * u[0] + f[1] * u[1],
        perpendicular: f[0] * n[0] + f[1] * n[1],
    })
}

/// Inverse of [`decompose_parallel_perp`].
///
/// Zero components map to the zero vector for any `v`, including `v = 0`.
pub fn compose_from_components(
    fc: ForceComponents,
    v: &[f64],
    handedness: Handedness,
) -> Result<Vec<f64>> {
    if v.len() != 2 {
        return Err(Error::Dimension { expected: 2, got: v.len() });
    }
    if fc.is_zero() {
        return Ok(vec![0.0; 2]);
    }
    let u = unit_2d(v)?;
    let n = handedness.rotate(u);
    Ok(vec![
        fc.parallel * u[0] + fc.perpendicular * n[0],
        fc.parallel * u[1] + fc.perpendicular * n[1],
    ])
}

/// Analytic `d/dt (½‖v‖²) = ⟨f, v⟩ / (m γ) · (1 − ‖v‖²/c²)` under the
/// relativistic equation of motion.
pub fn speed_sq_derivative(v: &[f64], f: &[f64], cfg: &PhysicsConfig) -> Result<f64> {
    same_dim(v, f)?;
    let b2 = beta_sq(v, cfg)?;
    let g = 1.0 / (1.0 - b2).sqrt();
    Ok(dot(f, v) / (cfg.mass * g) * (1.0 - b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_c() -> PhysicsConfig {
        PhysicsConfig::new(1.0, 1.0).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn lorentz_factor_values() {
        let cfg = PhysicsConfig::default();
        assert_eq!(lorentz_factor(&[0.0, 0.0], &cfg).unwrap(), 1.0);
        assert!((lorentz_factor(&[6.0, 0.0], &cfg).unwrap() - 1.25).abs() < 1e-15);
        assert!(lorentz_factor(&[9.99, 0.0], &cfg).unwrap() > 22.3);
    }

    #[test]
    fn lorentz_factor_rejects_superluminal() {
        let cfg = PhysicsConfig::default();
        assert!(matches!(lorentz_factor(&[10.0, 0.0], &cfg), Err(Error::SpeedOfLight { .. })));
        assert!(matches!(lorentz_factor(&[8.0, 8.0], &cfg), Err(Error::SpeedOfLight { .. })));
        assert!(matches!(lorentz_factor(&[f64::NAN, 0.0], &cfg), Err(Error::NonFinite(_))));
    }

    #[test]
    fn proper_time() {
        assert_eq!(proper_time_increment(1.0, 1.0), 1.0);
        assert!((proper_time_increment(1.0, 1.25) - 0.8).abs() < 1e-15);
        assert_eq!(proper_time_increment(0.0, 5.0), 0.0);
    }

    #[test]
    fn momentum_values() {
        let cfg = PhysicsConfig::default();
        assert_eq!(momentum(&[0.0, 0.0], &cfg).unwrap(), vec![0.0, 0.0]);
        assert!(close(&momentum(&[6.0, 0.0], &cfg).unwrap(), &[7.5, 0.0], 1e-14));
        let heavy = PhysicsConfig::new(10.0, 2.0).unwrap();
        assert!(close(&momentum(&[0.0, 6.0], &heavy).unwrap(), &[0.0, 15.0], 1e-14));
    }

    #[test]
    fn momentum_inverse() {
        let cfg = PhysicsConfig::new(10.0, 2.0).unwrap();
        let v = [3.0, -7.0];
        let back = velocity_from_momentum(&momentum(&v, &cfg).unwrap(), &cfg);
        assert!(close(&back, &v, 1e-13));
    }

    #[test]
    fn force_examples() {
        let cfg = PhysicsConfig::default();
        assert!(close(&relativistic_force(&[0.0, 0.0], &[3.0, 4.0], &cfg).unwrap(), &[3.0, 4.0], 0.0));
        let f = relativistic_force(&[0.6, 0.0], &[0.0, 1.0], &unit_c()).unwrap();
        assert!(close(&f, &[0.0, 1.25], 1e-14));
        let f = relativistic_force(&[0.6, 0.0], &[1.0, 0.0], &unit_c()).unwrap();
        assert!(close(&f, &[1.953125, 0.0], 1e-14));
    }

    #[test]
    fn acceleration_examples() {
        let cfg = PhysicsConfig::default();
        assert!(close(&acceleration_from_force(&[0.0, 0.0], &[3.0, 4.0], &cfg).unwrap(), &[3.0, 4.0], 0.0));
        let a = acceleration_from_force(&[0.6, 0.0], &[1.953125, 0.0], &unit_c()).unwrap();
        assert!(close(&a, &[1.0, 0.0], 1e-14));
    }

    #[test]
    fn force_is_lab_time_derivative_of_momentum() {
        // v(t) = 0.8c (cos 3t, sin 3t) · (1 − 0.2 t), a(t) analytic.
        let cfg = PhysicsConfig::default();
        let vel = |t: f64| {
            let s = 8.0 * (1.0 - 0.2 * t);
            vec![s * (3.0 * t).cos(), s * (3.0 * t).sin()]
        };
        let acc = |t: f64| {
            let s = 8.0 * (1.0 - 0.2 * t);
            let ds = -1.6;
            vec![
                ds * (3.0 * t).cos() - 3.0 * s * (3.0 * t).sin(),
                ds * (3.0 * t).sin() + 3.0 * s * (3.0 * t).cos(),
            ]
        };
        let h = 1e-6;
        for k in 0..20 {
            let t = 0.05 * k as f64;
            let hi = momentum(&vel(t + h), &cfg).unwrap();
            let lo = momentum(&vel(t - h), &cfg).unwrap();
            let numeric: Vec<f64> = hi.iter().zip(&lo).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let f = relativistic_force(&vel(t), &acc(t), &cfg).unwrap();
            let diff: Vec<f64> = numeric.iter().zip(&f).map(|(a, b)| a - b).collect();
            assert!(norm(&diff) / norm(&f) < 1e-5, "t = {t}");
        }
    }

    #[test]
    fn decomposition_examples() {
        let h = Handedness::Ccw;
        assert_eq!(decompose_parallel_perp(&[5.0, 0.0], &[1.0, 0.0], h).unwrap(), ForceComponents::new(5.0, 0.0));
        assert_eq!(decompose_parallel_perp(&[0.0, 5.0], &[1.0, 0.0], h).unwrap(), ForceComponents::new(0.0, 5.0));
        assert_eq!(decompose_parallel_perp(&[3.0, 4.0], &[0.0, 2.0], h).unwrap(), ForceComponents::new(4.0, -3.0));
        // clockwise flips the perpendicular sign
        let cw = decompose_parallel_perp(&[3.0, 4.0], &[0.0, 2.0], Handedness::Cw).unwrap();
        assert_eq!(cw, ForceComponents::new(4.0, 3.0));
    }

    #[test]
    fn composition_examples() {
        let h = Handedness::Ccw;
        assert_eq!(compose_from_components(ForceComponents::new(5.0, 0.0), &[1.0, 0.0], h).unwrap(), vec![5.0, 0.0]);
        let f = compose_from_components(ForceComponents::new(4.0, -3.0), &[0.0, 2.0], h).unwrap();
        assert!(close(&f, &[3.0, 4.0], 1e-15));
        for v in [[0.0, 0.0], [2.0, -1.0]] {
            assert_eq!(compose_from_components(ForceComponents::default(), &v, h).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn degenerate_velocity_refused() {
        let h = Handedness::Ccw;
        assert!(matches!(
            decompose_parallel_perp(&[1.0, 0.0], &[1e-13, 0.0], h),
            Err(Error::DegenerateVelocity { .. })
        ));
        assert!(matches!(
            compose_from_components(ForceComponents::new(1.0, 0.0), &[0.0, 0.0], h),
            Err(Error::DegenerateVelocity { .. })
        ));
        assert!(matches!(
            decompose_parallel_perp(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], h),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn speed_sq_derivative_values() {
        let cfg = PhysicsConfig::default();
        assert_eq!(speed_sq_derivative(&[0.0, 0.0], &[4.0, -2.0], &cfg).unwrap(), 0.0);
        let d = speed_sq_derivative(&[0.6, 0.0], &[1.0, 0.0], &unit_c()).unwrap();
        assert!((d - 0.3072).abs() < 1e-15);
        let near = [10.0 * (1.0 - 1e-12), 0.0];
        let d = speed_sq_derivative(&near, &[1.0, 0.0], &cfg).unwrap();
        assert!(d > 0.0 && d < 1e-15);
    }

    #[test]
    fn speed_sq_derivative_matches_velocity_dot_acceleration() {
        let cfg = PhysicsConfig::default();
        let v = [3.0, -4.5];
        let f = [1.5, 2.0];
        let a = acceleration_from_force(&v, &f, &cfg).unwrap();
        let d = speed_sq_derivative(&v, &f, &cfg).unwrap();
        assert!((d - dot(&v, &a)).abs() < 1e-14);
    }

    fn subluminal_velocity() -> impl Strategy<Value = Vec<f64>> {
        (0.0..0.99f64, 0.0..std::f64::consts::TAU).prop_map(|(beta, th)| {
            vec![10.0 * beta * th.cos(), 10.0 * beta * th.sin()]
        })
    }

    proptest! {
        #[test]
        fn gamma_at_least_one(v in subluminal_velocity()) {
            let g = lorentz_factor(&v, &PhysicsConfig::default()).unwrap();
            prop_assert!(g >= 1.0);
            if norm(&v) > 1e-6 {
                prop_assert!(g > 1.0);
            }
        }

        #[test]
        fn force_acceleration_round_trip(v in subluminal_velocity(), ax in -50.0..50.0f64, ay in -50.0..50.0f64) {
            let cfg = PhysicsConfig::default();
            let a = [ax, ay];
            let f = relativistic_force(&v, &a, &cfg).unwrap();
            let back = acceleration_from_force(&v, &f, &cfg).unwrap();
            let err = norm(&[back[0] - ax, back[1] - ay]);
            prop_assert!(err <= 1e-9 * norm(&a).max(1e-300));
        }

        #[test]
        fn compose_inverts_decompose(v in subluminal_velocity(), fx in -50.0..50.0f64, fy in -50.0..50.0f64) {
            prop_assume!(norm(&v) > DEGENERATE_SPEED);
            for h in [Handedness::Ccw, Handedness::Cw] {
                let fc = decompose_parallel_perp(&[fx, fy], &v, h).unwrap();
                let f = compose_from_components(fc, &v, h).unwrap();
                prop_assert!((f[0] - fx).abs() <= 1e-12 * (1.0 + fx.abs()));
                prop_assert!((f[1] - fy).abs() <= 1e-12 * (1.0 + fy.abs()));
            }
        }

        #[test]
        fn speed_sq_derivative_sign_follows_power(v in subluminal_velocity(), fx in -5.0..5.0f64, fy in -5.0..5.0f64) {
            let f = [fx, fy];
            let d = speed_sq_derivative(&v, &f, &PhysicsConfig::default()).unwrap();
            let p = dot(&f, &v);
            if p <= 0.0 {
                prop_assert!(d <= 0.0);
            }
            prop_assert_eq!(d.partial_cmp(&0.0), p.partial_cmp(&0.0));
        }
    }
}
