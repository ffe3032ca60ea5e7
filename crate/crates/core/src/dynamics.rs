//! Unicycle model of a tracked vehicle and its forward-Euler discretization.
//!
//! Positions are (North, East), heading 0 faces North and grows clockwise.

use serde::{Deserialize, Serialize};

use crate::geometry::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// (North, East) position in meters.
    pub position: [f64; 2],
    /// Heading in radians, kept in `(-π, π]`.
    pub heading: f64,
    /// Orbital velocity in m/s.
    pub speed: f64,
}

impl VehicleState {
    pub fn new(position: [f64; 2], heading: f64, speed: f64) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
            speed,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position[0].is_finite()
            && self.position[1].is_finite()
            && self.heading.is_finite()
            && self.speed.is_finite()
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        (self.position[0] - p[0]).hypot(self.position[1] - p[1])
    }
}

/// Throttle and spin, both dimensionless in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub throttle: f64,
    pub spin: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput {
        throttle: 0.0,
        spin: 0.0,
    };

    /// Clamps both channels into `[-1, 1]`.
    pub fn new(throttle: f64, spin: f64) -> Self {
        Self {
            throttle: throttle.clamp(-1.0, 1.0),
            spin: spin.clamp(-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Heading rate per unit spin (rad/s).
    pub alpha: f64,
    /// Velocity time constant inverse (1/s).
    pub beta: f64,
    /// Maximum velocity (m/s).
    pub v_max: f64,
    /// Euler step (s).
    pub dt: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("v_max", self.v_max)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(format!("{name} must be finite and >= 0"));
            }
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err("dt must be finite and > 0".into());
        }
        Ok(())
    }

    /// Copy with every physical coefficient scaled by `(1 + factor)`.
    pub fn perturbed(&self, factor: [f64; 3]) -> Self {
        Self {
            alpha: self.alpha * (1.0 + factor[0]),
            beta: self.beta * (1.0 + factor[1]),
            v_max: self.v_max * (1.0 + factor[2]),
            dt: self.dt,
        }
    }
}

/// Time derivative `(ċ1, ċ2, θ̇, v̇)`.
pub fn derivative(z: &VehicleState, u: &ControlInput, m: &ModelParams) -> [f64; 4] {
    let (s, c) = z.heading.sin_cos();
    [
        z.speed * c,
        z.speed * s,
        m.alpha * u.spin,
        m.beta * (u.throttle * m.v_max - z.speed),
    ]
}

/// `z + dt · ż`, heading re-wrapped.
pub fn euler_step(z: &VehicleState, u: &ControlInput, m: &ModelParams) -> VehicleState {
    let d = derivative(z, u, m);
    VehicleState {
        position: [z.position[0] + m.dt * d[0], z.position[1] + m.dt * d[1]],
        heading: wrap_angle(z.heading + m.dt * d[2]),
        speed: z.speed + m.dt * d[3],
    }
}

/// `steps` Euler steps with `u` held constant.
pub fn rollout(z: &VehicleState, u: &ControlInput, m: &ModelParams, steps: usize) -> VehicleState {
    (0..steps).fold(*z, |acc, _| euler_step(&acc, u, m))
}

/// Vector-Jacobian product of [`euler_step`].
///
/// Given the adjoint `adj` of the next state (ordered `c1, c2, θ, v`),
/// returns the adjoints of the current state and of the input `(r, s)`.
pub(crate) fn euler_step_vjp(
    z: &VehicleState,
    m: &ModelParams,
    adj: [f64; 4],
) -> ([f64; 4], [f64; 2]) {
    let (s, c) = z.heading.sin_cos();
    let t = m.dt;
    let dz = [
        adj[0],
        adj[1],
        adj[2] + t * z.speed * (-s * adj[0] + c * adj[1]),
        t * (c * adj[0] + s * adj[1]) + (1.0 - t * m.beta) * adj[3],
    ];
    let du = [t * m.beta * m.v_max * adj[3], t * m.alpha * adj[2]];
    (dz, du)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sim_params(dt: f64) -> ModelParams {
        ModelParams {
            alpha: 1.0,
            beta: 0.2,
            v_max: 1.0,
            dt,
        }
    }

    fn state_diff(a: &VehicleState, b: &VehicleState) -> f64 {
        let dth = wrap_angle(a.heading - b.heading);
        ((a.position[0] - b.position[0]).powi(2)
            + (a.position[1] - b.position[1]).powi(2)
            + dth * dth
            + (a.speed - b.speed).powi(2))
        .sqrt()
    }

    #[test]
    fn derivative_examples() {
        let z = VehicleState::new([0.0, 0.0], 0.0, 1.0);
        assert_eq!(derivative(&z, &ControlInput::ZERO, &sim_params(0.1)), [1.0, 0.0, 0.0, -0.2]);
        let rest = VehicleState::new([3.0, -1.0], 0.5, 0.0);
        assert_eq!(derivative(&rest, &ControlInput::ZERO, &sim_params(0.1)), [0.0; 4]);
        let z = VehicleState::new([0.0, 0.0], PI / 2.0, 2.0);
        let d = derivative(&z, &ControlInput::ZERO, &sim_params(0.1));
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn euler_step_examples() {
        let z = VehicleState::new([1.0, 2.0], 0.3, 0.7);
        let u = ControlInput::new(0.4, -0.2);
        assert_eq!(euler_step(&z, &u, &sim_params(0.0)), z);

        let z = VehicleState::new([0.0, 0.0], 0.0, 1.0);
        let next = euler_step(&z, &ControlInput::ZERO, &sim_params(0.1));
        assert_abs_diff_eq!(next.position[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(next.position[1], 0.0, epsilon = 1e-15);
        assert_eq!(next.heading, 0.0);
        assert_abs_diff_eq!(next.speed, 0.98, epsilon = 1e-15);
    }

    #[test]
    fn euler_is_first_order() {
        let z = VehicleState::new([0.0, 0.0], 0.4, 0.8);
        let u = ControlInput::new(0.6, 0.5);
        let err = |t: f64| {
            let full = euler_step(&z, &u, &sim_params(t));
            let half = rollout(&z, &u, &sim_params(t / 2.0), 2);
            state_diff(&full, &half)
        };
        // Halving T must divide the discrepancy by ~4.
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        assert!(err(0.1) > 0.0);
    }

    #[test]
    fn rollout_examples() {
        let m = sim_params(0.1);
        let z = VehicleState::new([1.0, -1.0], 2.0, 0.3);
        let u = ControlInput::new(0.9, -0.4);
        assert_eq!(rollout(&z, &u, &m, 0), z);
        assert_eq!(rollout(&z, &u, &m, 1), euler_step(&z, &u, &m));
        let mut manual = z;
        for _ in 0..10 {
            manual = euler_step(&manual, &u, &m);
        }
        assert_eq!(rollout(&z, &u, &m, 10), manual);
    }

    #[test]
    fn vjp_matches_finite_differences() {
        let m = sim_params(0.1);
        let z = VehicleState::new([0.5, -0.3], 0.7, 0.6);
        let u = ControlInput::new(0.3, -0.8);
        let adj = [0.3, -1.2, 0.8, 2.0];
        let f = |z: &VehicleState, u: &ControlInput| {
            let n = euler_step(z, u, &m);
            adj[0] * n.position[0] + adj[1] * n.position[1] + adj[2] * n.heading + adj[3] * n.speed
        };
        let (dz, du) = euler_step_vjp(&z, &m, adj);
        let h = 1e-6;
        let perturb = |i: usize, d: f64| {
            let mut p = z;
            match i {
                0 => p.position[0] += d,
                1 => p.position[1] += d,
                2 => p.heading += d,
                _ => p.speed += d,
            }
            p
        };
        for i in 0..4 {
            let fd = (f(&perturb(i, h), &u) - f(&perturb(i, -h), &u)) / (2.0 * h);
            assert_abs_diff_eq!(dz[i], fd, epsilon = 1e-7);
        }
        let fd_r = (f(&z, &ControlInput { throttle: u.throttle + h, ..u })
            - f(&z, &ControlInput { throttle: u.throttle - h, ..u }))
            / (2.0 * h);
        let fd_s = (f(&z, &ControlInput { spin: u.spin + h, ..u })
            - f(&z, &ControlInput { spin: u.spin - h, ..u }))
            / (2.0 * h);
        assert_abs_diff_eq!(du[0], fd_r, epsilon = 1e-7);
        assert_abs_diff_eq!(du[1], fd_s, epsilon = 1e-7);
    }

    proptest! {
        #[test]
        fn rollout_composes(i in 0usize..20, j in 0usize..20, th in -PI..PI, v in -1.0..1.0f64,
                            r in -1.0..1.0f64, s in -1.0..1.0f64) {
            let m = sim_params(0.1);
            let z = VehicleState::new([0.0, 0.0], th, v);
            let u = ControlInput::new(r, s);
            let a = rollout(&z, &u, &m, i + j);
            let b = rollout(&rollout(&z, &u, &m, i), &u, &m, j);
            prop_assert!(state_diff(&a, &b) < 1e-9);
        }

        #[test]
        fn speed_contracts_towards_setpoint(v in -2.0..2.0f64, r in -1.0..1.0f64) {
            let m = sim_params(0.1);
            let z = VehicleState::new([0.0, 0.0], 0.0, v);
            let n = euler_step(&z, &ControlInput::new(r, 0.0), &m);
            let lhs = (n.speed - r * m.v_max).abs();
            let rhs = (1.0 - m.beta * m.dt).abs() * (v - r * m.v_max).abs();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn wrap_preserves_trig(th in -100.0..100.0f64) {
            let w = wrap_angle(th);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!((w.cos() - th.cos()).abs() < 1e-9);
            prop_assert!((w.sin() - th.sin()).abs() < 1e-9);
        }
    }
}
