//! Superellipsoid sets in the plane, their support functions and
//! separating-axis certificates.
//!
//! A superellipsoid is the image of the unit p-norm ball under
//! `x -> R(θ) S x + c` with `S = diag(s1, s2)`. Its support function is
//! `‖S R(θ)ᵀ a‖_q + ⟨a, c⟩` with `1/p + 1/q = 1`, which makes the
//! separation test between two such sets a closed-form expression in the
//! axis `a`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used by [`Superellipsoid::contains`].
pub const CONTAINS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("exponent must be >= 2, got {0}")]
    ExponentTooSmall(f64),
    #[error("semi-axes must be positive and finite, got ({0}, {1})")]
    InvalidSemiAxes(f64, f64),
    #[error("center and heading must be finite")]
    NonFinitePose,
    #[error("axis must be a nonzero finite vector")]
    DegenerateAxis,
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let w = (theta + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Conjugate exponent `q = p / (p - 1)`.
pub fn dual_exponent(p: f64) -> Result<f64, GeometryError> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(GeometryError::ExponentTooSmall(p));
    }
    Ok(p / (p - 1.0))
}

#[inline]
fn abs_pow(x: f64, e: f64) -> f64 {
    let x = x.abs();
    if e == 2.0 {
        x * x
    } else if e == 1.5 {
        x * x.sqrt()
    } else if e == 3.0 {
        x * x * x
    } else {
        x.powf(e)
    }
}

/// `‖v‖_e` for a plane vector, with fast paths for the exponents used in practice.
#[inline]
pub fn lp_norm(v: [f64; 2], e: f64) -> f64 {
    if e == 2.0 {
        return v[0].hypot(v[1]);
    }
    let s = abs_pow(v[0], e) + abs_pow(v[1], e);
    if s == 0.0 {
        return 0.0;
    }
    if e == 1.5 {
        (s * s).cbrt()
    } else if e == 3.0 {
        s.cbrt()
    } else {
        s.powf(1.0 / e)
    }
}

/// Norm value and its gradient with respect to `v`.
///
/// At the origin the norm is not differentiable; the zero vector is
/// returned as a subgradient.
#[inline]
pub(crate) fn lp_norm_grad(v: [f64; 2], e: f64) -> (f64, [f64; 2]) {
    let n = lp_norm(v, e);
    if n == 0.0 {
        return (0.0, [0.0, 0.0]);
    }
    if e == 2.0 {
        return (n, [v[0] / n, v[1] / n]);
    }
    let g = |x: f64| x.signum() * abs_pow(x / n, e - 1.0);
    (n, [g(v[0]), g(v[1])])
}

#[inline]
pub(crate) fn rotate(theta: f64, x: [f64; 2]) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * x[0] - s * x[1], s * x[0] + c * x[1]]
}

#[inline]
pub(crate) fn rotate_transpose(theta: f64, x: [f64; 2]) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * x[0] + s * x[1], -s * x[0] + c * x[1]]
}

#[inline]
pub(crate) fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Radius of the smallest origin-centred disk containing the unit p-ball.
fn unit_ball_circumradius(p: f64) -> f64 {
    2f64.powf(0.5 - 1.0 / p)
}

#[derive(Deserialize)]
struct RawSuperellipsoid {
    center: [f64; 2],
    heading: f64,
    semi_axes: [f64; 2],
    exponent: f64,
}

/// `{ R(θ) S x + c : ‖x‖_p ≤ 1 }` in the (North, East) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSuperellipsoid")]
pub struct Superellipsoid {
    center: [f64; 2],
    heading: f64,
    semi_axes: [f64; 2],
    exponent: f64,
}

impl TryFrom<RawSuperellipsoid> for Superellipsoid {
    type Error = GeometryError;

    fn try_from(raw: RawSuperellipsoid) -> Result<Self, Self::Error> {
        Superellipsoid::new(raw.center, raw.heading, raw.semi_axes, raw.exponent)
    }
}

impl Superellipsoid {
    /// Validated constructor. The heading is wrapped into `(-π, π]`.
    pub fn new(
        center: [f64; 2],
        heading: f64,
        semi_axes: [f64; 2],
        exponent: f64,
    ) -> Result<Self, GeometryError> {
        dual_exponent(exponent)?;
        let [s1, s2] = semi_axes;
        if !(s1 > 0.0 && s2 > 0.0 && s1.is_finite() && s2.is_finite()) {
            return Err(GeometryError::InvalidSemiAxes(s1, s2));
        }
        if !(center[0].is_finite() && center[1].is_finite() && heading.is_finite()) {
            return Err(GeometryError::NonFinitePose);
        }
        Ok(Self {
            center,
            heading: wrap_angle(heading),
            semi_axes,
            exponent,
        })
    }

    /// Same shape placed at another pose.
    pub fn with_pose(&self, center: [f64; 2], heading: f64) -> Self {
        Self {
            center,
            heading: wrap_angle(heading),
            ..*self
        }
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn semi_axes(&self) -> [f64; 2] {
        self.semi_axes
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn dual_exponent(&self) -> f64 {
        self.exponent / (self.exponent - 1.0)
    }

    /// Membership test by mapping `x` back into the unit ball.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let d = rotate_transpose(
            self.heading,
            [x[0] - self.center[0], x[1] - self.center[1]],
        );
        let local = [d[0] / self.semi_axes[0], d[1] / self.semi_axes[1]];
        lp_norm(local, self.exponent) <= 1.0 + CONTAINS_TOL
    }

    /// Support value of the centred set, `‖S R(θ)ᵀ a‖_q`.
    pub fn centered_support(&self, a: [f64; 2]) -> f64 {
        let w = rotate_transpose(self.heading, a);
        lp_norm(
            [self.semi_axes[0] * w[0], self.semi_axes[1] * w[1]],
            self.dual_exponent(),
        )
    }

    /// `sup { ⟨a, x⟩ : x ∈ X }`.
    pub fn support(&self, a: [f64; 2]) -> f64 {
        self.centered_support(a) + dot(a, self.center)
    }

    /// Maps a point of the unit p-ball into the set.
    pub fn from_unit_ball(&self, x: [f64; 2]) -> [f64; 2] {
        let r = rotate(
            self.heading,
            [self.semi_axes[0] * x[0], self.semi_axes[1] * x[1]],
        );
        [r[0] + self.center[0], r[1] + self.center[1]]
    }

    /// Boundary point at parameter `t` via the signed-power map.
    pub fn boundary_point(&self, t: f64) -> [f64; 2] {
        self.from_unit_ball(unit_ball_boundary(t, self.exponent))
    }

    /// `n` boundary points, uniform in the angle parameter.
    pub fn boundary_points(&self, n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|k| self.boundary_point(TAU * k as f64 / n as f64))
            .collect()
    }

    /// Radius of a disk around the center that contains the whole set.
    pub fn circumradius(&self) -> f64 {
        self.semi_axes[0].max(self.semi_axes[1]) * unit_ball_circumradius(self.exponent)
    }
}

/// Point on the boundary of the unit p-ball,
/// `(sign(cos t)|cos t|^(2/p), sign(sin t)|sin t|^(2/p))`.
pub fn unit_ball_boundary(t: f64, p: f64) -> [f64; 2] {
    let (s, c) = t.sin_cos();
    let e = 2.0 / p;
    [c.signum() * c.abs().powf(e), s.signum() * s.abs().powf(e)]
}

/// Unit vector `a` used as a candidate separating direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatingAxis([f64; 2]);

impl SeparatingAxis {
    /// Normalizes `a`; fails on zero or non-finite input.
    pub fn new(a: [f64; 2]) -> Result<Self, GeometryError> {
        let n = a[0].hypot(a[1]);
        if !(n > 1e-12) || !n.is_finite() {
            return Err(GeometryError::DegenerateAxis);
        }
        Ok(Self([a[0] / n, a[1] / n]))
    }

    pub fn from_angle(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self([c, s])
    }

    pub fn vector(&self) -> [f64; 2] {
        self.0
    }
}

/// `‖S^v R_vᵀ a‖_q + ‖S^e R_eᵀ a‖_q + ⟨a, c^v − c^e⟩`.
///
/// A value `<= 0` certifies that `vehicle` and `obstacle` do not intersect.
pub fn separation_margin(vehicle: &Superellipsoid, obstacle: &Superellipsoid, axis: &SeparatingAxis) -> f64 {
    separation_margin_raw(vehicle, obstacle, axis.0)
}

pub(crate) fn separation_margin_raw(vehicle: &Superellipsoid, obstacle: &Superellipsoid, a: [f64; 2]) -> f64 {
    let dc = [
        vehicle.center[0] - obstacle.center[0],
        vehicle.center[1] - obstacle.center[1],
    ];
    vehicle.centered_support(a) + obstacle.centered_support(a) + dot(a, dc)
}

/// Axis of minimum margin on a uniform angle grid, with its margin.
pub fn best_axis(
    vehicle: &Superellipsoid,
    obstacle: &Superellipsoid,
    angular_resolution: f64,
) -> (SeparatingAxis, f64) {
    let n = ((TAU / angular_resolution).ceil() as usize).max(8);
    let mut best = (0.0, f64::INFINITY);
    for k in 0..n {
        let phi = TAU * k as f64 / n as f64;
        let m = separation_margin_raw(vehicle, obstacle, SeparatingAxis::from_angle(phi).0);
        if m < best.1 {
            best = (phi, m);
        }
    }
    (SeparatingAxis::from_angle(best.0), best.1)
}

/// Sweeps the unit circle and returns the best axis if it certifies separation.
pub fn find_separating_axis(
    vehicle: &Superellipsoid,
    obstacle: &Superellipsoid,
    angular_resolution: f64,
) -> Option<SeparatingAxis> {
    let (axis, margin) = best_axis(vehicle, obstacle, angular_resolution);
    (margin < 0.0).then_some(axis)
}

/// Largest separation gap over all unit axes, `-min_a margin(a)`.
///
/// For disjoint sets this is the Euclidean distance between them; for
/// overlapping sets it is negative. Computed by a grid sweep followed by a
/// golden-section refinement around the best grid angle.
pub fn clearance(vehicle: &Superellipsoid, obstacle: &Superellipsoid) -> f64 {
    let res = 0.01;
    let (axis, m0) = best_axis(vehicle, obstacle, res);
    let phi0 = axis.0[1].atan2(axis.0[0]);
    let f = |phi: f64| separation_margin_raw(vehicle, obstacle, SeparatingAxis::from_angle(phi).0);
    let (mut lo, mut hi) = (phi0 - res, phi0 + res);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..40 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    -(m0.min(f1).min(f2))
}

/// Sampling-based ground-truth intersection test.
///
/// Half of the samples lie on the boundary of each set, the rest on
/// concentric scaled copies of the boundary (including the center), so a
/// set entirely contained in the other is also detected.
pub fn intersects_oracle(a: &Superellipsoid, b: &Superellipsoid, samples: usize) -> bool {
    let d = [a.center[0] - b.center[0], a.center[1] - b.center[1]];
    if d[0].hypot(d[1]) > a.circumradius() + b.circumradius() + 1e-9 {
        return false;
    }
    any_sample_inside(a, b, samples) || any_sample_inside(b, a, samples)
}

fn any_sample_inside(from: &Superellipsoid, into: &Superellipsoid, samples: usize) -> bool {
    let boundary = (samples / 2).max(1);
    let rings = 8;
    let per_ring = ((samples - boundary.min(samples)) / rings).max(1);
    for k in 0..boundary {
        let t = TAU * k as f64 / boundary as f64;
        if into.contains(from.boundary_point(t)) {
            return true;
        }
    }
    if into.contains(from.center) {
        return true;
    }
    for ring in 1..rings {
        let r = ring as f64 / rings as f64;
        for k in 0..per_ring {
            let t = TAU * k as f64 / per_ring as f64;
            let u = unit_ball_boundary(t, from.exponent);
            if into.contains(from.from_unit_ball([r * u[0], r * u[1]])) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk(c: [f64; 2]) -> Superellipsoid {
        Superellipsoid::new(c, 0.0, [1.0, 1.0], 2.0).unwrap()
    }

    /// Brute-force `max ⟨a, x⟩` over boundary samples.
    fn sampled_support(x: &Superellipsoid, a: [f64; 2], n: usize) -> f64 {
        x.boundary_points(n)
            .into_iter()
            .map(|p| dot(a, p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn dual_exponents() {
        assert_eq!(dual_exponent(2.0).unwrap(), 2.0);
        assert_eq!(dual_exponent(3.0).unwrap(), 1.5);
        assert_abs_diff_eq!(dual_exponent(4.0).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
        assert!(dual_exponent(1.5).is_err());
        assert!(dual_exponent(f64::NAN).is_err());
        for p in [2.0, 2.5, 3.0, 7.0] {
            let q = dual_exponent(p).unwrap();
            assert_abs_diff_eq!(1.0 / p + 1.0 / q, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(Superellipsoid::new([0.0, 0.0], 0.0, [0.0, 1.0], 2.0).is_err());
        assert!(Superellipsoid::new([0.0, 0.0], 0.0, [1.0, 1.0], 1.9).is_err());
        assert!(Superellipsoid::new([f64::NAN, 0.0], 0.0, [1.0, 1.0], 2.0).is_err());
        let x = Superellipsoid::new([0.0, 0.0], 3.0 * PI, [1.0, 1.0], 2.0).unwrap();
        assert_abs_diff_eq!(x.heading(), PI, epsilon = 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
        assert_eq!(wrap_angle(0.3), 0.3);
    }

    #[test]
    fn contains_examples() {
        let unit = disk([0.0, 0.0]);
        assert!(unit.contains([0.0, 0.0]));
        assert!(!unit.contains([1.001, 0.0]));
        let x = Superellipsoid::new([0.0, 0.0], 0.0, [2.0, 1.0], 3.0).unwrap();
        assert!(x.contains([2.0, 0.0]));
        assert!(!x.contains([2.0, 0.1]));
    }

    #[test]
    fn support_examples() {
        assert_eq!(disk([0.0, 0.0]).support([1.0, 0.0]), 1.0);

        let x = Superellipsoid::new([1.0, 1.0], PI / 2.0, [2.0, 1.0], 2.0).unwrap();
        assert_abs_diff_eq!(x.support([0.0, 1.0]), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sampled_support(&x, [0.0, 1.0], 100_000), 3.0, epsilon = 1e-6);

        let y = Superellipsoid::new([0.0, 0.0], 0.0, [1.0, 1.0], 3.0).unwrap();
        let expected = 2f64.powf(2.0 / 3.0);
        assert_abs_diff_eq!(y.support([1.0, 1.0]), expected, epsilon = 1e-12);
        let sampled = sampled_support(&y, [1.0, 1.0], 100_000);
        assert!(sampled <= expected + 1e-12 && expected - sampled < 1e-6);
    }

    #[test]
    fn margin_examples() {
        let v = disk([0.0, 0.0]);
        let e = disk([3.0, 0.0]);
        assert_abs_diff_eq!(
            separation_margin(&v, &e, &SeparatingAxis::new([1.0, 0.0]).unwrap()),
            -1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            separation_margin(&v, &e, &SeparatingAxis::new([0.0, 1.0]).unwrap()),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn vehicle_vs_south_obstacle_regression() {
        let vehicle = Superellipsoid::new([-15.0, 0.8], 0.0, [2.0, 1.1], 3.0).unwrap();
        let south = Superellipsoid::new([-11.0, 3.0], -0.79, [2.0, 1.0], 3.0).unwrap();
        let (axis, margin) = best_axis(&vehicle, &south, 1e-4);
        assert!(margin < 0.0);
        assert_abs_diff_eq!(separation_margin(&vehicle, &south, &axis), margin, epsilon = 1e-15);
        // Frozen from the distance between densely sampled boundaries.
        assert_abs_diff_eq!(margin, -1.614_552, epsilon = 1e-5);
        assert!(!intersects_oracle(&vehicle, &south, 20_000));
    }

    #[test]
    fn find_axis_for_disjoint_disks() {
        let v = disk([0.0, 0.0]);
        let e = disk([3.0, 0.0]);
        let a = find_separating_axis(&v, &e, 0.001).unwrap();
        assert_abs_diff_eq!(a.vector()[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(a.vector()[1], 0.0, epsilon = 1e-3);
        assert!(find_separating_axis(&v, &v, 0.001).is_none());
    }

    #[test]
    fn near_tangent_axis_lies_in_valid_cone() {
        // Two p=3 squares-ish, nearly touching along the North axis.
        let v = Superellipsoid::new([0.0, 0.0], 0.1, [1.0, 1.0], 3.0).unwrap();
        let e = Superellipsoid::new([2.15, 0.3], -0.2, [1.0, 0.8], 3.0).unwrap();
        let a = find_separating_axis(&v, &e, 0.001).unwrap();
        assert!(separation_margin(&v, &e, &a) < 0.0);
        // The valid cone on the sweep grid is contiguous and contains the result.
        let n = 6283;
        let valid: Vec<f64> = (0..n)
            .map(|k| TAU * k as f64 / n as f64)
            .filter(|&phi| separation_margin_raw(&v, &e, SeparatingAxis::from_angle(phi).0) < 0.0)
            .collect();
        assert!(!valid.is_empty());
        let phi = a.vector()[1].atan2(a.vector()[0]).rem_euclid(TAU);
        let lo = valid.iter().cloned().fold(f64::INFINITY, |m, x| m.min((x + PI).rem_euclid(TAU)));
        let hi = valid.iter().cloned().fold(f64::NEG_INFINITY, |m, x| m.max((x + PI).rem_euclid(TAU)));
        let shifted = (phi + PI).rem_euclid(TAU);
        assert!(lo - 1e-3 <= shifted && shifted <= hi + 1e-3);
    }

    #[test]
    fn oracle_examples() {
        let v = disk([0.0, 0.0]);
        assert!(intersects_oracle(&v, &v, 10_000));
        assert!(!intersects_oracle(&v, &disk([3.0, 0.0]), 10_000));
        for n in [10_000, 20_000, 40_000] {
            assert!(intersects_oracle(&v, &disk([2.0, 0.0]), n));
        }
        // Containment without boundary crossings.
        let big = Superellipsoid::new([0.0, 0.0], 0.0, [5.0, 5.0], 3.0).unwrap();
        let small = Superellipsoid::new([0.5, 0.5], 0.3, [0.5, 0.2], 3.0).unwrap();
        assert!(intersects_oracle(&big, &small, 10_000));
    }

    #[test]
    fn clearance_matches_disk_distance() {
        let v = disk([0.0, 0.0]);
        assert_abs_diff_eq!(clearance(&v, &disk([3.0, 4.0])), 3.0, epsilon = 1e-9);
        assert!(clearance(&v, &disk([1.0, 0.0])) < 0.0);
    }

    #[test]
    fn circumradius_bounds_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = Superellipsoid::new(
                [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
                rng.gen_range(-PI..PI),
                [rng.gen_range(0.1..4.0), rng.gen_range(0.1..4.0)],
                rng.gen_range(2.0..6.0),
            )
            .unwrap();
            let r = x.circumradius();
            for p in x.boundary_points(2000) {
                let d = [p[0] - x.center()[0], p[1] - x.center()[1]];
                assert!(d[0].hypot(d[1]) <= r + 1e-9);
            }
        }
    }

    #[test]
    fn boundary_samples_lie_on_boundary() {
        let x = Superellipsoid::new([1.0, -2.0], 0.7, [2.0, 0.5], 3.0).unwrap();
        for p in x.boundary_points(1000) {
            assert!(x.contains(p));
            let d = rotate_transpose(x.heading(), [p[0] - 1.0, p[1] + 2.0]);
            let n = lp_norm([d[0] / 2.0, d[1] / 0.5], 3.0);
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn lp_norm_gradient_matches_differences() {
        for e in [1.5, 2.0, 4.0 / 3.0, 3.0] {
            let v = [0.7, -1.3];
            let (_, g) = lp_norm_grad(v, e);
            let h = 1e-6;
            for i in 0..2 {
                let mut vp = v;
                let mut vm = v;
                vp[i] += h;
                vm[i] -= h;
                let fd = (lp_norm(vp, e) - lp_norm(vm, e)) / (2.0 * h);
                assert_abs_diff_eq!(g[i], fd, epsilon = 1e-8);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn shape() -> impl Strategy<Value = Superellipsoid> {
            (
                -10.0..10.0f64,
                -10.0..10.0f64,
                -PI..PI,
                0.1..5.0f64,
                0.1..5.0f64,
                2.0..6.0f64,
            )
                .prop_map(|(c1, c2, th, s1, s2, p)| {
                    Superellipsoid::new([c1, c2], th, [s1, s2], p).unwrap()
                })
        }

        proptest! {
            #[test]
            fn support_positively_homogeneous(x in shape(), phi in 0.0..TAU, lambda in 0.01..100.0f64) {
                let a = [phi.cos(), phi.sin()];
                let la = [lambda * a[0], lambda * a[1]];
                prop_assert!((x.support(la) - lambda * x.support(a)).abs() <= 1e-9 * (1.0 + lambda * x.support(a).abs()));
            }

            #[test]
            fn disk_support_closed_form(c1 in -5.0..5.0f64, c2 in -5.0..5.0f64, r in 0.1..5.0f64, a1 in -3.0..3.0f64, a2 in -3.0..3.0f64) {
                let x = Superellipsoid::new([c1, c2], 0.4, [r, r], 2.0).unwrap();
                let expected = r * a1.hypot(a2) + a1 * c1 + a2 * c2;
                prop_assert!((x.support([a1, a2]) - expected).abs() < 1e-12);
            }

            #[test]
            fn contains_rigid_invariant(x in shape(), u in -1.0..1.0f64, w in -1.0..1.0f64,
                                        rot in -PI..PI, t1 in -5.0..5.0f64, t2 in -5.0..5.0f64) {
                let p = x.from_unit_ball([u * 1.3, w * 1.3]);
                let moved_center = {
                    let r = rotate(rot, x.center());
                    [r[0] + t1, r[1] + t2]
                };
                let moved = x.with_pose(moved_center, x.heading() + rot);
                let mp = {
                    let r = rotate(rot, p);
                    [r[0] + t1, r[1] + t2]
                };
                // Skip points within rounding distance of the boundary.
                let local = lp_norm([u * 1.3, w * 1.3], x.exponent());
                prop_assume!((local - 1.0).abs() > 1e-6);
                prop_assert_eq!(x.contains(p), moved.contains(mp));
            }
        }
    }
}
