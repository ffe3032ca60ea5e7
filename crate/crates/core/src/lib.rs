//! Hierarchical nonlinear MPC for tracked vehicles with collision avoidance
//! between superellipsoids, plus a closed-loop simulator.
//!
//! * [`geometry`]: superellipsoids, support functions, separation margins.
//! * [`dynamics`]: unicycle model and Euler rollout.
//! * [`ocp`]: single-shooting planning and tracking problems.
//! * [`solver`]: projected-gradient / augmented Lagrangian solver.
//! * [`controller`]: planner + tracker with warm starts and safety fallbacks.
//! * [`harness`]: scenarios, simulation logs, metrics and batch runs.

// Negated float comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod controller;
pub mod dynamics;
pub mod geometry;
pub mod harness;
pub mod ocp;
pub mod solver;
