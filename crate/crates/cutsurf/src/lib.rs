//! Cutting-surface consensus solver for distributed robust convex programs
//! over time-varying unbalanced directed networks.
//!
//! A robust program with semi-infinite uncertain constraints is solved by
//! repeatedly building a tractable restriction — uncertainty discretized to a
//! finite cut set, constraint right-hand sides tightened by a per-agent
//! restriction parameter — and solving it with a distributed projected
//! gradient loop over an epigraph reformulation. A lower-level maximization
//! oracle classifies each agent's solution and drives three kinds of cuts
//! (solvability, feasibility, optimality); counter-based protocols certify
//! finite-time termination of both the inner loop and the outer loop, and
//! every reported solution is feasible for its agent's true constraint.
//!
//! Module map:
//! - [`problem`]: costs, robust constraints, boxes, built-in instances
//! - [`network`]: periodic directed schedules, row-stochastic weights
//! - [`projection`]: Dykstra projections onto convex intersections
//! - [`dpg`]: the distributed projected gradient loop and its termination
//!   counters
//! - [`llp`]: global maximization over the uncertainty interval
//! - [`cutting`]: the outer cut loop and its candidate termination check
//! - [`harness`]: configs, presets, reference solver, CSV/SVG output
//!
//! The `examples/` directory has one runnable walkthrough per capability;
//! `cutsurf` is a thin CLI over [`harness`].

pub mod cutting;
pub mod dpg;
pub mod harness;
pub mod llp;
pub mod network;
pub mod problem;
pub mod projection;

pub use cutting::{run, OuterConfig, RunReport};
pub use dpg::{run_dpg, DpgOptions, DpgOutcome, DpgTolerances};
pub use llp::{solve_llp, LlpResult};
pub use network::{is_ujsc, union_diameter, weights_at, GraphSchedule};
pub use problem::{
    build_nonconvex_llp_instance, build_section5_instance, evaluate_global_objective, BoxSet,
    ConvexFunction, ProblemInstance, RobustConstraint,
};
pub use projection::{
    feasibility_probe, project_box, project_intersection, project_sublevel, ConvexSetDescriptor,
};
