//! Centralized reference solver: projected gradient on the summed objective
//! over the intersection of every agent's restricted constraint sets, used as
//! ground truth for plots and tests.

use crate::problem::{evaluate_global_objective, global_objective_subgradient, ProblemInstance};
use crate::projection::{
    feasibility_probe, project_intersection, ConvexSetDescriptor, ProbeVerdict,
};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Infeasible;

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "the restricted feasible set appears to be empty")
    }
}

impl std::error::Error for Infeasible {}

/// Decision-space constraint sets for the restricted problem: the shared box
/// plus one sublevel set per (agent, cut) pair.
pub fn decision_space_sets(
    inst: &ProblemInstance,
    eps: &[f64],
    cuts: &[Vec<f64>],
) -> Vec<ConvexSetDescriptor> {
    let mut sets = vec![ConvexSetDescriptor::Box(inst.box_set.clone())];
    for (i, cut_set) in cuts.iter().enumerate() {
        for &y in cut_set {
            sets.push(ConvexSetDescriptor::sublevel(
                inst.constraints[i].at_y(y),
                -eps[i],
            ));
        }
    }
    sets
}

/// Minimizes the summed objective over the restricted feasible set by
/// projected gradient with a backtracking stepsize, iterated until the
/// per-step displacement falls below 1e-10.
pub fn centralized_oracle(
    inst: &ProblemInstance,
    eps: &[f64],
    cuts: &[Vec<f64>],
) -> Result<Vec<f64>, Infeasible> {
    let sets = decision_space_sets(inst, eps, cuts);
    let start = match feasibility_probe(&sets, 1e-10) {
        ProbeVerdict::InteriorPoint(x) => x,
        ProbeVerdict::LikelyEmpty => return Err(Infeasible),
    };

    let project = |p: &[f64]| -> Vec<f64> {
        project_intersection(p, &sets, 1e-12, 20_000)
            .map(|r| r.point)
            .unwrap_or_else(|_| p.to_vec())
    };

    let mut x = project(&start);
    let mut fx = evaluate_global_objective(inst, &x);
    let mut step = 1.0f64;
    for _ in 0..200_000 {
        let g = global_objective_subgradient(inst, &x);
        let mut moved = 0.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let proj = project(&cand);
            let fc = evaluate_global_objective(inst, &proj);
            let d2: f64 = proj
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let inner: f64 = g.iter().zip(proj.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
            // Sufficient-decrease test for proximal gradient steps.
            if fc <= fx + inner + d2 / (2.0 * step) + 1e-15 {
                moved = d2.sqrt();
                x = proj;
                fx = fc;
                step = (step * 1.25).min(1.0);
                accepted = true;
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
        if !accepted || moved < 1e-10 {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::build_section5_instance;

    #[test]
    fn unconstrained_box_optimum_is_clipped_centroid() {
        let inst = build_section5_instance();
        // No cuts: only the box constrains; gradient vanishes at the anchor
        // centroid (0, 1), which lies on the box boundary.
        let x = centralized_oracle(&inst, &vec![0.1; 6], &vec![Vec::new(); 6]).unwrap();
        assert!(x[0].abs() < 1e-8, "{x:?}");
        assert!((x[1] - 1.0).abs() < 1e-8, "{x:?}");
    }

    #[test]
    fn single_cut_reference_point() {
        let inst = build_section5_instance();
        // eps = 0.1, cut y = 1 for all agents: binding constraint is
        // (x1 -+ 0.75)^2 + 2 x2 <= 1.9 at x1 = 0.
        let x = centralized_oracle(&inst, &vec![0.1; 6], &vec![vec![1.0]; 6]).unwrap();
        assert!(x[0].abs() < 1e-6, "{x:?}");
        assert!((x[1] - (1.9 - 0.5625) / 2.0).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn dense_cuts_approach_the_robust_optimum() {
        let inst = build_section5_instance();
        // Dense uncertainty grid and a vanishing restriction approximate the
        // original robust program; optimum (0, sqrt(7)/4).
        let ys: Vec<f64> = (0..=100).map(|i| -1.0 + 0.02 * i as f64).collect();
        let x = centralized_oracle(&inst, &vec![1e-9; 6], &vec![ys; 6]).unwrap();
        assert!(x[0].abs() < 1e-4, "{x:?}");
        assert!((x[1] - 7f64.sqrt() / 4.0).abs() < 1e-4, "{x:?}");
    }

    #[test]
    fn infeasible_restriction_detected() {
        let inst = build_section5_instance();
        let err = centralized_oracle(&inst, &vec![5.0; 6], &vec![vec![1.0]; 6]);
        assert_eq!(err, Err(Infeasible));
    }
}
