//! Outer cutting-surface loop: repeatedly solve the restricted/discretized
//! approximation, classify each agent's solution through its lower-level
//! maximization, and apply solvability / feasibility / optimality cuts until
//! the candidate solutions pass the distributed termination check.
//!
//! Cuts per iteration k:
//! - unsolvable approximation: every agent's restriction parameter shrinks
//!   by the reduction factor (solvability cut);
//! - agent's solution violates its true constraint: the worst-case
//!   uncertainty value joins its finite cut set (feasibility cut);
//! - agent's solution is locally feasible: it becomes the agent's candidate
//!   and the agent's restriction parameter shrinks (optimality cut), applied
//!   after the termination check so the reported candidate is the one that
//!   passed it.

use crate::dpg::{run_dpg, DpgOptions, DpgOutcome, DpgTolerances, UnsolvableReason};
use crate::llp::{feasibility_verdict, solve_llp, FeasibilityVerdict};
use crate::network::GraphSchedule;
use crate::problem::{ConvexFunction, ProblemInstance};
use std::fmt;
use std::time::{Duration, Instant};

/// Per-agent outer-loop state.
#[derive(Clone, Debug)]
pub struct AgentCutState {
    pub eps_k: f64,
    /// Finite, ordered set of explored uncertainty values.
    pub cut_set: Vec<f64>,
    /// Current candidate z^k; `None` is the "norm +inf" unset sentinel.
    pub candidate: Option<Vec<f64>>,
    /// Previous candidate z^{k-1}.
    pub prev_candidate: Option<Vec<f64>>,
    /// Last approximation solution x^k for this agent.
    pub x_k: Vec<f64>,
    /// Counters from the most recent termination check.
    pub alg2: Alg2Counters,
}

impl AgentCutState {
    pub fn new(eps0: f64, y0: Vec<f64>, n: usize) -> Self {
        assert!(eps0 > 0.0, "restriction parameter must be positive");
        Self {
            eps_k: eps0,
            cut_set: y0,
            candidate: None,
            prev_candidate: None,
            x_k: vec![0.0; n],
            alg2: Alg2Counters::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Alg2Counters {
    pub h2: u64,
    pub e4: u64,
    pub e5: u64,
    pub e6: u64,
}

impl Alg2Counters {
    fn quartet_min(&self) -> u64 {
        self.h2.min(self.e4).min(self.e5).min(self.e6)
    }
}

/// What happened at one outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub enum CutKind {
    Solvability,
    Feasibility { agent: usize, y: f64 },
    Optimality { agent: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutEvent {
    pub kind: CutKind,
    pub iteration: usize,
}

/// Appends the worst-case uncertainty value to the cut set; the restriction
/// parameter is unchanged. A value within `dedupe_tol` of an existing cut is
/// still appended (every violated value must be added) but flagged.
pub fn apply_feasibility_cut(state: &mut AgentCutState, y_max: f64, dedupe_tol: f64) -> bool {
    let near_duplicate = state
        .cut_set
        .iter()
        .any(|&y| (y - y_max).abs() <= dedupe_tol);
    state.cut_set.push(y_max);
    near_duplicate
}

/// Shrinks this agent's restriction parameter; the cut set is unchanged.
pub fn apply_optimality_cut(state: &mut AgentCutState, r: f64) {
    assert!(r > 1.0);
    state.eps_k /= r;
}

/// Shrinks every agent's restriction parameter; cut sets are unchanged.
pub fn apply_solvability_cut(states: &mut [AgentCutState], r: f64) {
    assert!(r > 1.0);
    for s in states {
        s.eps_k /= r;
    }
}

/// Result of the fixed-length termination check.
#[derive(Clone, Debug)]
pub struct Alg2Outcome {
    pub fired: bool,
    pub counters: Vec<Alg2Counters>,
    pub slots: usize,
}

/// Runs exactly S*D + 1 message slots of the candidate termination protocol
/// over static candidate values and reports whether any agent's h counter
/// reached S*D + 1. Conditions touching an unset candidate evaluate false.
#[allow(clippy::too_many_arguments)]
pub fn algorithm2_check(
    candidates: &[Option<Vec<f64>>],
    prev_candidates: &[Option<Vec<f64>>],
    costs: &[ConvexFunction],
    sched: &GraphSchedule,
    s: usize,
    d: usize,
    eps4: f64,
    eps5: f64,
    eps6: f64,
) -> Alg2Outcome {
    let m = candidates.len();
    let rounds = s * d + 1;

    let pair_ok = |i: usize, j: usize| -> bool {
        match (&candidates[i], &candidates[j]) {
            (Some(a), Some(b)) => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                d2.sqrt() <= eps4
            }
            _ => false,
        }
    };
    // Static per-agent change conditions.
    let change_ok: Vec<(bool, bool)> = (0..m)
        .map(|j| match (&candidates[j], &prev_candidates[j]) {
            (Some(a), Some(b)) => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (
                    d2.sqrt() <= eps5,
                    (costs[j].eval(a) - costs[j].eval(b)).abs() <= eps6,
                )
            }
            _ => (false, false),
        })
        .collect();

    let mut counters = vec![Alg2Counters::default(); m];
    for t in 0..rounds {
        counters = (0..m)
            .map(|i| {
                let nbrs = sched.in_neighbors(t, i);
                let cond4 = nbrs.iter().all(|&j| pair_ok(i, j));
                let cond5 = nbrs.iter().all(|&j| change_ok[j].0);
                let cond6 = nbrs.iter().all(|&j| change_ok[j].1);
                let min_quartet = nbrs
                    .iter()
                    .map(|&j| counters[j].quartet_min())
                    .min()
                    .unwrap_or(0);
                Alg2Counters {
                    h2: min_quartet + 1,
                    e4: if cond4 { counters[i].e4 + 1 } else { 0 },
                    e5: if cond5 { counters[i].e5 + 1 } else { 0 },
                    e6: if cond6 { counters[i].e6 + 1 } else { 0 },
                }
            })
            .collect();
    }
    let fired = counters.iter().any(|c| c.h2 >= rounds as u64);
    Alg2Outcome {
        fired,
        counters,
        slots: rounds,
    }
}

/// Outer-loop parameters.
#[derive(Clone, Debug)]
pub struct OuterConfig {
    pub eps0: Vec<f64>,
    pub r: f64,
    pub y0: Vec<Vec<f64>>,
    pub dpg_tol: DpgTolerances,
    pub eps4: f64,
    pub eps5: f64,
    pub eps6: f64,
    pub alpha0: f64,
    pub t_cap: usize,
    pub outer_cap: usize,
    pub grid_n: usize,
    pub refine_tol: f64,
    pub lipschitz_y: Option<f64>,
    pub diameter: usize,
    pub probe_local_sets: bool,
    pub projection_tol: f64,
    pub max_sweeps: usize,
    pub dedupe_tol: f64,
}

impl OuterConfig {
    pub fn defaults(m: usize, diameter: usize) -> Self {
        Self {
            eps0: vec![100.0; m],
            r: 10.0,
            y0: vec![Vec::new(); m],
            dpg_tol: DpgTolerances::default(),
            eps4: 0.1,
            eps5: 0.1,
            eps6: 0.1,
            alpha0: 1.0,
            t_cap: 100_000,
            outer_cap: 200,
            grid_n: 2001,
            refine_tol: 1e-10,
            lipschitz_y: None,
            diameter,
            probe_local_sets: true,
            projection_tol: 1e-10,
            max_sweeps: 10_000,
            dedupe_tol: 1e-12,
        }
    }
}

/// One row of the per-iteration log.
#[derive(Clone, Debug)]
pub struct IterationRow {
    pub k: usize,
    /// Per-agent cut marker: 'S', 'F', 'O', or '-' (no cut, e.g. at
    /// termination).
    pub agent_cuts: Vec<char>,
    /// Restriction parameters in force during iteration k.
    pub eps: Vec<f64>,
    pub cut_sizes: Vec<usize>,
    /// Sum of per-agent costs at the candidates; `None` while any candidate
    /// is unset (the +inf plateau).
    pub f_sum: Option<f64>,
    /// Max over agents of the worst-case constraint value at the candidate.
    pub max_residual: Option<f64>,
    pub dpg_slots: usize,
    pub dpg_solved: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CutCounts {
    pub solvability: usize,
    pub feasibility: usize,
    pub optimality: usize,
}

/// Full outer-run record.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub iterations: usize,
    pub terminated: bool,
    pub cut_counts: CutCounts,
    pub rows: Vec<IterationRow>,
    pub events: Vec<CutEvent>,
    pub final_candidates: Vec<Option<Vec<f64>>>,
    /// Worst-case constraint value per agent at its final candidate.
    pub final_residuals: Vec<f64>,
    pub total_dpg_slots: usize,
    pub total_alg2_slots: usize,
    pub wall: Duration,
    pub warnings: Vec<String>,
}

impl RunReport {
    /// Mean of the set candidates, when all are set.
    pub fn mean_candidate(&self) -> Option<Vec<f64>> {
        let n = self.final_candidates.iter().flatten().next()?.len();
        let mut mean = vec![0.0; n];
        for c in &self.final_candidates {
            let c = c.as_ref()?;
            for (acc, v) in mean.iter_mut().zip(c) {
                *acc += v / self.final_candidates.len() as f64;
            }
        }
        Some(mean)
    }
}

#[derive(Clone, Debug)]
pub struct IterationCapExceeded {
    pub report: RunReport,
}

impl fmt::Display for IterationCapExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "outer loop hit its iteration cap after {} iterations without terminating",
            self.report.iterations
        )
    }
}

impl std::error::Error for IterationCapExceeded {}

/// Outcome of a single outer iteration.
#[derive(Clone, Debug)]
pub struct IterationOutcome {
    pub events: Vec<CutEvent>,
    pub terminated: bool,
    pub row: IterationRow,
    pub alg2_slots: usize,
    pub warnings: Vec<String>,
}

/// Executes one outer iteration in place: solve the approximation, branch per
/// agent on the lower-level verdict, run the termination check when any agent
/// refreshed its candidate, then apply cuts.
pub fn outer_iteration(
    states: &mut [AgentCutState],
    inst: &ProblemInstance,
    sched: &GraphSchedule,
    cfg: &OuterConfig,
    k: usize,
) -> IterationOutcome {
    let m = inst.m;
    let eps: Vec<f64> = states.iter().map(|s| s.eps_k).collect();
    let cuts: Vec<Vec<f64>> = states.iter().map(|s| s.cut_set.clone()).collect();
    let eps_row = eps.clone();
    let cut_sizes: Vec<usize> = cuts.iter().map(|c| c.len()).collect();

    let dpg_opts = DpgOptions {
        alpha0: cfg.alpha0,
        t_cap: cfg.t_cap,
        diameter: cfg.diameter,
        probe_local_sets: cfg.probe_local_sets,
        projection_tol: cfg.projection_tol,
        max_sweeps: cfg.max_sweeps,
        ..DpgOptions::default()
    };
    let run = run_dpg(inst, &eps, &cuts, sched, &cfg.dpg_tol, &dpg_opts);

    let mut events = Vec::new();
    let mut warnings = Vec::new();
    let mut terminated = false;
    let mut alg2_slots = 0;
    let mut agent_cuts = vec!['-'; m];

    match &run.outcome {
        DpgOutcome::Unsolvable(reason) => {
            if let UnsolvableReason::LocalSetEmpty { agent } = reason {
                warnings.push(format!(
                    "iteration {k}: agent {agent} local set empty at eps {:.3e}",
                    eps[*agent]
                ));
            }
            apply_solvability_cut(states, cfg.r);
            events.push(CutEvent {
                kind: CutKind::Solvability,
                iteration: k,
            });
            agent_cuts = vec!['S'; m];
            // Candidates carry over unchanged.
            for s in states.iter_mut() {
                s.prev_candidate = s.candidate.clone();
            }
        }
        DpgOutcome::Solved { x, .. } => {
            let mut optimality_agents = Vec::new();
            let mut feasibility_cuts = Vec::new();
            for i in 0..m {
                states[i].x_k = x[i].clone();
                let llp = solve_llp(
                    &inst.constraints[i],
                    &x[i],
                    cfg.grid_n,
                    cfg.refine_tol,
                    cfg.lipschitz_y,
                );
                match feasibility_verdict(&llp) {
                    FeasibilityVerdict::LocallyFeasible => optimality_agents.push(i),
                    FeasibilityVerdict::Violated(y) => feasibility_cuts.push((i, y)),
                }
            }
            // Candidate refresh: z^k = x^k on the feasible branch, else the
            // previous candidate is kept.
            for (i, s) in states.iter_mut().enumerate() {
                let z_prev = s.candidate.clone();
                s.candidate = if optimality_agents.contains(&i) {
                    Some(x[i].clone())
                } else {
                    z_prev.clone()
                };
                s.prev_candidate = z_prev;
            }

            if !optimality_agents.is_empty() {
                let candidates: Vec<_> = states.iter().map(|s| s.candidate.clone()).collect();
                let prevs: Vec<_> = states.iter().map(|s| s.prev_candidate.clone()).collect();
                let outcome = algorithm2_check(
                    &candidates,
                    &prevs,
                    &inst.costs,
                    sched,
                    sched.s_window,
                    cfg.diameter,
                    cfg.eps4,
                    cfg.eps5,
                    cfg.eps6,
                );
                alg2_slots = outcome.slots;
                for (s, c) in states.iter_mut().zip(&outcome.counters) {
                    s.alg2 = *c;
                }
                terminated = outcome.fired;
            }

            if !terminated {
                for &i in &optimality_agents {
                    apply_optimality_cut(&mut states[i], cfg.r);
                    events.push(CutEvent {
                        kind: CutKind::Optimality { agent: i },
                        iteration: k,
                    });
                    agent_cuts[i] = 'O';
                }
                for &(i, y) in &feasibility_cuts {
                    if apply_feasibility_cut(&mut states[i], y, cfg.dedupe_tol) {
                        warnings.push(format!(
                            "iteration {k}: agent {i} cut {y:.17e} duplicates an existing cut"
                        ));
                    }
                    events.push(CutEvent {
                        kind: CutKind::Feasibility { agent: i, y },
                        iteration: k,
                    });
                    agent_cuts[i] = 'F';
                }
            }
        }
    }

    // Candidate diagnostics for the row.
    let f_sum = states
        .iter()
        .zip(&inst.costs)
        .map(|(s, f)| s.candidate.as_ref().map(|z| f.eval(z)))
        .sum::<Option<f64>>();
    let max_residual = states
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            s.candidate.as_ref().map(|z| {
                solve_llp(&inst.constraints[i], z, cfg.grid_n, cfg.refine_tol, None).g_max
            })
        })
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));

    IterationOutcome {
        events,
        terminated,
        row: IterationRow {
            k,
            agent_cuts,
            eps: eps_row,
            cut_sizes,
            f_sum,
            max_residual,
            dpg_slots: run.slots_simulated,
            dpg_solved: run.outcome.is_solved(),
        },
        alg2_slots,
        warnings,
    }
}

/// Runs the outer loop to termination or the iteration cap.
pub fn run(
    inst: &ProblemInstance,
    sched: &GraphSchedule,
    cfg: &OuterConfig,
) -> Result<RunReport, IterationCapExceeded> {
    assert_eq!(cfg.eps0.len(), inst.m);
    assert_eq!(cfg.y0.len(), inst.m);
    let start = Instant::now();
    let mut states: Vec<AgentCutState> = (0..inst.m)
        .map(|i| AgentCutState::new(cfg.eps0[i], cfg.y0[i].clone(), inst.n))
        .collect();

    let mut rows = Vec::new();
    let mut events = Vec::new();
    let mut warnings = Vec::new();
    let mut total_dpg_slots = 0;
    let mut total_alg2_slots = 0;
    let mut terminated = false;
    let mut iterations = 0;

    for k in 0..cfg.outer_cap {
        let out = outer_iteration(&mut states, inst, sched, cfg, k);
        total_dpg_slots += out.row.dpg_slots;
        total_alg2_slots += out.alg2_slots;
        rows.push(out.row);
        events.extend(out.events);
        warnings.extend(out.warnings);
        iterations = k + 1;
        if out.terminated {
            terminated = true;
            break;
        }
    }

    let mut cut_counts = CutCounts::default();
    for e in &events {
        match e.kind {
            CutKind::Solvability => cut_counts.solvability += 1,
            CutKind::Feasibility { .. } => cut_counts.feasibility += 1,
            CutKind::Optimality { .. } => cut_counts.optimality += 1,
        }
    }
    let final_candidates: Vec<_> = states.iter().map(|s| s.candidate.clone()).collect();
    let final_residuals: Vec<f64> = states
        .iter()
        .enumerate()
        .map(|(i, s)| match &s.candidate {
            Some(z) => solve_llp(&inst.constraints[i], z, cfg.grid_n, cfg.refine_tol, None).g_max,
            None => f64::INFINITY,
        })
        .collect();

    let report = RunReport {
        iterations,
        terminated,
        cut_counts,
        rows,
        events,
        final_candidates,
        final_residuals,
        total_dpg_slots,
        total_alg2_slots,
        wall: start.elapsed(),
        warnings,
    };
    if terminated {
        Ok(report)
    } else {
        Err(IterationCapExceeded { report })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::union_diameter;
    use crate::problem::{BoxSet, RobustConstraint};

    #[test]
    fn cut_applications() {
        let mut state = AgentCutState::new(0.2, vec![1.0], 2);
        apply_optimality_cut(&mut state, 2.0);
        assert_eq!(state.eps_k, 0.1);
        assert_eq!(state.cut_set, vec![1.0]);

        assert!(!apply_feasibility_cut(&mut state, 0.3, 1e-12));
        assert_eq!(state.cut_set, vec![1.0, 0.3]);
        assert_eq!(state.eps_k, 0.1);

        // Near-duplicate is appended but flagged.
        assert!(apply_feasibility_cut(&mut state, 0.3 + 1e-13, 1e-12));
        assert_eq!(state.cut_set.len(), 3);

        let mut all = vec![
            AgentCutState::new(100.0, vec![], 2),
            AgentCutState::new(50.0, vec![0.5], 2),
        ];
        apply_solvability_cut(&mut all, 10.0);
        assert_eq!(all[0].eps_k, 10.0);
        assert_eq!(all[1].eps_k, 5.0);
        assert_eq!(all[1].cut_set, vec![0.5]);
    }

    fn quadratic_costs(anchors: &[[f64; 2]]) -> Vec<ConvexFunction> {
        anchors
            .iter()
            .map(|q| ConvexFunction::squared_distance(q.to_vec()))
            .collect()
    }

    #[test]
    fn alg2_fires_on_identical_stable_candidates() {
        let sched = GraphSchedule::default6();
        let d = union_diameter(&sched, 2).unwrap();
        let z = Some(vec![0.5, 0.5]);
        let candidates = vec![z.clone(); 6];
        let costs = quadratic_costs(&[[0.0; 2]; 6]);
        let out = algorithm2_check(
            &candidates, &candidates, &costs, &sched, 2, d, 0.1, 0.1, 0.1,
        );
        assert!(out.fired);
        assert_eq!(out.slots, 2 * d + 1);
    }

    #[test]
    fn alg2_blocked_by_unset_candidate() {
        let sched = GraphSchedule::default6();
        let z = Some(vec![0.5, 0.5]);
        let mut candidates = vec![z.clone(); 6];
        candidates[3] = None;
        let costs = quadratic_costs(&[[0.0; 2]; 6]);
        let out = algorithm2_check(
            &candidates.clone(),
            &candidates,
            &costs,
            &sched,
            2,
            5,
            0.1,
            0.1,
            0.1,
        );
        assert!(!out.fired);
    }

    #[test]
    fn alg2_blocked_by_adjacent_spread() {
        // Agents 0 and 1 are adjacent at slot 0 of the default schedule and
        // sit 0.2 apart with eps4 = 0.1.
        let sched = GraphSchedule::default6();
        let mut candidates = vec![Some(vec![0.0, 0.0]); 6];
        candidates[1] = Some(vec![0.2, 0.0]);
        let costs = quadratic_costs(&[[0.0; 2]; 6]);
        let out = algorithm2_check(
            &candidates.clone(),
            &candidates,
            &costs,
            &sched,
            2,
            5,
            0.1,
            0.1,
            0.1,
        );
        assert!(!out.fired);
    }

    #[test]
    fn trivially_feasible_instance_terminates_quickly() {
        // Two agents, always-satisfied constraints: the loop reduces to
        // repeated unconstrained solves and stops once candidates stabilize.
        let costs = quadratic_costs(&[[0.5, 0.0], [-0.5, 0.0]]);
        let constraints = vec![
            RobustConstraint::new(|_, _| -10.0, |_, _| vec![0.0, 0.0], -1.0, 1.0),
            RobustConstraint::new(|_, _| -10.0, |_, _| vec![0.0, 0.0], -1.0, 1.0),
        ];
        let inst = ProblemInstance::new(
            2,
            costs,
            constraints,
            BoxSet::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
        );
        let sched = GraphSchedule::new(2, vec![vec![(0, 1), (1, 0)]], 1);
        let mut cfg = OuterConfig::defaults(2, union_diameter(&sched, 1).unwrap());
        cfg.eps0 = vec![1.0; 2];
        cfg.t_cap = 200_000;
        let report = run(&inst, &sched, &cfg).expect("should terminate");
        assert!(report.iterations <= 4, "took {} iterations", report.iterations);
        assert_eq!(report.cut_counts.feasibility, 0);
        assert_eq!(report.cut_counts.solvability, 0);
        // Candidates near the unconstrained optimum (0, 0).
        for z in report.final_candidates.iter().flatten() {
            assert!(z[0].abs() < 0.05 && z[1].abs() < 0.05, "{z:?}");
        }
        for r in &report.final_residuals {
            assert_eq!(*r, -10.0);
        }
    }
}
