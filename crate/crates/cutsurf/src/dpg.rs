//! Distributed projected gradient solver for the restricted/discretized
//! approximation, together with its finite-time termination protocol.
//!
//! The heterogeneous objectives are lifted into epigraph constraints so every
//! agent shares the linear objective f0(theta) = <c, theta>; each slot, every
//! agent mixes in-neighbor states with row-stochastic weights, steps along -c,
//! and projects onto its local feasible set. Termination is detected by the
//! h/e counter protocol: a counter reaching S*D + 1 certifies that consensus
//! and both zeroth-order stopping conditions held network-wide.

use crate::network::{weights_at, GraphSchedule};
use crate::problem::{BoxSet, ProblemInstance};
use crate::projection::{
    feasibility_probe, project_intersection_best_effort, ConvexSetDescriptor, ProbeVerdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Joint per-agent decision: the shared decision vector x plus the epigraph
/// variables u, one component per agent.
#[derive(Clone, Debug, PartialEq)]
pub struct EpigraphState {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl EpigraphState {
    pub fn from_flat(n: usize, theta: &[f64]) -> Self {
        Self {
            x: theta[..n].to_vec(),
            u: theta[n..].to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend_from_slice(&self.u);
        out
    }
}

/// Shared linear objective direction c = (0_n, 1_m / m).
#[derive(Clone, Debug, PartialEq)]
pub struct CostDirection {
    pub c: Vec<f64>,
}

impl CostDirection {
    pub fn new(n: usize, m: usize) -> Self {
        let mut c = vec![0.0; n + m];
        for v in c[n..].iter_mut() {
            *v = 1.0 / m as f64;
        }
        Self { c }
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        self.c.iter().zip(theta).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.c.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// Per-agent termination counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DpgTerminationCounters {
    pub h1: u64,
    pub e1: u64,
    pub e2: u64,
    pub e3: u64,
}

impl DpgTerminationCounters {
    fn quartet_min(&self) -> u64 {
        self.h1.min(self.e1).min(self.e2).min(self.e3)
    }
}

/// Stopping tolerances for criterion (consensus, state change, value change).
#[derive(Clone, Copy, Debug)]
pub struct DpgTolerances {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

impl Default for DpgTolerances {
    fn default() -> Self {
        Self {
            eps1: 1e-2,
            eps2: 1e-6,
            eps3: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnsolvableReason {
    /// Some agent's local feasible set is (likely) empty.
    LocalSetEmpty { agent: usize },
    /// The stopping criterion was never certified within the slot budget.
    SlotCapReached,
}

#[derive(Clone, Debug)]
pub enum DpgOutcome {
    Solved {
        /// Per-agent decision parts at the certified slot.
        x: Vec<Vec<f64>>,
        /// Per-agent full epigraph states at the certified slot.
        theta: Vec<EpigraphState>,
        slots_used: usize,
    },
    Unsolvable(UnsolvableReason),
}

impl DpgOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(self, Self::Solved { .. })
    }
}

/// The epigraph reformulation of one approximation problem: per-agent
/// descriptor lists over theta-space plus the shared cost direction.
#[derive(Clone, Debug)]
pub struct EpigraphProblem {
    pub agent_sets: Vec<Vec<ConvexSetDescriptor>>,
    pub cost: CostDirection,
    pub theta_box: BoxSet,
    pub n: usize,
    pub m: usize,
}

/// Builds each agent's local set Omega_i = Theta ∩ {f_i(x) - u_i <= 0}
/// ∩ {g_i(x, y) <= -eps_i : y in cuts_i}. Theta is X times a u-box wide
/// enough that it never binds at an optimum: the u-range is the sampled range
/// of all costs over the box padded by 10 on both sides.
pub fn build_epigraph_problem(
    inst: &ProblemInstance,
    eps: &[f64],
    cuts: &[Vec<f64>],
) -> EpigraphProblem {
    assert_eq!(eps.len(), inst.m);
    assert_eq!(cuts.len(), inst.m);
    let (n, m) = (inst.n, inst.m);

    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FF_EE00);
    let mut f_lo = f64::INFINITY;
    let mut f_hi = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let x = crate::problem::validate::sample_box(&mut rng, &inst.box_set);
        for f in &inst.costs {
            let v = f.eval(&x);
            f_lo = f_lo.min(v);
            f_hi = f_hi.max(v);
        }
    }
    let u_box = BoxSet::new(vec![f_lo - 10.0; m], vec![f_hi + 10.0; m]);
    let theta_box = inst.box_set.product(&u_box);

    let agent_sets = (0..m)
        .map(|i| {
            let mut sets = vec![ConvexSetDescriptor::Box(theta_box.clone())];
            let fi = inst.costs[i].clone();
            let fi2 = inst.costs[i].clone();
            sets.push(ConvexSetDescriptor::sublevel(
                crate::problem::ConvexFunction::new(
                    move |theta: &[f64]| fi.eval(&theta[..n]) - theta[n + i],
                    move |theta: &[f64]| {
                        let mut g = fi2.subgradient(&theta[..n]);
                        g.resize(n + m, 0.0);
                        g[n + i] = -1.0;
                        g
                    },
                ),
                0.0,
            ));
            for &y in &cuts[i] {
                let gi = inst.constraints[i].clone();
                let gi2 = inst.constraints[i].clone();
                sets.push(ConvexSetDescriptor::sublevel(
                    crate::problem::ConvexFunction::new(
                        move |theta: &[f64]| gi.eval(&theta[..n], y),
                        move |theta: &[f64]| {
                            let mut g = gi2.subgradient_x(&theta[..n], y);
                            g.resize(n + m, 0.0);
                            g
                        },
                    ),
                    -eps[i],
                ));
            }
            sets
        })
        .collect();

    EpigraphProblem {
        agent_sets,
        cost: CostDirection::new(n, m),
        theta_box,
        n,
        m,
    }
}

/// Diminishing stepsize alpha(t) = alpha0 / sqrt(t + 1).
pub fn stepsize(t: usize, alpha0: f64) -> f64 {
    alpha0 / ((t + 1) as f64).sqrt()
}

/// One agent's slot update: mix neighbor states with its weight row, step
/// along -c, project onto the local set.
pub fn dpg_step(
    agent_sets: &[ConvexSetDescriptor],
    weight_row: &[f64],
    states: &[Vec<f64>],
    alpha: f64,
    cost: &CostDirection,
    projection_tol: f64,
    max_sweeps: usize,
) -> Result<Vec<f64>, crate::projection::ProjectionError> {
    let dim = cost.c.len();
    let mut mixed = vec![0.0; dim];
    for (j, w) in weight_row.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (acc, v) in mixed.iter_mut().zip(&states[j]) {
            *acc += w * v;
        }
    }
    for (acc, ci) in mixed.iter_mut().zip(&cost.c) {
        *acc -= alpha * ci;
    }
    project_intersection_best_effort(&mixed, agent_sets, projection_tol, max_sweeps)
        .map(|r| r.point)
}

fn pair_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Advances all counters one slot using states at t and t-1. At t = 0 the
/// change-based conditions reference a state before the first slot and are
/// treated as failed, matching the zero initialization of the recurrences.
#[allow(clippy::too_many_arguments)]
pub fn update_dpg_counters(
    prev: &[DpgTerminationCounters],
    sched: &GraphSchedule,
    t: usize,
    states_t: &[Vec<f64>],
    states_prev: Option<&[Vec<f64>]>,
    fvals_t: &[f64],
    fvals_prev: &[f64],
    tol: &DpgTolerances,
) -> Vec<DpgTerminationCounters> {
    let m = prev.len();
    let per_agent_change: Vec<(bool, bool)> = match states_prev {
        None => vec![(false, false); m],
        Some(sp) => (0..m)
            .map(|j| {
                (
                    pair_dist(&states_t[j], &sp[j]) <= tol.eps2,
                    (fvals_t[j] - fvals_prev[j]).abs() <= tol.eps3,
                )
            })
            .collect(),
    };

    (0..m)
        .map(|i| {
            let nbrs = sched.in_neighbors(t, i);
            let cond1 = nbrs
                .iter()
                .all(|&j| pair_dist(&states_t[i], &states_t[j]) <= tol.eps1);
            let cond2 = nbrs.iter().all(|&j| per_agent_change[j].0);
            let cond3 = nbrs.iter().all(|&j| per_agent_change[j].1);
            let min_quartet = nbrs
                .iter()
                .map(|&j| prev[j].quartet_min())
                .min()
                .unwrap_or(0);
            DpgTerminationCounters {
                h1: min_quartet + 1,
                e1: if cond1 { prev[i].e1 + 1 } else { 0 },
                e2: if cond2 { prev[i].e2 + 1 } else { 0 },
                e3: if cond3 { prev[i].e3 + 1 } else { 0 },
            }
        })
        .collect()
}

/// Network-wide stop test: some agent's h counter reached S*D + 1.
pub fn dpg_global_stop(counters: &[DpgTerminationCounters], s: usize, d: usize) -> bool {
    let threshold = (s * d + 1) as u64;
    counters.iter().any(|c| c.h1 >= threshold)
}

/// Incrementally maintained stepsize-weighted running average of a state
/// trajectory. Requires no history storage.
#[derive(Clone, Debug)]
pub struct AveragedIterate {
    weighted_sum: Vec<f64>,
    total_weight: f64,
}

impl AveragedIterate {
    pub fn new(dim: usize) -> Self {
        Self {
            weighted_sum: vec![0.0; dim],
            total_weight: 0.0,
        }
    }

    pub fn push(&mut self, alpha: f64, theta: &[f64]) {
        for (acc, v) in self.weighted_sum.iter_mut().zip(theta) {
            *acc += alpha * v;
        }
        self.total_weight += alpha;
    }

    pub fn value(&self) -> Vec<f64> {
        self.weighted_sum
            .iter()
            .map(|v| v / self.total_weight)
            .collect()
    }
}

/// Run options beyond the stopping tolerances.
#[derive(Clone, Debug)]
pub struct DpgOptions {
    pub alpha0: f64,
    pub t_cap: usize,
    /// Diameter D used in the S*D + 1 threshold.
    pub diameter: usize,
    /// Probe each local set for an interior point before iterating.
    pub probe_local_sets: bool,
    pub projection_tol: f64,
    pub max_sweeps: usize,
    /// Slots at which to snapshot every agent's averaged iterate; the run
    /// continues past protocol termination until the last checkpoint.
    pub checkpoints: Vec<usize>,
    /// Record per-slot per-agent decision parts and disagreement.
    pub record_trace: bool,
}

impl Default for DpgOptions {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            t_cap: 100_000,
            diameter: 0,
            probe_local_sets: true,
            projection_tol: 1e-10,
            max_sweeps: 10_000,
            checkpoints: Vec::new(),
            record_trace: false,
        }
    }
}

/// Per-slot trace of a run.
#[derive(Clone, Debug, Default)]
pub struct DpgTrace {
    /// [slot][agent] -> decision part.
    pub x: Vec<Vec<Vec<f64>>>,
    /// [slot][agent] -> || x_i(t) - mean_j x_j(t) ||.
    pub dist_to_mean: Vec<Vec<f64>>,
    /// [slot][agent] counters after the slot's exchange.
    pub counters: Vec<Vec<DpgTerminationCounters>>,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct DpgRun {
    pub outcome: DpgOutcome,
    /// States at the final simulated slot (regardless of verdict).
    pub final_states: Vec<EpigraphState>,
    /// Whether the full stopping criterion held network-wide at each slot,
    /// checked directly over all agent pairs (index = slot).
    pub criterion_history: Vec<bool>,
    /// (slot, per-agent averaged iterate) for each requested checkpoint.
    pub checkpoint_averages: Vec<(usize, Vec<Vec<f64>>)>,
    pub trace: Option<DpgTrace>,
    /// Slots in which at least one projection exited with residual above
    /// tolerance (empty or inconsistent local set).
    pub infeasible_projection_slots: usize,
    pub slots_simulated: usize,
}

/// Solves one approximation problem with the projected-gradient consensus
/// loop. Round-synchronous: within a slot every agent reads only slot-t
/// snapshots; a barrier separates slots.
pub fn run_dpg(
    inst: &ProblemInstance,
    eps: &[f64],
    cuts: &[Vec<f64>],
    sched: &GraphSchedule,
    tol: &DpgTolerances,
    opts: &DpgOptions,
) -> DpgRun {
    let problem = build_epigraph_problem(inst, eps, cuts);
    let (n, m) = (problem.n, problem.m);
    let s = sched.s_window;
    let d = opts.diameter;

    let empty_run = |agent: usize, states: &[Vec<f64>]| DpgRun {
        outcome: DpgOutcome::Unsolvable(UnsolvableReason::LocalSetEmpty { agent }),
        final_states: states.iter().map(|t| EpigraphState::from_flat(n, t)).collect(),
        criterion_history: Vec::new(),
        checkpoint_averages: Vec::new(),
        trace: None,
        infeasible_projection_slots: 0,
        slots_simulated: 0,
    };

    // Deterministic shared start: x at the box center, u_j = f_j(center).
    let center = inst.box_set.center();
    let mut theta0 = center.clone();
    for f in &inst.costs {
        theta0.push(f.eval(&center));
    }
    let states: Vec<Vec<f64>> = vec![theta0; m];

    if opts.probe_local_sets {
        for (i, sets) in problem.agent_sets.iter().enumerate() {
            if let ProbeVerdict::LikelyEmpty = feasibility_probe(sets, 1e-8) {
                return empty_run(i, &states);
            }
        }
    }

    let mut states = states;
    let mut prev_states: Option<Vec<Vec<f64>>> = None;
    let mut counters = vec![DpgTerminationCounters::default(); m];
    let mut fvals: Vec<f64> = (0..m).map(|j| inst.costs[j].eval(&states[j][..n])).collect();
    let mut prev_fvals = fvals.clone();
    let mut averages: Vec<AveragedIterate> = (0..m).map(|_| AveragedIterate::new(n + m)).collect();

    let mut checkpoints = opts.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let last_checkpoint = checkpoints.last().copied().unwrap_or(0);

    let mut history = Vec::new();
    let mut checkpoint_averages = Vec::new();
    let mut trace = opts.record_trace.then(DpgTrace::default);
    let mut fired: Option<(usize, Vec<Vec<f64>>)> = None;
    let mut infeasible_slots = 0usize;
    let mut slots_simulated = 0usize;
    let mut sweep_budget = vec![opts.max_sweeps; m];

    for t in 0..=opts.t_cap.max(last_checkpoint) {
        // Averaged iterates and checkpoints include slot t's state.
        let alpha = stepsize(t, opts.alpha0);
        for (avg, st) in averages.iter_mut().zip(&states) {
            avg.push(alpha, st);
        }
        if checkpoints.binary_search(&t).is_ok() {
            checkpoint_averages.push((t, averages.iter().map(|a| a.value()).collect()));
        }

        // Direct all-pairs check of the stopping criterion at slot t.
        let held = match &prev_states {
            None => false,
            Some(prev) => {
                let consensus = (0..m).all(|i| {
                    (i + 1..m).all(|j| pair_dist(&states[i], &states[j]) <= tol.eps1)
                });
                consensus
                    && (0..m).all(|j| pair_dist(&states[j], &prev[j]) <= tol.eps2)
                    && (0..m).all(|j| (fvals[j] - prev_fvals[j]).abs() <= tol.eps3)
            }
        };
        history.push(held);

        if let Some(tr) = trace.as_mut() {
            let mut mean = vec![0.0; n];
            for st in &states {
                for (acc, v) in mean.iter_mut().zip(&st[..n]) {
                    *acc += v / m as f64;
                }
            }
            tr.x.push(states.iter().map(|st| st[..n].to_vec()).collect());
            tr.dist_to_mean
                .push(states.iter().map(|st| pair_dist(&st[..n], &mean)).collect());
            tr.counters.push(counters.clone());
        }

        // Counter exchange for slot t; firing certifies the criterion.
        counters = update_dpg_counters(
            &counters,
            sched,
            t,
            &states,
            prev_states.as_deref(),
            &fvals,
            &prev_fvals,
            tol,
        );
        if fired.is_none() && dpg_global_stop(&counters, s, d) {
            fired = Some((t + 1, states.clone()));
            if checkpoints.last().is_none_or(|&c| c <= t) {
                slots_simulated = t + 1;
                break;
            }
        }
        if fired.is_some() && checkpoints.last().is_some_and(|&c| t >= c) {
            slots_simulated = t + 1;
            break;
        }
        if t >= opts.t_cap {
            slots_simulated = t;
            break;
        }

        // Synchronous state update. Agents whose local set already proved
        // empty (stalled projection) get a reduced sweep budget; feasible
        // projections restore it.
        let weights = weights_at(sched, t);
        let mut next = Vec::with_capacity(m);
        let mut any_infeasible = false;
        for i in 0..m {
            match dpg_step(
                &problem.agent_sets[i],
                weights.row(i),
                &states,
                alpha,
                &problem.cost,
                opts.projection_tol,
                sweep_budget[i],
            ) {
                Ok(point) => {
                    let residual = problem.agent_sets[i]
                        .iter()
                        .map(|c| c.violation(&point))
                        .fold(0.0, f64::max);
                    if residual > 10.0 * opts.projection_tol {
                        any_infeasible = true;
                        sweep_budget[i] = 32.min(opts.max_sweeps);
                    } else {
                        sweep_budget[i] = opts.max_sweeps;
                    }
                    next.push(point);
                }
                Err(_) => return empty_run(i, &states),
            }
        }
        if any_infeasible {
            infeasible_slots += 1;
        }
        prev_fvals = std::mem::take(&mut fvals);
        fvals = (0..m).map(|j| inst.costs[j].eval(&next[j][..n])).collect();
        prev_states = Some(std::mem::replace(&mut states, next));
        slots_simulated = t + 1;
    }

    let outcome = match fired {
        Some((slots_used, certified)) => DpgOutcome::Solved {
            x: certified.iter().map(|st| st[..n].to_vec()).collect(),
            theta: certified
                .iter()
                .map(|st| EpigraphState::from_flat(n, st))
                .collect(),
            slots_used,
        },
        None => DpgOutcome::Unsolvable(UnsolvableReason::SlotCapReached),
    };
    DpgRun {
        outcome,
        final_states: states
            .iter()
            .map(|st| EpigraphState::from_flat(n, st))
            .collect(),
        criterion_history: history,
        checkpoint_averages,
        trace,
        infeasible_projection_slots: infeasible_slots,
        slots_simulated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::build_section5_instance;

    #[test]
    fn cost_direction_norm() {
        let c = CostDirection::new(2, 6);
        assert!((c.norm() - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.c[0], 0.0);
        assert_eq!(c.c[2], 1.0 / 6.0);
    }

    #[test]
    fn stepsize_values() {
        assert_eq!(stepsize(0, 1.0), 1.0);
        assert_eq!(stepsize(3, 1.0), 0.5);
        for t in 1..100 {
            assert!(stepsize(t, 1.0) <= stepsize(t - 1, 1.0));
        }
    }

    #[test]
    fn epigraph_sets_with_no_cuts() {
        let inst = build_section5_instance();
        let problem = build_epigraph_problem(&inst, &vec![0.1; 6], &vec![Vec::new(); 6]);
        // Box plus one epigraph constraint per agent.
        assert!(problem.agent_sets.iter().all(|s| s.len() == 2));
        assert_eq!(problem.theta_box.dim(), 8);
    }

    #[test]
    fn epigraph_cut_set_matches_hand_substitution() {
        let inst = build_section5_instance();
        let problem = build_epigraph_problem(&inst, &vec![0.1; 6], &vec![vec![1.0]; 6]);
        // Agent 1's cut at y=1 with eps 0.1: (x1 + 0.75)^2 + 2 x2 <= 1.9.
        let set = &problem.agent_sets[0][2];
        let theta = |x1: f64, x2: f64| {
            let mut v = vec![x1, x2];
            v.extend_from_slice(&[0.0; 6]);
            v
        };
        match set {
            ConvexSetDescriptor::Sublevel { h, level } => {
                assert_eq!(*level, -0.1);
                let on = theta(0.0, (1.9 - 0.5625) / 2.0);
                assert!((h.eval(&on) - (-0.1)).abs() < 1e-12);
            }
            _ => panic!("expected a sublevel set"),
        }
    }

    #[test]
    fn dpg_step_fixed_point_and_averaging() {
        let inst = build_section5_instance();
        let problem = build_epigraph_problem(&inst, &vec![0.1; 6], &vec![Vec::new(); 6]);
        // Interior point of agent 0's set: u comfortably above f values.
        let mut star = vec![0.0, 0.0];
        star.extend(inst.costs.iter().map(|f| f.eval(&[0.0, 0.0]) + 1.0));
        let states = vec![star.clone(); 6];
        let row = [1.0 / 6.0; 6];
        let out = dpg_step(
            &problem.agent_sets[0],
            &row,
            &states,
            0.0,
            &problem.cost,
            1e-10,
            1000,
        )
        .unwrap();
        for (a, b) in out.iter().zip(&star) {
            assert!((a - b).abs() < 1e-12);
        }

        // Pure averaging between two states inside a big box.
        let big = ConvexSetDescriptor::Box(BoxSet::new(vec![-100.0], vec![100.0]));
        let cost = CostDirection::new(1, 0);
        let mixed = dpg_step(
            &[big],
            &[0.5, 0.5],
            &[vec![0.0], vec![2.0]],
            0.0,
            &cost,
            1e-10,
            10,
        )
        .unwrap();
        assert_eq!(mixed, vec![1.0]);
    }

    #[test]
    fn single_agent_step_is_projected_gradient() {
        let b = BoxSet::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        let sets = [ConvexSetDescriptor::Box(b.clone())];
        let cost = CostDirection::new(0, 2);
        let out = dpg_step(&sets, &[1.0], &[vec![0.3, 0.1]], 1.0, &cost, 1e-10, 10).unwrap();
        let expect = b.clamp(&[0.3 - 0.5, 0.1 - 0.5]);
        assert_eq!(out, expect);
    }

    #[test]
    fn counter_recurrences_unroll() {
        let sched = GraphSchedule::new(2, vec![vec![(0, 1), (1, 0)]], 1);
        let tol = DpgTolerances::default();
        let states = vec![vec![0.5], vec![0.5]];
        let fvals = vec![1.0, 1.0];
        let zero = vec![DpgTerminationCounters::default(); 2];
        // Conditions hold for two consecutive slots (states unchanged).
        let c1 = update_dpg_counters(&zero, &sched, 0, &states, Some(&states), &fvals, &fvals, &tol);
        let c2 = update_dpg_counters(&c1, &sched, 1, &states, Some(&states), &fvals, &fvals, &tol);
        for c in &c2 {
            assert_eq!((c.e1, c.e2, c.e3, c.h1), (2, 2, 2, 2));
        }
        // A violating in-neighbor resets e1 and pins h1 to 1.
        let spread = vec![vec![0.0], vec![1.0]];
        let c3 = update_dpg_counters(&c2, &sched, 0, &spread, Some(&states), &fvals, &fvals, &tol);
        assert_eq!(c3[0].e1, 0);
        let c4 = update_dpg_counters(&c3, &sched, 1, &states, Some(&states), &fvals, &fvals, &tol);
        assert_eq!(c4[0].h1, 1);
    }

    #[test]
    fn global_stop_threshold() {
        let mut counters = vec![DpgTerminationCounters::default(); 3];
        counters[1].h1 = 7;
        assert!(dpg_global_stop(&counters, 2, 3));
        counters[1].h1 = 6;
        assert!(!dpg_global_stop(&counters, 2, 3));
        // Fallback D = m - 1 on six agents raises the threshold to 11.
        counters[1].h1 = 10;
        assert!(!dpg_global_stop(&counters, 2, 5));
        counters[1].h1 = 11;
        assert!(dpg_global_stop(&counters, 2, 5));
    }

    #[test]
    fn averaged_iterate_cases() {
        let mut avg = AveragedIterate::new(1);
        avg.push(1.0, &[0.0]);
        avg.push(1.0, &[2.0]);
        assert_eq!(avg.value(), vec![1.0]);

        let mut cons = AveragedIterate::new(2);
        for t in 0..10 {
            cons.push(stepsize(t, 1.0), &[3.0, -1.0]);
        }
        let v = cons.value();
        assert!((v[0] - 3.0).abs() < 1e-12 && (v[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_cuts_detected_as_empty() {
        let inst = build_section5_instance();
        let sched = GraphSchedule::default6();
        // g_i(x, 0) <= -2 requires (x1 - p_i)^2 <= -1: empty even without the box.
        let eps = vec![2.0; 6];
        let cuts = vec![vec![0.0]; 6];
        let opts = DpgOptions {
            diameter: 5,
            t_cap: 50,
            ..DpgOptions::default()
        };
        let run = run_dpg(&inst, &eps, &cuts, &sched, &DpgTolerances::default(), &opts);
        match run.outcome {
            DpgOutcome::Unsolvable(UnsolvableReason::LocalSetEmpty { .. }) => {}
            other => panic!("expected LocalSetEmpty, got {other:?}"),
        }
    }
}
