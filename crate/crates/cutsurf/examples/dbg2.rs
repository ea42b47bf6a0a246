use cutsurf::dpg::*;
use cutsurf::network::{union_diameter, weights_at, GraphSchedule};
use cutsurf::problem::build_section5_instance;
use std::time::Instant;

fn main() {
    let inst = build_section5_instance();
    let sched = GraphSchedule::default6();
    let d = union_diameter(&sched, 1).unwrap();
    println!("static default6: D = {d}");
    let tol = DpgTolerances::default();
    let problem = build_epigraph_problem(&inst, &vec![0.1; 6], &vec![vec![1.0]; 6]);
    let m = 6; let n = 2;
    let center = inst.box_set.center();
    let mut theta0 = center.clone();
    for f in &inst.costs { theta0.push(f.eval(&center)); }
    let mut states: Vec<Vec<f64>> = vec![theta0; m];
    let mut prev: Option<Vec<Vec<f64>>> = None;
    let mut counters = vec![DpgTerminationCounters::default(); m];
    let mut fvals: Vec<f64> = (0..m).map(|j| inst.costs[j].eval(&states[j][..n])).collect();
    let mut prev_fvals = fvals.clone();
    let t0 = Instant::now();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x,y)| (x-y)*(x-y)).sum::<f64>().sqrt();
    for t in 0..2_000_000usize {
        counters = update_dpg_counters(&counters, &sched, t, &states, prev.as_deref(), &fvals, &prev_fvals, &tol);
        if dpg_global_stop(&counters, 1, d) {
            println!("FIRED at t={t} wall {:?}", t0.elapsed());
            let xs: Vec<Vec<f64>> = states.iter().map(|s| s[..2].to_vec()).collect();
            println!("x's: {xs:?}");
            break;
        }
        let w = weights_at(&sched, t);
        let alpha = stepsize(t, 1.0);
        let mut next = Vec::with_capacity(m);
        for i in 0..m {
            next.push(dpg_step(&problem.agent_sets[i], w.row(i), &states, alpha, &problem.cost, 1e-10, 10_000).unwrap());
        }
        prev_fvals = std::mem::take(&mut fvals);
        fvals = (0..m).map(|j| inst.costs[j].eval(&next[j][..n])).collect();
        prev = Some(std::mem::replace(&mut states, next));
        if t % 20_000 == 0 {
            let pd = (0..m).flat_map(|i| ((i+1)..m).map(move |j| (i,j)))
                .map(|(i,j)| dist(&states[i], &states[j])).fold(0.0f64, f64::max);
            let sd = prev.as_ref().map(|p| (0..m).map(|i| dist(&states[i], &p[i])).fold(0.0f64, f64::max)).unwrap_or(9.9);
            let fd = (0..m).map(|j| (fvals[j]-prev_fvals[j]).abs()).fold(0.0f64, f64::max);
            let h1 = counters.iter().map(|c| c.h1).max().unwrap();
            let a = stepsize(t, 1.0);
            println!("t={t}: maxpair={pd:.2e} ({:.1}a) maxdisp={sd:.2e} maxdf={fd:.2e} h1max={h1} wall={:?}",
                     pd/a, t0.elapsed());
        }
    }
}
