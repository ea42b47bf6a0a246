//! Experiment presets and file emission: trace CSVs, summary CSVs, and static
//! SVG charts, all byte-reproducible for identical configs.

use super::config::{resolve, ConfigError, ResolvedRun, RunConfig, ScalarOrPerAgent};
use super::csv::{fmt_f64, write_csv};
use super::oracle::centralized_oracle;
use super::svg::Chart;
use super::HarnessError;
use crate::cutting::{run as outer_run, RunReport};
use crate::dpg::{run_dpg, CostDirection, DpgOptions, DpgOutcome, DpgRun, DpgTolerances};
use crate::network::GraphSchedule;
use crate::problem::{build_section5_instance, evaluate_global_objective, ProblemInstance};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Section5,
    DpgSolvable,
    DpgUnsolvable,
    SweepEps0,
    SweepR,
    Fig9SingleAgent,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Section5,
        Preset::DpgSolvable,
        Preset::DpgUnsolvable,
        Preset::SweepEps0,
        Preset::SweepR,
        Preset::Fig9SingleAgent,
    ];

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "section5" => Some(Self::Section5),
            "dpg_solvable" => Some(Self::DpgSolvable),
            "dpg_unsolvable" => Some(Self::DpgUnsolvable),
            "sweep_eps0" => Some(Self::SweepEps0),
            "sweep_r" => Some(Self::SweepR),
            "fig9_single_agent" => Some(Self::Fig9SingleAgent),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Section5 => "section5",
            Self::DpgSolvable => "dpg_solvable",
            Self::DpgUnsolvable => "dpg_unsolvable",
            Self::SweepEps0 => "sweep_eps0",
            Self::SweepR => "sweep_r",
            Self::Fig9SingleAgent => "fig9_single_agent",
        }
    }
}

/// Files written plus human-readable summary lines.
#[derive(Debug, Default)]
pub struct PresetReport {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

pub fn run_preset(preset: Preset, out_root: &Path) -> Result<PresetReport, HarnessError> {
    let dir = out_root.join(preset.name());
    match preset {
        Preset::Section5 => {
            let resolved = resolve(RunConfig::default()).map_err(HarnessError::Config)?;
            run_resolved(&resolved, &dir)
        }
        Preset::Fig9SingleAgent => {
            let config = RunConfig {
                instance: "fig9".to_string(),
                schedule: super::config::ScheduleSpec::Named("singleton".to_string()),
                eps0: ScalarOrPerAgent::Scalar(0.2),
                r: 2.0,
                y0: Some(vec![vec![1.0]]),
                ..RunConfig::default()
            };
            let resolved = resolve(config).map_err(HarnessError::Config)?;
            run_resolved(&resolved, &dir)
        }
        Preset::DpgSolvable => dpg_scenario_preset(&dir, 0.1, true),
        Preset::DpgUnsolvable => dpg_scenario_preset(&dir, 5.0, false),
        Preset::SweepEps0 => sweep_preset(&dir, "eps0", &[1e-2, 1.0, 1e2, 1e4], |cfg, v| {
            cfg.eps0 = ScalarOrPerAgent::Scalar(v);
            cfg.r = 2.0;
        }),
        Preset::SweepR => sweep_preset(&dir, "r", &[1.5, 2.0, 5.0, 10.0, 100.0, 1000.0], |cfg, v| {
            cfg.r = v;
        }),
    }
}

/// Full outer run with file emission; shared by the `run` subcommand and the
/// single-run presets.
pub fn run_resolved(resolved: &ResolvedRun, dir: &Path) -> Result<PresetReport, HarnessError> {
    let mut out = PresetReport::default();
    for w in &resolved.warnings {
        out.lines.push(format!("warning: {w}"));
    }
    let report = outer_run(&resolved.instance, &resolved.schedule, &resolved.outer)
        .map_err(HarnessError::Cap)?;

    emit_outer_files(&resolved.instance, &report, dir, &mut out)?;

    if resolved.config.trace_dpg {
        // Re-solve the terminal approximation with tracing on.
        let eps: Vec<f64> = report
            .rows
            .last()
            .map(|r| r.eps.clone())
            .unwrap_or_else(|| resolved.outer.eps0.clone());
        let cuts: Vec<Vec<f64>> = resolved.outer.y0.clone();
        let opts = DpgOptions {
            alpha0: resolved.outer.alpha0,
            t_cap: resolved.outer.t_cap,
            diameter: resolved.outer.diameter,
            probe_local_sets: resolved.outer.probe_local_sets,
            projection_tol: resolved.outer.projection_tol,
            max_sweeps: resolved.outer.max_sweeps,
            record_trace: true,
            ..DpgOptions::default()
        };
        let run = run_dpg(
            &resolved.instance,
            &eps,
            &cuts,
            &resolved.schedule,
            &resolved.outer.dpg_tol,
            &opts,
        );
        let stride = resolved.config.trace_stride;
        emit_dpg_trace(&run, None, stride, &dir.join("dpg_trace.csv"), &mut out)?;
    }

    summarize_outer(&resolved.instance, &report, &mut out);
    Ok(out)
}

fn emit_outer_files(
    inst: &ProblemInstance,
    report: &RunReport,
    dir: &Path,
    out: &mut PresetReport,
) -> Result<(), HarnessError> {
    let m = inst.m;
    let mut header: Vec<String> = vec![
        "k".into(),
        "dpg_solved".into(),
        "dpg_slots".into(),
        "f_sum".into(),
        "max_residual".into(),
    ];
    for i in 0..m {
        header.push(format!("cut_a{i}"));
    }
    for i in 0..m {
        header.push(format!("eps_a{i}"));
    }
    for i in 0..m {
        header.push(format!("ycount_a{i}"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows = report.rows.iter().map(|r| {
        let mut row = vec![
            r.k.to_string(),
            r.dpg_solved.to_string(),
            r.dpg_slots.to_string(),
            r.f_sum.map_or("inf".to_string(), fmt_f64),
            r.max_residual.map_or("inf".to_string(), fmt_f64),
        ];
        row.extend(r.agent_cuts.iter().map(|c| c.to_string()));
        row.extend(r.eps.iter().map(|&e| fmt_f64(e)));
        row.extend(r.cut_sizes.iter().map(|c| c.to_string()));
        row
    });
    let trace_path = dir.join("outer_trace.csv");
    write_csv(&trace_path, &header_refs, rows).map_err(HarnessError::Io)?;
    out.files.push(trace_path);

    let f_mean = report
        .mean_candidate()
        .map(|z| evaluate_global_objective(inst, &z));
    let max_res = report
        .final_residuals
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let summary_path = dir.join("summary.csv");
    write_csv(
        &summary_path,
        &[
            "iterations",
            "terminated",
            "solvability_cuts",
            "feasibility_cuts",
            "optimality_cuts",
            "f_mean_final",
            "max_final_residual",
            "total_dpg_slots",
            "total_alg2_slots",
        ],
        [vec![
            report.iterations.to_string(),
            report.terminated.to_string(),
            report.cut_counts.solvability.to_string(),
            report.cut_counts.feasibility.to_string(),
            report.cut_counts.optimality.to_string(),
            f_mean.map_or("inf".to_string(), fmt_f64),
            fmt_f64(max_res),
            report.total_dpg_slots.to_string(),
            report.total_alg2_slots.to_string(),
        ]],
    )
    .map_err(HarnessError::Io)?;
    out.files.push(summary_path);

    let mut chart = Chart::new(
        "Candidate objective by outer iteration",
        "iteration k",
        "sum of agent costs at candidates",
    );
    chart.add_series(
        "F at candidates",
        report
            .rows
            .iter()
            .filter_map(|r| r.f_sum.map(|f| (r.k as f64, f)))
            .collect(),
    );
    if let Some(f) = f_mean {
        let k_max = report.rows.len().saturating_sub(1) as f64;
        chart.add_series("final level", vec![(0.0, f), (k_max.max(1.0), f)]);
    }
    let chart_path = dir.join("f_vs_k.svg");
    chart.write(&chart_path).map_err(HarnessError::Io)?;
    out.files.push(chart_path);
    Ok(())
}

fn summarize_outer(inst: &ProblemInstance, report: &RunReport, out: &mut PresetReport) {
    out.lines.push(format!(
        "terminated={} after {} iterations (cuts: {} solvability, {} feasibility, {} optimality)",
        report.terminated,
        report.iterations,
        report.cut_counts.solvability,
        report.cut_counts.feasibility,
        report.cut_counts.optimality
    ));
    if let Some(z) = report.mean_candidate() {
        out.lines.push(format!(
            "mean candidate {:?}, F = {:.6}",
            z,
            evaluate_global_objective(inst, &z)
        ));
    }
    let worst = report
        .final_residuals
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    out.lines
        .push(format!("worst final constraint value: {worst:.3e}"));
    for w in &report.warnings {
        out.lines.push(format!("warning: {w}"));
    }
}

/// Restriction and single-cut scenarios for the inner solver, solvable
/// (eps = 0.1) and unsolvable (eps = 5, every local set empty so the probe is
/// bypassed to reproduce the slot-capped non-consensus trajectory).
fn dpg_scenario_preset(dir: &Path, eps: f64, solvable: bool) -> Result<PresetReport, HarnessError> {
    let mut out = PresetReport::default();
    let inst = build_section5_instance();
    let sched = GraphSchedule::default6();
    let diameter = crate::network::union_diameter(&sched, sched.s_window)
        .expect("default schedule is strongly connected")
        .max(1);
    let eps_vec = vec![eps; 6];
    let cuts = vec![vec![1.0]; 6];
    let tol = DpgTolerances::default();
    let opts = DpgOptions {
        diameter,
        probe_local_sets: solvable,
        record_trace: true,
        checkpoints: if solvable {
            vec![100, 1_000, 10_000]
        } else {
            Vec::new()
        },
        ..DpgOptions::default()
    };
    let run = run_dpg(&inst, &eps_vec, &cuts, &sched, &tol, &opts);

    let oracle = if solvable {
        Some(centralized_oracle(&inst, &eps_vec, &cuts).map_err(|_| {
            HarnessError::Config(ConfigError::Validation {
                field: "eps".to_string(),
                message: "oracle found the restricted set empty".to_string(),
            })
        })?)
    } else {
        None
    };

    emit_dpg_trace(&run, oracle.as_deref(), 0, &dir.join("dpg_trace.csv"), &mut out)?;

    // Convergence / disagreement chart.
    let trace = run.trace.as_ref().expect("trace was requested");
    let mut chart = if let Some(x_ref) = &oracle {
        let mut c = Chart::new(
            "Distance to the centralized solution",
            "slot t",
            "|| x_i(t) - x_ref ||",
        )
        .with_log_y();
        for i in 0..inst.m {
            let pts = trace
                .x
                .iter()
                .enumerate()
                .map(|(t, xs)| {
                    let d: f64 = xs[i]
                        .iter()
                        .zip(x_ref.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (t as f64, d.sqrt())
                })
                .collect();
            c.add_series(&format!("agent {}", i + 1), pts);
        }
        c
    } else {
        let mut c = Chart::new(
            "Disagreement under an unsolvable restriction",
            "slot t",
            "|| x_i(t) - mean x(t) ||",
        );
        for i in 0..inst.m {
            let pts = trace
                .dist_to_mean
                .iter()
                .enumerate()
                .map(|(t, d)| (t as f64, d[i]))
                .collect();
            c.add_series(&format!("agent {}", i + 1), pts);
        }
        c
    };
    chart.series.truncate(8);
    let chart_name = if solvable {
        "dpg_convergence.svg"
    } else {
        "dpg_disagreement.svg"
    };
    let chart_path = dir.join(chart_name);
    chart.write(&chart_path).map_err(HarnessError::Io)?;
    out.files.push(chart_path);

    match &run.outcome {
        DpgOutcome::Solved { x, slots_used, .. } => {
            out.lines
                .push(format!("solved: termination fired after {slots_used} slots"));
            if let Some(x_ref) = &oracle {
                for (i, xi) in x.iter().enumerate() {
                    let d: f64 = xi
                        .iter()
                        .zip(x_ref)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    out.lines
                        .push(format!("agent {}: || x - x_ref || = {d:.3e}", i + 1));
                }
            }
        }
        DpgOutcome::Unsolvable(reason) => {
            out.lines.push(format!(
                "unsolvable ({reason:?}) after {} slots; criterion never held: {}",
                run.slots_simulated,
                !run.criterion_history.iter().any(|&b| b)
            ));
        }
    }

    // Averaged-iterate rate table for the solvable scenario.
    if let (true, Some(x_ref)) = (solvable, &oracle) {
        let f0_star = evaluate_global_objective(&inst, x_ref) / inst.m as f64;
        let cost = CostDirection::new(inst.n, inst.m);
        let rate_path = dir.join("rate_statistic.csv");
        let mut rows = Vec::new();
        for (t, averages) in &run.checkpoint_averages {
            for (i, avg) in averages.iter().enumerate() {
                let gap = (cost.eval(avg) - f0_star).abs();
                let stat = gap * (*t as f64).sqrt() / (*t as f64).ln();
                rows.push(vec![
                    t.to_string(),
                    (i + 1).to_string(),
                    fmt_f64(gap),
                    fmt_f64(stat),
                ]);
            }
        }
        write_csv(&rate_path, &["t", "agent", "f0_gap", "statistic"], rows)
            .map_err(HarnessError::Io)?;
        out.files.push(rate_path);
    }
    Ok(out)
}

fn emit_dpg_trace(
    run: &DpgRun,
    oracle: Option<&[f64]>,
    stride: usize,
    path: &Path,
    out: &mut PresetReport,
) -> Result<(), HarnessError> {
    let Some(trace) = run.trace.as_ref() else {
        return Ok(());
    };
    let slots = trace.x.len();
    let stride = if stride == 0 {
        (slots / 4000).max(1)
    } else {
        stride
    };
    let mut header = vec!["slot", "agent"];
    let n = trace.x.first().map_or(0, |xs| xs[0].len());
    let coord_names: Vec<String> = (0..n).map(|d| format!("x{}", d + 1)).collect();
    header.extend(coord_names.iter().map(|s| s.as_str()));
    header.push("dist_to_mean");
    if oracle.is_some() {
        header.push("dist_to_ref");
    }
    header.extend(["h1", "e1", "e2", "e3"]);

    let mut rows = Vec::new();
    for t in (0..slots).step_by(stride) {
        for (i, xi) in trace.x[t].iter().enumerate() {
            let mut row = vec![t.to_string(), (i + 1).to_string()];
            row.extend(xi.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(trace.dist_to_mean[t][i]));
            if let Some(x_ref) = oracle {
                let d: f64 = xi
                    .iter()
                    .zip(x_ref)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                row.push(fmt_f64(d));
            }
            let c = trace.counters[t][i];
            row.extend([
                c.h1.to_string(),
                c.e1.to_string(),
                c.e2.to_string(),
                c.e3.to_string(),
            ]);
            rows.push(row);
        }
    }
    write_csv(path, &header, rows).map_err(HarnessError::Io)?;
    out.files.push(path.to_path_buf());
    Ok(())
}

/// Runs the outer loop across a parameter sweep, recording cut counts and
/// iteration totals per value.
fn sweep_preset(
    dir: &Path,
    param: &str,
    values: &[f64],
    apply: impl Fn(&mut RunConfig, f64),
) -> Result<PresetReport, HarnessError> {
    let mut out = PresetReport::default();
    let mut rows = Vec::new();
    let mut iter_series = Vec::new();
    let mut solv_series = Vec::new();
    let mut feas_series = Vec::new();
    let mut opt_series = Vec::new();

    for &v in values {
        let mut config = RunConfig::default();
        apply(&mut config, v);
        let resolved = resolve(config).map_err(HarnessError::Config)?;
        let result = outer_run(&resolved.instance, &resolved.schedule, &resolved.outer);
        let (report, terminated) = match result {
            Ok(r) => (r, true),
            Err(cap) => (cap.report, false),
        };
        let f_mean = report
            .mean_candidate()
            .map(|z| evaluate_global_objective(&resolved.instance, &z));
        rows.push(vec![
            fmt_f64(v),
            report.iterations.to_string(),
            terminated.to_string(),
            report.cut_counts.solvability.to_string(),
            report.cut_counts.feasibility.to_string(),
            report.cut_counts.optimality.to_string(),
            f_mean.map_or("inf".to_string(), fmt_f64),
        ]);
        iter_series.push((v, report.iterations as f64));
        solv_series.push((v, report.cut_counts.solvability as f64));
        feas_series.push((v, report.cut_counts.feasibility as f64));
        opt_series.push((v, report.cut_counts.optimality as f64));
        out.lines.push(format!(
            "{param}={v}: {} iterations, cuts S/F/O = {}/{}/{}",
            report.iterations,
            report.cut_counts.solvability,
            report.cut_counts.feasibility,
            report.cut_counts.optimality
        ));
    }

    let csv_path = dir.join(format!("sweep_{param}.csv"));
    write_csv(
        &csv_path,
        &[
            param,
            "iterations",
            "terminated",
            "solvability_cuts",
            "feasibility_cuts",
            "optimality_cuts",
            "f_mean_final",
        ],
        rows,
    )
    .map_err(HarnessError::Io)?;
    out.files.push(csv_path);

    let mut chart = Chart::new(
        &format!("Cut counts against {param}"),
        param,
        "count",
    )
    .with_log_x();
    chart.add_series("iterations", iter_series);
    chart.add_series("solvability cuts", solv_series);
    chart.add_series("feasibility cuts", feas_series);
    chart.add_series("optimality cuts", opt_series);
    let chart_path = dir.join(format!("cuts_vs_{param}.svg"));
    chart.write(&chart_path).map_err(HarnessError::Io)?;
    out.files.push(chart_path);
    Ok(out)
}
