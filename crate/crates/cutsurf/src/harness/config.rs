//! JSON run configuration: parsing, validation, and resolution into the
//! concrete instance, schedule, and solver parameters.

use crate::cutting::OuterConfig;
use crate::dpg::DpgTolerances;
use crate::network::{is_ujsc, union_diameter, GraphSchedule};
use crate::problem::{instance_by_name, ProblemInstance};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(String),
    Validation { field: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "config io error: {e}"),
            Self::Parse(e) => write!(f, "config parse error: {e}"),
            Self::Validation { field, message } => {
                write!(f, "invalid config field `{field}`: {message}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Scalar applied to every agent, or one value per agent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrPerAgent {
    Scalar(f64),
    PerAgent(Vec<f64>),
}

impl ScalarOrPerAgent {
    pub fn resolve(&self, m: usize, field: &str) -> Result<Vec<f64>, ConfigError> {
        match self {
            Self::Scalar(v) => Ok(vec![*v; m]),
            Self::PerAgent(vs) => {
                if vs.len() == m {
                    Ok(vs.clone())
                } else {
                    Err(invalid(field, format!("expected {m} entries, got {}", vs.len())))
                }
            }
        }
    }
}

/// Named topology or explicit per-slot directed edge lists (period implied
/// by the list length).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Named(String),
    EdgeLists(Vec<Vec<(usize, usize)>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiameterSpec {
    Named(String),
    Fixed(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub instance: String,
    pub schedule: ScheduleSpec,
    /// Window length for joint strong connectivity. Defaults per named
    /// schedule; required for explicit edge lists.
    pub s_window: Option<usize>,
    /// "auto" (union-graph diameter), "m-1", or a fixed value.
    pub diameter: DiameterSpec,
    pub eps0: ScalarOrPerAgent,
    pub r: f64,
    /// Initial finite cut sets, one list per agent; empty by default.
    pub y0: Option<Vec<Vec<f64>>>,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub eps5: f64,
    pub eps6: f64,
    pub alpha0: f64,
    pub t_cap: usize,
    pub outer_cap: usize,
    pub grid_n: usize,
    pub refine_tol: f64,
    pub projection_tol: f64,
    pub max_sweeps: usize,
    pub lipschitz_y: Option<f64>,
    pub probe_local_sets: bool,
    pub dedupe_tol: f64,
    pub out_dir: String,
    /// Reserved; the current pipeline is deterministic.
    pub seed: u64,
    pub trace_dpg: bool,
    /// Rows kept per trace slot stride; 0 picks a stride that keeps traces
    /// under a few thousand rows.
    pub trace_stride: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            instance: "section5".to_string(),
            schedule: ScheduleSpec::Named("default6".to_string()),
            s_window: None,
            diameter: DiameterSpec::Named("auto".to_string()),
            eps0: ScalarOrPerAgent::Scalar(100.0),
            r: 10.0,
            y0: None,
            eps1: 1e-2,
            eps2: 1e-6,
            eps3: 1e-6,
            eps4: 0.1,
            eps5: 0.1,
            eps6: 0.1,
            alpha0: 1.0,
            t_cap: 100_000,
            outer_cap: 200,
            grid_n: 2001,
            refine_tol: 1e-10,
            projection_tol: 1e-10,
            max_sweeps: 10_000,
            lipschitz_y: None,
            probe_local_sets: true,
            dedupe_tol: 1e-12,
            out_dir: "out".to_string(),
            seed: 0,
            trace_dpg: false,
            trace_stride: 0,
        }
    }
}

/// A validated, fully resolved run.
pub struct ResolvedRun {
    pub config: RunConfig,
    pub instance: ProblemInstance,
    pub schedule: GraphSchedule,
    pub outer: OuterConfig,
    pub warnings: Vec<String>,
}

/// Parses a config file; unknown fields are rejected.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// Validates and resolves a parsed config. Returns the concrete problem,
/// schedule, solver parameters, and any precision warnings.
pub fn resolve(config: RunConfig) -> Result<ResolvedRun, ConfigError> {
    let instance = instance_by_name(&config.instance)
        .ok_or_else(|| invalid("instance", format!("unknown instance `{}`", config.instance)))?;
    let m = instance.m;

    if config.r <= 1.0 {
        return Err(invalid("r", "reduction parameter must exceed 1"));
    }
    let eps0 = config.eps0.resolve(m, "eps0")?;
    if let Some(bad) = eps0.iter().find(|&&e| e <= 0.0) {
        return Err(invalid("eps0", format!("must be positive, got {bad}")));
    }
    for (name, v) in [
        ("eps1", config.eps1),
        ("eps2", config.eps2),
        ("eps3", config.eps3),
        ("eps4", config.eps4),
        ("eps5", config.eps5),
        ("eps6", config.eps6),
        ("alpha0", config.alpha0),
        ("refine_tol", config.refine_tol),
        ("projection_tol", config.projection_tol),
        ("dedupe_tol", config.dedupe_tol),
    ] {
        if v <= 0.0 {
            return Err(invalid(name, "must be positive"));
        }
    }
    if config.grid_n < 3 {
        return Err(invalid("grid_n", "need at least 3 grid points"));
    }
    if config.t_cap == 0 || config.outer_cap == 0 || config.max_sweeps == 0 {
        return Err(invalid("t_cap", "caps must be positive"));
    }

    let (schedule, default_s) = match &config.schedule {
        ScheduleSpec::Named(name) => match name.as_str() {
            "default6" => {
                if m != 6 {
                    return Err(invalid(
                        "schedule",
                        format!("`default6` needs 6 agents, instance has {m}"),
                    ));
                }
                (GraphSchedule::default6(), 2)
            }
            "cycle6x2" => {
                if m != 6 {
                    return Err(invalid(
                        "schedule",
                        format!("`cycle6x2` needs 6 agents, instance has {m}"),
                    ));
                }
                (GraphSchedule::split_cycle6(), 2)
            }
            "singleton" => {
                if m != 1 {
                    return Err(invalid(
                        "schedule",
                        format!("`singleton` needs 1 agent, instance has {m}"),
                    ));
                }
                (GraphSchedule::singleton(), 1)
            }
            other => return Err(invalid("schedule", format!("unknown schedule `{other}`"))),
        },
        ScheduleSpec::EdgeLists(lists) => {
            if lists.is_empty() {
                return Err(invalid("schedule", "need at least one slot"));
            }
            for edges in lists {
                for &(i, j) in edges {
                    if i >= m || j >= m {
                        return Err(invalid(
                            "schedule",
                            format!("edge ({i}, {j}) out of range for {m} agents"),
                        ));
                    }
                }
            }
            let s = config
                .s_window
                .ok_or_else(|| invalid("s_window", "required for explicit edge lists"))?;
            (GraphSchedule::new(m, lists.clone(), s), s)
        }
    };
    let s_window = config.s_window.unwrap_or(default_s);
    let mut schedule = schedule;
    schedule.s_window = s_window;
    if !is_ujsc(&schedule, s_window) {
        return Err(invalid(
            "schedule",
            format!("union graphs over windows of {s_window} slots are not all strongly connected"),
        ));
    }

    let diameter = match &config.diameter {
        DiameterSpec::Fixed(d) => *d,
        DiameterSpec::Named(name) => match name.as_str() {
            // Degenerate single-agent graphs have diameter 0, which would
            // trivialize the counter threshold; floor at 1.
            "auto" => union_diameter(&schedule, s_window)
                .map_err(|e| invalid("schedule", e.to_string()))?
                .max(1),
            "m-1" => m.saturating_sub(1).max(1),
            other => return Err(invalid("diameter", format!("unknown diameter spec `{other}`"))),
        },
    };
    if diameter == 0 {
        return Err(invalid("diameter", "must be at least 1"));
    }

    let y0 = match &config.y0 {
        None => vec![Vec::new(); m],
        Some(lists) => {
            if lists.len() != m {
                return Err(invalid("y0", format!("expected {m} lists, got {}", lists.len())));
            }
            for (i, (list, g)) in lists.iter().zip(&instance.constraints).enumerate() {
                for &y in list {
                    if y < g.y_lo || y > g.y_hi {
                        return Err(invalid(
                            "y0",
                            format!("agent {i}: {y} outside [{}, {}]", g.y_lo, g.y_hi),
                        ));
                    }
                }
            }
            lists.clone()
        }
    };

    let mut warnings = Vec::new();
    if eps0.iter().any(|&e| e < 1e-7) {
        warnings.push(
            "eps0 below 1e-7: floating-point precision may prevent finite termination".to_string(),
        );
    }
    if config.r > 1e3 {
        warnings.push("r above 1e3: cut precision may stall the feasibility loop".to_string());
    }
    let inner_max = config.eps1.max(config.eps2).max(config.eps3);
    let outer_min = config.eps4.min(config.eps5).min(config.eps6);
    if inner_max > outer_min / 10.0 {
        warnings.push(format!(
            "inner tolerances (max {inner_max:.1e}) should be well below outer tolerances \
             (min {outer_min:.1e}); expected a factor of at least 10"
        ));
    }

    let outer = OuterConfig {
        eps0,
        r: config.r,
        y0,
        dpg_tol: DpgTolerances {
            eps1: config.eps1,
            eps2: config.eps2,
            eps3: config.eps3,
        },
        eps4: config.eps4,
        eps5: config.eps5,
        eps6: config.eps6,
        alpha0: config.alpha0,
        t_cap: config.t_cap,
        outer_cap: config.outer_cap,
        grid_n: config.grid_n,
        refine_tol: config.refine_tol,
        lipschitz_y: config.lipschitz_y,
        diameter,
        probe_local_sets: config.probe_local_sets,
        projection_tol: config.projection_tol,
        max_sweeps: config.max_sweeps,
        dedupe_tol: config.dedupe_tol,
    };
    Ok(ResolvedRun {
        config,
        instance,
        schedule,
        outer,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"instance": "section5"}"#).unwrap();
        let resolved = resolve(cfg).unwrap();
        assert_eq!(resolved.outer.eps0, vec![100.0; 6]);
        assert_eq!(resolved.outer.r, 10.0);
        assert_eq!(resolved.outer.diameter, 3);
        assert_eq!(resolved.schedule.s_window, 1);
        assert!(resolved.warnings.is_empty());

        let cfg: RunConfig =
            serde_json::from_str(r#"{"instance": "section5", "schedule": "cycle6x2"}"#).unwrap();
        let resolved = resolve(cfg).unwrap();
        assert_eq!(resolved.schedule.s_window, 2);
        assert_eq!(resolved.outer.diameter, 5);
    }

    #[test]
    fn rejects_bad_r() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"instance": "section5", "r": 0.5}"#).unwrap();
        match resolve(cfg) {
            Err(ConfigError::Validation { field, .. }) => assert_eq!(field, "r"),
            other => panic!("expected validation error, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn tiny_eps0_warns_but_passes() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"instance": "section5", "eps0": 1e-9}"#).unwrap();
        let resolved = resolve(cfg).unwrap();
        assert!(resolved
            .warnings
            .iter()
            .any(|w| w.contains("eps0 below 1e-7")));
    }

    #[test]
    fn rejects_unknown_fields() {
        let err = serde_json::from_str::<RunConfig>(r#"{"instanec": "section5"}"#);
        assert!(err.is_err());
    }

    #[test]
    fn explicit_schedule_requires_window_and_connectivity() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"instance": "section5",
                "schedule": [[[0,1],[1,2],[2,3],[3,4],[4,5],[5,0]]]}"#,
        )
        .unwrap();
        match resolve(cfg) {
            Err(ConfigError::Validation { field, .. }) => assert_eq!(field, "s_window"),
            _ => panic!("expected missing s_window"),
        }

        let cfg: RunConfig = serde_json::from_str(
            r#"{"instance": "section5", "s_window": 1,
                "schedule": [[[0,1],[1,2],[2,3],[3,4],[4,5],[5,0]]]}"#,
        )
        .unwrap();
        let resolved = resolve(cfg).unwrap();
        assert_eq!(resolved.outer.diameter, 5);

        // A schedule whose union never reaches agent 0 fails validation.
        let cfg: RunConfig = serde_json::from_str(
            r#"{"instance": "section5", "s_window": 1,
                "schedule": [[[1,2],[2,3],[3,4],[4,5],[5,1]]]}"#,
        )
        .unwrap();
        match resolve(cfg) {
            Err(ConfigError::Validation { field, .. }) => assert_eq!(field, "schedule"),
            _ => panic!("expected connectivity failure"),
        }
    }

    #[test]
    fn per_agent_eps0_and_y0() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"instance": "section5",
                "eps0": [1, 2, 3, 4, 5, 6],
                "y0": [[1.0], [], [], [], [], [-0.5]]}"#,
        )
        .unwrap();
        let resolved = resolve(cfg).unwrap();
        assert_eq!(resolved.outer.eps0[3], 4.0);
        assert_eq!(resolved.outer.y0[0], vec![1.0]);
        assert!(resolved.outer.y0[1].is_empty());

        let cfg: RunConfig = serde_json::from_str(
            r#"{"instance": "section5", "y0": [[2.0], [], [], [], [], []]}"#,
        )
        .unwrap();
        match resolve(cfg) {
            Err(ConfigError::Validation { field, .. }) => assert_eq!(field, "y0"),
            _ => panic!("expected out-of-interval y0 rejection"),
        }
    }

    #[test]
    fn mismatched_tolerance_scales_warn() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"instance": "section5", "eps1": 0.05}"#).unwrap();
        let resolved = resolve(cfg).unwrap();
        assert!(!resolved.warnings.is_empty());
    }
}
