use cfisac_core::channel::{sample_channels, LargeScale};
use cfisac_core::linalg::Table;
use cfisac_core::optimizer::{
    dominance_chain, maximize_sum_se, maximize_sum_se_secure, DesignProblem, DominanceChain, SolveReport,
};
use cfisac_core::performance::leakage_se;
use cfisac_core::scenario::{dbm_to_watts, noise_power_watts, place_entities, SystemConfig};
use cfisac_core::Error as ModelError;

use super::{at_point, mean, row_for, table_for, task_seed, topology_seed};
use crate::error::Result;
use crate::parallel::try_par_map;
use crate::spec::{ExperimentName, ExperimentSpec};
use crate::table::{ColumnType as C, ResultTable, Value};

/// Stream index of the single channel draw a design instance is solved on.
const CHANNEL_DRAW: usize = 0;

/// The design instance of one drop: channels drawn once from the geometry,
/// targets at their geometric bearings unless `angles_deg` overrides them.
pub fn design_problem(
    cfg: &SystemConfig,
    gamma_dbm: f64,
    delta_bps_hz: Option<f64>,
    angles_deg: Option<&[Vec<f64>]>,
) -> Result<DesignProblem> {
    let geometry = place_entities(cfg)?;
    let ls = LargeScale::from_geometry(&geometry)?;
    let bearings = geometry.dl_target_bearings();
    let angles = Table::from_fn(cfg.dl_aps, cfg.targets, |m, t| match angles_deg {
        Some(a) => a[m][t].to_radians(),
        None => bearings[m][t],
    });
    let channels = sample_channels(&ls, task_seed(cfg.seed, &[CHANNEL_DRAW]));
    let problem = DesignProblem::new(
        channels,
        angles,
        vec![dbm_to_watts(gamma_dbm); cfg.targets],
        cfg.p_max_watts(),
        noise_power_watts(cfg),
    )?;
    Ok(match delta_bps_hz {
        Some(d) => problem.with_leakage_cap(d)?,
        None => problem,
    })
}

/// A solved instance, or the constraints that made it infeasible.
#[derive(Debug, Clone)]
pub enum OptOutcome<T> {
    Solved(T),
    Infeasible(Vec<String>),
}

impl<T> OptOutcome<T> {
    pub fn solved(&self) -> Option<&T> {
        match self {
            OptOutcome::Solved(r) => Some(r),
            OptOutcome::Infeasible(_) => None,
        }
    }
}

fn outcome<T>(r: std::result::Result<T, ModelError>) -> Result<OptOutcome<T>> {
    match r {
        Ok(v) => Ok(OptOutcome::Solved(v)),
        Err(ModelError::Infeasible { violated }) => Ok(OptOutcome::Infeasible(violated)),
        Err(e) => Err(e.into()),
    }
}

struct Case {
    value: f64,
    /// AP count for sum-SE sweeps, user count for the secure sweep.
    layout: usize,
    topology: usize,
}

fn cases(spec: &ExperimentSpec, layouts: &[usize]) -> Vec<Case> {
    let mut out = Vec::new();
    for &value in &spec.sweep.values {
        for &layout in layouts {
            for topology in 0..spec.topologies {
                out.push(Case { value, layout, topology });
            }
        }
    }
    out
}

fn dims(cfg: &SystemConfig) -> Vec<(&'static str, Value)> {
    vec![
        ("M", cfg.dl_aps.into()),
        ("L", cfg.antennas.into()),
        ("K", cfg.users.into()),
        ("T", cfg.targets.into()),
    ]
}

const DIM_COLUMNS: [(&str, C); 4] = [("M", C::Int), ("L", C::Int), ("K", C::Int), ("T", C::Int)];

/// Sum-SE maximization per drop, with per-AP antennas fixed by
/// `total_antennas` when given (co-located versus cell-free) or by `L`.
pub(super) fn sum_se_sweep(spec: &ExperimentSpec) -> Result<ResultTable> {
    let cases = cases(spec, &spec.params.ap_counts);
    let config = |c: &Case| {
        let (mut cfg, params) = at_point(spec, c.value);
        cfg.dl_aps = c.layout;
        if let Some(total) = params.total_antennas {
            cfg.antennas = total / c.layout;
        }
        cfg.seed = topology_seed(spec, c.topology);
        (cfg, params)
    };
    let results = try_par_map(&cases, |c| {
        let (cfg, params) = config(c);
        let problem = design_problem(&cfg, params.gamma_dbm, params.delta_bps_hz, None)?;
        outcome(if problem.leakage_cap().is_some() {
            maximize_sum_se_secure(&problem)
        } else {
            maximize_sum_se(&problem)
        })
    })?;

    let mut cols = DIM_COLUMNS.to_vec();
    cols.extend([
        ("row", C::Text),
        ("topology", C::Int),
        ("feasible", C::Bool),
        ("sum_se", C::Float),
        ("mrt_sum_se", C::Float),
        ("baseline_sum_se", C::Float),
        ("iterations", C::Int),
        ("converged", C::Bool),
        ("n_feasible", C::Int),
    ]);
    let mut table = table_for(spec, &cols);
    for (group, reports) in cases.chunks(spec.topologies).zip(results.chunks(spec.topologies)) {
        let (cfg, _) = config(&group[0]);
        let sweep = super::sweep_value(spec, group[0].value);
        let solved: Vec<&SolveReport> = reports.iter().filter_map(OptOutcome::solved).collect();
        for (c, r) in group.iter().zip(reports) {
            let mut cells = dims(&config(c).0);
            cells.push(("row", "instance".into()));
            cells.push(("topology", c.topology.into()));
            cells.push(("feasible", r.solved().is_some().into()));
            if let Some(r) = r.solved() {
                cells.extend([
                    ("sum_se", r.sum_se().into()),
                    ("mrt_sum_se", r.mrt_sum_se.into()),
                    ("baseline_sum_se", r.baseline_sum_se.into()),
                    ("iterations", r.iterations.into()),
                    ("converged", r.converged.into()),
                ]);
            }
            table.push(row_for(&table, sweep.clone(), cells))?;
        }
        let avg = |f: fn(&SolveReport) -> f64| -> Value {
            if solved.is_empty() {
                Value::Missing
            } else {
                mean(&solved.iter().map(|r| f(r)).collect::<Vec<_>>()).into()
            }
        };
        let mut cells = dims(&cfg);
        cells.extend([
            ("row", "mean".into()),
            ("feasible", (!solved.is_empty()).into()),
            ("sum_se", avg(|r| r.sum_se())),
            ("mrt_sum_se", avg(|r| r.mrt_sum_se)),
            ("baseline_sum_se", avg(|r| r.baseline_sum_se)),
            ("n_feasible", solved.len().into()),
        ]);
        table.push(row_for(&table, sweep, cells))?;
    }
    Ok(table)
}

fn max_leakage(problem: &DesignProblem, r: &SolveReport) -> Result<f64> {
    let leak = leakage_se(&problem.channels, &r.precoders, problem.sigma2_watts)?;
    Ok(leak.max_per_target.iter().copied().fold(0.0, f64::max))
}

/// Secure design per drop and user count, reported with the two relaxations
/// of the dominance chain.
pub(super) fn secure_sweep(spec: &ExperimentSpec) -> Result<ResultTable> {
    let cases = cases(spec, &spec.params.user_counts);
    let config = |c: &Case| {
        let (mut cfg, params) = at_point(spec, c.value);
        cfg.users = c.layout;
        cfg.seed = topology_seed(spec, c.topology);
        (cfg, params)
    };
    let results = try_par_map(&cases, |c| {
        let (cfg, params) = config(c);
        let delta = params.delta_bps_hz.unwrap_or(f64::INFINITY);
        let problem = design_problem(&cfg, params.gamma_dbm, Some(delta), None)?;
        Ok(match outcome(dominance_chain(&problem))? {
            OptOutcome::Solved(chain) => {
                let leak_secure = max_leakage(&problem, chain.secure.as_ref().expect("capped problem"))?;
                let leak_bp = max_leakage(&problem, &chain.beampattern)?;
                OptOutcome::Solved((chain, leak_secure, leak_bp))
            }
            OptOutcome::Infeasible(v) => OptOutcome::Infeasible(v),
        })
    })?;

    let mut cols = DIM_COLUMNS.to_vec();
    cols.extend([
        ("row", C::Text),
        ("topology", C::Int),
        ("feasible", C::Bool),
        ("sum_se_secure", C::Float),
        ("sum_se_beampattern", C::Float),
        ("sum_se_unconstrained", C::Float),
        ("max_leakage_secure", C::Float),
        ("max_leakage_beampattern", C::Float),
        ("n_feasible", C::Int),
    ]);
    let mut table = table_for(spec, &cols);
    type Solved = (DominanceChain, f64, f64);
    let values = |s: &Solved| {
        let secure = s.0.secure.as_ref().expect("capped problem").sum_se();
        [secure, s.0.beampattern.sum_se(), s.0.unconstrained.sum_se(), s.1, s.2]
    };
    const NAMES: [&str; 5] = [
        "sum_se_secure",
        "sum_se_beampattern",
        "sum_se_unconstrained",
        "max_leakage_secure",
        "max_leakage_beampattern",
    ];
    for (group, outs) in cases.chunks(spec.topologies).zip(results.chunks(spec.topologies)) {
        let (cfg, _) = config(&group[0]);
        let sweep = super::sweep_value(spec, group[0].value);
        let solved: Vec<[f64; 5]> = outs.iter().filter_map(OptOutcome::solved).map(values).collect();
        for (c, o) in group.iter().zip(outs) {
            let mut cells = dims(&config(c).0);
            cells.push(("row", "instance".into()));
            cells.push(("topology", c.topology.into()));
            cells.push(("feasible", o.solved().is_some().into()));
            if let Some(s) = o.solved() {
                cells.extend(NAMES.iter().zip(values(s)).map(|(n, v)| (*n, v.into())));
            }
            table.push(row_for(&table, sweep.clone(), cells))?;
        }
        let mut cells = dims(&cfg);
        cells.push(("row", "mean".into()));
        cells.push(("feasible", (!solved.is_empty()).into()));
        cells.push(("n_feasible", solved.len().into()));
        if !solved.is_empty() {
            for (i, n) in NAMES.iter().enumerate() {
                let col: Vec<f64> = solved.iter().map(|v| v[i]).collect();
                // leakage is reported as the worst drop, SE as the average
                let v = if n.starts_with("max_") { col.iter().copied().fold(0.0, f64::max) } else { mean(&col) };
                cells.push((n, v.into()));
            }
        }
        table.push(row_for(&table, sweep, cells))?;
    }
    debug_assert!(spec.name == ExperimentName::SecureSweep);
    Ok(table)
}
