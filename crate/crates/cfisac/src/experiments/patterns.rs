use cfisac_core::beamforming::{steering_vector, PrecoderSet};
use cfisac_core::optimizer::{maximize_sum_se, maximize_sum_se_secure};
use cfisac_core::performance::leakage_se;
use cfisac_core::scenario::SystemConfig;
use cfisac_core::sensing::{angle_grid_deg, beampattern_profile};
use cfisac_core::Complex64;

use super::design::design_problem;
use super::{at_point, row_for, table_for, topology_seed};
use crate::error::Result;
use crate::parallel::try_par_map;
use crate::reports::gain_db;
use crate::spec::{BeamMode, ExperimentName, ExperimentSpec};
use crate::table::{ColumnType as C, ResultTable, Value};

/// Sensing-only beams: one steering vector per bearing, together using the
/// full per-AP budget.
pub fn steered_precoders(cfg: &SystemConfig, angles_deg: &[Vec<f64>]) -> PrecoderSet {
    let (m, t, l) = (cfg.dl_aps, cfg.targets, cfg.antennas);
    let mut p = PrecoderSet::zeros(m, cfg.users, t, l);
    if t == 0 {
        return p;
    }
    let amp = Complex64::new((cfg.p_max_watts() / (t * l) as f64).sqrt(), 0.0);
    for (i, row) in angles_deg.iter().enumerate() {
        for (j, a) in row.iter().enumerate() {
            p.s[(i, j)] = steering_vector(l, a.to_radians()) * amp;
        }
    }
    p
}

struct Layout {
    label: &'static str,
    cfg: SystemConfig,
    angles: Vec<Vec<f64>>,
}

struct Design {
    feasible: bool,
    precoders: Option<PrecoderSet>,
    sum_se: Option<f64>,
    max_leakage: Option<f64>,
}

fn layouts(spec: &ExperimentSpec, value: f64, topology: usize) -> (Vec<Layout>, crate::spec::Params) {
    let (mut cfg, params) = at_point(spec, value);
    cfg.seed = topology_seed(spec, topology);
    let mut out = vec![Layout { label: "cf", cfg: cfg.clone(), angles: params.angles_deg.clone() }];
    if spec.name == ExperimentName::BeampatternCompare {
        let mut co = cfg;
        co.antennas = params.total_antennas.unwrap_or(co.dl_aps * co.antennas);
        co.dl_aps = 1;
        out.push(Layout { label: "colocated", cfg: co, angles: vec![params.colocated_angles_deg.clone()] });
    }
    (out, params)
}

fn design(layout: &Layout, params: &crate::spec::Params) -> Result<Design> {
    if params.beams == BeamMode::Steered {
        return Ok(Design {
            feasible: true,
            precoders: Some(steered_precoders(&layout.cfg, &layout.angles)),
            sum_se: None,
            max_leakage: None,
        });
    }
    let problem = design_problem(&layout.cfg, params.gamma_dbm, params.delta_bps_hz, Some(&layout.angles))?;
    let solved = if problem.leakage_cap().is_some() {
        maximize_sum_se_secure(&problem)
    } else {
        maximize_sum_se(&problem)
    };
    match solved {
        Ok(r) => {
            let leak = if problem.targets() > 0 && problem.users() > 0 {
                let l = leakage_se(&problem.channels, &r.precoders, problem.sigma2_watts)?;
                Some(l.max_per_target.iter().copied().fold(0.0, f64::max))
            } else {
                None
            };
            Ok(Design { feasible: true, sum_se: Some(r.sum_se()), max_leakage: leak, precoders: Some(r.precoders) })
        }
        Err(cfisac_core::Error::Infeasible { .. }) => {
            Ok(Design { feasible: false, precoders: None, sum_se: None, max_leakage: None })
        }
        Err(e) => Err(e.into()),
    }
}

/// Transmit beampattern of every AP over the angle grid.
pub(super) fn beampatterns(spec: &ExperimentSpec) -> Result<ResultTable> {
    let mut tasks = Vec::new();
    for &v in &spec.sweep.values {
        for topo in 0..spec.topologies {
            tasks.push((v, topo));
        }
    }
    let designs = try_par_map(&tasks, |&(v, topo)| {
        let (layouts, params) = layouts(spec, v, topo);
        layouts.into_iter().map(|l| Ok((design(&l, &params)?, l))).collect::<Result<Vec<_>>>()
    })?;

    let mut table = table_for(
        spec,
        &[
            ("layout", C::Text),
            ("topology", C::Int),
            ("ap", C::Int),
            ("angle_deg", C::Float),
            ("gain_linear", C::Float),
            ("gain_db", C::Float),
            ("feasible", C::Bool),
            ("sum_se", C::Float),
            ("max_leakage_se", C::Float),
        ],
    );
    let grid = angle_grid_deg(spec.params.grid_step_deg);
    let points = grid.len();
    for (&(v, topo), per_layout) in tasks.iter().zip(&designs) {
        let sweep = super::sweep_value(spec, v);
        for (d, layout) in per_layout {
            let common = vec![
                ("layout", Value::from(layout.label)),
                ("topology", topo.into()),
                ("feasible", d.feasible.into()),
                ("sum_se", d.sum_se.into()),
                ("max_leakage_se", d.max_leakage.into()),
            ];
            let Some(p) = &d.precoders else {
                table.push(row_for(&table, sweep.clone(), common))?;
                continue;
            };
            for ap in 0..layout.cfg.dl_aps {
                let profile = beampattern_profile(p, ap, &grid)?;
                for (i, g) in profile.gains.iter().enumerate() {
                    // exact grid labels rather than round-tripped radians
                    let angle = if points > 1 { -90.0 + 180.0 * i as f64 / (points - 1) as f64 } else { 0.0 };
                    let mut cells = common.clone();
                    cells.extend([
                        ("ap", ap.into()),
                        ("angle_deg", angle.into()),
                        ("gain_linear", (*g).into()),
                        ("gain_db", gain_db(*g).into()),
                    ]);
                    table.push(row_for(&table, sweep.clone(), cells))?;
                }
            }
        }
    }
    Ok(table)
}
