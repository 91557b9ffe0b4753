use cfisac_core::beamforming::{PerApConjugate, ScaledMrt};
use cfisac_core::channel::{favorable_propagation_stats, hardening_stats, LargeScale};
use cfisac_core::performance::{common_mrt_scale, uatf_se, McOptions, PerfReport};
use cfisac_core::scenario::{noise_power_watts, place_entities};

use super::{at_point, mean, row_for, table_for, task_seed, topology_seed};
use crate::error::Result;
use crate::parallel::{simulate_parallel, try_par_map};
use crate::spec::ExperimentSpec;
use crate::table::{ColumnType as C, ResultTable, Value};

pub(super) fn hardening(spec: &ExperimentSpec) -> Result<ResultTable> {
    let mut table = table_for(
        spec,
        &[
            ("mean_gain", C::Float),
            ("var_gain", C::Float),
            ("var_gain_times_l", C::Float),
            ("fav_mean_abs2", C::Float),
            ("fav_mean_abs2_times_l", C::Float),
            ("trials", C::Int),
        ],
    );
    let stats = try_par_map(&spec.sweep.values, |&v| {
        let l = v as usize;
        let h = hardening_stats(l, 1.0, spec.trials, spec.seed)?;
        let f = favorable_propagation_stats(l, 1.0, 1.0, spec.trials, spec.seed)?;
        Ok((h, f))
    })?;
    for (&v, (h, f)) in spec.sweep.values.iter().zip(stats) {
        let l = v;
        let row = row_for(
            &table,
            Value::Int(v as i64),
            vec![
                ("mean_gain", h.mean_cv.into()),
                ("var_gain", h.var_cv.into()),
                ("var_gain_times_l", (h.var_cv * l).into()),
                ("fav_mean_abs2", f.mean_abs2.into()),
                ("fav_mean_abs2_times_l", (f.mean_abs2 * l).into()),
                ("trials", spec.trials.into()),
            ],
        );
        table.push(row)?;
    }
    Ok(table)
}

/// Conjugate beamforming with statistical CSI at the users, distributed
/// single-antenna APs against one central array with the same antenna count.
pub(super) fn cf_vs_colocated(spec: &ExperimentSpec) -> Result<ResultTable> {
    let total = spec.params.total_antennas.expect("validated");
    let mut layouts: Vec<usize> = spec.params.ap_counts.clone();
    if !layouts.contains(&1) {
        layouts.push(1);
    }
    let mut tasks = Vec::new();
    for (vi, &v) in spec.sweep.values.iter().enumerate() {
        for (li, &m) in layouts.iter().enumerate() {
            for topo in 0..spec.topologies {
                tasks.push((vi, v, li, m, topo));
            }
        }
    }
    let results = try_par_map(&tasks, |&(vi, v, li, m, topo)| {
        let (mut cfg, params) = at_point(spec, v);
        cfg.dl_aps = m;
        cfg.antennas = total / m;
        cfg.seed = topology_seed(spec, topo);
        let ls = LargeScale::from_geometry(&place_entities(&cfg)?)?;
        let per_ap = if params.equal_total_power { cfg.p_max_watts() / m as f64 } else { cfg.p_max_watts() };
        let rule = PerApConjugate { p_max_watts: per_ap };
        Ok(uatf_se(&ls, &rule, noise_power_watts(&cfg), spec.trials, task_seed(cfg.seed, &[vi, li]))?)
    })?;

    let mut table = table_for(
        spec,
        &[
            ("layout", C::Text),
            ("M", C::Int),
            ("L", C::Int),
            ("sum_se_uatf", C::Float),
            ("sum_se_ergodic", C::Float),
            ("per_user_se_uatf", C::Float),
            ("per_user_se_ergodic", C::Float),
            ("uatf_below_ergodic", C::Bool),
            ("topologies", C::Int),
        ],
    );
    let per_point = layouts.len() * spec.topologies;
    for (vi, &v) in spec.sweep.values.iter().enumerate() {
        for (li, &m) in layouts.iter().enumerate() {
            let start = vi * per_point + li * spec.topologies;
            let reports = &results[start..start + spec.topologies];
            let users = reports[0].uatf_se.len().max(1) as f64;
            let uatf: Vec<f64> = reports.iter().map(|r| r.sum_uatf()).collect();
            let ergodic: Vec<f64> = reports.iter().map(|r| r.sum_ergodic()).collect();
            let below = reports.iter().all(|r| r.uatf_se.iter().zip(&r.ergodic_se).all(|(u, e)| *u <= e.value));
            let row = row_for(
                &table,
                super::sweep_value(spec, v),
                vec![
                    ("layout", if m == 1 { "colocated" } else { "cf" }.into()),
                    ("M", m.into()),
                    ("L", (total / m).into()),
                    ("sum_se_uatf", mean(&uatf).into()),
                    ("sum_se_ergodic", mean(&ergodic).into()),
                    ("per_user_se_uatf", (mean(&uatf) / users).into()),
                    ("per_user_se_ergodic", (mean(&ergodic) / users).into()),
                    ("uatf_below_ergodic", below.into()),
                    ("topologies", spec.topologies.into()),
                ],
            );
            table.push(row)?;
        }
    }
    Ok(table)
}

/// One closed-form versus Monte-Carlo evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfInstance {
    pub sweep_value: f64,
    /// DL and UL AP count (M = N).
    pub aps: usize,
    pub topology: usize,
    pub report: PerfReport,
}

/// Closed-form and Monte-Carlo SE of every `(sweep value, M = N, topology)`
/// under common-scale MRT/MRC, in that nesting order.
pub fn perf_instances(spec: &ExperimentSpec) -> Result<Vec<PerfInstance>> {
    spec.validate()?;
    let mut tasks = Vec::new();
    for (vi, &v) in spec.sweep.values.iter().enumerate() {
        for (mi, &m) in spec.params.ap_counts.iter().enumerate() {
            for topo in 0..spec.topologies {
                tasks.push((vi, v, mi, m, topo));
            }
        }
    }
    try_par_map(&tasks, |&(vi, v, mi, m, topo)| {
        let (mut cfg, _) = at_point(spec, v);
        cfg.dl_aps = m;
        cfg.ul_aps = m;
        cfg.seed = topology_seed(spec, topo);
        let ls = LargeScale::from_geometry(&place_entities(&cfg)?)?;
        let sigma2 = noise_power_watts(&cfg);
        let eta = common_mrt_scale(&ls, cfg.p_max_watts());
        let samples = simulate_parallel(
            &ls,
            &ScaledMrt { eta },
            sigma2,
            task_seed(cfg.seed, &[vi, mi]),
            spec.trials as u64,
            &McOptions::default(),
        );
        let report = PerfReport::from_samples(&ls, eta, sigma2, &samples)?;
        Ok(PerfInstance { sweep_value: v, aps: m, topology: topo, report })
    })
}

pub(super) fn perf_sweep(spec: &ExperimentSpec) -> Result<ResultTable> {
    let instances = perf_instances(spec)?;
    let mut table = table_for(
        spec,
        &[
            ("M", C::Int),
            ("metric", C::Text),
            ("closed", C::Float),
            ("mc", C::Float),
            ("stderr", C::Float),
            ("max_abs_z", C::Float),
            ("topologies", C::Int),
        ],
    );
    let n = spec.topologies as f64;
    for chunk in instances.chunks(spec.topologies) {
        let first = &chunk[0];
        let comm = chunk.iter().map(|i| {
            let r = &i.report;
            let z = r.comm_se_mc.iter().zip(&r.comm_se_closed).map(|(e, c)| e.z_score(*c).abs());
            (r.sum_comm_closed(), r.sum_comm_mc(), r.comm_se_mc.iter().map(|e| e.stderr.powi(2)).sum::<f64>(), z.fold(0.0, f64::max))
        });
        let sens = chunk.iter().map(|i| {
            let r = &i.report;
            let z = r.sens_se_mc.iter().zip(r.sens_se_closed.iter()).map(|(e, c)| e.z_score(*c).abs());
            (r.sum_sens_closed(), r.sum_sens_mc(), r.sens_se_mc.iter().map(|e| e.stderr.powi(2)).sum::<f64>(), z.fold(0.0, f64::max))
        });
        for (metric, parts) in [("comm_sum_se", comm.collect::<Vec<_>>()), ("sens_sum_se", sens.collect())] {
            let closed: f64 = parts.iter().map(|p| p.0).sum::<f64>() / n;
            let mc: f64 = parts.iter().map(|p| p.1).sum::<f64>() / n;
            // links and drops treated as independent
            let stderr = parts.iter().map(|p| p.2).sum::<f64>().sqrt() / n;
            let z = parts.iter().map(|p| p.3).fold(0.0, f64::max);
            let row = row_for(
                &table,
                super::sweep_value(spec, first.sweep_value),
                vec![
                    ("M", first.aps.into()),
                    ("metric", metric.into()),
                    ("closed", closed.into()),
                    ("mc", mc.into()),
                    ("stderr", stderr.into()),
                    ("max_abs_z", z.into()),
                    ("topologies", spec.topologies.into()),
                ],
            );
            table.push(row)?;
        }
    }
    Ok(table)
}
