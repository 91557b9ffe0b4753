//! Named case-study pipelines.
//!
//! Every experiment walks the sweep values, builds one configuration per
//! point and averages over `topologies` random drops. Drop `i` uses the
//! geometry seed `trial_seed(seed, i)` at every sweep point, so curves are
//! compared on common user and target positions.

mod design;
mod monte_carlo;
mod patterns;

use cfisac_core::rng::trial_seed;
use cfisac_core::scenario::SystemConfig;

use crate::error::Result;
use crate::spec::{ExperimentName, ExperimentSpec, Params};
use crate::table::{Column, ColumnType, Metadata, ResultTable, Value};

pub use design::{design_problem, OptOutcome};
pub use monte_carlo::{perf_instances, PerfInstance};
pub use patterns::steered_precoders;

/// Runs a validated spec on the current rayon pool.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    match spec.name {
        ExperimentName::Hardening => monte_carlo::hardening(spec),
        ExperimentName::CfVsColocated => monte_carlo::cf_vs_colocated(spec),
        ExperimentName::PerfSweep => monte_carlo::perf_sweep(spec),
        ExperimentName::OptSweep | ExperimentName::CfColocatedSe => design::sum_se_sweep(spec),
        ExperimentName::SecureSweep => design::secure_sweep(spec),
        ExperimentName::BeampatternHeatmap | ExperimentName::SecureBeampattern | ExperimentName::BeampatternCompare => {
            patterns::beampatterns(spec)
        }
    }
}

/// Geometry seed of drop `topology`.
pub fn topology_seed(spec: &ExperimentSpec, topology: usize) -> u64 {
    trial_seed(spec.seed, topology as u64)
}

/// Seed of one work item, mixed from a base seed and its indices.
pub(crate) fn task_seed(base: u64, parts: &[usize]) -> u64 {
    parts.iter().fold(base, |s, &p| trial_seed(s, p as u64))
}

/// Configuration and params at one sweep point.
pub(crate) fn at_point(spec: &ExperimentSpec, value: f64) -> (SystemConfig, Params) {
    let mut system = spec.system.clone();
    let mut params = spec.params.clone();
    spec.sweep.parameter.apply(value, &mut system, &mut params);
    (system, params)
}

pub(crate) fn sweep_column(spec: &ExperimentSpec) -> Column {
    let kind = if spec.sweep.parameter.is_integer() { ColumnType::Int } else { ColumnType::Float };
    Column::new(spec.sweep.parameter.as_str(), kind)
}

pub(crate) fn sweep_value(spec: &ExperimentSpec, v: f64) -> Value {
    if spec.sweep.parameter.is_integer() {
        Value::Int(v as i64)
    } else {
        Value::Float(v)
    }
}

/// Sweep column followed by `rest`, dropping any column the sweep already names.
pub(crate) fn table_for(spec: &ExperimentSpec, rest: &[(&str, ColumnType)]) -> ResultTable {
    let sweep = sweep_column(spec);
    let mut cols = vec![sweep.clone()];
    cols.extend(rest.iter().filter(|(n, _)| *n != sweep.name).map(|(n, k)| Column::new(n, *k)));
    ResultTable::new(cols, Metadata::for_spec(spec))
}

/// Builds a row for [`table_for`]: named cells in column order, skipping
/// cells whose column was dropped.
pub(crate) fn row_for(table: &ResultTable, sweep: Value, cells: Vec<(&str, Value)>) -> Vec<Value> {
    let mut row = vec![sweep];
    for col in &table.columns[1..] {
        let v = cells.iter().find(|(n, _)| *n == col.name).map(|(_, v)| v.clone());
        row.push(v.unwrap_or(Value::Missing));
    }
    row
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
