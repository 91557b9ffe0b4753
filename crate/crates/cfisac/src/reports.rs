//! Flat CSV and JSON renderings of single-instance reports.

use cfisac_core::optimizer::SolveReport;
use cfisac_core::performance::PerfReport;
use cfisac_core::sensing::BeampatternProfile;
use serde_json::{json, Value as Json};

use crate::error::{HarnessError, Result};

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| HarnessError::format("csv", e))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::format("csv", e))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per link metric: `entity,i,j,metric,closed,mc,stderr`.
///
/// Users are `entity = user, i = k`, sensing links `entity = ul_ap, i = n,
/// j = t`, leakage `entity = target, i = t, j = k` (no Monte-Carlo column,
/// the leakage is already a trial mean).
pub fn perf_report_csv(r: &PerfReport) -> Result<String> {
    let mut w = writer();
    let e = |e: csv::Error| HarnessError::format("csv", e);
    w.write_record(["entity", "i", "j", "metric", "closed", "mc", "stderr"]).map_err(e)?;
    for (k, (c, m)) in r.comm_se_closed.iter().zip(&r.comm_se_mc).enumerate() {
        w.write_record(["user", &k.to_string(), "", "comm_se", &num(*c), &num(m.value), &num(m.stderr)])
            .map_err(e)?;
    }
    for n in 0..r.sens_se_closed.rows() {
        for t in 0..r.sens_se_closed.cols() {
            let m = r.sens_se_mc[(n, t)];
            let row = [
                "ul_ap",
                &n.to_string(),
                &t.to_string(),
                "sensing_se",
                &num(r.sens_se_closed[(n, t)]),
                &num(m.value),
                &num(m.stderr),
            ];
            w.write_record(row).map_err(e)?;
        }
    }
    for t in 0..r.leak_se.rows() {
        for k in 0..r.leak_se.cols() {
            w.write_record(["target", &t.to_string(), &k.to_string(), "leakage_se", "", &num(r.leak_se[(t, k)]), ""])
                .map_err(e)?;
        }
    }
    finish(w)
}

pub fn perf_report_json(r: &PerfReport) -> Result<String> {
    serde_json::to_string_pretty(r).map_err(|e| HarnessError::format("json", e))
}

pub fn perf_report_from_json(text: &str) -> Result<PerfReport> {
    serde_json::from_str(text).map_err(|e| HarnessError::format("perf report json", e))
}

pub fn solve_report_json(r: &SolveReport) -> Result<Json> {
    let table = |t: &cfisac_core::linalg::Table<f64>| -> Vec<Vec<f64>> { (0..t.rows()).map(|i| t.row(i).to_vec()).collect() };
    Ok(json!({
        "sum_se": r.sum_se(),
        "iterations": r.iterations,
        "converged": r.converged,
        "restored": r.restored,
        "mrt_sum_se": r.mrt_sum_se,
        "baseline_sum_se": r.baseline_sum_se,
        "objective_trace": r.objective_trace,
        "ap_powers_watts": r.precoders.ap_powers(),
        "slacks": {
            "power": r.feasibility.power,
            "beampattern": table(&r.feasibility.beampattern),
            "leakage": table(&r.feasibility.leakage),
        },
    }))
}

/// `iteration,sum_se` for convergence plots.
pub fn trace_csv(r: &SolveReport) -> Result<String> {
    let mut w = writer();
    let e = |e: csv::Error| HarnessError::format("csv", e);
    w.write_record(["iteration", "sum_se"]).map_err(e)?;
    for (i, v) in r.objective_trace.iter().enumerate() {
        w.write_record([i.to_string(), num(*v)]).map_err(e)?;
    }
    finish(w)
}

/// Gain in dB, with `-inf` for an exact null.
pub fn gain_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// `angle_deg,gain_linear,gain_db`.
pub fn beampattern_csv(p: &BeampatternProfile) -> Result<String> {
    let mut w = writer();
    let e = |e: csv::Error| HarnessError::format("csv", e);
    w.write_record(["angle_deg", "gain_linear", "gain_db"]).map_err(e)?;
    for (a, g) in p.angles_rad.iter().zip(&p.gains) {
        w.write_record([num(a.to_degrees()), num(*g), num(gain_db(*g))]).map_err(e)?;
    }
    finish(w)
}
