use cfisac::experiments::steered_precoders;
use cfisac::table::Value;
use cfisac::{run_experiment, ExperimentName, ExperimentSpec, ResultTable};
use cfisac_core::sensing::tx_beampattern_gain;

fn spec(text: &str) -> ExperimentSpec {
    ExperimentSpec::from_toml_str(text).unwrap()
}

fn num(t: &ResultTable, row: &[Value], col: &str) -> f64 {
    row[t.column_index(col).unwrap()].as_f64().unwrap()
}

#[test]
fn hardening_variance_falls_as_one_over_l() {
    let t = run_experiment(&spec(
        "name = \"hardening\"\ntrials = 40000\n[sweep]\nparameter = \"L\"\nvalues = [1, 10, 100]\n",
    ))
    .unwrap();
    for (row, want) in t.rows.iter().zip([1.0, 0.1, 0.01]) {
        let var = num(&t, row, "var_gain");
        assert!((var / want - 1.0).abs() < 0.08, "var {var} vs {want}");
        assert!((num(&t, row, "mean_gain") - 1.0).abs() < 0.02);
        assert!((num(&t, row, "fav_mean_abs2") / want - 1.0).abs() < 0.08);
    }
}

#[test]
fn perf_sweep_rows_agree_with_simulation() {
    let t = run_experiment(&spec(
        "name = \"perf_sweep\"\ntopologies = 2\ntrials = 3000\n[sweep]\nparameter = \"L\"\nvalues = [4]\n[params]\nap_counts = [4]\n",
    ))
    .unwrap();
    assert_eq!(t.rows.len(), 2);
    for row in &t.rows {
        let (closed, mc, se) = (num(&t, row, "closed"), num(&t, row, "mc"), num(&t, row, "stderr"));
        assert!(se > 0.0);
        assert!((closed - mc).abs() < 4.0 * se, "{closed} vs {mc} ± {se}");
    }
}

#[test]
fn opt_sweep_reports_instances_and_means() {
    let t = run_experiment(&spec(
        "name = \"opt_sweep\"\ntopologies = 2\n[sweep]\nparameter = \"L\"\nvalues = [6]\n[params]\nap_counts = [4]\n",
    ))
    .unwrap();
    let instances = t.select(&[("row", "instance".into())]);
    let means = t.select(&[("row", "mean".into())]);
    assert_eq!((instances.len(), means.len()), (2, 1));
    let avg = instances.iter().map(|r| num(&t, r, "sum_se")).sum::<f64>() / 2.0;
    assert!((num(&t, means[0], "sum_se") - avg).abs() < 1e-12 * avg);
    for r in instances {
        assert!(num(&t, r, "sum_se") >= num(&t, r, "baseline_sum_se"));
    }
    assert!(!t.infeasible_everywhere());
}

#[test]
fn unreachable_floor_is_recorded_not_fatal() {
    let t = run_experiment(&spec(
        "name = \"opt_sweep\"\ntopologies = 2\n[sweep]\nparameter = \"gamma_dbm\"\nvalues = [60]\n[params]\nap_counts = [4]\n",
    ))
    .unwrap();
    assert_eq!(t.rows.len(), 3);
    assert!(t.column("feasible").iter().all(|v| v.as_bool() == Some(false)));
    assert!(t.column("sum_se").iter().all(|v| **v == Value::Missing));
    assert!(t.infeasible_everywhere());
}

#[test]
fn secure_sweep_respects_the_cap_and_chain() {
    let t = run_experiment(&spec(
        "name = \"secure_sweep\"\ntopologies = 1\n[sweep]\nparameter = \"M\"\nvalues = [4]\n[params]\nuser_counts = [2, 4]\n",
    ))
    .unwrap();
    for r in t.select(&[("row", "instance".into())]) {
        assert!(num(&t, r, "max_leakage_secure") <= 0.5 + 1e-4);
        assert!(num(&t, r, "sum_se_unconstrained") >= num(&t, r, "sum_se_beampattern"));
        assert!(num(&t, r, "sum_se_beampattern") >= num(&t, r, "sum_se_secure"));
    }
}

#[test]
fn cf_vs_colocated_adds_the_single_array() {
    let t = run_experiment(&spec(
        "name = \"cf_vs_colocated\"\ntopologies = 2\ntrials = 300\n[sweep]\nparameter = \"K\"\nvalues = [5, 10]\n[params]\nap_counts = [25]\n",
    ))
    .unwrap();
    assert_eq!(t.rows.len(), 4);
    let layouts: Vec<&str> = t.column("layout").iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(layouts, ["cf", "colocated", "cf", "colocated"]);
    assert!(t.column("uatf_below_ergodic").iter().all(|v| v.as_bool() == Some(true)));
    for r in &t.rows {
        assert_eq!(num(&t, r, "M") * num(&t, r, "L"), 100.0);
    }
}

#[test]
fn steered_heatmap_peaks_on_every_bearing() {
    let s = spec("name = \"beampattern_heatmap\"\n[params]\nbeams = \"steered\"\ngrid_step_deg = 1.0\n");
    let t = run_experiment(&s).unwrap();
    assert_eq!(t.rows.len(), 4 * 181);
    for (ap, bearings) in s.params.angles_deg.iter().enumerate() {
        let rows = t.select(&[("ap", Value::Int(ap as i64))]);
        let gain = |deg: f64| num(&t, rows[(deg + 90.0) as usize], "gain_linear");
        for &b in bearings {
            // a local maximum at or next to the bearing
            let best = (-1..=1).map(|d| b + d as f64).max_by(|x, y| gain(*x).total_cmp(&gain(*y))).unwrap();
            assert!(gain(best) >= gain(best - 1.0) && gain(best) >= gain(best + 1.0), "AP {ap} bearing {b}");
        }
    }
}

#[test]
fn steered_beams_spend_the_full_budget() {
    let s = ExperimentSpec::defaults(ExperimentName::BeampatternHeatmap);
    let p = steered_precoders(&s.system, &s.params.angles_deg);
    let budget = s.system.p_max_watts();
    for m in 0..4 {
        assert!((p.ap_power(m) - budget).abs() < 1e-12 * budget);
        let own = s.params.angles_deg[m][0].to_radians();
        // each beam alone reaches L·p_max/T at its bearing
        let l = s.system.antennas as f64;
        let single = tx_beampattern_gain([&p.s[(m, 0)]], own);
        assert!((single - l * budget / 3.0).abs() < 1e-9 * single);
    }
}

#[test]
fn compare_reports_both_layouts() {
    let t = run_experiment(&spec("name = \"beampattern_compare\"\n[params]\ngrid_step_deg = 2.0\n")).unwrap();
    let cf = t.select(&[("layout", "cf".into())]).len();
    let co = t.select(&[("layout", "colocated".into())]).len();
    assert_eq!((cf, co), (2 * 91, 91));
    assert!(t.column("feasible").iter().all(|v| v.as_bool() == Some(true)));
}
