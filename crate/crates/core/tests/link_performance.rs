#![allow(clippy::needless_range_loop)]

use cfisac_core::beamforming::{mrc_combiners, mrt_precoders, PrecoderRule, PrecoderSet, ScaledMrt};
use cfisac_core::channel::{sample_channels, ChannelSet, LargeScale};
use cfisac_core::linalg::Table;
use cfisac_core::performance::*;
use cfisac_core::scenario::{noise_power_watts, place_entities, SystemConfig};
use cfisac_core::{CVector, Complex64};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn topology(m: usize, l: usize, seed: u64) -> (LargeScale, f64, f64) {
    let cfg = SystemConfig { dl_aps: m, ul_aps: m, users: 3, targets: 2, antennas: l, seed, ..Default::default() };
    let ls = LargeScale::from_geometry(&place_entities(&cfg).unwrap()).unwrap();
    (ls, cfg.p_max_watts(), noise_power_watts(&cfg))
}

#[test]
fn closed_forms_track_monte_carlo() {
    for (m, l, seed) in [(4, 2, 21), (4, 8, 22)] {
        let (ls, p_max, sigma2) = topology(m, l, seed);
        let r = evaluate_performance(&ls, p_max, sigma2, 20_000, seed, &McOptions::default()).unwrap();
        for (closed, mc) in r.comm_se_closed.iter().zip(&r.comm_se_mc) {
            assert!(mc.z_score(*closed).abs() < 3.0, "comm closed {closed} mc {mc:?}");
        }
        for (closed, mc) in r.sens_se_closed.iter().zip(r.sens_se_mc.iter()) {
            assert!(mc.z_score(*closed).abs() < 3.0, "sensing closed {closed} mc {mc:?}");
        }
    }
}

#[test]
fn degenerate_sensing_instance_simulates_to_four() {
    let ls = LargeScale::uniform(1, 1, 0, 1, 1, 1.0, one()).unwrap();
    let est = sensing_sinr_monte_carlo(&ls, &ScaledMrt { eta: 1.0 }, 1.0, 40_000, 3, &McOptions::default()).unwrap();
    let e = est[(0, 0)];
    assert!(e.z_score(4.0).abs() < 3.0, "{e:?}");
}

#[test]
fn skipping_dli_removal_changes_the_estimate() {
    let (ls, p_max, sigma2) = topology(4, 2, 5);
    let eta = common_mrt_scale(&ls, p_max);
    let rule = ScaledMrt { eta };
    let on = McOptions::default();
    let off = McOptions { subtract_dli: false, ..on };
    let a = simulate_trials(&ls, &rule, sigma2, 1, 0..200, &on);
    let b = simulate_trials(&ls, &rule, sigma2, 1, 0..200, &off);
    assert!(a.mean_dli().iter().all(|&v| v == 0.0));
    assert!(b.mean_dli().iter().all(|&v| v > 0.0));
    assert_ne!(a.sensing_sinr(), b.sensing_sinr());
    // echo and noise draws are shared, only the residual moves
    assert_eq!(a.echo, b.echo);
}

#[test]
fn single_target_has_no_multi_target_interference() {
    let ls = LargeScale::uniform(2, 2, 2, 1, 4, 1.0, one()).unwrap();
    let s = simulate_trials(&ls, &ScaledMrt { eta: 1.0 }, 1.0, 4, 0..100, &McOptions::default());
    assert!(s.mean_mti().iter().all(|&v| v == 0.0));
    let two = LargeScale::uniform(2, 2, 2, 2, 4, 1.0, one()).unwrap();
    let s2 = simulate_trials(&two, &ScaledMrt { eta: 1.0 }, 1.0, 4, 0..100, &McOptions::default());
    assert!(s2.mean_mti().iter().all(|&v| v > 0.0));
}

#[test]
fn simulation_is_partition_invariant() {
    let (ls, p_max, sigma2) = topology(4, 2, 8);
    let rule = ScaledMrt { eta: common_mrt_scale(&ls, p_max) };
    let opts = McOptions::default();
    let whole = simulate_trials(&ls, &rule, sigma2, 17, 0..300, &opts);
    let mut parts = simulate_trials(&ls, &rule, sigma2, 17, 0..7, &opts);
    for (a, b) in [(7, 150), (150, 151), (151, 300)] {
        parts.append(simulate_trials(&ls, &rule, sigma2, 17, a..b, &opts));
    }
    assert_eq!(whole, parts);
}

// Leakage evaluated by explicit loops over APs and antennas.
fn leakage_oracle(ch: &ChannelSet, p: &PrecoderSet, sigma2: f64) -> Vec<Vec<f64>> {
    let (m_aps, users, targets) = (ch.h.rows(), p.w.cols(), ch.g_dl.cols());
    let gain = |t: usize, beams: &Table<CVector>, i: usize| {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..m_aps {
            let (g, b) = (&ch.g_dl[(m, t)], &beams[(m, i)]);
            for l in 0..g.len() {
                acc += g[l].conj() * b[l];
            }
        }
        acc.norm_sqr()
    };
    (0..targets)
        .map(|t| {
            (0..users)
                .map(|k| {
                    let mut den = sigma2;
                    for i in (0..users).filter(|&i| i != k) {
                        den += gain(t, &p.w, i);
                    }
                    for l in 0..p.s.cols() {
                        den += gain(t, &p.s, l);
                    }
                    (1.0 + gain(t, &p.w, k) / den).log2()
                })
                .collect()
        })
        .collect()
}

#[test]
fn leakage_matches_loop_oracle() {
    let ls = LargeScale::uniform(3, 1, 3, 2, 4, 0.7, one()).unwrap();
    for seed in 0..5 {
        let ch = sample_channels(&ls, seed);
        let p = mrt_precoders(&ch).scaled(0.3);
        let r = leakage_se(&ch, &p, 0.5).unwrap();
        let oracle = leakage_oracle(&ch, &p, 0.5);
        for t in 0..2 {
            for k in 0..3 {
                assert!((r.se[(t, k)] - oracle[t][k]).abs() < 1e-12 * oracle[t][k].max(1.0));
            }
            let max = oracle[t].iter().cloned().fold(0.0, f64::max);
            assert!((r.max_per_target[t] - max).abs() < 1e-12 * max.max(1.0));
        }
    }
}

#[test]
fn leakage_is_permutation_equivariant() {
    let ls = LargeScale::uniform(2, 1, 3, 2, 3, 1.0, one()).unwrap();
    let ch = sample_channels(&ls, 12);
    let p = mrt_precoders(&ch);
    let perm = [2usize, 0, 1];
    let mut ch2 = ch.clone();
    ch2.h = Table::from_fn(2, 3, |m, k| ch.h[(m, perm[k])].clone());
    let mut p2 = p.clone();
    p2.w = Table::from_fn(2, 3, |m, k| p.w[(m, perm[k])].clone());
    let a = leakage_se(&ch, &p, 1.0).unwrap();
    let b = leakage_se(&ch2, &p2, 1.0).unwrap();
    for t in 0..2 {
        for k in 0..3 {
            assert!((b.se[(t, k)] - a.se[(t, perm[k])]).abs() < 1e-12);
        }
        assert!((a.max_per_target[t] - b.max_per_target[t]).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn extra_target_never_raises_comm_sinr(
        zh in prop::collection::vec(1e-3f64..1.0, 6),
        zg in prop::collection::vec(1e-3f64..1.0, 4),
        l in 1usize..16,
        sigma2 in 1e-3f64..10.0,
    ) {
        let zeta_h = DMatrix::from_vec(2, 3, zh);
        let zeta_g = DMatrix::from_vec(2, 2, zg);
        let one_target = DMatrix::from_fn(2, 1, |m, _| zeta_g[(m, 0)]);
        let a = comm_sinr_closed_form(&zeta_h, &one_target, l, sigma2).unwrap();
        let b = comm_sinr_closed_form(&zeta_h, &zeta_g, l, sigma2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y <= x);
            prop_assert!(comm_se(*y) >= 0.0);
        }
    }
}

#[test]
fn uatf_single_antenna_single_user() {
    // E‖h‖² = 1, Var‖h‖² = 1: SINR = 1 / (1 + 1)
    let ls = LargeScale::uniform(1, 0, 1, 0, 1, 1.0, one()).unwrap();
    let r = uatf_se(&ls, &mrt_precoders, 1.0, 200_000, 2).unwrap();
    let expected = 1.5f64.log2();
    assert!((r.uatf_se[0] - expected).abs() < 0.02 * expected, "{} vs {expected}", r.uatf_se[0]);
}

#[test]
fn colocated_and_distributed_arrays_agree_with_equal_gains() {
    let cf = LargeScale::uniform(4, 0, 2, 0, 2, 1.0, one()).unwrap();
    let co = LargeScale::uniform(1, 0, 2, 0, 8, 1.0, one()).unwrap();
    let a = uatf_se(&cf, &mrt_precoders, 1.0, 40_000, 6).unwrap();
    let b = uatf_se(&co, &mrt_precoders, 1.0, 40_000, 7).unwrap();
    for k in 0..2 {
        assert!((a.uatf_se[k] - b.uatf_se[k]).abs() < 0.03 * a.uatf_se[k], "{a:?} {b:?}");
    }
}

#[test]
fn uatf_bound_is_below_ergodic_rate() {
    for seed in 0..4 {
        let (ls, p_max, sigma2) = topology(4, 4, 40 + seed);
        let rule = ScaledMrt { eta: common_mrt_scale(&ls, p_max) };
        let r = uatf_se(&ls, &rule, sigma2, 2000, seed).unwrap();
        for (u, e) in r.uatf_se.iter().zip(&r.ergodic_se) {
            assert!(*u <= e.value, "uatf {u} ergodic {}", e.value);
        }
    }
}

#[test]
fn scaled_mrt_uses_mrc_combiners() {
    let ls = LargeScale::uniform(1, 1, 0, 1, 2, 1.0, one()).unwrap();
    let ch = sample_channels(&ls, 0);
    let p = ScaledMrt { eta: 2.0 }.precoders(&ch);
    assert_eq!(p.u, mrc_combiners(&ch));
    assert!((p.s[(0, 0)].norm_squared() - 2.0 * ch.g_dl[(0, 0)].norm_squared()).abs() < 1e-12);
}
