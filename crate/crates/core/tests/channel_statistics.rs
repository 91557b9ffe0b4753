use cfisac_core::channel::{favorable_propagation_stats, hardening_stats, sample_channels, LargeScale};
use cfisac_core::linalg::norm_sqr;
use cfisac_core::scenario::{pathloss_db, pathloss_linear, place_entities, SystemConfig};
use cfisac_core::stats::{mean, sample_variance};
use cfisac_core::Complex64;
use proptest::prelude::*;

fn within_3se(xs: &[f64], expected: f64) -> bool {
    let se = (sample_variance(xs) / xs.len() as f64).sqrt();
    (mean(xs) - expected).abs() <= 3.0 * se
}

#[test]
fn uniform_users_are_centered() {
    let cfg = SystemConfig { users: 1000, targets: 0, ..Default::default() };
    let g = place_entities(&cfg).unwrap();
    let xs: Vec<f64> = g.user_positions.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = g.user_positions.iter().map(|p| p.y).collect();
    assert!(within_3se(&xs, 100.0), "x mean {}", mean(&xs));
    assert!(within_3se(&ys, 100.0), "y mean {}", mean(&ys));
    assert!(g.user_positions.iter().all(|p| (0.0..=200.0).contains(&p.x) && (0.0..=200.0).contains(&p.y)));
}

#[test]
fn pathloss_matches_hand_arithmetic() {
    // 36.7*2 + 22.7 + 26*log10(3) = 96.1 + 12.405...
    let expected = 96.1 + 26.0 * 3f64.log10();
    assert!((pathloss_db(100.0, 3e9) - expected).abs() < 1e-12);
    assert!((expected - 108.505).abs() < 1e-3);
    assert_eq!(pathloss_linear(5.0, 3e9), pathloss_linear(10.0, 3e9));
}

proptest! {
    #[test]
    fn pathloss_is_monotone(d1 in 10.0f64..5000.0, gap in 1e-3f64..1000.0, fc in 1e8f64..1e11) {
        let z1 = pathloss_linear(d1, fc);
        let z2 = pathloss_linear(d1 + gap, fc);
        prop_assert!(z1 > z2);
        prop_assert!(z2 > 0.0 && z1.is_finite());
    }
}

#[test]
fn link_norm_has_expected_mean() {
    let ls = LargeScale::uniform(1, 1, 1, 1, 8, 1.0, Complex64::new(1.0, 0.0)).unwrap();
    let norms: Vec<f64> = (0..20_000u64).map(|s| norm_sqr(&sample_channels(&ls, s).h[(0, 0)])).collect();
    assert!(within_3se(&norms, 8.0), "mean {}", mean(&norms));
}

#[test]
fn every_link_matches_its_large_scale_gain() {
    let cfg = SystemConfig { dl_aps: 4, ul_aps: 4, users: 3, targets: 2, antennas: 4, seed: 3, ..Default::default() };
    let ls = LargeScale::from_geometry(&place_entities(&cfg).unwrap()).unwrap();
    let draws: Vec<_> = (0..4000u64).map(|s| sample_channels(&ls, s)).collect();
    let check = |label: &str, zeta: f64, f: &dyn Fn(&cfisac_core::channel::ChannelSet) -> f64| {
        let xs: Vec<f64> = draws.iter().map(|c| f(c) / zeta).collect();
        assert!(within_3se(&xs, 4.0), "{label}: {}", mean(&xs));
    };
    for m in 0..4 {
        for k in 0..3 {
            check("h", ls.zeta_h[(m, k)], &|c| norm_sqr(&c.h[(m, k)]));
        }
        for t in 0..2 {
            check("g_dl", ls.zeta_gdl[(m, t)], &|c| norm_sqr(&c.g_dl[(m, t)]));
            check("g_ul", ls.zeta_gul[(m, t)], &|c| norm_sqr(&c.g_ul[(m, t)]));
        }
    }
}

#[test]
fn distinct_links_are_uncorrelated() {
    let ls = LargeScale::uniform(2, 1, 2, 1, 1, 1.0, Complex64::new(1.0, 0.0)).unwrap();
    let mut prods = Vec::new();
    let mut cross_ap = Vec::new();
    for s in 0..10_000u64 {
        let c = sample_channels(&ls, s);
        prods.push((c.h[(0, 0)][0].conj() * c.h[(0, 1)][0]).re);
        cross_ap.push((c.h[(0, 0)][0].conj() * c.h[(1, 0)][0]).re);
    }
    assert!(within_3se(&prods, 0.0));
    assert!(within_3se(&cross_ap, 0.0));
}

#[test]
fn sampling_is_reproducible() {
    let ls = LargeScale::uniform(3, 2, 2, 2, 4, 0.5, Complex64::new(1.0, 0.0)).unwrap();
    assert_eq!(sample_channels(&ls, 9), sample_channels(&ls, 9));
    assert_ne!(sample_channels(&ls, 9).h, sample_channels(&ls, 10).h);
}

#[test]
fn hardening_variance_is_gamma_variance() {
    for l in [1usize, 10, 100] {
        let s = hardening_stats(l, 2.5, 100_000, 11).unwrap();
        // ‖h‖²/(βL) ~ Gamma(L, 1/L): mean 1, variance 1/L
        assert!((s.mean_cv - 1.0).abs() < 0.01, "L={l} mean {}", s.mean_cv);
        assert!((s.var_cv * l as f64 - 1.0).abs() < 0.15, "L={l} var {}", s.var_cv);
    }
}

#[test]
fn favorable_propagation_decays_as_one_over_l() {
    for l in [1usize, 10, 64, 100] {
        let s = favorable_propagation_stats(l, 1.0, 3.0, 100_000, 5).unwrap();
        assert!((s.mean_abs2 * l as f64 - 1.0).abs() < 0.15, "L={l}: {}", s.mean_abs2);
        // the complex mean has standard error sqrt(E|·|² / trials)
        let se = (s.mean_abs2 / s.trials as f64).sqrt();
        assert!(s.mean.norm() < 4.0 * se, "L={l} mean {} se {se}", s.mean);
    }
}
