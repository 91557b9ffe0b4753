use cfisac_core::beamforming::{steering_vector, transmit_signal, PrecoderSet, SymbolBlock};
use cfisac_core::linalg::Table;
use cfisac_core::rng::{complex_normal, stream_rng, StreamKind};
use cfisac_core::sensing::*;
use cfisac_core::{CMatrix, CVector, Complex64};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| complex_normal(rng))
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| complex_normal(rng))
}

#[test]
fn tx_gain_is_the_symbol_average() {
    let mut rng = stream_rng(4, StreamKind::Statistics, 9, 0);
    let l = 6;
    let mut p = PrecoderSet::zeros(1, 2, 2, l);
    for k in 0..2 {
        p.w[(0, k)] = random_vector(&mut rng, l);
        p.s[(0, k)] = random_vector(&mut rng, l);
    }
    let mut sym_rng = stream_rng(4, StreamKind::Symbols, 0, 0);
    for theta in [-1.0, -0.2, 0.3, 1.2] {
        let a = steering_vector(l, theta);
        let draws = 10_000;
        let mc: f64 = (0..draws)
            .map(|_| {
                let sym = SymbolBlock::draw(2, 2, true, &mut sym_rng);
                let x = &transmit_signal(&p, &sym).unwrap()[0];
                a.dotc(x).norm_sqr()
            })
            .sum::<f64>()
            / draws as f64;
        let g = tx_beampattern_gain(ap_beams(&p, 0), theta);
        assert!((mc - g).abs() < 0.02 * g, "theta {theta}: mc {mc} closed {g}");
    }
}

#[test]
fn receive_gain_ignores_global_phase() {
    let mut rng = stream_rng(1, StreamKind::Statistics, 9, 1);
    let u = random_vector(&mut rng, 5);
    let rotated = &u * Complex64::from_polar(1.0, 0.77);
    for theta in [-0.9, 0.0, 0.4] {
        assert!((rx_beampattern_gain(&u, theta) - rx_beampattern_gain(&rotated, theta)).abs() < 1e-12);
    }
    let b = steering_vector(5, 0.4);
    assert!((rx_beampattern_gain(&b, 0.4) - 25.0).abs() < 1e-12);
}

#[test]
fn profile_peaks_at_each_steered_bearing() {
    let l = 16;
    let grid = angle_grid_deg(0.5);
    let bearings = [-60.0f64, 20.0, 40.0];
    let mut p = PrecoderSet::zeros(1, 0, 3, l);
    for (t, b) in bearings.iter().enumerate() {
        p.s[(0, t)] = steering_vector(l, b.to_radians());
    }
    let prof = beampattern_profile(&p, 0, &grid).unwrap();
    assert!(prof.gains.iter().all(|&g| g >= 0.0));
    let peaks: Vec<f64> = prof.top_peaks(3).iter().map(|&i| prof.angles_rad[i].to_degrees()).collect();
    for b in bearings {
        assert!(peaks.iter().any(|p| (p - b).abs() <= 0.5 + 1e-9), "{b} not in {peaks:?}");
    }
}

// log2 det via LU determinant, independent of the Cholesky path
fn mi_oracle(x: &CMatrix, r: &CMatrix, sigma2: f64, m: usize) -> f64 {
    let slots = x.ncols();
    let a = CMatrix::identity(slots, slots) + x.adjoint() * r * x / Complex64::new(sigma2, 0.0);
    m as f64 * a.determinant().re.log2()
}

#[test]
fn mi_matches_determinant_oracle() {
    let mut rng = stream_rng(2, StreamKind::Statistics, 9, 2);
    for (l, slots) in [(2, 3), (4, 4), (6, 2)] {
        let x = random_matrix(&mut rng, l, slots);
        let g = random_matrix(&mut rng, l, l);
        let r = &g * g.adjoint();
        let got = sensing_mi(&x, &r, 0.7, 3).unwrap();
        let want = mi_oracle(&x, &r, 0.7, 3);
        assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{got} vs {want}");
        assert!((sensing_mi_rate(&x, &r, 0.7, 3).unwrap() - got / slots as f64).abs() < 1e-12);
    }
    let zero = CMatrix::zeros(3, 2);
    assert_eq!(sensing_mi(&zero, &CMatrix::identity(3, 3), 1.0, 5).unwrap(), 0.0);
}

#[test]
fn mi_rejects_indefinite_covariance() {
    let mut r = CMatrix::identity(2, 2);
    r[(1, 1)] = Complex64::new(-1.0, 0.0);
    assert!(sensing_mi(&CMatrix::identity(2, 2), &r, 1.0, 1).is_err());
}

proptest! {
    #[test]
    fn mi_grows_with_power(seed in 0u64..1000, c in 1.0f64..10.0) {
        let mut rng = stream_rng(seed, StreamKind::Statistics, 9, 3);
        let x = random_matrix(&mut rng, 3, 2);
        let g = random_matrix(&mut rng, 3, 3);
        let r = &g * g.adjoint();
        let base = sensing_mi(&x, &r, 1.0, 2).unwrap();
        let louder = sensing_mi(&(&x * Complex64::new(c, 0.0)), &r, 1.0, 2).unwrap();
        prop_assert!(louder >= base - 1e-12);
    }
}

fn point_target(seed: u64) -> PointTarget {
    let mut rng = stream_rng(seed, StreamKind::Statistics, 9, 4);
    PointTarget { rx_antennas: 5, waveform: random_matrix(&mut rng, 4, 6) }
}

#[test]
fn analytic_fim_matches_finite_differences() {
    for (seed, params) in [(1, [0.3, 0.8, -0.4]), (2, [-0.9, 1.5, 0.2]), (3, [0.05, -0.3, 0.6])] {
        let model = point_target(seed);
        let a = fim(&model, &params, 0.1, 4).unwrap();
        let d = fim_finite_difference(&model, &params, 0.1, 4, 1e-5).unwrap();
        let scale = a.matrix.abs().max();
        assert!((&a.matrix - &d.matrix).abs().max() < 1e-5 * scale);
        let (ca, cd) = (crb_all(&a).unwrap(), crb_all(&d).unwrap());
        for (x, y) in ca.iter().zip(&cd) {
            assert!((x - y).abs() < 1e-4 * x, "{x} vs {y}");
        }
        // symmetric PSD
        assert!((&a.matrix - a.matrix.transpose()).abs().max() <= 1e-9 * scale);
        assert!(a.matrix.clone().symmetric_eigenvalues().iter().all(|&v| v >= -1e-9 * scale));
    }
}

#[test]
fn fim_scales_inversely_with_noise() {
    let model = point_target(5);
    let params = [0.4, 1.0, 0.5];
    let base = fim(&model, &params, 1.0, 2).unwrap().matrix;
    for c in [0.5, 2.0, 8.0] {
        let scaled = fim(&model, &params, c, 2).unwrap().matrix * c;
        assert!((&scaled - &base).abs().max() <= 1e-14 * base.abs().max());
    }
}

#[test]
fn crb_bounds_and_snr_trend() {
    let model = point_target(6);
    let params = [-0.2, 0.9, -0.1];
    let mut previous = [f64::INFINITY; 3];
    for sigma2 in [10.0, 1.0, 0.1, 0.01] {
        let f = fim(&model, &params, sigma2, 1).unwrap();
        let bounds = crb_all(&f).unwrap();
        for n in 0..3 {
            assert!(bounds[n] >= 1.0 / f.matrix[(n, n)] * (1.0 - 1e-12));
            assert!(bounds[n] < previous[n]);
            assert!((crb(&f, n).unwrap() - bounds[n]).abs() <= 1e-15 * bounds[n]);
        }
        previous.copy_from_slice(&bounds);
    }
}

#[test]
fn zero_amplitude_makes_angle_unidentifiable() {
    let model = point_target(7);
    let f = fim(&model, &[0.3, 0.0, 0.0], 1.0, 1).unwrap();
    assert!(f.is_ill_conditioned());
    assert!(crb(&f, 0).is_err());
}

#[test]
fn combined_gain_is_product() {
    let l = 4;
    let w = steering_vector(l, 0.2);
    let u = steering_vector(l, -0.5);
    let beams = Table::from_fn(1, 1, |_, _| w.clone());
    let pc = combined_beampattern_gain(&u, -0.5, beams.iter(), 0.2);
    assert!((pc - 16.0 * 16.0).abs() < 1e-9);
}
