//! Rayleigh channel realizations and multi-antenna asymptotics.
//!
//! Every channel vector follows `a = ζ^{1/2} ã` with `ã ~ CN(0, I_L)`; the
//! large-scale gain `ζ` comes from the UMi path loss of the link distance.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::Table;
use crate::rng::{complex_normal, stream_rng, StreamKind};
use crate::scenario::{pathloss_linear, Point, SystemGeometry};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Large-scale gains of every link plus the target reflection amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScale {
    /// `M × K`, DL AP to user.
    pub zeta_h: DMatrix<f64>,
    /// `M × T`, DL AP to target.
    pub zeta_gdl: DMatrix<f64>,
    /// `N × T`, target to UL AP.
    pub zeta_gul: DMatrix<f64>,
    /// `M × N`, DL AP to UL AP.
    pub zeta_f: DMatrix<f64>,
    pub alpha: Vec<Complex64>,
    pub antennas: usize,
}

impl LargeScale {
    /// Validates dimensions and positivity of every gain.
    pub fn new(
        zeta_h: DMatrix<f64>,
        zeta_gdl: DMatrix<f64>,
        zeta_gul: DMatrix<f64>,
        zeta_f: DMatrix<f64>,
        alpha: Vec<Complex64>,
        antennas: usize,
    ) -> Result<Self> {
        let m = zeta_h.nrows();
        let t = zeta_gdl.ncols();
        let n = zeta_gul.nrows();
        if antennas == 0 {
            return Err(Error::InvalidArgument("antennas must be at least 1".into()));
        }
        if zeta_gdl.nrows() != m || zeta_f.nrows() != m || zeta_f.ncols() != n {
            return Err(Error::Dimension(format!(
                "inconsistent AP counts: h {}x{}, g_dl {}x{}, g_ul {}x{}, f {}x{}",
                zeta_h.nrows(),
                zeta_h.ncols(),
                zeta_gdl.nrows(),
                zeta_gdl.ncols(),
                zeta_gul.nrows(),
                zeta_gul.ncols(),
                zeta_f.nrows(),
                zeta_f.ncols()
            )));
        }
        if zeta_gul.ncols() != t || alpha.len() != t {
            return Err(Error::Dimension(format!(
                "target count mismatch: g_dl has {t}, g_ul has {}, alpha has {}",
                zeta_gul.ncols(),
                alpha.len()
            )));
        }
        for (name, table) in [("h", &zeta_h), ("g_dl", &zeta_gdl), ("g_ul", &zeta_gul), ("f", &zeta_f)] {
            for r in 0..table.nrows() {
                for c in 0..table.ncols() {
                    let v = table[(r, c)];
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(Error::NonPositiveGain { link: format!("{name}[{r}][{c}]"), value: v });
                    }
                }
            }
        }
        Ok(Self { zeta_h, zeta_gdl, zeta_gul, zeta_f, alpha, antennas })
    }

    /// Gains from the UMi path loss of every link in `geometry`, with
    /// optional log-normal shadowing drawn from the geometry seed.
    pub fn from_geometry(geometry: &SystemGeometry) -> Result<Self> {
        let cfg = &geometry.config;
        let seed = cfg.seed;
        let std_db = cfg.shadowing_std_db;
        let gain = |link: usize, a: &Point, b: &Point, i: usize, j: usize| {
            let mut z = pathloss_linear(a.distance(b), cfg.fc_hz);
            if std_db > 0.0 {
                let mut rng = stream_rng(seed, StreamKind::Shadowing, link, (i << 14) | j);
                let x: f64 = rng.sample(StandardNormal);
                z *= libm::pow(10.0, std_db * x / 10.0);
            }
            z
        };
        let dl = &geometry.dl_ap_positions;
        let ul = &geometry.ul_ap_positions;
        let users = &geometry.user_positions;
        let targets: Vec<Point> = geometry.target_positions().copied().collect();
        let zeta_h = DMatrix::from_fn(dl.len(), users.len(), |m, k| gain(0, &dl[m], &users[k], m, k));
        let zeta_gdl = DMatrix::from_fn(dl.len(), targets.len(), |m, t| gain(1, &dl[m], &targets[t], m, t));
        let zeta_gul = DMatrix::from_fn(ul.len(), targets.len(), |n, t| gain(2, &ul[n], &targets[t], n, t));
        let zeta_f = DMatrix::from_fn(dl.len(), ul.len(), |m, n| gain(3, &dl[m], &ul[n], m, n));
        let alpha = geometry.targets.iter().map(|t| t.reflection_amplitude).collect();
        Self::new(zeta_h, zeta_gdl, zeta_gul, zeta_f, alpha, cfg.antennas)
    }

    /// All gains set to `zeta` (useful for analytic checks).
    pub fn uniform(m: usize, n: usize, k: usize, t: usize, antennas: usize, zeta: f64, alpha: Complex64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(m, k, zeta),
            DMatrix::from_element(m, t, zeta),
            DMatrix::from_element(n, t, zeta),
            DMatrix::from_element(m, n, zeta),
            alpha::repeat(alpha, t),
            antennas,
        )
    }

    pub fn dl_aps(&self) -> usize {
        self.zeta_h.nrows()
    }

    pub fn ul_aps(&self) -> usize {
        self.zeta_gul.nrows()
    }

    pub fn users(&self) -> usize {
        self.zeta_h.ncols()
    }

    pub fn targets(&self) -> usize {
        self.zeta_gdl.ncols()
    }
}

mod alpha {
    use alloc::vec::Vec;

    pub fn repeat<T: Clone>(v: T, n: usize) -> Vec<T> {
        core::iter::repeat_n(v, n).collect()
    }
}

/// One small-scale realization of every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `M × K` vectors of length `L`.
    pub h: Table<CVector>,
    /// `M × T`.
    pub g_dl: Table<CVector>,
    /// `N × T`.
    pub g_ul: Table<CVector>,
    /// `M × N` matrices of size `L × L`; empty when not sampled.
    pub f: Table<CMatrix>,
    pub large_scale: LargeScale,
}

impl ChannelSet {
    pub fn antennas(&self) -> usize {
        self.large_scale.antennas
    }

    pub fn has_inter_ap(&self) -> bool {
        !self.f.is_empty() || self.large_scale.dl_aps() * self.large_scale.ul_aps() == 0
    }

    /// User `k`'s channel stacked over all DL APs (length `M·L`).
    pub fn stacked_user(&self, k: usize) -> CVector {
        stack(self.h.column(k))
    }

    /// Target `t`'s DL channel stacked over all DL APs.
    pub fn stacked_dl_target(&self, t: usize) -> CVector {
        stack(self.g_dl.column(t))
    }

    /// Human-readable label of a link, used in error messages and dumps.
    pub fn link_label(kind: &str, i: usize, j: usize) -> String {
        format!("{kind}[{i}][{j}]")
    }
}

pub(crate) fn stack<'a>(parts: impl Iterator<Item = &'a CVector>) -> CVector {
    let parts: Vec<&CVector> = parts.collect();
    let len = parts.iter().map(|v| v.len()).sum();
    let mut out = CVector::zeros(len);
    let mut off = 0;
    for p in parts {
        out.rows_mut(off, p.len()).copy_from(p);
        off += p.len();
    }
    out
}

fn draw_vector(seed: u64, kind: StreamKind, i: usize, j: usize, len: usize, zeta: f64) -> CVector {
    let mut rng = stream_rng(seed, kind, i, j);
    let amp = libm::sqrt(zeta);
    CVector::from_fn(len, |_, _| complex_normal(&mut rng) * amp)
}

fn draw_matrix(seed: u64, i: usize, j: usize, len: usize, zeta: f64) -> CMatrix {
    let mut rng = stream_rng(seed, StreamKind::InterApChannel, i, j);
    let amp = libm::sqrt(zeta);
    CMatrix::from_fn(len, len, |_, _| complex_normal(&mut rng) * amp)
}

/// Samples every channel (including the inter-AP matrices) of `large_scale`.
pub fn sample_channels(large_scale: &LargeScale, seed: u64) -> ChannelSet {
    sample_channels_with(large_scale, seed, true)
}

/// Samples the channels, optionally skipping the `L × L` inter-AP matrices,
/// which only the uplink signal model needs. Skipping them does not change
/// any other draw.
pub fn sample_channels_with(large_scale: &LargeScale, seed: u64, inter_ap: bool) -> ChannelSet {
    let ls = large_scale;
    let l = ls.antennas;
    let h = Table::from_fn(ls.dl_aps(), ls.users(), |m, k| {
        draw_vector(seed, StreamKind::UserChannel, m, k, l, ls.zeta_h[(m, k)])
    });
    let g_dl = Table::from_fn(ls.dl_aps(), ls.targets(), |m, t| {
        draw_vector(seed, StreamKind::DlTargetChannel, m, t, l, ls.zeta_gdl[(m, t)])
    });
    let g_ul = Table::from_fn(ls.ul_aps(), ls.targets(), |n, t| {
        draw_vector(seed, StreamKind::UlTargetChannel, n, t, l, ls.zeta_gul[(n, t)])
    });
    let f = if inter_ap {
        Table::from_fn(ls.dl_aps(), ls.ul_aps(), |m, n| draw_matrix(seed, m, n, l, ls.zeta_f[(m, n)]))
    } else {
        Table::empty()
    };
    ChannelSet { h, g_dl, g_ul, f, large_scale: ls.clone() }
}

/// Channel-hardening statistics of `‖h‖² / E‖h‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HardeningStats {
    pub n_antennas: usize,
    pub mean_cv: f64,
    pub var_cv: f64,
    pub trials: usize,
}

impl HardeningStats {
    /// Conventional coefficient of variation, `std / mean`.
    pub fn coefficient_of_variation(&self) -> f64 {
        libm::sqrt(self.var_cv) / self.mean_cv
    }
}

fn check_stat_args(antennas: usize, betas: &[f64], trials: usize) -> Result<()> {
    if antennas == 0 {
        return Err(Error::InvalidArgument("antennas must be at least 1".into()));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("at least two trials are needed".into()));
    }
    if betas.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
        return Err(Error::InvalidArgument("large-scale gains must be positive".into()));
    }
    Ok(())
}

/// Draws `h ~ CN(0, β I_L)` and returns the mean and variance of
/// `‖h‖² / (β L)`, whose variance is `1 / L`.
pub fn hardening_stats(antennas: usize, beta: f64, trials: usize, seed: u64) -> Result<HardeningStats> {
    check_stat_args(antennas, &[beta], trials)?;
    let mut rng = stream_rng(seed, StreamKind::Statistics, 0, antennas);
    let amp = libm::sqrt(beta);
    let norm = beta * antennas as f64;
    let samples: Vec<f64> = (0..trials)
        .map(|_| (0..antennas).map(|_| (complex_normal(&mut rng) * amp).norm_sqr()).sum::<f64>() / norm)
        .collect();
    Ok(HardeningStats {
        n_antennas: antennas,
        mean_cv: crate::stats::mean(&samples),
        var_cv: crate::stats::sample_variance(&samples),
        trials,
    })
}

/// Statistics of the normalized inner product `h_k^H h_l / sqrt(E‖h_k‖² E‖h_l‖²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FavorableStats {
    pub n_antennas: usize,
    pub mean: Complex64,
    /// Sample mean of the squared modulus; tends to `1 / L`.
    pub mean_abs2: f64,
    /// Sample variance of the squared modulus.
    pub var_abs2: f64,
    pub trials: usize,
}

pub fn favorable_propagation_stats(
    antennas: usize,
    beta_k: f64,
    beta_l: f64,
    trials: usize,
    seed: u64,
) -> Result<FavorableStats> {
    check_stat_args(antennas, &[beta_k, beta_l], trials)?;
    let mut rng = stream_rng(seed, StreamKind::Statistics, 1, antennas);
    let (ak, al) = (libm::sqrt(beta_k), libm::sqrt(beta_l));
    let norm = libm::sqrt(antennas as f64 * beta_k * antennas as f64 * beta_l);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs2 = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut ip = Complex64::new(0.0, 0.0);
        for _ in 0..antennas {
            let hk = complex_normal(&mut rng) * ak;
            let hl = complex_normal(&mut rng) * al;
            ip += hk.conj() * hl;
        }
        let v = ip / norm;
        sum += v;
        abs2.push(v.norm_sqr());
    }
    Ok(FavorableStats {
        n_antennas: antennas,
        mean: sum / trials as f64,
        mean_abs2: crate::stats::mean(&abs2),
        var_abs2: crate::stats::sample_variance(&abs2),
        trials,
    })
}
