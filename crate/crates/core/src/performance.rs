//! Communication and sensing SINR/SE: closed forms under MRT/MRC and
//! Monte-Carlo estimates of the signal model, plus leakage and UatF rates.
//!
//! The closed forms assume `w = h`, `s = g^d`, `u = g^u`. Scaling every
//! precoder by a common amplitude `√η` is equivalent to replacing `σ²` with
//! `σ²/η`, which is how [`evaluate_performance`] feeds a power budget into them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::DMatrix;

use crate::beamforming::{transmit_signal, PrecoderRule, PrecoderSet, ScaledMrt, SymbolBlock};
use crate::channel::{sample_channels_with, ChannelSet, LargeScale};
use crate::linalg::{inner, Table};
use crate::rng::{complex_normal, stream_rng, trial_seed, StreamKind};
use crate::stats::{mean, mean_estimate, ratio_of_means, se_from_sinr, Estimate};
use crate::{CVector, Complex64, Error, Result};

/// Minimum number of Monte-Carlo trials accepted by the estimators.
pub const MIN_TRIALS: usize = 100;

/// `log2(1 + sinr)`.
pub fn comm_se(sinr: f64) -> f64 {
    libm::log2(1.0 + sinr.max(0.0))
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise power {sigma2} must be positive")));
    }
    Ok(())
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!("{trials} trials, at least {MIN_TRIALS} required")));
    }
    Ok(())
}

fn check_gains(name: &str, z: &DMatrix<f64>) -> Result<()> {
    for r in 0..z.nrows() {
        for c in 0..z.ncols() {
            let v = z[(r, c)];
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveGain { link: format!("{name}[{r}][{c}]"), value: v });
            }
        }
    }
    Ok(())
}

/// Per-user SINR under MRT with perfect CSI.
///
/// `zeta_h` is `M × K`, `zeta_gdl` is `M × T`.
pub fn comm_sinr_closed_form(zeta_h: &DMatrix<f64>, zeta_gdl: &DMatrix<f64>, antennas: usize, sigma2: f64) -> Result<Vec<f64>> {
    check_sigma2(sigma2)?;
    check_gains("zeta_h", zeta_h)?;
    check_gains("zeta_gdl", zeta_gdl)?;
    if zeta_gdl.nrows() != zeta_h.nrows() {
        return Err(Error::Dimension(format!("{} vs {} DL APs", zeta_h.nrows(), zeta_gdl.nrows())));
    }
    let l = antennas as f64;
    let (m_aps, users) = zeta_h.shape();
    let target_load: Vec<f64> = (0..m_aps).map(|m| zeta_gdl.row(m).sum()).collect();
    Ok((0..users)
        .map(|k| {
            let a = zeta_h.column(k);
            let sum: f64 = a.sum();
            let sum_sq: f64 = a.iter().map(|z| z * z).sum();
            let num = l * (l + 1.0) * sum_sq + l * l * (sum * sum - sum_sq);
            let mui: f64 = (0..users)
                .filter(|&i| i != k)
                .map(|i| (0..m_aps).map(|m| a[m] * zeta_h[(m, i)]).sum::<f64>())
                .sum();
            let ssi: f64 = (0..m_aps).map(|m| a[m] * target_load[m]).sum();
            num / (l * mui + l * ssi + sigma2)
        })
        .collect())
}

/// `E|Σ_m g^d_mj^H x_m|²` under MRT with unit-power symbols.
fn echo_power_factor(zeta_gdl: &DMatrix<f64>, zeta_h: &DMatrix<f64>, l: f64, j: usize) -> f64 {
    let m_aps = zeta_gdl.nrows();
    let g = zeta_gdl.column(j);
    let g_sum: f64 = g.sum();
    (0..m_aps)
        .map(|m| {
            let user_load: f64 = zeta_h.row(m).sum();
            let other_targets: f64 = zeta_gdl.row(m).sum() - g[m];
            l * g[m] * user_load
                + l * (l + 1.0) * g[m] * g[m]
                + l * l * g[m] * (g_sum - g[m])
                + l * g[m] * other_targets
        })
        .sum()
}

/// `N × T` sensing SINR under MRT precoding and MRC combining.
///
/// `zeta_gul` is `N × T`, `zeta_gdl` is `M × T`, `zeta_h` is `M × K`.
pub fn sensing_sinr_closed_form(
    zeta_gul: &DMatrix<f64>,
    zeta_gdl: &DMatrix<f64>,
    zeta_h: &DMatrix<f64>,
    alpha: &[Complex64],
    antennas: usize,
    sigma2: f64,
) -> Result<DMatrix<f64>> {
    check_sigma2(sigma2)?;
    let targets = zeta_gdl.ncols();
    if targets == 0 {
        return Err(Error::InvalidArgument("sensing SINR needs at least one target".into()));
    }
    if zeta_gul.ncols() != targets || alpha.len() != targets || zeta_h.nrows() != zeta_gdl.nrows() {
        return Err(Error::Dimension(format!(
            "targets: g_ul {}, g_dl {targets}, alpha {}; DL APs: h {}, g_dl {}",
            zeta_gul.ncols(),
            alpha.len(),
            zeta_h.nrows(),
            zeta_gdl.nrows()
        )));
    }
    check_gains("zeta_gul", zeta_gul)?;
    check_gains("zeta_gdl", zeta_gdl)?;
    check_gains("zeta_h", zeta_h)?;
    let l = antennas as f64;
    let b: Vec<f64> = (0..targets).map(|j| echo_power_factor(zeta_gdl, zeta_h, l, j)).collect();
    let a2: Vec<f64> = alpha.iter().map(|a| a.norm_sqr()).collect();
    Ok(DMatrix::from_fn(zeta_gul.nrows(), targets, |n, t| {
        let zt = zeta_gul[(n, t)];
        let num = a2[t] * l * (l + 1.0) * zt * zt * b[t];
        let mti: f64 = (0..targets).filter(|&j| j != t).map(|j| a2[j] * l * zt * zeta_gul[(n, j)] * b[j]).sum();
        num / (mti + l * sigma2 * zt)
    }))
}

/// Common MRT power scale `η = p_max / max_m L(Σ_k ζ_h,mk + Σ_t ζ_gd,mt)`:
/// the busiest AP transmits `p_max` on average.
pub fn common_mrt_scale(large_scale: &LargeScale, p_max_watts: f64) -> f64 {
    let ls = large_scale;
    let l = ls.antennas as f64;
    let load = (0..ls.dl_aps())
        .map(|m| l * (ls.zeta_h.row(m).sum() + ls.zeta_gdl.row(m).sum()))
        .fold(0.0, f64::max);
    if load > 0.0 {
        p_max_watts / load
    } else {
        1.0
    }
}

/// Knobs of the Monte-Carlo simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McOptions {
    /// Simulate the uplink echo and sensing SINR.
    pub sensing: bool,
    /// Remove the direct-link interference `Σ_m F_mn x_m` before combining.
    pub subtract_dli: bool,
    /// Draw `CN(0, 1)` sensing symbols instead of deterministic beams.
    pub stochastic_sensing: bool,
    /// Evaluate the leakage SE on every realization.
    pub leakage: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { sensing: true, subtract_dli: true, stochastic_sensing: false, leakage: true }
    }
}

/// Per-trial samples of every accumulated power, stored in trial order so
/// chunks simulated independently can be concatenated deterministically.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct McSamples {
    /// `[k][trial]`: `|Σ_m h_mk^H w_mk|²`.
    pub ds: Vec<Vec<f64>>,
    /// `[k][trial]`: `Σ_{i≠k} |Σ_m h_mk^H w_mi|²`.
    pub mui: Vec<Vec<f64>>,
    /// `[k][trial]`: `Σ_t |Σ_m h_mk^H s_mt|²`.
    pub ssi: Vec<Vec<f64>>,
    /// `N × T`: desired reflection power `|d_nt|²`.
    pub echo: Table<Vec<f64>>,
    /// `N × T`: everything else after combining, `|r_nt − d_nt|²`.
    pub residual: Table<Vec<f64>>,
    /// `N × T`: multi-target interference power.
    pub mti: Table<Vec<f64>>,
    /// `N × T`: combined noise power.
    pub noise: Table<Vec<f64>>,
    /// `N × T`: direct-link interference left after (optional) removal.
    pub dli: Table<Vec<f64>>,
    /// `T × K`: instantaneous leakage SE.
    pub leakage: Table<Vec<f64>>,
    pub trials: usize,
}

fn append(dst: &mut Vec<Vec<f64>>, src: Vec<Vec<f64>>) {
    if dst.is_empty() {
        *dst = src;
    } else {
        dst.iter_mut().zip(src).for_each(|(d, s)| d.extend(s));
    }
}

fn append_table(dst: &mut Table<Vec<f64>>, src: Table<Vec<f64>>) {
    if dst.is_empty() {
        *dst = src;
    } else {
        dst.iter_mut().zip(src.iter()).for_each(|(d, s)| d.extend_from_slice(s));
    }
}

impl McSamples {
    /// Appends the samples of a later trial range.
    pub fn append(&mut self, other: McSamples) {
        append(&mut self.ds, other.ds);
        append(&mut self.mui, other.mui);
        append(&mut self.ssi, other.ssi);
        append_table(&mut self.echo, other.echo);
        append_table(&mut self.residual, other.residual);
        append_table(&mut self.mti, other.mti);
        append_table(&mut self.noise, other.noise);
        append_table(&mut self.dli, other.dli);
        append_table(&mut self.leakage, other.leakage);
        self.trials += other.trials;
    }

    /// Ratio-of-means SINR `E[DS] / (E[MUI] + E[SSI] + σ²)` per user.
    pub fn comm_sinr(&self, sigma2: f64) -> Vec<Estimate> {
        self.ds
            .iter()
            .zip(self.mui.iter().zip(&self.ssi))
            .map(|(ds, (mui, ssi))| {
                let interference: Vec<f64> = mui.iter().zip(ssi).map(|(a, b)| a + b).collect();
                ratio_of_means(ds, &interference, sigma2)
            })
            .collect()
    }

    /// Ratio-of-means sensing SINR `E|d|² / E|r − d|²` per (UL AP, target).
    pub fn sensing_sinr(&self) -> Table<Estimate> {
        Table::from_fn(self.echo.rows(), self.echo.cols(), |n, t| {
            ratio_of_means(&self.echo[(n, t)], &self.residual[(n, t)], 0.0)
        })
    }

    pub fn mean_ssi(&self) -> Vec<f64> {
        self.ssi.iter().map(|v| mean(v)).collect()
    }

    pub fn mean_mti(&self) -> Table<f64> {
        self.mti.map(|v| mean(v))
    }

    pub fn mean_dli(&self) -> Table<f64> {
        self.dli.map(|v| mean(v))
    }

    pub fn mean_noise(&self) -> Table<f64> {
        self.noise.map(|v| mean(v))
    }

    /// Mean leakage SE per (target, user) over the simulated realizations.
    pub fn mean_leakage(&self) -> Table<Estimate> {
        self.leakage.map(|v| mean_estimate(v))
    }
}

struct TrialOut {
    ds: Vec<f64>,
    mui: Vec<f64>,
    ssi: Vec<f64>,
    echo: Table<f64>,
    residual: Table<f64>,
    mti: Table<f64>,
    noise: Table<f64>,
    dli: Table<f64>,
    leakage: Table<f64>,
}

/// Stacked-over-APs effective gains `Σ_m a_m^H b_m`.
fn effective(a: &[CVector], b: &[CVector]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| inner(x, y)).sum()
}

fn column(t: &Table<CVector>, c: usize) -> Vec<CVector> {
    t.column(c).cloned().collect()
}

fn comm_terms(ch: &ChannelSet, p: &PrecoderSet) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let users = p.users();
    let hs: Vec<Vec<CVector>> = (0..users).map(|k| column(&ch.h, k)).collect();
    let ws: Vec<Vec<CVector>> = (0..users).map(|k| column(&p.w, k)).collect();
    let ss: Vec<Vec<CVector>> = (0..p.targets()).map(|t| column(&p.s, t)).collect();
    let mut ds = vec![0.0; users];
    let mut mui = vec![0.0; users];
    let mut ssi = vec![0.0; users];
    for k in 0..users {
        for (i, w) in ws.iter().enumerate() {
            let g = effective(&hs[k], w).norm_sqr();
            if i == k {
                ds[k] = g;
            } else {
                mui[k] += g;
            }
        }
        ssi[k] = ss.iter().map(|s| effective(&hs[k], s).norm_sqr()).sum();
    }
    (ds, mui, ssi)
}

fn simulate_trial(
    ls: &LargeScale,
    rule: &dyn PrecoderRule,
    sigma2: f64,
    seed: u64,
    opts: &McOptions,
) -> TrialOut {
    let sensing = opts.sensing && ls.targets() > 0 && ls.ul_aps() > 0;
    // perfect DLI removal cancels the inter-AP term, so its matrices are
    // only drawn when the residual is kept
    let keep_dli = sensing && !opts.subtract_dli;
    let ch = sample_channels_with(ls, seed, keep_dli);
    let p = rule.precoders(&ch);
    let (ds, mui, ssi) = comm_terms(&ch, &p);
    let leakage = if opts.leakage && ls.targets() > 0 {
        leakage_se(&ch, &p, sigma2).map(|r| r.se).unwrap_or_else(|_| Table::empty())
    } else {
        Table::empty()
    };
    let n_aps = if sensing { ls.ul_aps() } else { 0 };
    let targets = if sensing { ls.targets() } else { 0 };
    let mut echo = Table::from_fn(n_aps, targets, |_, _| 0.0);
    let mut residual = echo.clone();
    let mut mti = echo.clone();
    let mut noise_p = echo.clone();
    let mut dli_p = echo.clone();
    if sensing {
        let mut sym_rng = stream_rng(seed, StreamKind::Symbols, 0, 0);
        let symbols = SymbolBlock::draw(p.users(), p.targets(), opts.stochastic_sensing, &mut sym_rng);
        let x = transmit_signal(&p, &symbols).expect("symbol block matches precoders");
        // Scalar illumination of each target: Σ_m g_mj^H x_m.
        let illum: Vec<Complex64> = (0..ls.targets()).map(|j| effective(&column(&ch.g_dl, j), &x)).collect();
        let l = ls.antennas;
        let noise_amp = libm::sqrt(sigma2);
        for n in 0..n_aps {
            let mut noise_rng = stream_rng(seed, StreamKind::Noise, n, 0);
            let noise = CVector::from_fn(l, |_, _| complex_normal(&mut noise_rng) * noise_amp);
            let mut dli = CVector::zeros(l);
            if keep_dli {
                for (m, xm) in x.iter().enumerate() {
                    dli.gemv(Complex64::new(1.0, 0.0), &ch.f[(m, n)], xm, Complex64::new(1.0, 0.0));
                }
            }
            let mut y = &noise + &dli;
            for j in 0..ls.targets() {
                y.axpy(ls.alpha[j] * illum[j], &ch.g_ul[(n, j)], Complex64::new(1.0, 0.0));
            }
            for t in 0..targets {
                let u = &p.u[(n, t)];
                let r = inner(u, &y);
                let d = ls.alpha[t] * inner(u, &ch.g_ul[(n, t)]) * illum[t];
                let interference: Complex64 = (0..ls.targets())
                    .filter(|&j| j != t)
                    .map(|j| ls.alpha[j] * inner(u, &ch.g_ul[(n, j)]) * illum[j])
                    .sum();
                echo[(n, t)] = d.norm_sqr();
                residual[(n, t)] = (r - d).norm_sqr();
                mti[(n, t)] = interference.norm_sqr();
                noise_p[(n, t)] = inner(u, &noise).norm_sqr();
                dli_p[(n, t)] = if opts.subtract_dli { 0.0 } else { inner(u, &dli).norm_sqr() };
            }
        }
    }
    TrialOut { ds, mui, ssi, echo, residual, mti, noise: noise_p, dli: dli_p, leakage }
}

fn push_table(dst: &mut Table<Vec<f64>>, src: &Table<f64>) {
    if dst.is_empty() && !src.is_empty() {
        *dst = src.map(|_| Vec::new());
    }
    dst.iter_mut().zip(src.iter()).for_each(|(d, &s)| d.push(s));
}

/// Simulates the trials with indices in `trials` (trial `i` uses the seed
/// `trial_seed(seed, i)`), so any partition of a range reproduces the
/// samples of the whole range.
pub fn simulate_trials(
    large_scale: &LargeScale,
    rule: &dyn PrecoderRule,
    sigma2: f64,
    seed: u64,
    trials: Range<u64>,
    opts: &McOptions,
) -> McSamples {
    let users = large_scale.users();
    let mut out = McSamples {
        ds: vec![Vec::new(); users],
        mui: vec![Vec::new(); users],
        ssi: vec![Vec::new(); users],
        ..Default::default()
    };
    for i in trials {
        let trial = simulate_trial(large_scale, rule, sigma2, trial_seed(seed, i), opts);
        for k in 0..users {
            out.ds[k].push(trial.ds[k]);
            out.mui[k].push(trial.mui[k]);
            out.ssi[k].push(trial.ssi[k]);
        }
        push_table(&mut out.echo, &trial.echo);
        push_table(&mut out.residual, &trial.residual);
        push_table(&mut out.mti, &trial.mti);
        push_table(&mut out.noise, &trial.noise);
        push_table(&mut out.dli, &trial.dli);
        push_table(&mut out.leakage, &trial.leakage);
        out.trials += 1;
    }
    out
}

/// Monte-Carlo communication SINR per user with jackknife standard errors.
pub fn comm_sinr_monte_carlo(
    large_scale: &LargeScale,
    rule: &dyn PrecoderRule,
    sigma2: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    check_sigma2(sigma2)?;
    check_trials(trials)?;
    let opts = McOptions { sensing: false, leakage: false, ..Default::default() };
    Ok(simulate_trials(large_scale, rule, sigma2, seed, 0..trials as u64, &opts).comm_sinr(sigma2))
}

/// Monte-Carlo sensing SINR per (UL AP, target).
pub fn sensing_sinr_monte_carlo(
    large_scale: &LargeScale,
    rule: &dyn PrecoderRule,
    sigma2: f64,
    trials: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<Table<Estimate>> {
    check_sigma2(sigma2)?;
    check_trials(trials)?;
    if large_scale.targets() == 0 {
        return Err(Error::InvalidArgument("sensing SINR needs at least one target".into()));
    }
    let opts = McOptions { sensing: true, leakage: false, ..*opts };
    Ok(simulate_trials(large_scale, rule, sigma2, seed, 0..trials as u64, &opts).sensing_sinr())
}

/// Leakage SE of every user's stream at every target.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageReport {
    /// `T × K`.
    pub se: Table<f64>,
    /// `max_k se[t][k]` per target.
    pub max_per_target: Vec<f64>,
}

/// Rate at which target `t`, acting as a SIC-capable eavesdropper, decodes
/// user `k`'s stream: `log2(1 + |Σ_m g_mt^H w_mk|² / (Σ_{i≠k} |Σ_m g_mt^H w_mi|² + Σ_l |Σ_m g_mt^H s_ml|² + σ²))`.
pub fn leakage_se(channels: &ChannelSet, precoders: &PrecoderSet, sigma2: f64) -> Result<LeakageReport> {
    check_sigma2(sigma2)?;
    let targets = channels.g_dl.cols();
    if targets == 0 {
        return Err(Error::InvalidArgument("leakage needs at least one target".into()));
    }
    let users = precoders.users();
    let ws: Vec<Vec<CVector>> = (0..users).map(|k| column(&precoders.w, k)).collect();
    let ss: Vec<Vec<CVector>> = (0..precoders.targets()).map(|l| column(&precoders.s, l)).collect();
    let mut se = Table::from_fn(targets, users, |_, _| 0.0);
    for t in 0..targets {
        let g = column(&channels.g_dl, t);
        let gains: Vec<f64> = ws.iter().map(|w| effective(&g, w).norm_sqr()).collect();
        let total: f64 = gains.iter().sum();
        let sensing: f64 = ss.iter().map(|s| effective(&g, s).norm_sqr()).sum();
        for k in 0..users {
            se[(t, k)] = comm_se(gains[k] / (total - gains[k] + sensing + sigma2));
        }
    }
    let max_per_target = (0..targets).map(|t| se.row(t).iter().copied().fold(0.0, f64::max)).collect();
    Ok(LeakageReport { se, max_per_target })
}

/// Use-and-then-forget bound and the perfect-CSI ergodic rate of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct UatfReport {
    pub uatf_se: Vec<f64>,
    pub ergodic_se: Vec<Estimate>,
    pub trials: usize,
}

impl UatfReport {
    pub fn sum_uatf(&self) -> f64 {
        self.uatf_se.iter().sum()
    }

    pub fn sum_ergodic(&self) -> f64 {
        self.ergodic_se.iter().map(|e| e.value).sum()
    }
}

/// UatF SE `log2(1 + |E[h_k^H w_k]|² / (Σ_i E|h_k^H w_i|² − |E[h_k^H w_k]|² + Σ_t E|h_k^H s_t|² + σ²))`
/// with expectations taken over `trials` realizations, together with the
/// ergodic rate `E[log2(1 + SINR_k)]` on the same realizations.
pub fn uatf_se(large_scale: &LargeScale, rule: &dyn PrecoderRule, sigma2: f64, trials: usize, seed: u64) -> Result<UatfReport> {
    check_sigma2(sigma2)?;
    check_trials(trials)?;
    let users = large_scale.users();
    let mut mean_gain = vec![Complex64::new(0.0, 0.0); users];
    let mut second = vec![0.0; users];
    let mut ergodic = vec![Vec::with_capacity(trials); users];
    for i in 0..trials as u64 {
        let ch = sample_channels_with(large_scale, trial_seed(seed, i), false);
        let p = rule.precoders(&ch);
        let hs: Vec<Vec<CVector>> = (0..users).map(|k| column(&ch.h, k)).collect();
        let ws: Vec<Vec<CVector>> = (0..users).map(|k| column(&p.w, k)).collect();
        let ss: Vec<Vec<CVector>> = (0..p.targets()).map(|t| column(&p.s, t)).collect();
        for k in 0..users {
            let own = effective(&hs[k], &ws[k]);
            let all: f64 = ws.iter().map(|w| effective(&hs[k], w).norm_sqr()).sum();
            let sens: f64 = ss.iter().map(|s| effective(&hs[k], s).norm_sqr()).sum();
            mean_gain[k] += own;
            second[k] += all + sens;
            ergodic[k].push(comm_se(own.norm_sqr() / (all - own.norm_sqr() + sens + sigma2)));
        }
    }
    let n = trials as f64;
    let uatf_se = (0..users)
        .map(|k| {
            let g = (mean_gain[k] / n).norm_sqr();
            comm_se(g / (second[k] / n - g + sigma2))
        })
        .collect();
    Ok(UatfReport { uatf_se, ergodic_se: ergodic.iter().map(|v| mean_estimate(v)).collect(), trials })
}

/// Closed-form and Monte-Carlo SE of one topology under scaled MRT/MRC.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerfReport {
    pub comm_se_closed: Vec<f64>,
    pub comm_se_mc: Vec<Estimate>,
    /// `N × T`; empty without targets or UL APs.
    pub sens_se_closed: Table<f64>,
    pub sens_se_mc: Table<Estimate>,
    /// `T × K` mean leakage SE.
    pub leak_se: Table<f64>,
    pub trials: usize,
    pub sigma2_watts: f64,
    /// Common precoder power scale.
    pub eta: f64,
}

impl PerfReport {
    /// Combines closed forms for `large_scale` with already simulated samples.
    pub fn from_samples(large_scale: &LargeScale, eta: f64, sigma2: f64, samples: &McSamples) -> Result<Self> {
        let ls = large_scale;
        let eff = sigma2 / eta;
        let comm_se_closed = comm_sinr_closed_form(&ls.zeta_h, &ls.zeta_gdl, ls.antennas, eff)?
            .into_iter()
            .map(comm_se)
            .collect();
        let comm_se_mc = samples.comm_sinr(sigma2).into_iter().map(se_from_sinr).collect();
        let (sens_se_closed, sens_se_mc) = if ls.targets() > 0 && ls.ul_aps() > 0 {
            let closed = sensing_sinr_closed_form(&ls.zeta_gul, &ls.zeta_gdl, &ls.zeta_h, &ls.alpha, ls.antennas, eff)?;
            (
                Table::from_fn(closed.nrows(), closed.ncols(), |n, t| comm_se(closed[(n, t)])),
                samples.sensing_sinr().map(|e| se_from_sinr(*e)),
            )
        } else {
            (Table::empty(), Table::empty())
        };
        Ok(Self {
            comm_se_closed,
            comm_se_mc,
            sens_se_closed,
            sens_se_mc,
            leak_se: samples.mean_leakage().map(|e| e.value),
            trials: samples.trials,
            sigma2_watts: sigma2,
            eta,
        })
    }

    pub fn sum_comm_closed(&self) -> f64 {
        self.comm_se_closed.iter().sum()
    }

    pub fn sum_comm_mc(&self) -> f64 {
        self.comm_se_mc.iter().map(|e| e.value).sum()
    }

    pub fn sum_sens_closed(&self) -> f64 {
        self.sens_se_closed.iter().sum()
    }

    pub fn sum_sens_mc(&self) -> f64 {
        self.sens_se_mc.iter().map(|e| e.value).sum()
    }
}

/// Evaluates a topology under MRT scaled by [`common_mrt_scale`] with MRC combining.
pub fn evaluate_performance(
    large_scale: &LargeScale,
    p_max_watts: f64,
    sigma2: f64,
    trials: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<PerfReport> {
    check_sigma2(sigma2)?;
    check_trials(trials)?;
    let eta = common_mrt_scale(large_scale, p_max_watts);
    let samples = simulate_trials(large_scale, &ScaledMrt { eta }, sigma2, seed, 0..trials as u64, opts);
    PerfReport::from_samples(large_scale, eta, sigma2, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{mrc_combiners, mrt_precoders};
    use crate::channel::sample_channels;

    fn unit() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn degenerate_comm_sinr_is_two() {
        let z = DMatrix::from_element(1, 1, 1.0);
        let sinr = comm_sinr_closed_form(&z, &DMatrix::zeros(1, 0), 1, 1.0).unwrap();
        assert_eq!(sinr, vec![2.0]);
        assert!((comm_se(sinr[0]) - libm::log2(3.0)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_sensing_sinr_is_four() {
        let z = DMatrix::from_element(1, 1, 1.0);
        let sinr = sensing_sinr_closed_form(&z, &z, &DMatrix::zeros(1, 0), &[unit()], 1, 1.0).unwrap();
        assert_eq!(sinr[(0, 0)], 4.0);
    }

    #[test]
    fn se_values() {
        assert_eq!(comm_se(0.0), 0.0);
        assert_eq!(comm_se(1.0), 1.0);
        assert_eq!(comm_se(3.0), 2.0);
    }

    #[test]
    fn closed_forms_reject_bad_input() {
        let z = DMatrix::from_element(1, 1, 1.0);
        assert!(comm_sinr_closed_form(&z, &DMatrix::zeros(1, 0), 1, 0.0).is_err());
        assert!(comm_sinr_closed_form(&DMatrix::zeros(1, 1), &DMatrix::zeros(1, 0), 1, 1.0).is_err());
        let empty = DMatrix::zeros(1, 0);
        assert!(sensing_sinr_closed_form(&empty, &empty, &z, &[], 1, 1.0).is_err());
    }

    #[test]
    fn single_target_sensing_sinr_scales_with_alpha() {
        let zu = DMatrix::from_row_slice(2, 1, &[0.5, 2.0]);
        let zg = DMatrix::from_row_slice(2, 1, &[1.0, 0.3]);
        let zh = DMatrix::from_row_slice(2, 2, &[0.2, 0.4, 1.5, 0.1]);
        let a = sensing_sinr_closed_form(&zu, &zg, &zh, &[unit()], 4, 0.7).unwrap();
        let b = sensing_sinr_closed_form(&zu, &zg, &zh, &[Complex64::new(0.0, 3.0)], 4, 0.7).unwrap();
        for n in 0..2 {
            assert!((b[(n, 0)] / a[(n, 0)] - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_precoders_leak_nothing() {
        let ls = LargeScale::uniform(2, 1, 2, 2, 3, 1.0, unit()).unwrap();
        let ch = sample_channels(&ls, 4);
        let p = PrecoderSet::zeros(2, 2, 2, 3);
        let r = leakage_se(&ch, &p, 1.0).unwrap();
        assert!(r.se.iter().all(|&v| v == 0.0));
        assert_eq!(r.max_per_target, vec![0.0, 0.0]);
    }

    #[test]
    fn orthogonal_user_beam_does_not_leak() {
        let ls = LargeScale::uniform(1, 0, 1, 1, 2, 1.0, unit()).unwrap();
        let mut ch = sample_channels(&ls, 4);
        ch.g_dl[(0, 0)] = CVector::from_vec(vec![unit(), Complex64::new(0.0, 0.0)]);
        let mut p = PrecoderSet::zeros(1, 1, 1, 2);
        p.w[(0, 0)] = CVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 2.0)]);
        assert_eq!(leakage_se(&ch, &p, 1.0).unwrap().se[(0, 0)], 0.0);
    }

    #[test]
    fn chunked_simulation_matches_whole_range() {
        let ls = LargeScale::uniform(2, 2, 2, 2, 3, 1.0, unit()).unwrap();
        let rule = ScaledMrt { eta: 0.5 };
        let opts = McOptions::default();
        let whole = simulate_trials(&ls, &rule, 1.0, 5, 0..12, &opts);
        let mut parts = simulate_trials(&ls, &rule, 1.0, 5, 0..5, &opts);
        parts.append(simulate_trials(&ls, &rule, 1.0, 5, 5..12, &opts));
        assert_eq!(whole, parts);
    }

    #[test]
    fn mrt_rule_via_closure() {
        let ls = LargeScale::uniform(1, 1, 1, 1, 2, 1.0, unit()).unwrap();
        let rule = |ch: &ChannelSet| mrt_precoders(ch).with_combiners(mrc_combiners(ch));
        let a = comm_sinr_monte_carlo(&ls, &rule, 1.0, 100, 3).unwrap();
        let b = comm_sinr_monte_carlo(&ls, &ScaledMrt { eta: 1.0 }, 1.0, 100, 3).unwrap();
        assert_eq!(a, b);
        assert!(comm_sinr_monte_carlo(&ls, &rule, 1.0, 99, 3).is_err());
    }
}
