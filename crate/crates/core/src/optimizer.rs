//! Sum-SE beamforming design under per-AP power caps, per-target transmit
//! beampattern floors and (optionally) per-target leakage-SE ceilings.
//!
//! The solver keeps every iterate strictly feasible. Each iteration moves
//! along the sum-SE gradient deflected by a logarithmic barrier on the
//! beampattern and leakage constraints and preconditioned by the
//! weighted-MMSE curvature of the communication streams. It then projects
//! onto the per-AP power caps by scaling, and accepts a step only when the
//! result is strictly feasible and does not lower the sum SE. The objective
//! trace is therefore non-decreasing by construction.
//!
//! A zero leakage cap is handled exactly by restricting every communication
//! stream to the orthogonal complement of the AP's target channels.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::beamforming::{mrt_precoders, normalize_per_ap_power, scale_to_per_ap_power, steering_vector, PrecoderSet};
use crate::channel::{stack, ChannelSet};
use crate::linalg::{hermitian_part, inner, orthonormal_basis, project_out, Table};
use crate::performance::leakage_se;
use crate::sensing::{ap_beams, tx_beampattern_gain};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Convergence settings and acceptance tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    /// Stop once the relative objective change stays below this value.
    pub rel_change: f64,
    pub max_iterations: usize,
    /// Relative tolerance on the per-AP power cap.
    pub power_rel: f64,
    /// Relative tolerance on the beampattern floor.
    pub beampattern_rel: f64,
    /// Absolute tolerance on the leakage cap (bps/Hz).
    pub leakage_abs: f64,
    /// Relative margin the feasibility phase leaves on restored constraints.
    pub restoration_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_change: 1e-4,
            max_iterations: 200,
            power_rel: 1e-6,
            beampattern_rel: 1e-4,
            leakage_abs: 1e-4,
            restoration_margin: 1e-2,
        }
    }
}

/// One instance of the design problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    pub channels: ChannelSet,
    /// `M × T` bearing of each target seen from each DL AP (radians).
    pub target_angles: Table<f64>,
    /// Beampattern floor per target (W, absolute symbol-averaged gain).
    pub gamma_th_watts: Vec<f64>,
    pub p_max_watts: f64,
    /// Leakage-SE cap; `None` or `+∞` disables it.
    pub delta_max_bps_hz: Option<f64>,
    pub sigma2_watts: f64,
    pub tolerances: Tolerances,
}

impl DesignProblem {
    /// A problem without leakage cap and with default tolerances.
    pub fn new(
        channels: ChannelSet,
        target_angles: Table<f64>,
        gamma_th_watts: Vec<f64>,
        p_max_watts: f64,
        sigma2_watts: f64,
    ) -> Result<Self> {
        let p = Self {
            channels,
            target_angles,
            gamma_th_watts,
            p_max_watts,
            delta_max_bps_hz: None,
            sigma2_watts,
            tolerances: Tolerances::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_leakage_cap(mut self, delta_max_bps_hz: f64) -> Result<Self> {
        self.delta_max_bps_hz = Some(delta_max_bps_hz);
        self.validate()?;
        Ok(self)
    }

    pub fn without_leakage_cap(mut self) -> Self {
        self.delta_max_bps_hz = None;
        self
    }

    /// Same instance with every beampattern floor set to `gamma`.
    pub fn with_uniform_gamma(mut self, gamma: f64) -> Self {
        self.gamma_th_watts.iter_mut().for_each(|g| *g = gamma);
        self
    }

    pub fn dl_aps(&self) -> usize {
        self.channels.h.rows()
    }

    pub fn users(&self) -> usize {
        self.channels.h.cols()
    }

    pub fn targets(&self) -> usize {
        self.channels.g_dl.cols()
    }

    pub fn antennas(&self) -> usize {
        self.channels.antennas()
    }

    /// The finite leakage cap, if any.
    pub fn leakage_cap(&self) -> Option<f64> {
        self.delta_max_bps_hz.filter(|d| d.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        let (m, t) = (self.dl_aps(), self.targets());
        if self.target_angles.rows() != m || self.target_angles.cols() != t {
            return Err(Error::Dimension(format!(
                "target angles are {}x{}, expected {m}x{t}",
                self.target_angles.rows(),
                self.target_angles.cols()
            )));
        }
        if self.gamma_th_watts.len() != t {
            return Err(Error::Dimension(format!("{} beampattern floors for {t} targets", self.gamma_th_watts.len())));
        }
        if self.gamma_th_watts.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::InvalidArgument("beampattern floors must be finite and non-negative".into()));
        }
        if !(self.p_max_watts > 0.0 && self.p_max_watts.is_finite()) {
            return Err(Error::InvalidArgument(format!("p_max = {} W must be positive", self.p_max_watts)));
        }
        if !(self.sigma2_watts > 0.0 && self.sigma2_watts.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise power {} must be positive", self.sigma2_watts)));
        }
        if let Some(d) = self.delta_max_bps_hz {
            if d.is_nan() || d < 0.0 {
                return Err(Error::InvalidArgument(format!("leakage cap {d} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// Slack of every constraint; negative entries are violations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Slacks {
    /// `p_max − P_m` per DL AP.
    pub power: Vec<f64>,
    /// `M × T`: beampattern gain at the target bearing minus the floor.
    pub beampattern: Table<f64>,
    /// `T × K`: leakage cap minus leakage SE; empty without a finite cap.
    pub leakage: Table<f64>,
}

impl Slacks {
    /// Names of the constraints violated beyond the problem tolerances.
    pub fn violations(&self, problem: &DesignProblem) -> Vec<String> {
        let tol = &problem.tolerances;
        let mut out = Vec::new();
        for (m, &s) in self.power.iter().enumerate() {
            if s < -tol.power_rel * problem.p_max_watts {
                out.push(format!("power[{m}]"));
            }
        }
        for m in 0..self.beampattern.rows() {
            for t in 0..self.beampattern.cols() {
                if self.beampattern[(m, t)] < -tol.beampattern_rel * problem.gamma_th_watts[t] {
                    out.push(format!("beampattern[{m}][{t}]"));
                }
            }
        }
        for t in 0..self.leakage.rows() {
            for k in 0..self.leakage.cols() {
                if self.leakage[(t, k)] < -tol.leakage_abs {
                    out.push(format!("leakage[{t}][{k}]"));
                }
            }
        }
        out
    }

    pub fn is_feasible(&self, problem: &DesignProblem) -> bool {
        self.violations(problem).is_empty()
    }
}

fn check_dims(precoders: &PrecoderSet, problem: &DesignProblem) -> Result<()> {
    let (m, k, t) = (problem.dl_aps(), problem.users(), problem.targets());
    if precoders.w.rows() != m || precoders.w.cols() != k || precoders.s.rows() != m || precoders.s.cols() != t {
        return Err(Error::Dimension(format!(
            "precoders are w {}x{}, s {}x{}; problem has M={m}, K={k}, T={t}",
            precoders.w.rows(),
            precoders.w.cols(),
            precoders.s.rows(),
            precoders.s.cols()
        )));
    }
    Ok(())
}

/// Exact slack of every constraint at `precoders`.
pub fn feasibility_check(precoders: &PrecoderSet, problem: &DesignProblem) -> Result<Slacks> {
    check_dims(precoders, problem)?;
    let power = (0..problem.dl_aps()).map(|m| problem.p_max_watts - precoders.ap_power(m)).collect();
    let beampattern = Table::from_fn(problem.dl_aps(), problem.targets(), |m, t| {
        tx_beampattern_gain(ap_beams(precoders, m), problem.target_angles[(m, t)]) - problem.gamma_th_watts[t]
    });
    let leakage = match problem.leakage_cap() {
        Some(delta) if problem.targets() > 0 => {
            leakage_se(&problem.channels, precoders, problem.sigma2_watts)?.se.map(|v| delta - v)
        }
        _ => Table::empty(),
    };
    Ok(Slacks { power, beampattern, leakage })
}

/// Sum over users of `log2(1 + SINR_k)` with joint transmission from all DL APs.
pub fn sum_se(channels: &ChannelSet, precoders: &PrecoderSet, sigma2: f64) -> f64 {
    let g = Gains::new(channels, precoders);
    g.user_terms(sigma2).iter().map(|(t, d)| libm::log2(t / d)).sum()
}

/// Full-power MRT: every AP scaled to exactly `p_max`.
pub fn mrt_baseline(problem: &DesignProblem) -> Result<PrecoderSet> {
    scale_to_per_ap_power(&mrt_precoders(&problem.channels), problem.p_max_watts)
}

/// Result of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub precoders: PrecoderSet,
    /// Sum SE of the starting point followed by one entry per accepted iteration.
    pub objective_trace: Vec<f64>,
    pub feasibility: Slacks,
    pub iterations: usize,
    pub converged: bool,
    /// Sum SE of full-power MRT (possibly infeasible).
    pub mrt_sum_se: f64,
    /// Sum SE of the feasible starting point (full-power MRT after restoration).
    pub baseline_sum_se: f64,
    /// Whether the feasibility phase had to modify the starting point.
    pub restored: bool,
}

impl SolveReport {
    pub fn sum_se(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

/// Effective scalar gains `Σ_m a_m^H b_m` of the current iterate.
struct Gains {
    /// `[k][i]`: user `k` through stream `i`.
    uw: Vec<Vec<Complex64>>,
    /// `[k][t]`: user `k` through sensing beam `t`.
    us: Vec<Vec<Complex64>>,
    /// `[t][i]`: target `t` through stream `i`.
    tw: Vec<Vec<Complex64>>,
    /// `[t][l]`: target `t` through sensing beam `l`.
    ts: Vec<Vec<Complex64>>,
}

fn eff(ch: &Table<CVector>, a: usize, v: &Table<CVector>, b: usize) -> Complex64 {
    (0..ch.rows()).map(|m| inner(&ch[(m, a)], &v[(m, b)])).sum()
}

impl Gains {
    fn new(ch: &ChannelSet, p: &PrecoderSet) -> Self {
        let (k, t) = (p.users(), p.targets());
        let tg = ch.g_dl.cols();
        Self {
            uw: (0..k).map(|a| (0..k).map(|b| eff(&ch.h, a, &p.w, b)).collect()).collect(),
            us: (0..k).map(|a| (0..t).map(|b| eff(&ch.h, a, &p.s, b)).collect()).collect(),
            tw: (0..tg).map(|a| (0..k).map(|b| eff(&ch.g_dl, a, &p.w, b)).collect()).collect(),
            ts: (0..tg).map(|a| (0..t).map(|b| eff(&ch.g_dl, a, &p.s, b)).collect()).collect(),
        }
    }

    /// `(T_k, D_k)`: total received power and interference-plus-noise.
    fn user_terms(&self, sigma2: f64) -> Vec<(f64, f64)> {
        (0..self.uw.len())
            .map(|k| {
                let all: f64 = self.uw[k].iter().map(|z| z.norm_sqr()).sum::<f64>()
                    + self.us[k].iter().map(|z| z.norm_sqr()).sum::<f64>()
                    + sigma2;
                (all, all - self.uw[k][k].norm_sqr())
            })
            .collect()
    }

    /// Leakage barrier value `r (I_tk + σ²) − N_tk` per (target, user).
    fn leakage_margins(&self, ratio: f64, sigma2: f64) -> Vec<Vec<f64>> {
        self.tw
            .iter()
            .zip(&self.ts)
            .map(|(tw, ts)| {
                let total: f64 = tw.iter().map(|z| z.norm_sqr()).sum::<f64>() + ts.iter().map(|z| z.norm_sqr()).sum::<f64>();
                tw.iter()
                    .map(|z| {
                        let n = z.norm_sqr();
                        ratio * (total - n + sigma2) - n
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum LeakMode {
    Off,
    /// Barrier with `2^δ − 1`.
    Barrier(f64),
    /// Communication streams confined to the complement of the target channels.
    Null,
}

struct Solver<'a> {
    problem: &'a DesignProblem,
    steering: Table<CVector>,
    leak: LeakMode,
    /// Per-AP orthonormal basis of the target channels.
    target_bases: Vec<Vec<CVector>>,
}

struct Eval {
    objective: f64,
    /// `M × T` beampattern margins `p(θ) − Γ` (only for positive floors).
    bp: Table<f64>,
    leak: Vec<Vec<f64>>,
    gains: Gains,
}

const LN2: f64 = core::f64::consts::LN_2;

/// Damping multipliers tried for the preconditioned step; the best accepted one wins.
const DAMPING_LADDER: [f64; 5] = [1e1, 1e2, 1e3, 1e4, 1e5];

impl<'a> Solver<'a> {
    fn new(problem: &'a DesignProblem) -> Self {
        let l = problem.antennas();
        let steering = problem.target_angles.map(|&th| steering_vector(l, th));
        let leak = match problem.leakage_cap() {
            None => LeakMode::Off,
            Some(_) if problem.targets() == 0 => LeakMode::Off,
            Some(0.0) => LeakMode::Null,
            Some(d) => LeakMode::Barrier(libm::exp2(d) - 1.0),
        };
        let target_bases = (0..problem.dl_aps())
            .map(|m| {
                let g: Vec<&CVector> = problem.channels.g_dl.row(m).iter().collect();
                orthonormal_basis(&g, 1e-12)
            })
            .collect();
        Self { problem, steering, leak, target_bases }
    }

    fn evaluate(&self, p: &PrecoderSet) -> Eval {
        let pr = self.problem;
        let gains = Gains::new(&pr.channels, p);
        let objective = gains.user_terms(pr.sigma2_watts).iter().map(|(t, d)| libm::log2(t / d)).sum();
        let bp = Table::from_fn(pr.dl_aps(), pr.targets(), |m, t| {
            tx_beampattern_gain(ap_beams(p, m), pr.target_angles[(m, t)]) - pr.gamma_th_watts[t]
        });
        let leak = match self.leak {
            LeakMode::Barrier(r) => gains.leakage_margins(r, pr.sigma2_watts),
            _ => Vec::new(),
        };
        Eval { objective, bp, leak, gains }
    }

    fn strictly_feasible(&self, p: &PrecoderSet, e: &Eval) -> bool {
        let pr = self.problem;
        let cap = pr.p_max_watts * (1.0 + 1e-12);
        (0..pr.dl_aps()).all(|m| p.ap_power(m) <= cap)
            && (0..pr.dl_aps()).all(|m| (0..pr.targets()).all(|t| pr.gamma_th_watts[t] == 0.0 || e.bp[(m, t)] > 0.0))
            && e.leak.iter().flatten().all(|&c| c > 0.0)
            && e.objective.is_finite()
    }

    fn barrier(&self, e: &Eval) -> f64 {
        let pr = self.problem;
        let mut b = 0.0;
        for m in 0..pr.dl_aps() {
            for t in 0..pr.targets() {
                if pr.gamma_th_watts[t] > 0.0 {
                    b += libm::log(e.bp[(m, t)] / pr.gamma_th_watts[t]);
                }
            }
        }
        for c in e.leak.iter().flatten() {
            b += libm::log(c / pr.sigma2_watts);
        }
        b
    }

    fn confine(&self, p: &mut PrecoderSet) {
        if self.leak == LeakMode::Null {
            for m in 0..p.w.rows() {
                for v in p.w.row_mut(m) {
                    project_out(v, &self.target_bases[m]);
                }
            }
        }
    }

    /// Ascent directions of the sum SE and of the barrier, as precoder-shaped tables.
    fn gradients(&self, p: &PrecoderSet, e: &Eval) -> (PrecoderSet, PrecoderSet) {
        let pr = self.problem;
        let ch = &pr.channels;
        let (mm, kk, tt) = (pr.dl_aps(), pr.users(), pr.targets());
        let l = pr.antennas();
        let mut gf = PrecoderSet::zeros(mm, kk, tt, l);
        let mut gb = PrecoderSet::zeros(mm, kk, tt, l);
        let one = Complex64::new(1.0, 0.0);

        let terms = e.gains.user_terms(pr.sigma2_watts);
        for k in 0..kk {
            let (tk, dk) = terms[k];
            for m in 0..mm {
                let h = &ch.h[(m, k)];
                for i in 0..kk {
                    let coef = if i == k { 1.0 / tk } else { 1.0 / tk - 1.0 / dk } / LN2;
                    gf.w[(m, i)].axpy(e.gains.uw[k][i] * coef, h, one);
                }
                for t in 0..tt {
                    let coef = (1.0 / tk - 1.0 / dk) / LN2;
                    gf.s[(m, t)].axpy(e.gains.us[k][t] * coef, h, one);
                }
            }
        }

        for m in 0..mm {
            for t in 0..tt {
                if pr.gamma_th_watts[t] == 0.0 {
                    continue;
                }
                let a = &self.steering[(m, t)];
                let c = 1.0 / e.bp[(m, t)];
                for i in 0..kk {
                    let z = inner(a, &p.w[(m, i)]) * c;
                    gb.w[(m, i)].axpy(z, a, one);
                }
                for j in 0..tt {
                    let z = inner(a, &p.s[(m, j)]) * c;
                    gb.s[(m, j)].axpy(z, a, one);
                }
            }
        }

        if let LeakMode::Barrier(r) = self.leak {
            for t in 0..tt {
                for k in 0..kk {
                    let c = 1.0 / e.leak[t][k];
                    for m in 0..mm {
                        let g = &ch.g_dl[(m, t)];
                        for i in 0..kk {
                            let f = if i == k { -1.0 } else { r };
                            gb.w[(m, i)].axpy(e.gains.tw[t][i] * (f * c), g, one);
                        }
                        for j in 0..tt {
                            gb.s[(m, j)].axpy(e.gains.ts[t][j] * (r * c), g, one);
                        }
                    }
                }
            }
        }
        self.confine(&mut gf);
        self.confine(&mut gb);
        (gf, gb)
    }

    /// Applies `(Σ_k β_k h_k h_k^H + λI)^{-1}` to every stacked stream of
    /// `d`, with `β_k = |h_k^H w_k|² / (T_k D_k ln 2)` the curvature weights
    /// of the weighted-MMSE reformulation and `λ = c σ² Σ_k β_k / p_max`.
    fn precondition(&self, e: &Eval, d: &PrecoderSet, damping: f64) -> Option<PrecoderSet> {
        let pr = self.problem;
        let (mm, l) = (pr.dl_aps(), pr.antennas());
        let n = mm * l;
        let terms = e.gains.user_terms(pr.sigma2_watts);
        let mut h = CMatrix::zeros(n, n);
        let mut beta_sum = 0.0;
        for (k, (tk, dk)) in terms.iter().enumerate() {
            let beta = e.gains.uw[k][k].norm_sqr() / (tk * dk * LN2);
            if !(beta > 0.0 && beta.is_finite()) {
                continue;
            }
            beta_sum += beta;
            let hk = pr.channels.stacked_user(k);
            h.ger(Complex64::new(beta, 0.0), &hk, &hk.conjugate(), Complex64::new(1.0, 0.0));
        }
        let trace: f64 = (0..n).map(|i| h[(i, i)].re).sum();
        let lambda = damping * pr.sigma2_watts * beta_sum / pr.p_max_watts + 1e-10 * trace / n as f64;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return None;
        }
        for i in 0..n {
            h[(i, i)] += Complex64::new(lambda, 0.0);
        }
        let chol = hermitian_part(&h).cholesky()?;
        let solve = |t: &Table<CVector>, c: usize| {
            let x = chol.solve(&stack(t.column(c)));
            (0..mm).map(move |m| x.rows(m * l, l).clone_owned()).collect::<Vec<_>>()
        };
        let mut out = d.clone();
        for c in 0..d.w.cols() {
            for (m, v) in solve(&d.w, c).into_iter().enumerate() {
                out.w[(m, c)] = v;
            }
        }
        for c in 0..d.s.cols() {
            for (m, v) in solve(&d.s, c).into_iter().enumerate() {
                out.s[(m, c)] = v;
            }
        }
        self.confine(&mut out);
        Some(out)
    }

    /// Per-AP normalization so every AP's block has norm `√p_max`
    /// (blocks far below the largest one are not blown up).
    fn normalize_direction(&self, d: &mut PrecoderSet) -> bool {
        let norms: Vec<f64> = (0..d.dl_aps()).map(|m| libm::sqrt(d.ap_power(m))).collect();
        let max = norms.iter().copied().fold(0.0, f64::max);
        if !(max > 0.0 && max.is_finite()) {
            return false;
        }
        let target = libm::sqrt(self.problem.p_max_watts);
        for (m, n) in norms.iter().enumerate() {
            d.scale_ap(m, target / n.max(1e-3 * max));
        }
        true
    }

    fn step(&self, p: &PrecoderSet, d: &PrecoderSet, tau: f64) -> PrecoderSet {
        let mut out = p.clone();
        let c = Complex64::new(tau, 0.0);
        out.w.iter_mut().zip(d.w.iter()).for_each(|(x, y)| x.axpy(c, y, Complex64::new(1.0, 0.0)));
        out.s.iter_mut().zip(d.s.iter()).for_each(|(x, y)| x.axpy(c, y, Complex64::new(1.0, 0.0)));
        normalize_per_ap_power(&out, self.problem.p_max_watts).expect("p_max validated")
    }

    fn search(&self, p: &PrecoderSet, e: &Eval, d: &PrecoderSet, mu: f64, tau0: f64) -> Option<(PrecoderSet, Eval, f64)> {
        self.backtrack(e, mu, tau0, |tau| self.step(p, d, tau))
    }

    /// Halves `tau` until `candidate(tau)` is strictly feasible and raises
    /// neither the objective nor the barrier merit.
    fn backtrack(
        &self,
        e: &Eval,
        mu: f64,
        tau0: f64,
        candidate: impl Fn(f64) -> PrecoderSet,
    ) -> Option<(PrecoderSet, Eval, f64)> {
        let phi0 = e.objective + mu * self.barrier(e);
        let mut tau = tau0;
        for _ in 0..48 {
            let cand = candidate(tau);
            let ce = self.evaluate(&cand);
            if self.strictly_feasible(&cand, &ce) && ce.objective >= e.objective {
                let phi = ce.objective + mu * self.barrier(&ce);
                if phi >= phi0 {
                    return Some((cand, ce, tau));
                }
            }
            tau *= 0.5;
        }
        None
    }

    /// Shrinks every sensing beam by `1 − tau` and hands the freed power to
    /// the communication streams of the same AP. Gradient steps alone only
    /// bleed idle sensing power away geometrically.
    fn shed(&self, p: &PrecoderSet, tau: f64) -> PrecoderSet {
        let cap = self.problem.p_max_watts;
        let mut out = p.clone();
        for m in 0..out.dl_aps() {
            out.s.row_mut(m).iter_mut().for_each(|v| *v *= Complex64::new(1.0 - tau, 0.0));
            let ps: f64 = out.s.row(m).iter().map(|v| v.norm_squared()).sum();
            let pw: f64 = out.w.row(m).iter().map(|v| v.norm_squared()).sum();
            if pw > 0.0 && ps + pw < cap {
                let c = Complex64::new(libm::sqrt((cap - ps) / pw), 0.0);
                out.w.row_mut(m).iter_mut().for_each(|v| *v *= c);
            }
        }
        out
    }

    fn has_floor(&self) -> bool {
        self.problem.gamma_th_watts.iter().any(|&g| g > 0.0)
    }

    /// Replaces sensing beams whose target sits below its floor by steered
    /// beams carrying `Γ(1+margin)` and rescales the rest of the AP.
    fn restore_beampattern(&self, p: &mut PrecoderSet) -> Result<()> {
        let pr = self.problem;
        let l = pr.antennas() as f64;
        let margin = pr.tolerances.restoration_margin;
        for m in 0..pr.dl_aps() {
            let mut replaced = vec![false; pr.targets()];
            for _ in 0..=pr.targets() {
                let violated: Vec<usize> = (0..pr.targets())
                    .filter(|&t| {
                        let g = pr.gamma_th_watts[t];
                        g > 0.0
                            && tx_beampattern_gain(ap_beams(p, m), pr.target_angles[(m, t)]) <= g * (1.0 + 0.5 * margin)
                    })
                    .collect();
                if violated.is_empty() {
                    break;
                }
                for &t in &violated {
                    let q = pr.gamma_th_watts[t] * (1.0 + margin) / l;
                    p.s[(m, t)] = &self.steering[(m, t)] * Complex64::new(libm::sqrt(q / l), 0.0);
                    replaced[t] = true;
                }
                let fixed: f64 = (0..pr.targets()).filter(|&t| replaced[t]).map(|t| p.s[(m, t)].norm_squared()).sum();
                if fixed > pr.p_max_watts {
                    return Err(Error::Infeasible {
                        violated: (0..pr.targets()).filter(|&t| replaced[t]).map(|t| format!("beampattern[{m}][{t}]")).collect(),
                    });
                }
                let rest = p.ap_power(m) - fixed;
                if rest > pr.p_max_watts - fixed && rest > 0.0 {
                    let c = Complex64::new(libm::sqrt((pr.p_max_watts - fixed) / rest), 0.0);
                    p.w.row_mut(m).iter_mut().for_each(|v| *v *= c);
                    for t in 0..pr.targets() {
                        if !replaced[t] {
                            p.s[(m, t)] *= c;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn leakage_ok(&self, p: &PrecoderSet, margin: f64) -> bool {
        match self.leak {
            LeakMode::Barrier(r) => {
                let g = Gains::new(&self.problem.channels, p);
                let inner_ratio = libm::exp2(libm::log2(1.0 + r) * (1.0 - margin)) - 1.0;
                g.leakage_margins(inner_ratio, self.problem.sigma2_watts).iter().flatten().all(|&c| c > 0.0)
            }
            _ => true,
        }
    }

    /// Removes the fraction `beta` of every communication stream lying in
    /// the span of the AP's target channels.
    fn partially_confined(&self, p: &PrecoderSet, beta: f64) -> PrecoderSet {
        let mut out = p.clone();
        for m in 0..out.w.rows() {
            for v in out.w.row_mut(m) {
                let mut proj = v.clone();
                project_out(&mut proj, &self.target_bases[m]);
                let c = Complex64::new(beta, 0.0);
                *v = &*v * Complex64::new(1.0 - beta, 0.0) + proj * c;
            }
        }
        out
    }

    fn restore_leakage(&self, p: &mut PrecoderSet) {
        let margin = self.problem.tolerances.restoration_margin;
        if self.leakage_ok(p, margin) {
            return;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if self.leakage_ok(&self.partially_confined(p, mid), margin) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        *p = self.partially_confined(p, hi);
    }

    fn feasibility_phase(&self, start: &PrecoderSet) -> Result<(PrecoderSet, bool)> {
        let pr = self.problem;
        let mut confined = start.clone();
        self.confine(&mut confined);
        if confined == *start && self.strictly_feasible(start, &self.evaluate(start)) {
            return Ok((confined, false));
        }
        let mut p = normalize_per_ap_power(&confined, pr.p_max_watts)?;
        if self.strictly_feasible(&p, &self.evaluate(&p)) {
            return Ok((p, true));
        }
        for _ in 0..4 {
            self.restore_beampattern(&mut p)?;
            self.restore_leakage(&mut p);
            let e = self.evaluate(&p);
            if self.strictly_feasible(&p, &e) {
                return Ok((p, true));
            }
        }
        p = self.partially_confined(&p, 1.0);
        self.restore_beampattern(&mut p)?;
        let e = self.evaluate(&p);
        if self.strictly_feasible(&p, &e) {
            return Ok((p, true));
        }
        let violated = feasibility_check(&p, pr)?.violations(pr);
        Err(Error::Infeasible {
            violated: if violated.is_empty() { vec![String::from("strict feasibility")] } else { violated },
        })
    }

    fn precheck(&self) -> Result<()> {
        let pr = self.problem;
        let bound = pr.antennas() as f64 * pr.p_max_watts;
        let violated: Vec<String> = (0..pr.targets())
            .filter(|&t| pr.gamma_th_watts[t] > bound)
            .flat_map(|t| (0..pr.dl_aps()).map(move |m| format!("beampattern[{m}][{t}]")))
            .collect();
        if violated.is_empty() {
            Ok(())
        } else {
            Err(Error::Infeasible { violated })
        }
    }

    fn run(&self, start: &PrecoderSet) -> Result<SolveReport> {
        let pr = self.problem;
        pr.validate()?;
        check_dims(start, pr)?;
        self.precheck()?;
        let mrt = mrt_baseline(pr)?;
        let mrt_sum_se = sum_se(&pr.channels, &mrt, pr.sigma2_watts);
        let (mut p, restored) = self.feasibility_phase(start)?;
        let mut e = self.evaluate(&p);
        let baseline_sum_se = e.objective;
        let mut trace = vec![e.objective];
        let tol = pr.tolerances;
        let constrained = self.has_floor() || matches!(self.leak, LeakMode::Barrier(_));
        let mut mu = if constrained { 1e-2 } else { 0.0 };
        let mut tau: f64 = 0.25;
        let mut small = 0;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < tol.max_iterations {
            iterations += 1;
            let (gf, gb) = self.gradients(&p, &e);
            let mut combined = gf.clone();
            let c = Complex64::new(mu, 0.0);
            combined.w.iter_mut().zip(gb.w.iter()).for_each(|(x, y)| x.axpy(c, y, Complex64::new(1.0, 0.0)));
            combined.s.iter_mut().zip(gb.s.iter()).for_each(|(x, y)| x.axpy(c, y, Complex64::new(1.0, 0.0)));
            let mut accepted = None;
            for c in DAMPING_LADDER {
                let Some(d) = self.precondition(&e, &combined, c) else { continue };
                if let Some((np, ne, _)) = self.search(&p, &e, &d, mu, 1.0) {
                    if accepted.as_ref().is_none_or(|(_, best): &(PrecoderSet, Eval)| ne.objective > best.objective) {
                        accepted = Some((np, ne));
                    }
                }
            }
            if p.s.iter().any(|v| v.norm_squared() > 0.0) {
                if let Some((np, ne, _)) = self.backtrack(&e, mu, 1.0, |tau| self.shed(&p, tau)) {
                    if accepted.as_ref().is_none_or(|(_, best): &(PrecoderSet, Eval)| ne.objective > best.objective) {
                        accepted = Some((np, ne));
                    }
                }
            }
            let mut plain = gf;
            for d in [&mut combined, &mut plain] {
                if accepted.is_some() {
                    break;
                }
                if self.normalize_direction(d) {
                    if let Some((np, ne, t)) = self.search(&p, &e, d, mu, (2.0 * tau).min(1.0)) {
                        tau = t;
                        accepted = Some((np, ne));
                    }
                }
            }
            let Some((np, ne)) = accepted else {
                converged = true;
                break;
            };
            let prev = e.objective;
            p = np;
            e = ne;
            trace.push(e.objective);
            mu *= 0.7;
            let rel = (e.objective - prev).abs() / prev.abs().max(1e-12);
            if rel < tol.rel_change {
                small += 1;
                if small >= 3 {
                    converged = true;
                    break;
                }
            } else {
                small = 0;
            }
        }
        let feasibility = feasibility_check(&p, pr)?;
        Ok(SolveReport {
            precoders: p,
            objective_trace: trace,
            feasibility,
            iterations,
            converged,
            mrt_sum_se,
            baseline_sum_se,
            restored,
        })
    }
}

/// Maximizes the sum SE under the power and beampattern constraints,
/// starting from full-power MRT. Any leakage cap on `problem` is ignored.
pub fn maximize_sum_se(problem: &DesignProblem) -> Result<SolveReport> {
    let relaxed = problem.clone().without_leakage_cap();
    let start = mrt_baseline(&relaxed)?;
    Solver::new(&relaxed).run(&start)
}

/// As [`maximize_sum_se`] with the leakage cap of `problem` enforced.
pub fn maximize_sum_se_secure(problem: &DesignProblem) -> Result<SolveReport> {
    let start = mrt_baseline(problem)?;
    Solver::new(problem).run(&start)
}

/// Solves `problem` (including any leakage cap) from a given starting point,
/// restoring feasibility first when needed.
pub fn solve_from(problem: &DesignProblem, start: &PrecoderSet) -> Result<SolveReport> {
    Solver::new(problem).run(start)
}

/// Solutions of the nested problems on one instance, ordered from the
/// least to the most constrained.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceChain {
    /// No beampattern floor, no leakage cap.
    pub unconstrained: SolveReport,
    /// Beampattern floors only.
    pub beampattern: SolveReport,
    /// Beampattern floors and leakage cap (when the problem has one).
    pub secure: Option<SolveReport>,
}

fn better(a: SolveReport, b: SolveReport) -> SolveReport {
    if b.sum_se() > a.sum_se() {
        b
    } else {
        a
    }
}

/// Solves the nested problems, warm-starting each relaxation from the
/// solution of the next tighter one, so that
/// `SE(unconstrained) ≥ SE(beampattern) ≥ SE(secure)` holds by construction.
pub fn dominance_chain(problem: &DesignProblem) -> Result<DominanceChain> {
    let secure = match problem.leakage_cap() {
        Some(_) => Some(maximize_sum_se_secure(problem)?),
        None => None,
    };
    let bp_problem = problem.clone().without_leakage_cap();
    let mut beampattern = maximize_sum_se(&bp_problem)?;
    if let Some(s) = &secure {
        beampattern = better(beampattern, solve_from(&bp_problem, &s.precoders)?);
    }
    let free = bp_problem.with_uniform_gamma(0.0);
    let mut unconstrained = maximize_sum_se(&free)?;
    unconstrained = better(unconstrained, solve_from(&free, &beampattern.precoders)?);
    Ok(DominanceChain { unconstrained, beampattern, secure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channels, LargeScale};

    fn problem(m: usize, k: usize, t: usize, l: usize, seed: u64) -> DesignProblem {
        let ls = LargeScale::uniform(m, 0, k, t, l, 1.0, Complex64::new(1.0, 0.0)).unwrap();
        let ch = sample_channels(&ls, seed);
        let angles = Table::from_fn(m, t, |mi, ti| -1.0 + 0.7 * ti as f64 + 0.1 * mi as f64);
        DesignProblem::new(ch, angles, vec![0.5; t], 1.0, 0.1).unwrap()
    }

    #[test]
    fn zero_precoders_slack() {
        let pr = problem(2, 1, 2, 4, 1);
        let s = feasibility_check(&PrecoderSet::zeros(2, 1, 2, 4), &pr).unwrap();
        assert_eq!(s.power, vec![1.0, 1.0]);
        assert!(s.beampattern.iter().all(|&v| v == -0.5));
        assert!(!s.is_feasible(&pr));
    }

    #[test]
    fn mrt_at_cap_has_zero_power_slack() {
        let pr = problem(3, 2, 1, 4, 2);
        let s = feasibility_check(&mrt_baseline(&pr).unwrap(), &pr).unwrap();
        assert!(s.power.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_user_optimum_is_full_power_mrt() {
        let pr = problem(1, 1, 0, 4, 3);
        let r = maximize_sum_se(&pr).unwrap();
        let h = &pr.channels.h[(0, 0)];
        let expect = libm::log2(1.0 + h.norm_squared() * pr.p_max_watts / pr.sigma2_watts);
        assert!((r.sum_se() - expect).abs() <= 1e-3 * expect);
    }

    #[test]
    fn trace_is_monotone_and_solution_feasible() {
        let pr = problem(3, 3, 2, 4, 4);
        let r = maximize_sum_se(&pr).unwrap();
        assert!(r.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert!(r.feasibility.is_feasible(&pr));
        assert!(r.sum_se() >= r.baseline_sum_se);
    }

    #[test]
    fn unreachable_floor_is_infeasible() {
        let pr = problem(2, 1, 1, 4, 5).with_uniform_gamma(4.0 * 1.0 * 1.01);
        assert!(matches!(maximize_sum_se(&pr), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn infinite_cap_matches_plain_solve() {
        let pr = problem(2, 2, 1, 4, 6);
        let a = maximize_sum_se(&pr).unwrap();
        let b = maximize_sum_se_secure(&pr.clone().with_leakage_cap(f64::INFINITY).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn leakage_cap_is_respected() {
        for delta in [0.0, 0.5] {
            let pr = problem(2, 2, 1, 4, 7).with_leakage_cap(delta).unwrap();
            let r = maximize_sum_se_secure(&pr).unwrap();
            let leak = leakage_se(&pr.channels, &r.precoders, pr.sigma2_watts).unwrap();
            assert!(leak.max_per_target.iter().all(|&v| v <= delta + 1e-4), "{delta}: {:?}", leak.max_per_target);
            assert!(r.feasibility.is_feasible(&pr));
        }
    }

    #[test]
    fn chain_is_ordered() {
        let pr = problem(2, 2, 2, 4, 8).with_leakage_cap(0.5).unwrap();
        let c = dominance_chain(&pr).unwrap();
        let s = c.secure.unwrap().sum_se();
        assert!(c.unconstrained.sum_se() >= c.beampattern.sum_se());
        assert!(c.beampattern.sum_se() >= s);
    }
}
