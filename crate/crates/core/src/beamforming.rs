//! Precoders, combiners, steering vectors and the superimposed ISAC signal.

use alloc::vec::Vec;

use rand::Rng;

use crate::channel::ChannelSet;
use crate::linalg::{norm_sqr, Table};
use crate::rng::complex_normal;
use crate::{CVector, Complex64, Error, Result};

/// Transmit precoders `w` (`M × K`), sensing beams `s` (`M × T`) and
/// sensing combiners `u` (`N × T`), all of length `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub w: Table<CVector>,
    pub s: Table<CVector>,
    pub u: Table<CVector>,
    pub rho: f64,
}

impl PrecoderSet {
    /// All-zero precoders and sensing beams; no combiners.
    pub fn zeros(dl_aps: usize, users: usize, targets: usize, antennas: usize) -> Self {
        Self {
            w: Table::from_fn(dl_aps, users, |_, _| CVector::zeros(antennas)),
            s: Table::from_fn(dl_aps, targets, |_, _| CVector::zeros(antennas)),
            u: Table::empty(),
            rho: 1.0,
        }
    }

    pub fn dl_aps(&self) -> usize {
        self.w.rows().max(self.s.rows())
    }

    pub fn users(&self) -> usize {
        self.w.cols()
    }

    pub fn targets(&self) -> usize {
        self.s.cols()
    }

    /// `Σ_k ‖w_mk‖² + Σ_t ‖s_mt‖²`.
    pub fn ap_power(&self, m: usize) -> f64 {
        let w: f64 = if self.w.rows() > m { self.w.row(m).iter().map(norm_sqr).sum() } else { 0.0 };
        let s: f64 = if self.s.rows() > m { self.s.row(m).iter().map(norm_sqr).sum() } else { 0.0 };
        w + s
    }

    pub fn ap_powers(&self) -> Vec<f64> {
        (0..self.dl_aps()).map(|m| self.ap_power(m)).collect()
    }

    /// Multiplies every precoder and sensing beam of AP `m` by `c`.
    pub fn scale_ap(&mut self, m: usize, c: f64) {
        if self.w.rows() > m {
            self.w.row_mut(m).iter_mut().for_each(|v| *v *= Complex64::new(c, 0.0));
        }
        if self.s.rows() > m {
            self.s.row_mut(m).iter_mut().for_each(|v| *v *= Complex64::new(c, 0.0));
        }
    }

    /// Multiplies every precoder and sensing beam by `c`; combiners are untouched.
    pub fn scaled(mut self, c: f64) -> Self {
        for m in 0..self.dl_aps() {
            self.scale_ap(m, c);
        }
        self
    }

    pub fn with_combiners(mut self, u: Table<CVector>) -> Self {
        self.u = u;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }
}

/// `w_mk = h_mk`, `s_mt = g^d_mt`, no combiners, no normalization.
pub fn mrt_precoders(channels: &ChannelSet) -> PrecoderSet {
    PrecoderSet { w: channels.h.clone(), s: channels.g_dl.clone(), u: Table::empty(), rho: 1.0 }
}

/// `u_nt = g^u_nt`.
pub fn mrc_combiners(channels: &ChannelSet) -> Table<CVector> {
    channels.g_ul.clone()
}

/// Half-wavelength ULA response, element `l` equal to `exp(jπ l sin θ)`.
pub fn steering_vector(antennas: usize, theta_rad: f64) -> CVector {
    let phase = core::f64::consts::PI * libm::sin(theta_rad);
    CVector::from_fn(antennas, |l, _| {
        let a = phase * l as f64;
        Complex64::new(libm::cos(a), libm::sin(a))
    })
}

/// Data symbols of one slot plus optional stochastic sensing symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    /// One unit-power data symbol per user.
    pub q: Vec<Complex64>,
    /// One `CN(0, 1)` symbol per target, shared by every AP's beam toward
    /// it, so the sensing covariance at AP `m` is `Σ_t s_mt s_mt^H`. `None`
    /// means deterministic beams.
    pub sensing: Option<Vec<Complex64>>,
}

const QPSK_AMP: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Unit-power QPSK point drawn uniformly.
pub fn qpsk<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let bits: u8 = rng.random_range(0..4);
    let re = if bits & 1 == 0 { QPSK_AMP } else { -QPSK_AMP };
    let im = if bits & 2 == 0 { QPSK_AMP } else { -QPSK_AMP };
    Complex64::new(re, im)
}

impl SymbolBlock {
    pub fn draw<R: Rng + ?Sized>(users: usize, targets: usize, stochastic_sensing: bool, rng: &mut R) -> Self {
        let q = (0..users).map(|_| qpsk(rng)).collect();
        let sensing = stochastic_sensing.then(|| (0..targets).map(|_| complex_normal(rng)).collect());
        Self { q, sensing }
    }

    fn sensing_symbol(&self, t: usize) -> Complex64 {
        self.sensing.as_ref().map_or(Complex64::new(1.0, 0.0), |c| c[t])
    }
}

fn check_symbols(precoders: &PrecoderSet, symbols: &SymbolBlock) -> Result<()> {
    if symbols.q.len() != precoders.users() {
        return Err(Error::Dimension(alloc::format!(
            "{} data symbols for {} users",
            symbols.q.len(),
            precoders.users()
        )));
    }
    if let Some(c) = &symbols.sensing {
        if c.len() != precoders.targets() {
            return Err(Error::Dimension(alloc::format!(
                "{} sensing symbols for {} targets",
                c.len(),
                precoders.targets()
            )));
        }
    }
    Ok(())
}

fn weighted_signal(precoders: &PrecoderSet, symbols: &SymbolBlock, cw: f64, cs: f64) -> Result<Vec<CVector>> {
    check_symbols(precoders, symbols)?;
    let antennas = precoders.w.iter().chain(precoders.s.iter()).map(|v| v.len()).next().unwrap_or(0);
    Ok((0..precoders.dl_aps())
        .map(|m| {
            let mut x = CVector::zeros(antennas);
            if cw != 0.0 {
                for (k, w) in precoders.w.row(m).iter().enumerate() {
                    x.axpy(symbols.q[k] * cw, w, Complex64::new(1.0, 0.0));
                }
            }
            if cs != 0.0 && precoders.s.rows() > m {
                for (t, s) in precoders.s.row(m).iter().enumerate() {
                    x.axpy(symbols.sensing_symbol(t) * cs, s, Complex64::new(1.0, 0.0));
                }
            }
            x
        })
        .collect())
}

/// Per-AP transmit vectors `x_m = Σ_k w_mk q_k + Σ_t s_mt c_t`.
pub fn transmit_signal(precoders: &PrecoderSet, symbols: &SymbolBlock) -> Result<Vec<CVector>> {
    weighted_signal(precoders, symbols, 1.0, 1.0)
}

/// Priority-weighted superposition `x_m = √ρ Σ_k w_mk q_k + √(1−ρ) Σ_t s_mt c_t`.
pub fn isac_superposition(precoders: &PrecoderSet, symbols: &SymbolBlock, rho: f64) -> Result<Vec<CVector>> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidArgument(alloc::format!("rho = {rho} outside [0, 1]")));
    }
    weighted_signal(precoders, symbols, libm::sqrt(rho), libm::sqrt(1.0 - rho))
}

fn check_power(p_max_watts: f64) -> Result<()> {
    if !(p_max_watts > 0.0 && p_max_watts.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("p_max = {p_max_watts} W must be positive")));
    }
    Ok(())
}

/// Scales down every AP whose power exceeds `p_max_watts` so it meets the
/// cap exactly; APs under the cap and all-zero APs are left unchanged.
pub fn normalize_per_ap_power(precoders: &PrecoderSet, p_max_watts: f64) -> Result<PrecoderSet> {
    check_power(p_max_watts)?;
    let mut out = precoders.clone();
    for m in 0..out.dl_aps() {
        let p = out.ap_power(m);
        if p > p_max_watts {
            out.scale_ap(m, libm::sqrt(p_max_watts / p));
        }
    }
    Ok(out)
}

/// Scales every non-zero AP to exactly `p_max_watts`.
pub fn scale_to_per_ap_power(precoders: &PrecoderSet, p_max_watts: f64) -> Result<PrecoderSet> {
    check_power(p_max_watts)?;
    let mut out = precoders.clone();
    for m in 0..out.dl_aps() {
        let p = out.ap_power(m);
        if p > 0.0 {
            out.scale_ap(m, libm::sqrt(p_max_watts / p));
        }
    }
    Ok(out)
}

/// Builds a full precoder set (including combiners) from one channel realization.
pub trait PrecoderRule {
    fn precoders(&self, channels: &ChannelSet) -> PrecoderSet;
}

impl<F: Fn(&ChannelSet) -> PrecoderSet> PrecoderRule for F {
    fn precoders(&self, channels: &ChannelSet) -> PrecoderSet {
        self(channels)
    }
}

/// MRT scaled by a common amplitude `√η` with MRC combiners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMrt {
    pub eta: f64,
}

impl PrecoderRule for ScaledMrt {
    fn precoders(&self, channels: &ChannelSet) -> PrecoderSet {
        mrt_precoders(channels).scaled(libm::sqrt(self.eta)).with_combiners(mrc_combiners(channels))
    }
}

/// Conjugate beamforming with the statistical per-AP power rule
/// `w_mk = sqrt(p_max / (L Σ_i ζ_mi)) · h_mk`, so each AP meets `p_max` on average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerApConjugate {
    pub p_max_watts: f64,
}

impl PrecoderRule for PerApConjugate {
    fn precoders(&self, channels: &ChannelSet) -> PrecoderSet {
        let ls = &channels.large_scale;
        let mut out = mrt_precoders(channels).with_combiners(mrc_combiners(channels));
        for m in 0..ls.dl_aps() {
            let load: f64 = ls.antennas as f64 * (ls.zeta_h.row(m).sum() + ls.zeta_gdl.row(m).sum());
            if load > 0.0 {
                out.scale_ap(m, libm::sqrt(self.p_max_watts / load));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channels, LargeScale};
    use crate::rng::{stream_rng, StreamKind};

    fn channels() -> ChannelSet {
        let ls = LargeScale::uniform(3, 2, 2, 2, 4, 1.0, Complex64::new(1.0, 0.0)).unwrap();
        sample_channels(&ls, 9)
    }

    #[test]
    fn mrt_and_mrc_are_identity_maps() {
        let ch = channels();
        let p = mrt_precoders(&ch);
        assert_eq!(p.w, ch.h);
        assert_eq!(p.s, ch.g_dl);
        assert!(p.u.is_empty());
        assert_eq!(mrc_combiners(&ch), ch.g_ul);
    }

    #[test]
    fn no_targets_gives_empty_beams() {
        let ls = LargeScale::uniform(2, 0, 1, 0, 2, 1.0, Complex64::new(1.0, 0.0)).unwrap();
        let p = mrt_precoders(&sample_channels(&ls, 1));
        assert_eq!(p.targets(), 0);
        assert!(mrc_combiners(&sample_channels(&ls, 1)).is_empty());
    }

    #[test]
    fn steering_vector_closed_forms() {
        let a = steering_vector(5, 0.0);
        assert!(a.iter().all(|z| (*z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let b = steering_vector(2, core::f64::consts::FRAC_PI_2);
        assert!((b[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        for th in [-1.2, -0.3, 0.4, 1.5] {
            assert!((norm_sqr(&steering_vector(7, th)) - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn superposition_weights() {
        let ch = channels();
        let p = mrt_precoders(&ch);
        let mut rng = stream_rng(3, StreamKind::Symbols, 0, 0);
        let sym = SymbolBlock::draw(2, 2, false, &mut rng);
        let x1 = isac_superposition(&p, &sym, 1.0).unwrap();
        let no_sensing = PrecoderSet { s: Table::from_fn(3, 2, |_, _| CVector::zeros(4)), ..p.clone() };
        assert_eq!(x1, transmit_signal(&no_sensing, &sym).unwrap());

        let comm_only = PrecoderSet { w: Table::from_fn(3, 0, |_, _| CVector::zeros(4)), ..p.clone() };
        let empty = SymbolBlock { q: Vec::new(), sensing: None };
        let x0 = isac_superposition(&comm_only, &empty, 0.0).unwrap();
        for (m, x) in x0.iter().enumerate() {
            let expect: CVector = p.s.row(m).iter().fold(CVector::zeros(4), |acc, s| acc + s);
            assert!((x - expect).norm() < 1e-12);
        }
        assert!(isac_superposition(&p, &sym, 1.5).is_err());
    }

    #[test]
    fn superposition_is_linear_in_data() {
        let p = mrt_precoders(&channels());
        let a = SymbolBlock { q: alloc::vec![Complex64::new(1.0, 0.5), Complex64::new(-0.2, 0.0)], sensing: None };
        let b = SymbolBlock { q: alloc::vec![Complex64::new(0.3, -1.0), Complex64::new(0.0, 2.0)], sensing: None };
        let sum = SymbolBlock { q: alloc::vec![a.q[0] + b.q[0], a.q[1] + b.q[1]], sensing: None };
        let rho = 0.6;
        let xa = isac_superposition(&p, &a, rho).unwrap();
        let xb = isac_superposition(&p, &b, rho).unwrap();
        let xs = isac_superposition(&p, &sum, rho).unwrap();
        let zero = SymbolBlock { q: alloc::vec![Complex64::new(0.0, 0.0); 2], sensing: None };
        let x0 = isac_superposition(&p, &zero, rho).unwrap();
        for m in 0..3 {
            assert!((&xs[m] - (&xa[m] + &xb[m] - &x0[m])).norm() < 1e-12);
        }
    }

    #[test]
    fn per_ap_normalization() {
        let p = mrt_precoders(&channels());
        let before = p.ap_powers();
        let cap = before[0] / 2.0;
        let out = normalize_per_ap_power(&p, cap).unwrap();
        for (m, &b) in before.iter().enumerate() {
            let a = out.ap_power(m);
            if b > cap {
                assert!((a - cap).abs() <= 1e-12 * cap);
            } else {
                assert_eq!(a, b);
            }
        }
        let loose = normalize_per_ap_power(&p, 1e9).unwrap();
        assert_eq!(loose, p);
        let argmax = |ps: &PrecoderSet| {
            (0..2).max_by(|&a, &b| norm_sqr(&ps.w[(0, a)]).total_cmp(&norm_sqr(&ps.w[(0, b)]))).unwrap()
        };
        assert_eq!(argmax(&p), argmax(&out));
        assert!(normalize_per_ap_power(&p, 0.0).is_err());
    }

    #[test]
    fn zero_ap_passes_through() {
        let p = PrecoderSet::zeros(2, 1, 1, 3);
        assert_eq!(normalize_per_ap_power(&p, 1.0).unwrap(), p);
        assert_eq!(scale_to_per_ap_power(&p, 1.0).unwrap(), p);
    }

    #[test]
    fn qpsk_has_unit_power() {
        let mut rng = stream_rng(1, StreamKind::Symbols, 0, 0);
        for _ in 0..64 {
            assert!((qpsk(&mut rng).norm_sqr() - 1.0).abs() < 1e-15);
        }
    }
}
