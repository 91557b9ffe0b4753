//! Beampattern gains, sensing mutual information and Fisher information.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, RowDVector};

use crate::beamforming::{steering_vector, PrecoderSet};
use crate::linalg::{hermitian_eigenvalues, hermitian_logdet, hermitian_part, inner, symmetric_eigen};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Symbol-averaged transmit gain `Σ_b |a(θ)^H b|²` over the beams of one AP.
pub fn tx_beampattern_gain<'a>(beams: impl IntoIterator<Item = &'a CVector>, theta: f64) -> f64 {
    let mut a: Option<CVector> = None;
    beams
        .into_iter()
        .map(|b| {
            let a = a.get_or_insert_with(|| steering_vector(b.len(), theta));
            inner(a, b).norm_sqr()
        })
        .sum()
}

/// Instantaneous transmit gain `|a(θ)^H x|²` of one realized signal.
pub fn instantaneous_tx_gain(x: &CVector, theta: f64) -> f64 {
    inner(&steering_vector(x.len(), theta), x).norm_sqr()
}

/// `|u^H b(θ)|²`.
pub fn rx_beampattern_gain(combiner: &CVector, theta: f64) -> f64 {
    inner(combiner, &steering_vector(combiner.len(), theta)).norm_sqr()
}

/// `|u^H b(θ_rx)|² · p_t(θ_tx)`.
pub fn combined_beampattern_gain<'a>(
    combiner: &CVector,
    theta_rx: f64,
    beams: impl IntoIterator<Item = &'a CVector>,
    theta_tx: f64,
) -> f64 {
    rx_beampattern_gain(combiner, theta_rx) * tx_beampattern_gain(beams, theta_tx)
}

/// Every precoder and sensing beam of DL AP `m`.
pub fn ap_beams(precoders: &PrecoderSet, m: usize) -> impl Iterator<Item = &CVector> {
    let w = if precoders.w.rows() > m { precoders.w.row(m) } else { &[] };
    let s = if precoders.s.rows() > m { precoders.s.row(m) } else { &[] };
    w.iter().chain(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BeampatternKind {
    Transmit,
    Receive,
    Combined,
}

/// Gain versus angle at one AP.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeampatternProfile {
    pub ap_index: usize,
    pub angles_rad: Vec<f64>,
    pub gains: Vec<f64>,
    pub kind: BeampatternKind,
}

impl BeampatternProfile {
    /// Indices of the strict local maxima (plateaus count once, at their
    /// first index; the grid ends count when they exceed their neighbour).
    pub fn peaks(&self) -> Vec<usize> {
        let g = &self.gains;
        let n = g.len();
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && g[j + 1] == g[i] {
                j += 1;
            }
            let left = i == 0 || g[i - 1] < g[i];
            let right = j + 1 == n || g[j + 1] < g[i];
            if left && right && g[i] > 0.0 && n > 1 {
                out.push(i);
            }
            i = j + 1;
        }
        out
    }

    /// The `count` highest local maxima, ordered by angle.
    pub fn top_peaks(&self, count: usize) -> Vec<usize> {
        let mut p = self.peaks();
        p.sort_by(|&a, &b| self.gains[b].total_cmp(&self.gains[a]).then(a.cmp(&b)));
        p.truncate(count);
        p.sort_unstable();
        p
    }

    pub fn peak_angles(&self) -> Vec<f64> {
        self.peaks().into_iter().map(|i| self.angles_rad[i]).collect()
    }

    pub fn max_gain(&self) -> f64 {
        self.gains.iter().copied().fold(0.0, f64::max)
    }
}

/// `points` equally spaced angles covering `[−π/2, π/2]` inclusive.
pub fn angle_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => (0..points).map(|i| -FRAC_PI_2 + PI * i as f64 / (points - 1) as f64).collect(),
    }
}

/// Grid from −90° to 90° in steps of `step_deg` (which should divide 180).
pub fn angle_grid_deg(step_deg: f64) -> Vec<f64> {
    let points = libm::round(180.0 / step_deg) as usize + 1;
    angle_grid(points)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    let tol = 1e-12;
    if grid.iter().any(|&t| !(-FRAC_PI_2 - tol..=FRAC_PI_2 + tol).contains(&t)) {
        return Err(Error::InvalidArgument("angle grid must lie within [-pi/2, pi/2]".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("angle grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Transmit beampattern of DL AP `ap` over `grid`.
pub fn beampattern_profile(precoders: &PrecoderSet, ap: usize, grid: &[f64]) -> Result<BeampatternProfile> {
    check_grid(grid)?;
    if ap >= precoders.dl_aps() {
        return Err(Error::InvalidArgument(format!("AP {ap} out of range ({} DL APs)", precoders.dl_aps())));
    }
    let gains = grid.iter().map(|&t| tx_beampattern_gain(ap_beams(precoders, ap), t)).collect();
    Ok(BeampatternProfile { ap_index: ap, angles_rad: grid.to_vec(), gains, kind: BeampatternKind::Transmit })
}

/// Receive beampattern of combiner `combiner` at UL AP `ap`.
pub fn rx_beampattern_profile(combiner: &CVector, ap: usize, grid: &[f64]) -> Result<BeampatternProfile> {
    check_grid(grid)?;
    let gains = grid.iter().map(|&t| rx_beampattern_gain(combiner, t)).collect();
    Ok(BeampatternProfile { ap_index: ap, angles_rad: grid.to_vec(), gains, kind: BeampatternKind::Receive })
}

fn check_psd(r: &CMatrix) -> Result<()> {
    let eig = hermitian_eigenvalues(&hermitian_part(r));
    let max = eig.last().copied().unwrap_or(0.0).abs().max(1.0);
    if let Some(&min) = eig.first() {
        if min < -1e-9 * max {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    Ok(())
}

/// Sensing mutual information `M · log2 det(I + X^H R_G X / σ²)` in bits,
/// for a waveform `X` of shape antennas × slots and response covariance `R_G`.
pub fn sensing_mi(x: &CMatrix, r_g: &CMatrix, sigma2: f64, m: usize) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("noise power {sigma2} must be positive")));
    }
    if r_g.nrows() != r_g.ncols() || r_g.nrows() != x.nrows() {
        return Err(Error::Dimension(format!(
            "R_G is {}x{}, X has {} rows",
            r_g.nrows(),
            r_g.ncols(),
            x.nrows()
        )));
    }
    check_psd(r_g)?;
    let slots = x.ncols();
    let inner = x.adjoint() * hermitian_part(r_g) * x / Complex64::new(sigma2, 0.0);
    let a = hermitian_part(&(CMatrix::identity(slots, slots) + inner));
    let logdet = hermitian_logdet(&a).ok_or(Error::NotPsd { min_eigenvalue: f64::NAN })?;
    Ok(m as f64 * logdet / core::f64::consts::LN_2)
}

/// Sensing MI per slot.
pub fn sensing_mi_rate(x: &CMatrix, r_g: &CMatrix, sigma2: f64, m: usize) -> Result<f64> {
    let slots = x.ncols().max(1) as f64;
    Ok(sensing_mi(x, r_g, sigma2, m)? / slots)
}

/// A parametrized noiseless observation `G(θ) X`.
pub trait ResponseModel {
    fn param_names(&self) -> Vec<String>;

    /// `G(θ) X`.
    fn response(&self, params: &[f64]) -> CMatrix;

    /// `∂(G X)/∂θ_n` for every parameter, if known in closed form.
    fn jacobian(&self, _params: &[f64]) -> Option<Vec<CMatrix>> {
        None
    }
}

/// Point target `G = α b(θ) a(θ)^H` with parameters `(θ, Re α, Im α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTarget {
    pub rx_antennas: usize,
    /// Transmit waveform, transmit antennas × slots.
    pub waveform: CMatrix,
}

impl PointTarget {
    fn parts(&self, theta: f64) -> (CVector, CVector, RowDVector<Complex64>) {
        let b = steering_vector(self.rx_antennas, theta);
        let a = steering_vector(self.waveform.nrows(), theta);
        let ahx = a.adjoint() * &self.waveform;
        (b, a, ahx)
    }
}

impl ResponseModel for PointTarget {
    fn param_names(&self) -> Vec<String> {
        ["theta", "alpha_re", "alpha_im"].iter().map(|s| String::from(*s)).collect()
    }

    fn response(&self, p: &[f64]) -> CMatrix {
        let (b, _, ahx) = self.parts(p[0]);
        &b * ahx * Complex64::new(p[1], p[2])
    }

    fn jacobian(&self, p: &[f64]) -> Option<Vec<CMatrix>> {
        let theta = p[0];
        let alpha = Complex64::new(p[1], p[2]);
        let (b, a, ahx) = self.parts(theta);
        let c = PI * libm::cos(theta);
        let db = CVector::from_fn(b.len(), |l, _| b[l] * Complex64::new(0.0, c * l as f64));
        let da = CVector::from_fn(a.len(), |l, _| a[l] * Complex64::new(0.0, c * l as f64));
        let dahx = da.adjoint() * &self.waveform;
        let bahx = &b * &ahx;
        let d_theta = (&db * &ahx + &b * dahx) * alpha;
        let d_im = &bahx * Complex64::new(0.0, 1.0);
        Some(alloc::vec![d_theta, bahx, d_im])
    }
}

/// Real symmetric Fisher information matrix with named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherInfo {
    pub params: Vec<String>,
    pub matrix: DMatrix<f64>,
}

/// Condition number above which a Fisher matrix is treated as singular.
pub const FISHER_CONDITION_LIMIT: f64 = 1e12;

impl FisherInfo {
    /// `λ_max / λ_min` (infinite for a singular matrix).
    pub fn condition_number(&self) -> f64 {
        let (values, _) = symmetric_eigen(&self.matrix);
        let n = values.len();
        if n == 0 {
            return 1.0;
        }
        let min = values[0];
        let max = values[n - 1];
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.condition_number() > FISHER_CONDITION_LIMIT
    }
}

fn fim_from_derivatives(names: Vec<String>, d: &[CMatrix], sigma2: f64, m: usize) -> FisherInfo {
    let scale = 2.0 * m as f64 / sigma2;
    let n = d.len();
    let mut f = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            // Re Tr(A B^H) = Re Σ a_ij conj(b_ij)
            let v: f64 = d[i].iter().zip(d[j].iter()).map(|(a, b)| (a * b.conj()).re).sum::<f64>() * scale;
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
    }
    FisherInfo { params: names, matrix: f }
}

fn check_fim_args(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("noise power {sigma2} must be positive")));
    }
    Ok(())
}

/// `[F]_{nm} = (2M/σ²) Re Tr(∂(GX)/∂θ_n · (∂(GX)/∂θ_m)^H)` using the model's
/// analytic Jacobian, or central differences when it has none.
pub fn fim(model: &dyn ResponseModel, params: &[f64], sigma2: f64, m: usize) -> Result<FisherInfo> {
    check_fim_args(sigma2)?;
    match model.jacobian(params) {
        Some(d) => Ok(fim_from_derivatives(model.param_names(), &d, sigma2, m)),
        None => fim_finite_difference(model, params, sigma2, m, 1e-6),
    }
}

/// Fisher information from central-difference derivatives with relative step `step`.
pub fn fim_finite_difference(model: &dyn ResponseModel, params: &[f64], sigma2: f64, m: usize, step: f64) -> Result<FisherInfo> {
    check_fim_args(sigma2)?;
    let d: Vec<CMatrix> = (0..params.len())
        .map(|i| {
            let h = step * params[i].abs().max(1.0);
            let mut plus = params.to_vec();
            let mut minus = params.to_vec();
            plus[i] += h;
            minus[i] -= h;
            (model.response(&plus) - model.response(&minus)) / Complex64::new(2.0 * h, 0.0)
        })
        .collect();
    Ok(fim_from_derivatives(model.param_names(), &d, sigma2, m))
}

/// Inverse of the Fisher matrix, or an error naming the parameter that
/// dominates its null direction.
pub fn fisher_inverse(fisher: &FisherInfo) -> Result<DMatrix<f64>> {
    let n = fisher.matrix.nrows();
    let (values, vectors) = symmetric_eigen(&fisher.matrix);
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let max = values[n - 1];
    let min = values[0];
    if !(max > 0.0) || min <= max / FISHER_CONDITION_LIMIT {
        let v = vectors.column(0);
        let idx = (0..n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
        let direction = fisher.params.get(idx).cloned().unwrap_or_else(|| format!("param {idx}"));
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(Error::SingularFisher { direction, condition });
    }
    let inv = DMatrix::from_fn(n, n, |i, j| (0..n).map(|k| vectors[(i, k)] * vectors[(j, k)] / values[k]).sum());
    Ok(inv)
}

/// CRB of parameter `n`: `[F⁻¹]_{nn}`.
pub fn crb(fisher: &FisherInfo, n: usize) -> Result<f64> {
    if n >= fisher.matrix.nrows() {
        return Err(Error::InvalidArgument(format!("parameter {n} out of range")));
    }
    Ok(fisher_inverse(fisher)?[(n, n)])
}

/// CRB of every parameter.
pub fn crb_all(fisher: &FisherInfo) -> Result<Vec<f64>> {
    let inv = fisher_inverse(fisher)?;
    Ok((0..inv.nrows()).map(|i| inv[(i, i)]).collect())
}
