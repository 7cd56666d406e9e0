//! Real-space generator `Z` with `e^Z = O` built from the glued bands.
//!
//! For a quasi-particle with multiplicity `n`, winding `w`, energy `E` and
//! projector `Π`,
//!
//! ```text
//! Z_Δ = −i ∫ d𝐤/2π e^{iΔ𝐤} (E(𝐤) − (w/n)𝐤) Π(𝐤)
//! ```
//!
//! over a window of length `2πn`. The `E Π` part is periodic and analytic,
//! so a uniform sum is spectrally exact. The `𝐤 Π` part is a convolution of
//! the Fourier coefficients of `Π` with the closed-form transform of `𝐤`.
//!
//! The window is centred, `𝐤 ∈ [−πn, πn)`. Conjugate bands then map onto each
//! other and `Z` comes out real and antisymmetric. The window `[0, 2πn)` gives
//! another logarithm of `O` that is complex; it is available as
//! [`Window::Positive`] for comparison.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::bands::{self, QuasiParticle};
use crate::error::{Error, Result};
use crate::fermion::{build_ring_operator, symbol_at, CoinSet};
use crate::linalg::{self, CMat, LineFit, RMat};

pub const NOISE_FLOOR: f64 = 1e-12;
pub const REAL_TOL: f64 = 1e-9;

/// Integration window of the winding term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// `[−πn, πn)`.
    Centered,
    /// `[0, 2πn)`.
    Positive,
}

impl Window {
    /// Start of the window in `u = 𝐤/n`.
    fn start(self) -> f64 {
        match self {
            Window::Centered => -PI,
            Window::Positive => 0.0,
        }
    }
}

/// `∫_{c}^{c+2π} du/2π u e^{ipu}`.
pub fn sawtooth_transform(p: i64, window: Window) -> Complex64 {
    let c = window.start();
    if p == 0 {
        Complex64::new(c + PI, 0.0)
    } else {
        Complex64::from_polar(1.0, p as f64 * c) / Complex64::new(0.0, p as f64)
    }
}

/// `∫ d𝐤/2π (𝐤/n) e^{iΔ𝐤}` over the window of length `2πn`.
pub fn discontinuous_transform(delta: i64, n: usize, window: Window) -> Complex64 {
    sawtooth_transform(n as i64 * delta, window) * n as f64
}

/// Translation-invariant blocks `Z_Δ` for `|Δ| ≤ r_max`.
#[derive(Debug, Clone)]
pub struct CouplingField {
    pub r_max: usize,
    pub dim: usize,
    blocks: Vec<RMat>,
    /// Largest imaginary part discarded.
    pub max_imag: f64,
}

impl CouplingField {
    pub fn block(&self, delta: i64) -> &RMat {
        &self.blocks[(delta + self.r_max as i64) as usize]
    }

    /// `‖Z_{−Δ} + Z_Δ^T‖_max` over all `Δ`.
    pub fn antisymmetry_residual(&self) -> f64 {
        (0..=self.r_max as i64)
            .map(|d| linalg::max_abs_real(&(self.block(-d) + self.block(d).transpose())))
            .fold(0.0, f64::max)
    }

    /// Largest entry of `Z_{±d}`.
    pub fn max_at(&self, d: usize) -> f64 {
        let d = d as i64;
        linalg::max_abs_real(self.block(d)).max(linalg::max_abs_real(self.block(-d)))
    }

    /// `delta_r,l,lp,value` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta_r,l,lp,value\n");
        for d in -(self.r_max as i64)..=self.r_max as i64 {
            let b = self.block(d);
            for l in 0..self.dim {
                for lp in 0..self.dim {
                    let _ = writeln!(s, "{d},{l},{lp},{:.15e}", b[(l, lp)]);
                }
            }
        }
        s
    }
}

fn fft(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse { planner.plan_fft_inverse(data.len()) } else { planner.plan_fft_forward(data.len()) };
    plan.process(data);
}

pub fn build_couplings(qps: &[QuasiParticle], r_max: usize) -> Result<CouplingField> {
    build_couplings_with(qps, r_max, Window::Centered).map(|(f, _)| f)
}

/// The field and its complex blocks for the given window.
pub fn build_couplings_with(
    qps: &[QuasiParticle],
    r_max: usize,
    window: Window,
) -> Result<(CouplingField, Vec<CMat>)> {
    let first = qps.first().ok_or(Error::Missing("quasi-particles"))?;
    let n_k = first.n_k;
    if 2 * r_max >= n_k {
        return Err(Error::Aliasing { r_max, n_k });
    }
    let dim = first.basis[0].nrows();
    let deltas: Vec<i64> = (-(r_max as i64)..=r_max as i64).collect();
    let mut blocks = vec![CMat::zeros(dim, dim); deltas.len()];
    for qp in qps {
        let energy = qp.energy.as_ref().ok_or(Error::Missing("energy"))?;
        let w = qp.winding.ok_or(Error::Missing("winding"))?;
        let n = qp.n_mult;
        let len = qp.len();
        let projectors: Vec<CMat> = (0..len).map(|t| qp.projector(t)).collect();
        // the winding sum couples Δ to p = nΔ + m for every Fourier index m
        let kernel: Vec<Vec<Complex64>> = if w == 0 {
            Vec::new()
        } else {
            deltas
                .iter()
                .map(|&d| {
                    (0..len)
                        .map(|i| {
                            let m = if i <= len / 2 { i as i64 } else { i as i64 - len as i64 };
                            sawtooth_transform(n as i64 * d + m, window)
                        })
                        .collect()
                })
                .collect()
        };
        for l in 0..dim {
            for lp in 0..dim {
                let pi: Vec<Complex64> = projectors.iter().map(|p| p[(l, lp)]).collect();
                let mut analytic: Vec<Complex64> = pi.iter().zip(energy).map(|(p, &e)| p * e).collect();
                fft(&mut analytic, true);
                let mut coeffs = pi.clone();
                fft(&mut coeffs, false);
                coeffs.iter_mut().for_each(|c| *c /= len as f64);
                for (b, &d) in deltas.iter().enumerate() {
                    let idx = (n as i64 * d).rem_euclid(len as i64) as usize;
                    let a = analytic[idx] / n_k as f64;
                    let wind = if w == 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        coeffs.iter().zip(&kernel[b]).map(|(c, j)| c * j).sum::<Complex64>() * (w * n as i64) as f64
                    };
                    blocks[b][(l, lp)] += Complex64::new(0.0, -1.0) * (a - wind);
                }
            }
        }
    }
    let max_imag = blocks.iter().flat_map(|b| b.iter()).map(|c| c.im.abs()).fold(0.0, f64::max);
    if window == Window::Centered && max_imag > REAL_TOL {
        return Err(Error::NotReal(max_imag));
    }
    let field = CouplingField {
        r_max,
        dim,
        blocks: blocks.iter().map(|b| b.map(|c| c.re)).collect(),
        max_imag,
    };
    Ok((field, blocks))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    Exponential,
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Gapped,
    Critical,
}

#[derive(Debug, Clone)]
pub struct DecayFit {
    pub model: DecayModel,
    /// `m ≈ C e^{−βd}`: `(C, β, R²)`.
    pub exponential: (f64, f64, f64),
    /// `m ≈ C d^{α}`: `(C, α, R²)`.
    pub power_law: (f64, f64, f64),
    /// From the windings.
    pub classification: Classification,
    /// Whether the fit corroborates the classification.
    pub consistent: bool,
    /// `(d, m(d))` over the fit window.
    pub window: Vec<(usize, f64)>,
    /// `m(d)` for `d = 0 … r_max`.
    pub profile: Vec<f64>,
}

impl DecayFit {
    pub fn beta(&self) -> f64 {
        self.exponential.1
    }

    pub fn exponent(&self) -> f64 {
        self.power_law.1
    }

    /// `distance,max_abs,fitted_model,params` rows.
    pub fn to_csv(&self) -> String {
        let (name, params) = match self.model {
            DecayModel::Exponential => (
                "exponential",
                format!("C={:.6e};beta={:.6e};r2={:.8}", self.exponential.0, self.exponential.1, self.exponential.2),
            ),
            DecayModel::InverseDistance => (
                "inverse_distance",
                format!("C={:.6e};alpha={:.6e};r2={:.8}", self.power_law.0, self.power_law.1, self.power_law.2),
            ),
        };
        let mut s = String::from("distance,max_abs,fitted_model,params\n");
        for (d, m) in self.profile.iter().enumerate().skip(1) {
            let _ = writeln!(s, "{d},{m:.15e},{name},{params}");
        }
        s
    }
}

/// Fits the coupling profile and classifies the model by its windings.
pub fn fit_decay(field: &CouplingField, windings: &[i64]) -> Result<DecayFit> {
    if field.r_max < 10 {
        return Err(Error::Invalid(format!("r_max = {} < 10", field.r_max)));
    }
    let profile: Vec<f64> = (0..=field.r_max).map(|d| field.max_at(d)).collect();
    let points: Vec<(f64, f64)> = profile.iter().enumerate().skip(1).map(|(d, &m)| (d as f64, m)).collect();
    let window = linalg::decay_window(&points, NOISE_FLOOR);
    if window.len() < 5 {
        return Err(Error::FitWindow(window.len()));
    }
    let d: Vec<f64> = window.iter().map(|p| p.0).collect();
    let logm: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
    let logd: Vec<f64> = d.iter().map(|x| x.ln()).collect();
    let e: LineFit = linalg::linear_fit(&d, &logm);
    let p: LineFit = linalg::linear_fit(&logd, &logm);
    let model = if e.r2 >= p.r2 { DecayModel::Exponential } else { DecayModel::InverseDistance };
    let classification =
        if windings.iter().all(|&w| w == 0) { Classification::Gapped } else { Classification::Critical };
    let consistent = match classification {
        Classification::Gapped => model == DecayModel::Exponential && e.r2 >= 0.99 && e.slope < 0.0,
        Classification::Critical => model == DecayModel::InverseDistance && (p.slope + 1.0).abs() <= 0.15,
    };
    Ok(DecayFit {
        model,
        exponential: (e.intercept.exp(), -e.slope, e.r2),
        power_law: (p.intercept.exp(), p.slope, p.r2),
        classification,
        consistent,
        window: window.iter().map(|&(x, m)| (x as usize, m)).collect(),
        profile,
    })
}

/// Ring generator assembled from per-momentum blocks `Z_{k_j}`.
fn ring_from_momenta(zk: &[CMat], dim: usize) -> Result<RMat> {
    let len = zk.len();
    let blocks: Vec<CMat> = (0..len)
        .map(|delta| {
            let mut block = CMat::zeros(dim, dim);
            for (j, b) in zk.iter().enumerate() {
                let k = 2.0 * PI * j as f64 / len as f64;
                block += b * Complex64::from_polar(1.0 / len as f64, delta as f64 * k);
            }
            block
        })
        .collect();
    let mut z = CMat::zeros(dim * len, dim * len);
    for r in 0..len {
        for rp in 0..len {
            let delta = (r + len - rp) % len;
            z.view_mut((r * dim, rp * dim), (dim, dim)).copy_from(&blocks[delta]);
        }
    }
    let imag = z.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if imag > REAL_TOL {
        return Err(Error::NotReal(imag));
    }
    Ok(z.map(|c| c.re))
}

/// Finite-ring generator from the discrete momenta `k_j = 2πj/L`.
///
/// Bands are continued on a grid refined to a multiple of `L`. At the
/// self-conjugate momenta `0` and `π` the spectral formula can put a band on
/// the negative real axis with a complex weight; there the real logarithm of
/// the real orthogonal `M_k` is used instead.
pub fn ring_generator(coins: &CoinSet, len: usize) -> Result<RMat> {
    if len <= 2 * coins.radius() {
        return Err(Error::RingTooSmall { len, radius: coins.radius() });
    }
    let refine = 256usize.div_ceil(len).max(1);
    let grid = bands::diagonalize_grid_unchecked(coins, len * refine)?;
    let qps = bands::finish(bands::glue_bands(&grid)?)?;
    let dim = coins.dim();
    let mut zk = vec![CMat::zeros(dim, dim); len];
    for qp in &qps {
        let energy = qp.energy.as_ref().unwrap();
        let slope = qp.winding.unwrap() as f64 / qp.n_mult as f64;
        let span = 2.0 * PI * qp.n_mult as f64;
        for c in 0..qp.n_mult {
            for (j, z) in zk.iter_mut().enumerate() {
                let t = c * grid.n_k + j * refine;
                let mut kk = qp.k_ext(t);
                if kk >= span / 2.0 {
                    kk -= span;
                }
                let eps = energy[t] - slope * kk;
                *z += qp.projector(t) * Complex64::new(0.0, -eps);
            }
        }
    }
    for (j, z) in zk.iter_mut().enumerate() {
        let self_conjugate = 2 * j == len || j == 0;
        let imag = z.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        if self_conjugate && imag > REAL_TOL {
            let k = 2.0 * PI * j as f64 / len as f64;
            let m = symbol_at(coins, k).map(|c| c.re);
            *z = linalg::to_complex(&linalg::real_log_orthogonal(&m)?);
        }
    }
    ring_from_momenta(&zk, dim)
}

/// `‖e^Z − O‖_max` on `ring(L)`.
pub fn verify_exponentiation(coins: &CoinSet, len: usize) -> Result<f64> {
    let z = ring_generator(coins, len)?;
    let o = build_ring_operator(coins, len)?;
    Ok(linalg::max_abs_real(&(linalg::expm(&z) - &o.matrix)))
}

/// `(ρ, ‖e^{Z_ρ} − O‖_max)` with `Z_ρ` the field truncated at radius `ρ` and
/// wrapped onto `ring(L)`.
pub fn truncation_error(field: &CouplingField, coins: &CoinSet, len: usize) -> Result<Vec<(usize, f64)>> {
    let o = build_ring_operator(coins, len)?;
    let dim = field.dim;
    let rho_max = field.r_max.min((len - 1) / 2);
    let mut out = Vec::with_capacity(rho_max);
    for rho in 1..=rho_max {
        let mut z = RMat::zeros(dim * len, dim * len);
        for r in 0..len {
            for d in -(rho as i64)..=rho as i64 {
                let rp = (r as i64 - d).rem_euclid(len as i64) as usize;
                let mut view = z.view_mut((r * dim, rp * dim), (dim, dim));
                view += field.block(d);
            }
        }
        out.push((rho, linalg::max_abs_real(&(linalg::expm(&z) - &o.matrix))));
    }
    Ok(out)
}

pub fn truncation_csv(curve: &[(usize, f64)]) -> String {
    let mut s = String::from("rho,residual\n");
    for (rho, r) in curve {
        let _ = writeln!(s, "{rho},{r:.6e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bands::analyze;
    use crate::fermion::Model;

    fn field(model: Model, n_k: usize, r_max: usize) -> (CouplingField, Vec<i64>) {
        let qps = analyze(&model.coins(), n_k).unwrap();
        let w = qps.iter().map(|q| q.winding.unwrap()).collect();
        (build_couplings(&qps, r_max).unwrap(), w)
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for n in 1..=2usize {
            for delta in -3i64..=3 {
                for window in [Window::Positive, Window::Centered] {
                    let steps = 400_000;
                    let c = window.start() * n as f64;
                    let h = 2.0 * PI * n as f64 / steps as f64;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for s in 0..steps {
                        let k = c + (s as f64 + 0.5) * h;
                        acc += Complex64::from_polar(k / n as f64, delta as f64 * k) * h / (2.0 * PI);
                    }
                    let exact = discontinuous_transform(delta, n, window);
                    assert!((acc - exact).norm() < 1e-6, "{n} {delta} {window:?}");
                }
            }
        }
        // the form quoted for the window [0, 2πn)
        let z = discontinuous_transform(3, 2, Window::Positive);
        assert!((z - Complex64::new(0.0, 1.0 / -3.0)).norm() < 1e-15);
        assert!((discontinuous_transform(0, 2, Window::Positive).re - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn identity_couplings_vanish() {
        let (f, _) = field(Model::Identity, 64, 10);
        assert!((-10..=10).all(|d| linalg::max_abs_real(f.block(d)) == 0.0));
    }

    #[test]
    fn critical_dirac_is_inverse_distance() {
        let (f, w) = field(Model::Dirac(0.0), 256, 40);
        for d in 1..=40i64 {
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            let expect = RMat::from_row_slice(2, 2, &[-sign / d as f64, 0.0, 0.0, sign / d as f64]);
            assert!(linalg::max_abs_real(&(f.block(d) - expect)) < 1e-10, "{d}");
        }
        assert!(linalg::max_abs_real(f.block(0)) < 1e-10);
        assert!(f.antisymmetry_residual() < 1e-12);
        let fit = fit_decay(&f, &w).unwrap();
        assert_eq!(fit.model, DecayModel::InverseDistance);
        assert_eq!(fit.classification, Classification::Critical);
        assert!((fit.exponent() + 1.0).abs() < 0.01);
        assert!(fit.consistent);
    }

    #[test]
    fn positive_window_is_complex_on_diagonal() {
        let qps = analyze(&Model::Dirac(0.0).coins(), 256).unwrap();
        let (_, raw) = build_couplings_with(&qps, 10, Window::Positive).unwrap();
        let diag = &raw[10];
        assert!((diag[(0, 0)] - Complex64::new(0.0, -PI)).norm() < 1e-10);
        assert!((diag[(1, 1)] - Complex64::new(0.0, PI)).norm() < 1e-10);
        // off the diagonal i w (i/(r'−r)) Π reproduces 1/Δ diag(−1, 1)
        let d3 = &raw[13];
        assert!((d3[(0, 0)].re + 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn gapped_dirac_decays_exponentially() {
        let (f4, w4) = field(Model::Dirac(PI / 4.0), 1024, 40);
        let (f8, w8) = field(Model::Dirac(PI / 8.0), 1024, 40);
        assert!(f4.antisymmetry_residual() < 1e-9);
        let a = fit_decay(&f4, &w4).unwrap();
        let b = fit_decay(&f8, &w8).unwrap();
        assert_eq!(a.model, DecayModel::Exponential);
        assert_eq!(a.classification, Classification::Gapped);
        assert!(a.beta() > 0.0 && a.consistent);
        assert!(b.beta() < a.beta());
    }

    #[test]
    fn aliasing_and_missing_energy() {
        let qps = analyze(&Model::Shift.coins(), 64).unwrap();
        assert!(matches!(build_couplings(&qps, 32), Err(Error::Aliasing { .. })));
        let mut bare = qps.clone();
        bare[0].energy = None;
        assert!(matches!(build_couplings(&bare, 10), Err(Error::Missing("energy"))));
    }

    #[test]
    fn ring_exponentiation_small() {
        assert!(verify_exponentiation(&Model::Identity.coins(), 8).unwrap() < 1e-14);
        for model in [Model::Shift, Model::Dirac(0.0), Model::Dirac(PI / 4.0), Model::HalfShift] {
            let r = verify_exponentiation(&model.coins(), 12).unwrap();
            assert!(r < 1e-8, "{model}: {r:e}");
        }
    }

    #[test]
    fn truncation_examples() {
        let (f, _) = field(Model::Identity, 64, 10);
        let curve = truncation_error(&f, &Model::Identity.coins(), 24).unwrap();
        assert!(curve.iter().all(|c| c.1 < 1e-14));
        let (f, _) = field(Model::Dirac(PI / 4.0), 512, 30);
        let curve = truncation_error(&f, &Model::Dirac(PI / 4.0).coins(), 64).unwrap();
        assert!(curve.last().unwrap().1 < 1e-6);
        assert!(curve.last().unwrap().1 < curve[0].1);
    }
}
