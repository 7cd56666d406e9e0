//! Band structure of a fermionic symbol.
//!
//! Eigenvalues of `M_k` are grouped into clusters (eigenvalue plus an
//! orthonormal basis of its eigenspace) and followed around the zone by
//! eigenspace overlap. Bands whose continuation past `k = 2π` lands on a
//! different band at `k = 0` are glued into one quasi-particle living on the
//! extended zone `[0, 2π·n_mult)`.
//!
//! A quasi-particle may have a projector of rank above one (the shift has a
//! single doubly degenerate band). It counts once in the index, so the index
//! of the shift is `−1`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fermion::{symbol_at, CoinSet};
use crate::linalg::{self, CMat, LineFit};

pub const OVERLAP_THRESHOLD: f64 = 0.7;
pub const MAX_REFINEMENTS: usize = 4;
/// Eigenvalues closer than this are one cluster.
pub const DEGENERACY_TOL: f64 = 1e-8;
pub const FOURIER_FLOOR: f64 = 1e-12;

/// One band at one momentum.
#[derive(Debug, Clone)]
pub struct Band {
    pub theta: Complex64,
    /// Orthonormal columns spanning the eigenspace.
    pub basis: CMat,
}

impl Band {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }
}

/// `‖U†V‖_F² / rank(V)`: the fraction of `V` inside the span of `U`.
fn overlap(v: &CMat, u: &CMat) -> f64 {
    (u.adjoint() * v).norm_squared() / v.ncols() as f64
}

/// `dM/dk`.
fn symbol_derivative(coins: &CoinSet, k: f64) -> CMat {
    let dim = coins.dim();
    let mut m = CMat::zeros(dim, dim);
    for (q, a) in coins.coins() {
        let phase = Complex64::new(0.0, -(q as f64)) * Complex64::from_polar(1.0, -(q as f64) * k);
        m += linalg::to_complex(a) * phase;
    }
    m
}

/// Eigenvalue clusters of `M_k` in order of increasing phase.
pub fn clusters_at(coins: &CoinSet, k: f64) -> Vec<Band> {
    let m = symbol_at(coins, k);
    let eig = linalg::unitary_eigen(&m);
    let mut groups = linalg::cluster_phases(&eig.phases, DEGENERACY_TOL);
    let mean_phase = |g: &Vec<usize>| {
        let s: Complex64 = g.iter().map(|&j| eig.eigenvalue(j)).sum();
        s.arg()
    };
    groups.sort_by(|a, b| mean_phase(a).total_cmp(&mean_phase(b)));
    groups
        .into_iter()
        .map(|g| {
            let sum: Complex64 = g.iter().map(|&j| eig.eigenvalue(j)).sum();
            let basis = CMat::from_fn(m.nrows(), g.len(), |r, c| eig.vectors[(r, g[c])]);
            Band { theta: sum / sum.norm(), basis }
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Matching `from[s] → to[perm[s]]` with equal ranks maximising the total
/// overlap. Returns the permutation and its smallest overlap.
fn best_matching(from: &[CMat], to: &[CMat]) -> Option<(Vec<usize>, f64)> {
    let n = from.len();
    if to.len() != n {
        return None;
    }
    let ov: Vec<Vec<f64>> = from
        .iter()
        .map(|v| to.iter().map(|u| if u.ncols() == v.ncols() { overlap(v, u) } else { -1.0 }).collect())
        .collect();
    let perm = if n <= 8 {
        permutations(n).into_iter().max_by(|a, b| {
            let sa: f64 = a.iter().enumerate().map(|(s, &c)| ov[s][c]).sum();
            let sb: f64 = b.iter().enumerate().map(|(s, &c)| ov[s][c]).sum();
            sa.total_cmp(&sb)
        })?
    } else {
        let mut used = vec![false; n];
        let mut perm = vec![0; n];
        for s in 0..n {
            let c = (0..n).filter(|&c| !used[c]).max_by(|&a, &b| ov[s][a].total_cmp(&ov[s][b]))?;
            used[c] = true;
            perm[s] = c;
        }
        perm
    };
    let min = perm.iter().enumerate().map(|(s, &c)| ov[s][c]).fold(f64::INFINITY, f64::min);
    Some((perm, min))
}

/// Splits a merged eigenspace among the bands that ran into it.
///
/// The degeneracy is lifted at first order by the Hermitian matrix
/// `i λ̄ U† M'(k) U`; its eigenspaces are the analytic continuations of the
/// bands. When first order does not resolve the bands, the previous vectors
/// are projected into the eigenspace and orthonormalised.
fn split_cluster(coins: &CoinSet, k: f64, cluster: &Band, prev: &[&Band]) -> Vec<Band> {
    let u = &cluster.basis;
    let g = u.adjoint() * symbol_derivative(coins, k) * u * (Complex64::i() * cluster.theta.conj());
    let g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(grp) if (eig.eigenvalues[i] - eig.eigenvalues[*grp.last().unwrap()]).abs() < 1e-6 => grp.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let subspaces: Vec<CMat> = groups
        .iter()
        .map(|grp| u * CMat::from_fn(u.ncols(), grp.len(), |r, c| eig.eigenvectors[(r, grp[c])]))
        .collect();
    let prev_bases: Vec<CMat> = prev.iter().map(|b| b.basis.clone()).collect();
    if let Some((perm, min)) = best_matching(&prev_bases, &subspaces) {
        if min >= OVERLAP_THRESHOLD {
            return perm
                .into_iter()
                .map(|c| Band { theta: cluster.theta, basis: subspaces[c].clone() })
                .collect();
        }
    }
    let projected: Vec<CMat> = prev.iter().map(|b| u * (u.adjoint() * &b.basis)).collect();
    let widths: Vec<usize> = projected.iter().map(|m| m.ncols()).collect();
    let all = CMat::from_fn(u.nrows(), widths.iter().sum(), |r, c| {
        let mut c = c;
        for m in &projected {
            if c < m.ncols() {
                return m[(r, c)];
            }
            c -= m.ncols();
        }
        unreachable!()
    });
    let q = linalg::orthonormalize(&all);
    let mut start = 0;
    widths
        .iter()
        .map(|&w| {
            let b = Band { theta: cluster.theta, basis: q.columns(start, w).into_owned() };
            start += w;
            b
        })
        .collect()
}

/// Labels the clusters at `k` consistently with `prev`. Returns the bands and
/// the smallest overlap with their predecessors.
fn assign(coins: &CoinSet, k: f64, prev: &[Band], clusters: &[Band]) -> Option<(Vec<Band>, f64)> {
    let nb = prev.len();
    let nc = clusters.len();
    if nc > nb {
        return None;
    }
    let prev_bases: Vec<CMat> = prev.iter().map(|b| b.basis.clone()).collect();
    if nc == nb {
        let to: Vec<CMat> = clusters.iter().map(|b| b.basis.clone()).collect();
        let (perm, min) = best_matching(&prev_bases, &to)?;
        return Some((perm.into_iter().map(|c| clusters[c].clone()).collect(), min));
    }
    // fewer clusters: some bands meet at this momentum
    let owner: Vec<usize> = prev
        .iter()
        .map(|b| {
            (0..nc)
                .max_by(|&x, &y| overlap(&b.basis, &clusters[x].basis).total_cmp(&overlap(&b.basis, &clusters[y].basis)))
                .unwrap()
        })
        .collect();
    let mut out: Vec<Option<Band>> = vec![None; nb];
    let mut min = f64::INFINITY;
    for (c, cluster) in clusters.iter().enumerate() {
        let members: Vec<usize> = (0..nb).filter(|&s| owner[s] == c).collect();
        let rank: usize = members.iter().map(|&s| prev[s].rank()).sum();
        if members.is_empty() || rank != cluster.rank() {
            return None;
        }
        for &s in &members {
            min = min.min(overlap(&prev[s].basis, &cluster.basis));
        }
        if members.len() == 1 {
            out[members[0]] = Some(cluster.clone());
        } else {
            let refs: Vec<&Band> = members.iter().map(|&s| &prev[s]).collect();
            for (&s, b) in members.iter().zip(split_cluster(coins, k, cluster, &refs)) {
                out[s] = Some(b);
            }
        }
    }
    Some((out.into_iter().map(Option::unwrap).collect(), min))
}

/// Continues `prev` from `k_from` to `k_to`, bisecting the step up to
/// [`MAX_REFINEMENTS`] times when the overlap drops below the threshold.
fn advance(
    coins: &CoinSet,
    k_from: f64,
    prev: &[Band],
    k_to: f64,
    depth: usize,
    refinements: &mut usize,
) -> Result<Vec<Band>> {
    let clusters = clusters_at(coins, k_to);
    let reason = match assign(coins, k_to, prev, &clusters) {
        Some((bands, min)) if min >= OVERLAP_THRESHOLD => return Ok(bands),
        Some((_, min)) => format!("overlap {min:.3} below {OVERLAP_THRESHOLD}"),
        None => format!("{} clusters cannot be matched to {} bands", clusters.len(), prev.len()),
    };
    if depth >= MAX_REFINEMENTS {
        return Err(Error::Continuation { k_lo: k_from.min(k_to), k_hi: k_from.max(k_to), reason });
    }
    *refinements += 1;
    let mid = 0.5 * (k_from + k_to);
    let half = advance(coins, k_from, prev, mid, depth + 1, refinements)?;
    advance(coins, mid, &half, k_to, depth + 1, refinements)
}

/// Bands on the grid `k_j = 2πj/N_k`, consistently labelled.
#[derive(Debug, Clone)]
pub struct BandGrid {
    pub n_k: usize,
    /// `bands[j][s]`.
    pub bands: Vec<Vec<Band>>,
    /// Bands continued from the last grid point to `k = 2π`.
    pub closing: Vec<Band>,
    pub refinements: usize,
}

impl BandGrid {
    pub fn k(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_k as f64
    }

    pub fn band_count(&self) -> usize {
        self.closing.len()
    }
}

pub fn diagonalize_grid(coins: &CoinSet, n_k: usize) -> Result<BandGrid> {
    if n_k < 64 || n_k <= 8 * coins.radius() * coins.n() {
        return Err(Error::Invalid(format!(
            "grid of {n_k} points is too coarse (need N_k >= 64 and N_k > 8Rn)"
        )));
    }
    diagonalize_grid_unchecked(coins, n_k)
}

/// Same as [`diagonalize_grid`] without the sampling-adequacy check, for
/// the finite-ring momenta.
pub fn diagonalize_grid_unchecked(coins: &CoinSet, n_k: usize) -> Result<BandGrid> {
    let ks: Vec<f64> = (0..n_k).map(|j| 2.0 * PI * j as f64 / n_k as f64).collect();
    let counts: Vec<usize> = ks.par_iter().map(|&k| clusters_at(coins, k).len()).collect();
    let max = *counts.iter().max().unwrap();
    let start = counts.iter().position(|&c| c == max).unwrap();

    let mut bands: Vec<Option<Vec<Band>>> = vec![None; n_k];
    bands[start] = Some(clusters_at(coins, ks[start]));
    let mut refinements = 0;
    for j in start + 1..n_k {
        let prev = bands[j - 1].as_ref().unwrap();
        let next = advance(coins, ks[j - 1], prev, ks[j], 0, &mut refinements)?;
        bands[j] = Some(next);
    }
    let closing = advance(coins, ks[n_k - 1], bands[n_k - 1].as_ref().unwrap(), 2.0 * PI, 0, &mut refinements)?;
    for j in (0..start).rev() {
        let prev = bands[j + 1].as_ref().unwrap();
        let next = advance(coins, ks[j + 1], prev, ks[j], 0, &mut refinements)?;
        bands[j] = Some(next);
    }
    Ok(BandGrid {
        n_k,
        bands: bands.into_iter().map(Option::unwrap).collect(),
        closing,
        refinements,
    })
}

/// A glued band on the extended zone `[0, 2π·n_mult)`.
#[derive(Debug, Clone)]
pub struct QuasiParticle {
    pub n_mult: usize,
    /// Band labels in the order they are traversed.
    pub bands: Vec<usize>,
    /// Grid points per unit zone.
    pub n_k: usize,
    /// Samples at `𝐤_t = 2πt/N_k`, `t = 0 … n_mult·N_k − 1`.
    pub theta: Vec<Complex64>,
    pub basis: Vec<CMat>,
    pub winding: Option<i64>,
    pub energy: Option<Vec<f64>>,
}

impl QuasiParticle {
    /// A rank-one quasi-particle from bare samples of `Θ`.
    pub fn from_theta(n_mult: usize, theta: Vec<Complex64>) -> Self {
        let n_k = theta.len() / n_mult;
        let basis = vec![CMat::identity(1, 1); theta.len()];
        QuasiParticle { n_mult, bands: (0..n_mult).collect(), n_k, theta, basis, winding: None, energy: None }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.basis[0].ncols()
    }

    pub fn k_ext(&self, t: usize) -> f64 {
        2.0 * PI * t as f64 / self.n_k as f64
    }

    pub fn projector(&self, t: usize) -> CMat {
        &self.basis[t] * self.basis[t].adjoint()
    }

    /// Drift speed `w / n_mult`.
    pub fn speed(&self) -> Option<f64> {
        self.winding.map(|w| w as f64 / self.n_mult as f64)
    }
}

/// Glues the bands into quasi-particles along the cycles of the boundary
/// permutation `2π⁻ → 0`.
pub fn glue_bands(grid: &BandGrid) -> Result<Vec<QuasiParticle>> {
    let from: Vec<CMat> = grid.closing.iter().map(|b| b.basis.clone()).collect();
    let to: Vec<CMat> = grid.bands[0].iter().map(|b| b.basis.clone()).collect();
    let (perm, min) =
        best_matching(&from, &to).ok_or_else(|| Error::Gluing("band ranks differ across the boundary".into()))?;
    if min < OVERLAP_THRESHOLD {
        return Err(Error::Gluing(format!("boundary overlap {min:.3} below {OVERLAP_THRESHOLD}")));
    }
    let nb = perm.len();
    let mut seen = vec![false; nb];
    let mut out = Vec::new();
    for s0 in 0..nb {
        if seen[s0] {
            continue;
        }
        let mut cycle = vec![s0];
        seen[s0] = true;
        let mut s = perm[s0];
        while s != s0 {
            seen[s] = true;
            cycle.push(s);
            s = perm[s];
        }
        let mut theta = Vec::with_capacity(cycle.len() * grid.n_k);
        let mut basis = Vec::with_capacity(cycle.len() * grid.n_k);
        for &s in &cycle {
            for j in 0..grid.n_k {
                theta.push(grid.bands[j][s].theta);
                basis.push(grid.bands[j][s].basis.clone());
            }
        }
        out.push(QuasiParticle {
            n_mult: cycle.len(),
            bands: cycle,
            n_k: grid.n_k,
            theta,
            basis,
            winding: None,
            energy: None,
        });
    }
    Ok(out)
}

/// Phase increments around the closed extended zone.
fn phase_steps(qp: &QuasiParticle) -> Result<Vec<f64>> {
    let n = qp.len();
    (0..n)
        .map(|t| {
            let d = linalg::phase_diff(qp.theta[(t + 1) % n].arg(), qp.theta[t].arg());
            if d.abs() >= PI / 2.0 {
                Err(Error::Invalid(format!("phase step {d:.3} at sample {t}: grid under-sampled")))
            } else {
                Ok(d)
            }
        })
        .collect()
}

pub fn winding_unwrap(qp: &QuasiParticle) -> Result<i64> {
    let total: f64 = phase_steps(qp)?.iter().sum::<f64>() / (2.0 * PI);
    let w = total.round();
    if (total - w).abs() > 0.01 {
        return Err(Error::WindingResidual(total - w));
    }
    Ok(w as i64)
}

/// Discrete Fourier coefficients `f̂(r)`, `r` in `(−N/2, N/2]` order of FFT
/// output, normalised by the sample count.
fn dft(samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let n = buf.len() as f64;
    buf.iter_mut().for_each(|c| *c /= n);
    buf
}

fn frequency(i: usize, n: usize) -> i64 {
    if i <= n / 2 { i as i64 } else { i as i64 - n as i64 }
}

/// `Σ_r r |f̂(r)|²` with the DFT taken in `t = 𝐤/n_mult`, before rounding.
pub fn winding_fourier_raw(qp: &QuasiParticle) -> f64 {
    let c = dft(&qp.theta);
    let n = c.len();
    c.iter().enumerate().map(|(i, z)| frequency(i, n) as f64 * z.norm_sqr()).sum()
}

pub fn winding_fourier(qp: &QuasiParticle) -> Result<i64> {
    let raw = winding_fourier_raw(qp);
    let w = raw.round();
    if (raw - w).abs() > 0.01 {
        return Err(Error::WindingResidual(raw - w));
    }
    Ok(w as i64)
}

/// Both winding estimates; they must agree.
pub fn compute_winding(qp: &mut QuasiParticle) -> Result<i64> {
    let unwrap = winding_unwrap(qp)?;
    let fourier = winding_fourier(qp)?;
    if unwrap != fourier {
        return Err(Error::WindingMismatch { unwrap, fourier });
    }
    qp.winding = Some(unwrap);
    Ok(unwrap)
}

/// `E(𝐤) = −φ(𝐤) + (w/n)𝐤` with `φ` the continuously unwrapped phase of `Θ`.
///
/// `E` is shifted by a multiple of `2π` so that its mean lies in `(−π, π]`;
/// the values themselves are not folded.
pub fn energy_extract(mut qp: QuasiParticle) -> Result<QuasiParticle> {
    let w = qp.winding.ok_or(Error::Missing("winding"))?;
    let steps = phase_steps(&qp)?;
    let slope = w as f64 / qp.n_mult as f64;
    let mut phi = qp.theta[0].arg();
    let mut energy = Vec::with_capacity(qp.len());
    for (t, d) in steps.iter().enumerate() {
        energy.push(-phi + slope * qp.k_ext(t));
        phi += d;
    }
    let end = -phi + slope * qp.k_ext(qp.len());
    let residual = (end - energy[0]).abs();
    if residual > 1e-8 {
        return Err(Error::Periodicity(residual));
    }
    let mean = energy.iter().sum::<f64>() / energy.len() as f64;
    let shift = linalg::principal_phase(mean) - mean;
    let shift = 2.0 * PI * (shift / (2.0 * PI)).round();
    energy.iter_mut().for_each(|e| *e += shift);
    qp.energy = Some(energy);
    Ok(qp)
}

/// Windings and energies for every quasi-particle of a model.
pub fn analyze(coins: &CoinSet, n_k: usize) -> Result<Vec<QuasiParticle>> {
    let grid = diagonalize_grid(coins, n_k)?;
    finish(glue_bands(&grid)?)
}

pub(crate) fn finish(qps: Vec<QuasiParticle>) -> Result<Vec<QuasiParticle>> {
    qps.into_iter()
        .map(|mut qp| {
            compute_winding(&mut qp)?;
            energy_extract(qp)
        })
        .collect()
}

/// Largest `‖M_k v − e^{−iE(𝐤)} e^{i(w/n)𝐤} v‖` over every basis vector of
/// the band at `samples` evenly spaced extended momenta.
pub fn drift_check(coins: &CoinSet, qp: &QuasiParticle, samples: usize) -> Result<f64> {
    let w = qp.winding.ok_or(Error::Missing("winding"))?;
    let energy = qp.energy.as_ref().ok_or(Error::Missing("energy"))?;
    let slope = w as f64 / qp.n_mult as f64;
    let n = qp.len();
    let samples = samples.clamp(1, n);
    let mut worst = 0.0f64;
    for i in 0..samples {
        let t = i * n / samples;
        let kk = qp.k_ext(t);
        let m = symbol_at(coins, kk.rem_euclid(2.0 * PI));
        let phase = Complex64::from_polar(1.0, -energy[t] + slope * kk);
        let b = &qp.basis[t];
        worst = worst.max(linalg::max_abs(&(&m * b - b * phase)));
    }
    Ok(worst)
}

/// `Σ_ν w^ν` over a complete band set.
pub fn index(qps: &[QuasiParticle], n: usize) -> Result<i64> {
    let got: usize = qps.iter().map(|q| q.n_mult * q.rank()).sum();
    if got != 2 * n {
        return Err(Error::IncompleteBands { got, expected: 2 * n });
    }
    qps.iter().map(|q| q.winding.ok_or(Error::Missing("winding"))).sum()
}

/// `‖Σ_ν Θ^ν P^ν − M_k‖_max` over the grid, with each extended sample folded
/// back to its unit-zone momentum.
pub fn reconstruction_residual(coins: &CoinSet, qps: &[QuasiParticle]) -> f64 {
    let n_k = qps[0].n_k;
    let dim = coins.dim();
    let mut acc = vec![CMat::zeros(dim, dim); n_k];
    for qp in qps {
        for t in 0..qp.len() {
            acc[t % n_k] += qp.projector(t) * qp.theta[t];
        }
    }
    acc.iter()
        .enumerate()
        .map(|(j, m)| linalg::max_abs(&(m - symbol_at(coins, 2.0 * PI * j as f64 / n_k as f64))))
        .fold(0.0, f64::max)
}

/// `max(|f̂(r)|, |f̂(−r)|)` for `r = 0 … N/2`.
pub fn fourier_magnitudes(samples: &[Complex64]) -> Vec<f64> {
    let c = dft(samples);
    let n = c.len();
    let mut out = vec![0.0f64; n / 2 + 1];
    for (i, z) in c.iter().enumerate() {
        let r = frequency(i, n).unsigned_abs() as usize;
        out[r] = out[r].max(z.norm());
    }
    out
}

/// Fits `log|f̂(r)|` against `r ≥ 1` above [`FOURIER_FLOOR`].
pub fn fourier_decay_fit(samples: &[Complex64]) -> Result<LineFit> {
    let mags = fourier_magnitudes(samples);
    let profile: Vec<(f64, f64)> = mags.iter().enumerate().skip(1).map(|(r, &m)| (r as f64, m)).collect();
    let window = linalg::decay_window(&profile, FOURIER_FLOOR);
    if window.len() < 5 {
        return Err(Error::FitWindow(window.len()));
    }
    let x: Vec<f64> = window.iter().map(|p| p.0).collect();
    let y: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
    Ok(linalg::linear_fit(&x, &y))
}

/// `nu,k_extended,re_theta,im_theta,energy,winding,n_mult` rows.
pub fn bands_csv(qps: &[QuasiParticle]) -> String {
    let mut s = String::from("nu,k_extended,re_theta,im_theta,energy,winding,n_mult\n");
    for (nu, qp) in qps.iter().enumerate() {
        for t in 0..qp.len() {
            let e = qp.energy.as_ref().map_or(f64::NAN, |e| e[t]);
            let w = qp.winding.map_or(String::new(), |w| w.to_string());
            let _ = writeln!(
                s,
                "{nu},{:.12},{:.15e},{:.15e},{:.15e},{w},{}",
                qp.k_ext(t),
                qp.theta[t].re,
                qp.theta[t].im,
                e,
                qp.n_mult
            );
        }
    }
    s
}

/// `nu,k_extended,row,col,re,im` rows of the band projectors.
pub fn projectors_csv(qps: &[QuasiParticle]) -> String {
    let mut s = String::from("nu,k_extended,row,col,re,im\n");
    for (nu, qp) in qps.iter().enumerate() {
        for t in 0..qp.len() {
            let p = qp.projector(t);
            for r in 0..p.nrows() {
                for c in 0..p.ncols() {
                    let _ = writeln!(s, "{nu},{:.12},{r},{c},{:.15e},{:.15e}", qp.k_ext(t), p[(r, c)].re, p[(r, c)].im);
                }
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::Model;

    fn sorted_windings(qps: &[QuasiParticle]) -> Vec<i64> {
        let mut w: Vec<i64> = qps.iter().map(|q| q.winding.unwrap()).collect();
        w.sort();
        w
    }

    #[test]
    fn identity_bands_are_trivial() {
        let qps = analyze(&Model::Identity.coins(), 64).unwrap();
        assert_eq!(qps.len(), 1);
        assert_eq!(qps[0].rank(), 2);
        assert!(qps[0].theta.iter().all(|t| (t - 1.0).norm() < 1e-14));
        assert!(qps[0].energy.as_ref().unwrap().iter().all(|e| e.abs() < 1e-14));
        assert_eq!(index(&qps, 1).unwrap(), 0);
    }

    #[test]
    fn shift_band() {
        let coins = Model::Shift.coins();
        let qps = analyze(&coins, 128).unwrap();
        assert_eq!(qps.len(), 1);
        let qp = &qps[0];
        assert_eq!((qp.n_mult, qp.rank(), qp.winding), (1, 2, Some(-1)));
        for t in 0..qp.len() {
            assert!((qp.theta[t] - Complex64::from_polar(1.0, -qp.k_ext(t))).norm() < 1e-12);
        }
        assert!(qp.energy.as_ref().unwrap().iter().all(|e| e.abs() < 1e-12));
        assert!(drift_check(&coins, qp, 32).unwrap() < 1e-12);
        assert_eq!(qp.speed(), Some(-1.0));
        assert_eq!(index(&qps, 1).unwrap(), -1);
    }

    #[test]
    fn dirac_gapped_bands() {
        let theta = PI / 4.0;
        let coins = Model::Dirac(theta).coins();
        let qps = analyze(&coins, 512).unwrap();
        assert_eq!(qps.len(), 2);
        assert!(qps.iter().all(|q| q.n_mult == 1 && q.rank() == 1));
        assert_eq!(sorted_windings(&qps), vec![0, 0]);
        for qp in &qps {
            let e = qp.energy.as_ref().unwrap();
            for t in (0..qp.len()).step_by(37) {
                let expect = (theta.cos() * qp.k_ext(t).cos()).acos();
                assert!((e[t].abs() - expect).abs() < 1e-10, "{} vs {expect}", e[t]);
            }
            assert!(drift_check(&coins, qp, 64).unwrap() < 1e-8);
        }
        assert_eq!(index(&qps, 1).unwrap(), 0);
        assert!(reconstruction_residual(&coins, &qps) < 1e-8);
    }

    #[test]
    fn dirac_critical_bands() {
        let coins = Model::Dirac(0.0).coins();
        let qps = analyze(&coins, 256).unwrap();
        assert_eq!(qps.len(), 2);
        assert!(qps.iter().all(|q| q.n_mult == 1));
        assert_eq!(sorted_windings(&qps), vec![-1, 1]);
        for qp in &qps {
            let w = qp.winding.unwrap() as f64;
            for t in 0..qp.len() {
                let expect = Complex64::from_polar(1.0, w * qp.k_ext(t));
                assert!((qp.theta[t] - expect).norm() < 1e-12);
            }
            assert!(drift_check(&coins, qp, 64).unwrap() < 1e-10);
        }
        assert_eq!(index(&qps, 1).unwrap(), 0);
        assert!(reconstruction_residual(&coins, &qps) < 1e-10);
    }

    #[test]
    fn half_shift_glues_into_one_quasi_particle() {
        let coins = Model::HalfShift.coins();
        let qps = analyze(&coins, 128).unwrap();
        assert_eq!(qps.len(), 1);
        let qp = &qps[0];
        assert_eq!((qp.n_mult, qp.rank(), qp.winding), (2, 2, Some(-1)));
        assert_eq!(qp.len(), 256);
        assert!(qp.energy.as_ref().unwrap().iter().all(|e| e.abs() < 1e-12));
        assert!(drift_check(&coins, qp, 64).unwrap() < 1e-12);
        assert_eq!(index(&qps, 2).unwrap(), -1);
        assert!(reconstruction_residual(&coins, &qps) < 1e-12);
    }

    #[test]
    fn fourier_winding_of_pure_modes() {
        let n = 64;
        let mode = |r: f64| -> Vec<Complex64> {
            (0..n).map(|t| Complex64::from_polar(1.0, r * 2.0 * PI * t as f64 / n as f64)).collect()
        };
        let qp = QuasiParticle::from_theta(1, mode(-1.0));
        assert_eq!(winding_fourier(&qp).unwrap(), -1);
        assert_eq!(winding_unwrap(&qp).unwrap(), -1);
        let qp = QuasiParticle::from_theta(1, mode(2.0));
        assert_eq!(winding_fourier(&qp).unwrap(), 2);
        assert_eq!(winding_unwrap(&qp).unwrap(), 2);
    }

    #[test]
    fn undersampled_unwrap_is_an_error() {
        let theta: Vec<Complex64> = (0..8).map(|t| Complex64::from_polar(1.0, 3.0 * 2.0 * PI * t as f64 / 8.0)).collect();
        assert!(winding_unwrap(&QuasiParticle::from_theta(1, theta)).is_err());
    }

    #[test]
    fn energy_needs_winding() {
        let qp = QuasiParticle::from_theta(1, vec![Complex64::new(1.0, 0.0); 8]);
        assert!(matches!(energy_extract(qp), Err(Error::Missing("winding"))));
    }

    #[test]
    fn grid_checks_sampling() {
        assert!(diagonalize_grid(&Model::Shift.coins(), 32).is_err());
    }

    #[test]
    fn incomplete_band_set() {
        let qps = analyze(&Model::Dirac(PI / 4.0).coins(), 128).unwrap();
        assert!(matches!(index(&qps[..1], 1), Err(Error::IncompleteBands { got: 1, expected: 2 })));
    }

    #[test]
    fn brickwork_windings_agree() {
        let coins = Model::RandomBrickwork { seed: 1, depth: 2 }.coins();
        let qps = analyze(&coins, 512).unwrap();
        let total: usize = qps.iter().map(|q| q.n_mult * q.rank()).sum();
        assert_eq!(total, 4);
        assert!(reconstruction_residual(&coins, &qps) < 1e-8);
        for qp in &qps {
            assert!(drift_check(&coins, qp, 64).unwrap() < 1e-8);
        }
    }

    #[test]
    fn fourier_decay_for_gapped_dirac() {
        let qps = analyze(&Model::Dirac(PI / 4.0).coins(), 512).unwrap();
        for qp in &qps {
            let e: Vec<Complex64> = qp.energy.as_ref().unwrap().iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let fit = fourier_decay_fit(&e).unwrap();
            assert!(fit.slope < 0.0 && fit.r2 >= 0.99, "{fit:?}");
        }
    }
}
