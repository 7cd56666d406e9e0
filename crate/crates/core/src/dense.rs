//! Exact small-ring matrices for Clifford rules.
//!
//! Basis states `|x⟩` of `ring(L)` are indexed little-endian: bit `r` of `x`
//! is the `Z_r` eigenvalue label of site `r`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clifford::CliffordRule;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::pauli::{Geometry, Local, PauliTerm};

pub const DEFAULT_MAX_LEN: usize = 12;
pub const CLUSTER_TOL: f64 = 1e-9;
pub const SIGNIFICANCE: f64 = 1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn i_pow(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

/// `(q, p, phase_exp)` bit masks of a ring term.
fn masks(term: &PauliTerm, len: usize) -> Result<(usize, usize, u8)> {
    if term.geometry() != Geometry::Ring(len) {
        return Err(Error::GeometryMismatch(
            term.geometry().to_string(),
            Geometry::Ring(len).to_string(),
        ));
    }
    let (mut q, mut p) = (0usize, 0usize);
    for (r, l) in term.sites() {
        if l.q {
            q |= 1 << r;
        }
        if l.p {
            p |= 1 << r;
        }
    }
    Ok((q, p, term.phase_exp()))
}

/// Applies `i^φ Π X^q Z^p` to a state vector.
fn apply_masks(q: usize, p: usize, phase: u8, v: &[Complex64], out: &mut [Complex64]) {
    let c = i_pow(phase);
    for (x, &a) in v.iter().enumerate() {
        let s = if (p & x).count_ones() % 2 == 1 { -c } else { c };
        out[x ^ q] = s * a;
    }
}

pub fn apply_pauli(term: &PauliTerm, len: usize, v: &[Complex64]) -> Result<Vec<Complex64>> {
    let (q, p, phase) = masks(term, len)?;
    if v.len() != 1 << len {
        return Err(Error::DimensionMismatch { expected: 1 << len, got: v.len() });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    apply_masks(q, p, phase, v, &mut out);
    Ok(out)
}

/// Dense matrix of a ring term.
pub fn pauli_matrix(term: &PauliTerm, len: usize) -> Result<CMat> {
    let (q, p, phase) = masks(term, len)?;
    let dim = 1usize << len;
    let c = i_pow(phase);
    let mut m = CMat::zeros(dim, dim);
    for x in 0..dim {
        let s = if (p & x).count_ones() % 2 == 1 { -c } else { c };
        m[(x ^ q, x)] = s;
    }
    Ok(m)
}

/// `W` realising a Clifford rule on `ring(L)`.
#[derive(Debug, Clone)]
pub struct DenseUnitary {
    pub len: usize,
    pub matrix: CMat,
}

impl DenseUnitary {
    pub fn dim(&self) -> usize {
        1 << self.len
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.matrix)
    }
}

pub fn synthesize_unitary(rule: &CliffordRule, len: usize) -> Result<DenseUnitary> {
    synthesize_unitary_with_budget(rule, len, DEFAULT_MAX_LEN)
}

/// Builds `W` column by column from the stabiliser state `W†|0⟩`.
///
/// `ψ₀ = W†|0…0⟩` is the joint `+1` eigenvector of the images of all `Z_r`,
/// obtained by projecting a generic vector. Then `W†|x⟩ = img(X)^x ψ₀`, so the
/// columns of `W†` are Pauli images of `ψ₀`. The result is verified against
/// every single-site generator by conjugation.
pub fn synthesize_unitary_with_budget(
    rule: &CliffordRule,
    len: usize,
    max_len: usize,
) -> Result<DenseUnitary> {
    if len > max_len {
        return Err(Error::DenseBudget { len, max: max_len });
    }
    if len <= 2 * rule.radius() {
        return Err(Error::RingTooSmall { len, radius: rule.radius() });
    }
    let ring = Geometry::Ring(len);
    let dim = 1usize << len;
    let mut img_x = Vec::with_capacity(len);
    let mut img_z = Vec::with_capacity(len);
    for r in 0..len as i64 {
        img_x.push(masks(&rule.step(&PauliTerm::x(ring, r))?, len)?);
        img_z.push(masks(&rule.step(&PauliTerm::z(ring, r))?, len)?);
    }

    let mut psi = Vec::new();
    for seed in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut tmp = vec![Complex64::new(0.0, 0.0); dim];
        for &(q, p, ph) in &img_z {
            apply_masks(q, p, ph, &v, &mut tmp);
            for (a, b) in v.iter_mut().zip(&tmp) {
                *a = (*a + *b) * 0.5;
            }
        }
        let nrm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-6 {
            psi = v.into_iter().map(|c| c / nrm).collect();
            break;
        }
    }
    if psi.is_empty() {
        return Err(Error::SynthesisFailed(f64::NAN));
    }

    // column x of W† is img(X)^x ψ₀, built from column x without its top bit
    let mut wdag = CMat::zeros(dim, dim);
    wdag.set_column(0, &DVector::from_vec(psi));
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    for x in 1..dim {
        let top = usize::BITS - 1 - x.leading_zeros();
        let prev = x ^ (1 << top);
        let (q, p, ph) = img_x[top as usize];
        apply_masks(q, p, ph, wdag.column(prev).as_slice(), &mut buf);
        wdag.column_mut(x).copy_from_slice(&buf);
    }
    let mut w = wdag.adjoint();

    let first = w.column(0).iter().copied().find(|c| c.norm() > 1e-8).unwrap();
    let fix = first.conj() / first.norm();
    w *= fix;

    let out = DenseUnitary { len, matrix: w };
    let residual = conjugation_residual(&out, rule)?;
    if residual > 1e-10 {
        return Err(Error::SynthesisFailed(residual));
    }
    Ok(out)
}

/// Largest deviation of `W† g W` from the rule image over all single-site
/// generators, computed as `‖W† g − img(g) W†‖_max`.
pub fn conjugation_residual(w: &DenseUnitary, rule: &CliffordRule) -> Result<f64> {
    let len = w.len;
    let ring = Geometry::Ring(len);
    let dim = w.dim();
    let wdag = w.matrix.adjoint();
    let mut gens = Vec::new();
    for r in 0..len as i64 {
        gens.push(PauliTerm::x(ring, r));
        gens.push(PauliTerm::z(ring, r));
    }
    let residuals: Vec<f64> = gens
        .par_iter()
        .map(|g| -> Result<f64> {
            let (gq, gp, gph) = masks(g, len)?;
            let (iq, ip, iph) = masks(&rule.step(g)?, len)?;
            let mut buf = vec![Complex64::new(0.0, 0.0); dim];
            let mut worst = 0.0f64;
            let gc = i_pow(gph);
            for x in 0..dim {
                // column x of W† g is the signed column (x ^ gq) of W†
                let s = if (gp & x).count_ones() % 2 == 1 { -gc } else { gc };
                apply_masks(iq, ip, iph, wdag.column(x).as_slice(), &mut buf);
                let lhs = wdag.column(x ^ gq);
                for (a, b) in lhs.iter().zip(&buf) {
                    worst = worst.max((*a * s - *b).norm());
                }
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

/// Per-cluster branch offsets for the logarithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BranchChoice {
    /// All offsets zero, eigenphases in `(−π, π]`.
    Principal,
    Offsets(Vec<i64>),
}

impl BranchChoice {
    /// Offsets drawn uniformly from `{−2, …, 2}`.
    pub fn random(clusters: usize, rng: &mut impl Rng) -> Self {
        BranchChoice::Offsets((0..clusters).map(|_| rng.random_range(-2..=2)).collect())
    }
}

/// Eigendecomposition of `W = V diag(e^{−iφ}) V†` with clustered phases.
#[derive(Debug, Clone)]
pub struct SpectralLog {
    /// `φ_j` in `(−π, π]`, equal up to noise inside a cluster.
    pub phases: Vec<f64>,
    pub vectors: CMat,
    /// Clusters ordered by increasing phase.
    pub clusters: Vec<Vec<usize>>,
}

impl SpectralLog {
    pub fn new(w: &DenseUnitary) -> Self {
        let eig = linalg::unitary_eigen(&w.matrix);
        let mut phases: Vec<f64> = eig.phases.iter().map(|&a| linalg::principal_phase(-a)).collect();
        let mut clusters = linalg::cluster_phases(&phases, CLUSTER_TOL);
        for c in &clusters {
            // a cluster straddling ±π gets the principal value π throughout
            if c.iter().any(|&j| phases[j] > 0.0) && c.iter().any(|&j| phases[j] < 0.0) {
                let across = c.iter().any(|&j| phases[j] > PI / 2.0);
                if across {
                    for &j in c {
                        if phases[j] < 0.0 {
                            phases[j] += 2.0 * PI;
                        }
                    }
                }
            }
        }
        let mean = |c: &Vec<usize>| c.iter().map(|&j| phases[j]).sum::<f64>() / c.len() as f64;
        clusters.sort_by(|a, b| mean(a).total_cmp(&mean(b)));
        SpectralLog { phases, vectors: eig.vectors, clusters }
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Eigenphases after applying the branch offsets.
    pub fn branch_phases(&self, branch: &BranchChoice) -> Result<Vec<f64>> {
        let mut phi = self.phases.clone();
        if let BranchChoice::Offsets(m) = branch {
            if m.len() != self.clusters.len() {
                return Err(Error::BranchMismatch { given: m.len(), clusters: self.clusters.len() });
            }
            for (c, &mj) in self.clusters.iter().zip(m) {
                for &j in c {
                    phi[j] += 2.0 * PI * mj as f64;
                }
            }
        }
        Ok(phi)
    }

    /// `H = V diag(φ + 2πm) V†`.
    pub fn hamiltonian(&self, branch: &BranchChoice) -> Result<CMat> {
        let phi = self.branch_phases(branch)?;
        let scaled = CMat::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, c| {
            self.vectors[(r, c)] * phi[c]
        });
        let h = &scaled * self.vectors.adjoint();
        Ok((&h + h.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// `‖V diag(e^{−iφ}) V† − W‖_max`, the accuracy of the decomposition.
    pub fn reconstruction_residual(&self, w: &DenseUnitary) -> f64 {
        let scaled = CMat::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, c| {
            self.vectors[(r, c)] * Complex64::from_polar(1.0, -self.phases[c])
        });
        linalg::max_abs(&(&scaled * self.vectors.adjoint() - &w.matrix))
    }
}

/// `H` with `e^{−iH} = W` on the given branch.
pub fn log_hamiltonian(w: &DenseUnitary, branch: &BranchChoice) -> Result<CMat> {
    let log = SpectralLog::new(w);
    let h = log.hamiltonian(branch)?;
    let residual = log.reconstruction_residual(w);
    if residual > 1e-8 {
        return Err(Error::SynthesisFailed(residual));
    }
    Ok(h)
}

/// Real Pauli coefficients `h_u` indexed by phase-space vector.
///
/// Entry `a·2^L + b` holds the coefficient of the Hermitian string with
/// `p = a` and `q = a ⊕ b`.
#[derive(Debug, Clone)]
pub struct PauliSpectrum {
    pub len: usize,
    coeffs: Vec<f64>,
    /// Largest discarded imaginary part.
    pub max_imag: f64,
}

fn slot(len: usize, q: usize, p: usize) -> usize {
    (p << len) | (p ^ q)
}

impl PauliSpectrum {
    pub fn zeros(len: usize) -> Self {
        PauliSpectrum { len, coeffs: vec![0.0; 1 << (2 * len)], max_imag: 0.0 }
    }

    /// Coefficient of the Hermitian string with the same vector as `term`.
    pub fn get(&self, term: &PauliTerm) -> Result<f64> {
        let (q, p, _) = masks(term, self.len)?;
        Ok(self.coeffs[slot(self.len, q, p)])
    }

    pub fn set(&mut self, term: &PauliTerm, value: f64) -> Result<()> {
        let (q, p, _) = masks(term, self.len)?;
        let s = slot(self.len, q, p);
        self.coeffs[s] = value;
        Ok(())
    }

    fn term_at(&self, index: usize) -> PauliTerm {
        let n = self.len;
        let a = index >> n;
        let b = index & ((1 << n) - 1);
        let (q, p) = (a ^ b, a);
        let sites = (0..n).filter_map(|r| {
            let l = Local { q: q >> r & 1 == 1, p: p >> r & 1 == 1 };
            (!l.is_identity()).then_some((r as i64, l))
        });
        PauliTerm::from_sites(Geometry::Ring(n), 0, sites).unsigned()
    }

    /// `(Hermitian string, h_u)` for every `|h_u| > threshold`.
    pub fn significant(&self, threshold: f64) -> Vec<(PauliTerm, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, h)| h.abs() > threshold)
            .map(|(i, &h)| (self.term_at(i), h))
            .collect()
    }

    /// `Σ h_u σ_u`.
    pub fn reconstruct(&self) -> CMat {
        let n = self.len;
        let dim = 1usize << n;
        let mut data: Vec<Complex64> = self.coeffs.iter().map(|&h| Complex64::new(h, 0.0)).collect();
        for r in 0..n {
            butterfly(&mut data, n, r, |[i, x, y, z]| {
                [i + z, x - I * y, x + I * y, i - z]
            });
        }
        CMat::from_fn(dim, dim, |a, b| data[a * dim + b])
    }
}

/// One tensor-factor pass of the fast Pauli transform on row-major data.
/// The closure maps `[m00, m01, m10, m11]` of site `r` in place.
fn butterfly<F>(data: &mut [Complex64], n: usize, r: usize, f: F)
where
    F: Fn([Complex64; 4]) -> [Complex64; 4] + Sync,
{
    let dim = 1usize << n;
    let bit = 1usize << r;
    data.par_chunks_mut(2 * bit * dim).for_each(|chunk| {
        let (top, bottom) = chunk.split_at_mut(bit * dim);
        for (row0, row1) in top.chunks_mut(dim).zip(bottom.chunks_mut(dim)) {
            for b in 0..dim {
                if b & bit != 0 {
                    continue;
                }
                let m = [row0[b], row0[b | bit], row1[b], row1[b | bit]];
                let [a, c, d, e] = f(m);
                row0[b] = a;
                row0[b | bit] = c;
                row1[b] = d;
                row1[b | bit] = e;
            }
        }
    });
}

/// `h_u = 2^{−L} tr(σ_u H)` for all `4^L` strings in `O(L·4^L)`.
pub fn pauli_coefficients(h: &CMat, len: usize) -> Result<PauliSpectrum> {
    let dim = 1usize << len;
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: h.nrows() });
    }
    let mut data: Vec<Complex64> = (0..dim * dim).map(|k| h[(k / dim, k % dim)]).collect();
    for r in 0..len {
        butterfly(&mut data, len, r, |[a, b, c, d]| {
            [(a + d) * 0.5, (b + c) * 0.5, I * (b - c) * 0.5, (a - d) * 0.5]
        });
    }
    let max_imag = data.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let coeffs = data.into_iter().map(|c| c.re).collect();
    Ok(PauliSpectrum { len, coeffs, max_imag })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRow {
    pub orbit_id: usize,
    pub representative: String,
    pub length: usize,
    pub min_diameter: usize,
    pub max_diameter: usize,
    pub coeff_mean: f64,
    pub coeff_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrbitReport {
    pub orbits: Vec<OrbitRow>,
    /// `(d, max_{D(u)=d} |h_u|)` for `d = 0 … L−1`.
    pub decay_profile: Vec<(usize, f64)>,
}

impl OrbitReport {
    pub fn max_spread(&self) -> f64 {
        self.orbits.iter().map(|o| o.coeff_spread).fold(0.0, f64::max)
    }

    pub fn orbits_csv(&self) -> String {
        let mut s =
            String::from("orbit_id,representative,orbit_length,min_diameter,max_diameter,coeff_mean,coeff_spread\n");
        for o in &self.orbits {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:.12e},{:.6e}",
                o.orbit_id, o.representative, o.length, o.min_diameter, o.max_diameter, o.coeff_mean, o.coeff_spread
            );
        }
        s
    }

    pub fn decay_csv(&self) -> String {
        let mut s = String::from("diameter,max_abs_coeff\n");
        for (d, c) in &self.decay_profile {
            let _ = writeln!(s, "{d},{c:.12e}");
        }
        s
    }
}

/// Groups significant coefficients into closed orbits of the rule.
pub fn orbit_coefficient_report(
    spec: &PauliSpectrum,
    rule: &CliffordRule,
    len: usize,
) -> Result<OrbitReport> {
    if spec.len != len {
        return Err(Error::DimensionMismatch { expected: len, got: spec.len });
    }
    let mut significant = spec.significant(SIGNIFICANCE);
    significant.retain(|(t, _)| !t.is_identity());
    let mut seen: HashSet<PauliTerm> = HashSet::new();
    let mut orbits = Vec::new();
    let mut profile = vec![0.0f64; len];
    for (term, h) in &significant {
        let d = term.diameter()?;
        profile[d] = profile[d].max(h.abs());
        if seen.contains(term) {
            continue;
        }
        let orbit = rule.orbit(term, len)?;
        let mut mags = Vec::with_capacity(orbit.len());
        for m in &orbit.members {
            mags.push(spec.get(m)?.abs());
            seen.insert(m.clone());
        }
        let max = mags.iter().copied().fold(0.0, f64::max);
        let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
        orbits.push(OrbitRow {
            orbit_id: 0,
            representative: orbit.representative.label(),
            length: orbit.len(),
            min_diameter: orbit.min_diameter(),
            max_diameter: orbit.max_diameter(),
            coeff_mean: mags.iter().sum::<f64>() / mags.len() as f64,
            coeff_spread: max - min,
        });
    }
    orbits.sort_by(|a, b| {
        (a.min_diameter, &a.representative).cmp(&(b.min_diameter, &b.representative))
    });
    for (i, o) in orbits.iter_mut().enumerate() {
        o.orbit_id = i;
    }
    Ok(OrbitReport {
        orbits,
        decay_profile: profile.into_iter().enumerate().collect(),
    })
}

/// `‖AW − WA‖_max`.
pub fn commutant_check(a: &CMat, w: &DenseUnitary) -> Result<f64> {
    if a.nrows() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), got: a.nrows() });
    }
    Ok(linalg::max_abs(&(a * &w.matrix - &w.matrix * a)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_term(s: &str, len: usize) -> PauliTerm {
        PauliTerm::parse(s, Geometry::Ring(len)).unwrap()
    }

    #[test]
    fn identity_rule_gives_identity() {
        let w = synthesize_unitary(&CliffordRule::identity(), 2).unwrap();
        assert!(linalg::max_abs(&(&w.matrix - CMat::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn fractal_conjugation_examples() {
        let w = synthesize_unitary(&CliffordRule::fractal(), 4).unwrap();
        assert!(w.unitarity_residual() < 1e-12);
        let conj = |g: &PauliTerm| {
            let m = pauli_matrix(g, 4).unwrap();
            w.matrix.adjoint() * m * &w.matrix
        };
        let z0 = conj(&ring_term("@0:Z", 4));
        assert!(linalg::max_abs(&(z0 - pauli_matrix(&ring_term("@0:X", 4), 4).unwrap())) < 1e-10);
        // X_0 ↦ X_3 Y_0 X_1 through the wraparound
        let x0 = conj(&ring_term("@0:X", 4));
        let expect = pauli_matrix(&ring_term("@3:XYX", 4), 4).unwrap();
        assert!(linalg::max_abs(&(x0 - expect)) < 1e-10);
    }

    #[test]
    fn synthesis_checks_budget_and_size() {
        assert!(matches!(
            synthesize_unitary(&CliffordRule::fractal(), 13),
            Err(Error::DenseBudget { .. })
        ));
        assert!(matches!(
            synthesize_unitary(&CliffordRule::fractal(), 2),
            Err(Error::RingTooSmall { .. })
        ));
    }

    #[test]
    fn log_of_identity_and_z() {
        let w = synthesize_unitary(&CliffordRule::identity(), 2).unwrap();
        let h = log_hamiltonian(&w, &BranchChoice::Principal).unwrap();
        assert!(linalg::max_abs(&h) < 1e-12);

        let zw = DenseUnitary {
            len: 1,
            matrix: CMat::from_diagonal(&DVector::from_vec(vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ])),
        };
        let h = log_hamiltonian(&zw, &BranchChoice::Principal).unwrap();
        assert!((h[(0, 0)].re).abs() < 1e-12);
        assert!((h[(1, 1)].re - PI).abs() < 1e-12);
        let back = linalg::expm_complex(&(h * -I));
        assert!(linalg::max_abs(&(back - &zw.matrix)) < 1e-12);
    }

    #[test]
    fn fractal_log_round_trip() {
        let w = synthesize_unitary(&CliffordRule::fractal(), 4).unwrap();
        let log = SpectralLog::new(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let branches = [BranchChoice::Principal, BranchChoice::random(log.cluster_count(), &mut rng)];
        for b in &branches {
            let h = log.hamiltonian(b).unwrap();
            let back = linalg::expm_complex(&(&h * -I));
            assert!(linalg::max_abs(&(back - &w.matrix)) < 1e-8);
            assert!(linalg::max_abs(&(&h - h.adjoint())) < 1e-10);
            let conserved = w.matrix.adjoint() * &h * &w.matrix;
            assert!(linalg::max_abs(&(conserved - &h)) < 1e-8);
        }
        assert!(matches!(
            log.hamiltonian(&BranchChoice::Offsets(vec![0])),
            Err(Error::BranchMismatch { .. })
        ));
    }

    #[test]
    fn pauli_expansion_examples() {
        let h = pauli_matrix(&ring_term("@0:Z", 2), 2).unwrap();
        let spec = pauli_coefficients(&h, 2).unwrap();
        let sig = spec.significant(1e-12);
        assert_eq!(sig.len(), 1);
        assert_eq!(sig[0].0.label(), "@0:Z");
        assert!((sig[0].1 - 1.0).abs() < 1e-15);

        assert!(pauli_coefficients(&CMat::zeros(4, 4), 2).unwrap().significant(0.0).is_empty());

        let h = pauli_matrix(&ring_term("@0:XX", 2), 2).unwrap() * Complex64::new(0.5, 0.0)
            + pauli_matrix(&ring_term("@1:Z", 2), 2).unwrap() * Complex64::new(0.25, 0.0);
        let spec = pauli_coefficients(&h, 2).unwrap();
        let sig = spec.significant(1e-12);
        assert_eq!(sig.len(), 2);
        assert!((spec.get(&ring_term("@0:XX", 2)).unwrap() - 0.5).abs() < 1e-15);
        assert!((spec.get(&ring_term("@1:Z", 2)).unwrap() - 0.25).abs() < 1e-15);

        assert!(matches!(pauli_coefficients(&CMat::zeros(3, 3), 2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn y_coefficients_are_hermitian_convention() {
        let h = pauli_matrix(&ring_term("@0:YZX", 3), 3).unwrap();
        let spec = pauli_coefficients(&h, 3).unwrap();
        assert!((spec.get(&ring_term("@0:YZX", 3)).unwrap() - 1.0).abs() < 1e-15);
        let h = pauli_matrix(&ring_term("-@1:Y", 3), 3).unwrap();
        let spec = pauli_coefficients(&h, 3).unwrap();
        assert!((spec.get(&ring_term("@1:Y", 3)).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn fast_transform_matches_trace_formula() {
        let len = 3;
        let w = synthesize_unitary(&CliffordRule::fractal(), len).unwrap();
        let h = log_hamiltonian(&w, &BranchChoice::Principal).unwrap();
        let spec = pauli_coefficients(&h, len).unwrap();
        assert!(spec.max_imag < 1e-10);
        for idx in 0..(1 << (2 * len)) {
            let t = spec.term_at(idx);
            let m = pauli_matrix(&t, len).unwrap();
            let naive = (m.adjoint() * &h).trace() / (1 << len) as f64;
            assert!((naive.re - spec.get(&t).unwrap()).abs() < 1e-12);
            assert!(naive.im.abs() < 1e-12);
        }
        assert!(linalg::max_abs(&(spec.reconstruct() - &h)) < 1e-9);
    }

    #[test]
    fn identity_rule_report_is_empty() {
        let w = synthesize_unitary(&CliffordRule::identity(), 4).unwrap();
        let h = log_hamiltonian(&w, &BranchChoice::Principal).unwrap();
        let spec = pauli_coefficients(&h, 4).unwrap();
        let rep = orbit_coefficient_report(&spec, &CliffordRule::identity(), 4).unwrap();
        assert!(rep.orbits.is_empty());
        assert!(rep.decay_csv().starts_with("diameter,max_abs_coeff\n"));
    }

    #[test]
    fn commutant_examples() {
        let w = synthesize_unitary(&CliffordRule::fractal(), 4).unwrap();
        let h = log_hamiltonian(&w, &BranchChoice::Principal).unwrap();
        assert!(commutant_check(&h, &w).unwrap() < 1e-8);
        assert!(commutant_check(&CMat::identity(16, 16), &w).unwrap() < 1e-15);
        let z0 = pauli_matrix(&ring_term("@0:Z", 4), 4).unwrap();
        assert!(commutant_check(&z0, &w).unwrap() > 0.1);
    }
}
