//! Dense linear-algebra helpers shared by the oracle and the fermion engine.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

/// Largest entry magnitude.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_real(m: &RMat) -> f64 {
    m.iter().map(|z| z.abs()).fold(0.0, f64::max)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `‖U†U − I‖_max`.
pub fn unitarity_residual(u: &CMat) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMat::identity(n, n)))
}

pub fn orthogonality_residual(o: &RMat) -> f64 {
    let n = o.nrows();
    max_abs_real(&(o.transpose() * o - RMat::identity(n, n)))
}

/// Spectral data of a unitary: `U = V diag(e^{i phases}) V†`.
#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    /// Eigenphases `arg λ` in `(−π, π]`.
    pub phases: Vec<f64>,
    pub vectors: CMat,
}

impl UnitaryEigen {
    pub fn eigenvalue(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.phases[j])
    }
}

const COS_CLUSTER_TOL: f64 = 1e-6;

/// Eigendecomposition of a unitary (or any normal) matrix.
///
/// The Hermitian part `(U + U†)/2` is diagonalised first. Its eigenspaces are
/// invariant under `U`; inside each (near-)degenerate cluster the restriction
/// of `U` is split again by its anti-Hermitian part. All eigenvectors come
/// out orthonormal.
pub fn unitary_eigen(u: &CMat) -> UnitaryEigen {
    let n = u.nrows();
    let herm = (u + u.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut vectors = CMat::zeros(n, n);
    let mut col = 0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n
            && eig.eigenvalues[order[j]] - eig.eigenvalues[order[j - 1]] < COS_CLUSTER_TOL
        {
            j += 1;
        }
        let block = CMat::from_fn(n, j - i, |r, c| eig.eigenvectors[(r, order[i + c])]);
        if j - i == 1 {
            vectors.set_column(col, &block.column(0));
        } else {
            let restricted = block.adjoint() * u * &block;
            let anti = (&restricted - restricted.adjoint()) * Complex64::new(0.0, -0.5);
            let sub = SymmetricEigen::new(anti);
            let rotated = &block * &sub.eigenvectors;
            for c in 0..rotated.ncols() {
                vectors.set_column(col + c, &rotated.column(c));
            }
        }
        col += j - i;
        i = j;
    }
    let phases = (0..n)
        .map(|c| {
            let v = vectors.column(c);
            let lambda = (v.adjoint() * u * v)[(0, 0)];
            principal_phase(lambda.arg())
        })
        .collect();
    UnitaryEigen { phases, vectors }
}

/// Maps an angle into `(−π, π]`.
pub fn principal_phase(phi: f64) -> f64 {
    let mut x = phi.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Wrapped difference `a − b` in `(−π, π]`.
pub fn phase_diff(a: f64, b: f64) -> f64 {
    principal_phase(a - b)
}

/// Groups angles whose circular gaps are below `tol`. Clusters are returned
/// in increasing order of their first member's angle.
pub fn cluster_phases(phases: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let n = phases.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    let key = |i: usize| phases[i].rem_euclid(2.0 * PI);
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    let mut clusters: Vec<Vec<usize>> = vec![vec![order[0]]];
    for w in order.windows(2) {
        if key(w[1]) - key(w[0]) < tol {
            clusters.last_mut().unwrap().push(w[1]);
        } else {
            clusters.push(vec![w[1]]);
        }
    }
    if clusters.len() > 1 {
        let first = key(order[0]);
        let last = key(order[n - 1]);
        if first + 2.0 * PI - last < tol {
            let tail = clusters.pop().unwrap();
            let mut merged = tail;
            merged.extend(clusters.remove(0));
            clusters.insert(0, merged);
        }
    }
    clusters
}

/// Matrix exponential.
pub fn expm(m: &RMat) -> RMat {
    m.clone().exp()
}

pub fn expm_complex(m: &CMat) -> CMat {
    m.clone().exp()
}

/// Least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    LineFit { slope, intercept, r2, points: x.len() }
}

/// Fit window for a decaying profile `(x, m)` sorted by `x`.
///
/// Points at or below `floor` are skipped individually; the window closes at
/// the first pair of consecutive sub-floor points, where the noise floor has
/// been reached. Isolated exact zeros (for instance from a parity selection
/// rule) therefore do not truncate the window.
pub fn decay_window(profile: &[(f64, f64)], floor: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut below = 0;
    for &(x, m) in profile {
        if m > floor {
            out.push((x, m));
            below = 0;
        } else {
            below += 1;
            if below == 2 {
                break;
            }
        }
    }
    out
}

/// Gram–Schmidt on the columns of `m` (rank assumed full).
pub fn orthonormalize(m: &CMat) -> CMat {
    let mut q = m.clone();
    for c in 0..q.ncols() {
        for prev in 0..c {
            let proj = (q.column(prev).adjoint() * q.column(c))[(0, 0)];
            let p = q.column(prev).clone_owned() * proj;
            let mut col = q.column_mut(c);
            col -= p;
        }
        let nrm = q.column(c).norm();
        q.column_mut(c).unscale_mut(nrm);
    }
    q
}

/// Real logarithm of a real orthogonal matrix with determinant `+1`.
///
/// Eigenphases off the negative axis get their principal value. The `−1`
/// eigenspace is given a real orthonormal basis which is paired into
/// `π·J` rotation blocks; an odd multiplicity has no real logarithm.
pub fn real_log_orthogonal(o: &RMat) -> crate::Result<RMat> {
    let n = o.nrows();
    let eig = unitary_eigen(&to_complex(o));
    let mut z = CMat::zeros(n, n);
    let mut neg = CMat::zeros(n, n);
    let mut neg_count = 0usize;
    for j in 0..n {
        let lambda = eig.eigenvalue(j);
        let v = eig.vectors.column(j);
        let proj = v * v.adjoint();
        if (lambda + 1.0).norm() < 1e-8 {
            neg += proj;
            neg_count += 1;
        } else {
            z += proj * Complex64::new(0.0, eig.phases[j]);
        }
    }
    let imag = z.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if imag > 1e-8 {
        return Err(crate::Error::NotReal(imag));
    }
    let mut out = z.map(|c| c.re);
    if neg_count > 0 {
        if neg_count % 2 == 1 {
            return Err(crate::Error::NoRealLog(format!(
                "eigenvalue -1 has odd multiplicity {neg_count}"
            )));
        }
        let proj = SymmetricEigen::new(neg.map(|c| c.re));
        let basis: Vec<usize> = (0..n).filter(|&i| proj.eigenvalues[i] > 0.5).collect();
        if basis.len() != neg_count {
            return Err(crate::Error::NoRealLog("unstable -1 eigenspace".into()));
        }
        for pair in basis.chunks(2) {
            let a = proj.eigenvectors.column(pair[0]);
            let b = proj.eigenvectors.column(pair[1]);
            out += (b * a.transpose() - a * b.transpose()) * PI;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_exp(m: &RMat) -> RMat {
        let n = m.nrows();
        let mut term = RMat::identity(n, n);
        let mut acc = term.clone();
        for k in 1..60 {
            term = &term * m / k as f64;
            acc += &term;
        }
        acc
    }

    #[test]
    fn expm_matches_taylor() {
        let m = RMat::from_row_slice(3, 3, &[0.0, 0.7, -0.2, -0.7, 0.0, 1.1, 0.2, -1.1, 0.0]);
        let diff = expm(&m) - taylor_exp(&m);
        assert!(max_abs_real(&diff) < 1e-13);
        // antisymmetric generator exponentiates to an orthogonal matrix
        assert!(orthogonality_residual(&expm(&m)) < 1e-13);
    }

    #[test]
    fn eigen_of_degenerate_unitary() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        // diag(i, i, -1) in a rotated basis
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0., 1.), c(0., 1.), c(-1., 0.)]));
        let h = RMat::from_row_slice(3, 3, &[0.0, 0.3, 0.5, -0.3, 0.0, -0.4, -0.5, 0.4, 0.0]);
        let q = to_complex(&expm(&h));
        let u = &q * d * q.adjoint();
        let e = unitary_eigen(&u);
        assert!(unitarity_residual(&e.vectors) < 1e-12);
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            (0..3).map(|j| e.eigenvalue(j)),
        ));
        let rebuilt = &e.vectors * diag * e.vectors.adjoint();
        assert!(max_abs(&(rebuilt - &u)) < 1e-12);
        let clusters = cluster_phases(&e.phases, 1e-9);
        assert_eq!(clusters.len(), 2);
    }

    #[test]
    fn clusters_merge_across_branch_cut() {
        let cl = cluster_phases(&[PI, -PI + 1e-12, 0.5], 1e-9);
        assert_eq!(cl.len(), 2);
        assert!(cl.iter().any(|c| c.len() == 2));
    }

    #[test]
    fn real_log_handles_minus_one_pairs() {
        let h = RMat::from_row_slice(4, 4, &[
            0.0, 0.2, -0.1, 0.4, -0.2, 0.0, 0.3, 0.0, 0.1, -0.3, 0.0, 0.5, -0.4, 0.0, -0.5, 0.0,
        ]);
        let q = expm(&h);
        let d = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -1.0, 1.0, 1.0]));
        let o = &q * d * q.transpose();
        let z = real_log_orthogonal(&o).unwrap();
        assert!(max_abs_real(&(&z + z.transpose())) < 1e-10);
        assert!(max_abs_real(&(expm(&z) - &o)) < 1e-10);
        let odd = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0]));
        assert!(real_log_orthogonal(&odd).is_err());
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| -0.5 * v + 2.0).collect();
        let f = linear_fit(&x, &y);
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn window_skips_isolated_zeros() {
        let prof = [(1.0, 1e-1), (2.0, 0.0), (3.0, 1e-3), (4.0, 1e-13), (5.0, 1e-14), (6.0, 1e-5)];
        let w = decay_window(&prof, 1e-12);
        assert_eq!(w.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1.0, 3.0]);
    }

    #[test]
    fn principal_range() {
        assert_eq!(principal_phase(-PI), PI);
        assert!((principal_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
