//! Translation-invariant quasi-free fermionic QCAs at the Majorana level.
//!
//! A model is a set of real `2n × 2n` coins `A_q`, `|q| ≤ R`. On a ring of `L`
//! sites the single-particle operator is block circulant with block
//! `(r, r')` equal to `A_{r−r'}`, and the symbol is `M_k = Σ_q A_q e^{−iqk}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};

pub const COIN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CoinSet {
    n: usize,
    radius: usize,
    coins: BTreeMap<i64, RMat>,
}

#[derive(Serialize, Deserialize)]
struct CoinFile {
    n: usize,
    radius: usize,
    coins: Vec<CoinEntry>,
}

#[derive(Serialize, Deserialize)]
struct CoinEntry {
    q: i64,
    rows: Vec<Vec<f64>>,
}

impl CoinSet {
    /// Zero coins are dropped. Coins outside `[−R, R]` are a causality error.
    pub fn new(n: usize, radius: usize, coins: impl IntoIterator<Item = (i64, RMat)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::CoinParse("n must be positive".into()));
        }
        let dim = 2 * n;
        let mut map = BTreeMap::new();
        for (q, a) in coins {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: a.nrows().max(a.ncols()) });
            }
            let size = linalg::max_abs_real(&a);
            if size == 0.0 {
                continue;
            }
            if q.unsigned_abs() as usize > radius {
                return Err(Error::InvalidCoins { constraint: "causality", m: q, residual: size });
            }
            let entry = map.entry(q).or_insert_with(|| RMat::zeros(dim, dim));
            *entry += a;
        }
        Ok(CoinSet { n, radius, coins: map })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Majorana components per site.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `A_q`, zero outside the stored range.
    pub fn coin(&self, q: i64) -> RMat {
        self.coins
            .get(&q)
            .cloned()
            .unwrap_or_else(|| RMat::zeros(self.dim(), self.dim()))
    }

    pub fn coins(&self) -> impl Iterator<Item = (i64, &RMat)> {
        self.coins.iter().map(|(&q, a)| (q, a))
    }

    /// Block convolution: the coins of `O_outer · O_inner`.
    pub fn compose(outer: &CoinSet, inner: &CoinSet) -> Result<CoinSet> {
        if outer.n != inner.n {
            return Err(Error::DimensionMismatch { expected: outer.dim(), got: inner.dim() });
        }
        let mut out: BTreeMap<i64, RMat> = BTreeMap::new();
        for (q1, a) in outer.coins() {
            for (q2, b) in inner.coins() {
                let e = out.entry(q1 + q2).or_insert_with(|| RMat::zeros(outer.dim(), outer.dim()));
                *e += a * b;
            }
        }
        CoinSet::new(outer.n, outer.radius + inner.radius, out)
    }

    pub fn to_toml(&self) -> String {
        let file = CoinFile {
            n: self.n,
            radius: self.radius,
            coins: self
                .coins()
                .map(|(q, a)| CoinEntry {
                    q,
                    rows: (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect(),
                })
                .collect(),
        };
        toml::to_string(&file).expect("coin sets always serialise")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: CoinFile = toml::from_str(text).map_err(|e| Error::CoinParse(e.to_string()))?;
        let dim = 2 * file.n;
        let mut coins = Vec::new();
        for entry in file.coins {
            if entry.rows.len() != dim || entry.rows.iter().any(|r| r.len() != dim) {
                return Err(Error::CoinParse(format!("coin q = {} is not {dim}x{dim}", entry.q)));
            }
            let flat: Vec<f64> = entry.rows.into_iter().flatten().collect();
            coins.push((entry.q, RMat::from_row_slice(dim, dim, &flat)));
        }
        CoinSet::new(file.n, file.radius, coins)
    }
}

/// Largest violation per constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// `(m, ‖Σ_q A_q A_{q+m}^T − δ_{m0} I‖_max)` for `m ∈ [−2R, 2R]`.
    pub orthogonality: Vec<(i64, f64)>,
    /// Non-finite entries count as reality violations.
    pub reality: f64,
    /// Largest coin entry outside `[−R, R]`.
    pub causality: f64,
}

impl ValidationReport {
    pub fn max_orthogonality(&self) -> f64 {
        self.orthogonality.iter().map(|x| x.1).fold(0.0, f64::max)
    }
}

pub fn validation_report(coins: &CoinSet) -> ValidationReport {
    let r = coins.radius as i64;
    let dim = coins.dim();
    let orthogonality = (-2 * r..=2 * r)
        .map(|m| {
            let mut acc = RMat::zeros(dim, dim);
            for (q, a) in coins.coins() {
                if let Some(b) = coins.coins.get(&(q + m)) {
                    acc += a * b.transpose();
                }
            }
            if m == 0 {
                acc -= RMat::identity(dim, dim);
            }
            (m, linalg::max_abs_real(&acc))
        })
        .collect();
    let reality = if coins.coins.values().all(|a| a.iter().all(|x| x.is_finite())) {
        0.0
    } else {
        f64::INFINITY
    };
    let causality = coins
        .coins()
        .filter(|(q, _)| q.unsigned_abs() as usize > coins.radius)
        .map(|(_, a)| linalg::max_abs_real(a))
        .fold(0.0, f64::max);
    ValidationReport { orthogonality, reality, causality }
}

/// Rejects the coin set at the worst violated constraint.
pub fn validate(coins: &CoinSet) -> Result<ValidationReport> {
    let rep = validation_report(coins);
    if rep.reality > 0.0 {
        return Err(Error::InvalidCoins { constraint: "reality", m: 0, residual: rep.reality });
    }
    if rep.causality > 0.0 {
        return Err(Error::InvalidCoins { constraint: "causality", m: 0, residual: rep.causality });
    }
    if let Some(&(m, residual)) = rep
        .orthogonality
        .iter()
        .filter(|x| x.1 > COIN_TOL)
        .max_by(|a, b| a.1.total_cmp(&b.1))
    {
        return Err(Error::InvalidCoins { constraint: "orthogonality", m, residual });
    }
    Ok(rep)
}

/// `M_k = Σ_q A_q e^{−iqk}`.
pub fn symbol_at(coins: &CoinSet, k: f64) -> CMat {
    let dim = coins.dim();
    let mut m = CMat::zeros(dim, dim);
    for (q, a) in coins.coins() {
        let phase = Complex64::from_polar(1.0, -(q as f64) * k);
        m += linalg::to_complex(a) * phase;
    }
    m
}

#[derive(Debug, Clone)]
pub struct RingOperator {
    pub len: usize,
    pub n: usize,
    pub matrix: RMat,
}

impl RingOperator {
    pub fn orthogonality_residual(&self) -> f64 {
        linalg::orthogonality_residual(&self.matrix)
    }

    /// Block `(r, r')`.
    pub fn block(&self, r: usize, rp: usize) -> RMat {
        let d = 2 * self.n;
        self.matrix.view((r * d, rp * d), (d, d)).into_owned()
    }
}

/// Block circulant `O` with `O_{(r,l),(r',l')} = (A_{r−r'})_{l l'}` on `ring(L)`.
pub fn build_ring_operator(coins: &CoinSet, len: usize) -> Result<RingOperator> {
    if len <= 2 * coins.radius {
        return Err(Error::RingTooSmall { len, radius: coins.radius });
    }
    let d = coins.dim();
    let mut o = RMat::zeros(d * len, d * len);
    for r in 0..len {
        for (q, a) in coins.coins() {
            let rp = (r as i64 - q).rem_euclid(len as i64) as usize;
            let mut view = o.view_mut((r * d, rp * d), (d, d));
            view += a;
        }
    }
    Ok(RingOperator { len, n: coins.n, matrix: o })
}

/// Sign of `det O` via LU.
pub fn parity_determinant(op: &RingOperator) -> Result<i32> {
    let det = op.matrix.clone().lu().determinant();
    if (det.abs() - 1.0).abs() > 1e-8 {
        return Err(Error::NotOrthogonal(det.abs()));
    }
    Ok(if det > 0.0 { 1 } else { -1 })
}

/// Built-in models.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Identity,
    /// `A_1 = I`, one site per step to the right.
    Shift,
    /// `M_k = R(θ) diag(e^{−ik}, e^{ik})`.
    Dirac(f64),
    /// Alternating on-site and bond `SO(4)` layers, `n = 2`.
    RandomBrickwork { seed: u64, depth: usize },
    /// Shift by half a site on `n = 2`: `M_k = [[0, e^{−ik}], [1, 0]] ⊗ I₂`.
    HalfShift,
    /// `A_0 = diag(1, −1)`, parity odd on odd rings.
    Reflection,
}

impl Model {
    pub fn coins(&self) -> CoinSet {
        let m = |d: usize, v: &[f64]| RMat::from_row_slice(d, d, v);
        match self {
            Model::Identity => CoinSet::new(1, 0, [(0, RMat::identity(2, 2))]).unwrap(),
            Model::Shift => CoinSet::new(1, 1, [(1, RMat::identity(2, 2))]).unwrap(),
            Model::Dirac(theta) => {
                let (s, c) = theta.sin_cos();
                let rot = m(2, &[c, -s, s, c]);
                let up = &rot * m(2, &[1.0, 0.0, 0.0, 0.0]);
                let down = &rot * m(2, &[0.0, 0.0, 0.0, 1.0]);
                CoinSet::new(1, 1, [(1, up), (-1, down)]).unwrap()
            }
            Model::RandomBrickwork { seed, depth } => random_brickwork(*seed, *depth),
            Model::HalfShift => {
                let mut a0 = RMat::zeros(4, 4);
                a0.view_mut((2, 0), (2, 2)).fill_with_identity();
                let mut a1 = RMat::zeros(4, 4);
                a1.view_mut((0, 2), (2, 2)).fill_with_identity();
                CoinSet::new(2, 1, [(0, a0), (1, a1)]).unwrap()
            }
            Model::Reflection => CoinSet::new(1, 0, [(0, m(2, &[1.0, 0.0, 0.0, -1.0]))]).unwrap(),
        }
    }

    /// Models covered by the acceptance suite. All preserve parity.
    pub fn zoo() -> Vec<Model> {
        vec![
            Model::Identity,
            Model::Shift,
            Model::Dirac(0.0),
            Model::Dirac(PI / 8.0),
            Model::Dirac(PI / 4.0),
            Model::RandomBrickwork { seed: 1, depth: 2 },
            Model::HalfShift,
        ]
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Identity => write!(f, "identity"),
            Model::Shift => write!(f, "shift"),
            Model::Dirac(t) => write!(f, "dirac({t})"),
            Model::RandomBrickwork { seed, depth } => write!(f, "random_brickwork({seed},{depth})"),
            Model::HalfShift => write!(f, "half_shift"),
            Model::Reflection => write!(f, "reflection"),
        }
    }
}

/// Parses numbers like `0.3`, `pi`, `pi/4`, `3pi/8`, `3*pi/8`.
fn parse_angle(s: &str) -> Option<f64> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let value = if let Some(prefix) = num.strip_suffix("pi") {
        let prefix = prefix.trim().trim_end_matches('*').trim();
        let factor = match prefix {
            "" => 1.0,
            "-" => -1.0,
            p => p.parse::<f64>().ok()?,
        };
        factor * PI
    } else {
        num.parse::<f64>().ok()?
    };
    Some(value / den)
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownModel(s.to_string());
        let s = s.trim();
        let (name, args) = match s.split_once('(') {
            Some((name, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(unknown)?;
                (name.trim(), inner.split(',').map(str::trim).collect::<Vec<_>>())
            }
            None => (s, Vec::new()),
        };
        match (name, args.as_slice()) {
            ("identity", []) => Ok(Model::Identity),
            ("shift", []) => Ok(Model::Shift),
            ("half_shift", []) => Ok(Model::HalfShift),
            ("reflection", []) => Ok(Model::Reflection),
            ("dirac", [t]) => parse_angle(t).map(Model::Dirac).ok_or_else(unknown),
            ("random_brickwork", [seed, depth]) => Ok(Model::RandomBrickwork {
                seed: seed.parse().map_err(|_| unknown())?,
                depth: depth.parse().map_err(|_| unknown())?,
            }),
            _ => Err(unknown()),
        }
    }
}

pub fn builtin_model(name: &str) -> Result<CoinSet> {
    Ok(name.parse::<Model>()?.coins())
}

/// Haar-ish `SO(4)` element from the QR factorisation of a Gaussian matrix.
fn random_so4(rng: &mut ChaCha8Rng) -> RMat {
    let g = DMatrix::from_fn(4, 4, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..4 {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// `depth` layers, alternating an on-site rotation of the four Majoranas of
/// every site and a bond rotation of Majoranas `2, 3` of site `r` with `0, 1`
/// of site `r + 1`. The same rotation is used on every site of a layer.
fn random_brickwork(seed: u64, depth: usize) -> CoinSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = CoinSet::new(2, 0, [(0, RMat::identity(4, 4))]).unwrap();
    for layer in 0..depth {
        let v = random_so4(&mut rng);
        let step = if layer % 2 == 0 {
            CoinSet::new(2, 0, [(0, v)]).unwrap()
        } else {
            let mut a0 = RMat::zeros(4, 4);
            let mut a1 = RMat::zeros(4, 4);
            let mut am1 = RMat::zeros(4, 4);
            a0.view_mut((0, 0), (2, 2)).copy_from(&v.view((2, 2), (2, 2)));
            a0.view_mut((2, 2), (2, 2)).copy_from(&v.view((0, 0), (2, 2)));
            a1.view_mut((0, 2), (2, 2)).copy_from(&v.view((2, 0), (2, 2)));
            am1.view_mut((2, 0), (2, 2)).copy_from(&v.view((0, 2), (2, 2)));
            CoinSet::new(2, 1, [(0, a0), (1, a1), (-1, am1)]).unwrap()
        };
        total = CoinSet::compose(&step, &total).unwrap();
    }
    total
}
