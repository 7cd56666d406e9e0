//! Clifford QCA dynamics in phase space.
//!
//! A [`CliffordRule`] stores the conjugation images `W† X_0 W` and `W† Z_0 W`
//! as line terms with offsets relative to the acted site. Everything else
//! (one-step evolution, inversion, composition, orbits, glider search) is
//! derived from those two images by multiplicativity.
//!
//! Orbit and glider comparisons are done modulo phase. The exhaustive
//! searches run on [`PackedRing`], a bit-packed phase-space vector of at most
//! 64 sites.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{Geometry, Local, PauliTerm};

const LINE: Geometry = Geometry::Line;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliffordRule {
    image_x: PauliTerm,
    image_z: PauliTerm,
    radius: usize,
}

impl CliffordRule {
    /// Builds a rule from the images of `X_0` and `Z_0` (line terms).
    ///
    /// Checks that the images are Hermitian, anticommute on the same site and
    /// commute with the images at every other site within reach.
    pub fn new(image_x: PauliTerm, image_z: PauliTerm) -> Result<Self> {
        if image_x.geometry() != LINE || image_z.geometry() != LINE {
            return Err(Error::InvalidRule("images must live on the line".into()));
        }
        if image_x.is_identity() || image_z.is_identity() {
            return Err(Error::InvalidRule("identity image".into()));
        }
        for img in [&image_x, &image_z] {
            if img.hermitian_phase() % 2 != 0 {
                return Err(Error::InvalidRule(format!("image {img} is not Hermitian")));
            }
        }
        let radius = image_x
            .support()
            .into_iter()
            .chain(image_z.support())
            .map(|r| r.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        if !image_x.symplectic_product(&image_z)? {
            return Err(Error::InvalidRule("images of X and Z commute".into()));
        }
        for d in 1..=(2 * radius as i64) {
            let (xd, zd) = (image_x.translate(d), image_z.translate(d));
            for (a, b) in [
                (&image_x, &xd),
                (&image_x, &zd),
                (&image_z, &xd),
                (&image_z, &zd),
            ] {
                if a.symplectic_product(b)? {
                    return Err(Error::InvalidRule(format!(
                        "images at distance {d} anticommute"
                    )));
                }
            }
        }
        Ok(CliffordRule {
            image_x,
            image_z,
            radius,
        })
    }

    pub fn identity() -> Self {
        Self::new(PauliTerm::x(LINE, 0), PauliTerm::z(LINE, 0)).unwrap()
    }

    /// Translation by `k` sites: `X_r -> X_{r+k}`, `Z_r -> Z_{r+k}`.
    pub fn shift(k: i64) -> Self {
        Self::new(PauliTerm::x(LINE, k), PauliTerm::z(LINE, k)).unwrap()
    }

    /// The fractal rule `Z -> X`, `X -> X Y X`.
    pub fn fractal() -> Self {
        let xyx = PauliTerm::parse("@-1:XYX", LINE).unwrap();
        Self::new(xyx, PauliTerm::x(LINE, 0)).unwrap()
    }

    pub fn image_of_x(&self) -> &PauliTerm {
        &self.image_x
    }

    pub fn image_of_z(&self) -> &PauliTerm {
        &self.image_z
    }

    /// Derived image of the Hermitian `Y = i X Z`.
    pub fn image_of_y(&self) -> PauliTerm {
        self.step(&PauliTerm::y(LINE, 0)).unwrap()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// One conjugation step `W† a W`, phase tracked exactly.
    pub fn step(&self, a: &PauliTerm) -> Result<PauliTerm> {
        let geometry = a.geometry();
        if let Geometry::Ring(len) = geometry {
            if len <= 2 * self.radius {
                return Err(Error::RingTooSmall {
                    len,
                    radius: self.radius,
                });
            }
        }
        let img_x = self.image_x.to_geometry(geometry);
        let img_z = self.image_z.to_geometry(geometry);
        let mut out = PauliTerm::identity(geometry).with_phase(a.phase_exp());
        for (r, local) in a.sites() {
            if local.q {
                out = out.compose(&img_x.translate(r))?;
            }
            if local.p {
                out = out.compose(&img_z.translate(r))?;
            }
        }
        Ok(out)
    }

    /// `t` applications of [`step`](Self::step).
    pub fn step_n(&self, a: &PauliTerm, t: usize) -> Result<PauliTerm> {
        let mut cur = a.clone();
        for _ in 0..t {
            cur = self.step(&cur)?;
        }
        Ok(cur)
    }

    /// Rule whose step is `outer.step(inner.step(.))`.
    pub fn compose(outer: &CliffordRule, inner: &CliffordRule) -> Result<CliffordRule> {
        let ix = outer.step(&inner.image_x)?;
        let iz = outer.step(&inner.image_z)?;
        CliffordRule::new(ix, iz)
    }

    /// `n`-fold composition of the rule with itself (`n >= 1`).
    pub fn power(&self, n: usize) -> Result<CliffordRule> {
        let mut acc = self.clone();
        for _ in 1..n {
            acc = CliffordRule::compose(self, &acc)?;
        }
        Ok(acc)
    }

    /// Inverse rule, obtained by inverting the symplectic map on a ring large
    /// enough that the local preimages do not wrap, then fixing phases so
    /// that `step(inverse, step(rule, a)) == a` exactly.
    pub fn inverse(&self) -> Result<CliffordRule> {
        let len = 8 * self.radius.max(1) + 8;
        let ring = Geometry::Ring(len);
        let n = 2 * len;
        // column j = image of generator j; generator 2r = X_r, 2r + 1 = Z_r
        let mut cols = vec![vec![false; n]; n];
        for r in 0..len {
            for (g, local) in [(2 * r, Local::X), (2 * r + 1, Local::Z)] {
                let img = self.step(&PauliTerm::single(ring, r as i64, local))?;
                for (s, l) in img.sites() {
                    cols[g][2 * s as usize] = l.q;
                    cols[g][2 * s as usize + 1] = l.p;
                }
            }
        }
        let matrix: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| cols[j][i]).collect())
            .collect();
        let inv = gf2_inverse(&matrix).ok_or(Error::NotInvertible)?;
        let centre = (len / 2) as i64;
        let preimage = |g: usize| -> Result<PauliTerm> {
            let sites = (0..len).filter_map(|s| {
                let l = Local {
                    q: inv[2 * s][g],
                    p: inv[2 * s + 1][g],
                };
                (!l.is_identity()).then_some((s as i64 - centre, l))
            });
            let term = PauliTerm::from_sites(LINE, 0, sites).unsigned();
            if term
                .support()
                .iter()
                .any(|r| r.unsigned_abs() as usize > len / 4)
            {
                return Err(Error::InvalidRule("inverse is not local".into()));
            }
            Ok(term)
        };
        let mut images = Vec::with_capacity(2);
        for (g, target) in [
            (2 * centre as usize, PauliTerm::x(LINE, 0)),
            (2 * centre as usize + 1, PauliTerm::z(LINE, 0)),
        ] {
            let cand = preimage(g)?;
            let back = self.step(&cand)?;
            if !back.same_vector(&target) {
                return Err(Error::NotInvertible);
            }
            let fix = (4 + target.phase_exp() as i64 - back.phase_exp() as i64) % 4;
            images.push(cand.clone().with_phase(cand.phase_exp() + fix as u8));
        }
        let iz = images.pop().unwrap();
        let ix = images.pop().unwrap();
        CliffordRule::new(ix, iz)
    }

    /// Closed orbit of `seed` on `ring(len)`, compared modulo phase.
    pub fn orbit(&self, seed: &PauliTerm, len: usize) -> Result<Orbit> {
        if seed.is_identity() {
            return Err(Error::Invalid("orbit seed must not be the identity".into()));
        }
        let ring = Geometry::Ring(len);
        let start = seed.to_geometry(ring).unsigned();
        let mut members = vec![start.clone()];
        let mut cur = self.step(&start)?;
        while !cur.same_vector(&start) {
            members.push(cur.unsigned());
            cur = self.step(&cur)?;
        }
        Ok(Orbit::from_members(members))
    }

    /// Exhaustive glider search on the line.
    ///
    /// Candidates are all non-identity strings whose support starts at site 0
    /// and ends at site `l - 1` for `l <= max_support_len`, which covers every
    /// string up to translation. A pair `(v, k)` is reported when `W† v W`
    /// equals `v` translated by `k` modulo phase and `|k| <= max_shift`.
    pub fn find_gliders(
        &self,
        max_support_len: usize,
        max_shift: usize,
        budget: u128,
    ) -> Result<Vec<(PauliTerm, i64)>> {
        if max_support_len == 0 {
            return Err(Error::Invalid("max_support_len must be >= 1".into()));
        }
        let needed = glider_candidate_count(max_support_len);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        // a ring wide enough that nothing wraps during one step
        let width = max_support_len + 2 * self.radius + 2 * max_shift + 2;
        if width > 64 {
            return Err(Error::Invalid(format!(
                "search window of {width} sites exceeds 64"
            )));
        }
        let packed = PackedRule::new(self, width)?;
        let mut found = Vec::new();
        for l in 1..=max_support_len {
            let interior = if l >= 2 { 4u64.pow(l as u32 - 2) } else { 1 };
            let ends: u64 = if l >= 2 { 9 } else { 3 };
            let hits: Vec<(PackedRing, i64)> = (0..ends * interior)
                .into_par_iter()
                .filter_map(|idx| {
                    let v = glider_candidate(l, idx, width);
                    let w = packed.apply(v);
                    let k = w.first_site()? as i64 - v.first_site()? as i64;
                    let k = if k > (width / 2) as i64 { k - width as i64 } else { k };
                    (k.unsigned_abs() as usize <= max_shift && w == v.rotate(k))
                        .then_some((v, k))
                })
                .collect();
            found.extend(hits.into_iter().map(|(v, k)| (v.to_line_term(), k)));
        }
        Ok(found)
    }

    /// Support of `step^t(seed)` for `t = 0..=steps` on the line.
    pub fn spacetime_diagram(&self, seed: &PauliTerm, steps: usize) -> Result<Spacetime> {
        if seed.geometry() != LINE {
            return Err(Error::Invalid("spacetime diagrams use the line".into()));
        }
        let mut rows = Vec::with_capacity(steps + 1);
        let mut terms = Vec::with_capacity(steps + 1);
        let mut cur = seed.clone();
        for t in 0..=steps {
            rows.push(cur.support().into_iter().collect::<BTreeSet<i64>>());
            terms.push(cur.clone());
            if t < steps {
                cur = self.step(&cur)?;
            }
        }
        Ok(Spacetime { rows, terms })
    }
}

/// Shrinks a candidate glider by multiplying it with its translated image.
///
/// For a string `v` moving by `shift` this returns `v * T^{-shift}(W† v W)`
/// modulo phase. A rigid glider maps to the identity; for a glider whose core
/// changes in time the product drops both frontier sites and is at least two
/// sites shorter, which yields a minimal counterexample after iteration.
pub fn reduce_glider(rule: &CliffordRule, v: &PauliTerm, shift: i64) -> Result<PauliTerm> {
    let moved = rule.step(v)?.translate(-shift);
    Ok(v.compose(&moved)?.unsigned())
}

fn glider_candidate_count(max_len: usize) -> u128 {
    (1..=max_len)
        .map(|l| if l == 1 { 3u128 } else { 9 * 4u128.pow(l as u32 - 2) })
        .sum()
}

fn local_from_code(code: u64) -> (bool, bool) {
    match code {
        0 => (false, false),
        1 => (true, false),
        2 => (true, true),
        _ => (false, true),
    }
}

/// Candidate `idx` of support length `l`, centred in a window of `width`
/// sites so translations stay clear of the wrap.
fn glider_candidate(l: usize, idx: u64, width: usize) -> PackedRing {
    glider_candidate_at(l, idx, width, width / 2 - l / 2)
}

/// A closed orbit under the rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub representative: PauliTerm,
    pub members: Vec<PauliTerm>,
}

impl Orbit {
    fn from_members(members: Vec<PauliTerm>) -> Self {
        let representative = members
            .iter()
            .min_by(|a, b| {
                (a.diameter().unwrap(), a.label()).cmp(&(b.diameter().unwrap(), b.label()))
            })
            .cloned()
            .unwrap();
        Orbit {
            representative,
            members,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn min_diameter(&self) -> usize {
        self.representative.diameter().unwrap()
    }

    pub fn max_diameter(&self) -> usize {
        self.members
            .iter()
            .map(|m| m.diameter().unwrap())
            .max()
            .unwrap()
    }

    /// `{representative, length, max_diameter}` record.
    pub fn to_record(&self) -> String {
        format!(
            "{{\"representative\": \"{}\", \"length\": {}, \"max_diameter\": {}}}",
            self.representative.label(),
            self.len(),
            self.max_diameter()
        )
    }
}

/// Supports of successive steps on the line.
#[derive(Debug, Clone)]
pub struct Spacetime {
    pub rows: Vec<BTreeSet<i64>>,
    pub terms: Vec<PauliTerm>,
}

impl Spacetime {
    /// Leftmost and rightmost occupied columns over all rows.
    pub fn extent(&self) -> (i64, i64) {
        let lo = self.rows.iter().filter_map(|r| r.first()).min().copied();
        let hi = self.rows.iter().filter_map(|r| r.last()).max().copied();
        (lo.unwrap_or(0), hi.unwrap_or(0))
    }

    /// Plain-text PBM (`P1`); column 0 is the leftmost occupied site.
    pub fn to_pbm(&self) -> String {
        let (lo, hi) = self.extent();
        let width = (hi - lo + 1) as usize;
        let mut s = format!("P1\n{} {}\n", width, self.rows.len());
        for row in &self.rows {
            let line: Vec<&str> = (lo..=hi)
                .map(|c| if row.contains(&c) { "1" } else { "0" })
                .collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }
}

/// Bit-packed phase-space vector on a ring of at most 64 sites. Phases are
/// not tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PackedRing {
    pub q: u64,
    pub p: u64,
    pub len: usize,
}

impl PackedRing {
    pub fn zero(len: usize) -> Self {
        assert!(len <= 64 && len > 0);
        PackedRing { q: 0, p: 0, len }
    }

    fn mask(&self) -> u64 {
        if self.len == 64 {
            u64::MAX
        } else {
            (1u64 << self.len) - 1
        }
    }

    pub fn set(&mut self, site: usize, (q, p): (bool, bool)) {
        let bit = 1u64 << site;
        self.q = if q { self.q | bit } else { self.q & !bit };
        self.p = if p { self.p | bit } else { self.p & !bit };
    }

    pub fn from_term(term: &PauliTerm) -> Self {
        let len = match term.geometry() {
            Geometry::Ring(l) => l,
            Geometry::Line => panic!("PackedRing::from_term needs a ring term"),
        };
        let mut v = PackedRing::zero(len);
        for (r, l) in term.sites() {
            v.set(r as usize, (l.q, l.p));
        }
        v
    }

    /// Hermitian Pauli on `ring(len)` with this vector.
    pub fn to_term(&self) -> PauliTerm {
        let sites = (0..self.len).filter_map(|r| {
            let l = Local {
                q: self.q >> r & 1 == 1,
                p: self.p >> r & 1 == 1,
            };
            (!l.is_identity()).then_some((r as i64, l))
        });
        PauliTerm::from_sites(Geometry::Ring(self.len), 0, sites).unsigned()
    }

    fn to_line_term(self) -> PauliTerm {
        let first = self.first_site().unwrap_or(0) as i64;
        let sites = (0..self.len).filter_map(|r| {
            let l = Local {
                q: self.q >> r & 1 == 1,
                p: self.p >> r & 1 == 1,
            };
            (!l.is_identity()).then_some((r as i64 - first, l))
        });
        PauliTerm::from_sites(LINE, 0, sites).unsigned()
    }

    pub fn support_bits(&self) -> u64 {
        self.q | self.p
    }

    pub fn is_identity(&self) -> bool {
        self.support_bits() == 0
    }

    pub fn first_site(&self) -> Option<u32> {
        let s = self.support_bits();
        (s != 0).then(|| s.trailing_zeros())
    }

    fn rotate_bits(&self, x: u64, k: i64) -> u64 {
        let len = self.len as i64;
        let k = k.rem_euclid(len) as u32;
        if k == 0 {
            return x;
        }
        ((x << k) | (x >> (len as u32 - k))) & self.mask()
    }

    /// Translation by `k` sites.
    pub fn rotate(&self, k: i64) -> Self {
        PackedRing {
            q: self.rotate_bits(self.q, k),
            p: self.rotate_bits(self.p, k),
            len: self.len,
        }
    }

    /// Circular diameter; `None` for the identity.
    pub fn diameter(&self) -> Option<usize> {
        let s = self.support_bits();
        if s == 0 {
            return None;
        }
        let len = self.len as u32;
        let first = s.trailing_zeros();
        let last = 63 - s.leading_zeros();
        let mut best_gap = first + len - last;
        let mut prev = first;
        let mut rest = s & !(1u64 << first);
        while rest != 0 {
            let next = rest.trailing_zeros();
            best_gap = best_gap.max(next - prev);
            prev = next;
            rest &= rest - 1;
        }
        Some((len - best_gap) as usize)
    }
}

/// Phase-space action of a rule on `ring(len)`, as XOR of rotated words.
#[derive(Debug, Clone)]
pub struct PackedRule {
    len: usize,
    // (offset, source is q, target q bit, target p bit)
    terms: Vec<(i64, bool, bool, bool)>,
}

impl PackedRule {
    pub fn new(rule: &CliffordRule, len: usize) -> Result<Self> {
        if len <= 2 * rule.radius || len > 64 {
            return Err(Error::RingTooSmall {
                len,
                radius: rule.radius,
            });
        }
        let mut terms = Vec::new();
        for (src_q, img) in [(true, &rule.image_x), (false, &rule.image_z)] {
            for (o, l) in img.sites() {
                terms.push((o, src_q, l.q, l.p));
            }
        }
        Ok(PackedRule { len, terms })
    }

    pub fn apply(&self, v: PackedRing) -> PackedRing {
        debug_assert_eq!(v.len, self.len);
        let mut out = PackedRing::zero(self.len);
        for &(o, src_q, tq, tp) in &self.terms {
            let src = if src_q { v.q } else { v.p };
            let moved = v.rotate_bits(src, o);
            if tq {
                out.q ^= moved;
            }
            if tp {
                out.p ^= moved;
            }
        }
        out
    }

    /// Orbit length of `v` (modulo phase).
    pub fn orbit_len(&self, v: PackedRing) -> usize {
        let mut cur = self.apply(v);
        let mut n = 1;
        while cur != v {
            cur = self.apply(cur);
            n += 1;
        }
        n
    }
}

/// Result of the support-growth check on a ring.
#[derive(Debug, Clone)]
pub struct GrowthReport {
    pub len: usize,
    pub checked: u64,
    /// Checked strings whose whole orbit keeps the same diameter.
    pub violations: Vec<PauliTerm>,
}

/// Checks, for every string on `ring(len)` supported on `l < len - 2` sites
/// (diameter `d <= len - 4`, up to translation), that its orbit contains a
/// member of a different diameter.
/// An orbit whose members all share the diameter of its representative is a
/// violation.
pub fn growth_witness(rule: &CliffordRule, len: usize) -> Result<GrowthReport> {
    growth_witness_upto(rule, len, len.saturating_sub(4))
}

/// [`growth_witness`] over diameters `0..=max_d`.
pub fn growth_witness_upto(rule: &CliffordRule, len: usize, max_d: usize) -> Result<GrowthReport> {
    let packed = PackedRule::new(rule, len)?;
    let mut checked = 0u64;
    let mut violations = Vec::new();
    for d in 0..=max_d {
        let l = d + 1;
        let count = if l == 1 { 3 } else { 9 * 4u64.pow(l as u32 - 2) };
        let bad: Vec<PackedRing> = (0..count)
            .into_par_iter()
            .filter_map(|idx| {
                let v = glider_candidate_at(l, idx, len, 0);
                let dv = v.diameter().unwrap();
                let mut cur = packed.apply(v);
                while cur != v {
                    if cur.diameter() != Some(dv) {
                        return None;
                    }
                    cur = packed.apply(cur);
                }
                Some(v)
            })
            .collect();
        checked += count;
        violations.extend(bad.iter().map(|v| v.to_term()));
    }
    Ok(GrowthReport {
        len,
        checked,
        violations,
    })
}

fn glider_candidate_at(l: usize, idx: u64, len: usize, base: usize) -> PackedRing {
    let mut v = PackedRing::zero(len);
    if l == 1 {
        v.set(base, local_from_code(idx + 1));
        return v;
    }
    let ends = idx % 9;
    let mut interior = idx / 9;
    v.set(base, local_from_code(ends % 3 + 1));
    v.set(base + l - 1, local_from_code(ends / 3 + 1));
    for s in 1..l - 1 {
        v.set(base + s, local_from_code(interior % 4));
        interior /= 4;
    }
    v
}

/// Inverse of a square GF(2) matrix by Gauss-Jordan elimination.
fn gf2_inverse(m: &[Vec<bool>]) -> Option<Vec<Vec<bool>>> {
    let n = m.len();
    let mut a: Vec<Vec<bool>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| i == j));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col])?;
        a.swap(col, pivot);
        let prow = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && row[col] {
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x ^= *y;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}
