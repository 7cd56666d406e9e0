//! Pauli strings in the binary symplectic phase space.
//!
//! A [`PauliTerm`] stores `i^phase_exp * prod_r X_r^{q_r} Z_r^{p_r}`, with the
//! X factor placed before the Z factor on every site. All phase bookkeeping
//! follows from that ordering. Sites with `(q, p) = (0, 0)` are never stored.
//!
//! The text form is `[sign]@offset:STRING`, e.g. `@3:ZYYZ` or `-@-1:XYX`,
//! where the string letters are the Hermitian Paulis `I, X, Y, Z` and the
//! optional sign is one of `+`, `-`, `i`, `-i`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Lattice geometry a term lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Geometry {
    /// Periodic chain of `L` sites labelled `0..L`.
    Ring(usize),
    /// Infinite line, any integer site.
    Line,
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Ring(l) => write!(f, "ring({l})"),
            Geometry::Line => write!(f, "line"),
        }
    }
}

/// Local phase-space pair of a single site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Local {
    pub q: bool,
    pub p: bool,
}

impl Local {
    pub const X: Local = Local { q: true, p: false };
    pub const Z: Local = Local { q: false, p: true };
    /// The `XZ` product, i.e. `-i Y`.
    pub const XZ: Local = Local { q: true, p: true };

    pub fn is_identity(self) -> bool {
        !self.q && !self.p
    }

    fn letter(self) -> char {
        match (self.q, self.p) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    fn from_letter(c: char) -> Option<(Local, u8)> {
        match c {
            'I' => Some((Local { q: false, p: false }, 0)),
            'X' => Some((Local::X, 0)),
            // Y = i X Z
            'Y' => Some((Local::XZ, 1)),
            'Z' => Some((Local::Z, 0)),
            _ => None,
        }
    }
}

/// Circular (or linear) interval `[r1, r2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub r1: i64,
    pub r2: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliTerm {
    sites: BTreeMap<i64, Local>,
    phase_exp: u8,
    geometry: Geometry,
}

impl PauliTerm {
    pub fn identity(geometry: Geometry) -> Self {
        PauliTerm {
            sites: BTreeMap::new(),
            phase_exp: 0,
            geometry,
        }
    }

    /// Builds a term from raw `(site, local)` pairs, normalising site indices
    /// on rings. Repeated sites are multiplied together in the given order.
    pub fn from_sites<I>(geometry: Geometry, phase_exp: u8, sites: I) -> Self
    where
        I: IntoIterator<Item = (i64, Local)>,
    {
        let mut term = PauliTerm::identity(geometry);
        term.phase_exp = phase_exp % 4;
        for (r, local) in sites {
            if local.is_identity() {
                continue;
            }
            let single = PauliTerm::single(geometry, r, local);
            term = term.mul_unchecked(&single);
        }
        term
    }

    /// Single-site `X^q Z^p` (no phase) at site `r`.
    pub fn single(geometry: Geometry, r: i64, local: Local) -> Self {
        let mut sites = BTreeMap::new();
        if !local.is_identity() {
            sites.insert(normalize(geometry, r), local);
        }
        PauliTerm {
            sites,
            phase_exp: 0,
            geometry,
        }
    }

    pub fn x(geometry: Geometry, r: i64) -> Self {
        Self::single(geometry, r, Local::X)
    }

    pub fn z(geometry: Geometry, r: i64) -> Self {
        Self::single(geometry, r, Local::Z)
    }

    /// Hermitian `Y = i X Z` at site `r`.
    pub fn y(geometry: Geometry, r: i64) -> Self {
        let mut t = Self::single(geometry, r, Local::XZ);
        t.phase_exp = 1;
        t
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase_exp
    }

    pub fn with_phase(mut self, phase_exp: u8) -> Self {
        self.phase_exp = phase_exp % 4;
        self
    }

    pub fn sites(&self) -> impl Iterator<Item = (i64, Local)> + '_ {
        self.sites.iter().map(|(&r, &l)| (r, l))
    }

    pub fn get(&self, r: i64) -> Local {
        self.sites
            .get(&normalize(self.geometry, r))
            .copied()
            .unwrap_or(Local { q: false, p: false })
    }

    pub fn is_identity(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.sites.len()
    }

    pub fn support(&self) -> Vec<i64> {
        self.sites.keys().copied().collect()
    }

    /// Number of `Y` letters, i.e. sites with `q = p = 1`.
    pub fn y_count(&self) -> usize {
        self.sites.values().filter(|l| l.q && l.p).count()
    }

    /// Phase exponent of this term relative to the Hermitian Pauli with the
    /// same phase-space vector (the sign shown in the text form).
    pub fn hermitian_phase(&self) -> u8 {
        ((self.phase_exp as i64 - self.y_count() as i64).rem_euclid(4)) as u8
    }

    /// Same phase-space vector, phase reset so the term is the Hermitian Pauli.
    pub fn unsigned(&self) -> Self {
        let mut t = self.clone();
        t.phase_exp = (self.y_count() % 4) as u8;
        t
    }

    /// Equality of phase-space vectors (phases ignored).
    pub fn same_vector(&self, other: &PauliTerm) -> bool {
        self.geometry == other.geometry && self.sites == other.sites
    }

    /// Product `self * other` with exact phase.
    pub fn compose(&self, other: &PauliTerm) -> Result<PauliTerm> {
        if self.geometry != other.geometry {
            return Err(Error::GeometryMismatch(
                self.geometry.to_string(),
                other.geometry.to_string(),
            ));
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &PauliTerm) -> PauliTerm {
        let mut sites = self.sites.clone();
        let mut phase = self.phase_exp as u32 + other.phase_exp as u32;
        for (&r, &b) in &other.sites {
            let a = sites.get(&r).copied().unwrap_or(Local { q: false, p: false });
            // (X^qa Z^pa)(X^qb Z^pb) = (-1)^{pa qb} X^{qa+qb} Z^{pa+pb}
            if a.p && b.q {
                phase += 2;
            }
            let c = Local {
                q: a.q ^ b.q,
                p: a.p ^ b.p,
            };
            if c.is_identity() {
                sites.remove(&r);
            } else {
                sites.insert(r, c);
            }
        }
        PauliTerm {
            sites,
            phase_exp: (phase % 4) as u8,
            geometry: self.geometry,
        }
    }

    /// Symplectic form: 0 iff the two strings commute.
    pub fn symplectic_product(&self, other: &PauliTerm) -> Result<bool> {
        if self.geometry != other.geometry {
            return Err(Error::GeometryMismatch(
                self.geometry.to_string(),
                other.geometry.to_string(),
            ));
        }
        let mut acc = false;
        for (r, a) in &self.sites {
            if let Some(b) = other.sites.get(r) {
                acc ^= (a.q & b.p) ^ (a.p & b.q);
            }
        }
        Ok(acc)
    }

    /// Translates every site by `shift` (wrapping on rings).
    pub fn translate(&self, shift: i64) -> PauliTerm {
        let sites = self
            .sites
            .iter()
            .map(|(&r, &l)| (normalize(self.geometry, r + shift), l))
            .collect();
        PauliTerm {
            sites,
            phase_exp: self.phase_exp,
            geometry: self.geometry,
        }
    }

    /// Re-homes a line term onto `ring(len)`, or a ring term onto the line
    /// (keeping indices `0..L`).
    pub fn to_geometry(&self, geometry: Geometry) -> PauliTerm {
        PauliTerm::from_sites(geometry, self.phase_exp, self.sites())
    }

    /// Smallest interval containing the support. On rings this is the
    /// circular interval whose complement is the largest gap.
    pub fn span(&self) -> Option<Interval> {
        let keys: Vec<i64> = self.sites.keys().copied().collect();
        let (&first, &last) = (keys.first()?, keys.last()?);
        match self.geometry {
            Geometry::Line => Some(Interval { r1: first, r2: last }),
            Geometry::Ring(len) => {
                let len = len as i64;
                // gap after keys[i] up to the next support site
                let mut best_gap = first + len - last;
                let mut best_start = first;
                for w in keys.windows(2) {
                    let gap = w[1] - w[0];
                    if gap > best_gap {
                        best_gap = gap;
                        best_start = w[1];
                    }
                }
                let r2 = (best_start + len - best_gap).rem_euclid(len);
                Some(Interval {
                    r1: best_start,
                    r2,
                })
            }
        }
    }

    /// Diameter of the support: circular on rings, `max - min` on the line.
    pub fn diameter(&self) -> Result<usize> {
        let iv = self.span().ok_or(Error::IdentityDiameter)?;
        Ok(match self.geometry {
            Geometry::Line => (iv.r2 - iv.r1) as usize,
            Geometry::Ring(len) => circular_distance(iv.r2, iv.r1, len),
        })
    }

    /// Text form without the sign prefix.
    pub fn label(&self) -> String {
        let Some(iv) = self.span() else {
            return "I".to_string();
        };
        let len = match self.geometry {
            Geometry::Line => (iv.r2 - iv.r1) as usize,
            Geometry::Ring(l) => circular_distance(iv.r2, iv.r1, l),
        };
        let mut s = format!("@{}:", iv.r1);
        for i in 0..=len as i64 {
            s.push(self.get(iv.r1 + i).letter());
        }
        s
    }

    /// Parses the text form on the given geometry.
    pub fn parse(text: &str, geometry: Geometry) -> Result<PauliTerm> {
        let err = |reason: &str| Error::PauliParse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let t = text.trim();
        let (sign, rest): (u8, &str) = if let Some(r) = t.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = t.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = t.strip_prefix('i') {
            (1, r)
        } else if let Some(r) = t.strip_prefix('-') {
            (2, r)
        } else if let Some(r) = t.strip_prefix('+') {
            (0, r)
        } else {
            (0, t)
        };
        let (offset, letters) = if let Some(r) = rest.strip_prefix('@') {
            let (o, l) = r.split_once(':').ok_or_else(|| err("missing ':'"))?;
            // accept the unicode minus as well as '-'
            let o = o.replace('\u{2212}', "-");
            let o: i64 = o.parse().map_err(|_| err("bad offset"))?;
            (o, l)
        } else {
            (0, rest)
        };
        if letters.is_empty() {
            return Err(err("empty string"));
        }
        let mut phase = sign as u32;
        let mut locals = Vec::new();
        for (i, c) in letters.chars().enumerate() {
            let (local, ph) = Local::from_letter(c).ok_or_else(|| err("letter not in IXYZ"))?;
            phase += ph as u32;
            locals.push((offset + i as i64, local));
        }
        if let Geometry::Ring(l) = geometry {
            if locals.len() > l {
                return Err(err("string longer than ring"));
            }
        }
        let mut term = PauliTerm::identity(geometry);
        for (r, local) in locals {
            if !local.is_identity() {
                term.sites.insert(normalize(geometry, r), local);
            }
        }
        term.phase_exp = (phase % 4) as u8;
        Ok(term)
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.hermitian_phase() {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{sign}{}", self.label())
    }
}

impl FromStr for PauliTerm {
    type Err = Error;

    /// Parses onto the line geometry.
    fn from_str(s: &str) -> Result<Self> {
        PauliTerm::parse(s, Geometry::Line)
    }
}

fn normalize(geometry: Geometry, r: i64) -> i64 {
    match geometry {
        Geometry::Ring(l) => r.rem_euclid(l as i64),
        Geometry::Line => r,
    }
}

/// `d(r2, r1)`: forward distance from `r1` to `r2` on a ring of `len` sites.
pub fn circular_distance(r2: i64, r1: i64, len: usize) -> usize {
    let d = r2 - r1;
    if d >= 0 {
        d as usize
    } else {
        (d + len as i64) as usize
    }
}
