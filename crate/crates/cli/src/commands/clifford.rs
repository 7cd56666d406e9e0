use std::fmt::Write as _;

use num_complex::Complex64;
use qca_core::clifford::PackedRing;
use qca_core::dense::{
    conjugation_residual, orbit_coefficient_report, pauli_coefficients, synthesize_unitary, BranchChoice,
    SpectralLog, DEFAULT_MAX_LEN,
};
use qca_core::linalg;
use qca_core::pauli::PauliTerm;
use qca_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Artifacts, CliError, Report, RunConfig, Stage};

/// Orbit enumeration visits all `4^L` strings.
pub const MAX_ORBIT_LEN: usize = 10;

const TOL: f64 = 1e-8;

pub fn evolve(cfg: &RunConfig, out: &mut Artifacts) -> Result<Report, CliError> {
    let rule = cfg.clifford_rule()?;
    let seed: PauliTerm = cfg.term.parse().stage("parse term")?;
    let st = rule.spacetime_diagram(&seed, cfg.steps).stage("evolve")?;
    let mut listing = String::from("t,term,left,right,width\n");
    for (t, term) in st.terms.iter().enumerate() {
        let (l, r, w) = match term.span() {
            Some(iv) => (iv.r1.to_string(), iv.r2.to_string(), iv.r2 - iv.r1 + 1),
            None => (String::new(), String::new(), 0),
        };
        let _ = writeln!(listing, "{t},{},{l},{r},{w}", term.label());
    }
    out.write("spacetime.pbm", &st.to_pbm())?;
    out.write("steps.csv", &listing)?;
    let mut rep = Report::default();
    rep.line("rule", &cfg.rule);
    rep.line("seed", seed.label());
    rep.line("steps", cfg.steps);
    rep.line("final", st.terms.last().map(|t| t.label()).unwrap_or_default());
    let (lo, hi) = st.extent();
    rep.line("extent", format!("{lo}..{hi}"));
    rep.check("pbm rows", st.rows.len() == cfg.steps + 1, format!("{} rows", st.rows.len()));
    Ok(rep)
}

pub fn hamiltonian(cfg: &RunConfig, out: &mut Artifacts) -> Result<Report, CliError> {
    let rule = cfg.clifford_rule()?;
    let len = cfg.len;
    if len > DEFAULT_MAX_LEN {
        return Err(CliError::Engine {
            stage: "synthesize",
            source: Error::DenseBudget { len, max: DEFAULT_MAX_LEN },
        });
    }
    let w = synthesize_unitary(&rule, len).stage("synthesize")?;
    let conj = conjugation_residual(&w, &rule).stage("synthesize")?;
    let log = SpectralLog::new(&w);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.branch_seed);
    let mut branches = vec![BranchChoice::Principal];
    for _ in 0..cfg.branches {
        branches.push(BranchChoice::random(log.cluster_count(), &mut rng));
    }
    let mut rows = String::from("branch,offsets,exp_residual,conservation_residual,orbits,max_spread\n");
    let (mut worst_exp, mut worst_cons, mut worst_spread) = (0.0f64, 0.0f64, 0.0f64);
    let mut principal = None;
    for (i, b) in branches.iter().enumerate() {
        let h = log.hamiltonian(b).stage("logarithm")?;
        let back = linalg::expm_complex(&(&h * Complex64::new(0.0, -1.0)));
        let exp_res = linalg::max_abs(&(back - &w.matrix));
        let cons = linalg::max_abs(&(w.matrix.adjoint() * &h * &w.matrix - &h));
        let spec = pauli_coefficients(&h, len).stage("pauli transform")?;
        let report = orbit_coefficient_report(&spec, &rule, len).stage("orbit report")?;
        let offsets = match b {
            BranchChoice::Principal => "principal".to_string(),
            BranchChoice::Offsets(o) => o.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
        };
        let _ = writeln!(
            rows,
            "{i},{offsets},{exp_res:.3e},{cons:.3e},{},{:.3e}",
            report.orbits.len(),
            report.max_spread()
        );
        worst_exp = worst_exp.max(exp_res);
        worst_cons = worst_cons.max(cons);
        worst_spread = worst_spread.max(report.max_spread());
        if i == 0 {
            principal = Some(report);
        }
    }
    let principal = principal.expect("principal branch");
    out.write("orbits.csv", &principal.orbits_csv())?;
    out.write("decay_profile.csv", &principal.decay_csv())?;
    out.write("branches.csv", &rows)?;
    let mut rep = Report::default();
    rep.line("rule", &cfg.rule);
    rep.line("len", len);
    rep.line("eigenvalue_clusters", log.cluster_count());
    rep.line("branches", branches.len());
    rep.line("orbits", principal.orbits.len());
    let far = principal.decay_profile.iter().filter(|p| p.0 + 3 >= len).map(|p| p.1).fold(0.0, f64::max);
    rep.line("max_coeff_far", format!("{far:.6e}"));
    rep.bound("synthesis", conj, 1e-10);
    rep.bound("exp(-iH) = W", worst_exp, TOL);
    rep.bound("W^dag H W = H", worst_cons, TOL);
    rep.bound("orbit coefficient spread", worst_spread, TOL);
    Ok(rep)
}

pub fn orbits(cfg: &RunConfig, out: &mut Artifacts) -> Result<Report, CliError> {
    let rule = cfg.clifford_rule()?;
    let len = cfg.len;
    if len > MAX_ORBIT_LEN {
        return Err(CliError::Config(format!("orbits needs len <= {MAX_ORBIT_LEN}, got {len}")));
    }
    if len <= 2 * rule.radius() {
        return Err(CliError::Engine { stage: "orbits", source: Error::RingTooSmall { len, radius: rule.radius() } });
    }
    let total = 1usize << (2 * len);
    let mut seen = vec![false; total];
    let index = |v: &PackedRing| (v.q | (v.p << len)) as usize;
    let mut records = String::new();
    // per representative diameter: orbits, orbits that never change diameter
    let mut by_d = vec![(0usize, 0usize); len];
    let mut count = 0usize;
    for idx in 1..total {
        if seen[idx] {
            continue;
        }
        let mut v = PackedRing::zero(len);
        for r in 0..len {
            v.set(r, ((idx >> r) & 1 == 1, (idx >> (r + len)) & 1 == 1));
        }
        let orbit = rule.orbit(&v.to_term(), len).stage("orbits")?;
        for m in &orbit.members {
            seen[index(&PackedRing::from_term(m))] = true;
        }
        let d = orbit.min_diameter();
        by_d[d].0 += 1;
        if orbit.max_diameter() == d {
            by_d[d].1 += 1;
        }
        count += 1;
        let _ = writeln!(records, "{}", orbit.to_record());
    }
    let mut summary = String::from("min_diameter,orbits,constant_diameter_orbits\n");
    for (d, (n, c)) in by_d.iter().enumerate() {
        let _ = writeln!(summary, "{d},{n},{c}");
    }
    out.write("orbits.jsonl", &records)?;
    out.write("orbit_diameters.csv", &summary)?;
    let mut rep = Report::default();
    rep.line("rule", &cfg.rule);
    rep.line("len", len);
    rep.line("orbits", count);
    // diameter growth for strings on fewer than L - 2 sites
    let stuck: usize = by_d.iter().take(len.saturating_sub(3)).map(|p| p.1).sum();
    if cfg.rule.trim().starts_with("fractal") {
        rep.check("support growth (d <= L-4)", stuck == 0, format!("{stuck} constant-diameter orbits"));
    } else {
        rep.line("constant_diameter_orbits_d_le_L-4", stuck);
    }
    Ok(rep)
}

pub fn gliders(cfg: &RunConfig, out: &mut Artifacts) -> Result<Report, CliError> {
    let base = cfg.clifford_rule()?;
    let fractal = cfg.rule.trim().starts_with("fractal");
    let mut cert = String::from("power,max_support_len,max_shift,candidates,found,status\n");
    let mut list = String::from("power,glider,shift\n");
    let mut rep = Report::default();
    let mut total = 0usize;
    let mut exhausted = false;
    for p in 1..=cfg.max_power {
        let rule = base.power(p).stage("compose")?;
        let shift = rule.radius();
        let cands: u128 = (1..=cfg.max_support_len)
            .map(|l| if l == 1 { 3u128 } else { 9 * 4u128.pow(l as u32 - 2) })
            .sum();
        let (found, status) = match rule.find_gliders(cfg.max_support_len, shift, cfg.budget as u128) {
            Ok(f) => (f, "complete"),
            Err(Error::BudgetExceeded { .. }) => (Vec::new(), "budget_exhausted"),
            Err(e) => return Err(CliError::Engine { stage: "glider search", source: e }),
        };
        exhausted |= status != "complete";
        let _ = writeln!(cert, "{p},{},{shift},{cands},{},{status}", cfg.max_support_len, found.len());
        for (g, k) in &found {
            let _ = writeln!(list, "{p},{},{k}", g.label());
        }
        total += found.len();
        rep.line(&format!("gliders_power_{p}"), format!("{} ({status})", found.len()));
    }
    out.write("glider_certificate.csv", &cert)?;
    out.write("gliders.csv", &list)?;
    rep.line("rule", &cfg.rule);
    rep.line("max_support_len", cfg.max_support_len);
    rep.line("expected_positive", !fractal);
    rep.exhausted = exhausted;
    if !exhausted {
        if fractal {
            rep.check("no gliders", total == 0, format!("{total} found"));
        } else {
            rep.check("positive control", total > 0, format!("{total} found"));
        }
    }
    Ok(rep)
}
