use std::fmt::Write as _;

use qca_core::bands::{self, QuasiParticle};
use qca_core::couplings::{
    build_couplings, fit_decay, truncation_csv, truncation_error, verify_exponentiation, Classification,
    CouplingField, DecayFit, DecayModel, NOISE_FLOOR,
};
use qca_core::fermion::{build_ring_operator, parity_determinant, validate, CoinSet};

use crate::{Artifacts, CliError, Report, RunConfig, Stage};

const TOL: f64 = 1e-8;
const COIN_TOL: f64 = 1e-10;
const DRIFT_SAMPLES: usize = 64;

struct Spectral {
    coins: CoinSet,
    qps: Vec<QuasiParticle>,
    windings: Vec<i64>,
}

fn spectral(cfg: &RunConfig, rep: &mut Report) -> Result<Spectral, CliError> {
    let model = cfg.fermion_model()?;
    let coins = model.coins();
    let v = validate(&coins).stage("validate")?;
    rep.line("model", &model);
    rep.line("n", coins.n());
    rep.line("radius", coins.radius());
    rep.bound("coin orthogonality", v.max_orthogonality(), COIN_TOL);
    let qps = bands::analyze(&coins, cfg.n_k).stage("bands")?;
    let windings: Vec<i64> = qps.iter().map(|q| q.winding.unwrap_or(0)).collect();
    let index = bands::index(&qps, coins.n()).stage("index")?;
    rep.line("n_k", cfg.n_k);
    rep.line("quasi_particles", qps.len());
    rep.line("windings", windings.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" "));
    rep.line("n_mult", qps.iter().map(|q| q.n_mult.to_string()).collect::<Vec<_>>().join(" "));
    rep.line("index", index);
    Ok(Spectral { coins, qps, windings })
}

fn band_checks(s: &Spectral, rep: &mut Report) -> Result<(), CliError> {
    let mut drift = 0.0f64;
    for qp in &s.qps {
        drift = drift.max(bands::drift_check(&s.coins, qp, DRIFT_SAMPLES).stage("drift")?);
    }
    rep.bound("drift", drift, TOL);
    rep.bound("band reconstruction", bands::reconstruction_residual(&s.coins, &s.qps), TOL);
    Ok(())
}

/// `fit.csv` for a field with no coupling above the noise floor.
fn zero_fit_csv(field: &CouplingField) -> String {
    let mut s = String::from("distance,max_abs,fitted_model,params\n");
    for d in 1..=field.r_max {
        let _ = writeln!(s, "{d},{:.15e},none,", field.max_at(d));
    }
    s
}

/// Couplings, fit and their artifacts. Returns the field.
fn coupling_stage(cfg: &RunConfig, s: &Spectral, out: &mut Artifacts, rep: &mut Report) -> Result<CouplingField, CliError> {
    let field = build_couplings(&s.qps, cfg.r_max).stage("couplings")?;
    out.write("couplings.csv", &field.to_csv())?;
    rep.line("r_max", cfg.r_max);
    rep.bound("coupling antisymmetry", field.antisymmetry_residual(), 1e-10);
    rep.bound("coupling reality", field.max_imag, 1e-9);
    let peak = (1..=field.r_max).map(|d| field.max_at(d)).fold(0.0, f64::max);
    if peak <= NOISE_FLOOR {
        out.write("fit.csv", &zero_fit_csv(&field))?;
        rep.line("classification", "gapped (zero couplings)");
        rep.line("max_coupling", format!("{:.3e}", field.max_at(0).max(peak)));
        return Ok(field);
    }
    let fit: DecayFit = fit_decay(&field, &s.windings).stage("fit")?;
    out.write("fit.csv", &fit.to_csv())?;
    let class = match fit.classification {
        Classification::Gapped => "gapped",
        Classification::Critical => "critical",
    };
    rep.line("classification", class);
    rep.line(
        "fitted_model",
        match fit.model {
            DecayModel::Exponential => "exponential",
            DecayModel::InverseDistance => "inverse_distance",
        },
    );
    rep.line("beta", format!("{:.6}", fit.beta()));
    rep.line("exponential_r2", format!("{:.6}", fit.exponential.2));
    rep.line("exponent", format!("{:.6}", fit.exponent()));
    rep.line("power_law_r2", format!("{:.6}", fit.power_law.2));
    rep.line("fit_window", fit.window.len());
    rep.check("fit agrees with windings", fit.consistent, class);
    Ok(field)
}

fn ring_checks(cfg: &RunConfig, s: &Spectral, rep: &mut Report) -> Result<(), CliError> {
    let op = build_ring_operator(&s.coins, cfg.len).stage("ring")?;
    let det = parity_determinant(&op).stage("ring")?;
    rep.line("ring_len", cfg.len);
    rep.check("parity determinant", det == 1, format!("det = {det}"));
    rep.bound("ring orthogonality", op.orthogonality_residual(), TOL);
    let res = verify_exponentiation(&s.coins, cfg.len).stage("ring")?;
    rep.line("exp_residual", format!("{res:.3e}"));
    rep.bound("e^Z = O", res, TOL);
    Ok(())
}

pub fn analyze(cfg: &RunConfig, out: &mut Artifacts) -> Result<Report, CliError> {
    let mut rep = Report::default();
    let s = spectral(cfg, &mut rep)?;
    out.write("bands.csv", &bands::bands_csv(&s.qps))?;
    out.write("projectors.csv", &bands::projectors_csv(&s.qps))?;
    band_checks(&s, &mut rep)?;
    let field = coupling_stage(cfg, &s, out, &mut rep)?;
    ring_checks(cfg, &s, &mut rep)?;
    let curve = truncation_error(&field, &s.coins, cfg.len).stage("truncation")?;
    out.write("truncation.csv", &truncation_csv(&curve))?;
    Ok(rep)
}

pub fn couplings(cfg: &RunConfig, out: &mut Artifacts) -> Result<Report, CliError> {
    let mut rep = Report::default();
    let s = spectral(cfg, &mut rep)?;
    out.write("bands.csv", &bands::bands_csv(&s.qps))?;
    coupling_stage(cfg, &s, out, &mut rep)?;
    Ok(rep)
}

pub fn verify(cfg: &RunConfig, out: &mut Artifacts) -> Result<Report, CliError> {
    let mut rep = Report::default();
    let s = spectral(cfg, &mut rep)?;
    band_checks(&s, &mut rep)?;
    ring_checks(cfg, &s, &mut rep)?;
    let mut csv = String::from("check,pass,detail\n");
    for c in &rep.checks {
        let _ = writeln!(csv, "{},{},{}", c.name, c.pass, c.detail);
    }
    out.write("verify.csv", &csv)?;
    Ok(rep)
}
