//! Run configuration shared by flags and config files.

use std::path::{Path, PathBuf};

use qca_core::clifford::CliffordRule;
use qca_core::fermion::Model;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Clifford,
    Fermion,
}

/// Every knob of a run. Unset fields in a config file keep the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub engine: Engine,
    /// `fractal`, `identity`, `shift`, `shift(k)`, optionally `^n`.
    pub rule: String,
    /// Fermionic model, e.g. `dirac(pi/4)`. A bare `random_brickwork` takes
    /// `seed` and depth 2.
    pub model: String,
    /// Seed term for `clifford evolve`.
    pub term: String,
    /// Ring size L.
    pub len: usize,
    pub n_k: usize,
    pub r_max: usize,
    /// Time steps T.
    pub steps: usize,
    pub max_support_len: usize,
    /// Glider search covers `rule^1 … rule^max_power`.
    pub max_power: usize,
    /// Random branch choices on top of the principal one.
    pub branches: usize,
    pub branch_seed: u64,
    pub seed: u64,
    /// Candidate budget for the glider search.
    pub budget: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            engine: Engine::Clifford,
            rule: "fractal".into(),
            model: "dirac(pi/4)".into(),
            term: "@0:Z".into(),
            len: 8,
            n_k: 1024,
            r_max: 40,
            steps: 32,
            max_support_len: 10,
            max_power: 1,
            branches: 0,
            branch_seed: 2024,
            seed: 1,
            budget: 1 << 32,
            out: None,
        }
    }
}

/// Config file contents; every field optional so only the keys present
/// override the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    engine: Option<Engine>,
    rule: Option<String>,
    model: Option<String>,
    term: Option<String>,
    len: Option<usize>,
    n_k: Option<usize>,
    r_max: Option<usize>,
    steps: Option<usize>,
    max_support_len: Option<usize>,
    max_power: Option<usize>,
    branches: Option<usize>,
    branch_seed: Option<u64>,
    seed: Option<u64>,
    budget: Option<u64>,
    out: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $(if let Some(v) = $src.$f { $dst.$f = v; })*
    };
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Applies the keys present in a config file on top of `self`.
    pub fn overlay_toml(mut self, text: &str) -> Result<Self, CliError> {
        let p: PartialConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        overlay!(
            self, p, engine, rule, model, term, len, n_k, r_max, steps, max_support_len, max_power, branches,
            branch_seed, seed, budget
        );
        if p.out.is_some() {
            self.out = p.out;
        }
        Ok(self)
    }

    pub fn overlay_file(self, path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        self.overlay_toml(&text)
    }

    /// The config without its output directory, which does not affect results.
    pub fn canonical(&self) -> RunConfig {
        RunConfig { out: None, ..self.clone() }
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical().to_toml().as_bytes()))
    }

    pub fn clifford_rule(&self) -> Result<CliffordRule, CliError> {
        parse_rule(&self.rule)
    }

    pub fn fermion_model(&self) -> Result<Model, CliError> {
        let name = self.model.trim();
        if name == "random_brickwork" {
            return Ok(Model::RandomBrickwork { seed: self.seed, depth: 2 });
        }
        name.parse().map_err(|e: qca_core::Error| CliError::Config(e.to_string()))
    }

    /// Range checks that do not depend on the command.
    pub fn check(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(1..=64).contains(&self.len) {
            return bad(format!("len = {} outside 1..=64", self.len));
        }
        if !(64..=1 << 16).contains(&self.n_k) {
            return bad(format!("n_k = {} outside 64..=65536", self.n_k));
        }
        if self.r_max < 10 || 2 * self.r_max >= self.n_k {
            return bad(format!("r_max = {} must be >= 10 and < n_k/2", self.r_max));
        }
        if self.steps > 10_000 {
            return bad(format!("steps = {} > 10000", self.steps));
        }
        if !(1..=16).contains(&self.max_support_len) {
            return bad(format!("max_support_len = {} outside 1..=16", self.max_support_len));
        }
        if !(1..=4).contains(&self.max_power) {
            return bad(format!("max_power = {} outside 1..=4", self.max_power));
        }
        if self.branches > 64 {
            return bad(format!("branches = {} > 64", self.branches));
        }
        Ok(())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// `fractal`, `identity`, `shift`, `shift(k)`, each optionally `^n`.
pub fn parse_rule(text: &str) -> Result<CliffordRule, CliError> {
    let err = || CliError::Config(format!("unknown rule {text:?}"));
    let text = text.trim();
    let (base, power) = match text.split_once('^') {
        Some((b, p)) => (b.trim(), p.trim().parse::<usize>().map_err(|_| err())?),
        None => (text, 1),
    };
    let rule = match base {
        "fractal" => CliffordRule::fractal(),
        "identity" => CliffordRule::identity(),
        "shift" => CliffordRule::shift(1),
        s => {
            let k = s
                .strip_prefix("shift(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|k| k.trim().parse::<i64>().ok())
                .ok_or_else(err)?;
            CliffordRule::shift(k)
        }
    };
    if power == 0 {
        return Err(err());
    }
    rule.power(power).map_err(|e| CliError::Config(e.to_string()))
}
