//! Command implementations. Each returns a [`Report`] after writing its
//! artifacts; the caller finishes the output directory.

mod clifford;
mod fermion;

pub use clifford::{evolve, gliders, hamiltonian, orbits};
pub use fermion::{analyze, couplings, verify};

use crate::{Artifacts, CliError, Engine, Report, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Hamiltonian,
    Orbits,
    Gliders,
    Analyze,
    Couplings,
    Verify,
}

impl Command {
    pub fn engine(self) -> Engine {
        match self {
            Command::Evolve | Command::Hamiltonian | Command::Orbits | Command::Gliders => Engine::Clifford,
            _ => Engine::Fermion,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "clifford evolve",
            Command::Hamiltonian => "clifford hamiltonian",
            Command::Orbits => "clifford orbits",
            Command::Gliders => "clifford gliders",
            Command::Analyze => "fermion analyze",
            Command::Couplings => "fermion couplings",
            Command::Verify => "fermion verify",
        }
    }
}

/// Runs `cmd` and writes every artifact. Returns the report for the exit
/// status.
pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.engine != cmd.engine() {
        return Err(CliError::Config(format!(
            "config engine {:?} does not match command {}",
            cfg.engine,
            cmd.name()
        )));
    }
    cfg.check()?;
    let dir = cfg.out.clone().ok_or_else(|| CliError::Config("no output directory".into()))?;
    let mut out = Artifacts::create(&dir)?;
    let report = match cmd {
        Command::Evolve => evolve(cfg, &mut out)?,
        Command::Hamiltonian => hamiltonian(cfg, &mut out)?,
        Command::Orbits => orbits(cfg, &mut out)?,
        Command::Gliders => gliders(cfg, &mut out)?,
        Command::Analyze => analyze(cfg, &mut out)?,
        Command::Couplings => couplings(cfg, &mut out)?,
        Command::Verify => verify(cfg, &mut out)?,
    };
    out.finish(cmd.name(), cfg, &report)?;
    Ok(report)
}
