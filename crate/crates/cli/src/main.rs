use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qca_cli::commands::{execute, Command};
use qca_cli::{Engine, RunConfig};

#[derive(Parser)]
#[command(name = "qca", version, about = "Clifford and quasi-free fermionic QCA toolkit")]
struct Cli {
    #[command(subcommand)]
    engine: EngineCmd,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Subcommand)]
enum EngineCmd {
    /// Clifford QCA in phase space and on small dense rings.
    #[command(subcommand)]
    Clifford(CliffordCmd),
    /// Quasi-free fermionic QCA.
    #[command(subcommand)]
    Fermion(FermionCmd),
}

#[derive(Subcommand)]
enum CliffordCmd {
    /// Spacetime diagram and per-step terms of a seed on the line.
    Evolve,
    /// Dense logarithms of W and their orbit-coefficient report.
    Hamiltonian,
    /// All orbits on a ring.
    Orbits,
    /// Exhaustive glider search for the rule and its powers.
    Gliders,
}

#[derive(Subcommand)]
enum FermionCmd {
    /// Bands, windings, couplings, decay fit and ring verification.
    Analyze,
    /// Bands, couplings and decay fit.
    Couplings,
    /// Symbol, drift and e^Z = O checks.
    Verify,
}

/// Flags mirror the config file keys; keys in `--config` win.
#[derive(Args)]
struct Knobs {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    rule: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    /// Seed term for evolve, e.g. "@0:ZYYZ".
    #[arg(long, global = true)]
    term: Option<String>,
    /// Ring size L.
    #[arg(long, short = 'L', global = true)]
    len: Option<usize>,
    #[arg(long, global = true)]
    n_k: Option<usize>,
    #[arg(long, global = true)]
    r_max: Option<usize>,
    /// Time steps T.
    #[arg(long, short = 'T', global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    max_support_len: Option<usize>,
    #[arg(long, global = true)]
    max_power: Option<usize>,
    /// Random branch choices on top of the principal branch.
    #[arg(long, global = true)]
    branches: Option<usize>,
    #[arg(long, global = true)]
    branch_seed: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Glider search candidate budget.
    #[arg(long, global = true)]
    budget: Option<u64>,
}

fn resolve(cmd: Command, k: Knobs) -> Result<RunConfig, qca_cli::CliError> {
    let mut c = RunConfig { engine: cmd.engine(), ..RunConfig::default() };
    if cmd.engine() == Engine::Fermion {
        c.len = 64;
    }
    macro_rules! flag {
        ($($f:ident),*) => { $(if let Some(v) = k.$f { c.$f = v; })* };
    }
    flag!(rule, model, term, len, n_k, r_max, steps, max_support_len, max_power, branches, branch_seed, seed, budget);
    if k.out.is_some() {
        c.out = k.out;
    }
    match &k.config {
        Some(path) => c.overlay_file(path),
        None => Ok(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.engine {
        EngineCmd::Clifford(CliffordCmd::Evolve) => Command::Evolve,
        EngineCmd::Clifford(CliffordCmd::Hamiltonian) => Command::Hamiltonian,
        EngineCmd::Clifford(CliffordCmd::Orbits) => Command::Orbits,
        EngineCmd::Clifford(CliffordCmd::Gliders) => Command::Gliders,
        EngineCmd::Fermion(FermionCmd::Analyze) => Command::Analyze,
        EngineCmd::Fermion(FermionCmd::Couplings) => Command::Couplings,
        EngineCmd::Fermion(FermionCmd::Verify) => Command::Verify,
    };
    let result = resolve(cmd, cli.knobs).and_then(|cfg| {
        let cfg = RunConfig { out: cfg.out.clone().or_else(|| Some(PathBuf::from("qca-out"))), ..cfg };
        execute(cmd, &cfg).map(|rep| (cfg, rep))
    });
    match result {
        Ok((cfg, rep)) => {
            print!("{}", rep.render(cmd.name(), &cfg.hash()));
            ExitCode::from(rep.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
