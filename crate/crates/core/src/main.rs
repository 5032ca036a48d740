use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use emcache::agents::PolicyKind;
use emcache::harness::{self, Suite};
use emcache::{CellMode, Error, RecoveryMode, Result, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(name = "emcache", version, about = "Coded-caching UAV map transmission simulator")]
struct Cli {
    /// JSON scenario document; missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the document's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Recovery and/or cell modes, comma separated: all-eligible,
    /// selected-k, non-coded, simplified, link-product.
    #[arg(long, global = true, value_delimiter = ',')]
    mode: Vec<String>,
    /// Learner for `train`: sacrl or scrl.
    #[arg(long, global = true, default_value = "sacrl")]
    agent: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a DQN scheduler; writes checkpoint, learning curve and summary.
    Train {
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Evaluate policies on common-random-number episodes.
    Eval {
        #[arg(long, value_delimiter = ',', default_value = "sacrl,scrl,pso,nct,random,oracle")]
        policies: Vec<String>,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        /// Directory holding checkpoint_<policy>.json (defaults to --out).
        #[arg(long)]
        checkpoints: Option<PathBuf>,
    },
    /// Evaluate policies over values of one numeric config field.
    Sweep {
        /// Dotted config path, e.g. nodes.apothem_m.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "oracle")]
        policies: Vec<String>,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
    },
    /// Resolve beta0 and the contact time; writes the resolved config.
    Calibrate,
    /// Run a numerical oracle suite: recovery, stp, cdf, k-invariance, all.
    Oracle {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

fn load(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    for m in &cli.mode {
        let quoted = serde_json::Value::String(m.clone());
        if let Ok(r) = serde_json::from_value::<RecoveryMode>(quoted.clone()) {
            cfg.coding.recovery_mode = r;
        } else if let Ok(c) = serde_json::from_value::<CellMode>(quoted) {
            cfg.coding.cell_mode = c;
        } else {
            return Err(Error::Unknown { what: "mode", name: m.clone() });
        }
    }
    Ok(cfg)
}

fn policies(names: &[String]) -> Result<Vec<PolicyKind>> {
    names.iter().map(|n| n.parse()).collect()
}

fn print<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let mut cfg = load(cli)?;
    match &cli.command {
        Command::Train { episodes } => {
            if let Some(e) = episodes {
                cfg.dqn.episodes = *e;
            }
            let agent: PolicyKind = cli.agent.parse()?;
            print(&harness::cmd_train(&cfg, agent, &cli.out)?)?;
        }
        Command::Eval { policies: names, episodes, checkpoints } => {
            let dir = checkpoints.as_ref().unwrap_or(&cli.out);
            print(&harness::cmd_eval(&cfg, &policies(names)?, dir, *episodes, &cli.out)?)?;
        }
        Command::Sweep { param, values, policies: names, episodes } => {
            print(&harness::cmd_sweep(&cfg, param, values, &policies(names)?, *episodes, &cli.out)?)?;
        }
        Command::Calibrate => print(&harness::cmd_calibrate(&cfg, &cli.out)?)?,
        Command::Oracle { suite } => {
            let report = harness::cmd_oracle(&cfg, suite.parse::<Suite>()?, &cli.out)?;
            print(&report)?;
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let report = ErrorReport { error: e.kind(), message: e.to_string() };
            eprintln!("{}", serde_json::to_string_pretty(&report).expect("error report serializes"));
            ExitCode::from(2)
        }
    }
}
