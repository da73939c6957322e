use std::path::PathBuf;
use std::process;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use fcas_cli::game::run_game;
use fcas_cli::run::{run, validate, LossArg, RunConfig};
use fcas_cli::{CliError, ExitCode};
use fcas_core::allocation::Rule;

/// Frequency-secured clearing, ancillary-service pricing and cost allocation.
///
/// Exit codes: 0 ok, 1 invalid input, 2 infeasible, 3 internal error, 4 I/O error.
#[derive(Parser)]
#[command(name = "fcas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Proportional,
    Shapley,
    Nucleolus,
    All,
}

impl RuleArg {
    fn rules(self) -> Vec<Rule> {
        match self {
            Self::Proportional => vec![Rule::Proportional],
            Self::Shapley => vec![Rule::Shapley],
            Self::Nucleolus => vec![Rule::Nucleolus],
            Self::All => Rule::ALL.to_vec(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file; diagnostics go to standard error.
    Validate { scenario: PathBuf },
    /// Clear the market, price services, run stand-alone markets and allocate.
    Run {
        scenario: PathBuf,
        #[arg(long, env = "FCAS_OUT_DIR", default_value = "fcas-out")]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        rule: RuleArg,
        /// `endogenous` (largest loss-eligible dispatch) or `fixed:<MW>`.
        #[arg(long, default_value = "endogenous")]
        loss_rule: LossArg,
        /// Relative MIP gap.
        #[arg(long, default_value_t = 1e-6)]
        gap: f64,
        /// Keep only the first N hours.
        #[arg(long)]
        hours: Option<usize>,
        /// Branch-and-bound node budget; the incumbent is reported when it runs out.
        #[arg(long, default_value_t = 500)]
        node_limit: usize,
        /// Wall-clock budget for branch and bound (seconds). Makes results timing dependent.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        int_tol: f64,
        /// Relative nadir-cone violation accepted by the cut loop.
        #[arg(long, default_value_t = 1e-9)]
        cone_tol: f64,
    },
    /// Allocate a file of `player,cost` rows.
    Game {
        costs: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        rule: RuleArg,
        /// Also run the brute-force counterpart and report the largest deviation.
        #[arg(long)]
        oracle: bool,
    },
    /// Write a built-in scenario as JSON.
    Template {
        #[arg(value_parser = ["gb", "toy", "toy3"])]
        name: String,
        output: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Validation } else { ExitCode::Ok };
            let _ = e.print();
            process::exit(code as i32);
        }
    };
    let code = match execute(cli.command) {
        Ok(()) => ExitCode::Ok,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    };
    process::exit(code as i32);
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Validate { scenario } => {
            let s = validate(&scenario)?;
            println!("{}: valid ({} units, {} hours)", scenario.display(), s.num_units(), s.horizon);
            Ok(())
        }
        Command::Run { scenario, out_dir, rule, loss_rule, gap, hours, node_limit, time_limit, int_tol, cone_tol } => {
            if !(gap >= 0.0 && int_tol > 0.0 && cone_tol > 0.0) {
                return Err(CliError::new(ExitCode::Validation, "tolerances must be positive"));
            }
            let time_limit = match time_limit {
                Some(t) if t.is_finite() && t > 0.0 => Some(Duration::from_secs_f64(t)),
                Some(_) => return Err(CliError::new(ExitCode::Validation, "--time-limit must be positive")),
                None => None,
            };
            let mut cfg = RunConfig::new(scenario, &out_dir);
            cfg.rules = rule.rules();
            cfg.loss = loss_rule;
            cfg.gap = gap;
            cfg.hours = hours;
            cfg.node_limit = node_limit;
            cfg.time_limit = time_limit;
            cfg.int_tol = int_tol;
            cfg.cone_tol = cone_tol;
            let m = run(&cfg)?;
            println!("run {} -> {} ({} files)", m.run_id, out_dir.display(), m.files.len());
            for s in m.stages.iter().filter(|s| s.status != "ok") {
                println!("  {}: {}", s.stage, s.message.as_deref().unwrap_or(""));
            }
            Ok(())
        }
        Command::Game { costs, rule, oracle } => {
            run_game(&costs, &rule.rules(), oracle, &mut std::io::stdout(), &mut std::io::stderr())
        }
        Command::Template { name, output } => {
            let s = match name.as_str() {
                "gb" => fcas_core::gb_template(),
                "toy" => fcas_core::toy_scenario(),
                _ => fcas_core::toy3_scenario(),
            };
            Ok(fcas_core::write_scenario(&s, &output)?)
        }
    }
}
