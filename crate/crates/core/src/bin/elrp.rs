use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elrp::cli::{self, CliError, ExperimentSpec, Mode};
use elrp::pten::expand;

#[derive(Parser)]
#[command(
    name = "elrp",
    version,
    about = "Charging station siting and electric truck routing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Instance file, or a bundled instance name (toy, small_base, small_tw, ...)
    #[arg(long)]
    instance: String,
    /// Output directory for CSV files
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Relative optimality tolerance of the bilevel loop
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Worker threads
    #[arg(long, default_value_t = 4)]
    jobs: usize,
    /// Log every column generation iteration
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the bilevel problem once
    Solve {
        #[command(flatten)]
        common: Common,
        /// Uniform service fee overriding the instance's
        #[arg(long)]
        fee: Option<f64>,
    },
    /// Bilevel and single-entity solutions over a fee grid
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Grid as `start:end:step` and/or comma-separated values
        #[arg(long, default_value = "0:0.5:0.05")]
        fees: String,
    },
    /// Bilevel solutions for several charger ratings at one station
    Rates {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "10,15,20")]
        rates: String,
        /// Per-port cost for each rate
        #[arg(long)]
        port_costs: Option<String>,
        #[arg(long, default_value = "F2")]
        station: String,
        #[arg(long)]
        fee: Option<f64>,
    },
    /// Compare the solver against exhaustive enumeration
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fee: Option<f64>,
    },
    /// Print the expanded network
    DumpGraph {
        #[arg(long)]
        instance: String,
    },
}

fn spec(common: Common, mode: Mode) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(common.instance, mode);
    s.out_dir = common.out;
    s.epsilon = common.epsilon;
    s.jobs = common.jobs;
    s.trace = common.trace;
    s
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve { common, fee } => {
            let mut s = spec(common, Mode::Solve);
            s.fee = fee;
            let sol = cli::run_solve(&s)?;
            println!(
                "leader cost {:.6}  follower cost {:.6}  ports {:?}  iterations {}{}",
                sol.leader_cost,
                sol.follower_cost,
                sol.decision.ports,
                sol.iterations.len(),
                if sol.exact { "" } else { "  (not certified)" }
            );
        }
        Command::Sweep { common, fees } => {
            let mut s = spec(common, Mode::FeeSweep);
            s.fees = cli::parse_fee_grid(&fees)?;
            let points = cli::run_fee_sweep(&s)?;
            let failed = points.iter().filter(|p| p.bilevel.is_err()).count();
            println!(
                "{} fee points written to {}",
                points.len(),
                s.out_dir.join("sweep.csv").display()
            );
            if failed > 0 {
                return Err(CliError::PointsFailed(format!(
                    "{failed} fee points failed"
                )));
            }
        }
        Command::Rates {
            common,
            rates,
            port_costs,
            station,
            fee,
        } => {
            let mut s = spec(common, Mode::RateStudy);
            s.rates = cli::parse_list(&rates)?;
            s.rate_port_costs = port_costs
                .as_deref()
                .map(cli::parse_list)
                .transpose()?
                .unwrap_or_default();
            s.rate_station = station;
            s.fee = fee;
            let points = cli::run_rate_study(&s)?;
            println!(
                "{} ratings written to {}",
                points.len(),
                s.out_dir.join("rates.csv").display()
            );
            let failed = points.iter().filter(|p| p.result.is_err()).count();
            if failed > 0 {
                return Err(CliError::PointsFailed(format!("{failed} ratings failed")));
            }
        }
        Command::OracleCheck { common, fee } => {
            let mut s = spec(common, Mode::OracleCheck);
            s.fee = fee;
            let cmp = cli::run_oracle_check(&s)?;
            println!(
                "solver {:.6}  enumeration {:.6}  ({} leader decisions)",
                cmp.solver_leader_cost, cmp.oracle_leader_cost, cmp.grid_points
            );
        }
        Command::DumpGraph { instance } => {
            let inst = cli::resolve_instance(&instance)?;
            print!("{}", expand(&inst)?.dump());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ELRP_LOG", "warn")).init();
    let args = Cli::parse();
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
