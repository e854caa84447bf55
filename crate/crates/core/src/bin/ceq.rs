use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use ceq::commands::{cmd_oracle, cmd_solve, cmd_sweep, cmd_toll, CommandOutput};
use ceq::exec::Execution;
use ceq::scenario_file::{load_scenario_with_env, parse_scenario, BASIC_SCENARIO};
use ceq::sweep::default_mprs;
use ceq::{Error, Scenario, VehicleClass};

const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_IO: u8 = 4;

/// Morning-commute equilibria for mixed gasoline/electric fleets.
#[derive(Parser)]
#[command(name = "ceq", version)]
struct Cli {
    /// Scenario file; the bundled basic scenario when omitted.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Profile step in minutes, overriding the scenario.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium profile at the scenario's EV share.
    Solve,
    /// One equilibrium per EV share.
    Sweep {
        /// Comma-separated shares, or `start:step:end`.
        #[arg(long, default_value = "0:0.1:1")]
        mpr: String,
        /// Solve the shares one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// System optimum and congestion toll for a single-class fleet.
    Toll {
        #[arg(long, value_enum, default_value_t = Fleet::Ev)]
        class: Fleet,
        /// Constant subtracted from every reported toll, $.
        #[arg(long, default_value_t = 0.0)]
        rebase: f64,
    },
    /// Day-to-day adjustment run compared with the analytic equilibrium.
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fleet {
    Gv,
    Ev,
}

/// Errors that carry their own exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() {
            EXIT_INPUT
        } else if e.is_io_error() {
            EXIT_IO
        } else {
            EXIT_SOLVER
        };
        Failure { code, err: e.into() }
    }
}

fn input(err: anyhow::Error) -> Failure {
    Failure { code: EXIT_INPUT, err }
}

fn parse_mprs(spec: &str) -> anyhow::Result<Vec<f64>> {
    let spec = spec.trim();
    if spec == "0:0.1:1" {
        return Ok(default_mprs());
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?} in --mpr"));
        let (start, step, end) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step.is_nan() || step <= 0.0 || end < start {
            bail!("--mpr range needs start <= end and a positive step");
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| start + k as f64 * step).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?} in --mpr")))
        .collect()
}

fn load(cli: &Cli) -> Result<Scenario, Failure> {
    let mut sc = match &cli.scenario {
        Some(p) => load_scenario_with_env(p, std::env::vars())?,
        None => parse_scenario(BASIC_SCENARIO, std::env::vars())?,
    };
    if let Some(dt) = cli.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(input(anyhow::anyhow!("--dt must be a positive number of minutes, got {dt}")));
        }
        sc.numerics.dt_minutes = dt;
    }
    Ok(sc)
}

fn run(cli: &Cli) -> Result<CommandOutput, Failure> {
    let sc = load(cli)?;
    if !cli.quiet {
        for w in sc.warnings() {
            eprintln!("warning: {w}");
        }
    }
    let out = match &cli.command {
        Command::Solve => cmd_solve(&sc, &cli.out)?,
        Command::Sweep { mpr, sequential } => {
            let mprs = parse_mprs(mpr).map_err(input)?;
            let exec = if *sequential { Execution::Sequential } else { Execution::Parallel };
            cmd_sweep(&sc, &mprs, &cli.out, exec)?.1
        }
        Command::Toll { class, rebase } => {
            let class = match class {
                Fleet::Gv => VehicleClass::Gv,
                Fleet::Ev => VehicleClass::Ev,
            };
            cmd_toll(&sc, class, *rebase, &cli.out)?
        }
        Command::Oracle => cmd_oracle(&sc, &cli.out)?,
    };
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(out) => {
            if !cli.quiet {
                print!("{}", out.summary.render());
                for f in &out.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
