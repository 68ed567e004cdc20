use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hilfer_cli::{
    parse_scenarios, run_certify, run_convergence_study, run_solve, CertifyKind, CliError,
    Overrides, RunOutput, Scenario,
};
use hilfer_core::{InitialTermMode, UhMode};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "hilfer",
    version,
    about = "Delay fractional equations: solves, stability certificates, convergence studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve each scenario by Picard iteration.
    Solve(Common),
    /// Ulam-Hyers-Rassias certificate with the scenario's phi.
    CertifyUhr(Common),
    /// Ulam-Hyers certificate with the scenario's epsilon.
    CertifyUh(Common),
    /// Quadrature convergence study against the power-rule closed form.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Number of grid doublings.
        #[arg(long, default_value_t = 4)]
        refinements: usize,
        /// Integrand (psi(s) - psi(t0))^(delta - 1).
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario document (TOML, one scenario or a [[scenario]] list).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; each scenario writes to <out>/<name>/.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    experiments: Option<usize>,
    /// Initial-term weight: paper-literal | weighted-hilfer.
    #[arg(long)]
    mode: Option<InitialTermMode>,
    /// Ulam-Hyers scale power: paper-literal | tight.
    #[arg(long = "uh-mode")]
    uh_mode: Option<UhMode>,
    /// Override the scenario grid resolution.
    #[arg(long = "steps-per-delay")]
    steps_per_delay: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<Vec<Scenario>, CliError> {
        let text = std::fs::read_to_string(&self.scenario).map_err(|source| CliError::Io {
            path: self.scenario.display().to_string(),
            source,
        })?;
        let overrides = Overrides {
            seed: self.seed,
            experiments: self.experiments,
            mode: self.mode,
            uh_mode: self.uh_mode,
            steps_per_delay: self.steps_per_delay,
        };
        if self.experiments == Some(0) {
            return Err(CliError::Input("experiments must be at least 1".into()));
        }
        if self.steps_per_delay.is_some_and(|n| n < 2) {
            return Err(CliError::Input("steps-per-delay must be at least 2".into()));
        }
        Ok(parse_scenarios(&text)?
            .iter()
            .map(|s| overrides.apply(s))
            .collect())
    }
}

fn report(name: &str, result: Result<RunOutput, CliError>) -> Result<(), CliError> {
    let out = result.map_err(|e| {
        eprintln!("{name}: error: {e}");
        e
    })?;
    for w in &out.warnings {
        eprintln!("{name}: warning: {w}");
    }
    let verdict = match out.pass {
        Some(true) => " pass",
        Some(false) => " FAIL",
        None => "",
    };
    let files: Vec<String> = out.files.iter().map(|p| p.display().to_string()).collect();
    println!("{name}:{verdict} {}", files.join(" "));
    Ok(())
}

type Job = Box<dyn Fn(&Scenario, &std::path::Path) -> Result<RunOutput, CliError> + Sync>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, job): (&Common, Job) = match &cli.command {
        Command::Solve(c) => (c, Box::new(run_solve)),
        Command::CertifyUhr(c) => (
            c,
            Box::new(|s, o| run_certify(s, CertifyKind::Uhr, o).map(|r| r.0)),
        ),
        Command::CertifyUh(c) => (
            c,
            Box::new(|s, o| run_certify(s, CertifyKind::Uh, o).map(|r| r.0)),
        ),
        Command::Converge {
            common,
            refinements,
            delta,
        } => {
            let (r, d) = (*refinements, *delta);
            (
                common,
                Box::new(move |s, o| run_convergence_study(s, r, d, o).map(|r| r.0)),
            )
        }
    };
    let scenarios = common.load().inspect_err(|e| eprintln!("error: {e}"))?;
    let results: Vec<Result<(), CliError>> = scenarios
        .par_iter()
        .map(|s| report(&s.name, job(s, &common.out)))
        .collect();
    // Report the most severe failure.
    results
        .into_iter()
        .filter_map(Result::err)
        .max_by_key(CliError::exit_code)
        .map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => ExitCode::from(e.exit_code() as u8),
    }
}
