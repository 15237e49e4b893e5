use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msft_cli::commands::{self, SimulateOptions};
use msft_cli::{CliError, RunConfig, RunManifest};

#[derive(Parser)]
#[command(name = "msft", version = msft_cli::manifest::BUILD_ID, about = "Minkowski-lattice scalar field toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file with [section] key = value lines; defaults apply otherwise.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a setting, e.g. --set kernel.alpha=1/27 (repeatable).
    #[arg(short = 's', long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (same as --set paths.output=DIR).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build, Cholesky-check, invert and cache the kernel.
    Kernel(Common),
    /// Run the trajectory and write checkpoints, line cuts and a manifest.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        /// Stop after this many total steps, leaving a checkpoint.
        #[arg(long, value_name = "STEPS")]
        stop_after: Option<u64>,
    },
    /// Recompute line cuts and the probe Gram from a stored accumulator.
    Measure(Common),
    /// Compare dynamics, ensemble and exact two-point values.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// gaussian_free or metropolis (same as --set oracle.mode=...).
        #[arg(long)]
        mode: Option<String>,
    },
    /// Verify the Fock-space algebra and the causality trend.
    Algebra(Common),
    /// Microcausality sweep over the configured alphas.
    Causality(Common),
    /// Print the fully resolved configuration.
    Config(Common),
}

fn resolve(c: &Common, extra: &[String]) -> Result<RunConfig, CliError> {
    let base = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut o = c.overrides.clone();
    if let Some(dir) = &c.output {
        o.push(format!("paths.output={}", dir.display()));
    }
    o.extend_from_slice(extra);
    base.with_overrides(&o)
}

fn report(m: &RunManifest) {
    println!("{} ({:.2} s, complete: {})", m.command, m.wall_clock_seconds, m.complete);
    if let Some(d) = &m.drift {
        println!(
            "steps {} samples {} max |S| {:.3e} (production {:.3e}) s in [{:.4}, {:.4}]",
            d.steps, d.samples, d.max_abs_action, d.max_abs_action_prod, d.min_s, d.max_s
        );
    }
    if let Some(a) = &m.acceptance {
        println!("acceptance {:.3} at width {:.4}", a.acceptance_rate, a.proposal_width);
    }
    for (k, v) in &m.results {
        println!("{k}: {v}");
    }
    for a in &m.artifacts {
        println!("wrote {} ({} bytes)", a.path, a.bytes);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Kernel(c) => {
            let cfg = resolve(&c, &[])?;
            println!("{}", commands::cmd_kernel(&cfg)?.summary());
        }
        Command::Simulate { common, resume, stop_after } => {
            let cfg = resolve(&common, &[])?;
            report(&commands::cmd_simulate(&cfg, SimulateOptions { resume, stop_after })?);
        }
        Command::Measure(c) => report(&commands::cmd_measure(&resolve(&c, &[])?)?),
        Command::Oracle { common, mode } => {
            let extra: Vec<String> = mode.map(|m| format!("oracle.mode={m}")).into_iter().collect();
            report(&commands::cmd_oracle(&resolve(&common, &extra)?)?);
        }
        Command::Algebra(c) => report(&commands::cmd_algebra(&resolve(&c, &[])?)?),
        Command::Causality(c) => report(&commands::cmd_causality(&resolve(&c, &[])?)?),
        Command::Config(c) => print!("{}", resolve(&c, &[])?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
