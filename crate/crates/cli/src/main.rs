use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wgsqz_cli::config::{resolve, Overrides, Scenario};
use wgsqz_cli::{presets, run, CliError};

/// Emitters in a waveguide filled with squeezed vacuum.
#[derive(Parser, Debug)]
#[command(name = "wgsqz", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML scenario file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides `output` in the file.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Named preset underneath the file.
    #[arg(long, short, global = true)]
    preset: Option<String>,
    /// Worker threads for sweeps and maps.
    #[arg(long, global = true, env = "WGSQZ_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the scenario named in the configuration.
    Run,
    /// Collective rate matrices and the Kossakowski spectrum.
    Coeffs,
    /// Time evolution and dephasing rates.
    Evolve,
    /// Steady state of the generator.
    Steady,
    /// Closed-form concurrence over photon number and centre of mass.
    PhaseMap,
    /// Resonance fluorescence spectrum.
    Spectrum,
    /// Dephasing rates against emitter position.
    Sweep,
    /// Print the effective configuration without running.
    Validate,
    /// List the built-in presets.
    Presets,
}

fn scenario_of(cmd: &Command) -> Option<Scenario> {
    match cmd {
        Command::Coeffs => Some(Scenario::Coeffs),
        Command::Evolve => Some(Scenario::Evolve),
        Command::Steady => Some(Scenario::Steady),
        Command::PhaseMap => Some(Scenario::PhaseMap),
        Command::Spectrum => Some(Scenario::Spectrum),
        Command::Sweep => Some(Scenario::Sweep),
        Command::Run | Command::Validate | Command::Presets => None,
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    if let Command::Presets = cli.command {
        for name in presets::NAMES {
            println!("{name}\t{}", presets::describe(name).unwrap_or(""));
        }
        return Ok(());
    }
    if let Some(n) = cli.global.threads {
        // A second initialisation only happens in tests; ignore it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let text = match &cli.global.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?),
        None => None,
    };
    let overrides = Overrides {
        preset: cli.global.preset.clone(),
        scenario: scenario_of(&cli.command),
        output: cli.global.out.as_ref().map(|p| p.display().to_string()),
    };
    let cfg = resolve(text.as_deref(), &overrides)?;
    cfg.validate()?;
    if let Command::Validate = cli.command {
        print!("{}", cfg.emit());
        return Ok(());
    }
    let out = PathBuf::from(&cfg.output);
    let report = run(&cfg, &out)?;
    for f in &report.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
