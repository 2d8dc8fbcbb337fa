//! `harnack-lab`: run, validate and calibrate experiments from TOML configurations.
//!
//! Exit status is 0 when every enabled check passes, 1 when a check fails and 2 on any
//! configuration or runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use harnack_lab::config::{preset, preset_names, preset_text, ExperimentConfig};
use harnack_lab::experiment::{prepare, run_prepared};
use harnack_lab::report::emit_report;
use harnack_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "harnack-lab", version, about = "Numerical checks of Li-Yau type gradient estimates and Harnack inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, run the enabled checks and write the report files.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory; falls back to `output.dir`, then to $HARNACK_LAB_OUT/<name>,
        /// then to ./runs/<name>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Uniform refinement factor for convergence studies.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        grid_scale: u32,
    },
    /// Check a configuration without solving anything.
    Validate {
        #[command(flatten)]
        source: Source,
    },
    /// Print the smallest passing value of C₁ or C.
    Calibrate {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        grid_scale: u32,
    },
    /// List the bundled presets.
    Presets,
    /// Print a bundled preset as TOML.
    Preset { name: String },
}

#[derive(Args)]
struct Source {
    /// Configuration file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Use a bundled preset instead of a file.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    #[value(alias = "C1")]
    C1,
    #[value(alias = "C")]
    C,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::from_path(path),
            (None, Some(name)) => preset(name),
            (None, None) => Err(Error::Config("no configuration given".into())),
        }
    }
}

fn output_dir(cli_out: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = cli_out.or_else(|| cfg.output.dir.clone()) {
        return dir;
    }
    let base = std::env::var_os("HARNACK_LAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new("runs").to_path_buf());
    base.join(&cfg.name)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"))
}

fn run(source: &Source, out: Option<PathBuf>, grid_scale: u32) -> Result<bool> {
    let cfg = source.load()?.refined(grid_scale as usize);
    log::info!("running '{}'", cfg.name);
    let prepared = prepare(&cfg)?;
    let exp = run_prepared(&prepared)?;
    let dir = output_dir(out, &cfg);
    let files = emit_report(&exp, &dir, cfg.output.plot)?;
    for c in &exp.report.checks {
        println!(
            "{} {:<10} margin {}  tolerance {:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fmt_opt(c.worst_margin),
            c.tolerance
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(exp.report.all_passed)
}

fn calibrate(source: &Source, target: Target, grid_scale: u32) -> Result<()> {
    let mut cfg = source.load()?.refined(grid_scale as usize);
    match target {
        Target::C1 => {
            cfg.constants.calibrate_c1 = false;
            cfg.constants.c1 = None;
            let c1 = prepare(&cfg)?.calibrate_c1()?;
            println!("c1 = {c1:e}");
        }
        Target::C => {
            cfg.constants.c = None;
            cfg.constants.calibrate_c = true;
            let c = prepare(&cfg)?.calibrate_c()?;
            println!("c = {c:e}");
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            source,
            out,
            grid_scale,
        } => {
            let ok = run(&source, out, grid_scale)?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Validate { source } => {
            let cfg = source.load()?;
            cfg.validate()?;
            println!("{}: configuration is valid", cfg.name);
            Ok(ExitCode::SUCCESS)
        }
        Command::Calibrate {
            source,
            target,
            grid_scale,
        } => {
            calibrate(&source, target, grid_scale)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset { name } => {
            let text = preset_text(&name)
                .ok_or_else(|| Error::Config(format!("unknown preset '{name}'")))?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
