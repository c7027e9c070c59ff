use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use chainlogic::counterfactual::LSetting;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod report;

use commands::{Demo, ExportFormat, Failure, SweepFormat, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "chainlogic", version, about = "Consistent-histories analysis of Hardy's two-party scenario")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON, schema 1). Defaults to equal amplitudes.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit a JSON report instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the consistency condition for the scenario's framework.
    Consistency {
        #[command(flatten)]
        common: Common,
        /// Run a built-in example family instead of the scenario.
        #[arg(long, value_enum)]
        demo: Option<DemoArg>,
    },
    /// Verify the four Hardy predictions and no-signaling.
    Hardy {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the counterfactual locality statement.
    Counterfactual {
        #[command(flatten)]
        common: Common,
        /// Left setting the statement is conditioned on.
        #[arg(long, value_enum, conflicts_with = "both")]
        setting: Option<SettingArg>,
        /// Evaluate under both left settings and report nonlocality.
        #[arg(long)]
        both: bool,
    },
    /// Sweep a one-parameter family of amplitudes.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Also maximize S4 over the sweep family (b=c if none).
        #[arg(long)]
        maximize_s4: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: SweepFormatArg,
    },
    /// Write the framework tree as DOT or JSON.
    Export {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "dot")]
        format: ExportFormatArg,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep zero-weight branches as live leaves.
        #[arg(long)]
        no_prune: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoArg {
    Xzx,
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    #[value(name = "ML1")]
    Ml1,
    #[value(name = "ML2")]
    Ml2,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepFormatArg {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormatArg {
    Dot,
    Json,
}

fn load_config(path: Option<&PathBuf>) -> Result<config::Config, Failure> {
    let mut cfg = match path {
        None => config::Config::default(),
        Some(p) => config::load(p)
            .map_err(|e| Failure::io(e.0))?
            .map_err(Failure::usage)?,
    };
    config::apply_env(&mut cfg, std::env::var(config::TOL_ENV).ok()).map_err(Failure::usage)?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<commands::Output, Failure> {
    match cli.command {
        Command::Consistency { common, demo } => {
            let cfg = load_config(common.config.as_ref())?;
            commands::consistency(&cfg, demo.map(|DemoArg::Xzx| Demo::Xzx), common.json)
        }
        Command::Hardy { common } => {
            let cfg = load_config(common.config.as_ref())?;
            commands::hardy(&cfg, common.json)
        }
        Command::Counterfactual { common, setting, both } => {
            let settings = match (setting, both) {
                (_, true) => vec![LSetting::ML1, LSetting::ML2],
                (Some(SettingArg::Ml1), false) => vec![LSetting::ML1],
                (Some(SettingArg::Ml2), false) => vec![LSetting::ML2],
                (None, false) => return Err(Failure::usage(anyhow!("counterfactual needs --setting ML1|ML2 or --both"))),
            };
            let cfg = load_config(common.config.as_ref())?;
            commands::counterfactual(&cfg, &settings, both, common.json)
        }
        Command::Sweep {
            common,
            maximize_s4,
            format,
        } => {
            let cfg = load_config(common.config.as_ref())?;
            let format = match (common.json, format) {
                (true, _) | (false, SweepFormatArg::Json) => SweepFormat::Json,
                (false, SweepFormatArg::Csv) => SweepFormat::Csv,
                (false, SweepFormatArg::Text) => SweepFormat::Text,
            };
            commands::sweep(&cfg, maximize_s4, format)
        }
        Command::Export {
            config,
            format,
            out,
            no_prune,
        } => {
            let cfg = load_config(config.as_ref())?;
            let format = match format {
                ExportFormatArg::Dot => ExportFormat::Dot,
                ExportFormatArg::Json => ExportFormat::Json,
            };
            commands::export(&cfg, format, !no_prune, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.stdout.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(commands::EXIT_IO);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
