use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use tsmc::error::{Error, Result};
use tsmc::io::{execute, parse_config};

#[derive(Parser)]
#[command(name = "tsmc", version, about = "Transformation SMC for mixtures and coalescent trees")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Log evidence of Gaussian mixtures with 1..=tmax components.
    GmmEvidence {
        /// Observations, one number per line.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long = "move", value_name = "birth|split")]
        move_kind: Option<String>,
        #[arg(long, value_name = "conditional|marginal")]
        mode: Option<String>,
        #[arg(long, value_name = "K")]
        tmax: Option<usize>,
        #[arg(long, value_name = "covariance|acceptance")]
        scheme: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Sequential coalescent inference, adding one sequence per stage.
    CoalescentOnline {
        /// FASTA or sequential PHYLIP alignment.
        #[arg(long)]
        alignment: Option<PathBuf>,
        #[arg(long, value_name = "nearest|furthest")]
        ordering: Option<String>,
        #[arg(long = "lineage-power", value_name = "0|1|2|4")]
        lineage_power: Option<String>,
        #[arg(long, value_name = "laplace|exp1")]
        height: Option<String>,
        /// Subtree prune-and-regraft moves per MCMC sweep.
        #[arg(long, value_name = "N")]
        spr: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_name = "P")]
    particles: Option<usize>,
    /// Resampling threshold as a fraction of P.
    #[arg(long, value_name = "A")]
    alpha: Option<f64>,
    /// Conditional ESS target as a fraction of P.
    #[arg(long, value_name = "B")]
    beta: Option<f64>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Order-independent reductions and untimed CSV output.
    #[arg(long, value_name = "BOOL")]
    deterministic: Option<bool>,
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
}

fn push<T: ToString>(out: &mut Vec<(String, String)>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        out.push((key.to_string(), v.to_string()));
    }
}

fn overrides(cli: Cli) -> (Option<PathBuf>, Vec<(String, String)>) {
    let mut o = Vec::new();
    let common = match cli.command {
        Commands::GmmEvidence {
            data,
            move_kind,
            mode,
            tmax,
            scheme,
            common,
        } => {
            push(&mut o, "command", Some("gmm-evidence"));
            push(&mut o, "data_path", data.map(|p| p.display().to_string()));
            push(&mut o, "move", move_kind);
            push(&mut o, "weight_mode", mode);
            push(&mut o, "t_max", tmax);
            push(&mut o, "mcmc_scheme", scheme);
            common
        }
        Commands::CoalescentOnline {
            alignment,
            ordering,
            lineage_power,
            height,
            spr,
            common,
        } => {
            push(&mut o, "command", Some("coalescent-online"));
            push(&mut o, "data_path", alignment.map(|p| p.display().to_string()));
            push(&mut o, "ordering", ordering);
            push(&mut o, "lineage_power", lineage_power);
            push(&mut o, "height_kind", height);
            push(&mut o, "spr_moves", spr);
            common
        }
    };
    push(&mut o, "particles", common.particles);
    push(&mut o, "resample_threshold", common.alpha);
    push(&mut o, "cess_target", common.beta);
    push(&mut o, "seed", common.seed);
    push(&mut o, "deterministic", common.deterministic);
    push(&mut o, "output_dir", common.output.map(|p| p.display().to_string()));
    (common.config, o)
}

fn run(cli: Cli) -> Result<()> {
    let (config_path, overrides) = overrides(cli);
    let text = match &config_path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?,
        None => String::new(),
    };
    let config = parse_config(&text, &overrides)?;
    let outcome = execute(&config)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            if e.is_numeric() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
