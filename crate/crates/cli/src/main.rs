use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pamfk_cli::commands::{self, RunError};
use pamfk_cli::config::ExperimentConfig;
use pamfk_cli::output::{write_outputs, Report, Summary};

#[derive(Parser)]
#[command(
    name = "pamfk",
    version,
    about = "Feynman–Kac moments of the mollified parabolic Anderson model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (TOML, dotted keys).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "PAMFK_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    LemmaCheck(Common),
    FkMoment(Common),
    LimitMoment(Common),
    ExpMoment(Common),
    IltProps(Common),
    Xval(Common),
    Explosion(Common),
}

type Runner = fn(&ExperimentConfig) -> Result<Report, RunError>;

impl Command {
    fn split(&self) -> (&'static str, &Common, Runner) {
        match self {
            Command::LemmaCheck(c) => ("lemma-check", c, commands::lemma_check),
            Command::FkMoment(c) => ("fk-moment", c, commands::fk_moment),
            Command::LimitMoment(c) => ("limit-moment", c, commands::limit_moment),
            Command::ExpMoment(c) => ("exp-moment", c, commands::exp_moment),
            Command::IltProps(c) => ("ilt-props", c, commands::ilt_props),
            Command::Xval(c) => ("xval", c, commands::xval),
            Command::Explosion(c) => ("explosion", c, commands::explosion),
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_FAILED: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common, run) = cli.command.split();

    let (mut cfg, text) = match ExperimentConfig::from_file(&common.config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("pamfk: config error: {}", e.0);
            if let Some(dir) = &common.out {
                let text = std::fs::read_to_string(&common.config).unwrap_or_default();
                let summary = Summary::from_error(name, common.seed.unwrap_or(0), "config", e.0);
                if let Err(e) = write_outputs(dir, None, &summary, &text) {
                    eprintln!("pamfk: cannot write to {}: {e}", dir.display());
                }
            }
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    // --out, then output_dir, then ./results/<subcommand>.
    let out_dir = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results").join(name));
    if let Some(k) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("pamfk: cannot start thread pool: {e}");
        }
    }

    let outcome = run(&cfg);
    let (summary, table, code) = match &outcome {
        Ok(r) => {
            let code = if r.passed() { 0 } else { EXIT_FAILED };
            (Summary::from_report(name, cfg.master_seed, r), Some(&r.table), code)
        }
        Err(RunError::Config(m)) => {
            eprintln!("pamfk: {m}");
            (
                Summary::from_error(name, cfg.master_seed, "config", m.clone()),
                None,
                EXIT_CONFIG,
            )
        }
        Err(RunError::Numerical(m)) => {
            eprintln!("pamfk: {m}");
            (
                Summary::from_error(name, cfg.master_seed, "numerical", m.clone()),
                None,
                EXIT_NUMERICAL,
            )
        }
    };
    if let Err(e) = write_outputs(&out_dir, table, &summary, &text) {
        eprintln!("pamfk: cannot write to {}: {e}", out_dir.display());
        return ExitCode::from(EXIT_NUMERICAL);
    }
    if let Ok(r) = &outcome {
        for (k, v) in &r.verdicts {
            println!("{k}: {}", if *v { "pass" } else { "FAIL" });
        }
    }
    ExitCode::from(code)
}
