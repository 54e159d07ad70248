//! Experiment runner: `cayperc run <subcommand> --config PATH`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use cayperc::error::{CayleyError, GffError, IsopError, KernelError, PercoError};
use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::output::Run;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "cayperc",
    version,
    about = "Percolation experiments on Cayley graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub action: Action,
}

#[derive(Debug, Subcommand)]
pub enum Action {
    /// Run one experiment.
    Run(RunArgs),
    /// List the available experiments.
    List,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Experiment name, e.g. `verify-blocks`.
    pub subcommand: String,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Print the resource estimate and exit.
    #[arg(long)]
    pub plan: bool,
}

fn cayley_resource(e: &CayleyError) -> bool {
    matches!(e, CayleyError::TooLarge { .. })
}

fn kernel_resource(e: &KernelError) -> bool {
    match e {
        KernelError::Overflow { .. } => true,
        KernelError::Cayley(c) => cayley_resource(c),
        _ => false,
    }
}

fn gff_resource(e: &GffError) -> bool {
    matches!(e, GffError::Kernel(k) if kernel_resource(k))
}

/// Resource errors (budgets, overflow, enumeration caps, I/O) map to exit 4;
/// everything else is a configuration problem.
pub fn is_resource(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        if let Some(e) = e.downcast_ref::<CayleyError>() {
            return cayley_resource(e);
        }
        if let Some(e) = e.downcast_ref::<KernelError>() {
            return kernel_resource(e);
        }
        if let Some(e) = e.downcast_ref::<IsopError>() {
            return match e {
                IsopError::EnumerationCap { .. } => true,
                IsopError::Cayley(c) => cayley_resource(c),
                IsopError::Kernel(k) => kernel_resource(k),
                _ => false,
            };
        }
        if let Some(e) = e.downcast_ref::<GffError>() {
            return gff_resource(e);
        }
        if let Some(e) = e.downcast_ref::<PercoError>() {
            return match e {
                PercoError::Gff(g) => gff_resource(g),
                PercoError::Cayley(c) => cayley_resource(c),
                _ => false,
            };
        }
        e.downcast_ref::<std::io::Error>().is_some()
    })
}

fn report(err: &anyhow::Error) -> i32 {
    eprintln!("error: {err:#}");
    if is_resource(err) {
        EXIT_RESOURCE
    } else {
        EXIT_CONFIG
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.action {
        Action::List => {
            for c in commands::COMMANDS {
                println!("{c}");
            }
            EXIT_OK
        }
        Action::Run(args) => run(&args),
    }
}

pub fn run(args: &RunArgs) -> i32 {
    if !commands::COMMANDS.contains(&args.subcommand.as_str()) {
        eprintln!(
            "error: unknown subcommand {:?}; expected one of {}",
            args.subcommand,
            commands::COMMANDS.join(", ")
        );
        return EXIT_CONFIG;
    }
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if let Some(w) = args.workers {
        cfg.workers = Some(w);
    }
    if let Err(e) = cfg.validate() {
        return report(&e);
    }
    if args.plan {
        return match commands::plan(&args.subcommand, &cfg) {
            Ok(p) => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&p).expect("plan serializes")
                );
                EXIT_OK
            }
            Err(e) => report(&e),
        };
    }
    let seed = cfg.seed.expect("validated");
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => return report(&anyhow::anyhow!("thread pool: {e}")),
    };
    let result = pool.install(|| -> anyhow::Result<bool> {
        let mut run = Run::new(&args.subcommand, &out, seed)?;
        let value = commands::dispatch(&args.subcommand, &cfg, &mut run)?;
        run.finish(&cfg, value)
    });
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_ASSERTION,
        Err(e) => report(&e),
    }
}
