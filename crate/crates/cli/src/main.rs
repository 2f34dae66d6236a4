//! `skilltree`: ingest skill libraries, run adaptation queries, evolve the
//! registries on a task split and run the simulation harnesses.
//!
//! Exit status: 0 success, 2 usage, 3 config, 4 data, 5 provider.

mod commands;
mod http;
mod providers;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skilltree_core::io::{write_atomic, ProviderKind, RunConfig};

use commands::{CliError, Context, Harness, CONFIG_FILE};

#[derive(Debug, Parser)]
#[command(name = "skilltree", version, about = "Hierarchical skill retrieval, adaptation and registry evolution")]
struct Cli {
    /// Run config (TOML). Defaults to ./skilltree.toml when present.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Selects mock or http for every provider role.
    #[arg(long, global = true, value_parser = parse_provider, value_name = "mock|http")]
    provider: Option<ProviderKind>,
    /// Output location: a directory for `init` and `simulate`, a registry
    /// file for `ingest` and `evolve`.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a default config and an empty registry.
    Init {
        #[arg(long)]
        force: bool,
    },
    /// Build a graph from a skills file, validate it and save the registry.
    Ingest { skills: PathBuf },
    /// Adapt the library to one query and print context and trace as JSON.
    Query {
        text: String,
        /// Token substitution applied by the default writer.
        #[arg(long = "sub", value_name = "FROM=TO")]
        subs: Vec<String>,
    },
    /// Evolve the registries on a split file and save the result.
    Evolve {
        split: PathBuf,
        #[arg(long)]
        select_on_validation: bool,
    },
    /// Print a unit, its edges and subtree statistics.
    Inspect { id: String },
    /// Run a simulation harness and emit CSV plus a summary.
    Simulate {
        #[arg(value_enum)]
        which: Harness,
    },
}

fn parse_provider(s: &str) -> Result<ProviderKind, String> {
    s.parse()
}

fn load_context(cli: &Cli) -> Result<Context, CliError> {
    let (mut cfg, base) = match &cli.config {
        Some(p) => (RunConfig::load(p)?, parent_dir(p)),
        None if Path::new(CONFIG_FILE).exists() => (RunConfig::load(Path::new(CONFIG_FILE))?, PathBuf::from(".")),
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.sim.seed = seed;
    }
    if let Some(kind) = cli.provider {
        cfg.providers.set_all(kind);
    }
    cfg.validate()?;
    Ok(Context {
        cfg,
        base,
        out: cli.out.clone(),
    })
}

fn parent_dir(p: &Path) -> PathBuf {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    if let Command::Init { force } = &cli.command {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
        return commands::init(&dir, *force);
    }
    let ctx = load_context(cli)?;
    match &cli.command {
        Command::Init { .. } => unreachable!("handled above"),
        Command::Ingest { skills } => commands::ingest(&ctx, skills),
        Command::Query { text, subs } => commands::query(&ctx, text, subs),
        Command::Evolve {
            split,
            select_on_validation,
        } => commands::evolve_cmd(&ctx, split, *select_on_validation, ctx.cfg.seed),
        Command::Inspect { id } => commands::inspect(&ctx, id),
        Command::Simulate { which } => {
            let out = commands::simulate(&ctx.cfg.sim, *which)?;
            match &ctx.out {
                Some(dir) => {
                    for (name, csv) in &out.tables {
                        write_atomic(&dir.join(name), csv.as_bytes()).map_err(|e| CliError::Data(e.to_string()))?;
                    }
                    write_atomic(&dir.join("summary.txt"), out.summary.as_bytes())
                        .map_err(|e| CliError::Data(e.to_string()))?;
                    Ok(out.summary)
                }
                None => {
                    eprint!("{}", out.summary);
                    Ok(out
                        .tables
                        .iter()
                        .map(|(_, csv)| csv.as_str())
                        .collect::<Vec<_>>()
                        .join("\n"))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|()| stdout.flush()).is_err() {
                return ExitCode::from(commands::EXIT_DATA);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("skilltree: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
