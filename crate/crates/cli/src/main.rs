use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use roomsmith::agents::DesignRequest;
use roomsmith::compose::ReplayOverrides;
use roomsmith_cli::commands::{self, RunOutcome, EXIT_SOLVED};
use roomsmith_cli::config::DEFAULT_CONFIG;
use roomsmith_cli::{server, CliError, RunConfig, Services};

/// Text-to-layout interior scene synthesis.
///
/// Exit codes: 0 solved, 1 other error, 2 layout unsatisfiable, 3 an agent
/// stage failed (backend or schema), 4 configuration error.
#[derive(Debug, Parser)]
#[command(name = "roomsmith", version)]
struct Cli {
    /// Config file. Defaults to ./roomsmith.toml when it exists.
    #[arg(long, short, global = true, env = "ROOMSMITH_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline for a design brief and write a bundle.
    Design(DesignArgs),
    /// Solve a pre-authored scene-graph document and write a bundle.
    Solve {
        /// Scene-graph JSON document.
        graph: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Re-run a stage and everything after it as a new bundle version.
    Replay {
        /// Bundle version directory, e.g. designs/d0123456789ab/v1.
        bundle: PathBuf,
        /// designer, architect, engineer, correct_graph, solve_layout,
        /// retrieve_assets or compose.
        #[arg(long)]
        stage: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Use an asset for a node, as NODE=ASSET. Repeatable.
        #[arg(long = "asset", value_name = "NODE=ASSET")]
        assets: Vec<String>,
        /// Replacement scene-graph document (solve_layout or later).
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Compute metrics over bundles, design directories or manifest files.
    Evaluate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Also grade each scene with the configured vision model.
        #[arg(long)]
        rate: bool,
        /// Write the report here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Asset index tools.
    Index {
        #[command(subcommand)]
        command: IndexCommand,
    },
    /// Nearest assets to a free-text description.
    Search {
        query: String,
        #[arg(short, default_value_t = 5)]
        k: usize,
    },
    /// Run the HTTP service.
    Serve {
        /// Listen address; overrides service.addr.
        #[arg(long)]
        addr: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum IndexCommand {
    /// Embed a catalog JSON file and write an index.
    Build {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Solver seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Bundle root; overrides out_root.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DesignArgs {
    /// The design brief.
    #[arg(long, conflicts_with_all = ["prompt_file", "request"])]
    prompt: Option<String>,
    #[arg(long, conflicts_with = "request")]
    prompt_file: Option<PathBuf>,
    /// Room size W,D,H in meters.
    #[arg(long, conflicts_with = "request")]
    room: Option<String>,
    /// Number of distinct objects to ask for.
    #[arg(long, short = 'n', conflicts_with = "request")]
    objects: Option<usize>,
    /// A request.json document instead of the three flags above.
    #[arg(long)]
    request: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        context: path.display().to_string(),
        source: e,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p),
        None if Path::new(DEFAULT_CONFIG).is_file() => RunConfig::load(Path::new(DEFAULT_CONFIG)),
        None => Ok(RunConfig::default()),
    }
}

fn apply(config: &mut RunConfig, run: &RunArgs) {
    if run.seed.is_some() {
        config.seed = run.seed;
    }
    if let Some(out) = &run.out {
        config.out_root = out.clone();
    }
}

fn design_request(args: &DesignArgs) -> Result<DesignRequest, CliError> {
    if let Some(path) = &args.request {
        return read_json(path);
    }
    let user_text = match (&args.prompt, &args.prompt_file) {
        (Some(p), _) => p.clone(),
        (None, Some(path)) => read_text(path)?,
        (None, None) => return Err(CliError::Input("give --prompt, --prompt-file or --request".into())),
    };
    let room = commands::parse_room(args.room.as_deref().ok_or_else(|| CliError::Input("--room is required".into()))?)?;
    let object_count = args.objects.ok_or_else(|| CliError::Input("-n/--objects is required".into()))?;
    Ok(DesignRequest {
        user_text,
        room,
        object_count,
    })
}

fn report(outcome: &RunOutcome) -> i32 {
    println!("{}", outcome.dir.display());
    match &outcome.failure {
        Some(f) => eprintln!("{:?} at {}: {}", outcome.status, f.stage, f.message),
        None => eprintln!("{:?}", outcome.status),
    }
    outcome.exit_code()
}

fn print_json<T: serde::Serialize>(value: &T, output: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            context: path.display().to_string(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Design(args) => {
            apply(&mut config, &args.run);
            let request = design_request(&args)?;
            let services = Services::from_config(&config)?;
            Ok(report(&commands::design(&config, &services, &request)?))
        }
        Command::Solve { graph, run } => {
            apply(&mut config, &run);
            let doc: Value = read_json(&graph)?;
            let services = Services::from_config(&config)?;
            Ok(report(&commands::solve(&config, &services, &doc)?))
        }
        Command::Replay {
            bundle,
            stage,
            seed,
            assets,
            graph,
        } => {
            let overrides = ReplayOverrides {
                seed,
                assets: commands::parse_asset_overrides(&assets)?,
                graph: graph.as_deref().map(read_json).transpose()?,
            };
            let services = Services::from_config(&config)?;
            Ok(report(&commands::replay(&services, &bundle, &stage, &overrides)?))
        }
        Command::Evaluate { inputs, rate, output } => {
            let services = Services::from_config(&config)?;
            let metrics = commands::evaluate(&services, &config, &inputs, rate)?;
            print_json(&metrics, output.as_deref())?;
            Ok(EXIT_SOLVED)
        }
        Command::Index {
            command: IndexCommand::Build { catalog, output },
        } => {
            config.index = None;
            let services = Services::from_config(&config)?;
            let index = commands::build_index(&catalog, services.embedder.as_ref(), &output)?;
            eprintln!("{} assets, dim {}, {}", index.len(), index.dim(), index.checksum());
            Ok(EXIT_SOLVED)
        }
        Command::Search { query, k } => {
            let services = Services::from_config(&config)?;
            let index = services
                .index
                .as_ref()
                .ok_or_else(|| CliError::Config("no index in the config".into()))?;
            let hits = commands::search(index, services.embedder.as_ref(), &query, k)?;
            print_json(&hits, None)?;
            Ok(EXIT_SOLVED)
        }
        Command::Serve { addr } => {
            if let Some(addr) = addr {
                config.service.addr = addr;
            }
            let services = Services::from_config(&config)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io {
                context: "tokio runtime".into(),
                source: e,
            })?;
            runtime
                .block_on(server::serve(config, services))
                .map_err(|e| CliError::Io {
                    context: "serve".into(),
                    source: e,
                })?;
            Ok(EXIT_SOLVED)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("ROOMSMITH_LOG").unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn arguments_are_consistent() {
        Cli::command().debug_assert();
    }
}
