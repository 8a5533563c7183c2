use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use tokio::net::TcpListener;

use semscope_client::Client;
use semscope_core::corpus::load_corpus;
use semscope_core::store::Workspace;
use semscope_core::{Corpus, PipelineConfig};

#[derive(Parser)]
#[command(name = "semscope", version, about = "Classify an article corpus by keywords, citations and topics")]
struct Cli {
    /// Workspace directory holding corpora and snapshots.
    #[arg(long, global = true, default_value = "workspace")]
    workspace: PathBuf,
    /// Master seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config file; absent keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Service base URL.
    #[arg(long, global = true, default_value = "http://127.0.0.1:7878")]
    server: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate CSV inputs and store them as a corpus in the workspace.
    Ingest {
        #[arg(long)]
        articles: PathBuf,
        #[arg(long)]
        citations: Option<PathBuf>,
        /// Corpus name; defaults to the articles file stem.
        #[arg(long)]
        name: Option<String>,
    },
    /// Ask the service to run the full analysis on a corpus.
    Run {
        /// Corpus name in the workspace, or a path to a corpus JSON file.
        corpus: String,
    },
    /// Start the HTTP service on the given workspace.
    Serve {
        #[arg(long, default_value = semscope_service::DEFAULT_ADDR)]
        addr: String,
    },
    /// Fetch one snapshot resource, e.g. `networks/keywords`.
    Export {
        snapshot: String,
        resource: String,
        /// Query parameters as key=value.
        #[arg(long = "param", short = 'p')]
        params: Vec<String>,
        /// Write to a file instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// List stored snapshots.
    ListSnapshots,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn resolve_corpus(workspace: &Workspace, corpus: &str) -> Result<Corpus> {
    let path = PathBuf::from(corpus);
    if path.is_file() {
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(Corpus::from_json(&text)?);
    }
    workspace
        .load_corpus(corpus)
        .with_context(|| format!("no corpus file or workspace corpus named `{corpus}`"))
}

fn parse_params(params: &[String]) -> Result<BTreeMap<String, String>> {
    params
        .iter()
        .map(|p| match p.split_once('=') {
            Some((k, v)) => Ok((k.to_string(), v.to_string())),
            None => bail!("parameter `{p}` is not key=value"),
        })
        .collect()
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Ingest { articles, citations, name } => {
            let corpus = load_corpus(articles, citations.as_deref())?;
            let name = match name {
                Some(n) => n.clone(),
                None => articles
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .context("articles path has no file name")?,
            };
            let workspace = Workspace::open(&cli.workspace)?;
            let path = workspace.save_corpus(&name, &corpus)?;
            for warning in &corpus.provenance.warnings {
                eprintln!("warning: {warning}");
            }
            println!(
                "{name}: {} articles, {} citation records -> {}",
                corpus.articles.len(),
                corpus.citations.len(),
                path.display()
            );
        }
        Command::Run { corpus } => {
            let config = load_config(&cli)?;
            let workspace = Workspace::open(&cli.workspace)?;
            let corpus = resolve_corpus(&workspace, corpus)?;
            let client = Client::new(&cli.server)?;
            let run = client.run(&corpus, &config).await?;
            for line in &run.meta.log {
                eprintln!("{line}");
            }
            println!("{}", run.snapshot_id);
        }
        Command::Serve { addr } => {
            let workspace = Workspace::open(&cli.workspace)?;
            let listener = TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
            semscope_service::serve(listener, workspace, async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        }
        Command::Export {
            snapshot,
            resource,
            params,
            out,
        } => {
            let client = Client::new(&cli.server)?;
            let value = client.get(snapshot, resource, &parse_params(params)?).await?;
            let text = serde_json::to_string_pretty(&value)?;
            match out {
                Some(path) => std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => println!("{text}"),
            }
        }
        Command::ListSnapshots => {
            let client = Client::new(&cli.server)?;
            for meta in client.list_snapshots().await? {
                let skipped: Vec<&str> = meta
                    .modules
                    .iter()
                    .filter(|(_, s)| s.as_str() != "computed")
                    .map(|(m, _)| m.as_str())
                    .collect();
                let note = if skipped.is_empty() {
                    String::new()
                } else {
                    format!("  (skipped: {})", skipped.join(", "))
                };
                println!("{}  {}{note}", meta.snapshot_id, meta.created_at);
            }
        }
    }
    Ok(())
}
