//! `oht` command line. JSON goes to stdout, diagnostics to stderr.
//! Exit codes: 0 success, 1 domain error, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use oht_core::corpus::{corpus_stats, load_corpus};
use oht_core::search::{execute_search, parse_query};
use oht_core::wordcloud::build_word_cloud;
use serde::Serialize;

use crate::config::{Config, DEFAULT_PAGE_SIZE, DEFAULT_PORT, DEFAULT_WORDCLOUD_K};
use crate::state::startup;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "oht", version, about = "Explore oral history interview collections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CorpusArgs {
    /// Directory holding interview documents.
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    /// Facet schema file [default: <corpus>/facets.json]
    #[arg(long, value_name = "FILE")]
    schema: Option<PathBuf>,
}

impl CorpusArgs {
    fn schema_path(&self) -> PathBuf {
        self.schema.clone().unwrap_or_else(|| self.corpus.join("facets.json"))
    }
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Directory for workspaces and the annotation log.
    #[arg(long, value_name = "DIR", env = "OHT_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct QueryArgs {
    /// Free-text query; empty matches everything.
    #[arg(short, long, default_value = "")]
    query: String,
    /// Facet filter as facet:value, repeatable.
    #[arg(short = 'f', long = "filter", value_name = "FACET:VALUE")]
    filters: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every interview document and report rejects.
    Validate {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Print collection statistics.
    Stats {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Run a ranked, faceted search.
    Search {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = 1)]
        page: usize,
        #[arg(long, default_value_t = DEFAULT_PAGE_SIZE)]
        size: usize,
    },
    /// Compute the word cloud for a query scope.
    Wordcloud {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(short, default_value_t = DEFAULT_WORDCLOUD_K)]
        k: usize,
    },
    /// Print a workspace export manifest.
    Export {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        data: DataArgs,
        /// Workspace id.
        #[arg(long)]
        workspace: String,
    },
    /// Serve the HTTP API.
    Serve {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        /// Static client bundle to serve under /.
        #[arg(long, value_name = "DIR")]
        ui_dir: Option<PathBuf>,
    },
}

fn config(corpus: &CorpusArgs, data: &DataArgs) -> Config {
    let mut config = Config::new(&corpus.corpus, &data.data_dir);
    config.schema_path = corpus.schema_path();
    config
}

type DomainResult = Result<(), Box<dyn std::error::Error>>;

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> DomainResult {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_cli_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
            return code;
        }
    };
    match run(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DOMAIN
        }
    }
}

fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Box<dyn std::error::Error>> {
    match command {
        Command::Validate { corpus } => {
            let report = load_corpus(&corpus.corpus, &corpus.schema_path())?;
            for r in &report.rejected {
                writeln!(err, "{}: {}", r.path.display(), r.reason)?;
            }
            print_json(
                out,
                &serde_json::json!({ "valid": report.corpus.len(), "rejected": report.rejected }),
            )?;
            Ok(if report.rejected.is_empty() { EXIT_OK } else { EXIT_DOMAIN })
        }
        Command::Stats { corpus } => {
            let report = load_corpus(&corpus.corpus, &corpus.schema_path())?;
            for r in &report.rejected {
                writeln!(err, "warning: skipped {}: {}", r.path.display(), r.reason)?;
            }
            print_json(out, &corpus_stats(&report.corpus))?;
            Ok(EXIT_OK)
        }
        Command::Search { corpus, data, query, page, size } => {
            let state = startup(config(&corpus, &data))?;
            let index = state.index();
            let q = parse_query(&query.query, &query.filters, index.options(), index.corpus().facet_schema())?;
            print_json(out, &execute_search(&index, &q, page, size)?)?;
            Ok(EXIT_OK)
        }
        Command::Wordcloud { corpus, data, query, k } => {
            if k == 0 {
                return Err("k must be at least 1".into());
            }
            let state = startup(config(&corpus, &data))?;
            let index = state.index();
            let q = parse_query(&query.query, &query.filters, index.options(), index.corpus().facet_schema())?;
            print_json(out, &build_word_cloud(&index, &q, k))?;
            Ok(EXIT_OK)
        }
        Command::Export { corpus, data, workspace } => {
            let state = startup(config(&corpus, &data))?;
            let manifest = state.store().export_workspace(state.corpus(), &workspace)?;
            print_json(out, &manifest)?;
            Ok(EXIT_OK)
        }
        Command::Serve { corpus, data, port, ui_dir } => {
            let _ = tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
                )
                .with_writer(std::io::stderr)
                .try_init();
            let mut config = config(&corpus, &data);
            config.port = port;
            config.ui_dir = ui_dir;
            let state = startup(config)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(state))?;
            Ok(EXIT_OK)
        }
    }
}

async fn serve(state: crate::state::AppState) -> std::io::Result<()> {
    let addr = SocketAddr::from(([0, 0, 0, 0], state.config().port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, crate::api::router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
