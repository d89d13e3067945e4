use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use rating_core::chain::{Chain, ChainConfig, ChainStore};
use rating_core::gas::{cost_report, Calibration, OracleMode};
use rating_core::identity::IdentityHasher;
use rating_gateway::client::{ApiClient, ClientError};
use rating_gateway::config::{AuthMode, GatewayConfig, DEFAULT_CHAIN_FILE, DEFAULT_LISTEN};
use rating_gateway::service::{AuthResponse, BlockSummary, RateRequest, VoteInput};
use rating_netsim::{dump_event_logs, run_sim, Scenario};

/// Exit status when the server refuses the session.
const EXIT_UNAUTHORIZED: u8 = 3;

#[derive(Parser)]
#[command(name = "rating", version, about = "Like/dislike ratings on a small proof-of-work ledger")]
struct Cli {
    /// Gateway base URL for client commands.
    #[arg(long, global = true, env = "RATING_SERVER", default_value = "http://127.0.0.1:8080")]
    server: String,
    /// Where `auth` stores the session and other commands read it.
    #[arg(long, global = true, env = "RATING_SESSION_FILE")]
    session_file: Option<PathBuf>,
    /// Print raw JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a gateway node.
    Node {
        #[command(subcommand)]
        action: NodeAction,
    },
    /// Log in through a provider and save the session.
    Auth {
        #[arg(long)]
        provider: String,
        /// Stub credential, or the OAuth authorization code.
        #[arg(long)]
        credential: String,
    },
    /// Rate a resource.
    Rate {
        url: String,
        #[arg(long, conflicts_with = "dislike", required_unless_present = "dislike")]
        like: bool,
        #[arg(long)]
        dislike: bool,
        /// Report the gas the rating would use without submitting it.
        #[arg(long)]
        estimate: bool,
    },
    /// List rated resources with their counts.
    Resources,
    /// Show a user's ratings; defaults to the logged-in user.
    History { user_id: Option<String> },
    Chain {
        #[command(subcommand)]
        action: ChainAction,
    },
    /// Print deployment and rating costs per contract version.
    CostReport {
        /// simple, provable or chainlink; all three when omitted.
        #[arg(long, value_parser = parse_mode)]
        mode: Option<OracleMode>,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Run a gossip simulation scenario.
    Sim {
        scenario: PathBuf,
        /// Write per-node delivery logs as JSON lines.
        #[arg(long)]
        events: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum NodeAction {
    Run(NodeArgs),
}

#[derive(Subcommand)]
enum ChainAction {
    /// List blocks, from the server or straight from a chain file.
    Inspect {
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum HasherArg {
    Md5,
    Sha256Truncated,
}

#[derive(Args)]
struct NodeArgs {
    #[arg(long, env = "RATING_LISTEN", default_value = DEFAULT_LISTEN)]
    listen: SocketAddr,
    #[arg(long, env = "RATING_CHAIN_FILE", default_value = DEFAULT_CHAIN_FILE)]
    chain_file: PathBuf,
    /// Keep the chain in memory only.
    #[arg(long)]
    memory: bool,
    #[arg(long, env = "RATING_CALIBRATION")]
    calibration: Option<PathBuf>,
    #[arg(long, env = "RATING_ORACLE_MODE", value_parser = parse_mode, default_value = "simple")]
    oracle_mode: OracleMode,
    #[arg(long, env = "RATING_REGISTRY")]
    registry: Option<PathBuf>,
    #[arg(long, env = "RATING_AUTH", value_enum, default_value = "stub")]
    auth: AuthMode,
    #[arg(long, env = "RATING_FIXTURES")]
    fixtures: Option<PathBuf>,
    /// Providers to enable in oauth mode.
    #[arg(long, env = "RATING_PROVIDERS", value_delimiter = ',', default_value = "google,github,spotify")]
    providers: Vec<String>,
    #[arg(long, env = "RATING_HASHER", value_enum, default_value = "md5")]
    hasher: HasherArg,
    #[arg(long, env = "RATING_SESSION_TTL", default_value_t = rating_core::identity::DEFAULT_SESSION_TTL_SECS)]
    session_ttl: u64,
    #[arg(long, env = "RATING_AUTO_MINE", default_value_t = true, action = clap::ArgAction::Set)]
    auto_mine: bool,
    #[arg(long, env = "RATING_DIFFICULTY", default_value_t = 8)]
    difficulty: u32,
    /// Enable `POST /admin/mine`.
    #[arg(long, env = "RATING_DEV_MODE")]
    dev: bool,
    /// Origins allowed to call the API from a browser; `*` for any.
    #[arg(long = "cors-origin", env = "RATING_CORS_ORIGINS", value_delimiter = ',')]
    cors_origins: Vec<String>,
}

impl NodeArgs {
    fn config(self) -> GatewayConfig {
        GatewayConfig {
            listen: self.listen,
            chain_file: (!self.memory).then_some(self.chain_file),
            calibration: self.calibration,
            oracle_mode: self.oracle_mode,
            registry: self.registry,
            auth_mode: self.auth,
            fixtures: self.fixtures,
            oauth_providers: self.providers,
            hasher: match self.hasher {
                HasherArg::Md5 => IdentityHasher::Md5,
                HasherArg::Sha256Truncated => IdentityHasher::Sha256Truncated,
            },
            session_ttl_secs: self.session_ttl,
            auto_mine: self.auto_mine,
            difficulty: self.difficulty,
            dev_mode: self.dev,
            cors_origins: self.cors_origins,
            ..GatewayConfig::default()
        }
    }
}

fn parse_mode(s: &str) -> Result<OracleMode, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let unauthorized = e.downcast_ref::<ClientError>().and_then(ClientError::status) == Some(401);
            ExitCode::from(if unauthorized { EXIT_UNAUTHORIZED } else { 1 })
        }
    }
}

fn default_session_file() -> PathBuf {
    match std::env::var_os("HOME") {
        Some(home) => Path::new(&home).join(".rating").join("session.json"),
        None => PathBuf::from(".rating-session.json"),
    }
}

fn load_session(path: &Path) -> Option<AuthResponse> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let session_file = cli.session_file.clone().unwrap_or_else(default_session_file);
    let session = load_session(&session_file);
    let client = || ApiClient::new(&cli.server).with_token(session.as_ref().map(|s| s.session_token.clone()));

    match cli.command {
        Command::Node { action: NodeAction::Run(args) } => run_node(args.config()),
        Command::Auth { provider, credential } => {
            let resp = client().auth(&provider, &credential)?;
            if let Some(dir) = session_file.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(&session_file, serde_json::to_string(&resp)?)
                .with_context(|| format!("writing {}", session_file.display()))?;
            if cli.json {
                print_json(&resp)
            } else {
                println!("user_id {}", resp.user_id);
                println!("session saved to {}", session_file.display());
                Ok(())
            }
        }
        Command::Rate { url, like, dislike: _, estimate } => {
            let req = RateRequest { url, vote: VoteInput::Flag(like) };
            let resp = client().rate(&req, estimate)?;
            if cli.json {
                return print_json(&resp);
            }
            let r = &resp.gas_receipt;
            println!("status {}", serde_json::to_value(resp.status)?.as_str().unwrap_or_default());
            println!("resource {}", resp.resource);
            if let Some(tx) = resp.tx_id {
                println!("tx {tx}");
            }
            if let Some(h) = resp.block_height {
                println!("block {h}");
            }
            println!("branch {}", r.branch.map(|b| b.as_str()).unwrap_or("-"));
            println!("gas {} cost {}", r.gas_used, r.currency_cost);
            Ok(())
        }
        Command::Resources => {
            let rows = client().resources()?;
            if cli.json {
                return print_json(&rows);
            }
            for r in rows {
                println!("{:>6} {:>6}  {}", r.likes, r.dislikes, r.resource);
            }
            Ok(())
        }
        Command::History { user_id } => {
            let user = match user_id.or_else(|| session.as_ref().map(|s| s.user_id.to_string())) {
                Some(u) => u,
                None => anyhow::bail!("no user id given and no saved session; run `rating auth` first"),
            };
            let rows = client().history(&user)?;
            if cli.json {
                return print_json(&rows);
            }
            for r in rows {
                println!("{:<8} {}", if r.vote { "like" } else { "dislike" }, r.resource);
            }
            Ok(())
        }
        Command::Chain { action: ChainAction::Inspect { file } } => {
            let blocks = match file {
                Some(path) => inspect_file(&path)?,
                None => client().chain()?,
            };
            if cli.json {
                return print_json(&blocks);
            }
            for b in blocks {
                println!(
                    "height {} hash {} prev {} txs {} gas {} difficulty {}",
                    b.height, b.hash, b.prev_hash, b.tx_count, b.gas_used, b.difficulty
                );
            }
            Ok(())
        }
        Command::CostReport { mode, calibration, format } => {
            let calibration = match calibration {
                Some(path) => Calibration::load(&path).with_context(|| format!("loading {}", path.display()))?,
                None => Calibration::default_shipped(),
            };
            let models = match mode {
                Some(m) => vec![calibration.model(m)?],
                None => calibration.models()?,
            };
            let report = cost_report(&models, calibration.report_branch);
            match format {
                ReportFormat::Text => print!("{}", report.render_text()),
                ReportFormat::Jsonl => print!("{}", report.render_jsonl()),
            }
            Ok(())
        }
        Command::Sim { scenario, events } => {
            let scenario = Scenario::load(&scenario)?;
            let workload = scenario.workload()?;
            let submitted = workload.len();
            let report = run_sim(scenario.config, workload)?;
            if let Some(path) = events {
                std::fs::write(&path, dump_event_logs(&report)).with_context(|| format!("writing {}", path.display()))?;
            }
            let summary = serde_json::json!({
                "ticks": report.ticks,
                "quiescent": report.quiescent,
                "converged": report.converged(),
                "submitted": submitted,
                "delivered": report.delivered,
                "dropped": report.dropped,
                "nodes": report.nodes.iter().map(|n| serde_json::json!({
                    "id": n.id,
                    "height": n.height,
                    "head_hash": n.head_hash,
                    "state_digest": n.state_digest,
                    "switches": n.switches,
                    "pending_txs": n.pending_txs,
                })).collect::<Vec<_>>(),
            });
            print_json(&summary)?;
            if !(report.quiescent && report.converged()) {
                anyhow::bail!("simulation did not converge");
            }
            Ok(())
        }
    }
}

/// Reads and fully re-validates a chain file.
fn inspect_file(path: &Path) -> anyhow::Result<Vec<BlockSummary>> {
    let blocks = ChainStore::read_blocks(path)?;
    let chain = Chain::from_blocks(ChainConfig::default(), blocks)?;
    Ok(chain
        .blocks()
        .iter()
        .map(|b| BlockSummary {
            height: b.height,
            hash: b.hash(),
            prev_hash: b.prev_hash,
            tx_root: b.tx_root,
            tx_count: b.txs.len(),
            difficulty: b.difficulty,
            mined_at: b.mined_at,
            gas_used: chain.receipts(b.height).iter().map(|r| r.gas_used).sum(),
        })
        .collect())
}

fn run_node(config: GatewayConfig) -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let service = Arc::new(config.build()?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(config.listen)
            .await
            .with_context(|| format!("binding {}", config.listen))?;
        let addr = listener.local_addr()?;
        tracing::info!(%addr, height = service.height(), "listening");
        // Scripts wait for this line to learn the bound port.
        println!("listening on {addr}");
        rating_gateway::serve(listener, service, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok(())
    })
}
