use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use placegame_core::agent::{
    BaselineAgent, LlmConfig, RemoteLlmParser, RuleParser, SynonymTable, ENV_ENDPOINT, REQUEST_TIMEOUT,
};
use placegame_core::analysis::{LengthUnit, DEFAULT_THETA};
use placegame_core::selfplay::{BaselineAgentPolicy, Matchup};
use placegame_core::SceneCatalog;
use placegame_server::client::run_policy;
use placegame_server::llm_http::HttpCompletion;
use placegame_server::server::{serve, ServerConfig};
use placegame_server::tools;

#[derive(Parser)]
#[command(name = "placegame", version, about = "Two-player object placement game")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the game server.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Scene file or directory of scene files; built-in scenes if omitted.
        #[arg(long)]
        scenes: Option<PathBuf>,
        #[arg(long, default_value = "logs")]
        log_dir: PathBuf,
        /// Root seed; each room's seed is derived from it and the room id.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Built web client, served under /app.
        #[arg(long, default_value = "web-ui/dist")]
        static_dir: PathBuf,
    },
    /// Join a room as the baseline follower agent.
    Agent {
        #[arg(long)]
        room: String,
        #[arg(long, default_value = "127.0.0.1:8080")]
        server: String,
        #[arg(long, value_enum, default_value_t = ParserKind::Rule)]
        parser: ParserKind,
        #[arg(long, default_value = "agent")]
        name: String,
        #[arg(long)]
        scenes: Option<PathBuf>,
        /// Synonym table; built-in table if omitted.
        #[arg(long)]
        synonyms: Option<PathBuf>,
    },
    /// Classify strategies and report scores over a directory of game logs.
    Analyze {
        #[arg(long)]
        log_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        #[arg(long, default_value = "tokens")]
        length_unit: LengthUnit,
        /// JSON report path; a .txt table is written alongside.
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Play scripted matchups offline and write their logs.
    Selfplay {
        /// `<policy>:<policy>`, repeatable.
        #[arg(long = "matchup", required = true)]
        matchups: Vec<Matchup>,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        seeds: u64,
        #[arg(long, default_value = "selfplay-logs")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        #[arg(long, default_value = "tokens")]
        length_unit: LengthUnit,
        #[arg(long)]
        scenes: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ParserKind {
    Rule,
    Llm,
}

fn catalog(path: Option<&PathBuf>) -> anyhow::Result<Arc<SceneCatalog>> {
    Ok(Arc::new(match path {
        Some(p) => SceneCatalog::load(p).with_context(|| format!("loading scenes from {}", p.display()))?,
        None => SceneCatalog::builtin(),
    }))
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    match Cli::parse().command {
        Cmd::Serve {
            port,
            host,
            scenes,
            log_dir,
            seed,
            static_dir,
        } => {
            let config = ServerConfig {
                catalog: catalog(scenes.as_ref())?,
                log_dir,
                root_seed: seed,
                static_dir: Some(static_dir),
            };
            let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
            serve(listener, config).await
        }
        Cmd::Agent {
            room,
            server,
            parser,
            name,
            scenes,
            synonyms,
        } => {
            let catalog = catalog(scenes.as_ref())?;
            let synonyms = match synonyms {
                Some(p) => SynonymTable::load(&p)?,
                None => SynonymTable::default(),
            };
            let agent = match (parser, LlmConfig::from_env()) {
                (ParserKind::Llm, Some(cfg)) => {
                    let backend = HttpCompletion::new(cfg, REQUEST_TIMEOUT)?;
                    BaselineAgent::new(Box::new(RemoteLlmParser::new(backend)), catalog, synonyms)
                }
                (ParserKind::Llm, None) => {
                    tracing::warn!("{ENV_ENDPOINT} is not set; using the rule parser");
                    BaselineAgent::new(Box::new(RuleParser), catalog, synonyms)
                }
                (ParserKind::Rule, _) => BaselineAgent::new(Box::new(RuleParser), catalog, synonyms),
            };
            let outcome = run_policy(&server, &room, &name, BaselineAgentPolicy::new(agent)).await?;
            println!("{} finished; scores {:?}", outcome.player_id, outcome.scores);
            Ok(())
        }
        Cmd::Analyze {
            log_dir,
            theta,
            length_unit,
            out,
        } => {
            let table = tools::analyze(&log_dir, theta, length_unit, &out)?;
            print!("{}", table.render_text());
            Ok(())
        }
        Cmd::Selfplay {
            matchups,
            seeds,
            out,
            theta,
            length_unit,
            scenes,
        } => {
            let result = tools::selfplay(matchups, seeds, theta, length_unit, catalog(scenes.as_ref())?, &out)?;
            for s in &result.summary {
                println!(
                    "{:<32} games {:>3} aborted {:>2} diff {:.3}/{:.3} score {:.2}/{:.2}",
                    s.matchup,
                    s.games,
                    s.aborted,
                    s.mean_diff_round1,
                    s.mean_diff_round2,
                    s.mean_score_round1,
                    s.mean_score_round2
                );
            }
            println!();
            print!("{}", result.report.render_text());
            println!("logs written to {}", out.display());
            Ok(())
        }
    }
}
