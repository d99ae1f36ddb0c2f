use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reasonchat::nl::{evaluate_parsing, load_e2e, EmptyBackend, EvalOptions, GoldEchoBackend, LiveBackend, NlBackend};
use reasonchat::{Engine, EngineData, EngineError, EngineOptions};
use reasonchat_server::api;
use reasonchat_server::config::Config;

#[derive(Parser)]
#[command(name = "reasonchat", version, about = "Symbolic dialogue engine with an LLM at the edges")]
struct Cli {
    /// TOML file with endpoint, model, credential variable name and p_jump.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory with ontology, knowledge and mock files replacing the bundled ones.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Talk to a bot in the terminal.
    Chat(ChatArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Score a backend's parsing on an E2E-format CSV.
    Eval(EvalArgs),
    /// Rebuild a session from its event log and print it.
    Replay { log: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Concierge,
    Companion,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Mock,
    Live,
}

#[derive(Args)]
struct ChatArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    #[arg(long, value_enum, default_value = "mock")]
    backend: BackendArg,
    /// Session RNG seed; random when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Restaurant CSV to use instead of the bundled one.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Print the predicate blocks for every turn.
    #[arg(long)]
    debug: bool,
    /// Companion topic-jump probability; overrides the config file.
    #[arg(long)]
    p_jump: Option<f64>,
}

#[derive(Args)]
struct ServeArgs {
    /// Listen address, default 127.0.0.1:8080.
    #[arg(long)]
    addr: Option<String>,
    /// Where per-session event logs go; sessions found there are restored on start.
    #[arg(long)]
    log_dir: Option<PathBuf>,
    /// Restaurant CSV to use instead of the bundled one.
    #[arg(long)]
    kb: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalBackend {
    /// Answers with the gold annotation.
    Gold,
    /// Answers with nothing.
    Empty,
    Live,
}

#[derive(Args)]
struct EvalArgs {
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "live")]
    backend: EvalBackend,
    #[arg(long, default_value_t = 11)]
    shots: usize,
    #[arg(long)]
    limit: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let data_dir = cli.data_dir.clone().or(config.service.data_dir.clone());
    match cli.command {
        Command::Chat(args) => chat(&config, data_dir, args),
        Command::Serve(args) => serve(&config, data_dir, args),
        Command::Eval(args) => eval(&config, args),
        Command::Replay { log } => replay(&config, data_dir, log),
    }
}

fn engine(
    config: &Config,
    data_dir: Option<PathBuf>,
    kb: Option<PathBuf>,
    log_dir: Option<PathBuf>,
    p_jump: Option<f64>,
) -> Result<Engine, String> {
    let mut data = match data_dir {
        Some(dir) => EngineData::from_dir(&dir).map_err(|e| e.to_string())?,
        None => EngineData::bundled(),
    };
    if let Some(kb) = kb {
        data = data.with_kb(&kb).map_err(|e| e.to_string())?;
    }
    let mut rcc = config.rcc();
    if let Some(p) = p_jump {
        rcc.p_jump = p;
    }
    let options = EngineOptions { rcc, live: config.live(), log_dir, context_turns: None };
    Engine::new(data, options).map_err(|e| e.to_string())
}

fn chat(config: &Config, data_dir: Option<PathBuf>, args: ChatArgs) -> Result<(), String> {
    let engine = engine(config, data_dir, args.kb, None, args.p_jump)?;
    let task = match args.task {
        TaskArg::Concierge => "concierge",
        TaskArg::Companion => "companion",
    };
    let backend = match args.backend {
        BackendArg::Mock => "mock",
        BackendArg::Live => "live",
    };
    let info = engine.create_session(task, backend, args.seed).map_err(|e| e.to_string())?;
    if args.debug {
        println!("[session {} seed {}]", info.id, info.seed);
        if let Some(next) = &info.next {
            println!("Next:\n{next}");
        }
    }
    println!("bot> {}", info.greeting);

    let stdin = io::stdin();
    let mut out = io::stdout();
    loop {
        print!("you> ");
        out.flush().ok();
        let mut line = String::new();
        if stdin.lock().read_line(&mut line).map_err(|e| e.to_string())? == 0 {
            println!();
            return Ok(());
        }
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match engine.post_message(&info.id, text) {
            Ok(turn) => {
                if args.debug {
                    println!("Themes:\n{}", turn.themes);
                    let label = if task == "companion" { "Next" } else { "Action" };
                    println!("{label} ({}):\n{}", turn.action_kind, turn.action);
                }
                println!("bot> {}", turn.reply);
                if turn.closed {
                    return Ok(());
                }
            }
            Err(EngineError::Backend(e)) => eprintln!("[backend] {e}; try again"),
            Err(e) => return Err(e.to_string()),
        }
    }
}

fn serve(config: &Config, data_dir: Option<PathBuf>, args: ServeArgs) -> Result<(), String> {
    let log_dir = args.log_dir.or(config.service.log_dir.clone());
    let addr = args.addr.or(config.service.addr.clone()).unwrap_or_else(|| "127.0.0.1:8080".into());
    // built outside the runtime: the live client is a blocking one
    let engine = Arc::new(engine(config, data_dir, args.kb, log_dir.clone(), None)?);
    let restored = engine.recover().map_err(|e| e.to_string())?;
    if log_dir.is_none() {
        log::warn!("no --log-dir: sessions will not survive a restart");
    }
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| e.to_string())?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr).await.map_err(|e| format!("{addr}: {e}"))?;
        let local = listener.local_addr().map_err(|e| e.to_string())?;
        println!("listening on http://{local} ({restored} sessions restored)");
        io::stdout().flush().ok();
        axum::serve(listener, api::router(engine))
            .with_graceful_shutdown(async {
                tokio::signal::ctrl_c().await.ok();
            })
            .await
            .map_err(|e| e.to_string())
    })
}

fn eval(config: &Config, args: EvalArgs) -> Result<(), String> {
    let rows = load_e2e(&args.dataset).map_err(|e| e.to_string())?;
    let backend: Box<dyn NlBackend> = match args.backend {
        EvalBackend::Gold => Box::new(GoldEchoBackend::new(rows.iter().map(|r| (r.text.clone(), r.gold_text())))),
        EvalBackend::Empty => Box::new(EmptyBackend),
        EvalBackend::Live => {
            let cfg = config.live().ok_or("live evaluation needs [backend] endpoint in --config")?;
            Box::new(LiveBackend::new(&cfg).map_err(|e| e.to_string())?)
        }
    };
    let opts = EvalOptions { shots: args.shots, limit: args.limit };
    let report = evaluate_parsing(&args.dataset, backend.as_ref(), opts).map_err(|e| e.to_string())?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| e.to_string())?,
        None => emit(&json)?,
    }
    eprintln!("accuracy {:.4} ({}/{})", report.accuracy, report.correct, report.rows);
    Ok(())
}

fn replay(config: &Config, data_dir: Option<PathBuf>, log: PathBuf) -> Result<(), String> {
    let engine = engine(config, data_dir, None, None, None)?;
    let session = engine.replay(&log).map_err(|e| e.to_string())?;
    let mut text = String::new();
    for t in session.transcript() {
        text += &format!("{:?}: {}\n", t.speaker, t.text);
        if !t.predicates.is_empty() {
            text += &format!("    {}\n", t.predicates.replace('\n', "\n    "));
        }
    }
    text += &format!("digest {}", session.digest());
    emit(&text)
}

/// Prints to stdout; a reader that went away (`| head`) is not an error.
fn emit(text: &str) -> Result<(), String> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
        _ => Ok(()),
    }
}
