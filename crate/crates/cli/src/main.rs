use std::fmt::Display;
use std::fs;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use prosodyeval::expdesign::{load_renditions, FamiliarizationItem};
use prosodyeval::metrics::load_records;
use prosodyeval::simulate::simulate_into_store;
use prosodyeval::{
    analyze, build_plan, generate_qa_stimuli, load_text_items, Collector, ExperimentPlan, Lexicon,
    Rendition, SimProfile, TaskConfig, TextMode,
};
use prosodyeval_cli::client::simulate_http;
use prosodyeval_cli::server::{router, AppState};

/// Word-level prosody error marking tests: stimuli, designs, collection and analysis.
#[derive(Parser)]
#[command(name = "prosodyeval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    MosOnly,
    Augmented,
}

#[derive(Clone, Copy, ValueEnum)]
enum TextModeArg {
    Audiobook,
    Dialogue,
}

#[derive(Subcommand)]
enum Command {
    /// Generate question-answer stimuli with controlled focus position.
    GenStimuli {
        /// Lexicon JSON ({"subjects": [...], "verbs": [[base, past], ...], "objects": [...]}).
        /// Defaults to the built-in English lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Stimuli per (structure, focus position) cell.
        #[arg(long, default_value_t = 10)]
        per_position: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output JSON file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a Latin-square experiment plan.
    Design(DesignArgs),
    /// Run the collection server.
    Serve {
        /// Experiment plan JSON.
        #[arg(long)]
        experiment: PathBuf,
        /// Directory that audio_ref paths are relative to.
        #[arg(long)]
        audio_dir: PathBuf,
        /// Store directory for the session and response logs.
        #[arg(long)]
        store: PathBuf,
        #[arg(long, env = "PROSODYEVAL_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Token required in X-Admin-Token for exports.
        #[arg(long, env = "PROSODYEVAL_ADMIN_TOKEN", hide_env_values = true)]
        admin_token: String,
        /// Built web client served under /app.
        #[arg(long)]
        app_dir: Option<PathBuf>,
    },
    /// Run scripted participants against a server or straight into a store.
    Simulate {
        #[arg(long)]
        experiment: PathBuf,
        /// Base URL of a running server.
        #[arg(long, conflicts_with = "store", required_unless_present = "store")]
        url: Option<String>,
        /// Store directory to write directly.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        participants: usize,
        /// Profile JSON; defaults to graded system scores.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Compute the report for a response log.
    Analyze {
        #[arg(long)]
        experiment: PathBuf,
        /// Response log (JSONL) or a store directory containing responses.jsonl.
        #[arg(long)]
        responses: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Invalid(String),
    Internal(String),
}

fn invalid(e: impl Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn internal(e: impl Display) -> Failure {
    Failure::Internal(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenStimuli {
            lexicon,
            per_position,
            seed,
            out,
        } => gen_stimuli(lexicon.as_deref(), per_position, seed, &out),
        Command::Design(args) => design(args),
        Command::Serve {
            experiment,
            audio_dir,
            store,
            port,
            host,
            admin_token,
            app_dir,
        } => serve(
            &experiment,
            audio_dir,
            &store,
            &host,
            port,
            admin_token,
            app_dir,
        ),
        Command::Simulate {
            experiment,
            url,
            store,
            participants,
            profile,
            seed,
        } => simulate(
            &experiment,
            url,
            store,
            participants,
            profile.as_deref(),
            seed,
        ),
        Command::Analyze {
            experiment,
            responses,
            out,
        } => analyze_cmd(&experiment, &responses, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn write_output(path: &Path, content: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(internal)?;
    }
    fs::write(path, content).map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn gen_stimuli(
    lexicon: Option<&Path>,
    per_position: usize,
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    let lexicon = match lexicon {
        Some(p) => Lexicon::from_json(&read_input(p)?).map_err(invalid)?,
        None => Lexicon::default_english(),
    };
    let stimuli = generate_qa_stimuli(&lexicon, per_position, seed).map_err(invalid)?;
    let json = serde_json::to_string_pretty(&stimuli).map_err(internal)?;
    write_output(out, &(json + "\n"))?;
    eprintln!("wrote {} stimuli to {}", stimuli.len(), out.display());
    Ok(())
}

#[derive(Args)]
struct DesignArgs {
    /// Texts: JSON array of items or stimuli, or one transcript per line.
    #[arg(long)]
    texts: PathBuf,
    #[arg(long, value_enum, default_value = "audiobook")]
    text_mode: TextModeArg,
    /// Comma-separated system ids.
    #[arg(long, value_delimiter = ',', required = true)]
    systems: Vec<String>,
    /// JSON array of {text_id, system_id, audio_ref}, or a path pattern
    /// containing {text_id} and {system_id}.
    #[arg(long)]
    audio_map: String,
    /// With a pattern audio map, require every generated file to exist here.
    #[arg(long)]
    audio_dir: Option<PathBuf>,
    #[arg(long)]
    groups: usize,
    #[arg(long, value_enum, default_value = "augmented")]
    mode: ModeArg,
    /// JSON array of {audio_ref, transcript, explanation} shown before the test.
    #[arg(long)]
    familiarization: Option<PathBuf>,
    #[arg(long, default_value = "experiment")]
    experiment_id: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output plan JSON file.
    #[arg(long)]
    out: PathBuf,
}

fn design(args: DesignArgs) -> Result<(), Failure> {
    let text_mode = match args.text_mode {
        TextModeArg::Audiobook => TextMode::Audiobook,
        TextModeArg::Dialogue => TextMode::Dialogue,
    };
    let texts = load_text_items(&args.texts, text_mode)
        .map_err(|e| invalid(format!("{}: {e}", args.texts.display())))?;
    let systems: Vec<String> = args
        .systems
        .iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();

    let renditions =
        if args.audio_map.contains("{text_id}") || args.audio_map.contains("{system_id}") {
            let mut out = Vec::new();
            for t in &texts {
                for s in &systems {
                    let audio_ref = args
                        .audio_map
                        .replace("{text_id}", &t.id)
                        .replace("{system_id}", s);
                    if let Some(dir) = &args.audio_dir {
                        if !dir.join(&audio_ref).is_file() {
                            return Err(invalid(format!(
                                "missing rendition for text {:?} on system {:?}: {} not found",
                                t.id,
                                s,
                                dir.join(&audio_ref).display()
                            )));
                        }
                    }
                    out.push(Rendition {
                        text_id: t.id.clone(),
                        system_id: s.clone(),
                        audio_ref,
                    });
                }
            }
            out
        } else {
            load_renditions(Path::new(&args.audio_map))
                .map_err(|e| invalid(format!("{}: {e}", args.audio_map)))?
        };

    let task = match args.mode {
        ModeArg::MosOnly => {
            if args.familiarization.is_some() {
                return Err(invalid("--familiarization only applies to augmented tasks"));
            }
            TaskConfig::mos_only()
        }
        ModeArg::Augmented => {
            let items: Vec<FamiliarizationItem> = match &args.familiarization {
                Some(p) => serde_json::from_str(&read_input(p)?)
                    .map_err(|e| invalid(format!("{}: {e}", p.display())))?,
                None => Vec::new(),
            };
            TaskConfig::augmented(items)
        }
    };

    let plan = build_plan(
        &args.experiment_id,
        texts,
        systems,
        renditions,
        args.groups,
        task,
        args.seed,
    )
    .map_err(invalid)?;
    write_output(&args.out, &plan.to_json_pretty())?;
    eprintln!(
        "wrote plan with {} groups of {} pages to {}",
        plan.n_groups,
        plan.pages_per_group(),
        args.out.display()
    );
    Ok(())
}

fn load_plan(path: &Path) -> Result<ExperimentPlan, Failure> {
    ExperimentPlan::load(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn serve(
    experiment: &Path,
    audio_dir: PathBuf,
    store: &Path,
    host: &str,
    port: u16,
    admin_token: String,
    app_dir: Option<PathBuf>,
) -> Result<(), Failure> {
    let plan = load_plan(experiment)?;
    if admin_token.is_empty() {
        return Err(invalid("admin token must not be empty"));
    }
    let audio_refs = plan.renditions.iter().map(|r| r.audio_ref.as_str()).chain(
        plan.task
            .familiarization_items
            .iter()
            .map(|f| f.audio_ref.as_str()),
    );
    let missing: Vec<&str> = audio_refs
        .filter(|r| !audio_dir.join(r).is_file())
        .collect();
    if !missing.is_empty() {
        return Err(invalid(format!(
            "{} audio files missing under {} (first: {})",
            missing.len(),
            audio_dir.display(),
            missing[0]
        )));
    }
    if let Some(dir) = &app_dir {
        if !dir.is_dir() {
            return Err(invalid(format!(
                "app directory {} does not exist",
                dir.display()
            )));
        }
    }
    let collector =
        Collector::open(plan, store).map_err(|e| invalid(format!("{}: {e}", store.display())))?;
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| invalid(format!("address {host}:{port}: {e}")))?;

    let runtime = tokio::runtime::Runtime::new().map_err(internal)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| internal(format!("cannot listen on {addr}: {e}")))?;
        let local = listener.local_addr().map_err(internal)?;
        println!("listening on http://{local}");
        let _ = std::io::stdout().flush();
        let state = Arc::new(AppState::new(collector, audio_dir, admin_token, app_dir));
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(internal)
    })
}

fn simulate(
    experiment: &Path,
    url: Option<String>,
    store: Option<PathBuf>,
    participants: usize,
    profile: Option<&Path>,
    seed: u64,
) -> Result<(), Failure> {
    if participants == 0 {
        return Err(invalid("--participants must be at least 1"));
    }
    let plan = load_plan(experiment)?;
    let profile = match profile {
        Some(p) => serde_json::from_str(&read_input(p)?)
            .map_err(|e| invalid(format!("{}: {e}", p.display())))?,
        None => SimProfile::graded(&plan.systems),
    };
    profile.validate().map_err(invalid)?;
    let summary = match (url, store) {
        (Some(url), _) => {
            let runtime = tokio::runtime::Runtime::new().map_err(internal)?;
            runtime
                .block_on(simulate_http(&url, &plan, participants, &profile, seed))
                .map_err(internal)?
        }
        (None, Some(dir)) => {
            simulate_into_store(plan, &dir, participants, &profile, seed).map_err(invalid)?
        }
        (None, None) => return Err(invalid("one of --url or --store is required")),
    };
    let groups: Vec<String> = summary
        .per_group
        .iter()
        .map(|(g, n)| format!("{g}:{n}"))
        .collect();
    eprintln!(
        "{} participants, {} records (sessions per group {})",
        summary.participants,
        summary.records,
        groups.join(" ")
    );
    Ok(())
}

fn analyze_cmd(experiment: &Path, responses: &Path, out: &Path) -> Result<(), Failure> {
    let plan = load_plan(experiment)?;
    let log = if responses.is_dir() {
        responses.join(prosodyeval::collector::store::RESPONSES_FILE)
    } else {
        responses.to_path_buf()
    };
    let content = read_input(&log)?;
    let records =
        load_records(&plan, &content).map_err(|e| invalid(format!("{}: {e}", log.display())))?;
    let report = analyze(&plan, &records).map_err(invalid)?;
    report.write_to(out).map_err(internal)?;
    eprintln!(
        "analyzed {} records; report in {}",
        report.n_records,
        out.display()
    );
    Ok(())
}
