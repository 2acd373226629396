//! `equiscope`: offline front end to the analysis engine.
//!
//! Exit codes: 0 success, 1 configuration or fatal error, 2 evidence
//! validation failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use equiscope_core::context::LabelMap;
use equiscope_core::evidence::{load_bundle, load_bundle_with_default_identities, IdentityMap, LoadReport};
use equiscope_core::measures::WeightConfig;
use equiscope_core::pipeline::{run_analysis, ReportBody};
use equiscope_core::provider::replay::ReplayProvider;
use equiscope_core::provider::{read_transcript, Provider, ProviderChoice, Session, Transcript};
use equiscope_core::render::{render, Format};
use equiscope_core::synth::{default_window, generate, read_profiles, write_synth};

#[derive(Parser)]
#[command(name = "equiscope", version, about = "Evidence-based contribution analysis for student team projects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderKind {
    Mock,
    Http,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderFormat {
    Text,
    Markdown,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a bundle directory.
    Ingest {
        #[arg(long)]
        bundle: PathBuf,
        /// Identity map; defaults to the bundle's identities.json.
        #[arg(long)]
        identities: Option<PathBuf>,
        /// Print the validation report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the full analysis and write the report body.
    Analyze {
        #[arg(long)]
        bundle: PathBuf,
        /// Configuration overrides; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        identities: Option<PathBuf>,
        /// Defaults to EQUISCOPE_PROVIDER, then mock.
        #[arg(long, value_enum)]
        provider: Option<ProviderKind>,
        /// Answer provider requests from a recorded transcript instead.
        #[arg(long, conflicts_with = "provider")]
        replay: Option<PathBuf>,
        /// Peer-assessment label map; defaults to the shipped one.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the provider transcript; defaults to
        /// `<out stem>.transcript.jsonl` beside the report.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Analyse even when some records failed validation.
        #[arg(long)]
        allow_issues: bool,
    },
    /// Render a report body for reading.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: RenderFormat,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a labelled synthetic bundle.
    Synth {
        /// JSON list of behaviour profiles.
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        data_dir: PathBuf,
        /// Shared token required in the x-equiscope-token header.
        #[arg(long, env = "EQUISCOPE_TOKEN")]
        token: Option<String>,
    },
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn fatal(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fatal(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| fatal(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| fatal(format!("{}: {e}", path.display())))
}

fn load(bundle: &Path, identities: Option<&Path>) -> Result<LoadReport, Failure> {
    let result = match identities {
        Some(p) => {
            let map: IdentityMap =
                serde_json::from_str(&read(p)?).map_err(|e| fatal(format!("{}: {e}", p.display())))?;
            load_bundle(bundle, &map)
        }
        None => load_bundle_with_default_identities(bundle),
    };
    result.map_err(|e| fatal(e.to_string()))
}

fn print_issues(report: &LoadReport) {
    for issue in &report.issues {
        eprintln!("{issue}");
    }
}

fn ingest(bundle: &Path, identities: Option<&Path>, json: bool) -> Result<(), Failure> {
    let report = load(bundle, identities)?;
    if json {
        let value = serde_json::json!({
            "project_id": report.bundle.project_id,
            "roster_size": report.bundle.roster.len(),
            "digest": report.bundle.digest(),
            "counts": report.counts,
            "issues": report.issues,
            "unresolved_aliases": report.bundle.unresolved_aliases,
        });
        println!("{}", serde_json::to_string_pretty(&value).unwrap_or_default());
    } else {
        let b = &report.bundle;
        println!("project {} ({} students)", b.project_id, b.roster.len());
        for (file, c) in &report.counts {
            println!("  {file}: {} records, {} parsed, {} errors", c.records, c.parsed, c.errors);
        }
        println!(
            "  commits {}, text {}, media {}, chat {}, email {}, meetings {}, tasks {}, peer ratings {}, context {}",
            b.commits.len(),
            b.text_artifacts.len(),
            b.media_artifacts.len(),
            b.chat_messages.len(),
            b.emails.len(),
            b.meetings.len(),
            b.tasks.len(),
            b.pa_items.len(),
            b.context_records.len()
        );
        for u in &b.unresolved_aliases {
            println!("  unresolved {} alias {:?}", u.source_kind, u.alias);
        }
    }
    if report.is_clean() {
        Ok(())
    } else {
        print_issues(&report);
        Err(Failure {
            code: 2,
            message: format!("{} record(s) failed validation", report.issues.len()),
        })
    }
}

struct AnalyzeArgs {
    bundle: PathBuf,
    config: Option<PathBuf>,
    identities: Option<PathBuf>,
    provider: Option<ProviderKind>,
    replay: Option<PathBuf>,
    labels: Option<PathBuf>,
    out: PathBuf,
    transcript: Option<PathBuf>,
    allow_issues: bool,
}

fn transcript_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}.transcript.jsonl"))
}

fn analyze(a: AnalyzeArgs) -> Result<ReportBody, Failure> {
    let config = match &a.config {
        Some(p) => WeightConfig::from_json(&read(p)?).map_err(|e| fatal(format!("{}: {e}", p.display())))?,
        None => WeightConfig::default(),
    };
    let labels = match &a.labels {
        Some(p) => LabelMap::parse(&read(p)?).map_err(|e| fatal(format!("{}: {e}", p.display())))?,
        None => LabelMap::shipped(),
    };
    let report = load(&a.bundle, a.identities.as_deref())?;
    if !report.is_clean() && !a.allow_issues {
        print_issues(&report);
        return Err(Failure {
            code: 2,
            message: format!(
                "{} record(s) failed validation; fix them or pass --allow-issues",
                report.issues.len()
            ),
        });
    }
    let provider: Option<Box<dyn Provider>> = match (&a.replay, a.provider) {
        (Some(path), _) => {
            let entries = read_transcript(path).map_err(|e| fatal(format!("{}: {e}", path.display())))?;
            Some(Box::new(ReplayProvider::new(&entries)))
        }
        (None, Some(ProviderKind::None)) => None,
        (None, kind) => {
            let kind = kind.map(|k| match k {
                ProviderKind::Http => "http",
                _ => "mock",
            });
            Some(ProviderChoice::from_env(kind, config.seed).map_err(fatal)?.build())
        }
    };
    let tpath = a.transcript.clone().unwrap_or_else(|| transcript_path(&a.out));
    if tpath.exists() {
        std::fs::remove_file(&tpath).map_err(|e| fatal(format!("{}: {e}", tpath.display())))?;
    }
    let transcript = match &provider {
        Some(_) => Transcript::with_file(&tpath).map_err(|e| fatal(format!("{}: {e}", tpath.display())))?,
        None => Transcript::in_memory(),
    };
    let session = provider.as_deref().map(|p| Session::new(p, &transcript));
    let body = run_analysis(&report.bundle, &config, &labels, session.as_ref());
    write(&a.out, &body.to_canonical_json())?;
    Ok(body)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest {
            bundle,
            identities,
            json,
        } => ingest(&bundle, identities.as_deref(), json),
        Command::Analyze {
            bundle,
            config,
            identities,
            provider,
            replay,
            labels,
            out,
            transcript,
            allow_issues,
        } => {
            let body = analyze(AnalyzeArgs {
                bundle,
                config,
                identities,
                provider,
                replay,
                labels,
                out: out.clone(),
                transcript,
                allow_issues,
            })?;
            let a = &body.analysis;
            eprintln!(
                "wrote {}: {} marker(s), advisory {:?}",
                out.display(),
                a.conflict_markers.len(),
                a.advisory.status
            );
            for m in &a.conflict_markers {
                eprintln!("  {}", m.id);
            }
            Ok(())
        }
        Command::Report { input, format, out } => {
            let body: ReportBody =
                serde_json::from_str(&read(&input)?).map_err(|e| fatal(format!("{}: {e}", input.display())))?;
            let format = match format {
                RenderFormat::Text => Format::Text,
                RenderFormat::Markdown => Format::Markdown,
            };
            let text = render(&body, format);
            match out {
                Some(p) => write(&p, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Synth { profiles, seed, out } => {
            let profiles = read_profiles(&read(&profiles)?).map_err(|e| fatal(format!("{}: {e}", profiles.display())))?;
            let generated = generate(&profiles, seed, default_window()).map_err(|e| fatal(e.to_string()))?;
            write_synth(&generated, &out).map_err(|e| fatal(e.to_string()))?;
            eprintln!(
                "wrote {} with {} expected marker(s)",
                out.display(),
                generated.labels.expected_markers.len()
            );
            Ok(())
        }
        Command::Serve { port, data_dir, token } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| fatal(e.to_string()))?;
            runtime
                .block_on(equiscope_service::serve(equiscope_service::ServeOptions { port, data_dir, token }))
                .map_err(|e| fatal(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors, not evidence failures
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if matches!(cli.command, Command::Serve { .. }) {
        tracing_subscriber::fmt()
            .with_env_filter(
                tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
            )
            .init();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
