use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use dbstudio_core::db::canonical_text;
use dbstudio_core::dbd::{parse_dbd_with, FsResolver};
use dbstudio_core::layout::render_document;
use dbstudio_core::{
    auto_layout, build_graph, decode_layout, parse_db, serialize_db, Diagnostic, Location, Session, Severity,
    TypeRegistry,
};
use dbstudio_service::AppState;

#[derive(Parser)]
#[command(name = "dbstudio", version, about = "Tools for EPICS record instance databases")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Report syntax, structure and link problems.
    Lint {
        db: PathBuf,
        #[arg(long)]
        dbd: PathBuf,
        /// Fail on warnings too.
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = ':')]
        separator: char,
    },
    /// Re-emit a database. Unchanged input is reproduced byte for byte.
    Fmt {
        db: PathBuf,
        /// Exit 1 if the output would differ from the input.
        #[arg(long)]
        check: bool,
        /// Rewrite every record in canonical form instead of preserving it.
        #[arg(long)]
        canonical: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Give every record a position, keeping existing ones.
    Layout {
        db: PathBuf,
        #[arg(long)]
        dbd: PathBuf,
        #[arg(long, default_value_t = ':')]
        separator: char,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Export the record link graph.
    Graph {
        db: PathBuf,
        #[arg(long)]
        dbd: PathBuf,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        format: GraphFormat,
        #[arg(long, default_value_t = ':')]
        separator: char,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP editing service.
    Serve {
        /// Registry for sessions opened without their own dbd.
        #[arg(long)]
        dbd: Option<PathBuf>,
        #[arg(long, default_value_t = 8480)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of static files (the browser editor) served at `/`.
        #[arg(long)]
        root: Option<PathBuf>,
        /// Maximum number of undo steps kept per session.
        #[arg(long)]
        history: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Dot,
    Json,
}

/// Usage or IO failure; always exit status 2.
struct Failure(String);

impl<E: std::fmt::Display> From<(E, &Path)> for Failure {
    fn from((e, path): (E, &Path)) -> Self {
        Failure(format!("{}: {e}", path.display()))
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| (e, path).into())
}

fn load_registry(path: &Path) -> Result<(TypeRegistry, Vec<Diagnostic>), Failure> {
    let text = read(path)?;
    Ok(parse_dbd_with(&text, &path.to_string_lossy(), &FsResolver))
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, bytes).map_err(|e| (e, path).into()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| Failure(format!("stdout: {e}")))
        }
    }
}

fn format_diagnostic(file: &str, d: &Diagnostic) -> String {
    let file = d.file.as_deref().unwrap_or(file);
    let loc = match &d.location {
        Location::Position { line, column } => format!("{line}:{column}"),
        Location::Path { path } => path.clone(),
    };
    format!("{} {} {file}:{loc} {}", d.severity.label(), d.code, d.message)
}

fn lint(db: &Path, dbd: &Path, strict: bool, separator: char) -> Result<ExitCode, Failure> {
    let (reg, dbd_diags) = load_registry(dbd)?;
    let bytes = read(db)?;
    let name = db.to_string_lossy().into_owned();
    let (_, diags) = Session::open(name.clone(), &bytes, Arc::new(reg), separator);
    // dbd warnings (skipped driver/registrar lines and the like) are noise
    // when linting a database; only dbd errors are reported.
    let dbd_name = dbd.to_string_lossy();
    let mut lines = Vec::new();
    for d in dbd_diags.iter().filter(|d| d.is_error()) {
        lines.push(format_diagnostic(&dbd_name, d));
    }
    for d in &diags {
        lines.push(format_diagnostic(&name, d));
    }
    let mut out = std::io::stdout().lock();
    for l in &lines {
        let _ = writeln!(out, "{l}");
    }
    let all = dbd_diags.iter().filter(|d| d.is_error()).chain(diags.iter());
    let fail = all.fold(false, |acc, d| acc || d.severity == Severity::Error || strict);
    Ok(if fail { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn fmt(db: &Path, check: bool, canonical: bool, output: Option<&Path>) -> Result<ExitCode, Failure> {
    let bytes = read(db)?;
    let (doc, _) = parse_db(&bytes);
    let formatted = if canonical { canonical_text(&doc) } else { serialize_db(&doc) };
    if check {
        return Ok(if formatted == bytes { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    emit(output, &formatted)?;
    Ok(ExitCode::SUCCESS)
}

fn layout(db: &Path, dbd: &Path, separator: char, output: Option<&Path>) -> Result<ExitCode, Failure> {
    load_registry(dbd)?;
    let bytes = read(db)?;
    let (doc, _) = parse_db(&bytes);
    let (table, _) = decode_layout(&doc);
    let full = auto_layout(&doc, &table, separator);
    emit(output, &render_document(&doc, &full, &table))?;
    Ok(ExitCode::SUCCESS)
}

fn graph(db: &Path, dbd: &Path, format: GraphFormat, separator: char, output: Option<&Path>) -> Result<ExitCode, Failure> {
    let (reg, _) = load_registry(dbd)?;
    let bytes = read(db)?;
    let (doc, _) = parse_db(&bytes);
    let (g, _) = build_graph(&doc, &reg, separator);
    let text = match format {
        GraphFormat::Dot => g.to_dot(),
        GraphFormat::Json => {
            let mut s = serde_json::to_string_pretty(&g).map_err(|e| Failure(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    emit(output, text.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn serve(dbd: Option<&Path>, host: &str, port: u16, root: Option<PathBuf>, history: Option<usize>) -> Result<ExitCode, Failure> {
    let registry = match dbd {
        Some(path) => {
            let (reg, diags) = load_registry(path)?;
            for d in diags.iter().filter(|d| d.is_error()) {
                eprintln!("{}", format_diagnostic(&path.to_string_lossy(), d));
            }
            if reg.record_types.is_empty() {
                return Err(Failure(format!("{}: no record types defined", path.display())));
            }
            Some(Arc::new(reg))
        }
        None => None,
    };
    if let Some(dir) = &root {
        if !dir.is_dir() {
            return Err(Failure(format!("{}: not a directory", dir.display())));
        }
    }
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure(format!("runtime: {e}")))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| Failure(format!("cannot listen on {host}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| Failure(e.to_string()))?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        dbstudio_service::serve(listener, AppState::with_options(registry, history), root)
            .await
            .map_err(|e| Failure(format!("server: {e}")))?;
        Ok(ExitCode::SUCCESS)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Lint { db, dbd, strict, separator } => lint(&db, &dbd, strict, separator),
        Cmd::Fmt { db, check, canonical, output } => fmt(&db, check, canonical, output.as_deref()),
        Cmd::Layout { db, dbd, separator, output } => layout(&db, &dbd, separator, output.as_deref()),
        Cmd::Graph { db, dbd, format, separator, output } => graph(&db, &dbd, format, separator, output.as_deref()),
        Cmd::Serve { dbd, port, host, root, history } => serve(dbd.as_deref(), &host, port, root, history),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("dbstudio: {msg}");
            ExitCode::from(2)
        }
    }
}
