use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use masrest::project::{Diagnostic, Project};
use masrest::rest::{http, Api};

#[derive(Parser)]
#[command(name = "masrest", version, about = "Run a multi-agent system behind a hypermedia REST API")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Boot a project and serve it over HTTP until interrupted.
    Serve {
        #[arg(long)]
        project: PathBuf,
        /// Overrides the project's port; 0 picks a free one.
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long, value_enum, default_value_t = LogLevel::Info)]
        log_level: LogLevel,
        /// Persist revisions under this directory.
        #[arg(long)]
        persist_dir: Option<PathBuf>,
    },
    /// Check a project file and report every problem found.
    Validate {
        #[arg(long)]
        project: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LogLevel {
    Error,
    Info,
    Debug,
}

impl From<LogLevel> for log::LevelFilter {
    fn from(l: LogLevel) -> Self {
        match l {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
        }
    }
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn report(diags: &[Diagnostic]) -> ExitCode {
    for d in diags {
        eprintln!("error: {d}");
    }
    eprintln!("{} problem(s) found", diags.len());
    ExitCode::from(EXIT_VALIDATION)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Validate { project } => match Project::load(&project) {
            Ok(p) => {
                println!("{}: ok ({} agents)", p.name, p.agents.len());
                ExitCode::SUCCESS
            }
            Err(diags) => report(&diags),
        },
        Command::Serve { project, port, bind, log_level, persist_dir } => {
            env_logger::Builder::new().filter_level(log_level.into()).init();
            let project = match Project::load(&project) {
                Ok(p) => p,
                Err(diags) => return report(&diags),
            };
            match serve(&project, port, bind, persist_dir) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
    }
}

fn serve(
    project: &Project,
    port: Option<u16>,
    bind: Option<String>,
    persist_dir: Option<PathBuf>,
) -> Result<(), Box<dyn std::error::Error>> {
    let store = project.revision_store(persist_dir.as_deref())?;
    let mas = project.boot(store)?;
    let addr = format!("{}:{}", bind.unwrap_or_else(|| project.http.bind.clone()), port.unwrap_or(project.http.port));
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let result = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr).await?;
        let local = listener.local_addr()?;
        println!("listening on http://{local}");
        log::info!("project `{}` booted with {} agents", project.name, project.agents.len());
        mas.start();
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("interrupt received, shutting down");
        };
        http::serve(Api::new(mas.clone()), listener, shutdown).await
    });
    mas.shutdown();
    result.map_err(Into::into)
}
