use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::http;
use super::store::FileStore;
use crate::lang::{check_source, CheckReport};
use crate::monitor::{parse_events, Cause, Session};
use crate::norm::{ContractSpec, Time};
use crate::space::{analyze, build_graph, export_dot, export_structured_graph, TerminalVerdict};

#[derive(Parser, Debug)]
#[command(name = "pact", version, about = "Contracts as processes: check, analyse and monitor .pact specs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a spec; diagnostics go to stderr.
    Check { file: PathBuf },
    /// Print the explicit state graph.
    Graph {
        file: PathBuf,
        /// Graphviz output (the default).
        #[arg(long, conflicts_with = "structured")]
        dot: bool,
        /// JSON graph document.
        #[arg(long)]
        structured: bool,
    },
    /// Terminal classes, contrary-to-duty structures and provision classes.
    Analyze {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Replay an event file against a fresh session.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long, default_value_t = 0)]
        epoch: Time,
        /// Advance the clock here after the last event.
        #[arg(long)]
        until: Option<Time>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, default_value = "pact-data")]
        data_dir: PathBuf,
    },
}

/// Run the CLI. Returns the process exit code: 0 success, 1 failure,
/// 2 usage error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn report_diagnostics(path: &Path, report: &CheckReport, err: &mut dyn Write) {
    for d in &report.diagnostics {
        let _ = writeln!(err, "{}: {d}", path.display());
    }
}

fn load(path: &Path, err: &mut dyn Write) -> Result<ContractSpec, String> {
    let report = check_source(&read(path)?);
    report_diagnostics(path, &report, err);
    report
        .valid_spec()
        .cloned()
        .ok_or_else(|| format!("{} has errors", path.display()))
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let io = |e: std::io::Error| e.to_string();
    match cmd {
        Command::Check { file } => {
            let report = check_source(&read(&file)?);
            report_diagnostics(&file, &report, err);
            match report.valid_spec() {
                Some(spec) => {
                    writeln!(out, "ok: {} ({} rules)", spec.name, spec.rules.len()).map_err(io)?;
                    Ok(0)
                }
                None => Ok(1),
            }
        }
        Command::Graph { file, structured, .. } => {
            let spec = load(&file, err)?;
            let graph = build_graph(&spec).map_err(|e| e.to_string())?;
            if structured {
                let doc = export_structured_graph(&graph);
                writeln!(out, "{}", serde_json::to_string_pretty(&doc).unwrap()).map_err(io)?;
            } else {
                write!(out, "{}", export_dot(&graph)).map_err(io)?;
            }
            Ok(0)
        }
        Command::Analyze { file, json } => {
            let spec = load(&file, err)?;
            let report = analyze(&spec).map_err(|e| e.to_string())?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap()).map_err(io)?;
                return Ok(0);
            }
            writeln!(out, "contract {}: {} states, {} transitions", report.contract, report.states, report.transitions)
                .map_err(io)?;
            writeln!(out, "terminals:").map_err(io)?;
            for (key, verdict) in &report.terminals {
                let v = match verdict {
                    TerminalVerdict::Uniform(c) => c.to_string(),
                    TerminalVerdict::Mixed(_) => "mixed".into(),
                };
                writeln!(out, "  {key}: {v}").map_err(io)?;
            }
            writeln!(out, "contrary-to-duty: {}", report.ctd.len()).map_err(io)?;
            for t in &report.ctd {
                writeln!(out, "  {} --[{}]--> {}", t.primary, t.via, t.secondary).map_err(io)?;
            }
            writeln!(out, "provisions:").map_err(io)?;
            for p in &report.provisions {
                let class = serde_json::to_value(p.class).unwrap();
                writeln!(out, "  {}: {}", p.obligation, class.as_str().unwrap_or_default()).map_err(io)?;
            }
            Ok(0)
        }
        Command::Simulate {
            file,
            events,
            epoch,
            until,
        } => {
            let spec = load(&file, err)?;
            let evs = parse_events(&read(&events)?).map_err(|e| format!("{}: {e}", events.display()))?;
            let mut session = Session::open(spec, epoch).map_err(|e| e.to_string())?;
            let mut rejected = 0;
            let print = |out: &mut dyn Write, r: &crate::monitor::TransitionRecord| {
                let cause = match &r.cause {
                    Cause::Lapse => "lapse".to_string(),
                    Cause::Event { event } => event.to_string(),
                };
                writeln!(out, "t={} [{}] {} : {} -> {}", r.at, cause, r.label, r.before_key, r.after_key)
            };
            for ev in evs {
                match session.submit_event(ev.clone()) {
                    Ok(records) => {
                        for r in &records {
                            print(out, r).map_err(io)?;
                        }
                    }
                    Err(e) => {
                        rejected += 1;
                        writeln!(err, "rejected `{ev}`: {e}").map_err(io)?;
                    }
                }
            }
            if let Some(to) = until.filter(|_| session.state().terminal_class().is_none()) {
                for r in &session.advance_clock(to).map_err(|e| e.to_string())? {
                    print(out, r).map_err(io)?;
                }
            }
            writeln!(out, "clock: {}", session.clock()).map_err(io)?;
            match session.state().terminal_class() {
                Some(c) => writeln!(out, "final: terminated {c}").map_err(io)?,
                None => {
                    writeln!(out, "final norms:").map_err(io)?;
                    for n in session.active_norms() {
                        match n.deadline {
                            Some(d) => writeln!(out, "  {} (deadline {d})", n.atom),
                            None => writeln!(out, "  {}", n.atom),
                        }
                        .map_err(io)?;
                    }
                }
            }
            Ok(if rejected > 0 { 1 } else { 0 })
        }
        Command::Serve { port, host, data_dir } => {
            let _ = tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .try_init();
            let store = FileStore::open(&data_dir).map_err(|e| e.to_string())?;
            let rt = tokio::runtime::Runtime::new().map_err(io)?;
            rt.block_on(http::serve(SocketAddr::new(host, port), store))
                .map_err(io)?;
            Ok(0)
        }
    }
}
