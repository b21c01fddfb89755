use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sessmon_core::harness::{run_all, Corpus, SuiteConfig};
use sessmon_core::model::{Message, Monitor, PredicateRegistry, Process, SessionType};
use sessmon_core::parser::{
    parse_monitor, parse_process, parse_type, render_monitor, render_process, render_type, SourceError,
};
use sessmon_core::semantics::{run_trace, Configuration, ExecContext, StuckKind, TraceEnd, ValueDomain};
use sessmon_core::synthesis::synthesize;
use sessmon_core::typecheck::{check_well_formed, dual, explain_failure, TypingEnvs};
use sessmon_proxy::{registry_by_name, run_benchmark, BenchReport, ConnectionManager, LineCodec, LogSink, Mode, Protocol, Proxy, ProxyConfig};

/// Exit statuses; a stable contract for scripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok = 0,
    CheckFailed = 1,
    InputError = 2,
    Verdict = 3,
    Deadlock = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Type,
    Process,
    Monitor,
}

#[derive(Parser)]
#[command(name = "sessmon", version, about = "Session type checking, monitor synthesis and monitoring proxies")]
struct Cli {
    /// Output format for tabular results.
    #[arg(long, value_enum, global = true, default_value = "plain")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a file and print it back in canonical form.
    Parse {
        file: PathBuf,
        /// Defaults to the file extension: .st, .proc or .mon.
        #[arg(long, value_enum)]
        kind: Option<Kind>,
    },
    /// Typecheck a process against a session type.
    Check { type_file: PathBuf, process_file: PathBuf },
    /// Print the dual of a session type.
    Dual { type_file: PathBuf },
    /// Print the monitor synthesized from a session type.
    Synth { type_file: PathBuf },
    /// Run a process under the synthesized monitor against scripted inputs.
    Simulate {
        type_file: PathBuf,
        process_file: PathBuf,
        /// One wire-format message per line, delivered by the environment in order.
        script: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Use this monitor instead of the synthesized one.
        #[arg(long)]
        monitor: Option<PathBuf>,
    },
    /// Run the soundness, blame, completeness and subject-reduction suites.
    Verify {
        corpus: PathBuf,
        #[arg(long, default_value_t = 16)]
        depth: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Generated well-typed pairs added to the soundness and blame suites.
        #[arg(long, default_value_t = 200)]
        generated: usize,
        #[arg(long, default_value_t = 500)]
        subject_reduction_samples: usize,
        #[arg(long, default_value_t = 32)]
        max_completeness_depth: usize,
    },
    /// Monitor sessions between untrusted peers and a trusted peer.
    Proxy {
        /// Session type, from the untrusted peer's side.
        #[arg(long = "type")]
        type_file: PathBuf,
        #[arg(long)]
        listen: String,
        #[arg(long)]
        forward: String,
        /// Predicate registry: builtin or none.
        #[arg(long, default_value = "builtin")]
        predicates: String,
        #[arg(long, default_value_t = 64)]
        session_limit: usize,
        #[arg(long, default_value_t = 30_000)]
        idle_timeout_ms: u64,
        /// Session log file; SESSMON_LOG takes precedence.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Measure latency directly and through the proxy.
    Bench {
        #[arg(value_parser = parse_protocol)]
        protocol: Protocol,
        #[arg(value_parser = parse_mode)]
        mode: Mode,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
    },
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

/// Errors that map to the input-error status.
#[derive(Debug, thiserror::Error)]
enum InputError {
    #[error("{path}: {err}")]
    Read { path: String, err: std::io::Error },
    #[error("{path}:{err}")]
    Syntax { path: String, err: SourceError },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|err| InputError::Read { path: path.display().to_string(), err }.into())
}

fn load<T>(path: &Path, parse: fn(&str) -> Result<T, SourceError>) -> Result<T> {
    let text = read(path)?;
    parse(&text).map_err(|err| InputError::Syntax { path: path.display().to_string(), err }.into())
}

fn load_type(path: &Path) -> Result<SessionType> {
    load(path, parse_type)
}

fn load_process(path: &Path) -> Result<Process> {
    load(path, parse_process)
}

fn load_script(path: &Path) -> Result<Vec<Message>> {
    let text = read(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            LineCodec
                .decode(format!("{l}\n").as_bytes())
                .with_context(|| format!("{}:{}: bad message", path.display(), i + 1))
        })
        .collect()
}

fn synth(s: &SessionType) -> Result<Monitor> {
    synthesize(s).context("type is not well-formed")
}

fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Parse { file, kind } => {
            let kind = match kind {
                Some(k) => k,
                None => match file.extension().and_then(|e| e.to_str()) {
                    Some("st") => Kind::Type,
                    Some("proc") => Kind::Process,
                    Some("mon") => Kind::Monitor,
                    _ => bail!("{}: cannot tell the kind from the extension; pass --kind", file.display()),
                },
            };
            let out = match kind {
                Kind::Type => render_type(&load_type(&file)?),
                Kind::Process => render_process(&load_process(&file)?),
                Kind::Monitor => render_monitor(&load(&file, parse_monitor)?),
            };
            println!("{out}");
            Ok(Status::Ok)
        }
        Command::Check { type_file, process_file } => {
            let s = load_type(&type_file)?;
            let p = load_process(&process_file)?;
            match explain_failure(&TypingEnvs::empty(), &p, &s) {
                None => {
                    println!("well-typed");
                    Ok(Status::Ok)
                }
                Some(report) => {
                    println!("ill-typed: {report}");
                    Ok(Status::CheckFailed)
                }
            }
        }
        Command::Dual { type_file } => {
            let s = load_type(&type_file)?;
            if let Some(v) = check_well_formed(&s).first() {
                bail!("{}: type is not well-formed: {v}", type_file.display());
            }
            println!("{}", render_type(&dual(&s)));
            Ok(Status::Ok)
        }
        Command::Synth { type_file } => {
            println!("{}", render_monitor(&synth(&load_type(&type_file)?)?));
            Ok(Status::Ok)
        }
        Command::Simulate { type_file, process_file, script, max_steps, monitor } => {
            let s = load_type(&type_file)?;
            let p = load_process(&process_file)?;
            let m = match monitor {
                Some(f) => load(&f, parse_monitor)?,
                None => synth(&s)?,
            };
            let script = script.as_deref().map(load_script).transpose()?.unwrap_or_default();
            let preds = registry_by_name("builtin").expect("builtin registry exists");
            simulate(p, m, &script, preds, max_steps)
        }
        Command::Verify { corpus, depth, seed, generated, subject_reduction_samples, max_completeness_depth } => {
            let corpus = Corpus::load(&corpus).with_context(|| format!("cannot load corpus {}", corpus.display()))?;
            let cfg = SuiteConfig {
                depth,
                seed,
                generated,
                subject_reduction_samples,
                max_completeness_depth,
                ..SuiteConfig::default()
            };
            let report = run_all(&corpus, &cfg);
            match cli.format {
                Format::Plain => print!("{report}"),
                Format::Csv => {
                    println!("section,status,checked,failures");
                    for s in &report.sections {
                        let status = if s.passed() { "pass" } else { "fail" };
                        println!("{},{status},{},{}", s.name, s.checked, s.failures.len());
                    }
                    for s in &report.sections {
                        s.failures.iter().for_each(|f| eprintln!("{}: {f}", s.name));
                    }
                }
            }
            Ok(if report.passed() { Status::Ok } else { Status::CheckFailed })
        }
        Command::Proxy { type_file, listen, forward, predicates, session_limit, idle_timeout_ms, log } => {
            let config = ProxyConfig {
                type_file,
                listen,
                forward,
                predicates,
                session_limit,
                idle_timeout: Duration::from_millis(idle_timeout_ms),
            };
            let sink = Arc::new(LogSink::from_env(log).context("cannot open the session log")?);
            let proxy = Proxy::from_config(&config, sink)?;
            eprintln!("listening on {}, forwarding to {}", proxy.local_addr(), config.forward);
            proxy.serve()?;
            Ok(Status::Ok)
        }
        Command::Bench { protocol, mode, iterations } => {
            if iterations == 0 {
                bail!("--iterations must be at least 1");
            }
            let report = run_benchmark(protocol, mode, iterations)?;
            match cli.format {
                Format::Plain => println!("{report}"),
                Format::Csv => println!("{}\n{}", BenchReport::CSV_HEADER, report.csv_row()),
            }
            Ok(if report.verdicts == 0 { Status::Ok } else { Status::Verdict })
        }
    }
}

fn simulate(p: Process, m: Monitor, script: &[Message], preds: PredicateRegistry, max_steps: usize) -> Result<Status> {
    let ctx = ExecContext::new(ValueDomain::default(), preds);
    let out = run_trace(&Configuration::new(p, m), script, &ctx, max_steps);
    for (i, (rule, action)) in out.steps.iter().enumerate() {
        println!("{:>4}  {rule:<5} {action}", i + 1);
    }
    println!("consumed {}/{} scripted messages", out.consumed, script.len());
    Ok(match &out.end {
        TraceEnd::Running(c) => {
            println!("running: process `{}`, monitor `{}`", render_process(&c.process), render_monitor(&c.monitor));
            Status::Ok
        }
        TraceEnd::Stuck(r) => {
            println!("stuck: {r}");
            match r.kind {
                StuckKind::VerdictReached(_) => Status::Verdict,
                StuckKind::Deadlock => Status::Deadlock,
                StuckKind::CleanTermination => Status::Ok,
            }
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::InputError as u8)
        }
    }
}
