//! `mcl`: check, instrument, run and validate memory contracts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use memcontract::escape;
use memcontract::frontend::{self, Diagnostic, MethodRef, Resolved};
use memcontract::instrument;
use memcontract::oracle::{self, GcMode, RunOptions, ValidateOptions};
use memcontract::summary::{self, CalleeMode, Mode, Options};
use memcontract::symexpr::GridConfig;

const USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "mcl", version, about = "Memory consumption contracts for MCL programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Type,
    Object,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Type => Mode::ByType,
            ModeArg::Object => Mode::ObjectCount,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum GcArg {
    Ideal,
    MethodExit,
    Never,
}

impl From<GcArg> for GcMode {
    fn from(g: GcArg) -> GcMode {
        match g {
            GcArg::Ideal => GcMode::Ideal,
            GcArg::MethodExit => GcMode::MethodExit,
            GcArg::Never => GcMode::Never,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CalleeArg {
    Contracts,
    Summaries,
}

#[derive(clap::Args)]
struct Common {
    /// Count per class, or all objects together.
    #[arg(long, value_enum, default_value = "type")]
    mode: ModeArg,
    /// Largest value tried for each parameter and array length.
    #[arg(long, default_value_t = 8)]
    grid: u32,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

impl Common {
    fn options(&self) -> Options {
        Options {
            grid: GridConfig::with_bound(i64::from(self.grid)),
            ..Options::with_mode(self.mode.into())
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Verify declared bounds and lifetime annotations.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// What call sites consult for callees that declare bounds.
        #[arg(long, value_enum, default_value = "contracts")]
        callees: CalleeArg,
    },
    /// Print the counter-instrumented program.
    Instrument {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write the instrumented source here instead of stdout.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Interpret one call and print its heap trace.
    Run {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// `Class.method`, or a class name for its constructor.
        #[arg(long)]
        entry: String,
        /// JSON array of arguments; arrays may be given as a length.
        #[arg(long, default_value = "[]")]
        args: String,
        #[arg(long, value_enum, default_value = "ideal")]
        gc: GcArg,
        /// Run the instrumented program so that `ensure` is checked.
        #[arg(long)]
        instrumented: bool,
    },
    /// Points-to graphs in Graphviz form.
    Ptg {
        file: PathBuf,
        /// Write one `Class.method.dot` per method into this directory.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Sweep every contracted method over the grid with the interpreter.
    Validate {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "ideal")]
        gc: GcArg,
        /// Only drive this method.
        #[arg(long)]
        entry: Option<String>,
        /// Run the original program instead of the instrumented one.
        #[arg(long)]
        no_instrument: bool,
    },
}

/// Prints diagnostics as JSON lines on stderr.
fn report_diagnostics(diags: &[Diagnostic], file: &Path) {
    for d in diags {
        eprintln!("{}", d.clone().in_file(&file.display().to_string()).to_json());
    }
}

fn load(file: &Path) -> Result<Resolved, u8> {
    let src = fs::read_to_string(file).map_err(|e| {
        eprintln!("mcl: cannot read {}: {e}", file.display());
        USAGE
    })?;
    let parsed = frontend::parse(&src).and_then(frontend::resolve);
    parsed.map_err(|d| {
        report_diagnostics(&d.0, file);
        USAGE
    })
}

fn check(files: &[PathBuf], common: &Common, callees: CalleeArg) -> Result<u8, u8> {
    let mut opts = common.options();
    opts.callees = match callees {
        CalleeArg::Contracts => CalleeMode::Contracts,
        CalleeArg::Summaries => CalleeMode::Summaries,
    };
    let mut worst = 0;
    let mut json = Vec::new();
    for f in files {
        let res = load(f)?;
        let report = summary::check_program(&res, &opts);
        worst = worst.max(report.exit_code());
        match common.format {
            Format::Human => {
                if files.len() > 1 {
                    println!("== {}", f.display());
                }
                print!("{}", report.to_human());
            }
            Format::Json => json.push((f, report)),
        }
    }
    if common.format == Format::Json {
        if let [(_, r)] = json.as_slice() {
            println!("{}", r.to_json());
        } else {
            let all: Vec<serde_json::Value> = json
                .iter()
                .map(|(f, r)| {
                    serde_json::json!({
                        "file": f.display().to_string(),
                        "report": serde_json::from_str::<serde_json::Value>(&r.to_json()).expect("report is JSON"),
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&all).expect("reports serialize"));
        }
    }
    Ok(worst as u8)
}

fn instrument_cmd(file: &Path, common: &Common, emit: Option<&Path>) -> Result<u8, u8> {
    let res = load(file)?;
    let ip = instrument::instrument(&res, &common.options());
    for w in &ip.warnings {
        eprintln!("mcl: warning: {w}");
    }
    let text = ip.source();
    match emit {
        Some(p) => fs::write(p, text).map_err(|e| {
            eprintln!("mcl: cannot write {}: {e}", p.display());
            USAGE
        })?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn run_cmd(file: &Path, common: &Common, entry: &str, args: &str, gc: GcArg, instrumented: bool) -> Result<u8, u8> {
    let mut res = load(file)?;
    let args: Vec<serde_json::Value> = serde_json::from_str(args).map_err(|e| {
        eprintln!("mcl: --args must be a JSON array: {e}");
        USAGE
    })?;
    if instrumented {
        let ip = instrument::instrument(&res, &common.options());
        res = frontend::resolve(ip.program).expect("instrumented programs resolve");
    }
    let opts = RunOptions {
        gc: gc.into(),
        mode: common.mode.into(),
        ..RunOptions::default()
    };
    let result = match oracle::run(&res, entry, &args, &opts) {
        Ok(r) => r,
        Err(oracle::OracleError::UnknownMethod(m)) => {
            eprintln!("mcl: no method `{m}`");
            return Err(USAGE);
        }
        Err(oracle::OracleError::BadArgument(m)) => {
            eprintln!("mcl: {m}");
            return Err(USAGE);
        }
        Err(e) => {
            eprintln!("mcl: run failed: {e}");
            return Ok(1);
        }
    };
    let failed = !result.assertion_failures.is_empty() || result.observations.iter().any(|o| o.checks.iter().any(|c| !c.holds()));
    match common.format {
        Format::Json => {
            print!("{}", result.trace_jsonl());
            let tail = serde_json::json!({
                "event": "result",
                "ret": result.ret,
                "observations": result.observations,
                "assertion_failures": result.assertion_failures,
            });
            println!("{tail}");
        }
        Format::Human => {
            println!("returned {}", result.ret);
            for o in &result.observations {
                let peaks: Vec<String> = o.peak.iter().map(|(c, v)| format!("{c}={v}")).collect();
                println!("activation {} {}: peak [{}]", o.activation, o.method, peaks.join(", "));
                for (t, m) in &o.esc {
                    let e: Vec<String> = m.iter().map(|(c, v)| format!("{c}={v}")).collect();
                    println!("  escapes via {t}: [{}]", e.join(", "));
                }
                for c in &o.checks {
                    let ok = if c.holds() { "ok" } else { "VIOLATED" };
                    println!("  {}: observed {} <= {}: {ok}", c.clause, c.observed, c.bound);
                }
            }
            for a in &result.assertion_failures {
                println!("ensure failed in {}: {} = {} > {}", a.method, a.counter, a.value, a.bound);
            }
        }
    }
    Ok(u8::from(failed))
}

fn ptg_cmd(file: &Path, dot: Option<&Path>) -> Result<u8, u8> {
    let res = load(file)?;
    let sums = escape::escape_summaries(&res);
    let labels = escape::allocation_sites(&res.program);
    if let Some(dir) = dot {
        fs::create_dir_all(dir).map_err(|e| {
            eprintln!("mcl: cannot create {}: {e}", dir.display());
            USAGE
        })?;
    }
    for (m, s) in &sums {
        let text = s.ptg.to_dot(&m.to_string(), &labels);
        match dot {
            Some(dir) => {
                let p = dir.join(format!("{m}.dot"));
                fs::write(&p, text).map_err(|e| {
                    eprintln!("mcl: cannot write {}: {e}", p.display());
                    USAGE
                })?;
            }
            None => print!("{text}"),
        }
    }
    Ok(0)
}

fn validate_cmd(file: &Path, common: &Common, gc: GcArg, entry: Option<&str>, no_instrument: bool) -> Result<u8, u8> {
    let res = load(file)?;
    let mut opts = ValidateOptions {
        grid: GridConfig::with_bound(i64::from(common.grid)),
        instrumented: !no_instrument,
        ..ValidateOptions::default()
    };
    opts.run.gc = gc.into();
    opts.run.mode = common.mode.into();
    if let Some(e) = entry {
        let Some((m, _)) = res.program.find(e) else {
            eprintln!("mcl: no method `{e}`");
            return Err(USAGE);
        };
        opts.methods = vec![MethodRef::new(m.class, m.method)];
    }
    let report = oracle::validate(&res, &opts).map_err(|e| {
        eprintln!("mcl: {e}");
        USAGE
    })?;
    match common.format {
        Format::Human => print!("{}", report.to_human()),
        Format::Json => println!("{}", report.to_json()),
    }
    Ok(u8::from(!report.is_clean()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let out = match &cli.command {
        Command::Check { files, common, callees } => check(files, common, *callees),
        Command::Instrument { file, common, emit } => instrument_cmd(file, common, emit.as_deref()),
        Command::Run {
            file,
            common,
            entry,
            args,
            gc,
            instrumented,
        } => run_cmd(file, common, entry, args, *gc, *instrumented),
        Command::Ptg { file, dot } => ptg_cmd(file, dot.as_deref()),
        Command::Validate {
            file,
            common,
            gc,
            entry,
            no_instrument,
        } => validate_cmd(file, common, *gc, entry.as_deref(), *no_instrument),
    };
    ExitCode::from(out.unwrap_or_else(|code| code))
}
