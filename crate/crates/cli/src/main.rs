use clap::{Parser, Subcommand, ValueEnum};
use evbslice::gen::{random_model, random_observed, rng};
use evbslice::normalize::NormalizeError;
use evbslice::parser::{parse_model_named, ParseError};
use evbslice::print::pretty_print;
use evbslice::semantics::{build_lts_capped, check_bisimulation, check_correct, check_simulation, state_cap, SemError};
use evbslice::testgen::{parse_purposes, report_table, run_pipeline, InstantiateError, TestgenError};
use evbslice::transform::{abstract_system, TransformError};
use evbslice::varselect::{select, Method, VarSelectError, VarSet};
use evbslice::EventSystem;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Check(String),
    #[error("{0}")]
    EmptyProduct(String),
    #[error("{0}")]
    Cap(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Check(_) => 3,
            CliError::EmptyProduct(_) => 4,
            CliError::Cap(_) => 5,
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<VarSelectError> for CliError {
    fn from(e: VarSelectError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        match e {
            TransformError::Normalize(NormalizeError::CfExplosion { .. }) => CliError::Cap(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<SemError> for CliError {
    fn from(e: SemError) -> Self {
        match e {
            SemError::StateCap { .. } => CliError::Cap(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<TestgenError> for CliError {
    fn from(e: TestgenError) -> Self {
        match e {
            TestgenError::EmptyProduct => CliError::EmptyProduct(e.to_string()),
            TestgenError::Sem(s) => s.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    /// Data flow only; the abstraction simulates the model.
    Dataflow,
    /// Data and control flow; the abstraction is bisimilar to the model.
    Modflow,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dataflow => Method::DataFlow,
            MethodArg::Modflow => Method::DataControlFlow,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CheckArg {
    Sim,
    Bisim,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(clap::Args, Debug)]
struct Selection {
    /// Observed variables, comma separated; an empty string selects none.
    #[arg(long)]
    observed: String,
    #[arg(long, value_enum, default_value = "modflow")]
    method: MethodArg,
}

#[derive(Parser, Debug)]
#[command(name = "evb", version, about = "Abstraction of B event systems by variable elimination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the abstract variables selected for the observed ones.
    Vars {
        model: PathBuf,
        #[command(flatten)]
        sel: Selection,
    },
    /// Write the abstraction of a model.
    Abstract {
        model: PathBuf,
        #[command(flatten)]
        sel: Selection,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also check that the abstraction simulates or bisimulates the model.
        #[arg(long, value_enum)]
        check: Option<CheckArg>,
    },
    /// Print the reachable labelled transition system of a model.
    Lts {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// State cap; defaults to EVB_STATE_CAP or the built-in limit.
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate abstract tests from test purposes and instantiate them on the model.
    Testgen {
        model: PathBuf,
        #[command(flatten)]
        sel: Selection,
        /// Test purposes, one per line.
        #[arg(long)]
        tp: PathBuf,
        /// Padding steps allowed before each abstract step.
        #[arg(long, default_value_t = 16)]
        max_depth: usize,
        /// Write tests and reports as JSON here; standard output gets the table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that the initialisation establishes the invariant and every event preserves it.
    Check { model: PathBuf },
    /// Run the simulation and bisimulation checks on random models.
    Selfcheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: u64,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<EventSystem, CliError> {
    Ok(parse_model_named(&read(path)?, &path.display().to_string())?)
}

fn observed(list: &str) -> Vec<String> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn selection(m: &EventSystem, sel: &Selection) -> Result<VarSet, CliError> {
    Ok(select(m, &observed(&sel.observed), sel.method.into())?)
}

fn to_json(v: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

fn verdict(holds: bool, what: &str, reason: Option<String>, trace: &[String]) -> Result<(), CliError> {
    if holds {
        eprintln!("{what}: holds");
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "{what} fails after [{}]: {}",
            trace.join(", "),
            reason.unwrap_or_default()
        )))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Vars { model, sel } => {
            let m = load(&model)?;
            print!("{}", to_json(json!(selection(&m, &sel)?)));
        }
        Command::Abstract { model, sel, out, check } => {
            let m = load(&model)?;
            let x = selection(&m, &sel)?;
            let a = abstract_system(&m, &x.names)?;
            write_or_print(out.as_deref(), &pretty_print(&a))?;
            if let Some(kind) = check {
                let cap = state_cap();
                let (lc, la) = (build_lts_capped(&m, cap)?, build_lts_capped(&a, cap)?);
                let v = match kind {
                    CheckArg::Sim => check_simulation(&lc, &la),
                    CheckArg::Bisim => check_bisimulation(&lc, &la),
                };
                let what = match kind {
                    CheckArg::Sim => "simulation",
                    CheckArg::Bisim => "bisimulation",
                };
                verdict(v.holds, what, v.reason, &v.trace)?;
            }
        }
        Command::Lts { model, format, cap, out } => {
            let m = load(&model)?;
            let lts = build_lts_capped(&m, cap.unwrap_or_else(state_cap))?;
            let text = match format {
                Format::Json => to_json(json!(lts)),
                Format::Dot => lts.to_dot(),
            };
            write_or_print(out.as_deref(), &text)?;
        }
        Command::Testgen { model, sel, tp, max_depth, out } => {
            let m = load(&model)?;
            let x = selection(&m, &sel)?;
            let a = abstract_system(&m, &x.names)?;
            let purposes = parse_purposes(&read(&tp)?, &a)?;
            let runs = run_pipeline(&m, &a, &purposes, max_depth)?;
            let reports: Vec<_> = runs.iter().map(|r| r.report.clone()).collect();
            print!("{}", report_table(&reports));
            if let Some(path) = out {
                let doc: Vec<_> = runs
                    .iter()
                    .map(|run| {
                        let tests: Vec<_> = run
                            .tests
                            .iter()
                            .zip(&run.results)
                            .map(|(t, res)| match res {
                                Ok(it) => json!({ "abstract": t.steps, "concrete": it.steps }),
                                Err(e) => json!({
                                    "abstract": t.steps,
                                    "failure": {
                                        "kind": match e {
                                            InstantiateError::NoPath { .. } => "no_path",
                                            InstantiateError::DepthExceeded { .. } => "depth_exceeded",
                                        },
                                        "message": e.to_string(),
                                        "prefix": e.prefix().steps,
                                    },
                                }),
                            })
                            .collect();
                        json!({ "purpose": run.purpose, "report": run.report, "tests": tests })
                    })
                    .collect();
                write_or_print(Some(&path), &to_json(json!(doc)))?;
            }
            if let Some(r) = reports.iter().find(|r| r.empty_product) {
                return Err(CliError::EmptyProduct(format!("`{}`: no accepting state is reachable", r.purpose)));
            }
        }
        Command::Check { model } => {
            let m = load(&model)?;
            let v = check_correct(&m)?;
            verdict(v.holds, "invariant", v.reason, &v.trace)?;
        }
        Command::Selfcheck { seed, count } => {
            for i in 0..count {
                let mut r = rng(seed.wrapping_add(i));
                let m = random_model(&mut r);
                let obs = random_observed(&mut r, &m);
                let cap = state_cap();
                let lc = build_lts_capped(&m, cap)?;
                for (method, name) in [(Method::DataFlow, "simulation"), (Method::DataControlFlow, "bisimulation")] {
                    let x = select(&m, &obs, method)?;
                    let a = abstract_system(&m, &x.names)?;
                    let la = build_lts_capped(&a, cap)?;
                    let v = match method {
                        Method::DataFlow => check_simulation(&lc, &la),
                        Method::DataControlFlow => check_bisimulation(&lc, &la),
                    };
                    if !v.holds {
                        return Err(CliError::Check(format!(
                            "seed {}: {name} fails on X = {:?}: {}\n{}",
                            seed.wrapping_add(i),
                            x.names,
                            v.reason.unwrap_or_default(),
                            pretty_print(&m)
                        )));
                    }
                }
            }
            println!("{count} random models: simulation and bisimulation hold");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
