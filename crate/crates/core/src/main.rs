use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{Map, Value};

use nblab::reproduce::reproduce_all;
use nblab::scenario::{self, Scenario, ScenarioError};

#[derive(Parser)]
#[command(name = "nblab", version, about = "Nonlocal boundary regularity lab")]
struct Cli {
    /// Output root; NBLAB_OUT overrides the default `nblab-out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel loops and independent scenarios.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Kernel spec: a JSON file or inline JSON.
    #[arg(long)]
    kernel: Option<String>,
    /// Experiment parameters: a JSON file or inline JSON object.
    #[arg(long)]
    params: Option<String>,
    /// Scenario name, used as the output directory.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the Fourier symbol.
    Symbol(Common),
    /// Wiener-Hopf factorization of the symbol.
    Factor(Common),
    /// Half-line barrier by exhaustion.
    Barrier(Common),
    /// Torsion function on an interval.
    Torsion(Common),
    /// Dirichlet solve on a domain.
    Solve(Common),
    /// Decay, Hopf and Hölder scans of a solution.
    BoundaryCheck {
        #[command(flatten)]
        common: Common,
        /// Solution CSV written by `solve`.
        #[arg(long)]
        solution: Option<String>,
        /// Domain JSON file.
        #[arg(long)]
        geometry: Option<String>,
    },
    /// Boundary Harnack quotient and expansion check.
    Bhp(Common),
    /// Monte Carlo exit times.
    Mc {
        #[command(flatten)]
        common: Common,
        #[arg(long = "R")]
        r: Option<f64>,
        /// Comma-separated starting points.
        #[arg(long, value_delimiter = ',')]
        x: Option<Vec<f64>>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// s-Dini integral of a modulus.
    Dini(Common),
    /// Run the acceptance matrix.
    ReproduceAll {
        /// Reduced grids and looser tolerances.
        #[arg(long)]
        quick: bool,
    },
    /// Run scenario files.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
    },
}

fn out_root(cli_out: &Option<PathBuf>) -> PathBuf {
    if let Ok(v) = std::env::var("NBLAB_OUT") {
        if !v.is_empty() {
            return PathBuf::from(v);
        }
    }
    cli_out.clone().unwrap_or_else(|| PathBuf::from("nblab-out"))
}

/// Inline JSON when the argument starts with `{`, otherwise a file.
fn json_arg(arg: &str, what: &str) -> Result<Value, ScenarioError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| ScenarioError::Schema(format!("--{what}: cannot read {arg}: {e}")))?
    };
    serde_json::from_str(&text)
        .map_err(|e| ScenarioError::Schema(format!("--{what}: line {} column {}: {e}", e.line(), e.column())))
}

fn build(experiment: &str, common: &Common, extra: Map<String, Value>) -> Result<Scenario, ScenarioError> {
    let mut params = match &common.params {
        Some(p) => json_arg(p, "params")?,
        None => Value::Object(Map::new()),
    };
    let Value::Object(obj) = &mut params else {
        return Err(ScenarioError::Schema("--params must be a JSON object".into()));
    };
    obj.extend(extra);
    let mut doc = serde_json::json!({
        "name": common.name.clone().unwrap_or_else(|| experiment.to_string()),
        "experiment": experiment,
        "params": params,
    });
    if let Some(k) = &common.kernel {
        doc["kernel"] = json_arg(k, "kernel")?;
    }
    let sc = Scenario::parse(&doc.to_string(), None)?;
    if sc.kernel.is_none() && experiment != "dini" {
        return Err(ScenarioError::Schema(format!("{experiment} needs --kernel")));
    }
    Ok(sc)
}

fn report_outcome(res: Result<scenario::Outcome, ScenarioError>) -> u8 {
    match res {
        Ok(o) => {
            for c in &o.report.criteria {
                println!(
                    "{} {:<28} {:.6e} ({})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold
                );
            }
            println!("artifacts in {}", o.dir.display());
            if o.report.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => fail(e),
    }
}

fn fail(e: ScenarioError) -> u8 {
    match &e {
        ScenarioError::Schema(_) => eprintln!("error: {e}"),
        ScenarioError::Numerical(inner) => {
            let payload = serde_json::json!({"error": format!("{inner:?}"), "message": inner.to_string()});
            eprintln!("numerical failure: {payload}");
        }
    }
    e.exit_code() as u8
}

fn run_one(experiment: &str, common: &Common, extra: Map<String, Value>, root: &Path) -> u8 {
    report_outcome(build(experiment, common, extra).and_then(|sc| scenario::run(&sc, root)))
}

fn run_files(files: &[PathBuf], root: &Path) -> u8 {
    let codes: Vec<(PathBuf, Result<scenario::Outcome, ScenarioError>)> = files
        .par_iter()
        .map(|f| (f.clone(), Scenario::load(f).and_then(|sc| scenario::run(&sc, root))))
        .collect();
    let mut worst = 0;
    for (f, res) in codes {
        println!("== {}", f.display());
        let code = report_outcome(res);
        // Precedence: schema errors, numerical errors, failed criteria.
        worst = match (worst, code) {
            (2, _) | (_, 2) => 2,
            (3, _) | (_, 3) => 3,
            (a, b) => a.max(b),
        };
    }
    worst
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let root = out_root(&cli.out);
    let none = Map::new;
    let code = match &cli.command {
        Command::Symbol(c) => run_one("symbol", c, none(), &root),
        Command::Factor(c) => run_one("factor", c, none(), &root),
        Command::Barrier(c) => run_one("barrier", c, none(), &root),
        Command::Torsion(c) => run_one("torsion", c, none(), &root),
        Command::Solve(c) => run_one("solve", c, none(), &root),
        Command::Bhp(c) => run_one("bhp", c, none(), &root),
        Command::Dini(c) => run_one("dini", c, none(), &root),
        Command::BoundaryCheck { common, solution, geometry } => {
            let mut extra = none();
            if let Some(s) = solution {
                extra.insert("solution".into(), Value::String(s.clone()));
            }
            match geometry.as_deref().map(|g| json_arg(g, "geometry")).transpose() {
                Ok(Some(d)) => {
                    extra.insert("domain".into(), d);
                    run_one("boundary-check", common, extra, &root)
                }
                Ok(None) => run_one("boundary-check", common, extra, &root),
                Err(e) => fail(e),
            }
        }
        Command::Mc { common, r, x, paths, seed } => {
            let mut extra = none();
            if let Some(r) = r {
                extra.insert("r".into(), (*r).into());
            }
            if let Some(x) = x {
                extra.insert("x".into(), x.clone().into());
            }
            if let Some(p) = paths {
                extra.insert("paths".into(), (*p).into());
            }
            if let Some(s) = seed {
                extra.insert("seed".into(), (*s).into());
            }
            run_one("mc", common, extra, &root)
        }
        Command::ReproduceAll { quick } => match reproduce_all(*quick, &root, |r| println!("{}", r.line())) {
            Ok(s) => {
                println!("summary written to {}", root.join("summary.json").display());
                if s.passed {
                    0
                } else {
                    1
                }
            }
            Err(e) => fail(ScenarioError::Numerical(e)),
        },
        Command::Run { scenarios } => run_files(scenarios, &root),
    };
    ExitCode::from(code)
}
