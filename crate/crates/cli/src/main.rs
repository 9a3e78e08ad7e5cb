use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use toroidal_core::blowup::{domain_charts, target_charts, DomainCenter, TargetCenter};
use toroidal_core::fan::FanFile;
use toroidal_core::germ::{Germ, ThreePointGerm};
use toroidal_core::jacobian::{lambda_of, theorem391_classify};
use toroidal_core::principalize::{is_locally_principal, principalize, Strategy, DEFAULT_BUDGET};
use toroidal_core::rational::parse_q;
use toroidal_core::relations::{normalize3, resolve3, ThreePointPreRel};
use toroidal_core::suite::{CriterionReport, CRITERIA};
use toroidal_core::tau::tau_report;
use toroidal_core::tree::{ChartTree, NodeStatus};
use toroidal_core::Error;

#[derive(Parser, Debug)]
#[command(name = "toroidal", version, about = "Local toroidalization calculus: germs, tau, blow-ups, relations, fans")]
struct Cli {
    /// Seed for randomized suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Truncation degree for series payloads.
    #[arg(long, global = true, default_value_t = 8)]
    trunc: u32,
    /// Expansion budget for resolve3.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normal-form tag of a germ.
    Classify {
        #[arg(long)]
        germ: PathBuf,
    },
    /// The tau invariant of a 3-point germ.
    Tau {
        #[arg(long)]
        germ: PathBuf,
    },
    /// Charts of a domain or target blow-up.
    Blowup {
        #[arg(long)]
        germ: PathBuf,
        /// Domain center: point, 2curve:x,y or curve:x,z.
        #[arg(long, conflicts_with = "target")]
        center: Option<String>,
        /// Target center: point, uv, uw or vw.
        #[arg(long)]
        target: Option<String>,
        /// Translation constants for the translated charts, e.g. 1,-2/3.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        constants: Vec<String>,
    },
    /// Resolve the 3-point pre-relation w^c - lambda u^a v^b.
    Resolve3 {
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, allow_hyphen_values = true)]
        b: i64,
        #[arg(long, allow_hyphen_values = true)]
        c: i64,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        lambda: String,
    },
    /// Principalize the divisors of a fan file.
    Principalize {
        #[arg(long)]
        fan: PathBuf,
        #[arg(long, default_value = "pair")]
        strategy: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET as u64, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
    },
    /// lambda(E) on each boundary component of a germ.
    Lambda {
        #[arg(long)]
        germ: PathBuf,
    },
    /// Seeded acceptance property suites.
    Suite {
        /// Run only these criteria (comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
}

/// Settings shared by every subcommand.
#[derive(Clone, Debug, Serialize)]
struct RunConfig {
    seed: Option<u64>,
    trunc_degree: u32,
    max_steps: Option<u64>,
    #[serde(skip)]
    format: Format,
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    seed: Option<u64>,
    trunc_degree: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_steps: Option<u64>,
    command: &'a str,
}

enum Failure {
    Input(String),
    Op(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) => Failure::Input(e.to_string()),
            e => Failure::Op(e),
        }
    }
}

type Out = Result<(String, bool), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_germ(path: &Path) -> Result<Germ, Failure> {
    Ok(Germ::from_json(&read(path)?)?)
}

fn report(cfg: &RunConfig, command: &str, body: Value) -> String {
    let prov = Provenance {
        tool: "toroidal",
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        trunc_degree: cfg.trunc_degree,
        max_steps: cfg.max_steps,
        command,
    };
    let mut obj = serde_json::Map::new();
    obj.insert("provenance".into(), serde_json::to_value(prov).expect("provenance"));
    match body {
        Value::Object(m) => obj.extend(m),
        other => {
            obj.insert("result".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("report");
    s.push('\n');
    s
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable report")
}

fn json_only(cfg: &RunConfig, command: &str) -> Result<(), Failure> {
    if cfg.format == Format::Dot {
        return Err(Failure::Input(format!("{command} has no DOT output")));
    }
    Ok(())
}

fn germ_tree_output(cfg: &RunConfig, command: &str, tree: &ChartTree<Germ>) -> String {
    match cfg.format {
        Format::Dot => tree.to_dot(command, |g| serde_json::to_string(g).expect("germ json")),
        Format::Json => report(cfg, command, json!({ "tree": to_value(tree) })),
    }
}

fn parse_target(s: &str) -> Result<TargetCenter, Failure> {
    match s {
        "point" => Ok(TargetCenter::Point),
        "uv" => Ok(TargetCenter::CurveUV),
        "uw" => Ok(TargetCenter::CurveUW),
        "vw" => Ok(TargetCenter::CurveVW),
        _ => Err(Failure::Input(format!("unknown target center {s:?} (point|uv|uw|vw)"))),
    }
}

fn run(cli: Cli) -> Out {
    let cfg = RunConfig { seed: cli.seed, trunc_degree: cli.trunc, max_steps: cli.max_steps, format: cli.format };
    match cli.command {
        Command::Classify { germ } => {
            json_only(&cfg, "classify")?;
            let g = load_germ(&germ)?;
            let form = g.classify()?;
            let body = json!({ "form": form, "toroidal": form.is_toroidal() });
            Ok((report(&cfg, "classify", body), true))
        }
        Command::Tau { germ } => {
            json_only(&cfg, "tau")?;
            let g = ThreePointGerm::from_germ(&load_germ(&germ)?)?;
            Ok((report(&cfg, "tau", to_value(&tau_report(&g)?)), true))
        }
        Command::Blowup { germ, center, target, constants } => {
            let g = load_germ(&germ)?;
            let constants = constants.iter().map(|c| parse_q(c)).collect::<Result<Vec<_>, _>>()?;
            let mut tree = ChartTree::new(g.clone());
            match (center, target) {
                (Some(c), None) => {
                    let center = DomainCenter::parse(&c)?;
                    for (chart, child) in domain_charts(&center, &g, &constants, cfg.trunc_degree)? {
                        tree.push(0, chart, child, NodeStatus::Resolved);
                    }
                }
                (None, Some(t)) => {
                    let tpg = ThreePointGerm::from_germ(&g)?;
                    for (chart, child) in target_charts(&tpg, parse_target(&t)?)? {
                        tree.push(0, chart, child.to_germ(cfg.trunc_degree), NodeStatus::Resolved);
                    }
                }
                _ => return Err(Failure::Input("blowup needs exactly one of --center or --target".into())),
            }
            Ok((germ_tree_output(&cfg, "blowup", &tree), true))
        }
        Command::Resolve3 { a, b, c, lambda } => {
            let r = ThreePointPreRel::new(a, b, c, parse_q(&lambda)?)?;
            let budget = cfg.max_steps.unwrap_or(200) as usize;
            let res = resolve3(&r, budget)?;
            let closed = res.all_leaves_closed();
            let out = match cfg.format {
                Format::Dot => res.tree.to_dot("resolve3", |n| n.to_string()),
                Format::Json => report(
                    &cfg,
                    "resolve3",
                    json!({
                        "prerel": to_value(&r),
                        "normal_form": to_value(&normalize3(&r)?),
                        "all_leaves_closed": closed,
                        "depth": res.tree.depth(),
                        "certificate": to_value(&res.certificate),
                        "tree": to_value(&res.tree),
                    }),
                ),
            };
            Ok((out, closed))
        }
        Command::Principalize { fan, strategy, budget } => {
            json_only(&cfg, "principalize")?;
            let (f, ds) = FanFile::from_json(&read(&fan)?)?;
            let strategy: Strategy = strategy.parse()?;
            let p = principalize(&f, &ds, strategy, budget as usize)?;
            let principal = is_locally_principal(&p.fan, &p.divisors);
            let body = json!({
                "strategy": strategy,
                "rounds": p.history.len(),
                "locally_principal": principal,
                "history": to_value(&p.history),
                "fan": to_value(&FanFile::new(&p.fan, &p.divisors)),
            });
            Ok((report(&cfg, "principalize", body), principal))
        }
        Command::Lambda { germ } => {
            json_only(&cfg, "lambda")?;
            let g = load_germ(&germ)?;
            let mut body = to_value(&lambda_of(&g)?);
            if let (Value::Object(m), Ok(v)) = (&mut body, theorem391_classify(&g)) {
                m.insert("classification".into(), to_value(&v));
            }
            Ok((report(&cfg, "lambda", body), true))
        }
        Command::Suite { only } => {
            json_only(&cfg, "suite")?;
            let seed = cfg.seed.ok_or_else(|| Failure::Input("suite needs --seed".into()))?;
            for o in &only {
                if !CRITERIA.iter().any(|(id, _)| id == o) {
                    return Err(Failure::Input(format!("unknown criterion {o:?}")));
                }
            }
            let mut results: Vec<CriterionReport> = vec![];
            for (id, f) in CRITERIA {
                if !only.is_empty() && !only.iter().any(|o| o == id) {
                    continue;
                }
                let start = Instant::now();
                let r = f(seed);
                eprintln!(
                    "{} {id}: {} cases, {:.2}s",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.cases,
                    start.elapsed().as_secs_f64()
                );
                results.push(r);
            }
            let passed = results.iter().all(|r| r.passed);
            let body = json!({ "passed": passed, "criteria": to_value(&results) });
            Ok((report(&cfg, "suite", body), passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, ok)) => {
            print!("{out}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Input(msg)) => {
            let prefix = if msg.starts_with("ParseError") { "" } else { "ParseError: " };
            eprintln!("error: {prefix}{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Op(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
