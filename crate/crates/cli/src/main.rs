use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mdecomp::decomp::{self, Decomposition};
use mdecomp::generate::{self, StarTarget};
use mdecomp::io::{self, Instance};
use mdecomp::pipeline::Method;
use mdecomp::system::{Requirement, SetSystem};
use mdecomp::{nae3sat, rational, report, Error};

#[derive(Parser)]
#[command(name = "mdecomp", version, about = "Exact feasible decompositions of marginals over abstract networks")]
struct Cli {
    /// Seed for generators and samplers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Refuse inputs whose ground set is larger than this.
    #[arg(long, global = true)]
    guard_max_elements: Option<usize>,
    /// Include per-iteration traces of the label computations.
    #[arg(long, global = true)]
    emit_trace: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Build a feasible decomposition for an instance.
    Decompose {
        instance: PathBuf,
        /// auto, digraph, abstract, mfmc, brute-force or conservation.
        #[arg(long, default_value = "auto", value_parser = parse_method)]
        method: Method,
    },
    /// Minimum-cost member; costs default to rho + mu of the instance.
    ShortestPath {
        instance: PathBuf,
        /// JSON object mapping labels to costs.
        #[arg(long)]
        costs: Option<PathBuf>,
    },
    /// Equilibrium of the interdiction game on an instance with u, c, d.
    SolveGame { instance: PathBuf },
    /// Affine form of a chain requirement on a poset (poset file) or of a
    /// path table on an acyclic digraph (instance file).
    ReduceConservation { input: PathBuf },
    /// Check a decomposition against an instance.
    Verify { instance: PathBuf, decomposition: PathBuf },
    /// Draw sets from a decomposition, or from independent rounding of rho.
    Sample {
        instance: PathBuf,
        #[arg(long)]
        decomposition: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Write a seeded random instance.
    Generate {
        #[arg(value_enum)]
        kind: Kind,
        /// Nodes (dag, game), elements (poset, explicit) or variables (nae3sat).
        #[arg(long, default_value_t = 6)]
        size: usize,
        /// Clause count for nae3sat.
        #[arg(long, default_value_t = 8)]
        clauses: usize,
        /// How the marginals relate to the covering condition.
        #[arg(long, value_enum, default_value_t = Star::Tight)]
        star: Star,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Dag,
    Poset,
    Explicit,
    Game,
    Nae3sat,
    Triangle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Star {
    Tight,
    Holds,
    Raw,
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).ok_or_else(|| format!("unknown method {s:?}"))
}

/// Exit 1: the tool was misused. Exit 2: the mathematics says no.
enum Failure {
    Usage(String),
    Infeasible(Value),
}

impl Failure {
    fn from_error(system: Option<&SetSystem>, e: Error) -> Self {
        if e.is_infeasibility() {
            Failure::Infeasible(io::error_json(system, &e))
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Outcome = Result<Value, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn guard(cli: &Cli, system: &SetSystem) -> Result<(), Failure> {
    match cli.guard_max_elements {
        Some(limit) if system.len() > limit => {
            Err(Failure::Usage(format!("ground set has {} elements, above --guard-max-elements {limit}", system.len())))
        }
        _ => Ok(()),
    }
}

fn load_instance(cli: &Cli, path: &Path) -> Result<Instance, Failure> {
    let inst = io::parse_instance(&read(path)?).map_err(usage)?;
    guard(cli, &inst.system)?;
    Ok(inst)
}

fn load_decomposition(system: &SetSystem, path: &Path) -> Result<Decomposition, Failure> {
    io::parse_decomposition(system, &read(path)?).map_err(usage)
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Decompose { instance, method } => {
            let inst = load_instance(cli, instance)?;
            report::decompose(&inst, *method, cli.emit_trace).map_err(|e| match e {
                Error::NotWeakMfmc => Failure::Infeasible(report::not_mfmc_witness(&inst)),
                e => Failure::from_error(Some(&inst.system), e),
            })
        }
        Command::ShortestPath { instance, costs } => {
            let inst = load_instance(cli, instance)?;
            let gamma = match costs {
                Some(p) => {
                    let map = serde_json::from_str(&read(p)?).map_err(|e| Failure::Usage(format!("costs: {e}")))?;
                    io::vector_from_map(&inst.system, &map).map_err(usage)?
                }
                None => report::default_costs(&inst),
            };
            report::shortest_path(&inst.system, &gamma, cli.emit_trace).map_err(usage)
        }
        Command::SolveGame { instance } => {
            let file = io::parse_instance_file(&read(instance)?).map_err(usage)?;
            let game = file.build_game().map_err(usage)?;
            guard(cli, &game.system)?;
            report::solve_game(&game).map_err(|e| Failure::from_error(Some(&game.system), e))
        }
        Command::ReduceConservation { input } => {
            let text = read(input)?;
            let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("input: {e}")))?;
            if value.get("covers").is_some() {
                let inst = io::parse_poset(&text).map_err(usage)?;
                guard(cli, &inst.system)?;
                report::reduce_poset(&inst).map_err(|e| Failure::from_error(Some(&inst.system), e))
            } else {
                let inst = load_instance(cli, input)?;
                let Requirement::Table(pi) = &inst.requirement else {
                    return Err(Failure::Usage("reduce-conservation needs a \"pi\" table".into()));
                };
                report::reduce_digraph(&inst.system, pi).map_err(|e| Failure::from_error(Some(&inst.system), e))
            }
        }
        Command::Verify { instance, decomposition } => {
            let inst = load_instance(cli, instance)?;
            let x = load_decomposition(&inst.system, decomposition)?;
            let (v, passed) = report::verify(&inst, &x).map_err(usage)?;
            if passed {
                Ok(v)
            } else {
                Err(Failure::Infeasible(v))
            }
        }
        Command::Sample { instance, decomposition, count } => {
            let inst = load_instance(cli, instance)?;
            let mut rng = generate::rng(cli.seed);
            let (source, samples): (&str, Vec<Vec<usize>>) = match decomposition {
                Some(p) => {
                    let x = load_decomposition(&inst.system, p)?;
                    ("decomposition", (0..*count).map(|_| x.sample(&mut rng)).collect())
                }
                None => {
                    let d = decomp::independent_rounding(&inst.rho);
                    ("independent", (0..*count).map(|_| d.sample(&mut rng)).collect())
                }
            };
            Ok(json!({
                "source": source,
                "seed": cli.seed,
                "samples": samples.iter().map(|s| inst.system.labels_of(s)).collect::<Vec<_>>(),
            }))
        }
        Command::Generate { kind, size, clauses, star } => {
            generate_instance(cli, *kind, *size, *clauses, *star).map_err(usage)
        }
    }
}

fn generate_instance(cli: &Cli, kind: Kind, size: usize, clauses: usize, star: Star) -> mdecomp::Result<Value> {
    let mut rng = generate::rng(cli.seed);
    let target = match star {
        Star::Tight => StarTarget::Tight,
        Star::Holds => StarTarget::Holds,
        Star::Raw => StarTarget::Raw,
    };
    let affine = |rng: &mut _, system: SetSystem| -> mdecomp::Result<Value> {
        let (rho, mu) = generate::random_marginals(rng, &system, 4, 0.5, target)?;
        to_value(io::instance_file(&system, &rho, &Requirement::Affine(mu))?)
    };
    match kind {
        Kind::Dag => {
            let system = generate::random_dag(&mut rng, size, 0.3)?;
            affine(&mut rng, system)
        }
        Kind::Poset => {
            let system = generate::random_poset(&mut rng, size, 0.4)?;
            affine(&mut rng, system)
        }
        Kind::Explicit => {
            let system = generate::random_explicit_network(&mut rng, size)?;
            affine(&mut rng, system)
        }
        Kind::Game => to_value(io::game_file(&generate::random_game(&mut rng, size, false)?)),
        Kind::Nae3sat => {
            let inst = nae3sat::random_instance(&mut rng, size, clauses)?;
            let r = nae3sat::reduce(&inst)?;
            to_value(io::instance_file(&r.system, &r.rho, &Requirement::Table(r.pi))?)
        }
        Kind::Triangle => {
            let system = generate::triangle();
            let half = mdecomp::Marginals::new(vec![rational::ratio(1, 2); 3])?;
            let mu = mdecomp::AffineRequirement::zeros(3);
            to_value(io::instance_file(&system, &half, &Requirement::Affine(mu))?)
        }
    }
}

fn to_value(file: io::InstanceFile) -> mdecomp::Result<Value> {
    serde_json::to_value(file).map_err(|e| Error::Parse(e.to_string()))
}

fn text(v: &Value) -> String {
    let mut out = String::new();
    render(v, 0, &mut out);
    out
}

fn render(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if x.is_object() || x.as_array().is_some_and(|a| a.iter().any(|y| y.is_object() || y.is_array())) {
                    out.push_str(&format!("{pad}{k}:\n"));
                    render(x, indent + 1, out);
                } else {
                    out.push_str(&format!("{pad}{k}: {}\n", inline(x)));
                }
            }
        }
        Value::Array(a) => {
            for x in a {
                if x.is_object() {
                    out.push_str(&format!("{pad}-\n"));
                    render(x, indent + 1, out);
                } else {
                    out.push_str(&format!("{pad}- {}\n", inline(x)));
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", inline(other))),
    }
}

fn inline(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(a) => format!("{{{}}}", a.iter().map(inline).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

fn emit(format: Format, v: &Value) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(v).expect("values serialize")),
        Format::Text => print!("{}", text(v)),
    }
}

fn main() -> ExitCode {
    // clap reports bad arguments with status 2, which here means infeasible.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(v) => {
            emit(cli.format, &v);
            ExitCode::SUCCESS
        }
        Err(Failure::Infeasible(v)) => {
            emit(cli.format, &v);
            ExitCode::from(2)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("mdecomp: {msg}");
            ExitCode::from(1)
        }
    }
}
