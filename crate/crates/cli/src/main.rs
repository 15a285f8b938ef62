//! `auction`: run mechanisms, check properties and print certificates from JSON files.
//!
//! Exit codes: 0 holds, 1 violated, 2 invalid input, 3 internal error, 4 inconclusive.

mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use auction_core::checkers::{
    check_ic_bruteforce, check_ir, check_npt, check_nt_indivisible, check_pi, check_structural_po, check_vm,
    check_wmon, default_grid, search_nt_divisible, FnMechanism, Mechanism, PropertyReport, ReportPair, Verdict,
    DEFAULT_GRID_POINTS, DEFAULT_NT_CAP, DEFAULT_PI_TOL, DEFAULT_TOL,
};
use auction_core::clinching::{epsilon_oracle, run_clinching};
use auction_core::demos::{forced_allocation_rule, singdim_bounds, wmon_certificate};
use auction_core::hetero::{run_hetero_divisible, run_hetero_indivisible_randomized, Clinching, HeteroDivisible};
use auction_core::{utility, AuctionError, MultiDimInstance, Outcome, SingleDimInstance, SingleItemInstance};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use io::{emit, read_json, Instance, InstanceFile, OutcomeFile};

const DEFAULT_EPSILON: f64 = 1e-6;
const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Parser)]
#[command(name = "auction", version, about = "Budget-constrained auctions and property checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism on an instance and write the outcome.
    Run(RunArgs),
    /// Check a property of an outcome or of a mechanism.
    Check(CheckArgs),
    /// Print one of the impossibility certificates.
    #[command(subcommand)]
    Demo(Demo),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MechanismName {
    Clinching,
    HeteroDiv,
    HeteroRand,
    Oracle,
}

#[derive(Args)]
struct SeedArg {
    /// Seed for randomized steps.
    #[arg(long, env = "AUCTION_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    mechanism: MechanismName,
    #[arg(long)]
    input: PathBuf,
    /// Outcome file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    /// Price step of the reference oracle.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Property {
    Ir,
    Npt,
    PoNt,
    PoStructural,
    Vm,
    Pi,
    Wmon,
    Ic,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(value_enum)]
    property: Property,
    #[arg(long)]
    input: PathBuf,
    /// Outcome to check (ir, npt, po-nt, po-structural). Without it the mechanism is run.
    #[arg(long)]
    outcome: Option<PathBuf>,
    #[arg(long, value_enum)]
    mechanism: Option<MechanismName>,
    /// Report pairs for wmon: a JSON array of {agent, report, alternative}.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Report file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Slack; defaults to 1e-9, or 1e-6 for pi.
    #[arg(long)]
    tol: Option<f64>,
    /// Misreport grid size for vm, pi and ic.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid: usize,
    /// Random trades tried by po-nt on divisible outcomes.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Largest item count po-nt enumerates exactly.
    #[arg(long, default_value_t = DEFAULT_NT_CAP)]
    nt_cap: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Subcommand)]
enum Demo {
    /// Weak-monotonicity contradiction for a two-agent two-item instance.
    Multidim {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// multi_dim instance; the built-in 2x2 example when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Payment lower bounds against agent 1's value in the single-dimensional example.
    Singdim {
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        alphas: Vec<f64>,
        #[arg(long)]
        v2: f64,
        #[arg(long)]
        b1: f64,
        #[arg(long)]
        v1: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Holds = 0,
    Violated = 1,
    Invalid = 2,
    Internal = 3,
    Inconclusive = 4,
}

impl From<Verdict> for Exit {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Holds => Exit::Holds,
            Verdict::Violated => Exit::Violated,
            Verdict::Inconclusive => Exit::Inconclusive,
        }
    }
}

fn error_exit(e: &AuctionError) -> Exit {
    match e {
        AuctionError::InvalidInput(_) => Exit::Invalid,
        _ => Exit::Internal,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = match &cli.command {
        Command::Run(a) => a.output.clone(),
        Command::Check(a) => a.output.clone(),
        Command::Demo(Demo::Multidim { output, .. } | Demo::Singdim { output, .. }) => output.clone(),
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Demo(d) => cmd_demo(&d),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let kind = if error_exit(&e) == Exit::Invalid { "invalid_input" } else { "internal" };
            let report = json!({ "error": { "kind": kind, "message": e.to_string() } });
            // Best effort: the report goes where the result would have gone.
            if emit(&report, output.as_deref()).is_err() {
                let _ = emit(&report, None);
            }
            error_exit(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn load_instance(path: &Path) -> Result<(Instance, bool), AuctionError> {
    let file: InstanceFile = read_json(path)?;
    Ok((file.build()?, file.divisible))
}

fn oracle_mechanism(epsilon: f64) -> impl Mechanism {
    FnMechanism::new("oracle", move |inst: &SingleDimInstance| {
        if inst.alphas() != [1.0] {
            return Err(AuctionError::InvalidInput("oracle runs on one item of quality 1".into()));
        }
        epsilon_oracle(&SingleItemInstance::reported(inst.budgets().to_vec(), inst.valuations().to_vec())?, epsilon)
    })
}

fn execute(mechanism: MechanismName, instance: &Instance, seed: u64, epsilon: f64) -> Result<Outcome, AuctionError> {
    match mechanism {
        MechanismName::Clinching => run_clinching(&instance.single_item()?),
        MechanismName::Oracle => epsilon_oracle(&instance.single_item()?, epsilon),
        MechanismName::HeteroDiv => run_hetero_divisible(&instance.single_dim()?),
        MechanismName::HeteroRand => run_hetero_indivisible_randomized(&instance.single_dim()?, seed),
    }
}

fn mechanism_label(m: MechanismName) -> &'static str {
    match m {
        MechanismName::Clinching => "clinching",
        MechanismName::HeteroDiv => "hetero-div",
        MechanismName::HeteroRand => "hetero-rand",
        MechanismName::Oracle => "oracle",
    }
}

fn summary(instance: &Instance, outcome: &Outcome) -> Result<String, AuctionError> {
    let mut lines = vec![format!("{:>5}  {:<28} {:>14} {:>14}", "agent", "allocation", "payment", "utility")];
    for i in 0..outcome.num_agents() {
        let u = match instance {
            Instance::SingleItem(x) => utility(x, outcome, i)?,
            Instance::SingleDim(x) => utility(x, outcome, i)?,
            Instance::MultiDim(x) => utility(x, outcome, i)?,
        };
        let row: Vec<String> = outcome.allocation.row(i).iter().map(|x| format!("{x:.6}")).collect();
        let u = u.finite().map_or("-inf".to_string(), |u| format!("{u:.9}"));
        lines.push(format!("{:>5}  {:<28} {:>14.9} {:>14}", i, row.join(" "), outcome.payments[i], u));
    }
    lines.push(format!("revenue {:.9}", outcome.revenue()));
    Ok(lines.join("\n"))
}

fn cmd_run(a: &RunArgs) -> Result<Exit, AuctionError> {
    let (instance, _) = load_instance(&a.input)?;
    let outcome = execute(a.mechanism, &instance, a.seed.seed, a.epsilon)?;
    let mut meta = json!({ "mechanism": mechanism_label(a.mechanism) });
    match a.mechanism {
        MechanismName::HeteroRand => meta["seed"] = json!(a.seed.seed),
        MechanismName::Oracle => meta["epsilon"] = json!(a.epsilon),
        _ => {}
    }
    emit(&OutcomeFile::from_outcome(&outcome, meta), a.output.as_deref())?;
    let table = summary(&instance, &outcome)?;
    if a.output.is_some() {
        println!("{table}");
    } else {
        eprintln!("{table}");
    }
    Ok(Exit::Holds)
}

fn deterministic(m: Option<MechanismName>, epsilon: f64) -> Result<Box<dyn Mechanism>, AuctionError> {
    match m {
        Some(MechanismName::Clinching) => Ok(Box::new(Clinching)),
        Some(MechanismName::HeteroDiv) => Ok(Box::new(HeteroDivisible)),
        Some(MechanismName::Oracle) => Ok(Box::new(oracle_mechanism(epsilon))),
        Some(MechanismName::HeteroRand) => {
            Err(AuctionError::InvalidInput("vm, pi and ic need a deterministic mechanism".into()))
        }
        None => Err(AuctionError::InvalidInput("--mechanism is required for vm, pi and ic".into())),
    }
}

fn outcome_for(a: &CheckArgs, instance: &Instance, divisible: bool) -> Result<Outcome, AuctionError> {
    match (&a.outcome, a.mechanism) {
        (Some(path), _) => read_json::<OutcomeFile>(path)?.build(divisible),
        (None, Some(m)) => execute(m, instance, a.seed.seed, a.epsilon),
        (None, None) => Err(AuctionError::InvalidInput("need --outcome or --mechanism".into())),
    }
}

fn cmd_check(a: &CheckArgs) -> Result<Exit, AuctionError> {
    let (instance, divisible) = load_instance(&a.input)?;
    let tol = a.tol.unwrap_or(if a.property == Property::Pi { DEFAULT_PI_TOL } else { DEFAULT_TOL });
    let report: PropertyReport = match a.property {
        Property::Ir => {
            let out = outcome_for(a, &instance, divisible)?;
            match &instance {
                Instance::SingleItem(i) => check_ir(i, &out, tol)?,
                Instance::SingleDim(i) => check_ir(i, &out, tol)?,
                Instance::MultiDim(i) => check_ir(i, &out, tol)?,
            }
        }
        Property::Npt => check_npt(&outcome_for(a, &instance, divisible)?, tol),
        Property::PoNt => {
            let out = outcome_for(a, &instance, divisible)?;
            let inst = instance.single_dim()?;
            if out.allocation.is_divisible() {
                search_nt_divisible(&inst, &out, a.samples, a.seed.seed, tol)?
            } else {
                check_nt_indivisible(&inst, &out, a.nt_cap, tol)?
            }
        }
        Property::PoStructural => {
            let out = outcome_for(a, &instance, divisible)?;
            check_structural_po(&instance.single_dim()?, &out, tol)?
        }
        Property::Vm | Property::Pi | Property::Ic => {
            let mech = deterministic(a.mechanism, a.epsilon)?;
            let inst = instance.single_dim()?;
            let grid = default_grid(&inst, a.grid);
            match a.property {
                Property::Vm => check_vm(mech.as_ref(), &inst, &grid, tol)?,
                Property::Pi => check_pi(mech.as_ref(), &inst, &grid, tol)?,
                _ => check_ic_bruteforce(mech.as_ref(), &inst, &grid, None, tol)?,
            }
        }
        Property::Wmon => {
            let inst: MultiDimInstance = instance.multi_dim()?;
            let path = a.pairs.as_ref().ok_or_else(|| AuctionError::InvalidInput("wmon needs --pairs".into()))?;
            let pairs: Vec<ReportPair> = read_json(path)?;
            check_wmon(forced_allocation_rule, &inst, &pairs, tol)?
        }
    };
    emit(&report, a.output.as_deref())?;
    Ok(report.verdict.into())
}

fn example_multidim() -> MultiDimInstance {
    MultiDimInstance::new(vec![vec![4.0, 5.0], vec![3.0, 4.0]], vec![5.0, 8.0]).expect("valid example")
}

fn cmd_demo(d: &Demo) -> Result<Exit, AuctionError> {
    match d {
        Demo::Multidim { alpha, beta, input, output } => {
            let inst = match input {
                Some(p) => load_instance(p)?.0.multi_dim()?,
                None => example_multidim(),
            };
            let cert = wmon_certificate(&inst, *alpha, *beta)?;
            emit(&cert, output.as_deref())?;
            Ok(if cert.contradiction { Exit::Holds } else { Exit::Violated })
        }
        Demo::Singdim { alphas, v2, b1, v1, output } => {
            let bounds = singdim_bounds(alphas, *v2, *b1, *v1)?;
            emit(&bounds, output.as_deref())?;
            Ok(if bounds.ir_conflict { Exit::Holds } else { Exit::Violated })
        }
    }
}
