//! `locc`: command-line front end for the local distinguishability toolkit.
//!
//! Exit codes: 0 success or distinguishable, 1 indistinguishable (or an
//! imperfect simulation, or an oracle disagreement), 2 unknown, 64 usage
//! error, 65 bad input data, 70 numerical trouble.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use locc_core::canon::Json;
use locc_core::distinguish::emit_verdict;
use locc_core::ensemble::{emit_ensemble, parse_ensemble_with_tol, random_product_basis, validate, CATALOG_NAMES};
use locc_core::linalg::parse_matrix;
use locc_core::oracle::exhaustive_decide;
use locc_core::relativity::{chain_criterion, overlap_graph};
use locc_core::sim::{
    builtin_protocol, canonicalize_operator, lift_protocol, parse_protocol_file, run_protocol, LocalOperator,
    ProtocolFile, BUILTIN_PROTOCOLS,
};
use locc_core::{catalog, decide, Ensemble, Error, Mode, VerdictKind};

#[derive(Parser)]
#[command(name = "locc", version, about = "Local distinguishability of orthogonal product states")]
struct Cli {
    /// Orthogonality tolerance.
    #[arg(long, global = true, env = "LOCC_TOL", default_value_t = locc_core::DEFAULT_TOL)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether an ensemble is locally distinguishable.
    Check {
        path: PathBuf,
        /// Defaults to the ensemble's own completeness flag.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Emit the verdict as JSON.
        #[arg(long)]
        json: bool,
        /// Print the protocol tree or the exploration down to the stuck sets.
        #[arg(long)]
        trace: bool,
    },
    /// Check orthogonality and completeness.
    Validate { path: PathBuf },
    /// Built-in ensembles.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Run a measurement protocol on every state of an ensemble.
    Simulate {
        ensemble: PathBuf,
        /// Simulator protocol, projective protocol tree, or verdict file.
        #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
        protocol: Option<PathBuf>,
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(BUILTIN_PROTOCOLS))]
        builtin: Option<String>,
    },
    /// Singular value decomposition of a local operator.
    Decompose { matrix: PathBuf },
    /// Compare the decision procedure with the exhaustive search.
    Oracle(OracleArgs),
    /// Overlap graph of one party.
    Graph {
        path: PathBuf,
        #[arg(long)]
        party: usize,
        /// Restrict to these comma-separated labels.
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
    },
    /// Whether the sufficient chain condition for indistinguishability holds.
    Chain { path: PathBuf },
    /// Generate a random complete orthogonal product basis.
    Random {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    Emit {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OracleArgs {
    #[arg(required_unless_present = "seed_sweep", conflicts_with = "seed_sweep")]
    path: Option<PathBuf>,
    /// Number of random bases to compare.
    #[arg(long)]
    seed_sweep: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    dims: Vec<usize>,
    /// Merge rounds per basis; by default seed k uses k mod (number of states).
    #[arg(long)]
    depth: Option<usize>,
    /// First seed of the sweep.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Complete,
    Incomplete,
}

enum Failure {
    Usage(String),
    Io(PathBuf, std::io::Error),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Lib(Error::TooLarge(_)) => 64,
            Failure::Lib(Error::NumericalInstability(_)) => 70,
            Failure::Io(..) | Failure::Lib(_) => 65,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Io(p, e) => format!("cannot read {}: {e}", p.display()),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type Outcome = std::result::Result<u8, Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_owned(), e))
}

fn load_ensemble(path: &Path, tol: f64) -> std::result::Result<Ensemble, Failure> {
    Ok(parse_ensemble_with_tol(&read(path)?, tol)?)
}

fn write_out(text: &str, out: Option<&Path>) -> std::result::Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| Failure::Io(p.to_owned(), e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn with_tol(json: Json, tol: f64) -> Json {
    match json {
        Json::Obj(mut fields) => {
            if !fields.iter().any(|(k, _)| k == "tol") {
                fields.push(("tol".into(), Json::Num(tol)));
            }
            Json::Obj(fields)
        }
        other => Json::obj([("result", other), ("tol", Json::Num(tol))]),
    }
}

fn verdict_code(kind: VerdictKind) -> u8 {
    match kind {
        VerdictKind::Distinguishable => 0,
        VerdictKind::Indistinguishable => 1,
        VerdictKind::Unknown => 2,
    }
}

fn check(path: &Path, mode: Option<ModeArg>, json: bool, trace: bool, tol: f64) -> Outcome {
    let e = load_ensemble(path, tol)?;
    let mode = match mode {
        Some(ModeArg::Complete) => Mode::Complete,
        Some(ModeArg::Incomplete) => Mode::Incomplete,
        None if e.complete() => Mode::Complete,
        None => Mode::Incomplete,
    };
    let v = decide(&e, mode, tol)?;
    if json {
        println!("{}", emit_verdict(&v, tol));
    } else {
        match v.kind() {
            VerdictKind::Unknown => println!("unknown (projective-stuck)"),
            k => println!("{}", k.as_str()),
        }
        if let (true, Some(t)) = (trace, v.trace()) {
            print!("{}", t.render());
        }
    }
    Ok(verdict_code(v.kind()))
}

fn simulate(ensemble: &Path, protocol: Option<&Path>, builtin: Option<&str>, tol: f64) -> Outcome {
    let e = load_ensemble(ensemble, tol)?;
    let root = match (protocol, builtin) {
        (_, Some(name)) => builtin_protocol(name, &e, tol)?,
        (Some(p), None) => match parse_protocol_file(&read(p)?)? {
            ProtocolFile::Sim(root) => root,
            ProtocolFile::Projective(tree) => lift_protocol(&tree, &e, tol)?,
        },
        (None, None) => return Err(Failure::Usage("give a protocol file or --builtin".into())),
    };
    let report = run_protocol(&e, &root, tol)?;
    println!("{}", report.to_json());
    Ok(if report.perfect { 0 } else { 1 })
}

fn oracle_one(e: &Ensemble, tol: f64) -> std::result::Result<(VerdictKind, VerdictKind), Failure> {
    let oracle = exhaustive_decide(e, tol)?;
    let greedy = decide(e, Mode::Complete, tol)?;
    Ok((greedy.kind(), oracle.kind()))
}

fn oracle(args: &OracleArgs, tol: f64) -> Outcome {
    if let Some(path) = &args.path {
        let e = load_ensemble(path, tol)?;
        let (a, b) = oracle_one(&e, tol)?;
        let report = Json::obj([
            ("instance", Json::str(e.name())),
            ("decide", Json::str(a.as_str())),
            ("oracle", Json::str(b.as_str())),
            ("agree", Json::Bool(a == b)),
            ("tol", Json::Num(tol)),
        ]);
        println!("{report}");
        return Ok(if a == b { 0 } else { 1 });
    }
    let n = args.seed_sweep.unwrap_or(0);
    if args.dims.is_empty() || args.dims.contains(&0) {
        return Err(Failure::Usage(format!("invalid --dims {:?}", args.dims)));
    }
    let states: usize = args.dims.iter().product();
    let (mut agree, mut indistinguishable) = (0u64, 0u64);
    let mut mismatches = Vec::new();
    for seed in args.seed..args.seed + n {
        let depth = args.depth.unwrap_or((seed % states as u64) as usize);
        let e = random_product_basis(&args.dims, seed, depth)?;
        let (a, b) = oracle_one(&e, tol)?;
        if a == b {
            agree += 1;
        } else {
            mismatches.push(e.name().to_owned());
        }
        if a == VerdictKind::Indistinguishable {
            indistinguishable += 1;
        }
    }
    let report = Json::obj([
        ("dims", Json::Arr(args.dims.iter().map(|&d| Json::Int(d as i64)).collect())),
        ("instances", Json::Int(n as i64)),
        ("agree", Json::Int(agree as i64)),
        ("indistinguishable", Json::Int(indistinguishable as i64)),
        ("mismatches", Json::strs(&mismatches)),
        ("tol", Json::Num(tol)),
    ]);
    println!("{report}");
    Ok(if mismatches.is_empty() { 0 } else { 1 })
}

fn run(cli: Cli) -> Outcome {
    let tol = cli.tol;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Failure::Usage(format!("tolerance must be positive and finite, got {tol}")));
    }
    match cli.command {
        Command::Check { path, mode, json, trace } => check(&path, mode, json, trace, tol),
        Command::Validate { path } => {
            let e = load_ensemble(&path, tol)?;
            let report = validate(&e, tol);
            println!("{}", report.to_json(tol));
            Ok(if report.passes() { 0 } else { 65 })
        }
        Command::Catalog { action: CatalogAction::List } => {
            for name in CATALOG_NAMES {
                println!("{name}");
            }
            Ok(0)
        }
        Command::Catalog { action: CatalogAction::Emit { name, out } } => {
            if !CATALOG_NAMES.contains(&name.as_str()) {
                return Err(Failure::Usage(format!(
                    "unknown catalog ensemble {name:?} (known: {})",
                    CATALOG_NAMES.join(", ")
                )));
            }
            write_out(&emit_ensemble(&catalog(&name)?), out.as_deref())?;
            Ok(0)
        }
        Command::Simulate { ensemble, protocol, builtin } => {
            simulate(&ensemble, protocol.as_deref(), builtin.as_deref(), tol)
        }
        Command::Decompose { matrix } => {
            let m = parse_matrix(&read(&matrix)?)?;
            let c = canonicalize_operator(&LocalOperator { party: 0, matrix: m.clone() }, tol);
            println!("{}", c.to_json(&m, tol));
            Ok(0)
        }
        Command::Oracle(args) => oracle(&args, tol),
        Command::Graph { path, party, labels } => {
            let e = load_ensemble(&path, tol)?;
            let subset = match labels {
                Some(ls) => e.indices_of(&ls)?,
                None => e.all_indices(),
            };
            let g = overlap_graph(&e, &subset, party, tol)?;
            println!("{}", with_tol(g.to_json(), tol));
            Ok(0)
        }
        Command::Chain { path } => {
            let e = load_ensemble(&path, tol)?;
            let holds = chain_criterion(&e, tol)?;
            println!("{}", Json::obj([("criterion", Json::Bool(holds)), ("tol", Json::Num(tol))]));
            Ok(0)
        }
        Command::Random { dims, seed, depth, out } => {
            if dims.contains(&0) {
                return Err(Failure::Usage(format!("invalid --dims {dims:?}")));
            }
            write_out(&emit_ensemble(&random_product_basis(&dims, seed, depth)?), out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
