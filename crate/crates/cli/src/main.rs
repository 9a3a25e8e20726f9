//! Command-line front end: evolves walker configurations and emits joint
//! distributions, marginals, entropies, and comparison reports.

mod emit;
mod source;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qwalk_core::measurement::{correlation_entropy_matrix, position_marginal};
use qwalk_core::optical::{
    coherent_conditioned_jpd, coherent_propagate, coherent_separability_check, CoherentField,
    NetworkFile,
};
use qwalk_core::{
    correlation_entropy, jpd_from_state, l1_distance, lift_and_apply, meeting_probability,
    single_click_marginal, walk_unitary, CoinSchedule, FockState, LogBase, Mode, Vertex,
};
use serde::Serialize;

use emit::{JpdDoc, MarginalDoc};
use source::{resolve_pair, resolve_walkers, EvolutionSource, SourceArgs, SpeciesMode};

#[derive(Parser)]
#[command(
    name = "qwalk",
    version,
    about = "Multi-walker discrete-time quantum walk simulator",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve walkers and emit the joint distribution (two or more walkers)
    /// or the position marginal (one walker)
    Run(RunArgs),
    /// Evolve the same two inputs as indistinguishable and distinguishable
    /// walkers and emit one JSON report contrasting them
    Compare(CompareArgs),
    /// Correlation entropy of a stored two-walker JPD, printed to stdout
    Entropy(EntropyArgs),
    /// Check a graph or network file and report its shape
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaseArg {
    /// Entropy in bits (default)
    #[value(name = "2")]
    Two,
    /// Entropy in nats
    #[value(name = "e")]
    E,
}

impl From<BaseArg> for LogBase {
    fn from(base: BaseArg) -> Self {
        match base {
            BaseArg::Two => LogBase::Two,
            BaseArg::E => LogBase::E,
        }
    }
}

impl BaseArg {
    fn label(self) -> &'static str {
        match self {
            BaseArg::Two => "2",
            BaseArg::E => "e",
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,

    /// Initial walker as pos[:coin][:species]; repeatable. The coin is the
    /// neighbor label of the occupied edge mode; omitted, it names the rail
    /// (pos, pos). Defaults to a network's input rails.
    #[arg(long = "walker", value_name = "SPEC", allow_hyphen_values = true)]
    walker: Vec<String>,

    /// Species assignment for specs without an explicit species
    #[arg(long = "walkers", value_enum, default_value = "indistinguishable")]
    species_mode: SpeciesMode,

    /// Output file; stdout when omitted
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Output encoding; defaults to the --out extension, else csv
    #[arg(long, value_enum)]
    emit: Option<Emit>,

    /// Also write the evolved state's term records (JSON)
    #[arg(long, value_name = "FILE")]
    dump_state: Option<PathBuf>,

    /// Also write the assembled mode unitary (JSON)
    #[arg(long, value_name = "FILE")]
    dump_unitary: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    source: SourceArgs,

    /// Input walker as pos[:coin]; must appear exactly twice. Defaults to a
    /// network's input rails.
    #[arg(long = "walker", value_name = "SPEC", allow_hyphen_values = true)]
    walker: Vec<String>,

    /// Report file (JSON); stdout when omitted
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Include the coherent-light comparison: unit-amplitude fields on both
    /// inputs, conditioned on two detections, with its separability residual
    #[arg(long)]
    coherent: bool,

    /// Entropy log base (default 2)
    #[arg(long, value_enum, default_value = "2")]
    base: BaseArg,
}

#[derive(Args)]
struct EntropyArgs {
    /// Stored JPD, CSV (row,col,value) or JSON from `run --emit json`
    #[arg(long, value_name = "FILE")]
    jpd: PathBuf,

    /// Entropy log base (default 2)
    #[arg(long, value_enum, default_value = "2")]
    base: BaseArg,
}

#[derive(Args)]
struct ValidateArgs {
    /// Graph description file (JSON)
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,

    /// Coupler network description file (JSON)
    #[arg(long, value_name = "FILE")]
    network: Option<PathBuf>,
}

#[derive(Serialize)]
struct KindReport {
    jpd: JpdDoc,
    marginal: Vec<f64>,
    entropy: f64,
    meeting_probability: f64,
}

#[derive(Serialize)]
struct CoherentReport {
    jpd: JpdDoc,
    separability_residual: f64,
}

#[derive(Serialize)]
struct CompareReport {
    positions: Vec<Vertex>,
    entropy_base: String,
    indistinguishable: KindReport,
    distinguishable: KindReport,
    l1_marginal_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    coherent: Option<CoherentReport>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
        Command::Entropy(args) => entropy(args),
        Command::Validate(args) => validate(args),
    }
}

fn chosen_emit(requested: Option<Emit>, out: Option<&Path>) -> Emit {
    if let Some(emit) = requested {
        return emit;
    }
    let json_ext = out
        .and_then(Path::extension)
        .map(|ext| ext.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if json_ext {
        Emit::Json
    } else {
        Emit::Csv
    }
}

fn run(args: RunArgs) -> Result<()> {
    let source = EvolutionSource::resolve(&args.source)?;
    let u = source.unitary()?;
    let walkers = resolve_walkers(&args.walker, args.species_mode, &source, &u)?;
    let positions = u.positions();
    source::preflight(u.dim(), walkers.len() as u32, positions.len())?;
    let input = FockState::product_state(&walkers)
        .normalized()
        .context("preparing the initial state")?;
    let evolved = lift_and_apply(&u, &input)?;
    if let Some(path) = &args.dump_state {
        emit::write_state(path, &evolved)?;
    }
    if let Some(path) = &args.dump_unitary {
        emit::write_unitary(path, &u)?;
    }
    let emit_as = chosen_emit(args.emit, args.out.as_deref());
    let bytes = if walkers.len() == 1 {
        let values = position_marginal(&evolved, &positions)?;
        match emit_as {
            Emit::Csv => emit::marginal_csv(&positions, &values).into_bytes(),
            Emit::Json => emit::json_bytes(&MarginalDoc { positions, values })?,
        }
    } else {
        let jpd = jpd_from_state(&evolved, &positions)?;
        match emit_as {
            Emit::Csv => emit::jpd_csv(&jpd)?.into_bytes(),
            Emit::Json => emit::json_bytes(&JpdDoc::new(&jpd))?,
        }
    };
    emit::write_bytes(args.out.as_deref(), &bytes)
}

fn compare(args: CompareArgs) -> Result<()> {
    let source = EvolutionSource::resolve(&args.source)?;
    let u = source.unitary()?;
    let (a, b) = resolve_pair(&args.walker, &source, &u)?;
    let positions = u.positions();
    source::preflight(u.dim(), 2, positions.len())?;
    let base: LogBase = args.base.into();
    let mut reports = Vec::with_capacity(2);
    for species in [[0u32, 0], [0, 1]] {
        let input = FockState::vacuum()
            .create_walker(Mode::new(a.0, a.1, species[0]))
            .create_walker(Mode::new(b.0, b.1, species[1]))
            .normalized()
            .context("preparing the initial state")?;
        let evolved = lift_and_apply(&u, &input)?;
        let jpd = jpd_from_state(&evolved, &positions)?;
        let marginal = single_click_marginal(&jpd)?;
        reports.push(KindReport {
            entropy: correlation_entropy(&jpd, base)?,
            meeting_probability: meeting_probability(&jpd),
            jpd: JpdDoc::new(&jpd),
            marginal,
        });
    }
    let distinguishable = reports.pop().expect("two reports");
    let indistinguishable = reports.pop().expect("two reports");
    let l1_marginal_distance = l1_distance(
        &distinguishable.marginal,
        &indistinguishable.marginal,
    )?;
    let coherent = if args.coherent {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); u.dim()];
        for mode in [a, b] {
            amplitudes[u.index_of(mode).expect("resolved mode exists")] += Complex64::ONE;
        }
        let field = CoherentField::new(u.modes().to_vec(), amplitudes)?;
        let propagated = coherent_propagate(&field, &u)?;
        let jpd = coherent_conditioned_jpd(&propagated, 2)?;
        let separability_residual = coherent_separability_check(&jpd)?;
        Some(CoherentReport {
            jpd: JpdDoc::new(&jpd),
            separability_residual,
        })
    } else {
        None
    };
    let report = CompareReport {
        positions,
        entropy_base: args.base.label().to_string(),
        indistinguishable,
        distinguishable,
        l1_marginal_distance,
        coherent,
    };
    emit::write_bytes(args.out.as_deref(), &emit::json_bytes(&report)?)
}

fn entropy(args: EntropyArgs) -> Result<()> {
    let matrix = emit::read_jpd_matrix(&args.jpd)?;
    let value = correlation_entropy_matrix(&matrix, args.base.into())?;
    println!("{value}");
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<()> {
    match (&args.graph, &args.network) {
        (Some(path), None) => {
            let file: qwalk_core::graph::GraphFile = read_validate_json(path, "--graph")?;
            let graph = file
                .to_graph()
                .with_context(|| format!("--graph: {} is not a valid graph", path.display()))?;
            graph.validate()?;
            let round = walk_unitary(&graph, 1, &CoinSchedule::uniform())
                .context("assembling one walk round")?;
            println!(
                "graph ok: {} vertices, {} directed edges, one-round unitarity deviation {:.3e}",
                graph.num_vertices(),
                graph.num_edges(),
                round.max_unitarity_deviation()
            );
            Ok(())
        }
        (None, Some(path)) => {
            let file: NetworkFile = read_validate_json(path, "--network")?;
            let network = file
                .to_network()
                .with_context(|| format!("--network: {} is not a valid network", path.display()))?;
            let u = network.unitary()?;
            println!(
                "network ok: {} modes, {} couplers, unitarity deviation {:.3e}",
                network.total_modes(),
                network.elements().len(),
                u.max_unitarity_deviation()
            );
            Ok(())
        }
        _ => anyhow::bail!("validate requires exactly one of --graph or --network"),
    }
}

fn read_validate_json<T: serde::de::DeserializeOwned>(path: &Path, flag: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("{flag}: cannot read {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("{flag}: {} is not valid JSON for this format", path.display()))
}
