//! Resolves command-line source and walker flags into an evolution unitary
//! and initial modes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use ndarray::Array2;
use num_complex::Complex64;
use qwalk_core::fock::{basis_size, Species, DEFAULT_BASIS_CAP};
use qwalk_core::graph::GraphFile;
use qwalk_core::optical::{pyramid_network, BeamsplitterNetwork, NetworkFile};
use qwalk_core::{
    walk_unitary, CoinSchedule, EdgeMode, Mode, ModeUnitary, Vertex, WalkerGraph,
};
use serde::de::DeserializeOwned;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Vertices -L..=L, balanced coins, reflecting endpoints
    #[value(name = "line")]
    Line,
    /// Vertices 0..N with wraparound, balanced coins
    #[value(name = "cycle")]
    Cycle,
    /// Rectangular 4-neighbor lattice with degree-matched diffusive coins
    #[value(name = "lattice2d")]
    Lattice2d,
    /// Splitter pyramid: level k of L holds k balanced couplers
    #[value(name = "pyramid")]
    Pyramid,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpeciesMode {
    /// All walkers share one species (default)
    Indistinguishable,
    /// Walker i gets species i
    Distinguishable,
}

#[derive(Args)]
pub struct SourceArgs {
    /// Graph description file (JSON); see docs/config.md for the format
    #[arg(long, value_name = "FILE")]
    pub graph: Option<PathBuf>,

    /// Coupler network description file (JSON)
    #[arg(long, value_name = "FILE")]
    pub network: Option<PathBuf>,

    /// Built-in source; requires its size flag
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    /// Line preset half width: vertices span -N..=N
    #[arg(long, value_name = "N")]
    pub half_width: Option<i64>,

    /// Cycle preset vertex count
    #[arg(long, value_name = "N")]
    pub length: Option<i64>,

    /// Lattice preset column count
    #[arg(long, value_name = "N")]
    pub width: Option<i64>,

    /// Lattice preset row count
    #[arg(long, value_name = "N")]
    pub height: Option<i64>,

    /// Pyramid preset level count
    #[arg(long, value_name = "N")]
    pub levels: Option<usize>,

    /// Walk rounds for graph sources; each round applies coins then the step
    /// (default 0: no evolution)
    #[arg(long, value_name = "N")]
    pub steps: Option<usize>,

    /// Per-round coin override file (JSON); entries replace graph coins for
    /// that round
    #[arg(long, value_name = "FILE")]
    pub schedule: Option<PathBuf>,
}

pub enum EvolutionSource {
    Graph {
        graph: WalkerGraph,
        steps: usize,
        schedule: CoinSchedule,
    },
    Network(BeamsplitterNetwork),
}

fn read_json<T: DeserializeOwned>(path: &Path, flag: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("{flag}: cannot read {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("{flag}: {} is not valid JSON for this format", path.display()))
}

/// Per-round coin overrides: one map per round, vertex label to a row-major
/// complex matrix with [re, im] entries.
type ScheduleFile = Vec<BTreeMap<String, Vec<Vec<(f64, f64)>>>>;

fn complex_matrix(rows: &[Vec<(f64, f64)>], what: &str) -> Result<Array2<Complex64>> {
    let n = rows.len();
    let mut matrix = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            bail!("{what}: row {r} has {} entries, expected a square matrix of size {n}", row.len());
        }
        for (c, &(re, im)) in row.iter().enumerate() {
            matrix[[r, c]] = Complex64::new(re, im);
        }
    }
    Ok(matrix)
}

fn load_schedule(path: &Path) -> Result<CoinSchedule> {
    let file: ScheduleFile = read_json(path, "--schedule")?;
    let mut rounds = Vec::with_capacity(file.len());
    for (t, entries) in file.iter().enumerate() {
        let mut overrides = BTreeMap::new();
        for (label, rows) in entries {
            let vertex: Vertex = label
                .parse()
                .with_context(|| format!("--schedule: round {t} has non-integer vertex label {label:?}"))?;
            let matrix = complex_matrix(rows, &format!("--schedule round {t}, vertex {label}"))?;
            overrides.insert(vertex, matrix);
        }
        rounds.push(overrides);
    }
    Ok(CoinSchedule::from_overrides(rounds))
}

fn forbid(given: bool, flag: &str, source: &str) -> Result<()> {
    if given {
        bail!("{flag} does not apply to {source}");
    }
    Ok(())
}

impl EvolutionSource {
    pub fn resolve(args: &SourceArgs) -> Result<Self> {
        let chosen = [args.graph.is_some(), args.network.is_some(), args.preset.is_some()]
            .iter()
            .filter(|given| **given)
            .count();
        if chosen != 1 {
            bail!("choose exactly one source: --graph, --network, or --preset");
        }
        if args.preset.is_none() {
            forbid(args.half_width.is_some(), "--half-width", "file sources")?;
            forbid(args.length.is_some(), "--length", "file sources")?;
            forbid(args.width.is_some(), "--width", "file sources")?;
            forbid(args.height.is_some(), "--height", "file sources")?;
            forbid(args.levels.is_some(), "--levels", "file sources")?;
        }
        if let Some(path) = &args.graph {
            let file: GraphFile = read_json(path, "--graph")?;
            let graph = file
                .to_graph()
                .with_context(|| format!("--graph: {} does not describe a valid graph", path.display()))?;
            return Self::graph_source(graph, args);
        }
        if let Some(path) = &args.network {
            Self::reject_walk_flags(args, "a coupler network")?;
            let file: NetworkFile = read_json(path, "--network")?;
            let network = file
                .to_network()
                .with_context(|| format!("--network: {} does not describe a valid network", path.display()))?;
            return Ok(Self::Network(network));
        }
        match args.preset.expect("one source is chosen") {
            Preset::Line => {
                let half_width = args
                    .half_width
                    .ok_or_else(|| anyhow!("--preset line requires --half-width"))?;
                Self::reject_sizes(args, "line", [false, true, true, true, true])?;
                Self::graph_source(WalkerGraph::line(half_width)?, args)
            }
            Preset::Cycle => {
                let length = args
                    .length
                    .ok_or_else(|| anyhow!("--preset cycle requires --length"))?;
                Self::reject_sizes(args, "cycle", [true, false, true, true, true])?;
                Self::graph_source(WalkerGraph::cycle(length)?, args)
            }
            Preset::Lattice2d => {
                let width = args
                    .width
                    .ok_or_else(|| anyhow!("--preset lattice2d requires --width"))?;
                let height = args
                    .height
                    .ok_or_else(|| anyhow!("--preset lattice2d requires --height"))?;
                Self::reject_sizes(args, "lattice2d", [true, true, false, false, true])?;
                Self::graph_source(WalkerGraph::lattice2d(width, height)?, args)
            }
            Preset::Pyramid => {
                let levels = args
                    .levels
                    .ok_or_else(|| anyhow!("--preset pyramid requires --levels"))?;
                Self::reject_sizes(args, "pyramid", [true, true, true, true, false])?;
                Self::reject_walk_flags(args, "the pyramid preset")?;
                Ok(Self::Network(pyramid_network(levels)?))
            }
        }
    }

    fn reject_sizes(args: &SourceArgs, preset: &str, reject: [bool; 5]) -> Result<()> {
        let source = format!("--preset {preset}");
        if reject[0] {
            forbid(args.half_width.is_some(), "--half-width", &source)?;
        }
        if reject[1] {
            forbid(args.length.is_some(), "--length", &source)?;
        }
        if reject[2] {
            forbid(args.width.is_some(), "--width", &source)?;
        }
        if reject[3] {
            forbid(args.height.is_some(), "--height", &source)?;
        }
        if reject[4] {
            forbid(args.levels.is_some(), "--levels", &source)?;
        }
        Ok(())
    }

    fn reject_walk_flags(args: &SourceArgs, source: &str) -> Result<()> {
        forbid(args.steps.is_some(), "--steps", source)?;
        forbid(args.schedule.is_some(), "--schedule", source)
    }

    fn graph_source(graph: WalkerGraph, args: &SourceArgs) -> Result<Self> {
        let steps = args.steps.unwrap_or(0);
        let schedule = match &args.schedule {
            Some(path) => load_schedule(path)?,
            None => CoinSchedule::uniform(),
        };
        Ok(Self::Graph {
            graph,
            steps,
            schedule,
        })
    }

    pub fn unitary(&self) -> Result<ModeUnitary> {
        match self {
            Self::Graph {
                graph,
                steps,
                schedule,
            } => walk_unitary(graph, *steps, schedule).context("assembling the walk unitary"),
            Self::Network(network) => {
                network.unitary().context("assembling the network unitary")
            }
        }
    }

    /// Networks supply their input rails when no --walker is given.
    pub fn default_input_modes(&self) -> Option<Vec<EdgeMode>> {
        match self {
            Self::Graph { .. } => None,
            Self::Network(network) => Some(network.input_edge_modes()),
        }
    }
}

pub struct WalkerSpec {
    pub position: Vertex,
    pub coin: Option<Vertex>,
    pub species: Option<Species>,
}

/// Walker syntax pos[:coin][:species]. An omitted or empty coin names the
/// rail mode (pos, pos).
pub fn parse_walker_spec(raw: &str) -> Result<WalkerSpec> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() > 3 {
        bail!("--walker {raw:?}: expected pos[:coin][:species]");
    }
    let position: Vertex = parts[0]
        .parse()
        .with_context(|| format!("--walker {raw:?}: position {:?} is not an integer", parts[0]))?;
    let coin = match parts.get(1) {
        None | Some(&"") => None,
        Some(field) => Some(field.parse::<Vertex>().with_context(|| {
            format!("--walker {raw:?}: coin {field:?} is not an integer neighbor label")
        })?),
    };
    let species = match parts.get(2) {
        None => None,
        Some(field) => Some(field.parse::<Species>().with_context(|| {
            format!("--walker {raw:?}: species {field:?} is not a non-negative integer")
        })?),
    };
    Ok(WalkerSpec {
        position,
        coin,
        species,
    })
}

fn check_mode(u: &ModeUnitary, raw: &str, mode: EdgeMode) -> Result<()> {
    if u.index_of(mode).is_none() {
        bail!(
            "--walker {raw:?} occupies mode ({}, {}), which this source does not have",
            mode.0,
            mode.1
        );
    }
    Ok(())
}

/// Initial modes for `run`: explicit specs, or a network's input rails.
pub fn resolve_walkers(
    specs: &[String],
    species_mode: SpeciesMode,
    source: &EvolutionSource,
    u: &ModeUnitary,
) -> Result<Vec<Mode>> {
    let parsed: Vec<(String, WalkerSpec)> = if specs.is_empty() {
        source
            .default_input_modes()
            .ok_or_else(|| anyhow!("graph sources require at least one --walker pos:coin"))?
            .into_iter()
            .map(|(position, coin)| {
                (
                    format!("{position}:{coin}"),
                    WalkerSpec {
                        position,
                        coin: Some(coin),
                        species: None,
                    },
                )
            })
            .collect()
    } else {
        specs
            .iter()
            .map(|raw| parse_walker_spec(raw).map(|spec| (raw.clone(), spec)))
            .collect::<Result<_>>()?
    };
    if parsed.is_empty() {
        bail!("this source has no default walkers; pass --walker");
    }
    parsed
        .iter()
        .enumerate()
        .map(|(i, (raw, spec))| {
            let coin = spec.coin.unwrap_or(spec.position);
            check_mode(u, raw, (spec.position, coin))?;
            let species = spec.species.unwrap_or(match species_mode {
                SpeciesMode::Indistinguishable => 0,
                SpeciesMode::Distinguishable => i as Species,
            });
            Ok(Mode::new(spec.position, coin, species))
        })
        .collect()
}

/// Input pair for `compare`; the command assigns species itself.
pub fn resolve_pair(
    specs: &[String],
    source: &EvolutionSource,
    u: &ModeUnitary,
) -> Result<(EdgeMode, EdgeMode)> {
    let modes: Vec<EdgeMode> = if specs.is_empty() {
        source
            .default_input_modes()
            .ok_or_else(|| anyhow!("graph sources require two --walker pos:coin inputs"))?
    } else {
        specs
            .iter()
            .map(|raw| {
                let spec = parse_walker_spec(raw)?;
                if spec.species.is_some() {
                    bail!(
                        "--walker {raw:?}: compare assigns species itself; drop the species segment"
                    );
                }
                let coin = spec.coin.unwrap_or(spec.position);
                check_mode(u, raw, (spec.position, coin))?;
                Ok((spec.position, coin))
            })
            .collect::<Result<_>>()?
    };
    match modes.as_slice() {
        [a, b] => Ok((*a, *b)),
        other => bail!("compare needs exactly two input walkers, got {}", other.len()),
    }
}

fn basis_cap() -> Result<u128> {
    match std::env::var("QWALK_BASIS_CAP") {
        Ok(raw) => raw
            .trim()
            .parse()
            .with_context(|| format!("QWALK_BASIS_CAP must be a positive integer, got {raw:?}")),
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_BASIS_CAP),
        Err(e) => Err(e).context("reading QWALK_BASIS_CAP"),
    }
}

/// Size guard before any lift: occupation patterns and the JPD tensor must
/// fit the cap (QWALK_BASIS_CAP, else the library ceiling).
pub fn preflight(modes: usize, walkers: u32, positions: usize) -> Result<()> {
    let cap = basis_cap()?;
    let patterns = basis_size(modes, walkers)
        .ok_or_else(|| anyhow!("{walkers} walkers on {modes} modes overflow the basis count"))?;
    if patterns > cap {
        bail!(
            "{patterns} occupation patterns for {walkers} walkers on {modes} modes exceed the basis cap {cap} (set QWALK_BASIS_CAP to adjust)"
        );
    }
    let tensor = (positions as u128)
        .checked_pow(walkers)
        .ok_or_else(|| anyhow!("JPD tensor over {positions} positions overflows"))?;
    if tensor > cap {
        bail!(
            "JPD tensor of {tensor} entries over {positions} positions exceeds the basis cap {cap} (set QWALK_BASIS_CAP to adjust)"
        );
    }
    Ok(())
}
