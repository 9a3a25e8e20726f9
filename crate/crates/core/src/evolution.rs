//! Single-particle walk unitaries and their multi-walker lift.
//!
//! The mode space is the set of directed edges (x, j): position x with coin
//! value j ∈ n_x. On this space the coin operator is block diagonal per
//! vertex and the step operator is the edge-reversal permutation, so one
//! walk step is U = S·C and n steps are U = ∏ S·C_t.
//!
//! Matrix convention: `matrix` acts on amplitude column vectors, out = M·in.
//! Equivalently, creation operators transform as w_m† ↦ Σ_i M[i,m] w_i†, so
//! the amplitude for reaching mode `to` from mode `from` is `M[to, from]`
//! (see [`ModeUnitary::transition`]).
//!
//! Species labels ride along unchanged: the same single-particle matrix
//! applies to every species block, and the lift never mixes species.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{FockState, Mode, Occupation, PRUNE_EPS};
use crate::graph::{GraphError, Vertex, WalkerGraph};
use crate::linalg::max_unitarity_deviation;

/// Directed-edge mode (position, coin target), species-free.
pub type EdgeMode = (Vertex, Vertex);

/// Tolerance for unitarity validation of assembled operators.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },
    #[error("mode ({0}, {1}) listed twice")]
    DuplicateMode(Vertex, Vertex),
    #[error("matrix is {rows}x{cols} but {modes} modes were given")]
    ShapeMismatch { modes: usize, rows: usize, cols: usize },
    #[error("mode ({0}, {1}) is not in the operator's mode space")]
    ModeIndexMismatch(Vertex, Vertex),
    #[error("operators act on different mode spaces")]
    ModeSetMismatch,
    #[error("coin schedule has {entries} entries but the walk has {steps} steps")]
    ScheduleLengthMismatch { steps: usize, entries: usize },
}

/// A unitary on the directed-edge mode space: one walk step, a composed
/// evolution, or a full optical network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    modes: Vec<EdgeMode>,
    index: BTreeMap<EdgeMode, usize>,
    matrix: Array2<Complex64>,
}

impl ModeUnitary {
    /// Validates shape, mode uniqueness, and unitarity to 1e−10.
    pub fn from_matrix(
        modes: Vec<EdgeMode>,
        matrix: Array2<Complex64>,
    ) -> Result<Self, EvolutionError> {
        let index = Self::index_modes(&modes)?;
        if matrix.nrows() != modes.len() || matrix.ncols() != modes.len() {
            return Err(EvolutionError::ShapeMismatch {
                modes: modes.len(),
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let deviation = max_unitarity_deviation(&matrix);
        if deviation > UNITARY_TOL {
            return Err(EvolutionError::NonUnitary { deviation });
        }
        Ok(Self {
            modes,
            index,
            matrix,
        })
    }

    pub fn identity(modes: Vec<EdgeMode>) -> Result<Self, EvolutionError> {
        let index = Self::index_modes(&modes)?;
        let matrix = Array2::eye(modes.len());
        Ok(Self {
            modes,
            index,
            matrix,
        })
    }

    fn index_modes(modes: &[EdgeMode]) -> Result<BTreeMap<EdgeMode, usize>, EvolutionError> {
        let mut index = BTreeMap::new();
        for (i, &m) in modes.iter().enumerate() {
            if index.insert(m, i).is_some() {
                return Err(EvolutionError::DuplicateMode(m.0, m.1));
            }
        }
        Ok(index)
    }

    /// Internal constructor for products of validated unitaries.
    fn from_parts(modes: Vec<EdgeMode>, index: BTreeMap<EdgeMode, usize>, matrix: Array2<Complex64>) -> Self {
        Self {
            modes,
            index,
            matrix,
        }
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[EdgeMode] {
        &self.modes
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn index_of(&self, mode: EdgeMode) -> Option<usize> {
        self.index.get(&mode).copied()
    }

    /// Distinct positions covered by the mode space, ascending.
    pub fn positions(&self) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = self.modes.iter().map(|&(x, _)| x).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Amplitude ⟨to|U|from⟩ = M[to, from].
    pub fn transition(&self, from: EdgeMode, to: EdgeMode) -> Result<Complex64, EvolutionError> {
        let col = self
            .index_of(from)
            .ok_or(EvolutionError::ModeIndexMismatch(from.0, from.1))?;
        let row = self
            .index_of(to)
            .ok_or(EvolutionError::ModeIndexMismatch(to.0, to.1))?;
        Ok(self.matrix[[row, col]])
    }

    /// Composition self·earlier (apply `earlier` first). Both operators must
    /// share the same mode list in the same order.
    pub fn compose(&self, earlier: &Self) -> Result<Self, EvolutionError> {
        if self.modes != earlier.modes {
            return Err(EvolutionError::ModeSetMismatch);
        }
        Ok(Self::from_parts(
            self.modes.clone(),
            self.index.clone(),
            self.matrix.dot(&earlier.matrix),
        ))
    }

    pub fn max_unitarity_deviation(&self) -> f64 {
        max_unitarity_deviation(&self.matrix)
    }
}

/// Per-step coin overrides for time-dependent walks. An empty schedule means
/// every step uses the graph's coins; otherwise the schedule length must
/// equal the step count, and step t substitutes the listed vertices' coins.
#[derive(Debug, Clone, Default)]
pub struct CoinSchedule {
    overrides: Vec<BTreeMap<Vertex, Array2<Complex64>>>,
}

impl CoinSchedule {
    /// Graph coins at every step.
    pub fn uniform() -> Self {
        Self::default()
    }

    pub fn from_overrides(overrides: Vec<BTreeMap<Vertex, Array2<Complex64>>>) -> Self {
        Self { overrides }
    }

    pub fn len(&self) -> usize {
        self.overrides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.overrides.is_empty()
    }

    fn step(&self, t: usize) -> Option<&BTreeMap<Vertex, Array2<Complex64>>> {
        self.overrides.get(t)
    }
}

fn coin_with_overrides(
    graph: &WalkerGraph,
    overrides: Option<&BTreeMap<Vertex, Array2<Complex64>>>,
) -> Result<ModeUnitary, EvolutionError> {
    let modes: Vec<EdgeMode> = graph.edges().collect();
    let index = ModeUnitary::index_modes(&modes)?;
    let mut matrix = Array2::zeros((modes.len(), modes.len()));
    for &x in graph.vertices() {
        let neighborhood = graph.neighborhood(x).unwrap();
        let d = neighborhood.len();
        if d == 0 {
            continue;
        }
        let coin = match overrides.and_then(|o| o.get(&x)) {
            Some(m) => {
                if m.nrows() != d || m.ncols() != d {
                    return Err(GraphError::CoinDimensionMismatch {
                        vertex: x,
                        expected: d,
                        rows: m.nrows(),
                        cols: m.ncols(),
                    }
                    .into());
                }
                let deviation = max_unitarity_deviation(m);
                if deviation > UNITARY_TOL {
                    return Err(GraphError::NonUnitaryCoin {
                        vertex: x,
                        deviation,
                    }
                    .into());
                }
                m
            }
            None => graph
                .coin(x)
                .ok_or(GraphError::MissingCoin(x))?,
        };
        // C: w(x, n_x(c))† ↦ Σ_j A_{cj} w(x, n_x(j))†, so the block acting on
        // amplitude vectors is the transpose of the stored coin.
        for (c, &nc) in neighborhood.iter().enumerate() {
            let col = index[&(x, nc)];
            for (j, &nj) in neighborhood.iter().enumerate() {
                let row = index[&(x, nj)];
                matrix[[row, col]] = coin[[c, j]];
            }
        }
    }
    if let Some(overrides) = overrides {
        for &x in overrides.keys() {
            if !graph.contains(x) {
                return Err(GraphError::UnknownVertex(x).into());
            }
        }
    }
    Ok(ModeUnitary::from_parts(modes, index, matrix))
}

/// Block-diagonal coin operator of `graph` on the directed-edge modes.
pub fn coin_operator(graph: &WalkerGraph) -> Result<ModeUnitary, EvolutionError> {
    coin_with_overrides(graph, None)
}

/// Edge-reversal step permutation S: (x, j) ↦ (j, x); S² = I exactly.
pub fn step_operator(graph: &WalkerGraph) -> Result<ModeUnitary, EvolutionError> {
    let modes: Vec<EdgeMode> = graph.edges().collect();
    let index = ModeUnitary::index_modes(&modes)?;
    let mut matrix = Array2::zeros((modes.len(), modes.len()));
    for &(x, j) in &modes {
        let col = index[&(x, j)];
        let row = *index
            .get(&(j, x))
            .ok_or(GraphError::AsymmetricEdge(x, j))?;
        matrix[[row, col]] = Complex64::ONE;
    }
    Ok(ModeUnitary::from_parts(modes, index, matrix))
}

/// n-step evolution ∏_{t<n} S·C_t (step t applied after step t−1). The
/// schedule must be empty or have exactly `steps` entries.
pub fn walk_unitary(
    graph: &WalkerGraph,
    steps: usize,
    schedule: &CoinSchedule,
) -> Result<ModeUnitary, EvolutionError> {
    if !schedule.is_empty() && schedule.len() != steps {
        return Err(EvolutionError::ScheduleLengthMismatch {
            steps,
            entries: schedule.len(),
        });
    }
    let step = step_operator(graph)?;
    let mut u = ModeUnitary::identity(graph.edges().collect())?;
    let uniform_coin = if schedule.is_empty() && steps > 0 {
        Some(coin_operator(graph)?)
    } else {
        None
    };
    for t in 0..steps {
        let coin = match (&uniform_coin, schedule.step(t)) {
            (Some(c), _) => c.clone(),
            (None, overrides) => coin_with_overrides(graph, overrides)?,
        };
        u = step.compose(&coin)?.compose(&u)?;
    }
    Ok(u)
}

/// Applies the multiplicative (second-quantized) lift of `u` to a state:
/// every creation operator is substituted by its image under `u`, products
/// are expanded over the occupation basis with bosonic ladder factors, and
/// amplitudes below [`PRUNE_EPS`] are dropped. Species are preserved.
pub fn lift_and_apply(u: &ModeUnitary, state: &FockState) -> Result<FockState, EvolutionError> {
    let dim = u.dim();
    let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        // stored amplitudes are against normalized |k⟩; the operator product
        // ∏(w†)^k carries an extra √(∏ k!) undone here
        let seed = amp / occ.ladder_norm_sq().sqrt();
        let mut current: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        current.insert(Occupation::empty(), seed);
        for (mode, count) in occ.iter() {
            let col = u
                .index_of(mode.edge())
                .ok_or(EvolutionError::ModeIndexMismatch(mode.position, mode.coin))?;
            for _ in 0..count {
                let mut next: BTreeMap<Occupation, Complex64> = BTreeMap::new();
                for (partial, partial_amp) in &current {
                    for row in 0..dim {
                        let coupling = u.matrix[[row, col]];
                        if coupling == Complex64::ZERO {
                            continue;
                        }
                        let target = u.modes[row];
                        let image = Mode::new(target.0, target.1, mode.species);
                        let (next_occ, previous) = partial.added(image);
                        let contribution =
                            partial_amp * coupling * f64::from(previous + 1).sqrt();
                        *next.entry(next_occ).or_insert(Complex64::ZERO) += contribution;
                    }
                }
                current = next;
            }
        }
        for (result_occ, result_amp) in current {
            *out.entry(result_occ).or_insert(Complex64::ZERO) += result_amp;
        }
    }
    Ok(FockState::from_terms(out).pruned(PRUNE_EPS))
}

/// Single output amplitude ⟨output| lift(u) |input⟩ evaluated by matrix
/// permanents, one per species block: perm(B)/√(∏ in! · ∏ out!) with
/// B[r][c] = u[out_r, in_c] over the modes repeated by multiplicity.
/// Returns 0 when the species-resolved walker counts differ.
pub fn transition_amplitude(
    u: &ModeUnitary,
    input: &Occupation,
    output: &Occupation,
) -> Result<Complex64, EvolutionError> {
    let mut species: BTreeMap<u32, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (mode, count) in input.iter() {
        let col = u
            .index_of(mode.edge())
            .ok_or(EvolutionError::ModeIndexMismatch(mode.position, mode.coin))?;
        let entry = species.entry(mode.species).or_default();
        entry.0.extend(std::iter::repeat_n(col, count as usize));
    }
    for (mode, count) in output.iter() {
        let row = u
            .index_of(mode.edge())
            .ok_or(EvolutionError::ModeIndexMismatch(mode.position, mode.coin))?;
        let entry = species.entry(mode.species).or_default();
        entry.1.extend(std::iter::repeat_n(row, count as usize));
    }
    let mut amplitude = Complex64::ONE;
    for (ins, outs) in species.values() {
        if ins.len() != outs.len() {
            return Ok(Complex64::ZERO);
        }
        let p = ins.len();
        let block = Array2::from_shape_fn((p, p), |(r, c)| u.matrix[[outs[r], ins[c]]]);
        amplitude *= permanent(&block);
    }
    amplitude /= (input.ladder_norm_sq() * output.ladder_norm_sq()).sqrt();
    Ok(amplitude)
}

/// Matrix permanent by Ryser's inclusion-exclusion formula, O(2ⁿ·n).
fn permanent(m: &Array2<Complex64>) -> Complex64 {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    assert!(n < 26, "permanent size {n} too large");
    if n == 0 {
        return Complex64::ONE;
    }
    let mut total = Complex64::ZERO;
    for subset in 1u32..(1 << n) {
        let mut product = Complex64::ONE;
        for row in 0..n {
            let mut row_sum = Complex64::ZERO;
            for col in 0..n {
                if subset & (1 << col) != 0 {
                    row_sum += m[[row, col]];
                }
            }
            product *= row_sum;
        }
        let sign = if (n - subset.count_ones() as usize).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        total += product * sign;
    }
    total
}
