//! Detection statistics: joint probability distributions, marginals,
//! meeting probability, correlation entropy, and conditional
//! post-measurement states.
//!
//! Detectors resolve position only: coin and species indices are traced out
//! unless a species-resolved projection is requested explicitly.
//!
//! Two event conventions coexist and are tagged by [`JpdKind`]:
//! * unordered (kinds `Indistinguishable` and `Mixed`): an entry holds the
//!   full probability of the unordered detection event, stored at every
//!   index permutation, so the sum over non-decreasing index tuples is 1;
//! * ordered (kind `Distinguishable`): axis r belongs to the r-th species in
//!   ascending label order and the sum over all entries is 1.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayD, Dimension, IxDyn};

use thiserror::Error;

use crate::evolution::{EdgeMode, EvolutionError, ModeUnitary};
use crate::fock::{FockError, FockState, Occupation, Species, DEFAULT_BASIS_CAP, PRUNE_EPS};
use crate::graph::Vertex;
use crate::linalg::{rank_one_residual, singular_values};

/// Tolerance on state normalization and JPD invariants.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error("state norm² is {norm_sq}, expected 1")]
    NotNormalized { norm_sq: f64 },
    #[error("state has no walkers")]
    NoWalkers,
    #[error("position {0} is not in the detector list")]
    UnknownPosition(Vertex),
    #[error("position {0} listed twice")]
    DuplicatePosition(Vertex),
    #[error("operation requires a {expected}-walker distribution, got {got}")]
    UnsupportedWalkerCount { expected: usize, got: usize },
    #[error("tensor axis lengths {axes:?} do not match {positions} positions")]
    ShapeMismatch { positions: usize, axes: Vec<usize> },
    #[error("probability tensor of {size} entries exceeds the cap {cap}")]
    TensorTooLarge { size: u128, cap: u128 },
    #[error("entry {value} at index {index:?} is negative")]
    NegativeEntry { index: Vec<usize>, value: f64 },
    #[error("entries at {index:?} and its sorted image differ by {deviation}")]
    SymmetryViolation { index: Vec<usize>, deviation: f64 },
    #[error("event probabilities sum to {sum}, expected 1")]
    NormalizationViolation { sum: f64 },
    #[error("conditioning event has probability {probability:.3e}")]
    ZeroProbabilityEvent { probability: f64 },
    #[error("matrix has no significant spectrum")]
    DegenerateMatrix,
    #[error("vectors have lengths {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("closed form supports indistinguishable and distinguishable kinds only")]
    UnsupportedKind,
}

/// Event convention of a JPD; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JpdKind {
    Indistinguishable,
    Distinguishable,
    Mixed,
}

impl JpdKind {
    fn unordered(self) -> bool {
        !matches!(self, JpdKind::Distinguishable)
    }
}

/// Log base for entropies. `Two` is the pinned default: it is the base under
/// which the 4-level pyramid's correlation entropy reproduces the published
/// 1.74 anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Two,
    E,
}

/// Joint detection probability distribution of n walkers over a fixed
/// position list; `tensor` has n axes, each of length `positions.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jpd {
    kind: JpdKind,
    positions: Vec<Vertex>,
    tensor: ArrayD<f64>,
}

impl Jpd {
    /// Wraps a tensor, checking the shape and clamping floating-point dust
    /// (entries in [−1e−12, 0)) to zero; truly negative entries are errors.
    /// Normalization and symmetry are checked by [`Jpd::validate`], not here.
    pub fn new(
        kind: JpdKind,
        positions: Vec<Vertex>,
        mut tensor: ArrayD<f64>,
    ) -> Result<Self, MeasurementError> {
        let n = positions.len();
        if tensor.ndim() == 0 || tensor.shape().iter().any(|&a| a != n) {
            return Err(MeasurementError::ShapeMismatch {
                positions: n,
                axes: tensor.shape().to_vec(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for &p in &positions {
            if !seen.insert(p) {
                return Err(MeasurementError::DuplicatePosition(p));
            }
        }
        for (index, value) in tensor.indexed_iter_mut() {
            if *value < -1e-12 {
                return Err(MeasurementError::NegativeEntry {
                    index: index.slice().to_vec(),
                    value: *value,
                });
            }
            if *value < 0.0 {
                *value = 0.0;
            }
        }
        Ok(Self {
            kind,
            positions,
            tensor,
        })
    }

    pub fn from_matrix(
        kind: JpdKind,
        positions: Vec<Vertex>,
        matrix: Array2<f64>,
    ) -> Result<Self, MeasurementError> {
        Self::new(kind, positions, matrix.into_dyn())
    }

    pub fn kind(&self) -> JpdKind {
        self.kind
    }

    pub fn positions(&self) -> &[Vertex] {
        &self.positions
    }

    pub fn walkers(&self) -> usize {
        self.tensor.ndim()
    }

    pub fn num_positions(&self) -> usize {
        self.positions.len()
    }

    pub fn tensor(&self) -> &ArrayD<f64> {
        &self.tensor
    }

    pub fn entry(&self, index: &[usize]) -> f64 {
        self.tensor[IxDyn(index)]
    }

    /// Two-walker matrix view.
    pub fn matrix(&self) -> Result<Array2<f64>, MeasurementError> {
        self.require_two_walkers()?;
        let n = self.num_positions();
        Ok(Array2::from_shape_fn((n, n), |(r, c)| {
            self.tensor[IxDyn(&[r, c])]
        }))
    }

    fn require_two_walkers(&self) -> Result<(), MeasurementError> {
        if self.walkers() != 2 {
            return Err(MeasurementError::UnsupportedWalkerCount {
                expected: 2,
                got: self.walkers(),
            });
        }
        Ok(())
    }

    /// Kind-dependent normalization total: the sum over non-decreasing index
    /// tuples for unordered kinds, the full sum for the ordered kind.
    pub fn normalization_sum(&self) -> f64 {
        if self.kind.unordered() {
            unordered_sum(&self.tensor)
        } else {
            self.tensor.sum()
        }
    }

    /// Checks non-negativity, permutation symmetry (unordered kinds), and
    /// the kind's normalization condition.
    pub fn validate(&self) -> Result<(), MeasurementError> {
        for (index, &value) in self.tensor.indexed_iter() {
            if value < 0.0 {
                return Err(MeasurementError::NegativeEntry {
                    index: index.slice().to_vec(),
                    value,
                });
            }
            if self.kind.unordered() {
                let mut sorted = index.slice().to_vec();
                sorted.sort_unstable();
                let deviation = (value - self.tensor[IxDyn(&sorted)]).abs();
                if deviation > 1e-12 {
                    return Err(MeasurementError::SymmetryViolation {
                        index: index.slice().to_vec(),
                        deviation,
                    });
                }
            }
        }
        let sum = self.normalization_sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(MeasurementError::NormalizationViolation { sum });
        }
        Ok(())
    }

    /// Folds an ordered (distinguishable) JPD onto unordered detection
    /// events; unordered kinds are retagged unchanged. The result has kind
    /// `Mixed` and satisfies the unordered normalization.
    pub fn to_unordered(&self) -> Self {
        if self.kind.unordered() {
            return Self {
                kind: JpdKind::Mixed,
                positions: self.positions.clone(),
                tensor: self.tensor.clone(),
            };
        }
        let mut events: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (index, &value) in self.tensor.indexed_iter() {
            let mut key = index.slice().to_vec();
            key.sort_unstable();
            *events.entry(key).or_insert(0.0) += value;
        }
        let mut tensor = ArrayD::zeros(self.tensor.raw_dim());
        for (key, value) in events {
            for perm in distinct_permutations(&key) {
                tensor[IxDyn(&perm)] = value;
            }
        }
        Self {
            kind: JpdKind::Mixed,
            positions: self.positions.clone(),
            tensor,
        }
    }

    /// Two-walker matrix under the ordered-event convention: off-diagonal
    /// entries of unordered kinds are halved so the full sum is 1; the
    /// ordered kind is returned as stored. This is the form whose rank-1
    /// structure signals coherent-simulable statistics.
    pub fn ordered_matrix(&self) -> Result<Array2<f64>, MeasurementError> {
        let mut m = self.matrix()?;
        if self.kind.unordered() {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    if r != c {
                        m[[r, c]] *= 0.5;
                    }
                }
            }
        }
        Ok(m)
    }
}

/// Sum over non-decreasing index tuples (each unordered event once).
fn unordered_sum(tensor: &ArrayD<f64>) -> f64 {
    let n = tensor.shape()[0];
    let mut total = 0.0;
    let mut index = Vec::with_capacity(tensor.ndim());
    sum_sorted_tuples(tensor, n, 0, &mut index, &mut total);
    total
}

fn sum_sorted_tuples(
    tensor: &ArrayD<f64>,
    n: usize,
    min: usize,
    index: &mut Vec<usize>,
    total: &mut f64,
) {
    if index.len() == tensor.ndim() {
        *total += tensor[IxDyn(index)];
        return;
    }
    for i in min..n {
        index.push(i);
        sum_sorted_tuples(tensor, n, i, index, total);
        index.pop();
    }
}

/// Distinct permutations of a (small) index multiset.
fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut out = std::collections::BTreeSet::new();
    let mut scratch = sorted.to_vec();
    permute_into(&mut scratch, 0, &mut out);
    out.into_iter().collect()
}

fn permute_into(
    values: &mut Vec<usize>,
    start: usize,
    out: &mut std::collections::BTreeSet<Vec<usize>>,
) {
    if start == values.len() {
        out.insert(values.clone());
        return;
    }
    for i in start..values.len() {
        values.swap(start, i);
        permute_into(values, start + 1, out);
        values.swap(start, i);
    }
}

fn position_index(positions: &[Vertex]) -> Result<BTreeMap<Vertex, usize>, MeasurementError> {
    let mut map = BTreeMap::new();
    for (i, &p) in positions.iter().enumerate() {
        if map.insert(p, i).is_some() {
            return Err(MeasurementError::DuplicatePosition(p));
        }
    }
    Ok(map)
}

fn check_normalized(state: &FockState) -> Result<(), MeasurementError> {
    let norm_sq = state.norm_sq();
    if (norm_sq - 1.0).abs() > NORM_TOL {
        return Err(MeasurementError::NotNormalized { norm_sq });
    }
    Ok(())
}

/// Species signature classifying a state's detection statistics.
fn infer_kind(state: &FockState) -> Result<(JpdKind, Vec<Species>), MeasurementError> {
    let mut uniform_species: Option<Species> = None;
    let mut all_single_species = true;
    let mut distinct_sets: Option<Vec<Species>> = None;
    let mut all_distinct = true;
    for (occ, _) in state.terms() {
        let counts = occ.species_counts();
        if counts.len() == 1 {
            let s = *counts.keys().next().unwrap();
            match uniform_species {
                None => uniform_species = Some(s),
                Some(prev) if prev == s => {}
                Some(_) => all_single_species = false,
            }
        } else {
            all_single_species = false;
        }
        if counts.values().all(|&k| k == 1) {
            let set: Vec<Species> = counts.keys().copied().collect();
            match &distinct_sets {
                None => distinct_sets = Some(set),
                Some(prev) if *prev == set => {}
                Some(_) => all_distinct = false,
            }
        } else {
            all_distinct = false;
        }
    }
    if all_single_species {
        return Ok((JpdKind::Indistinguishable, Vec::new()));
    }
    if all_distinct {
        return Ok((JpdKind::Distinguishable, distinct_sets.unwrap_or_default()));
    }
    Ok((JpdKind::Mixed, Vec::new()))
}

/// Joint detection distribution of a normalized definite-number state over
/// the given detector positions. Coin and species indices are traced out;
/// the kind is inferred from the state's species content (one species
/// throughout → indistinguishable; one walker of each of p species →
/// distinguishable, axes in ascending species order; anything else → mixed).
pub fn jpd_from_state(
    state: &FockState,
    positions: &[Vertex],
) -> Result<Jpd, MeasurementError> {
    let walkers = state.walker_count()?;
    if walkers == 0 {
        return Err(MeasurementError::NoWalkers);
    }
    check_normalized(state)?;
    let index = position_index(positions)?;
    let n = positions.len();
    let size = (n as u128)
        .checked_pow(walkers)
        .unwrap_or(u128::MAX);
    if size > DEFAULT_BASIS_CAP {
        return Err(MeasurementError::TensorTooLarge {
            size,
            cap: DEFAULT_BASIS_CAP,
        });
    }
    let (kind, species_order) = infer_kind(state)?;
    let shape: Vec<usize> = vec![n; walkers as usize];
    let mut tensor = ArrayD::zeros(IxDyn(&shape));
    match kind {
        JpdKind::Distinguishable => {
            for (occ, amp) in state.terms() {
                let mut tuple = vec![0usize; walkers as usize];
                for (mode, count) in occ.iter() {
                    debug_assert_eq!(count, 1);
                    let axis = species_order
                        .iter()
                        .position(|&s| s == mode.species)
                        .expect("species set fixed by inference");
                    tuple[axis] = *index
                        .get(&mode.position)
                        .ok_or(MeasurementError::UnknownPosition(mode.position))?;
                }
                tensor[IxDyn(&tuple)] += amp.norm_sqr();
            }
        }
        JpdKind::Indistinguishable | JpdKind::Mixed => {
            let mut events: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
            for (occ, amp) in state.terms() {
                let mut tuple = Vec::with_capacity(walkers as usize);
                for position in occ.position_multiset() {
                    tuple.push(
                        *index
                            .get(&position)
                            .ok_or(MeasurementError::UnknownPosition(position))?,
                    );
                }
                tuple.sort_unstable();
                *events.entry(tuple).or_insert(0.0) += amp.norm_sqr();
            }
            for (key, value) in events {
                for perm in distinct_permutations(&key) {
                    tensor[IxDyn(&perm)] = value;
                }
            }
        }
    }
    Jpd::new(kind, positions.to_vec(), tensor)
}

/// Two-walker JPD straight from the single-particle unitary, for walkers
/// injected at modes `x` and `y`. Detection traces coins: amplitudes are
/// summed inside a position before squaring pairs of modes, matching the
/// Fock-engine result exactly. The tensor is renormalized by the kind's
/// normalization sum, which is already 1 for x ≠ y and folds away the
/// bosonic double-occupation norm when x = y.
pub fn jpd_two_walker_closed_form(
    u: &ModeUnitary,
    x: EdgeMode,
    y: EdgeMode,
    kind: JpdKind,
) -> Result<Jpd, MeasurementError> {
    let positions = u.positions();
    let n = positions.len();
    let mut modes_at: BTreeMap<Vertex, Vec<EdgeMode>> = BTreeMap::new();
    for &mode in u.modes() {
        modes_at.entry(mode.0).or_default().push(mode);
    }
    let mut matrix = Array2::zeros((n, n));
    match kind {
        JpdKind::Indistinguishable => {
            for (mi, &m) in positions.iter().enumerate() {
                for (ni, &nn) in positions.iter().enumerate() {
                    if ni < mi {
                        continue;
                    }
                    let mut event = 0.0;
                    if mi == ni {
                        let rails = &modes_at[&m];
                        for (ai, &a) in rails.iter().enumerate() {
                            let ua_x = u.transition(x, a)?;
                            let ua_y = u.transition(y, a)?;
                            event += 2.0 * (ua_x * ua_y).norm_sqr();
                            for &b in rails.iter().skip(ai + 1) {
                                let ub_x = u.transition(x, b)?;
                                let ub_y = u.transition(y, b)?;
                                event += (ua_x * ub_y + ub_x * ua_y).norm_sqr();
                            }
                        }
                    } else {
                        for &a in &modes_at[&m] {
                            let ua_x = u.transition(x, a)?;
                            let ua_y = u.transition(y, a)?;
                            for &b in &modes_at[&nn] {
                                let ub_x = u.transition(x, b)?;
                                let ub_y = u.transition(y, b)?;
                                event += (ua_x * ub_y + ub_x * ua_y).norm_sqr();
                            }
                        }
                    }
                    matrix[[mi, ni]] = event;
                    matrix[[ni, mi]] = event;
                }
            }
        }
        JpdKind::Distinguishable => {
            // outer product of the two single-walker position distributions
            let mut qx = vec![0.0; n];
            let mut qy = vec![0.0; n];
            for (mi, &m) in positions.iter().enumerate() {
                for &a in &modes_at[&m] {
                    qx[mi] += u.transition(x, a)?.norm_sqr();
                    qy[mi] += u.transition(y, a)?.norm_sqr();
                }
            }
            for mi in 0..n {
                for ni in 0..n {
                    matrix[[mi, ni]] = qx[mi] * qy[ni];
                }
            }
        }
        JpdKind::Mixed => return Err(MeasurementError::UnsupportedKind),
    }
    let jpd = Jpd::from_matrix(kind, positions, matrix)?;
    let sum = jpd.normalization_sum();
    if sum < PRUNE_EPS {
        return Err(MeasurementError::DegenerateMatrix);
    }
    Jpd::new(jpd.kind, jpd.positions, jpd.tensor / sum)
}

/// Probability of detecting at least one walker at each position, from a
/// two-walker JPD: the m-th column sum for unordered kinds, row + column
/// minus the double-counted diagonal for the ordered kind.
pub fn single_click_marginal(jpd: &Jpd) -> Result<Vec<f64>, MeasurementError> {
    let matrix = jpd.matrix()?;
    let n = jpd.num_positions();
    let mut q = vec![0.0; n];
    for m in 0..n {
        q[m] = if jpd.kind().unordered() {
            (0..n).map(|k| matrix[[m, k]]).sum()
        } else {
            let row: f64 = (0..n).map(|k| matrix[[m, k]]).sum();
            let col: f64 = (0..n).map(|k| matrix[[k, m]]).sum();
            row + col - matrix[[m, m]]
        };
    }
    Ok(q)
}

/// tr(P): the probability that all walkers are detected at one position.
pub fn meeting_probability(jpd: &Jpd) -> f64 {
    let n = jpd.num_positions();
    let walkers = jpd.walkers();
    (0..n)
        .map(|m| jpd.entry(&vec![m; walkers]))
        .sum()
}

/// A conditional post-measurement state with its conditioning probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub probability: f64,
    pub state: FockState,
}

fn project_terms<F>(state: &FockState, keep: F) -> Result<Projection, MeasurementError>
where
    F: Fn(&Occupation) -> bool,
{
    check_normalized(state)?;
    let retained = FockState::from_terms(
        state
            .terms()
            .filter(|(occ, _)| keep(occ))
            .map(|(occ, amp)| (occ.clone(), amp)),
    );
    let probability = retained.norm_sq();
    if probability < PRUNE_EPS {
        return Err(MeasurementError::ZeroProbabilityEvent { probability });
    }
    Ok(Projection {
        probability,
        state: retained.normalized()?,
    })
}

/// Conditions on detecting exactly one walker (any species) at `position`;
/// the walkers stay in place, amplitudes renormalize.
pub fn project_single_detection(
    state: &FockState,
    position: Vertex,
) -> Result<Projection, MeasurementError> {
    project_terms(state, |occ| occ.count_at_position(position) == 1)
}

/// Conditions on detecting exactly one `species` walker at `position`,
/// regardless of where other species sit.
pub fn project_species_detection(
    state: &FockState,
    position: Vertex,
    species: Species,
) -> Result<Projection, MeasurementError> {
    project_terms(state, |occ| {
        occ.count_at_position_species(position, species) == 1
    })
}

/// Conditions on all walkers bunching at `position`.
pub fn project_bunched(
    state: &FockState,
    position: Vertex,
) -> Result<Projection, MeasurementError> {
    let walkers = state.walker_count()?;
    project_terms(state, |occ| occ.count_at_position(position) == walkers)
}

/// Expected walker count per position; for a one-walker state this is the
/// position distribution.
pub fn position_marginal(
    state: &FockState,
    positions: &[Vertex],
) -> Result<Vec<f64>, MeasurementError> {
    check_normalized(state)?;
    let index = position_index(positions)?;
    let mut out = vec![0.0; positions.len()];
    for (occ, amp) in state.terms() {
        let weight = amp.norm_sqr();
        for (mode, count) in occ.iter() {
            let i = *index
                .get(&mode.position)
                .ok_or(MeasurementError::UnknownPosition(mode.position))?;
            out[i] += weight * f64::from(count);
        }
    }
    Ok(out)
}

/// Expected count of one species per position; the position distribution of
/// that species' walker when it appears exactly once per term.
pub fn species_position_marginal(
    state: &FockState,
    species: Species,
    positions: &[Vertex],
) -> Result<Vec<f64>, MeasurementError> {
    check_normalized(state)?;
    let index = position_index(positions)?;
    let mut out = vec![0.0; positions.len()];
    for (occ, amp) in state.terms() {
        let weight = amp.norm_sqr();
        for (mode, count) in occ.iter() {
            if mode.species != species {
                continue;
            }
            let i = *index
                .get(&mode.position)
                .ok_or(MeasurementError::UnknownPosition(mode.position))?;
            out[i] += weight * f64::from(count);
        }
    }
    Ok(out)
}

/// Shannon entropy of the JPD matrix's renormalized singular-value spectrum.
/// Singular values coincide with eigenvalue magnitudes on the symmetric
/// unordered matrices and extend the definition to ordered ones; rank-1
/// matrices give exactly 0.
pub fn correlation_entropy(jpd: &Jpd, base: LogBase) -> Result<f64, MeasurementError> {
    correlation_entropy_matrix(&jpd.matrix()?, base)
}

/// [`correlation_entropy`] on a raw matrix (no JPD invariants assumed).
pub fn correlation_entropy_matrix(
    matrix: &Array2<f64>,
    base: LogBase,
) -> Result<f64, MeasurementError> {
    let spectrum = singular_values(matrix);
    let total: f64 = spectrum.iter().sum();
    if total < 1e-14 {
        return Err(MeasurementError::DegenerateMatrix);
    }
    let entropy: f64 = spectrum
        .iter()
        .map(|sigma| sigma / total)
        .filter(|&p| p > 1e-15)
        .map(|p| {
            -p * match base {
                LogBase::Two => p.log2(),
                LogBase::E => p.ln(),
            }
        })
        .sum();
    // every term is nonnegative; max turns the sum identity's -0.0 into 0.0
    Ok(entropy.max(0.0))
}

/// (1/2)·Σ|pᵢ − qᵢ| between two equally long vectors.
pub fn l1_distance(p: &[f64], q: &[f64]) -> Result<f64, MeasurementError> {
    if p.len() != q.len() {
        return Err(MeasurementError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Max-norm distance of the two-walker ordered-event matrix from its best
/// rank-1 approximation; near zero exactly when the coincidence structure
/// factors, as coherent-light statistics always do.
pub fn rank_one_distance(jpd: &Jpd) -> Result<f64, MeasurementError> {
    Ok(rank_one_residual(&jpd.ordered_matrix()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::lift_and_apply;
    use crate::fock::Mode;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn balanced() -> ModeUnitary {
        let h = Array2::from_shape_vec(
            (2, 2),
            vec![
                Complex64::new(S, 0.0),
                Complex64::new(S, 0.0),
                Complex64::new(S, 0.0),
                Complex64::new(-S, 0.0),
            ],
        )
        .unwrap();
        ModeUnitary::from_matrix(vec![(0, 0), (1, 1)], h).unwrap()
    }

    fn hom_state() -> FockState {
        let input = FockState::vacuum()
            .create_walker(Mode::rail(0))
            .create_walker(Mode::rail(1));
        lift_and_apply(&balanced(), &input).unwrap()
    }

    #[test]
    fn hom_jpd_bunches_completely() {
        let jpd = jpd_from_state(&hom_state(), &[0, 1]).unwrap();
        assert_eq!(jpd.kind(), JpdKind::Indistinguishable);
        assert_abs_diff_eq!(jpd.entry(&[0, 0]), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(jpd.entry(&[1, 1]), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(jpd.entry(&[0, 1]), 0.0, epsilon = 1e-12);
        jpd.validate().unwrap();
        assert_abs_diff_eq!(meeting_probability(&jpd), 1.0, epsilon = 1e-12);
        let q = single_click_marginal(&jpd).unwrap();
        assert_abs_diff_eq!(q[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn uniform_single_walker_jpd() {
        let quarter = Complex64::new(0.5, 0.0);
        let parts: Vec<FockState> = (0..4)
            .map(|p| FockState::vacuum().create_walker(Mode::rail(p)))
            .collect();
        let weighted: Vec<(Complex64, &FockState)> =
            parts.iter().map(|s| (quarter, s)).collect();
        let state = FockState::superposition(&weighted);
        let jpd = jpd_from_state(&state, &[0, 1, 2, 3]).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(jpd.entry(&[i]), 0.25, epsilon = 1e-12);
        }
        jpd.validate().unwrap();
        assert!(matches!(
            single_click_marginal(&jpd),
            Err(MeasurementError::UnsupportedWalkerCount { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn distinguishable_product_state_has_one_entry() {
        let state = FockState::vacuum()
            .create_walker(Mode::rail_species(0, 0))
            .create_walker(Mode::rail_species(2, 1));
        let jpd = jpd_from_state(&state, &[0, 1, 2]).unwrap();
        assert_eq!(jpd.kind(), JpdKind::Distinguishable);
        assert_abs_diff_eq!(jpd.entry(&[0, 2]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(jpd.tensor().sum(), 1.0, epsilon = 1e-12);
        jpd.validate().unwrap();
    }

    #[test]
    fn mixed_species_content_is_tagged_mixed() {
        let two_same = FockState::vacuum()
            .create_walker(Mode::rail_species(0, 0))
            .create_walker(Mode::rail_species(1, 0));
        let two_diff = FockState::vacuum()
            .create_walker(Mode::rail_species(0, 0))
            .create_walker(Mode::rail_species(1, 1));
        let c = Complex64::new(S, 0.0);
        let state = FockState::superposition(&[(c, &two_same), (c, &two_diff)]);
        let jpd = jpd_from_state(&state, &[0, 1]).unwrap();
        assert_eq!(jpd.kind(), JpdKind::Mixed);
        jpd.validate().unwrap();
    }

    #[test]
    fn closed_form_hom_instances() {
        let u = balanced();
        let ind = jpd_two_walker_closed_form(&u, (0, 0), (1, 1), JpdKind::Indistinguishable)
            .unwrap();
        assert_abs_diff_eq!(ind.entry(&[0, 0]), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ind.entry(&[0, 1]), 0.0, epsilon = 1e-12);
        ind.validate().unwrap();
        let dist =
            jpd_two_walker_closed_form(&u, (0, 0), (1, 1), JpdKind::Distinguishable).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(dist.entry(&[r, c]), 0.25, epsilon = 1e-12);
            }
        }
        dist.validate().unwrap();
        assert_abs_diff_eq!(meeting_probability(&dist), 0.5, epsilon = 1e-12);
        let q = single_click_marginal(&dist).unwrap();
        assert_abs_diff_eq!(q[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], 0.75, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_same_input_matches_engine() {
        let u = balanced();
        let ind =
            jpd_two_walker_closed_form(&u, (0, 0), (0, 0), JpdKind::Indistinguishable).unwrap();
        // engine: |2⟩ at rail 0 through the coupler
        let state = FockState::vacuum()
            .create_walker(Mode::rail(0))
            .create_walker(Mode::rail(0))
            .normalized()
            .unwrap();
        let engine = jpd_from_state(&lift_and_apply(&u, &state).unwrap(), &[0, 1]).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(
                    ind.entry(&[r, c]),
                    engine.entry(&[r, c]),
                    epsilon = 1e-12
                );
            }
        }
        ind.validate().unwrap();
    }

    #[test]
    fn closed_form_rejects_mixed_kind() {
        let u = balanced();
        assert!(matches!(
            jpd_two_walker_closed_form(&u, (0, 0), (1, 1), JpdKind::Mixed),
            Err(MeasurementError::UnsupportedKind)
        ));
    }

    #[test]
    fn unit_entry_marginal_is_one_at_both_positions() {
        let state = FockState::vacuum()
            .create_walker(Mode::rail(0))
            .create_walker(Mode::rail(1));
        let jpd = jpd_from_state(&state, &[0, 1]).unwrap();
        let q = single_click_marginal(&jpd).unwrap();
        assert_abs_diff_eq!(q[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn to_unordered_folds_ordered_entries() {
        let state = FockState::vacuum()
            .create_walker(Mode::rail_species(0, 0))
            .create_walker(Mode::rail_species(1, 1));
        let u = balanced();
        let out = lift_and_apply(&u, &state).unwrap();
        let ordered = jpd_from_state(&out, &[0, 1]).unwrap();
        assert_eq!(ordered.kind(), JpdKind::Distinguishable);
        let unordered = ordered.to_unordered();
        assert_eq!(unordered.kind(), JpdKind::Mixed);
        assert_abs_diff_eq!(
            unordered.entry(&[0, 1]),
            ordered.entry(&[0, 1]) + ordered.entry(&[1, 0]),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(unordered.entry(&[0, 0]), ordered.entry(&[0, 0]), epsilon = 1e-12);
        unordered.validate().unwrap();
    }

    #[test]
    fn projection_keeps_partner_walker() {
        let state = FockState::vacuum()
            .create_walker(Mode::rail(0))
            .create_walker(Mode::rail(2));
        let projected = project_single_detection(&state, 0).unwrap();
        assert_abs_diff_eq!(projected.probability, 1.0, epsilon = 1e-12);
        let marginal = position_marginal(&projected.state, &[0, 1, 2]).unwrap();
        assert_abs_diff_eq!(marginal[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hom_single_detection_is_impossible() {
        let err = project_single_detection(&hom_state(), 0).unwrap_err();
        assert!(matches!(err, MeasurementError::ZeroProbabilityEvent { .. }));
        let bunched = project_bunched(&hom_state(), 0).unwrap();
        assert_abs_diff_eq!(bunched.probability, 0.5, epsilon = 1e-12);
        assert_eq!(bunched.state.num_terms(), 1);
    }

    #[test]
    fn species_projection_conditions_on_one_species() {
        // species 0 at rail 0; species 1 in superposition across rails
        let s0 = FockState::vacuum().create_walker(Mode::rail_species(0, 0));
        let t0 = s0.create_walker(Mode::rail_species(0, 1));
        let t1 = s0.create_walker(Mode::rail_species(1, 1));
        let c = Complex64::new(S, 0.0);
        let state = FockState::superposition(&[(c, &t0), (c, &t1)]);
        let projected = project_species_detection(&state, 0, 1).unwrap();
        assert_abs_diff_eq!(projected.probability, 0.5, epsilon = 1e-12);
        let other = species_position_marginal(&projected.state, 0, &[0, 1]).unwrap();
        assert_abs_diff_eq!(other[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn completeness_partition_on_a_three_position_state() {
        // 2 walkers spread over 3 rails by two balanced couplers
        let h = Array2::from_shape_vec(
            (2, 2),
            vec![
                Complex64::new(S, 0.0),
                Complex64::new(S, 0.0),
                Complex64::new(S, 0.0),
                Complex64::new(-S, 0.0),
            ],
        )
        .unwrap();
        let mut m = Array2::eye(3);
        m.slice_mut(ndarray::s![0..2, 0..2]).assign(&h);
        let u01 = ModeUnitary::from_matrix(vec![(0, 0), (1, 1), (2, 2)], m).unwrap();
        let mut m2 = Array2::eye(3);
        m2.slice_mut(ndarray::s![1..3, 1..3]).assign(&h);
        let u12 = ModeUnitary::from_matrix(vec![(0, 0), (1, 1), (2, 2)], m2).unwrap();
        let u = u12.compose(&u01).unwrap();
        let input = FockState::vacuum()
            .create_walker(Mode::rail(0))
            .create_walker(Mode::rail(1));
        let state = lift_and_apply(&u, &input).unwrap();
        let positions = [0, 1, 2];
        let mut total = 0.0;
        for (i, &m) in positions.iter().enumerate() {
            if let Ok(bunched) = project_bunched(&state, m) {
                total += bunched.probability;
            }
            for &k in positions.iter().skip(i + 1) {
                if let Ok(first) = project_single_detection(&state, m) {
                    if let Ok(second) = project_single_detection(&first.state, k) {
                        total += first.probability * second.probability;
                    }
                }
            }
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn entropy_known_values() {
        let half_identity = Array2::from_diag(&ndarray::Array1::from_vec(vec![0.5, 0.5]));
        assert_abs_diff_eq!(
            correlation_entropy_matrix(&half_identity, LogBase::Two).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            correlation_entropy_matrix(&half_identity, LogBase::E).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        let outer = Array2::from_shape_fn((3, 3), |(r, c)| {
            [0.5, 0.3, 0.2][r] * [0.1, 0.6, 0.3][c]
        });
        assert_abs_diff_eq!(
            correlation_entropy_matrix(&outer, LogBase::Two).unwrap(),
            0.0,
            epsilon = 1e-10
        );
        assert!(matches!(
            correlation_entropy_matrix(&Array2::zeros((2, 2)), LogBase::Two),
            Err(MeasurementError::DegenerateMatrix)
        ));
    }

    #[test]
    fn l1_distance_basics() {
        assert_abs_diff_eq!(
            l1_distance(&[0.25, 0.75], &[0.25, 0.75]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(l1_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            l1_distance(&[1.0], &[0.5, 0.5]),
            Err(MeasurementError::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn rank_one_distance_separates_hom_from_products() {
        let hom = jpd_from_state(&hom_state(), &[0, 1]).unwrap();
        assert!(rank_one_distance(&hom).unwrap() >= 0.2);
        let u = balanced();
        let dist =
            jpd_two_walker_closed_form(&u, (0, 0), (1, 1), JpdKind::Distinguishable).unwrap();
        assert!(rank_one_distance(&dist).unwrap() <= 1e-10);
    }

    #[test]
    fn validation_catches_bad_tensors() {
        let bad = Array2::from_shape_vec((2, 2), vec![0.5, -0.2, -0.2, 0.5]).unwrap();
        assert!(matches!(
            Jpd::from_matrix(JpdKind::Indistinguishable, vec![0, 1], bad),
            Err(MeasurementError::NegativeEntry { .. })
        ));
        let asym = Array2::from_shape_vec((2, 2), vec![0.5, 0.4, 0.1, 0.0]).unwrap();
        let jpd = Jpd::from_matrix(JpdKind::Indistinguishable, vec![0, 1], asym).unwrap();
        assert!(matches!(
            jpd.validate(),
            Err(MeasurementError::SymmetryViolation { .. })
        ));
        let unnorm = Array2::from_shape_vec((2, 2), vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let jpd = Jpd::from_matrix(JpdKind::Distinguishable, vec![0, 1], unnorm).unwrap();
        assert!(matches!(
            jpd.validate(),
            Err(MeasurementError::NormalizationViolation { .. })
        ));
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let state = FockState::vacuum()
            .create_walker(Mode::rail(0))
            .scaled(Complex64::new(2.0, 0.0));
        assert!(matches!(
            jpd_from_state(&state, &[0]),
            Err(MeasurementError::NotNormalized { .. })
        ));
    }
}
