//! Photonic building blocks: the two-photon beamsplitter block matrix,
//! triangular beamsplitter pyramids, partial-distinguishability mixing, and
//! classical coherent-light comparison statistics.
//!
//! Beamsplitter convention: the single-particle coupling sends the first
//! mode's creation operator to (a† + b†)/√2 and the second's to (a† − b†)/√2.
//! Written on the mode pair (a, b) this is the matrix [[1, 1], [1, −1]]/√2;
//! the same physics is sometimes quoted with |1,1⟩ mapping to
//! (|2,0⟩ + |0,2⟩)/√2 instead, which differs only by local phases and yields
//! identical detection probabilities.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{lift_and_apply, EdgeMode, EvolutionError, ModeUnitary};
use crate::fock::{enumerate_basis, FockError, FockState, Mode, PRUNE_EPS};
use crate::graph::Vertex;
use crate::linalg::max_unitarity_deviation;
use crate::measurement::{jpd_from_state, rank_one_distance, Jpd, MeasurementError};

/// Tolerance on coupling and composed-network unitarity.
pub const COUPLING_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OpticalError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error("pyramid needs at least 1 level, got {0}")]
    InvalidLevels(usize),
    #[error("mixing weight {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("field spans {field} modes but the network has {network}")]
    DimensionMismatch { field: usize, network: usize },
    #[error("coherent field carries no photons")]
    ZeroField,
    #[error("conditioning requires at least one photon")]
    ZeroPhotons,
    #[error("element {index} uses mode {mode}, network has modes 0..{total}")]
    ModeOutOfRange {
        index: usize,
        mode: usize,
        total: usize,
    },
    #[error("port list uses mode {mode}, network has modes 0..{total}")]
    PortOutOfRange { mode: usize, total: usize },
    #[error("element {index} couples a mode to itself")]
    DegenerateElement { index: usize },
    #[error("element {index} coupling is {rows}×{cols}, expected 2×2")]
    CouplingShape {
        index: usize,
        rows: usize,
        cols: usize,
    },
    #[error("element {index} coupling deviates from unitarity by {deviation:.3e}")]
    NonUnitaryCoupling { index: usize, deviation: f64 },
    #[error("field amplitude {index} is not finite")]
    NonFiniteAmplitude { index: usize },
}

/// Balanced two-mode coupling on the ordered pair (a, b): a† → (a† + b†)/√2,
/// b† → (a† − b†)/√2.
pub fn beamsplitter_coupling() -> Array2<Complex64> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Array2::from_shape_vec((2, 2), vec![s, s, s, -s]).expect("static shape")
}

/// Two-mode occupation basis (n_a, n_b) ordering the rows and columns of
/// [`beamsplitter_b2`]: photon-number sectors 0, 1, 2 in sequence.
pub const B2_BASIS: [(u32, u32); 6] = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (0, 2)];

/// Beamsplitter action on the 0-, 1-, and 2-photon sectors of two modes,
/// block diagonal over [`B2_BASIS`]. Column 3 is the |1,1⟩ input mapping to
/// (|2,0⟩ − |0,2⟩)/√2: the coincidence dip. Equals the multi-photon lift of
/// [`beamsplitter_coupling`] restricted to these sectors.
pub fn beamsplitter_b2() -> Array2<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rows: [[f64; 6]; 6] = [
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, -s, s, 0.0, 0.0, 0.0],
        [0.0, s, s, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, s, -s],
        [0.0, 0.0, 0.0, s, 0.5, 0.5],
        [0.0, 0.0, 0.0, -s, 0.5, 0.5],
    ];
    Array2::from_shape_fn((6, 6), |(r, c)| Complex64::new(rows[r][c], 0.0))
}

/// One two-mode coupler inside a network, acting on rails `mode_a` and
/// `mode_b` with the given 2×2 unitary (rows and columns in (a, b) order).
#[derive(Debug, Clone, PartialEq)]
pub struct BsElement {
    pub mode_a: usize,
    pub mode_b: usize,
    pub coupling: Array2<Complex64>,
}

impl BsElement {
    pub fn balanced(mode_a: usize, mode_b: usize) -> Self {
        Self {
            mode_a,
            mode_b,
            coupling: beamsplitter_coupling(),
        }
    }
}

/// An ordered sequence of two-mode couplers over `total_modes` rails;
/// elements listed first act first. Rails are addressed as edge modes
/// (r, r), so rail index doubles as detection position.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamsplitterNetwork {
    total_modes: usize,
    elements: Vec<BsElement>,
    input_modes: Vec<usize>,
    output_modes: Vec<usize>,
}

impl BeamsplitterNetwork {
    pub fn new(
        total_modes: usize,
        elements: Vec<BsElement>,
        input_modes: Vec<usize>,
        output_modes: Vec<usize>,
    ) -> Result<Self, OpticalError> {
        for (index, element) in elements.iter().enumerate() {
            for mode in [element.mode_a, element.mode_b] {
                if mode >= total_modes {
                    return Err(OpticalError::ModeOutOfRange {
                        index,
                        mode,
                        total: total_modes,
                    });
                }
            }
            if element.mode_a == element.mode_b {
                return Err(OpticalError::DegenerateElement { index });
            }
            let (rows, cols) = element.coupling.dim();
            if (rows, cols) != (2, 2) {
                return Err(OpticalError::CouplingShape { index, rows, cols });
            }
            let deviation = max_unitarity_deviation(&element.coupling);
            if deviation > COUPLING_TOL {
                return Err(OpticalError::NonUnitaryCoupling { index, deviation });
            }
        }
        for &mode in input_modes.iter().chain(&output_modes) {
            if mode >= total_modes {
                return Err(OpticalError::PortOutOfRange {
                    mode,
                    total: total_modes,
                });
            }
        }
        Ok(Self {
            total_modes,
            elements,
            input_modes,
            output_modes,
        })
    }

    pub fn total_modes(&self) -> usize {
        self.total_modes
    }

    pub fn elements(&self) -> &[BsElement] {
        &self.elements
    }

    pub fn input_modes(&self) -> &[usize] {
        &self.input_modes
    }

    pub fn output_modes(&self) -> &[usize] {
        &self.output_modes
    }

    /// Edge-mode labels of the rails, in rail order.
    pub fn modes(&self) -> Vec<EdgeMode> {
        (0..self.total_modes)
            .map(|r| (r as Vertex, r as Vertex))
            .collect()
    }

    pub fn input_edge_modes(&self) -> Vec<EdgeMode> {
        self.input_modes
            .iter()
            .map(|&r| (r as Vertex, r as Vertex))
            .collect()
    }

    /// Composes the elements into one mode unitary: each element
    /// left-multiplies the product of its predecessors.
    pub fn unitary(&self) -> Result<ModeUnitary, OpticalError> {
        let n = self.total_modes;
        let mut m: Array2<Complex64> = Array2::eye(n);
        for element in &self.elements {
            let (a, b) = (element.mode_a, element.mode_b);
            let c = &element.coupling;
            for j in 0..n {
                let ma = m[[a, j]];
                let mb = m[[b, j]];
                m[[a, j]] = c[[0, 0]] * ma + c[[0, 1]] * mb;
                m[[b, j]] = c[[1, 0]] * ma + c[[1, 1]] * mb;
            }
        }
        Ok(ModeUnitary::from_matrix(self.modes(), m)?)
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile::from_network(self)
    }
}

/// Serialization form of a network: couplings row-major as (re, im) pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub total_modes: usize,
    pub elements: Vec<ElementRecord>,
    pub input_modes: Vec<usize>,
    pub output_modes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementRecord {
    pub modes: [usize; 2],
    pub coupling: Vec<Vec<(f64, f64)>>,
}

impl NetworkFile {
    pub fn from_network(network: &BeamsplitterNetwork) -> Self {
        let elements = network
            .elements()
            .iter()
            .map(|e| ElementRecord {
                modes: [e.mode_a, e.mode_b],
                coupling: e
                    .coupling
                    .rows()
                    .into_iter()
                    .map(|row| row.iter().map(|z| (z.re, z.im)).collect())
                    .collect(),
            })
            .collect();
        Self {
            total_modes: network.total_modes(),
            elements,
            input_modes: network.input_modes().to_vec(),
            output_modes: network.output_modes().to_vec(),
        }
    }

    pub fn to_network(&self) -> Result<BeamsplitterNetwork, OpticalError> {
        let mut elements = Vec::with_capacity(self.elements.len());
        for (index, record) in self.elements.iter().enumerate() {
            let rows = record.coupling.len();
            let cols = record.coupling.first().map_or(0, Vec::len);
            if rows != 2 || record.coupling.iter().any(|r| r.len() != 2) {
                return Err(OpticalError::CouplingShape { index, rows, cols });
            }
            let coupling = Array2::from_shape_fn((2, 2), |(r, c)| {
                let (re, im) = record.coupling[r][c];
                Complex64::new(re, im)
            });
            elements.push(BsElement {
                mode_a: record.modes[0],
                mode_b: record.modes[1],
                coupling,
            });
        }
        BeamsplitterNetwork::new(
            self.total_modes,
            elements,
            self.input_modes.clone(),
            self.output_modes.clone(),
        )
    }
}

/// Triangular Galton-board of balanced beamsplitters: level k holds k
/// couplers, each feeding the adjacent pair below; edge inputs of every
/// level are vacuum. `levels` = L gives 2L rails; the two apex inputs are
/// rails L−1 and L, and all 2L rails of the last level are outputs.
pub fn pyramid_network(levels: usize) -> Result<BeamsplitterNetwork, OpticalError> {
    if levels < 1 {
        return Err(OpticalError::InvalidLevels(levels));
    }
    let total = 2 * levels;
    let mut elements = Vec::with_capacity(levels * (levels + 1) / 2);
    for k in 1..=levels {
        for i in 1..=k {
            let a = levels - k + 2 * (i - 1);
            elements.push(BsElement::balanced(a, a + 1));
        }
    }
    BeamsplitterNetwork::new(
        total,
        elements,
        vec![levels - 1, levels],
        (0..total).collect(),
    )
}

/// Two-walker JPD at partial distinguishability: the walker at `y` overlaps
/// the one at `x` with amplitude `alpha`, so the input superposes a
/// same-species component (weight α) and a second-species component
/// (weight √(1−α²)). The result is the unordered-event mixture
/// α²·P_indistinguishable + (1−α²)·P_distinguishable.
pub fn mixed_jpd(
    u: &ModeUnitary,
    x: EdgeMode,
    y: EdgeMode,
    alpha: f64,
) -> Result<Jpd, OpticalError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(OpticalError::AlphaOutOfRange(alpha));
    }
    let same = FockState::vacuum()
        .create_walker(Mode::new(x.0, x.1, 0))
        .create_walker(Mode::new(y.0, y.1, 0))
        .normalized()?;
    let diff = FockState::vacuum()
        .create_walker(Mode::new(x.0, x.1, 0))
        .create_walker(Mode::new(y.0, y.1, 1));
    let overlap = Complex64::new(alpha, 0.0);
    let orthogonal = Complex64::new((1.0 - alpha * alpha).max(0.0).sqrt(), 0.0);
    let input = FockState::superposition(&[(overlap, &same), (orthogonal, &diff)])
        .pruned(PRUNE_EPS);
    let output = lift_and_apply(u, &input)?;
    let jpd = jpd_from_state(&output, &u.positions())?;
    Ok(jpd.to_unordered())
}

/// A product of per-mode coherent amplitudes β_i, indexed by the mode list.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentField {
    modes: Vec<EdgeMode>,
    amplitudes: Vec<Complex64>,
}

impl CoherentField {
    pub fn new(
        modes: Vec<EdgeMode>,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self, OpticalError> {
        if modes.len() != amplitudes.len() {
            return Err(OpticalError::DimensionMismatch {
                field: amplitudes.len(),
                network: modes.len(),
            });
        }
        for (index, z) in amplitudes.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(OpticalError::NonFiniteAmplitude { index });
            }
        }
        Ok(Self { modes, amplitudes })
    }

    /// Field feeding a single mode of `u` with the given amplitude.
    pub fn at_mode(
        u: &ModeUnitary,
        mode: EdgeMode,
        amplitude: Complex64,
    ) -> Result<Self, OpticalError> {
        let index = u
            .index_of(mode)
            .ok_or(EvolutionError::ModeIndexMismatch(mode.0, mode.1))?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); u.dim()];
        amplitudes[index] = amplitude;
        Self::new(u.modes().to_vec(), amplitudes)
    }

    pub fn modes(&self) -> &[EdgeMode] {
        &self.modes
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }
}

/// Propagates a coherent field through a network: β ↦ U·β, one linear map
/// on the amplitude vector, conserving the mean photon number.
pub fn coherent_propagate(
    field: &CoherentField,
    u: &ModeUnitary,
) -> Result<CoherentField, OpticalError> {
    if field.modes() != u.modes() {
        return Err(OpticalError::DimensionMismatch {
            field: field.modes().len(),
            network: u.dim(),
        });
    }
    let n = u.dim();
    let m = u.matrix();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, slot) in out.iter_mut().enumerate() {
        for (j, amp) in field.amplitudes().iter().enumerate() {
            *slot += m[[i, j]] * amp;
        }
    }
    CoherentField::new(field.modes().to_vec(), out)
}

/// Detection statistics of a coherent field conditioned on seeing exactly
/// `photons` photons in total: occupation pattern (n₁,…,n_M) has amplitude
/// ∝ ∏ β_i^{n_i}/√(n_i!), renormalized over the fixed-number sector, then
/// traced to unordered position events. Photons of one field share a
/// species, so the result is tagged indistinguishable.
pub fn coherent_conditioned_jpd(
    field: &CoherentField,
    photons: u32,
) -> Result<Jpd, OpticalError> {
    if photons == 0 {
        return Err(OpticalError::ZeroPhotons);
    }
    if field.mean_photon_number() < PRUNE_EPS {
        return Err(OpticalError::ZeroField);
    }
    let modes: Vec<Mode> = field
        .modes()
        .iter()
        .map(|&(position, coin)| Mode::new(position, coin, 0))
        .collect();
    let mut terms = Vec::new();
    let mut total = 0.0;
    for pattern in enumerate_basis(modes.len(), photons)? {
        let mut amp = Complex64::new(1.0, 0.0);
        for (i, &n) in pattern.iter().enumerate() {
            if n == 0 {
                continue;
            }
            amp *= field.amplitudes()[i].powu(n);
            amp /= crate::fock::factorial(n).sqrt();
        }
        if amp.norm_sqr() < PRUNE_EPS * PRUNE_EPS {
            continue;
        }
        total += amp.norm_sqr();
        terms.push((crate::fock::Occupation::from_counts(&modes, &pattern), amp));
    }
    if total < PRUNE_EPS {
        return Err(OpticalError::ZeroField);
    }
    let scale = Complex64::new(1.0 / total.sqrt(), 0.0);
    let state = FockState::from_terms(terms.into_iter().map(|(occ, amp)| (occ, amp * scale)));
    let positions: Vec<Vertex> = {
        let mut p: Vec<Vertex> = field.modes().iter().map(|&(pos, _)| pos).collect();
        p.sort_unstable();
        p.dedup();
        p
    };
    Ok(jpd_from_state(&state, &positions)?)
}

/// Distance of the two-walker ordered-event matrix from its best rank-1
/// approximation. Coherent-light coincidences factor into a product of
/// single-detector rates, so a residual near 0 marks statistics that
/// classical light can reproduce; the coincidence dip scores ≥ 0.2.
pub fn coherent_separability_check(jpd: &Jpd) -> Result<f64, OpticalError> {
    Ok(rank_one_distance(jpd)?)
}
