//! Bosonic multi-walker state algebra.
//!
//! States live in the occupation-number basis over [`Mode`]s. A mode is a
//! (position, coin, species) triple: the (position, coin) pair names a
//! directed edge of the walk graph, the species label distinguishes
//! otherwise identical walkers. Amplitudes are stored against *normalized*
//! occupation vectors `|k⟩`, so a creation operator acts as
//! `w†|k⟩ = √(k+1)|k+1⟩` and inner products reduce to amplitude overlaps.
//!
//! Exchange symmetry is automatic: an occupation vector is a multiset, so
//! `w(a)†w(b)†|0⟩ = w(b)†w(a)†|0⟩` by construction.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Vertex, WalkerGraph};

/// Distinguishability label; walkers of different species never interfere.
pub type Species = u32;

/// Amplitudes below this threshold are dropped after operator application.
pub const PRUNE_EPS: f64 = 1e-14;

/// Default cap on enumerated basis sizes.
pub const DEFAULT_BASIS_CAP: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("cannot normalize a state with zero norm")]
    ZeroNorm,
    #[error("state mixes walker numbers {0} and {1}")]
    MixedWalkerNumber(u32, u32),
    #[error("state has no terms")]
    EmptyState,
    #[error("basis of {size} occupation vectors exceeds the cap {cap}")]
    BasisTooLarge { size: u128, cap: u128 },
    #[error("mode ({position}, {coin}) is not a directed edge of the graph")]
    InvalidMode { position: Vertex, coin: Vertex },
}

/// One walker mode `w(position, coin, species)†`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub position: Vertex,
    pub coin: Vertex,
    pub species: Species,
}

impl Mode {
    pub fn new(position: Vertex, coin: Vertex, species: Species) -> Self {
        Self {
            position,
            coin,
            species,
        }
    }

    /// Default-species walker mode on the directed edge (position, coin).
    pub fn walker(position: Vertex, coin: Vertex) -> Self {
        Self::new(position, coin, 0)
    }

    /// Photonic rail mode: a position with itself as the coin target.
    pub fn rail(rail: Vertex) -> Self {
        Self::new(rail, rail, 0)
    }

    pub fn rail_species(rail: Vertex, species: Species) -> Self {
        Self::new(rail, rail, species)
    }

    /// Validates that (position, coin) is a directed edge of `graph`.
    pub fn for_graph(
        graph: &WalkerGraph,
        position: Vertex,
        coin: Vertex,
        species: Species,
    ) -> Result<Self, FockError> {
        if graph.has_edge(position, coin) {
            Ok(Self::new(position, coin, species))
        } else {
            Err(FockError::InvalidMode { position, coin })
        }
    }

    /// The directed edge this mode occupies, ignoring species.
    pub fn edge(&self) -> (Vertex, Vertex) {
        (self.position, self.coin)
    }
}

/// Multiset of occupied modes: sorted mode → count pairs, counts ≥ 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Occupation(BTreeMap<Mode, u32>);

impl Occupation {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds an occupation from a mode list, accumulating multiplicity.
    pub fn from_modes(modes: &[Mode]) -> Self {
        let mut map = BTreeMap::new();
        for &m in modes {
            *map.entry(m).or_insert(0) += 1;
        }
        Self(map)
    }

    /// Zips parallel mode and count slices, skipping zero counts.
    pub fn from_counts(modes: &[Mode], counts: &[u32]) -> Self {
        debug_assert_eq!(modes.len(), counts.len());
        let map = modes
            .iter()
            .zip(counts)
            .filter(|(_, &k)| k > 0)
            .map(|(&m, &k)| (m, k))
            .collect();
        Self(map)
    }

    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn count(&self, mode: Mode) -> u32 {
        self.0.get(&mode).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, u32)> + '_ {
        self.0.iter().map(|(&m, &k)| (m, k))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Adds one walker in `mode`; returns the new occupation and the count
    /// *before* the addition (the ladder factor is √(previous + 1)).
    pub fn added(&self, mode: Mode) -> (Self, u32) {
        let mut map = self.0.clone();
        let entry = map.entry(mode).or_insert(0);
        let previous = *entry;
        *entry += 1;
        (Self(map), previous)
    }

    /// Total walkers of any species at `position`.
    pub fn count_at_position(&self, position: Vertex) -> u32 {
        self.0
            .iter()
            .filter(|(m, _)| m.position == position)
            .map(|(_, &k)| k)
            .sum()
    }

    /// Walkers of one species at `position`.
    pub fn count_at_position_species(&self, position: Vertex, species: Species) -> u32 {
        self.0
            .iter()
            .filter(|(m, _)| m.position == position && m.species == species)
            .map(|(_, &k)| k)
            .sum()
    }

    /// Positions with multiplicity, sorted ascending; length equals `total()`.
    pub fn position_multiset(&self) -> Vec<Vertex> {
        let mut out = Vec::with_capacity(self.total() as usize);
        for (m, k) in self.iter() {
            out.extend(std::iter::repeat_n(m.position, k as usize));
        }
        out.sort_unstable();
        out
    }

    /// Walker count per species.
    pub fn species_counts(&self) -> BTreeMap<Species, u32> {
        let mut out = BTreeMap::new();
        for (m, k) in self.iter() {
            *out.entry(m.species).or_insert(0) += k;
        }
        out
    }

    /// ∏ k_m! over occupied modes, as a float.
    pub fn ladder_norm_sq(&self) -> f64 {
        self.0.values().map(|&k| factorial(k)).product()
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Sparse bosonic state: complex amplitudes over normalized occupation
/// vectors. Immutable; every operation returns a new state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockState {
    terms: BTreeMap<Occupation, Complex64>,
}

impl FockState {
    /// The empty walker state `|0⟩`.
    pub fn vacuum() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Occupation::empty(), Complex64::ONE);
        Self { terms }
    }

    /// The zero vector (no terms); additive identity, not a physical state.
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a state from raw terms, merging duplicate occupations and
    /// dropping exact-zero amplitudes.
    pub fn from_terms(terms: impl IntoIterator<Item = (Occupation, Complex64)>) -> Self {
        let mut map: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in terms {
            *map.entry(occ).or_insert(Complex64::ZERO) += amp;
        }
        map.retain(|_, a| *a != Complex64::ZERO);
        Self { terms: map }
    }

    /// Applies the creation operator `w(mode)†`.
    pub fn create_walker(&self, mode: Mode) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(occ, &amp)| {
                let (next, previous) = occ.added(mode);
                (next, amp * f64::from(previous + 1).sqrt())
            })
            .collect();
        Self { terms }
    }

    /// `w(m₁)†…w(m_p)†|0⟩`, unnormalized: repeated modes contribute the
    /// bosonic √(k!) factors, so the norm is √(∏ multiplicities!).
    pub fn product_state(modes: &[Mode]) -> Self {
        modes
            .iter()
            .fold(Self::vacuum(), |s, &m| s.create_walker(m))
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex64 {
        self.terms.get(occ).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, Complex64)> + '_ {
        self.terms.iter().map(|(o, &a)| (o, a))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sq() - 1.0).abs() <= tol
    }

    /// `⟨self|other⟩`; conjugate-linear in `self`. Occupations that differ
    /// in any mode (including species) contribute nothing.
    pub fn inner_product(&self, other: &Self) -> Complex64 {
        let (small, large, conj_small) = if self.terms.len() <= other.terms.len() {
            (&self.terms, &other.terms, true)
        } else {
            (&other.terms, &self.terms, false)
        };
        small
            .iter()
            .filter_map(|(occ, &a)| {
                large.get(occ).map(|&b| {
                    if conj_small {
                        a.conj() * b
                    } else {
                        b.conj() * a
                    }
                })
            })
            .sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let terms = self.terms.iter().map(|(o, &a)| (o.clone(), a * factor)).collect();
        Self { terms }
    }

    /// Weighted sum Σ cᵢ·ψᵢ with deterministic merge order.
    pub fn superposition(parts: &[(Complex64, &Self)]) -> Self {
        Self::from_terms(parts.iter().flat_map(|(c, s)| {
            s.terms.iter().map(move |(o, a)| (o.clone(), c * a))
        }))
    }

    pub fn normalized(&self) -> Result<Self, FockError> {
        let n = self.norm();
        if n < PRUNE_EPS {
            return Err(FockError::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    /// Drops terms with |amplitude| < `eps`.
    pub fn pruned(&self, eps: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(_, a)| a.norm() >= eps)
            .map(|(o, &a)| (o.clone(), a))
            .collect();
        Self { terms }
    }

    /// The common walker number p of all terms.
    pub fn walker_count(&self) -> Result<u32, FockError> {
        let mut counts = self.terms.keys().map(Occupation::total);
        let first = counts.next().ok_or(FockError::EmptyState)?;
        for c in counts {
            if c != first {
                return Err(FockError::MixedWalkerNumber(first, c));
            }
        }
        Ok(first)
    }

    /// Amplitudes against an explicit occupation basis.
    pub fn dense(&self, basis: &[Occupation]) -> Vec<Complex64> {
        basis.iter().map(|o| self.amplitude(o)).collect()
    }

    pub fn to_records(&self) -> Vec<StateTermRecord> {
        self.terms
            .iter()
            .map(|(occ, amp)| StateTermRecord {
                occ: occ
                    .iter()
                    .map(|(m, k)| (m.position, m.coin, m.species, k))
                    .collect(),
                amp: (amp.re, amp.im),
            })
            .collect()
    }

    pub fn from_records(records: &[StateTermRecord]) -> Self {
        Self::from_terms(records.iter().map(|r| {
            let modes = Occupation(
                r.occ
                    .iter()
                    .fold(BTreeMap::new(), |mut map, &(p, c, s, k)| {
                        if k > 0 {
                            *map.entry(Mode::new(p, c, s)).or_insert(0) += k;
                        }
                        map
                    }),
            );
            (modes, Complex64::new(r.amp.0, r.amp.1))
        }))
    }
}

/// One serialized state term: occupied modes as
/// `[position, coin, species, count]` rows plus a `[re, im]` amplitude.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateTermRecord {
    pub occ: Vec<(Vertex, Vertex, Species, u32)>,
    pub amp: (f64, f64),
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.checked_mul(n - k + i)?;
        acc /= i;
    }
    Some(acc)
}

/// Number of occupation vectors for `modes` modes and `walkers` walkers,
/// C(M+p−1, p), or `None` on arithmetic overflow.
pub fn basis_size(modes: usize, walkers: u32) -> Option<u128> {
    if modes == 0 {
        return Some(u128::from(walkers == 0));
    }
    binomial(modes as u128 + u128::from(walkers) - 1, u128::from(walkers))
}

/// All ways to place `walkers` walkers into `modes` slots, as count vectors
/// in lexicographically descending order: `[p,0,…]` first, `[…,0,p]` last.
pub fn enumerate_basis(modes: usize, walkers: u32) -> Result<Vec<Vec<u32>>, FockError> {
    enumerate_basis_with_cap(modes, walkers, DEFAULT_BASIS_CAP)
}

/// [`enumerate_basis`] with an explicit size cap; errors before allocating
/// when C(M+p−1, p) exceeds the cap.
pub fn enumerate_basis_with_cap(
    modes: usize,
    walkers: u32,
    cap: u128,
) -> Result<Vec<Vec<u32>>, FockError> {
    let size = basis_size(modes, walkers).unwrap_or(u128::MAX);
    if size > cap {
        return Err(FockError::BasisTooLarge { size, cap });
    }
    let mut out = Vec::with_capacity(size as usize);
    if modes == 0 {
        if walkers == 0 {
            out.push(Vec::new());
        }
        return Ok(out);
    }
    let mut prefix = Vec::with_capacity(modes);
    fill_compositions(walkers, modes, &mut prefix, &mut out);
    Ok(out)
}

fn fill_compositions(remaining: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if slots == 1 {
        prefix.push(remaining);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=remaining).rev() {
        prefix.push(first);
        fill_compositions(remaining - first, slots - 1, prefix, out);
        prefix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(position: Vertex, coin: Vertex) -> Mode {
        Mode::walker(position, coin)
    }

    #[test]
    fn vacuum_is_normalized_and_self_overlapping() {
        let v = FockState::vacuum();
        assert_abs_diff_eq!(v.norm_sq(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.inner_product(&v).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn single_creation_gives_unit_one_walker_state() {
        let s = FockState::vacuum().create_walker(m(0, 1));
        assert_eq!(s.walker_count().unwrap(), 1);
        assert_abs_diff_eq!(s.norm_sq(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn repeated_creation_accumulates_ladder_factors() {
        // (w†)^p |0⟩ = √(p!) |p⟩
        for p in 0..=6u32 {
            let mut s = FockState::vacuum();
            for _ in 0..p {
                s = s.create_walker(m(0, 1));
            }
            let occ = Occupation::from_counts(&[m(0, 1)], &[p]);
            assert_abs_diff_eq!(
                s.amplitude(&occ).re,
                factorial(p).sqrt(),
                epsilon = 1e-12
            );
            assert_eq!(s.num_terms(), 1);
        }
    }

    #[test]
    fn creation_order_is_irrelevant() {
        let ab = FockState::vacuum().create_walker(m(0, 1)).create_walker(m(2, 3));
        let ba = FockState::vacuum().create_walker(m(2, 3)).create_walker(m(0, 1));
        assert_eq!(ab, ba);
    }

    #[test]
    fn distinct_species_are_orthogonal() {
        let a = FockState::vacuum().create_walker(Mode::new(0, 1, 1));
        let b = FockState::vacuum().create_walker(Mode::new(0, 1, 2));
        assert_eq!(a.inner_product(&b), Complex64::ZERO);
        assert_abs_diff_eq!(a.inner_product(&a).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn inner_product_conjugates_the_left_argument() {
        let i = Complex64::new(0.0, 1.0);
        let s = FockState::vacuum().create_walker(m(0, 1)).scaled(i);
        let v = FockState::vacuum().create_walker(m(0, 1));
        assert_abs_diff_eq!(s.inner_product(&v).im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.inner_product(&s).im, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn factorial_overlap_property() {
        // ⟨0| w^p (w†)^p |0⟩ = p!
        for p in 0..=4u32 {
            let mut s = FockState::vacuum();
            for _ in 0..p {
                s = s.create_walker(m(0, 1));
            }
            assert_abs_diff_eq!(s.inner_product(&s).re, factorial(p), epsilon = 1e-10);
        }
    }

    #[test]
    fn normalization_and_zero_state() {
        let s = FockState::vacuum()
            .create_walker(m(0, 1))
            .scaled(Complex64::new(3.0, 0.0));
        let n = s.normalized().unwrap();
        assert!(n.is_normalized(1e-12));
        assert_eq!(FockState::zero().normalized(), Err(FockError::ZeroNorm));
    }

    #[test]
    fn superposition_is_linear_and_merges() {
        let a = FockState::vacuum().create_walker(m(0, 1));
        let b = FockState::vacuum().create_walker(m(2, 3));
        let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let s = FockState::superposition(&[(half, &a), (half, &b)]);
        assert!(s.is_normalized(1e-12));
        let cancel = FockState::superposition(&[(Complex64::ONE, &a), (-Complex64::ONE, &a)]);
        assert_eq!(cancel.num_terms(), 0);
    }

    #[test]
    fn pruning_drops_dust() {
        let a = FockState::vacuum().create_walker(m(0, 1));
        let dust = FockState::vacuum()
            .create_walker(m(2, 3))
            .scaled(Complex64::new(1e-16, 0.0));
        let s = FockState::superposition(&[(Complex64::ONE, &a), (Complex64::ONE, &dust)]);
        assert_eq!(s.pruned(PRUNE_EPS).num_terms(), 1);
    }

    #[test]
    fn walker_count_detects_mixing() {
        let one = FockState::vacuum().create_walker(m(0, 1));
        let two = one.create_walker(m(2, 3));
        let mixed = FockState::superposition(&[(Complex64::ONE, &one), (Complex64::ONE, &two)]);
        assert_eq!(mixed.walker_count(), Err(FockError::MixedWalkerNumber(1, 2)));
        assert_eq!(FockState::zero().walker_count(), Err(FockError::EmptyState));
    }

    #[test]
    fn basis_smallest_cases() {
        assert_eq!(
            enumerate_basis(2, 2).unwrap(),
            vec![vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(enumerate_basis(1, 0).unwrap(), vec![vec![0u32]]);
        assert_eq!(enumerate_basis(14, 2).unwrap().len(), 105);
    }

    #[test]
    fn basis_cap_refuses_large_enumerations() {
        let err = enumerate_basis_with_cap(50, 10, 1000).unwrap_err();
        assert!(matches!(err, FockError::BasisTooLarge { cap: 1000, .. }));
    }

    #[test]
    fn record_round_trip_preserves_state() {
        let s = FockState::superposition(&[
            (
                Complex64::new(0.6, 0.0),
                &FockState::vacuum().create_walker(m(0, 1)).create_walker(m(0, 1)),
            ),
            (
                Complex64::new(0.0, 0.8),
                &FockState::vacuum()
                    .create_walker(Mode::new(2, 3, 1))
                    .create_walker(m(0, 1)),
            ),
        ]);
        let records = s.to_records();
        let back = FockState::from_records(&records);
        assert_eq!(s, back);
        let json = serde_json::to_string(&records).unwrap();
        let parsed: Vec<StateTermRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(FockState::from_records(&parsed), s);
    }

    #[test]
    fn position_queries_span_species() {
        let occ = Occupation::from_modes(&[
            Mode::new(0, 1, 0),
            Mode::new(0, 0, 1),
            Mode::new(2, 3, 0),
        ]);
        assert_eq!(occ.count_at_position(0), 2);
        assert_eq!(occ.count_at_position_species(0, 1), 1);
        assert_eq!(occ.position_multiset(), vec![0, 0, 2]);
        assert_eq!(occ.total(), 3);
    }

    #[test]
    fn mode_graph_validation() {
        let g = WalkerGraph::line(2).unwrap();
        assert!(Mode::for_graph(&g, 0, 1, 0).is_ok());
        assert_eq!(
            Mode::for_graph(&g, 0, 2, 0),
            Err(FockError::InvalidMode { position: 0, coin: 2 })
        );
    }
}
