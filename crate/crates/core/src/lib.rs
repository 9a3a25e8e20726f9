//! Simulation library for multi-walker discrete-time quantum walks on
//! arbitrary graphs.
//!
//! The model is built from walker creation operators acting on a vacuum
//! state. A walk is specified by a [`graph::WalkerGraph`] (vertices, directed
//! edges, and one unitary coin matrix per vertex) together with an initial
//! multi-walker Fock state. One round of the walk applies a coin operator
//! (per-vertex unitary mixing over each neighborhood) followed by a step
//! operator (the edge-reversal permutation), and the whole round compiles to
//! a single-particle unitary on the directed-edge mode space
//! ([`evolution::ModeUnitary`]) that is lifted multiplicatively to any number
//! of bosonic walkers.
//!
//! On top of the evolution engine, [`measurement`] computes joint detection
//! probability distributions, single-click marginals, meeting probabilities,
//! correlation entropy, and post-measurement projections, and [`optical`]
//! covers the photonic special case: beamsplitter coins, Galton-pyramid
//! networks, partial distinguishability, and the coherent-light comparison.

pub mod evolution;
pub mod fock;
pub mod graph;
mod linalg;
pub mod measurement;
pub mod optical;

pub use evolution::{
    coin_operator, lift_and_apply, step_operator, transition_amplitude, walk_unitary,
    CoinSchedule, EdgeMode, EvolutionError, ModeUnitary,
};
pub use fock::{enumerate_basis, FockError, FockState, Mode, Occupation};
pub use graph::{GraphError, Vertex, WalkerGraph};
pub use measurement::{
    correlation_entropy, jpd_from_state, jpd_two_walker_closed_form, l1_distance,
    meeting_probability, project_bunched, project_single_detection, project_species_detection,
    single_click_marginal, Jpd, JpdKind, LogBase, MeasurementError, Projection,
};
pub use optical::{
    beamsplitter_b2, beamsplitter_coupling, coherent_conditioned_jpd, coherent_propagate,
    coherent_separability_check, mixed_jpd, pyramid_network, BeamsplitterNetwork, BsElement,
    CoherentField, OpticalError,
};
