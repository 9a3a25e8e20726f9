//! Shared helpers for the integration suites.

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qwalk_core::evolution::EdgeMode;
use qwalk_core::graph::Vertex;
use qwalk_core::ModeUnitary;

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random unitary via QR of a square matrix with uniform complex entries;
/// only unitarity and genericity matter, not the exact distribution.
pub fn random_unitary_matrix(n: usize, rng: &mut StdRng) -> Array2<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let q = g.qr().q();
    Array2::from_shape_fn((n, n), |(r, c)| q[(r, c)])
}

/// Rails 0..n−1 as self-loop edge modes, so rail index doubles as position.
pub fn rail_modes(n: usize) -> Vec<EdgeMode> {
    (0..n).map(|r| (r as Vertex, r as Vertex)).collect()
}

pub fn random_mode_unitary(n: usize, rng: &mut StdRng) -> ModeUnitary {
    ModeUnitary::from_matrix(rail_modes(n), random_unitary_matrix(n, rng))
        .expect("QR factor is unitary")
}
