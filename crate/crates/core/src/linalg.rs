//! Small complex-matrix helpers shared across modules.

use ndarray::Array2;
use num_complex::Complex64;

/// Max-norm deviation of `m` from unitarity, `max |(M†M − I)_{ij}|`.
pub(crate) fn max_unitarity_deviation(m: &Array2<Complex64>) -> f64 {
    let d = m.nrows();
    if d != m.ncols() {
        return f64::INFINITY;
    }
    let gram = m.mapv(|z| z.conj()).t().dot(m);
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
            worst = worst.max((gram[[i, j]] - expect).norm());
        }
    }
    worst
}

/// One-sided Jacobi orthogonalization: plane rotations on the right zero the
/// pairwise column inner products, so the result factors as `M·V = U·Σ` with
/// the returned columns equal to σⱼuⱼ and `V` the accumulated rotations.
/// Working on the columns directly (never on `MᵀM`) keeps small singular
/// values at high relative accuracy, which the entropy and rank-1 checks
/// depend on.
fn one_sided_jacobi(m: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let mut a = m.clone();
    let rows = a.nrows();
    let cols = a.ncols();
    let mut v = Array2::<f64>::eye(cols);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in p + 1..cols {
                let mut alpha = 0.0f64;
                let mut beta = 0.0f64;
                let mut gamma = 0.0f64;
                for i in 0..rows {
                    alpha += a[[i, p]] * a[[i, p]];
                    beta += a[[i, q]] * a[[i, q]];
                    gamma += a[[i, p]] * a[[i, q]];
                }
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                let tau = (beta - alpha) / (2.0 * gamma);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..rows {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = c * aip - s * aiq;
                    a[[i, q]] = s * aip + c * aiq;
                }
                for i in 0..cols {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    (a, v)
}

fn column_norms(a: &Array2<f64>) -> Vec<f64> {
    (0..a.ncols())
        .map(|j| {
            (0..a.nrows())
                .map(|i| a[[i, j]] * a[[i, j]])
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Singular values of a real matrix, descending.
pub(crate) fn singular_values(m: &Array2<f64>) -> Vec<f64> {
    let (a, _) = one_sided_jacobi(m);
    let mut values = column_norms(&a);
    values.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    values
}

/// Max-norm residual of the best rank-1 approximation, `max |M − σ₁u₁v₁ᵀ|`.
/// The dominant orthogonalized column is σ₁u₁ and its rotation column v₁, so
/// the product carries no sign ambiguity.
pub(crate) fn rank_one_residual(m: &Array2<f64>) -> f64 {
    let (a, v) = one_sided_jacobi(m);
    let norms = column_norms(&a);
    let mut dominant = 0;
    for j in 1..norms.len() {
        if norms[j] > norms[dominant] {
            dominant = j;
        }
    }
    if norms.is_empty() || norms[dominant] == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let approx = a[[r, dominant]] * v[[c, dominant]];
            worst = worst.max((m[[r, c]] - approx).abs());
        }
    }
    worst
}
