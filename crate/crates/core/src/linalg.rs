//! Small dense helpers shared by the estimators: stabilized QR steps,
//! principal angles, subspace intersection and finite-time singular values
//! of long matrix products.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// QR factorization with a non-negative diagonal in `R`.
///
/// Returns the orthonormal factor and `ln |R_ii|` per column.
pub fn qr_positive(m: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let k = m.ncols();
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    let mut logs = Vec::with_capacity(k);
    for i in 0..k {
        let d = r[(i, i)];
        if d < 0.0 {
            let mut col = q.column_mut(i);
            col.neg_mut();
        }
        logs.push(d.abs().ln());
    }
    (q, logs)
}

pub fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    qr_positive(m).0
}

/// Sine of the largest principal angle between two subspaces of equal
/// dimension, computed as `||(I - Q1 Q1^T) Q2||_2`.
pub fn subspace_distance(q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> f64 {
    let proj = q1 * (q1.transpose() * q2);
    let resid = q2 - proj;
    largest_singular_value(&resid)
}

/// Sine of the smallest principal angle between two subspaces. Zero when
/// they share a direction.
pub fn min_principal_sine(q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> f64 {
    let c = q1.transpose() * q2;
    let smax = largest_singular_value(&c).min(1.0);
    (1.0 - smax * smax).max(0.0).sqrt()
}

/// Angle between a unit direction and a subspace with orthonormal basis `q`.
pub fn angle_to_subspace(v: &DVector<f64>, q: &DMatrix<f64>) -> f64 {
    let n = v.norm();
    if n == 0.0 {
        return 0.0;
    }
    let u = v / n;
    let along = q * (q.transpose() * &u);
    let perp = (&u - &along).norm();
    perp.atan2(along.norm())
}

pub fn largest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Orthonormal basis of `span(q1) ∩ span(q2)` of dimension `k`, taken from
/// the top `k` singular directions of `Q1^T Q2`.
pub fn intersect(q1: &DMatrix<f64>, q2: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let c = q1.transpose() * q2;
    let svd = c.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let mut basis = DMatrix::zeros(q1.nrows(), k);
    for (j, &idx) in order.iter().take(k).enumerate() {
        let col = q1 * u.column(idx);
        basis.set_column(j, &col);
    }
    orthonormalize(basis)
}

/// Unit vector spanning the (numerical) null space of a wide matrix with one
/// more column than its rank.
pub fn null_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        let mut e = DVector::zeros(n);
        e[0] = 1.0;
        return e;
    }
    // Pad to square so the SVD returns a full right basis.
    let rows = m.nrows().max(n);
    let mut sq = DMatrix::zeros(rows, n);
    sq.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let (idx, _) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc },
            );
    vt.row(idx).transpose().normalize()
}

/// Natural logs of the singular values of `M_n ⋯ M_2 M_1`, in descending
/// order, without forming the product.
///
/// Alternates forward sweeps with `M_i` and backward sweeps with `M_i^T`,
/// re-orthonormalizing after every factor. Once the input frame matches the
/// right singular vectors, the accumulated `R` diagonals are the singular
/// values.
pub fn product_log_singular_values(mats: &[DMatrix<f64>]) -> Vec<f64> {
    let d = match mats.first() {
        Some(m) => m.ncols(),
        None => return Vec::new(),
    };
    let mut v = DMatrix::<f64>::identity(d, d);
    let mut logs = vec![0.0; d];
    for sweep in 0..12 {
        let mut w = v.clone();
        let mut acc = vec![0.0; d];
        for m in mats {
            let (q, l) = qr_positive(m * &w);
            w = q;
            for (a, b) in acc.iter_mut().zip(l) {
                *a += b;
            }
        }
        let change = acc
            .iter()
            .zip(&logs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        logs = acc;
        if sweep > 1 && change < 1e-12 {
            break;
        }
        let mut u = w;
        for m in mats.iter().rev() {
            let (q, _) = qr_positive(m.transpose() * &u);
            u = q;
        }
        v = u;
    }
    logs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    logs
}

/// Random orthonormal `dim × k` frame with Gaussian entries.
pub fn random_frame(rng: &mut ChaCha8Rng, dim: usize, k: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, k, |_, _| gaussian(rng));
    orthonormalize(m)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; `gen` is in [0, 1) so shift to avoid ln(0).
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Radical inverse in the given prime base (Halton sequence component).
pub fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// `count` low-discrepancy points on the unit sphere `S^{dim-1}`.
///
/// Uses the Halton sequence mapped through the inverse normal CDF
/// approximation via Box-Muller pairs, then normalized.
pub fn sphere_points(dim: usize, count: usize) -> Vec<DVector<f64>> {
    match dim {
        0 => Vec::new(),
        1 => (0..count)
            .map(|i| DVector::from_element(1, if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect(),
        2 => (0..count)
            .map(|i| {
                let th = std::f64::consts::TAU * (i as f64 + 0.5) / count as f64;
                DVector::from_vec(vec![th.cos(), th.sin()])
            })
            .collect(),
        _ => (1..=count)
            .map(|i| {
                let mut v = DVector::zeros(dim);
                let mut j = 0;
                while j < dim {
                    let u1 = halton(i, PRIMES[j % PRIMES.len()]).max(1e-12);
                    let u2 = halton(i, PRIMES[(j + 1) % PRIMES.len()]);
                    let r = (-2.0 * u1.ln()).sqrt();
                    v[j] = r * (std::f64::consts::TAU * u2).cos();
                    if j + 1 < dim {
                        v[j + 1] = r * (std::f64::consts::TAU * u2).sin();
                    }
                    j += 2;
                }
                v.normalize()
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn product_singular_values_match_direct_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mats: Vec<DMatrix<f64>> = (0..6)
            .map(|_| DMatrix::from_fn(3, 3, |_, _| gaussian(&mut rng)))
            .collect();
        let mut prod = DMatrix::<f64>::identity(3, 3);
        for m in &mats {
            prod = m * prod;
        }
        let mut direct: Vec<f64> = prod.singular_values().iter().map(|s| s.ln()).collect();
        direct.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let swept = product_log_singular_values(&mats);
        for (a, b) in direct.iter().zip(&swept) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn product_singular_values_survive_extreme_grading() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 1.0, 10.0]));
        let mats = vec![d; 200];
        let logs = product_log_singular_values(&mats);
        assert!((logs[0] - 200.0 * 10f64.ln()).abs() < 1e-9);
        assert!((logs[2] - 200.0 * 0.1f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn intersection_of_coordinate_planes() {
        let q1 = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let q2 = DMatrix::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let i = intersect(&q1, &q2, 1);
        assert!((i[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_vector_of_row() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let n = null_vector(&m);
        assert!((n[0] + n[1]).abs() < 1e-12);
    }

    #[test]
    fn sphere_points_are_unit() {
        for dim in 1..6 {
            for p in sphere_points(dim, 64) {
                assert!((p.norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
