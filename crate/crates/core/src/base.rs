//! Base dynamics: linear toral automorphisms, the constant-roof suspension
//! of a hyperbolic 2×2 automorphism, and the stable vector field used to
//! shear the product.
//!
//! Tangent vectors are carried in *frame coordinates*. For a toral
//! automorphism the frame is the unit eigenbasis, so the derivative is the
//! diagonal of eigenvalues and the frame metric is the adapted metric. For
//! the suspension the frame is (strong stable, strong unstable, flow), with
//! the fiber components rescaled by `μ_s^s` and `μ_u^s` at height `s`, which
//! makes the time-`t` derivative exactly `diag(μ_s^t, μ_u^t, 1)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduce to the canonical representative in `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Shortest signed displacement from `a` to `b` on the circle `R/Z`.
pub fn circle_delta(a: f64, b: f64) -> f64 {
    let d = b - a;
    d - d.round()
}

/// Point of the torus `T^m`, every coordinate in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        TorusPoint {
            coords: coords.into_iter().map(wrap_unit).collect(),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Max-norm distance on the torus.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| circle_delta(*a, *b).abs())
            .fold(0.0, f64::max)
    }
}

fn int_det(m: &[Vec<i64>]) -> i64 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * m[0][j] * int_det(&minor)
            })
            .sum(),
    }
}

/// Inverse of a unimodular integer matrix via the adjugate.
#[allow(clippy::needless_range_loop)]
fn int_inverse(m: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = m.len();
    let det = int_det(m);
    if n == 1 {
        return vec![vec![det]];
    }
    let mut inv = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<i64>> = m
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != j)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != i)
                        .map(|(_, v)| *v)
                        .collect()
                })
                .collect();
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            // det = ±1, so dividing by det is multiplying by it.
            inv[i][j] = sign * int_det(&minor) * det;
        }
    }
    inv
}

fn int_apply(m: &[Vec<i64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| {
            let s: f64 = row.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
            wrap_unit(s)
        })
        .collect()
}

/// Linear Anosov (or partially hyperbolic) automorphism of `T^m` with real,
/// simple spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearAnosov {
    matrix: Vec<Vec<i64>>,
    inverse: Vec<Vec<i64>>,
    /// Sorted ascending by absolute value.
    eigenvalues: Vec<f64>,
    /// Columns are unit eigenvectors in standard coordinates, same order.
    #[serde(skip)]
    frame: DMatrix<f64>,
    #[serde(skip)]
    frame_inv: DMatrix<f64>,
    stable: Vec<usize>,
    center: Vec<usize>,
    unstable: Vec<usize>,
    /// `+1` for every stable direction: the chosen eigenvector generates E⁺.
    orientation_signs: Vec<f64>,
}

/// Invariant splitting of a linear base, as bases in standard coordinates
/// and index sets into the eigenframe.
#[derive(Debug, Clone)]
pub struct Splitting {
    pub stable: DMatrix<f64>,
    pub center: DMatrix<f64>,
    pub unstable: DMatrix<f64>,
    pub stable_idx: Vec<usize>,
    pub center_idx: Vec<usize>,
    pub unstable_idx: Vec<usize>,
    /// Strong-stable indices (every stable direction except the weakest).
    pub strong_stable_idx: Vec<usize>,
    /// The weakest stable direction.
    pub weak_stable_idx: usize,
}

fn columns(frame: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(frame.nrows(), idx.len());
    for (j, &i) in idx.iter().enumerate() {
        out.set_column(j, &frame.column(i));
    }
    out
}

impl LinearAnosov {
    /// Validate an integer matrix and compute its eigendata. The single
    /// largest eigenvalue forms the unstable group; everything between the
    /// `stable_count` contracting ones and it is center.
    pub fn new(matrix: Vec<Vec<i64>>, stable_count: usize) -> Result<Self> {
        let m = matrix.len();
        if m < 2 || matrix.iter().any(|r| r.len() != m) {
            return Err(Error::ConfigInvalid(
                "matrix must be square, size >= 2".into(),
            ));
        }
        if stable_count < 1 || stable_count >= m {
            return Err(Error::NotHyperbolicPattern(format!(
                "stable_count {stable_count} must lie in 1..{m}"
            )));
        }
        let det = int_det(&matrix);
        if det.abs() != 1 {
            return Err(Error::NotUnimodular(det.abs() as f64));
        }
        let a = DMatrix::from_fn(m, m, |i, j| matrix[i][j] as f64);
        let complex = a.clone().complex_eigenvalues();
        let mut eig: Vec<f64> = Vec::with_capacity(m);
        for c in complex.iter() {
            if c.im.abs() > 1e-9 * c.re.abs().max(1.0) {
                return Err(Error::NotHyperbolicPattern(format!(
                    "non-real eigenvalue {c}"
                )));
            }
            eig.push(c.re);
        }
        eig.sort_by(|x, y| x.abs().partial_cmp(&y.abs()).unwrap());
        for w in eig.windows(2) {
            if (w[1].abs() - w[0].abs()).abs() < 1e-9 {
                return Err(Error::NotHyperbolicPattern(format!(
                    "eigenvalue moduli not distinct: {eig:?}"
                )));
            }
        }
        if eig.iter().any(|l| (l.abs() - 1.0).abs() < 1e-9) {
            return Err(Error::NotHyperbolicPattern(format!(
                "eigenvalue of modulus one: {eig:?}"
            )));
        }
        if eig[..stable_count].iter().any(|l| l.abs() >= 1.0) {
            return Err(Error::NotHyperbolicPattern(format!(
                "only {} contracting eigenvalues, {stable_count} requested: {eig:?}",
                eig.iter().filter(|l| l.abs() < 1.0).count()
            )));
        }
        if eig[m - 1].abs() <= 1.0 {
            return Err(Error::NotHyperbolicPattern(format!(
                "no expanding eigenvalue: {eig:?}"
            )));
        }
        if let Some(l) = eig[..stable_count].iter().find(|l| **l < 0.0) {
            return Err(Error::OrientationReversed(*l));
        }

        let mut frame = DMatrix::zeros(m, m);
        for (j, &l) in eig.iter().enumerate() {
            let mut v = crate::linalg::null_vector(&(&a - DMatrix::identity(m, m) * l));
            // Inverse iteration polish.
            let shifted = &a - DMatrix::identity(m, m) * (l + 1e-13 * l.abs().max(1.0));
            if let Some(inv) = shifted.try_inverse() {
                for _ in 0..2 {
                    let w = &inv * &v;
                    if w.iter().all(|x| x.is_finite()) && w.norm() > 0.0 {
                        v = w.normalize();
                    }
                }
            }
            // Sign convention: largest-magnitude component positive.
            let (imax, _) = v.iter().enumerate().fold((0, 0.0), |acc, (i, x)| {
                if x.abs() > acc.1 {
                    (i, x.abs())
                } else {
                    acc
                }
            });
            if v[imax] < 0.0 {
                v.neg_mut();
            }
            frame.set_column(j, &v);
        }
        let frame_inv = frame
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotHyperbolicPattern("eigenvectors are dependent".into()))?;
        let stable: Vec<usize> = (0..stable_count).collect();
        let center: Vec<usize> = (stable_count..m - 1).collect();
        let unstable = vec![m - 1];
        Ok(LinearAnosov {
            inverse: int_inverse(&matrix),
            matrix,
            eigenvalues: eig,
            frame,
            frame_inv,
            orientation_signs: vec![1.0; stable_count],
            stable,
            center,
            unstable,
        })
    }

    pub fn cat_map() -> Self {
        LinearAnosov::new(vec![vec![2, 1], vec![1, 1]], 1).expect("cat map is hyperbolic")
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unit eigenvectors as columns, standard coordinates.
    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn orientation_signs(&self) -> &[f64] {
        &self.orientation_signs
    }

    pub fn stable_count(&self) -> usize {
        self.stable.len()
    }

    pub fn apply(&self, p: &TorusPoint) -> TorusPoint {
        TorusPoint {
            coords: int_apply(&self.matrix, p.coords()),
        }
    }

    pub fn apply_inverse(&self, p: &TorusPoint) -> TorusPoint {
        TorusPoint {
            coords: int_apply(&self.inverse, p.coords()),
        }
    }

    /// `A^k x`, `k` of either sign.
    pub fn apply_power(&self, x: &[f64], k: i64) -> Vec<f64> {
        let mut out = x.to_vec();
        let m = if k >= 0 { &self.matrix } else { &self.inverse };
        for _ in 0..k.unsigned_abs() {
            out = int_apply(m, &out);
        }
        out
    }

    /// Derivative in the eigenframe.
    pub fn frame_derivative(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone()))
    }

    pub fn to_frame(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.frame_inv * v
    }

    pub fn from_frame(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.frame * v
    }

    pub fn exact_splitting(&self) -> Splitting {
        let ws = *self.stable.last().expect("at least one stable direction");
        Splitting {
            stable: columns(&self.frame, &self.stable),
            center: columns(&self.frame, &self.center),
            unstable: columns(&self.frame, &self.unstable),
            stable_idx: self.stable.clone(),
            center_idx: self.center.clone(),
            unstable_idx: self.unstable.clone(),
            strong_stable_idx: self.stable[..self.stable.len() - 1].to_vec(),
            weak_stable_idx: ws,
        }
    }

    /// Largest residual `||A v − λ v||` over the stored eigenpairs.
    pub fn eigen_residual(&self) -> f64 {
        let m = self.dim();
        let a = DMatrix::from_fn(m, m, |i, j| self.matrix[i][j] as f64);
        (0..m)
            .map(|j| {
                let v = self.frame.column(j).into_owned();
                (&a * &v - &v * self.eigenvalues[j]).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Eigenvalue pattern requested by [`search_companion`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumPattern {
    /// `0 < λ₁ < 1 < λ₂ < λ₃`: one stable, one center, one unstable.
    OneStable,
    /// `0 < λ₁ < λ₂ < 1 < λ₃`: two oriented stable directions.
    TwoStable,
}

/// Bounded search over companion matrices of `x³ + a x² + b x − 1`
/// (determinant one) for a spectrum matching `pattern` with positive
/// stable eigenvalues. Candidates are visited by increasing `|a| + |b|`;
/// among those, the one with the largest minimal log-gap between adjacent
/// eigenvalue moduli wins.
pub fn search_companion(pattern: SpectrumPattern, bound: i64) -> Option<Vec<Vec<i64>>> {
    let stable_count = match pattern {
        SpectrumPattern::OneStable => 1,
        SpectrumPattern::TwoStable => 2,
    };
    let mut best: Option<(i64, f64, Vec<Vec<i64>>)> = None;
    for a in -bound..=bound {
        for b in -bound..=bound {
            let m = vec![vec![0, 0, 1], vec![1, 0, -b], vec![0, 1, -a]];
            let base = match LinearAnosov::new(m.clone(), stable_count) {
                Ok(base) => base,
                Err(_) => continue,
            };
            let e = base.eigenvalues();
            let ok = match pattern {
                SpectrumPattern::OneStable => e[0] > 0.0 && e[1] > 1.0,
                SpectrumPattern::TwoStable => e[0] > 0.0 && e[1] > 0.0 && e[1] < 1.0,
            };
            if !ok {
                continue;
            }
            let gap = e
                .windows(2)
                .map(|w| (w[1].abs() / w[0].abs()).ln())
                .fold(f64::INFINITY, f64::min);
            let cost = a.abs() + b.abs();
            let better = match &best {
                None => true,
                Some((c, g, _)) => cost < *c || (cost == *c && gap > *g),
            };
            if better {
                best = Some((cost, gap, m));
            }
        }
    }
    best.map(|(_, _, m)| m)
}

/// Suspension of a hyperbolic 2×2 automorphism under the constant roof 1.
///
/// Points are `[x₁, x₂, s]` with `(x, 1) ~ (A x, 0)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuspensionFlow {
    fiber: LinearAnosov,
    mu_s: f64,
    mu_u: f64,
}

impl SuspensionFlow {
    pub fn new(fiber: LinearAnosov) -> Result<Self> {
        if fiber.dim() != 2 {
            return Err(Error::ConfigInvalid(
                "suspension fiber map must be 2×2".into(),
            ));
        }
        let e = fiber.eigenvalues().to_vec();
        if e[0] <= 0.0 || e[1] <= 0.0 {
            return Err(Error::OrientationReversed(e[0].min(e[1])));
        }
        Ok(SuspensionFlow {
            mu_s: e[0],
            mu_u: e[1],
            fiber,
        })
    }

    pub fn fiber(&self) -> &LinearAnosov {
        &self.fiber
    }

    pub fn mu_s(&self) -> f64 {
        self.mu_s
    }

    pub fn mu_u(&self) -> f64 {
        self.mu_u
    }

    /// Canonical form: `s ∈ [0, 1)`, fiber coordinates pushed through the
    /// gluing once per roof crossing.
    pub fn canonical(&self, p: &[f64]) -> Vec<f64> {
        let k = p[2].floor();
        let s = p[2] - k;
        let (k, s) = if s >= 1.0 { (k + 1.0, 0.0) } else { (k, s) };
        let x = self
            .fiber
            .apply_power(&[wrap_unit(p[0]), wrap_unit(p[1])], k as i64);
        vec![x[0], x[1], s]
    }

    pub fn flow_time(&self, p: &[f64], t: f64) -> Vec<f64> {
        self.canonical(&[p[0], p[1], p[2] + t])
    }

    /// Time-`t` derivative in the adapted frame.
    pub fn flow_frame_derivative(&self, t: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![
            self.mu_s.powf(t),
            self.mu_u.powf(t),
            1.0,
        ]))
    }

    pub fn flow_tangent(&self, _p: &[f64], t: f64, w: &DVector<f64>) -> DVector<f64> {
        self.flow_frame_derivative(t) * w
    }

    /// Profile `β(s) = μ_s^{-s}` of the stable field along the roof
    /// direction; continuous across the gluing because
    /// `A (β(1) e_s) = μ_s β(1) e_s = β(0) e_s`.
    pub fn beta(&self, s: f64) -> f64 {
        self.mu_s.powf(-s)
    }

    /// Adapted-frame coordinates of a standard tangent vector
    /// `(ξ₁, ξ₂, σ)` based at height `s`.
    pub fn to_frame(&self, s: f64, v: &DVector<f64>) -> DVector<f64> {
        let xi = self.fiber.to_frame(&DVector::from_vec(vec![v[0], v[1]]));
        DVector::from_vec(vec![
            xi[0] * self.mu_s.powf(s),
            xi[1] * self.mu_u.powf(s),
            v[2],
        ])
    }

    pub fn from_frame(&self, s: f64, w: &DVector<f64>) -> DVector<f64> {
        let xi = DVector::from_vec(vec![w[0] * self.mu_s.powf(-s), w[1] * self.mu_u.powf(-s)]);
        let std = self.fiber.from_frame(&xi);
        DVector::from_vec(vec![std[0], std[1], w[2]])
    }

    /// `-ln μ_s`: the adapted-frame shear rate of the stable field's flow.
    pub fn kappa(&self) -> f64 {
        -self.mu_s.ln()
    }
}

/// Base dynamics underlying a skew product.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum BaseSystem {
    Linear(LinearAnosov),
    Suspension(SuspensionFlow),
}

impl BaseSystem {
    /// Number of point coordinates (equal to the tangent dimension).
    pub fn dim(&self) -> usize {
        match self {
            BaseSystem::Linear(a) => a.dim(),
            BaseSystem::Suspension(_) => 3,
        }
    }

    pub fn canonical(&self, p: &[f64]) -> Vec<f64> {
        match self {
            BaseSystem::Linear(_) => p.iter().map(|x| wrap_unit(*x)).collect(),
            BaseSystem::Suspension(s) => s.canonical(p),
        }
    }

    /// Frame indices of (stable, center, unstable). For the suspension the
    /// center is the flow direction.
    pub fn frame_groups(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        match self {
            BaseSystem::Linear(a) => {
                let s = a.exact_splitting();
                (s.stable_idx, s.center_idx, s.unstable_idx)
            }
            BaseSystem::Suspension(_) => (vec![0], vec![2], vec![1]),
        }
    }

    /// Displacement from `a` to `b` in frame coordinates, using the shortest
    /// lift on the torus. Only meaningful for nearby points.
    pub fn frame_displacement(&self, a: &[f64], b: &[f64]) -> DVector<f64> {
        match self {
            BaseSystem::Linear(l) => {
                let d = DVector::from_iterator(
                    a.len(),
                    a.iter().zip(b).map(|(x, y)| circle_delta(*x, *y)),
                );
                l.to_frame(&d)
            }
            BaseSystem::Suspension(s) => {
                let ds = b[2] - a[2];
                let d =
                    DVector::from_vec(vec![circle_delta(a[0], b[0]), circle_delta(a[1], b[1]), ds]);
                s.to_frame(0.5 * (a[2] + b[2]), &d)
            }
        }
    }

    /// Move `p` by a frame-coordinate displacement `w` (first order, exact
    /// for the linear models).
    pub fn advance(&self, p: &[f64], w: &DVector<f64>) -> Vec<f64> {
        match self {
            BaseSystem::Linear(l) => {
                let d = l.from_frame(w);
                p.iter()
                    .zip(d.iter())
                    .map(|(x, y)| wrap_unit(x + y))
                    .collect()
            }
            BaseSystem::Suspension(s) => {
                let d = s.from_frame(p[2], w);
                s.canonical(&[p[0] + d[0], p[1] + d[1], p[2] + d[2]])
            }
        }
    }

    /// Max-norm distance, accounting for the torus (and the roof gluing of
    /// the suspension only when both heights agree in canonical form).
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            BaseSystem::Linear(_) => a
                .iter()
                .zip(b)
                .map(|(x, y)| circle_delta(*x, *y).abs())
                .fold(0.0, f64::max),
            BaseSystem::Suspension(s) => {
                let direct = (0..2)
                    .map(|i| circle_delta(a[i], b[i]).abs())
                    .fold((a[2] - b[2]).abs(), f64::max);
                // Compare across the roof by pushing the higher point over.
                let (lo, hi) = if a[2] < b[2] { (a, b) } else { (b, a) };
                let over = s.fiber.apply_power(&[hi[0], hi[1]], 1);
                let across = (0..2)
                    .map(|i| circle_delta(over[i], lo[i]).abs())
                    .fold((hi[2] - 1.0 - lo[2]).abs(), f64::max);
                direct.min(across)
            }
        }
    }
}

/// The smooth field `X` generating the shear flow `σ_t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StableField {
    pub epsilon: f64,
    /// Unscaled direction in frame coordinates.
    pub direction: Vec<f64>,
}

impl StableField {
    /// `X = ε · (sum of the unit stable eigenvectors in `indices`)`.
    pub fn along(base: &BaseSystem, indices: &[usize], epsilon: f64) -> Self {
        let mut direction = vec![0.0; base.dim()];
        for &i in indices {
            direction[i] = 1.0;
        }
        StableField { epsilon, direction }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        StableField {
            epsilon,
            direction: self.direction.clone(),
        }
    }

    /// `X` in frame coordinates (constant for every supported base).
    pub fn frame_vector(&self) -> DVector<f64> {
        DVector::from_vec(self.direction.clone()) * self.epsilon
    }

    /// Flow `σ_t` of the field.
    pub fn sigma_flow(&self, base: &BaseSystem, p: &[f64], t: f64) -> Vec<f64> {
        match base {
            BaseSystem::Linear(l) => {
                let step = l.from_frame(&self.frame_vector()) * t;
                p.iter()
                    .zip(step.iter())
                    .map(|(x, d)| wrap_unit(x + d))
                    .collect()
            }
            BaseSystem::Suspension(s) => {
                // Only the strong-stable component is used on the suspension.
                let dir = DVector::from_vec(vec![self.direction[0], 0.0]);
                let std = s.fiber.from_frame(&dir) * (t * self.epsilon * s.beta(p[2]));
                vec![wrap_unit(p[0] + std[0]), wrap_unit(p[1] + std[1]), p[2]]
            }
        }
    }

    /// `Dσ_t` in frame coordinates.
    pub fn sigma_frame_derivative(&self, base: &BaseSystem, t: f64) -> DMatrix<f64> {
        let d = base.dim();
        let mut m = DMatrix::identity(d, d);
        if let BaseSystem::Suspension(s) = base {
            // x' = x + t ε μ_s^{-s} e_s: the s-derivative feeds the flow
            // component into the stable one at the constant rate t ε κ.
            m[(0, 2)] += t * self.epsilon * s.kappa() * self.direction[0];
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_map_eigenvalues() {
        let cat = LinearAnosov::cat_map();
        let e = cat.eigenvalues();
        assert!((e[0] - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((e[1] - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(cat.eigen_residual() < 1e-10);
    }

    #[test]
    fn identity_is_rejected() {
        let r = LinearAnosov::new(vec![vec![1, 0], vec![0, 1]], 1);
        assert!(matches!(r, Err(Error::NotHyperbolicPattern(_))));
    }

    #[test]
    fn non_unimodular_is_rejected() {
        let r = LinearAnosov::new(vec![vec![2, 1], vec![1, 2]], 1);
        assert!(matches!(r, Err(Error::NotUnimodular(_))));
    }

    #[test]
    fn negative_stable_eigenvalue_is_rejected() {
        // Minus the cat map: eigenvalues ≈ −0.382 and −2.618.
        let r = LinearAnosov::new(vec![vec![-2, -1], vec![-1, -1]], 1);
        assert!(matches!(r, Err(Error::OrientationReversed(_))));
    }

    #[test]
    fn cat_map_modular_action() {
        let cat = LinearAnosov::cat_map();
        let p = cat.apply(&TorusPoint::new(vec![0.0, 0.0]));
        assert_eq!(p.coords(), &[0.0, 0.0]);
        let q = cat.apply(&TorusPoint::new(vec![0.5, 0.5]));
        assert!(q.distance(&TorusPoint::new(vec![0.5, 0.0])) < 1e-15);
    }

    #[test]
    fn companion_search_finds_both_patterns() {
        let one = search_companion(SpectrumPattern::OneStable, 6).unwrap();
        let b = LinearAnosov::new(one, 1).unwrap();
        let e = b.eigenvalues();
        assert!(e[0] > 0.0 && e[0] < 1.0 && e[1] > 1.0 && e[2] > e[1]);
        let two = search_companion(SpectrumPattern::TwoStable, 8).unwrap();
        let b = LinearAnosov::new(two, 2).unwrap();
        let e = b.eigenvalues();
        assert!(e[0] > 0.0 && e[1] < 1.0 && e[2] > 1.0);
    }

    #[test]
    fn suspension_roof_compatibility() {
        let s = SuspensionFlow::new(LinearAnosov::cat_map()).unwrap();
        assert!((s.beta(0.0) - s.mu_s() * s.beta(1.0)).abs() < 1e-15);
    }

    #[test]
    fn suspension_wraps_through_fiber_map() {
        let s = SuspensionFlow::new(LinearAnosov::cat_map()).unwrap();
        let p = s.flow_time(&[0.5, 0.5, 0.0], 1.0);
        assert!((p[0] - 0.5).abs() < 1e-15 && p[1].abs() < 1e-15 && p[2] == 0.0);
        let back = s.flow_time(&p, -1.0);
        assert!((back[0] - 0.5).abs() < 1e-12 && (back[1] - 0.5).abs() < 1e-12);
    }
}
