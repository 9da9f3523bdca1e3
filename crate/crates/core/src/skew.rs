//! The skew product `f(x, z) = (g_{τ(z)}(x), h(z))` on `M × S¹`, its
//! symmetric extension, circle gluing, and the multi-switch tower on
//! `M × T^d`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::base::{BaseSystem, StableField};
use crate::error::{Error, Result};
use crate::profile::ShearProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Diffeo,
    Flow,
}

/// Point of `M × T^d`: base coordinates plus one circle coordinate per
/// stage, each in its canonical fundamental domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewPoint {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl SkewPoint {
    pub fn new(x: Vec<f64>, z: Vec<f64>) -> Self {
        SkewPoint { x, z }
    }
}

/// Tangent vector split into horizontal (base frame) and vertical parts.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl TangentVector {
    pub fn new(u: DVector<f64>, v: DVector<f64>) -> Self {
        TangentVector { u, v }
    }

    pub fn from_stacked(w: &DVector<f64>, base_dim: usize) -> Self {
        TangentVector {
            u: w.rows(0, base_dim).into_owned(),
            v: w.rows(base_dim, w.len() - base_dim).into_owned(),
        }
    }

    pub fn stacked(&self) -> DVector<f64> {
        let mut w = DVector::zeros(self.u.len() + self.v.len());
        w.rows_mut(0, self.u.len()).copy_from(&self.u);
        w.rows_mut(self.u.len(), self.v.len()).copy_from(&self.v);
        w
    }

    pub fn norm(&self) -> f64 {
        (self.u.norm_squared() + self.v.norm_squared()).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        TangentVector {
            u: &self.u / n,
            v: &self.v / n,
        }
    }
}

/// One switching stage: its profile and the frame index of the base
/// stable direction it trades with the new circle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage {
    pub profile: ShearProfile,
    pub weak_stable_index: usize,
}

/// Orbit of a point together with a renormalized tangent vector.
#[derive(Debug, Clone)]
pub struct CocycleTrace {
    pub points: Vec<SkewPoint>,
    /// `τ(z_n)` of the first stage.
    pub shear_times: Vec<f64>,
    /// Unit vectors `w^n`.
    pub directions: Vec<DVector<f64>>,
    /// `ln(‖(u_{n+1}, v_{n+1})‖ / ‖(u_n, v_n)‖)`.
    pub log_increments: Vec<f64>,
    /// Raw vectors, present only when requested.
    pub raw: Option<Vec<DVector<f64>>>,
}

/// The constructed diffeomorphism: one stage gives `M × S¹`, `d` stages
/// give `M × T^d` with a shared shear field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwitchTower {
    base: BaseSystem,
    stages: Vec<Stage>,
    field: StableField,
    mode: Mode,
    doubling: bool,
}

struct Fold {
    sign: f64,
    r: f64,
    shift: f64,
}

impl SwitchTower {
    /// Assemble a tower of `profiles.len()` stages. Stage `k` (1-based)
    /// switches the `k`-th weakest stable direction of the base.
    pub fn build(
        base: BaseSystem,
        profiles: Vec<ShearProfile>,
        mode: Mode,
        doubling: bool,
        epsilon: f64,
    ) -> Result<Self> {
        let d = profiles.len();
        if d == 0 {
            return Err(Error::ConfigInvalid(
                "tower needs at least one stage".into(),
            ));
        }
        let (stable, _center, unstable) = base.frame_groups();
        let stable_rates: Vec<f64>;
        let unstable_rate: f64;
        match (&base, mode) {
            (BaseSystem::Linear(l), Mode::Diffeo) => {
                if d > l.stable_count() {
                    return Err(Error::SplittingUnavailable(format!(
                        "{d} stages requested but the base has {} stable directions",
                        l.stable_count()
                    )));
                }
                if let Some(s) = l.orientation_signs().iter().find(|s| **s < 0.0) {
                    return Err(Error::OrientationReversed(*s));
                }
                let e = l.eigenvalues();
                stable_rates = stable.iter().map(|&i| e[i].abs()).collect();
                unstable_rate = unstable
                    .iter()
                    .map(|&i| e[i].abs())
                    .fold(f64::INFINITY, f64::min);
            }
            (BaseSystem::Suspension(s), Mode::Flow) => {
                if d != 1 {
                    return Err(Error::SplittingUnavailable(
                        "the flow construction has a single stage".into(),
                    ));
                }
                let p = &profiles[0];
                if !p.flow_time_ok(s.mu_s()) {
                    return Err(Error::ConstantsOutOfOrder(format!(
                        "η^N < λ violated: μ_s^N = {} is not below λ = {}",
                        s.mu_s().powi(p.n as i32),
                        p.lambda
                    )));
                }
                stable_rates = vec![s.mu_s()];
                unstable_rate = s.mu_u();
            }
            (_, Mode::Flow) => {
                return Err(Error::ConfigInvalid(
                    "flow mode needs a suspension base".into(),
                ))
            }
            (_, Mode::Diffeo) => {
                return Err(Error::ConfigInvalid(
                    "diffeo mode needs a linear base".into(),
                ))
            }
        }

        let min_stable = stable_rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_stable = stable_rates.iter().cloned().fold(0.0, f64::max);
        let mut prev_lambda = f64::INFINITY;
        for (k, p) in profiles.iter().enumerate() {
            let stage_floor = if mode == Mode::Flow {
                1.0
            } else {
                min_stable.min(prev_lambda)
            };
            let lam_cap = if mode == Mode::Flow {
                stable_rates[0]
            } else {
                stage_floor
            };
            if p.lambda >= lam_cap {
                return Err(Error::ConstantsOutOfOrder(format!(
                    "stage {}: λ = {} must lie below every stable multiplier ({lam_cap})",
                    k + 1,
                    p.lambda
                )));
            }
            if p.eta <= max_stable {
                return Err(Error::ConstantsOutOfOrder(format!(
                    "stage {}: η = {} must exceed every stable multiplier ({max_stable})",
                    k + 1,
                    p.eta
                )));
            }
            if p.mu >= unstable_rate {
                return Err(Error::ConstantsOutOfOrder(format!(
                    "stage {}: μ = {} must lie below the unstable multiplier ({unstable_rate})",
                    k + 1,
                    p.mu
                )));
            }
            prev_lambda = p.lambda;
        }

        // Stage k trades the k-th weakest stable direction.
        let stages: Vec<Stage> = profiles
            .into_iter()
            .enumerate()
            .map(|(k, profile)| Stage {
                profile,
                weak_stable_index: stable[stable.len() - 1 - k],
            })
            .collect();
        let used: Vec<usize> = stages.iter().map(|s| s.weak_stable_index).collect();
        let field = match mode {
            Mode::Diffeo => StableField::along(&base, &used, epsilon),
            Mode::Flow => StableField::along(&base, &[0], epsilon),
        };
        Ok(SwitchTower {
            base,
            stages,
            field,
            mode,
            doubling,
        })
    }

    pub fn base(&self) -> &BaseSystem {
        &self.base
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn profile(&self) -> &ShearProfile {
        &self.stages[0].profile
    }

    pub fn field(&self) -> &StableField {
        &self.field
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn doubling(&self) -> bool {
        self.doubling
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    /// `(dim E^s, dim E^c, dim E^u)` of `f`: stable and unstable keep the
    /// base dimensions, the center gains one direction per stage.
    pub fn bundle_dims(&self) -> (usize, usize, usize) {
        let (s, _, u) = self.base.frame_groups();
        (s.len(), self.dim() - s.len() - u.len(), u.len())
    }

    /// The first `k` stages as a tower of their own.
    pub fn truncated(&self, k: usize) -> SwitchTower {
        let mut t = self.clone();
        t.stages.truncate(k.max(1));
        t
    }

    /// Total tangent dimension.
    pub fn dim(&self) -> usize {
        self.base.dim() + self.stages.len()
    }

    /// Same tower with a different field scale.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut t = self.clone();
        t.field = self.field.with_epsilon(epsilon);
        t
    }

    fn period(&self) -> f64 {
        if self.doubling {
            4.0
        } else {
            2.0
        }
    }

    pub fn canonical_z(&self, z: f64) -> f64 {
        let p = self.period();
        if (-1.0..p - 1.0).contains(&z) {
            return z;
        }
        let w = (z + 1.0).rem_euclid(p);
        let w = if w >= p { 0.0 } else { w };
        w - 1.0
    }

    pub fn canonical(&self, p: &SkewPoint) -> SkewPoint {
        SkewPoint {
            x: self.base.canonical(&p.x),
            z: p.z.iter().map(|z| self.canonical_z(*z)).collect(),
        }
    }

    fn fold(&self, z: f64) -> Fold {
        let (w, shift) = if self.doubling && z >= 1.0 {
            (z - 2.0, 2.0)
        } else {
            (z, 0.0)
        };
        Fold {
            sign: if w < 0.0 { -1.0 } else { 1.0 },
            r: w.abs().min(1.0),
            shift,
        }
    }

    /// Signed circle distance between two canonical coordinates.
    pub fn z_delta(&self, a: f64, b: f64) -> f64 {
        let p = self.period();
        let d = b - a;
        d - p * (d / p).round()
    }

    /// Total shear time `Σ_k τ_k(|z_k|)` applied by the field.
    fn shear_time(&self, z: &[f64]) -> f64 {
        self.stages
            .iter()
            .zip(z)
            .map(|(s, &zk)| s.profile.tau(self.fold(zk).r))
            .sum()
    }

    pub fn apply(&self, p: &SkewPoint) -> SkewPoint {
        let z_new: Vec<f64> = self
            .stages
            .iter()
            .zip(&p.z)
            .map(|(s, &zk)| {
                let f = self.fold(zk);
                self.canonical_z(f.shift + f.sign * s.profile.h(f.r))
            })
            .collect();
        let x_new = match (&self.base, self.mode) {
            (BaseSystem::Linear(l), _) => {
                let gx = l.apply_power(&p.x, 1);
                self.field
                    .sigma_flow(&self.base, &gx, self.shear_time(&p.z))
            }
            (BaseSystem::Suspension(s), _) => {
                let prof = self.profile();
                let r = self.fold(p.z[0]).r;
                if r >= prof.h2_a {
                    let gx = s.flow_time(&p.x, prof.n as f64);
                    self.field.sigma_flow(&self.base, &gx, prof.tau(r))
                } else {
                    s.flow_time(&p.x, prof.rho(r))
                }
            }
        };
        SkewPoint { x: x_new, z: z_new }
    }

    pub fn inverse(&self, p: &SkewPoint) -> SkewPoint {
        let z_old: Vec<f64> = self
            .stages
            .iter()
            .zip(&p.z)
            .map(|(s, &zk)| {
                let f = self.fold(zk);
                self.canonical_z(f.shift + f.sign * s.profile.h_inverse(f.r))
            })
            .collect();
        let x_old = match &self.base {
            BaseSystem::Linear(l) => {
                let y = self
                    .field
                    .sigma_flow(&self.base, &p.x, -self.shear_time(&z_old));
                l.apply_power(&y, -1)
            }
            BaseSystem::Suspension(s) => {
                let prof = self.profile();
                let r = self.fold(z_old[0]).r;
                if r >= prof.h2_a {
                    let y = self.field.sigma_flow(&self.base, &p.x, -prof.tau(r));
                    s.flow_time(&y, -(prof.n as f64))
                } else {
                    s.flow_time(&p.x, -prof.rho(r))
                }
            }
        };
        SkewPoint { x: x_old, z: z_old }
    }

    /// `Df(p)` in frame coordinates (base frame first, then one vertical
    /// coordinate per stage).
    pub fn df_matrix(&self, p: &SkewPoint) -> DMatrix<f64> {
        let m = self.base.dim();
        let dim = self.dim();
        let mut out = DMatrix::zeros(dim, dim);
        match &self.base {
            BaseSystem::Linear(l) => {
                out.view_mut((0, 0), (m, m))
                    .copy_from(&l.frame_derivative());
                let x = self.field.frame_vector();
                for (k, (s, &zk)) in self.stages.iter().zip(&p.z).enumerate() {
                    let f = self.fold(zk);
                    let shear = f.sign * s.profile.tau_prime(f.r);
                    for i in 0..m {
                        out[(i, m + k)] = shear * x[i];
                    }
                    out[(m + k, m + k)] = s.profile.h_prime(f.r);
                }
            }
            BaseSystem::Suspension(s) => {
                let prof = self.profile();
                let f = self.fold(p.z[0]);
                if f.r >= prof.h2_a {
                    let t = prof.tau(f.r);
                    let block = self.field.sigma_frame_derivative(&self.base, t)
                        * s.flow_frame_derivative(prof.n as f64);
                    out.view_mut((0, 0), (m, m)).copy_from(&block);
                    let x = self.field.frame_vector();
                    let shear = f.sign * prof.tau_prime(f.r);
                    for i in 0..m {
                        out[(i, m)] = shear * x[i];
                    }
                } else {
                    out.view_mut((0, 0), (m, m))
                        .copy_from(&s.flow_frame_derivative(prof.rho(f.r)));
                    // Shear along the flow direction.
                    out[(2, m)] = f.sign * prof.rho_prime(f.r);
                }
                out[(m, m)] = prof.h_prime(f.r);
            }
        }
        out
    }

    pub fn df_apply(&self, p: &SkewPoint, w: &TangentVector) -> TangentVector {
        let img = self.df_matrix(p) * w.stacked();
        TangentVector::from_stacked(&img, self.base.dim())
    }

    /// `Df⁻¹` at `p`, i.e. the inverse of `Df(f⁻¹(p))`.
    pub fn df_inverse_matrix(&self, p: &SkewPoint) -> DMatrix<f64> {
        let q = self.inverse(p);
        self.df_matrix(&q)
            .try_inverse()
            .expect("Df is invertible: h' > 0 and the base derivative is invertible")
    }

    /// `D(f⁻¹)(q)` assembled from the inverse formula
    /// `x = A⁻¹(x' − Σ τ_k X)`, `z_k = h⁻¹(z'_k)` rather than by inverting
    /// `Df`. Linear bases only.
    pub fn df_inverse_analytic(&self, q: &SkewPoint) -> Option<DMatrix<f64>> {
        let l = match &self.base {
            BaseSystem::Linear(l) => l,
            BaseSystem::Suspension(_) => return None,
        };
        let m = self.base.dim();
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        let g_inv = l.frame_derivative().try_inverse()?;
        out.view_mut((0, 0), (m, m)).copy_from(&g_inv);
        let gx = &g_inv * self.field.frame_vector();
        let prev = self.inverse(q);
        for (k, (s, &zk)) in self.stages.iter().zip(&prev.z).enumerate() {
            let f = self.fold(zk);
            let dz = 1.0 / s.profile.h_prime(f.r);
            let shear = f.sign * s.profile.tau_prime(f.r) * dz;
            for i in 0..m {
                out[(i, m + k)] = -shear * gx[i];
            }
            out[(m + k, m + k)] = dz;
        }
        Some(out)
    }

    /// Forward orbit of length `n + 1` starting at `p`.
    pub fn orbit(&self, p: &SkewPoint, n: usize) -> Vec<SkewPoint> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(p.clone());
        for i in 0..n {
            let next = self.apply(&out[i]);
            out.push(next);
        }
        out
    }

    /// Backward orbit `p, f⁻¹(p), …, f⁻ⁿ(p)`.
    pub fn backward_orbit(&self, p: &SkewPoint, n: usize) -> Vec<SkewPoint> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(p.clone());
        for i in 0..n {
            let prev = self.inverse(&out[i]);
            out.push(prev);
        }
        out
    }

    /// Iterate the tangent cocycle `n` steps from `(p, w)`, renormalizing
    /// each step. With `keep_raw`, raw vectors are also recorded and an
    /// overflow is reported as an error.
    pub fn iterate_cocycle(
        &self,
        p: &SkewPoint,
        w: &DVector<f64>,
        n: usize,
        keep_raw: bool,
    ) -> Result<CocycleTrace> {
        let mut points = vec![p.clone()];
        let mut shear_times = vec![self.profile().tau(self.fold(p.z[0]).r)];
        let mut directions = vec![w.normalize()];
        let mut logs = Vec::with_capacity(n);
        let mut raw = keep_raw.then(|| vec![w.clone()]);
        for i in 0..n {
            let pi = &points[i];
            let img = self.df_matrix(pi) * &directions[i];
            let nrm = img.norm();
            logs.push(nrm.ln());
            if let Some(r) = raw.as_mut() {
                let next = self.df_matrix(pi) * r.last().unwrap();
                if !next.iter().all(|x| x.is_finite()) {
                    return Err(Error::Overflow(i + 1));
                }
                r.push(next);
            }
            directions.push(img / nrm);
            let next = self.apply(pi);
            shear_times.push(self.profile().tau(self.fold(next.z[0]).r));
            points.push(next);
        }
        Ok(CocycleTrace {
            points,
            shear_times,
            directions,
            log_increments: logs,
            raw,
        })
    }

    /// Largest C¹ mismatch of `f` across the circle seam `z = ±1`. Going
    /// through the seam the vertical map must continue as `1 + μ(z − 1)` and
    /// the shear must be flat.
    pub fn seam_defect(&self) -> f64 {
        self.stages
            .iter()
            .map(|s| {
                let p = &s.profile;
                let delta = 1e-7;
                let value = (p.h(1.0 - delta) - (1.0 - p.mu * delta)).abs();
                let slope = (p.h_prime(1.0 - delta) - p.mu)
                    .abs()
                    .max((p.h_prime(1.0) - p.mu).abs());
                let shear = p.tau_prime(1.0).abs().max((p.tau(1.0) - 1.0).abs());
                value.max(slope).max(shear)
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::LinearAnosov;

    fn cat_tower() -> SwitchTower {
        let p = ShearProfile::build(0.2, 0.4, 2.5, 0.9, 1, 1000).unwrap();
        SwitchTower::build(
            BaseSystem::Linear(LinearAnosov::cat_map()),
            vec![p],
            Mode::Diffeo,
            false,
            0.05,
        )
        .unwrap()
    }

    #[test]
    fn invariant_fibers() {
        let t = cat_tower();
        let p0 = t.apply(&SkewPoint::new(vec![0.3, 0.7], vec![0.0]));
        assert_eq!(p0.z[0], 0.0);
        let p1 = t.apply(&SkewPoint::new(vec![0.3, 0.7], vec![-1.0]));
        assert_eq!(p1.z[0], -1.0);
    }

    #[test]
    fn fiber_zero_is_the_base_map() {
        let t = cat_tower();
        let p = t.apply(&SkewPoint::new(vec![0.5, 0.5], vec![0.0]));
        assert!((p.x[0] - 0.5).abs() < 1e-15 && p.x[1].abs() < 1e-15);
    }

    #[test]
    fn plateau_is_a_product() {
        let t = cat_tower();
        let z = 0.5 * t.profile().h2_a;
        let p = t.apply(&SkewPoint::new(vec![0.1, 0.2], vec![z]));
        assert!((p.x[0] - 0.4).abs() < 1e-15 && (p.x[1] - 0.3).abs() < 1e-15);
        assert_eq!(p.z[0], t.profile().h(z));
    }

    #[test]
    fn vertical_vector_below_c() {
        let t = cat_tower();
        let z = 0.5 * t.profile().c;
        let w = t.df_apply(
            &SkewPoint::new(vec![0.1, 0.2], vec![z]),
            &TangentVector::new(DVector::zeros(2), DVector::from_element(1, 1.0)),
        );
        assert_eq!(w.u.norm(), 0.0);
        assert_eq!(w.v[0], 0.2);
    }

    #[test]
    fn symmetry_mirrors_images() {
        let t = cat_tower();
        for z in [0.1, 0.5, 0.8, 0.95] {
            let a = t.apply(&SkewPoint::new(vec![0.31, 0.77], vec![z]));
            let b = t.apply(&SkewPoint::new(vec![0.31, 0.77], vec![-z]));
            assert_eq!(a.x, b.x);
            assert_eq!(a.z[0], -b.z[0]);
        }
    }

    #[test]
    fn too_many_stages_is_rejected() {
        let p = ShearProfile::build(0.2, 0.4, 2.5, 0.9, 1, 100).unwrap();
        let r = SwitchTower::build(
            BaseSystem::Linear(LinearAnosov::cat_map()),
            vec![p.clone(), p],
            Mode::Diffeo,
            false,
            0.05,
        );
        assert!(matches!(r, Err(Error::SplittingUnavailable(_))));
    }

    #[test]
    fn zero_step_trace() {
        let t = cat_tower();
        let p = SkewPoint::new(vec![0.1, 0.2], vec![0.4]);
        let w = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let tr = t.iterate_cocycle(&p, &w, 0, false).unwrap();
        assert_eq!(tr.points, vec![p]);
        assert_eq!(tr.directions[0], w);
    }

    #[test]
    fn circle_orbit_decreases() {
        let t = cat_tower();
        let tr = t
            .iterate_cocycle(
                &SkewPoint::new(vec![0.1, 0.2], vec![0.97]),
                &DVector::from_vec(vec![0.0, 0.0, 1.0]),
                40,
                false,
            )
            .unwrap();
        for w in tr.points.windows(2) {
            assert!(w[1].z[0] < w[0].z[0]);
        }
        assert!(tr.points.last().unwrap().z[0] < 1e-20);
    }

    #[test]
    fn raw_overflow_is_reported() {
        let t = cat_tower();
        let r = t.iterate_cocycle(
            &SkewPoint::new(vec![0.1, 0.2], vec![0.0]),
            &DVector::from_vec(vec![0.0, 1.0, 0.0]),
            2000,
            true,
        );
        assert!(matches!(r, Err(Error::Overflow(_))));
    }

    #[test]
    fn doubling_domain() {
        let p = ShearProfile::build(0.2, 0.4, 2.5, 0.9, 1, 100).unwrap();
        let t = SwitchTower::build(
            BaseSystem::Linear(LinearAnosov::cat_map()),
            vec![p],
            Mode::Diffeo,
            true,
            0.05,
        )
        .unwrap();
        assert_eq!(t.canonical_z(3.0), -1.0);
        assert_eq!(t.canonical_z(2.5), 2.5);
        let a = t.apply(&SkewPoint::new(vec![0.2, 0.3], vec![0.4]));
        let b = t.apply(&SkewPoint::new(vec![0.2, 0.3], vec![2.4]));
        assert_eq!(a.x, b.x);
        assert!((b.z[0] - a.z[0] - 2.0).abs() < 1e-15);
        // z = 2 is a second invariant fiber.
        assert_eq!(
            t.apply(&SkewPoint::new(vec![0.2, 0.3], vec![2.0])).z[0],
            2.0
        );
    }
}
