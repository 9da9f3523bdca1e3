//! Cone families in the base eigenframe: the chain `𝒜, ℬ = Dg²𝒜,
//! 𝒞 = Dg(ℬ*)`, the unstable cone `𝒰`, and the X-adapted pair `𝒜, ℰ` used
//! when the stable bundle has a strong part. Inclusions are certified by
//! sampling unit vectors and reporting the worst normalized form value.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::base::{BaseSystem, StableField};
use crate::error::{Error, Result};
use crate::linalg::sphere_points;
use crate::skew::SwitchTower;

/// Constant-coefficient linear model of the base in its eigenframe:
/// `Dg_t = (I + t ε K) Dg`.
#[derive(Debug, Clone)]
pub struct FrameModel {
    pub g: DMatrix<f64>,
    /// Generator of `Dσ_t` per unit `t ε` (nilpotent, zero on tori).
    pub shear: DMatrix<f64>,
    pub strong_stable: Vec<usize>,
    pub weak_stable: usize,
    pub center: Vec<usize>,
    pub unstable: Vec<usize>,
    pub epsilon: f64,
    /// `X` in frame coordinates, unscaled.
    pub field: DVector<f64>,
}

impl FrameModel {
    /// Model for the base of `tower`'s first stage. On the suspension `g`
    /// is the time-`N` map.
    pub fn of_tower(tower: &SwitchTower) -> Self {
        let ws = tower.stages()[0].weak_stable_index;
        let n = tower.profile().n as f64;
        Self::of_base(tower.base(), tower.field(), ws, n)
    }

    pub fn of_base(base: &BaseSystem, field: &StableField, weak_stable: usize, n: f64) -> Self {
        let (stable, center, unstable) = base.frame_groups();
        let m = base.dim();
        let (g, shear) = match base {
            BaseSystem::Linear(l) => (l.frame_derivative(), DMatrix::zeros(m, m)),
            BaseSystem::Suspension(s) => {
                let mut k = DMatrix::zeros(m, m);
                k[(0, 2)] = s.kappa() * field.direction[0];
                (s.flow_frame_derivative(n), k)
            }
        };
        FrameModel {
            g,
            shear,
            strong_stable: stable.into_iter().filter(|&i| i != weak_stable).collect(),
            weak_stable,
            center,
            unstable,
            epsilon: field.epsilon,
            field: DVector::from_vec(field.direction.clone()),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        FrameModel {
            epsilon,
            ..self.clone()
        }
    }

    pub fn dg_t(&self, t: f64) -> DMatrix<f64> {
        let d = self.dim();
        (DMatrix::identity(d, d) + &self.shear * (t * self.epsilon)) * &self.g
    }

    pub fn dg_t_inverse(&self, t: f64) -> DMatrix<f64> {
        self.dg_t(t).try_inverse().expect("Dg_t is invertible")
    }

    pub fn dg_power(&self, n: i32) -> DMatrix<f64> {
        let base = if n >= 0 {
            self.g.clone()
        } else {
            self.g.clone().try_inverse().expect("Dg is invertible")
        };
        let d = self.dim();
        (0..n.unsigned_abs()).fold(DMatrix::identity(d, d), |acc, _| &base * acc)
    }

    pub fn stable(&self) -> Vec<usize> {
        let mut s = self.strong_stable.clone();
        s.push(self.weak_stable);
        s.sort_unstable();
        s
    }

    pub fn center_unstable(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.center.iter().chain(&self.unstable).cloned().collect();
        s.sort_unstable();
        s
    }

    pub fn center_stable(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .stable()
            .into_iter()
            .chain(self.center.clone())
            .collect();
        s.sort_unstable();
        s
    }

    fn coordinate(&self, i: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim());
        e[i] = 1.0;
        e
    }
}

/// `{v : Q(v) ≥ 0}` with an optional sign functional for the half-cone.
#[derive(Debug, Clone)]
pub struct ConeField {
    pub name: String,
    /// Symmetric form, scaled to unit spectral norm.
    pub form: DMatrix<f64>,
    /// `|Q|`: same eigenvectors, absolute eigenvalues.
    abs_form: DMatrix<f64>,
    pub sign: Option<DVector<f64>>,
}

impl ConeField {
    pub fn new(name: &str, form: DMatrix<f64>, sign: Option<DVector<f64>>) -> Self {
        let sym = (&form + form.transpose()) * 0.5;
        let scale = sym
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()));
        let form = sym / scale;
        let eig = SymmetricEigen::new(form.clone());
        let abs = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::abs));
        let abs_form = &eig.eigenvectors * abs * eig.eigenvectors.transpose();
        ConeField {
            name: name.to_string(),
            form,
            abs_form,
            sign,
        }
    }

    /// Diagonal form `Σ w_i v_i²`.
    pub fn diagonal(name: &str, weights: &[f64], sign: Option<DVector<f64>>) -> Self {
        Self::new(
            name,
            DMatrix::from_diagonal(&DVector::from_column_slice(weights)),
            sign,
        )
    }

    pub fn value(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.form * v))
    }

    /// `Q(v) / |Q|(v)` in `[-1, 1]`: zero on the boundary, one on the
    /// positive axes, independent of how thin the cone is.
    pub fn relative_value(&self, v: &DVector<f64>) -> f64 {
        let d = v.dot(&(&self.abs_form * v));
        if d <= 0.0 {
            0.0
        } else {
            self.value(v) / d
        }
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        self.value(v) >= 0.0
    }

    /// Membership in the positive half-cone.
    pub fn contains_positive(&self, v: &DVector<f64>) -> bool {
        let s = self.sign.as_ref().map_or(1.0, |l| l.dot(v));
        self.contains(v) && s > 0.0
    }

    /// `M(K) = {w : Q(M⁻¹ w) ≥ 0}`.
    pub fn image(&self, m: &DMatrix<f64>, name: &str) -> ConeField {
        let inv = m.clone().try_inverse().expect("cone map is invertible");
        let form = inv.transpose() * &self.form * &inv;
        let sign = self.sign.as_ref().map(|l| inv.transpose() * l);
        ConeField::new(name, form, sign)
    }

    /// Closure of the complement.
    pub fn dual(&self, name: &str) -> ConeField {
        ConeField::new(name, -&self.form, None)
    }

    /// Numbers of positive and negative eigenvalues of the form.
    pub fn signature(&self) -> (usize, usize) {
        let e = self.form.clone().symmetric_eigenvalues();
        (
            e.iter().filter(|x| **x > 1e-12).count(),
            e.iter().filter(|x| **x < -1e-12).count(),
        )
    }

    /// Unit vectors of the cone: `boundary` directions with `Q = 0` and the
    /// same number at each of `interior_levels` depths inside.
    pub fn samples(&self, boundary: usize, interior_levels: usize) -> Vec<DVector<f64>> {
        let eig = SymmetricEigen::new(self.form.clone());
        let d = self.form.nrows();
        let pos: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] > 1e-14).collect();
        let neg: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] <= 1e-14).collect();
        let ps = sphere_points(pos.len(), boundary);
        let ns = sphere_points(neg.len(), boundary);
        let mut out = Vec::with_capacity(boundary * (interior_levels + 1));
        for i in 0..boundary {
            let mut yp = DVector::zeros(d);
            for (k, &idx) in pos.iter().enumerate() {
                yp += eig.eigenvectors.column(idx) * (ps[i][k] / eig.eigenvalues[idx].sqrt());
            }
            let mut yn = DVector::zeros(d);
            if !neg.is_empty() {
                // Offset the index so the two factors are not locked together.
                let nv = &ns[(i * 7 + 3) % boundary];
                for (k, &idx) in neg.iter().enumerate() {
                    let lam = eig.eigenvalues[idx].abs().max(1e-300);
                    yn += eig.eigenvectors.column(idx) * (nv[k] / lam.sqrt());
                }
            }
            for level in 0..=interior_levels {
                let s = 1.0 - level as f64 / (interior_levels + 1) as f64;
                let v = &yp + &yn * s;
                let n = v.norm();
                if n > 0.0 {
                    out.push(v / n);
                }
            }
        }
        out
    }
}

/// Boundary sample count by dimension: 64 up to 3D, 256 beyond.
pub fn default_boundary_samples(dim: usize) -> usize {
    if dim <= 3 {
        64
    } else {
        256
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub boundary: usize,
    pub interior_levels: usize,
}

impl SampleSpec {
    pub fn for_dim(dim: usize) -> Self {
        SampleSpec {
            boundary: default_boundary_samples(dim),
            interior_levels: 3,
        }
    }
}

/// `min Q_dst(Mv)/|Q_dst|(Mv)` over unit samples `v` of `src`. Positive
/// means `M(src) ⊂⊂ dst` at the sampled resolution.
pub fn check_inclusion(
    src: &ConeField,
    dst: &ConeField,
    map: &DMatrix<f64>,
    spec: SampleSpec,
) -> f64 {
    src.samples(spec.boundary, spec.interior_levels)
        .iter()
        .map(|v| dst.relative_value(&(map * v)))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InclusionMargin {
    pub name: String,
    pub t: Option<f64>,
    pub margin: f64,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct StandardCones {
    pub a: ConeField,
    pub b: ConeField,
    pub c: ConeField,
    pub u: ConeField,
}

pub const T_GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

fn weights(model: &FrameModel, groups: &[(&[usize], f64)]) -> Vec<f64> {
    let mut w = vec![0.0; model.dim()];
    for (idx, val) in groups {
        for &i in *idx {
            w[i] = *val;
        }
    }
    w
}

/// `Q_𝒜 = aperture²‖v_s‖² − ‖v_cu‖²`, `ℬ = Dg²𝒜`, `𝒞 = Dg(ℬ*)`, and `𝒰`
/// around `E^u` with the same aperture. Fails if a base inclusion has
/// non-positive margin.
pub fn build_standard_cones(
    model: &FrameModel,
    aperture: f64,
) -> Result<(StandardCones, Vec<InclusionMargin>)> {
    let ap2 = aperture * aperture;
    let stable = model.stable();
    let cu = model.center_unstable();
    let cs = model.center_stable();
    let sign = Some(model.coordinate(model.weak_stable));
    let a = ConeField::diagonal("A", &weights(model, &[(&stable, ap2), (&cu, -1.0)]), sign);
    let b = a.image(&model.dg_power(2), "B");
    let c = b.dual("B*").image(&model.g, "C");
    let u = ConeField::diagonal(
        "U",
        &weights(model, &[(&model.unstable, ap2), (&cs, -1.0)]),
        None,
    );
    let cones = StandardCones { a, b, c, u };
    let margins = base_margins(model, &cones);
    if let Some(bad) = margins.iter().find(|m| m.margin <= 0.0) {
        return Err(Error::ApertureTooWide {
            name: bad.name.clone(),
            margin: bad.margin,
        });
    }
    Ok((cones, margins))
}

fn axis_margin(name: &str, cone: &ConeField, model: &FrameModel, idx: &[usize]) -> InclusionMargin {
    // Worst normalized value on the unit sphere of the coordinate subspace.
    let pts = sphere_points(idx.len(), 64);
    let margin = pts
        .iter()
        .map(|p| {
            let mut v = DVector::zeros(model.dim());
            for (k, &i) in idx.iter().enumerate() {
                v[i] = p[k];
            }
            cone.relative_value(&v)
        })
        .fold(f64::INFINITY, f64::min);
    InclusionMargin {
        name: name.to_string(),
        t: None,
        margin,
        samples: pts.len(),
    }
}

fn base_margins(model: &FrameModel, cones: &StandardCones) -> Vec<InclusionMargin> {
    let spec = SampleSpec::for_dim(model.dim());
    let n = spec.boundary * (spec.interior_levels + 1);
    let id = DMatrix::identity(model.dim(), model.dim());
    vec![
        axis_margin("E^s in A", &cones.a, model, &model.stable()),
        axis_margin(
            "E^cu in A*",
            &cones.a.dual("A*"),
            model,
            &model.center_unstable(),
        ),
        axis_margin(
            "E^cu in Dg(C)",
            &cones.c.image(&model.g, "DgC"),
            model,
            &model.center_unstable(),
        ),
        axis_margin("E^u in U", &cones.u, model, &model.unstable),
        InclusionMargin {
            name: "B ∩ C = 0".into(),
            t: None,
            margin: check_inclusion(&cones.b, &cones.c.dual("C*"), &id, spec),
            samples: n,
        },
    ]
}

/// Margins of the chain `𝒜 ⊂⊂ Dg_t𝒜 ⊂⊂ ℬ ⊂⊂ Dg_tℬ`, `Dg_t𝒞 ⊂⊂ 𝒞`,
/// `Dg_t𝒰 ⊂⊂ 𝒰` at each `t` of the grid.
pub fn shear_margins(
    model: &FrameModel,
    cones: &StandardCones,
    spec: SampleSpec,
) -> Vec<InclusionMargin> {
    let n = spec.boundary * (spec.interior_levels + 1);
    let mut out = Vec::new();
    for &t in &T_GRID {
        let fwd = model.dg_t(t);
        let bwd = model.dg_t_inverse(t);
        let rows: [(&str, &ConeField, &ConeField, &DMatrix<f64>); 5] = [
            ("A ⊂⊂ Dg_t(A)", &cones.a, &cones.a, &bwd),
            ("Dg_t(A) ⊂⊂ B", &cones.a, &cones.b, &fwd),
            ("B ⊂⊂ Dg_t(B)", &cones.b, &cones.b, &bwd),
            ("Dg_t(C) ⊂⊂ C", &cones.c, &cones.c, &fwd),
            ("Dg_t(U) ⊂⊂ U", &cones.u, &cones.u, &fwd),
        ];
        for (name, src, dst, map) in rows {
            out.push(InclusionMargin {
                name: name.to_string(),
                t: Some(t),
                margin: check_inclusion(src, dst, map, spec),
                samples: n,
            });
        }
    }
    out
}

/// Cones adapted to a given field when `E^s = E^ss ⊕ E^ws`.
#[derive(Debug, Clone)]
pub struct AdaptedCones {
    pub a: ConeField,
    pub b: ConeField,
    pub e: ConeField,
    /// Constant actually used in the forms.
    pub c: f64,
    /// `1.1 ·` the sampled ratio supremum, before the `C > 1` floor.
    pub c_ratio: f64,
    pub x_in_intersection: bool,
    pub x_in_union: bool,
    /// `−max min(Q_ℬ, Q_ℰ)` over unit vectors of `E^ss ⊕ E^cu`; positive
    /// certifies the zero intersection.
    pub zero_intersection_margin: f64,
}

fn split_norms(model: &FrameModel, v: &DVector<f64>) -> (f64, f64, f64) {
    let ss: f64 = model.strong_stable.iter().map(|&i| v[i] * v[i]).sum();
    let cu: f64 = model.center_unstable().iter().map(|&i| v[i] * v[i]).sum();
    let ws = v[model.weak_stable] * v[model.weak_stable];
    (ss, ws, cu)
}

/// `(‖v_ss‖² + ‖v_cu‖²) / ‖v_ws‖²`, or `NotTransverse` when `v_ws = 0`.
pub fn transversality_ratio(model: &FrameModel, v: &DVector<f64>) -> Result<f64> {
    let (ss, ws, cu) = split_norms(model, v);
    if ws <= 1e-300 {
        return Err(Error::NotTransverse);
    }
    Ok((ss + cu) / ws)
}

/// Cross coefficient `k` in the adapted cones. The two inequalities only
/// exclude `E^ss ⊕ E^cu` when `k < 1`.
pub const CROSS_WEIGHT: f64 = 0.5;

/// Build `𝒜` and `ℰ` from the field `X`:
/// `v ∈ Dg²𝒜 ⇔ ‖v_cu‖² ≤ C‖v_ws‖² + k‖v_ss‖²` and
/// `v ∈ ℰ ⇔ ‖v_ss‖² ≤ C‖v_ws‖² + k‖v_cu‖²`.
pub fn build_cones_given_x(
    model: &FrameModel,
    x_samples: &[DVector<f64>],
    cross_weight: f64,
) -> Result<AdaptedCones> {
    let back2 = model.dg_power(-2);
    let mut sup = 0.0f64;
    for x in x_samples {
        sup = sup.max(transversality_ratio(model, x)?);
        sup = sup.max(transversality_ratio(model, &(&back2 * x))?);
    }
    let c_ratio = 1.1 * sup;
    let c = c_ratio.max(1.1);
    let ss = model.strong_stable.clone();
    let ws = [model.weak_stable];
    let cu = model.center_unstable();
    let sign = Some(model.coordinate(model.weak_stable));
    let b = ConeField::diagonal(
        "B",
        &weights(model, &[(&ws, c), (&ss, cross_weight), (&cu, -1.0)]),
        sign.clone(),
    );
    let a = b.image(&model.dg_power(-2), "A");
    let e = ConeField::diagonal(
        "E",
        &weights(model, &[(&ws, c), (&cu, cross_weight), (&ss, -1.0)]),
        sign,
    );
    let dg2e = e.image(&model.dg_power(2), "Dg2E");

    let in_a = x_samples.iter().all(|x| a.value(x) > 0.0);
    let in_dg2e = x_samples.iter().all(|x| dg2e.value(x) > 0.0);
    let in_either = x_samples
        .iter()
        .all(|x| a.value(x) > 0.0 || dg2e.value(x) > 0.0);

    let sub: Vec<usize> = {
        let mut s: Vec<usize> = ss.iter().chain(&cu).cloned().collect();
        s.sort_unstable();
        s
    };
    let worst = sphere_points(sub.len(), 4 * default_boundary_samples(model.dim()))
        .iter()
        .map(|p| {
            let mut v = DVector::zeros(model.dim());
            for (k, &i) in sub.iter().enumerate() {
                v[i] = p[k];
            }
            b.value(&v).min(e.value(&v))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(AdaptedCones {
        a,
        b,
        e,
        c,
        c_ratio,
        x_in_intersection: in_a && in_dg2e,
        x_in_union: in_either,
        zero_intersection_margin: -worst,
    })
}

/// Distance from `w` to `E^ss`, i.e. the norm of its `ws ⊕ cu` part.
fn distance_to_strong_stable(model: &FrameModel, w: &DVector<f64>) -> f64 {
    let (_, ws, cu) = split_norms(model, w);
    (ws + cu).sqrt()
}

/// Worst distance to `E^ss` of `u + s v` for unit `u ∈ ℬ ∩ ℰ`, unit
/// `v ∈ 𝒞` and `s ∈ [0, 1]`.
pub fn avoidance_margin(
    model: &FrameModel,
    b: &ConeField,
    e: &ConeField,
    c: &ConeField,
    spec: SampleSpec,
) -> f64 {
    let dim = model.dim();
    let us: Vec<DVector<f64>> = b
        .samples(spec.boundary, spec.interior_levels)
        .into_iter()
        .chain(e.samples(spec.boundary, spec.interior_levels))
        .chain(sphere_points(dim, 8 * spec.boundary))
        .filter(|u| b.value(u) >= -1e-12 && e.value(u) >= -1e-12)
        .collect();
    let vs = c.samples(spec.boundary / 4, 1);
    let scales = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut worst = f64::INFINITY;
    for u in &us {
        for v in &vs {
            for s in scales {
                worst = worst.min(distance_to_strong_stable(model, &(u + v * s)));
                worst = worst.min(distance_to_strong_stable(model, &(u - v * s)));
            }
        }
    }
    worst
}

/// Smallest `n ≤ cap` with `𝒞 = Dg^n(ℬ*)` keeping sums `u + v` away from
/// `E^ss` by more than `floor`.
pub fn find_c_power(
    model: &FrameModel,
    b: &ConeField,
    e: &ConeField,
    cap: usize,
    floor: f64,
) -> Result<(usize, ConeField, f64)> {
    let spec = SampleSpec::for_dim(model.dim());
    let bstar = b.dual("B*");
    for n in 1..=cap {
        let c = bstar.image(&model.dg_power(n as i32), "C");
        if model.strong_stable.is_empty() {
            return Ok((n, c, f64::INFINITY));
        }
        let margin = avoidance_margin(model, b, e, &c, spec);
        if margin > floor {
            return Ok((n, c, margin));
        }
    }
    Err(Error::NoPowerFound(cap))
}

/// Everything the cone stage certifies, for one model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeCertificate {
    pub aperture: f64,
    pub epsilon: f64,
    pub adapted: bool,
    pub inclusions: Vec<InclusionMargin>,
    pub min_margin: f64,
    pub c_constant: Option<f64>,
    pub c_ratio: Option<f64>,
    pub x_in_intersection: Option<bool>,
    pub x_in_union: Option<bool>,
    pub zero_intersection_margin: Option<f64>,
    /// Same check with cross coefficient 2; expected to be non-positive.
    pub zero_intersection_margin_k2: Option<f64>,
    pub power_n: Option<usize>,
    pub avoidance_margin: Option<f64>,
    pub b_plus_c_margin: f64,
    pub boundary_samples: usize,
}

/// Adapted cones with the power `n` and margin found for the C cone.
type AdaptedFit = (AdaptedCones, usize, f64);

fn adapted_set(model: &FrameModel, aperture: f64) -> Result<(StandardCones, Option<AdaptedFit>)> {
    if model.strong_stable.is_empty() {
        let (cones, _) = build_standard_cones(model, aperture)?;
        return Ok((cones, None));
    }
    let adapted = build_cones_given_x(model, std::slice::from_ref(&model.field), CROSS_WEIGHT)?;
    let (n, c, margin) = find_c_power(model, &adapted.b, &adapted.e, 20, 1e-3)?;
    let unstable_only = build_standard_cones(model, aperture)?.0.u;
    let cones = StandardCones {
        a: adapted.a.clone(),
        b: adapted.b.clone(),
        c,
        u: unstable_only,
    };
    Ok((cones, Some((adapted, n, margin))))
}

/// Build the cones for `model` and certify every inclusion at the model's ε.
pub fn certify(model: &FrameModel, aperture: f64) -> Result<ConeCertificate> {
    let spec = SampleSpec::for_dim(model.dim());
    let (cones, adapted) = adapted_set(model, aperture)?;
    let mut inclusions = base_margins(model, &cones);
    inclusions.extend(shear_margins(model, &cones, spec));
    if let Some((ad, _, _)) = &adapted {
        for &t in &T_GRID {
            inclusions.push(InclusionMargin {
                name: "Dg_t(E) ⊂⊂ E".into(),
                t: Some(t),
                margin: check_inclusion(&ad.e, &ad.e, &model.dg_t(t), spec),
                samples: spec.boundary * (spec.interior_levels + 1),
            });
        }
    }
    let min_margin = inclusions
        .iter()
        .map(|m| m.margin)
        .fold(f64::INFINITY, f64::min);
    let id = DMatrix::identity(model.dim(), model.dim());
    let b_plus_c_margin = check_inclusion(&cones.b, &cones.c.dual("C*"), &id, spec);
    let k2 = match &adapted {
        Some(_) => Some(
            build_cones_given_x(model, std::slice::from_ref(&model.field), 2.0)?
                .zero_intersection_margin,
        ),
        None => None,
    };
    let (c_constant, c_ratio, xi, xu, zim, power_n, avoid) = match &adapted {
        Some((ad, n, m)) => (
            Some(ad.c),
            Some(ad.c_ratio),
            Some(ad.x_in_intersection),
            Some(ad.x_in_union),
            Some(ad.zero_intersection_margin),
            Some(*n),
            Some(*m),
        ),
        None => (None, None, None, None, None, Some(1), None),
    };
    Ok(ConeCertificate {
        aperture,
        epsilon: model.epsilon,
        adapted: adapted.is_some(),
        inclusions,
        min_margin,
        c_constant,
        c_ratio,
        x_in_intersection: xi,
        x_in_union: xu,
        zero_intersection_margin: zim,
        zero_intersection_margin_k2: k2,
        power_n,
        avoidance_margin: avoid,
        b_plus_c_margin,
        boundary_samples: spec.boundary,
    })
}

/// Largest `ε = ε₀ 2^{-k}`, `k ≤ 40`, whose certificate clears `floor`.
pub fn rescale_x_epsilon(model: &FrameModel, aperture: f64, eps0: f64, floor: f64) -> Result<f64> {
    if eps0 <= 0.0 {
        return Err(Error::ConfigInvalid(format!(
            "ε₀ must be positive, got {eps0}"
        )));
    }
    for k in 0..=40 {
        let eps = eps0 * 0.5f64.powi(k);
        let cert = certify(&model.with_epsilon(eps), aperture)?;
        if cert.min_margin > floor {
            return Ok(eps);
        }
    }
    Err(Error::CannotRescale { floor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::LinearAnosov;

    fn cat_model() -> FrameModel {
        let base = BaseSystem::Linear(LinearAnosov::cat_map());
        let field = StableField::along(&base, &[0], 0.05);
        FrameModel::of_base(&base, &field, 0, 1.0)
    }

    #[test]
    fn axes_of_a() {
        let m = cat_model();
        let (c, _) = build_standard_cones(&m, 0.5).unwrap();
        assert!(c.a.value(&DVector::from_vec(vec![1.0, 0.0])) > 0.0);
        assert!(c.a.value(&DVector::from_vec(vec![0.0, 1.0])) < 0.0);
    }

    #[test]
    fn identity_inclusion_is_zero_on_boundary() {
        let m = cat_model();
        let (c, _) = build_standard_cones(&m, 0.5).unwrap();
        let id = DMatrix::identity(2, 2);
        let margin = check_inclusion(&c.a, &c.a, &id, SampleSpec::for_dim(2));
        assert!(margin.abs() < 1e-12, "{margin}");
    }

    #[test]
    fn cat_chain_is_strict() {
        let m = cat_model();
        let cert = certify(&m, 0.5).unwrap();
        assert!(cert.min_margin > 1e-3, "{:?}", cert.inclusions);
    }

    #[test]
    fn samples_lie_on_or_in_the_cone() {
        let m = cat_model();
        let (c, _) = build_standard_cones(&m, 0.5).unwrap();
        for v in c.b.samples(64, 3) {
            assert!(c.b.value(&v) > -1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    fn two_stable_model(dirs: &[usize]) -> FrameModel {
        let base = BaseSystem::Linear(
            LinearAnosov::new(vec![vec![0, 0, 1], vec![1, 0, -5], vec![0, 1, 6]], 2).unwrap(),
        );
        let field = StableField::along(&base, dirs, 0.05);
        FrameModel::of_base(&base, &field, 1, 1.0)
    }

    #[test]
    fn mixture_ratio() {
        let m = two_stable_model(&[1]);
        let x = DVector::from_vec(vec![0.3, 1.0, 0.0]);
        assert!((transversality_ratio(&m, &x).unwrap() - 0.09).abs() < 1e-15);
        let ad = build_cones_given_x(&m, &[DVector::from_vec(vec![0.0, 1.0, 0.0])], CROSS_WEIGHT)
            .unwrap();
        assert_eq!(ad.c_ratio, 0.0);
        assert_eq!(ad.c, 1.1);
    }

    #[test]
    fn field_in_strong_stable_is_not_transverse() {
        let m = two_stable_model(&[1]);
        let r = build_cones_given_x(&m, &[DVector::from_vec(vec![1.0, 0.0, 0.0])], CROSS_WEIGHT);
        assert!(matches!(r, Err(Error::NotTransverse)));
    }

    #[test]
    fn zero_intersection_needs_small_cross_weight() {
        let m = two_stable_model(&[0, 1]);
        let x = [m.field.clone()];
        let half = build_cones_given_x(&m, &x, 0.5).unwrap();
        assert!(half.zero_intersection_margin > 0.0);
        // ss = cu with ws = 0 satisfies both inequalities when k = 2.
        let two = build_cones_given_x(&m, &x, 2.0).unwrap();
        assert!(two.zero_intersection_margin < 0.0);
    }

    #[test]
    fn one_dimensional_stable_needs_power_one() {
        let m = cat_model();
        let (c, _) = build_standard_cones(&m, 0.5).unwrap();
        let (n, _, _) = find_c_power(&m, &c.b, &c.a, 20, 1e-3).unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn unreachable_floor() {
        let m = cat_model();
        assert!(matches!(
            rescale_x_epsilon(&m, 0.5, 0.05, 10.0),
            Err(Error::CannotRescale { .. })
        ));
    }

    #[test]
    fn torus_rescale_keeps_eps0() {
        let m = cat_model();
        let eps = rescale_x_epsilon(&m, 0.5, 0.05, 1e-3).unwrap();
        assert!(eps > 0.0 && eps <= 0.05);
    }
}
