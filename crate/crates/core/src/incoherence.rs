//! Falling curves: integral curves of the line field
//! `E^cu_f ∩ (E^s_g × ℝ)` below `h²(a)`, and the measurements that show
//! they reach the invariant fiber in finite length from both sides.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{halton, min_principal_sine, null_vector, random_frame};
use crate::skew::{SkewPoint, SwitchTower};
use crate::splitting::{point_seed, push_frame, Direction};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FieldOptions {
    /// Backward iterations used to estimate `E^cu`.
    pub n: usize,
    pub seed: u64,
    /// Smallest admissible sine between `Ê^cu` and `E^s_g × 0`.
    pub min_sine: f64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions {
            n: 60,
            seed: 0,
            min_sine: 1e-8,
        }
    }
}

/// Frame indices used by the line field.
struct Layout {
    stable: Vec<usize>,
    weak: usize,
    strong: Vec<usize>,
    center_unstable: Vec<usize>,
    vertical: usize,
}

fn layout(t: &SwitchTower) -> Result<Layout> {
    if t.depth() != 1 {
        return Err(Error::ConfigInvalid(
            "falling curves are defined for single-stage towers".into(),
        ));
    }
    let (stable, center, unstable) = t.base().frame_groups();
    let weak = t.stages()[0].weak_stable_index;
    let mut cu: Vec<usize> = center.into_iter().chain(unstable).collect();
    cu.sort_unstable();
    Ok(Layout {
        strong: stable.iter().cloned().filter(|&i| i != weak).collect(),
        stable,
        weak,
        center_unstable: cu,
        vertical: t.base_dim(),
    })
}

/// `Ê^cu_f(p)` as an orthonormal basis.
pub fn center_unstable(
    t: &SwitchTower,
    p: &SkewPoint,
    opts: &FieldOptions,
) -> Result<DMatrix<f64>> {
    let (_, c, u) = t.bundle_dims();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let seed = random_frame(&mut rng, t.dim(), c + u);
    push_frame(t, p, seed, Direction::Forward, opts.n)
}

/// Unnormalized spanning vector of `Ê^cu ∩ (E^s_g × ℝ)`.
fn solve_line(
    t: &SwitchTower,
    lay: &Layout,
    p: &SkewPoint,
    opts: &FieldOptions,
) -> Result<DVector<f64>> {
    let q = center_unstable(t, p, opts)?;
    let mut horizontal_stable = DMatrix::zeros(t.dim(), lay.stable.len());
    for (j, &i) in lay.stable.iter().enumerate() {
        horizontal_stable[(i, j)] = 1.0;
    }
    let sine = min_principal_sine(&q, &horizontal_stable);
    if sine < opts.min_sine {
        return Err(Error::TransversalityLost(sine));
    }
    let rows = DMatrix::from_fn(lay.center_unstable.len(), q.ncols(), |r, c| {
        q[(lay.center_unstable[r], c)]
    });
    let coeffs = null_vector(&rows);
    let mut w = &q * coeffs;
    for &i in &lay.center_unstable {
        w[i] = 0.0;
    }
    Ok(w)
}

fn horizontal_norm(lay: &Layout, w: &DVector<f64>) -> f64 {
    lay.stable.iter().map(|&i| w[i] * w[i]).sum::<f64>().sqrt()
}

/// The line field at `p`, oriented so its horizontal part points into
/// `E⁻` (negative weak-stable component) and scaled so that part has unit
/// length.
pub fn line_field(t: &SwitchTower, p: &SkewPoint, opts: &FieldOptions) -> Result<DVector<f64>> {
    let lay = layout(t)?;
    line_field_with(t, &lay, p, opts)
}

fn line_field_with(
    t: &SwitchTower,
    lay: &Layout,
    p: &SkewPoint,
    opts: &FieldOptions,
) -> Result<DVector<f64>> {
    let w = solve_line(t, lay, p, opts)?;
    let hn = horizontal_norm(lay, &w);
    if hn < opts.min_sine {
        return Err(Error::TransversalityLost(hn));
    }
    let sign = if w[lay.weak] > 0.0 { -1.0 } else { 1.0 };
    Ok(w * (sign / hn))
}

/// Signs of `(u_ws, v)` for the solved direction, in its raw orientation.
pub fn sign_pair(t: &SwitchTower, p: &SkewPoint, opts: &FieldOptions) -> Result<(f64, f64)> {
    let lay = layout(t)?;
    let w = solve_line(t, &lay, p, opts)?;
    Ok((w[lay.weak].signum(), w[lay.vertical].signum()))
}

/// Angle between the line field and `E^ss_g × ℝ` (the vertical line when
/// `E^ss` is trivial).
pub fn strong_stable_avoidance(t: &SwitchTower, p: &SkewPoint, opts: &FieldOptions) -> Result<f64> {
    let lay = layout(t)?;
    let w = line_field_with(t, &lay, p, opts)?;
    let inside: f64 = lay
        .strong
        .iter()
        .chain(std::iter::once(&lay.vertical))
        .map(|&i| w[i] * w[i])
        .sum::<f64>()
        .sqrt();
    let outside = (w.norm_squared() - inside * inside).max(0.0).sqrt();
    Ok(outside.atan2(inside))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegratorOptions {
    /// Largest step in projected arclength.
    pub step: f64,
    /// Stop once `|z|` falls below this.
    pub z_floor: f64,
    /// Stop at exactly this projected length.
    pub max_len: f64,
    /// Lengths the integrator lands on exactly.
    pub stops: Vec<f64>,
    /// Largest fraction of the current `|z|` one step may consume.
    pub z_fraction: f64,
    pub max_turn_deg: f64,
    pub max_retries: usize,
    pub field: FieldOptions,
}

impl IntegratorOptions {
    pub fn new(step: f64, z_floor: f64, max_len: f64) -> Self {
        IntegratorOptions {
            step,
            z_floor,
            max_len,
            stops: Vec::new(),
            z_fraction: 0.1,
            max_turn_deg: 30.0,
            max_retries: 12,
            field: FieldOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FallingCurve {
    pub points: Vec<SkewPoint>,
    /// Projected arclength at each sample.
    pub arclength: Vec<f64>,
    pub terminal_z: f64,
    pub length: f64,
    pub step: f64,
    pub reached_floor: bool,
}

impl FallingCurve {
    pub fn z(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.z[0]).collect()
    }

    /// `z` at projected length `s`, linear between samples.
    pub fn z_at(&self, s: f64) -> f64 {
        let a = &self.arclength;
        if s <= a[0] {
            return self.points[0].z[0];
        }
        let i = a.partition_point(|x| *x < s);
        if i >= a.len() {
            return self.terminal_z;
        }
        let (s0, s1) = (a[i - 1], a[i]);
        let (z0, z1) = (self.points[i - 1].z[0], self.points[i].z[0]);
        if s1 == s0 {
            z1
        } else {
            z0 + (z1 - z0) * (s - s0) / (s1 - s0)
        }
    }

    /// Whether `|z|` strictly decreases along the samples.
    pub fn monotone(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].z[0].abs() < w[0].z[0].abs())
    }
}

fn advance(t: &SwitchTower, lay: &Layout, p: &SkewPoint, k: &DVector<f64>, h: f64) -> SkewPoint {
    let m = t.base_dim();
    let du = k.rows(0, m) * h;
    SkewPoint::new(
        t.base().advance(&p.x, &du),
        vec![p.z[0] + h * k[lay.vertical]],
    )
}

/// Integrate the line field from `p0` with classical RK4 in projected
/// arclength, until `|z| < z_floor` or the length reaches `max_len`.
pub fn integrate_falling(
    t: &SwitchTower,
    p0: &SkewPoint,
    opts: &IntegratorOptions,
) -> Result<FallingCurve> {
    let lay = layout(t)?;
    let f = |p: &SkewPoint| line_field_with(t, &lay, p, &opts.field);
    let mut points = vec![p0.clone()];
    let mut arclength = vec![0.0];
    let mut p = p0.clone();
    let mut len = 0.0;
    let mut reached_floor = p.z[0].abs() < opts.z_floor;
    let max_turn = opts.max_turn_deg.to_radians();
    let mut steps = 0usize;
    while !reached_floor && len < opts.max_len {
        let k1 = f(&p)?;
        let vz = k1[lay.vertical].abs();
        let mut h = opts.step.min(opts.max_len - len);
        if vz > 0.0 {
            h = h.min(opts.z_fraction * p.z[0].abs() / vz);
        }
        if let Some(stop) = opts.stops.iter().find(|s| **s > len + 1e-15) {
            h = h.min(stop - len);
        }
        let mut retries = 0;
        let next = loop {
            let k2 = f(&advance(t, &lay, &p, &k1, 0.5 * h))?;
            let k3 = f(&advance(t, &lay, &p, &k2, 0.5 * h))?;
            let k4 = f(&advance(t, &lay, &p, &k3, h))?;
            let turn = (k1.dot(&k4) / (k1.norm() * k4.norm()))
                .clamp(-1.0, 1.0)
                .acos();
            if turn <= max_turn {
                let k = (&k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) / 6.0;
                break advance(t, &lay, &p, &k, h);
            }
            retries += 1;
            if retries > opts.max_retries {
                return Err(Error::StepRejected(steps));
            }
            h *= 0.5;
        };
        steps += 1;
        let (z0, z1) = (p.z[0].abs(), next.z[0].abs());
        if z1 < opts.z_floor || next.z[0].signum() != p.z[0].signum() {
            // Land on the floor by linear interpolation of the last step.
            let theta = ((z0 - opts.z_floor) / (z0 - z1.min(z0))).clamp(0.0, 1.0);
            let mut end = next.clone();
            end.z[0] = p.z[0].signum() * opts.z_floor;
            len += theta * h;
            points.push(end);
            arclength.push(len);
            reached_floor = true;
            break;
        }
        len += h;
        p = next;
        points.push(p.clone());
        arclength.push(len);
    }
    let terminal_z = points.last().unwrap().z[0];
    Ok(FallingCurve {
        points,
        arclength,
        terminal_z,
        length: len,
        step: opts.step,
        reached_floor,
    })
}

/// Base points for start grids: a Halton sequence on the base.
pub fn base_samples(t: &SwitchTower, count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [usize; 4] = [2, 3, 5, 7];
    (1..=count)
        .map(|i| {
            let x: Vec<f64> = (0..t.base_dim()).map(|k| halton(i, PRIMES[k])).collect();
            t.base().canonical(&x)
        })
        .collect()
}

/// `count_x × count_z` starts in `M × [h^{k+1}(c), h^k(c)]`.
pub fn start_grid(t: &SwitchTower, k: usize, count_x: usize, count_z: usize) -> Vec<SkewPoint> {
    let prof = t.profile();
    let hi = prof.h_iter(prof.c, k);
    let lo = prof.h_iter(prof.c, k + 1);
    let xs = base_samples(t, count_x);
    let mut out = Vec::with_capacity(count_x * count_z);
    for x in &xs {
        for j in 0..count_z {
            let z = lo + (hi - lo) * (j as f64 + 1.0) / count_z as f64;
            out.push(SkewPoint::new(x.clone(), vec![z]));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaReport {
    /// Smallest drop `γ_I(0) − γ_I(1)` over the starts.
    pub delta: f64,
    pub drops: Vec<f64>,
    /// Smallest integer with `δ L > c − h(c)`.
    pub l_measured: usize,
}

/// Integrate each start to projected length one and record the drop.
pub fn measure_delta(
    t: &SwitchTower,
    starts: &[SkewPoint],
    step: f64,
    field: FieldOptions,
) -> Result<DeltaReport> {
    if starts.is_empty() {
        return Err(Error::ConfigInvalid("no starts for δ".into()));
    }
    let prof = t.profile();
    let mut opts = IntegratorOptions::new(step, 1e-8 * prof.c, 1.0);
    opts.field = field;
    let drops: Vec<Result<f64>> = starts
        .par_iter()
        .map(|p| {
            let c = integrate_falling(t, p, &opts)?;
            Ok(p.z[0] - c.terminal_z)
        })
        .collect();
    let drops: Vec<f64> = drops.into_iter().collect::<Result<_>>()?;
    let delta = drops.iter().cloned().fold(f64::INFINITY, f64::min);
    let gap = prof.c - prof.h(prof.c);
    let l_measured = if delta > 0.0 {
        ((gap / delta).floor() as usize) + 1
    } else {
        0
    };
    Ok(DeltaReport {
        delta,
        drops,
        l_measured,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FallnLevel {
    pub k: usize,
    pub curves: usize,
    /// Largest terminal `z` over `h^{k+1}(c)`; below one passes.
    pub worst_terminal_ratio: f64,
    /// Smallest `length(f^{-k} γ) / length(γ)` over `η^{-k}`.
    pub min_inflation_ratio: f64,
    pub pass: bool,
}

/// Projected length of a sampled curve in the frame metric.
pub fn polyline_length(t: &SwitchTower, points: &[SkewPoint]) -> f64 {
    let m = t.base_dim();
    points
        .windows(2)
        .map(|w| {
            t.base()
                .frame_displacement(&w[0].x, &w[1].x)
                .rows(0, m)
                .norm()
        })
        .sum()
}

/// Curves of projected length `L ηᵏ · 1.01` started in
/// `[h^{k+1}(c), h^k(c)]` must end below `h^{k+1}(c)`; their `f^{-k}`
/// pullbacks must be at least `η^{-k}` times longer.
pub fn verify_falln(
    t: &SwitchTower,
    k: usize,
    l_measured: usize,
    starts: &[SkewPoint],
    step: f64,
    field: FieldOptions,
) -> Result<FallnLevel> {
    let prof = t.profile();
    let target = prof.h_iter(prof.c, k + 1);
    let len = l_measured as f64 * prof.eta.powi(k as i32) * 1.01;
    let mut opts = IntegratorOptions::new(step * prof.eta.powi(k as i32), 1e-8 * prof.c, len);
    opts.field = field;
    let rows: Vec<Result<(f64, f64)>> = starts
        .par_iter()
        .map(|p| {
            let curve = integrate_falling(t, p, &opts)?;
            let pulled: Vec<SkewPoint> = curve
                .points
                .iter()
                .map(|q| (0..k).fold(q.clone(), |acc, _| t.inverse(&acc)))
                .collect();
            let own = polyline_length(t, &curve.points);
            let back = polyline_length(t, &pulled);
            let inflation = if own > 0.0 {
                back / own * prof.eta.powi(k as i32)
            } else {
                f64::INFINITY
            };
            Ok((curve.terminal_z / target, inflation))
        })
        .collect();
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let worst = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let infl = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(FallnLevel {
        k,
        curves: rows.len(),
        worst_terminal_ratio: worst,
        min_inflation_ratio: infl,
        pass: worst < 1.0 && infl >= 0.98,
    })
}

/// Track of one leaf of the induced foliation on `W^s_g(x) × (−c, c)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Track {
    pub start_z: f64,
    pub arclength: Vec<f64>,
    pub z: Vec<f64>,
}

/// Fan of leaves started at `count` heights in `window` (zero excluded),
/// all through the base point `x`.
pub fn foliation_box_demo(
    t: &SwitchTower,
    x: &[f64],
    window: (f64, f64),
    count: usize,
    opts: &IntegratorOptions,
) -> Result<Vec<Track>> {
    let c = t.profile().c;
    if !(window.0 > -c && window.1 < c && window.0 < window.1) {
        return Err(Error::ConfigInvalid(format!(
            "window {window:?} must lie inside (−c, c) = (−{c}, {c})"
        )));
    }
    let heights: Vec<f64> = (0..count)
        .map(|i| window.0 + (window.1 - window.0) * (i as f64 + 0.5) / count as f64)
        .filter(|z| z.abs() >= opts.z_floor)
        .collect();
    heights
        .par_iter()
        .map(|&z| {
            let curve = integrate_falling(t, &SkewPoint::new(x.to_vec(), vec![z]), opts)?;
            Ok(Track {
                start_z: z,
                z: curve.z(),
                arclength: curve.arclength,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessOptions {
    pub grid_x: usize,
    pub grid_z: usize,
    pub sign_points: usize,
    pub falln_levels: Vec<usize>,
    pub step: f64,
    pub z_floor_factor: f64,
    pub half_step_curves: usize,
    pub field: FieldOptions,
    pub seed: u64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions {
            grid_x: 32,
            grid_z: 8,
            sign_points: 1000,
            falln_levels: vec![0, 1, 2, 3],
            step: 0.02,
            z_floor_factor: 1e-8,
            half_step_curves: 8,
            field: FieldOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessReport {
    pub delta_measured: f64,
    pub l_measured: usize,
    pub eta: f64,
    /// `L / (1 − η)`.
    pub bound: f64,
    pub curves: usize,
    pub monotone: bool,
    /// Largest terminal `|z|` over `c`.
    pub worst_terminal_over_c: f64,
    pub terminal_ok: bool,
    pub max_length: f64,
    pub length_ok: bool,
    pub sign_points: usize,
    pub sign_exceptions: usize,
    /// Smallest angle of the line field to `E^ss_g × ℝ` over the sign
    /// sample.
    pub strong_stable_angle: f64,
    pub half_step_rel_change: f64,
    pub half_step_ok: bool,
    pub falln: Vec<FallnLevel>,
    /// Largest `|Δz|/z₀` between pushed-forward and reintegrated curves.
    pub invariance_error: f64,
    pub invariance_ok: bool,
    pub pass: bool,
}

/// Push a curve forward by `f` and compare with a fresh integration from
/// the pushed start.
pub fn invariance_error(
    t: &SwitchTower,
    curve: &FallingCurve,
    opts: &IntegratorOptions,
) -> Result<f64> {
    let pushed: Vec<SkewPoint> = curve.points.iter().map(|p| t.apply(p)).collect();
    let mut s = vec![0.0];
    for w in pushed.windows(2) {
        let d = t
            .base()
            .frame_displacement(&w[0].x, &w[1].x)
            .rows(0, t.base_dim())
            .norm();
        s.push(s.last().unwrap() + d);
    }
    let mut o = opts.clone();
    o.max_len = *s.last().unwrap();
    o.step = opts.step * t.profile().eta;
    o.z_floor = 0.0;
    let fresh = integrate_falling(t, &pushed[0], &o)?;
    let z0 = pushed[0].z[0].abs();
    Ok(pushed
        .iter()
        .zip(&s)
        .map(|(p, &si)| (p.z[0] - fresh.z_at(si)).abs() / z0)
        .fold(0.0, f64::max))
}

/// Run every falling-curve measurement and collect the curves.
pub fn witness(
    t: &SwitchTower,
    opts: &WitnessOptions,
) -> Result<(WitnessReport, Vec<FallingCurve>)> {
    let prof = t.profile();
    let z_floor = opts.z_floor_factor * prof.c;
    let starts = start_grid(t, 0, opts.grid_x, opts.grid_z);
    let delta = measure_delta(t, &starts, opts.step, opts.field)?;
    let l = delta.l_measured;
    let bound = l as f64 / (1.0 - prof.eta);

    let mut full = IntegratorOptions::new(opts.step, z_floor, 4.0 * bound.max(1.0));
    full.field = opts.field;
    let curves: Vec<FallingCurve> = starts
        .par_iter()
        .map(|p| integrate_falling(t, p, &full))
        .collect::<Result<_>>()?;
    let monotone = curves.iter().all(|c| c.monotone());
    let worst_terminal = curves
        .iter()
        .map(|c| c.terminal_z.abs())
        .fold(0.0, f64::max);
    let max_length = curves.iter().map(|c| c.length).fold(0.0, f64::max);

    let mut half = full.clone();
    half.step = 0.5 * opts.step;
    half.z_fraction = 0.5 * full.z_fraction;
    let half_change = starts
        .iter()
        .step_by((starts.len() / opts.half_step_curves.max(1)).max(1))
        .take(opts.half_step_curves)
        .map(|p| {
            let a = integrate_falling(t, p, &full)?;
            let b = integrate_falling(t, p, &half)?;
            Ok((a.length - b.length).abs() / b.length)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let sign_samples: Vec<SkewPoint> = (0..opts.sign_points)
        .map(|_| {
            let x: Vec<f64> = (0..t.base_dim()).map(|_| rng.gen::<f64>()).collect();
            let z = prof.h2_a * (1.0 - rng.gen::<f64>());
            SkewPoint::new(t.base().canonical(&x), vec![z])
        })
        .collect();
    let sign_rows: Vec<Result<(bool, f64)>> = sign_samples
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut f = opts.field;
            f.seed = point_seed(opts.seed, i);
            let (ws, v) = sign_pair(t, p, &f)?;
            let angle = strong_stable_avoidance(t, p, &f)?;
            Ok((ws == 0.0 || v != ws, angle))
        })
        .collect();
    let sign_rows: Vec<(bool, f64)> = sign_rows.into_iter().collect::<Result<_>>()?;
    let sign_exceptions = sign_rows.iter().filter(|r| r.0).count();
    let ss_angle = sign_rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);

    let falln = opts
        .falln_levels
        .iter()
        .map(|&k| {
            let s = start_grid(t, k, opts.grid_x.min(8), opts.grid_z);
            verify_falln(t, k, l, &s, opts.step, opts.field)
        })
        .collect::<Result<Vec<_>>>()?;

    let inv = invariance_error(t, &curves[0], &full)?;

    let length_ok = max_length <= bound * 1.05;
    let terminal_ok =
        curves.iter().all(|c| c.reached_floor) && worst_terminal <= z_floor * (1.0 + 1e-12);
    let half_step_ok = half_change < 5e-3;
    let invariance_ok = inv < 1e-2;
    let pass = delta.delta > 0.0
        && monotone
        && terminal_ok
        && length_ok
        && sign_exceptions == 0
        && half_step_ok
        && invariance_ok
        && falln.iter().all(|f| f.pass);
    Ok((
        WitnessReport {
            delta_measured: delta.delta,
            l_measured: l,
            eta: prof.eta,
            bound,
            curves: curves.len(),
            monotone,
            worst_terminal_over_c: worst_terminal / prof.c,
            terminal_ok,
            max_length,
            length_ok,
            sign_points: opts.sign_points,
            sign_exceptions,
            strong_stable_angle: ss_angle,
            half_step_rel_change: half_change,
            half_step_ok,
            falln,
            invariance_error: inv,
            invariance_ok,
            pass,
        },
        curves,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{BaseSystem, LinearAnosov};
    use crate::profile::ShearProfile;
    use crate::skew::Mode;

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
    fn field_points_down() {
        let t = cat_tower();
        for z in [1e-6, 0.01, 0.1, 0.3] {
            let w = line_field(
                &t,
                &SkewPoint::new(vec![0.2, 0.7], vec![z]),
                &FieldOptions::default(),
            )
            .unwrap();
            assert!(w[2] < 0.0, "z={z}: {w}");
            assert!(w[0] < 0.0 && w[1] == 0.0);
        }
    }

    #[test]
    fn mirrored_field_points_up() {
        let t = cat_tower();
        let w = line_field(
            &t,
            &SkewPoint::new(vec![0.2, 0.7], vec![-0.01]),
            &FieldOptions::default(),
        )
        .unwrap();
        assert!(w[2] > 0.0);
    }

    #[test]
    fn curve_from_c_reaches_floor() {
        let t = cat_tower();
        let c = t.profile().c;
        let opts = IntegratorOptions::new(0.02, 1e-8 * c, 100.0);
        let curve = integrate_falling(&t, &SkewPoint::new(vec![0.1, 0.1], vec![c]), &opts).unwrap();
        assert!(curve.reached_floor && curve.monotone());
        let mirrored =
            integrate_falling(&t, &SkewPoint::new(vec![0.1, 0.1], vec![-c]), &opts).unwrap();
        assert!((curve.length - mirrored.length).abs() < 1e-12);
        assert_eq!(mirrored.terminal_z, -curve.terminal_z);
    }

    #[test]
    fn multi_stage_is_rejected() {
        let p = ShearProfile::build(0.2, 0.7, 2.5, 0.9, 1, 100).unwrap();
        let q = ShearProfile::build(0.1, 0.7, 2.5, 0.9, 1, 100).unwrap();
        let base =
            LinearAnosov::new(vec![vec![0, 0, 1], vec![1, 0, -5], vec![0, 1, 6]], 2).unwrap();
        let t = SwitchTower::build(
            BaseSystem::Linear(base),
            vec![p, q],
            Mode::Diffeo,
            false,
            0.05,
        )
        .unwrap();
        let r = line_field(
            &t,
            &SkewPoint::new(vec![0.1, 0.1, 0.1], vec![0.01, 0.01]),
            &FieldOptions::default(),
        );
        assert!(matches!(r, Err(Error::ConfigInvalid(_))));
    }
}
