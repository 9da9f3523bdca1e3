//! Verification suites. Each one measures a property of a constructed
//! tower, compares against tolerances from the configuration and records
//! every number it used; failing checks are data, not errors.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::BaseSystem;
use crate::cones::{certify, ConeCertificate, FrameModel};
use crate::config::{Construction, Tolerances};
use crate::error::Result;
use crate::incoherence::{
    foliation_box_demo, witness, FallingCurve, FieldOptions, IntegratorOptions, Track,
    WitnessOptions, WitnessReport,
};
use crate::profile::ShearProfile;
use crate::skew::{Mode, SkewPoint, SwitchTower};
use crate::splitting::{
    absolute_ph_check, angle_to_coordinates, domination_margins, estimate_bundle, lyapunov_qr,
    nested_splitting_check, point_seed, BundleRequest, Direction, LyapunovReport, NestedReport,
    SandwichReport,
};

/// Uniform sample of the total space with a fixed seed.
pub fn random_points(t: &SwitchTower, count: usize, seed: u64) -> Vec<SkewPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = if t.doubling() { 3.0 } else { 1.0 };
    (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..t.base_dim()).map(|_| rng.gen::<f64>()).collect();
            let z: Vec<f64> = (0..t.depth()).map(|_| rng.gen_range(-1.0..hi)).collect();
            SkewPoint::new(t.base().canonical(&x), z)
        })
        .collect()
}

/// Base points paired with a fixed fiber height.
pub fn fiber_points(t: &SwitchTower, count: usize, z: f64, seed: u64) -> Vec<SkewPoint> {
    random_points(t, count, seed)
        .into_iter()
        .map(|p| SkewPoint::new(p.x, vec![z; t.depth()]))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileCheck {
    pub lambda: f64,
    pub points: usize,
    pub h_at_0: f64,
    pub h_at_1: f64,
    /// `max (h(z) − z)` over interior grid points; must be negative.
    pub max_h_minus_z: f64,
    pub min_h_prime: f64,
    pub c: f64,
    pub h3_a: f64,
    /// Largest `|f' − central difference|` over `h`, `τ`, `ρ`.
    pub max_fd_error: f64,
    pub seam_defect: f64,
    pub pass: bool,
}

const FD_STEP: f64 = 1e-6;

pub fn profile_check(p: &ShearProfile, points: usize, tol: &Tolerances) -> ProfileCheck {
    let grid: Vec<f64> = (1..points).map(|i| i as f64 / points as f64).collect();
    let max_h_minus_z = grid
        .iter()
        .map(|&z| p.h(z) - z)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_h_prime = (0..=points)
        .map(|i| p.h_prime(i as f64 / points as f64))
        .fold(f64::INFINITY, f64::min);
    let fd = |f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64, z: f64| {
        let lo = (z - FD_STEP).max(0.0);
        let hi = (z + FD_STEP).min(1.0);
        ((f(hi) - f(lo)) / (hi - lo) - df(z)).abs()
    };
    let max_fd_error = grid
        .iter()
        .map(|&z| {
            fd(&|z| p.h(z), &|z| p.h_prime(z), z)
                .max(fd(&|z| p.tau(z), &|z| p.tau_prime(z), z))
                .max(fd(&|z| p.rho(z), &|z| p.rho_prime(z), z))
        })
        .fold(0.0, f64::max);
    let h_at_0 = p.h(0.0);
    let h_at_1 = p.h(1.0);
    let pass = h_at_0 == 0.0
        && h_at_1 == 1.0
        && max_h_minus_z < 0.0
        && min_h_prime > 0.0
        && p.c < p.h3_a
        && max_fd_error < tol.finite_difference;
    ProfileCheck {
        lambda: p.lambda,
        points,
        h_at_0,
        h_at_1,
        max_h_minus_z,
        min_h_prime,
        c: p.c,
        h3_a: p.h3_a,
        max_fd_error,
        seam_defect: 0.0,
        pass,
    }
}

pub fn profile_suite(con: &Construction) -> Vec<ProfileCheck> {
    let seam = con.tower.seam_defect();
    con.tower
        .stages()
        .iter()
        .map(|s| {
            let mut c = profile_check(
                &s.profile,
                con.config.grids.profile_points,
                &con.config.tolerances,
            );
            c.seam_defect = seam;
            c
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffeoCheck {
    pub points: usize,
    pub max_round_trip: f64,
    /// `max |Df(p) · D(f⁻¹)(f(p)) − I|` with the inverse derivative built
    /// from the inverse map's formula.
    pub max_chain_defect: f64,
    pub pass: bool,
}

fn point_distance(t: &SwitchTower, a: &SkewPoint, b: &SkewPoint) -> f64 {
    a.z.iter()
        .zip(&b.z)
        .map(|(x, y)| t.z_delta(*x, *y).abs())
        .fold(t.base().distance(&a.x, &b.x), f64::max)
}

pub fn diffeo_suite(con: &Construction) -> DiffeoCheck {
    let t = &con.tower;
    let pts = random_points(t, con.config.grids.random_points, con.config.seed);
    let rows: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|p| {
            let fp = t.apply(p);
            let rt = point_distance(t, &t.inverse(&fp), p).max(point_distance(
                t,
                &t.apply(&t.inverse(p)),
                p,
            ));
            let inv = t
                .df_inverse_analytic(&fp)
                .unwrap_or_else(|| t.df_inverse_matrix(&fp));
            let prod = t.df_matrix(p) * inv;
            let defect = (prod - DMatrix::<f64>::identity(t.dim(), t.dim())).amax();
            (rt, defect)
        })
        .collect();
    let max_round_trip = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_chain_defect = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let tol = &con.config.tolerances;
    DiffeoCheck {
        points: pts.len(),
        max_round_trip,
        max_chain_defect,
        pass: max_round_trip < tol.round_trip && max_chain_defect < tol.chain_rule,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeCheck {
    pub certificate: ConeCertificate,
    pub pass: bool,
}

pub fn cone_suite(con: &Construction) -> Result<ConeCheck> {
    let model = FrameModel::of_tower(&con.tower);
    let cert = certify(&model, con.config.aperture)?;
    let tol = con.config.tolerances.cone_margin;
    let adapted_ok = !cert.adapted
        || (cert.zero_intersection_margin.unwrap_or(f64::NAN) > 0.0
            && cert.avoidance_margin.unwrap_or(f64::NAN) > 0.0
            && cert.power_n.is_some());
    let pass = cert.min_margin > tol && cert.boundary_samples >= 64 && adapted_ok;
    Ok(ConeCheck {
        certificate: cert,
        pass,
    })
}

/// Frame coordinates spanned by `E^s_f` on the invariant fiber `z = 0`: the
/// vertical directions and the untraded stable directions of the base.
pub fn stable_coordinates_at_zero(t: &SwitchTower) -> Vec<usize> {
    let (stable, _, _) = t.base().frame_groups();
    let traded: Vec<usize> = t.stages().iter().map(|s| s.weak_stable_index).collect();
    let mut coords: Vec<usize> = stable.into_iter().filter(|i| !traded.contains(i)).collect();
    coords.extend(t.base_dim()..t.dim());
    coords
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwitchCheck {
    pub points: usize,
    pub n: usize,
    /// Largest angle between `Ê^s` at `z = 0` and the fiber-side
    /// coordinates.
    pub max_angle_at_0: f64,
    /// Largest angle between `Ê^s` at `z = 1` and `E^s_g × 0`.
    pub max_angle_at_1: f64,
    pub skipped: Option<String>,
    pub pass: bool,
}

pub fn switch_suite(con: &Construction) -> Result<SwitchCheck> {
    let t = &con.tower;
    let n = con.config.iterations.bundle;
    let count = con.config.grids.switch_points;
    if t.mode() == Mode::Flow {
        return Ok(SwitchCheck {
            points: 0,
            n,
            max_angle_at_0: f64::NAN,
            max_angle_at_1: f64::NAN,
            skipped: Some("the bundle switch is stated for the diffeomorphism".into()),
            pass: true,
        });
    }
    let (s, _, _) = t.bundle_dims();
    let at_zero = stable_coordinates_at_zero(t);
    let at_one = t.base().frame_groups().0;
    let angle = |z: f64, coords: &[usize]| -> Result<f64> {
        let pts = fiber_points(t, count, z, con.config.seed);
        let angles: Vec<Result<f64>> = pts
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let req = BundleRequest {
                    dim: s,
                    direction: Direction::Backward,
                    n,
                    seed: point_seed(con.config.seed, i),
                    tolerance: None,
                };
                Ok(angle_to_coordinates(
                    &estimate_bundle(t, p, req)?.basis,
                    coords,
                ))
            })
            .collect();
        angles.into_iter().try_fold(0.0f64, |m, a| Ok(m.max(a?)))
    };
    let a0 = angle(0.0, &at_zero)?;
    let a1 = angle(1.0, &at_one)?;
    let tol = con.config.tolerances.switch_angle;
    Ok(SwitchCheck {
        points: count,
        n,
        max_angle_at_0: a0,
        max_angle_at_1: a1,
        skipped: None,
        pass: a0 < tol && a1 < tol,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovCheck {
    pub point: SkewPoint,
    /// Analytic spectrum on the invariant fiber, ascending.
    pub expected: Vec<f64>,
    pub report: LyapunovReport,
    pub max_error: f64,
    pub pass: bool,
}

/// Exponents on `M × {0}`: the base spectrum (at flow time `ρ(0)` on the
/// suspension) together with `ln λ_k` per stage.
pub fn expected_spectrum_at_zero(t: &SwitchTower) -> Vec<f64> {
    let mut e: Vec<f64> = match t.base() {
        BaseSystem::Linear(l) => l.eigenvalues().iter().map(|v| v.abs().ln()).collect(),
        BaseSystem::Suspension(s) => {
            let r = t.profile().rho(0.0);
            vec![r * s.mu_s().ln(), r * s.mu_u().ln(), 0.0]
        }
    };
    e.extend(t.stages().iter().map(|s| s.profile.lambda.ln()));
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

pub fn lyapunov_suite(con: &Construction) -> Result<LyapunovCheck> {
    let t = &con.tower;
    let p = fiber_points(t, 1, 0.0, con.config.seed).remove(0);
    let report = lyapunov_qr(t, &p, con.config.iterations.lyapunov, con.config.seed)?;
    let expected = expected_spectrum_at_zero(t);
    let max_error = report
        .exponents
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let tol = &con.config.tolerances;
    let pass = max_error < tol.lyapunov && report.det_defect.abs() < tol.sum_identity;
    Ok(LyapunovCheck {
        point: p,
        expected,
        report,
        max_error,
        pass,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderRow {
    pub point: SkewPoint,
    /// Averaged gaps per rung, outer index following `ladder`.
    pub gaps: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominationCheck {
    pub split_dims: Vec<usize>,
    pub n: usize,
    pub points: usize,
    pub min_gaps: Vec<f64>,
    pub ladder: Vec<usize>,
    pub ladder_points: usize,
    /// Points where an averaged gap `ln(σ_{k+1}/σ_k)/n` drops as `n`
    /// doubles.
    pub averaged_violations: usize,
    /// Largest such drop.
    pub worst_drop: f64,
    /// Points where the accumulated gap `ln(σ_{k+1}/σ_k)` drops.
    pub accumulated_violations: usize,
    #[serde(skip)]
    pub rows: Vec<LadderRow>,
    pub pass: bool,
}

pub fn domination_suite(con: &Construction) -> DominationCheck {
    let t = &con.tower;
    let cfg = &con.config;
    let (s, c, u) = t.bundle_dims();
    let dims: Vec<usize> = [s, c, u].into_iter().filter(|d| *d > 0).collect();
    let pts = random_points(t, cfg.grids.domination_points, cfg.seed);
    let n = cfg.iterations.domination;
    let gaps: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|p| domination_margins(t, p, n, &dims))
        .collect();
    let mut min_gaps = vec![f64::INFINITY; dims.len().saturating_sub(1)];
    for g in &gaps {
        for (m, v) in min_gaps.iter_mut().zip(g) {
            *m = m.min(*v);
        }
    }
    let ladder = cfg.iterations.domination_ladder.clone();
    let rows: Vec<LadderRow> = pts
        .iter()
        .take(cfg.grids.monotone_points)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|p| LadderRow {
            point: (*p).clone(),
            gaps: ladder
                .iter()
                .map(|&k| domination_margins(t, p, k, &dims))
                .collect(),
        })
        .collect();
    let slack = cfg.tolerances.monotone_slack;
    let mut averaged = 0;
    let mut accumulated = 0;
    let mut worst_drop = 0.0f64;
    for r in &rows {
        let mut avg_bad = false;
        let mut acc_bad = false;
        for w in 0..ladder.len().saturating_sub(1) {
            for k in 0..min_gaps.len() {
                let (a, b) = (r.gaps[w][k], r.gaps[w + 1][k]);
                if b < a - slack {
                    avg_bad = true;
                    worst_drop = worst_drop.max(a - b);
                }
                if b * (ladder[w + 1] as f64) < a * (ladder[w] as f64) - slack {
                    acc_bad = true;
                }
            }
        }
        averaged += avg_bad as usize;
        accumulated += acc_bad as usize;
    }
    let pass = min_gaps.iter().all(|g| *g > 0.0) && averaged == 0;
    DominationCheck {
        split_dims: dims,
        n,
        points: pts.len(),
        min_gaps,
        ladder,
        ladder_points: rows.len(),
        averaged_violations: averaged,
        worst_drop,
        accumulated_violations: accumulated,
        rows,
        pass,
    }
}

/// Default `μ̂` of the sandwich: geometric mean of `μ` and the base
/// unstable multiplier.
pub fn sandwich_bounds(con: &Construction) -> (f64, f64) {
    let t = &con.tower;
    let prof = t.profile();
    let mu_u = match t.base() {
        BaseSystem::Suspension(s) => s.mu_u(),
        BaseSystem::Linear(l) => l.eigenvalues().last().cloned().unwrap_or(1.0).abs(),
    };
    let lam = con.config.sandwich_lambda.unwrap_or(prof.lambda);
    let mu = con.config.sandwich_mu.unwrap_or((prof.mu * mu_u).sqrt());
    (lam, mu)
}

pub fn sandwich_suite(con: &Construction) -> Result<SandwichReport> {
    let (lam, mu) = sandwich_bounds(con);
    let cfg = &con.config;
    absolute_ph_check(
        &con.tower,
        cfg.grids.sandwich,
        lam,
        mu,
        cfg.iterations.sandwich,
        cfg.seed,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NestedCheck {
    pub report: NestedReport,
    /// Largest angle between `Ê^s` at `z = 0` and the fiber-side
    /// coordinates.
    pub fiber_angle: f64,
    pub pass: bool,
}

pub fn nested_suite(con: &Construction) -> Result<NestedCheck> {
    let t = &con.tower;
    let cfg = &con.config;
    let pts = random_points(t, cfg.grids.nested_points, cfg.seed);
    let report = nested_splitting_check(t, &pts, cfg.iterations.nested);
    let coords = stable_coordinates_at_zero(t);
    let (s, _, _) = t.bundle_dims();
    let fiber = fiber_points(t, cfg.grids.nested_points, 0.0, cfg.seed);
    let angles: Vec<Result<f64>> = fiber
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let req = BundleRequest {
                dim: s,
                direction: Direction::Backward,
                n: cfg.iterations.bundle,
                seed: point_seed(cfg.seed, i),
                tolerance: None,
            };
            Ok(angle_to_coordinates(
                &estimate_bundle(t, p, req)?.basis,
                &coords,
            ))
        })
        .collect();
    let fiber_angle = angles
        .into_iter()
        .try_fold(0.0f64, |m, a| Ok::<f64, crate::error::Error>(m.max(a?)))?;
    let pass = report.pass && fiber_angle < cfg.tolerances.fiber_angle;
    Ok(NestedCheck {
        report,
        fiber_angle,
        pass,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoliationCheck {
    pub tracks: usize,
    /// Tracks started above zero that fall strictly.
    pub falling_above: bool,
    /// Tracks started below zero that rise strictly.
    pub rising_below: bool,
    /// No track changes sign.
    pub no_crossing: bool,
    #[serde(skip)]
    pub data: Vec<Track>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncoherenceCheck {
    pub witness_report: Option<WitnessReport>,
    pub foliation: Option<FoliationCheck>,
    pub skipped: Option<String>,
    #[serde(skip)]
    pub curves: Vec<FallingCurve>,
    pub pass: bool,
}

fn integrator_options(con: &Construction, field: FieldOptions) -> IntegratorOptions {
    let g = &con.config.integrator;
    let c = con.tower.profile().c;
    let mut o = IntegratorOptions::new(g.step, g.z_floor_factor * c, f64::INFINITY);
    o.z_fraction = g.z_fraction;
    o.max_turn_deg = g.max_turn_deg;
    o.max_retries = g.max_retries;
    o.field = field;
    o
}

pub fn incoherence_suite(con: &Construction) -> Result<IncoherenceCheck> {
    let t = &con.tower;
    let cfg = &con.config;
    let skip = if t.mode() == Mode::Flow {
        Some("falling curves are integrated for the diffeomorphism construction")
    } else if t.depth() != 1 {
        Some("falling curves are integrated for single-stage towers")
    } else {
        None
    };
    if let Some(why) = skip {
        return Ok(IncoherenceCheck {
            witness_report: None,
            foliation: None,
            skipped: Some(why.into()),
            curves: Vec::new(),
            pass: true,
        });
    }
    let field = FieldOptions {
        n: cfg.iterations.line_field,
        seed: cfg.seed,
        min_sine: 1e-8,
    };
    let opts = WitnessOptions {
        grid_x: cfg.grids.start_x,
        grid_z: cfg.grids.start_z,
        sign_points: cfg.grids.sign_points,
        falln_levels: cfg.integrator.falln_levels.clone(),
        step: cfg.integrator.step,
        z_floor_factor: cfg.integrator.z_floor_factor,
        half_step_curves: cfg.integrator.half_step_curves,
        field,
        seed: cfg.seed,
    };
    let (mut witness_report, curves) = witness(t, &opts)?;
    let tol = &cfg.tolerances;
    witness_report.length_ok = witness_report.max_length <= witness_report.bound * tol.length_slack;
    witness_report.half_step_ok = witness_report.half_step_rel_change < tol.half_step;
    witness_report.invariance_ok = witness_report.invariance_error < tol.invariance;
    witness_report.pass = witness_report.delta_measured > 0.0
        && witness_report.monotone
        && witness_report.terminal_ok
        && witness_report.length_ok
        && witness_report.sign_exceptions == 0
        && witness_report.half_step_ok
        && witness_report.invariance_ok
        && witness_report.falln.iter().all(|f| f.pass);

    let c = t.profile().c;
    let mut fopts = integrator_options(con, field);
    fopts.max_len = 4.0 * witness_report.bound.max(1.0);
    let x = t.base().canonical(&vec![0.5; t.base_dim()]);
    let tracks = foliation_box_demo(
        t,
        &x,
        (-0.5 * c, 0.5 * c),
        cfg.grids.foliation_tracks,
        &fopts,
    )?;
    let strictly = |z: &[f64], up: bool| {
        z.windows(2)
            .all(|w| if up { w[1] > w[0] } else { w[1] < w[0] })
    };
    let falling_above = tracks
        .iter()
        .filter(|k| k.start_z > 0.0)
        .all(|k| strictly(&k.z, false));
    let rising_below = tracks
        .iter()
        .filter(|k| k.start_z < 0.0)
        .all(|k| strictly(&k.z, true));
    let no_crossing = tracks
        .iter()
        .all(|k| k.z.iter().all(|z| z.signum() == k.start_z.signum()));
    let foliation = FoliationCheck {
        tracks: tracks.len(),
        falling_above,
        rising_below,
        no_crossing,
        data: tracks,
        pass: falling_above && rising_below && no_crossing,
    };
    let pass = witness_report.pass && foliation.pass;
    Ok(IncoherenceCheck {
        witness_report: Some(witness_report),
        foliation: Some(foliation),
        skipped: None,
        curves,
        pass,
    })
}
