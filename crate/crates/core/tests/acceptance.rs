//! Acceptance criteria, one line each. Runs without the libtest harness so
//! every criterion reports even when an earlier one fails; the process
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use skewlab::config::{Construction, RunConfig};
use skewlab::report::{run_report, SUITES};
use skewlab::skew::SkewPoint;
use skewlab::splitting::lyapunov_qr;
use skewlab::suites;

// Pinned tolerances.
const PROFILE_GRID: usize = 10_000;
const FD_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-6;
const ROUND_TRIP_TOL: f64 = 1e-9;
const CHAIN_TOL: f64 = 1e-10;
const CONE_MARGIN: f64 = 1e-3;
const MIN_BOUNDARY_SAMPLES: usize = 64;
const SWITCH_ANGLE: f64 = 1e-6;
const SWITCH_N: usize = 60;
const SWITCH_POINTS: usize = 100;
const LYAPUNOV_N: usize = 10_000;
const LYAPUNOV_TOL: f64 = 1e-3;
const DOMINATION_POINTS: usize = 1000;
const DOMINATION_N: usize = 32;
const LADDER: [usize; 4] = [8, 16, 32, 64];
const LADDER_POINTS: usize = 100;
const Z_FLOOR_FACTOR: f64 = 1e-8;
const LENGTH_SLACK: f64 = 1.05;
const SIGN_POINTS: usize = 1000;
const HALF_STEP_TOL: f64 = 5e-3;
const SANDWICH_GRID: usize = 16;
const FIBER_ANGLE: f64 = 1e-4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    if let Some(l) = limit {
        if took > l {
            o.pass = false;
        }
        o.detail = format!("{}; {:.2?} (limit {:.0?})", o.detail, took, l);
    } else {
        o.detail = format!("{}; {:.2?}", o.detail, took);
    }
    o
}

fn build(c: RunConfig) -> Construction {
    c.construct().expect("shipped configuration builds")
}

fn profiles() -> Outcome {
    let con = build(RunConfig::default());
    let p = con.tower.profile();
    let grid: Vec<f64> = (1..PROFILE_GRID)
        .map(|i| i as f64 / PROFILE_GRID as f64)
        .collect();
    let below = grid.iter().all(|&z| p.h(z) < z);
    let increasing = (0..=PROFILE_GRID).all(|i| p.h_prime(i as f64 / PROFILE_GRID as f64) > 0.0);
    let h3a = p.h(p.h(p.h(p.a)));
    let fd = |f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64| {
        grid.iter()
            .map(|&z| ((f(z + FD_STEP) - f(z - FD_STEP)) / (2.0 * FD_STEP) - df(z)).abs())
            .fold(0.0, f64::max)
    };
    let fd_err = fd(&|z| p.h(z), &|z| p.h_prime(z))
        .max(fd(&|z| p.tau(z), &|z| p.tau_prime(z)))
        .max(fd(&|z| p.rho(z), &|z| p.rho_prime(z)));
    let pass =
        p.h(0.0) == 0.0 && p.h(1.0) == 1.0 && below && increasing && p.c < h3a && fd_err < FD_TOL;
    Outcome {
        pass,
        detail: format!(
            "h(0)={}, h(1)={}, h<z {below}, h'>0 {increasing}, c={:.4} < h³(a)={:.4}, fd error {:.1e}",
            p.h(0.0),
            p.h(1.0),
            p.c,
            h3a,
            fd_err
        ),
    }
}

fn diffeo() -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.grids.random_points = 10_000;
    let con = build(cfg);
    let d = suites::diffeo_suite(&con);
    Outcome {
        pass: d.points == 10_000
            && d.max_round_trip < ROUND_TRIP_TOL
            && d.max_chain_defect < CHAIN_TOL,
        detail: format!(
            "{} points on T³, round trip {:.1e}, chain rule {:.1e}",
            d.points, d.max_round_trip, d.max_chain_defect
        ),
    }
}

fn cones() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, cfg) in [
        ("cat", RunConfig::default()),
        ("flow", RunConfig::flow()),
        ("two-stable", RunConfig::two_stable()),
    ] {
        let con = build(cfg);
        let c = suites::cone_suite(&con).expect("cones build").certificate;
        let mut ok = c.min_margin > CONE_MARGIN && c.boundary_samples >= MIN_BOUNDARY_SAMPLES;
        let mut extra = String::new();
        if c.adapted {
            let zi = c.zero_intersection_margin.unwrap_or(f64::NAN);
            let av = c.avoidance_margin.unwrap_or(f64::NAN);
            ok &= zi > 0.0 && av > 0.0 && c.power_n.is_some();
            extra = format!(
                ", zero-intersection {zi:.3}, power n={:?} margin {av:.3}",
                c.power_n
            );
        }
        pass &= ok;
        parts.push(format!(
            "{name}: ε={} min margin {:.3}{extra}",
            c.epsilon, c.min_margin
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn switch() -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.iterations.bundle = SWITCH_N;
    cfg.grids.switch_points = SWITCH_POINTS;
    let con = build(cfg);
    let s = suites::switch_suite(&con).expect("bundles estimate");
    Outcome {
        pass: s.max_angle_at_0 < SWITCH_ANGLE && s.max_angle_at_1 < SWITCH_ANGLE,
        detail: format!(
            "{} points, n={}, ∠(Ê^s, vertical) at z=0 {:.1e}, ∠(Ê^s, E^s_g×0) at z=1 {:.1e}",
            s.points, s.n, s.max_angle_at_0, s.max_angle_at_1
        ),
    }
}

fn lyapunov() -> Outcome {
    let con = build(RunConfig::default());
    // Analytic targets: h'(0) = λ and the cat map eigenvalues (3 ± √5)/2.
    let lambda = con.config.profile.lambda;
    let root5 = 5f64.sqrt();
    let mut expected = vec![
        lambda.ln(),
        ((3.0 - root5) / 2.0).ln(),
        ((3.0 + root5) / 2.0).ln(),
    ];
    expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p = SkewPoint::new(vec![0.3141, 0.2718], vec![0.0]);
    let r = lyapunov_qr(&con.tower, &p, LYAPUNOV_N, 0).expect("cocycle iterates");
    let err = r
        .exponents
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Outcome {
        pass: err < LYAPUNOV_TOL,
        detail: format!(
            "n={LYAPUNOV_N}, exponents {:.5?} vs {:.5?}, error {:.1e}",
            r.exponents, expected, err
        ),
    }
}

fn domination() -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.grids.domination_points = DOMINATION_POINTS;
    cfg.iterations.domination = DOMINATION_N;
    cfg.iterations.domination_ladder = LADDER.to_vec();
    cfg.grids.monotone_points = LADDER_POINTS;
    let con = build(cfg);
    let d = suites::domination_suite(&con);
    let positive = d.min_gaps.iter().all(|g| *g > 0.0);
    Outcome {
        pass: positive && d.averaged_violations == 0,
        detail: format!(
            "min gaps at n={} over {} points {:.3?}; averaged gap drops as n doubles at {}/{} points (worst drop {:.3}); accumulated gap drops at {}",
            d.n, d.points, d.min_gaps, d.averaged_violations, d.ladder_points, d.worst_drop, d.accumulated_violations
        ),
    }
}

fn incoherence() -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.grids.start_x = 32;
    cfg.grids.start_z = 8;
    cfg.grids.sign_points = SIGN_POINTS;
    cfg.integrator.z_floor_factor = Z_FLOOR_FACTOR;
    let con = build(cfg);
    let c = con.tower.profile().c;
    let r = suites::incoherence_suite(&con).expect("falling curves integrate");
    let l = r.witness_report.expect("single-stage tower");
    let curves_ok = r.curves.len() == 256
        && r.curves
            .iter()
            .all(|k| k.monotone() && k.terminal_z.abs() <= Z_FLOOR_FACTOR * c * (1.0 + 1e-12));
    let bound = l.l_measured as f64 / (1.0 - l.eta);
    let length_ok = r.curves.iter().all(|k| k.length <= bound * LENGTH_SLACK);
    let pass = l.delta_measured > 0.0
        && curves_ok
        && length_ok
        && l.sign_exceptions == 0
        && l.sign_points == SIGN_POINTS
        && l.half_step_rel_change < HALF_STEP_TOL;
    Outcome {
        pass,
        detail: format!(
            "δ={:.4}, L={}, max length {:.4} ≤ {:.2}, {} curves monotone to floor {curves_ok}, sign exceptions {}/{}, half-step change {:.1e}",
            l.delta_measured,
            l.l_measured,
            l.max_length,
            bound * LENGTH_SLACK,
            r.curves.len(),
            l.sign_exceptions,
            l.sign_points,
            l.half_step_rel_change
        ),
    }
}

fn sandwich() -> Outcome {
    let mut cfg = RunConfig::flow();
    cfg.grids.sandwich = SANDWICH_GRID;
    let con = build(cfg);
    let s = suites::sandwich_suite(&con).expect("bundles estimate");
    Outcome {
        pass: s.points == SANDWICH_GRID.pow(4) && s.worst_margin > 0.0,
        detail: format!(
            "{} points, N={}, ε={}, λ̂={} μ̂={:.3}: max‖Df v^s‖ {:.3}, ‖Df v^c‖ ∈ [{:.3}, {:.3}], min‖Df v^u‖ {:.3}; worst margin {:.3} at z={:.3}",
            s.points,
            con.tower.profile().n,
            con.epsilon,
            s.lambda_hat,
            s.mu_hat,
            s.max_stable,
            s.min_center,
            s.max_center,
            s.min_unstable,
            s.worst_margin,
            s.worst_point.as_ref().map(|p| p.z[0]).unwrap_or(f64::NAN)
        ),
    }
}

fn multi_switch() -> Outcome {
    let con = build(RunConfig::multi_switch());
    let n = suites::nested_suite(&con).expect("bundles estimate");
    let levels: Vec<String> = n
        .report
        .levels
        .iter()
        .map(|l| format!("k={} gaps {:.3?}", l.k, l.min_gaps))
        .collect();
    let both = n.report.levels.len() == 2 && n.report.levels.iter().all(|l| l.pass);
    Outcome {
        pass: con.tower.dim() == 5 && both && n.fiber_angle < FIBER_ANGLE,
        detail: format!(
            "T⁵ tower, {}, ∠(Ê^s, fiber directions) at M₀×{{0}} {:.1e}",
            levels.join(", "),
            n.fiber_angle
        ),
    }
}

fn determinism() -> Outcome {
    let con = build(RunConfig::default());
    let run = || run_report(&con, &SUITES).expect("report runs").0.to_json();
    let a = run();
    let b = run();
    Outcome {
        pass: a == b,
        detail: format!("two full reports, {} bytes, identical {}", a.len(), a == b),
    }
}

/// Name, wall-clock limit in seconds, check.
type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("profile suite", Some(1), profiles),
        ("diffeomorphism suite", Some(5), diffeo),
        ("cone suite", Some(30), cones),
        ("bundle switch", None, switch),
        ("lyapunov suite", Some(10), lyapunov),
        ("domination suite", None, domination),
        ("incoherence suite", None, incoherence),
        ("flow sandwich", None, sandwich),
        ("multi-switch", Some(120), multi_switch),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let o = timed(limit.map(Duration::from_secs), f);
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
