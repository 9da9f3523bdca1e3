//! Versioned JSON reports and CSV exports.
//!
//! Reports hold no timings or host details, so the same configuration
//! and seed give byte-identical output.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Construction, RunConfig};
use crate::error::{Error, Result};
use crate::incoherence::{FallingCurve, Track};
use crate::profile::ShearProfile;
use crate::splitting::LyapunovReport;
use crate::suites::{self, LadderRow};

pub const SCHEMA_VERSION: u32 = 1;

/// Suite names accepted by `--suite`, in execution order.
pub const SUITES: [&str; 9] = [
    "profiles",
    "diffeo",
    "cones",
    "switch",
    "lyapunov",
    "domination",
    "sandwich",
    "nested",
    "incoherence",
];

fn property(suite: &str) -> &'static str {
    match suite {
        "profiles" => "fiber map: h(0) = 0, h(1) = 1, h(z) < z, h' > 0, c < h³(a), derivatives match finite differences",
        "diffeo" => "f is a diffeomorphism: inverse round trip and chain rule",
        "cones" => "strict cone inclusions for the sheared base maps g_t, t ∈ [−1, 1]",
        "switch" => "bundle switch: E^s_f is vertical on z = 0 and horizontal on z = 1",
        "lyapunov" => "Lyapunov spectrum on the invariant fiber z = 0",
        "domination" => "finite-time domination: singular-value gaps of Dfⁿ",
        "sandwich" => "absolute partial hyperbolicity of the flow construction",
        "nested" => "nested dominated splittings of the multi-switch tower",
        "incoherence" => "falling curves reach z = 0 in finite length from both sides",
        _ => "",
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Section {
    pub suite: String,
    pub property: String,
    pub pass: bool,
    pub skipped: Option<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub data: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProfileSummary {
    pub lambda: f64,
    pub eta: f64,
    pub mu: f64,
    pub a: f64,
    pub n: u32,
    pub c: f64,
    pub h_a: f64,
    pub h2_a: f64,
    pub h3_a: f64,
}

impl From<&ShearProfile> for ProfileSummary {
    fn from(p: &ShearProfile) -> Self {
        ProfileSummary {
            lambda: p.lambda,
            eta: p.eta,
            mu: p.mu,
            a: p.a,
            n: p.n,
            c: p.c,
            h_a: p.h_a,
            h2_a: p.h2_a,
            h3_a: p.h3_a,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConstructionSummary {
    pub base_dim: usize,
    pub total_dim: usize,
    pub depth: usize,
    /// `(stable, center, unstable)` dimensions of the splitting of `f`.
    pub bundle_dims: (usize, usize, usize),
    pub epsilon: f64,
    pub seam_defect: f64,
    pub profiles: Vec<ProfileSummary>,
}

impl From<&Construction> for ConstructionSummary {
    fn from(c: &Construction) -> Self {
        let t = &c.tower;
        ConstructionSummary {
            base_dim: t.base_dim(),
            total_dim: t.dim(),
            depth: t.depth(),
            bundle_dims: t.bundle_dims(),
            epsilon: c.epsilon,
            seam_defect: t.seam_defect(),
            profiles: t.stages().iter().map(|s| (&s.profile).into()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub manifest: RunConfig,
    pub construction: ConstructionSummary,
    pub sections: Vec<Section>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// CSV tables produced alongside a section.
#[derive(Debug, Clone, Default)]
pub struct Exports {
    pub files: Vec<(String, String)>,
}

impl Exports {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

fn csv_table(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// `z, h, h', τ, τ', ρ, ρ'` on a uniform grid.
pub fn profile_csv(p: &ShearProfile, points: usize) -> Result<String> {
    csv_table(
        &names(&["z", "h", "h_prime", "tau", "tau_prime", "rho", "rho_prime"]),
        p.table(points).into_iter().map(|r| r.to_vec()),
    )
}

pub fn lyapunov_csv(r: &LyapunovReport) -> Result<String> {
    let mut header = names(&["step"]);
    header.extend((0..r.exponents.len()).map(|k| format!("exponent_{k}")));
    csv_table(
        &header,
        r.running.iter().map(|(n, v)| {
            let mut row = vec![*n as f64];
            row.extend(v);
            row
        }),
    )
}

/// One row per sample: curve index, arclength, z, then base coordinates.
pub fn curves_csv(curves: &[FallingCurve]) -> Result<String> {
    let dim = curves.first().map(|c| c.points[0].x.len()).unwrap_or(0);
    let mut header = names(&["curve", "arclength", "z"]);
    header.extend((0..dim).map(|k| format!("x{k}")));
    let rows = curves.iter().enumerate().flat_map(|(i, c)| {
        c.points.iter().zip(&c.arclength).map(move |(p, s)| {
            let mut row = vec![i as f64, *s, p.z[0]];
            row.extend(&p.x);
            row
        })
    });
    csv_table(&header, rows)
}

pub fn tracks_csv(tracks: &[Track]) -> Result<String> {
    let rows = tracks.iter().enumerate().flat_map(|(i, t)| {
        t.arclength
            .iter()
            .zip(&t.z)
            .map(move |(s, z)| vec![i as f64, t.start_z, *s, *z])
    });
    csv_table(&names(&["track", "start_z", "arclength", "z"]), rows)
}

/// Averaged gaps at each rung of the ladder, one row per point and rung.
pub fn ladder_csv(rows: &[LadderRow], ladder: &[usize]) -> Result<String> {
    let gaps = rows.first().map(|r| r.gaps[0].len()).unwrap_or(0);
    let mut header = names(&["point", "z0", "n"]);
    header.extend((0..gaps).map(|k| format!("gap_{k}")));
    let out = rows.iter().enumerate().flat_map(|(i, r)| {
        r.gaps.iter().zip(ladder).map(move |(g, n)| {
            let mut row = vec![i as f64, r.point.z[0], *n as f64];
            row.extend(g);
            row
        })
    });
    csv_table(&header, out)
}

fn tolerances(config: &RunConfig, keys: &[&str]) -> BTreeMap<String, f64> {
    let all = serde_json::to_value(&config.tolerances).expect("tolerances serialize");
    let mut out = BTreeMap::new();
    for k in keys {
        if let Some(v) = all.get(*k).and_then(Value::as_f64) {
            out.insert(k.to_string(), v);
        }
    }
    out
}

fn section(
    suite: &str,
    config: &RunConfig,
    keys: &[&str],
    pass: bool,
    skipped: Option<String>,
    data: Value,
) -> Section {
    let mut tol = tolerances(config, keys);
    if suite == "cones" {
        tol.insert("margin_floor".into(), config.margin_floor);
    }
    Section {
        suite: suite.into(),
        property: property(suite).into(),
        pass,
        skipped,
        tolerances: tol,
        data,
    }
}

fn json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("suite data serializes")
}

/// Run one suite and build its section and exports.
pub fn run_suite(name: &str, con: &Construction) -> Result<(Section, Exports)> {
    let cfg = &con.config;
    let mut ex = Exports::default();
    let sec = match name {
        "profiles" => {
            let checks = suites::profile_suite(con);
            for (k, s) in con.tower.stages().iter().enumerate() {
                ex.files
                    .push((format!("profile_{k}.csv"), profile_csv(&s.profile, 1001)?));
            }
            let pass = checks.iter().all(|c| c.pass);
            section(name, cfg, &["finite_difference"], pass, None, json(&checks))
        }
        "diffeo" => {
            let c = suites::diffeo_suite(con);
            section(
                name,
                cfg,
                &["round_trip", "chain_rule"],
                c.pass,
                None,
                json(&c),
            )
        }
        "cones" => {
            let c = suites::cone_suite(con)?;
            section(name, cfg, &["cone_margin"], c.pass, None, json(&c))
        }
        "switch" => {
            let c = suites::switch_suite(con)?;
            section(
                name,
                cfg,
                &["switch_angle"],
                c.pass,
                c.skipped.clone(),
                json(&c),
            )
        }
        "lyapunov" => {
            let c = suites::lyapunov_suite(con)?;
            ex.files
                .push(("lyapunov_running.csv".into(), lyapunov_csv(&c.report)?));
            let mut data = json(&c);
            data["report"]
                .as_object_mut()
                .expect("report is an object")
                .remove("running");
            section(name, cfg, &["lyapunov", "sum_identity"], c.pass, None, data)
        }
        "domination" => {
            let c = suites::domination_suite(con);
            ex.files.push((
                "domination_ladder.csv".into(),
                ladder_csv(&c.rows, &c.ladder)?,
            ));
            section(name, cfg, &["monotone_slack"], c.pass, None, json(&c))
        }
        "sandwich" => {
            let r = suites::sandwich_suite(con)?;
            let pass = r.skipped.is_some() || r.pass;
            section(name, cfg, &[], pass, r.skipped.clone(), json(&r))
        }
        "nested" => {
            let c = suites::nested_suite(con)?;
            section(name, cfg, &["fiber_angle"], c.pass, None, json(&c))
        }
        "incoherence" => {
            let c = suites::incoherence_suite(con)?;
            ex.files
                .push(("falling_curves.csv".into(), curves_csv(&c.curves)?));
            if let Some(f) = &c.foliation {
                ex.files
                    .push(("foliation_box.csv".into(), tracks_csv(&f.data)?));
            }
            section(
                name,
                cfg,
                &["length_slack", "half_step", "invariance"],
                c.pass,
                c.skipped.clone(),
                json(&c),
            )
        }
        other => {
            return Err(Error::ConfigInvalid(format!(
                "unknown suite `{other}`; expected one of {}",
                SUITES.join(", ")
            )))
        }
    };
    Ok((sec, ex))
}

/// Run the named suites in order and assemble the report.
pub fn run_report(con: &Construction, names: &[&str]) -> Result<(VerificationReport, Exports)> {
    let mut sections = Vec::new();
    let mut exports = Exports::default();
    for n in names {
        let (s, e) = run_suite(n, con)?;
        sections.push(s);
        exports.files.extend(e.files);
    }
    let pass = sections.iter().all(|s| s.pass);
    Ok((
        VerificationReport {
            schema_version: SCHEMA_VERSION,
            manifest: con.config.clone(),
            construction: con.into(),
            sections,
            pass,
        },
        exports,
    ))
}
