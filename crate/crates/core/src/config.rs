//! Run configuration: JSON on disk, validated into a [`SwitchTower`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::base::{BaseSystem, LinearAnosov, SuspensionFlow};
use crate::cones::{rescale_x_epsilon, FrameModel};
use crate::error::{Error, Result};
use crate::profile::ShearProfile;
use crate::skew::{Mode, SwitchTower};

/// Built-in base systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    CatMap,
    T3OneStable,
    T3TwoStable,
    SuspensionFlow,
}

pub const T3_ONE_STABLE: [[i64; 3]; 3] = [[0, 0, 1], [1, 0, -6], [0, 1, 5]];
pub const T3_TWO_STABLE: [[i64; 3]; 3] = [[0, 0, 1], [1, 0, -5], [0, 1, 6]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub lambda: f64,
    pub eta: f64,
    pub mu: f64,
    pub a: f64,
    /// Flow time `N` of the suspension construction.
    pub n: u32,
    /// Grid used to check the profile when it is built.
    pub grid: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            lambda: 0.2,
            eta: 0.4,
            mu: 2.5,
            a: 0.9,
            n: 1,
            grid: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    pub profile_points: usize,
    pub random_points: usize,
    pub switch_points: usize,
    pub domination_points: usize,
    pub monotone_points: usize,
    pub start_x: usize,
    pub start_z: usize,
    pub sign_points: usize,
    pub sandwich: usize,
    pub nested_points: usize,
    pub foliation_tracks: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            profile_points: 10_000,
            random_points: 10_000,
            switch_points: 100,
            domination_points: 1000,
            monotone_points: 100,
            start_x: 32,
            start_z: 8,
            sign_points: 1000,
            sandwich: 16,
            nested_points: 100,
            foliation_tracks: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Iterations {
    pub bundle: usize,
    pub lyapunov: usize,
    pub domination: usize,
    pub domination_ladder: Vec<usize>,
    pub nested: usize,
    pub sandwich: usize,
    pub line_field: usize,
}

impl Default for Iterations {
    fn default() -> Self {
        Iterations {
            bundle: 60,
            lyapunov: 10_000,
            domination: 32,
            domination_ladder: vec![8, 16, 32, 64],
            nested: 32,
            sandwich: 60,
            line_field: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Integrator {
    pub step: f64,
    pub z_floor_factor: f64,
    pub z_fraction: f64,
    pub max_turn_deg: f64,
    pub max_retries: usize,
    pub half_step_curves: usize,
    pub falln_levels: Vec<usize>,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator {
            step: 0.02,
            z_floor_factor: 1e-8,
            z_fraction: 0.1,
            max_turn_deg: 30.0,
            max_retries: 12,
            half_step_curves: 8,
            falln_levels: vec![0, 1, 2, 3],
        }
    }
}

/// Pass thresholds for each suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub finite_difference: f64,
    pub round_trip: f64,
    pub chain_rule: f64,
    pub cone_margin: f64,
    pub switch_angle: f64,
    pub lyapunov: f64,
    pub sum_identity: f64,
    pub monotone_slack: f64,
    pub length_slack: f64,
    pub half_step: f64,
    pub invariance: f64,
    pub fiber_angle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            finite_difference: 1e-6,
            round_trip: 1e-9,
            chain_rule: 1e-10,
            cone_margin: 1e-3,
            switch_angle: 1e-6,
            lyapunov: 1e-3,
            sum_identity: 1e-8,
            monotone_slack: 1e-12,
            length_slack: 1.05,
            half_step: 5e-3,
            invariance: 1e-2,
            fiber_angle: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub base: BaseKind,
    /// Overrides the built-in matrix of a linear base.
    pub matrix: Option<Vec<Vec<i64>>>,
    /// Number of stable eigenvalues of `matrix`.
    pub stable_count: Option<usize>,
    pub profile: ProfileConfig,
    pub mode: Mode,
    /// Number of switching stages `d`.
    pub depth: usize,
    /// `λ_k` for stages after the first; defaults to halving.
    pub stage_lambdas: Vec<f64>,
    pub doubling: bool,
    pub aperture: f64,
    pub epsilon0: f64,
    pub margin_floor: f64,
    /// `λ̂` and `μ̂` of the absolute sandwich; default `λ` and
    /// `√(μ · μ_u)`.
    pub sandwich_lambda: Option<f64>,
    pub sandwich_mu: Option<f64>,
    pub grids: Grids,
    pub iterations: Iterations,
    pub integrator: Integrator,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub out: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            base: BaseKind::CatMap,
            matrix: None,
            stable_count: None,
            profile: ProfileConfig::default(),
            mode: Mode::Diffeo,
            depth: 1,
            stage_lambdas: Vec::new(),
            doubling: false,
            aperture: 0.5,
            epsilon0: 0.05,
            margin_floor: 1e-3,
            sandwich_lambda: None,
            sandwich_mu: None,
            grids: Grids::default(),
            iterations: Iterations::default(),
            integrator: Integrator::default(),
            tolerances: Tolerances::default(),
            seed: 0,
            out: "out".into(),
        }
    }
}

/// A validated configuration and the objects it describes.
#[derive(Debug, Clone)]
pub struct Construction {
    pub config: RunConfig,
    pub tower: SwitchTower,
    /// `ε` actually used after rescaling.
    pub epsilon: f64,
}

fn matrix_rows<const N: usize>(m: [[i64; N]; N]) -> Vec<Vec<i64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Flow mode on the suspension of the cat map, with `N = 2`.
    pub fn flow() -> Self {
        RunConfig {
            base: BaseKind::SuspensionFlow,
            mode: Mode::Flow,
            profile: ProfileConfig {
                n: 2,
                ..ProfileConfig::default()
            },
            ..RunConfig::default()
        }
    }

    /// Two stable directions on `T³`, one switching stage.
    pub fn two_stable() -> Self {
        RunConfig {
            base: BaseKind::T3TwoStable,
            profile: ProfileConfig {
                eta: 0.7,
                ..ProfileConfig::default()
            },
            ..RunConfig::default()
        }
    }

    /// Two switching stages on `T³ × T²`.
    pub fn multi_switch() -> Self {
        RunConfig {
            depth: 2,
            stage_lambdas: vec![0.1],
            ..RunConfig::two_stable()
        }
    }

    fn base_system(&self) -> Result<BaseSystem> {
        let (default, count) = match self.base {
            BaseKind::CatMap | BaseKind::SuspensionFlow => (vec![vec![2, 1], vec![1, 1]], 1),
            BaseKind::T3OneStable => (matrix_rows(T3_ONE_STABLE), 1),
            BaseKind::T3TwoStable => (matrix_rows(T3_TWO_STABLE), 2),
        };
        let matrix = self.matrix.clone().unwrap_or(default);
        let count = self.stable_count.unwrap_or(count);
        let lin = LinearAnosov::new(matrix, count)?;
        match self.base {
            BaseKind::SuspensionFlow => Ok(BaseSystem::Suspension(SuspensionFlow::new(lin)?)),
            _ => Ok(BaseSystem::Linear(lin)),
        }
    }

    fn profiles(&self) -> Result<Vec<ShearProfile>> {
        if self.depth == 0 {
            return Err(Error::ConfigInvalid("depth must be at least 1".into()));
        }
        let p = &self.profile;
        let mut lambda = p.lambda;
        (0..self.depth)
            .map(|k| {
                if k > 0 {
                    lambda = self
                        .stage_lambdas
                        .get(k - 1)
                        .cloned()
                        .unwrap_or(0.5 * lambda);
                }
                ShearProfile::build(lambda, p.eta, p.mu, p.a, p.n, p.grid)
            })
            .collect()
    }

    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn check_numbers(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::ConfigInvalid(what.to_string()));
        if !(self.aperture > 0.0 && self.aperture < 1.0) {
            return bad("aperture must lie in (0, 1)");
        }
        if !(self.epsilon0 > 0.0) {
            return bad("epsilon0 must be positive");
        }
        if !(self.margin_floor > 0.0) {
            return bad("margin_floor must be positive");
        }
        let it = &self.iterations;
        if it.bundle == 0 || it.lyapunov == 0 || it.domination == 0 || it.line_field == 0 {
            return bad("iteration counts must be positive");
        }
        let g = &self.integrator;
        if !(g.step > 0.0 && g.z_floor_factor > 0.0 && g.z_fraction > 0.0 && g.z_fraction < 1.0) {
            return bad("integrator: step, z_floor_factor > 0 and 0 < z_fraction < 1");
        }
        if !(g.max_turn_deg > 0.0 && g.max_turn_deg < 180.0) {
            return bad("integrator: max_turn_deg must lie in (0, 180)");
        }
        if self.grids.start_x == 0 || self.grids.start_z == 0 {
            return bad("start grid must be nonempty");
        }
        Ok(())
    }

    /// Validate every constraint and build the tower, rescaling `ε` until
    /// the cone margins clear the floor.
    pub fn construct(&self) -> Result<Construction> {
        self.check_numbers()?;
        let base = self.base_system()?;
        let mode = self.mode;
        let tower = SwitchTower::build(base, self.profiles()?, mode, self.doubling, self.epsilon0)?;
        let model = FrameModel::of_tower(&tower);
        let epsilon = rescale_x_epsilon(&model, self.aperture, self.epsilon0, self.margin_floor)?;
        Ok(Construction {
            config: self.clone(),
            tower: tower.with_epsilon(epsilon),
            epsilon,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_json() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c =
            RunConfig::from_json(r#"{"base": "t3-two-stable", "profile": {"eta": 0.7}}"#).unwrap();
        assert_eq!(c.profile.lambda, 0.2);
        assert!(c.construct().is_ok());
    }

    #[test]
    fn unknown_field_is_rejected() {
        assert!(RunConfig::from_json(r#"{"lamda": 0.2}"#).is_err());
    }

    #[test]
    fn lambda_above_eta_names_the_chain() {
        let mut c = RunConfig::default();
        c.profile.lambda = 0.5;
        let msg = c.construct().unwrap_err().to_string();
        assert!(msg.contains("0 < λ < η < 1 < μ"), "{msg}");
    }

    #[test]
    fn flow_needs_long_enough_time() {
        let mut c = RunConfig::flow();
        c.profile.n = 1;
        let msg = c.construct().unwrap_err().to_string();
        assert!(msg.contains("η^N < λ"), "{msg}");
        assert!(RunConfig::flow().construct().is_ok());
    }

    #[test]
    fn presets_build() {
        for c in [
            RunConfig::default(),
            RunConfig::two_stable(),
            RunConfig::multi_switch(),
        ] {
            let built = c.construct().unwrap();
            assert_eq!(built.tower.depth(), c.depth);
        }
    }
}
