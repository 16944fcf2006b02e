//! JSON run configuration.
//!
//! A config names either a preset or an inline game and optionally overrides
//! any part of the experiment:
//!
//! ```json
//! {
//!   "name": "rps-dftrl",
//!   "game": "rps",
//!   "regularizer": "entropic",
//!   "variant": "dftrl",
//!   "alpha": 0.15,
//!   "power_index": 0,
//!   "x0": [[0.1, 0.1, 0.8], [0.1, 0.1, 0.8]],
//!   "integrator": {"method": "rk4", "dt": 0.01, "T": 200, "stride": 10},
//!   "reference": {"mode": "fixed-point", "x": [[0.3333333333333333, 0.3333333333333333, 0.3333333333333333],
//!                                              [0.3333333333333333, 0.3333333333333333, 0.3333333333333333]]},
//!   "output": "out/rps-dftrl",
//!   "seed": 42,
//!   "alphas": [0.0, 0.15]
//! }
//! ```
//!
//! Only `game` is required. For presets every other field defaults to the
//! preset's value; for inline games the defaults are the entropic
//! regularizer, DFTRL with `alpha = 0`, a uniform `x0` (or a seeded random
//! interior `x0` when `seed` is set), the default integrator and the solved
//! fully-mixed Nash equilibrium as reference. `alphas` is read by `sweep` only.
//! Relative `output` paths are resolved against the working directory; the
//! default is `out/<name>`, with `name` defaulting to the config file stem.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{CliError, CliResult};
use crate::catalog::{self, SeededRng};
use crate::dynamics::{FlowParams, FlowSystem, Variant};
use crate::game::{solve_fully_mixed_nash, GameJson, GameSpec};
use crate::integrate::{init_dual_state, IntegratorConfig};
use crate::observe::EquilibriumReference;
use crate::profile::{PayoffProfile, Profile, StrategyProfile};
use crate::regularizer::{RegularizerKind, RegularizerSpec};

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GameSource {
    Preset(String),
    Inline(GameJson),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RegularizerChoice {
    All(RegularizerKind),
    PerAgent(Vec<RegularizerKind>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: Option<String>,
    pub game: GameSource,
    pub regularizer: Option<RegularizerChoice>,
    pub variant: Option<Variant>,
    pub alpha: Option<f64>,
    pub power_index: Option<u32>,
    pub x0: Option<Profile>,
    pub integrator: Option<IntegratorConfig>,
    pub reference: Option<EquilibriumReference>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub alphas: Option<Vec<f64>>,
}

/// A config resolved into ready-to-run objects.
#[derive(Clone, Debug)]
pub struct RunPlan {
    pub name: String,
    pub sys: FlowSystem,
    pub x0: StrategyProfile,
    pub y0: PayoffProfile,
    pub integrator: IntegratorConfig,
    pub reference: EquilibriumReference,
    pub output: PathBuf,
    pub alphas: Option<Vec<f64>>,
    /// The config as read, echoed into `summary.json`.
    pub echo: serde_json::Value,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::config(format!("field `{field}`: {msg}"))
}

impl RunConfig {
    /// Parses JSON; errors carry the offending field path and position.
    pub fn from_json_str(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." || path.is_empty() {
                CliError::config(format!("invalid config json: {inner}"))
            } else {
                field_err(&path, inner)
            }
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Resolves defaults and validates. `stem` names the run when `name` is absent.
    pub fn resolve(&self, stem: &str) -> CliResult<RunPlan> {
        let echo = self.echo();
        let (game, preset) = match &self.game {
            GameSource::Preset(name) => {
                let p = catalog::preset(name).map_err(|e| field_err("game", e))?;
                (p.game.clone(), Some(p))
            }
            GameSource::Inline(raw) => {
                let g = GameSpec::try_from(raw.clone()).map_err(|e| field_err("game", e))?;
                (g, None)
            }
        };
        let n = game.n_agents();

        let kinds: Vec<RegularizerKind> = match (&self.regularizer, &preset) {
            (Some(RegularizerChoice::All(k)), _) => vec![*k; n],
            (Some(RegularizerChoice::PerAgent(v)), _) => {
                if v.len() != n {
                    return Err(field_err("regularizer", format!("{} kinds for {n} agents", v.len())));
                }
                v.clone()
            }
            (None, Some(p)) => p.regularizers.clone(),
            (None, None) => vec![RegularizerKind::Entropic; n],
        };
        let regs = kinds
            .iter()
            .zip(game.action_counts())
            .map(|(&k, &d)| RegularizerSpec::new(k, d))
            .collect::<crate::Result<Vec<_>>>()
            .map_err(|e| field_err("game", e))?;

        let default_params = preset.as_ref().map_or(
            FlowParams {
                variant: Variant::Dftrl,
                alpha: 0.0,
                power_index: 0,
            },
            |p| p.params,
        );
        let params = FlowParams::new(
            self.variant.unwrap_or(default_params.variant),
            self.alpha.unwrap_or(default_params.alpha),
            self.power_index.unwrap_or(default_params.power_index),
        )
        .map_err(|e| field_err("alpha", e))?;

        let sys = FlowSystem::new(game.clone(), regs, params).map_err(|e| field_err("game", e))?;

        let x0 = match (&self.x0, &preset, self.seed) {
            (Some(x), _, _) => x.clone(),
            (None, Some(p), Some(seed)) if p.name.starts_with("mp3") => catalog::mp3_initial_strategy(seed),
            (None, Some(p), _) => p.x0.clone(),
            (None, None, Some(seed)) => random_interior(game.action_counts(), seed),
            (None, None, None) => Profile::uniform(game.action_counts()),
        };
        x0.check_dims(game.action_counts()).map_err(|e| field_err("x0", e))?;
        x0.check_fully_mixed().map_err(|e| field_err("x0", e))?;
        let y0 = init_dual_state(sys.regs(), &x0).map_err(|e| field_err("x0", e))?;

        let integrator = self
            .integrator
            .or(preset.as_ref().map(|p| p.integrator))
            .unwrap_or_default();
        integrator.validate().map_err(|e| field_err("integrator", e))?;

        let reference = match (&self.reference, &preset) {
            (Some(EquilibriumReference::FixedPoint { x }), _) => {
                EquilibriumReference::fixed_point(&game, x.clone()).map_err(|e| field_err("reference", e))?
            }
            (Some(r @ EquilibriumReference::Line { base, direction }), _) => {
                base.check_dims(game.action_counts()).map_err(|e| field_err("reference", e))?;
                EquilibriumReference::line(base.clone(), direction.clone()).map_err(|e| field_err("reference", e))?;
                r.clone()
            }
            (None, Some(p)) => p.reference.clone(),
            (None, None) => {
                let cert = solve_fully_mixed_nash(&game).map_err(|e| field_err("reference", e))?;
                EquilibriumReference::FixedPoint { x: cert.strategy }
            }
        };
        reference.anchor(&x0).map_err(|e| field_err("reference", e))?;

        let name = self.name.clone().unwrap_or_else(|| stem.to_string());
        let output = self.output.clone().unwrap_or_else(|| PathBuf::from("out").join(&name));

        if let Some(alphas) = &self.alphas {
            if let Some((k, a)) = alphas.iter().enumerate().find(|(_, a)| !(**a >= 0.0) || !a.is_finite()) {
                return Err(field_err(&format!("alphas[{k}]"), format!("must be finite and >= 0, got {a}")));
            }
        }

        Ok(RunPlan {
            name,
            sys,
            x0,
            y0,
            integrator,
            reference,
            output,
            alphas: self.alphas.clone(),
            echo,
        })
    }

    fn echo(&self) -> serde_json::Value {
        use serde_json::json;
        let game = match &self.game {
            GameSource::Preset(s) => json!(s),
            GameSource::Inline(g) => serde_json::to_value(g).unwrap_or_default(),
        };
        let regularizer = match &self.regularizer {
            None => serde_json::Value::Null,
            Some(RegularizerChoice::All(k)) => json!(k),
            Some(RegularizerChoice::PerAgent(v)) => json!(v),
        };
        json!({
            "name": self.name,
            "game": game,
            "regularizer": regularizer,
            "variant": self.variant,
            "alpha": self.alpha,
            "power_index": self.power_index,
            "x0": self.x0,
            "integrator": self.integrator,
            "reference": self.reference,
            "output": self.output,
            "seed": self.seed,
            "alphas": self.alphas,
        })
    }
}

/// Fully mixed random profile: normalized weights uniform in `[1, 2)`.
fn random_interior(dims: &[usize], seed: u64) -> StrategyProfile {
    let mut rng = SeededRng::new(seed);
    Profile::new(
        dims.iter()
            .map(|&d| {
                let w: Vec<f64> = (0..d).map(|_| rng.uniform(1.0, 2.0)).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|v| v / s).collect()
            })
            .collect(),
    )
}

/// Loads and resolves a config file.
pub fn load_plan(path: &Path) -> CliResult<RunPlan> {
    let cfg = RunConfig::load(path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    cfg.resolve(stem)
}
