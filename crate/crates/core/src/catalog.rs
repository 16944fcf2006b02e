//! Built-in games, seeded random zero-sum games and experiment presets.
//!
//! # Random numbers
//!
//! [`SeededRng`] is xoshiro256++ seeded through SplitMix64 (the
//! `rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64` construction):
//!
//! 1. The 256-bit state is four successive SplitMix64 outputs of the seed,
//!    `z += 0x9e3779b97f4a7c15; z = (z ^ z>>30) * 0xbf58476d1ce4e5b9;
//!    z = (z ^ z>>27) * 0x94d049bb133111eb; out = z ^ z>>31`.
//! 2. A uniform double in `[0, 1)` is `(next_u64() >> 11) * 2^-53`.
//! 3. A uniform value in `[lo, hi)` is `lo + (hi - lo) * u`.
//!
//! [`random_zero_sum`] draws the blocks `A^{ij}`, `i < j`, in lexicographic
//! pair order, each row-major, uniform in `[-magnitude, magnitude)`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::dynamics::{FlowParams, Variant};
use crate::error::{Error, Result};
use crate::game::{GameSpec, Sigma};
use crate::integrate::IntegratorConfig;
use crate::matrix::Matrix;
use crate::observe::EquilibriumReference;
use crate::profile::{Profile, StrategyProfile};
use crate::regularizer::RegularizerKind;

/// Seed of the random initial condition of the Matching Pennies presets.
pub const MP3_SEED: u64 = 42;

/// Deterministic generator; see the module docs for the exact algorithm.
#[derive(Clone, Debug)]
pub struct SeededRng(Xoshiro256PlusPlus);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// A game together with its known equilibrium set, when there is one.
#[derive(Clone, Debug)]
pub struct CatalogGame {
    pub spec: GameSpec,
    pub equilibrium: Option<EquilibriumReference>,
}

fn reflected(counts: Vec<usize>, upper: Vec<((usize, usize), Matrix)>) -> GameSpec {
    let mut blocks = Vec::with_capacity(2 * upper.len());
    for ((i, j), m) in upper {
        blocks.push(((j, i), m.transpose().scaled(-1.0)));
        blocks.push(((i, j), m));
    }
    GameSpec::new(counts, blocks, Sigma::ZeroSum).expect("catalog blocks have consistent shapes")
}

/// Two-player weighted Rock-Paper-Scissors.
///
/// `A^{12} = [[0,-a,b],[a,0,-c],[-b,c,0]]`. When `(c,b,a)/(a+b+c)` is
/// fully mixed it is attached as the equilibrium of both agents.
pub fn weighted_rps(a: f64, b: f64, c: f64) -> CatalogGame {
    let m = Matrix::from_rows(&[vec![0.0, -a, b], vec![a, 0.0, -c], vec![-b, c, 0.0]]).unwrap();
    let spec = reflected(vec![3, 3], vec![((0, 1), m)]);
    let s = a + b + c;
    let equilibrium = (s != 0.0)
        .then(|| vec![c / s, b / s, a / s])
        .map(|x| Profile::new(vec![x.clone(), x]))
        .and_then(|x| EquilibriumReference::fixed_point(&spec, x).ok());
    CatalogGame { spec, equilibrium }
}

/// Three-player cyclic Matching Pennies.
///
/// `A^{12} = A^{23} = A^{31} = [[a,-1],[-1,a]]`; the remaining blocks are the
/// negated transposes. Every profile with `x^i = (p, 1-p)` for all agents is a
/// Nash equilibrium for any `a`, so the line is always attached.
pub fn matching_pennies_3(a: f64) -> CatalogGame {
    let m = Matrix::from_rows(&[vec![a, -1.0], vec![-1.0, a]]).unwrap();
    // A^{31} given, so the stored upper block is A^{13} = -(A^{31})^T
    let spec = reflected(
        vec![2, 2, 2],
        vec![((0, 1), m.clone()), ((1, 2), m.clone()), ((0, 2), m.transpose().scaled(-1.0))],
    );
    let equilibrium = EquilibriumReference::line(
        Profile::new(vec![vec![0.0, 1.0]; 3]),
        Profile::new(vec![vec![1.0, -1.0]; 3]),
    )
    .ok();
    CatalogGame { spec, equilibrium }
}

/// Random zero-sum poly-matrix game with uniform blocks.
///
/// # Panics
///
/// If `n_agents < 2`, `action_counts.len() != n_agents` or a count is zero.
pub fn random_zero_sum(seed: u64, n_agents: usize, action_counts: &[usize], magnitude: f64) -> GameSpec {
    assert!(n_agents >= 2, "random games need at least two agents");
    assert_eq!(action_counts.len(), n_agents, "one action count per agent");
    assert!(action_counts.iter().all(|&d| d > 0), "action counts must be positive");
    let mut rng = SeededRng::new(seed);
    let mut upper = Vec::new();
    for i in 0..n_agents {
        for j in i + 1..n_agents {
            let m = Matrix::from_fn(action_counts[i], action_counts[j], |_, _| rng.uniform(-magnitude, magnitude));
            upper.push(((i, j), m));
        }
    }
    reflected(action_counts.to_vec(), upper)
}

/// Interior random initial condition `x^i = (p_i, 1 - p_i)`, `p_i` uniform in `[0.3, 0.7)`.
pub fn mp3_initial_strategy(seed: u64) -> StrategyProfile {
    let mut rng = SeededRng::new(seed);
    Profile::new(
        (0..3)
            .map(|_| {
                let p = rng.uniform(0.3, 0.7);
                vec![p, 1.0 - p]
            })
            .collect(),
    )
}

/// A fully specified experiment.
#[derive(Clone, Debug)]
pub struct PresetExperiment {
    pub name: String,
    pub game: GameSpec,
    pub regularizers: Vec<RegularizerKind>,
    pub x0: StrategyProfile,
    /// Variant and default strength; DFTRL at the largest of `alphas`.
    pub params: FlowParams,
    /// The perturbation strengths explored for this setup.
    pub alphas: Vec<f64>,
    pub integrator: IntegratorConfig,
    pub reference: EquilibriumReference,
}

impl PresetExperiment {
    /// Same experiment with DFTRL strength `alpha` (FTRL when zero).
    pub fn at_alpha(&self, alpha: f64) -> Result<Self> {
        let variant = if alpha == 0.0 { Variant::Ftrl } else { Variant::Dftrl };
        let params = FlowParams::new(variant, alpha, self.params.power_index)?;
        Ok(Self { params, ..self.clone() })
    }

    pub fn with_power_index(&self, m: u32) -> Self {
        let mut p = self.clone();
        p.params.power_index = m;
        p
    }
}

pub const PRESET_NAMES: [&str; 4] = ["rps", "wrps", "mp3", "mp3-euclid"];

pub fn preset(name: &str) -> Result<PresetExperiment> {
    let integrator = IntegratorConfig {
        horizon: 200.0,
        ..IntegratorConfig::default()
    };
    let build = |game: CatalogGame, kind: RegularizerKind, x0: StrategyProfile, alphas: Vec<f64>| {
        let n = game.spec.n_agents();
        let alpha = alphas.iter().cloned().fold(0.0, f64::max);
        PresetExperiment {
            name: name.to_string(),
            regularizers: vec![kind; n],
            x0,
            params: FlowParams::dftrl(alpha, 0).expect("preset alphas are valid"),
            alphas,
            integrator,
            reference: game.equilibrium.expect("catalog presets have equilibria"),
            game: game.spec,
        }
    };
    let entropic = RegularizerKind::Entropic;
    Ok(match name {
        "rps" => build(
            weighted_rps(1.0, 1.0, 1.0),
            entropic,
            Profile::new(vec![vec![0.1, 0.1, 0.8]; 2]),
            vec![0.0, 0.15],
        ),
        "wrps" => build(
            weighted_rps(1.0, 2.0, 3.0),
            entropic,
            Profile::new(vec![vec![0.1, 0.1, 0.8], vec![0.2, 0.6, 0.2]]),
            vec![0.0, 0.05, 0.15],
        ),
        "mp3" => build(matching_pennies_3(1.0), entropic, mp3_initial_strategy(MP3_SEED), vec![0.0, 0.1]),
        "mp3-euclid" => build(
            matching_pennies_3(1.0),
            RegularizerKind::Euclidean,
            mp3_initial_strategy(MP3_SEED),
            vec![0.0, 0.05, 0.1],
        ),
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                available: PRESET_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{aggregate_payoff_field, validate_zero_sum, verify_nash};
    use approx::assert_abs_diff_eq;

    /// SplitMix64 and xoshiro256++ written out from their reference definitions.
    fn reference_stream(seed: u64, n: usize) -> Vec<u64> {
        let mut z = seed;
        let mut s = [0u64; 4];
        for slot in &mut s {
            z = z.wrapping_add(0x9e3779b97f4a7c15);
            let mut v = z;
            v = (v ^ (v >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            v = (v ^ (v >> 27)).wrapping_mul(0x94d049bb133111eb);
            *slot = v ^ (v >> 31);
        }
        (0..n)
            .map(|_| {
                let out = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
                let t = s[1] << 17;
                s[2] ^= s[0];
                s[3] ^= s[1];
                s[1] ^= s[2];
                s[0] ^= s[3];
                s[2] ^= t;
                s[3] = s[3].rotate_left(45);
                out
            })
            .collect()
    }

    #[test]
    fn rng_matches_documented_algorithm() {
        for seed in [0, 1, 42, u64::MAX] {
            let mut rng = SeededRng::new(seed);
            let got: Vec<u64> = (0..16).map(|_| rng.next_u64()).collect();
            assert_eq!(got, reference_stream(seed, 16));
        }
        let mut rng = SeededRng::new(7);
        assert!((0..1000).map(|_| rng.next_f64()).all(|u| (0.0..1.0).contains(&u)));
    }

    #[test]
    fn weighted_rps_equilibria() {
        let g = weighted_rps(1.0, 1.0, 1.0);
        let Some(EquilibriumReference::FixedPoint { x }) = g.equilibrium else {
            panic!("missing equilibrium")
        };
        assert_eq!(x, Profile::uniform(&[3, 3]));

        let g = weighted_rps(1.0, 2.0, 3.0);
        assert!(validate_zero_sum(&g.spec).is_valid());
        let Some(EquilibriumReference::FixedPoint { x }) = g.equilibrium else {
            panic!("missing equilibrium")
        };
        for (a, b) in x.agent(0).iter().zip([0.5, 1.0 / 3.0, 1.0 / 6.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert!(verify_nash(&g.spec, &x, 1e-12).unwrap().residual <= 1e-12);

        assert!(weighted_rps(1.0, -3.0, 1.0).equilibrium.is_none());
        assert!(weighted_rps(0.0, 0.0, 0.0).equilibrium.is_none());
    }

    #[test]
    fn matching_pennies_blocks_and_line() {
        let g = matching_pennies_3(1.0);
        assert!(validate_zero_sum(&g.spec).is_valid());
        let m = Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            assert_eq!(g.spec.block(i, j), Some(&m));
        }
        let half = Profile::uniform(&[2, 2, 2]);
        assert!(verify_nash(&g.spec, &half, 1e-12).unwrap().valid);
        assert!(aggregate_payoff_field(&g.spec, &half).unwrap().max_abs() < 1e-16);
        for a in [1.0, 2.5, -0.5] {
            let g = matching_pennies_3(a);
            let x = Profile::new(vec![vec![0.3, 0.7]; 3]);
            assert!(verify_nash(&g.spec, &x, 1e-12).unwrap().valid, "a = {a}");
        }
    }

    #[test]
    fn random_games_are_reproducible() {
        let a = random_zero_sum(3, 3, &[2, 3, 4], 1.0);
        let b = random_zero_sum(3, 3, &[2, 3, 4], 1.0);
        let c = random_zero_sum(4, 3, &[2, 3, 4], 1.0);
        assert!(validate_zero_sum(&a).is_valid());
        assert_eq!(a, b);
        assert_ne!(a.block(0, 1), c.block(0, 1));
        assert!(a.block_dense(0, 2).max_abs() <= 1.0);
        // first entry is the first documented draw
        let mut rng = SeededRng::new(3);
        assert_eq!(a.block(0, 1).unwrap()[(0, 0)], rng.uniform(-1.0, 1.0));
    }

    #[test]
    fn presets_are_consistent() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            assert!(validate_zero_sum(&p.game).is_valid(), "{name}");
            assert!(p.x0.is_fully_mixed(), "{name}");
            assert_eq!(p.regularizers.len(), p.game.n_agents());
            let anchor = p.reference.anchor(&p.x0).unwrap();
            assert!(verify_nash(&p.game, &anchor, 1e-10).unwrap().valid, "{name}");
            assert_eq!(p.params.alpha, *p.alphas.last().unwrap());
            let json = p.game.to_json();
            let back = GameSpec::try_from(json).unwrap();
            assert_eq!(back, p.game);
        }
        assert_eq!(preset("rps").unwrap().alphas, vec![0.0, 0.15]);
        assert_eq!(preset("wrps").unwrap().alphas, vec![0.0, 0.05, 0.15]);
        assert_eq!(preset("mp3").unwrap().alphas, vec![0.0, 0.1]);
        assert_eq!(preset("mp3-euclid").unwrap().alphas, vec![0.0, 0.05, 0.1]);
        assert_eq!(preset("mp3").unwrap().x0, mp3_initial_strategy(MP3_SEED));
        match preset("nope") {
            Err(Error::UnknownPreset { available, .. }) => assert_eq!(available.len(), 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn at_alpha_switches_variant() {
        let p = preset("rps").unwrap();
        assert_eq!(p.at_alpha(0.0).unwrap().params.variant, Variant::Ftrl);
        let q = p.at_alpha(0.05).unwrap().with_power_index(1);
        assert_eq!((q.params.variant, q.params.alpha, q.params.power_index), (Variant::Dftrl, 0.05, 1));
        assert!(p.at_alpha(-1.0).is_err());
    }
}
