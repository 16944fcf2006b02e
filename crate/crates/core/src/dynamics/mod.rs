//! Continuous-time vector fields on the payoff coordinates `y`.
//!
//! The state of every flow is `y` alone; strategies are always recomputed as
//! `x^i = grad h*^i(y^i)`. Variants:
//!
//! | variant | `dy^i/dt` |
//! |---------|-----------|
//! | FTRL    | `sum_j A^{ij} x^j` |
//! | DFTRL   | FTRL `+ alpha g^i`, `g^i = A^{i j1} H_{j1} A^{j1 j2} ... H_{j(4m+1)} A^{j(4m+1) k} x^k` |
//! | CO      | solves `dy^i - alpha sum_j A^{ij} H_j dy^j = sum_j A^{ij} x^j` |
//! | CEG     | `sum_j A^{ij} grad h*^j(y^j + alpha sum_k A^{jk} x^k)` |
//! | CNM     | FTRL `/ (1 + alpha)` |

mod discrete;

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use discrete::{discrete_step, DiscreteLearner, DiscreteRule};

use crate::error::{Error, Result};
use crate::game::{validate_zero_sum, GameSpec, Sigma};
use crate::profile::{PayoffProfile, StrategyProfile};
use crate::regularizer::{Regularizer, RegularizerKind, RegularizerSpec};

/// Largest acceptable relative residual of the implicit optimistic solve.
pub const CO_RESIDUAL_TOL: f64 = 1e-8;
/// Condition-number ceiling for the implicit optimistic system.
pub const CO_MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Ftrl,
    Dftrl,
    Co,
    Ceg,
    Cnm,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Ftrl, Variant::Dftrl, Variant::Co, Variant::Ceg, Variant::Cnm];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ftrl => "ftrl",
            Variant::Dftrl => "dftrl",
            Variant::Co => "co",
            Variant::Ceg => "ceg",
            Variant::Cnm => "cnm",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams {
    pub variant: Variant,
    /// Perturbation strength; ignored by FTRL.
    pub alpha: f64,
    /// `m` in the `(4m+1)`-Hessian chain; DFTRL only.
    pub power_index: u32,
}

impl FlowParams {
    pub fn new(variant: Variant, alpha: f64, power_index: u32) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(Self {
            variant,
            alpha,
            power_index,
        })
    }

    pub fn ftrl() -> Self {
        Self {
            variant: Variant::Ftrl,
            alpha: 0.0,
            power_index: 0,
        }
    }

    pub fn dftrl(alpha: f64, power_index: u32) -> Result<Self> {
        Self::new(Variant::Dftrl, alpha, power_index)
    }

    /// The strength actually used by the field (zero for FTRL).
    pub fn effective_alpha(&self) -> f64 {
        match self.variant {
            Variant::Ftrl => 0.0,
            _ => self.alpha,
        }
    }
}

/// A zero-sum game, one regularizer per agent and the flow variant.
#[derive(Clone, Debug)]
pub struct FlowSystem {
    game: Arc<GameSpec>,
    regs: Vec<RegularizerSpec>,
    params: FlowParams,
}

impl FlowSystem {
    pub fn new(game: impl Into<Arc<GameSpec>>, regs: Vec<RegularizerSpec>, params: FlowParams) -> Result<Self> {
        let game = game.into();
        if game.sigma() != Sigma::ZeroSum {
            return Err(Error::InvalidParameter("flow systems require a zero-sum game (sigma = -1)".into()));
        }
        let report = validate_zero_sum(&game);
        if !report.is_valid() {
            return Err(Error::NotZeroSum {
                violations: report.violations.len(),
                max_deviation: report.max_deviation,
            });
        }
        if regs.len() != game.n_agents() {
            return Err(Error::Dimension(format!(
                "{} regularizers for {} agents",
                regs.len(),
                game.n_agents()
            )));
        }
        for (i, (r, &d)) in regs.iter().zip(game.action_counts()).enumerate() {
            if r.dim != d {
                return Err(Error::Dimension(format!(
                    "regularizer of agent {i} has dimension {}, agent has {d} actions",
                    r.dim
                )));
            }
        }
        let params = FlowParams::new(params.variant, params.alpha, params.power_index)?;
        Ok(Self { game, regs, params })
    }

    /// Same regularizer kind for every agent.
    pub fn homogeneous(game: impl Into<Arc<GameSpec>>, kind: RegularizerKind, params: FlowParams) -> Result<Self> {
        let game = game.into();
        let regs = game
            .action_counts()
            .iter()
            .map(|&d| RegularizerSpec::new(kind, d))
            .collect::<Result<_>>()?;
        Self::new(game, regs, params)
    }

    pub fn with_params(&self, params: FlowParams) -> Result<Self> {
        let params = FlowParams::new(params.variant, params.alpha, params.power_index)?;
        Ok(Self {
            game: Arc::clone(&self.game),
            regs: self.regs.clone(),
            params,
        })
    }

    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn regs(&self) -> &[RegularizerSpec] {
        &self.regs
    }

    pub fn params(&self) -> FlowParams {
        self.params
    }

    fn check_y(&self, y: &PayoffProfile) -> Result<()> {
        y.check_dims(self.game.action_counts())
    }

    /// `x^i = grad h*^i(y^i)` for every agent.
    pub fn strategies(&self, y: &PayoffProfile) -> Result<StrategyProfile> {
        self.check_y(y)?;
        let mut x = y.zeros_like();
        for (i, reg) in self.regs.iter().enumerate() {
            let xi = reg.mirror_map(y.agent(i))?;
            x.agent_mut(i).copy_from_slice(&xi);
        }
        Ok(x)
    }

    /// Blockwise `H_i(y^i) w^i`.
    pub fn hessian_apply(&self, y: &PayoffProfile, w: &PayoffProfile) -> Result<PayoffProfile> {
        let mut out = w.zeros_like();
        for (i, reg) in self.regs.iter().enumerate() {
            let hi = reg.dual_hessian_apply(y.agent(i), w.agent(i))?;
            out.agent_mut(i).copy_from_slice(&hi);
        }
        Ok(out)
    }

    /// FTRL: `dy^i/dt = sum_j A^{ij} x^j`.
    pub fn ftrl_field(&self, y: &PayoffProfile) -> Result<PayoffProfile> {
        let x = self.strategies(y)?;
        Ok(self.game.apply(&x))
    }

    /// The `(4m+1)`-Hessian perturbation `g`; `m = 0` is `A H A x`.
    pub fn dftrl_perturbation(&self, y: &PayoffProfile, m: u32) -> Result<PayoffProfile> {
        let x = self.strategies(y)?;
        let mut w = self.game.apply(&x);
        for _ in 0..(4 * m + 1) {
            let hw = self.hessian_apply(y, &w)?;
            w = self.game.apply(&hw);
        }
        Ok(w)
    }

    pub fn dftrl_field_with(&self, y: &PayoffProfile, alpha: f64, m: u32) -> Result<PayoffProfile> {
        let v = self.ftrl_field(y)?;
        if alpha == 0.0 {
            return Ok(v);
        }
        let g = self.dftrl_perturbation(y, m)?;
        Ok(v.axpy(alpha, &g))
    }

    /// DFTRL with this system's `alpha` and power index.
    pub fn dftrl_field(&self, y: &PayoffProfile) -> Result<PayoffProfile> {
        self.dftrl_field_with(y, self.params.alpha, self.params.power_index)
    }

    /// Continuous optimistic FTRL.
    ///
    /// The defining relation `dy = A x + alpha A dx` with `dx = H dy` is
    /// implicit in `dy`; it is solved directly as `(I - alpha A H) dy = A x`.
    pub fn co_field(&self, y: &PayoffProfile, alpha: f64) -> Result<PayoffProfile> {
        let v = self.ftrl_field(y)?;
        if alpha == 0.0 {
            return Ok(v);
        }
        let n = self.game.n_agents();
        let offsets = self.game.offsets();
        let total = self.game.total_actions();
        let mut k = DMatrix::<f64>::identity(total, total);
        for j in 0..n {
            let hj = self.regs[j].dual_hessian(y.agent(j))?;
            for i in 0..n {
                if let Some(a) = self.game.block(i, j) {
                    let ah = a.matmul(&hj);
                    for r in 0..ah.rows() {
                        for c in 0..ah.cols() {
                            k[(offsets[i] + r, offsets[j] + c)] -= alpha * ah[(r, c)];
                        }
                    }
                }
            }
        }
        let rhs = nalgebra::DVector::from_column_slice(v.as_slice());
        let singular = |reason: String| Error::Singular { alpha, reason };
        let lu = k.clone().lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| singular("matrix is singular".into()))?;
        let cond = k.lp_norm(1).max(k.amax()) * inv.lp_norm(1).max(inv.amax());
        if !cond.is_finite() || cond > CO_MAX_CONDITION {
            return Err(singular(format!("condition estimate {cond:e}")));
        }
        let sol = &inv * &rhs;
        let resid = (&k * &sol - &rhs).amax() / rhs.amax().max(1.0);
        if !(resid <= CO_RESIDUAL_TOL) {
            return Err(singular(format!("solve residual {resid:e}")));
        }
        Ok(v.with_values(sol.as_slice().to_vec()))
    }

    /// Continuous extra-gradient FTRL.
    pub fn ceg_field(&self, y: &PayoffProfile, alpha: f64) -> Result<PayoffProfile> {
        let v = self.ftrl_field(y)?;
        if alpha == 0.0 {
            return Ok(v);
        }
        let lookahead = y.axpy(alpha, &v);
        let x_ahead = self.strategies(&lookahead)?;
        Ok(self.game.apply(&x_ahead))
    }

    /// Continuous negative-momentum FTRL: a time rescaling of FTRL.
    pub fn cnm_field(&self, y: &PayoffProfile, alpha: f64) -> Result<PayoffProfile> {
        let v = self.ftrl_field(y)?;
        if alpha == 0.0 {
            return Ok(v);
        }
        let scale = 1.0 + alpha;
        Ok(v.with_values(v.as_slice().iter().map(|e| e / scale).collect()))
    }

    /// `dy/dt` of the configured variant.
    pub fn field(&self, y: &PayoffProfile) -> Result<PayoffProfile> {
        let alpha = self.params.alpha;
        match self.params.variant {
            Variant::Ftrl => self.ftrl_field(y),
            Variant::Dftrl => self.dftrl_field(y),
            Variant::Co => self.co_field(y, alpha),
            Variant::Ceg => self.ceg_field(y, alpha),
            Variant::Cnm => self.cnm_field(y, alpha),
        }
    }

    /// `dx^i/dt = H_i(y^i) dy^i/dt` for the configured variant.
    pub fn derived_x_field(&self, y: &PayoffProfile) -> Result<PayoffProfile> {
        let dy = self.field(y)?;
        self.hessian_apply(y, &dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::matrix::Matrix;
    use crate::profile::Profile;
    use approx::assert_abs_diff_eq;

    fn entropic(game: GameSpec, params: FlowParams) -> FlowSystem {
        FlowSystem::homogeneous(game, RegularizerKind::Entropic, params).unwrap()
    }

    fn rps() -> FlowSystem {
        entropic(catalog::weighted_rps(1.0, 1.0, 1.0).spec, FlowParams::ftrl())
    }

    fn log_profile(blocks: &[&[f64]]) -> Profile {
        Profile::new(blocks.iter().map(|b| b.iter().map(|v| v.ln()).collect()).collect())
    }

    fn assert_close(a: &Profile, b: &Profile, tol: f64) {
        let d = a.sub(b).max_abs();
        assert!(d <= tol, "max diff {d:e} > {tol:e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn rejects_non_zero_sum_and_bad_dims() {
        let a = Matrix::identity(2);
        let g = GameSpec::new(vec![2, 2], [((0, 1), a.clone()), ((1, 0), a)], Sigma::ZeroSum).unwrap();
        assert!(matches!(
            FlowSystem::homogeneous(g, RegularizerKind::Entropic, FlowParams::ftrl()),
            Err(Error::NotZeroSum { .. })
        ));
        let g = catalog::weighted_rps(1.0, 1.0, 1.0).spec;
        assert!(matches!(
            FlowSystem::new(g.clone(), vec![RegularizerSpec::entropic(3)], FlowParams::ftrl()),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            FlowSystem::new(g, vec![RegularizerSpec::entropic(3), RegularizerSpec::entropic(2)], FlowParams::ftrl()),
            Err(Error::Dimension(_))
        ));
        assert!(FlowParams::dftrl(-0.1, 0).is_err());
        assert!(FlowParams::dftrl(f64::NAN, 0).is_err());
    }

    #[test]
    fn ftrl_field_examples() {
        let sys = rps();
        let f = sys.ftrl_field(&Profile::zeros(&[3, 3])).unwrap();
        assert!(f.max_abs() < 1e-16);

        let w = entropic(catalog::weighted_rps(1.0, 2.0, 3.0).spec, FlowParams::ftrl());
        let star = [0.5, 1.0 / 3.0, 1.0 / 6.0];
        let y = log_profile(&[&star, &star]);
        let f = w.ftrl_field(&y).unwrap();
        // lambda = 0 for this game
        assert!(f.max_abs() < 1e-15);
        assert!(w.derived_x_field(&y).unwrap().max_abs() < 1e-15);

        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let g = GameSpec::bimatrix_zero_sum(a.clone()).unwrap();
        let sys = FlowSystem::homogeneous(g, RegularizerKind::Euclidean, FlowParams::ftrl()).unwrap();
        let y = Profile::new(vec![vec![0.6, 0.4], vec![0.7, 0.3]]);
        let f = sys.ftrl_field(&y).unwrap();
        // oracle: A^{12} x^2 and -(A^{12})^T x^1 written out
        let oracle = |m: &[[f64; 2]; 2], v: [f64; 2]| [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
        let d1 = oracle(&[[0.0, 1.0], [-1.0, 0.0]], [0.7, 0.3]);
        let d2 = oracle(&[[0.0, 1.0], [-1.0, 0.0]], [0.6, 0.4]);
        assert_close(&f, &Profile::new(vec![d1.to_vec(), d2.to_vec()]), 1e-15);
        assert_close(&f, &Profile::new(vec![vec![0.3, -0.7], vec![0.4, -0.6]]), 1e-15);
    }

    fn random_y(game: &GameSpec, seed: u64) -> Profile {
        let mut rng = catalog::SeededRng::new(seed);
        Profile::new(
            game.action_counts()
                .iter()
                .map(|&d| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect())
                .collect(),
        )
    }

    #[test]
    fn perturbation_vanishes_at_nash() {
        for cg in [catalog::weighted_rps(1.0, 2.0, 3.0), catalog::matching_pennies_3(1.0)] {
            let sys = entropic(cg.spec.clone(), FlowParams::ftrl());
            let star = cg.equilibrium.unwrap().anchor(&Profile::uniform(cg.spec.action_counts())).unwrap();
            let y = Profile::new(star.agents().map(|a| a.iter().map(|v| v.ln() + 0.7).collect()).collect());
            for m in [0, 1] {
                assert!(sys.dftrl_perturbation(&y, m).unwrap().max_abs() < 1e-14);
            }
        }
    }

    #[test]
    fn chain_with_m0_is_the_direct_formula() {
        let game = catalog::random_zero_sum(11, 2, &[3, 4], 1.0);
        let sys = entropic(game.clone(), FlowParams::ftrl());
        for seed in 0..5 {
            let y = random_y(&game, seed);
            let g = sys.dftrl_perturbation(&y, 0).unwrap();
            // sum_j A^{ij} H_j sum_k A^{jk} x^k
            let x = sys.strategies(&y).unwrap();
            let mut direct = y.zeros_like();
            for i in 0..2 {
                for j in 0..2 {
                    let mut inner = vec![0.0; game.action_counts()[j]];
                    for k in 0..2 {
                        game.block_dense(j, k).mul_vec_acc(x.agent(k), &mut inner);
                    }
                    let h = sys.regs()[j].dual_hessian(y.agent(j)).unwrap();
                    game.block_dense(i, j).mul_vec_acc(&h.mul_vec(&inner), direct.agent_mut(i));
                }
            }
            assert_close(&g, &direct, 1e-14);
        }
    }

    /// Naive index summation of the m = 1 chain with five Hessians.
    fn chain_oracle(sys: &FlowSystem, y: &Profile, hessians: usize) -> Profile {
        let game = sys.game();
        let n = game.n_agents();
        let x = sys.strategies(y).unwrap();
        let h: Vec<Matrix> = (0..n).map(|j| sys.regs()[j].dual_hessian(y.agent(j)).unwrap()).collect();
        // vector[j][a] = (A^{j k} x^k)_a, then alternately apply H and A
        let mut cur: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let dj = game.action_counts()[j];
                (0..dj)
                    .map(|a| {
                        let mut s = 0.0;
                        for k in 0..n {
                            let blk = game.block_dense(j, k);
                            for b in 0..game.action_counts()[k] {
                                s += blk[(a, b)] * x.agent(k)[b];
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        for _ in 0..hessians {
            let hv: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    let dj = game.action_counts()[j];
                    (0..dj).map(|a| (0..dj).map(|b| h[j][(a, b)] * cur[j][b]).sum()).collect()
                })
                .collect();
            cur = (0..n)
                .map(|i| {
                    let di = game.action_counts()[i];
                    (0..di)
                        .map(|a| {
                            let mut s = 0.0;
                            for j in 0..n {
                                let blk = game.block_dense(i, j);
                                for b in 0..game.action_counts()[j] {
                                    s += blk[(a, b)] * hv[j][b];
                                }
                            }
                            s
                        })
                        .collect()
                })
                .collect();
        }
        Profile::new(cur)
    }

    #[test]
    fn m1_chain_matches_loop_nest() {
        let sys = rps();
        let y = Profile::new(vec![vec![1.0, 0.0, 0.0], vec![0.0; 3]]);
        let g = sys.dftrl_perturbation(&y, 1).unwrap();
        assert_close(&g, &chain_oracle(&sys, &y, 5), 1e-15);
        assert!(g.max_abs() > 1e-6);

        let game = catalog::random_zero_sum(5, 3, &[2, 3, 2], 2.0);
        let sys = entropic(game.clone(), FlowParams::ftrl());
        let y = random_y(&game, 99);
        assert_close(&sys.dftrl_perturbation(&y, 1).unwrap(), &chain_oracle(&sys, &y, 5), 1e-13);
        assert_close(&sys.dftrl_perturbation(&y, 2).unwrap(), &chain_oracle(&sys, &y, 9), 1e-12);
    }

    #[test]
    fn dftrl_matches_effective_payoff_form() {
        let sys = rps().with_params(FlowParams::dftrl(0.15, 0).unwrap()).unwrap();
        let y = log_profile(&[&[0.1, 0.1, 0.8], &[0.1, 0.1, 0.8]]);
        let f = sys.dftrl_field(&y).unwrap();
        // B^{ij} = A^{ij} + alpha sum_k A^{ik} H_k A^{kj}
        let game = sys.game();
        let x = sys.strategies(&y).unwrap();
        let mut eff = y.zeros_like();
        for i in 0..2 {
            for j in 0..2 {
                let mut b = game.block_dense(i, j);
                for k in 0..2 {
                    let h = sys.regs()[k].dual_hessian(y.agent(k)).unwrap();
                    b = b.add(&game.block_dense(i, k).matmul(&h).matmul(&game.block_dense(k, j)).scaled(0.15));
                }
                b.mul_vec_acc(x.agent(j), eff.agent_mut(i));
            }
        }
        assert_close(&f, &eff, 1e-12);
        assert_eq!(
            sys.dftrl_field_with(&y, 0.0, 0).unwrap(),
            sys.ftrl_field(&y).unwrap()
        );
    }

    #[test]
    fn derived_x_field_closed_forms() {
        assert!(rps().derived_x_field(&Profile::zeros(&[3, 3])).unwrap().max_abs() < 1e-16);

        let game = catalog::random_zero_sum(3, 3, &[3, 2, 4], 1.5);
        let y = random_y(&game, 7);
        let sys = entropic(game.clone(), FlowParams::ftrl());
        let dx = sys.derived_x_field(&y).unwrap();
        let x = sys.strategies(&y).unwrap();
        let v = game.apply(&x);
        for i in 0..3 {
            let xi = x.agent(i);
            let vi = v.agent(i);
            let mean: f64 = xi.iter().zip(vi).map(|(a, b)| a * b).sum();
            for a in 0..xi.len() {
                assert_abs_diff_eq!(dx.agent(i)[a], xi[a] * (vi[a] - mean), epsilon = 1e-12);
            }
            assert_abs_diff_eq!(dx.agent(i).iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        }

        let sys = FlowSystem::homogeneous(game.clone(), RegularizerKind::Euclidean, FlowParams::ftrl()).unwrap();
        let y = Profile::uniform(game.action_counts());
        let y = y.axpy(0.01, &random_y(&game, 8));
        let dx = sys.derived_x_field(&y).unwrap();
        let v = game.apply(&sys.strategies(&y).unwrap());
        for i in 0..3 {
            let vi = v.agent(i);
            let mean = vi.iter().sum::<f64>() / vi.len() as f64;
            for a in 0..vi.len() {
                assert_abs_diff_eq!(dx.agent(i)[a], vi[a] - mean, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn variants_degenerate_at_alpha_zero() {
        let sys = rps();
        let y = log_profile(&[&[0.1, 0.1, 0.8], &[0.2, 0.6, 0.2]]);
        let f = sys.ftrl_field(&y).unwrap();
        assert_eq!(sys.co_field(&y, 0.0).unwrap(), f);
        assert_eq!(sys.ceg_field(&y, 0.0).unwrap(), f);
        assert_eq!(sys.cnm_field(&y, 0.0).unwrap(), f);
        assert_eq!(sys.dftrl_field_with(&y, 0.0, 3).unwrap(), f);
        // the non-shortcut CO path at tiny alpha stays next to FTRL
        assert_close(&sys.co_field(&y, 1e-14).unwrap(), &f, 1e-13);
    }

    #[test]
    fn cnm_is_rescaled_ftrl() {
        let sys = rps();
        let y = log_profile(&[&[0.1, 0.1, 0.8], &[0.2, 0.6, 0.2]]);
        let f = sys.ftrl_field(&y).unwrap();
        assert_close(&sys.cnm_field(&y, 1.0).unwrap(), &f.scaled(0.5), 0.0);
        for alpha in [0.05, 0.5, 2.0] {
            let c = sys.cnm_field(&y, alpha).unwrap().scaled(1.0 + alpha);
            assert_close(&c, &f, 1e-15);
        }
    }

    #[test]
    fn fixed_point_for_all_variants() {
        let cg = catalog::weighted_rps(1.0, 2.0, 3.0);
        let star = [0.5, 1.0 / 3.0, 1.0 / 6.0];
        let y = log_profile(&[&star, &star]);
        for variant in Variant::ALL {
            for alpha in [0.0, 0.1, 1.0] {
                let sys = entropic(cg.spec.clone(), FlowParams::new(variant, alpha, 0).unwrap());
                assert!(sys.derived_x_field(&y).unwrap().max_abs() < 1e-10, "{variant:?} {alpha}");
            }
        }
    }

    fn order_ratio(f: impl Fn(f64) -> f64, alpha: f64) -> f64 {
        f(alpha / 2.0) / f(alpha)
    }

    #[test]
    fn co_and_ceg_agree_with_dftrl_to_first_order() {
        let sys = rps();
        let y = log_profile(&[&[0.1, 0.1, 0.8], &[0.1, 0.1, 0.8]]);
        let diff_co = |a: f64| sys.co_field(&y, a).unwrap().sub(&sys.dftrl_field_with(&y, a, 0).unwrap()).norm();
        let diff_ceg = |a: f64| sys.ceg_field(&y, a).unwrap().sub(&sys.dftrl_field_with(&y, a, 0).unwrap()).norm();
        for alpha in [1e-2, 5e-3] {
            let r = order_ratio(diff_co, alpha);
            assert!((0.2..=0.3).contains(&r), "co ratio {r}");
            let r = order_ratio(diff_ceg, alpha);
            assert!((0.2..=0.3).contains(&r), "ceg ratio {r}");
        }
        // and the discrepancy is O(alpha^2) in absolute terms
        assert!(diff_co(1e-2) < 1e-3);
    }

    #[test]
    fn ceg_leaves_euclidean_domain() {
        let game = catalog::weighted_rps(1.0, 1.0, 1.0).spec;
        let sys = FlowSystem::homogeneous(game, RegularizerKind::Euclidean, FlowParams::ftrl()).unwrap();
        let y = Profile::new(vec![vec![0.05, 0.05, 0.9], vec![0.9, 0.05, 0.05]]);
        assert!(sys.ftrl_field(&y).is_ok());
        assert!(matches!(sys.ceg_field(&y, 1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn variant_names() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{}\"", v.name()));
        }
        assert!("FTRL".parse::<Variant>().is_err());
    }

    #[test]
    fn ftrl_ignores_alpha() {
        let p = FlowParams::new(Variant::Ftrl, 0.7, 0).unwrap();
        assert_eq!(p.effective_alpha(), 0.0);
        let sys = rps().with_params(p).unwrap();
        let y = log_profile(&[&[0.1, 0.1, 0.8], &[0.2, 0.6, 0.2]]);
        assert_eq!(sys.field(&y).unwrap(), sys.ftrl_field(&y).unwrap());
    }
}
