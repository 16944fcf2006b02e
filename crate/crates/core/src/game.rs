//! Poly-matrix games.
//!
//! Agent `i` receives `(x^i)^T A^{ij} x^j` from every other agent `j`. The
//! game is zero-sum when `A^{ji} = -(A^{ij})^T` for every pair and the
//! diagonal blocks vanish; in that case the total utility is identically
//! zero and a fully-mixed equilibrium is characterized by
//! `sum_j A^{ij} x*^j = lambda^i 1` with `sum_i lambda^i = 0`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::profile::{PayoffProfile, Profile, StrategyProfile, INTERIOR_EPS};

/// Entrywise tolerance for the zero-sum identity.
pub const ZERO_SUM_TOL: f64 = 1e-12;

/// Residual accepted from the equilibrium linear solve.
pub const NASH_SOLVE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sigma {
    /// `sigma = -1`
    ZeroSum,
    /// `sigma = +1`
    Coordination,
}

impl Sigma {
    pub fn sign(self) -> f64 {
        match self {
            Sigma::ZeroSum => -1.0,
            Sigma::Coordination => 1.0,
        }
    }

    fn from_int(v: i64) -> Option<Self> {
        match v {
            -1 => Some(Sigma::ZeroSum),
            1 => Some(Sigma::Coordination),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec {
    action_counts: Vec<usize>,
    /// `n * n` blocks, row-major over (i, j); `None` means the zero block.
    blocks: Vec<Option<Matrix>>,
    sigma: Sigma,
}

impl GameSpec {
    /// Builds a game from explicit blocks. Omitted pairs are zero.
    ///
    /// Only the structure is checked here (`Error::Dimension`); the zero-sum
    /// identity is reported separately by [`validate_zero_sum`].
    pub fn new(
        action_counts: Vec<usize>,
        blocks: impl IntoIterator<Item = ((usize, usize), Matrix)>,
        sigma: Sigma,
    ) -> Result<Self> {
        let n = action_counts.len();
        if n == 0 {
            return Err(Error::Dimension("game needs at least one agent".into()));
        }
        if let Some(i) = action_counts.iter().position(|&c| c == 0) {
            return Err(Error::Dimension(format!("agent {i} has no actions")));
        }
        let mut slots: Vec<Option<Matrix>> = vec![None; n * n];
        for ((i, j), m) in blocks {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!(
                    "block ({i},{j}) refers to a missing agent (n = {n})"
                )));
            }
            if m.rows() != action_counts[i] || m.cols() != action_counts[j] {
                return Err(Error::Dimension(format!(
                    "block ({i},{j}) is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    action_counts[i],
                    action_counts[j]
                )));
            }
            slots[i * n + j] = Some(m);
        }
        Ok(Self {
            action_counts,
            blocks: slots,
            sigma,
        })
    }

    /// Two-agent game with `A^{12} = m` and `A^{21} = -m^T`.
    pub fn bimatrix_zero_sum(m: Matrix) -> Result<Self> {
        let counts = vec![m.rows(), m.cols()];
        let reflected = m.transpose().scaled(-1.0);
        Self::new(counts, [((0, 1), m), ((1, 0), reflected)], Sigma::ZeroSum)
    }

    pub fn n_agents(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn sigma(&self) -> Sigma {
        self.sigma
    }

    pub fn total_actions(&self) -> usize {
        self.action_counts.iter().sum()
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&Matrix> {
        self.blocks[i * self.n_agents() + j].as_ref()
    }

    /// Block as a dense matrix, materializing zeros.
    pub fn block_dense(&self, i: usize, j: usize) -> Matrix {
        self.block(i, j)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(self.action_counts[i], self.action_counts[j]))
    }

    /// Applies the block operator: component `i` of the result is `sum_j A^{ij} v^j`.
    pub fn apply(&self, v: &Profile) -> Profile {
        let n = self.n_agents();
        let mut out = v.zeros_like();
        for i in 0..n {
            for j in 0..n {
                if let Some(m) = self.block(i, j) {
                    m.mul_vec_acc(v.agent(j), out.agent_mut(i));
                }
            }
        }
        out
    }

    /// The full stacked matrix with blocks `A^{ij}`.
    pub fn stacked(&self) -> Matrix {
        let offsets = self.offsets();
        let total = self.total_actions();
        let n = self.n_agents();
        let mut out = Matrix::zeros(total, total);
        for i in 0..n {
            for j in 0..n {
                if let Some(m) = self.block(i, j) {
                    for r in 0..m.rows() {
                        for c in 0..m.cols() {
                            out[(offsets[i] + r, offsets[j] + c)] = m[(r, c)];
                        }
                    }
                }
            }
        }
        out
    }

    pub(crate) fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        let mut v = vec![0];
        for c in &self.action_counts {
            acc += c;
            v.push(acc);
        }
        v
    }

    fn check_profile(&self, x: &Profile) -> Result<()> {
        x.check_dims(&self.action_counts)
    }

    pub fn to_json(&self) -> GameJson {
        GameJson::from(self)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: GameJson = serde_json::from_str(s).map_err(|e| Error::GameFormat(e.to_string()))?;
        Self::try_from(raw)
    }
}

/// Wire format: `{"agents": n, "actions": [..], "blocks": {"i,j": [[..]]}, "sigma": -1}`.
///
/// Agent indices in block keys are zero-based. Omitted blocks are zero.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GameJson {
    pub agents: usize,
    pub actions: Vec<usize>,
    #[serde(default)]
    pub blocks: BTreeMap<String, Vec<Vec<f64>>>,
    pub sigma: i64,
}

impl From<&GameSpec> for GameJson {
    fn from(g: &GameSpec) -> Self {
        let n = g.n_agents();
        let mut blocks = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                if let Some(m) = g.block(i, j) {
                    blocks.insert(format!("{i},{j}"), m.to_rows());
                }
            }
        }
        GameJson {
            agents: n,
            actions: g.action_counts.clone(),
            blocks,
            sigma: g.sigma.sign() as i64,
        }
    }
}

impl TryFrom<GameJson> for GameSpec {
    type Error = Error;

    fn try_from(raw: GameJson) -> Result<Self> {
        if raw.agents != raw.actions.len() {
            return Err(Error::GameFormat(format!(
                "`agents` = {} but `actions` lists {} entries",
                raw.agents,
                raw.actions.len()
            )));
        }
        let sigma = Sigma::from_int(raw.sigma)
            .ok_or_else(|| Error::GameFormat(format!("`sigma` must be -1 or 1, got {}", raw.sigma)))?;
        let mut blocks = Vec::with_capacity(raw.blocks.len());
        for (key, rows) in raw.blocks {
            let (i, j) = parse_block_key(&key)?;
            let m = Matrix::from_rows(&rows)
                .ok_or_else(|| Error::Dimension(format!("block \"{key}\" has ragged rows")))?;
            blocks.push(((i, j), m));
        }
        GameSpec::new(raw.actions, blocks, sigma)
    }
}

impl Serialize for GameSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GameJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for GameSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = GameJson::deserialize(d)?;
        GameSpec::try_from(raw).map_err(serde::de::Error::custom)
    }
}

fn parse_block_key(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::GameFormat(format!("block key \"{key}\" is not of the form \"i,j\""));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    let i = a.trim().parse().map_err(|_| bad())?;
    let j = b.trim().parse().map_err(|_| bad())?;
    Ok((i, j))
}

/// A block pair whose zero-sum identity fails.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockViolation {
    /// The block `A^{ij}` found inconsistent (diagonal, or the lower member of a pair).
    pub pair: (usize, usize),
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSumReport {
    pub violations: Vec<BlockViolation>,
    pub max_deviation: f64,
}

impl ZeroSumReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `A^{ii} = 0` and `A^{ji} = -(A^{ij})^T` entrywise within [`ZERO_SUM_TOL`].
///
/// For `i < j` the pair is reported as `(j, i)`, i.e. against the block that
/// fails to be the negated transpose of its partner.
pub fn validate_zero_sum(game: &GameSpec) -> ZeroSumReport {
    let n = game.n_agents();
    let mut violations = Vec::new();
    let mut max_deviation = 0.0_f64;
    for i in 0..n {
        let diag = game.block_dense(i, i).max_abs();
        max_deviation = max_deviation.max(diag);
        if diag > ZERO_SUM_TOL {
            violations.push(BlockViolation {
                pair: (i, i),
                deviation: diag,
            });
        }
        for j in (i + 1)..n {
            let upper = game.block_dense(i, j);
            let lower = game.block_dense(j, i);
            let dev = lower.max_abs_diff(&upper.transpose().scaled(-1.0));
            max_deviation = max_deviation.max(dev);
            if dev > ZERO_SUM_TOL {
                violations.push(BlockViolation {
                    pair: (j, i),
                    deviation: dev,
                });
            }
        }
    }
    ZeroSumReport {
        violations,
        max_deviation,
    }
}

/// `sum_{j != i} (x^i)^T A^{ij} x^j`.
pub fn utility(game: &GameSpec, x: &StrategyProfile, agent: usize) -> Result<f64> {
    game.check_profile(x)?;
    let n = game.n_agents();
    if agent >= n {
        return Err(Error::IndexOutOfRange { index: agent, len: n });
    }
    let xi = x.agent(agent);
    let mut total = 0.0;
    for j in (0..n).filter(|&j| j != agent) {
        if let Some(m) = game.block(agent, j) {
            total += dot(xi, &m.mul_vec(x.agent(j)));
        }
    }
    Ok(total)
}

pub fn total_utility(game: &GameSpec, x: &StrategyProfile) -> Result<f64> {
    (0..game.n_agents()).map(|i| utility(game, x, i)).sum()
}

/// Component `i` is `sum_j A^{ij} x^j`.
pub fn aggregate_payoff_field(game: &GameSpec, x: &StrategyProfile) -> Result<PayoffProfile> {
    game.check_profile(x)?;
    Ok(game.apply(x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NashCertificate {
    pub strategy: StrategyProfile,
    /// `lambda^i`, one per agent.
    pub multipliers: Vec<f64>,
    /// `max_i || sum_j A^{ij} x^j - lambda^i 1 ||_inf`.
    pub residual: f64,
    pub multiplier_sum: f64,
    /// `false` when the equilibrium set is a continuum and a representative was picked.
    pub unique: bool,
    /// Residual and multiplier sum both within the tolerance the certificate was checked at.
    pub valid: bool,
}

/// Solves the fully-mixed stationarity system as one dense least-squares problem.
///
/// Unknowns are the stacked strategies followed by the multipliers. Rows are
/// the stationarity conditions, one simplex row per agent and the row
/// `sum_i lambda^i = 0`. Rank-deficient systems return the minimum-norm
/// solution with `unique = false`.
pub fn solve_fully_mixed_nash(game: &GameSpec) -> Result<NashCertificate> {
    let report = validate_zero_sum(game);
    if !report.is_valid() {
        return Err(Error::NotZeroSum {
            violations: report.violations.len(),
            max_deviation: report.max_deviation,
        });
    }
    let n = game.n_agents();
    let total = game.total_actions();
    let offsets = game.offsets();
    let rows = total + n + 1;
    let cols = total + n;
    let stacked = game.stacked();

    let mut m = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    for i in 0..n {
        for r in offsets[i]..offsets[i + 1] {
            for c in 0..total {
                m[(r, c)] = stacked[(r, c)];
            }
            m[(r, total + i)] = -1.0;
        }
        for c in offsets[i]..offsets[i + 1] {
            m[(total + i, c)] = 1.0;
        }
        b[total + i] = 1.0;
        m[(total + n, total + i)] = 1.0;
    }

    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * (rows.max(cols) as f64) * f64::EPSILON * 16.0;
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    let z = svd
        .solve(&b, cutoff)
        .map_err(|e| Error::NoEquilibrium(format!("least-squares solve failed: {e}")))?;
    let lsq_residual = (&m * &z - &b).amax();
    if !lsq_residual.is_finite() || lsq_residual > NASH_SOLVE_TOL {
        return Err(Error::NoEquilibrium(format!(
            "stationarity system is inconsistent (residual {lsq_residual:e})"
        )));
    }

    let strategy = Profile::zeros(game.action_counts()).with_values(z.as_slice()[..total].to_vec());
    for (agent, xi) in strategy.agents().enumerate() {
        if let Some((coord, &value)) = xi.iter().enumerate().find(|(_, v)| **v <= INTERIOR_EPS) {
            return Err(Error::EquilibriumNotInterior { agent, coord, value });
        }
    }
    let multipliers = z.as_slice()[total..].to_vec();
    let field = game.apply(&strategy);
    let residual = stationarity_residual(&field, &multipliers);
    let multiplier_sum: f64 = multipliers.iter().sum();
    Ok(NashCertificate {
        strategy,
        multipliers,
        residual,
        multiplier_sum,
        unique: rank == cols,
        valid: residual <= NASH_SOLVE_TOL && multiplier_sum.abs() <= NASH_SOLVE_TOL,
    })
}

/// Certificate for a candidate fully-mixed equilibrium.
///
/// `lambda^i` is the mean of `sum_j A^{ij} x^j`; the certificate is valid when
/// both the residual and `|sum_i lambda^i|` are within `tol`.
pub fn verify_nash(game: &GameSpec, x: &StrategyProfile, tol: f64) -> Result<NashCertificate> {
    game.check_profile(x)?;
    x.check_fully_mixed()?;
    let field = game.apply(x);
    let multipliers: Vec<f64> = field
        .agents()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let residual = stationarity_residual(&field, &multipliers);
    let multiplier_sum: f64 = multipliers.iter().sum();
    Ok(NashCertificate {
        strategy: x.clone(),
        multipliers,
        residual,
        multiplier_sum,
        unique: true,
        valid: residual <= tol && multiplier_sum.abs() <= tol,
    })
}

fn stationarity_residual(field: &Profile, multipliers: &[f64]) -> f64 {
    field
        .agents()
        .zip(multipliers)
        .flat_map(|(v, l)| v.iter().map(move |a| (a - l).abs()))
        .fold(0.0, f64::max)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
