//! Per-agent vectors stored contiguously.
//!
//! Both strategies `x^i` and cumulative payoffs `y^i` are lists of one
//! vector per agent. [`Profile`] keeps them in a single flat buffer with a
//! shared offset table so that integrators can treat the whole state as one
//! vector while the game code still addresses agents individually.

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Interior threshold: a strategy is fully mixed when every entry is at least this.
pub const INTERIOR_EPS: f64 = 1e-9;

/// Tolerance on `sum_a x_a = 1` for strategy vectors.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
    offsets: Arc<[usize]>,
}

/// Strategy vectors, one point of each agent's simplex.
pub type StrategyProfile = Profile;
/// Dual (cumulative payoff) vectors; unconstrained.
pub type PayoffProfile = Profile;

fn offsets_for(dims: &[usize]) -> Arc<[usize]> {
    let mut offsets = Vec::with_capacity(dims.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for d in dims {
        acc += d;
        offsets.push(acc);
    }
    offsets.into()
}

impl Profile {
    pub fn new(blocks: Vec<Vec<f64>>) -> Self {
        let dims: Vec<usize> = blocks.iter().map(Vec::len).collect();
        let values = blocks.into_iter().flatten().collect();
        Self {
            values,
            offsets: offsets_for(&dims),
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let offsets = offsets_for(dims);
        Self {
            values: vec![0.0; offsets[offsets.len() - 1]],
            offsets,
        }
    }

    /// Uniform strategy for every agent.
    pub fn uniform(dims: &[usize]) -> Self {
        Self::new(dims.iter().map(|&d| vec![1.0 / d as f64; d]).collect())
    }

    /// Profile with the same layout as `self` and the given flat values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len(), "flat length mismatch");
        Self {
            values,
            offsets: Arc::clone(&self.offsets),
        }
    }

    pub fn zeros_like(&self) -> Self {
        self.with_values(vec![0.0; self.values.len()])
    }

    pub fn n_agents(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn dims(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.values[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn agent_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn agents(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.offsets
            .windows(2)
            .map(move |w| &self.values[w[0]..w[1]])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        self.agents().map(<[f64]>::to_vec).collect()
    }

    pub fn same_layout(&self, other: &Profile) -> bool {
        self.offsets == other.offsets
    }

    /// `self + scale * other`, elementwise over the flat buffer.
    pub fn axpy(&self, scale: f64, other: &Profile) -> Profile {
        debug_assert!(self.same_layout(other));
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + scale * b)
                .collect(),
        )
    }

    pub fn scaled(&self, scale: f64) -> Profile {
        self.with_values(self.values.iter().map(|v| v * scale).collect())
    }

    pub fn sub(&self, other: &Profile) -> Profile {
        self.axpy(-1.0, other)
    }

    pub fn dot(&self, other: &Profile) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Checks the per-agent layout against `dims`.
    pub fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::Dimension(format!(
                "profile has block sizes {:?}, expected {:?}",
                self.dims(),
                dims
            )));
        }
        Ok(())
    }

    /// Every agent's vector sums to one within [`SIMPLEX_TOL`] with nonnegative entries.
    pub fn check_simplex(&self) -> Result<()> {
        for (agent, x) in self.agents().enumerate() {
            let sum: f64 = x.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL || x.iter().any(|v| *v < 0.0) {
                return Err(Error::NotOnSimplex { agent, sum });
            }
        }
        Ok(())
    }

    /// Simplex check plus every entry `>= INTERIOR_EPS`.
    pub fn check_fully_mixed(&self) -> Result<()> {
        self.check_simplex()?;
        for (agent, x) in self.agents().enumerate() {
            if let Some((coord, &value)) = x.iter().enumerate().find(|(_, v)| **v < INTERIOR_EPS) {
                return Err(Error::NotFullyMixed { agent, coord, value });
            }
        }
        Ok(())
    }

    pub fn is_fully_mixed(&self) -> bool {
        self.check_fully_mixed().is_ok()
    }
}

impl Serialize for Profile {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Profile {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Vec::<Vec<f64>>::deserialize(deserializer).map(Profile::new)
    }
}
