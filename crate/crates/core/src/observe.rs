//! Conserved and dissipated quantities, evaluated pointwise or along a trajectory.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::FlowSystem;
use crate::error::{Error, Result};
use crate::game::{utility, verify_nash, GameSpec, NASH_SOLVE_TOL};
use crate::integrate::Trajectory;
use crate::profile::{PayoffProfile, Profile, StrategyProfile, INTERIOR_EPS};
use crate::regularizer::Regularizer;

/// The equilibrium that distances and the Fenchel coupling are measured against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EquilibriumReference {
    /// A single fully-mixed Nash equilibrium `x*`.
    FixedPoint { x: StrategyProfile },
    /// The set `{ base + p * direction }`, e.g. `(p, 1-p)` for every agent.
    Line { base: Profile, direction: Profile },
}

impl EquilibriumReference {
    /// Fixed point after checking that `x` is a fully-mixed Nash of `game`.
    pub fn fixed_point(game: &GameSpec, x: StrategyProfile) -> Result<Self> {
        x.check_fully_mixed()?;
        let cert = verify_nash(game, &x, NASH_SOLVE_TOL)?;
        if !cert.valid {
            return Err(Error::NoEquilibrium(format!(
                "reference point has stationarity residual {:e}",
                cert.residual
            )));
        }
        Ok(Self::FixedPoint { x })
    }

    pub fn line(base: Profile, direction: Profile) -> Result<Self> {
        if !base.same_layout(&direction) && base.dims() != direction.dims() {
            return Err(Error::Dimension("line base and direction differ in layout".into()));
        }
        if direction.norm() == 0.0 {
            return Err(Error::InvalidParameter("line direction is zero".into()));
        }
        let direction = base.with_values(direction.into_values());
        Ok(Self::Line { base, direction })
    }

    /// The point of the reference set used as `x*` for the Fenchel coupling.
    ///
    /// For a line this is the orthogonal projection of `x`, with the line
    /// parameter clamped so that every coordinate stays `>= INTERIOR_EPS`.
    pub fn anchor(&self, x: &StrategyProfile) -> Result<StrategyProfile> {
        match self {
            Self::FixedPoint { x: star } => {
                x.check_dims(&star.dims())?;
                Ok(star.clone())
            }
            Self::Line { base, direction } => {
                x.check_dims(&base.dims())?;
                let (lo, hi) = self.interior_range()?;
                let p = self.line_parameter(x).clamp(lo, hi);
                Ok(base.axpy(p, direction))
            }
        }
    }

    fn line_parameter(&self, x: &StrategyProfile) -> f64 {
        match self {
            Self::FixedPoint { .. } => 0.0,
            Self::Line { base, direction } => {
                let diff = base.with_values(x.as_slice().to_vec()).sub(base);
                diff.dot(direction) / direction.dot(direction)
            }
        }
    }

    fn interior_range(&self) -> Result<(f64, f64)> {
        let Self::Line { base, direction } = self else {
            return Ok((0.0, 0.0));
        };
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        // slightly above the threshold so rounding of `b + p d` cannot dip below it
        let floor = INTERIOR_EPS * (1.0 + 1e-6);
        for (&b, &d) in base.as_slice().iter().zip(direction.as_slice()) {
            let edge = (floor - b) / d;
            if d > 0.0 {
                lo = lo.max(edge);
            } else if d < 0.0 {
                hi = hi.min(edge);
            } else if b < floor {
                lo = f64::INFINITY;
            }
        }
        if lo > hi {
            return Err(Error::EquilibriumNotInterior {
                agent: 0,
                coord: 0,
                value: lo,
            });
        }
        Ok((lo, hi))
    }
}

/// `H = sum_{i,j} <grad h*^j(y^j), A^{ji} x^i>` with `x` and `y` independent.
pub fn hamiltonian(sys: &FlowSystem, x: &StrategyProfile, y: &PayoffProfile) -> Result<f64> {
    x.check_dims(sys.game().action_counts())?;
    let m = sys.strategies(y)?;
    Ok(m.dot(&sys.game().apply(x)))
}

/// `H` on the constraint surface `x = grad h*(y)`.
pub fn energy(sys: &FlowSystem, y: &PayoffProfile) -> Result<f64> {
    let x = sys.strategies(y)?;
    hamiltonian(sys, &x, y)
}

/// Per-agent coordinate sums.
pub fn simplex_sums(x: &StrategyProfile) -> Vec<f64> {
    x.agents().map(|a| a.iter().sum()).collect()
}

/// `G_F = sum_i h(x*^i) + h*(y^i) - <y^i, x*^i>` against a fixed equilibrium.
pub fn fenchel_coupling(sys: &FlowSystem, reference: &EquilibriumReference, y: &PayoffProfile) -> Result<f64> {
    match reference {
        EquilibriumReference::FixedPoint { x } => fenchel_coupling_at(sys, x, y),
        EquilibriumReference::Line { .. } => Err(Error::InvalidParameter(
            "fenchel coupling needs a single equilibrium; anchor the line first".into(),
        )),
    }
}

pub fn fenchel_coupling_at(sys: &FlowSystem, x_star: &StrategyProfile, y: &PayoffProfile) -> Result<f64> {
    y.check_dims(sys.game().action_counts())?;
    x_star.check_dims(sys.game().action_counts())?;
    for (agent, xs) in x_star.agents().enumerate() {
        if let Some((coord, &value)) = xs.iter().enumerate().find(|(_, v)| **v < INTERIOR_EPS) {
            return Err(Error::EquilibriumNotInterior { agent, coord, value });
        }
    }
    let mut total = 0.0;
    for (i, reg) in sys.regs().iter().enumerate() {
        let xs = x_star.agent(i);
        let yi = y.agent(i);
        let pair: f64 = yi.iter().zip(xs).map(|(a, b)| a * b).sum();
        total += reg.primal_value(xs)? + reg.dual_value(yi)? - pair;
    }
    Ok(total)
}

/// `sum_i <grad h*^i(y^i) - x*^i, v^i>`: the rate of change of `G_F` along `v`.
pub fn fenchel_rate(sys: &FlowSystem, x_star: &StrategyProfile, y: &PayoffProfile, v: &PayoffProfile) -> Result<f64> {
    let x = sys.strategies(y)?;
    x_star.check_dims(&x.dims())?;
    Ok(x.sub(x_star).dot(v))
}

/// Euclidean distance from `x` to the reference set.
pub fn distance_to_reference(reference: &EquilibriumReference, x: &StrategyProfile) -> Result<f64> {
    match reference {
        EquilibriumReference::FixedPoint { x: star } => {
            x.check_dims(&star.dims())?;
            Ok(star.with_values(x.as_slice().to_vec()).sub(star).norm())
        }
        EquilibriumReference::Line { base, direction } => {
            x.check_dims(&base.dims())?;
            let p = reference.line_parameter(x);
            let on_line = base.axpy(p, direction);
            Ok(base.with_values(x.as_slice().to_vec()).sub(&on_line).norm())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    Energy,
    SimplexSum(usize),
    Fenchel,
    Distance,
    Utility(usize),
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Energy => "energy".into(),
            Observable::SimplexSum(i) => format!("gs_{i}"),
            Observable::Fenchel => "fenchel".into(),
            Observable::Distance => "dist".into(),
            Observable::Utility(i) => format!("utility_{i}"),
        }
    }

    /// Every observable for an `n`-agent game, in CSV order.
    pub fn standard(n: usize) -> Vec<Observable> {
        let mut v = vec![Observable::Energy];
        v.extend((0..n).map(Observable::SimplexSum));
        v.push(Observable::Fenchel);
        v.push(Observable::Distance);
        v.extend((0..n).map(Observable::Utility));
        v
    }
}

impl std::str::FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let indexed = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.parse::<usize>().ok());
        match s {
            "energy" => Ok(Observable::Energy),
            "fenchel" => Ok(Observable::Fenchel),
            "dist" => Ok(Observable::Distance),
            _ => indexed("gs_")
                .map(Observable::SimplexSum)
                .or_else(|| indexed("utility_").map(Observable::Utility))
                .ok_or_else(|| Error::InvalidParameter(format!("unknown observable `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ObservableSeries {
    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|v(t) - v(0)|`, relative to `max(1, |v(0)|)`.
    pub fn relative_drift(&self) -> f64 {
        let Some(&v0) = self.values.first() else {
            return 0.0;
        };
        let drift = self.values.iter().fold(0.0_f64, |m, v| m.max((v - v0).abs()));
        drift / v0.abs().max(1.0)
    }

    /// Largest increase between consecutive samples (negative when strictly decreasing).
    pub fn max_increase(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluates `obs` at every recorded time of `traj`.
///
/// The Fenchel coupling against a line uses the anchor of the first recorded strategy.
pub fn series(
    traj: &Trajectory,
    obs: Observable,
    sys: &FlowSystem,
    reference: &EquilibriumReference,
) -> Result<ObservableSeries> {
    let first = traj
        .x_states
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
    let anchor = match obs {
        Observable::Fenchel => Some(reference.anchor(first)?),
        _ => None,
    };
    let n = sys.game().n_agents();
    let check_agent = |i: usize| {
        if i < n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, len: n })
        }
    };
    let mut values = Vec::with_capacity(traj.len());
    for (x, y) in traj.x_states.iter().zip(&traj.y_states) {
        let v = match obs {
            Observable::Energy => hamiltonian(sys, x, y)?,
            Observable::SimplexSum(i) => {
                check_agent(i)?;
                x.agent(i).iter().sum()
            }
            Observable::Fenchel => fenchel_coupling_at(sys, anchor.as_ref().unwrap(), y)?,
            Observable::Distance => distance_to_reference(reference, x)?,
            Observable::Utility(i) => utility(sys.game(), x, i)?,
        };
        values.push(v);
    }
    Ok(ObservableSeries {
        name: obs.name(),
        times: traj.times.clone(),
        values,
    })
}

/// Writes `t,name,value` rows, time-major.
pub fn write_observables_csv<W: Write>(out: &mut W, all: &[ObservableSeries]) -> std::io::Result<()> {
    writeln!(out, "t,name,value")?;
    let len = all.first().map_or(0, |s| s.times.len());
    for k in 0..len {
        for s in all {
            writeln!(out, "{:.16e},{},{:.16e}", s.times[k], s.name, s.values[k])?;
        }
    }
    Ok(())
}

/// Parses observable CSV back into one series per name, in first-seen order.
pub fn read_observables_csv<R: BufRead>(input: R) -> Result<Vec<ObservableSeries>> {
    let bad = |line: usize, msg: &str| Error::InvalidParameter(format!("observables csv line {line}: {msg}"));
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == "t,name,value" => {}
        _ => return Err(bad(1, "expected header `t,name,value`")),
    }
    let mut out: Vec<ObservableSeries> = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| bad(idx + 1, &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(bad(idx + 1, "expected 3 fields"));
        }
        let t: f64 = parts[0].parse().map_err(|_| bad(idx + 1, "bad time"))?;
        let v: f64 = parts[2].parse().map_err(|_| bad(idx + 1, "bad value"))?;
        match out.iter_mut().find(|s| s.name == parts[1]) {
            Some(s) => {
                s.times.push(t);
                s.values.push(v);
            }
            None => out.push(ObservableSeries {
                name: parts[1].to_string(),
                times: vec![t],
                values: vec![v],
            }),
        }
    }
    Ok(out)
}
