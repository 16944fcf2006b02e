//! Time integration of flow fields and trajectory I/O.
//!
//! Two schemes are provided: classic fixed-step RK4 (the default) and
//! adaptive Dormand-Prince RK45. Both operate on the flat `y` vector and
//! record strategies `x = grad h*(y)` at every recorded time.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::FlowSystem;
use crate::error::{Error, Result};
use crate::profile::{PayoffProfile, Profile, StrategyProfile};
use crate::regularizer::{Regularizer, RegularizerSpec};

/// Smallest step the adaptive scheme may take before giving up.
pub const MIN_ADAPTIVE_STEP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Rk45,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4, initial step for RK45.
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Record every `record_stride` steps; t = 0 and t = T are always recorded.
    #[serde(rename = "stride")]
    pub record_stride: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            dt: 0.01,
            horizon: 100.0,
            record_stride: 10,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, horizon: f64, record_stride: usize) -> Self {
        Self {
            dt,
            horizon,
            record_stride,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon T must be positive, got {}", self.horizon));
        }
        if !(self.dt > 0.0) || self.dt > self.horizon {
            return bad(format!("dt must satisfy 0 < dt <= T, got dt = {}", self.dt));
        }
        if self.record_stride == 0 {
            return bad("record stride must be at least 1".into());
        }
        if self.method == Method::Rk45 && (!(self.rel_tol > 0.0) || !(self.abs_tol > 0.0)) {
            return bad("rel_tol and abs_tol must be positive".into());
        }
        Ok(())
    }

    /// Number of RK4 steps; the last one is shortened to land on T.
    pub fn fixed_steps(&self) -> usize {
        ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Recorded states of a flat ODE solution.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

fn wrap(time: f64) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        e @ (Error::Integration { .. } | Error::StepUnderflow { .. }) => e,
        e => Error::Integration {
            time,
            source: Box::new(e),
        },
    }
}

fn lincomb(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(k.iter()) {
                *o += h * c * v;
            }
        }
    }
    out
}

fn rk4_step<F>(f: &mut F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &lincomb(y, h, &[(0.5, &k1)]))?;
    let k3 = f(t + 0.5 * h, &lincomb(y, h, &[(0.5, &k2)]))?;
    let k4 = f(t + h, &lincomb(y, h, &[(1.0, &k3)]))?;
    Ok(y
        .iter()
        .enumerate()
        .map(|(i, v)| v + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand-Prince step: fifth-order solution and scaled error norm.
fn dp_step<F>(f: &mut F, t: f64, y: &[f64], h: f64, cfg: &IntegratorConfig) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let terms: Vec<(f64, &[f64])> = (0..s).map(|j| (DP_A[s][j], k[j].as_slice())).collect();
        let ys = lincomb(y, h, &terms);
        k.push(f(t + DP_C[s] * h, &ys)?);
    }
    let b5: Vec<(f64, &[f64])> = (0..7).map(|j| (DP_B5[j], k[j].as_slice())).collect();
    let y5 = lincomb(y, h, &b5);
    let mut err: f64 = 0.0;
    for i in 0..y.len() {
        let e: f64 = (0..7).map(|j| (DP_B5[j] - DP_B4[j]) * k[j][i]).sum::<f64>() * h;
        let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y5[i].abs());
        let r = e.abs() / scale;
        // f64::max drops NaN, so propagate it explicitly
        err = if r.is_nan() || !y5[i].is_finite() { f64::INFINITY } else { err.max(r) };
    }
    Ok((y5, err))
}

/// Integrates `dy/dt = f(t, y)` on `[0, T]`.
///
/// Errors raised by `f` are wrapped in [`Error::Integration`] with the start
/// time of the failing step.
pub fn solve_ode<F>(mut f: F, y0: &[f64], cfg: &IntegratorConfig) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    let mut sol = OdeSolution {
        times: vec![0.0],
        states: vec![y0.to_vec()],
    };
    let mut y = y0.to_vec();
    match cfg.method {
        Method::Rk4 => {
            let n = cfg.fixed_steps();
            for k in 0..n {
                let t = k as f64 * cfg.dt;
                let t_next = if k + 1 == n { cfg.horizon } else { (k + 1) as f64 * cfg.dt };
                y = rk4_step(&mut f, t, &y, t_next - t).map_err(wrap(t))?;
                if (k + 1) % cfg.record_stride == 0 || k + 1 == n {
                    sol.times.push(t_next);
                    sol.states.push(y.clone());
                }
            }
        }
        Method::Rk45 => {
            let mut t = 0.0;
            let mut h = cfg.dt;
            let mut accepted = 0usize;
            while t < cfg.horizon {
                let last = t + h >= cfg.horizon;
                let step = if last { cfg.horizon - t } else { h };
                let (y_new, err) = dp_step(&mut f, t, &y, step, cfg).map_err(wrap(t))?;
                if !err.is_finite() {
                    h = step * 0.2;
                } else if err <= 1.0 {
                    t = if last { cfg.horizon } else { t + step };
                    y = y_new;
                    accepted += 1;
                    if accepted.is_multiple_of(cfg.record_stride) || last {
                        sol.times.push(t);
                        sol.states.push(y.clone());
                    }
                    let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    h = step * grow;
                    continue;
                } else {
                    h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                }
                if h < MIN_ADAPTIVE_STEP {
                    return Err(Error::StepUnderflow { time: t, dt: h });
                }
            }
        }
    }
    Ok(sol)
}

/// A recorded solution curve `(t, y(t), x(t))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub y_states: Vec<PayoffProfile>,
    pub x_states: Vec<StrategyProfile>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_x(&self) -> Option<&StrategyProfile> {
        self.x_states.last()
    }

    pub fn final_y(&self) -> Option<&PayoffProfile> {
        self.y_states.last()
    }
}

/// Canonical dual point with `grad h*(y0) = x0`.
pub fn init_dual_state(regs: &[RegularizerSpec], x0: &StrategyProfile) -> Result<PayoffProfile> {
    if regs.len() != x0.n_agents() {
        return Err(Error::Dimension(format!(
            "{} regularizers for {} agents",
            regs.len(),
            x0.n_agents()
        )));
    }
    x0.check_fully_mixed()?;
    let mut y = x0.zeros_like();
    for (i, reg) in regs.iter().enumerate() {
        let yi = reg.dual_representative(x0.agent(i))?;
        y.agent_mut(i).copy_from_slice(&yi);
    }
    Ok(y)
}

/// Integrates the configured flow of `sys` from `y0`.
pub fn integrate(sys: &FlowSystem, y0: &PayoffProfile, cfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_field(sys, |y| sys.field(y), y0, cfg)
}

/// Integrates an arbitrary field on the payoff coordinates of `sys`.
pub fn integrate_field<F>(sys: &FlowSystem, field: F, y0: &PayoffProfile, cfg: &IntegratorConfig) -> Result<Trajectory>
where
    F: Fn(&PayoffProfile) -> Result<PayoffProfile>,
{
    y0.check_dims(sys.game().action_counts())?;
    let template = y0.zeros_like();
    let sol = solve_ode(
        |_, v| field(&template.with_values(v.to_vec())).map(Profile::into_values),
        y0.as_slice(),
        cfg,
    )?;
    let mut traj = Trajectory {
        times: sol.times,
        y_states: Vec::with_capacity(sol.states.len()),
        x_states: Vec::with_capacity(sol.states.len()),
    };
    for (t, v) in traj.times.iter().zip(sol.states) {
        let y = template.with_values(v);
        traj.x_states.push(sys.strategies(&y).map_err(wrap(*t))?);
        traj.y_states.push(y);
    }
    Ok(traj)
}

/// Writes `t,agent,coord,x,y` rows with 17 significant digits.
pub fn write_trajectory_csv<W: Write>(out: &mut W, traj: &Trajectory) -> std::io::Result<()> {
    writeln!(out, "t,agent,coord,x,y")?;
    for ((t, x), y) in traj.times.iter().zip(&traj.x_states).zip(&traj.y_states) {
        for (agent, (xa, ya)) in x.agents().zip(y.agents()).enumerate() {
            for (coord, (xv, yv)) in xa.iter().zip(ya).enumerate() {
                writeln!(out, "{t:.16e},{agent},{coord},{xv:.16e},{yv:.16e}")?;
            }
        }
    }
    Ok(())
}

/// Parses trajectory CSV written by [`write_trajectory_csv`].
pub fn read_trajectory_csv<R: BufRead>(input: R) -> Result<Trajectory> {
    let bad = |line: usize, msg: &str| Error::InvalidParameter(format!("trajectory csv line {line}: {msg}"));
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == "t,agent,coord,x,y" => {}
        _ => return Err(bad(1, "expected header `t,agent,coord,x,y`")),
    }
    // per time: nested x and y blocks
    let mut times: Vec<f64> = Vec::new();
    let mut xs: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut ys: Vec<Vec<Vec<f64>>> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| bad(lineno, &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Vec<&str> = line.split(',').collect();
        if p.len() != 5 {
            return Err(bad(lineno, "expected 5 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(lineno, &format!("bad number `{s}`")));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(lineno, &format!("bad index `{s}`")));
        let (t, agent, coord, x, y) = (num(p[0])?, int(p[1])?, int(p[2])?, num(p[3])?, num(p[4])?);
        if times.last() != Some(&t) {
            if times.last().is_some_and(|&last| t <= last) {
                return Err(bad(lineno, "times must increase"));
            }
            times.push(t);
            xs.push(Vec::new());
            ys.push(Vec::new());
        }
        let (xb, yb) = (xs.last_mut().unwrap(), ys.last_mut().unwrap());
        if agent == xb.len() {
            xb.push(Vec::new());
            yb.push(Vec::new());
        }
        if agent + 1 != xb.len() || coord != xb[agent].len() {
            return Err(bad(lineno, "rows out of order"));
        }
        xb[agent].push(x);
        yb[agent].push(y);
    }
    if times.is_empty() {
        return Err(bad(2, "no rows"));
    }
    let x_states: Vec<Profile> = xs.into_iter().map(Profile::new).collect();
    let dims = x_states[0].dims();
    if x_states.iter().any(|x| x.dims() != dims) {
        return Err(bad(2, "inconsistent layout across times"));
    }
    Ok(Trajectory {
        times,
        x_states,
        y_states: ys.into_iter().map(Profile::new).collect(),
    })
}
