//! Batch verification of the library's numerical invariants.
//!
//! Each [`Check`] measures one quantity and compares it against a limit.
//! Checks belong to a [`Suite`]; `all` runs every registered check.

use std::time::Instant;

use super::{CliError, CliResult};
use crate::catalog::{self, random_zero_sum, CatalogGame, SeededRng, PRESET_NAMES};
use crate::cli::config::RunConfig;
use crate::cli::run::execute;
use crate::dynamics::{discrete_step, DiscreteRule, FlowParams, FlowSystem, Variant};
use crate::game::{solve_fully_mixed_nash, total_utility, utility, validate_zero_sum, verify_nash};
use crate::integrate::{init_dual_state, integrate, solve_ode, IntegratorConfig};
use crate::observe::{
    energy, fenchel_coupling_at, fenchel_rate, series, simplex_sums, EquilibriumReference, Observable,
};
use crate::profile::{Profile, StrategyProfile};
use crate::regularizer::{Regularizer, RegularizerKind, RegularizerSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Conservation,
    Dissipation,
    Equivalence,
    Regularizers,
    Structure,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Conservation,
        Suite::Dissipation,
        Suite::Equivalence,
        Suite::Regularizers,
        Suite::Structure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Conservation => "conservation",
            Suite::Dissipation => "dissipation",
            Suite::Equivalence => "equivalence",
            Suite::Regularizers => "regularizers",
            Suite::Structure => "structure",
        }
    }
}

/// Outcome of one check: pass iff `value <= limit` (and `value` is not NaN).
#[derive(Clone, Debug)]
pub struct Measurement {
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

impl Measurement {
    fn new(value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            value,
            limit,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

pub struct Check {
    /// `<module>.<property>`.
    pub id: &'static str,
    pub suite: Suite,
    pub description: &'static str,
    pub run: fn() -> crate::Result<Measurement>,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub id: &'static str,
    pub description: &'static str,
    pub outcome: Result<Measurement, String>,
    pub seconds: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        matches!(&self.outcome, Ok(m) if m.passed())
    }

    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        match &self.outcome {
            Ok(m) => format!(
                "{status} {:<40} value {:.3e} <= {:.1e}  ({}; {:.2}s)",
                self.id, m.value, m.limit, m.detail, self.seconds
            ),
            Err(e) => format!("{status} {:<40} error: {e}", self.id),
        }
    }
}

// ---------------------------------------------------------------------------
// shared fixtures

fn entropic(game: impl Into<std::sync::Arc<crate::GameSpec>>, params: FlowParams) -> crate::Result<FlowSystem> {
    FlowSystem::homogeneous(game, RegularizerKind::Entropic, params)
}

/// Catalog games with both regularizers, paired with a point equilibrium.
fn catalog_systems() -> crate::Result<Vec<(String, FlowSystem, StrategyProfile)>> {
    let games: [(&str, CatalogGame); 3] = [
        ("rps", catalog::weighted_rps(1.0, 1.0, 1.0)),
        ("wrps", catalog::weighted_rps(1.0, 2.0, 3.0)),
        ("mp3", catalog::matching_pennies_3(1.0)),
    ];
    let mut out = Vec::new();
    for (name, g) in games {
        let eq = g.equilibrium.expect("catalog equilibria");
        let star = eq.anchor(&Profile::uniform(g.spec.action_counts()))?;
        for kind in [RegularizerKind::Entropic, RegularizerKind::Euclidean] {
            let sys = FlowSystem::homogeneous(g.spec.clone(), kind, FlowParams::ftrl())?;
            out.push((format!("{name}/{}", kind.name()), sys, star.clone()));
        }
    }
    Ok(out)
}

/// Interior dual point: entropic `y` uniform in `[-2, 2)`, Euclidean `y` with
/// primal image at most 0.15 away from uniform plus a random shift along `1`.
fn random_dual_point(sys: &FlowSystem, rng: &mut SeededRng) -> Profile {
    let blocks = sys
        .regs()
        .iter()
        .map(|r| match r.kind {
            RegularizerKind::Entropic => (0..r.dim).map(|_| rng.uniform(-2.0, 2.0)).collect(),
            RegularizerKind::Euclidean => {
                let d = r.dim as f64;
                let raw: Vec<f64> = (0..r.dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
                let mean = raw.iter().sum::<f64>() / d;
                let shift = rng.uniform(-3.0, 3.0);
                raw.iter().map(|v| 1.0 / d + 0.15 / d * (v - mean) + shift).collect()
            }
        })
        .collect();
    Profile::new(blocks)
}

fn random_simplex_point(dims: &[usize], rng: &mut SeededRng) -> Profile {
    Profile::new(
        dims.iter()
            .map(|&d| {
                let w: Vec<f64> = (0..d).map(|_| rng.uniform(0.05, 1.0)).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|v| v / s).collect()
            })
            .collect(),
    )
}

fn preset_run(name: &str, alpha: f64, m: u32, horizon: f64) -> crate::Result<(FlowSystem, crate::integrate::Trajectory, EquilibriumReference)> {
    let p = catalog::preset(name)?.at_alpha(alpha)?.with_power_index(m);
    let regs = p
        .regularizers
        .iter()
        .zip(p.game.action_counts())
        .map(|(&k, &d)| RegularizerSpec::new(k, d))
        .collect::<crate::Result<Vec<_>>>()?;
    let sys = FlowSystem::new(p.game.clone(), regs, p.params)?;
    let y0 = init_dual_state(sys.regs(), &p.x0)?;
    let cfg = IntegratorConfig::rk4(0.01, horizon, 10);
    let traj = integrate(&sys, &y0, &cfg)?;
    Ok((sys, traj, p.reference))
}

fn worst(acc: &mut (f64, String), value: f64, label: impl FnOnce() -> String) {
    if value > acc.0 || value.is_nan() {
        *acc = (value, label());
    }
}

// ---------------------------------------------------------------------------
// game

fn game_total_utility_zero() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    let mut rng = SeededRng::new(1);
    for seed in 0..20 {
        let n = 2 + (seed % 3) as usize;
        let dims: Vec<usize> = (0..n).map(|i| 2 + (seed as usize + i) % 3).collect();
        let g = random_zero_sum(seed, n, &dims, 2.0);
        for _ in 0..10 {
            let x = random_simplex_point(&dims, &mut rng);
            worst(&mut acc, total_utility(&g, &x)?.abs(), || format!("seed {seed}"));
        }
    }
    Ok(Measurement::new(acc.0, 1e-10, format!("200 random profiles, worst at {}", acc.1)))
}

fn game_multiplier_sum() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    let mut count = 0;
    for seed in 0..60 {
        let d = 2 + (seed % 3) as usize;
        let g = random_zero_sum(seed, 2, &[d, d], 1.0);
        if let Ok(cert) = solve_fully_mixed_nash(&g) {
            let tol = 1e-8;
            if cert.residual <= tol {
                count += 1;
                worst(&mut acc, cert.multiplier_sum.abs() - 2.0 * tol, || format!("seed {seed}"));
            }
        }
    }
    Ok(Measurement::new(acc.0, 0.0, format!("|sum lambda| - n tol over {count} solved games")))
}

fn game_solve_then_verify() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    let mut count = 0;
    for seed in 0..60 {
        let n = 2 + (seed % 2) as usize;
        let dims: Vec<usize> = (0..n).map(|_| 2 + (seed as usize % 3)).collect();
        let g = random_zero_sum(seed, n, &dims, 1.0);
        if let Ok(cert) = solve_fully_mixed_nash(&g) {
            count += 1;
            let v = verify_nash(&g, &cert.strategy, 1e-8)?;
            worst(&mut acc, v.residual, || format!("seed {seed}"));
        }
    }
    for g in [catalog::weighted_rps(1.0, 2.0, 3.0).spec, catalog::matching_pennies_3(1.0).spec] {
        count += 1;
        let cert = solve_fully_mixed_nash(&g)?;
        worst(&mut acc, verify_nash(&g, &cert.strategy, 1e-8)?.residual, || "catalog".into());
    }
    Ok(Measurement::new(acc.0, 1e-8, format!("{count} solved games")))
}

/// All compositions of `steps` into `d` parts, scaled to the simplex.
fn simplex_grid(d: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if d == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(d - 1, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, steps, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|v| v.into_iter().map(|k| k as f64 / steps as f64).collect())
        .collect()
}

fn game_grid_best_response() -> crate::Result<Measurement> {
    let mut acc = (f64::NEG_INFINITY, String::new());
    let mut count = 0;
    for seed in 0..40u64 {
        let d = 2 + (seed % 3) as usize;
        let g = random_zero_sum(1000 + seed, 2, &[d, d], 1.0);
        let Ok(cert) = solve_fully_mixed_nash(&g) else { continue };
        count += 1;
        let grid = simplex_grid(d, 50);
        for agent in 0..2 {
            let base = utility(&g, &cert.strategy, agent)?;
            for point in &grid {
                let mut x = cert.strategy.clone();
                x.agent_mut(agent).copy_from_slice(point);
                let gain = utility(&g, &x, agent)? - base;
                worst(&mut acc, gain, || format!("seed {}", 1000 + seed));
            }
        }
    }
    if count == 0 {
        return Err(crate::Error::NoEquilibrium("no random game had an interior equilibrium".into()));
    }
    Ok(Measurement::new(acc.0, 1e-2, format!("best grid deviation gain over {count} games")))
}

// ---------------------------------------------------------------------------
// regularizer

fn regularizer_test_points() -> Vec<(RegularizerSpec, Vec<f64>)> {
    let mut rng = SeededRng::new(77);
    let mut out = Vec::new();
    for dim in [2usize, 3, 5] {
        for _ in 0..10 {
            let e: Vec<f64> = (0..dim).map(|_| rng.uniform(-3.0, 3.0)).collect();
            out.push((RegularizerSpec::entropic(dim), e));
            let raw: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let mean = raw.iter().sum::<f64>() / dim as f64;
            let shift = rng.uniform(-2.0, 2.0);
            let y = raw
                .iter()
                .map(|v| 1.0 / dim as f64 + 0.5 / dim as f64 * (v - mean) + shift)
                .collect();
            out.push((RegularizerSpec::euclidean(dim), y));
        }
    }
    out
}

fn regularizer_translation_invariance() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    for (reg, y) in regularizer_test_points() {
        let base = reg.mirror_map(&y)?;
        for shift in [1.0, -1.0, 10.0, -10.0] {
            let ys: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let moved = reg.mirror_map(&ys)?;
            let d = base.iter().zip(&moved).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            // the shifted input itself is rounded, so entropic gets a few ulps
            let d = if reg.kind == RegularizerKind::Entropic { d * 500.0 } else { d };
            worst(&mut acc, d, || format!("{} shift {shift}", reg.kind.name()));
        }
    }
    Ok(Measurement::new(
        acc.0,
        1e-12,
        "max change over shifts +-1, +-10; entropic scaled by 500 (limit 2e-15)",
    ))
}

fn regularizer_normalization() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    for (reg, y) in regularizer_test_points() {
        let s: f64 = reg.mirror_map(&y)?.iter().sum();
        worst(&mut acc, (s - 1.0).abs(), || reg.kind.name().to_string());
    }
    Ok(Measurement::new(acc.0, 1e-12, "|sum grad h*(y) - 1|"))
}

fn regularizer_fd_consistency() -> crate::Result<Measurement> {
    let h = 1e-5;
    let (mut grad_err, mut hess_err) = (0.0_f64, 0.0_f64);
    for (reg, y) in regularizer_test_points() {
        let g = reg.mirror_map(&y)?;
        let hess = reg.dual_hessian(&y)?;
        for a in 0..y.len() {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[a] += h;
            ym[a] -= h;
            let fd = (reg.dual_value(&yp)? - reg.dual_value(&ym)?) / (2.0 * h);
            grad_err = grad_err.max((fd - g[a]).abs());
            let (mp, mm) = (reg.mirror_map(&yp)?, reg.mirror_map(&ym)?);
            for b in 0..y.len() {
                hess_err = hess_err.max(((mp[b] - mm[b]) / (2.0 * h) - hess[(b, a)]).abs());
            }
        }
    }
    // both limits in one measurement: scale the Hessian error onto the gradient limit
    let value = grad_err.max(hess_err * 1e-2);
    Ok(Measurement::new(
        value,
        1e-8,
        format!("gradient fd error {grad_err:.2e} (<= 1e-8), hessian fd error {hess_err:.2e} (<= 1e-6)"),
    ))
}

fn regularizer_fenchel_equality() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    for (reg, y) in regularizer_test_points() {
        let x = reg.mirror_map(&y)?;
        let pair: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let gap = (reg.dual_value(&y)? - (pair - reg.primal_value(&x)?)).abs();
        worst(&mut acc, gap, || reg.kind.name().to_string());
    }
    Ok(Measurement::new(acc.0, 1e-10, "|h*(y) - <x, y> + h(x)| at x = grad h*(y)"))
}

fn regularizer_hessian_psd() -> crate::Result<Measurement> {
    let (mut min_eig, mut kernel) = (f64::INFINITY, 0.0_f64);
    for (reg, y) in regularizer_test_points() {
        let hess = reg.dual_hessian(&y)?;
        let n = reg.dim;
        let m = nalgebra::DMatrix::from_fn(n, n, |r, c| hess[(r, c)]);
        let eig = nalgebra::SymmetricEigen::new(m).eigenvalues;
        min_eig = min_eig.min(eig.iter().cloned().fold(f64::INFINITY, f64::min));
        let ones = vec![1.0; n];
        kernel = kernel.max(hess.mul_vec(&ones).iter().fold(0.0_f64, |a, v| a.max(v.abs())));
    }
    Ok(Measurement::new(
        (-min_eig).max(kernel),
        1e-10,
        format!("min eigenvalue {min_eig:.2e}, |H 1| {kernel:.2e}"),
    ))
}

fn regularizer_round_trip() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    let mut rng = SeededRng::new(5);
    for dim in [2usize, 3, 6] {
        for _ in 0..20 {
            let x = random_simplex_point(&[dim], &mut rng).into_values();
            for reg in [RegularizerSpec::entropic(dim), RegularizerSpec::euclidean(dim)] {
                let back = reg.mirror_map(&reg.primal_gradient(&x)?)?;
                let d = back.iter().zip(&x).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                worst(&mut acc, d, || reg.kind.name().to_string());
            }
        }
    }
    Ok(Measurement::new(acc.0, 1e-10, "max |grad h*(grad h(x)) - x|"))
}

// ---------------------------------------------------------------------------
// dynamics

fn dynamics_degeneracy() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    let mut rng = SeededRng::new(11);
    for (name, sys, _) in catalog_systems()? {
        for _ in 0..10 {
            let y = random_dual_point(&sys, &mut rng);
            let f = sys.ftrl_field(&y)?;
            for (label, v) in [
                ("dftrl", sys.dftrl_field_with(&y, 0.0, 0)?),
                ("co", sys.co_field(&y, 0.0)?),
                ("ceg", sys.ceg_field(&y, 0.0)?),
                ("cnm", sys.cnm_field(&y, 0.0)?),
            ] {
                worst(&mut acc, v.sub(&f).max_abs(), || format!("{name} {label}"));
            }
        }
    }
    Ok(Measurement::new(acc.0, 1e-14, "alpha = 0 against FTRL"))
}

fn dynamics_first_order_equivalence() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    let mut exact = 0.0_f64;
    let mut rng = SeededRng::new(12);
    for (name, sys, _) in catalog_systems()? {
        let euclid = sys.regs()[0].kind == RegularizerKind::Euclidean;
        for _ in 0..20 {
            let y = random_dual_point(&sys, &mut rng);
            let diff = |a: f64, co: bool| -> crate::Result<f64> {
                let alt = if co { sys.co_field(&y, a)? } else { sys.ceg_field(&y, a)? };
                Ok(alt.sub(&sys.dftrl_field_with(&y, a, 0)?).norm())
            };
            for co in [true, false] {
                if euclid && !co {
                    // affine mirror map: extra-gradient equals DFTRL identically
                    exact = exact.max(diff(1e-2, false)?);
                    continue;
                }
                for alpha in [1e-2, 5e-3] {
                    let ratio = diff(alpha / 2.0, co)? / diff(alpha, co)?;
                    worst(&mut acc, (ratio - 0.25).abs(), || {
                        format!("{name} {} alpha {alpha} ratio {ratio:.4}", if co { "co" } else { "ceg" })
                    });
                }
            }
        }
    }
    let value = acc.0.max(if exact <= 1e-13 { 0.0 } else { f64::INFINITY });
    Ok(Measurement::new(
        value,
        0.05,
        format!("|ratio - 0.25|, worst {}; euclidean ceg - dftrl {exact:.1e}", acc.1),
    ))
}

fn dynamics_cnm_identity() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    let mut rng = SeededRng::new(13);
    for (name, sys, _) in catalog_systems()? {
        for _ in 0..10 {
            let y = random_dual_point(&sys, &mut rng);
            let f = sys.ftrl_field(&y)?;
            for alpha in [0.05, 0.5, 2.0] {
                let d = sys.cnm_field(&y, alpha)?.scaled(1.0 + alpha).sub(&f).max_abs();
                worst(&mut acc, d, || format!("{name} alpha {alpha}"));
            }
        }
    }
    Ok(Measurement::new(acc.0, 1e-15, "(1 + alpha) cnm - ftrl"))
}

/// `sum_j A^{ij} H_j sum_k A^{jk} x^k` evaluated term by term.
pub fn direct_perturbation(sys: &FlowSystem, y: &Profile) -> crate::Result<Profile> {
    let game = sys.game();
    let n = game.n_agents();
    let x = sys.strategies(y)?;
    let mut out = y.zeros_like();
    for i in 0..n {
        for j in 0..n {
            let Some(aij) = game.block(i, j) else { continue };
            let mut inner = vec![0.0; game.action_counts()[j]];
            for k in 0..n {
                if let Some(ajk) = game.block(j, k) {
                    ajk.mul_vec_acc(x.agent(k), &mut inner);
                }
            }
            let h = sys.regs()[j].dual_hessian(y.agent(j))?;
            aij.mul_vec_acc(&h.mul_vec(&inner), out.agent_mut(i));
        }
    }
    Ok(out)
}

fn dynamics_perturbation_identity() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    let mut rng = SeededRng::new(14);
    for seed in 0..10 {
        let g = random_zero_sum(seed, 2, &[3, 4], 1.0);
        let sys = entropic(g, FlowParams::ftrl())?;
        let y = random_dual_point(&sys, &mut rng);
        let d = sys.dftrl_perturbation(&y, 0)?.sub(&direct_perturbation(&sys, &y)?).max_abs();
        worst(&mut acc, d, || format!("seed {seed}"));
    }
    Ok(Measurement::new(acc.0, 1e-14, "chain (m = 0) vs direct double sum"))
}

fn all_variant_systems(sys: &FlowSystem) -> crate::Result<Vec<FlowSystem>> {
    let mut out = Vec::new();
    for v in Variant::ALL {
        for alpha in [0.0, 0.1, 0.5] {
            out.push(sys.with_params(FlowParams::new(v, alpha, 0)?)?);
        }
    }
    out.push(sys.with_params(FlowParams::dftrl(0.1, 1)?)?);
    Ok(out)
}

fn dynamics_tangency() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    let mut rng = SeededRng::new(15);
    for (name, sys, _) in catalog_systems()? {
        for _ in 0..5 {
            let y = random_dual_point(&sys, &mut rng);
            for s in all_variant_systems(&sys)? {
                let dx = match s.derived_x_field(&y) {
                    Ok(v) => v,
                    // the extra-gradient look-ahead may leave the Euclidean domain
                    Err(crate::Error::Domain { .. }) => continue,
                    Err(e) => return Err(e),
                };
                for sum in simplex_sums(&dx) {
                    worst(&mut acc, sum.abs(), || format!("{name} {:?}", s.params()));
                }
            }
        }
    }
    Ok(Measurement::new(acc.0, 1e-12, "|sum_a dx^i_a/dt|"))
}

fn dynamics_fixed_point() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    for (name, sys, star) in catalog_systems()? {
        let y0 = init_dual_state(sys.regs(), &star)?;
        let y = y0.with_values(y0.as_slice().iter().map(|v| v + 0.3).collect());
        for s in all_variant_systems(&sys)? {
            worst(&mut acc, s.derived_x_field(&y)?.max_abs(), || format!("{name} {:?}", s.params()));
        }
    }
    Ok(Measurement::new(acc.0, 1e-10, "|dx/dt| at Nash, all variants"))
}

fn dynamics_discrete_continuous() -> crate::Result<Measurement> {
    let sys = entropic(catalog::weighted_rps(1.0, 1.0, 1.0).spec, FlowParams::ftrl())?;
    let y = Profile::new(vec![
        [0.1f64, 0.1, 0.8].iter().map(|v| v.ln()).collect(),
        [0.2f64, 0.6, 0.2].iter().map(|v| v.ln()).collect(),
    ]);
    let alpha = 0.05;
    let ceg = sys.with_params(FlowParams::new(Variant::Ceg, alpha, 0)?)?;
    // the discrete step against the exact CEG flow over one step
    let gap = |eps: f64| -> crate::Result<f64> {
        let step = discrete_step(&sys, DiscreteRule::ExtraGradient, &y, None, eps, alpha)?;
        let cfg = IntegratorConfig::rk4(eps / 64.0, eps, 64);
        let sol = solve_ode(
            |_, v| ceg.field(&y.with_values(v.to_vec())).map(Profile::into_values),
            y.as_slice(),
            &cfg,
        )?;
        Ok(step.sub(&y.with_values(sol.states.last().unwrap().clone())).norm())
    };
    let (a, b) = (gap(0.1)?, gap(0.05)?);
    let ratio = b / a;
    let identity = discrete_step(&sys, DiscreteRule::ExtraGradient, &y, None, 0.1, alpha)?
        .sub(&y.axpy(0.1, &ceg.field(&y)?))
        .max_abs();
    let value = (ratio - 0.25).abs().max(if identity <= 1e-15 { 0.0 } else { f64::INFINITY });
    Ok(Measurement::new(
        value,
        0.05,
        format!("|ratio - 0.25| with ratio {ratio:.4}; step - (y + eps ceg) = {identity:.1e}"),
    ))
}

// ---------------------------------------------------------------------------
// integrate

fn integrate_rk4_order() -> crate::Result<Measurement> {
    let err = |dt: f64| -> crate::Result<f64> {
        let sol = solve_ode(|_, y| Ok(vec![-y[0]]), &[1.0], &IntegratorConfig::rk4(dt, 1.0, 1))?;
        Ok((sol.states.last().unwrap()[0] - (-1.0f64).exp()).abs())
    };
    let ratio = err(0.1)? / err(0.05)?;
    Ok(Measurement::new((ratio - 16.0).abs(), 2.0, format!("error ratio {ratio:.3} under dt halving")))
}

fn integrate_determinism() -> crate::Result<Measurement> {
    let mut mismatches = 0.0;
    for name in PRESET_NAMES {
        let run = || preset_run(name, 0.1, 0, 10.0).map(|r| r.1);
        let (a, b) = (run()?, run()?);
        let same = a.y_states.iter().zip(&b.y_states).all(|(p, q)| {
            p.as_slice().iter().zip(q.as_slice()).all(|(u, v)| u.to_bits() == v.to_bits())
        });
        if !same || a.times != b.times {
            mismatches += 1.0;
        }
    }
    Ok(Measurement::new(mismatches, 0.0, "presets with non-identical repeated trajectories"))
}

fn integrate_dt_convergence() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    for name in PRESET_NAMES {
        let p = catalog::preset(name)?.at_alpha(0.0)?;
        let regs = p
            .regularizers
            .iter()
            .zip(p.game.action_counts())
            .map(|(&k, &d)| RegularizerSpec::new(k, d))
            .collect::<crate::Result<Vec<_>>>()?;
        let sys = FlowSystem::new(p.game.clone(), regs, p.params)?;
        let y0 = init_dual_state(sys.regs(), &p.x0)?;
        // wrps is sensitive to initial data, so the horizon stays short
        let a = integrate(&sys, &y0, &IntegratorConfig::rk4(0.01, 30.0, 1000))?;
        let b = integrate(&sys, &y0, &IntegratorConfig::rk4(0.005, 30.0, 2000))?;
        worst(&mut acc, a.final_y().unwrap().sub(b.final_y().unwrap()).max_abs(), || name.into());
    }
    Ok(Measurement::new(acc.0, 1e-6, format!("final y change at T = 30, dt 0.01 -> 0.005, worst {}", acc.1)))
}

// ---------------------------------------------------------------------------
// observe

fn observe_fenchel_nonnegative() -> crate::Result<Measurement> {
    let mut acc = (f64::NEG_INFINITY, String::new());
    let mut rng = SeededRng::new(21);
    for (name, sys, star) in catalog_systems()? {
        for _ in 0..50 {
            let y = random_dual_point(&sys, &mut rng);
            worst(&mut acc, -fenchel_coupling_at(&sys, &star, &y)?, || name.clone());
        }
    }
    Ok(Measurement::new(acc.0, 1e-12, "-G_F at random dual points"))
}

fn observe_ftrl_conservation() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    for name in PRESET_NAMES {
        let (sys, traj, r) = preset_run(name, 0.0, 0, 100.0)?;
        let gf = series(&traj, Observable::Fenchel, &sys, &r)?;
        worst(&mut acc, gf.relative_drift(), || name.into());
    }
    Ok(Measurement::new(acc.0, 1e-6, format!("relative G_F drift over T = 100, worst {}", acc.1)))
}

fn observe_dftrl_monotone() -> crate::Result<Measurement> {
    let mut acc = (f64::NEG_INFINITY, String::new());
    let mut runs = 0;
    for name in PRESET_NAMES {
        let alphas = catalog::preset(name)?.alphas;
        for &alpha in alphas.iter().filter(|a| **a > 0.0) {
            for m in [0, 1] {
                let (sys, traj, r) = preset_run(name, alpha, m, 100.0)?;
                let gf = series(&traj, Observable::Fenchel, &sys, &r)?;
                runs += 1;
                worst(&mut acc, gf.max_increase(), || format!("{name} alpha {alpha} m {m}"));
            }
        }
    }
    Ok(Measurement::new(acc.0, 1e-7, format!("largest G_F increase per record over {runs} runs")))
}

fn observe_energy() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    for name in PRESET_NAMES {
        for variant in Variant::ALL {
            let p = catalog::preset(name)?;
            let regs = p
                .regularizers
                .iter()
                .zip(p.game.action_counts())
                .map(|(&k, &d)| RegularizerSpec::new(k, d))
                .collect::<crate::Result<Vec<_>>>()?;
            let sys = FlowSystem::new(p.game.clone(), regs, FlowParams::new(variant, 0.1, 0)?)?;
            let y0 = init_dual_state(sys.regs(), &p.x0)?;
            let traj = integrate(&sys, &y0, &IntegratorConfig::rk4(0.01, 20.0, 10))?;
            for y in &traj.y_states {
                worst(&mut acc, energy(&sys, y)?.abs(), || format!("{name} {}", variant.name()));
            }
        }
    }
    Ok(Measurement::new(acc.0, 1e-10, "|H(grad h*(y), y)| along runs of every variant"))
}

fn observe_simplex_sums() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    for name in PRESET_NAMES {
        for alpha in [0.0, 0.1] {
            let (_, traj, _) = preset_run(name, alpha, 0, 100.0)?;
            for x in &traj.x_states {
                for s in simplex_sums(x) {
                    worst(&mut acc, (s - 1.0).abs(), || format!("{name} alpha {alpha}"));
                }
            }
        }
    }
    Ok(Measurement::new(acc.0, 1e-8, "|sum_a x^i_a - 1| along runs"))
}

fn observe_noether_pointwise() -> crate::Result<Measurement> {
    let (mut ftrl, mut dftrl) = (0.0_f64, f64::NEG_INFINITY);
    let mut rng = SeededRng::new(22);
    let systems = catalog_systems()?;
    for k in 0..100 {
        let (_, sys, star) = &systems[k % systems.len()];
        let y = random_dual_point(sys, &mut rng);
        ftrl = ftrl.max(fenchel_rate(sys, star, &y, &sys.ftrl_field(&y)?)?.abs());
        dftrl = dftrl.max(fenchel_rate(sys, star, &y, &sys.dftrl_field_with(&y, 0.1, 0)?)?);
    }
    let value = (ftrl * 1e-3).max(dftrl);
    Ok(Measurement::new(
        value,
        1e-12,
        format!("|rate along ftrl| {ftrl:.1e} (<= 1e-9), max rate along dftrl {dftrl:.1e} (<= 1e-12)"),
    ))
}

// ---------------------------------------------------------------------------
// catalog and cli

fn catalog_presets_valid() -> crate::Result<Measurement> {
    let mut acc = (0.0, String::new());
    for name in PRESET_NAMES {
        let p = catalog::preset(name)?;
        let report = validate_zero_sum(&p.game);
        worst(&mut acc, report.max_deviation, || format!("{name} zero-sum"));
        let cert = verify_nash(&p.game, &p.reference.anchor(&p.x0)?, 1e-10)?;
        worst(&mut acc, cert.residual.max(cert.multiplier_sum.abs()) * 1e-2, || format!("{name} nash"));
        if !p.x0.is_fully_mixed() {
            worst(&mut acc, f64::INFINITY, || format!("{name} x0"));
        }
    }
    Ok(Measurement::new(acc.0, 1e-12, "zero-sum deviation and 1e-2 x Nash residual"))
}

fn catalog_random_reproducible() -> crate::Result<Measurement> {
    let mut bad = 0.0;
    for seed in 0..20 {
        let a = random_zero_sum(seed, 3, &[2, 3, 2], 1.0);
        if a != random_zero_sum(seed, 3, &[2, 3, 2], 1.0) || a == random_zero_sum(seed + 1, 3, &[2, 3, 2], 1.0) {
            bad += 1.0;
        }
        if !validate_zero_sum(&a).is_valid() {
            bad += 1.0;
        }
    }
    Ok(Measurement::new(bad, 0.0, "seeds failing reproduction, distinctness or zero-sum"))
}

fn cli_run_determinism() -> crate::Result<Measurement> {
    let mut bad = 0.0;
    for name in PRESET_NAMES {
        let text = format!(r#"{{"game": "{name}", "integrator": {{"T": 10}}}}"#);
        let plan = RunConfig::from_json_str(&text)
            .and_then(|c| c.resolve(name))
            .map_err(|e| crate::Error::InvalidParameter(e.to_string()))?;
        let (a, b) = (execute(&plan)?, execute(&plan)?);
        if a.trajectory_csv != b.trajectory_csv || a.observables_csv != b.observables_csv {
            bad += 1.0;
        }
    }
    Ok(Measurement::new(bad, 0.0, "presets with differing CSV bytes across runs"))
}

/// Every registered check.
pub fn registry() -> Vec<Check> {
    use Suite::*;
    macro_rules! check {
        ($id:literal, $suite:expr, $desc:literal, $f:ident) => {
            Check {
                id: $id,
                suite: $suite,
                description: $desc,
                run: $f,
            }
        };
    }
    vec![
        check!("game.total_utility_zero", Conservation, "total utility vanishes on zero-sum games", game_total_utility_zero),
        check!("game.multiplier_sum", Structure, "Nash multipliers sum to zero", game_multiplier_sum),
        check!("game.solve_then_verify", Structure, "solved equilibria verify", game_solve_then_verify),
        check!("game.grid_best_response", Structure, "no profitable grid deviation from solved equilibria", game_grid_best_response),
        check!("regularizer.translation_invariance", Regularizers, "mirror maps ignore shifts along 1", regularizer_translation_invariance),
        check!("regularizer.normalization", Regularizers, "mirror maps land on the simplex", regularizer_normalization),
        check!("regularizer.finite_difference_consistency", Regularizers, "gradient and Hessian match finite differences", regularizer_fd_consistency),
        check!("regularizer.fenchel_equality", Regularizers, "Fenchel-Young equality at the maximizer", regularizer_fenchel_equality),
        check!("regularizer.hessian_psd_kernel", Regularizers, "dual Hessians are PSD with 1 in the kernel", regularizer_hessian_psd),
        check!("regularizer.round_trip", Regularizers, "grad h* inverts grad h", regularizer_round_trip),
        check!("dynamics.degeneracy", Equivalence, "all variants reduce to FTRL at alpha = 0", dynamics_degeneracy),
        check!("dynamics.first_order_equivalence", Equivalence, "CO and CEG agree with DFTRL to O(alpha^2)", dynamics_first_order_equivalence),
        check!("dynamics.cnm_identity", Equivalence, "CNM is FTRL slowed by 1 + alpha", dynamics_cnm_identity),
        check!("dynamics.perturbation_identity", Equivalence, "m = 0 chain equals the direct perturbation", dynamics_perturbation_identity),
        check!("dynamics.tangency", Equivalence, "primal fields are tangent to the simplices", dynamics_tangency),
        check!("dynamics.fixed_point", Equivalence, "Nash is a fixed point of every variant", dynamics_fixed_point),
        check!("dynamics.discrete_continuous", Equivalence, "discrete extra-gradient tracks the CEG flow to O(eps^2)", dynamics_discrete_continuous),
        check!("integrate.rk4_order", Structure, "RK4 converges at fourth order", integrate_rk4_order),
        check!("integrate.determinism", Structure, "repeated integrations are bit-identical", integrate_determinism),
        check!("integrate.dt_convergence", Structure, "halving dt barely moves the endpoint", integrate_dt_convergence),
        check!("observe.fenchel_nonnegative", Conservation, "Fenchel coupling is nonnegative", observe_fenchel_nonnegative),
        check!("observe.ftrl_conservation", Conservation, "Fenchel coupling is conserved by FTRL", observe_ftrl_conservation),
        check!("observe.dftrl_monotone", Dissipation, "Fenchel coupling is nonincreasing under DFTRL", observe_dftrl_monotone),
        check!("observe.energy", Conservation, "the Hamiltonian vanishes along every variant", observe_energy),
        check!("observe.simplex_sums", Conservation, "strategies stay on the simplices", observe_simplex_sums),
        check!("observe.noether_pointwise", Dissipation, "pointwise rate of G_F: zero for FTRL, nonpositive for DFTRL", observe_noether_pointwise),
        check!("catalog.presets_valid", Structure, "presets are zero-sum with verified equilibria", catalog_presets_valid),
        check!("catalog.random_reproducible", Structure, "random games reproduce per seed", catalog_random_reproducible),
        check!("cli.run_determinism", Structure, "runs produce byte-identical CSV", cli_run_determinism),
    ]
}

pub const SUITE_NAMES: [&str; 6] = ["conservation", "dissipation", "equivalence", "regularizers", "structure", "all"];

/// Checks selected by a suite name.
pub fn select(suite: &str) -> CliResult<Vec<Check>> {
    let all = registry();
    if suite == "all" {
        return Ok(all);
    }
    let s = Suite::ALL
        .into_iter()
        .find(|s| s.name() == suite)
        .ok_or_else(|| CliError::config(format!("unknown suite `{suite}`; available: {}", SUITE_NAMES.join(", "))))?;
    Ok(all.into_iter().filter(|c| c.suite == s).collect())
}

pub fn run_check(c: &Check) -> CheckReport {
    let start = Instant::now();
    let outcome = (c.run)().map_err(|e| e.to_string());
    CheckReport {
        id: c.id,
        description: c.description,
        outcome,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// `polygame verify <suite>`: prints one line per check, fails if any check fails.
pub fn verify_command(suite: &str) -> CliResult<Vec<CheckReport>> {
    let checks = select(suite)?;
    let mut reports = Vec::new();
    for c in &checks {
        let r = run_check(c);
        println!("{}", r.line());
        reports.push(r);
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!("{} of {} checks passed", reports.len() - failed, reports.len());
    if failed > 0 {
        return Err(CliError::runtime(format!("{failed} check(s) failed")));
    }
    Ok(reports)
}
