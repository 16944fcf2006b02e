//! Discrete-time optimistic, extra-gradient and negative-momentum FTRL.

use serde::{Deserialize, Serialize};

use super::FlowSystem;
use crate::error::{Error, Result};
use crate::profile::PayoffProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscreteRule {
    Optimistic,
    #[serde(rename = "extragradient")]
    ExtraGradient,
    NegativeMomentum,
}

impl DiscreteRule {
    pub const ALL: [DiscreteRule; 3] = [
        DiscreteRule::Optimistic,
        DiscreteRule::ExtraGradient,
        DiscreteRule::NegativeMomentum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DiscreteRule::Optimistic => "optimistic",
            DiscreteRule::ExtraGradient => "extragradient",
            DiscreteRule::NegativeMomentum => "negative-momentum",
        }
    }
}

impl std::str::FromStr for DiscreteRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DiscreteRule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown discrete rule `{s}`")))
    }
}

/// One step of `rule` from `y_curr`.
///
/// `y_prev` is the state one step earlier. When it is `None` the previous
/// state is taken to be `y_curr`, so the first step carries no momentum.
pub fn discrete_step(
    sys: &FlowSystem,
    rule: DiscreteRule,
    y_curr: &PayoffProfile,
    y_prev: Option<&PayoffProfile>,
    eps: f64,
    alpha: f64,
) -> Result<PayoffProfile> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {eps}")));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let y_prev = y_prev.unwrap_or(y_curr);
    y_prev.check_dims(sys.game().action_counts())?;
    let game = sys.game();
    match rule {
        DiscreteRule::Optimistic => {
            let x = sys.strategies(y_curr)?;
            let x_prev = sys.strategies(y_prev)?;
            let v = game.apply(&x);
            let dv = game.apply(&x.sub(&x_prev));
            Ok(y_curr.axpy(eps, &v).axpy(alpha, &dv))
        }
        DiscreteRule::ExtraGradient => {
            let v = sys.ceg_field(y_curr, alpha)?;
            Ok(y_curr.axpy(eps, &v))
        }
        DiscreteRule::NegativeMomentum => {
            let v = sys.ftrl_field(y_curr)?;
            Ok(y_curr.axpy(eps, &v).axpy(-alpha, &y_curr.sub(y_prev)))
        }
    }
}

/// Iterates a discrete rule, owning the one-step history.
#[derive(Clone, Debug)]
pub struct DiscreteLearner {
    pub rule: DiscreteRule,
    pub eps: f64,
    pub alpha: f64,
    curr: PayoffProfile,
    prev: Option<PayoffProfile>,
}

impl DiscreteLearner {
    pub fn new(rule: DiscreteRule, eps: f64, alpha: f64, y0: PayoffProfile) -> Self {
        Self {
            rule,
            eps,
            alpha,
            curr: y0,
            prev: None,
        }
    }

    pub fn state(&self) -> &PayoffProfile {
        &self.curr
    }

    pub fn step(&mut self, sys: &FlowSystem) -> Result<&PayoffProfile> {
        let next = discrete_step(sys, self.rule, &self.curr, self.prev.as_ref(), self.eps, self.alpha)?;
        self.prev = Some(std::mem::replace(&mut self.curr, next));
        Ok(&self.curr)
    }

    /// `steps` further states, not including the current one.
    pub fn run(&mut self, sys: &FlowSystem, steps: usize) -> Result<Vec<PayoffProfile>> {
        (0..steps).map(|_| self.step(sys).cloned()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::dynamics::FlowParams;
    use crate::profile::Profile;
    use crate::regularizer::RegularizerKind;

    fn rps() -> FlowSystem {
        FlowSystem::homogeneous(
            catalog::weighted_rps(1.0, 1.0, 1.0).spec,
            RegularizerKind::Entropic,
            FlowParams::ftrl(),
        )
        .unwrap()
    }

    fn y0() -> Profile {
        Profile::new(vec![
            [0.1f64, 0.1, 0.8].iter().map(|v| v.ln()).collect(),
            [0.2f64, 0.6, 0.2].iter().map(|v| v.ln()).collect(),
        ])
    }

    fn euler(sys: &FlowSystem, y: &Profile, eps: f64) -> Profile {
        y.axpy(eps, &sys.ftrl_field(y).unwrap())
    }

    #[test]
    fn degenerate_cases_are_euler() {
        let sys = rps();
        let y = y0();
        let e = euler(&sys, &y, 0.1);
        assert_eq!(discrete_step(&sys, DiscreteRule::ExtraGradient, &y, None, 0.1, 0.0).unwrap(), e);
        // x(t) = x(t - eps): same point, and a dual shift along the ones vector
        for prev in [y.clone(), y.with_values(y.as_slice().iter().map(|v| v + 2.5).collect())] {
            let o = discrete_step(&sys, DiscreteRule::Optimistic, &y, Some(&prev), 0.1, 0.3).unwrap();
            assert!(o.sub(&e).max_abs() < 1e-15);
        }
        assert_eq!(discrete_step(&sys, DiscreteRule::NegativeMomentum, &y, None, 0.1, 0.5).unwrap(), e);
    }

    /// Two-stage extra-gradient written out with plain arrays.
    fn extragradient_oracle(y: [[f64; 3]; 2], eps: f64, alpha: f64) -> [[f64; 3]; 2] {
        let a = [[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]];
        let softmax = |v: [f64; 3]| {
            let m = v.iter().cloned().fold(f64::MIN, f64::max);
            let e = v.map(|t| (t - m).exp());
            let s: f64 = e.iter().sum();
            e.map(|t| t / s)
        };
        // A^{12} = a, A^{21} = -a^T = a for this antisymmetric block
        let mul = |v: [f64; 3]| [0, 1, 2].map(|r| (0..3).map(|c| a[r][c] * v[c]).sum::<f64>());
        let x = [softmax(y[0]), softmax(y[1])];
        let b = [
            [0, 1, 2].map(|k| y[0][k] + alpha * mul(x[1])[k]),
            [0, 1, 2].map(|k| y[1][k] + alpha * mul(x[0])[k]),
        ];
        let c = [softmax(b[0]), softmax(b[1])];
        [
            [0, 1, 2].map(|k| y[0][k] + eps * mul(c[1])[k]),
            [0, 1, 2].map(|k| y[1][k] + eps * mul(c[0])[k]),
        ]
    }

    #[test]
    fn extragradient_step_matches_two_stage_oracle() {
        let sys = rps();
        for y in [Profile::zeros(&[3, 3]), y0()] {
            let got = discrete_step(&sys, DiscreteRule::ExtraGradient, &y, None, 0.1, 0.05).unwrap();
            let arr = |i: usize| [y.agent(i)[0], y.agent(i)[1], y.agent(i)[2]];
            let want = extragradient_oracle([arr(0), arr(1)], 0.1, 0.05);
            assert!(got.sub(&Profile::new(want.iter().map(|r| r.to_vec()).collect())).max_abs() < 1e-15);
        }
    }

    #[test]
    fn momentum_rules_use_history() {
        let sys = rps();
        let y_prev = y0();
        let y = euler(&sys, &y_prev, 0.1);
        let nm = discrete_step(&sys, DiscreteRule::NegativeMomentum, &y, Some(&y_prev), 0.1, 0.5).unwrap();
        let want = euler(&sys, &y, 0.1).axpy(-0.5, &y.sub(&y_prev));
        assert_eq!(nm, want);

        let opt = discrete_step(&sys, DiscreteRule::Optimistic, &y, Some(&y_prev), 0.1, 0.5).unwrap();
        let dx = sys.strategies(&y).unwrap().sub(&sys.strategies(&y_prev).unwrap());
        let want = euler(&sys, &y, 0.1).axpy(0.5, &sys.game().apply(&dx));
        assert!(opt.sub(&want).max_abs() < 1e-15);
    }

    #[test]
    fn learner_tracks_history() {
        let sys = rps();
        let mut l = DiscreteLearner::new(DiscreteRule::NegativeMomentum, 0.05, 0.3, y0());
        let states = l.run(&sys, 3).unwrap();
        assert_eq!(states.len(), 3);
        let step1 = discrete_step(&sys, l.rule, &y0(), None, 0.05, 0.3).unwrap();
        let step2 = discrete_step(&sys, l.rule, &step1, Some(&y0()), 0.05, 0.3).unwrap();
        assert_eq!(states[0], step1);
        assert_eq!(states[1], step2);
        assert_eq!(l.state(), &states[2]);
    }

    #[test]
    fn rejects_bad_parameters_and_names() {
        let sys = rps();
        assert!(discrete_step(&sys, DiscreteRule::Optimistic, &y0(), None, 0.0, 0.1).is_err());
        assert!(discrete_step(&sys, DiscreteRule::Optimistic, &y0(), None, 0.1, -1.0).is_err());
        for r in DiscreteRule::ALL {
            assert_eq!(r.name().parse::<DiscreteRule>().unwrap(), r);
            assert_eq!(serde_json::to_string(&r).unwrap(), format!("\"{}\"", r.name()));
        }
    }
}
