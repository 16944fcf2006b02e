//! Regularizers on the simplex and their convex conjugates.
//!
//! Each agent carries a regularizer `h` on its simplex. The learning rule only
//! ever touches the conjugate `h*` through its gradient (the mirror map from
//! payoffs to strategies) and its Hessian, so those are the core of the
//! [`Regularizer`] trait. Two closed forms ship:
//!
//! * entropic: `h = sum x log x`, `h* = lse`, mirror map = softmax;
//! * Euclidean: `h = |x|^2 / 2`, mirror map `y - (sum y - 1)/n`, valid only
//!   while the result stays in the interior of the simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::profile::INTERIOR_EPS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerKind {
    Entropic,
    Euclidean,
}

impl RegularizerKind {
    pub fn name(self) -> &'static str {
        match self {
            RegularizerKind::Entropic => "entropic",
            RegularizerKind::Euclidean => "euclidean",
        }
    }
}

impl std::str::FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropic" => Ok(RegularizerKind::Entropic),
            "euclidean" => Ok(RegularizerKind::Euclidean),
            other => Err(Error::InvalidParameter(format!(
                "unknown regularizer `{other}` (expected \"entropic\" or \"euclidean\")"
            ))),
        }
    }
}

/// The interface every dynamics variant relies on.
///
/// Implementations must make `mirror_map` translation invariant along `1`
/// and normalized (`sum_a mirror_map(y)_a = 1`); the conservation laws of the
/// flow depend on both.
pub trait Regularizer {
    fn dim(&self) -> usize;

    /// `h(x)` for `x` on the simplex.
    fn primal_value(&self, x: &[f64]) -> Result<f64>;

    /// `grad h(x)`.
    fn primal_gradient(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// A dual point `y` with `mirror_map(y) = x`.
    fn dual_representative(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `h*(y)`.
    fn dual_value(&self, y: &[f64]) -> Result<f64>;

    /// `grad h*(y)`.
    fn mirror_map(&self, y: &[f64]) -> Result<Vec<f64>>;

    /// `Hess h*(y)` as a dense symmetric matrix.
    fn dual_hessian(&self, y: &[f64]) -> Result<Matrix>;

    /// `Hess h*(y) v` without forming the matrix.
    fn dual_hessian_apply(&self, y: &[f64], v: &[f64]) -> Result<Vec<f64>>;
}

/// Per-agent regularizer choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegularizerSpec {
    pub kind: RegularizerKind,
    pub dim: usize,
}

impl RegularizerSpec {
    pub fn new(kind: RegularizerKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("regularizer dimension must be >= 1".into()));
        }
        Ok(Self { kind, dim })
    }

    pub fn entropic(dim: usize) -> Self {
        Self::new(RegularizerKind::Entropic, dim).expect("dim >= 1")
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(RegularizerKind::Euclidean, dim).expect("dim >= 1")
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension(format!(
                "vector of length {} passed to a regularizer of dimension {}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }

    fn check_positive(x: &[f64]) -> Result<()> {
        match x.iter().position(|v| *v <= 0.0 || !v.is_finite()) {
            Some(coord) => Err(Error::Domain { coord, value: x[coord] }),
            None => Ok(()),
        }
    }

    /// Shared offset `(sum y - 1) / n` of the Euclidean mirror map.
    fn euclidean_shift(y: &[f64]) -> f64 {
        (y.iter().sum::<f64>() - 1.0) / y.len() as f64
    }

    fn euclidean_point(y: &[f64]) -> Result<Vec<f64>> {
        let c = Self::euclidean_shift(y);
        let x: Vec<f64> = y.iter().map(|v| v - c).collect();
        match x.iter().position(|v| !(*v > INTERIOR_EPS)) {
            Some(coord) => Err(Error::Domain { coord, value: x[coord] }),
            None => Ok(x),
        }
    }
}

fn softmax(y: &[f64]) -> Vec<f64> {
    let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = y.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn log_sum_exp(y: &[f64]) -> f64 {
    let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + y.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

impl Regularizer for RegularizerSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn primal_value(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        match self.kind {
            RegularizerKind::Entropic => {
                Self::check_positive(x)?;
                Ok(x.iter().map(|v| v * v.ln()).sum())
            }
            RegularizerKind::Euclidean => Ok(0.5 * x.iter().map(|v| v * v).sum::<f64>()),
        }
    }

    fn primal_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        match self.kind {
            RegularizerKind::Entropic => {
                Self::check_positive(x)?;
                Ok(x.iter().map(|v| v.ln() + 1.0).collect())
            }
            RegularizerKind::Euclidean => Ok(x.to_vec()),
        }
    }

    /// Entropic: `log x` (the `+1` of the gradient dropped). Euclidean: `x`.
    fn dual_representative(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        match self.kind {
            RegularizerKind::Entropic => {
                Self::check_positive(x)?;
                Ok(x.iter().map(|v| v.ln()).collect())
            }
            RegularizerKind::Euclidean => {
                if let Some(coord) = x.iter().position(|v| *v < INTERIOR_EPS) {
                    return Err(Error::Domain { coord, value: x[coord] });
                }
                Ok(x.to_vec())
            }
        }
    }

    fn dual_value(&self, y: &[f64]) -> Result<f64> {
        self.check_len(y)?;
        match self.kind {
            RegularizerKind::Entropic => Ok(log_sum_exp(y)),
            RegularizerKind::Euclidean => {
                Self::euclidean_point(y)?;
                let c = Self::euclidean_shift(y);
                let n = y.len() as f64;
                Ok(0.5 * y.iter().map(|v| v * v).sum::<f64>() - 0.5 * n * c * c)
            }
        }
    }

    fn mirror_map(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y)?;
        match self.kind {
            RegularizerKind::Entropic => Ok(softmax(y)),
            RegularizerKind::Euclidean => Self::euclidean_point(y),
        }
    }

    fn dual_hessian(&self, y: &[f64]) -> Result<Matrix> {
        self.check_len(y)?;
        let n = y.len();
        match self.kind {
            RegularizerKind::Entropic => {
                let s = softmax(y);
                Ok(Matrix::from_fn(n, n, |a, b| {
                    if a == b {
                        s[a] - s[a] * s[b]
                    } else {
                        -s[a] * s[b]
                    }
                }))
            }
            RegularizerKind::Euclidean => {
                Self::euclidean_point(y)?;
                let inv = 1.0 / n as f64;
                Ok(Matrix::from_fn(n, n, |a, b| if a == b { 1.0 - inv } else { -inv }))
            }
        }
    }

    fn dual_hessian_apply(&self, y: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y)?;
        self.check_len(v)?;
        match self.kind {
            RegularizerKind::Entropic => {
                let s = softmax(y);
                let sv: f64 = s.iter().zip(v).map(|(a, b)| a * b).sum();
                Ok(s.iter().zip(v).map(|(si, vi)| si * (vi - sv)).collect())
            }
            RegularizerKind::Euclidean => {
                Self::euclidean_point(y)?;
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                Ok(v.iter().map(|vi| vi - mean).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const E: f64 = std::f64::consts::E;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(*x, *y, epsilon = tol);
        }
    }

    #[test]
    fn primal_values() {
        let ent = RegularizerSpec::entropic(3);
        let euc = RegularizerSpec::euclidean(3);
        let u = [1.0 / 3.0; 3];
        assert_abs_diff_eq!(ent.primal_value(&u).unwrap(), -(3.0_f64.ln()), epsilon = 1e-15);
        assert_abs_diff_eq!(euc.primal_value(&u).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        let x = [0.1, 0.1, 0.8];
        let want = 2.0 * 0.1 * 0.1_f64.ln() + 0.8 * 0.8_f64.ln();
        assert_abs_diff_eq!(ent.primal_value(&x).unwrap(), want, epsilon = 1e-15);
        assert_abs_diff_eq!(want, -0.6390319, epsilon = 1e-7);
        assert!(matches!(
            ent.primal_value(&[0.5, 0.5, 0.0]),
            Err(Error::Domain { coord: 2, .. })
        ));
    }

    #[test]
    fn gradients_and_representatives() {
        let ent = RegularizerSpec::entropic(3);
        let euc = RegularizerSpec::euclidean(3);
        let u = [1.0 / 3.0; 3];
        let y = ent.dual_representative(&u).unwrap();
        close(&y, &[-(3.0_f64.ln()); 3], 1e-15);
        close(&ent.mirror_map(&y).unwrap(), &u, 1e-15);
        close(&ent.primal_gradient(&u).unwrap(), &[1.0 - 3.0_f64.ln(); 3], 1e-15);

        let x = [0.5, 0.3, 0.2];
        close(&euc.primal_gradient(&x).unwrap(), &x, 0.0);
        close(&euc.mirror_map(&euc.dual_representative(&x).unwrap()).unwrap(), &x, 1e-16);

        let x = [0.1, 0.1, 0.8];
        close(&ent.mirror_map(&ent.dual_representative(&x).unwrap()).unwrap(), &x, 1e-15);
        assert!(ent.primal_gradient(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn dual_values() {
        let ent = RegularizerSpec::entropic(3);
        let euc = RegularizerSpec::euclidean(3);
        assert_abs_diff_eq!(ent.dual_value(&[0.0; 3]).unwrap(), 3.0_f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(euc.dual_value(&[0.5, 0.3, 0.2]).unwrap(), 0.19, epsilon = 1e-15);
        let v = ent.dual_value(&[1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v, (E + 2.0).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 1.5514447, epsilon = 1e-7);
        // large payoffs must not overflow
        assert_abs_diff_eq!(ent.dual_value(&[1000.0, 0.0, 0.0]).unwrap(), 1000.0, epsilon = 1e-12);
    }

    #[test]
    fn euclidean_domain_errors_name_the_coordinate() {
        let euc = RegularizerSpec::euclidean(3);
        // shift (2.0 - 1)/3: third coordinate becomes -1/3
        match euc.mirror_map(&[1.5, 0.5, 0.0]) {
            Err(Error::Domain { coord, value }) => {
                assert_eq!(coord, 2);
                assert!(value < 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(euc.dual_value(&[1.5, 0.5, 0.0]), Err(Error::Domain { coord: 2, .. })));
        assert!(euc.dual_hessian(&[1.5, 0.5, 0.0]).is_err());
    }

    #[test]
    fn mirror_maps() {
        let ent = RegularizerSpec::entropic(3);
        let euc = RegularizerSpec::euclidean(3);
        close(&ent.mirror_map(&[0.0; 3]).unwrap(), &[1.0 / 3.0; 3], 1e-16);
        close(&euc.mirror_map(&[0.7, 0.2, 0.4]).unwrap(), &[0.6, 0.1, 0.3], 1e-15);
        let s = ent.mirror_map(&[1.0, 0.0, 0.0]).unwrap();
        close(&s, &[E / (E + 2.0), 1.0 / (E + 2.0), 1.0 / (E + 2.0)], 1e-15);
        close(&s, &[0.5761169, 0.2119416, 0.2119416], 1e-7);
        let big = ent.mirror_map(&[800.0, 799.0, -800.0]).unwrap();
        assert!(big.iter().all(|v| v.is_finite()));
        assert!(big.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn hessians() {
        let ent = RegularizerSpec::entropic(3);
        let h = ent.dual_hessian(&[0.0; 3]).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 1.0 / 3.0 - 1.0 / 9.0 } else { -1.0 / 9.0 };
                assert_abs_diff_eq!(h[(a, b)], want, epsilon = 1e-16);
            }
        }
        let euc = RegularizerSpec::euclidean(2);
        let h = euc.dual_hessian(&[0.5, 0.5]).unwrap();
        assert_eq!(h.to_rows(), vec![vec![0.5, -0.5], vec![-0.5, 0.5]]);

        // diag(s) - s s^T against central differences of the mirror map
        let y = [1.0, 0.0, 0.0];
        let h = ent.dual_hessian(&y).unwrap();
        let step = 1e-5;
        for b in 0..3 {
            let mut yp = y;
            let mut ym = y;
            yp[b] += step;
            ym[b] -= step;
            let fp = ent.mirror_map(&yp).unwrap();
            let fm = ent.mirror_map(&ym).unwrap();
            for a in 0..3 {
                assert_abs_diff_eq!(h[(a, b)], (fp[a] - fm[a]) / (2.0 * step), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn hessian_apply_matches_dense() {
        let y = [0.3, -1.2, 0.7, 0.1];
        let v = [1.0, -2.0, 0.5, 3.0];
        for reg in [RegularizerSpec::entropic(4), RegularizerSpec::euclidean(4)] {
            let y = if reg.kind == RegularizerKind::Euclidean { [0.3, 0.2, 0.25, 0.25] } else { y };
            let dense = reg.dual_hessian(&y).unwrap().mul_vec(&v);
            close(&reg.dual_hessian_apply(&y, &v).unwrap(), &dense, 1e-15);
        }
    }

    #[test]
    fn kind_names_parse() {
        assert_eq!("entropic".parse::<RegularizerKind>().unwrap(), RegularizerKind::Entropic);
        assert_eq!("euclidean".parse::<RegularizerKind>().unwrap(), RegularizerKind::Euclidean);
        assert!("Entropic".parse::<RegularizerKind>().is_err());
        assert_eq!(serde_json::to_string(&RegularizerKind::Euclidean).unwrap(), "\"euclidean\"");
        assert!(RegularizerSpec::new(RegularizerKind::Entropic, 0).is_err());
    }
}
