//! FTRL learning dynamics in poly-matrix zero-sum games.
//!
//! The crate integrates Follow-the-Regularized-Leader flows and their
//! dissipative perturbation (DFTRL) on the cumulative-payoff coordinates,
//! and measures the quantities that are conserved or dissipated along them:
//! the Hamiltonian (total utility), the simplex sums and the Fenchel coupling
//! to a Nash equilibrium.
//!
//! ```
//! use polygame::{catalog, dynamics::FlowSystem, integrate, observe};
//!
//! let p = catalog::preset("rps").unwrap();
//! let sys = FlowSystem::homogeneous(p.game.clone(), p.regularizers[0], p.params).unwrap();
//! let y0 = integrate::init_dual_state(sys.regs(), &p.x0).unwrap();
//! let cfg = integrate::IntegratorConfig::rk4(0.01, 1.0, 10);
//! let traj = integrate::integrate(&sys, &y0, &cfg).unwrap();
//! let gf = observe::series(&traj, observe::Observable::Fenchel, &sys, &p.reference).unwrap();
//! assert!(gf.max_increase() <= 1e-7);
//! ```

pub mod catalog;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod integrate;
pub mod matrix;
pub mod observe;
pub mod profile;
pub mod regularizer;

pub use error::{Error, Result};
pub use game::GameSpec;
pub use matrix::Matrix;
pub use profile::{PayoffProfile, Profile, StrategyProfile};
pub use regularizer::{Regularizer, RegularizerKind, RegularizerSpec};
