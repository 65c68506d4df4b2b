//! Numerical machinery for controlled differential equations
//!
//! ```text
//! dy = [A y + f(y)] dt + g(y) dx
//! ```
//!
//! driven by paths of finite p-variation with `1 < p < 2`, where the
//! stochastic integral is a pathwise Young integral.
//!
//! The crate is organised bottom-up:
//!
//! * [`paths`]: sampled paths, p-variation, Hölder norms, greedy times, Wiener shift.
//! * [`noise`]: fractional Brownian motion samplers, the moment functional
//!   `Γ(p)` and temperedness diagnostics.
//! * [`young`]: Young integrals and the Young–Loève defect.
//! * [`linalg`] / [`solver`]: semigroup constants of `A`, vector-field catalog,
//!   the explicit Euler scheme and the variation-of-constants residual.
//! * [`bounds`]: the a priori estimates and the discrete Gronwall lemma.
//! * [`stability`]: the stability criterion and random-attractor experiments.
//! * [`pendulum`]: the stochastically excited inverted pendulum.

pub mod bounds;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod noise;
pub mod paths;
pub mod pendulum;
pub mod seed;
pub mod solver;
pub mod stability;
pub mod stats;
pub mod young;

pub use bounds::{IntervalFunctionals, StabilityConstants};
pub use error::{Error, Result};
pub use fields::Field;
pub use linalg::SemigroupConstants;
pub use noise::{FbmMethod, FbmSampler, FbmSpec, GammaEstimate, TimeGrid};
pub use paths::{GreedyPartition, SamplePath};
pub use pendulum::PendulumParams;
pub use solver::YdeSystem;
pub use stability::{AttractorEstimate, CriterionReport, DissipationEstimate, TailFunctionals};
pub use young::YoungIntegralResult;

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
