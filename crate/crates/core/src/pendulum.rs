//! The damped pendulum driven by four fractional noises.
//!
//! State `y = (θ, θ̄)`, `dy = [A y + f(y)] dt + g(y) dx` with
//! `A = [[0, 1], [−k/m, −2b/m]]`, `f(y) = (0, (g/L) sin θ)` and the
//! second row of `g(y)` equal to `(σ1/L sin θ, −2σ2/m θ̄, −σ3/m θ, σ4/m)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bounds::derive_constants;
use crate::error::{param_err, Error, Result};
use crate::fields::Field;
use crate::linalg::{semigroup_constants, spectral_abscissa};
use crate::noise::{estimate_gamma, FbmSpec, TimeGrid};
use crate::paths::norm;
use crate::seed::derive_seed;
use crate::solver::YdeSystem;
use crate::stability::{
    check_criterion, forward_experiment, pullback_experiment, singleton_rate_estimate, AttractorEstimate,
    CriterionReport, ExperimentSetup, RateReport,
};
use crate::stats::mean;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub m: f64,
    /// Damping `b`.
    pub b: f64,
    /// Length `L`.
    pub l_bar: f64,
    /// Spring constant `k`.
    pub k: f64,
    pub g_grav: f64,
    pub sigma: [f64; 4],
    pub hurst: [f64; 4],
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            m: 1.0,
            b: 1.2,
            l_bar: 50.0,
            k: 1.0,
            g_grav: 9.8,
            sigma: [0.0; 4],
            hurst: [0.7; 4],
        }
    }
}

/// Which structural result applies to a noise pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PendulumCase {
    /// `σ4 = 0`: `g(0) = 0`, the zero solution is an equilibrium.
    ZeroSigma4,
    /// `σ2 = σ3 = 0`: `g` is bounded.
    Bounded,
    /// `σ1 = 0`: `g` is affine.
    Linear,
    /// None of the above; only the general criterion applies.
    General,
}

impl PendulumCase {
    pub fn name(self) -> &'static str {
        match self {
            PendulumCase::ZeroSigma4 => "zero-sigma4",
            PendulumCase::Bounded => "bounded",
            PendulumCase::Linear => "linear",
            PendulumCase::General => "general",
        }
    }

    /// Small noise intensities of the right pattern for which the criterion
    /// holds with the default parameters.
    pub fn default_sigma(self) -> [f64; 4] {
        match self {
            PendulumCase::ZeroSigma4 => [1e-10, 1e-10, 1e-10, 0.0],
            PendulumCase::Bounded => [1e-10, 0.0, 0.0, 1e-10],
            PendulumCase::Linear => [0.0, 1e-10, 1e-10, 1e-10],
            PendulumCase::General => [1e-10, 1e-10, 1e-10, 1e-10],
        }
    }
}

impl std::str::FromStr for PendulumCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-sigma4" | "1" => Ok(PendulumCase::ZeroSigma4),
            "bounded" | "2" => Ok(PendulumCase::Bounded),
            "linear" | "3" => Ok(PendulumCase::Linear),
            "general" => Ok(PendulumCase::General),
            _ => Err(param_err!("unknown pendulum case {s:?}")),
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("L", self.l_bar), ("b", self.b), ("k", self.k)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(param_err!("{name} must be positive, got {v}"));
            }
        }
        if !self.g_grav.is_finite() || self.g_grav < 0.0 {
            return Err(param_err!("gravity must be nonnegative, got {}", self.g_grav));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(param_err!("noise intensities must be nonnegative, got {s}"));
        }
        if let Some(h) = self.hurst.iter().find(|h| !(**h > 0.5 && **h < 1.0)) {
            return Err(param_err!("Hurst exponent must lie in (1/2, 1), got {h}"));
        }
        Ok(())
    }

    pub fn a_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -self.k / self.m, -2.0 * self.b / self.m])
    }

    pub fn with_sigma(mut self, sigma: [f64; 4]) -> Self {
        self.sigma = sigma;
        self
    }

    /// First matching case in the order zero-sigma4, bounded, linear.
    pub fn case(&self) -> PendulumCase {
        let [s1, s2, s3, s4] = self.sigma;
        if s4 == 0.0 {
            PendulumCase::ZeroSigma4
        } else if s2 == 0.0 && s3 == 0.0 {
            PendulumCase::Bounded
        } else if s1 == 0.0 {
            PendulumCase::Linear
        } else {
            PendulumCase::General
        }
    }

    /// Whether the noise pattern satisfies the hypotheses of `case`.
    pub fn matches(&self, case: PendulumCase) -> bool {
        let [s1, s2, s3, s4] = self.sigma;
        match case {
            PendulumCase::ZeroSigma4 => s4 == 0.0,
            PendulumCase::Bounded => s2 == 0.0 && s3 == 0.0,
            PendulumCase::Linear => s1 == 0.0,
            PendulumCase::General => true,
        }
    }

    /// Hand-derived `(C_f, C_g, C_g', sup|g|)`.
    pub fn certified_constants(&self) -> (f64, f64, f64, Option<f64>) {
        let [s1, s2, s3, s4] = self.sigma;
        let (a1, a2, a3, a4) = (s1 / self.l_bar, 2.0 * s2 / self.m, s3 / self.m, s4 / self.m);
        let c_g = a1.hypot(a3).max(a2);
        let sup = (s2 == 0.0 && s3 == 0.0).then(|| a1.hypot(a4));
        (self.g_grav / self.l_bar, c_g, a1, sup)
    }
}

pub fn build_pendulum(params: &PendulumParams) -> Result<YdeSystem> {
    params.validate()?;
    let a = params.a_matrix();
    let abscissa = spectral_abscissa(&a)?;
    if abscissa >= 0.0 {
        return Err(Error::Precondition(format!("linear part is not Hurwitz (abscissa {abscissa})")));
    }
    let [s1, s2, s3, s4] = params.sigma;
    let (m, l) = (params.m, params.l_bar);
    let f = Field::zero(2, 1, 2).with_sine(1, 0, 0, params.g_grav / l)?;
    let g = Field::zero(2, 4, 2)
        .with_sine(1, 0, 0, s1 / l)?
        .with_linear(1, 1, 1, -2.0 * s2 / m)?
        .with_linear(1, 2, 0, -s3 / m)?
        .with_offset(1, 3, s4 / m)?;
    YdeSystem::new(a, f, g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOptions {
    pub p: f64,
    pub delta: f64,
    pub gamma_samples: usize,
    /// Grid step of the noise.
    pub step: f64,
    pub mesh: f64,
    pub horizon: usize,
    pub realizations: usize,
    pub y0_set: Vec<Vec<f64>>,
    pub seed: u64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        ScenarioOptions {
            p: 1.5,
            delta: 0.1,
            gamma_samples: 200,
            step: 1.0 / 64.0,
            mesh: 1.0 / 64.0,
            horizon: 20,
            realizations: 8,
            y0_set: vec![vec![1.0, 0.0], vec![-1.0, 0.5], vec![0.5, -1.0], vec![0.0, 0.0]],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub case: PendulumCase,
    pub params: PendulumParams,
    pub criterion: CriterionReport,
    pub estimates: Vec<AttractorEstimate>,
    pub singleton_fraction: f64,
    /// Mean `‖a(x)‖` over realizations.
    pub mean_attractor_norm: f64,
    pub mean_slope: Option<f64>,
    pub rate: RateReport,
}

impl ScenarioReport {
    /// Claims are asserted only when the criterion holds.
    pub fn assertions_active(&self) -> bool {
        self.criterion.satisfied
    }
}

/// Criterion, pullback attractor and forward contraction rate for one case.
pub fn run_scenario(case: PendulumCase, params: &PendulumParams, opts: &ScenarioOptions) -> Result<ScenarioReport> {
    if !params.matches(case) {
        return Err(Error::Precondition(format!(
            "noise intensities {:?} do not fit the {} case",
            params.sigma,
            case.name()
        )));
    }
    let sys = build_pendulum(params)?;
    let semi = semigroup_constants(sys.a(), opts.delta)?;
    let hurst = params.hurst.to_vec();
    let gamma_spec = FbmSpec { hurst: hurst.clone(), ..FbmSpec::new(0.75, 4, TimeGrid::new(-1.0, 1.0, opts.step), derive_seed(opts.seed, 0)) };
    let gamma = estimate_gamma(&gamma_spec, opts.p, opts.gamma_samples)?;
    let c = derive_constants(&sys, &semi, &gamma)?;
    let criterion = check_criterion(&c);

    let h = opts.horizon as f64;
    let pull = ExperimentSetup {
        noise: FbmSpec { hurst: hurst.clone(), ..FbmSpec::new(0.75, 4, TimeGrid::new(-h, 0.0, opts.step), derive_seed(opts.seed, 1)) },
        y0_set: opts.y0_set.clone(),
        horizon: opts.horizon,
        mesh: opts.mesh,
        realizations: opts.realizations,
    };
    let estimates = pullback_experiment(&sys, &pull)?;
    let forward = ExperimentSetup {
        noise: FbmSpec { hurst, ..FbmSpec::new(0.75, 4, TimeGrid::new(0.0, h, opts.step), derive_seed(opts.seed, 2)) },
        ..pull
    };
    let rate = singleton_rate_estimate(&forward_experiment(&sys, &forward, None)?, &c);

    let slopes: Vec<f64> = estimates.iter().filter_map(|e| e.slope()).collect();
    let norms: Vec<f64> = estimates.iter().map(|e| norm(&e.point)).collect();
    Ok(ScenarioReport {
        case,
        params: *params,
        criterion,
        singleton_fraction: estimates.iter().filter(|e| e.singleton).count() as f64 / estimates.len() as f64,
        mean_attractor_norm: mean(&norms),
        mean_slope: (!slopes.is_empty()).then(|| mean(&slopes)),
        estimates,
        rate,
    })
}
