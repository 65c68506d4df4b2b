//! The stability criterion and random-attractor experiments.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{IntervalFunctionals, StabilityConstants};
use crate::error::{domain_err, param_err, Error, Result};
use crate::linalg::expm;
use crate::noise::{FbmSampler, FbmSpec};
use crate::paths::{norm, p_variation, SamplePath, TIME_TOL};
use crate::solver::{solve_endpoint, solve_yde, YdeSystem};
use crate::stats::{fit_line, mean, std_error, LineFit};

/// Both sides of the attractor condition `λ_A − C_A C_f > Ĝ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub lhs: f64,
    pub rhs: f64,
    /// The bracket with prefactor `e^{λ_A + 2L}` instead of `e^{λ_A}e^{4L}`.
    pub rhs_displayed: f64,
    pub margin: f64,
    pub satisfied: bool,
    /// Margin at `Γ(p) ± 1.96·stderr`.
    pub margin_interval: (f64, f64),
    pub gamma_p: f64,
    pub gamma_stderr: f64,
    pub constants: StabilityConstants,
}

pub fn check_criterion(c: &StabilityConstants) -> CriterionReport {
    let lhs = c.lambda_a - c.c_a * c.c_f;
    let rhs = c.g_hat;
    let margin = lhs - rhs;
    let hi_gamma = c.gamma_p + 1.96 * c.gamma_stderr;
    let lo_gamma = (c.gamma_p - 1.96 * c.gamma_stderr).max(0.0);
    CriterionReport {
        lhs,
        rhs,
        rhs_displayed: c.noise_term_displayed(c.gamma_p),
        margin,
        satisfied: margin > 0.0,
        margin_interval: (lhs - c.noise_term(hi_gamma), lhs - c.noise_term(lo_gamma)),
        gamma_p: c.gamma_p,
        gamma_stderr: c.gamma_stderr,
        constants: *c,
    }
}

/// Ensemble settings shared by the attractor experiments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSetup {
    /// Driver law; its grid must cover the window each experiment needs.
    pub noise: FbmSpec,
    pub y0_set: Vec<Vec<f64>>,
    /// Pullback horizon `n_max` or forward horizon.
    pub horizon: usize,
    pub mesh: f64,
    pub realizations: usize,
}

impl ExperimentSetup {
    fn validate(&self, sys: &YdeSystem, from: f64, to: f64) -> Result<FbmSampler> {
        if self.horizon == 0 || self.realizations == 0 {
            return Err(param_err!("horizon and realization count must be positive"));
        }
        if self.y0_set.is_empty() {
            return Err(param_err!("need at least one initial value"));
        }
        if let Some(v) = self.y0_set.iter().find(|v| v.len() != sys.dim()) {
            return Err(param_err!("initial value {v:?} does not have dimension {}", sys.dim()));
        }
        if self.noise.dimension() != sys.noise_dim() {
            return Err(param_err!(
                "noise has {} components, system expects {}",
                self.noise.dimension(),
                sys.noise_dim()
            ));
        }
        let g = self.noise.grid;
        if g.start > from + TIME_TOL || g.end < to - TIME_TOL {
            return Err(domain_err!("noise grid [{}, {}] does not cover [{from}, {to}]", g.start, g.end));
        }
        FbmSampler::new(&self.noise)
    }
}

/// Pullback estimate of the attractor for one driver realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorEstimate {
    pub realization: usize,
    /// Mean of the endpoints at the final horizon.
    pub point: Vec<f64>,
    /// Diameter of the endpoint set for `n = 1..=horizon`.
    pub diameters: Vec<f64>,
    /// Fit of `log diameter` against `n`.
    pub fit: Option<LineFit>,
    pub singleton: bool,
    /// Initial values whose trajectory blew up (excluded).
    pub blowups: usize,
    pub horizon: usize,
}

impl AttractorEstimate {
    pub fn final_diameter(&self) -> f64 {
        self.diameters.last().copied().unwrap_or(0.0)
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Relative size below which diameters are round-off.
pub const ROUNDOFF_FLOOR: f64 = 1e-14;
/// Relative diameter below which the attractor is declared a single point.
pub const SINGLETON_TOL: f64 = 1e-6;

fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut d = 0.0_f64;
    for (i, u) in points.iter().enumerate() {
        for v in &points[i + 1..] {
            d = d.max(norm(&u.iter().zip(v).map(|(a, b)| a - b).collect::<Vec<_>>()));
        }
    }
    d
}

fn centroid(points: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    for p in points {
        c.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    let n = points.len().max(1) as f64;
    c.iter_mut().for_each(|a| *a /= n);
    c
}

/// Fit of `log values[n−1]` against `n` over the last `⌈len/2⌉` entries above `floor`.
fn decay_fit(values: &[f64], floor: f64) -> Option<LineFit> {
    let usable: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > floor && v.is_finite())
        .map(|(i, v)| ((i + 1) as f64, v.ln()))
        .collect();
    let keep = values.len().div_ceil(2);
    let tail = &usable[usable.len().saturating_sub(keep)..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail.iter().copied().unzip();
    fit_line(&xs, &ys)
}

fn pullback_single(sys: &YdeSystem, x: &SamplePath, setup: &ExperimentSetup, realization: usize) -> Result<AttractorEstimate> {
    let mut alive = vec![true; setup.y0_set.len()];
    let mut diameters = Vec::with_capacity(setup.horizon);
    let mut last = Vec::new();
    for n in 1..=setup.horizon {
        let mut ends = Vec::with_capacity(setup.y0_set.len());
        for (i, y0) in setup.y0_set.iter().enumerate() {
            if !alive[i] {
                continue;
            }
            match solve_endpoint(sys, x, y0, -(n as f64), 0.0, setup.mesh) {
                Ok(v) => ends.push(v),
                Err(Error::BlowUp { .. }) => alive[i] = false,
                Err(e) => return Err(e),
            }
        }
        diameters.push(diameter(&ends));
        last = ends;
    }
    let point = centroid(&last, sys.dim());
    let scale = 1.0 + norm(&point);
    let fit = decay_fit(&diameters, ROUNDOFF_FLOOR * scale);
    let final_d = diameters.last().copied().unwrap_or(0.0);
    Ok(AttractorEstimate {
        realization,
        singleton: !last.is_empty() && final_d < SINGLETON_TOL * scale,
        point,
        diameters,
        fit,
        blowups: alive.iter().filter(|a| !**a).count(),
        horizon: setup.horizon,
    })
}

/// For each realization `x`, solves from every initial value over `[−n, 0]`,
/// `n = 1..=horizon`, and records the diameter of the endpoint set at time 0.
///
/// Solving on `[−n, 0]` with `x` equals solving on `[0, n]` with `θ_{−n}x`.
pub fn pullback_experiment(sys: &YdeSystem, setup: &ExperimentSetup) -> Result<Vec<AttractorEstimate>> {
    let sampler = setup.validate(sys, -(setup.horizon as f64), 0.0)?;
    (0..setup.realizations)
        .into_par_iter()
        .map(|i| pullback_single(sys, &sampler.sample_indexed(i as u64), setup, i))
        .collect()
}

/// Forward distances to a reference solution for one realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub realization: usize,
    /// `max_i ‖y(n, x, y0_i) − y(n, x, y_ref)‖` for `n = 1..=horizon`.
    pub distances: Vec<f64>,
    pub fit: Option<LineFit>,
    /// Fitted slope, or `−∞` when all distances vanish.
    pub rate: f64,
    /// Whether the 95% slope interval lies below 0.
    pub decaying: bool,
}

fn forward_single(
    sys: &YdeSystem,
    x: &SamplePath,
    setup: &ExperimentSetup,
    reference: &[f64],
    realization: usize,
) -> Result<DecayReport> {
    let end = setup.horizon as f64;
    let per_unit = (1.0 / setup.mesh).round() as usize;
    let r = solve_yde(sys, x, reference, 0.0, end, setup.mesh)?;
    let mut distances = vec![0.0_f64; setup.horizon];
    let mut scale = 1.0_f64;
    for y0 in &setup.y0_set {
        let y = solve_yde(sys, x, y0, 0.0, end, setup.mesh)?;
        for n in 1..=setup.horizon {
            let (u, v) = (y.value(n * per_unit), r.value(n * per_unit));
            let d = norm(&u.iter().zip(v).map(|(a, b)| a - b).collect::<Vec<_>>());
            distances[n - 1] = distances[n - 1].max(d);
            scale = scale.max(1.0 + norm(v));
        }
    }
    let fit = decay_fit(&distances, ROUNDOFF_FLOOR * scale);
    let rate = if distances.iter().all(|d| *d == 0.0) {
        f64::NEG_INFINITY
    } else {
        fit.map(|f| f.slope).unwrap_or(f64::NAN)
    };
    let decaying = rate == f64::NEG_INFINITY || fit.map(|f| f.slope_interval(1.96).1 < 0.0).unwrap_or(false);
    Ok(DecayReport { realization, distances, fit, rate, decaying })
}

/// Solves forward on `[0, horizon]` from each initial value and from
/// `reference` (default: the first initial value) along the same driver.
pub fn forward_experiment(sys: &YdeSystem, setup: &ExperimentSetup, reference: Option<&[f64]>) -> Result<Vec<DecayReport>> {
    let sampler = setup.validate(sys, 0.0, setup.horizon as f64)?;
    if (1.0 / setup.mesh - (1.0 / setup.mesh).round()).abs() > 1e-9 {
        return Err(param_err!("forward experiment needs a mesh dividing 1, got {}", setup.mesh));
    }
    let reference = reference.map(<[f64]>::to_vec).unwrap_or_else(|| setup.y0_set[0].clone());
    if reference.len() != sys.dim() {
        return Err(param_err!("reference has the wrong dimension"));
    }
    (0..setup.realizations)
        .into_par_iter()
        .map(|i| forward_single(sys, &sampler.sample_indexed(i as u64), setup, &reference, i))
        .collect()
}

/// Ensemble contraction rate of `‖z_n‖` against the theoretical ceilings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub rates: Vec<f64>,
    pub mean_rate: f64,
    pub rate_stderr: f64,
    /// `−λ + C_A e^{λ_A+2L}(1+|A|)[u + u^p]`, `u = 2(K+1)C_gΓ(p)`.
    pub ceiling: f64,
    /// `−margin + 0.1λ`.
    pub threshold: f64,
    pub criterion_satisfied: bool,
    /// Realizations whose rate exceeds `threshold`.
    pub exceedances: usize,
}

impl RateReport {
    /// The rate claim is only asserted when the criterion holds.
    pub fn passes(&self) -> bool {
        !self.criterion_satisfied || self.exceedances == 0
    }
}

/// Compares fitted decay rates with `−margin + 0.1λ`.
pub fn singleton_rate_estimate(reports: &[DecayReport], c: &StabilityConstants) -> RateReport {
    let crit = check_criterion(c);
    let rates: Vec<f64> = reports.iter().map(|r| r.rate).collect();
    let finite: Vec<f64> = rates.iter().copied().filter(|r| r.is_finite()).collect();
    let u = c.scale() * c.gamma_p;
    let ceiling = -c.lambda + c.c_a * (c.lambda_a + 2.0 * c.l).exp() * (1.0 + c.opnorm_a) * (u + u.powf(c.p));
    let threshold = -crit.margin + 0.1 * c.lambda;
    let exceedances = rates.iter().filter(|r| r.is_nan() || **r > threshold).count();
    RateReport {
        mean_rate: if finite.is_empty() { f64::NEG_INFINITY } else { mean(&finite) },
        rate_stderr: if finite.len() > 1 { std_error(&finite) } else { 0.0 },
        rates,
        ceiling,
        threshold,
        criterion_satisfied: crit.satisfied,
        exceedances,
    }
}

/// Truncated `b(x)` and the absorbing radius `b̂(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFunctionals {
    pub b_trunc: f64,
    /// `max_ε Σ_{k≤K'}` for `K' = 1..=K`.
    pub partial_sums: Vec<f64>,
    pub b_hat: f64,
    /// Geometric estimate of the dropped tail; infinite when terms do not decay.
    pub truncation_tail_bound: f64,
    pub divergent: bool,
    /// The maximising `ε`.
    pub eps_star: f64,
    pub k_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailOptions {
    pub k_terms: usize,
    pub eps_grid: Vec<f64>,
    /// Evaluate at `θ_{−shift} x` instead of `x`.
    pub shift: f64,
}

impl TailOptions {
    /// `{0, 1/16, …, 1}`.
    pub fn new(k_terms: usize) -> Self {
        TailOptions { k_terms, eps_grid: (0..=16).map(|i| i as f64 / 16.0).collect(), shift: 0.0 }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }
}

/// Evaluates
/// `b(x) = sup_ε Σ_{k≥1} e^{−λk} H(θ_{−k}x, [−ε, 1−ε]) Π_{j<k}[1 + M1 C_g G(θ_{−j}x, [−ε, 1−ε])]`
/// truncated at `K` terms, and `b̂ = 1 + M2 F(x,[−1,1]) b + M0 Λ0(x,[−1,1])`.
///
/// The seminorm of `θ_{−k}x` on `[−ε, 1−ε]` is that of `x` on
/// `[−k−ε, 1−k−ε]`.
pub fn tail_functionals(x: &SamplePath, c: &StabilityConstants, opts: &TailOptions) -> Result<TailFunctionals> {
    let kt = opts.k_terms;
    if kt == 0 || opts.eps_grid.is_empty() {
        return Err(param_err!("need at least one term and one epsilon"));
    }
    if let Some(e) = opts.eps_grid.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(param_err!("epsilon {e} outside [0, 1]"));
    }
    let o = -opts.shift;
    let need = (o - kt as f64 - 1.0, o + 1.0);
    if !x.covers(need.0, need.1) {
        return Err(domain_err!("driver must cover [{}, {}]", need.0, need.1));
    }
    let p = c.p;
    let mut per_eps: Vec<Vec<f64>> = Vec::with_capacity(opts.eps_grid.len());
    for &eps in &opts.eps_grid {
        let mut prod = 1.0;
        let mut terms = Vec::with_capacity(kt);
        for k in 1..=kt {
            let lo = o - k as f64 - eps;
            let fun = IntervalFunctionals::from_seminorm(p_variation(x, p, lo, lo + 1.0)?, 1.0, c);
            terms.push((-c.lambda * k as f64).exp() * fun.h * prod);
            prod *= 1.0 + c.m1 * c.c_g * fun.g;
        }
        per_eps.push(terms);
    }
    let mut partial_sums = vec![f64::NEG_INFINITY; kt];
    let mut best = (0usize, f64::NEG_INFINITY);
    for (e, terms) in per_eps.iter().enumerate() {
        let mut acc = 0.0;
        for (k, t) in terms.iter().enumerate() {
            acc += t;
            partial_sums[k] = partial_sums[k].max(acc);
        }
        if acc > best.1 {
            best = (e, acc);
        }
    }
    let b_trunc = partial_sums[kt - 1];
    let terms = &per_eps[best.0];
    let half = kt / 2;
    let xs: Vec<f64> = (half..kt).map(|k| (k + 1) as f64).collect();
    let ys: Vec<f64> = terms[half..].iter().map(|t| t.ln()).collect();
    let ratio = fit_line(&xs, &ys).map(|f| f.slope.exp());
    let (tail, divergent) = match ratio {
        Some(q) if q < 1.0 && b_trunc.is_finite() => (terms[kt - 1] * q / (1.0 - q), false),
        _ => (f64::INFINITY, true),
    };
    let whole = IntervalFunctionals::from_seminorm(p_variation(x, p, o - 1.0, o + 1.0)?, 2.0, c);
    Ok(TailFunctionals {
        b_trunc,
        partial_sums,
        b_hat: 1.0 + c.m2 * whole.f * b_trunc + c.m0 * whole.lambda0,
        truncation_tail_bound: tail,
        divergent,
        eps_star: opts.eps_grid[best.0],
        k_terms: kt,
    })
}

/// Empirical dissipation estimate on blocks of length `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipationEstimate {
    pub r: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub eta: f64,
    /// `ξ_r(x)` per driver sample.
    pub xi_samples: Vec<f64>,
    /// Calibrated `ξ_0(x) = max ‖h‖_∞ / (1 + ‖y_0‖^β)` per driver sample.
    pub xi0_samples: Vec<f64>,
    pub mean_xi: f64,
    /// `1 + E ξ_r / (1 − η)`
    pub r_r: f64,
    pub checks: usize,
    pub violations: usize,
    /// Largest `‖y_r‖^{2p} / (η‖y_0‖^{2p} + ξ_r)`.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipationOptions {
    pub r: f64,
    pub epsilon: f64,
    pub mesh: f64,
    /// Initial values used to calibrate `ξ_0` on each driver.
    pub calibration: Vec<Vec<f64>>,
    /// Held-out initial values on which the inequality is checked.
    pub test: Vec<Vec<f64>>,
    pub samples: usize,
}

/// `η = (1+ε)^{2(2p−1)} [(C_A e^{−λr})^{2p} + εβ]`, `β = 1/p`.
pub fn dissipation_eta(c: &StabilityConstants, r: f64, epsilon: f64) -> f64 {
    let p = c.p;
    (1.0 + epsilon).powf(2.0 * (2.0 * p - 1.0)) * ((c.c_a * (-c.lambda * r).exp()).powf(2.0 * p) + epsilon / p)
}

/// `ξ_r` built from `ξ_0`:
/// with `‖y_r‖ ≤ a‖y_0‖ + ξ_0‖y_0‖^β + (c + ξ_0)`, `a = C_A e^{−λr}`,
/// `c = C_A‖f(0)‖/λ`, two convexity splits and Young's inequality with
/// `δ = εβ` give
/// `ξ_r = (1+ε)^{2p−1} C_δ [(1+1/ε)^{2p−1} ξ_0^{2p}]^{p/(p−1)} + (1+1/ε)^{2p−1}(c + ξ_0)^{2p}`,
/// `C_δ = (p−1)/p · (pδ)^{−1/(p−1)}`.
pub fn xi_from_xi0(c: &StabilityConstants, epsilon: f64, xi0: f64) -> f64 {
    let p = c.p;
    let q = 2.0 * p - 1.0;
    let delta = epsilon / p;
    let c_delta = (p - 1.0) / p * (p * delta).powf(-1.0 / (p - 1.0));
    let inv = 1.0 + 1.0 / epsilon;
    let shift = c.c_a * c.f0_norm / c.lambda;
    (1.0 + epsilon).powf(q) * c_delta * (inv.powf(q) * xi0.powf(2.0 * p)).powf(p / (p - 1.0))
        + inv.powf(q) * (shift + xi0).powf(2.0 * p)
}

/// Checks `‖y_r‖^{2p} ≤ η‖y_0‖^{2p} + ξ_r(x)` on held-out initial values.
///
/// For each driver on `[0, r]`, `h = y − μ` against the noise-free flow (same
/// scheme) from each calibration start gives `ξ_0(x)`; `ξ_r(x)` follows from
/// [`xi_from_xi0`].
pub fn dissipation_check(
    sys: &YdeSystem,
    c: &StabilityConstants,
    noise: &FbmSpec,
    opts: &DissipationOptions,
) -> Result<DissipationEstimate> {
    if sys.g_sup().is_none() {
        return Err(Error::Precondition("dissipation check needs a bounded diffusion field".into()));
    }
    if !c.dissipative() {
        return Err(Error::Precondition(format!("needs λ > 0, got {}", c.lambda)));
    }
    if !(opts.epsilon > 0.0 && opts.r > 0.0) {
        return Err(param_err!("need r > 0 and epsilon > 0"));
    }
    let eta = dissipation_eta(c, opts.r, opts.epsilon);
    if eta >= 1.0 {
        return Err(Error::Precondition(format!(
            "η = {eta} ≥ 1 for r = {}, ε = {}; increase r or decrease ε",
            opts.r, opts.epsilon
        )));
    }
    if opts.calibration.is_empty() || opts.test.is_empty() || opts.samples == 0 {
        return Err(param_err!("need calibration values, test values and samples"));
    }
    let g = noise.grid;
    if g.start > TIME_TOL || g.end < opts.r - TIME_TOL {
        return Err(domain_err!("noise grid must cover [0, {}]", opts.r));
    }
    let sampler = FbmSampler::new(noise)?;
    let p = c.p;
    let beta = 1.0 / p;
    let m = sys.noise_dim();
    let per_driver: Vec<(f64, f64, usize, f64)> = (0..opts.samples)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64, usize, f64)> {
            let x = sampler.sample_indexed(i as u64);
            let mut xi0 = 0.0_f64;
            for y0 in &opts.calibration {
                let y = solve_yde(sys, &x, y0, 0.0, opts.r, opts.mesh)?;
                let flat = SamplePath::from_flat(y.times().to_vec(), vec![0.0; y.len() * m], m)?;
                let mu = solve_yde(sys, &flat, y0, 0.0, opts.r, opts.mesh)?;
                let h = y.difference(&mu)?.sup_norm();
                xi0 = xi0.max(h / (1.0 + norm(y0).powf(beta)));
            }
            let xi = xi_from_xi0(c, opts.epsilon, xi0);
            let mut violations = 0;
            let mut worst = 0.0_f64;
            for y0 in &opts.test {
                let yr = solve_endpoint(sys, &x, y0, 0.0, opts.r, opts.mesh)?;
                let lhs = norm(&yr).powf(2.0 * p);
                let rhs = eta * norm(y0).powf(2.0 * p) + xi;
                if lhs > rhs {
                    violations += 1;
                }
                worst = worst.max(lhs / rhs);
            }
            Ok((xi0, xi, violations, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let xi_samples: Vec<f64> = per_driver.iter().map(|t| t.1).collect();
    let mean_xi = mean(&xi_samples);
    Ok(DissipationEstimate {
        r: opts.r,
        epsilon: opts.epsilon,
        beta,
        eta,
        xi0_samples: per_driver.iter().map(|t| t.0).collect(),
        mean_xi,
        r_r: 1.0 + mean_xi / (1.0 - eta),
        checks: opts.samples * opts.test.len(),
        violations: per_driver.iter().map(|t| t.2).sum(),
        worst_ratio: per_driver.iter().map(|t| t.3).fold(0.0, f64::max),
        xi_samples,
    })
}

/// Closed-form solution `y_t = exp(A(t−a) + C(x_t − x_a)) y_0` of
/// `dy = Ay dt + Cy dx` for commuting `A`, `C` and scalar `x`, on the grid of
/// `x` restricted to `[a, b]`.
pub fn commuting_linear_oracle(
    a_mat: &DMatrix<f64>,
    c_mat: &DMatrix<f64>,
    x: &SamplePath,
    y0: &[f64],
    a: f64,
    b: f64,
) -> Result<SamplePath> {
    let d = a_mat.nrows();
    if a_mat.shape() != (d, d) || c_mat.shape() != (d, d) || y0.len() != d {
        return Err(param_err!("A, C must be square of the same size as y0"));
    }
    if x.dim() != 1 {
        return Err(param_err!("the commuting oracle needs a scalar driver"));
    }
    let comm = (a_mat * c_mat - c_mat * a_mat).norm();
    if comm > 1e-12 * a_mat.norm() * c_mat.norm() {
        return Err(Error::Precondition(format!("A and C do not commute: ‖AC − CA‖ = {comm:e}")));
    }
    let r = x.restrict(a, b)?;
    let xa = r.first()[0];
    let v0 = DVector::from_column_slice(y0);
    let mut out = Vec::with_capacity(r.len() * d);
    for (i, &t) in r.times().iter().enumerate() {
        let e = expm(&(a_mat * (t - a) + c_mat * (r.value(i)[0] - xa)));
        out.extend((e * &v0).iter());
    }
    SamplePath::from_flat(r.times().to_vec(), out, d)
}

/// One point of the `C_g → 0` sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub scale: f64,
    pub c_g: f64,
    /// `‖a(x) − μ*‖` per realization.
    pub distances: Vec<f64>,
    pub mean_distance: f64,
    pub stderr: f64,
    /// Mean of `‖a(x) − μ*‖^{2p}`.
    pub moment_2p: f64,
    pub blowups: usize,
}

/// For each scale builds a system and estimates `a(x)` by solving from `μ*`
/// over `[−horizon, 0]` with common drivers.
pub fn attractor_continuity_sweep<F>(
    family: F,
    scales: &[f64],
    setup: &ExperimentSetup,
    mu_star: &[f64],
    p: f64,
) -> Result<Vec<SweepPoint>>
where
    F: Fn(f64) -> Result<YdeSystem>,
{
    let mut out = Vec::with_capacity(scales.len());
    for &scale in scales {
        let sys = family(scale)?;
        let sampler = setup.validate(&sys, -(setup.horizon as f64), 0.0)?;
        let results: Vec<Option<f64>> = (0..setup.realizations)
            .into_par_iter()
            .map(|i| {
                let x = sampler.sample_indexed(i as u64);
                match solve_endpoint(&sys, &x, mu_star, -(setup.horizon as f64), 0.0, setup.mesh) {
                    Ok(a) => Ok(Some(norm(&a.iter().zip(mu_star).map(|(u, v)| u - v).collect::<Vec<_>>()))),
                    Err(Error::BlowUp { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let distances: Vec<f64> = results.iter().flatten().copied().collect();
        out.push(SweepPoint {
            scale,
            c_g: sys.c_g(),
            mean_distance: mean(&distances),
            stderr: std_error(&distances),
            moment_2p: mean(&distances.iter().map(|d| d.powf(2.0 * p)).collect::<Vec<_>>()),
            blowups: results.len() - distances.len(),
            distances,
        });
    }
    Ok(out)
}

/// Bisection for the largest noise scale at which every realization shows a
/// singleton pullback limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub threshold: f64,
    /// `(scale, c_g, all singleton)` for every evaluation.
    pub evaluations: Vec<(f64, f64, bool)>,
}

pub fn locate_singleton_threshold<F>(family: F, setup: &ExperimentSetup, lo: f64, hi: f64, iterations: usize) -> Result<ThresholdReport>
where
    F: Fn(f64) -> Result<YdeSystem>,
{
    if !(lo >= 0.0 && hi > lo) {
        return Err(param_err!("need 0 ≤ lo < hi"));
    }
    let mut evaluations = Vec::new();
    let mut test = |s: f64| -> Result<bool> {
        let sys = family(s)?;
        let ok = pullback_experiment(&sys, setup)?.iter().all(|e| e.singleton && e.blowups == 0);
        evaluations.push((s, sys.c_g(), ok));
        Ok(ok)
    };
    if !test(lo)? {
        return Ok(ThresholdReport { threshold: 0.0, evaluations });
    }
    if test(hi)? {
        return Ok(ThresholdReport { threshold: hi, evaluations });
    }
    let (mut good, mut bad) = (lo, hi);
    for _ in 0..iterations {
        let mid = 0.5 * (good + bad);
        if test(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(ThresholdReport { threshold: good, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::semigroup_constants;
    use crate::noise::GammaEstimate;
    use crate::paths::uniform_times;

    fn constants(lambda_a_scale: f64, c_f: f64, c_g: f64) -> StabilityConstants {
        let a = -DMatrix::<f64>::identity(1, 1) * lambda_a_scale;
        let semi = semigroup_constants(&a, 0.0).unwrap();
        StabilityConstants::from_parts(1.5, &semi, c_f, c_g, 0.0, None, 0.0, 0.0, &GammaEstimate::exact(1.5, 2.0)).unwrap()
    }

    #[test]
    fn criterion_without_noise() {
        let r = check_criterion(&constants(1.0, 0.0, 0.0));
        assert_eq!(r.rhs, 0.0);
        assert_eq!(r.margin, 1.0);
        assert!(r.satisfied);
        let r = check_criterion(&constants(1.0, 1.5, 0.0));
        assert!(!r.satisfied);
    }

    #[test]
    fn margin_decreases_in_noise() {
        let m: Vec<f64> = [0.0, 1e-4, 1e-3, 1e-2].iter().map(|&cg| check_criterion(&constants(1.0, 0.1, cg)).margin).collect();
        assert!(m.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn tail_with_constant_driver_is_geometric() {
        let c = constants(1.0, 0.0, 0.01);
        let ts = uniform_times(-12.0, 1.0, 13 * 8);
        let x = SamplePath::scalar(ts.clone(), vec![0.3; ts.len()]).unwrap();
        let t = tail_functionals(&x, &c, &TailOptions::new(10)).unwrap();
        let q = (-c.lambda).exp();
        let want: f64 = (1..=10).map(|k| q.powi(k)).sum();
        assert!((t.b_trunc - want).abs() < 1e-12);
        assert!(t.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        let full = q / (1.0 - q);
        assert!((t.b_trunc + t.truncation_tail_bound - full).abs() < 1e-9);
    }

    #[test]
    fn oracle_rejects_non_commuting() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -2.0]);
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let ts = uniform_times(0.0, 1.0, 4);
        let x = SamplePath::scalar(ts.clone(), ts).unwrap();
        assert!(matches!(commuting_linear_oracle(&a, &c, &x, &[1.0, 0.0], 0.0, 1.0), Err(Error::Precondition(_))));
        let z = DMatrix::zeros(2, 2);
        let y = commuting_linear_oracle(&a, &z, &x, &[1.0, 1.0], 0.0, 1.0).unwrap();
        let want = expm(&a) * DVector::from_column_slice(&[1.0, 1.0]);
        assert!((y.last()[0] - want[0]).abs() < 1e-14 && (y.last()[1] - want[1]).abs() < 1e-14);
    }

    #[test]
    fn eta_limit() {
        let c = constants(1.0, 0.0, 0.0);
        let e = dissipation_eta(&c, 2.0, 0.0);
        assert!((e - (c.c_a * (-2.0 * c.lambda).exp()).powf(3.0)).abs() < 1e-15);
    }
}
