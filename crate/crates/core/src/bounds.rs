//! A priori estimates for solutions, differences of solutions and the
//! block-wise chain used in the attractor construction.

use std::ops::{Add, Mul};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{param_err, Error, Result};
use crate::linalg::SemigroupConstants;
use crate::noise::GammaEstimate;
use crate::paths::{greedy_times, norm, p_variation, same_time, SamplePath};
use crate::solver::{solve_deterministic, solve_yde, YdeSystem};
use crate::young::young_loeve_constant;

/// Relative tolerance used when comparing an empirical norm with its bound.
pub const BOUND_RTOL: f64 = 1e-9;

/// Scalars derived from the system, the semigroup and `Γ(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityConstants {
    pub p: f64,
    pub c_a: f64,
    pub lambda_a: f64,
    pub opnorm_a: f64,
    pub c_f: f64,
    pub c_g: f64,
    pub c_g_prime: f64,
    pub g_sup: Option<f64>,
    pub f0_norm: f64,
    pub g0_norm: f64,
    /// `|A| + C_f`
    pub l: f64,
    /// `C_A C_f`
    pub l_f: f64,
    /// `λ_A − C_A C_f`
    pub lambda: f64,
    pub k: f64,
    pub alpha: f64,
    /// Greedy budget `1/(2(K+1)C_g)`, infinite when `C_g = 0`.
    pub gamma_greedy: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub g_hat: f64,
    pub gamma_p: f64,
    pub gamma_stderr: f64,
}

impl StabilityConstants {
    /// Evaluates every derived constant from the raw inputs.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        p: f64,
        semi: &SemigroupConstants,
        c_f: f64,
        c_g: f64,
        c_g_prime: f64,
        g_sup: Option<f64>,
        f0_norm: f64,
        g0_norm: f64,
        gamma: &GammaEstimate,
    ) -> Result<Self> {
        if !(p > 1.0 && p < 2.0) {
            return Err(param_err!("p must lie in (1, 2), got {p}"));
        }
        for (name, v) in [("C_f", c_f), ("C_g", c_g), ("C'_g", c_g_prime), ("Γ(p)", gamma.value)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(param_err!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        let (c_a, lambda_a, opnorm_a) = (semi.c_a, semi.lambda_a, semi.opnorm_a);
        let l = opnorm_a + c_f;
        if !(l > 0.0) {
            return Err(param_err!("|A| + C_f must be positive"));
        }
        let l_f = c_a * c_f;
        let lambda = lambda_a - l_f;
        let k = young_loeve_constant(p);
        let alpha = (1.0 + 1.0 / (k + 1.0)).ln();
        let gamma_greedy = if c_g > 0.0 { 1.0 / (2.0 * (k + 1.0) * c_g) } else { f64::INFINITY };
        let g_term = if c_g > 0.0 { g0_norm / ((k + 1.0) * c_g) } else { 0.0 };
        let m0 = f0_norm / l + g_term;
        let m1 = k * c_a * lambda_a.exp() * (1.0 + opnorm_a);
        let growth = if lambda.abs() < 1e-12 { 1.0 } else { lambda.exp_m1() / lambda };
        let m2 = (c_a * growth).max(m1 * c_g / l + m1 / (k + 1.0)).max(m1 * c_g) * f0_norm.max(g0_norm);
        let mut c = StabilityConstants {
            p,
            c_a,
            lambda_a,
            opnorm_a,
            c_f,
            c_g,
            c_g_prime,
            g_sup,
            f0_norm,
            g0_norm,
            l,
            l_f,
            lambda,
            k,
            alpha,
            gamma_greedy,
            m0,
            m1,
            m2,
            g_hat: 0.0,
            gamma_p: gamma.value,
            gamma_stderr: gamma.stderr,
        };
        c.g_hat = c.noise_term(gamma.value);
        Ok(c)
    }

    /// `2(K+1)C_g`
    pub fn scale(&self) -> f64 {
        2.0 * (self.k + 1.0) * self.c_g
    }

    /// `Ĝ` as a function of `Γ(p)`:
    /// `C_A e^{λ_A}(1+|A|) e^{4L} {[2(K+1)C_gΓ]^p + 2(K+1)C_gΓ}`.
    pub fn noise_term(&self, gamma_p: f64) -> f64 {
        let u = self.scale() * gamma_p;
        self.c_a * self.lambda_a.exp() * (1.0 + self.opnorm_a) * (4.0 * self.l).exp() * (u.powf(self.p) + u)
    }

    /// The same bracket with the prefactor `e^{λ_A + 2L}` that appears in the
    /// displayed attractor condition.
    pub fn noise_term_displayed(&self, gamma_p: f64) -> f64 {
        let u = self.scale() * gamma_p;
        self.c_a * (1.0 + self.opnorm_a) * (self.lambda_a + 2.0 * self.l).exp() * (u.powf(self.p) + u)
    }

    /// Whether `λ = λ_A − C_A C_f > 0`.
    pub fn dissipative(&self) -> bool {
        self.lambda > 0.0
    }
}

/// [`StabilityConstants::from_parts`] with inputs read from the system.
pub fn derive_constants(sys: &YdeSystem, semi: &SemigroupConstants, gamma: &GammaEstimate) -> Result<StabilityConstants> {
    StabilityConstants::from_parts(
        gamma.p,
        semi,
        sys.c_f(),
        sys.c_g(),
        sys.c_g_prime(),
        sys.g_sup(),
        norm(sys.f0()),
        norm(sys.g0()),
        gamma,
    )
}

/// `F, Λ0, Λ1, Λ2, G, H` of a driver on one interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalFunctionals {
    pub seminorm: f64,
    pub length: f64,
    pub f: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub g: f64,
    pub h: f64,
}

impl IntervalFunctionals {
    pub fn from_seminorm(s: f64, length: f64, c: &StabilityConstants) -> Self {
        let p = c.p;
        let u = c.scale() * s;
        let f = (c.alpha * (1.0 + u.powf(p)) + 2.0 * c.l * length).exp();
        let lambda0 = (1.0 + u.powf(p)) * f;
        let lambda1 = (1.0 + u.powf(p - 1.0)) * f;
        let lambda2 = 2f64.powf((p - 1.0) / p) * (1.0 + u.powf(2.0 * p - 1.0)) * f;
        IntervalFunctionals {
            seminorm: s,
            length,
            f,
            lambda0,
            lambda1,
            lambda2,
            g: s * lambda1,
            h: 1.0 + s * (1.0 + lambda2),
        }
    }
}

pub fn interval_functionals(x: &SamplePath, a: f64, b: f64, c: &StabilityConstants) -> Result<IntervalFunctionals> {
    let s = p_variation(x, c.p, a, b)?;
    Ok(IntervalFunctionals::from_seminorm(s, b - a, c))
}

/// An empirical norm next to its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub empirical: f64,
    pub bound: f64,
}

impl BoundCheck {
    fn new(name: &str, empirical: f64, bound: f64) -> Self {
        BoundCheck { name: name.to_string(), empirical, bound }
    }

    pub fn holds(&self) -> bool {
        self.empirical <= self.bound * (1.0 + BOUND_RTOL) || self.bound.is_infinite()
    }

    /// `bound − empirical`, relative to `max(1, bound)`.
    pub fn slack(&self) -> f64 {
        if self.bound.is_infinite() {
            return f64::INFINITY;
        }
        (self.bound - self.empirical) / self.bound.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub greedy_count: usize,
    pub seminorm: f64,
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.holds()).count()
    }

    pub fn worst_slack(&self) -> f64 {
        self.checks.iter().map(BoundCheck::slack).fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn norms_on(y: &SamplePath, p: f64, a: f64, b: f64) -> Result<(f64, f64, f64)> {
    let r = y.restrict(a, b)?;
    let start = norm(r.first());
    Ok((start, r.sup_norm(), start + p_variation(&r, p, a, b)?))
}

/// Supremum and p-variation bounds for a solution `y` on `[a, b]`.
///
/// Checks: `sup` and `pvar` from the greedy-count estimates, `pvar-g0` with
/// `‖f(0)‖/L ∨ 2‖g(0)‖`, `pvar-bounded` when `g` is bounded, and `pvar-lambda`,
/// the `‖y_a‖Λ1 + M0Λ2` form. The first two and the last need `M0 < ∞`,
/// which fails when `C_g = 0` but `g(0) ≠ 0`; they are omitted then.
pub fn apriori_bounds(y: &SamplePath, x: &SamplePath, c: &StabilityConstants, a: f64, b: f64) -> Result<BoundReport> {
    let p = c.p;
    let greedy = greedy_times(x, p, c.gamma_greedy, a, b)?;
    let n = greedy.count as f64;
    let s = p_variation(x, p, a, b)?;
    let (ya, sup, pvar) = norms_on(y, p, a, b)?;
    let len = b - a;
    let grow = (c.alpha * n + 2.0 * c.l * len).exp();
    let np = n.powf((p - 1.0) / p);
    let mut checks = Vec::new();
    let m0_finite = c.c_g > 0.0 || c.g0_norm == 0.0;
    if m0_finite {
        let sup_bound = (ya + c.m0 * n) * grow;
        checks.push(BoundCheck::new("sup", sup, sup_bound));
        checks.push(BoundCheck::new("pvar", pvar, sup_bound * np));
        let lf = IntervalFunctionals::from_seminorm(s, len, c);
        checks.push(BoundCheck::new("pvar-lambda", pvar, ya * lf.lambda1 + c.m0 * lf.lambda2));
    }
    let f_term = c.f0_norm / c.l;
    checks.push(BoundCheck::new(
        "pvar-g0",
        pvar,
        (ya + f_term.max(2.0 * c.g0_norm) * (1.0 + s) * n) * grow * np,
    ));
    if let Some(gs) = c.g_sup {
        checks.push(BoundCheck::new(
            "pvar-bounded",
            pvar,
            (ya + f_term.max(2.0 * gs) * (1.0 + s) * n) * (2.0 * c.l * len).exp() * np,
        ));
    }
    Ok(BoundReport { greedy_count: greedy.count, seminorm: s, checks })
}

fn same_grid(u: &SamplePath, v: &SamplePath) -> bool {
    u.len() == v.len() && u.times().iter().zip(v.times()).all(|(s, t)| same_time(*s, *t))
}

/// Bounds for `z = y2 − y1` on `[a, b]`.
///
/// `general` uses `N′ ≤ 1 + [2(K+1)(C_g ∨ C′_g)]^p ⦀x⦀^p (1 + ⦀y1⦀)^p`;
/// `linear` (only for affine `g`) is `‖z_a‖ e^{αN + 2L(b−a)}`.
pub fn two_solution_bounds(
    y1: &SamplePath,
    y2: &SamplePath,
    x: &SamplePath,
    c: &StabilityConstants,
    g_linear: bool,
    a: f64,
    b: f64,
) -> Result<BoundReport> {
    if !same_grid(y1, y2) || y1.dim() != y2.dim() {
        return Err(param_err!("both trajectories must share one grid and dimension"));
    }
    let p = c.p;
    let z = y2.difference(y1)?;
    let (za, _, zpvar) = norms_on(&z, p, a, b)?;
    let s = p_variation(x, p, a, b)?;
    let y1_semi = p_variation(y1, p, a, b)?;
    let cg = 2.0 * (c.k + 1.0) * c.c_g.max(c.c_g_prime);
    let n_prime = 1.0 + (cg * s).powf(p) * (1.0 + y1_semi).powf(p);
    let len = b - a;
    let general = za * n_prime.powf((p - 1.0) / p) * 2f64.powf(n_prime) * (2.0 * c.l * len).exp();
    let greedy = greedy_times(x, p, c.gamma_greedy, a, b)?;
    let mut checks = vec![BoundCheck::new("general", zpvar, general)];
    if g_linear {
        let n = greedy.count as f64;
        checks.push(BoundCheck::new("linear", zpvar, za * (c.alpha * n + 2.0 * c.l * len).exp()));
    }
    Ok(BoundReport { greedy_count: greedy.count, seminorm: s, checks })
}

/// Distance between a solution and the noise-free flow from the same start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub y_a_norm: f64,
    pub h_sup: f64,
    pub h_pvar: f64,
    pub seminorm: f64,
    pub greedy_count: usize,
    /// `‖h‖_∞ / ((‖y_a‖^{1/p} + 1) ⦀x⦀ N)`; `0` when `h ≡ 0`.
    pub ratio_sup: f64,
    /// `‖h‖_{p-var} / ((‖y_a‖^{1/p} + 1) ⦀x⦀ N^{(2p−1)/p})`.
    pub ratio_pvar: f64,
    /// `‖μ_euler − μ_rk4‖_∞`, the discretisation error of the reference flow.
    pub scheme_gap: f64,
}

/// Compares the Euler solution `y` on `[a, b]` with `μ' = Aμ + f(μ)`, `μ_a = y_a`.
///
/// `μ` is computed with the same Euler scheme driven by a constant path, so
/// `h = y − μ` isolates the effect of the noise; the RK4 reference flow is
/// used only to report the scheme gap. Requires bounded `g`.
pub fn deterministic_comparison(
    y: &SamplePath,
    sys: &YdeSystem,
    x: &SamplePath,
    c: &StabilityConstants,
    a: f64,
    b: f64,
) -> Result<ComparisonReport> {
    if sys.g_sup().is_none() {
        return Err(Error::Precondition("deterministic comparison needs a bounded diffusion field".into()));
    }
    let y = y.restrict(a, b)?;
    let mesh = (b - a) / (y.len() - 1) as f64;
    let flat = SamplePath::from_flat(y.times().to_vec(), vec![0.0; y.len() * sys.noise_dim()], sys.noise_dim())?;
    let mu = solve_yde(sys, &flat, y.first(), a, b, mesh)?;
    let mu_ref = solve_deterministic(sys, y.first(), a, b, mesh)?;
    let h = y.difference(&mu)?;
    let p = c.p;
    let h_sup = h.sup_norm();
    let h_pvar = norm(h.first()) + p_variation(&h, p, a, b)?;
    let s = p_variation(x, p, a, b)?;
    let n = greedy_times(x, p, c.gamma_greedy, a, b)?.count;
    let ya = norm(y.first());
    let scale = (ya.powf(1.0 / p) + 1.0) * s;
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    Ok(ComparisonReport {
        y_a_norm: ya,
        h_sup,
        h_pvar,
        seminorm: s,
        greedy_count: n,
        ratio_sup: ratio(h_sup, scale * n as f64),
        ratio_pvar: ratio(h_pvar, scale * (n as f64).powf((2.0 * p - 1.0) / p)),
        scheme_gap: mu.difference(&mu_ref)?.sup_norm(),
    })
}

/// Block-wise chain estimate on unit blocks `Δ_k = [a+k, a+k+1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    /// `‖y_{a+k}‖ e^{λk}` for `k = 0..=n`.
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Grid points on `[a, a+n+1)` where the estimate fails.
    pub violations: usize,
    /// Smallest `(rhs − lhs)/max(1, rhs)` over all grid points.
    pub worst_slack: f64,
    pub dissipative: bool,
}

/// Evaluates `‖y_t‖e^{λt} ≤ C_A‖y_0‖ + C_A‖f(0)‖(e^{λt} − 1)/λ
/// + Σ_{k≤j} e^{λ_A} K C_A (1+|A|) ⦀x⦀_{Δ_k} e^{λk} [C_g‖y‖_{p-var,Δ_k} + ‖g(0)‖]`
/// for `t ∈ Δ_j`, `j ≤ n`. Times are measured from the start of `y`.
pub fn ytest_chain_bound(y: &SamplePath, x: &SamplePath, c: &StabilityConstants, n: usize) -> Result<ChainReport> {
    let a = y.start();
    let end = a + (n + 1) as f64;
    if !y.covers(a, end) || !x.covers(a, end) {
        return Err(crate::error::domain_err!("chain estimate needs paths on [{a}, {end}]"));
    }
    let p = c.p;
    let pref = c.lambda_a.exp() * c.k * c.c_a * (1.0 + c.opnorm_a);
    let mut cumulative = Vec::with_capacity(n + 1);
    let mut total = 0.0;
    for k in 0..=n {
        let (s0, s1) = (a + k as f64, a + k as f64 + 1.0);
        let sx = p_variation(x, p, s0, s1)?;
        let (_, _, ypv) = norms_on(y, p, s0, s1)?;
        total += pref * sx * (c.lambda * k as f64).exp() * (c.c_g * ypv + c.g0_norm);
        cumulative.push(total);
    }
    let y0 = norm(y.first());
    let drift = |t: f64| {
        let growth = if c.lambda.abs() < 1e-12 { t } else { (c.lambda * t).exp_m1() / c.lambda };
        c.c_a * y0 + c.c_a * c.f0_norm * growth
    };
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for (i, &t) in y.times().iter().enumerate() {
        let rel = t - a;
        if rel >= (n + 1) as f64 - 1e-9 {
            break;
        }
        let j = (rel + 1e-9).floor().max(0.0) as usize;
        let lhs = norm(y.value(i)) * (c.lambda * rel).exp();
        let rhs = drift(rel) + cumulative[j.min(n)];
        if lhs > rhs * (1.0 + BOUND_RTOL) {
            violations += 1;
        }
        worst = worst.min((rhs - lhs) / rhs.max(1.0));
    }
    let mut lhs = Vec::with_capacity(n + 1);
    let mut rhs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = a + k as f64;
        lhs.push(norm(&y.eval(t)?) * (c.lambda * k as f64).exp());
        rhs.push(drift(k as f64) + cumulative[k]);
    }
    Ok(ChainReport { lhs, rhs, violations, worst_slack: worst, dissipative: c.dissipative() })
}

/// `T_n = max{a, u_0} Π_{k<n}(1+α_k) + Σ_{k<n} β_k Π_{k<j<n}(1+α_j)` for
/// `n = 1..=len`, via `T_{n+1} = T_n(1+α_n) + β_n`.
///
/// Generic so that exact rational arithmetic can be used.
pub fn discrete_gronwall<T>(a: T, u0: T, alphas: &[T], betas: &[T]) -> Result<Vec<T>>
where
    T: Clone + PartialOrd + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    if alphas.len() != betas.len() {
        return Err(param_err!("alpha and beta sequences differ in length"));
    }
    let zero = T::zero();
    if a < zero || u0 < zero || alphas.iter().chain(betas).any(|v| *v < zero) {
        return Err(param_err!("discrete Gronwall inputs must be nonnegative"));
    }
    let mut t = if a >= u0 { a } else { u0 };
    let mut out = Vec::with_capacity(alphas.len());
    for (al, be) in alphas.iter().zip(betas) {
        t = t * (T::one() + al.clone()) + be.clone();
        out.push(t.clone());
    }
    Ok(out)
}
