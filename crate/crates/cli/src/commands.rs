//! Subcommand bodies. Each writes its artifacts and returns a summary.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use yde_core::bounds::derive_constants;
use yde_core::linalg::{semigroup_constants, tradeoff_curve};
use yde_core::noise::{estimate_gamma, sample_fbm, FbmSampler};
use yde_core::paths::{greedy_times, p_variation, p_variation_bounds, p_variation_norm, SamplePath};
use yde_core::pendulum::{run_scenario, PendulumCase, ScenarioOptions};
use yde_core::seed::derive_seed;
use yde_core::solver::{audit_lipschitz, solve_yde, variation_of_constants_residual};
use yde_core::stability::{
    attractor_continuity_sweep, check_criterion, forward_experiment, pullback_experiment, singleton_rate_estimate,
    ExperimentSetup,
};
use yde_core::young::young_integral;
use yde_core::{FbmSpec, GammaEstimate, StabilityConstants, TimeGrid, YdeSystem};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{num, Output};
use crate::systems::{build_system, pendulum_params, scaled_system};

/// Labels under which each command derives its seeds from the master seed.
pub mod stream {
    pub const FBM: u64 = 1;
    pub const GAMMA: u64 = 2;
    pub const SOLVE: u64 = 3;
    pub const PULLBACK: u64 = 4;
    pub const FORWARD: u64 = 5;
    pub const SWEEP: u64 = 6;
    pub const VERIFY: u64 = 7;
    pub const PVAR: u64 = 8;
    pub const INTEGRATE: u64 = 9;
    pub const PENDULUM: u64 = 10;
}

pub struct RunOutcome {
    pub label: String,
    pub summary: Value,
    pub violations: usize,
    /// Human-readable lines for stdout.
    pub text: String,
}

impl RunOutcome {
    fn new(label: impl Into<String>, summary: Value, text: String) -> Self {
        RunOutcome { label: label.into(), summary, violations: 0, text }
    }
}

pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub out: &'a mut Output,
}

impl Ctx<'_> {
    fn seed(&self, label: u64) -> u64 {
        derive_seed(self.cfg.noise.seed, label)
    }

    fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.cfg.noise.start, self.cfg.noise.end, self.cfg.noise.step)
    }

    fn spec(&self, m: usize, grid: TimeGrid, label: u64) -> Result<FbmSpec, CliError> {
        let hurst = self.cfg.hurst_for(m).map_err(CliError::Usage)?;
        Ok(FbmSpec { hurst, grid, seed: self.seed(label), method: self.cfg.noise.method, amplitude: 1.0 })
    }

    fn system(&self) -> Result<YdeSystem, CliError> {
        Ok(build_system(&self.cfg.system)?)
    }

    /// Γ(p) for the system's driver, on `[−1, 1]`.
    fn gamma(&self, sys: &YdeSystem) -> Result<GammaEstimate, CliError> {
        let spec = self.spec(sys.noise_dim(), TimeGrid::new(-1.0, 1.0, self.cfg.noise.step), stream::GAMMA)?;
        Ok(estimate_gamma(&spec, self.cfg.analysis.p, self.cfg.analysis.gamma_samples)?)
    }

    fn constants(&self, sys: &YdeSystem) -> Result<StabilityConstants, CliError> {
        let semi = semigroup_constants(sys.a(), self.cfg.analysis.delta)?;
        Ok(derive_constants(sys, &semi, &self.gamma(sys)?)?)
    }
}

fn read_path(path: &Path) -> Result<SamplePath, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    SamplePath::from_csv(&text).map_err(|e| CliError::io(path, e))
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn pvar(ctx: &mut Ctx, x: Option<&Path>, p: Option<f64>, from: Option<f64>, to: Option<f64>, gamma: Option<f64>) -> Result<RunOutcome, CliError> {
    let p = p.unwrap_or(ctx.cfg.analysis.p);
    let path = match x {
        Some(f) => read_path(f)?,
        None => sample_fbm(&ctx.spec(1, ctx.grid(), stream::PVAR)?)?,
    };
    let (a, b) = (from.unwrap_or(path.start()), to.unwrap_or(path.end()));
    let seminorm = p_variation(&path, p, a, b)?;
    let (lower, upper) = p_variation_bounds(&path, p, a, b, 256)?;
    let mut summary = json!({
        "p": p, "from": a, "to": b,
        "seminorm": seminorm,
        "norm": p_variation_norm(&path, p, a, b)?,
        "lower_bound": lower, "upper_bound": upper,
    });
    if let Some(g) = gamma {
        let part = greedy_times(&path, p, g, a, b)?;
        summary["greedy"] = json!({ "gamma": g, "count": part.count, "count_bound": part.count_bound(seminorm), "taus": part.taus });
    }
    ctx.out.json("pvar.json", &summary)?;
    let text = format!("p-variation seminorm on [{a}, {b}] with p = {p}: {}", num(seminorm));
    Ok(RunOutcome::new("pvar", summary, text))
}

pub fn fbm(ctx: &mut Ctx, count: usize) -> Result<RunOutcome, CliError> {
    let m = ctx.cfg.noise.hurst.len();
    let spec = ctx.spec(m, ctx.grid(), stream::FBM)?;
    let sampler = FbmSampler::new(&spec)?;
    let mut files = Vec::new();
    for i in 0..count {
        let file = format!("fbm_{i:04}.csv");
        ctx.out.path_csv(&file, &sampler.sample_indexed(i as u64), "fBm sample")?;
        files.push(file);
    }
    let summary = json!({ "count": count, "hurst": spec.hurst, "grid": to_value(&spec.grid), "files": files });
    Ok(RunOutcome::new("fbm", summary, format!("wrote {count} fBm sample path(s)")))
}

pub fn gamma(ctx: &mut Ctx, p: Option<f64>, samples: Option<usize>, hurst: Option<f64>) -> Result<RunOutcome, CliError> {
    let p = p.unwrap_or(ctx.cfg.analysis.p);
    let n = samples.unwrap_or(ctx.cfg.analysis.gamma_samples);
    let m = build_system(&ctx.cfg.system).map(|s| s.noise_dim()).unwrap_or(ctx.cfg.noise.hurst.len());
    let mut spec = ctx.spec(m, TimeGrid::new(-1.0, 1.0, ctx.cfg.noise.step), stream::GAMMA)?;
    if let Some(h) = hurst {
        spec.hurst = vec![h; m];
    }
    let g = estimate_gamma(&spec, p, n)?;
    let summary = json!({ "p": p, "H": spec.hurst, "value": g.value, "stderr": g.stderr, "n": g.n_samples });
    ctx.out.json("gamma.json", &summary)?;
    let text = serde_json::to_string(&summary).expect("json");
    Ok(RunOutcome::new("gamma", summary, text))
}

pub fn integrate(ctx: &mut Ctx, y: Option<&Path>, x: Option<&Path>, from: Option<f64>, to: Option<f64>, levels: Option<u32>) -> Result<RunOutcome, CliError> {
    let xp = match x {
        Some(f) => read_path(f)?,
        None => sample_fbm(&ctx.spec(1, ctx.grid(), stream::INTEGRATE)?)?,
    };
    let yp = match y {
        Some(f) => read_path(f)?,
        None => xp.clone(),
    };
    let (a, b) = (from.unwrap_or(xp.start().max(yp.start())), to.unwrap_or(xp.end().min(yp.end())));
    let levels = levels.unwrap_or(ctx.cfg.analysis.levels);
    let r = young_integral(&yp, &xp, a, b, levels)?;
    ctx.out.path_csv("integral.csv", &r.running, "running integral")?;
    let summary = json!({
        "from": a, "to": b, "levels": levels,
        "value": r.value, "refinement_error": r.refinement_error, "mesh": r.mesh,
    });
    ctx.out.json("integral.json", &summary)?;
    let vals: Vec<String> = r.value.iter().map(|v| num(*v)).collect();
    let text = format!("value = [{}]\nrefinement_error = {}", vals.join(", "), num(r.refinement_error));
    Ok(RunOutcome::new("integrate", summary, text))
}

pub fn solve(ctx: &mut Ctx, x: Option<&Path>, y0: Option<Vec<f64>>, from: Option<f64>, to: Option<f64>, mesh: Option<f64>) -> Result<RunOutcome, CliError> {
    let sys = ctx.system()?;
    let xp = match x {
        Some(f) => read_path(f)?,
        None => sample_fbm(&ctx.spec(sys.noise_dim(), ctx.grid(), stream::SOLVE)?)?,
    };
    let y0 = y0.unwrap_or_else(|| ctx.cfg.analysis.y0[0].clone());
    let (a, b) = (from.unwrap_or(xp.start()), to.unwrap_or(xp.end()));
    let mesh = mesh.unwrap_or(ctx.cfg.analysis.mesh);
    let y = solve_yde(&sys, &xp, &y0, a, b, mesh)?;
    let residual = variation_of_constants_residual(&y, &sys, &xp)?;
    let audit = audit_lipschitz(&sys, 256, 4.0, ctx.seed(stream::SOLVE));
    ctx.out.path_csv("trajectory.csv", &y, "solution")?;
    let summary = json!({
        "from": a, "to": b, "mesh": mesh, "y0": y0,
        "endpoint": y.last(),
        "mild_form_residual": residual,
        "lipschitz_audit": to_value(&audit),
        "audit_passes": audit.passes(&sys),
    });
    ctx.out.json("solve.json", &summary)?;
    let end: Vec<String> = y.last().iter().map(|v| num(*v)).collect();
    Ok(RunOutcome::new("solve", summary, format!("y({b}) = [{}]", end.join(", "))))
}

pub fn constants(ctx: &mut Ctx, delta: Option<f64>) -> Result<RunOutcome, CliError> {
    let sys = ctx.system()?;
    let delta = delta.unwrap_or(ctx.cfg.analysis.delta);
    let semi = semigroup_constants(sys.a(), delta)?;
    let deltas: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    let rows: Vec<Vec<String>> = tradeoff_curve(sys.a(), &deltas)?
        .iter()
        .map(|s| vec![num(s.delta), num(s.lambda_a), num(s.c_a), num(s.lambda_a - s.c_a * sys.c_f())])
        .collect();
    ctx.out.csv(
        "tradeoff.csv",
        &[
            ("delta", "spectral margin fraction"),
            ("lambda_a", "decay rate (1-delta)|max Re eig A|"),
            ("c_a", "sup_t |e^{At}| e^{lambda_a t}"),
            ("lambda", "lambda_a - c_a C_f"),
        ],
        &rows,
    )?;
    let summary = json!({
        "C_A": semi.c_a, "lambda_A": semi.lambda_a, "opnorm_A": semi.opnorm_a,
        "delta": delta, "spectral_abscissa": semi.spectral_abscissa,
        "C_f": sys.c_f(), "C_g": sys.c_g(), "C_g_prime": sys.c_g_prime(), "g_sup": sys.g_sup(),
    });
    ctx.out.json("constants.json", &summary)?;
    let text = format!("C_A = {}\nlambda_A = {}\n|A| = {}", num(semi.c_a), num(semi.lambda_a), num(semi.opnorm_a));
    Ok(RunOutcome::new("constants", summary, text))
}

pub fn criterion(ctx: &mut Ctx) -> Result<RunOutcome, CliError> {
    let sys = ctx.system()?;
    let c = ctx.constants(&sys)?;
    let report = check_criterion(&c);
    let summary = json!({ "margin": report.margin, "satisfied": report.satisfied, "report": to_value(&report) });
    ctx.out.json("criterion.json", &summary)?;
    let text = format!(
        "lhs = {}\nrhs = {}\nmargin = {}\nsatisfied = {}",
        num(report.lhs),
        num(report.rhs),
        num(report.margin),
        report.satisfied
    );
    Ok(RunOutcome::new("criterion", summary, text))
}

fn setup(ctx: &Ctx, sys: &YdeSystem, start: f64, end: f64, label: u64) -> Result<ExperimentSetup, CliError> {
    let a = &ctx.cfg.analysis;
    if let Some(v) = a.y0.iter().find(|v| v.len() != sys.dim()) {
        return Err(CliError::Usage(format!("analysis.y0 entry {v:?} does not have dimension {}", sys.dim())));
    }
    Ok(ExperimentSetup {
        noise: ctx.spec(sys.noise_dim(), TimeGrid::new(start, end, ctx.cfg.noise.step), label)?,
        y0_set: a.y0.clone(),
        horizon: a.horizon,
        mesh: a.mesh,
        realizations: a.realizations,
    })
}

pub fn attractor(ctx: &mut Ctx, forward: bool) -> Result<RunOutcome, CliError> {
    let sys = ctx.system()?;
    let c = ctx.constants(&sys)?;
    let crit = check_criterion(&c);
    let h = ctx.cfg.analysis.horizon as f64;
    if forward {
        let st = setup(ctx, &sys, 0.0, h, stream::FORWARD)?;
        let reports = forward_experiment(&sys, &st, None)?;
        let rate = singleton_rate_estimate(&reports, &c);
        let mut rows = Vec::new();
        for r in &reports {
            for (n, d) in r.distances.iter().enumerate() {
                rows.push(vec![r.realization.to_string(), (n + 1).to_string(), num(*d), num(r.rate)]);
            }
        }
        ctx.out.csv(
            "forward.csv",
            &[
                ("realization", "driver index"),
                ("n", "time"),
                ("distance", "max distance to the reference solution at time n"),
                ("rate", "fitted slope of log distance for this realization"),
            ],
            &rows,
        )?;
        let finite: Vec<f64> = rate.rates.iter().copied().filter(|r| r.is_finite()).collect();
        let summary = json!({
            "mode": "forward",
            "margin": crit.margin,
            "satisfied": crit.satisfied,
            "rate": { "mean": rate.mean_rate, "stderr": rate.rate_stderr,
                      "ci95": [rate.mean_rate - 1.96 * rate.rate_stderr, rate.mean_rate + 1.96 * rate.rate_stderr],
                      "threshold": rate.threshold, "ceiling": rate.ceiling, "exceedances": rate.exceedances,
                      "finite_rates": finite.len() },
            "asserted": rate.criterion_satisfied,
        });
        ctx.out.json("forward.json", &summary)?;
        let mut out = RunOutcome::new("attractor-forward", summary, format!("mean contraction rate {} (threshold {})", num(rate.mean_rate), num(rate.threshold)));
        if !rate.passes() {
            out.violations = rate.exceedances;
        }
        return Ok(out);
    }
    let st = setup(ctx, &sys, -h, 0.0, stream::PULLBACK)?;
    let est = pullback_experiment(&sys, &st)?;
    let mut rows = Vec::new();
    for e in &est {
        let slope = e.slope().map(num).unwrap_or_else(|| "nan".into());
        for (n, d) in e.diameters.iter().enumerate() {
            rows.push(vec![e.realization.to_string(), (n + 1).to_string(), num(*d), slope.clone()]);
        }
    }
    ctx.out.csv(
        "pullback.csv",
        &[
            ("realization", "driver index"),
            ("n", "pullback horizon"),
            ("diameter", "diameter of the endpoint set at time 0"),
            ("rate", "fitted slope of log diameter for this realization"),
        ],
        &rows,
    )?;
    let points: Vec<Vec<String>> = est
        .iter()
        .map(|e| {
            let mut r = vec![e.realization.to_string(), num(e.final_diameter()), (e.singleton as u8).to_string()];
            r.extend(e.point.iter().map(|v| num(*v)));
            r
        })
        .collect();
    let mut cols: Vec<(String, String)> = vec![
        ("realization".into(), "driver index".into()),
        ("final_diameter".into(), "diameter at the full horizon".into()),
        ("singleton".into(), "1 if the final diameter is below the singleton tolerance".into()),
    ];
    cols.extend((1..=sys.dim()).map(|j| (format!("a{j}"), format!("attractor estimate, component {j}"))));
    let col_refs: Vec<(&str, &str)> = cols.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    ctx.out.csv("attractor_points.csv", &col_refs, &points)?;
    let slopes: Vec<f64> = est.iter().filter_map(|e| e.slope()).collect();
    let norms: Vec<f64> = est.iter().map(|e| euclid(&e.point)).collect();
    let summary = json!({
        "mode": "pullback",
        "margin": crit.margin,
        "satisfied": crit.satisfied,
        "singleton_fraction": est.iter().filter(|e| e.singleton).count() as f64 / est.len() as f64,
        "attractor_norm": yde_core::stats::mean(&norms),
        "mean_slope": if slopes.is_empty() { Value::Null } else { json!(yde_core::stats::mean(&slopes)) },
        "blowups": est.iter().map(|e| e.blowups).sum::<usize>(),
    });
    ctx.out.json("pullback.json", &summary)?;
    let text = format!(
        "singleton fraction {}; mean attractor norm {}",
        summary["singleton_fraction"], summary["attractor_norm"]
    );
    Ok(RunOutcome::new("attractor-pullback", summary, text))
}

pub fn sweep_cg(ctx: &mut Ctx) -> Result<RunOutcome, CliError> {
    let base = ctx.system()?;
    let gamma = ctx.gamma(&base)?;
    let semi = semigroup_constants(base.a(), ctx.cfg.analysis.delta)?;
    let h = ctx.cfg.analysis.horizon as f64;
    let st = setup(ctx, &base, -h, 0.0, stream::SWEEP)?;
    let mu_star = vec![0.0; base.dim()];
    let spec = ctx.cfg.system.clone();
    let pts = attractor_continuity_sweep(|s| scaled_system(&spec, s), &ctx.cfg.analysis.cg_scales, &st, &mu_star, ctx.cfg.analysis.p)?;
    let mut rows = Vec::new();
    let mut margins = Vec::new();
    for pt in &pts {
        let sys = scaled_system(&spec, pt.scale)?;
        let margin = check_criterion(&derive_constants(&sys, &semi, &gamma)?).margin;
        margins.push(margin);
        rows.push(vec![num(pt.scale), num(pt.c_g), num(pt.mean_distance), num(pt.stderr), num(pt.moment_2p), num(margin), pt.blowups.to_string()]);
    }
    ctx.out.csv(
        "sweep_cg.csv",
        &[
            ("scale", "multiplier applied to the diffusion field"),
            ("c_g", "Lipschitz constant of the scaled diffusion"),
            ("mean_distance", "mean |a(x) - mu*| over realizations"),
            ("stderr", "standard error of mean_distance"),
            ("moment_2p", "mean |a(x) - mu*|^(2p)"),
            ("margin", "criterion margin at this scale"),
            ("blowups", "realizations that blew up"),
        ],
        &rows,
    )?;
    let summary = json!({ "points": to_value(&pts), "margins": margins });
    ctx.out.json("sweep_cg.json", &summary)?;
    let text = pts.iter().map(|p| format!("scale {} -> mean distance {}", num(p.scale), num(p.mean_distance))).collect::<Vec<_>>().join("\n");
    Ok(RunOutcome::new("sweep-cg", summary, text))
}

pub fn pendulum(ctx: &mut Ctx, case: &str, params_cfg: Option<&ExperimentConfig>, seeds: Option<usize>) -> Result<RunOutcome, CliError> {
    let case: PendulumCase = case.parse()?;
    let mut params = pendulum_params(params_cfg.unwrap_or(ctx.cfg)).map_err(CliError::Usage)?;
    // Without an explicit parameter file, fall back to the case's own noise pattern.
    if params_cfg.is_none() && !params.matches(case) {
        params = params.with_sigma(case.default_sigma());
    }
    let a = &ctx.cfg.analysis;
    let opts = ScenarioOptions {
        p: a.p,
        delta: a.delta,
        gamma_samples: a.gamma_samples,
        step: ctx.cfg.noise.step,
        mesh: a.mesh,
        horizon: a.horizon,
        realizations: seeds.unwrap_or(a.realizations),
        y0_set: a.y0.clone(),
        seed: ctx.seed(stream::PENDULUM),
    };
    let report = run_scenario(case, &params, &opts)?;
    let label = format!("pendulum-{}", case.name());
    let mut rows = Vec::new();
    for e in &report.estimates {
        for (n, d) in e.diameters.iter().enumerate() {
            rows.push(vec![e.realization.to_string(), (n + 1).to_string(), num(*d)]);
        }
    }
    ctx.out.csv(
        &format!("{label}_diameters.csv"),
        &[("realization", "driver index"), ("n", "pullback horizon"), ("diameter", "diameter of the endpoint set at time 0")],
        &rows,
    )?;
    let sys = yde_core::pendulum::build_pendulum(&params)?;
    let h = opts.horizon as f64;
    let spec = FbmSpec {
        hurst: params.hurst.to_vec(),
        grid: TimeGrid::new(-h, 0.0, opts.step),
        seed: derive_seed(opts.seed, 1),
        method: ctx.cfg.noise.method,
        amplitude: 1.0,
    };
    let x = FbmSampler::new(&spec)?.sample_indexed(0);
    for (i, y0) in opts.y0_set.iter().enumerate() {
        let y = solve_yde(&sys, &x, y0, -h, 0.0, opts.mesh)?;
        ctx.out.path_csv(&format!("{label}_trajectory_{i}.csv"), &y, "pendulum state (theta, theta dot)")?;
    }
    let rate = &report.rate;
    let summary = json!({
        "case": case.name(),
        "margin": report.criterion.margin,
        "satisfied": report.criterion.satisfied,
        "asserted": report.assertions_active(),
        "singleton_fraction": report.singleton_fraction,
        "attractor_norm": report.mean_attractor_norm,
        "mean_slope": report.mean_slope,
        "rate": { "mean": rate.mean_rate, "stderr": rate.rate_stderr,
                  "ci95": [rate.mean_rate - 1.96 * rate.rate_stderr, rate.mean_rate + 1.96 * rate.rate_stderr],
                  "threshold": rate.threshold },
        "report": to_value(&report),
    });
    ctx.out.json(&format!("{label}.json"), &summary)?;
    let mode = if report.assertions_active() { "asserted" } else { "observation only" };
    let text = format!(
        "case {}: margin {} ({mode}); singleton fraction {}; mean attractor norm {}",
        case.name(),
        num(report.criterion.margin),
        report.singleton_fraction,
        num(report.mean_attractor_norm)
    );
    let mut out = RunOutcome::new(label, summary, text);
    if report.assertions_active() && !rate.passes() {
        out.violations = rate.exceedances;
    }
    Ok(out)
}

/// Seed for the property suites.
pub fn stream_seed(master: u64) -> u64 {
    derive_seed(master, stream::VERIFY)
}
