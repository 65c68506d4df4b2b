//! Randomized property suites behind `yde verify`.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use yde_core::bounds::{apriori_bounds, derive_constants, discrete_gronwall, two_solution_bounds, ytest_chain_bound};
use yde_core::linalg::semigroup_constants;
use yde_core::noise::FbmSampler;
use yde_core::paths::{greedy_times, p_variation, p_variation_pow};
use yde_core::seed::{derive_seed, rng};
use yde_core::solver::solve_yde;
use yde_core::young::young_loeve_defect;
use yde_core::{Field, FbmSpec, GammaEstimate, Result, SamplePath, TimeGrid, YdeSystem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub check: String,
    pub cases: usize,
    pub violations: usize,
    /// Smallest relative slack seen; negative means a violation.
    pub worst_slack: f64,
}

impl SuiteResult {
    fn new(check: &str, cases: usize, slacks: &[(bool, f64)]) -> Self {
        SuiteResult {
            check: check.into(),
            cases,
            violations: slacks.iter().filter(|s| !s.0).count(),
            worst_slack: slacks.iter().map(|s| s.1).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub const SUITES: [&str; 8] = ["gronwall", "pvar", "sandwich", "greedy", "young", "apriori", "twosol", "ytest"];

pub fn run_suite(name: &str, cases: usize, seed: u64, p: f64) -> Result<SuiteResult> {
    let seed = derive_seed(seed, SUITES.iter().position(|s| *s == name).unwrap_or(99) as u64);
    match name {
        "gronwall" => Ok(gronwall(cases, seed)),
        "pvar" => pvar_brute_force(cases, seed, p),
        "sandwich" => sandwich(cases, seed, p),
        "greedy" => greedy(cases, seed, p),
        "young" => young_loeve(cases, seed, p),
        "apriori" | "twosol" | "ytest" => solution_bounds(name, cases, seed, p),
        _ => Err(yde_core::Error::Parameter(format!("unknown suite `{name}` (known: {})", SUITES.join(", ")))),
    }
}

fn rational(r: &mut impl Rng, max_num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(r.random_range(0..=max_num)), BigInt::from(den))
}

/// `u_n = a + Σ_{k<n}(α_k u_k + β_k)` in exact arithmetic against the bound.
fn gronwall(cases: usize, seed: u64) -> SuiteResult {
    let slacks: Vec<(bool, f64)> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(seed, i as u64);
            let len = r.random_range(1..=12);
            let a = rational(&mut r, 20, 7);
            let u0 = rational(&mut r, 20, 7);
            let alphas: Vec<BigRational> = (0..len).map(|_| rational(&mut r, 10, 9)).collect();
            let betas: Vec<BigRational> = (0..len).map(|_| rational(&mut r, 10, 5)).collect();
            let t = discrete_gronwall(a.clone(), u0.clone(), &alphas, &betas).expect("nonnegative inputs");
            let mut u = vec![u0];
            let mut worst = (true, f64::INFINITY);
            for n in 1..=len {
                let mut s = a.clone();
                for k in 0..n {
                    s = s + alphas[k].clone() * u[k].clone() + betas[k].clone();
                }
                let gap = t[n - 1].clone() - s.clone();
                let ok = gap >= BigRational::zero();
                let rel = gap.to_f64().unwrap_or(0.0) / t[n - 1].to_f64().unwrap_or(1.0).max(1.0);
                worst = (worst.0 && ok, worst.1.min(rel));
                u.push(s);
            }
            worst
        })
        .collect();
    SuiteResult::new("gronwall", cases, &slacks)
}

fn random_path(r: &mut impl Rng, n: usize, dim: usize) -> SamplePath {
    let mut times = vec![0.0];
    for _ in 1..n {
        times.push(times.last().unwrap() + r.random_range(0.1..1.0));
    }
    let values: Vec<f64> = (0..n * dim).map(|_| r.random_range(-1.0..1.0)).collect();
    SamplePath::from_flat(times, values, dim).expect("valid path")
}

/// Exhaustive search over every grid sub-partition.
fn brute_pvar_pow(path: &SamplePath, p: f64) -> f64 {
    let n = path.len();
    let dist = |i: usize, j: usize| {
        let d: f64 = path.value(i).iter().zip(path.value(j)).map(|(a, b)| (a - b) * (a - b)).sum();
        d.powf(0.5 * p)
    };
    let interior = n.saturating_sub(2);
    let mut best = 0.0_f64;
    for mask in 0u32..(1 << interior) {
        let mut prev = 0;
        let mut s = 0.0;
        for k in 0..interior {
            if mask >> k & 1 == 1 {
                s += dist(prev, k + 1);
                prev = k + 1;
            }
        }
        s += dist(prev, n - 1);
        best = best.max(s);
    }
    best
}

fn pvar_brute_force(cases: usize, seed: u64, p: f64) -> Result<SuiteResult> {
    let slacks = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(seed, i as u64);
            let (n, m) = (r.random_range(2..=12), r.random_range(1..=2));
            let path = random_path(&mut r, n, m);
            let dp = p_variation_pow(&path, p, path.start(), path.end())?;
            let bf = brute_pvar_pow(&path, p);
            Ok((dp == bf, -(dp - bf).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteResult::new("pvar", cases, &slacks))
}

/// Superadditivity and the `(k−1)^{p−1}` upper bound over a random split.
fn sandwich(cases: usize, seed: u64, p: f64) -> Result<SuiteResult> {
    let slacks = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(seed, i as u64);
            let (n, m) = (r.random_range(3..=60), r.random_range(1..=3));
            let path = random_path(&mut r, n, m);
            let k = r.random_range(2..=path.len().min(8));
            let mut cuts: Vec<f64> = (0..k - 2).map(|_| r.random_range(path.start()..path.end())).collect();
            cuts.push(path.start());
            cuts.push(path.end());
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let whole = p_variation_pow(&path, p, path.start(), path.end())?;
            let mut parts = 0.0;
            for w in cuts.windows(2) {
                parts += p_variation_pow(&path, p, w[0], w[1])?;
            }
            let pieces = (cuts.len() - 1) as f64;
            let upper = pieces.powf(p - 1.0) * parts;
            let s1 = (whole - parts) / whole.max(1.0);
            let s2 = (upper - whole) / upper.max(1.0);
            let s = s1.min(s2);
            Ok((s >= -1e-12, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteResult::new("sandwich", cases, &slacks))
}

fn unit_fbm(seed: u64, step: f64) -> Result<FbmSampler> {
    FbmSampler::new(&FbmSpec::new(0.75, 1, TimeGrid::new(0.0, 1.0, step), seed))
}

/// Greedy count against `1 + γ^{−p}⦀x⦀^p`.
fn greedy(cases: usize, seed: u64, p: f64) -> Result<SuiteResult> {
    let sampler = unit_fbm(seed, 1.0 / 1024.0)?;
    let slacks = (0..cases)
        .into_par_iter()
        .map(|i| {
            let x = sampler.sample_indexed(i as u64);
            let s = p_variation(&x, p, 0.0, 1.0)?;
            let mut worst = (true, f64::INFINITY);
            for gamma in [0.05, 0.2, 0.5, 1.0] {
                let g = greedy_times(&x, p, gamma, 0.0, 1.0)?;
                let bound = g.count_bound(s);
                let slack = (bound - g.count as f64) / bound;
                worst = (worst.0 && g.count as f64 <= bound, worst.1.min(slack));
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteResult::new("greedy", cases, &slacks))
}

/// Young–Loève defect for `g(z)` integrated against fBm `z` on random subintervals.
fn young_loeve(cases: usize, seed: u64, p: f64) -> Result<SuiteResult> {
    let sampler = unit_fbm(seed, 1.0 / 256.0)?;
    let slacks = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(seed, 1_000_000 + i as u64);
            let z = sampler.sample_indexed(i as u64);
            let (amp, freq, phase, lin) = (r.random_range(0.1..3.0), r.random_range(0.5..5.0), r.random_range(0.0..6.3), r.random_range(-1.0..1.0));
            let y = z.map(1, |_, v, out| out[0] = amp * (freq * v[0] + phase).sin() + lin * v[0])?;
            let mut worst = (true, f64::INFINITY);
            for _ in 0..20 {
                let s = r.random_range(0.0..0.9);
                let t = r.random_range(s + 0.05..1.0);
                let (lhs, rhs) = young_loeve_defect(&y, &z, s, t, p)?;
                let slack = (rhs - lhs) / rhs.max(1.0);
                worst = (worst.0 && lhs <= rhs * (1.0 + 1e-12), worst.1.min(slack));
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteResult::new("young", cases, &slacks))
}

/// A random stable 2-d system with two noise channels.
pub fn random_system(r: &mut impl Rng, linear: bool) -> Result<YdeSystem> {
    let a = DMatrix::from_row_slice(
        2,
        2,
        &[-r.random_range(0.5..2.0), r.random_range(-1.0..1.0), 0.0, -r.random_range(0.5..2.0)],
    );
    let f = Field::zero(2, 1, 2).with_sine(r.random_range(0..2), 0, r.random_range(0..2), r.random_range(0.0..0.3))?;
    let g = if linear {
        let c1 = DMatrix::from_fn(2, 2, |_, _| r.random_range(-0.3..0.3));
        let c2 = DMatrix::from_fn(2, 2, |_, _| r.random_range(-0.3..0.3));
        let g0 = DMatrix::from_fn(2, 2, |_, _| r.random_range(-0.5..0.5));
        Field::affine_columns(&[c1, c2], Some(&g0))?
    } else {
        Field::zero(2, 2, 2)
            .with_sine(0, 0, r.random_range(0..2), r.random_range(0.0..0.4))?
            .with_sine(1, 1, r.random_range(0..2), r.random_range(0.0..0.4))?
            .with_offset(0, 1, r.random_range(-0.5..0.5))?
            .with_offset(1, 0, r.random_range(-0.5..0.5))?
    };
    YdeSystem::new(a, f, g)
}

fn solution_bounds(which: &str, cases: usize, seed: u64, p: f64) -> Result<SuiteResult> {
    let end = if which == "ytest" { 5.0 } else { 2.0 };
    let sampler = FbmSampler::new(&FbmSpec::new(0.75, 2, TimeGrid::new(0.0, end, 1.0 / 128.0), seed))?;
    let mesh = 1.0 / 128.0;
    let slacks = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(seed, 1_000_000 + i as u64);
            let linear = r.random_bool(0.5);
            let sys = random_system(&mut r, linear)?;
            let semi = semigroup_constants(sys.a(), 0.1)?;
            let c = derive_constants(&sys, &semi, &GammaEstimate::exact(p, 1.0))?;
            let x = sampler.sample_indexed(i as u64);
            let y0 = vec![r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
            let y = solve_yde(&sys, &x, &y0, 0.0, end, mesh)?;
            match which {
                "apriori" => {
                    let rep = apriori_bounds(&y, &x, &c, 0.0, end)?;
                    Ok((rep.violations() == 0, rep.worst_slack()))
                }
                "twosol" => {
                    let y0b: Vec<f64> = y0.iter().map(|v| v + r.random_range(-0.5..0.5)).collect();
                    let y2 = solve_yde(&sys, &x, &y0b, 0.0, end, mesh)?;
                    let rep = two_solution_bounds(&y, &y2, &x, &c, sys.g_is_linear(), 0.0, end)?;
                    Ok((rep.violations() == 0, rep.worst_slack()))
                }
                _ => {
                    let rep = ytest_chain_bound(&y, &x, &c, 3)?;
                    Ok((rep.violations == 0, rep.worst_slack))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteResult::new(which, cases, &slacks))
}
