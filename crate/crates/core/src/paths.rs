//! Discretely sampled paths and their variation functionals.
//!
//! A [`SamplePath`] stores values on a strictly increasing time grid and is
//! evaluated between grid points by linear interpolation. For a piecewise
//! linear path `‖x_t − x_s‖^p` is convex along each linear piece, so the
//! supremum over partitions defining the p-variation is attained on grid
//! partitions and the dynamic programme below is exact for the interpolant.

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, param_err, Error, Result};

/// Two times closer than this (relative to `max(1, |t|)`) are identified.
pub const TIME_TOL: f64 = 1e-9;

#[inline]
pub(crate) fn same_time(s: f64, t: f64) -> bool {
    (s - t).abs() <= TIME_TOL * s.abs().max(t.abs()).max(1.0)
}

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A path sampled on a finite, strictly increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

impl SamplePath {
    /// Builds a path from one vector per grid time.
    pub fn new(times: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(param_err!("all path values must have the same dimension"));
        }
        Self::from_flat(times, rows.into_iter().flatten().collect(), dim)
    }

    /// Builds a path from row-major values (`values[i * dim + j]`).
    pub fn from_flat(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(param_err!("path dimension must be positive"));
        }
        if times.is_empty() {
            return Err(param_err!("path needs at least one grid point"));
        }
        if values.len() != times.len() * dim {
            return Err(param_err!(
                "expected {} values for {} times of dimension {}, got {}",
                times.len() * dim,
                times.len(),
                dim,
                values.len()
            ));
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(param_err!("path contains non-finite entries"));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(param_err!("times must be strictly increasing ({} then {})", w[0], w[1]));
        }
        Ok(SamplePath { times, values, dim })
    }

    /// Scalar path from paired times and values.
    pub fn scalar(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::from_flat(times, values, 1)
    }

    /// Samples `f` on the given grid.
    pub fn from_fn<F>(times: Vec<f64>, dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let mut values = vec![0.0; times.len() * dim];
        for (t, row) in times.iter().zip(values.chunks_mut(dim.max(1))) {
            f(*t, row);
        }
        Self::from_flat(times, values, dim)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Row-major values.
    pub fn flat_values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn first(&self) -> &[f64] {
        self.value(0)
    }

    pub fn last(&self) -> &[f64] {
        self.value(self.len() - 1)
    }

    /// Index of the grid point equal to `t` (up to [`TIME_TOL`]).
    pub fn grid_index(&self, t: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t);
        [i.saturating_sub(1), i]
            .into_iter()
            .find(|&j| j < self.len() && same_time(self.times[j], t))
    }

    pub fn covers(&self, a: f64, b: f64) -> bool {
        a <= b
            && (a >= self.start() || same_time(a, self.start()))
            && (b <= self.end() || same_time(b, self.end()))
    }

    fn check_interval(&self, a: f64, b: f64) -> Result<()> {
        if !(a.is_finite() && b.is_finite()) || a > b {
            return Err(domain_err!("invalid interval [{a}, {b}]"));
        }
        if !self.covers(a, b) {
            return Err(domain_err!(
                "interval [{a}, {b}] is outside the path span [{}, {}]",
                self.start(),
                self.end()
            ));
        }
        Ok(())
    }

    /// Linear interpolation at `t`, written into `out`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if !self.covers(t, t) {
            return Err(domain_err!(
                "time {t} is outside the path span [{}, {}]",
                self.start(),
                self.end()
            ));
        }
        if let Some(i) = self.grid_index(t) {
            out.copy_from_slice(self.value(i));
            return Ok(());
        }
        let i = self.times.partition_point(|&s| s < t);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        for ((o, u), v) in out.iter_mut().zip(self.value(i - 1)).zip(self.value(i)) {
            *o = u + w * (v - u);
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// The path on `[a, b]`, with interpolated end points added when `a`
    /// or `b` is not a grid time. The interpolant is unchanged.
    pub fn restrict(&self, a: f64, b: f64) -> Result<SamplePath> {
        self.check_interval(a, b)?;
        let ia = self.grid_index(a);
        let ib = self.grid_index(b);
        let lo = self.times.partition_point(|&s| s < a);
        let hi = self.times.partition_point(|&s| s <= b);
        let mut times = Vec::with_capacity(hi.saturating_sub(lo) + 2);
        let mut values = Vec::with_capacity(times.capacity() * self.dim);
        match ia {
            Some(i) => {
                times.push(self.times[i]);
                values.extend_from_slice(self.value(i));
            }
            None => {
                times.push(a);
                values.extend(self.eval(a)?);
            }
        }
        for j in lo..hi {
            let t = self.times[j];
            if same_time(t, *times.last().unwrap()) || same_time(t, b) {
                continue;
            }
            times.push(t);
            values.extend_from_slice(self.value(j));
        }
        if !same_time(a, b) {
            match ib {
                Some(i) => {
                    times.push(self.times[i]);
                    values.extend_from_slice(self.value(i));
                }
                None => {
                    times.push(b);
                    values.extend(self.eval(b)?);
                }
            }
        }
        SamplePath::from_flat(times, values, self.dim)
    }

    /// Applies `f` to each value, producing a path of dimension `dim_out`.
    pub fn map<F>(&self, dim_out: usize, mut f: F) -> Result<SamplePath>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut values = vec![0.0; self.len() * dim_out];
        for (i, out) in values.chunks_mut(dim_out.max(1)).enumerate() {
            f(self.times[i], self.value(i), out);
        }
        SamplePath::from_flat(self.times.clone(), values, dim_out)
    }

    pub fn scaled(&self, c: f64) -> SamplePath {
        SamplePath {
            times: self.times.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            dim: self.dim,
        }
    }

    /// Pointwise difference `self − other` on a common grid.
    pub fn difference(&self, other: &SamplePath) -> Result<SamplePath> {
        if self.dim != other.dim || self.len() != other.len() {
            return Err(param_err!("paths must share grid and dimension"));
        }
        if self.times.iter().zip(&other.times).any(|(s, t)| !same_time(*s, *t)) {
            return Err(param_err!("paths must share the same time grid"));
        }
        Ok(SamplePath {
            times: self.times.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            dim: self.dim,
        })
    }

    /// `sup_t ‖x_t‖` over grid points.
    pub fn sup_norm(&self) -> f64 {
        self.values.chunks(self.dim).map(norm).fold(0.0, f64::max)
    }

    /// Writes the `t,x1,...,xm` CSV representation.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for j in 1..=self.dim {
            s.push_str(&format!(",x{j}"));
        }
        s.push('\n');
        for i in 0..self.len() {
            s.push_str(&format_float(self.times[i]));
            for v in self.value(i) {
                s.push(',');
                s.push_str(&format_float(*v));
            }
            s.push('\n');
        }
        s
    }

    /// Parses the CSV produced by [`SamplePath::to_csv`].
    pub fn from_csv(text: &str) -> Result<SamplePath> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| param_err!("empty CSV"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") || cols.len() < 2 {
            return Err(param_err!("CSV header must be `t,x1,...,xm`"));
        }
        for (j, c) in cols.iter().enumerate().skip(1) {
            if *c != format!("x{j}") {
                return Err(param_err!("unexpected CSV column `{c}`, expected `x{j}`"));
            }
        }
        let dim = cols.len() - 1;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dim + 1 {
                return Err(param_err!(
                    "line {}: expected {} fields, found {}",
                    lineno + 1,
                    dim + 1,
                    fields.len()
                ));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| param_err!("line {}: invalid number `{s}`", lineno + 1))
            };
            times.push(parse(fields[0])?);
            for f in &fields[1..] {
                values.push(parse(f)?);
            }
        }
        SamplePath::from_flat(times, values, dim)
    }
}

/// Shortest decimal representation that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Uniform grid with `n` steps from `start` to `end` (both included).
pub fn uniform_times(start: f64, end: f64, n: usize) -> Vec<f64> {
    let h = (end - start) / n as f64;
    (0..=n)
        .map(|k| if k == n { end } else { start + k as f64 * h })
        .collect()
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(param_err!("p-variation exponent must satisfy p >= 1, got {p}"));
    }
    Ok(())
}

/// `max_partition Σ ‖x_{t_{i+1}} − x_{t_i}‖^p` over grid partitions, by the
/// O(n²) recursion `best[j] = max_{i<j} best[i] + ‖x_j − x_i‖^p`.
fn pvar_pow_dp(values: &[f64], dim: usize, p: f64) -> f64 {
    let n = values.len() / dim;
    if n < 2 {
        return 0.0;
    }
    let half = 0.5 * p;
    let mut best = vec![0.0_f64; n];
    for j in 1..n {
        let xj = &values[j * dim..(j + 1) * dim];
        let mut m = 0.0_f64;
        for (i, b) in best[..j].iter().enumerate() {
            let d = dist_sq(&values[i * dim..(i + 1) * dim], xj);
            let c = b + d.powf(half);
            if c > m {
                m = c;
            }
        }
        best[j] = m;
    }
    best[n - 1]
}

fn pvar_pow_dp_with<M>(path: &SamplePath, p: f64, metric: &M) -> f64
where
    M: Fn(&[f64], &[f64]) -> f64,
{
    let n = path.len();
    if n < 2 {
        return 0.0;
    }
    let mut best = vec![0.0_f64; n];
    for j in 1..n {
        let xj = path.value(j);
        best[j] = (0..j)
            .map(|i| best[i] + metric(path.value(i), xj).powf(p))
            .fold(0.0, f64::max);
    }
    best[n - 1]
}

/// p-th power of the p-variation seminorm on `[a, b]`.
pub fn p_variation_pow(path: &SamplePath, p: f64, a: f64, b: f64) -> Result<f64> {
    check_p(p)?;
    let sub = path.restrict(a, b)?;
    Ok(pvar_pow_dp(&sub.values, sub.dim, p))
}

/// The p-variation seminorm `⦀x⦀_{p-var,[a,b]}` (Euclidean norm on values).
pub fn p_variation(path: &SamplePath, p: f64, a: f64, b: f64) -> Result<f64> {
    Ok(p_variation_pow(path, p, a, b)?.powf(1.0 / p))
}

/// p-variation seminorm over the whole span of the path.
pub fn p_variation_full(path: &SamplePath, p: f64) -> Result<f64> {
    p_variation(path, p, path.start(), path.end())
}

/// p-variation seminorm with increments measured by a caller-supplied metric
/// (e.g. the operator norm of matrix-valued paths).
pub fn p_variation_with<M>(path: &SamplePath, p: f64, a: f64, b: f64, metric: M) -> Result<f64>
where
    M: Fn(&[f64], &[f64]) -> f64,
{
    check_p(p)?;
    let sub = path.restrict(a, b)?;
    Ok(pvar_pow_dp_with(&sub, p, &metric).powf(1.0 / p))
}

/// The p-variation norm `‖x_a‖ + ⦀x⦀_{p-var,[a,b]}`.
pub fn p_variation_norm(path: &SamplePath, p: f64, a: f64, b: f64) -> Result<f64> {
    let xa = path.eval(a)?;
    Ok(norm(&xa) + p_variation(path, p, a, b)?)
}

/// Cheap two-sided enclosure of the p-variation seminorm for long paths.
///
/// The lower bound is the exact value on a thinned grid of at most `budget`
/// points; the upper bound is the smaller of the 1-variation and the
/// block bound `(k−1)^{(p−1)/p} (Σ_i ⦀x⦀^p_{block_i})^{1/p}`.
pub fn p_variation_bounds(
    path: &SamplePath,
    p: f64,
    a: f64,
    b: f64,
    budget: usize,
) -> Result<(f64, f64)> {
    check_p(p)?;
    let budget = budget.max(2);
    let sub = path.restrict(a, b)?;
    let n = sub.len();
    if n <= budget {
        let v = pvar_pow_dp(&sub.values, sub.dim, p).powf(1.0 / p);
        return Ok((v, v));
    }
    let stride = n.div_ceil(budget - 1);
    let mut thin = Vec::new();
    let mut i = 0;
    while i < n - 1 {
        thin.extend_from_slice(sub.value(i));
        i += stride;
    }
    thin.extend_from_slice(sub.value(n - 1));
    let lower = pvar_pow_dp(&thin, sub.dim, p).powf(1.0 / p);

    let one_var: f64 = (1..n).map(|j| dist_sq(sub.value(j - 1), sub.value(j)).sqrt()).sum();
    let block = stride.max(2);
    let mut sum = 0.0;
    let mut blocks = 0usize;
    let mut s = 0;
    while s < n - 1 {
        let e = (s + block).min(n - 1);
        sum += pvar_pow_dp(&sub.values[s * sub.dim..(e + 1) * sub.dim], sub.dim, p);
        blocks += 1;
        s = e;
    }
    let block_bound = (blocks as f64).powf((p - 1.0) / p) * sum.powf(1.0 / p);
    Ok((lower, one_var.min(block_bound).max(lower)))
}

/// `‖x_a‖ + max_{s<t} ‖x_t − x_s‖ / (t − s)^α` over grid pairs in `[a, b]`.
pub fn holder_norm(path: &SamplePath, alpha: f64, a: f64, b: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param_err!("Hölder exponent must lie in (0, 1), got {alpha}"));
    }
    let sub = path.restrict(a, b)?;
    let n = sub.len();
    let mut m = 0.0_f64;
    for j in 1..n {
        for i in 0..j {
            let d = dist_sq(sub.value(i), sub.value(j)).sqrt();
            if d > 0.0 {
                m = m.max(d / (sub.times[j] - sub.times[i]).powf(alpha));
            }
        }
    }
    Ok(norm(sub.first()) + m)
}

/// Greedy times `τ_0 = a`, `τ_{k+1} = inf{t > τ_k : ⦀x⦀_{p-var,[τ_k,t]} ≥ γ} ∧ b`
/// and the block count `N = min{k : τ_k = b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyPartition {
    pub gamma: f64,
    pub p: f64,
    pub taus: Vec<f64>,
    pub count: usize,
}

impl GreedyPartition {
    /// Right-hand side of `N ≤ 1 + γ^{−p} ⦀x⦀^p_{p-var,[a,b]}`.
    pub fn count_bound(&self, seminorm: f64) -> f64 {
        if self.gamma.is_infinite() {
            1.0
        } else {
            1.0 + (seminorm / self.gamma).powf(self.p)
        }
    }
}

/// Greedy partition of `[a, b]` with p-variation budget `gamma` per block.
/// Crossings are detected at the first grid time where the seminorm reaches
/// `gamma`; `gamma = +∞` yields the trivial partition `{a, b}`.
pub fn greedy_times(path: &SamplePath, p: f64, gamma: f64, a: f64, b: f64) -> Result<GreedyPartition> {
    if !(gamma > 0.0) {
        return Err(param_err!("greedy budget gamma must be positive, got {gamma}"));
    }
    check_p(p)?;
    let sub = path.restrict(a, b)?;
    let n = sub.len();
    let dim = sub.dim;
    let target = gamma.powf(p);
    let half = 0.5 * p;
    let mut taus = vec![sub.start()];
    let mut s = 0usize;
    let mut best = vec![0.0_f64; n];
    while s < n - 1 {
        best[s] = 0.0;
        let mut next = n - 1;
        for j in s + 1..n {
            let xj = &sub.values[j * dim..(j + 1) * dim];
            let mut m = 0.0_f64;
            for i in s..j {
                let c = best[i] + dist_sq(&sub.values[i * dim..(i + 1) * dim], xj).powf(half);
                if c > m {
                    m = c;
                }
            }
            best[j] = m;
            if m >= target {
                next = j;
                break;
            }
        }
        taus.push(sub.times[next]);
        s = next;
    }
    if taus.len() == 1 {
        // degenerate interval a = b
        taus.push(sub.end());
    }
    let count = taus.len() - 1;
    Ok(GreedyPartition { gamma, p, taus, count })
}

/// Wiener shift `(θ_r x)_u = x_{r+u} − x_r`, sampled for `u ∈ [u0, u1]`.
///
/// The returned grid is the original grid translated by `−r`, with
/// interpolated end points where the window does not fall on grid times.
pub fn wiener_shift(path: &SamplePath, r: f64, u0: f64, u1: f64) -> Result<SamplePath> {
    if !(r.is_finite() && u0 <= u1) {
        return Err(param_err!("invalid shift r = {r}, window [{u0}, {u1}]"));
    }
    if !path.covers(r + u0, r + u1) || !path.covers(r, r) {
        return Err(domain_err!(
            "shifted window [{}, {}] (anchor {r}) exceeds the path span [{}, {}]",
            r + u0,
            r + u1,
            path.start(),
            path.end()
        ));
    }
    let xr = path.eval(r)?;
    let sub = path.restrict(r + u0, r + u1)?;
    let times: Vec<f64> = sub.times.iter().map(|t| t - r).collect();
    let values: Vec<f64> = sub
        .values
        .chunks(sub.dim)
        .flat_map(|v| v.iter().zip(&xr).map(|(a, b)| a - b).collect::<Vec<_>>())
        .collect();
    SamplePath::from_flat(times, values, sub.dim).map_err(|e| match e {
        Error::Parameter(m) => Error::Numeric(format!("shift produced an invalid grid: {m}")),
        other => other,
    })
}

/// Wiener shift over the largest window the path supports.
pub fn wiener_shift_span(path: &SamplePath, r: f64) -> Result<SamplePath> {
    wiener_shift(path, r, path.start() - r, path.end() - r)
}
