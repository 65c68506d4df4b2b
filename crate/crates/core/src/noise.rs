//! Fractional Brownian motion, the moment functional `Γ(p)` and
//! temperedness diagnostics.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, param_err, Error, Result};
use crate::paths::{p_variation_pow, same_time, uniform_times, SamplePath};
use crate::seed;
use crate::stats::{fit_line, mean, variance, LineFit};

/// Uniform time grid `start, start + step, …, end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Self {
        TimeGrid { start, end, step }
    }

    /// Number of steps; `end − start` must be an integer multiple of `step`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(param_err!("grid step must be positive, got {}", self.step));
        }
        if !(self.end > self.start) {
            return Err(param_err!("grid end {} must exceed start {}", self.end, self.start));
        }
        let r = (self.end - self.start) / self.step;
        let n = r.round();
        if n < 1.0 || (r - n).abs() > 1e-6 * n.max(1.0) {
            return Err(param_err!(
                "grid length {} is not an integer multiple of step {}",
                self.end - self.start,
                self.step
            ));
        }
        Ok(n as usize)
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        Ok(uniform_times(self.start, self.end, self.steps()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FbmMethod {
    /// Exact Cholesky factor of the increment covariance, O(n³) set-up.
    Cholesky,
    /// Davies–Harte circulant embedding, O(n log n) per sample.
    CirculantEmbedding,
}

/// Specification of an m-dimensional fBm with independent components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmSpec {
    /// Hurst exponent of each component, all in `(1/2, 1)`.
    pub hurst: Vec<f64>,
    pub grid: TimeGrid,
    pub seed: u64,
    pub method: FbmMethod,
    /// Multiplier applied to every sample (`0` gives the zero path).
    pub amplitude: f64,
}

impl FbmSpec {
    /// `m` independent components sharing the Hurst exponent `h`.
    pub fn new(h: f64, m: usize, grid: TimeGrid, seed: u64) -> Self {
        FbmSpec {
            hurst: vec![h; m],
            grid,
            seed,
            method: FbmMethod::CirculantEmbedding,
            amplitude: 1.0,
        }
    }

    pub fn with_method(mut self, method: FbmMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn dimension(&self) -> usize {
        self.hurst.len()
    }

    pub fn validate(&self) -> Result<usize> {
        if self.hurst.is_empty() {
            return Err(param_err!("fBm dimension must be positive"));
        }
        if let Some(h) = self.hurst.iter().find(|h| !(**h > 0.5 && **h < 1.0)) {
            return Err(param_err!("Hurst exponent must lie in (1/2, 1), got {h}"));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(param_err!("amplitude must be nonnegative, got {}", self.amplitude));
        }
        self.grid.steps()
    }
}

/// Autocovariance of fractional Gaussian noise with step `h` at lag `k`.
pub fn fgn_autocov(hurst: f64, h: f64, k: usize) -> f64 {
    let e = 2.0 * hurst;
    let k = k as f64;
    0.5 * h.powf(e) * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Covariance `R_H(s, t) = ½(t^{2H} + s^{2H} − |t − s|^{2H})`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let e = 2.0 * hurst;
    0.5 * (t.abs().powf(e) + s.abs().powf(e) - (t - s).abs().powf(e))
}

enum Factor {
    Cholesky(DMatrix<f64>),
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
}

impl Factor {
    fn build(method: FbmMethod, hurst: f64, h: f64, n: usize) -> Result<Factor> {
        match method {
            FbmMethod::Cholesky => {
                let cov = DMatrix::from_fn(n, n, |i, j| fgn_autocov(hurst, h, i.abs_diff(j)));
                let chol = cov.cholesky().ok_or_else(|| {
                    Error::Numeric("increment covariance is not positive definite".into())
                })?;
                Ok(Factor::Cholesky(chol.l()))
            }
            FbmMethod::CirculantEmbedding => {
                let half = n.next_power_of_two();
                let size = 2 * half;
                let mut row: Vec<Complex<f64>> = (0..size)
                    .map(|j| {
                        let lag = if j <= half { j } else { size - j };
                        Complex::new(fgn_autocov(hurst, h, lag), 0.0)
                    })
                    .collect();
                let fft = FftPlanner::new().plan_fft_forward(size);
                fft.process(&mut row);
                let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
                let mut sqrt_eig = Vec::with_capacity(size);
                for c in &row {
                    if c.re < -1e-10 * max {
                        return Err(Error::Numeric(format!(
                            "circulant embedding has a negative eigenvalue {:.3e}; \
                             use the cholesky method instead",
                            c.re
                        )));
                    }
                    sqrt_eig.push((c.re.max(0.0) / size as f64).sqrt());
                }
                Ok(Factor::Circulant { sqrt_eig, fft })
            }
        }
    }

    fn increments(&self, n: usize, rng: &mut impl rand::Rng, out: &mut Vec<f64>) {
        out.clear();
        match self {
            Factor::Cholesky(l) => {
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                for i in 0..n {
                    let row = l.row(i);
                    out.push((0..=i).map(|j| row[j] * z[j]).sum());
                }
            }
            Factor::Circulant { sqrt_eig, fft } => {
                let mut w: Vec<Complex<f64>> = sqrt_eig
                    .iter()
                    .map(|s| {
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = StandardNormal.sample(rng);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut w);
                out.extend(w[..n].iter().map(|c| c.re));
            }
        }
    }
}

/// Precomputed sampler for repeated draws from one [`FbmSpec`].
pub struct FbmSampler {
    spec: FbmSpec,
    times: Vec<f64>,
    steps: usize,
    /// factor index per component
    component_factor: Vec<usize>,
    factors: Vec<Factor>,
}

impl FbmSampler {
    pub fn new(spec: &FbmSpec) -> Result<Self> {
        let steps = spec.validate()?;
        let times = spec.grid.times()?;
        let mut hs: Vec<f64> = Vec::new();
        let mut component_factor = Vec::with_capacity(spec.dimension());
        for &h in &spec.hurst {
            let idx = match hs.iter().position(|&x| x == h) {
                Some(i) => i,
                None => {
                    hs.push(h);
                    hs.len() - 1
                }
            };
            component_factor.push(idx);
        }
        let factors = hs
            .iter()
            .map(|&h| Factor::build(spec.method, h, spec.grid.step, steps))
            .collect::<Result<Vec<_>>>()?;
        Ok(FbmSampler { spec: spec.clone(), times, steps, component_factor, factors })
    }

    pub fn spec(&self) -> &FbmSpec {
        &self.spec
    }

    /// One path, started at 0 at the first grid time, drawn with `seed`.
    /// Component `j` uses ChaCha stream `j`.
    pub fn sample(&self, seed: u64) -> SamplePath {
        let m = self.spec.dimension();
        let n = self.steps;
        let mut values = vec![0.0; (n + 1) * m];
        let mut inc = Vec::with_capacity(n);
        for j in 0..m {
            let mut rng = seed::rng(seed, j as u64);
            self.factors[self.component_factor[j]].increments(n, &mut rng, &mut inc);
            let mut acc = 0.0;
            for (k, dx) in inc.iter().enumerate() {
                acc += dx;
                values[(k + 1) * m + j] = self.spec.amplitude * acc;
            }
        }
        SamplePath::from_flat(self.times.clone(), values, m).expect("sampler grid is valid")
    }

    /// Sample `i` of the ensemble keyed by `FbmSpec::seed`.
    pub fn sample_indexed(&self, i: u64) -> SamplePath {
        self.sample(seed::derive_seed(self.spec.seed, i))
    }
}

/// One path from `spec` with its own seed.
pub fn sample_fbm(spec: &FbmSpec) -> Result<SamplePath> {
    Ok(FbmSampler::new(spec)?.sample(spec.seed))
}

/// `count` independent paths with seeds derived from `spec.seed`.
pub fn sample_ensemble(spec: &FbmSpec, count: usize) -> Result<Vec<SamplePath>> {
    let sampler = FbmSampler::new(spec)?;
    Ok((0..count as u64).into_par_iter().map(|i| sampler.sample_indexed(i)).collect())
}

/// Monte Carlo estimate of `Γ(p) = (E ⦀Z⦀^p_{p-var,[−1,1]})^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub p: f64,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl GammaEstimate {
    /// A known value with no sampling error.
    pub fn exact(p: f64, value: f64) -> Self {
        GammaEstimate { p, value, stderr: 0.0, n_samples: 1 }
    }

    /// `value ± z·stderr`, clipped at zero.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        ((self.value - z * self.stderr).max(0.0), self.value + z * self.stderr)
    }
}

/// Estimates `Γ(p)` from `n_samples` independent paths spanning `[−1, 1]`.
///
/// The value is `mean^{1/p}` of the sampled `⦀Z⦀^p`, with a delta-method
/// standard error.
pub fn estimate_gamma(spec: &FbmSpec, p: f64, n_samples: usize) -> Result<GammaEstimate> {
    if !(p > 1.0 && p < 2.0) {
        return Err(param_err!("p must lie in (1, 2), got {p}"));
    }
    if n_samples == 0 {
        return Err(param_err!("need at least one sample"));
    }
    let g = spec.grid;
    let covers = |lo: f64, hi: f64| (lo <= -1.0 || same_time(lo, -1.0)) && (hi >= 1.0 || same_time(hi, 1.0));
    if !covers(g.start, g.end) {
        return Err(domain_err!("grid [{}, {}] does not cover [-1, 1]", g.start, g.end));
    }
    let sampler = FbmSampler::new(spec)?;
    let draws: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let path = sampler.sample_indexed(i);
            p_variation_pow(&path, p, -1.0, 1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = mean(&draws);
    let se_mean = (variance(&draws) / n_samples as f64).sqrt();
    let value = m.powf(1.0 / p);
    let stderr = if m > 0.0 { m.powf(1.0 / p - 1.0) / p * se_mean } else { 0.0 };
    Ok(GammaEstimate { p, value, stderr, n_samples })
}

/// Result of [`temperedness_diagnostic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperednessReport {
    /// `(1/n) log⁺ ρ_n` for `n = 1, 2, …`.
    pub normalized: Vec<f64>,
    /// Slope of `log⁺ ρ_n` against `n` over the tail half of the horizon.
    pub tail_fit: Option<LineFit>,
    pub slope_interval: (f64, f64),
    pub tempered: bool,
}

/// z-score of the slope interval used by [`temperedness_diagnostic`] (99%).
pub const TEMPERED_Z: f64 = 2.576;

/// Growth diagnostic for a positive sequence `ρ_n = ρ(θ_{−n} x)`.
///
/// Sub-exponential growth shows as a tail slope of `log⁺ ρ_n` whose 99%
/// interval contains zero.
pub fn temperedness_diagnostic(values: &[f64]) -> Result<TemperednessReport> {
    if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(param_err!("temperedness diagnostic needs positive finite values, got {v}"));
    }
    let logp: Vec<f64> = values.iter().map(|v| v.ln().max(0.0)).collect();
    let normalized = logp.iter().enumerate().map(|(i, l)| l / (i + 1) as f64).collect();
    let start = values.len() / 2;
    let xs: Vec<f64> = (start..values.len()).map(|i| (i + 1) as f64).collect();
    let tail_fit = fit_line(&xs, &logp[start..]);
    let slope_interval = tail_fit.map(|f| f.slope_interval(TEMPERED_Z)).unwrap_or((0.0, 0.0));
    let tempered = slope_interval.0 <= 0.0 && 0.0 <= slope_interval.1;
    Ok(TemperednessReport { normalized, tail_fit, slope_interval, tempered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::p_variation;

    #[test]
    fn starts_at_zero_and_is_reproducible() {
        let spec = FbmSpec::new(0.7, 2, TimeGrid::new(0.0, 1.0, 1.0 / 64.0), 3);
        let a = sample_fbm(&spec).unwrap();
        let b = sample_fbm(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.first(), &[0.0, 0.0]);
        assert_eq!(a.len(), 65);
        let c = sample_fbm(&spec.clone().with_seed(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_hurst_and_grid() {
        let g = TimeGrid::new(0.0, 1.0, 0.1);
        assert!(matches!(sample_fbm(&FbmSpec::new(0.5, 1, g, 0)), Err(Error::Parameter(_))));
        assert!(matches!(sample_fbm(&FbmSpec::new(1.0, 1, g, 0)), Err(Error::Parameter(_))));
        let bad = TimeGrid::new(0.0, 1.0, 0.3);
        assert!(sample_fbm(&FbmSpec::new(0.7, 1, bad, 0)).is_err());
    }

    #[test]
    fn autocov_matches_covariance_function() {
        // Cov(B_1, B_2 − B_1) = R(1,2) − R(1,1) = γ(1) with unit step
        let h = 0.8;
        let direct = fbm_covariance(h, 1.0, 2.0) - fbm_covariance(h, 1.0, 1.0);
        assert!((direct - fgn_autocov(h, 1.0, 1)).abs() < 1e-15);
        assert!((direct - 0.5 * (2f64.powf(2.0 * h) - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_amplitude_gives_zero_gamma() {
        let spec = FbmSpec::new(0.75, 1, TimeGrid::new(-1.0, 1.0, 1.0 / 32.0), 1).with_amplitude(0.0);
        let g = estimate_gamma(&spec, 1.5, 10).unwrap();
        assert_eq!(g.value, 0.0);
        assert_eq!(g.stderr, 0.0);
    }

    #[test]
    fn gamma_scales_with_amplitude() {
        let spec = FbmSpec::new(0.75, 2, TimeGrid::new(-1.0, 1.0, 1.0 / 32.0), 9);
        let g1 = estimate_gamma(&spec, 1.5, 40).unwrap();
        let g3 = estimate_gamma(&spec.clone().with_amplitude(3.0), 1.5, 40).unwrap();
        assert!((g3.value - 3.0 * g1.value).abs() < 1e-12 * g3.value);
        assert!((g3.stderr - 3.0 * g1.stderr).abs() < 1e-10 * g3.stderr);
    }

    #[test]
    fn gamma_requires_covering_grid() {
        let spec = FbmSpec::new(0.75, 1, TimeGrid::new(0.0, 2.0, 1.0 / 32.0), 1);
        assert!(matches!(estimate_gamma(&spec, 1.5, 4), Err(Error::Domain(_))));
        let spec = FbmSpec::new(0.75, 1, TimeGrid::new(-1.0, 1.0, 1.0 / 32.0), 1);
        assert!(matches!(estimate_gamma(&spec, 2.0, 4), Err(Error::Parameter(_))));
    }

    #[test]
    fn holder_exponents_order() {
        let spec = FbmSpec::new(0.75, 1, TimeGrid::new(0.0, 1.0, 1.0 / 128.0), 11);
        let x = sample_fbm(&spec).unwrap();
        let mut last = 0.0;
        for alpha in [0.2, 0.4, 0.6, 0.7] {
            let v = crate::paths::holder_norm(&x, alpha, 0.0, 1.0).unwrap();
            assert!(v.is_finite() && v >= last);
            last = v;
        }
        assert!(p_variation(&x, 1.5, 0.0, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn temperedness_of_simple_sequences() {
        let c = temperedness_diagnostic(&[2.0; 20]).unwrap();
        assert!(c.tempered);
        assert_eq!(c.tail_fit.unwrap().slope, 0.0);
        let e: Vec<f64> = (1..=20).map(|n| (n as f64).exp()).collect();
        let r = temperedness_diagnostic(&e).unwrap();
        assert!(!r.tempered);
        assert!((r.tail_fit.unwrap().slope - 1.0).abs() < 1e-12);
        assert!(r.normalized.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(temperedness_diagnostic(&[1.0, 0.0]).is_err());
    }
}
