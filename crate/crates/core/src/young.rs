//! Young integrals `∫ y dx` of sampled paths.
//!
//! Both integrand and integrator are linear between the points of the merged
//! grid, so the left-point sum over `2^ℓ` equal pieces of a merged interval has
//! the closed form `(y_i + (1 − 2^{−ℓ}) Δy / 2) Δx`. Refinement levels are
//! therefore exact evaluations of the dyadic left-point sums, at O(n) cost
//! whatever the level.

use serde::Serialize;

use crate::error::{domain_err, param_err, Result};
use crate::paths::{norm, p_variation, same_time, SamplePath};

/// `K = (1 − 2^{1−2/p})^{−1}`, the Young–Loève constant for `q = p`.
pub fn young_loeve_constant(p: f64) -> f64 {
    1.0 / (1.0 - 2f64.powf(1.0 - 2.0 / p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YoungIntegralResult {
    pub value: Vec<f64>,
    /// Partial integrals `∫_a^t y dx` at the merged grid times.
    pub running: SamplePath,
    /// Finest sub-interval length.
    pub mesh: f64,
    /// Max-norm difference of the running integral between the two finest levels.
    pub refinement_error: f64,
    pub levels: u32,
}

/// Merged grid of both paths on `[a, b]`, endpoints included.
fn merged_times(y: &SamplePath, x: &SamplePath, a: f64, b: f64) -> Vec<f64> {
    let mut ts: Vec<f64> = y
        .times()
        .iter()
        .chain(x.times())
        .copied()
        .filter(|&t| t > a && t < b && !same_time(t, a) && !same_time(t, b))
        .collect();
    ts.push(a);
    ts.push(b);
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|u, v| same_time(*u, *v));
    ts
}

struct Prepared {
    times: Vec<f64>,
    ys: Vec<f64>,
    xs: Vec<f64>,
    d: usize,
    m: usize,
}

fn prepare(y: &SamplePath, x: &SamplePath, a: f64, b: f64) -> Result<Prepared> {
    let m = x.dim();
    if y.dim() % m != 0 {
        return Err(param_err!(
            "integrand dimension {} is not a multiple of integrator dimension {}",
            y.dim(),
            m
        ));
    }
    if !(b > a) {
        return Err(domain_err!("empty interval [{a}, {b}]"));
    }
    for (name, p) in [("integrand", y), ("integrator", x)] {
        if !p.covers(a, b) {
            return Err(domain_err!(
                "{name} spans [{}, {}], not [{a}, {b}]",
                p.start(),
                p.end()
            ));
        }
    }
    let times = merged_times(y, x, a, b);
    let mut ys = vec![0.0; times.len() * y.dim()];
    let mut xs = vec![0.0; times.len() * m];
    for (i, &t) in times.iter().enumerate() {
        y.eval_into(t, &mut ys[i * y.dim()..(i + 1) * y.dim()])?;
        x.eval_into(t, &mut xs[i * m..(i + 1) * m])?;
    }
    Ok(Prepared { times, ys, xs, d: y.dim() / m, m })
}

impl Prepared {
    /// Running integral at the merged times, with weight `w` on `Δy` per piece
    /// (`w = (1 − 2^{−ℓ})/2` for level `ℓ`, `1/2` for the limit).
    fn running(&self, w: f64) -> Vec<f64> {
        let (d, m) = (self.d, self.m);
        let n = self.times.len();
        let mut out = vec![0.0; n * d];
        for i in 0..n - 1 {
            let (y0, y1) = (&self.ys[i * d * m..(i + 1) * d * m], &self.ys[(i + 1) * d * m..(i + 2) * d * m]);
            let (x0, x1) = (&self.xs[i * m..(i + 1) * m], &self.xs[(i + 1) * m..(i + 2) * m]);
            for r in 0..d {
                let mut acc = 0.0;
                for c in 0..m {
                    let yv = y0[r * m + c] + w * (y1[r * m + c] - y0[r * m + c]);
                    acc += yv * (x1[c] - x0[c]);
                }
                out[(i + 1) * d + r] = out[i * d + r] + acc;
            }
        }
        out
    }
}

fn level_weight(level: u32) -> f64 {
    0.5 * (1.0 - 0.5f64.powi(level as i32))
}

/// Left-point Riemann–Stieltjes sums of `∫_a^b y dx` on `levels` dyadic
/// refinements of the merged grid.
///
/// `y` holds `d × m` matrices row-major (or `d`-vectors when `x` is scalar).
pub fn young_integral(y: &SamplePath, x: &SamplePath, a: f64, b: f64, levels: u32) -> Result<YoungIntegralResult> {
    if levels == 0 {
        return Err(param_err!("levels must be positive"));
    }
    if levels > 60 {
        return Err(param_err!("levels must be at most 60, got {levels}"));
    }
    let prep = prepare(y, x, a, b)?;
    let fine = prep.running(level_weight(levels));
    let coarse = prep.running(level_weight(levels - 1));
    let refinement_error = fine
        .chunks(prep.d)
        .zip(coarse.chunks(prep.d))
        .map(|(u, v)| u.iter().zip(v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let widest = prep.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let n = prep.times.len();
    let value = fine[(n - 1) * prep.d..].to_vec();
    let running = SamplePath::from_flat(prep.times, fine, prep.d)?;
    Ok(YoungIntegralResult {
        value,
        running,
        mesh: widest / 2f64.powi(levels as i32),
        refinement_error,
        levels,
    })
}

/// The Riemann–Stieltjes integral of the piecewise-linear interpolants,
/// i.e. the limit of [`young_integral`] as the level grows.
pub fn interpolant_integral(y: &SamplePath, x: &SamplePath, a: f64, b: f64) -> Result<Vec<f64>> {
    let prep = prepare(y, x, a, b)?;
    let run = prep.running(0.5);
    Ok(run[run.len() - prep.d..].to_vec())
}

/// Both sides of the Young–Loève estimate on `[s, t]`:
/// `‖∫_s^t y dx − y_s(x_t − x_s)‖` and `K ⦀y⦀_{p-var} ⦀x⦀_{p-var}`.
pub fn young_loeve_defect(y: &SamplePath, x: &SamplePath, s: f64, t: f64, p: f64) -> Result<(f64, f64)> {
    if !(p > 1.0 && p < 2.0) {
        return Err(param_err!("p must lie in (1, 2), got {p}"));
    }
    let integral = interpolant_integral(y, x, s, t)?;
    let m = x.dim();
    let d = y.dim() / m;
    let ys = y.eval(s)?;
    let dx: Vec<f64> = x.eval(t)?.iter().zip(x.eval(s)?).map(|(u, v)| u - v).collect();
    let defect: Vec<f64> = (0..d)
        .map(|r| integral[r] - (0..m).map(|c| ys[r * m + c] * dx[c]).sum::<f64>())
        .collect();
    let lhs = norm(&defect);
    let rhs = young_loeve_constant(p) * p_variation(y, p, s, t)? * p_variation(x, p, s, t)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::uniform_times;

    fn line(n: usize) -> SamplePath {
        let ts = uniform_times(0.0, 1.0, n);
        SamplePath::scalar(ts.clone(), ts).unwrap()
    }

    #[test]
    fn identity_integrand_gives_half() {
        let x = line(16);
        let r = young_integral(&x, &x, 0.0, 1.0, 10).unwrap();
        // left sums with 16·2^10 pieces: (1 − 1/N)/2
        let n = 16.0 * 1024.0;
        assert!((r.value[0] - 0.5 * (1.0 - 1.0 / n)).abs() < 1e-14);
        assert!((interpolant_integral(&x, &x, 0.0, 1.0).unwrap()[0] - 0.5).abs() < 1e-15);
        assert!(r.refinement_error > 0.0 && r.refinement_error < 1e-4);
        assert_eq!(r.running.first(), &[0.0]);
        assert_eq!(r.running.last(), &r.value[..]);
    }

    #[test]
    fn constant_integrand_telescopes() {
        let x = SamplePath::scalar(vec![0.0, 0.3, 1.0], vec![0.0, 2.0, -1.0]).unwrap();
        let y = SamplePath::new(vec![0.0, 1.0], vec![vec![1.5, -2.0], vec![1.5, -2.0]]).unwrap();
        for level in 1..5 {
            let r = young_integral(&y, &x, 0.0, 1.0, level).unwrap();
            assert!((r.value[0] - (-1.5)).abs() < 1e-15);
            assert!((r.value[1] - 2.0).abs() < 1e-15);
            assert_eq!(r.refinement_error, 0.0);
        }
    }

    #[test]
    fn dimension_and_domain_errors() {
        let x = SamplePath::new(vec![0.0, 1.0], vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let y = SamplePath::new(vec![0.0, 1.0], vec![vec![0.0; 3], vec![1.0; 3]]).unwrap();
        assert!(matches!(young_integral(&y, &x, 0.0, 1.0, 2), Err(crate::Error::Parameter(_))));
        let y = line(4);
        let x = line(4);
        assert!(matches!(young_integral(&y, &x, 0.0, 2.0, 2), Err(crate::Error::Domain(_))));
        assert!(young_loeve_defect(&y, &x, 0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn loeve_on_line() {
        let x = line(8);
        let (lhs, rhs) = young_loeve_defect(&x, &x, 0.0, 1.0, 1.5).unwrap();
        assert!((lhs - 0.5).abs() < 1e-14);
        assert!((rhs - young_loeve_constant(1.5)).abs() < 1e-12);
        assert!((young_loeve_constant(1.5) - 4.84732).abs() < 1e-5);
    }

    #[test]
    fn additivity_at_grid_points() {
        let ts = uniform_times(0.0, 1.0, 10);
        let x = SamplePath::scalar(ts.clone(), ts.iter().map(|t| (5.0 * t).sin()).collect()).unwrap();
        let y = SamplePath::scalar(ts.clone(), ts.iter().map(|t| t * t).collect()).unwrap();
        let whole = young_integral(&y, &x, 0.0, 1.0, 6).unwrap().value[0];
        let left = young_integral(&y, &x, 0.0, 0.4, 6).unwrap().value[0];
        let right = young_integral(&y, &x, 0.4, 1.0, 6).unwrap().value[0];
        assert!((whole - left - right).abs() < 1e-14);
    }
}
