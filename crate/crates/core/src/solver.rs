//! The controlled system `dy = [Ay + f(y)] dt + g(y) dx` and its Euler scheme.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{domain_err, param_err, Error, Result};
use crate::fields::Field;
use crate::linalg::{expm, opnorm};
use crate::paths::{norm, same_time, uniform_times, SamplePath, TIME_TOL};
use crate::seed;

/// `(A, f, g)` together with the Lipschitz data used by the estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YdeSystem {
    a: DMatrix<f64>,
    f: Field,
    g: Field,
    c_f: f64,
    c_g: f64,
    c_g_prime: f64,
    g_sup: Option<f64>,
}

impl YdeSystem {
    /// `f` must map `ℝ^d → ℝ^d` and `g` map `ℝ^d → ℝ^{d×m}`.
    pub fn new(a: DMatrix<f64>, f: Field, g: Field) -> Result<Self> {
        let d = a.nrows();
        if d == 0 || a.ncols() != d {
            return Err(param_err!("A must be square, got {}x{}", a.nrows(), a.ncols()));
        }
        if f.dim() != d || f.rows() != d || f.cols() != 1 {
            return Err(param_err!("drift field must map R^{d} to R^{d}"));
        }
        if g.dim() != d || g.rows() != d || g.cols() == 0 {
            return Err(param_err!("diffusion field must map R^{d} to R^({d}x m)"));
        }
        Ok(YdeSystem {
            c_f: f.lipschitz(),
            c_g: g.lipschitz(),
            c_g_prime: g.derivative_lipschitz(),
            g_sup: g.sup_bound(),
            a,
            f,
            g,
        })
    }

    /// State dimension `d`.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Driver dimension `m`.
    pub fn noise_dim(&self) -> usize {
        self.g.cols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn f(&self) -> &Field {
        &self.f
    }

    pub fn g(&self) -> &Field {
        &self.g
    }

    pub fn c_f(&self) -> f64 {
        self.c_f
    }

    pub fn c_g(&self) -> f64 {
        self.c_g
    }

    /// Lipschitz constant of `Dg`.
    pub fn c_g_prime(&self) -> f64 {
        self.c_g_prime
    }

    pub fn g_sup(&self) -> Option<f64> {
        self.g_sup
    }

    pub fn g_is_linear(&self) -> bool {
        self.g.is_affine()
    }

    pub fn f0(&self) -> &[f64] {
        self.f.at_zero()
    }

    pub fn g0(&self) -> &[f64] {
        self.g.at_zero()
    }

    /// Same `A` and `f` with a new diffusion field.
    pub fn with_diffusion(&self, g: Field) -> Result<Self> {
        YdeSystem::new(self.a.clone(), self.f.clone(), g)
    }

    /// `A y + f(y)`.
    pub fn drift_into(&self, y: &[f64], out: &mut [f64]) {
        self.f.eval_into(y, out);
        let d = self.dim();
        for (r, o) in out.iter_mut().enumerate() {
            *o += (0..d).map(|c| self.a[(r, c)] * y[c]).sum::<f64>();
        }
    }

    /// `g(y)` as a row-major `d × m` matrix.
    pub fn diffusion_into(&self, y: &[f64], out: &mut [f64]) {
        self.g.eval_into(y, out);
    }
}

/// Mesh times on `[a, b]`, checking that the mesh refines or subsamples the
/// grid of `x`.
fn mesh_times(x: &SamplePath, a: f64, b: f64, mesh: f64) -> Result<Vec<f64>> {
    if !(mesh > 0.0 && mesh.is_finite()) {
        return Err(param_err!("mesh must be positive, got {mesh}"));
    }
    if !(b > a) {
        return Err(domain_err!("empty interval [{a}, {b}]"));
    }
    if !x.covers(a, b) {
        return Err(domain_err!("driver spans [{}, {}], not [{a}, {b}]", x.start(), x.end()));
    }
    let steps = ((b - a) / mesh).round();
    if steps < 1.0 || ((b - a) - steps * mesh).abs() > TIME_TOL * (b - a).max(1.0) {
        return Err(param_err!("interval length {} is not a multiple of mesh {mesh}", b - a));
    }
    let times = uniform_times(a, b, steps as usize);
    let on_mesh = |t: f64| {
        let k = ((t - a) / mesh).round();
        same_time(a + k * mesh, t)
    };
    let inside: Vec<f64> = x.times().iter().copied().filter(|&t| t >= a - TIME_TOL && t <= b + TIME_TOL).collect();
    let refines = inside.iter().all(|&t| on_mesh(t));
    let subsamples = || times.iter().all(|&t| x.grid_index(t).is_some());
    if !refines && !subsamples() {
        return Err(param_err!(
            "mesh {mesh} neither refines nor subsamples the driver grid on [{a}, {b}]"
        ));
    }
    Ok(times)
}

/// Driver values at the mesh times, row-major.
fn driver_on_mesh(x: &SamplePath, times: &[f64]) -> Result<Vec<f64>> {
    let m = x.dim();
    let mut out = vec![0.0; times.len() * m];
    for (i, &t) in times.iter().enumerate() {
        x.eval_into(t, &mut out[i * m..(i + 1) * m])?;
    }
    Ok(out)
}

struct Workspace {
    drift: Vec<f64>,
    diff: Vec<f64>,
}

fn euler_step(sys: &YdeSystem, y: &mut [f64], dt: f64, dx: &[f64], ws: &mut Workspace) {
    let m = dx.len();
    sys.drift_into(y, &mut ws.drift);
    sys.diffusion_into(y, &mut ws.diff);
    for (r, yr) in y.iter_mut().enumerate() {
        let noise: f64 = (0..m).map(|c| ws.diff[r * m + c] * dx[c]).sum();
        *yr += ws.drift[r] * dt + noise;
    }
}

fn check_inputs(sys: &YdeSystem, x: &SamplePath, y0: &[f64]) -> Result<()> {
    if x.dim() != sys.noise_dim() {
        return Err(param_err!("driver has dimension {}, system expects {}", x.dim(), sys.noise_dim()));
    }
    if y0.len() != sys.dim() {
        return Err(param_err!("initial value has dimension {}, system expects {}", y0.len(), sys.dim()));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(param_err!("initial value must be finite"));
    }
    Ok(())
}

fn integrate(sys: &YdeSystem, x: &SamplePath, y0: &[f64], a: f64, b: f64, mesh: f64, record: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    check_inputs(sys, x, y0)?;
    let times = mesh_times(x, a, b, mesh)?;
    let xs = driver_on_mesh(x, &times)?;
    let (d, m) = (sys.dim(), sys.noise_dim());
    let mut ws = Workspace { drift: vec![0.0; d], diff: vec![0.0; d * m] };
    let mut y = y0.to_vec();
    let mut traj = Vec::with_capacity(if record { times.len() * d } else { 0 });
    if record {
        traj.extend_from_slice(&y);
    }
    let mut dx = vec![0.0; m];
    for k in 0..times.len() - 1 {
        for c in 0..m {
            dx[c] = xs[(k + 1) * m + c] - xs[k * m + c];
        }
        euler_step(sys, &mut y, times[k + 1] - times[k], &dx, &mut ws);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: times[k + 1] });
        }
        if record {
            traj.extend_from_slice(&y);
        }
    }
    Ok((if record { times } else { Vec::new() }, if record { traj } else { y }))
}

/// Explicit Euler scheme `y_{k+1} = y_k + [A y_k + f(y_k)] Δt + g(y_k) Δx`
/// on the uniform mesh `a, a + mesh, …, b`.
pub fn solve_yde(sys: &YdeSystem, x: &SamplePath, y0: &[f64], a: f64, b: f64, mesh: f64) -> Result<SamplePath> {
    let (times, values) = integrate(sys, x, y0, a, b, mesh, true)?;
    SamplePath::from_flat(times, values, sys.dim())
}

/// Final state of [`solve_yde`] without storing the trajectory.
pub fn solve_endpoint(sys: &YdeSystem, x: &SamplePath, y0: &[f64], a: f64, b: f64, mesh: f64) -> Result<Vec<f64>> {
    Ok(integrate(sys, x, y0, a, b, mesh, false)?.1)
}

/// Classical RK4 for `μ' = Aμ + f(μ)` on the uniform mesh of `[a, b]`.
pub fn solve_deterministic(sys: &YdeSystem, mu0: &[f64], a: f64, b: f64, mesh: f64) -> Result<SamplePath> {
    if mu0.len() != sys.dim() {
        return Err(param_err!("initial value has dimension {}, system expects {}", mu0.len(), sys.dim()));
    }
    if !(mesh > 0.0) || !(b > a) {
        return Err(param_err!("need mesh > 0 and b > a"));
    }
    let steps = ((b - a) / mesh).round().max(1.0) as usize;
    let times = uniform_times(a, b, steps);
    let d = sys.dim();
    let mut y = mu0.to_vec();
    let mut out = Vec::with_capacity(times.len() * d);
    out.extend_from_slice(&y);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for w in times.windows(2) {
        let h = w[1] - w[0];
        sys.drift_into(&y, &mut k1);
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        sys.drift_into(&tmp, &mut k2);
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        sys.drift_into(&tmp, &mut k3);
        for i in 0..d {
            tmp[i] = y[i] + h * k3[i];
        }
        sys.drift_into(&tmp, &mut k4);
        for i in 0..d {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: w[1] });
        }
        out.extend_from_slice(&y);
    }
    SamplePath::from_flat(times, out, d)
}

/// Largest violation of the mild form
/// `y_t = Φ(t−a)y_a + ∫_a^t Φ(t−s) f(y_s) ds + ∫_a^t Φ(t−s) g(y_s) dx_s`
/// over checkpoints of the trajectory grid, `Φ(t) = e^{At}`.
///
/// Both integrals are left-point sums on the trajectory grid, i.e. level-0
/// Young sums. All grid points are checkpoints for up to 512 steps;
/// otherwise 256 evenly spread ones plus the midpoint and the end.
pub fn variation_of_constants_residual(traj: &SamplePath, sys: &YdeSystem, x: &SamplePath) -> Result<f64> {
    let d = sys.dim();
    let m = sys.noise_dim();
    if traj.dim() != d || x.dim() != m {
        return Err(param_err!("trajectory or driver dimension does not match the system"));
    }
    let ts = traj.times();
    let n = ts.len() - 1;
    if n == 0 {
        return Ok(0.0);
    }
    if !x.covers(ts[0], ts[n]) {
        return Err(domain_err!("driver does not cover the trajectory span"));
    }
    let xs = driver_on_mesh(x, ts)?;
    let mut checkpoints: Vec<usize> = if n <= 512 { (1..=n).collect() } else { (1..=256).map(|i| i * n / 256).collect() };
    checkpoints.push(n / 2);
    checkpoints.sort_unstable();
    checkpoints.dedup();
    checkpoints.retain(|&j| j > 0);

    let h = ts[1] - ts[0];
    let uniform = ts.windows(2).all(|w| same_time(w[1] - w[0], h));
    let mut powers: Vec<DMatrix<f64>> = Vec::new();
    if uniform {
        powers = (0..=n).map(|i| expm(&(sys.a() * (i as f64 * h)))).collect();
    }
    let phi = |j: usize, k: usize| -> DMatrix<f64> {
        if uniform {
            powers[j - k].clone()
        } else {
            expm(&(sys.a() * (ts[j] - ts[k])))
        }
    };

    // per-step source terms f(y_k)Δt + g(y_k)Δx
    let mut source = vec![0.0; n * d];
    let mut fv = vec![0.0; d];
    let mut gv = vec![0.0; d * m];
    for k in 0..n {
        let y = traj.value(k);
        sys.f().eval_into(y, &mut fv);
        sys.diffusion_into(y, &mut gv);
        let dt = ts[k + 1] - ts[k];
        for r in 0..d {
            let noise: f64 = (0..m).map(|c| gv[r * m + c] * (xs[(k + 1) * m + c] - xs[k * m + c])).sum();
            source[k * d + r] = fv[r] * dt + noise;
        }
    }

    let y_a = DVector::from_column_slice(traj.value(0));
    let mut worst = 0.0_f64;
    for &j in &checkpoints {
        let mut acc = phi(j, 0) * &y_a;
        for k in 0..j {
            let s = DVector::from_column_slice(&source[k * d..(k + 1) * d]);
            acc += phi(j, k) * s;
        }
        let r: f64 = (0..d).map(|i| (traj.value(j)[i] - acc[i]).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Largest sampled difference quotients of `f`, `g` and `Dg`-free linearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzAudit {
    pub max_f_quotient: f64,
    pub max_g_quotient: f64,
    /// `max ‖g(y) − (C y + g(0))‖` when `g` is declared linear, else 0.
    pub linear_defect: f64,
    pub samples: usize,
}

impl LipschitzAudit {
    /// Whether every quotient stays below the declared constants.
    pub fn passes(&self, sys: &YdeSystem) -> bool {
        let tol = 1e-12;
        self.max_f_quotient <= sys.c_f() * (1.0 + tol) + tol
            && self.max_g_quotient <= sys.c_g() * (1.0 + tol) + tol
            && self.linear_defect <= tol
    }
}

/// Randomised check of the declared Lipschitz constants on pairs drawn from
/// a Gaussian cloud of radius `scale`, including nearby pairs.
pub fn audit_lipschitz(sys: &YdeSystem, samples: usize, scale: f64, seed_value: u64) -> LipschitzAudit {
    let d = sys.dim();
    let mut rng = seed::rng(seed_value, 0);
    let mut gauss = |s: f64| -> Vec<f64> { (0..d).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect() };
    let (mut qf, mut qg, mut lin) = (0.0_f64, 0.0_f64, 0.0_f64);
    let c = sys.g().linear_part();
    let g0 = sys.g0().to_vec();
    for i in 0..samples {
        let y = gauss(scale);
        let step = if i % 2 == 0 { scale } else { scale * 1e-3 };
        let dy = gauss(step);
        let z: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + b).collect();
        let dist = norm(&dy);
        if dist == 0.0 {
            continue;
        }
        let diff = |u: Vec<f64>, v: Vec<f64>| norm(&u.iter().zip(&v).map(|(p, q)| p - q).collect::<Vec<_>>());
        qf = qf.max(diff(sys.f().eval(&y), sys.f().eval(&z)) / dist);
        qg = qg.max(diff(sys.g().eval(&y), sys.g().eval(&z)) / dist);
        if sys.g_is_linear() {
            let pred = &c * DVector::from_column_slice(&y);
            let gy = sys.g().eval(&y);
            let defect = gy.iter().enumerate().map(|(k, v)| (v - pred[k] - g0[k]).abs()).fold(0.0, f64::max);
            lin = lin.max(defect);
        }
    }
    LipschitzAudit { max_f_quotient: qf, max_g_quotient: qg, linear_defect: lin, samples }
}

/// Operator norm of the semigroup at time `t`.
pub fn semigroup_norm(sys: &YdeSystem, t: f64) -> f64 {
    opnorm(&expm(&(sys.a() * t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_system(a: f64, c: f64) -> YdeSystem {
        let am = DMatrix::from_element(1, 1, a);
        let g = Field::linear_vector(&DMatrix::from_element(1, 1, c));
        YdeSystem::new(am, Field::zero(1, 1, 1), g).unwrap()
    }

    fn flat(a: f64, b: f64, n: usize) -> SamplePath {
        let ts = uniform_times(a, b, n);
        SamplePath::scalar(ts.clone(), vec![0.0; ts.len()]).unwrap()
    }

    #[test]
    fn pure_linear_decay() {
        let sys = scalar_system(-1.0, 0.0);
        let x = flat(0.0, 1.0, 16);
        let mesh = 1.0 / 4096.0;
        let y = solve_yde(&sys, &x, &[1.0], 0.0, 1.0, mesh).unwrap();
        assert!((y.last()[0] - (-1f64).exp()).abs() < 1e-4);
        assert_eq!(solve_endpoint(&sys, &x, &[1.0], 0.0, 1.0, mesh).unwrap(), y.last().to_vec());
    }

    #[test]
    fn incompatible_mesh_is_rejected() {
        let sys = scalar_system(-1.0, 0.0);
        let x = flat(0.0, 1.0, 10);
        assert!(matches!(solve_yde(&sys, &x, &[1.0], 0.0, 1.0, 1.0 / 16.0), Err(Error::Parameter(_))));
        assert!(solve_yde(&sys, &x, &[1.0], 0.0, 1.0, 0.05).is_ok());
        assert!(solve_yde(&sys, &x, &[1.0], 0.0, 1.0, 0.2).is_ok());
        assert!(matches!(solve_yde(&sys, &x, &[1.0], 0.0, 2.0, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn blow_up_is_reported() {
        let sys = scalar_system(-1.0, 1.0);
        let ts = uniform_times(0.0, 1.0, 4);
        let x = SamplePath::scalar(ts, vec![0.0, 1e200, -1e200, 1e200, 0.0]).unwrap();
        assert!(matches!(solve_yde(&sys, &x, &[1.0], 0.0, 1.0, 0.25), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn residual_detects_corruption() {
        let sys = scalar_system(-1.0, 0.5);
        let ts = uniform_times(0.0, 1.0, 256);
        let x = SamplePath::scalar(ts.clone(), ts.iter().map(|t| (7.0 * t).sin()).collect()).unwrap();
        let y = solve_yde(&sys, &x, &[1.0], 0.0, 1.0, 1.0 / 256.0).unwrap();
        let clean = variation_of_constants_residual(&y, &sys, &x).unwrap();
        assert!(clean < 1e-2, "{clean}");
        let mut vals = y.flat_values().to_vec();
        vals[128] += 0.1;
        let bad = SamplePath::from_flat(y.times().to_vec(), vals, 1).unwrap();
        assert!(variation_of_constants_residual(&bad, &sys, &x).unwrap() >= 0.05);
    }

    #[test]
    fn rk4_is_accurate() {
        let sys = scalar_system(-2.0, 0.0);
        let mu = solve_deterministic(&sys, &[1.0], 0.0, 1.0, 0.01).unwrap();
        assert!((mu.last()[0] - (-2f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn audit_accepts_declared_constants() {
        let f = Field::zero(2, 1, 2).with_sine(1, 0, 0, 0.2).unwrap();
        let g = Field::zero(2, 2, 2).with_sine(1, 0, 0, 0.1).unwrap().with_linear(1, 1, 1, -0.3).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.0]);
        let sys = YdeSystem::new(a, f, g).unwrap();
        let audit = audit_lipschitz(&sys, 2000, 3.0, 1);
        assert!(audit.passes(&sys), "{audit:?}");
        assert!(!sys.g_is_linear());
    }
}
