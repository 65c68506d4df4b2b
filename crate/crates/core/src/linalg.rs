//! Matrix helpers and the decay constants of `e^{At}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};

/// Spectral (largest singular value) norm.
pub fn opnorm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Matrix exponential by scaling and squaring with a Padé approximant.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().exp()
}

/// `e^{A t}`.
pub fn semigroup(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    expm(&(a * t))
}

/// Largest real part among the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    check_square(a)?;
    let eig = a.complex_eigenvalues();
    let mut best = f64::NEG_INFINITY;
    for z in eig.iter() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Numeric("eigenvalue computation did not converge".into()));
        }
        best = best.max(z.re);
    }
    Ok(best)
}

fn check_square(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() == 0 || a.nrows() != a.ncols() {
        return Err(param_err!("matrix must be square and nonempty, got {}x{}", a.nrows(), a.ncols()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(param_err!("matrix has non-finite entries"));
    }
    Ok(())
}

/// Constants with `‖e^{At}‖ ≤ C_A e^{−λ_A t}` for all `t ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemigroupConstants {
    pub c_a: f64,
    pub lambda_a: f64,
    /// Spectral norm `|A|`.
    pub opnorm_a: f64,
    pub delta: f64,
    /// `max Re σ(A)`.
    pub spectral_abscissa: f64,
    /// Time beyond which `‖e^{At}‖e^{λ_A t}` is dominated by its values on `[0, horizon]`.
    pub horizon: f64,
}

const GRID_POINTS: usize = 2048;

/// Computes `λ_A = (1 − δ)(−max Re σ(A))` and `C_A = sup_t ‖e^{At}‖e^{λ_A t}`.
///
/// With `B = A + λ_A I` the weighted norm is `‖e^{Bt}‖`. Once a horizon `T`
/// with `‖e^{BT}‖ ≤ 1` is found, submultiplicativity gives
/// `‖e^{B(t+T)}‖ ≤ ‖e^{Bt}‖`, so the supremum over `[0, T]` is global. The
/// supremum is located on a uniform grid and polished by golden-section search.
pub fn semigroup_constants(a: &DMatrix<f64>, delta: f64) -> Result<SemigroupConstants> {
    check_square(a)?;
    if !(0.0..1.0).contains(&delta) {
        return Err(param_err!("delta must lie in [0, 1), got {delta}"));
    }
    let abscissa = spectral_abscissa(a)?;
    if abscissa >= 0.0 {
        return Err(Error::Precondition(format!(
            "A is not Hurwitz: an eigenvalue has real part {abscissa}"
        )));
    }
    let d = a.nrows();
    let lambda_a = (1.0 - delta) * (-abscissa);
    let b = a + DMatrix::identity(d, d) * lambda_a;
    let weighted = |t: f64| opnorm(&semigroup(&b, t));

    let mut horizon = 1.0 / (-abscissa);
    let mut found = false;
    for _ in 0..64 {
        if weighted(horizon) <= 1.0 + 1e-12 {
            found = true;
            break;
        }
        horizon *= 2.0;
    }
    if !found {
        return Err(Error::Numeric(format!(
            "no horizon with ‖e^(Bt)‖ ≤ 1 found up to t = {horizon:e}; increase delta"
        )));
    }

    let step = horizon / GRID_POINTS as f64;
    let (mut best_t, mut best) = (0.0, 1.0);
    for i in 1..=GRID_POINTS {
        let t = i as f64 * step;
        let v = weighted(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    if best_t > 0.0 {
        let (_, v) = golden_max(&weighted, (best_t - step).max(0.0), (best_t + step).min(horizon));
        best = best.max(v);
    }
    Ok(SemigroupConstants {
        c_a: best.max(1.0),
        lambda_a,
        opnorm_a: opnorm(a),
        delta,
        spectral_abscissa: abscissa,
        horizon,
    })
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `(C_A, λ_A)` across a range of margins, for choosing `δ`. Margins for
/// which no constants exist are skipped.
pub fn tradeoff_curve(a: &DMatrix<f64>, deltas: &[f64]) -> Result<Vec<SemigroupConstants>> {
    check_square(a)?;
    Ok(deltas.iter().filter_map(|&d| semigroup_constants(a, d).ok()).collect())
}
