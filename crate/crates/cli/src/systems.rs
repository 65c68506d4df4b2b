//! The system catalog.

use nalgebra::DMatrix;
use yde_core::pendulum::{build_pendulum, PendulumParams};
use yde_core::{Field, Result, YdeSystem};

use crate::config::{ExperimentConfig, SystemId, SystemSpec};

/// Pendulum parameters from `[system]`, with Hurst exponents from `[noise]`.
pub fn pendulum_params(cfg: &ExperimentConfig) -> std::result::Result<PendulumParams, String> {
    let s = &cfg.system;
    if s.id != SystemId::Pendulum {
        return Err(format!("system `{}` is not the pendulum", s.id.name()));
    }
    let h = cfg.hurst_for(4)?;
    Ok(PendulumParams {
        m: s.m,
        b: s.b,
        l_bar: s.l_bar,
        k: s.k,
        g_grav: s.g_grav,
        sigma: [s.sigma[0], s.sigma[1], s.sigma[2], s.sigma[3]],
        hurst: [h[0], h[1], h[2], h[3]],
    })
}

pub fn build_system(s: &SystemSpec) -> Result<YdeSystem> {
    match s.id {
        SystemId::Pendulum => build_pendulum(&PendulumParams {
            m: s.m,
            b: s.b,
            l_bar: s.l_bar,
            k: s.k,
            g_grav: s.g_grav,
            sigma: [s.sigma[0], s.sigma[1], s.sigma[2], s.sigma[3]],
            ..PendulumParams::default()
        }),
        SystemId::ScalarLinear => {
            let a = DMatrix::from_element(1, 1, s.a[0]);
            YdeSystem::new(a, Field::zero(1, 1, 1), Field::zero(1, 1, 1).with_linear(0, 0, 0, s.c[0])?)
        }
        SystemId::Additive => {
            let d = s.sigma.len();
            let mut g = Field::zero(d, d, d);
            for (i, sig) in s.sigma.iter().enumerate() {
                g = g.with_offset(i, i, *sig)?;
            }
            YdeSystem::new(-DMatrix::identity(d, d) * s.lambda, Field::zero(d, 1, d), g)
        }
        SystemId::DiagonalLinear => {
            let d = s.a.len();
            let mut g = Field::zero(d, d, d);
            for (i, c) in s.c.iter().enumerate() {
                g = g.with_linear(i, i, i, *c)?;
            }
            YdeSystem::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&s.a)), Field::zero(d, 1, d), g)
        }
    }
}

/// The system with its diffusion field multiplied by `scale`.
pub fn scaled_system(s: &SystemSpec, scale: f64) -> Result<YdeSystem> {
    let sys = build_system(s)?;
    let g = sys.g().clone().scaled(scale);
    sys.with_diffusion(g)
}
