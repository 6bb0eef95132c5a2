//! Reference solutions for laminar media (transfer matrices) and a direct
//! full-contrast solve for general envelopes.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::envelope::{EnvelopeField, EnvelopeSpec};
use crate::error::{HopeError, Result};
use crate::field::VectorField;
use crate::gmres::GmresReport;
use crate::solver::{solve_shifted, IterConfig, OrderProblem, OrderSolver};
use crate::wave::{transverse_basis, WaveConfig};

/// Piecewise-constant permittivity between the two half-spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    /// Interface positions, strictly decreasing from `h` to `-h`.
    pub interfaces: Vec<f64>,
    /// One permittivity per layer (`interfaces.len() - 1` of them).
    pub eps_layers: Vec<f64>,
    pub eps_top: f64,
    pub eps_bottom: f64,
}

impl LayerStack {
    pub fn new(
        interfaces: Vec<f64>,
        eps_layers: Vec<f64>,
        eps_top: f64,
        eps_bottom: f64,
    ) -> Result<Self> {
        if interfaces.len() != eps_layers.len() + 1 {
            return Err(HopeError::InvalidConfig(format!(
                "{} interfaces cannot bound {} layers",
                interfaces.len(),
                eps_layers.len()
            )));
        }
        if interfaces.windows(2).any(|w| !(w[0] >= w[1])) {
            return Err(HopeError::InvalidConfig(
                "layer interfaces must decrease".into(),
            ));
        }
        if eps_layers
            .iter()
            .chain([&eps_top, &eps_bottom])
            .any(|&e| !(e > 0.0 && e.is_finite()))
        {
            return Err(HopeError::InvalidConfig(
                "layer permittivities must be positive".into(),
            ));
        }
        let mut s = LayerStack {
            interfaces,
            eps_layers,
            eps_top,
            eps_bottom,
        };
        s.collapse();
        Ok(s)
    }

    /// Drops zero-thickness layers and merges neighbours of equal permittivity.
    fn collapse(&mut self) {
        let mut faces = vec![self.interfaces[0]];
        let mut eps: Vec<f64> = Vec::new();
        for (i, &e) in self.eps_layers.iter().enumerate() {
            let bottom = self.interfaces[i + 1];
            if bottom == *faces.last().unwrap() {
                continue;
            }
            if eps.last() == Some(&e) {
                *faces.last_mut().unwrap() = bottom;
            } else {
                eps.push(e);
                faces.push(bottom);
            }
        }
        if eps.is_empty() {
            faces.truncate(1);
            faces.push(*self.interfaces.last().unwrap());
            if faces[0] != faces[1] {
                eps.push(self.eps_top);
            } else {
                faces.truncate(1);
            }
        }
        self.interfaces = faces;
        self.eps_layers = eps;
    }

    pub fn thickness(&self, i: usize) -> f64 {
        self.interfaces[i] - self.interfaces[i + 1]
    }

    pub fn swapped(&self) -> Self {
        let top = self.interfaces[0];
        let bot = *self.interfaces.last().unwrap();
        LayerStack {
            interfaces: self
                .interfaces
                .iter()
                .rev()
                .map(|z| top + bot - z)
                .collect(),
            eps_layers: self.eps_layers.iter().rev().copied().collect(),
            eps_top: self.eps_bottom,
            eps_bottom: self.eps_top,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationResult {
    /// Reflected and transmitted amplitudes of the field component continuous across interfaces.
    pub r: C64,
    pub t: C64,
    pub reflectance: f64,
    pub transmittance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub te: PolarizationResult,
    pub tm: PolarizationResult,
    /// Efficiencies for the configured amplitude, split over TE and TM.
    pub reflectance: f64,
    pub transmittance: f64,
}

fn gamma(eps: f64, k0: f64, kt2: f64) -> C64 {
    let s = eps * k0 * k0 - kt2;
    if s >= 0.0 {
        C64::new(s.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-s).sqrt())
    }
}

fn polarization(stack: &LayerStack, k0: f64, kt2: f64, tm: bool) -> Result<PolarizationResult> {
    let g_of = |eps: f64| if tm { eps } else { 1.0 };
    let gu = gamma(stack.eps_top, k0, kt2);
    let gw = gamma(stack.eps_bottom, k0, kt2);
    if gu.norm() < crate::wave::WOOD_TOL || gw.norm() < crate::wave::WOOD_TOL {
        return Err(HopeError::WoodAnomaly {
            p: 0,
            q: 0,
            face: if gu.norm() < crate::wave::WOOD_TOL {
                crate::error::Face::Upper
            } else {
                crate::error::Face::Lower
            },
            gamma_abs: gu.norm().min(gw.norm()),
        });
    }
    let (g_u, g_w) = (g_of(stack.eps_top), g_of(stack.eps_bottom));
    // state (u, u'/g) at z = -h for a unit transmitted wave exp(-i gamma_w (z + h))
    let mut u = C64::new(1.0, 0.0);
    let mut w = C64::new(0.0, -1.0) * gw / g_w;
    for i in (0..stack.eps_layers.len()).rev() {
        let eps = stack.eps_layers[i];
        let g = g_of(eps);
        let gm = gamma(eps, k0, kt2);
        let d = stack.thickness(i);
        let c = (gm * d).cos();
        // sin(gamma d) / gamma, regular at gamma = 0
        let sinc = if (gm * d).norm() < 1e-8 {
            C64::new(d, 0.0) * (1.0 - gm * gm * d * d / 6.0)
        } else {
            (gm * d).sin() / gm
        };
        let (nu, nw) = (c * u + g * sinc * w, -(gm * gm) * sinc / g * u + c * w);
        u = nu;
        w = nw;
    }
    let k = w * g_u / (C64::i() * gu);
    let a = (u - k) / 2.0;
    let r = (u + k) / 2.0;
    let (r, t) = (r / a, C64::new(1.0, 0.0) / a);
    let flux = |gm: C64, g: f64| gm.re / g;
    Ok(PolarizationResult {
        r,
        t,
        reflectance: r.norm_sqr(),
        transmittance: t.norm_sqr() * flux(gw, g_w) / flux(gu, g_u),
    })
}

/// Exact specular response of a layered medium.
pub fn transfer_matrix(stack: &LayerStack, cfg: &WaveConfig) -> Result<TransferResult> {
    let kt2 = cfg.alpha().powi(2) + cfg.beta().powi(2);
    let te = polarization(stack, cfg.k0, kt2, false)?;
    let tm = polarization(stack, cfg.k0, kt2, true)?;
    let (s, p) = transverse_basis(cfg.theta, cfg.phi_inc);
    let proj = |v: [f64; 3]| -> f64 {
        (0..3)
            .map(|i| cfg.amplitude[i] * v[i])
            .sum::<C64>()
            .norm_sqr()
    };
    let (ws, wp) = (proj(s), proj(p));
    Ok(TransferResult {
        te,
        tm,
        reflectance: ws * te.reflectance + wp * tm.reflectance,
        transmittance: ws * te.transmittance + wp * tm.transmittance,
    })
}

/// Tolerance on transverse envelope variation for the laminar oracle.
pub const LAMINAR_TOL: f64 = 1e-10;

fn check_laminar(spec: &EnvelopeSpec, cfg: &WaveConfig) -> Result<()> {
    let mut dev: f64 = 0.0;
    for iz in 0..17 {
        let z = cfg.h * (1.0 - 2.0 * iz as f64 / 16.0);
        let base = spec.value(cfg, 0.0, 0.0, z);
        for ix in 0..7 {
            for iy in 0..7 {
                let x = cfg.d_x * ix as f64 / 7.0;
                let y = cfg.d_y * iy as f64 / 7.0;
                dev = dev.max((spec.value(cfg, x, y, z) - base).abs());
            }
        }
    }
    if dev > LAMINAR_TOL {
        return Err(HopeError::NotLaminar { deviation: dev });
    }
    Ok(())
}

/// Staircase of `n_layers` equal layers with midpoint permittivities at contrast `rho`.
pub fn laminar_sample(
    env: &EnvelopeField,
    cfg: &WaveConfig,
    rho: f64,
    n_layers: usize,
) -> Result<LayerStack> {
    if env.transverse_deviation > LAMINAR_TOL {
        return Err(HopeError::NotLaminar {
            deviation: env.transverse_deviation,
        });
    }
    staircase(&env.spec, cfg, rho, n_layers)
}

pub fn staircase(
    spec: &EnvelopeSpec,
    cfg: &WaveConfig,
    rho: f64,
    n_layers: usize,
) -> Result<LayerStack> {
    check_laminar(spec, cfg)?;
    if n_layers == 0 {
        return Err(HopeError::InvalidConfig(
            "staircase needs at least one layer".into(),
        ));
    }
    let h = cfg.h;
    let dz = 2.0 * h / n_layers as f64;
    let interfaces: Vec<f64> = (0..=n_layers).map(|i| h - i as f64 * dz).collect();
    let eps: Vec<f64> = (0..n_layers)
        .map(|i| spec.permittivity(cfg, rho, 0.0, 0.0, h - (i as f64 + 0.5) * dz))
        .collect();
    LayerStack::new(interfaces, eps, cfg.eps_u, cfg.eps_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaminarReference {
    pub reflectance: f64,
    pub transmittance: f64,
    /// `|R_2N - R_N|`, the raw staircase self-convergence.
    pub self_convergence: f64,
    /// Difference between the extrapolated and the finest staircase value.
    pub richardson_correction: f64,
}

/// Staircase efficiencies at `n` and `2n` layers, extrapolated for the second-order midpoint error.
pub fn laminar_reference(
    spec: &EnvelopeSpec,
    cfg: &WaveConfig,
    rho: f64,
    n_layers: usize,
) -> Result<LaminarReference> {
    let coarse = transfer_matrix(&staircase(spec, cfg, rho, n_layers)?, cfg)?;
    let fine = transfer_matrix(&staircase(spec, cfg, rho, 2 * n_layers)?, cfg)?;
    let ex = |c: f64, f: f64| (4.0 * f - c) / 3.0;
    let r = ex(coarse.reflectance, fine.reflectance);
    Ok(LaminarReference {
        reflectance: r,
        transmittance: ex(coarse.transmittance, fine.transmittance),
        self_convergence: (fine.reflectance - coarse.reflectance).abs(),
        richardson_correction: (r - fine.reflectance).abs(),
    })
}

/// Field at total contrast `rho` from the discrete full problem
/// `(I + rho S0 E) E = E_0`, bypassing the series.
pub fn direct_solve(
    solver: &OrderSolver,
    env: &EnvelopeField,
    cfg: &WaveConfig,
    rho: f64,
    iter: &IterConfig,
) -> Result<(VectorField, GmresReport)> {
    let e0 = solver.solve(&OrderProblem::incident(cfg, &solver.disc)?)?;
    if rho == 0.0 || env.is_zero() {
        return Ok((
            e0,
            GmresReport {
                iterations: 0,
                history: Vec::new(),
            },
        ));
    }
    solve_shifted(solver, env, rho, &e0, iter)
}
