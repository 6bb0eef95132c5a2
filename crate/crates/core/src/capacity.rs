//! Capacity (Dirichlet-Neumann) operators on the artificial boundaries.
//!
//! Both operators are diagonal in the mode lattice: each mode carries a
//! 2x2 multiplier acting on the tangential `(x, y)` components.

use num_complex::Complex64 as C64;

use crate::error::{Face, HopeError, Result};
use crate::wave::{ModeGrid, WaveConfig, WOOD_TOL};

pub type Mat2 = [[C64; 2]; 2];

/// Tangential trace `N x (E x N)` on one face; the z-component is zero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentialTrace {
    pub face: Face,
    /// `(x, y)` Fourier coefficients per lattice mode, flat-indexed as in [`ModeGrid`].
    pub coeffs: Vec<[C64; 2]>,
}

impl TangentialTrace {
    pub fn zeros(face: Face, modes: usize) -> Self {
        TangentialTrace {
            face,
            coeffs: vec![[C64::new(0.0, 0.0); 2]; modes],
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        TangentialTrace {
            face: self.face,
            coeffs: self.coeffs.iter().map(|c| [c[0] * s, c[1] * s]).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c[0] == C64::new(0.0, 0.0) && c[1] == C64::new(0.0, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.face != other.face || self.coeffs.len() != other.coeffs.len() {
            return Err(HopeError::ShapeMismatch(
                "trace face or mode count differs".into(),
            ));
        }
        Ok(TangentialTrace {
            face: self.face,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
                .collect(),
        })
    }
}

/// Per-mode multiplier of `T_u` (upper face) or `T_w` (lower face).
pub fn capacity_multiplier(
    face: Face,
    m: usize,
    cfg: &WaveConfig,
    grid: &ModeGrid,
) -> Result<Mat2> {
    let gamma = grid.gamma(face, m);
    let (a, b) = grid.wavenumbers(m);
    if gamma.norm() < WOOD_TOL {
        let (p, q) = grid.index(m);
        return Err(HopeError::WoodAnomaly {
            p,
            q,
            face,
            gamma_abs: gamma.norm(),
        });
    }
    Ok(multiplier_from(gamma, a, b, cfg.omega_mu()))
}

pub(crate) fn multiplier_from(gamma: C64, a: f64, b: f64, omega_mu: f64) -> Mat2 {
    let i = C64::i();
    let pre = 1.0 / (i * omega_mu);
    let g_inv = 1.0 / gamma;
    [
        [
            pre * (i * gamma + i * a * a * g_inv),
            pre * (i * a * b * g_inv),
        ],
        [
            pre * (i * a * b * g_inv),
            pre * (i * gamma + i * b * b * g_inv),
        ],
    ]
}

pub fn apply_capacity(
    cfg: &WaveConfig,
    grid: &ModeGrid,
    trace: &TangentialTrace,
) -> Result<TangentialTrace> {
    if trace.coeffs.len() != grid.len() {
        return Err(HopeError::ShapeMismatch(format!(
            "trace has {} modes, grid has {}",
            trace.coeffs.len(),
            grid.len()
        )));
    }
    let coeffs = trace
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, u)| {
            let t = capacity_multiplier(trace.face, m, cfg, grid)?;
            Ok([
                t[0][0] * u[0] + t[0][1] * u[1],
                t[1][0] * u[0] + t[1][1] * u[1],
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TangentialTrace {
        face: trace.face,
        coeffs,
    })
}

/// Incident forcing `phi = curl E_inc x N_u - i omega mu0 N_u x (T_u[E_inc] x N_u)` at `z = h`.
pub fn incident_trace_phi(cfg: &WaveConfig, grid: &ModeGrid) -> Result<TangentialTrace> {
    let mut phi = TangentialTrace::zeros(Face::Upper, grid.len());
    let m0 = grid.flat(0, 0);
    let t = capacity_multiplier(Face::Upper, m0, cfg, grid)?;
    let i = C64::i();
    let gamma = cfg.gamma_inc();
    let (a, b) = (cfg.alpha(), cfg.beta());
    let amp = cfg.amplitude;
    let phase = (-i * gamma * cfg.h).exp();
    // curl(E) x N_u = (dz Ex - dx Ez, dz Ey - dy Ez)
    let curl = [
        -i * gamma * amp[0] - i * a * amp[2],
        -i * gamma * amp[1] - i * b * amp[2],
    ];
    let iwm = i * cfg.omega_mu();
    for r in 0..2 {
        let tu = t[r][0] * amp[0] + t[r][1] * amp[1];
        phi.coeffs[m0][r] = (curl[r] - iwm * tu) * phase;
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{build_mode_grid, Polarization};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn multiplier_at_normal_mode_is_identity() {
        let t = multiplier_from(c(1.0, 0.0), 0.0, 0.0, 1.0);
        assert!((t[0][0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((t[1][1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(t[0][1].norm() < 1e-15 && t[1][0].norm() < 1e-15);
    }

    #[test]
    fn multiplier_with_tangential_wavenumber() {
        // eps k0^2 = 2, alpha_p = 1 -> gamma = 1
        let t = multiplier_from(c(1.0, 0.0), 1.0, 0.0, 1.0);
        assert!((t[0][0] - c(2.0, 0.0)).norm() < 1e-15);
        assert!((t[1][1] - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(t[0][1], c(0.0, 0.0));
    }

    #[test]
    fn phi_at_normal_incidence() {
        let h = 0.7;
        let amp = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let cfg = WaveConfig::new(
            1.0,
            0.0,
            0.0,
            Polarization::Custom(amp),
            2.0 * PI,
            2.0 * PI,
            h,
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        let grid = build_mode_grid(&cfg, 0, 0).unwrap();
        let phi = incident_trace_phi(&cfg, &grid).unwrap();
        let expected = c(0.0, -2.0) * c(0.0, -h).exp();
        assert!((phi.coeffs[0][0] - expected).norm() < 1e-14);
        assert!(phi.coeffs[0][1].norm() < 1e-15);
    }

    #[test]
    fn phi_lives_on_specular_mode_only() {
        let cfg = WaveConfig::new(
            2.3,
            0.3,
            0.4,
            Polarization::Te,
            2.0,
            2.5,
            0.5,
            1.2,
            1.5,
            1.2,
        )
        .unwrap();
        let grid = build_mode_grid(&cfg, 2, 3).unwrap();
        let phi = incident_trace_phi(&cfg, &grid).unwrap();
        let m0 = grid.flat(0, 0);
        for (m, v) in phi.coeffs.iter().enumerate() {
            if m != m0 {
                assert_eq!(v, &[c(0.0, 0.0); 2]);
            }
        }
        assert!(phi.coeffs[m0][0].norm() > 0.0);
    }

    #[test]
    fn single_mode_trace_stays_single_mode() {
        let cfg = WaveConfig::new(
            2.3,
            0.3,
            0.4,
            Polarization::Te,
            2.0,
            2.5,
            0.5,
            1.2,
            1.5,
            1.2,
        )
        .unwrap();
        let grid = build_mode_grid(&cfg, 1, 1).unwrap();
        let mut u = TangentialTrace::zeros(Face::Lower, grid.len());
        let m = grid.flat(1, -1);
        u.coeffs[m] = [c(0.3, -0.2), c(1.0, 0.5)];
        let v = apply_capacity(&cfg, &grid, &u).unwrap();
        let t = capacity_multiplier(Face::Lower, m, &cfg, &grid).unwrap();
        for (k, val) in v.coeffs.iter().enumerate() {
            if k == m {
                let want = t[0][0] * u.coeffs[m][0] + t[0][1] * u.coeffs[m][1];
                assert!((val[0] - want).norm() < 1e-14);
            } else {
                assert_eq!(val, &[c(0.0, 0.0); 2]);
            }
        }
        let zero = apply_capacity(
            &cfg,
            &grid,
            &TangentialTrace::zeros(Face::Upper, grid.len()),
        )
        .unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let cfg = WaveConfig::new(
            2.3,
            0.3,
            0.4,
            Polarization::Te,
            2.0,
            2.5,
            0.5,
            1.2,
            1.5,
            1.2,
        )
        .unwrap();
        let grid = build_mode_grid(&cfg, 1, 1).unwrap();
        let u = TangentialTrace::zeros(Face::Upper, 3);
        assert!(matches!(
            apply_capacity(&cfg, &grid, &u),
            Err(HopeError::ShapeMismatch(_))
        ));
    }
}
