//! Incident plane wave and the truncated quasiperiodic mode lattice.
//!
//! Units are nondimensional with `c0 = mu0 = eps0 = 1`, so the free-space
//! wavenumber `k0` equals the angular frequency and `omega * mu0 = k0`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Face, HopeError, Result};

/// Default absolute threshold on `|gamma|` below which a mode is a Wood anomaly.
pub const WOOD_TOL: f64 = 1e-8;

const TRANSVERSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveConfig {
    pub k0: f64,
    pub theta: f64,
    pub phi_inc: f64,
    /// Complex polarization amplitude `A`, transverse to `kappa` and of unit length.
    pub amplitude: [C64; 3],
    pub d_x: f64,
    pub d_y: f64,
    pub h: f64,
    pub eps_u: f64,
    pub eps_w: f64,
    pub eps_bar: f64,
}

/// Polarization relative to the plane of incidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Polarization {
    /// Electric field perpendicular to the plane of incidence.
    Te,
    /// Electric field in the plane of incidence.
    Tm,
    Custom([C64; 3]),
}

/// Real orthonormal pair `(s, p)` spanning the plane transverse to the incidence direction.
pub fn transverse_basis(theta: f64, phi_inc: f64) -> ([f64; 3], [f64; 3]) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi_inc.sin_cos();
    ([-sp, cp, 0.0], [ct * cp, ct * sp, st])
}

impl WaveConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        k0: f64,
        theta: f64,
        phi_inc: f64,
        polarization: Polarization,
        d_x: f64,
        d_y: f64,
        h: f64,
        eps_u: f64,
        eps_w: f64,
        eps_bar: f64,
    ) -> Result<Self> {
        let (s, p) = transverse_basis(theta, phi_inc);
        let amplitude = match polarization {
            Polarization::Te => s.map(|v| C64::new(v, 0.0)),
            Polarization::Tm => p.map(|v| C64::new(v, 0.0)),
            Polarization::Custom(a) => a,
        };
        let cfg = WaveConfig {
            k0,
            theta,
            phi_inc,
            amplitude,
            d_x,
            d_y,
            h,
            eps_u,
            eps_w,
            eps_bar,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HopeError::InvalidConfig(msg));
        let finite = [
            self.k0,
            self.theta,
            self.phi_inc,
            self.d_x,
            self.d_y,
            self.h,
            self.eps_u,
            self.eps_w,
            self.eps_bar,
        ]
        .iter()
        .all(|v| v.is_finite())
            && self
                .amplitude
                .iter()
                .all(|a| a.re.is_finite() && a.im.is_finite());
        if !finite {
            return bad("non-finite wave parameter".into());
        }
        if self.k0 <= 0.0 {
            return bad(format!("k0 must be positive, got {}", self.k0));
        }
        if self.eps_u <= 0.0 || self.eps_w <= 0.0 || self.eps_bar <= 0.0 {
            return bad("eps_u, eps_w and eps_bar must be positive".into());
        }
        if self.d_x <= 0.0 || self.d_y <= 0.0 || self.h <= 0.0 {
            return bad("periods and slab half-height must be positive".into());
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.theta) {
            return bad(format!("theta must lie in [0, pi/2), got {}", self.theta));
        }
        let norm: f64 = self
            .amplitude
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if (norm - 1.0).abs() > TRANSVERSE_TOL {
            return bad(format!("|A| must be 1, got {norm}"));
        }
        let kappa = self.kappa();
        let kn = kappa.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dot: C64 = (0..3).map(|i| self.amplitude[i] * kappa[i]).sum();
        if dot.norm() > TRANSVERSE_TOL * kn {
            return bad(format!(
                "A is not transverse to kappa: |A.kappa| = {:.3e}",
                dot.norm()
            ));
        }
        Ok(())
    }

    pub fn omega_mu(&self) -> f64 {
        self.k0
    }

    pub fn k_upper(&self) -> f64 {
        self.eps_u.sqrt() * self.k0
    }

    pub fn alpha(&self) -> f64 {
        self.k_upper() * self.theta.sin() * self.phi_inc.cos()
    }

    pub fn beta(&self) -> f64 {
        self.k_upper() * self.theta.sin() * self.phi_inc.sin()
    }

    /// Vertical wavenumber of the incident wave, `k_u cos(theta)`.
    pub fn gamma_inc(&self) -> f64 {
        self.k_upper() * self.theta.cos()
    }

    /// Incidence wave vector `(alpha, beta, -gamma_u)`.
    pub fn kappa(&self) -> [f64; 3] {
        [self.alpha(), self.beta(), -self.gamma_inc()]
    }

    /// Incident magnetic amplitude `B = kappa x A / (omega mu0)`.
    pub fn magnetic_amplitude(&self) -> [C64; 3] {
        let k = self.kappa();
        let a = self.amplitude;
        let s = 1.0 / self.omega_mu();
        [
            (a[2] * k[1] - a[1] * k[2]) * s,
            (a[0] * k[2] - a[2] * k[0]) * s,
            (a[1] * k[0] - a[0] * k[1]) * s,
        ]
    }
}

/// `A exp(i alpha x + i beta y - i gamma_u z)`.
pub fn incident_field_at(cfg: &WaveConfig, x: f64, y: f64, z: f64) -> [C64; 3] {
    let phase = C64::new(0.0, cfg.alpha() * x + cfg.beta() * y - cfg.gamma_inc() * z).exp();
    cfg.amplitude.map(|a| a * phase)
}

/// Branch of `sqrt(eps k0^2 - a^2 - b^2)` with nonnegative imaginary part.
pub fn vertical_wavenumber(eps: f64, k0: f64, a: f64, b: f64) -> C64 {
    let s = eps * k0 * k0 - a * a - b * b;
    if s >= 0.0 {
        C64::new(s.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-s).sqrt())
    }
}

/// Rectangular lattice `[-P, P] x [-Q, Q]` of quasiperiodic wavenumbers.
#[derive(Debug, Clone)]
pub struct ModeGrid {
    pub p_max: usize,
    pub q_max: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Row-major over `(p, q)`; see [`ModeGrid::flat`].
    pub gamma_u: Vec<C64>,
    pub gamma_w: Vec<C64>,
    pub propagating_u: Vec<usize>,
    pub propagating_w: Vec<usize>,
}

impl ModeGrid {
    pub fn np(&self) -> usize {
        2 * self.p_max + 1
    }

    pub fn nq(&self) -> usize {
        2 * self.q_max + 1
    }

    pub fn len(&self) -> usize {
        self.np() * self.nq()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of lattice point `(p, q)`.
    pub fn flat(&self, p: i64, q: i64) -> usize {
        let ip = (p + self.p_max as i64) as usize;
        let iq = (q + self.q_max as i64) as usize;
        ip * self.nq() + iq
    }

    /// Lattice indices `(p, q)` of a flat index.
    pub fn index(&self, m: usize) -> (i64, i64) {
        let ip = m / self.nq();
        let iq = m % self.nq();
        (ip as i64 - self.p_max as i64, iq as i64 - self.q_max as i64)
    }

    /// `(alpha_p, beta_q)` of a flat index.
    pub fn wavenumbers(&self, m: usize) -> (f64, f64) {
        (self.alpha[m / self.nq()], self.beta[m % self.nq()])
    }

    pub fn gamma(&self, face: Face, m: usize) -> C64 {
        match face {
            Face::Upper => self.gamma_u[m],
            Face::Lower => self.gamma_w[m],
        }
    }

    /// Smallest `|gamma|` over both exterior half-spaces.
    pub fn wood_margin(&self) -> f64 {
        self.gamma_u
            .iter()
            .chain(&self.gamma_w)
            .map(|g| g.norm())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn build_mode_grid(cfg: &WaveConfig, p_max: usize, q_max: usize) -> Result<ModeGrid> {
    build_mode_grid_with_tol(cfg, p_max, q_max, WOOD_TOL)
}

pub fn build_mode_grid_with_tol(
    cfg: &WaveConfig,
    p_max: usize,
    q_max: usize,
    wood_tol: f64,
) -> Result<ModeGrid> {
    cfg.validate()?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let alpha: Vec<f64> = (-(p_max as i64)..=p_max as i64)
        .map(|p| cfg.alpha() + two_pi / cfg.d_x * p as f64)
        .collect();
    let beta: Vec<f64> = (-(q_max as i64)..=q_max as i64)
        .map(|q| cfg.beta() + two_pi / cfg.d_y * q as f64)
        .collect();
    let nq = beta.len();
    let mut gamma_u = Vec::with_capacity(alpha.len() * nq);
    let mut gamma_w = Vec::with_capacity(alpha.len() * nq);
    let mut propagating_u = Vec::new();
    let mut propagating_w = Vec::new();
    for (ip, &a) in alpha.iter().enumerate() {
        for (iq, &b) in beta.iter().enumerate() {
            let m = ip * nq + iq;
            let p = ip as i64 - p_max as i64;
            let q = iq as i64 - q_max as i64;
            for (face, eps, gammas, props) in [
                (Face::Upper, cfg.eps_u, &mut gamma_u, &mut propagating_u),
                (Face::Lower, cfg.eps_w, &mut gamma_w, &mut propagating_w),
            ] {
                let g = vertical_wavenumber(eps, cfg.k0, a, b);
                if g.norm() < wood_tol {
                    return Err(HopeError::WoodAnomaly {
                        p,
                        q,
                        face,
                        gamma_abs: g.norm(),
                    });
                }
                if g.im == 0.0 {
                    props.push(m);
                }
                gammas.push(g);
            }
        }
    }
    Ok(ModeGrid {
        p_max,
        q_max,
        alpha,
        beta,
        gamma_u,
        gamma_w,
        propagating_u,
        propagating_w,
    })
}
