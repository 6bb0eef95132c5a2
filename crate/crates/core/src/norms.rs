//! Volume and trace norms of quasiperiodic fields.
//!
//! Volume norms use Parseval in `(x, y)` and Clenshaw-Curtis quadrature in `z`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::capacity::TangentialTrace;
use crate::envelope::EnvelopeField;
use crate::field::{curl_of, div_of, multiply, Discretization, ScalarField, VectorField};
use crate::wave::ModeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2: f64,
    pub hcurl: f64,
    /// `H(div)` norm of `eps0 * k0^2 * u`.
    pub hdiv_eps: f64,
    pub x_norm: f64,
    /// `H^{-1/2}(div)` norms of the tangential traces at the upper and lower faces.
    pub hmh_div: [f64; 2],
    pub hmh_curl: [f64; 2],
}

/// Squared L2 norm of coefficient data with `nz` values per mode.
fn l2_sq_data(disc: &Discretization, data: &[C64]) -> f64 {
    let w = &disc.z.weights;
    let nz = disc.nz();
    let total: f64 = data
        .chunks(nz)
        .map(|c| c.iter().zip(w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>())
        .sum();
    total * disc.d_x * disc.d_y
}

pub fn l2_sq(disc: &Discretization, f: &VectorField) -> f64 {
    f.comps.iter().map(|c| l2_sq_data(disc, c)).sum()
}

pub fn l2_norm(disc: &Discretization, f: &VectorField) -> f64 {
    l2_sq(disc, f).sqrt()
}

pub fn scalar_l2_norm(disc: &Discretization, f: &ScalarField) -> f64 {
    l2_sq_data(disc, &f.data).sqrt()
}

pub fn hcurl_norm(disc: &Discretization, f: &VectorField) -> f64 {
    (l2_sq(disc, f) + l2_sq(disc, &curl_of(disc, f))).sqrt()
}

pub fn hdiv_norm(disc: &Discretization, f: &VectorField) -> f64 {
    (l2_sq(disc, f) + l2_sq_data(disc, &div_of(disc, f).data)).sqrt()
}

/// `||u||_X^2 = ||u||_{H(curl)}^2 + ||eps0 k0^2 u||_{H(div)}^2`.
pub fn x_norm(disc: &Discretization, f: &VectorField, env: &EnvelopeField, k0: f64) -> f64 {
    let (hc, hd) = x_parts(disc, f, env, k0);
    (hc * hc + hd * hd).sqrt()
}

fn x_parts(disc: &Discretization, f: &VectorField, env: &EnvelopeField, k0: f64) -> (f64, f64) {
    let scaled = multiply(disc, f, &env.eps0).scale(C64::new(k0 * k0, 0.0));
    (hcurl_norm(disc, f), hdiv_norm(disc, &scaled))
}

/// Tangential trace of a field at `z = h` (upper) or `z = -h` (lower).
pub fn face_trace(
    disc: &Discretization,
    f: &VectorField,
    face: crate::error::Face,
) -> TangentialTrace {
    let k = match face {
        crate::error::Face::Upper => 0,
        crate::error::Face::Lower => f.nz - 1,
    };
    TangentialTrace {
        face,
        coeffs: (0..disc.n_modes())
            .map(|m| [f.at(0, m, k), f.at(1, m, k)])
            .collect(),
    }
}

fn trace_weight(a: f64, b: f64) -> f64 {
    1.0 / (1.0 + a * a + b * b).sqrt()
}

pub fn hmh_div_norm(grid: &ModeGrid, d_x: f64, d_y: f64, u: &TangentialTrace) -> f64 {
    let s: f64 = u
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let (a, b) = grid.wavenumbers(m);
            trace_weight(a, b)
                * (c[0].norm_sqr() + c[1].norm_sqr() + (c[0] * a + c[1] * b).norm_sqr())
        })
        .sum();
    (d_x * d_y * s).sqrt()
}

pub fn hmh_curl_norm(grid: &ModeGrid, d_x: f64, d_y: f64, u: &TangentialTrace) -> f64 {
    let s: f64 = u
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let (a, b) = grid.wavenumbers(m);
            trace_weight(a, b)
                * (c[0].norm_sqr() + c[1].norm_sqr() + (c[1] * a - c[0] * b).norm_sqr())
        })
        .sum();
    (d_x * d_y * s).sqrt()
}

pub fn norms(disc: &Discretization, f: &VectorField, env: &EnvelopeField, k0: f64) -> NormReport {
    let l2 = l2_norm(disc, f);
    let (hcurl, hdiv_eps) = x_parts(disc, f, env, k0);
    let faces = [crate::error::Face::Upper, crate::error::Face::Lower];
    let traces = faces.map(|face| face_trace(disc, f, face));
    NormReport {
        l2,
        hcurl,
        hdiv_eps,
        x_norm: (hcurl * hcurl + hdiv_eps * hdiv_eps).sqrt(),
        hmh_div: [0, 1].map(|i| hmh_div_norm(&disc.modes, disc.d_x, disc.d_y, &traces[i])),
        hmh_curl: [0, 1].map(|i| hmh_curl_norm(&disc.modes, disc.d_x, disc.d_y, &traces[i])),
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Largest z-derivative order trusted before round-off dominates repeated differentiation.
pub const TRUSTED_Z_ORDER: usize = 4;

/// `|| d_x^r d_y^t d_z^s f / (r + t + s)! ||_X`.
pub fn scaled_derivative_norm(
    disc: &Discretization,
    f: &VectorField,
    r: usize,
    t: usize,
    s: usize,
    env: &EnvelopeField,
    k0: f64,
) -> f64 {
    if s > TRUSTED_Z_ORDER {
        log::warn!("z-derivative of order {s} exceeds the trusted order {TRUSTED_Z_ORDER}; expect round-off growth");
    }
    let nz = f.nz;
    let mut g = f.clone();
    for c in 0..3 {
        for (m, chunk) in g.comps[c].chunks_mut(nz).enumerate() {
            let (a, b) = disc.modes.wavenumbers(m);
            let mult = C64::new(0.0, a).powu(r as u32) * C64::new(0.0, b).powu(t as u32);
            chunk.iter_mut().for_each(|v| *v *= mult);
        }
        for _ in 0..s {
            g.comps[c] = disc.dz(&g.comps[c]);
        }
    }
    let g = g.scale(C64::new(1.0 / factorial(r + t + s), 0.0));
    x_norm(disc, &g, env, k0)
}

/// Geometric fit of the scaled x-derivative norms of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeFit {
    /// `|| d_x^r f / r! ||_X` for `r = 0..=r_max`.
    pub norms: Vec<f64>,
    /// Rate fitted to `(r + 1)^2 norms[r]` over the first `fit_len` values.
    pub eta_fit: f64,
    /// `(r + 1)^2 norms[r] / eta_fit^r`.
    pub corrected: Vec<f64>,
}

impl DerivativeFit {
    /// Largest corrected value past the fit window relative to the largest inside it.
    pub fn excess(&self, fit_len: usize) -> f64 {
        let inside = self.corrected[..fit_len]
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        let beyond = self.corrected[fit_len..]
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        beyond / inside
    }
}

pub fn x_derivative_fit(
    disc: &Discretization,
    f: &VectorField,
    env: &EnvelopeField,
    k0: f64,
    r_max: usize,
    fit_len: usize,
) -> DerivativeFit {
    let norms: Vec<f64> = (0..=r_max)
        .map(|r| scaled_derivative_norm(disc, f, r, 0, 0, env, k0))
        .collect();
    let logs: Vec<(f64, f64)> = norms
        .iter()
        .take(fit_len.min(r_max + 1))
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(r, v)| (r as f64, (((r + 1) * (r + 1)) as f64 * v).ln()))
        .collect();
    let eta_fit = if logs.len() >= 2 {
        let n = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxy / sxx).exp()
    } else {
        1.0
    };
    let corrected = norms
        .iter()
        .enumerate()
        .map(|(r, v)| ((r + 1) * (r + 1)) as f64 * v / eta_fit.powi(r as i32))
        .collect();
    DerivativeFit {
        norms,
        eta_fit,
        corrected,
    }
}

/// `(sum_j (s+1)^2 / ((s-j+1)^2 (j+1)^2), sum_j sum_r (s+1)^2 / ((s-j+1)^2 (j-r+1)^2 (r+1)^2))`.
pub fn convolution_sums(s: usize) -> (f64, f64) {
    let inner: Vec<f64> = (0..=s).map(inner_sum).collect();
    convolution_from_inner(s, &inner)
}

fn inner_sum(j: usize) -> f64 {
    (0..=j)
        .map(|r| 1.0 / (((j - r + 1) * (j - r + 1)) as f64 * ((r + 1) * (r + 1)) as f64))
        .sum()
}

fn convolution_from_inner(s: usize, inner: &[f64]) -> (f64, f64) {
    let s1 = ((s + 1) * (s + 1)) as f64;
    let mut single = 0.0;
    let mut double = 0.0;
    for (j, c) in inner.iter().enumerate().take(s + 1) {
        let d = ((s - j + 1) * (s - j + 1)) as f64;
        single += s1 / (d * ((j + 1) * (j + 1)) as f64);
        double += s1 * c / d;
    }
    (single, double)
}

/// Both sums for every `s` in `0..=s_max`, sharing the inner sums.
pub fn convolution_sweep(s_max: usize) -> Vec<(f64, f64)> {
    let inner: Vec<f64> = (0..=s_max).map(inner_sum).collect();
    (0..=s_max)
        .map(|s| convolution_from_inner(s, &inner))
        .collect()
}
