//! Permittivity envelopes: `eps(x, y, z) = eps_bar * (1 - rho * E(x, y, z))`.
//!
//! The base permittivity about which a series is expanded is
//! `eps0 = eps_bar * (1 - rho0 * E)`; the recursion needs `E / eps0`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{HopeError, Result};
use crate::field::{Discretization, Multiplier};
use crate::wave::WaveConfig;
use crate::zgrid::Front;

/// Smooth indicator of `[a, b]` with sharpness `w`.
pub fn phi_ab(z: f64, a: f64, b: f64, w: f64) -> f64 {
    0.5 * ((w * (z - a)).tanh() - (w * (z - b)).tanh())
}

/// Scalar envelope evaluated at a physical point.
pub type EnvelopeFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct CustomEnvelope {
    pub f: Arc<EnvelopeFn>,
    /// Sharp transitions in z, used to refine the vertical grid.
    pub fronts: Vec<Front>,
    pub varies_x: bool,
    pub varies_y: bool,
}

impl fmt::Debug for CustomEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomEnvelope")
            .field("fronts", &self.fronts)
            .field("varies_x", &self.varies_x)
            .field("varies_y", &self.varies_y)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum EnvelopeKind {
    Constant {
        value: f64,
    },
    /// `amplitude * phi_ab(z, a, b, w)`.
    Laminar {
        a: f64,
        b: f64,
        w: f64,
        amplitude: f64,
    },
    /// Slab `|z| < d` of permittivity `eps_prime` cut by a gap `|x| < g`.
    SlabGap {
        eps_prime: f64,
        d: f64,
        g: f64,
        w: f64,
    },
    Sampled(Arc<SampledEnvelope>),
    Custom(CustomEnvelope),
}

#[derive(Debug, Clone)]
pub struct EnvelopeSpec {
    pub kind: EnvelopeKind,
    pub rho0: f64,
}

/// Slab of permittivity `eps_prime` in `|z| < d`, interrupted by a gap of half-width `g` in x.
pub fn slab_with_gap(eps_prime: f64, d: f64, g: f64, w: f64) -> Result<EnvelopeSpec> {
    for (name, v) in [("d", d), ("g", g), ("w", w), ("eps_prime", eps_prime)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(HopeError::InvalidConfig(format!(
                "slab-with-gap: {name} must be positive, got {v}"
            )));
        }
    }
    Ok(EnvelopeSpec {
        kind: EnvelopeKind::SlabGap { eps_prime, d, g, w },
        rho0: 0.0,
    })
}

/// Laminar slab `|z| < d` of permittivity `eps_prime` embedded in `eps_bar`.
pub fn tanh_slab(eps_prime: f64, d: f64, w: f64, eps_bar: f64) -> Result<EnvelopeSpec> {
    if !(d > 0.0 && w > 0.0 && eps_bar > 0.0) {
        return Err(HopeError::InvalidConfig(
            "tanh slab needs d, w, eps_bar > 0".into(),
        ));
    }
    Ok(EnvelopeSpec {
        kind: EnvelopeKind::Laminar {
            a: -d,
            b: d,
            w,
            amplitude: (eps_bar - eps_prime) / eps_bar,
        },
        rho0: 0.0,
    })
}

fn wrap_centered(x: f64, period: f64) -> f64 {
    x - period * (x / period).round()
}

impl EnvelopeSpec {
    pub fn zero() -> Self {
        EnvelopeSpec {
            kind: EnvelopeKind::Constant { value: 0.0 },
            rho0: 0.0,
        }
    }

    pub fn with_rho0(mut self, rho0: f64) -> Self {
        self.rho0 = rho0;
        self
    }

    pub fn validate(&self, cfg: &WaveConfig) -> Result<()> {
        if !self.rho0.is_finite() {
            return Err(HopeError::InvalidConfig("rho0 must be finite".into()));
        }
        match &self.kind {
            EnvelopeKind::Constant { value } if !value.is_finite() => Err(
                HopeError::InvalidConfig("constant envelope must be finite".into()),
            ),
            EnvelopeKind::Laminar { a, b, w, amplitude } => {
                if !(a < b && *w > 0.0 && amplitude.is_finite()) {
                    Err(HopeError::InvalidConfig(format!(
                        "laminar envelope needs a < b and w > 0 (a={a}, b={b}, w={w})"
                    )))
                } else {
                    Ok(())
                }
            }
            EnvelopeKind::SlabGap { g, .. } if 2.0 * g >= cfg.d_x => {
                Err(HopeError::InvalidConfig(format!(
                    "gap of width {} does not fit in a cell of width {}",
                    2.0 * g,
                    cfg.d_x
                )))
            }
            EnvelopeKind::Sampled(s) => s.check_cell(cfg.d_x, cfg.d_y, cfg.h),
            _ => Ok(()),
        }
    }

    /// Envelope value at a physical point; x and y are reduced to the primary cell.
    pub fn value(&self, cfg: &WaveConfig, x: f64, y: f64, z: f64) -> f64 {
        match &self.kind {
            EnvelopeKind::Constant { value } => *value,
            EnvelopeKind::Laminar { a, b, w, amplitude } => amplitude * phi_ab(z, *a, *b, *w),
            EnvelopeKind::SlabGap { eps_prime, d, g, w } => {
                let xc = wrap_centered(x, cfg.d_x);
                (cfg.eps_bar - eps_prime) / cfg.eps_bar
                    * phi_ab(z, -d, *d, *w)
                    * (1.0 - phi_ab(xc, -g, *g, *w))
            }
            EnvelopeKind::Sampled(s) => s.value(cfg.d_x, cfg.d_y, x, y, z),
            EnvelopeKind::Custom(c) => (c.f)(x, y, z),
        }
    }

    /// Relative permittivity `eps_bar * (1 - rho * E)` at a point.
    pub fn permittivity(&self, cfg: &WaveConfig, rho: f64, x: f64, y: f64, z: f64) -> f64 {
        cfg.eps_bar * (1.0 - rho * self.value(cfg, x, y, z))
    }

    pub fn fronts(&self) -> Vec<Front> {
        match &self.kind {
            EnvelopeKind::Laminar { a, b, w, .. } => vec![
                Front {
                    center: *a,
                    width: 1.0 / w,
                },
                Front {
                    center: *b,
                    width: 1.0 / w,
                },
            ],
            EnvelopeKind::SlabGap { d, w, .. } => vec![
                Front {
                    center: -d,
                    width: 1.0 / w,
                },
                Front {
                    center: *d,
                    width: 1.0 / w,
                },
            ],
            EnvelopeKind::Custom(c) => c.fronts.clone(),
            _ => Vec::new(),
        }
    }

    pub fn varies_in(&self) -> (bool, bool) {
        match &self.kind {
            EnvelopeKind::Constant { .. } | EnvelopeKind::Laminar { .. } => (false, false),
            EnvelopeKind::SlabGap { .. } => (true, false),
            EnvelopeKind::Sampled(s) => (s.xs.len() > 1, s.ys.len() > 1),
            EnvelopeKind::Custom(c) => (c.varies_x, c.varies_y),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            EnvelopeKind::Constant { .. } => "constant",
            EnvelopeKind::Laminar { .. } => "laminar",
            EnvelopeKind::SlabGap { .. } => "slab-gap",
            EnvelopeKind::Sampled(_) => "sampled",
            EnvelopeKind::Custom(_) => "custom",
        }
    }
}

/// Envelope given on a tensor grid; periodic linear interpolation in x and y,
/// linear in z with constant extension past the outermost samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledEnvelope {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub zs: Vec<f64>,
    /// `values[(ix * ys.len() + iy) * zs.len() + iz]`.
    pub values: Vec<f64>,
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Parses `x,y,z,value` rows (header required, columns in any order, `#` comments).
pub fn parse_sampled_csv(text: &str) -> Result<SampledEnvelope> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| HopeError::Parse(format!("envelope header: {e}")))?
        .clone();
    if headers.is_empty() {
        return Err(HopeError::Parse("empty envelope file".into()));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
            .ok_or_else(|| HopeError::Parse(format!("envelope header lacks column '{name}'")))
    };
    let idx = [find("x")?, find("y")?, find("z")?, find("value")?];
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| HopeError::Parse(format!("envelope row: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut r = [0.0; 4];
        for (slot, &i) in r.iter_mut().zip(&idx) {
            *slot = record[i]
                .parse::<f64>()
                .map_err(|e| HopeError::Parse(format!("line {line}: {e}")))?;
            if !slot.is_finite() {
                return Err(HopeError::Parse(format!("line {line}: non-finite value")));
            }
        }
        rows.push(r);
    }
    if rows.is_empty() {
        return Err(HopeError::Parse("envelope file has no samples".into()));
    }
    let xs = sorted_unique(rows.iter().map(|r| r[0]).collect());
    let ys = sorted_unique(rows.iter().map(|r| r[1]).collect());
    let zs = sorted_unique(rows.iter().map(|r| r[2]).collect());
    let total = xs
        .len()
        .checked_mul(ys.len())
        .and_then(|v| v.checked_mul(zs.len()));
    if total != Some(rows.len()) {
        return Err(HopeError::Parse(format!(
            "samples do not form a full tensor grid ({} x {} x {} vs {} rows)",
            xs.len(),
            ys.len(),
            zs.len(),
            rows.len()
        )));
    }
    let pos = |v: &[f64], t: f64| v.binary_search_by(|a| a.total_cmp(&t)).unwrap_or(0);
    let mut values = vec![f64::NAN; rows.len()];
    for r in &rows {
        let i = (pos(&xs, r[0]) * ys.len() + pos(&ys, r[1])) * zs.len() + pos(&zs, r[2]);
        if !values[i].is_nan() {
            return Err(HopeError::Parse(format!(
                "duplicate sample at ({}, {}, {})",
                r[0], r[1], r[2]
            )));
        }
        values[i] = r[3];
    }
    Ok(SampledEnvelope { xs, ys, zs, values })
}

/// Bracketing indices and weight for periodic linear interpolation.
fn periodic_bracket(nodes: &[f64], period: f64, t: f64) -> (usize, usize, f64) {
    let n = nodes.len();
    if n == 1 {
        return (0, 0, 0.0);
    }
    let t = t.rem_euclid(period);
    let hi = nodes.partition_point(|&v| v <= t);
    let (i0, i1, x0, x1) = if hi == 0 {
        (n - 1, 0, nodes[n - 1] - period, nodes[0])
    } else if hi == n {
        (n - 1, 0, nodes[n - 1], nodes[0] + period)
    } else {
        (hi - 1, hi, nodes[hi - 1], nodes[hi])
    };
    (i0, i1, (t - x0) / (x1 - x0))
}

fn clamped_bracket(nodes: &[f64], t: f64) -> (usize, usize, f64) {
    let n = nodes.len();
    if n == 1 || t <= nodes[0] {
        return (0, 0, 0.0);
    }
    if t >= nodes[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let hi = nodes.partition_point(|&v| v <= t);
    (
        hi - 1,
        hi,
        (t - nodes[hi - 1]) / (nodes[hi] - nodes[hi - 1]),
    )
}

impl SampledEnvelope {
    fn check_cell(&self, d_x: f64, d_y: f64, h: f64) -> Result<()> {
        let inside = |v: &[f64], period: f64| v.iter().all(|&t| (0.0..period).contains(&t));
        if !inside(&self.xs, d_x) || !inside(&self.ys, d_y) {
            return Err(HopeError::InvalidConfig(
                "sampled envelope x/y coordinates must lie in [0, d_x) x [0, d_y)".into(),
            ));
        }
        if self.zs.iter().any(|z| z.abs() > h * (1.0 + 1e-12)) {
            return Err(HopeError::InvalidConfig(
                "sampled envelope z coordinates must lie in [-h, h]".into(),
            ));
        }
        Ok(())
    }

    pub fn value(&self, d_x: f64, d_y: f64, x: f64, y: f64, z: f64) -> f64 {
        let (x0, x1, tx) = periodic_bracket(&self.xs, d_x, x);
        let (y0, y1, ty) = periodic_bracket(&self.ys, d_y, y);
        let (z0, z1, tz) = clamped_bracket(&self.zs, z);
        let (ny, nz) = (self.ys.len(), self.zs.len());
        let at = |i: usize, j: usize, k: usize| self.values[(i * ny + j) * nz + k];
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let plane = |k: usize| {
            lerp(
                lerp(at(x0, y0, k), at(x0, y1, k), ty),
                lerp(at(x1, y0, k), at(x1, y1, k), ty),
                tx,
            )
        };
        lerp(plane(z0), plane(z1), tz)
    }
}

/// Sampling controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingOptions {
    /// Oversampling factor of the projection grid relative to the retained lattice.
    pub oversample: usize,
    /// Minimum projection grid size along any varying direction.
    pub min_samples: usize,
    /// `min |eps0|` must exceed `eps0_floor * eps_bar`.
    pub eps0_floor: f64,
    /// Tolerated mismatch between `eps0` at the faces and the exterior permittivities.
    pub limit_tol: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            oversample: 8,
            min_samples: 256,
            eps0_floor: 1e-6,
            limit_tol: 1e-6,
        }
    }
}

/// Envelope, base permittivity and their ratio resolved on a discretization.
#[derive(Debug, Clone)]
pub struct EnvelopeField {
    pub spec: EnvelopeSpec,
    pub eps_bar: f64,
    pub rho0: f64,
    /// Direct samples on the dealiasing grid, layout `[k][ix][iy]`.
    pub envelope_samples: Vec<f64>,
    pub eps0_samples: Vec<f64>,
    pub ratio_samples: Vec<f64>,
    /// Band-limited projections used by the solver.
    pub envelope: Multiplier,
    pub eps0: Multiplier,
    pub ratio: Multiplier,
    pub min_abs_eps0: f64,
    /// Largest `|eps0 - eps_exterior|` at the two faces.
    pub face_mismatch: f64,
    pub limit_tol: f64,
    /// Largest retained non-specular Fourier amplitude of the envelope.
    pub transverse_deviation: f64,
}

impl EnvelopeField {
    pub fn is_laminar(&self, tol: f64) -> bool {
        self.transverse_deviation <= tol
    }

    pub fn is_zero(&self) -> bool {
        self.envelope.constant == Some(0.0)
    }

    /// Constant-in-x,y envelope profile at the z-nodes (specular Fourier mode).
    pub fn laminar_profile(&self, disc: &Discretization) -> Vec<f64> {
        let nm = disc.n_modes();
        let m0 = disc.modes.flat(0, 0);
        (0..disc.nz())
            .map(|k| self.envelope.modes[k * nm + m0].re)
            .collect()
    }
}

fn projection_size(varies: bool, n_modes: usize, opts: &SamplingOptions) -> usize {
    if varies {
        (opts.oversample.max(2) * n_modes).max(opts.min_samples)
    } else {
        1
    }
}

/// Samples and band-limits the envelope, the base permittivity and their ratio.
pub fn sample_envelope(
    spec: &EnvelopeSpec,
    disc: &Discretization,
    cfg: &WaveConfig,
) -> Result<EnvelopeField> {
    sample_envelope_with(spec, disc, cfg, &SamplingOptions::default())
}

pub fn sample_envelope_with(
    spec: &EnvelopeSpec,
    disc: &Discretization,
    cfg: &WaveConfig,
    opts: &SamplingOptions,
) -> Result<EnvelopeField> {
    spec.validate(cfg)?;
    let nz = disc.nz();
    let eps_bar = cfg.eps_bar;
    let rho0 = spec.rho0;
    let floor = opts.eps0_floor * eps_bar;
    let (vx, vy) = spec.varies_in();
    let nx = projection_size(vx, disc.modes.np(), opts);
    let ny = projection_size(vy, disc.modes.nq(), opts);

    let mut env = vec![0.0; nz * nx * ny];
    env.par_chunks_mut(nx * ny)
        .enumerate()
        .for_each(|(k, plane)| {
            let z = disc.z.nodes[k];
            for ix in 0..nx {
                let x = ix as f64 * cfg.d_x / nx as f64;
                for iy in 0..ny {
                    let y = iy as f64 * cfg.d_y / ny as f64;
                    plane[ix * ny + iy] = spec.value(cfg, x, y, z);
                }
            }
        });
    if let Some(bad) = env.iter().find(|v| !v.is_finite()) {
        return Err(HopeError::InvalidConfig(format!(
            "envelope evaluates to {bad}"
        )));
    }
    let eps0: Vec<f64> = env.iter().map(|e| eps_bar * (1.0 - rho0 * e)).collect();
    let min_abs_eps0 = eps0.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if min_abs_eps0 <= floor {
        return Err(HopeError::PermittivityFloor {
            min: min_abs_eps0,
            floor,
        });
    }
    let ratio: Vec<f64> = env.iter().zip(&eps0).map(|(e, p)| e / p).collect();

    let uniform = |v: &[f64]| {
        let f = v[0];
        v.iter().all(|&x| x == f).then_some(f)
    };
    let project = |v: &[f64]| match uniform(v) {
        Some(c) => Multiplier::constant(disc, c),
        None => Multiplier::from_samples(disc, nx, ny, v),
    };
    let envelope = project(&env);
    let eps0_m = project(&eps0);
    let ratio_m = project(&ratio);

    let face_mismatch = {
        let top = &eps0[..nx * ny];
        let bot = &eps0[(nz - 1) * nx * ny..];
        let t = top
            .iter()
            .map(|v| (v - cfg.eps_u).abs())
            .fold(0.0, f64::max);
        let b = bot
            .iter()
            .map(|v| (v - cfg.eps_w).abs())
            .fold(0.0, f64::max);
        t.max(b)
    };
    if face_mismatch > opts.limit_tol {
        log::warn!(
            "base permittivity misses the exterior values at the faces by {face_mismatch:.3e} (limit_tol {:.1e})",
            opts.limit_tol
        );
    }
    let transverse_deviation = envelope.transverse_deviation(disc.n_modes(), disc.modes.flat(0, 0));

    let (mx, my) = disc.pad;
    let (px, py) = (disc.pad_x(), disc.pad_y());
    let mut envelope_samples = vec![0.0; nz * mx * my];
    envelope_samples
        .par_chunks_mut(mx * my)
        .enumerate()
        .for_each(|(k, plane)| {
            for ix in 0..mx {
                for iy in 0..my {
                    plane[ix * my + iy] = spec.value(cfg, px[ix], py[iy], disc.z.nodes[k]);
                }
            }
        });
    let eps0_samples: Vec<f64> = envelope_samples
        .iter()
        .map(|e| eps_bar * (1.0 - rho0 * e))
        .collect();
    let ratio_samples = envelope_samples
        .iter()
        .zip(&eps0_samples)
        .map(|(e, p)| e / p)
        .collect();

    Ok(EnvelopeField {
        spec: spec.clone(),
        eps_bar,
        rho0,
        envelope_samples,
        eps0_samples,
        ratio_samples,
        envelope,
        eps0: eps0_m,
        ratio: ratio_m,
        min_abs_eps0,
        face_mismatch,
        limit_tol: opts.limit_tol,
        transverse_deviation,
    })
}
