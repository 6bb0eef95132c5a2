//! Vector fields stored as quasiperiodic Fourier coefficients in `(x, y)`
//! times point values at the vertical collocation nodes.
//!
//! A field is `E(x, y, z) = sum_{p,q} u_{p,q}(z) exp(i alpha_p x + i beta_q y)`;
//! the stored coefficients are the `u_{p,q}` at each z-node, so the Bloch
//! phase `exp(i alpha x + i beta y)` is never sampled into the data.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{HopeError, Result};
use crate::wave::{ModeGrid, WaveConfig};
use crate::zgrid::ZGrid;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Everything needed to move between coefficient and physical space.
#[derive(Clone)]
pub struct Discretization {
    pub modes: ModeGrid,
    pub z: ZGrid,
    pub d_x: f64,
    pub d_y: f64,
    pub alpha0: f64,
    pub beta0: f64,
    /// Dealiasing grid used for pointwise products.
    pub pad: (usize, usize),
    pad_plans: [Arc<dyn Fft<f64>>; 4],
}

impl std::fmt::Debug for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Discretization")
            .field("modes", &(self.modes.np(), self.modes.nq()))
            .field("nz", &self.z.len())
            .field("pad", &self.pad)
            .finish()
    }
}

/// Smallest grid size with no aliasing of quadratic products into retained modes.
pub fn dealiased_size(n_modes: usize) -> usize {
    (3 * n_modes).div_ceil(2)
}

impl Discretization {
    pub fn new(cfg: &WaveConfig, modes: ModeGrid, z: ZGrid) -> Self {
        let pad = (dealiased_size(modes.np()), dealiased_size(modes.nq()));
        let mut planner = FftPlanner::new();
        let pad_plans = [
            planner.plan_fft_forward(pad.0),
            planner.plan_fft_inverse(pad.0),
            planner.plan_fft_forward(pad.1),
            planner.plan_fft_inverse(pad.1),
        ];
        Discretization {
            modes,
            z,
            d_x: cfg.d_x,
            d_y: cfg.d_y,
            alpha0: cfg.alpha(),
            beta0: cfg.beta(),
            pad,
            pad_plans,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn nz(&self) -> usize {
        self.z.len()
    }

    pub fn vector_zeros(&self) -> VectorField {
        VectorField::zeros(self.n_modes(), self.nz())
    }

    pub fn scalar_zeros(&self) -> ScalarField {
        ScalarField::zeros(self.n_modes(), self.nz())
    }

    /// Physical x-coordinates of the dealiasing grid.
    pub fn pad_x(&self) -> Vec<f64> {
        (0..self.pad.0)
            .map(|j| j as f64 * self.d_x / self.pad.0 as f64)
            .collect()
    }

    pub fn pad_y(&self) -> Vec<f64> {
        (0..self.pad.1)
            .map(|j| j as f64 * self.d_y / self.pad.1 as f64)
            .collect()
    }

    fn z_derivative(&self, data: &[C64]) -> Vec<C64> {
        let nz = self.nz();
        let mut out = vec![ZERO; data.len()];
        out.par_chunks_mut(nz)
            .zip(data.par_chunks(nz))
            .for_each(|(o, d)| o.copy_from_slice(&self.z.diff(d)));
        out
    }

    fn tangential_multiplier(&self, data: &[C64], along_x: bool) -> Vec<C64> {
        let nz = self.nz();
        let mut out = data.to_vec();
        out.par_chunks_mut(nz).enumerate().for_each(|(m, chunk)| {
            let (a, b) = self.modes.wavenumbers(m);
            let k = C64::new(0.0, if along_x { a } else { b });
            chunk.iter_mut().for_each(|v| *v *= k);
        });
        out
    }

    pub fn dx(&self, data: &[C64]) -> Vec<C64> {
        self.tangential_multiplier(data, true)
    }

    pub fn dy(&self, data: &[C64]) -> Vec<C64> {
        self.tangential_multiplier(data, false)
    }

    pub fn dz(&self, data: &[C64]) -> Vec<C64> {
        self.z_derivative(data)
    }
}

/// Three-component field, layout `data[c][m * nz + k]` for mode `m` and z-node `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub n_modes: usize,
    pub nz: usize,
    pub comps: [Vec<C64>; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub n_modes: usize,
    pub nz: usize,
    pub data: Vec<C64>,
}

impl ScalarField {
    pub fn zeros(n_modes: usize, nz: usize) -> Self {
        ScalarField {
            n_modes,
            nz,
            data: vec![ZERO; n_modes * nz],
        }
    }

    pub fn at(&self, m: usize, k: usize) -> C64 {
        self.data[m * self.nz + k]
    }
}

impl VectorField {
    pub fn zeros(n_modes: usize, nz: usize) -> Self {
        let v = vec![ZERO; n_modes * nz];
        VectorField {
            n_modes,
            nz,
            comps: [v.clone(), v.clone(), v],
        }
    }

    #[inline]
    pub fn idx(&self, m: usize, k: usize) -> usize {
        m * self.nz + k
    }

    pub fn at(&self, c: usize, m: usize, k: usize) -> C64 {
        self.comps[c][m * self.nz + k]
    }

    pub fn set(&mut self, c: usize, m: usize, k: usize, v: C64) {
        let i = self.idx(m, k);
        self.comps[c][i] = v;
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_modes == other.n_modes && self.nz == other.nz
    }

    pub fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(HopeError::ShapeMismatch(format!(
                "field ({} modes, {} nodes) vs ({} modes, {} nodes)",
                self.n_modes, self.nz, other.n_modes, other.nz
            )))
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        VectorField {
            n_modes: self.n_modes,
            nz: self.nz,
            comps: self
                .comps
                .clone()
                .map(|c| c.into_iter().map(|v| v * s).collect()),
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: C64, other: &Self) {
        debug_assert!(self.same_shape(other));
        for c in 0..3 {
            for (a, b) in self.comps[c].iter_mut().zip(&other.comps[c]) {
                *a += s * b;
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// All coefficients as one vector, component-major.
    pub fn flatten(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(3 * self.comps[0].len());
        for c in &self.comps {
            out.extend_from_slice(c);
        }
        out
    }

    pub fn from_flat(n_modes: usize, nz: usize, v: &[C64]) -> Self {
        let len = n_modes * nz;
        VectorField {
            n_modes,
            nz,
            comps: [
                v[..len].to_vec(),
                v[len..2 * len].to_vec(),
                v[2 * len..3 * len].to_vec(),
            ],
        }
    }
}

/// A real biperiodic function, band-limited to the retained lattice and
/// sampled on the dealiasing grid; multiplies fields without aliasing.
#[derive(Debug, Clone)]
pub struct Multiplier {
    pub pad: (usize, usize),
    pub nz: usize,
    /// `values[k * mx * my + ix * my + iy]`.
    pub values: Vec<f64>,
    /// Retained Fourier modes per z-node, `modes[k * n_modes + m]`.
    pub modes: Vec<C64>,
    /// Set when the function is the same constant everywhere.
    pub constant: Option<f64>,
}

impl Multiplier {
    pub fn constant(disc: &Discretization, value: f64) -> Self {
        let (mx, my) = disc.pad;
        let nm = disc.n_modes();
        let m0 = disc.modes.flat(0, 0);
        let mut modes = vec![ZERO; nm * disc.nz()];
        for k in 0..disc.nz() {
            modes[k * nm + m0] = C64::new(value, 0.0);
        }
        Multiplier {
            pad: disc.pad,
            nz: disc.nz(),
            values: vec![value; mx * my * disc.nz()],
            modes,
            constant: Some(value),
        }
    }

    /// Projects samples taken on an `nx x ny` periodic grid (per z-node,
    /// layout `[k][ix][iy]`) onto the retained lattice.
    pub fn from_samples(disc: &Discretization, nx: usize, ny: usize, samples: &[f64]) -> Self {
        let nz = disc.nz();
        let nm = disc.n_modes();
        let (mx, my) = disc.pad;
        let np = disc.modes.np();
        let nq = disc.modes.nq();
        let (pm, qm) = (disc.modes.p_max as i64, disc.modes.q_max as i64);
        let mut planner = FftPlanner::new();
        let fx = planner.plan_fft_forward(nx);
        let fy = planner.plan_fft_forward(ny);
        let per_z: Vec<(Vec<C64>, Vec<f64>)> = (0..nz)
            .into_par_iter()
            .map(|k| {
                let mut buf: Vec<C64> = samples[k * nx * ny..(k + 1) * nx * ny]
                    .iter()
                    .map(|&v| C64::new(v, 0.0))
                    .collect();
                fft2(&mut buf, nx, ny, fx.as_ref(), fy.as_ref());
                let norm = 1.0 / (nx * ny) as f64;
                let mut modes = vec![ZERO; nm];
                let mut pad = vec![ZERO; mx * my];
                for ip in 0..np {
                    for iq in 0..nq {
                        let p = ip as i64 - pm;
                        let q = iq as i64 - qm;
                        // modes the sampling grid cannot resolve stay zero
                        if 2 * p.unsigned_abs() as usize >= nx.max(2)
                            || 2 * q.unsigned_abs() as usize >= ny.max(2)
                        {
                            continue;
                        }
                        let src = wrap(p, nx) * ny + wrap(q, ny);
                        let c = buf[src] * norm;
                        modes[ip * nq + iq] = c;
                        pad[wrap(p, mx) * my + wrap(q, my)] = c;
                    }
                }
                fft2(
                    &mut pad,
                    mx,
                    my,
                    disc.pad_plans[1].as_ref(),
                    disc.pad_plans[3].as_ref(),
                );
                (modes, pad.into_iter().map(|v| v.re).collect())
            })
            .collect();
        let mut modes = Vec::with_capacity(nz * nm);
        let mut values = Vec::with_capacity(nz * mx * my);
        for (m, v) in per_z {
            modes.extend(m);
            values.extend(v);
        }
        let first = values.first().copied().unwrap_or(0.0);
        let constant = values.iter().all(|&v| v == first).then_some(first);
        Multiplier {
            pad: disc.pad,
            nz,
            values,
            modes,
            constant,
        }
    }

    /// True when the function does not vary in `x` or `y`.
    pub fn is_laminar(&self, n_modes: usize, m0: usize, tol: f64) -> bool {
        self.transverse_deviation(n_modes, m0) <= tol
    }

    pub fn transverse_deviation(&self, n_modes: usize, m0: usize) -> f64 {
        self.modes
            .chunks(n_modes)
            .flat_map(|c| {
                c.iter()
                    .enumerate()
                    .filter(move |(m, _)| *m != m0)
                    .map(|(_, v)| v.norm())
            })
            .fold(0.0, f64::max)
    }
}

#[inline]
fn wrap(p: i64, n: usize) -> usize {
    p.rem_euclid(n as i64) as usize
}

/// In-place 2-D transform of a row-major `nx x ny` buffer.
pub(crate) fn fft2(buf: &mut [C64], nx: usize, ny: usize, fx: &dyn Fft<f64>, fy: &dyn Fft<f64>) {
    fy.process(buf);
    let mut t = vec![ZERO; nx * ny];
    for ix in 0..nx {
        for iy in 0..ny {
            t[iy * nx + ix] = buf[ix * ny + iy];
        }
    }
    fx.process(&mut t);
    for ix in 0..nx {
        for iy in 0..ny {
            buf[ix * ny + iy] = t[iy * nx + ix];
        }
    }
}

/// Pointwise product of a real biperiodic function with each component of `f`,
/// truncated back to the retained lattice.
pub fn multiply(disc: &Discretization, f: &VectorField, mult: &Multiplier) -> VectorField {
    if let Some(c) = mult.constant {
        return f.scale(C64::new(c, 0.0));
    }
    let comps = [0, 1, 2].map(|c| multiply_data(disc, &f.comps[c], mult));
    VectorField {
        n_modes: f.n_modes,
        nz: f.nz,
        comps,
    }
}

pub fn multiply_scalar(disc: &Discretization, f: &ScalarField, mult: &Multiplier) -> ScalarField {
    if let Some(c) = mult.constant {
        return ScalarField {
            n_modes: f.n_modes,
            nz: f.nz,
            data: f.data.iter().map(|v| v * c).collect(),
        };
    }
    ScalarField {
        n_modes: f.n_modes,
        nz: f.nz,
        data: multiply_data(disc, &f.data, mult),
    }
}

fn multiply_data(disc: &Discretization, data: &[C64], mult: &Multiplier) -> Vec<C64> {
    let nz = disc.nz();
    let (mx, my) = disc.pad;
    let np = disc.modes.np();
    let nq = disc.modes.nq();
    let (pm, qm) = (disc.modes.p_max as i64, disc.modes.q_max as i64);
    let norm = 1.0 / (mx * my) as f64;
    let per_z: Vec<Vec<C64>> = (0..nz)
        .into_par_iter()
        .map(|k| {
            let mut buf = vec![ZERO; mx * my];
            for ip in 0..np {
                for iq in 0..nq {
                    let m = ip * nq + iq;
                    buf[wrap(ip as i64 - pm, mx) * my + wrap(iq as i64 - qm, my)] =
                        data[m * nz + k];
                }
            }
            fft2(
                &mut buf,
                mx,
                my,
                disc.pad_plans[1].as_ref(),
                disc.pad_plans[3].as_ref(),
            );
            let vals = &mult.values[k * mx * my..(k + 1) * mx * my];
            for (b, v) in buf.iter_mut().zip(vals) {
                *b *= *v;
            }
            fft2(
                &mut buf,
                mx,
                my,
                disc.pad_plans[0].as_ref(),
                disc.pad_plans[2].as_ref(),
            );
            let mut out = vec![ZERO; np * nq];
            for ip in 0..np {
                for iq in 0..nq {
                    out[ip * nq + iq] =
                        buf[wrap(ip as i64 - pm, mx) * my + wrap(iq as i64 - qm, my)] * norm;
                }
            }
            out
        })
        .collect();
    let mut out = vec![ZERO; data.len()];
    for (k, modes) in per_z.into_iter().enumerate() {
        for (m, v) in modes.into_iter().enumerate() {
            out[m * nz + k] = v;
        }
    }
    out
}

/// Physical samples of a field on an `nx x ny` grid over one cell, layout `[c][(ix * ny + iy) * nz + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub comps: [Vec<C64>; 3],
}

impl PhysicalField {
    pub fn x(&self, d_x: f64, ix: usize) -> f64 {
        ix as f64 * d_x / self.nx as f64
    }

    pub fn y(&self, d_y: f64, iy: usize) -> f64 {
        iy as f64 * d_y / self.ny as f64
    }

    pub fn at(&self, c: usize, ix: usize, iy: usize, k: usize) -> C64 {
        self.comps[c][(ix * self.ny + iy) * self.nz + k]
    }
}

fn check_physical_size(disc: &Discretization, nx: usize, ny: usize) -> Result<()> {
    if nx < disc.modes.np() || ny < disc.modes.nq() {
        return Err(HopeError::ShapeMismatch(format!(
            "physical grid {nx}x{ny} cannot hold {}x{} modes",
            disc.modes.np(),
            disc.modes.nq()
        )));
    }
    Ok(())
}

/// Evaluates the field (including its Bloch phase) on an `nx x ny x nz` grid.
pub fn to_physical(
    disc: &Discretization,
    f: &VectorField,
    nx: usize,
    ny: usize,
) -> Result<PhysicalField> {
    check_physical_size(disc, nx, ny)?;
    if f.n_modes != disc.n_modes() || f.nz != disc.nz() {
        return Err(HopeError::ShapeMismatch(
            "field does not match discretization".into(),
        ));
    }
    let nz = disc.nz();
    let np = disc.modes.np();
    let nq = disc.modes.nq();
    let (pm, qm) = (disc.modes.p_max as i64, disc.modes.q_max as i64);
    let mut planner = FftPlanner::new();
    let fx = planner.plan_fft_inverse(nx);
    let fy = planner.plan_fft_inverse(ny);
    let phase: Vec<C64> = (0..nx * ny)
        .map(|j| {
            let (ix, iy) = (j / ny, j % ny);
            let x = ix as f64 * disc.d_x / nx as f64;
            let y = iy as f64 * disc.d_y / ny as f64;
            C64::new(0.0, disc.alpha0 * x + disc.beta0 * y).exp()
        })
        .collect();
    let comps = [0, 1, 2].map(|c| {
        let per_z: Vec<Vec<C64>> = (0..nz)
            .into_par_iter()
            .map(|k| {
                let mut buf = vec![ZERO; nx * ny];
                for ip in 0..np {
                    for iq in 0..nq {
                        buf[wrap(ip as i64 - pm, nx) * ny + wrap(iq as i64 - qm, ny)] =
                            f.comps[c][(ip * nq + iq) * nz + k];
                    }
                }
                fft2(&mut buf, nx, ny, fx.as_ref(), fy.as_ref());
                buf.iter().zip(&phase).map(|(b, p)| b * p).collect()
            })
            .collect();
        let mut out = vec![ZERO; nx * ny * nz];
        for (k, vals) in per_z.into_iter().enumerate() {
            for (j, v) in vals.into_iter().enumerate() {
                out[j * nz + k] = v;
            }
        }
        out
    });
    Ok(PhysicalField { nx, ny, nz, comps })
}

/// Inverse of [`to_physical`]: strips the Bloch phase and keeps the retained lattice.
pub fn from_physical(disc: &Discretization, phys: &PhysicalField) -> Result<VectorField> {
    let (nx, ny, nz) = (phys.nx, phys.ny, phys.nz);
    check_physical_size(disc, nx, ny)?;
    if nz != disc.nz() {
        return Err(HopeError::ShapeMismatch(
            "physical field has wrong z resolution".into(),
        ));
    }
    let np = disc.modes.np();
    let nq = disc.modes.nq();
    let (pm, qm) = (disc.modes.p_max as i64, disc.modes.q_max as i64);
    let mut planner = FftPlanner::new();
    let fx = planner.plan_fft_forward(nx);
    let fy = planner.plan_fft_forward(ny);
    let norm = 1.0 / (nx * ny) as f64;
    let unphase: Vec<C64> = (0..nx * ny)
        .map(|j| {
            let (ix, iy) = (j / ny, j % ny);
            let x = ix as f64 * disc.d_x / nx as f64;
            let y = iy as f64 * disc.d_y / ny as f64;
            C64::new(0.0, -(disc.alpha0 * x + disc.beta0 * y)).exp()
        })
        .collect();
    let mut out = disc.vector_zeros();
    for c in 0..3 {
        let per_z: Vec<Vec<C64>> = (0..nz)
            .into_par_iter()
            .map(|k| {
                let mut buf: Vec<C64> = (0..nx * ny)
                    .map(|j| phys.comps[c][j * nz + k] * unphase[j])
                    .collect();
                fft2(&mut buf, nx, ny, fx.as_ref(), fy.as_ref());
                let mut modes = vec![ZERO; np * nq];
                for ip in 0..np {
                    for iq in 0..nq {
                        modes[ip * nq + iq] =
                            buf[wrap(ip as i64 - pm, nx) * ny + wrap(iq as i64 - qm, ny)] * norm;
                    }
                }
                modes
            })
            .collect();
        for (k, modes) in per_z.into_iter().enumerate() {
            for (m, v) in modes.into_iter().enumerate() {
                out.comps[c][m * nz + k] = v;
            }
        }
    }
    Ok(out)
}

pub fn curl_of(disc: &Discretization, f: &VectorField) -> VectorField {
    let [ex, ey, ez] = &f.comps;
    let (dz_x, dz_y) = (disc.dz(ex), disc.dz(ey));
    let sub = |a: Vec<C64>, b: Vec<C64>| -> Vec<C64> {
        a.into_iter().zip(b).map(|(a, b)| a - b).collect()
    };
    VectorField {
        n_modes: f.n_modes,
        nz: f.nz,
        comps: [
            sub(disc.dy(ez), dz_y),
            sub(dz_x, disc.dx(ez)),
            sub(disc.dx(ey), disc.dy(ex)),
        ],
    }
}

pub fn div_of(disc: &Discretization, f: &VectorField) -> ScalarField {
    let [ex, ey, ez] = &f.comps;
    let (a, b, c) = (disc.dx(ex), disc.dy(ey), disc.dz(ez));
    ScalarField {
        n_modes: f.n_modes,
        nz: f.nz,
        data: a
            .iter()
            .zip(&b)
            .zip(&c)
            .map(|((a, b), c)| a + b + c)
            .collect(),
    }
}

pub fn grad_of(disc: &Discretization, s: &ScalarField) -> VectorField {
    VectorField {
        n_modes: s.n_modes,
        nz: s.nz,
        comps: [disc.dx(&s.data), disc.dy(&s.data), disc.dz(&s.data)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{build_mode_grid, Polarization};

    fn disc(p: usize, q: usize, nz: usize) -> Discretization {
        let cfg = WaveConfig::new(
            2.0,
            0.35,
            0.6,
            Polarization::Te,
            2.0,
            1.5,
            0.5,
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        let modes = build_mode_grid(&cfg, p, q).unwrap();
        Discretization::new(&cfg, modes, ZGrid::uniform(0.5, nz).unwrap())
    }

    fn pseudo_random_field(d: &Discretization, seed: u64) -> VectorField {
        let mut s = seed;
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut f = d.vector_zeros();
        for c in 0..3 {
            for v in f.comps[c].iter_mut() {
                *v = C64::new(next(), next());
            }
        }
        f
    }

    #[test]
    fn physical_round_trip() {
        let d = disc(3, 2, 7);
        let f = pseudo_random_field(&d, 7);
        let phys = to_physical(&d, &f, 9, 6).unwrap();
        let back = from_physical(&d, &phys).unwrap();
        assert!(back.sub(&f).max_abs() < 1e-13);
    }

    #[test]
    fn single_mode_is_a_plane_wave() {
        let d = disc(2, 1, 4);
        let mut f = d.vector_zeros();
        let m = d.modes.flat(1, -1);
        f.set(1, m, 2, C64::new(0.5, 0.25));
        let phys = to_physical(&d, &f, 8, 4).unwrap();
        let (a, b) = d.modes.wavenumbers(m);
        for ix in 0..8 {
            for iy in 0..4 {
                let x = phys.x(d.d_x, ix);
                let y = phys.y(d.d_y, iy);
                let want = C64::new(0.5, 0.25) * C64::new(0.0, a * x + b * y).exp();
                assert!((phys.at(1, ix, iy, 2) - want).norm() < 1e-14);
                assert_eq!(phys.at(0, ix, iy, 2), ZERO);
            }
        }
    }

    #[test]
    fn product_of_two_modes_lands_on_summed_index() {
        let d = disc(3, 3, 3);
        let mut f = d.vector_zeros();
        f.set(0, d.modes.flat(1, 0), 1, C64::new(2.0, 0.0));
        // real multiplier cos(2 pi y / d_y) = (e^{i..} + e^{-i..}) / 2
        let (nx, ny) = (8, 8);
        let mut samples = vec![0.0; d.nz() * nx * ny];
        for k in 0..d.nz() {
            for ix in 0..nx {
                for iy in 0..ny {
                    samples[k * nx * ny + ix * ny + iy] =
                        (2.0 * std::f64::consts::PI * iy as f64 / ny as f64).cos();
                }
            }
        }
        let mult = Multiplier::from_samples(&d, nx, ny, &samples);
        let g = multiply(&d, &f, &mult);
        assert!((g.at(0, d.modes.flat(1, 1), 1) - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((g.at(0, d.modes.flat(1, -1), 1) - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(g.at(0, d.modes.flat(1, 0), 1).norm() < 1e-14);
    }

    #[test]
    fn vector_identities() {
        let d = disc(2, 2, 32);
        // smooth field: entire z-profiles on every mode
        let mut s = d.scalar_zeros();
        let mut f = d.vector_zeros();
        for m in 0..d.n_modes() {
            for (k, &z) in d.z.nodes.iter().enumerate() {
                let w = 1.0 + m as f64 * 0.1;
                s.data[m * d.nz() + k] = C64::new((w * z).cos(), (0.5 * z).sin());
                f.comps[0][m * d.nz() + k] = C64::new(z * z, w * z).exp();
                f.comps[1][m * d.nz() + k] = C64::new((2.0 * z).sin(), 1.0);
                f.comps[2][m * d.nz() + k] = C64::new(0.0, w * z).exp();
            }
        }
        let cg = curl_of(&d, &grad_of(&d, &s));
        assert!(cg.max_abs() < 1e-10, "{}", cg.max_abs());
        let dc = div_of(&d, &curl_of(&d, &f));
        assert!(dc.data.iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-10);
    }

    #[test]
    fn curl_of_vertical_plane_wave() {
        let d = disc(2, 0, 8);
        let m = d.modes.flat(1, 0);
        let mut f = d.vector_zeros();
        for k in 0..d.nz() {
            f.set(2, m, k, C64::new(1.0, 0.0));
        }
        let c = curl_of(&d, &f);
        let (a, b) = d.modes.wavenumbers(m);
        for k in 0..d.nz() {
            assert!((c.at(0, m, k) - C64::new(0.0, b)).norm() < 1e-13);
            assert!((c.at(1, m, k) - C64::new(0.0, -a)).norm() < 1e-13);
            assert!(c.at(2, m, k).norm() < 1e-14);
        }
    }
}
