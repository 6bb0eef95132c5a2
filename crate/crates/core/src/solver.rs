//! One perturbation order: `curl curl E - eps_bar k0^2 E = eps_bar k0^2 W` in the
//! slab with transparent boundary rows at both faces.
//!
//! Substituting `div E = -div W` turns the curl-curl operator into three scalar
//! problems `-E'' + kappa^2 E = eps_bar k0^2 W + grad(div W)` per lattice mode,
//! coupled only through six boundary rows: two capacity rows and one
//! divergence-closure row on each face. Each scalar problem is solved by static
//! condensation of the element interiors, and the face values are fixed by a
//! 6x6 influence system.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::capacity::{capacity_multiplier, incident_trace_phi, Mat2, TangentialTrace};
use crate::envelope::EnvelopeField;
use crate::error::{Face, HopeError, Result};
use crate::field::{curl_of, div_of, multiply, Discretization, VectorField};
use crate::gmres::{gmres, GmresOptions, GmresReport};
use crate::norms::{hmh_div_norm, l2_norm, scalar_l2_norm};
use crate::wave::WaveConfig;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Reject a propagating mode when `|sin(2 gamma h)|` falls below this.
    pub res_guard: f64,
    /// Condition estimate above which a mode is declared singular.
    pub max_condition: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            res_guard: 1e-6,
            max_condition: 1e14,
        }
    }
}

/// Data of one order: source `W` and boundary data `Q` (upper), `R` (lower).
///
/// `W` is the recursion source scaled by `eps0 / eps_bar`; it equals the
/// physical source `F` whenever the base permittivity is constant.
#[derive(Debug, Clone)]
pub struct OrderProblem {
    pub source: VectorField,
    pub upper: TangentialTrace,
    pub lower: TangentialTrace,
    pub ell: usize,
}

impl OrderProblem {
    pub fn homogeneous(disc: &Discretization, source: VectorField, ell: usize) -> Self {
        OrderProblem {
            source,
            upper: TangentialTrace::zeros(Face::Upper, disc.n_modes()),
            lower: TangentialTrace::zeros(Face::Lower, disc.n_modes()),
            ell,
        }
    }

    /// Order-zero problem: no source, incident forcing on the upper face.
    pub fn incident(cfg: &WaveConfig, disc: &Discretization) -> Result<Self> {
        Ok(OrderProblem {
            source: disc.vector_zeros(),
            upper: incident_trace_phi(cfg, &disc.modes)?,
            lower: TangentialTrace::zeros(Face::Lower, disc.n_modes()),
            ell: 0,
        })
    }
}

fn cond1(m: &DMatrix<C64>) -> f64 {
    let norm1 = |a: &DMatrix<C64>| {
        (0..a.ncols())
            .map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match m.clone().try_inverse() {
        Some(inv) => norm1(m) * norm1(&inv),
        None => f64::INFINITY,
    }
}

/// Condensed interior of one element for one mode.
struct ElementFactor {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Interior response to unit values at the top and bottom endpoints.
    h_top: DVector<C64>,
    h_bot: DVector<C64>,
    /// Endpoint-derivative coefficients: `(top row, bottom row) x (top value, bottom value)`.
    t0: C64,
    tn: C64,
    b0: C64,
    bn: C64,
    cond: f64,
}

/// Element operators shared by every mode.
struct ElementOps {
    start: usize,
    d: DMatrix<f64>,
    d2: DMatrix<f64>,
}

/// Scalar two-point solver `-u'' + kappa^2 u = f` with Dirichlet ends, for one mode.
struct ScalarFactor {
    elements: Vec<ElementFactor>,
    interface: Option<nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
    phi_top: Vec<C64>,
    phi_bot: Vec<C64>,
    /// Face derivatives of the homogeneous solutions: `[d_top, d_bot]` of each.
    d_phi_top: [C64; 2],
    d_phi_bot: [C64; 2],
    cond: f64,
}

struct ScalarSolution {
    u: Vec<C64>,
    d_top: C64,
    d_bot: C64,
}

impl ScalarFactor {
    fn new(ops: &[ElementOps], n: usize, nz: usize, kappa2: C64) -> Self {
        let ni = n - 2;
        let elements: Vec<ElementFactor> = ops
            .iter()
            .map(|op| {
                let mut m = DMatrix::<C64>::zeros(ni, ni);
                for i in 0..ni {
                    for j in 0..ni {
                        m[(i, j)] = C64::new(-op.d2[(i + 1, j + 1)], 0.0);
                    }
                    m[(i, i)] += kappa2;
                }
                let c = cond1(&m);
                let lu = m.lu();
                let col = |j: usize| {
                    DVector::<C64>::from_iterator(
                        ni,
                        (1..n - 1).map(|i| C64::new(op.d2[(i, j)], 0.0)),
                    )
                };
                let mut h_top = col(0);
                let mut h_bot = col(n - 1);
                lu.solve_mut(&mut h_top);
                lu.solve_mut(&mut h_bot);
                let row_dot = |r: usize, v: &DVector<C64>| -> C64 {
                    (0..ni).map(|i| v[i] * op.d[(r, i + 1)]).sum()
                };
                let t0 = op.d[(0, 0)] + row_dot(0, &h_top);
                let tn = op.d[(0, n - 1)] + row_dot(0, &h_bot);
                let b0 = op.d[(n - 1, 0)] + row_dot(n - 1, &h_top);
                let bn = op.d[(n - 1, n - 1)] + row_dot(n - 1, &h_bot);
                ElementFactor {
                    lu,
                    h_top,
                    h_bot,
                    t0,
                    tn,
                    b0,
                    bn,
                    cond: c,
                }
            })
            .collect();
        let mut cond = elements.iter().map(|e| e.cond).fold(0.0, f64::max);
        let ne = elements.len();
        let interface = (ne > 1).then(|| {
            let mut k = DMatrix::<C64>::zeros(ne - 1, ne - 1);
            for e in 1..ne {
                let r = e - 1;
                k[(r, r)] = elements[e - 1].bn - elements[e].t0;
                if e >= 2 {
                    k[(r, r - 1)] = elements[e - 1].b0;
                }
                if e + 1 < ne {
                    k[(r, r + 1)] = -elements[e].tn;
                }
            }
            cond = cond.max(cond1(&k));
            k.lu()
        });
        let mut f = ScalarFactor {
            elements,
            interface,
            phi_top: Vec::new(),
            phi_bot: Vec::new(),
            d_phi_top: [ZERO; 2],
            d_phi_bot: [ZERO; 2],
            cond,
        };
        let zero = vec![ZERO; nz];
        let top = f.solve(ops, n, &zero, ONE, ZERO);
        let bot = f.solve(ops, n, &zero, ZERO, ONE);
        f.d_phi_top = [top.d_top, top.d_bot];
        f.d_phi_bot = [bot.d_top, bot.d_bot];
        f.phi_top = top.u;
        f.phi_bot = bot.u;
        f
    }

    fn solve(
        &self,
        ops: &[ElementOps],
        n: usize,
        rhs: &[C64],
        top: C64,
        bot: C64,
    ) -> ScalarSolution {
        let ne = self.elements.len();
        let ni = n - 2;
        let mut ys = Vec::with_capacity(ne);
        let mut tf = Vec::with_capacity(ne);
        let mut bf = Vec::with_capacity(ne);
        for (el, op) in self.elements.iter().zip(ops) {
            let mut y = DVector::<C64>::from_iterator(
                ni,
                rhs[op.start + 1..op.start + n - 1].iter().copied(),
            );
            el.lu.solve_mut(&mut y);
            tf.push((0..ni).map(|i| y[i] * op.d[(0, i + 1)]).sum::<C64>());
            bf.push((0..ni).map(|i| y[i] * op.d[(n - 1, i + 1)]).sum::<C64>());
            ys.push(y);
        }
        let mut v = vec![ZERO; ne + 1];
        v[0] = top;
        v[ne] = bot;
        if let Some(lu) = &self.interface {
            let mut r = DVector::<C64>::zeros(ne - 1);
            for e in 1..ne {
                r[e - 1] = tf[e] - bf[e - 1];
            }
            r[0] -= self.elements[0].b0 * top;
            r[ne - 2] += self.elements[ne - 1].tn * bot;
            lu.solve_mut(&mut r);
            for e in 1..ne {
                v[e] = r[e - 1];
            }
        }
        let nz = rhs.len();
        let mut u = vec![ZERO; nz];
        for (e, ((el, op), y)) in self.elements.iter().zip(ops).zip(&ys).enumerate() {
            u[op.start] = v[e];
            u[op.start + n - 1] = v[e + 1];
            for i in 0..ni {
                u[op.start + 1 + i] = y[i] + el.h_top[i] * v[e] + el.h_bot[i] * v[e + 1];
            }
        }
        let first = &self.elements[0];
        let last = &self.elements[ne - 1];
        ScalarSolution {
            u,
            d_top: first.t0 * v[0] + first.tn * v[1] + tf[0],
            d_bot: last.b0 * v[ne - 1] + last.bn * v[ne] + bf[ne - 1],
        }
    }
}

/// Per-mode boundary influence system.
struct ModeFactor {
    scalar: ScalarFactor,
    lu6: nalgebra::LU<C64, nalgebra::U6, nalgebra::U6>,
    row_scale: [f64; 6],
    cap_u: Mat2,
    cap_w: Mat2,
    condition: f64,
}

/// Factorized constant-coefficient solver for all modes of a discretization.
pub struct OrderSolver {
    pub disc: Arc<Discretization>,
    pub cfg: WaveConfig,
    pub opts: SolverOptions,
    ops: Vec<ElementOps>,
    modes: Vec<ModeFactor>,
}

impl std::fmt::Debug for OrderSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OrderSolver")
            .field("disc", &self.disc)
            .field("max_condition", &self.max_condition())
            .finish()
    }
}

/// Checks every mode with a real vertical wavenumber in the slab for `sin(2 gamma h) = 0`.
pub fn check_closure_resonance(
    cfg: &WaveConfig,
    disc: &Discretization,
    res_guard: f64,
) -> Result<()> {
    let k2 = cfg.eps_bar * cfg.k0 * cfg.k0;
    for m in 0..disc.n_modes() {
        let (a, b) = disc.modes.wavenumbers(m);
        let s = k2 - a * a - b * b;
        if s <= 0.0 {
            continue;
        }
        let phase = 2.0 * s.sqrt() * cfg.h;
        // a vanishing phase is not a resonance: the closure problem then has only the trivial solution
        if phase > std::f64::consts::FRAC_PI_2 && phase.sin().abs() < res_guard {
            let (p, q) = disc.modes.index(m);
            return Err(HopeError::ClosureResonance {
                p,
                q,
                sin_abs: phase.sin().abs(),
                phase,
            });
        }
    }
    Ok(())
}

impl OrderSolver {
    pub fn new(cfg: &WaveConfig, disc: Arc<Discretization>) -> Result<Self> {
        Self::with_options(cfg, disc, SolverOptions::default())
    }

    pub fn with_options(
        cfg: &WaveConfig,
        disc: Arc<Discretization>,
        opts: SolverOptions,
    ) -> Result<Self> {
        cfg.validate()?;
        check_closure_resonance(cfg, &disc, opts.res_guard)?;
        let z = &disc.z;
        let n = z.nodes_per_element();
        let ops: Vec<ElementOps> = (0..z.elements.len())
            .map(|e| {
                let d = DMatrix::from_row_slice(n, n, &z.element_diff(e));
                let d2 = &d * &d;
                ElementOps {
                    start: z.elements[e].start,
                    d,
                    d2,
                }
            })
            .collect();
        let k2 = cfg.eps_bar * cfg.k0 * cfg.k0;
        let nz = disc.nz();
        let iwm = C64::new(0.0, cfg.omega_mu());
        let modes: Vec<ModeFactor> = (0..disc.n_modes())
            .into_par_iter()
            .map(|m| -> Result<ModeFactor> {
                let (a, b) = disc.modes.wavenumbers(m);
                let scalar = ScalarFactor::new(&ops, n, nz, C64::new(a * a + b * b - k2, 0.0));
                let scale = |t: Mat2| t.map(|row| row.map(|v| v * iwm));
                let cap_u = scale(capacity_multiplier(Face::Upper, m, cfg, &disc.modes)?);
                let cap_w = scale(capacity_multiplier(Face::Lower, m, cfg, &disc.modes)?);
                let [dtt, dbt] = scalar.d_phi_top;
                let [dtb, dbb] = scalar.d_phi_bot;
                let ia = C64::new(0.0, a);
                let ib = C64::new(0.0, b);
                #[rustfmt::skip]
                let rows: [[C64; 6]; 6] = [
                    [dtt - cap_u[0][0], -cap_u[0][1], -ia, dtb, ZERO, ZERO],
                    [-cap_u[1][0], dtt - cap_u[1][1], -ib, ZERO, dtb, ZERO],
                    [ia, ib, dtt, ZERO, ZERO, dtb],
                    [-dbt, ZERO, ZERO, -dbb - cap_w[0][0], -cap_w[0][1], ia],
                    [ZERO, -dbt, ZERO, -cap_w[1][0], -dbb - cap_w[1][1], ib],
                    [ZERO, ZERO, dbt, ia, ib, dbb],
                ];
                let mut row_scale = [1.0; 6];
                let mut mat = Matrix6::<C64>::zeros();
                for (i, row) in rows.iter().enumerate() {
                    let mx = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    row_scale[i] = if mx > 0.0 { 1.0 / mx } else { 1.0 };
                    for (j, v) in row.iter().enumerate() {
                        mat[(i, j)] = v * row_scale[i];
                    }
                }
                let c6 = cond1(&DMatrix::from_iterator(6, 6, mat.iter().copied()));
                let condition = c6.max(scalar.cond);
                if !(condition <= opts.max_condition) {
                    let (p, q) = disc.modes.index(m);
                    return Err(HopeError::SingularMode { p, q, condition });
                }
                Ok(ModeFactor {
                    scalar,
                    lu6: mat.lu(),
                    row_scale,
                    cap_u,
                    cap_w,
                    condition,
                })
            })
            .collect::<Result<_>>()?;
        Ok(OrderSolver {
            disc,
            cfg: *cfg,
            opts,
            ops,
            modes,
        })
    }

    /// Largest per-mode condition estimate and its lattice index.
    pub fn max_condition(&self) -> (f64, (i64, i64)) {
        let (m, c) = self
            .modes
            .iter()
            .enumerate()
            .map(|(m, f)| (m, f.condition))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        (c, self.disc.modes.index(m))
    }

    pub fn conditions(&self) -> Vec<f64> {
        self.modes.iter().map(|f| f.condition).collect()
    }

    fn check(&self, prob: &OrderProblem) -> Result<()> {
        let nm = self.disc.n_modes();
        if prob.source.n_modes != nm || prob.source.nz != self.disc.nz() {
            return Err(HopeError::ShapeMismatch(
                "order source does not match the discretization".into(),
            ));
        }
        if prob.upper.face != Face::Upper || prob.lower.face != Face::Lower {
            return Err(HopeError::ShapeMismatch(
                "boundary data on the wrong face".into(),
            ));
        }
        if prob.upper.coeffs.len() != nm || prob.lower.coeffs.len() != nm {
            return Err(HopeError::ShapeMismatch(
                "boundary data mode count differs from the grid".into(),
            ));
        }
        Ok(())
    }

    /// Solves one order.
    pub fn solve(&self, prob: &OrderProblem) -> Result<VectorField> {
        self.check(prob)?;
        let disc = &*self.disc;
        let nz = disc.nz();
        let n = disc.z.nodes_per_element();
        let k2 = self.cfg.eps_bar * self.cfg.k0 * self.cfg.k0;
        let w = &prob.source;
        let per_mode: Vec<[Vec<C64>; 3]> = (0..disc.n_modes())
            .into_par_iter()
            .map(|m| {
                let f = &self.modes[m];
                let (a, b) = disc.modes.wavenumbers(m);
                let ia = C64::new(0.0, a);
                let ib = C64::new(0.0, b);
                let wc: [&[C64]; 3] = [0, 1, 2].map(|c| &w.comps[c][m * nz..(m + 1) * nz]);
                let dwz = disc.z.diff(wc[2]);
                let div: Vec<C64> = (0..nz)
                    .map(|k| ia * wc[0][k] + ib * wc[1][k] + dwz[k])
                    .collect();
                let ddiv = disc.z.diff(&div);
                let rhs: [Vec<C64>; 3] = [
                    (0..nz).map(|k| k2 * wc[0][k] + ia * div[k]).collect(),
                    (0..nz).map(|k| k2 * wc[1][k] + ib * div[k]).collect(),
                    (0..nz).map(|k| k2 * wc[2][k] + ddiv[k]).collect(),
                ];
                let part = rhs.map(|r| f.scalar.solve(&self.ops, n, &r, ZERO, ZERO));
                let q = prob.upper.coeffs[m];
                let r = prob.lower.coeffs[m];
                let raw = [
                    q[0] - part[0].d_top,
                    q[1] - part[1].d_top,
                    -div[0] - part[2].d_top,
                    r[0] + part[0].d_bot,
                    r[1] + part[1].d_bot,
                    -div[nz - 1] - part[2].d_bot,
                ];
                let mut sol =
                    Vector6::<C64>::from_iterator((0..6).map(|i| raw[i] * f.row_scale[i]));
                f.lu6.solve_mut(&mut sol);
                let mut out = part.map(|p| p.u);
                for (c, u) in out.iter_mut().enumerate() {
                    let (top, bot) = (sol[c], sol[c + 3]);
                    for k in 0..nz {
                        u[k] += top * f.scalar.phi_top[k] + bot * f.scalar.phi_bot[k];
                    }
                }
                out
            })
            .collect();
        let mut e = disc.vector_zeros();
        for (m, comps) in per_mode.into_iter().enumerate() {
            for (c, u) in comps.into_iter().enumerate() {
                e.comps[c][m * nz..(m + 1) * nz].copy_from_slice(&u);
            }
        }
        Ok(e)
    }

    /// Applies the boundary operators `B_u E` and `B_w E` to a field.
    pub fn boundary_data(&self, e: &VectorField) -> (TangentialTrace, TangentialTrace) {
        let disc = &*self.disc;
        let nz = disc.nz();
        let top = disc.z.top_derivative();
        let bot = disc.z.bottom_derivative();
        let deriv =
            |fun: &[(usize, f64)], c: &[C64]| -> C64 { fun.iter().map(|&(j, w)| c[j] * w).sum() };
        let mut up = TangentialTrace::zeros(Face::Upper, disc.n_modes());
        let mut lo = TangentialTrace::zeros(Face::Lower, disc.n_modes());
        for m in 0..disc.n_modes() {
            let (a, b) = disc.modes.wavenumbers(m);
            let ia = C64::new(0.0, a);
            let ib = C64::new(0.0, b);
            let s: [&[C64]; 3] = [0, 1, 2].map(|c| &e.comps[c][m * nz..(m + 1) * nz]);
            let f = &self.modes[m];
            let (ex, ey, ez) = (s[0][0], s[1][0], s[2][0]);
            let dx = deriv(&top, s[0]);
            let dy = deriv(&top, s[1]);
            up.coeffs[m] = [
                dx - ia * ez - (f.cap_u[0][0] * ex + f.cap_u[0][1] * ey),
                dy - ib * ez - (f.cap_u[1][0] * ex + f.cap_u[1][1] * ey),
            ];
            let l = nz - 1;
            let (ex, ey, ez) = (s[0][l], s[1][l], s[2][l]);
            let dx = deriv(&bot, s[0]);
            let dy = deriv(&bot, s[1]);
            lo.coeffs[m] = [
                -(dx - ia * ez) - (f.cap_w[0][0] * ex + f.cap_w[0][1] * ey),
                -(dy - ib * ez) - (f.cap_w[1][0] * ex + f.cap_w[1][1] * ey),
            ];
        }
        (up, lo)
    }
}

/// Recursion source `F = -eps_bar * (E / eps0) * E_prev`.
pub fn assemble_rhs(
    disc: &Discretization,
    e_prev: &VectorField,
    env: &EnvelopeField,
) -> Result<VectorField> {
    if e_prev.n_modes != disc.n_modes() || e_prev.nz != disc.nz() {
        return Err(HopeError::ShapeMismatch(
            "previous order does not match the discretization".into(),
        ));
    }
    if !env.min_abs_eps0.is_finite() || env.min_abs_eps0 <= 0.0 {
        return Err(HopeError::PermittivityFloor {
            min: env.min_abs_eps0,
            floor: 0.0,
        });
    }
    Ok(multiply(disc, e_prev, &env.ratio).scale(C64::new(-env.eps_bar, 0.0)))
}

/// Scaled recursion source `W = (eps0 / eps_bar) F = -E * E_prev`.
pub fn scaled_rhs(disc: &Discretization, e_prev: &VectorField, env: &EnvelopeField) -> VectorField {
    multiply(disc, e_prev, &env.envelope).scale(C64::new(-1.0, 0.0))
}

/// Residual of one order, split into its interior and boundary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    /// L2 norm of `curl curl E - eps0 k0^2 E - eps_bar k0^2 W`.
    pub interior: f64,
    /// `H^{-1/2}(div)` norms of `B_u E - Q` and `B_w E - R`.
    pub upper: f64,
    pub lower: f64,
    /// Size of the data the residual is measured against.
    pub scale: f64,
}

impl Residual {
    pub fn total(&self) -> f64 {
        self.interior + self.upper + self.lower
    }

    /// Total residual relative to the data; absolute when the data vanish.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.total() / self.scale
        } else {
            self.total()
        }
    }
}

pub fn residual_parts(
    solver: &OrderSolver,
    e: &VectorField,
    prob: &OrderProblem,
    env: &EnvelopeField,
) -> Result<Residual> {
    solver.check(prob)?;
    e.check_shape(&prob.source)?;
    let disc = &*solver.disc;
    let cfg = &solver.cfg;
    let k2 = cfg.k0 * cfg.k0;
    let cc = curl_of(disc, &curl_of(disc, e));
    let eps_e = multiply(disc, e, &env.eps0).scale(C64::new(k2, 0.0));
    let src = prob.source.scale(C64::new(cfg.eps_bar * k2, 0.0));
    let interior = l2_norm(disc, &cc.sub(&eps_e).sub(&src));
    let (bu, bw) = solver.boundary_data(e);
    let neg = C64::new(-1.0, 0.0);
    let du = bu.add(&prob.upper.scale(neg))?;
    let dw = bw.add(&prob.lower.scale(neg))?;
    let trace = |t: &TangentialTrace| hmh_div_norm(&disc.modes, disc.d_x, disc.d_y, t);
    Ok(Residual {
        interior,
        upper: trace(&du),
        lower: trace(&dw),
        scale: l2_norm(disc, &src) + trace(&prob.upper) + trace(&prob.lower),
    })
}

/// Relative residual of the order equations; see [`Residual::relative`].
pub fn residual_of(
    solver: &OrderSolver,
    e: &VectorField,
    prob: &OrderProblem,
    env: &EnvelopeField,
) -> Result<f64> {
    Ok(residual_parts(solver, e, prob, env)?.relative())
}

/// L2 norm of `div(E + W)`, which the closure rows drive to zero.
pub fn divergence_defect(disc: &Discretization, e: &VectorField, source: &VectorField) -> f64 {
    scalar_l2_norm(disc, &div_of(disc, &e.add(source)))
}

/// Iteration used for a non-constant base permittivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseIteration {
    /// `E <- S(W) - rho0 S0(E * E)`; converges only for small `|rho0|`.
    FixedPoint,
    /// GMRES on `(I + rho0 S0 E) E = S(W)`.
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterConfig {
    pub method: BaseIteration,
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for IterConfig {
    fn default() -> Self {
        IterConfig {
            method: BaseIteration::Krylov,
            tol: 1e-10,
            max_iter: 200,
            restart: 60,
        }
    }
}

/// Solves the order problem about a non-constant base `eps0 = eps_bar (1 - rho0 E)`.
pub fn solve_base_variable(
    solver: &OrderSolver,
    env: &EnvelopeField,
    prob: &OrderProblem,
    iter: &IterConfig,
) -> Result<(VectorField, GmresReport)> {
    let rhs = solver.solve(prob)?;
    if env.rho0 == 0.0 || env.is_zero() {
        return Ok((
            rhs,
            GmresReport {
                iterations: 1,
                history: vec![0.0],
            },
        ));
    }
    solve_shifted(solver, env, env.rho0, &rhs, iter)
}

/// Solves `(I + shift * S0 E) E = rhs`, where `S0` is the constant-base solve with zero boundary data.
pub fn solve_shifted(
    solver: &OrderSolver,
    env: &EnvelopeField,
    shift: f64,
    rhs: &VectorField,
    iter: &IterConfig,
) -> Result<(VectorField, GmresReport)> {
    let disc = &*solver.disc;
    let (nm, nz) = (disc.n_modes(), disc.nz());
    let s0 = |v: &VectorField| -> Result<VectorField> {
        let src = multiply(disc, v, &env.envelope);
        solver.solve(&OrderProblem::homogeneous(disc, src, 0))
    };
    match iter.method {
        BaseIteration::Krylov => {
            let apply = |x: &[C64]| -> Result<Vec<C64>> {
                let v = VectorField::from_flat(nm, nz, x);
                let mut out = v.clone();
                out.axpy(C64::new(shift, 0.0), &s0(&v)?);
                Ok(out.flatten())
            };
            let opts = GmresOptions {
                tol: iter.tol,
                max_iter: iter.max_iter,
                restart: iter.restart,
            };
            let b = rhs.flatten();
            let (x, rep) = gmres(apply, &b, Some(b.clone()), &opts)?;
            Ok((VectorField::from_flat(nm, nz, &x), rep))
        }
        BaseIteration::FixedPoint => {
            let mut e = rhs.clone();
            let mut history = Vec::new();
            for it in 1..=iter.max_iter {
                let mut next = rhs.clone();
                next.axpy(C64::new(-shift, 0.0), &s0(&e)?);
                let upd = crate::gmres::norm(&next.sub(&e).flatten())
                    / crate::gmres::norm(&next.flatten()).max(f64::MIN_POSITIVE);
                history.push(upd);
                e = next;
                if !upd.is_finite() {
                    break;
                }
                if upd < iter.tol {
                    return Ok((
                        e,
                        GmresReport {
                            iterations: it,
                            history,
                        },
                    ));
                }
            }
            Err(HopeError::NonConvergence {
                iterations: history.len(),
                last: history.last().copied().unwrap_or(f64::NAN),
                history,
            })
        }
    }
}
