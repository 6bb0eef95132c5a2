//! The perturbation recursion, its summation, and diagnostics of the series.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::EnvelopeField;
use crate::error::{HopeError, Result};
use crate::field::{Discretization, VectorField};
use crate::norms::x_norm;
use crate::pade::pade;
use crate::solver::{
    residual_of, scaled_rhs, solve_shifted, IterConfig, OrderProblem, OrderSolver,
};
use crate::wave::WaveConfig;

/// Taylor coefficients `E_0 .. E_L` of the field in `delta = rho - rho0`.
#[derive(Debug, Clone)]
pub struct TaylorSeries {
    pub orders: Vec<VectorField>,
    pub xnorms: Vec<f64>,
    /// Relative residual of each order's equations.
    pub residuals: Vec<f64>,
    pub cfg: WaveConfig,
    pub rho0: f64,
    pub p_max: usize,
    pub q_max: usize,
    pub nz: usize,
    pub envelope_kind: String,
}

impl TaylorSeries {
    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn l_max(&self) -> usize {
        self.orders.len().saturating_sub(1)
    }
}

/// Runs the recursion up to order `l_max`.
pub fn compute_expansion(
    solver: &OrderSolver,
    env: &EnvelopeField,
    l_max: usize,
    iter: &IterConfig,
) -> Result<TaylorSeries> {
    let disc = &*solver.disc;
    let cfg = &solver.cfg;
    let mut orders: Vec<VectorField> = Vec::with_capacity(l_max + 1);
    let mut xnorms = Vec::with_capacity(l_max + 1);
    let mut residuals = Vec::with_capacity(l_max + 1);
    for ell in 0..=l_max {
        let prob = match orders.last() {
            None => OrderProblem::incident(cfg, disc)?,
            Some(prev) => OrderProblem::homogeneous(disc, scaled_rhs(disc, prev, env), ell),
        };
        let e = if ell > 0 && env.is_zero() {
            disc.vector_zeros()
        } else {
            let base = solver.solve(&prob)?;
            if env.rho0 == 0.0 || env.is_zero() {
                base
            } else {
                solve_shifted(solver, env, env.rho0, &base, iter)?.0
            }
        };
        let xn = x_norm(disc, &e, env, cfg.k0);
        if !xn.is_finite() {
            return Err(HopeError::Overflow(ell));
        }
        residuals.push(residual_of(solver, &e, &prob, env)?);
        log::debug!("order {ell}: |E|_X = {xn:.6e}");
        xnorms.push(xn);
        orders.push(e);
    }
    Ok(TaylorSeries {
        orders,
        xnorms,
        residuals,
        cfg: *cfg,
        rho0: env.rho0,
        p_max: disc.modes.p_max,
        q_max: disc.modes.q_max,
        nz: disc.nz(),
        envelope_kind: env.spec.kind_name().to_string(),
    })
}

/// Partial sum `sum_{l <= L} E_l delta^l`.
pub fn taylor_sum(series: &TaylorSeries, delta: f64, l: usize) -> Result<VectorField> {
    if l >= series.len() {
        return Err(HopeError::DegenerateSeries(format!(
            "partial sum to order {l} needs {} orders, have {}",
            l + 1,
            series.len()
        )));
    }
    let mut acc = series.orders[l].clone();
    for e in series.orders[..l].iter().rev() {
        acc = acc.scale(C64::new(delta, 0.0));
        acc.axpy(C64::new(1.0, 0.0), e);
    }
    Ok(acc)
}

/// Relative size below which a coefficient sequence counts as round-off and is summed by Taylor.
const NEGLIGIBLE: f64 = 1e-13;

/// Denominator cancellation ratio below which a Pade value is reported as near a pole.
pub const POLE_FLAG: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleFlag {
    pub component: usize,
    pub p: i64,
    pub q: i64,
    pub node: usize,
    pub den_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct PadeSum {
    pub field: VectorField,
    pub flags: Vec<PoleFlag>,
    /// Sequences evaluated by Taylor because they were negligible or the denominator was degenerate.
    pub taylor_fallbacks: usize,
}

/// `[L/M]` Pade approximant of each scalar coefficient sequence, evaluated at `delta`.
pub fn pade_sum(series: &TaylorSeries, delta: f64, l: usize, m: usize) -> Result<PadeSum> {
    let need = l + m + 1;
    if need > series.len() {
        return Err(HopeError::DegenerateSeries(format!(
            "[{l}/{m}] approximant needs {need} orders, have {}",
            series.len()
        )));
    }
    let first = &series.orders[0];
    let (nm, nz) = (first.n_modes, first.nz);
    let len = nm * nz;
    let scale: Vec<f64> = series.orders[..need].iter().map(|e| e.max_abs()).collect();
    let np_q = 2 * series.q_max + 1;
    let x = C64::new(delta, 0.0);
    let results: Vec<Vec<(C64, Option<PoleFlag>, bool)>> = (0..3)
        .map(|c| {
            (0..len)
                .into_par_iter()
                .map(|i| {
                    let seq: Vec<C64> = series.orders[..need]
                        .iter()
                        .map(|e| e.comps[c][i])
                        .collect();
                    let negligible = seq
                        .iter()
                        .zip(&scale)
                        .all(|(v, s)| v.norm() <= NEGLIGIBLE * s);
                    if negligible {
                        let t = seq
                            .iter()
                            .rev()
                            .fold(C64::new(0.0, 0.0), |acc, v| acc * x + v);
                        return Ok((t, None, true));
                    }
                    let p = pade(&seq, l, m)?;
                    let v = p.eval(x);
                    let flag = (v.den_ratio < POLE_FLAG).then(|| {
                        let mode = i / nz;
                        PoleFlag {
                            component: c,
                            p: (mode / np_q) as i64 - series.p_max as i64,
                            q: (mode % np_q) as i64 - series.q_max as i64,
                            node: i % nz,
                            den_ratio: v.den_ratio,
                        }
                    });
                    Ok((v.value, flag, p.den_degree() < m))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut field = VectorField::zeros(nm, nz);
    let mut flags = Vec::new();
    let mut taylor_fallbacks = 0;
    for (c, comp) in results.into_iter().enumerate() {
        for (i, (v, flag, fell_back)) in comp.into_iter().enumerate() {
            field.comps[c][i] = v;
            flags.extend(flag);
            taylor_fallbacks += fell_back as usize;
        }
    }
    if !flags.is_empty() {
        log::warn!(
            "{} Pade values sit near a pole at delta = {delta}",
            flags.len()
        );
    }
    Ok(PadeSum {
        field,
        flags,
        taylor_fallbacks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthMethod {
    /// Least-squares slope of `log |E_l|` against `l`.
    Ratio,
    /// Largest `|E_l|^(1/l)` in the window.
    Root,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub b_hat: f64,
    pub k_hat: f64,
    /// Inclusive order range used.
    pub window: (usize, usize),
    pub method: GrowthMethod,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits `|E_l|_X ~ K B^l` over the orders `window.0 ..= window.1`.
pub fn estimate_growth(
    xnorms: &[f64],
    window: (usize, usize),
    method: GrowthMethod,
) -> Result<GrowthEstimate> {
    let (lo, hi) = window;
    if hi < lo + 2 || hi >= xnorms.len() {
        return Err(HopeError::InvalidConfig(format!(
            "growth window {lo}..={hi} needs at least 3 orders inside 0..{}",
            xnorms.len()
        )));
    }
    let vals = &xnorms[lo..=hi];
    if vals.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(HopeError::DegenerateSeries(format!(
            "series norms vanish or are not finite in orders {lo}..={hi}"
        )));
    }
    let (b_hat, k_hat) = match method {
        GrowthMethod::Ratio => {
            let xs: Vec<f64> = (lo..=hi).map(|l| l as f64).collect();
            let ys: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
            let (s, i) = least_squares(&xs, &ys);
            (s.exp(), i.exp())
        }
        GrowthMethod::Root => {
            let b = (lo.max(1)..=hi)
                .map(|l| xnorms[l].powf(1.0 / l as f64))
                .fold(0.0, f64::max);
            let k = (lo..=hi)
                .map(|l| xnorms[l] / b.powi(l as i32))
                .fold(0.0, f64::max);
            (b, k)
        }
    };
    Ok(GrowthEstimate {
        b_hat,
        k_hat,
        window,
        method,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub deltas: Vec<f64>,
    pub ls: Vec<usize>,
    /// `errors[i][j]` is the X-norm error at `deltas[i]`, `ls[j]`.
    pub errors: Vec<Vec<f64>>,
    /// Least-squares slope of `ln err` against `L` per delta (`NaN` when undefined).
    pub slopes: Vec<f64>,
    /// `ln(B_hat |delta|)` per delta.
    pub predicted: Vec<f64>,
    pub b_hat: f64,
    pub reference: String,
}

/// Errors of the Taylor partial sums against a reference field at each delta.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study<F>(
    series: &TaylorSeries,
    disc: &Discretization,
    env: &EnvelopeField,
    deltas: &[f64],
    ls: &[usize],
    growth: &GrowthEstimate,
    reference_label: &str,
    reference: F,
) -> Result<ErrorTable>
where
    F: Fn(f64) -> Result<VectorField>,
{
    let k0 = series.cfg.k0;
    let mut errors = Vec::with_capacity(deltas.len());
    let mut slopes = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let row: Vec<f64> = if d == 0.0 {
            vec![0.0; ls.len()]
        } else {
            let r = reference(d)?;
            ls.iter()
                .map(|&l| Ok(x_norm(disc, &taylor_sum(series, d, l)?.sub(&r), env, k0)))
                .collect::<Result<_>>()?
        };
        let pts: Vec<(f64, f64)> = ls
            .iter()
            .zip(&row)
            .filter(|(_, e)| **e > 0.0)
            .map(|(&l, e)| (l as f64, e.ln()))
            .collect();
        let slope = if pts.len() >= 2 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            least_squares(&xs, &ys).0
        } else {
            f64::NAN
        };
        slopes.push(slope);
        errors.push(row);
    }
    Ok(ErrorTable {
        deltas: deltas.to_vec(),
        ls: ls.to_vec(),
        errors,
        slopes,
        predicted: deltas
            .iter()
            .map(|d| (growth.b_hat * d.abs()).ln())
            .collect(),
        b_hat: growth.b_hat,
        reference: reference_label.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderEfficiency {
    pub p: i64,
    pub q: i64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Efficiencies {
    pub reflected: Vec<OrderEfficiency>,
    pub transmitted: Vec<OrderEfficiency>,
    pub total_reflected: f64,
    pub total_transmitted: f64,
    /// `1 - sum R - sum T`.
    pub energy_defect: f64,
}

impl Efficiencies {
    pub fn specular_reflectance(&self) -> f64 {
        self.reflected
            .iter()
            .find(|o| o.p == 0 && o.q == 0)
            .map(|o| o.efficiency)
            .unwrap_or(0.0)
    }
}

/// Efficiencies of the propagating orders from the total field inside the slab.
pub fn efficiencies(cfg: &WaveConfig, disc: &Discretization, field: &VectorField) -> Efficiencies {
    let nz = disc.nz();
    let m0 = disc.modes.flat(0, 0);
    let g_inc = cfg.gamma_inc();
    let inc_phase = C64::new(0.0, -g_inc * cfg.h).exp();
    let mut reflected = Vec::new();
    let mut transmitted = Vec::new();
    let power = |ux: C64, uy: C64, uz: C64| ux.norm_sqr() + uy.norm_sqr() + uz.norm_sqr();
    for &m in &disc.modes.propagating_u {
        let (a, b) = disc.modes.wavenumbers(m);
        let g = disc.modes.gamma_u[m].re;
        let mut ux = field.at(0, m, 0);
        let mut uy = field.at(1, m, 0);
        if m == m0 {
            ux -= cfg.amplitude[0] * inc_phase;
            uy -= cfg.amplitude[1] * inc_phase;
        }
        let uz = -(ux * a + uy * b) / g;
        let (p, q) = disc.modes.index(m);
        reflected.push(OrderEfficiency {
            p,
            q,
            efficiency: g * power(ux, uy, uz) / g_inc,
        });
    }
    for &m in &disc.modes.propagating_w {
        let (a, b) = disc.modes.wavenumbers(m);
        let g = disc.modes.gamma_w[m].re;
        let ux = field.at(0, m, nz - 1);
        let uy = field.at(1, m, nz - 1);
        let uz = (ux * a + uy * b) / g;
        let (p, q) = disc.modes.index(m);
        transmitted.push(OrderEfficiency {
            p,
            q,
            efficiency: g * power(ux, uy, uz) / g_inc,
        });
    }
    let total_reflected: f64 = reflected.iter().map(|o| o.efficiency).sum();
    let total_transmitted: f64 = transmitted.iter().map(|o| o.efficiency).sum();
    Efficiencies {
        reflected,
        transmitted,
        total_reflected,
        total_transmitted,
        energy_defect: 1.0 - total_reflected - total_transmitted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(values: &[f64]) -> TaylorSeries {
        let orders = values
            .iter()
            .map(|&v| {
                let mut f = VectorField::zeros(1, 2);
                f.comps[0][0] = C64::new(v, 0.0);
                f.comps[2][1] = C64::new(0.0, -2.0 * v);
                f
            })
            .collect();
        let cfg = WaveConfig::new(
            1.0,
            0.0,
            0.0,
            crate::wave::Polarization::Te,
            1.0,
            1.0,
            0.5,
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        TaylorSeries {
            orders,
            xnorms: values.to_vec(),
            residuals: vec![0.0; values.len()],
            cfg,
            rho0: 0.0,
            p_max: 0,
            q_max: 0,
            nz: 2,
            envelope_kind: "synthetic".into(),
        }
    }

    #[test]
    fn geometric_partial_sums() {
        let vals: Vec<f64> = (0..20).map(|l| 3.0 * 0.5f64.powi(l)).collect();
        let s = synthetic(&vals);
        let d = 0.8;
        for l in [0, 1, 5, 19] {
            let got = taylor_sum(&s, d, l).unwrap().comps[0][0].re;
            let r: f64 = 0.5 * d;
            let want = 3.0 * (1.0 - r.powi(l as i32 + 1)) / (1.0 - r);
            assert!((got - want).abs() < 1e-14, "{l}");
        }
        assert_eq!(taylor_sum(&s, 0.0, 7).unwrap(), s.orders[0]);
        let one = taylor_sum(&s, 0.3, 1).unwrap();
        assert!((one.comps[0][0].re - (3.0 + 0.3 * 1.5)).abs() < 1e-15);
    }

    #[test]
    fn pade_continues_past_radius() {
        let vals: Vec<f64> = (0..13).map(|l| 2f64.powi(l)).collect();
        let s = synthetic(&vals);
        let p = pade_sum(&s, 0.75, 1, 1).unwrap();
        assert!((p.field.comps[0][0] - C64::new(-2.0, 0.0)).norm() < 1e-13);
        assert!((p.field.comps[2][1] - C64::new(0.0, 4.0)).norm() < 1e-13);
        assert!(p.flags.is_empty());
        assert!(pade_sum(&s, 0.75, 6, 7).is_err());
    }

    #[test]
    fn growth_of_exact_geometric_data() {
        let vals: Vec<f64> = (0..13).map(|l| 0.7 * 1.9f64.powi(l)).collect();
        let g = estimate_growth(&vals, (2, 12), GrowthMethod::Ratio).unwrap();
        assert!((g.b_hat - 1.9).abs() < 1e-12);
        assert!((g.k_hat - 0.7).abs() < 1e-10);
        let zero = [1.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            estimate_growth(&zero, (1, 3), GrowthMethod::Ratio),
            Err(HopeError::DegenerateSeries(_))
        ));
        assert!(estimate_growth(&vals, (2, 3), GrowthMethod::Ratio).is_err());
    }
}
