//! Restarted GMRES for complex linear systems given as a matrix-free operator.

use num_complex::Complex64 as C64;

use crate::error::{HopeError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Stop when `|b - A x| <= tol * |b|`.
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            tol: 1e-10,
            max_iter: 200,
            restart: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresReport {
    pub iterations: usize,
    /// Relative residual after each inner iteration.
    pub history: Vec<f64>,
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solves `A x = b` starting from `x0`.
pub fn gmres<F>(
    apply: F,
    b: &[C64],
    x0: Option<Vec<C64>>,
    opts: &GmresOptions,
) -> Result<(Vec<C64>, GmresReport)>
where
    F: Fn(&[C64]) -> Result<Vec<C64>>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = x0.unwrap_or_else(|| vec![C64::new(0.0, 0.0); n]);
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return Ok((
            vec![C64::new(0.0, 0.0); n],
            GmresReport {
                iterations: 0,
                history,
            },
        ));
    }
    let mut iterations = 0;
    let restart = opts.restart.max(1);
    loop {
        let ax = apply(&x)?;
        let r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol {
            history.push(rel);
            return Ok((
                x,
                GmresReport {
                    iterations,
                    history,
                },
            ));
        }
        if iterations >= opts.max_iter {
            return Err(HopeError::NonConvergence {
                iterations,
                last: rel,
                history,
            });
        }
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<C64>> = Vec::new();
        let mut cs: Vec<C64> = Vec::new();
        let mut sn: Vec<C64> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut k = 0;
        while k < restart && iterations < opts.max_iter {
            let mut w = apply(&basis[k])?;
            let mut col = vec![C64::new(0.0, 0.0); k + 2];
            // modified Gram-Schmidt, applied twice for orthogonality
            for _ in 0..2 {
                for (j, v) in basis.iter().enumerate() {
                    let hij = dot(v, &w);
                    col[j] += hij;
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= hij * vi;
                    }
                }
            }
            let wn = norm(&w);
            col[k + 1] = C64::new(wn, 0.0);
            for j in 0..k {
                let t = cs[j] * col[j] + sn[j] * col[j + 1];
                col[j + 1] = -sn[j].conj() * col[j] + cs[j].conj() * col[j + 1];
                col[j] = t;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let r = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
            } else {
                (a.conj() / r, bb.conj() / r)
            };
            col[k] = c * a + s * bb;
            col[k + 1] = C64::new(0.0, 0.0);
            g.push(-s.conj() * g[k]);
            g[k] *= c;
            cs.push(c);
            sn.push(s);
            hess.push(col);
            iterations += 1;
            k += 1;
            let rel = g[k].norm() / bnorm;
            history.push(rel);
            if rel <= opts.tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution on the triangular factor
        let mut y = vec![C64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= hess[j][i] * y[j];
            }
            y[i] = acc / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
    }
}
