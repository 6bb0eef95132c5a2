//! Scalar Pade approximants of truncated power series.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{HopeError, Result};

/// Relative pivot size below which the denominator system is treated as rank deficient.
const RANK_TOL: f64 = 1e-13;

/// Rational function `num(x) / den(x)` with `den(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pade {
    pub num: Vec<C64>,
    pub den: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PadeValue {
    pub value: C64,
    /// `|den(x)| / sum_j |b_j| |x|^j`; small values mean the point sits near a pole.
    pub den_ratio: f64,
}

fn horner(c: &[C64], x: C64) -> C64 {
    c.iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, v| acc * x + v)
}

impl Pade {
    pub fn eval(&self, x: C64) -> PadeValue {
        let den = horner(&self.den, x);
        let scale: f64 = self
            .den
            .iter()
            .enumerate()
            .map(|(j, b)| b.norm() * x.norm().powi(j as i32))
            .sum();
        PadeValue {
            value: horner(&self.num, x) / den,
            den_ratio: if scale > 0.0 { den.norm() / scale } else { 0.0 },
        }
    }

    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }
}

/// `[l/m]` approximant from `c[0..=l+m]`. When the denominator system is rank
/// deficient the denominator degree is lowered until it is not, ending at the
/// Taylor polynomial.
pub fn pade(c: &[C64], l: usize, m: usize) -> Result<Pade> {
    if c.len() < l + m + 1 {
        return Err(HopeError::DegenerateSeries(format!(
            "[{l}/{m}] approximant needs {} coefficients, have {}",
            l + m + 1,
            c.len()
        )));
    }
    let coef = |k: i64| {
        if k < 0 {
            C64::new(0.0, 0.0)
        } else {
            c[k as usize]
        }
    };
    let mut mm = m;
    loop {
        let den = if mm == 0 {
            vec![C64::new(1.0, 0.0)]
        } else {
            match denominator(&coef, l, mm) {
                Some(d) => d,
                None => {
                    mm -= 1;
                    continue;
                }
            }
        };
        let num = (0..=l)
            .map(|k| {
                (0..=k.min(den.len() - 1))
                    .map(|j| den[j] * coef(k as i64 - j as i64))
                    .sum()
            })
            .collect();
        return Ok(Pade { num, den });
    }
}

fn denominator(coef: &impl Fn(i64) -> C64, l: usize, m: usize) -> Option<Vec<C64>> {
    // sum_{j=1}^m b_j c_{l+i-j} = -c_{l+i}, i = 1..m
    let a = DMatrix::from_fn(m, m, |i, j| coef(l as i64 + i as i64 + 1 - (j as i64 + 1)));
    let rhs = nalgebra::DVector::from_fn(m, |i, _| -coef((l + i + 1) as i64));
    let lu = a.full_piv_lu();
    let diag: Vec<f64> = (0..m).map(|i| lu.u()[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min <= RANK_TOL * max {
        return None;
    }
    let b = lu.solve(&rhs)?;
    if b.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return None;
    }
    let mut den = vec![C64::new(1.0, 0.0)];
    den.extend(b.iter().copied());
    let size = den.iter().map(|v| v.norm()).fold(0.0, f64::max);
    while den.len() > 1 && den.last().unwrap().norm() <= RANK_TOL * size {
        den.pop();
    }
    Some(den)
}
