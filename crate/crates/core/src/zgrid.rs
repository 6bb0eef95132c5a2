//! Composite Chebyshev-Lobatto collocation in the vertical direction.
//!
//! `[-h, h]` is split into elements at breakpoints; each element carries the
//! same number of Lobatto nodes and neighbouring elements share their common
//! endpoint. Nodes are stored top-down, so index 0 is `z = h` and the last
//! index is `z = -h`.

use num_complex::Complex64 as C64;

use crate::error::{HopeError, Result};

/// A sharp transition in the envelope, centred at `center` with length scale `width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Front {
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    /// Global index of the element's top node.
    pub start: usize,
    pub top: f64,
    pub bottom: f64,
}

impl Element {
    fn half(&self) -> f64 {
        0.5 * (self.top - self.bottom)
    }
}

#[derive(Debug, Clone)]
pub struct ZGrid {
    pub h: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub elements: Vec<Element>,
    per_element: usize,
    d_ref: Vec<f64>,
}

/// Lobatto points `cos(pi j / (n - 1))`, descending from 1 to -1.
pub fn lobatto_points(n: usize) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n)
        .map(|j| {
            // symmetric evaluation keeps the points exactly antisymmetric
            (std::f64::consts::PI * (m - 2.0 * j as f64) / (2.0 * m)).sin()
        })
        .collect()
}

/// Chebyshev differentiation matrix on the Lobatto points, row-major `n x n`.
pub fn cheb_diff_matrix(n: usize) -> Vec<f64> {
    let x = lobatto_points(n);
    let c: Vec<f64> = (0..n)
        .map(|j| {
            let s = if j == 0 || j == n - 1 { 2.0 } else { 1.0 };
            if j % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = c[i] / c[j] / (x[i] - x[j]);
                d[i * n + j] = v;
                row_sum += v;
            }
        }
        d[i * n + i] = -row_sum;
    }
    d
}

/// Clenshaw-Curtis weights on the Lobatto points of `[-1, 1]`.
pub fn clenshaw_curtis_weights(n: usize) -> Vec<f64> {
    let big_n = n - 1;
    if big_n == 1 {
        return vec![1.0, 1.0];
    }
    let nf = big_n as f64;
    let theta: Vec<f64> = (0..n)
        .map(|j| std::f64::consts::PI * j as f64 / nf)
        .collect();
    let mut w = vec![0.0; n];
    let mut v = vec![1.0; big_n - 1];
    if big_n.is_multiple_of(2) {
        w[0] = 1.0 / (nf * nf - 1.0);
        for k in 1..big_n / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (nf * theta[i + 1]).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        for k in 1..=(big_n - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    w[big_n] = w[0];
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    w
}

impl ZGrid {
    /// Single-element grid with `n` Lobatto nodes.
    pub fn uniform(h: f64, n: usize) -> Result<Self> {
        Self::with_breaks(h, n, &[])
    }

    /// Grid with element boundaries at `breaks` (strictly inside `(-h, h)`, any order).
    pub fn with_breaks(h: f64, n: usize, breaks: &[f64]) -> Result<Self> {
        Self::with_breaks_max(h, n, breaks, f64::INFINITY)
    }

    /// As [`ZGrid::with_breaks`], additionally splitting every element longer than `max_len` evenly.
    pub fn with_breaks_max(h: f64, n: usize, breaks: &[f64], max_len: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(HopeError::InvalidConfig(format!(
                "slab half-height must be positive, got {h}"
            )));
        }
        if n < 3 {
            return Err(HopeError::InvalidConfig(format!(
                "need at least 3 nodes per element, got {n}"
            )));
        }
        let mut cuts: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|b| b.is_finite() && b.abs() < h)
            .collect();
        cuts.push(h);
        cuts.push(-h);
        cuts.sort_by(|a, b| b.total_cmp(a));
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * h);
        // `dedup_by` may have dropped an endpoint in favour of a nearby break
        cuts[0] = h;
        let last = cuts.len() - 1;
        cuts[last] = -h;
        if !(max_len > 0.0) {
            return Err(HopeError::InvalidConfig(format!(
                "maximum element length must be positive, got {max_len}"
            )));
        }
        let mut split = vec![h];
        for pair in cuts.windows(2) {
            let len = pair[0] - pair[1];
            let pieces = (len / max_len).ceil().max(1.0) as usize;
            for j in 1..pieces {
                split.push(pair[0] - len * j as f64 / pieces as f64);
            }
            split.push(pair[1]);
        }
        let cuts = split;

        let x = lobatto_points(n);
        let w_ref = clenshaw_curtis_weights(n);
        let n_el = cuts.len() - 1;
        let total = n_el * (n - 1) + 1;
        let mut nodes = vec![0.0; total];
        let mut weights = vec![0.0; total];
        let mut elements = Vec::with_capacity(n_el);
        for e in 0..n_el {
            let el = Element {
                start: e * (n - 1),
                top: cuts[e],
                bottom: cuts[e + 1],
            };
            let mid = 0.5 * (el.top + el.bottom);
            let half = el.half();
            for j in 0..n {
                nodes[el.start + j] = mid + half * x[j];
                weights[el.start + j] += half * w_ref[j];
            }
            nodes[el.start] = el.top;
            nodes[el.start + n - 1] = el.bottom;
            elements.push(el);
        }
        Ok(ZGrid {
            h,
            nodes,
            weights,
            elements,
            per_element: n,
            d_ref: cheb_diff_matrix(n),
        })
    }

    /// Grid refined around envelope fronts: each front gets its own element of
    /// half-width `halfwidth_factor * width`, merged where they overlap.
    pub fn adapted(h: f64, n: usize, fronts: &[Front], halfwidth_factor: f64) -> Result<Self> {
        Self::adapted_max(h, n, fronts, halfwidth_factor, f64::INFINITY)
    }

    pub fn adapted_max(
        h: f64,
        n: usize,
        fronts: &[Front],
        halfwidth_factor: f64,
        max_len: f64,
    ) -> Result<Self> {
        Self::graded(h, n, fronts, halfwidth_factor, 1, max_len)
    }

    /// As [`ZGrid::adapted_max`] with `levels` nested rings per front, each three
    /// times wider than the previous one. A ring boundary closer than half its
    /// radius to an already placed boundary is dropped, inner rings first.
    pub fn graded(
        h: f64,
        n: usize,
        fronts: &[Front],
        halfwidth_factor: f64,
        levels: usize,
        max_len: f64,
    ) -> Result<Self> {
        let fronts: Vec<&Front> = fronts
            .iter()
            .filter(|f| f.width > 0.0 && f.center.is_finite())
            .collect();
        let mut kept: Vec<f64> = Vec::new();
        for level in 0..levels {
            let scale = halfwidth_factor * 3f64.powi(level as i32);
            let mut rings: Vec<(f64, f64, f64)> = fronts
                .iter()
                .map(|f| {
                    (
                        f.center - scale * f.width,
                        f.center + scale * f.width,
                        scale * f.width,
                    )
                })
                .collect();
            rings.sort_by(|a, b| a.0.total_cmp(&b.0));
            // overlapping rings of one level merge into a single interval
            let mut merged: Vec<(f64, f64, f64)> = Vec::new();
            for (lo, hi, r) in rings {
                match merged.last_mut() {
                    Some(last) if lo <= last.1 => {
                        last.1 = last.1.max(hi);
                        last.2 = last.2.min(r);
                    }
                    _ => merged.push((lo, hi, r)),
                }
            }
            for (lo, hi, r) in merged {
                for b in [lo, hi] {
                    let inside = b > -h + 0.5 * r && b < h - 0.5 * r;
                    let covered = kept.iter().any(|k| (k - b).abs() < 0.5 * r);
                    if inside && !covered {
                        kept.push(b);
                    }
                }
            }
        }
        Self::with_breaks_max(h, n, &kept, max_len)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes_per_element(&self) -> usize {
        self.per_element
    }

    /// Entry `(i, j)` of element `e`'s local differentiation matrix.
    #[inline]
    pub fn d_local(&self, e: usize, i: usize, j: usize) -> f64 {
        self.d_ref[i * self.per_element + j] / self.elements[e].half()
    }

    /// Local differentiation matrix of element `e`, row-major.
    pub fn element_diff(&self, e: usize) -> Vec<f64> {
        let half = self.elements[e].half();
        self.d_ref.iter().map(|v| v / half).collect()
    }

    /// Global indices of nodes shared by two elements.
    pub fn interface_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.elements.iter().skip(1).map(|e| e.start)
    }

    /// Element-wise derivative; shared nodes get the mean of both one-sided values.
    pub fn diff(&self, f: &[C64]) -> Vec<C64> {
        let n = self.per_element;
        let mut out = vec![C64::new(0.0, 0.0); f.len()];
        for (e, el) in self.elements.iter().enumerate() {
            let seg = &f[el.start..el.start + n];
            for i in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (j, v) in seg.iter().enumerate() {
                    acc += *v * self.d_local(e, i, j);
                }
                let g = el.start + i;
                let shared = (i == 0 && e > 0) || (i == n - 1 && e + 1 < self.elements.len());
                if shared {
                    out[g] += acc * 0.5;
                } else {
                    out[g] = acc;
                }
            }
        }
        out
    }

    pub fn diff_real(&self, f: &[f64]) -> Vec<f64> {
        let c: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.diff(&c).into_iter().map(|v| v.re).collect()
    }

    /// Derivative functional at `z = h` as `(index, coefficient)` pairs.
    pub fn top_derivative(&self) -> Vec<(usize, f64)> {
        (0..self.per_element)
            .map(|j| (j, self.d_local(0, 0, j)))
            .collect()
    }

    /// Derivative functional at `z = -h`.
    pub fn bottom_derivative(&self) -> Vec<(usize, f64)> {
        let e = self.elements.len() - 1;
        let n = self.per_element;
        let start = self.elements[e].start;
        (0..n)
            .map(|j| (start + j, self.d_local(e, n - 1, j)))
            .collect()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Index of the element containing interior node `g` (not an element endpoint).
    pub fn element_of(&self, g: usize) -> usize {
        let step = self.per_element - 1;
        (g / step).min(self.elements.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_polynomials() {
        for n in [3, 4, 9, 16, 17] {
            let w = clenshaw_curtis_weights(n);
            let x = lobatto_points(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-14, "n={n}");
            let second: f64 = w.iter().zip(&x).map(|(w, x)| w * x * x).sum();
            assert!((second - 2.0 / 3.0).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn derivative_of_smooth_function_is_spectral() {
        let g = ZGrid::uniform(0.5, 24).unwrap();
        let f: Vec<C64> = g
            .nodes
            .iter()
            .map(|&z| C64::new(0.0, 3.0 * z).exp())
            .collect();
        let df = g.diff(&f);
        for (z, d) in g.nodes.iter().zip(df) {
            let want = C64::new(0.0, 3.0) * C64::new(0.0, 3.0 * z).exp();
            assert!((d - want).norm() < 1e-10);
        }
    }

    #[test]
    fn composite_grid_shares_endpoints() {
        let g = ZGrid::with_breaks(1.0, 5, &[0.25, -0.5]).unwrap();
        assert_eq!(g.elements.len(), 3);
        assert_eq!(g.len(), 13);
        assert_eq!(g.nodes[0], 1.0);
        assert_eq!(g.nodes[4], 0.25);
        assert_eq!(g.nodes[8], -0.5);
        assert_eq!(*g.nodes.last().unwrap(), -1.0);
        assert!(g.nodes.windows(2).all(|w| w[0] > w[1]));
        assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adapted_grid_merges_overlapping_fronts() {
        let fronts = [
            Front {
                center: 0.25,
                width: 0.02,
            },
            Front {
                center: 0.27,
                width: 0.02,
            },
            Front {
                center: -0.25,
                width: 0.02,
            },
        ];
        let g = ZGrid::adapted(0.4, 9, &fronts, 2.0).unwrap();
        assert_eq!(g.elements.len(), 5);
        let g = ZGrid::adapted(
            0.4,
            9,
            &[Front {
                center: 0.39,
                width: 0.02,
            }],
            2.0,
        )
        .unwrap();
        assert_eq!(g.elements.len(), 2);
    }

    #[test]
    fn graded_rings_and_long_elements() {
        let f = [Front {
            center: 0.0,
            width: 0.01,
        }];
        let g = ZGrid::graded(1.0, 5, &f, 2.0, 3, f64::INFINITY).unwrap();
        let tops: Vec<f64> = g.elements.iter().map(|e| e.top).collect();
        let want = [1.0, 0.18, 0.06, 0.02, -0.02, -0.06, -0.18];
        assert_eq!(tops.len(), want.len());
        for (a, b) in tops.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{tops:?}");
        }
        let g = ZGrid::with_breaks_max(1.0, 5, &[0.9], 0.5).unwrap();
        let lens: Vec<f64> = g.elements.iter().map(|e| e.top - e.bottom).collect();
        assert_eq!(lens.len(), 5);
        assert!((lens[0] - 0.1).abs() < 1e-15);
        assert!(
            lens[1..].iter().all(|l| (l - 0.475).abs() < 1e-15),
            "{lens:?}"
        );
    }

    #[test]
    fn composite_derivative_of_sharp_profile() {
        let w = 50.0;
        let prof = |z: f64| 0.5 * ((w * (z + 0.25)).tanh() - (w * (z - 0.25)).tanh());
        let dprof = |z: f64| {
            let s = |t: f64| 1.0 / t.cosh().powi(2);
            0.5 * w * (s(w * (z + 0.25)) - s(w * (z - 0.25)))
        };
        let fronts = [
            Front {
                center: 0.25,
                width: 1.0 / w,
            },
            Front {
                center: -0.25,
                width: 1.0 / w,
            },
        ];
        let g = ZGrid::adapted(0.4, 48, &fronts, 2.0).unwrap();
        let f: Vec<f64> = g.nodes.iter().map(|&z| prof(z)).collect();
        let df = g.diff_real(&f);
        let err = g
            .nodes
            .iter()
            .zip(&df)
            .map(|(&z, d)| (d - dprof(z)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "err = {err}");
    }
}
