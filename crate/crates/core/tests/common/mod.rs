#![allow(dead_code)]

use std::sync::Arc;

use hope::capacity::{capacity_multiplier, TangentialTrace};
use hope::field::{Discretization, VectorField};
use hope::io::config::Setup;
use hope::io::Config;
use hope::solver::{OrderProblem, OrderSolver};
use hope::wave::{build_mode_grid, Polarization, WaveConfig};
use hope::zgrid::ZGrid;
use hope::Face;
use num_complex::Complex64 as C64;

pub fn setup_from(toml: &str) -> Setup {
    Config::parse(toml)
        .unwrap()
        .setup(std::path::Path::new("."))
        .unwrap()
}

/// Exponential exponents of the exact field for mode `m`, component `c`.
fn exponents(m: usize, c: usize) -> [(C64, C64); 2] {
    let (mf, cf) = (m as f64, c as f64);
    [
        (
            C64::new(1.0, 0.3 * cf),
            C64::new(0.6 + 0.1 * cf, 6.0 + 0.4 * mf + cf),
        ),
        (
            C64::new(0.5, -0.2),
            C64::new(-0.4 + 0.05 * mf, -(4.0 + 0.3 * mf) + 0.3 * cf),
        ),
    ]
}

/// Value, first and second z-derivative of the exact component.
fn exact(m: usize, c: usize, z: f64) -> [C64; 3] {
    let mut out = [C64::new(0.0, 0.0); 3];
    for (coef, lam) in exponents(m, c) {
        let v = coef * (lam * z).exp();
        out[0] += v;
        out[1] += lam * v;
        out[2] += lam * lam * v;
    }
    out
}

pub struct Manufactured {
    pub disc: Arc<Discretization>,
    pub exact: VectorField,
    pub computed: VectorField,
}

impl Manufactured {
    pub fn relative_error(&self) -> f64 {
        self.computed.sub(&self.exact).max_abs() / self.exact.max_abs()
    }
}

/// Solves one order with data built from a known smooth field on a single element of `n` nodes.
pub fn manufactured(n: usize) -> Manufactured {
    let cfg = WaveConfig::new(
        2.0,
        0.3,
        0.5,
        Polarization::Te,
        1.0,
        1.0,
        0.5,
        1.0,
        1.0,
        1.0,
    )
    .unwrap();
    let modes = build_mode_grid(&cfg, 1, 1).unwrap();
    let z = ZGrid::uniform(cfg.h, n).unwrap();
    let disc = Arc::new(Discretization::new(&cfg, modes, z));
    let solver = OrderSolver::new(&cfg, disc.clone()).unwrap();
    let nm = disc.n_modes();
    let nz = disc.nz();
    let k2 = cfg.eps_bar * cfg.k0 * cfg.k0;
    let mut e = VectorField::zeros(nm, nz);
    let mut w = VectorField::zeros(nm, nz);
    let mut upper = TangentialTrace::zeros(Face::Upper, nm);
    let mut lower = TangentialTrace::zeros(Face::Lower, nm);
    let iwm = C64::i() * cfg.omega_mu();
    for m in 0..nm {
        let (a, b) = disc.modes.wavenumbers(m);
        let (ia, ib) = (C64::new(0.0, a), C64::new(0.0, b));
        let kt2 = a * a + b * b;
        for (k, &zk) in disc.z.nodes.iter().enumerate() {
            let [ex, ey, ez] = [0, 1, 2].map(|c| exact(m, c, zk));
            let g = ia * ex[0] + ib * ey[0] + ez[1];
            let cc = [
                ia * g + kt2 * ex[0] - ex[2],
                ib * g + kt2 * ey[0] - ey[2],
                ia * ex[1] + ib * ey[1] + kt2 * ez[0],
            ];
            for c in 0..3 {
                let v = [ex, ey, ez][c][0];
                e.set(c, m, k, v);
                w.set(c, m, k, cc[c] / k2 - v);
            }
        }
        for (face, zf, sign) in [(Face::Upper, cfg.h, 1.0), (Face::Lower, -cfg.h, -1.0)] {
            let cap = capacity_multiplier(face, m, &cfg, &disc.modes).unwrap();
            let cap = cap.map(|row| row.map(|v| v * iwm));
            let [ex, ey, ez] = [0, 1, 2].map(|c| exact(m, c, zf));
            let row = [
                sign * (ex[1] - ia * ez[0]) - (cap[0][0] * ex[0] + cap[0][1] * ey[0]),
                sign * (ey[1] - ib * ez[0]) - (cap[1][0] * ex[0] + cap[1][1] * ey[0]),
            ];
            match face {
                Face::Upper => upper.coeffs[m] = row,
                Face::Lower => lower.coeffs[m] = row,
            }
        }
    }
    let prob = OrderProblem {
        source: w,
        upper,
        lower,
        ell: 1,
    };
    let computed = solver.solve(&prob).unwrap();
    Manufactured {
        disc,
        exact: e,
        computed,
    }
}
