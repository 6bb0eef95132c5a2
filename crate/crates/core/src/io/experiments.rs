//! The batch experiments behind each subcommand.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::engine::{
    compute_expansion, convergence_study, efficiencies, estimate_growth, pade_sum, taylor_sum,
    Efficiencies, ErrorTable, TaylorSeries,
};
use crate::envelope::EnvelopeSpec;
use crate::error::{HopeError, Result};
use crate::field::{Discretization, VectorField};
use crate::io::config::{Config, ReferenceKind, Setup};
use crate::io::output::{Cell, Diagnostics, GridInfo, OutputDir, RunManifest, Timing};
use crate::oracle::{direct_solve, laminar_reference};
use crate::solver::IterConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Solve,
    Converge,
    Continue,
    EnvelopePlot,
    Oracle,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Solve => "solve",
            Subcommand::Converge => "converge",
            Subcommand::Continue => "continue",
            Subcommand::EnvelopePlot => "envelope-plot",
            Subcommand::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: Config,
    /// Directory that relative paths in the config resolve against.
    pub base: PathBuf,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub seed: u64,
}

/// Tolerance of the full-contrast reference solve in convergence tables.
const REFERENCE_TOL: f64 = 1e-13;

struct Clock {
    timings: Vec<Timing>,
    last: Instant,
}

impl Clock {
    fn new() -> Self {
        Clock {
            timings: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }
}

fn grid_info(config: &Config, disc: &Discretization) -> GridInfo {
    GridInfo {
        p_max: disc.modes.p_max,
        q_max: disc.modes.q_max,
        nodes_per_element: disc.z.nodes_per_element(),
        nodes: disc.nz(),
        elements: disc.z.elements.len(),
        max_element: config.max_element(),
    }
}

fn diagnostics(setup: &Setup, pole_flags: usize, energy_defect: Option<f64>) -> Diagnostics {
    let (cond, (p, q)) = setup.solver.max_condition();
    Diagnostics {
        wood_margin: setup.disc.modes.wood_margin(),
        min_abs_eps0: setup.env.min_abs_eps0,
        max_condition: cond,
        condition_mode: [p, q],
        transverse_deviation: setup.env.transverse_deviation,
        face_mismatch: setup.env.face_mismatch,
        pole_flags,
        energy_defect,
    }
}

fn manifest(ctx: &RunContext, cmd: Subcommand) -> RunManifest {
    RunManifest {
        subcommand: cmd.name().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: ctx.config.clone(),
        seed: ctx.seed,
        threads: ctx.threads,
        grid: None,
        xnorms: Vec::new(),
        growth: None,
        diagnostics: None,
        timings: Vec::new(),
        files: Vec::new(),
    }
}

/// Runs one subcommand and writes its artifacts and manifest into `ctx.out_dir`.
pub fn run(cmd: Subcommand, ctx: &RunContext) -> Result<RunManifest> {
    let mut out = OutputDir::create(&ctx.out_dir)?;
    let mut m = manifest(ctx, cmd);
    let mut clock = Clock::new();
    match cmd {
        Subcommand::EnvelopePlot => envelope_plot(ctx, &mut out)?,
        Subcommand::Oracle => oracle_sweep(ctx, &mut out)?,
        _ => {
            let setup = ctx.config.setup(&ctx.base)?;
            clock.lap("setup");
            let series = compute_expansion(
                &setup.solver,
                &setup.env,
                ctx.config.run.orders,
                &ctx.config.run.iter_config(),
            )?;
            clock.lap("expansion");
            m.grid = Some(grid_info(&ctx.config, &setup.disc));
            m.xnorms = series.xnorms.clone();
            m.growth = growth(ctx, &series);
            write_orders(&mut out, &series)?;
            let (flags, defect) = match cmd {
                Subcommand::Solve => solve(ctx, &setup, &series, &mut out)?,
                Subcommand::Converge => {
                    converge(ctx, &setup, &series, &mut out)?;
                    (0, None)
                }
                _ => continuation(ctx, &setup, &series, &mut out)?,
            };
            clock.lap(cmd.name());
            m.diagnostics = Some(diagnostics(&setup, flags, defect));
        }
    }
    clock.lap("output");
    m.timings = clock.timings;
    out.finish(m)
}

fn growth(ctx: &RunContext, series: &TaylorSeries) -> Option<crate::engine::GrowthEstimate> {
    match estimate_growth(
        &series.xnorms,
        ctx.config.run.growth_window(),
        ctx.config.run.growth_method,
    ) {
        Ok(g) => Some(g),
        Err(e) => {
            log::info!("no growth estimate: {e}");
            None
        }
    }
}

fn write_orders(out: &mut OutputDir, series: &TaylorSeries) -> Result<()> {
    let rows: Vec<Vec<Cell>> = series
        .xnorms
        .iter()
        .zip(&series.residuals)
        .enumerate()
        .map(|(l, (x, r))| {
            let root = if l == 0 {
                f64::NAN
            } else {
                x.powf(1.0 / l as f64)
            };
            vec![l.into(), (*x).into(), root.into(), (*r).into()]
        })
        .collect();
    out.write_csv("orders.csv", &["order", "xnorm", "root", "residual"], &rows)
}

fn efficiency_rows(delta: f64, method: &str, e: &Efficiencies, rows: &mut Vec<Vec<Cell>>) {
    for (face, list) in [("reflected", &e.reflected), ("transmitted", &e.transmitted)] {
        for o in list {
            rows.push(vec![
                delta.into(),
                method.into(),
                face.into(),
                o.p.into(),
                o.q.into(),
                o.efficiency.into(),
            ]);
        }
    }
}

/// Energy carried by the scattered field: all reflected orders plus the
/// transmitted orders of the field minus the continued incident wave.
fn scattered_energy(setup: &Setup, field: &VectorField) -> f64 {
    let (cfg, disc) = (&setup.cfg, &*setup.disc);
    let reflected = efficiencies(cfg, disc, field).total_reflected;
    match incident_continuation(cfg, disc) {
        Ok(inc) => reflected + efficiencies(cfg, disc, &field.sub(&inc)).total_transmitted,
        Err(_) => reflected,
    }
}

/// The incident plane wave continued through the slab, when the exterior media match.
fn incident_continuation(
    cfg: &crate::wave::WaveConfig,
    disc: &Discretization,
) -> Result<VectorField> {
    if cfg.eps_u != cfg.eps_w {
        return Err(HopeError::InvalidConfig("exterior media differ".into()));
    }
    let mut f = disc.vector_zeros();
    let m0 = disc.modes.flat(0, 0);
    let g = cfg.gamma_inc();
    for (k, &z) in disc.z.nodes.iter().enumerate() {
        let ph = C64::new(0.0, -g * z).exp();
        for c in 0..3 {
            f.set(c, m0, k, cfg.amplitude[c] * ph);
        }
    }
    Ok(f)
}

fn write_slice(
    ctx: &RunContext,
    setup: &Setup,
    field: &VectorField,
    out: &mut OutputDir,
) -> Result<()> {
    let disc = &*setup.disc;
    let nx = ctx.config.run.slice_nx;
    let y = ctx.config.run.plot_y;
    let d_x = setup.cfg.d_x;
    let mut rows = Vec::with_capacity(nx * disc.nz());
    for (k, &z) in disc.z.nodes.iter().enumerate() {
        for ix in 0..nx {
            let x = d_x * ix as f64 / nx as f64;
            let mut v = [C64::new(0.0, 0.0); 3];
            for m in 0..disc.n_modes() {
                let (a, b) = disc.modes.wavenumbers(m);
                let ph = C64::new(0.0, a * x + b * y).exp();
                for (c, vc) in v.iter_mut().enumerate() {
                    *vc += field.at(c, m, k) * ph;
                }
            }
            let mut row: Vec<Cell> = vec![x.into(), z.into()];
            for vc in v {
                row.push(vc.re.into());
                row.push(vc.im.into());
            }
            rows.push(row);
        }
    }
    out.write_csv(
        "field_slice.csv",
        &[
            "x", "z", "re_ex", "im_ex", "re_ey", "im_ey", "re_ez", "im_ez",
        ],
        &rows,
    )
}

fn solve(
    ctx: &RunContext,
    setup: &Setup,
    series: &TaylorSeries,
    out: &mut OutputDir,
) -> Result<(usize, Option<f64>)> {
    let run = &ctx.config.run;
    let l = series.l_max();
    let mut deltas = vec![0.0];
    deltas.extend(run.deltas.iter().copied().filter(|d| *d != 0.0));
    let mut eff_rows = Vec::new();
    let mut summary = Vec::new();
    let mut flags = 0;
    let mut worst_defect: f64 = 0.0;
    for (i, &d) in deltas.iter().enumerate() {
        let taylor = taylor_sum(series, d, l)?;
        if i == 0 {
            write_slice(ctx, setup, &taylor, out)?;
        }
        let mut sums = vec![("taylor", taylor, 0)];
        if run.pade[0] + run.pade[1] <= l {
            let p = pade_sum(series, d, run.pade[0], run.pade[1])?;
            sums.push(("pade", p.field, p.flags.len()));
        }
        for (method, field, nflags) in sums {
            let e = efficiencies(&setup.cfg, &setup.disc, &field);
            efficiency_rows(d, method, &e, &mut eff_rows);
            if d == 0.0 || method == "pade" {
                worst_defect = worst_defect.max(e.energy_defect.abs());
            }
            flags += nflags;
            summary.push(vec![
                d.into(),
                method.into(),
                e.total_reflected.into(),
                e.total_transmitted.into(),
                e.energy_defect.into(),
                scattered_energy(setup, &field).into(),
                nflags.into(),
            ]);
        }
    }
    out.write_csv(
        "efficiencies.csv",
        &["delta", "summation", "face", "p", "q", "efficiency"],
        &eff_rows,
    )?;
    out.write_csv(
        "summary.csv",
        &[
            "delta",
            "summation",
            "reflected",
            "transmitted",
            "energy_defect",
            "scattered_energy",
            "pole_flags",
        ],
        &summary,
    )?;
    Ok((flags, Some(worst_defect)))
}

fn reference_iter(run: &IterConfig) -> IterConfig {
    IterConfig {
        tol: run.tol.min(REFERENCE_TOL),
        ..*run
    }
}

fn converge(
    ctx: &RunContext,
    setup: &Setup,
    series: &TaylorSeries,
    out: &mut OutputDir,
) -> Result<ErrorTable> {
    let run = &ctx.config.run;
    let g = estimate_growth(&series.xnorms, run.growth_window(), run.growth_method)?;
    let iter = reference_iter(&run.iter_config());
    let label = match run.reference {
        ReferenceKind::Direct => "direct",
        ReferenceKind::Pade => "pade",
    };
    let table = convergence_study(
        series,
        &setup.disc,
        &setup.env,
        &run.deltas,
        &run.ls,
        &g,
        label,
        |d| match run.reference {
            ReferenceKind::Direct => direct_solve(
                &setup.solver,
                &setup.env,
                &setup.cfg,
                setup.env.rho0 + d,
                &iter,
            )
            .map(|r| r.0),
            ReferenceKind::Pade => {
                let half = series.l_max() / 2;
                pade_sum(series, d, series.l_max() - half, half).map(|p| p.field)
            }
        },
    )?;
    let mut rows = Vec::new();
    for (i, d) in table.deltas.iter().enumerate() {
        for (j, l) in table.ls.iter().enumerate() {
            rows.push(vec![(*d).into(), (*l).into(), table.errors[i][j].into()]);
        }
    }
    out.write_csv("error_table.csv", &["delta", "order", "error"], &rows)?;
    let slopes: Vec<Vec<Cell>> = table
        .deltas
        .iter()
        .zip(table.slopes.iter().zip(&table.predicted))
        .map(|(d, (s, p))| vec![(*d).into(), (*s).into(), (*p).into()])
        .collect();
    out.write_csv("slopes.csv", &["delta", "slope", "predicted"], &slopes)?;
    out.write_csv(
        "growth.csv",
        &["b_hat", "k_hat", "window_lo", "window_hi", "method"],
        &[vec![
            g.b_hat.into(),
            g.k_hat.into(),
            g.window.0.into(),
            g.window.1.into(),
            format!("{:?}", g.method).to_lowercase().as_str().into(),
        ]],
    )?;
    out.write_json("error_table.json", &table)?;
    out.write_json("growth.json", &g)?;
    Ok(table)
}

fn continuation(
    ctx: &RunContext,
    setup: &Setup,
    series: &TaylorSeries,
    out: &mut OutputDir,
) -> Result<(usize, Option<f64>)> {
    let run = &ctx.config.run;
    let l = series.l_max();
    let laminar = crate::oracle::staircase(&setup.spec, &setup.cfg, setup.env.rho0, 1).is_ok();
    let iter = reference_iter(&run.iter_config());
    let mut rows = Vec::new();
    let mut flags = 0;
    let mut worst: f64 = 0.0;
    for &d in &run.deltas {
        let rho = setup.env.rho0 + d;
        let t = efficiencies(&setup.cfg, &setup.disc, &taylor_sum(series, d, l)?);
        let p = pade_sum(series, d, run.pade[0], run.pade[1])?;
        flags += p.flags.len();
        let pe = efficiencies(&setup.cfg, &setup.disc, &p.field);
        worst = worst.max(pe.energy_defect.abs());
        let (label, r_ref, t_ref) = if laminar {
            let r = laminar_reference(&setup.spec, &setup.cfg, rho, run.staircase_layers)?;
            ("transfer-matrix", r.reflectance, r.transmittance)
        } else {
            let (f, _) = direct_solve(&setup.solver, &setup.env, &setup.cfg, rho, &iter)?;
            let e = efficiencies(&setup.cfg, &setup.disc, &f);
            ("direct", e.total_reflected, e.total_transmitted)
        };
        rows.push(vec![
            d.into(),
            rho.into(),
            t.total_reflected.into(),
            pe.total_reflected.into(),
            r_ref.into(),
            t.total_transmitted.into(),
            pe.total_transmitted.into(),
            t_ref.into(),
            p.flags.len().into(),
            label.into(),
        ]);
    }
    out.write_csv(
        "continuation.csv",
        &[
            "delta",
            "rho",
            "r_taylor",
            "r_pade",
            "r_reference",
            "t_taylor",
            "t_pade",
            "t_reference",
            "pole_flags",
            "reference",
        ],
        &rows,
    )?;
    Ok((flags, Some(worst)))
}

fn envelope_plot(ctx: &RunContext, out: &mut OutputDir) -> Result<()> {
    let cfg = ctx.config.wave_config()?;
    let spec: EnvelopeSpec = ctx.config.envelope_spec(&ctx.base)?;
    let run = &ctx.config.run;
    let (nx, nz) = (run.plot_nx, run.plot_nz);
    let mut rows = Vec::with_capacity(nx * nz);
    for iz in 0..nz {
        let z = cfg.h * (1.0 - 2.0 * iz as f64 / (nz - 1) as f64);
        for ix in 0..nx {
            let x = cfg.d_x * (ix as f64 / (nx - 1) as f64 - 0.5);
            let e = spec.value(&cfg, x, run.plot_y, z);
            let eps = spec.permittivity(&cfg, run.plot_rho, x, run.plot_y, z);
            rows.push(vec![x.into(), z.into(), e.into(), eps.into()]);
        }
    }
    out.write_csv(
        "envelope.csv",
        &["x", "z", "envelope", "permittivity"],
        &rows,
    )
}

fn oracle_sweep(ctx: &RunContext, out: &mut OutputDir) -> Result<()> {
    let base = ctx.config.wave_config()?;
    let spec = ctx.config.envelope_spec(&ctx.base)?;
    let run = &ctx.config.run;
    let mut k0s = vec![base.k0];
    k0s.extend(run.k0_sweep.iter().copied());
    let mut deltas = vec![0.0];
    deltas.extend(run.deltas.iter().copied().filter(|d| *d != 0.0));
    let mut rows = Vec::new();
    for &k0 in &k0s {
        let cfg = crate::wave::WaveConfig { k0, ..base };
        for &d in &deltas {
            let rho = spec.rho0 + d;
            let stack = crate::oracle::staircase(&spec, &cfg, rho, 2 * run.staircase_layers)?;
            let fine = crate::oracle::transfer_matrix(&stack, &cfg)?;
            let r = laminar_reference(&spec, &cfg, rho, run.staircase_layers)?;
            rows.push(vec![
                k0.into(),
                d.into(),
                rho.into(),
                r.reflectance.into(),
                r.transmittance.into(),
                fine.te.reflectance.into(),
                fine.tm.reflectance.into(),
                r.self_convergence.into(),
            ]);
        }
    }
    out.write_csv(
        "oracle.csv",
        &[
            "k0",
            "delta",
            "rho",
            "reflectance",
            "transmittance",
            "r_te",
            "r_tm",
            "self_convergence",
        ],
        &rows,
    )
}

/// Output directory: the command-line value, then `HOPE_OUT_DIR`, then `./out`.
pub fn resolve_out_dir(flag: Option<&Path>, env: Option<&str>) -> PathBuf {
    match (flag, env) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(e)) if !e.is_empty() => PathBuf::from(e),
        _ => PathBuf::from("out"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_dir_precedence() {
        assert_eq!(
            resolve_out_dir(Some(Path::new("a")), Some("b")),
            PathBuf::from("a")
        );
        assert_eq!(resolve_out_dir(None, Some("b")), PathBuf::from("b"));
        assert_eq!(resolve_out_dir(None, Some("")), PathBuf::from("out"));
        assert_eq!(resolve_out_dir(None, None), PathBuf::from("out"));
    }
}
