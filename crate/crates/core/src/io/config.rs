//! TOML run configuration with `[wave]`, `[envelope]`, `[grid]` and `[run]` sections.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::engine::GrowthMethod;
use crate::envelope::{
    parse_sampled_csv, sample_envelope_with, slab_with_gap, tanh_slab, EnvelopeField, EnvelopeKind,
    EnvelopeSpec, SamplingOptions,
};
use crate::error::{HopeError, Result};
use crate::field::Discretization;
use crate::solver::{BaseIteration, IterConfig, OrderSolver, SolverOptions};
use crate::wave::{build_mode_grid, Polarization, WaveConfig};
use crate::zgrid::ZGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub wave: WaveSection,
    #[serde(default)]
    pub envelope: EnvelopeSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarizationName {
    Te,
    Tm,
    Custom,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSection {
    pub k0: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub phi_inc: f64,
    #[serde(default = "default_polarization")]
    pub polarization: PolarizationName,
    /// `[[re, im]; 3]`, only for `polarization = "custom"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<[[f64; 2]; 3]>,
    #[serde(default = "one")]
    pub d_x: f64,
    #[serde(default = "one")]
    pub d_y: f64,
    pub h: f64,
    #[serde(default = "one")]
    pub eps_u: f64,
    #[serde(default = "one")]
    pub eps_w: f64,
    #[serde(default = "one")]
    pub eps_bar: f64,
}

fn default_polarization() -> PolarizationName {
    PolarizationName::Te
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvelopeSection {
    Zero {
        #[serde(default)]
        rho0: f64,
    },
    Constant {
        value: f64,
        #[serde(default)]
        rho0: f64,
    },
    TanhSlab {
        eps_prime: f64,
        d: f64,
        w: f64,
        #[serde(default)]
        rho0: f64,
    },
    Laminar {
        a: f64,
        b: f64,
        w: f64,
        amplitude: f64,
        #[serde(default)]
        rho0: f64,
    },
    SlabGap {
        eps_prime: f64,
        d: f64,
        g: f64,
        w: f64,
        #[serde(default)]
        rho0: f64,
    },
    /// CSV file with `x,y,z,value` columns, relative to the config file.
    Sampled {
        path: PathBuf,
        #[serde(default)]
        rho0: f64,
    },
}

impl Default for EnvelopeSection {
    fn default() -> Self {
        EnvelopeSection::Zero { rho0: 0.0 }
    }
}

impl EnvelopeSection {
    pub fn rho0(&self) -> f64 {
        match self {
            EnvelopeSection::Zero { rho0 }
            | EnvelopeSection::Constant { rho0, .. }
            | EnvelopeSection::TanhSlab { rho0, .. }
            | EnvelopeSection::Laminar { rho0, .. }
            | EnvelopeSection::SlabGap { rho0, .. }
            | EnvelopeSection::Sampled { rho0, .. } => *rho0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub p_max: usize,
    pub q_max: usize,
    /// Collocation nodes per vertical element.
    pub nz: usize,
    /// Element half-width around each envelope front, in front widths.
    pub front_factor: f64,
    /// Nested element rings per front, each three times wider.
    pub front_levels: usize,
    /// Longest allowed element; defaults to a quarter of the interior wavelength.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_element: Option<f64>,
    pub oversample: usize,
    pub min_samples: usize,
    pub eps_floor: f64,
    pub res_guard: f64,
    pub max_condition: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        let s = SamplingOptions::default();
        let o = SolverOptions::default();
        GridSection {
            p_max: 0,
            q_max: 0,
            nz: 17,
            front_factor: 1.0,
            front_levels: 3,
            max_element: None,
            oversample: s.oversample,
            min_samples: s.min_samples,
            eps_floor: s.eps0_floor,
            res_guard: o.res_guard,
            max_condition: o.max_condition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Discrete full-contrast solve on the same grid.
    Direct,
    /// Highest-order diagonal Pade sum of the series itself.
    Pade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub orders: usize,
    /// Perturbation values for `solve`, `converge`, `continue` and `oracle`.
    pub deltas: Vec<f64>,
    /// Partial-sum orders of the convergence table.
    pub ls: Vec<usize>,
    /// `[L, M]` of the Pade approximant.
    pub pade: [usize; 2],
    pub iteration: BaseIteration,
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_window: Option<[usize; 2]>,
    pub growth_method: GrowthMethod,
    pub reference: ReferenceKind,
    pub staircase_layers: usize,
    /// Extra free-space wavenumbers for the `oracle` sweep.
    pub k0_sweep: Vec<f64>,
    pub plot_nx: usize,
    pub plot_nz: usize,
    pub plot_y: f64,
    /// Contrast at which `envelope-plot` evaluates the permittivity.
    pub plot_rho: f64,
    /// Points per period along x in field slices.
    pub slice_nx: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        let it = IterConfig::default();
        RunSection {
            orders: 12,
            deltas: vec![0.05, 0.1, 0.2],
            ls: (2..=10).collect(),
            pade: [6, 6],
            iteration: it.method,
            tol: it.tol,
            max_iter: it.max_iter,
            restart: it.restart,
            growth_window: None,
            growth_method: GrowthMethod::Ratio,
            reference: ReferenceKind::Direct,
            staircase_layers: 2000,
            k0_sweep: Vec::new(),
            plot_nx: 201,
            plot_nz: 201,
            plot_y: 0.0,
            plot_rho: 1.0,
            slice_nx: 64,
        }
    }
}

impl RunSection {
    pub fn iter_config(&self) -> IterConfig {
        IterConfig {
            method: self.iteration,
            tol: self.tol,
            max_iter: self.max_iter,
            restart: self.restart,
        }
    }

    pub fn growth_window(&self) -> (usize, usize) {
        match self.growth_window {
            Some([a, b]) => (a, b),
            None => (2.min(self.orders), self.orders),
        }
    }
}

/// Everything a subcommand needs, built from a validated [`Config`].
pub struct Setup {
    pub cfg: WaveConfig,
    pub spec: EnvelopeSpec,
    pub disc: Arc<Discretization>,
    pub env: EnvelopeField,
    pub solver: OrderSolver,
}

impl Config {
    /// Parses and validates the text of a config file; performs no IO.
    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| HopeError::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Config, PathBuf)> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Config::parse(&text)?, base))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.wave_config()?;
        let bad = |m: String| Err(HopeError::InvalidConfig(m));
        let g = &self.grid;
        if g.nz < 3 {
            return bad(format!("grid.nz must be at least 3, got {}", g.nz));
        }
        if g.oversample == 0 || g.min_samples == 0 {
            return bad("grid.oversample and grid.min_samples must be positive".into());
        }
        if !(g.front_factor > 0.0 && g.front_factor.is_finite()) {
            return bad("grid.front_factor must be positive".into());
        }
        if let Some(m) = g.max_element {
            if !(m > 0.0 && m.is_finite()) {
                return bad("grid.max_element must be positive".into());
            }
        }
        if !(g.eps_floor >= 0.0 && g.res_guard >= 0.0 && g.max_condition > 1.0) {
            return bad("grid guards must be non-negative".into());
        }
        // the padded product grid and per-mode work grow quadratically in each truncation
        if g.p_max > 256 || g.q_max > 256 || g.nz > 1024 || g.front_levels > 8 {
            return bad("grid truncation too large".into());
        }
        let r = &self.run;
        if r.orders > 200 {
            return bad("run.orders must be at most 200".into());
        }
        if r.deltas.iter().any(|d| !d.is_finite()) {
            return bad("run.deltas must be finite".into());
        }
        if let Some(&l) = r.ls.iter().find(|&&l| l > r.orders) {
            return bad(format!(
                "run.ls entry {l} exceeds run.orders = {}",
                r.orders
            ));
        }
        if r.pade[0] + r.pade[1] > r.orders {
            return bad(format!(
                "run.pade [{}, {}] needs {} orders, run.orders = {}",
                r.pade[0],
                r.pade[1],
                r.pade[0] + r.pade[1],
                r.orders
            ));
        }
        let (lo, hi) = r.growth_window();
        if hi > r.orders || lo > hi {
            return bad(format!(
                "run.growth_window [{lo}, {hi}] is outside 0..={}",
                r.orders
            ));
        }
        if !(r.tol > 0.0) || r.max_iter == 0 || r.restart == 0 {
            return bad("run.tol, run.max_iter and run.restart must be positive".into());
        }
        if r.staircase_layers == 0 || r.staircase_layers > 1_000_000 {
            return bad("run.staircase_layers must lie in 1..=1000000".into());
        }
        if r.k0_sweep.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return bad("run.k0_sweep entries must be positive".into());
        }
        if r.plot_nx < 2
            || r.plot_nz < 2
            || r.plot_nx * r.plot_nz > 4_000_000
            || r.slice_nx == 0
            || r.slice_nx > 4096
        {
            return bad("plot and slice resolutions out of range".into());
        }
        if !(r.plot_y.is_finite() && r.plot_rho.is_finite() && self.envelope.rho0().is_finite()) {
            return bad("run.plot_y, run.plot_rho and envelope.rho0 must be finite".into());
        }
        Ok(())
    }

    pub fn wave_config(&self) -> Result<WaveConfig> {
        let w = &self.wave;
        let pol = match (w.polarization, w.amplitude) {
            (PolarizationName::Te, None) => Polarization::Te,
            (PolarizationName::Tm, None) => Polarization::Tm,
            (PolarizationName::Custom, Some(a)) => {
                Polarization::Custom(a.map(|[re, im]| C64::new(re, im)))
            }
            (PolarizationName::Custom, None) => {
                return Err(HopeError::InvalidConfig(
                    "custom polarization needs wave.amplitude".into(),
                ))
            }
            (_, Some(_)) => {
                return Err(HopeError::InvalidConfig(
                    "wave.amplitude is only allowed with polarization = \"custom\"".into(),
                ))
            }
        };
        WaveConfig::new(
            w.k0, w.theta, w.phi_inc, pol, w.d_x, w.d_y, w.h, w.eps_u, w.eps_w, w.eps_bar,
        )
    }

    /// Envelope description; sampled files are read relative to `base`.
    pub fn envelope_spec(&self, base: &Path) -> Result<EnvelopeSpec> {
        let eps_bar = self.wave.eps_bar;
        let spec = match &self.envelope {
            EnvelopeSection::Zero { .. } => EnvelopeSpec::zero(),
            EnvelopeSection::Constant { value, .. } => EnvelopeSpec {
                kind: EnvelopeKind::Constant { value: *value },
                rho0: 0.0,
            },
            EnvelopeSection::TanhSlab {
                eps_prime, d, w, ..
            } => tanh_slab(*eps_prime, *d, *w, eps_bar)?,
            EnvelopeSection::Laminar {
                a, b, w, amplitude, ..
            } => EnvelopeSpec {
                kind: EnvelopeKind::Laminar {
                    a: *a,
                    b: *b,
                    w: *w,
                    amplitude: *amplitude,
                },
                rho0: 0.0,
            },
            EnvelopeSection::SlabGap {
                eps_prime, d, g, w, ..
            } => slab_with_gap(*eps_prime, *d, *g, *w)?,
            EnvelopeSection::Sampled { path, .. } => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full)?;
                EnvelopeSpec {
                    kind: EnvelopeKind::Sampled(Arc::new(parse_sampled_csv(&text)?)),
                    rho0: 0.0,
                }
            }
        }
        .with_rho0(self.envelope.rho0());
        spec.validate(&self.wave_config()?)?;
        Ok(spec)
    }

    pub fn max_element(&self) -> f64 {
        self.grid
            .max_element
            .unwrap_or(std::f64::consts::PI / (2.0 * self.wave.k0 * self.wave.eps_bar.sqrt()))
    }

    pub fn z_grid(&self, spec: &EnvelopeSpec) -> Result<ZGrid> {
        ZGrid::graded(
            self.wave.h,
            self.grid.nz,
            &spec.fronts(),
            self.grid.front_factor,
            self.grid.front_levels,
            self.max_element(),
        )
    }

    pub fn sampling(&self) -> SamplingOptions {
        SamplingOptions {
            oversample: self.grid.oversample,
            min_samples: self.grid.min_samples,
            eps0_floor: self.grid.eps_floor,
            ..SamplingOptions::default()
        }
    }

    pub fn setup(&self, base: &Path) -> Result<Setup> {
        let cfg = self.wave_config()?;
        let spec = self.envelope_spec(base)?;
        let modes = build_mode_grid(&cfg, self.grid.p_max, self.grid.q_max)?;
        let z = self.z_grid(&spec)?;
        let disc = Arc::new(Discretization::new(&cfg, modes, z));
        let env = sample_envelope_with(&spec, &disc, &cfg, &self.sampling())?;
        let solver = OrderSolver::with_options(
            &cfg,
            disc.clone(),
            SolverOptions {
                res_guard: self.grid.res_guard,
                max_condition: self.grid.max_condition,
            },
        )?;
        Ok(Setup {
            cfg,
            spec,
            disc,
            env,
            solver,
        })
    }
}
