//! Run configuration, read from sectioned TOML files.
//!
//! Every key is optional except `problem.name`; omitted values fall back to
//! the library defaults, and the trust box falls back to the catalog's
//! recommendation for the chosen problem. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use parabolic_lyapunov::catalog::{self, CatalogParams, Reaction};
use parabolic_lyapunov::lagrangian::ModelOptions;
use parabolic_lyapunov::nonlinearity::{BoundarySpec, ProblemSpec};
use parabolic_lyapunov::pde::{FlowOptions, InitialCondition};
use parabolic_lyapunov::verify::Tolerances;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub problem: ProblemSection,
    #[serde(default)]
    pub boundary: BoundarySection,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    /// Chafee–Infante parameter.
    pub lambda: Option<f64>,
    /// Quasilinear reaction: `"bistable"` or `"zero"`.
    pub reaction: Option<String>,
    /// Strength of the bistable reaction.
    pub reaction_lambda: Option<f64>,
    /// Drift of the advection–diffusion entry.
    pub drift: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Neumann,
    /// `u_x = k u + c`
    Robin {
        #[serde(default)]
        k: f64,
        #[serde(default)]
        c: f64,
    },
}

impl Boundary {
    fn to_spec(&self) -> BoundarySpec {
        match *self {
            Boundary::Dirichlet => BoundarySpec::Dirichlet,
            Boundary::Neumann => BoundarySpec::neumann(),
            Boundary::Robin { k, c } => BoundarySpec::linear(k, c),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub left: Boundary,
    pub right: Boundary,
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self {
            left: Boundary::Dirichlet,
            right: Boundary::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub n: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { n: 128 }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub u_max: Option<f64>,
    pub p_max: Option<f64>,
    /// Cut-off radius `R`.
    pub cutoff: Option<f64>,
    pub nx: Option<usize>,
    pub nu: Option<usize>,
    pub np: Option<usize>,
    pub l0_nodes: Option<usize>,
    pub g_tol: Option<f64>,
    pub quad_tol: Option<f64>,
    pub direct: Option<bool>,
    /// Reuse a `g` table written by an earlier run instead of tabulating.
    pub gtable_cache: Option<PathBuf>,
    /// Random samples per model check.
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub transport: Option<f64>,
    pub lagrange: Option<f64>,
    pub slice: Option<f64>,
    pub boundary: Option<f64>,
    pub decay_rel: Option<f64>,
    pub monotone: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub t_end: Option<f64>,
    pub dt_max: Option<f64>,
    pub safety: Option<f64>,
    pub record_stride: Option<usize>,
    pub eq_tol: Option<f64>,
    pub blowup_bound: Option<f64>,
    pub robin_exact: Option<bool>,
}

fn yes() -> bool {
    true
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            enabled: true,
            t_end: None,
            dt_max: None,
            safety: None,
            record_stride: None,
            eq_tol: None,
            blowup_bound: None,
            robin_exact: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum InitialSection {
    Sine {
        #[serde(default = "one")]
        k: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Cosine {
        #[serde(default = "one")]
        k: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Constant {
        value: f64,
    },
    /// Smooth random profile; the seed is the run seed.
    Random {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "six")]
        modes: usize,
    },
    /// Two-column `x,u` file matching the mesh.
    Csv {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn six() -> usize {
    6
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection::Sine { k: 1.0, amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    /// Parses and validates a configuration; relative paths inside it are
    /// resolved against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(base) = base {
            let resolve = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            if let Some(p) = cfg.model.gtable_cache.as_mut() {
                resolve(p);
            }
            if let InitialSection::Csv { path } = &mut cfg.initial {
                resolve(path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent()).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Rejects values that would fail later, before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !catalog::NAMES.contains(&self.problem.name.as_str()) {
            return bad(format!("unknown problem '{}', expected one of {:?}", self.problem.name, catalog::NAMES));
        }
        self.reaction()?;
        let n = self.mesh.n;
        if n < 8 || n % 2 != 0 {
            return bad(format!("mesh.n = {n}; need an even number >= 8"));
        }
        let (u_max, p_max, radius) = self.box_and_cutoff();
        for (name, v) in [("model.u_max", u_max), ("model.p_max", p_max), ("model.cutoff", radius)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v}; must be positive"));
            }
        }
        self.model_options().validate().map_err(|e| CliError::Config(e.to_string()))?;
        let t = self.tolerances();
        for (name, v) in [
            ("transport", t.transport),
            ("lagrange", t.lagrange),
            ("slice", t.slice),
            ("boundary", t.boundary),
            ("decay_rel", t.decay_rel),
            ("monotone", t.monotone),
        ] {
            if !(v > 0.0) {
                return bad(format!("tolerances.{name} = {v}; must be positive"));
            }
        }
        let f = self.flow_options();
        if !(f.t_end > 0.0) || !(f.dt_max > 0.0) || !(f.safety > 0.0) || !(f.eq_tol >= 0.0) || !(f.blowup_bound > 0.0) {
            return bad("flow: t_end, dt_max, safety and blowup_bound must be positive, eq_tol non-negative".into());
        }
        if f.record_stride == 0 {
            return bad("flow.record_stride must be at least 1".into());
        }
        if let InitialSection::Random { modes: 0, .. } = self.initial {
            return bad("initial.modes must be at least 1".into());
        }
        Ok(())
    }

    fn reaction(&self) -> Result<Reaction, CliError> {
        let lambda = self.problem.reaction_lambda.unwrap_or(match CatalogParams::default().reaction {
            Reaction::Bistable(l) => l,
            Reaction::Zero => 0.0,
        });
        match self.problem.reaction.as_deref() {
            None | Some("bistable") => Ok(Reaction::Bistable(lambda)),
            Some("zero") => Ok(Reaction::Zero),
            Some(other) => Err(CliError::Config(format!("problem.reaction = '{other}'; expected 'bistable' or 'zero'"))),
        }
    }

    /// `(U, P, R)`, with catalog defaults for anything not given.
    pub fn box_and_cutoff(&self) -> (f64, f64, f64) {
        let (u, p, r) = catalog::default_box(&self.problem.name);
        (
            self.model.u_max.unwrap_or(u),
            self.model.p_max.unwrap_or(p),
            self.model.cutoff.unwrap_or(r),
        )
    }

    /// The catalog problem with boundaries and cut-off applied.
    pub fn problem_spec(&self) -> Result<ProblemSpec, CliError> {
        let defaults = CatalogParams::default();
        let params = CatalogParams {
            lambda: self.problem.lambda.unwrap_or(defaults.lambda),
            reaction: self.reaction()?,
            drift: self.problem.drift.unwrap_or(defaults.drift),
        };
        let (_, _, radius) = self.box_and_cutoff();
        Ok(catalog::by_name(&self.problem.name, &params)?
            .with_boundaries(self.boundary.left.to_spec(), self.boundary.right.to_spec())
            .with_cutoff(radius))
    }

    pub fn model_options(&self) -> ModelOptions {
        let d = ModelOptions::default();
        let m = &self.model;
        let (u_max, p_max, _) = self.box_and_cutoff();
        ModelOptions {
            u_max,
            p_max,
            nx: m.nx.unwrap_or(d.nx),
            nu: m.nu.unwrap_or(d.nu),
            np: m.np.unwrap_or(d.np),
            l0_nodes: m.l0_nodes.unwrap_or(d.l0_nodes),
            g_tol: m.g_tol.unwrap_or(d.g_tol),
            quad_tol: m.quad_tol.unwrap_or(d.quad_tol),
            direct: m.direct.unwrap_or(d.direct),
        }
    }

    pub fn samples(&self) -> usize {
        self.model.samples.unwrap_or(1000)
    }

    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        let t = &self.tolerances;
        Tolerances {
            transport: t.transport.unwrap_or(d.transport),
            lagrange: t.lagrange.unwrap_or(d.lagrange),
            slice: t.slice.unwrap_or(d.slice),
            boundary: t.boundary.unwrap_or(d.boundary),
            decay_rel: t.decay_rel.unwrap_or(d.decay_rel),
            monotone: t.monotone.unwrap_or(d.monotone),
        }
    }

    pub fn flow_options(&self) -> FlowOptions {
        let d = FlowOptions::default();
        let f = &self.flow;
        FlowOptions {
            t_end: f.t_end.unwrap_or(d.t_end),
            dt_max: f.dt_max.unwrap_or(d.dt_max),
            safety: f.safety.unwrap_or(d.safety),
            record_stride: f.record_stride.unwrap_or(d.record_stride),
            eq_tol: f.eq_tol.unwrap_or(d.eq_tol),
            blowup_bound: f.blowup_bound.unwrap_or(d.blowup_bound),
            robin_exact: f.robin_exact.unwrap_or(d.robin_exact),
            keep_profiles: false,
        }
    }

    pub fn initial_condition(&self) -> Result<InitialCondition, CliError> {
        Ok(match &self.initial {
            InitialSection::Sine { k, amplitude } => InitialCondition::Sine { k: *k, amplitude: *amplitude },
            InitialSection::Cosine { k, amplitude } => InitialCondition::Cosine { k: *k, amplitude: *amplitude },
            InitialSection::Constant { value } => InitialCondition::Constant(*value),
            InitialSection::Random { amplitude, modes } => InitialCondition::Random {
                seed: self.seed,
                amplitude: *amplitude,
                modes: *modes,
            },
            InitialSection::Csv { path } => {
                InitialCondition::Values(parabolic_lyapunov::pde::read_profile_csv(path, self.mesh.n)?)
            }
        })
    }
}
