//! The parabolic law `f(x, u, u_x, u_xx, u_t) = 0`, its inversions for the
//! diffusion `q = u_xx` and the rate `r = u_t`, and the splitting
//! `F = F0 + F1 * r` used to build the Lagrange function.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::root::{solve_monotone, RootOptions};

/// `(x, u, p, q, r) -> value`
pub type Fn5 = Arc<dyn Fn(f64, f64, f64, f64, f64) -> f64 + Send + Sync>;
/// `(x, u, p, r) -> value`
pub type Fn4 = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;
pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative step for central differences of user closures.
pub const FD_STEP: f64 = 1e-6;

/// How the parabolic law is given.
#[derive(Clone)]
pub enum Law {
    /// `f(x, u, p, q, r) = 0` with optional partials; missing partials are
    /// replaced by central differences.
    Implicit {
        f: Fn5,
        f_p: Option<Fn5>,
        f_q: Option<Fn5>,
        f_r: Option<Fn5>,
    },
    /// `q = F(x, u, p, r)` with optional partials `F_p`, `F_r`.
    Solved {
        diffusion: Fn4,
        diffusion_p: Option<Fn4>,
        diffusion_r: Option<Fn4>,
    },
}

impl Law {
    pub fn implicit(f: impl Fn(f64, f64, f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Law::Implicit {
            f: Arc::new(f),
            f_p: None,
            f_q: None,
            f_r: None,
        }
    }

    pub fn solved(diffusion: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Law::Solved {
            diffusion: Arc::new(diffusion),
            diffusion_p: None,
            diffusion_r: None,
        }
    }

    /// Attaches analytic partials of an implicit law.
    pub fn with_partials(self, f_p: Option<Fn5>, f_q: Option<Fn5>, f_r: Option<Fn5>) -> Self {
        match self {
            Law::Implicit { f, .. } => Law::Implicit { f, f_p, f_q, f_r },
            solved => solved,
        }
    }

    /// Attaches analytic partials `F_p`, `F_r` of a solved law.
    pub fn with_diffusion_partials(self, diffusion_p: Option<Fn4>, diffusion_r: Option<Fn4>) -> Self {
        match self {
            Law::Solved { diffusion, .. } => Law::Solved {
                diffusion,
                diffusion_p,
                diffusion_r,
            },
            implicit => implicit,
        }
    }
}

/// Boundary condition at one endpoint.
#[derive(Clone)]
pub enum BoundarySpec {
    /// `u = 0`
    Dirichlet,
    /// `u_x = b(u)`
    Robin { b: Fn1, b_u: Fn1 },
}

impl BoundarySpec {
    pub fn neumann() -> Self {
        Self::robin(|_| 0.0, |_| 0.0)
    }

    pub fn robin(
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b_u: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        BoundarySpec::Robin {
            b: Arc::new(b),
            b_u: Arc::new(b_u),
        }
    }

    /// `u_x = k u + c`
    pub fn linear(k: f64, c: f64) -> Self {
        Self::robin(move |u| k * u + c, move |_| k)
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundarySpec::Dirichlet)
    }

    /// Prescribed slope `b(u)`, or `None` at a Dirichlet end.
    #[inline]
    pub fn slope(&self, u: f64) -> Option<f64> {
        match self {
            BoundarySpec::Dirichlet => None,
            BoundarySpec::Robin { b, .. } => Some(b(u)),
        }
    }
}

impl fmt::Debug for BoundarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundarySpec::Dirichlet => write!(f, "Dirichlet"),
            BoundarySpec::Robin { b, .. } => write!(f, "Robin(b(0) = {})", b(0.0)),
        }
    }
}

/// A fully nonlinear parabolic problem on `[0, 1]`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub law: Law,
    pub left: BoundarySpec,
    pub right: BoundarySpec,
    /// Radius in `(u, p)` inside which `F0` is left untouched by the cut-off.
    pub cutoff_radius: f64,
    /// Open interval of admissible `r`.
    pub r_bracket: (f64, f64),
    /// Set when `F(x, u, p, 0)` does not depend on `p`; the cut-off then acts
    /// on `u` alone and `g` vanishes identically.
    pub f0_p_independent: bool,
    /// Residual tolerance for `solve_for_q` / `solve_for_r`, scaled by
    /// `1 + |f(x, u, p, 0, r)|`.
    pub root_tol: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field(
                "law",
                &match self.law {
                    Law::Implicit { .. } => "implicit",
                    Law::Solved { .. } => "solved",
                },
            )
            .field("left", &self.left)
            .field("right", &self.right)
            .field("cutoff_radius", &self.cutoff_radius)
            .field("r_bracket", &self.r_bracket)
            .finish()
    }
}

#[inline]
fn fd_step(v: f64) -> f64 {
    FD_STEP * (1.0 + v.abs())
}

fn check_finite(value: f64, x: f64, u: f64, p: f64, q: f64, r: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::EvaluationDomain {
            at: format!("(x={x}, u={u}, p={p}, q={q}, r={r})"),
        })
    }
}

/// Outcome of [`check_parabolicity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolicityReport {
    pub ok: bool,
    /// Largest `f_q * f_r` (implicit form) or smallest `F_r` (solved form).
    pub worst_product: f64,
}

impl ProblemSpec {
    pub fn new(name: impl Into<String>, law: Law) -> Self {
        Self {
            name: name.into(),
            law,
            left: BoundarySpec::Dirichlet,
            right: BoundarySpec::Dirichlet,
            cutoff_radius: 4.0,
            r_bracket: (f64::NEG_INFINITY, f64::INFINITY),
            f0_p_independent: false,
            root_tol: 1e-12,
        }
    }

    pub fn with_boundaries(mut self, left: BoundarySpec, right: BoundarySpec) -> Self {
        self.left = left;
        self.right = right;
        self
    }

    pub fn with_cutoff(mut self, radius: f64) -> Self {
        self.cutoff_radius = radius;
        self
    }

    pub fn with_r_bracket(mut self, lo: f64, hi: f64) -> Self {
        self.r_bracket = (lo, hi);
        self
    }

    pub fn p_independent_f0(mut self) -> Self {
        self.f0_p_independent = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_radius > 0.0 && self.cutoff_radius.is_finite()) {
            return Err(Error::Config(format!(
                "cut-off radius must be positive, got {}",
                self.cutoff_radius
            )));
        }
        let (lo, hi) = self.r_bracket;
        if !(lo < 0.0 && hi > 0.0) {
            return Err(Error::Config(format!(
                "r bracket ({lo}, {hi}) must contain 0"
            )));
        }
        if !(self.root_tol > 0.0) {
            return Err(Error::Config("root tolerance must be positive".into()));
        }
        Ok(())
    }

    /// `f(x, u, p, q, r)`; a solved law is read as `F(x, u, p, r) - q`.
    #[inline]
    pub fn f(&self, x: f64, u: f64, p: f64, q: f64, r: f64) -> f64 {
        match &self.law {
            Law::Implicit { f, .. } => f(x, u, p, q, r),
            Law::Solved { diffusion, .. } => diffusion(x, u, p, r) - q,
        }
    }

    pub fn f_q(&self, x: f64, u: f64, p: f64, q: f64, r: f64) -> f64 {
        match &self.law {
            Law::Implicit { f_q: Some(d), .. } => d(x, u, p, q, r),
            Law::Implicit { f, .. } => {
                let h = fd_step(q);
                (f(x, u, p, q + h, r) - f(x, u, p, q - h, r)) / (2.0 * h)
            }
            Law::Solved { .. } => -1.0,
        }
    }

    pub fn f_r(&self, x: f64, u: f64, p: f64, q: f64, r: f64) -> f64 {
        match &self.law {
            Law::Implicit { f_r: Some(d), .. } => d(x, u, p, q, r),
            Law::Implicit { f, .. } => {
                let h = fd_step(r);
                (f(x, u, p, q, r + h) - f(x, u, p, q, r - h)) / (2.0 * h)
            }
            Law::Solved { .. } => self.solved_diffusion_r(x, u, p, r),
        }
    }

    pub fn f_p(&self, x: f64, u: f64, p: f64, q: f64, r: f64) -> f64 {
        match &self.law {
            Law::Implicit { f_p: Some(d), .. } => d(x, u, p, q, r),
            Law::Implicit { f, .. } => {
                let h = fd_step(p);
                (f(x, u, p + h, q, r) - f(x, u, p - h, q, r)) / (2.0 * h)
            }
            Law::Solved { diffusion, diffusion_p, .. } => match diffusion_p {
                Some(d) => d(x, u, p, r),
                None => {
                    let h = fd_step(p);
                    (diffusion(x, u, p + h, r) - diffusion(x, u, p - h, r)) / (2.0 * h)
                }
            },
        }
    }

    fn solved_diffusion_r(&self, x: f64, u: f64, p: f64, r: f64) -> f64 {
        match &self.law {
            Law::Solved { diffusion, diffusion_r, .. } => match diffusion_r {
                Some(d) => d(x, u, p, r),
                None => {
                    let h = fd_step(r);
                    (diffusion(x, u, p, r + h) - diffusion(x, u, p, r - h)) / (2.0 * h)
                }
            },
            Law::Implicit { .. } => unreachable!(),
        }
    }

    fn tolerance_at(&self, x: f64, u: f64, p: f64, r: f64) -> f64 {
        let scale = self.f(x, u, p, 0.0, r).abs();
        self.root_tol * (1.0 + if scale.is_finite() { scale } else { 0.0 })
    }

    /// Solves the law for the diffusion `q = u_xx`.
    pub fn solve_for_q(&self, x: f64, u: f64, p: f64, r: f64) -> Result<f64> {
        self.solve_for_q_with_tol(x, u, p, r, self.tolerance_at(x, u, p, r))
    }

    fn solve_for_q_with_tol(&self, x: f64, u: f64, p: f64, r: f64, tol: f64) -> Result<f64> {
        match &self.law {
            Law::Solved { diffusion, .. } => {
                check_finite(diffusion(x, u, p, r), x, u, p, f64::NAN, r)
            }
            Law::Implicit { .. } => {
                let opts = RootOptions {
                    tol,
                    ..Default::default()
                };
                solve_monotone(
                    "f(q)",
                    |q| self.f(x, u, p, q, r),
                    |q| self.f_q(x, u, p, q, r),
                    0.0,
                    (f64::NEG_INFINITY, f64::INFINITY),
                    &opts,
                )
            }
        }
    }

    /// Solves the law for the rate `r = u_t` inside `r_bracket`.
    pub fn solve_for_r(&self, x: f64, u: f64, p: f64, q: f64) -> Result<f64> {
        self.solve_for_r_from(x, u, p, q, 0.0)
    }

    /// [`solve_for_r`](Self::solve_for_r) with a warm-start guess.
    pub fn solve_for_r_from(&self, x: f64, u: f64, p: f64, q: f64, guess: f64) -> Result<f64> {
        let tol = self.root_tol * (1.0 + self.f(x, u, p, q, 0.0).abs().min(1e300));
        let opts = RootOptions {
            tol,
            ..Default::default()
        };
        let (lo, hi) = self.r_bracket;
        let guess = if guess > lo && guess < hi { guess } else { 0.0 };
        solve_monotone(
            "f(r)",
            |r| self.f(x, u, p, q, r),
            |r| self.f_r(x, u, p, q, r),
            guess,
            self.r_bracket,
            &opts,
        )
    }

    /// `F(x, u, p, r)`, the law solved for `u_xx`. Implicit laws are inverted
    /// to near machine precision since difference quotients of `F` are taken.
    pub fn diffusion(&self, x: f64, u: f64, p: f64, r: f64) -> Result<f64> {
        let tol = 1e-14 * (1.0 + self.f(x, u, p, 0.0, r).abs());
        self.solve_for_q_with_tol(x, u, p, r, tol)
    }

    /// `F_r = -f_r / f_q`.
    pub fn diffusion_r(&self, x: f64, u: f64, p: f64, r: f64) -> Result<f64> {
        match &self.law {
            Law::Solved { .. } => check_finite(self.solved_diffusion_r(x, u, p, r), x, u, p, f64::NAN, r),
            Law::Implicit { .. } => {
                let q = self.diffusion(x, u, p, r)?;
                check_finite(-self.f_r(x, u, p, q, r) / self.f_q(x, u, p, q, r), x, u, p, q, r)
            }
        }
    }

    /// `F_p = -f_p / f_q`.
    pub fn diffusion_p(&self, x: f64, u: f64, p: f64, r: f64) -> Result<f64> {
        match &self.law {
            Law::Solved { .. } => check_finite(self.f_p(x, u, p, 0.0, r), x, u, p, f64::NAN, r),
            Law::Implicit { .. } => {
                let q = self.diffusion(x, u, p, r)?;
                check_finite(-self.f_p(x, u, p, q, r) / self.f_q(x, u, p, q, r), x, u, p, q, r)
            }
        }
    }

    /// `dr/dq = -f_q / f_r`, positive under parabolicity.
    pub fn effective_diffusion(&self, x: f64, u: f64, p: f64, q: f64, r: f64) -> f64 {
        -self.f_q(x, u, p, q, r) / self.f_r(x, u, p, q, r)
    }
}

/// Checks `f_q * f_r < 0` (implicit) or `F_r > 0` (solved) at every sample
/// `[x, u, p, q, r]`.
pub fn check_parabolicity(spec: &ProblemSpec, samples: &[[f64; 5]]) -> Result<ParabolicityReport> {
    if samples.is_empty() {
        return Err(Error::Config("parabolicity check needs at least one sample".into()));
    }
    match &spec.law {
        Law::Implicit { .. } => {
            let mut worst = f64::NEG_INFINITY;
            for &[x, u, p, q, r] in samples {
                check_finite(spec.f(x, u, p, q, r), x, u, p, q, r)?;
                let prod = check_finite(spec.f_q(x, u, p, q, r) * spec.f_r(x, u, p, q, r), x, u, p, q, r)?;
                worst = worst.max(prod);
            }
            Ok(ParabolicityReport {
                ok: worst < 0.0,
                worst_product: worst,
            })
        }
        Law::Solved { .. } => {
            let mut worst = f64::INFINITY;
            for &[x, u, p, _, r] in samples {
                let fr = spec.diffusion_r(x, u, p, r)?;
                worst = worst.min(fr);
            }
            Ok(ParabolicityReport {
                ok: worst > 0.0,
                worst_product: worst,
            })
        }
    }
}

/// Shape of the cut-off bump applied to `F0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffShape {
    /// `s = sqrt(u^2 + p^2)`
    Radial,
    /// `s = |u|`; keeps a `p`-independent `F0` independent of `p`.
    ValueOnly,
}

/// C1 bump: 1 for `s <= R`, 0 for `s >= 2R`, `1 - 3t^2 + 2t^3` in between
/// with `t = (s - R) / R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub radius: f64,
    pub shape: CutoffShape,
}

impl Cutoff {
    /// Value of the bump and its partial derivative in `p`.
    #[inline]
    pub fn weight(&self, u: f64, p: f64) -> (f64, f64) {
        let r = self.radius;
        let s = match self.shape {
            CutoffShape::Radial => u.hypot(p),
            CutoffShape::ValueOnly => u.abs(),
        };
        if s <= r {
            return (1.0, 0.0);
        }
        if s >= 2.0 * r {
            return (0.0, 0.0);
        }
        let t = (s - r) / r;
        let chi = 1.0 - 3.0 * t * t + 2.0 * t * t * t;
        let dchi_ds = (-6.0 * t + 6.0 * t * t) / r;
        let dchi_dp = match self.shape {
            CutoffShape::Radial => dchi_ds * p / s,
            CutoffShape::ValueOnly => 0.0,
        };
        (chi, dchi_dp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOptions {
    /// Below this `|r|` the `F1` evaluator uses `F_r(x,u,p,0)`; the
    /// difference quotient takes over linearly up to `10 * r_switch`.
    pub r_switch: f64,
    /// Replace an undefined `F(x,u,p,0)` by zero instead of failing.
    pub artificial_zero_f0: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            r_switch: 1e-7,
            artificial_zero_f0: false,
        }
    }
}

/// The splitting `F = F0(x,u,p) + F1(x,u,p,r) r` together with the cut-off
/// version of `F0`.
#[derive(Clone, Debug)]
pub struct SplitField {
    spec: Arc<ProblemSpec>,
    options: SplitOptions,
    cutoff: Cutoff,
}

/// Builds the splitting of `spec` with default options.
pub fn split(spec: &ProblemSpec) -> Result<SplitField> {
    split_with(spec, SplitOptions::default())
}

pub fn split_with(spec: &ProblemSpec, options: SplitOptions) -> Result<SplitField> {
    spec.validate()?;
    let shape = if spec.f0_p_independent {
        CutoffShape::ValueOnly
    } else {
        CutoffShape::Radial
    };
    let field = SplitField {
        spec: Arc::new(spec.clone()),
        options,
        cutoff: Cutoff {
            radius: spec.cutoff_radius,
            shape,
        },
    };
    if !options.artificial_zero_f0 {
        for &(x, u, p) in &[(0.0, 0.0, 0.0), (0.5, 0.0, 0.0), (1.0, 0.0, 0.0), (0.5, 0.5, 0.5)] {
            if spec.diffusion(x, u, p, 0.0).is_err() {
                return Err(Error::F0Undefined {
                    at: format!("(x={x}, u={u}, p={p})"),
                });
            }
        }
    }
    Ok(field)
}

/// Returns `field` with the cut-off radius replaced by `radius`.
pub fn apply_cutoff(field: &SplitField, radius: f64) -> SplitField {
    assert!(radius > 0.0, "cut-off radius must be positive");
    let mut out = field.clone();
    out.cutoff.radius = radius;
    out
}

impl SplitField {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn options(&self) -> SplitOptions {
        self.options
    }

    /// True when the cut-off `F0` has no `p` dependence, so `g == 0`.
    pub fn has_trivial_weight(&self) -> bool {
        self.options.artificial_zero_f0
            || (self.spec.f0_p_independent && self.cutoff.shape == CutoffShape::ValueOnly)
    }

    /// `F0(x, u, p) = F(x, u, p, 0)`
    #[inline]
    pub fn f0(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        if self.options.artificial_zero_f0 {
            return Ok(0.0);
        }
        self.spec.diffusion(x, u, p, 0.0)
    }

    #[inline]
    pub fn f0_p(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        if self.options.artificial_zero_f0 || self.spec.f0_p_independent {
            return Ok(0.0);
        }
        self.spec.diffusion_p(x, u, p, 0.0)
    }

    /// `F0` after the cut-off.
    #[inline]
    pub fn f0_cut(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        let (chi, _) = self.cutoff.weight(u, p);
        if chi == 0.0 {
            return Ok(0.0);
        }
        Ok(chi * self.f0(x, u, p)?)
    }

    /// `d/dp` of the cut-off `F0`, by the product rule.
    #[inline]
    pub fn f0_cut_p(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        let (chi, chi_p) = self.cutoff.weight(u, p);
        if chi == 0.0 {
            return Ok(0.0);
        }
        let mut out = chi * self.f0_p(x, u, p)?;
        if chi_p != 0.0 {
            out += chi_p * self.f0(x, u, p)?;
        }
        Ok(out)
    }

    /// `F0` and `F0_p` after the cut-off, sharing one evaluation of `F0`.
    #[inline]
    pub fn f0_cut_pair(&self, x: f64, u: f64, p: f64) -> Result<(f64, f64)> {
        let (chi, chi_p) = self.cutoff.weight(u, p);
        if chi == 0.0 {
            return Ok((0.0, 0.0));
        }
        let f0 = self.f0(x, u, p)?;
        let f0p = self.f0_p(x, u, p)?;
        Ok((chi * f0, chi * f0p + chi_p * f0))
    }

    /// `F1(x, u, p, r)`, strictly positive under parabolicity.
    pub fn f1(&self, x: f64, u: f64, p: f64, r: f64) -> Result<f64> {
        let rs = self.options.r_switch;
        let a = r.abs();
        let value = if a <= rs {
            self.spec.diffusion_r(x, u, p, 0.0)?
        } else {
            let quotient = (self.spec.diffusion(x, u, p, r)? - self.f0(x, u, p)?) / r;
            if a >= 10.0 * rs {
                quotient
            } else {
                let w = (a - rs) / (9.0 * rs);
                (1.0 - w) * self.spec.diffusion_r(x, u, p, 0.0)? + w * quotient
            }
        };
        if !(value > 0.0) {
            return Err(Error::NonPositiveF1 { x, u, p, r, value });
        }
        Ok(value)
    }
}

/// The alternative splitting `F1_alt(x, u, p, r) = F(x, u, p, r) - F0(x, u, p)`.
#[derive(Clone, Debug)]
pub struct SplitFieldAlt {
    base: SplitField,
}

pub fn split_alternative(spec: &ProblemSpec) -> Result<SplitFieldAlt> {
    Ok(SplitFieldAlt { base: split(spec)? })
}

impl SplitFieldAlt {
    pub fn from_field(base: SplitField) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &SplitField {
        &self.base
    }

    pub fn f0(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        self.base.f0(x, u, p)
    }

    /// Satisfies `r * F1_alt > 0` for `r != 0`.
    pub fn f1_alt(&self, x: f64, u: f64, p: f64, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        let value = self.base.spec.diffusion(x, u, p, r)? - self.base.f0(x, u, p)?;
        if value * r <= 0.0 {
            return Err(Error::NonPositiveF1 { x, u, p, r, value });
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn grid_samples() -> Vec<[f64; 5]> {
        let mut out = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..9 {
                    let q = -20.0 + 5.0 * k as f64;
                    out.push([i as f64 / 4.0, -1.0 + j as f64 * 0.5, 0.3 * j as f64, q, 0.1 * k as f64 - 0.4]);
                }
            }
        }
        out
    }

    #[test]
    fn heat_is_parabolic_backward_heat_is_not() {
        let heat = ProblemSpec::new("heat", Law::implicit(|_, _, _, q, r| -r + q));
        let rep = check_parabolicity(&heat, &grid_samples()).unwrap();
        assert!(rep.ok);
        assert!((rep.worst_product + 1.0).abs() < 1e-8);

        let back = ProblemSpec::new("backward", Law::implicit(|_, _, _, q, r| -r - q));
        let rep = check_parabolicity(&back, &grid_samples()).unwrap();
        assert!(!rep.ok);
        assert!((rep.worst_product - 1.0).abs() < 1e-8);
    }

    #[test]
    fn sine_perturbation_product_within_analytic_bounds() {
        let spec = ProblemSpec::new("sin", Law::implicit(|_, _, _, q, r| -r + q + 0.1 * q.sin()));
        let samples = grid_samples();
        let rep = check_parabolicity(&spec, &samples).unwrap();
        assert!(rep.ok);
        // f_q f_r = -(1 + 0.1 cos q) lies in [-1.1, -0.9]
        assert!(rep.worst_product <= -0.9 + 1e-8 && rep.worst_product >= -1.1 - 1e-8);
        let expected = samples
            .iter()
            .map(|s| -(1.0 + 0.1 * s[3].cos()))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((rep.worst_product - expected).abs() < 1e-8);
    }

    #[test]
    fn domain_error_on_nan() {
        let spec = ProblemSpec::new("log", Law::implicit(|_, u: f64, _, q, r| -r + q + u.ln()));
        let err = check_parabolicity(&spec, &[[0.5, -1.0, 0.0, 0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::EvaluationDomain { .. }));
    }

    #[test]
    fn solve_for_q_examples() {
        let h = |x: f64, u: f64, p: f64| x + u * u - 0.5 * p;
        let spec = ProblemSpec::new(
            "affine",
            Law::implicit(move |x, u, p, q, r| -r + q + h(x, u, p)),
        );
        let q = spec.solve_for_q(0.3, 0.7, -1.2, 2.5).unwrap();
        assert!((q - (2.5 - h(0.3, 0.7, -1.2))).abs() < 1e-12);

        let ft = catalog::fully_nonlinear_ftilde();
        let q = ft.solve_for_q(0.5, 0.0, 0.0, 1.0).unwrap();
        let oracle = bisect(|q| q + 0.1 * q.sin() - 1.0, -5.0, 5.0);
        assert!((q - oracle).abs() < 1e-12);
        assert!(ft.f(0.5, 0.0, 0.0, q, 1.0).abs() <= 1e-12 * 2.0);

        let quasi = ProblemSpec::new("q", Law::implicit(|_, _, _, q, r| -r + 2.0 * q + 3.0));
        assert!((quasi.solve_for_q(0.0, 0.0, 0.0, 7.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn solve_for_r_examples() {
        let heat = catalog::heat();
        assert!((heat.solve_for_r(0.2, 0.1, 0.3, -4.2).unwrap() + 4.2).abs() < 1e-12);

        let spec = ProblemSpec::new("inv", Law::implicit(|_, _, _, q, r| -(r + 0.1 * r.sin()) + q));
        for q in [-3.0, -0.5, 0.0, 0.7, 12.0] {
            let r = spec.solve_for_r(0.0, 0.0, 0.0, q).unwrap();
            let oracle = bisect(|r| r + 0.1 * r.sin() - q, -50.0, 50.0);
            assert!((r - oracle).abs() < 1e-11, "q={q}");
        }

        let lin = ProblemSpec::new("lin", Law::implicit(|_, _, _, q, r| -r + 2.0 * q + 1.0));
        assert!((lin.solve_for_r(0.0, 0.0, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_for_r_outside_bracket_is_no_bracket() {
        let spec = catalog::heat().with_r_bracket(-1.0, 1.0);
        let err = spec.solve_for_r(0.5, 0.0, 0.0, 5.0).unwrap_err();
        assert!(matches!(err, Error::NoBracket { .. }), "{err:?}");
    }

    #[test]
    fn split_quasilinear_and_semilinear() {
        let a = |x: f64, u: f64, p: f64| 1.5 + 0.3 * (x + u).sin() + 0.2 * p * p / (1.0 + p * p);
        let h = |x: f64, u: f64, p: f64| u - u.powi(3) + 0.4 * p + x;
        let spec = ProblemSpec::new(
            "quasi",
            Law::implicit(move |x, u, p, q, r| -r + a(x, u, p) * q + h(x, u, p)),
        );
        let field = split(&spec).unwrap();
        for &(x, u, p, r) in &[(0.1, 0.2, 0.3, 0.4), (0.9, -1.0, 2.0, -3.0), (0.5, 0.0, 0.0, 0.0)] {
            assert!((field.f0(x, u, p).unwrap() + h(x, u, p) / a(x, u, p)).abs() < 1e-12);
            assert!((field.f1(x, u, p, r).unwrap() - 1.0 / a(x, u, p)).abs() < 1e-9);
        }

        let semi = catalog::chafee_infante(2.0);
        let field = split(&semi).unwrap();
        assert!((field.f0(0.3, 0.5, 7.0).unwrap() + 2.0 * (0.5 - 0.125)).abs() < 1e-14);
        assert_eq!(field.f1(0.3, 0.5, 7.0, 1.3).unwrap(), 1.0);
        assert!(field.has_trivial_weight());
    }

    #[test]
    fn split_ftilde_inverts_and_recombines() {
        let field = split(&catalog::fully_nonlinear_ftilde()).unwrap();
        assert_eq!(field.f0(0.5, 0.3, 0.1).unwrap(), 0.0);
        // F1(0) = 1 / f'(0) = 1 / 1.1
        assert!((field.f1(0.5, 0.0, 0.0, 0.0).unwrap() - 1.0 / 1.1).abs() < 1e-9);
        for r in [-2.0, -1e-6, 3e-7, 0.5, 4.0] {
            let q = bisect(|q| q + 0.1 * q.sin() - r, -10.0, 10.0);
            let f1 = field.f1(0.5, 0.0, 0.0, r).unwrap();
            assert!((f1 * r - q).abs() < 1e-12 * (1.0 + q.abs()), "r={r}");
        }
    }

    #[test]
    fn f1_branch_blend_is_continuous() {
        let field = split(&catalog::fully_nonlinear_ftilde()).unwrap();
        let rs = field.options().r_switch;
        let mut prev = field.f1(0.5, 0.0, 0.0, 0.0).unwrap();
        for k in 1..=400 {
            let r = 12.0 * rs * k as f64 / 400.0;
            let v = field.f1(0.5, 0.0, 0.0, r).unwrap();
            assert!((v - prev).abs() < 1e-7, "jump at r={r}");
            prev = v;
        }
    }

    #[test]
    fn alternative_split_examples() {
        let semi = split_alternative(&catalog::chafee_infante(1.0)).unwrap();
        assert!((semi.f1_alt(0.2, 0.3, 0.4, 0.7).unwrap() - 0.7).abs() < 1e-14);
        assert_eq!(semi.f1_alt(0.2, 0.3, 0.4, 0.0).unwrap(), 0.0);

        let spec = ProblemSpec::new("q", Law::implicit(|_, _, _, q, r| -r + 2.0 * q + 1.0));
        let alt = split_alternative(&spec).unwrap();
        assert!((alt.f1_alt(0.0, 0.0, 0.0, 3.0).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn undefined_f0_fails_unless_opted_in() {
        // F is only defined for r > 0.5
        let spec = ProblemSpec::new("odd", Law::solved(|_, _, _, r: f64| if r > 0.5 { (r - 0.5).ln() } else { f64::NAN }))
            .with_r_bracket(-1.0, 10.0);
        assert!(matches!(split(&spec).unwrap_err(), Error::F0Undefined { .. }));
        let field = split_with(
            &spec,
            SplitOptions {
                artificial_zero_f0: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(field.f0(0.1, 2.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn cutoff_examples() {
        let spec = ProblemSpec::new("const", Law::solved(|_, _, _, r| r + 1.0)).with_cutoff(2.0);
        let field = split(&spec).unwrap();
        assert_eq!(field.f0_cut(0.5, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(field.f0_cut(0.5, 3.0, 3.0).unwrap(), 0.0);
        // s = 1.5 R -> t = 0.5 -> 1 - 0.75 + 0.25
        assert!((field.f0_cut(0.5, 3.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let wider = apply_cutoff(&field, 4.0);
        assert_eq!(wider.f0_cut(0.5, 3.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn cutoff_derivative_matches_finite_differences_across_annulus() {
        let spec = ProblemSpec::new(
            "drift",
            Law::solved(|x, u: f64, p: f64, r| r - (1.0 + x) * u.sin() - 0.7 * p),
        )
        .with_cutoff(1.0);
        let field = split(&spec).unwrap();
        let h = 1e-6;
        for &(u, p) in &[(0.3, 0.9), (0.3, 1.05), (0.8, 1.3), (1.2, 1.2), (0.1, 1.99), (0.0, 2.0)] {
            let fd = (field.f0_cut(0.4, u, p + h).unwrap() - field.f0_cut(0.4, u, p - h).unwrap()) / (2.0 * h);
            let an = field.f0_cut_p(0.4, u, p).unwrap();
            // C1 only: the difference quotient carries an O(h) term at s = R, 2R
            assert!((fd - an).abs() < 1e-5, "(u,p)=({u},{p}): {fd} vs {an}");
        }
    }
}
