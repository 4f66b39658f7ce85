//! Built-in parabolic laws, selectable by name from run configurations.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::nonlinearity::{Fn4, Fn5, Law, ProblemSpec};

pub const NAMES: &[&str] = &[
    "heat",
    "chafee_infante",
    "quasilinear_demo",
    "fully_nonlinear_ftilde",
    "advection_diffusion",
];

/// Reaction term `h` of the quasilinear demo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reaction {
    Zero,
    /// `lambda * (u - u^3)`
    Bistable(f64),
}

impl Reaction {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Reaction::Zero => 0.0,
            Reaction::Bistable(lambda) => lambda * (u - u * u * u),
        }
    }
}

/// `u_t = u_xx`
pub fn heat() -> ProblemSpec {
    let f_p: Fn5 = Arc::new(|_, _, _, _, _| 0.0);
    let f_q: Fn5 = Arc::new(|_, _, _, _, _| 1.0);
    let f_r: Fn5 = Arc::new(|_, _, _, _, _| -1.0);
    ProblemSpec::new(
        "heat",
        Law::implicit(|_, _, _, q, r| -r + q).with_partials(Some(f_p), Some(f_q), Some(f_r)),
    )
    .p_independent_f0()
}

/// `u_t = u_xx + lambda (u - u^3)`
pub fn chafee_infante(lambda: f64) -> ProblemSpec {
    let d_p: Fn4 = Arc::new(|_, _, _, _| 0.0);
    let d_r: Fn4 = Arc::new(|_, _, _, _| 1.0);
    ProblemSpec::new(
        "chafee_infante",
        Law::solved(move |_, u, _, r| r - lambda * (u - u * u * u))
            .with_diffusion_partials(Some(d_p), Some(d_r)),
    )
    .p_independent_f0()
}

/// Diffusion coefficient of the quasilinear demo, `1 + p^2 / (2 (1 + p^2))`.
#[inline]
pub fn demo_diffusivity(p: f64) -> f64 {
    1.0 + 0.5 * p * p / (1.0 + p * p)
}

#[inline]
fn demo_diffusivity_p(p: f64) -> f64 {
    let s = 1.0 + p * p;
    p / (s * s)
}

/// `u_t = a(u_x) u_xx + h(u)` with `a(p) = 1 + p^2 / (2 (1 + p^2))`.
pub fn quasilinear_demo(h: Reaction) -> ProblemSpec {
    let d_p: Fn4 = Arc::new(move |_, u, p, r| {
        let a = demo_diffusivity(p);
        -(r - h.eval(u)) * demo_diffusivity_p(p) / (a * a)
    });
    let d_r: Fn4 = Arc::new(|_, _, p, _| 1.0 / demo_diffusivity(p));
    ProblemSpec::new(
        "quasilinear_demo",
        Law::solved(move |_, u, p, r| (r - h.eval(u)) / demo_diffusivity(p))
            .with_diffusion_partials(Some(d_p), Some(d_r)),
    )
}

/// `f(q) = q + 0.1 sin q`
#[inline]
pub fn ftilde(q: f64) -> f64 {
    q + 0.1 * q.sin()
}

/// `u_t = f(u_xx)` with `f(q) = q + 0.1 sin q`.
pub fn fully_nonlinear_ftilde() -> ProblemSpec {
    let f_p: Fn5 = Arc::new(|_, _, _, _, _| 0.0);
    let f_q: Fn5 = Arc::new(|_, _, _, q, _| 1.0 + 0.1 * q.cos());
    let f_r: Fn5 = Arc::new(|_, _, _, _, _| -1.0);
    ProblemSpec::new(
        "fully_nonlinear_ftilde",
        Law::implicit(|_, _, _, q, r| -r + ftilde(q)).with_partials(Some(f_p), Some(f_q), Some(f_r)),
    )
    .p_independent_f0()
}

/// `u_t = u_xx + c u_x`; `F0 = -c p`, so the weight is `g = c x`.
pub fn advection_diffusion(c: f64) -> ProblemSpec {
    let d_p: Fn4 = Arc::new(move |_, _, _, _| -c);
    let d_r: Fn4 = Arc::new(|_, _, _, _| 1.0);
    ProblemSpec::new(
        "advection_diffusion",
        Law::solved(move |_, _, p, r| r - c * p).with_diffusion_partials(Some(d_p), Some(d_r)),
    )
}

/// Parameters accepted by [`by_name`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogParams {
    pub lambda: f64,
    pub reaction: Reaction,
    pub drift: f64,
}

impl Default for CatalogParams {
    fn default() -> Self {
        Self {
            lambda: 15.0,
            reaction: Reaction::Bistable(0.5),
            drift: 1.0,
        }
    }
}

/// Trust box `(U, P)` and cut-off radius `R` for an entry.
///
/// The box is kept small enough that backward characteristics from it stay
/// inside the cut-off ball, where `F0` is untouched and `g` is smooth; the
/// annulus makes `g` only C^1, which tabulated interpolation cannot resolve.
pub fn default_box(name: &str) -> (f64, f64, f64) {
    match name {
        "chafee_infante" => (1.5, 4.0, 4.0),
        "quasilinear_demo" => (1.25, 1.25, 5.0),
        "advection_diffusion" => (1.0, 1.0, 5.0),
        _ => (4.0, 4.0, 4.0),
    }
}

pub fn by_name(name: &str, params: &CatalogParams) -> Result<ProblemSpec> {
    Ok(match name {
        "heat" => heat(),
        "chafee_infante" => chafee_infante(params.lambda),
        "quasilinear_demo" => quasilinear_demo(params.reaction),
        "fully_nonlinear_ftilde" => fully_nonlinear_ftilde(),
        "advection_diffusion" => advection_diffusion(params.drift),
        other => {
            return Err(Error::Config(format!(
                "unknown problem '{other}', expected one of {NAMES:?}"
            )))
        }
    })
}
