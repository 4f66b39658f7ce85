//! The functional `E[u] = int_0^1 L(x, u, u_x) dx` and its decay rate on
//! discrete profiles.

use crate::error::{Error, Result};
use crate::lagrangian::LagrangianModel;
use crate::nonlinearity::{ProblemSpec, SplitFieldAlt};

/// Nodal values `u_i` at `x_i = i / N`, `i = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    /// Requires an even `N >= 8` (composite Simpson) and finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len().saturating_sub(1);
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidMesh(format!("N = {n}; need an even N >= 8")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("non-finite value at node {i}")));
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..=n).map(|i| f(i as f64 / n as f64)).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n + 1])
    }

    /// Number of cells `N`.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.n() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Composite Simpson weights for `N` (even) cells of width `dx`.
pub fn simpson_weights(n: usize, dx: f64) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * dx / 3.0
        })
        .collect()
}

pub fn simpson(values: &[f64], dx: f64) -> f64 {
    let n = values.len() - 1;
    debug_assert!(n % 2 == 0);
    simpson_weights(n, dx).iter().zip(values).map(|(w, v)| w * v).sum()
}

/// Nodal slopes: central differences inside, second-order one-sided at the
/// ends, or the prescribed `b(u)` at Robin ends when `robin_exact` is set.
pub fn slopes(u: &GridFunction, spec: &ProblemSpec, robin_exact: bool) -> Vec<f64> {
    let v = u.values();
    let n = u.n();
    let h = u.dx();
    let mut p = vec![0.0; n + 1];
    for i in 1..n {
        p[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    p[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    p[n] = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h);
    if robin_exact {
        if let Some(b) = spec.left.slope(v[0]) {
            p[0] = b;
        }
        if let Some(b) = spec.right.slope(v[n]) {
            p[n] = b;
        }
    }
    p
}

/// `E`, `dE/dt` in both splittings, and `int |L| dx` (a scale for the
/// rounding error of `E`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReading {
    pub e: f64,
    pub decay_rate: f64,
    pub decay_rate_alt: f64,
    pub magnitude: f64,
}

/// Evaluates the functional with Simpson's rule.
pub fn energy(model: &LagrangianModel, u: &GridFunction, robin_exact: bool) -> Result<f64> {
    Ok(energy_parts(model, u, robin_exact)?.0)
}

fn energy_parts(model: &LagrangianModel, u: &GridFunction, robin_exact: bool) -> Result<(f64, f64)> {
    let p = slopes(u, model.field().spec(), robin_exact);
    let w = simpson_weights(u.n(), u.dx());
    let mut e = 0.0;
    let mut mag = 0.0;
    for (i, (&ui, &pi)) in u.values().iter().zip(&p).enumerate() {
        let l = model.eval_l(u.x(i), ui, pi)?;
        e += w[i] * l;
        mag += w[i] * l.abs();
    }
    Ok((e, mag))
}

/// `-int L_pp F1 |u_t|^2 dx`.
pub fn decay_rate(model: &LagrangianModel, u: &GridFunction, ut: &[f64], robin_exact: bool) -> Result<f64> {
    let field = model.field();
    let p = slopes(u, field.spec(), robin_exact);
    let w = simpson_weights(u.n(), u.dx());
    let mut acc = 0.0;
    for (i, &r) in ut.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        let (x, ui) = (u.x(i), u.values()[i]);
        acc += w[i] * model.eval_lpp(x, ui, p[i])? * field.f1(x, ui, p[i], r)? * r * r;
    }
    Ok(-acc)
}

/// `-int L_pp F1_alt u_t dx` with `F1_alt = F - F0`.
pub fn decay_rate_alt(
    model: &LagrangianModel,
    alt: &SplitFieldAlt,
    u: &GridFunction,
    ut: &[f64],
    robin_exact: bool,
) -> Result<f64> {
    let p = slopes(u, model.field().spec(), robin_exact);
    let w = simpson_weights(u.n(), u.dx());
    let mut acc = 0.0;
    for (i, &r) in ut.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        let (x, ui) = (u.x(i), u.values()[i]);
        acc += w[i] * model.eval_lpp(x, ui, p[i])? * alt.f1_alt(x, ui, p[i], r)? * r;
    }
    Ok(-acc)
}

/// All four quantities in one pass over the nodes.
pub fn reading(
    model: &LagrangianModel,
    alt: &SplitFieldAlt,
    u: &GridFunction,
    ut: &[f64],
    robin_exact: bool,
) -> Result<EnergyReading> {
    let field = model.field();
    let p = slopes(u, field.spec(), robin_exact);
    let w = simpson_weights(u.n(), u.dx());
    let mut out = EnergyReading {
        e: 0.0,
        decay_rate: 0.0,
        decay_rate_alt: 0.0,
        magnitude: 0.0,
    };
    for (i, (&ui, &pi)) in u.values().iter().zip(&p).enumerate() {
        let x = u.x(i);
        let l = model.eval_l(x, ui, pi)?;
        out.e += w[i] * l;
        out.magnitude += w[i] * l.abs();
        let r = ut[i];
        if r != 0.0 {
            let lpp = model.eval_lpp(x, ui, pi)?;
            out.decay_rate -= w[i] * lpp * field.f1(x, ui, pi, r)? * r * r;
            out.decay_rate_alt -= w[i] * lpp * alt.f1_alt(x, ui, pi, r)? * r;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::lagrangian::ModelOptions;
    use crate::nonlinearity::{split, BoundarySpec, SplitFieldAlt};

    fn options() -> ModelOptions {
        ModelOptions {
            nx: 17,
            nu: 33,
            np: 33,
            l0_nodes: 801,
            ..ModelOptions::default()
        }
    }

    #[test]
    fn constant_profile_energy_is_potential() {
        let lambda = 15.0;
        let spec = catalog::chafee_infante(lambda).with_boundaries(BoundarySpec::neumann(), BoundarySpec::neumann());
        let model = LagrangianModel::build(&split(&spec).unwrap(), options().with_box(1.5, 4.0)).unwrap();
        for c in [0.0, 0.4, -0.9] {
            let u = GridFunction::from_fn(16, |_| c).unwrap();
            let e = energy(&model, &u, true).unwrap();
            let exact = -lambda * (0.5 * c * c - 0.25 * c.powi(4));
            assert!((e - exact).abs() < 1e-9, "c={c}: {e} vs {exact}");
        }
    }

    #[test]
    fn semilinear_rates_are_minus_l2_norm() {
        let field = split(&catalog::chafee_infante(15.0)).unwrap();
        let model = LagrangianModel::build(&field, options().with_box(1.5, 4.0)).unwrap();
        let alt = SplitFieldAlt::from_field(field);
        let u = GridFunction::from_fn(32, |x| 0.5 * (std::f64::consts::PI * x).sin()).unwrap();
        let ut: Vec<f64> = u.values().iter().map(|v| v * (1.0 - v)).collect();
        let l2 = simpson(&ut.iter().map(|r| r * r).collect::<Vec<_>>(), u.dx());
        let r = reading(&model, &alt, &u, &ut, true).unwrap();
        assert!((r.decay_rate + l2).abs() < 1e-14 && (r.decay_rate_alt + l2).abs() < 1e-14);
        assert_eq!(decay_rate(&model, &u, &vec![0.0; 33], true).unwrap(), 0.0);
    }

    #[test]
    fn energy_converges_at_second_order() {
        // heat, Dirichlet: E = int u_x^2 / 2
        let model = LagrangianModel::build(&split(&catalog::heat()).unwrap(), options()).unwrap();
        let f = |x: f64| x * (1.0 - x) * (1.0 + x * x);
        let exact = {
            // int_0^1 (f')^2 / 2 with f' = 1 - 2x + 3x^2 - 4x^3
            let n = 20000;
            let fp = |x: f64| 1.0 - 2.0 * x + 3.0 * x * x - 4.0 * x.powi(3);
            simpson(&(0..=n).map(|i| 0.5 * fp(i as f64 / n as f64).powi(2)).collect::<Vec<_>>(), 1.0 / n as f64)
        };
        let err = |n| (energy(&model, &GridFunction::from_fn(n, f).unwrap(), true).unwrap() - exact).abs();
        let (e1, e2, e3) = (err(64), err(128), err(256));
        assert!(e1 / e2 > 3.7 && e2 / e3 > 3.7, "{e1} {e2} {e3}");
    }

    #[test]
    fn robin_slope_substitution() {
        let spec = catalog::heat().with_boundaries(BoundarySpec::linear(2.0, 0.0), BoundarySpec::Dirichlet);
        let u = GridFunction::from_fn(8, |x| 1.0 - x).unwrap();
        assert_eq!(slopes(&u, &spec, true)[0], 2.0);
        assert!((slopes(&u, &spec, false)[0] + 1.0).abs() < 1e-12);
        assert!(GridFunction::new(vec![0.0; 8]).is_err());
        assert!(GridFunction::new(vec![0.0; 12]).is_err());
    }
}
