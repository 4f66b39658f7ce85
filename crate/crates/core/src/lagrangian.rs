//! The Lagrange function `L(x, u, p)` of the Lyapunov functional.
//!
//! With `g` from [`crate::characteristics`],
//!
//! ```text
//! L(x,u,p) = int_0^p (p - s) exp(g(x,u,s)) ds + L0(x,u) + L1(x,u) p
//! ```
//!
//! so that `L_pp = exp(g)` and `L_p = int_0^p exp(g) ds + L1`. `L1` makes the
//! boundary term `L_p u_t` vanish at Robin ends and `L0` closes the
//! Euler–Lagrange identity on the slice `p = 0`.

use std::fmt;

use crate::characteristics::{evaluate_g, tabulate_g, GTable, TensorGrid, DEFAULT_G_TOL};
use crate::error::{Error, Result};
use crate::nonlinearity::{BoundarySpec, SplitField};
use crate::numerics::interp::{HermiteSpline, UniformAxis};
use crate::numerics::quadrature::{adaptive, gl8, AdaptiveOptions};

/// Where `g` values come from.
#[derive(Debug, Clone)]
pub enum GSource {
    /// `F0` has no `p` dependence, so `g` vanishes identically.
    Zero,
    /// Tabulated `g`; queries outside the table fall back to direct evaluation.
    Table(GTable),
    /// Every query integrates a characteristic.
    Direct,
}

impl GSource {
    fn label(&self) -> &'static str {
        match self {
            GSource::Zero => "zero (F0 independent of p)",
            GSource::Table(_) => "tabulated",
            GSource::Direct => "direct",
        }
    }
}

/// How `L1` depends on `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L1Rule {
    /// Dirichlet at both ends.
    Zero,
    /// One Robin end at `x = iota`; `L1` is independent of `x`.
    Constant(u8),
    /// Robin at both ends; linear interpolation in `x`.
    Linear,
}

#[derive(Debug, Clone, Copy)]
pub struct ModelOptions {
    /// Half-width of the `u` range of the tables.
    pub u_max: f64,
    /// Half-width of the `p` range of the tables.
    pub p_max: f64,
    pub nx: usize,
    pub nu: usize,
    pub np: usize,
    /// Nodes of the `u` axis of the `L0` table.
    pub l0_nodes: usize,
    pub g_tol: f64,
    pub quad_tol: f64,
    /// Skip all tables and evaluate everything by direct quadrature.
    pub direct: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            u_max: 4.0,
            p_max: 4.0,
            nx: 65,
            nu: 129,
            np: 129,
            l0_nodes: 1601,
            g_tol: DEFAULT_G_TOL,
            quad_tol: 1e-10,
            direct: false,
        }
    }
}

impl ModelOptions {
    pub fn with_box(mut self, u_max: f64, p_max: f64) -> Self {
        self.u_max = u_max;
        self.p_max = p_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_max > 0.0 && self.p_max > 0.0) {
            return Err(Error::Config("model box half-widths must be positive".into()));
        }
        if self.nx < 4 || self.nu < 4 || self.np < 4 {
            return Err(Error::Config("g-table needs at least 4 nodes per axis".into()));
        }
        if self.l0_nodes < 5 || self.l0_nodes % 2 == 0 {
            return Err(Error::Config("L0 table needs an odd node count >= 5".into()));
        }
        if !(self.g_tol > 0.0 && self.quad_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> TensorGrid {
        TensorGrid::new(self.nx, self.nu, self.np, self.u_max, self.p_max)
    }
}

/// Node values and slopes of `L0(x_i, .)` on a common `u` axis.
#[derive(Debug, Clone)]
struct L0Table {
    x: UniformAxis,
    rows: Vec<HermiteSpline>,
}

impl L0Table {
    fn eval(&self, x: f64, u: f64) -> (f64, f64) {
        let (first, w) = self.x.cubic_stencil(x);
        let mut v = 0.0;
        let mut d = 0.0;
        for (k, wk) in w.iter().enumerate() {
            if *wk != 0.0 {
                let (a, b) = self.rows[first + k].eval(u);
                v += wk * a;
                d += wk * b;
            }
        }
        (v, d)
    }
}

/// The assembled Lagrange function.
#[derive(Debug, Clone)]
pub struct LagrangianModel {
    field: SplitField,
    g: GSource,
    options: ModelOptions,
    l1_rule: L1Rule,
    l0: Option<L0Table>,
}

/// Values of `L`, `L_p`, `L_pp` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeValues {
    pub l: f64,
    pub lp: f64,
    pub lpp: f64,
}

impl LagrangianModel {
    /// Tabulates `g` (unless trivial) and assembles `L1`, `L0`.
    pub fn build(field: &SplitField, options: ModelOptions) -> Result<Self> {
        options.validate()?;
        let g = if field.has_trivial_weight() {
            GSource::Zero
        } else if options.direct {
            GSource::Direct
        } else {
            GSource::Table(tabulate_g(field, options.grid(), options.g_tol)?)
        };
        Self::assemble(field, g, options)
    }

    /// Assembles the model around an existing `g` table, e.g. one read from
    /// a cache file.
    pub fn with_table(field: &SplitField, table: GTable, options: ModelOptions) -> Result<Self> {
        options.validate()?;
        let g = if field.has_trivial_weight() {
            GSource::Zero
        } else {
            GSource::Table(table)
        };
        Self::assemble(field, g, options)
    }

    fn assemble(field: &SplitField, g: GSource, options: ModelOptions) -> Result<Self> {
        let spec = field.spec();
        let l1_rule = match (&spec.left, &spec.right) {
            (BoundarySpec::Dirichlet, BoundarySpec::Dirichlet) => L1Rule::Zero,
            (BoundarySpec::Robin { .. }, BoundarySpec::Dirichlet) => L1Rule::Constant(0),
            (BoundarySpec::Dirichlet, BoundarySpec::Robin { .. }) => L1Rule::Constant(1),
            _ => L1Rule::Linear,
        };
        let mut model = Self {
            field: field.clone(),
            g,
            options,
            l1_rule,
            l0: None,
        };
        if !options.direct {
            model.l0 = Some(model.tabulate_l0()?);
        }
        Ok(model)
    }

    pub fn field(&self) -> &SplitField {
        &self.field
    }

    pub fn options(&self) -> &ModelOptions {
        &self.options
    }

    pub fn g_source(&self) -> &GSource {
        &self.g
    }

    pub fn gtable(&self) -> Option<&GTable> {
        match &self.g {
            GSource::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn l1_rule(&self) -> L1Rule {
        self.l1_rule
    }

    /// Largest `|u|`, `|p|` accepted before [`Error::OutOfBox`]: the
    /// tabulated box or the cut-off support, whichever is larger.
    pub fn limits(&self) -> (f64, f64) {
        let r2 = 2.0 * self.field.cutoff().radius;
        (self.options.u_max.max(r2), self.options.p_max.max(r2))
    }

    fn check_box(&self, x: f64, u: f64, p: f64) -> Result<()> {
        let (ul, pl) = self.limits();
        if !(u.abs() <= ul && p.abs() <= pl && (0.0..=1.0).contains(&x)) {
            return Err(Error::OutOfBox { x, u, p });
        }
        Ok(())
    }

    /// Direct `g` feeds adaptive quadratures, so its noise must sit well
    /// below the quadrature tolerance.
    fn direct_tol(&self) -> f64 {
        self.options.g_tol.min(1e-2 * self.options.quad_tol)
    }

    /// `g(x, u, p)` from the configured source.
    pub fn g(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        match &self.g {
            GSource::Zero => Ok(0.0),
            GSource::Table(t) => match t.value(x, u, p) {
                Some(v) => Ok(v),
                None => evaluate_g(&self.field, x, u, p, self.direct_tol()),
            },
            GSource::Direct => evaluate_g(&self.field, x, u, p, self.direct_tol()),
        }
    }

    /// `(int_0^p exp(g) ds, int_0^p (p - s) exp(g) ds)`.
    fn moments(&self, x: f64, u: f64, p: f64) -> Result<(f64, f64)> {
        match &self.g {
            GSource::Zero => Ok((p, 0.5 * p * p)),
            GSource::Table(t) if t.grid().contains(x, u, p) => {
                let (lo, hi) = t.p_stencil_range(0.0, p);
                Ok(t.p_line(x, u, lo, hi).exp_moments(p))
            }
            _ => {
                let opts = AdaptiveOptions::with_tol(self.options.quad_tol);
                let m1 = adaptive(&mut |s| Ok(self.g(x, u, s)?.exp()), 0.0, p, &opts)?;
                let m2 = adaptive(&mut |s| Ok((p - s) * self.g(x, u, s)?.exp()), 0.0, p, &opts)?;
                Ok((m1, m2))
            }
        }
    }

    /// `L1(iota, u) = -int_0^{b(u)} exp(g(iota, u, p)) dp` at a Robin end.
    pub fn l1_endpoint(&self, iota: u8, u: f64) -> Result<f64> {
        let spec = self.field.spec();
        let bc = if iota == 0 { &spec.left } else { &spec.right };
        match bc.slope(u) {
            None => Ok(0.0),
            Some(b) => Ok(-self.moments(iota as f64, u, b)?.0),
        }
    }

    pub fn l1(&self, x: f64, u: f64) -> Result<f64> {
        match self.l1_rule {
            L1Rule::Zero => Ok(0.0),
            L1Rule::Constant(iota) => self.l1_endpoint(iota, u),
            L1Rule::Linear => Ok((1.0 - x) * self.l1_endpoint(0, u)? + x * self.l1_endpoint(1, u)?),
        }
    }

    pub fn l1_x(&self, u: f64) -> Result<f64> {
        match self.l1_rule {
            L1Rule::Linear => Ok(self.l1_endpoint(1, u)? - self.l1_endpoint(0, u)?),
            _ => Ok(0.0),
        }
    }

    /// Integrand of `L0`: `L1_x(x, u) + exp(g(x, u, 0)) F0(x, u, 0)`.
    pub fn l0_integrand(&self, x: f64, u: f64) -> Result<f64> {
        Ok(self.l1_x(u)? + self.g(x, u, 0.0)?.exp() * self.field.f0_cut(x, u, 0.0)?)
    }

    /// `L0(x, u)` by adaptive quadrature, bypassing the cache.
    pub fn l0_direct(&self, x: f64, u: f64) -> Result<f64> {
        adaptive(
            &mut |s| self.l0_integrand(x, s),
            0.0,
            u,
            &AdaptiveOptions::with_tol(self.options.quad_tol),
        )
    }

    pub fn l0(&self, x: f64, u: f64) -> Result<f64> {
        let Some(table) = &self.l0 else {
            return self.l0_direct(x, u);
        };
        let u_max = self.options.u_max;
        if u.abs() <= u_max {
            return Ok(table.eval(x, u).0);
        }
        let edge = u_max.copysign(u);
        let base = table.eval(x, edge).0;
        let tail = adaptive(
            &mut |s| self.l0_integrand(x, s),
            edge,
            u,
            &AdaptiveOptions::with_tol(self.options.quad_tol),
        )?;
        Ok(base + tail)
    }

    fn tabulate_l0(&self) -> Result<L0Table> {
        let x_axis = UniformAxis::new(0.0, 1.0, self.options.nx);
        let u_axis = UniformAxis::new(-self.options.u_max, self.options.u_max, self.options.l0_nodes);
        let row = |i: usize| -> Result<HermiteSpline> {
            let x = x_axis.node(i);
            let n = u_axis.n;
            let mid = n / 2;
            let slopes = u_axis
                .nodes()
                .map(|u| self.l0_integrand(x, u))
                .collect::<Result<Vec<f64>>>()?;
            let mut values = vec![0.0; n];
            let rule = gl8();
            let cell = |a: f64, b: f64| rule.try_integrate(a, b, |s| self.l0_integrand(x, s));
            for j in mid..n - 1 {
                values[j + 1] = values[j] + cell(u_axis.node(j), u_axis.node(j + 1))?;
            }
            for j in (1..=mid).rev() {
                values[j - 1] = values[j] - cell(u_axis.node(j - 1), u_axis.node(j))?;
            }
            Ok(HermiteSpline::new(u_axis, values, slopes))
        };
        #[cfg(feature = "parallel")]
        let rows: Result<Vec<HermiteSpline>> = {
            use rayon::prelude::*;
            (0..x_axis.n).into_par_iter().map(row).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let rows: Result<Vec<HermiteSpline>> = (0..x_axis.n).map(row).collect();
        Ok(L0Table { x: x_axis, rows: rows? })
    }

    /// `L_pp = exp(g)`.
    pub fn eval_lpp(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        self.check_box(x, u, p)?;
        Ok(self.g(x, u, p)?.exp())
    }

    pub fn eval_lp(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        self.check_box(x, u, p)?;
        Ok(self.moments(x, u, p)?.0 + self.l1(x, u)?)
    }

    pub fn eval_l(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        self.check_box(x, u, p)?;
        Ok(self.moments(x, u, p)?.1 + self.l0(x, u)? + self.l1(x, u)? * p)
    }

    /// `L`, `L_p` and `L_pp` sharing one pass over the `p` integrals.
    pub fn eval_all(&self, x: f64, u: f64, p: f64) -> Result<LagrangeValues> {
        self.check_box(x, u, p)?;
        let (m1, m2) = self.moments(x, u, p)?;
        let l1 = self.l1(x, u)?;
        Ok(LagrangeValues {
            l: m2 + self.l0(x, u)? + l1 * p,
            lp: m1 + l1,
            lpp: self.g(x, u, p)?.exp(),
        })
    }

    /// Grids, tolerances, boundary kinds and the range of `L_pp` on the box.
    pub fn summary(&self) -> Result<ModelSummary> {
        let (lpp_min, lpp_max) = match &self.g {
            GSource::Zero => (1.0, 1.0),
            GSource::Table(t) => t
                .values()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v.exp()), hi.max(v.exp()))),
            GSource::Direct => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let grid = TensorGrid::new(9, 9, 9, self.options.u_max, self.options.p_max);
                for x in grid.x.nodes() {
                    for u in grid.u.nodes() {
                        for p in grid.p.nodes() {
                            let v = self.g(x, u, p)?.exp();
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                }
                (lo, hi)
            }
        };
        let spec = self.field.spec();
        Ok(ModelSummary {
            problem: spec.name.clone(),
            left: format!("{:?}", spec.left),
            right: format!("{:?}", spec.right),
            cutoff_radius: self.field.cutoff().radius,
            g_source: self.g.label(),
            options: self.options,
            l1_rule: self.l1_rule,
            lpp_min,
            lpp_max,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ModelSummary {
    pub problem: String,
    pub left: String,
    pub right: String,
    pub cutoff_radius: f64,
    pub g_source: &'static str,
    pub options: ModelOptions,
    pub l1_rule: L1Rule,
    pub lpp_min: f64,
    pub lpp_max: f64,
}

impl fmt::Display for ModelSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.options;
        writeln!(f, "problem            {}", self.problem)?;
        writeln!(f, "boundary (x=0)     {}", self.left)?;
        writeln!(f, "boundary (x=1)     {}", self.right)?;
        writeln!(f, "cut-off radius R   {}", self.cutoff_radius)?;
        writeln!(f, "box                |u| <= {}, |p| <= {}", o.u_max, o.p_max)?;
        writeln!(f, "g source           {}", self.g_source)?;
        writeln!(f, "g grid             {} x {} x {} (x, u, p)", o.nx, o.nu, o.np)?;
        writeln!(f, "L0 grid            {} x {} (x, u)", o.nx, o.l0_nodes)?;
        writeln!(f, "L1 rule            {:?}", self.l1_rule)?;
        writeln!(f, "tolerances         g {:e}, quadrature {:e}", o.g_tol, o.quad_tol)?;
        writeln!(f, "L_pp on box        [{:.6e}, {:.6e}]", self.lpp_min, self.lpp_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::nonlinearity::split;
    use crate::numerics::quadrature::adaptive_plain;

    fn small() -> ModelOptions {
        ModelOptions {
            nx: 17,
            nu: 33,
            np: 33,
            l0_nodes: 401,
            ..ModelOptions::default()
        }
    }

    #[test]
    fn semilinear_neumann_reduces_to_classical_energy() {
        let lambda = 15.0;
        let spec = catalog::chafee_infante(lambda).with_boundaries(BoundarySpec::neumann(), BoundarySpec::neumann());
        let model = LagrangianModel::build(&split(&spec).unwrap(), small().with_box(1.5, 4.0)).unwrap();
        for &(x, u, p) in &[(0.1, 0.3, -1.2), (0.7, -1.4, 3.5), (1.0, 1.0, 0.0), (0.5, 0.0, 0.0)] {
            let v = model.eval_all(x, u, p).unwrap();
            let exact = 0.5 * p * p - lambda * (0.5 * u * u - 0.25 * u.powi(4));
            // 401-node L0 axis: Hermite truncation ~1e-9
            assert!((v.l - exact).abs() < 1e-8, "L({x},{u},{p}) = {} vs {exact}", v.l);
            assert!((v.lp - p).abs() < 1e-14 && v.lpp == 1.0);
        }
    }

    #[test]
    fn robin_slope_makes_boundary_term_vanish() {
        let spec = catalog::heat().with_boundaries(BoundarySpec::linear(-1.0, 0.0), BoundarySpec::linear(-1.0, 0.0));
        let model = LagrangianModel::build(&split(&spec).unwrap(), small()).unwrap();
        assert_eq!(model.l1_rule(), L1Rule::Linear);
        for &u in &[-1.0, 0.2, 2.5] {
            assert!((model.l1_endpoint(0, u).unwrap() - u).abs() < 1e-14);
            for x in [0.0, 1.0] {
                assert!((model.eval_lp(x, u, u).unwrap() - 2.0 * u).abs() < 1e-12);
                assert!(model.eval_lp(x, u, -u).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_ends_have_no_boundary_function() {
        let model = LagrangianModel::build(&split(&catalog::heat()).unwrap(), small()).unwrap();
        assert_eq!(model.l1_rule(), L1Rule::Zero);
        assert_eq!(model.eval_lp(0.3, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(model.eval_l(0.3, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn drift_weight_and_nested_double_integral() {
        let c = 0.6;
        let field = split(&catalog::advection_diffusion(c).with_cutoff(5.0)).unwrap();
        let model = LagrangianModel::build(&field, small().with_box(1.0, 1.0)).unwrap();
        let direct = LagrangianModel::build(&field, ModelOptions { direct: true, ..small().with_box(1.0, 1.0) }).unwrap();
        for &(x, u, p) in &[(0.4, 0.2, 0.8), (0.9, -0.5, -0.7)] {
            let lpp = model.eval_lpp(x, u, p).unwrap();
            assert!((lpp - (c * x).exp()).abs() < 1e-8);
            // nested form of the p-part, integrated twice with g from the model
            let inner = |p1: f64| adaptive_plain(|s| model.g(x, u, s).unwrap().exp(), 0.0, p1, 1e-12).unwrap();
            let nested = adaptive_plain(inner, 0.0, p, 1e-11).unwrap();
            let l = model.eval_l(x, u, p).unwrap();
            let expect = nested + model.l0(x, u).unwrap() + model.l1(x, u).unwrap() * p;
            assert!((l - expect).abs() < 1e-10, "{l} vs {expect}");
            assert!((l - direct.eval_l(x, u, p).unwrap()).abs() < 1e-7);
        }
    }

    #[test]
    fn l0_cache_matches_direct_quadrature() {
        let spec = catalog::quasilinear_demo(catalog::Reaction::Bistable(4.0))
            .with_boundaries(BoundarySpec::linear(-0.5, 0.1), BoundarySpec::neumann())
            .with_cutoff(3.0);
        let model = LagrangianModel::build(&split(&spec).unwrap(), small().with_box(1.5, 1.5)).unwrap();
        // x on table nodes: off-node values carry the x-interpolation error
        for &(x, u) in &[(0.0, 0.7), (0.3125, -1.2), (1.0, 1.5), (0.625, 1.9), (0.625, -1.7)] {
            let cached = model.l0(x, u).unwrap();
            let direct = model.l0_direct(x, u).unwrap();
            assert!((cached - direct).abs() < 1e-6, "L0({x},{u}): {cached} vs {direct}");
        }
        assert_eq!(model.l0(0.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn far_points_are_rejected() {
        let model = LagrangianModel::build(&split(&catalog::heat()).unwrap(), small()).unwrap();
        assert!(matches!(model.eval_l(0.5, 100.0, 0.0), Err(Error::OutOfBox { .. })));
        assert!(model.summary().unwrap().to_string().contains("L_pp on box"));
    }
}
