//! The log-weight `g(x, u, p)` with `L_pp = exp(g)`.
//!
//! `g` solves the transport equation `g_x + p g_u + F0 g_p = -F0_p` with
//! `g(0, u, p) = 0`. Its characteristics are the equilibrium ODE
//! `u' = p, p' = F0(x, u, p)`, along which `g' = -F0_p`. A query integrates
//! the augmented system backward from `x` to the slice `x = 0`, using the
//! cut-off `F0` so every characteristic exists on `[0, 1]`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nonlinearity::SplitField;
use crate::numerics::interp::UniformAxis;
use crate::numerics::ode::{integrate, OdeOptions};
use crate::numerics::quadrature::gl8;

/// Default local error tolerance of the characteristic integration.
pub const DEFAULT_G_TOL: f64 = 1e-9;

/// A point on a characteristic together with the accumulated log-weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicState {
    pub x: f64,
    pub u: f64,
    pub p: f64,
    pub g: f64,
}

fn rhs(field: &SplitField, x: f64, y: &[f64; 3]) -> Result<[f64; 3]> {
    let (f0, f0p) = field.f0_cut_pair(x, y[0], y[1])?;
    Ok([y[1], f0, -f0p])
}

/// Follows the characteristic through `(x, u, p)` back to `x = 0`. The
/// returned state carries the foot point `(0, u0, p0)` and `g(x, u, p)`.
pub fn trace_to_foot(field: &SplitField, x: f64, u: f64, p: f64, tol: f64) -> Result<CharacteristicState> {
    if x == 0.0 {
        return Ok(CharacteristicState { x: 0.0, u, p, g: 0.0 });
    }
    let end = integrate(|s, y| rhs(field, s, y), x, [u, p, 0.0], 0.0, &OdeOptions::with_tol(tol))?;
    Ok(CharacteristicState {
        x: 0.0,
        u: end[0],
        p: end[1],
        g: -end[2],
    })
}

/// Integrates the characteristic starting at `(0, u0, p0)` forward to `x`,
/// accumulating `g` from zero.
pub fn integrate_forward(field: &SplitField, u0: f64, p0: f64, x: f64, tol: f64) -> Result<CharacteristicState> {
    let end = integrate(|s, y| rhs(field, s, y), 0.0, [u0, p0, 0.0], x, &OdeOptions::with_tol(tol))?;
    Ok(CharacteristicState {
        x,
        u: end[0],
        p: end[1],
        g: end[2],
    })
}

/// `g(x, u, p)` by direct integration along the characteristic.
pub fn evaluate_g(field: &SplitField, x: f64, u: f64, p: f64, tol: f64) -> Result<f64> {
    if field.has_trivial_weight() || x == 0.0 {
        return Ok(0.0);
    }
    Ok(trace_to_foot(field, x, u, p, tol)?.g)
}

/// Tensor grid over `[0, 1] x [-U, U] x [-P, P]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorGrid {
    pub x: UniformAxis,
    pub u: UniformAxis,
    pub p: UniformAxis,
}

impl TensorGrid {
    pub fn new(nx: usize, nu: usize, np: usize, u_max: f64, p_max: f64) -> Self {
        Self {
            x: UniformAxis::new(0.0, 1.0, nx),
            u: UniformAxis::new(-u_max, u_max, nu),
            p: UniformAxis::new(-p_max, p_max, np),
        }
    }

    pub fn len(&self) -> usize {
        self.x.n * self.u.n * self.p.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.u.n + j) * self.p.n + k
    }

    #[inline]
    pub fn contains(&self, x: f64, u: f64, p: f64) -> bool {
        self.x.contains(x) && self.u.contains(u) && self.p.contains(p)
    }
}

/// Node values of `g` on a [`TensorGrid`] with a piecewise tricubic
/// interpolant (4-point Lagrange stencils per axis, shifted inward at the
/// edges).
#[derive(Debug, Clone, PartialEq)]
pub struct GTable {
    grid: TensorGrid,
    values: Vec<f64>,
}

/// Evaluates `g` at every node of `grid`.
pub fn tabulate_g(field: &SplitField, grid: TensorGrid, tol: f64) -> Result<GTable> {
    if field.has_trivial_weight() {
        return Ok(GTable {
            grid,
            values: vec![0.0; grid.len()],
        });
    }
    let node = |idx: usize| {
        let k = idx % grid.p.n;
        let j = (idx / grid.p.n) % grid.u.n;
        let i = idx / (grid.p.n * grid.u.n);
        evaluate_g(field, grid.x.node(i), grid.u.node(j), grid.p.node(k), tol)
    };
    #[cfg(feature = "parallel")]
    let values: Result<Vec<f64>> = {
        use rayon::prelude::*;
        (0..grid.len()).into_par_iter().map(node).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Result<Vec<f64>> = (0..grid.len()).map(node).collect();
    Ok(GTable { grid, values: values? })
}

impl GTable {
    pub fn from_values(grid: TensorGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "table has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Interpolated `g`, or `None` outside the grid.
    pub fn value(&self, x: f64, u: f64, p: f64) -> Option<f64> {
        if !self.grid.contains(x, u, p) {
            return None;
        }
        let (ix, wx) = self.grid.x.cubic_stencil(x);
        let (iu, wu) = self.grid.u.cubic_stencil(u);
        let (ip, wp) = self.grid.p.cubic_stencil(p);
        let mut acc = 0.0;
        for a in 0..4 {
            if wx[a] == 0.0 {
                continue;
            }
            for b in 0..4 {
                let w = wx[a] * wu[b];
                if w == 0.0 {
                    continue;
                }
                let base = self.grid.index(ix + a, iu + b, ip);
                let mut line = 0.0;
                for c in 0..4 {
                    line += wp[c] * self.values[base + c];
                }
                acc += w * line;
            }
        }
        Some(acc)
    }

    /// Restriction of the interpolant to the line `(x, u, .)`, contracted over
    /// `x` and `u` for the `p` nodes in `[k_lo, k_hi]`.
    pub fn p_line(&self, x: f64, u: f64, k_lo: usize, k_hi: usize) -> PLine<'_> {
        let (ix, wx) = self.grid.x.cubic_stencil(x);
        let (iu, wu) = self.grid.u.cubic_stencil(u);
        let mut nodes = vec![0.0; k_hi + 1 - k_lo];
        for a in 0..4 {
            for b in 0..4 {
                let w = wx[a] * wu[b];
                if w == 0.0 {
                    continue;
                }
                let base = self.grid.index(ix + a, iu + b, 0);
                for (slot, k) in nodes.iter_mut().zip(k_lo..=k_hi) {
                    *slot += w * self.values[base + k];
                }
            }
        }
        PLine {
            axis: &self.grid.p,
            k_lo,
            nodes,
        }
    }

    /// `p`-node range whose stencils cover `[min(a, b), max(a, b)]`.
    pub fn p_stencil_range(&self, a: f64, b: f64) -> (usize, usize) {
        let axis = &self.grid.p;
        let lo = a.min(b).max(axis.start);
        let hi = a.max(b).min(axis.end);
        let (first_lo, _) = axis.cubic_stencil(lo);
        let (first_hi, _) = axis.cubic_stencil(hi);
        (first_lo, (first_hi + 3).min(axis.n - 1))
    }

    /// Writes the table as CSV: header `x,u,p,g`, rows in row-major
    /// `x, u, p` order, 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "x,u,p,g")?;
        for i in 0..self.grid.x.n {
            let x = self.grid.x.node(i);
            for j in 0..self.grid.u.n {
                let u = self.grid.u.node(j);
                for k in 0..self.grid.p.n {
                    let p = self.grid.p.node(k);
                    writeln!(w, "{x:.16e},{u:.16e},{p:.16e},{:.16e}", self.node(i, j, k))?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`write_csv`](Self::write_csv).
    pub fn read_csv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "x,u,p,g" {
            return Err(Error::Config(format!("unexpected g-table header '{header}'")));
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut row = [0.0; 4];
            let mut count = 0;
            for (slot, field) in row.iter_mut().zip(line.split(',')) {
                *slot = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("g-table row {}: bad number '{field}'", n + 2)))?;
                count += 1;
            }
            if count != 4 {
                return Err(Error::Config(format!("g-table row {} has {count} columns", n + 2)));
            }
            rows.push(row);
        }
        let axis_of = |col: usize, stride: usize, count: usize| -> Result<UniformAxis> {
            let first = rows.first().ok_or_else(|| Error::Config("empty g-table".into()))?[col];
            let last = rows[(count - 1) * stride][col];
            Ok(UniformAxis::new(first, last, count))
        };
        let np = rows.iter().take_while(|r| r[0] == rows[0][0] && r[1] == rows[0][1]).count();
        let nu = rows.iter().take_while(|r| r[0] == rows[0][0]).count() / np.max(1);
        let nx = rows.len() / (nu * np).max(1);
        if nx * nu * np != rows.len() || nx < 2 || nu < 2 || np < 2 {
            return Err(Error::Config("g-table is not a full tensor grid".into()));
        }
        let grid = TensorGrid {
            x: axis_of(0, nu * np, nx)?,
            u: axis_of(1, np, nu)?,
            p: axis_of(2, 1, np)?,
        };
        for (idx, row) in rows.iter().enumerate() {
            let k = idx % np;
            let j = (idx / np) % nu;
            let i = idx / (np * nu);
            let expect = [grid.x.node(i), grid.u.node(j), grid.p.node(k)];
            for d in 0..3 {
                if (row[d] - expect[d]).abs() > 1e-9 * (1.0 + expect[d].abs()) {
                    return Err(Error::Config(format!("g-table row {} is off the uniform grid", idx + 2)));
                }
            }
        }
        let values = rows.into_iter().map(|r| r[3]).collect();
        Ok(Self { grid, values })
    }
}

/// Values of the interpolant along one `p` line.
#[derive(Debug, Clone)]
pub struct PLine<'a> {
    axis: &'a UniformAxis,
    k_lo: usize,
    nodes: Vec<f64>,
}

impl PLine<'_> {
    #[inline]
    pub fn value(&self, p: f64) -> f64 {
        let (first, w) = self.axis.cubic_stencil(p);
        let off = first - self.k_lo;
        w[0] * self.nodes[off] + w[1] * self.nodes[off + 1] + w[2] * self.nodes[off + 2] + w[3] * self.nodes[off + 3]
    }

    /// `(int_0^p exp(g) ds, int_0^p (p - s) exp(g) ds)` with panels aligned to
    /// the table cells, so each panel integrates the exponential of a single
    /// cubic. `p` must lie inside the axis.
    pub fn exp_moments(&self, p: f64) -> (f64, f64) {
        if p == 0.0 {
            return (0.0, 0.0);
        }
        let rule = gl8();
        let h = self.axis.step();
        // interior cell boundaries strictly between 0 and p, in order from 0
        let (lo, hi) = (p.min(0.0), p.max(0.0));
        let k_first = ((lo - self.axis.start) / h).floor() as i64 + 1;
        let k_last = ((hi - self.axis.start) / h).ceil() as i64 - 1;
        let mut cuts: Vec<f64> = (k_first..=k_last)
            .map(|k| self.axis.start + k as f64 * h)
            .filter(|&b| b > lo && b < hi)
            .collect();
        if p < 0.0 {
            cuts.reverse();
        }
        cuts.push(p);
        let mut first = 0.0;
        let mut second = 0.0;
        let mut a = 0.0;
        for b in cuts {
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                let s = mid + half * t;
                let e = self.value(s).exp();
                first += w * half * e;
                second += w * half * (p - s) * e;
            }
            a = b;
        }
        (first, second)
    }
}
