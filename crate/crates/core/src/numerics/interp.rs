//! Uniform axes and the local cubic stencils used by the lookup tables.

/// `n` equispaced nodes from `start` to `end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformAxis {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl UniformAxis {
    pub fn new(start: f64, end: f64, n: usize) -> Self {
        assert!(n >= 2 && end > start, "axis needs two nodes and positive length");
        Self { start, end, n }
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.n - 1) as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.end
        } else {
            self.start + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.end
    }

    /// Cell index `i` and local coordinate `t` in `[0, 1]` with
    /// `x = node(i) + t * step`.
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x - self.start) / self.step();
        let i = (s.floor().max(0.0) as usize).min(self.n - 2);
        (i, s - i as f64)
    }

    /// First node of a 4-point stencil around `x` and the four Lagrange
    /// weights. Near the ends the stencil is shifted inward so it stays
    /// cubic; axes with fewer than four nodes degrade to linear.
    #[inline]
    pub fn cubic_stencil(&self, x: f64) -> (usize, [f64; 4]) {
        if self.n < 4 {
            let (i, t) = self.locate(x);
            return (i, [1.0 - t, t, 0.0, 0.0]);
        }
        let (i, t) = self.locate(x);
        let first = i.saturating_sub(1).min(self.n - 4);
        // local coordinate relative to the first stencil node
        let s = t + (i - first) as f64;
        (first, lagrange4(s))
    }

    /// Like [`cubic_stencil`](Self::cubic_stencil) but also returns the
    /// weights of the derivative with respect to `x`.
    #[inline]
    pub fn cubic_stencil_with_derivative(&self, x: f64) -> (usize, [f64; 4], [f64; 4]) {
        let h = self.step();
        if self.n < 4 {
            let (i, t) = self.locate(x);
            return (i, [1.0 - t, t, 0.0, 0.0], [-1.0 / h, 1.0 / h, 0.0, 0.0]);
        }
        let (i, t) = self.locate(x);
        let first = i.saturating_sub(1).min(self.n - 4);
        let s = t + (i - first) as f64;
        let d = lagrange4_derivative(s);
        (first, lagrange4(s), [d[0] / h, d[1] / h, d[2] / h, d[3] / h])
    }
}

/// Lagrange basis on nodes 0, 1, 2, 3 evaluated at `s`.
#[inline]
pub fn lagrange4(s: f64) -> [f64; 4] {
    let a = s;
    let b = s - 1.0;
    let c = s - 2.0;
    let d = s - 3.0;
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

#[inline]
pub fn lagrange4_derivative(s: f64) -> [f64; 4] {
    let a = s;
    let b = s - 1.0;
    let c = s - 2.0;
    let d = s - 3.0;
    [
        -(c * d + b * d + b * c) / 6.0,
        (c * d + a * d + a * c) / 2.0,
        -(b * d + a * d + a * b) / 2.0,
        (b * c + a * c + a * b) / 6.0,
    ]
}

/// Piecewise cubic Hermite interpolant from node values and node slopes.
#[derive(Debug, Clone)]
pub struct HermiteSpline {
    pub axis: UniformAxis,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl HermiteSpline {
    pub fn new(axis: UniformAxis, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert_eq!(values.len(), axis.n);
        assert_eq!(slopes.len(), axis.n);
        Self { axis, values, slopes }
    }

    /// Value and first derivative at `x`.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let h = self.axis.step();
        let (i, t) = self.axis.locate(x);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let d = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1;
        (v, d / h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_stencil_reproduces_cubics_everywhere() {
        let axis = UniformAxis::new(-1.0, 2.0, 7);
        let f = |x: f64| 2.0 * x.powi(3) - x * x + 0.5 * x - 3.0;
        let df = |x: f64| 6.0 * x * x - 2.0 * x + 0.5;
        let vals: Vec<f64> = axis.nodes().map(f).collect();
        for k in 0..=300 {
            let x = -1.0 + 3.0 * k as f64 / 300.0;
            let (first, w, dw) = axis.cubic_stencil_with_derivative(x);
            let v: f64 = (0..4).map(|j| w[j] * vals[first + j]).sum();
            let d: f64 = (0..4).map(|j| dw[j] * vals[first + j]).sum();
            assert!((v - f(x)).abs() < 1e-12, "x={x}");
            assert!((d - df(x)).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn hermite_is_exact_for_cubics() {
        let axis = UniformAxis::new(0.0, 1.0, 5);
        let f = |x: f64| x.powi(3) - 4.0 * x;
        let df = |x: f64| 3.0 * x * x - 4.0;
        let s = HermiteSpline::new(axis, axis.nodes().map(f).collect(), axis.nodes().map(df).collect());
        for k in 0..=50 {
            let x = k as f64 / 50.0;
            let (v, d) = s.eval(x);
            assert!((v - f(x)).abs() < 1e-13 && (d - df(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn locate_clamps_to_last_cell() {
        let axis = UniformAxis::new(0.0, 1.0, 11);
        assert_eq!(axis.locate(1.0).0, 9);
        let (i, t) = axis.locate(1.0);
        assert!((t - 1.0).abs() < 1e-12 && i == 9);
        assert_eq!(axis.locate(0.0), (0, 0.0));
    }
}
