//! Gauss–Legendre rules, fixed and adaptive.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = ((4.0 * i as f64 + 3.0) / (4.0 * nf + 2.0) * std::f64::consts::PI).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]` (either orientation).
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum::<f64>()
            * half
    }

    pub fn try_integrate<E>(
        &self,
        a: f64,
        b: f64,
        mut f: impl FnMut(f64) -> Result<f64, E>,
    ) -> Result<f64, E> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * t)?;
        }
        Ok(acc * half)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Shared 4-, 8- and 10-point rules.
pub fn gl4() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(4))
}

pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

pub fn gl10() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(10))
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    /// Upper bound on bisections, so a noisy integrand fails instead of
    /// refining forever.
    pub max_panels: usize,
}

impl AdaptiveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            max_depth: 30,
            max_panels: 4000,
        }
    }
}

/// Adaptive Gauss–Legendre quadrature with panel bisection: a panel is
/// accepted when its 10-point value agrees with the sum over its halves. The
/// refined value is returned.
pub fn adaptive<F>(f: &mut F, a: f64, b: f64, opts: &AdaptiveOptions) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let rule = gl10();
    let whole = rule.try_integrate(a, b, &mut *f)?;
    let mut budget = opts.max_panels;
    refine(f, rule, (a, b, whole), opts.abs_tol, opts, 0, &mut budget)
}

fn refine<F>(
    f: &mut F,
    rule: &GaussLegendre,
    (a, b, whole): (f64, f64, f64),
    abs_tol: f64,
    opts: &AdaptiveOptions,
    depth: u32,
    budget: &mut usize,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mid = 0.5 * (a + b);
    let left = rule.try_integrate(a, mid, &mut *f)?;
    let right = rule.try_integrate(mid, b, &mut *f)?;
    let refined = left + right;
    let err = (refined - whole).abs();
    if err <= abs_tol.max(opts.rel_tol * refined.abs()) || !(err.is_finite()) {
        if !refined.is_finite() {
            return Err(Error::QuadratureFailure { a, b, estimate: err });
        }
        return Ok(refined);
    }
    if depth >= opts.max_depth || *budget == 0 {
        // a jump or kink the bisection cannot resolve; tolerable if small
        if err <= opts.abs_tol {
            return Ok(refined);
        }
        return Err(Error::QuadratureFailure { a, b, estimate: err });
    }
    *budget -= 1;
    let l = refine(f, rule, (a, mid, left), 0.5 * abs_tol, opts, depth + 1, budget)?;
    let r = refine(f, rule, (mid, b, right), 0.5 * abs_tol, opts, depth + 1, budget)?;
    Ok(l + r)
}

/// Infallible convenience wrapper around [`adaptive`].
pub fn adaptive_plain(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    adaptive(&mut |x| Ok(f(x)), a, b, &AdaptiveOptions::with_tol(tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_weights_sum_to_two_and_are_exact_for_polynomials() {
        for n in [1, 2, 4, 7, 10, 16] {
            let r = GaussLegendre::new(n);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // exact up to degree 2n - 1
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got = r.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
            assert!((got - exact).abs() < 1e-13, "n={n}");
            let got = r.integrate(0.0, 1.0, |x| x.powi(deg as i32 - 1));
            assert!((got - 1.0 / deg as f64).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let f = |x: f64| 1.0 / (1e-4 + x * x);
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        let got = adaptive_plain(f, -1.0, 1.0, 1e-10).unwrap();
        assert!((got - exact).abs() / exact < 1e-10, "{got} vs {exact}");
    }

    #[test]
    fn reversed_interval_changes_sign() {
        let got = adaptive_plain(|x| x.exp(), 1.0, 0.0, 1e-12).unwrap();
        assert!((got + (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn errors_propagate() {
        let mut f = |x: f64| {
            if x > 0.5 {
                Err(Error::StepUnderflow { at: x, step: 0.0 })
            } else {
                Ok(x)
            }
        };
        assert!(adaptive(&mut f, 0.0, 1.0, &AdaptiveOptions::with_tol(1e-10)).is_err());
    }
}
