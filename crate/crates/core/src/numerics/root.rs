//! Scalar root finding for monotone functions.
//!
//! Parabolicity makes the law monotone in both `q` and `r`, so a bracket can
//! always be grown from a guess by marching downhill on `|f|`. Inside the
//! bracket a Newton step is taken whenever it stays inside and shrinks the
//! residual, otherwise the interval is bisected.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Absolute residual accepted as a root.
    pub tol: f64,
    pub max_iter: usize,
    /// Doublings of the search step before giving up on a bracket.
    pub max_expansions: usize,
    /// Initial search step, relative to `1 + |guess|`.
    pub initial_step: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
            max_expansions: 80,
            initial_step: 0.5,
        }
    }
}

/// An interval `[lo, hi]` on which `f` changes sign.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

fn finite(what: &'static str, x: f64, fx: f64) -> Result<f64> {
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(Error::EvaluationDomain {
            at: format!("{what} = {x}"),
        })
    }
}

/// Grows a bracket around `guess`, staying strictly inside the open interval
/// `domain`. Returns `Ok(Err(root))` when a sample hits the root exactly.
pub fn expand_bracket<F>(
    what: &'static str,
    f: &mut F,
    guess: f64,
    domain: (f64, f64),
    opts: &RootOptions,
) -> Result<std::result::Result<Bracket, f64>>
where
    F: FnMut(f64) -> f64,
{
    let (dlo, dhi) = domain;
    let x0 = if guess > dlo && guess < dhi {
        guess
    } else if dlo.is_finite() && dhi.is_finite() {
        0.5 * (dlo + dhi)
    } else if dlo.is_finite() {
        dlo + 1.0
    } else {
        dhi - 1.0
    };
    let f0 = finite(what, x0, f(x0))?;
    if f0 == 0.0 {
        return Ok(Err(x0));
    }
    let mut step = opts.initial_step * (1.0 + x0.abs());

    // Probe one step to each side and walk in the direction that reduces |f|.
    let probe = |x: f64, s: f64, dir: f64| {
        let target = x + dir * s;
        let bound = if dir > 0.0 { dhi } else { dlo };
        if bound.is_finite() && (target - bound) * dir >= 0.0 {
            0.5 * (x + bound)
        } else {
            target
        }
    };
    let x_right = probe(x0, step, 1.0);
    let f_right = finite(what, x_right, f(x_right))?;
    if f_right == 0.0 {
        return Ok(Err(x_right));
    }
    if f_right.signum() != f0.signum() {
        return Ok(Ok(Bracket {
            lo: x0,
            hi: x_right,
            f_lo: f0,
            f_hi: f_right,
        }));
    }
    let dir = if f_right.abs() < f0.abs() { 1.0 } else { -1.0 };
    let (mut x, mut fx) = if dir > 0.0 { (x_right, f_right) } else { (x0, f0) };

    for _ in 0..opts.max_expansions {
        step *= 2.0;
        let xn = probe(x, step, dir);
        if xn == x {
            break;
        }
        let fn_ = finite(what, xn, f(xn))?;
        if fn_ == 0.0 {
            return Ok(Err(xn));
        }
        if fn_.signum() != fx.signum() {
            let (lo, hi, f_lo, f_hi) = if dir > 0.0 { (x, xn, fx, fn_) } else { (xn, x, fn_, fx) };
            return Ok(Ok(Bracket { lo, hi, f_lo, f_hi }));
        }
        x = xn;
        fx = fn_;
    }
    Err(Error::NoBracket {
        what,
        lo: if dir > 0.0 { x0 } else { x },
        hi: if dir > 0.0 { x } else { x0 },
    })
}

/// Safeguarded Newton iteration inside a sign-change bracket. `fdf` returns
/// the value and derivative at a point.
pub fn newton_bracketed<F>(
    what: &'static str,
    mut fdf: F,
    bracket: Bracket,
    guess: f64,
    opts: &RootOptions,
) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let Bracket {
        mut lo,
        mut hi,
        mut f_lo,
        f_hi,
    } = bracket;
    debug_assert!(f_lo.signum() != f_hi.signum());
    if f_lo.abs() <= opts.tol {
        return Ok(lo);
    }
    if f_hi.abs() <= opts.tol {
        return Ok(hi);
    }

    let mut x = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    let mut dx_old = hi - lo;
    let mut dx = dx_old;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let (fx, dfx) = fdf(x);
        finite(what, x, fx)?;
        residual = fx.abs();
        if residual <= opts.tol {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(x);
        }
        let newton = x - fx / dfx;
        let usable = dfx.is_finite() && dfx != 0.0 && newton > lo && newton < hi;
        // Bisect when Newton leaves the bracket or does not halve the step.
        if !usable || (2.0 * fx).abs() > (dx_old * dfx).abs() {
            dx_old = dx;
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx_old = dx;
            dx = fx / dfx;
            x = newton;
        }
    }
    Err(Error::NoConvergence {
        what,
        iterations: opts.max_iter,
        residual,
    })
}

/// Finds the root of a monotone function starting from `guess`.
pub fn solve_monotone<F, D>(
    what: &'static str,
    mut f: F,
    mut df: D,
    guess: f64,
    domain: (f64, f64),
    opts: &RootOptions,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    // Plain Newton from the guess settles mild nonlinearities in a few steps;
    // the bracketed iteration is the fallback.
    let (dlo, dhi) = domain;
    let mut x = guess;
    let mut best = f64::INFINITY;
    for _ in 0..8 {
        if !(x > dlo && x < dhi) {
            break;
        }
        let fx = f(x);
        if !fx.is_finite() || fx.abs() >= best {
            break;
        }
        if fx.abs() <= opts.tol {
            return Ok(x);
        }
        best = fx.abs();
        let d = df(x);
        if !(d.is_finite() && d != 0.0) {
            break;
        }
        x -= fx / d;
    }
    let bracket = match expand_bracket(what, &mut f, guess, domain, opts)? {
        Ok(b) => b,
        Err(root) => return Ok(root),
    };
    newton_bracketed(what, |x| (f(x), df(x)), bracket, guess, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
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

    #[test]
    fn matches_bisection_for_perturbed_linear() {
        let g = |q: f64| q + 0.1 * q.sin() - 1.0;
        let oracle = bisect(g, 0.0, 2.0);
        let root = solve_monotone(
            "q",
            g,
            |q| 1.0 + 0.1 * q.cos(),
            0.0,
            (f64::NEG_INFINITY, f64::INFINITY),
            &RootOptions::default(),
        )
        .unwrap();
        assert!((root - oracle).abs() < 1e-12, "{root} vs {oracle}");
    }

    #[test]
    fn decreasing_function_far_from_guess() {
        let f = |x: f64| -(x - 1234.5);
        let root = solve_monotone("x", f, |_| -1.0, 0.0, (f64::NEG_INFINITY, f64::INFINITY), &RootOptions::default()).unwrap();
        assert!((root - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn bad_derivative_falls_back_to_bisection() {
        let f = |x: f64| x.powi(3) - 8.0;
        let root = solve_monotone("x", f, |_| 1e-30, 0.0, (f64::NEG_INFINITY, f64::INFINITY), &RootOptions::default()).unwrap();
        assert!((root - 2.0).abs() < 1e-12);
    }

    #[test]
    fn respects_open_domain() {
        // root at 0.3 within (-1, 1), f -> +-inf at the ends
        let f = |x: f64| x.atanh() - 0.3f64.atanh();
        let root = solve_monotone("x", f, |x| 1.0 / (1.0 - x * x), 0.99, (-1.0, 1.0), &RootOptions::default()).unwrap();
        assert!((root - 0.3).abs() < 1e-10);
    }

    #[test]
    fn no_sign_change_reports_no_bracket() {
        let f = |x: f64| x * x + 1.0;
        let opts = RootOptions {
            max_expansions: 20,
            ..Default::default()
        };
        let err = solve_monotone("x", f, |x| 2.0 * x, 3.0, (f64::NEG_INFINITY, f64::INFINITY), &opts).unwrap_err();
        assert!(matches!(err, Error::NoBracket { .. }), "{err:?}");
    }

    #[test]
    fn nan_is_a_domain_error() {
        let f = |x: f64| if x > 0.5 { f64::NAN } else { x - 2.0 };
        let err = solve_monotone("x", f, |_| 1.0, 0.0, (f64::NEG_INFINITY, f64::INFINITY), &RootOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EvaluationDomain { .. }));
    }
}
