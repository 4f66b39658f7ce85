//! Residual checks tying each constructed object back to its defining
//! equation. Every check reports its worst value, where it occurred, the
//! tolerance and a verdict.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::characteristics::evaluate_g;
use crate::energy::EnergyReading;
use crate::error::Result;
use crate::lagrangian::LagrangianModel;
use crate::nonlinearity::{BoundarySpec, SplitField};
use crate::pde::{centered_derivative, TrajectoryRecord};

pub const TRANSPORT_TOL: f64 = 1e-5;
pub const LAGRANGE_TOL: f64 = 1e-4;
pub const SLICE_TOL: f64 = 1e-6;
pub const BOUNDARY_TOL: f64 = 1e-8;
pub const DECAY_REL_TOL: f64 = 1e-2;
pub const MONOTONE_TOL: f64 = 1e-8;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub worst_value: f64,
    pub worst_location: String,
    pub tolerance: f64,
    pub pass: bool,
    pub samples: usize,
}

impl Check {
    /// Passes when `worst_value <= tolerance`; NaN fails.
    pub fn new(name: impl Into<String>, worst_value: f64, worst_location: String, tolerance: f64, samples: usize) -> Self {
        Self {
            name: name.into(),
            pass: worst_value <= tolerance,
            worst_value,
            worst_location,
            tolerance,
            samples,
        }
    }

    /// The same outcome judged against another tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.worst_value <= tolerance;
        self
    }
}

/// Tolerances for the model and flow checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub transport: f64,
    pub lagrange: f64,
    pub slice: f64,
    pub boundary: f64,
    pub decay_rel: f64,
    pub monotone: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            transport: TRANSPORT_TOL,
            lagrange: LAGRANGE_TOL,
            slice: SLICE_TOL,
            boundary: BOUNDARY_TOL,
            decay_rel: DECAY_REL_TOL,
            monotone: MONOTONE_TOL,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `check,worst_value,tolerance,pass,worst_location,samples`
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "check,worst_value,tolerance,pass,worst_location,samples")?;
        for c in &self.checks {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{},\"{}\",{}",
                c.name, c.worst_value, c.tolerance, c.pass, c.worst_location, c.samples
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<26} {:>12} {:>10}  {:<4}  worst at", "check", "worst", "tol", "")?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<26} {:>12.3e} {:>10.1e}  {:<4}  {}",
                c.name,
                c.worst_value,
                c.tolerance,
                if c.pass { "PASS" } else { "FAIL" },
                c.worst_location
            )?;
        }
        Ok(())
    }
}

/// Axis-aligned sampling box in `(x, u, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub x: (f64, f64),
    pub u: (f64, f64),
    pub p: (f64, f64),
}

impl SampleBox {
    /// `x` in `[0.1, 0.9]`, `|u| <= u_max`, `|p| <= p_max`.
    pub fn interior(u_max: f64, p_max: f64) -> Self {
        Self {
            x: (0.1, 0.9),
            u: (-u_max, u_max),
            p: (-p_max, p_max),
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |(a, b): (f64, f64)| if a < b { rng.gen_range(a..=b) } else { a };
        (0..n).map(|_| [draw(self.x), draw(self.u), draw(self.p)]).collect()
    }
}

fn at(x: f64, u: f64, p: f64) -> String {
    format!("x={x:.6} u={u:.6} p={p:.6}")
}

#[inline]
fn step1(c: f64) -> f64 {
    1e-4 * (1.0 + c.abs())
}

#[inline]
fn step2(c: f64) -> f64 {
    1e-3 * (1.0 + c.abs())
}

/// Fourth-order central difference `f'(c)` with step `h`.
fn d1(f: impl Fn(f64) -> Result<f64>, c: f64, h: f64) -> Result<f64> {
    Ok((8.0 * (f(c + h)? - f(c - h)?) - (f(c + 2.0 * h)? - f(c - 2.0 * h)?)) / (12.0 * h))
}

/// Tracks the worst absolute residual over samples.
struct Worst {
    value: f64,
    location: String,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            location: "-".into(),
        }
    }

    fn offer(&mut self, value: f64, location: impl FnOnce() -> String) {
        if value > self.value || value.is_nan() && !self.value.is_nan() {
            self.value = value;
            self.location = location();
        }
    }
}

/// Direct `g` at a tolerance fine enough for finite differencing.
pub fn direct_g(field: &SplitField) -> impl Fn(f64, f64, f64) -> Result<f64> + '_ {
    move |x, u, p| evaluate_g(field, x, u, p, 1e-12)
}

/// `g_x + p g_u + F0 g_p + F0_p` by central differences of `g_eval`.
/// First derivatives use the five-point stencil throughout this module.
pub fn check_transport(
    g_eval: &dyn Fn(f64, f64, f64) -> Result<f64>,
    field: &SplitField,
    bx: &SampleBox,
    n_samples: usize,
    seed: u64,
) -> Result<Check> {
    let mut worst = Worst::new();
    for [x, u, p] in bx.sample(n_samples, seed) {
        let (hx, hu, hp) = (step1(x), step1(u), step1(p));
        let gx = d1(|s| g_eval(s, u, p), x, hx)?;
        let gu = d1(|s| g_eval(x, s, p), u, hu)?;
        let gp = d1(|s| g_eval(x, u, s), p, hp)?;
        let (f0, f0p) = field.f0_cut_pair(x, u, p)?;
        worst.offer((gx + p * gu + f0 * gp + f0p).abs(), || at(x, u, p));
    }
    Ok(Check::new("transport", worst.value, worst.location, TRANSPORT_TOL, n_samples))
}

/// `L_u - L_px - p L_pu - F0 L_pp` with every partial by central differences
/// of `eval_L`.
pub fn check_lagrange_pde(model: &LagrangianModel, bx: &SampleBox, n_samples: usize, seed: u64) -> Result<Check> {
    let field = model.field();
    let l = |x: f64, u: f64, p: f64| model.eval_l(x, u, p);
    let mut worst = Worst::new();
    for [x, u, p] in bx.sample(n_samples, seed) {
        let hu = step1(u);
        let lu = d1(|s| l(x, s, p), u, hu)?;
        let (hx, hp, hu2) = (step2(x), step2(p), step2(u));
        let lpx = (l(x + hx, u, p + hp)? - l(x + hx, u, p - hp)? - l(x - hx, u, p + hp)? + l(x - hx, u, p - hp)?)
            / (4.0 * hx * hp);
        let lpu = (l(x, u + hu2, p + hp)? - l(x, u + hu2, p - hp)? - l(x, u - hu2, p + hp)? + l(x, u - hu2, p - hp)?)
            / (4.0 * hu2 * hp);
        let lpp = (l(x, u, p + hp)? - 2.0 * l(x, u, p)? + l(x, u, p - hp)?) / (hp * hp);
        let f0 = field.f0_cut(x, u, p)?;
        worst.offer((lu - lpx - p * lpu - f0 * lpp).abs(), || at(x, u, p));
    }
    Ok(Check::new("lagrange_pde", worst.value, worst.location, LAGRANGE_TOL, n_samples))
}

/// `L_ppx + p L_ppu + F0 L_ppp + F0_p L_pp` from differences of `eval_Lpp`.
pub fn check_lagrange_pde_p(model: &LagrangianModel, bx: &SampleBox, n_samples: usize, seed: u64) -> Result<Check> {
    let field = model.field();
    let w = |x: f64, u: f64, p: f64| model.eval_lpp(x, u, p);
    let mut worst = Worst::new();
    for [x, u, p] in bx.sample(n_samples, seed) {
        let (hx, hu, hp) = (step1(x), step1(u), step1(p));
        let wx = d1(|s| w(s, u, p), x, hx)?;
        let wu = d1(|s| w(x, s, p), u, hu)?;
        let wp = d1(|s| w(x, u, s), p, hp)?;
        let (f0, f0p) = field.f0_cut_pair(x, u, p)?;
        worst.offer((wx + p * wu + f0 * wp + f0p * w(x, u, p)?).abs(), || at(x, u, p));
    }
    Ok(Check::new("lagrange_pde_p", worst.value, worst.location, LAGRANGE_TOL, n_samples))
}

/// The Euler–Lagrange identity on `p = 0`: `L0_u = L1_x + F0 exp(g)`.
pub fn check_slice_identity(model: &LagrangianModel, bx: &SampleBox, n_samples: usize, seed: u64) -> Result<Check> {
    let mut worst = Worst::new();
    for [x, u, _] in bx.sample(n_samples, seed) {
        let h = step1(u);
        let l0u = d1(|s| model.l0(x, s), u, h)?;
        worst.offer((l0u - model.l0_integrand(x, u)?).abs(), || at(x, u, 0.0));
    }
    Ok(Check::new("slice_p0", worst.value, worst.location, SLICE_TOL, n_samples))
}

/// `max |L_p(iota, u, b(u))|` over `u_grid` at every Robin end.
pub fn check_boundary_vanishing(model: &LagrangianModel, u_grid: &[f64]) -> Result<Check> {
    let spec = model.field().spec();
    let mut worst = Worst::new();
    let mut count = 0;
    for (iota, bc) in [(0.0, &spec.left), (1.0, &spec.right)] {
        if let BoundarySpec::Robin { b, .. } = bc {
            for &u in u_grid {
                let p = b(u);
                worst.offer(model.eval_lp(iota, u, p)?.abs(), || at(iota, u, p));
                count += 1;
            }
        }
    }
    Ok(Check::new("boundary_vanishing", worst.value, worst.location, BOUNDARY_TOL, count))
}

/// Centered `dE/dt` against the stored decay rate at interior records. The
/// error is compared with `rel_tol |rate|` plus the rounding noise of the
/// difference quotient.
pub fn check_decay_identity(traj: &TrajectoryRecord, rel_tol: f64) -> Check {
    let t = &traj.times;
    let mut worst = Worst::new();
    let mut count = 0;
    let mut pass = true;
    for k in 1..t.len().saturating_sub(1) {
        let r = &traj.readings;
        let (fd, noise) = difference_quotient(t, r, k);
        let rate = r[k].decay_rate;
        let err = (fd - rate).abs();
        if !(err <= rel_tol * rate.abs() + noise) {
            pass = false;
        }
        let rel = if rate != 0.0 { err / rate.abs() } else if err <= noise { 0.0 } else { f64::INFINITY };
        worst.offer(rel, || format!("t={:.6e} fd={fd:.6e} rate={rate:.6e}", t[k]));
        count += 1;
    }
    let mut c = Check::new("decay_identity", worst.value, worst.location, rel_tol, count);
    c.pass = pass;
    c
}

/// `(t, |fd - rate| / |rate|)` at interior records whose rate stands at least
/// a factor `1e3` above the rounding noise of the difference quotient.
pub fn decay_identity_errors(traj: &TrajectoryRecord) -> Vec<(f64, f64)> {
    let t = &traj.times;
    let r = &traj.readings;
    (1..t.len().saturating_sub(1))
        .filter_map(|k| {
            let (fd, noise) = difference_quotient(t, r, k);
            let rate = r[k].decay_rate;
            (noise * 1e3 <= rate.abs()).then(|| (t[k], (fd - rate).abs() / rate.abs()))
        })
        .collect()
}

/// Worst of [`decay_identity_errors`] over `t_start <= t <= t_end`.
pub fn decay_identity_error(traj: &TrajectoryRecord, t_start: f64, t_end: f64) -> f64 {
    decay_identity_errors(traj)
        .into_iter()
        .filter(|(t, _)| *t >= t_start && *t <= t_end)
        .fold(0.0, |m, (_, e)| m.max(e))
}

/// How much the decay-identity error shrinks from `coarse` to `fine`: the
/// worst coarse error over the worst fine error, the latter interpolated to
/// the coarse record times so both see the same stretch of the flow.
pub fn refinement_factor(coarse: &TrajectoryRecord, fine: &TrajectoryRecord) -> f64 {
    let c = decay_identity_errors(coarse);
    let f = decay_identity_errors(fine);
    let (mut worst_c, mut worst_f) = (0.0f64, 0.0f64);
    for &(t, ec) in &c {
        let j = f.partition_point(|&(tf, _)| tf < t);
        if j == 0 || j == f.len() {
            continue;
        }
        let ((t0, e0), (t1, e1)) = (f[j - 1], f[j]);
        let ef = e0 + (e1 - e0) * (t - t0) / (t1 - t0);
        worst_c = worst_c.max(ec);
        worst_f = worst_f.max(ef);
    }
    worst_c / worst_f
}

/// Centered `dE/dt` at record `k` and the rounding noise it inherits from `E`
/// (about `16 eps int|L| dx` per value, scaled by the stencil weights).
fn difference_quotient(t: &[f64], r: &[EnergyReading], k: usize) -> (f64, f64) {
    let fd = centered_derivative((t[k - 1], r[k - 1].e), (t[k], r[k].e), (t[k + 1], r[k + 1].e));
    let (h1, h2) = (t[k] - t[k - 1], t[k + 1] - t[k]);
    let coeff = h2 / (h1 * (h1 + h2)) + (h2 - h1).abs() / (h1 * h2) + h1 / (h2 * (h1 + h2));
    let mag = r[k].magnitude.max(r[k - 1].magnitude).max(r[k + 1].magnitude);
    (fd, 16.0 * f64::EPSILON * mag * coeff)
}

/// `E(t_{k+1}) <= E(t_k) + tol (1 + |E(t_k)|)` for every recorded pair.
pub fn check_monotone(traj: &TrajectoryRecord, tol: f64) -> Check {
    let e = traj.energies();
    let mut worst = Worst::new();
    for k in 0..e.len().saturating_sub(1) {
        let excess = (e[k + 1] - e[k]) / (1.0 + e[k].abs());
        worst.offer(excess, || format!("t={:.6e}", traj.times[k + 1]));
    }
    Check::new("energy_monotone", worst.value, worst.location, tol, e.len())
}

/// `|rate - rate_alt| / (1e-8 + 1e-6 |rate|)`, which must stay below one.
pub fn check_split_agreement(traj: &TrajectoryRecord) -> Check {
    let mut worst = Worst::new();
    for (t, r) in traj.times.iter().zip(&traj.readings) {
        let ratio = (r.decay_rate - r.decay_rate_alt).abs() / (1e-8 + 1e-6 * r.decay_rate.abs());
        worst.offer(ratio, || format!("t={t:.6e}"));
    }
    Check::new("split_agreement", worst.value, worst.location, 1.0, traj.len())
}

/// Transport, Euler–Lagrange, slice and boundary checks for a built model.
pub fn model_checks(model: &LagrangianModel, n_samples: usize, seed: u64) -> Result<Report> {
    model_checks_with(model, n_samples, seed, &Tolerances::default())
}

pub fn model_checks_with(model: &LagrangianModel, n_samples: usize, seed: u64, tol: &Tolerances) -> Result<Report> {
    let o = model.options();
    let bx = SampleBox::interior(o.u_max, o.p_max);
    let field = model.field();
    let mut report = Report::default();
    let g = direct_g(field);
    report.push(check_transport(&g, field, &bx, n_samples, seed)?.with_tolerance(tol.transport));
    report.push(check_lagrange_pde(model, &bx, n_samples, seed.wrapping_add(1))?.with_tolerance(tol.lagrange));
    report.push(check_lagrange_pde_p(model, &bx, n_samples, seed.wrapping_add(2))?.with_tolerance(tol.lagrange));
    report.push(check_slice_identity(model, &bx, n_samples, seed.wrapping_add(3))?.with_tolerance(tol.slice));
    let u_grid: Vec<f64> = (0..=64).map(|i| -o.u_max + 2.0 * o.u_max * i as f64 / 64.0).collect();
    report.push(check_boundary_vanishing(model, &u_grid)?.with_tolerance(tol.boundary));
    Ok(report)
}

/// Decay identity, monotonicity and agreement of the two decay-rate forms.
pub fn flow_checks(traj: &TrajectoryRecord) -> Report {
    flow_checks_with(traj, &Tolerances::default())
}

pub fn flow_checks_with(traj: &TrajectoryRecord, tol: &Tolerances) -> Report {
    Report {
        checks: vec![
            check_monotone(traj, tol.monotone),
            check_decay_identity(traj, tol.decay_rel),
            check_split_agreement(traj),
        ],
    }
}
