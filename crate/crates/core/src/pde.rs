//! Method of lines for `f(x, u, u_x, u_xx, u_t) = 0` on `[0, 1]`.
//!
//! Second-order central differences in space with ghost-node boundary
//! closure, classical RK4 in time with a diffusion-limited step.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{reading, sup_norm, EnergyReading, GridFunction};
use crate::error::{Error, Result};
use crate::lagrangian::LagrangianModel;
use crate::nonlinearity::{BoundarySpec, ProblemSpec, SplitField, SplitFieldAlt};
use crate::numerics::ode::{integrate as ode_integrate, OdeOptions};

/// Uniform mesh of `[0, 1]` with `N` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mesh {
    pub n: usize,
}

impl Mesh {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidMesh(format!("N = {n}; need an even N >= 8")));
        }
        Ok(Self { n })
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }
}

/// Enforces `u = 0` at Dirichlet ends and returns the ghost values
/// `(u_{-1}, u_{N+1})`.
pub fn apply_bc(u: &mut [f64], spec: &ProblemSpec, dx: f64) -> (f64, f64) {
    let n = u.len() - 1;
    if spec.left.is_dirichlet() {
        u[0] = 0.0;
    }
    if spec.right.is_dirichlet() {
        u[n] = 0.0;
    }
    ghosts(u, spec, dx)
}

/// Odd reflection at Dirichlet ends; at Robin ends the ghost makes the
/// central difference equal `b(u)`.
pub fn ghosts(u: &[f64], spec: &ProblemSpec, dx: f64) -> (f64, f64) {
    let n = u.len() - 1;
    let left = match &spec.left {
        BoundarySpec::Dirichlet => -u[1],
        BoundarySpec::Robin { b, .. } => u[1] - 2.0 * dx * b(u[0]),
    };
    let right = match &spec.right {
        BoundarySpec::Dirichlet => -u[n - 1],
        BoundarySpec::Robin { b, .. } => u[n - 1] + 2.0 * dx * b(u[n]),
    };
    (left, right)
}

#[inline]
fn node_pq(u: &[f64], i: usize, (gl, gr): (f64, f64), dx: f64) -> (f64, f64) {
    let n = u.len() - 1;
    let lo = if i == 0 { gl } else { u[i - 1] };
    let hi = if i == n { gr } else { u[i + 1] };
    ((hi - lo) / (2.0 * dx), (hi - 2.0 * u[i] + lo) / (dx * dx))
}

/// `u_t` at every node, solved from the law; zero at Dirichlet ends.
/// `warm` supplies starting guesses for the root finder.
pub fn rhs(spec: &ProblemSpec, u: &[f64], warm: Option<&[f64]>) -> Result<Vec<f64>> {
    let n = u.len() - 1;
    let dx = 1.0 / n as f64;
    let g = ghosts(u, spec, dx);
    let mut ut = vec![0.0; n + 1];
    let first = usize::from(spec.left.is_dirichlet());
    let last = if spec.right.is_dirichlet() { n - 1 } else { n };
    for i in first..=last {
        let (p, q) = node_pq(u, i, g, dx);
        let guess = warm.map_or(0.0, |w| w[i]);
        ut[i] = spec
            .solve_for_r_from(i as f64 * dx, u[i], p, q, guess)
            .map_err(|e| e.at_node(i))?;
    }
    Ok(ut)
}

/// Largest effective diffusion `-f_q / f_r` over the nodes.
pub fn max_diffusion(spec: &ProblemSpec, u: &[f64], ut: &[f64]) -> f64 {
    let n = u.len() - 1;
    let dx = 1.0 / n as f64;
    let g = ghosts(u, spec, dx);
    (0..=n)
        .map(|i| {
            let (p, q) = node_pq(u, i, g, dx);
            spec.effective_diffusion(i as f64 * dx, u[i], p, q, ut[i])
        })
        .fold(0.0, f64::max)
}

/// `safety * dx^2 / (2 D_max)`, capped by `dt_max`.
pub fn step_size(spec: &ProblemSpec, u: &[f64], ut: &[f64], safety: f64, dt_max: f64) -> f64 {
    let n = u.len() - 1;
    let dx = 1.0 / n as f64;
    let d = max_diffusion(spec, u, ut);
    if d > 0.0 {
        (safety * dx * dx / (2.0 * d)).min(dt_max)
    } else {
        dt_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub t_end: f64,
    pub dt_max: f64,
    pub safety: f64,
    /// Record every this many steps (plus the first and the last state).
    pub record_stride: usize,
    /// Stop once `sup |u_t|` drops below this.
    pub eq_tol: f64,
    pub blowup_bound: f64,
    /// Use `b(u)` as the slope at Robin ends when evaluating `E`.
    pub robin_exact: bool,
    pub keep_profiles: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt_max: 1e-3,
            safety: 0.8,
            record_stride: 50,
            eq_tol: 1e-8,
            blowup_bound: 1e6,
            robin_exact: true,
            keep_profiles: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    Converged,
    ReachedEnd,
}

impl FlowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlowStatus::Converged => "converged",
            FlowStatus::ReachedEnd => "reached_end",
        }
    }
}

/// State handed to the observer at each record.
#[derive(Debug, Clone, Copy)]
pub struct RecordView<'a> {
    pub step: usize,
    pub t: f64,
    pub u: &'a GridFunction,
    pub ut: &'a [f64],
    pub reading: &'a EnergyReading,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// Empty unless `keep_profiles` was set.
    pub profiles: Vec<GridFunction>,
    pub readings: Vec<EnergyReading>,
    pub sup_ut: Vec<f64>,
    pub sup_u: Vec<f64>,
    /// Effective diffusion bound used for the step following each record.
    pub d_max: Vec<f64>,
    pub status: FlowStatus,
    pub steps: usize,
    pub final_profile: GridFunction,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.readings.iter().map(|r| r.e).collect()
    }

    /// Centered (three-point, nonuniform) `dE/dt` at interior records.
    pub fn fd_rates(&self) -> Vec<Option<f64>> {
        let e = self.energies();
        let t = &self.times;
        (0..t.len())
            .map(|k| {
                if k == 0 || k + 1 >= t.len() {
                    return None;
                }
                Some(centered_derivative(
                    (t[k - 1], e[k - 1]),
                    (t[k], e[k]),
                    (t[k + 1], e[k + 1]),
                ))
            })
            .collect()
    }
}

/// Derivative at the middle point of the quadratic through three points.
pub fn centered_derivative((t0, e0): (f64, f64), (t1, e1): (f64, f64), (t2, e2): (f64, f64)) -> f64 {
    let h1 = t1 - t0;
    let h2 = t2 - t1;
    -h2 / (h1 * (h1 + h2)) * e0 + (h2 - h1) / (h1 * h2) * e1 + h1 / (h2 * (h1 + h2)) * e2
}

/// Integrates the flow from `u0` and records energies along the way.
pub fn integrate(
    model: &LagrangianModel,
    u0: &GridFunction,
    opts: &FlowOptions,
    mut observer: impl FnMut(&RecordView<'_>),
) -> Result<TrajectoryRecord> {
    if !(opts.t_end > 0.0) {
        return Err(Error::Config("time horizon must be positive".into()));
    }
    let field = model.field();
    let spec = field.spec();
    let alt = SplitFieldAlt::from_field(field.clone());
    let n = u0.n();
    let dx = u0.dx();

    let mut u = u0.clone();
    apply_bc(u.values_mut(), spec, dx);
    let mut ut = rhs(spec, u.values(), None)?;
    let mut t = 0.0;
    let mut step = 0usize;
    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        profiles: Vec::new(),
        readings: Vec::new(),
        sup_ut: Vec::new(),
        sup_u: Vec::new(),
        d_max: Vec::new(),
        status: FlowStatus::ReachedEnd,
        steps: 0,
        final_profile: u.clone(),
    };
    let mut last_recorded = usize::MAX;
    let mut record = |rec: &mut TrajectoryRecord, step: usize, t: f64, u: &GridFunction, ut: &[f64]| -> Result<()> {
        let r = reading(model, &alt, u, ut, opts.robin_exact)?;
        observer(&RecordView { step, t, u, ut, reading: &r });
        rec.times.push(t);
        rec.readings.push(r);
        rec.sup_ut.push(sup_norm(ut));
        rec.sup_u.push(u.sup_norm());
        rec.d_max.push(max_diffusion(spec, u.values(), ut));
        if opts.keep_profiles {
            rec.profiles.push(u.clone());
        }
        Ok(())
    };

    let mut stage = vec![0.0; n + 1];
    loop {
        let converged = sup_norm(&ut) < opts.eq_tol;
        let done = converged || t >= opts.t_end;
        if step % opts.record_stride.max(1) == 0 || done {
            if last_recorded != step {
                record(&mut rec, step, t, &u, &ut)?;
                last_recorded = step;
            }
        }
        if done {
            rec.status = if converged {
                FlowStatus::Converged
            } else {
                FlowStatus::ReachedEnd
            };
            break;
        }

        // Absorb a remainder too small to be a useful step of its own.
        let remaining = opts.t_end - t;
        let mut dt = step_size(spec, u.values(), &ut, opts.safety, opts.dt_max);
        if remaining - dt <= 1e-9 * dt {
            dt = remaining;
        }
        let v = u.values();
        let k1 = &ut;
        for i in 0..=n {
            stage[i] = v[i] + 0.5 * dt * k1[i];
        }
        let k2 = rhs(spec, &stage, Some(k1))?;
        for i in 0..=n {
            stage[i] = v[i] + 0.5 * dt * k2[i];
        }
        let k3 = rhs(spec, &stage, Some(&k2))?;
        for i in 0..=n {
            stage[i] = v[i] + dt * k3[i];
        }
        let k4 = rhs(spec, &stage, Some(&k3))?;
        let w = u.values_mut();
        for i in 0..=n {
            w[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        t = if dt == remaining { opts.t_end } else { t + dt };
        step += 1;

        let sup = u.sup_norm();
        if !(sup <= opts.blowup_bound) {
            return Err(Error::Blowup {
                t,
                sup_u: sup,
                profile: u.into_values(),
            });
        }
        ut = rhs(spec, u.values(), Some(&k4))?;
    }
    rec.steps = step;
    rec.final_profile = u;
    Ok(rec)
}

#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub ode_tol: f64,
    pub bound: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            ode_tol: 1e-12,
            bound: 1e6,
        }
    }
}

fn shoot_start(spec: &ProblemSpec, s: f64) -> (f64, f64) {
    match spec.left.slope(s) {
        None => (0.0, s),
        Some(b) => (s, b),
    }
}

fn shoot_residual(spec: &ProblemSpec, end: [f64; 2]) -> f64 {
    match spec.right.slope(end[0]) {
        None => end[0],
        Some(b) => end[1] - b,
    }
}

fn shoot_segment(field: &SplitField, y: [f64; 2], a: f64, b: f64, opts: &ShootOptions) -> Result<[f64; 2]> {
    let bound = opts.bound;
    let out = ode_integrate(
        |x, y: &[f64; 2]| {
            if !(y[0].abs() <= bound && y[1].abs() <= bound) {
                return Err(Error::BlowupInShooting { x });
            }
            Ok([y[1], field.f0(x, y[0], y[1])?])
        },
        a,
        [y[0], y[1]],
        b,
        &OdeOptions::with_tol(opts.ode_tol),
    );
    match out {
        Ok(v) => Ok(v),
        Err(Error::StepUnderflow { at, .. }) => Err(Error::BlowupInShooting { x: at }),
        Err(e) => Err(e),
    }
}

/// Equilibrium through shooting on `u'' = F0(x, u, u')` (no cut-off) with
/// secant iteration on the shooting parameter: the initial slope for a
/// Dirichlet left end, the initial value for a Robin left end.
pub fn find_equilibrium(field: &SplitField, n: usize, guess: f64, opts: &ShootOptions) -> Result<GridFunction> {
    let mesh = Mesh::new(n)?;
    let spec = field.spec();
    let residual = |s: f64| -> Result<f64> {
        let end = shoot_segment(field, {
            let (u, p) = shoot_start(spec, s);
            [u, p]
        }, 0.0, 1.0, opts)?;
        Ok(shoot_residual(spec, end))
    };
    let mut s0 = guess;
    let mut r0 = residual(s0)?;
    let mut s1 = s0;
    if r0.abs() > opts.tol {
        s1 = guess + 1e-3 * (1.0 + guess.abs());
        let mut r1 = residual(s1)?;
        let mut iter = 0;
        while r1.abs() > opts.tol {
            iter += 1;
            if iter > opts.max_iter || r1 == r0 {
                return Err(Error::NoConvergence {
                    what: "equilibrium shooting",
                    iterations: iter,
                    residual: r1.abs(),
                });
            }
            let s2 = s1 - r1 * (s1 - s0) / (r1 - r0);
            s0 = s1;
            r0 = r1;
            s1 = s2;
            r1 = residual(s1)?;
        }
    }
    let (u, p) = shoot_start(spec, s1);
    let mut y = [u, p];
    let mut values = Vec::with_capacity(n + 1);
    values.push(y[0]);
    for i in 0..n {
        y = shoot_segment(field, y, mesh.node(i), mesh.node(i + 1), opts)?;
        values.push(y[0]);
    }
    if spec.right.is_dirichlet() {
        values[n] = 0.0;
    }
    GridFunction::new(values)
}

/// Named initial profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `A sin(k pi x)`
    Sine { k: f64, amplitude: f64 },
    /// `A cos(k pi x)`
    Cosine { k: f64, amplitude: f64 },
    Constant(f64),
    /// Smooth random profile: `modes` basis functions matched to the boundary
    /// kinds, coefficients uniform in `[-1, 1] / k^2`, scaled to sup-norm `A`.
    Random { seed: u64, amplitude: f64, modes: usize },
    /// Nodal values supplied directly.
    Values(Vec<f64>),
}

impl InitialCondition {
    pub fn realize(&self, n: usize, spec: &ProblemSpec) -> Result<GridFunction> {
        let mesh = Mesh::new(n)?;
        let pi = std::f64::consts::PI;
        let mut values: Vec<f64> = match self {
            InitialCondition::Sine { k, amplitude } => (0..=n).map(|i| amplitude * (k * pi * mesh.node(i)).sin()).collect(),
            InitialCondition::Cosine { k, amplitude } => (0..=n).map(|i| amplitude * (k * pi * mesh.node(i)).cos()).collect(),
            InitialCondition::Constant(c) => vec![*c; n + 1],
            InitialCondition::Random { seed, amplitude, modes } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let basis = |k: usize, x: f64| -> f64 {
                    let kf = k as f64;
                    match (spec.left.is_dirichlet(), spec.right.is_dirichlet()) {
                        (true, true) => (kf * pi * x).sin(),
                        (false, false) => ((kf - 1.0) * pi * x).cos(),
                        (true, false) => ((kf - 0.5) * pi * x).sin(),
                        (false, true) => ((kf - 0.5) * pi * x).cos(),
                    }
                };
                let coeffs: Vec<f64> = (1..=*modes).map(|k| rng.gen_range(-1.0..=1.0) / (k * k) as f64).collect();
                let raw: Vec<f64> = (0..=n)
                    .map(|i| coeffs.iter().enumerate().map(|(j, c)| c * basis(j + 1, mesh.node(i))).sum())
                    .collect();
                let sup = sup_norm(&raw);
                if sup == 0.0 {
                    raw
                } else {
                    raw.iter().map(|v| amplitude * v / sup).collect()
                }
            }
            InitialCondition::Values(v) => {
                if v.len() != n + 1 {
                    return Err(Error::InvalidMesh(format!("profile has {} nodes, mesh needs {}", v.len(), n + 1)));
                }
                v.clone()
            }
        };
        apply_bc(&mut values, spec, mesh.dx());
        GridFunction::new(values)
    }
}

/// Reads a two-column `x,u` CSV profile (an optional header row is skipped)
/// and checks it against the mesh.
pub fn read_profile_csv(path: &Path, n: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(Error::Config(format!("{}: line {} needs two columns", path.display(), line_no + 1)));
        }
        let (Ok(x), Ok(u)) = (cols[0].parse::<f64>(), cols[1].parse::<f64>()) else {
            if line_no == 0 {
                continue;
            }
            return Err(Error::Config(format!("{}: bad number on line {}", path.display(), line_no + 1)));
        };
        let expect = values.len() as f64 / n as f64;
        if (x - expect).abs() > 1e-9 {
            return Err(Error::InvalidMesh(format!("profile node x = {x} does not match mesh node {expect}")));
        }
        values.push(u);
    }
    if values.len() != n + 1 {
        return Err(Error::InvalidMesh(format!("profile has {} nodes, mesh needs {}", values.len(), n + 1)));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::lagrangian::ModelOptions;
    use crate::nonlinearity::split;
    use std::f64::consts::PI;

    #[test]
    fn ghost_examples() {
        let spec = catalog::heat().with_boundaries(BoundarySpec::linear(-1.0, 0.0), BoundarySpec::neumann());
        let mut u = vec![1.0; 11];
        let (l, r) = apply_bc(&mut u, &spec, 0.1);
        assert!((l - 1.2).abs() < 1e-15 && r == 1.0);
        let mut d = vec![0.5; 11];
        let (l, r) = apply_bc(&mut d, &catalog::heat(), 0.1);
        assert_eq!((d[0], d[10], l, r), (0.0, 0.0, -0.5, -0.5));
    }

    #[test]
    fn heat_rhs_is_second_order() {
        let spec = catalog::heat();
        let err = |n: usize| {
            let u = GridFunction::from_fn(n, |x| (PI * x).sin()).unwrap();
            let ut = rhs(&spec, u.values(), None).unwrap();
            (0..=n).map(|i| (ut[i] + PI * PI * u.values()[i]).abs()).fold(0.0, f64::max)
        };
        let (a, b) = (err(32), err(64));
        assert!(a / b > 3.9, "{a} {b}");
    }

    #[test]
    fn step_sizes() {
        let u = vec![0.0; 17];
        let dt = step_size(&catalog::heat(), &u, &u, 0.8, 1.0);
        assert!((dt - 0.4 / 256.0).abs() < 1e-15);
        let spec = catalog::fully_nonlinear_ftilde();
        let v: Vec<f64> = (0..=16).map(|i| (i as f64 * 0.7).sin()).collect();
        let ut = rhs(&spec, &v, None).unwrap();
        assert!(step_size(&spec, &v, &ut, 0.8, 1.0) >= 0.4 / 256.0 / 1.1);
    }

    #[test]
    fn heat_flow_matches_analytic_decay() {
        let field = split(&catalog::heat()).unwrap();
        let model = LagrangianModel::build(&field, ModelOptions { nx: 8, nu: 9, np: 9, l0_nodes: 101, ..Default::default() }).unwrap();
        let u0 = GridFunction::from_fn(64, |x| (PI * x).sin()).unwrap();
        let opts = FlowOptions { t_end: 0.1, record_stride: 100, ..Default::default() };
        let rec = integrate(&model, &u0, &opts, |_| {}).unwrap();
        let u = &rec.final_profile;
        let rel = (0..=64)
            .map(|i| (u.values()[i] - (-PI * PI * 0.1f64).exp() * (PI * u.x(i)).sin()).abs())
            .fold(0.0, f64::max)
            / (-PI * PI * 0.1f64).exp();
        assert!(rel < 1e-3, "{rel}");
        assert_eq!(*rec.times.last().unwrap(), 0.1);
        let e = rec.energies();
        assert!(e.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn equilibrium_shooting() {
        let heat = split(&catalog::heat()).unwrap();
        let zero = find_equilibrium(&heat, 16, 0.0, &ShootOptions::default()).unwrap();
        assert!(zero.sup_norm() < 1e-12);
        let ci = split(&catalog::chafee_infante(15.0)).unwrap();
        let u = find_equilibrium(&ci, 256, 3.0, &ShootOptions::default()).unwrap();
        assert!(u.sup_norm() > 0.5, "{}", u.sup_norm());
        let ut = rhs(ci.spec(), u.values(), None).unwrap();
        // discrete residual of the exact equilibrium is O(dx^2)
        assert!(sup_norm(&ut) < 1e-3);
        let neumann = split(&catalog::fully_nonlinear_ftilde().with_boundaries(BoundarySpec::neumann(), BoundarySpec::neumann())).unwrap();
        let c = find_equilibrium(&neumann, 16, 0.7, &ShootOptions::default()).unwrap();
        assert!(c.values().iter().all(|v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn random_profiles_are_reproducible_and_admissible() {
        let spec = catalog::heat();
        let ic = InitialCondition::Random { seed: 7, amplitude: 0.1, modes: 6 };
        let a = ic.realize(32, &spec).unwrap();
        assert_eq!(a, ic.realize(32, &spec).unwrap());
        assert!((a.sup_norm() - 0.1).abs() < 1e-12 && a.values()[0] == 0.0 && a.values()[32] == 0.0);
        let b = InitialCondition::Random { seed: 8, amplitude: 0.1, modes: 6 }.realize(32, &spec).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn profile_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u0.csv");
        let text: String = std::iter::once("x,u\n".to_string())
            .chain((0..=8).map(|i| format!("{},{}\n", i as f64 / 8.0, i as f64)))
            .collect();
        std::fs::write(&path, text).unwrap();
        assert_eq!(read_profile_csv(&path, 8).unwrap()[3], 3.0);
        assert!(read_profile_csv(&path, 16).is_err());
    }
}
