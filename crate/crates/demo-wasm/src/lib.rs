//! WebAssembly front end for the browser demo.
//!
//! Three operations, each returning a flat `Float64Array`:
//! the splitting `F = F0 + F1 r` along a line in `r`, a heat map of the
//! weight `L_pp = exp(g)` over `(u, p)`, and the energy trace of a flow.
//! The plain-Rust functions do the work; the `wasm_bindgen` wrappers only
//! convert errors into JS exceptions.

use parabolic_lyapunov::catalog::{self, CatalogParams};
use parabolic_lyapunov::lagrangian::{LagrangianModel, ModelOptions};
use parabolic_lyapunov::nonlinearity::{split, split_alternative, ProblemSpec};
use parabolic_lyapunov::pde::{integrate, FlowOptions, InitialCondition};
use wasm_bindgen::prelude::*;

fn spec(problem: &str) -> Result<ProblemSpec, String> {
    let (_, _, radius) = catalog::default_box(problem);
    catalog::by_name(problem, &CatalogParams::default())
        .map(|s| s.with_cutoff(radius))
        .map_err(|e| e.to_string())
}

/// Tables coarse enough to build in well under a second in a browser tab.
fn model(problem: &str) -> Result<LagrangianModel, String> {
    let (u_max, p_max, _) = catalog::default_box(problem);
    let options = ModelOptions {
        nx: 9,
        nu: 33,
        np: 33,
        l0_nodes: 401,
        ..ModelOptions::default()
    }
    .with_box(u_max, p_max);
    let field = split(&spec(problem)?).map_err(|e| e.to_string())?;
    LagrangianModel::build(&field, options).map_err(|e| e.to_string())
}

/// Comma-separated catalog names.
pub fn problems() -> String {
    catalog::NAMES.join(",")
}

/// `[r_0..r_{n-1}, F.., F0.., F1.., F1_alt..]` for `r` evenly spaced in
/// `[r_min, r_max]` at fixed `(x, u, p)`.
pub fn split_curves(problem: &str, x: f64, u: f64, p: f64, r_min: f64, r_max: f64, n: usize) -> Result<Vec<f64>, String> {
    if n < 2 || !(r_max > r_min) {
        return Err("need n >= 2 and r_max > r_min".into());
    }
    let spec = spec(problem)?;
    let field = split(&spec).map_err(|e| e.to_string())?;
    let alt = split_alternative(&spec).map_err(|e| e.to_string())?;
    let f0 = field.f0(x, u, p).map_err(|e| e.to_string())?;
    let mut out = vec![0.0; 5 * n];
    for i in 0..n {
        let r = r_min + (r_max - r_min) * i as f64 / (n - 1) as f64;
        out[i] = r;
        out[n + i] = spec.diffusion(x, u, p, r).map_err(|e| e.to_string())?;
        out[2 * n + i] = f0;
        out[3 * n + i] = field.f1(x, u, p, r).map_err(|e| e.to_string())?;
        out[4 * n + i] = alt.f1_alt(x, u, p, r).map_err(|e| e.to_string())?;
    }
    Ok(out)
}

/// `[u_max, p_max, v_00, v_01, ...]`: `L_pp` on an `nu x np` grid over the
/// model box at fixed `x`, row-major in `u`.
pub fn weight_map(problem: &str, x: f64, nu: usize, np: usize) -> Result<Vec<f64>, String> {
    if nu < 2 || np < 2 {
        return Err("need at least a 2 x 2 grid".into());
    }
    let model = model(problem)?;
    let (u_max, p_max) = (model.options().u_max, model.options().p_max);
    let mut out = Vec::with_capacity(2 + nu * np);
    out.extend([u_max, p_max]);
    for i in 0..nu {
        let u = -u_max + 2.0 * u_max * i as f64 / (nu - 1) as f64;
        for j in 0..np {
            let p = -p_max + 2.0 * p_max * j as f64 / (np - 1) as f64;
            out.push(model.eval_lpp(x, u, p).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

/// `[t.., E.., dE/dt..]` for a flow from a random initial profile with
/// sup-norm `amplitude`, sampled every `record_stride` steps up to `t_end`.
pub fn energy_trace(problem: &str, n: usize, amplitude: f64, seed: u64, t_end: f64) -> Result<Vec<f64>, String> {
    let model = model(problem)?;
    let spec = model.field().spec();
    let u0 = InitialCondition::Random { seed, amplitude, modes: 6 }
        .realize(n, spec)
        .map_err(|e| e.to_string())?;
    let opts = FlowOptions {
        t_end,
        eq_tol: 1e-6,
        record_stride: 20,
        ..FlowOptions::default()
    };
    let traj = integrate(&model, &u0, &opts, |_| {}).map_err(|e| e.to_string())?;
    let mut out = traj.times.clone();
    out.extend(traj.readings.iter().map(|r| r.e));
    out.extend(traj.readings.iter().map(|r| r.decay_rate));
    Ok(out)
}

#[wasm_bindgen(js_name = problems)]
pub fn js_problems() -> String {
    problems()
}

#[wasm_bindgen(js_name = splitCurves)]
pub fn js_split_curves(problem: &str, x: f64, u: f64, p: f64, r_min: f64, r_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    split_curves(problem, x, u, p, r_min, r_max, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = weightMap)]
pub fn js_weight_map(problem: &str, x: f64, nu: usize, np: usize) -> Result<Vec<f64>, JsError> {
    weight_map(problem, x, nu, np).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = energyTrace)]
pub fn js_energy_trace(problem: &str, n: usize, amplitude: f64, seed: u32, t_end: f64) -> Result<Vec<f64>, JsError> {
    energy_trace(problem, n, amplitude, seed as u64, t_end).map_err(|e| JsError::new(&e))
}
