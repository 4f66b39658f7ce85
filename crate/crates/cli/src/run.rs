//! The build → check → flow pipeline and its CSV artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use log::{debug, info, warn};
use parabolic_lyapunov::characteristics::GTable;
use parabolic_lyapunov::energy::EnergyReading;
use parabolic_lyapunov::lagrangian::LagrangianModel;
use parabolic_lyapunov::nonlinearity::split;
use parabolic_lyapunov::pde::{centered_derivative, integrate, FlowStatus, TrajectoryRecord};
use parabolic_lyapunov::verify::{flow_checks_with, model_checks_with, Check, Report};
use parabolic_lyapunov::Error;

use crate::{CliError, RunConfig};

pub struct BuildOutcome {
    pub model: LagrangianModel,
    pub report: Report,
}

/// Splits the law, tabulates `g` (or reads the cached table), assembles `L`
/// and runs the model checks.
pub fn run_build(cfg: &RunConfig) -> Result<BuildOutcome, CliError> {
    let spec = cfg.problem_spec()?;
    let field = split(&spec).map_err(|e| e.in_stage("split"))?;
    let options = cfg.model_options();
    let model = match &cfg.model.gtable_cache {
        Some(path) if !field.has_trivial_weight() => {
            let table = GTable::read_csv(path).map_err(|e| e.in_stage("g table cache"))?;
            if *table.grid() != options.grid() {
                return Err(CliError::Config(format!(
                    "{}: cached g table grid does not match the configured box and resolution",
                    path.display()
                )));
            }
            info!("g table read from {}", path.display());
            LagrangianModel::with_table(&field, table, options)
        }
        _ => LagrangianModel::build(&field, options),
    }
    .map_err(|e| e.in_stage("model"))?;
    debug!("model built: {}", model.summary()?.g_source);
    let report =
        model_checks_with(&model, cfg.samples(), cfg.seed, &cfg.tolerances()).map_err(|e| e.in_stage("checks"))?;
    Ok(BuildOutcome { model, report })
}

/// One recorded state of a flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub t: f64,
    pub reading: EnergyReading,
    pub sup_ut: f64,
    pub sup_u: f64,
}

pub struct FlowOutcome {
    pub rows: Vec<Row>,
    /// Absent when the flow blew up.
    pub trajectory: Option<TrajectoryRecord>,
    /// Last state: the terminal profile, or the profile at blow-up.
    pub final_profile: Vec<f64>,
    pub report: Report,
}

/// Integrates from the configured initial condition and checks the decay
/// identity along the way. A blow-up is reported as a failed check rather
/// than an error, so the state at that moment can still be written out.
pub fn run_flow(cfg: &RunConfig, model: &LagrangianModel) -> Result<FlowOutcome, CliError> {
    let spec = model.field().spec();
    let u0 = cfg.initial_condition()?.realize(cfg.mesh.n, spec)?;
    let opts = cfg.flow_options();
    let mut rows = Vec::new();
    let result = integrate(model, &u0, &opts, |v| {
        rows.push(Row {
            t: v.t,
            reading: *v.reading,
            sup_ut: v.ut.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            sup_u: v.u.sup_norm(),
        });
    });
    match result {
        Ok(traj) => {
            info!(
                "flow {} after {} steps at t = {:e}",
                traj.status.as_str(),
                traj.steps,
                traj.times.last().copied().unwrap_or(0.0)
            );
            let report = flow_checks_with(&traj, &cfg.tolerances());
            let final_profile = traj.final_profile.values().to_vec();
            Ok(FlowOutcome {
                rows,
                trajectory: Some(traj),
                final_profile,
                report,
            })
        }
        Err(Error::Blowup { t, sup_u, profile }) => {
            warn!("blow-up at t = {t:e} (sup|u| = {sup_u:e})");
            let mut report = Report::default();
            report.push(Check::new(
                "no_blowup",
                sup_u,
                format!("t={t:.6e}"),
                opts.blowup_bound,
                rows.len(),
            ));
            Ok(FlowOutcome {
                rows,
                trajectory: None,
                final_profile: profile,
                report,
            })
        }
        Err(e) => Err(e.in_stage("flow").into()),
    }
}

/// What a complete run produced.
pub struct RunOutcome {
    pub report: Report,
    pub status: Option<FlowStatus>,
    pub summary: String,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.report.all_pass()
    }
}

/// Runs the pipeline and writes `model_report.txt`, `checks.csv`, the `g`
/// table cache and, unless `check_only`, `trajectory.csv` and
/// `final_profile.csv` into `dir`.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path, check_only: bool) -> Result<RunOutcome, CliError> {
    fs::create_dir_all(dir)?;
    let build = run_build(cfg)?;
    let summary = build.model.summary()?.to_string();
    if let Some(table) = build.model.gtable() {
        table.write_csv(&dir.join("gtable.csv"))?;
    }
    let mut report = build.report;
    let mut status = None;
    if !check_only && cfg.flow.enabled {
        let flow = run_flow(cfg, &build.model)?;
        write_trajectory(&dir.join("trajectory.csv"), &flow.rows)?;
        let name = if flow.trajectory.is_some() {
            "final_profile.csv"
        } else {
            "blowup_profile.csv"
        };
        write_profile(&dir.join(name), &flow.final_profile)?;
        status = flow.trajectory.as_ref().map(|t| t.status);
        report.extend(flow.report);
    }
    let mut text = String::new();
    text.push_str(&summary);
    text.push_str(&format!("mesh N             {}\n", cfg.mesh.n));
    text.push_str(&format!("seed               {}\n", cfg.seed));
    if let Some(s) = status {
        text.push_str(&format!("flow status        {}\n", s.as_str()));
    }
    text.push('\n');
    text.push_str(&report.to_string());
    fs::write(dir.join("model_report.txt"), &text)?;
    report.write_csv(BufWriter::new(File::create(dir.join("checks.csv"))?))?;
    Ok(RunOutcome {
        report,
        status,
        summary: text,
    })
}

/// `t,E,decay_rate,decay_rate_alt,dEdt_fd,sup_ut,sup_u`; `dEdt_fd` is empty
/// at the first and last rows.
pub fn write_trajectory(path: &Path, rows: &[Row]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,E,decay_rate,decay_rate_alt,dEdt_fd,sup_ut,sup_u")?;
    for (k, r) in rows.iter().enumerate() {
        let fd = if k > 0 && k + 1 < rows.len() {
            let (a, c) = (&rows[k - 1], &rows[k + 1]);
            format!(
                "{:.16e}",
                centered_derivative((a.t, a.reading.e), (r.t, r.reading.e), (c.t, c.reading.e))
            )
        } else {
            String::new()
        };
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e}",
            r.t, r.reading.e, r.reading.decay_rate, r.reading.decay_rate_alt, fd, r.sup_ut, r.sup_u
        )?;
    }
    w.flush()
}

/// Two columns `x,u` on the uniform mesh.
pub fn write_profile(path: &Path, u: &[f64]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,u")?;
    let n = u.len().saturating_sub(1).max(1);
    for (i, v) in u.iter().enumerate() {
        writeln!(w, "{:.16e},{:.16e}", i as f64 / n as f64, v)?;
    }
    w.flush()
}
