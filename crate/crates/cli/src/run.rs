//! Command dispatch and exit codes.

use crate::config::{Command, RunConfig};
use crate::fields;
use crate::output::{self, line_plot, monitor_rows, write_csv, write_json, Series, MONITOR_COLUMNS};
use pointhartree::hartree::{conserved, hypothesis_check, local_singularity_exponent};
use pointhartree::point::bethe_peierls_residual;
use pointhartree::propagator::dispersive_decay_experiment;
use pointhartree::radial::{charge_link_residual, decompose, lp_norm};
use pointhartree::solver::{
    evolve_with, globalization_check, picard_window, proof_window, random_perturbations, stability_experiment,
    Termination, Trajectory,
};
use pointhartree::spectral::perturbed_norm;
use pointhartree::verify::selftest;
use pointhartree::{Error, PointInteraction};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PHYSICS: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("{message}")]
    Physics { message: String, detail: serde_json::Value },
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Physics { .. } => EXIT_PHYSICS,
            _ => EXIT_USAGE,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Usage(_) => "usage",
            RunError::Physics { .. } => "physics",
            RunError::Io(_) => "io",
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        let detail = match &e {
            Error::NonContraction(ratios) => json!({ "ratios": ratios }),
            Error::IterationCap(n) => json!({ "iterations": n }),
            Error::Window(t) => json!({ "t": t }),
            Error::Completeness { defect, tol } => json!({ "defect": defect, "tol": tol }),
            _ => serde_json::Value::Null,
        };
        match e {
            Error::NonContraction(_)
            | Error::IterationCap(_)
            | Error::Window(_)
            | Error::Completeness { .. }
            | Error::Divergent(_) => RunError::Physics { message: e.to_string(), detail },
            other => RunError::Usage(other.to_string()),
        }
    }
}

/// What a successful dispatch produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    files: Vec<PathBuf>,
    lines: Vec<String>,
}

impl<'a> Ctx<'a> {
    fn path(&mut self, suffix: &str) -> PathBuf {
        let p = output::path(&self.cfg.output.dir, &self.cfg.output.prefix, suffix);
        self.files.push(p.clone());
        p
    }

    fn json<T: Serialize>(&mut self, passed: bool, report: &T) -> Result<(), RunError> {
        let p = self.path("report.json");
        let status = if passed { "ok" } else { "failed" };
        write_json(&p, self.cfg.command.name(), self.cfg.solver.seed, status, report)
    }

    fn csv(&mut self, suffix: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), RunError> {
        let p = self.path(suffix);
        write_csv(&p, self.cfg.solver.seed, header, rows)
    }

    fn svg(&mut self, suffix: &str, title: &str, x_label: &str, series: &[Series], log_x: bool, log_y: bool) -> Result<(), RunError> {
        if !self.cfg.output.svg {
            return Ok(());
        }
        let text = line_plot(title, x_label, series, log_x, log_y, self.cfg.solver.seed);
        let p = self.path(suffix);
        output::write_text(&p, &text)
    }

    fn finish(self, passed: bool) -> Outcome {
        Outcome { code: if passed { EXIT_OK } else { EXIT_PHYSICS }, files: self.files, lines: self.lines }
    }
}

fn monitor_outputs(ctx: &mut Ctx, traj: &Trajectory) -> Result<(), RunError> {
    ctx.csv("monitors.csv", &MONITOR_COLUMNS, &monitor_rows(&traj.monitors))?;
    let t: Vec<f64> = traj.monitors.iter().map(|m| m.t).collect();
    let hs: Vec<f64> = traj.monitors.iter().map(|m| m.h_s_norm).collect();
    let l2: Vec<f64> = traj.monitors.iter().map(|m| m.l2_norm).collect();
    let lr: Vec<f64> = traj.monitors.iter().map(|m| m.lr_norm).collect();
    ctx.svg(
        "monitors.svg",
        "norms along the trajectory",
        "t",
        &[
            Series { name: "h_s_norm", x: &t, y: &hs },
            Series { name: "l2_norm", x: &t, y: &l2 },
            Series { name: "lr_norm", x: &t, y: &lr },
        ],
        false,
        false,
    )
}

fn trajectory_summary(traj: &Trajectory) -> serde_json::Value {
    json!({
        "termination": traj.termination,
        "mass_drift": traj.mass_drift(),
        "energy_drift": traj.energy_drift(),
        "samples": traj.monitors.len(),
        "warnings": traj.warnings,
    })
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    output::prepare_dir(&cfg.output.dir)?;
    let mut ctx = Ctx { cfg, files: Vec::new(), lines: Vec::new() };
    if cfg.command == Command::Selftest {
        let report = selftest(&cfg.selftest_criteria, cfg.solver.seed);
        ctx.lines = report.results.iter().map(|r| r.line()).collect();
        ctx.lines.push(format!("{}/{} criteria passed", report.passed(), report.results.len()));
        ctx.json(report.all_passed(), &report)?;
        return Ok(ctx.finish(report.all_passed()));
    }
    let grid = fields::grid(&cfg.grid)?;
    let op = cfg.physics.op;
    let w = fields::potential(&cfg.physics.potential, grid)?;
    match cfg.command {
        Command::CheckHypotheses => {
            let report = hypothesis_check(&w, cfg.physics.s);
            ctx.lines.push(format!("applicable theorems at s = {}: {:?}", cfg.physics.s, report.applicable()));
            ctx.json(true, &json!({ "report": report, "applicable": report.applicable() }))?;
            Ok(ctx.finish(true))
        }
        Command::Norms => {
            let f = fields::datum(&cfg.physics.datum, grid)?;
            let t = fields::transform(grid, &cfg.grid, op)?;
            let free = fields::transform(grid, &cfg.grid, PointInteraction::Friedrichs)?;
            let lp: Vec<serde_json::Value> = cfg
                .physics
                .lebesgue
                .iter()
                .map(|&p| match lp_norm(&f, p) {
                    Ok(v) => json!({ "p": p, "norm": v }),
                    Err(e) => json!({ "p": p, "norm": null, "error": e.to_string() }),
                })
                .collect();
            let state = decompose(&f, cfg.physics.lambda)?;
            let bp = bethe_peierls_residual(&f, op);
            let energy = if op.alpha().is_some() { conserved(&f, &w, op, cfg.physics.lambda).ok() } else { None };
            let report = json!({
                "alpha": op.label(),
                "s": cfg.physics.s,
                "mass": f.mass(),
                "lp": lp,
                "perturbed_norm": perturbed_norm(&f, &t, cfg.physics.s)?,
                "classical_norm": perturbed_norm(&f, &free, cfg.physics.s)?,
                "kappa": [state.kappa.re, state.kappa.im],
                "charge_link_residual": charge_link_residual(&state, op),
                "bethe_peierls": bp,
                "energy": energy.map(|c| c.energy),
                "potential_sup": w.profile().sup_abs(),
                "potential_local_exponent": local_singularity_exponent(&w),
            });
            ctx.lines.push(format!("mass = {:.6e}", f.mass()));
            ctx.json(true, &report)?;
            Ok(ctx.finish(true))
        }
        Command::Evolve => {
            let f = fields::datum(&cfg.physics.datum, grid)?;
            let t = fields::transform(grid, &cfg.grid, op)?;
            let traj = evolve_with(&f, &w, &t, &cfg.solver.config)?;
            monitor_outputs(&mut ctx, &traj)?;
            let passed = traj.completed();
            ctx.lines.push(format!("termination: {:?}", traj.termination));
            ctx.json(passed, &trajectory_summary(&traj))?;
            Ok(ctx.finish(passed))
        }
        Command::Picard => {
            let f = fields::datum(&cfg.physics.datum, grid)?;
            let t = fields::transform(grid, &cfg.grid, op)?;
            let window = cfg.solver.window.unwrap_or_else(|| proof_window(&f, &w));
            let out = match picard_window(&f, &w, &t, window, &cfg.solver.config) {
                Ok(o) => o,
                Err(e) => {
                    let err = RunError::from(e);
                    if let RunError::Physics { message, detail } = &err {
                        ctx.json(false, &json!({ "window": window, "error": message, "detail": detail }))?;
                    }
                    return Err(err);
                }
            };
            let strang = evolve_with(&f, &w, &t, &pointhartree::solver::SolverConfig { t_end: window, ..cfg.solver.config })?;
            let diff = out.trajectory.sup_distance(&strang).ok();
            monitor_outputs(&mut ctx, &out.trajectory)?;
            ctx.lines.push(format!("window {window:.6e}: {} iterations, ratios {:?}", out.iterations, out.ratios));
            ctx.json(
                true,
                &json!({
                    "window": window,
                    "iterations": out.iterations,
                    "differences": out.differences,
                    "ratios": out.ratios,
                    "strang_sup_distance": diff,
                    "trajectory": trajectory_summary(&out.trajectory),
                }),
            )?;
            Ok(ctx.finish(true))
        }
        Command::Dispersive => {
            let f = fields::datum(&cfg.physics.datum, grid)?;
            let t = fields::transform(grid, &cfg.grid, op)?;
            let s = &cfg.solver;
            let times: Vec<f64> = (0..s.samples)
                .map(|i| s.t_min * (s.t_max / s.t_min).powf(i as f64 / (s.samples - 1) as f64))
                .collect();
            let reports = cfg
                .physics
                .lebesgue
                .iter()
                .map(|&r| dispersive_decay_experiment(&f, &t, r, &times))
                .collect::<Result<Vec<_>, Error>>()?;
            let mut header = vec!["t".to_string()];
            header.extend(reports.iter().map(|r| format!("lr_norm_{}", r.r)));
            let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows: Vec<Vec<f64>> = times
                .iter()
                .enumerate()
                .map(|(i, &time)| std::iter::once(time).chain(reports.iter().map(|r| r.norms[i])).collect())
                .collect();
            ctx.csv("decay.csv", &header_ref, &rows)?;
            let names: Vec<String> = reports.iter().map(|r| format!("r = {:.4}", r.r)).collect();
            let series: Vec<Series> =
                reports.iter().zip(&names).map(|(r, n)| Series { name: n, x: &times, y: &r.norms }).collect();
            ctx.svg("decay.svg", "L^r decay of the linear flow", "t", &series, true, true)?;
            for r in &reports {
                ctx.lines.push(format!("r = {:.4}: slope {:.4} (target {:.4})", r.r, r.slope, r.target));
            }
            let passed = reports.iter().all(|r| r.passed);
            ctx.json(passed, &reports)?;
            Ok(ctx.finish(passed))
        }
        Command::Stability => {
            let f = fields::datum(&cfg.physics.datum, grid)?;
            let t = fields::transform(grid, &cfg.grid, op)?;
            let (g, v) = random_perturbations(grid, cfg.solver.seed);
            let table = stability_experiment(&f, &w, &t, &cfg.solver.config, &cfg.solver.eps, &g, &v)?;
            let rows: Vec<Vec<f64>> = table
                .rows
                .iter()
                .map(|r| {
                    let target = match r.target {
                        pointhartree::solver::PerturbationTarget::Datum => 0.0,
                        pointhartree::solver::PerturbationTarget::Potential => 1.0,
                    };
                    vec![target, r.eps, r.error, r.error_over_eps, r.hs_error]
                })
                .collect();
            ctx.csv("stability.csv", &["target", "eps", "error", "error_over_eps", "hs_error"], &rows)?;
            ctx.lines.push(format!("spread: datum {:.3}, potential {:.3}", table.spread_datum, table.spread_potential));
            ctx.json(table.passed, &table)?;
            Ok(ctx.finish(table.passed))
        }
        Command::Globalize => {
            let f = fields::datum(&cfg.physics.datum, grid)?;
            let t = fields::transform(grid, &cfg.grid, op)?;
            let rep = globalization_check(&f, &w, &t, &cfg.solver.config, cfg.solver.horizon)?;
            let completed = rep.termination == Termination::Completed;
            let passed = completed && (!w.is_nonnegative() || (rep.inequality_holds && rep.within_bound));
            ctx.lines.push(format!(
                "H^1 sup {:.6e}, bound {:.6e}, kinetic excess {:.3e}",
                rep.h1_sup, rep.bound, rep.max_kinetic_excess
            ));
            ctx.json(passed, &rep)?;
            Ok(ctx.finish(passed))
        }
        Command::Selftest => unreachable!("handled above"),
    }
}
