//! Nonlinear evolution: Strang splitting, Picard iteration of the Duhamel map,
//! and the stability, globalization and free-limit experiments built on them.

use crate::error::{is_transition, Error, Result, Warning};
use crate::field::ReducedField;
use crate::grid::RadialGrid;
use crate::hartree::{hartree_values, interaction_with, multiply};
use crate::point::PointInteraction;
use crate::propagator::ALIASING_FRACTION;
use crate::radial::{has_singular_part, lp_norm, Potential};
use crate::spectral::RobinTransform;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub dt: f64,
    /// Final time; negative values evolve backward.
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Stop when the monitored norm exceeds this; defaults to 1e3 times its initial value.
    pub blowup_threshold: Option<f64>,
    /// Regularity of the monitored perturbed Sobolev norm.
    pub monitor_s: f64,
    /// Exponent of the monitored Lebesgue norm.
    pub monitor_r: f64,
    /// Time nodes per Picard window; zero means one node per dt.
    pub quadrature_nodes_per_window: usize,
    /// Record a state and monitor every this many steps.
    pub record_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            picard_tol: 1e-6,
            picard_max_iter: 50,
            blowup_threshold: None,
            monitor_s: 1.0,
            monitor_r: 2.5,
            quadrature_nodes_per_window: 0,
            record_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Range(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.t_end.is_finite() {
            return Err(Error::Range("t_end must be finite".into()));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::Range(format!("picard_tol must be positive, got {}", self.picard_tol)));
        }
        if self.picard_max_iter == 0 {
            return Err(Error::Range("picard_max_iter must be at least 1".into()));
        }
        if !(0.0..=2.0).contains(&self.monitor_s) {
            return Err(Error::Range(format!("monitor_s must lie in [0, 2], got {}", self.monitor_s)));
        }
        if is_transition(self.monitor_s) {
            return Err(Error::TransitionRegularity(self.monitor_s));
        }
        if !(self.monitor_r >= 1.0) {
            return Err(Error::Range(format!("monitor_r must be >= 1, got {}", self.monitor_r)));
        }
        if let Some(b) = self.blowup_threshold {
            if !(b > 0.0) {
                return Err(Error::Range(format!("blowup_threshold must be positive, got {b}")));
            }
        }
        if self.record_every == 0 {
            return Err(Error::Range("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Quantities recorded along a trajectory; one CSV row each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monitor {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// Perturbed Sobolev norm at the monitored s (half-line normalization).
    pub h_s_norm: f64,
    pub l2_norm: f64,
    pub lr_norm: f64,
    /// Mass fraction in the outer tenth of the box.
    pub tail_mass: f64,
    /// (-Delta_alpha)[u], recorded for the globalization inequality.
    #[serde(skip)]
    pub kinetic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Blowup { t: f64, norm: f64, threshold: f64 },
    AliasingAbort { t: f64, tail_mass: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ReducedField>,
    pub monitors: Vec<Monitor>,
    pub termination: Termination,
    pub warnings: Vec<Warning>,
}

impl Trajectory {
    /// max_t |M(u(t)) - M(f)| / M(f).
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.monitors[0].mass;
        self.monitors.iter().map(|m| (m.mass - m0).abs()).fold(0.0, f64::max) / m0
    }

    /// max_t |E(u(t)) - E(f)|.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.monitors[0].energy;
        self.monitors.iter().map(|m| (m.energy - e0).abs()).fold(0.0, f64::max)
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// sup over common sample times of ||u(t) - v(t)||_2.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.times.len() != other.times.len()
            || self.times.iter().zip(&other.times).any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + a.abs()))
        {
            return Err(Error::Range("trajectories are sampled at different times".into()));
        }
        let mut best = 0.0f64;
        for (a, b) in self.states.iter().zip(&other.states) {
            best = best.max(a.sub(b)?.mass().sqrt());
        }
        Ok(best)
    }
}

fn phase(u: &ReducedField, v: &[f64], tau: f64) -> ReducedField {
    let vals = u.values().iter().zip(v).map(|(a, b)| a * Complex64::from_polar(1.0, -b * tau)).collect();
    ReducedField::new(*u.grid(), vals).expect("grid-sized")
}

fn linear_phases(t: &RobinTransform, time: f64) -> Vec<Complex64> {
    t.energies().iter().map(|e| Complex64::from_polar(1.0, -e * time)).collect()
}

fn apply_diagonal(t: &RobinTransform, u: &ReducedField, d: &[Complex64]) -> ReducedField {
    let mut c = t.analyze(u.values());
    for (x, y) in c.iter_mut().zip(d) {
        *x *= y;
    }
    t.synthesize(&c)
}

/// One Strang step from (u, V[u]); returns (u', V[u']). The last half phase
/// leaves |u| unchanged, so V[u'] is the potential computed after the linear substep.
fn strang_fsal(
    u: &ReducedField,
    v: &[f64],
    w: &Potential,
    t: &RobinTransform,
    dt: f64,
    lin: &[Complex64],
) -> (ReducedField, Vec<f64>) {
    let half = phase(u, v, 0.5 * dt);
    let moved = apply_diagonal(t, &half, lin);
    let v2 = hartree_values(w, &moved);
    (phase(&moved, &v2, 0.5 * dt), v2)
}

/// u <- e^{-i dt V/2} e^{i dt Delta_alpha} e^{-i dt V/2} u; dt may be negative, which inverts the step.
pub fn strang_step(u: &ReducedField, w: &Potential, t: &RobinTransform, dt: f64) -> Result<ReducedField> {
    check(u, w, t)?;
    if dt == 0.0 {
        return Ok(u.clone());
    }
    let v = hartree_values(w, u);
    Ok(strang_fsal(u, &v, w, t, dt, &linear_phases(t, dt)).0)
}

fn check(u: &ReducedField, w: &Potential, t: &RobinTransform) -> Result<()> {
    if u.grid() != w.grid() || u.grid() != t.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn monitor(u: &ReducedField, v: &[f64], t: &RobinTransform, cfg: &SolverConfig, time: f64) -> Result<Monitor> {
    let c = t.analyze(u.values());
    let (mut hs, mut kin) = (0.0, 0.0);
    for (x, &e) in c.iter().zip(t.energies()) {
        hs += (1.0 + e).powf(cfg.monitor_s) * x.norm_sqr();
        kin += e * x.norm_sqr();
    }
    let kinetic = 4.0 * PI * kin;
    let mass = u.mass();
    let lr_norm = lp_norm(u, cfg.monitor_r).unwrap_or(f64::INFINITY);
    Ok(Monitor {
        t: time,
        mass,
        energy: 0.5 * kinetic + interaction_with(v, u),
        h_s_norm: hs.sqrt(),
        l2_norm: mass.sqrt(),
        lr_norm,
        tail_mass: u.boundary_mass_fraction(),
        kinetic,
    })
}

fn initial_warnings(f: &ReducedField, w: &Potential, t: &RobinTransform) -> Result<Vec<Warning>> {
    let mut out = t.forward(f)?.warnings;
    out.extend(crate::hartree::hartree_potential(w, f)?.warnings);
    Ok(out)
}

/// Marches Strang steps on the prebuilt transform t from 0 to cfg.t_end.
pub fn evolve_with(f: &ReducedField, w: &Potential, t: &RobinTransform, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    check(f, w, t)?;
    if t.op().alpha().is_some_and(|a| a < 0.0) {
        return Err(Error::NegativeCoupling);
    }
    if cfg.t_end < 0.0 {
        let mut back = evolve_with(&f.conj(), w, t, &SolverConfig { t_end: -cfg.t_end, ..*cfg })?;
        for s in back.states.iter_mut() {
            *s = s.conj();
        }
        for (x, m) in back.times.iter_mut().zip(back.monitors.iter_mut()) {
            *x = -*x;
            m.t = -m.t;
        }
        if let Termination::Blowup { t, .. } | Termination::AliasingAbort { t, .. } = &mut back.termination {
            *t = -*t;
        }
        return Ok(back);
    }
    let warnings = initial_warnings(f, w, t)?;
    let steps = (cfg.t_end / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 { 0.0 } else { cfg.t_end / steps as f64 };
    let lin = linear_phases(t, dt);
    let mut u = f.clone();
    let mut v = hartree_values(w, &u);
    let first = monitor(&u, &v, t, cfg, 0.0)?;
    let threshold = cfg.blowup_threshold.unwrap_or(1e3 * first.h_s_norm.max(f64::MIN_POSITIVE));
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u.clone()],
        monitors: vec![first],
        termination: Termination::Completed,
        warnings,
    };
    for k in 1..=steps {
        let (nu, nv) = strang_fsal(&u, &v, w, t, dt, &lin);
        u = nu;
        v = nv;
        let time = k as f64 * dt;
        let tail = u.boundary_mass_fraction();
        let stop = tail > ALIASING_FRACTION;
        if k % cfg.record_every == 0 || k == steps || stop {
            let m = monitor(&u, &v, t, cfg, time)?;
            traj.times.push(time);
            traj.states.push(u.clone());
            traj.monitors.push(m);
            if stop {
                traj.termination = Termination::AliasingAbort { t: time, tail_mass: tail };
                traj.warnings.push(Warning::BoundaryMass { fraction: tail });
                break;
            }
            if !(m.h_s_norm <= threshold) {
                traj.termination = Termination::Blowup { t: time, norm: m.h_s_norm, threshold };
                break;
            }
        }
    }
    Ok(traj)
}

/// Builds the transform for op and evolves.
pub fn evolve(f: &ReducedField, w: &Potential, op: PointInteraction, cfg: &SolverConfig) -> Result<Trajectory> {
    if op.alpha().is_some_and(|a| a < 0.0) {
        return Err(Error::NegativeCoupling);
    }
    let t = RobinTransform::new(*f.grid(), op)?;
    evolve_with(f, w, &t, cfg)
}

/// Window length 1 / (6 M^2 sup|w|) with M = ||f||_2: the Lipschitz bound
/// 3 T sup|w| M^2 of the Duhamel map in sup-L^2 then equals 1/2.
pub fn proof_window(f: &ReducedField, w: &Potential) -> f64 {
    let sup = w.profile().sup_abs();
    1.0 / (6.0 * f.mass() * sup)
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub trajectory: Trajectory,
    /// sup_t ||u^{(m+1)} - u^{(m)}||_2 per iteration.
    pub differences: Vec<f64>,
    /// Successive quotients of the differences.
    pub ratios: Vec<f64>,
    pub iterations: usize,
}

/// Cumulative integrals int_0^{tau_j} g of uniformly sampled vectors:
/// Simpson for even j, Simpson plus the 3/8 rule for odd j >= 3, and
/// the three-point formula for j = 1.
fn cumulative_simpson(g: &[Vec<Complex64>], delta: f64) -> Vec<Vec<Complex64>> {
    let m = g.len() - 1;
    let width = g[0].len();
    let zero = vec![Complex64::new(0.0, 0.0); width];
    let mut out = vec![zero; m + 1];
    let comb = |base: &[Complex64], terms: &[(f64, usize)], scale: f64| -> Vec<Complex64> {
        (0..width)
            .map(|i| base[i] + terms.iter().map(|&(c, j)| g[j][i] * c).sum::<Complex64>() * scale)
            .collect()
    };
    if m >= 1 {
        let zero = out[0].clone();
        out[1] = comb(&zero, &[(5.0, 0), (8.0, 1), (-1.0, 2.min(m))], delta / 12.0);
        if m == 1 {
            out[1] = comb(&zero, &[(0.5, 0), (0.5, 1)], delta);
        }
    }
    for j in (2..=m).step_by(2) {
        out[j] = comb(&out[j - 2].clone(), &[(1.0, j - 2), (4.0, j - 1), (1.0, j)], delta / 3.0);
    }
    for j in (3..=m).step_by(2) {
        out[j] = comb(&out[j - 3].clone(), &[(1.0, j - 3), (3.0, j - 2), (3.0, j - 1), (1.0, j)], 3.0 * delta / 8.0);
    }
    out
}

/// Fixed-point iteration of u(t) = e^{it Delta_alpha} f - i int_0^t e^{i(t-tau) Delta_alpha} (w*|u|^2) u dtau
/// on [0, window], starting from the linear flow.
pub fn picard_window(
    f: &ReducedField,
    w: &Potential,
    t: &RobinTransform,
    window: f64,
    cfg: &SolverConfig,
) -> Result<PicardOutcome> {
    cfg.validate()?;
    check(f, w, t)?;
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::Range(format!("window must be positive, got {window}")));
    }
    let m = if cfg.quadrature_nodes_per_window > 0 {
        cfg.quadrature_nodes_per_window
    } else {
        (window / cfg.dt - 1e-9).ceil() as usize
    }
    .max(2);
    let delta = window / m as f64;
    let times: Vec<f64> = (0..=m).map(|j| j as f64 * delta).collect();
    let e = t.energies();
    let f_hat = t.analyze(f.values());
    let evolve_coeffs = |acc: &[Complex64], time: f64| -> ReducedField {
        let c: Vec<Complex64> = f_hat
            .iter()
            .zip(acc)
            .zip(e)
            .map(|((a, b), &en)| Complex64::from_polar(1.0, -en * time) * (a - Complex64::i() * b))
            .collect();
        t.synthesize(&c)
    };
    let zero = vec![Complex64::new(0.0, 0.0); f_hat.len()];
    let mut states: Vec<ReducedField> = times.par_iter().map(|&s| evolve_coeffs(&zero, s)).collect();
    let mut differences = Vec::new();
    let mut ratios = Vec::new();
    let mut above = 0usize;
    let mut converged = false;
    for _ in 0..cfg.picard_max_iter {
        let g: Vec<Vec<Complex64>> = states
            .par_iter()
            .zip(&times)
            .map(|(u, &s)| {
                let n = multiply(u, &hartree_values(w, u));
                t.analyze(n.values())
                    .into_iter()
                    .zip(e)
                    .map(|(c, &en)| c * Complex64::from_polar(1.0, en * s))
                    .collect()
            })
            .collect();
        let integrals = cumulative_simpson(&g, delta);
        let next: Vec<ReducedField> =
            integrals.par_iter().zip(&times).map(|(acc, &s)| evolve_coeffs(acc, s)).collect();
        let mut diff = 0.0f64;
        for (a, b) in next.iter().zip(&states) {
            diff = diff.max(a.sub(b)?.mass().sqrt());
        }
        states = next;
        if let Some(&prev) = differences.last() {
            let ratio: f64 = if prev > 0.0 { diff / prev } else { 0.0 };
            ratios.push(ratio);
            above = if ratio > 1.0 { above + 1 } else { 0 };
        }
        differences.push(diff);
        if diff < cfg.picard_tol {
            converged = true;
            break;
        }
        if above >= 3 {
            return Err(Error::NonContraction(ratios));
        }
    }
    if !converged {
        return Err(Error::IterationCap(cfg.picard_max_iter));
    }
    let mut monitors = Vec::with_capacity(states.len());
    for (u, &s) in states.iter().zip(&times) {
        monitors.push(monitor(u, &hartree_values(w, u), t, cfg, s)?);
    }
    let iterations = differences.len();
    let trajectory = Trajectory {
        times,
        states,
        monitors,
        termination: Termination::Completed,
        warnings: initial_warnings(f, w, t)?,
    };
    Ok(PicardOutcome { trajectory, differences, ratios, iterations })
}

/// Smooth random perturbation directions for the stability experiment.
pub fn random_perturbations(grid: RadialGrid, seed: u64) -> (ReducedField, Potential) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut bumps = |n: usize| -> Vec<(f64, f64, f64, f64)> {
        (0..n)
            .map(|_| (rng.gen_range(0.0..3.0), rng.gen_range(0.7..1.5), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    };
    let gb = bumps(3);
    let vb = bumps(3);
    let g = ReducedField::from_radial_fn(grid, |r| {
        gb.iter().map(|&(c, s, a, b)| Complex64::new(a, b) * (-((r - c) / s).powi(2) - (r / 4.0).powi(2)).exp()).sum()
    });
    let v = Potential::from_fn(grid, |r| vb.iter().map(|&(c, s, a, _)| a * (-((r - c) / s).powi(2) - (r / 4.0).powi(2)).exp()).sum());
    (g, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationTarget {
    Datum,
    Potential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityRow {
    pub target: PerturbationTarget,
    pub eps: f64,
    /// sup_t ||u_eps(t) - u(t)||_2
    pub error: f64,
    pub error_over_eps: f64,
    /// sup_t ||u_eps(t) - u(t)|| in the monitored perturbed norm.
    pub hs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityTable {
    pub rows: Vec<StabilityRow>,
    /// max/min of error/eps per target.
    pub spread_datum: f64,
    pub spread_potential: f64,
    pub passed: bool,
}

/// Allowed max/min spread of error/eps across the scales.
pub const STABILITY_SPREAD: f64 = 3.0;

/// Re-evolves with f + eps g and with w + eps v for each scale and tabulates the deviation from the base run.
pub fn stability_experiment(
    f: &ReducedField,
    w: &Potential,
    t: &RobinTransform,
    cfg: &SolverConfig,
    scales: &[f64],
    g: &ReducedField,
    v: &Potential,
) -> Result<StabilityTable> {
    let base = evolve_with(f, w, t, cfg)?;
    if !base.completed() {
        return Err(Error::Domain("base run did not complete".into()));
    }
    let jobs: Vec<(PerturbationTarget, f64)> = [PerturbationTarget::Datum, PerturbationTarget::Potential]
        .iter()
        .flat_map(|&k| scales.iter().map(move |&e| (k, e)))
        .collect();
    let rows: Vec<StabilityRow> = jobs
        .par_iter()
        .map(|&(target, eps)| -> Result<StabilityRow> {
            let run = match target {
                PerturbationTarget::Datum => evolve_with(&f.add(&g.scale(Complex64::new(eps, 0.0)))?, w, t, cfg)?,
                PerturbationTarget::Potential => evolve_with(f, &w.perturbed(eps, v)?, t, cfg)?,
            };
            let error = run.sup_distance(&base)?;
            let mut hs_error = 0.0f64;
            for (a, b) in run.states.iter().zip(&base.states) {
                hs_error = hs_error.max(crate::spectral::perturbed_norm(&a.sub(b)?, t, cfg.monitor_s)?);
            }
            let error_over_eps = if eps == 0.0 { 0.0 } else { error / eps };
            Ok(StabilityRow { target, eps, error, error_over_eps, hs_error })
        })
        .collect::<Result<_>>()?;
    let spread = |k: PerturbationTarget| {
        let r: Vec<f64> = rows.iter().filter(|x| x.target == k && x.eps != 0.0).map(|x| x.error_over_eps).collect();
        let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = r.iter().cloned().fold(0.0, f64::max);
        if r.is_empty() {
            1.0
        } else if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    };
    let spread_datum = spread(PerturbationTarget::Datum);
    let spread_potential = spread(PerturbationTarget::Potential);
    let passed = spread_datum <= STABILITY_SPREAD && spread_potential <= STABILITY_SPREAD;
    Ok(StabilityTable { rows, spread_datum, spread_potential, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallMassRow {
    pub mass: f64,
    pub bounded: bool,
    pub sup_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalizationReport {
    pub horizon: f64,
    pub samples: usize,
    /// max_t (1/2)(-Delta_alpha)[u(t)] - E(u(t)); non-positive when w >= 0.
    pub max_kinetic_excess: f64,
    pub inequality_holds: bool,
    pub h1_initial: f64,
    pub h1_sup: f64,
    /// sqrt((M(f) + 2 E(f)) / (4 pi)), the conservation bound on the H^1_alpha norm for w >= 0.
    pub bound: f64,
    pub within_bound: bool,
    pub termination: Termination,
    /// Downward mass sweep, run when w changes sign.
    pub small_mass: Vec<SmallMassRow>,
    pub largest_bounded_mass: Option<f64>,
}

/// Tolerance of the kinetic-energy inequality, relative to 1 + |E|.
pub const KINETIC_INEQUALITY_TOL: f64 = 1e-8;
/// Relative slack of the H^1 bound.
pub const GLOBAL_BOUND_SLACK: f64 = 0.1;

/// Long-horizon run checking the a-priori H^1 mechanism; cfg.t_end is replaced by the horizon
/// and the monitored norm by H^1.
pub fn globalization_check(
    f: &ReducedField,
    w: &Potential,
    t: &RobinTransform,
    cfg: &SolverConfig,
    horizon: f64,
) -> Result<GlobalizationReport> {
    let cfg = SolverConfig { t_end: horizon, monitor_s: 1.0, ..*cfg };
    let traj = evolve_with(f, w, t, &cfg)?;
    let first = traj.monitors[0];
    let max_kinetic_excess = traj
        .monitors
        .iter()
        .map(|m| (0.5 * m.kinetic - m.energy) / (1.0 + m.energy.abs()))
        .fold(f64::NEG_INFINITY, f64::max);
    let h1_sup = traj.monitors.iter().map(|m| m.h_s_norm).fold(0.0, f64::max);
    let bound = ((first.mass + 2.0 * first.energy).max(0.0) / (4.0 * PI)).sqrt();
    let mut small_mass = Vec::new();
    if !w.is_nonnegative() {
        let runs: Vec<Result<SmallMassRow>> = [1.0, 0.5, 0.25, 0.125]
            .par_iter()
            .map(|&c: &f64| {
                let fs = f.scale(Complex64::new(c.sqrt(), 0.0));
                let tr = evolve_with(&fs, w, t, &cfg)?;
                let h0 = tr.monitors[0].h_s_norm;
                let sup = tr.monitors.iter().map(|m| m.h_s_norm).fold(0.0, f64::max);
                Ok(SmallMassRow { mass: fs.mass(), bounded: tr.completed(), sup_ratio: sup / h0 })
            })
            .collect();
        small_mass = runs.into_iter().collect::<Result<_>>()?;
    }
    let largest_bounded_mass = small_mass.iter().filter(|r| r.bounded).map(|r| r.mass).fold(None, |a: Option<f64>, m| {
        Some(a.map_or(m, |x| x.max(m)))
    });
    Ok(GlobalizationReport {
        horizon,
        samples: traj.monitors.len(),
        max_kinetic_excess,
        inequality_holds: max_kinetic_excess <= KINETIC_INEQUALITY_TOL,
        h1_initial: first.h_s_norm,
        h1_sup,
        bound,
        within_bound: h1_sup <= (1.0 + GLOBAL_BOUND_SLACK) * bound,
        termination: traj.termination,
        small_mass,
        largest_bounded_mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeLimitRow {
    pub alpha: f64,
    /// sup_t ||u_alpha(t) - u_Friedrichs(t)||_2
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeLimitReport {
    pub rows: Vec<FreeLimitRow>,
    pub decreasing: bool,
}

/// Deviations below this are treated as equal when checking monotonicity.
pub const FREE_LIMIT_FLOOR: f64 = 1e-8;

/// Evolves a regular datum for each alpha and for the Friedrichs extension on [0, cfg.t_end].
pub fn free_limit_check(f: &ReducedField, w: &Potential, alphas: &[f64], cfg: &SolverConfig) -> Result<FreeLimitReport> {
    if has_singular_part(f) {
        return Err(Error::Domain("free-limit comparison needs a regular datum (f(0) = 0)".into()));
    }
    if alphas.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Range("alphas must be strictly increasing".into()));
    }
    let grid = *f.grid();
    let mut ops: Vec<PointInteraction> = alphas.iter().map(|&a| PointInteraction::finite(a)).collect();
    ops.push(PointInteraction::Friedrichs);
    let runs: Vec<Trajectory> = ops
        .par_iter()
        .map(|&op| evolve_with(f, w, &RobinTransform::new(grid, op)?, cfg))
        .collect::<Result<_>>()?;
    let reference = runs.last().expect("Friedrichs run");
    let mut rows = Vec::new();
    for (a, run) in alphas.iter().zip(&runs) {
        rows.push(FreeLimitRow { alpha: *a, deviation: run.sup_distance(reference)? });
    }
    let decreasing = rows
        .windows(2)
        .all(|p| p[1].deviation < p[0].deviation || p[0].deviation.max(p[1].deviation) < FREE_LIMIT_FLOOR);
    Ok(FreeLimitReport { rows, decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::evolve_linear;
    use crate::radial::domain_element;

    fn gaussian(grid: RadialGrid, a: f64, amp: f64) -> ReducedField {
        ReducedField::from_radial_fn(grid, |r| Complex64::new(amp * (-a * r * r).exp(), 0.0))
    }

    fn setup(n: usize) -> (RadialGrid, RobinTransform, Potential, ReducedField) {
        let g = RadialGrid::new(20.0, n).unwrap();
        let op = PointInteraction::finite(1.0);
        let t = RobinTransform::new(g, op).unwrap();
        let w = Potential::gaussian(g, 1.0, 1.0);
        let f = domain_element(&gaussian(g, 0.5, 1.0), op, 1.0).unwrap();
        (g, t, w, f)
    }

    #[test]
    fn zero_potential_is_linear_flow() {
        let (g, t, _, f) = setup(200);
        let w = Potential::zero(g);
        let one = strang_step(&f, &w, &t, 0.3).unwrap();
        assert!(one.relative_distance(&evolve_linear(&f, &t, 0.3).unwrap().value) < 1e-12);
        assert!(strang_step(&f, &w, &t, 0.0).unwrap() == f);
        let cfg = SolverConfig { dt: 0.05, t_end: 1.0, ..Default::default() };
        let tr = evolve_with(&f, &w, &t, &cfg).unwrap();
        assert!(tr.mass_drift() < 1e-8);
        let lin = evolve_linear(&f, &t, 1.0).unwrap().value;
        assert!(tr.states.last().unwrap().relative_distance(&lin) < 1e-10);
        let h1 = tr.monitors[0].h_s_norm;
        assert!(tr.monitors.iter().all(|m| (m.h_s_norm - h1).abs() < 1e-10 * h1));
    }

    #[test]
    fn conserves_mass_and_is_reversible() {
        let (_, t, w, f) = setup(200);
        let cfg = SolverConfig { dt: 0.01, t_end: 1.0, ..Default::default() };
        let tr = evolve_with(&f, &w, &t, &cfg).unwrap();
        assert!(tr.completed());
        assert!(tr.mass_drift() < 1e-10);
        let mut u = tr.states.last().unwrap().clone();
        for _ in 0..100 {
            u = strang_step(&u, &w, &t, -0.01).unwrap();
        }
        assert!(u.relative_distance(&f) < 1e-8);
        let back = evolve_with(&tr.states[100], &w, &t, &SolverConfig { t_end: -1.0, ..cfg }).unwrap();
        assert!(back.states.last().unwrap().relative_distance(&f) < 1e-8);
        assert!(back.times[1] < 0.0);
    }

    #[test]
    fn strang_is_second_order() {
        let (_, t, w, f) = setup(200);
        let w = w.perturbed(4.0, &w).unwrap();
        let reference = evolve_with(&f, &w, &t, &SolverConfig { dt: 1.0 / 1024.0, t_end: 1.0, ..Default::default() })
            .unwrap();
        let end = reference.states.last().unwrap();
        let errs: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
            .iter()
            .map(|&dt| {
                let tr = evolve_with(&f, &w, &t, &SolverConfig { dt, t_end: 1.0, ..Default::default() }).unwrap();
                tr.states.last().unwrap().sub(end).unwrap().mass().sqrt()
            })
            .collect();
        for p in errs.windows(2) {
            let q = p[0] / p[1];
            assert!((q - 4.0).abs() < 0.8, "{errs:?}");
        }
    }

    #[test]
    fn cumulative_simpson_is_exact_for_cubics() {
        let delta = 0.1;
        let g: Vec<Vec<Complex64>> =
            (0..=9).map(|j| vec![Complex64::new((j as f64 * delta).powi(3) - 2.0 * j as f64 * delta, 1.0)]).collect();
        let c = cumulative_simpson(&g, delta);
        for (j, v) in c.iter().enumerate() {
            let x = j as f64 * delta;
            let exact = if j == 1 { v[0].re } else { x.powi(4) / 4.0 - x * x };
            assert!((v[0].re - exact).abs() < 1e-13 && (v[0].im - x).abs() < 1e-13, "j={j}");
        }
        // three-point start is exact for quadratics
        let q: Vec<Vec<Complex64>> = (0..=4).map(|j| vec![Complex64::new((j as f64 * delta).powi(2), 0.0)]).collect();
        assert!((cumulative_simpson(&q, delta)[1][0].re - delta.powi(3) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn picard_without_interaction_is_one_iteration() {
        let (g, t, _, f) = setup(200);
        let out = picard_window(&f, &Potential::zero(g), &t, 0.2, &SolverConfig { dt: 0.01, ..Default::default() })
            .unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.differences[0], 0.0);
    }

    #[test]
    fn picard_contracts_and_agrees_with_strang() {
        let (_, t, w, f) = setup(200);
        let f = f.scale(Complex64::new(0.5, 0.0));
        let window = proof_window(&f, &w);
        let dt = window / 100.0;
        let cfg = SolverConfig { dt, t_end: window, picard_tol: 1e-10, ..Default::default() };
        let out = picard_window(&f, &w, &t, window, &cfg).unwrap();
        assert!(out.ratios.iter().skip(1).all(|&r| r <= 0.5), "{:?}", out.ratios);
        let strang = evolve_with(&f, &w, &t, &cfg).unwrap();
        let d1 = out.trajectory.sup_distance(&strang).unwrap();
        let cfg2 = SolverConfig { dt: dt / 2.0, record_every: 2, ..cfg };
        let strang2 = evolve_with(&f, &w, &t, &cfg2).unwrap();
        let d2 = out.trajectory.sup_distance(&strang2).unwrap();
        assert!(d1 < 1e-4 && (d1 / d2 - 4.0).abs() < 0.8, "{d1} {d2}");
    }

    #[test]
    fn oversized_window_does_not_contract() {
        let (_, t, w, f) = setup(200);
        let w = w.perturbed(29.0, &w).unwrap();
        let f = f.scale(Complex64::new(3.0, 0.0));
        let cfg = SolverConfig { dt: 0.05, ..Default::default() };
        let res = picard_window(&f, &w, &t, 8.0, &cfg);
        assert!(matches!(res, Err(Error::NonContraction(_))), "{:?}", res.map(|o| o.ratios));
    }

    #[test]
    fn negative_coupling_is_refused() {
        let g = RadialGrid::new(20.0, 200).unwrap();
        let f = gaussian(g, 1.0, 1.0);
        let res = evolve(&f, &Potential::zero(g), PointInteraction::finite(-0.1), &SolverConfig::default());
        assert!(matches!(res, Err(Error::NegativeCoupling)));
    }

    #[test]
    fn focusing_run_terminates_with_one_cause() {
        let g = RadialGrid::new(20.0, 200).unwrap();
        let t = RobinTransform::new(g, PointInteraction::finite(1.0)).unwrap();
        let w = Potential::gaussian(g, 0.5, -50.0);
        let f = gaussian(g, 0.5, 3.0);
        let cfg = SolverConfig { dt: 0.01, t_end: 2.0, blowup_threshold: Some(5.0), ..Default::default() };
        let tr = evolve_with(&f, &w, &t, &cfg).unwrap();
        match tr.termination {
            Termination::Blowup { norm, threshold, .. } => {
                assert!(norm > threshold);
                assert_eq!(tr.monitors.last().unwrap().h_s_norm, norm);
            }
            Termination::Completed => assert!(tr.monitors.iter().all(|m| m.h_s_norm <= 5.0)),
            Termination::AliasingAbort { tail_mass, .. } => assert!(tail_mass > ALIASING_FRACTION),
        }
        assert!(tr.times.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn stability_scales_linearly() {
        let (g, t, w, f) = setup(200);
        let (gp, vp) = random_perturbations(g, 42);
        let cfg = SolverConfig { dt: 0.02, t_end: 0.5, ..Default::default() };
        let tab = stability_experiment(&f, &w, &t, &cfg, &[0.0, 1e-2, 1e-3, 1e-4], &gp, &vp).unwrap();
        assert!(tab.rows.iter().filter(|r| r.eps == 0.0).all(|r| r.error == 0.0));
        assert!(tab.passed, "{tab:?}");
    }

    #[test]
    fn globalization_with_repulsive_potential() {
        let (_, t, w, f) = setup(200);
        let cfg = SolverConfig { dt: 0.02, ..Default::default() };
        let rep = globalization_check(&f, &w, &t, &cfg, 2.0).unwrap();
        assert!(rep.inequality_holds && rep.within_bound, "{rep:?}");
        assert!(rep.small_mass.is_empty());
    }

    #[test]
    fn free_limit_against_itself_and_sweep() {
        let g = RadialGrid::new(20.0, 200).unwrap();
        let f = gaussian(g, 0.5, 1.0);
        let w = Potential::gaussian(g, 1.0, 1.0);
        let cfg = SolverConfig { dt: 0.02, t_end: 1.0, ..Default::default() };
        let rep = free_limit_check(&f, &w, &[1.0, 10.0, 100.0], &cfg).unwrap();
        assert!(rep.decreasing, "{rep:?}");
        let t = RobinTransform::new(g, PointInteraction::Friedrichs).unwrap();
        let a = evolve_with(&f, &w, &t, &cfg).unwrap();
        assert_eq!(a.sup_distance(&a).unwrap(), 0.0);
    }
}
