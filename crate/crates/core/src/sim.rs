//! Second-order finite-difference simulation of the closed loop.
//!
//! The wave equation is advanced by leapfrog on a uniform grid with `M`
//! intervals. Both Robin boundaries are closed with ghost points and a
//! centered time difference for the boundary velocity, which makes the
//! boundary update a scalar implicit equation. The ODE and controller states
//! are advanced by the trapezoidal rule, driven by the boundary velocities at
//! the half step.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::model::{
    build_closed_loop, equilibrium_slope, feedforward_controls, riemann_coordinates, ControllerParams, PlantParams,
};
use crate::quad;

/// Starting profile of the simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialCondition {
    /// `w(x,0) = 2 - Omega_e x`, `w_t(x,0) = (Omega_e - q Te)/k x - (u1e - Omega_e)/g (1 - x)`, `X = 0`.
    #[serde(alias = "paper4")]
    Reference,
    /// The equilibrium itself: `w_t = Omega_e`, `w_x = sigma_1`, `X = 0`.
    Equilibrium,
    /// Equilibrium plus a seeded smooth, boundary-compatible perturbation of
    /// the fields and `X`.
    Perturbed { seed: u64, amplitude: f64 },
    /// Explicit samples on the simulation grid.
    Custom { w: Vec<f64>, wt: Vec<f64>, x: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Number of spatial intervals `M`; must be even.
    pub intervals: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Record every `stride`-th step.
    pub stride: usize,
    pub ic: InitialCondition,
}

impl SimConfig {
    /// `dt = dt_factor / (c M)`, so `dt_factor` is the Courant number.
    pub fn new(c: f64, intervals: usize, dt_factor: f64, t_end: f64, stride: usize, ic: InitialCondition) -> Self {
        Self {
            intervals,
            dt: dt_factor / (c * intervals as f64),
            t_end,
            stride,
            ic,
        }
    }

    pub fn default_for(plant: &PlantParams) -> Self {
        Self::new(plant.c, 200, 0.9, 25.0, 10, InitialCondition::Reference)
    }

    pub fn courant(&self, c: f64) -> f64 {
        c * self.dt * self.intervals as f64
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self, c: f64) -> Result<()> {
        if self.intervals < 2 || self.intervals % 2 != 0 {
            return Err(Error::Config(format!(
                "M must be even and >= 2, got {}",
                self.intervals
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("T must be >= 0, got {}", self.t_end)));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        let cfl = self.courant(c);
        if cfl > 1.0 + 1e-12 {
            return Err(Error::Config(format!("CFL number c dt M = {cfl:.4} exceeds 1")));
        }
        Ok(())
    }
}

/// Closed-loop state at one recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub w: Vec<f64>,
    pub wt: Vec<f64>,
    pub wx: Vec<f64>,
    /// `[X_c; Y]`.
    pub x: DVector<f64>,
    pub u1: f64,
    pub u2: f64,
}

impl SimState {
    /// `(w_t - Omega_e, w_x - sigma_1)` on the grid.
    pub fn field_errors(&self, plant: &PlantParams) -> (Vec<f64>, Vec<f64>) {
        let sigma = equilibrium_slope(plant);
        (
            self.wt.iter().map(|v| v - plant.omega_e).collect(),
            self.wx.iter().map(|v| v - sigma).collect(),
        )
    }

    pub fn riemann(&self, plant: &PlantParams) -> Vec<Vector2<f64>> {
        let (wt, wx) = self.field_errors(plant);
        riemann_coordinates(plant.c, &wt, &wx)
    }
}

/// Boundary-condition residuals of the initial profiles, `w_x` taken by
/// second-order one-sided differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryResiduals {
    /// `w_x(0) - g (w_t(0) - u1)`.
    pub at_0: f64,
    /// `w_x(1) + k w_t(1) + q Te`.
    pub at_1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    /// Controller order `n`.
    pub order: usize,
    pub intervals: usize,
    pub dt: f64,
    pub states: Vec<SimState>,
    pub energy: Vec<f64>,
    pub initial_residuals: BoundaryResiduals,
}

impl SimTrace {
    pub fn empty(order: usize, intervals: usize, dt: f64) -> Self {
        Self {
            order,
            intervals,
            dt,
            states: Vec::new(),
            energy: Vec::new(),
            initial_residuals: BoundaryResiduals { at_0: 0.0, at_1: 0.0 },
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// `|X|^2 + c^2 int (w_x - sigma_1)^2 + int (w_t - Omega_e)^2`.
pub fn energy(plant: &PlantParams, state: &SimState) -> f64 {
    let (wt, wx) = state.field_errors(plant);
    let c2 = plant.c * plant.c;
    let density: Vec<f64> = wt.iter().zip(&wx).map(|(a, b)| a * a + c2 * b * b).collect();
    state.x.norm_squared() + quad::integrate_unit(&density).unwrap_or(0.0)
}

fn initial_profiles(
    plant: &PlantParams,
    u1e: f64,
    ic: &InitialCondition,
    intervals: usize,
    order: usize,
) -> Result<(Vec<f64>, Vec<f64>, DVector<f64>)> {
    let grid = quad::unit_grid(intervals + 1);
    let sigma = equilibrium_slope(plant);
    let om = plant.omega_e;
    let m = order + 2;
    match ic {
        InitialCondition::Reference => {
            if plant.k == 0.0 || plant.g == 0.0 {
                return Err(Error::SingularParameter(
                    "reference initial velocity divides by k and g".into(),
                ));
            }
            let slope1 = (om - plant.q * plant.te) / plant.k;
            let off0 = (u1e - om) / plant.g;
            let w = grid.iter().map(|x| 2.0 - om * x).collect();
            let wt = grid.iter().map(|x| slope1 * x - off0 * (1.0 - x)).collect();
            Ok((w, wt, DVector::zeros(m)))
        }
        InitialCondition::Equilibrium => Ok((
            grid.iter().map(|x| 2.0 + sigma * x).collect(),
            vec![om; grid.len()],
            DVector::zeros(m),
        )),
        InitialCondition::Perturbed { seed, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut coef = || amplitude * rng.random_range(-1.0..1.0);
            let a: Vec<f64> = (0..4).map(|_| coef()).collect();
            let b: Vec<f64> = (0..4).map(|_| coef()).collect();
            let x = DVector::from_fn(m, |_, _| coef());
            // Cosines in w and sines in w_t keep both boundary conditions satisfied.
            let mode = |cs: &[f64], x: f64, f: fn(f64) -> f64| {
                cs.iter()
                    .enumerate()
                    .map(|(k, ck)| ck * f((k + 1) as f64 * std::f64::consts::PI * x))
                    .sum::<f64>()
            };
            let w = grid.iter().map(|&x| 2.0 + sigma * x + mode(&a, x, f64::cos)).collect();
            let wt = grid.iter().map(|&x| om + mode(&b, x, f64::sin)).collect();
            Ok((w, wt, x))
        }
        InitialCondition::Custom { w, wt, x } => {
            if w.len() != grid.len() || wt.len() != grid.len() {
                return Err(Error::Input(format!(
                    "custom profiles need {} samples, got w: {}, wt: {}",
                    grid.len(),
                    w.len(),
                    wt.len()
                )));
            }
            if x.len() != m {
                return Err(Error::Input(format!(
                    "custom ODE state needs {m} entries, got {}",
                    x.len()
                )));
            }
            Ok((w.clone(), wt.clone(), DVector::from_column_slice(x)))
        }
    }
}

struct Robin {
    lam2: f64,
    beta: f64,
    gamma: f64,
    src0: f64,
    src1: f64,
}

impl Robin {
    fn new(plant: &PlantParams, dt: f64, h: f64) -> Self {
        let lam2 = (plant.c * dt / h).powi(2);
        Self {
            lam2,
            beta: lam2 * h * plant.g / dt,
            gamma: lam2 * h * plant.k / dt,
            src0: 2.0 * lam2 * h * plant.g,
            src1: -2.0 * lam2 * h * plant.q * plant.te,
        }
    }
}

fn interior(prev: &[f64], cur: &[f64], next: &mut [f64], lam2: f64) {
    let m = cur.len() - 1;
    for i in 1..m {
        next[i] = 2.0 * cur[i] - prev[i] + lam2 * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]);
    }
}

fn leapfrog(prev: &[f64], cur: &[f64], next: &mut [f64], bc: &Robin, u1: f64) {
    let m = cur.len() - 1;
    interior(prev, cur, next, bc.lam2);
    next[0] = (2.0 * cur[0] - prev[0] + 2.0 * bc.lam2 * (cur[1] - cur[0]) + bc.beta * prev[0] + bc.src0 * u1)
        / (1.0 + bc.beta);
    next[m] = (2.0 * cur[m] - prev[m] + 2.0 * bc.lam2 * (cur[m - 1] - cur[m]) + bc.gamma * prev[m] + bc.src1)
        / (1.0 + bc.gamma);
}

fn one_sided_slopes(w: &[f64], h: f64) -> (f64, f64) {
    let m = w.len() - 1;
    (
        (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h),
        (3.0 * w[m] - 4.0 * w[m - 1] + w[m - 2]) / (2.0 * h),
    )
}

pub fn simulate(plant: &PlantParams, ctrl: &ControllerParams, cfg: &SimConfig) -> Result<SimTrace> {
    cfg.validate(plant.c)?;
    let cl = build_closed_loop(plant, ctrl)?;
    let ff = feedforward_controls(plant)?;
    let n = ctrl.order();
    let mdim = cl.m;
    let mm = cfg.intervals;
    let h = 1.0 / mm as f64;
    let dt = cfg.dt;
    let om = plant.omega_e;
    let bc = Robin::new(plant, dt, h);

    let (w0, wt0, x0) = initial_profiles(plant, ff.u1, &cfg.ic, mm, n)?;
    let controls = |x: &DVector<f64>| {
        let y = x.rows(n, 2);
        let xc = x.rows(0, n);
        let u1 = ff.u1 + (&cl.c1 * x)[0];
        let u2 = ff.u2 + (&ctrl.c2 * xc)[0] + (ctrl.k * y)[0];
        (u1, u2)
    };

    let (u1_0, _) = controls(&x0);
    let (wx0, wx1) = one_sided_slopes(&w0, h);
    let initial_residuals = BoundaryResiduals {
        at_0: wx0 - plant.g * (wt0[0] - u1_0),
        at_1: wx1 + plant.k * wt0[mm] + plant.q * plant.te,
    };

    // Trapezoidal propagators for X' = Atil X + Bhat (v - Omega_e).
    let eye = DMatrix::<f64>::identity(mdim, mdim);
    let half = &cl.atil * (0.5 * dt);
    let lhs = (&eye - &half).lu();
    let phi = lhs
        .solve(&(&eye + &half))
        .ok_or_else(|| Error::Numerical("trapezoidal step matrix is singular".into()))?;
    let gamma = lhs
        .solve(&(&cl.bhat * dt))
        .ok_or_else(|| Error::Numerical("trapezoidal step matrix is singular".into()))?;

    let steps = cfg.steps();
    let mut trace = SimTrace::empty(n, mm, dt);
    trace.initial_residuals = initial_residuals;

    // Taylor start, with ghost values from the boundary conditions at t = 0.
    let mut prev = w0.clone();
    let mut cur = w0;
    let mut next = vec![0.0; mm + 1];
    {
        let ghost_l = cur[1] - 2.0 * h * plant.g * (wt0[0] - u1_0);
        let ghost_r = cur[mm - 1] + 2.0 * h * (-plant.k * wt0[mm] - plant.q * plant.te);
        for i in 0..=mm {
            let left = if i == 0 { ghost_l } else { cur[i - 1] };
            let right = if i == mm { ghost_r } else { cur[i + 1] };
            next[i] = cur[i] + dt * wt0[i] + 0.5 * bc.lam2 * (right - 2.0 * cur[i] + left);
        }
    }
    let mut x = x0;

    for j in 0..=steps {
        let (u1, u2) = controls(&x);
        if j % cfg.stride == 0 {
            let wt: Vec<f64> = if j == 0 {
                wt0.clone()
            } else {
                next.iter().zip(&prev).map(|(a, b)| (a - b) / (2.0 * dt)).collect()
            };
            let mut wx = vec![0.0; mm + 1];
            for i in 1..mm {
                wx[i] = (cur[i + 1] - cur[i - 1]) / (2.0 * h);
            }
            wx[0] = plant.g * (wt[0] - u1);
            wx[mm] = -plant.k * wt[mm] - plant.q * plant.te;
            let state = SimState {
                t: j as f64 * dt,
                w: cur.clone(),
                wt,
                wx,
                x: x.clone(),
                u1,
                u2,
            };
            trace.energy.push(energy(plant, &state));
            trace.states.push(state);
        }
        if j == steps {
            break;
        }

        let tail = Vector2::new((next[mm] - cur[mm]) / dt - om, (next[0] - cur[0]) / dt - om);
        x = &phi * &x + &gamma * tail;
        let (u1_next, _) = controls(&x);

        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        leapfrog(&prev, &cur, &mut next, &bc, u1_next);

        if let Some(i) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: j + 2,
                detail: format!("w at node {i} is {}", next[i]),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: j + 1,
                detail: "ODE state is not finite".into(),
            });
        }
    }
    Ok(trace)
}

/// Max-norm error at `t_end` of the same interior scheme on `w_tt = c^2 w_xx`
/// with `w(0) = w(1) = 0`, `w(x,0) = sin(pi x)`, `w_t(x,0) = 0`, against
/// `sin(pi x) cos(pi c t)`. `dt` is shrunk so that `t_end` is hit exactly.
pub fn fixed_end_error(c: f64, intervals: usize, courant: f64, t_end: f64) -> Result<f64> {
    if intervals < 2 || !(courant > 0.0 && courant <= 1.0) || !(t_end > 0.0) {
        return Err(Error::Config(format!(
            "bad fixed-end setup: M = {intervals}, courant = {courant}, T = {t_end}"
        )));
    }
    let h = 1.0 / intervals as f64;
    let steps = (t_end * c / (courant * h)).ceil() as usize;
    let dt = t_end / steps as f64;
    let lam2 = (c * dt / h).powi(2);
    let pi = std::f64::consts::PI;
    let grid = quad::unit_grid(intervals + 1);
    let mut prev: Vec<f64> = grid.iter().map(|x| (pi * x).sin()).collect();
    prev[0] = 0.0;
    prev[intervals] = 0.0;
    let mut cur = prev.clone();
    for i in 1..intervals {
        cur[i] = prev[i] + 0.5 * lam2 * (prev[i + 1] - 2.0 * prev[i] + prev[i - 1]);
    }
    let mut next = vec![0.0; intervals + 1];
    for _ in 1..steps {
        interior(&prev, &cur, &mut next, lam2);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let decay = (pi * c * t_end).cos();
    Ok(grid
        .iter()
        .zip(&cur)
        .map(|(x, w)| ((pi * x).sin() * decay - w).abs())
        .fold(0.0, f64::max))
}

/// Least-squares fit of `log E(t) ~ a - 2 alpha t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub alpha: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r2: f64,
    pub points: usize,
}

pub fn fit_energy_decay(times: &[f64], energy: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != energy.len() {
        return Err(Error::Input("time and energy series differ in length".into()));
    }
    let (t0, t1) = window;
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (&t, &e) in times.iter().zip(energy) {
        if t < t0 || t > t1 {
            continue;
        }
        if !(e > 0.0) {
            return Err(Error::Window(format!("energy {e:e} at t = {t} is not positive")));
        }
        ts.push(t);
        ys.push(e.ln());
    }
    if ts.len() < 2 {
        return Err(Error::Window(format!(
            "window [{t0}, {t1}] holds {} samples, need at least 2",
            ts.len()
        )));
    }
    let k = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / k;
    let ym = ys.iter().sum::<f64>() / k;
    let sxx: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Window("window holds a single time stamp".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { slope * sxy / syy };
    Ok(DecayFit {
        alpha: -slope / 2.0,
        r2,
        points: ts.len(),
    })
}

pub fn fit_decay(trace: &SimTrace, window: (f64, f64)) -> Result<DecayFit> {
    fit_energy_decay(&trace.times(), &trace.energy, window)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_header(order: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "wt0", "wt1", "Y1", "Y2"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=order).map(|i| format!("Xc{i}")));
    h.extend(["u1", "u2", "energy"].iter().map(|s| s.to_string()));
    h
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

/// Time series: one row per recorded state, values with 17 significant digits.
pub fn export_csv(trace: &SimTrace, path: &Path) -> Result<()> {
    let n = trace.order;
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(csv_header(n)).map_err(|e| csv_error(path, e))?;
    for (s, e) in trace.states.iter().zip(&trace.energy) {
        let m = s.wt.len() - 1;
        let mut row = vec![num(s.t), num(s.wt[0]), num(s.wt[m]), num(s.x[n]), num(s.x[n + 1])];
        row.extend((0..n).map(|i| num(s.x[i])));
        row.extend([num(s.u1), num(s.u2), num(*e)]);
        wr.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    let bytes = wr
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

/// Field snapshots in long format: columns `x, t, w, wt`.
pub fn export_fields(trace: &SimTrace, path: &Path) -> Result<()> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["x", "t", "w", "wt"]).map_err(|e| csv_error(path, e))?;
    for s in &trace.states {
        let grid = quad::unit_grid(s.w.len());
        for ((x, w), wt) in grid.iter().zip(&s.w).zip(&s.wt) {
            wr.write_record([num(*x), num(s.t), num(*w), num(*wt)])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    let bytes = wr
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant() -> PlantParams {
        PlantParams::default()
    }

    fn cfg(t_end: f64, ic: InitialCondition) -> SimConfig {
        SimConfig::new(plant().c, 100, 0.9, t_end, 10, ic)
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let p = plant();
        let tr = simulate(
            &p,
            &ControllerParams::feedforward(),
            &cfg(5.0, InitialCondition::Equilibrium),
        )
        .unwrap();
        let sigma = equilibrium_slope(&p);
        for s in &tr.states {
            for (wt, wx) in s.wt.iter().zip(&s.wx) {
                assert!((wt - p.omega_e).abs() <= 1e-8, "t = {}", s.t);
                assert!((wx - sigma).abs() <= 1e-8);
            }
            assert!(s.x.amax() <= 1e-8);
        }
        assert!(tr.energy.iter().all(|e| *e <= 1e-14));
        assert!(tr.initial_residuals.at_0.abs() < 1e-10);
        assert!(tr.initial_residuals.at_1.abs() < 1e-10);
    }

    #[test]
    fn equilibrium_is_fixed_under_dynamic_feedback() {
        let p = plant();
        let tr = simulate(
            &p,
            &ControllerParams::reference_dynamic(),
            &cfg(2.0, InitialCondition::Equilibrium),
        )
        .unwrap();
        let last = tr.states.last().unwrap();
        assert!(last.wt.iter().all(|v| (v - p.omega_e).abs() <= 1e-8));
        assert!(last.x.amax() <= 1e-8);
    }

    #[test]
    fn energy_examples() {
        let p = plant();
        let sigma = equilibrium_slope(&p);
        let mut s = SimState {
            t: 0.0,
            w: vec![0.0; 21],
            wt: vec![p.omega_e; 21],
            wx: vec![sigma; 21],
            x: DVector::zeros(2),
            u1: 0.0,
            u2: 0.0,
        };
        assert_eq!(energy(&p, &s), 0.0);
        s.wt = vec![p.omega_e + 1.0; 21];
        assert!((energy(&p, &s) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn energy_matches_riemann_form() {
        let p = plant();
        let tr = simulate(
            &p,
            &ControllerParams::feedforward(),
            &cfg(1.0, InitialCondition::Reference),
        )
        .unwrap();
        for s in tr.states.iter().step_by(7) {
            let chi = s.riemann(&p);
            let sq: Vec<f64> = chi.iter().map(|v| v.norm_squared()).collect();
            let alt = s.x.norm_squared() + 0.5 * quad::integrate_unit(&sq).unwrap();
            let e = energy(&p, s);
            assert!((alt - e).abs() <= 1e-10 * e.max(1.0), "{alt} vs {e}");
        }
    }

    #[test]
    fn reference_start_residuals() {
        let p = plant();
        let tr = simulate(
            &p,
            &ControllerParams::feedforward(),
            &cfg(0.0, InitialCondition::Reference),
        )
        .unwrap();
        let ff = feedforward_controls(&p).unwrap();
        // The far end is compatible; the near end is not.
        assert!(tr.initial_residuals.at_1.abs() < 1e-9);
        let expected = -p.omega_e - p.g * (-(ff.u1 - p.omega_e) / p.g - ff.u1);
        assert!((tr.initial_residuals.at_0 - expected).abs() < 1e-9);
        assert!(expected.abs() > 1.0);
    }

    #[test]
    fn config_validation() {
        let p = plant();
        let ff = ControllerParams::feedforward();
        let mut c = cfg(1.0, InitialCondition::Equilibrium);
        c.dt *= 1.2;
        assert!(matches!(simulate(&p, &ff, &c), Err(Error::Config(_))));
        let odd = SimConfig::new(p.c, 101, 0.9, 1.0, 1, InitialCondition::Equilibrium);
        assert!(matches!(simulate(&p, &ff, &odd), Err(Error::Config(_))));
        let mut zero = cfg(1.0, InitialCondition::Equilibrium);
        zero.stride = 0;
        assert!(matches!(simulate(&p, &ff, &zero), Err(Error::Config(_))));
        let bad = InitialCondition::Custom {
            w: vec![0.0; 3],
            wt: vec![0.0; 3],
            x: vec![0.0; 2],
        };
        assert!(matches!(simulate(&p, &ff, &cfg(1.0, bad)), Err(Error::Input(_))));
    }

    #[test]
    fn nan_is_reported_with_step() {
        let p = plant();
        let mut w = vec![0.0; 101];
        w[50] = f64::NAN;
        let ic = InitialCondition::Custom {
            w,
            wt: vec![p.omega_e; 101],
            x: vec![0.0; 2],
        };
        let err = simulate(&p, &ControllerParams::feedforward(), &cfg(1.0, ic)).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn stride_counting() {
        let p = plant();
        let mut c = cfg(1.0, InitialCondition::Equilibrium);
        c.t_end = 1000.0 * c.dt;
        assert_eq!(c.steps(), 1000);
        let tr = simulate(&p, &ControllerParams::feedforward(), &c).unwrap();
        assert_eq!(tr.len(), 101);
        assert_eq!(tr.energy.len(), tr.len());
    }

    #[test]
    fn scheme_is_second_order() {
        let c = plant().c;
        let e1 = fixed_end_error(c, 40, 0.9, 1.0).unwrap();
        let e2 = fixed_end_error(c, 80, 0.9, 1.0).unwrap();
        let e3 = fixed_end_error(c, 160, 0.9, 1.0).unwrap();
        assert!(e1 / e2 >= 3.5, "{e1} {e2}");
        assert!(e2 / e3 >= 3.5, "{e2} {e3}");
    }

    #[test]
    fn open_loop_field_energy_dissipates() {
        let p = plant();
        let ic = InitialCondition::Perturbed {
            seed: 7,
            amplitude: 0.5,
        };
        let tr = simulate(&p, &ControllerParams::feedforward(), &cfg(5.0, ic)).unwrap();
        assert!(tr.energy.last().unwrap() < &tr.energy[0]);
        let field: Vec<f64> = tr.states.iter().map(|s| energy(&p, s) - s.x.norm_squared()).collect();
        let dt = tr.states[1].t - tr.states[0].t;
        for w in field.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 0.005 * dt), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn perturbed_start_is_seeded() {
        let p = plant();
        let ic = |seed| InitialCondition::Perturbed { seed, amplitude: 0.1 };
        let a = simulate(&p, &ControllerParams::feedforward(), &cfg(0.5, ic(1))).unwrap();
        let b = simulate(&p, &ControllerParams::feedforward(), &cfg(0.5, ic(1))).unwrap();
        let d = simulate(&p, &ControllerParams::feedforward(), &cfg(0.5, ic(2))).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.energy, d.energy);
    }

    #[test]
    fn synthetic_fit_is_exact() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let e: Vec<f64> = t.iter().map(|t| (-2.0 * 0.5 * t).exp()).collect();
        let fit = fit_energy_decay(&t, &e, (0.0, 10.0)).unwrap();
        assert!((fit.alpha - 0.5).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert_eq!(fit.points, 200);
    }

    #[test]
    fn fit_rejects_bad_windows() {
        let t = [0.0, 1.0, 2.0];
        assert!(matches!(
            fit_energy_decay(&t, &[1.0, 0.0, 1.0], (0.0, 2.0)),
            Err(Error::Window(_))
        ));
        assert!(matches!(
            fit_energy_decay(&t, &[1.0, 0.5, 0.2], (5.0, 6.0)),
            Err(Error::Window(_))
        ));
        assert!(matches!(fit_energy_decay(&t, &[1.0], (0.0, 2.0)), Err(Error::Input(_))));
    }

    #[test]
    fn empty_trace_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        export_csv(&SimTrace::empty(2, 10, 0.1), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,wt0,wt1,Y1,Y2,Xc1,Xc2,u1,u2,energy\n");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = plant();
        let tr = simulate(
            &p,
            &ControllerParams::reference_dynamic(),
            &cfg(0.5, InitialCondition::Reference),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        export_csv(&tr, &path).unwrap();
        let mut rd = csv::Reader::from_path(&path).unwrap();
        let rows: Vec<Vec<f64>> = rd
            .records()
            .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), tr.len());
        for (row, (s, e)) in rows.iter().zip(tr.states.iter().zip(&tr.energy)) {
            assert_eq!(row[0], s.t);
            assert_eq!(row[1], s.wt[0]);
            assert_eq!(row[2], *s.wt.last().unwrap());
            assert_eq!(row[3], s.x[2]);
            assert_eq!(row[5], s.x[0]);
            assert_eq!(row[7], s.u1);
            assert_eq!(row[9], *e);
        }

        let fields = dir.path().join("fields.csv");
        export_fields(&tr, &fields).unwrap();
        let n = csv::Reader::from_path(&fields).unwrap().records().count();
        assert_eq!(n, tr.len() * 101);
    }
}
