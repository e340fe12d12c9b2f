//! Certified decay rates by bisection, the hierarchy table over projection
//! orders, and the Lyapunov functional evaluated on simulated states.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::legendre::project_stack;
use crate::lmi::{assemble, LmiProblem};
use crate::model::{alpha_max, build_closed_loop, ControllerParams, PlantParams, RateBound};
use crate::quad;
use crate::sdp::{solve_feasibility, verify_certificate, Certificate, SolverOptions, Status};
use crate::sim::{SimState, SimTrace};

/// Largest projection order accepted by [`hierarchy_table`].
pub const MAX_TABLE_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DecayOptions {
    /// Bisection stops once `hi - lo <= tol`.
    pub tol: f64,
    /// Upper end of the bracket when `alpha_max` is unbounded. `None` picks
    /// `10 |spectral abscissa of Atil| + 1`.
    pub cap: Option<f64>,
    pub solver: SolverOptions,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            cap: None,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayResult {
    pub order: usize,
    /// Last verified-feasible rate; `None` when the LMI fails already at 0.
    pub alpha: Option<f64>,
    /// Final `(lo, hi)`: `lo` feasible with a verified certificate, `hi` not.
    pub bracket: (f64, f64),
    pub certificate: Option<Certificate>,
    pub alpha_max: RateBound,
    /// Newton steps summed over all solves.
    pub iterations: usize,
    pub solves: usize,
    /// Midpoints where the solver failed numerically; treated as not certified.
    pub numerical_failures: usize,
}

impl DecayResult {
    pub fn is_certified(&self) -> bool {
        self.alpha.is_some()
    }

    pub fn margin(&self) -> Option<f64> {
        self.certificate.as_ref().map(|c| c.margin)
    }
}

/// `alpha <= alpha_max`: the boundary block alone must admit the rate.
pub fn necessary_condition(plant: &PlantParams, alpha: f64) -> bool {
    alpha_max(plant).admits(alpha)
}

pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

struct Probe<'a> {
    problem: &'a LmiProblem,
    opts: &'a SolverOptions,
    iterations: usize,
    solves: usize,
    failures: usize,
}

impl Probe<'_> {
    /// `Some(cert)` only for a solver-feasible point whose certificate passes
    /// the independent eigenvalue check.
    fn certify(&mut self, alpha: f64) -> Result<Option<Certificate>> {
        let rep = solve_feasibility(self.problem, alpha, self.opts)?;
        self.iterations += rep.iterations;
        self.solves += 1;
        match rep.status {
            Status::Feasible => {
                let cert = rep.certificate.expect("feasible report carries a certificate");
                if verify_certificate(self.problem, &cert, 0.5 * self.opts.margin_tol)? {
                    Ok(Some(cert))
                } else {
                    self.failures += 1;
                    Ok(None)
                }
            }
            Status::InfeasibleAtTolerance => Ok(None),
            Status::NumericalFailure => {
                self.failures += 1;
                Ok(None)
            }
        }
    }
}

pub fn max_decay_rate(
    plant: &PlantParams,
    ctrl: &ControllerParams,
    order: usize,
    opts: &DecayOptions,
) -> Result<DecayResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::Input(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let cl = build_closed_loop(plant, ctrl)?;
    let problem = assemble(order, &cl, plant);
    let bound = alpha_max(plant);
    let cap = opts
        .cap
        .unwrap_or_else(|| 10.0 * spectral_abscissa(&cl.atil).abs() + 1.0);
    let top = bound.or_cap(cap);

    let mut probe = Probe {
        problem: &problem,
        opts: &opts.solver,
        iterations: 0,
        solves: 0,
        failures: 0,
    };
    let finish = |probe: &Probe, alpha, bracket, certificate| DecayResult {
        order,
        alpha,
        bracket,
        certificate,
        alpha_max: bound,
        iterations: probe.iterations,
        solves: probe.solves,
        numerical_failures: probe.failures,
    };

    let Some(mut cert) = probe.certify(0.0)? else {
        return Ok(finish(&probe, None, (0.0, 0.0), None));
    };
    if let Some(c) = probe.certify(top)? {
        return Ok(finish(&probe, Some(top), (top, top), Some(c)));
    }
    let (mut lo, mut hi) = (0.0, top);
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        match probe.certify(mid)? {
            Some(c) => {
                lo = mid;
                cert = c;
            }
            None => hi = mid,
        }
    }
    Ok(finish(&probe, Some(lo), (lo, hi), Some(cert)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyCell {
    pub order: usize,
    /// Per-cell failures are kept as messages so one bad cell does not sink the table.
    pub result: std::result::Result<DecayResult, String>,
}

impl HierarchyCell {
    pub fn alpha(&self) -> Option<f64> {
        self.result.as_ref().ok().and_then(|r| r.alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyRow {
    pub label: String,
    pub cells: Vec<HierarchyCell>,
    pub alpha_max: RateBound,
}

impl HierarchyRow {
    /// `alpha_{N+1} >= alpha_N - tol` over consecutive certified cells.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.cells.windows(2).all(|w| match (w[0].alpha(), w[1].alpha()) {
            (Some(a), Some(b)) => b >= a - tol,
            (Some(_), None) => false,
            _ => true,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyTable {
    pub rows: Vec<HierarchyRow>,
    pub tol: f64,
}

fn fmt_alpha(a: Option<f64>) -> String {
    a.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

impl HierarchyTable {
    pub fn max_order(&self) -> usize {
        self.rows.first().map_or(0, |r| r.cells.len().saturating_sub(1))
    }

    /// Aligned plain text, one row per controller.
    pub fn to_text(&self) -> String {
        let label_w = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(10);
        let mut out = String::new();
        let _ = write!(out, "{:<label_w$}", "controller");
        for n in 0..=self.max_order() {
            let _ = write!(out, " {:>8}", format!("N={n}"));
        }
        let _ = writeln!(out, " {:>9} {:>9}", "alpha_max", "monotone");
        for row in &self.rows {
            let _ = write!(out, "{:<label_w$}", row.label);
            for cell in &row.cells {
                let s = match &cell.result {
                    Ok(r) => fmt_alpha(r.alpha),
                    Err(_) => "error".into(),
                };
                let _ = write!(out, " {s:>8}");
            }
            let amax = match row.alpha_max {
                RateBound::Finite(v) => format!("{v:.4}"),
                RateBound::Unbounded => "inf".into(),
            };
            let mono = if row.is_monotone(self.tol) { "yes" } else { "no" };
            let _ = writeln!(out, " {amax:>9} {mono:>9}");
        }
        for row in &self.rows {
            for cell in &row.cells {
                if let Err(e) = &cell.result {
                    let _ = writeln!(out, "# {} N={}: {e}", row.label, cell.order);
                }
            }
        }
        out
    }

    /// CSV with columns `controller,N,alpha_N,alpha_max,margin,iterations`.
    /// Uncertified or failed cells leave `alpha_N` and `margin` empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut wr = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Input(format!("csv: {e}"));
        wr.write_record(["controller", "N", "alpha_N", "alpha_max", "margin", "iterations"])
            .map_err(io)?;
        for row in &self.rows {
            let amax = match row.alpha_max {
                RateBound::Finite(v) => format!("{v:.16e}"),
                RateBound::Unbounded => "inf".into(),
            };
            for cell in &row.cells {
                let (alpha, margin, iters) = match &cell.result {
                    Ok(r) => (
                        r.alpha.map(|v| format!("{v:.16e}")).unwrap_or_default(),
                        r.margin().map(|v| format!("{v:.16e}")).unwrap_or_default(),
                        r.iterations.to_string(),
                    ),
                    Err(_) => (String::new(), String::new(), String::new()),
                };
                wr.write_record([
                    row.label.clone(),
                    cell.order.to_string(),
                    alpha,
                    amax.clone(),
                    margin,
                    iters,
                ])
                .map_err(io)?;
            }
        }
        let bytes = wr.into_inner().map_err(|e| Error::Input(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
    }
}

/// `alpha_N` for every controller and every `N <= max_order`. Cells run in
/// parallel and are merged back in input order.
pub fn hierarchy_table(
    plant: &PlantParams,
    ctrls: &[(String, ControllerParams)],
    max_order: usize,
    opts: &DecayOptions,
) -> Result<HierarchyTable> {
    if max_order > MAX_TABLE_ORDER {
        return Err(Error::Input(format!("max order {max_order} exceeds {MAX_TABLE_ORDER}")));
    }
    plant.validate()?;
    let jobs: Vec<(usize, usize)> = (0..ctrls.len())
        .flat_map(|i| (0..=max_order).map(move |n| (i, n)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(i, n)| max_decay_rate(plant, &ctrls[i].1, n, opts).map_err(|e| e.to_string()))
        .collect();
    let mut results = results.into_iter();
    let rows = ctrls
        .iter()
        .map(|(label, _)| HierarchyRow {
            label: label.clone(),
            cells: (0..=max_order)
                .map(|order| HierarchyCell {
                    order,
                    result: results.next().expect("one result per job"),
                })
                .collect(),
            alpha_max: alpha_max(plant),
        })
        .collect();
    Ok(HierarchyTable { rows, tol: opts.tol })
}

fn order_of(cert: &Certificate, m: usize) -> Result<usize> {
    let d = cert.vars.p.nrows();
    if d < m + 2 || (d - m) % 2 != 0 {
        return Err(Error::Input(format!(
            "certificate P is {d}x{d}, incompatible with an ODE state of length {m}"
        )));
    }
    Ok((d - m) / 2 - 1)
}

/// `X_N^T P X_N + int_0^1 e^{2 alpha x / c} chi^T (S + x R) chi dx` with
/// `X_N = [X; X_0; ...; X_N]` and `chi` sampled on a uniform grid.
pub fn lyapunov_value(cert: &Certificate, c: f64, x: &DVector<f64>, chi: &[Vector2<f64>]) -> Result<f64> {
    let order = order_of(cert, x.len())?;
    if chi.len() < 3 {
        return Err(Error::Input(format!(
            "need at least 3 field samples, got {}",
            chi.len()
        )));
    }
    let stack = project_stack(chi, order)?.flatten();
    let xn = DVector::from_iterator(x.len() + stack.len(), x.iter().chain(stack.iter()).copied());
    let finite = xn.dot(&(&cert.vars.p * &xn));
    let grid = quad::unit_grid(chi.len());
    let density: Vec<f64> = grid
        .iter()
        .zip(chi)
        .map(|(&s, v)| {
            let q = cert.vars.s + cert.vars.r * s;
            (2.0 * cert.alpha * s / c).exp() * v.dot(&(q * v))
        })
        .collect();
    Ok(finite + quad::integrate_unit(&density)?)
}

/// [`lyapunov_value`] on a simulator state, in error variables.
pub fn lyapunov_on_state(cert: &Certificate, plant: &PlantParams, state: &SimState) -> Result<f64> {
    lyapunov_value(cert, plant.c, &state.x, &state.riemann(plant))
}

/// `eps1, eps2` with `eps1 |(X, chi)|^2 <= V <= eps2 |(X, chi)|^2`, where
/// `|(X, chi)|^2 = |X|^2 + 0.5 int |chi|^2`.
pub fn sandwich_bounds(cert: &Certificate, c: f64) -> (f64, f64) {
    let eig = |m: DMatrix<f64>| {
        let e = SymmetricEigen::new(m).eigenvalues;
        (e.min(), e.max())
    };
    let dyn2 = |m: &Matrix2<f64>| DMatrix::from_column_slice(2, 2, m.as_slice());
    let (p_min, p_max) = eig(cert.vars.p.clone());
    let (s_min, _) = eig(dyn2(&cert.vars.s));
    let (_, sr_max) = eig(dyn2(&(cert.vars.s + cert.vars.r)));
    let weight = (2.0 * cert.alpha / c).exp();
    (p_min.min(2.0 * s_min), p_max.max(2.0 * (p_max + sr_max * weight)))
}

/// `e^{2 alpha t} V(t)` along a recorded trajectory.
pub fn weighted_lyapunov_series(cert: &Certificate, plant: &PlantParams, trace: &SimTrace) -> Result<Vec<f64>> {
    trace
        .states
        .iter()
        .map(|s| Ok((2.0 * cert.alpha * s.t).exp() * lyapunov_on_state(cert, plant, s)?))
        .collect()
}

/// First violation of `v(t2) <= v(t1) (1 + slack (t2 - t1))` over consecutive
/// samples, as `(t, relative excess per unit time)`.
pub fn first_increase(times: &[f64], values: &[f64], slack: f64) -> Option<(f64, f64)> {
    times.windows(2).zip(values.windows(2)).find_map(|(t, v)| {
        let dt = t[1] - t[0];
        let allowed = v[0] * (1.0 + slack * dt);
        (v[1] > allowed).then(|| (t[1], (v[1] / v[0] - 1.0) / dt))
    })
}
