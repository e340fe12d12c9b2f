//! Feasibility of the homogeneous LMI system
//!
//! ```text
//! P > 0,  R > 0,  S > 0,  Psi(P, R, S; alpha) - c R_N < 0
//! ```
//!
//! posed as the max-margin problem
//!
//! ```text
//! maximize t  s.t.  P >= tI, R >= tI, S >= tI, -(Psi - c R_N) >= tI,
//!                   tr P + tr R + tr S = 1
//! ```
//!
//! and solved with a log-det barrier path-following method. Every iterate is
//! strictly interior, so the current `(P, R, S)` is a certificate as soon as
//! `t` exceeds the margin tolerance. The inverse block slacks give a dual
//! point whose bound on `t*` decides infeasibility.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix2, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lmi::{DecisionVars, LmiProblem};
use crate::matrix_io;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Declare feasible iff the optimal margin exceeds this.
    pub margin_tol: f64,
    /// Barrier parameter updates before giving up.
    pub max_outer: usize,
    /// Newton steps per centering before giving up.
    pub max_newton: usize,
    /// Multiplicative update of the barrier parameter.
    pub barrier_growth: f64,
    /// Return as soon as the verdict is known instead of maximizing the margin.
    pub stop_when_decided: bool,
    /// With `stop_when_decided` off, stop once the bound gap on `t*` is below this.
    pub gap_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            margin_tol: 1e-7,
            max_outer: 60,
            max_newton: 200,
            barrier_growth: 8.0,
            stop_when_decided: true,
            gap_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Feasible,
    InfeasibleAtTolerance,
    NumericalFailure,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Feasible => "feasible",
            Status::InfeasibleAtTolerance => "infeasible-at-tolerance",
            Status::NumericalFailure => "numerical-failure",
        })
    }
}

/// Decision variables witnessing the LMI at rate `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub vars: DecisionVars,
    pub alpha: f64,
    /// Smallest of the four eigenvalue margins, with `tr P + tr R + tr S = 1`.
    pub margin: f64,
}

impl Certificate {
    /// Matrix dump with blocks `P`, `R`, `S`, `alpha`, `margin`.
    pub fn to_text(&self) -> String {
        let dyn2 = |m: &Matrix2<f64>| DMatrix::from_column_slice(2, 2, m.as_slice());
        let (r, s) = (dyn2(&self.vars.r), dyn2(&self.vars.s));
        let alpha = DMatrix::from_element(1, 1, self.alpha);
        let margin = DMatrix::from_element(1, 1, self.margin);
        matrix_io::format_matrices([
            ("P", &self.vars.p),
            ("R", &r),
            ("S", &s),
            ("alpha", &alpha),
            ("margin", &margin),
        ])
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let blocks = matrix_io::parse_matrices(text)?;
        let get = |name: &str| {
            blocks
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, m)| m)
                .ok_or_else(|| Error::Input(format!("certificate lacks block {name}")))
        };
        let two = |name: &str| -> Result<Matrix2<f64>> {
            let m = get(name)?;
            if m.shape() != (2, 2) {
                return Err(Error::Input(format!("certificate block {name} must be 2x2")));
            }
            Ok(Matrix2::from_column_slice(m.as_slice()))
        };
        let scalar = |name: &str| -> Result<f64> {
            let m = get(name)?;
            if m.shape() != (1, 1) {
                return Err(Error::Input(format!("certificate block {name} must be 1x1")));
            }
            Ok(m[(0, 0)])
        };
        let p = get("P")?.clone();
        if !p.is_square() {
            return Err(Error::Input("certificate block P must be square".into()));
        }
        Ok(Certificate {
            vars: DecisionVars::new(p, two("R")?, two("S")?)?,
            alpha: scalar("alpha")?,
            margin: scalar("margin")?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// Margin `t` of the last iterate (lower bound on the optimum).
    pub primal_margin: f64,
    /// Upper bound on the optimal margin from the dual point (when positive optimum).
    pub dual_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub status: Status,
    pub certificate: Option<Certificate>,
    /// Total Newton steps.
    pub iterations: usize,
    pub residuals: Residuals,
    pub message: Option<String>,
}

/// Eigenvalue margins `[lmin(P), lmin(R), lmin(S), -lmax(Psi - c R_N)]`.
pub fn eigen_margins(problem: &LmiProblem, vars: &DecisionVars, alpha: f64) -> Result<[f64; 4]> {
    let lmi = problem.lmi_matrix(vars, alpha)?;
    let lmin = |m: DMatrix<f64>| SymmetricEigen::new(m).eigenvalues.min();
    let dyn2 = |m: &Matrix2<f64>| DMatrix::from_column_slice(2, 2, m.as_slice());
    Ok([
        lmin(vars.p.clone()),
        lmin(dyn2(&vars.r)),
        lmin(dyn2(&vars.s)),
        -SymmetricEigen::new(lmi).eigenvalues.max(),
    ])
}

/// Independent check of a certificate: recomputes the LMI from the problem
/// data and tests all four inequalities with margin `tol` by symmetric
/// eigendecomposition.
pub fn verify_certificate(problem: &LmiProblem, cert: &Certificate, tol: f64) -> Result<bool> {
    let d = problem.dim_p();
    if cert.vars.p.shape() != (d, d) {
        return Err(Error::Input(format!(
            "certificate P is {:?}, problem expects {d}x{d}",
            cert.vars.p.shape()
        )));
    }
    let m = eigen_margins(problem, &cert.vars, cert.alpha)?;
    Ok(m.iter().all(|v| *v >= tol))
}

/// Vectorized linear map of one LMI block: `vec(F) = amat * y[vars]`.
struct Block {
    dim: usize,
    vars: Vec<usize>,
    amat: DMatrix<f64>,
}

struct Layout {
    dim_p: usize,
    /// Coordinates of `x = (svec P, svec R, svec S)`; `t` follows.
    nx: usize,
    /// `(row, col)` of each coordinate inside its matrix, and which matrix.
    coords: Vec<(usize, usize, usize)>,
}

impl Layout {
    fn new(dim_p: usize) -> Self {
        let mut coords = Vec::new();
        for (which, d) in [(0usize, dim_p), (1, 2), (2, 2)] {
            for i in 0..d {
                for j in i..d {
                    coords.push((which, i, j));
                }
            }
        }
        Self {
            dim_p,
            nx: coords.len(),
            coords,
        }
    }

    fn t_index(&self) -> usize {
        self.nx
    }

    fn unpack(&self, y: &DVector<f64>) -> DecisionVars {
        let mut vars = DecisionVars::zeros(self.dim_p);
        for (idx, &(which, i, j)) in self.coords.iter().enumerate() {
            let v = y[idx];
            match which {
                0 => {
                    vars.p[(i, j)] = v;
                    vars.p[(j, i)] = v;
                }
                1 => {
                    vars.r[(i, j)] = v;
                    vars.r[(j, i)] = v;
                }
                _ => {
                    vars.s[(i, j)] = v;
                    vars.s[(j, i)] = v;
                }
            }
        }
        vars
    }

    fn unit(&self, idx: usize) -> DecisionVars {
        let mut y = DVector::zeros(self.nx + 1);
        y[idx] = 1.0;
        self.unpack(&y)
    }

    /// Trace functional of the normalization constraint.
    fn trace_row(&self) -> DVector<f64> {
        let mut a = DVector::zeros(self.nx + 1);
        for (idx, &(_, i, j)) in self.coords.iter().enumerate() {
            if i == j {
                a[idx] = 1.0;
            }
        }
        a
    }
}

fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn neg_identity_vec(d: usize) -> DVector<f64> {
    vec_of(&(-DMatrix::<f64>::identity(d, d)))
}

fn build_blocks(problem: &LmiProblem, layout: &Layout, alpha: f64) -> Result<Vec<Block>> {
    let t = layout.t_index();
    let mut blocks = Vec::with_capacity(4);
    for (which, d) in [(0usize, layout.dim_p), (1, 2), (2, 2)] {
        let vars: Vec<usize> = (0..layout.nx)
            .filter(|&i| layout.coords[i].0 == which)
            .chain(std::iter::once(t))
            .collect();
        let mut amat = DMatrix::zeros(d * d, vars.len());
        for (col, &i) in vars.iter().enumerate() {
            if i == t {
                amat.set_column(col, &neg_identity_vec(d));
            } else {
                let (_, r, c) = layout.coords[i];
                amat[(r + c * d, col)] = 1.0;
                amat[(c + r * d, col)] = 1.0;
            }
        }
        blocks.push(Block { dim: d, vars, amat });
    }
    let d = problem.dim_xi;
    let vars: Vec<usize> = (0..=layout.nx).collect();
    let mut amat = DMatrix::zeros(d * d, vars.len());
    for i in 0..layout.nx {
        let img = -problem.lmi_matrix(&layout.unit(i), alpha)?;
        amat.set_column(i, &vec_of(&img));
    }
    amat.set_column(t, &neg_identity_vec(d));
    blocks.push(Block { dim: d, vars, amat });
    Ok(blocks)
}

struct BarrierEval {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
    /// Sum of `tr F_k^{-1}` over blocks.
    trace_inv: f64,
}

fn gather(y: &DVector<f64>, vars: &[usize]) -> DVector<f64> {
    DVector::from_iterator(vars.len(), vars.iter().map(|&i| y[i]))
}

fn block_matrix(b: &Block, y: &DVector<f64>) -> DMatrix<f64> {
    let v = &b.amat * gather(y, &b.vars);
    let f = DMatrix::from_column_slice(b.dim, b.dim, v.as_slice());
    (&f + f.transpose()) * 0.5
}

/// `-sum log det F_k(y)`, or `None` outside the domain.
fn barrier_value(blocks: &[Block], y: &DVector<f64>) -> Option<f64> {
    let mut total = 0.0;
    for b in blocks {
        let chol = Cholesky::new(block_matrix(b, y))?;
        total -= 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    }
    total.is_finite().then_some(total)
}

fn barrier_eval(blocks: &[Block], y: &DVector<f64>) -> Option<BarrierEval> {
    let n = y.len();
    let mut value = 0.0;
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    let mut trace_inv = 0.0;
    for b in blocks {
        let chol = Cholesky::new(block_matrix(b, y))?;
        value -= 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let w = chol.inverse();
        let w = (&w + w.transpose()) * 0.5;
        trace_inv += w.trace();
        let d = b.dim;
        let k = b.vars.len();
        let g_local = -(b.amat.transpose() * vec_of(&w));
        // Columns vec(W A_j W).
        let mut wa = DMatrix::zeros(d * d, k);
        for j in 0..k {
            let a = DMatrix::from_column_slice(d, d, b.amat.column(j).as_slice());
            let prod = &w * a * &w;
            wa.set_column(j, &vec_of(&prod));
        }
        let h_local = b.amat.transpose() * wa;
        for (li, &gi) in b.vars.iter().enumerate() {
            grad[gi] += g_local[li];
            for (lj, &gj) in b.vars.iter().enumerate() {
                hess[(gi, gj)] += h_local[(li, lj)];
            }
        }
    }
    let hess = (&hess + hess.transpose()) * 0.5;
    Some(BarrierEval {
        value,
        grad,
        hess,
        trace_inv,
    })
}

fn solve_spd(h: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(ch) = Cholesky::<f64, Dyn>::new(h.clone()) {
        return Some(ch.solve(rhs));
    }
    h.clone().lu().solve(rhs)
}

/// Upper bound on the optimal margin from the dual point `Z_k = F_k^{-1} / sum tr F_k^{-1}`.
fn dual_bound(layout: &Layout, grad: &DVector<f64>, trace_inv: f64) -> f64 {
    // grad_x = -A^*(F^{-1}); the bound is the largest eigenvalue of A^*(Z).
    let mut g = layout.unpack(&(-grad / trace_inv));
    for (idx, &(which, i, j)) in layout.coords.iter().enumerate() {
        if i != j {
            let half = -grad[idx] / trace_inv * 0.5;
            match which {
                0 => {
                    g.p[(i, j)] = half;
                    g.p[(j, i)] = half;
                }
                1 => {
                    g.r[(i, j)] = half;
                    g.r[(j, i)] = half;
                }
                _ => {
                    g.s[(i, j)] = half;
                    g.s[(j, i)] = half;
                }
            }
        }
    }
    let lmax = |m: DMatrix<f64>| SymmetricEigen::new(m).eigenvalues.max();
    let dyn2 = |m: &Matrix2<f64>| DMatrix::from_column_slice(2, 2, m.as_slice());
    lmax(g.p).max(lmax(dyn2(&g.r))).max(lmax(dyn2(&g.s)))
}

fn initial_point(problem: &LmiProblem, layout: &Layout, alpha: f64) -> Result<DVector<f64>> {
    let total = (layout.dim_p + 4) as f64;
    let mut y = DVector::zeros(layout.nx + 1);
    for (idx, &(_, i, j)) in layout.coords.iter().enumerate() {
        if i == j {
            y[idx] = 1.0 / total;
        }
    }
    let vars = layout.unpack(&y);
    let lmi = problem.lmi_matrix(&vars, alpha)?;
    let worst = (-SymmetricEigen::new(lmi).eigenvalues.max()).min(1.0 / total);
    y[layout.t_index()] = worst - worst.abs().max(1.0 / total);
    Ok(y)
}

pub fn solve_feasibility(problem: &LmiProblem, alpha: f64, opts: &SolverOptions) -> Result<FeasibilityReport> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Input(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let layout = Layout::new(problem.dim_p());
    let blocks = build_blocks(problem, &layout, alpha)?;
    let a = layout.trace_row();
    let ti = layout.t_index();
    let mut y = initial_point(problem, &layout, alpha)?;
    let total_dim = blocks.iter().map(|b| b.dim).sum::<usize>() as f64;

    let mut s = 1.0;
    let mut iterations = 0;
    let mut residuals = Residuals {
        primal_margin: y[ti],
        dual_bound: f64::INFINITY,
    };

    let finish = |status: Status, y: &DVector<f64>, iterations, residuals, message: Option<String>| {
        let certificate = if status == Status::Feasible {
            let vars = layout.unpack(y);
            let m = eigen_margins(problem, &vars, alpha)?;
            let margin = m.iter().copied().fold(f64::INFINITY, f64::min);
            Some(Certificate { vars, alpha, margin })
        } else {
            None
        };
        Ok(FeasibilityReport {
            status,
            certificate,
            iterations,
            residuals,
            message,
        })
    };

    let mut stalled = false;
    for _outer in 0..opts.max_outer {
        let mut centered = false;
        let mut last_eval = None;
        for _ in 0..opts.max_newton {
            let Some(ev) = barrier_eval(&blocks, &y) else {
                return finish(
                    Status::NumericalFailure,
                    &y,
                    iterations,
                    residuals,
                    Some("iterate left the interior".into()),
                );
            };
            let mut grad = ev.grad.clone();
            grad[ti] -= s;
            let rhs = DMatrix::from_columns(&[grad.clone(), a.clone()]);
            let Some(sol) = solve_spd(&ev.hess, &rhs) else {
                return finish(
                    Status::NumericalFailure,
                    &y,
                    iterations,
                    residuals,
                    Some("singular Newton system".into()),
                );
            };
            let u = sol.column(0);
            let v = sol.column(1);
            let nu = a.dot(&u) / a.dot(&v);
            let dir: DVector<f64> = -u + v * nu;
            let decrement = -grad.dot(&dir);
            iterations += 1;

            if decrement <= 1e-10 {
                centered = true;
                last_eval = Some(ev);
                break;
            }

            let f0 = -s * y[ti] + ev.value;
            let mut step = 1.0;
            let mut moved = false;
            // Inside the quadratic-convergence region a full step is safe, and
            // the objective decrease is below what f64 can resolve anyway.
            if decrement < 0.1 && barrier_value(&blocks, &(&y + &dir)).is_some() {
                y += &dir;
                moved = true;
            }
            while !moved && step > 1e-12 {
                let cand = &y + &dir * step;
                if let Some(phi) = barrier_value(&blocks, &cand) {
                    let f1 = -s * cand[ti] + phi;
                    if f1 <= f0 - 0.25 * step * decrement {
                        y = cand;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            residuals.primal_margin = y[ti];
            if opts.stop_when_decided && y[ti] > opts.margin_tol {
                return finish(Status::Feasible, &y, iterations, residuals, None);
            }
            if !moved {
                // No progress possible at this precision.
                stalled = true;
                centered = true;
                last_eval = barrier_eval(&blocks, &y);
                break;
            }
        }
        if !centered {
            return finish(
                Status::NumericalFailure,
                &y,
                iterations,
                residuals,
                Some(format!(
                    "centering did not converge in {} Newton steps",
                    opts.max_newton
                )),
            );
        }
        if let Some(ev) = last_eval {
            residuals.dual_bound = residuals.dual_bound.min(dual_bound(&layout, &ev.grad, ev.trace_inv));
        }
        residuals.primal_margin = y[ti];
        let t = y[ti];
        let ub = residuals.dual_bound;
        // Central-path gap; the explicit dual bound loses accuracy first.
        let path_gap = total_dim / s;
        if t > opts.margin_tol && (opts.stop_when_decided || ub - t <= opts.gap_tol || path_gap <= opts.gap_tol) {
            return finish(Status::Feasible, &y, iterations, residuals, None);
        }
        if ub < opts.margin_tol {
            return finish(Status::InfeasibleAtTolerance, &y, iterations, residuals, None);
        }
        if t <= opts.margin_tol && ub - t <= 1e-3 * opts.margin_tol {
            return finish(
                Status::InfeasibleAtTolerance,
                &y,
                iterations,
                residuals,
                Some("optimal margin within the tolerance band".into()),
            );
        }
        if stalled {
            if t > opts.margin_tol {
                return finish(Status::Feasible, &y, iterations, residuals, None);
            }
            if ub < 2.0 * opts.margin_tol {
                return finish(
                    Status::InfeasibleAtTolerance,
                    &y,
                    iterations,
                    residuals,
                    Some(format!("stalled with margin in [{t:e}, {ub:e}]")),
                );
            }
            return finish(
                Status::NumericalFailure,
                &y,
                iterations,
                residuals,
                Some(format!("Newton stalled with margin in [{t:e}, {ub:e}]")),
            );
        }
        s *= opts.barrier_growth;
    }
    let t = y[ti];
    if t > opts.margin_tol {
        return finish(Status::Feasible, &y, iterations, residuals, None);
    }
    finish(
        Status::NumericalFailure,
        &y,
        iterations,
        residuals,
        Some(format!(
            "undecided after {} barrier updates: margin in [{t:e}, {:e}]",
            opts.max_outer, residuals.dual_bound
        )),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmi::assemble;
    use crate::model::{build_closed_loop, ClosedLoop, ControllerParams, PlantParams};

    fn feedforward_problem(order: usize) -> LmiProblem {
        let plant = PlantParams::default();
        let cl = build_closed_loop(&plant, &ControllerParams::feedforward()).unwrap();
        assemble(order, &cl, &plant)
    }

    fn solve(pb: &LmiProblem, alpha: f64) -> FeasibilityReport {
        solve_feasibility(pb, alpha, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn feasible_below_ode_rate_with_sound_certificate() {
        let pb = feedforward_problem(1);
        let rep = solve(&pb, 0.20);
        assert_eq!(rep.status, Status::Feasible, "{rep:?}");
        let cert = rep.certificate.unwrap();
        assert!(cert.margin > 1e-7);
        assert!((cert.vars.trace() - 1.0).abs() < 1e-9);
        assert!(verify_certificate(&pb, &cert, cert.margin / 2.0).unwrap());
    }

    #[test]
    fn infeasible_above_ode_rate() {
        let rep = solve(&feedforward_problem(1), 0.30);
        assert_eq!(rep.status, Status::InfeasibleAtTolerance, "{rep:?}");
        assert!(rep.certificate.is_none());
        assert!(rep.residuals.dual_bound < 1e-7);
    }

    #[test]
    fn infeasible_above_alpha_max() {
        // Far beyond the neutral bound the boundary block alone is violated.
        let rep = solve(&feedforward_problem(0), 1.3);
        assert_eq!(rep.status, Status::InfeasibleAtTolerance);
    }

    #[test]
    fn corrupted_certificates_are_rejected() {
        let pb = feedforward_problem(1);
        let mut cert = solve(&pb, 0.1).certificate.unwrap();
        assert!(verify_certificate(&pb, &cert, cert.margin / 2.0).unwrap());
        cert.vars.s = -cert.vars.s;
        assert!(!verify_certificate(&pb, &cert, cert.margin / 2.0).unwrap());
    }

    #[test]
    fn identity_guess_fails_far_above_alpha_max() {
        let pb = feedforward_problem(2);
        let norm = (pb.dim_p() + 4) as f64;
        let cert = Certificate {
            vars: DecisionVars {
                p: DMatrix::identity(pb.dim_p(), pb.dim_p()) / norm,
                r: Matrix2::identity() / norm,
                s: Matrix2::identity() / norm,
            },
            alpha: 3.0,
            margin: 1e-3,
        };
        assert!(!verify_certificate(&pb, &cert, 1e-9).unwrap());
        let m = eigen_margins(&pb, &cert.vars, cert.alpha).unwrap();
        assert!(m[3] < 0.0);
    }

    #[test]
    fn certificate_text_round_trip() {
        let pb = feedforward_problem(2);
        let cert = solve(&pb, 0.15).certificate.unwrap();
        let back = Certificate::from_text(&cert.to_text()).unwrap();
        assert_eq!(back, cert);
        assert!(verify_certificate(&pb, &back, cert.margin / 2.0).unwrap());
        assert!(Certificate::from_text("# P 1 1\n1\n").is_err());
    }

    #[test]
    fn bad_inputs() {
        let pb = feedforward_problem(1);
        let opts = SolverOptions::default();
        assert!(matches!(solve_feasibility(&pb, -0.1, &opts), Err(Error::Input(_))));
        assert!(matches!(
            solve_feasibility(&pb, f64::INFINITY, &opts),
            Err(Error::Input(_))
        ));
        let cert = Certificate {
            vars: DecisionVars::zeros(3),
            alpha: 0.1,
            margin: 1.0,
        };
        assert!(matches!(verify_certificate(&pb, &cert, 0.5), Err(Error::Input(_))));
    }

    #[test]
    fn full_optimization_reports_optimal_margin() {
        let pb = feedforward_problem(0);
        let opts = SolverOptions {
            stop_when_decided: false,
            ..Default::default()
        };
        let rep = solve_feasibility(&pb, 0.1, &opts).unwrap();
        assert_eq!(rep.status, Status::Feasible);
        let early = solve(&pb, 0.1);
        assert!(rep.residuals.primal_margin >= early.residuals.primal_margin);
        let (t, ub) = (rep.residuals.primal_margin, rep.residuals.dual_bound);
        assert!(ub >= t);
        assert!(ub - t < 1e-2 * t, "{t:e} {ub:e}");
    }

    #[test]
    fn verdict_is_monotone_in_alpha() {
        let pb = feedforward_problem(1);
        let verdicts: Vec<Status> = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.5, 1.0]
            .iter()
            .map(|&a| solve(&pb, a).status)
            .collect();
        let first_infeasible = verdicts.iter().position(|s| *s != Status::Feasible).unwrap();
        assert!(verdicts[first_infeasible..]
            .iter()
            .all(|s| *s == Status::InfeasibleAtTolerance));
        assert_eq!(first_infeasible, 5);
    }

    #[test]
    fn verdict_survives_time_rescaling() {
        // Rescaling time by kappa multiplies the whole LMI by kappa.
        let plant = PlantParams::default();
        let cl = build_closed_loop(&plant, &ControllerParams::feedforward()).unwrap();
        for kappa in [0.5, 2.0] {
            let scaled_plant = PlantParams {
                c: plant.c * kappa,
                k: plant.k / kappa,
                g: plant.g / kappa,
                ..plant
            };
            let scaled = ClosedLoop {
                atil: &cl.atil * kappa,
                bhat: &cl.bhat * kappa,
                ..cl.clone()
            };
            let pb = assemble(1, &scaled, &scaled_plant);
            assert_eq!(solve(&pb, 0.2 * kappa).status, Status::Feasible);
            assert_eq!(solve(&pb, 0.3 * kappa).status, Status::InfeasibleAtTolerance);
        }
    }
}
