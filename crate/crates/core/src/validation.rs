//! Numerical invariant checks shared by the `validate` command and the test
//! suites: the Bessel inequality, the projection transport identity,
//! convergence order of the wave scheme, and certificate soundness.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::legendre::{bessel_gap, build_structural, project_stack, LegendreBasis};
use crate::lmi::assemble;
use crate::model::{build_closed_loop, ControllerParams, PlantParams};
use crate::quad;
use crate::sdp::{solve_feasibility, verify_certificate, SolverOptions, Status};
use crate::sim::fixed_end_error;

/// One named pass/fail line.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselSummary {
    pub cases: usize,
    pub min_gap: f64,
    /// Cases where the gap grew with `N` by more than rounding.
    pub monotone_violations: usize,
    /// Largest `|gap|` over fields spanned exactly by the basis.
    pub exact_span_max: f64,
}

fn random_spd(rng: &mut ChaCha8Rng) -> Matrix2<f64> {
    let l = Matrix2::from_fn(|_, _| rng.random_range(-1.0..1.0));
    l * l.transpose() + Matrix2::identity() * 0.1
}

/// Randomized fields built from polynomials and sinusoids on a 401-point grid.
pub fn bessel_suite(seed: u64, cases: usize) -> Result<BesselSummary> {
    const POINTS: usize = 401;
    const MAX_N: usize = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = quad::unit_grid(POINTS);
    let mut min_gap = f64::INFINITY;
    let mut monotone_violations = 0;
    let mut exact_span_max: f64 = 0.0;
    let basis = LegendreBasis::new(MAX_N)?;

    for _ in 0..cases {
        let r = random_spd(&mut rng);
        let poly: [Vec<f64>; 2] = std::array::from_fn(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect());
        let wave: [(f64, f64, f64); 2] = std::array::from_fn(|_| {
            (
                rng.random_range(-1.0..1.0),
                rng.random_range(0.5..12.0),
                rng.random_range(0.0..6.3),
            )
        });
        let chi: Vec<Vector2<f64>> = grid
            .iter()
            .map(|&x| {
                let comp = |d: usize| {
                    let p: f64 = poly[d].iter().rev().fold(0.0, |acc, c| acc * x + c);
                    let (amp, freq, phase) = wave[d];
                    p + amp * (freq * x + phase).sin()
                };
                Vector2::new(comp(0), comp(1))
            })
            .collect();
        let mut prev = f64::INFINITY;
        for n in 0..=MAX_N {
            let gap = bessel_gap(&chi, &r, n)?;
            min_gap = min_gap.min(gap);
            if gap > prev + 1e-12 {
                monotone_violations += 1;
            }
            prev = gap;
        }

        // A field in the span of L_0..L_N has zero gap at order N.
        let n = rng.random_range(0..=MAX_N);
        let coef: Vec<Vector2<f64>> = (0..=n)
            .map(|_| Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let spanned: Vec<Vector2<f64>> = grid
            .iter()
            .map(|&x| (0..=n).fold(Vector2::zeros(), |acc, l| acc + coef[l] * basis.value(l, x)))
            .collect();
        exact_span_max = exact_span_max.max(bessel_gap(&spanned, &r, n)?.abs());
    }
    Ok(BesselSummary {
        cases,
        min_gap,
        monotone_violations,
        exact_span_max,
    })
}

/// Non-periodic on `[0, 1]`, so no projection order is trivially exact.
fn transported(x: f64, t: f64, c: f64) -> Vector2<f64> {
    use std::f64::consts::PI;
    let s = x + c * t;
    Vector2::new(
        (2.3 * PI * s).sin() + 0.5 * (3.7 * PI * s).cos(),
        (1.9 * PI * s).cos() - 0.3 * (5.3 * PI * s).sin(),
    )
}

/// Max-norm mismatch between the centered time difference of the projection
/// stack of `chi(x, t) = f(x + c t)` and the transport identity
/// `c 1_N chi(1) - c bar1_N chi(0) - c L_N X`, at `t = 0.3`.
pub fn transport_residual(c: f64, order: usize, intervals: usize, dt: f64) -> Result<f64> {
    let grid = quad::unit_grid(intervals + 1);
    let t0 = 0.3;
    let sample = |t: f64| grid.iter().map(|&x| transported(x, t, c)).collect::<Vec<_>>();
    let stack = |t: f64| project_stack(&sample(t), order).map(|s| s.flatten());
    let fd = (stack(t0 + dt)? - stack(t0 - dt)?) / (2.0 * dt);
    let structural = build_structural(order);
    let exact = crate::legendre::stack_derivative(
        c,
        &structural,
        &transported(0.0, t0, c),
        &transported(1.0, t0, c),
        &stack(t0)?,
    );
    Ok((fd - exact).amax())
}

/// Residuals on a base grid and with `dx`, `dt` both halved.
pub fn transport_convergence(c: f64, order: usize) -> Result<(f64, f64)> {
    Ok((
        transport_residual(c, order, 200, 1e-2)?,
        transport_residual(c, order, 400, 5e-3)?,
    ))
}

/// Fixed-end errors at `M = 40, 80, 160`, Courant number 0.9, `T = 1`.
pub fn scheme_errors(c: f64) -> Result<[f64; 3]> {
    Ok([
        fixed_end_error(c, 40, 0.9, 1.0)?,
        fixed_end_error(c, 80, 0.9, 1.0)?,
        fixed_end_error(c, 160, 0.9, 1.0)?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SoundnessSummary {
    pub feasible: usize,
    pub verified: usize,
    pub corrupted: usize,
    pub rejected: usize,
}

/// Solves on a grid of `(controller, N, alpha)`; every feasible certificate
/// must verify at `margin / 2`, and the same certificate with `S` negated
/// must not.
pub fn certificate_soundness(
    plant: &PlantParams,
    ctrls: &[ControllerParams],
    alphas: &[f64],
) -> Result<SoundnessSummary> {
    let opts = SolverOptions::default();
    let mut out = SoundnessSummary::default();
    for ctrl in ctrls {
        let cl = build_closed_loop(plant, ctrl)?;
        for order in 0..=3 {
            let problem = assemble(order, &cl, plant);
            for &alpha in alphas {
                let rep = solve_feasibility(&problem, alpha, &opts)?;
                if rep.status != Status::Feasible {
                    continue;
                }
                let mut cert = rep.certificate.expect("feasible report carries a certificate");
                let tol = cert.margin / 2.0;
                out.feasible += 1;
                if verify_certificate(&problem, &cert, tol)? {
                    out.verified += 1;
                }
                cert.vars.s = -cert.vars.s;
                out.corrupted += 1;
                if !verify_certificate(&problem, &cert, tol)? {
                    out.rejected += 1;
                }
            }
        }
    }
    Ok(out)
}

/// The full invariant suite on `plant`.
pub fn run_validation(plant: &PlantParams, seed: u64) -> Result<ValidationReport> {
    let mut rep = ValidationReport::default();

    let b = bessel_suite(seed, 100)?;
    rep.push(
        "bessel inequality",
        b.min_gap >= -1e-9,
        format!("{} cases, min gap {:.3e}", b.cases, b.min_gap),
    );
    rep.push(
        "bessel gap non-increasing in N",
        b.monotone_violations == 0,
        format!("{} violations", b.monotone_violations),
    );
    rep.push(
        "bessel gap on spanned fields",
        b.exact_span_max <= 1e-9,
        format!("max |gap| {:.3e}", b.exact_span_max),
    );

    let (r1, r2) = transport_convergence(plant.c, 3)?;
    rep.push(
        "projection transport identity",
        r1 / r2 >= 2.5,
        format!("residual {r1:.3e} -> {r2:.3e} (ratio {:.2})", r1 / r2),
    );

    let e = scheme_errors(plant.c)?;
    rep.push(
        "wave scheme second order",
        e[0] / e[1] >= 3.5 && e[1] / e[2] >= 3.5,
        format!("errors {:.3e}, {:.3e}, {:.3e}", e[0], e[1], e[2]),
    );

    let s = certificate_soundness(
        plant,
        &[ControllerParams::feedforward()],
        &[0.0, 0.05, 0.1, 0.15, 0.2, 0.21],
    )?;
    rep.push(
        "certificates verify",
        s.feasible > 0 && s.verified == s.feasible,
        format!("{}/{} verified", s.verified, s.feasible),
    );
    rep.push(
        "corrupted certificates rejected",
        s.rejected == s.corrupted,
        format!("{}/{} rejected", s.rejected, s.corrupted),
    );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_suite_small() {
        let b = bessel_suite(3, 10).unwrap();
        assert!(b.min_gap >= -1e-9);
        assert_eq!(b.monotone_violations, 0);
        assert!(b.exact_span_max <= 1e-9);
    }

    #[test]
    fn transport_is_second_order_in_time() {
        let (r1, r2) = transport_convergence(2.6892, 2).unwrap();
        assert!(r1 / r2 >= 2.5, "{r1} {r2}");
        assert!(r1 < 0.1, "{r1}");
    }

    #[test]
    fn transport_residual_vanishes_with_steps() {
        let coarse = transport_residual(1.0, 1, 400, 1e-2).unwrap();
        let fine = transport_residual(1.0, 1, 400, 1e-4).unwrap();
        assert!(fine < coarse * 1e-3);
    }

    #[test]
    fn report_counts() {
        let mut r = ValidationReport::default();
        r.push("a", true, String::new());
        r.push("b", false, String::new());
        assert_eq!((r.passed(), r.failed()), (1, 1));
    }
}
