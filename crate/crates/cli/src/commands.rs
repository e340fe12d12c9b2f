use log::{info, warn};

use pipestab::analysis::{
    first_increase, hierarchy_table, max_decay_rate, necessary_condition, weighted_lyapunov_series, DecayResult,
    HierarchyTable, MAX_TABLE_ORDER,
};
use pipestab::config::ControllerKind;
use pipestab::fsutil::write_atomic;
use pipestab::lmi::assemble;
use pipestab::model::{alpha_max, build_closed_loop, ControllerParams, RateBound};
use pipestab::sdp::{solve_feasibility, verify_certificate, Certificate, Status};
use pipestab::sim::{export_csv, export_fields, fit_decay, simulate as run_sim};
use pipestab::validation::run_validation;
use pipestab::Error;

use crate::{Failure, Run};

/// Relative shortfall of the fitted rate tolerated against the certificate.
const FIT_SLACK: f64 = 0.05;
/// Growth per unit time tolerated in `e^{2 alpha t} V`.
const LYAPUNOV_SLACK: f64 = 0.02;

fn bound_text(b: RateBound) -> String {
    match b {
        RateBound::Finite(v) => format!("{v:.3}"),
        RateBound::Unbounded => "inf".into(),
    }
}

fn check_order(order: usize) -> Result<(), Failure> {
    if order > MAX_TABLE_ORDER {
        return Err(Error::Input(format!("order {order} exceeds {MAX_TABLE_ORDER}")).into());
    }
    Ok(())
}

fn save(run: &mut Run, name: &str, text: &str) -> Result<(), Failure> {
    let path = run.out_path(name);
    write_atomic(&path, text.as_bytes())?;
    info!("wrote {}", path.display());
    run.outputs.push(path);
    Ok(())
}

fn save_certificate(run: &mut Run, name: &str, cert: &Certificate) -> Result<String, Failure> {
    save(run, name, &cert.to_text())?;
    Ok(run.out_path(name).display().to_string())
}

pub fn check(run: &mut Run, alpha: f64, order: usize, kind: Option<ControllerKind>) -> Result<(), Failure> {
    check_order(order)?;
    let kind = run.controller(kind);
    let plant = run.cfg.plant;
    let ctrl = run.cfg.controller.params_for(kind)?;
    let label = kind.label();

    if !necessary_condition(&plant, alpha) {
        let msg = format!(
            "infeasible: {label} N = {order} alpha = {alpha}: exceeds alpha_max = {}",
            bound_text(alpha_max(&plant))
        );
        println!("{msg}");
        return save(run, &format!("check_{label}_N{order}.txt"), &format!("{msg}\n"));
    }

    let problem = assemble(order, &build_closed_loop(&plant, &ctrl)?, &plant);
    let rep = solve_feasibility(&problem, alpha, &run.cfg.analysis.decay_options().solver)?;
    info!("solver: {} after {} iterations", rep.status, rep.iterations);
    let msg = match rep.status {
        Status::Feasible => {
            let cert = rep.certificate.expect("feasible report carries a certificate");
            if !verify_certificate(&problem, &cert, cert.margin / 2.0)? {
                return Err(Failure {
                    code: 3,
                    message: format!("certificate at alpha = {alpha} failed independent verification"),
                });
            }
            let path = save_certificate(run, &format!("certificate_{label}_N{order}.txt"), &cert)?;
            format!(
                "feasible: {label} N = {order} alpha = {alpha}, margin {:.3e}, certificate {path}",
                cert.margin
            )
        }
        Status::InfeasibleAtTolerance => format!(
            "infeasible: {label} N = {order} alpha = {alpha}: best margin {:.3e}, dual bound {:.3e} below tolerance",
            rep.residuals.primal_margin, rep.residuals.dual_bound
        ),
        Status::NumericalFailure => {
            return Err(Failure {
                code: 3,
                message: format!(
                    "solver failed at alpha = {alpha} after {} iterations: {}",
                    rep.iterations,
                    rep.message.unwrap_or_default()
                ),
            })
        }
    };
    println!("{msg}");
    save(run, &format!("check_{label}_N{order}.txt"), &format!("{msg}\n"))
}

fn describe(label: &str, r: &DecayResult) -> String {
    match r.alpha {
        Some(a) => format!(
            "{label} N = {}: alpha_N = {a:.4} (bracket [{:.6}, {:.6}], alpha_max = {}, margin {:.3e}, {} solver iterations over {} solves)",
            r.order,
            r.bracket.0,
            r.bracket.1,
            r.alpha_max,
            r.margin().unwrap_or(f64::NAN),
            r.iterations,
            r.solves
        ),
        None => format!("{label} N = {}: no certificate of asymptotic stability at this N", r.order),
    }
}

pub fn analyze(run: &mut Run, order: usize, kind: Option<ControllerKind>) -> Result<(), Failure> {
    check_order(order)?;
    let kind = run.controller(kind);
    let label = kind.label();
    let ctrl = run.cfg.controller.params_for(kind)?;
    let r = max_decay_rate(&run.cfg.plant, &ctrl, order, &run.cfg.analysis.decay_options())?;
    if r.numerical_failures > 0 {
        warn!(
            "{} solves ended in numerical failure and were treated as uncertified",
            r.numerical_failures
        );
    }
    if r.alpha.is_none() && r.numerical_failures > 0 {
        return Err(Failure {
            code: 3,
            message: format!("{label} N = {order}: solver failed at alpha = 0"),
        });
    }
    let msg = describe(label, &r);
    println!("{msg}");
    save(run, &format!("analyze_{label}_N{order}.txt"), &format!("{msg}\n"))?;
    if let Some(cert) = &r.certificate {
        let path = save_certificate(run, &format!("certificate_{label}_N{order}.txt"), cert)?;
        println!("certificate {path}");
    }
    Ok(())
}

fn controllers(run: &Run) -> Result<Vec<(String, ControllerParams)>, Failure> {
    let mut kinds = vec![ControllerKind::Feedforward, ControllerKind::Dynamic];
    if run.cfg.controller.kind == ControllerKind::Custom {
        kinds.push(ControllerKind::Custom);
    }
    kinds
        .into_iter()
        .map(|k| Ok((k.label().to_string(), run.cfg.controller.params_for(k)?)))
        .collect()
}

fn table_for(run: &Run, ctrls: &[(String, ControllerParams)]) -> Result<HierarchyTable, Failure> {
    let table = hierarchy_table(
        &run.cfg.plant,
        ctrls,
        run.cfg.analysis.max_order,
        &run.cfg.analysis.decay_options(),
    )?;
    for row in &table.rows {
        for cell in &row.cells {
            if let Err(e) = &cell.result {
                warn!("{} N = {}: {e}", row.label, cell.order);
            }
        }
        if !row.is_monotone(table.tol) {
            warn!("{}: certified rates decrease with N beyond tolerance", row.label);
        }
    }
    Ok(table)
}

pub fn table(run: &mut Run) -> Result<(), Failure> {
    let ctrls = controllers(run)?;
    let table = table_for(run, &ctrls)?;
    let text = table.to_text();
    print!("{text}");
    save(run, "table.txt", &text)?;
    save(run, "table.csv", &table.to_csv()?)
}

pub fn simulate(run: &mut Run, kind: Option<ControllerKind>) -> Result<(), Failure> {
    let kind = run.controller(kind);
    let label = kind.label();
    let plant = run.cfg.plant;
    let ctrl = run.cfg.controller.params_for(kind)?;
    let sim_cfg = run.cfg.sim_config();

    let trace = run_sim(&plant, &ctrl, &sim_cfg)?;
    let mut lines = Vec::new();
    let res = trace.initial_residuals;
    lines.push(format!(
        "initial boundary residuals: x=0 {:.3e}, x=1 {:.3e}",
        res.at_0, res.at_1
    ));
    if res.at_0.abs().max(res.at_1.abs()) > 1e-6 {
        warn!("initial profiles violate the boundary conditions; expect a boundary-generated transient");
    }

    let path = run.out_path(&format!("trace_{label}.csv"));
    export_csv(&trace, &path)?;
    run.outputs.push(path);
    let path = run.out_path(&format!("fields_{label}.csv"));
    export_fields(&trace, &path)?;
    run.outputs.push(path);
    info!("wrote trace and field CSVs to {}", run.cfg.output_dir.display());

    let window = run.cfg.fit_window();
    let fit = fit_decay(&trace, window)?;
    lines.push(format!(
        "alpha_emp = {:.4} (r2 {:.3}, {} samples over [{}, {}])",
        fit.alpha, fit.r2, fit.points, window.0, window.1
    ));

    let table = table_for(run, &[(label.to_string(), ctrl)])?;
    let best = table.rows[0]
        .cells
        .iter()
        .filter_map(|c| c.result.as_ref().ok())
        .filter(|r| r.certificate.is_some())
        .max_by(|a, b| a.alpha.partial_cmp(&b.alpha).expect("finite rates"));
    match best {
        Some(r) => {
            let alpha_n = r.alpha.expect("certified result has a rate");
            let ok = fit.alpha >= alpha_n * (1.0 - FIT_SLACK);
            lines.push(format!(
                "best certificate: N = {} alpha_N = {alpha_n:.4}; alpha_emp {} alpha_N - {:.0}%: {}",
                r.order,
                if ok { ">=" } else { "<" },
                FIT_SLACK * 100.0,
                if ok { "consistent" } else { "inconsistent" }
            ));
            let cert = r.certificate.as_ref().expect("filtered on certificate");
            let series = weighted_lyapunov_series(cert, &plant, &trace)?;
            lines.push(match first_increase(&trace.times(), &series, LYAPUNOV_SLACK) {
                None => format!(
                    "e^(2 alpha t) V non-increasing within {:.0}% per unit time",
                    LYAPUNOV_SLACK * 100.0
                ),
                Some((t, rate)) => {
                    format!("e^(2 alpha t) V increases at t = {t:.3} (relative rate {rate:.3} per unit time)")
                }
            });
        }
        None => lines.push(format!(
            "no certificate of asymptotic stability for {label} at N <= {}",
            run.cfg.analysis.max_order
        )),
    }

    let text = lines.join("\n") + "\n";
    print!("{text}");
    save(run, &format!("simulate_{label}.txt"), &text)
}

pub fn validate(run: &mut Run) -> Result<(), Failure> {
    let rep = run_validation(&run.cfg.plant, run.cfg.seed)?;
    let mut text = String::new();
    for c in &rep.checks {
        text.push_str(&format!(
            "{} {}: {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    text.push_str(&format!("{} passed, {} failed\n", rep.passed(), rep.failed()));
    print!("{text}");
    save(run, "validate.txt", &text)?;
    if rep.failed() > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{} validation checks failed", rep.failed()),
        });
    }
    Ok(())
}
