use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info, warn};

use pipestab::config::{ControllerKind, IcKind, RunConfig};
use pipestab::Error;

mod commands;
mod manifest;

use manifest::Manifest;

#[derive(Parser, Debug)]
#[command(
    name = "pipestab",
    version,
    about = "Decay-rate certificates and closed-loop simulation for a drilling pipe"
)]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, env = "PIPESTAB_CONFIG", global = true)]
    config: Option<PathBuf>,
    /// Directory for all output files.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ControllerArg {
    Feedforward,
    Dynamic,
    Custom,
}

impl From<ControllerArg> for ControllerKind {
    fn from(c: ControllerArg) -> Self {
        match c {
            ControllerArg::Feedforward => ControllerKind::Feedforward,
            ControllerArg::Dynamic => ControllerKind::Dynamic,
            ControllerArg::Custom => ControllerKind::Custom,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum IcArg {
    #[value(alias = "paper4")]
    Reference,
    Equilibrium,
    Perturbed,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single feasibility verdict at a fixed rate; writes the certificate when feasible.
    Check {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        order: usize,
        #[arg(long, value_enum)]
        controller: Option<ControllerArg>,
    },
    /// Largest certified decay rate at one projection order.
    Analyze {
        #[arg(long)]
        order: usize,
        #[arg(long, value_enum)]
        controller: Option<ControllerArg>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        cap: Option<f64>,
    },
    /// Certified rates for orders 0..=N for every controller, as text and CSV.
    Table {
        #[arg(long)]
        max_order: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Closed-loop simulation, decay fit, and comparison with the best certificate.
    Simulate {
        #[arg(long, value_enum)]
        controller: Option<ControllerArg>,
        /// Spatial intervals M.
        #[arg(long)]
        grid: Option<usize>,
        /// Horizon in seconds.
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, value_enum)]
        ic: Option<IcArg>,
        /// Largest projection order searched for the reference certificate.
        #[arg(long)]
        max_order: Option<usize>,
    },
    /// Runs the numerical invariant suite and reports pass/fail counts.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Analyze { .. } => "analyze",
            Command::Table { .. } => "table",
            Command::Simulate { .. } => "simulate",
            Command::Validate => "validate",
        }
    }
}

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) => 3,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Resolved configuration plus the list of command-line overrides applied to it.
pub struct Run {
    pub cfg: RunConfig,
    pub overrides: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

impl Run {
    fn set<T: std::fmt::Debug>(&mut self, key: &str, value: T) {
        let line = format!("{key} = {value:?}");
        info!("override {line}");
        self.overrides.push(line);
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    pub fn controller(&self, arg: Option<ControllerKind>) -> ControllerKind {
        arg.unwrap_or(self.cfg.controller.kind)
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => {
            info!("config {}", p.display());
            Ok(RunConfig::load(p)?)
        }
        None => Ok(RunConfig::default()),
    }
}

fn apply_overrides(run: &mut Run, cli: &Cli) -> Result<(), Failure> {
    if let Some(dir) = &cli.output_dir {
        run.cfg.output_dir = dir.clone();
        run.set("output_dir", dir);
    }
    if let Some(seed) = cli.seed {
        run.cfg.seed = seed;
        run.set("seed", seed);
    }
    match &cli.command {
        Command::Analyze { tol, cap, .. } => {
            if let Some(t) = tol {
                run.cfg.analysis.tol = *t;
                run.set("analysis.tol", t);
            }
            if let Some(c) = cap {
                run.cfg.analysis.cap = Some(*c);
                run.set("analysis.cap", c);
            }
        }
        Command::Table { max_order, tol } => {
            if let Some(n) = max_order {
                run.cfg.analysis.max_order = *n;
                run.set("analysis.max_order", n);
            }
            if let Some(t) = tol {
                run.cfg.analysis.tol = *t;
                run.set("analysis.tol", t);
            }
        }
        Command::Simulate {
            grid,
            t_end,
            ic,
            max_order,
            ..
        } => {
            if let Some(m) = grid {
                run.cfg.sim.intervals = *m;
                run.set("sim.M", m);
            }
            if let Some(t) = t_end {
                run.cfg.sim.t_end = *t;
                run.set("sim.T", t);
            }
            if let Some(ic) = ic {
                run.cfg.sim.ic = match ic {
                    IcArg::Reference => IcKind::Reference,
                    IcArg::Equilibrium => IcKind::Equilibrium,
                    IcArg::Perturbed => IcKind::Perturbed,
                };
                run.set("sim.ic", run.cfg.sim.ic);
            }
            if let Some(n) = max_order {
                run.cfg.analysis.max_order = *n;
                run.set("analysis.max_order", n);
            }
        }
        Command::Check { .. } | Command::Validate => {}
    }
    run.cfg.validate()?;
    Ok(())
}

fn dispatch(run: &mut Run, cmd: &Command) -> Result<(), Failure> {
    std::fs::create_dir_all(&run.cfg.output_dir).map_err(|e| {
        Failure::from(Error::Io {
            path: run.cfg.output_dir.clone(),
            source: e,
        })
    })?;
    match cmd {
        Command::Check {
            alpha,
            order,
            controller,
        } => commands::check(run, *alpha, *order, controller.map(Into::into)),
        Command::Analyze { order, controller, .. } => commands::analyze(run, *order, controller.map(Into::into)),
        Command::Table { .. } => commands::table(run),
        Command::Simulate { controller, .. } => commands::simulate(run, controller.map(Into::into)),
        Command::Validate => commands::validate(run),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    // Usage errors exit with status 2 inside clap.
    let cli = Cli::parse();
    let started = Instant::now();

    let cfg = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(f) => {
            error!("{}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let mut run = Run {
        cfg,
        overrides: Vec::new(),
        outputs: Vec::new(),
    };
    if let Err(f) = apply_overrides(&mut run, &cli) {
        error!("{}", f.message);
        return ExitCode::from(f.code);
    }

    let result = dispatch(&mut run, &cli.command);
    let status = match &result {
        Ok(()) => "ok".to_string(),
        Err(f) => format!("exit {}: {}", f.code, f.message),
    };
    let manifest = Manifest::new(
        cli.command.name(),
        std::env::args().collect(),
        &run,
        started.elapsed().as_secs_f64(),
        status,
    );
    if let Err(e) = manifest.write(&run.out_path(&format!("{}.manifest.json", cli.command.name()))) {
        warn!("could not write manifest: {e}");
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            error!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
