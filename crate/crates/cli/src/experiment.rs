//! Convergence experiments: one run per spacing, executed on a bounded
//! worker pool and collected in input order.

use rayon::prelude::*;

use dtrw::boundary::{BoundaryCondition, GhostRule, Side};
use dtrw::diagnostics::{cfl_check_speed, cfl_static_estimate, CflMonitor, ErrorRecorder, MassObserver, Observer, RunReport};
use dtrw::lattice::{steps_to_time, GridOffset, Lattice, StepCount, TimeGrid};
use dtrw::oracle::{convergence_order, finest, l1_error, ErrorRecord, GaussianHeat, Oracle, TanhSolution};
use dtrw::stepper::{evolve, rescale_initial, SchemeConfig, State};
use dtrw::{Error, ForceSpec, WeightRule};

use crate::config::{parse_real, CustomSpec, ExperimentConfig, Preset};

/// Environment variable bounding the worker pool.
pub const THREADS_ENV: &str = "DTRW_THREADS";

/// Everything produced by one run at one spacing.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dx: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub realized_t: f64,
    pub l1_error: Option<f64>,
    /// Static pre-run estimate or run-time monitor flagged the CFL condition.
    pub cfl_violated: bool,
    pub cfl_static: bool,
    pub report: RunReport,
    pub coordinates: Vec<f64>,
    pub numeric: Vec<f64>,
    pub exact: Option<Vec<f64>>,
    /// Set when the run could not be built or aborted part-way.
    pub failure: Option<String>,
}

impl RunOutcome {
    fn failed(dx: f64, message: String) -> Self {
        Self {
            dx,
            dt: f64::NAN,
            n_steps: 0,
            realized_t: f64::NAN,
            l1_error: None,
            cfl_violated: false,
            cfl_static: false,
            report: RunReport::default(),
            coordinates: Vec::new(),
            numeric: Vec::new(),
            exact: None,
            failure: Some(message),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    pub fn record(&self) -> Option<ErrorRecord> {
        match (self.succeeded(), self.l1_error) {
            (true, Some(l1_error)) => Some(ErrorRecord {
                dx: self.dx,
                dt: self.dt,
                t: self.realized_t,
                l1_error,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub preset: Preset,
    pub runs: Vec<RunOutcome>,
}

impl ExperimentResult {
    pub fn records(&self) -> Vec<ErrorRecord> {
        self.runs.iter().filter_map(RunOutcome::record).collect()
    }

    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(RunOutcome::succeeded)
    }

    /// Convergence slope over the `k` finest successful runs (all when `k == 0`).
    pub fn slope(&self, k: usize) -> dtrw::Result<f64> {
        let records = self.records();
        let k = if k == 0 { records.len() } else { k };
        convergence_order(&finest(&records, k))
    }
}

/// A fully assembled run.
pub struct RunPlan {
    pub scheme: SchemeConfig,
    pub initial: State,
    pub steps: StepCount,
    pub oracle: Option<Oracle>,
    /// Supremum of the solution at the boundaries over the run, for the
    /// static CFL estimate.
    pub boundary_sup: f64,
}

fn worker_pool() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Builds and executes one plan per spacing, preserving input order.
pub fn run_ladder<F>(dx_list: &[f64], trace_error: bool, build: F) -> Vec<RunOutcome>
where
    F: Fn(f64) -> dtrw::Result<RunPlan> + Sync,
{
    worker_pool().install(|| {
        dx_list
            .par_iter()
            .map(|&dx| match build(dx) {
                Ok(plan) => execute(plan, trace_error),
                Err(e) => RunOutcome::failed(dx, e.to_string()),
            })
            .collect()
    })
}

/// Runs a plan with the mass and CFL observers and, if requested, a
/// per-step error trace.
pub fn execute(plan: RunPlan, trace_error: bool) -> RunOutcome {
    let scheme = &plan.scheme;
    let dx = scheme.lattice().dx();
    let dt = scheme.dt();
    let initial_values = plan.initial.values().into_owned();
    let cfl_static = match &plan.oracle {
        Some(Oracle::BurgersTanh(_)) => cfl_static_estimate(&initial_values, plan.boundary_sup, dx, dt),
        _ => scheme
            .max_speed(&initial_values, 0.0)
            .map(|s| cfl_check_speed(s, dx, dt))
            .unwrap_or(false),
    };

    let mut mass = MassObserver;
    let mut cfl = CflMonitor::default();
    let oracle = plan.oracle;
    let mut recorder = ErrorRecorder::new(move |x, t| oracle.map_or(f64::NAN, |o| o.eval(x, t)));
    let mut observers: Vec<&mut dyn Observer> = vec![&mut mass, &mut cfl];
    if trace_error && plan.oracle.is_some() {
        observers.push(&mut recorder);
    }

    let coordinates = scheme.lattice().coordinates();
    let (state, report, failure) = match evolve(plan.initial, scheme, plan.steps.n_steps, &mut observers) {
        Ok(ev) => (ev.state, ev.report, None),
        Err(aborted) => {
            let msg = aborted.to_string();
            (aborted.state, aborted.report, Some(msg))
        }
    };
    let numeric = state.values().into_owned();
    let exact = plan
        .oracle
        .map(|o| o.sample(scheme.lattice(), plan.steps.realized_time));
    let l1 = match (&exact, &failure) {
        (Some(e), None) => l1_error(&numeric, e, dx).ok(),
        _ => None,
    };
    RunOutcome {
        dx,
        dt,
        n_steps: plan.steps.n_steps,
        realized_t: plan.steps.realized_time,
        l1_error: l1,
        cfl_violated: cfl_static || report.cfl_violated,
        cfl_static,
        report,
        coordinates,
        numeric,
        exact,
        failure,
    }
}

fn boundary_sup(oracle: &TanhSolution, x: [f64; 2], steps: &StepCount, dt: f64) -> f64 {
    (0..=steps.n_steps)
        .map(|n| n as f64 * dt)
        .flat_map(|t| x.map(|x| oracle.eval(x, t).abs()))
        .fold(0.0, f64::max)
}

fn burgers_plan(cfg: &ExperimentConfig, dx: f64, neumann: bool) -> dtrw::Result<RunPlan> {
    let nu = cfg.nu;
    let exact = TanhSolution::front(nu, cfg.c)?;
    let (x_min, x_max) = (0.0, 100.0);
    let offset = if neumann {
        GridOffset::CellCentered
    } else {
        GridOffset::NodeCentered
    };
    let lattice = Lattice::new(x_min, x_max, dx, offset)?;
    let grid = TimeGrid::new(dx, nu, 0)?;
    let steps = steps_to_time(cfg.target_t, grid.dt(), cfg.snap)?;
    let weights: WeightRule = cfg.weights.parse()?;
    let (left, right) = if neumann {
        let ghost: GhostRule = cfg.ghost.parse()?;
        (
            BoundaryCondition::neumann(Side::Left, ghost, move |t| exact.slope(x_min, t)),
            BoundaryCondition::neumann(Side::Right, ghost, move |t| exact.slope(x_max, t)),
        )
    } else {
        (
            BoundaryCondition::dirichlet(Side::Left, move |t| exact.eval(x_min, t)),
            BoundaryCondition::dirichlet(Side::Right, move |t| exact.eval(x_max, t)),
        )
    };
    let initial = exact.sample(&lattice.coordinates(), 0.0);
    let (state, _) = rescale_initial(&initial)?;
    let split = state.is_split();
    let scheme = SchemeConfig::new(
        lattice,
        grid.with_steps(steps.n_steps),
        ForceSpec::burgers(nu)?,
        weights,
        left,
        right,
        split,
    )?;
    Ok(RunPlan {
        boundary_sup: boundary_sup(&exact, [x_min, x_max], &steps, grid.dt()),
        scheme,
        initial: state,
        steps,
        oracle: Some(Oracle::BurgersTanh(exact)),
    })
}

/// Burgers front on `[0, 100]` with exact Dirichlet data at both ends,
/// node-centred lattice, compared with the exact solution at `target_t`.
pub fn run_example1(cfg: &ExperimentConfig) -> ExperimentResult {
    ExperimentResult {
        preset: Preset::Example1Dirichlet,
        runs: run_ladder(&cfg.dx_list, cfg.trace_error, |dx| burgers_plan(cfg, dx, false)),
    }
}

/// Burgers front on `[0, 100]` with exact Neumann data at both ends on a
/// cell-centred lattice, using the configured ghost rule.
pub fn run_example2(cfg: &ExperimentConfig) -> ExperimentResult {
    ExperimentResult {
        preset: Preset::Example2Neumann,
        runs: run_ladder(&cfg.dx_list, cfg.trace_error, |dx| burgers_plan(cfg, dx, true)),
    }
}

fn time_function(name: &str, exact: TanhSolution, x: f64, neumann: bool) -> dtrw::Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    Ok(match name {
        "zero" => Box::new(|_| 0.0),
        "burgers-left" | "burgers-right" if neumann => Box::new(move |t| exact.slope(x, t)),
        "burgers-left" | "burgers-right" => Box::new(move |t| exact.eval(x, t)),
        other => match other.strip_prefix("const:") {
            Some(v) => {
                let v = parse_real(v).map_err(Error::ConfigInvalid)?;
                Box::new(move |_| v)
            }
            None => {
                return Err(Error::ConfigInvalid(format!(
                    "unknown boundary time function '{other}'"
                )))
            }
        },
    })
}

fn boundary(spec: &str, side: Side, ghost: GhostRule, exact: TanhSolution, x: f64) -> dtrw::Result<BoundaryCondition> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    let need = || {
        arg.ok_or_else(|| Error::ConfigInvalid(format!("boundary '{spec}' needs a time function")))
    };
    Ok(match kind {
        "periodic" => BoundaryCondition::periodic(side),
        "zero-flux" => BoundaryCondition::zero_flux(side),
        "dirichlet" => {
            let f = time_function(need()?, exact, x, false)?;
            BoundaryCondition::dirichlet(side, f)
        }
        "neumann" => {
            let f = time_function(need()?, exact, x, true)?;
            BoundaryCondition::neumann(side, ghost, f)
        }
        other => {
            return Err(Error::ConfigInvalid(format!(
                "unknown boundary kind '{other}'"
            )))
        }
    })
}

fn custom_plan(cfg: &ExperimentConfig, spec: &CustomSpec, dx: f64) -> dtrw::Result<RunPlan> {
    let nu = cfg.nu;
    let diffusivity = spec.diffusivity.unwrap_or(nu);
    let exact = TanhSolution::front(nu, cfg.c)?;
    let ghost: GhostRule = cfg.ghost.parse()?;
    let weights: WeightRule = cfg.weights.parse()?;
    let left = boundary(&spec.bc_left, Side::Left, ghost, exact, spec.x_min)?;
    let right = boundary(&spec.bc_right, Side::Right, ghost, exact, spec.x_max)?;

    let periodic = left.kind() == dtrw::BoundaryKind::Periodic;
    let lattice = if periodic {
        Lattice::ring(spec.x_min, spec.x_max - spec.x_min, dx)?
    } else if left.kind().is_neumann() || right.kind().is_neumann() {
        Lattice::new(spec.x_min, spec.x_max, dx, GridOffset::CellCentered)?
    } else {
        Lattice::new(spec.x_min, spec.x_max, dx, GridOffset::NodeCentered)?
    };
    let grid = TimeGrid::new(dx, diffusivity, 0)?;
    let steps = steps_to_time(cfg.target_t, grid.dt(), cfg.snap)?;

    let force = match spec.force.as_str() {
        "burgers" => ForceSpec::burgers(nu)?,
        "diffusion" => ForceSpec::zero(1.0)?,
        other => {
            return Err(Error::ConfigInvalid(format!(
                "unknown force preset '{other}'"
            )))
        }
    };
    let gaussian = GaussianHeat {
        mass: 1.0,
        center: 0.5 * (spec.x_min + spec.x_max),
        diffusivity,
        t0: 1.0,
    };
    let xs = lattice.coordinates();
    let initial: Vec<f64> = match spec.initial.as_str() {
        "burgers-tanh" => exact.sample(&xs, 0.0),
        "gaussian" => xs.iter().map(|&x| gaussian.eval(x, 0.0)).collect(),
        other => match other.strip_prefix("const:") {
            Some(v) => vec![parse_real(v).map_err(Error::ConfigInvalid)?; xs.len()],
            None => {
                return Err(Error::ConfigInvalid(format!(
                    "unknown initial condition '{other}'"
                )))
            }
        },
    };
    let oracle = match spec.oracle.as_deref() {
        None => None,
        Some("burgers-tanh") => Some(Oracle::BurgersTanh(exact)),
        Some("heat-gaussian") => Some(Oracle::HeatGaussian(gaussian)),
        Some(other) => {
            return Err(Error::ConfigInvalid(format!("unknown oracle '{other}'")))
        }
    };
    let (state, _) = rescale_initial(&initial)?;
    let split = state.is_split();
    let scheme = SchemeConfig::new(
        lattice,
        grid.with_steps(steps.n_steps),
        force,
        weights,
        left,
        right,
        split,
    )?;
    let boundary_sup = match oracle {
        Some(Oracle::BurgersTanh(s)) => boundary_sup(&s, [spec.x_min, spec.x_max], &steps, grid.dt()),
        _ => 0.0,
    };
    Ok(RunPlan {
        scheme,
        initial: state,
        steps,
        oracle,
        boundary_sup,
    })
}

/// Generic pipeline driven by the `custom` block of the configuration.
pub fn run_custom(cfg: &ExperimentConfig) -> Result<ExperimentResult, Error> {
    let spec = cfg
        .custom
        .clone()
        .ok_or_else(|| Error::ConfigInvalid("custom preset needs a 'custom' block".into()))?;
    Ok(ExperimentResult {
        preset: Preset::Custom,
        runs: run_ladder(&cfg.dx_list, cfg.trace_error, |dx| custom_plan(cfg, &spec, dx)),
    })
}

/// Dispatches on the configured preset.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult, Error> {
    match cfg.preset {
        Preset::Example1Dirichlet => Ok(run_example1(cfg)),
        Preset::Example2Neumann => Ok(run_example2(cfg)),
        Preset::Custom => run_custom(cfg),
    }
}
