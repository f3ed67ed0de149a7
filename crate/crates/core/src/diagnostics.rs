//! Run-time observers: mass and positivity, CFL monitoring, saturation of
//! the jump probabilities and error traces against an exact solution.

use std::collections::BTreeMap;

use crate::oracle::{l1_error, ErrorRecord};
use crate::weights::JumpProbabilities;

/// Saturation margin used unless a run asks for another.
pub const DEFAULT_SATURATION_MARGIN: f64 = 1e-4;

/// Per-run diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// `(step, sum of U)` at each observed step.
    pub mass_trace: Vec<(usize, f64)>,
    pub min_value_trace: Vec<f64>,
    pub negative_detected: bool,
    pub cfl_violated: bool,
    pub cfl_first_violation_step: Option<usize>,
    pub saturated: bool,
    pub saturation_first_step: Option<usize>,
    /// Smallest and largest right-jump probability seen, if any step ran.
    pub prob_extrema: Option<(f64, f64)>,
    pub fallback_events: BTreeMap<String, usize>,
    pub error_trace: Vec<ErrorRecord>,
    pub steps_completed: usize,
    pub realized_time: f64,
}

impl Default for RunReport {
    fn default() -> Self {
        Self {
            mass_trace: Vec::new(),
            min_value_trace: Vec::new(),
            negative_detected: false,
            cfl_violated: false,
            cfl_first_violation_step: None,
            saturated: false,
            saturation_first_step: None,
            prob_extrema: None,
            fallback_events: BTreeMap::new(),
            error_trace: Vec::new(),
            steps_completed: 0,
            realized_time: 0.0,
        }
    }
}

impl RunReport {
    pub fn record_fallback(&mut self, event: &str) {
        *self.fallback_events.entry(event.to_owned()).or_insert(0) += 1;
    }

    pub fn total_fallbacks(&self) -> usize {
        self.fallback_events.values().sum()
    }

    pub fn note_probabilities(&mut self, (lo, hi): (f64, f64)) {
        self.prob_extrema = Some(match self.prob_extrema {
            None => (lo, hi),
            Some((a, b)) => (a.min(lo), b.max(hi)),
        });
    }

    pub fn initial_mass(&self) -> Option<f64> {
        self.mass_trace.first().map(|m| m.1)
    }

    pub fn final_mass(&self) -> Option<f64> {
        self.mass_trace.last().map(|m| m.1)
    }

    /// Largest relative drift of the mass trace from its first entry.
    pub fn max_relative_mass_drift(&self) -> f64 {
        let Some(m0) = self.initial_mass() else {
            return 0.0;
        };
        self.mass_trace
            .iter()
            .map(|&(_, m)| (m - m0).abs() / m0.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Whether the advective speed `max |U|` outruns the grid speed `dx / dt`.
/// Intended for Burgers-type runs where the speed is the solution itself.
pub fn cfl_check(values: &[f64], dx: f64, dt: f64) -> bool {
    let speed = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    cfl_check_speed(speed, dx, dt)
}

pub fn cfl_check_speed(max_speed: f64, dx: f64, dt: f64) -> bool {
    max_speed * dt / dx > 1.0
}

/// Pre-run verdict from the larger of the initial supremum and the
/// supremum of the Dirichlet data over the run.
pub fn cfl_static_estimate(initial: &[f64], boundary_sup: f64, dx: f64, dt: f64) -> bool {
    let initial_sup = initial.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    cfl_check_speed(initial_sup.max(boundary_sup.abs()), dx, dt)
}

/// True when any right-jump probability leaves `[margin, 1 - margin]`.
pub fn prob_saturation(probs: &JumpProbabilities, margin: f64) -> bool {
    let (lo, hi) = probs.extrema();
    lo < margin || hi > 1.0 - margin
}

/// Appends the current mass and minimum value, flagging negative entries.
pub fn mass_and_positivity_observe(values: &[f64], report: &mut RunReport, step: usize) {
    let mass: f64 = values.iter().sum();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    report.mass_trace.push((step, mass));
    report.min_value_trace.push(min);
    if min < 0.0 {
        report.negative_detected = true;
    }
}

/// `sum |U|`.
pub fn l1_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v.abs()).sum()
}

/// Snapshot handed to observers after each step (and once for the
/// initial state, with `probs == None`).
#[derive(Debug, Clone, Copy)]
pub struct StepSample<'a> {
    pub step: usize,
    pub t: f64,
    pub dx: f64,
    pub dt: f64,
    /// The solution; for split runs this is `plus - minus`.
    pub values: &'a [f64],
    /// Whether `values` may legitimately be negative.
    pub signed: bool,
    pub coordinates: &'a [f64],
    /// Largest local advective speed `|2 beta D F|` on this field.
    pub max_speed: f64,
    /// Probabilities that produced this step.
    pub probs: Option<&'a JumpProbabilities>,
}

pub trait Observer {
    fn observe(&mut self, sample: &StepSample<'_>, report: &mut RunReport);
}

/// Mass trace and positivity audit.
#[derive(Debug, Default, Clone, Copy)]
pub struct MassObserver;

impl Observer for MassObserver {
    fn observe(&mut self, sample: &StepSample<'_>, report: &mut RunReport) {
        let negative_before = report.negative_detected;
        mass_and_positivity_observe(sample.values, report, sample.step);
        if sample.signed {
            report.negative_detected = negative_before;
        }
    }
}

/// CFL condition and jump-probability saturation.
#[derive(Debug, Clone, Copy)]
pub struct CflMonitor {
    pub margin: f64,
}

impl Default for CflMonitor {
    fn default() -> Self {
        Self {
            margin: DEFAULT_SATURATION_MARGIN,
        }
    }
}

impl Observer for CflMonitor {
    fn observe(&mut self, sample: &StepSample<'_>, report: &mut RunReport) {
        if cfl_check_speed(sample.max_speed, sample.dx, sample.dt) && !report.cfl_violated {
            report.cfl_violated = true;
            report.cfl_first_violation_step = Some(sample.step);
        }
        if let Some(p) = sample.probs {
            if prob_saturation(p, self.margin) && !report.saturated {
                report.saturated = true;
                report.saturation_first_step = Some(sample.step);
            }
        }
    }
}

/// L1 error against an exact solution at every observed step.
pub struct ErrorRecorder<F> {
    exact: F,
}

impl<F: Fn(f64, f64) -> f64> ErrorRecorder<F> {
    pub fn new(exact: F) -> Self {
        Self { exact }
    }
}

impl<F: Fn(f64, f64) -> f64> Observer for ErrorRecorder<F> {
    fn observe(&mut self, sample: &StepSample<'_>, report: &mut RunReport) {
        let exact: Vec<f64> = sample
            .coordinates
            .iter()
            .map(|&x| (self.exact)(x, sample.t))
            .collect();
        if let Ok(e) = l1_error(sample.values, &exact, sample.dx) {
            report.error_trace.push(ErrorRecord {
                dx: sample.dx,
                dt: sample.dt,
                t: sample.t,
                l1_error: e,
            });
        }
    }
}
