//! One step of the master equation
//! `U(i, n) = P_r(i-1, n-1) U(i-1, n-1) + P_l(i+1, n-1) U(i+1, n-1)`,
//! with jump probabilities rebuilt from the step-`(n-1)` field every step.
//!
//! Mixed-sign data are carried as two non-negative parts moved by the same
//! probabilities, where the force is evaluated on their difference.

use std::borrow::Cow;
use std::fmt;

use crate::boundary::{
    dirichlet_apply, dirichlet_split, neumann_ghost_exp, neumann_ghost_fd, zero_flux_ghost,
    BoundaryCondition, BoundaryKind, Side,
};
use crate::diagnostics::{Observer, RunReport, StepSample};
use crate::error::{Error, Result};
use crate::force::{force_on_lattice, ForceKind, ForceSpec, ForceStencil, Quadrature};
use crate::lattice::{time_step_for, Field, GridOffset, Lattice, SignedField, TimeGrid};
use crate::weights::{build_jump_probabilities, JumpProbabilities, WeightRule};

/// Fallback event: exponential ghost below the floor, replaced by the fd ghost.
pub const EVENT_EXP_GHOST_FLOOR: &str = "exp_ghost_floor";
/// Fallback event: negative fd ghost on an unsplit run, clamped to zero.
pub const EVENT_NEGATIVE_GHOST_CLAMPED: &str = "negative_ghost_clamped";

/// Everything needed to advance a field.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    lattice: Lattice,
    time_grid: TimeGrid,
    force: ForceSpec,
    weights: WeightRule,
    left: BoundaryCondition,
    right: BoundaryCondition,
    split: bool,
    layout: Vec<Quadrature>,
}

impl SchemeConfig {
    pub fn new(
        lattice: Lattice,
        time_grid: TimeGrid,
        force: ForceSpec,
        weights: WeightRule,
        left: BoundaryCondition,
        right: BoundaryCondition,
        split: bool,
    ) -> Result<Self> {
        if left.side() != Side::Left || right.side() != Side::Right {
            return Err(Error::ConfigInvalid(
                "boundary conditions must be given as (left, right)".into(),
            ));
        }
        let periodic = [left.kind(), right.kind()].map(|k| k == BoundaryKind::Periodic);
        if periodic[0] != periodic[1] {
            return Err(Error::ConfigInvalid(
                "periodic boundaries must be set on both sides".into(),
            ));
        }
        for bc in [&left, &right] {
            let expected = match bc.kind() {
                BoundaryKind::Dirichlet => Some(GridOffset::NodeCentered),
                k if k.is_neumann() => Some(GridOffset::CellCentered),
                _ => None,
            };
            if let Some(offset) = expected {
                if lattice.offset() != offset {
                    return Err(Error::ConfigInvalid(format!(
                        "{:?} boundary on the {} side needs a {:?} lattice",
                        bc.kind(),
                        bc.side().name(),
                        offset
                    )));
                }
            }
        }
        let expected_dt = time_step_for(lattice.dx(), time_grid.diffusivity());
        if (time_grid.dt() - expected_dt).abs() > 1e-15 * expected_dt {
            return Err(Error::ConfigInvalid(format!(
                "dt = {} does not match dx^2/(2D) = {expected_dt}",
                time_grid.dt()
            )));
        }

        let n = lattice.n_sites();
        let mut layout = vec![Quadrature::SinglePoint; n];
        if weights.wants_two_point() {
            layout.fill(Quadrature::TwoPoint);
            // Dirichlet sites have no outer neighbour to feed the two-point rule.
            if left.kind() == BoundaryKind::Dirichlet {
                layout[0] = Quadrature::SinglePoint;
            }
            if right.kind() == BoundaryKind::Dirichlet {
                layout[n - 1] = Quadrature::SinglePoint;
            }
        }

        Ok(Self {
            lattice,
            time_grid,
            force,
            weights,
            left,
            right,
            split,
            layout,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn force(&self) -> &ForceSpec {
        &self.force
    }

    pub fn weights(&self) -> WeightRule {
        self.weights
    }

    pub fn boundaries(&self) -> (&BoundaryCondition, &BoundaryCondition) {
        (&self.left, &self.right)
    }

    pub fn split(&self) -> bool {
        self.split
    }

    pub fn with_split(mut self, split: bool) -> Self {
        self.split = split;
        self
    }

    /// Quadrature rule used at each lattice site.
    pub fn layout(&self) -> &[Quadrature] {
        &self.layout
    }

    pub fn is_periodic(&self) -> bool {
        self.left.kind() == BoundaryKind::Periodic
    }

    pub fn dt(&self) -> f64 {
        self.time_grid.dt()
    }

    /// Largest local advective speed `|2 beta D F|` on `values` at time `t`.
    pub fn max_speed(&self, values: &[f64], t: f64) -> Result<f64> {
        let scale = 2.0 * self.force.beta() * self.time_grid.diffusivity();
        let f = force_on_lattice(&self.force, &self.lattice, t, values)?;
        Ok(f.iter().fold(0.0f64, |m, v| m.max((scale * v).abs())))
    }
}

/// Solution state: a plain non-negative field or a split signed one.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Plain(Field),
    Split(SignedField),
}

impl State {
    /// The solution values (`plus - minus` when split).
    pub fn values(&self) -> Cow<'_, [f64]> {
        match self {
            State::Plain(f) => Cow::Borrowed(f.values()),
            State::Split(s) => Cow::Owned(s.difference()),
        }
    }

    pub fn time_index(&self) -> usize {
        match self {
            State::Plain(f) => f.time_index(),
            State::Split(s) => s.time_index(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            State::Plain(f) => f.len(),
            State::Split(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_split(&self) -> bool {
        matches!(self, State::Split(_))
    }
}

struct StepOutput {
    components: Vec<Vec<f64>>,
    probs: JumpProbabilities,
    events: Vec<&'static str>,
}

fn edge(side: Side, n: usize) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => n - 1,
    }
}

fn ghost_coordinate(lattice: &Lattice, side: Side) -> f64 {
    match side {
        Side::Left => lattice.x(-1),
        Side::Right => lattice.x(lattice.n_sites() as isize),
    }
}

/// Source-field ghost for a Neumann side.
fn neumann_ghost(
    bc: &BoundaryCondition,
    boundary_value: f64,
    t: f64,
    dx: f64,
    signed: bool,
    events: &mut Vec<&'static str>,
) -> Result<f64> {
    let b = bc.value_at(t)?;
    let fd = neumann_ghost_fd(boundary_value, b, dx, bc.side());
    let mut ghost = match bc.kind() {
        BoundaryKind::NeumannExp => match neumann_ghost_exp(boundary_value, b, dx, bc.side()) {
            Ok(g) => g,
            Err(_) => {
                events.push(EVENT_EXP_GHOST_FLOOR);
                if signed {
                    fd
                } else {
                    fd.max(0.0)
                }
            }
        },
        _ => fd,
    };
    if ghost < 0.0 && !signed {
        events.push(EVENT_NEGATIVE_GHOST_CLAMPED);
        ghost = 0.0;
    }
    Ok(ghost)
}

/// Advances one or two components from step `n - 1` to `n`. With two
/// components the force sees `comps[0] - comps[1]` and boundary data are
/// split into non-negative parts. `signed` allows negative values in the
/// single-component case.
fn advance(config: &SchemeConfig, comps: &[&[f64]], signed: bool, n: usize) -> Result<StepOutput> {
    let lattice = &config.lattice;
    let sites = lattice.n_sites();
    for c in comps {
        if c.len() != sites {
            return Err(Error::LengthMismatch {
                left: c.len(),
                right: sites,
            });
        }
    }
    let pair = comps.len() == 2;
    let signed = signed || pair;
    let dx = lattice.dx();
    let dt = config.dt();
    let t_prev = (n - 1) as f64 * dt;
    let t_new = n as f64 * dt;

    let source: Cow<'_, [f64]> = if pair {
        Cow::Owned(comps[0].iter().zip(comps[1]).map(|(p, m)| p - m).collect())
    } else {
        Cow::Borrowed(comps[0])
    };
    let forces = force_on_lattice(&config.force, lattice, t_prev, &source)?;

    let mut events = Vec::new();
    let mut ghost_force = [None, None];
    let mut ghost_source = [None, None];
    for (k, bc) in [&config.left, &config.right].into_iter().enumerate() {
        let e = edge(bc.side(), sites);
        let xg = ghost_coordinate(lattice, bc.side());
        match bc.kind() {
            kind if kind.is_neumann() => {
                let g = neumann_ghost(bc, source[e], t_prev, dx, signed, &mut events)?;
                ghost_source[k] = Some(g);
                ghost_force[k] = Some(config.force.eval(xg, t_prev, g));
            }
            BoundaryKind::ZeroFlux => {
                // The ghost value depends on its own probability, so a
                // state-dependent force borrows the adjacent site's value.
                ghost_force[k] = Some(match config.force.kind() {
                    ForceKind::Prescribed => config.force.eval(xg, t_prev, 0.0),
                    ForceKind::StateDependent => forces[e],
                });
            }
            _ => {}
        }
        if let Some(f) = ghost_force[k] {
            if !f.is_finite() {
                return Err(Error::NonFiniteForce { site: e });
            }
        }
    }

    let stencil = ForceStencil {
        values: &forces,
        left_ghost: ghost_force[0],
        right_ghost: ghost_force[1],
        periodic: config.is_periodic(),
    };
    let probs = build_jump_probabilities(
        &stencil,
        dx,
        config.force.beta(),
        config.weights,
        &config.layout,
    )?;

    let boundary_data = [
        match config.left.kind() {
            BoundaryKind::Dirichlet => Some(config.left.value_at(t_new)?),
            _ => None,
        },
        match config.right.kind() {
            BoundaryKind::Dirichlet => Some(config.right.value_at(t_new)?),
            _ => None,
        },
    ];
    if !signed {
        for a in boundary_data.into_iter().flatten() {
            if a < 0.0 {
                return Err(Error::NegativeDirichletOnUnsplitRun { value: a });
            }
        }
    }

    let mut components = Vec::with_capacity(comps.len());
    for (ci, c) in comps.iter().enumerate() {
        let part = |v: f64| -> f64 {
            if !pair {
                v
            } else if ci == 0 {
                dirichlet_split(v).0
            } else {
                dirichlet_split(v).1
            }
        };
        // (value, right-jump probability) just left of site 0 and
        // (value, left-jump probability) just right of the last site.
        let outer = |bc: &BoundaryCondition, k: usize| -> Result<(f64, f64)> {
            let e = edge(bc.side(), sites);
            let (ghost_right, ghost_left) = match bc.side() {
                Side::Left => probs.left_ghost.unwrap_or((0.0, 0.0)),
                Side::Right => probs.right_ghost.unwrap_or((0.0, 0.0)),
            };
            let toward_domain = match bc.side() {
                Side::Left => ghost_right,
                Side::Right => ghost_left,
            };
            Ok(match bc.kind() {
                BoundaryKind::Periodic => match bc.side() {
                    Side::Left => (c[sites - 1], probs.p_right[sites - 1]),
                    Side::Right => (c[0], probs.p_left[0]),
                },
                kind if kind.is_neumann() => (part(ghost_source[k].unwrap_or(0.0)), toward_domain),
                BoundaryKind::ZeroFlux => {
                    let away = match bc.side() {
                        Side::Left => probs.p_left[e],
                        Side::Right => probs.p_right[e],
                    };
                    (zero_flux_ghost(c[e], away, toward_domain), toward_domain)
                }
                _ => (0.0, 0.0),
            })
        };
        let (left_value, left_jump) = outer(&config.left, 0)?;
        let (right_value, right_jump) = outer(&config.right, 1)?;

        let mut next = vec![0.0; sites];
        for (i, slot) in next.iter_mut().enumerate() {
            let from_left = if i == 0 {
                left_jump * left_value
            } else {
                probs.p_right[i - 1] * c[i - 1]
            };
            let from_right = if i == sites - 1 {
                right_jump * right_value
            } else {
                probs.p_left[i + 1] * c[i + 1]
            };
            *slot = from_left + from_right;
        }
        if let Some(a) = boundary_data[0] {
            dirichlet_apply(&mut next, Side::Left, part(a), true)?;
        }
        if let Some(a) = boundary_data[1] {
            dirichlet_apply(&mut next, Side::Right, part(a), true)?;
        }
        if let Some(site) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField { site, step: n });
        }
        components.push(next);
    }

    Ok(StepOutput {
        components,
        probs,
        events,
    })
}

/// Advances a non-negative field from step `n - 1` to step `n`.
pub fn step(field: &Field, config: &SchemeConfig, n: usize) -> Result<Field> {
    check_step_index(n)?;
    let mut out = advance(config, &[field.values()], false, n)?;
    Field::new(out.components.remove(0), n)
}

/// Advances both parts of a split field with shared probabilities.
pub fn step_split(sf: &SignedField, config: &SchemeConfig, n: usize) -> Result<SignedField> {
    check_step_index(n)?;
    let out = advance(config, &[sf.plus().values(), sf.minus().values()], true, n)?;
    let mut parts = out.components.into_iter();
    let plus = Field::new(parts.next().unwrap_or_default(), n)?;
    let minus = Field::new(parts.next().unwrap_or_default(), n)?;
    SignedField::new(plus, minus)
}

/// The unsplit update applied directly to values of either sign.
pub fn step_signed(values: &[f64], config: &SchemeConfig, n: usize) -> Result<Vec<f64>> {
    check_step_index(n)?;
    let mut out = advance(config, &[values], true, n)?;
    Ok(out.components.remove(0))
}

/// Jump probabilities the scheme would use to leave the given state at step `n`.
pub fn jump_probabilities_at(values: &[f64], config: &SchemeConfig, n: usize) -> Result<JumpProbabilities> {
    Ok(advance(config, &[values], true, n + 1)?.probs)
}

fn check_step_index(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::ConfigInvalid("step index must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Splits raw initial data: non-negative data stay a plain field, mixed
/// signs become a split field. No normalisation is applied, so the scale is
/// always 1.
pub fn rescale_initial(raw: &[f64]) -> Result<(State, f64)> {
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidField("initial data must be finite".into()));
    }
    let state = if raw.iter().all(|&v| v >= 0.0) {
        State::Plain(Field::new(raw.to_vec(), 0)?)
    } else {
        State::Split(SignedField::from_signed(raw, 0)?)
    };
    Ok((state, 1.0))
}

/// Final state and diagnostics of a completed run.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: State,
    pub report: RunReport,
}

/// A run stopped early, with what it had produced so far.
#[derive(Debug, Clone)]
pub struct Aborted {
    pub error: Error,
    pub state: State,
    pub report: RunReport,
}

impl fmt::Display for Aborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "run aborted after {} steps: {}",
            self.report.steps_completed, self.error
        )
    }
}

impl std::error::Error for Aborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Brings the initial state in line with the configuration: promotes plain
/// fields on split runs and pins Dirichlet sites to their `t = 0` data.
fn prepare_initial(initial: State, config: &SchemeConfig) -> Result<State> {
    if initial.len() != config.lattice.n_sites() {
        return Err(Error::LengthMismatch {
            left: initial.len(),
            right: config.lattice.n_sites(),
        });
    }
    let state = match initial {
        State::Plain(f) if config.split => {
            let zeros = Field::new(vec![0.0; f.len()], f.time_index())?;
            State::Split(SignedField::new(f, zeros)?)
        }
        State::Split(_) if !config.split => {
            return Err(Error::ConfigInvalid(
                "mixed-sign initial data need a split run".into(),
            ))
        }
        other => other,
    };
    let dirichlet: Vec<(Side, f64)> = [&config.left, &config.right]
        .into_iter()
        .filter(|bc| bc.kind() == BoundaryKind::Dirichlet)
        .map(|bc| Ok((bc.side(), bc.value_at(0.0)?)))
        .collect::<Result<_>>()?;
    if dirichlet.is_empty() {
        return Ok(state);
    }
    Ok(match state {
        State::Plain(f) => {
            let t = f.time_index();
            let mut v = f.into_values();
            for (side, a) in dirichlet {
                dirichlet_apply(&mut v, side, a, false)?;
            }
            State::Plain(Field::new(v, t)?)
        }
        State::Split(s) => {
            let t = s.time_index();
            let mut p = s.plus().values().to_vec();
            let mut m = s.minus().values().to_vec();
            for (side, a) in dirichlet {
                let (ap, am) = dirichlet_split(a);
                dirichlet_apply(&mut p, side, ap, true)?;
                dirichlet_apply(&mut m, side, am, true)?;
            }
            State::Split(SignedField::new(Field::new(p, t)?, Field::new(m, t)?)?)
        }
    })
}

fn notify(
    observers: &mut [&mut dyn Observer],
    config: &SchemeConfig,
    coords: &[f64],
    state: &State,
    probs: Option<&JumpProbabilities>,
    report: &mut RunReport,
) -> Result<()> {
    if observers.is_empty() {
        return Ok(());
    }
    let step = state.time_index();
    let t = step as f64 * config.dt();
    let values = state.values();
    let sample = StepSample {
        step,
        t,
        dx: config.lattice.dx(),
        dt: config.dt(),
        values: &values,
        signed: state.is_split(),
        coordinates: coords,
        max_speed: config.max_speed(&values, t)?,
        probs,
    };
    for o in observers.iter_mut() {
        o.observe(&sample, report);
    }
    Ok(())
}

/// Runs `n_steps` steps, calling every observer on the initial state and
/// after each step.
pub fn evolve(
    initial: State,
    config: &SchemeConfig,
    n_steps: usize,
    observers: &mut [&mut dyn Observer],
) -> std::result::Result<Evolution, Aborted> {
    evolve_thinned(initial, config, n_steps, observers, 1)
}

/// As [`evolve`], but observers only see every `every`-th step (and the
/// last one).
pub fn evolve_thinned(
    initial: State,
    config: &SchemeConfig,
    n_steps: usize,
    observers: &mut [&mut dyn Observer],
    every: usize,
) -> std::result::Result<Evolution, Aborted> {
    let every = every.max(1);
    let mut report = RunReport::default();
    let fallback = initial.clone();
    let mut state = match prepare_initial(initial, config) {
        Ok(s) => s,
        Err(error) => {
            return Err(Aborted {
                error,
                state: fallback,
                report,
            })
        }
    };
    let start = state.time_index();
    let coords = config.lattice.coordinates();
    if let Err(error) = notify(observers, config, &coords, &state, None, &mut report) {
        return Err(Aborted {
            error,
            state,
            report,
        });
    }

    for k in 1..=n_steps {
        let n = start + k;
        let outcome = match &state {
            State::Plain(f) => advance(config, &[f.values()], false, n),
            State::Split(s) => advance(config, &[s.plus().values(), s.minus().values()], true, n),
        };
        let result = outcome.and_then(|out| {
            for e in &out.events {
                report.record_fallback(e);
            }
            report.note_probabilities(out.probs.extrema());
            let mut parts = out.components.into_iter();
            let next = match state {
                State::Plain(_) => State::Plain(Field::new(parts.next().unwrap_or_default(), n)?),
                State::Split(_) => State::Split(SignedField::new(
                    Field::new(parts.next().unwrap_or_default(), n)?,
                    Field::new(parts.next().unwrap_or_default(), n)?,
                )?),
            };
            Ok((next, out.probs))
        });
        match result {
            Ok((next, probs)) => {
                state = next;
                report.steps_completed = k;
                report.realized_time = n as f64 * config.dt();
                if k % every == 0 || k == n_steps {
                    if let Err(error) =
                        notify(observers, config, &coords, &state, Some(&probs), &mut report)
                    {
                        return Err(Aborted {
                            error,
                            state,
                            report,
                        });
                    }
                }
            }
            Err(error) => {
                return Err(Aborted {
                    error,
                    state,
                    report,
                })
            }
        }
    }
    report.realized_time = (start + n_steps) as f64 * config.dt();
    Ok(Evolution { state, report })
}
