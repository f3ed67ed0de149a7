//! Space-time grid and the field containers evolved on it.
//!
//! The spatial spacing fixes the time step through the diffusion-limit
//! relation `dt = dx^2 / (2 D)`, so a run is parameterised by `dx` alone once
//! the diffusivity is known.

use crate::error::{Error, Result};

/// Relative tolerance when deciding whether `dx` divides the domain.
const COMMENSURATE_TOL: f64 = 1e-9;
/// Relative tolerance when deciding whether a time is a multiple of `dt`.
const STEP_TOL: f64 = 1e-9;

/// Where lattice sites sit relative to the domain end points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridOffset {
    /// Site `i` at `x_min + i dx`; both end points are sites.
    #[default]
    NodeCentered,
    /// Site `i` (1-based) at `x_min + (i - 1/2) dx`; end points fall between sites.
    CellCentered,
}

/// Uniform 1-D lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    x_min: f64,
    x_max: f64,
    dx: f64,
    n_sites: usize,
    offset: GridOffset,
}

impl Lattice {
    /// Builds a lattice on `[x_min, x_max]`, rejecting spacings that do not
    /// divide the domain.
    pub fn new(x_min: f64, x_max: f64, dx: f64, offset: GridOffset) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && dx.is_finite()) {
            return Err(Error::InvalidLattice("non-finite lattice parameter".into()));
        }
        if x_max <= x_min {
            return Err(Error::InvalidLattice(format!(
                "x_max ({x_max}) must exceed x_min ({x_min})"
            )));
        }
        if dx <= 0.0 {
            return Err(Error::InvalidLattice(format!("dx must be positive, got {dx}")));
        }
        let intervals = (x_max - x_min) / dx;
        let rounded = intervals.round();
        if rounded < 1.0 || (intervals - rounded).abs() > COMMENSURATE_TOL * intervals {
            return Err(Error::NonCommensurateDomain { x_min, x_max, dx });
        }
        let intervals = rounded as usize;
        let n_sites = match offset {
            GridOffset::NodeCentered => intervals + 1,
            GridOffset::CellCentered => intervals,
        };
        Self::from_parts(x_min, x_max, dx, n_sites, offset)
    }

    /// Periodic ring of `period / dx` distinct node-centred sites starting at
    /// `x_min`. The site at `x_min + period` is identified with site 0 and is
    /// not stored.
    pub fn ring(x_min: f64, period: f64, dx: f64) -> Result<Self> {
        let full = Self::new(x_min, x_min + period, dx, GridOffset::NodeCentered)?;
        let n_sites = full.n_sites - 1;
        Self::from_parts(x_min, x_min + period - dx, dx, n_sites, GridOffset::NodeCentered)
    }

    fn from_parts(
        x_min: f64,
        x_max: f64,
        dx: f64,
        n_sites: usize,
        offset: GridOffset,
    ) -> Result<Self> {
        if n_sites < 3 {
            return Err(Error::InvalidLattice(format!(
                "lattice needs at least 3 sites, got {n_sites}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            dx,
            n_sites,
            offset,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn offset(&self) -> GridOffset {
        self.offset
    }

    /// Coordinate of site `i` (0-based). Negative indices and indices past
    /// the end give ghost-site coordinates.
    pub fn x(&self, i: isize) -> f64 {
        let shift = match self.offset {
            GridOffset::NodeCentered => 0.0,
            GridOffset::CellCentered => 0.5,
        };
        self.x_min + (i as f64 + shift) * self.dx
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_sites as isize).map(|i| self.x(i)).collect()
    }
}

/// Time step tied to `dx` by the diffusion limit.
pub fn time_step_for(dx: f64, diffusivity: f64) -> f64 {
    debug_assert!(dx > 0.0 && diffusivity > 0.0);
    dx * dx / (2.0 * diffusivity)
}

/// Temporal grid of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    diffusivity: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(dx: f64, diffusivity: f64, n_steps: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::ConfigInvalid(format!("dx must be positive, got {dx}")));
        }
        if !(diffusivity > 0.0 && diffusivity.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "diffusivity must be positive, got {diffusivity}"
            )));
        }
        Ok(Self {
            dt: time_step_for(dx, diffusivity),
            diffusivity,
            n_steps,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn with_steps(self, n_steps: usize) -> Self {
        Self { n_steps, ..self }
    }
}

/// Number of steps needed to reach a target time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCount {
    pub n_steps: usize,
    /// `n_steps * dt`; differs from the target only when snapping.
    pub realized_time: f64,
    pub snapped: bool,
}

pub fn steps_to_time(target_t: f64, dt: f64, snap: bool) -> Result<StepCount> {
    if !(target_t >= 0.0 && dt > 0.0 && target_t.is_finite() && dt.is_finite()) {
        return Err(Error::ConfigInvalid(format!(
            "need target_t >= 0 and dt > 0, got {target_t} and {dt}"
        )));
    }
    let ratio = target_t / dt;
    let rounded = ratio.round();
    let exact = (ratio - rounded).abs() <= STEP_TOL * ratio.max(1.0);
    if !exact && !snap {
        return Err(Error::TimeNotReachable { target: target_t, dt });
    }
    let n_steps = rounded as usize;
    Ok(StepCount {
        n_steps,
        realized_time: if exact { target_t } else { n_steps as f64 * dt },
        snapped: !exact,
    })
}

/// Non-negative density on the lattice at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    time_index: usize,
}

impl Field {
    pub fn new(values: Vec<f64>, time_index: usize) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidField(format!(
                "value {v} at site {i} is negative or non-finite"
            )));
        }
        Ok(Self { values, time_index })
    }

    pub fn zeros(n_sites: usize) -> Self {
        Self {
            values: vec![0.0; n_sites],
            time_index: 0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Mixed-sign solution held as the difference of two non-negative fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedField {
    plus: Field,
    minus: Field,
}

impl SignedField {
    pub fn new(plus: Field, minus: Field) -> Result<Self> {
        if plus.len() != minus.len() {
            return Err(Error::LengthMismatch {
                left: plus.len(),
                right: minus.len(),
            });
        }
        if plus.time_index != minus.time_index {
            return Err(Error::InvalidField(format!(
                "components at different time levels ({} vs {})",
                plus.time_index, minus.time_index
            )));
        }
        Ok(Self { plus, minus })
    }

    /// Splits signed values into positive and negative parts.
    pub fn from_signed(values: &[f64], time_index: usize) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite value".into()));
        }
        let plus = values.iter().map(|v| v.max(0.0)).collect();
        let minus = values.iter().map(|v| (-v).max(0.0)).collect();
        Self::new(Field::new(plus, time_index)?, Field::new(minus, time_index)?)
    }

    pub fn plus(&self) -> &Field {
        &self.plus
    }

    pub fn minus(&self) -> &Field {
        &self.minus
    }

    pub fn time_index(&self) -> usize {
        self.plus.time_index
    }

    pub fn len(&self) -> usize {
        self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }

    /// `plus - minus`, the solution being approximated.
    pub fn difference(&self) -> Vec<f64> {
        self.plus
            .values
            .iter()
            .zip(&self.minus.values)
            .map(|(p, m)| p - m)
            .collect()
    }
}
