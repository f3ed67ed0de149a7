//! Drift term of the advection-diffusion equation and the potential
//! increments that feed the Boltzmann jump weights.
//!
//! The potential itself is never built; only its change across one lattice
//! spacing is needed, and that comes from a one- or two-node quadrature of
//! the force.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::Lattice;

type ForceFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceKind {
    /// `F(x, t)`, independent of the solution.
    Prescribed,
    /// `F(x, t, u)`, evaluated on the current field.
    StateDependent,
}

/// Force `F` together with the inverse temperature `beta` that scales it.
#[derive(Clone)]
pub struct ForceSpec {
    kind: ForceKind,
    beta: f64,
    description: String,
    evaluate: ForceFn,
}

impl fmt::Debug for ForceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForceSpec")
            .field("kind", &self.kind)
            .field("beta", &self.beta)
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::ConfigInvalid(format!("beta must be positive, got {beta}")))
    }
}

impl ForceSpec {
    pub fn prescribed<F>(beta: f64, description: impl Into<String>, force: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        check_beta(beta)?;
        Ok(Self {
            kind: ForceKind::Prescribed,
            beta,
            description: description.into(),
            evaluate: Arc::new(move |x, t, _u| force(x, t)),
        })
    }

    pub fn state_dependent<F>(beta: f64, description: impl Into<String>, force: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        check_beta(beta)?;
        Ok(Self {
            kind: ForceKind::StateDependent,
            beta,
            description: description.into(),
            evaluate: Arc::new(force),
        })
    }

    /// Pure diffusion preset (`"diffusion"`).
    pub fn zero(beta: f64) -> Result<Self> {
        Self::prescribed(beta, "diffusion", |_, _| 0.0)
    }

    /// Viscous Burgers preset (`"burgers"`): `F = u` with `beta = 1/(4 nu)`,
    /// to be paired with diffusivity `D = nu`.
    pub fn burgers(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::ConfigInvalid(format!("nu must be positive, got {nu}")));
        }
        Self::state_dependent(1.0 / (4.0 * nu), format!("burgers(nu={nu})"), |_, _, u| u)
    }

    /// Looks up a named preset. `"burgers"` reads `nu`; `"diffusion"` uses
    /// `beta = 1` since the force vanishes.
    pub fn preset(name: &str, nu: f64) -> Result<Self> {
        match name {
            "burgers" => Self::burgers(nu),
            "diffusion" => Self::zero(1.0),
            other => Err(Error::ConfigInvalid(format!("unknown force preset '{other}'"))),
        }
    }

    pub fn kind(&self) -> ForceKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    #[inline]
    pub fn eval(&self, x: f64, t: f64, u: f64) -> f64 {
        (self.evaluate)(x, t, u)
    }
}

/// Quadrature used for the potential increment across one spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    SinglePoint,
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

/// `F(x_i, t, U_i)` at every site. Prescribed forces ignore the field.
pub fn force_on_lattice(
    spec: &ForceSpec,
    lattice: &Lattice,
    t: f64,
    values: &[f64],
) -> Result<Vec<f64>> {
    if values.len() != lattice.n_sites() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: lattice.n_sites(),
        });
    }
    values
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let f = spec.eval(lattice.x(i as isize), t, u);
            if f.is_finite() {
                Ok(f)
            } else {
                Err(Error::NonFiniteForce { site: i })
            }
        })
        .collect()
}

/// Force values on the lattice plus whatever lies beyond its ends: ghost
/// values, or the opposite end on a ring.
#[derive(Debug, Clone, Copy)]
pub struct ForceStencil<'a> {
    pub values: &'a [f64],
    pub left_ghost: Option<f64>,
    pub right_ghost: Option<f64>,
    pub periodic: bool,
}

impl<'a> ForceStencil<'a> {
    pub fn interior(values: &'a [f64]) -> Self {
        Self {
            values,
            left_ghost: None,
            right_ghost: None,
            periodic: false,
        }
    }

    pub fn ring(values: &'a [f64]) -> Self {
        Self {
            periodic: true,
            ..Self::interior(values)
        }
    }

    /// Force at site `i`, with `-1` and `len` the ghost sites.
    pub fn get(&self, i: isize) -> Option<f64> {
        let n = self.values.len() as isize;
        if (0..n).contains(&i) {
            return Some(self.values[i as usize]);
        }
        if self.periodic {
            return Some(self.values[i.rem_euclid(n) as usize]);
        }
        if i == -1 {
            self.left_ghost
        } else if i == n {
            self.right_ghost
        } else {
            None
        }
    }

    /// `∫ F dx'` over the spacing to the right of (or left of) site `i`.
    pub fn increment(&self, i: isize, direction: Direction, dx: f64, rule: Quadrature) -> Result<f64> {
        let here = self.get(i).ok_or(Error::StencilOutOfRange { site: i })?;
        match rule {
            Quadrature::SinglePoint => Ok(dx * here),
            Quadrature::TwoPoint => {
                let j = match direction {
                    Direction::Right => i + 1,
                    Direction::Left => i - 1,
                };
                let there = self.get(j).ok_or(Error::StencilOutOfRange { site: j })?;
                Ok(0.5 * dx * (here + there))
            }
        }
    }
}

/// Potential increment across one spacing next to site `i`, using only the
/// given force values.
pub fn potential_increment(
    force_values: &[f64],
    i: usize,
    direction: Direction,
    dx: f64,
    rule: Quadrature,
) -> Result<f64> {
    ForceStencil::interior(force_values).increment(i as isize, direction, dx, rule)
}
