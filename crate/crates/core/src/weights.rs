//! Jump probabilities built from potential increments.
//!
//! The Boltzmann form restricts the equilibrium distribution in the local
//! potential to the two neighbouring sites, which reduces to a logistic
//! function of `beta` times the summed increments. It stays in `(0, 1)` for
//! every spacing. The linear form `(beta F dx + 1) / 2` has the same small-`dx`
//! limit but leaves `[0, 1]` once `beta |F| dx > 1`; it is kept so that
//! failure can be demonstrated.

use crate::error::{Error, Result};
use crate::force::{Direction, ForceStencil, Quadrature};

/// Weight rule selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightRule {
    /// Boltzmann weights with single-point quadrature at every site.
    Boltzmann1,
    /// Boltzmann weights with two-point quadrature wherever the stencil allows.
    #[default]
    Boltzmann2,
    /// Linear weight `(beta F dx + 1) / 2`, not clamped.
    Naive,
}

impl WeightRule {
    pub fn name(self) -> &'static str {
        match self {
            WeightRule::Boltzmann1 => "boltzmann1",
            WeightRule::Boltzmann2 => "boltzmann2",
            WeightRule::Naive => "naive",
        }
    }

    pub fn wants_two_point(self) -> bool {
        matches!(self, WeightRule::Boltzmann2)
    }
}

impl std::str::FromStr for WeightRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boltzmann1" => Ok(WeightRule::Boltzmann1),
            "boltzmann2" => Ok(WeightRule::Boltzmann2),
            "naive" => Ok(WeightRule::Naive),
            other => Err(Error::ConfigInvalid(format!("unknown weight rule '{other}'"))),
        }
    }
}

/// Per-site right/left jump probabilities, plus those of the ghost sites
/// when the boundary supplies any.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpProbabilities {
    pub p_right: Vec<f64>,
    pub p_left: Vec<f64>,
    /// `(p_right, p_left)` at the ghost site left of site 0.
    pub left_ghost: Option<(f64, f64)>,
    /// `(p_right, p_left)` at the ghost site right of the last site.
    pub right_ghost: Option<(f64, f64)>,
}

impl JumpProbabilities {
    pub fn uniform(n: usize) -> Self {
        Self {
            p_right: vec![0.5; n],
            p_left: vec![0.5; n],
            left_ghost: None,
            right_ghost: None,
        }
    }

    pub fn len(&self) -> usize {
        self.p_right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_right.is_empty()
    }

    /// Smallest and largest right-jump probability, ghosts included.
    pub fn extrema(&self) -> (f64, f64) {
        self.p_right
            .iter()
            .copied()
            .chain(self.left_ghost.map(|g| g.0))
            .chain(self.right_ghost.map(|g| g.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p), hi.max(p))
            })
    }
}

/// `1 / (1 + exp(-z))` without evaluating `exp` of a large positive number.
#[inline]
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Boltzmann `(p_right, p_left)` from the potential increments on either side.
#[inline]
pub fn boltzmann_from_increments(beta: f64, right: f64, left: f64) -> (f64, f64) {
    let z = beta * (right + left);
    (logistic(z), logistic(-z))
}

/// Single-point Boltzmann right-jump probability at site `i`.
pub fn boltzmann_single(force_values: &[f64], i: usize, dx: f64, beta: f64) -> f64 {
    logistic(2.0 * beta * dx * force_values[i])
}

/// Two-point Boltzmann right-jump probability at site `i`; needs both neighbours.
pub fn boltzmann_two_point(force_values: &[f64], i: usize, dx: f64, beta: f64) -> Result<f64> {
    let stencil = ForceStencil::interior(force_values);
    let i = i as isize;
    let right = stencil.increment(i, Direction::Right, dx, Quadrature::TwoPoint)?;
    let left = stencil.increment(i, Direction::Left, dx, Quadrature::TwoPoint)?;
    Ok(boltzmann_from_increments(beta, right, left).0)
}

/// Linear right-jump probability at site `i`, unclamped.
pub fn naive_linear(force_values: &[f64], i: usize, dx: f64, beta: f64) -> Result<f64> {
    let p = (beta * force_values[i] * dx + 1.0) / 2.0;
    check_unit(i as isize, p)
}

fn check_unit(site: isize, p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::ProbabilityOutOfRange { site, value: p })
    }
}

fn site_probabilities(
    stencil: &ForceStencil<'_>,
    i: isize,
    dx: f64,
    beta: f64,
    rule: WeightRule,
    quadrature: Quadrature,
) -> Result<(f64, f64)> {
    let right = stencil.increment(i, Direction::Right, dx, quadrature)?;
    let left = stencil.increment(i, Direction::Left, dx, quadrature)?;
    match rule {
        WeightRule::Naive => {
            let p = check_unit(i, (beta * (right + left) / 2.0 + 1.0) / 2.0)?;
            Ok((p, 1.0 - p))
        }
        WeightRule::Boltzmann1 | WeightRule::Boltzmann2 => {
            Ok(boltzmann_from_increments(beta, right, left))
        }
    }
}

/// Assembles per-site probabilities. `quadrature_per_site` fixes the rule at
/// each lattice site; ghost sites present in the stencil always use the
/// single-point rule since their outer neighbour is unknown.
pub fn build_jump_probabilities(
    stencil: &ForceStencil<'_>,
    dx: f64,
    beta: f64,
    rule: WeightRule,
    quadrature_per_site: &[Quadrature],
) -> Result<JumpProbabilities> {
    let n = stencil.values.len();
    if quadrature_per_site.len() != n {
        return Err(Error::LengthMismatch {
            left: quadrature_per_site.len(),
            right: n,
        });
    }
    let mut p_right = Vec::with_capacity(n);
    let mut p_left = Vec::with_capacity(n);
    for (i, &q) in quadrature_per_site.iter().enumerate() {
        let (r, l) = site_probabilities(stencil, i as isize, dx, beta, rule, q)?;
        p_right.push(r);
        p_left.push(l);
    }
    let ghost = |site: isize, force: Option<f64>| -> Result<Option<(f64, f64)>> {
        if stencil.periodic {
            return Ok(None);
        }
        force
            .map(|_| site_probabilities(stencil, site, dx, beta, rule, Quadrature::SinglePoint))
            .transpose()
    };
    Ok(JumpProbabilities {
        p_right,
        p_left,
        left_ghost: ghost(-1, stencil.left_ghost)?,
        right_ghost: ghost(n as isize, stencil.right_ghost)?,
    })
}
