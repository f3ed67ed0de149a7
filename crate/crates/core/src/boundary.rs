//! Boundary conditions that keep the underlying walk a valid stochastic
//! process.
//!
//! Dirichlet values are written straight into the boundary sites. Neumann
//! and zero-flux conditions go through a ghost site beyond the last lattice
//! site; periodic conditions wrap indices around the ring. Ghost sites always
//! use single-point-quadrature probabilities.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::weights::JumpProbabilities;

/// Below this boundary value the exponential ghost is not evaluated.
pub const GHOST_FLOOR: f64 = 1e-300;

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// How a Neumann ghost value is built from the adjacent boundary value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GhostRule {
    /// `U(L+1) = U(L) + dx b`.
    Fd,
    /// `U(L+1) = U(L) exp(dx b / U(L))`.
    #[default]
    Exp,
}

impl std::str::FromStr for GhostRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fd" => Ok(GhostRule::Fd),
            "exp" => Ok(GhostRule::Exp),
            other => Err(Error::ConfigInvalid(format!("unknown ghost rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    NeumannFd,
    NeumannExp,
    Periodic,
    ZeroFlux,
}

impl BoundaryKind {
    pub fn is_neumann(self) -> bool {
        matches!(self, BoundaryKind::NeumannFd | BoundaryKind::NeumannExp)
    }

    /// Whether this side is handled through a ghost site.
    pub fn uses_ghost(self) -> bool {
        self.is_neumann() || self == BoundaryKind::ZeroFlux
    }
}

/// One side's boundary condition. `value_fn` is `a(t)` for Dirichlet and
/// `b(t) = u_x` for Neumann; periodic and zero-flux ignore it.
#[derive(Clone)]
pub struct BoundaryCondition {
    side: Side,
    kind: BoundaryKind,
    value_fn: Option<TimeFn>,
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryCondition")
            .field("side", &self.side)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

impl BoundaryCondition {
    pub fn dirichlet<F>(side: Side, a: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            side,
            kind: BoundaryKind::Dirichlet,
            value_fn: Some(Arc::new(a)),
        }
    }

    pub fn neumann<F>(side: Side, rule: GhostRule, b: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let kind = match rule {
            GhostRule::Fd => BoundaryKind::NeumannFd,
            GhostRule::Exp => BoundaryKind::NeumannExp,
        };
        Self {
            side,
            kind,
            value_fn: Some(Arc::new(b)),
        }
    }

    pub fn periodic(side: Side) -> Self {
        Self {
            side,
            kind: BoundaryKind::Periodic,
            value_fn: None,
        }
    }

    pub fn zero_flux(side: Side) -> Self {
        Self {
            side,
            kind: BoundaryKind::ZeroFlux,
            value_fn: None,
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    /// Boundary data at time `t`; zero for kinds without data.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        match &self.value_fn {
            None => Ok(0.0),
            Some(f) => {
                let v = f(t);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::ConfigInvalid(format!(
                        "{} boundary data is non-finite at t = {t}",
                        self.side.name()
                    )))
                }
            }
        }
    }
}

/// Value and force at a ghost site for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostState {
    pub ghost_value: f64,
    pub ghost_force: f64,
}

/// Pins the boundary site on `side` to `a_t`.
pub fn dirichlet_apply(values: &mut [f64], side: Side, a_t: f64, split: bool) -> Result<()> {
    if a_t < 0.0 && !split {
        return Err(Error::NegativeDirichletOnUnsplitRun { value: a_t });
    }
    let idx = match side {
        Side::Left => 0,
        Side::Right => values.len() - 1,
    };
    values[idx] = a_t;
    Ok(())
}

/// Splits Dirichlet data into non-negative `(plus, minus)` parts.
pub fn dirichlet_split(a_t: f64) -> (f64, f64) {
    (a_t.max(0.0), (-a_t).max(0.0))
}

/// Ghost value from the one-sided difference `(U(L+1) - U(L)) / dx = b`,
/// with the sign mirrored on the left side. May be negative.
pub fn neumann_ghost_fd(boundary_value: f64, b_t: f64, dx: f64, side: Side) -> f64 {
    match side {
        Side::Right => boundary_value + dx * b_t,
        Side::Left => boundary_value - dx * b_t,
    }
}

/// Ghost value `U(L) exp(dx b / U(L))`, positive whenever `U(L)` is.
/// Boundary values below [`GHOST_FLOOR`] in magnitude and exponents that
/// overflow are reported as [`Error::DegenerateGhost`].
pub fn neumann_ghost_exp(boundary_value: f64, b_t: f64, dx: f64, side: Side) -> Result<f64> {
    if boundary_value.abs() < GHOST_FLOOR {
        return Err(Error::DegenerateGhost {
            value: boundary_value,
        });
    }
    let slope = match side {
        Side::Right => b_t,
        Side::Left => -b_t,
    };
    let ghost = boundary_value * (dx * slope / boundary_value).exp();
    if ghost.is_finite() {
        Ok(ghost)
    } else {
        Err(Error::DegenerateGhost {
            value: boundary_value,
        })
    }
}

/// Ghost values that make the boundary flux vanish, so lattice mass is
/// conserved exactly:
/// `U(0) = P_l(1)/P_r(0) U(1)` and `U(M+1) = P_r(M)/P_l(M+1) U(M)`.
pub fn zero_flux_ghosts(values: &[f64], probs: &JumpProbabilities) -> Result<(f64, f64)> {
    let n = values.len();
    if probs.len() != n {
        return Err(Error::LengthMismatch {
            left: probs.len(),
            right: n,
        });
    }
    let (ghost_right_jump, _) = probs
        .left_ghost
        .ok_or(Error::MissingGhostProbability("left"))?;
    let (_, ghost_left_jump) = probs
        .right_ghost
        .ok_or(Error::MissingGhostProbability("right"))?;
    Ok((
        zero_flux_ghost(values[0], probs.p_left[0], ghost_right_jump),
        zero_flux_ghost(values[n - 1], probs.p_right[n - 1], ghost_left_jump),
    ))
}

/// Single-side zero-flux ghost: `outgoing / incoming * boundary_value`.
pub fn zero_flux_ghost(boundary_value: f64, outgoing: f64, incoming: f64) -> f64 {
    if boundary_value == 0.0 {
        0.0
    } else {
        outgoing / incoming * boundary_value
    }
}

/// Neighbour values across the seam of a periodic ring:
/// `(left of site 0, right of the last site)`.
pub fn periodic_wrap(values: &[f64]) -> (f64, f64) {
    (values[values.len() - 1], values[0])
}

/// Ring index of a possibly out-of-range site.
#[inline]
pub fn ring_index(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn dirichlet_examples() {
        let nu = 0.45;
        let c = -3.0;
        let a = |t: f64| 1.0 + 2.0 * nu * (t + c).tanh();
        let mut u = vec![1.0; 4];
        dirichlet_apply(&mut u, Side::Left, a(0.0), false).unwrap();
        assert_relative_eq!(u[0], 0.104451, epsilon = 1e-6);
        assert_eq!(&u[1..], &[1.0, 1.0, 1.0]);
        dirichlet_apply(&mut u, Side::Right, 0.0, false).unwrap();
        assert_eq!(u[3], 0.0);
        assert_eq!(
            dirichlet_apply(&mut u, Side::Right, -2.0, false),
            Err(Error::NegativeDirichletOnUnsplitRun { value: -2.0 })
        );
        dirichlet_apply(&mut u, Side::Right, -2.0, true).unwrap();
        assert_eq!(u[3], -2.0);
    }

    #[test]
    fn dirichlet_split_examples() {
        assert_eq!(dirichlet_split(-2.0), (0.0, 2.0));
        assert_eq!(dirichlet_split(3.0), (3.0, 0.0));
        assert_eq!(dirichlet_split(0.0), (0.0, 0.0));
    }

    #[test]
    fn fd_ghost_examples() {
        assert_eq!(neumann_ghost_fd(1.0, 2.0, 0.5, Side::Right), 2.0);
        assert_eq!(neumann_ghost_fd(1.0, 0.0, 0.37, Side::Right), 1.0);
        assert_relative_eq!(neumann_ghost_fd(0.1, -1.0, 0.5, Side::Right), -0.4, max_relative = 1e-14);
        // left side: U(0) = U(1) - dx b
        assert_eq!(neumann_ghost_fd(1.0, 2.0, 0.5, Side::Left), 0.0);
    }

    #[test]
    fn exp_ghost_examples() {
        assert_relative_eq!(
            neumann_ghost_exp(1.0, 2.0, 0.5, Side::Right).unwrap(),
            std::f64::consts::E,
            max_relative = 1e-15
        );
        assert_eq!(neumann_ghost_exp(1.0, 0.0, 0.37, Side::Right).unwrap(), 1.0);
        let small = neumann_ghost_exp(0.1, -1.0, 0.5, Side::Right).unwrap();
        assert_relative_eq!(small, 0.1 * (-5.0f64).exp(), max_relative = 1e-14);
        assert!(small > 0.0);
        assert_relative_eq!(small, 0.000674, epsilon = 1e-6);
        assert_relative_eq!(
            neumann_ghost_exp(1.0, 2.0, 0.5, Side::Left).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert!(matches!(
            neumann_ghost_exp(0.0, 1.0, 0.5, Side::Right),
            Err(Error::DegenerateGhost { .. })
        ));
        assert!(matches!(
            neumann_ghost_exp(1e-10, 1.0, 0.5, Side::Right),
            Err(Error::DegenerateGhost { .. })
        ));
    }

    #[test]
    fn zero_flux_examples() {
        let sym = JumpProbabilities {
            left_ghost: Some((0.5, 0.5)),
            right_ghost: Some((0.5, 0.5)),
            ..JumpProbabilities::uniform(3)
        };
        assert_eq!(zero_flux_ghosts(&[2.0, 5.0, 7.0], &sym).unwrap(), (2.0, 7.0));
        assert_eq!(zero_flux_ghosts(&[0.0; 3], &sym).unwrap(), (0.0, 0.0));

        let mut p = sym.clone();
        p.p_left[0] = 0.4;
        p.p_right[0] = 0.6;
        let (left, _) = zero_flux_ghosts(&[2.0, 5.0, 7.0], &p).unwrap();
        assert_relative_eq!(left, 1.6, max_relative = 1e-15);

        assert_eq!(
            zero_flux_ghosts(&[1.0; 3], &JumpProbabilities::uniform(3)),
            Err(Error::MissingGhostProbability("left"))
        );
    }

    #[test]
    fn periodic_examples() {
        let u: Vec<f64> = (0..8).map(f64::from).collect();
        assert_eq!(periodic_wrap(&u), (7.0, 0.0));
        assert_eq!(ring_index(8, 8), 0);
        assert_eq!(ring_index(-1, 8), 7);
    }

    #[test]
    fn exp_and_fd_ghosts_agree_to_second_order() {
        let (u, b) = (0.8, -0.6);
        let gap = |dx: f64| {
            (neumann_ghost_exp(u, b, dx, Side::Right).unwrap()
                - neumann_ghost_fd(u, b, dx, Side::Right))
            .abs()
        };
        let ratio = gap(1e-2) / gap(5e-3);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn exp_ghost_is_positive(
            u in 1e-12f64..1e3,
            b in -1e3f64..1e3,
            dx in 1e-6f64..1e2,
            left in any::<bool>(),
        ) {
            let side = if left { Side::Left } else { Side::Right };
            if let Ok(g) = neumann_ghost_exp(u, b, dx, side) {
                prop_assert!(g >= 0.0);
                if dx * b.abs() / u < 700.0 {
                    prop_assert!(g > 0.0);
                }
            }
        }

        #[test]
        fn split_parts_recombine(a in -1e6f64..1e6) {
            let (p, m) = dirichlet_split(a);
            prop_assert_eq!(p - m, a);
            prop_assert_eq!(p * m, 0.0);
            prop_assert!(p >= 0.0 && m >= 0.0);
        }
    }
}
