//! Particle simulation of the walk whose master equation the scheme evolves.
//!
//! Each particle draws from its own ChaCha stream, selected by particle
//! index, so results do not depend on how the ensemble is scheduled across
//! threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boundary::{BoundaryCondition, Side};
use crate::error::{Error, Result};
use crate::force::{force_on_lattice, ForceKind, ForceSpec, ForceStencil};
use crate::lattice::{Field, Lattice, TimeGrid};
use crate::stepper::{evolve, SchemeConfig, State};
use crate::weights::build_jump_probabilities;
use crate::weights::WeightRule;

/// A periodic walk driven by a prescribed force.
#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub n_particles: usize,
    pub seed: u64,
    /// Ring lattice; see [`Lattice::ring`].
    pub lattice: Lattice,
    pub force: ForceSpec,
    pub n_steps: usize,
    /// Fixes the time step, which matters only for time-dependent forces.
    pub diffusivity: f64,
    pub weights: WeightRule,
}

impl EnsembleConfig {
    fn scheme(&self) -> Result<SchemeConfig> {
        if self.n_particles == 0 {
            return Err(Error::ConfigInvalid("need at least one particle".into()));
        }
        if self.force.kind() != ForceKind::Prescribed {
            return Err(Error::ConfigInvalid(
                "particle ensembles need a prescribed force".into(),
            ));
        }
        SchemeConfig::new(
            self.lattice.clone(),
            TimeGrid::new(self.lattice.dx(), self.diffusivity, self.n_steps)?,
            self.force.clone(),
            self.weights,
            BoundaryCondition::periodic(Side::Left),
            BoundaryCondition::periodic(Side::Right),
            false,
        )
    }

    fn check_site(&self, initial_site: usize) -> Result<()> {
        if initial_site < self.lattice.n_sites() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!(
                "initial site {initial_site} outside a ring of {} sites",
                self.lattice.n_sites()
            )))
        }
    }
}

/// Right-jump probability at every site for each of the `n_steps` steps.
pub fn step_probabilities(config: &EnsembleConfig) -> Result<Vec<Vec<f64>>> {
    let scheme = config.scheme()?;
    let zeros = vec![0.0; config.lattice.n_sites()];
    (0..config.n_steps)
        .map(|n| {
            let t = n as f64 * scheme.dt();
            let forces = force_on_lattice(&config.force, &config.lattice, t, &zeros)?;
            let probs = build_jump_probabilities(
                &ForceStencil::ring(&forces),
                config.lattice.dx(),
                config.force.beta(),
                config.weights,
                scheme.layout(),
            )?;
            Ok(probs.p_right)
        })
        .collect()
}

/// Occupation frequencies after `n_steps` for particles started at
/// `initial_site`. Entries sum to one.
pub fn simulate_ensemble(config: &EnsembleConfig, initial_site: usize) -> Result<Vec<f64>> {
    config.check_site(initial_site)?;
    let table = step_probabilities(config)?;
    let sites = config.lattice.n_sites();
    let counts = (0..config.n_particles)
        .into_par_iter()
        .fold(
            || vec![0u64; sites],
            |mut acc, particle| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(particle as u64);
                let mut site = initial_site;
                for p_right in &table {
                    site = if rng.gen::<f64>() < p_right[site] {
                        (site + 1) % sites
                    } else {
                        (site + sites - 1) % sites
                    };
                }
                acc[site] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; sites],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let n = config.n_particles as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Density from the master equation started from a unit mass at
/// `initial_site`, the exact law of [`simulate_ensemble`].
pub fn master_equation_density(config: &EnsembleConfig, initial_site: usize) -> Result<Vec<f64>> {
    config.check_site(initial_site)?;
    let scheme = config.scheme()?;
    let mut u = vec![0.0; config.lattice.n_sites()];
    u[initial_site] = 1.0;
    let out = evolve(State::Plain(Field::new(u, 0)?), &scheme, config.n_steps, &mut [])
        .map_err(|a| a.error)?;
    Ok(out.state.values().into_owned())
}

/// Half the l1 distance between two distributions of equal mass, after
/// normalising both to unit mass.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    if (sp - sq).abs() > 1e-9 * sp.abs().max(sq.abs()).max(1.0) || sp <= 0.0 {
        return Err(Error::MassMismatch { left: sp, right: sq });
    }
    Ok(0.5
        * p.iter()
            .zip(q)
            .map(|(a, b)| (a / sp - b / sq).abs())
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n_particles: usize, n_steps: usize, force: ForceSpec) -> EnsembleConfig {
        EnsembleConfig {
            n_particles,
            seed: 7,
            lattice: Lattice::ring(0.0, 16.0, 1.0).unwrap(),
            force,
            n_steps,
            diffusivity: 0.5,
            weights: WeightRule::Boltzmann2,
        }
    }

    #[test]
    fn no_steps_gives_a_delta() {
        let cfg = ring(1, 0, ForceSpec::zero(1.0).unwrap());
        let d = simulate_ensemble(&cfg, 5).unwrap();
        assert_eq!(d[5], 1.0);
        assert_eq!(d.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn one_symmetric_step_splits_evenly() {
        let cfg = ring(200_000, 1, ForceSpec::zero(1.0).unwrap());
        let d = simulate_ensemble(&cfg, 0).unwrap();
        assert!((d[1] - 0.5).abs() < 0.005);
        assert!((d[15] - 0.5).abs() < 0.005);
        assert_eq!(d[1] + d[15], 1.0);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let force = ForceSpec::prescribed(1.0, "sin", |x, _| (x / 3.0).sin()).unwrap();
        let cfg = ring(5000, 20, force);
        assert_eq!(simulate_ensemble(&cfg, 3).unwrap(), simulate_ensemble(&cfg, 3).unwrap());
        let other = EnsembleConfig { seed: 8, ..cfg.clone() };
        assert_ne!(simulate_ensemble(&cfg, 3).unwrap(), simulate_ensemble(&other, 3).unwrap());
    }

    #[test]
    fn state_dependent_force_is_rejected() {
        let cfg = ring(10, 5, ForceSpec::burgers(0.5).unwrap());
        assert!(matches!(simulate_ensemble(&cfg, 0), Err(Error::ConfigInvalid(_))));
        let ok = ring(10, 5, ForceSpec::zero(1.0).unwrap());
        assert!(simulate_ensemble(&ok, 16).is_err());
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((tv_distance(&[0.6, 0.4], &[0.5, 0.5]).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(
            tv_distance(&[1.0], &[0.5, 0.5]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            tv_distance(&[1.0, 1.0], &[0.5, 0.5]),
            Err(Error::MassMismatch { .. })
        ));
    }
}
