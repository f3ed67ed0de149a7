//! Particle-ensemble validation against the master equation on a ring.

use std::f64::consts::PI;

use dtrw::lattice::Lattice;
use dtrw::montecarlo::{master_equation_density, simulate_ensemble, tv_distance, EnsembleConfig};
use dtrw::{ForceSpec, WeightRule};

/// Ring walk driven by `F(x) = amplitude * sin(2 pi x / sites)`.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub sites: usize,
    pub n_steps: usize,
    pub amplitude: f64,
    pub beta: f64,
    pub weights: WeightRule,
    pub initial_site: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            sites: 32,
            n_steps: 50,
            amplitude: 1.0,
            beta: 1.0,
            weights: WeightRule::Boltzmann2,
            initial_site: 0,
        }
    }
}

impl McConfig {
    pub fn ensemble(&self, n_particles: usize, seed: u64) -> dtrw::Result<EnsembleConfig> {
        let period = self.sites as f64;
        let amplitude = self.amplitude;
        let force = ForceSpec::prescribed(self.beta, "sinusoid", move |x, _| {
            amplitude * (2.0 * PI * x / period).sin()
        })?;
        Ok(EnsembleConfig {
            n_particles,
            seed,
            lattice: Lattice::ring(0.0, period, 1.0)?,
            force,
            n_steps: self.n_steps,
            diffusivity: 0.5,
            weights: self.weights,
        })
    }

    pub fn master_density(&self) -> dtrw::Result<Vec<f64>> {
        master_equation_density(&self.ensemble(1, 0)?, self.initial_site)
    }

    /// Empirical density and its TV distance to `exact`.
    pub fn sample(&self, n_particles: usize, seed: u64, exact: &[f64]) -> dtrw::Result<(Vec<f64>, f64)> {
        let density = simulate_ensemble(&self.ensemble(n_particles, seed)?, self.initial_site)?;
        let tv = tv_distance(&density, exact)?;
        Ok((density, tv))
    }

    /// TV distance for every `(n, seed)` pair, seeds `seed0..seed0 + replicates`.
    pub fn tv_table(&self, sizes: &[usize], seed0: u64, replicates: u64) -> dtrw::Result<Vec<(usize, u64, f64)>> {
        let exact = self.master_density()?;
        let mut rows = Vec::new();
        for &n in sizes {
            for seed in seed0..seed0 + replicates {
                rows.push((n, seed, self.sample(n, seed, &exact)?.1));
            }
        }
        Ok(rows)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.is_empty() {
        f64::NAN
    } else if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
