//! Exact solutions and error measurement.
//!
//! The travelling-front Burgers solution comes out of the Hopf-Cole map
//! `u = -2 nu phi_x / phi` applied to a sum of two exponential heat
//! solutions; both the closed form and the heat-equation route are exposed
//! so one can check the other.

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// `u(x, t) = (C2 + 2 nu C1^2 tanh(C2 t - C1 x + C3)) / C1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhSolution {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub nu: f64,
}

impl TanhSolution {
    pub fn new(c1: f64, c2: f64, c3: f64, nu: f64) -> Result<Self> {
        if c1 == 0.0 || !c1.is_finite() {
            return Err(Error::ConfigInvalid(format!("C1 must be non-zero, got {c1}")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::ConfigInvalid(format!("nu must be positive, got {nu}")));
        }
        Ok(Self { c1, c2, c3, nu })
    }

    /// Front `1 + 2 nu tanh(c + t - x)` starting from `1 + 2 nu tanh(c - x)`.
    pub fn front(nu: f64, c: f64) -> Result<Self> {
        Self::new(1.0, 1.0, c, nu)
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let z = t * self.c2 - x * self.c1 + self.c3;
        (self.c2 + 2.0 * self.nu * self.c1 * self.c1 * z.tanh()) / self.c1
    }

    pub fn sample(&self, xs: &[f64], t: f64) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x, t)).collect()
    }

    /// `u_x`, the Neumann data this solution induces.
    pub fn slope(&self, x: f64, t: f64) -> f64 {
        let z = t * self.c2 - x * self.c1 + self.c3;
        let sech = 1.0 / z.cosh();
        -2.0 * self.nu * self.c1 * self.c1 * sech * sech
    }

    /// Positive heat-equation solution `phi` with `u = -2 nu phi_x / phi`:
    /// `exp(C3 - k1 x + nu k1^2 t) + exp(-C3 - k2 x + nu k2^2 t)` where
    /// `k1 - k2 = 2 C1` and `nu (k1 + k2) = C2 / C1`.
    pub fn heat_potential(&self, x: f64, t: f64) -> f64 {
        let mean = self.c2 / (2.0 * self.nu * self.c1);
        let k1 = mean + self.c1;
        let k2 = mean - self.c1;
        let nu = self.nu;
        (self.c3 - k1 * x + nu * k1 * k1 * t).exp() + (-self.c3 - k2 * x + nu * k2 * k2 * t).exp()
    }
}

/// Point-source heat kernel of the given mass, started `t0` before time zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianHeat {
    pub mass: f64,
    pub center: f64,
    pub diffusivity: f64,
    pub t0: f64,
}

impl GaussianHeat {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let s = 4.0 * self.diffusivity * (t + self.t0);
        self.mass / (std::f64::consts::PI * s).sqrt() * (-(x - self.center).powi(2) / s).exp()
    }
}

/// Named exact solutions (`"burgers-tanh"`, `"heat-gaussian"`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    BurgersTanh(TanhSolution),
    HeatGaussian(GaussianHeat),
}

impl Oracle {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            Oracle::BurgersTanh(s) => s.eval(x, t),
            Oracle::HeatGaussian(g) => g.eval(x, t),
        }
    }

    pub fn sample(&self, lattice: &Lattice, t: f64) -> Vec<f64> {
        lattice.coordinates().into_iter().map(|x| self.eval(x, t)).collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Oracle::BurgersTanh(_) => "burgers-tanh",
            Oracle::HeatGaussian(_) => "heat-gaussian",
        }
    }
}

fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

/// Max of `|u_t - nu u_xx + u u_x|` over `xs` with fourth-order central
/// differences of step `h`. The time derivative is taken from `in_time` and
/// the spatial terms from `in_space`; pass the same function to both to test
/// a candidate solution.
pub fn burgers_residual<S, T>(in_space: S, in_time: T, nu: f64, xs: &[f64], t: f64, h: f64) -> f64
where
    S: Fn(f64, f64) -> f64,
    T: Fn(f64, f64) -> f64,
{
    xs.iter()
        .map(|&x| {
            let u = in_space(x, t);
            let u_t = d1(|s| in_time(x, s), t, h);
            let u_x = d1(|y| in_space(y, t), x, h);
            let u_xx = d2(|y| in_space(y, t), x, h);
            (u_t - nu * u_xx + u * u_x).abs()
        })
        .fold(0.0, f64::max)
}

/// Residual step for [`residual_check`].
pub const RESIDUAL_STEP: f64 = 1e-3;

/// Confirms the closed form solves Burgers' equation on the sample grid.
pub fn residual_check(sol: &TanhSolution, sample_grid: &Lattice, t: f64) -> f64 {
    let f = |x: f64, s: f64| sol.eval(x, s);
    burgers_residual(f, f, sol.nu, &sample_grid.coordinates(), t, RESIDUAL_STEP)
}

/// `u = -2 nu phi_x / phi` with central differences inside and second-order
/// one-sided differences at the two ends.
pub fn hopf_cole_transform(phi_values: &[f64], dx: f64, nu: f64) -> Result<Vec<f64>> {
    if let Some((index, &value)) = phi_values
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::NonPositivePhi { index, value });
    }
    let n = phi_values.len();
    if n < 3 {
        return Err(Error::InvalidField(format!(
            "need at least 3 samples for the transform, got {n}"
        )));
    }
    let p = phi_values;
    let derivative = |i: usize| -> f64 {
        if i == 0 {
            (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * dx)
        } else if i == n - 1 {
            (3.0 * p[n - 1] - 4.0 * p[n - 2] + p[n - 3]) / (2.0 * dx)
        } else {
            (p[i + 1] - p[i - 1]) / (2.0 * dx)
        }
    };
    Ok((0..n).map(|i| -2.0 * nu * derivative(i) / p[i]).collect())
}

/// Error of one run at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub dx: f64,
    pub dt: f64,
    pub t: f64,
    pub l1_error: f64,
}

/// `dx * sum |numeric - exact|`.
pub fn l1_error(numeric: &[f64], exact: &[f64], dx: f64) -> Result<f64> {
    if numeric.len() != exact.len() {
        return Err(Error::LengthMismatch {
            left: numeric.len(),
            right: exact.len(),
        });
    }
    Ok(dx * numeric.iter().zip(exact).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Least-squares slope of `log E` against `log dx`.
pub fn convergence_order(records: &[ErrorRecord]) -> Result<f64> {
    if records.len() < 3 {
        return Err(Error::InsufficientRecords {
            needed: 3,
            got: records.len(),
        });
    }
    for r in records {
        if !(r.dx > 0.0 && r.l1_error > 0.0 && r.l1_error.is_finite()) {
            return Err(Error::InvalidRecord(format!(
                "need dx > 0 and a positive finite error, got dx = {}, E = {}",
                r.dx, r.l1_error
            )));
        }
    }
    for (i, a) in records.iter().enumerate() {
        for b in &records[i + 1..] {
            if (a.dx - b.dx).abs() <= 1e-12 * a.dx.max(b.dx) {
                return Err(Error::DegenerateFit);
            }
        }
    }
    let xs: Vec<f64> = records.iter().map(|r| r.dx.ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.l1_error.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// The `k` records with the smallest `dx`, finest first.
pub fn finest(records: &[ErrorRecord], k: usize) -> Vec<ErrorRecord> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.dx.total_cmp(&b.dx));
    sorted.truncate(k);
    sorted
}
