use super::LatentState;
use crate::spectrum::{Peak, Spectrum};
use crate::Scalar;

/// Relative width of each formula's mass peak: sigma = 5e-6 * mass, so the
/// +-1 sigma truncation spans 10 ppm.
pub const SIGMA_PPM: f64 = 5e-6;

/// Probability mass of a standard normal within +-1 sigma.
pub const ONE_SIGMA_MASS: f64 = 0.682_689_492_137_085_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Dirac,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MassDistribution {
    Dirac(Spectrum),
    Gaussian(GaussianMixture),
}

/// One component per formula with nonzero probability.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    /// `(mean, sigma, weight)`.
    components: Vec<(f64, f64, f64)>,
}

impl GaussianMixture {
    pub fn components(&self) -> &[(f64, f64, f64)] {
        &self.components
    }

    /// Support interval of component `i`.
    pub fn support(&self, i: usize) -> (f64, f64) {
        let (mu, s, _) = self.components[i];
        (mu - s, mu + s)
    }

    /// Density of component `i` alone (integrates to 1 over its support).
    pub fn component_density(&self, i: usize, m: f64) -> f64 {
        let (mu, s, _) = self.components[i];
        let z = (m - mu) / s;
        if z.abs() > 1.0 {
            return 0.0;
        }
        (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt() * ONE_SIGMA_MASS)
    }

    pub fn density(&self, m: f64) -> f64 {
        (0..self.components.len()).map(|i| self.components[i].2 * self.component_density(i, m)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.2).sum()
    }
}

/// Peaks at each distinct formula mass with intensity P(m). Intensities sum
/// to `1 - P(OS)`.
pub fn dirac_spectrum<T: Scalar>(state: &LatentState<T>) -> Spectrum {
    let peaks = state
        .lattice()
        .masses()
        .iter()
        .zip(state.mass_marginal())
        .map(|(&mass, &p)| Peak { mass, intensity: p.as_f64() })
        .collect();
    Spectrum::new(peaks).expect("lattice masses are positive and probabilities finite")
}

pub fn gaussian_mixture<T: Scalar>(state: &LatentState<T>) -> GaussianMixture {
    let lat = state.lattice();
    let components = state
        .formula_marginal()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > T::zero())
        .map(|(i, &p)| {
            let mu = lat.masses()[lat.formula_mass()[i]];
            (mu, SIGMA_PPM * mu, p.as_f64())
        })
        .collect();
    GaussianMixture { components }
}

pub fn mass_distribution<T: Scalar>(state: &LatentState<T>, resolution: Resolution) -> MassDistribution {
    match resolution {
        Resolution::Dirac => MassDistribution::Dirac(dirac_spectrum(state)),
        Resolution::Gaussian => MassDistribution::Gaussian(gaussian_mixture(state)),
    }
}
