//! Energy-constrained Gaussian measurements: energy accounting, outcome
//! probability density, and outcome sampling.
//!
//! A measurement is defined by a centered Gaussian seed state S with
//! covariance S_cov; outcomes are displacements of that seed over phase
//! space. The reported outcome variable w is fixed so that for the vacuum
//! seed (heterodyne) the density is Gaussian centered at the probe mean
//! with covariance (N0 + 1) I per mode, the Husimi form. With that
//! convention the outcome distribution is
//!
//! ```text
//! p(w) = N(w; m_state, S_state + S_seed)
//! ```
//!
//! Fisher information is invariant under any fixed invertible relabeling of
//! outcomes, so this choice does not affect any information quantity.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::probes::GaussianState;
use crate::symplectic::{phase_rotation, two_mode_pure_covariance, CovarianceMatrix};

/// Default energy used to represent the homodyne limit as a finite seed.
pub const HOMODYNE_ENERGY: f64 = 1e8;

/// Squeezing, beamsplitter, and phase parameters of a pure two-mode seed.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeasurementParams {
    pub r1: f64,
    pub r2: f64,
    pub zeta_mag: f64,
    pub zeta_arg: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl MeasurementParams {
    pub fn new(
        r1: f64,
        r2: f64,
        zeta_mag: f64,
        zeta_arg: f64,
        phi1: f64,
        phi2: f64,
    ) -> Result<Self> {
        let all = [r1, r2, zeta_mag, zeta_arg, phi1, phi2];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "measurement parameters must be finite".into(),
            ));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&zeta_mag) {
            return Err(Error::InvalidArgument(format!(
                "|zeta| = {zeta_mag} outside [0, pi/2]"
            )));
        }
        Ok(Self {
            r1,
            r2,
            zeta_mag,
            zeta_arg,
            phi1,
            phi2,
        })
    }

    pub fn zero() -> Self {
        Self {
            r1: 0.0,
            r2: 0.0,
            zeta_mag: 0.0,
            zeta_arg: 0.0,
            phi1: 0.0,
            phi2: 0.0,
        }
    }
}

/// An energy-constrained Gaussian measurement: displacements of a centered
/// Gaussian seed state.
#[derive(Clone, Debug, PartialEq)]
pub struct Ecgm {
    cov_s: CovarianceMatrix,
}

impl Ecgm {
    pub fn new(cov_s: CovarianceMatrix) -> Self {
        Self { cov_s }
    }

    pub fn n_modes(&self) -> usize {
        self.cov_s.n_modes()
    }

    pub fn cov_s(&self) -> &CovarianceMatrix {
        &self.cov_s
    }

    /// Mean photon number of the seed, (1/2) tr S - N/2. Zero for
    /// heterodyne; sum of sinh^2(r_j) for products of squeezed vacua.
    pub fn energy(&self) -> f64 {
        self.cov_s.mean_photon_number()
    }

    /// Vacuum seed: heterodyne measurement.
    pub fn heterodyne(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidArgument(
                "mode count must be at least 1".into(),
            ));
        }
        let cov = CovarianceMatrix::new(0.5 * DMatrix::identity(2 * n_modes, 2 * n_modes))
            .expect("vacuum is a valid covariance");
        Ok(Self { cov_s: cov })
    }

    /// Homodyne limit represented as a large-but-finite total seed energy
    /// split equally among the modes. `angles[j]` picks the squeezed
    /// (precisely measured) quadrature of mode j: 0 squeezes q, pi/2
    /// squeezes p.
    pub fn homodyne_limit(n_modes: usize, angles: &[f64], e_large: f64) -> Result<Self> {
        if n_modes == 0 || angles.len() != n_modes {
            return Err(Error::DimensionMismatch(format!(
                "{} angles for {n_modes} modes",
                angles.len()
            )));
        }
        if !e_large.is_finite() || e_large < 0.0 {
            return Err(Error::InvalidArgument(
                "seed energy must be nonnegative".into(),
            ));
        }
        let r = (e_large / n_modes as f64).sqrt().asinh();
        let mut cov = DMatrix::zeros(2 * n_modes, 2 * n_modes);
        let lo = 0.5 * (-2.0 * r).exp();
        let hi = 0.5 * (2.0 * r).exp();
        for (j, &gamma) in angles.iter().enumerate() {
            let (s, c) = gamma.sin_cos();
            // squeezed axis along (cos gamma, sin gamma)
            cov[(2 * j, 2 * j)] = lo * c * c + hi * s * s;
            cov[(2 * j + 1, 2 * j + 1)] = lo * s * s + hi * c * c;
            cov[(2 * j, 2 * j + 1)] = (lo - hi) * s * c;
            cov[(2 * j + 1, 2 * j)] = (lo - hi) * s * c;
        }
        Ok(Self {
            cov_s: CovarianceMatrix::new(cov)?,
        })
    }

    /// Pure two-mode seed from squeezing/beamsplitter/phase parameters.
    pub fn from_params(params: &MeasurementParams) -> Result<Self> {
        Ok(Self {
            cov_s: two_mode_pure_covariance(params)?,
        })
    }

    /// Separable seed: per-mode squeezing r_j with the squeezed quadrature
    /// aligned with the phase-shifted mean derivative of mode j (at
    /// theta = 0 this squeezes p).
    pub fn separable(rs: &[f64], thetas: &[f64]) -> Result<Self> {
        if rs.is_empty() || rs.len() != thetas.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} squeezings vs {} angles",
                rs.len(),
                thetas.len()
            )));
        }
        let n = rs.len();
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            let lo = 0.5 * (-2.0 * rs[j]).exp();
            let hi = 0.5 * (2.0 * rs[j]).exp();
            // squeezed axis along (-sin t_j, cos t_j)
            let (s, c) = thetas[j].sin_cos();
            cov[(2 * j, 2 * j)] = lo * s * s + hi * c * c;
            cov[(2 * j + 1, 2 * j + 1)] = lo * c * c + hi * s * s;
            cov[(2 * j, 2 * j + 1)] = -(lo - hi) * s * c;
            cov[(2 * j + 1, 2 * j)] = -(lo - hi) * s * c;
        }
        Ok(Self {
            cov_s: CovarianceMatrix::new(cov)?,
        })
    }

    /// Seed conjugated by the inverse of the phase rotation `thetas`:
    /// S' = R^t S R. Pairing this with a probe shifted by `thetas`
    /// reproduces the Fisher information of the unshifted pair.
    pub fn counter_rotated(&self, thetas: &[f64]) -> Result<Self> {
        if thetas.len() != self.n_modes() {
            return Err(Error::DimensionMismatch(format!(
                "{} angles for a {}-mode seed",
                thetas.len(),
                self.n_modes()
            )));
        }
        let r = phase_rotation(thetas)?;
        let m = r.matrix();
        Ok(Self {
            cov_s: CovarianceMatrix::new(m.transpose() * self.cov_s.matrix() * m)?,
        })
    }
}

/// Precomputed Gaussian outcome distribution for a (state, measurement)
/// pair: center m_state, covariance S_state + S_seed.
pub(crate) struct OutcomeDistribution {
    pub center: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub inv: DMatrix<f64>,
    pub log_norm: f64,
}

impl OutcomeDistribution {
    pub fn new(state: &GaussianState, m: &Ecgm) -> Result<Self> {
        if state.n_modes() != m.n_modes() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} modes, measurement has {}",
                state.n_modes(),
                m.n_modes()
            )));
        }
        let cov = state.cov().matrix() + m.cov_s().matrix();
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("outcome covariance".into()))?;
        let ln_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let n = state.n_modes() as f64;
        let log_norm = -n * (2.0 * std::f64::consts::PI).ln() - 0.5 * ln_det;
        let inv = chol.inverse();
        Ok(Self {
            center: state.mean().vector().clone(),
            cov,
            inv,
            log_norm,
        })
    }

    pub fn log_density(&self, w: &DVector<f64>) -> f64 {
        let mut quad = 0.0;
        let d = self.center.len();
        for i in 0..d {
            let di = w[i] - self.center[i];
            for j in 0..d {
                quad += di * self.inv[(i, j)] * (w[j] - self.center[j]);
            }
        }
        self.log_norm - 0.5 * quad
    }

    /// Principal (symmetric) square root of the outcome covariance.
    pub fn sqrt_cov(&self) -> DMatrix<f64> {
        let eig = self.cov.clone().symmetric_eigen();
        let sqrt_vals = DVector::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()),
        );
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose()
    }
}

/// Probability density of observing outcome `w` when measuring `state`
/// with the measurement `m`. Integrates to 1 over R^{2N}.
pub fn outcome_density(
    state: &GaussianState,
    m: &Ecgm,
    w: &crate::symplectic::PhaseSpaceVector,
) -> Result<f64> {
    Ok(log_outcome_density(state, m, w)?.exp())
}

pub fn log_outcome_density(
    state: &GaussianState,
    m: &Ecgm,
    w: &crate::symplectic::PhaseSpaceVector,
) -> Result<f64> {
    if w.len() != state.mean().len() {
        return Err(Error::DimensionMismatch(format!(
            "outcome length {} vs state dim {}",
            w.len(),
            state.mean().len()
        )));
    }
    let dist = OutcomeDistribution::new(state, m)?;
    Ok(dist.log_density(w.vector()))
}

pub(crate) fn sample_outcomes_rng(
    dist: &OutcomeDistribution,
    count: usize,
    rng: &mut impl rand::Rng,
) -> Vec<DVector<f64>> {
    let sqrt = dist.sqrt_cov();
    let d = dist.center.len();
    (0..count)
        .map(|_| {
            let normal =
                DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
            &dist.center + &sqrt * normal
        })
        .collect()
}

/// Draw `count` i.i.d. outcomes from the measurement distribution. The
/// stream is a ChaCha8 generator seeded with `seed`; identical seeds give
/// identical sample lists.
pub fn sample_outcomes(
    state: &GaussianState,
    m: &Ecgm,
    count: usize,
    seed: u64,
) -> Result<Vec<crate::symplectic::PhaseSpaceVector>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let dist = OutcomeDistribution::new(state, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_outcomes_rng(&dist, count, &mut rng)
        .into_iter()
        .map(crate::symplectic::PhaseSpaceVector::from_vector)
        .collect())
}
