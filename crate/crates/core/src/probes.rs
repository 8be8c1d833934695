//! Displaced-thermal probe states, phase imprinting, and transmission noise.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::symplectic::{phase_rotation, CovarianceMatrix, PhaseSpaceVector};

/// Step for the finite-difference validation of analytic mean derivatives.
pub const FD_STEP: f64 = 1e-5;

/// Parameters of an N-mode displaced thermal probe: real amplitudes and
/// per-mode thermal occupations.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ProbeSpec {
    pub alphas: Vec<f64>,
    pub thermal_occupations: Vec<f64>,
}

impl ProbeSpec {
    pub fn new(alphas: Vec<f64>, thermal_occupations: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() || alphas.len() != thermal_occupations.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes vs {} occupations",
                alphas.len(),
                thermal_occupations.len()
            )));
        }
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("amplitudes must be finite".into()));
        }
        if thermal_occupations.iter().any(|n| !n.is_finite() || *n < 0.0) {
            return Err(Error::InvalidArgument(
                "thermal occupations must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            alphas,
            thermal_occupations,
        })
    }

    /// Isothermal, path-symmetric two-mode probe.
    pub fn symmetric_two_mode(alpha: f64, n0: f64) -> Result<Self> {
        Self::new(vec![alpha, alpha], vec![n0, n0])
    }

    pub fn n_modes(&self) -> usize {
        self.alphas.len()
    }

    /// Total probe intensity, sum of alpha_j^2.
    pub fn total_intensity(&self) -> f64 {
        self.alphas.iter().map(|a| a * a).sum()
    }
}

/// Mean vector and covariance matrix of an N-mode Gaussian state.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    mean: PhaseSpaceVector,
    cov: CovarianceMatrix,
}

impl GaussianState {
    pub fn new(mean: PhaseSpaceVector, cov: CovarianceMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mean length {} vs covariance dim {}",
                mean.len(),
                cov.dim()
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn mean(&self) -> &PhaseSpaceVector {
        &self.mean
    }

    pub fn cov(&self) -> &CovarianceMatrix {
        &self.cov
    }

    pub fn n_modes(&self) -> usize {
        self.cov.n_modes()
    }
}

/// Loss and thermal-noise transmission channel, applied identically to
/// every mode.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ChannelSpec {
    pub eta: f64,
    pub n_channel: f64,
}

impl ChannelSpec {
    pub fn new(eta: f64, n_channel: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!(
                "transmissivity {eta} outside [0, 1]"
            )));
        }
        if !n_channel.is_finite() || n_channel < 0.0 {
            return Err(Error::InvalidArgument(
                "added thermal occupation must be nonnegative".into(),
            ));
        }
        Ok(Self { eta, n_channel })
    }
}

/// State of the probe before any phase is imprinted: per-mode mean block
/// (sqrt(2) alpha_j, 0) and covariance (N_j + 1/2) I_2.
pub fn probe_state(spec: &ProbeSpec) -> GaussianState {
    let n = spec.n_modes();
    let mut mean = DVector::zeros(2 * n);
    let mut cov = nalgebra::DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        mean[2 * j] = std::f64::consts::SQRT_2 * spec.alphas[j];
        let v = spec.thermal_occupations[j] + 0.5;
        cov[(2 * j, 2 * j)] = v;
        cov[(2 * j + 1, 2 * j + 1)] = v;
    }
    GaussianState {
        mean: PhaseSpaceVector::from_vector(mean),
        cov: CovarianceMatrix::new(cov).expect("thermal covariance is always valid"),
    }
}

/// Imprint per-mode phase shifts: the mean transforms as R^t m and the
/// covariance as R^t S R with R the direct-sum rotation of `phase_rotation`.
/// For displaced thermal probes the covariance is unchanged.
pub fn imprint_phases(state: &GaussianState, thetas: &[f64]) -> Result<GaussianState> {
    if thetas.len() != state.n_modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} angles for a {}-mode state",
            thetas.len(),
            state.n_modes()
        )));
    }
    let rot = phase_rotation(thetas)?;
    let r = rot.matrix();
    let mean = PhaseSpaceVector::from_vector(r.transpose() * state.mean.vector());
    let cov = CovarianceMatrix::new(r.transpose() * state.cov.matrix() * r)?;
    Ok(GaussianState { mean, cov })
}

/// Probe state after phases `thetas`: per-mode mean block
/// sqrt(2) alpha_j (cos t_j, sin t_j).
pub fn phase_shifted_probe(spec: &ProbeSpec, thetas: &[f64]) -> Result<GaussianState> {
    imprint_phases(&probe_state(spec), thetas)
}

/// Transmission noise rescales the probe parameters:
/// alpha -> eta * alpha and N_j -> N_j + n_channel.
pub fn apply_channel(spec: &ProbeSpec, ch: &ChannelSpec) -> ProbeSpec {
    ProbeSpec {
        alphas: spec.alphas.iter().map(|a| ch.eta * a).collect(),
        thermal_occupations: spec
            .thermal_occupations
            .iter()
            .map(|n| n + ch.n_channel)
            .collect(),
    }
}

/// Directional derivative of the phase-shifted probe mean along the unit
/// vector `v` in parameter space, computed analytically from the rotation
/// derivative. Per-mode block: v_j sqrt(2) alpha_j (-sin t_j, cos t_j).
/// Its squared norm is 2 sum_j v_j^2 alpha_j^2.
pub fn phase_derivative_of_mean(
    spec: &ProbeSpec,
    thetas: &[f64],
    v: &[f64],
) -> Result<PhaseSpaceVector> {
    let n = spec.n_modes();
    if thetas.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "spec has {n} modes, got {} angles and {} direction entries",
            thetas.len(),
            v.len()
        )));
    }
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector, got norm {norm}"
        )));
    }
    let mut out = DVector::zeros(2 * n);
    for j in 0..n {
        let (s, c) = thetas[j].sin_cos();
        let w = v[j] * std::f64::consts::SQRT_2 * spec.alphas[j];
        out[2 * j] = -w * s;
        out[2 * j + 1] = w * c;
    }
    Ok(PhaseSpaceVector::from_vector(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn probe_state_cases() {
        let spec = ProbeSpec::new(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let st = probe_state(&spec);
        let s2 = std::f64::consts::SQRT_2;
        assert_eq!(st.mean().as_slice(), &[s2, 0.0, s2, 0.0]);
        for i in 0..4 {
            assert_eq!(st.cov().matrix()[(i, i)], 0.5);
        }

        let vac = probe_state(&ProbeSpec::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap());
        assert_eq!(vac.mean().norm(), 0.0);

        // N = 1/2 gives unit-diagonal covariance
        let warm = probe_state(&ProbeSpec::new(vec![1.0, 1.0], vec![0.5, 0.5]).unwrap());
        for i in 0..4 {
            assert_eq!(warm.cov().matrix()[(i, i)], 1.0);
        }

        assert!(ProbeSpec::new(vec![1.0], vec![-0.1]).is_err());
        assert!(ProbeSpec::new(vec![1.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn imprint_cases() {
        let spec = ProbeSpec::new(vec![1.0, 1.0], vec![0.2, 0.7]).unwrap();
        let st = probe_state(&spec);
        let same = imprint_phases(&st, &[0.0, 0.0]).unwrap();
        assert_eq!(same.mean(), st.mean());

        // quarter turn moves the q displacement onto p
        let s2 = std::f64::consts::SQRT_2;
        let turned = imprint_phases(&st, &[std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        assert_abs_diff_eq!(turned.mean()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(turned.mean()[1], s2, epsilon = 1e-15);
        assert_abs_diff_eq!(turned.mean()[2], s2, epsilon = 1e-15);

        // thermal covariance is phase-independent
        let diff = turned.cov().matrix() - st.cov().matrix();
        assert!(diff.iter().all(|x| x.abs() < 1e-14));

        assert!(imprint_phases(&st, &[0.1]).is_err());
    }

    #[test]
    fn channel_cases() {
        let spec = ProbeSpec::new(vec![2.0, 2.0], vec![0.0, 0.0]).unwrap();
        let id = apply_channel(&spec, &ChannelSpec::new(1.0, 0.0).unwrap());
        assert_eq!(id, spec);

        let lossy = apply_channel(&spec, &ChannelSpec::new(0.5, 0.0).unwrap());
        assert_eq!(lossy.alphas, vec![1.0, 1.0]);

        let noisy = apply_channel(&spec, &ChannelSpec::new(1.0, 0.3).unwrap());
        assert_eq!(noisy.thermal_occupations, vec![0.3, 0.3]);

        assert!(ChannelSpec::new(1.2, 0.0).is_err());
        assert!(ChannelSpec::new(0.9, -0.5).is_err());
    }

    #[test]
    fn mean_derivative_balanced_difference() {
        // (d/dt1 - d/dt2)/sqrt(2) of the mean at t = 0
        let spec = ProbeSpec::new(vec![1.3, 0.8], vec![0.0, 0.0]).unwrap();
        let v = [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2];
        let d = phase_derivative_of_mean(&spec, &[0.0, 0.0], &v).unwrap();
        let s2 = std::f64::consts::SQRT_2;
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], s2 * 1.3 * v[0], epsilon = 1e-15);
        assert_abs_diff_eq!(d[2], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[3], -s2 * 0.8 * v[0], epsilon = 1e-15);

        // squared norm is 2 alpha^2 for balanced v and equal amplitudes
        let eq = ProbeSpec::symmetric_two_mode(0.9, 0.4).unwrap();
        let d = phase_derivative_of_mean(&eq, &[0.3, -1.1], &v).unwrap();
        assert_abs_diff_eq!(d.norm().powi(2), 2.0 * 0.9 * 0.9, epsilon = 1e-12);

        assert!(phase_derivative_of_mean(&spec, &[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn prop_mean_norm_invariant(t1 in -3.2..3.2, t2 in -3.2..3.2,
                                    a1 in -2.0..2.0, a2 in -2.0..2.0) {
            let spec = ProbeSpec::new(vec![a1, a2], vec![0.1, 0.6]).unwrap();
            let st = probe_state(&spec);
            let rotated = imprint_phases(&st, &[t1, t2]).unwrap();
            prop_assert!((rotated.mean().norm() - st.mean().norm()).abs() < 1e-12);
        }

        #[test]
        fn prop_derivative_matches_finite_difference(
            t1 in -3.0..3.0, t2 in -3.0..3.0,
            a1 in 0.2..2.0, a2 in 0.2..2.0,
            w in 0.05..0.95f64,
        ) {
            let spec = ProbeSpec::new(vec![a1, a2], vec![0.0, 0.3]).unwrap();
            let v = [w.sqrt(), -(1.0 - w).sqrt()];
            let analytic = phase_derivative_of_mean(&spec, &[t1, t2], &v).unwrap();

            let shifted = |s: f64| {
                let th = [t1 + s * v[0], t2 + s * v[1]];
                phase_shifted_probe(&spec, &th).unwrap().mean().vector().clone()
            };
            let fd = (shifted(FD_STEP) - shifted(-FD_STEP)) / (2.0 * FD_STEP);
            let err = (analytic.vector() - &fd).norm() / analytic.norm().max(1e-6);
            prop_assert!(err < 1e-6);
        }

        #[test]
        fn prop_channel_composition(eta1 in 0.1..1.0, eta2 in 0.1..1.0,
                                    n1 in 0.0..0.8, n2 in 0.0..0.8) {
            let spec = ProbeSpec::new(vec![1.0, -0.5], vec![0.2, 0.0]).unwrap();
            let a = apply_channel(&spec, &ChannelSpec::new(eta1, n1).unwrap());
            let ab = apply_channel(&a, &ChannelSpec::new(eta2, n2).unwrap());
            let joint = apply_channel(
                &spec,
                &ChannelSpec::new(eta1 * eta2, n1 + n2).unwrap(),
            );
            for j in 0..2 {
                prop_assert!((ab.alphas[j] - joint.alphas[j]).abs() < 1e-12);
                prop_assert!(
                    (ab.thermal_occupations[j] - joint.thermal_occupations[j]).abs() < 1e-12
                );
            }
        }
    }
}
