//! Fisher-information analytics for Gaussian measurements on displaced
//! thermal probes: the classical Fisher matrix, linear-function rotation,
//! quantum Fisher information and SLD coefficients, closed-form constrained
//! maxima, separable-strategy maxima, entanglement gain and entropy, and
//! the robustness ratio of a measurement designed at assumed parameters.

use nalgebra::{DMatrix, DVector};

use crate::ecgm::{Ecgm, MeasurementParams};
use crate::error::{Error, Result};
use crate::probes::{phase_derivative_of_mean, phase_shifted_probe, ProbeSpec};
use crate::symplectic::PhaseSpaceVector;

/// Classical Fisher matrix and derived scalars for one probe/measurement
/// pair, with provenance notes for each entry.
#[derive(Clone, Debug)]
pub struct FisherReport {
    pub fisher: DMatrix<f64>,
    pub f_tilde_11: f64,
    pub qfi: f64,
    pub notes: Vec<String>,
}

/// E - sqrt(E^2 + E) without cancellation; equals -1/(1 + sqrt(1 + 1/E))
/// for E > 0 and tends to -1/2 as E grows.
fn energy_shift(e: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        -1.0 / (1.0 + (1.0 + 1.0 / e).sqrt())
    }
}

/// Per-mode analytic mean derivatives d m / d theta_j of the phase-shifted
/// probe, as columns of a 2N x N matrix.
fn mean_derivatives(spec: &ProbeSpec, thetas: &[f64]) -> DMatrix<f64> {
    let n = spec.n_modes();
    let mut out = DMatrix::zeros(2 * n, n);
    for j in 0..n {
        let (s, c) = thetas[j].sin_cos();
        let w = std::f64::consts::SQRT_2 * spec.alphas[j];
        out[(2 * j, j)] = -w * s;
        out[(2 * j + 1, j)] = w * c;
    }
    out
}

/// Classical Fisher matrix of the outcome distribution with respect to the
/// phase parameters. For displaced thermal probes the state covariance is
/// phase-independent, so only the mean-derivative term contributes:
/// F_ij = (d_i m)^t (S_state + S_seed)^{-1} (d_j m).
pub fn fisher_matrix(spec: &ProbeSpec, thetas: &[f64], m: &Ecgm) -> Result<DMatrix<f64>> {
    let n = spec.n_modes();
    if thetas.len() != n || m.n_modes() != n {
        return Err(Error::DimensionMismatch(format!(
            "spec has {n} modes, got {} angles and a {}-mode measurement",
            thetas.len(),
            m.n_modes()
        )));
    }
    let state = phase_shifted_probe(spec, thetas)?;
    let sigma = state.cov().matrix() + m.cov_s().matrix();
    let derivs = mean_derivatives(spec, thetas);
    fisher_from_derivatives(&derivs, None, &sigma)
}

/// Fisher matrix from explicit mean and covariance derivatives.
///
/// The covariance contribution uses the product-of-traces form
/// (1/4) tr((d_i S) Sigma^{-1}) tr((d_j S) Sigma^{-1}); it vanishes for all
/// probes built by this crate and is outside the regime validated by the
/// Monte-Carlo oracle. Prefer `fisher_matrix` unless the state covariance
/// genuinely depends on the parameters.
pub fn fisher_from_derivatives(
    mean_derivs: &DMatrix<f64>,
    cov_derivs: Option<&[DMatrix<f64>]>,
    sigma: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = mean_derivs.ncols();
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("outcome covariance".into()))?;
    let solved = chol.solve(mean_derivs);
    let mut f = mean_derivs.transpose() * solved;
    if let Some(cds) = cov_derivs {
        if cds.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} covariance derivatives for {n} parameters",
                cds.len()
            )));
        }
        let traces: Vec<f64> = cds.iter().map(|cd| chol.solve(cd).trace()).collect();
        for i in 0..n {
            for j in 0..n {
                f[(i, j)] += 0.25 * traces[i] * traces[j];
            }
        }
    }
    Ok(f)
}

/// Rotate a Fisher matrix onto a new orthonormal parameter basis:
/// F_tilde = J^t F J with J = [v_1, ..., v_N] as columns.
pub fn rotate_fisher(f: &DMatrix<f64>, v_basis: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if v_basis.nrows() != f.nrows() || v_basis.ncols() != f.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "basis {}x{} for Fisher {}x{}",
            v_basis.nrows(),
            v_basis.ncols(),
            f.nrows(),
            f.ncols()
        )));
    }
    let gram = v_basis.transpose() * v_basis;
    let defect = (&gram - DMatrix::identity(gram.nrows(), gram.ncols()))
        .iter()
        .fold(0.0_f64, |a, x| a.max(x.abs()));
    if defect > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "basis is not orthonormal: max |V^t V - I| = {defect:.3e}"
        )));
    }
    Ok(v_basis.transpose() * f * v_basis)
}

/// Fisher information of the linear function v1 . theta, computed directly
/// from the directional mean derivative:
/// d^t (S_state + S_seed)^{-1} d with d = (v1 . grad_theta) m.
pub fn linear_function_fi(
    spec: &ProbeSpec,
    thetas: &[f64],
    m: &Ecgm,
    v1: &[f64],
) -> Result<f64> {
    if m.n_modes() != spec.n_modes() {
        return Err(Error::DimensionMismatch(format!(
            "spec has {} modes, measurement has {}",
            spec.n_modes(),
            m.n_modes()
        )));
    }
    let d = phase_derivative_of_mean(spec, thetas, v1)?;
    let state = phase_shifted_probe(spec, thetas)?;
    let sigma = state.cov().matrix() + m.cov_s().matrix();
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::Singular("outcome covariance".into()))?;
    let solved = chol.solve(d.vector());
    Ok(d.vector().dot(&solved))
}

/// Quantum Fisher information for estimating v1 . theta:
/// sum_j 2 v_j^2 alpha_j^2 / (N_j + 1/2). Upper bound on the Fisher
/// information of every measurement.
pub fn qfi_linear_function(spec: &ProbeSpec, v1: &[f64]) -> Result<f64> {
    if v1.len() != spec.n_modes() {
        return Err(Error::DimensionMismatch(format!(
            "direction length {} for {} modes",
            v1.len(),
            spec.n_modes()
        )));
    }
    let norm: f64 = v1.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector, got norm {norm}"
        )));
    }
    Ok(spec
        .alphas
        .iter()
        .zip(&spec.thermal_occupations)
        .zip(v1)
        .map(|((a, n), v)| 2.0 * v * v * a * a / (n + 0.5))
        .sum())
}

/// Quantum Fisher information for the two-mode phase difference
/// (theta_1 - theta_2)/sqrt(2): sum_j alpha_j^2 / (N_j + 1/2).
pub fn qfi_phase_difference(spec: &ProbeSpec) -> Result<f64> {
    if spec.n_modes() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "phase difference needs a two-mode spec, got {} modes",
            spec.n_modes()
        )));
    }
    qfi_linear_function(
        spec,
        &[
            std::f64::consts::FRAC_1_SQRT_2,
            -std::f64::consts::FRAC_1_SQRT_2,
        ],
    )
}

/// Coefficients of the symmetric logarithmic derivative for the two-mode
/// phase difference, written as a linear form c . R in the quadratures.
#[derive(Clone, Debug)]
pub struct SldCoefficients {
    /// Per-mode magnitude alpha_j / (N_j + 1/2).
    pub magnitudes: Vec<f64>,
    /// Per-mode phase of the rotating frame the form lives in.
    pub phases: Vec<f64>,
    /// The linear-form coefficient vector c, per-mode blocks
    /// (+/-) mag_j (sin t_j, -cos t_j) with alternating sign.
    pub quadrature_form: PhaseSpaceVector,
}

/// SLD of the phase-difference parameter as a linear form in quadratures.
/// Satisfies c^t S_state c = QFI and c^t m = 0.
pub fn sld_coefficients(spec: &ProbeSpec, thetas: &[f64]) -> Result<SldCoefficients> {
    if spec.n_modes() != 2 || thetas.len() != 2 {
        return Err(Error::DimensionMismatch(
            "SLD coefficients are defined for the two-mode phase difference".into(),
        ));
    }
    let mut magnitudes = Vec::with_capacity(2);
    let mut form = DVector::zeros(4);
    for j in 0..2 {
        let mag = spec.alphas[j] / (spec.thermal_occupations[j] + 0.5);
        magnitudes.push(mag.abs());
        // the 1/sqrt(2) of the difference direction cancels against the
        // sqrt(2) from writing the ladder form in quadratures
        let sign = if j == 0 { 1.0 } else { -1.0 };
        let (s, c) = thetas[j].sin_cos();
        let w = sign * mag;
        form[2 * j] = w * s;
        form[2 * j + 1] = -w * c;
    }
    Ok(SldCoefficients {
        magnitudes,
        phases: thetas.to_vec(),
        quadrature_form: PhaseSpaceVector::from_vector(form),
    })
}

/// Constrained maximum of the phase-difference Fisher information over all
/// Gaussian measurements of seed energy E, for the isothermal symmetric
/// probe: 2 alpha^2 / (N0 + 1 + E - sqrt(E^2 + E)).
///
/// Monotone nondecreasing in E; at E = 0 it is the heterodyne value
/// 4 alpha^2 / (2 N0 + 2) and as E grows it tends to the quantum limit
/// 4 alpha^2 / (2 N0 + 1).
pub fn gfi_closed_form(alpha: f64, n0: f64, energy: f64) -> f64 {
    assert!(
        energy >= 0.0 && n0 >= 0.0,
        "energy and thermal occupation must be nonnegative"
    );
    2.0 * alpha * alpha / (n0 + 1.0 + energy_shift(energy))
}

/// Heterodyne (zero seed energy) Fisher information 4 alpha^2 / (2 N0 + 2).
pub fn heterodyne_fi(alpha: f64, n0: f64) -> f64 {
    gfi_closed_form(alpha, n0, 0.0)
}

/// Best separable strategy for a balanced linear function over `n_modes`
/// modes: the seed energy splits equally, giving
/// 2 alpha^2 / (N0 + 1 + E/N - sqrt((E/N)^2 + E/N)).
pub fn separable_fi_balanced(alpha: f64, n0: f64, energy: f64, n_modes: usize) -> f64 {
    assert!(n_modes >= 1, "mode count must be at least 1");
    gfi_closed_form(alpha, n0, energy / n_modes as f64)
}

/// Best separable strategy when one coefficient dominates: all seed energy
/// measures the first mode,
/// 2 alpha^2 (v11^2 / (N0 + 1 + E - sqrt(E^2 + E)) + (1 - v11^2) / (N0 + 1)).
pub fn separable_fi_unbalanced(alpha: f64, n0: f64, energy: f64, v11_sq: f64) -> Result<f64> {
    if !(v11_sq > 0.0 && v11_sq <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "v11^2 = {v11_sq} outside (0, 1]"
        )));
    }
    if energy < 0.0 || n0 < 0.0 {
        return Err(Error::InvalidArgument(
            "energy and thermal occupation must be nonnegative".into(),
        ));
    }
    Ok(2.0
        * alpha
        * alpha
        * (v11_sq / (n0 + 1.0 + energy_shift(energy)) + (1.0 - v11_sq) / (n0 + 1.0)))
}

/// Which separable baseline the entanglement gain is taken against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EgMode {
    Balanced { n_modes: usize },
    Unbalanced { v11_sq: f64 },
}

/// Ratio of the optimal (possibly entangling) Gaussian measurement value to
/// the best separable strategy. Equals 1 at E = 0; as E grows it tends to 1
/// in the balanced case and to (2 N0 + 2) / (v11^2 + 2 N0 + 1) in the
/// unbalanced case.
pub fn entanglement_gain(alpha: f64, n0: f64, energy: f64, mode: EgMode) -> Result<f64> {
    let joint = gfi_closed_form(alpha, n0, energy);
    let separable = match mode {
        EgMode::Balanced { n_modes } => separable_fi_balanced(alpha, n0, energy, n_modes),
        EgMode::Unbalanced { v11_sq } => separable_fi_unbalanced(alpha, n0, energy, v11_sq)?,
    };
    Ok(joint / separable)
}

/// Entanglement entropy of the optimal two-mode seed at energy E:
/// g((sqrt(E + 1) - 1) / 2) with g(x) = (x+1) log2(x+1) - x log2 x and
/// g(0) = 0 by the 0 log 0 = 0 convention.
pub fn entanglement_entropy_of_optimal_seed(energy: f64) -> f64 {
    assert!(energy >= 0.0, "energy must be nonnegative");
    let x = ((energy + 1.0).sqrt() - 1.0) / 2.0;
    if x == 0.0 {
        0.0
    } else {
        (x + 1.0) * (x + 1.0).log2() - x * x.log2()
    }
}

/// Parameters of the seed that attains the constrained maximum at
/// theta = 0 for the isothermal symmetric probe: all energy squeezes one
/// mode (r1 = asinh sqrt(E)) mixed on a balanced beamsplitter.
pub fn optimal_measurement_params(energy: f64) -> MeasurementParams {
    assert!(energy >= 0.0, "energy must be nonnegative");
    MeasurementParams {
        r1: energy.sqrt().asinh(),
        r2: 0.0,
        zeta_mag: std::f64::consts::FRAC_PI_4,
        zeta_arg: 0.0,
        phi1: 0.0,
        phi2: 0.0,
    }
}

/// Fisher-information ratio of the measurement designed for theta = 0 when
/// the true phases are `thetas_true`, relative to the maximal value
/// 4 alpha^2 / (2 N0 + 1). At E = 0 it is the constant
/// (2 N0 + 1) / (2 N0 + 2); near the homodyne limit it peaks at 1 for
/// thetas_true = 0 and can approach 0 elsewhere.
pub fn fir(thetas_true: [f64; 2], alpha: f64, n0: f64, energy: f64) -> Result<f64> {
    let spec = ProbeSpec::symmetric_two_mode(alpha, n0)?;
    let m = Ecgm::from_params(&optimal_measurement_params(energy))?;
    let v = [
        std::f64::consts::FRAC_1_SQRT_2,
        -std::f64::consts::FRAC_1_SQRT_2,
    ];
    let achieved = linear_function_fi(&spec, &thetas_true, &m, &v)?;
    let maximal = 4.0 * alpha * alpha / (2.0 * n0 + 1.0);
    Ok(achieved / maximal)
}

/// Assemble the Fisher matrix, the rotated scalar for the direction `v1`,
/// and the matching quantum bound into one report.
pub fn fisher_report(
    spec: &ProbeSpec,
    thetas: &[f64],
    m: &Ecgm,
    v1: &[f64],
) -> Result<FisherReport> {
    let fisher = fisher_matrix(spec, thetas, m)?;
    let f_tilde_11 = linear_function_fi(spec, thetas, m, v1)?;
    let qfi = qfi_linear_function(spec, v1)?;
    Ok(FisherReport {
        fisher,
        f_tilde_11,
        qfi,
        notes: vec![
            "fisher: mean-derivative term only (probe covariance is phase-independent)".into(),
            "f_tilde_11: directional mean derivative against the outcome covariance".into(),
            "qfi: per-mode closed form".into(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecgm::MeasurementParams;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const V_DIFF: [f64; 2] = [
        std::f64::consts::FRAC_1_SQRT_2,
        -std::f64::consts::FRAC_1_SQRT_2,
    ];

    #[test]
    fn heterodyne_fisher_matrix() {
        let spec = ProbeSpec::symmetric_two_mode(1.0, 0.0).unwrap();
        let m = Ecgm::heterodyne(2).unwrap();
        let f = fisher_matrix(&spec, &[0.0, 0.0], &m).unwrap();
        assert_abs_diff_eq!(f[(0, 0)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[(1, 1)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_amplitude_gives_zero_fisher() {
        let spec = ProbeSpec::new(vec![0.0, 0.0], vec![0.3, 0.7]).unwrap();
        let m = Ecgm::from_params(
            &MeasurementParams::new(0.8, -0.3, 0.9, 0.4, 0.2, 0.1).unwrap(),
        )
        .unwrap();
        let f = fisher_matrix(&spec, &[0.5, -0.4], &m).unwrap();
        assert!(f.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn fisher_invariant_under_joint_rotation() {
        let spec = ProbeSpec::new(vec![1.0, 1.0], vec![0.2, 0.9]).unwrap();
        let m = Ecgm::from_params(
            &MeasurementParams::new(1.0, 0.2, 0.6, 0.0, 0.0, 0.0).unwrap(),
        )
        .unwrap();
        let f0 = fisher_matrix(&spec, &[0.0, 0.0], &m).unwrap();
        let thetas = [0.7, -1.3];
        let m_rot = m.counter_rotated(&thetas).unwrap();
        let f_rot = fisher_matrix(&spec, &thetas, &m_rot).unwrap();
        assert!((f0 - f_rot).iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn rotate_fisher_identity_and_rejection() {
        let f = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]);
        let id = DMatrix::identity(2, 2);
        let same = rotate_fisher(&f, &id).unwrap();
        assert_eq!(same, f);

        let skew = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(rotate_fisher(&f, &skew).is_err());
    }

    #[test]
    fn heterodyne_linear_fi_closed_form() {
        // 4 alpha^2 / (2 N0 + 2), independent of theta
        for (alpha, n0) in [(1.0, 0.0), (0.7, 0.4), (2.0, 1.3)] {
            let spec = ProbeSpec::symmetric_two_mode(alpha, n0).unwrap();
            let m = Ecgm::heterodyne(2).unwrap();
            for thetas in [[0.0, 0.0], [0.9, -0.4]] {
                let fi = linear_function_fi(&spec, &thetas, &m, &V_DIFF).unwrap();
                assert_relative_eq!(
                    fi,
                    4.0 * alpha * alpha / (2.0 * n0 + 2.0),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn qfi_cases() {
        let cold = ProbeSpec::symmetric_two_mode(1.0, 0.0).unwrap();
        assert_abs_diff_eq!(qfi_phase_difference(&cold).unwrap(), 4.0, epsilon = 1e-14);

        let warm = ProbeSpec::symmetric_two_mode(1.0, 0.5).unwrap();
        assert_abs_diff_eq!(qfi_phase_difference(&warm).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn sld_form_reproduces_qfi() {
        let spec = ProbeSpec::new(vec![1.1, 0.6], vec![0.0, 0.8]).unwrap();
        assert_abs_diff_eq!(
            sld_coefficients(&spec, &[0.0, 0.0]).unwrap().magnitudes[0],
            2.2,
            epsilon = 1e-14
        );
        // magnitude at N = 0, alpha = 1 is 2
        let unit = ProbeSpec::symmetric_two_mode(1.0, 0.0).unwrap();
        assert_abs_diff_eq!(
            sld_coefficients(&unit, &[0.0, 0.0]).unwrap().magnitudes[0],
            2.0,
            epsilon = 1e-15
        );

        for thetas in [[0.0, 0.0], [0.8, -0.3], [2.4, 1.9]] {
            let sld = sld_coefficients(&spec, &thetas).unwrap();
            let c = sld.quadrature_form.vector();
            let state = phase_shifted_probe(&spec, &thetas).unwrap();
            // tr(L^2 rho) for a centered linear form: c^t S c + (c^t m)^2
            let centered = c.dot(&(state.cov().matrix() * c));
            let mean_part = c.dot(state.mean().vector());
            assert_abs_diff_eq!(mean_part, 0.0, epsilon = 1e-12);
            assert_relative_eq!(
                centered,
                qfi_phase_difference(&spec).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn gfi_closed_form_values() {
        assert_abs_diff_eq!(gfi_closed_form(1.0, 0.0, 0.0), 2.0, epsilon = 1e-15);
        assert_relative_eq!(
            gfi_closed_form(1.0, 0.0, 4.0),
            2.0 / (5.0 - 20.0_f64.sqrt()),
            max_relative = 1e-13
        );
        assert!((gfi_closed_form(1.0, 0.0, 1e8) - 4.0).abs() < 1e-3);

        // stable rearrangement matches the naive formula at moderate E
        for e in [0.0_f64, 0.5, 1.0, 4.0, 16.0] {
            let naive = 2.0 / (1.0 + e - (e * e + e).sqrt());
            assert_relative_eq!(gfi_closed_form(1.0, 0.0, e), naive, max_relative = 1e-12);
        }

        // monotone in E
        let mut prev = 0.0;
        for k in 0..200 {
            let e = 0.1 * k as f64;
            let g = gfi_closed_form(0.8, 0.3, e);
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn separable_closed_form_values() {
        assert_relative_eq!(
            separable_fi_balanced(1.0, 0.0, 4.0, 2),
            2.0 / (3.0 - 6.0_f64.sqrt()),
            max_relative = 1e-13
        );
        // single mode is the unconstrained optimum
        assert_eq!(
            separable_fi_balanced(0.9, 0.2, 7.0, 1),
            gfi_closed_form(0.9, 0.2, 7.0)
        );

        // near the homodyne limit the first term saturates at
        // v11^2 / (N0 + 1/2)
        let sep = separable_fi_unbalanced(1.0, 0.0, 1e8, 0.5).unwrap();
        assert!((sep - 3.0).abs() < 1e-3);
        assert!(separable_fi_unbalanced(1.0, 0.0, 1.0, 0.0).is_err());
        assert!(separable_fi_unbalanced(1.0, 0.0, 1.0, 1.2).is_err());
    }

    #[test]
    fn entanglement_gain_asymptotes() {
        // heterodyne point: both strategies coincide exactly
        assert_eq!(
            entanglement_gain(1.0, 0.4, 0.0, EgMode::Balanced { n_modes: 5 }).unwrap(),
            1.0
        );
        let unbal = entanglement_gain(1.0, 0.0, 1e8, EgMode::Unbalanced { v11_sq: 0.5 })
            .unwrap();
        assert!((unbal - 4.0 / 3.0).abs() < 1e-3);
        for n in 2..=8 {
            let bal = entanglement_gain(1.0, 0.0, 1e8, EgMode::Balanced { n_modes: n })
                .unwrap();
            assert!((bal - 1.0).abs() < 1e-3);
        }
        // finite E with unbalanced v shows a genuine gain above 1
        let mid = entanglement_gain(1.0, 0.0, 4.0, EgMode::Unbalanced { v11_sq: 0.5 })
            .unwrap();
        assert!(mid > 1.0);
    }

    #[test]
    fn entropy_of_optimal_seed() {
        assert_eq!(entanglement_entropy_of_optimal_seed(0.0), 0.0);
        let g_half = 1.5 * 1.5_f64.log2() - 0.5 * 0.5_f64.log2();
        assert_abs_diff_eq!(
            entanglement_entropy_of_optimal_seed(3.0),
            g_half,
            epsilon = 1e-12
        );
        let mut prev = -1.0;
        for k in 0..100 {
            let h = entanglement_entropy_of_optimal_seed(0.25 * k as f64);
            assert!(h > prev);
            prev = h;
        }
    }

    #[test]
    fn fir_cases() {
        // E = 0: constant (2 N0 + 1) / (2 N0 + 2) for any true phases
        for n0 in [0.0, 0.7] {
            let expected = (2.0 * n0 + 1.0) / (2.0 * n0 + 2.0);
            for th in [[0.0, 0.0], [1.2, -2.1], [3.0, 0.4]] {
                let r = fir(th, 1.0, n0, 0.0).unwrap();
                assert_abs_diff_eq!(r, expected, epsilon = 1e-12);
            }
        }

        // near the homodyne limit the designed point is optimal...
        let peak = fir([0.0, 0.0], 1.0, 0.0, 1e8).unwrap();
        assert!((peak - 1.0).abs() < 1e-3);
        // ...and a quarter-turn on both phases kills the information
        let trough = fir(
            [std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2],
            1.0,
            0.0,
            1e8,
        )
        .unwrap();
        assert!(trough < 1e-6);
    }

    #[test]
    fn optimal_params_attain_closed_form() {
        for e in [0.0, 0.5, 1.0, 4.0, 16.0, 1e4] {
            let spec = ProbeSpec::symmetric_two_mode(1.0, 0.25).unwrap();
            let m = Ecgm::from_params(&optimal_measurement_params(e)).unwrap();
            let fi = linear_function_fi(&spec, &[0.0, 0.0], &m, &V_DIFF).unwrap();
            assert_relative_eq!(fi, gfi_closed_form(1.0, 0.25, e), max_relative = 1e-9);
        }
    }

    #[test]
    fn homodyne_limit_seed_reaches_quantum_bound() {
        let spec = ProbeSpec::symmetric_two_mode(1.0, 0.0).unwrap();
        let m = Ecgm::homodyne_limit(
            2,
            &[std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2],
            1e8,
        )
        .unwrap();
        let fi = linear_function_fi(&spec, &[0.0, 0.0], &m, &V_DIFF).unwrap();
        assert!((fi - 4.0).abs() < 1e-3);
    }

    #[test]
    fn report_consistency() {
        let spec = ProbeSpec::symmetric_two_mode(1.0, 0.1).unwrap();
        let m = Ecgm::from_params(&optimal_measurement_params(2.0)).unwrap();
        let rep = fisher_report(&spec, &[0.0, 0.0], &m, &V_DIFF).unwrap();
        assert!(rep.f_tilde_11 <= rep.qfi + 1e-9);
        // report scalar agrees with rotating the full matrix; the second
        // basis column is the orthogonal sum direction
        let j = DMatrix::from_column_slice(2, 2, &[V_DIFF[0], V_DIFF[1], V_DIFF[0], -V_DIFF[1]]);
        let rotated = rotate_fisher(&rep.fisher, &j).unwrap();
        assert_relative_eq!(rotated[(0, 0)], rep.f_tilde_11, max_relative = 1e-10);
        assert!(!rep.notes.is_empty());
    }

    #[test]
    fn mc_score_covariance_cross_check() {
        // light version of the sampling oracle: empirical covariance of the
        // analytic log-density gradient
        use crate::ecgm::sample_outcomes;
        let spec = ProbeSpec::symmetric_two_mode(1.0, 0.0).unwrap();
        let m = Ecgm::heterodyne(2).unwrap();
        let thetas = [0.0, 0.0];
        let analytic = fisher_matrix(&spec, &thetas, &m).unwrap();

        let state = phase_shifted_probe(&spec, &thetas).unwrap();
        let sigma = state.cov().matrix() + m.cov_s().matrix();
        let inv = sigma.clone().try_inverse().unwrap();
        let derivs = super::mean_derivatives(&spec, &thetas);
        let samples = sample_outcomes(&state, &m, 100_000, 42).unwrap();
        let mut cov = DMatrix::zeros(2, 2);
        let mut mean = DVector::zeros(2);
        let scores: Vec<DVector<f64>> = samples
            .iter()
            .map(|w| {
                let resid = &inv * (w.vector() - state.mean().vector());
                derivs.transpose() * resid
            })
            .collect();
        for s in &scores {
            mean += s;
        }
        mean /= scores.len() as f64;
        for s in &scores {
            let d = s - &mean;
            cov += &d * d.transpose();
        }
        cov /= (scores.len() - 1) as f64;

        let scale = analytic.diagonal().max();
        for i in 0..2 {
            for j in 0..2 {
                assert!((cov[(i, j)] - analytic[(i, j)]).abs() < 0.05 * scale);
            }
        }
    }

    proptest! {
        #[test]
        fn prop_gfi_below_qfi(
            a1 in 0.2..1.5f64, a2 in -1.5..1.5f64,
            n1 in 0.0..1.5f64, n2 in 0.0..1.5f64,
            t1 in -3.0..3.0f64, t2 in -3.0..3.0f64,
            r1 in -2.0..2.0f64, r2 in -2.0..2.0f64,
            zeta in 0.0..std::f64::consts::FRAC_PI_2,
            arg in -3.0..3.0f64,
            w in 0.05..0.95f64,
        ) {
            let spec = ProbeSpec::new(vec![a1, a2], vec![n1, n2]).unwrap();
            let m = Ecgm::from_params(
                &MeasurementParams::new(r1, r2, zeta, arg, 0.0, 0.0).unwrap(),
            ).unwrap();
            let v = [w.sqrt(), -(1.0 - w).sqrt()];
            let fi = linear_function_fi(&spec, &[t1, t2], &m, &v).unwrap();
            let qfi = qfi_linear_function(&spec, &v).unwrap();
            prop_assert!(fi <= qfi + 1e-9);
        }

        #[test]
        fn prop_linear_fi_matches_rotated_matrix(
            a1 in 0.2..1.5f64, a2 in 0.2..1.5f64,
            n1 in 0.0..1.0f64, n2 in 0.0..1.0f64,
            t1 in -2.0..2.0f64, t2 in -2.0..2.0f64,
            r1 in -1.5..1.5f64, zeta in 0.0..1.5f64,
            w in 0.05..0.95f64,
        ) {
            let spec = ProbeSpec::new(vec![a1, a2], vec![n1, n2]).unwrap();
            let m = Ecgm::from_params(
                &MeasurementParams::new(r1, 0.1, zeta, 0.0, 0.0, 0.0).unwrap(),
            ).unwrap();
            let v = [w.sqrt(), (1.0 - w).sqrt()];
            let f = fisher_matrix(&spec, &[t1, t2], &m).unwrap();
            let basis = DMatrix::from_column_slice(2, 2, &[v[0], v[1], -v[1], v[0]]);
            let rotated = rotate_fisher(&f, &basis).unwrap();
            let direct = linear_function_fi(&spec, &[t1, t2], &m, &v).unwrap();
            prop_assert!((rotated[(0, 0)] - direct).abs() < 1e-10 * (1.0 + direct));
        }
    }
}
