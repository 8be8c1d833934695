//! Monte-Carlo check that the computed Fisher information is statistically
//! achievable: sample outcomes, run maximum-likelihood estimation of the
//! linear function of interest, and compare the empirical variance across
//! repetitions to the Cramer-Rao bound 1 / (M F).
//!
//! Estimation is restricted to the single parameter of interest along v1
//! with the other directions pinned at their prior values; that matches the
//! single-parameter bound being tested. A free-running full-vector variant
//! is available for comparison.

use nalgebra::DVector;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::ecgm::{sample_outcomes_rng, Ecgm, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::fisher::linear_function_fi;
use crate::optimizer::maximize_simplex;
use crate::probes::{phase_shifted_probe, ProbeSpec};
use crate::symplectic::PhaseSpaceVector;

/// Estimates stay within this window of the initial guess along v1; the
/// phase map is only locally identifiable.
pub const LINE_HALF_WIDTH: f64 = std::f64::consts::FRAC_PI_4;

/// Tolerance of the one-dimensional likelihood maximization in theta.
pub const LINE_TOL: f64 = 1e-10;

/// Result of one Cramer-Rao saturation experiment.
#[derive(Clone, Debug, serde::Serialize)]
pub struct McReport {
    pub m_samples: usize,
    pub repetitions: usize,
    pub empirical_variance: f64,
    pub crb: f64,
    pub ratio: f64,
    pub mean_estimate: f64,
    pub seed: u64,
}

fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut w = a.rem_euclid(tau);
    if w > std::f64::consts::PI {
        w -= tau;
    }
    w
}

fn check_unit(v: &[f64]) -> Result<()> {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector, got norm {norm}"
        )));
    }
    Ok(())
}

/// Joint log likelihood of `outcomes` under the measurement model at the
/// phases `thetas`.
pub fn log_likelihood(
    thetas: &[f64],
    outcomes: &[PhaseSpaceVector],
    spec: &ProbeSpec,
    m: &Ecgm,
) -> Result<f64> {
    let state = phase_shifted_probe(spec, thetas)?;
    let dist = OutcomeDistribution::new(&state, m)?;
    let mut total = 0.0;
    for w in outcomes {
        if w.len() != 2 * spec.n_modes() {
            return Err(Error::DimensionMismatch(format!(
                "outcome length {} for a {}-mode model",
                w.len(),
                spec.n_modes()
            )));
        }
        total += dist.log_density(w.vector());
    }
    Ok(total)
}

/// Sufficient statistics for the likelihood in a model whose outcome
/// covariance does not depend on theta: only the mean moves, so
/// sum_i log p(w_i; theta) = M log_norm - (S2 - 2 mu^t A S1 + M mu^t A mu)/2
/// with A the inverse outcome covariance.
struct LineLikelihood<'a> {
    spec: &'a ProbeSpec,
    inv: nalgebra::DMatrix<f64>,
    s1: DVector<f64>,
    s2: f64,
    count: f64,
}

impl<'a> LineLikelihood<'a> {
    fn new(
        outcomes: &[DVector<f64>],
        spec: &'a ProbeSpec,
        m: &Ecgm,
        thetas_ref: &[f64],
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidArgument("need at least one outcome".into()));
        }
        let state = phase_shifted_probe(spec, thetas_ref)?;
        let dist = OutcomeDistribution::new(&state, m)?;
        let d = 2 * spec.n_modes();
        let mut s1 = DVector::zeros(d);
        let mut s2 = 0.0;
        for w in outcomes {
            if w.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "outcome length {} for a {}-mode model",
                    w.len(),
                    spec.n_modes()
                )));
            }
            s1 += w;
            let mut quad = 0.0;
            for i in 0..d {
                for j in 0..d {
                    quad += w[i] * dist.inv[(i, j)] * w[j];
                }
            }
            s2 += quad;
        }
        Ok(Self {
            spec,
            inv: dist.inv,
            s1,
            s2,
            count: outcomes.len() as f64,
        })
    }

    /// Log likelihood up to the theta-independent normalization.
    fn at(&self, thetas: &[f64]) -> f64 {
        let mu = phase_shifted_probe(self.spec, thetas)
            .expect("reference thetas validated on construction")
            .mean()
            .vector()
            .clone();
        let a_mu = &self.inv * &mu;
        -0.5 * (self.s2 - 2.0 * a_mu.dot(&self.s1) + self.count * a_mu.dot(&mu))
    }
}

/// Golden-section bracketing of the maximum of `g` on [lo, hi], followed by
/// one parabolic refinement through the final bracket.
fn line_maximize(g: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    if !fc.is_finite() || !fd.is_finite() {
        return Err(Error::NonConvergence(
            "likelihood is not finite on the search interval".into(),
        ));
    }
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = g(d);
        }
    }
    let (x1, f1) = if fc > fd { (c, fc) } else { (d, fd) };
    // stationary point of the parabola through (a, fa), (x1, f1), (b, fb)
    let (fa, fb) = (g(a), g(b));
    let num = (x1 - a).powi(2) * (f1 - fb) - (x1 - b).powi(2) * (f1 - fa);
    let den = (x1 - a) * (f1 - fb) - (x1 - b) * (f1 - fa);
    if den != 0.0 {
        let vertex = x1 - 0.5 * num / den;
        if vertex.is_finite() && vertex > a && vertex < b && g(vertex) >= f1 {
            return Ok(vertex);
        }
    }
    Ok(x1)
}

fn mle_line(
    outcomes: &[DVector<f64>],
    spec: &ProbeSpec,
    m: &Ecgm,
    v1: &[f64],
    theta_init: &[f64],
) -> Result<f64> {
    let like = LineLikelihood::new(outcomes, spec, m, theta_init)?;
    let mut g = |s: f64| {
        let thetas: Vec<f64> = theta_init
            .iter()
            .zip(v1)
            .map(|(t, v)| t + s * v)
            .collect();
        like.at(&thetas)
    };
    let s_hat = line_maximize(&mut g, -LINE_HALF_WIDTH, LINE_HALF_WIDTH, LINE_TOL)?;
    let origin: f64 = theta_init.iter().zip(v1).map(|(t, v)| t * v).sum();
    Ok(wrap_angle(origin + s_hat))
}

/// Maximum-likelihood estimate of v1 . theta from `outcomes`, profiling the
/// likelihood along theta_init + s v1 with the other directions pinned at
/// the prior values. The estimate is reported in (-pi, pi].
pub fn mle_estimate(
    outcomes: &[PhaseSpaceVector],
    spec: &ProbeSpec,
    m: &Ecgm,
    v1: &[f64],
    theta_init: &[f64],
) -> Result<f64> {
    if v1.len() != spec.n_modes() || theta_init.len() != spec.n_modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} modes, got {} direction entries and {} initial angles",
            spec.n_modes(),
            v1.len(),
            theta_init.len()
        )));
    }
    check_unit(v1)?;
    let raw: Vec<DVector<f64>> = outcomes.iter().map(|w| w.vector().clone()).collect();
    mle_line(&raw, spec, m, v1, theta_init)
}

/// Full-vector maximum-likelihood estimate of all phases, by simplex ascent
/// of the joint likelihood from `theta_init`. Provided for comparison with
/// the pinned single-parameter estimator.
pub fn mle_estimate_full(
    outcomes: &[PhaseSpaceVector],
    spec: &ProbeSpec,
    m: &Ecgm,
    theta_init: &[f64],
) -> Result<Vec<f64>> {
    if theta_init.len() != spec.n_modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} initial angles for {} modes",
            theta_init.len(),
            spec.n_modes()
        )));
    }
    let raw: Vec<DVector<f64>> = outcomes.iter().map(|w| w.vector().clone()).collect();
    let like = LineLikelihood::new(&raw, spec, m, theta_init)?;
    let mut f = |thetas: &[f64]| like.at(thetas);
    let steps = vec![0.05; theta_init.len()];
    let outcome = maximize_simplex(
        &mut f,
        theta_init,
        &steps,
        200 * theta_init.len(),
        LINE_TOL,
    );
    if !outcome.converged {
        return Err(Error::NonConvergence(
            "full-vector likelihood ascent hit the iteration limit".into(),
        ));
    }
    Ok(outcome.x.iter().map(|t| wrap_angle(*t)).collect())
}

/// Run `reps` independent experiments of `m_samples` outcomes each, sampled
/// at `thetas_true`, estimate v1 . theta in every repetition, and compare
/// the empirical estimator variance to the Cramer-Rao bound
/// 1 / (m_samples * F). Repetition r draws from the substream (seed, r+1),
/// so reports are reproducible and independent of scheduling.
pub fn crb_experiment(
    spec: &ProbeSpec,
    thetas_true: &[f64],
    m: &Ecgm,
    v1: &[f64],
    m_samples: usize,
    reps: usize,
    seed: u64,
) -> Result<McReport> {
    if m_samples < 1_000 {
        return Err(Error::InvalidArgument(
            "need at least 1000 samples per repetition".into(),
        ));
    }
    if reps < 100 {
        return Err(Error::InvalidArgument(
            "need at least 100 repetitions".into(),
        ));
    }
    check_unit(v1)?;
    let fi = linear_function_fi(spec, thetas_true, m, v1)?;
    if fi <= 0.0 {
        return Err(Error::InvalidArgument(
            "Fisher information vanishes; the bound is undefined".into(),
        ));
    }
    let crb = 1.0 / (m_samples as f64 * fi);

    let state = phase_shifted_probe(spec, thetas_true)?;
    let dist = OutcomeDistribution::new(&state, m)?;

    let estimates: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64 + 1);
            let outcomes = sample_outcomes_rng(&dist, m_samples, &mut rng);
            mle_line(&outcomes, spec, m, v1, thetas_true).map_err(|e| Error::Repetition {
                rep,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;

    let mean = estimates.iter().sum::<f64>() / reps as f64;
    let empirical_variance =
        estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    Ok(McReport {
        m_samples,
        repetitions: reps,
        empirical_variance,
        crb,
        ratio: empirical_variance / crb,
        mean_estimate: mean,
        seed,
    })
}
