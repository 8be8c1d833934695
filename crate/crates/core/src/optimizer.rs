//! Constrained maximization of the linear-function Fisher information over
//! measurement seeds: the general pure two-mode seed, the separable N-mode
//! seed, and the two-axis thermal-noise sweep.
//!
//! The energy constraint sum_j sinh^2(r_j) = E is eliminated by a split
//! fraction t (r1 = asinh sqrt(tE), r2 = asinh sqrt((1-t)E)); bounded
//! parameters are mapped through sin^2 so boundary optima become interior
//! stationary points of the search coordinates. A deterministic coarse grid
//! over (t, |zeta|) seeds a derivative-free simplex refinement.

use rayon::prelude::*;

use crate::ecgm::{Ecgm, MeasurementParams};
use crate::error::{Error, Result};
use crate::fisher::linear_function_fi;
use crate::probes::ProbeSpec;

const FRAC_PI_2: f64 = std::f64::consts::FRAC_PI_2;

/// Convergence threshold on the simplex diameter in search coordinates.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Relative tolerance used to recognize tied maximizers.
const TIE_TOL: f64 = 1e-9;

/// Seed description reported by an optimization.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(tag = "seed", rename_all = "snake_case")]
pub enum SeedParams {
    TwoMode(MeasurementParams),
    Separable { squeezings: Vec<f64> },
}

/// Maximizer, value, and bookkeeping of one constrained optimization.
#[derive(Clone, Debug, serde::Serialize)]
pub struct OptimizationResult {
    pub best_params: SeedParams,
    pub best_value: f64,
    pub objective_evals: u64,
    pub converged: bool,
}

pub(crate) struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: u64,
    pub converged: bool,
}

/// Deterministic Nelder-Mead ascent (maximization). Converges when the
/// simplex diameter drops below `tol` or after `max_iters` iterations.
pub(crate) fn maximize_simplex(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    max_iters: usize,
    tol: f64,
) -> SimplexOutcome {
    let dim = x0.len();
    let mut evals: u64 = 0;
    let mut eval = |x: &[f64], evals: &mut u64| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            -v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let diameter = |s: &[(Vec<f64>, f64)]| -> f64 {
        let mut d: f64 = 0.0;
        for a in s {
            for b in s {
                let dist = a
                    .0
                    .iter()
                    .zip(&b.0)
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                d = d.max(dist);
            }
        }
        d
    };

    let mut converged = false;
    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        if diameter(&simplex) < tol {
            converged = true;
            break;
        }
        let worst = simplex[dim].clone();
        let second_worst = simplex[dim - 1].1;
        let best = simplex[0].1;

        let mut centroid = vec![0.0; dim];
        for (x, _) in simplex.iter().take(dim) {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let blend = |a: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + a * (c - w))
                .collect()
        };

        let reflected = blend(1.0);
        let fr = eval(&reflected, &mut evals);
        if fr < best {
            let expanded = blend(2.0);
            let fe = eval(&expanded, &mut evals);
            simplex[dim] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < second_worst {
            simplex[dim] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 {
                blend(0.5)
            } else {
                blend(-0.5)
            };
            let fc = eval(&contracted, &mut evals);
            if fc < worst.1.min(fr) {
                simplex[dim] = (contracted, fc);
            } else {
                // shrink toward the best vertex
                let anchor = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = entry
                        .0
                        .iter()
                        .zip(&anchor)
                        .map(|(xi, ai)| ai + 0.5 * (xi - ai))
                        .collect();
                    let v = eval(&x, &mut evals);
                    *entry = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    SimplexOutcome {
        x: simplex[0].0.clone(),
        value: -simplex[0].1,
        evals,
        converged,
    }
}

fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut w = a.rem_euclid(tau);
    if w > std::f64::consts::PI {
        w -= tau;
    }
    w
}

/// Fisher information of the phase difference for a path-symmetric probe
/// measured with the pure two-mode seed `params`. At theta = 0, phi = 0,
/// equal occupations, and real zeta this reduces to
/// 2 a^2 sum_j (1 +/- sin 2|zeta|) / (2 N0 + 1 + e^{-2 r_j}).
pub fn objective_two_mode(
    params: &MeasurementParams,
    alpha: f64,
    n0_pair: (f64, f64),
    thetas: (f64, f64),
) -> Result<f64> {
    let spec = ProbeSpec::new(vec![alpha, alpha], vec![n0_pair.0, n0_pair.1])?;
    let m = Ecgm::from_params(params)?;
    linear_function_fi(
        &spec,
        &[thetas.0, thetas.1],
        &m,
        &[
            std::f64::consts::FRAC_1_SQRT_2,
            -std::f64::consts::FRAC_1_SQRT_2,
        ],
    )
}

fn params_from_search(x: &[f64], energy: f64) -> MeasurementParams {
    let t = x[0].sin().powi(2);
    let zeta_mag = FRAC_PI_2 * x[1].sin().powi(2);
    MeasurementParams {
        r1: (t * energy).sqrt().asinh(),
        r2: ((1.0 - t) * energy).max(0.0).sqrt().asinh(),
        zeta_mag,
        zeta_arg: x[2],
        phi1: x[3],
        phi2: x[4],
    }
}

/// Relabel the two seed modes. Leaves the seed covariance family invariant;
/// used to break ties in favor of r1 >= r2.
fn swap_modes(p: &MeasurementParams) -> MeasurementParams {
    MeasurementParams {
        r1: p.r2,
        r2: p.r1,
        zeta_mag: p.zeta_mag,
        zeta_arg: wrap_angle(std::f64::consts::PI - p.zeta_arg),
        phi1: p.phi2,
        phi2: p.phi1,
    }
}

pub(crate) fn optimize_two_mode_seeded(
    alpha: f64,
    n0_pair: (f64, f64),
    thetas: (f64, f64),
    energy: f64,
    phi_init: (f64, f64),
) -> Result<OptimizationResult> {
    if !alpha.is_finite() || !thetas.0.is_finite() || !thetas.1.is_finite() {
        return Err(Error::InvalidArgument(
            "amplitude and phases must be finite".into(),
        ));
    }
    if !(energy.is_finite() && energy >= 0.0) {
        return Err(Error::InvalidArgument(
            "seed energy must be nonnegative".into(),
        ));
    }
    if n0_pair.0 < 0.0 || n0_pair.1 < 0.0 {
        return Err(Error::InvalidArgument(
            "thermal occupations must be nonnegative".into(),
        ));
    }

    if energy == 0.0 {
        // degenerate shell: the seed is the vacuum whatever the angles
        let params = MeasurementParams::zero();
        let value = objective_two_mode(&params, alpha, n0_pair, thetas)?;
        return Ok(OptimizationResult {
            best_params: SeedParams::TwoMode(params),
            best_value: value,
            objective_evals: 1,
            converged: true,
        });
    }

    let mut evals: u64 = 0;
    let mut best = (f64::NEG_INFINITY, [0.0_f64; 5]);
    const GRID: usize = 33;
    for it in 0..GRID {
        let t = it as f64 / (GRID - 1) as f64;
        for iz in 0..GRID {
            let zeta = FRAC_PI_2 * iz as f64 / (GRID - 1) as f64;
            let x = [
                t.sqrt().asin(),
                (zeta / FRAC_PI_2).sqrt().asin(),
                0.0,
                phi_init.0,
                phi_init.1,
            ];
            let params = params_from_search(&x, energy);
            evals += 1;
            let v = objective_two_mode(&params, alpha, n0_pair, thetas)?;
            if v > best.0 {
                best = (v, x);
            }
        }
    }

    let mut obj = |x: &[f64]| -> f64 {
        let params = params_from_search(x, energy);
        objective_two_mode(&params, alpha, n0_pair, thetas).unwrap_or(f64::NEG_INFINITY)
    };
    let steps = [0.12, 0.12, 0.2, 0.2, 0.2];
    let outcome = maximize_simplex(&mut obj, &best.1, &steps, 200 * 5, SIMPLEX_TOL);
    evals += outcome.evals;

    let mut params = params_from_search(&outcome.x, energy);
    params.zeta_arg = wrap_angle(params.zeta_arg);
    params.phi1 = wrap_angle(params.phi1);
    params.phi2 = wrap_angle(params.phi2);
    let mut value = objective_two_mode(&params, alpha, n0_pair, thetas)?;
    evals += 1;

    // tie-breaking: prefer the labeling with the larger r1
    if params.r2 > params.r1 {
        let swapped = swap_modes(&params);
        let swapped_value = objective_two_mode(&swapped, alpha, n0_pair, thetas)?;
        evals += 1;
        if (swapped_value - value).abs() <= TIE_TOL * (1.0 + value.abs()) {
            params = swapped;
            value = swapped_value.max(value);
        }
    }

    Ok(OptimizationResult {
        best_params: SeedParams::TwoMode(params),
        best_value: value,
        objective_evals: evals,
        converged: outcome.converged,
    })
}

/// Maximize the phase-difference Fisher information over pure two-mode
/// seeds of energy E. The search runs over the energy split, beamsplitter
/// angle and argument, and mode phases; phases are seeded at the
/// counter-rotated values (-theta_j) and remain free.
pub fn optimize_two_mode(
    alpha: f64,
    n0_pair: (f64, f64),
    thetas: (f64, f64),
    energy: f64,
) -> Result<OptimizationResult> {
    optimize_two_mode_seeded(alpha, n0_pair, thetas, energy, (-thetas.0, -thetas.1))
}

/// Energy weights from unconstrained stick-breaking angles: each link takes
/// a sin^2 share of what remains, so every simplex vertex is an interior
/// stationary point of the search coordinates.
fn stick_weights(gammas: &[f64]) -> Vec<f64> {
    let mut weights = Vec::with_capacity(gammas.len() + 1);
    let mut remaining = 1.0;
    for g in gammas {
        let s = g.sin().powi(2);
        weights.push(remaining * s);
        remaining *= 1.0 - s;
    }
    weights.push(remaining);
    weights
}

/// Best separable strategy value for squeezing allocation `rs`:
/// sum_j 2 v_j^2 a_j^2 / (N_j + 1/2 + e^{-2 r_j}/2), each mode squeezed
/// along its phase-rotated mean derivative.
fn separable_value(rs: &[f64], alphas: &[f64], n0s: &[f64], v1: &[f64]) -> f64 {
    rs.iter()
        .zip(alphas)
        .zip(n0s)
        .zip(v1)
        .map(|(((r, a), n), v)| {
            2.0 * v * v * a * a / (n + 0.5 + 0.5 * (-2.0 * r).exp())
        })
        .sum()
}

/// Maximize the linear-function Fisher information over separable seeds of
/// total energy E: per-mode squeezings on the energy simplex, each aligned
/// with its mode's phase-rotated mean derivative.
pub fn optimize_separable(
    alphas: &[f64],
    n0s: &[f64],
    thetas: &[f64],
    energy: f64,
    v1: &[f64],
) -> Result<OptimizationResult> {
    let spec = ProbeSpec::new(alphas.to_vec(), n0s.to_vec())?;
    let n = spec.n_modes();
    if thetas.len() != n || v1.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} modes, got {} angles and {} direction entries",
            thetas.len(),
            v1.len()
        )));
    }
    let norm: f64 = v1.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector, got norm {norm}"
        )));
    }
    if !(energy.is_finite() && energy >= 0.0) {
        return Err(Error::InvalidArgument(
            "seed energy must be nonnegative".into(),
        ));
    }

    let finish = |rs: Vec<f64>, value: f64, evals: u64, converged: bool| OptimizationResult {
        best_params: SeedParams::Separable { squeezings: rs },
        best_value: value,
        objective_evals: evals,
        converged,
    };

    if energy == 0.0 {
        let rs = vec![0.0; n];
        let value = separable_value(&rs, alphas, n0s, v1);
        return Ok(finish(rs, value, 1, true));
    }
    if n == 1 {
        let rs = vec![energy.sqrt().asinh()];
        let value = separable_value(&rs, alphas, n0s, v1);
        return Ok(finish(rs, value, 1, true));
    }

    let rs_from = |gammas: &[f64]| -> Vec<f64> {
        stick_weights(gammas)
            .iter()
            .map(|w| (w * energy).max(0.0).sqrt().asinh())
            .collect()
    };
    let mut obj = |gammas: &[f64]| -> f64 {
        separable_value(&rs_from(gammas), alphas, n0s, v1)
    };

    // equal-allocation start
    let init: Vec<f64> = (0..n - 1)
        .map(|j| (1.0 / (n - j) as f64).sqrt().asin())
        .collect();
    let steps = vec![0.2; n - 1];
    let outcome = maximize_simplex(&mut obj, &init, &steps, 200 * (n - 1), SIMPLEX_TOL);

    let rs = rs_from(&outcome.x);
    Ok(finish(rs, outcome.value, outcome.evals, outcome.converged))
}

/// Constrained two-mode maxima over a grid of per-mode thermal occupations
/// at theta = 0. Cell (i, j) holds the maximum for occupations
/// (n1_grid[i], n2_grid[j]); cells are evaluated in parallel and any
/// non-convergence aborts with the cell coordinates.
pub fn noniso_sweep(
    n1_grid: &[f64],
    n2_grid: &[f64],
    alpha: f64,
    energy: f64,
) -> Result<nalgebra::DMatrix<f64>> {
    if n1_grid.is_empty() || n2_grid.is_empty() {
        return Err(Error::InvalidArgument("grids must be nonempty".into()));
    }
    let cols = n2_grid.len();
    let cells: Vec<f64> = (0..n1_grid.len() * cols)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / cols, k % cols);
            let cell_err = |source: Error| Error::SweepCell {
                row: i,
                col: j,
                source: Box::new(source),
            };
            let res = optimize_two_mode(alpha, (n1_grid[i], n2_grid[j]), (0.0, 0.0), energy)
                .map_err(cell_err)?;
            if !res.converged {
                return Err(cell_err(Error::NonConvergence(
                    "simplex refinement hit the iteration limit".into(),
                )));
            }
            Ok(res.best_value)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(nalgebra::DMatrix::from_row_slice(
        n1_grid.len(),
        cols,
        &cells,
    ))
}
