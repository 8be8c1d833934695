//! Phase-space linear algebra for N-mode bosonic Gaussian states.
//!
//! Conventions (hbar = 1):
//! - quadratures are ordered (q1, p1, ..., qN, pN) and states use column
//!   mean vectors;
//! - the vacuum covariance is I/2;
//! - the symplectic form is built from 2x2 blocks ((0, 1), (-1, 0)).

use nalgebra::{Complex, DMatrix, DVector};

use crate::ecgm::MeasurementParams;
use crate::error::{Error, Result};

/// Tolerance for structural identities (symplecticity, uncertainty floor,
/// purity). Scaled by the matrix magnitude where squeezing can make entries
/// large; double precision cannot hold an absolute 1e-9 at norms ~1e8.
pub const STRUCTURAL_TOL: f64 = 1e-9;

/// Tolerance for symmetry of covariance matrices (also scale-aware).
pub const SYMMETRY_TOL: f64 = 1e-10;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Column vector of 2N phase-space coordinates, ordered (q1, p1, ..., qN, pN).
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceVector(DVector<f64>);

impl PhaseSpaceVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || entries.len() % 2 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "phase-space vector needs an even, positive length, got {}",
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "phase-space vector entries must be finite".into(),
            ));
        }
        Ok(Self(DVector::from_vec(entries)))
    }

    pub fn zeros(n_modes: usize) -> Self {
        Self(DVector::zeros(2 * n_modes))
    }

    pub(crate) fn from_vector(v: DVector<f64>) -> Self {
        debug_assert!(v.len() % 2 == 0);
        Self(v)
    }

    pub fn n_modes(&self) -> usize {
        self.0.len() / 2
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl std::ops::Index<usize> for PhaseSpaceVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Real 2N x 2N covariance matrix of a Gaussian state.
///
/// Valid covariances are symmetric and satisfy the uncertainty relation
/// `S + (i/2) D >= 0` with `D` the symplectic form. The constructor checks
/// both and symmetrizes the stored matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if let Some(reason) = covariance_defect(&mat) {
            return Err(Error::InvalidCovariance(reason));
        }
        let sym = 0.5 * (&mat + mat.transpose());
        Ok(Self(sym))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Symplectic eigenvalues: the moduli of the (paired) eigenvalues of
    /// `D * S`, one per mode. Vacuum and any pure state give all 1/2.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let n = self.n_modes();
        let delta = symplectic_form_matrix(n);
        let prod = &delta * &self.0;
        let eigs = prod.complex_eigenvalues();
        let mut moduli: Vec<f64> = eigs.iter().map(|c| c.norm()).collect();
        moduli.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // eigenvalues come in +/- i nu pairs; keep one per pair
        moduli.into_iter().skip(1).step_by(2).collect()
    }

    /// Mean photon number of a centered state with this covariance:
    /// (1/2) tr S - N/2.
    pub fn mean_photon_number(&self) -> f64 {
        0.5 * self.0.trace() - self.n_modes() as f64 / 2.0
    }
}

/// Real 2N x 2N matrix T with T^t D T = D.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix(DMatrix<f64>);

impl SymplecticMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        match symplectic_defect(&mat) {
            None => Ok(Self(mat)),
            Some(defect) => Err(Error::NotSymplectic { defect }),
        }
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Conjugate a covariance: T S T^t.
    pub fn conjugate(&self, cov: &CovarianceMatrix) -> Result<CovarianceMatrix> {
        if cov.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "covariance dim {} vs symplectic dim {}",
                cov.dim(),
                self.dim()
            )));
        }
        CovarianceMatrix::new(&self.0 * cov.matrix() * self.0.transpose())
    }
}

impl std::ops::Mul for &SymplecticMatrix {
    type Output = SymplecticMatrix;
    fn mul(self, rhs: &SymplecticMatrix) -> SymplecticMatrix {
        SymplecticMatrix(&self.0 * &rhs.0)
    }
}

fn symplectic_form_matrix(n_modes: usize) -> DMatrix<f64> {
    let d = 2 * n_modes;
    let mut m = DMatrix::zeros(d, d);
    for j in 0..n_modes {
        m[(2 * j, 2 * j + 1)] = 1.0;
        m[(2 * j + 1, 2 * j)] = -1.0;
    }
    m
}

/// The symplectic form D on N modes: 2x2 blocks ((0, 1), (-1, 0)).
/// D^t = -D and D^2 = -I.
pub fn symplectic_form(n_modes: usize) -> Result<SymplecticMatrix> {
    if n_modes == 0 {
        return Err(Error::InvalidArgument(
            "mode count must be at least 1".into(),
        ));
    }
    Ok(SymplecticMatrix(symplectic_form_matrix(n_modes)))
}

/// Returns the max-abs defect of T^t D T - D if T fails the symplectic test.
fn symplectic_defect(mat: &DMatrix<f64>) -> Option<f64> {
    if mat.nrows() != mat.ncols() || mat.nrows() == 0 || mat.nrows() % 2 != 0 {
        return Some(f64::INFINITY);
    }
    if mat.iter().any(|x| !x.is_finite()) {
        return Some(f64::INFINITY);
    }
    let n = mat.nrows() / 2;
    let delta = symplectic_form_matrix(n);
    let residual = mat.transpose() * &delta * mat - &delta;
    let defect = max_abs(&residual);
    let scale = max_abs(mat);
    if defect < STRUCTURAL_TOL * (1.0 + scale * scale) {
        None
    } else {
        Some(defect)
    }
}

pub fn is_symplectic(mat: &DMatrix<f64>) -> bool {
    symplectic_defect(mat).is_none()
}

fn covariance_defect(mat: &DMatrix<f64>) -> Option<String> {
    if mat.nrows() != mat.ncols() || mat.nrows() == 0 || mat.nrows() % 2 != 0 {
        return Some(format!("shape {}x{} is not 2Nx2N", mat.nrows(), mat.ncols()));
    }
    if mat.iter().any(|x| !x.is_finite()) {
        return Some("entries must be finite".into());
    }
    let scale = 1.0 + max_abs(mat);
    let asym = max_abs(&(mat - mat.transpose()));
    if asym > SYMMETRY_TOL * scale {
        return Some(format!("asymmetry {asym:.3e} exceeds tolerance"));
    }
    // uncertainty relation: S + (i/2) D must be positive semidefinite
    let n = mat.nrows() / 2;
    let delta = symplectic_form_matrix(n);
    let herm = DMatrix::<Complex<f64>>::from_fn(mat.nrows(), mat.ncols(), |i, j| {
        Complex::new(mat[(i, j)], 0.5 * delta[(i, j)])
    });
    let eigs = herm.symmetric_eigen().eigenvalues;
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -STRUCTURAL_TOL * scale {
        return Some(format!(
            "uncertainty relation violated: min eigenvalue {min_eig:.3e}"
        ));
    }
    None
}

pub fn is_valid_covariance(mat: &DMatrix<f64>) -> bool {
    covariance_defect(mat).is_none()
}

/// Direct sum of the 2x2 rotations of each mode,
/// V_t = ((cos t, sin t), (-sin t, cos t)). Orthogonal and symplectic.
pub fn phase_rotation(thetas: &[f64]) -> Result<SymplecticMatrix> {
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("need at least one angle".into()));
    }
    if thetas.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("angles must be finite".into()));
    }
    let d = 2 * thetas.len();
    let mut m = DMatrix::zeros(d, d);
    for (j, &t) in thetas.iter().enumerate() {
        let (s, c) = t.sin_cos();
        m[(2 * j, 2 * j)] = c;
        m[(2 * j, 2 * j + 1)] = s;
        m[(2 * j + 1, 2 * j)] = -s;
        m[(2 * j + 1, 2 * j + 1)] = c;
    }
    Ok(SymplecticMatrix(m))
}

/// Covariance of a product of single-mode squeezed vacua,
/// diag(e^{-2 r1}/2, e^{2 r1}/2, ...). Positive r squeezes q.
/// Mean photon number is sum_j sinh^2(r_j).
pub fn squeezer_covariance(rs: &[f64]) -> CovarianceMatrix {
    assert!(
        !rs.is_empty() && rs.iter().all(|r| r.is_finite()),
        "squeezing parameters must be a nonempty finite list"
    );
    let d = 2 * rs.len();
    let mut m = DMatrix::zeros(d, d);
    for (j, &r) in rs.iter().enumerate() {
        m[(2 * j, 2 * j)] = 0.5 * (-2.0 * r).exp();
        m[(2 * j + 1, 2 * j + 1)] = 0.5 * (2.0 * r).exp();
    }
    CovarianceMatrix(m)
}

/// Two-mode beamsplitter with mixing angle |zeta| in [0, pi/2] and phase
/// arg(zeta). The mode-space unitary
/// ((cos|z|, e^{i arg} sin|z|), (-e^{-i arg} sin|z|, cos|z|))
/// is lifted entrywise to 2x2 phase-space blocks, giving the exact closed
/// form of the generator exponential. Orthogonal and symplectic.
pub fn beamsplitter(zeta_mag: f64, zeta_arg: f64) -> Result<SymplecticMatrix> {
    if !zeta_mag.is_finite() || !zeta_arg.is_finite() {
        return Err(Error::InvalidArgument(
            "beamsplitter angles must be finite".into(),
        ));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&zeta_mag) {
        return Err(Error::InvalidArgument(format!(
            "|zeta| = {zeta_mag} outside [0, pi/2]"
        )));
    }
    let (s, c) = zeta_mag.sin_cos();
    let (sa, ca) = zeta_arg.sin_cos();
    // complex entry u + i v lifts to ((u, -v), (v, u))
    let lift = |u: f64, v: f64| [[u, -v], [v, u]];
    let b11 = lift(c, 0.0);
    let b12 = lift(s * ca, s * sa);
    let b21 = lift(-s * ca, s * sa);
    let b22 = lift(c, 0.0);
    let mut m = DMatrix::zeros(4, 4);
    for (bi, block_row) in [[b11, b12], [b21, b22]].iter().enumerate() {
        for (bj, block) in block_row.iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    m[(2 * bi + i, 2 * bj + j)] = block[i][j];
                }
            }
        }
    }
    Ok(SymplecticMatrix(m))
}

/// Covariance of the pure two-mode seed built by squeezing the vacuum,
/// beamsplitting, then rotating: S = M (I/2) M^t with
/// M = phase_rotation(phi) * beamsplitter(zeta) * squeezer(r).
///
/// The squeezer here squeezes the p quadrature for positive r (per-mode
/// symplectic diag(e^r, e^{-r})), so that positive r_1 with |zeta| = pi/4
/// yields the receiver that attains the constrained Fisher-information
/// maximum. Mean photon number is sinh^2(r1) + sinh^2(r2) for any zeta, phi.
pub fn two_mode_pure_covariance(params: &MeasurementParams) -> Result<CovarianceMatrix> {
    let d = 4;
    let mut squeeze = DMatrix::zeros(d, d);
    for (j, r) in [params.r1, params.r2].iter().enumerate() {
        squeeze[(2 * j, 2 * j)] = r.exp();
        squeeze[(2 * j + 1, 2 * j + 1)] = (-r).exp();
    }
    let bs = beamsplitter(params.zeta_mag, params.zeta_arg)?;
    let rot = phase_rotation(&[params.phi1, params.phi2])?;
    let m = rot.matrix() * bs.matrix() * squeeze;
    CovarianceMatrix::new(0.5 * &m * m.transpose())
}
