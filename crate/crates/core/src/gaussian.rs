//! Gaussian and linear-algebra primitives shared by every equilibrium module:
//! validated covariance containers, sorted symmetric eigendecomposition,
//! least-mean-square (LMS) gains, Schur-complement conditioning,
//! pseudo-inverses, symmetric matrix square roots, and seeded joint sampling.
//!
//! Everything works on zero-mean jointly Gaussian variables, where the LMS
//! estimator is linear and determined entirely by covariances.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Relative tolerance for accepting a square matrix as symmetric.
pub const SYMMETRY_RTOL: f64 = 1e-12;

/// Relative tolerance for positive definiteness: the smallest eigenvalue must
/// exceed `PD_RTOL` times the largest.
pub const PD_RTOL: f64 = 1e-9;

/// Relative eigenvalue threshold below which a conditioning block counts as
/// singular.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Absolute floor used when deciding whether a vector component is "the first
/// nonzero one" during sign canonicalization of unit eigenvectors.
const CANONICAL_ATOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// SymMatrix
// ---------------------------------------------------------------------------

/// A square, finite, symmetric `f64` matrix.
///
/// Construction validates finiteness and symmetry (asymmetry up to
/// `SYMMETRY_RTOL` times the largest entry magnitude is repaired by
/// symmetrization, anything worse is rejected), so downstream code can rely
/// on exact symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Validates and wraps `m`, symmetrizing residual floating-point skew.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidDimensions(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(
                "matrix contains non-finite entries".into(),
            ));
        }
        let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())).max(1.0);
        let mut worst = 0.0_f64;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if worst > SYMMETRY_RTOL * scale {
            return Err(Error::InvalidMatrix(format!(
                "matrix is asymmetric: max |a_ij - a_ji| = {worst:.3e} exceeds tolerance"
            )));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self { m: sym })
    }

    /// Builds the zero matrix of side `n`.
    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    /// Builds the identity of side `n`.
    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    /// Side length.
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Borrows the underlying matrix.
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Consumes the wrapper, returning the underlying matrix.
    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Eigenvalue-based positive-definiteness check at `PD_RTOL`.
    pub fn is_positive_definite(&self) -> bool {
        if self.dim() == 0 {
            return true;
        }
        let eigs = self.m.clone().symmetric_eigen().eigenvalues;
        let max = eigs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let min = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        max > 0.0 && min > PD_RTOL * max
    }
}

impl std::ops::Deref for SymMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &Self::Target {
        &self.m
    }
}

// ---------------------------------------------------------------------------
// Eigen decomposition
// ---------------------------------------------------------------------------

/// One eigenvalue with its unit eigenvector.
#[derive(Debug, Clone)]
pub struct EigPair {
    /// Eigenvalue.
    pub value: f64,
    /// Unit eigenvector, sign-canonicalized so its first component larger
    /// than `1e-12` in magnitude is positive.
    pub vector: DVector<f64>,
}

/// Flips `v` so that its first component of magnitude above the
/// canonicalization floor is positive. Leaves (near-)zero vectors alone.
pub(crate) fn canonicalize_sign(v: &mut DVector<f64>) {
    for i in 0..v.len() {
        if v[i].abs() > CANONICAL_ATOL {
            if v[i] < 0.0 {
                v.neg_mut();
            }
            return;
        }
    }
}

/// Full symmetric eigendecomposition with eigenvalues sorted ascending and
/// canonicalized unit eigenvectors.
pub fn sorted_eigpairs(m: &SymMatrix) -> Vec<EigPair> {
    let n = m.dim();
    if n == 0 {
        return Vec::new();
    }
    let eig = m.as_matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .into_iter()
        .map(|i| {
            let mut v: DVector<f64> = eig.eigenvectors.column(i).into_owned();
            let norm = v.norm();
            if norm > 0.0 {
                v /= norm;
            }
            canonicalize_sign(&mut v);
            EigPair {
                value: eig.eigenvalues[i],
                vector: v,
            }
        })
        .collect()
}

/// The algebraically smallest eigenvalue of `m` with its canonicalized unit
/// eigenvector.
pub fn smallest_eigpair(m: &SymMatrix) -> Result<EigPair> {
    sorted_eigpairs(m)
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidDimensions("eigendecomposition of empty matrix".into()))
}

/// Reports whether the two smallest eigenvalues are within tie tolerance of
/// each other, i.e. the minimizing eigenvector is not unique.
pub fn smallest_eig_tied(pairs: &[EigPair]) -> bool {
    if pairs.len() < 2 {
        return false;
    }
    let scale = pairs
        .iter()
        .fold(1.0_f64, |acc, p| acc.max(p.value.abs()));
    (pairs[1].value - pairs[0].value).abs() <= 1e-9 * scale
}

// ---------------------------------------------------------------------------
// Symmetric inverses, square roots
// ---------------------------------------------------------------------------

/// Inverts a symmetric matrix through its eigendecomposition, failing with
/// `SingularConditioning` when the relative eigenvalue spread crosses
/// `SINGULAR_RTOL`. Empty matrices invert to empty matrices.
pub fn sym_inverse(m: &SymMatrix) -> Result<DMatrix<f64>> {
    let n = m.dim();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = m.as_matrix().clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    if max == 0.0 {
        return Err(Error::SingularConditioning("zero matrix".into()));
    }
    if eig.eigenvalues.iter().any(|&l| l.abs() <= SINGULAR_RTOL * max) {
        return Err(Error::SingularConditioning(format!(
            "eigenvalue magnitude below {SINGULAR_RTOL:e} of the largest"
        )));
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let inv = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    Ok((&inv + inv.transpose()) * 0.5)
}

fn pd_eigendecomposition(
    m: &SymMatrix,
    what: &str,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.dim();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let eig = m.as_matrix().clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if !(max > 0.0 && min > PD_RTOL * max) {
        return Err(Error::NotPositiveDefinite(format!(
            "{what}: eigenvalue range [{min:.3e}, {max:.3e}]"
        )));
    }
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// Symmetric positive-definite square root `S` with `S S = M`.
pub fn matrix_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let (vals, vecs) = pd_eigendecomposition(m, "matrix_sqrt")?;
    let s = &vecs * DMatrix::from_diagonal(&vals.map(f64::sqrt)) * vecs.transpose();
    SymMatrix::new((&s + s.transpose()) * 0.5)
}

/// Symmetric positive-definite inverse square root `S` with `S M S = I`.
pub fn inv_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let (vals, vecs) = pd_eigendecomposition(m, "inv_sqrt")?;
    let s = &vecs * DMatrix::from_diagonal(&vals.map(|l| 1.0 / l.sqrt())) * vecs.transpose();
    SymMatrix::new((&s + s.transpose()) * 0.5)
}

/// Moore-Penrose pseudo-inverse with singular values below
/// `max_dim * eps * sigma_max` treated as zero.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().fold(0.0_f64, |a, &b| a.max(b));
    if sigma_max == 0.0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let eps = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * sigma_max;
    svd.pseudo_inverse(eps)
        .expect("SVD computed with both factors")
}

// ---------------------------------------------------------------------------
// LMS estimation
// ---------------------------------------------------------------------------

/// LMS estimation gain of one variable from another, with the resulting
/// estimation-error covariance.
#[derive(Debug, Clone)]
pub struct LmsGain {
    /// Gain `K` so that the estimate is `K m` for measurement `m`.
    pub gain: DMatrix<f64>,
    /// Error covariance of `x - K m`.
    pub error_cov: DMatrix<f64>,
}

impl LmsGain {
    /// Trace of the error covariance (mean squared estimation error).
    pub fn error_trace(&self) -> f64 {
        self.error_cov.trace()
    }
}

/// LMS gain `K = V_xm V_mm^{-1}` and error covariance
/// `V_xx - V_xm V_mm^{-1} V_mx` for jointly Gaussian `(x, m)`.
///
/// An empty measurement (`V_mm` of side 0) yields the prior back.
pub fn lms_gain(
    v_xx: &DMatrix<f64>,
    v_xm: &DMatrix<f64>,
    v_mm: &DMatrix<f64>,
) -> Result<LmsGain> {
    let n_x = v_xx.nrows();
    let n_m = v_mm.nrows();
    if v_xx.ncols() != n_x || v_mm.ncols() != n_m || v_xm.nrows() != n_x || v_xm.ncols() != n_m {
        return Err(Error::InvalidDimensions(format!(
            "lms_gain blocks: V_xx {}x{}, V_xm {}x{}, V_mm {}x{}",
            v_xx.nrows(),
            v_xx.ncols(),
            v_xm.nrows(),
            v_xm.ncols(),
            v_mm.nrows(),
            v_mm.ncols()
        )));
    }
    if n_m == 0 {
        return Ok(LmsGain {
            gain: DMatrix::zeros(n_x, 0),
            error_cov: v_xx.clone(),
        });
    }
    let v_mm = SymMatrix::new(v_mm.clone())?;
    let inv = sym_inverse(&v_mm)?;
    let gain = v_xm * inv;
    let error = v_xx - &gain * v_xm.transpose();
    Ok(LmsGain {
        gain,
        error_cov: (&error + error.transpose()) * 0.5,
    })
}

/// Schur complement `A - B C^{-1} B^T`: the covariance of the first block of
/// a jointly Gaussian pair after conditioning on the second. An empty `C`
/// returns `A` unchanged.
pub fn schur_complement(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if c.nrows() == 0 {
        return Ok(a.clone());
    }
    if a.nrows() != a.ncols() || b.nrows() != a.nrows() || b.ncols() != c.nrows() {
        return Err(Error::InvalidDimensions(format!(
            "schur blocks: A {}x{}, B {}x{}, C {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    let c = SymMatrix::new(c.clone())?;
    let inv = sym_inverse(&c)?;
    let s = a - b * inv * b.transpose();
    Ok((&s + s.transpose()) * 0.5)
}

// ---------------------------------------------------------------------------
// JointGaussian
// ---------------------------------------------------------------------------

/// Which block of a [`JointGaussian`] to condition on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// The state `x`.
    X,
    /// The sensor's private bias `theta`.
    Theta,
    /// The side channel `y`.
    Y,
}

/// Zero-mean joint covariance of `(x, theta, y)`: the state, the sensor's
/// private bias term, and the receiver's side channel. `x` and `theta` share
/// a dimension; `y` may be empty (no side channel).
///
/// Construction validates block dimensions, symmetry of the diagonal blocks,
/// and positive definiteness of the assembled covariance.
#[derive(Debug, Clone)]
pub struct JointGaussian {
    n_x: usize,
    n_y: usize,
    v_xx: DMatrix<f64>,
    v_xtheta: DMatrix<f64>,
    v_xy: DMatrix<f64>,
    v_thetatheta: DMatrix<f64>,
    v_thetay: DMatrix<f64>,
    v_yy: DMatrix<f64>,
}

impl JointGaussian {
    /// Builds and validates a joint prior from its blocks.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        v_xx: DMatrix<f64>,
        v_xtheta: DMatrix<f64>,
        v_xy: DMatrix<f64>,
        v_thetatheta: DMatrix<f64>,
        v_thetay: DMatrix<f64>,
        v_yy: DMatrix<f64>,
    ) -> Result<Self> {
        let n_x = v_xx.nrows();
        let n_y = v_yy.nrows();
        let dims_ok = v_xx.ncols() == n_x
            && v_xtheta.shape() == (n_x, n_x)
            && v_thetatheta.shape() == (n_x, n_x)
            && v_xy.shape() == (n_x, n_y)
            && v_thetay.shape() == (n_x, n_y)
            && v_yy.shape() == (n_y, n_y);
        if !dims_ok {
            return Err(Error::InvalidDimensions(
                "joint prior blocks do not share consistent (n_x, n_y)".into(),
            ));
        }
        // Diagonal blocks must be symmetric on their own; SymMatrix also
        // screens non-finite entries. Off-diagonal blocks only need finiteness.
        let v_xx = SymMatrix::new(v_xx)?.into_matrix();
        let v_thetatheta = SymMatrix::new(v_thetatheta)?.into_matrix();
        let v_yy = SymMatrix::new(v_yy)?.into_matrix();
        for (name, b) in [
            ("V_xtheta", &v_xtheta),
            ("V_xy", &v_xy),
            ("V_thetay", &v_thetay),
        ] {
            if b.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidMatrix(format!(
                    "{name} contains non-finite entries"
                )));
            }
        }
        let joint = Self {
            n_x,
            n_y,
            v_xx,
            v_xtheta,
            v_xy,
            v_thetatheta,
            v_thetay,
            v_yy,
        };
        let assembled = SymMatrix::new(joint.assemble())?;
        if !assembled.is_positive_definite() {
            return Err(Error::NotPositiveDefinite(
                "assembled (x, theta, y) covariance".into(),
            ));
        }
        Ok(joint)
    }

    /// Prior without a side channel (`n_y = 0`).
    pub fn without_side_channel(
        v_xx: DMatrix<f64>,
        v_xtheta: DMatrix<f64>,
        v_thetatheta: DMatrix<f64>,
    ) -> Result<Self> {
        let n_x = v_xx.nrows();
        Self::new(
            v_xx,
            v_xtheta,
            DMatrix::zeros(n_x, 0),
            v_thetatheta,
            DMatrix::zeros(n_x, 0),
            DMatrix::zeros(0, 0),
        )
    }

    /// Scalar prior without a side channel.
    pub fn scalar(v_xx: f64, v_xtheta: f64, v_thetatheta: f64) -> Result<Self> {
        Self::without_side_channel(
            DMatrix::from_element(1, 1, v_xx),
            DMatrix::from_element(1, 1, v_xtheta),
            DMatrix::from_element(1, 1, v_thetatheta),
        )
    }

    /// State dimension `n_x`.
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Side-channel dimension `n_y` (0 when absent).
    pub fn n_y(&self) -> usize {
        self.n_y
    }

    /// `V_xx` block.
    pub fn v_xx(&self) -> &DMatrix<f64> {
        &self.v_xx
    }

    /// `V_xtheta` block.
    pub fn v_xtheta(&self) -> &DMatrix<f64> {
        &self.v_xtheta
    }

    /// `V_xy` block.
    pub fn v_xy(&self) -> &DMatrix<f64> {
        &self.v_xy
    }

    /// `V_thetatheta` block.
    pub fn v_thetatheta(&self) -> &DMatrix<f64> {
        &self.v_thetatheta
    }

    /// `V_thetay` block.
    pub fn v_thetay(&self) -> &DMatrix<f64> {
        &self.v_thetay
    }

    /// `V_yy` block.
    pub fn v_yy(&self) -> &DMatrix<f64> {
        &self.v_yy
    }

    /// Assembles the full `(2 n_x + n_y)` covariance in `(x, theta, y)` order.
    pub fn assemble(&self) -> DMatrix<f64> {
        let (n_x, n_y) = (self.n_x, self.n_y);
        let n = 2 * n_x + n_y;
        let mut full = DMatrix::zeros(n, n);
        full.view_mut((0, 0), (n_x, n_x)).copy_from(&self.v_xx);
        full.view_mut((0, n_x), (n_x, n_x)).copy_from(&self.v_xtheta);
        full.view_mut((0, 2 * n_x), (n_x, n_y)).copy_from(&self.v_xy);
        full.view_mut((n_x, 0), (n_x, n_x))
            .copy_from(&self.v_xtheta.transpose());
        full.view_mut((n_x, n_x), (n_x, n_x))
            .copy_from(&self.v_thetatheta);
        full.view_mut((n_x, 2 * n_x), (n_x, n_y))
            .copy_from(&self.v_thetay);
        full.view_mut((2 * n_x, 0), (n_y, n_x))
            .copy_from(&self.v_xy.transpose());
        full.view_mut((2 * n_x, n_x), (n_y, n_x))
            .copy_from(&self.v_thetay.transpose());
        full.view_mut((2 * n_x, 2 * n_x), (n_y, n_y)).copy_from(&self.v_yy);
        full
    }

    /// The `(x, theta)` covariance block, side `2 n_x`.
    pub fn xtheta_cov(&self) -> DMatrix<f64> {
        let n_x = self.n_x;
        let mut c = DMatrix::zeros(2 * n_x, 2 * n_x);
        c.view_mut((0, 0), (n_x, n_x)).copy_from(&self.v_xx);
        c.view_mut((0, n_x), (n_x, n_x)).copy_from(&self.v_xtheta);
        c.view_mut((n_x, 0), (n_x, n_x))
            .copy_from(&self.v_xtheta.transpose());
        c.view_mut((n_x, n_x), (n_x, n_x))
            .copy_from(&self.v_thetatheta);
        c
    }

    /// Stacked `[V_xy; V_thetay]` cross block, `(2 n_x) x n_y`.
    pub fn xtheta_y_cross(&self) -> DMatrix<f64> {
        let n_x = self.n_x;
        let mut c = DMatrix::zeros(2 * n_x, self.n_y);
        c.view_mut((0, 0), (n_x, self.n_y)).copy_from(&self.v_xy);
        c.view_mut((n_x, 0), (n_x, self.n_y)).copy_from(&self.v_thetay);
        c
    }

    /// Conditional covariance of `(x, theta)` given the side channel `y`
    /// (the full `(x, theta)` block when there is no side channel).
    pub fn conditional_xtheta_given_y(&self) -> Result<DMatrix<f64>> {
        schur_complement(&self.xtheta_cov(), &self.xtheta_y_cross(), &self.v_yy)
    }
}

/// Conditional covariance of the remaining two blocks of `joint` given the
/// selected block, in `(x, theta, y)` order with the selected block removed.
pub fn schur_conditional(joint: &JointGaussian, conditioned_on: Block) -> Result<DMatrix<f64>> {
    let n_x = joint.n_x;
    let n_y = joint.n_y;
    let full = joint.assemble();
    let (keep, drop): (Vec<usize>, Vec<usize>) = {
        let ranges = [
            (Block::X, 0..n_x),
            (Block::Theta, n_x..2 * n_x),
            (Block::Y, 2 * n_x..2 * n_x + n_y),
        ];
        let mut keep = Vec::new();
        let mut drop = Vec::new();
        for (b, r) in ranges {
            if b == conditioned_on {
                drop.extend(r);
            } else {
                keep.extend(r);
            }
        }
        (keep, drop)
    };
    let a = full.select_rows(keep.iter()).select_columns(keep.iter());
    let b = full.select_rows(keep.iter()).select_columns(drop.iter());
    let c = full.select_rows(drop.iter()).select_columns(drop.iter());
    schur_complement(&a, &b, &c)
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Deterministic counter-based RNG for `(seed, stream)`. Distinct streams
/// (per sensor, per simulation run, per trial) are independent and the draw
/// order within a stream is reproducible across platforms.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Square root factor used for sampling: Cholesky when the covariance is
/// numerically PD, otherwise an eigenvalue square root with small negative
/// eigenvalues clamped to zero. Genuinely indefinite inputs are rejected.
pub(crate) fn sampling_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let sym = SymMatrix::new(cov.clone())?;
    if let Some(chol) = sym.as_matrix().clone().cholesky() {
        return Ok(chol.l());
    }
    let eig = sym.as_matrix().clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b));
    let floor = -1e-9 * max.max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < floor) {
        return Err(Error::InvalidCovariance(format!(
            "covariance has eigenvalue below {floor:.3e}"
        )));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * sqrt_diag)
}

/// Draws `count` zero-mean samples (one per column) from the Gaussian with
/// covariance `cov`, deterministically for a given `(seed, stream)`.
pub fn sample_gaussian(
    cov: &DMatrix<f64>,
    count: usize,
    seed: u64,
    stream: u64,
) -> Result<DMatrix<f64>> {
    if cov.nrows() != cov.ncols() {
        return Err(Error::InvalidDimensions(format!(
            "covariance must be square, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let n = cov.nrows();
    let factor = sampling_factor(cov)?;
    let mut rng = stream_rng(seed, stream);
    let mut out = DMatrix::zeros(n, count);
    let mut z = DVector::zeros(n);
    for c in 0..count {
        for i in 0..n {
            z[i] = StandardNormal.sample(&mut rng);
        }
        out.set_column(c, &(&factor * &z));
    }
    Ok(out)
}

/// Draws `count` samples (columns, in `(x, theta, y)` order) from the joint
/// prior, deterministically for a given seed (stream 0).
pub fn sample_joint(joint: &JointGaussian, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    sample_gaussian(&joint.assemble(), count, seed, 0)
}

/// Empirical covariance of zero-mean samples stored one per column.
pub fn empirical_covariance(samples: &DMatrix<f64>) -> DMatrix<f64> {
    let count = samples.ncols().max(1) as f64;
    samples * samples.transpose() / count
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn mat2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    fn random_sym(n: usize, rng: &mut impl Rng) -> SymMatrix {
        let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        SymMatrix::new(&raw + raw.transpose()).unwrap()
    }

    fn random_spd(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &raw * raw.transpose() + DMatrix::identity(n, n) * 0.3
    }

    #[test]
    fn symmetry_is_enforced() {
        assert!(SymMatrix::new(mat2(1.0, 0.5, 0.5, 1.0)).is_ok());
        let err = SymMatrix::new(mat2(1.0, 0.5, 0.4, 1.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidMatrix(_)), "got {err:?}");
        let err = SymMatrix::new(mat2(1.0, f64::NAN, f64::NAN, 1.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidMatrix(_)), "got {err:?}");
    }

    #[test]
    fn smallest_eigpair_matches_hand_solution() {
        // [[0, -1], [-1, -1]] has characteristic polynomial l^2 + l - 1, so
        // the smaller root is -(1 + sqrt 5)/2 with eigenvector direction
        // (1, golden ratio), normalized.
        let m = SymMatrix::new(mat2(0.0, -1.0, -1.0, -1.0)).unwrap();
        let pair = smallest_eigpair(&m).unwrap();
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let expect = -(1.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((pair.value - expect).abs() < 1e-12, "value {}", pair.value);
        let scale = (1.0 + phi * phi).sqrt();
        assert!((pair.vector[0] - 1.0 / scale).abs() < 1e-12);
        assert!((pair.vector[1] - phi / scale).abs() < 1e-12);
        // 4-digit anchors: 0.5257 and 0.8507.
        assert!((pair.vector[0] - 0.5257).abs() < 1e-4);
        assert!((pair.vector[1] - 0.8507).abs() < 1e-4);
    }

    #[test]
    fn eigpairs_are_sorted_canonical_and_accurate() {
        let mut rng = stream_rng(7, 0);
        for _ in 0..50 {
            let m = random_sym(4, &mut rng);
            let pairs = sorted_eigpairs(&m);
            let norm = m.as_matrix().norm();
            for w in pairs.windows(2) {
                assert!(w[0].value <= w[1].value);
            }
            for p in &pairs {
                let residual = (m.as_matrix() * &p.vector - &p.vector * p.value).norm();
                assert!(residual <= 1e-9 * norm.max(1.0), "residual {residual}");
                assert!((p.vector.norm() - 1.0).abs() < 1e-12);
                let first = p.vector.iter().find(|x| x.abs() > 1e-12).unwrap();
                assert!(*first > 0.0, "not canonicalized: {:?}", p.vector);
            }
        }
    }

    #[test]
    fn smallest_eig_is_rayleigh_lower_bound() {
        let mut rng = stream_rng(8, 0);
        for _ in 0..20 {
            let m = random_sym(5, &mut rng);
            let lmin = smallest_eigpair(&m).unwrap().value;
            for _ in 0..20 {
                let v = DVector::from_fn(5, |_, _| rng.gen_range(-1.0..1.0_f64)).normalize();
                let quot = (v.transpose() * m.as_matrix() * &v)[(0, 0)];
                assert!(lmin <= quot + 1e-12);
            }
        }
    }

    #[test]
    fn tie_detection_flags_repeated_minimum() {
        let tied = sorted_eigpairs(&SymMatrix::identity(3));
        assert!(smallest_eig_tied(&tied));
        let apart = sorted_eigpairs(&SymMatrix::new(mat2(1.0, 0.0, 0.0, 2.0)).unwrap());
        assert!(!smallest_eig_tied(&apart));
    }

    #[test]
    fn lms_gain_scalar_example() {
        let g = lms_gain(
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, 0.8507),
            &DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert!((g.gain[(0, 0)] - 0.8507).abs() < 1e-15);
        assert!((g.error_trace() - (1.0 - 0.8507 * 0.8507)).abs() < 1e-15);
        // which is the 0.2763... receiver error of the scalar equilibrium
        assert!((g.error_trace() - 0.2763).abs() < 1e-3);
    }

    #[test]
    fn lms_gain_rejects_singular_measurement_covariance() {
        let err = lms_gain(
            &DMatrix::identity(1, 1),
            &DMatrix::from_row_slice(1, 2, &[0.3, 0.3]),
            &mat2(1.0, 1.0, 1.0, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularConditioning(_)), "got {err:?}");
    }

    #[test]
    fn lms_error_is_psd_and_dominated_by_prior() {
        let mut rng = stream_rng(9, 0);
        for _ in 0..30 {
            let joint = random_spd(5, &mut rng);
            let v_xx = joint.view((0, 0), (2, 2)).into_owned();
            let v_xm = joint.view((0, 2), (2, 3)).into_owned();
            let v_mm = joint.view((2, 2), (3, 3)).into_owned();
            let g = lms_gain(&v_xx, &v_xm, &v_mm).unwrap();
            let err_eigs = SymMatrix::new(g.error_cov.clone())
                .unwrap()
                .as_matrix()
                .clone()
                .symmetric_eigen()
                .eigenvalues;
            assert!(err_eigs.iter().all(|&l| l >= -1e-9));
            let gap = &v_xx - &g.error_cov;
            let gap_eigs = SymMatrix::new(gap).unwrap().as_matrix().clone().symmetric_eigen().eigenvalues;
            assert!(gap_eigs.iter().all(|&l| l >= -1e-9));
        }
    }

    #[test]
    fn lms_with_empty_measurement_returns_prior() {
        let v_xx = mat2(2.0, 0.3, 0.3, 1.0);
        let g = lms_gain(&v_xx, &DMatrix::zeros(2, 0), &DMatrix::zeros(0, 0)).unwrap();
        assert_eq!(g.gain.shape(), (2, 0));
        assert_eq!(g.error_cov, v_xx);
    }

    #[test]
    fn schur_scalar_example() {
        let s = schur_complement(
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, 0.6),
            &DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert!((s[(0, 0)] - 0.64).abs() < 1e-15);
    }

    #[test]
    fn schur_conditional_selects_blocks() {
        let joint = JointGaussian::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.2),
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 1, 0.1),
            DMatrix::from_element(1, 1, 1.5),
        )
        .unwrap();
        let cond = schur_conditional(&joint, Block::Y).unwrap();
        // Direct formula on the (x, theta) | y Schur complement.
        let expect = joint.conditional_xtheta_given_y().unwrap();
        assert!((cond - &expect).norm() < 1e-14);
        assert!((expect[(0, 0)] - (1.0 - 0.5 * 0.5 / 1.5)).abs() < 1e-12);

        // Conditioning on x leaves a (theta, y) block.
        let cond_x = schur_conditional(&joint, Block::X).unwrap();
        assert!((cond_x[(0, 0)] - (2.0 - 0.2 * 0.2 / 1.0)).abs() < 1e-12);
        assert!((cond_x[(0, 1)] - (0.1 - 0.2 * 0.5 / 1.0)).abs() < 1e-12);
    }

    #[test]
    fn schur_with_no_side_channel_is_identity_operation() {
        let joint = JointGaussian::scalar(1.0, 0.3, 1.2).unwrap();
        let cond = schur_conditional(&joint, Block::Y).unwrap();
        assert_eq!(cond, joint.xtheta_cov());
    }

    #[test]
    fn joint_gaussian_rejects_indefinite_assembly() {
        let err = JointGaussian::scalar(1.0, 1.2, 1.0).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite(_)), "got {err:?}");
    }

    #[test]
    fn pseudo_inverse_satisfies_penrose_identities() {
        let mut rng = stream_rng(10, 0);
        for trial in 0..40 {
            let m = if trial % 2 == 0 {
                DMatrix::from_fn(3, 2, |_, _| rng.gen_range(-1.0..1.0))
            } else {
                // rank-1 via an outer product
                let u = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0_f64));
                let v = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0_f64));
                u * v.transpose()
            };
            let p = pseudo_inverse(&m);
            let scale = m.norm().max(1.0);
            assert!((&m * &p * &m - &m).norm() <= 1e-9 * scale);
            assert!((&p * &m * &p - &p).norm() <= 1e-9 * p.norm().max(1.0));
            let mp = &m * &p;
            assert!((&mp - mp.transpose()).norm() <= 1e-9 * scale);
            let pm = &p * &m;
            assert!((&pm - pm.transpose()).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn pseudo_inverse_of_invertible_is_inverse() {
        let m = mat2(2.0, 1.0, 0.5, 3.0);
        let p = pseudo_inverse(&m);
        assert!((&m * &p - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn sqrt_and_inv_sqrt_are_mutually_consistent() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..20 {
            let a = SymMatrix::new(random_spd(4, &mut rng)).unwrap();
            let s = matrix_sqrt(&a).unwrap();
            assert!((s.as_matrix() * s.as_matrix() - a.as_matrix()).norm() < 1e-10 * a.norm());
            let si = inv_sqrt(&a).unwrap();
            let should_be_identity = si.as_matrix() * a.as_matrix() * si.as_matrix();
            assert!((should_be_identity - DMatrix::identity(4, 4)).norm() < 1e-9);
        }
    }

    #[test]
    fn sqrt_rejects_indefinite_input() {
        let m = SymMatrix::new(mat2(1.0, 0.0, 0.0, -0.5)).unwrap();
        assert!(matches!(
            matrix_sqrt(&m).unwrap_err(),
            Error::NotPositiveDefinite(_)
        ));
        assert!(matches!(
            inv_sqrt(&SymMatrix::zeros(2)).unwrap_err(),
            Error::NotPositiveDefinite(_)
        ));
    }

    #[test]
    fn sampling_is_deterministic_per_seed_and_stream() {
        let joint = JointGaussian::scalar(1.0, 0.5, 2.0).unwrap();
        let a = sample_joint(&joint, 16, 123).unwrap();
        let b = sample_joint(&joint, 16, 123).unwrap();
        assert_eq!(a, b);
        let c = sample_gaussian(&joint.assemble(), 16, 123, 1).unwrap();
        assert_ne!(a, c);
        let d = sample_joint(&joint, 16, 124).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn empirical_covariance_converges_to_declared_blocks() {
        let joint = JointGaussian::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.4),
            DMatrix::from_element(1, 1, 0.3),
            DMatrix::from_element(1, 1, 1.5),
            DMatrix::from_element(1, 1, -0.2),
            DMatrix::from_element(1, 1, 0.8),
        )
        .unwrap();
        let target = joint.assemble();
        let rel_err = |count: usize, stream: u64| {
            let s = sample_gaussian(&target, count, 321, stream).unwrap();
            (empirical_covariance(&s) - &target).norm() / target.norm()
        };
        let coarse = rel_err(10_000, 0);
        let fine = rel_err(1_000_000, 1);
        assert!(fine < 0.01, "1e6-sample relative error {fine}");
        assert!(fine < coarse, "error failed to shrink: {coarse} -> {fine}");
    }

    #[test]
    fn sampling_handles_singular_covariance() {
        // Perfectly correlated pair: Cholesky fails, eigen fallback works.
        let cov = mat2(1.0, 1.0, 1.0, 1.0);
        let s = sample_gaussian(&cov, 500, 5, 0).unwrap();
        for c in 0..s.ncols() {
            assert!((s[(0, c)] - s[(1, c)]).abs() < 1e-9);
        }
        let err = sample_gaussian(&mat2(1.0, 0.0, 0.0, -1.0), 4, 5, 0).unwrap_err();
        assert!(matches!(err, Error::InvalidCovariance(_)), "got {err:?}");
    }
}
