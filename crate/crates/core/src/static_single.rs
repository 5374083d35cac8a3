//! One-shot equilibrium between a single self-interested sensor and an LMS
//! receiver, with an optional receiver side channel.
//!
//! The sensor declares an affine messaging policy
//! `z = alpha1' x + alpha2' theta + alpha3' y + v` before any realization is
//! seen; the receiver then applies the LMS estimator for the declared joint
//! distribution of `(x, y, z)`. The sensor's optimal declaration reduces to a
//! trust-region problem over the achievable message covariances
//! `xi = (V_xz, V_thetaz, V_yz)`:
//!
//! ```text
//!   minimize    trace(xi' W xi)     subject to   xi' Q xi <= I,
//! ```
//!
//! whose solution (after whitening) is spanned by eigenvectors of the
//! smallest eigenvalues of a symmetric matrix. This module builds `(W, Q)`,
//! solves the reduction, assembles sensor policies and receiver responses,
//! and certifies the equilibrium against random unilateral deviations.
//!
//! Equilibria come in families: rescaling the message by any nonzero factor
//! (noise covariance by its square) leaves the receiver's error unchanged, so
//! reported policies are one canonical representative.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gaussian::{
    self, inv_sqrt, lms_gain, matrix_sqrt, pseudo_inverse, smallest_eig_tied, sorted_eigpairs,
    sym_inverse, JointGaussian, LmsGain, SymMatrix,
};

/// Eigenvalues with magnitude below this (relative to the largest) count as
/// "not negative enough to carry signal": their message coordinates are pure
/// noise.
const ACTIVE_EIG_TOL: f64 = 1e-12;

/// Absolute clamp band for tiny negative message-noise eigenvalues.
const VVV_CLAMP: f64 = 1e-9;

/// The sensor's declared affine messaging policy
/// `z = alpha1' x + alpha2' theta + alpha3' y + v` with `v ~ N(0, V_vv)`.
#[derive(Debug, Clone)]
pub struct AffineSensorPolicy {
    /// Loading on the state, `n_x x n_z`.
    pub alpha1: DMatrix<f64>,
    /// Loading on the private bias, `n_x x n_z`.
    pub alpha2: DMatrix<f64>,
    /// Loading on the side channel, `n_y x n_z`.
    pub alpha3: DMatrix<f64>,
    /// Message noise covariance, `n_z x n_z`, PSD.
    pub v_vv: SymMatrix,
}

impl AffineSensorPolicy {
    /// Validates dimensions and clamps `v_vv` to PSD: eigenvalues in
    /// `[-1e-9, 0)` are set to zero, anything below that is rejected.
    pub fn new(
        alpha1: DMatrix<f64>,
        alpha2: DMatrix<f64>,
        alpha3: DMatrix<f64>,
        v_vv: DMatrix<f64>,
    ) -> Result<Self> {
        let n_z = v_vv.nrows();
        if alpha1.ncols() != n_z
            || alpha2.ncols() != n_z
            || alpha3.ncols() != n_z
            || alpha1.nrows() != alpha2.nrows()
        {
            return Err(Error::InvalidDimensions(
                "policy blocks disagree on (n_x, n_y, n_z)".into(),
            ));
        }
        let v_vv = clamp_psd(v_vv)?;
        Ok(Self {
            alpha1,
            alpha2,
            alpha3,
            v_vv,
        })
    }

    /// Message dimension.
    pub fn n_z(&self) -> usize {
        self.v_vv.dim()
    }

    /// The stacked `(2 n_x + n_y) x n_z` loading `[alpha1; alpha2; alpha3]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let n_x = self.alpha1.nrows();
        let n_y = self.alpha3.nrows();
        let mut a = DMatrix::zeros(2 * n_x + n_y, self.n_z());
        a.view_mut((0, 0), (n_x, self.n_z())).copy_from(&self.alpha1);
        a.view_mut((n_x, 0), (n_x, self.n_z())).copy_from(&self.alpha2);
        a.view_mut((2 * n_x, 0), (n_y, self.n_z()))
            .copy_from(&self.alpha3);
        a
    }

    /// The equivalent policy with the message rescaled by `kappa` (noise
    /// covariance by `kappa^2`). Any nonzero `kappa` leaves the receiver's
    /// achievable error unchanged.
    pub fn scaled(&self, kappa: f64) -> Self {
        Self {
            alpha1: &self.alpha1 * kappa,
            alpha2: &self.alpha2 * kappa,
            alpha3: &self.alpha3 * kappa,
            v_vv: SymMatrix::new(self.v_vv.as_matrix() * (kappa * kappa))
                .expect("scaling preserves symmetry"),
        }
    }
}

/// Clamps a symmetric matrix to PSD within the tolerance band.
fn clamp_psd(m: DMatrix<f64>) -> Result<SymMatrix> {
    let sym = SymMatrix::new(m)?;
    if sym.dim() == 0 {
        return Ok(sym);
    }
    let eig = sym.as_matrix().clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min < -VVV_CLAMP {
        return Err(Error::InvalidCovariance(format!(
            "noise covariance eigenvalue {min:.3e} below -{VVV_CLAMP:e}"
        )));
    }
    if min >= 0.0 {
        return Ok(sym);
    }
    let clamped = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0)));
    let m = &eig.eigenvectors * clamped * eig.eigenvectors.transpose();
    SymMatrix::new((&m + m.transpose()) * 0.5)
}

/// The sensor's trust-region problem data over message covariances.
#[derive(Debug, Clone)]
pub struct TrustRegionProblem {
    /// Cost matrix `W`, side `2 n_x + n_y`.
    pub w: SymMatrix,
    /// Constraint matrix `Q`, side `2 n_x + n_y` (PSD, rank `2 n_x`).
    pub q: SymMatrix,
    /// Reduction map `Xi = [I, -[V_xy; V_thetay] V_yy^{-1}]`,
    /// `2 n_x x (2 n_x + n_y)`.
    pub xi_map: DMatrix<f64>,
    /// Conditional `(x, theta)` covariance given `y` (the constraint core).
    pub conditional: SymMatrix,
    /// Its inverse `J`.
    pub j: SymMatrix,
    n_x: usize,
    n_y: usize,
}

impl TrustRegionProblem {
    /// State dimension.
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Side-channel dimension.
    pub fn n_y(&self) -> usize {
        self.n_y
    }
}

/// The block cost matrix `[[-I, -I], [-I, 0]]` of side `2 n_x`: the
/// quadratic form whose trace the sensor minimizes after reduction.
fn cost_matrix(n_x: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n_x, 2 * n_x);
    for i in 0..n_x {
        m[(i, i)] = -1.0;
        m[(i, n_x + i)] = -1.0;
        m[(n_x + i, i)] = -1.0;
    }
    m
}

/// Builds the sensor's trust-region data `(W, Q, Xi)` for a prior.
pub fn build_wq(prior: &JointGaussian) -> Result<TrustRegionProblem> {
    let n_x = prior.n_x();
    let n_y = prior.n_y();
    let conditional = SymMatrix::new(prior.conditional_xtheta_given_y()?)?;
    if !conditional.is_positive_definite() {
        return Err(Error::NotPositiveDefinite(
            "conditional (x, theta) covariance given y".into(),
        ));
    }
    let j = SymMatrix::new(sym_inverse(&conditional)?)?;
    let mut xi_map = DMatrix::zeros(2 * n_x, 2 * n_x + n_y);
    xi_map
        .view_mut((0, 0), (2 * n_x, 2 * n_x))
        .copy_from(&DMatrix::identity(2 * n_x, 2 * n_x));
    if n_y > 0 {
        let cross = prior.xtheta_y_cross();
        let v_yy_inv = sym_inverse(&SymMatrix::new(prior.v_yy().clone())?)?;
        xi_map
            .view_mut((0, 2 * n_x), (2 * n_x, n_y))
            .copy_from(&(-&cross * v_yy_inv));
    }
    let m = cost_matrix(n_x);
    let w = SymMatrix::new(xi_map.transpose() * &m * &xi_map)?;
    let q = SymMatrix::new(xi_map.transpose() * j.as_matrix() * &xi_map)?;
    Ok(TrustRegionProblem {
        w,
        q,
        xi_map,
        conditional,
        j,
        n_x,
        n_y,
    })
}

/// Solution of the trust-region reduction.
#[derive(Debug, Clone)]
pub struct TrustRegionSolution {
    /// Optimal message covariances `[V_xz; V_thetaz; V_yz]`,
    /// `(2 n_x + n_y) x n_z`.
    pub xi: DMatrix<f64>,
    /// Whitened-cost eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Whether column `k` carries signal (its eigenvalue is negative);
    /// inactive columns are zero and the message coordinate is pure noise.
    pub active: Vec<bool>,
    /// Whether the minimal eigenvalue is tied within tolerance, i.e. the
    /// reported eigenvector (and policy) is one of many equivalent choices.
    pub tie: bool,
    /// Achieved objective `trace(xi' W xi)`.
    pub objective: f64,
}

/// Solves `min trace(xi' W xi)` s.t. `xi' Q xi <= I` for an `n_z`-column
/// message.
///
/// After mapping to the `2 n_x`-dimensional conditional space and whitening,
/// the optimal columns are unit eigenvectors of the `n_z` smallest
/// (negative) eigenvalues; nonnegative eigenvalues contribute zero columns.
pub fn solve_trust_region(
    problem: &TrustRegionProblem,
    n_z: usize,
) -> Result<TrustRegionSolution> {
    let n_x = problem.n_x;
    if n_z == 0 || n_z > 2 * n_x {
        return Err(Error::InvalidDimensions(format!(
            "message dimension n_z = {n_z} outside 1..={}",
            2 * n_x
        )));
    }
    let sqrt_cond = matrix_sqrt(&problem.conditional)?;
    let whitened = SymMatrix::new(
        sqrt_cond.as_matrix() * cost_matrix(n_x) * sqrt_cond.as_matrix(),
    )?;
    let pairs = sorted_eigpairs(&whitened);
    let scale = pairs.iter().fold(1.0_f64, |a, p| a.max(p.value.abs()));
    let mut eta = DMatrix::zeros(2 * n_x, n_z);
    let mut active = Vec::with_capacity(n_z);
    let mut objective = 0.0;
    for k in 0..n_z {
        let is_active = pairs[k].value < -ACTIVE_EIG_TOL * scale;
        active.push(is_active);
        if is_active {
            eta.set_column(k, &(sqrt_cond.as_matrix() * &pairs[k].vector));
            objective += pairs[k].value;
        }
    }
    // A tie at the selection boundary (or inside the selected set) means the
    // minimizing subspace is not unique; any canonicalized choice is valid.
    let tie = (0..n_z.min(pairs.len() - 1))
        .any(|k| smallest_eig_tied(&pairs[k..]));
    let xi = pseudo_inverse(&problem.xi_map) * eta;
    Ok(TrustRegionSolution {
        xi,
        eigenvalues: pairs.iter().map(|p| p.value).collect(),
        active,
        tie,
        objective,
    })
}

/// The receiver's LMS response to a declared policy: gains on the stacked
/// measurement `(y, z)` and the resulting state estimation error.
#[derive(Debug, Clone)]
pub struct ReceiverResponse {
    /// LMS gain and error covariance for estimating `x` from `(y, z)`.
    pub lms: LmsGain,
    /// Stacked measurement covariance `Cov((y, z))`.
    pub sigma_m: DMatrix<f64>,
    /// Cross covariance `Cov(x, (y, z))`.
    pub v_xm: DMatrix<f64>,
    /// Mean squared state error `trace` of the LMS error covariance.
    pub error: f64,
}

/// Message covariances `(V_xz, V_thetaz, V_yz, V_zz)` induced by a policy.
pub fn message_covariances(
    prior: &JointGaussian,
    policy: &AffineSensorPolicy,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let n_x = prior.n_x();
    let n_y = prior.n_y();
    if policy.alpha1.nrows() != n_x || policy.alpha3.nrows() != n_y {
        return Err(Error::InvalidDimensions(
            "policy dimensions do not match the prior".into(),
        ));
    }
    let full = prior.assemble();
    let stacked = policy.stacked();
    let cross = &full * &stacked;
    let v_xz = cross.rows(0, n_x).into_owned();
    let v_thetaz = cross.rows(n_x, n_x).into_owned();
    let v_yz = cross.rows(2 * n_x, n_y).into_owned();
    let v_zz = stacked.transpose() * cross + policy.v_vv.as_matrix();
    Ok((v_xz, v_thetaz, v_yz, (&v_zz + v_zz.transpose()) * 0.5))
}

/// Computes the receiver's LMS best response to `policy`.
pub fn receiver_response(
    prior: &JointGaussian,
    policy: &AffineSensorPolicy,
) -> Result<ReceiverResponse> {
    let n_y = prior.n_y();
    let n_z = policy.n_z();
    let (v_xz, _, v_yz, v_zz) = message_covariances(prior, policy)?;
    let mut sigma_m = DMatrix::zeros(n_y + n_z, n_y + n_z);
    sigma_m.view_mut((0, 0), (n_y, n_y)).copy_from(prior.v_yy());
    sigma_m.view_mut((0, n_y), (n_y, n_z)).copy_from(&v_yz);
    sigma_m
        .view_mut((n_y, 0), (n_z, n_y))
        .copy_from(&v_yz.transpose());
    sigma_m.view_mut((n_y, n_y), (n_z, n_z)).copy_from(&v_zz);
    let mut v_xm = DMatrix::zeros(prior.n_x(), n_y + n_z);
    v_xm.view_mut((0, 0), (prior.n_x(), n_y)).copy_from(prior.v_xy());
    v_xm.view_mut((0, n_y), (prior.n_x(), n_z)).copy_from(&v_xz);
    let lms = lms_gain(prior.v_xx(), &v_xm, &sigma_m)?;
    let error = lms.error_trace();
    Ok(ReceiverResponse {
        lms,
        sigma_m,
        v_xm,
        error,
    })
}

/// The sensor's expected cost `E||(x + theta) - G (y, z)||^2` under a policy
/// and a receiver gain `G`, by covariance algebra.
pub fn sensor_cost(
    prior: &JointGaussian,
    policy: &AffineSensorPolicy,
    gain: &LmsGain,
) -> Result<f64> {
    let n_y = prior.n_y();
    let n_z = policy.n_z();
    let (v_xz, v_thetaz, v_yz, v_zz) = message_covariances(prior, policy)?;
    let v_ss = prior.v_xx()
        + prior.v_xtheta()
        + prior.v_xtheta().transpose()
        + prior.v_thetatheta();
    let mut v_sm = DMatrix::zeros(prior.n_x(), n_y + n_z);
    v_sm.view_mut((0, 0), (prior.n_x(), n_y))
        .copy_from(&(prior.v_xy() + prior.v_thetay()));
    v_sm.view_mut((0, n_y), (prior.n_x(), n_z))
        .copy_from(&(&v_xz + &v_thetaz));
    let mut sigma_m = DMatrix::zeros(n_y + n_z, n_y + n_z);
    sigma_m.view_mut((0, 0), (n_y, n_y)).copy_from(prior.v_yy());
    sigma_m.view_mut((0, n_y), (n_y, n_z)).copy_from(&v_yz);
    sigma_m
        .view_mut((n_y, 0), (n_z, n_y))
        .copy_from(&v_yz.transpose());
    sigma_m.view_mut((n_y, n_y), (n_z, n_z)).copy_from(&v_zz);
    let g = &gain.gain;
    if g.ncols() != n_y + n_z || g.nrows() != prior.n_x() {
        return Err(Error::InvalidDimensions(
            "receiver gain does not match (n_x, n_y + n_z)".into(),
        ));
    }
    Ok(v_ss.trace() - 2.0 * (&v_sm * g.transpose()).trace() + (g * sigma_m * g.transpose()).trace())
}

/// The additive constant in the sensor's reduced cost
/// `trace(xi' W xi) + c`: the part of `E||(x + theta) - xhat||^2` that does
/// not depend on the message.
pub fn sensor_cost_constant(prior: &JointGaussian) -> Result<f64> {
    let base = (prior.v_xx()
        + prior.v_xtheta()
        + prior.v_xtheta().transpose()
        + prior.v_thetatheta())
    .trace();
    if prior.n_y() == 0 {
        return Ok(base);
    }
    let v_yy_inv = sym_inverse(&SymMatrix::new(prior.v_yy().clone())?)?;
    let v_xy = prior.v_xy();
    let v_thetay = prior.v_thetay();
    let corr = (v_xy * &v_yy_inv * v_xy.transpose()).trace()
        + (v_thetay * &v_yy_inv * v_xy.transpose()).trace()
        + (v_xy * &v_yy_inv * v_thetay.transpose()).trace();
    Ok(base - corr)
}

/// Everything the equilibrium computation produces for one prior.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    /// The sensor's equilibrium policy (canonical representative of the
    /// rescaling family).
    pub policy: AffineSensorPolicy,
    /// The receiver's LMS gain on `(y, z)` with its error covariance.
    pub receiver_gain: LmsGain,
    /// Receiver mean squared error `E||x - xhat||^2`.
    pub receiver_error: f64,
    /// Sensor cost `E||(x + theta) - xhat||^2` at the equilibrium.
    pub sensor_cost: f64,
    /// Equilibrium message covariance with the state.
    pub v_xz: DMatrix<f64>,
    /// Equilibrium message covariance with the bias.
    pub v_thetaz: DMatrix<f64>,
    /// Equilibrium message covariance with the side channel.
    pub v_yz: DMatrix<f64>,
    /// Whitened-cost eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// True when the minimal eigenvalue is tied: the policy is one of a
    /// continuum of equivalent equilibrium representatives.
    pub eigen_tie: bool,
    /// Attached deviation certificate, when one has been run.
    pub certificate: Option<BestResponseCertificate>,
}

/// Sensor policy realizing the message covariances `(V_xz, V_thetaz, V_yz)`
/// under the unit-conditional-covariance message normalization.
///
/// The loading is `alpha = V^{-1} [V_xz; V_thetaz; V_yz]` and the noise
/// covariance is `V_vv = I - xi' Q xi`; covariances demanding negative noise
/// are rejected as infeasible.
pub fn sensor_policy_from_covariances(
    prior: &JointGaussian,
    v_xz: &DMatrix<f64>,
    v_thetaz: &DMatrix<f64>,
    v_yz: &DMatrix<f64>,
) -> Result<AffineSensorPolicy> {
    let n_x = prior.n_x();
    let n_y = prior.n_y();
    let n_z = v_xz.ncols();
    if v_xz.nrows() != n_x
        || v_thetaz.shape() != (n_x, n_z)
        || v_yz.shape() != (n_y, n_z)
    {
        return Err(Error::InvalidDimensions(
            "message covariance blocks disagree with the prior".into(),
        ));
    }
    let mut xi = DMatrix::zeros(2 * n_x + n_y, n_z);
    xi.view_mut((0, 0), (n_x, n_z)).copy_from(v_xz);
    xi.view_mut((n_x, 0), (n_x, n_z)).copy_from(v_thetaz);
    xi.view_mut((2 * n_x, 0), (n_y, n_z)).copy_from(v_yz);
    let problem = build_wq(prior)?;
    let v_vv = DMatrix::identity(n_z, n_z) - xi.transpose() * problem.q.as_matrix() * &xi;
    let v_vv = clamp_psd((&v_vv + v_vv.transpose()) * 0.5).map_err(|_| {
        Error::InfeasibleMessage(
            "requested covariances require negative message noise".into(),
        )
    })?;
    let full_inv = sym_inverse(&SymMatrix::new(prior.assemble())?)?;
    let alpha = full_inv * &xi;
    AffineSensorPolicy::new(
        alpha.rows(0, n_x).into_owned(),
        alpha.rows(n_x, n_x).into_owned(),
        alpha.rows(2 * n_x, n_y).into_owned(),
        v_vv.into_matrix(),
    )
}

fn report_from_solution(
    prior: &JointGaussian,
    sol: &TrustRegionSolution,
    policy: AffineSensorPolicy,
) -> Result<EquilibriumReport> {
    let n_x = prior.n_x();
    let n_y = prior.n_y();
    let response = receiver_response(prior, &policy)?;
    let cost = sensor_cost(prior, &policy, &response.lms)?;
    Ok(EquilibriumReport {
        policy,
        receiver_error: response.error,
        receiver_gain: response.lms,
        sensor_cost: cost,
        v_xz: sol.xi.rows(0, n_x).into_owned(),
        v_thetaz: sol.xi.rows(n_x, n_x).into_owned(),
        v_yz: sol.xi.rows(2 * n_x, n_y).into_owned(),
        eigenvalues: sol.eigenvalues.clone(),
        eigen_tie: sol.tie,
        certificate: None,
    })
}

/// Equilibrium for a scalar message (`n_z = 1`) through the full
/// message-covariance route: solve the trust region, then recover the policy
/// realizing the optimal covariances.
pub fn equilibrium_scalar(prior: &JointGaussian) -> Result<EquilibriumReport> {
    let problem = build_wq(prior)?;
    let sol = solve_trust_region(&problem, 1)?;
    let n_x = prior.n_x();
    let n_y = prior.n_y();
    let policy = sensor_policy_from_covariances(
        prior,
        &sol.xi.rows(0, n_x).into_owned(),
        &sol.xi.rows(n_x, n_x).into_owned(),
        &sol.xi.rows(2 * n_x, n_y).into_owned(),
    )?;
    report_from_solution(prior, &sol, policy)
}

/// Equilibrium through the reduced parametrization with no explicit
/// side-channel feedback in the policy (`alpha3 = 0`), valid for any prior
/// and any message dimension `1 <= n_z <= 2 n_x`.
///
/// The loadings `[alpha1; alpha2]` solve the `2 n_x`-dimensional trust
/// region over the conditional `(x, theta)` covariance given `y` directly.
pub fn equilibrium_no_side_channel(
    prior: &JointGaussian,
    n_z: usize,
) -> Result<EquilibriumReport> {
    let n_x = prior.n_x();
    let n_y = prior.n_y();
    if n_z == 0 || n_z > 2 * n_x {
        return Err(Error::InvalidDimensions(format!(
            "message dimension n_z = {n_z} outside 1..={}",
            2 * n_x
        )));
    }
    let conditional = SymMatrix::new(prior.conditional_xtheta_given_y()?)?;
    if !conditional.is_positive_definite() {
        return Err(Error::NotPositiveDefinite(
            "conditional (x, theta) covariance given y".into(),
        ));
    }
    let sqrt_cond = matrix_sqrt(&conditional)?;
    let whitened = SymMatrix::new(
        sqrt_cond.as_matrix() * cost_matrix(n_x) * sqrt_cond.as_matrix(),
    )?;
    let pairs = sorted_eigpairs(&whitened);
    let scale = pairs.iter().fold(1.0_f64, |a, p| a.max(p.value.abs()));
    let inv_sqrt_cond = inv_sqrt(&conditional)?;
    let mut loading = DMatrix::zeros(2 * n_x, n_z);
    let mut v_vv = DMatrix::identity(n_z, n_z);
    let mut eigenvalues = Vec::with_capacity(pairs.len());
    let mut objective = 0.0;
    let mut active = Vec::with_capacity(n_z);
    for (k, p) in pairs.iter().enumerate() {
        eigenvalues.push(p.value);
        if k < n_z {
            let is_active = p.value < -ACTIVE_EIG_TOL * scale;
            active.push(is_active);
            if is_active {
                loading.set_column(k, &(inv_sqrt_cond.as_matrix() * &p.vector));
                v_vv[(k, k)] = 0.0;
                objective += p.value;
            }
        }
    }
    let tie = (0..n_z.min(pairs.len() - 1)).any(|k| smallest_eig_tied(&pairs[k..]));
    let policy = AffineSensorPolicy::new(
        loading.rows(0, n_x).into_owned(),
        loading.rows(n_x, n_x).into_owned(),
        DMatrix::zeros(n_y, n_z),
        v_vv,
    )?;
    let (v_xz, v_thetaz, v_yz, _) = message_covariances(prior, &policy)?;
    let mut xi = DMatrix::zeros(2 * n_x + n_y, n_z);
    xi.view_mut((0, 0), (n_x, n_z)).copy_from(&v_xz);
    xi.view_mut((n_x, 0), (n_x, n_z)).copy_from(&v_thetaz);
    xi.view_mut((2 * n_x, 0), (n_y, n_z)).copy_from(&v_yz);
    let sol = TrustRegionSolution {
        xi,
        eigenvalues,
        active,
        tie,
        objective,
    };
    report_from_solution(prior, &sol, policy)
}

/// Whether both equilibrium loadings are materially nonzero: the sensor
/// always mixes genuine state information (`alpha1`) with bias
/// (`alpha2`) — it neither reports honestly nor purely babbles.
#[derive(Debug, Clone, Copy)]
pub struct LoadingMagnitudes {
    /// Frobenius norm of the state loading.
    pub alpha1_norm: f64,
    /// Frobenius norm of the bias loading.
    pub alpha2_norm: f64,
}

impl LoadingMagnitudes {
    /// True when both loadings exceed the degeneracy threshold `1e-8`.
    pub fn both_nonzero(&self) -> bool {
        self.alpha1_norm > 1e-8 && self.alpha2_norm > 1e-8
    }
}

/// Computes the scalar-message equilibrium and reports the loading norms.
pub fn equilibrium_loading_magnitudes(prior: &JointGaussian) -> Result<LoadingMagnitudes> {
    let report = equilibrium_no_side_channel(prior, 1)?;
    Ok(LoadingMagnitudes {
        alpha1_norm: report.policy.alpha1.norm(),
        alpha2_norm: report.policy.alpha2.norm(),
    })
}

/// Result of the randomized deviation certificate.
#[derive(Debug, Clone)]
pub struct BestResponseCertificate {
    /// Number of sensor-side perturbation trials.
    pub trials: usize,
    /// Worst decrease in the receiver's error over random gain
    /// perturbations (positive would contradict LMS optimality).
    pub receiver_worst_decrease: f64,
    /// Worst sensor-cost improvement over random policy perturbations
    /// (positive means a perturbed policy beat the declared one).
    pub sensor_worst_improvement: f64,
    /// Trial index achieving the worst sensor improvement, when any trial
    /// improved at all.
    pub improving_trial: Option<usize>,
    /// True when no deviation on either side improved beyond tolerance.
    pub pass: bool,
}

/// Receiver-side error as a function of an arbitrary gain, given the
/// measurement covariances of the declared policy.
fn receiver_error_for_gain(
    v_xx: &DMatrix<f64>,
    v_xm: &DMatrix<f64>,
    sigma_m: &DMatrix<f64>,
    gain: &DMatrix<f64>,
) -> f64 {
    v_xx.trace() - 2.0 * (v_xm * gain.transpose()).trace()
        + (gain * sigma_m * gain.transpose()).trace()
}

/// Certifies an equilibrium report against random unilateral deviations.
///
/// Receiver side: the LMS gain is perturbed and the error must not decrease.
/// Sensor side: the policy loadings are perturbed at Frobenius norms `1e-2`
/// and `1e-1` (every fourth trial also inflates the message noise), the
/// receiver re-optimizes against the perturbed declaration, and the sensor's
/// cost must not improve by more than `1e-6`.
pub fn best_response_certificate(
    prior: &JointGaussian,
    report: &EquilibriumReport,
    trials: usize,
    seed: u64,
) -> Result<BestResponseCertificate> {
    let baseline = receiver_response(prior, &report.policy)?;
    let base_cost = sensor_cost(prior, &report.policy, &baseline.lms)?;

    // Receiver side: LMS optimality of the declared-policy response.
    let mut receiver_worst_decrease = f64::NEG_INFINITY;
    {
        let mut rng = gaussian::stream_rng(seed, u64::MAX);
        let g = &baseline.lms.gain;
        let scale = g.norm().max(1.0);
        for trial in 0..trials.max(1) {
            let delta_scale = if trial % 2 == 0 { 1e-2 } else { 1e-1 };
            let delta = DMatrix::from_fn(g.nrows(), g.ncols(), |_, _| {
                StandardNormal.sample(&mut rng)
            });
            let delta = if delta.norm() > 0.0 {
                delta.clone() * (delta_scale * scale / delta.norm())
            } else {
                delta
            };
            let perturbed = receiver_error_for_gain(
                prior.v_xx(),
                &baseline.v_xm,
                &baseline.sigma_m,
                &(g + delta),
            );
            receiver_worst_decrease = receiver_worst_decrease.max(baseline.error - perturbed);
        }
    }

    // Sensor side: perturb the declaration, let the receiver re-optimize.
    let mut sensor_worst_improvement = f64::NEG_INFINITY;
    let mut improving_trial = None;
    let n_x = prior.n_x();
    let n_y = prior.n_y();
    let n_z = report.policy.n_z();
    for trial in 0..trials {
        let mut rng = gaussian::stream_rng(seed, trial as u64);
        let delta_scale = if trial % 2 == 0 { 1e-2 } else { 1e-1 };
        let mut d1: DMatrix<f64> =
            DMatrix::from_fn(n_x, n_z, |_, _| StandardNormal.sample(&mut rng));
        let mut d2: DMatrix<f64> =
            DMatrix::from_fn(n_x, n_z, |_, _| StandardNormal.sample(&mut rng));
        let mut d3: DMatrix<f64> =
            DMatrix::from_fn(n_y, n_z, |_, _| StandardNormal.sample(&mut rng));
        let total = (d1.norm_squared() + d2.norm_squared() + d3.norm_squared()).sqrt();
        if total > 0.0 {
            let f = delta_scale / total;
            d1 *= f;
            d2 *= f;
            d3 *= f;
        }
        let mut v_vv = report.policy.v_vv.as_matrix().clone();
        if trial % 4 == 3 {
            // Also try adding message noise, which is always feasible.
            let bump: f64 = rng.gen_range(0.0..delta_scale);
            for k in 0..n_z {
                v_vv[(k, k)] += bump;
            }
        }
        let perturbed = AffineSensorPolicy::new(
            &report.policy.alpha1 + d1,
            &report.policy.alpha2 + d2,
            &report.policy.alpha3 + d3,
            v_vv,
        )?;
        let response = receiver_response(prior, &perturbed)?;
        let cost = sensor_cost(prior, &perturbed, &response.lms)?;
        let improvement = base_cost - cost;
        if improvement > sensor_worst_improvement {
            sensor_worst_improvement = improvement;
            if improvement > 1e-6 {
                improving_trial = Some(trial);
            }
        }
    }

    let pass = receiver_worst_decrease <= 1e-9 && sensor_worst_improvement <= 1e-6;
    Ok(BestResponseCertificate {
        trials,
        receiver_worst_decrease,
        sensor_worst_improvement,
        improving_trial,
        pass,
    })
}

/// Monte Carlo estimate of receiver and sensor mean squared errors under a
/// policy and receiver gain, with standard errors of the means.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    /// Empirical mean of `||x - xhat||^2`.
    pub receiver_mean: f64,
    /// Standard error of `receiver_mean`.
    pub receiver_se: f64,
    /// Empirical mean of `||(x + theta) - xhat||^2`.
    pub sensor_mean: f64,
    /// Standard error of `sensor_mean`.
    pub sensor_se: f64,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Simulates the declared game: draws `(x, theta, y)` and the message noise,
/// forms `z`, applies `gain` to `(y, z)`, and reports empirical errors.
pub fn monte_carlo_cost(
    prior: &JointGaussian,
    policy: &AffineSensorPolicy,
    gain: &LmsGain,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let n_x = prior.n_x();
    let n_y = prior.n_y();
    let n_z = policy.n_z();
    let draws = gaussian::sample_joint(prior, samples, seed)?;
    let noise = gaussian::sample_gaussian(policy.v_vv.as_matrix(), samples, seed, 1)?;
    let stacked = policy.stacked();
    let mut receiver_sq = Vec::with_capacity(samples);
    let mut sensor_sq = Vec::with_capacity(samples);
    for s in 0..samples {
        let col = draws.column(s);
        let x = col.rows(0, n_x);
        let theta = col.rows(n_x, n_x);
        let y = col.rows(2 * n_x, n_y);
        let z = stacked.transpose() * &col + noise.column(s);
        let mut m = DVector::zeros(n_y + n_z);
        m.rows_mut(0, n_y).copy_from(&y);
        m.rows_mut(n_y, n_z).copy_from(&z);
        let xhat = &gain.gain * m;
        receiver_sq.push((&x - &xhat).norm_squared());
        sensor_sq.push((x + theta - xhat).norm_squared());
    }
    let (receiver_mean, receiver_se) = mean_and_se(&receiver_sq);
    let (sensor_mean, sensor_se) = mean_and_se(&sensor_sq);
    Ok(McEstimate {
        receiver_mean,
        receiver_se,
        sensor_mean,
        sensor_se,
    })
}

/// The closed-form scalar equilibrium loadings for the one-parameter family
/// of priors `V_xx = 1`, `V_xtheta = mu`, `V_thetatheta = mu^2 + 1` (the
/// bias is a noisy linear function of the state): returns `(alpha1, alpha2)`.
pub fn scalar_family_closed_form(mu: f64) -> (f64, f64) {
    let root = ((2.0 * mu + 1.0) * (2.0 * mu + 1.0) + 4.0).sqrt();
    let denom = ((2.0 * mu + root + 1.0).powi(2) + 4.0).sqrt();
    ((root + 1.0) / denom, 2.0 / denom)
}
