//! Synchronous play among `N` sensors that share one state but carry
//! private, independent biases.
//!
//! Every sensor `i` observes the same state `x` and its own bias `theta_i`,
//! and declares a scalar affine message `z_i = a' x + b' theta_i + v_i`. The
//! receiver estimates `x` from all messages at once. When every sensor uses
//! the same policy, the receiver needs only the average message
//! `ybar = (1/N) sum_i z_i` ([`average_suffices_check`]), which collapses
//! the `N`-sensor game to a single-sensor game against `ybar` and yields a
//! closed-form symmetric equilibrium ([`symmetric_equilibrium`]).
//!
//! Equilibrium policies are normalized so the average message has unit
//! variance; best responses ([`best_response_map`]) and deviation
//! certificates ([`fixed_point_certificate`]) are defined on that normalized
//! strategy surface, with the receiver re-fitting its gain to the declared
//! profile.
//!
//! The closed-form construction covers uncorrelated state/bias
//! (`V_xtheta = 0`) and cross-sensor-independent biases (`U_thetatheta =
//! 0`); [`MultiSensorConfig::supported_regime`] guards those paths. The
//! generic evaluators (full-vector receiver, per-sensor costs, sampling)
//! work for any exchangeable configuration.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gaussian::{
    self, inv_sqrt, lms_gain, matrix_sqrt, smallest_eig_tied, sorted_eigpairs,
    sym_inverse, SymMatrix,
};

/// Relative tolerance below which a coupling block counts as zero for the
/// closed-form regime guard.
const REGIME_RTOL: f64 = 1e-12;

/// Shared-state, private-bias population model: `x ~ N(0, V_xx)` and biases
/// `theta_i` with `Cov(theta_i) = V_thetatheta`,
/// `Cov(theta_i, theta_j) = U_thetatheta` for `i != j`, and
/// `Cov(x, theta_i) = V_xtheta` for every `i` (exchangeable across sensors).
#[derive(Debug, Clone)]
pub struct MultiSensorConfig {
    n: usize,
    v_xx: SymMatrix,
    v_thetatheta: SymMatrix,
    v_xtheta: DMatrix<f64>,
    u_thetatheta: SymMatrix,
}

impl MultiSensorConfig {
    /// Validates dimensions and exchangeability: `V_thetatheta -
    /// U_thetatheta` must be PSD and the joint covariance of
    /// `(x, theta_i, theta_j)` and of `(x, average bias)` must be valid.
    pub fn new(
        n: usize,
        v_xx: DMatrix<f64>,
        v_thetatheta: DMatrix<f64>,
        v_xtheta: DMatrix<f64>,
        u_thetatheta: DMatrix<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimensions("need at least one sensor".into()));
        }
        let v_xx = SymMatrix::new(v_xx)?;
        let v_thetatheta = SymMatrix::new(v_thetatheta)?;
        let u_thetatheta = SymMatrix::new(u_thetatheta)?;
        let n_x = v_xx.dim();
        if v_thetatheta.dim() != n_x
            || u_thetatheta.dim() != n_x
            || v_xtheta.shape() != (n_x, n_x)
        {
            return Err(Error::InvalidDimensions(
                "state and bias blocks must share one dimension".into(),
            ));
        }
        let scale = v_thetatheta.norm().max(1.0);
        let idio = v_thetatheta.as_matrix() - u_thetatheta.as_matrix();
        let min_idio = idio
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_idio < -1e-9 * scale {
            return Err(Error::InvalidCovariance(
                "per-sensor bias covariance must dominate the cross-sensor one".into(),
            ));
        }
        // The average bias has covariance (V + (N-1) U) / N; together with x
        // it must form a valid joint covariance.
        let avg = (v_thetatheta.as_matrix() + u_thetatheta.as_matrix() * (n as f64 - 1.0))
            / n as f64;
        let mut joint = DMatrix::zeros(2 * n_x, 2 * n_x);
        joint.view_mut((0, 0), (n_x, n_x)).copy_from(v_xx.as_matrix());
        joint.view_mut((0, n_x), (n_x, n_x)).copy_from(&v_xtheta);
        joint
            .view_mut((n_x, 0), (n_x, n_x))
            .copy_from(&v_xtheta.transpose());
        joint.view_mut((n_x, n_x), (n_x, n_x)).copy_from(&avg);
        let min_joint = joint
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_joint < -1e-9 * scale.max(v_xx.norm()) {
            return Err(Error::InvalidCovariance(
                "joint covariance of (x, average bias) is indefinite".into(),
            ));
        }
        Ok(Self {
            n,
            v_xx,
            v_thetatheta,
            v_xtheta,
            u_thetatheta,
        })
    }

    /// Scalar shorthand with uncorrelated state and biases.
    pub fn scalar(n: usize, v_xx: f64, v_thetatheta: f64) -> Result<Self> {
        Self::new(
            n,
            DMatrix::from_element(1, 1, v_xx),
            DMatrix::from_element(1, 1, v_thetatheta),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        )
    }

    /// Number of sensors.
    pub fn n(&self) -> usize {
        self.n
    }

    /// State (and bias) dimension.
    pub fn n_x(&self) -> usize {
        self.v_xx.dim()
    }

    /// State covariance.
    pub fn v_xx(&self) -> &SymMatrix {
        &self.v_xx
    }

    /// Per-sensor bias covariance.
    pub fn v_thetatheta(&self) -> &SymMatrix {
        &self.v_thetatheta
    }

    /// State-bias cross covariance.
    pub fn v_xtheta(&self) -> &DMatrix<f64> {
        &self.v_xtheta
    }

    /// Cross-sensor bias covariance.
    pub fn u_thetatheta(&self) -> &SymMatrix {
        &self.u_thetatheta
    }

    /// The same population with a different sensor count.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(
            n,
            self.v_xx.as_matrix().clone(),
            self.v_thetatheta.as_matrix().clone(),
            self.v_xtheta.clone(),
            self.u_thetatheta.as_matrix().clone(),
        )
    }

    /// Whether the closed-form equilibrium construction applies: it needs an
    /// uncorrelated state/bias pair and cross-sensor-independent biases.
    pub fn supported_regime(&self) -> Result<()> {
        let scale = self
            .v_xx
            .norm()
            .max(self.v_thetatheta.norm())
            .max(1.0);
        if self.v_xtheta.norm() > REGIME_RTOL * scale {
            return Err(Error::UnsupportedRegime(
                "closed form requires Cov(x, theta_i) = 0".into(),
            ));
        }
        if self.u_thetatheta.norm() > REGIME_RTOL * scale {
            return Err(Error::UnsupportedRegime(
                "closed form requires cross-sensor-independent biases".into(),
            ));
        }
        Ok(())
    }
}

/// One sensor's scalar-message affine policy
/// `z = a' x + b' theta + noise`, with noise variance `v_vv`.
#[derive(Debug, Clone)]
pub struct SensorPolicy {
    /// Loading on the shared state.
    pub a: DVector<f64>,
    /// Loading on the sensor's own bias.
    pub b: DVector<f64>,
    /// Message noise variance.
    pub v_vv: f64,
}

impl SensorPolicy {
    /// A silent sensor: all-zero loadings with unit noise.
    pub fn babbling(n_x: usize) -> Self {
        Self {
            a: DVector::zeros(n_x),
            b: DVector::zeros(n_x),
            v_vv: 1.0,
        }
    }

    fn norm(&self) -> f64 {
        (self.a.norm_squared() + self.b.norm_squared() + self.v_vv * self.v_vv).sqrt()
    }
}

/// The bias-first stacked whitened cost matrix
/// `[[0, -V_tt^(1/2) V_xx^(1/2)], [-V_xx^(1/2) V_tt^(1/2), -V_xx]]`
/// whose smallest eigenvector carries the equilibrium loadings: the first
/// `n_x` components drive the bias loading, the rest the state loading.
pub(crate) fn stacked_whitened_cost(
    v_xx: &SymMatrix,
    v_thetatheta: &SymMatrix,
) -> Result<SymMatrix> {
    let n_x = v_xx.dim();
    let sx = matrix_sqrt(v_xx)?;
    let st = matrix_sqrt(v_thetatheta)?;
    let cross = st.as_matrix() * sx.as_matrix();
    let mut h = DMatrix::zeros(2 * n_x, 2 * n_x);
    h.view_mut((0, n_x), (n_x, n_x)).copy_from(&(-&cross));
    h.view_mut((n_x, 0), (n_x, n_x)).copy_from(&(-cross.transpose()));
    h.view_mut((n_x, n_x), (n_x, n_x))
        .copy_from(&(-v_xx.as_matrix()));
    SymMatrix::new(h)
}

/// Symmetric-equilibrium description for one sensor count.
#[derive(Debug, Clone)]
pub struct SymmetricEquilibrium {
    /// The policy every sensor declares.
    pub policy: SensorPolicy,
    /// Receiver gain on the average message.
    pub receiver_gain: DVector<f64>,
    /// Receiver mean squared error `E||x - xhat||^2`.
    pub receiver_error: f64,
    /// Any one sensor's cost `E||(x + theta_i) - xhat||^2` (identical across
    /// sensors by symmetry).
    pub sensor_cost: f64,
    /// Variance of the average message (unity at equilibrium).
    pub aggregate_variance: f64,
    /// Whether the eigenvector choice behind the policy was tied.
    pub eigen_tie: bool,
}

struct EquilibriumCore {
    xi_bias: DVector<f64>,
    xi_state: DVector<f64>,
    tie: bool,
}

fn equilibrium_core(config: &MultiSensorConfig) -> Result<EquilibriumCore> {
    config.supported_regime()?;
    let h = stacked_whitened_cost(&config.v_xx, &config.v_thetatheta)?;
    let pairs = sorted_eigpairs(&h);
    let pair = &pairs[0];
    if pair.value >= 0.0 {
        return Err(Error::NotPositiveDefinite(
            "whitened cost has no negative eigenvalue".into(),
        ));
    }
    let n_x = config.n_x();
    Ok(EquilibriumCore {
        xi_bias: pair.vector.rows(0, n_x).into_owned(),
        xi_state: pair.vector.rows(n_x, n_x).into_owned(),
        tie: smallest_eig_tied(&pairs),
    })
}

/// Receiver error at the symmetric equilibrium, as a closed form in the
/// whitened eigenvector: `trace(V_xx) - xi_s' V_xx xi_s / (1 + (N-1)
/// ||xi_b||^2)`.
fn error_from_core(config: &MultiSensorConfig, core: &EquilibriumCore) -> f64 {
    let shrink = 1.0 + (config.n as f64 - 1.0) * core.xi_bias.norm_squared();
    let captured = (core.xi_state.transpose() * config.v_xx.as_matrix() * &core.xi_state)[(0, 0)];
    config.v_xx.as_matrix().trace() - captured / shrink
}

/// Computes the symmetric equilibrium for the configured sensor count.
///
/// The shared policy is, with `xi = (xi_b, xi_s)` the smallest unit
/// eigenvector of the whitened cost and `s = (1 + (N-1) ||xi_b||^2)^(-1/2)`:
/// `b = s N V_tt^(-1/2) xi_b`, `a = s V_xx^(-1/2) xi_s`, no message noise.
/// The induced average message has unit variance.
pub fn symmetric_equilibrium(config: &MultiSensorConfig) -> Result<SymmetricEquilibrium> {
    let core = equilibrium_core(config)?;
    let n = config.n as f64;
    let s = (1.0 + (n - 1.0) * core.xi_bias.norm_squared()).sqrt().recip();
    let inv_sx = inv_sqrt(&config.v_xx)?;
    let inv_st = inv_sqrt(&config.v_thetatheta)?;
    let policy = SensorPolicy {
        a: inv_sx.as_matrix() * &core.xi_state * s,
        b: inv_st.as_matrix() * &core.xi_bias * (s * n),
        v_vv: 0.0,
    };
    let aggregate_variance = aggregate_message_variance(config, &policy);
    // Receiver: LMS on the unit-variance average message.
    let v_xybar = config.v_xx.as_matrix() * &policy.a;
    let receiver_gain = &v_xybar / aggregate_variance;
    let receiver_error = config.v_xx.as_matrix().trace()
        - v_xybar.norm_squared() / aggregate_variance;
    let sensor_cost = symmetric_sensor_cost(config, &policy, &receiver_gain);
    Ok(SymmetricEquilibrium {
        policy,
        receiver_gain,
        receiver_error,
        sensor_cost,
        aggregate_variance,
        eigen_tie: core.tie,
    })
}

/// Variance of the average message when every sensor plays `policy`
/// (uncorrelated-bias regime).
fn aggregate_message_variance(config: &MultiSensorConfig, policy: &SensorPolicy) -> f64 {
    let n = config.n as f64;
    let signal = (policy.a.transpose() * config.v_xx.as_matrix() * &policy.a)[(0, 0)];
    let bias = (policy.b.transpose() * config.v_thetatheta.as_matrix() * &policy.b)[(0, 0)];
    signal + (bias + policy.v_vv) / n
}

/// One sensor's cost under a shared policy and a receiver gain on the
/// average message (uncorrelated-bias regime).
fn symmetric_sensor_cost(
    config: &MultiSensorConfig,
    policy: &SensorPolicy,
    gain: &DVector<f64>,
) -> f64 {
    let n = config.n as f64;
    let v_ss = config.v_xx.as_matrix().trace() + config.v_thetatheta.as_matrix().trace();
    let v_xybar = config.v_xx.as_matrix() * &policy.a;
    let v_tybar = config.v_thetatheta.as_matrix() * &policy.b / n;
    let v_sybar = v_xybar + v_tybar;
    let var = aggregate_message_variance(config, policy);
    v_ss - 2.0 * gain.dot(&v_sybar) + gain.norm_squared() * var
}

/// Receiver error for the symmetric equilibrium at each sensor count
/// `1..=n_max`, sharing one eigendecomposition across all counts.
pub fn error_vs_n(
    v_xx: &DMatrix<f64>,
    v_thetatheta: &DMatrix<f64>,
    n_max: usize,
) -> Result<Vec<f64>> {
    let base = MultiSensorConfig::new(
        1,
        v_xx.clone(),
        v_thetatheta.clone(),
        DMatrix::zeros(v_xx.nrows(), v_xx.nrows()),
        DMatrix::zeros(v_xx.nrows(), v_xx.nrows()),
    )?;
    let core = equilibrium_core(&base)?;
    (1..=n_max)
        .map(|n| Ok(error_from_core(&base.with_n(n)?, &core)))
        .collect()
}

/// The best response of one sensor to the other `N - 1` declared policies,
/// on the unit-aggregate-variance strategy surface.
///
/// Writing `abar = sum of others' state loadings` and `sbar^2 = sum of
/// others' bias-plus-noise message variance`, the remaining signal budget is
/// `rho = 1 - sbar^2 / N^2`. A negative budget means the others' noise
/// already exceeds the unit aggregate variance and no response exists; a
/// zero budget forces a degenerate response that only cancels the others'
/// state content. Otherwise the response is the scaled eigenvector solution
/// `b = sqrt(rho) N V_tt^(-1/2) xi_b`,
/// `a = sqrt(rho) N V_xx^(-1/2) xi_s - abar`, with no message noise.
pub fn best_response_map(
    config: &MultiSensorConfig,
    others: &[SensorPolicy],
) -> Result<SensorPolicy> {
    config.supported_regime()?;
    if others.len() + 1 != config.n {
        return Err(Error::InvalidDimensions(format!(
            "expected {} opponent policies, got {}",
            config.n - 1,
            others.len()
        )));
    }
    let n_x = config.n_x();
    let n = config.n as f64;
    let mut abar = DVector::zeros(n_x);
    let mut noise = 0.0;
    for other in others {
        if other.a.len() != n_x || other.b.len() != n_x {
            return Err(Error::InvalidDimensions(
                "opponent policy dimension mismatch".into(),
            ));
        }
        abar += &other.a;
        noise += (other.b.transpose() * config.v_thetatheta.as_matrix() * &other.b)[(0, 0)]
            + other.v_vv;
    }
    let rho = 1.0 - noise / (n * n);
    if rho < -1e-12 {
        return Err(Error::InfeasibleOthers(format!(
            "opponents' message noise exceeds the unit aggregate budget by {:.3e}",
            -rho
        )));
    }
    if rho <= 1e-12 {
        // No budget left for signal: cancel the others' state content so the
        // average message stays exactly unit-variance noise.
        return Ok(SensorPolicy {
            a: -abar,
            b: DVector::zeros(n_x),
            v_vv: 0.0,
        });
    }
    let core = equilibrium_core(config)?;
    let inv_sx = inv_sqrt(&config.v_xx)?;
    let inv_st = inv_sqrt(&config.v_thetatheta)?;
    let scale = rho.sqrt() * n;
    Ok(SensorPolicy {
        a: inv_sx.as_matrix() * &core.xi_state * scale - abar,
        b: inv_st.as_matrix() * &core.xi_bias * scale,
        v_vv: 0.0,
    })
}

// ---------------------------------------------------------------------------
// Generic heterogeneous-profile evaluators
// ---------------------------------------------------------------------------

/// Covariance matrix of the full message vector for an arbitrary profile,
/// with the cross covariances to the state and to one target sensor's
/// `x + theta_i`.
pub(crate) fn profile_covariances(
    config: &MultiSensorConfig,
    policies: &[SensorPolicy],
    target: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let n = policies.len();
    if n != config.n || target >= n {
        return Err(Error::InvalidDimensions(
            "profile length or target index does not match the config".into(),
        ));
    }
    let n_x = config.n_x();
    let v_xx = config.v_xx.as_matrix();
    let v_xt = &config.v_xtheta;
    let v_tt = config.v_thetatheta.as_matrix();
    let u_tt = config.u_thetatheta.as_matrix();
    let mut sigma = DMatrix::zeros(n, n);
    let mut v_xm = DMatrix::zeros(n_x, n);
    let mut v_sm = DMatrix::zeros(n_x, n);
    for j in 0..n {
        let pj = &policies[j];
        // Cov(x, z_j) = V_xx a_j + V_xtheta b_j.
        let xz = v_xx * &pj.a + v_xt * &pj.b;
        // Cov(theta_i, z_j) includes the own-bias block only when i = j.
        let tz = v_xt.transpose() * &pj.a
            + if j == target { v_tt * &pj.b } else { u_tt * &pj.b };
        v_xm.set_column(j, &xz);
        v_sm.set_column(j, &(&xz + tz));
        for k in 0..n {
            let pk = &policies[k];
            let mut cov = (pj.a.transpose() * v_xx * &pk.a)[(0, 0)]
                + (pj.a.transpose() * v_xt * &pk.b)[(0, 0)]
                + (pj.b.transpose() * v_xt.transpose() * &pk.a)[(0, 0)];
            cov += if j == k {
                (pj.b.transpose() * v_tt * &pk.b)[(0, 0)] + pj.v_vv
            } else {
                (pj.b.transpose() * u_tt * &pk.b)[(0, 0)]
            };
            sigma[(j, k)] = cov;
        }
    }
    Ok(((&sigma + sigma.transpose()) * 0.5, v_xm, v_sm))
}

/// The receiver's LMS response to an arbitrary (possibly heterogeneous)
/// declared profile: gain on the full message vector and the achieved state
/// error.
pub fn heterogeneous_receiver(
    config: &MultiSensorConfig,
    policies: &[SensorPolicy],
) -> Result<(DMatrix<f64>, f64)> {
    let (sigma, v_xm, _) = profile_covariances(config, policies, 0)?;
    let lms = lms_gain(config.v_xx.as_matrix(), &v_xm, &sigma)?;
    let error = lms.error_trace();
    Ok((lms.gain, error))
}

/// Sensor `target`'s cost `E||(x + theta_target) - G z||^2` under an
/// arbitrary profile and receiver gain on the full message vector.
pub fn heterogeneous_sensor_cost(
    config: &MultiSensorConfig,
    policies: &[SensorPolicy],
    target: usize,
    gain: &DMatrix<f64>,
) -> Result<f64> {
    let (sigma, _, v_sm) = profile_covariances(config, policies, target)?;
    let v_ss = config.v_xx.as_matrix().trace()
        + 2.0 * config.v_xtheta.trace()
        + config.v_thetatheta.as_matrix().trace();
    Ok(v_ss - 2.0 * (&v_sm * gain.transpose()).trace()
        + (gain * sigma * gain.transpose()).trace())
}

/// Report of the sufficiency check for the average message.
#[derive(Debug, Clone)]
pub struct AverageSufficesReport {
    /// Receiver error using all `N` messages separately.
    pub full_error: f64,
    /// Receiver error using only the average message.
    pub aggregate_error: f64,
    /// Largest pointwise gap between the two estimates over the sampled
    /// draws.
    pub max_pointwise_gap: f64,
    /// Whether the errors (and sampled estimates) agree within `1e-9`.
    pub equal: bool,
}

/// Checks that the average message is a sufficient statistic when every
/// sensor declares the same policy: the full-vector LMS estimate and the
/// average-message LMS estimate must coincide, in error and pointwise on
/// sampled draws. This holds for any exchangeable configuration, including
/// correlated state/bias and cross-correlated biases. Heterogeneous
/// profiles generally break the equality; the report then records the gap.
pub fn average_suffices_check(
    config: &MultiSensorConfig,
    policies: &[SensorPolicy],
    samples: usize,
    seed: u64,
) -> Result<AverageSufficesReport> {
    let n = config.n;
    if policies.len() != n {
        return Err(Error::InvalidDimensions(
            "profile length does not match the sensor count".into(),
        ));
    }
    let (sigma, v_xm, _) = profile_covariances(config, policies, 0)?;
    let full = lms_gain(config.v_xx.as_matrix(), &v_xm, &sigma)?;
    // Average-message statistics: ybar = (1/N) 1' z.
    let ones = DVector::from_element(n, 1.0 / n as f64);
    let var_ybar = (ones.transpose() * &sigma * &ones)[(0, 0)];
    let v_x_ybar = &v_xm * &ones;
    let gain_ybar = &v_x_ybar / var_ybar;
    let aggregate_error =
        config.v_xx.as_matrix().trace() - v_x_ybar.norm_squared() / var_ybar;
    let full_error = full.error_trace();

    // Pointwise comparison on sampled draws.
    let draws = sample_profile_messages(config, policies, samples, seed)?;
    let mut max_gap = 0.0_f64;
    for s in 0..samples {
        let z = draws.column(s);
        let est_full = &full.gain * z;
        let ybar = ones.dot(&z.clone_owned());
        let est_aggr = &gain_ybar * ybar;
        max_gap = max_gap.max((est_full - est_aggr).norm());
    }
    let equal = (full_error - aggregate_error).abs() < 1e-9 && max_gap < 1e-9;
    Ok(AverageSufficesReport {
        full_error,
        aggregate_error,
        max_pointwise_gap: max_gap,
        equal,
    })
}

/// Draws realized message vectors (one column per sample) for an arbitrary
/// profile, using the generative decomposition `theta_i = B x + g + e_i`
/// with `B = V_thetax V_xx^{-1}`, shared component `g` carrying the
/// cross-sensor covariance and idiosyncratic `e_i` the remainder.
fn sample_profile_messages(
    config: &MultiSensorConfig,
    policies: &[SensorPolicy],
    samples: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let n = config.n;
    let n_x = config.n_x();
    let v_xx_inv = sym_inverse(&config.v_xx)?;
    let b_map = config.v_xtheta.transpose() * &v_xx_inv;
    let explained = &b_map * config.v_xx.as_matrix() * b_map.transpose();
    let common = config.u_thetatheta.as_matrix() - &explained;
    let idio = config.v_thetatheta.as_matrix() - config.u_thetatheta.as_matrix();
    let x_factor = gaussian::sampling_factor(config.v_xx.as_matrix())?;
    let common_factor = gaussian::sampling_factor(&common).map_err(|_| {
        Error::InvalidCovariance(
            "cross-sensor bias structure is not realizable as a shared component".into(),
        )
    })?;
    let idio_factor = gaussian::sampling_factor(&idio)?;
    let mut rng = gaussian::stream_rng(seed, 0);
    let mut normal = |len: usize| {
        let mut v = DVector::zeros(len);
        for i in 0..len {
            v[i] = StandardNormal.sample(&mut rng);
        }
        v
    };
    let mut out = DMatrix::zeros(n, samples);
    for s in 0..samples {
        let x = &x_factor * normal(n_x);
        let g = &common_factor * normal(n_x);
        for (j, pj) in policies.iter().enumerate() {
            let theta = &b_map * &x + &g + &idio_factor * normal(n_x);
            let noise = pj.v_vv.sqrt() * normal(1)[0];
            out[(j, s)] = pj.a.dot(&x) + pj.b.dot(&theta) + noise;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Fixed point and deviation certificate
// ---------------------------------------------------------------------------

/// Result of the symmetric fixed-point and deviation check.
#[derive(Debug, Clone)]
pub struct FixedPointCertificate {
    /// `||best_response(policy applied by everyone else) - policy||`.
    pub residual: f64,
    /// Number of deviation trials.
    pub trials: usize,
    /// Worst cost improvement any projected deviation achieved.
    pub worst_improvement: f64,
    /// Trial index of the worst improvement when it exceeded tolerance.
    pub improving_trial: Option<usize>,
    /// True when the residual is below `1e-8` and no deviation improved by
    /// more than `1e-6`.
    pub pass: bool,
}

/// Cost of sensor 0 deviating to `deviant` while the other `N - 1` sensors
/// keep `kept`, with the receiver re-fitting its average-message gain to the
/// deviated profile. Returns the cost and the deviated aggregate variance.
pub(crate) fn deviation_cost(
    config: &MultiSensorConfig,
    kept: &SensorPolicy,
    deviant: &SensorPolicy,
) -> (f64, f64) {
    let n = config.n as f64;
    let v_xx = config.v_xx.as_matrix();
    let v_tt = config.v_thetatheta.as_matrix();
    let abar_others = &kept.a * (n - 1.0);
    let noise_others =
        (n - 1.0) * ((kept.b.transpose() * v_tt * &kept.b)[(0, 0)] + kept.v_vv);
    let a_total = (&deviant.a + abar_others) / n;
    let var_ybar = (a_total.transpose() * v_xx * &a_total)[(0, 0)]
        + ((deviant.b.transpose() * v_tt * &deviant.b)[(0, 0)]
            + deviant.v_vv
            + noise_others)
            / (n * n);
    let v_x_ybar = v_xx * &a_total;
    let gain = &v_x_ybar / var_ybar;
    let v_s_ybar = &v_x_ybar + v_tt * &deviant.b / n;
    let v_ss = v_xx.trace() + v_tt.trace();
    let cost = v_ss - 2.0 * gain.dot(&v_s_ybar) + gain.norm_squared() * var_ybar;
    (cost, var_ybar)
}

/// Rescales a deviant policy (loadings by `t`, noise by `t^2`) so the
/// deviated profile's aggregate variance returns to one.
fn project_to_unit_aggregate(
    config: &MultiSensorConfig,
    kept: &SensorPolicy,
    deviant: &SensorPolicy,
) -> Option<SensorPolicy> {
    let n = config.n as f64;
    let v_xx = config.v_xx.as_matrix();
    let v_tt = config.v_thetatheta.as_matrix();
    let abar_others = &kept.a * (n - 1.0);
    let noise_others =
        (n - 1.0) * ((kept.b.transpose() * v_tt * &kept.b)[(0, 0)] + kept.v_vv);
    let quad = ((deviant.a.transpose() * v_xx * &deviant.a)[(0, 0)]
        + (deviant.b.transpose() * v_tt * &deviant.b)[(0, 0)]
        + deviant.v_vv)
        / (n * n);
    let lin = 2.0 * (deviant.a.transpose() * v_xx * &abar_others)[(0, 0)] / (n * n);
    let base = ((abar_others.transpose() * v_xx * &abar_others)[(0, 0)] + noise_others)
        / (n * n);
    // Solve quad t^2 + lin t + base = 1 for the positive root.
    if quad <= 0.0 {
        return None;
    }
    let disc = lin * lin + 4.0 * quad * (1.0 - base);
    if disc < 0.0 {
        return None;
    }
    let t = (-lin + disc.sqrt()) / (2.0 * quad);
    if !(t.is_finite() && t > 0.0) {
        return None;
    }
    Some(SensorPolicy {
        a: &deviant.a * t,
        b: &deviant.b * t,
        v_vv: deviant.v_vv * t * t,
    })
}

/// Verifies that a shared policy is a symmetric fixed point of the best
/// response and survives random unilateral deviations.
///
/// Deviations perturb one sensor's loadings at norms `1e-2` and `1e-1`
/// (every fourth trial also adds message noise), are projected back to the
/// unit-aggregate-variance surface, and are priced with the receiver
/// re-fitting its gain; none may beat the declared policy by more than
/// `1e-6`.
pub fn fixed_point_certificate(
    config: &MultiSensorConfig,
    policy: &SensorPolicy,
    trials: usize,
    seed: u64,
) -> Result<FixedPointCertificate> {
    config.supported_regime()?;
    let others: Vec<SensorPolicy> = vec![policy.clone(); config.n - 1];
    let response = best_response_map(config, &others)?;
    let residual = ((&response.a - &policy.a).norm_squared()
        + (&response.b - &policy.b).norm_squared()
        + (response.v_vv - policy.v_vv).powi(2))
    .sqrt();

    let (base_cost, _) = deviation_cost(config, policy, policy);
    let n_x = config.n_x();
    let mut worst = f64::NEG_INFINITY;
    let mut improving_trial = None;
    for trial in 0..trials {
        let mut rng = gaussian::stream_rng(seed, trial as u64);
        let scale = if trial % 2 == 0 { 1e-2 } else { 1e-1 };
        let mut da: DVector<f64> =
            DVector::from_fn(n_x, |_, _| StandardNormal.sample(&mut rng));
        let mut db: DVector<f64> =
            DVector::from_fn(n_x, |_, _| StandardNormal.sample(&mut rng));
        let total = (da.norm_squared() + db.norm_squared()).sqrt();
        if total > 0.0 {
            da *= scale * policy.norm().max(1.0) / total;
            db *= scale * policy.norm().max(1.0) / total;
        }
        let mut deviant = SensorPolicy {
            a: &policy.a + da,
            b: &policy.b + db,
            v_vv: policy.v_vv,
        };
        if trial % 4 == 3 {
            deviant.v_vv += rng.gen_range(0.0..scale);
        }
        let Some(projected) = project_to_unit_aggregate(config, policy, &deviant) else {
            continue;
        };
        let (cost, _) = deviation_cost(config, policy, &projected);
        let improvement = base_cost - cost;
        if improvement > worst {
            worst = improvement;
            if improvement > 1e-6 {
                improving_trial = Some(trial);
            }
        }
    }
    let pass = residual < 1e-8 && worst <= 1e-6;
    Ok(FixedPointCertificate {
        residual,
        trials,
        worst_improvement: worst,
        improving_trial,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// Empirical receiver and sensor-0 errors from simulating the declared
/// profile with the receiver's full-vector gain.
pub fn monte_carlo_profile(
    config: &MultiSensorConfig,
    policies: &[SensorPolicy],
    gain: &DMatrix<f64>,
    samples: usize,
    seed: u64,
) -> Result<crate::static_single::McEstimate> {
    let n = config.n;
    let n_x = config.n_x();
    if policies.len() != n || gain.shape() != (n_x, n) {
        return Err(Error::InvalidDimensions(
            "profile or gain shape does not match the config".into(),
        ));
    }
    let v_xx_inv = sym_inverse(&config.v_xx)?;
    let b_map = config.v_xtheta.transpose() * &v_xx_inv;
    let explained = &b_map * config.v_xx.as_matrix() * b_map.transpose();
    let common = config.u_thetatheta.as_matrix() - &explained;
    let idio = config.v_thetatheta.as_matrix() - config.u_thetatheta.as_matrix();
    let x_factor = gaussian::sampling_factor(config.v_xx.as_matrix())?;
    let common_factor = gaussian::sampling_factor(&common)?;
    let idio_factor = gaussian::sampling_factor(&idio)?;
    let mut rng = gaussian::stream_rng(seed, 0);
    let mut normal = |len: usize| {
        let mut v = DVector::zeros(len);
        for i in 0..len {
            v[i] = StandardNormal.sample(&mut rng);
        }
        v
    };
    let mut rec = Vec::with_capacity(samples);
    let mut sen = Vec::with_capacity(samples);
    let mut z = DVector::zeros(n);
    for _ in 0..samples {
        let x = &x_factor * normal(n_x);
        let g = &common_factor * normal(n_x);
        let mut theta0 = DVector::zeros(n_x);
        for (j, pj) in policies.iter().enumerate() {
            let theta = &b_map * &x + &g + &idio_factor * normal(n_x);
            if j == 0 {
                theta0 = theta.clone();
            }
            z[j] = pj.a.dot(&x) + pj.b.dot(&theta) + pj.v_vv.sqrt() * normal(1)[0];
        }
        let xhat = gain * &z;
        rec.push((&x - &xhat).norm_squared());
        sen.push((x + theta0 - xhat).norm_squared());
    }
    let stat = |vals: &[f64]| {
        let m = vals.iter().sum::<f64>() / samples as f64;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
            / (samples as f64 - 1.0).max(1.0);
        (m, (var / samples as f64).sqrt())
    };
    let (receiver_mean, receiver_se) = stat(&rec);
    let (sensor_mean, sensor_se) = stat(&sen);
    Ok(crate::static_single::McEstimate {
        receiver_mean,
        receiver_se,
        sensor_mean,
        sensor_se,
    })
}
