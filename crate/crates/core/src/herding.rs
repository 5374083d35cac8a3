//! Cooperative "herding" profile of the synchronous many-sensor game: every
//! sensor declares one shared policy and the receiver averages the messages.
//!
//! With identical affine policies the average message is a sufficient
//! statistic, so the `N`-sensor problem collapses to a single aggregate
//! sensor whose private bias is the average `theta_bar` with covariance
//! `V_tt / N` (uncorrelated biases). Averaging washes the biases out, so the
//! receiver error *improves* with the crowd — the opposite of the
//! competitive symmetric equilibrium, where every added sensor pushes the
//! error toward the prior. The profile is cooperative, not self-enforcing:
//! [`break_from_herd_witness`] prices the strict gain one sensor obtains by
//! unilaterally abandoning it.
//!
//! Closed scalar forms for isotropic covariances ([`varsigma`],
//! [`unit_herding_error`]) and the non-strategic noisy baseline
//! ([`baseline_noisy_honest`]) support the error-versus-crowd-size
//! comparisons.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::JointGaussian;
use crate::multi_sync::{
    best_response_map, deviation_cost, heterogeneous_receiver, heterogeneous_sensor_cost,
    profile_covariances, MultiSensorConfig, SensorPolicy,
};
use crate::static_single::equilibrium_no_side_channel;

/// Relative tolerance for recognizing a scaled-identity covariance block.
const ISOTROPY_RTOL: f64 = 1e-12;

/// The shared-policy herding profile for one sensor count.
#[derive(Debug, Clone)]
pub struct HerdingReport {
    /// The policy every sensor declares: state loading `a`, own-bias loading
    /// `b`, message noise variance `v_vv` (zero here).
    pub policy: SensorPolicy,
    /// Receiver LMS gain on the average message.
    pub receiver_gain: DVector<f64>,
    /// Receiver mean squared error `E||x - xhat||^2`.
    pub receiver_error: f64,
    /// Each sensor's cost `E||(x + theta_i) - xhat||^2`, identical across
    /// sensors: the aggregate-sensor cost plus the bias-spread constant
    /// `((N - 1) / N) trace(V_tt - U_tt)`.
    pub sensor_cost: f64,
    /// Variance of the average message (unity by construction).
    pub aggregate_variance: f64,
    /// Captured share of one state coordinate's variance when both
    /// covariance blocks are isotropic (`V_xx = eta_x I`, `V_tt = eta_t I`):
    /// `receiver_error = eta_x (n_x - share)`. `None` for anisotropic
    /// blocks.
    pub varsigma: Option<f64>,
    /// Residual of [`cost_decomposition_check`] at the computed policy.
    pub decomposition_residual: f64,
    /// Whether the aggregate eigenvector choice was tied (always true for
    /// isotropic blocks with `n_x >= 2`).
    pub eigen_tie: bool,
}

/// `Some(eta)` when `m` equals `eta I` entrywise within a tight relative
/// tolerance.
fn isotropic_scale(m: &DMatrix<f64>) -> Option<f64> {
    let eta = m[(0, 0)];
    let tol = ISOTROPY_RTOL * eta.abs().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let want = if i == j { eta } else { 0.0 };
            if (m[(i, j)] - want).abs() > tol {
                return None;
            }
        }
    }
    Some(eta)
}

/// Computes the herding profile: every sensor plays the policy of the single
/// aggregate sensor whose bias is the average `theta_bar` (covariance
/// `V_tt / N`), and the receiver runs LMS on the average message.
///
/// Requires the uncorrelated-bias regime (`V_xt = 0`, `U_tt = 0`); one
/// scalar message per sensor. The resulting average message has unit
/// variance and no noise, and like every equilibrium representative here the
/// policy family is closed under nonzero rescaling.
pub fn herding_equilibrium(config: &MultiSensorConfig) -> Result<HerdingReport> {
    config.supported_regime()?;
    let n_x = config.n_x();
    let nf = config.n() as f64;
    let aggregate_prior = JointGaussian::without_side_channel(
        config.v_xx().as_matrix().clone(),
        DMatrix::zeros(n_x, n_x),
        config.v_thetatheta().as_matrix() / nf,
    )?;
    let aggregate = equilibrium_no_side_channel(&aggregate_prior, 1)?;
    // Each sensor loads its own bias exactly as the aggregate sensor loads
    // the average bias; averaging the messages then reproduces the aggregate
    // message. Per-sensor noise gets averaged N-fold down, so matching the
    // aggregate noise variance requires N times it — zero either way.
    let policy = SensorPolicy {
        a: aggregate.policy.alpha1.column(0).into_owned(),
        b: aggregate.policy.alpha2.column(0).into_owned(),
        v_vv: nf * aggregate.policy.v_vv.as_matrix()[(0, 0)],
    };
    let receiver_gain: DVector<f64> = aggregate.receiver_gain.gain.column(0).into_owned();
    let receiver_error = aggregate.receiver_error;
    let sensor_cost = aggregate.sensor_cost
        + (nf - 1.0) / nf
            * (config.v_thetatheta().as_matrix().trace()
                - config.u_thetatheta().as_matrix().trace());
    let aggregate_variance = (policy.a.transpose() * config.v_xx().as_matrix() * &policy.a)
        [(0, 0)]
        + ((policy.b.transpose() * config.v_thetatheta().as_matrix() * &policy.b)[(0, 0)]
            + policy.v_vv)
            / nf;
    let varsigma = match (
        isotropic_scale(config.v_xx().as_matrix()),
        isotropic_scale(config.v_thetatheta().as_matrix()),
    ) {
        (Some(eta_x), Some(_)) => {
            Some((config.v_xx().as_matrix().trace() - receiver_error) / eta_x)
        }
        _ => None,
    };
    let decomposition_residual = cost_decomposition_check(config, &policy)?;
    Ok(HerdingReport {
        policy,
        receiver_gain,
        receiver_error,
        sensor_cost,
        aggregate_variance,
        varsigma,
        decomposition_residual,
        eigen_tie: aggregate.eigen_tie,
    })
}

/// Herding receiver error at each sensor count `1..=n_max` for uncorrelated
/// biases, by solving the aggregate game (bias covariance `V_tt / N`) at
/// every count.
pub fn herding_error_vs_n(
    v_xx: &DMatrix<f64>,
    v_thetatheta: &DMatrix<f64>,
    n_max: usize,
) -> Result<Vec<f64>> {
    let n_x = v_xx.nrows();
    (1..=n_max)
        .map(|n| {
            let prior = JointGaussian::without_side_channel(
                v_xx.clone(),
                DMatrix::zeros(n_x, n_x),
                v_thetatheta / n as f64,
            )?;
            Ok(equilibrium_no_side_channel(&prior, 1)?.receiver_error)
        })
        .collect()
}

/// Closed-form captured share for isotropic blocks `V_xx = eta_x I`,
/// `V_tt = eta_theta I`.
///
/// With `omega = eta_x * eta_theta / N` and `lambda` the smallest eigenvalue
/// of the 2x2 whitened aggregate cost,
/// `lambda = -(eta_x + sqrt(eta_x^2 + 4 omega)) / 2`, the receiver recovers
/// the share `lambda^2 / (lambda^2 + omega)` of one state coordinate's
/// variance: the herding error is `eta_x * (n_x - varsigma)`. Strictly
/// increasing in `N` with limit 1, so the scalar-state error decreases to
/// zero.
pub fn varsigma(n: usize, eta_x: f64, eta_theta: f64) -> f64 {
    assert!(n >= 1, "sensor count must be at least one");
    assert!(
        eta_x > 0.0 && eta_theta > 0.0,
        "variance scales must be positive"
    );
    let omega = eta_x * eta_theta / n as f64;
    let lambda = -(eta_x + (eta_x * eta_x + 4.0 * omega).sqrt()) / 2.0;
    let l2 = lambda * lambda;
    l2 / (l2 + omega)
}

/// Receiver error of the unit-variance scalar herding profile:
/// `1 - varsigma(N, 1, 1) = (N + 4 - sqrt(N (N + 4))) / (2 (N + 4))`,
/// strictly decreasing toward zero like `1/N`.
pub fn unit_herding_error(n: usize) -> f64 {
    assert!(n >= 1, "sensor count must be at least one");
    let nf = n as f64;
    (nf + 4.0 - (nf * (nf + 4.0)).sqrt()) / (2.0 * (nf + 4.0))
}

/// Error of the non-strategic baseline in which each of `N` sensors reports
/// the unit-variance scalar state plus i.i.d. noise of variance `sigma`:
/// `sigma / (sigma + N)`.
///
/// At `sigma = (3 - sqrt(5)) / 2 ~ 0.382` this matches the herding error for
/// a single sensor; the herding-to-baseline error ratio tends to `1/sigma`
/// as the crowd grows, so accurate-but-strategic herding sensors beat
/// honest-but-noisy ones exactly when `sigma > 1`.
pub fn baseline_noisy_honest(n: usize, sigma: f64) -> f64 {
    assert!(n >= 1, "sensor count must be at least one");
    assert!(sigma > 0.0, "noise variance must be positive");
    sigma / (sigma + n as f64)
}

/// Verifies the cost decomposition for identical policies: against the
/// full-message-vector LMS estimate, sensor `i`'s cost
/// `E||(x + theta_i) - xhat||^2` equals the aggregate-target cost
/// `E||(x + theta_bar) - xhat||^2` plus the bias-spread constant
/// `((N - 1) / N) trace(V_tt - U_tt)`.
///
/// Returns the absolute residual between the two sides. The identity holds
/// for arbitrary `V_xt` and `U_tt` (no regime restriction) and any shared
/// policy; the constant vanishes at `N = 1`.
pub fn cost_decomposition_check(
    config: &MultiSensorConfig,
    policy: &SensorPolicy,
) -> Result<f64> {
    let n = config.n();
    let nf = n as f64;
    let n_x = config.n_x();
    let policies = vec![policy.clone(); n];
    let (gain, _) = heterogeneous_receiver(config, &policies)?;
    let own_cost = heterogeneous_sensor_cost(config, &policies, 0, &gain)?;

    // Aggregate-target cost against the same estimator. Under identical
    // policies Cov(x + theta_bar, z_j) is the same for every message j.
    let (sigma, _, _) = profile_covariances(config, &policies, 0)?;
    let v_xx = config.v_xx().as_matrix();
    let v_xt = config.v_xtheta();
    let v_tt = config.v_thetatheta().as_matrix();
    let u_tt = config.u_thetatheta().as_matrix();
    let v_tbar = (v_tt + u_tt * (nf - 1.0)) / nf;
    let cov_sx = v_xx + v_xt.transpose();
    let cov_st = v_xt + &v_tbar;
    let col = &cov_sx * &policy.a + &cov_st * &policy.b;
    let mut v_sm = DMatrix::zeros(n_x, n);
    for j in 0..n {
        v_sm.set_column(j, &col);
    }
    let v_ss = v_xx.trace() + 2.0 * v_xt.trace() + v_tbar.trace();
    let aggregate_cost = v_ss - 2.0 * (&v_sm * gain.transpose()).trace()
        + (&gain * &sigma * gain.transpose()).trace();
    let constant = (nf - 1.0) / nf * (v_tt.trace() - u_tt.trace());
    Ok((own_cost - aggregate_cost - constant).abs())
}

/// Witness that herding is cooperative rather than self-enforcing.
#[derive(Debug, Clone)]
pub struct BreakFromHerdWitness {
    /// Sensor 0's cost when it stays with the herd policy.
    pub herd_cost: f64,
    /// Sensor 0's cost after unilaterally switching to its best response,
    /// with the receiver re-fitting its average-message gain.
    pub response_cost: f64,
    /// `herd_cost - response_cost`.
    pub improvement: f64,
    /// Whether the improvement clears the strictness threshold `1e-6`.
    pub strict: bool,
}

/// Prices one sensor's unilateral best response against `N - 1` herd
/// members. Needs at least two sensors; for `N >= 2` the deviation strictly
/// improves, confirming the herding profile is not a fixed point of the
/// competitive best response.
pub fn break_from_herd_witness(config: &MultiSensorConfig) -> Result<BreakFromHerdWitness> {
    if config.n() < 2 {
        return Err(Error::InvalidDimensions(
            "breaking away needs at least two sensors".into(),
        ));
    }
    let herd = herding_equilibrium(config)?;
    let others = vec![herd.policy.clone(); config.n() - 1];
    let response = best_response_map(config, &others)?;
    let (herd_cost, _) = deviation_cost(config, &herd.policy, &herd.policy);
    let (response_cost, _) = deviation_cost(config, &herd.policy, &response);
    let improvement = herd_cost - response_cost;
    Ok(BreakFromHerdWitness {
        herd_cost,
        response_cost,
        improvement,
        strict: improvement > 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::stream_rng;
    use crate::multi_sync::{monte_carlo_profile, symmetric_equilibrium};
    use rand::Rng;

    fn unit_config(n: usize) -> MultiSensorConfig {
        MultiSensorConfig::scalar(n, 1.0, 1.0).unwrap()
    }

    fn isotropic_config(n: usize, n_x: usize, eta_x: f64, eta_t: f64) -> MultiSensorConfig {
        MultiSensorConfig::new(
            n,
            DMatrix::identity(n_x, n_x) * eta_x,
            DMatrix::identity(n_x, n_x) * eta_t,
            DMatrix::zeros(n_x, n_x),
            DMatrix::zeros(n_x, n_x),
        )
        .unwrap()
    }

    #[test]
    fn report_matches_the_direct_n_sensor_oracle() {
        for config in [unit_config(7), isotropic_config(4, 2, 1.7, 0.6)] {
            let report = herding_equilibrium(&config).unwrap();
            let policies = vec![report.policy.clone(); config.n()];
            let (gain, full_error) = heterogeneous_receiver(&config, &policies).unwrap();
            assert!(
                (full_error - report.receiver_error).abs() < 1e-9,
                "full-vector receiver disagrees: {full_error} vs {}",
                report.receiver_error
            );
            let own = heterogeneous_sensor_cost(&config, &policies, 0, &gain).unwrap();
            assert!(
                (own - report.sensor_cost).abs() < 1e-9,
                "direct sensor cost disagrees: {own} vs {}",
                report.sensor_cost
            );
            assert!(report.decomposition_residual < 1e-9);
        }
    }

    #[test]
    fn unit_error_curve_matches_the_closed_form() {
        let one = DMatrix::identity(1, 1);
        let errors = herding_error_vs_n(&one, &one, 100).unwrap();
        for (i, err) in errors.iter().enumerate() {
            assert!(
                (err - unit_herding_error(i + 1)).abs() < 1e-9,
                "mismatch at N = {}",
                i + 1
            );
        }
        assert!((unit_herding_error(1) - 0.276_393_202_250_020_95).abs() < 1e-12);
        assert!((unit_herding_error(2) - 0.211_324_865_405_187_13).abs() < 1e-12);
        assert!((unit_herding_error(4) - 0.146_446_609_406_726_05).abs() < 1e-12);
        assert!((unit_herding_error(10) - 0.077_422_872_635_741_66).abs() < 1e-12);
    }

    #[test]
    fn unit_coefficients_match_the_scalar_closed_forms() {
        for n in [1usize, 2, 5, 10] {
            let report = herding_equilibrium(&unit_config(n)).unwrap();
            let nf = n as f64;
            let root = (nf * (nf + 4.0)).sqrt();
            let a_closed = (2.0 / (nf + 4.0 - root)).sqrt();
            let b_closed = (nf * unit_herding_error(n)).sqrt();
            assert!(
                (report.policy.a[0].abs() - a_closed).abs() < 1e-12,
                "state loading at N = {n}"
            );
            assert!(
                (report.policy.b[0].abs() - b_closed).abs() < 1e-12,
                "bias loading at N = {n}"
            );
            // Both loadings carry the same sign: the sensor mixes bias into
            // the message, it does not subtract it.
            assert!(report.policy.a[0] * report.policy.b[0] > 0.0);
        }
    }

    #[test]
    fn varsigma_agrees_with_the_eigen_route() {
        for (eta_x, eta_t) in [(1.0, 1.0), (2.0, 0.5), (0.5, 2.0), (2.0, 3.0), (0.3, 0.7)] {
            for n in [1usize, 2, 5, 20] {
                let config = isotropic_config(n, 1, eta_x, eta_t);
                let report = herding_equilibrium(&config).unwrap();
                let share = report.varsigma.expect("isotropic blocks carry a share");
                let closed = varsigma(n, eta_x, eta_t);
                assert!(
                    (share - closed).abs() < 1e-9,
                    "share mismatch at N = {n}, eta = ({eta_x}, {eta_t}): \
                     {share} vs {closed}"
                );
            }
        }
        let wide = isotropic_config(3, 2, 1.5, 0.5);
        let wide_report = herding_equilibrium(&wide).unwrap();
        assert!(wide_report.varsigma.is_some());
        assert!(wide_report.eigen_tie, "isotropic 2-d directions are tied");
        let skew = MultiSensorConfig::new(
            3,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        assert!(herding_equilibrium(&skew).unwrap().varsigma.is_none());
    }

    #[test]
    fn varsigma_increases_to_one() {
        assert!((varsigma(1, 1.0, 1.0) - 0.723_606_797_749_979).abs() < 1e-12);
        for n in 1..200 {
            assert!(varsigma(n + 1, 1.0, 1.0) > varsigma(n, 1.0, 1.0));
            assert!(varsigma(n + 1, 2.0, 0.7) > varsigma(n, 2.0, 0.7));
        }
        let tail = 1.0 - varsigma(1_000_000, 1.0, 1.0);
        assert!(tail > 0.0 && tail < 2e-6);
    }

    #[test]
    fn herding_error_decreases_toward_zero() {
        let mut rng = stream_rng(77, 0);
        for trial in 0..5 {
            let (eta_x, eta_t) = if trial == 0 {
                (1.0, 1.0)
            } else {
                (rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0))
            };
            let errors = herding_error_vs_n(
                &DMatrix::from_element(1, 1, eta_x),
                &DMatrix::from_element(1, 1, eta_t),
                200,
            )
            .unwrap();
            for k in 1..errors.len() {
                assert!(
                    errors[k] < errors[k - 1],
                    "not strictly decreasing at N = {} for eta = ({eta_x}, {eta_t})",
                    k + 1
                );
            }
            assert!(errors[199] > 0.0);
            assert!(errors[199] < eta_t / 100.0);
        }
    }

    #[test]
    fn cost_decomposition_holds_with_correlated_biases() {
        // Uncorrelated unit case at N = 10: the bias-spread constant is
        // (9/10) trace(V_tt) = 0.9.
        let config = unit_config(10);
        let report = herding_equilibrium(&config).unwrap();
        assert!(report.decomposition_residual < 1e-9);
        let aggregate =
            equilibrium_no_side_channel(&JointGaussian::scalar(1.0, 0.0, 0.1).unwrap(), 1)
                .unwrap();
        assert!((report.sensor_cost - aggregate.sensor_cost - 0.9).abs() < 1e-9);

        // General matrix-valued configs with cross-correlated biases and a
        // random shared policy.
        let mut rng = stream_rng(11, 0);
        let n_x = 2;
        for trial in 0..20usize {
            let n = 1 + trial % 4;
            let mut raw = |rows: usize, cols: usize, scale: f64| {
                DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
            };
            let r1 = raw(n_x, n_x, 1.0);
            let v_xx = &r1 * r1.transpose() + DMatrix::identity(n_x, n_x) * 0.5;
            let r2 = raw(n_x, n_x, 0.5);
            let u_tt = &r2 * r2.transpose();
            let r3 = raw(n_x, n_x, 0.7);
            let v_tt = &u_tt + &r3 * r3.transpose() + DMatrix::identity(n_x, n_x) * 0.3;
            let v_xt = raw(n_x, n_x, 0.05);
            let config =
                MultiSensorConfig::new(n, v_xx, v_tt, v_xt, u_tt).expect("valid draw");
            let policy = SensorPolicy {
                a: DVector::from_fn(n_x, |_, _| rng.gen_range(-1.0..1.0)),
                b: DVector::from_fn(n_x, |_, _| rng.gen_range(-1.0..1.0)),
                v_vv: rng.gen_range(0.1..0.5),
            };
            let residual = cost_decomposition_check(&config, &policy).unwrap();
            assert!(
                residual < 1e-9,
                "trial {trial} (N = {n}): residual {residual:.3e}"
            );
        }
    }

    #[test]
    fn breaking_from_the_herd_strictly_improves() {
        let config = unit_config(5);
        let report = herding_equilibrium(&config).unwrap();
        let witness = break_from_herd_witness(&config).unwrap();
        assert!((witness.herd_cost - report.sensor_cost).abs() < 1e-9);
        assert!(witness.response_cost < witness.herd_cost);
        assert!(witness.strict);
        assert!(
            witness.improvement > 0.1,
            "expected a macroscopic gain, got {}",
            witness.improvement
        );

        let two = isotropic_config(2, 1, 2.0, 0.5);
        assert!(break_from_herd_witness(&two).unwrap().strict);

        assert!(matches!(
            break_from_herd_witness(&unit_config(1)),
            Err(Error::InvalidDimensions(_))
        ));
    }

    #[test]
    fn single_sensor_herding_matches_the_competitive_game() {
        let config = unit_config(1);
        let herd = herding_equilibrium(&config).unwrap();
        let sync = symmetric_equilibrium(&config).unwrap();
        assert!((herd.receiver_error - sync.receiver_error).abs() < 1e-12);
        assert!((herd.sensor_cost - sync.sensor_cost).abs() < 1e-12);
        assert!((herd.policy.a[0].abs() - sync.policy.a[0].abs()).abs() < 1e-12);
        assert!((herd.policy.b[0].abs() - sync.policy.b[0].abs()).abs() < 1e-12);
        let single =
            equilibrium_no_side_channel(&JointGaussian::scalar(1.0, 0.0, 1.0).unwrap(), 1)
                .unwrap();
        assert!((herd.receiver_error - single.receiver_error).abs() < 1e-12);
    }

    #[test]
    fn average_message_is_unit_variance_and_noiseless() {
        for config in [
            unit_config(1),
            unit_config(3),
            isotropic_config(10, 1, 2.0, 3.0),
        ] {
            let report = herding_equilibrium(&config).unwrap();
            assert!((report.aggregate_variance - 1.0).abs() < 1e-9);
            assert_eq!(report.policy.v_vv, 0.0);
        }
    }

    #[test]
    fn monte_carlo_agrees_with_the_closed_form() {
        let config = unit_config(10);
        let report = herding_equilibrium(&config).unwrap();
        let policies = vec![report.policy.clone(); config.n()];
        let (gain, _) = heterogeneous_receiver(&config, &policies).unwrap();
        let mc = monte_carlo_profile(&config, &policies, &gain, 20_000, 2024).unwrap();
        assert!(
            (mc.receiver_mean - report.receiver_error).abs() < 3.0 * mc.receiver_se,
            "receiver: {} vs {} (se {})",
            mc.receiver_mean,
            report.receiver_error,
            mc.receiver_se
        );
        assert!(
            (mc.sensor_mean - report.sensor_cost).abs() < 3.0 * mc.sensor_se,
            "sensor: {} vs {} (se {})",
            mc.sensor_mean,
            report.sensor_cost,
            mc.sensor_se
        );
    }

    #[test]
    fn correlated_regimes_are_rejected() {
        let coupled = MultiSensorConfig::new(
            3,
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, 0.3),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(matches!(
            herding_equilibrium(&coupled),
            Err(Error::UnsupportedRegime(_))
        ));
        let shared = MultiSensorConfig::new(
            3,
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 0.4),
        )
        .unwrap();
        assert!(matches!(
            herding_equilibrium(&shared),
            Err(Error::UnsupportedRegime(_))
        ));
        // The decomposition identity itself carries no regime restriction.
        let residual = cost_decomposition_check(
            &shared,
            &SensorPolicy {
                a: DVector::from_element(1, 0.4),
                b: DVector::from_element(1, -0.6),
                v_vv: 0.2,
            },
        )
        .unwrap();
        assert!(residual < 1e-9);
    }

    #[test]
    fn noisy_honest_baseline_and_asymptotic_ratio() {
        // The noise level at which the honest baseline meets the herding
        // error for a single sensor, exactly and in its rounded form.
        let sigma_star = (3.0 - 5f64.sqrt()) / 2.0;
        assert!(
            (baseline_noisy_honest(1, sigma_star) - unit_herding_error(1)).abs() < 1e-12
        );
        assert!((baseline_noisy_honest(1, 0.3820) - 0.276_410_998_552_822).abs() < 1e-12);
        assert!((baseline_noisy_honest(1, 0.3820) - 0.2764).abs() < 1e-3);

        let n = 10_000;
        let ratio = unit_herding_error(n) / baseline_noisy_honest(n, 0.3820);
        let limit = 1.0 / 0.3820;
        assert!((ratio - 2.617_115_937_528_412_3).abs() < 1e-9);
        assert!((ratio - limit).abs() < 0.02 * limit);
    }
}
