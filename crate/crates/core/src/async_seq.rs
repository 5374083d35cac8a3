//! Sequential transmissions: sensors report one at a time, each seeing the
//! transcript so far, and the receiver refines its estimate after every
//! message.
//!
//! Conditioning on the transcript keeps everything Gaussian, so step `i` is
//! a fresh one-shot game whose prior is the conditional covariance `Psi_i`
//! of `(x, theta_i)` given the first `i - 1` messages. Each step therefore
//! reuses the one-shot no-side-channel solver verbatim, while the receiver's
//! state covariance follows a scalar-innovation downdate instead of a
//! growing-matrix inversion: with `B = V_tx V_xx^{-1}` and
//! `Sigma_e = V_tt - V_tx V_xx^{-1} V_xt`, the step message looks like
//! `c' x + noise` for `c = alpha1 + B' alpha2` and noise variance
//! `alpha2' Sigma_e alpha2 + v_vv`, giving
//! `S_next = S - S c (c' S c + noise)^{-1} c' S`.
//!
//! Sensors are myopic — each cares about the estimate right after its own
//! transmission — and biases are exchangeable across sensors:
//! `theta_i = B x + e_i` with i.i.d. residuals `e_i`, so the transcript
//! never carries information about a future sensor's bias beyond what it
//! says about the state. Every policy is again one representative of a
//! per-step rescaling family `kappa_i != 0` that leaves the receiver's error
//! sequence unchanged.
//!
//! The conditional prior must stay numerically positive definite, so runs
//! whose error approaches zero within about nine orders of magnitude of the
//! bias scale are rejected rather than silently degraded; with unit blocks
//! that caps usable transcripts at roughly thirty steps.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gaussian::{self, sym_inverse, JointGaussian, SymMatrix};
use crate::static_single::equilibrium_no_side_channel;

/// Shared prior and sensor count for the sequential game.
#[derive(Debug, Clone)]
pub struct SequentialConfig {
    prior: JointGaussian,
    n: usize,
}

impl SequentialConfig {
    /// Validates the shared `(x, theta_i)` prior blocks and the sensor
    /// count.
    pub fn new(
        n: usize,
        v_xx: DMatrix<f64>,
        v_xtheta: DMatrix<f64>,
        v_thetatheta: DMatrix<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimensions("need at least one sensor".into()));
        }
        Ok(Self {
            prior: JointGaussian::without_side_channel(v_xx, v_xtheta, v_thetatheta)?,
            n,
        })
    }

    /// Scalar shorthand.
    pub fn scalar(n: usize, v_xx: f64, v_xtheta: f64, v_thetatheta: f64) -> Result<Self> {
        Self::new(
            n,
            DMatrix::from_element(1, 1, v_xx),
            DMatrix::from_element(1, 1, v_xtheta),
            DMatrix::from_element(1, 1, v_thetatheta),
        )
    }

    /// Number of sensors (transmission steps).
    pub fn n(&self) -> usize {
        self.n
    }

    /// State (and bias) dimension.
    pub fn n_x(&self) -> usize {
        self.prior.n_x()
    }

    /// The shared per-sensor prior.
    pub fn prior(&self) -> &JointGaussian {
        &self.prior
    }
}

/// One step's scalar-message policy `y_i = alpha1' x + alpha2' theta_i + v`.
#[derive(Debug, Clone)]
pub struct StepPolicy {
    /// Loading on the state.
    pub alpha1: DVector<f64>,
    /// Loading on the transmitting sensor's own bias.
    pub alpha2: DVector<f64>,
    /// Message noise variance.
    pub v_vv: f64,
}

impl StepPolicy {
    /// The equivalent representative with loadings scaled by `kappa` and
    /// noise by `kappa^2`.
    pub fn scaled(&self, kappa: f64) -> StepPolicy {
        StepPolicy {
            alpha1: &self.alpha1 * kappa,
            alpha2: &self.alpha2 * kappa,
            v_vv: self.v_vv * kappa * kappa,
        }
    }
}

/// One transmission step of the sequential equilibrium.
#[derive(Debug, Clone)]
pub struct SequentialStep {
    /// 1-based step index.
    pub index: usize,
    /// Conditional `(x, theta_i)` covariance given the transcript before
    /// this step.
    pub psi: SymMatrix,
    /// The transmitting sensor's policy.
    pub policy: StepPolicy,
    /// Receiver gain on the centered step message.
    pub gain: DVector<f64>,
    /// Variance of the step message given the transcript (unity at
    /// equilibrium).
    pub innovation: f64,
    /// Receiver state covariance after incorporating this message.
    pub state_cov_after: SymMatrix,
    /// Receiver error `trace(state_cov_after)`.
    pub error_after: f64,
    /// Whether the step's eigenvector choice was tied.
    pub eigen_tie: bool,
}

/// The full sequential play.
#[derive(Debug, Clone)]
pub struct SequentialEquilibrium {
    /// Receiver error before any transmission, `trace(V_xx)`.
    pub prior_error: f64,
    /// Steps in transmission order.
    pub steps: Vec<SequentialStep>,
}

impl SequentialEquilibrium {
    /// Receiver error after the last transmission.
    pub fn final_error(&self) -> f64 {
        self.steps
            .last()
            .map_or(self.prior_error, |s| s.error_after)
    }
}

/// The fixed maps relating a fresh bias to the state: `theta = B x + e`.
struct TranscriptKernel {
    b: DMatrix<f64>,
    sigma_e: DMatrix<f64>,
}

fn transcript_kernel(prior: &JointGaussian) -> Result<TranscriptKernel> {
    let v_xx = SymMatrix::new(prior.v_xx().clone())?;
    let v_xx_inv = sym_inverse(&v_xx)?;
    let b = prior.v_xtheta().transpose() * v_xx_inv;
    let sigma_e = prior.v_thetatheta() - &b * prior.v_xtheta();
    Ok(TranscriptKernel {
        b,
        sigma_e: (&sigma_e + sigma_e.transpose()) * 0.5,
    })
}

/// Folds one step message into the receiver's state covariance. Returns the
/// message's conditional variance (the innovation), the receiver gain, and
/// the downdated covariance.
fn receiver_update(
    s: &DMatrix<f64>,
    kernel: &TranscriptKernel,
    policy: &StepPolicy,
) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    let c = &policy.alpha1 + kernel.b.transpose() * &policy.alpha2;
    let noise =
        (policy.alpha2.transpose() * &kernel.sigma_e * &policy.alpha2)[(0, 0)] + policy.v_vv;
    let sc = s * &c;
    let innovation = c.dot(&sc) + noise;
    if innovation <= 1e-12 * s.trace().max(1.0) {
        return Err(Error::SingularInnovation(
            "step message carries no information beyond the transcript".into(),
        ));
    }
    let gain = &sc / innovation;
    let s_next = s - &sc * sc.transpose() / innovation;
    Ok((innovation, gain, (&s_next + s_next.transpose()) * 0.5))
}

/// Computes the sequential equilibrium: at each step the transmitting
/// sensor solves the one-shot game on the conditional prior `Psi_i`, and
/// the receiver folds the resulting unit-variance message into its
/// estimate.
pub fn sequential_equilibrium(config: &SequentialConfig) -> Result<SequentialEquilibrium> {
    let kernel = transcript_kernel(&config.prior)?;
    let mut s = config.prior.v_xx().clone();
    let prior_error = s.trace();
    let mut steps = Vec::with_capacity(config.n);
    for index in 1..=config.n {
        // The first step sees the raw prior verbatim; later steps see the
        // transcript-conditioned blocks.
        let psi_prior = if index == 1 {
            config.prior.clone()
        } else {
            let cross = &s * kernel.b.transpose();
            let theta_block = &kernel.b * &cross + &kernel.sigma_e;
            JointGaussian::without_side_channel(
                s.clone(),
                cross,
                (&theta_block + theta_block.transpose()) * 0.5,
            )?
        };
        let report = equilibrium_no_side_channel(&psi_prior, 1)?;
        let policy = StepPolicy {
            alpha1: report.policy.alpha1.column(0).into_owned(),
            alpha2: report.policy.alpha2.column(0).into_owned(),
            v_vv: report.policy.v_vv.as_matrix()[(0, 0)],
        };
        let (innovation, gain, s_next) = receiver_update(&s, &kernel, &policy)?;
        let psi = SymMatrix::new(psi_prior.xtheta_cov())?;
        s = s_next;
        steps.push(SequentialStep {
            index,
            psi,
            policy,
            gain,
            innovation,
            state_cov_after: SymMatrix::new(s.clone())?,
            error_after: s.trace(),
            eigen_tie: report.eigen_tie,
        });
    }
    Ok(SequentialEquilibrium { prior_error, steps })
}

/// Replays the receiver's covariance recursion for externally supplied step
/// policies (for instance rescaled equilibrium representatives), returning
/// the error after each step.
pub fn replay_receiver(
    config: &SequentialConfig,
    policies: &[StepPolicy],
) -> Result<Vec<f64>> {
    if policies.len() != config.n {
        return Err(Error::InvalidDimensions(format!(
            "expected {} step policies, got {}",
            config.n,
            policies.len()
        )));
    }
    let n_x = config.n_x();
    let kernel = transcript_kernel(&config.prior)?;
    let mut s = config.prior.v_xx().clone();
    let mut errors = Vec::with_capacity(policies.len());
    for policy in policies {
        if policy.alpha1.len() != n_x || policy.alpha2.len() != n_x {
            return Err(Error::InvalidDimensions(
                "step policy dimension mismatch".into(),
            ));
        }
        if policy.v_vv < 0.0 {
            return Err(Error::InvalidCovariance(
                "negative message noise variance".into(),
            ));
        }
        let (_, _, s_next) = receiver_update(&s, &kernel, policy)?;
        s = s_next;
        errors.push(s.trace());
    }
    Ok(errors)
}

/// One row of the sequential-versus-simultaneous comparison.
#[derive(Debug, Clone, Copy)]
pub struct AsyncSyncRow {
    /// Number of sensors (or transmission steps).
    pub n: usize,
    /// Receiver error after `n` sequential transmissions.
    pub sequential_error: f64,
    /// Receiver error of the `n`-sensor simultaneous symmetric equilibrium.
    pub synchronous_error: f64,
}

/// Receiver error per sensor count for the sequential structure next to the
/// simultaneous symmetric equilibrium on the same uncorrelated blocks
/// (`V_xt = 0`), for `n = 1..=n_max`. Purely descriptive: the two
/// communication structures are not ordered in general, though sequential
/// errors fall with `n` while simultaneous errors rise.
pub fn async_vs_sync_compare(
    v_xx: &DMatrix<f64>,
    v_thetatheta: &DMatrix<f64>,
    n_max: usize,
) -> Result<Vec<AsyncSyncRow>> {
    let n_x = v_xx.nrows();
    let config = SequentialConfig::new(
        n_max,
        v_xx.clone(),
        DMatrix::zeros(n_x, n_x),
        v_thetatheta.clone(),
    )?;
    let sequential = sequential_equilibrium(&config)?;
    let synchronous = crate::multi_sync::error_vs_n(v_xx, v_thetatheta, n_max)?;
    Ok((1..=n_max)
        .map(|n| AsyncSyncRow {
            n,
            sequential_error: sequential.steps[n - 1].error_after,
            synchronous_error: synchronous[n - 1],
        })
        .collect())
}

/// Empirical receiver error after each sequential step.
#[derive(Debug, Clone)]
pub struct SequentialMc {
    /// Mean squared error after each step.
    pub step_means: Vec<f64>,
    /// Standard error of each mean.
    pub step_ses: Vec<f64>,
    /// Number of simulated transcripts.
    pub samples: usize,
}

/// Simulates the sequential play: draws `(x, theta_i, v_i)`, runs the
/// receiver's innovation updates with the equilibrium gains, and reports
/// the empirical squared error after every step.
pub fn monte_carlo_sequential(
    config: &SequentialConfig,
    equilibrium: &SequentialEquilibrium,
    samples: usize,
    seed: u64,
) -> Result<SequentialMc> {
    if equilibrium.steps.len() != config.n {
        return Err(Error::InvalidDimensions(
            "equilibrium step count does not match the config".into(),
        ));
    }
    if samples < 2 {
        return Err(Error::InvalidDimensions(
            "need at least two samples for a standard error".into(),
        ));
    }
    let n_x = config.n_x();
    let kernel = transcript_kernel(&config.prior)?;
    let x_factor = gaussian::sampling_factor(config.prior.v_xx())?;
    let e_factor = gaussian::sampling_factor(&kernel.sigma_e)?;
    let cs: Vec<DVector<f64>> = equilibrium
        .steps
        .iter()
        .map(|step| &step.policy.alpha1 + kernel.b.transpose() * &step.policy.alpha2)
        .collect();
    let mut rng = gaussian::stream_rng(seed, 0);
    let mut normal = |len: usize| {
        let mut v = DVector::zeros(len);
        for i in 0..len {
            v[i] = StandardNormal.sample(&mut rng);
        }
        v
    };
    let n = config.n;
    let mut sums = vec![0.0; n];
    let mut sumsqs = vec![0.0; n];
    for _ in 0..samples {
        let x = &x_factor * normal(n_x);
        let mut xhat = DVector::zeros(n_x);
        for (i, step) in equilibrium.steps.iter().enumerate() {
            let theta = &kernel.b * &x + &e_factor * normal(n_x);
            let y = step.policy.alpha1.dot(&x)
                + step.policy.alpha2.dot(&theta)
                + step.policy.v_vv.sqrt() * normal(1)[0];
            xhat += &step.gain * (y - cs[i].dot(&xhat));
            let err = (&x - &xhat).norm_squared();
            sums[i] += err;
            sumsqs[i] += err * err;
        }
    }
    let nf = samples as f64;
    let mut step_means = Vec::with_capacity(n);
    let mut step_ses = Vec::with_capacity(n);
    for i in 0..n {
        let mean = sums[i] / nf;
        let var = (sumsqs[i] - sums[i] * sums[i] / nf) / (nf - 1.0);
        step_means.push(mean);
        step_ses.push((var / nf).sqrt());
    }
    Ok(SequentialMc {
        step_means,
        step_ses,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_configs(n: usize) -> Vec<SequentialConfig> {
        vec![
            SequentialConfig::scalar(n, 1.0, 0.0, 1.0).unwrap(),
            SequentialConfig::scalar(n, 1.0, 0.5, 1.25).unwrap(),
            SequentialConfig::new(
                n,
                DMatrix::from_row_slice(2, 2, &[1.3, 0.2, 0.2, 0.9]),
                DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.0, 0.2]),
                DMatrix::from_row_slice(2, 2, &[1.1, -0.1, -0.1, 1.4]),
            )
            .unwrap(),
        ]
    }

    /// Direct Schur-complement evaluation of the receiver covariance and of
    /// the next sensor's conditional prior after `i` messages, from the full
    /// transcript covariance.
    fn direct_oracle(
        config: &SequentialConfig,
        policies: &[StepPolicy],
        upto: usize,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let prior = config.prior();
        let v_xx = prior.v_xx();
        let v_xt = prior.v_xtheta();
        let v_tt = prior.v_thetatheta();
        let n_x = prior.n_x();
        let u = v_xt.transpose() * v_xx.clone().try_inverse().unwrap() * v_xt;
        let mut v_yy = DMatrix::zeros(upto, upto);
        let mut v_xy = DMatrix::zeros(n_x, upto);
        let mut v_ty = DMatrix::zeros(n_x, upto);
        for k in 0..upto {
            let pk = &policies[k];
            v_xy.set_column(k, &(v_xx * &pk.alpha1 + v_xt * &pk.alpha2));
            // Covariance of a LATER sensor's bias with message k.
            v_ty.set_column(k, &(v_xt.transpose() * &pk.alpha1 + &u * &pk.alpha2));
            for l in 0..upto {
                let pl = &policies[l];
                let mut cov = (pk.alpha1.transpose() * v_xx * &pl.alpha1)[(0, 0)]
                    + (pk.alpha1.transpose() * v_xt * &pl.alpha2)[(0, 0)]
                    + (pk.alpha2.transpose() * v_xt.transpose() * &pl.alpha1)[(0, 0)];
                cov += if k == l {
                    (pk.alpha2.transpose() * v_tt * &pl.alpha2)[(0, 0)] + pk.v_vv
                } else {
                    (pk.alpha2.transpose() * &u * &pl.alpha2)[(0, 0)]
                };
                v_yy[(k, l)] = cov;
            }
        }
        let v_yy_inv = v_yy.try_inverse().unwrap();
        let s_direct = v_xx - &v_xy * &v_yy_inv * v_xy.transpose();
        let mut psi = DMatrix::zeros(2 * n_x, 2 * n_x);
        psi.view_mut((0, 0), (n_x, n_x)).copy_from(v_xx);
        psi.view_mut((0, n_x), (n_x, n_x)).copy_from(v_xt);
        psi.view_mut((n_x, 0), (n_x, n_x))
            .copy_from(&v_xt.transpose());
        psi.view_mut((n_x, n_x), (n_x, n_x)).copy_from(v_tt);
        let mut stacked = DMatrix::zeros(2 * n_x, upto);
        stacked.view_mut((0, 0), (n_x, upto)).copy_from(&v_xy);
        stacked.view_mut((n_x, 0), (n_x, upto)).copy_from(&v_ty);
        let psi_direct = psi - &stacked * &v_yy_inv * stacked.transpose();
        (s_direct, psi_direct)
    }

    #[test]
    fn first_step_is_the_one_shot_game_bit_for_bit() {
        let config = SequentialConfig::scalar(4, 1.0, 0.3, 1.2).unwrap();
        let sequential = sequential_equilibrium(&config).unwrap();
        let one_shot = equilibrium_no_side_channel(config.prior(), 1).unwrap();
        let first = &sequential.steps[0];
        assert_eq!(first.policy.alpha1[0], one_shot.policy.alpha1[(0, 0)]);
        assert_eq!(first.policy.alpha2[0], one_shot.policy.alpha2[(0, 0)]);
        assert_eq!(first.policy.v_vv, one_shot.policy.v_vv.as_matrix()[(0, 0)]);
        assert!((first.error_after - one_shot.receiver_error).abs() < 1e-12);

        // A single-sensor run is exactly the one-shot game.
        let single = SequentialConfig::scalar(1, 1.0, 0.3, 1.2).unwrap();
        let run = sequential_equilibrium(&single).unwrap();
        assert_eq!(run.steps.len(), 1);
        assert!((run.final_error() - one_shot.receiver_error).abs() < 1e-12);
    }

    #[test]
    fn recursion_matches_the_growing_schur_oracle() {
        for config in test_configs(6) {
            let sequential = sequential_equilibrium(&config).unwrap();
            let policies: Vec<StepPolicy> =
                sequential.steps.iter().map(|s| s.policy.clone()).collect();
            for i in 1..=config.n() {
                let (s_direct, psi_direct) = direct_oracle(&config, &policies, i);
                let step = &sequential.steps[i - 1];
                let s_gap = (step.state_cov_after.as_matrix() - &s_direct).abs().max();
                assert!(s_gap < 1e-9, "state covariance gap {s_gap:.3e} at step {i}");
                if i < config.n() {
                    let next_psi = &sequential.steps[i].psi;
                    let psi_gap = (next_psi.as_matrix() - &psi_direct).abs().max();
                    assert!(
                        psi_gap < 1e-9,
                        "conditional prior gap {psi_gap:.3e} before step {}",
                        i + 1
                    );
                }
            }
        }
    }

    #[test]
    fn innovations_are_unit_and_errors_strictly_decrease() {
        for config in test_configs(8) {
            let sequential = sequential_equilibrium(&config).unwrap();
            let mut previous = sequential.prior_error;
            for step in &sequential.steps {
                assert!(
                    (step.innovation - 1.0).abs() < 1e-9,
                    "innovation {} at step {}",
                    step.innovation,
                    step.index
                );
                assert!(step.error_after > 0.0);
                assert!(
                    step.error_after < previous,
                    "error did not shrink at step {}",
                    step.index
                );
                previous = step.error_after;

                // The step game's own reported error agrees with the
                // transcript downdate.
                let report = equilibrium_no_side_channel(
                    &JointGaussian::without_side_channel(
                        step.psi.as_matrix().view((0, 0), (config.n_x(), config.n_x())).into_owned(),
                        step.psi.as_matrix().view((0, config.n_x()), (config.n_x(), config.n_x())).into_owned(),
                        step.psi.as_matrix().view((config.n_x(), config.n_x()), (config.n_x(), config.n_x())).into_owned(),
                    )
                    .unwrap(),
                    1,
                )
                .unwrap();
                assert!((report.receiver_error - step.error_after).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn per_step_rescaling_leaves_the_receiver_unchanged() {
        let kappas = [-3.0, 0.5, 2.0, -1.0, 7.0, 0.1, -0.25, 4.0];
        for config in test_configs(8) {
            let sequential = sequential_equilibrium(&config).unwrap();
            let policies: Vec<StepPolicy> =
                sequential.steps.iter().map(|s| s.policy.clone()).collect();

            // Replaying the equilibrium policies reproduces the recursion
            // exactly.
            let replayed = replay_receiver(&config, &policies).unwrap();
            for (err, step) in replayed.iter().zip(&sequential.steps) {
                assert_eq!(*err, step.error_after);
            }

            let scaled: Vec<StepPolicy> = policies
                .iter()
                .enumerate()
                .map(|(i, p)| p.scaled(kappas[i % kappas.len()]))
                .collect();
            let replayed_scaled = replay_receiver(&config, &scaled).unwrap();
            for (err, step) in replayed_scaled.iter().zip(&sequential.steps) {
                assert!(
                    (err - step.error_after).abs() < 1e-9,
                    "rescaled step {} changed the error: {} vs {}",
                    step.index,
                    err,
                    step.error_after
                );
            }
        }
    }

    #[test]
    fn compare_table_tracks_both_structures() {
        let one = DMatrix::identity(1, 1);
        let rows = async_vs_sync_compare(&one, &one, 8).unwrap();
        assert_eq!(rows.len(), 8);
        assert!((rows[0].sequential_error - rows[0].synchronous_error).abs() < 1e-12);
        for pair in rows.windows(2) {
            assert!(pair[1].sequential_error < pair[0].sequential_error);
            assert!(pair[1].synchronous_error > pair[0].synchronous_error);
        }
    }

    #[test]
    fn monte_carlo_matches_every_step() {
        let config = SequentialConfig::scalar(3, 1.0, 0.0, 1.0).unwrap();
        let sequential = sequential_equilibrium(&config).unwrap();
        let mc = monte_carlo_sequential(&config, &sequential, 20_000, 99).unwrap();
        for (i, step) in sequential.steps.iter().enumerate() {
            assert!(
                (mc.step_means[i] - step.error_after).abs() < 3.0 * mc.step_ses[i],
                "step {}: {} vs {} (se {})",
                step.index,
                mc.step_means[i],
                step.error_after,
                mc.step_ses[i]
            );
        }
        let again = monte_carlo_sequential(&config, &sequential, 20_000, 99).unwrap();
        assert_eq!(mc.step_means, again.step_means);
    }

    #[test]
    fn deep_transcripts_hit_the_conditioning_floor() {
        // Twenty steps stay comfortably representable; forty drive the
        // conditional state variance below the positive-definiteness floor
        // and are rejected rather than silently degraded.
        let twenty = SequentialConfig::scalar(20, 1.0, 0.0, 1.0).unwrap();
        assert!(sequential_equilibrium(&twenty).is_ok());
        let forty = SequentialConfig::scalar(40, 1.0, 0.0, 1.0).unwrap();
        assert!(sequential_equilibrium(&forty).is_err());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(
            SequentialConfig::scalar(0, 1.0, 0.0, 1.0),
            Err(Error::InvalidDimensions(_))
        ));
        let config = SequentialConfig::scalar(3, 1.0, 0.0, 1.0).unwrap();
        let sequential = sequential_equilibrium(&config).unwrap();
        let policies: Vec<StepPolicy> =
            sequential.steps.iter().map(|s| s.policy.clone()).collect();
        assert!(matches!(
            replay_receiver(&config, &policies[..2]),
            Err(Error::InvalidDimensions(_))
        ));
        let mut negative = policies.clone();
        negative[0].v_vv = -0.5;
        assert!(matches!(
            replay_receiver(&config, &negative),
            Err(Error::InvalidCovariance(_))
        ));
        let mut silent = policies;
        silent[1] = StepPolicy {
            alpha1: DVector::zeros(1),
            alpha2: DVector::zeros(1),
            v_vv: 0.0,
        };
        assert!(matches!(
            replay_receiver(&config, &silent),
            Err(Error::SingularInnovation(_))
        ));
        assert!(matches!(
            monte_carlo_sequential(&config, &sequential, 1, 7),
            Err(Error::InvalidDimensions(_))
        ));
    }
}
