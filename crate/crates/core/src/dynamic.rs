//! Repeated play over a linear time-varying horizon: at every step the
//! receiver runs a Kalman filter on the stacked `(x, theta)` state and the
//! sensor re-solves the one-shot messaging game on the current conditional
//! covariance.
//!
//! Each step `k` has three stages, in order:
//!
//! 1. **predict** — propagate the conditional covariance through the state
//!    dynamics (skipped at `k = 0`, where the initial covariance is used
//!    directly);
//! 2. **side update** — condition on the receiver's own measurement `y[k]`;
//! 3. **sensor update** — the sensor declares the equilibrium policy for the
//!    current conditional covariance (a message on the stacked state with no
//!    extra noise), and the receiver conditions on `z[k]`.
//!
//! Because every player best-responds to the declared policies, the
//! covariance recursion is deterministic and can be planned offline
//! ([`plan_filter`]); simulation then only propagates means. At equilibrium
//! the message innovation covariance is exactly the identity.
//!
//! Covariance updates use the Joseph form throughout, so conditional
//! covariances stay symmetric PSD even when a noiseless equilibrium message
//! makes them singular (the next predict re-inflates them as long as the
//! process noise is positive definite).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{self, sym_inverse, JointGaussian, SymMatrix};
use crate::static_single::equilibrium_no_side_channel;

/// The equilibrium message policy of one step: loadings of
/// `z[k] = C_zx x[k] + C_ztheta theta[k] + v[k]` on the stacked state,
/// together with the receiver's update gain.
#[derive(Debug, Clone)]
pub struct StepEquilibrium {
    /// Message loading on the state, `n_z x n_x`.
    pub c_zx: DMatrix<f64>,
    /// Message loading on the bias, `n_z x n_x`.
    pub c_ztheta: DMatrix<f64>,
    /// Message noise covariance (zero at equilibrium).
    pub v_vv: SymMatrix,
    /// Receiver gain on the message innovation, `2 n_x x n_z`.
    pub gain: DMatrix<f64>,
    /// Message innovation covariance (the identity at equilibrium).
    pub innovation: SymMatrix,
    /// Whether the underlying eigenvector choice was tied (the policy is one
    /// of a continuum of equivalent representatives).
    pub eigen_tie: bool,
}

impl StepEquilibrium {
    /// Stacked message loading `[C_zx, C_ztheta]`, `n_z x 2 n_x`.
    pub fn loading(&self) -> DMatrix<f64> {
        let n_z = self.c_zx.nrows();
        let n_x = self.c_zx.ncols();
        let mut c = DMatrix::zeros(n_z, 2 * n_x);
        c.view_mut((0, 0), (n_z, n_x)).copy_from(&self.c_zx);
        c.view_mut((0, n_x), (n_z, n_x)).copy_from(&self.c_ztheta);
        c
    }

    /// The same step policy with the message rescaled by `kappa`: loadings
    /// scale by `kappa`, the noise and innovation covariances by `kappa^2`,
    /// the gain by `1 / kappa`. The conditional covariance recursion is
    /// unchanged under any nonzero `kappa`.
    pub fn scaled(&self, kappa: f64) -> Self {
        Self {
            c_zx: &self.c_zx * kappa,
            c_ztheta: &self.c_ztheta * kappa,
            v_vv: SymMatrix::new(self.v_vv.as_matrix() * (kappa * kappa))
                .expect("scaling preserves symmetry"),
            gain: &self.gain / kappa,
            innovation: SymMatrix::new(self.innovation.as_matrix() * (kappa * kappa))
                .expect("scaling preserves symmetry"),
            eigen_tie: self.eigen_tie,
        }
    }
}

/// Dynamics and measurement matrices for one step.
///
/// The dynamics blocks describe the transition *into* the step:
/// `x[k] = A_x x[k-1] + w_x[k]` and `theta[k] = A_theta theta[k-1] +
/// w_theta[k]`; the measurement blocks describe the side channel *at* the
/// step: `y[k] = C_yx x[k] + C_ytheta theta[k] + w_y[k]`. The dynamics
/// blocks of step 0 are never used (the initial covariance is given
/// directly).
#[derive(Debug, Clone)]
pub struct StepModel {
    /// State transition, `n_x x n_x`.
    pub a_x: DMatrix<f64>,
    /// Bias transition, `n_x x n_x`.
    pub a_theta: DMatrix<f64>,
    /// Side-channel loading on the state, `n_y x n_x`.
    pub c_yx: DMatrix<f64>,
    /// Side-channel loading on the bias, `n_y x n_x`.
    pub c_ytheta: DMatrix<f64>,
    /// State process noise covariance, `n_x x n_x`.
    pub v_wx: DMatrix<f64>,
    /// Bias process noise covariance, `n_x x n_x`.
    pub v_wtheta: DMatrix<f64>,
    /// Side-channel noise covariance, `n_y x n_y`.
    pub v_wy: DMatrix<f64>,
}

impl StepModel {
    fn validate(&self) -> Result<(usize, usize)> {
        let n_x = self.a_x.nrows();
        let n_y = self.c_yx.nrows();
        if self.a_x.ncols() != n_x
            || self.a_theta.shape() != (n_x, n_x)
            || self.c_yx.ncols() != n_x
            || self.c_ytheta.shape() != (n_y, n_x)
            || self.v_wx.shape() != (n_x, n_x)
            || self.v_wtheta.shape() != (n_x, n_x)
            || self.v_wy.shape() != (n_y, n_y)
        {
            return Err(Error::InvalidDimensions(
                "step blocks disagree on (n_x, n_y)".into(),
            ));
        }
        Ok((n_x, n_y))
    }

    /// Stacked transition `blockdiag(A_x, A_theta)`.
    pub fn transition(&self) -> DMatrix<f64> {
        block_diag(&self.a_x, &self.a_theta)
    }

    /// Stacked process noise `blockdiag(V_wx, V_wtheta)`.
    pub fn process_noise(&self) -> DMatrix<f64> {
        block_diag(&self.v_wx, &self.v_wtheta)
    }

    /// Stacked side-channel loading `[C_yx, C_ytheta]`.
    pub fn side_loading(&self) -> DMatrix<f64> {
        let n_y = self.c_yx.nrows();
        let n_x = self.c_yx.ncols();
        let mut c = DMatrix::zeros(n_y, 2 * n_x);
        c.view_mut((0, 0), (n_y, n_x)).copy_from(&self.c_yx);
        c.view_mut((0, n_x), (n_y, n_x)).copy_from(&self.c_ytheta);
        c
    }
}

/// A finite-horizon model: per-step matrices plus the covariance of the
/// initial stacked state `(x[0], theta[0])`.
#[derive(Debug, Clone)]
pub struct DynamicModel {
    steps: Vec<StepModel>,
    initial_cov: SymMatrix,
    n_x: usize,
    n_y: usize,
}

impl DynamicModel {
    /// Validates per-step dimensions against each other and the initial
    /// covariance.
    pub fn new(steps: Vec<StepModel>, initial_cov: DMatrix<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidDimensions("horizon must be at least 1".into()));
        }
        let (n_x, n_y) = steps[0].validate()?;
        for step in &steps[1..] {
            if step.validate()? != (n_x, n_y) {
                return Err(Error::InvalidDimensions(
                    "steps disagree on (n_x, n_y)".into(),
                ));
            }
        }
        let initial_cov = SymMatrix::new(initial_cov)?;
        if initial_cov.dim() != 2 * n_x {
            return Err(Error::InvalidDimensions(format!(
                "initial covariance side {} != 2 n_x = {}",
                initial_cov.dim(),
                2 * n_x
            )));
        }
        Ok(Self {
            steps,
            initial_cov,
            n_x,
            n_y,
        })
    }

    /// A time-invariant model repeating `step` for `horizon` steps.
    pub fn time_invariant(
        step: StepModel,
        initial_cov: DMatrix<f64>,
        horizon: usize,
    ) -> Result<Self> {
        Self::new(vec![step; horizon.max(1)], initial_cov)
    }

    /// Number of steps.
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// State dimension.
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Side-channel dimension.
    pub fn n_y(&self) -> usize {
        self.n_y
    }

    /// Per-step matrices.
    pub fn steps(&self) -> &[StepModel] {
        &self.steps
    }

    /// Initial stacked-state covariance.
    pub fn initial_cov(&self) -> &SymMatrix {
        &self.initial_cov
    }
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}

/// Which updates the conditional covariance has absorbed within its step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// After the predict (for `k = 0`: the initial covariance); awaiting the
    /// side update.
    Predicted,
    /// After conditioning on `y[k]`; awaiting the sensor update.
    SideUpdated,
    /// After conditioning on `z[k]`; awaiting the next predict.
    SensorUpdated,
}

/// Mean-and-covariance filter state for driving the filter with realized
/// measurements. Produced by [`KalmanState::initial`] and advanced by
/// [`kalman_predict`], [`kalman_update_side`], [`kalman_update_sensor`].
#[derive(Debug, Clone)]
pub struct KalmanState {
    /// Conditional mean of the state.
    pub xhat: DVector<f64>,
    /// Conditional mean of the bias.
    pub thetahat: DVector<f64>,
    /// Conditional covariance of the stacked `(x, theta)`.
    pub p: SymMatrix,
    /// Which stage of the step the state is in.
    pub stage: Stage,
    /// Step index.
    pub k: usize,
}

impl KalmanState {
    /// The prior state before any measurement: zero means, the model's
    /// initial covariance, stage [`Stage::Predicted`] at `k = 0`.
    pub fn initial(model: &DynamicModel) -> Self {
        Self {
            xhat: DVector::zeros(model.n_x),
            thetahat: DVector::zeros(model.n_x),
            p: model.initial_cov.clone(),
            stage: Stage::Predicted,
            k: 0,
        }
    }

    fn stacked_mean(&self) -> DVector<f64> {
        let n_x = self.xhat.len();
        let mut m = DVector::zeros(2 * n_x);
        m.rows_mut(0, n_x).copy_from(&self.xhat);
        m.rows_mut(n_x, n_x).copy_from(&self.thetahat);
        m
    }

    fn with_mean(mut self, mean: DVector<f64>) -> Self {
        let n_x = self.xhat.len();
        self.xhat = mean.rows(0, n_x).into_owned();
        self.thetahat = mean.rows(n_x, n_x).into_owned();
        self
    }

    fn expect_stage(&self, want: Stage, op: &str) -> Result<()> {
        if self.stage != want {
            return Err(Error::InvalidMatrix(format!(
                "{op} expects a {want:?} state, got {:?} at step {}",
                self.stage, self.k
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Covariance-only recursion
// ---------------------------------------------------------------------------

/// Propagates a conditional covariance through one step's dynamics:
/// `A P A' + blockdiag(V_wx, V_wtheta)`.
pub fn predict_cov(step: &StepModel, p: &SymMatrix) -> Result<SymMatrix> {
    let a = step.transition();
    if a.nrows() != p.dim() {
        return Err(Error::InvalidDimensions(
            "covariance side does not match the transition".into(),
        ));
    }
    SymMatrix::new(&a * p.as_matrix() * a.transpose() + step.process_noise())
}

/// Conditions a predicted covariance on the step's side channel. Returns the
/// updated covariance and the gain `K = P C' (C P C' + V_wy)^{-1}`; a
/// singular innovation covariance is an error. With no side channel
/// (`n_y = 0`) the covariance passes through unchanged.
pub fn side_update_cov(step: &StepModel, p: &SymMatrix) -> Result<(SymMatrix, DMatrix<f64>)> {
    let dim = p.dim();
    let n_y = step.c_yx.nrows();
    if n_y == 0 {
        return Ok((p.clone(), DMatrix::zeros(dim, 0)));
    }
    let c = step.side_loading();
    if c.ncols() != dim {
        return Err(Error::InvalidDimensions(
            "side loading does not match the covariance side".into(),
        ));
    }
    let s = &c * p.as_matrix() * c.transpose() + &step.v_wy;
    let s_inv = sym_inverse(&SymMatrix::new(s)?).map_err(|e| {
        Error::SingularInnovation(format!("side channel at covariance update: {e}"))
    })?;
    let gain = p.as_matrix() * c.transpose() * s_inv;
    Ok((joseph_update(p, &c, &step.v_wy, &gain)?, gain))
}

/// Joseph-form measurement update
/// `(I - K C) P (I - K C)' + K R K'`, numerically PSD by construction.
fn joseph_update(
    p: &SymMatrix,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    gain: &DMatrix<f64>,
) -> Result<SymMatrix> {
    let dim = p.dim();
    let a = DMatrix::identity(dim, dim) - gain * c;
    SymMatrix::new(&a * p.as_matrix() * a.transpose() + gain * r * gain.transpose())
}

/// Solves the one-shot messaging game on a conditional stacked covariance:
/// the sensor's equilibrium loadings for the current step, the receiver's
/// update gain, and the (identity) innovation covariance.
pub fn step_equilibrium(p_cond: &SymMatrix, n_z: usize) -> Result<StepEquilibrium> {
    let dim = p_cond.dim();
    if dim % 2 != 0 || dim == 0 {
        return Err(Error::InvalidDimensions(format!(
            "stacked covariance side {dim} is not twice a state dimension"
        )));
    }
    let n_x = dim / 2;
    let prior = JointGaussian::without_side_channel(
        p_cond.as_matrix().view((0, 0), (n_x, n_x)).into_owned(),
        p_cond.as_matrix().view((0, n_x), (n_x, n_x)).into_owned(),
        p_cond
            .as_matrix()
            .view((n_x, n_x), (n_x, n_x))
            .into_owned(),
    )?;
    let report = equilibrium_no_side_channel(&prior, n_z)?;
    let c_zx = report.policy.alpha1.transpose();
    let c_ztheta = report.policy.alpha2.transpose();
    let mut c = DMatrix::zeros(n_z, dim);
    c.view_mut((0, 0), (n_z, n_x)).copy_from(&c_zx);
    c.view_mut((0, n_x), (n_z, n_x)).copy_from(&c_ztheta);
    let s = &c * p_cond.as_matrix() * c.transpose() + report.policy.v_vv.as_matrix();
    let innovation = SymMatrix::new(s)?;
    let s_inv = sym_inverse(&innovation).map_err(|e| {
        Error::SingularInnovation(format!("equilibrium message at step update: {e}"))
    })?;
    let gain = p_cond.as_matrix() * c.transpose() * s_inv;
    Ok(StepEquilibrium {
        c_zx,
        c_ztheta,
        v_vv: report.policy.v_vv.clone(),
        gain,
        innovation,
        eigen_tie: report.eigen_tie,
    })
}

/// Conditions a covariance on the step's equilibrium message (Joseph form).
pub fn sensor_update_cov(p_cond: &SymMatrix, eq: &StepEquilibrium) -> Result<SymMatrix> {
    joseph_update(p_cond, &eq.loading(), eq.v_vv.as_matrix(), &eq.gain)
}

// ---------------------------------------------------------------------------
// Mean-and-covariance state transitions
// ---------------------------------------------------------------------------

/// Advances a sensor-updated state into the next step's predicted stage.
pub fn kalman_predict(step: &StepModel, state: &KalmanState) -> Result<KalmanState> {
    state.expect_stage(Stage::SensorUpdated, "kalman_predict")?;
    let a = step.transition();
    let mean = &a * state.stacked_mean();
    let p = predict_cov(step, &state.p)?;
    Ok(KalmanState {
        p,
        stage: Stage::Predicted,
        k: state.k + 1,
        ..state.clone()
    }
    .with_mean(mean))
}

/// Conditions a predicted state on a realized side-channel measurement.
pub fn kalman_update_side(
    step: &StepModel,
    state: &KalmanState,
    y: &DVector<f64>,
) -> Result<KalmanState> {
    state.expect_stage(Stage::Predicted, "kalman_update_side")?;
    if y.len() != step.c_yx.nrows() {
        return Err(Error::InvalidDimensions(
            "side measurement length does not match n_y".into(),
        ));
    }
    let (p, gain) = side_update_cov(step, &state.p)?;
    let mean = if y.is_empty() {
        state.stacked_mean()
    } else {
        let innovation = y - step.side_loading() * state.stacked_mean();
        state.stacked_mean() + &gain * innovation
    };
    Ok(KalmanState {
        p,
        stage: Stage::SideUpdated,
        ..state.clone()
    }
    .with_mean(mean))
}

/// Conditions a side-updated state on a realized sensor message, under the
/// step's equilibrium policy.
pub fn kalman_update_sensor(
    state: &KalmanState,
    eq: &StepEquilibrium,
    z: &DVector<f64>,
) -> Result<KalmanState> {
    state.expect_stage(Stage::SideUpdated, "kalman_update_sensor")?;
    if z.len() != eq.c_zx.nrows() {
        return Err(Error::InvalidDimensions(
            "message length does not match n_z".into(),
        ));
    }
    let p = sensor_update_cov(&state.p, eq)?;
    let innovation = z - eq.loading() * state.stacked_mean();
    let mean = state.stacked_mean() + &eq.gain * innovation;
    Ok(KalmanState {
        p,
        stage: Stage::SensorUpdated,
        ..state.clone()
    }
    .with_mean(mean))
}

// ---------------------------------------------------------------------------
// Offline plan and simulation
// ---------------------------------------------------------------------------

/// Everything known offline about one step of the equilibrium filter.
#[derive(Debug, Clone)]
pub struct FilterStep {
    /// Step index.
    pub k: usize,
    /// Conditional covariance after predict (at `k = 0`: the initial one).
    pub predicted: SymMatrix,
    /// Side-channel gain used at this step (`2 n_x x n_y`).
    pub side_gain: DMatrix<f64>,
    /// Conditional covariance after the side update.
    pub side_updated: SymMatrix,
    /// The step's equilibrium message policy and receiver gain.
    pub equilibrium: StepEquilibrium,
    /// Conditional covariance after the sensor update.
    pub updated: SymMatrix,
    /// Unconditional covariance of the stacked state at this step.
    pub state_cov: SymMatrix,
    /// Receiver mean squared error `E||x[k] - xhat[k]||^2` after the sensor
    /// update: the trace of the `x` block of `updated`.
    pub receiver_error: f64,
    /// Sensor mean squared error `E||(x[k] + theta[k]) - xhat[k]||^2`.
    pub sensor_cost: f64,
}

/// The deterministic equilibrium covariance recursion over the horizon.
#[derive(Debug, Clone)]
pub struct FilterPlan {
    /// One entry per step, in order.
    pub steps: Vec<FilterStep>,
    n_x: usize,
    n_y: usize,
    n_z: usize,
}

impl FilterPlan {
    /// State dimension.
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Side-channel dimension.
    pub fn n_y(&self) -> usize {
        self.n_y
    }

    /// Message dimension.
    pub fn n_z(&self) -> usize {
        self.n_z
    }
}

/// Runs the covariance recursion over the whole horizon: predict, side
/// update, per-step equilibrium, sensor update, for each step in turn.
pub fn plan_filter(model: &DynamicModel, n_z: usize) -> Result<FilterPlan> {
    let n_x = model.n_x;
    let mut steps = Vec::with_capacity(model.horizon());
    let mut p_prev: Option<SymMatrix> = None;
    let mut state_cov = model.initial_cov.clone();
    for (k, step) in model.steps.iter().enumerate() {
        let predicted = match &p_prev {
            None => model.initial_cov.clone(),
            Some(p) => predict_cov(step, p)?,
        };
        if k > 0 {
            let a = step.transition();
            state_cov =
                SymMatrix::new(&a * state_cov.as_matrix() * a.transpose() + step.process_noise())?;
        }
        let (side_updated, side_gain) = side_update_cov(step, &predicted)?;
        let equilibrium = step_equilibrium(&side_updated, n_z)?;
        let updated = sensor_update_cov(&side_updated, &equilibrium)?;
        let p_xx = updated.as_matrix().view((0, 0), (n_x, n_x));
        let p_xtheta = updated.as_matrix().view((0, n_x), (n_x, n_x));
        let theta_cov = state_cov.as_matrix().view((n_x, n_x), (n_x, n_x));
        let receiver_error = p_xx.trace();
        let sensor_cost = p_xx.trace() + 2.0 * p_xtheta.trace() + theta_cov.trace();
        p_prev = Some(updated.clone());
        steps.push(FilterStep {
            k,
            predicted,
            side_gain,
            side_updated,
            equilibrium,
            updated,
            state_cov: state_cov.clone(),
            receiver_error,
            sensor_cost,
        });
    }
    Ok(FilterPlan {
        steps,
        n_x,
        n_y: model.n_y,
        n_z,
    })
}

/// Per-step empirical error statistics from repeated simulation.
#[derive(Debug, Clone)]
pub struct TrajectoryStats {
    /// Number of independent runs.
    pub runs: usize,
    /// Per-step mean of `||x - xhat||^2` after the sensor update.
    pub receiver_mean: Vec<f64>,
    /// Standard error of each entry of `receiver_mean`.
    pub receiver_se: Vec<f64>,
    /// Per-step mean of `||(x + theta) - xhat||^2`.
    pub sensor_mean: Vec<f64>,
    /// Standard error of each entry of `sensor_mean`.
    pub sensor_se: Vec<f64>,
}

/// Simulates `runs` independent trajectories of the closed loop under the
/// planned equilibrium and reports per-step empirical errors.
///
/// Run `r` draws all of its noise from stream `r` of `seed`, so any prefix
/// of runs is reproducible regardless of the total count.
pub fn simulate_trajectory(
    model: &DynamicModel,
    plan: &FilterPlan,
    runs: usize,
    seed: u64,
) -> Result<TrajectoryStats> {
    if plan.steps.len() != model.horizon() {
        return Err(Error::InvalidDimensions(
            "plan horizon does not match the model".into(),
        ));
    }
    let n_x = model.n_x;
    let n_y = model.n_y;
    let n_z = plan.n_z;
    let horizon = model.horizon();
    let initial_factor = gaussian::sampling_factor(model.initial_cov.as_matrix())?;
    let mut process_factors = Vec::with_capacity(horizon);
    let mut side_factors = Vec::with_capacity(horizon);
    let mut message_factors = Vec::with_capacity(horizon);
    for (step, planned) in model.steps.iter().zip(&plan.steps) {
        process_factors.push(gaussian::sampling_factor(&step.process_noise())?);
        side_factors.push(gaussian::sampling_factor(&step.v_wy)?);
        message_factors.push(gaussian::sampling_factor(
            planned.equilibrium.v_vv.as_matrix(),
        )?);
    }

    let mut rec_sum = vec![0.0; horizon];
    let mut rec_sumsq = vec![0.0; horizon];
    let mut sen_sum = vec![0.0; horizon];
    let mut sen_sumsq = vec![0.0; horizon];
    let draw = |rng: &mut rand_chacha::ChaCha12Rng, factor: &DMatrix<f64>| {
        use rand_distr::Distribution;
        let mut v = DVector::zeros(factor.ncols());
        for i in 0..v.len() {
            v[i] = rand_distr::StandardNormal.sample(rng);
        }
        factor * v
    };

    for run in 0..runs {
        let mut rng = gaussian::stream_rng(seed, run as u64);
        let mut truth = draw(&mut rng, &initial_factor);
        let mut mean: DVector<f64> = DVector::zeros(2 * n_x);
        for (k, (step, planned)) in model.steps.iter().zip(&plan.steps).enumerate() {
            if k > 0 {
                let a = step.transition();
                truth = &a * truth + draw(&mut rng, &process_factors[k]);
                mean = a * mean;
            }
            if n_y > 0 {
                let c = step.side_loading();
                let y = &c * &truth + draw(&mut rng, &side_factors[k]);
                mean += &planned.side_gain * (y - &c * &mean);
            }
            let c_z = planned.equilibrium.loading();
            let z = &c_z * &truth + draw(&mut rng, &message_factors[k]);
            mean += &planned.equilibrium.gain * (z - &c_z * &mean);
            let mut rec = 0.0;
            let mut sen = 0.0;
            for i in 0..n_x {
                let ex = truth[i] - mean[i];
                rec += ex * ex;
                let es = truth[i] + truth[n_x + i] - mean[i];
                sen += es * es;
            }
            rec_sum[k] += rec;
            rec_sumsq[k] += rec * rec;
            sen_sum[k] += sen;
            sen_sumsq[k] += sen * sen;
        }
        let _ = n_z;
    }

    let n = runs.max(1) as f64;
    let stats = |sum: &[f64], sumsq: &[f64]| {
        let mut means = Vec::with_capacity(horizon);
        let mut ses = Vec::with_capacity(horizon);
        for k in 0..horizon {
            let mean = sum[k] / n;
            let var = ((sumsq[k] - sum[k] * sum[k] / n) / (n - 1.0).max(1.0)).max(0.0);
            means.push(mean);
            ses.push((var / n).sqrt());
        }
        (means, ses)
    };
    let (receiver_mean, receiver_se) = stats(&rec_sum, &rec_sumsq);
    let (sensor_mean, sensor_se) = stats(&sen_sum, &sen_sumsq);
    Ok(TrajectoryStats {
        runs,
        receiver_mean,
        receiver_se,
        sensor_mean,
        sensor_se,
    })
}
