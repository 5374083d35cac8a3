//! Experiment execution: interprets a parsed config, runs the library, and
//! renders CSV.
//!
//! Every numeric cell is emitted with 17 significant digits
//! (`{:.16e}`), so doubles round-trip exactly and identical
//! `(config, seed)` pairs produce byte-identical files. Grid-style
//! experiments fan their independent work items out in parallel and
//! aggregate in index order, so parallelism never changes the output.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use strategic_sensors::async_seq::{sequential_equilibrium, SequentialConfig};
use strategic_sensors::dynamic::{plan_filter, simulate_trajectory, DynamicModel, StepModel};
use strategic_sensors::herding::{baseline_noisy_honest, cost_decomposition_check, unit_herding_error};
use strategic_sensors::multi_sync::{
    average_suffices_check, error_vs_n, fixed_point_certificate, symmetric_equilibrium,
};
use strategic_sensors::static_single::{
    best_response_certificate, equilibrium_no_side_channel, equilibrium_scalar, monte_carlo_cost,
    scalar_family_closed_form,
};
use strategic_sensors::{JointGaussian, MultiSensorConfig, SensorPolicy};

use crate::config::{ConfigError, ExperimentConfig, ExperimentId};

/// Rendered experiment output plus the process exit code it implies.
#[derive(Debug)]
pub struct Rendered {
    pub csv: String,
    pub exit_code: i32,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub out: Option<std::path::PathBuf>,
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn lib_err(e: strategic_sensors::Error) -> ConfigError {
    ConfigError(e.to_string())
}

/// 17-significant-digit cell (round-trip exact for doubles).
fn cell(x: f64) -> String {
    format!("{x:.16e}")
}

fn render_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String, ConfigError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(header)
        .map_err(|e| ConfigError(format!("csv rendering failed: {e}")))?;
    for row in rows {
        wtr.write_record(row)
            .map_err(|e| ConfigError(format!("csv rendering failed: {e}")))?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| ConfigError(format!("csv rendering failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| ConfigError(format!("csv rendering failed: {e}")))
}

/// Parses config text, applies overrides, checks the experiment matches the
/// invoked subcommand, and runs it. Returns the rendered output and the
/// effective output path (`None` means stdout).
pub fn execute_text(
    text: &str,
    overrides: &Overrides,
    certify_mode: bool,
) -> Result<(Rendered, Option<std::path::PathBuf>), ConfigError> {
    let mut config = ExperimentConfig::parse(text)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(samples) = overrides.samples {
        config.samples = Some(samples);
    }
    if let Some(out) = &overrides.out {
        config.out = Some(out.clone());
    }
    let is_certify = config.experiment == ExperimentId::Certify;
    if certify_mode && !is_certify {
        return err("the certify subcommand requires a config with 'experiment = certify'");
    }
    if !certify_mode && is_certify {
        return err("a config with 'experiment = certify' must be run via the certify subcommand");
    }
    let out = config.out.clone();
    let rendered = run(&config)?;
    Ok((rendered, out))
}

/// Dispatches a validated config to its runner.
pub fn run(config: &ExperimentConfig) -> Result<Rendered, ConfigError> {
    match config.experiment {
        ExperimentId::Fig2 => run_fig2(config),
        ExperimentId::Fig3 => run_fig3(config),
        ExperimentId::Static => run_static(config),
        ExperimentId::Dynamic => run_dynamic(config),
        ExperimentId::MultiSync => run_multisync(config),
        ExperimentId::Herding => run_herding(config),
        ExperimentId::Async => run_async(config),
        ExperimentId::Certify => run_certify(config),
    }
}

/// Equilibrium loadings and their ratio across the one-parameter scalar
/// family, with the eigen route cross-checked against the closed form at
/// every grid point.
fn run_fig2(config: &ExperimentConfig) -> Result<Rendered, ConfigError> {
    let mu_min = config.f64_or("mu_min", -2.0)?;
    let mu_max = config.f64_or("mu_max", 2.0)?;
    let steps = config.usize_or("mu_steps", 81)?;
    if steps == 0 {
        return err("mu_steps must be at least 1");
    }
    if !(mu_max >= mu_min) {
        return err("mu_max must be at least mu_min");
    }
    let grid: Vec<f64> = (0..steps)
        .map(|i| {
            if steps == 1 {
                mu_min
            } else {
                mu_min + (mu_max - mu_min) * i as f64 / (steps - 1) as f64
            }
        })
        .collect();
    let rows: Vec<Vec<String>> = grid
        .par_iter()
        .map(|&mu| -> Result<Vec<String>, ConfigError> {
            let prior = JointGaussian::scalar(1.0, mu, mu * mu + 1.0).map_err(lib_err)?;
            let report = equilibrium_scalar(&prior).map_err(lib_err)?;
            let sign = if report.policy.alpha1[(0, 0)] < 0.0 { -1.0 } else { 1.0 };
            let a1 = sign * report.policy.alpha1[(0, 0)];
            let a2 = sign * report.policy.alpha2[(0, 0)];
            let (c1, c2) = scalar_family_closed_form(mu);
            if (a1 - c1).abs() > 1e-9 || (a2 - c2).abs() > 1e-9 {
                return err(format!(
                    "internal check failed: eigen route ({a1}, {a2}) diverged from the closed \
                     form ({c1}, {c2}) at mu = {mu}"
                ));
            }
            Ok(vec![cell(mu), cell(a1), cell(a2), cell(a1 / a2)])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let csv = render_csv(&["mu", "alpha1", "alpha2", "ratio"], &rows)?;
    Ok(Rendered { csv, exit_code: 0 })
}

/// The three error curves against the sensor count: competing sensors,
/// herding sensors, and honest sensors with independent noise.
fn run_fig3(config: &ExperimentConfig) -> Result<Rendered, ConfigError> {
    let n_max = config.usize_or("n_max", 100)?;
    if n_max == 0 {
        return err("n_max must be at least 1");
    }
    let sigma = config.f64_or("sigma", 0.3820)?;
    if !(sigma > 0.0) {
        return err("sigma must be positive");
    }
    let one = DMatrix::identity(1, 1);
    let e1 = error_vs_n(&one, &one, n_max).map_err(lib_err)?;
    let rows: Vec<Vec<String>> = (1..=n_max)
        .map(|n| {
            vec![
                n.to_string(),
                cell(e1[n - 1]),
                cell(unit_herding_error(n)),
                cell(baseline_noisy_honest(n, sigma)),
            ]
        })
        .collect();
    let csv = render_csv(&["N", "e1", "e2", "e3"], &rows)?;
    Ok(Rendered { csv, exit_code: 0 })
}

fn static_prior(config: &ExperimentConfig) -> Result<JointGaussian, ConfigError> {
    let one = DMatrix::identity(1, 1);
    let v_xx = config.matrix_or("v_xx", &one)?;
    let n_x = v_xx.nrows();
    let v_xtheta = config.matrix_or("v_xtheta", &DMatrix::zeros(n_x, n_x))?;
    let v_thetatheta = config.matrix_or("v_thetatheta", &DMatrix::identity(n_x, n_x))?;
    let has_side = config.has("v_yy") || config.has("v_xy") || config.has("v_thetay");
    if has_side {
        let Some(v_yy) = config.matrix("v_yy").transpose()? else {
            return err("side-channel blocks require v_yy");
        };
        let n_y = v_yy.nrows();
        let v_xy = config.matrix_or("v_xy", &DMatrix::zeros(n_x, n_y))?;
        let v_thetay = config.matrix_or("v_thetay", &DMatrix::zeros(n_x, n_y))?;
        JointGaussian::new(v_xx, v_xtheta, v_xy, v_thetatheta, v_thetay, v_yy).map_err(lib_err)
    } else {
        JointGaussian::without_side_channel(v_xx, v_xtheta, v_thetatheta).map_err(lib_err)
    }
}

/// One-shot equilibrium report plus a seeded simulation cross-check,
/// rendered as (quantity, value) rows.
fn run_static(config: &ExperimentConfig) -> Result<Rendered, ConfigError> {
    let prior = static_prior(config)?;
    let n_z = config.usize_or("n_z", 1)?;
    let report = equilibrium_no_side_channel(&prior, n_z).map_err(lib_err)?;
    let samples = config.samples_or(100_000)?;
    let mc = monte_carlo_cost(&prior, &report.policy, &report.receiver_gain, samples, config.seed)
        .map_err(lib_err)?;
    let rows = vec![
        vec!["receiver_error".into(), cell(report.receiver_error)],
        vec!["sensor_cost".into(), cell(report.sensor_cost)],
        vec!["alpha1_norm".into(), cell(report.policy.alpha1.norm())],
        vec!["alpha2_norm".into(), cell(report.policy.alpha2.norm())],
        vec![
            "message_noise_trace".into(),
            cell(report.policy.v_vv.as_matrix().trace()),
        ],
        vec![
            "eigen_tie".into(),
            if report.eigen_tie { "1" } else { "0" }.into(),
        ],
        vec!["mc_receiver_mean".into(), cell(mc.receiver_mean)],
        vec!["mc_receiver_se".into(), cell(mc.receiver_se)],
        vec!["mc_sensor_mean".into(), cell(mc.sensor_mean)],
        vec!["mc_sensor_se".into(), cell(mc.sensor_se)],
        vec!["samples".into(), samples.to_string()],
        vec!["seed".into(), config.seed.to_string()],
    ];
    let csv = render_csv(&["quantity", "value"], &rows)?;
    Ok(Rendered { csv, exit_code: 0 })
}

/// Per-step planned filter errors next to their simulated counterparts for
/// a time-invariant model.
fn run_dynamic(config: &ExperimentConfig) -> Result<Rendered, ConfigError> {
    let horizon = config.usize_or("horizon", 20)?;
    if horizon == 0 {
        return err("horizon must be at least 1");
    }
    let a_x = config.matrix_or("a_x", &DMatrix::from_element(1, 1, 0.9))?;
    let n_x = a_x.nrows();
    let step = StepModel {
        a_x,
        a_theta: config.matrix_or("a_theta", &DMatrix::from_element(1, 1, 0.8))?,
        c_yx: config.matrix_or("c_yx", &DMatrix::from_element(1, 1, 1.0))?,
        c_ytheta: config.matrix_or("c_ytheta", &DMatrix::zeros(1, 1))?,
        v_wx: config.matrix_or("v_wx", &DMatrix::from_element(1, 1, 0.4))?,
        v_wtheta: config.matrix_or("v_wtheta", &DMatrix::from_element(1, 1, 0.3))?,
        v_wy: config.matrix_or("v_wy", &DMatrix::from_element(1, 1, 0.5))?,
    };
    let initial = config.matrix_or("initial_cov", &DMatrix::identity(2 * n_x, 2 * n_x))?;
    let n_z = config.usize_or("n_z", 1)?;
    let model = DynamicModel::time_invariant(step, initial, horizon).map_err(lib_err)?;
    let plan = plan_filter(&model, n_z).map_err(lib_err)?;
    let runs = config.samples_or(10_000)?;
    let stats = simulate_trajectory(&model, &plan, runs, config.seed).map_err(lib_err)?;
    let rows: Vec<Vec<String>> = plan
        .steps
        .iter()
        .enumerate()
        .map(|(k, planned)| {
            vec![
                k.to_string(),
                cell(planned.receiver_error),
                cell(planned.sensor_cost),
                cell(stats.receiver_mean[k]),
                cell(stats.receiver_se[k]),
            ]
        })
        .collect();
    let csv = render_csv(
        &["k", "receiver_error", "sensor_cost", "mc_receiver_mean", "mc_receiver_se"],
        &rows,
    )?;
    Ok(Rendered { csv, exit_code: 0 })
}

/// Receiver error of the symmetric competitive equilibrium against the
/// sensor count.
fn run_multisync(config: &ExperimentConfig) -> Result<Rendered, ConfigError> {
    let n_max = config.usize_or("n_max", 100)?;
    if n_max == 0 {
        return err("n_max must be at least 1");
    }
    let one = DMatrix::identity(1, 1);
    let v_xx = config.matrix_or("v_xx", &one)?;
    let v_tt = config.matrix_or("v_thetatheta", &DMatrix::identity(v_xx.nrows(), v_xx.nrows()))?;
    let errors = error_vs_n(&v_xx, &v_tt, n_max).map_err(lib_err)?;
    let rows: Vec<Vec<String>> = errors
        .iter()
        .enumerate()
        .map(|(i, &e)| vec![(i + 1).to_string(), cell(e)])
        .collect();
    let csv = render_csv(&["N", "receiver_error"], &rows)?;
    Ok(Rendered { csv, exit_code: 0 })
}

/// The unit-family error table with the herding-to-honest ratio column.
fn run_herding(config: &ExperimentConfig) -> Result<Rendered, ConfigError> {
    let n_max = config.usize_or("n_max", 100)?;
    if n_max == 0 {
        return err("n_max must be at least 1");
    }
    let sigma = config.f64_or("sigma", 0.3820)?;
    if !(sigma > 0.0) {
        return err("sigma must be positive");
    }
    let one = DMatrix::identity(1, 1);
    let e1 = error_vs_n(&one, &one, n_max).map_err(lib_err)?;
    let rows: Vec<Vec<String>> = (1..=n_max)
        .map(|n| {
            let e2 = unit_herding_error(n);
            let e3 = baseline_noisy_honest(n, sigma);
            vec![
                n.to_string(),
                cell(e1[n - 1]),
                cell(e2),
                cell(e3),
                cell(e2 / e3),
            ]
        })
        .collect();
    let csv = render_csv(&["N", "e1", "e2", "e3", "ratio_e2_e3"], &rows)?;
    Ok(Rendered { csv, exit_code: 0 })
}

/// Per-step errors and policy magnitudes of the sequential equilibrium.
fn run_async(config: &ExperimentConfig) -> Result<Rendered, ConfigError> {
    let n = config.usize_or("n", 10)?;
    let one = DMatrix::identity(1, 1);
    let v_xx = config.matrix_or("v_xx", &one)?;
    let n_x = v_xx.nrows();
    let v_xtheta = config.matrix_or("v_xtheta", &DMatrix::zeros(n_x, n_x))?;
    let v_thetatheta = config.matrix_or("v_thetatheta", &DMatrix::identity(n_x, n_x))?;
    let seq_config = SequentialConfig::new(n, v_xx, v_xtheta, v_thetatheta).map_err(lib_err)?;
    let equilibrium = sequential_equilibrium(&seq_config).map_err(lib_err)?;
    let rows: Vec<Vec<String>> = equilibrium
        .steps
        .iter()
        .map(|step| {
            vec![
                step.index.to_string(),
                cell(step.error_after),
                cell(step.policy.alpha1.norm()),
                cell(step.policy.alpha2.norm()),
            ]
        })
        .collect();
    let csv = render_csv(&["step", "error_after", "alpha1_norm", "alpha2_norm"], &rows)?;
    Ok(Rendered { csv, exit_code: 0 })
}

/// Bundled certificate suites: machine-readable pass/fail rows with
/// worst-case residuals; exit code 3 when any suite fails, 0 otherwise
/// (skipped suites do not fail the run).
fn run_certify(config: &ExperimentConfig) -> Result<Rendered, ConfigError> {
    let trials = config.usize_or("trials", 200)?;
    if trials == 0 {
        return err("trials must be at least 1");
    }
    let samples = config.samples_or(10_000)?;
    let tamper = config.word_or("tamper", "none");
    if tamper != "none" && tamper != "zero_alpha2" {
        return err(format!(
            "unknown tamper mode '{tamper}' (expected none or zero_alpha2)"
        ));
    }
    let seed = config.seed;

    let one = DMatrix::identity(1, 1);
    let v_xx = config.matrix_or("v_xx", &one)?;
    let n_x = v_xx.nrows();
    let v_xtheta = config.matrix_or("v_xtheta", &(DMatrix::identity(n_x, n_x) * 0.4))?;
    let v_thetatheta = config.matrix_or("v_thetatheta", &(DMatrix::identity(n_x, n_x) * 1.3))?;
    let prior =
        JointGaussian::without_side_channel(v_xx, v_xtheta, v_thetatheta).map_err(lib_err)?;

    let multi_n = config.usize_or("multi_n", 5)?;
    let m_v_xx = config.matrix_or("multi_v_xx", &one)?;
    let m_dim = m_v_xx.nrows();
    let m_v_tt = config.matrix_or("multi_v_thetatheta", &DMatrix::identity(m_dim, m_dim))?;
    let m_v_xt = config.matrix_or("multi_v_xtheta", &DMatrix::zeros(m_dim, m_dim))?;
    let m_u = config.matrix_or("multi_u_thetatheta", &DMatrix::zeros(m_dim, m_dim))?;
    let multi = MultiSensorConfig::new(multi_n, m_v_xx, m_v_tt, m_v_xt, m_u).map_err(lib_err)?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut failed = false;
    let push = |rows: &mut Vec<Vec<String>>, suite: &str, status: &str, residual: f64, detail: String| {
        rows.push(vec![
            suite.to_string(),
            status.to_string(),
            cell(residual),
            detail,
        ]);
    };

    // Leader-side optimality of the one-shot equilibrium (the tamper knob
    // deliberately breaks this suite to demonstrate the oracle bites).
    let mut report = equilibrium_no_side_channel(&prior, 1).map_err(lib_err)?;
    if tamper == "zero_alpha2" {
        report.policy.alpha2.fill(0.0);
    }
    let cert = best_response_certificate(&prior, &report, trials, seed).map_err(lib_err)?;
    let residual = cert
        .sensor_worst_improvement
        .max(cert.receiver_worst_decrease);
    let status = if cert.pass { "PASS" } else { "FAIL" };
    failed |= !cert.pass;
    let trial_note = match cert.improving_trial {
        Some(t) => format!("improving trial {t}"),
        None => "no improving trial".to_string(),
    };
    push(
        &mut rows,
        "static_best_response",
        status,
        residual,
        format!(
            "{trials} perturbations; worst sensor improvement {:.3e}; {trial_note}",
            cert.sensor_worst_improvement
        ),
    );

    // Competitive fixed point and the averaging identity need the
    // uncoupled regime; outside it they are skipped, not failed.
    match multi.supported_regime() {
        Err(_) => {
            let detail = "unsupported regime (coupled priors); suite skipped".to_string();
            push(&mut rows, "multi_fixed_point", "SKIP", 0.0, detail.clone());
            push(&mut rows, "average_suffices", "SKIP", 0.0, detail);
        }
        Ok(()) => {
            let eq = symmetric_equilibrium(&multi).map_err(lib_err)?;
            let cert =
                fixed_point_certificate(&multi, &eq.policy, trials, seed ^ 0x5eed).map_err(lib_err)?;
            let status = if cert.pass { "PASS" } else { "FAIL" };
            failed |= !cert.pass;
            push(
                &mut rows,
                "multi_fixed_point",
                status,
                cert.residual.max(cert.worst_improvement),
                format!(
                    "response residual {:.3e}; worst deviation improvement {:.3e}",
                    cert.residual, cert.worst_improvement
                ),
            );
            let policies = vec![eq.policy.clone(); multi.n()];
            let avg =
                average_suffices_check(&multi, &policies, samples, seed ^ 0xa17e).map_err(lib_err)?;
            let residual = (avg.full_error - avg.aggregate_error)
                .abs()
                .max(avg.max_pointwise_gap);
            let status = if avg.equal { "PASS" } else { "FAIL" };
            failed |= !avg.equal;
            push(
                &mut rows,
                "average_suffices",
                status,
                residual,
                format!("{samples} fused draws; error gap {:.3e}", residual),
            );
        }
    }

    // The cost decomposition holds for arbitrary shared policies, coupled
    // priors included, so it always runs.
    let shared_policy = SensorPolicy {
        a: DVector::from_element(multi.n_x(), 0.8),
        b: DVector::from_element(multi.n_x(), 0.6),
        v_vv: 0.25,
    };
    let residual = cost_decomposition_check(&multi, &shared_policy).map_err(lib_err)?;
    let ok = residual < 1e-9;
    failed |= !ok;
    push(
        &mut rows,
        "cost_decomposition",
        if ok { "PASS" } else { "FAIL" },
        residual,
        "aggregate-plus-constant identity on the shared policy".to_string(),
    );

    let csv = render_csv(&["suite", "status", "worst_residual", "detail"], &rows)?;
    Ok(Rendered {
        csv,
        exit_code: if failed { 3 } else { 0 },
    })
}
