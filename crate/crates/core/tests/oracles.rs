//! Independent optimizer oracle for the one-shot trust-region reduction.
//!
//! The library solves `min trace(xi' W xi)` s.t. `xi' Q xi <= I` by
//! whitening and eigendecomposition. This suite re-solves random instances
//! with a method that shares none of that machinery — multi-start projected
//! gradient descent on the constraint ball, using an eigenbasis of `Q`
//! (not of the whitened cost) purely to parametrize the feasible set — and
//! requires the two optima to agree.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use strategic_sensors::gaussian::stream_rng;
use strategic_sensors::static_single::{build_wq, solve_trust_region, TrustRegionProblem};
use strategic_sensors::JointGaussian;

/// Random full prior with the requested dimensions; a ridge keeps every
/// conditioning step well inside the positive-definite region.
fn random_prior(rng: &mut ChaCha12Rng, n_x: usize, n_y: usize) -> JointGaussian {
    let side = 2 * n_x + n_y;
    let g: DMatrix<f64> = DMatrix::from_fn(side, side, |_, _| StandardNormal.sample(rng));
    let a = &g * g.transpose() + DMatrix::identity(side, side) * 0.4;
    JointGaussian::new(
        a.view((0, 0), (n_x, n_x)).into_owned(),
        a.view((0, n_x), (n_x, n_x)).into_owned(),
        a.view((0, 2 * n_x), (n_x, n_y)).into_owned(),
        a.view((n_x, n_x), (n_x, n_x)).into_owned(),
        a.view((n_x, 2 * n_x), (n_x, n_y)).into_owned(),
        a.view((2 * n_x, 2 * n_x), (n_y, n_y)).into_owned(),
    )
    .expect("ridged random covariance is a valid prior")
}

/// Reduces the constrained problem to `min trace(u' B u)` over the unit
/// (spectral) ball: `Q = E D E'` on its positive eigenspace, `u = D^{1/2} E' xi`.
/// Directions in `Q`'s null space drop out because `W` shares that null
/// space, so the reduction is exact.
fn reduced_ball_objective(problem: &TrustRegionProblem) -> DMatrix<f64> {
    let q = problem.q.as_matrix();
    let w = problem.w.as_matrix();
    let eig = SymmetricEigen::new(q.clone());
    let lambda_max = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l));
    let keep: Vec<usize> = (0..q.nrows())
        .filter(|&i| eig.eigenvalues[i] > 1e-10 * lambda_max)
        .collect();
    assert_eq!(
        keep.len(),
        2 * problem.n_x(),
        "constraint matrix rank should be twice the state dimension"
    );
    let d = keep.len();
    let mut e = DMatrix::zeros(q.nrows(), d);
    let mut d_inv_sqrt = DMatrix::zeros(d, d);
    for (j, &i) in keep.iter().enumerate() {
        e.set_column(j, &eig.eigenvectors.column(i));
        d_inv_sqrt[(j, j)] = 1.0 / eig.eigenvalues[i].sqrt();
    }
    let b = &d_inv_sqrt * e.transpose() * w * e * &d_inv_sqrt;
    (&b + b.transpose()) * 0.5
}

/// Projects `u` into the feasible ball: Euclidean for one column, spectral
/// (singular values clipped to one) for several.
fn project_into_ball(u: &mut DMatrix<f64>) {
    if u.ncols() == 1 {
        let n = u.norm();
        if n > 1.0 {
            *u /= n;
        }
    } else {
        let svd = u.clone().svd(true, true);
        if svd.singular_values.iter().any(|&s| s > 1.0) {
            let clipped = svd.singular_values.map(|s| s.min(1.0));
            *u = svd.u.as_ref().unwrap() * DMatrix::from_diagonal(&clipped) * svd.v_t.as_ref().unwrap();
        }
    }
}

/// Best objective found by multi-start projected gradient descent.
fn pgd_ball_min(
    b: &DMatrix<f64>,
    cols: usize,
    restarts: usize,
    iters: usize,
    rng: &mut ChaCha12Rng,
) -> f64 {
    let d = b.nrows();
    let step = 0.45 / b.norm().max(1e-9);
    let mut best = 0.0; // u = 0 is always feasible.
    for _ in 0..restarts {
        let mut u: DMatrix<f64> = DMatrix::from_fn(d, cols, |_, _| StandardNormal.sample(rng));
        project_into_ball(&mut u);
        for _ in 0..iters {
            u -= b * &u * (2.0 * step);
            project_into_ball(&mut u);
        }
        let value = (u.transpose() * b * &u).trace();
        if value < best {
            best = value;
        }
    }
    best
}

/// Feasibility and claimed-value consistency of the solver's own output.
fn check_solution_consistency(problem: &TrustRegionProblem, xi: &DMatrix<f64>, objective: f64) {
    let achieved = (xi.transpose() * problem.w.as_matrix() * xi).trace();
    assert!(
        (achieved - objective).abs() < 1e-9,
        "claimed objective {objective} but the solution achieves {achieved}"
    );
    let constraint = xi.transpose() * problem.q.as_matrix() * xi;
    let slack = DMatrix::identity(constraint.nrows(), constraint.ncols()) - constraint;
    let min_eig = SymmetricEigen::new((&slack + slack.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &l| a.min(l));
    assert!(
        min_eig > -1e-9,
        "solution violates the covariance budget by {min_eig:.3e}"
    );
}

#[test]
fn solver_matches_projected_gradient_on_scalar_messages() {
    let mut gen_rng = stream_rng(424_242, 0);
    let shapes = [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (3, 0), (3, 2)];
    for instance in 0..50 {
        let (n_x, n_y) = shapes[instance % shapes.len()];
        let prior = random_prior(&mut gen_rng, n_x, n_y);
        let problem = build_wq(&prior).unwrap();
        let solution = solve_trust_region(&problem, 1).unwrap();
        check_solution_consistency(&problem, &solution.xi, solution.objective);

        let b = reduced_ball_objective(&problem);
        let mut pgd_rng = stream_rng(424_242, instance as u64 + 1);
        let pgd = pgd_ball_min(&b, 1, 100, 500, &mut pgd_rng);
        let scale = solution.objective.abs().max(1.0);
        assert!(
            (pgd - solution.objective).abs() < 1e-6 * scale,
            "instance {instance} (n_x={n_x}, n_y={n_y}): solver {} vs gradient search {}",
            solution.objective,
            pgd
        );
    }
}

#[test]
fn solver_matches_projected_gradient_on_planar_messages() {
    let mut gen_rng = stream_rng(777_001, 0);
    let shapes = [(2, 0), (2, 1), (3, 0), (3, 1)];
    for instance in 0..8 {
        let (n_x, n_y) = shapes[instance % shapes.len()];
        let prior = random_prior(&mut gen_rng, n_x, n_y);
        let problem = build_wq(&prior).unwrap();
        let solution = solve_trust_region(&problem, 2).unwrap();
        check_solution_consistency(&problem, &solution.xi, solution.objective);

        let b = reduced_ball_objective(&problem);
        let mut pgd_rng = stream_rng(777_001, instance as u64 + 1);
        let pgd = pgd_ball_min(&b, 2, 60, 800, &mut pgd_rng);
        let scale = solution.objective.abs().max(1.0);
        assert!(
            (pgd - solution.objective).abs() < 1e-6 * scale,
            "instance {instance} (n_x={n_x}, n_y={n_y}): solver {} vs gradient search {}",
            solution.objective,
            pgd
        );
    }
}
