//! Criterion benchmarks for the equilibrium solvers: the scalar one-shot
//! family, a ten-sensor competitive fixed point, the herding error sweep,
//! a twenty-step filter plan, and a ten-step sequential schedule.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;

use strategic_sensors::async_seq::{sequential_equilibrium, SequentialConfig};
use strategic_sensors::dynamic::{plan_filter, DynamicModel, StepModel};
use strategic_sensors::herding::unit_herding_error;
use strategic_sensors::multi_sync::{error_vs_n, symmetric_equilibrium};
use strategic_sensors::static_single::equilibrium_scalar;
use strategic_sensors::{JointGaussian, MultiSensorConfig};

fn bench_scalar_one_shot(c: &mut Criterion) {
    let prior = JointGaussian::scalar(1.0, 0.7, 1.49).unwrap();
    c.bench_function("one_shot_scalar_equilibrium", |b| {
        b.iter(|| equilibrium_scalar(black_box(&prior)).unwrap())
    });
}

fn bench_symmetric_ten_sensors(c: &mut Criterion) {
    let one = DMatrix::identity(1, 1);
    let config = MultiSensorConfig::new(
        10,
        one.clone(),
        one.clone(),
        DMatrix::zeros(1, 1),
        DMatrix::zeros(1, 1),
    )
    .unwrap();
    c.bench_function("symmetric_equilibrium_10_sensors", |b| {
        b.iter(|| symmetric_equilibrium(black_box(&config)).unwrap())
    });
}

fn bench_error_curves(c: &mut Criterion) {
    let one = DMatrix::identity(1, 1);
    c.bench_function("competition_curve_100_points", |b| {
        b.iter(|| error_vs_n(black_box(&one), black_box(&one), 100).unwrap())
    });
    c.bench_function("herding_curve_100_points", |b| {
        b.iter(|| (1..=100).map(|n| unit_herding_error(black_box(n))).sum::<f64>())
    });
}

fn bench_filter_plan(c: &mut Criterion) {
    let step = StepModel {
        a_x: DMatrix::from_element(1, 1, 0.9),
        a_theta: DMatrix::from_element(1, 1, 0.8),
        c_yx: DMatrix::from_element(1, 1, 1.0),
        c_ytheta: DMatrix::zeros(1, 1),
        v_wx: DMatrix::from_element(1, 1, 0.4),
        v_wtheta: DMatrix::from_element(1, 1, 0.3),
        v_wy: DMatrix::from_element(1, 1, 0.5),
    };
    let model = DynamicModel::time_invariant(step, DMatrix::identity(2, 2), 20).unwrap();
    c.bench_function("filter_plan_horizon_20", |b| {
        b.iter(|| plan_filter(black_box(&model), 1).unwrap())
    });
}

fn bench_sequential_schedule(c: &mut Criterion) {
    let config = SequentialConfig::scalar(10, 1.0, 0.3, 1.2).unwrap();
    c.bench_function("sequential_schedule_10_steps", |b| {
        b.iter(|| sequential_equilibrium(black_box(&config)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_scalar_one_shot,
    bench_symmetric_ten_sensors,
    bench_error_curves,
    bench_filter_plan,
    bench_sequential_schedule
);
criterion_main!(benches);
