use battery_core::fock::ThermalSpec;
use battery_core::gaussian::SymplecticParams;
use battery_core::multimode::{cost_tables, ModeSet, Objective, Strategy};
use battery_core::oracle::oracle_stats;
use battery_core::protocols::{optimal_precision_charge, recommended_dim};
use battery_core::Execution;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn protocol_sweep(c: &mut Criterion) {
    let spec = ThermalSpec::new(1.0, 1.0 / 3.0).unwrap();
    let grid: Vec<f64> = (0..=100).map(|i| 0.05 * i as f64).collect();
    let mut group = c.benchmark_group("protocol_sweep");
    for exec in MODES {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, exec| {
                b.iter(|| {
                    exec.map(&grid, |de| {
                        optimal_precision_charge(spec, *de, recommended_dim(spec, *de))
                            .map(|r| r.final_v)
                            .unwrap()
                    })
                })
            },
        );
    }
    group.finish();
}

fn oracle_batch(c: &mut Criterion) {
    let spec = ThermalSpec::new(1.0, 2.0).unwrap();
    let cases: Vec<SymplecticParams> = (0..8)
        .map(|i| {
            let t = i as f64 * 0.3;
            SymplecticParams::new(t, 0.05 * i as f64, 0.5 * t, [t.cos(), t.sin()]).unwrap()
        })
        .collect();
    let mut group = c.benchmark_group("oracle_batch");
    group.sample_size(10);
    for exec in MODES {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, exec| b.iter(|| exec.map(&cases, |p| oracle_stats(p, spec, 60).unwrap().delta_w2)),
        );
    }
    group.finish();
}

fn split_tables(c: &mut Criterion) {
    let modes = ModeSet::new(1.0, &[1.0, 1.0]).unwrap();
    let mut group = c.benchmark_group("split_tables");
    for exec in MODES {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, exec| {
                b.iter(|| {
                    cost_tables(
                        &modes,
                        black_box(80),
                        0.05,
                        Strategy::GaussianOptimal,
                        Objective::Fluctuation,
                        *exec,
                    )
                    .unwrap()
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, protocol_sweep, oracle_batch, split_tables);
criterion_main!(benches);
