use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hybrid_qf::semigroup::evolve_charfn_batch;
use hybrid_qf::{
    simulate_hybrid_gaussian, wigner_from_charfn, Backend, CharFnGrid, GeneratorParams, GridSpec,
    HybridGaussianState, LevyAtom, NoiseFunctionEvaluator, SimulationConfig,
};
use nalgebra::{DMatrix, DVector};

const BACKENDS: [(&str, Backend); 2] = [("sequential", Backend::Sequential), ("parallel", Backend::Parallel)];

fn hybrid_model(jumps: bool) -> GeneratorParams {
    let z = DMatrix::from_row_slice(3, 3, &[-0.5, 1.0, 1.0, -1.0, -0.5, 0.0, 0.0, 0.0, -0.2]);
    let atoms = if jumps {
        vec![LevyAtom::new(DVector::from_column_slice(&[0.3, 0.0, 0.5]), 1.0)]
    } else {
        vec![]
    };
    GeneratorParams::from_parts(1, 1, z, DVector::zeros(3), DMatrix::identity(3, 3), atoms).unwrap()
}

fn state(p: &GeneratorParams) -> HybridGaussianState {
    HybridGaussianState::new(p.space.clone(), DVector::zeros(3), DMatrix::identity(3, 3) * 0.5).unwrap()
}

fn monte_carlo(c: &mut Criterion) {
    let p = hybrid_model(false);
    let st = state(&p);
    let mut group = c.benchmark_group("simulate_hybrid_gaussian");
    group.sample_size(10);
    for (name, backend) in BACKENDS {
        let cfg = SimulationConfig::new(1.0, 1)
            .with_paths(20_000)
            .with_dt(1e-2)
            .with_backend(backend);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulate_hybrid_gaussian(&p, &st, &cfg).unwrap())
        });
    }
    group.finish();
}

fn batch_charfn(c: &mut Criterion) {
    let p = hybrid_model(true);
    let st = state(&p);
    let ev = NoiseFunctionEvaluator::new(p);
    let xis: Vec<DVector<f64>> = (0..512)
        .map(|i| {
            let t = i as f64 * 0.37;
            DVector::from_column_slice(&[t.sin(), t.cos(), (0.5 * t).sin()])
        })
        .collect();
    let mut group = c.benchmark_group("evolve_charfn_batch");
    group.sample_size(10);
    for (name, backend) in BACKENDS {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| evolve_charfn_batch(&ev, &st, &xis, 1.5, backend).unwrap())
        });
    }
    group.finish();
}

fn grid_sampling(c: &mut Criterion) {
    let p = hybrid_model(false);
    let st = state(&p);
    let spec = GridSpec::uniform(3, 10.0, 65).unwrap();
    let mut group = c.benchmark_group("charfn_grid_and_wigner");
    group.sample_size(10);
    for (name, backend) in BACKENDS {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| wigner_from_charfn(&CharFnGrid::sample(spec.clone(), &st, backend)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, batch_charfn, grid_sampling);
criterion_main!(benches);
