use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hdsel::identify::{frequency_grid, resample_frequencies, ResamplePlan};
use hdsel::numcore::RngStream;
use hdsel::par::{set_exec_mode, ExecMode};
use hdsel::regpath::PenaltySpec;
use hdsel::simgen::{Design, DesignSpec};

fn resampling(c: &mut Criterion) {
    let pair = DesignSpec::new(Design::Cluster, 100, 60).replicate(7, 0).unwrap();
    let (x, y) = (&pair.train.x, &pair.train.y);
    let pen = PenaltySpec::lasso();
    let grid = frequency_grid(x, y, &pen, 50, 1e-2).unwrap();
    let plan = ResamplePlan {
        count: 40,
        ..ResamplePlan::default()
    };
    let rng = RngStream::new(1, 0);
    let mut group = c.benchmark_group("bootstrap-frequencies");
    group.sample_size(10);
    for (label, mode) in [("parallel", ExecMode::Parallel), ("sequential", ExecMode::Sequential)] {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            set_exec_mode(mode);
            b.iter(|| resample_frequencies(x, y, &plan, &pen, &grid, &rng).unwrap());
        });
    }
    set_exec_mode(ExecMode::Parallel);
    group.finish();
}

criterion_group!(benches, resampling);
criterion_main!(benches);
