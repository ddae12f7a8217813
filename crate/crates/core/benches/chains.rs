use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hdcpr::inference::{run_chain, select_num_changepoints, ChainConfig};
use hdcpr::model::PriorFamily;
use hdcpr::simulation::{gen_dataset, run_scenario_grid, GridSettings, Preset};
use hdcpr::Execution;

const POLICIES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn bench_single_chain(c: &mut Criterion) {
    let mut group = c.benchmark_group("single_chain");
    group.sample_size(10);
    for p in [20usize, 100] {
        let mut preset = Preset::dic_strong(true, 1);
        preset.scenario.p = p;
        for b in &mut preset.scenario.beta {
            b.resize(p, 0.0);
        }
        let (data, _) = gen_dataset(&preset.scenario).unwrap();
        let cfg = preset.chain_config(500, 100, PriorFamily::Basad);
        group.bench_with_input(BenchmarkId::new("basad_500_sweeps", p), &p, |b, _| {
            b.iter(|| black_box(run_chain(&data, &cfg).unwrap()))
        });
    }
    group.finish();
}

fn bench_select_k(c: &mut Criterion) {
    let mut group = c.benchmark_group("select_k");
    group.sample_size(10);
    let preset = Preset::dic_strong(true, 2);
    let (data, _) = gen_dataset(&preset.scenario).unwrap();
    let base: ChainConfig = preset.chain_config(600, 200, PriorFamily::Basad);
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(select_num_changepoints(&data, &[0, 1, 2, 3], &base, 0.95, exec).unwrap()))
        });
    }
    group.finish();
}

fn bench_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("scenario_grid");
    group.sample_size(10);
    let presets = [Preset::dic_strong(true, 3), Preset::dic_strong(false, 3)];
    let settings = GridSettings {
        iterations: 400,
        burn_in: 100,
        replicates: 2,
        ..GridSettings::default()
    };
    let families = [PriorFamily::Basad, PriorFamily::Lasso];
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(run_scenario_grid(&presets, &families, &settings, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_single_chain, bench_select_k, bench_grid);
criterion_main!(benches);
