use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use clickmask::distance::distance_transform;
use clickmask::engines::maxflow::MaxFlow;
use clickmask::{segment, EdgeMap, EngineKind, EngineParams};
use clickmask_bench::blob_scene;

fn engines(c: &mut Criterion) {
    let mut group = c.benchmark_group("segment");
    group.sample_size(10);
    for size in [128usize, 512] {
        let (image, _, clicks) = blob_scene(size, 7);
        let prior = EdgeMap::zeros(size, size);
        for kind in EngineKind::ALL {
            let params = EngineParams::new(kind);
            group.bench_with_input(BenchmarkId::new(kind.id(), size), &size, |b, _| {
                b.iter(|| segment(&params, black_box(&image), &clicks, &prior).unwrap())
            });
        }
    }
    group.finish();
}

/// 4-connected grid graph with pseudo-random capacities.
fn maxflow(c: &mut Criterion) {
    let n = 256usize;
    let cap = |i: usize| ((i * 2654435761) % 97) as i64 + 1;
    c.bench_function("maxflow_grid_256", |b| {
        b.iter(|| {
            let mut g = MaxFlow::<i64>::with_capacity(n * n, 2 * n * n);
            for p in 0..n * n {
                let (x, y) = (p % n, p / n);
                g.add_terminal_weights(p, if x < n / 4 { 100 } else { 0 }, if x > 3 * n / 4 { 100 } else { 0 });
                if x + 1 < n {
                    g.add_edge(p, p + 1, cap(p), cap(p + 7));
                }
                if y + 1 < n {
                    g.add_edge(p, p + n, cap(p + 3), cap(p + 11));
                }
            }
            black_box(g.solve())
        })
    });
}

fn edt(c: &mut Criterion) {
    let (_, gt, _) = blob_scene(1024, 3);
    c.bench_function("distance_transform_1024", |b| b.iter(|| distance_transform(black_box(&gt))));
}

criterion_group!(benches, engines, maxflow, edt);
criterion_main!(benches);
