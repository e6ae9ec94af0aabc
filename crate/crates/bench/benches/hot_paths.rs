use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::Rng;
use stampede_core::assess::{evaluate, AssessmentConfig};
use stampede_core::pedmodel::{solve_velocity, HalfPlane};
use stampede_core::rng;
use stampede_core::scenario::Scenario;
use stampede_core::{SpatialIndex, Vec2, World};

fn world(n: usize) -> (Scenario, World) {
    let s = Scenario::jamarat();
    let agents = s.spawn_agents(n).unwrap();
    (s, World::new(agents, 7))
}

fn step(c: &mut Criterion) {
    let (s, w) = world(1000);
    // advance past the start-up transient so agents are moving
    let mut warm = w.clone();
    for _ in 0..50 {
        warm.step(&s.map, &s.model).unwrap();
    }
    c.bench_function("step_1000", |b| {
        b.iter_batched_ref(
            || warm.clone(),
            |w| w.step(&s.map, &s.model).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn index_build(c: &mut Criterion) {
    let (_, w) = world(10240);
    c.bench_function("index_build_10240", |b| {
        b.iter(|| SpatialIndex::build(black_box(&w.agents), 3.0).unwrap())
    });
}

fn lp(c: &mut Criterion) {
    let mut r = rng::stream(&[11]);
    let problems: Vec<(Vec<HalfPlane>, Vec2)> = (0..256)
        .map(|_| {
            let planes = (0..10)
                .map(|_| {
                    let p = Vec2::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
                    HalfPlane::new(p, Vec2::from_angle(r.random_range(-PI..PI)))
                })
                .collect();
            (planes, Vec2::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)))
        })
        .collect();
    c.bench_function("lp_10_planes", |b| {
        b.iter(|| {
            for (planes, pref) in &problems {
                black_box(solve_velocity(planes, 0, *pref, 2.0, 0.0));
            }
        })
    });
}

fn assess(c: &mut Criterion) {
    let (s, mut w) = world(1000);
    for _ in 0..50 {
        w.step(&s.map, &s.model).unwrap();
    }
    let mut g = c.benchmark_group("evaluate_1000");
    for cfg in [
        AssessmentConfig::pressure(2.0),
        AssessmentConfig::force(),
        AssessmentConfig::density(1.0),
    ] {
        let index = w.index(cfg.cutoff().max(1.0)).unwrap();
        g.bench_function(cfg.label(), |b| {
            b.iter(|| evaluate(black_box(&w.agents), &index, &cfg, s.model.dt, w.step))
        });
    }
    g.finish();
}

criterion_group!(benches, step, index_build, lp, assess);
criterion_main!(benches);
