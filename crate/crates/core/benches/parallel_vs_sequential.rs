//! The data-parallel helpers against a plain sequential map on two workloads
//! taken from the experiment suites: projecting every vertex of a ball into
//! the complement of `σ0`, and the intersection bracket on random triples.
//!
//! Built without the `parallel` feature both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use freesplit::growth::{nielsen_twist_bound_check, random_rose, random_system, random_twist};
use freesplit::par::par_map;
use freesplit::projections::{project, ComplementChart};
use freesplit::splittings::{build_local_ball, BallBounds, GraphKind, LinkTemplate};

fn projections(c: &mut Criterion) {
    let chart = ComplementChart::standard(3);
    let tpl = LinkTemplate::new(3, GraphKind::Sg, BallBounds::new(3).with_separating(4), None).unwrap();
    let ball = build_local_ball(&chart.sigma0_sphere(), 2, &tpl, 100_000).unwrap();
    let mut g = c.benchmark_group(format!("project_ball_{}_vertices", ball.len()));
    g.sample_size(10);
    g.bench_function("sequential", |b| {
        b.iter(|| ball.spheres.iter().map(|s| project(s, &chart).ok()).collect::<Vec<_>>())
    });
    g.bench_function("parallel", |b| b.iter(|| par_map(&ball.spheres, |s| project(s, &chart).ok())));
    g.finish();
}

fn bracket(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let triples: Vec<_> = (0..300)
        .map(|_| {
            let (ls, lr) = (rng.gen_range(0..=6), rng.gen_range(0..=6));
            (random_system(&mut rng, 3, ls), random_rose(&mut rng, 3, lr), random_twist(&mut rng, 3))
        })
        .collect();
    let mut g = c.benchmark_group("twist_bracket_300_triples");
    g.sample_size(10);
    g.bench_function("sequential", |b| {
        b.iter(|| triples.iter().map(|(s, r, m)| nielsen_twist_bound_check(s, r, m).ok()).collect::<Vec<_>>())
    });
    g.bench_function("parallel", |b| {
        b.iter(|| par_map(&triples, |(s, r, m)| nielsen_twist_bound_check(black_box(s), r, m).ok()))
    });
    g.finish();
}

criterion_group!(benches, projections, bracket);
criterion_main!(benches);
