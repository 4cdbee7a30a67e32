//! Microbenchmarks for the hot paths: assignment, planning, network passes,
//! board enumeration, split hashing, and model scoring.

use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use seads_core::nn::{Mlp, OutputHead};
use seads_core::planner::{bfs_plan, CachedSuccessors, OracleSuccessors, PlanLimits};
use seads_core::skill_model::ForwardModel;
use seads_core::{solve_assignment, BoardCatalog, GameSpec, SymbolicObs};

fn bench_assignment(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cost = Array2::from_shape_fn((32, 32), |_| rng.random::<f64>());
    c.bench_function("assignment_32x32", |b| {
        b.iter(|| solve_assignment(black_box(&cost)))
    });
}

fn bench_bfs_plan(c: &mut Criterion) {
    let game = GameSpec::lights_out(5).unwrap();
    let catalog = BoardCatalog::build(game, 5);
    let board = &catalog.boards(5).unwrap()[0];
    let z0 = game.to_symbolic(board);
    let goal = game.goal_symbolic();
    let oracle = OracleSuccessors::new(game);
    let limits = PlanLimits::default();
    c.bench_function("bfs_plan_depth5_oracle", |b| {
        b.iter(|| {
            let succ = CachedSuccessors::new(&oracle, game.symbolic_dim());
            bfs_plan(&succ, black_box(&z0), &goal, &limits)
        })
    });
}

fn bench_mlp(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mlp = Mlp::new(&[52, 512, 512, 6], OutputHead::Linear, &mut rng);
    let x = Array2::from_shape_fn((128, 52), |_| rng.random::<f64>());
    c.bench_function("mlp_forward_128x52_512x512", |b| {
        b.iter(|| mlp.output(black_box(&x)))
    });
    c.bench_function("mlp_backward_128x52_512x512", |b| {
        b.iter(|| {
            let cache = mlp.forward(black_box(&x));
            let dy = cache.out.clone();
            mlp.backward(&cache, &dy)
        })
    });
}

fn bench_catalog(c: &mut Criterion) {
    c.bench_function("catalog_lights5_depth3", |b| {
        b.iter(|| BoardCatalog::build(GameSpec::lights_out(5).unwrap(), 3))
    });
    c.bench_function("catalog_tiles_depth5", |b| {
        b.iter(|| BoardCatalog::build(GameSpec::TileSwap, 5))
    });
}

fn bench_splits(c: &mut Criterion) {
    let game = GameSpec::lights_out(5).unwrap();
    let catalog = BoardCatalog::build(game, 2);
    let boards = catalog.boards(2).unwrap();
    c.bench_function("split_of_300_boards", |b| {
        b.iter(|| {
            boards
                .iter()
                .map(|board| game.split_of(black_box(board)) as usize)
                .sum::<usize>()
        })
    });
}

fn bench_model_scores(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = ForwardModel::new(25, 25, &[256, 256], 1e-3, &mut rng);
    let pairs_owned: Vec<(SymbolicObs, SymbolicObs)> = (0..256)
        .map(|_| {
            let a: Vec<u8> = (0..25).map(|_| u8::from(rng.random::<bool>())).collect();
            let b: Vec<u8> = (0..25).map(|_| u8::from(rng.random::<bool>())).collect();
            (SymbolicObs::new(a), SymbolicObs::new(b))
        })
        .collect();
    let pairs: Vec<(&SymbolicObs, &SymbolicObs)> =
        pairs_owned.iter().map(|(a, b)| (a, b)).collect();
    c.bench_function("fm_log_lik_256_pairs", |b| {
        b.iter(|| model.log_lik_matrix(black_box(&pairs)))
    });
}

criterion_group!(
    benches,
    bench_assignment,
    bench_bfs_plan,
    bench_mlp,
    bench_catalog,
    bench_splits,
    bench_model_scores
);
criterion_main!(benches);
