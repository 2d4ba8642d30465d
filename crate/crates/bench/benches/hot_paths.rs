use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use sandman_bench::day_plan;
use sandman_core::engine::{simulate_typing, TypingProfile};
use sandman_core::scheduler::{parse_schedule, TaskCatalog};
use sandman_core::stats::{
    chi_square_independence, expected_schedule, pearson_correlation, two_sample_t_test, ContingencyTable, TTestKind,
};

fn stats(c: &mut Criterion) {
    let a: Vec<f64> = (0..500).map(|i| 60.0 + ((i * 37) % 41) as f64).collect();
    let b: Vec<f64> = (0..500).map(|i| 70.0 + ((i * 53) % 29) as f64).collect();
    c.bench_function("welch_500x500", |bn| {
        bn.iter(|| two_sample_t_test(black_box(&a), black_box(&b), TTestKind::Welch))
    });
    c.bench_function("pearson_500", |bn| bn.iter(|| pearson_correlation(black_box(&a), black_box(&b))));
    let table = ContingencyTable::new(
        vec!["x".into(), "y".into()],
        vec!["0".into(), "1".into(), "2+".into()],
        vec![vec![120, 300, 80], vec![90, 310, 100]],
    )
    .unwrap();
    c.bench_function("chi_square_2x3", |bn| bn.iter(|| chi_square_independence(black_box(&table))));

    let catalog = TaskCatalog::builtin();
    let order: Vec<&str> = catalog.tasks().iter().map(|t| t.name.as_str()).collect();
    let seqs: Vec<Vec<&str>> =
        (0..500).map(|s| (0..14).map(|i| order[(s * 7 + i * 3) % order.len()]).collect()).collect();
    c.bench_function("expected_schedule_500", |bn| bn.iter(|| expected_schedule(black_box(&seqs), &order)));
}

fn parsing(c: &mut Criterion) {
    let catalog = TaskCatalog::builtin();
    let plan = day_plan(&catalog, 20);
    c.bench_function("parse_schedule_20", |bn| bn.iter(|| parse_schedule(black_box(&plan), &catalog)));
}

fn typing(c: &mut Criterion) {
    let text = "Hi team, a quick update on the quarterly numbers before the meeting. ".repeat(8);
    let profile = TypingProfile::default();
    c.bench_function("simulate_typing_560", |bn| bn.iter(|| simulate_typing(black_box(&text), &profile, 7)));
}

criterion_group!(benches, stats, parsing, typing);
criterion_main!(benches);
