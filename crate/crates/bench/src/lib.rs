//! Criterion benchmarks for the hot paths; see `benches/`.
//!
//! Run with `cargo bench -p sandman-bench`.

use sandman_core::scheduler::TaskCatalog;

/// A well-formed day plan naming `n` catalog tasks back to back from 08:00.
pub fn day_plan(catalog: &TaskCatalog, n: usize) -> String {
    let names: Vec<&str> = catalog.tasks().iter().map(|t| t.name.as_str()).collect();
    let mut t = 8 * 60;
    let mut out = String::new();
    for i in 0..n {
        let d = 15 + (i % 4) * 15;
        out.push_str(&format!(
            "{:02}:{:02} - {:02}:{:02} | {}\n",
            t / 60,
            t % 60,
            (t + d) / 60,
            (t + d) % 60,
            names[i % names.len()]
        ));
        t += d;
    }
    out
}
