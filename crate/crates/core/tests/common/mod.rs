//! Oracles shared by the statistics suite and the acceptance suite. None of
//! them call into the library.
#![allow(dead_code)]

use sandman_core::stats::END_OF_DAY;
use std::f64::consts::PI;

pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive(f, a, m, left, tol / 2.0, depth - 1) + adaptive(f, m, b, right, tol / 2.0, depth - 1)
}

pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    adaptive(f, a, b, simpson(f, a, b), 1e-12, 50)
}

/// ∫_lo^∞ f, mapped onto [0, 1) by x = lo + u / (1 - u).
pub fn integrate_upper(f: &dyn Fn(f64) -> f64, lo: f64) -> f64 {
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let x = lo + u / (1.0 - u);
        f(x) / ((1.0 - u) * (1.0 - u))
    };
    integrate(&g, 0.0, 1.0)
}

/// Student-t density for dof = 10 with its normalising constant in closed
/// form: Γ(11/2) = (945/32)√π, Γ(5) = 24.
pub fn t10_density(x: f64) -> f64 {
    let c = (945.0 / 32.0) * PI.sqrt() / ((10.0 * PI).sqrt() * 24.0);
    c * (1.0 + x * x / 10.0).powf(-5.5)
}

/// Student-t density for dof = 8: Γ(9/2) = (105/16)√π, Γ(4) = 6.
pub fn t8_density(x: f64) -> f64 {
    let c = (105.0 / 16.0) * PI.sqrt() / ((8.0 * PI).sqrt() * 6.0);
    c * (1.0 + x * x / 8.0).powf(-4.5)
}

/// Chi-square density for dof = 1: x^{-1/2} e^{-x/2} / √(2π).
pub fn chi1_density(x: f64) -> f64 {
    (-x / 2.0).exp() / (2.0 * PI * x).sqrt()
}

/// Welch statistic and dof straight from the textbook formula, with loops
/// rather than the library's helpers.
pub fn brute_welch(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mean = |s: &[f64]| {
        let mut acc = 0.0;
        for v in s {
            acc += v;
        }
        acc / s.len() as f64
    };
    let var = |s: &[f64]| {
        let m = mean(s);
        let mut acc = 0.0;
        for v in s {
            acc += (v - m).powi(2);
        }
        acc / (s.len() - 1) as f64
    };
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (var(a) / na, var(b) / nb);
    let t = (mean(a) - mean(b)) / (va + vb).sqrt();
    let dof = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    (t, dof)
}

pub fn brute_chi2(counts: &[Vec<u64>]) -> f64 {
    let total: u64 = counts.iter().flatten().sum();
    let mut chi = 0.0;
    for (i, row) in counts.iter().enumerate() {
        let r: u64 = row.iter().sum();
        for j in 0..row.len() {
            let c: u64 = counts.iter().map(|row| row[j]).sum();
            let e = r as f64 * c as f64 / total as f64;
            chi += (counts[i][j] as f64 - e).powi(2) / e;
        }
    }
    chi
}

/// Per-slot tally by explicit counting over sorted (count, rank) pairs.
pub fn brute_expected(seqs: &[Vec<String>], order: &[&str]) -> Vec<(String, usize, bool)> {
    let max = seqs.iter().map(|s| s.len()).max().unwrap() + 1;
    let mut out = Vec::new();
    for pos in 0..max {
        let mut labels: Vec<String> = order.iter().map(|s| s.to_string()).collect();
        labels.push(END_OF_DAY.to_string());
        let counts: Vec<usize> = labels
            .iter()
            .map(|l| seqs.iter().filter(|s| s.get(pos).map(String::as_str).unwrap_or(END_OF_DAY) == l).count())
            .collect();
        let best = *counts.iter().max().unwrap();
        let first = counts.iter().position(|&c| c == best).unwrap();
        let ties = counts.iter().filter(|&&c| c == best).count();
        out.push((labels[first].clone(), best, ties > 1));
    }
    out
}
