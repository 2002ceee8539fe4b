//! Brute-force reference implementations and random inputs shared by the
//! integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Pearson from Welford-style running co-moments.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let (mut mx, mut my, mut cxy, mut cxx, mut cyy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        let n = (i + 1) as f64;
        let dx = a - mx;
        let dy = b - my;
        mx += dx / n;
        my += dy / n;
        cxy += dx * (b - my);
        cxx += dx * (a - mx);
        cyy += dy * (b - my);
    }
    cxy / (cxx * cyy).sqrt()
}

/// Average ranks by counting smaller and equal values.
pub fn ranks_oracle(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    pearson_oracle(&ranks_oracle(x), &ranks_oracle(y))
}

/// Tau-b over all pairs.
pub fn kendall_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let sx = (x[i] - x[j]).signum() as i64 * i64::from(x[i] != x[j]);
            let sy = (y[i] - y[j]).signum() as i64 * i64::from(y[i] != y[j]);
            if sx == 0 {
                tx += 1;
            }
            if sy == 0 {
                ty += 1;
            }
            match sx * sy {
                1 => c += 1,
                -1 => d += 1,
                _ => {}
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    (c - d) as f64 / (((n0 - tx) * (n0 - ty)) as f64).sqrt()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A non-constant vector of length `n`; with `ties`, values come from a
/// small integer set so repeated values are common.
pub fn random_vector<R: Rng>(rng: &mut R, n: usize, ties: bool) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| if ties { rng.random_range(0..5) as f64 } else { rng.random_range(-50.0..50.0) })
            .collect();
        if v.iter().any(|&a| a != v[0]) {
            return v;
        }
    }
}

/// Random complete models x tasks matrix with distinct-ish scores.
pub fn random_rows<R: Rng>(rng: &mut R, models: usize, tasks: usize) -> Vec<Vec<f64>> {
    (0..models).map(|_| (0..tasks).map(|_| rng.random_range(0.0..100.0)).collect()).collect()
}
