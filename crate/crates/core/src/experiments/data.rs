//! Seeded synthetic datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::table::{Column, Table};

/// The generator behind every experiment: ChaCha with 8 rounds, seeded
/// through `seed_from_u64`, so streams are identical across platforms.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn column(name: &str, values: Vec<f64>) -> Column {
    Column::inferred(name, values.into_iter().map(Some).collect())
}

/// `agg` uniform on {1..4} and `x1`..`x3` uniform on {1..9}, all
/// independent, so every filtered pmf of `agg` is uniform in the population.
pub fn gen_uniform_dataset(n: usize, seed: u64) -> Table {
    let mut r = rng(seed);
    let mut cols: [Vec<f64>; 4] = Default::default();
    for _ in 0..n {
        cols[0].push(r.random_range(1..=4) as f64);
        for c in cols.iter_mut().skip(1) {
            c.push(r.random_range(1..=9) as f64);
        }
    }
    let [agg, x1, x2, x3] = cols;
    Table::new(
        format!("uniform-{seed}"),
        vec![column("agg", agg), column("x1", x1), column("x2", x2), column("x3", x3)],
    )
    .expect("generated columns have equal length")
}

/// `flag` splits rows in half; `agg` in {0, 1} equals `flag` with
/// probability 0.75, so the pmf of `agg` under `flag >= 1` is 0.5 away from
/// the one under `flag <= 0`. `x1`, `x2` are uniform noise on {1..9}.
pub fn gen_planted_dataset(n: usize, seed: u64) -> Table {
    let mut r = rng(seed);
    let (mut flag, mut agg, mut x1, mut x2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let f = r.random_bool(0.5) as u8;
        let same = r.random_bool(0.75);
        flag.push(f as f64);
        agg.push(if same { f } else { 1 - f } as f64);
        x1.push(r.random_range(1..=9) as f64);
        x2.push(r.random_range(1..=9) as f64);
    }
    Table::new(
        format!("planted-{seed}"),
        vec![column("flag", flag), column("x1", x1), column("x2", x2), column("agg", agg)],
    )
    .expect("generated columns have equal length")
}

/// Uniform layout where `P(agg = 1)` rises by `lift` wherever `x1 <= 2`, plus columns
/// that carry no information: a running identifier, two constants and a
/// rescaled copy of `x2`.
pub fn gen_restriction_dataset(n: usize, seed: u64, lift: f64) -> Table {
    let mut r = rng(seed);
    let mut cols: [Vec<f64>; 8] = Default::default();
    for i in 0..n {
        let x1 = r.random_range(1..=9);
        let x2 = r.random_range(1..=9);
        let x3 = r.random_range(1..=9);
        let agg = if x1 <= 2 && r.random_bool((lift / 0.75).clamp(0.0, 1.0)) {
            1
        } else {
            r.random_range(1..=4)
        };
        for (c, v) in cols.iter_mut().zip([agg as f64, x1 as f64, x2 as f64, x3 as f64, i as f64, 1.0, 0.0, 10.0 * x2 as f64 + 5.0]) {
            c.push(v);
        }
    }
    let names = ["agg", "x1", "x2", "x3", "row_id", "const_a", "const_b", "x2_scaled"];
    Table::new(
        format!("restriction-{seed}"),
        names.iter().zip(cols).map(|(name, values)| column(name, values)).collect(),
    )
    .expect("generated columns have equal length")
}

/// `n` draws of Bin(trials, p) as sums of Bernoulli trials.
pub fn binomial_sample(n: usize, trials: u32, p: f64, seed: u64) -> Vec<u32> {
    let mut r = rng(seed);
    (0..n).map(|_| (0..trials).filter(|_| r.random_bool(p)).count() as u32).collect()
}

/// Exact Bin(trials, p) probabilities.
pub fn binomial_pmf(trials: u32, p: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(trials as usize + 1);
    let mut coef = 1.0f64;
    for k in 0..=trials {
        out.push(coef * p.powi(k as i32) * (1.0 - p).powi((trials - k) as i32));
        coef = coef * (trials - k) as f64 / (k + 1) as f64;
    }
    out
}
