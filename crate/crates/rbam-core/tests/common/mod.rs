//! Seeded generators shared by the property suites. Everything derives from
//! an explicit ChaCha seed so failures replay exactly.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbam_core::distributions::Dataset;
use rbam_core::exprfn::FunctionModel;
use rbam_core::game::CooperativeGame;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random game values in [−5, 5) with the empty coalition pinned to 0.
pub fn random_game(rng: &mut ChaCha8Rng, d: usize) -> CooperativeGame {
    let mut values: Vec<f64> = (0..1usize << d).map(|_| rng.gen_range(-5.0..5.0)).collect();
    values[0] = 0.0;
    CooperativeGame::new(d, values).unwrap()
}

/// A random point inside the default probe box [−2, 2]^d.
pub fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// A small dataset over [−2, 2]^d for empirical reference distributions.
pub fn random_dataset(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Dataset {
    let rows = (0..n).map(|_| random_point(rng, d)).collect();
    Dataset::new(rows, None).unwrap()
}

/// Random expression source: a sum of 2–4 terms, each a half-integer
/// coefficient times a product of up to three safe factors (variables,
/// squares, abs/relu/max, damped exponentials). No division by variables and
/// no logarithms, so every generated function is total on the probe box.
pub fn random_expression(rng: &mut ChaCha8Rng, d: usize) -> String {
    let n_terms = rng.gen_range(2..=4);
    let mut terms = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        let coeff = loop {
            let c = rng.gen_range(-4i32..=4);
            if c != 0 {
                break c as f64 / 2.0;
            }
        };
        let n_factors = rng.gen_range(1..=3.min(d));
        let mut factors = Vec::with_capacity(n_factors);
        for _ in 0..n_factors {
            let i = rng.gen_range(1..=d);
            let factor = match rng.gen_range(0..6) {
                0 => format!("x{i}"),
                1 => format!("x{i}^2"),
                2 => format!("abs(x{i})"),
                3 => format!("relu(x{i})"),
                4 => format!("exp(x{i}/2)"),
                _ => {
                    let j = rng.gen_range(1..=d);
                    format!("max(x{i}, x{j})")
                }
            };
            factors.push(factor);
        }
        terms.push(format!("{coeff}*{}", factors.join("*")));
    }
    terms.join(" + ")
}

/// Parses a [`random_expression`] draw.
pub fn random_function(rng: &mut ChaCha8Rng, d: usize) -> FunctionModel {
    let source = random_expression(rng, d);
    FunctionModel::parse(&source, d)
        .unwrap_or_else(|e| panic!("generated expression failed to parse: {source}: {e}"))
}
