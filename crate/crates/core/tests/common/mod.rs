//! Shared test corpus: seeded random problems with m <= 12.

use axfi::model::{ExplanationProblem, Model};
use axfi::synth::{random_problem, ModelKind, RandomSpec};

pub fn corpus_specs() -> Vec<RandomSpec> {
    vec![
        RandomSpec::new(4, vec![2], ModelKind::Tabular, vec![1, 1]),
        RandomSpec::new(5, vec![2], ModelKind::Tree, vec![1, 1]),
        RandomSpec::new(6, vec![2], ModelKind::Tree, vec![2, 1]),
        RandomSpec::new(5, vec![3, 2, 2, 3, 2], ModelKind::Tabular, vec![1, 1]),
        RandomSpec::new(7, vec![2], ModelKind::Tree, vec![1, 1]),
        RandomSpec::new(6, vec![2, 3, 2, 2, 2, 3], ModelKind::Tree, vec![1, 2]),
        RandomSpec::new(8, vec![2], ModelKind::Tree, vec![1, 1]),
        RandomSpec::new(4, vec![3], ModelKind::Tabular, vec![1, 1, 1]),
        RandomSpec::new(9, vec![2], ModelKind::Tree, vec![2, 1]),
        RandomSpec::new(10, vec![2], ModelKind::Tree, vec![1, 1]),
        RandomSpec::new(12, vec![2], ModelKind::Tree, vec![1, 1]),
        RandomSpec::new(6, vec![2], ModelKind::Tabular, vec![1, 1]),
        RandomSpec::new(8, vec![2], ModelKind::Tabular, vec![3, 1]),
        RandomSpec::new(7, vec![2, 2, 3, 2, 2, 3, 2], ModelKind::Tree, vec![1, 1, 1]),
    ]
}

/// The seeded corpus used by the acceptance criteria: `n` problems cycling
/// through the `RandomSpec` table.
pub fn corpus(n: usize) -> Vec<(Model, ExplanationProblem)> {
    let specs = corpus_specs();
    (0..n)
        .map(|i| {
            let spec = &specs[i % specs.len()];
            random_problem(spec, 1000 + i as u64)
                .unwrap_or_else(|e| panic!("corpus problem {i} failed: {e}"))
        })
        .collect()
}
