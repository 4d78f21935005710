//! The heap-based search must agree exactly with a brute-force argsort
//! oracle, on fixed cases and on randomized banks.

use hint_bank::{HintBank, SearchHit};
use hint_extract::HintKind;
use proptest::prelude::*;
use tensor_core::Matrix;
use test_support::fd::lcg_values;

/// Reference ranking: score every entry, stable-sort by descending score
/// with earlier insertion first, take `k`.
fn brute_force(bank: &HintBank, head: usize, query: &[f64], k: usize) -> Vec<SearchHit> {
    let mut scored: Vec<SearchHit> = bank
        .entries(head)
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let mut acc = 0.0;
            for (x, y) in query.iter().zip(&e.key) {
                acc += x * y;
            }
            SearchHit { index, score: acc }
        })
        .collect();
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    scored.truncate(k);
    scored
}

fn fill_bank(num_heads: usize, dim: usize, snippets: &[usize], seed: u64) -> HintBank {
    let mut bank = HintBank::new(num_heads, dim, "doc");
    for (si, &rows) in snippets.iter().enumerate() {
        let mask = vec![true; rows];
        let kinds = vec![Some(HintKind::FunctionDefinition); rows];
        let keys: Vec<Matrix> = (0..num_heads)
            .map(|h| {
                Matrix::from_vec(
                    rows,
                    dim,
                    lcg_values(seed ^ (si as u64 * 31 + h as u64), rows * dim),
                )
                .unwrap()
            })
            .collect();
        let values: Vec<Matrix> = (0..num_heads)
            .map(|h| {
                Matrix::from_vec(
                    rows,
                    dim,
                    lcg_values(seed ^ (si as u64 * 131 + h as u64 + 7), rows * dim),
                )
                .unwrap()
            })
            .collect();
        bank.write(si, &keys, &values, &mask, &kinds).unwrap();
    }
    bank
}

#[test]
fn matches_brute_force_on_fixed_banks() {
    for seed in 0..20u64 {
        let bank = fill_bank(2, 4, &[3, 5, 2], seed);
        let query: Vec<f64> = lcg_values(seed + 500, 4);
        for head in 0..2 {
            for k in [1, 2, 3, 7, 10, 100] {
                let fast = bank.knn_search(head, &query, k).unwrap();
                let slow = brute_force(&bank, head, &query, k);
                assert_eq!(fast, slow, "seed {seed} head {head} k {k}");
            }
        }
    }
}

#[test]
fn k_larger_than_bank_returns_everything_ranked() {
    let bank = fill_bank(1, 3, &[4], 9);
    let hits = bank.knn_search(0, &[1.0, -0.5, 0.25], 64).unwrap();
    assert_eq!(hits.len(), 4);
    for pair in hits.windows(2) {
        assert!(pair[0].score >= pair[1].score);
    }
}

/// Growing the bank can only improve (or keep) each ranked score.
#[test]
fn superset_scores_dominate() {
    let small = fill_bank(1, 4, &[4], 42);
    let big = fill_bank(1, 4, &[4, 6], 42);
    let query: Vec<f64> = lcg_values(1234, 4);
    let k = 3;
    let small_hits = small.knn_search(0, &query, k).unwrap();
    let big_hits = big.knn_search(0, &query, k).unwrap();
    for (s, b) in small_hits.iter().zip(&big_hits) {
        assert!(b.score >= s.score);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn search_always_matches_oracle(
        seed in 0u64..10_000,
        rows in prop::collection::vec(1usize..6, 1..4),
        k in 0usize..8,
        dim in 1usize..5,
    ) {
        let bank = fill_bank(1, dim, &rows, seed);
        let query: Vec<f64> = lcg_values(seed ^ 0xabc, dim);
        let fast = bank.knn_search(0, &query, k).unwrap();
        let slow = brute_force(&bank, 0, &query, k);
        prop_assert_eq!(fast, slow);
    }
}
