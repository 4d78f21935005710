//! Hand-derived metric values, asserted at full float precision.

use harness::{eval_binary, eval_rank, BinaryBatch, EvalBatch, HarnessError};

fn ranked(lists: &[&[usize]], gold: &[usize]) -> EvalBatch {
    EvalBatch {
        ranked: lists.iter().map(|l| l.to_vec()).collect(),
        gold: gold.to_vec(),
    }
}

fn binary(predicted: &[bool], gold: &[bool]) -> BinaryBatch {
    BinaryBatch {
        predicted: predicted.to_vec(),
        gold: gold.to_vec(),
    }
}

#[test]
fn single_query_hit_at_rank_one() {
    let r = eval_rank(&ranked(&[&[7, 3, 9]], &[7]), &[1, 3]).unwrap();
    assert_eq!(r.sr_at[&1], 1.0);
    assert_eq!(r.sr_at[&3], 1.0);
    assert_eq!(r.mrr, Some(1.0));
    assert_eq!(r.accuracy, 1.0);
}

#[test]
fn single_query_hit_at_rank_four() {
    let r = eval_rank(&ranked(&[&[5, 1, 2, 8, 0]], &[8]), &[1, 3, 5]).unwrap();
    assert_eq!(r.sr_at[&1], 0.0);
    assert_eq!(r.sr_at[&3], 0.0);
    assert_eq!(r.sr_at[&5], 1.0);
    assert_eq!(r.mrr, Some(0.25));
    assert_eq!(r.accuracy, 0.0);
}

#[test]
fn ranks_one_and_three_average_to_two_thirds() {
    let batch = ranked(&[&[4, 6, 2], &[9, 1, 5]], &[4, 5]);
    let r = eval_rank(&batch, &[1, 2, 3]).unwrap();
    assert_eq!(r.mrr, Some(2.0 / 3.0));
    assert_eq!(r.sr_at[&1], 0.5);
    assert_eq!(r.sr_at[&2], 0.5);
    assert_eq!(r.sr_at[&3], 1.0);
    assert_eq!(r.accuracy, 0.5);
}

#[test]
fn missing_gold_contributes_zero_reciprocal_rank() {
    let batch = ranked(&[&[1, 2, 3], &[7, 8, 9]], &[1, 4]);
    let r = eval_rank(&batch, &[1, 3]).unwrap();
    assert_eq!(r.mrr, Some(0.5));
    assert_eq!(r.sr_at[&3], 0.5);
    let all_missing = ranked(&[&[1, 2], &[3, 4]], &[9, 9]);
    let r = eval_rank(&all_missing, &[1, 2]).unwrap();
    assert_eq!(r.mrr, Some(0.0));
    assert_eq!(r.sr_at[&2], 0.0);
    assert_eq!(r.accuracy, 0.0);
}

#[test]
fn last_place_hit_counts_only_at_full_depth() {
    let r = eval_rank(&ranked(&[&[3, 1]], &[1]), &[1, 2]).unwrap();
    assert_eq!(r.sr_at[&1], 0.0);
    assert_eq!(r.sr_at[&2], 1.0);
    assert_eq!(r.mrr, Some(0.5));
}

#[test]
fn five_query_mixture_matches_hand_arithmetic() {
    let batch = ranked(
        &[
            &[10, 11, 12, 13, 14],
            &[11, 10, 12, 13, 14],
            &[12, 13, 14, 15, 16],
            &[13, 14, 15, 16, 10],
            &[14, 15, 16, 10, 11],
        ],
        &[10, 10, 99, 10, 14],
    );
    let r = eval_rank(&batch, &[1, 2, 5]).unwrap();
    assert_eq!(r.sr_at[&1], 2.0 / 5.0);
    assert_eq!(r.sr_at[&2], 3.0 / 5.0);
    assert_eq!(r.sr_at[&5], 4.0 / 5.0);
    assert_eq!(r.mrr, Some((1.0 + 0.5 + 0.0 + 0.2 + 1.0) / 5.0));
    assert_eq!(r.accuracy, 2.0 / 5.0);
}

#[test]
fn accuracy_is_top_one_even_without_that_cutoff() {
    let batch = ranked(&[&[4, 6], &[6, 4]], &[4, 4]);
    let r = eval_rank(&batch, &[2]).unwrap();
    assert!(!r.sr_at.contains_key(&1));
    assert_eq!(r.accuracy, 0.5);
}

#[test]
fn binary_all_correct_is_all_ones() {
    let r = eval_binary(&binary(&[true, false, true], &[true, false, true])).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(r.precision, Some(1.0));
    assert_eq!(r.recall, Some(1.0));
    assert_eq!(r.f1, Some(1.0));
    assert_eq!(r.mrr, None);
    assert!(r.sr_at.is_empty());
}

#[test]
fn binary_nothing_predicted_positive_zeroes_the_trio() {
    let r = eval_binary(&binary(&[false, false, false], &[true, true, false])).unwrap();
    assert_eq!(r.accuracy, 1.0 / 3.0);
    assert_eq!(r.precision, Some(0.0));
    assert_eq!(r.recall, Some(0.0));
    assert_eq!(r.f1, Some(0.0));
}

#[test]
fn binary_seven_example_confusion_matrix() {
    // tp=2 fp=1 tn=3 fn=1.
    let predicted = [true, true, true, false, false, false, false];
    let gold = [true, true, false, true, false, false, false];
    let r = eval_binary(&binary(&predicted, &gold)).unwrap();
    assert_eq!(r.accuracy, 5.0 / 7.0);
    assert_eq!(r.precision, Some(2.0 / 3.0));
    assert_eq!(r.recall, Some(2.0 / 3.0));
    let p = 2.0 / 3.0;
    assert_eq!(r.f1, Some(2.0 * p * p / (p + p)));
}

#[test]
fn binary_no_positives_anywhere_is_accurate_but_scoreless() {
    let r = eval_binary(&binary(&[false, false], &[false, false])).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(r.precision, Some(0.0));
    assert_eq!(r.recall, Some(0.0));
    assert_eq!(r.f1, Some(0.0));
}

#[test]
fn degenerate_batches_are_rejected() {
    assert!(matches!(
        eval_rank(&EvalBatch::default(), &[1]),
        Err(HarnessError::EmptyBatch)
    ));
    assert!(matches!(
        eval_rank(&ranked(&[&[1]], &[1, 2]), &[1]),
        Err(HarnessError::BatchShape(_))
    ));
    assert!(matches!(
        eval_rank(&ranked(&[&[1]], &[1]), &[0]),
        Err(HarnessError::BatchShape(_))
    ));
    assert!(matches!(
        eval_binary(&BinaryBatch::default()),
        Err(HarnessError::EmptyBatch)
    ));
    assert!(matches!(
        eval_binary(&binary(&[true], &[true, false])),
        Err(HarnessError::BatchShape(_))
    ));
}
