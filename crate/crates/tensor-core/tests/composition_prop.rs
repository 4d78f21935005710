//! Property test: random small op chains keep analytic and numeric
//! gradients in agreement.

use proptest::prelude::*;
use tensor_core::{Graph, Matrix, Tensor};
use test_support::fd::{central_diff, lcg_values, max_rel_err};

#[derive(Debug, Clone, Copy)]
enum Step {
    Gelu,
    Sigmoid,
    Softmax,
    Transpose,
    MeanRows,
    AffineUp,
}

fn apply(g: &Graph, x: Tensor, step: Step) -> Tensor {
    match step {
        Step::Gelu => g.gelu(x),
        Step::Sigmoid => g.sigmoid(x),
        Step::Softmax => g.softmax_rows(g.affine(x, 3.0, 0.0)).unwrap(),
        Step::Transpose => g.transpose(x),
        Step::MeanRows => g.mean_rows(x).unwrap(),
        Step::AffineUp => g.affine(x, 1.7, 0.3),
    }
}

fn step_strategy() -> impl Strategy<Value = Step> {
    prop_oneof![
        Just(Step::Gelu),
        Just(Step::Sigmoid),
        Just(Step::Softmax),
        Just(Step::Transpose),
        Just(Step::MeanRows),
        Just(Step::AffineUp),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_chains_pass_gradcheck(
        rows in 1usize..4,
        cols in 1usize..4,
        seed in 0u64..1000,
        steps in prop::collection::vec(step_strategy(), 1..4),
    ) {
        let base = lcg_values(seed, rows * cols);
        let run = |values: &[f64], want_grad: bool| -> (f64, Vec<f64>) {
            let g = Graph::new();
            let leaf = g.leaf(&Matrix::from_vec(rows, cols, values.to_vec()).unwrap(), true);
            let mut x = leaf;
            for &s in &steps {
                x = apply(&g, x, s);
            }
            let (or, oc) = g.shape(x);
            let w = Matrix::from_vec(or, oc, lcg_values(seed ^ 77, or * oc)).unwrap();
            let loss = g.sum_all(g.mul(x, g.constant(&w)).unwrap());
            let value = g.value(loss).get(0, 0);
            let grad = if want_grad {
                g.backward(loss).unwrap();
                g.grad(leaf).map(Matrix::into_data).unwrap_or_default()
            } else {
                Vec::new()
            };
            (value, grad)
        };

        let (_, analytic) = run(&base, true);
        let mut f = |v: &[f64]| run(v, false).0;
        let numeric = central_diff(&mut f, &base, 1e-5);
        let err = max_rel_err(&analytic, &numeric, 1e-8);
        prop_assert!(err < 1e-4, "max rel err {err:.3e} for steps {steps:?}");
    }
}
