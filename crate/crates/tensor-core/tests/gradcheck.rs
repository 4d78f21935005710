//! Finite-difference oracle checks: for every differentiable op, the
//! analytic gradient from the tape must match central differences on a
//! weighted-sum readout of the op's output.

use rand::rngs::StdRng;
use rand::SeedableRng;
use tensor_core::{Graph, Matrix, Tensor};
use test_support::fd::{central_diff, lcg_values, max_rel_err};

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-6;
const FLOOR: f64 = 1e-9;

/// Check all input gradients of `build` against central differences.
///
/// `build` receives one leaf per requested shape and returns the op output;
/// the loss is `sum(out * W)` for a fixed pseudo-random `W`, which gives every
/// output entry a distinct weight so structural errors cannot cancel.
fn fd_check(shapes: &[(usize, usize)], seed: u64, tol: f64, build: impl Fn(&Graph, &[Tensor]) -> Tensor) {
    let base: Vec<Vec<f64>> = shapes
        .iter()
        .enumerate()
        .map(|(i, &(r, c))| lcg_values(seed + i as u64 * 1000, r * c))
        .collect();

    let run = |values: &[Vec<f64>], want_grads: bool| -> (f64, Vec<Vec<f64>>) {
        let g = Graph::new();
        let leaves: Vec<Tensor> = shapes
            .iter()
            .zip(values)
            .map(|(&(r, c), v)| g.leaf(&Matrix::from_vec(r, c, v.clone()).unwrap(), true))
            .collect();
        let out = build(&g, &leaves);
        let (or, oc) = g.shape(out);
        let w = Matrix::from_vec(or, oc, lcg_values(seed ^ 0xdead, or * oc)).unwrap();
        let loss = g.sum_all(g.mul(out, g.constant(&w)).unwrap());
        let loss_value = g.value(loss).get(0, 0);
        let grads = if want_grads {
            g.backward(loss).unwrap();
            leaves
                .iter()
                .map(|&t| g.grad(t).map(Matrix::into_data).unwrap_or_default())
                .collect()
        } else {
            Vec::new()
        };
        (loss_value, grads)
    };

    let (_, analytic) = run(&base, true);
    for (i, shape) in shapes.iter().enumerate() {
        assert_eq!(
            analytic[i].len(),
            shape.0 * shape.1,
            "input {i}: missing analytic gradient"
        );
        let mut f = |flat: &[f64]| {
            let mut values = base.to_vec();
            values[i] = flat.to_vec();
            run(&values, false).0
        };
        let numeric = central_diff(&mut f, &base[i], EPS);
        let err = max_rel_err(&analytic[i], &numeric, FLOOR);
        assert!(err < tol, "input {i}: max rel err {err:.3e} exceeds {tol:.0e}");
    }
}

#[test]
fn matmul_gradients() {
    fd_check(&[(3, 4), (4, 2)], 1, TOL, |g, t| g.matmul(t[0], t[1]).unwrap());
}

#[test]
fn transpose_gradients() {
    fd_check(&[(3, 4)], 2, TOL, |g, t| g.transpose(t[0]));
}

#[test]
fn add_gradients() {
    fd_check(&[(3, 3), (3, 3)], 3, TOL, |g, t| g.add(t[0], t[1]).unwrap());
}

#[test]
fn add_bias_gradients() {
    fd_check(&[(4, 3), (1, 3)], 4, TOL, |g, t| g.add_bias(t[0], t[1]).unwrap());
}

#[test]
fn mul_gradients() {
    fd_check(&[(3, 3), (3, 3)], 5, TOL, |g, t| g.mul(t[0], t[1]).unwrap());
}

#[test]
fn affine_gradients() {
    fd_check(&[(2, 5)], 6, TOL, |g, t| g.affine(t[0], 2.5, -0.7));
}

#[test]
fn scale_by_gradients() {
    fd_check(&[(3, 2), (1, 1)], 7, TOL, |g, t| g.scale_by(t[0], t[1]).unwrap());
}

#[test]
fn softmax_gradients() {
    fd_check(&[(3, 5)], 8, TOL, |g, t| {
        let scaled = g.affine(t[0], 4.0, 0.0);
        g.softmax_rows(scaled).unwrap()
    });
}

#[test]
fn softmax_with_additive_mask_gradients() {
    // Mask the last two columns the way attention masks padding.
    fd_check(&[(3, 5)], 9, TOL, |g, t| {
        let mut mask = Matrix::zeros(3, 5);
        for i in 0..3 {
            mask.set(i, 3, -1e30);
            mask.set(i, 4, -1e30);
        }
        let masked = g.add(t[0], g.constant(&mask)).unwrap();
        g.softmax_rows(masked).unwrap()
    });
}

#[test]
fn sigmoid_gradients() {
    fd_check(&[(3, 3)], 10, TOL, |g, t| g.sigmoid(g.affine(t[0], 3.0, 0.0)));
}

#[test]
fn gelu_gradients() {
    fd_check(&[(3, 4)], 11, TOL, |g, t| g.gelu(g.affine(t[0], 4.0, 0.0)));
}

#[test]
fn layer_norm_gradients() {
    fd_check(&[(4, 6), (1, 6), (1, 6)], 12, TOL, |g, t| {
        g.layer_norm(t[0], t[1], t[2]).unwrap()
    });
}

#[test]
fn embed_gradients_accumulate_repeats() {
    fd_check(&[(7, 4)], 13, TOL, |g, t| g.embed(t[0], &[0, 3, 3, 6, 1]).unwrap());
}

#[test]
fn concat_rows_gradients() {
    fd_check(&[(2, 3), (1, 3), (3, 3)], 14, TOL, |g, t| g.concat_rows(t).unwrap());
}

#[test]
fn concat_cols_gradients() {
    fd_check(&[(3, 2), (3, 1), (3, 3)], 15, TOL, |g, t| g.concat_cols(t).unwrap());
}

#[test]
fn slice_rows_gradients() {
    fd_check(&[(5, 3)], 16, TOL, |g, t| g.slice_rows(t[0], 1, 4).unwrap());
}

#[test]
fn slice_cols_gradients() {
    fd_check(&[(3, 6)], 17, TOL, |g, t| g.slice_cols(t[0], 2, 5).unwrap());
}

#[test]
fn mean_rows_gradients() {
    fd_check(&[(5, 3)], 18, TOL, |g, t| g.mean_rows(t[0]).unwrap());
}

#[test]
fn sum_all_gradients() {
    fd_check(&[(4, 4)], 19, TOL, |g, t| g.sum_all(t[0]));
}

#[test]
fn cross_entropy_gradients() {
    fd_check(&[(4, 7)], 20, TOL, |g, t| {
        let scaled = g.affine(t[0], 5.0, 0.0);
        g.cross_entropy(scaled, &[2, 0, 6, 3]).unwrap()
    });
}

#[test]
fn binary_cross_entropy_gradients() {
    for label in [0.0, 1.0] {
        fd_check(&[(1, 1)], 21, TOL, move |g, t| {
            let p = g.sigmoid(t[0]);
            g.binary_cross_entropy(p, label).unwrap()
        });
    }
}

#[test]
fn dropout_gradients_with_fixed_mask() {
    fd_check(&[(4, 4)], 22, TOL, |g, t| {
        let mut rng = StdRng::seed_from_u64(99);
        g.dropout(t[0], 0.5, &mut rng).unwrap()
    });
}

/// Gradient through a detached value ignores the detached path entirely.
#[test]
fn detach_blocks_the_chain_rule() {
    let g = Graph::new();
    let x = g.leaf(&Matrix::scalar(1.5), true);
    let doubled = g.affine(x, 2.0, 0.0);
    let frozen = g.detach(doubled);
    let prod = g.mul(x, frozen).unwrap();
    let loss = g.sum_all(prod);
    g.backward(loss).unwrap();
    // loss = x * const(2 * 1.5), so dloss/dx = 3.0, not 2x * 2 = 6.0.
    assert!((g.grad(x).unwrap().get(0, 0) - 3.0).abs() < 1e-12);
}

/// A deep composition touching most ops at once.
#[test]
fn mlp_composition_gradients() {
    fd_check(
        &[(6, 4), (4, 5), (1, 5), (1, 5), (1, 5), (5, 3)],
        23,
        1e-5,
        |g, t| {
            let e = g.embed(t[0], &[5, 0, 2, 2]).unwrap();
            let h = g.add_bias(g.matmul(e, t[1]).unwrap(), t[2]).unwrap();
            let h = g.gelu(h);
            let h = g.layer_norm(h, t[3], t[4]).unwrap();
            let logits = g.matmul(h, t[5]).unwrap();
            g.cross_entropy(g.affine(logits, 3.0, 0.0), &[0, 2, 1, 2]).unwrap()
        },
    );
}
