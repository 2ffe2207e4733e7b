//! Reverse-mode differentiation over small dense tensors.
//!
//! Graphs are recorded once on a [`Tape`] and evaluated with
//! [`Tape::forward`]; [`Tape::backward`] returns gradients of a scalar node
//! with respect to every leaf. There is no broadcasting: binary elementwise
//! operations need identical shapes, and the only mixed-rank product is
//! matrix times vector.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{check_gradients, MAX_STEP, MIN_STEP};
pub use tape::{Bindings, Gradients, NodeId, Tape, Values};
pub(crate) use tape::{sigmoid, softplus};
pub use tensor::Tensor;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval_unary(build: impl Fn(&mut Tape, NodeId) -> NodeId, x: Tensor) -> (Tensor, Tensor) {
        let mut tape = Tape::new();
        let leaf = tape.leaf("x");
        let out = build(&mut tape, leaf);
        let values = tape.forward(&tape.bind_all(vec![x]).unwrap()).unwrap();
        let y = values.get(out).clone();
        let g = if y.is_scalar() {
            tape.backward(&values, out).unwrap().get(leaf).unwrap().clone()
        } else {
            Tensor::scalar(f64::NAN)
        };
        (y, g)
    }

    #[test]
    fn forward_examples() {
        let (y, _) = eval_unary(|t, x| t.tanh(x), Tensor::scalar(0.0));
        assert_eq!(y.item(), Some(0.0));
        let (y, _) = eval_unary(|t, x| t.mean(x), Tensor::vector(vec![1.0, 2.0, 3.0]));
        assert_eq!(y.item(), Some(2.0));
        let (y, _) = eval_unary(|t, x| t.sigmoid(x), Tensor::scalar(0.0));
        assert_eq!(y.item(), Some(0.5));
    }

    #[test]
    fn backward_examples() {
        let (_, g) = eval_unary(|t, x| t.square(x), Tensor::scalar(3.0));
        assert_eq!(g.item(), Some(6.0));
        let (_, g) = eval_unary(|t, x| t.tanh(x), Tensor::scalar(0.0));
        assert_eq!(g.item(), Some(1.0));
        let (_, g) = eval_unary(|t, x| t.mean(x), Tensor::vector(vec![0.3, -1.0, 2.0, 5.0]));
        assert_eq!(g.data(), &[0.25; 4]);
    }

    #[test]
    fn shape_mismatch_names_node() {
        let mut tape = Tape::new();
        let a = tape.leaf("a");
        let b = tape.leaf("b");
        let c = tape.add(a, b);
        let binds = tape
            .bind_all(vec![Tensor::vector(vec![1.0, 2.0]), Tensor::vector(vec![1.0])])
            .unwrap();
        match tape.forward(&binds) {
            Err(crate::Error::Shape { node, op, .. }) => {
                assert_eq!(node, c.index());
                assert_eq!(op, "add");
            }
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn matvec_shape_checked() {
        let mut tape = Tape::new();
        let m = tape.leaf("m");
        let x = tape.leaf("x");
        tape.matvec(m, x);
        let binds = tape
            .bind_all(vec![
                Tensor::matrix(2, 3, vec![0.0; 6]).unwrap(),
                Tensor::vector(vec![1.0, 2.0]),
            ])
            .unwrap();
        assert!(matches!(tape.forward(&binds), Err(crate::Error::Shape { .. })));
    }

    #[test]
    fn non_finite_is_overflow() {
        let mut tape = Tape::new();
        let x = tape.leaf("x");
        let y = tape.ln(x);
        let binds = tape.bind_all(vec![Tensor::scalar(0.0)]).unwrap();
        match tape.forward(&binds) {
            Err(crate::Error::Overflow { node, op }) => {
                assert_eq!(node, y.index());
                assert_eq!(op, "ln");
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn unbound_leaf_is_error() {
        let mut tape = Tape::new();
        let x = tape.leaf("x");
        tape.square(x);
        assert!(tape.forward(&tape.bindings()).is_err());
    }

    #[test]
    fn backward_requires_scalar_seed() {
        let mut tape = Tape::new();
        let x = tape.leaf("x");
        let y = tape.square(x);
        let values = tape
            .forward(&tape.bind_all(vec![Tensor::vector(vec![1.0, 2.0])]).unwrap())
            .unwrap();
        assert!(tape.backward(&values, y).is_err());
    }

    #[test]
    fn unused_leaf_gets_zero_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf("x");
        let unused = tape.leaf("unused");
        let y = tape.sum(x);
        let values = tape
            .forward(
                &tape
                    .bind_all(vec![Tensor::vector(vec![1.0, 2.0]), Tensor::vector(vec![7.0; 3])])
                    .unwrap(),
            )
            .unwrap();
        let g = tape.backward(&values, y).unwrap();
        assert_eq!(g.get(unused).unwrap().data(), &[0.0; 3]);
    }

    #[test]
    fn quadratic_form_gradient_is_exact() {
        let a = Tensor::matrix(3, 3, vec![2.0, 0.5, -1.0, 0.5, 3.0, 0.2, -1.0, 0.2, 1.5]).unwrap();
        let build = |t: &mut Tape, x: NodeId| {
            let m = t.constant(a.clone());
            let ax = t.matvec(m, x);
            let xax = t.mul(x, ax);
            t.sum(xax)
        };
        let err = check_gradients(build, &Tensor::vector(vec![0.7, -1.3, 2.1]), 1e-5).unwrap();
        assert!(err < 1e-8, "max rel err {err}");
    }

    #[test]
    fn gradient_check_rejects_bad_step() {
        let build = |t: &mut Tape, x: NodeId| t.sum(x);
        let p = Tensor::vector(vec![1.0]);
        assert!(check_gradients(build, &p, 1e-2).is_err());
        assert!(check_gradients(build, &p, 1e-9).is_err());
        assert!(check_gradients(build, &p, 0.0).is_err());
    }

    #[test]
    fn forward_is_bitwise_deterministic() {
        let mut tape = Tape::new();
        let x = tape.leaf("x");
        let a = tape.tanh(x);
        let b = tape.softplus(a);
        let c = tape.mul(a, b);
        let out = tape.mean(c);
        let binds = tape.bind_all(vec![Tensor::vector(vec![0.1, -2.0, 3.3])]).unwrap();
        let v1 = tape.forward(&binds).unwrap();
        let v2 = tape.forward(&binds).unwrap();
        assert_eq!(v1.get(out).data()[0].to_bits(), v2.get(out).data()[0].to_bits());
    }

    /// Every unary kind applied to a vector and reduced by a sum.
    fn unary_kinds() -> Vec<(&'static str, fn(&mut Tape, NodeId) -> NodeId)> {
        vec![
            ("sigmoid", |t, x| t.sigmoid(x)),
            ("tanh", |t, x| t.tanh(x)),
            ("softplus", |t, x| t.softplus(x)),
            ("square", |t, x| t.square(x)),
            ("sqrt", |t, x| {
                let s = t.square(x);
                let s = t.add_scalar(s, 0.5);
                t.sqrt(s)
            }),
            ("ln", |t, x| {
                let s = t.square(x);
                let s = t.add_scalar(s, 0.5);
                t.ln(s)
            }),
            ("scale", |t, x| t.scale(x, -1.7)),
            ("clamp_min", |t, x| {
                let s = t.square(x);
                t.clamp_min(s, 0.25)
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn unary_gradients_match_finite_differences(
            xs in proptest::collection::vec(-3.0f64..3.0, 1..6),
            weights in proptest::collection::vec(-3.0f64..3.0, 6),
        ) {
            // Keep clamp_min away from its kink.
            prop_assume!(xs.iter().all(|x| (x * x - 0.25).abs() > 1e-3));
            let w = Tensor::vector(weights[..xs.len()].to_vec());
            for (name, op) in unary_kinds() {
                let w = w.clone();
                let build = move |t: &mut Tape, x: NodeId| {
                    let y = op(t, x);
                    let wc = t.constant(w.clone());
                    let yw = t.mul(y, wc);
                    t.sum(yw)
                };
                let err = check_gradients(build, &Tensor::vector(xs.clone()), 1e-5).unwrap();
                prop_assert!(err < 1e-4, "{name}: rel err {err}");
            }
        }

        #[test]
        fn binary_gradients_match_finite_differences(
            xs in proptest::collection::vec(-3.0f64..3.0, 8),
            m in proptest::collection::vec(-3.0f64..3.0, 12),
        ) {
            let mat = Tensor::matrix(3, 4, m).unwrap();
            // x packs two length-4 vectors a and b.
            let build = move |t: &mut Tape, x: NodeId| {
                let a = t.slice(x, 0, 4);
                let b = t.slice(x, 4, 4);
                let sum = t.add(a, b);
                let diff = t.sub(a, b);
                let prod = t.mul(sum, diff);
                let denom_sq = t.square(b);
                let denom = t.add_scalar(denom_sq, 1.0);
                let quot = t.div(prod, denom);
                let mc = t.constant(mat.clone());
                let mv = t.matvec(mc, quot);
                let a0 = t.element(a, 0);
                let cat = t.concat(&[mv, a0]);
                let mean = t.mean(cat);
                let reshaped = t.reshape(x, &[2, 4]);
                let total = t.sum(reshaped);
                let tot_scaled = t.scale(total, 0.1);
                t.add(mean, tot_scaled)
            };
            let err = check_gradients(build, &Tensor::vector(xs), 1e-5).unwrap();
            prop_assert!(err < 1e-4, "rel err {err}");
        }

        #[test]
        fn backward_is_linear_over_sums(xs in proptest::collection::vec(-3.0f64..3.0, 1..6)) {
            let mut tape = Tape::new();
            let x = tape.leaf("x");
            let t1 = tape.tanh(x);
            let f = tape.sum(t1);
            let sq = tape.square(x);
            let g = tape.mean(sq);
            let fg = tape.add(f, g);
            let values = tape.forward(&tape.bind_all(vec![Tensor::vector(xs.clone())]).unwrap()).unwrap();
            let df = tape.backward(&values, f).unwrap();
            let dg = tape.backward(&values, g).unwrap();
            let dfg = tape.backward(&values, fg).unwrap();
            for i in 0..xs.len() {
                let lhs = dfg.get(x).unwrap().data()[i];
                let rhs = df.get(x).unwrap().data()[i] + dg.get(x).unwrap().data()[i];
                prop_assert!((lhs - rhs).abs() <= 1e-12);
            }
        }
    }
}
