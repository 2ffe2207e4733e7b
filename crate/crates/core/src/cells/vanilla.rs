use crate::diffcore::{sigmoid, NodeId, Tape, Tensor};
use crate::error::{Error, Result};
use crate::simgen::SplitMix64;

use super::layout::{gate_init, Layout};

/// Standard LSTM with a linear read-out, used as the neural baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct VanillaLstmParams {
    pub(crate) hidden: usize,
    pub seed: u64,
    pub w_f: Vec<f64>,
    pub w_i: Vec<f64>,
    pub w_c: Vec<f64>,
    pub w_o: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
    pub w_y: Vec<f64>,
    pub b_y: f64,
}

pub(crate) fn vanilla_layout(hidden: usize) -> Layout {
    let g = [hidden, hidden + 1];
    Layout::new(&[
        ("w_f", &g[..]),
        ("w_i", &g),
        ("w_c", &g),
        ("w_o", &g),
        ("b_f", &[hidden]),
        ("b_i", &[hidden]),
        ("b_c", &[hidden]),
        ("b_o", &[hidden]),
        ("w_y", &[hidden]),
        ("b_y", &[1]),
    ])
}

impl VanillaLstmParams {
    /// Same initialization scheme as the σ-LSTM: uniform(-s, s) weights with
    /// `s = 1/sqrt(H+1)`, forget bias 1, other biases 0.
    pub fn init(hidden: usize, seed: u64) -> Result<Self> {
        if hidden < 1 {
            return Err(Error::InvalidArgument("hidden width must be >= 1".into()));
        }
        let mut rng = SplitMix64::new(seed);
        let s = 1.0 / ((hidden + 1) as f64).sqrt();
        let gate = hidden * (hidden + 1);
        Ok(Self {
            hidden,
            seed,
            w_f: gate_init(&mut rng, gate, s),
            w_i: gate_init(&mut rng, gate, s),
            w_c: gate_init(&mut rng, gate, s),
            w_o: gate_init(&mut rng, gate, s),
            b_f: vec![1.0; hidden],
            b_i: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
            w_y: gate_init(&mut rng, hidden, s),
            b_y: 0.0,
        })
    }

    pub fn zeros(hidden: usize) -> Self {
        let n = vanilla_layout(hidden).total();
        Self::from_flat(hidden, 0, &vec![0.0; n]).expect("zero vector has the right length")
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn param_count(hidden: usize) -> usize {
        vanilla_layout(hidden).total()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        [
            &self.w_f, &self.w_i, &self.w_c, &self.w_o, &self.b_f, &self.b_i, &self.b_c, &self.b_o,
            &self.w_y,
        ]
        .iter()
        .flat_map(|a| a.iter().copied())
        .chain(std::iter::once(self.b_y))
        .collect()
    }

    pub fn from_flat(hidden: usize, seed: u64, flat: &[f64]) -> Result<Self> {
        let layout = vanilla_layout(hidden);
        if flat.len() != layout.total() {
            return Err(Error::InvalidArgument(format!(
                "LSTM with H={hidden} has {} parameters, got {}",
                layout.total(),
                flat.len()
            )));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite LSTM parameter".into()));
        }
        let part = |i: usize| flat[layout.range(i)].to_vec();
        Ok(Self {
            hidden,
            seed,
            w_f: part(0),
            w_i: part(1),
            w_c: part(2),
            w_o: part(3),
            b_f: part(4),
            b_i: part(5),
            b_c: part(6),
            b_o: part(7),
            w_y: part(8),
            b_y: flat[layout.range(9)][0],
        })
    }
}

fn affine(w: &[f64], b: &[f64], z: &[f64]) -> Vec<f64> {
    let cols = z.len();
    b.iter()
        .enumerate()
        .map(|(r, &br)| br + w[r * cols..(r + 1) * cols].iter().zip(z).map(|(a, x)| a * x).sum::<f64>())
        .collect()
}

/// Predictions and mean squared error of the baseline over a sequence.
///
/// The LSTM runs from a zero state; prediction `t` is the read-out after
/// consuming `x[t]` and is compared with `targets[t]`.
pub fn vanilla_lstm_forward(
    p: &VanillaLstmParams,
    x: &[f64],
    targets: &[f64],
) -> Result<(Vec<f64>, f64)> {
    if x.len() != targets.len() {
        return Err(Error::InvalidArgument(format!(
            "{} inputs but {} targets",
            x.len(),
            targets.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    let predictions = vanilla_lstm_predict(p, x)?;
    let mse = predictions
        .iter()
        .zip(targets)
        .map(|(y, t)| (y - t) * (y - t))
        .sum::<f64>()
        / x.len() as f64;
    Ok((predictions, mse))
}

/// Read-out after each input, from a zero state.
pub fn vanilla_lstm_predict(p: &VanillaLstmParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite LSTM input".into()));
    }
    let n = p.hidden;
    let mut h = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut out = Vec::with_capacity(x.len());
    for &xt in x {
        let mut z = h.clone();
        z.push(xt);
        let f: Vec<f64> = affine(&p.w_f, &p.b_f, &z).into_iter().map(sigmoid).collect();
        let i: Vec<f64> = affine(&p.w_i, &p.b_i, &z).into_iter().map(sigmoid).collect();
        let g: Vec<f64> = affine(&p.w_c, &p.b_c, &z).into_iter().map(f64::tanh).collect();
        let o: Vec<f64> = affine(&p.w_o, &p.b_o, &z).into_iter().map(sigmoid).collect();
        for j in 0..n {
            c[j] = f[j] * c[j] + i[j] * g[j];
            h[j] = o[j] * c[j].tanh();
        }
        out.push(p.b_y + p.w_y.iter().zip(&h).map(|(w, h)| w * h).sum::<f64>());
    }
    Ok(out)
}

/// Record the baseline over `len` steps; returns (predictions, mse node).
pub fn record_vanilla_lstm(
    tape: &mut Tape,
    hidden: usize,
    len: usize,
    params: NodeId,
    inputs: NodeId,
    targets: NodeId,
) -> (Vec<NodeId>, NodeId) {
    let layout = vanilla_layout(hidden);
    let part = |tape: &mut Tape, i: usize| {
        let r = layout.range(i);
        let s = tape.slice(params, r.start, r.len());
        tape.reshape(s, layout.shape(i))
    };
    let w = [part(tape, 0), part(tape, 1), part(tape, 2), part(tape, 3)];
    let b = [part(tape, 4), part(tape, 5), part(tape, 6), part(tape, 7)];
    let w_y_vec = part(tape, 8);
    let w_y = tape.reshape(w_y_vec, &[1, hidden]);
    let b_y = part(tape, 9);

    let mut h = tape.constant(Tensor::zeros(&[hidden]));
    let mut c = tape.constant(Tensor::zeros(&[hidden]));
    let mut preds = Vec::with_capacity(len);
    let mut sq_errs = Vec::with_capacity(len);
    for t in 0..len {
        let x = tape.element(inputs, t);
        let z = tape.concat(&[h, x]);
        let mut pre = [h; 4];
        for k in 0..4 {
            let wz = tape.matvec(w[k], z);
            pre[k] = tape.add(wz, b[k]);
        }
        let f = tape.sigmoid(pre[0]);
        let i = tape.sigmoid(pre[1]);
        let g = tape.tanh(pre[2]);
        let o = tape.sigmoid(pre[3]);
        let keep = tape.mul(f, c);
        let write = tape.mul(i, g);
        c = tape.add(keep, write);
        let c_act = tape.tanh(c);
        h = tape.mul(o, c_act);
        let wy_h = tape.matvec(w_y, h);
        let y = tape.add(wy_h, b_y);
        preds.push(y);
        let target = tape.slice(targets, t, 1);
        let err = tape.sub(y, target);
        sq_errs.push(tape.square(err));
    }
    let all = tape.concat(&sq_errs);
    let mse = tape.mean(all);
    (preds, mse)
}

/// Reusable recorded baseline pass for windows of fixed length.
#[derive(Clone, Debug)]
pub struct VanillaLstmGraph {
    tape: Tape,
    hidden: usize,
    len: usize,
    params: NodeId,
    inputs: NodeId,
    targets: NodeId,
    mse: NodeId,
}

impl VanillaLstmGraph {
    pub fn new(hidden: usize, len: usize) -> Result<Self> {
        if hidden == 0 || len == 0 {
            return Err(Error::InvalidArgument("graph needs H >= 1 and length >= 1".into()));
        }
        let mut tape = Tape::new();
        let params = tape.leaf("params");
        let inputs = tape.leaf("inputs");
        let targets = tape.leaf("targets");
        let (_, mse) = record_vanilla_lstm(&mut tape, hidden, len, params, inputs, targets);
        Ok(Self {
            tape,
            hidden,
            len,
            params,
            inputs,
            targets,
            mse,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Mean squared error and its gradient with respect to the flat parameters.
    pub fn mse_and_gradient(&self, flat: &[f64], inputs: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
        if inputs.len() != self.len || targets.len() != self.len {
            return Err(Error::InvalidArgument("window length mismatch".into()));
        }
        let mut b = self.tape.bindings();
        b.set(&self.tape, self.params, Tensor::vector(flat.to_vec()))?;
        b.set(&self.tape, self.inputs, Tensor::vector(inputs.to_vec()))?;
        b.set(&self.tape, self.targets, Tensor::vector(targets.to_vec()))?;
        let values = self.tape.forward(&b)?;
        let mse = values.scalar(self.mse).expect("mse is scalar");
        let grads = self.tape.backward(&values, self.mse)?;
        Ok((mse, grads.get(self.params).expect("leaf").data().to_vec()))
    }
}
