use crate::diffcore::{sigmoid, softplus, NodeId, Tape, Tensor};
use crate::error::{Error, Result};
use crate::simgen::SplitMix64;

use super::layout::{gate_init, Layout};

/// Lower bound applied to the output-gate variance and to the volatility
/// estimate, keeping the likelihood finite.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Weights of the σ-LSTM cell with hidden width `H`.
///
/// Gate matrices are `H x (H+1)` row-major and act on `[h_{t-1}, x_t]`
/// (hidden state first, input last). `w_o_raw` is unconstrained; the
/// output-gate variance uses `softplus(w_o_raw)` elementwise, which is
/// always positive.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaLstmParams {
    pub(crate) hidden: usize,
    pub seed: u64,
    pub w_f: Vec<f64>,
    pub w_i: Vec<f64>,
    pub w_c: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub w_o_raw: Vec<f64>,
    pub w_h: Vec<f64>,
}

pub(crate) fn sigma_layout(hidden: usize) -> Layout {
    let gate = hidden * (hidden + 1);
    Layout::new(&[
        ("w_f", &[hidden, hidden + 1][..]),
        ("w_i", &[hidden, hidden + 1]),
        ("w_c", &[hidden, hidden + 1]),
        ("b_f", &[hidden]),
        ("b_i", &[hidden]),
        ("b_c", &[hidden]),
        ("w_o_raw", &[hidden, hidden]),
        ("w_h", &[hidden]),
    ])
    .expect_len(3 * gate + 4 * hidden + hidden * hidden)
}

/// Initialize parameters deterministically from `seed`.
///
/// Gate and readout weights are uniform on `(-s, s)` with
/// `s = 1/sqrt(H+1)`; the forget bias starts at 1, the other biases at 0;
/// `w_o_raw` is set so `softplus(w_o_raw) = 0.1 / H` in every entry.
pub fn init_params(hidden: usize, seed: u64) -> Result<SigmaLstmParams> {
    if hidden < 1 {
        return Err(Error::InvalidArgument("hidden width must be >= 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let s = 1.0 / ((hidden + 1) as f64).sqrt();
    let w_f = gate_init(&mut rng, hidden * (hidden + 1), s);
    let w_i = gate_init(&mut rng, hidden * (hidden + 1), s);
    let w_c = gate_init(&mut rng, hidden * (hidden + 1), s);
    let w_h = gate_init(&mut rng, hidden, s);
    let target = 0.1 / hidden as f64;
    // softplus^{-1}(y) = ln(e^y - 1)
    let raw = target.exp_m1().ln();
    Ok(SigmaLstmParams {
        hidden,
        seed,
        w_f,
        w_i,
        w_c,
        b_f: vec![1.0; hidden],
        b_i: vec![0.0; hidden],
        b_c: vec![0.0; hidden],
        w_o_raw: vec![raw; hidden * hidden],
        w_h,
    })
}

impl SigmaLstmParams {
    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn param_count(hidden: usize) -> usize {
        sigma_layout(hidden).total()
    }

    pub(crate) fn arrays(&self) -> [&Vec<f64>; 8] {
        [
            &self.w_f, &self.w_i, &self.w_c, &self.b_f, &self.b_i, &self.b_c, &self.w_o_raw,
            &self.w_h,
        ]
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.arrays().iter().flat_map(|a| a.iter().copied()).collect()
    }

    pub fn from_flat(hidden: usize, seed: u64, flat: &[f64]) -> Result<Self> {
        let layout = sigma_layout(hidden);
        if flat.len() != layout.total() {
            return Err(Error::InvalidArgument(format!(
                "σ-LSTM with H={hidden} has {} parameters, got {}",
                layout.total(),
                flat.len()
            )));
        }
        let part = |i: usize| flat[layout.range(i)].to_vec();
        let p = Self {
            hidden,
            seed,
            w_f: part(0),
            w_i: part(1),
            w_c: part(2),
            b_f: part(3),
            b_i: part(4),
            b_c: part(5),
            w_o_raw: part(6),
            w_h: part(7),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let layout = sigma_layout(self.hidden);
        for (i, a) in self.arrays().iter().enumerate() {
            if a.len() != layout.range(i).len() {
                return Err(Error::InvalidParams(format!(
                    "{} has {} values, expected {}",
                    layout.name(i),
                    a.len(),
                    layout.range(i).len()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParams(format!("{} is not finite", layout.name(i))));
            }
        }
        Ok(())
    }

    /// Effective output-gate variance map `softplus(w_o_raw)`.
    pub fn variance_map(&self) -> Vec<f64> {
        self.w_o_raw.iter().map(|&w| softplus(w)).collect()
    }
}

/// Recurrent state: short-term `h` and long-term volatility memory `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaLstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl SigmaLstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// One step of the cell.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    /// Predicted return `W_h . h_t`.
    pub r_hat: f64,
    /// Volatility estimate `max(mean(C_t)^2, floor)`.
    pub sigma2: f64,
    /// Sampled output gate.
    pub o: Vec<f64>,
    pub state: SigmaLstmState,
}

/// Standard-normal draws for the output gate, one row of `H` per step.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSequence {
    pub seed: u64,
    hidden: usize,
    eps: Vec<f64>,
}

impl NoiseSequence {
    pub fn generate(seed: u64, steps: usize, hidden: usize) -> Self {
        let mut rng = SplitMix64::new(seed);
        Self {
            seed,
            hidden,
            eps: rng.normals(steps * hidden),
        }
    }

    /// All-zero noise: the output gate closes and the pass is deterministic.
    pub fn zeros(steps: usize, hidden: usize) -> Self {
        Self {
            seed: 0,
            hidden,
            eps: vec![0.0; steps * hidden],
        }
    }

    pub fn from_values(seed: u64, hidden: usize, eps: Vec<f64>) -> Result<Self> {
        if hidden == 0 || eps.len() % hidden != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} noise values do not form rows of {hidden}",
                eps.len()
            )));
        }
        Ok(Self { seed, hidden, eps })
    }

    pub fn steps(&self) -> usize {
        self.eps.len() / self.hidden.max(1)
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.eps[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.eps
    }
}

fn affine(w: &[f64], b: &[f64], z: &[f64]) -> Vec<f64> {
    let cols = z.len();
    b.iter()
        .enumerate()
        .map(|(r, &br)| br + w[r * cols..(r + 1) * cols].iter().zip(z).map(|(a, x)| a * x).sum::<f64>())
        .collect()
}

/// Forget gate, input gate and candidate for previous hidden state `h` and input `x`.
pub(crate) fn gates(p: &SigmaLstmParams, h: &[f64], x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut z = h.to_vec();
    z.push(x);
    let f = affine(&p.w_f, &p.b_f, &z).into_iter().map(sigmoid).collect();
    let i = affine(&p.w_i, &p.b_i, &z).into_iter().map(sigmoid).collect();
    let cand = affine(&p.w_c, &p.b_c, &z).into_iter().map(f64::tanh).collect();
    (f, i, cand)
}

/// Advance the cell by one return.
pub fn sigma_lstm_step(
    p: &SigmaLstmParams,
    s: &SigmaLstmState,
    x: f64,
    eps: &[f64],
) -> Result<StepOutput> {
    let h_dim = p.hidden;
    if !x.is_finite() || eps.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidArgument("non-finite σ-LSTM input".into()));
    }
    if s.h.len() != h_dim || s.c.len() != h_dim || eps.len() != h_dim {
        return Err(Error::InvalidArgument(format!(
            "σ-LSTM step expects state and noise of width {h_dim}"
        )));
    }
    if s.h.iter().chain(&s.c).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite σ-LSTM state".into()));
    }

    let (f, i, cand) = gates(p, &s.h, x);
    let c: Vec<f64> = (0..h_dim).map(|j| f[j] * s.c[j] + i[j] * cand[j]).collect();

    let c_sq: Vec<f64> = c.iter().map(|v| v * v).collect();
    let var_map = p.variance_map();
    let zero = vec![0.0; h_dim];
    let v: Vec<f64> = affine(&var_map, &zero, &c_sq)
        .into_iter()
        .map(|v| v + VARIANCE_FLOOR)
        .collect();
    let o: Vec<f64> = v.iter().zip(eps).map(|(v, e)| v.sqrt() * e).collect();
    let h: Vec<f64> = o.iter().zip(&c).map(|(o, c)| o * c.tanh()).collect();
    let r_hat = p.w_h.iter().zip(&h).map(|(w, h)| w * h).sum();
    let mean_c = c.iter().sum::<f64>() / h_dim as f64;
    let sigma2 = (mean_c * mean_c).max(VARIANCE_FLOOR);

    Ok(StepOutput {
        r_hat,
        sigma2,
        o,
        state: SigmaLstmState { h, c },
    })
}

/// One likelihood term `-ln(sigma2) - r^2 / sigma2`.
pub fn likelihood_term(r: f64, sigma2: f64) -> f64 {
    -sigma2.ln() - r * r / sigma2
}

/// Output of a full pass over a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceOutput {
    pub sigma2: Vec<f64>,
    pub r_hat: Vec<f64>,
    /// Summed likelihood objective (to be maximized).
    pub loss: f64,
}

/// Run the cell from a zero state over `inputs`, scoring step `t`'s
/// volatility against `targets[t]`.
pub fn sigma_lstm_forward_aligned(
    p: &SigmaLstmParams,
    inputs: &[f64],
    targets: &[f64],
    noise: &NoiseSequence,
) -> Result<SequenceOutput> {
    let m = inputs.len();
    if m == 0 {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    if targets.len() != m || noise.steps() != m || noise.hidden() != p.hidden {
        return Err(Error::InvalidArgument(format!(
            "sequence length mismatch: {m} inputs, {} targets, {} noise rows of width {}",
            targets.len(),
            noise.steps(),
            noise.hidden()
        )));
    }
    let mut state = SigmaLstmState::zeros(p.hidden);
    let mut sigma2 = Vec::with_capacity(m);
    let mut r_hat = Vec::with_capacity(m);
    let mut loss = 0.0;
    for t in 0..m {
        let out = sigma_lstm_step(p, &state, inputs[t], noise.row(t))?;
        loss += likelihood_term(targets[t], out.sigma2);
        sigma2.push(out.sigma2);
        r_hat.push(out.r_hat);
        state = out.state;
    }
    Ok(SequenceOutput { sigma2, r_hat, loss })
}

/// In-sample pass with `x_t = r_t`: step `t`'s volatility is scored against
/// the return it has just consumed.
pub fn sigma_lstm_forward(
    p: &SigmaLstmParams,
    r: &[f64],
    noise: &NoiseSequence,
) -> Result<SequenceOutput> {
    sigma_lstm_forward_aligned(p, r, r, noise)
}

/// Nodes recorded for one sequence pass.
#[derive(Clone, Debug)]
pub struct SigmaSequenceNodes {
    pub sigma2: Vec<NodeId>,
    pub r_hat: Vec<NodeId>,
    /// Summed likelihood objective.
    pub objective_sum: NodeId,
    /// Likelihood objective averaged over steps.
    pub objective_mean: NodeId,
}

/// Record a full sequence pass on `tape`.
///
/// `params` holds the flat parameter vector, `inputs` and `targets` are
/// vectors of length `len`, `noise` holds `len * H` draws row by row.
pub fn record_sigma_lstm(
    tape: &mut Tape,
    hidden: usize,
    len: usize,
    params: NodeId,
    inputs: NodeId,
    targets: NodeId,
    noise: NodeId,
) -> SigmaSequenceNodes {
    let layout = sigma_layout(hidden);
    let part = |tape: &mut Tape, i: usize| {
        let r = layout.range(i);
        let s = tape.slice(params, r.start, r.len());
        tape.reshape(s, layout.shape(i))
    };
    let w_f = part(tape, 0);
    let w_i = part(tape, 1);
    let w_c = part(tape, 2);
    let b_f = part(tape, 3);
    let b_i = part(tape, 4);
    let b_c = part(tape, 5);
    let w_o_raw = part(tape, 6);
    let w_h_vec = part(tape, 7);
    let w_h = tape.reshape(w_h_vec, &[1, hidden]);
    let var_map = tape.softplus(w_o_raw);

    let mut h = tape.constant(Tensor::zeros(&[hidden]));
    let mut c = tape.constant(Tensor::zeros(&[hidden]));
    let mut sigma2 = Vec::with_capacity(len);
    let mut r_hat = Vec::with_capacity(len);
    let mut terms = Vec::with_capacity(len);

    for t in 0..len {
        let x = tape.element(inputs, t);
        let z = tape.concat(&[h, x]);

        let gate = |tape: &mut Tape, w: NodeId, b: NodeId| {
            let wz = tape.matvec(w, z);
            tape.add(wz, b)
        };
        let f_pre = gate(tape, w_f, b_f);
        let f = tape.sigmoid(f_pre);
        let i_pre = gate(tape, w_i, b_i);
        let i = tape.sigmoid(i_pre);
        let cand_pre = gate(tape, w_c, b_c);
        let cand = tape.tanh(cand_pre);
        let keep = tape.mul(f, c);
        let write = tape.mul(i, cand);
        c = tape.add(keep, write);

        let c_sq = tape.square(c);
        let v_raw = tape.matvec(var_map, c_sq);
        let v = tape.add_scalar(v_raw, VARIANCE_FLOOR);
        let sd = tape.sqrt(v);
        let eps = tape.slice(noise, t * hidden, hidden);
        let o = tape.mul(sd, eps);
        let c_act = tape.tanh(c);
        h = tape.mul(o, c_act);
        let rh = tape.matvec(w_h, h);
        r_hat.push(rh);

        let mean_c = tape.mean(c);
        let mean_sq = tape.square(mean_c);
        let s2 = tape.clamp_min(mean_sq, VARIANCE_FLOOR);
        sigma2.push(s2);

        let r = tape.element(targets, t);
        let r_sq = tape.square(r);
        let ratio = tape.div(r_sq, s2);
        let log_s2 = tape.ln(s2);
        let neg_log = tape.neg(log_s2);
        terms.push(tape.sub(neg_log, ratio));
    }

    let all = tape.concat(&terms);
    SigmaSequenceNodes {
        sigma2,
        r_hat,
        objective_sum: tape.sum(all),
        objective_mean: tape.mean(all),
    }
}

/// A recorded σ-LSTM pass over windows of fixed length, reusable across
/// windows and parameter values.
#[derive(Clone, Debug)]
pub struct SigmaLstmGraph {
    tape: Tape,
    hidden: usize,
    len: usize,
    params: NodeId,
    inputs: NodeId,
    targets: NodeId,
    noise: NodeId,
    nodes: SigmaSequenceNodes,
}

impl SigmaLstmGraph {
    pub fn new(hidden: usize, len: usize) -> Result<Self> {
        if hidden == 0 || len == 0 {
            return Err(Error::InvalidArgument("graph needs H >= 1 and length >= 1".into()));
        }
        let mut tape = Tape::new();
        let params = tape.leaf("params");
        let inputs = tape.leaf("inputs");
        let targets = tape.leaf("targets");
        let noise = tape.leaf("noise");
        let nodes = record_sigma_lstm(&mut tape, hidden, len, params, inputs, targets, noise);
        Ok(Self {
            tape,
            hidden,
            len,
            params,
            inputs,
            targets,
            noise,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Mean likelihood objective and its gradient with respect to the flat
    /// parameters.
    pub fn objective_and_gradient(
        &self,
        flat_params: &[f64],
        inputs: &[f64],
        targets: &[f64],
        noise: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        if inputs.len() != self.len || targets.len() != self.len || noise.len() != self.len * self.hidden {
            return Err(Error::InvalidArgument(format!(
                "graph of length {} got {} inputs, {} targets, {} noise values",
                self.len,
                inputs.len(),
                targets.len(),
                noise.len()
            )));
        }
        let mut b = self.tape.bindings();
        b.set(&self.tape, self.params, Tensor::vector(flat_params.to_vec()))?;
        b.set(&self.tape, self.inputs, Tensor::vector(inputs.to_vec()))?;
        b.set(&self.tape, self.targets, Tensor::vector(targets.to_vec()))?;
        b.set(&self.tape, self.noise, Tensor::vector(noise.to_vec()))?;
        let values = self.tape.forward(&b)?;
        let objective = values
            .scalar(self.nodes.objective_mean)
            .expect("objective is scalar");
        let grads = self.tape.backward(&values, self.nodes.objective_mean)?;
        let g = grads.get(self.params).expect("params is a leaf").data().to_vec();
        Ok((objective, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::check_gradients;

    fn zero_params(hidden: usize) -> SigmaLstmParams {
        let n = SigmaLstmParams::param_count(hidden);
        SigmaLstmParams::from_flat(hidden, 0, &vec![0.0; n]).unwrap()
    }

    #[test]
    fn init_shapes_and_determinism() {
        let p = init_params(1, 3).unwrap();
        assert_eq!(p.w_f.len(), 2);
        assert_eq!(p.w_i.len(), 2);
        assert_eq!(p.w_c.len(), 2);
        assert_eq!((p.b_f.len(), p.b_i.len(), p.b_c.len()), (1, 1, 1));
        assert_eq!(p.w_o_raw.len(), 1);
        assert_eq!(p.w_h.len(), 1);
        assert_eq!(init_params(4, 11).unwrap(), init_params(4, 11).unwrap());
        assert_ne!(init_params(4, 11).unwrap(), init_params(4, 12).unwrap());
        assert!(init_params(0, 1).is_err());
    }

    #[test]
    fn init_variance_map_level() {
        let p = init_params(8, 7).unwrap();
        for v in p.variance_map() {
            assert!(v > 0.0124 && v < 0.0126, "{v}");
        }
        let s = 1.0 / 9f64.sqrt();
        assert!(p.w_f.iter().chain(&p.w_h).all(|w| w.abs() < s));
        assert!(p.b_f.iter().all(|&b| b == 1.0));
    }

    #[test]
    fn zero_cell() {
        let p = zero_params(3);
        let out = sigma_lstm_step(&p, &SigmaLstmState::zeros(3), 0.7, &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out.state.c, vec![0.0; 3]);
        assert_eq!(out.sigma2, VARIANCE_FLOOR);
        assert_eq!(out.r_hat, 0.0);
    }

    #[test]
    fn half_gates_by_hand() {
        let mut p = zero_params(1);
        p.b_c = vec![2.0];
        let out = sigma_lstm_step(&p, &SigmaLstmState::zeros(1), 0.3, &[0.0]).unwrap();
        assert!((out.state.c[0] - 0.48201379003790845).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_closes_output_gate() {
        let p = init_params(4, 5).unwrap();
        let s = SigmaLstmState {
            h: vec![0.1, -0.2, 0.3, 0.0],
            c: vec![0.5, 0.2, -0.1, 0.4],
        };
        let quiet = sigma_lstm_step(&p, &s, 0.2, &[0.0; 4]).unwrap();
        let noisy = sigma_lstm_step(&p, &s, 0.2, &[1.0, -1.0, 0.5, 2.0]).unwrap();
        assert!(quiet.o.iter().all(|&v| v == 0.0));
        assert!(quiet.state.h.iter().all(|&v| v == 0.0));
        assert_eq!(quiet.r_hat, 0.0);
        assert_eq!(quiet.sigma2, noisy.sigma2);
    }

    #[test]
    fn step_rejects_non_finite() {
        let p = init_params(2, 1).unwrap();
        assert!(sigma_lstm_step(&p, &SigmaLstmState::zeros(2), f64::NAN, &[0.0; 2]).is_err());
        assert!(sigma_lstm_step(&p, &SigmaLstmState::zeros(2), 0.0, &[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn likelihood_arithmetic() {
        assert!((likelihood_term(2.0, 4.0) - (-(4f64.ln()) - 1.0)).abs() < 1e-15);
        assert!((likelihood_term(2.0, 4.0) - (-2.386294361119891)).abs() < 1e-12);
        assert_eq!(likelihood_term(0.0, 1.0), 0.0);
    }

    #[test]
    fn unit_variance_zero_returns_gives_zero_loss() {
        // c saturates at one: forget closed, input open, candidate ~ tanh(40) = 1.
        let mut p = zero_params(2);
        p.b_f = vec![-40.0; 2];
        p.b_i = vec![40.0; 2];
        p.b_c = vec![40.0; 2];
        let out = sigma_lstm_forward(&p, &[0.0; 5], &NoiseSequence::zeros(5, 2)).unwrap();
        assert!(out.sigma2.iter().all(|&s| (s - 1.0).abs() < 1e-15));
        assert!(out.loss.abs() < 1e-14);
    }

    #[test]
    fn forward_validates_lengths() {
        let p = init_params(2, 1).unwrap();
        assert!(sigma_lstm_forward(&p, &[], &NoiseSequence::zeros(0, 2)).is_err());
        assert!(sigma_lstm_forward(&p, &[0.1, 0.2], &NoiseSequence::zeros(3, 2)).is_err());
        assert!(sigma_lstm_forward(&p, &[0.1, 0.2], &NoiseSequence::zeros(2, 3)).is_err());
    }

    #[test]
    fn cell_memory_is_bounded() {
        let p = init_params(4, 2).unwrap();
        let mut g = SplitMix64::new(8);
        let mut s = SigmaLstmState::zeros(4);
        for t in 1..=50 {
            let out = sigma_lstm_step(&p, &s, g.next_normal(), &g.normals(4)).unwrap();
            assert!(out.state.c.iter().all(|c| c.abs() <= t as f64));
            assert!(out.sigma2 >= VARIANCE_FLOOR);
            s = out.state;
        }
    }

    #[test]
    fn taped_pass_matches_direct_pass() {
        let p = init_params(3, 21).unwrap();
        let mut g = SplitMix64::new(4);
        let r: Vec<f64> = (0..12).map(|_| 0.3 * g.next_normal()).collect();
        let noise = NoiseSequence::generate(6, 12, 3);
        let direct = sigma_lstm_forward(&p, &r, &noise).unwrap();
        let graph = SigmaLstmGraph::new(3, 12).unwrap();
        let (mean_obj, grad) = graph
            .objective_and_gradient(&p.to_flat(), &r, &r, noise.as_slice())
            .unwrap();
        assert!((mean_obj - direct.loss / 12.0).abs() < 1e-12 * direct.loss.abs().max(1.0));
        assert_eq!(grad.len(), SigmaLstmParams::param_count(3));
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let hidden = 4;
        let len = 10;
        let p = init_params(hidden, 99).unwrap();
        let mut g = SplitMix64::new(100);
        let r: Vec<f64> = (0..len).map(|_| 0.5 * g.next_normal()).collect();
        let noise = NoiseSequence::generate(101, len, hidden);
        let build = |tape: &mut Tape, params: NodeId| {
            let inputs = tape.constant(Tensor::vector(r.clone()));
            let noise = tape.constant(Tensor::vector(noise.as_slice().to_vec()));
            let nodes = record_sigma_lstm(tape, hidden, len, params, inputs, inputs, noise);
            tape.neg(nodes.objective_mean)
        };
        let err = check_gradients(build, &Tensor::vector(p.to_flat()), 1e-5).unwrap();
        assert!(err < 1e-4, "max rel err {err}");
    }

    #[test]
    fn flat_round_trip() {
        let p = init_params(5, 3).unwrap();
        assert_eq!(SigmaLstmParams::from_flat(5, 3, &p.to_flat()).unwrap(), p);
        assert!(SigmaLstmParams::from_flat(5, 3, &p.to_flat()[1..]).is_err());
    }
}
