//! LSTM sequence classifier built around the memory block: input,
//! forget, and output gates decide whether the cell state is updated
//! and exposed at each packet step. The final hidden state feeds a
//! sigmoid output unit; training is full backpropagation through time
//! on binary cross-entropy with gradient-norm clipping.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::features::Matrix;
use crate::windows::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self { hidden: 32, epochs: 10, learning_rate: 0.01, seed: 0 }
    }
}

/// Gate parameters. Input weight matrices are `hidden x input` and
/// recurrent matrices `hidden x hidden`, both row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub input: usize,
    pub hidden: usize,
    pub w_i: Vec<f64>,
    pub w_f: Vec<f64>,
    pub w_o: Vec<f64>,
    pub w_c: Vec<f64>,
    pub u_i: Vec<f64>,
    pub u_f: Vec<f64>,
    pub u_o: Vec<f64>,
    pub u_c: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_c: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LstmModel {
    /// Seeded initialization: uniform +-1/sqrt(hidden) weights, zero
    /// biases except a positive forget-gate bias.
    pub fn init(input: usize, hidden: usize, seed: u64) -> Self {
        Self::init_with_input_scale(input, hidden, seed, None)
    }

    /// Initialization with input weights scaled to the data: when the
    /// RMS cell magnitude of the training rows is known, the input
    /// weight range targets a per-gate pre-activation spread of ~0.5,
    /// which keeps tiny normalized inputs from starving the gates.
    pub fn init_with_input_scale(
        input: usize,
        hidden: usize,
        seed: u64,
        input_rms: Option<f64>,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1.0 / (hidden as f64).sqrt();
        let k_in = match input_rms {
            Some(rms) => 0.5 * 3.0f64.sqrt() / (rms.max(1e-9) * (input as f64).sqrt()),
            None => k,
        };
        let mut mat = |rows: usize, cols: usize, range: f64| -> Vec<f64> {
            (0..rows * cols).map(|_| rng.random_range(-range..range)).collect()
        };
        let w_i = mat(hidden, input, k_in);
        let w_f = mat(hidden, input, k_in);
        let w_o = mat(hidden, input, k_in);
        let w_c = mat(hidden, input, k_in);
        let u_i = mat(hidden, hidden, k);
        let u_f = mat(hidden, hidden, k);
        let u_o = mat(hidden, hidden, k);
        let u_c = mat(hidden, hidden, k);
        let w_out = mat(1, hidden, k);
        Self {
            input,
            hidden,
            w_i,
            w_f,
            w_o,
            w_c,
            u_i,
            u_f,
            u_o,
            u_c,
            b_i: vec![0.0; hidden],
            b_f: vec![1.0; hidden],
            b_o: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
            w_out,
            b_out: 0.0,
        }
    }

    /// All parameters flattened in a fixed order (gate input weights,
    /// recurrent weights, biases, output layer).
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for part in [
            &self.w_i, &self.w_f, &self.w_o, &self.w_c, &self.u_i, &self.u_f, &self.u_o,
            &self.u_c, &self.b_i, &self.b_f, &self.b_o, &self.b_c, &self.w_out,
        ] {
            out.extend_from_slice(part);
        }
        out.push(self.b_out);
        out
    }

    /// Inverse of [`LstmModel::params`].
    pub fn set_params(&mut self, flat: &[f64]) {
        let mut pos = 0;
        let parts: [&mut Vec<f64>; 13] = [
            &mut self.w_i,
            &mut self.w_f,
            &mut self.w_o,
            &mut self.w_c,
            &mut self.u_i,
            &mut self.u_f,
            &mut self.u_o,
            &mut self.u_c,
            &mut self.b_i,
            &mut self.b_f,
            &mut self.b_o,
            &mut self.b_c,
            &mut self.w_out,
        ];
        for part in parts {
            let len = part.len();
            part.copy_from_slice(&flat[pos..pos + len]);
            pos += len;
        }
        self.b_out = flat[pos];
    }
}

/// Per-step activations cached by the forward pass for BPTT.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    pub gates_i: Vec<Vec<f64>>,
    pub gates_f: Vec<Vec<f64>>,
    pub gates_o: Vec<Vec<f64>>,
    pub candidates: Vec<Vec<f64>>,
    pub cells: Vec<Vec<f64>>,
    pub hiddens: Vec<Vec<f64>>,
    pub probability: f64,
}

fn matvec(m: &[f64], rows: usize, cols: usize, v: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let row = &m[r * cols..(r + 1) * cols];
        out[r] += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Run the gate recurrences over a sequence and return the malicious
/// probability plus cached intermediates.
pub fn lstm_forward(model: &LstmModel, sequence: &Matrix) -> Result<(f64, LstmTrace), ModelError> {
    if sequence.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    let h = model.hidden;
    let d = model.input;
    let n = sequence.len();
    let mut trace = LstmTrace {
        gates_i: Vec::with_capacity(n),
        gates_f: Vec::with_capacity(n),
        gates_o: Vec::with_capacity(n),
        candidates: Vec::with_capacity(n),
        cells: Vec::with_capacity(n),
        hiddens: Vec::with_capacity(n),
        probability: 0.0,
    };
    let mut h_prev = vec![0.0f64; h];
    let mut c_prev = vec![0.0f64; h];
    for x in sequence {
        if x.len() != d {
            return Err(ModelError::ShapeMismatch { got: x.len(), want: d });
        }
        let mut z_i = model.b_i.clone();
        let mut z_f = model.b_f.clone();
        let mut z_o = model.b_o.clone();
        let mut z_g = model.b_c.clone();
        matvec(&model.w_i, h, d, x, &mut z_i);
        matvec(&model.w_f, h, d, x, &mut z_f);
        matvec(&model.w_o, h, d, x, &mut z_o);
        matvec(&model.w_c, h, d, x, &mut z_g);
        matvec(&model.u_i, h, h, &h_prev, &mut z_i);
        matvec(&model.u_f, h, h, &h_prev, &mut z_f);
        matvec(&model.u_o, h, h, &h_prev, &mut z_o);
        matvec(&model.u_c, h, h, &h_prev, &mut z_g);

        let gate_i: Vec<f64> = z_i.iter().map(|z| sigmoid(*z)).collect();
        let gate_f: Vec<f64> = z_f.iter().map(|z| sigmoid(*z)).collect();
        let gate_o: Vec<f64> = z_o.iter().map(|z| sigmoid(*z)).collect();
        let cand: Vec<f64> = z_g.iter().map(|z| z.tanh()).collect();
        let cell: Vec<f64> = (0..h)
            .map(|j| gate_f[j] * c_prev[j] + gate_i[j] * cand[j])
            .collect();
        let hidden: Vec<f64> = (0..h).map(|j| gate_o[j] * cell[j].tanh()).collect();

        trace.gates_i.push(gate_i);
        trace.gates_f.push(gate_f);
        trace.gates_o.push(gate_o);
        trace.candidates.push(cand);
        c_prev = cell.clone();
        h_prev = hidden.clone();
        trace.cells.push(cell);
        trace.hiddens.push(hidden);
    }
    let logit = h_prev.iter().zip(&model.w_out).map(|(a, b)| a * b).sum::<f64>() + model.b_out;
    trace.probability = sigmoid(logit);
    Ok((trace.probability, trace))
}

/// Gradient container mirroring [`LstmModel`].
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w_i: Vec<f64>,
    pub w_f: Vec<f64>,
    pub w_o: Vec<f64>,
    pub w_c: Vec<f64>,
    pub u_i: Vec<f64>,
    pub u_f: Vec<f64>,
    pub u_o: Vec<f64>,
    pub u_c: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_c: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl LstmGrads {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_i: vec![0.0; hidden * input],
            w_f: vec![0.0; hidden * input],
            w_o: vec![0.0; hidden * input],
            w_c: vec![0.0; hidden * input],
            u_i: vec![0.0; hidden * hidden],
            u_f: vec![0.0; hidden * hidden],
            u_o: vec![0.0; hidden * hidden],
            u_c: vec![0.0; hidden * hidden],
            b_i: vec![0.0; hidden],
            b_f: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
            w_out: vec![0.0; hidden],
            b_out: 0.0,
        }
    }

    /// Flattened in the same order as [`LstmModel::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for part in [
            &self.w_i, &self.w_f, &self.w_o, &self.w_c, &self.u_i, &self.u_f, &self.u_o,
            &self.u_c, &self.b_i, &self.b_f, &self.b_o, &self.b_c, &self.w_out,
        ] {
            out.extend_from_slice(part);
        }
        out.push(self.b_out);
        out
    }

    fn global_norm(&self) -> f64 {
        self.flatten().iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    fn scale(&mut self, factor: f64) {
        for part in [
            &mut self.w_i, &mut self.w_f, &mut self.w_o, &mut self.w_c, &mut self.u_i,
            &mut self.u_f, &mut self.u_o, &mut self.u_c, &mut self.b_i, &mut self.b_f,
            &mut self.b_o, &mut self.b_c, &mut self.w_out,
        ] {
            for g in part.iter_mut() {
                *g *= factor;
            }
        }
        self.b_out *= factor;
    }
}

const PROB_CLAMP: f64 = 1e-12;

/// Binary cross-entropy of one sequence under the model.
pub fn lstm_loss(model: &LstmModel, sequence: &Matrix, label: Label) -> Result<f64, ModelError> {
    let (p, _) = lstm_forward(model, sequence)?;
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    Ok(match label {
        Label::Malicious => -p.ln(),
        Label::Benign => -(1.0 - p).ln(),
    })
}

/// Loss and exact parameter gradients for one sequence, by full
/// backpropagation through time. Gradients are unclipped here.
pub fn lstm_loss_and_grads(
    model: &LstmModel,
    sequence: &Matrix,
    label: Label,
) -> Result<(f64, LstmGrads), ModelError> {
    let (p_raw, trace) = lstm_forward(model, sequence)?;
    let p = p_raw.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let y = f64::from(label.as_bit());
    let loss = if label == Label::Malicious { -p.ln() } else { -(1.0 - p).ln() };

    let h = model.hidden;
    let d = model.input;
    let n = sequence.len();
    let mut grads = LstmGrads::zeros(d, h);

    // Output layer: dL/dlogit = p - y.
    let dlogit = p - y;
    let h_last = &trace.hiddens[n - 1];
    for j in 0..h {
        grads.w_out[j] += dlogit * h_last[j];
    }
    grads.b_out += dlogit;

    let mut dh: Vec<f64> = model.w_out.iter().map(|w| dlogit * w).collect();
    let mut dc = vec![0.0f64; h];
    for t in (0..n).rev() {
        let gate_i = &trace.gates_i[t];
        let gate_f = &trace.gates_f[t];
        let gate_o = &trace.gates_o[t];
        let cand = &trace.candidates[t];
        let cell = &trace.cells[t];
        let h_prev_vec;
        let c_prev_vec;
        let (h_prev, c_prev): (&[f64], &[f64]) = if t == 0 {
            h_prev_vec = vec![0.0; h];
            c_prev_vec = vec![0.0; h];
            (&h_prev_vec, &c_prev_vec)
        } else {
            (&trace.hiddens[t - 1], &trace.cells[t - 1])
        };

        let mut dz_i = vec![0.0f64; h];
        let mut dz_f = vec![0.0f64; h];
        let mut dz_o = vec![0.0f64; h];
        let mut dz_g = vec![0.0f64; h];
        for j in 0..h {
            let tanh_c = cell[j].tanh();
            let d_o = dh[j] * tanh_c;
            dz_o[j] = d_o * gate_o[j] * (1.0 - gate_o[j]);
            let dc_j = dc[j] + dh[j] * gate_o[j] * (1.0 - tanh_c * tanh_c);
            let d_f = dc_j * c_prev[j];
            dz_f[j] = d_f * gate_f[j] * (1.0 - gate_f[j]);
            let d_i = dc_j * cand[j];
            dz_i[j] = d_i * gate_i[j] * (1.0 - gate_i[j]);
            let d_g = dc_j * gate_i[j];
            dz_g[j] = d_g * (1.0 - cand[j] * cand[j]);
            dc[j] = dc_j * gate_f[j];
        }

        let x = &sequence[t];
        for j in 0..h {
            let (wi, wf, wo, wc) = (
                &mut grads.w_i[j * d..(j + 1) * d],
                &mut grads.w_f[j * d..(j + 1) * d],
                &mut grads.w_o[j * d..(j + 1) * d],
                &mut grads.w_c[j * d..(j + 1) * d],
            );
            for (k, xv) in x.iter().enumerate() {
                wi[k] += dz_i[j] * xv;
                wf[k] += dz_f[j] * xv;
                wo[k] += dz_o[j] * xv;
                wc[k] += dz_g[j] * xv;
            }
            for k in 0..h {
                grads.u_i[j * h + k] += dz_i[j] * h_prev[k];
                grads.u_f[j * h + k] += dz_f[j] * h_prev[k];
                grads.u_o[j * h + k] += dz_o[j] * h_prev[k];
                grads.u_c[j * h + k] += dz_g[j] * h_prev[k];
            }
            grads.b_i[j] += dz_i[j];
            grads.b_f[j] += dz_f[j];
            grads.b_o[j] += dz_o[j];
            grads.b_c[j] += dz_g[j];
        }

        // dh_{t-1} = U^T dz summed over the four gates.
        let mut dh_prev = vec![0.0f64; h];
        for j in 0..h {
            for k in 0..h {
                dh_prev[k] += model.u_i[j * h + k] * dz_i[j]
                    + model.u_f[j * h + k] * dz_f[j]
                    + model.u_o[j * h + k] * dz_o[j]
                    + model.u_c[j * h + k] * dz_g[j];
            }
        }
        dh = dh_prev;
    }

    Ok((loss, grads))
}

const GRAD_CLIP_NORM: f64 = 5.0;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Train on padded sequences: per-sample Adam steps on clipped BPTT
/// gradients of the cross-entropy, with class-balanced bootstrap
/// sampling each epoch (the malicious class is a sliver of the windows,
/// and plain epoch order collapses the model onto the prior).
pub fn lstm_fit(
    sequences: &[Matrix],
    labels: &[Label],
    config: &LstmConfig,
) -> Result<LstmModel, ModelError> {
    if sequences.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if sequences.len() != labels.len() {
        return Err(ModelError::LengthMismatch { x: sequences.len(), y: labels.len() });
    }
    let n_steps = sequences[0].len();
    if n_steps == 0 {
        return Err(ModelError::EmptySequence);
    }
    for s in sequences {
        if s.len() != n_steps {
            return Err(ModelError::RaggedSequences(n_steps, s.len()));
        }
    }
    let input = sequences[0][0].len();

    // Pools for balanced sampling.
    let malicious: Vec<usize> =
        (0..labels.len()).filter(|i| labels[*i] == Label::Malicious).collect();
    let benign: Vec<usize> =
        (0..labels.len()).filter(|i| labels[*i] == Label::Benign).collect();
    if malicious.is_empty() || benign.is_empty() {
        return Err(ModelError::SingleClass);
    }

    // RMS cell magnitude of real (non-padding) rows, for input scaling.
    let mut sum_squares = 0.0f64;
    let mut cells = 0usize;
    for seq in sequences {
        for row in seq {
            if row.iter().any(|v| *v != 0.0) {
                sum_squares += row.iter().map(|v| v * v).sum::<f64>();
                cells += row.len();
            }
        }
    }
    let input_rms = if cells == 0 { 1.0 } else { (sum_squares / cells as f64).sqrt() };
    let mut model =
        LstmModel::init_with_input_scale(input, config.hidden, config.seed, Some(input_rms));

    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive_seed(config.seed, "lstm-order"));
    let dim = model.params().len();
    let mut moment1 = vec![0.0f64; dim];
    let mut moment2 = vec![0.0f64; dim];
    let mut step = 0u64;

    for _ in 0..config.epochs {
        let order: Vec<usize> = (0..sequences.len())
            .map(|_| {
                if rng.random::<bool>() {
                    malicious[rng.random_range(0..malicious.len())]
                } else {
                    benign[rng.random_range(0..benign.len())]
                }
            })
            .collect();
        let mut epoch_loss = 0.0;
        for &i in &order {
            let (loss, mut grads) = lstm_loss_and_grads(&model, &sequences[i], labels[i])?;
            epoch_loss += loss;
            let norm = grads.global_norm();
            if norm > GRAD_CLIP_NORM {
                grads.scale(GRAD_CLIP_NORM / norm);
            }
            step += 1;
            let flat = grads.flatten();
            let mut params = model.params();
            let bias1 = 1.0 - ADAM_BETA1.powi(step as i32);
            let bias2 = 1.0 - ADAM_BETA2.powi(step as i32);
            for j in 0..dim {
                let g = flat[j];
                moment1[j] = ADAM_BETA1 * moment1[j] + (1.0 - ADAM_BETA1) * g;
                moment2[j] = ADAM_BETA2 * moment2[j] + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = moment1[j] / bias1;
                let v_hat = moment2[j] / bias2;
                params[j] -= config.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
            model.set_params(&params);
        }
        if !epoch_loss.is_finite() {
            return Err(ModelError::Diverged("lstm loss"));
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_model(input: usize, hidden: usize) -> LstmModel {
        let mut m = LstmModel::init(input, hidden, 0);
        let flat = vec![0.0; m.params().len()];
        m.set_params(&flat);
        m
    }

    #[test]
    fn zero_parameters_yield_half_probability() {
        let model = zero_model(4, 3);
        let seq: Matrix = vec![vec![1.0, -2.0, 3.0, 0.5]; 6];
        let (p, trace) = lstm_forward(&model, &seq).unwrap();
        assert_eq!(p, 0.5);
        for t in 0..seq.len() {
            assert!(trace.cells[t].iter().all(|c| *c == 0.0));
            assert!(trace.hiddens[t].iter().all(|h| *h == 0.0));
        }
    }

    #[test]
    fn empty_sequence_is_rejected() {
        let model = LstmModel::init(2, 2, 1);
        assert!(matches!(
            lstm_forward(&model, &Vec::new()),
            Err(ModelError::EmptySequence)
        ));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let model = LstmModel::init(3, 2, 1);
        let seq: Matrix = vec![vec![1.0, 2.0]];
        assert!(matches!(
            lstm_forward(&model, &seq),
            Err(ModelError::ShapeMismatch { got: 2, want: 3 })
        ));
    }

    /// Independent scalar recomputation of the recurrences.
    fn oracle_forward(model: &LstmModel, seq: &Matrix) -> f64 {
        let h = model.hidden;
        let d = model.input;
        let mut hs = vec![0.0f64; h];
        let mut cs = vec![0.0f64; h];
        for x in seq {
            let mut next_h = vec![0.0f64; h];
            let mut next_c = vec![0.0f64; h];
            for j in 0..h {
                let dot = |w: &Vec<f64>, b: &Vec<f64>| -> f64 {
                    let mut acc = b[j];
                    for k in 0..d {
                        acc += w[j * d + k] * x[k];
                    }
                    acc
                };
                let rec = |u: &Vec<f64>| -> f64 {
                    let mut acc = 0.0;
                    for k in 0..h {
                        acc += u[j * h + k] * hs[k];
                    }
                    acc
                };
                let i = sigmoid(dot(&model.w_i, &model.b_i) + rec(&model.u_i));
                let f = sigmoid(dot(&model.w_f, &model.b_f) + rec(&model.u_f));
                let o = sigmoid(dot(&model.w_o, &model.b_o) + rec(&model.u_o));
                let g = (dot(&model.w_c, &model.b_c) + rec(&model.u_c)).tanh();
                next_c[j] = f * cs[j] + i * g;
                next_h[j] = o * next_c[j].tanh();
            }
            hs = next_h;
            cs = next_c;
        }
        let mut logit = model.b_out;
        for j in 0..h {
            logit += model.w_out[j] * hs[j];
        }
        sigmoid(logit)
    }

    #[test]
    fn forward_matches_scalar_oracle() {
        let model = LstmModel::init(4, 2, 77);
        let seq: Matrix = vec![
            vec![0.3, -0.8, 1.2, 0.1],
            vec![-0.5, 0.4, 0.0, 2.0],
            vec![1.0, 1.0, -1.0, 0.25],
        ];
        let (p, _) = lstm_forward(&model, &seq).unwrap();
        assert!((p - oracle_forward(&model, &seq)).abs() < 1e-12);
    }

    #[test]
    fn single_timestep_is_one_block_application() {
        let model = LstmModel::init(3, 2, 5);
        let step = vec![vec![0.7, -0.2, 0.9]];
        let (p, trace) = lstm_forward(&model, &step).unwrap();
        assert_eq!(trace.hiddens.len(), 1);
        assert!((p - oracle_forward(&model, &step)).abs() < 1e-12);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut model = LstmModel::init(16, 3, 3);
        // Nudge biases off their defaults so no gradient is trivially zero.
        let mut flat = model.params();
        for (i, v) in flat.iter_mut().enumerate() {
            *v += 0.01 * ((i % 7) as f64 - 3.0) / 7.0;
        }
        model.set_params(&flat);

        let seq: Matrix = (0..4)
            .map(|t| (0..16).map(|k| ((t * 16 + k) as f64 * 0.37).sin()).collect())
            .collect();
        let label = Label::Malicious;
        let (_, grads) = lstm_loss_and_grads(&model, &seq, label).unwrap();
        let analytic = grads.flatten();

        let eps = 1e-5;
        let base = model.params();
        let mut max_rel = 0.0f64;
        for i in 0..base.len() {
            let mut plus = base.clone();
            plus[i] += eps;
            let mut minus = base.clone();
            minus[i] -= eps;
            let mut m_plus = model.clone();
            m_plus.set_params(&plus);
            let mut m_minus = model.clone();
            m_minus.set_params(&minus);
            let numeric = (lstm_loss(&m_plus, &seq, label).unwrap()
                - lstm_loss(&m_minus, &seq, label).unwrap())
                / (2.0 * eps);
            let denom = (analytic[i].abs() + numeric.abs()).max(1e-8);
            max_rel = max_rel.max((analytic[i] - numeric).abs() / denom);
        }
        assert!(max_rel < 1e-4, "max relative gradient error {max_rel}");
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let seqs: Vec<Matrix> = vec![vec![vec![0.5, 0.5]; 3], vec![vec![-0.5, 0.1]; 3]];
        let labels = vec![Label::Benign, Label::Malicious];
        let cfg = LstmConfig { hidden: 4, epochs: 3, learning_rate: 0.0, seed: 9 };
        let trained = lstm_fit(&seqs, &labels, &cfg).unwrap();
        let untrained = lstm_fit(&seqs, &labels, &LstmConfig { epochs: 0, ..cfg }).unwrap();
        assert_eq!(trained.params(), untrained.params());
    }

    #[test]
    fn toy_training_loss_strictly_decreases() {
        let mut seqs: Vec<Matrix> = Vec::new();
        let mut labels = Vec::new();
        for i in 0..5 {
            let v = 0.2 + 0.1 * i as f64;
            seqs.push(vec![vec![v, -v], vec![v, v]]);
            labels.push(Label::Benign);
            seqs.push(vec![vec![-v, v * 2.0], vec![-v, -v]]);
            labels.push(Label::Malicious);
        }
        let mean_loss = |m: &LstmModel| -> f64 {
            seqs.iter()
                .zip(&labels)
                .map(|(s, l)| lstm_loss(m, s, *l).unwrap())
                .sum::<f64>()
                / seqs.len() as f64
        };
        let mut losses = Vec::new();
        for epochs in 0..=5 {
            let cfg = LstmConfig { hidden: 6, epochs, learning_rate: 0.05, seed: 4 };
            let m = lstm_fit(&seqs, &labels, &cfg).unwrap();
            losses.push(mean_loss(&m));
        }
        for pair in losses.windows(2) {
            assert!(pair[1] < pair[0], "loss did not decrease: {losses:?}");
        }
    }

    #[test]
    fn ragged_sequences_are_rejected() {
        let seqs: Vec<Matrix> = vec![vec![vec![0.0]; 2], vec![vec![0.0]; 3]];
        let labels = vec![Label::Benign, Label::Malicious];
        assert!(matches!(
            lstm_fit(&seqs, &labels, &LstmConfig::default()),
            Err(ModelError::RaggedSequences(2, 3))
        ));
    }
}
