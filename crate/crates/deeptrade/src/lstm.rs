//! Deep LSTM with a stacked-hidden dense head, trained by backpropagation
//! through time with ADAM. Implemented from first principles on `ndarray`.
//!
//! Cell equations per time step (row-vector convention, batch size 1):
//!
//! ```text
//! i_t = sigmoid(u_t W_ix + h_{t-1} W_ih + b_i)        input gate
//! o_t = sigmoid(u_t W_ox + h_{t-1} W_oh + b_o)        output gate
//! f_t = sigmoid(u_t W_fx + h_{t-1} W_fh + b_f)        forget gate
//! g_t = tanh   (u_t W_gx + h_{t-1} W_gh + b_g)        candidate
//! c_t = f_t * c_{t-1} + i_t * g_t
//! h_t = tanh(c_t) * o_t
//! ```
//!
//! where `u_t` is the window row for the first layer and the previous
//! layer's hidden state above it. The dense head collects the last layer's
//! hidden states over the whole window into a T×H matrix and maps it to
//! T×O outputs with a single H×O weight matrix plus one bias per sequence
//! position; output row `k` is the prediction for the day after input row
//! `k`, so the window's next-day prediction is the last row.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::WindowSample;

/// Hyperparameters and training knobs. `seed` drives initialization and
/// dropout; everything downstream derives from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub num_layers: usize,
    pub hidden_size: usize,
    /// Rolling window length T, in trading days.
    pub window: usize,
    /// Input-dropout probability, applied per LSTM layer during training.
    pub dropout: f64,
    pub input_size: usize,
    pub output_size: usize,
    /// Only 1 is supported; the rolling protocol trains on single windows.
    pub batch_size: usize,
    /// ADAM iterations per training window.
    pub iterations: usize,
    pub seed: u64,
    pub base_learning_rate: f64,
    /// Multiplicative decay applied as `decay^(step/decay_steps)`.
    pub learning_rate_decay: f64,
    pub learning_rate_decay_steps: usize,
    /// One shared output bias instead of one per sequence position.
    pub shared_dense_bias: bool,
    /// Divide window prices by the last known close before training.
    pub normalize_window: bool,
    /// Carry weights across rolling days instead of re-initializing.
    pub warm_start: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            num_layers: 2,
            hidden_size: 32,
            window: 22,
            dropout: 0.5,
            input_size: crate::market_data::FEATURE_COUNT,
            output_size: 1,
            batch_size: 1,
            iterations: 1600,
            seed: 42,
            base_learning_rate: 0.01,
            learning_rate_decay: 0.96,
            learning_rate_decay_steps: 100,
            shared_dense_bias: false,
            normalize_window: true,
            warm_start: true,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0
            || self.hidden_size == 0
            || self.window == 0
            || self.input_size == 0
            || self.output_size == 0
        {
            return Err(Error::Config("network sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        if self.batch_size != 1 {
            return Err(Error::Config(
                "only batch size 1 is supported; the rolling protocol trains on one window per day"
                    .into(),
            ));
        }
        if self.base_learning_rate <= 0.0
            || self.learning_rate_decay <= 0.0
            || self.learning_rate_decay_steps == 0
        {
            return Err(Error::Config("invalid learning-rate schedule".into()));
        }
        Ok(())
    }

    /// Trainable parameter count implied by the config.
    pub fn param_count(&self) -> usize {
        let mut total = 0;
        for layer in 0..self.num_layers {
            let d = if layer == 0 { self.input_size } else { self.hidden_size };
            total +=
                4 * (d * self.hidden_size + self.hidden_size * self.hidden_size + self.hidden_size);
        }
        let bias_rows = if self.shared_dense_bias {
            1
        } else {
            self.batch_size * self.window
        };
        total + self.hidden_size * self.output_size + bias_rows * self.output_size
    }

    /// Stable content hash of the hyperparameters.
    pub fn fingerprint(&self) -> String {
        let payload = serde_json::to_string(self).expect("config serializes");
        crate::util::fingerprint(&payload)
    }
}

/// Weights and biases of a single LSTM layer. `w_*x` matrices map the layer
/// input (D×H), `w_*h` the recurrent state (H×H).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayerParams {
    pub w_ix: Array2<f64>,
    pub w_ox: Array2<f64>,
    pub w_fx: Array2<f64>,
    pub w_gx: Array2<f64>,
    pub w_ih: Array2<f64>,
    pub w_oh: Array2<f64>,
    pub w_fh: Array2<f64>,
    pub w_gh: Array2<f64>,
    pub b_i: Array1<f64>,
    pub b_o: Array1<f64>,
    pub b_f: Array1<f64>,
    pub b_g: Array1<f64>,
}

/// Dense head: H×O weights plus a T×O bias (one row per sequence position)
/// or a 1×O shared bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    pub w_yh: Array2<f64>,
    pub b_y: Array2<f64>,
}

/// All trainable parameters plus the config that shapes them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub config: NetworkConfig,
    pub layers: Vec<LstmLayerParams>,
    pub dense: DenseParams,
}

impl NetworkParams {
    /// Same shapes, all zeros; used for gradients.
    pub fn zeros_like(&self) -> NetworkParams {
        let mut out = self.clone();
        for slice in out.flat_mut() {
            slice.fill(0.0);
        }
        out
    }

    /// Flat views over every tensor in a fixed enumeration order
    /// (per layer: w_ix, w_ox, w_fx, w_gx, w_ih, w_oh, w_fh, w_gh,
    /// b_i, b_o, b_f, b_g; then dense w_yh, b_y).
    pub fn flat(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.w_ix.as_slice().expect("standard layout"));
            out.push(l.w_ox.as_slice().expect("standard layout"));
            out.push(l.w_fx.as_slice().expect("standard layout"));
            out.push(l.w_gx.as_slice().expect("standard layout"));
            out.push(l.w_ih.as_slice().expect("standard layout"));
            out.push(l.w_oh.as_slice().expect("standard layout"));
            out.push(l.w_fh.as_slice().expect("standard layout"));
            out.push(l.w_gh.as_slice().expect("standard layout"));
            out.push(l.b_i.as_slice().expect("standard layout"));
            out.push(l.b_o.as_slice().expect("standard layout"));
            out.push(l.b_f.as_slice().expect("standard layout"));
            out.push(l.b_g.as_slice().expect("standard layout"));
        }
        out.push(self.dense.w_yh.as_slice().expect("standard layout"));
        out.push(self.dense.b_y.as_slice().expect("standard layout"));
        out
    }

    pub fn flat_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(l.w_ix.as_slice_mut().expect("standard layout"));
            out.push(l.w_ox.as_slice_mut().expect("standard layout"));
            out.push(l.w_fx.as_slice_mut().expect("standard layout"));
            out.push(l.w_gx.as_slice_mut().expect("standard layout"));
            out.push(l.w_ih.as_slice_mut().expect("standard layout"));
            out.push(l.w_oh.as_slice_mut().expect("standard layout"));
            out.push(l.w_fh.as_slice_mut().expect("standard layout"));
            out.push(l.w_gh.as_slice_mut().expect("standard layout"));
            out.push(l.b_i.as_slice_mut().expect("standard layout"));
            out.push(l.b_o.as_slice_mut().expect("standard layout"));
            out.push(l.b_f.as_slice_mut().expect("standard layout"));
            out.push(l.b_g.as_slice_mut().expect("standard layout"));
        }
        out.push(self.dense.w_yh.as_slice_mut().expect("standard layout"));
        out.push(self.dense.b_y.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn param_count(&self) -> usize {
        self.flat().iter().map(|s| s.len()).sum()
    }
}

fn glorot_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| (2.0 * rng.random::<f64>() - 1.0) * bound)
        .collect();
    Array2::from_shape_vec((rows, cols), data).expect("shape matches data")
}

/// Glorot-Xavier uniform initialization: weights uniform on
/// ±sqrt(6/(fan_in+fan_out)), biases zero. Deterministic given the seed.
pub fn init_glorot(config: &NetworkConfig, seed: u64) -> Result<NetworkParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = config.hidden_size;
    let layers = (0..config.num_layers)
        .map(|layer| {
            let d = if layer == 0 { config.input_size } else { h };
            LstmLayerParams {
                w_ix: glorot_matrix(&mut rng, d, h),
                w_ox: glorot_matrix(&mut rng, d, h),
                w_fx: glorot_matrix(&mut rng, d, h),
                w_gx: glorot_matrix(&mut rng, d, h),
                w_ih: glorot_matrix(&mut rng, h, h),
                w_oh: glorot_matrix(&mut rng, h, h),
                w_fh: glorot_matrix(&mut rng, h, h),
                w_gh: glorot_matrix(&mut rng, h, h),
                b_i: Array1::zeros(h),
                b_o: Array1::zeros(h),
                b_f: Array1::zeros(h),
                b_g: Array1::zeros(h),
            }
        })
        .collect();
    let bias_rows = if config.shared_dense_bias { 1 } else { config.window };
    let dense = DenseParams {
        w_yh: glorot_matrix(&mut rng, h, config.output_size),
        b_y: Array2::zeros((bias_rows, config.output_size)),
    };
    Ok(NetworkParams {
        config: config.clone(),
        layers,
        dense,
    })
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Everything the backward pass needs, stored per layer as T-row matrices.
pub struct ForwardCache {
    /// Layer inputs as actually fed to the gates (dropout already applied).
    inputs: Vec<Array2<f64>>,
    gate_i: Vec<Array2<f64>>,
    gate_o: Vec<Array2<f64>>,
    gate_f: Vec<Array2<f64>>,
    cand: Vec<Array2<f64>>,
    cell: Vec<Array2<f64>>,
    cell_tanh: Vec<Array2<f64>>,
    hidden: Vec<Array2<f64>>,
    /// Scaled dropout masks (entries 0 or 1/(1-p)) per layer, when training.
    masks: Vec<Option<Array1<f64>>>,
}

/// Result of a forward pass over one window.
pub struct Forward {
    /// T×O outputs; row k is the prediction for the day after input row k.
    pub outputs: Array2<f64>,
    /// T×H hidden states of the last layer, in time order.
    pub stacked_hidden: Array2<f64>,
    pub cache: ForwardCache,
}

/// Runs the network over a T×I window. Pass a RNG to enable training-mode
/// dropout; inference is a pure function of (params, inputs).
pub fn forward(
    params: &NetworkParams,
    inputs: ArrayView2<f64>,
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<Forward> {
    let cfg = &params.config;
    let t_len = inputs.nrows();
    if inputs.ncols() != cfg.input_size {
        return Err(Error::ShapeMismatch(format!(
            "window has {} features, config expects {}",
            inputs.ncols(),
            cfg.input_size
        )));
    }
    if !cfg.shared_dense_bias && t_len != cfg.window {
        return Err(Error::ShapeMismatch(format!(
            "window length {} does not match per-position bias rows {}",
            t_len, cfg.window
        )));
    }
    let h_size = cfg.hidden_size;

    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(cfg.num_layers),
        gate_i: Vec::with_capacity(cfg.num_layers),
        gate_o: Vec::with_capacity(cfg.num_layers),
        gate_f: Vec::with_capacity(cfg.num_layers),
        cand: Vec::with_capacity(cfg.num_layers),
        cell: Vec::with_capacity(cfg.num_layers),
        cell_tanh: Vec::with_capacity(cfg.num_layers),
        hidden: Vec::with_capacity(cfg.num_layers),
        masks: Vec::with_capacity(cfg.num_layers),
    };

    let mut layer_input = inputs.to_owned();
    for layer in &params.layers {
        let d = layer_input.ncols();

        // Inverted input dropout: one fresh mask per layer per call.
        let mask = match dropout_rng.as_deref_mut() {
            Some(rng) if cfg.dropout > 0.0 => {
                let keep = 1.0 - cfg.dropout;
                let m: Vec<f64> = (0..d)
                    .map(|_| if rng.random::<f64>() < cfg.dropout { 0.0 } else { 1.0 / keep })
                    .collect();
                Some(Array1::from_vec(m))
            }
            _ => None,
        };
        let dropped = match &mask {
            Some(m) => &layer_input * &m.view().insert_axis(Axis(0)),
            None => layer_input.clone(),
        };

        let mut gate_i = Array2::zeros((t_len, h_size));
        let mut gate_o = Array2::zeros((t_len, h_size));
        let mut gate_f = Array2::zeros((t_len, h_size));
        let mut cand = Array2::zeros((t_len, h_size));
        let mut cell = Array2::zeros((t_len, h_size));
        let mut cell_tanh = Array2::zeros((t_len, h_size));
        let mut hidden = Array2::zeros((t_len, h_size));

        // States start at zero for every window.
        let mut h_prev: Array1<f64> = Array1::zeros(h_size);
        let mut c_prev: Array1<f64> = Array1::zeros(h_size);
        for t in 0..t_len {
            let u = dropped.row(t);
            let a_i = u.dot(&layer.w_ix) + h_prev.dot(&layer.w_ih) + &layer.b_i;
            let a_o = u.dot(&layer.w_ox) + h_prev.dot(&layer.w_oh) + &layer.b_o;
            let a_f = u.dot(&layer.w_fx) + h_prev.dot(&layer.w_fh) + &layer.b_f;
            let a_g = u.dot(&layer.w_gx) + h_prev.dot(&layer.w_gh) + &layer.b_g;

            let i_t = a_i.mapv(sigmoid);
            let o_t = a_o.mapv(sigmoid);
            let f_t = a_f.mapv(sigmoid);
            let g_t = a_g.mapv(f64::tanh);
            let c_t = &f_t * &c_prev + &i_t * &g_t;
            if !c_t.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("cell state at step {t}")));
            }
            let tanh_c = c_t.mapv(f64::tanh);
            let h_t = &tanh_c * &o_t;

            gate_i.row_mut(t).assign(&i_t);
            gate_o.row_mut(t).assign(&o_t);
            gate_f.row_mut(t).assign(&f_t);
            cand.row_mut(t).assign(&g_t);
            cell.row_mut(t).assign(&c_t);
            cell_tanh.row_mut(t).assign(&tanh_c);
            hidden.row_mut(t).assign(&h_t);

            h_prev = h_t;
            c_prev = c_t;
        }

        layer_input = hidden.clone();
        cache.inputs.push(dropped);
        cache.gate_i.push(gate_i);
        cache.gate_o.push(gate_o);
        cache.gate_f.push(gate_f);
        cache.cand.push(cand);
        cache.cell.push(cell);
        cache.cell_tanh.push(cell_tanh);
        cache.hidden.push(hidden);
        cache.masks.push(mask);
    }

    let stacked_hidden = cache.hidden.last().expect("at least one layer").clone();
    let mut outputs = stacked_hidden.dot(&params.dense.w_yh);
    if params.config.shared_dense_bias {
        outputs += &params.dense.b_y.row(0);
    } else {
        outputs += &params.dense.b_y;
    }
    if !outputs.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("network outputs".into()));
    }

    Ok(Forward {
        outputs,
        stacked_hidden,
        cache,
    })
}

/// Mean of squared elementwise differences over all positions.
pub fn mse_loss(outputs: &Array2<f64>, targets: &Array2<f64>) -> Result<f64> {
    if outputs.dim() != targets.dim() {
        return Err(Error::ShapeMismatch(format!(
            "outputs {:?} vs targets {:?}",
            outputs.dim(),
            targets.dim()
        )));
    }
    let n = outputs.len() as f64;
    Ok(outputs
        .iter()
        .zip(targets.iter())
        .map(|(o, t)| (o - t) * (o - t))
        .sum::<f64>()
        / n)
}

fn add_outer(acc: &mut Array2<f64>, a: ArrayView1<f64>, b: ArrayView1<f64>) {
    for (j, &aj) in a.iter().enumerate() {
        let mut row = acc.row_mut(j);
        for (k, &bk) in b.iter().enumerate() {
            row[k] += aj * bk;
        }
    }
}

/// Exact analytic gradients of `mse_loss` with respect to every parameter,
/// including paths through the recurrent connections and through every
/// hidden state the dense head consumes.
pub fn backward(
    params: &NetworkParams,
    fwd: &Forward,
    targets: &Array2<f64>,
) -> Result<NetworkParams> {
    let cfg = &params.config;
    if targets.dim() != fwd.outputs.dim() {
        return Err(Error::ShapeMismatch(format!(
            "outputs {:?} vs targets {:?}",
            fwd.outputs.dim(),
            targets.dim()
        )));
    }
    let t_len = fwd.outputs.nrows();
    let h_size = cfg.hidden_size;
    let mut grads = params.zeros_like();

    // d(loss)/d(outputs) for mean-squared loss over all positions.
    let scale = 2.0 / fwd.outputs.len() as f64;
    let d_out = (&fwd.outputs - targets) * scale;

    // Dense head.
    grads.dense.w_yh = fwd.stacked_hidden.t().dot(&d_out);
    if cfg.shared_dense_bias {
        grads.dense.b_y.row_mut(0).assign(&d_out.sum_axis(Axis(0)));
    } else {
        grads.dense.b_y.assign(&d_out);
    }
    // Gradient flowing into the last layer's hidden states from the head.
    let mut d_hidden_ext = d_out.dot(&params.dense.w_yh.t());

    for (layer_idx, layer) in params.layers.iter().enumerate().rev() {
        let g = &mut grads.layers[layer_idx];
        let inputs = &fwd.cache.inputs[layer_idx];
        let gate_i = &fwd.cache.gate_i[layer_idx];
        let gate_o = &fwd.cache.gate_o[layer_idx];
        let gate_f = &fwd.cache.gate_f[layer_idx];
        let cand = &fwd.cache.cand[layer_idx];
        let cell = &fwd.cache.cell[layer_idx];
        let cell_tanh = &fwd.cache.cell_tanh[layer_idx];
        let hidden = &fwd.cache.hidden[layer_idx];

        let mut d_input = Array2::zeros(inputs.dim());
        let mut dh_next: Array1<f64> = Array1::zeros(h_size);
        let mut dc_next: Array1<f64> = Array1::zeros(h_size);

        for t in (0..t_len).rev() {
            let i_t = gate_i.row(t);
            let o_t = gate_o.row(t);
            let f_t = gate_f.row(t);
            let g_t = cand.row(t);
            let tanh_c = cell_tanh.row(t);

            let dh = &d_hidden_ext.row(t) + &dh_next;

            // h_t = tanh(c_t) * o_t
            let da_o: Array1<f64> = (&dh * &tanh_c)
                .iter()
                .zip(o_t.iter())
                .map(|(d, o)| d * o * (1.0 - o))
                .collect();
            let mut dc: Array1<f64> = (&dh * &o_t)
                .iter()
                .zip(tanh_c.iter())
                .map(|(d, tc)| d * (1.0 - tc * tc))
                .collect();
            dc += &dc_next;

            // c_t = f_t * c_{t-1} + i_t * g_t
            let da_f: Array1<f64> = if t > 0 {
                (&dc * &cell.row(t - 1))
                    .iter()
                    .zip(f_t.iter())
                    .map(|(d, f)| d * f * (1.0 - f))
                    .collect()
            } else {
                Array1::zeros(h_size) // c_{-1} = 0
            };
            let da_i: Array1<f64> = (&dc * &g_t)
                .iter()
                .zip(i_t.iter())
                .map(|(d, i)| d * i * (1.0 - i))
                .collect();
            let da_g: Array1<f64> = (&dc * &i_t)
                .iter()
                .zip(g_t.iter())
                .map(|(d, gv)| d * (1.0 - gv * gv))
                .collect();
            dc_next = &dc * &f_t;

            let u = inputs.row(t);
            add_outer(&mut g.w_ix, u, da_i.view());
            add_outer(&mut g.w_ox, u, da_o.view());
            add_outer(&mut g.w_fx, u, da_f.view());
            add_outer(&mut g.w_gx, u, da_g.view());
            if t > 0 {
                let h_prev = hidden.row(t - 1);
                add_outer(&mut g.w_ih, h_prev, da_i.view());
                add_outer(&mut g.w_oh, h_prev, da_o.view());
                add_outer(&mut g.w_fh, h_prev, da_f.view());
                add_outer(&mut g.w_gh, h_prev, da_g.view());
            } // h_{-1} = 0 contributes nothing
            g.b_i += &da_i;
            g.b_o += &da_o;
            g.b_f += &da_f;
            g.b_g += &da_g;

            dh_next = layer.w_ih.dot(&da_i)
                + layer.w_oh.dot(&da_o)
                + layer.w_fh.dot(&da_f)
                + layer.w_gh.dot(&da_g);

            let du = layer.w_ix.dot(&da_i)
                + layer.w_ox.dot(&da_o)
                + layer.w_fx.dot(&da_f)
                + layer.w_gx.dot(&da_g);
            d_input.row_mut(t).assign(&du);
        }

        // Undo the dropout scaling to reach the layer below's hidden states.
        if layer_idx > 0 {
            if let Some(mask) = &fwd.cache.masks[layer_idx] {
                d_input *= &mask.view().insert_axis(Axis(0));
            }
            d_hidden_ext = d_input;
        }
    }

    Ok(grads)
}

/// ADAM accumulators, aligned with `NetworkParams::flat` enumeration order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> AdamState {
        let shapes: Vec<usize> = params.flat().iter().map(|s| s.len()).collect();
        AdamState {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step(&self) -> usize {
        self.step
    }
}

/// Learning rate after `step` optimizer steps (continuous exponential decay).
pub fn learning_rate(config: &NetworkConfig, step: usize) -> f64 {
    config.base_learning_rate
        * config
            .learning_rate_decay
            .powf(step as f64 / config.learning_rate_decay_steps as f64)
}

/// One bias-corrected ADAM update in place.
pub fn adam_step(
    params: &mut NetworkParams,
    grads: &NetworkParams,
    state: &mut AdamState,
) -> Result<()> {
    state.step += 1;
    let k = state.step;
    let lr = learning_rate(&params.config, k);
    let bc1 = 1.0 - state.beta1.powi(k as i32);
    let bc2 = 1.0 - state.beta2.powi(k as i32);

    let grad_slices = grads.flat();
    let mut param_slices = params.flat_mut();
    if grad_slices.len() != state.m.len() {
        return Err(Error::ShapeMismatch("adam state misaligned".into()));
    }
    for (idx, p) in param_slices.iter_mut().enumerate() {
        let g = grad_slices[idx];
        if g.len() != p.len() {
            return Err(Error::ShapeMismatch("gradient shape misaligned".into()));
        }
        let m = &mut state.m[idx];
        let v = &mut state.v[idx];
        for j in 0..g.len() {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            p[j] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

/// Outcome of training on one window.
pub struct TrainOutcome {
    pub final_loss: f64,
    pub initial_loss: f64,
    pub iterations_run: usize,
}

/// Runs `config.iterations` forward/backward/ADAM cycles on a single
/// training window. The optimizer and learning-rate schedule restart for
/// each window. On divergence the parameters are restored to their state
/// at entry and an error carrying the last finite iteration is returned.
pub fn train_on_window(
    params: &mut NetworkParams,
    sample: &WindowSample,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome> {
    let cfg = params.config.clone();
    let targets = sample
        .targets
        .as_ref()
        .ok_or_else(|| Error::Config("training window has no targets".into()))?;
    if targets.len() != sample.inputs.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} targets for {} input rows",
            targets.len(),
            sample.inputs.nrows()
        )));
    }

    let (inputs, target_col) = if cfg.normalize_window {
        if !(sample.scale.is_finite() && sample.scale > 0.0) {
            return Err(Error::NonFinite("window scale".into()));
        }
        (&sample.inputs / sample.scale, targets / sample.scale)
    } else {
        (sample.inputs.clone(), targets.clone())
    };
    let target_mat = target_col
        .insert_axis(Axis(1))
        .broadcast((inputs.nrows(), cfg.output_size))
        .expect("broadcast targets over output dim")
        .to_owned();

    let snapshot = params.clone();
    let mut adam = AdamState::new(params);
    let initial_loss = {
        let fwd = forward(params, inputs.view(), None)?;
        mse_loss(&fwd.outputs, &target_mat)?
    };
    let mut final_loss = initial_loss;

    for iter in 0..cfg.iterations {
        let result = (|| -> Result<f64> {
            let fwd = forward(params, inputs.view(), Some(rng))?;
            let loss = mse_loss(&fwd.outputs, &target_mat)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite("training loss".into()));
            }
            let grads = backward(params, &fwd, &target_mat)?;
            adam_step(params, &grads, &mut adam)?;
            Ok(loss)
        })();
        match result {
            Ok(loss) => final_loss = loss,
            Err(Error::NonFinite(_)) => {
                *params = snapshot;
                return Err(Error::Divergence {
                    last_finite_iteration: iter,
                });
            }
            Err(e) => {
                *params = snapshot;
                return Err(e);
            }
        }
    }

    // Report the trained network's loss without dropout noise.
    if cfg.iterations > 0 {
        let fwd = forward(params, inputs.view(), None)?;
        final_loss = mse_loss(&fwd.outputs, &target_mat)?;
        if !final_loss.is_finite() {
            *params = snapshot;
            return Err(Error::Divergence {
                last_finite_iteration: cfg.iterations,
            });
        }
    }

    Ok(TrainOutcome {
        final_loss,
        initial_loss,
        iterations_run: cfg.iterations,
    })
}

/// Inference over a window: returns the output sequence re-scaled to price
/// units (first output column).
pub fn predict_window(params: &NetworkParams, sample: &WindowSample) -> Result<Vec<f64>> {
    let inputs = if params.config.normalize_window {
        &sample.inputs / sample.scale
    } else {
        sample.inputs.clone()
    };
    let fwd = forward(params, inputs.view(), None)?;
    let rescale = if params.config.normalize_window {
        sample.scale
    } else {
        1.0
    };
    Ok(fwd.outputs.column(0).iter().map(|v| v * rescale).collect())
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    params: NetworkParams,
}

/// Serializes parameters (with their config) to a versioned JSON container.
/// The round trip is bit-exact.
pub fn save_checkpoint(params: &NetworkParams, path: &std::path::Path) -> Result<()> {
    let checkpoint = Checkpoint {
        version: CHECKPOINT_VERSION,
        params: params.clone(),
    };
    let body = serde_json::to_vec(&checkpoint)
        .map_err(|e| Error::Config(format!("checkpoint serialization: {e}")))?;
    crate::util::write_atomic(path, &body)
}

pub fn load_checkpoint(path: &std::path::Path) -> Result<NetworkParams> {
    let body = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let checkpoint: Checkpoint = serde_json::from_slice(&body).map_err(|e| Error::ParseRow {
        path: path.display().to_string(),
        line: 0,
        reason: e.to_string(),
    })?;
    if checkpoint.version != CHECKPOINT_VERSION {
        return Err(Error::Config(format!(
            "unsupported checkpoint version {}",
            checkpoint.version
        )));
    }
    let params = checkpoint.params;
    params.config.validate()?;
    let expected = init_glorot(&params.config, 0)?;
    let shapes_ok = params
        .flat()
        .iter()
        .zip(expected.flat().iter())
        .all(|(a, b)| a.len() == b.len())
        && params.layers.len() == expected.layers.len();
    if !shapes_ok {
        return Err(Error::ShapeMismatch(
            "checkpoint tensors do not match its config".into(),
        ));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::arr2;

    fn small_config() -> NetworkConfig {
        NetworkConfig {
            num_layers: 2,
            hidden_size: 8,
            window: 5,
            dropout: 0.0,
            iterations: 50,
            normalize_window: false,
            ..NetworkConfig::default()
        }
    }

    fn random_inputs(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        Array2::from_shape_vec((rows, cols), data).unwrap()
    }

    /// Straight-line scalar reimplementation of the cell and head equations,
    /// kept independent of the ndarray-based production path.
    fn naive_forward(params: &NetworkParams, inputs: &Array2<f64>) -> Vec<Vec<f64>> {
        let cfg = &params.config;
        let t_len = inputs.nrows();
        let h = cfg.hidden_size;
        let mut layer_in: Vec<Vec<f64>> = (0..t_len).map(|t| inputs.row(t).to_vec()).collect();

        for layer in &params.layers {
            let d = layer_in[0].len();
            let mut h_prev = vec![0.0; h];
            let mut c_prev = vec![0.0; h];
            let mut out_seq = Vec::with_capacity(t_len);
            for row in &layer_in {
                let mut h_t = vec![0.0; h];
                let mut c_t = vec![0.0; h];
                for k in 0..h {
                    let mut a_i = layer.b_i[k];
                    let mut a_o = layer.b_o[k];
                    let mut a_f = layer.b_f[k];
                    let mut a_g = layer.b_g[k];
                    for j in 0..d {
                        a_i += row[j] * layer.w_ix[[j, k]];
                        a_o += row[j] * layer.w_ox[[j, k]];
                        a_f += row[j] * layer.w_fx[[j, k]];
                        a_g += row[j] * layer.w_gx[[j, k]];
                    }
                    for j in 0..h {
                        a_i += h_prev[j] * layer.w_ih[[j, k]];
                        a_o += h_prev[j] * layer.w_oh[[j, k]];
                        a_f += h_prev[j] * layer.w_fh[[j, k]];
                        a_g += h_prev[j] * layer.w_gh[[j, k]];
                    }
                    let i_t = 1.0 / (1.0 + (-a_i).exp());
                    let o_t = 1.0 / (1.0 + (-a_o).exp());
                    let f_t = 1.0 / (1.0 + (-a_f).exp());
                    let g_t = a_g.tanh();
                    c_t[k] = f_t * c_prev[k] + i_t * g_t;
                    h_t[k] = c_t[k].tanh() * o_t;
                }
                out_seq.push(h_t.clone());
                h_prev = h_t;
                c_prev = c_t;
            }
            layer_in = out_seq;
        }

        let o_size = cfg.output_size;
        (0..t_len)
            .map(|t| {
                (0..o_size)
                    .map(|o| {
                        let mut y = if cfg.shared_dense_bias {
                            params.dense.b_y[[0, o]]
                        } else {
                            params.dense.b_y[[t, o]]
                        };
                        for j in 0..h {
                            y += layer_in[t][j] * params.dense.w_yh[[j, o]];
                        }
                        y
                    })
                    .collect()
            })
            .collect()
    }

    /// Central finite differences of the full loss wrt every parameter.
    fn numerical_gradients(
        params: &NetworkParams,
        inputs: &Array2<f64>,
        targets: &Array2<f64>,
        step: f64,
    ) -> Vec<Vec<f64>> {
        let mut work = params.clone();
        let count = work.flat().len();
        let mut out = Vec::with_capacity(count);
        for tensor_idx in 0..count {
            let len = work.flat()[tensor_idx].len();
            let mut tensor_grad = vec![0.0; len];
            for j in 0..len {
                let original = work.flat()[tensor_idx][j];
                work.flat_mut()[tensor_idx][j] = original + step;
                let plus = mse_loss(
                    &forward(&work, inputs.view(), None).unwrap().outputs,
                    targets,
                )
                .unwrap();
                work.flat_mut()[tensor_idx][j] = original - step;
                let minus = mse_loss(
                    &forward(&work, inputs.view(), None).unwrap().outputs,
                    targets,
                )
                .unwrap();
                work.flat_mut()[tensor_idx][j] = original;
                tensor_grad[j] = (plus - minus) / (2.0 * step);
            }
            out.push(tensor_grad);
        }
        out
    }

    #[test]
    fn glorot_is_deterministic() {
        let cfg = small_config();
        let a = init_glorot(&cfg, 7).unwrap();
        let b = init_glorot(&cfg, 7).unwrap();
        assert_eq!(a, b);
        let c = init_glorot(&cfg, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn glorot_respects_bounds() {
        let cfg = NetworkConfig {
            hidden_size: 32,
            ..small_config()
        };
        let params = init_glorot(&cfg, 3).unwrap();
        let bound = (6.0f64 / 38.0).sqrt();
        assert!(params.layers[0].w_ix.iter().all(|w| w.abs() <= bound));
        assert!(params.layers[0].b_i.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn glorot_sample_mean_near_zero() {
        let cfg = NetworkConfig {
            num_layers: 1,
            hidden_size: 100,
            input_size: 1000,
            ..small_config()
        };
        let params = init_glorot(&cfg, 11).unwrap();
        let w = &params.layers[0].w_ix; // 10^5 entries
        let n = w.len() as f64;
        let mean = w.sum() / n;
        let bound = (6.0f64 / 1100.0).sqrt();
        let std_err = bound / 3.0f64.sqrt() / n.sqrt();
        assert!(
            mean.abs() < 3.0 * std_err,
            "mean {mean} vs 3se {}",
            3.0 * std_err
        );
    }

    #[test]
    fn zero_params_forward_outputs_bias() {
        let cfg = small_config();
        let mut params = init_glorot(&cfg, 1).unwrap();
        for s in params.flat_mut() {
            s.fill(0.0);
        }
        params.dense.b_y = Array2::from_shape_fn((cfg.window, 1), |(t, _)| t as f64 * 0.5);
        let inputs = random_inputs(&mut ChaCha8Rng::seed_from_u64(5), cfg.window, cfg.input_size);
        let fwd = forward(&params, inputs.view(), None).unwrap();
        for t in 0..cfg.window {
            assert_eq!(fwd.outputs[[t, 0]], t as f64 * 0.5);
            // all-zero weights: every hidden state is exactly zero
            assert!(fwd.stacked_hidden.row(t).iter().all(|h| *h == 0.0));
        }
    }

    #[test]
    fn stacked_hidden_shape_matches_window_and_hidden() {
        let cfg = NetworkConfig {
            num_layers: 2,
            hidden_size: 64,
            window: 22,
            dropout: 0.0,
            ..NetworkConfig::default()
        };
        let params = init_glorot(&cfg, 2).unwrap();
        let inputs = random_inputs(&mut ChaCha8Rng::seed_from_u64(2), 22, cfg.input_size);
        let fwd = forward(&params, inputs.view(), None).unwrap();
        assert_eq!(fwd.stacked_hidden.dim(), (22, 64));
        assert_eq!(fwd.outputs.dim(), (22, 1));
    }

    #[test]
    fn forward_matches_naive_reimplementation() {
        let cfg = small_config();
        let params = init_glorot(&cfg, 99).unwrap();
        let inputs = random_inputs(&mut ChaCha8Rng::seed_from_u64(17), cfg.window, cfg.input_size);
        let fwd = forward(&params, inputs.view(), None).unwrap();
        let naive = naive_forward(&params, &inputs);
        for t in 0..cfg.window {
            assert_relative_eq!(fwd.outputs[[t, 0]], naive[t][0], max_relative = 1e-12);
        }
    }

    #[test]
    fn gates_stay_in_open_unit_interval() {
        let cfg = small_config();
        let params = init_glorot(&cfg, 23).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let inputs = random_inputs(&mut rng, cfg.window, cfg.input_size);
            let fwd = forward(&params, inputs.view(), None).unwrap();
            for l in 0..cfg.num_layers {
                assert!(fwd.cache.gate_i[l].iter().all(|v| *v > 0.0 && *v < 1.0));
                assert!(fwd.cache.gate_o[l].iter().all(|v| *v > 0.0 && *v < 1.0));
                assert!(fwd.cache.gate_f[l].iter().all(|v| *v > 0.0 && *v < 1.0));
                assert!(fwd.cache.cand[l].iter().all(|v| v.abs() < 1.0));
                assert!(fwd.cache.cell_tanh[l].iter().all(|v| v.abs() <= 1.0));
            }
        }
    }

    #[test]
    fn mse_examples() {
        let a = arr2(&[[1.0], [2.0]]);
        let b = arr2(&[[0.0], [0.0]]);
        assert_eq!(mse_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(mse_loss(&a, &b).unwrap(), 2.5);
        // independent summation oracle on a random pair
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_inputs(&mut rng, 7, 1);
        let y = random_inputs(&mut rng, 7, 1);
        let oracle = {
            let mut acc = 0.0;
            for t in 0..7 {
                let d: f64 = x[[t, 0]] - y[[t, 0]];
                acc += d * d;
            }
            acc / 7.0
        };
        assert_relative_eq!(mse_loss(&x, &y).unwrap(), oracle, max_relative = 1e-15);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let cfg = small_config();
        let params = init_glorot(&cfg, 31).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let inputs = random_inputs(&mut rng, cfg.window, cfg.input_size);
        let targets = random_inputs(&mut rng, cfg.window, 1);

        let fwd = forward(&params, inputs.view(), None).unwrap();
        let analytic = backward(&params, &fwd, &targets).unwrap();
        let numeric = numerical_gradients(&params, &inputs, &targets, 1e-5);

        let mut max_rel = 0.0f64;
        for (a, n) in analytic.flat().iter().zip(numeric.iter()) {
            for (&av, &nv) in a.iter().zip(n.iter()) {
                let denom = av.abs().max(nv.abs()).max(1e-8);
                max_rel = max_rel.max((av - nv).abs() / denom);
            }
        }
        assert!(max_rel < 1e-4, "max relative gradient error {max_rel}");
    }

    #[test]
    fn recurrent_gradients_zero_for_single_step_window() {
        // With T = 1 the recurrent weights only ever see h_0 = 0, so their
        // gradient must vanish exactly.
        let cfg = NetworkConfig {
            window: 1,
            ..small_config()
        };
        let params = init_glorot(&cfg, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inputs = random_inputs(&mut rng, 1, cfg.input_size);
        let targets = random_inputs(&mut rng, 1, 1);
        let fwd = forward(&params, inputs.view(), None).unwrap();
        let grads = backward(&params, &fwd, &targets).unwrap();
        for layer in &grads.layers {
            assert!(layer.w_ih.iter().all(|g| *g == 0.0));
            assert!(layer.w_oh.iter().all(|g| *g == 0.0));
            assert!(layer.w_fh.iter().all(|g| *g == 0.0));
            assert!(layer.w_gh.iter().all(|g| *g == 0.0));
        }
    }

    #[test]
    fn doubling_residuals_doubles_gradients() {
        let cfg = small_config();
        let params = init_glorot(&cfg, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inputs = random_inputs(&mut rng, cfg.window, cfg.input_size);
        let targets = random_inputs(&mut rng, cfg.window, 1);

        let fwd = forward(&params, inputs.view(), None).unwrap();
        let g1 = backward(&params, &fwd, &targets).unwrap();
        let doubled = &fwd.outputs + &((&targets - &fwd.outputs) * 2.0);
        let fwd2 = forward(&params, inputs.view(), None).unwrap();
        let g2 = backward(&params, &fwd2, &doubled).unwrap();
        for (a, b) in g1.flat().iter().zip(g2.flat().iter()) {
            for (&x, &y) in a.iter().zip(b.iter()) {
                assert_relative_eq!(2.0 * x, y, max_relative = 1e-10, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let cfg = small_config();
        let mut params = init_glorot(&cfg, 5).unwrap();
        let before = params.clone();
        let grads = params.zeros_like();
        let mut adam = AdamState::new(&params);
        adam_step(&mut params, &grads, &mut adam).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn adam_first_step_magnitude() {
        // Single scalar with g = 1 and lr = 0.01 moves by ~ -0.01/(1 + eps).
        let cfg = NetworkConfig {
            num_layers: 1,
            hidden_size: 1,
            window: 1,
            input_size: 1,
            dropout: 0.0,
            learning_rate_decay: 1.0,
            ..NetworkConfig::default()
        };
        let mut params = init_glorot(&cfg, 1).unwrap();
        for s in params.flat_mut() {
            s.fill(0.0);
        }
        let mut grads = params.zeros_like();
        grads.dense.b_y[[0, 0]] = 1.0;
        let mut adam = AdamState::new(&params);
        adam_step(&mut params, &grads, &mut adam).unwrap();
        let expected = -0.01 * (1.0 / (1.0f64.sqrt() + 1e-8));
        assert_relative_eq!(params.dense.b_y[[0, 0]], expected, max_relative = 1e-9);
    }

    #[test]
    fn adam_constant_gradient_update_approaches_learning_rate() {
        let cfg = NetworkConfig {
            num_layers: 1,
            hidden_size: 1,
            window: 1,
            input_size: 1,
            dropout: 0.0,
            learning_rate_decay: 1.0,
            ..NetworkConfig::default()
        };
        let mut params = init_glorot(&cfg, 1).unwrap();
        let mut grads = params.zeros_like();
        grads.dense.b_y[[0, 0]] = 1.0;
        let mut adam = AdamState::new(&params);
        let mut prev = params.dense.b_y[[0, 0]];
        let mut last_step = 0.0;
        for _ in 0..500 {
            adam_step(&mut params, &grads, &mut adam).unwrap();
            last_step = (params.dense.b_y[[0, 0]] - prev).abs();
            prev = params.dense.b_y[[0, 0]];
        }
        assert_relative_eq!(last_step, 0.01, max_relative = 1e-3);
    }

    #[test]
    fn dense_parameter_count_identity() {
        // The shared head needs H*O + B*T*O parameters, not T*(H*O + B*O).
        let cfg = NetworkConfig {
            num_layers: 2,
            hidden_size: 64,
            window: 22,
            ..NetworkConfig::default()
        };
        let params = init_glorot(&cfg, 1).unwrap();
        let dense_count = params.dense.w_yh.len() + params.dense.b_y.len();
        assert_eq!(dense_count, 64 + 22);
        assert_ne!(dense_count, 22 * (64 + 1));
        assert_eq!(params.param_count(), cfg.param_count());
    }

    fn sine_window(t_len: usize) -> WindowSample {
        use crate::market_data::{build_features, Bar, PriceSeries, WindowMode};
        let bars: Vec<Bar> = (0..t_len + 2)
            .map(|i| {
                let p = 100.0 + 10.0 * ((i as f64) * 0.35).sin();
                Bar {
                    date: chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()
                        + chrono::Days::new(i as u64),
                    open: p,
                    high: p,
                    low: p,
                    close: p,
                    adj_close: p,
                    volume: 0,
                }
            })
            .collect();
        let frame = build_features(&PriceSeries::new(bars).unwrap()).unwrap();
        crate::market_data::make_window(&frame, t_len, t_len, WindowMode::Train).unwrap()
    }

    #[test]
    fn training_overfits_noiseless_sine() {
        let cfg = NetworkConfig {
            num_layers: 2,
            hidden_size: 8,
            window: 10,
            dropout: 0.0,
            iterations: 400,
            normalize_window: true,
            ..NetworkConfig::default()
        };
        let mut params = init_glorot(&cfg, 6).unwrap();
        let sample = sine_window(10);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let outcome = train_on_window(&mut params, &sample, &mut rng).unwrap();
        assert!(
            outcome.final_loss <= 0.1 * outcome.initial_loss,
            "final {} vs initial {}",
            outcome.final_loss,
            outcome.initial_loss
        );
    }

    #[test]
    fn zero_iterations_leave_params_unchanged() {
        let cfg = NetworkConfig {
            iterations: 0,
            ..small_config()
        };
        let mut params = init_glorot(&cfg, 9).unwrap();
        let before = params.clone();
        let sample = sine_window(5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        train_on_window(&mut params, &sample, &mut rng).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn training_same_seed_is_deterministic() {
        let cfg = NetworkConfig {
            dropout: 0.5,
            iterations: 30,
            ..small_config()
        };
        let sample = sine_window(5);
        let run = || {
            let mut params = init_glorot(&cfg, 12).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(12);
            train_on_window(&mut params, &sample, &mut rng).unwrap();
            params
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn inference_ignores_dropout_and_is_pure() {
        let cfg = NetworkConfig {
            dropout: 0.7,
            ..small_config()
        };
        let params = init_glorot(&cfg, 14).unwrap();
        let inputs = random_inputs(&mut ChaCha8Rng::seed_from_u64(14), cfg.window, cfg.input_size);
        let a = forward(&params, inputs.view(), None).unwrap();
        let b = forward(&params, inputs.view(), None).unwrap();
        assert_eq!(a.outputs, b.outputs);
        // training-mode passes with different rng states differ
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = forward(&params, inputs.view(), Some(&mut rng)).unwrap();
        assert_ne!(a.outputs, c.outputs);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let cfg = small_config();
        let params = init_glorot(&cfg, 77).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        save_checkpoint(&params, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(params, loaded);
    }

    #[test]
    fn batch_size_other_than_one_is_rejected() {
        let cfg = NetworkConfig {
            batch_size: 2,
            ..NetworkConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
