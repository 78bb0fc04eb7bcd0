//! Dense multi-layer perceptron with rectifier hidden units and a linear
//! output head, in 64-bit floats throughout. The backward pass returns
//! exact reverse-mode gradients of the forward map, verified against
//! central finite differences.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::NnError;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn from_row(row: &[f64]) -> Self {
        Mat {
            rows: 1,
            cols: row.len(),
            data: row.to_vec(),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Network shape: input width, hidden widths, output width. Hidden layers
/// use the rectifier, the output head is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
}

impl MlpSpec {
    pub fn new(input: usize, hidden: Vec<usize>, output: usize) -> Self {
        assert!(input >= 1 && output >= 1 && hidden.iter().all(|&h| h >= 1));
        MlpSpec { input, hidden, output }
    }

    /// (out, in) shape of every layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input;
        for &h in &self.hidden {
            dims.push((h, prev));
            prev = h;
        }
        dims.push((self.output, prev));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(o, i)| o * i + o).sum()
    }
}

/// All weights and biases of one network in a single flat buffer with a
/// stable layout: per layer, the row-major weight matrix then the bias
/// vector. Flatten/unflatten is the identity on the buffer, so round-trips
/// are bit-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    dims: Vec<(usize, usize)>,
    data: Vec<f64>,
}

impl ParamStore {
    pub fn zeros(spec: &MlpSpec) -> Self {
        ParamStore {
            dims: spec.layer_dims(),
            data: vec![0.0; spec.param_count()],
        }
    }

    /// Weights uniform in ±sqrt(6 / (fan_in + fan_out)), biases zero.
    pub fn init(spec: &MlpSpec, rng: &mut ChaCha12Rng) -> Self {
        let mut store = Self::zeros(spec);
        for l in 0..store.dims.len() {
            let (out, inp) = store.dims[l];
            let bound = (6.0 / (inp + out) as f64).sqrt();
            let (w_off, b_off) = store.offsets(l);
            for i in w_off..b_off {
                store.data[i] = rng.random_range(-bound..=bound);
            }
        }
        store
    }

    fn offsets(&self, layer: usize) -> (usize, usize) {
        let mut off = 0;
        for l in 0..layer {
            let (o, i) = self.dims[l];
            off += o * i + o;
        }
        let (o, i) = self.dims[layer];
        (off, off + o * i)
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len()
    }

    pub fn w(&self, layer: usize) -> &[f64] {
        let (w_off, b_off) = self.offsets(layer);
        &self.data[w_off..b_off]
    }

    pub fn b(&self, layer: usize) -> &[f64] {
        let (_, b_off) = self.offsets(layer);
        let (o, _) = self.dims[layer];
        &self.data[b_off..b_off + o]
    }

    fn w_mut(&mut self, layer: usize) -> &mut [f64] {
        let (w_off, b_off) = self.offsets(layer);
        &mut self.data[w_off..b_off]
    }

    fn b_mut(&mut self, layer: usize) -> &mut [f64] {
        let (_, b_off) = self.offsets(layer);
        let (o, _) = self.dims[layer];
        &mut self.data[b_off..b_off + o]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn from_flat(spec: &MlpSpec, data: Vec<f64>) -> Result<Self, NnError> {
        if data.len() != spec.param_count() {
            return Err(NnError::Shape {
                what: "flat parameter vector".into(),
                want: spec.param_count(),
                got: data.len(),
            });
        }
        Ok(ParamStore {
            dims: spec.layer_dims(),
            data,
        })
    }

    /// target = tau * online + (1 - tau) * target, elementwise.
    pub fn polyak_from(&mut self, online: &ParamStore, tau: f64) {
        debug_assert_eq!(self.data.len(), online.data.len());
        for (t, &o) in self.data.iter_mut().zip(&online.data) {
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
}

/// Per-layer inputs saved by the forward pass; exactly what the backward
/// pass needs.
pub struct ForwardCache {
    /// `layer_inputs[l]` is the batch fed into layer `l`; index 0 is the
    /// network input, later entries are post-rectifier activations.
    pub layer_inputs: Vec<Mat>,
}

/// Forward pass over a batch (rows = samples). Returns the linear output
/// head's values and the cache for `mlp_backward`.
pub fn mlp_forward(
    spec: &MlpSpec,
    params: &ParamStore,
    input: &Mat,
) -> Result<(Mat, ForwardCache), NnError> {
    if input.cols != spec.input {
        return Err(NnError::Shape {
            what: "input width".into(),
            want: spec.input,
            got: input.cols,
        });
    }
    let dims = spec.layer_dims();
    let n_layers = dims.len();
    let mut layer_inputs = Vec::with_capacity(n_layers);
    let mut current = input.clone();
    for (l, &(out_w, in_w)) in dims.iter().enumerate() {
        let w = params.w(l);
        let b = params.b(l);
        let mut next = Mat::zeros(current.rows, out_w);
        let last = l == n_layers - 1;
        for r in 0..current.rows {
            let x = current.row(r);
            let y = next.row_mut(r);
            for o in 0..out_w {
                let wr = &w[o * in_w..(o + 1) * in_w];
                let mut acc = b[o];
                for i in 0..in_w {
                    acc += wr[i] * x[i];
                }
                y[o] = if last { acc } else { acc.max(0.0) };
            }
        }
        layer_inputs.push(current);
        current = next;
    }
    Ok((current, ForwardCache { layer_inputs }))
}

/// Reverse-mode gradients of the forward map. `grad_out` is
/// dLoss/d(output); returns (parameter gradients, dLoss/d(input)).
pub fn mlp_backward(
    spec: &MlpSpec,
    params: &ParamStore,
    cache: &ForwardCache,
    grad_out: &Mat,
) -> Result<(ParamStore, Mat), NnError> {
    let dims = spec.layer_dims();
    let n_layers = dims.len();
    if grad_out.cols != spec.output {
        return Err(NnError::Shape {
            what: "output gradient width".into(),
            want: spec.output,
            got: grad_out.cols,
        });
    }
    if cache.layer_inputs.len() != n_layers {
        return Err(NnError::Shape {
            what: "cache depth".into(),
            want: n_layers,
            got: cache.layer_inputs.len(),
        });
    }
    let rows = grad_out.rows;
    let mut grads = ParamStore::zeros(spec);
    // dLoss/d(post-activation of layer l); starts as dLoss/d(output).
    let mut g = grad_out.clone();
    for l in (0..n_layers).rev() {
        let (out_w, in_w) = dims[l];
        let layer_in = &cache.layer_inputs[l];
        // The output head is linear; hidden layers gate through the
        // rectifier, whose activation state is recoverable from the *next*
        // layer's cached input (its post-activation output).
        if l < n_layers - 1 {
            let post = &cache.layer_inputs[l + 1];
            for r in 0..rows {
                let gr = g.row_mut(r);
                let pr = post.row(r);
                for o in 0..out_w {
                    if pr[o] <= 0.0 {
                        gr[o] = 0.0;
                    }
                }
            }
        }
        {
            let dw = grads.w_mut(l);
            for r in 0..rows {
                let delta = g.row(r);
                let x = layer_in.row(r);
                for o in 0..out_w {
                    let d = delta[o];
                    if d != 0.0 {
                        let wr = &mut dw[o * in_w..(o + 1) * in_w];
                        for i in 0..in_w {
                            wr[i] += d * x[i];
                        }
                    }
                }
            }
        }
        {
            let db = grads.b_mut(l);
            for r in 0..rows {
                let delta = g.row(r);
                for o in 0..out_w {
                    db[o] += delta[o];
                }
            }
        }
        // Propagate to the layer input: g_in = delta @ W.
        let w = params.w(l);
        let mut g_in = Mat::zeros(rows, in_w);
        for r in 0..rows {
            let delta = g.row(r);
            let gi = g_in.row_mut(r);
            for o in 0..out_w {
                let d = delta[o];
                if d != 0.0 {
                    let wr = &w[o * in_w..(o + 1) * in_w];
                    for i in 0..in_w {
                        gi[i] += d * wr[i];
                    }
                }
            }
        }
        g = g_in;
    }
    Ok((grads, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn zero_params_zero_output() {
        let spec = MlpSpec::new(3, vec![4], 2);
        let params = ParamStore::zeros(&spec);
        let input = Mat::from_vec(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.0, -1.0]);
        let (out, _) = mlp_forward(&spec, &params, &input).unwrap();
        assert!(out.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_weights_pass_input_through() {
        let spec = MlpSpec::new(3, vec![], 3);
        let mut params = ParamStore::zeros(&spec);
        for i in 0..3 {
            params.w_mut(0)[i * 3 + i] = 1.0;
        }
        let input = Mat::from_row(&[0.3, -0.7, 2.0]);
        let (out, _) = mlp_forward(&spec, &params, &input).unwrap();
        assert_eq!(out.data, vec![0.3, -0.7, 2.0]);
    }

    #[test]
    fn identical_rows_produce_identical_outputs() {
        let spec = MlpSpec::new(2, vec![8, 8], 3);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let params = ParamStore::init(&spec, &mut rng);
        let input = Mat::from_vec(2, 2, vec![0.4, -1.2, 0.4, -1.2]);
        let (out, _) = mlp_forward(&spec, &params, &input).unwrap();
        assert_eq!(out.row(0), out.row(1));
    }

    #[test]
    fn zero_output_gradient_zero_param_gradients() {
        let spec = MlpSpec::new(2, vec![4], 1);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let params = ParamStore::init(&spec, &mut rng);
        let input = Mat::from_row(&[1.0, 2.0]);
        let (_, cache) = mlp_forward(&spec, &params, &input).unwrap();
        let (grads, _) = mlp_backward(&spec, &params, &cache, &Mat::zeros(1, 1)).unwrap();
        assert!(grads.as_flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn doubling_output_gradient_doubles_param_gradients() {
        let spec = MlpSpec::new(2, vec![4], 1);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let params = ParamStore::init(&spec, &mut rng);
        let input = Mat::from_row(&[0.7, -0.3]);
        let (_, cache) = mlp_forward(&spec, &params, &input).unwrap();
        let g1 = Mat::from_row(&[1.5]);
        let g2 = Mat::from_row(&[3.0]);
        let (grads1, _) = mlp_backward(&spec, &params, &cache, &g1).unwrap();
        let (grads2, _) = mlp_backward(&spec, &params, &cache, &g2).unwrap();
        for (a, b) in grads1.as_flat().iter().zip(grads2.as_flat()) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn flatten_round_trip_is_exact() {
        let spec = MlpSpec::new(5, vec![7, 3], 2);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let params = ParamStore::init(&spec, &mut rng);
        let flat = params.as_flat().to_vec();
        let back = ParamStore::from_flat(&spec, flat).unwrap();
        assert_eq!(params, back);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let spec = MlpSpec::new(3, vec![4], 2);
        let params = ParamStore::zeros(&spec);
        let input = Mat::from_row(&[1.0, 2.0]);
        assert!(matches!(
            mlp_forward(&spec, &params, &input),
            Err(NnError::Shape { .. })
        ));
    }
}
