//! Fully connected network with leaky-rectifier activations trained by plain
//! mini-batch gradient descent on mean squared error.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{pairwise_sum, TrainingSet};
use crate::error::{Result, SurrogateError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    /// Layer widths from input to output; one affine map per consecutive pair.
    pub widths: Vec<usize>,
    /// Negative slope of the leaky rectifier.
    pub alpha: f64,
}

impl Default for MlpArchitecture {
    fn default() -> Self {
        MlpArchitecture { widths: vec![10, 128, 128, 128, 128, 128, 1], alpha: 0.01 }
    }
}

impl MlpArchitecture {
    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 || self.widths.contains(&0) || *self.widths.last().unwrap() != 1 {
            return Err(SurrogateError::InvalidInput(format!("bad layer widths {:?}", self.widths)));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(SurrogateError::InvalidInput(format!("leaky slope must be positive, got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.widths[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_in × n_out`, so a batch maps as `X·W + b`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Layer { n_in, n_out, w: vec![0.0; n_in * n_out], b: vec![0.0; n_out] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub decay_factor: f64,
    pub decay_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { batch_size: 256, epochs: 3000, learning_rate: 3e-6, decay_factor: 0.1, decay_every: 500, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.decay_every == 0 {
            return Err(SurrogateError::InvalidInput("batch size and decay period must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() || !(self.decay_factor > 0.0) {
            return Err(SurrogateError::InvalidInput(format!(
                "learning rate {} and decay factor {} must be positive",
                self.learning_rate, self.decay_factor
            )));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay_factor.powi((epoch / self.decay_every) as i32)
    }
}

/// Rows per block during inference.
const INFER_BLOCK: usize = 128;

/// `C = op(A)·op(B) + beta·C` for row-major buffers; `ta`/`tb` read the stored
/// matrix transposed.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], ta: bool, b: &[f64], tb: bool, beta: f64, c: &mut [f64]) {
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: slice lengths cover every index addressed by the strides above
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1,
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub arch: MlpArchitecture,
    pub layers: Vec<Layer>,
}

impl Mlp {
    pub fn zeros(arch: MlpArchitecture) -> Result<Self> {
        arch.validate()?;
        let layers = arch.widths.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Mlp { arch, layers })
    }

    /// He-uniform weights `U(±√(6/fan_in))`, zero biases.
    pub fn init(arch: MlpArchitecture, seed: u64) -> Result<Self> {
        let mut mlp = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut mlp.layers {
            let limit = (6.0 / layer.n_in as f64).sqrt();
            for w in &mut layer.w {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(mlp)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn check_input(&self, x: &[f64], rows: usize) -> Result<()> {
        if x.len() != rows * self.arch.inputs() {
            return Err(SurrogateError::InvalidInput(format!(
                "input buffer of {} values is not {rows} rows of {}",
                x.len(),
                self.arch.inputs()
            )));
        }
        Ok(())
    }

    /// Activations of every layer for a row-major batch; the last entry is the output.
    fn activations(&self, x: &[f64], rows: usize) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(rows * layer.n_out);
            for _ in 0..rows {
                z.extend_from_slice(&layer.b);
            }
            gemm(rows, layer.n_in, layer.n_out, &acts[l], false, &layer.w, false, 1.0, &mut z);
            if l < last {
                let alpha = self.arch.alpha;
                z.iter_mut().for_each(|v| {
                    if *v < 0.0 {
                        *v *= alpha
                    }
                });
            }
            acts.push(z);
        }
        acts
    }

    /// Raw network outputs for a row-major batch, evaluated in cache-sized blocks.
    pub fn forward_batch(&self, x: &[f64], rows: usize) -> Result<Vec<f64>> {
        self.check_input(x, rows)?;
        let d = self.arch.inputs();
        let widest = *self.arch.widths.iter().max().unwrap();
        let mut a = vec![0.0; INFER_BLOCK * widest];
        let mut z = vec![0.0; INFER_BLOCK * widest];
        let mut out = Vec::with_capacity(rows);
        let last = self.layers.len() - 1;
        for chunk in x.chunks(INFER_BLOCK * d) {
            let r = chunk.len() / d;
            a[..chunk.len()].copy_from_slice(chunk);
            for (l, layer) in self.layers.iter().enumerate() {
                let zs = &mut z[..r * layer.n_out];
                for row in zs.chunks_exact_mut(layer.n_out) {
                    row.copy_from_slice(&layer.b);
                }
                gemm(r, layer.n_in, layer.n_out, &a, false, &layer.w, false, 1.0, zs);
                if l < last {
                    let alpha = self.arch.alpha;
                    zs.iter_mut().for_each(|v| {
                        if *v < 0.0 {
                            *v *= alpha
                        }
                    });
                }
                std::mem::swap(&mut a, &mut z);
            }
            out.extend_from_slice(&a[..r]);
        }
        Ok(out)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward_batch(x, 1)?[0])
    }

    /// Mean squared error of a batch and its gradient, laid out like `layers`.
    pub fn loss_and_gradient(&self, x: &[f64], y: &[f64]) -> Result<(f64, Vec<Layer>)> {
        let rows = y.len();
        self.check_input(x, rows)?;
        if rows == 0 {
            return Err(SurrogateError::InvalidInput("empty batch".into()));
        }
        let acts = self.activations(x, rows);
        let out = acts.last().unwrap();
        let resid: Vec<f64> = out.iter().zip(y).map(|(p, t)| p - t).collect();
        let sq: Vec<f64> = resid.iter().map(|r| r * r).collect();
        let loss = pairwise_sum(&sq) / rows as f64;

        let mut grads: Vec<Layer> = self.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect();
        let mut delta: Vec<f64> = resid.iter().map(|r| 2.0 * r / rows as f64).collect();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grads[l];
            gemm(layer.n_in, rows, layer.n_out, &acts[l], true, &delta, false, 0.0, &mut g.w);
            for row in delta.chunks_exact(layer.n_out) {
                g.b.iter_mut().zip(row).for_each(|(b, d)| *b += d);
            }
            if l > 0 {
                let mut back = vec![0.0; rows * layer.n_in];
                gemm(rows, layer.n_out, layer.n_in, &delta, false, &layer.w, true, 0.0, &mut back);
                // the activation keeps the sign of its argument, so the output decides the slope
                for (d, a) in back.iter_mut().zip(&acts[l]) {
                    if *a <= 0.0 {
                        *d *= self.arch.alpha;
                    }
                }
                delta = back;
            }
        }
        Ok((loss, grads))
    }

    fn step(&mut self, grads: &[Layer], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            layer.w.iter_mut().zip(&g.w).for_each(|(w, d)| *w -= lr * d);
            layer.b.iter_mut().zip(&g.b).for_each(|(b, d)| *b -= lr * d);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpTraining {
    pub mlp: Mlp,
    /// Mean of the batch losses of each epoch.
    pub loss_trace: Vec<f64>,
}

/// Mini-batch gradient descent from a He-uniform start; rows are reshuffled
/// every epoch from the run seed.
pub fn train_mlp(set: &TrainingSet, arch: MlpArchitecture, cfg: &TrainConfig) -> Result<MlpTraining> {
    cfg.validate()?;
    if set.is_empty() {
        return Err(SurrogateError::InvalidInput("training set is empty".into()));
    }
    let mlp = Mlp::init(arch, cfg.seed)?;
    continue_training(mlp, set, cfg)
}

/// Run the schedule of `cfg` starting from existing weights.
pub fn continue_training(mut mlp: Mlp, set: &TrainingSet, cfg: &TrainConfig) -> Result<MlpTraining> {
    cfg.validate()?;
    if mlp.arch.inputs() != soa_core::dataset::FEATURES {
        return Err(SurrogateError::InvalidInput(format!("network takes {} inputs", mlp.arch.inputs())));
    }
    let d = mlp.arch.inputs();
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut xb = Vec::with_capacity(cfg.batch_size * d);
    let mut yb = Vec::with_capacity(cfg.batch_size);
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let mut losses = Vec::with_capacity(order.len().div_ceil(cfg.batch_size));
        for chunk in order.chunks(cfg.batch_size) {
            xb.clear();
            yb.clear();
            for &i in chunk {
                xb.extend_from_slice(&set.x[i]);
                yb.push(set.y[i]);
            }
            let (loss, grads) = mlp.loss_and_gradient(&xb, &yb)?;
            if !loss.is_finite() {
                return Err(SurrogateError::Divergence { epoch, learning_rate: lr, loss });
            }
            mlp.step(&grads, lr);
            losses.push(loss);
        }
        let mean = pairwise_sum(&losses) / losses.len() as f64;
        if !mean.is_finite() {
            return Err(SurrogateError::Divergence { epoch, learning_rate: lr, loss: mean });
        }
        loss_trace.push(mean);
    }
    Ok(MlpTraining { mlp, loss_trace })
}
