//! Minimal dense networks on `ndarray`: ReLU MLPs with a linear, sigmoid, or
//! squashed-Gaussian output head, explicit backward passes, and Adam.
//!
//! All math runs in `f64`. Batches are row-major `(batch, features)`.

mod adam;
mod gaussian;

pub use adam::AdamState;
pub use gaussian::{
    mean_action, sample_squashed, split_gaussian, squashed_backward, GaussianParams,
    SquashedSample,
};

use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NnError {
    #[error("gradient contains non-finite values")]
    NonFiniteGradient,
    #[error("loss is non-finite")]
    NonFiniteLoss,
}

#[derive(Clone, Debug)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Transformation applied to the final layer's pre-activation.
///
/// `Gaussian` splits the output into `[mean | log_std]` halves and clamps
/// `log_std` to the given bounds; clamped entries get zero gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OutputHead {
    Linear,
    Sigmoid,
    Gaussian { log_std_min: f64, log_std_max: f64 },
}

#[derive(Clone, Debug)]
pub struct Mlp {
    pub(crate) layers: Vec<Linear>,
    head: OutputHead,
}

/// Activations retained by `forward` for the backward pass.
pub struct ForwardCache {
    /// `acts[0]` is the input, `acts[i]` the post-ReLU output of layer `i-1`.
    acts: Vec<Array2<f64>>,
    pre_head: Array2<f64>,
    pub out: Array2<f64>,
}

pub struct MlpGrads {
    pub dw: Vec<Array2<f64>>,
    pub db: Vec<Array1<f64>>,
}

impl MlpGrads {
    pub fn is_finite(&self) -> bool {
        self.dw.iter().all(|g| g.iter().all(|v| v.is_finite()))
            && self.db.iter().all(|g| g.iter().all(|v| v.is_finite()))
    }
}

impl Mlp {
    /// `dims` lists layer widths input-first, e.g. `[in, 256, 256, out]`.
    /// Weights and biases start uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn new(dims: &[usize], head: OutputHead, rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output widths");
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let uniform = |rng: &mut ChaCha8Rng| rng.random::<f64>() * 2.0 * bound - bound;
                let mut weights = Array2::zeros((fan_out, fan_in));
                for v in weights.iter_mut() {
                    *v = uniform(rng);
                }
                let mut bias = Array1::zeros(fan_out);
                for v in bias.iter_mut() {
                    *v = uniform(rng);
                }
                Linear { w: weights, b: bias }
            })
            .collect();
        Mlp { layers, head }
    }

    pub fn from_parts(layers: Vec<Linear>, head: OutputHead) -> Self {
        assert!(!layers.is_empty());
        Mlp { layers, head }
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn head(&self) -> OutputHead {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn forward(&self, x: &Array2<f64>) -> ForwardCache {
        assert_eq!(x.ncols(), self.input_dim());
        let mut acts = Vec::with_capacity(self.layers.len());
        acts.push(x.clone());
        for layer in &self.layers[..self.layers.len() - 1] {
            let mut z = acts.last().unwrap().dot(&layer.w.t());
            z += &layer.b;
            z.mapv_inplace(|v| v.max(0.0));
            acts.push(z);
        }
        let last = self.layers.last().unwrap();
        let mut pre_head = acts.last().unwrap().dot(&last.w.t());
        pre_head += &last.b;
        let out = self.apply_head(&pre_head);
        ForwardCache { acts, pre_head, out }
    }

    /// Forward pass without retaining activations.
    pub fn output(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.ncols(), self.input_dim());
        let mut h = x.clone();
        for layer in &self.layers[..self.layers.len() - 1] {
            let mut z = h.dot(&layer.w.t());
            z += &layer.b;
            z.mapv_inplace(|v| v.max(0.0));
            h = z;
        }
        let last = self.layers.last().unwrap();
        let mut pre_head = h.dot(&last.w.t());
        pre_head += &last.b;
        self.apply_head(&pre_head)
    }

    fn apply_head(&self, pre: &Array2<f64>) -> Array2<f64> {
        match self.head {
            OutputHead::Linear => pre.clone(),
            OutputHead::Sigmoid => pre.mapv(|v| 1.0 / (1.0 + (-v).exp())),
            OutputHead::Gaussian {
                log_std_min,
                log_std_max,
            } => {
                let m = pre.ncols() / 2;
                let mut out = pre.clone();
                for mut row in out.rows_mut() {
                    for v in row.iter_mut().skip(m) {
                        *v = v.clamp(log_std_min, log_std_max);
                    }
                }
                out
            }
        }
    }

    /// Backpropagates `dy` (gradient w.r.t. the head output) and returns the
    /// parameter gradients together with the gradient w.r.t. the input.
    pub fn backward(&self, cache: &ForwardCache, dy: &Array2<f64>) -> (MlpGrads, Array2<f64>) {
        let mut g = self.head_grad(cache, dy);
        let n = self.layers.len();
        let mut dw = vec![Array2::zeros((0, 0)); n];
        let mut db = vec![Array1::zeros(0); n];
        for l in (0..n).rev() {
            dw[l] = g.t().dot(&cache.acts[l]);
            db[l] = g.sum_axis(Axis(0));
            g = g.dot(&self.layers[l].w);
            if l > 0 {
                Zip::from(&mut g)
                    .and(&cache.acts[l])
                    .for_each(|g, &h| {
                        if h <= 0.0 {
                            *g = 0.0;
                        }
                    });
            }
        }
        (MlpGrads { dw, db }, g)
    }

    /// Gradient w.r.t. the input only; parameter gradients are not formed.
    pub fn backward_input(&self, cache: &ForwardCache, dy: &Array2<f64>) -> Array2<f64> {
        let mut g = self.head_grad(cache, dy);
        for l in (0..self.layers.len()).rev() {
            g = g.dot(&self.layers[l].w);
            if l > 0 {
                Zip::from(&mut g)
                    .and(&cache.acts[l])
                    .for_each(|g, &h| {
                        if h <= 0.0 {
                            *g = 0.0;
                        }
                    });
            }
        }
        g
    }

    fn head_grad(&self, cache: &ForwardCache, dy: &Array2<f64>) -> Array2<f64> {
        assert_eq!(dy.dim(), cache.out.dim());
        match self.head {
            OutputHead::Linear => dy.clone(),
            OutputHead::Sigmoid => {
                let mut g = dy.clone();
                Zip::from(&mut g)
                    .and(&cache.out)
                    .for_each(|g, &y| *g *= y * (1.0 - y));
                g
            }
            OutputHead::Gaussian {
                log_std_min,
                log_std_max,
            } => {
                let m = dy.ncols() / 2;
                let mut g = dy.clone();
                let pre_std = cache.pre_head.slice(ndarray::s![.., m..]);
                Zip::from(g.slice_mut(ndarray::s![.., m..]))
                    .and(&pre_std)
                    .for_each(|g, &pre| {
                        if pre <= log_std_min || pre >= log_std_max {
                            *g = 0.0;
                        }
                    });
                g
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::{arr1, arr2, Array1};
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_batch(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let mut x = Array2::zeros((rows, cols));
        for v in x.iter_mut() {
            *v = rng.random::<f64>() * 2.0 - 1.0;
        }
        x
    }

    /// Scalar test loss: fixed random weighting of all outputs.
    fn weighted_loss(mlp: &Mlp, x: &Array2<f64>, weights: &Array2<f64>) -> f64 {
        (mlp.output(x) * weights).sum()
    }

    #[derive(Clone, Copy)]
    pub(super) enum Coord {
        W(usize, usize),
        B(usize, usize),
    }

    fn get(mlp: &Mlp, c: Coord) -> f64 {
        match c {
            Coord::W(l, i) => mlp.layers[l].w.as_slice().unwrap()[i],
            Coord::B(l, i) => mlp.layers[l].b[i],
        }
    }

    fn set(mlp: &mut Mlp, c: Coord, v: f64) {
        match c {
            Coord::W(l, i) => mlp.layers[l].w.as_slice_mut().unwrap()[i] = v,
            Coord::B(l, i) => mlp.layers[l].b[i] = v,
        }
    }

    fn central_diff<F: Fn(&Mlp) -> f64>(mlp: &mut Mlp, c: Coord, h: f64, loss: &F) -> f64 {
        let orig = get(mlp, c);
        set(mlp, c, orig + h);
        let up = loss(mlp);
        set(mlp, c, orig - h);
        let down = loss(mlp);
        set(mlp, c, orig);
        (up - down) / (2.0 * h)
    }

    /// Central differences at h = 1e-5, retrying at 1e-7 for coordinates that
    /// sit next to a ReLU kink where the wider step straddles the fold.
    pub(super) fn assert_grad_close<F: Fn(&Mlp) -> f64>(
        mlp: &mut Mlp,
        c: Coord,
        an: f64,
        loss: &F,
        label: &str,
    ) {
        let close = |fd: f64, tol_abs: f64, tol_rel: f64| {
            (fd - an).abs() <= tol_abs + tol_rel * fd.abs().max(an.abs())
        };
        let fd = central_diff(mlp, c, 1e-5, loss);
        if close(fd, 1e-6, 1e-4) {
            return;
        }
        let fd = central_diff(mlp, c, 1e-7, loss);
        assert!(
            close(fd, 1e-6, 1e-3),
            "{label}: fd {fd} vs analytic {an}"
        );
    }

    fn fd_check(mlp: &mut Mlp, x: &Array2<f64>, weights: &Array2<f64>) {
        let cache = mlp.forward(x);
        let (grads, _) = mlp.backward(&cache, weights);
        let loss = |m: &Mlp| weighted_loss(m, x, weights);
        for l in 0..mlp.layers.len() {
            for idx in 0..grads.dw[l].len() {
                let an = grads.dw[l].as_slice().unwrap()[idx];
                assert_grad_close(mlp, Coord::W(l, idx), an, &loss, &format!("layer {l} w[{idx}]"));
            }
            for idx in 0..grads.db[l].len() {
                let an = grads.db[l][idx];
                assert_grad_close(mlp, Coord::B(l, idx), an, &loss, &format!("layer {l} b[{idx}]"));
            }
        }
    }

    #[test]
    fn forward_shapes_and_determinism() {
        let mut r = rng(3);
        let mlp = Mlp::new(&[4, 8, 8, 3], OutputHead::Linear, &mut r);
        assert_eq!(mlp.input_dim(), 4);
        assert_eq!(mlp.output_dim(), 3);
        assert_eq!(mlp.param_count(), 4 * 8 + 8 + 8 * 8 + 8 + 8 * 3 + 3);
        let mut r2 = rng(3);
        let mlp2 = Mlp::new(&[4, 8, 8, 3], OutputHead::Linear, &mut r2);
        let x = random_batch(5, 4, &mut r);
        assert_eq!(mlp.output(&x), mlp2.output(&x));
        assert_eq!(mlp.output(&x).dim(), (5, 3));
    }

    #[test]
    fn gradients_match_finite_differences_linear_head() {
        let mut r = rng(11);
        let mut mlp = Mlp::new(&[4, 8, 6, 3], OutputHead::Linear, &mut r);
        let x = random_batch(5, 4, &mut r);
        let w = random_batch(5, 3, &mut r);
        fd_check(&mut mlp, &x, &w);
    }

    #[test]
    fn gradients_match_finite_differences_sigmoid_head() {
        let mut r = rng(12);
        let mut mlp = Mlp::new(&[6, 10, 10, 4], OutputHead::Sigmoid, &mut r);
        let x = random_batch(5, 6, &mut r);
        let w = random_batch(5, 4, &mut r);
        fd_check(&mut mlp, &x, &w);
    }

    #[test]
    fn gradients_match_finite_differences_gaussian_head() {
        let mut r = rng(13);
        let head = OutputHead::Gaussian {
            log_std_min: -20.0,
            log_std_max: 2.0,
        };
        let mut mlp = Mlp::new(&[5, 8, 8, 6], head, &mut r);
        let x = random_batch(4, 5, &mut r);
        let w = random_batch(4, 6, &mut r);
        fd_check(&mut mlp, &x, &w);
    }

    #[test]
    fn gaussian_head_clamps_and_blocks_gradient() {
        let head = OutputHead::Gaussian {
            log_std_min: -1.0,
            log_std_max: 1.0,
        };
        // Identity-ish single layer so pre-head values are controllable.
        let layers = vec![Linear {
            w: Array2::eye(4),
            b: Array1::zeros(4),
        }];
        let mlp = Mlp::from_parts(layers, head);
        let x = arr2(&[[2.0, 0.5, 3.0, -7.0]]);
        let cache = mlp.forward(&x);
        assert_eq!(cache.out, arr2(&[[2.0, 0.5, 1.0, -1.0]]));
        let dy = arr2(&[[1.0, 1.0, 1.0, 1.0]]);
        let (grads, dx) = mlp.backward(&cache, &dy);
        // Mean columns pass through, clamped log-std columns do not.
        assert_eq!(dx, arr2(&[[1.0, 1.0, 0.0, 0.0]]));
        assert_eq!(grads.db[0], arr1(&[1.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut r = rng(14);
        let mlp = Mlp::new(&[4, 8, 3], OutputHead::Linear, &mut r);
        let x = random_batch(3, 4, &mut r);
        let w = random_batch(3, 3, &mut r);
        let cache = mlp.forward(&x);
        let (_, dx) = mlp.backward(&cache, &w);
        let h = 1e-5;
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp.as_slice_mut().unwrap()[i] += h;
            let up = weighted_loss(&mlp, &xp, &w);
            xp.as_slice_mut().unwrap()[i] -= 2.0 * h;
            let down = weighted_loss(&mlp, &xp, &w);
            let fd = (up - down) / (2.0 * h);
            let an = dx.as_slice().unwrap()[i];
            assert_relative_eq!(fd, an, epsilon = 1e-6, max_relative = 1e-4);
        }
    }
}
