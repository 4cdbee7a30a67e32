//! Tanh-squashed Gaussian policy head: reparameterized sampling, exact
//! log-density with the tanh change-of-variables term, and the analytic
//! backward pass used by the actor update.

use ndarray::{Array1, Array2, Axis, Zip};

/// Mean and (already clamped) log standard deviation, each `(batch, m)`.
pub struct GaussianParams {
    pub mean: Array2<f64>,
    pub log_std: Array2<f64>,
}

/// Splits a Gaussian head output `[mean | log_std]` into its halves.
pub fn split_gaussian(head_out: &Array2<f64>) -> GaussianParams {
    let m = head_out.ncols() / 2;
    GaussianParams {
        mean: head_out.slice(ndarray::s![.., ..m]).to_owned(),
        log_std: head_out.slice(ndarray::s![.., m..]).to_owned(),
    }
}

pub struct SquashedSample {
    pub action: Array2<f64>,
    pub pre_tanh: Array2<f64>,
    pub noise: Array2<f64>,
    pub log_prob: Array1<f64>,
}

/// `log(1 - tanh(u)^2)` without catastrophic cancellation.
fn log1m_tanh2(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Draws `a = tanh(mean + std * noise)` and returns the per-sample log
/// density of `a` under the squashed Gaussian.
pub fn sample_squashed(params: &GaussianParams, noise: &Array2<f64>) -> SquashedSample {
    assert_eq!(noise.dim(), params.mean.dim());
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut pre_tanh = params.mean.clone();
    Zip::from(&mut pre_tanh)
        .and(&params.log_std)
        .and(noise)
        .for_each(|u, &l, &e| *u += l.exp() * e);
    let action = pre_tanh.mapv(f64::tanh);
    let mut per_dim = Array2::zeros(noise.dim());
    Zip::from(&mut per_dim)
        .and(&params.log_std)
        .and(noise)
        .and(&pre_tanh)
        .for_each(|out, &l, &e, &u| {
            *out = -0.5 * e * e - l - 0.5 * ln_2pi - log1m_tanh2(u);
        });
    let log_prob = per_dim.sum_axis(Axis(1));
    SquashedSample {
        action,
        pre_tanh,
        noise: noise.clone(),
        log_prob,
    }
}

/// Deterministic action `tanh(mean)`.
pub fn mean_action(params: &GaussianParams) -> Array2<f64> {
    params.mean.mapv(f64::tanh)
}

/// Gradient of a loss w.r.t. the Gaussian head output `[mean | log_std]`,
/// given its gradients w.r.t. the sampled action (`d_action`, per element)
/// and the per-sample log probability (`d_log_prob`).
///
/// With `u = mean + std * noise` and `a = tanh(u)`:
///   d log p / du       = 2a
///   da / du            = 1 - a^2
///   du / d mean        = 1
///   du / d log_std     = std * noise
///   d log p / d log_std also has a direct `-1` term per dimension.
pub fn squashed_backward(
    params: &GaussianParams,
    sample: &SquashedSample,
    d_action: &Array2<f64>,
    d_log_prob: &Array1<f64>,
) -> Array2<f64> {
    let (b, m) = params.mean.dim();
    let mut dhead = Array2::zeros((b, 2 * m));
    for i in 0..b {
        let dlp = d_log_prob[i];
        for j in 0..m {
            let a = sample.action[[i, j]];
            let e = sample.noise[[i, j]];
            let std = params.log_std[[i, j]].exp();
            let du = d_action[[i, j]] * (1.0 - a * a) + dlp * 2.0 * a;
            dhead[[i, j]] = du;
            dhead[[i, m + j]] = du * std * e - dlp;
        }
    }
    dhead
}
