//! Skill models over symbolic board states.
//!
//! The default model predicts per-bit flip probabilities for the successor
//! state given the start state and a skill; transition likelihoods factorize
//! over bits as Bernoulli terms. Skill posteriors follow from Bayes' rule
//! with a uniform skill prior. An alternative discriminator model classifies
//! the skill directly from `[z0, zT, z0 xor zT]` and provides posteriors but
//! no transition likelihoods, so it supports neither the novelty bonus nor
//! state prediction.

use crate::boards::SymbolicObs;
use crate::nn::{AdamState, Mlp, NnError, OutputHead};
use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;

/// One symbolic training tuple.
#[derive(Clone, Debug)]
pub struct SymbolicTransition {
    pub z0: SymbolicObs,
    pub skill: usize,
    pub zt: SymbolicObs,
}

#[derive(Clone, Debug)]
pub struct ForwardModel {
    d: usize,
    k: usize,
    eps: f64,
    mlp: Mlp,
    opt: AdamState,
}

impl ForwardModel {
    /// Flip-probability network `[z0 | onehot(k)] -> sigmoid`, trained with
    /// Adam. `hidden` defaults to two layers of 256 in the full setup.
    pub fn new(
        d: usize,
        k: usize,
        hidden: &[usize],
        lr: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut dims = vec![d + k];
        dims.extend_from_slice(hidden);
        dims.push(d);
        let mlp = Mlp::new(&dims, OutputHead::Sigmoid, rng);
        let opt = AdamState::new(&mlp, lr);
        ForwardModel {
            d,
            k,
            eps: 1e-7,
            mlp,
            opt,
        }
    }

    pub fn from_parts(d: usize, k: usize, mlp: Mlp, opt: AdamState) -> Self {
        assert_eq!(mlp.input_dim(), d + k);
        assert_eq!(mlp.output_dim(), d);
        ForwardModel {
            d,
            k,
            eps: 1e-7,
            mlp,
            opt,
        }
    }

    pub fn symbolic_dim(&self) -> usize {
        self.d
    }

    pub fn num_skills(&self) -> usize {
        self.k
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.opt
    }

    fn input_rows(&self, items: &[(&SymbolicObs, usize)]) -> Array2<f64> {
        let mut x = Array2::zeros((items.len(), self.d + self.k));
        for (r, (z0, skill)) in items.iter().enumerate() {
            assert!(*skill < self.k);
            for (i, &b) in z0.bits().iter().enumerate() {
                x[[r, i]] = b as f64;
            }
            x[[r, self.d + skill]] = 1.0;
        }
        x
    }

    /// Per-bit probability that the successor bit is 1: the flip mixture
    /// `(1 - z0) * p_flip + z0 * (1 - p_flip)`.
    pub fn alpha(&self, z0: &SymbolicObs, skill: usize) -> Array1<f64> {
        let x = self.input_rows(&[(z0, skill)]);
        let p = self.mlp.output(&x);
        let mut a = Array1::zeros(self.d);
        for i in 0..self.d {
            let z = z0.bits()[i] as f64;
            a[i] = (1.0 - z) * p[[0, i]] + z * (1.0 - p[[0, i]]);
        }
        a
    }

    /// Log-likelihood of `zt` after applying `skill` in `z0`; per-bit
    /// probabilities are clamped to `[eps, 1 - eps]` before the logs.
    pub fn log_prob(&self, z0: &SymbolicObs, skill: usize, zt: &SymbolicObs) -> f64 {
        let a = self.alpha(z0, skill);
        let mut lp = 0.0;
        for i in 0..self.d {
            let ac = a[i].clamp(self.eps, 1.0 - self.eps);
            lp += if zt.bits()[i] == 1 { ac.ln() } else { (1.0 - ac).ln() };
        }
        lp
    }

    /// `(pairs.len(), K)` matrix of `log q(zt | z0, k)` for every skill,
    /// computed with one batched forward pass.
    pub fn log_lik_matrix(&self, pairs: &[(&SymbolicObs, &SymbolicObs)]) -> Array2<f64> {
        let n = pairs.len();
        let mut items = Vec::with_capacity(n * self.k);
        for (z0, _) in pairs {
            for k in 0..self.k {
                items.push((*z0, k));
            }
        }
        let x = self.input_rows(&items);
        let p = self.mlp.output(&x);
        let mut out = Array2::zeros((n, self.k));
        for (row, (z0, zt)) in pairs.iter().enumerate() {
            for k in 0..self.k {
                let flat = row * self.k + k;
                let mut lp = 0.0;
                for i in 0..self.d {
                    let z = z0.bits()[i] as f64;
                    let a = (1.0 - z) * p[[flat, i]] + z * (1.0 - p[[flat, i]]);
                    let ac = a.clamp(self.eps, 1.0 - self.eps);
                    lp += if zt.bits()[i] == 1 { ac.ln() } else { (1.0 - ac).ln() };
                }
                out[[row, k]] = lp;
            }
        }
        out
    }

    /// Most likely successor state: per-bit mode of the factorized
    /// distribution. Bits at exactly alpha = 0.5 keep their `z0` value.
    pub fn successor(&self, z0: &SymbolicObs, skill: usize) -> SymbolicObs {
        let a = self.alpha(z0, skill);
        let bits = (0..self.d)
            .map(|i| {
                if a[i] > 0.5 {
                    1
                } else if a[i] < 0.5 {
                    0
                } else {
                    z0.bits()[i]
                }
            })
            .collect();
        SymbolicObs::new(bits)
    }

    /// Successors for all K skills with one batched forward pass.
    pub fn successors_all(&self, z0: &SymbolicObs) -> Vec<SymbolicObs> {
        let items: Vec<(&SymbolicObs, usize)> = (0..self.k).map(|k| (z0, k)).collect();
        let x = self.input_rows(&items);
        let p = self.mlp.output(&x);
        (0..self.k)
            .map(|k| {
                let bits = (0..self.d)
                    .map(|i| {
                        let z = z0.bits()[i] as f64;
                        let a = (1.0 - z) * p[[k, i]] + z * (1.0 - p[[k, i]]);
                        if a > 0.5 {
                            1
                        } else if a < 0.5 {
                            0
                        } else {
                            z0.bits()[i]
                        }
                    })
                    .collect();
                SymbolicObs::new(bits)
            })
            .collect()
    }

    /// One Adam step on the mean negative log-likelihood of the batch.
    /// Returns the pre-update loss.
    pub fn update(&mut self, batch: &[SymbolicTransition]) -> Result<f64, NnError> {
        assert!(!batch.is_empty());
        let n = batch.len();
        let items: Vec<(&SymbolicObs, usize)> =
            batch.iter().map(|t| (&t.z0, t.skill)).collect();
        let x = self.input_rows(&items);
        let cache = self.mlp.forward(&x);
        let p = &cache.out;
        let mut loss = 0.0;
        let mut dy = Array2::zeros((n, self.d));
        for (r, t) in batch.iter().enumerate() {
            for i in 0..self.d {
                let z = t.z0.bits()[i] as f64;
                let a = (1.0 - z) * p[[r, i]] + z * (1.0 - p[[r, i]]);
                let ac = a.clamp(self.eps, 1.0 - self.eps);
                let target = t.zt.bits()[i] as f64;
                loss -= target * ac.ln() + (1.0 - target) * (1.0 - ac).ln();
                // d(-log lik)/d alpha, zero where the clamp is active,
                // then through d alpha / d p = 1 - 2 z0.
                let da = if a <= self.eps || a >= 1.0 - self.eps {
                    0.0
                } else {
                    -(target / ac - (1.0 - target) / (1.0 - ac)) / n as f64
                };
                dy[[r, i]] = da * (1.0 - 2.0 * z);
            }
        }
        loss /= n as f64;
        if !loss.is_finite() {
            return Err(NnError::NonFiniteLoss);
        }
        let (grads, _) = self.mlp.backward(&cache, &dy);
        self.opt.step(&mut self.mlp, &grads)?;
        Ok(loss)
    }
}

#[derive(Clone, Debug)]
pub struct SkillDiscriminator {
    d: usize,
    k: usize,
    mlp: Mlp,
    opt: AdamState,
}

impl SkillDiscriminator {
    /// Classifier `[z0, zT, z0 xor zT] -> K logits`.
    pub fn new(
        d: usize,
        k: usize,
        hidden: &[usize],
        lr: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut dims = vec![3 * d];
        dims.extend_from_slice(hidden);
        dims.push(k);
        let mlp = Mlp::new(&dims, OutputHead::Linear, rng);
        let opt = AdamState::new(&mlp, lr);
        SkillDiscriminator { d, k, mlp, opt }
    }

    pub fn from_parts(d: usize, k: usize, mlp: Mlp, opt: AdamState) -> Self {
        assert_eq!(mlp.input_dim(), 3 * d);
        assert_eq!(mlp.output_dim(), k);
        SkillDiscriminator { d, k, mlp, opt }
    }

    pub fn symbolic_dim(&self) -> usize {
        self.d
    }

    pub fn num_skills(&self) -> usize {
        self.k
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.opt
    }

    fn input_rows(&self, pairs: &[(&SymbolicObs, &SymbolicObs)]) -> Array2<f64> {
        let mut x = Array2::zeros((pairs.len(), 3 * self.d));
        for (r, (z0, zt)) in pairs.iter().enumerate() {
            for i in 0..self.d {
                let a = z0.bits()[i];
                let b = zt.bits()[i];
                x[[r, i]] = a as f64;
                x[[r, self.d + i]] = b as f64;
                x[[r, 2 * self.d + i]] = (a ^ b) as f64;
            }
        }
        x
    }

    pub fn logits_matrix(&self, pairs: &[(&SymbolicObs, &SymbolicObs)]) -> Array2<f64> {
        self.mlp.output(&self.input_rows(pairs))
    }

    /// One Adam step on the mean cross-entropy of the batch. Returns the
    /// pre-update loss.
    pub fn update(&mut self, batch: &[SymbolicTransition]) -> Result<f64, NnError> {
        assert!(!batch.is_empty());
        let n = batch.len();
        let pairs: Vec<(&SymbolicObs, &SymbolicObs)> =
            batch.iter().map(|t| (&t.z0, &t.zt)).collect();
        let x = self.input_rows(&pairs);
        let cache = self.mlp.forward(&x);
        let log_post = log_softmax_rows(&cache.out);
        let mut loss = 0.0;
        let mut dy = log_post.mapv(f64::exp);
        for (r, t) in batch.iter().enumerate() {
            assert!(t.skill < self.k);
            loss -= log_post[[r, t.skill]];
            dy[[r, t.skill]] -= 1.0;
        }
        loss /= n as f64;
        dy /= n as f64;
        if !loss.is_finite() {
            return Err(NnError::NonFiniteLoss);
        }
        let (grads, _) = self.mlp.backward(&cache, &dy);
        self.opt.step(&mut self.mlp, &grads)?;
        Ok(loss)
    }
}

/// Row-wise log-softmax via the max-shifted log-sum-exp.
pub fn log_softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        row.mapv_inplace(|v| v - lse);
    }
    out
}

/// The model the training loop scores skills with: either the forward model
/// (posteriors via Bayes' rule) or the discriminator ablation.
#[derive(Clone, Debug)]
pub enum SkillModel {
    Forward(ForwardModel),
    Discriminator(SkillDiscriminator),
}

impl SkillModel {
    pub fn num_skills(&self) -> usize {
        match self {
            SkillModel::Forward(fm) => fm.num_skills(),
            SkillModel::Discriminator(d) => d.num_skills(),
        }
    }

    /// `(pairs.len(), K)` matrix of `log q(k | z0, zT)`, normalized per row.
    pub fn posterior_log_matrix(&self, pairs: &[(&SymbolicObs, &SymbolicObs)]) -> Array2<f64> {
        match self {
            SkillModel::Forward(fm) => log_softmax_rows(&fm.log_lik_matrix(pairs)),
            SkillModel::Discriminator(d) => log_softmax_rows(&d.logits_matrix(pairs)),
        }
    }

    /// Transition log-likelihoods when the model defines them.
    pub fn log_lik_matrix(&self, pairs: &[(&SymbolicObs, &SymbolicObs)]) -> Option<Array2<f64>> {
        match self {
            SkillModel::Forward(fm) => Some(fm.log_lik_matrix(pairs)),
            SkillModel::Discriminator(_) => None,
        }
    }

    pub fn update(&mut self, batch: &[SymbolicTransition]) -> Result<f64, NnError> {
        match self {
            SkillModel::Forward(fm) => fm.update(batch),
            SkillModel::Discriminator(d) => d.update(batch),
        }
    }

    pub fn forward_model(&self) -> Option<&ForwardModel> {
        match self {
            SkillModel::Forward(fm) => Some(fm),
            SkillModel::Discriminator(_) => None,
        }
    }
}
