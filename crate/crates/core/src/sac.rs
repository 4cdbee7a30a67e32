//! Soft actor-critic with twin critics, target networks, and a fixed
//! entropy temperature. Policies are tanh-squashed Gaussians; skill
//! conditioning appends a one-hot skill code to the observation.

use crate::cursor_env::{Action, SkillPolicy};
use crate::nn::{
    mean_action, sample_squashed, split_gaussian, squashed_backward, AdamState, Mlp, NnError,
    OutputHead,
};
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug, PartialEq)]
pub struct SacConfig {
    /// Environment observation width, before skill conditioning.
    pub obs_dim: usize,
    /// Number of skills one-hot appended to observations; 0 disables
    /// conditioning.
    pub num_skills: usize,
    pub action_dim: usize,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub gamma: f64,
    pub tau: f64,
    /// Fixed entropy temperature.
    pub alpha: f64,
    pub log_std_min: f64,
    pub log_std_max: f64,
}

impl SacConfig {
    pub fn new(obs_dim: usize, num_skills: usize, action_dim: usize) -> Self {
        SacConfig {
            obs_dim,
            num_skills,
            action_dim,
            hidden: vec![512, 512],
            lr: 3e-4,
            gamma: 0.99,
            tau: 0.005,
            alpha: 0.1,
            log_std_min: -20.0,
            log_std_max: 2.0,
        }
    }

    /// Width of the conditioned observation fed to the networks.
    pub fn input_dim(&self) -> usize {
        self.obs_dim + self.num_skills
    }
}

/// One stored environment transition, observations already conditioned.
/// `terminal` marks a symbolic change (no bootstrapping); `timeout` marks a
/// step-limit cutoff, which still bootstraps.
#[derive(Clone, Debug)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub terminal: bool,
    pub timeout: bool,
}

pub struct TransitionBatch {
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_obs: Array2<f64>,
    /// 1 where the next-state value backs up (everything except terminals).
    pub bootstrap: Array1<f64>,
}

impl TransitionBatch {
    pub fn gather(set: &[Transition], idx: &[usize]) -> Self {
        assert!(!idx.is_empty());
        let in_dim = set[idx[0]].obs.len();
        let act_dim = set[idx[0]].action.len();
        let b = idx.len();
        let mut obs = Array2::zeros((b, in_dim));
        let mut actions = Array2::zeros((b, act_dim));
        let mut rewards = Array1::zeros(b);
        let mut next_obs = Array2::zeros((b, in_dim));
        let mut bootstrap = Array1::zeros(b);
        for (row, &i) in idx.iter().enumerate() {
            let t = &set[i];
            obs.row_mut(row).assign(&Array1::from_vec(t.obs.clone()));
            actions
                .row_mut(row)
                .assign(&Array1::from_vec(t.action.clone()));
            rewards[row] = t.reward;
            next_obs
                .row_mut(row)
                .assign(&Array1::from_vec(t.next_obs.clone()));
            bootstrap[row] = if t.terminal { 0.0 } else { 1.0 };
        }
        TransitionBatch {
            obs,
            actions,
            rewards,
            next_obs,
            bootstrap,
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SacLosses {
    pub critic1: f64,
    pub critic2: f64,
    pub actor: f64,
    pub mean_q: f64,
    pub mean_log_prob: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActMode {
    Sample,
    Deterministic,
}

#[derive(Clone, Debug)]
pub struct SacAgent {
    pub(crate) cfg: SacConfig,
    pub(crate) actor: Mlp,
    pub(crate) critic1: Mlp,
    pub(crate) critic2: Mlp,
    pub(crate) target1: Mlp,
    pub(crate) target2: Mlp,
    pub(crate) actor_opt: AdamState,
    pub(crate) critic1_opt: AdamState,
    pub(crate) critic2_opt: AdamState,
}

impl SacAgent {
    pub fn new(cfg: SacConfig, rng: &mut ChaCha8Rng) -> Self {
        let head = OutputHead::Gaussian {
            log_std_min: cfg.log_std_min,
            log_std_max: cfg.log_std_max,
        };
        let mut actor_dims = vec![cfg.input_dim()];
        actor_dims.extend_from_slice(&cfg.hidden);
        actor_dims.push(2 * cfg.action_dim);
        let actor = Mlp::new(&actor_dims, head, rng);
        let mut critic_dims = vec![cfg.input_dim() + cfg.action_dim];
        critic_dims.extend_from_slice(&cfg.hidden);
        critic_dims.push(1);
        let critic1 = Mlp::new(&critic_dims, OutputHead::Linear, rng);
        let critic2 = Mlp::new(&critic_dims, OutputHead::Linear, rng);
        let target1 = critic1.clone();
        let target2 = critic2.clone();
        let actor_opt = AdamState::new(&actor, cfg.lr);
        let critic1_opt = AdamState::new(&critic1, cfg.lr);
        let critic2_opt = AdamState::new(&critic2, cfg.lr);
        SacAgent {
            cfg,
            actor,
            critic1,
            critic2,
            target1,
            target2,
            actor_opt,
            critic1_opt,
            critic2_opt,
        }
    }

    pub fn config(&self) -> &SacConfig {
        &self.cfg
    }

    /// Appends the one-hot skill code to a raw observation.
    pub fn augment_obs(&self, obs: &[f64], skill: usize) -> Vec<f64> {
        assert_eq!(obs.len(), self.cfg.obs_dim);
        let mut out = Vec::with_capacity(self.cfg.input_dim());
        out.extend_from_slice(obs);
        if self.cfg.num_skills > 0 {
            assert!(skill < self.cfg.num_skills);
            let mut onehot = vec![0.0; self.cfg.num_skills];
            onehot[skill] = 1.0;
            out.extend_from_slice(&onehot);
        }
        out
    }

    /// Action for one conditioned observation.
    pub fn act(&self, input: &[f64], mode: ActMode, rng: &mut ChaCha8Rng) -> Vec<f64> {
        assert_eq!(input.len(), self.cfg.input_dim());
        let x = Array2::from_shape_vec((1, input.len()), input.to_vec()).unwrap();
        let params = split_gaussian(&self.actor.output(&x));
        let a = match mode {
            ActMode::Deterministic => mean_action(&params),
            ActMode::Sample => {
                let mut noise = Array2::zeros((1, self.cfg.action_dim));
                for v in noise.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                sample_squashed(&params, &noise).action
            }
        };
        a.row(0).to_vec()
    }

    /// TD targets `r + gamma * bootstrap * (min_i Q'_i(s', a') - alpha log pi(a'|s'))`
    /// with `a'` freshly sampled from the actor using `noise`.
    pub(crate) fn compute_targets(
        &self,
        batch: &TransitionBatch,
        noise: &Array2<f64>,
    ) -> Array1<f64> {
        let params = split_gaussian(&self.actor.output(&batch.next_obs));
        let sample = sample_squashed(&params, noise);
        let xa = concat_cols(&batch.next_obs, &sample.action);
        let q1 = self.target1.output(&xa);
        let q2 = self.target2.output(&xa);
        let b = batch.len();
        let mut y = Array1::zeros(b);
        for i in 0..b {
            let qmin = q1[[i, 0]].min(q2[[i, 0]]);
            let value = qmin - self.cfg.alpha * sample.log_prob[i];
            y[i] = batch.rewards[i] + self.cfg.gamma * batch.bootstrap[i] * value;
        }
        y
    }

    /// One SAC step: both critics on the TD targets, then the actor against
    /// the updated critics, then a Polyak update of the targets.
    pub fn update(
        &mut self,
        batch: &TransitionBatch,
        rng: &mut ChaCha8Rng,
    ) -> Result<SacLosses, NnError> {
        let b = batch.len();
        let m = self.cfg.action_dim;
        let draw = |rng: &mut ChaCha8Rng| {
            let mut n = Array2::zeros((b, m));
            for v in n.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            n
        };
        let noise_next = draw(rng);
        let noise_actor = draw(rng);

        let y = self.compute_targets(batch, &noise_next);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFiniteLoss);
        }

        let obs_act = concat_cols(&batch.obs, &batch.actions);
        let mut critic_losses = [0.0; 2];
        for (ci, (critic, opt)) in [
            (&mut self.critic1, &mut self.critic1_opt),
            (&mut self.critic2, &mut self.critic2_opt),
        ]
        .into_iter()
        .enumerate()
        {
            let cache = critic.forward(&obs_act);
            let mut dq = Array2::zeros((b, 1));
            let mut loss = 0.0;
            for i in 0..b {
                let diff = cache.out[[i, 0]] - y[i];
                loss += diff * diff;
                dq[[i, 0]] = 2.0 * diff / b as f64;
            }
            loss /= b as f64;
            if !loss.is_finite() {
                return Err(NnError::NonFiniteLoss);
            }
            critic_losses[ci] = loss;
            let (grads, _) = critic.backward(&cache, &dq);
            opt.step(critic, &grads)?;
        }

        let actor_cache = self.actor.forward(&batch.obs);
        let params = split_gaussian(&actor_cache.out);
        let sample = sample_squashed(&params, &noise_actor);
        let xa = concat_cols(&batch.obs, &sample.action);
        let c1 = self.critic1.forward(&xa);
        let c2 = self.critic2.forward(&xa);
        let mut actor_loss = 0.0;
        let mut mean_q = 0.0;
        let mut dq1 = Array2::zeros((b, 1));
        let mut dq2 = Array2::zeros((b, 1));
        for i in 0..b {
            let (q1, q2) = (c1.out[[i, 0]], c2.out[[i, 0]]);
            let qmin = q1.min(q2);
            mean_q += qmin / b as f64;
            actor_loss += (self.cfg.alpha * sample.log_prob[i] - qmin) / b as f64;
            if q1 <= q2 {
                dq1[[i, 0]] = -1.0 / b as f64;
            } else {
                dq2[[i, 0]] = -1.0 / b as f64;
            }
        }
        if !actor_loss.is_finite() {
            return Err(NnError::NonFiniteLoss);
        }
        let dxa1 = self.critic1.backward_input(&c1, &dq1);
        let dxa2 = self.critic2.backward_input(&c2, &dq2);
        let in_dim = self.cfg.input_dim();
        let d_action =
            (&dxa1.slice(ndarray::s![.., in_dim..]) + &dxa2.slice(ndarray::s![.., in_dim..]))
                .to_owned();
        let d_log_prob = Array1::from_elem(b, self.cfg.alpha / b as f64);
        let dhead = squashed_backward(&params, &sample, &d_action, &d_log_prob);
        let (actor_grads, _) = self.actor.backward(&actor_cache, &dhead);
        self.actor_opt.step(&mut self.actor, &actor_grads)?;

        self.soft_update();

        Ok(SacLosses {
            critic1: critic_losses[0],
            critic2: critic_losses[1],
            actor: actor_loss,
            mean_q,
            mean_log_prob: sample.log_prob.sum() / b as f64,
        })
    }

    fn soft_update(&mut self) {
        polyak(&mut self.target1, &self.critic1, self.cfg.tau);
        polyak(&mut self.target2, &self.critic2, self.cfg.tau);
    }
}

fn polyak(target: &mut Mlp, source: &Mlp, tau: f64) {
    for (t, s) in target.layers.iter_mut().zip(source.layers()) {
        t.w.zip_mut_with(&s.w, |t, &s| *t = (1.0 - tau) * *t + tau * s);
        t.b.zip_mut_with(&s.b, |t, &s| *t = (1.0 - tau) * *t + tau * s);
    }
}

fn concat_cols(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    ndarray::concatenate(Axis(1), &[a.view(), b.view()]).unwrap()
}

/// Borrowing adapter so a SAC agent drives skill rollouts.
pub struct AgentPolicy<'a> {
    pub agent: &'a SacAgent,
    pub mode: ActMode,
}

impl SkillPolicy for AgentPolicy<'_> {
    fn act(&self, obs: &[f64], skill: usize, rng: &mut ChaCha8Rng) -> Action {
        let input = self.agent.augment_obs(obs, skill);
        let a = self.agent.act(&input, self.mode, rng);
        Action {
            dx: a[0],
            dy: a[1],
            trigger: a[2],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn tiny_config() -> SacConfig {
        SacConfig {
            hidden: vec![16, 16],
            ..SacConfig::new(4, 2, 3)
        }
    }

    fn random_transition(cfg: &SacConfig, r: &mut ChaCha8Rng, terminal: bool) -> Transition {
        fn vec_of(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
            (0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()
        }
        let dim = cfg.input_dim();
        Transition {
            obs: vec_of(dim, r),
            action: vec_of(cfg.action_dim, r),
            reward: r.random::<f64>(),
            next_obs: vec_of(dim, r),
            terminal,
            timeout: false,
        }
    }

    #[test]
    fn actions_are_bounded_and_reproducible() {
        let mut r = rng(1);
        let agent = SacAgent::new(tiny_config(), &mut r);
        let obs = agent.augment_obs(&[0.1, -0.2, 0.3, 0.9], 1);
        let det1 = agent.act(&obs, ActMode::Deterministic, &mut r);
        let det2 = agent.act(&obs, ActMode::Deterministic, &mut r);
        assert_eq!(det1, det2);
        let mut ra = rng(7);
        let mut rb = rng(7);
        let s1 = agent.act(&obs, ActMode::Sample, &mut ra);
        let s2 = agent.act(&obs, ActMode::Sample, &mut rb);
        assert_eq!(s1, s2);
        for v in s1 {
            assert!(v > -1.0 && v < 1.0);
        }
    }

    #[test]
    fn fresh_agent_samples_are_roughly_centred() {
        let mut r = rng(2);
        let cfg = SacConfig {
            hidden: vec![128, 128],
            ..SacConfig::new(4, 2, 3)
        };
        let agent = SacAgent::new(cfg, &mut r);
        let obs = agent.augment_obs(&[0.5, 0.5, 0.0, 1.0], 0);
        let mut mean = vec![0.0; 3];
        let n = 1000;
        for _ in 0..n {
            let a = agent.act(&obs, ActMode::Sample, &mut r);
            for (m, v) in mean.iter_mut().zip(a) {
                *m += v / n as f64;
            }
        }
        for m in mean {
            assert!(m.abs() < 0.15, "dimension mean {m}");
        }
    }

    #[test]
    fn one_hot_conditioning_layout() {
        let mut r = rng(3);
        let agent = SacAgent::new(tiny_config(), &mut r);
        assert_eq!(
            agent.augment_obs(&[1.0, 2.0, 3.0, 4.0], 1),
            vec![1.0, 2.0, 3.0, 4.0, 0.0, 1.0]
        );
        let mut cfg = tiny_config();
        cfg.num_skills = 0;
        cfg.obs_dim = 2;
        let agent = SacAgent::new(cfg, &mut r);
        assert_eq!(agent.augment_obs(&[1.0, 2.0], 0), vec![1.0, 2.0]);
    }

    #[test]
    fn terminal_targets_equal_rewards() {
        let mut r = rng(4);
        let cfg = tiny_config();
        let agent = SacAgent::new(cfg.clone(), &mut r);
        let set: Vec<Transition> = (0..6)
            .map(|i| random_transition(&cfg, &mut r, i % 2 == 0))
            .collect();
        let idx: Vec<usize> = (0..set.len()).collect();
        let batch = TransitionBatch::gather(&set, &idx);
        let mut noise = Array2::zeros((6, 3));
        for v in noise.iter_mut() {
            *v = r.sample(StandardNormal);
        }
        let y = agent.compute_targets(&batch, &noise);
        for (i, t) in set.iter().enumerate() {
            if t.terminal {
                assert_relative_eq!(y[i], t.reward, epsilon = 1e-12);
            } else {
                assert!((y[i] - t.reward).abs() > 1e-9, "timeout row must bootstrap");
            }
        }
    }

    #[test]
    fn critic_gradients_match_finite_differences() {
        let mut r = rng(5);
        let cfg = tiny_config();
        let mut agent = SacAgent::new(cfg.clone(), &mut r);
        let set: Vec<Transition> = (0..5)
            .map(|_| random_transition(&cfg, &mut r, false))
            .collect();
        let idx: Vec<usize> = (0..set.len()).collect();
        let batch = TransitionBatch::gather(&set, &idx);
        let mut noise = Array2::zeros((5, 3));
        for v in noise.iter_mut() {
            *v = r.sample(StandardNormal);
        }
        let y = agent.compute_targets(&batch, &noise);
        let obs_act = concat_cols(&batch.obs, &batch.actions);

        let loss_of = |critic: &Mlp| -> f64 {
            let q = critic.output(&obs_act);
            let mut loss = 0.0;
            for i in 0..5 {
                loss += (q[[i, 0]] - y[i]).powi(2);
            }
            loss / 5.0
        };
        let cache = agent.critic1.forward(&obs_act);
        let mut dq = Array2::zeros((5, 1));
        for i in 0..5 {
            dq[[i, 0]] = 2.0 * (cache.out[[i, 0]] - y[i]) / 5.0;
        }
        let (grads, _) = agent.critic1.backward(&cache, &dq);
        let h = 1e-5;
        for l in 0..agent.critic1.layers().len() {
            for (flat, ((row, col), &an)) in grads.dw[l].indexed_iter().enumerate() {
                if flat % 7 != 0 {
                    continue;
                }
                let orig = agent.critic1.layers[l].w[[row, col]];
                agent.critic1.layers[l].w[[row, col]] = orig + h;
                let up = loss_of(&agent.critic1);
                agent.critic1.layers[l].w[[row, col]] = orig - h;
                let down = loss_of(&agent.critic1);
                agent.critic1.layers[l].w[[row, col]] = orig;
                let fd = (up - down) / (2.0 * h);
                assert!(
                    (fd - an).abs() <= 1e-6 + 1e-3 * fd.abs().max(an.abs()),
                    "critic layer {l} w[{row},{col}]: fd {fd} vs analytic {an}"
                );
            }
        }
    }

    #[test]
    fn actor_gradients_match_finite_differences() {
        let mut r = rng(6);
        let cfg = tiny_config();
        let mut agent = SacAgent::new(cfg.clone(), &mut r);
        let set: Vec<Transition> = (0..4)
            .map(|_| random_transition(&cfg, &mut r, false))
            .collect();
        let idx: Vec<usize> = (0..set.len()).collect();
        let batch = TransitionBatch::gather(&set, &idx);
        let mut noise = Array2::zeros((4, 3));
        for v in noise.iter_mut() {
            *v = r.sample(StandardNormal);
        }

        let loss_of = |actor: &Mlp, agent: &SacAgent| -> f64 {
            let params = split_gaussian(&actor.output(&batch.obs));
            let sample = sample_squashed(&params, &noise);
            let xa = concat_cols(&batch.obs, &sample.action);
            let q1 = agent.critic1.output(&xa);
            let q2 = agent.critic2.output(&xa);
            let mut loss = 0.0;
            for i in 0..4 {
                let qmin = q1[[i, 0]].min(q2[[i, 0]]);
                loss += (agent.cfg.alpha * sample.log_prob[i] - qmin) / 4.0;
            }
            loss
        };

        let cache = agent.actor.forward(&batch.obs);
        let params = split_gaussian(&cache.out);
        let sample = sample_squashed(&params, &noise);
        let xa = concat_cols(&batch.obs, &sample.action);
        let c1 = agent.critic1.forward(&xa);
        let c2 = agent.critic2.forward(&xa);
        let mut dq1 = Array2::zeros((4, 1));
        let mut dq2 = Array2::zeros((4, 1));
        for i in 0..4 {
            if c1.out[[i, 0]] <= c2.out[[i, 0]] {
                dq1[[i, 0]] = -0.25;
            } else {
                dq2[[i, 0]] = -0.25;
            }
        }
        let dxa1 = agent.critic1.backward_input(&c1, &dq1);
        let dxa2 = agent.critic2.backward_input(&c2, &dq2);
        let in_dim = agent.cfg.input_dim();
        let d_action = (&dxa1.slice(ndarray::s![.., in_dim..])
            + &dxa2.slice(ndarray::s![.., in_dim..]))
            .to_owned();
        let d_log_prob = Array1::from_elem(4, agent.cfg.alpha / 4.0);
        let dhead = squashed_backward(&params, &sample, &d_action, &d_log_prob);
        let (grads, _) = agent.actor.backward(&cache, &dhead);

        let h = 1e-5;
        for l in 0..agent.actor.layers().len() {
            for (flat, ((row, col), &an)) in grads.dw[l].indexed_iter().enumerate() {
                if flat % 5 != 0 {
                    continue;
                }
                let orig = agent.actor.layers[l].w[[row, col]];
                agent.actor.layers[l].w[[row, col]] = orig + h;
                let actor_up = agent.actor.clone();
                let up = loss_of(&actor_up, &agent);
                agent.actor.layers[l].w[[row, col]] = orig - h;
                let actor_down = agent.actor.clone();
                let down = loss_of(&actor_down, &agent);
                agent.actor.layers[l].w[[row, col]] = orig;
                let fd = (up - down) / (2.0 * h);
                assert!(
                    (fd - an).abs() <= 1e-6 + 1e-3 * fd.abs().max(an.abs()),
                    "actor layer {l} w[{row},{col}]: fd {fd} vs analytic {an}"
                );
            }
        }
    }

    #[test]
    fn polyak_updates_mix_parameters() {
        let mut r = rng(8);
        let mut agent = SacAgent::new(tiny_config(), &mut r);
        // Fresh targets are exact copies.
        assert_eq!(agent.target1.layers()[0].w, agent.critic1.layers()[0].w);
        let before = agent.target1.layers()[0].w[[0, 0]];
        agent.critic1.layers[0].w[[0, 0]] = before + 1.0;
        agent.cfg.tau = 0.25;
        agent.soft_update();
        let after = agent.target1.layers()[0].w[[0, 0]];
        assert_relative_eq!(after, before + 0.25, epsilon = 1e-12);
    }

    #[test]
    fn update_runs_and_reports_finite_losses() {
        let mut r = rng(9);
        let cfg = tiny_config();
        let mut agent = SacAgent::new(cfg.clone(), &mut r);
        let set: Vec<Transition> = (0..32)
            .map(|i| random_transition(&cfg, &mut r, i % 5 == 0))
            .collect();
        let idx: Vec<usize> = (0..set.len()).collect();
        let batch = TransitionBatch::gather(&set, &idx);
        let losses = agent.update(&batch, &mut r).unwrap();
        for v in [
            losses.critic1,
            losses.critic2,
            losses.actor,
            losses.mean_q,
            losses.mean_log_prob,
        ] {
            assert!(v.is_finite());
        }
        assert_eq!(agent.actor_opt.steps(), 1);
        assert_eq!(agent.critic1_opt.steps(), 1);
    }

    #[test]
    fn non_finite_rewards_are_rejected() {
        let mut r = rng(10);
        let cfg = tiny_config();
        let mut agent = SacAgent::new(cfg.clone(), &mut r);
        let mut set: Vec<Transition> = (0..4)
            .map(|_| random_transition(&cfg, &mut r, false))
            .collect();
        set[2].reward = f64::NAN;
        let idx: Vec<usize> = (0..set.len()).collect();
        let batch = TransitionBatch::gather(&set, &idx);
        assert_eq!(agent.update(&batch, &mut r), Err(NnError::NonFiniteLoss));
    }

    #[test]
    fn policy_improves_on_a_bandit() {
        // One state, one action dimension, reward equal to the action.
        let mut r = rng(11);
        let cfg = SacConfig {
            hidden: vec![32, 32],
            lr: 1e-3,
            ..SacConfig::new(1, 0, 1)
        };
        let mut agent = SacAgent::new(cfg.clone(), &mut r);
        let initial = agent.act(&[0.0], ActMode::Deterministic, &mut r)[0];
        for _ in 0..500 {
            let set: Vec<Transition> = (0..64)
                .map(|_| {
                    let a = r.random::<f64>() * 2.0 - 1.0;
                    Transition {
                        obs: vec![0.0],
                        action: vec![a],
                        reward: a,
                        next_obs: vec![0.0],
                        terminal: true,
                        timeout: false,
                    }
                })
                .collect();
            let idx: Vec<usize> = (0..set.len()).collect();
            let batch = TransitionBatch::gather(&set, &idx);
            agent.update(&batch, &mut r).unwrap();
        }
        let final_a = agent.act(&[0.0], ActMode::Deterministic, &mut r)[0];
        assert!(
            final_a > initial && final_a > 0.5,
            "policy did not improve: {initial} -> {final_a}"
        );
    }

    #[test]
    fn policy_adapter_maps_action_channels() {
        let mut r = rng(12);
        let cfg = SacConfig {
            hidden: vec![8],
            ..SacConfig::new(11, 2, 3)
        };
        let agent = SacAgent::new(cfg, &mut r);
        let policy = AgentPolicy {
            agent: &agent,
            mode: ActMode::Deterministic,
        };
        let obs = vec![0.5; 11];
        let a = policy.act(&obs, 1, &mut r);
        let direct = agent.act(&agent.augment_obs(&obs, 1), ActMode::Deterministic, &mut r);
        assert_eq!(a.dx, direct[0]);
        assert_eq!(a.dy, direct[1]);
        assert_eq!(a.trigger, direct[2]);
    }
}
