//! Intrinsic skill reward from the skill model's posterior.
//!
//! The executed skill's log-posterior is clipped from below at `-2 ln K`.
//! Second-best normalization subtracts the second-highest clipped score
//! across all K skills (the executed skill included in the ranking), so only
//! the uniquely best-explained skill earns a positive reward. Without it,
//! `ln K` is added instead, zeroing the reward at a uniform posterior. The
//! novelty bonus adds the negative best-skill transition log-likelihood,
//! rewarding endpoints no current skill predicts well.

#[derive(Clone, Copy, Debug)]
pub struct RewardConfig {
    pub num_skills: usize,
    pub second_best_norm: bool,
    pub novelty_bonus: bool,
}

impl RewardConfig {
    pub fn new(num_skills: usize) -> Self {
        RewardConfig {
            num_skills,
            second_best_norm: true,
            novelty_bonus: true,
        }
    }
}

/// Reward for `skill` given the normalized log-posterior over all skills and
/// (when the model provides them) the per-skill transition log-likelihoods.
pub fn compute_reward(
    posterior_log: &[f64],
    log_lik: Option<&[f64]>,
    skill: usize,
    cfg: &RewardConfig,
) -> f64 {
    let k = cfg.num_skills;
    assert_eq!(posterior_log.len(), k);
    assert!(skill < k);
    let floor = -2.0 * (k as f64).ln();
    let clipped: Vec<f64> = posterior_log.iter().map(|&v| v.max(floor)).collect();
    let mut reward = if cfg.second_best_norm {
        let (mut top, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &v in &clipped {
            if v > top {
                second = top;
                top = v;
            } else if v > second {
                second = v;
            }
        }
        // K = 1 has no second-best; the skill is trivially identifiable.
        let second = if k == 1 { clipped[0] } else { second };
        clipped[skill] - second
    } else {
        clipped[skill] + (k as f64).ln()
    };
    if cfg.novelty_bonus {
        let lik = log_lik.expect("novelty bonus needs transition likelihoods");
        assert_eq!(lik.len(), k);
        let best = lik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        reward -= best;
    }
    reward
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(k: usize, sbn: bool, novelty: bool) -> RewardConfig {
        RewardConfig {
            num_skills: k,
            second_best_norm: sbn,
            novelty_bonus: novelty,
        }
    }

    #[test]
    fn uniform_posterior_gives_zero_reward() {
        let k = 5;
        let logs = vec![-(k as f64).ln(); k];
        for skill in 0..k {
            assert_relative_eq!(
                compute_reward(&logs, None, skill, &cfg(k, true, false)),
                0.0,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                compute_reward(&logs, None, skill, &cfg(k, false, false)),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn low_posteriors_clip_at_the_floor() {
        let k = 4;
        let floor = -2.0 * 4.0f64.ln();
        // Skill 0 explains everything; skill 3's tiny posterior clips.
        let logs = vec![-0.01, -6.0, -7.0, -30.0];
        let r = compute_reward(&logs, None, 3, &cfg(k, false, false));
        assert_relative_eq!(r, floor + 4.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn two_skill_margin_uses_the_clipped_runner_up() {
        // Posterior (0.8, 0.2): the runner-up's log 0.2 lies below the
        // -2 ln 2 floor, so the margin is ln 0.8 + 2 ln 2 = ln 3.2.
        let logs = vec![0.8f64.ln(), 0.2f64.ln()];
        let r = compute_reward(&logs, None, 0, &cfg(2, true, false));
        assert_relative_eq!(r, 3.2f64.ln(), epsilon = 1e-12);
        // The loser's own score is the second-highest, so its margin is zero.
        let r = compute_reward(&logs, None, 1, &cfg(2, true, false));
        assert_relative_eq!(r, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn only_the_top_skill_earns_positive_normalized_reward() {
        let logs = vec![-0.2, -1.9, -2.6, -3.3];
        let k = 4;
        for skill in 0..k {
            let r = compute_reward(&logs, None, skill, &cfg(k, true, false));
            if skill == 0 {
                assert!(r > 0.0);
            } else {
                assert!(r <= 0.0);
            }
        }
    }

    #[test]
    fn novelty_bonus_subtracts_best_likelihood() {
        let logs = vec![-0.5, -1.5];
        let lik = vec![-5.0, -3.0];
        let base = compute_reward(&logs, None, 0, &cfg(2, true, false));
        let with = compute_reward(&logs, Some(&lik), 0, &cfg(2, true, true));
        assert_relative_eq!(with, base + 3.0, epsilon = 1e-12);
    }

    #[test]
    #[should_panic(expected = "novelty bonus needs transition likelihoods")]
    fn novelty_bonus_requires_likelihoods() {
        compute_reward(&[-0.5, -1.5], None, 0, &cfg(2, true, true));
    }
}
