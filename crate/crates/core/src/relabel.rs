//! Constrained skill relabelling over a set of collected episodes.
//!
//! A Bernoulli draw marks each episode as relabelable; episodes that ended
//! without a symbolic change are always kept out. The marked episodes' own
//! labels, sorted ascending, form the slot multiset, and a minimum-cost
//! assignment redistributes those slots so that total posterior log-probability
//! is maximized. Unmarked episodes keep their labels, and the overall label
//! multiset of the marked subset is preserved.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::assignment::solve_assignment;
use crate::cursor_env::EpisodeRecord;
use crate::skill_model::SkillModel;

/// Relabelled skills plus the score matrices evaluated for every episode,
/// kept so reward computation can reuse them without another forward pass.
pub struct RelabelResult {
    pub skills: Vec<usize>,
    pub posterior_log: Array2<f64>,
    pub log_lik: Option<Array2<f64>>,
    pub num_changed: usize,
}

/// Reassign the labels of `eligible` rows among themselves to maximize the
/// summed `scores[row, label]`. Slots are the eligible rows' original labels
/// in ascending order. Ineligible rows keep their labels.
pub fn relabel_with_scores(
    labels: &[usize],
    eligible: &[bool],
    scores: &Array2<f64>,
) -> Vec<usize> {
    assert_eq!(labels.len(), eligible.len());
    assert_eq!(labels.len(), scores.nrows());
    let rows: Vec<usize> = (0..labels.len()).filter(|&i| eligible[i]).collect();
    let mut out = labels.to_vec();
    if rows.len() <= 1 {
        return out;
    }
    let mut slots: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
    slots.sort_unstable();
    let n = rows.len();
    let mut cost = Array2::zeros((n, n));
    for (a, &i) in rows.iter().enumerate() {
        for (b, &slot) in slots.iter().enumerate() {
            cost[[a, b]] = -scores[[i, slot]];
        }
    }
    let assign = solve_assignment(&cost);
    for (a, &i) in rows.iter().enumerate() {
        out[i] = slots[assign[a]];
    }
    out
}

/// Evaluate the model on every episode, mark a `fraction` Bernoulli subset
/// (excluding episodes whose symbolic state never changed), and relabel the
/// marked subset. The Bernoulli draw happens for every episode in order, so
/// rng consumption does not depend on the outcomes.
pub fn relabel_episodes(
    episodes: &[Arc<EpisodeRecord>],
    model: &SkillModel,
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> RelabelResult {
    let labels: Vec<usize> = episodes.iter().map(|e| e.skill).collect();
    let eligible: Vec<bool> = episodes
        .iter()
        .map(|e| rng.random::<f64>() < fraction && e.z0 != e.z_end)
        .collect();
    let pairs: Vec<_> = episodes.iter().map(|e| (&e.z0, &e.z_end)).collect();
    let posterior_log = model.posterior_log_matrix(&pairs);
    let log_lik = model.log_lik_matrix(&pairs);
    let skills = relabel_with_scores(&labels, &eligible, &posterior_log);
    let num_changed = skills
        .iter()
        .zip(&labels)
        .filter(|(a, b)| a != b)
        .count();
    RelabelResult {
        skills,
        posterior_log,
        log_lik,
        num_changed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use rand::SeedableRng;

    fn counts(labels: &[usize], k: usize) -> Vec<usize> {
        let mut c = vec![0; k];
        for &l in labels {
            c[l] += 1;
        }
        c
    }

    #[test]
    fn swaps_two_mismatched_episodes() {
        // Episode 0 is best explained by skill 0 but labelled 1, and vice
        // versa; relabelling swaps them.
        let scores = arr2(&[[0.0, -1.0], [-1.0, 0.0]]);
        let out = relabel_with_scores(&[1, 0], &[true, true], &scores);
        assert_eq!(out, vec![0, 1]);
    }

    #[test]
    fn ineligible_rows_keep_labels_and_slots() {
        // Row 1 is frozen with label 1; rows 0 and 2 trade labels 2 and 0,
        // each moving to the label its scores favor.
        let scores = arr2(&[
            [0.0, -5.0, -9.0],
            [0.0, -5.0, -9.0],
            [-9.0, -5.0, 0.0],
        ]);
        let out = relabel_with_scores(&[2, 1, 0], &[true, false, true], &scores);
        assert_eq!(out, vec![0, 1, 2]);
    }

    #[test]
    fn label_multiset_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = 7;
            let k = 4;
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let eligible: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.6).collect();
            let scores =
                Array2::from_shape_fn((n, k), |_| rng.random::<f64>() * 4.0 - 2.0);
            let out = relabel_with_scores(&labels, &eligible, &scores);
            assert_eq!(counts(&out, k), counts(&labels, k));
            for i in 0..n {
                if !eligible[i] {
                    assert_eq!(out[i], labels[i]);
                }
            }
        }
    }

    #[test]
    fn matches_brute_force_on_small_sets() {
        fn brute(labels: &[usize], eligible: &[bool], scores: &Array2<f64>) -> f64 {
            fn go(
                rows: &[usize],
                slots: &[usize],
                scores: &Array2<f64>,
                a: usize,
                taken: &mut Vec<bool>,
            ) -> f64 {
                if a == rows.len() {
                    return 0.0;
                }
                let mut best = f64::NEG_INFINITY;
                for b in 0..slots.len() {
                    if !taken[b] {
                        taken[b] = true;
                        let v = scores[[rows[a], slots[b]]]
                            + go(rows, slots, scores, a + 1, taken);
                        best = best.max(v);
                        taken[b] = false;
                    }
                }
                best
            }
            let rows: Vec<usize> =
                (0..labels.len()).filter(|&i| eligible[i]).collect();
            let mut slots: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
            slots.sort_unstable();
            let mut taken = vec![false; slots.len()];
            go(&rows, &slots, scores, 0, &mut taken)
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..15 {
            let n = 6;
            let k = 3;
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let eligible: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.7).collect();
            if eligible.iter().filter(|&&e| e).count() < 2 {
                continue;
            }
            let scores =
                Array2::from_shape_fn((n, k), |_| rng.random::<f64>() * 6.0 - 3.0);
            let out = relabel_with_scores(&labels, &eligible, &scores);
            let achieved: f64 = (0..n)
                .filter(|&i| eligible[i])
                .map(|i| scores[[i, out[i]]])
                .sum();
            let best = brute(&labels, &eligible, &scores);
            assert!((achieved - best).abs() < 1e-9, "{achieved} vs {best}");
        }
    }

    #[test]
    fn zero_fraction_changes_nothing() {
        let scores = arr2(&[[0.0, -1.0], [-1.0, 0.0]]);
        let out = relabel_with_scores(&[1, 0], &[false, false], &scores);
        assert_eq!(out, vec![1, 0]);
    }
}
