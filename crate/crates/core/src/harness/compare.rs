use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::losses::Loss;
use crate::stat_core::{run_online, Potential, Strategy};

use super::Sequence;

#[derive(Clone, Debug, PartialEq)]
pub struct StrategyRun {
    pub name: String,
    pub repetitions: usize,
    /// Mean cumulative regret after each round, rounds 0..=n.
    pub regret: Vec<f64>,
    /// Mean Σ_t K_t (randomized rule only, else 0).
    pub k_sum: f64,
    /// Mean final potential U_n(ζ_n).
    pub final_potential: f64,
}

impl StrategyRun {
    pub fn final_regret(&self) -> f64 {
        *self.regret.last().unwrap_or(&0.0)
    }
}

/// Plays every strategy on the same sequence against the same comparator
/// predictions. Randomized strategies run `reps` times with seeds
/// seed, seed+1, ...; deterministic ones once.
pub fn compare_strategies(
    p: &dyn Potential,
    strategies: &[Strategy],
    seq: &Sequence,
    loss: &Loss,
    b: f64,
    comparator_predictions: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<StrategyRun>> {
    if comparator_predictions.len() != seq.len() {
        return domain("one comparator prediction per round is required");
    }
    if reps == 0 {
        return domain("at least one repetition is required");
    }
    let comp: Vec<f64> = comparator_predictions.iter().zip(seq).map(|(c, (_, y))| loss.value(*c, *y)).collect();
    let mut out = Vec::with_capacity(strategies.len());
    for s in strategies {
        let reps = if s.is_deterministic() { 1 } else { reps };
        let mut regret = vec![0.0; seq.len() + 1];
        let (mut k_sum, mut fin) = (0.0, 0.0);
        for r in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let traj = run_online(p, s, seq, loss, b, &mut rng)?;
            let mut acc = 0.0;
            for (i, round) in traj.rounds.iter().enumerate() {
                acc += round.loss - comp[i];
                regret[i + 1] += acc / reps as f64;
            }
            k_sum += traj.k_t.iter().sum::<f64>() / reps as f64;
            fin += traj.potential_values.last().copied().unwrap_or(0.0) / reps as f64;
        }
        out.push(StrategyRun { name: s.name().to_string(), repetitions: reps, regret, k_sum, final_potential: fin });
    }
    Ok(out)
}

/// `round,<name>_regret,...` with one row per round 0..=n.
pub fn comparison_csv(runs: &[StrategyRun]) -> String {
    let mut s = String::from("round");
    for r in runs {
        s.push(',');
        s.push_str(&r.name);
        s.push_str("_regret");
    }
    s.push('\n');
    let n = runs.first().map_or(0, |r| r.regret.len());
    for t in 0..n {
        s.push_str(&t.to_string());
        for r in runs {
            s.push(',');
            s.push_str(&r.regret[t].to_string());
        }
        s.push('\n');
    }
    s
}
