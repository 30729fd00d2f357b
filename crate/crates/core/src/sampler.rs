//! Sources of measurement outcomes and coin flips.
//!
//! Every random decision in a round goes through [`OutcomeSampler::pick`]
//! with the full probability vector of the decision, so the same round code
//! can be driven by a seeded stream (Monte Carlo) or by an explicit branch
//! path (exact enumeration).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub trait OutcomeSampler {
    /// Choose an index into `probabilities`. Zero entries are never chosen.
    fn pick(&mut self, probabilities: &[f64]) -> usize;
}

/// Inverse-CDF sampling from one uniform draw per decision.
#[derive(Clone, Debug)]
pub struct RngSampler<R>(pub R);

impl<R: Rng> OutcomeSampler for RngSampler<R> {
    fn pick(&mut self, probabilities: &[f64]) -> usize {
        let total: f64 = probabilities.iter().sum();
        let target = self.0.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in probabilities.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = i;
            if target < acc {
                return i;
            }
        }
        last
    }
}

/// The random stream for one round: independent of scheduling, so round `i`
/// sees the same draws no matter which thread runs it.
pub fn round_stream(master_seed: u64, round_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(round_index);
    rng
}

pub fn round_sampler(master_seed: u64, round_index: u64) -> RngSampler<ChaCha8Rng> {
    RngSampler(round_stream(master_seed, round_index))
}

/// Replays a fixed prefix of branch choices, then takes the first admissible
/// branch at every later decision. Records each decision's admissible
/// branches so a driver can enumerate the whole tree.
#[derive(Clone, Debug, Default)]
pub struct PathSampler {
    prefix: Vec<usize>,
    decisions: Vec<Vec<usize>>,
    taken: Vec<usize>,
    probability: f64,
}

impl PathSampler {
    /// `prefix[i]` is a position within the admissible (nonzero) branches of
    /// decision `i`.
    pub fn new(prefix: Vec<usize>) -> Self {
        PathSampler {
            prefix,
            decisions: Vec::new(),
            taken: Vec::new(),
            probability: 1.0,
        }
    }

    /// Probability of the path walked so far.
    pub fn probability(&self) -> f64 {
        self.probability
    }

    /// Number of admissible branches at each decision visited.
    pub fn widths(&self) -> Vec<usize> {
        self.decisions.iter().map(Vec::len).collect()
    }

    /// Positions (within admissible branches) taken at each decision.
    pub fn taken(&self) -> &[usize] {
        &self.taken
    }
}

impl OutcomeSampler for PathSampler {
    fn pick(&mut self, probabilities: &[f64]) -> usize {
        let admissible: Vec<usize> = probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect();
        let step = self.decisions.len();
        let pos = self
            .prefix
            .get(step)
            .copied()
            .unwrap_or(0)
            .min(admissible.len().saturating_sub(1));
        let choice = admissible[pos];
        self.probability *= probabilities[choice];
        self.taken.push(pos);
        self.decisions.push(admissible);
        choice
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rng_sampler_skips_zero_entries() {
        let mut s = round_sampler(1, 0);
        for _ in 0..1000 {
            let i = s.pick(&[0.0, 0.5, 0.0, 0.5]);
            assert!(i == 1 || i == 3);
        }
        assert_eq!(s.pick(&[0.0, 0.0, 1.0]), 2);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(round_stream(7, 3), |r, _| Some(r.gen()))
            .collect();
        let b: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(round_stream(7, 3), |r, _| Some(r.gen()))
            .collect();
        let c: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(round_stream(7, 4), |r, _| Some(r.gen()))
            .collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn path_sampler_follows_prefix() {
        let mut p = PathSampler::new(vec![1, 0]);
        assert_eq!(p.pick(&[0.25, 0.0, 0.75]), 2);
        assert_eq!(p.pick(&[0.5, 0.5]), 0);
        assert_eq!(p.pick(&[0.0, 1.0]), 1);
        assert_eq!(p.widths(), vec![2, 2, 1]);
        assert!((p.probability() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn empirical_frequencies_follow_probabilities() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        let mut counts = [0usize; 4];
        let mut s = round_sampler(99, 0);
        let n = 100_000;
        for _ in 0..n {
            counts[s.pick(&probs)] += 1;
        }
        for (c, p) in counts.iter().zip(probs) {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - p).abs() < 3.0 * sigma);
        }
    }
}
