//! Example oracles: `EX(c, D)` emits labeled draws, `EX(D)` unlabeled ones.
//!
//! Learning code only ever sees oracles. The pmf behind an oracle is never
//! exposed, so algorithms cannot peek at the distribution they are meant to
//! learn about; only the experiment harness holds the ground truth.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;

use crate::distributions::{DiscretePmf, Point};
use crate::error::{Error, Result};
use crate::hypotheses::Hypothesis;

pub struct SampleOracle {
    pmf: DiscretePmf,
    concept: Option<Hypothesis>,
    index: WeightedIndex<f64>,
    rng: ChaCha8Rng,
}

impl SampleOracle {
    pub fn labeled(pmf: DiscretePmf, concept: Hypothesis, seed: u64) -> Self {
        Self::build(pmf, Some(concept), seed)
    }

    pub fn unlabeled(pmf: DiscretePmf, seed: u64) -> Self {
        Self::build(pmf, None, seed)
    }

    fn build(pmf: DiscretePmf, concept: Option<Hypothesis>, seed: u64) -> Self {
        let index = WeightedIndex::new(pmf.masses()).expect("pmf masses are valid weights");
        SampleOracle {
            pmf,
            concept,
            index,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn is_labeled(&self) -> bool {
        self.concept.is_some()
    }

    pub fn draw_unlabeled(&mut self) -> Point {
        self.pmf.support()[self.index.sample(&mut self.rng)]
    }

    pub fn draw_labeled(&mut self) -> Result<(Point, bool)> {
        let concept = self.concept.as_ref().ok_or(Error::UnlabeledOracle)?;
        let x = self.pmf.support()[self.index.sample(&mut self.rng)];
        Ok((x, concept.label(x)))
    }

    /// Counts from `m` draws, realized as one multinomial draw. Only points
    /// that were drawn at least once are returned, in increasing order.
    pub fn draw_counts(&mut self, m: u64) -> Vec<(Point, u64)> {
        let mut out = Vec::new();
        let mut remaining = m;
        let mut rest = 1.0;
        let last = self
            .pmf
            .masses()
            .iter()
            .rposition(|&p| p > 0.0)
            .expect("pmf has positive mass");
        for (i, (x, p)) in self.pmf.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let k = if p <= 0.0 {
                0
            } else if i == last {
                remaining
            } else {
                let share = if rest > p { p / rest } else { 1.0 };
                Binomial::new(remaining, share)
                    .expect("share is a probability")
                    .sample(&mut self.rng)
            };
            rest -= p;
            remaining -= k;
            if k > 0 {
                out.push((x, k));
            }
        }
        out
    }

    /// Labeled counterpart of [`SampleOracle::draw_counts`].
    pub fn draw_labeled_counts(&mut self, m: u64) -> Result<Vec<(Point, bool, u64)>> {
        if self.concept.is_none() {
            return Err(Error::UnlabeledOracle);
        }
        let counts = self.draw_counts(m);
        let concept = self.concept.as_ref().expect("checked above");
        Ok(counts
            .into_iter()
            .map(|(x, k)| (x, concept.label(x), k))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_oracle() {
        let c = Hypothesis::indicator(3);
        let mut o = SampleOracle::labeled(DiscretePmf::point_mass(3), c, 1);
        for _ in 0..10 {
            assert_eq!(o.draw_labeled().unwrap(), (3, true));
        }
        let mut u = SampleOracle::unlabeled(DiscretePmf::point_mass(3), 1);
        assert_eq!(u.draw_unlabeled(), 3);
        assert_eq!(u.draw_counts(17), vec![(3, 17)]);
    }

    #[test]
    fn unlabeled_oracle_refuses_labels() {
        let mut o = SampleOracle::unlabeled(DiscretePmf::uniform(1, 2).unwrap(), 1);
        assert_eq!(o.draw_labeled(), Err(Error::UnlabeledOracle));
        assert!(o.draw_labeled_counts(3).is_err());
    }

    #[test]
    fn labels_match_concept() {
        let c = Hypothesis::interval(2, 3);
        let mut o = SampleOracle::labeled(DiscretePmf::uniform(1, 5).unwrap(), c.clone(), 9);
        for _ in 0..100_000 {
            let (x, y) = o.draw_labeled().unwrap();
            assert_eq!(y, c.label(x));
        }
    }

    #[test]
    fn labeled_and_unlabeled_share_point_sequence() {
        let p = DiscretePmf::binomial(6, 0.4).unwrap();
        let mut a = SampleOracle::labeled(p.clone(), Hypothesis::interval(0, 2), 42);
        let mut b = SampleOracle::unlabeled(p, 42);
        for _ in 0..1000 {
            assert_eq!(a.draw_labeled().unwrap().0, b.draw_unlabeled());
        }
    }

    #[test]
    fn frequencies_match_pmf() {
        let p = DiscretePmf::from_pairs([(1, 0.2), (2, 0.5), (3, 0.3)]).unwrap();
        let m = 100_000u64;
        let mut o = SampleOracle::unlabeled(p.clone(), 5);
        let mut counts = [0u64; 3];
        for _ in 0..m {
            counts[(o.draw_unlabeled() - 1) as usize] += 1;
        }
        for (k, (_, pi)) in counts.iter().zip(p.iter()) {
            let sigma = (pi * (1.0 - pi) / m as f64).sqrt();
            assert!((*k as f64 / m as f64 - pi).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn multinomial_counts_sum_to_m() {
        let p = DiscretePmf::from_pairs([(1, 0.2), (2, 0.0), (3, 0.5), (4, 0.3)]).unwrap();
        let mut o = SampleOracle::unlabeled(p, 3);
        let counts = o.draw_counts(1_000_000);
        assert_eq!(counts.iter().map(|c| c.1).sum::<u64>(), 1_000_000);
        assert!(counts.iter().all(|c| c.0 != 2));
        assert!(o.draw_counts(0).is_empty());
    }
}
