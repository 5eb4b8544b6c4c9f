//! Random instance generators for the property-style experiments.
//!
//! Masses are multiples of `2^-bits` that sum to exactly one, so every mass,
//! ratio, and error computed from them is representable without rounding
//! surprises in the exact checks.

use rand::Rng;

use crate::distributions::{DiscretePmf, Point};
use crate::hypotheses::{Hypothesis, HypothesisClass};

/// A pmf on `support` whose masses are multiples of `2^-bits`. Each point is
/// zeroed with probability `zero_prob`; at least one point keeps mass.
pub fn dyadic_pmf<R: Rng + ?Sized>(
    rng: &mut R,
    support: &[Point],
    zero_prob: f64,
    bits: u32,
) -> DiscretePmf {
    assert!(!support.is_empty() && bits <= 52);
    let mut alive: Vec<usize> = (0..support.len())
        .filter(|_| !rng.random_bool(zero_prob))
        .collect();
    if alive.is_empty() {
        alive.push(rng.random_range(0..support.len()));
    }
    let total: u64 = 1 << bits;
    let mut cuts: Vec<u64> = (1..alive.len())
        .map(|_| rng.random_range(0..=total))
        .collect();
    cuts.push(0);
    cuts.push(total);
    cuts.sort_unstable();
    let scale = total as f64;
    let mut mass = vec![0.0; support.len()];
    for (slot, pair) in alive.iter().zip(cuts.windows(2)) {
        mass[*slot] = (pair[1] - pair[0]) as f64 / scale;
    }
    DiscretePmf::new(support.to_vec(), mass).expect("dyadic masses sum to one")
}

/// A lookup table with an independent fair label per point.
pub fn random_table<R: Rng + ?Sized>(rng: &mut R, support: &[Point]) -> Hypothesis {
    Hypothesis::table(support.iter().map(|&x| (x, rng.random::<bool>())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsInstance {
    pub source: DiscretePmf,
    pub target: DiscretePmf,
    pub concept: Hypothesis,
    pub class: HypothesisClass,
}

/// Source, target, concept, and a class of 1 to 8 random tables on
/// `1..=n`. The target may put mass where the source has none.
pub fn random_bounds_instance<R: Rng + ?Sized>(rng: &mut R, n: usize) -> BoundsInstance {
    let support: Vec<Point> = (1..=n as Point).collect();
    let source = dyadic_pmf(rng, &support, 0.2, 16);
    let target = dyadic_pmf(rng, &support, 0.2, 16);
    let concept = random_table(rng, &support);
    let size = rng.random_range(1..=8);
    let members = (0..size).map(|_| random_table(rng, &support)).collect();
    BoundsInstance {
        source,
        target,
        concept,
        class: HypothesisClass::lookup_tables(members).expect("nonempty"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;

    #[test]
    fn dyadic_masses_sum_exactly() {
        let mut rng = rng_from(11);
        let support: Vec<Point> = (1..=9).collect();
        for _ in 0..200 {
            let p = dyadic_pmf(&mut rng, &support, 0.3, 20);
            assert_eq!(p.masses().iter().sum::<f64>(), 1.0);
            for &m in p.masses() {
                assert_eq!((m * f64::from(1u32 << 20)).fract(), 0.0);
            }
        }
    }

    #[test]
    fn all_zeroed_falls_back_to_a_point_mass() {
        let p = dyadic_pmf(&mut rng_from(2), &[4, 5], 1.0, 8);
        assert_eq!(p.positive_support().count(), 1);
    }
}
