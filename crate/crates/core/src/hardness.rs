//! The disjoint-support Left/Right instance and the error curve of a
//! memorizing learner on it.
//!
//! Left and right halves of `1..=n` are labeled 0 and 1. Without shift the
//! learner sees uniform draws over all of `1..=n`; labels on unseen points
//! carry no information, so a learner can only memorize. After `k` draws the
//! expected error is `(1/2)·((n-1)/n)^k`, and pushing it below a fixed level
//! takes a number of draws linear in `n`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{DiscretePmf, Point};
use crate::error::{Error, Result};
use crate::hypotheses::{exact_error, Hypothesis};
use crate::oracles::SampleOracle;
use crate::seeding::{derive_seed, rng_from};

#[derive(Debug, Clone, PartialEq)]
pub struct LeftRightInstance {
    pub n: usize,
    pub left: DiscretePmf,
    pub right: DiscretePmf,
    /// Fair mixture of `left` and `right`: uniform on `1..=n`.
    pub source: DiscretePmf,
    /// 0 on the left half, 1 on the right half.
    pub concept: Hypothesis,
    pub l: usize,
    pub r: usize,
    pub m: usize,
    pub gamma: f64,
}

/// The three sample sets of one Left/Right round.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftRightDraw {
    pub left: Vec<Point>,
    pub right: Vec<Point>,
    pub mixed: Vec<Point>,
    pub mixed_is_left: bool,
}

pub fn make_left_right(n: usize) -> Result<LeftRightInstance> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::param("n", n as f64, "must be even and at least 2"));
    }
    let half = (n / 2) as Point;
    let n_pts = n as Point;
    Ok(LeftRightInstance {
        n,
        left: DiscretePmf::uniform(1, half)?,
        right: DiscretePmf::uniform(half + 1, n_pts)?,
        source: DiscretePmf::uniform(1, n_pts)?,
        concept: Hypothesis::interval(half + 1, n_pts),
        l: 0,
        r: 0,
        m: 0,
        gamma: 0.5,
    })
}

impl LeftRightInstance {
    pub fn with_draws(mut self, l: usize, r: usize, m: usize) -> Self {
        self.l = l;
        self.r = r;
        self.m = m;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::param(
                "gamma",
                gamma,
                "must lie strictly between 0 and 1",
            ));
        }
        self.gamma = gamma;
        Ok(self)
    }

    /// Draws `L`, `R`, and `M`, where `M` comes from a fair-coin choice of
    /// side.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> LeftRightDraw {
        let mixed_is_left = rng.random::<bool>();
        let side = if mixed_is_left {
            &self.left
        } else {
            &self.right
        };
        LeftRightDraw {
            left: crate::distributions::sample(&self.left, rng, self.l),
            right: crate::distributions::sample(&self.right, rng, self.r),
            mixed: crate::distributions::sample(side, rng, self.m),
            mixed_is_left,
        }
    }
}

/// Lookup table that repeats the first observed label on seen points and
/// commits a fair coin flip on every unseen point of `support`.
pub fn memorization_learner<R: Rng + ?Sized>(
    samples: &[(Point, bool)],
    support: &[Point],
    rng: &mut R,
) -> Hypothesis {
    let mut labels = std::collections::BTreeMap::new();
    for &(x, y) in samples {
        labels.entry(x).or_insert(y);
    }
    for &x in support {
        let coin = rng.random::<bool>();
        labels.entry(x).or_insert(coin);
    }
    Hypothesis::Table {
        labels,
        default: false,
    }
}

/// `(1/2)·((n-1)/n)^k`.
pub fn analytic_memorization_error(n: usize, k: usize) -> f64 {
    let n = n as f64;
    0.5 * ((n - 1.0) / n).powi(k as i32)
}

/// `(1/2)q + (1 - q)` with `q = ((n-1)/n)^k`, as displayed alongside the
/// memorization argument. It is at least 1/2 for every `k` and so cannot
/// describe a learner that is exact on seen points; reported for reference.
pub fn displayed_bound(n: usize, k: usize) -> f64 {
    let q = 2.0 * analytic_memorization_error(n, k);
    0.5 * q + (1.0 - q)
}

/// Smallest `k` with `analytic_memorization_error(n, k) <= threshold`.
pub fn analytic_crossing(n: usize, threshold: f64) -> usize {
    (0..)
        .find(|&k| analytic_memorization_error(n, k) <= threshold)
        .expect("error decays to zero")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub mean_error: f64,
    pub analytic_error: f64,
    pub displayed_bound: f64,
    pub std_err: f64,
}

/// Target error of the memorization learner after `k` source draws, for
/// each trial. Trial `t` uses a seed derived from `(seed, t)` only.
pub fn memorization_errors(n: usize, k: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let inst = make_left_right(n)?;
    Ok((0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(seed, t);
            let mut oracle =
                SampleOracle::labeled(inst.source.clone(), inst.concept.clone(), trial_seed);
            let samples: Vec<(Point, bool)> = (0..k)
                .map(|_| oracle.draw_labeled().expect("labeled oracle"))
                .collect();
            let mut coins = rng_from(derive_seed(trial_seed, 1));
            let h = memorization_learner(&samples, inst.source.support(), &mut coins);
            exact_error(&h, &inst.concept, &inst.source)
        })
        .collect())
}

fn summarize(n: usize, k: usize, errors: &[f64]) -> CurveRow {
    let trials = errors.len();
    let mean = errors.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    CurveRow {
        n,
        k,
        trials,
        mean_error: mean,
        analytic_error: analytic_memorization_error(n, k),
        displayed_bound: displayed_bound(n, k),
        std_err: (var / trials as f64).sqrt(),
    }
}

/// Monte Carlo memorization error for each `k`, next to the closed form.
pub fn hardness_curve(n: usize, ks: &[usize], trials: usize, seed: u64) -> Result<Vec<CurveRow>> {
    if trials == 0 {
        return Err(Error::param("trials", 0.0, "need at least one trial"));
    }
    ks.iter()
        .map(|&k| {
            let errors = memorization_errors(n, k, trials, derive_seed(seed, k as u64))?;
            Ok(summarize(n, k, &errors))
        })
        .collect()
}

/// Smallest `k <= k_max` whose Monte Carlo mean error is at most `threshold`.
pub fn empirical_crossing(
    n: usize,
    threshold: f64,
    trials: usize,
    k_max: usize,
    seed: u64,
) -> Result<Option<usize>> {
    for k in 0..=k_max {
        let row = &hardness_curve(n, &[k], trials, seed)?[0];
        if row.mean_error <= threshold {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::weight_ratio;

    #[test]
    fn instance_construction() {
        let inst = make_left_right(4).unwrap();
        assert_eq!(inst.left, DiscretePmf::uniform(1, 2).unwrap());
        assert_eq!(inst.right, DiscretePmf::uniform(3, 4).unwrap());
        let labels: Vec<bool> = (1..=4).map(|x| inst.concept.label(x)).collect();
        assert_eq!(labels, vec![false, false, true, true]);
        assert_eq!(weight_ratio(&inst.source, &inst.source).ratio(), Some(1.0));
        assert!(inst.source.masses().iter().all(|&m| m == 0.25));

        let tiny = make_left_right(2).unwrap();
        assert_eq!(tiny.left.support(), &[1]);
        assert_eq!(tiny.right.support(), &[2]);

        assert!(make_left_right(3).is_err());
        assert!(make_left_right(0).is_err());
    }

    #[test]
    fn halves_are_disjoint_and_cover() {
        let inst = make_left_right(10).unwrap();
        let mut all: Vec<Point> = inst.left.support().to_vec();
        all.extend_from_slice(inst.right.support());
        assert_eq!(all, inst.source.support());
        assert_eq!(inst.left.len(), inst.right.len());
    }

    #[test]
    fn draw_sets_have_requested_sizes() {
        let inst = make_left_right(6)
            .unwrap()
            .with_draws(3, 4, 5)
            .with_gamma(0.1)
            .unwrap();
        let d = inst.draw(&mut rng_from(1));
        assert_eq!((d.left.len(), d.right.len(), d.mixed.len()), (3, 4, 5));
        let side = if d.mixed_is_left {
            &inst.left
        } else {
            &inst.right
        };
        assert!(d.mixed.iter().all(|&x| side.mass_at(x) > 0.0));
        assert!(make_left_right(6).unwrap().with_gamma(1.5).is_err());
    }

    #[test]
    fn memorization_on_full_coverage_is_exact() {
        let inst = make_left_right(6).unwrap();
        let samples: Vec<(Point, bool)> = (1..=6).map(|x| (x, inst.concept.label(x))).collect();
        let h = memorization_learner(&samples, inst.source.support(), &mut rng_from(3));
        assert_eq!(exact_error(&h, &inst.concept, &inst.source), 0.0);
    }

    #[test]
    fn memorization_without_data_is_a_coin() {
        let errors = memorization_errors(8, 0, 20_000, 4).unwrap();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        assert!((mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn single_draw_on_two_points() {
        // The unseen point is wrong half the time: 1/2 · 1/2.
        let errors = memorization_errors(2, 1, 100_000, 5).unwrap();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        assert!((mean - 0.25).abs() < 0.01, "{mean}");
    }

    #[test]
    fn displayed_bound_never_drops_below_half() {
        for n in [2, 8, 64] {
            for k in [0, 1, 10, 1000] {
                assert!(displayed_bound(n, k) >= 0.5);
            }
        }
    }

    #[test]
    fn analytic_crossings() {
        assert_eq!(analytic_crossing(8, 0.25), 6);
        assert_eq!(analytic_crossing(16, 0.25), 11);
        assert_eq!(analytic_crossing(32, 0.25), 22);
    }

    #[test]
    fn curve_is_deterministic() {
        let a = hardness_curve(6, &[0, 2, 4], 500, 9).unwrap();
        let b = hardness_curve(6, &[0, 2, 4], 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(hardness_curve(6, &[1], 0, 9).is_err());
    }
}
