//! Reference implementations used as oracles by the integration tests.
//! They enumerate events or points directly and share no code with the
//! library's own computations.

#![allow(dead_code)]

use covshift::distributions::{DiscretePmf, Point};
use covshift::hypotheses::Hypothesis;
use rand::Rng;

/// Sorted union of the two supports.
pub fn domain(p: &DiscretePmf, q: &DiscretePmf) -> Vec<Point> {
    let mut d: Vec<Point> = p.support().iter().chain(q.support()).copied().collect();
    d.sort_unstable();
    d.dedup();
    d
}

fn mass(p: &DiscretePmf, x: Point) -> f64 {
    p.iter().find(|&(y, _)| y == x).map_or(0.0, |(_, m)| m)
}

/// Every subset of `points`, as bitmasks paired with member lists.
fn events(points: &[Point]) -> impl Iterator<Item = Vec<Point>> + '_ {
    assert!(points.len() <= 20);
    (0u32..1 << points.len()).map(move |mask| {
        points
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &x)| x)
            .collect()
    })
}

fn event_mass(p: &DiscretePmf, e: &[Point]) -> f64 {
    e.iter().map(|&x| mass(p, x)).sum()
}

/// `max_E |P(E) - Q(E)|` by enumerating every event.
pub fn l1_by_events(p: &DiscretePmf, q: &DiscretePmf) -> f64 {
    let d = domain(p, q);
    events(&d)
        .map(|e| (event_mass(p, &e) - event_mass(q, &e)).abs())
        .fold(0.0, f64::max)
}

/// `inf_{E : Q(E) > 0} P(E) / Q(E)` by enumerating every event; `None` when
/// some target-positive event has no source mass.
pub fn weight_ratio_by_events(p: &DiscretePmf, q: &DiscretePmf) -> Option<f64> {
    let d = domain(p, q);
    let mut best = f64::INFINITY;
    for e in events(&d) {
        let (pe, qe) = (event_mass(p, &e), event_mass(q, &e));
        if qe > 0.0 {
            if pe == 0.0 {
                return None;
            }
            best = best.min(pe / qe);
        }
    }
    Some(best)
}

/// Probability under `p` that `h` and `c` disagree, summed point by point.
pub fn error_by_points(h: &Hypothesis, c: &Hypothesis, p: &DiscretePmf) -> f64 {
    p.iter()
        .filter(|&(x, _)| h.label(x) != c.label(x))
        .map(|(_, m)| m)
        .sum()
}

/// A pmf with random positive weights on a random subset of `support`.
pub fn random_pmf<R: Rng>(rng: &mut R, support: &[Point], zero_prob: f64) -> DiscretePmf {
    let mut weights: Vec<f64> = support
        .iter()
        .map(|_| {
            if rng.random_bool(zero_prob) {
                0.0
            } else {
                rng.random_range(0.01..1.0)
            }
        })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        let i = rng.random_range(0..support.len());
        weights[i] = 1.0;
    }
    DiscretePmf::from_weights(support.to_vec(), weights).unwrap()
}

/// `lo..=lo+len-1` for a random `len` in `1..=max_len` and offset `lo`.
pub fn random_support<R: Rng>(rng: &mut R, max_len: usize) -> Vec<Point> {
    let len = rng.random_range(1..=max_len) as Point;
    let lo = rng.random_range(-3..=3);
    (lo..lo + len).collect()
}
