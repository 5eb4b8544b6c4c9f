//! Empirical pmf estimation from oracle draws and the sample-budget
//! calculators used by the rejection pipeline.
//!
//! All logarithms are natural. Constants (`2^11`, the `eps/16` relative band,
//! the `eps/(2nw)` heavy cutoff) are kept as stated rather than tightened.

use serde::{Deserialize, Serialize};

use crate::distributions::{DiscretePmf, Point};
use crate::error::{Error, Result};
use crate::hypotheses::check_unit;
use crate::oracles::SampleOracle;

/// Raw draw frequencies over a fixed support.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalEstimate {
    support: Vec<Point>,
    counts: Vec<u64>,
    m: u64,
    phat: Vec<f64>,
}

impl EmpiricalEstimate {
    /// Bins `draws` onto `support`. Every drawn point must belong to it.
    pub fn from_counts(support: &[Point], draws: &[(Point, u64)]) -> Result<Self> {
        let mut counts = vec![0u64; support.len()];
        for &(x, k) in draws {
            let i = support
                .binary_search(&x)
                .map_err(|_| Error::InvalidPmf(format!("draw {x} outside estimation support")))?;
            counts[i] += k;
        }
        let m: u64 = counts.iter().sum();
        let phat = if m == 0 {
            vec![0.0; support.len()]
        } else {
            counts.iter().map(|&c| c as f64 / m as f64).collect()
        };
        Ok(EmpiricalEstimate {
            support: support.to_vec(),
            counts,
            m,
            phat,
        })
    }

    /// Ground truth injected in place of an estimate, restricted or extended
    /// to `support`. Carries no counts (`m == 0`).
    pub fn exact(pmf: &DiscretePmf, support: &[Point]) -> Self {
        EmpiricalEstimate {
            support: support.to_vec(),
            counts: vec![0; support.len()],
            m: 0,
            phat: support.iter().map(|&x| pmf.mass_at(x)).collect(),
        }
    }

    pub fn is_injected(&self) -> bool {
        self.m == 0
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn phat(&self) -> &[f64] {
        &self.phat
    }

    pub fn mass_at(&self, x: Point) -> f64 {
        self.support
            .binary_search(&x)
            .map(|i| self.phat[i])
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMode {
    /// One multinomial draw for all counts: O(n) work regardless of `m`.
    #[default]
    Multinomial,
    /// `m` individual oracle calls.
    Streaming,
}

/// Maximum-likelihood frequencies from `m` draws of `oracle`.
pub fn estimate_pmf(
    oracle: &mut SampleOracle,
    m: u64,
    support: &[Point],
    mode: EstimationMode,
) -> Result<EmpiricalEstimate> {
    if m == 0 {
        return Err(Error::param("m", 0.0, "need at least one draw"));
    }
    let draws = match mode {
        EstimationMode::Multinomial => oracle.draw_counts(m),
        EstimationMode::Streaming => {
            let mut pairs: Vec<(Point, u64)> =
                (0..m).map(|_| (oracle.draw_unlabeled(), 1)).collect();
            pairs.sort_unstable();
            pairs
        }
    };
    EmpiricalEstimate::from_counts(support, &draws)
}

/// Anything that assigns masses to points.
pub trait MassFunction {
    fn mass_points(&self) -> Vec<(Point, f64)>;
}

impl MassFunction for DiscretePmf {
    fn mass_points(&self) -> Vec<(Point, f64)> {
        self.iter().collect()
    }
}

impl MassFunction for EmpiricalEstimate {
    fn mass_points(&self) -> Vec<(Point, f64)> {
        self.support
            .iter()
            .copied()
            .zip(self.phat.iter().copied())
            .collect()
    }
}

/// Step-1 budget for a support of size `n` and weight bound `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetPlan {
    pub n: usize,
    pub w: f64,
    pub eps: f64,
    pub delta: f64,
    pub m1: u64,
    pub heavy_cutoff: f64,
}

impl BudgetPlan {
    pub fn new(n: usize, w: f64, eps: f64, delta: f64) -> Result<Self> {
        let m1 = chernoff_sample_size(n, w, eps, delta)?;
        Ok(BudgetPlan {
            n,
            w,
            eps,
            delta,
            m1,
            heavy_cutoff: eps / (2.0 * n as f64 * w),
        })
    }
}

/// `(ln(4n) + ln(1/delta)) · 2^11 · n · w² / eps³`, before rounding up.
pub fn chernoff_bound(n: usize, w: f64, eps: f64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", 0.0, "support size must be at least 1"));
    }
    if !(w >= 1.0 && w.is_finite()) {
        return Err(Error::param("w", w, "weight bound must be finite and >= 1"));
    }
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    let n = n as f64;
    Ok(((4.0 * n).ln() + (1.0 / delta).ln()) * 2048.0 * n * w * w / eps.powi(3))
}

/// Draws per oracle needed so every heavy point's estimate is within a
/// relative `eps/16` of its true mass, except with probability `delta`.
pub fn chernoff_sample_size(n: usize, w: f64, eps: f64, delta: f64) -> Result<u64> {
    let m = chernoff_bound(n, w, eps, delta)?;
    if m >= u64::MAX as f64 {
        return Err(Error::param("m1", m, "budget overflows a 64-bit count"));
    }
    Ok(m.ceil() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HeavyLight {
    pub heavy: Vec<Point>,
    pub light: Vec<Point>,
}

/// Points with mass at least `eps / (2nw)` are heavy.
pub fn heavy_points<M: MassFunction + ?Sized>(masses: &M, plan: &BudgetPlan) -> HeavyLight {
    let mut out = HeavyLight::default();
    for (x, m) in masses.mass_points() {
        if m >= plan.heavy_cutoff {
            out.heavy.push(x);
        } else {
            out.light.push(x);
        }
    }
    out
}

/// Whether every heavy source point has both estimates inside the relative
/// `eps/16` band around the true masses.
pub fn within_chernoff_band(
    source: &DiscretePmf,
    target: &DiscretePmf,
    source_est: &EmpiricalEstimate,
    target_est: &EmpiricalEstimate,
    plan: &BudgetPlan,
) -> bool {
    let band = plan.eps / 16.0;
    heavy_points(source, plan).heavy.iter().all(|&x| {
        let (p1, p2) = (source.mass_at(x), target.mass_at(x));
        (source_est.mass_at(x) - p1).abs() <= p1 * band
            && (target_est.mass_at(x) - p2).abs() <= p2 * band
    })
}

/// `ceil(2·s·sqrt(2/eps))` consecutive points hold at least `1 - eps/2` of
/// the mass of any distribution with standard deviation at most `s`.
pub fn chebyshev_support_size(s: f64, eps: f64) -> Result<u64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::param(
            "s",
            s,
            "standard deviation bound must be positive",
        ));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", eps, "must be positive"));
    }
    Ok((2.0 * s * (2.0 / eps).sqrt()).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_examples() {
        let mut o = SampleOracle::unlabeled(DiscretePmf::point_mass(4), 1);
        let e = estimate_pmf(&mut o, 50, &[3, 4, 5], EstimationMode::Streaming).unwrap();
        assert_eq!(e.phat(), &[0.0, 1.0, 0.0]);
        assert_eq!(e.counts().iter().sum::<u64>(), e.m());

        let support = [1, 2];
        for mode in [EstimationMode::Multinomial, EstimationMode::Streaming] {
            let mut o = SampleOracle::unlabeled(DiscretePmf::uniform(1, 2).unwrap(), 17);
            let e = estimate_pmf(&mut o, 1_000_000, &support, mode).unwrap();
            for p in e.phat() {
                assert!((p - 0.5).abs() < 0.005, "{mode:?}: {p}");
            }
            assert_eq!(e.m(), 1_000_000);
        }

        let mut o = SampleOracle::unlabeled(DiscretePmf::uniform(1, 3).unwrap(), 2);
        let e = estimate_pmf(&mut o, 1, &[1, 2, 3], EstimationMode::Multinomial).unwrap();
        let mut sorted = e.phat().to_vec();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![0.0, 0.0, 1.0]);

        assert!(estimate_pmf(&mut o, 0, &[1, 2, 3], EstimationMode::Multinomial).is_err());
        assert!(estimate_pmf(&mut o, 10, &[1], EstimationMode::Multinomial).is_err());
    }

    #[test]
    fn chernoff_examples() {
        assert!(chernoff_sample_size(1, 1.0, 1.0, 0.5).is_err());
        assert_eq!(chernoff_sample_size(1, 1.0, 0.99, 0.99).unwrap(), 2948);
        // ln(160) · 2^11 · 8 · 4 · 64 = 21_286_821.83...
        assert_eq!(chernoff_sample_size(8, 2.0, 0.25, 0.2).unwrap(), 21_286_822);
        let w2 = chernoff_bound(8, 2.0, 0.25, 0.2).unwrap();
        let w4 = chernoff_bound(8, 4.0, 0.25, 0.2).unwrap();
        assert_eq!(w4, 4.0 * w2);
        assert!(chernoff_sample_size(0, 1.0, 0.5, 0.5).is_err());
        assert!(chernoff_sample_size(2, 0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn chernoff_scaling() {
        let base = chernoff_bound(4, 2.0, 0.2, 0.1).unwrap();
        let lin = |n: f64| ((4.0 * n).ln() + 10f64.ln()) * n;
        let doubled = chernoff_bound(8, 2.0, 0.2, 0.1).unwrap();
        assert!((doubled / base - lin(8.0) / lin(4.0)).abs() < 1e-12);
        let halved = chernoff_bound(4, 2.0, 0.1, 0.1).unwrap();
        assert!((halved / base - 8.0).abs() < 1e-12);
    }

    #[test]
    fn heavy_light_examples() {
        let plan = BudgetPlan::new(8, 2.0, 0.25, 0.2).unwrap();
        assert_eq!(plan.heavy_cutoff, 0.0078125);
        assert_eq!(plan.m1, 21_286_822);
        let u = DiscretePmf::uniform(1, 8).unwrap();
        let split = heavy_points(&u, &plan);
        assert_eq!(split.heavy.len(), 8);
        assert!(split.light.is_empty());

        let p = DiscretePmf::from_pairs([(1, 0.0), (2, 1.0)]).unwrap();
        let split = heavy_points(&p, &plan);
        assert_eq!(split.light, vec![1]);
        assert_eq!(split.heavy, vec![2]);
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_support_size(1.0, 0.08).unwrap(), 10);
        assert_eq!(chebyshev_support_size(5.0, 0.08).unwrap(), 50);
        assert_eq!(chebyshev_support_size(0.5, 0.5).unwrap(), 2);
        assert!(chebyshev_support_size(0.0, 0.5).is_err());
        assert!(chebyshev_support_size(-1.0, 0.5).is_err());
        assert_eq!(chebyshev_support_size(1.0, 2.0).unwrap(), 2);
    }

    #[test]
    fn injected_estimate_reproduces_pmf() {
        let p = DiscretePmf::binomial(5, 0.3).unwrap();
        let e = EmpiricalEstimate::exact(&p, p.support());
        assert!(e.is_injected());
        assert_eq!(e.phat(), p.masses());
        let plan = BudgetPlan::new(6, 1.0, 0.5, 0.5).unwrap();
        assert!(within_chernoff_band(&p, &p, &e, &e, &plan));
    }
}
