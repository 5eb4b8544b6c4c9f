//! Finite discrete distributions over integer points.
//!
//! A [`DiscretePmf`] stores an ordered support and matching masses. All
//! metric operations treat points missing from a support as carrying zero
//! mass, so distributions over different supports can be compared freely.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = i64;

/// Allowed deviation of the total mass from 1 at construction.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Masses below this are treated as floating-point residue and zeroed.
pub const DUST: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf {
    support: Vec<Point>,
    mass: Vec<f64>,
}

impl DiscretePmf {
    /// Builds a pmf from a strictly increasing support and masses summing to
    /// one within [`MASS_TOLERANCE`]. Masses are kept as given unless dust
    /// clamping forces a renormalization.
    pub fn new(support: Vec<Point>, mass: Vec<f64>) -> Result<Self> {
        validate_shape(&support, &mass)?;
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPmf(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self::normalized(support, mass, total))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Point, f64)>) -> Result<Self> {
        let (support, mass) = pairs.into_iter().unzip();
        Self::new(support, mass)
    }

    /// Normalizes arbitrary nonnegative weights into a pmf.
    pub fn from_weights(support: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        validate_shape(&support, &weights)?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidPmf("weights sum to zero".into()));
        }
        Ok(Self::normalized(support, weights, total))
    }

    fn normalized(support: Vec<Point>, mut mass: Vec<f64>, total: f64) -> Self {
        if (total - 1.0).abs() > MASS_TOLERANCE {
            mass.iter_mut().for_each(|m| *m /= total);
        }
        let mut clamped = false;
        for m in mass.iter_mut() {
            if *m != 0.0 && *m < DUST {
                *m = 0.0;
                clamped = true;
            }
        }
        if clamped {
            let total: f64 = mass.iter().sum();
            mass.iter_mut().for_each(|m| *m /= total);
        }
        DiscretePmf { support, mass }
    }

    pub fn point_mass(x: Point) -> Self {
        DiscretePmf {
            support: vec![x],
            mass: vec![1.0],
        }
    }

    /// Uniform over the integers `lo..=hi`.
    pub fn uniform(lo: Point, hi: Point) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidPmf(format!("uniform({lo},{hi}) is empty")));
        }
        let support: Vec<Point> = (lo..=hi).collect();
        let weights = vec![1.0; support.len()];
        Self::from_weights(support, weights)
    }

    /// Binomial(n, p) over `0..=n`.
    pub fn binomial(n: u32, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", p, "must lie in [0, 1]"));
        }
        let support: Vec<Point> = (0..=n as Point).collect();
        let weights = if p == 0.0 || p == 1.0 {
            let hit = if p == 0.0 { 0 } else { n as usize };
            (0..=n as usize)
                .map(|k| if k == hit { 1.0 } else { 0.0 })
                .collect()
        } else {
            let (lp, lq) = (p.ln(), (1.0 - p).ln());
            let mut ln_choose = 0.0;
            let mut out = Vec::with_capacity(n as usize + 1);
            for k in 0..=n {
                if k > 0 {
                    ln_choose += f64::from(n - k + 1).ln() - f64::from(k).ln();
                }
                out.push((ln_choose + f64::from(k) * lp + f64::from(n - k) * lq).exp());
            }
            out
        };
        Self::from_weights(support, weights)
    }

    /// Geometric(p) on `1..=n`, renormalized after cutting the tail.
    pub fn geometric_truncated(p: f64, n: u32) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::param("p", p, "must lie in (0, 1]"));
        }
        if n == 0 {
            return Err(Error::InvalidPmf("geometric_truncated needs n >= 1".into()));
        }
        let support: Vec<Point> = (1..=n as Point).collect();
        let weights = (0..n).map(|k| p * (1.0 - p).powi(k as i32)).collect();
        Self::from_weights(support, weights)
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.support.iter().copied().zip(self.mass.iter().copied())
    }

    /// Mass at `x`, zero when `x` is outside the support.
    pub fn mass_at(&self, x: Point) -> f64 {
        match self.support.binary_search(&x) {
            Ok(i) => self.mass[i],
            Err(_) => 0.0,
        }
    }

    /// Probability of an event given as a list of points.
    pub fn probability(&self, event: &[Point]) -> f64 {
        event.iter().fold(0.0, |acc, &x| acc + self.mass_at(x))
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, m)| x as f64 * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.iter().map(|(x, m)| m * (x as f64 - mu).powi(2)).sum()
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Points carrying positive mass.
    pub fn positive_support(&self) -> impl Iterator<Item = Point> + '_ {
        self.iter().filter(|&(_, m)| m > 0.0).map(|(x, _)| x)
    }
}

fn validate_shape(support: &[Point], mass: &[f64]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::InvalidPmf("empty support".into()));
    }
    if support.len() != mass.len() {
        return Err(Error::InvalidPmf(format!(
            "{} support points but {} masses",
            support.len(),
            mass.len()
        )));
    }
    if let Some(w) = support.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidPmf(format!(
            "support must be strictly increasing, found {} then {}",
            w[0], w[1]
        )));
    }
    if let Some(m) = mass.iter().find(|m| !m.is_finite() || **m < 0.0) {
        return Err(Error::InvalidPmf(format!("mass {m} is not a probability")));
    }
    Ok(())
}

/// Walks the union of two supports in increasing order, yielding
/// `(point, p(point), q(point))`.
pub fn aligned<'a>(
    p: &'a DiscretePmf,
    q: &'a DiscretePmf,
) -> impl Iterator<Item = (Point, f64, f64)> + 'a {
    let (mut i, mut j) = (0, 0);
    std::iter::from_fn(move || {
        let a = p.support.get(i).copied();
        let b = q.support.get(j).copied();
        match (a, b) {
            (None, None) => None,
            (Some(x), None) => {
                i += 1;
                Some((x, p.mass[i - 1], 0.0))
            }
            (None, Some(y)) => {
                j += 1;
                Some((y, 0.0, q.mass[j - 1]))
            }
            (Some(x), Some(y)) if x == y => {
                i += 1;
                j += 1;
                Some((x, p.mass[i - 1], q.mass[j - 1]))
            }
            (Some(x), Some(y)) if x < y => {
                i += 1;
                Some((x, p.mass[i - 1], 0.0))
            }
            (Some(_), Some(y)) => {
                j += 1;
                Some((y, 0.0, q.mass[j - 1]))
            }
        }
    })
}

/// Union of the supports of both distributions, sorted.
pub fn union_support(p: &DiscretePmf, q: &DiscretePmf) -> Vec<Point> {
    aligned(p, q).map(|(x, _, _)| x).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub l1: f64,
    /// Points where `p` outweighs `q`; this event attains the supremum.
    pub witness_event: Vec<Point>,
}

/// Largest gap `|P(E) - Q(E)|` over all events, via the half-sum identity.
pub fn l1_distance(p: &DiscretePmf, q: &DiscretePmf) -> DistanceReport {
    let mut total = 0.0;
    let mut witness_event = Vec::new();
    for (x, a, b) in aligned(p, q) {
        total += (a - b).abs();
        if a > b {
            witness_event.push(x);
        }
    }
    DistanceReport {
        l1: 0.5 * total,
        witness_event,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WeightRatioReport {
    /// `ratio` is the smallest source/target mass ratio, attained at
    /// `witness_point`.
    Bounded { ratio: f64, witness_point: Point },
    /// Target puts mass on `point` where the source has none.
    Violated { point: Point },
}

impl WeightRatioReport {
    pub fn ratio(&self) -> Option<f64> {
        match *self {
            WeightRatioReport::Bounded { ratio, .. } => Some(ratio),
            WeightRatioReport::Violated { .. } => None,
        }
    }

    /// The blow-up factor `w = 1 / ratio`.
    pub fn w(&self) -> Option<f64> {
        self.ratio().map(|r| 1.0 / r)
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, WeightRatioReport::Violated { .. })
    }

    pub fn into_result(self) -> Result<(f64, Point)> {
        match self {
            WeightRatioReport::Bounded {
                ratio,
                witness_point,
            } => Ok((ratio, witness_point)),
            WeightRatioReport::Violated { point } => Err(Error::WeightRatioViolated { point }),
        }
    }
}

/// Infimum over target-positive events of `source(E) / target(E)`.
///
/// A ratio of sums is a mediant of the per-point ratios, so the infimum over
/// events is attained on a single point.
pub fn weight_ratio(source: &DiscretePmf, target: &DiscretePmf) -> WeightRatioReport {
    let mut best: Option<(f64, Point)> = None;
    for (x, s, t) in aligned(source, target) {
        if t <= 0.0 {
            continue;
        }
        if s <= 0.0 {
            return WeightRatioReport::Violated { point: x };
        }
        let r = s / t;
        if best.is_none_or(|(b, _)| r < b) {
            best = Some((r, x));
        }
    }
    let (ratio, witness_point) = best.expect("target has positive mass somewhere");
    WeightRatioReport::Bounded {
        ratio: ratio.min(1.0),
        witness_point,
    }
}

/// `m` independent draws from `p`.
pub fn sample<R: Rng + ?Sized>(p: &DiscretePmf, rng: &mut R, m: usize) -> Vec<Point> {
    if m == 0 {
        return Vec::new();
    }
    let index = WeightedIndex::new(p.masses()).expect("pmf masses are valid weights");
    (0..m).map(|_| p.support[index.sample(rng)]).collect()
}

/// Restricts `p` to `[lo, hi]` and renormalizes. Returns the truncated pmf
/// and the mass that fell outside the window.
pub fn truncate(p: &DiscretePmf, lo: Point, hi: Point) -> Result<(DiscretePmf, f64)> {
    if lo > hi {
        return Err(Error::InvalidPmf(format!(
            "window [{lo}, {hi}] is reversed"
        )));
    }
    let (support, weights): (Vec<Point>, Vec<f64>) =
        p.iter().filter(|&(x, _)| lo <= x && x <= hi).unzip();
    let kept: f64 = weights.iter().sum();
    if support.is_empty() || kept <= 0.0 {
        return Err(Error::EmptyTruncation { lo, hi });
    }
    let dropped = (1.0 - kept).max(0.0);
    Ok((DiscretePmf::from_weights(support, weights)?, dropped))
}

/// Integer window `[ceil(mean - k), floor(mean + k)]` with `k = s·sqrt(2/eps)`.
///
/// By Chebyshev's inequality any distribution with mean `mean` and standard
/// deviation at most `s` keeps at least `1 - eps/2` of its mass inside.
pub fn chebyshev_window(mean: f64, s: f64, eps: f64) -> (Point, Point) {
    let k = s * (2.0 / eps).sqrt();
    ((mean - k).ceil() as Point, (mean + k).floor() as Point)
}

/// Config-file description of a pmf: a named generator or a literal list of
/// `(point, mass)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PmfSpec {
    Named(NamedPmf),
    Custom(Vec<(Point, f64)>),
}

impl PmfSpec {
    pub fn build(&self) -> Result<DiscretePmf> {
        match self {
            PmfSpec::Named(named) => named.build(),
            PmfSpec::Custom(pairs) => DiscretePmf::from_pairs(pairs.iter().copied()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NamedPmf {
    Uniform { lo: Point, hi: Point },
    Binomial { n: u32, p: f64 },
    GeometricTruncated { p: f64, n: u32 },
}

impl NamedPmf {
    pub fn build(&self) -> Result<DiscretePmf> {
        match *self {
            NamedPmf::Uniform { lo, hi } => DiscretePmf::uniform(lo, hi),
            NamedPmf::Binomial { n, p } => DiscretePmf::binomial(n, p),
            NamedPmf::GeometricTruncated { p, n } => DiscretePmf::geometric_truncated(p, n),
        }
    }
}

impl fmt::Display for NamedPmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedPmf::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            NamedPmf::Binomial { n, p } => write!(f, "binomial({n},{p})"),
            NamedPmf::GeometricTruncated { p, n } => write!(f, "geometric_truncated({p},{n})"),
        }
    }
}

impl FromStr for NamedPmf {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| format!("expected name(args), got `{s}`"))?;
        let args = s[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| format!("missing `)` in `{s}`"))?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let name = &s[..open];
        let bad = |what: &str| format!("bad argument in `{s}`: {what}");
        if args.len() != 2 {
            return Err(format!("`{name}` takes two arguments"));
        }
        match name {
            "uniform" => Ok(NamedPmf::Uniform {
                lo: args[0].parse().map_err(|_| bad(args[0]))?,
                hi: args[1].parse().map_err(|_| bad(args[1]))?,
            }),
            "binomial" => Ok(NamedPmf::Binomial {
                n: args[0].parse().map_err(|_| bad(args[0]))?,
                p: args[1].parse().map_err(|_| bad(args[1]))?,
            }),
            "geometric_truncated" => Ok(NamedPmf::GeometricTruncated {
                p: args[0].parse().map_err(|_| bad(args[0]))?,
                n: args[1].parse().map_err(|_| bad(args[1]))?,
            }),
            other => Err(format!("unknown generator `{other}`")),
        }
    }
}

impl TryFrom<String> for NamedPmf {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<NamedPmf> for String {
    fn from(n: NamedPmf) -> String {
        n.to_string()
    }
}
