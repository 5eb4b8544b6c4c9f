//! Boolean concepts over integer points, finite hypothesis classes, exact
//! error and discrepancy, ERM, and exact checks of the error-transfer
//! inequalities between two distributions.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::distributions::{aligned, DiscretePmf, Point};
use crate::error::{Error, Result};
use crate::exact::{self, rat, Rational};

/// A total labeling of the integers. A concept is a hypothesis used as
/// ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// Labels every point 0.
    Empty,
    /// Labels `lo..=hi` with 1, everything else 0. Always `lo <= hi`.
    Interval { lo: Point, hi: Point },
    /// Explicit labels; points absent from the table get `default`.
    Table {
        labels: BTreeMap<Point, bool>,
        default: bool,
    },
}

impl Hypothesis {
    /// `[lo, hi]`, or [`Hypothesis::Empty`] when `lo > hi`.
    pub fn interval(lo: Point, hi: Point) -> Self {
        if lo > hi {
            Hypothesis::Empty
        } else {
            Hypothesis::Interval { lo, hi }
        }
    }

    pub fn constant(label: bool) -> Self {
        Hypothesis::Table {
            labels: BTreeMap::new(),
            default: label,
        }
    }

    /// Labels `x` with 1 and everything else with 0.
    pub fn indicator(x: Point) -> Self {
        Hypothesis::Interval { lo: x, hi: x }
    }

    pub fn table(labels: impl IntoIterator<Item = (Point, bool)>) -> Self {
        Hypothesis::Table {
            labels: labels.into_iter().collect(),
            default: false,
        }
    }

    pub fn label(&self, x: Point) -> bool {
        match self {
            Hypothesis::Empty => false,
            Hypothesis::Interval { lo, hi } => *lo <= x && x <= *hi,
            Hypothesis::Table { labels, default } => labels.get(&x).copied().unwrap_or(*default),
        }
    }

    /// Pointwise negation, materialized as a table over `support`.
    pub fn complement_on(&self, support: &[Point]) -> Self {
        Hypothesis::Table {
            labels: support.iter().map(|&x| (x, !self.label(x))).collect(),
            default: !self.label(Point::MIN),
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::Empty => write!(f, "empty"),
            Hypothesis::Interval { lo, hi } => write!(f, "interval[{lo},{hi}]"),
            Hypothesis::Table { labels, default } => {
                write!(f, "table{{")?;
                for (i, (x, y)) in labels.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{x}:{}", u8::from(*y))?;
                }
                write!(f, "}}/{}", u8::from(*default))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassKind {
    /// All intervals over `1..=n` plus the empty interval.
    Intervals(usize),
    LookupTables,
}

/// A finite, nonempty hypothesis class with a fixed enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisClass {
    kind: ClassKind,
    members: Vec<Hypothesis>,
}

impl HypothesisClass {
    /// Intervals `[a, b]` with `1 <= a <= b <= n` in lexicographic order,
    /// followed by the empty interval: `n(n+1)/2 + 1` members.
    pub fn intervals(n: usize) -> Self {
        let n_pts = n as Point;
        let mut members = Vec::with_capacity(n * (n + 1) / 2 + 1);
        for a in 1..=n_pts {
            for b in a..=n_pts {
                members.push(Hypothesis::Interval { lo: a, hi: b });
            }
        }
        members.push(Hypothesis::Empty);
        HypothesisClass {
            kind: ClassKind::Intervals(n),
            members,
        }
    }

    pub fn lookup_tables(members: Vec<Hypothesis>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyClass);
        }
        Ok(HypothesisClass {
            kind: ClassKind::LookupTables,
            members,
        })
    }

    /// Every labeling of `support`, in binary counting order with bit `i`
    /// labeling `support[i]`. The all-zero table comes first.
    pub fn all_tables(support: &[Point]) -> Result<Self> {
        if support.len() > 20 {
            return Err(Error::param(
                "support size",
                support.len() as f64,
                "full table class is limited to 20 points",
            ));
        }
        let members = (0u32..1 << support.len())
            .map(|bits| {
                Hypothesis::table(
                    support
                        .iter()
                        .enumerate()
                        .map(|(i, &x)| (x, bits & (1 << i) != 0)),
                )
            })
            .collect();
        Self::lookup_tables(members)
    }

    pub fn kind(&self) -> &ClassKind {
        &self.kind
    }

    pub fn members(&self) -> &[Hypothesis] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A 0/1 loss scaled to take values in `{0, bound}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    bound: f64,
}

impl LossSpec {
    pub fn new(bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::param("M", bound, "loss bound must be positive"));
        }
        Ok(LossSpec { bound })
    }

    /// The PAC loss, `M = 1`.
    pub fn zero_one() -> Self {
        LossSpec { bound: 1.0 }
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

/// Probability under `p` that `h` disagrees with `c`.
pub fn exact_error(h: &Hypothesis, c: &Hypothesis, p: &DiscretePmf) -> f64 {
    p.iter()
        .filter(|&(x, _)| h.label(x) != c.label(x))
        .fold(0.0, |acc, (_, m)| acc + m)
}

fn rational_error(h: &Hypothesis, c: &Hypothesis, p: &DiscretePmf) -> Rational {
    p.iter()
        .filter(|&(x, m)| m > 0.0 && h.label(x) != c.label(x))
        .fold(Rational::zero(), |acc, (_, m)| acc + rat(m))
}

fn rational_l1(p: &DiscretePmf, q: &DiscretePmf) -> Rational {
    let total = aligned(p, q).fold(Rational::zero(), |acc, (_, a, b)| {
        acc + (rat(a) - rat(b)).abs()
    });
    total / exact::from_int(2)
}

/// Largest gap in expected loss between `p` and `q` over the class.
pub fn discrepancy(
    p: &DiscretePmf,
    q: &DiscretePmf,
    hclass: &HypothesisClass,
    c: &Hypothesis,
    loss: LossSpec,
) -> f64 {
    hclass
        .members()
        .iter()
        .map(|h| loss.bound * (exact_error(h, c, p) - exact_error(h, c, q)).abs())
        .fold(0.0, f64::max)
}

/// Returns the first member (in enumeration order) with the fewest
/// disagreements on `samples`.
pub fn erm_learn(samples: &[(Point, bool)], hclass: &HypothesisClass) -> Hypothesis {
    // (negatives, positives) per distinct point
    let mut tally: BTreeMap<Point, (u64, u64)> = BTreeMap::new();
    for &(x, y) in samples {
        let e = tally.entry(x).or_default();
        if y {
            e.1 += 1;
        } else {
            e.0 += 1;
        }
    }
    let mut best: Option<(u64, &Hypothesis)> = None;
    for h in hclass.members() {
        let mistakes: u64 = tally
            .iter()
            .map(|(&x, &(neg, pos))| if h.label(x) { neg } else { pos })
            .sum();
        if best.is_none_or(|(b, _)| mistakes < b) {
            best = Some((mistakes, h));
            if mistakes == 0 {
                break;
            }
        }
    }
    best.expect("hypothesis class is nonempty").1.clone()
}

/// Realizable finite-class sample size `ceil((ln|H| + ln(1/delta)) / eps)`.
pub fn pac_sample_size(class_size: usize, eps: f64, delta: f64) -> Result<u64> {
    if class_size == 0 {
        return Err(Error::EmptyClass);
    }
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    let m = ((class_size as f64).ln() + (1.0 / delta).ln()) / eps;
    Ok(m.ceil().max(1.0) as u64)
}

pub(crate) fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, v, "must lie strictly between 0 and 1"))
    }
}

/// Outcome of checking `lhs <= rhs`. `holds` is decided in exact rational
/// arithmetic; `lhs` and `rhs` are the nearest floats for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `error_target(h) <= w · error_source(h)` where `1/w` is the weight ratio.
pub fn check_theorem1_bound(
    h: &Hypothesis,
    c: &Hypothesis,
    source: &DiscretePmf,
    target: &DiscretePmf,
) -> Result<BoundCheck> {
    let mut ratio: Option<Rational> = None;
    for (x, s, t) in aligned(source, target) {
        if t <= 0.0 {
            continue;
        }
        if s <= 0.0 {
            return Err(Error::WeightRatioViolated { point: x });
        }
        let r = rat(s) / rat(t);
        if ratio.as_ref().is_none_or(|b| r < *b) {
            ratio = Some(r);
        }
    }
    let ratio = ratio.expect("target has positive mass");
    let err_s = rational_error(h, c, source);
    let err_t = rational_error(h, c, target);
    let holds = &err_t * &ratio <= err_s;
    Ok(BoundCheck {
        lhs: exact::to_f64(&err_t),
        rhs: exact::to_f64(&(err_s / ratio)),
        holds,
    })
}

/// `error_q(h) <= error_p(h) + 2·d(p, q)`.
pub fn check_prop2_bound(
    h: &Hypothesis,
    c: &Hypothesis,
    p: &DiscretePmf,
    q: &DiscretePmf,
) -> BoundCheck {
    let lhs = rational_error(h, c, q);
    let rhs = rational_error(h, c, p) + rational_l1(p, q) * exact::from_int(2);
    BoundCheck {
        lhs: exact::to_f64(&lhs),
        rhs: exact::to_f64(&rhs),
        holds: lhs <= rhs,
    }
}

/// `disc(p, q) <= 2·M·d(p, q)`, evaluated exactly.
pub fn check_prop1_bound(
    p: &DiscretePmf,
    q: &DiscretePmf,
    hclass: &HypothesisClass,
    c: &Hypothesis,
    loss: LossSpec,
) -> BoundCheck {
    let m = rat(loss.bound);
    let disc = hclass
        .members()
        .iter()
        .map(|h| (rational_error(h, c, p) - rational_error(h, c, q)).abs())
        .max()
        .expect("nonempty class")
        * &m;
    let rhs = rational_l1(p, q) * exact::from_int(2) * m;
    BoundCheck {
        lhs: exact::to_f64(&disc),
        rhs: exact::to_f64(&rhs),
        holds: disc <= rhs,
    }
}
