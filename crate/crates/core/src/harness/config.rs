//! Experiment configuration, read from TOML.
//!
//! ```toml
//! kind = "theorem2"
//! eps = 0.3
//! delta = 0.25
//! trials = 50
//! master_seed = 7
//! source = "uniform(1,8)"
//! target = [[3, 0.0625], [4, 0.0625], [5, 0.125], [6, 0.25], [7, 0.25], [8, 0.25]]
//! concept = "interval(4,6)"
//! class = "intervals(8)"
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{DiscretePmf, PmfSpec, Point};
use crate::error::{Error, Result};
use crate::estimation::EstimationMode;
use crate::hypotheses::{Hypothesis, HypothesisClass};
use crate::rejection::RejectionMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DistMetrics,
    BoundsCheck,
    Lemma1,
    Theorem2,
    Hardness,
    Compare,
    Complexity,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::DistMetrics => "dist-metrics",
            ExperimentKind::BoundsCheck => "bounds-check",
            ExperimentKind::Lemma1 => "lemma1",
            ExperimentKind::Theorem2 => "theorem2",
            ExperimentKind::Hardness => "hardness",
            ExperimentKind::Compare => "compare",
            ExperimentKind::Complexity => "complexity",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

/// A concept or hypothesis: `"interval(a,b)"`, `"indicator(x)"`,
/// `"constant(0|1)"`, `"empty"`, or a table of `[point, label]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HypothesisSpec {
    Named(NamedHypothesis),
    Table(Vec<(Point, u8)>),
}

impl HypothesisSpec {
    pub fn build(&self) -> Result<Hypothesis> {
        match self {
            HypothesisSpec::Named(n) => Ok(n.build()),
            HypothesisSpec::Table(pairs) => {
                let mut labels = Vec::with_capacity(pairs.len());
                for &(x, y) in pairs {
                    if y > 1 {
                        return Err(Error::config("concept", format!("label {y} is not 0 or 1")));
                    }
                    labels.push((x, y == 1));
                }
                Ok(Hypothesis::table(labels))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NamedHypothesis {
    Interval(Point, Point),
    Indicator(Point),
    Constant(bool),
    Empty,
}

impl NamedHypothesis {
    pub fn build(&self) -> Hypothesis {
        match *self {
            NamedHypothesis::Interval(a, b) => Hypothesis::interval(a, b),
            NamedHypothesis::Indicator(x) => Hypothesis::indicator(x),
            NamedHypothesis::Constant(b) => Hypothesis::constant(b),
            NamedHypothesis::Empty => Hypothesis::Empty,
        }
    }
}

fn split_call(s: &str) -> std::result::Result<(&str, Vec<&str>), String> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s, Vec::new())),
        Some(open) => {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| format!("missing `)` in `{s}`"))?;
            Ok((&s[..open], inner.split(',').map(str::trim).collect()))
        }
    }
}

fn parse_arg<T: FromStr>(s: &str, whole: &str) -> std::result::Result<T, String> {
    s.parse()
        .map_err(|_| format!("bad argument `{s}` in `{whole}`"))
}

impl FromStr for NamedHypothesis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (name, args) = split_call(s)?;
        match (name, args.as_slice()) {
            ("empty", []) => Ok(NamedHypothesis::Empty),
            ("interval", [a, b]) => Ok(NamedHypothesis::Interval(
                parse_arg(a, s)?,
                parse_arg(b, s)?,
            )),
            ("indicator", [x]) => Ok(NamedHypothesis::Indicator(parse_arg(x, s)?)),
            ("constant", [b]) => match *b {
                "0" => Ok(NamedHypothesis::Constant(false)),
                "1" => Ok(NamedHypothesis::Constant(true)),
                _ => Err(format!("constant takes 0 or 1, got `{b}`")),
            },
            _ => Err(format!("unknown hypothesis `{s}`")),
        }
    }
}

impl fmt::Display for NamedHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedHypothesis::Interval(a, b) => write!(f, "interval({a},{b})"),
            NamedHypothesis::Indicator(x) => write!(f, "indicator({x})"),
            NamedHypothesis::Constant(b) => write!(f, "constant({})", u8::from(*b)),
            NamedHypothesis::Empty => write!(f, "empty"),
        }
    }
}

impl TryFrom<String> for NamedHypothesis {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<NamedHypothesis> for String {
    fn from(h: NamedHypothesis) -> String {
        h.to_string()
    }
}

/// `"intervals(n)"` or an explicit list of hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassSpec {
    Named(NamedClass),
    Members(Vec<HypothesisSpec>),
}

impl ClassSpec {
    pub fn build(&self) -> Result<HypothesisClass> {
        match self {
            ClassSpec::Named(NamedClass::Intervals(n)) => Ok(HypothesisClass::intervals(*n)),
            ClassSpec::Members(specs) => {
                let members = specs
                    .iter()
                    .map(HypothesisSpec::build)
                    .collect::<Result<_>>()?;
                HypothesisClass::lookup_tables(members)
                    .map_err(|_| Error::config("class", "hypothesis list is empty"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NamedClass {
    Intervals(usize),
}

impl TryFrom<String> for NamedClass {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        match split_call(&s)? {
            ("intervals", args) if args.len() == 1 => {
                let n: usize = parse_arg(args[0], &s)?;
                if n == 0 {
                    return Err("intervals(n) needs n >= 1".into());
                }
                Ok(NamedClass::Intervals(n))
            }
            _ => Err(format!("unknown class `{s}`")),
        }
    }
}

impl From<NamedClass> for String {
    fn from(c: NamedClass) -> String {
        match c {
            NamedClass::Intervals(n) => format!("intervals({n})"),
        }
    }
}

macro_rules! optional {
    ($($(#[$doc:meta])* $name:ident : $ty:ty),* $(,)?) => {
        /// Declarative description of one experiment. Fields unused by the
        /// selected kind are ignored.
        #[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct ExperimentConfig {
            $(
                $(#[$doc])*
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $name: Option<$ty>,
            )*
            #[serde(default, skip_serializing_if = "Option::is_none")]
            pub output: Option<OutputSpec>,
        }
    };
}

optional! {
    kind: ExperimentKind,
    eps: f64,
    delta: f64,
    /// Assumed weight bound `w`; must not understate the true one.
    w_expected: f64,
    /// Standard-deviation bound `s`.
    s_bound: f64,
    trials: usize,
    master_seed: u64,
    workers: usize,
    source: PmfSpec,
    target: PmfSpec,
    concept: HypothesisSpec,
    class: ClassSpec,
    /// Size of the hypothesis class when no explicit class is given.
    class_size: usize,
    /// Loss bound `M` for the discrepancy check.
    loss_bound: f64,
    /// Support size of randomly generated bounds-check instances.
    random_support: usize,
    inject_exact: bool,
    estimation: EstimationMode,
    rejection: RejectionMode,
    /// Hardness instance size.
    n: usize,
    /// Training-set sizes for the hardness curve.
    ks: Vec<usize>,
    /// Allowed gap between Monte Carlo and closed-form hardness errors.
    tolerance: f64,
    /// Adds a wall-clock column to every row (breaks byte-identical output).
    record_timing: bool,
}

fn require<'a, T>(v: &'a Option<T>, field: &str, kind: ExperimentKind) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::config(field, format!("required for `{kind}`")))
}

fn unit(v: Option<f64>, field: &str) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x < 1.0) => Err(Error::config(
            field,
            format!("{x} must lie strictly between 0 and 1"),
        )),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("<file>", e.message().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<file>", e.to_string()))
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind
            .ok_or_else(|| Error::config("kind", "experiment kind is missing"))
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(1)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed.unwrap_or(0)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    pub fn source_pmf(&self) -> Result<DiscretePmf> {
        let spec = require(&self.source, "source", self.kind()?)?;
        spec.build()
            .map_err(|e| Error::config("source", e.to_string()))
    }

    pub fn target_pmf(&self) -> Result<DiscretePmf> {
        let spec = require(&self.target, "target", self.kind()?)?;
        spec.build()
            .map_err(|e| Error::config("target", e.to_string()))
    }

    pub fn concept_hypothesis(&self) -> Result<Hypothesis> {
        require(&self.concept, "concept", self.kind()?)?.build()
    }

    pub fn hypothesis_class(&self) -> Result<HypothesisClass> {
        require(&self.class, "class", self.kind()?)?.build()
    }

    /// Checks ranges and the fields required by the selected kind.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        unit(self.eps, "eps")?;
        unit(self.delta, "delta")?;
        if self.trials == Some(0) {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if let Some(w) = self.w_expected {
            if !(w >= 1.0 && w.is_finite()) {
                return Err(Error::config("w_expected", format!("{w} must be >= 1")));
            }
        }
        if let Some(s) = self.s_bound {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("s_bound", format!("{s} must be positive")));
            }
        }
        if let Some(m) = self.loss_bound {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::config("loss_bound", format!("{m} must be positive")));
            }
        }
        match kind {
            ExperimentKind::DistMetrics => {
                self.source_pmf()?;
                self.target_pmf()?;
            }
            ExperimentKind::BoundsCheck => {
                if self.source.is_some() || self.target.is_some() {
                    self.source_pmf()?;
                    self.target_pmf()?;
                    self.concept_hypothesis()?;
                    self.hypothesis_class()?;
                } else if self.random_support == Some(0) {
                    return Err(Error::config("random_support", "must be at least 1"));
                }
            }
            ExperimentKind::Lemma1 | ExperimentKind::Theorem2 | ExperimentKind::Compare => {
                require(&self.eps, "eps", kind)?;
                require(&self.delta, "delta", kind)?;
                let (s, t) = (self.source_pmf()?, self.target_pmf()?);
                if let Some(p) = crate::distributions::weight_ratio(&s, &t)
                    .into_result()
                    .err()
                {
                    return Err(Error::config("target", p.to_string()));
                }
                if kind != ExperimentKind::Lemma1 {
                    self.concept_hypothesis()?;
                    self.hypothesis_class()?;
                }
                if kind == ExperimentKind::Theorem2 || kind == ExperimentKind::Compare {
                    if let Some(sb) = self.s_bound {
                        for (name, p) in [("source", &s), ("target", &t)] {
                            if p.std_dev() > sb + 1e-12 {
                                return Err(Error::config(
                                    "s_bound",
                                    format!("{name} has standard deviation {} > {sb}", p.std_dev()),
                                ));
                            }
                        }
                    }
                }
            }
            ExperimentKind::Hardness => {
                let n = *require(&self.n, "n", kind)?;
                if n < 2 || !n.is_multiple_of(2) {
                    return Err(Error::config("n", format!("{n} must be even and >= 2")));
                }
                if require(&self.ks, "ks", kind)?.is_empty() {
                    return Err(Error::config("ks", "needs at least one value"));
                }
                if let Some(t) = self.tolerance {
                    if t <= 0.0 || t.is_nan() {
                        return Err(Error::config("tolerance", "must be positive"));
                    }
                }
            }
            ExperimentKind::Complexity => {
                require(&self.eps, "eps", kind)?;
                require(&self.delta, "delta", kind)?;
                require(&self.s_bound, "s_bound", kind)?;
                require(&self.w_expected, "w_expected", kind)?;
                if self.class.is_none() && self.class_size.is_none() {
                    return Err(Error::config("class_size", "give `class` or `class_size`"));
                }
                if self.class_size == Some(0) {
                    return Err(Error::config("class_size", "must be at least 1"));
                }
                if self.class.is_some() {
                    self.hypothesis_class()?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THEOREM2: &str = r#"
kind = "theorem2"
eps = 0.3
delta = 0.25
trials = 50
master_seed = 7
source = "uniform(1,8)"
target = [[3, 0.0625], [4, 0.0625], [5, 0.125], [6, 0.25], [7, 0.25], [8, 0.25]]
concept = "interval(4,6)"
class = "intervals(8)"
estimation = "multinomial"

[output]
path = "out.csv"
format = "csv"
"#;

    #[test]
    fn parses_and_validates() {
        let cfg = ExperimentConfig::from_toml(THEOREM2).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.kind, Some(ExperimentKind::Theorem2));
        assert_eq!(cfg.target_pmf().unwrap().len(), 6);
        assert_eq!(cfg.hypothesis_class().unwrap().len(), 37);
        assert_eq!(
            cfg.concept_hypothesis().unwrap(),
            Hypothesis::interval(4, 6)
        );
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::from_toml(THEOREM2).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);

        let tables = r#"
kind = "bounds-check"
source = [[1, 0.5], [2, 0.5]]
target = "binomial(1,0.25)"
concept = [[1, 0], [2, 1]]
class = ["constant(0)", "constant(1)", [[1, 1]], "empty", "indicator(2)"]
loss_bound = 2.0
"#;
        let cfg = ExperimentConfig::from_toml(tables).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.hypothesis_class().unwrap().len(), 5);
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn field_level_errors() {
        let err = |text: &str| match ExperimentConfig::from_toml(text).and_then(|c| c.validate()) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(err("kind = \"lemma1\"\neps = 1.5"), "eps");
        assert_eq!(err("kind = \"lemma1\"\neps = 0.3\ndelta = 0.2"), "source");
        assert_eq!(err("kind = \"hardness\"\nn = 3\nks = [1]"), "n");
        assert_eq!(err("kind = \"hardness\"\nn = 4"), "ks");
        assert_eq!(err("eps = 0.3"), "kind");
        assert_eq!(err("kind = \"dist-metrics\"\ntrials = 0"), "trials");
        assert_eq!(
            err("kind = \"complexity\"\neps = 0.1\ndelta = 0.1\ns_bound = 1.0"),
            "w_expected"
        );
        assert_eq!(
            err(
                "kind = \"dist-metrics\"\nsource = [[1, 0.5], [2, 0.6]]\ntarget = \"uniform(1,2)\""
            ),
            "source"
        );
        // Unknown keys are rejected at parse time.
        assert_eq!(err("kind = \"lemma1\"\nepsilon = 0.3"), "<file>");
    }

    #[test]
    fn violated_weight_ratio_is_a_config_error() {
        let text = r#"
kind = "theorem2"
eps = 0.3
delta = 0.25
source = [[1, 1.0]]
target = "uniform(1,2)"
concept = "empty"
class = "intervals(2)"
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "target"));
    }

    #[test]
    fn hypothesis_spec_strings() {
        for s in ["interval(2,4)", "indicator(3)", "constant(1)", "empty"] {
            let h: NamedHypothesis = s.parse().unwrap();
            assert_eq!(h.to_string(), s);
        }
        assert!("constant(2)".parse::<NamedHypothesis>().is_err());
        assert!("interval(1)".parse::<NamedHypothesis>().is_err());
        assert!(NamedClass::try_from("intervals(0)".to_string()).is_err());
    }
}
