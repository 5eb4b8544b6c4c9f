//! Domain adaptation by rejection sampling.
//!
//! 1. Estimate source and target point masses from `m1` draws of each oracle.
//! 2. Draw `m2` labeled source points; keep point `i` with probability
//!    proportional to `p̂_target(i) / p̂_source(i)`.
//! 3. Run ERM on the kept points.
//!
//! The kept points follow an induced distribution `D_f`, which
//! [`analytic_df`] computes exactly from the true source and the plan so the
//! harness can score `d(D_f, D_T)` without sampling error.

use num_traits::Zero;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::distributions::{
    chebyshev_window, l1_distance, truncate, union_support, weight_ratio, DiscretePmf, Point,
};
use crate::error::{Error, Result};
use crate::estimation::{
    estimate_pmf, within_chernoff_band, BudgetPlan, EmpiricalEstimate, EstimationMode,
};
use crate::exact::{self, rat, Rational};
use crate::hypotheses::{
    check_prop2_bound, check_unit, erm_learn, exact_error, pac_sample_size, Hypothesis,
    HypothesisClass,
};
use crate::oracles::SampleOracle;

/// Per-point acceptance probabilities and the step-2 draw budget.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionPlan {
    support: Vec<Point>,
    acceptance: Vec<f64>,
    source_estimate: EmpiricalEstimate,
    target_estimate: EmpiricalEstimate,
    m2_prime: u64,
    m2_budget: u64,
}

impl RejectionPlan {
    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn acceptance(&self) -> &[f64] {
        &self.acceptance
    }

    /// Acceptance probability of `x`; zero off the plan's support.
    pub fn acceptance_at(&self, x: Point) -> f64 {
        self.support
            .binary_search(&x)
            .map(|i| self.acceptance[i])
            .unwrap_or(0.0)
    }

    pub fn source_estimate(&self) -> &EmpiricalEstimate {
        &self.source_estimate
    }

    pub fn target_estimate(&self) -> &EmpiricalEstimate {
        &self.target_estimate
    }

    pub fn m2_prime(&self) -> u64 {
        self.m2_prime
    }

    pub fn m2_budget(&self) -> u64 {
        self.m2_budget
    }
}

/// `ceil(m2' · w² · ln(4/delta))`.
pub fn m2_budget(m2_prime: u64, w: f64, delta: f64) -> Result<u64> {
    if m2_prime == 0 {
        return Err(Error::param("m2_prime", 0.0, "must be at least 1"));
    }
    if !(w >= 1.0 && w.is_finite()) {
        return Err(Error::param("w", w, "weight bound must be finite and >= 1"));
    }
    check_unit("delta", delta)?;
    Ok((m2_prime as f64 * w * w * (4.0 / delta).ln()).ceil() as u64)
}

/// Acceptance `(p̂₂ᵢ/p̂₁ᵢ) / maxⱼ(p̂₂ⱼ/p̂₁ⱼ)`, so the largest ratio is accepted
/// with probability exactly 1. Points with `p̂₁ᵢ = 0` are always rejected.
pub fn build_plan(
    source_est: &EmpiricalEstimate,
    target_est: &EmpiricalEstimate,
    m2_prime: u64,
    w: f64,
    delta: f64,
) -> Result<RejectionPlan> {
    if source_est.support() != target_est.support() {
        return Err(Error::SupportMismatch);
    }
    let m2 = m2_budget(m2_prime, w, delta)?;
    let ratios: Vec<f64> = source_est
        .phat()
        .iter()
        .zip(target_est.phat())
        .map(|(&s, &t)| if s > 0.0 { t / s } else { 0.0 })
        .collect();
    if source_est.phat().iter().all(|&s| s <= 0.0) {
        return Err(Error::DegeneratePlan("source estimate is zero everywhere"));
    }
    let max = ratios.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::DegeneratePlan(
            "no point has positive estimated mass under both distributions",
        ));
    }
    Ok(RejectionPlan {
        support: source_est.support().to_vec(),
        acceptance: ratios.iter().map(|r| r / max).collect(),
        source_estimate: source_est.clone(),
        target_estimate: target_est.clone(),
        m2_prime,
        m2_budget: m2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionMode {
    /// Multinomial source counts, then a binomial thinning per point.
    #[default]
    Binomial,
    /// One oracle call and one coin per draw.
    Streaming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    /// Fewer than `m2'` points survived rejection.
    Shortfall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionOutcome {
    pub data: Vec<(Point, bool)>,
    pub drawn: u64,
    pub kept: u64,
    pub rate: f64,
    pub status: SampleStatus,
}

/// Draws `plan.m2_budget()` labeled points and keeps each independently with
/// its acceptance probability.
pub fn rejection_sample<R: Rng + ?Sized>(
    oracle: &mut SampleOracle,
    plan: &RejectionPlan,
    rng: &mut R,
    mode: RejectionMode,
) -> Result<RejectionOutcome> {
    let drawn = plan.m2_budget;
    let mut data = Vec::new();
    match mode {
        RejectionMode::Streaming => {
            for _ in 0..drawn {
                let (x, y) = oracle.draw_labeled()?;
                if rng.random::<f64>() < plan.acceptance_at(x) {
                    data.push((x, y));
                }
            }
        }
        RejectionMode::Binomial => {
            for (x, y, k) in oracle.draw_labeled_counts(drawn)? {
                let a = plan.acceptance_at(x);
                let kept = if a >= 1.0 {
                    k
                } else if a <= 0.0 {
                    0
                } else {
                    Binomial::new(k, a)
                        .expect("acceptance is a probability")
                        .sample(rng)
                };
                data.extend(std::iter::repeat_n((x, y), kept as usize));
            }
        }
    }
    let kept = data.len() as u64;
    Ok(RejectionOutcome {
        rate: if drawn == 0 {
            0.0
        } else {
            kept as f64 / drawn as f64
        },
        status: if kept < plan.m2_prime {
            SampleStatus::Shortfall
        } else {
            SampleStatus::Ok
        },
        data,
        drawn,
        kept,
    })
}

/// Exact law of a kept point: `D_f(i) ∝ source(i) · acceptance(i)`.
///
/// Computed in rational arithmetic. The max-ratio scaling cancels under
/// normalization, so `D_f(i) ∝ source(i) · p̂₂ᵢ / p̂₁ᵢ`; with exact estimates
/// this is the target itself.
pub fn analytic_df(true_source: &DiscretePmf, plan: &RejectionPlan) -> Result<DiscretePmf> {
    let weights: Vec<Rational> = plan
        .support
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let s = true_source.mass_at(x);
            let (s_hat, t_hat) = (
                plan.source_estimate.phat()[i],
                plan.target_estimate.phat()[i],
            );
            if s <= 0.0 || s_hat <= 0.0 || t_hat <= 0.0 {
                Rational::zero()
            } else {
                rat(s) * rat(t_hat) / rat(s_hat)
            }
        })
        .collect();
    let total = exact::sum(&weights);
    if total.is_zero() {
        return Err(Error::DegeneratePlan("no source mass survives rejection"));
    }
    let mass = weights
        .iter()
        .map(|w| exact::to_f64(&(w / &total)))
        .collect();
    DiscretePmf::new(plan.support.clone(), mass)
}

/// `Σᵢ |p₂ᵢ − p̂₂ᵢ·p₁ᵢ/p̂₁ᵢ|`: the per-point deviation bounded in the
/// finite-support analysis, taken without the global normalization of `D_f`.
pub fn unnormalized_deviation(
    true_source: &DiscretePmf,
    true_target: &DiscretePmf,
    plan: &RejectionPlan,
) -> f64 {
    union_support(true_source, true_target)
        .into_iter()
        .map(|x| {
            let (p1, p2) = (true_source.mass_at(x), true_target.mass_at(x));
            let s_hat = plan.source_estimate.mass_at(x);
            let scaled = if s_hat > 0.0 {
                plan.target_estimate.mass_at(x) * p1 / s_hat
            } else {
                0.0
            };
            (p2 - scaled).abs()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    pub eps: f64,
    pub delta: f64,
    /// Standard-deviation bound; enables Chebyshev truncation when the
    /// union support is wider than the window it implies.
    pub s_bound: Option<f64>,
    /// Assumed weight bound. Defaults to the true `w` of the pair.
    pub w_bound: Option<f64>,
    pub estimation: EstimationMode,
    pub rejection: RejectionMode,
    /// Replace step-1 estimates by the true masses.
    pub inject_exact: bool,
}

impl PipelineParams {
    pub fn new(eps: f64, delta: f64) -> Self {
        PipelineParams {
            eps,
            delta,
            s_bound: None,
            w_bound: None,
            estimation: EstimationMode::Multinomial,
            rejection: RejectionMode::Binomial,
            inject_exact: false,
        }
    }
}

/// Everything a single pipeline run produced, plus exact diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DaRunReport {
    pub hypothesis: Hypothesis,
    pub w: f64,
    pub budget: BudgetPlan,
    pub m2_prime: u64,
    pub m2_budget: u64,
    pub accepted_count: u64,
    pub drawn_count: u64,
    pub empirical_acceptance_rate: f64,
    pub status: SampleStatus,
    pub estimation_passed: bool,
    pub df_analytic: DiscretePmf,
    pub d_df_target: f64,
    pub unnormalized_deviation: f64,
    pub df_error: f64,
    pub target_error: f64,
    /// `d(D_f, D_T) <= eps/4` and `error_{D_f}(h) <= eps/2`.
    pub claim1_premise: bool,
    /// `error_T(h) <= error_{D_f}(h) + 2 d(D_f, D_T)`, exact.
    pub transfer_bound_holds: bool,
    pub truncated: bool,
    pub dropped_source_mass: f64,
    pub dropped_target_mass: f64,
}

/// Runs estimate → rejection-sample → ERM with budgets composed for an
/// overall `(eps, delta)` guarantee on the target: step 1 at accuracy `eps/4`
/// and confidence `delta/2`, step 2 sized for an `(eps/2, delta/2)` learner.
pub fn run_da_pipeline<R: Rng + ?Sized>(
    source: &DiscretePmf,
    target: &DiscretePmf,
    concept: &Hypothesis,
    hclass: &HypothesisClass,
    params: &PipelineParams,
    rng: &mut R,
) -> Result<DaRunReport> {
    check_unit("eps", params.eps)?;
    check_unit("delta", params.delta)?;
    weight_ratio(source, target).into_result()?;

    let (src, tgt, truncated, dropped_s, dropped_t) = match params.s_bound {
        Some(s) => chebyshev_restrict(source, target, s, params.eps)?,
        None => (source.clone(), target.clone(), false, 0.0, 0.0),
    };
    let true_w = 1.0 / weight_ratio(&src, &tgt).into_result()?.0;
    let w = match params.w_bound {
        Some(b) if b + 1e-9 < true_w => {
            return Err(Error::param(
                "w_bound",
                b,
                "understates the true weight ratio",
            ))
        }
        Some(b) => b,
        None => true_w,
    }
    .max(1.0);

    let domain = union_support(&src, &tgt);
    let budget = BudgetPlan::new(domain.len(), w, params.eps / 4.0, params.delta / 2.0)?;

    let mut source_oracle = SampleOracle::labeled(src.clone(), concept.clone(), rng.random());
    let mut target_oracle = SampleOracle::unlabeled(tgt.clone(), rng.random());

    let (source_est, target_est) = if params.inject_exact {
        (
            EmpiricalEstimate::exact(&src, &domain),
            EmpiricalEstimate::exact(&tgt, &domain),
        )
    } else {
        (
            estimate_pmf(&mut source_oracle, budget.m1, &domain, params.estimation)?,
            estimate_pmf(&mut target_oracle, budget.m1, &domain, params.estimation)?,
        )
    };
    let estimation_passed = within_chernoff_band(&src, &tgt, &source_est, &target_est, &budget);

    let m2_prime = pac_sample_size(hclass.len(), params.eps / 2.0, params.delta / 2.0)?;
    let plan = build_plan(&source_est, &target_est, m2_prime, w, params.delta)?;
    let outcome = rejection_sample(&mut source_oracle, &plan, rng, params.rejection)?;
    let hypothesis = erm_learn(&outcome.data, hclass);

    let df = analytic_df(&src, &plan)?;
    let d_df_target = l1_distance(&df, target).l1;
    let df_error = exact_error(&hypothesis, concept, &df);
    let target_error = exact_error(&hypothesis, concept, target);
    let transfer = check_prop2_bound(&hypothesis, concept, &df, target);

    Ok(DaRunReport {
        w,
        budget,
        m2_prime,
        m2_budget: plan.m2_budget,
        accepted_count: outcome.kept,
        drawn_count: outcome.drawn,
        empirical_acceptance_rate: outcome.rate,
        status: outcome.status,
        estimation_passed,
        unnormalized_deviation: unnormalized_deviation(&src, &tgt, &plan),
        d_df_target,
        df_error,
        target_error,
        claim1_premise: d_df_target <= params.eps / 4.0 && df_error <= params.eps / 2.0,
        transfer_bound_holds: transfer.holds,
        df_analytic: df,
        hypothesis,
        truncated,
        dropped_source_mass: dropped_s,
        dropped_target_mass: dropped_t,
    })
}

type Restricted = (DiscretePmf, DiscretePmf, bool, f64, f64);

/// Restricts both distributions to the Chebyshev window around the target
/// mean when the union support is wider than that window.
fn chebyshev_restrict(
    source: &DiscretePmf,
    target: &DiscretePmf,
    s: f64,
    eps: f64,
) -> Result<Restricted> {
    for sd in [source.std_dev(), target.std_dev()] {
        if sd > s + 1e-12 {
            return Err(Error::param(
                "s_bound",
                s,
                "smaller than a standard deviation",
            ));
        }
    }
    let (lo, hi) = chebyshev_window(target.mean(), s, eps);
    let domain = union_support(source, target);
    let inside = |x: &Point| lo <= *x && *x <= hi;
    if domain.iter().all(inside) {
        return Ok((source.clone(), target.clone(), false, 0.0, 0.0));
    }
    let (src, ds) = truncate(source, lo, hi)?;
    let (tgt, dt) = truncate(target, lo, hi)?;
    Ok((src, tgt, true, ds, dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;

    fn pmf(pairs: &[(Point, f64)]) -> DiscretePmf {
        DiscretePmf::from_pairs(pairs.iter().copied()).unwrap()
    }

    fn two_point_plan(m2_prime: u64) -> (DiscretePmf, DiscretePmf, RejectionPlan) {
        let s = pmf(&[(1, 0.5), (2, 0.5)]);
        let t = pmf(&[(1, 0.75), (2, 0.25)]);
        let plan = build_plan(
            &EmpiricalEstimate::exact(&s, &[1, 2]),
            &EmpiricalEstimate::exact(&t, &[1, 2]),
            m2_prime,
            1.5,
            0.1,
        )
        .unwrap();
        (s, t, plan)
    }

    #[test]
    fn m2_budget_example() {
        // 400 · ln 40 = 1475.55...
        assert_eq!(m2_budget(100, 2.0, 0.1).unwrap(), 1476);
        assert!(m2_budget(0, 2.0, 0.1).is_err());
    }

    #[test]
    fn plan_with_equal_estimates_accepts_everything() {
        let p = DiscretePmf::binomial(5, 0.4).unwrap();
        let e = EmpiricalEstimate::exact(&p, p.support());
        let plan = build_plan(&e, &e, 10, 1.0, 0.2).unwrap();
        assert!(plan.acceptance().iter().all(|&a| a == 1.0));
        assert_eq!(plan.m2_budget(), (10.0 * (4.0f64 / 0.2).ln()).ceil() as u64);
    }

    #[test]
    fn two_point_plan_acceptance() {
        let (_, _, plan) = two_point_plan(10);
        assert_eq!(plan.acceptance()[0], 1.0);
        assert!((plan.acceptance()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn plan_errors() {
        let a = EmpiricalEstimate::exact(&DiscretePmf::point_mass(1), &[1, 2]);
        let b = EmpiricalEstimate::exact(&DiscretePmf::point_mass(2), &[1, 2]);
        assert!(matches!(
            build_plan(&a, &b, 1, 1.0, 0.1),
            Err(Error::DegeneratePlan(_))
        ));
        let c = EmpiricalEstimate::exact(&DiscretePmf::point_mass(1), &[1]);
        assert_eq!(build_plan(&a, &c, 1, 1.0, 0.1), Err(Error::SupportMismatch));
        let zero = EmpiricalEstimate::from_counts(&[1, 2], &[]).unwrap();
        assert!(build_plan(&zero, &a, 1, 1.0, 0.1).is_err());
    }

    #[test]
    fn zero_source_estimate_is_rejected() {
        let s = EmpiricalEstimate::from_counts(&[1, 2, 3], &[(1, 5), (2, 5)]).unwrap();
        let t = EmpiricalEstimate::from_counts(&[1, 2, 3], &[(1, 3), (2, 3), (3, 4)]).unwrap();
        let plan = build_plan(&s, &t, 1, 1.0, 0.5).unwrap();
        assert_eq!(plan.acceptance_at(3), 0.0);
        assert_eq!(plan.acceptance_at(1), 1.0);
    }

    #[test]
    fn analytic_df_examples() {
        let (s, t, plan) = two_point_plan(10);
        let df = analytic_df(&s, &plan).unwrap();
        assert_eq!(df, t);
        assert_eq!(l1_distance(&df, &t).l1, 0.0);

        let e = EmpiricalEstimate::exact(&s, &[1, 2]);
        let flat = build_plan(&e, &e, 1, 1.0, 0.5).unwrap();
        assert_eq!(analytic_df(&s, &flat).unwrap(), s);
        assert_eq!(unnormalized_deviation(&s, &t, &plan), 0.0);
    }

    #[test]
    fn rejection_sample_all_accepted() {
        let p = DiscretePmf::uniform(1, 4).unwrap();
        let e = EmpiricalEstimate::exact(&p, p.support());
        let plan = build_plan(&e, &e, 5, 1.0, 0.5).unwrap();
        for mode in [RejectionMode::Binomial, RejectionMode::Streaming] {
            let mut o = SampleOracle::labeled(p.clone(), Hypothesis::interval(1, 2), 3);
            let out = rejection_sample(&mut o, &plan, &mut rng_from(1), mode).unwrap();
            assert_eq!(out.kept, plan.m2_budget());
            assert_eq!(out.status, SampleStatus::Ok);
        }
    }

    #[test]
    fn rejection_sample_single_point() {
        let p = DiscretePmf::uniform(1, 4).unwrap();
        let s = EmpiricalEstimate::exact(&p, p.support());
        let t = EmpiricalEstimate::exact(&DiscretePmf::point_mass(3), p.support());
        let plan = build_plan(&s, &t, 5, 4.0, 0.5).unwrap();
        for mode in [RejectionMode::Binomial, RejectionMode::Streaming] {
            let mut o = SampleOracle::labeled(p.clone(), Hypothesis::interval(3, 4), 3);
            let out = rejection_sample(&mut o, &plan, &mut rng_from(2), mode).unwrap();
            assert!(out.kept > 0);
            assert!(out.data.iter().all(|&(x, y)| x == 3 && y));
        }
    }

    #[test]
    fn two_point_acceptance_rate() {
        // Expected rate 0.5·1 + 0.5·(1/3) = 2/3.
        let (s, _, plan) = two_point_plan(10);
        let plan = RejectionPlan {
            m2_budget: 100_000,
            ..plan
        };
        let sigma = ((2.0 / 3.0) * (1.0 / 3.0) / 1e5f64).sqrt();
        for mode in [RejectionMode::Binomial, RejectionMode::Streaming] {
            let mut o = SampleOracle::labeled(s.clone(), Hypothesis::indicator(1), 8);
            let out = rejection_sample(&mut o, &plan, &mut rng_from(4), mode).unwrap();
            assert!(
                (out.rate - 2.0 / 3.0).abs() <= 3.0 * sigma,
                "{mode:?}: {}",
                out.rate
            );
        }
    }

    #[test]
    fn pipeline_rejects_violated_weight_ratio() {
        let r = run_da_pipeline(
            &DiscretePmf::point_mass(1),
            &DiscretePmf::uniform(1, 2).unwrap(),
            &Hypothesis::indicator(1),
            &HypothesisClass::intervals(2),
            &PipelineParams::new(0.3, 0.25),
            &mut rng_from(0),
        );
        assert_eq!(r.unwrap_err(), Error::WeightRatioViolated { point: 2 });
    }

    #[test]
    fn pipeline_without_shift() {
        let p = DiscretePmf::uniform(1, 8).unwrap();
        let c = Hypothesis::interval(3, 5);
        let class = HypothesisClass::intervals(8);
        let params = PipelineParams::new(0.3, 0.25);
        let mut successes = 0;
        for seed in 0..20 {
            let r = run_da_pipeline(&p, &p, &c, &class, &params, &mut rng_from(seed)).unwrap();
            assert_eq!(r.w, 1.0);
            assert!(r.accepted_count <= r.drawn_count);
            assert!(r.transfer_bound_holds);
            if r.target_error <= 0.3 {
                successes += 1;
            }
        }
        assert!(successes >= 15, "{successes}/20");
    }

    #[test]
    fn pipeline_with_exact_estimates_hits_target() {
        let s = DiscretePmf::uniform(1, 4).unwrap();
        let t = pmf(&[(1, 0.125), (2, 0.125), (3, 0.25), (4, 0.5)]);
        let mut params = PipelineParams::new(0.3, 0.25);
        params.inject_exact = true;
        let r = run_da_pipeline(
            &s,
            &t,
            &Hypothesis::interval(3, 4),
            &HypothesisClass::intervals(4),
            &params,
            &mut rng_from(3),
        )
        .unwrap();
        assert_eq!(r.d_df_target, 0.0);
        assert_eq!(r.w, 2.0);
        assert!(r.estimation_passed);
    }

    #[test]
    fn pipeline_truncates_wide_supports() {
        // Binomial(200, 0.5) has sd ~7.07; a window for s = 8, eps = 0.3
        // spans about ±20 around the mean, far narrower than 0..=200.
        let s = DiscretePmf::binomial(200, 0.5).unwrap();
        let mut params = PipelineParams::new(0.3, 0.25);
        params.s_bound = Some(8.0);
        params.inject_exact = true;
        let r = run_da_pipeline(
            &s,
            &s,
            &Hypothesis::interval(90, 110),
            &HypothesisClass::lookup_tables(vec![Hypothesis::interval(90, 110), Hypothesis::Empty])
                .unwrap(),
            &params,
            &mut rng_from(5),
        )
        .unwrap();
        assert!(r.truncated);
        assert!(r.dropped_target_mass <= 0.15);
        assert!(r.dropped_target_mass > 0.0);
        assert!(r.d_df_target <= r.dropped_target_mass + 1e-12);

        params.s_bound = Some(1.0);
        assert!(run_da_pipeline(
            &s,
            &s,
            &Hypothesis::Empty,
            &HypothesisClass::intervals(2),
            &params,
            &mut rng_from(5)
        )
        .is_err());
    }
}
