use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::random::random_bounds_instance;
use super::{ExperimentOutput, Summary, TrialReport, Value};
use crate::distributions::{l1_distance, union_support, weight_ratio, DiscretePmf, Point};
use crate::error::Result;
use crate::estimation::{
    chebyshev_support_size, chernoff_sample_size, estimate_pmf, within_chernoff_band, BudgetPlan,
};
use crate::hardness::{analytic_crossing, hardness_curve};
use crate::hypotheses::{
    check_prop1_bound, check_prop2_bound, check_theorem1_bound, erm_learn, exact_error,
    pac_sample_size, Hypothesis, HypothesisClass, LossSpec,
};
use crate::oracles::SampleOracle;
use crate::rejection::{
    analytic_df, build_plan, m2_budget, run_da_pipeline, unnormalized_deviation, PipelineParams,
};
use crate::seeding::{derive_seed, rng_from};

pub(super) fn dispatch(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.kind()? {
        ExperimentKind::DistMetrics => dist_metrics(cfg),
        ExperimentKind::BoundsCheck => bounds_check(cfg),
        ExperimentKind::Lemma1 => lemma1(cfg),
        ExperimentKind::Theorem2 => theorem2(cfg),
        ExperimentKind::Hardness => hardness(cfg),
        ExperimentKind::Compare => compare(cfg),
        ExperimentKind::Complexity => complexity(cfg),
    }
}

/// Runs `f` once per trial in parallel and returns rows in trial order.
fn per_trial<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<TrialReport>>
where
    F: Fn(usize, u64) -> Result<TrialReport> + Sync + Send,
{
    let master = cfg.master_seed();
    let timing = cfg.record_timing.unwrap_or(false);
    (0..cfg.trials())
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(master, t as u64);
            let start = Instant::now();
            let row = f(t, seed)?;
            Ok(if timing {
                row.with("wall_time_ms", start.elapsed().as_secs_f64() * 1e3)
            } else {
                row
            })
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, (var / n).sqrt())
}

fn column<'a>(rows: &'a [TrialReport], name: &'a str) -> impl Iterator<Item = f64> + 'a {
    rows.iter()
        .filter_map(move |r| r.get(name).and_then(Value::as_f64))
}

fn event_string(points: &[Point]) -> String {
    points
        .iter()
        .map(Point::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn dist_metrics(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (p, q) = (cfg.source_pmf()?, cfg.target_pmf()?);
    let d = l1_distance(&p, &q);
    let gap = (p.probability(&d.witness_event) - q.probability(&d.witness_event)).abs();
    let wr = weight_ratio(&p, &q);
    let (ratio, witness, violated) = match wr {
        crate::distributions::WeightRatioReport::Bounded {
            ratio,
            witness_point,
        } => (Some(ratio), Some(witness_point), None),
        crate::distributions::WeightRatioReport::Violated { point } => (None, None, Some(point)),
    };
    let row = TrialReport::new(0, cfg.master_seed())
        .with("l1", d.l1)
        .with("witness_event", event_string(&d.witness_event))
        .with("witness_gap", gap)
        .with("weight_ratio", ratio)
        .with("w", wr.w())
        .with("ratio_witness", witness)
        .with("violated_point", violated)
        .with("source_mean", p.mean())
        .with("source_std_dev", p.std_dev())
        .with("target_mean", q.mean())
        .with("target_std_dev", q.std_dev())
        .with("success", true);
    let rows = vec![row];
    let summary = Summary::new(cfg, &rows, 1.0)?;
    Ok(ExperimentOutput { summary, rows })
}

struct BoundsRow {
    thm1_checked: usize,
    thm1_violations: usize,
    prop2_violations: usize,
    prop1: crate::hypotheses::BoundCheck,
}

fn check_instance(
    p: &DiscretePmf,
    q: &DiscretePmf,
    c: &Hypothesis,
    class: &HypothesisClass,
    loss: LossSpec,
) -> BoundsRow {
    let mut out = BoundsRow {
        thm1_checked: 0,
        thm1_violations: 0,
        prop2_violations: 0,
        prop1: check_prop1_bound(p, q, class, c, loss),
    };
    for h in class.members() {
        if let Ok(b) = check_theorem1_bound(h, c, p, q) {
            out.thm1_checked += 1;
            out.thm1_violations += usize::from(!b.holds);
        }
        out.prop2_violations += usize::from(!check_prop2_bound(h, c, p, q).holds);
    }
    out
}

fn bounds_check(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let loss = LossSpec::new(cfg.loss_bound.unwrap_or(1.0))?;
    if cfg.source.is_none() {
        let n = cfg.random_support.unwrap_or(8);
        let rows = per_trial(cfg, |t, seed| {
            let inst = random_bounds_instance(&mut rng_from(seed), n);
            let b = check_instance(&inst.source, &inst.target, &inst.concept, &inst.class, loss);
            let ok = b.thm1_violations == 0 && b.prop2_violations == 0 && b.prop1.holds;
            Ok(TrialReport::new(t, seed)
                .with("support_size", n)
                .with("class_size", inst.class.len())
                .with("l1", l1_distance(&inst.source, &inst.target).l1)
                .with("w", weight_ratio(&inst.source, &inst.target).w())
                .with("thm1_checked", b.thm1_checked)
                .with("thm1_violations", b.thm1_violations)
                .with("prop2_violations", b.prop2_violations)
                .with("prop1_lhs", b.prop1.lhs)
                .with("prop1_rhs", b.prop1.rhs)
                .with("prop1_holds", b.prop1.holds)
                .with("success", ok))
        })?;
        let summary = Summary::new(cfg, &rows, 1.0)?;
        return Ok(ExperimentOutput { summary, rows });
    }

    let (p, q) = (cfg.source_pmf()?, cfg.target_pmf()?);
    let c = cfg.concept_hypothesis()?;
    let class = cfg.hypothesis_class()?;
    let seed = cfg.master_seed();
    let rows: Vec<TrialReport> = class
        .members()
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let thm1 = check_theorem1_bound(h, &c, &p, &q).ok();
            let prop2 = check_prop2_bound(h, &c, &p, &q);
            TrialReport::new(i, seed)
                .with("hypothesis", h.to_string())
                .with("source_error", exact_error(h, &c, &p))
                .with("target_error", exact_error(h, &c, &q))
                .with("thm1_lhs", thm1.map(|b| b.lhs))
                .with("thm1_rhs", thm1.map(|b| b.rhs))
                .with("thm1_holds", thm1.map(|b| b.holds))
                .with("prop2_lhs", prop2.lhs)
                .with("prop2_rhs", prop2.rhs)
                .with("prop2_holds", prop2.holds)
                .with("success", thm1.is_none_or(|b| b.holds) && prop2.holds)
        })
        .collect();
    let prop1 = check_prop1_bound(&p, &q, &class, &c, loss);
    let summary = Summary::new(cfg, &rows, 1.0)?
        .stat("discrepancy", prop1.lhs)
        .stat("discrepancy_bound", prop1.rhs)
        .check("prop1_holds", prop1.holds);
    Ok(ExperimentOutput { summary, rows })
}

fn lemma1(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (source, target) = (cfg.source_pmf()?, cfg.target_pmf()?);
    let eps = cfg.eps.expect("validated");
    let delta = cfg.delta.expect("validated");
    let domain = union_support(&source, &target);
    let true_w = weight_ratio(&source, &target).into_result()?.0.recip();
    let w = cfg.w_expected.unwrap_or(true_w).max(1.0);
    let budget = BudgetPlan::new(domain.len(), w, eps, delta)?;
    let mode = cfg.estimation.unwrap_or_default();
    let inject = cfg.inject_exact.unwrap_or(false);

    let rows = per_trial(cfg, |t, seed| {
        let (s_est, t_est) = if inject {
            (
                crate::estimation::EmpiricalEstimate::exact(&source, &domain),
                crate::estimation::EmpiricalEstimate::exact(&target, &domain),
            )
        } else {
            let mut so = SampleOracle::unlabeled(source.clone(), derive_seed(seed, 0));
            let mut to = SampleOracle::unlabeled(target.clone(), derive_seed(seed, 1));
            (
                estimate_pmf(&mut so, budget.m1, &domain, mode)?,
                estimate_pmf(&mut to, budget.m1, &domain, mode)?,
            )
        };
        let passed = within_chernoff_band(&source, &target, &s_est, &t_est, &budget);
        let plan = build_plan(&s_est, &t_est, 1, w, delta)?;
        let df = analytic_df(&source, &plan)?;
        let d = l1_distance(&df, &target).l1;
        Ok(TrialReport::new(t, seed)
            .with("n", domain.len())
            .with("w", w)
            .with("eps", eps)
            .with("delta", delta)
            .with("m1", budget.m1)
            .with("heavy_cutoff", budget.heavy_cutoff)
            .with("estimation_passed", passed)
            .with("d_df_target", d)
            .with(
                "unnormalized_deviation",
                unnormalized_deviation(&source, &target, &plan),
            )
            .with("success", d <= eps))
    })?;
    let (mean_d, se_d) = mean(column(&rows, "d_df_target"));
    let summary = Summary::new(cfg, &rows, 1.0 - delta)?
        .stat("mean_d_df_target", mean_d)
        .stat("std_err_d_df_target", se_d)
        .stat("m1", budget.m1);
    Ok(ExperimentOutput { summary, rows })
}

fn pipeline_params(cfg: &ExperimentConfig) -> PipelineParams {
    let mut params =
        PipelineParams::new(cfg.eps.expect("validated"), cfg.delta.expect("validated"));
    params.s_bound = cfg.s_bound;
    params.w_bound = cfg.w_expected;
    params.estimation = cfg.estimation.unwrap_or_default();
    params.rejection = cfg.rejection.unwrap_or_default();
    params.inject_exact = cfg.inject_exact.unwrap_or(false);
    params
}

fn theorem2(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (source, target) = (cfg.source_pmf()?, cfg.target_pmf()?);
    let concept = cfg.concept_hypothesis()?;
    let class = cfg.hypothesis_class()?;
    let params = pipeline_params(cfg);

    let rows = per_trial(cfg, |t, seed| {
        let r = run_da_pipeline(
            &source,
            &target,
            &concept,
            &class,
            &params,
            &mut rng_from(seed),
        )?;
        let floor = (r.w * r.w).recip();
        let sigma = super::binomial_sigma(floor, r.m2_budget as usize);
        let floor_ok = r.empirical_acceptance_rate >= floor - 3.0 * sigma;
        Ok(TrialReport::new(t, seed)
            .with("n", r.budget.n)
            .with("w", r.w)
            .with("eps", params.eps)
            .with("delta", params.delta)
            .with("m1", r.budget.m1)
            .with("heavy_cutoff", r.budget.heavy_cutoff)
            .with("m2_prime", r.m2_prime)
            .with("m2", r.m2_budget)
            .with("drawn", r.drawn_count)
            .with("kept", r.accepted_count)
            .with("acceptance_rate", r.empirical_acceptance_rate)
            .with("rate_floor", floor)
            .with("rate_sigma", sigma)
            .with("rate_floor_ok", floor_ok)
            .with("status", format!("{:?}", r.status).to_lowercase())
            .with("estimation_passed", r.estimation_passed)
            .with("d_df_target", r.d_df_target)
            .with("unnormalized_deviation", r.unnormalized_deviation)
            .with("df_error", r.df_error)
            .with("target_error", r.target_error)
            .with("hypothesis", r.hypothesis.to_string())
            .with("claim1_premise", r.claim1_premise)
            .with("transfer_bound_holds", r.transfer_bound_holds)
            .with("truncated", r.truncated)
            .with("dropped_source_mass", r.dropped_source_mass)
            .with("dropped_target_mass", r.dropped_target_mass)
            .with("success", r.target_error <= params.eps))
    })?;

    let count = |pred: &dyn Fn(&TrialReport) -> bool| rows.iter().filter(|r| pred(r)).count();
    let flag = |r: &TrialReport, name: &str| r.get(name).and_then(Value::as_bool) == Some(true);
    let floor_violations = count(&|r| flag(r, "estimation_passed") && !flag(r, "rate_floor_ok"));
    let transfer_violations = count(&|r| !flag(r, "transfer_bound_holds"));
    let (mean_err, se_err) = mean(column(&rows, "target_error"));
    let summary = Summary::new(cfg, &rows, 1.0 - params.delta)?
        .stat("mean_target_error", mean_err)
        .stat("std_err_target_error", se_err)
        .stat(
            "estimation_passed",
            count(&|r| flag(r, "estimation_passed")),
        )
        .stat("claim1_premise", count(&|r| flag(r, "claim1_premise")))
        .stat("rate_floor_violations", floor_violations)
        .check("rate_floor", floor_violations == 0)
        .check("transfer_bound", transfer_violations == 0);
    Ok(ExperimentOutput { summary, rows })
}

fn compare(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (source, target) = (cfg.source_pmf()?, cfg.target_pmf()?);
    let concept = cfg.concept_hypothesis()?;
    let class = cfg.hypothesis_class()?;
    let params = pipeline_params(cfg);

    let rows = per_trial(cfg, |t, seed| {
        let r = run_da_pipeline(
            &source,
            &target,
            &concept,
            &class,
            &params,
            &mut rng_from(seed),
        )?;
        // The naive learner gets as many labeled source draws as rejection
        // sampling consumed, and keeps all of them.
        let mut oracle =
            SampleOracle::labeled(source.clone(), concept.clone(), derive_seed(seed, u64::MAX));
        let samples: Vec<(Point, bool)> = oracle
            .draw_labeled_counts(r.drawn_count)?
            .into_iter()
            .flat_map(|(x, y, k)| std::iter::repeat_n((x, y), k as usize))
            .collect();
        let naive = exact_error(&erm_learn(&samples, &class), &concept, &target);
        Ok(TrialReport::new(t, seed)
            .with("m2", r.m2_budget)
            .with("kept", r.accepted_count)
            .with("naive_error", naive)
            .with("rejection_error", r.target_error)
            .with("difference", r.target_error - naive)
            .with("success", r.target_error <= params.eps))
    })?;
    let (naive_mean, naive_se) = mean(column(&rows, "naive_error"));
    let (rej_mean, rej_se) = mean(column(&rows, "rejection_error"));
    let (diff_mean, diff_se) = mean(column(&rows, "difference"));
    let summary = Summary::new(cfg, &rows, 1.0 - params.delta)?
        .stat("naive_mean_error", naive_mean)
        .stat("naive_std_err", naive_se)
        .stat("rejection_mean_error", rej_mean)
        .stat("rejection_std_err", rej_se)
        .stat("difference_mean", diff_mean)
        .stat("difference_std_err", diff_se)
        .check("rejection_not_worse", diff_mean <= 3.0 * diff_se);
    Ok(ExperimentOutput { summary, rows })
}

fn hardness(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let n = cfg.n.expect("validated");
    let ks = cfg.ks.as_ref().expect("validated");
    let tolerance = cfg.tolerance.unwrap_or(0.01);
    let master = cfg.master_seed();
    let curve = hardness_curve(n, ks, cfg.trials(), master)?;
    let rows: Vec<TrialReport> = curve
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let gap = (c.mean_error - c.analytic_error).abs();
            TrialReport::new(i, derive_seed(master, c.k as u64))
                .with("n", c.n)
                .with("k", c.k)
                .with("trials", c.trials)
                .with("mean_error", c.mean_error)
                .with("analytic_error", c.analytic_error)
                .with("displayed_bound", c.displayed_bound)
                .with("std_err", c.std_err)
                .with("tolerance", tolerance)
                .with("success", gap <= tolerance)
        })
        .collect();
    let summary =
        Summary::new(cfg, &rows, 1.0)?.stat("analytic_crossing_0.25", analytic_crossing(n, 0.25));
    Ok(ExperimentOutput { summary, rows })
}

/// The sample-size expression with step 1 at `(eps/4, delta/2)` on a
/// Chebyshev window, next to the closed form written with `2^15 · s`.
fn complexity(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let eps = cfg.eps.expect("validated");
    let delta = cfg.delta.expect("validated");
    let s = cfg.s_bound.expect("validated");
    let w = cfg.w_expected.expect("validated");
    let class_size = match &cfg.class {
        Some(_) => cfg.hypothesis_class()?.len(),
        None => cfg.class_size.expect("validated"),
    };
    let n = chebyshev_support_size(s, eps)?;
    let m1 = chernoff_sample_size(n as usize, w, eps / 4.0, delta / 2.0)?;
    let m2_prime = pac_sample_size(class_size, eps / 2.0, delta / 2.0)?;
    let m2 = m2_budget(m2_prime, w, delta)?;
    let root = (2.0 / eps).sqrt();
    let reference = m2_prime as f64 * w * w * (4.0 / delta).ln()
        + ((8.0 * s * root).ln() + delta.recip().ln()) * (32768.0 * s * root * w * w / eps.powi(3));
    let rows = vec![TrialReport::new(0, cfg.master_seed())
        .with("s", s)
        .with("eps", eps)
        .with("delta", delta)
        .with("w", w)
        .with("class_size", class_size)
        .with("n", n)
        .with("m1", m1)
        .with("m2_prime", m2_prime)
        .with("m2", m2)
        .with("total", m1 + m2)
        .with("closed_form_reference", reference)
        .with("success", true)];
    let summary = Summary::new(cfg, &rows, 1.0)?.meta(
        "size_parameter",
        "support size n of the Chebyshev window, ceil(2 s sqrt(2/eps))",
    );
    Ok(ExperimentOutput { summary, rows })
}
