//! Aggregation of training logs into per-policy tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::allocation::PolicyKind;
use crate::error::{Error, Result};
use crate::training::{arg_metric, TrainLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    /// `s_tot / i_tot` of the seed means.
    pub s_avg: f64,
    pub i_tot: f64,
    pub s_tot: f64,
    pub final_cost: f64,
    pub arg_percent: f64,
    pub seeds: usize,
}

/// Mean computed over sorted values, so the result does not depend on input order.
pub fn mean(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample mean and its standard error (zero for a single value).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = mean(values);
    if values.len() < 2 {
        return (m, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - m).powi(2)).collect();
    let var = mean(&dev) * values.len() as f64 / (values.len() - 1) as f64;
    (m, (var / values.len() as f64).sqrt())
}

/// Means over seeds of one policy's logs; ARG is taken from each log's final evaluation.
pub fn summarize(logs: &[TrainLog], e_ideal: f64) -> Result<PolicySummary> {
    let Some(first) = logs.first() else {
        return Err(Error::InvalidSummary("no logs".into()));
    };
    let kind = first.metadata.policy.kind;
    if let Some(other) = logs.iter().find(|l| l.metadata.policy.kind != kind) {
        return Err(Error::InvalidSummary(format!(
            "mixed policies {kind} and {}",
            other.metadata.policy.kind
        )));
    }
    let column = |f: &dyn Fn(&TrainLog) -> f64| mean(&logs.iter().map(f).collect::<Vec<_>>());
    let args = logs
        .iter()
        .map(|l| arg_metric(e_ideal, l.final_evaluation.cost))
        .collect::<Result<Vec<_>>>()?;
    let s_tot = column(&|l| l.s_tot as f64);
    let i_tot = column(&|l| l.i_tot as f64);
    Ok(PolicySummary {
        policy: kind.name().to_owned(),
        s_avg: s_tot / i_tot,
        i_tot,
        s_tot,
        final_cost: column(&|l| l.final_evaluation.cost),
        arg_percent: mean(&args),
        seeds: logs.len(),
    })
}

/// `100·(1 − S_tot / S_tot_baseline)`; negative when the policy used more shots.
pub fn reduction_vs_baseline(summary: &PolicySummary, baseline: &PolicySummary) -> Result<f64> {
    if baseline.s_tot <= 0.0 {
        return Err(Error::InvalidSummary("baseline used no shots".into()));
    }
    Ok(100.0 * (1.0 - summary.s_tot / baseline.s_tot))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy: String,
    pub seeds: usize,
    pub mean_s_tot: f64,
    /// Mean over seeds of the per-seed reduction against the fixed run.
    pub reduction_pct: f64,
    pub mean_arg: f64,
    pub arg_delta_vs_fixed: f64,
}

/// Seed-matched comparison of every policy against the fixed-shot runs.
/// ARG uses each log's recorded ideal energy. Rows are ordered fixed, linear,
/// step, dds, dds_m.
pub fn compare(logs: &[TrainLog]) -> Result<Vec<ComparisonRow>> {
    let mut by_policy: BTreeMap<PolicyKind, BTreeMap<u64, &TrainLog>> = BTreeMap::new();
    for log in logs {
        let runs = by_policy.entry(log.metadata.policy.kind).or_default();
        if runs.insert(log.metadata.seed, log).is_some() {
            return Err(Error::InvalidSummary(format!(
                "two {} logs share seed {}",
                log.metadata.policy.kind, log.metadata.seed
            )));
        }
    }
    let baseline = by_policy
        .get(&PolicyKind::Fixed)
        .ok_or_else(|| Error::InvalidSummary("no fixed-policy baseline logs".into()))?;
    let seeds: Vec<u64> = baseline.keys().copied().collect();
    let base_args = baseline.values().map(|l| l.arg()).collect::<Result<Vec<_>>>()?;
    let base_arg = mean(&base_args);

    let mut rows = Vec::new();
    for (kind, runs) in &by_policy {
        if runs.keys().copied().collect::<Vec<_>>() != seeds {
            return Err(Error::InvalidSummary(format!(
                "{kind} seeds {:?} do not match fixed seeds {seeds:?}",
                runs.keys().collect::<Vec<_>>()
            )));
        }
        let mut reductions = Vec::new();
        let mut args = Vec::new();
        let mut totals = Vec::new();
        for (seed, log) in runs {
            let base = baseline[seed];
            if base.s_tot == 0 {
                return Err(Error::InvalidSummary(format!(
                    "fixed run for seed {seed} used no shots"
                )));
            }
            reductions.push(100.0 * (1.0 - log.s_tot as f64 / base.s_tot as f64));
            args.push(log.arg()?);
            totals.push(log.s_tot as f64);
        }
        let mean_arg = mean(&args);
        rows.push(ComparisonRow {
            policy: kind.name().to_owned(),
            seeds: runs.len(),
            mean_s_tot: mean(&totals),
            reduction_pct: mean(&reductions),
            mean_arg,
            arg_delta_vs_fixed: mean_arg - base_arg,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::ShotPolicy;
    use crate::optimizer::{OptimizerOptions, StopReason};
    use crate::training::{FinalEvaluation, IterationRecord, RunMetadata};
    use proptest::prelude::*;

    fn log(policy: ShotPolicy, seed: u64, shots: &[u64], final_cost: f64) -> TrainLog {
        let records: Vec<IterationRecord> = shots
            .iter()
            .enumerate()
            .map(|(i, &s)| IterationRecord {
                iteration: i as u64,
                shots: s,
                entropy_bits: 1.0,
                cost: -1.0,
                parameters: vec![0.0],
            })
            .collect();
        let s_tot: u64 = shots.iter().sum();
        TrainLog {
            metadata: RunMetadata {
                seed,
                policy,
                problem: "test".into(),
                instance: None,
                noise: None,
                trajectory_batch: 1,
                optimizer: "test".into(),
                optimizer_options: OptimizerOptions::default(),
                entropy_source: Default::default(),
                initial_parameters: vec![0.0],
                e_ideal: Some(-2.0),
                stop_reason: StopReason::Converged,
            },
            s_tot,
            s_avg: s_tot as f64 / shots.len() as f64,
            i_tot: shots.len() as u64,
            records,
            final_evaluation: FinalEvaluation {
                shots: 1024,
                cost: final_cost,
                entropy_bits: 1.0,
                parameters: vec![0.0],
            },
            clamped_batches: 0,
            wall_time_s: Vec::new(),
        }
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[log(ShotPolicy::fixed(1024), 0, &[1024, 1024], -2.0)], -2.0).unwrap();
        assert_eq!((s.s_tot, s.i_tot, s.s_avg), (2048.0, 2.0, 1024.0));
        assert_eq!(s.arg_percent, 0.0);
        let two = [
            log(ShotPolicy::dds(8.0), 0, &[10], -1.92),
            log(ShotPolicy::dds(8.0), 1, &[10], -1.88),
        ];
        assert!((summarize(&two, -2.0).unwrap().arg_percent - 5.0).abs() < 1e-12);
        assert!(summarize(&[], -2.0).is_err());
        let mixed = [
            log(ShotPolicy::dds(8.0), 0, &[10], -1.0),
            log(ShotPolicy::fixed(10), 0, &[10], -1.0),
        ];
        assert!(summarize(&mixed, -2.0).is_err());
        assert!(summarize(&two, 0.0).is_err());
    }

    #[test]
    fn reduction_examples() {
        let a = summarize(&[log(ShotPolicy::fixed(1024), 0, &[1000, 1000], -2.0)], -2.0).unwrap();
        let b = summarize(&[log(ShotPolicy::dds(8.0), 0, &[500, 500], -2.0)], -2.0).unwrap();
        let c = summarize(&[log(ShotPolicy::dds(8.0), 0, &[1500, 1500], -2.0)], -2.0).unwrap();
        assert_eq!(reduction_vs_baseline(&a, &a).unwrap(), 0.0);
        assert_eq!(reduction_vs_baseline(&b, &a).unwrap(), 50.0);
        assert_eq!(reduction_vs_baseline(&c, &a).unwrap(), -50.0);
        let zero = PolicySummary {
            s_tot: 0.0,
            ..a.clone()
        };
        assert!(reduction_vs_baseline(&a, &zero).is_err());
    }

    #[test]
    fn comparison_rules() {
        let fixed = [
            log(ShotPolicy::fixed(1024), 0, &[1024; 4], -1.9),
            log(ShotPolicy::fixed(1024), 1, &[1024; 4], -1.8),
        ];
        let rows = compare(&fixed).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].reduction_pct, rows[0].arg_delta_vs_fixed), (0.0, 0.0));

        let mut all = fixed.to_vec();
        all.push(log(ShotPolicy::dds(8.0), 0, &[512; 4], -1.9));
        all.push(log(ShotPolicy::dds(8.0), 1, &[512; 4], -1.8));
        let rows = compare(&all).unwrap();
        assert_eq!(rows[1].policy, "dds");
        assert_eq!(rows[1].reduction_pct, 50.0);

        all.pop();
        all.push(log(ShotPolicy::dds(8.0), 2, &[512; 4], -1.8));
        assert!(compare(&all).is_err(), "mismatched seeds");
        assert!(compare(&all[2..]).is_err(), "no baseline");
    }

    proptest! {
        #[test]
        fn summarize_is_permutation_invariant(
            costs in prop::collection::vec(-5.0..-0.1f64, 1..8),
            shots in prop::collection::vec(1u64..5000, 1..8),
            rot in 0usize..8,
        ) {
            let logs: Vec<TrainLog> = costs
                .iter()
                .enumerate()
                .map(|(i, &c)| log(ShotPolicy::dds(4.0), i as u64, &shots[..=(i % shots.len())], c))
                .collect();
            let mut permuted = logs.clone();
            permuted.rotate_left(rot % logs.len());
            permuted.reverse();
            prop_assert_eq!(summarize(&logs, -3.0).unwrap(), summarize(&permuted, -3.0).unwrap());
        }
    }
}
