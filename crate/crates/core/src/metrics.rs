//! Occupancy statistics, `P_inx`/`P_drop` estimation and run ensembles.

use crate::pairwise::{p_drop_general, p_select, GossipParams};
use crate::protocol::{PairCounts, RoundLog};
use crate::{Error, Result};

/// Below this many (exchange × item) observations a [`PairProbs`] is flagged
/// as low confidence.
pub const MIN_CONFIDENT_OBSERVATIONS: u64 = 1000;

/// Pre-exchange occupancy frequencies, initiator bit first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairProbs {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    /// Number of (exchange × tracked item) observations behind the estimate.
    pub observations: u64,
}

impl PairProbs {
    pub fn from_counts(counts: &PairCounts) -> Result<Self> {
        let total = counts.total();
        if total == 0 {
            return Err(Error::NoObservations);
        }
        let t = total as f64;
        Ok(Self {
            p11: counts.n11 as f64 / t,
            p10: counts.n10 as f64 / t,
            p01: counts.n01 as f64 / t,
            observations: total,
        })
    }

    pub fn p00(&self) -> f64 {
        (1.0 - self.p11 - self.p10 - self.p01).max(0.0)
    }

    pub fn low_confidence(&self) -> bool {
        self.observations < MIN_CONFIDENT_OBSERVATIONS
    }
}

/// Pools every exchange of one round.
pub fn measure_pair_probs(log: &RoundLog) -> Result<PairProbs> {
    if log.pair_counts.is_empty() {
        return Err(Error::NoObservations);
    }
    PairProbs::from_counts(&log.pooled_counts())
}

/// `P_inx = P(11) / (P(10) + P(11))`.
pub fn estimate_p_inx(probs: &PairProbs) -> Result<f64> {
    let held = probs.p10 + probs.p11;
    if held <= 0.0 {
        return Err(Error::UndefinedInx);
    }
    Ok(probs.p11 / held)
}

/// `P_drop` from a measured `P_inx` with `P_select = s/c`.
pub fn estimate_p_drop_statistical(p_inx: f64, params: &GossipParams) -> Result<f64> {
    p_drop_general(p_inx, p_select(params))
}

/// Per-round measurements of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub round: u64,
    pub replication: usize,
    pub coverage: usize,
    pub pair_probs: Option<PairProbs>,
}

/// Replication and coverage of the observed item after each round; index 0
/// is the insertion round. Runs stopped early on extinction are shorter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub seed: u64,
    pub replication: Vec<usize>,
    pub coverage: Vec<usize>,
}

impl RunRecord {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            replication: Vec::new(),
            coverage: Vec::new(),
        }
    }

    pub fn push(&mut self, replication: usize, coverage: usize) {
        self.replication.push(replication);
        self.coverage.push(coverage);
    }

    pub fn final_replication(&self) -> usize {
        self.replication.last().copied().unwrap_or(0)
    }

    pub fn is_successful(&self) -> bool {
        self.final_replication() > 0
    }

    pub fn replication_series(&self) -> &[usize] {
        &self.replication
    }

    pub fn coverage_series(&self) -> &[usize] {
        &self.coverage
    }

    pub fn rounds(&self) -> usize {
        self.replication.len()
    }
}

pub fn filter_successful(runs: &[RunRecord]) -> Vec<&RunRecord> {
    runs.iter().filter(|r| r.is_successful()).collect()
}

/// Per-round mean and population standard deviation over successful runs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunEnsemble {
    pub mean_replication: Vec<f64>,
    pub std_replication: Vec<f64>,
    pub mean_coverage: Vec<f64>,
    pub std_coverage: Vec<f64>,
    pub total_runs: usize,
    pub successful_runs: usize,
}

impl RunEnsemble {
    pub fn rounds(&self) -> usize {
        self.mean_replication.len()
    }

    pub fn extinction_fraction(&self) -> f64 {
        if self.total_runs == 0 {
            return 0.0;
        }
        1.0 - self.successful_runs as f64 / self.total_runs as f64
    }

    pub fn is_empty(&self) -> bool {
        self.successful_runs == 0
    }
}

#[derive(Default, Clone, Copy)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0).sqrt()
        }
    }
}

fn moments(series: &[&[usize]], rounds: usize) -> (Vec<f64>, Vec<f64>) {
    let mut acc = vec![Welford::default(); rounds];
    for s in series {
        for (w, &x) in acc.iter_mut().zip(s.iter()) {
            w.push(x as f64);
        }
    }
    (
        acc.iter().map(|w| w.mean).collect(),
        acc.iter().map(Welford::std).collect(),
    )
}

/// Aggregates the successful runs of `runs`. All successful runs must have
/// the same length.
pub fn aggregate(runs: &[RunRecord]) -> Result<RunEnsemble> {
    let ok = filter_successful(runs);
    let rounds = ok.first().map_or(0, |r| r.rounds());
    if let Some(bad) = ok.iter().find(|r| r.rounds() != rounds) {
        return Err(Error::LengthMismatch {
            left: rounds,
            right: bad.rounds(),
        });
    }
    let reps: Vec<&[usize]> = ok.iter().map(|r| r.replication_series()).collect();
    let covs: Vec<&[usize]> = ok.iter().map(|r| r.coverage_series()).collect();
    let (mean_replication, std_replication) = moments(&reps, rounds);
    let (mean_coverage, std_coverage) = moments(&covs, rounds);
    Ok(RunEnsemble {
        mean_replication,
        std_replication,
        mean_coverage,
        std_coverage,
        total_runs: runs.len(),
        successful_runs: ok.len(),
    })
}

/// Per-round `|mean_protocol - mean_model|` next to the protocol spread.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Comparison {
    pub abs_diff_replication: Vec<f64>,
    pub protocol_std_replication: Vec<f64>,
    pub abs_diff_coverage: Vec<f64>,
    pub protocol_std_coverage: Vec<f64>,
}

impl Comparison {
    pub fn rounds(&self) -> usize {
        self.abs_diff_replication.len()
    }

    /// Fractions of rounds `> after` whose difference is within one protocol
    /// standard deviation, for replication and coverage.
    pub fn within_std_fraction(&self, after: usize) -> (f64, f64) {
        let frac = |diff: &[f64], std: &[f64]| {
            let rounds: Vec<usize> = (after + 1..diff.len()).collect();
            if rounds.is_empty() {
                return 1.0;
            }
            rounds.iter().filter(|&&r| diff[r] <= std[r]).count() as f64 / rounds.len() as f64
        };
        (
            frac(&self.abs_diff_replication, &self.protocol_std_replication),
            frac(&self.abs_diff_coverage, &self.protocol_std_coverage),
        )
    }
}

pub fn compare(protocol: &RunEnsemble, model: &RunEnsemble) -> Result<Comparison> {
    if protocol.rounds() != model.rounds() {
        return Err(Error::LengthMismatch {
            left: protocol.rounds(),
            right: model.rounds(),
        });
    }
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    Ok(Comparison {
        abs_diff_replication: diff(&protocol.mean_replication, &model.mean_replication),
        protocol_std_replication: protocol.std_replication.clone(),
        abs_diff_coverage: diff(&protocol.mean_coverage, &model.mean_coverage),
        protocol_std_coverage: protocol.std_coverage.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn probs(p11: f64, p10: f64, p01: f64) -> PairProbs {
        PairProbs {
            p11,
            p10,
            p01,
            observations: 10_000,
        }
    }

    fn run(rep: &[usize], cov: &[usize]) -> RunRecord {
        RunRecord {
            seed: 0,
            replication: rep.to_vec(),
            coverage: cov.to_vec(),
        }
    }

    #[test]
    fn pair_probs_from_counts() {
        let counts = PairCounts {
            n11: 4,
            n10: 16,
            n01: 16,
            n00: 64,
        };
        let p = PairProbs::from_counts(&counts).unwrap();
        assert!((p.p11 - 0.04).abs() < 1e-12);
        assert!((p.p10 - 0.16).abs() < 1e-12);
        assert!((p.p00() - 0.64).abs() < 1e-12);
        assert!(p.low_confidence());
        let all = PairProbs::from_counts(&PairCounts {
            n11: 5000,
            ..Default::default()
        })
        .unwrap();
        assert_eq!((all.p11, all.p10, all.p01), (1.0, 0.0, 0.0));
        assert!(!all.low_confidence());
    }

    #[test]
    fn empty_log_is_an_error() {
        assert_eq!(measure_pair_probs(&RoundLog::default()), Err(Error::NoObservations));
    }

    #[test]
    fn p_inx_examples() {
        assert!((estimate_p_inx(&probs(0.04, 0.16, 0.16)).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(estimate_p_inx(&probs(0.3, 0.0, 0.1)).unwrap(), 1.0);
        assert_eq!(estimate_p_inx(&probs(0.0, 0.0, 0.5)), Err(Error::UndefinedInx));
    }

    #[test]
    fn p_drop_from_p_inx() {
        let params = GossipParams::paper();
        let pd = estimate_p_drop_statistical(0.2, &params).unwrap();
        assert!((pd - 0.8 / 0.9).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for i in 0..=9 {
            let pd = estimate_p_drop_statistical(i as f64 / 10.0, &params).unwrap();
            assert!(pd < last);
            last = pd;
        }
    }

    #[test]
    fn single_run_has_zero_std() {
        let e = aggregate(&[run(&[1, 3, 5], &[1, 4, 6])]).unwrap();
        assert_eq!(e.mean_replication, vec![1.0, 3.0, 5.0]);
        assert!(e.std_replication.iter().all(|&s| s == 0.0));
        assert_eq!((e.total_runs, e.successful_runs), (1, 1));
    }

    #[test]
    fn extinct_runs_are_excluded() {
        let runs = [
            run(&[1, 2, 4], &[1, 2, 4]),
            run(&[1, 0], &[1, 1]),
            run(&[1, 4, 6], &[1, 5, 7]),
        ];
        assert_eq!(filter_successful(&runs).len(), 2);
        let e = aggregate(&runs).unwrap();
        assert_eq!(e.mean_replication, vec![1.0, 3.0, 5.0]);
        assert_eq!(e.std_replication, vec![0.0, 1.0, 1.0]);
        assert!((e.extinction_fraction() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn all_extinct_gives_empty_ensemble() {
        let e = aggregate(&[run(&[1, 0], &[1, 1])]).unwrap();
        assert!(e.is_empty());
        assert_eq!(e.rounds(), 0);
        assert_eq!(e.extinction_fraction(), 1.0);
    }

    #[test]
    fn ragged_successful_runs_are_rejected() {
        let runs = [run(&[1, 2], &[1, 2]), run(&[1, 2, 3], &[1, 2, 3])];
        assert!(matches!(aggregate(&runs), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn compare_identical_is_zero() {
        let e = aggregate(&[run(&[1, 3, 5], &[1, 4, 6]), run(&[1, 5, 5], &[1, 6, 8])]).unwrap();
        let c = compare(&e, &e).unwrap();
        assert!(c
            .abs_diff_replication
            .iter()
            .chain(&c.abs_diff_coverage)
            .all(|&d| d == 0.0));
        assert_eq!(c.protocol_std_replication, e.std_replication);
        assert_eq!(c.within_std_fraction(0), (1.0, 1.0));
        let short = aggregate(&[run(&[1, 3], &[1, 4])]).unwrap();
        assert!(compare(&e, &short).is_err());
    }

    proptest! {
        #[test]
        fn welford_matches_two_pass(data in prop::collection::vec(prop::collection::vec(1usize..5000, 6), 1..40)) {
            let runs: Vec<RunRecord> = data.iter().map(|r| run(r, r)).collect();
            let e = aggregate(&runs).unwrap();
            for round in 0..6 {
                let xs: Vec<f64> = data.iter().map(|r| r[round] as f64).collect();
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
                prop_assert!((e.mean_replication[round] - mean).abs() < 1e-9);
                prop_assert!((e.std_coverage[round] - var.sqrt()).abs() < 1e-9);
            }
        }

        #[test]
        fn pair_probs_are_a_distribution(n11 in 0u64..1000, n10 in 0u64..1000, n01 in 0u64..1000, n00 in 1u64..1000) {
            let p = PairProbs::from_counts(&PairCounts { n11, n10, n01, n00 }).unwrap();
            prop_assert!(p.p11 + p.p10 + p.p01 <= 1.0 + 1e-12);
            prop_assert!(p.p00() >= 0.0);
        }
    }
}
