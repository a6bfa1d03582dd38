//! The four experiment families, each driven by one [`ExperimentConfig`].
//!
//! Runs of an ensemble execute on the rayon pool and are collected in run
//! order. Run `i` draws from `derive_seed(master, stream, i)`, and the shared
//! topology from `derive_seed(master, Stream::Topology, 0)`, so results do not
//! depend on the number of threads.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, PDropMode, TrackingMode};
use crate::metrics::{
    aggregate, compare, estimate_p_drop_statistical, estimate_p_inx, Comparison, PairProbs, RunEnsemble, RunRecord,
};
use crate::model::{init_model, SeedNode};
use crate::pairwise::{
    build_matrix, p_drop_newscast, p_drop_shuffle_uniform, p_select, ChannelParams, GossipParams, ModelProbabilities,
    ProtocolVariant, TransitionMatrix,
};
use crate::protocol::{init_cyclon_network, init_network, Direction, PairCounts, Protocol, Tracking};
use crate::seed::{derive_seed, rng_from_seed, Stream};
use crate::topology::Topology;
use crate::{Error, ItemId, Result};

/// The topology every run of an experiment shares.
pub fn build_topology(config: &ExperimentConfig) -> Result<Arc<Topology>> {
    let master = config.master_seed()?;
    let mut rng = rng_from_seed(derive_seed(master, Stream::Topology, 0));
    Ok(Arc::new(config.topology_kind().build(&mut rng)?))
}

fn checked(config: &ExperimentConfig) -> Result<(u64, GossipParams)> {
    config.validate()?;
    Ok((config.master_seed()?, config.params()?))
}

fn seeds(master: u64, stream: Stream, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| derive_seed(master, stream, i)).collect()
}

/// One occupancy run: pooled pair states per measured round.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyRun {
    pub seed: u64,
    pub rounds: Vec<PairCounts>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyReport {
    pub config: ExperimentConfig,
    pub runs: Vec<OccupancyRun>,
    /// Per measured round, pooled over runs.
    pub series: Vec<PairProbs>,
    /// Every observation of every round and run.
    pub pooled: PairProbs,
    pub p_inx: f64,
    pub p_drop: f64,
}

/// Lossless startup, then `occupancy_rounds` rounds at `p_loss` recording the
/// pre-exchange pair states of the tracked items. Repeated `occupancy_runs`
/// times.
pub fn run_occupancy_experiment(config: &ExperimentConfig) -> Result<OccupancyReport> {
    let (master, params) = checked(config)?;
    if config.protocol != Protocol::Shuffle {
        return Err(Error::Unsupported(format!(
            "occupancy experiments run Shuffle, not {}",
            config.protocol
        )));
    }
    let topology = build_topology(config)?;
    let tracking = match config.tracking {
        TrackingMode::AllItems => Tracking::Items { count: params.n() },
        TrackingMode::SingleItem => Tracking::Single(0),
    };
    let rounds = config.occupancy_rounds();
    let runs = seeds(master, Stream::Occupancy, config.occupancy_runs)
        .into_par_iter()
        .map(|seed| {
            let mut rng = rng_from_seed(seed);
            let mut net = init_network(topology.clone(), params, &mut rng)?;
            net.run_startup(config.startup_rounds, Protocol::Shuffle, &mut rng)?;
            let mut per_round = Vec::with_capacity(rounds as usize);
            for _ in 0..rounds {
                let log = net.run_round(Protocol::Shuffle, config.p_loss, tracking, &mut rng)?;
                per_round.push(log.pooled_counts());
            }
            Ok(OccupancyRun {
                seed,
                rounds: per_round,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = PairCounts::default();
    let mut series = Vec::with_capacity(rounds as usize);
    for r in 0..rounds as usize {
        let mut round = PairCounts::default();
        for run in &runs {
            round.add(&run.rounds[r]);
        }
        total.add(&round);
        series.push(PairProbs::from_counts(&round)?);
    }
    let pooled = PairProbs::from_counts(&total)?;
    let p_inx = estimate_p_inx(&pooled)?;
    let p_drop = estimate_p_drop_statistical(p_inx, &params)?;
    Ok(OccupancyReport {
        config: config.clone(),
        runs,
        series,
        pooled,
        p_inx,
        p_drop,
    })
}

/// Which engine produced an [`ExperimentReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Protocol,
    Model,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Self::Protocol => "protocol",
            Self::Model => "model",
        }
    }
}

/// Probabilities and matrix behind a model ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSetup {
    pub variant: ProtocolVariant,
    pub p_select: f64,
    pub p_drop: f64,
    /// Set in measured mode, whether supplied or measured.
    pub p_inx: Option<f64>,
    pub matrix: TransitionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub engine: Engine,
    pub seeds: Vec<u64>,
    pub records: Vec<RunRecord>,
    pub ensemble: RunEnsemble,
    pub model: Option<ModelSetup>,
}

impl ExperimentReport {
    pub fn successful_runs(&self) -> usize {
        self.ensemble.successful_runs
    }

    pub fn no_successful_runs(&self) -> bool {
        self.ensemble.is_empty()
    }
}

fn protocol_run(
    config: &ExperimentConfig,
    topology: &Arc<Topology>,
    params: GossipParams,
    seed: u64,
) -> Result<RunRecord> {
    let mut rng = rng_from_seed(seed);
    let mut record = RunRecord::new(seed);
    let rounds = config.dissemination_rounds();
    if config.protocol == Protocol::Cyclon {
        let nodes = topology.node_count();
        let mut net = init_cyclon_network(nodes, params.c(), params.s(), &mut rng)?;
        for _ in 0..config.startup_rounds {
            net.run_round(0.0, &mut rng)?;
        }
        // The observed item is a fresh link to a random node `d`.
        let d = rng.gen_range(0..nodes);
        net.forget_node(d);
        let holder = (d + rng.gen_range(1..nodes)) % nodes;
        net.insert_link(holder, d, &mut rng)?;
        record.push(net.replication(d), net.coverage(d));
        for _ in 0..rounds {
            net.run_round(config.p_loss, &mut rng)?;
            record.push(net.replication(d), net.coverage(d));
        }
        return Ok(record);
    }
    let mut net = init_network(topology.clone(), params, &mut rng)?;
    net.run_startup(config.startup_rounds, config.protocol, &mut rng)?;
    let item = params.n() as ItemId;
    let node = rng.gen_range(0..net.node_count());
    net.insert_item(item, node, &mut rng)?;
    record.push(net.replication(item), net.coverage(item));
    for _ in 0..rounds {
        net.run_round(config.protocol, config.p_loss, Tracking::Off, &mut rng)?;
        let replication = net.replication(item);
        record.push(replication, net.coverage(item));
        if replication == 0 {
            break;
        }
    }
    Ok(record)
}

/// Per run: init, lossless startup, insert a fresh item at a random node,
/// then `dissemination_rounds` rounds at `p_loss`. A run stops as soon as the
/// item is extinct. Cyclon tracks a fresh link instead of an item.
pub fn run_dissemination_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let (master, params) = checked(config)?;
    let topology = build_topology(config)?;
    let seeds = seeds(master, Stream::Protocol, config.runs);
    let records = seeds
        .par_iter()
        .map(|&seed| protocol_run(config, &topology, params, seed))
        .collect::<Result<Vec<_>>>()?;
    let ensemble = aggregate(&records)?;
    Ok(ExperimentReport {
        config: config.clone(),
        engine: Engine::Protocol,
        seeds,
        records,
        ensemble,
        model: None,
    })
}

/// Resolves the model variant and probabilities for `config`, running an
/// occupancy experiment when `P_inx` must be measured.
pub fn model_setup(config: &ExperimentConfig) -> Result<ModelSetup> {
    let (_, params) = checked(config)?;
    let lossy = config.p_loss > 0.0;
    let variant = match (config.protocol, lossy) {
        (Protocol::Shuffle, false) => ProtocolVariant::Shuffle,
        (Protocol::Shuffle, true) => ProtocolVariant::ShuffleLossy,
        (Protocol::Newscast(_), true) => {
            return Err(Error::Unsupported(
                "the Newscast matrices assume a lossless channel".into(),
            ))
        }
        (Protocol::Newscast(Direction::PushPull), false) => ProtocolVariant::NewscastPushPull,
        (Protocol::Newscast(Direction::Push), false) => ProtocolVariant::NewscastPush,
        (Protocol::Newscast(Direction::Pull), false) => ProtocolVariant::NewscastPull,
        (Protocol::Cyclon, _) => return Err(Error::Unsupported("no transition matrix for Cyclon".into())),
    };
    let ps = p_select(&params);
    let (p_drop, p_inx) = match (config.p_drop_mode, config.protocol) {
        (PDropMode::Analytic, Protocol::Shuffle) => (p_drop_shuffle_uniform(&params), None),
        (PDropMode::Analytic, _) => (p_drop_newscast(&params), None),
        (PDropMode::Measured { .. }, Protocol::Newscast(_)) => {
            return Err(Error::Unsupported("measured P_drop is defined for Shuffle only".into()))
        }
        (PDropMode::Measured { p_inx }, _) => {
            let p_inx = match p_inx {
                Some(p) => p,
                None => run_occupancy_experiment(config)?.p_inx,
            };
            (estimate_p_drop_statistical(p_inx, &params)?, Some(p_inx))
        }
    };
    let probs = ModelProbabilities::new(ps, p_drop)?;
    let matrix = build_matrix(variant, probs, ChannelParams::new(config.p_loss)?);
    Ok(ModelSetup {
        variant,
        p_select: ps,
        p_drop,
        p_inx,
        matrix,
    })
}

/// `runs` model simulations over `dissemination_rounds` rounds, each from
/// one random node; stops a run on extinction.
pub fn run_model_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let setup = model_setup(config)?;
    run_model_with(config, setup)
}

fn run_model_with(config: &ExperimentConfig, setup: ModelSetup) -> Result<ExperimentReport> {
    let (master, _) = checked(config)?;
    let topology = build_topology(config)?;
    let rounds = config.dissemination_rounds();
    let seeds = seeds(master, Stream::Model, config.runs);
    let records = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = rng_from_seed(seed);
            let mut net = init_model(topology.clone(), SeedNode::Random, &mut rng)?;
            let mut record = RunRecord::new(seed);
            record.push(net.replication(), net.coverage());
            for _ in 0..rounds {
                net.run_round(&setup.matrix, &mut rng);
                record.push(net.replication(), net.coverage());
                if net.replication() == 0 {
                    break;
                }
            }
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;
    let ensemble = aggregate(&records)?;
    Ok(ExperimentReport {
        config: config.clone(),
        engine: Engine::Model,
        seeds,
        records,
        ensemble,
        model: Some(setup),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub protocol: ExperimentReport,
    pub model: ExperimentReport,
    pub comparison: Comparison,
}

/// Protocol and model ensembles under one config, and their per-round
/// difference.
pub fn run_comparison(config: &ExperimentConfig) -> Result<ComparisonReport> {
    let setup = model_setup(config)?;
    let protocol = run_dissemination_experiment(config)?;
    let model = run_model_with(config, setup)?;
    for report in [&protocol, &model] {
        if report.no_successful_runs() {
            return Err(Error::NoSuccessfulRuns {
                engine: report.engine.name(),
            });
        }
    }
    let comparison = compare(&protocol.ensemble, &model.ensemble)?;
    Ok(ComparisonReport {
        protocol,
        model,
        comparison,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TopologyChoice;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            nodes: 60,
            grid_side: 8,
            n: 30,
            c: 10,
            s: 5,
            startup_rounds: 30,
            measure_rounds: Some(40),
            runs: 6,
            seed: Some(11),
            ..ExperimentConfig::desk()
        }
    }

    #[test]
    fn seed_is_required() {
        let cfg = ExperimentConfig { seed: None, ..tiny() };
        assert!(run_dissemination_experiment(&cfg).is_err());
        assert!(run_model_experiment(&cfg).is_err());
    }

    #[test]
    fn dissemination_starts_at_one_copy() {
        let report = run_dissemination_experiment(&tiny()).unwrap();
        assert_eq!(report.seeds.len(), 6);
        assert_eq!(report.ensemble.successful_runs, 6);
        assert_eq!(report.ensemble.mean_replication[0], 1.0);
        assert_eq!(report.ensemble.std_replication[0], 0.0);
        assert_eq!(report.ensemble.rounds(), 41);
        for r in &report.records {
            assert!(r.coverage.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn runs_are_independent_of_run_count() {
        let a = run_dissemination_experiment(&tiny()).unwrap();
        let b = run_dissemination_experiment(&ExperimentConfig { runs: 3, ..tiny() }).unwrap();
        assert_eq!(&a.records[..3], &b.records[..]);
    }

    #[test]
    fn model_setup_modes() {
        let cfg = tiny();
        let s = model_setup(&cfg).unwrap();
        assert_eq!(s.variant, ProtocolVariant::Shuffle);
        assert!((s.p_drop - 20.0 / 25.0).abs() < 1e-12);
        let lossy = ExperimentConfig {
            p_loss: 0.1,
            p_drop_mode: PDropMode::Measured { p_inx: Some(0.25) },
            ..tiny()
        };
        let s = model_setup(&lossy).unwrap();
        assert_eq!(s.variant, ProtocolVariant::ShuffleLossy);
        assert_eq!(s.p_inx, Some(0.25));
        assert!((s.p_drop - 0.75 / 0.875).abs() < 1e-12);
        let measured = ExperimentConfig {
            p_drop_mode: PDropMode::Measured { p_inx: None },
            ..tiny()
        };
        let s = model_setup(&measured).unwrap();
        let p = s.p_inx.unwrap();
        assert!((p - 1.0 / 3.0).abs() < 0.05, "p_inx {p}");
        let cyclon = ExperimentConfig {
            protocol: Protocol::Cyclon,
            ..tiny()
        };
        assert!(model_setup(&cyclon).is_err());
        let newscast = ExperimentConfig {
            protocol: Protocol::Newscast(Direction::PushPull),
            p_loss: 0.1,
            ..tiny()
        };
        assert!(model_setup(&newscast).is_err());
    }

    #[test]
    fn occupancy_rejects_other_protocols() {
        let cfg = ExperimentConfig {
            protocol: Protocol::Newscast(Direction::Push),
            ..tiny()
        };
        assert!(run_occupancy_experiment(&cfg).is_err());
    }

    #[test]
    fn occupancy_series_and_estimates() {
        let cfg = ExperimentConfig {
            occupancy_runs: 2,
            measure_rounds: Some(10),
            ..tiny()
        };
        let report = run_occupancy_experiment(&cfg).unwrap();
        assert_eq!(report.series.len(), 10);
        assert_eq!(report.runs.len(), 2);
        assert_eq!(report.pooled.observations, 2 * 10 * 60 * 30);
        assert!((report.p_inx - estimate_p_inx(&report.pooled).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn cyclon_dissemination_never_terminates_early() {
        let cfg = ExperimentConfig {
            protocol: Protocol::Cyclon,
            p_loss: 0.3,
            ..tiny()
        };
        let report = run_dissemination_experiment(&cfg).unwrap();
        assert!(report.records.iter().all(|r| r.rounds() == 41));
        assert_eq!(report.ensemble.mean_replication[0], 1.0);
    }

    #[test]
    fn comparison_on_grid() {
        let cfg = ExperimentConfig {
            topology: TopologyChoice::Grid,
            ..tiny()
        };
        let report = run_comparison(&cfg).unwrap();
        assert_eq!(report.comparison.rounds(), 41);
        assert_eq!(report.comparison.abs_diff_replication[0], 0.0);
    }

    #[test]
    fn repeated_comparison_is_identical() {
        let cfg = ExperimentConfig { p_loss: 0.2, ..tiny() };
        assert_eq!(run_comparison(&cfg).unwrap(), run_comparison(&cfg).unwrap());
    }
}
