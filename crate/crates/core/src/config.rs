//! `key = value` experiment configuration files.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. A
//! `profile` key (`paper` or `desk`) is applied before every other key,
//! wherever it appears; overrides passed to [`ExperimentConfig::parse`] are
//! applied last and win over the file.
//!
//! ```
//! use gossiplab::config::ExperimentConfig;
//!
//! let text = "profile = desk\ntopology = grid  # 22 x 22\nruns = 10\n";
//! let cfg = ExperimentConfig::parse(text, &[("runs".into(), "3".into())]).unwrap();
//! assert_eq!(cfg.runs, 3);
//! assert_eq!(cfg.topology_kind().node_count(), 484);
//! ```

use std::fmt::Write as _;

use crate::pairwise::GossipParams;
use crate::protocol::Protocol;
use crate::topology::TopologyKind;
use crate::{Error, Result};

/// Every key understood by [`ExperimentConfig::apply`].
pub const KEYS: [&str; 18] = [
    "profile",
    "topology",
    "grid_side",
    "outdegree",
    "nodes",
    "protocol",
    "n",
    "c",
    "s",
    "p_loss",
    "startup_rounds",
    "measure_rounds",
    "runs",
    "seed",
    "p_drop_mode",
    "p_inx",
    "tracking",
    "occupancy_runs",
];

/// Parameter scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// N = 2500, n = 500, c = 100, s = 50.
    Paper,
    /// Everything divided by 5: N = 500 (grid 22 × 22), n = 100, c = 20,
    /// s = 10. All analytic probabilities are unchanged.
    Desk,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Self::Paper => "paper",
            Self::Desk => "desk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyChoice {
    Clique,
    Grid,
    Outdegree,
}

/// How the model obtains `P_drop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PDropMode {
    /// Closed form under the uniform-distribution assumption.
    Analytic,
    /// From `P_inx`; measured with an occupancy run when `None`.
    Measured { p_inx: Option<f64> },
}

/// Which items feed the occupancy statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackingMode {
    /// All `n` startup items.
    AllItems,
    /// Item 0 only.
    SingleItem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub profile: Profile,
    pub topology: TopologyChoice,
    pub grid_side: usize,
    pub outdegree: usize,
    /// Node count of clique and outdegree topologies.
    pub nodes: usize,
    pub protocol: Protocol,
    pub n: usize,
    pub c: usize,
    pub s: usize,
    pub p_loss: f64,
    pub startup_rounds: u64,
    /// `None` means the profile default of the experiment being run.
    pub measure_rounds: Option<u64>,
    pub runs: usize,
    /// Master seed; experiments refuse to run without one.
    pub seed: Option<u64>,
    pub p_drop_mode: PDropMode,
    pub tracking: TrackingMode,
    /// Runs used when `P_inx` has to be measured for the model.
    pub occupancy_runs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl ExperimentConfig {
    pub fn paper() -> Self {
        Self {
            profile: Profile::Paper,
            topology: TopologyChoice::Clique,
            grid_side: 50,
            outdegree: 4,
            nodes: 2500,
            protocol: Protocol::Shuffle,
            n: 500,
            c: 100,
            s: 50,
            p_loss: 0.0,
            startup_rounds: 1000,
            measure_rounds: None,
            runs: 100,
            seed: None,
            p_drop_mode: PDropMode::Analytic,
            tracking: TrackingMode::AllItems,
            occupancy_runs: 1,
        }
    }

    pub fn desk() -> Self {
        Self {
            profile: Profile::Desk,
            grid_side: 22,
            nodes: 500,
            n: 100,
            c: 20,
            s: 10,
            startup_rounds: 200,
            ..Self::paper()
        }
    }

    pub fn with_profile(profile: Profile) -> Self {
        match profile {
            Profile::Paper => Self::paper(),
            Profile::Desk => Self::desk(),
        }
    }

    /// Default measurement length of occupancy experiments.
    pub fn default_occupancy_rounds(&self) -> u64 {
        match self.profile {
            Profile::Paper => 1000,
            Profile::Desk => 200,
        }
    }

    /// Default measurement length of dissemination and model experiments.
    pub fn default_dissemination_rounds(&self) -> u64 {
        match self.profile {
            Profile::Paper => 2000,
            Profile::Desk => 400,
        }
    }

    pub fn occupancy_rounds(&self) -> u64 {
        self.measure_rounds.unwrap_or_else(|| self.default_occupancy_rounds())
    }

    pub fn dissemination_rounds(&self) -> u64 {
        self.measure_rounds
            .unwrap_or_else(|| self.default_dissemination_rounds())
    }

    pub fn topology_kind(&self) -> TopologyKind {
        match self.topology {
            TopologyChoice::Clique => TopologyKind::Clique { nodes: self.nodes },
            TopologyChoice::Grid => TopologyKind::Grid { side: self.grid_side },
            TopologyChoice::Outdegree => TopologyKind::RandomOutdegree {
                nodes: self.nodes,
                outdegree: self.outdegree,
            },
        }
    }

    pub fn params(&self) -> Result<GossipParams> {
        GossipParams::new(self.n, self.c, self.s)
    }

    pub fn master_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config {
            line: 0,
            message: "no seed given: pass --seed or set `seed` in the config".into(),
        })
    }

    /// Checks everything an experiment needs except the seed.
    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        if self.runs == 0 {
            return Err(Error::InvalidParams("runs must be at least 1".into()));
        }
        if self.occupancy_runs == 0 {
            return Err(Error::InvalidParams("occupancy_runs must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_loss) {
            return Err(Error::InvalidProbability {
                name: "p_loss",
                value: self.p_loss,
            });
        }
        if let PDropMode::Measured { p_inx: Some(p) } = self.p_drop_mode {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability {
                    name: "p_inx",
                    value: p,
                });
            }
        }
        let nodes = self.topology_kind().node_count();
        if nodes < 2 {
            return Err(Error::InvalidTopology(format!(
                "{} has fewer than 2 nodes",
                self.topology_kind()
            )));
        }
        if self.protocol == Protocol::Cyclon {
            if params.c() >= nodes {
                return Err(Error::InvalidParams(format!(
                    "Cyclon needs c < N (c = {}, N = {nodes})",
                    params.c()
                )));
            }
        } else if params.n() > nodes * params.c() {
            return Err(Error::InvalidParams(format!(
                "{} items do not fit into {nodes} caches of {}",
                params.n(),
                params.c()
            )));
        }
        Ok(())
    }

    /// Sets one key. `line` only labels errors.
    pub fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let bad = |message: String| Error::Config { line, message };
        let int = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| bad(format!("`{key}` expects a non-negative integer, got `{v}`")))
        };
        let float = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(format!("`{key}` expects a number, got `{v}`")))
        };
        match key {
            "profile" => {
                let profile = match value {
                    "paper" => Profile::Paper,
                    "desk" => Profile::Desk,
                    _ => return Err(bad(format!("unknown profile `{value}` (expected paper or desk)"))),
                };
                *self = Self {
                    seed: self.seed,
                    ..Self::with_profile(profile)
                };
            }
            "topology" => {
                self.topology = match value {
                    "clique" => TopologyChoice::Clique,
                    "grid" => TopologyChoice::Grid,
                    "outdegree" => TopologyChoice::Outdegree,
                    _ => {
                        return Err(bad(format!(
                            "unknown topology `{value}` (expected clique, grid or outdegree)"
                        )))
                    }
                }
            }
            "grid_side" => self.grid_side = int(value)? as usize,
            "outdegree" => self.outdegree = int(value)? as usize,
            "nodes" => self.nodes = int(value)? as usize,
            "protocol" => self.protocol = value.parse().map_err(|_| bad(format!("unknown protocol `{value}`")))?,
            "n" => self.n = int(value)? as usize,
            "c" => self.c = int(value)? as usize,
            "s" => self.s = int(value)? as usize,
            "p_loss" => self.p_loss = float(value)?,
            "startup_rounds" => self.startup_rounds = int(value)?,
            "measure_rounds" => self.measure_rounds = Some(int(value)?),
            "runs" => self.runs = int(value)? as usize,
            "seed" => self.seed = Some(int(value)?),
            "p_drop_mode" => {
                self.p_drop_mode = match (value, self.p_drop_mode) {
                    ("analytic", _) => PDropMode::Analytic,
                    ("measured", PDropMode::Measured { p_inx }) => PDropMode::Measured { p_inx },
                    ("measured", PDropMode::Analytic) => PDropMode::Measured { p_inx: None },
                    _ => {
                        return Err(bad(format!(
                            "unknown p_drop_mode `{value}` (expected analytic or measured)"
                        )))
                    }
                }
            }
            "p_inx" => {
                let p = float(value)?;
                self.p_drop_mode = PDropMode::Measured { p_inx: Some(p) };
            }
            "tracking" => {
                self.tracking = match value {
                    "all" => TrackingMode::AllItems,
                    "single" => TrackingMode::SingleItem,
                    _ => return Err(bad(format!("unknown tracking `{value}` (expected all or single)"))),
                }
            }
            "occupancy_runs" => self.occupancy_runs = int(value)? as usize,
            _ => return Err(bad(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses a config file and then applies `overrides` in order.
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: i + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            pairs.push((i + 1, key.trim().to_owned(), value.trim().to_owned()));
        }
        let mut cfg = Self::paper();
        let profile = overrides
            .iter()
            .rev()
            .find(|p| p.0 == "profile")
            .map(|(k, v)| (0, k, v))
            .or_else(|| {
                pairs
                    .iter()
                    .rev()
                    .find(|p| p.1 == "profile")
                    .map(|(l, k, v)| (*l, k, v))
            });
        if let Some((line, key, value)) = profile {
            cfg.apply(key, value, line)?;
        }
        for (line, key, value) in pairs.iter().filter(|p| p.1 != "profile") {
            cfg.apply(key, value, *line)?;
        }
        for (key, value) in overrides.iter().filter(|p| p.0 != "profile") {
            cfg.apply(key, value, 0)?;
        }
        Ok(cfg)
    }

    /// Renders the config so that [`ExperimentConfig::parse`] reads it back
    /// unchanged.
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        let topology = match self.topology {
            TopologyChoice::Clique => "clique",
            TopologyChoice::Grid => "grid",
            TopologyChoice::Outdegree => "outdegree",
        };
        let _ = writeln!(out, "profile = {}", self.profile.name());
        let _ = writeln!(out, "topology = {topology}");
        let _ = writeln!(out, "grid_side = {}", self.grid_side);
        let _ = writeln!(out, "outdegree = {}", self.outdegree);
        let _ = writeln!(out, "nodes = {}", self.nodes);
        let _ = writeln!(out, "protocol = {}", self.protocol);
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "c = {}", self.c);
        let _ = writeln!(out, "s = {}", self.s);
        let _ = writeln!(out, "p_loss = {}", self.p_loss);
        let _ = writeln!(out, "startup_rounds = {}", self.startup_rounds);
        if let Some(r) = self.measure_rounds {
            let _ = writeln!(out, "measure_rounds = {r}");
        }
        let _ = writeln!(out, "runs = {}", self.runs);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed = {seed}");
        }
        match self.p_drop_mode {
            PDropMode::Analytic => {
                let _ = writeln!(out, "p_drop_mode = analytic");
            }
            PDropMode::Measured { p_inx } => {
                let _ = writeln!(out, "p_drop_mode = measured");
                if let Some(p) = p_inx {
                    let _ = writeln!(out, "p_inx = {p}");
                }
            }
        }
        let tracking = match self.tracking {
            TrackingMode::AllItems => "all",
            TrackingMode::SingleItem => "single",
        };
        let _ = writeln!(out, "tracking = {tracking}");
        let _ = writeln!(out, "occupancy_runs = {}", self.occupancy_runs);
        out
    }
}
