use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::federated::Partition;
use crate::model::OptimizerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Centralized online/target training on the full objective.
    Mcc,
    /// Centralized two-view training without a target network.
    Cc,
    /// Representation stage then clustering stage across clients.
    Fedmcc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Blobs { k: usize, n_per_class: usize, dim: usize, sep: f64 },
    Rings { k: usize, n_per_class: usize, dim: usize, sep: f64, noise: f64 },
    File { train: PathBuf, test: Option<PathBuf> },
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub mode: Mode,
    pub output_dir: PathBuf,
    pub dataset: DatasetSpec,
    /// Held-out points per class for synthetic datasets.
    pub holdout_per_class: usize,
    pub hidden: usize,
    pub encoder_depth: usize,
    pub d1: usize,
    /// Cluster count; `None` means "the dataset's class count".
    pub d2: Option<usize>,
    pub batch_size: usize,
    pub tau_i: f64,
    pub tau_c: f64,
    pub momentum: f64,
    pub entropy_weight: f64,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub epochs: usize,
    pub clients: usize,
    pub rounds: usize,
    pub cluster_rounds: usize,
    pub local_epochs: usize,
    pub partition: Partition,
    pub augment_noise: f64,
    pub augment_mask: f64,
    pub augment_scale: (f64, f64),
    /// Evaluate every this many epochs (centralized) or rounds (federated).
    pub eval_interval: usize,
    /// Fill the `wall_ms` column. Off by default so reruns are byte-identical.
    pub record_wall_time: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DatasetKind {
    Blobs,
    Rings,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OptimizerName {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum PartitionName {
    Iid,
    #[serde(alias = "noniid")]
    NonIid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    mode: Option<Mode>,
    output_dir: Option<PathBuf>,

    dataset: Option<DatasetKind>,
    classes: Option<usize>,
    n_per_class: Option<usize>,
    holdout_per_class: Option<usize>,
    dim: Option<usize>,
    sep: Option<f64>,
    noise: Option<f64>,
    path: Option<PathBuf>,
    test_path: Option<PathBuf>,

    hidden: Option<usize>,
    encoder_depth: Option<usize>,
    d1: Option<usize>,
    d2: Option<usize>,

    batch_size: Option<usize>,
    #[serde(rename = "tau_I")]
    tau_i: Option<f64>,
    #[serde(rename = "tau_C")]
    tau_c: Option<f64>,
    momentum: Option<f64>,
    entropy_weight: Option<f64>,
    optimizer: Option<OptimizerName>,
    lr: Option<f64>,

    epochs: Option<usize>,
    clients: Option<usize>,
    rounds: Option<usize>,
    cluster_rounds: Option<usize>,
    local_epochs: Option<usize>,
    partition: Option<PartitionName>,

    augment_noise: Option<f64>,
    augment_mask: Option<f64>,
    augment_scale_min: Option<f64>,
    augment_scale_max: Option<f64>,

    eval_interval: Option<usize>,
    record_wall_time: Option<bool>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be > 0")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<usize> {
    if v >= min {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be >= {min}")))
    }
}

/// Relative paths in a config file resolve against the file's directory.
fn resolve(base: Option<&Path>, p: PathBuf) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

impl ExperimentConfig {
    /// Parses the key-value format. `base` is the directory that relative
    /// dataset paths are resolved against.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        Self::from_raw(raw, base)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent())
    }

    fn from_raw(r: RawConfig, base: Option<&Path>) -> Result<Self> {
        let dim = at_least("dim", r.dim.unwrap_or(2), 1)?;
        let k = at_least("classes", r.classes.unwrap_or(3), 2)?;
        let n_per_class = at_least("n_per_class", r.n_per_class.unwrap_or(200), 1)?;
        let dataset = match r.dataset.unwrap_or(DatasetKind::Blobs) {
            DatasetKind::Blobs => DatasetSpec::Blobs {
                k,
                n_per_class,
                dim,
                sep: positive("sep", r.sep.unwrap_or(6.0))?,
            },
            DatasetKind::Rings => DatasetSpec::Rings {
                k,
                n_per_class,
                dim: at_least("dim", dim, 2)?,
                sep: positive("sep", r.sep.unwrap_or(2.0))?,
                noise: {
                    let n = r.noise.unwrap_or(0.1);
                    if !(n >= 0.0 && n.is_finite()) {
                        return Err(invalid("noise must be >= 0"));
                    }
                    n
                },
            },
            DatasetKind::File => {
                let train = resolve(base, r.path.ok_or_else(|| invalid("path is required for dataset = \"file\""))?);
                if !train.is_file() {
                    return Err(invalid(format!("path {} does not exist", train.display())));
                }
                let test = r.test_path.map(|p| resolve(base, p));
                if let Some(t) = &test {
                    if !t.is_file() {
                        return Err(invalid(format!("test_path {} does not exist", t.display())));
                    }
                }
                DatasetSpec::File { train, test }
            }
        };
        if let (Some(d2), DatasetSpec::Blobs { k, .. } | DatasetSpec::Rings { k, .. }) = (r.d2, &dataset) {
            if d2 != *k {
                return Err(invalid(format!("d2 must equal classes ({k}) for clustering runs")));
            }
        }
        let momentum = r.momentum.unwrap_or(0.99);
        if !(momentum > 0.0 && momentum < 1.0) {
            return Err(invalid("momentum must lie in (0, 1)"));
        }
        let lr = r.lr.unwrap_or(0.0003);
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(invalid("lr must be >= 0"));
        }
        let entropy_weight = r.entropy_weight.unwrap_or(-1.0);
        if !entropy_weight.is_finite() {
            return Err(invalid("entropy_weight must be finite"));
        }
        let augment_mask = r.augment_mask.unwrap_or(0.0);
        if !(0.0..1.0).contains(&augment_mask) {
            return Err(invalid("augment_mask must lie in [0, 1)"));
        }
        let augment_noise = r.augment_noise.unwrap_or(0.3);
        if !(augment_noise >= 0.0 && augment_noise.is_finite()) {
            return Err(invalid("augment_noise must be >= 0"));
        }
        let lo = positive("augment_scale_min", r.augment_scale_min.unwrap_or(0.8))?;
        let hi = positive("augment_scale_max", r.augment_scale_max.unwrap_or(1.2))?;
        if lo > hi {
            return Err(invalid("augment_scale_min must be <= augment_scale_max"));
        }
        Ok(Self {
            seed: r.seed.unwrap_or(0),
            mode: r.mode.unwrap_or(Mode::Mcc),
            output_dir: r.output_dir.unwrap_or_else(|| PathBuf::from("runs/latest")),
            dataset,
            holdout_per_class: at_least("holdout_per_class", r.holdout_per_class.unwrap_or(200), 1)?,
            hidden: at_least("hidden", r.hidden.unwrap_or(64), 1)?,
            encoder_depth: at_least("encoder_depth", r.encoder_depth.unwrap_or(2), 1)?,
            d1: at_least("d1", r.d1.unwrap_or(128), 2)?,
            d2: r.d2.map(|d| at_least("d2", d, 2)).transpose()?,
            batch_size: at_least("batch_size", r.batch_size.unwrap_or(128), 2)?,
            tau_i: positive("tau_I", r.tau_i.unwrap_or(0.5))?,
            tau_c: positive("tau_C", r.tau_c.unwrap_or(1.0))?,
            momentum,
            entropy_weight,
            optimizer: match r.optimizer.unwrap_or(OptimizerName::Adam) {
                OptimizerName::Sgd => OptimizerKind::Sgd,
                OptimizerName::Adam => OptimizerKind::Adam,
            },
            lr,
            epochs: r.epochs.unwrap_or(300),
            clients: at_least("clients", r.clients.unwrap_or(5), 1)?,
            rounds: r.rounds.unwrap_or(100),
            cluster_rounds: r.cluster_rounds.unwrap_or(10),
            local_epochs: at_least("local_epochs", r.local_epochs.unwrap_or(5), 1)?,
            partition: match r.partition.unwrap_or(PartitionName::Iid) {
                PartitionName::Iid => Partition::Iid,
                PartitionName::NonIid => Partition::NonIid,
            },
            augment_noise,
            augment_mask,
            augment_scale: (lo, hi),
            eval_interval: at_least("eval_interval", r.eval_interval.unwrap_or(1), 1)?,
            record_wall_time: r.record_wall_time.unwrap_or(false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::parse("", None).unwrap();
        assert_eq!(c.batch_size, 128);
        assert_eq!(c.tau_i, 0.5);
        assert_eq!(c.tau_c, 1.0);
        assert_eq!(c.momentum, 0.99);
        assert_eq!(c.lr, 0.0003);
        assert_eq!(c.optimizer, OptimizerKind::Adam);
        assert_eq!((c.d1, c.clients, c.rounds, c.local_epochs, c.cluster_rounds), (128, 5, 100, 5, 10));
        assert_eq!(c.mode, Mode::Mcc);
        assert!(!c.record_wall_time);
    }

    #[test]
    fn negative_temperature_names_the_field() {
        let err = ExperimentConfig::parse("tau_I = -1.0\n", None).unwrap_err();
        assert_eq!(err.to_string(), "tau_I must be > 0");
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err = ExperimentConfig::parse("seed = 1\n\nbogus = 2\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn type_error_reports_its_line() {
        let err = ExperimentConfig::parse("seed = 1\nepochs = \"many\"\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn d2_must_match_class_count() {
        assert!(ExperimentConfig::parse("classes = 3\nd2 = 4\n", None).is_err());
        assert_eq!(ExperimentConfig::parse("classes = 4\nd2 = 4\n", None).unwrap().d2, Some(4));
    }

    #[test]
    fn missing_dataset_file_is_rejected() {
        let err = ExperimentConfig::parse("dataset = \"file\"\npath = \"/nonexistent/x.csv\"\n", None).unwrap_err();
        assert!(err.to_string().contains("does not exist"));
    }

    #[test]
    fn partition_and_mode_spellings() {
        let c = ExperimentConfig::parse("mode = \"fedmcc\"\npartition = \"non-iid\"\n", None).unwrap();
        assert_eq!((c.mode, c.partition), (Mode::Fedmcc, Partition::NonIid));
        assert_eq!(ExperimentConfig::parse("partition = \"noniid\"\n", None).unwrap().partition, Partition::NonIid);
    }
}
