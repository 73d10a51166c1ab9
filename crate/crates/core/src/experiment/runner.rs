use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{DatasetSpec, ExperimentConfig, Mode};
use super::data::{Blobs, Dataset, Rings};
use super::record::{to_csv, RunRecord, Source};
use crate::error::{Error, Result};
use crate::federated::{
    infer_cluster, partition_iid, partition_noniid, run_epoch, run_stage1, run_stage2, FederatedConfig,
    FederatedState, Partition, RoundReport,
};
use crate::losses::{LossMode, Temperature};
use crate::metrics::{score, Scores};
use crate::model::checkpoint::{load_model, save_model};
use crate::model::{
    cc_train_step, mcc_train_step, Architecture, AugmentConfig, EmaMomentum, MccModel, Network, Optimizer,
    StepConfig, StepLoss,
};
use crate::rng::{rng_for, stream};

/// `git describe`-style version of this build.
pub const VERSION: &str = match option_env!("MCC_GIT_DESCRIBE") {
    Some(v) => v,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    /// For federated runs the server network, with its target a copy.
    pub model: MccModel<f64>,
    pub final_scores: Scores,
}

impl RunOutcome {
    pub fn csv(&self) -> String {
        to_csv(&self.records)
    }
}

/// Training and held-out data for a config. Synthetic held-out points come
/// from the same cluster means as the training points.
pub fn build_datasets(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let mut rng = rng_for(cfg.seed, stream::DATA);
    let mut hold = rng_for(cfg.seed, stream::HOLDOUT);
    match &cfg.dataset {
        DatasetSpec::Blobs { k, n_per_class, dim, sep } => {
            let b = Blobs::new(*k, *dim, *sep, &mut rng)?;
            Ok((b.sample(*n_per_class, &mut rng)?, b.sample(cfg.holdout_per_class, &mut hold)?))
        }
        DatasetSpec::Rings {
            k,
            n_per_class,
            dim,
            sep,
            noise,
        } => {
            let r = Rings::new(*k, *dim, *sep, *noise, &mut rng)?;
            Ok((r.sample(*n_per_class, &mut rng)?, r.sample(cfg.holdout_per_class, &mut hold)?))
        }
        DatasetSpec::File { train, test } => {
            let tr = Dataset::load(train)?;
            let te = match test {
                Some(t) => Dataset::load(t)?,
                None => tr.clone(),
            };
            if te.dim() != tr.dim() {
                return Err(Error::DimMismatch {
                    expected: tr.dim(),
                    found: te.dim(),
                });
            }
            Ok((tr, te))
        }
    }
}

pub fn evaluate(net: &Network<f64>, data: &Dataset) -> Result<Scores> {
    let pred = data
        .samples
        .iter()
        .map(|s| infer_cluster(net, &s.x))
        .collect::<Result<Vec<_>>>()?;
    score(&pred, &data.labels())
}

struct Logger<'a> {
    cfg: &'a ExperimentConfig,
    holdout: &'a Dataset,
    start: Instant,
    records: Vec<RunRecord>,
    last: Option<Scores>,
}

impl Logger<'_> {
    fn push(&mut self, round: usize, source: Source, loss: Option<StepLoss<f64>>, eval: Option<&Network<f64>>) -> Result<()> {
        let scores = eval.map(|net| evaluate(net, self.holdout)).transpose()?;
        if scores.is_some() {
            self.last = scores;
        }
        self.records.push(RunRecord {
            round,
            source,
            loss_instance: loss.map(|l| l.instance),
            loss_cluster: loss.map(|l| l.cluster),
            scores,
            wall_ms: self.cfg.record_wall_time.then(|| self.start.elapsed().as_millis()),
        });
        Ok(())
    }

    fn due(&self, round: usize, last: usize) -> bool {
        round.is_multiple_of(self.cfg.eval_interval) || round == last
    }
}

fn architecture(cfg: &ExperimentConfig, train: &Dataset) -> Architecture {
    Architecture {
        input_dim: train.dim(),
        hidden: cfg.hidden,
        encoder_depth: cfg.encoder_depth,
        d1: cfg.d1,
        d2: cfg.d2.unwrap_or(train.classes),
    }
}

fn augment_config(cfg: &ExperimentConfig) -> Result<AugmentConfig<f64>> {
    AugmentConfig::new(cfg.augment_noise, cfg.augment_mask, cfg.augment_scale)
}

fn federated_config(cfg: &ExperimentConfig) -> Result<FederatedConfig<f64>> {
    Ok(FederatedConfig {
        rounds: cfg.rounds,
        cluster_rounds: cfg.cluster_rounds,
        local_epochs: cfg.local_epochs,
        batch: cfg.batch_size,
        tau_i: Temperature::new(cfg.tau_i)?,
        tau_c: Temperature::new(cfg.tau_c)?,
        momentum: EmaMomentum::new(cfg.momentum)?,
        optimizer: cfg.optimizer,
        lr: cfg.lr,
        augment: augment_config(cfg)?,
        entropy_weight: cfg.entropy_weight,
        seed: cfg.seed,
    })
}

fn run_centralized(cfg: &ExperimentConfig, train: &Dataset, log: &mut Logger) -> Result<MccModel<f64>> {
    let arch = architecture(cfg, train);
    let mut model = MccModel::random(&arch, &mut rng_for(cfg.seed, stream::INIT)).map_err(Error::in_stage("init"))?;
    log.push(0, Source::Global, None, Some(&model.online))?;
    let step = StepConfig {
        tau_i: Temperature::new(cfg.tau_i)?,
        tau_c: Temperature::new(cfg.tau_c)?,
        momentum: EmaMomentum::new(cfg.momentum)?,
        mode: LossMode::FullMcc,
        entropy_weight: cfg.entropy_weight,
    };
    let aug = augment_config(cfg)?;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr);
    let mut rng = rng_for(cfg.seed, stream::TRAIN);
    let inputs: Vec<&[f64]> = train.samples.iter().map(|s| s.x.as_slice()).collect();
    for epoch in 1..=cfg.epochs {
        let loss = run_epoch(&inputs, cfg.batch_size, &aug, &mut rng, |views| match cfg.mode {
            Mode::Cc => cc_train_step(&mut model.online, views, step.tau_i, step.tau_c, step.entropy_weight, &mut opt),
            _ => mcc_train_step(&mut model, views, &step, &mut opt),
        })
        .map_err(Error::in_stage("train"))?;
        let eval = log.due(epoch, cfg.epochs).then_some(&model.online);
        log.push(epoch, Source::Global, Some(loss), eval)?;
    }
    if cfg.mode == Mode::Cc {
        // no target network in this mode; keep the checkpoint layout uniform
        model.target = model.online.clone();
    }
    Ok(model)
}

fn weighted_loss(report: &RoundReport<f64>, sizes: &[usize]) -> StepLoss<f64> {
    let total = sizes.iter().sum::<usize>() as f64;
    let mut out = StepLoss {
        instance: 0.0,
        cluster: 0.0,
    };
    for (l, &s) in report.client_losses.iter().zip(sizes) {
        out.instance += l.instance * s as f64 / total;
        out.cluster += l.cluster * s as f64 / total;
    }
    out
}

/// Client rows, then the global row; clustering rounds are numbered after
/// the representation rounds.
fn log_round(
    log: &mut Logger,
    report: &RoundReport<f64>,
    server: &Network<f64>,
    offset: usize,
    last: usize,
    sizes: &[usize],
) -> Result<()> {
    let round = offset + report.round;
    for (k, l) in report.client_losses.iter().enumerate() {
        log.push(round, Source::Client(k), Some(*l), None)?;
    }
    let eval = log.due(round, last).then_some(server);
    log.push(round, Source::Global, Some(weighted_loss(report, sizes)), eval)
}

fn run_federated(cfg: &ExperimentConfig, train: &Dataset, log: &mut Logger) -> Result<MccModel<f64>> {
    let arch = architecture(cfg, train);
    let clients = match cfg.partition {
        Partition::Iid => partition_iid(train.samples.clone(), cfg.clients, &mut rng_for(cfg.seed, stream::PARTITION)),
        Partition::NonIid => partition_noniid(train.samples.clone(), cfg.clients),
    }
    .map_err(Error::in_stage("partition"))?;
    let sizes: Vec<usize> = clients.iter().map(|c| c.len()).collect();
    let server = Network::random(&arch, &mut rng_for(cfg.seed, stream::INIT)).map_err(Error::in_stage("init"))?;
    let mut state = FederatedState::new(server, clients).map_err(Error::in_stage("init"))?;
    let fcfg = federated_config(cfg)?;
    log.push(0, Source::Global, None, Some(&state.server))?;
    if cfg.rounds == 0 {
        return Ok(MccModel::from_online(state.server));
    }
    let last = cfg.rounds + cfg.cluster_rounds;
    run_stage1(&mut state, &fcfg, |r, s| log_round(log, r, s, 0, last, &sizes))
        .map_err(Error::in_stage("representation stage"))?;
    let head = Network::random_cluster_head(&arch, &mut rng_for(cfg.seed, stream::CLUSTER_INIT))?;
    run_stage2(&mut state, &fcfg, head, |r, s| log_round(log, r, s, cfg.rounds, last, &sizes))
        .map_err(Error::in_stage("clustering stage"))?;
    Ok(MccModel::from_online(state.server))
}

/// Runs one experiment in memory. Deterministic given the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let (train, holdout) = build_datasets(cfg).map_err(Error::in_stage("data"))?;
    let mut log = Logger {
        cfg,
        holdout: &holdout,
        start: Instant::now(),
        records: Vec::new(),
        last: None,
    };
    let model = match cfg.mode {
        Mode::Mcc | Mode::Cc => run_centralized(cfg, &train, &mut log)?,
        Mode::Fedmcc => run_federated(cfg, &train, &mut log)?,
    };
    let final_scores = log.last.expect("round 0 is always evaluated");
    Ok(RunOutcome {
        records: log.records,
        model,
        final_scores,
    })
}

pub const METRICS_FILE: &str = "metrics.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const PROVENANCE_FILE: &str = "provenance.txt";
pub const CHECKPOINT_FILE: &str = "model.mcck";

/// Writes the metrics CSV, the config text, the provenance note and the
/// final checkpoint under `dir`.
pub fn write_artifacts(dir: &Path, config_text: &str, cfg: &ExperimentConfig, outcome: &RunOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(METRICS_FILE), outcome.csv())?;
    std::fs::write(dir.join(CONFIG_FILE), config_text)?;
    std::fs::write(
        dir.join(PROVENANCE_FILE),
        format!("version = {VERSION}\nseed = {}\nmode = {:?}\n", cfg.seed, cfg.mode),
    )?;
    save_model(dir.join(CHECKPOINT_FILE), &outcome.model)
}

/// Loads a config file, applies overrides, runs it and writes artifacts.
/// Returns the outcome and the output directory.
pub fn run_config_file(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<(RunOutcome, PathBuf)> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = ExperimentConfig::parse(&text, path.parent())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    let outcome = run_experiment(&cfg)?;
    write_artifacts(&cfg.output_dir, &text, &cfg, &outcome).map_err(Error::in_stage("write"))?;
    Ok((outcome, cfg.output_dir))
}

/// Scores a saved model's online network on a labeled CSV dataset.
pub fn evaluate_checkpoint(checkpoint: &Path, dataset: &Path) -> Result<Scores> {
    let model: MccModel<f64> = load_model(checkpoint)?;
    let data = Dataset::load(dataset)?;
    if data.dim() != model.online.input_dim() {
        return Err(Error::DimMismatch {
            expected: model.online.input_dim(),
            found: data.dim(),
        });
    }
    evaluate(&model.online, &data)
}
