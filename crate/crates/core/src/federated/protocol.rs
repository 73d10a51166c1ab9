use rayon::prelude::*;

use super::local::run_epoch;
use super::transport::{Loopback, Transport};
use super::{federated_average, ClientDataset};
use crate::error::{Error, Result};
use crate::losses::{LossMode, Temperature};
use crate::model::{
    mcc_train_step, AugmentConfig, EmaMomentum, MccModel, MlpParams, Network, Optimizer, OptimizerKind, StepConfig,
    StepLoss,
};
use crate::rng::client_rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct FederatedConfig<T> {
    /// Communication rounds of the representation stage.
    pub rounds: usize,
    /// Communication rounds of the clustering stage.
    pub cluster_rounds: usize,
    pub local_epochs: usize,
    pub batch: usize,
    pub tau_i: Temperature<T>,
    pub tau_c: Temperature<T>,
    pub momentum: EmaMomentum<T>,
    pub optimizer: OptimizerKind,
    pub lr: T,
    pub augment: AugmentConfig<T>,
    pub entropy_weight: T,
    pub seed: u64,
}

impl<T: Scalar> FederatedConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.local_epochs == 0 {
            return Err(Error::Validation("local_epochs must be >= 1".into()));
        }
        if self.batch < 2 {
            return Err(Error::Validation("batch_size must be >= 2".into()));
        }
        if !(self.lr >= T::zero()) {
            return Err(Error::Validation("lr must be >= 0".into()));
        }
        self.augment.validate()
    }

    fn step_config(&self, mode: LossMode) -> StepConfig<T> {
        StepConfig {
            tau_i: self.tau_i,
            tau_c: self.tau_c,
            momentum: self.momentum,
            mode,
            entropy_weight: self.entropy_weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Representation,
    Clustering,
}

impl Stage {
    fn id(self) -> u64 {
        match self {
            Stage::Representation => 1,
            Stage::Clustering => 2,
        }
    }

    fn mode(self) -> LossMode {
        match self {
            Stage::Representation => LossMode::InstanceOnly,
            Stage::Clustering => LossMode::ClusterOnly,
        }
    }
}

/// What happened in one communication round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport<T> {
    pub stage: Stage,
    /// 1-based within the stage.
    pub round: usize,
    /// Mean loss of each client's final local epoch, by client index.
    pub client_losses: Vec<StepLoss<T>>,
}

/// Server globals plus the client data and the client models returned in
/// the last round.
#[derive(Debug, Clone)]
pub struct FederatedState<T> {
    pub server: Network<T>,
    pub clients: Vec<ClientDataset<T>>,
    pub client_models: Vec<MccModel<T>>,
    pub round: usize,
}

impl<T: Scalar> FederatedState<T> {
    pub fn new(server: Network<T>, clients: Vec<ClientDataset<T>>) -> Result<Self> {
        if clients.is_empty() || clients.iter().any(ClientDataset::is_empty) {
            return Err(Error::EmptyDataset);
        }
        if let Some(c) = clients.iter().flat_map(|c| &c.samples).find(|s| s.x.len() != server.input_dim()) {
            return Err(Error::DimMismatch {
                expected: server.input_dim(),
                found: c.x.len(),
            });
        }
        Ok(Self {
            server,
            clients,
            client_models: Vec::new(),
            round: 0,
        })
    }

    fn sizes(&self) -> Vec<u64> {
        self.clients.iter().map(|c| c.len() as u64).collect()
    }
}

/// Builds the client model from the broadcast stacks, trains it for the
/// configured local epochs, and returns it with its last epoch's loss.
fn train_client<T: Scalar>(
    received: Network<T>,
    data: &ClientDataset<T>,
    cfg: &FederatedConfig<T>,
    stage: Stage,
    round: usize,
) -> Result<(MccModel<T>, StepLoss<T>)> {
    let mut model = MccModel::from_online(received);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr);
    let mut rng = client_rng(cfg.seed, stage.id(), round as u64, data.client_id as u64);
    let step_cfg = cfg.step_config(stage.mode());
    let inputs = data.inputs();
    let mut last = None;
    for _ in 0..cfg.local_epochs {
        last = Some(run_epoch(&inputs, cfg.batch, &cfg.augment, &mut rng, |views| {
            mcc_train_step(&mut model, views, &step_cfg, &mut opt)
        })?);
    }
    Ok((model, last.expect("local_epochs >= 1")))
}

fn run_round<T: Scalar>(
    state: &mut FederatedState<T>,
    cfg: &FederatedConfig<T>,
    stage: Stage,
    round: usize,
) -> Result<RoundReport<T>> {
    let transport = Loopback;
    let server = &state.server;
    // the stacks that travel: f and g_i in the first stage, g_c in the second
    let outcomes: Vec<Result<(MccModel<T>, StepLoss<T>)>> = state
        .clients
        .par_iter()
        .map(|data| {
            let received = match stage {
                Stage::Representation => {
                    let mut s = transport.send_stacks(&[&server.f, &server.g_i])?.into_iter();
                    let (f, g_i) = (s.next(), s.next());
                    Network::new(f.expect("two stacks"), g_i.expect("two stacks"), server.g_c.clone())?
                }
                Stage::Clustering => {
                    let g_c = transport.send_stacks(&[&server.g_c])?.pop().expect("one stack");
                    Network::new(server.f.clone(), server.g_i.clone(), g_c)?
                }
            };
            train_client(received, data, cfg, stage, round)
        })
        .collect();
    let mut models = Vec::with_capacity(outcomes.len());
    let mut losses = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let (m, l) = o?;
        models.push(m);
        losses.push(l);
    }
    let sizes = state.sizes();
    let upload = |pick: fn(&Network<T>) -> &MlpParams<T>| -> Result<MlpParams<T>> {
        let returned = models
            .iter()
            .map(|m| transport.send_stacks(&[pick(&m.online)]).map(|mut v| v.pop().expect("one stack")))
            .collect::<Result<Vec<_>>>()?;
        let parts: Vec<(&MlpParams<T>, u64)> = returned.iter().zip(&sizes).map(|(p, &s)| (p, s)).collect();
        federated_average(&parts)
    };
    match stage {
        Stage::Representation => {
            let f = upload(|n| &n.f)?;
            let g_i = upload(|n| &n.g_i)?;
            state.server.f = f;
            state.server.g_i = g_i;
        }
        Stage::Clustering => {
            state.server.g_c = upload(|n| &n.g_c)?;
        }
    }
    state.client_models = models;
    state.round += 1;
    Ok(RoundReport {
        stage,
        round,
        client_losses: losses,
    })
}

/// Representation learning: clients optimize the instance-level loss on
/// online `f`, `g_i`; the server averages the returned online stacks.
/// `observe` runs after every aggregation.
pub fn run_stage1<T: Scalar>(
    state: &mut FederatedState<T>,
    cfg: &FederatedConfig<T>,
    mut observe: impl FnMut(&RoundReport<T>, &Network<T>) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    for round in 1..=cfg.rounds {
        let report = run_round(state, cfg, Stage::Representation, round)?;
        observe(&report, &state.server)?;
    }
    Ok(())
}

/// Clustering: starting from `cluster_head`, clients optimize the
/// cluster-level loss on `g_c` only, with the encoder frozen. Errors if the
/// server encoder changes in any round.
pub fn run_stage2<T: Scalar>(
    state: &mut FederatedState<T>,
    cfg: &FederatedConfig<T>,
    cluster_head: MlpParams<T>,
    mut observe: impl FnMut(&RoundReport<T>, &Network<T>) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    state.server = Network::new(state.server.f.clone(), state.server.g_i.clone(), cluster_head)?;
    let frozen = state.server.f.flat();
    for round in 1..=cfg.cluster_rounds {
        let report = run_round(state, cfg, Stage::Clustering, round)?;
        let moved = state.server.f.flat() != frozen
            || state.client_models.iter().any(|m| m.online.f.flat() != frozen || m.target.f.flat() != frozen);
        if moved {
            return Err(Error::Validation("encoder changed during the clustering stage".into()));
        }
        observe(&report, &state.server)?;
    }
    Ok(())
}

/// Index of the largest soft assignment; the lowest index wins ties.
pub fn infer_cluster<T: Scalar>(net: &Network<T>, x: &[T]) -> Result<usize> {
    let y = net.cluster_rep(&net.embed(x)?)?;
    let mut best = 0;
    for (j, &v) in y.iter().enumerate() {
        if v > y[best] {
            best = j;
        }
    }
    Ok(best)
}
