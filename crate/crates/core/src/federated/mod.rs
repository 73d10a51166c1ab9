//! Simulated federated training: partitioning, weighted averaging, and the
//! two-stage protocol (representation learning, then clustering).

mod average;
mod local;
mod partition;
mod protocol;
mod transport;

pub use average::{aggregation_weights, federated_average};
pub use local::run_epoch;
pub use partition::{partition_iid, partition_noniid, Partition};
pub use protocol::{
    infer_cluster, run_stage1, run_stage2, FederatedConfig, FederatedState, RoundReport, Stage,
};
pub use transport::{Loopback, Transport};

/// One input with its class. The label is never read during training.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub x: Vec<T>,
    pub label: usize,
}

/// The local data of one client.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset<T> {
    pub client_id: usize,
    pub samples: Vec<Sample<T>>,
}

impl<T> ClientDataset<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn inputs(&self) -> Vec<&[T]> {
        self.samples.iter().map(|s| s.x.as_slice()).collect()
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.samples.iter().map(|s| s.label).collect();
        c.sort_unstable();
        c.dedup();
        c
    }
}
