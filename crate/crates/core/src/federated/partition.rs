use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{ClientDataset, Sample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Iid,
    NonIid,
}

fn by_class<T>(samples: Vec<Sample<T>>) -> BTreeMap<usize, Vec<Sample<T>>> {
    let mut classes: BTreeMap<usize, Vec<Sample<T>>> = BTreeMap::new();
    for s in samples {
        classes.entry(s.label).or_default().push(s);
    }
    classes
}

fn check_counts(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter {
            name: "clients",
            reason: format!("need 1 <= K <= {n} samples, got {k}"),
        });
    }
    Ok(())
}

/// Each class is shuffled and dealt round-robin. The deal continues where
/// the previous class stopped, so client sizes also differ by at most one.
pub fn partition_iid<T, R: Rng + ?Sized>(samples: Vec<Sample<T>>, k: usize, rng: &mut R) -> Result<Vec<ClientDataset<T>>> {
    check_counts(samples.len(), k)?;
    let mut clients: Vec<ClientDataset<T>> = (0..k)
        .map(|client_id| ClientDataset {
            client_id,
            samples: Vec::new(),
        })
        .collect();
    let mut next = 0;
    for (_, mut members) in by_class(samples) {
        members.shuffle(rng);
        for s in members {
            clients[next].samples.push(s);
            next = (next + 1) % k;
        }
    }
    Ok(clients)
}

/// Client `k` receives every sample of the `k`-th contiguous block of
/// `C / K` classes (classes in ascending label order).
pub fn partition_noniid<T>(samples: Vec<Sample<T>>, k: usize) -> Result<Vec<ClientDataset<T>>> {
    check_counts(samples.len(), k)?;
    let classes = by_class(samples);
    let c = classes.len();
    if !c.is_multiple_of(k) {
        return Err(Error::IndivisibleClasses { classes: c, clients: k });
    }
    let per = c / k;
    let mut clients: Vec<ClientDataset<T>> = (0..k)
        .map(|client_id| ClientDataset {
            client_id,
            samples: Vec::new(),
        })
        .collect();
    for (rank, (_, members)) in classes.into_iter().enumerate() {
        clients[rank / per].samples.extend(members);
    }
    Ok(clients)
}
