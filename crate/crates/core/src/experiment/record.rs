use std::fmt::Write as _;

use crate::metrics::Scores;

pub const CSV_HEADER: &str = "round,client_or_global,loss_instance,loss_cluster,ACC,NMI,ARI,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Global,
    Client(usize),
}

/// One logged event. Absent values are written as empty fields.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Epoch for centralized runs, communication round for federated ones
    /// (clustering rounds continue the count). 0 is the untrained model.
    pub round: usize,
    pub source: Source,
    pub loss_instance: Option<f64>,
    pub loss_cluster: Option<f64>,
    pub scores: Option<Scores>,
    pub wall_ms: Option<u128>,
}

fn field<T: std::fmt::Display>(out: &mut String, v: Option<T>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{v}");
    }
}

impl RunRecord {
    pub fn csv_row(&self) -> String {
        let mut out = self.round.to_string();
        match self.source {
            Source::Global => out.push_str(",global"),
            Source::Client(k) => {
                let _ = write!(out, ",client{k}");
            }
        }
        field(&mut out, self.loss_instance);
        field(&mut out, self.loss_cluster);
        field(&mut out, self.scores.map(|s| s.acc));
        field(&mut out, self.scores.map(|s| s.nmi));
        field(&mut out, self.scores.map(|s| s.ari));
        field(&mut out, self.wall_ms);
        out
    }
}

/// Header plus one `\n`-terminated line per record.
pub fn to_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}
