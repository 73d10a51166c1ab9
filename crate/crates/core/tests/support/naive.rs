//! Gradient of the fully coupled batch loss by reverse-mode differentiation
//! through every sample at once: the reference the two-pass scheme must
//! reproduce.

use mcc_core::model::{Activation, MlpParams, Network, ViewPair};

use super::literal::{tcontrastive, tentropy, transpose};
use super::tape::{sum, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Online gradient of the momentum loss; the flags pick its instance
    /// and cluster parts.
    Momentum { instance: bool, cluster: bool },
    /// Two-view loss of a single network.
    TwoView,
}

#[derive(Debug, Clone, Copy)]
pub struct Temps {
    pub tau_i: f64,
    pub tau_c: f64,
    pub entropy_weight: f64,
}

struct VarStack<'t> {
    layers: Vec<(usize, Activation, Vec<Var<'t>>, Vec<Var<'t>>)>,
}

fn lift<'t>(t: &'t Tape, stack: &MlpParams<f64>) -> VarStack<'t> {
    VarStack {
        layers: stack
            .layers()
            .iter()
            .map(|l| {
                (
                    l.input_dim(),
                    l.activation(),
                    l.weight().iter().map(|&w| t.var(w)).collect(),
                    l.bias().iter().map(|&b| t.var(b)).collect(),
                )
            })
            .collect(),
    }
}

fn forward<'t>(t: &'t Tape, s: &VarStack<'t>, x: &[Var<'t>]) -> Vec<Var<'t>> {
    let mut h = x.to_vec();
    for (input, act, w, b) in &s.layers {
        h = b
            .iter()
            .enumerate()
            .map(|(o, &bias)| {
                let pre = bias + sum(t, (0..*input).map(|i| w[o * input + i] * h[i]));
                match act {
                    Activation::Relu => pre.relu(),
                    Activation::Identity => pre,
                }
            })
            .collect();
    }
    h
}

fn softmax<'t>(t: &'t Tape, logits: &[Var<'t>]) -> Vec<Var<'t>> {
    let m = logits.iter().map(|v| v.val).fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<Var<'t>> = logits.iter().map(|&l| l.shift(-m).exp()).collect();
    let s = sum(t, e.iter().copied());
    e.into_iter().map(|x| x / s).collect()
}

struct Reps<'t> {
    z: Vec<Vec<Var<'t>>>,
    c: Vec<Vec<Var<'t>>>,
}

fn represent<'t>(t: &'t Tape, net: &[VarStack<'t>; 3], xs: &[Vec<f64>]) -> Reps<'t> {
    let mut z = Vec::new();
    let mut rows = Vec::new();
    for x in xs {
        let x: Vec<Var<'t>> = x.iter().map(|&v| t.var(v)).collect();
        let h = forward(t, &net[0], &x);
        z.push(forward(t, &net[1], &h));
        rows.push(softmax(t, &forward(t, &net[2], &h)));
    }
    Reps { z, c: transpose(&rows) }
}

/// Loss value and its gradient with respect to every parameter of
/// `online`, flattened encoder, instance head, cluster head, each layer
/// weights (row-major, output by input) then bias.
pub fn naive_gradient(
    online: &Network<f64>,
    target: Option<&Network<f64>>,
    views: &ViewPair<f64>,
    objective: Objective,
    temps: Temps,
) -> (f64, Vec<f64>) {
    let t = Tape::new();
    let on = [lift(&t, &online.f), lift(&t, &online.g_i), lift(&t, &online.g_c)];
    let params: Vec<usize> = on
        .iter()
        .flat_map(|s| s.layers.iter().flat_map(|(_, _, w, b)| w.iter().chain(b).map(|v| v.index())))
        .collect();
    let (ti, tc, lam) = (temps.tau_i, temps.tau_c, temps.entropy_weight);
    let a = represent(&t, &on, &views.a);
    let b = represent(&t, &on, &views.b);
    let loss = match objective {
        Objective::TwoView => {
            let inst = tcontrastive(&t, &a.z, &b.z, ti);
            let clus = tcontrastive(&t, &a.c, &b.c, tc);
            (inst + clus).scale(0.5) + (tentropy(&t, &a.c) + tentropy(&t, &b.c)).scale(lam)
        }
        Objective::Momentum { instance, cluster } => {
            // the target's parameters live on the tape too, but only the
            // online indices are read back
            let tn = target.expect("momentum objective needs a target");
            let tg = [lift(&t, &tn.f), lift(&t, &tn.g_i), lift(&t, &tn.g_c)];
            let at = represent(&t, &tg, &views.a);
            let bt = represent(&t, &tg, &views.b);
            let mut parts = Vec::new();
            if instance {
                parts.push((tcontrastive(&t, &a.z, &bt.z, ti) + tcontrastive(&t, &at.z, &b.z, ti)).scale(0.5));
            }
            if cluster {
                parts.push((tcontrastive(&t, &a.c, &bt.c, tc) + tcontrastive(&t, &at.c, &b.c, tc)).scale(0.5));
                let h = tentropy(&t, &a.c) + tentropy(&t, &b.c) + tentropy(&t, &at.c) + tentropy(&t, &bt.c);
                parts.push(h.scale(lam));
            }
            sum(&t, parts)
        }
    };
    let adj = t.gradient(loss);
    (loss.val, params.iter().map(|&i| adj[i]).collect())
}
