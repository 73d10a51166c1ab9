use crate::scalar::Scalar;

use super::mlp::{MlpParams, StackGrad};
use super::network::{Network, ParamGrad};

/// Which stacks of a network an update may write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trainable {
    pub f: bool,
    pub g_i: bool,
    pub g_c: bool,
}

impl Trainable {
    pub const ALL: Self = Self {
        f: true,
        g_i: true,
        g_c: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone)]
struct AdamState<T> {
    step: i32,
    first: ParamGrad<T>,
    second: ParamGrad<T>,
}

/// Plain SGD, or Adam with β1 = 0.9, β2 = 0.999, ε = 1e-8.
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    lr: T,
    adam: Option<AdamState<T>>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, lr: T) -> Self {
        Self { kind, lr, adam: None }
    }

    pub fn sgd(lr: T) -> Self {
        Self::new(OptimizerKind::Sgd, lr)
    }

    pub fn adam(lr: T) -> Self {
        Self::new(OptimizerKind::Adam, lr)
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn lr(&self) -> T {
        self.lr
    }

    /// Descends `grad` on the stacks selected by `which`; the others are not
    /// touched (their versions do not change either).
    pub fn step(&mut self, net: &mut Network<T>, grad: &ParamGrad<T>, which: Trainable) {
        match self.kind {
            OptimizerKind::Sgd => {
                let lr = self.lr;
                let upd = |p: &mut MlpParams<T>, g: &StackGrad<T>| {
                    for (w, &d) in p.params_mut().zip(g.flat().iter()) {
                        *w = *w - lr * d;
                    }
                };
                if which.f {
                    upd(&mut net.f, &grad.f);
                }
                if which.g_i {
                    upd(&mut net.g_i, &grad.g_i);
                }
                if which.g_c {
                    upd(&mut net.g_c, &grad.g_c);
                }
            }
            OptimizerKind::Adam => {
                let state = self.adam.get_or_insert_with(|| AdamState {
                    step: 0,
                    first: ParamGrad::zeros_like(net),
                    second: ParamGrad::zeros_like(net),
                });
                state.step += 1;
                let (b1, b2, eps) = (T::of(0.9), T::of(0.999), T::of(1e-8));
                let c1 = T::one() - b1.powi(state.step);
                let c2 = T::one() - b2.powi(state.step);
                let lr = self.lr;
                let upd = |p: &mut MlpParams<T>, g: &StackGrad<T>, m: &mut StackGrad<T>, v: &mut StackGrad<T>| {
                    let g = g.flat();
                    for (((w, &d), mi), vi) in p.params_mut().zip(&g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *mi = b1 * *mi + (T::one() - b1) * d;
                        *vi = b2 * *vi + (T::one() - b2) * d * d;
                        let mhat = *mi / c1;
                        let vhat = *vi / c2;
                        *w = *w - lr * mhat / (vhat.sqrt() + eps);
                    }
                };
                if which.f {
                    upd(&mut net.f, &grad.f, &mut state.first.f, &mut state.second.f);
                }
                if which.g_i {
                    upd(&mut net.g_i, &grad.g_i, &mut state.first.g_i, &mut state.second.g_i);
                }
                if which.g_c {
                    upd(&mut net.g_c, &grad.g_c, &mut state.first.g_c, &mut state.second.g_c);
                }
            }
        }
    }
}
