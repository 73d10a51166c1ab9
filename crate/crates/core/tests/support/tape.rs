//! Minimal reverse-mode automatic differentiation on scalars.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

const NONE: usize = usize::MAX;

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<[(usize, f64); 2]>>,
}

#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: usize,
    pub val: f64,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&self, val: f64) -> Var<'_> {
        self.push(val, [(NONE, 0.0), (NONE, 0.0)])
    }

    fn push(&self, val: f64, parents: [(usize, f64); 2]) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(parents);
        Var {
            tape: self,
            idx: nodes.len() - 1,
            val,
        }
    }

    /// d out / d node for every node on the tape.
    pub fn gradient(&self, out: Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        adj[out.idx] = 1.0;
        for i in (0..=out.idx).rev() {
            for &(p, w) in &nodes[i] {
                if p != NONE {
                    adj[p] += w * adj[i];
                }
            }
        }
        adj
    }
}

impl<'t> Var<'t> {
    pub fn index(self) -> usize {
        self.idx
    }

    fn unary(self, val: f64, d: f64) -> Var<'t> {
        self.tape.push(val, [(self.idx, d), (NONE, 0.0)])
    }

    pub fn exp(self) -> Var<'t> {
        let e = self.val.exp();
        self.unary(e, e)
    }

    pub fn ln(self) -> Var<'t> {
        self.unary(self.val.ln(), 1.0 / self.val)
    }

    pub fn sqrt(self) -> Var<'t> {
        let r = self.val.sqrt();
        self.unary(r, 0.5 / r)
    }

    pub fn abs(self) -> Var<'t> {
        self.unary(self.val.abs(), self.val.signum())
    }

    pub fn relu(self) -> Var<'t> {
        if self.val > 0.0 {
            self.unary(self.val, 1.0)
        } else {
            self.unary(0.0, 0.0)
        }
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        self.unary(c * self.val, c)
    }

    pub fn shift(self, c: f64) -> Var<'t> {
        self.unary(self.val + c, 1.0)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, o: Var<'t>) -> Var<'t> {
        self.tape.push(self.val + o.val, [(self.idx, 1.0), (o.idx, 1.0)])
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, o: Var<'t>) -> Var<'t> {
        self.tape.push(self.val - o.val, [(self.idx, 1.0), (o.idx, -1.0)])
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, o: Var<'t>) -> Var<'t> {
        self.tape.push(self.val * o.val, [(self.idx, o.val), (o.idx, self.val)])
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, o: Var<'t>) -> Var<'t> {
        let q = self.val / o.val;
        self.tape.push(q, [(self.idx, 1.0 / o.val), (o.idx, -q / o.val)])
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.scale(-1.0)
    }
}

pub fn sum<'t>(tape: &'t Tape, xs: impl IntoIterator<Item = Var<'t>>) -> Var<'t> {
    xs.into_iter().fold(tape.var(0.0), |a, b| a + b)
}
