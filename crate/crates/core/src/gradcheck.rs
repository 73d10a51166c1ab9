//! Finite-difference audit of every analytic gradient, as run by the
//! `gradcheck` command.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::grad::{contrastive_grads, cosine_grad, entropy_grads, two_pass_gradient, AlphaCache};
use crate::losses::{contrastive_loss, entropy, LossMode, Temperature};
use crate::model::{four_view_batch, mcc_losses, Architecture, MccModel, Network, ViewPair};
use crate::numerics::{cosine_similarity, Layout, RepBatch};
use crate::rng::{rng_for, Rng as StreamRng};

const STEP: f64 = 1e-6;

/// Outcome of one family of checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSummary {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, floor)` seen.
    pub worst: f64,
}

impl CheckSummary {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            trials: 0,
            failures: 0,
            worst: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, analytic: &[f64], numeric: &[f64], rel: f64, abs: f64) {
        self.trials += 1;
        let mut ok = true;
        for (&a, &n) in analytic.iter().zip(numeric) {
            let err = (a - n).abs();
            let scale = a.abs().max(n.abs());
            self.worst = self.worst.max(err / scale.max(abs / rel));
            ok &= err <= (rel * scale).max(abs);
        }
        if !ok {
            self.failures += 1;
        }
    }
}

fn gauss_vec(rng: &mut StreamRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

fn central(mut f: impl FnMut(f64) -> f64) -> f64 {
    (f(STEP) - f(-STEP)) / (2.0 * STEP)
}

fn numeric_column(c: &RepBatch<f64>, col: usize, mut loss: impl FnMut(&RepBatch<f64>) -> f64) -> Vec<f64> {
    (0..c.dim())
        .map(|r| {
            central(|h| {
                let mut p = c.clone();
                p.set(r, col, c.get(r, col) + h);
                loss(&p)
            })
        })
        .collect()
}

fn check_cosine(rng: &mut StreamRng, out: &mut CheckSummary) -> Result<()> {
    let d = rng.gen_range(2..=16);
    let (u, v) = (gauss_vec(rng, d), gauss_vec(rng, d));
    let analytic = cosine_grad(&u, &v)?;
    let numeric: Vec<f64> = (0..d)
        .map(|j| {
            central(|h| {
                let mut p = u.clone();
                p[j] += h;
                cosine_similarity(&p, &v).expect("nonzero")
            })
        })
        .collect();
    out.record(&analytic, &numeric, 1e-5, 1e-8);
    Ok(())
}

fn check_contrastive(rng: &mut StreamRng, out: &mut CheckSummary) -> Result<()> {
    let (n, d) = (rng.gen_range(2..=8), rng.gen_range(2..=16));
    let tau = Temperature::new(rng.gen_range(0.2..2.0))?;
    let mk = |rng: &mut StreamRng| RepBatch::from_column_major(d, n, gauss_vec(rng, d * n), Layout::Instance);
    let (u, v) = (mk(rng)?, mk(rng)?);
    let (gu, gv) = contrastive_grads(&u, &v, tau)?;
    for l in 0..n {
        let nu = numeric_column(&u, l, |p| contrastive_loss(p, &v, tau).expect("finite"));
        out.record(gu.column(l), &nu, 1e-5, 1e-8);
        let nv = numeric_column(&v, l, |p| contrastive_loss(&u, p, tau).expect("finite"));
        out.record(gv.column(l), &nv, 1e-5, 1e-8);
    }
    Ok(())
}

fn check_entropy(rng: &mut StreamRng, out: &mut CheckSummary) -> Result<()> {
    let (n, d) = (rng.gen_range(2..=8), rng.gen_range(2..=16));
    let data = (0..n * d).map(|_| rng.gen_range(0.05..1.0)).collect();
    let c = RepBatch::from_column_major(n, d, data, Layout::Cluster)?;
    let g = entropy_grads(&c)?;
    for l in 0..d {
        let num = numeric_column(&c, l, |p| entropy(p).expect("positive"));
        out.record(g.column(l), &num, 1e-5, 1e-8);
    }
    Ok(())
}

fn perturbed(net: &Network<f64>, index: usize, h: f64) -> Network<f64> {
    let mut out = net.clone();
    let mut i = index;
    for stack in [&mut out.f, &mut out.g_i, &mut out.g_c] {
        let len = stack.param_count();
        if i < len {
            *stack.params_mut().nth(i).expect("in range") += h;
            break;
        }
        i -= len;
    }
    out
}

fn check_two_pass(rng: &mut StreamRng, out: &mut CheckSummary) -> Result<()> {
    let arch = Architecture {
        input_dim: 2,
        hidden: 8,
        encoder_depth: 1,
        d1: 4,
        d2: 3,
    };
    let n = [2, 4, 8][rng.gen_range(0..3)];
    let online = Network::random(&arch, rng)?;
    let target = Network::random(&arch, rng)?;
    let views = ViewPair::new(
        (0..n).map(|_| gauss_vec(rng, 2)).collect(),
        (0..n).map(|_| gauss_vec(rng, 2)).collect(),
    )?;
    let (ti, tc) = (Temperature::new(0.5)?, Temperature::new(1.0)?);
    let weight = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let objective = |net: &Network<f64>| -> f64 {
        let model = MccModel {
            online: net.clone(),
            target: target.clone(),
        };
        let batch = four_view_batch(&model, &views).expect("finite");
        mcc_losses(&batch, ti, tc, weight).expect("finite").total()
    };
    let model = MccModel {
        online: online.clone(),
        target: target.clone(),
    };
    let batch = four_view_batch(&model, &views)?;
    let cache = AlphaCache::for_mcc(&batch, ti, tc, LossMode::FullMcc, online.version())?.with_entropy_weight(weight);
    let analytic = two_pass_gradient(&online, &views, &cache)?.flat();
    let numeric: Vec<f64> = (0..analytic.len())
        .map(|i| central(|h| objective(&perturbed(&online, i, h))))
        .collect();
    out.record(&analytic, &numeric, 1e-4, 1e-7);
    Ok(())
}

/// Runs `trials` seeded instances of each check family.
pub fn run_gradcheck(trials: usize, seed: u64) -> Result<Vec<CheckSummary>> {
    type Check = fn(&mut StreamRng, &mut CheckSummary) -> Result<()>;
    let families: [(&'static str, Check); 4] = [
        ("cosine_grad", check_cosine),
        ("contrastive_grad_u/v", check_contrastive),
        ("entropy_grad", check_entropy),
        ("two_pass_gradient", check_two_pass),
    ];
    families
        .iter()
        .enumerate()
        .map(|(k, (name, check))| {
            let mut rng = rng_for(seed, 100 + k as u64);
            let mut summary = CheckSummary::new(name);
            for _ in 0..trials {
                check(&mut rng, &mut summary)?;
            }
            Ok(summary)
        })
        .collect()
}
