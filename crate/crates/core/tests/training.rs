mod support;

use mcc_core::federated::run_epoch;
use mcc_core::losses::{LossMode, Temperature};
use mcc_core::model::{
    four_view_batch, mcc_losses, mcc_train_step, Architecture, AugmentConfig, EmaMomentum, MccModel, Optimizer,
    StepConfig, ViewPair,
};
use mcc_core::rng::rng_for;
use support::oracles::gaussian_columns;

fn arch() -> Architecture {
    Architecture {
        input_dim: 3,
        hidden: 16,
        encoder_depth: 2,
        d1: 8,
        d2: 3,
    }
}

fn step_cfg(mode: LossMode) -> StepConfig<f64> {
    StepConfig {
        tau_i: Temperature::new(0.5).unwrap(),
        tau_c: Temperature::new(1.0).unwrap(),
        momentum: EmaMomentum::new(0.9).unwrap(),
        mode,
        entropy_weight: -1.0,
    }
}

fn setup(seed: u64) -> (MccModel<f64>, ViewPair<f64>) {
    let mut rng = rng_for(seed, 0);
    let mut model = MccModel::random(&arch(), &mut rng).unwrap();
    // a target that differs from the online network
    model.target = MccModel::random(&arch(), &mut rng).unwrap().online;
    let v = ViewPair::new(gaussian_columns(&mut rng, 3, 8), gaussian_columns(&mut rng, 3, 8)).unwrap();
    (model, v)
}

#[test]
fn zero_learning_rate_moves_only_the_target() {
    let (mut model, v) = setup(1);
    let before = model.clone();
    mcc_train_step(&mut model, &v, &step_cfg(LossMode::FullMcc), &mut Optimizer::sgd(0.0)).unwrap();
    for (after, start) in model.online.stacks().iter().zip(before.online.stacks()) {
        assert_eq!(after.flat(), start.flat());
    }
    assert_ne!(model.target.f.flat(), before.target.f.flat());
}

#[test]
fn small_sgd_step_lowers_the_objective() {
    for seed in 2..6 {
        let (mut model, v) = setup(seed);
        let cfg = step_cfg(LossMode::FullMcc);
        let before = mcc_train_step(&mut model.clone(), &v, &cfg, &mut Optimizer::sgd(0.0)).unwrap().total();
        let target = model.target.clone();
        mcc_train_step(&mut model, &v, &cfg, &mut Optimizer::sgd(1e-3)).unwrap();
        // judge against the pre-step target so only the online move counts
        model.target = target;
        let batch = four_view_batch(&model, &v).unwrap();
        let after = mcc_losses(&batch, cfg.tau_i, cfg.tau_c, cfg.entropy_weight).unwrap().total();
        assert!(after < before, "seed {seed}: {after} >= {before}");
    }
}

#[test]
fn instance_stage_leaves_cluster_head_alone() {
    let (mut model, v) = setup(7);
    let g_c = model.online.g_c.clone();
    let f = model.online.f.flat();
    mcc_train_step(&mut model, &v, &step_cfg(LossMode::InstanceOnly), &mut Optimizer::adam(1e-2)).unwrap();
    assert_eq!(model.online.g_c, g_c);
    assert_ne!(model.online.f.flat(), f);
}

#[test]
fn cluster_stage_freezes_encoder() {
    let (mut model, v) = setup(8);
    let (f, g_i, g_c) = (model.online.f.clone(), model.online.g_i.clone(), model.online.g_c.flat());
    mcc_train_step(&mut model, &v, &step_cfg(LossMode::ClusterOnly), &mut Optimizer::adam(1e-2)).unwrap();
    assert_eq!(model.online.f, f);
    assert_eq!(model.online.g_i, g_i);
    assert_ne!(model.online.g_c.flat(), g_c);
}

#[test]
fn epoch_uses_whole_data_when_smaller_than_batch() {
    let (mut model, _) = setup(9);
    let mut rng = rng_for(9, 1);
    let data = gaussian_columns(&mut rng, 3, 5);
    let mut seen = Vec::new();
    run_epoch(&data, 64, &AugmentConfig::identity(), &mut rng, |v| {
        seen.push(v.n());
        mcc_train_step(&mut model, v, &step_cfg(LossMode::FullMcc), &mut Optimizer::sgd(0.0))
    })
    .unwrap();
    assert_eq!(seen, vec![5]);
}

#[test]
fn batch_of_one_is_rejected() {
    let (mut model, mut v) = setup(10);
    v.a.truncate(1);
    v.b.truncate(1);
    assert!(mcc_train_step(&mut model, &v, &step_cfg(LossMode::FullMcc), &mut Optimizer::sgd(0.1)).is_err());
}
