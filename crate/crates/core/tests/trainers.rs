mod common;

use cause_core::data::{Interaction, Origin, PropensityTable, SplitBundle};
use cause_core::eval::{auc, nll, predictions};
use cause_core::loss::{objective, smooth_grad_into, PointLoss, Sample};
use cause_core::model::{BranchId, EmbeddingModel, HyperParams, Layout};
use cause_core::rng;
use cause_core::train::{
    banditnet_samples, bpr_triple_loss, capped_weighted_loss, train, train_sp2v, TrainError, TrainSpec,
};
use common::World;
use rand::Rng;

fn toy_bundle(seed: u64) -> SplitBundle {
    World::new(20, 10, seed).bundle(600, 120, 400, seed)
}

fn spec(tag: &str, hyper: HyperParams) -> TrainSpec {
    let mut s = TrainSpec::from_tag(tag).unwrap();
    s.hyper = hyper;
    s
}

fn small_hyper() -> HyperParams {
    HyperParams {
        dim: 4,
        lr0: 0.5,
        lr_end: 0.01,
        epochs: 15,
        batch_size: 32,
        lambda_dist: 1e-3,
        seed: 9,
        ..HyperParams::default()
    }
}

#[test]
fn unit_weights_reduce_wsp2v_to_sp2v() {
    let mut b = toy_bundle(1);
    b.propensity.weight.fill(1.0);
    for adaptation in ["no", "blend"] {
        let a = train(&b, &spec(&format!("SP2V-{adaptation}"), small_hyper())).unwrap();
        let w = train(&b, &spec(&format!("WSP2V-{adaptation}"), small_hyper())).unwrap();
        assert_eq!(a, w);
    }
}

#[test]
fn uncoupled_cause_control_branch_is_sp2v_on_control() {
    let b = toy_bundle(2);
    let hp = HyperParams {
        lambda_dist: 0.0,
        ..small_hyper()
    };
    let sp2v = train(&b, &spec("SP2V-no", hp.clone())).unwrap();
    for tag in ["CausE-prod-C", "CausE-avg"] {
        // separate user vectors: with no discrepancy penalty nothing links the tasks
        let mut s = spec(tag, hp.clone());
        s.share_users = false;
        let cause = train(&b, &s).unwrap();
        assert_eq!(cause.model.control, sp2v.model.control, "{tag}");
    }
}

#[test]
fn shared_users_couple_the_tasks_without_a_penalty() {
    let b = toy_bundle(2);
    let hp = HyperParams {
        lambda_dist: 0.0,
        ..small_hyper()
    };
    let sp2v = train(&b, &spec("SP2V-no", hp.clone())).unwrap();
    let cause = train(&b, &spec("CausE-prod-C", hp)).unwrap();
    assert!(cause.model.layout.shared_users);
    assert_ne!(cause.model.control.gamma, sp2v.model.control.gamma);
}

#[test]
fn banditnet_at_zero_lambda_is_capped_weighted_loss() {
    let b = toy_bundle(3);
    let events: Vec<Interaction> = b.train_control.iter().chain(&b.train_treatment).copied().collect();
    let samples = banditnet_samples(&events, &b.propensity, 100.0);
    let hp = HyperParams {
        lambda_c: 0.0,
        lambda_dist: 0.0,
        ..small_hyper()
    };
    let model = train(&b, &spec("SP2V-no", small_hyper())).unwrap().model;
    for chunk in samples.chunks(50) {
        let a = objective(&model, chunk, &[], &hp, PointLoss::BanditNet { lambda: 0.0 });
        let c = capped_weighted_loss(&model, chunk);
        assert!((a - c).abs() < 1e-12, "{a} vs {c}");
    }
}

#[test]
fn banditnet_ratio_cap() {
    let n = 10;
    let mut control_prob = vec![0.1; n];
    control_prob[0] = 1.0 / (1000.0 * n as f64);
    let table = PropensityTable {
        treatment_prob: vec![0.1; n],
        weight: vec![1.0; n],
        control_prob,
    };
    assert_eq!(table.capped_ratio(0, 100.0), 100.0);
    assert_eq!(table.capped_ratio(1, 100.0), 1.0);
}

#[test]
fn huge_discrepancy_penalty_ties_products() {
    let b = toy_bundle(4);
    let hp = HyperParams {
        lambda_dist: 1e6,
        ..small_hyper()
    };
    let out = train(&b, &spec("CausE-prod-C", hp.clone())).unwrap();
    assert!(out.model.max_item_discrepancy() < 1e-3);
    let (c, t) = (spec("CausE-prod-C", hp.clone()), spec("CausE-prod-T", hp));
    let pc = predictions(&c, &out.model, &b.test);
    let pt = predictions(&t, &out.model, &b.test);
    for (x, y) in pc.iter().zip(&pt) {
        assert!((x - y).abs() < 1e-6);
    }

    let loose = train(&b, &spec("CausE-prod-C", small_hyper())).unwrap();
    let pc = predictions(&c, &loose.model, &b.test);
    let pt = predictions(&spec("CausE-prod-T", small_hyper()), &loose.model, &b.test);
    assert!(pc.iter().zip(&pt).any(|(x, y)| (x - y).abs() > 1e-3));
}

#[test]
fn repeated_positive_is_memorized() {
    let event = Interaction::new(0, 1, true, Origin::Control);
    let b = SplitBundle {
        train_control: vec![event; 50],
        train_treatment: vec![],
        validation: vec![],
        test: vec![],
        propensity: cause_core::split::build_propensity(&[event], 2, 10.0).unwrap(),
        n_users: 1,
        n_items: 2,
    };
    let hp = HyperParams {
        dim: 2,
        epochs: 200,
        batch_size: 10,
        lr0: 0.2,
        ..HyperParams::default()
    };
    let out = train(&b, &spec("SP2V-no", hp)).unwrap();
    assert!(out.model.predict(0, 1, BranchId::Control) >= 0.99);
}

#[test]
fn treatment_sample_is_ignored_without_adaptation() {
    let b = toy_bundle(5);
    let mut empty = b.clone();
    empty.train_treatment.clear();
    let hp = small_hyper();
    for tag in ["SP2V-no", "WSP2V-no", "BPR-no"] {
        assert_eq!(
            train(&b, &spec(tag, hp.clone())).unwrap(),
            train(&empty, &spec(tag, hp.clone())).unwrap(),
            "{tag}"
        );
    }
    assert_eq!(
        train(&empty, &spec("SP2V-no", hp.clone())).unwrap(),
        train(&empty, &spec("SP2V-blend", hp.clone())).unwrap()
    );
    assert_eq!(
        train(&empty, &spec("CausE-prod-C", hp)),
        Err(TrainError::EmptyTreatmentSample)
    );
}

#[test]
fn empty_sets_are_rejected() {
    let mut b = toy_bundle(6);
    b.train_treatment.clear();
    assert_eq!(
        train(&b, &spec("SP2V-test", small_hyper())),
        Err(TrainError::EmptyTrainingSet)
    );
    for e in &mut b.train_control {
        e.label = false;
    }
    assert_eq!(train(&b, &spec("BPR-no", small_hyper())), Err(TrainError::NoPositives));
}

#[test]
fn weighted_event_scales_its_gradient() {
    let model = EmbeddingModel::init(3, 4, 3, Layout::default(), 1);
    let e = Interaction::new(1, 2, true, Origin::Control);
    let hp = HyperParams {
        dim: 3,
        lambda_c: 0.0,
        lambda_t: 0.0,
        lambda_dist: 0.0,
        ..HyperParams::default()
    };
    let mut g1 = model.zeros_like();
    let mut g10 = model.zeros_like();
    smooth_grad_into(
        &model,
        &[Sample { event: e, weight: 1.0 }],
        &[],
        &hp,
        PointLoss::Xent,
        &mut g1,
    );
    smooth_grad_into(
        &model,
        &[Sample { event: e, weight: 10.0 }],
        &[],
        &hp,
        PointLoss::Xent,
        &mut g10,
    );
    for (a, b) in g1.control.slices().iter().zip(g10.control.slices()) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((10.0 * x - y).abs() <= 1e-15 * y.abs().max(1.0));
        }
    }
}

/// Full-batch gradient descent with momentum, written against the plain
/// parameter vectors.
fn full_batch_oracle(b: &SplitBundle, hp: &HyperParams) -> Vec<f64> {
    let init = EmbeddingModel::init(b.n_users, b.n_items, hp.dim, Layout::default(), hp.seed);
    let d = hp.dim;
    let mut gamma = init.control.gamma.clone();
    let mut theta = init.control.theta.clone();
    let mut bu = vec![0.0; b.n_users];
    let mut bi = vec![0.0; b.n_items];
    let mut bg = 0.0;
    let mut v_gamma = vec![0.0; gamma.len()];
    let mut v_theta = vec![0.0; theta.len()];
    let mut v_bu = vec![0.0; bu.len()];
    let mut v_bi = vec![0.0; bi.len()];
    let mut v_bg = 0.0;
    let n = b.train_control.len() as f64;
    let mut losses = Vec::new();
    for epoch in 0..hp.epochs {
        let mut g_gamma: Vec<f64> = gamma.iter().map(|w| hp.lambda_c * w).collect();
        let mut g_theta: Vec<f64> = theta.iter().map(|w| hp.lambda_c * w).collect();
        let mut g_bu = vec![0.0; bu.len()];
        let mut g_bi = vec![0.0; bi.len()];
        let mut g_bg = 0.0;
        let mut loss =
            0.5 * hp.lambda_c * (gamma.iter().map(|w| w * w).sum::<f64>() + theta.iter().map(|w| w * w).sum::<f64>());
        for e in &b.train_control {
            let (u, j) = (e.user(), e.item());
            let z: f64 = (0..d).map(|k| gamma[u * d + k] * theta[j * d + k]).sum::<f64>() + bu[u] + bi[j] + bg;
            let p = 1.0 / (1.0 + (-z).exp());
            let y = e.y();
            loss += -(y * p.ln() + (1.0 - y) * (1.0 - p).ln()) / n;
            let r = (p - y) / n;
            for k in 0..d {
                g_gamma[u * d + k] += r * theta[j * d + k];
                g_theta[j * d + k] += r * gamma[u * d + k];
            }
            g_bu[u] += r;
            g_bi[j] += r;
            g_bg += r;
        }
        losses.push(loss);
        let t = epoch as f64 / hp.epochs as f64;
        let lr = hp.lr0 + (hp.lr_end - hp.lr0) * t;
        let update = |w: &mut [f64], v: &mut [f64], g: &[f64]| {
            for i in 0..w.len() {
                v[i] = hp.momentum * v[i] + g[i];
                w[i] -= lr * v[i];
            }
        };
        update(&mut gamma, &mut v_gamma, &g_gamma);
        update(&mut theta, &mut v_theta, &g_theta);
        update(&mut bu, &mut v_bu, &g_bu);
        update(&mut bi, &mut v_bi, &g_bi);
        update(std::slice::from_mut(&mut bg), std::slice::from_mut(&mut v_bg), &[g_bg]);
    }
    losses
}

#[test]
fn matches_full_batch_descent_oracle() {
    let b = World::new(8, 6, 11).bundle(150, 0, 10, 11);
    let hp = HyperParams {
        dim: 3,
        lr0: 0.5,
        lr_end: 0.05,
        epochs: 40,
        batch_size: 1000,
        lambda_c: 0.01,
        seed: 2,
        ..HyperParams::default()
    };
    let out = train_sp2v(&b, &spec("SP2V-no", hp.clone())).unwrap();
    let oracle = full_batch_oracle(&b, &hp);
    assert_eq!(out.epoch_losses.len(), oracle.len());
    for (a, o) in out.epoch_losses.iter().zip(&oracle) {
        assert!((a - o).abs() < 1e-6, "{a} vs {o}");
    }
    assert!(oracle.last().unwrap() < &oracle[0]);
}

#[test]
fn bpr_equal_items_cost_ln2() {
    let mut m = EmbeddingModel::init(2, 3, 4, Layout::default(), 3);
    let row = m.control.theta[..4].to_vec();
    m.control.theta[4..8].copy_from_slice(&row);
    assert!((bpr_triple_loss(&m, 1, 0, 1) - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn bpr_ranks_the_positive_first() {
    let event = Interaction::new(0, 0, true, Origin::Control);
    let b = SplitBundle {
        train_control: vec![event, Interaction::new(0, 1, false, Origin::Control)],
        train_treatment: vec![],
        validation: vec![],
        test: vec![],
        propensity: cause_core::split::build_propensity(&[event], 2, 10.0).unwrap(),
        n_users: 1,
        n_items: 2,
    };
    let hp = HyperParams {
        dim: 4,
        epochs: 100,
        batch_size: 1,
        lr0: 0.1,
        ..HyperParams::default()
    };
    let m = train(&b, &spec("BPR-no", hp)).unwrap().model;
    assert!(m.predict(0, 0, BranchId::Control) > m.predict(0, 1, BranchId::Control));
}

#[test]
fn bpr_learns_toy_rankings() {
    let world = World::new(20, 10, 12);
    let b = world.bundle(1500, 0, 10, 12);
    let hp = HyperParams {
        dim: 8,
        epochs: 60,
        batch_size: 16,
        lr0: 0.1,
        lr_end: 0.001,
        lambda_c: 1e-4,
        seed: 4,
        ..HyperParams::default()
    };
    let m = train(&b, &spec("BPR-no", hp)).unwrap().model;
    // training triples: every logged positive against a random non-positive
    let mut pos_sets = vec![std::collections::BTreeSet::new(); b.n_users];
    for e in b.train_control.iter().filter(|e| e.label) {
        pos_sets[e.user()].insert(e.item());
    }
    let mut rng = rng::stream(0, "bpr-eval");
    let (mut wins, mut total) = (0.0, 0.0);
    for e in b.train_control.iter().filter(|e| e.label) {
        let u = e.user();
        if pos_sets[u].len() == b.n_items {
            continue;
        }
        let neg = loop {
            let j = rng.gen_range(0..b.n_items);
            if !pos_sets[u].contains(&j) {
                break j;
            }
        };
        let (sp, sn) = (m.dot(BranchId::Control, u, e.item()), m.dot(BranchId::Control, u, neg));
        wins += if sp > sn {
            1.0
        } else if sp == sn {
            0.5
        } else {
            0.0
        };
        total += 1.0;
    }
    let train_auc = wins / total;
    assert!(train_auc >= 0.95, "training triple AUC {train_auc}");
}

#[test]
fn every_trainer_converges_and_stays_finite() {
    let b = toy_bundle(7);
    for tag in [
        "SP2V-no",
        "SP2V-blend",
        "SP2V-test",
        "WSP2V-no",
        "WSP2V-blend",
        "BPR-no",
        "BPR-blend",
        "BN-blend",
        "CausE-avg",
        "CausE-prod-C",
        "CausE-prod-T",
    ] {
        let out = train(&b, &spec(tag, small_hyper())).unwrap();
        assert!(out.model.is_finite(), "{tag}");
        assert_eq!(out.epoch_losses.len(), 15);
        assert!(out.epoch_losses.iter().all(|l| l.is_finite()), "{tag}");
        assert!(
            out.epoch_losses.last() < out.epoch_losses.first(),
            "{tag}: {:?}",
            out.epoch_losses
        );
    }
}

#[test]
fn training_is_deterministic() {
    let b = toy_bundle(8);
    for tag in ["SP2V-blend", "BPR-no", "CausE-prod-C"] {
        let a = train(&b, &spec(tag, small_hyper())).unwrap();
        assert_eq!(a, train(&b, &spec(tag, small_hyper())).unwrap());
        let mut other = small_hyper();
        other.seed += 1;
        assert_ne!(a, train(&b, &spec(tag, other)).unwrap());
    }
}

#[test]
fn propensity_weighting_helps_on_skewed_synthetic_data() {
    let hp = HyperParams {
        dim: 1,
        lr0: 0.5,
        lr_end: 0.001,
        epochs: 20,
        batch_size: 64,
        lambda_c: 1e-3,
        ..HyperParams::default()
    };
    let (mut plain, mut weighted) = (0.0, 0.0);
    for seed in 0..3 {
        let b = World::two_groups(40, 30, 5, 100 + seed).bundle(4000, 0, 3000, 100 + seed);
        let labels: Vec<bool> = b.test.iter().map(|e| e.label).collect();
        let mut h = hp.clone();
        h.seed = seed;
        for (tag, acc) in [("SP2V-no", &mut plain), ("WSP2V-no", &mut weighted)] {
            let s = spec(tag, h.clone());
            let m = train(&b, &s).unwrap().model;
            *acc += nll(&predictions(&s, &m, &b.test), &labels).unwrap() / 3.0;
        }
    }
    println!("test NLL: WSP2V {weighted:.4}, SP2V {plain:.4}");
    assert!(weighted < plain, "WSP2V {weighted} vs SP2V {plain}");
}

#[test]
fn toy_models_beat_chance() {
    let b = toy_bundle(9);
    let labels: Vec<bool> = b.test.iter().map(|e| e.label).collect();
    for tag in ["SP2V-blend", "CausE-prod-C"] {
        let s = spec(tag, small_hyper());
        let m = train(&b, &s).unwrap().model;
        let a = auc(&predictions(&s, &m, &b.test), &labels).unwrap();
        assert!(a > 0.6, "{tag}: {a}");
    }
}
