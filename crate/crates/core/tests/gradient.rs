use cause_core::data::{Interaction, Origin};
use cause_core::loss::{cause_grad, cause_loss, Sample};
use cause_core::model::{Branch, EmbeddingModel, HyperParams, Layout};
use cause_core::optim::{prox_discrepancy, Momentum};
use cause_core::rng;
use rand::Rng;

const N_USERS: usize = 5;
const N_ITEMS: usize = 7;
const D: usize = 8;

fn random_branch(rng: &mut rng::Rng) -> Branch {
    let mut b = Branch::zeros(N_USERS, N_ITEMS, D);
    for s in b.slices_mut() {
        for w in s.iter_mut() {
            *w = rng.gen_range(-0.8..0.8);
        }
    }
    b.alpha = rng.gen_range(0.5..1.5);
    b
}

/// Random model honoring the ties of `layout`.
fn random_model(layout: Layout, rng: &mut rng::Rng) -> EmbeddingModel {
    let mut m = EmbeddingModel::zeros(N_USERS, N_ITEMS, D);
    m.layout = layout;
    m.control = random_branch(rng);
    m.treatment = random_branch(rng);
    if layout.shared_users {
        m.treatment.gamma = m.control.gamma.clone();
        m.treatment.user_bias = m.control.user_bias.clone();
        m.treatment.global_bias = m.control.global_bias;
    }
    if layout.pooled_items {
        let row = m.treatment.theta[..D].to_vec();
        for r in m.treatment.theta.chunks_exact_mut(D) {
            r.copy_from_slice(&row);
        }
        let b = m.treatment.item_bias[0];
        m.treatment.item_bias.fill(b);
    }
    m
}

fn random_batch(n: usize, origin: Origin, rng: &mut rng::Rng) -> Vec<Sample> {
    (0..n)
        .map(|_| Sample {
            event: Interaction::new(
                rng.gen_range(0..N_USERS as u32),
                rng.gen_range(0..N_ITEMS as u32),
                rng.gen_bool(0.4),
                origin,
            ),
            weight: rng.gen_range(0.2..3.0),
        })
        .collect()
}

/// One free parameter: every stored copy that moves together.
type Coordinate = Vec<(usize, usize, usize)>;

/// Enumerates free parameters as (branch, slice, index) copies. Branch 0 is
/// control, 1 treatment; slice order follows `Branch::slices`.
fn coordinates(layout: Layout) -> Vec<Coordinate> {
    let lens = [N_USERS * D, N_ITEMS * D, N_USERS, N_ITEMS, 1, 1];
    let mut out = Vec::new();
    for (s, &len) in lens.iter().enumerate() {
        for i in 0..len {
            out.push(vec![(0, s, i)]);
        }
    }
    for (s, &len) in lens.iter().enumerate() {
        let user_side = matches!(s, 0 | 2 | 4);
        if layout.shared_users && user_side {
            // the control coordinate already moves both copies
            continue;
        }
        if layout.pooled_items && s == 1 {
            for k in 0..D {
                out.push((0..N_ITEMS).map(|j| (1, 1, j * D + k)).collect());
            }
            continue;
        }
        if layout.pooled_items && s == 3 {
            out.push((0..N_ITEMS).map(|j| (1, 3, j)).collect());
            continue;
        }
        for i in 0..len {
            out.push(vec![(1, s, i)]);
        }
    }
    if layout.shared_users {
        for c in out.iter_mut() {
            let (b, s, i) = c[0];
            if b == 0 && matches!(s, 0 | 2 | 4) {
                c.push((1, s, i));
            }
        }
    }
    out
}

fn param(m: &mut EmbeddingModel, (b, s, i): (usize, usize, usize)) -> &mut f64 {
    let br = if b == 0 { &mut m.control } else { &mut m.treatment };
    &mut br.slices_mut()[s][i]
}

fn grad_at(g: &EmbeddingModel, (b, s, i): (usize, usize, usize)) -> f64 {
    let br = if b == 0 { &g.control } else { &g.treatment };
    br.slices()[s][i]
}

fn hyper() -> HyperParams {
    HyperParams {
        dim: D,
        lambda_c: 0.03,
        lambda_t: 0.05,
        lambda_dist: 0.02,
        train_alpha: true,
        ..HyperParams::default()
    }
}

#[test]
fn gradient_matches_central_differences() {
    let start = std::time::Instant::now();
    let h = 1e-5;
    let layouts = [
        Layout::default(),
        Layout {
            shared_users: true,
            pooled_items: false,
        },
        Layout {
            shared_users: false,
            pooled_items: true,
        },
        Layout {
            shared_users: true,
            pooled_items: true,
        },
    ];
    let mut worst: f64 = 0.0;
    for inst in 0..20 {
        let mut rng = rng::stream(inst, "fd-instance");
        let layout = layouts[inst as usize % layouts.len()];
        let model = random_model(layout, &mut rng);
        let bc = random_batch(12, Origin::Control, &mut rng);
        let bt = random_batch(6, Origin::Treatment, &mut rng);
        let hp = hyper();
        let g = cause_grad(&model, &bc, &bt, &hp);
        for coord in coordinates(layout) {
            let mut plus = model.clone();
            let mut minus = model.clone();
            for &c in &coord {
                *param(&mut plus, c) += h;
                *param(&mut minus, c) -= h;
            }
            let fd = (cause_loss(&plus, &bc, &bt, &hp) - cause_loss(&minus, &bc, &bt, &hp)) / (2.0 * h);
            let an = grad_at(&g, coord[0]);
            for &c in &coord[1..] {
                assert_eq!(grad_at(&g, c), an, "tied copies must share the gradient");
            }
            let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
            assert!(rel < 1e-4, "instance {inst} {coord:?}: analytic {an} vs numeric {fd}");
        }
    }
    println!("max relative error {worst:.3e}");
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

/// Direct transcription of the objective, one term at a time.
fn naive_loss(m: &EmbeddingModel, bc: &[Sample], bt: &[Sample], hp: &HyperParams) -> f64 {
    fn task(m: &EmbeddingModel, b: &Branch, batch: &[Sample]) -> f64 {
        let mut total = 0.0;
        for s in batch {
            let (u, j) = (s.event.user(), s.event.item());
            let mut inner = 0.0;
            for k in 0..m.d {
                inner += b.gamma[u * m.d + k] * b.theta[j * m.d + k];
            }
            let z = b.alpha * inner + b.user_bias[u] + b.item_bias[j] + b.global_bias;
            let p = 1.0 / (1.0 + (-z).exp());
            let y = if s.event.label { 1.0 } else { 0.0 };
            total += s.weight * -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
        }
        total / batch.len() as f64
    }
    fn sq(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum()
    }
    fn abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }
    let (c, t) = (&m.control, &m.treatment);
    let mut total = task(m, c, bc) + hp.lambda_c * 0.5 * (sq(&c.gamma) + sq(&c.theta));
    total += task(m, t, bt) + hp.lambda_t * 0.5 * (sq(&t.gamma) + sq(&t.theta));
    total += hp.lambda_dist
        * (abs_diff(&t.theta, &c.theta)
            + abs_diff(&t.item_bias, &c.item_bias)
            + abs_diff(&t.gamma, &c.gamma)
            + abs_diff(&t.user_bias, &c.user_bias)
            + (t.global_bias - c.global_bias).abs());
    total
}

#[test]
fn loss_matches_naive_summation() {
    for inst in 0..25 {
        let mut rng = rng::stream(inst, "naive-loss");
        let model = random_model(Layout::default(), &mut rng);
        let bc = random_batch(15, Origin::Control, &mut rng);
        let bt = random_batch(4, Origin::Treatment, &mut rng);
        let hp = hyper();
        let a = cause_loss(&model, &bc, &bt, &hp);
        let b = naive_loss(&model, &bc, &bt, &hp);
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn full_batch_descent_decreases_the_loss() {
    let mut rng = rng::stream(7, "descent");
    let mut model = random_model(Layout::default(), &mut rng);
    let bc = random_batch(20, Origin::Control, &mut rng);
    let bt = random_batch(8, Origin::Treatment, &mut rng);
    let hp = HyperParams {
        lambda_dist: 1e-3,
        ..hyper()
    };
    let mut prev = cause_loss(&model, &bc, &bt, &hp);
    for step in 0..50 {
        let g = cause_grad(&model, &bc, &bt, &hp);
        for (w, gw) in model.control.slices_mut().into_iter().zip(g.control.slices()) {
            for (a, b) in w.iter_mut().zip(gw) {
                *a -= 0.01 * b;
            }
        }
        for (w, gw) in model.treatment.slices_mut().into_iter().zip(g.treatment.slices()) {
            for (a, b) in w.iter_mut().zip(gw) {
                *a -= 0.01 * b;
            }
        }
        let next = cause_loss(&model, &bc, &bt, &hp);
        assert!(next < prev, "step {step}: {next} >= {prev}");
        prev = next;
    }
}

#[test]
fn empty_treatment_batch_leaves_treatment_untouched() {
    let mut rng = rng::stream(3, "isolation");
    let mut model = random_model(Layout::default(), &mut rng);
    let before = model.treatment.clone();
    let bc = random_batch(10, Origin::Control, &mut rng);
    let hp = HyperParams {
        lambda_dist: 0.0,
        ..hyper()
    };
    let mut opt = Momentum::new(&model, 0.9);
    for _ in 0..3 {
        let g = cause_grad(&model, &bc, &[], &hp);
        opt.step(&mut model, &g, 0.1);
        prox_discrepancy(&mut model, 0.1 * hp.lambda_dist);
    }
    assert_eq!(model.treatment, before);
}

#[test]
fn tied_layouts_stay_tied_through_updates() {
    let layout = Layout {
        shared_users: true,
        pooled_items: true,
    };
    let mut rng = rng::stream(5, "ties");
    let mut model = random_model(layout, &mut rng);
    let bc = random_batch(10, Origin::Control, &mut rng);
    let bt = random_batch(10, Origin::Treatment, &mut rng);
    let hp = hyper();
    let mut opt = Momentum::new(&model, 0.9);
    for _ in 0..10 {
        let g = cause_grad(&model, &bc, &bt, &hp);
        opt.step(&mut model, &g, 0.05);
        prox_discrepancy(&mut model, 0.05 * hp.lambda_dist);
    }
    assert_eq!(model.control.gamma, model.treatment.gamma);
    assert_eq!(model.control.user_bias, model.treatment.user_bias);
    let row0 = model.treatment.theta[..D].to_vec();
    assert!(model.treatment.theta.chunks_exact(D).all(|r| r == row0.as_slice()));
}
