use std::rc::Rc;

use beamadapt::datasets::SamplePair;
use beamadapt::nn::{
    adam_step, batch_loss, forward, loss_and_grads, mse_loss, sgd_step, AdamState, Checkpoint, Graph, InputTransform,
    Mode, Model, NetworkConfig, NodeId, ParameterSet, RunningStats, Standardization, Tensor, PAD,
};
use beamadapt::numerics::{ComplexMatrix, RandomStream};
use beamadapt::{ChannelInstance, Error};

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn random_tensor(r: usize, c: usize, rng: &mut RandomStream) -> Tensor {
    Tensor::from_vec(r, c, (0..r * c).map(|_| rng.normal()).collect()).unwrap()
}

fn pairs(m: usize, k: usize, n: usize, seed: u64) -> Vec<SamplePair> {
    let mut rng = RandomStream::new(seed, 0);
    (0..n)
        .map(|id| {
            let h = ComplexMatrix::from_fn(k, m, |_, _| rng.complex_normal());
            let raw: Vec<f64> = (0..k).map(|_| 0.1 + rng.uniform()).collect();
            let s: f64 = raw.iter().sum();
            SamplePair {
                id,
                instance: ChannelInstance::new(h, vec![1.0; k], 1.0).unwrap(),
                label: raw.iter().map(|x| x / s).collect(),
            }
        })
        .collect()
}

fn tiny_model(m: usize, k: usize, kernel: usize, seed: u64) -> Model {
    let mut cfg = NetworkConfig::new(m, k);
    cfg.kernel = kernel;
    cfg.input_transform = InputTransform::Linear;
    let mut model = Model::new(cfg, Standardization::identity(), &mut RandomStream::new(seed, 0));
    // Non-trivial BN affine parameters and running stats so every path is exercised.
    let mut rng = RandomStream::new(seed, 1);
    for (name, t) in model.params.clone().iter() {
        if name.starts_with("bn") || name.ends_with("bias") {
            let i = model.params.index_of(name).unwrap();
            let base = if name.ends_with("gamma") { 1.0 } else { 0.0 };
            for x in model.params.tensors_mut()[i].data_mut() {
                *x = base + 0.3 * rng.normal();
            }
            let _ = t;
        }
    }
    for layer in 0..2 {
        for x in &mut model.running.mean[layer] {
            *x = 0.2 * rng.normal();
        }
        for x in &mut model.running.var[layer] {
            *x = 0.5 + rng.uniform();
        }
    }
    model
}

fn loss_value(model: &Model, params: &ParameterSet, batch: &[SamplePair], mode: Mode) -> f64 {
    let mut g = Graph::new();
    let leaves = Model::leaves(&mut g, params, |_| false);
    let (loss, _) = batch_loss(&mut g, model, &leaves, batch, mode).unwrap();
    g.value(loss).item()
}

/// Checks a scalar function of several tensors against central differences,
/// for both the gradient and (via `create_graph`) the gradient of ‖∇f‖².
fn check_op(inputs: Vec<Tensor>, f: impl Fn(&mut Graph, &[NodeId]) -> NodeId) {
    let eval = |xs: &[Tensor]| -> f64 {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = xs.iter().map(|t| g.param(t.clone())).collect();
        let out = f(&mut g, &ids);
        g.value(out).item()
    };
    let grad_norm = |xs: &[Tensor]| -> (f64, Vec<Tensor>) {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = xs.iter().map(|t| g.param(t.clone())).collect();
        let out = f(&mut g, &ids);
        let gr = g.grad(out, &ids, true).unwrap();
        let mut acc = None;
        for id in &gr {
            let sq = g.square(*id).unwrap();
            let s = g.sum(sq).unwrap();
            acc = Some(match acc {
                None => s,
                Some(a) => g.add(a, s).unwrap(),
            });
        }
        let acc = acc.unwrap();
        let gg = g.grad(acc, &ids, false).unwrap();
        (g.value(acc).item(), gg.iter().map(|i| g.value(*i).clone()).collect())
    };

    let mut g = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = f(&mut g, &ids);
    let grads: Vec<Tensor> = g.grad(out, &ids, false).unwrap().iter().map(|i| g.value(*i).clone()).collect();
    let (_, second) = grad_norm(&inputs);

    let h = 1e-5;
    for (a, t) in inputs.iter().enumerate() {
        for j in 0..t.len() {
            let shifted = |d: f64| {
                let mut xs = inputs.clone();
                xs[a].data_mut()[j] += d;
                xs
            };
            let fd = (eval(&shifted(h)) - eval(&shifted(-h))) / (2.0 * h);
            let an = grads[a].data()[j];
            assert!(rel_err(an, fd, 1e-6) < 1e-6, "first order input {a}[{j}]: {an} vs {fd}");
            let h2 = 1e-4;
            let fd2 = (grad_norm(&shifted(h2)).0 - grad_norm(&shifted(-h2)).0) / (2.0 * h2);
            let an2 = second[a].data()[j];
            assert!(rel_err(an2, fd2, 1e-3) < 1e-5, "second order input {a}[{j}]: {an2} vs {fd2}");
        }
    }
}

#[test]
fn quadratic_gradient() {
    let mut g = Graph::new();
    let theta = g.param(Tensor::from_vec(1, 2, vec![1.0, 2.0]).unwrap());
    let sq = g.square(theta).unwrap();
    let loss = g.sum(sq).unwrap();
    let gr = g.grad(loss, &[theta], false).unwrap();
    assert_eq!(g.value(gr[0]).data(), &[2.0, 4.0]);
}

#[test]
fn constant_loss_has_zero_gradient() {
    let mut g = Graph::new();
    let theta = g.param(Tensor::from_vec(1, 2, vec![1.0, 2.0]).unwrap());
    let c = g.constant(Tensor::scalar(3.0));
    let gr = g.grad(c, &[theta], false).unwrap();
    assert_eq!(g.value(gr[0]).data(), &[0.0, 0.0]);
}

#[test]
fn foreign_node_is_not_recorded() {
    let mut g = Graph::new();
    let x = g.param(Tensor::scalar(1.0));
    let mut other = Graph::new();
    for _ in 0..5 {
        other.constant(Tensor::scalar(0.0));
    }
    let foreign = other.constant(Tensor::scalar(0.0));
    assert!(matches!(g.grad(foreign, &[x], false), Err(Error::GraphNotRecorded(5))));
    assert!(matches!(g.grad(x, &[foreign], false), Err(Error::GraphNotRecorded(5))));
}

#[test]
fn gradients_without_create_graph_are_constants() {
    let mut g = Graph::new();
    let x = g.param(Tensor::scalar(3.0));
    let y = g.powf(x, 3.0).unwrap();
    let gx = g.grad(y, &[x], false).unwrap()[0];
    assert!(!g.requires_grad(gx));
    let gx2 = g.grad(y, &[x], true).unwrap()[0];
    assert!(g.requires_grad(gx2));
    let ggx = g.grad(gx2, &[x], false).unwrap()[0];
    assert!((g.value(ggx).item() - 18.0).abs() < 1e-12);
}

#[test]
fn op_gradients_first_and_second_order() {
    let mut rng = RandomStream::new(3, 0);
    for (ta, tb) in [(false, false), (false, true), (true, false), (true, true)] {
        let a = if ta { random_tensor(3, 2, &mut rng) } else { random_tensor(2, 3, &mut rng) };
        let b = if tb { random_tensor(4, 3, &mut rng) } else { random_tensor(3, 4, &mut rng) };
        check_op(vec![a, b], |g, x| {
            let c = g.matmul(x[0], x[1], ta, tb).unwrap();
            let s = g.sigmoid(c).unwrap();
            g.sum(s).unwrap()
        });
    }
    let a = random_tensor(2, 3, &mut rng);
    let b = random_tensor(2, 3, &mut rng);
    check_op(vec![a.clone(), b.clone()], |g, x| {
        let s = g.add(x[0], x[1]).unwrap();
        let d = g.sub(s, x[1]).unwrap();
        let m = g.mul(d, x[1]).unwrap();
        let m = g.mul(m, x[0]).unwrap();
        let m = g.scale(m, 0.7).unwrap();
        let m = g.add_scalar(m, 0.2).unwrap();
        let p = g.square(m).unwrap();
        g.sum(p).unwrap()
    });
    let pos = a.map(|v| 0.5 + v.abs());
    check_op(vec![pos], |g, x| {
        let p = g.powf(x[0], -0.5).unwrap();
        let q = g.powf(p, 3.0).unwrap();
        g.sum(q).unwrap()
    });
    check_op(vec![random_tensor(3, 1, &mut rng), random_tensor(1, 4, &mut rng)], |g, x| {
        let c = g.broadcast_cols(x[0], 4).unwrap();
        let r = g.broadcast_rows(x[1], 3).unwrap();
        let m = g.mul(c, r).unwrap();
        let m = g.mul(m, m).unwrap();
        let sc = g.sum_cols(m).unwrap();
        let sr = g.sum_rows(m).unwrap();
        let a = g.sum(sc).unwrap();
        let sr2 = g.square(sr).unwrap();
        let b = g.sum(sr2).unwrap();
        g.add(a, b).unwrap()
    });
    let idx: Rc<[u32]> = vec![3, PAD, 0, 3, 5, 1, PAD, 2].into();
    check_op(vec![random_tensor(2, 3, &mut rng)], move |g, x| {
        let ga = g.gather(x[0], idx.clone(), 2, 4).unwrap();
        let sq = g.square(ga).unwrap();
        let sc = g.scatter_add(sq, idx.clone(), 2, 3).unwrap();
        let r = g.reshape(sc, 3, 2).unwrap();
        let r = g.mul(r, r).unwrap();
        g.sum(r).unwrap()
    });
    // Away from the kink ReLU is piecewise linear; the second-order term is still exercised through x².
    let away = random_tensor(2, 3, &mut rng).map(|v| if v.abs() < 0.1 { v + 0.3 } else { v });
    check_op(vec![away], |g, x| {
        let r = g.relu(x[0]).unwrap();
        let q = g.mul(r, x[0]).unwrap();
        let q = g.mul(q, x[0]).unwrap();
        g.sum(q).unwrap()
    });
}

#[test]
fn shape_errors() {
    let mut g = Graph::new();
    let a = g.param(Tensor::zeros(2, 3));
    let b = g.param(Tensor::zeros(2, 2));
    assert!(matches!(g.add(a, b), Err(Error::ShapeMismatch(_))));
    assert!(matches!(g.matmul(a, b, false, false), Err(Error::ShapeMismatch(_))));
    assert!(matches!(g.grad(a, &[a], false), Err(Error::ShapeMismatch(_))));
}

#[test]
fn network_gradients_match_finite_differences() {
    let batch = pairs(2, 2, 4, 10);
    let model = tiny_model(2, 2, 3, 11);
    for mode in [Mode::Train, Mode::Eval] {
        let (_, grads, _) = loss_and_grads(&model, &model.params, &batch, mode, |_| true).unwrap();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for (i, t) in model.params.tensors().iter().enumerate() {
            for j in 0..t.len() {
                let mut plus = model.params.clone();
                plus.tensors_mut()[i].data_mut()[j] += h;
                let mut minus = model.params.clone();
                minus.tensors_mut()[i].data_mut()[j] -= h;
                let fd = (loss_value(&model, &plus, &batch, mode) - loss_value(&model, &minus, &batch, mode)) / (2.0 * h);
                let an = grads.tensors()[i].data()[j];
                let e = rel_err(an, fd, 1e-6);
                worst = worst.max(e);
                assert!(e <= 1e-4, "{mode:?} {}[{j}]: analytic {an} fd {fd}", model.params.names()[i]);
            }
        }
        assert!(worst <= 1e-4);
    }
}

/// Query loss after one inner gradient step on the support batch.
fn bilevel(model: &Model, params: &ParameterSet, support: &[SamplePair], query: &[SamplePair], beta: f64) -> f64 {
    let (_, g, _) = loss_and_grads(model, params, support, Mode::Train, |_| true).unwrap();
    let phi = sgd_step(params, &g, beta).unwrap();
    loss_value(model, &phi, query, Mode::Train)
}

fn meta_gradient(model: &Model, support: &[SamplePair], query: &[SamplePair], beta: f64, second_order: bool) -> Vec<Tensor> {
    let mut g = Graph::new();
    let theta = Model::leaves(&mut g, &model.params, |_| true);
    let (ls, _) = batch_loss(&mut g, model, &theta, support, Mode::Train).unwrap();
    let gs = g.grad(ls, &theta, second_order).unwrap();
    let phi: Vec<NodeId> = theta
        .iter()
        .zip(&gs)
        .map(|(t, gi)| {
            let step = g.scale(*gi, -beta).unwrap();
            g.add(*t, step).unwrap()
        })
        .collect();
    let (lq, _) = batch_loss(&mut g, model, &phi, query, Mode::Train).unwrap();
    g.grad(lq, &theta, false).unwrap().iter().map(|i| g.value(*i).clone()).collect()
}

#[test]
fn second_order_meta_gradient_matches_finite_differences() {
    let model = tiny_model(2, 2, 1, 21);
    let support = pairs(2, 2, 3, 22);
    let query = pairs(2, 2, 3, 23);
    let beta = 0.5;
    let meta = meta_gradient(&model, &support, &query, beta, true);
    let first = meta_gradient(&model, &support, &query, beta, false);
    let h = 1e-5;
    let mut differs = 0.0f64;
    for (i, t) in model.params.tensors().iter().enumerate() {
        for j in 0..t.len() {
            let mut plus = model.params.clone();
            plus.tensors_mut()[i].data_mut()[j] += h;
            let mut minus = model.params.clone();
            minus.tensors_mut()[i].data_mut()[j] -= h;
            let fd = (bilevel(&model, &plus, &support, &query, beta) - bilevel(&model, &minus, &support, &query, beta))
                / (2.0 * h);
            let an = meta[i].data()[j];
            assert!(rel_err(an, fd, 1e-6) <= 1e-3, "{}[{j}]: {an} vs {fd}", model.params.names()[i]);
            differs = differs.max((an - first[i].data()[j]).abs());
        }
    }
    // The Hessian-vector term is not negligible, so the first-order variant differs.
    assert!(differs > 1e-4);
}

#[test]
fn first_order_meta_is_query_gradient_at_adapted_point() {
    let model = tiny_model(2, 2, 1, 31);
    let support = pairs(2, 2, 3, 32);
    let query = pairs(2, 2, 3, 33);
    let first = meta_gradient(&model, &support, &query, 0.5, false);
    let (_, gs, _) = loss_and_grads(&model, &model.params, &support, Mode::Train, |_| true).unwrap();
    let phi = sgd_step(&model.params, &gs, 0.5).unwrap();
    let (_, gq, _) = loss_and_grads(&model, &phi, &query, Mode::Train, |_| true).unwrap();
    for (a, b) in first.iter().zip(gq.tensors()) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}

#[test]
fn parameter_count_is_fixed() {
    assert_eq!(NetworkConfig::new(4, 4).param_count(), 1284);
    let model = Model::new(NetworkConfig::new(4, 4), Standardization::identity(), &mut RandomStream::new(0, 0));
    assert_eq!(model.params.scalar_count(), 1284);
    assert_eq!(NetworkConfig::new(8, 8).param_count(), 152 + 16 + 584 + 16 + 8 * 512 + 8);
}

#[test]
fn zero_network_outputs_one_half() {
    let cfg = NetworkConfig::new(4, 4);
    let mut model = Model::new(cfg.clone(), Standardization::identity(), &mut RandomStream::new(0, 0));
    for (i, name) in model.params.names().to_vec().iter().enumerate() {
        let fill = if name.ends_with("gamma") { 1.0 } else { 0.0 };
        for x in model.params.tensors_mut()[i].data_mut() {
            *x = fill;
        }
    }
    let inst = ChannelInstance::new(ComplexMatrix::zeros(4, 4), vec![1.0; 4], 1.0).unwrap();
    for mode in [Mode::Train, Mode::Eval] {
        let mut g = Graph::new();
        let input = g.constant(model.encode(&[&inst]).unwrap());
        let leaves = Model::leaves(&mut g, &model.params, |_| false);
        let out = forward(&mut g, &cfg, &leaves, &model.running, input, mode).unwrap();
        assert!(g.value(out.output).data().iter().all(|x| *x == 0.5));
    }
}

#[test]
fn outputs_in_open_unit_interval_and_eval_is_deterministic() {
    let model = Model::new(NetworkConfig::new(4, 4), Standardization::identity(), &mut RandomStream::new(4, 0));
    let batch = pairs(4, 4, 6, 5);
    let refs: Vec<_> = batch.iter().map(|p| &p.instance).collect();
    let a = model.predict(&refs).unwrap();
    let b = model.predict(&refs).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().flatten().all(|x| *x > 0.0 && *x < 1.0));
    // Eval mode does not depend on batch composition.
    let single = model.predict(&refs[2..3]).unwrap();
    assert_eq!(single[0], a[2]);
    let q = model.predict_power(&batch[0].instance).unwrap();
    assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-15);
}

#[test]
fn relative_log_encoding_ignores_channel_scale() {
    let inst = pairs(3, 2, 1, 50).remove(0).instance;
    let mut scaled = inst.clone();
    for z in scaled.h.as_mut_slice() {
        *z *= 1e6;
    }
    let a: Vec<_> = InputTransform::RelativeLog.encode(&inst).collect();
    let b: Vec<_> = InputTransform::RelativeLog.encode(&scaled).collect();
    for ((ar, ai), (br, bi)) in a.iter().zip(&b) {
        assert!((ar - br).abs() < 1e-12 && (ai - bi).abs() < 1e-12);
    }
    let c: Vec<_> = InputTransform::LogMagnitude.encode(&scaled).collect();
    assert!(a.iter().zip(&c).any(|(x, y)| (x.0 - y.0).abs() > 1.0));
    // Phase is kept: each encoded entry points the same way as the raw one.
    for ((re, im), z) in a.iter().zip(inst.h.as_slice()) {
        assert!((re * z.im - im * z.re).abs() < 1e-12 && re * z.re + im * z.im >= 0.0);
    }
}

#[test]
fn direct_prediction_matches_graph_forward() {
    for (m, k, kernel) in [(3, 2, 3), (4, 4, 3), (2, 3, 1)] {
        let model = tiny_model(m, k, kernel, 40 + m as u64);
        let batch = pairs(m, k, 5, 41);
        let refs: Vec<_> = batch.iter().map(|p| &p.instance).collect();
        let direct = model.predict(&refs).unwrap();
        let mut g = Graph::new();
        let input = g.constant(model.encode(&refs).unwrap());
        let params = Model::leaves(&mut g, &model.params, |_| false);
        let out = forward(&mut g, &model.config, &params, &model.running, input, Mode::Eval).unwrap();
        for (a, b) in direct.iter().flatten().zip(g.value(out.output).data()) {
            assert!((a - b).abs() <= 1e-14, "{m}x{k}: {a} vs {b}");
        }
    }
}

#[test]
fn forward_rejects_wrong_instance_shape() {
    let model = Model::new(NetworkConfig::new(4, 4), Standardization::identity(), &mut RandomStream::new(4, 0));
    let batch = pairs(3, 4, 1, 5);
    assert!(matches!(model.predict(&[&batch[0].instance]), Err(Error::ShapeMismatch(_))));
}

#[test]
fn mse_examples() {
    let mut g = Graph::new();
    let p = g.constant(Tensor::from_vec(1, 4, vec![0.5, 0.0, 0.0, 0.0]).unwrap());
    let l = g.constant(Tensor::zeros(1, 4));
    let loss = mse_loss(&mut g, p, l).unwrap();
    assert_eq!(g.value(loss).item(), 0.25);
    let same = mse_loss(&mut g, p, p).unwrap();
    assert_eq!(g.value(same).item(), 0.0);

    let mut rng = RandomStream::new(6, 0);
    let a = random_tensor(5, 3, &mut rng);
    let b = random_tensor(5, 3, &mut rng);
    let (pa, pb) = (g.constant(a.clone()), g.constant(b.clone()));
    let loss = mse_loss(&mut g, pa, pb).unwrap();
    let mut oracle = 0.0;
    for i in 0..5 {
        let mut row = 0.0;
        for j in 0..3 {
            row += (a.get(i, j) - b.get(i, j)).powi(2);
        }
        oracle += row;
    }
    assert!((g.value(loss).item() - oracle / 5.0).abs() < 1e-14);
    let wrong = g.constant(Tensor::zeros(5, 2));
    assert!(matches!(mse_loss(&mut g, pa, wrong), Err(Error::ShapeMismatch(_))));
}

fn single(v: f64) -> ParameterSet {
    ParameterSet::new(vec!["w".into()], vec![Tensor::scalar(v)]).unwrap()
}

#[test]
fn sgd_examples() {
    assert_eq!(sgd_step(&single(1.0), &single(2.0), 0.0).unwrap(), single(1.0));
    assert!((sgd_step(&single(1.0), &single(2.0), 0.01).unwrap().tensors()[0].item() - 0.98).abs() < 1e-15);
    let mut rng = RandomStream::new(7, 0);
    let p = ParameterSet::new(vec!["a".into(), "b".into()], vec![random_tensor(2, 3, &mut rng), random_tensor(1, 4, &mut rng)])
        .unwrap();
    let g = ParameterSet::new(vec!["a".into(), "b".into()], vec![random_tensor(2, 3, &mut rng), random_tensor(1, 4, &mut rng)])
        .unwrap();
    let out = sgd_step(&p, &g, 0.3).unwrap();
    for t in 0..2 {
        for j in 0..p.tensors()[t].len() {
            let expect = p.tensors()[t].data()[j] - 0.3 * g.tensors()[t].data()[j];
            assert_eq!(out.tensors()[t].data()[j], expect);
        }
    }
    assert!(matches!(sgd_step(&p, &single(1.0), 0.1), Err(Error::ShapeMismatch(_))));
}

#[test]
fn adam_examples() {
    for scale in [1e-3, 1.0, 1e3] {
        let mut st = AdamState::new(&single(0.0));
        let out = adam_step(&mut st, &single(0.0), &single(scale), 0.01).unwrap();
        // |Δ| = lr·|g|/(|g| + ε), independent of the gradient scale up to ε.
        let x = out.tensors()[0].item();
        assert!((x + 0.01 * scale / (scale + 1e-8)).abs() < 1e-15, "{scale}");
        assert!((x + 0.01).abs() < 1e-4 * 0.01);
    }
    let mut st = AdamState::new(&single(1.5));
    let mut p = single(1.5);
    for _ in 0..10 {
        p = adam_step(&mut st, &p, &single(0.0), 0.1).unwrap();
    }
    assert_eq!(p, single(1.5));

    // f(x) = (x − 3)²
    let mut st = AdamState::new(&single(0.0));
    let mut p = single(0.0);
    let mut losses = Vec::new();
    for _ in 0..100 {
        let x = p.tensors()[0].item();
        losses.push((x - 3.0).powi(2));
        p = adam_step(&mut st, &p, &single(2.0 * (x - 3.0)), 0.05).unwrap();
    }
    assert!(losses[5..].windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn checkpoint_round_trip_and_errors() {
    let mut model = Model::new(NetworkConfig::new(4, 4), Standardization::identity(), &mut RandomStream::new(9, 0));
    model.running = RunningStats { mean: vec![vec![0.1; 8], vec![-0.2; 8]], var: vec![vec![1.5; 8], vec![0.7; 8]] };
    model.standardization = Standardization { mean_re: 0.1, std_re: 2.0, mean_im: -0.1, std_im: 3.0 };
    let ck = Checkpoint { model, p_dbm: 25.0, scenario: "large-scale".into(), settings: serde_json::Value::Null };
    let bytes = ck.to_bytes().unwrap();
    assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);
    let header_len = bytes.iter().position(|b| *b == b'\n').unwrap() + 1;
    assert_eq!(bytes.len() - header_len, (1284 + 32) * 8);

    assert!(matches!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]), Err(Error::CorruptPayload(_))));
    let text = String::from_utf8_lossy(&bytes[..header_len]).replacen("\"version\":1", "\"version\":7", 1);
    let mut bumped = text.into_bytes();
    bumped.extend_from_slice(&bytes[header_len..]);
    assert!(matches!(Checkpoint::from_bytes(&bumped), Err(Error::VersionMismatch { found: 7, expected: 1 })));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    ck.write(&path).unwrap();
    let header = Checkpoint::inspect(&path).unwrap();
    assert_eq!((header.config.m, header.config.k, header.p_dbm, header.scenario.as_str()), (4, 4, 25.0, "large-scale"));
    assert_eq!(Checkpoint::read(&path).unwrap(), ck);
}
