#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use grpsparse::grouping::{group_regularizer, regularizer_subgradient, GroupPartition, SparsityMask};
use grpsparse::loss::{loss_and_grad, loss_value, LossSpec};
use grpsparse::nn::{DenseLayer, FirstLayerRows};
use grpsparse::{Activation, Matrix, Network};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Network with the given dims, random weights and (beyond the first layer)
/// random biases.
pub fn random_network(rng: &mut impl Rng, dims: &[usize], hidden: Activation) -> Network {
    let n = dims.len() - 1;
    let layers = (0..n)
        .map(|j| {
            let w = random_matrix(rng, dims[j], dims[j + 1], 1.0);
            let b = (j > 0).then(|| (0..dims[j + 1]).map(|_| rng.gen_range(-0.5..0.5)).collect());
            let act = if j + 1 == n { Activation::Identity } else { hidden };
            DenseLayer::new(w, b, act).unwrap()
        })
        .collect();
    Network::new(layers).unwrap()
}

/// Random contiguous partition of `p` columns.
pub fn random_partition(rng: &mut impl Rng, p: usize) -> GroupPartition {
    let mut sizes = Vec::new();
    let mut left = p;
    while left > 0 {
        let s = rng.gen_range(1..=left.min(3));
        sizes.push(s);
        left -= s;
    }
    GroupPartition::contiguous(&sizes).unwrap()
}

pub fn random_labels(rng: &mut impl Rng, n: usize, classes: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..classes)).collect()
}

fn objective(
    net: &Network,
    x: &Matrix,
    y: &[usize],
    loss: &LossSpec,
    reg: Option<(&GroupPartition, usize, f64)>,
) -> f64 {
    let mut v = loss_value(loss, &net.predict(x).unwrap(), y).unwrap();
    if let Some((part, i, lambda)) = reg {
        v += lambda * group_regularizer(net, part, i).unwrap();
    }
    v
}

/// Largest violation of `|analytic − numeric| ≤ max(abs, rel·max(|a|,|n|))`
/// over all parameters, as `(param description, analytic, numeric)`; `None`
/// when every entry passes. The objective is `φ` plus, when given,
/// `λ τ_i` for one group.
#[allow(clippy::too_many_arguments)]
pub fn gradient_mismatch(
    net: &Network,
    x: &Matrix,
    y: &[usize],
    loss: &LossSpec,
    reg: Option<(&GroupPartition, usize, f64)>,
    step: f64,
    rel: f64,
    abs: f64,
) -> Option<(String, f64, f64)> {
    let pass = net.forward(x).unwrap();
    let (_, out_grad) = loss_and_grad(loss, pass.output(), y).unwrap();
    let mut grads = net.backward(&pass, &out_grad, FirstLayerRows::All).unwrap();
    if let Some((part, i, lambda)) = reg {
        let mask = SparsityMask::new(part.k());
        let sub = regularizer_subgradient(net, part, &mask, i).unwrap();
        let gw = grads.weights_mut(0);
        for (k, &r) in part.group(i).iter().enumerate() {
            for c in 0..sub.cols() {
                let v = gw.get(r, c) + lambda * sub.get(k, c);
                gw.set(r, c, v);
            }
        }
    }
    let ok = |a: f64, n: f64| (a - n).abs() <= abs.max(rel * a.abs().max(n.abs()));
    let mut probe = net.clone();
    for j in 0..net.layers().len() {
        for k in 0..net.layers()[j].weights().as_slice().len() {
            let orig = probe.layer_mut(j).weights().as_slice()[k];
            probe.layer_mut(j).weights_mut().as_mut_slice()[k] = orig + step;
            let up = objective(&probe, x, y, loss, reg);
            probe.layer_mut(j).weights_mut().as_mut_slice()[k] = orig - step;
            let down = objective(&probe, x, y, loss, reg);
            probe.layer_mut(j).weights_mut().as_mut_slice()[k] = orig;
            let numeric = (up - down) / (2.0 * step);
            let analytic = grads.weights(j).as_slice()[k];
            if !ok(analytic, numeric) {
                return Some((format!("layer {j} weight {k}"), analytic, numeric));
            }
        }
        let nb = net.layers()[j].bias().map_or(0, <[f64]>::len);
        for k in 0..nb {
            let orig = probe.layer_mut(j).bias().unwrap()[k];
            probe.layer_mut(j).bias_mut().unwrap()[k] = orig + step;
            let up = objective(&probe, x, y, loss, reg);
            probe.layer_mut(j).bias_mut().unwrap()[k] = orig - step;
            let down = objective(&probe, x, y, loss, reg);
            probe.layer_mut(j).bias_mut().unwrap()[k] = orig;
            let numeric = (up - down) / (2.0 * step);
            let analytic = grads.bias(j).unwrap()[k];
            if !ok(analytic, numeric) {
                return Some((format!("layer {j} bias {k}"), analytic, numeric));
            }
        }
    }
    None
}

/// Smallest |pre-activation| over hidden ReLU layers; finite differences are
/// only meaningful away from the kink.
pub fn min_abs_hidden_pre(net: &Network, x: &Matrix) -> f64 {
    let pass = net.forward(x).unwrap();
    let last = net.layers().len() - 1;
    pass.pre_activations()[..last]
        .iter()
        .flat_map(|m| m.as_slice().iter().map(|v| v.abs()))
        .fold(f64::INFINITY, f64::min)
}

pub fn brute_auc(scores: &[f64], labels: &[usize]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                num += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / pairs
}

/// Pearson correlation of `[s ≥ t]` with the labels, maximised over every
/// candidate threshold (each observed score, plus one above all of them).
/// Constant predictions have no correlation and count as 0.
pub fn brute_max_cc(scores: &[f64], labels: &[usize]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.push(f64::INFINITY);
    let n = scores.len() as f64;
    let yv: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let mean_y = yv.iter().sum::<f64>() / n;
    let mut best: f64 = 0.0;
    for t in thresholds {
        let pv: Vec<f64> = scores.iter().map(|&s| f64::from(u8::from(s >= t))).collect();
        let mean_p = pv.iter().sum::<f64>() / n;
        let cov: f64 = pv.iter().zip(&yv).map(|(p, y)| (p - mean_p) * (y - mean_y)).sum();
        let vp: f64 = pv.iter().map(|p| (p - mean_p).powi(2)).sum();
        let vy: f64 = yv.iter().map(|y| (y - mean_y).powi(2)).sum();
        if vp > 0.0 && vy > 0.0 {
            best = best.max(cov / (vp * vy).sqrt());
        }
    }
    best
}

pub fn brute_argmax_accuracy(scores: &Matrix, labels: &[usize]) -> f64 {
    let hits = (0..scores.rows())
        .filter(|&r| {
            let row = scores.row(r);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.iter().position(|&v| v == m).unwrap() == labels[r]
        })
        .count();
    hits as f64 / labels.len() as f64
}

pub fn brute_jaccard(sets: &[BTreeSet<usize>]) -> f64 {
    let mut vals = Vec::new();
    for i in 0..sets.len() {
        for j in 0..sets.len() {
            if i < j {
                let universe: BTreeSet<usize> = sets[i].union(&sets[j]).copied().collect();
                let both = universe
                    .iter()
                    .filter(|v| sets[i].contains(v) && sets[j].contains(v))
                    .count();
                vals.push(if universe.is_empty() {
                    1.0
                } else {
                    both as f64 / universe.len() as f64
                });
            }
        }
    }
    vals.iter().sum::<f64>() / vals.len() as f64
}

pub struct Case {
    pub net: Network,
    pub x: Matrix,
    pub y: Vec<usize>,
    pub loss: LossSpec,
    pub part: GroupPartition,
    pub group: usize,
    pub lambda: f64,
}

/// Small random problem: at most 3 layers, at most 50 parameters, at most 8
/// samples, ReLU pre-activations kept away from the kink.
pub fn small_case(seed: u64) -> Case {
    let mut r = rng(seed);
    let dims = loop {
        let layers = r.gen_range(1..=3);
        let mut dims = vec![r.gen_range(1..=4)];
        for _ in 1..layers {
            dims.push(r.gen_range(1..=5));
        }
        dims.push(r.gen_range(2..=3));
        let params: usize = (0..layers)
            .map(|j| dims[j] * dims[j + 1] + if j > 0 { dims[j + 1] } else { 0 })
            .sum();
        if params <= 50 {
            break dims;
        }
    };
    let hidden = [Activation::Relu, Activation::Sigmoid, Activation::Identity][r.gen_range(0..3)];
    let net = random_network(&mut r, &dims, hidden);
    let n = r.gen_range(1..=8);
    let mut x = random_matrix(&mut r, n, dims[0], 1.0);
    for _ in 0..100 {
        if hidden != Activation::Relu || min_abs_hidden_pre(&net, &x) > 1e-3 {
            break;
        }
        x = random_matrix(&mut r, n, dims[0], 1.0);
    }
    let classes = *dims.last().unwrap();
    let y = random_labels(&mut r, n, classes);
    let loss = match r.gen_range(0..3) {
        0 => LossSpec::cross_entropy(),
        1 => LossSpec::weighted_cross_entropy((0..classes).map(|_| r.gen_range(0.5..2.0)).collect()).unwrap(),
        _ => LossSpec::squared_error(),
    };
    let part = random_partition(&mut r, dims[0]);
    let group = r.gen_range(0..part.k());
    let lambda = r.gen_range(0.01..1.0);
    Case {
        net,
        x,
        y,
        loss,
        part,
        group,
        lambda,
    }
}

/// Directory holding `train-images-idx3-ubyte` and friends: `GRPSPARSE_MNIST_DIR`
/// if set, else `data/mnist` at the workspace root.
pub fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("GRPSPARSE_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    dir.join("train-images-idx3-ubyte").is_file().then_some(dir)
}
