//! Oracles shared by the integration suites. Nothing here calls into the
//! code path it checks.

#![allow(dead_code)]

use meshfl::nn::Mlp;
use meshfl::topology::{Position, Topology};
use ndarray::Array2;

/// Mean cross-entropy computed from the raw layers, plus the on/off pattern
/// of every hidden ReLU.
pub fn reference_loss(model: &Mlp<f64>, x: &Array2<f64>, labels: &[usize]) -> (f64, Vec<bool>) {
    let layers = model.layers();
    let mut pattern = Vec::new();
    let mut total = 0.0;
    for (row, &y) in x.rows().into_iter().zip(labels) {
        let mut a: Vec<f64> = row.to_vec();
        for (l, layer) in layers.iter().enumerate() {
            let mut z: Vec<f64> = layer.biases.to_vec();
            for (i, &ai) in a.iter().enumerate() {
                for (j, zj) in z.iter_mut().enumerate() {
                    *zj += ai * layer.weights[[i, j]];
                }
            }
            if l + 1 < layers.len() {
                pattern.extend(z.iter().map(|&v| v > 0.0));
                a = z.into_iter().map(|v| v.max(0.0)).collect();
            } else {
                let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                total += lse - z[y];
            }
        }
    }
    (total / labels.len() as f64, pattern)
}

pub const GRADIENT_FLOOR: f64 = 1e-7;

pub struct GradientCheck {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Parameters whose perturbation flipped a ReLU, where the loss is not
    /// differentiable at the scale of `h`.
    pub skipped: usize,
}

/// Compares analytic gradients against central differences of
/// [`reference_loss`] for every parameter.
pub fn check_gradients(model: &Mlp<f64>, x: &Array2<f64>, labels: &[usize], h: f64) -> GradientCheck {
    let (_, analytic) = model.loss_and_gradient(x.view(), labels, None).unwrap();
    let analytic: Vec<f64> = analytic.params().copied().collect();
    let (_, base_pattern) = reference_loss(model, x, labels);
    let mut probe = model.clone();
    let mut out = GradientCheck {
        max_relative_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for (k, &a) in analytic.iter().enumerate() {
        let original = *probe.params().nth(k).unwrap();
        *probe.params_mut().nth(k).unwrap() = original + h;
        let (plus, p1) = reference_loss(&probe, x, labels);
        *probe.params_mut().nth(k).unwrap() = original - h;
        let (minus, p2) = reference_loss(&probe, x, labels);
        *probe.params_mut().nth(k).unwrap() = original;
        if p1 != base_pattern || p2 != base_pattern {
            out.skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * h);
        out.checked += 1;
        // Below 1e-7 the difference quotient's roundoff (about loss * 1e-16 / h)
        // is itself near the tolerance, so tiny gradients are compared on that scale.
        let scale = a.abs().max(numeric.abs()).max(GRADIENT_FLOOR);
        out.max_relative_error = out.max_relative_error.max((a - numeric).abs() / scale);
    }
    out
}

/// All-pairs distance predicate, written out independently of the crate.
pub fn brute_force_adjacency(positions: &[Position], range: f64) -> Vec<Vec<usize>> {
    let n = positions.len();
    (0..n)
        .map(|a| {
            (0..n)
                .filter(|&b| {
                    let dx = positions[a][0] - positions[b][0];
                    let dy = positions[a][1] - positions[b][1];
                    a != b && (dx * dx + dy * dy).sqrt() <= range * (1.0 + 1e-9)
                })
                .collect()
        })
        .collect()
}

/// Connectivity by union-find over the edge list.
pub fn connected_by_union_find(t: &Topology) -> bool {
    let n = t.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for (a, b) in t.edges() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let roots: std::collections::HashSet<usize> = (0..n).map(|x| find(&mut parent, x)).collect();
    roots.len() <= 1
}

/// Convergence by the literal rule: smallest t with best(t+j) - best(t) < eps
/// for every j in 1..=m. Rounds are 1-based.
pub fn convergence_by_definition(avgs: &[f64], eps: f64, m: usize) -> Option<usize> {
    let best: Vec<f64> = avgs
        .iter()
        .scan(f64::NEG_INFINITY, |b, &a| {
            *b = b.max(a);
            Some(*b)
        })
        .collect();
    (0..best.len()).find_map(|t| {
        if t + m >= best.len() {
            return None;
        }
        (1..=m).all(|j| best[t + j] - best[t] < eps).then_some(t + 1)
    })
}

/// |observed - n p| <= 3 sqrt(n p (1 - p))
pub fn within_three_sigma(observed: f64, trials: f64, p: f64) -> bool {
    let sigma = (trials * p * (1.0 - p)).sqrt();
    (observed - trials * p).abs() <= 3.0 * sigma
}
