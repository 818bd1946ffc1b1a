//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use npc_core::bound::{ModelTables, WorldTables};
use npc_core::circuit::{Circuit, Node, NodeId};

/// Every complete assignment over `cards`, built recursively.
pub fn product_space(cards: &[usize]) -> Vec<Vec<usize>> {
    match cards.split_first() {
        None => vec![vec![]],
        Some((&q, rest)) => {
            let tails = product_space(rest);
            let mut out = Vec::new();
            for v in 0..q {
                for t in &tails {
                    let mut a = vec![v];
                    a.extend_from_slice(t);
                    out.push(a);
                }
            }
            out
        }
    }
}

/// Linear-space recursive evaluation; `None` entries are marginalized
/// (indicator = 1).
pub fn eval_oracle(c: &Circuit, assignment: &[Option<usize>]) -> f64 {
    fn go(c: &Circuit, id: NodeId, a: &[Option<usize>], memo: &mut HashMap<usize, f64>) -> f64 {
        if let Some(v) = memo.get(&id.0) {
            return *v;
        }
        let v = match c.node(id) {
            Node::Leaf { var, value } => match a[var.0] {
                Some(x) => f64::from(u8::from(x == *value)),
                None => 1.0,
            },
            Node::Product { children } => children.iter().map(|ch| go(c, *ch, a, memo)).product(),
            Node::Sum { children, weights } => children
                .iter()
                .zip(weights)
                .map(|(ch, w)| w * go(c, *ch, a, memo))
                .sum(),
        };
        memo.insert(id.0, v);
        v
    }
    go(c, c.root(), assignment, &mut HashMap::new())
}

pub fn joint_oracle(c: &Circuit, full: &[usize]) -> f64 {
    let a: Vec<Option<usize>> = full.iter().map(|&v| Some(v)).collect();
    eval_oracle(c, &a)
}

/// Marginal by summing complete joints over every completion.
pub fn marginal_by_enumeration(c: &Circuit, partial: &[Option<usize>]) -> f64 {
    let cards: Vec<usize> = (0..partial.len())
        .map(|v| c.schema().cardinality(npc_core::VariableId(v)))
        .collect();
    product_space(&cards)
        .iter()
        .filter(|a| {
            a.iter()
                .zip(partial)
                .all(|(x, p)| p.is_none_or(|p| p == *x))
        })
        .map(|a| joint_oracle(c, a))
        .sum()
}

/// Full joint table `Pr_w(A, Y)` as `[a][y]` in lexicographic order of `a`.
pub fn joint_table(c: &Circuit) -> Vec<Vec<f64>> {
    let s = c.schema();
    product_space(&s.attribute_cardinalities())
        .into_iter()
        .map(|a| {
            (0..s.num_classes())
                .map(|y| {
                    let mut full = a.clone();
                    full.push(y);
                    joint_oracle(c, &full)
                })
                .collect()
        })
        .collect()
}

/// Class scores by contracting the materialized joint table with the
/// attribute probabilities; zero-marginal assignments are skipped.
pub fn scores_by_contraction(c: &Circuit, probs: &[Vec<f64>]) -> Vec<f64> {
    let s = c.schema();
    let table = joint_table(c);
    let mut out = vec![0.0; s.num_classes()];
    for (a, row) in product_space(&s.attribute_cardinalities())
        .iter()
        .zip(&table)
    {
        let m: f64 = row.iter().sum();
        if m == 0.0 {
            continue;
        }
        let w: f64 = a.iter().enumerate().map(|(k, &v)| probs[k][v]).product();
        for (o, j) in out.iter_mut().zip(row) {
            *o += j / m * w;
        }
    }
    out
}

/// Central finite difference of `f` at `x` along every coordinate.
pub fn central_diff(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| <= rel · max(|a|, |b|) + abs`.
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

/// Exact Euclidean projection onto the simplex by trying every support set
/// and keeping the feasible candidate closest to `v`.
pub fn simplex_by_support_enumeration(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let shift = (1.0 - idx.iter().map(|&i| v[i]).sum::<f64>()) / idx.len() as f64;
        let mut b = vec![0.0; n];
        let mut feasible = true;
        for &i in &idx {
            b[i] = v[i] + shift;
            if b[i] < -1e-15 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let d: f64 = b.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, b));
        }
    }
    best.unwrap().1
}

/// Brute-force minimization of `‖b − v‖²` over a grid on the simplex,
/// refined around the incumbent down to `final_step`. Lengths 2 to 4; the
/// last coordinate is fixed by the sum constraint.
pub fn simplex_by_grid(v: &[f64], final_step: f64) -> Vec<f64> {
    let n = v.len();
    assert!((2..=4).contains(&n), "grid oracle supports lengths 2 to 4");
    let dist = |b: &[f64]| b.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut center = vec![1.0 / n as f64; n];
    let mut radius: f64 = 1.0;
    let mut step: f64 = 0.05;
    loop {
        let steps = (2.0 * radius / step).round() as usize;
        let mut best = (dist(&center), center.clone());
        let mut idx = vec![0usize; n - 1];
        let mut b = vec![0.0; n];
        'grid: loop {
            let mut rest = 1.0;
            for (i, &k) in idx.iter().enumerate() {
                b[i] = center[i] - radius + k as f64 * step;
                rest -= b[i];
            }
            b[n - 1] = rest;
            if b.iter().all(|t| (0.0..=1.0).contains(t)) {
                let d = dist(&b);
                if d < best.0 {
                    best = (d, b.clone());
                }
            }
            let mut p = 0;
            loop {
                if p == n - 1 {
                    break 'grid;
                }
                idx[p] += 1;
                if idx[p] <= steps {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
        center = best.1;
        if step <= final_step {
            return center;
        }
        radius = 5.0 * step;
        step /= 10.0;
    }
}

/// Error terms recomputed directly from the definitions, looping in a
/// different order from the library: returns
/// `(eps_overall, eps_theta, eps_theta_k, eps_w)`.
pub fn bound_terms_direct(world: &WorldTables, model: &ModelTables) -> (f64, f64, Vec<f64>, f64) {
    let s = &world.schema;
    let cards = s.attribute_cardinalities();
    let space = product_space(&cards);
    let classes = s.num_classes();
    let prod = |tables: &[Vec<f64>], a: &[usize]| -> f64 {
        a.iter().enumerate().map(|(k, &v)| tables[k][v]).product()
    };
    let mut overall = 0.0;
    let mut theta = 0.0;
    let mut theta_k = vec![0.0; cards.len()];
    for x in 0..world.prior.len() {
        let px = world.prior[x];
        let mut l1 = 0.0;
        for y in 0..classes {
            let mut learned = 0.0;
            let mut truth = 0.0;
            for (i, a) in space.iter().enumerate() {
                learned += model.class_given_attributes[i][y] * prod(&model.attributes[x], a);
                truth += world.class_given_attributes[i][y] * prod(&world.attributes[x], a);
            }
            l1 += (learned - truth).abs();
        }
        overall += px * 0.5 * l1;
        let l1: f64 = space
            .iter()
            .map(|a| (prod(&model.attributes[x], a) - prod(&world.attributes[x], a)).abs())
            .sum();
        theta += px * 0.5 * l1;
        for k in 0..cards.len() {
            let l1: f64 = (0..cards[k])
                .map(|j| (model.attributes[x][k][j] - world.attributes[x][k][j]).abs())
                .sum();
            theta_k[k] += px * 0.5 * l1;
        }
    }
    let mut w = 0.0;
    for (i, a) in space.iter().enumerate() {
        let pa: f64 = (0..world.prior.len())
            .map(|x| world.prior[x] * prod(&world.attributes[x], a))
            .sum();
        for y in 0..classes {
            w += (model.joint[i][y] - pa * world.class_given_attributes[i][y]).abs();
        }
    }
    (overall, theta, theta_k, 0.5 * w)
}
