use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, CircuitBuilder, NodeId};
use crate::data::SampledDataset;
use crate::math::{chi_square_sf, ln};
use crate::schema::VariableId;
use crate::{Error, Result};

/// Hard-EM iterations per clustering attempt.
const CLUSTER_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LearnSpnConfig {
    /// G-test p-value below which two variables are treated as dependent.
    pub independence_threshold: f64,
    /// Fewer rows than this are modelled as fully factorized.
    pub min_rows_to_split: usize,
    pub cluster_count: usize,
    pub max_depth: usize,
    pub rng_seed: u64,
    /// Laplace smoothing for leaf categorical distributions.
    pub laplace_alpha: f64,
}

impl Default for LearnSpnConfig {
    fn default() -> Self {
        Self {
            independence_threshold: 0.001,
            min_rows_to_split: 50,
            cluster_count: 2,
            max_depth: 20,
            rng_seed: 0,
            laplace_alpha: 0.1,
        }
    }
}

impl LearnSpnConfig {
    fn check(&self) -> Result<()> {
        let ok = self.independence_threshold >= 0.0
            && self.min_rows_to_split >= 1
            && self.cluster_count >= 2
            && self.max_depth >= 1
            && self.laplace_alpha > 0.0
            && self.laplace_alpha.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!("{self:?}")))
        }
    }
}

/// Learns a smooth, decomposable, locally normalized circuit over all schema
/// variables from hard-valued rows.
///
/// Recursion over (variables, rows): a single variable becomes a smoothed
/// categorical; too few rows or maximum depth give a fully factorized
/// product; otherwise variables are split into connected components of the
/// pairwise G-test dependency graph (product node) or, failing that, rows are
/// clustered by hard EM (sum node weighted by cluster proportions).
/// Deterministic given `config.rng_seed`.
pub fn learn_structure(dataset: &SampledDataset, config: &LearnSpnConfig) -> Result<Circuit> {
    config.check()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut learner = Learner::new(dataset, config);
    let vars: Vec<usize> = (0..dataset.schema.num_variables()).collect();
    let rows: Vec<usize> = (0..dataset.len()).collect();
    let root = learner.learn(&vars, &rows, 0);
    learner.builder.build(root)
}

/// The all-independent baseline: a product of smoothed per-variable
/// categoricals.
pub fn factorized_circuit(dataset: &SampledDataset, laplace_alpha: f64) -> Result<Circuit> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let config = LearnSpnConfig {
        laplace_alpha,
        ..LearnSpnConfig::default()
    };
    config.check()?;
    let mut learner = Learner::new(dataset, &config);
    let vars: Vec<usize> = (0..dataset.schema.num_variables()).collect();
    let rows: Vec<usize> = (0..dataset.len()).collect();
    let root = learner.factorized(&vars, &rows);
    learner.builder.build(root)
}

/// G statistic and p-value for independence of two columns over `rows`.
/// Degrees of freedom count only categories observed in `rows`.
pub fn g_test(columns: (&[usize], &[usize]), cards: (usize, usize), rows: &[usize]) -> (f64, f64) {
    let (x, y) = columns;
    let (qx, qy) = cards;
    let mut table = vec![0usize; qx * qy];
    let mut rx = vec![0usize; qx];
    let mut ry = vec![0usize; qy];
    for &r in rows {
        table[x[r] * qy + y[r]] += 1;
        rx[x[r]] += 1;
        ry[y[r]] += 1;
    }
    let n = rows.len() as f64;
    let mut g = 0.0;
    for i in 0..qx {
        for j in 0..qy {
            let o = table[i * qy + j];
            if o > 0 {
                let e = rx[i] as f64 * ry[j] as f64 / n;
                g += o as f64 * ln(o as f64 / e);
            }
        }
    }
    g *= 2.0;
    let nx = rx.iter().filter(|&&c| c > 0).count();
    let ny = ry.iter().filter(|&&c| c > 0).count();
    let dof = (nx.saturating_sub(1) * ny.saturating_sub(1)) as f64;
    if dof == 0.0 {
        return (g.max(0.0), 1.0);
    }
    (g.max(0.0), chi_square_sf(g.max(0.0), dof))
}

struct Learner<'a> {
    config: &'a LearnSpnConfig,
    /// Column-major copy of the data: `columns[v][row]`.
    columns: Vec<Vec<usize>>,
    cards: Vec<usize>,
    builder: CircuitBuilder,
    rng: ChaCha8Rng,
}

impl<'a> Learner<'a> {
    fn new(dataset: &SampledDataset, config: &'a LearnSpnConfig) -> Self {
        let schema = &dataset.schema;
        let nv = schema.num_variables();
        let mut columns = vec![Vec::with_capacity(dataset.len()); nv];
        for row in &dataset.rows {
            for (k, &a) in row.attributes.iter().enumerate() {
                columns[k].push(a);
            }
            columns[nv - 1].push(row.class);
        }
        let cards = (0..nv).map(|v| schema.cardinality(VariableId(v))).collect();
        Self {
            config,
            columns,
            cards,
            builder: CircuitBuilder::new(schema.clone()),
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
        }
    }

    fn learn(&mut self, vars: &[usize], rows: &[usize], depth: usize) -> NodeId {
        if vars.len() == 1 {
            return self.leaf_distribution(vars[0], rows);
        }
        if rows.len() < self.config.min_rows_to_split || depth >= self.config.max_depth {
            return self.factorized(vars, rows);
        }
        let components = self.independent_components(vars, rows);
        if components.len() > 1 {
            let children = components
                .iter()
                .map(|c| self.learn(c, rows, depth + 1))
                .collect();
            return self.builder.product(children);
        }
        match self.cluster(vars, rows) {
            Some(clusters) => {
                let n = rows.len() as f64;
                let weights = clusters.iter().map(|c| c.len() as f64 / n).collect();
                let children = clusters
                    .iter()
                    .map(|c| self.learn(vars, c, depth + 1))
                    .collect();
                self.builder.sum(children, weights)
            }
            None => self.factorized(vars, rows),
        }
    }

    fn leaf_distribution(&mut self, var: usize, rows: &[usize]) -> NodeId {
        let q = self.cards[var];
        let alpha = self.config.laplace_alpha;
        let mut counts = vec![0usize; q];
        for &r in rows {
            counts[self.columns[var][r]] += 1;
        }
        let denom = rows.len() as f64 + alpha * q as f64;
        let weights = counts.iter().map(|&c| (c as f64 + alpha) / denom).collect();
        self.builder.categorical(VariableId(var), weights)
    }

    fn factorized(&mut self, vars: &[usize], rows: &[usize]) -> NodeId {
        let children: Vec<NodeId> = vars
            .iter()
            .map(|&v| self.leaf_distribution(v, rows))
            .collect();
        if children.len() == 1 {
            children[0]
        } else {
            self.builder.product(children)
        }
    }

    /// Connected components of the pairwise dependency graph, each sorted,
    /// ordered by smallest member.
    fn independent_components(&self, vars: &[usize], rows: &[usize]) -> Vec<Vec<usize>> {
        let m = vars.len();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for i in 0..m {
            for j in i + 1..m {
                let (a, b) = (vars[i], vars[j]);
                let (_, p) = g_test(
                    (&self.columns[a], &self.columns[b]),
                    (self.cards[a], self.cards[b]),
                    rows,
                );
                if p < self.config.independence_threshold {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; m];
        for i in 0..m {
            let r = find(&mut parent, i);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(vars[i]);
        }
        groups
    }

    /// Hard EM over a mixture of product-of-categoricals. Returns the
    /// non-empty clusters (row lists, original order) or `None` when fewer
    /// than two survive.
    fn cluster(&mut self, vars: &[usize], rows: &[usize]) -> Option<Vec<Vec<usize>>> {
        let k = self.config.cluster_count.min(rows.len());
        if k < 2 {
            return None;
        }
        let alpha = self.config.laplace_alpha;
        let mut assign: Vec<usize> = rows.iter().map(|_| self.rng.random_range(0..k)).collect();
        let mut log_params: Vec<Vec<Vec<f64>>> = Vec::new();
        for _ in 0..CLUSTER_ITERATIONS {
            // M-step
            let mut sizes = vec![0usize; k];
            for &c in &assign {
                sizes[c] += 1;
            }
            log_params.clear();
            for c in 0..k {
                let per_var = vars
                    .iter()
                    .map(|&v| {
                        let q = self.cards[v];
                        let mut counts = vec![0usize; q];
                        for (i, &r) in rows.iter().enumerate() {
                            if assign[i] == c {
                                counts[self.columns[v][r]] += 1;
                            }
                        }
                        let denom = sizes[c] as f64 + alpha * q as f64;
                        counts
                            .iter()
                            .map(|&n| ln((n as f64 + alpha) / denom))
                            .collect()
                    })
                    .collect();
                log_params.push(per_var);
            }
            let log_prior: Vec<f64> = sizes.iter().map(|&s| ln(s as f64)).collect();
            // E-step
            let mut changed = false;
            for (i, &r) in rows.iter().enumerate() {
                let mut best = (f64::NEG_INFINITY, 0);
                for c in 0..k {
                    if sizes[c] == 0 {
                        continue;
                    }
                    let mut score = log_prior[c];
                    for (j, &v) in vars.iter().enumerate() {
                        score += log_params[c][j][self.columns[v][r]];
                    }
                    if score > best.0 {
                        best = (score, c);
                    }
                }
                if assign[i] != best.1 {
                    assign[i] = best.1;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut clusters = vec![Vec::new(); k];
        for (i, &r) in rows.iter().enumerate() {
            clusters[assign[i]].push(r);
        }
        clusters.retain(|c| !c.is_empty());
        (clusters.len() >= 2).then_some(clusters)
    }
}
