//! Decomposable BIC-style network score and the greedy parent-set search
//! that turns label dependences into a chain order.
//!
//! For label `j` with parents `Pa(j)` and `Q_j = 2^|Pa(j)|` parent
//! configurations, the local score is
//!
//! ```text
//! S_j = sum_q sum_y N_jq^(y) log2(N_jq^(y) / N_jq) - (Q_j / 2) log2 N
//! ```
//!
//! and a whole graph scores `N + sum_j S_j`. Zero counts contribute nothing
//! to the likelihood but every configuration counts towards `Q_j`.

use serde::{Deserialize, Serialize};

use crate::correlation::{dependence_matrix_with, DependenceMatrix};
use crate::dataset::MultiLabelDataset;
use crate::exec::Execution;
use crate::graph::{
    break_cycles_traced, fully_connected_dcg, topological_sort, Edge, LabelOrder, WeightedDigraph,
};
use crate::{Error, Result};

/// Largest parent set for which a dense count table is built.
pub const MAX_PARENTS: usize = 24;

/// Counts of label `j` split by the configuration of its parents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub label: usize,
    pub parents: Vec<usize>,
    /// Indexed by configuration `q` (bit `i` = value of `parents[i]`):
    /// `[N_jq^(0), N_jq^(1)]`. Unobserved configurations hold zeros.
    pub counts: Vec<[u64; 2]>,
}

impl CountTable {
    pub fn n_configs(&self) -> usize {
        self.counts.len()
    }

    pub fn n_q(&self, q: usize) -> u64 {
        self.counts[q][0] + self.counts[q][1]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| c[0] + c[1]).sum()
    }

    /// `sum_q sum_y N_jq^(y) log2(N_jq^(y) / N_jq)`, always `<= 0`.
    pub fn log_likelihood(&self) -> f64 {
        self.counts
            .iter()
            .map(|&[c0, c1]| {
                let nq = (c0 + c1) as f64;
                [c0, c1]
                    .into_iter()
                    .filter(|&c| c > 0)
                    .map(|c| c as f64 * (c as f64 / nq).log2())
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Label columns of a dataset, laid out for repeated counting.
#[derive(Debug, Clone)]
pub struct LabelColumns {
    columns: Vec<Vec<u8>>,
    n: usize,
}

impl LabelColumns {
    pub fn new(ds: &MultiLabelDataset) -> Self {
        Self {
            columns: ds.label_columns(),
            n: ds.n_instances(),
        }
    }

    pub fn n_instances(&self) -> usize {
        self.n
    }

    pub fn n_labels(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[u8] {
        &self.columns[j]
    }

    pub fn count_configs(&self, j: usize, parents: &[usize]) -> CountTable {
        assert!(!parents.contains(&j), "label {j} cannot be its own parent");
        assert!(parents.len() <= MAX_PARENTS, "too many parents for a dense count table");
        let mut counts = vec![[0u64; 2]; 1 << parents.len()];
        let target = &self.columns[j];
        for (i, &y) in target.iter().enumerate() {
            let q = parents
                .iter()
                .enumerate()
                .fold(0usize, |acc, (b, &p)| acc | ((self.columns[p][i] as usize) << b));
            counts[q][y as usize] += 1;
        }
        CountTable {
            label: j,
            parents: parents.to_vec(),
            counts,
        }
    }

    /// `(Q_j / 2) log2 N`.
    pub fn penalty(&self, n_parents: usize) -> f64 {
        (1u64 << n_parents) as f64 / 2.0 * (self.n as f64).log2()
    }

    pub fn local_score(&self, j: usize, parents: &[usize]) -> f64 {
        self.count_configs(j, parents).log_likelihood() - self.penalty(parents.len())
    }

    pub fn total_score(&self, ps: &ParentSets) -> ScoreBreakdown {
        let mut loglik_term = 0.0;
        let mut penalty = 0.0;
        let mut local_sum = 0.0;
        for (j, pa) in ps.parents.iter().enumerate() {
            let ll = self.count_configs(j, pa).log_likelihood();
            let pen = self.penalty(pa.len());
            loglik_term += ll;
            penalty += pen;
            local_sum += ll - pen;
        }
        let constant = self.n as f64;
        ScoreBreakdown {
            loglik_term,
            penalty,
            constant,
            total: constant + local_sum,
        }
    }
}

pub fn count_configs(ds: &MultiLabelDataset, j: usize, parents: &[usize]) -> CountTable {
    LabelColumns::new(ds).count_configs(j, parents)
}

pub fn local_score(ds: &MultiLabelDataset, j: usize, parents: &[usize]) -> f64 {
    LabelColumns::new(ds).local_score(j, parents)
}

pub fn total_score(ds: &MultiLabelDataset, ps: &ParentSets) -> ScoreBreakdown {
    LabelColumns::new(ds).total_score(ps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub loglik_term: f64,
    pub penalty: f64,
    /// The leading `N`; it never changes which structure wins.
    pub constant: f64,
    pub total: f64,
}

/// Parent list per label plus how many children each label has.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentSets {
    pub parents: Vec<Vec<usize>>,
    pub child_counts: Vec<usize>,
}

impl ParentSets {
    pub fn empty(m: usize) -> Self {
        Self {
            parents: vec![Vec::new(); m],
            child_counts: vec![0; m],
        }
    }

    pub fn from_parents(parents: Vec<Vec<usize>>) -> Result<Self> {
        let m = parents.len();
        let mut child_counts = vec![0; m];
        for (j, pa) in parents.iter().enumerate() {
            for &p in pa {
                if p >= m || p == j {
                    return Err(Error::InvalidGraph(format!("invalid parent {p} for label {j}")));
                }
                child_counts[p] += 1;
            }
        }
        Ok(Self {
            parents,
            child_counts,
        })
    }

    pub fn from_graph(g: &WeightedDigraph) -> Self {
        let mut ps = Self::empty(g.node_count());
        for e in g.edges() {
            ps.parents[e.to].push(e.from);
            ps.child_counts[e.from] += 1;
        }
        ps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// A label that already has this many children is no longer offered as a
    /// parent.
    pub child_threshold: usize,
    /// Maximum parents per label; `None` means `floor(log2 N)`.
    pub parent_cap: Option<usize>,
    /// Start each label's search from the score of the empty parent set
    /// instead of negative infinity, so a parent is only added when it beats
    /// having none.
    pub baseline_empty_set: bool,
    pub execution: Execution,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            child_threshold: 3,
            parent_cap: None,
            baseline_empty_set: false,
            execution: Execution::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.child_threshold == 0 {
            return Err(Error::Config("child_threshold must be at least 1".into()));
        }
        if matches!(self.parent_cap, Some(c) if c > MAX_PARENTS) {
            return Err(Error::Config(format!("parent_cap may not exceed {MAX_PARENTS}")));
        }
        Ok(())
    }

    pub fn resolved_parent_cap(&self, n: usize) -> usize {
        self.parent_cap
            .unwrap_or_else(|| default_parent_cap(n))
            .min(MAX_PARENTS)
    }
}

/// `floor(log2 N)`.
pub fn default_parent_cap(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - 1 - n.leading_zeros()) as usize
    }
}

/// Greedy parent-set search, one label at a time in `initial_order`.
///
/// Returns the merged graph (edge `k -> j` weighted by `dep.get(k, j)`),
/// which may contain cycles, together with the parent sets.
pub fn learn_parent_sets(
    ds: &MultiLabelDataset,
    initial_order: &LabelOrder,
    cfg: &SearchConfig,
    dep: &DependenceMatrix,
) -> Result<(WeightedDigraph, ParentSets)> {
    learn_with_columns(&LabelColumns::new(ds), ds.label_names(), initial_order, cfg, dep)
}

fn learn_with_columns(
    cols: &LabelColumns,
    names: &[String],
    initial_order: &LabelOrder,
    cfg: &SearchConfig,
    dep: &DependenceMatrix,
) -> Result<(WeightedDigraph, ParentSets)> {
    cfg.validate()?;
    let m = cols.n_labels();
    if initial_order.len() != m {
        return Err(Error::InvalidOrder(format!(
            "order has {} labels, dataset has {m}",
            initial_order.len()
        )));
    }
    let cap = cfg.resolved_parent_cap(cols.n_instances());
    let mut ps = ParentSets::empty(m);

    for &j in initial_order.as_slice() {
        let mut candidates: Vec<usize> = (0..m)
            .filter(|&l| l != j && ps.child_counts[l] < cfg.child_threshold)
            .collect();
        let mut parents: Vec<usize> = Vec::new();
        let mut best = if cfg.baseline_empty_set {
            cols.local_score(j, &[])
        } else {
            f64::NEG_INFINITY
        };

        while parents.len() < cap && !candidates.is_empty() {
            let scores = cfg.execution.map(candidates.len(), |c| {
                let mut trial = parents.clone();
                trial.push(candidates[c]);
                cols.local_score(j, &trial)
            });
            // candidates are ascending, so the first maximum is the smallest id
            let (pick, score) = scores
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bs), (i, &s)| {
                    if s > bs {
                        (i, s)
                    } else {
                        (bi, bs)
                    }
                });
            if score > best {
                parents.push(candidates.remove(pick));
                best = score;
            } else {
                break;
            }
        }

        for &p in &parents {
            ps.child_counts[p] += 1;
        }
        ps.parents[j] = parents;
    }

    let mut g = WeightedDigraph::new(names.to_vec());
    for (j, pa) in ps.parents.iter().enumerate() {
        for &k in pa {
            g.add_edge(k, j, dep.get(k, j))?;
        }
    }
    Ok((g, ps))
}

/// Everything the ordering pipeline produced on the way to the final order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderDiagnostics {
    /// Order from the cycle-broken fully connected graph; drives the search.
    pub initial_order: LabelOrder,
    pub initial_dag_edges: Vec<Edge>,
    pub initial_removed: Vec<Edge>,
    pub learned_parents: ParentSets,
    pub learned_edges: Vec<Edge>,
    pub final_removed: Vec<Edge>,
    pub parent_cap: usize,
    pub empty_score: ScoreBreakdown,
    pub learned_score: ScoreBreakdown,
    pub final_score: ScoreBreakdown,
}

#[derive(Debug, Clone)]
pub struct BnOrder {
    pub order: LabelOrder,
    pub final_dag: WeightedDigraph,
    pub dependence: DependenceMatrix,
    pub diagnostics: OrderDiagnostics,
}

/// Full ordering pipeline: dependence matrix, fully connected graph, cycle
/// breaking, initial topological order, greedy parent sets, cycle breaking
/// again, final topological order.
pub fn build_order(ds: &MultiLabelDataset, cfg: &SearchConfig) -> Result<BnOrder> {
    cfg.validate()?;
    let dep = dependence_matrix_with(ds, cfg.execution);
    let dcg = fully_connected_dcg(&dep);
    let (initial_dag, initial_removed) = break_cycles_traced(&dcg);
    let initial_order = topological_sort(&initial_dag)?;

    let cols = LabelColumns::new(ds);
    let (learned, learned_parents) =
        learn_with_columns(&cols, ds.label_names(), &initial_order, cfg, &dep)?;
    let (final_dag, final_removed) = break_cycles_traced(&learned);
    let order = topological_sort(&final_dag)?;

    let diagnostics = OrderDiagnostics {
        initial_order,
        initial_dag_edges: initial_dag.edges().collect(),
        initial_removed,
        learned_edges: learned.edges().collect(),
        final_removed,
        parent_cap: cfg.resolved_parent_cap(ds.n_instances()),
        empty_score: cols.total_score(&ParentSets::empty(ds.n_labels())),
        learned_score: cols.total_score(&learned_parents),
        final_score: cols.total_score(&ParentSets::from_graph(&final_dag)),
        learned_parents,
    };
    Ok(BnOrder {
        order,
        final_dag,
        dependence: dep,
        diagnostics,
    })
}
