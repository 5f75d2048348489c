//! Regression trees grown by variance reduction over quantile-binned features.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use soa_core::dataset::{FeatureVector, FEATURES};

/// Quantile cut points per feature and the bin code of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedData {
    /// `edges[f]` ascending; code `c` means `edges[f][c-1] < x <= edges[f][c]`.
    pub edges: Vec<Vec<f64>>,
    /// Column-major codes, `codes[f][row]`.
    pub codes: Vec<Vec<u8>>,
    pub rows: usize,
}

fn cut_points(column: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut unique = sorted.clone();
    unique.dedup();
    let mut edges: Vec<f64> = if unique.len() <= max_bins {
        unique
    } else {
        let n = sorted.len();
        let mut e: Vec<f64> = (1..max_bins).map(|q| sorted[q * n / max_bins]).collect();
        e.dedup();
        e
    };
    // a cut at the maximum separates nothing
    if edges.last() == sorted.last() {
        edges.pop();
    }
    edges
}

fn code(edges: &[f64], v: f64) -> u8 {
    edges.partition_point(|&e| e < v) as u8
}

impl BinnedData {
    pub fn new(x: &[FeatureVector], max_bins: usize) -> Self {
        let max_bins = max_bins.clamp(2, 256);
        let (edges, codes) = (0..FEATURES)
            .into_par_iter()
            .map(|f| {
                let column: Vec<f64> = x.iter().map(|r| r[f]).collect();
                let edges = cut_points(&column, max_bins);
                let codes = column.iter().map(|&v| code(&edges, v)).collect();
                (edges, codes)
            })
            .unzip();
        BinnedData { edges, codes, rows: x.len() }
    }

    fn bins(&self, f: usize) -> usize {
        self.edges[f].len() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &FeatureVector) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right } as usize;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left as usize).max(walk(nodes, right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    bin: usize,
}

/// Rows above this size scan features in parallel.
const PARALLEL_ROWS: usize = 8192;

fn best_split(data: &BinnedData, y: &[f64], rows: &[u32], min_leaf: usize, total: f64) -> Option<Candidate> {
    let n = rows.len() as f64;
    let scan = |f: usize| -> Option<Candidate> {
        let bins = data.bins(f);
        if bins < 2 {
            return None;
        }
        let mut sum = [0.0f64; 256];
        let mut cnt = [0usize; 256];
        let codes = &data.codes[f];
        for &r in rows {
            let c = codes[r as usize] as usize;
            sum[c] += y[r as usize];
            cnt[c] += 1;
        }
        let base = total * total / n;
        let (mut sl, mut nl) = (0.0, 0usize);
        let mut best: Option<Candidate> = None;
        for b in 0..bins - 1 {
            sl += sum[b];
            nl += cnt[b];
            let nr = rows.len() - nl;
            if nl < min_leaf || cnt[b] == 0 {
                continue;
            }
            if nr < min_leaf {
                break;
            }
            let sr = total - sl;
            let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - base;
            if best.is_none_or(|c| gain > c.gain) {
                best = Some(Candidate { gain, feature: f, bin: b });
            }
        }
        best
    };
    let per_feature: Vec<Option<Candidate>> = if rows.len() >= PARALLEL_ROWS {
        (0..FEATURES).into_par_iter().map(scan).collect()
    } else {
        (0..FEATURES).map(scan).collect()
    };
    // ties go to the lowest feature index regardless of scheduling
    per_feature.into_iter().flatten().fold(None, |acc: Option<Candidate>, c| match acc {
        Some(a) if a.gain >= c.gain => Some(a),
        _ => Some(c),
    })
}

struct Builder<'a> {
    data: &'a BinnedData,
    y: &'a [f64],
    params: TreeParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, rows: &mut [u32], depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let total: f64 = rows.iter().map(|&r| self.y[r as usize]).sum();
        let mean = total / rows.len() as f64;
        self.nodes.push(Node::Leaf { value: mean });
        let first = self.y[rows[0] as usize];
        let constant = rows.iter().all(|&r| self.y[r as usize] == first);
        if constant || depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf {
            return id;
        }
        let Some(c) = best_split(self.data, self.y, rows, self.params.min_leaf, total) else {
            return id;
        };
        if !(c.gain > 0.0) {
            return id;
        }
        let codes = &self.data.codes[c.feature];
        let mut split = 0;
        for i in 0..rows.len() {
            if codes[rows[i] as usize] as usize <= c.bin {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (lo, hi) = rows.split_at_mut(split);
        let left = self.grow(lo, depth + 1);
        let right = self.grow(hi, depth + 1);
        self.nodes[id as usize] =
            Node::Split { feature: c.feature, threshold: self.data.edges[c.feature][c.bin], left, right };
        id
    }
}

/// Grow a tree on `rows` of `data` against targets `y` (indexed by row).
pub fn fit_tree(data: &BinnedData, y: &[f64], rows: &[u32], params: TreeParams) -> Tree {
    assert!(!rows.is_empty(), "a tree needs at least one row");
    let params = TreeParams { max_depth: params.max_depth, min_leaf: params.min_leaf.max(1) };
    let mut rows = rows.to_vec();
    let mut b = Builder { data, y, params, nodes: Vec::new() };
    b.grow(&mut rows, 0);
    Tree { nodes: b.nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(a: f64, b: f64) -> FeatureVector {
        [1.0, a, b, 0.02, 0.2, -1.0, -1.0, -1.0, -1.0, -1.0]
    }

    fn all_rows(n: usize) -> Vec<u32> {
        (0..n as u32).collect()
    }

    #[test]
    fn constant_targets_give_one_leaf() {
        let x: Vec<_> = (0..50).map(|i| row(i as f64, 0.0)).collect();
        let data = BinnedData::new(&x, 256);
        let t = fit_tree(&data, &[0.25; 50], &all_rows(50), TreeParams { max_depth: 10, min_leaf: 1 });
        assert_eq!(t.nodes, vec![Node::Leaf { value: 0.25 }]);
    }

    #[test]
    fn single_split_is_exact() {
        let x = vec![row(0.0, 0.0), row(1.0, 0.0)];
        let data = BinnedData::new(&x, 256);
        let t = fit_tree(&data, &[0.0, 1.0], &all_rows(2), TreeParams { max_depth: 5, min_leaf: 1 });
        assert_eq!(t.depth(), 1);
        assert_eq!((t.predict(&x[0]), t.predict(&x[1])), (0.0, 1.0));
    }

    #[test]
    fn distinct_rows_are_memorized() {
        let x: Vec<_> = (0..200).map(|i| row((i * 37 % 200) as f64, (i % 7) as f64)).collect();
        let y: Vec<f64> = (0..200).map(|i| ((i * 13) % 17) as f64 / 17.0).collect();
        let data = BinnedData::new(&x, 256);
        let t = fit_tree(&data, &y, &all_rows(200), TreeParams { max_depth: 1000, min_leaf: 1 });
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(t.predict(xi), *yi);
        }
    }

    #[test]
    fn depth_and_leaf_size_limits() {
        let x: Vec<_> = (0..300).map(|i| row(i as f64, 0.0)).collect();
        let y: Vec<f64> = (0..300).map(|i| (i as f64 * 0.1).sin()).collect();
        let data = BinnedData::new(&x, 256);
        let t = fit_tree(&data, &y, &all_rows(300), TreeParams { max_depth: 3, min_leaf: 1 });
        assert!(t.depth() <= 3 && t.leaves() <= 8);
        let t = fit_tree(&data, &y, &all_rows(300), TreeParams { max_depth: 50, min_leaf: 40 });
        let mut counts = std::collections::HashMap::new();
        for xi in &x {
            *counts.entry(t.predict(xi).to_bits()).or_insert(0) += 1;
        }
        assert!(counts.values().all(|&c| c >= 40));
    }

    #[test]
    fn quantile_edges_are_capped() {
        let x: Vec<_> = (0..10_000).map(|i| row(i as f64, 0.0)).collect();
        let data = BinnedData::new(&x, 256);
        assert!(data.edges[1].len() <= 255);
        assert!(data.edges[1].windows(2).all(|w| w[0] < w[1]));
        // a single-valued column has no cuts
        assert!(data.edges[0].is_empty() && data.codes[0].iter().all(|&c| c == 0));
    }
}
