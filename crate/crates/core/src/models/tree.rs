//! Histogram-binned decision trees shared by the forest and the booster.
//!
//! Each feature is cut at most `max_bins - 1` times. Cut points are taken
//! at ranks of the sorted training values and placed halfway between two
//! adjacent distinct values, so a strictly increasing transform of a
//! feature yields the same partitions of the training rows.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binner {
    /// Ascending cut points per feature; bin = number of cuts below x.
    pub cuts: Vec<Vec<f64>>,
}

impl Binner {
    pub fn fit(x: &FeatureMatrix, max_bins: usize) -> Self {
        let max_bins = max_bins.clamp(2, 256);
        let cuts = (0..x.n_cols())
            .map(|c| {
                let mut sorted: Vec<f64> = x.column(c).collect();
                sorted.sort_by(f64::total_cmp);
                let mut uniq = sorted.clone();
                uniq.dedup();
                if uniq.len() <= max_bins {
                    return uniq.windows(2).map(|w| midpoint(w[0], w[1])).collect();
                }
                let n = sorted.len();
                let mut out: Vec<f64> = Vec::with_capacity(max_bins - 1);
                for k in 1..max_bins {
                    let v = sorted[k * n / max_bins];
                    let j = uniq.partition_point(|&u| u < v);
                    if j + 1 < uniq.len() {
                        let cut = midpoint(uniq[j], uniq[j + 1]);
                        if out.last() != Some(&cut) {
                            out.push(cut);
                        }
                    }
                }
                out
            })
            .collect();
        Binner { cuts }
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.cuts[feature].len() + 1
    }

    /// Column-major bin indices.
    pub fn transform(&self, x: &FeatureMatrix) -> Vec<u8> {
        let n = x.n_rows;
        let mut out = vec![0u8; n * x.n_cols()];
        for (c, cuts) in self.cuts.iter().enumerate() {
            for (r, v) in x.column(c).enumerate() {
                out[c * n + r] = cuts.partition_point(|&t| t < v) as u8;
            }
        }
        out
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // Keep the cut strictly below b so that a goes left and b goes right.
    if m < b {
        m
    } else {
        a
    }
}

/// A node is a leaf when `feature < 0`. Rows with `x[feature] <= threshold`
/// go left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: i32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub value: f64,
}

impl Node {
    fn leaf(value: f64) -> Self {
        Node { feature: -1, threshold: 0.0, left: 0, right: 0, value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.feature < 0 {
                return n.value;
            }
            i = if row[n.feature as usize] <= n.threshold { n.left } else { n.right } as usize;
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            let n = &t.nodes[i];
            if n.feature < 0 {
                0
            } else {
                1 + go(t, n.left as usize).max(go(t, n.right as usize))
            }
        }
        go(self, 0)
    }
}

/// Binned training data in the layout the builders scan.
pub struct BinnedData<'a> {
    pub binner: &'a Binner,
    pub bins: &'a [u8],
    pub n_rows: usize,
}

impl BinnedData<'_> {
    fn bin(&self, feature: usize, row: u32) -> u8 {
        self.bins[feature * self.n_rows + row as usize]
    }

    fn n_features(&self) -> usize {
        self.binner.cuts.len()
    }
}

struct Split {
    feature: usize,
    bin: u8,
    gain: f64,
}

fn gini_mass(w: f64, pos: f64) -> f64 {
    // w * gini = w * 2p(1-p)
    if w <= 0.0 {
        0.0
    } else {
        2.0 * pos * (w - pos) / w
    }
}

/// Partition `rows` so rows with bin <= `split.bin` come first; returns the
/// number of left rows.
fn partition(data: &BinnedData, rows: &mut [u32], feature: usize, bin: u8) -> usize {
    let mut i = 0;
    for j in 0..rows.len() {
        if data.bin(feature, rows[j]) <= bin {
            rows.swap(i, j);
            i += 1;
        }
    }
    i
}

pub struct ClassTreeParams {
    pub max_depth: usize,
    pub max_features: usize,
}

/// Gini classification tree on weighted rows (bootstrap multiplicities).
/// Leaves hold the weighted positive fraction. Returns the tree and the
/// weighted impurity decrease per feature.
pub fn build_class_tree(
    data: &BinnedData,
    labels: &[bool],
    weights: &[u32],
    params: &ClassTreeParams,
    rng: &mut Rng,
) -> (Tree, Vec<f64>) {
    let d = data.n_features();
    let mut rows: Vec<u32> = (0..data.n_rows as u32).filter(|&r| weights[r as usize] > 0).collect();
    let mut nodes = vec![Node::leaf(0.0)];
    let mut importance = vec![0.0; d];
    let mut order: Vec<usize> = (0..d).collect();
    let mut hist_w = [0.0f64; 256];
    let mut hist_p = [0.0f64; 256];

    // (node index, row range, depth)
    let mut stack = vec![(0usize, 0usize, rows.len(), 0usize)];
    while let Some((id, start, end, depth)) = stack.pop() {
        let node_rows = &mut rows[start..end];
        let (mut w, mut pos) = (0.0, 0.0);
        for &r in node_rows.iter() {
            let wr = f64::from(weights[r as usize]);
            w += wr;
            if labels[r as usize] {
                pos += wr;
            }
        }
        nodes[id] = Node::leaf(if w > 0.0 { pos / w } else { 0.0 });
        if pos == 0.0 || pos == w || depth >= params.max_depth || w < 2.0 {
            continue;
        }
        let parent = gini_mass(w, pos);

        order.shuffle(rng);
        let mut best: Option<Split> = None;
        let mut visited = 0;
        for &f in &order {
            let nb = data.binner.n_bins(f);
            if nb < 2 {
                continue;
            }
            hist_w[..nb].fill(0.0);
            hist_p[..nb].fill(0.0);
            for &r in node_rows.iter() {
                let b = data.bin(f, r) as usize;
                let wr = f64::from(weights[r as usize]);
                hist_w[b] += wr;
                if labels[r as usize] {
                    hist_p[b] += wr;
                }
            }
            let (mut wl, mut pl) = (0.0, 0.0);
            let mut any = false;
            for b in 0..nb - 1 {
                wl += hist_w[b];
                pl += hist_p[b];
                if hist_w[b] == 0.0 {
                    continue;
                }
                let wr = w - wl;
                if wl <= 0.0 || wr <= 0.0 {
                    continue;
                }
                any = true;
                let gain = parent - gini_mass(wl, pl) - gini_mass(wr, pos - pl);
                if best.as_ref().map_or(true, |s| gain > s.gain) {
                    best = Some(Split { feature: f, bin: b as u8, gain });
                }
            }
            if any {
                visited += 1;
                if visited >= params.max_features {
                    break;
                }
            }
        }

        let Some(split) = best else {
            continue;
        };
        importance[split.feature] += split.gain.max(0.0);
        let n_left = partition(data, node_rows, split.feature, split.bin);
        let (left, right) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::leaf(0.0));
        nodes.push(Node::leaf(0.0));
        nodes[id] = Node {
            feature: split.feature as i32,
            threshold: data.binner.cuts[split.feature][split.bin as usize],
            left: left as u32,
            right: right as u32,
            value: pos / w,
        };
        stack.push((right, start + n_left, end, depth + 1));
        stack.push((left, start, start + n_left, depth + 1));
    }
    (Tree { nodes }, importance)
}

/// Least-squares regression tree on `target`, with leaf values
/// `sum(target) / sum(hess)` (a Newton step for the logistic loss).
/// Returns the tree and the leaf node index of every training row.
pub fn build_newton_tree(data: &BinnedData, target: &[f64], hess: &[f64], max_depth: usize) -> (Tree, Vec<u32>) {
    let d = data.n_features();
    let mut rows: Vec<u32> = (0..data.n_rows as u32).collect();
    let mut leaf_of = vec![0u32; data.n_rows];
    let mut nodes = vec![Node::leaf(0.0)];
    let mut hist_s = [0.0f64; 256];
    let mut hist_n = [0u32; 256];

    let mut stack = vec![(0usize, 0usize, rows.len(), 0usize)];
    while let Some((id, start, end, depth)) = stack.pop() {
        let node_rows = &mut rows[start..end];
        let n = node_rows.len() as f64;
        let (mut s, mut h) = (0.0, 0.0);
        for &r in node_rows.iter() {
            s += target[r as usize];
            h += hess[r as usize];
        }
        let value = if h > 1e-12 { s / h } else { 0.0 };
        nodes[id] = Node::leaf(value);

        let mut best: Option<Split> = None;
        if depth < max_depth && node_rows.len() >= 2 {
            let base = s * s / n;
            for f in 0..d {
                let nb = data.binner.n_bins(f);
                if nb < 2 {
                    continue;
                }
                hist_s[..nb].fill(0.0);
                hist_n[..nb].fill(0);
                for &r in node_rows.iter() {
                    let b = data.bin(f, r) as usize;
                    hist_s[b] += target[r as usize];
                    hist_n[b] += 1;
                }
                let (mut sl, mut nl) = (0.0, 0u32);
                for b in 0..nb - 1 {
                    if hist_n[b] == 0 {
                        continue;
                    }
                    sl += hist_s[b];
                    nl += hist_n[b];
                    let nr = node_rows.len() as u32 - nl;
                    if nr == 0 {
                        break;
                    }
                    let sr = s - sl;
                    let gain = sl * sl / f64::from(nl) + sr * sr / f64::from(nr) - base;
                    if best.as_ref().map_or(true, |b| gain > b.gain) {
                        best = Some(Split { feature: f, bin: b as u8, gain });
                    }
                }
            }
        }

        let Some(split) = best else {
            for &r in node_rows.iter() {
                leaf_of[r as usize] = id as u32;
            }
            continue;
        };
        let n_left = partition(data, node_rows, split.feature, split.bin);
        let (left, right) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::leaf(0.0));
        nodes.push(Node::leaf(0.0));
        nodes[id] = Node {
            feature: split.feature as i32,
            threshold: data.binner.cuts[split.feature][split.bin as usize],
            left: left as u32,
            right: right as u32,
            value,
        };
        stack.push((right, start + n_left, end, depth + 1));
        stack.push((left, start, start + n_left, depth + 1));
    }
    (Tree { nodes }, leaf_of)
}
