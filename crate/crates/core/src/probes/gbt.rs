//! Gradient-boosted regression trees with exact variance-reduction splits.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub trees: usize,
    pub depth: usize,
    pub learning_rate: f64,
    /// Fraction of rows drawn without replacement for each tree.
    pub subsample: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            trees: 100,
            depth: 3,
            learning_rate: 0.1,
            subsample: 1.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::param("trees", "must be at least 1"));
        }
        if self.depth == 0 {
            return Err(Error::param("depth", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::param("learning_rate", "must lie in (0, 1]"));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::param("subsample", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

#[derive(Clone, Debug, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict_row(&self, x: &DMatrix<f64>, r: usize) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    k = if x[(r, *feature)] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GbtModel {
    base: f64,
    learning_rate: f64,
    trees: Vec<Tree>,
    importance: Vec<f64>,
}

struct Building {
    sum: f64,
    sumsq: f64,
    count: usize,
    split: Option<(usize, f64, usize, usize)>,
}

impl Building {
    fn new() -> Self {
        Building {
            sum: 0.0,
            sumsq: 0.0,
            count: 0,
            split: None,
        }
    }

    fn add(&mut self, v: f64) {
        self.sum += v;
        self.sumsq += v * v;
        self.count += 1;
    }
}

/// Column-wise presorted view of the training inputs.
struct Presorted {
    n: usize,
    order: Vec<u32>,
    values: Vec<f64>,
}

impl Presorted {
    fn new(x: &DMatrix<f64>) -> Self {
        let (n, m) = x.shape();
        let mut order = Vec::with_capacity(n * m);
        let mut values = Vec::with_capacity(n * m);
        for f in 0..m {
            let col = &x.as_slice()[f * n..(f + 1) * n];
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            values.extend(idx.iter().map(|&i| col[i as usize]));
            order.extend(idx);
        }
        Presorted { n, order, values }
    }

    fn feature(&self, f: usize) -> (&[u32], &[f64]) {
        let r = f * self.n..(f + 1) * self.n;
        (&self.order[r.clone()], &self.values[r])
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn grow_tree(
    x: &DMatrix<f64>,
    sorted: &Presorted,
    resid: &[f64],
    in_bag: &[bool],
    depth: usize,
    importance: &mut [f64],
) -> (Tree, Vec<u32>) {
    let (n, m) = x.shape();
    let mut nodes = vec![Building::new()];
    let mut node_of = vec![NONE; n];
    for i in 0..n {
        if in_bag[i] {
            node_of[i] = 0;
            nodes[0].add(resid[i]);
        }
    }
    let mut frontier = vec![0usize];
    for _ in 0..depth {
        let mut slot_of = vec![NONE; nodes.len()];
        let active: Vec<usize> = frontier.iter().copied().filter(|&k| nodes[k].count >= 2).collect();
        if active.is_empty() {
            break;
        }
        for (s, &k) in active.iter().enumerate() {
            slot_of[k] = s as u32;
        }
        let mut best: Vec<Option<Candidate>> = vec![None; active.len()];
        // Columns whose best split ties the winner exactly; they share its gain.
        let mut tied: Vec<Vec<usize>> = vec![Vec::new(); active.len()];
        let mut lsum = vec![0.0; active.len()];
        let mut lcnt = vec![0usize; active.len()];
        let mut last = vec![0.0; active.len()];
        for f in 0..m {
            lsum.iter_mut().for_each(|v| *v = 0.0);
            lcnt.iter_mut().for_each(|v| *v = 0);
            let (order, values) = sorted.feature(f);
            for (&i, &v) in order.iter().zip(values) {
                let k = node_of[i as usize];
                if k == NONE {
                    continue;
                }
                let s = slot_of[k as usize];
                if s == NONE {
                    continue;
                }
                let s = s as usize;
                if lcnt[s] > 0 && v > last[s] {
                    let node = &nodes[k as usize];
                    let rc = (node.count - lcnt[s]) as f64;
                    let rs = node.sum - lsum[s];
                    let lc = lcnt[s] as f64;
                    let gain = lsum[s] * lsum[s] / lc + rs * rs / rc
                        - node.sum * node.sum / node.count as f64;
                    if best[s].is_some_and(|b| gain == b.gain) {
                        if tied[s].last() != Some(&f) {
                            tied[s].push(f);
                        }
                    } else if best[s].is_none_or(|b| gain > b.gain) {
                        tied[s].clear();
                        tied[s].push(f);
                        let mut threshold = last[s] + (v - last[s]) / 2.0;
                        if !(threshold < v) {
                            threshold = last[s];
                        }
                        best[s] = Some(Candidate {
                            gain,
                            feature: f,
                            threshold,
                        });
                    }
                }
                lsum[s] += resid[i as usize];
                lcnt[s] += 1;
                last[s] = v;
            }
        }
        let mut next = Vec::new();
        for (s, &k) in active.iter().enumerate() {
            let Some(c) = best[s] else { continue };
            let node = &nodes[k];
            let sse = node.sumsq - node.sum * node.sum / node.count as f64;
            if !(c.gain > 0.0 && c.gain > 1e-10 * sse) {
                continue;
            }
            let left = nodes.len();
            let right = left + 1;
            nodes.push(Building::new());
            nodes.push(Building::new());
            nodes[k].split = Some((c.feature, c.threshold, left, right));
            let share = c.gain / tied[s].len() as f64;
            for &f in &tied[s] {
                importance[f] += share;
            }
            next.push(left);
            next.push(right);
        }
        if next.is_empty() {
            break;
        }
        for i in 0..n {
            let k = node_of[i];
            if k == NONE {
                continue;
            }
            if let Some((f, t, l, r)) = nodes[k as usize].split {
                let child = if x[(i, f)] <= t { l } else { r };
                node_of[i] = child as u32;
                nodes[child].add(resid[i]);
            }
        }
        frontier = next;
    }
    let tree = Tree {
        nodes: nodes
            .iter()
            .map(|b| match b.split {
                Some((feature, threshold, left, right)) => Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                },
                None => Node::Leaf(if b.count > 0 { b.sum / b.count as f64 } else { 0.0 }),
            })
            .collect(),
    };
    (tree, node_of)
}

impl GbtModel {
    pub fn fit(x: &DMatrix<f64>, y: &[f64], params: &GbtParams, rng: &Rng) -> Result<Self> {
        params.validate()?;
        let (n, m) = x.shape();
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!("{n} rows but {} targets", y.len())));
        }
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        let sorted = Presorted::new(x);
        let base = crate::numstats::mean(y);
        let mut fitted = vec![base; n];
        let mut importance = vec![0.0; m];
        let mut trees = Vec::with_capacity(params.trees);
        let mut rng = rng.derive("gbt/subsample");
        let bag_size = ((params.subsample * n as f64).floor() as usize).clamp(2, n);
        for _ in 0..params.trees {
            let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
            let in_bag = if bag_size < n {
                let mut mask = vec![false; n];
                for &i in &rng.permutation(n)[..bag_size] {
                    mask[i] = true;
                }
                mask
            } else {
                vec![true; n]
            };
            let (tree, node_of) = grow_tree(x, &sorted, &resid, &in_bag, params.depth, &mut importance);
            for i in 0..n {
                let step = match node_of[i] {
                    NONE => tree.predict_row(x, i),
                    k => match tree.nodes[k as usize] {
                        Node::Leaf(v) => v,
                        Node::Split { .. } => unreachable!("rows end in leaves"),
                    },
                };
                fitted[i] += params.learning_rate * step;
            }
            trees.push(tree);
        }
        let total: f64 = importance.iter().sum();
        if total > 0.0 {
            importance.iter_mut().for_each(|v| *v /= total);
        }
        Ok(GbtModel {
            base,
            learning_rate: params.learning_rate,
            trees,
            importance,
        })
    }

    /// Gain importance normalized to sum 1 (all zero if no split occurred).
    pub fn importance(&self) -> &[f64] {
        &self.importance
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.predict_staged(x, self.trees.len())
    }

    /// Prediction using only the first `trees` trees.
    pub fn predict_staged(&self, x: &DMatrix<f64>, trees: usize) -> Vec<f64> {
        (0..x.nrows())
            .map(|r| {
                self.base
                    + self.trees[..trees.min(self.trees.len())]
                        .iter()
                        .map(|t| self.learning_rate * t.predict_row(x, r))
                        .sum::<f64>()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probes::r2_from_predictions;

    #[test]
    fn fits_step_function_exactly() {
        let x = DMatrix::from_fn(40, 1, |r, _| r as f64);
        let y: Vec<f64> = (0..40).map(|r| if r < 20 { 0.0 } else { 5.0 }).collect();
        let params = GbtParams {
            trees: 1,
            depth: 1,
            learning_rate: 1.0,
            subsample: 1.0,
        };
        let g = GbtModel::fit(&x, &y, &params, &Rng::new(0, 0)).unwrap();
        assert_eq!(g.predict(&x), y);
        assert_eq!(g.importance(), &[1.0]);
    }

    #[test]
    fn importance_picks_informative_feature() {
        let mut r = Rng::new(1, 1);
        let x = DMatrix::from_fn(300, 3, |_, _| r.normal());
        let y: Vec<f64> = (0..300).map(|i| x[(i, 1)].powi(2)).collect();
        let g = GbtModel::fit(&x, &y, &GbtParams::default(), &Rng::new(0, 0)).unwrap();
        let imp = g.importance();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(imp[1] > 0.9);
        assert!(r2_from_predictions(&g.predict(&x), &y).unwrap() > 0.95);
    }

    #[test]
    fn constant_target_has_no_splits() {
        let x = DMatrix::from_fn(30, 2, |r, c| (r * (c + 1)) as f64);
        let y = vec![3.0; 30];
        let g = GbtModel::fit(&x, &y, &GbtParams::default(), &Rng::new(0, 0)).unwrap();
        assert_eq!(g.importance(), &[0.0, 0.0]);
        assert!(g.predict(&x).iter().all(|v| *v == 3.0));
    }

    #[test]
    fn subsampling_is_seeded() {
        let mut r = Rng::new(2, 2);
        let x = DMatrix::from_fn(100, 2, |_, _| r.normal());
        let y: Vec<f64> = (0..100).map(|i| x[(i, 0)]).collect();
        let p = GbtParams {
            subsample: 0.5,
            ..GbtParams::default()
        };
        let a = GbtModel::fit(&x, &y, &p, &Rng::new(5, 0)).unwrap();
        let b = GbtModel::fit(&x, &y, &p, &Rng::new(5, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_params() {
        let p = GbtParams {
            learning_rate: 1.5,
            ..GbtParams::default()
        };
        assert!(p.validate().is_err());
    }
}
