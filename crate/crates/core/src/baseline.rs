//! Centroid-agnostic merge baseline.
//!
//! Neurons of each ReLU layer are merged in random pairs. A group `G` is
//! bounded by two ReLUs built from elementwise extremes of its rows:
//!
//! ```text
//! σ(min_G W · x + min_G b) <= σ(w_i · x + b_i) <= σ(max_G W · x + max_G b),  i ∈ G
//! ```
//!
//! which holds whenever `x >= 0`. The pre-layer is always applied so the
//! first merged layer also sees nonnegative inputs.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abstraction::GinnacerAbstraction;
use crate::error::{check_len, Error, Result};
use crate::icf::build_pre_layers;
use crate::interval::{affine_interval_map_split, IntervalVector};
use crate::linalg::{relu, split_dot, Matrix};
use crate::network::{Layer, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct MergedLayer {
    groups: Vec<Vec<usize>>,
    group_index: Vec<usize>,
    upper_weights: Matrix,
    upper_bias: Vec<f64>,
    lower_weights: Matrix,
    lower_bias: Vec<f64>,
    up_pos: Matrix,
    up_neg: Matrix,
    lo_pos: Matrix,
    lo_neg: Matrix,
}

impl MergedLayer {
    /// Merges the rows of `layer` according to `groups`.
    pub fn new(layer: &Layer, groups: Vec<Vec<usize>>) -> Result<Self> {
        let n = layer.output_dim();
        let cols = layer.input_dim();
        let mut group_index = vec![usize::MAX; n];
        let mut upper = Vec::with_capacity(groups.len() * cols);
        let mut lower = Vec::with_capacity(groups.len() * cols);
        let mut upper_bias = Vec::with_capacity(groups.len());
        let mut lower_bias = Vec::with_capacity(groups.len());
        for (k, g) in groups.iter().enumerate() {
            let (&first, _) = g.split_first().ok_or(Error::EmptyGroup)?;
            if first >= n {
                return Err(Error::IndexOutOfRange { index: first, len: n });
            }
            let mut hi = layer.weights.row(first).to_vec();
            let mut lo = hi.clone();
            let (mut bhi, mut blo) = (layer.bias[first], layer.bias[first]);
            for &i in g {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, len: n });
                }
                if group_index[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("neuron {i} appears twice")));
                }
                group_index[i] = k;
                for (j, &w) in layer.weights.row(i).iter().enumerate() {
                    hi[j] = hi[j].max(w);
                    lo[j] = lo[j].min(w);
                }
                bhi = bhi.max(layer.bias[i]);
                blo = blo.min(layer.bias[i]);
            }
            upper.extend(hi);
            lower.extend(lo);
            upper_bias.push(bhi);
            lower_bias.push(blo);
        }
        if let Some(i) = group_index.iter().position(|&k| k == usize::MAX) {
            return Err(Error::InvalidPartition(format!("neuron {i} is not covered")));
        }
        let upper_weights = Matrix::from_row_major(groups.len(), cols, upper)?;
        let lower_weights = Matrix::from_row_major(groups.len(), cols, lower)?;
        Ok(Self {
            up_pos: upper_weights.positive_part(),
            up_neg: upper_weights.negative_part(),
            lo_pos: lower_weights.positive_part(),
            lo_neg: lower_weights.negative_part(),
            groups,
            group_index,
            upper_weights,
            upper_bias,
            lower_weights,
            lower_bias,
        })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn neurons(&self) -> usize {
        self.group_index.len()
    }

    /// Two ReLUs per merged group, one per singleton.
    pub fn relus(&self) -> usize {
        self.groups.iter().map(|g| if g.len() > 1 { 2 } else { 1 }).sum()
    }

    pub fn upper_weights(&self) -> &Matrix {
        &self.upper_weights
    }

    pub fn lower_weights(&self) -> &Matrix {
        &self.lower_weights
    }

    /// Requires `input.lower() >= 0`.
    pub fn eval(&self, input: &IntervalVector) -> Result<IntervalVector> {
        check_len("merged layer input", self.upper_weights.cols(), input.len())?;
        let (lo, hi) = (input.lower(), input.upper());
        let k = self.groups.len();
        let top: Vec<f64> = (0..k)
            .map(|g| relu(split_dot(self.up_pos.row(g), self.up_neg.row(g), hi, lo) + self.upper_bias[g]))
            .collect();
        let bottom: Vec<f64> = (0..k)
            .map(|g| relu(split_dot(self.lo_pos.row(g), self.lo_neg.row(g), lo, hi) + self.lower_bias[g]))
            .collect();
        let lower = self.group_index.iter().map(|&g| bottom[g]).collect();
        let upper = self.group_index.iter().map(|&g| top[g]).collect();
        Ok(IntervalVector::from_bounds(lower, upper))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeBaseline {
    pre_layer: Layer,
    layers: Vec<MergedLayer>,
    output_layer: Layer,
    out_pos: Matrix,
    out_neg: Matrix,
    seed: Option<u64>,
}

impl MergeBaseline {
    /// Randomly pairs neurons until every ReLU layer has `targets[k]` groups
    /// (capped at the layer width).
    pub fn build(net: &Network, targets: &[usize], seed: u64) -> Result<Self> {
        check_len("merge targets", net.relu_layers().len(), targets.len())?;
        if let Some(k) = targets.iter().position(|&t| t == 0) {
            return Err(Error::InvalidTarget {
                layer: k + 1,
                target: 0,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let groups = net
            .relu_layers()
            .iter()
            .zip(targets)
            .map(|(layer, &t)| random_pairing(layer.output_dim(), t, &mut rng))
            .collect();
        let mut bl = Self::with_groups(net, groups)?;
        bl.seed = Some(seed);
        Ok(bl)
    }

    /// Baseline with explicit groups per ReLU layer of `net`.
    pub fn with_groups(net: &Network, groups: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        check_len("group lists", net.relu_layers().len(), groups.len())?;
        let mut stack = build_pre_layers(net)?.into_layers();
        let output_layer = stack.pop().expect("at least one layer");
        let pre_layer = stack.remove(0);
        let layers = stack
            .iter()
            .zip(groups)
            .map(|(layer, g)| MergedLayer::new(layer, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pre_layer,
            layers,
            out_pos: output_layer.weights.positive_part(),
            out_neg: output_layer.weights.negative_part(),
            output_layer,
            seed: None,
        })
    }

    /// Group counts matched to a built abstraction.
    pub fn matched_to(net: &Network, abs: &GinnacerAbstraction, seed: u64) -> Result<Self> {
        let targets: Vec<usize> = abs.relu_counts().iter().map(|c| c.abstracted).collect();
        Self::build(net, &targets, seed)
    }

    pub fn input_dim(&self) -> usize {
        self.pre_layer.input_dim()
    }

    pub fn layers(&self) -> &[MergedLayer] {
        &self.layers
    }

    pub fn groups_total(&self) -> usize {
        self.layers.iter().map(|l| l.groups.len()).sum()
    }

    pub fn relus_total(&self) -> usize {
        self.layers.iter().map(MergedLayer::relus).sum()
    }

    pub fn eval(&self, x: &[f64]) -> Result<IntervalVector> {
        check_len("baseline input", self.input_dim(), x.len())?;
        let mut cur = IntervalVector::degenerate(&self.pre_layer.forward(x)?);
        for layer in &self.layers {
            cur = layer.eval(&cur)?;
        }
        affine_interval_map_split(&self.out_pos, &self.out_neg, &self.output_layer.bias, &cur)
    }

    pub fn to_json_string(&self) -> String {
        let doc = BaselineJson {
            pre_layer: self.pre_layer.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| MergedLayerJson {
                    groups: l.groups.clone(),
                    upper_weights: l.upper_weights.clone(),
                    upper_bias: l.upper_bias.clone(),
                    lower_weights: l.lower_weights.clone(),
                    lower_bias: l.lower_bias.clone(),
                })
                .collect(),
            output_layer: self.output_layer.clone(),
            seed: self.seed,
        };
        serde_json::to_string(&doc).expect("baseline serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: BaselineJson = serde_json::from_str(s).map_err(|source| Error::Parse {
            what: "baseline JSON".into(),
            source,
        })?;
        let mut dim = raw.pre_layer.input_dim();
        if raw.pre_layer != crate::icf::pre_layer(dim) {
            return Err(Error::InvalidAbstraction("baseline pre-layer is not [I; -I]".into()));
        }
        dim *= 2;
        let mut layers = Vec::with_capacity(raw.layers.len());
        for (k, l) in raw.layers.into_iter().enumerate() {
            check_len(format!("merged layer {} input", k + 1), dim, l.upper_weights.cols())?;
            let merged = MergedLayer::from_json(l)?;
            dim = merged.neurons();
            layers.push(merged);
        }
        raw.output_layer.validate(layers.len() + 2)?;
        check_len("output layer input", dim, raw.output_layer.input_dim())?;
        Ok(Self {
            pre_layer: raw.pre_layer,
            layers,
            out_pos: raw.output_layer.weights.positive_part(),
            out_neg: raw.output_layer.weights.negative_part(),
            output_layer: raw.output_layer,
            seed: raw.seed,
        })
    }
}

impl MergedLayer {
    fn from_json(l: MergedLayerJson) -> Result<Self> {
        let h = l.groups.len();
        check_len("upper weight rows", h, l.upper_weights.rows())?;
        check_len("lower weight rows", h, l.lower_weights.rows())?;
        check_len("lower weight columns", l.upper_weights.cols(), l.lower_weights.cols())?;
        check_len("upper bias", h, l.upper_bias.len())?;
        check_len("lower bias", h, l.lower_bias.len())?;
        let n = l.groups.iter().map(Vec::len).sum();
        let mut group_index = vec![usize::MAX; n];
        for (k, g) in l.groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::EmptyGroup);
            }
            for &i in g {
                if i >= n || group_index[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("bad neuron index {i}")));
                }
                group_index[i] = k;
            }
        }
        let ordered = l
            .lower_weights
            .as_slice()
            .iter()
            .zip(l.upper_weights.as_slice())
            .chain(l.lower_bias.iter().zip(&l.upper_bias))
            .all(|(lo, hi)| lo <= hi && lo.is_finite() && hi.is_finite());
        if !ordered {
            return Err(Error::InvalidAbstraction(
                "merged lower parameters must not exceed upper parameters".into(),
            ));
        }
        Ok(Self {
            up_pos: l.upper_weights.positive_part(),
            up_neg: l.upper_weights.negative_part(),
            lo_pos: l.lower_weights.positive_part(),
            lo_neg: l.lower_weights.negative_part(),
            groups: l.groups,
            group_index,
            upper_weights: l.upper_weights,
            upper_bias: l.upper_bias,
            lower_weights: l.lower_weights,
            lower_bias: l.lower_bias,
        })
    }
}

/// Shuffles the current groups and merges consecutive pairs, repeating until
/// `target` groups remain. Groups are returned sorted by smallest member.
fn random_pairing(n: usize, target: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while groups.len() > target {
        groups.shuffle(rng);
        let mut excess = groups.len() - target;
        let mut next = Vec::with_capacity(groups.len());
        let mut it = groups.into_iter();
        while let Some(mut a) = it.next() {
            if excess > 0 {
                if let Some(b) = it.next() {
                    a.extend(b);
                    excess -= 1;
                }
            }
            next.push(a);
        }
        groups = next;
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_unstable_by_key(|g| g[0]);
    groups
}

pub fn save_baseline(bl: &MergeBaseline, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, bl.to_json_string()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_baseline(path: impl AsRef<Path>) -> Result<MergeBaseline> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    MergeBaseline::from_json_str(&text)
}

#[derive(Serialize, Deserialize)]
struct MergedLayerJson {
    groups: Vec<Vec<usize>>,
    upper_weights: Matrix,
    upper_bias: Vec<f64>,
    lower_weights: Matrix,
    lower_bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BaselineJson {
    pre_layer: Layer,
    layers: Vec<MergedLayerJson>,
    output_layer: Layer,
    seed: Option<u64>,
}
