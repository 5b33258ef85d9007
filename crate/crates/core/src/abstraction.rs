//! Global interval abstraction with exact reconstruction at a centroid.
//!
//! Every abstracted ReLU layer is rewritten in inactive canonical form around
//! its propagated centroid, its neurons are merged into valid groups, and the
//! layer is replaced by the interval map
//!
//! ```text
//! r̄ = V⁺ x̄ + V⁻ x̲ + u
//! t̄ = (AW)⁺ x̄ + (AW)⁻ x̲ + Ab
//! t̲ = (AW)⁺ x̲ + (AW)⁻ x̄ + Ab
//! x̄' = P σ(r̄) + t̄,   x̲' = t̲
//! ```
//!
//! where `P` copies each group's shared ReLU output to every member. The
//! result contains the network output for every input, collapses to the
//! exact output at the centroid, and uses one ReLU per group.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::icf::{active_params, build_pre_layers, canonical_params, LayerCentroid, NegInput};
use crate::interval::{affine_interval_map_split, IntervalVector};
use crate::linalg::{dot, relu, split_dot, Matrix};
use crate::network::{Layer, Network};
use crate::partition::valid_partition;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildOptions {
    pub neg_input: NegInput,
    /// Number of leading ReLU layers kept exact.
    pub skip_layers: usize,
    /// Known lower bound of the input domain; lets `NegInput::Auto` drop the
    /// pre-layer when it is nonnegative.
    pub input_lower_bound: Option<Vec<f64>>,
}

/// Parameters of one abstracted ReLU layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerAbstraction {
    groups: Vec<Vec<usize>>,
    group_index: Vec<usize>,
    v: Matrix,
    u: Vec<f64>,
    aw: Matrix,
    ab: Vec<f64>,
    v_pos: Matrix,
    v_neg: Matrix,
    aw_pos: Matrix,
    aw_neg: Matrix,
    candidate_merges: usize,
}

impl LayerAbstraction {
    /// Abstracts `layer` around `centroid_in` and returns the abstraction
    /// together with the layer's centroid output.
    pub fn build(layer: &Layer, centroid_in: &[f64]) -> Result<(Self, Vec<f64>)> {
        let ctx = LayerCentroid::new(&layer.weights, &layer.bias, centroid_in)?;
        let (sw, sb) = canonical_params(&layer.weights, &layer.bias, &ctx.sign)?;
        let partition = valid_partition(&sw, &sb, centroid_in)?;
        let (aw, ab) = active_params(&layer.weights, &layer.bias, &ctx.active)?;
        let mut abs = Self::from_parts(
            partition.groups,
            partition.merged_weights,
            partition.merged_biases,
            aw,
            ab,
        )?;
        abs.candidate_merges = partition.candidate_merges;
        Ok((abs, ctx.centroid_out))
    }

    /// Checks shapes and group coverage, then precomputes the sign splits.
    pub fn from_parts(groups: Vec<Vec<usize>>, v: Matrix, u: Vec<f64>, aw: Matrix, ab: Vec<f64>) -> Result<Self> {
        let n = aw.rows();
        check_len("group count (rows of V)", groups.len(), v.rows())?;
        check_len("u", v.rows(), u.len())?;
        check_len("Ab", n, ab.len())?;
        check_len("columns of V", aw.cols(), v.cols())?;
        let mut group_index = vec![usize::MAX; n];
        for (k, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::EmptyGroup);
            }
            for &i in g {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, len: n });
                }
                if group_index[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("neuron {i} appears twice")));
                }
                group_index[i] = k;
            }
        }
        if let Some(i) = group_index.iter().position(|&k| k == usize::MAX) {
            return Err(Error::InvalidPartition(format!("neuron {i} is not covered")));
        }
        if !(v.is_finite() && aw.is_finite() && u.iter().chain(&ab).all(|x| x.is_finite())) {
            return Err(Error::InvalidAbstraction("non-finite layer parameters".into()));
        }
        Ok(Self {
            v_pos: v.positive_part(),
            v_neg: v.negative_part(),
            aw_pos: aw.positive_part(),
            aw_neg: aw.negative_part(),
            groups,
            group_index,
            v,
            u,
            aw,
            ab,
            candidate_merges: 0,
        })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Group of each neuron (the reconstruction matrix as an index map).
    pub fn group_index(&self) -> &[usize] {
        &self.group_index
    }

    pub fn merged_weights(&self) -> &Matrix {
        &self.v
    }

    pub fn merged_biases(&self) -> &[f64] {
        &self.u
    }

    pub fn active_weights(&self) -> &Matrix {
        &self.aw
    }

    pub fn active_bias(&self) -> &[f64] {
        &self.ab
    }

    pub fn input_dim(&self) -> usize {
        self.aw.cols()
    }

    pub fn neurons(&self) -> usize {
        self.aw.rows()
    }

    /// Number of shared ReLUs.
    pub fn relus(&self) -> usize {
        self.groups.len()
    }

    /// Pair merges evaluated while partitioning; zero for a loaded layer.
    pub fn candidate_merges(&self) -> usize {
        self.candidate_merges
    }

    pub fn eval(&self, input: &IntervalVector) -> Result<IntervalVector> {
        check_len("abstracted layer input", self.input_dim(), input.len())?;
        let (lo, hi) = (input.lower(), input.upper());
        let shared: Vec<f64> = (0..self.v.rows())
            .map(|k| relu(split_dot(self.v_pos.row(k), self.v_neg.row(k), hi, lo) + self.u[k]))
            .collect();
        let mut lower = Vec::with_capacity(self.neurons());
        let mut upper = Vec::with_capacity(self.neurons());
        for i in 0..self.neurons() {
            let (p, n) = (self.aw_pos.row(i), self.aw_neg.row(i));
            upper.push(shared[self.group_index[i]] + (split_dot(p, n, hi, lo) + self.ab[i]));
            lower.push(split_dot(p, n, lo, hi) + self.ab[i]);
        }
        Ok(IntervalVector::from_bounds(lower, upper))
    }

    /// Exact layer output at the centroid, `A W x_c + A b`.
    fn centroid_output(&self, centroid_in: &[f64]) -> Vec<f64> {
        self.aw
            .iter_rows()
            .zip(&self.ab)
            .map(|(row, &b)| dot(row, centroid_in) + b)
            .collect()
    }
}

/// A layer kept exact, with its weight splits precomputed.
#[derive(Debug, Clone, PartialEq)]
struct ExactLayer {
    layer: Layer,
    pos: Matrix,
    neg: Matrix,
}

impl ExactLayer {
    fn new(layer: Layer) -> Self {
        Self {
            pos: layer.weights.positive_part(),
            neg: layer.weights.negative_part(),
            layer,
        }
    }

    fn eval(&self, input: &IntervalVector) -> Result<IntervalVector> {
        let out = affine_interval_map_split(&self.pos, &self.neg, &self.layer.bias, input)?;
        Ok(if self.layer.relu { out.relu() } else { out })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerReluStats {
    pub original: usize,
    pub abstracted: usize,
}

impl LayerReluStats {
    pub fn percent_remaining(&self) -> f64 {
        100.0 * self.abstracted as f64 / self.original as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReluStats {
    /// One entry per ReLU layer of the original network.
    pub layers: Vec<LayerReluStats>,
    /// ReLUs added by the pre-layer, not part of the totals.
    pub pre_layer_relus: usize,
}

impl ReluStats {
    pub fn original_total(&self) -> usize {
        self.layers.iter().map(|l| l.original).sum()
    }

    pub fn abstracted_total(&self) -> usize {
        self.layers.iter().map(|l| l.abstracted).sum()
    }
}

/// The full abstraction of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct GinnacerAbstraction {
    pre_layer: Option<ExactLayer>,
    prefix: Vec<ExactLayer>,
    layers: Vec<LayerAbstraction>,
    output_layer: ExactLayer,
    centroid: Vec<f64>,
    relu_counts: Vec<LayerReluStats>,
}

impl GinnacerAbstraction {
    pub fn build(net: &Network, centroid: &[f64], opts: &BuildOptions) -> Result<Self> {
        check_len("centroid", net.input_dim(), centroid.len())?;
        let relu_layers = net.relu_layers().len();
        if opts.skip_layers > relu_layers {
            return Err(Error::SkipOutOfRange {
                skip: opts.skip_layers,
                relu_layers,
            });
        }
        if let Some(lb) = &opts.input_lower_bound {
            check_len("input lower bound", net.input_dim(), lb.len())?;
        }

        let use_pre = match opts.neg_input {
            NegInput::On => true,
            NegInput::Off => {
                if opts.skip_layers == 0 && relu_layers > 0 && centroid.iter().any(|&v| v < 0.0) {
                    tracing::warn!(
                        "pre-layer disabled but the centroid has negative inputs; \
                         soundness then requires a nonnegative input domain"
                    );
                }
                false
            }
            NegInput::Auto => {
                let nonnegative_domain = opts
                    .input_lower_bound
                    .as_ref()
                    .is_some_and(|lb| lb.iter().all(|&v| v >= 0.0));
                relu_layers > 0 && opts.skip_layers == 0 && !nonnegative_domain
            }
        };

        let working = if use_pre { build_pre_layers(net)? } else { net.clone() };
        let mut stack = working.into_layers();
        let output_layer = stack.pop().expect("networks have at least one layer");
        let pre_layer = use_pre.then(|| stack.remove(0));

        let mut xc = centroid.to_vec();
        if let Some(pre) = &pre_layer {
            xc = pre.forward(&xc)?;
        }
        let mut prefix = Vec::with_capacity(opts.skip_layers);
        let mut layers = Vec::with_capacity(stack.len() - opts.skip_layers);
        let mut relu_counts = Vec::with_capacity(stack.len());
        for (k, layer) in stack.into_iter().enumerate() {
            let n = layer.output_dim();
            if k < opts.skip_layers {
                xc = layer.forward(&xc)?;
                prefix.push(ExactLayer::new(layer));
                relu_counts.push(LayerReluStats {
                    original: n,
                    abstracted: n,
                });
            } else {
                let (abs, next) = LayerAbstraction::build(&layer, &xc)?;
                relu_counts.push(LayerReluStats {
                    original: n,
                    abstracted: abs.relus(),
                });
                tracing::debug!(layer = k + 1, neurons = n, groups = abs.relus(), "abstracted layer");
                layers.push(abs);
                xc = next;
            }
        }

        Ok(Self {
            pre_layer: pre_layer.map(ExactLayer::new),
            prefix,
            layers,
            output_layer: ExactLayer::new(output_layer),
            centroid: centroid.to_vec(),
            relu_counts,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.centroid.len()
    }

    pub fn output_dim(&self) -> usize {
        self.output_layer.layer.output_dim()
    }

    pub fn centroid(&self) -> &[f64] {
        &self.centroid
    }

    pub fn has_pre_layer(&self) -> bool {
        self.pre_layer.is_some()
    }

    pub fn exact_prefix(&self) -> usize {
        self.prefix.len()
    }

    pub fn layers(&self) -> &[LayerAbstraction] {
        &self.layers
    }

    /// Per-layer `(original, abstracted)` ReLU counts.
    pub fn relu_counts(&self) -> &[LayerReluStats] {
        &self.relu_counts
    }

    pub fn relu_stats(&self) -> ReluStats {
        ReluStats {
            layers: self.relu_counts.clone(),
            pre_layer_relus: self.pre_layer.as_ref().map_or(0, |p| p.layer.output_dim()),
        }
    }

    /// Bounds on the network output at a concrete input.
    pub fn eval(&self, x: &[f64]) -> Result<IntervalVector> {
        check_len("abstraction input", self.input_dim(), x.len())?;
        let mut cur = x.to_vec();
        for exact in self.pre_layer.iter().chain(&self.prefix) {
            cur = exact.layer.forward(&cur)?;
        }
        self.eval_tail(IntervalVector::degenerate(&cur))
    }

    /// Bounds on the network output over a box of inputs.
    pub fn eval_interval(&self, input: &IntervalVector) -> Result<IntervalVector> {
        check_len("abstraction input interval", self.input_dim(), input.len())?;
        let mut cur = input.clone();
        for exact in self.pre_layer.iter().chain(&self.prefix) {
            cur = exact.eval(&cur)?;
        }
        self.eval_tail(cur)
    }

    fn eval_tail(&self, mut cur: IntervalVector) -> Result<IntervalVector> {
        for layer in &self.layers {
            cur = layer.eval(&cur)?;
        }
        self.output_layer.eval(&cur)
    }

    /// Re-derives the layer centroids and checks that every group is valid
    /// there, that dimensions chain, and that no layer gained ReLUs.
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidAbstraction(msg));
        let mut dim = self.input_dim();
        let mut xc = self.centroid.clone();
        if let Some(pre) = &self.pre_layer {
            check_len("pre-layer input", dim, pre.layer.input_dim())?;
            if pre.layer != crate::icf::pre_layer(dim) {
                return invalid("pre-layer is not [I; -I] with zero bias".into());
            }
            xc = pre.layer.forward(&xc)?;
            dim = pre.layer.output_dim();
        }
        for (k, exact) in self.prefix.iter().enumerate() {
            check_len(format!("exact layer {} input", k + 1), dim, exact.layer.input_dim())?;
            if !exact.layer.relu {
                return invalid(format!("exact prefix layer {} must apply a ReLU", k + 1));
            }
            xc = exact.layer.forward(&xc)?;
            dim = exact.layer.output_dim();
        }
        for (k, layer) in self.layers.iter().enumerate() {
            let number = self.prefix.len() + k + 1;
            check_len(format!("abstracted layer {number} input"), dim, layer.input_dim())?;
            for g in 0..layer.relus() {
                let potential = dot(layer.v.row(g), &xc) + layer.u[g];
                if !(potential <= 0.0) {
                    return invalid(format!(
                        "layer {number}, group {g}: potential {potential} > 0 at the centroid"
                    ));
                }
            }
            xc = layer.centroid_output(&xc);
            dim = layer.neurons();
        }
        check_len("output layer input", dim, self.output_layer.layer.input_dim())?;
        if self.output_layer.layer.relu {
            return invalid("output layer must be linear".into());
        }
        let expected: Vec<LayerReluStats> = self
            .prefix
            .iter()
            .map(|e| LayerReluStats {
                original: e.layer.output_dim(),
                abstracted: e.layer.output_dim(),
            })
            .chain(self.layers.iter().map(|l| LayerReluStats {
                original: l.neurons(),
                abstracted: l.relus(),
            }))
            .collect();
        if expected != self.relu_counts {
            return invalid("relu_counts disagree with the layer parameters".into());
        }
        if self.relu_counts.iter().any(|c| c.abstracted > c.original) {
            return invalid("a layer has more ReLUs than the original".into());
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&AbstractionJson::from(self)).expect("abstraction serialization cannot fail")
    }

    /// Parses and validates an abstraction document.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: AbstractionJson = serde_json::from_str(s).map_err(|source| Error::Parse {
            what: "abstraction JSON".into(),
            source,
        })?;
        let abs = Self::try_from(raw)?;
        abs.validate()?;
        Ok(abs)
    }
}

pub fn save_abstraction(abs: &GinnacerAbstraction, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, abs.to_json_string()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_abstraction(path: impl AsRef<Path>) -> Result<GinnacerAbstraction> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    GinnacerAbstraction::from_json_str(&text)
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    groups: Vec<Vec<usize>>,
    #[serde(rename = "V")]
    v: Matrix,
    u: Vec<f64>,
    #[serde(rename = "AW")]
    aw: Matrix,
    #[serde(rename = "Ab")]
    ab: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct AbstractionJson {
    pre_layer: Option<Layer>,
    exact_prefix: usize,
    prefix_layers: Vec<Layer>,
    layers: Vec<LayerJson>,
    output_layer: Layer,
    centroid: Vec<f64>,
    relu_counts: Vec<(usize, usize)>,
}

impl From<&GinnacerAbstraction> for AbstractionJson {
    fn from(abs: &GinnacerAbstraction) -> Self {
        Self {
            pre_layer: abs.pre_layer.as_ref().map(|p| p.layer.clone()),
            exact_prefix: abs.prefix.len(),
            prefix_layers: abs.prefix.iter().map(|e| e.layer.clone()).collect(),
            layers: abs
                .layers
                .iter()
                .map(|l| LayerJson {
                    groups: l.groups.clone(),
                    v: l.v.clone(),
                    u: l.u.clone(),
                    aw: l.aw.clone(),
                    ab: l.ab.clone(),
                })
                .collect(),
            output_layer: abs.output_layer.layer.clone(),
            centroid: abs.centroid.clone(),
            relu_counts: abs.relu_counts.iter().map(|c| (c.original, c.abstracted)).collect(),
        }
    }
}

impl TryFrom<AbstractionJson> for GinnacerAbstraction {
    type Error = Error;

    fn try_from(raw: AbstractionJson) -> Result<Self> {
        if raw.exact_prefix != raw.prefix_layers.len() {
            return Err(Error::InvalidAbstraction(format!(
                "exact_prefix = {} but {} prefix layers are stored",
                raw.exact_prefix,
                raw.prefix_layers.len()
            )));
        }
        let all = raw
            .pre_layer
            .iter()
            .chain(&raw.prefix_layers)
            .chain(std::iter::once(&raw.output_layer));
        for (k, layer) in all.enumerate() {
            layer.validate(k + 1)?;
        }
        if !raw.centroid.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidAbstraction("non-finite centroid".into()));
        }
        let layers = raw
            .layers
            .into_iter()
            .map(|l| LayerAbstraction::from_parts(l.groups, l.v, l.u, l.aw, l.ab))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pre_layer: raw.pre_layer.map(ExactLayer::new),
            prefix: raw.prefix_layers.into_iter().map(ExactLayer::new).collect(),
            layers,
            output_layer: ExactLayer::new(raw.output_layer),
            centroid: raw.centroid,
            relu_counts: raw
                .relu_counts
                .into_iter()
                .map(|(original, abstracted)| LayerReluStats { original, abstracted })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::random_network;

    fn m(rows: Vec<Vec<f64>>) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn single_relu_layer_is_exact_at_centroid() {
        let net = random_network(&[3, 10, 2], 1).unwrap();
        for xc in [[0.0, 0.0, 0.0], [1.5, -2.0, 0.3], [-4.0, 4.0, 9.0]] {
            let abs = GinnacerAbstraction::build(&net, &xc, &BuildOptions::default()).unwrap();
            let out = abs.eval(&xc).unwrap();
            let y = net.forward(&xc).unwrap();
            assert_eq!(out.lower(), out.upper());
            for (a, b) in out.lower().iter().zip(&y) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn identical_neurons_share_a_relu() {
        // two copies of the same neuron
        let net = Network::new(vec![
            Layer::new(m(vec![vec![1.0, -0.5], vec![1.0, -0.5]]), vec![0.2, 0.2], true),
            Layer::new(m(vec![vec![1.0, 2.0]]), vec![0.0], false),
        ])
        .unwrap();
        let opts = BuildOptions {
            neg_input: NegInput::Off,
            ..Default::default()
        };
        let abs = GinnacerAbstraction::build(&net, &[1.0, 1.0], &opts).unwrap();
        assert_eq!(
            abs.relu_counts()[0],
            LayerReluStats {
                original: 2,
                abstracted: 1
            }
        );
        let stats = abs.relu_stats();
        assert_eq!(stats.layers[0].percent_remaining(), 50.0);
    }

    #[test]
    fn skipping_every_layer_is_exact_everywhere() {
        let net = random_network(&[2, 8, 8, 1], 4).unwrap();
        let opts = BuildOptions {
            skip_layers: 2,
            ..Default::default()
        };
        let abs = GinnacerAbstraction::build(&net, &[0.1, 0.2], &opts).unwrap();
        assert!(!abs.has_pre_layer());
        assert!(abs.layers().is_empty());
        for x in [[3.0, -1.0], [-7.5, 2.25], [0.0, 0.0]] {
            let out = abs.eval(&x).unwrap();
            assert_eq!(out.lower(), out.upper());
            assert_eq!(out.lower(), net.forward(&x).unwrap().as_slice());
        }
        assert!(abs.relu_stats().layers.iter().all(|l| l.percent_remaining() == 100.0));
    }

    #[test]
    fn skip_out_of_range() {
        let net = random_network(&[2, 4, 1], 0).unwrap();
        let opts = BuildOptions {
            skip_layers: 2,
            ..Default::default()
        };
        assert!(matches!(
            GinnacerAbstraction::build(&net, &[0.0, 0.0], &opts),
            Err(Error::SkipOutOfRange {
                skip: 2,
                relu_layers: 1
            })
        ));
    }

    #[test]
    fn neg_input_flag_controls_pre_layer() {
        let net = random_network(&[2, 4, 1], 0).unwrap();
        let build = |neg_input, lb: Option<Vec<f64>>| {
            GinnacerAbstraction::build(
                &net,
                &[0.5, 0.5],
                &BuildOptions {
                    neg_input,
                    skip_layers: 0,
                    input_lower_bound: lb,
                },
            )
            .unwrap()
        };
        assert!(build(NegInput::On, None).has_pre_layer());
        assert!(!build(NegInput::Off, None).has_pre_layer());
        assert!(build(NegInput::Auto, None).has_pre_layer());
        assert!(build(NegInput::Auto, Some(vec![-1.0, 0.0])).has_pre_layer());
        assert!(!build(NegInput::Auto, Some(vec![0.0, 0.0])).has_pre_layer());
        assert_eq!(build(NegInput::On, None).relu_stats().pre_layer_relus, 4);
    }

    #[test]
    fn two_neuron_shared_relu_layer_on_grid() {
        // two inputs, two neurons whose canonical rows merge into one group
        let w = m(vec![vec![1.0, -1.0], vec![0.5, -2.0]]);
        let b = vec![-1.0, -0.5];
        let net = Network::new(vec![
            Layer::new(w.clone(), b.clone(), true),
            Layer::new(Matrix::identity(2), vec![0.0, 0.0], false),
        ])
        .unwrap();
        let xc = [0.5, 0.5];
        let opts = BuildOptions {
            neg_input: NegInput::Off,
            ..Default::default()
        };
        let abs = GinnacerAbstraction::build(&net, &xc, &opts).unwrap();
        assert_eq!(abs.layers()[0].groups(), &[vec![0, 1]]);

        let at_centre = abs.eval(&xc).unwrap();
        assert_eq!(at_centre.lower(), at_centre.upper());
        assert_eq!(at_centre.lower(), net.forward(&xc).unwrap().as_slice());

        for i in 0..=40 {
            for j in 0..=40 {
                let x = [i as f64 * 0.25, j as f64 * 0.25];
                let exact: Vec<f64> = w.affine(&x, &b).unwrap().into_iter().map(relu).collect();
                assert!(abs.eval(&x).unwrap().contains(&exact, 1e-12), "x = {x:?}");
            }
        }
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let net = random_network(&[3, 12, 12, 2], 9).unwrap();
        let abs = GinnacerAbstraction::build(&net, &[0.2, -0.1, 1.0], &BuildOptions::default()).unwrap();
        let text = abs.to_json_string();
        let back = GinnacerAbstraction::from_json_str(&text).unwrap();
        let x = [1.0, 2.0, -3.0];
        assert_eq!(back.eval(&x).unwrap(), abs.eval(&x).unwrap());
        assert_eq!(back.to_json_string(), text);

        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["relu_counts"][0][1] = serde_json::json!(1000);
        assert!(GinnacerAbstraction::from_json_str(&doc.to_string()).is_err());

        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["layers"][0]["u"][0] = serde_json::json!(1e6);
        assert!(matches!(
            GinnacerAbstraction::from_json_str(&doc.to_string()),
            Err(Error::InvalidAbstraction(_))
        ));
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        let net = random_network(&[2, 4, 1], 0).unwrap();
        let abs = GinnacerAbstraction::build(&net, &[0.0, 0.0], &BuildOptions::default()).unwrap();
        assert!(matches!(abs.eval(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(GinnacerAbstraction::build(&net, &[0.0], &BuildOptions::default()).is_err());
    }
}
