//! Centroid activation patterns, the inactive canonical form (ICF) of a ReLU
//! layer, and the lossless pre-layer that makes network inputs nonnegative.
//!
//! For a layer `x -> σ(W x + b)` and a centroid input `x_c`, the diagonal
//! masks `A` (active at the centroid) and `S = I - 2A` rewrite the layer as
//!
//! ```text
//! r = S (W x + b),  t = A (W x + b),  x' = σ(r) + t
//! ```
//!
//! which equals `σ(W x + b)` for every `x` and has `r <= 0` at `x_c`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{relu, Matrix};
use crate::network::{Layer, Network};

/// Whether to prepend the `(σ(x), σ(-x))` pre-layer before abstracting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegInput {
    On,
    /// The caller asserts that network inputs are nonnegative.
    Off,
    /// On, unless the input domain is known to be nonnegative or the first
    /// ReLU layer is kept exact.
    #[default]
    Auto,
}

impl std::str::FromStr for NegInput {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "on" => Ok(Self::On),
            "off" => Ok(Self::Off),
            "auto" => Ok(Self::Auto),
            other => Err(format!("expected on, off or auto, got {other:?}")),
        }
    }
}

/// Centroid data of one ReLU layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCentroid {
    /// Diagonal of `A`.
    pub active: Vec<bool>,
    /// Diagonal of `S`, entries in {-1, +1}.
    pub sign: Vec<f64>,
    pub centroid_in: Vec<f64>,
    pub centroid_out: Vec<f64>,
}

impl LayerCentroid {
    pub fn new(w: &Matrix, b: &[f64], centroid_in: &[f64]) -> Result<Self> {
        let pre = w.affine(centroid_in, b)?;
        let (active, sign) = masks_from_preactivation(&pre);
        Ok(Self {
            active,
            sign,
            centroid_in: centroid_in.to_vec(),
            centroid_out: pre.into_iter().map(relu).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }
}

/// Per-layer centroids propagated through a stack of ReLU layers.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidContext {
    pub layers: Vec<LayerCentroid>,
}

impl CentroidContext {
    pub fn propagate(layers: &[Layer], centroid: &[f64]) -> Result<Self> {
        let mut cur = centroid.to_vec();
        let mut out = Vec::with_capacity(layers.len());
        for layer in layers {
            let lc = LayerCentroid::new(&layer.weights, &layer.bias, &cur)?;
            cur = lc.centroid_out.clone();
            out.push(lc);
        }
        Ok(Self { layers: out })
    }
}

fn masks_from_preactivation(pre: &[f64]) -> (Vec<bool>, Vec<f64>) {
    // a pre-activation of exactly zero counts as active
    let active: Vec<bool> = pre.iter().map(|&v| v >= 0.0).collect();
    let sign = active.iter().map(|&a| if a { -1.0 } else { 1.0 }).collect();
    (active, sign)
}

/// Activation mask and sign vector of a layer at the centroid `xc`.
pub fn centroid_activation(w: &Matrix, b: &[f64], xc: &[f64]) -> Result<(Vec<bool>, Vec<f64>)> {
    let pre = w.affine(xc, b)?;
    Ok(masks_from_preactivation(&pre))
}

/// `(S W, S b)`: rows of active neurons negated.
pub fn canonical_params(w: &Matrix, b: &[f64], sign: &[f64]) -> Result<(Matrix, Vec<f64>)> {
    check_len("sign vector", w.rows(), sign.len())?;
    check_len("bias", w.rows(), b.len())?;
    let mut sw = w.clone();
    for (i, &s) in sign.iter().enumerate() {
        if s < 0.0 {
            sw.row_mut(i).iter_mut().for_each(|v| *v = -*v);
        }
    }
    let sb = b.iter().zip(sign).map(|(v, s)| v * s).collect();
    Ok((sw, sb))
}

/// `(A W, A b)`: rows of inactive neurons zeroed.
pub fn active_params(w: &Matrix, b: &[f64], active: &[bool]) -> Result<(Matrix, Vec<f64>)> {
    check_len("activation mask", w.rows(), active.len())?;
    check_len("bias", w.rows(), b.len())?;
    let mut aw = w.clone();
    for (i, &a) in active.iter().enumerate() {
        if !a {
            aw.row_mut(i).iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let ab = b.iter().zip(active).map(|(&v, &a)| if a { v } else { 0.0 }).collect();
    Ok((aw, ab))
}

/// The canonical-form pair `(r, t)` of a layer evaluated at `x`.
pub fn icf_parts(w: &Matrix, b: &[f64], ctx: &LayerCentroid, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("centroid mask", w.rows(), ctx.len())?;
    let y = w.affine(x, b)?;
    let r = y.iter().zip(&ctx.sign).map(|(v, s)| s * v).collect();
    let t = y
        .iter()
        .zip(&ctx.active)
        .map(|(&v, &a)| if a { v } else { 0.0 })
        .collect();
    Ok((r, t))
}

/// `σ(r) + t`, identical to `σ(W x + b)`.
pub fn icf_eval(w: &Matrix, b: &[f64], ctx: &LayerCentroid, x: &[f64]) -> Result<Vec<f64>> {
    let (r, t) = icf_parts(w, b, ctx, x)?;
    Ok(r.into_iter().zip(t).map(|(r, t)| relu(r) + t).collect())
}

/// The pre-layer `x -> σ([I; -I] x)` for inputs of dimension `n`.
pub fn pre_layer(n: usize) -> Layer {
    let eye = Matrix::identity(n);
    let weights = eye
        .vstack(&eye.map(|v| -v))
        .expect("identity blocks share a column count");
    Layer::new(weights, vec![0.0; 2 * n], true)
}

/// Prepends the pre-layer and replaces the first layer's weights `W` by
/// `[W, -W]`. The result computes the same function on every input, and every
/// input of its second layer is nonnegative.
pub fn build_pre_layers(net: &Network) -> Result<Network> {
    if net.relu_layers().is_empty() {
        return Err(Error::InvalidNetwork(
            "pre-layer transform needs at least one ReLU layer".into(),
        ));
    }
    let mut layers = net.layers().to_vec();
    let first = &layers[0];
    let w = first.weights.hstack(&first.weights.map(|v| -v))?;
    layers[0] = Layer::new(w, first.bias.clone(), first.relu);
    layers.insert(0, pre_layer(net.input_dim()));
    Network::new(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::random_network;

    fn m(rows: Vec<Vec<f64>>) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn activation_masks_hand_example() {
        let (active, sign) = centroid_activation(&m(vec![vec![1.0], vec![-1.0]]), &[0.0, 0.0], &[1.0]).unwrap();
        assert_eq!(active, vec![true, false]);
        assert_eq!(sign, vec![-1.0, 1.0]);
    }

    #[test]
    fn zero_preactivation_is_active() {
        let (active, sign) = centroid_activation(&m(vec![vec![2.0]]), &[-2.0], &[1.0]).unwrap();
        assert_eq!(active, vec![true]);
        assert_eq!(sign, vec![-1.0]);
        let ctx = LayerCentroid::new(&m(vec![vec![2.0]]), &[-2.0], &[1.0]).unwrap();
        let (r, _) = icf_parts(&m(vec![vec![2.0]]), &[-2.0], &ctx, &[1.0]).unwrap();
        assert!(r[0] <= 0.0);
    }

    #[test]
    fn fully_inactive_centroid() {
        let w = m(vec![vec![1.0, 1.0], vec![-2.0, 0.5]]);
        let (active, sign) = centroid_activation(&w, &[-10.0, -10.0], &[1.0, 1.0]).unwrap();
        assert_eq!(active, vec![false, false]);
        assert_eq!(sign, vec![1.0, 1.0]);
    }

    #[test]
    fn sign_is_one_minus_twice_mask() {
        let net = random_network(&[4, 16, 1], 11).unwrap();
        let l = &net.layers()[0];
        let ctx = LayerCentroid::new(&l.weights, &l.bias, &[0.5, -0.3, 1.0, 2.0]).unwrap();
        for (a, s) in ctx.active.iter().zip(&ctx.sign) {
            assert_eq!(*s, 1.0 - 2.0 * (*a as u8 as f64));
        }
    }

    #[test]
    fn icf_active_neuron_hand_example() {
        let (w, b) = (m(vec![vec![2.0]]), [-1.0]);
        let ctx = LayerCentroid::new(&w, &b, &[1.0]).unwrap();
        assert_eq!(ctx.sign, vec![-1.0]);
        let (r, t) = icf_parts(&w, &b, &ctx, &[3.0]).unwrap();
        assert_eq!((r[0], t[0]), (-5.0, 5.0));
        assert_eq!(icf_eval(&w, &b, &ctx, &[3.0]).unwrap(), vec![5.0]);
        // at the centroid itself
        let (r, _) = icf_parts(&w, &b, &ctx, &[1.0]).unwrap();
        assert_eq!(r[0], -1.0);
        assert_eq!(icf_eval(&w, &b, &ctx, &[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn icf_inactive_neuron_is_unchanged() {
        let (w, b) = (m(vec![vec![-1.0]]), [0.5]);
        let ctx = LayerCentroid::new(&w, &b, &[2.0]).unwrap();
        assert_eq!(ctx.active, vec![false]);
        for x in [-3.0, 0.0, 0.25, 4.0] {
            let (r, t) = icf_parts(&w, &b, &ctx, &[x]).unwrap();
            assert_eq!(r[0], -x + 0.5);
            assert_eq!(t[0], 0.0);
            assert_eq!(icf_eval(&w, &b, &ctx, &[x]).unwrap()[0], relu(-x + 0.5));
        }
    }

    #[test]
    fn pre_layer_hand_example() {
        let net = Network::new(vec![
            Layer::new(m(vec![vec![3.0]]), vec![0.0], true),
            Layer::new(Matrix::identity(1), vec![0.0], false),
        ])
        .unwrap();
        let pre = build_pre_layers(&net).unwrap();
        assert_eq!(pre.layers().len(), 3);
        let x0 = pre.layers()[0].forward(&[-2.0]).unwrap();
        assert_eq!(x0, vec![0.0, 2.0]);
        let y1 = pre.layers()[1].weights.affine(&x0, &pre.layers()[1].bias).unwrap();
        assert_eq!(y1, vec![-6.0]);
        assert_eq!(pre.forward(&[-2.0]).unwrap(), net.forward(&[-2.0]).unwrap());
    }

    #[test]
    fn pre_layer_at_zero_is_all_zero() {
        let net = random_network(&[3, 6, 2], 5).unwrap();
        let pre = build_pre_layers(&net).unwrap();
        assert_eq!(pre.layers()[0].forward(&[0.0; 3]).unwrap(), vec![0.0; 6]);
        assert_eq!(pre.forward(&[0.0; 3]).unwrap(), net.forward(&[0.0; 3]).unwrap());
    }

    #[test]
    fn pre_layer_needs_relu_layer() {
        let net = Network::new(vec![Layer::new(Matrix::identity(2), vec![0.0; 2], false)]).unwrap();
        assert!(build_pre_layers(&net).is_err());
    }

    #[test]
    fn neg_input_parses() {
        assert_eq!("on".parse::<NegInput>().unwrap(), NegInput::On);
        assert_eq!("auto".parse::<NegInput>().unwrap(), NegInput::Auto);
        assert!("maybe".parse::<NegInput>().is_err());
    }
}
