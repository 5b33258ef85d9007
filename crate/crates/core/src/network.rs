//! Feedforward ReLU networks: representation, JSON I/O and concrete/interval
//! evaluation.
//!
//! A network is a list of affine layers. Every layer except the last applies
//! a ReLU; the last one is linear. Layer numbers in error messages start at 1.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::interval::{affine_interval_map, IntervalVector};
use crate::linalg::{relu_vec, Matrix};

/// One affine layer `x -> W x + b`, optionally followed by a ReLU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    #[serde(default)]
    pub relu: bool,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vec<f64>, relu: bool) -> Self {
        Self { weights, bias, relu }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.weights.affine(x, &self.bias)?;
        if self.relu {
            relu_vec(&mut y);
        }
        Ok(y)
    }

    pub fn interval_forward(&self, input: &IntervalVector) -> Result<IntervalVector> {
        let out = affine_interval_map(&self.weights, &self.bias, input)?;
        Ok(if self.relu { out.relu() } else { out })
    }

    /// Checks the bias length and finiteness. `number` is 1-based.
    pub(crate) fn validate(&self, number: usize) -> Result<()> {
        check_len(format!("layer {number} bias"), self.weights.rows(), self.bias.len())?;
        if self.weights.rows() == 0 || self.weights.cols() == 0 {
            return Err(Error::InvalidNetwork(format!(
                "layer {number} has an empty weight matrix"
            )));
        }
        if !self.weights.is_finite() {
            return Err(Error::NonFinite {
                layer: number,
                what: "weights",
            });
        }
        if !self.bias.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                layer: number,
                what: "bias",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    layers: Vec<Layer>,
}

#[derive(Deserialize)]
struct RawNetwork {
    layers: Vec<Layer>,
}

impl Network {
    /// Validates shapes, finiteness and the ReLU layout.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("network has no layers".into()));
        }
        let last = layers.len() - 1;
        for (k, layer) in layers.iter().enumerate() {
            let number = k + 1;
            layer.validate(number)?;
            if k > 0 {
                check_len(
                    format!("layer {number} weights (columns)"),
                    layers[k - 1].output_dim(),
                    layer.input_dim(),
                )?;
            }
            if k == last && layer.relu {
                return Err(Error::InvalidNetwork(format!(
                    "final layer {number} must be linear (relu = false)"
                )));
            }
            if k < last && !layer.relu {
                return Err(Error::InvalidNetwork(format!(
                    "hidden layer {number} must apply a ReLU"
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawNetwork = serde_json::from_str(s).map_err(|source| Error::Parse {
            what: "network JSON".into(),
            source,
        })?;
        Self::new(raw.layers)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("network serialization cannot fail")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// The ReLU layers (all but the last).
    pub fn relu_layers(&self) -> &[Layer] {
        &self.layers[..self.layers.len() - 1]
    }

    pub fn output_layer(&self) -> &Layer {
        &self.layers[self.layers.len() - 1]
    }

    /// Total number of ReLU units.
    pub fn relu_count(&self) -> usize {
        self.relu_layers().iter().map(Layer::output_dim).sum()
    }

    /// Exact network output.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("network input", self.input_dim(), x.len())?;
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    /// Naive interval bound propagation through every layer.
    pub fn interval_forward(&self, input: &IntervalVector) -> Result<IntervalVector> {
        check_len("network input interval", self.input_dim(), input.len())?;
        let mut cur = input.clone();
        for layer in &self.layers {
            cur = layer.interval_forward(&cur)?;
        }
        Ok(cur)
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Network::from_json_str(&text)
}

/// Writes the network as JSON. Numbers use the shortest representation that
/// parses back to the identical double.
pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, net.to_json_string()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Random network with layer widths `dims = [n0, n1, ..., n_out]`.
///
/// Weights are Gaussian with standard deviation `1/sqrt(fan_in)`, biases
/// Gaussian with standard deviation 0.1.
pub fn random_network(dims: &[usize], seed: u64) -> Result<Network> {
    if dims.len() < 2 {
        return Err(Error::InvalidNetwork(
            "need at least an input and an output width".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bias_dist = Normal::new(0.0, 0.1).expect("valid normal");
    let n_layers = dims.len() - 1;
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(k, pair)| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let w_dist = Normal::new(0.0, 1.0 / (fan_in.max(1) as f64).sqrt()).expect("valid normal");
            let data = (0..fan_in * fan_out).map(|_| w_dist.sample(&mut rng)).collect();
            let weights = Matrix::from_row_major(fan_out, fan_in, data)?;
            let bias = (0..fan_out).map(|_| bias_dist.sample(&mut rng)).collect();
            Ok(Layer::new(weights, bias, k + 1 < n_layers))
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_layer() -> Network {
        Network::from_json_str(
            r#"{"layers": [
                {"weights": [[2]], "bias": [-1], "relu": true},
                {"weights": [[1]], "bias": [0], "relu": false}
            ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn identity_network_loads() {
        let net = Network::from_json_str(r#"{"layers": [{"weights": [[1]], "bias": [0], "relu": false}]}"#).unwrap();
        assert_eq!(net.layers().len(), 1);
        assert_eq!(net.input_dim(), 1);
        assert_eq!(net.output_dim(), 1);
        assert_eq!(net.relu_layers().len(), 0);
    }

    #[test]
    fn mismatched_layers_name_second_layer() {
        let err = Network::from_json_str(
            r#"{"layers": [
                {"weights": [[1,0],[0,1],[1,1]], "bias": [0,0,0], "relu": true},
                {"weights": [[1,1,1,1]], "bias": [0], "relu": false}
            ]}"#,
        )
        .unwrap_err();
        match err {
            Error::DimensionMismatch {
                context,
                expected,
                found,
            } => {
                assert!(context.contains("layer 2"), "{context}");
                assert_eq!((expected, found), (3, 4));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_numeric_token_is_parse_error() {
        let err =
            Network::from_json_str(r#"{"layers": [{"weights": [[1, "x"]], "bias": [0], "relu": false}]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn non_finite_weights_rejected_with_layer_number() {
        let layers = vec![
            Layer::new(Matrix::identity(1), vec![0.0], true),
            Layer::new(Matrix::from_rows(vec![vec![f64::NAN]]).unwrap(), vec![0.0], false),
        ];
        assert!(matches!(
            Network::new(layers),
            Err(Error::NonFinite {
                layer: 2,
                what: "weights"
            })
        ));
    }

    #[test]
    fn relu_layout_enforced() {
        let relu_last = r#"{"layers": [{"weights": [[1]], "bias": [0], "relu": true}]}"#;
        assert!(matches!(
            Network::from_json_str(relu_last),
            Err(Error::InvalidNetwork(_))
        ));
        let bias_short = r#"{"layers": [{"weights": [[1],[2]], "bias": [0], "relu": false}]}"#;
        assert!(matches!(
            Network::from_json_str(bias_short),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn forward_hand_values() {
        let net = two_layer();
        // relu(2*3 - 1) = 5
        assert_eq!(net.forward(&[3.0]).unwrap(), vec![5.0]);
        // relu(-1) = 0
        assert_eq!(net.forward(&[0.0]).unwrap(), vec![0.0]);
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn interval_forward_single_relu() {
        let net = Network::new(vec![
            Layer::new(Matrix::identity(1), vec![0.0], true),
            Layer::new(Matrix::identity(1), vec![0.0], false),
        ])
        .unwrap();
        let out = net
            .interval_forward(&IntervalVector::new(vec![-2.0], vec![3.0]).unwrap())
            .unwrap();
        assert_eq!(out.lower(), &[0.0]);
        assert_eq!(out.upper(), &[3.0]);
    }

    #[test]
    fn interval_forward_degenerate_is_exact() {
        let net = random_network(&[3, 8, 8, 2], 7).unwrap();
        let x = [0.3, -1.2, 2.5];
        let out = net.interval_forward(&IntervalVector::degenerate(&x)).unwrap();
        let y = net.forward(&x).unwrap();
        assert_eq!(out.lower(), y.as_slice());
        assert_eq!(out.upper(), y.as_slice());
    }

    #[test]
    fn save_load_roundtrip_is_exact() {
        let net = random_network(&[2, 5, 1], 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        save_network(&net, &path).unwrap();
        assert_eq!(load_network(&path).unwrap(), net);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_network("/nonexistent/net.json"), Err(Error::Io { .. })));
    }
}
