//! Small from-scratch classifier: a linear map or a one-hidden-layer ReLU
//! network, with hand-derived gradients and an AdamW optimizer.
//!
//! Weight matrices are stored `fan_in × fan_out`, so a batch `X` (rows are
//! samples) maps to logits as `X · W + b`.

mod backprop;
mod checkpoint;
mod optim;

pub use backprop::backward;
pub(crate) use backprop::{backward_tape, Tape};
pub use checkpoint::TensorFile;
pub use optim::{optimizer_step, AdamWConfig, OptimizerState};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Linear,
    OneHidden { width: usize },
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture::OneHidden { width: 32 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let weights =
            Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..=bound));
        let bias = Array1::from_shape_simple_fn(fan_out, || rng.random_range(-bound..=bound));
        Self { weights, bias }
    }

    fn affine(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weights) + &self.bias
    }

    pub(crate) fn slices(&self) -> [&[f64]; 2] {
        [
            self.weights.as_slice().expect("standard layout"),
            self.bias.as_slice().expect("standard layout"),
        ]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 2] {
        [
            self.weights.as_slice_mut().expect("standard layout"),
            self.bias.as_slice_mut().expect("standard layout"),
        ]
    }

    fn same_shape(&self, other: &Layer) -> bool {
        self.weights.dim() == other.weights.dim() && self.bias.len() == other.bias.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    architecture: Architecture,
    input_dim: usize,
    num_classes: usize,
    layers: Vec<Layer>,
}

/// Gradient record with the same layer layout as [`ModelParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

fn layer_dims(
    architecture: Architecture,
    input_dim: usize,
    num_classes: usize,
) -> Vec<(usize, usize)> {
    match architecture {
        Architecture::Linear => vec![(input_dim, num_classes)],
        Architecture::OneHidden { width } => vec![(input_dim, width), (width, num_classes)],
    }
}

impl ModelParams {
    /// Seeded uniform initialization in `±1/sqrt(fan_in)`.
    pub fn init<R: Rng + ?Sized>(
        architecture: Architecture,
        input_dim: usize,
        num_classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Self::check_dims(architecture, input_dim, num_classes)?;
        let layers = layer_dims(architecture, input_dim, num_classes)
            .into_iter()
            .map(|(i, o)| Layer::uniform(i, o, rng))
            .collect();
        Ok(Self {
            architecture,
            input_dim,
            num_classes,
            layers,
        })
    }

    pub fn zeros(architecture: Architecture, input_dim: usize, num_classes: usize) -> Result<Self> {
        Self::check_dims(architecture, input_dim, num_classes)?;
        let layers = layer_dims(architecture, input_dim, num_classes)
            .into_iter()
            .map(|(i, o)| Layer::zeros(i, o))
            .collect();
        Ok(Self {
            architecture,
            input_dim,
            num_classes,
            layers,
        })
    }

    /// Build from explicit layers, checking shapes against the architecture.
    pub fn from_layers(
        architecture: Architecture,
        input_dim: usize,
        num_classes: usize,
        layers: Vec<Layer>,
    ) -> Result<Self> {
        Self::check_dims(architecture, input_dim, num_classes)?;
        let dims = layer_dims(architecture, input_dim, num_classes);
        if dims.len() != layers.len() {
            return Err(Error::DimensionMismatch {
                expected: dims.len(),
                found: layers.len(),
            });
        }
        for ((i, o), layer) in dims.iter().zip(&layers) {
            if layer.weights.dim() != (*i, *o) || layer.bias.len() != *o {
                return Err(Error::DimensionMismatch {
                    expected: i * o,
                    found: layer.weights.len(),
                });
            }
        }
        let params = Self {
            architecture,
            input_dim,
            num_classes,
            layers: layers
                .into_iter()
                .map(|l| Layer {
                    weights: l.weights.as_standard_layout().into_owned(),
                    bias: l.bias.as_standard_layout().into_owned(),
                })
                .collect(),
        };
        if !params.is_finite() {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(params)
    }

    fn check_dims(architecture: Architecture, input_dim: usize, num_classes: usize) -> Result<()> {
        if input_dim == 0 {
            return Err(Error::InvalidConfig(
                "input dimension must be positive".into(),
            ));
        }
        if num_classes < 2 {
            return Err(Error::InvalidConfig("need at least 2 classes".into()));
        }
        if architecture == (Architecture::OneHidden { width: 0 }) {
            return Err(Error::InvalidConfig("hidden width must be positive".into()));
        }
        Ok(())
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .flat_map(|l| l.slices())
            .all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Logits for a `batch × input_dim` feature matrix.
    pub fn forward(&self, features: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_tape(features)?.logits)
    }

    pub(crate) fn forward_tape(&self, features: ArrayView2<f64>) -> Result<Tape> {
        if features.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: features.ncols(),
            });
        }
        let tape = match self.layers.as_slice() {
            [out] => Tape {
                hidden: None,
                logits: out.affine(features),
            },
            [first, out] => {
                let hidden = first.affine(features).mapv_into(|v| v.max(0.0));
                let logits = out.affine(hidden.view());
                Tape {
                    hidden: Some(hidden),
                    logits,
                }
            }
            _ => unreachable!("architectures have one or two layers"),
        };
        if !tape.logits.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("logits"));
        }
        Ok(tape)
    }

    pub(crate) fn same_shape(&self, grads: &Gradients) -> bool {
        self.layers.len() == grads.layers.len()
            && self
                .layers
                .iter()
                .zip(&grads.layers)
                .all(|(a, b)| a.same_shape(b))
    }
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| Layer::zeros(l.weights.nrows(), l.weights.ncols()))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .flat_map(|l| l.slices())
            .all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.slices())
            .flat_map(|s| s.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// All entries in layer order (weights row-major, then bias).
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.slices())
            .flat_map(|s| s.iter().copied())
            .collect()
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let z = row.sum();
        row.mapv_inplace(|v| v / z);
    }
    out
}

/// Per-row cross-entropy `-log softmax(z)[label]`, via a stable log-sum-exp.
pub fn per_sample_ce(logits: ArrayView2<f64>, labels: &[usize]) -> Result<Vec<f64>> {
    if logits.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: logits.nrows(),
            right: labels.len(),
        });
    }
    let classes = logits.ncols();
    logits
        .axis_iter(Axis(0))
        .zip(labels)
        .map(|(row, &label)| {
            if label >= classes {
                return Err(Error::InvalidLabel { label, classes });
            }
            let (arg, m) =
                row.iter()
                    .enumerate()
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |(ia, a), (i, &b)| if b > a { (i, b) } else { (ia, a) },
                    );
            let rest: f64 = row
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != arg)
                .map(|(_, &v)| (v - m).exp())
                .sum();
            let loss = m + rest.ln_1p() - row[label];
            if !loss.is_finite() {
                return Err(Error::NonFinite("cross-entropy"));
            }
            Ok(loss.max(0.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_affine(x: &Array2<f64>, layer: &Layer) -> Array2<f64> {
        let (n, d) = x.dim();
        let k = layer.weights.ncols();
        let mut out = Array2::zeros((n, k));
        for i in 0..n {
            for j in 0..k {
                let mut acc = layer.bias[j];
                for t in 0..d {
                    acc += x[[i, t]] * layer.weights[[t, j]];
                }
                out[[i, j]] = acc;
            }
        }
        out
    }

    #[test]
    fn zero_model_gives_zero_logits() {
        let p = ModelParams::zeros(Architecture::OneHidden { width: 3 }, 4, 2).unwrap();
        let x = array![[1.0, -2.0, 3.0, 0.5], [0.1, 0.2, 0.3, 0.4]];
        assert!(p.forward(x.view()).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn affine_one_by_one() {
        // K = 2 is the minimum, so check the first logit of a 1-input linear map.
        let layer = Layer {
            weights: array![[2.0, 0.0]],
            bias: array![1.0, 0.0],
        };
        let p = ModelParams::from_layers(Architecture::Linear, 1, 2, vec![layer]).unwrap();
        let z = p.forward(array![[3.0]].view()).unwrap();
        assert_eq!(z[[0, 0]], 7.0);
    }

    #[test]
    fn forward_matches_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for arch in [Architecture::Linear, Architecture::OneHidden { width: 5 }] {
            let p = ModelParams::init(arch, 6, 3, &mut rng).unwrap();
            let x = Array2::from_shape_simple_fn((7, 6), || rng.random_range(-2.0..2.0));
            let got = p.forward(x.view()).unwrap();
            let want = match p.layers() {
                [l] => naive_affine(&x, l),
                [l1, l2] => naive_affine(&naive_affine(&x, l1).mapv(|v| v.max(0.0)), l2),
                _ => unreachable!(),
            };
            for (a, b) in got.iter().zip(want.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = ModelParams::zeros(Architecture::Linear, 3, 2).unwrap();
        assert!(matches!(
            p.forward(Array2::zeros((2, 4)).view()),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 4
            })
        ));
    }

    #[test]
    fn init_is_bounded_and_seeded() {
        let mk = |s| {
            ModelParams::init(
                Architecture::OneHidden { width: 8 },
                16,
                2,
                &mut ChaCha8Rng::seed_from_u64(s),
            )
            .unwrap()
        };
        let a = mk(1);
        assert_eq!(a, mk(1));
        assert_ne!(a, mk(2));
        let bound = 1.0 / 4.0;
        assert!(a.layers()[0].weights.iter().all(|v| v.abs() <= bound));
        assert_eq!(a.num_params(), 16 * 8 + 8 + 8 * 2 + 2);
    }

    #[test]
    fn ce_uniform_and_saturated() {
        let l = per_sample_ce(array![[0.0, 0.0], [0.0, 0.0]].view(), &[0, 1]).unwrap();
        for v in l {
            assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        }
        let l = per_sample_ce(array![[30.0, -30.0]].view(), &[0]).unwrap();
        assert!(l[0] < 1e-9);
    }

    #[test]
    fn ce_matches_direct_softmax_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let z = Array2::from_shape_simple_fn((4, 3), || rng.random_range(-8.0..8.0));
            let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..3)).collect();
            let got = per_sample_ce(z.view(), &labels).unwrap();
            for (i, &y) in labels.iter().enumerate() {
                let total: f64 = z.row(i).iter().map(|v| v.exp()).sum();
                let want = -(z[[i, y]].exp() / total).ln();
                assert!((got[i] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ce_rejects_bad_label() {
        assert!(matches!(
            per_sample_ce(array![[0.0, 1.0]].view(), &[2]),
            Err(Error::InvalidLabel {
                label: 2,
                classes: 2
            })
        ));
    }

    #[test]
    fn ce_is_permutation_equivariant() {
        let z = array![[0.3, -1.0], [2.0, 0.1], [-0.4, 0.4]];
        let labels = [1, 0, 1];
        let base = per_sample_ce(z.view(), &labels).unwrap();
        let perm = [2, 0, 1];
        let zp = z.select(Axis(0), &perm);
        let lp: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
        let got = per_sample_ce(zp.view(), &lp).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(got[k], base[i]);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = softmax_rows(array![[1000.0, 999.0, -5.0]].view());
        assert!((p.sum() - 1.0).abs() < 1e-15);
        assert!(p[[0, 0]] > p[[0, 1]]);
    }
}
