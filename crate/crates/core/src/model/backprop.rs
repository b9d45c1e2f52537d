use ndarray::{Array2, ArrayView2, Axis};

use super::{softmax_rows, Gradients, Layer, ModelParams};
use crate::error::{Error, Result};

/// Activations kept from a forward pass for reuse in the backward pass.
pub(crate) struct Tape {
    /// Post-ReLU hidden activations (hidden-layer architecture only).
    pub hidden: Option<Array2<f64>>,
    pub logits: Array2<f64>,
}

/// Gradient of `(1/|B|) Σ w_i · ce_i` with respect to every parameter.
///
/// The weights are constants: no gradient flows into them.
pub fn backward(
    params: &ModelParams,
    features: ArrayView2<f64>,
    labels: &[usize],
    weights: &[f64],
) -> Result<Gradients> {
    for (i, w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFinite("per-sample weights"));
        }
        if *w < 0.0 {
            return Err(Error::NegativeWeight(i));
        }
    }
    backward_signed(params, features, labels, weights)
}

/// As [`backward`] but accepts coefficients of either sign.
pub(crate) fn backward_signed(
    params: &ModelParams,
    features: ArrayView2<f64>,
    labels: &[usize],
    coefficients: &[f64],
) -> Result<Gradients> {
    let tape = params.forward_tape(features)?;
    backward_tape(params, features, &tape, labels, coefficients)
}

pub(crate) fn backward_tape(
    params: &ModelParams,
    features: ArrayView2<f64>,
    tape: &Tape,
    labels: &[usize],
    coefficients: &[f64],
) -> Result<Gradients> {
    let n = features.nrows();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    for len in [labels.len(), coefficients.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: len,
            });
        }
    }
    if !coefficients.iter().all(|c| c.is_finite()) {
        return Err(Error::NonFinite("per-sample weights"));
    }
    let classes = params.num_classes();

    // dL/dz = (w_i / n) · (softmax(z_i) - onehot(y_i))
    let mut dz = softmax_rows(tape.logits.view());
    for ((mut row, &y), &c) in dz.axis_iter_mut(Axis(0)).zip(labels).zip(coefficients) {
        if y >= classes {
            return Err(Error::InvalidLabel { label: y, classes });
        }
        row[y] -= 1.0;
        row *= c / n as f64;
    }

    let layers = match (params.layers(), &tape.hidden) {
        ([_], None) => vec![Layer {
            weights: features.t().dot(&dz),
            bias: dz.sum_axis(Axis(0)),
        }],
        ([_, out], Some(hidden)) => {
            let mut dh = dz.dot(&out.weights.t());
            dh.zip_mut_with(hidden, |g, &h| {
                if h <= 0.0 {
                    *g = 0.0;
                }
            });
            vec![
                Layer {
                    weights: features.t().dot(&dh),
                    bias: dh.sum_axis(Axis(0)),
                },
                Layer {
                    weights: hidden.t().dot(&dz),
                    bias: dz.sum_axis(Axis(0)),
                },
            ]
        }
        _ => unreachable!("tape does not match architecture"),
    };
    Ok(Gradients {
        layers: layers
            .into_iter()
            .map(|l| Layer {
                weights: l.weights.as_standard_layout().into_owned(),
                bias: l.bias,
            })
            .collect(),
    })
}
