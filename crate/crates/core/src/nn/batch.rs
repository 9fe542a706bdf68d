//! Batched forward/backward passes; one row per sample.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis, Zip};

use super::{LayerShape, MlpArch};
use crate::{Error, Result};

/// Intermediate values recorded by [`forward_tape`] for [`backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

fn weights(layer: LayerShape, params: &[f64]) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((layer.n_out, layer.n_in), &params[layer.weights()])
        .expect("layout matches layer shape")
}

fn check(arch: &MlpArch, params: &[f64], x: &ArrayView2<'_, f64>) -> Result<()> {
    arch.check_params(params)?;
    if x.ncols() != arch.input_dim() {
        return Err(Error::dims("batch input columns", arch.input_dim(), x.ncols()));
    }
    Ok(())
}

fn affine(layer: LayerShape, params: &[f64], x: &ArrayView2<'_, f64>) -> Array2<f64> {
    let mut z = Array2::zeros((x.nrows(), layer.n_out));
    general_mat_mul(1.0, x, &weights(layer, params).t(), 0.0, &mut z);
    let bias = ArrayView1::from(&params[layer.bias()]);
    z += &bias;
    z
}

pub fn forward(arch: &MlpArch, params: &[f64], x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check(arch, params, &x)?;
    let mut act: Option<Array2<f64>> = None;
    for (l, layer) in arch.layers().enumerate() {
        let z = affine(layer, params, &act.as_ref().map_or(x.view(), |a| a.view()));
        act = Some(z.mapv_into(|v| arch.activate(l, v)));
    }
    Ok(act.expect("at least one layer"))
}

pub fn forward_tape(
    arch: &MlpArch,
    params: &[f64],
    x: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, Tape)> {
    check(arch, params, &x)?;
    let mut tape = Tape {
        inputs: Vec::with_capacity(arch.num_layers()),
        pre_activations: Vec::with_capacity(arch.num_layers()),
    };
    let mut act = x.to_owned();
    for (l, layer) in arch.layers().enumerate() {
        let z = affine(layer, params, &act.view());
        let next = z.mapv(|v| arch.activate(l, v));
        tape.inputs.push(std::mem::replace(&mut act, next));
        tape.pre_activations.push(z);
    }
    Ok((act, tape))
}

/// Back-propagates `out_grad` (one row per sample) through the recorded
/// pass. Parameter gradients, summed over the batch, are written into
/// `param_grad` when given. Returns the gradient with respect to the input.
pub fn backward(
    arch: &MlpArch,
    params: &[f64],
    tape: &Tape,
    out_grad: ArrayView2<'_, f64>,
    mut param_grad: Option<&mut [f64]>,
) -> Result<Array2<f64>> {
    arch.check_params(params)?;
    let rows = tape.inputs[0].nrows();
    if out_grad.dim() != (rows, arch.output_dim()) {
        return Err(Error::dims(
            "output gradient columns",
            arch.output_dim(),
            out_grad.ncols(),
        ));
    }
    if let Some(g) = &param_grad {
        if g.len() != params.len() {
            return Err(Error::dims("parameter gradient", params.len(), g.len()));
        }
    }

    let layers: Vec<LayerShape> = arch.layers().collect();
    let mut upstream = out_grad.to_owned();
    for (l, &layer) in layers.iter().enumerate().rev() {
        Zip::from(&mut upstream)
            .and(&tape.pre_activations[l])
            .for_each(|g, &z| *g *= arch.activate_grad(l, z));
        let delta = upstream;
        if let Some(grad) = param_grad.as_deref_mut() {
            let (w_part, rest) = grad[layer.offset..].split_at_mut(layer.n_in * layer.n_out);
            let mut dw = ArrayViewMut2::from_shape((layer.n_out, layer.n_in), w_part)
                .expect("layout matches layer shape");
            general_mat_mul(1.0, &delta.t(), &tape.inputs[l], 0.0, &mut dw);
            let db = delta.sum_axis(Axis(0));
            rest[..layer.n_out].copy_from_slice(db.as_slice().expect("contiguous"));
        }
        upstream = delta.dot(&weights(layer, params));
    }
    Ok(upstream)
}
