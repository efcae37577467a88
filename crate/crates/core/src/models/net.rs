//! Sequential layer stack with per-sample forward traces.

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::tensor::{ops, Param, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv {
        w: usize,
        b: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    MaxPool {
        size: usize,
    },
    /// `None` entries mean "window equal to the current length".
    Ppp {
        windows: Vec<Option<usize>>,
    },
    Flatten,
    Dense {
        w: usize,
        b: usize,
    },
    Dropout {
        p: f64,
    },
    Sigmoid,
}

enum Aux {
    None,
    Argmax(Vec<usize>, Vec<usize>),
    Output(Vec<f64>),
    Scale(Option<Vec<f64>>),
}

/// Values cached by [`Network::forward`] for the backward pass.
pub struct Trace {
    inputs: Vec<Tensor>,
    aux: Vec<Aux>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    /// Product of conv strides and pool sizes, i.e. input points per output row.
    pub fn downsampling(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Conv { stride, .. } => *stride,
                Layer::MaxPool { size } => *size,
                _ => 1,
            })
            .product()
    }

    pub fn forward<R: Rng>(
        &self,
        params: &[Param],
        input: Tensor,
        training: bool,
        rng: &mut R,
    ) -> Result<(Tensor, Trace)> {
        let mut trace = Trace {
            inputs: Vec::with_capacity(self.layers.len()),
            aux: Vec::with_capacity(self.layers.len()),
        };
        let mut x = input;
        for layer in &self.layers {
            let (y, aux) = match layer {
                Layer::Conv { w, b, stride, padding } => (
                    ops::conv1d(&x, &params[*w].value, &params[*b].value, *stride, *padding)?,
                    Aux::None,
                ),
                Layer::Relu => {
                    let mut y = x.clone();
                    ops::relu(y.data_mut());
                    let out = y.data().to_vec();
                    (y, Aux::Output(out))
                }
                Layer::MaxPool { size } => {
                    if *size == 1 {
                        (x.clone(), Aux::None)
                    } else {
                        let (y, arg) = ops::maxpool1d(&x, *size, *size, true)?;
                        (y, Aux::Argmax(arg, x.shape().to_vec()))
                    }
                }
                Layer::Ppp { windows } => {
                    let len = *x.shape().last().unwrap_or(&0);
                    let ks: Vec<usize> = windows.iter().map(|w| w.unwrap_or(len).min(len)).collect();
                    let (y, arg) = ops::ppp(&x, &ks)?;
                    (y, Aux::Argmax(arg, x.shape().to_vec()))
                }
                Layer::Flatten => {
                    let n = x.len();
                    (x.clone().reshape(&[n])?, Aux::None)
                }
                Layer::Dense { w, b } => {
                    let y = ops::dense(x.data(), &params[*w].value, &params[*b].value)?;
                    let n = y.len();
                    (Tensor::from_vec(&[n], y)?, Aux::None)
                }
                Layer::Dropout { p } => {
                    let mut y = x.clone();
                    let scale = ops::dropout(y.data_mut(), *p, training, rng);
                    (y, Aux::Scale(scale))
                }
                Layer::Sigmoid => {
                    let mut y = x.clone();
                    ops::sigmoid(y.data_mut());
                    let out = y.data().to_vec();
                    (y, Aux::Output(out))
                }
            };
            trace.inputs.push(x);
            trace.aux.push(aux);
            x = y;
        }
        Ok((x, trace))
    }

    pub fn infer(&self, params: &[Param], input: Tensor) -> Result<Tensor> {
        // dropout is inactive, so the rng is never drawn from
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        Ok(self.forward(params, input, false, &mut rng)?.0)
    }

    /// Accumulate parameter gradients into `grads` (one buffer per param).
    /// The input gradient of the first layer is not computed.
    pub fn backward(&self, params: &[Param], trace: Trace, dy: Tensor, grads: &mut [Tensor]) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::Shape("gradient buffers do not match parameters".into()));
        }
        let mut g = dy;
        let Trace { inputs, aux } = trace;
        for (idx, ((layer, x), aux)) in self.layers.iter().zip(inputs).zip(aux).enumerate().rev() {
            let need_dx = idx > 0;
            g = match (layer, aux) {
                (Layer::Conv { w, b, stride, padding }, _) => {
                    let mut dx = need_dx.then(|| Tensor::zeros(x.shape()));
                    let (gw, gb) = two_mut(grads, *w, *b);
                    ops::conv1d_backward(&x, &params[*w].value, &g, *stride, *padding, dx.as_mut(), gw, gb)?;
                    dx.unwrap_or_else(|| Tensor::zeros(&[0]))
                }
                (Layer::Relu, Aux::Output(out)) => {
                    ops::relu_backward(&out, g.data_mut());
                    g
                }
                (Layer::MaxPool { .. }, Aux::None) => g,
                (Layer::MaxPool { .. } | Layer::Ppp { .. }, Aux::Argmax(arg, shape)) => {
                    let mut dx = Tensor::zeros(&shape);
                    ops::max_backward(g.data(), &arg, dx.data_mut());
                    dx
                }
                (Layer::Flatten, _) => g.reshape(x.shape())?,
                (Layer::Dense { w, b }, _) => {
                    let (gw, gb) = two_mut(grads, *w, *b);
                    let dx = ops::dense_backward(x.data(), &params[*w].value, g.data(), gw, gb, need_dx);
                    match dx {
                        Some(d) => Tensor::from_vec(x.shape(), d)?,
                        None => Tensor::zeros(&[0]),
                    }
                }
                (Layer::Dropout { .. }, Aux::Scale(scale)) => {
                    if let Some(s) = scale {
                        for (v, k) in g.data_mut().iter_mut().zip(&s) {
                            *v *= k;
                        }
                    }
                    g
                }
                (Layer::Sigmoid, Aux::Output(out)) => {
                    ops::sigmoid_backward(&out, g.data_mut());
                    g
                }
                _ => return Err(Error::Shape("corrupt forward trace".into())),
            };
        }
        Ok(())
    }
}

fn two_mut(v: &mut [Tensor], a: usize, b: usize) -> (&mut Tensor, &mut Tensor) {
    assert!(a < b, "weight index precedes bias index");
    let (lo, hi) = v.split_at_mut(b);
    (&mut lo[a], &mut hi[0])
}
