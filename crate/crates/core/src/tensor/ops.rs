//! Forward and backward kernels. Sequence tensors are channel-major
//! (`C x L`); dense layers act on flat vectors.

use rand::Rng;

use super::Tensor;
use crate::error::{Error, Result};

fn shape_err<T>(msg: String) -> Result<T> {
    Err(Error::Shape(msg))
}

/// Output length of a 1-D convolution.
pub fn conv_out_len(len: usize, ks: usize, stride: usize, padding: usize) -> Option<usize> {
    let span = len + 2 * padding;
    if stride == 0 || ks == 0 || span < ks {
        return None;
    }
    Some((span - ks) / stride + 1)
}

fn check_conv(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize, padding: usize) -> Result<(usize, usize, usize, usize, usize)> {
    if x.shape().len() != 2 || w.shape().len() != 3 || b.shape().len() != 1 {
        return shape_err(format!(
            "conv1d expects x: C x L, w: O x C x K, b: O; got {:?}, {:?}, {:?}",
            x.shape(),
            w.shape(),
            b.shape()
        ));
    }
    let (c_in, len) = (x.dim(0), x.dim(1));
    let (c_out, wc, ks) = (w.dim(0), w.dim(1), w.dim(2));
    if wc != c_in || b.dim(0) != c_out {
        return shape_err(format!(
            "conv1d channel mismatch: x has {c_in}, w expects {wc}, bias {} for {c_out}",
            b.dim(0)
        ));
    }
    let out = conv_out_len(len, ks, stride, padding).ok_or_else(|| {
        Error::Shape(format!("conv1d: kernel {ks} does not fit length {len} with padding {padding}"))
    })?;
    Ok((c_in, len, c_out, ks, out))
}

fn padded(x: &[f64], c_in: usize, len: usize, padding: usize) -> Vec<f64> {
    let plen = len + 2 * padding;
    let mut xp = vec![0.0; c_in * plen];
    for c in 0..c_in {
        xp[c * plen + padding..c * plen + padding + len].copy_from_slice(&x[c * len..(c + 1) * len]);
    }
    xp
}

/// Cross-correlation `y[o, l] = b[o] + sum_{c,t} w[o, c, t] * x_pad[c, l*stride + t]`.
pub fn conv1d(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize, padding: usize) -> Result<Tensor> {
    let (c_in, len, c_out, ks, out) = check_conv(x, w, b, stride, padding)?;
    let plen = len + 2 * padding;
    let xp = padded(x.data(), c_in, len, padding);
    let wd = w.data();
    let mut y = vec![0.0; c_out * out];
    for o in 0..c_out {
        let yo = &mut y[o * out..(o + 1) * out];
        yo.fill(b.data()[o]);
        for c in 0..c_in {
            let xc = &xp[c * plen..(c + 1) * plen];
            for t in 0..ks {
                let wv = wd[(o * c_in + c) * ks + t];
                if stride == 1 {
                    for (yv, xv) in yo.iter_mut().zip(&xc[t..t + out]) {
                        *yv += wv * xv;
                    }
                } else {
                    for (l, yv) in yo.iter_mut().enumerate() {
                        *yv += wv * xc[l * stride + t];
                    }
                }
            }
        }
    }
    Tensor::from_vec(&[c_out, out], y)
}

/// Accumulates `dw`, `db` and (when given) `dx` from the output gradient.
pub fn conv1d_backward(
    x: &Tensor,
    w: &Tensor,
    dy: &Tensor,
    stride: usize,
    padding: usize,
    dx: Option<&mut Tensor>,
    dw: &mut Tensor,
    db: &mut Tensor,
) -> Result<()> {
    let (c_in, len, c_out, ks, out) = check_conv(x, w, db, stride, padding)?;
    if dy.shape() != [c_out, out] || dw.shape() != w.shape() {
        return shape_err(format!("conv1d backward: dy {:?}, expected [{c_out}, {out}]", dy.shape()));
    }
    let plen = len + 2 * padding;
    let xp = padded(x.data(), c_in, len, padding);
    let want_dx = dx.is_some();
    let mut dxp = if want_dx { vec![0.0; c_in * plen] } else { Vec::new() };
    let wd = w.data();
    let dyd = dy.data();
    let dwd = dw.data_mut();
    for o in 0..c_out {
        let dyo = &dyd[o * out..(o + 1) * out];
        db.data_mut()[o] += dyo.iter().sum::<f64>();
        for c in 0..c_in {
            let xc = &xp[c * plen..(c + 1) * plen];
            for t in 0..ks {
                let widx = (o * c_in + c) * ks + t;
                if stride == 1 {
                    dwd[widx] += dyo.iter().zip(&xc[t..t + out]).map(|(a, b)| a * b).sum::<f64>();
                    if want_dx {
                        let wv = wd[widx];
                        let dxc = &mut dxp[c * plen + t..c * plen + t + out];
                        for (d, g) in dxc.iter_mut().zip(dyo) {
                            *d += wv * g;
                        }
                    }
                } else {
                    let mut acc = 0.0;
                    for (l, g) in dyo.iter().enumerate() {
                        acc += g * xc[l * stride + t];
                        if want_dx {
                            dxp[c * plen + l * stride + t] += wd[widx] * g;
                        }
                    }
                    dwd[widx] += acc;
                }
            }
        }
    }
    if let Some(dx) = dx {
        if dx.shape() != x.shape() {
            return shape_err(format!("conv1d backward: dx {:?} vs x {:?}", dx.shape(), x.shape()));
        }
        let dxd = dx.data_mut();
        for c in 0..c_in {
            for l in 0..len {
                dxd[c * len + l] += dxp[c * plen + padding + l];
            }
        }
    }
    Ok(())
}

/// Output length of max-pooling. In ceil mode a trailing partial window is
/// kept as long as it starts inside the input.
pub fn pool_out_len(len: usize, size: usize, stride: usize, ceil_mode: bool) -> Option<usize> {
    if size == 0 || stride == 0 || len == 0 {
        return None;
    }
    if len < size {
        return if ceil_mode { Some(1) } else { None };
    }
    let span = len - size;
    Some(if ceil_mode { span.div_ceil(stride) } else { span / stride } + 1)
}

/// Max-pooling over each channel of a `C x L` tensor. Returns the pooled
/// tensor and, per output element, the flat index of the input maximum.
pub fn maxpool1d(x: &Tensor, size: usize, stride: usize, ceil_mode: bool) -> Result<(Tensor, Vec<usize>)> {
    if x.shape().len() != 2 {
        return shape_err(format!("maxpool1d expects C x L, got {:?}", x.shape()));
    }
    let (c, len) = (x.dim(0), x.dim(1));
    let out = pool_out_len(len, size, stride, ceil_mode)
        .ok_or_else(|| Error::Shape(format!("maxpool1d: window {size} does not fit length {len}")))?;
    let xd = x.data();
    let mut y = vec![0.0; c * out];
    let mut arg = vec![0; c * out];
    for ch in 0..c {
        let row = &xd[ch * len..(ch + 1) * len];
        for j in 0..out {
            let start = j * stride;
            let end = (start + size).min(len);
            let mut best = start;
            for i in start + 1..end {
                if row[i] > row[best] {
                    best = i;
                }
            }
            y[ch * out + j] = row[best];
            arg[ch * out + j] = ch * len + best;
        }
    }
    Ok((Tensor::from_vec(&[c, out], y)?, arg))
}

/// Route output gradients back through recorded argmax positions.
pub fn max_backward(dy: &[f64], argmax: &[usize], dx: &mut [f64]) {
    for (g, &i) in dy.iter().zip(argmax) {
        dx[i] += g;
    }
}

/// Pointwise pyramid pooling on a `C x L` map: for every window size, a
/// stride-1 max-pool whose output keeps length `L`. The window at position
/// `i` is centred on `i` and shifted to stay inside the sequence, so a
/// window of size `L` is the global max everywhere. The result stacks
/// `[x, pool(k_1), ..., pool(k_q)]` along channels.
pub fn ppp(x: &Tensor, windows: &[usize]) -> Result<(Tensor, Vec<usize>)> {
    if x.shape().len() != 2 {
        return shape_err(format!("ppp expects C x L, got {:?}", x.shape()));
    }
    let (c, len) = (x.dim(0), x.dim(1));
    for &k in windows {
        if k == 0 || k > len {
            return shape_err(format!("ppp window {k} invalid for length {len}"));
        }
    }
    let q = windows.len();
    let xd = x.data();
    let mut y = vec![0.0; c * (q + 1) * len];
    let mut arg = vec![0; c * (q + 1) * len];
    y[..c * len].copy_from_slice(xd);
    for (i, a) in arg[..c * len].iter_mut().enumerate() {
        *a = i;
    }
    for (wi, &k) in windows.iter().enumerate() {
        let half = (k - 1) / 2;
        for ch in 0..c {
            let row = &xd[ch * len..(ch + 1) * len];
            let base = ((wi + 1) * c + ch) * len;
            for i in 0..len {
                let start = i.saturating_sub(half).min(len - k);
                let mut best = start;
                for j in start + 1..start + k {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                y[base + i] = row[best];
                arg[base + i] = ch * len + best;
            }
        }
    }
    Ok((Tensor::from_vec(&[c * (q + 1), len], y)?, arg))
}

/// `y = W x + b` with `W: out x in`.
pub fn dense(x: &[f64], w: &Tensor, b: &Tensor) -> Result<Vec<f64>> {
    if w.shape().len() != 2 || w.dim(1) != x.len() || b.len() != w.dim(0) {
        return shape_err(format!(
            "dense: x of {} against w {:?}, b {:?}",
            x.len(),
            w.shape(),
            b.shape()
        ));
    }
    let n_in = x.len();
    Ok(w.data()
        .chunks_exact(n_in)
        .zip(b.data())
        .map(|(row, bias)| bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .collect())
}

/// Accumulates `dw`, `db`; returns `dx = W^T dy` when requested.
pub fn dense_backward(
    x: &[f64],
    w: &Tensor,
    dy: &[f64],
    dw: &mut Tensor,
    db: &mut Tensor,
    want_dx: bool,
) -> Option<Vec<f64>> {
    let n_in = x.len();
    let mut dx = if want_dx { vec![0.0; n_in] } else { Vec::new() };
    let wd = w.data();
    let dwd = dw.data_mut();
    for (o, &g) in dy.iter().enumerate() {
        db.data_mut()[o] += g;
        if g == 0.0 {
            continue;
        }
        let row = &mut dwd[o * n_in..(o + 1) * n_in];
        for (d, xv) in row.iter_mut().zip(x) {
            *d += g * xv;
        }
        if want_dx {
            for (d, wv) in dx.iter_mut().zip(&wd[o * n_in..(o + 1) * n_in]) {
                *d += g * wv;
            }
        }
    }
    want_dx.then_some(dx)
}

pub fn relu(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Zero gradient wherever the forward output was not positive.
pub fn relu_backward(y: &[f64], dy: &mut [f64]) {
    for (g, &v) in dy.iter_mut().zip(y) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = sigmoid_scalar(*v));
}

/// `dy *= s (1 - s)` given the forward output `s`.
pub fn sigmoid_backward(s: &[f64], dy: &mut [f64]) {
    for (g, &v) in dy.iter_mut().zip(s) {
        *g *= v * (1.0 - v);
    }
}

/// Inverted dropout. Returns the applied per-element scale (0 or 1/(1-p)),
/// or `None` when the layer is the identity.
pub fn dropout<R: Rng>(x: &mut [f64], p: f64, training: bool, rng: &mut R) -> Option<Vec<f64>> {
    if !training || p <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - p);
    let scale: Vec<f64> = x
        .iter()
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    for (v, s) in x.iter_mut().zip(&scale) {
        *v *= s;
    }
    Some(scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(shape: &[usize], v: &[f64]) -> Tensor {
        Tensor::from_vec(shape, v.to_vec()).unwrap()
    }

    #[test]
    fn conv_hand_values() {
        let x = t(&[1, 3], &[1.0, 2.0, 3.0]);
        let w = t(&[1, 1, 3], &[1.0, 0.0, -1.0]);
        let b = t(&[1], &[0.0]);
        assert_eq!(conv1d(&x, &w, &b, 1, 0).unwrap().data(), &[-2.0]);
        let id = t(&[1, 1, 3], &[0.0, 1.0, 0.0]);
        assert_eq!(conv1d(&x, &id, &b, 1, 1).unwrap().data(), x.data());
        let z = Tensor::zeros(&[1, 3]);
        assert!(conv1d(&z, &w, &b, 1, 1).unwrap().data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn conv_strided_and_errors() {
        let x = t(&[1, 5], &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let w = t(&[1, 1, 1], &[2.0]);
        let b = t(&[1], &[1.0]);
        assert_eq!(conv1d(&x, &w, &b, 2, 0).unwrap().data(), &[3.0, 7.0, 11.0]);
        let w2 = t(&[1, 2, 1], &[1.0, 1.0]);
        assert!(conv1d(&x, &w2, &b, 1, 0).is_err());
        let wide = t(&[1, 1, 7], &[0.0; 7]);
        assert!(conv1d(&x, &wide, &b, 1, 0).is_err());
    }

    #[test]
    fn pool_hand_values() {
        let x = t(&[1, 4], &[1.0, 3.0, 2.0, 5.0]);
        let (y, arg) = maxpool1d(&x, 2, 2, false).unwrap();
        assert_eq!(y.data(), &[3.0, 5.0]);
        assert_eq!(arg, vec![1, 3]);
        let (g, _) = maxpool1d(&x, 4, 4, false).unwrap();
        assert_eq!(g.data(), &[5.0]);
        let c = t(&[1, 6], &[2.0; 6]);
        assert!(maxpool1d(&c, 2, 2, false).unwrap().0.data().iter().all(|v| *v == 2.0));
    }

    #[test]
    fn pool_ceil_lengths() {
        assert_eq!(pool_out_len(25, 2, 2, true), Some(13));
        assert_eq!(pool_out_len(25, 2, 2, false), Some(12));
        assert_eq!(pool_out_len(400, 3, 3, true), Some(134));
        assert_eq!(pool_out_len(400, 1, 1, true), Some(400));
        assert_eq!(pool_out_len(1, 2, 2, true), Some(1));
        let x = t(&[1, 5], &[1.0, 0.0, 0.0, 0.0, 9.0]);
        assert_eq!(maxpool1d(&x, 2, 2, true).unwrap().0.data(), &[1.0, 0.0, 9.0]);
    }

    #[test]
    fn ppp_values() {
        let x = t(&[1, 3], &[1.0, 4.0, 2.0]);
        let (y, _) = ppp(&x, &[3]).unwrap();
        assert_eq!(y.shape(), &[2, 3]);
        assert_eq!(&y.data()[..3], x.data());
        assert_eq!(&y.data()[3..], &[4.0, 4.0, 4.0]);
        let (y, _) = ppp(&x, &[1]).unwrap();
        assert_eq!(&y.data()[3..], x.data());
        assert!(ppp(&x, &[4]).is_err());
    }

    #[test]
    fn ppp_global_window_everywhere() {
        let x = t(&[2, 6], &[9.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let (y, _) = ppp(&x, &[6, 5]).unwrap();
        assert_eq!(y.shape(), &[6, 6]);
        assert!(y.data()[12..18].iter().all(|v| *v == 9.0));
        assert!(y.data()[18..24].iter().all(|v| *v == 0.0));
        // window 5 at the tail is shifted inside and misses index 0
        assert_eq!(y.data()[24..30], [9.0, 9.0, 9.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn dense_and_activations() {
        let w = t(&[2, 3], &[1.0, 2.0, 3.0, -1.0, 0.0, 1.0]);
        let b = t(&[2], &[0.5, -0.5]);
        assert_eq!(dense(&[1.0, 1.0, 1.0], &w, &b).unwrap(), vec![6.5, -0.5]);
        assert!(dense(&[1.0], &w, &b).is_err());
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        assert!((sigmoid_scalar(1.0) - 0.731_058_578_6).abs() < 1e-10);
        assert_eq!(sigmoid_scalar(800.0), 1.0);
        assert_eq!(sigmoid_scalar(-800.0), 0.0);
        let mut v = [-1.0, 0.0, 2.0];
        relu(&mut v);
        assert_eq!(v, [0.0, 0.0, 2.0]);
    }

    #[test]
    fn dropout_identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut x = vec![1.0, 2.0, 3.0];
        assert!(dropout(&mut x, 0.5, false, &mut rng).is_none());
        assert!(dropout(&mut x, 0.0, true, &mut rng).is_none());
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
        let mut x = vec![1.0; 1000];
        let s = dropout(&mut x, 0.5, true, &mut rng).unwrap();
        assert!(x.iter().all(|v| *v == 0.0 || *v == 2.0));
        let kept = s.iter().filter(|v| **v > 0.0).count();
        assert!((400..600).contains(&kept));
    }
}
