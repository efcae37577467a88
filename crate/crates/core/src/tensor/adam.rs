use super::Param;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &[Param], lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: params.iter().map(|p| vec![0.0; p.value.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.value.len()]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Apply one update from the accumulated `grad` buffers.
    pub fn step(&mut self, params: &mut [Param]) {
        assert_eq!(params.len(), self.m.len(), "optimizer built for a different parameter set");
        self.step += 1;
        let t = self.step as f64;
        let c1 = 1.0 - self.beta1.powf(t);
        let c2 = 1.0 - self.beta2.powf(t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let g = p.grad.data();
            let mut_vals = p.value.data_mut();
            for i in 0..g.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                mut_vals[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![Param::new("x", Tensor::from_vec(&[2], vec![1.0, -1.0]).unwrap())];
        p[0].grad = Tensor::from_vec(&[2], vec![0.3, -7.0]).unwrap();
        let mut opt = Adam::new(&p, 0.001);
        opt.step(&mut p);
        // bias-corrected first step is lr * sign(g) up to eps
        assert!((p[0].value.data()[0] - (1.0 - 0.001)).abs() < 1e-9);
        assert!((p[0].value.data()[1] - (-1.0 + 0.001)).abs() < 1e-9);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut p = vec![Param::new("x", Tensor::from_vec(&[1], vec![5.0]).unwrap())];
        let mut opt = Adam::new(&p, 0.1);
        for _ in 0..500 {
            let x = p[0].value.data()[0];
            p[0].grad.data_mut()[0] = 2.0 * (x - 2.0);
            opt.step(&mut p);
        }
        assert!((p[0].value.data()[0] - 2.0).abs() < 1e-2);
    }
}
