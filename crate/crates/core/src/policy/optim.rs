/// RMSProp: `nu = decay * nu + (1 - decay) * g^2`, `theta -= lr * g / sqrt(nu + eps)`.
#[derive(Clone, Debug)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    nu: Vec<f64>,
}

impl RmsProp {
    pub fn new(len: usize, lr: f64, decay: f64, eps: f64) -> Self {
        RmsProp {
            lr,
            decay,
            eps,
            nu: vec![0.0; len],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((p, g), nu) in params.iter_mut().zip(grad).zip(&mut self.nu) {
            *nu = self.decay * *nu + (1.0 - self.decay) * g * g;
            *p -= self.lr * g / (*nu + self.eps).sqrt();
        }
    }
}

/// Adam with decoupled weight decay.
#[derive(Clone, Debug)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamW {
    pub fn new(len: usize, lr: f64, beta1: f64, beta2: f64, eps: f64, weight_decay: f64) -> Self {
        AdamW {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (i, (p, g)) in params.iter_mut().zip(grad).enumerate() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let update = (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
            *p -= self.lr * (update + self.weight_decay * *p);
        }
    }
}
