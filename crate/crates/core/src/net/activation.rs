use serde::{Deserialize, Serialize};

/// Elementwise nonlinearity with closed-form first and second derivatives.
///
/// ReLU has derivative 0 at the kink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Identity,
    Tanh,
    Sigmoid,
    Relu,
    Softplus,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 5] = [
        ActivationKind::Identity,
        ActivationKind::Tanh,
        ActivationKind::Sigmoid,
        ActivationKind::Relu,
        ActivationKind::Softplus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Relu => "relu",
            ActivationKind::Softplus => "softplus",
        }
    }

    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            ActivationKind::Identity => z,
            ActivationKind::Tanh => z.tanh(),
            ActivationKind::Sigmoid => sigmoid(z),
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::Softplus => {
                if z > 0.0 {
                    z + (-z).exp().ln_1p()
                } else {
                    z.exp().ln_1p()
                }
            }
        }
    }

    #[inline]
    pub fn deriv(self, z: f64) -> f64 {
        match self {
            ActivationKind::Identity => 1.0,
            ActivationKind::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Softplus => sigmoid(z),
        }
    }

    #[inline]
    pub fn second_deriv(self, z: f64) -> f64 {
        match self {
            ActivationKind::Identity | ActivationKind::Relu => 0.0,
            ActivationKind::Tanh => {
                let t = z.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            ActivationKind::Softplus => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
        }
    }

    pub fn apply(self, z: &[f64]) -> Vec<f64> {
        z.iter().map(|&v| self.eval(v)).collect()
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
