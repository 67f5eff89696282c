//! Small tanh network with identity shortcuts between equal-width layers,
//! and its exact reverse-mode gradient.
//!
//! `h1 = tanh(W1 x + b1)`, then for every later hidden layer
//! `h = tanh(W h_prev + b) + h_prev` (the shortcut is dropped when
//! `residual` is false). An optional linear readout maps the last hidden
//! state to the output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::StabilityError;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn xavier<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        DenseLayer {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect(),
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.biases[o]
            })
            .collect()
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualNet {
    pub layers: Vec<DenseLayer>,
    pub readout: Option<DenseLayer>,
    pub residual: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub output: Vec<f64>,
    /// Hidden states `h1..hL`.
    pub activations: Vec<Vec<f64>>,
    tanh_values: Vec<Vec<f64>>,
}

/// Parameter gradients laid out like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
    pub readout: Option<DenseLayer>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in self.layers.iter().chain(self.readout.iter()) {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }
}

impl ResidualNet {
    /// Validates that every layer after the first keeps its width.
    pub fn new(layers: Vec<DenseLayer>, readout: Option<DenseLayer>, residual: bool) -> Result<Self, StabilityError> {
        if layers.is_empty() {
            return Err(StabilityError::Shape("at least one hidden layer required".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(StabilityError::Shape(format!("layer {} has inconsistent parameter sizes", i + 1)));
            }
            if i > 0 && l.inputs != l.outputs {
                return Err(StabilityError::Shape(format!(
                    "layer {} maps {} -> {}; shortcut layers must keep their width",
                    i + 1,
                    l.inputs,
                    l.outputs
                )));
            }
            if i > 0 && l.inputs != layers[i - 1].outputs {
                return Err(StabilityError::Shape(format!("layer {} input width mismatch", i + 1)));
            }
        }
        if let Some(r) = &readout {
            let last = layers.last().unwrap().outputs;
            if r.inputs != last || r.weights.len() != r.inputs * r.outputs || r.biases.len() != r.outputs {
                return Err(StabilityError::Shape("readout does not match the last hidden width".into()));
            }
        }
        Ok(ResidualNet {
            layers,
            readout,
            residual,
        })
    }

    /// Xavier-initialized `input -> hidden^depth -> output` network.
    pub fn init(input: usize, hidden: usize, depth: usize, output: usize, residual: bool, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = vec![DenseLayer::xavier(input, hidden, &mut rng)];
        for _ in 1..depth {
            layers.push(DenseLayer::xavier(hidden, hidden, &mut rng));
        }
        let readout = Some(DenseLayer::xavier(hidden, output, &mut rng));
        ResidualNet::new(layers, readout, residual).expect("consistent shapes")
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().chain(self.readout.iter()).map(DenseLayer::param_count).sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.layers.iter().chain(self.readout.iter()) {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut at = 0;
        for l in self.layers.iter_mut().chain(self.readout.iter_mut()) {
            let (w, b) = (l.weights.len(), l.biases.len());
            l.weights.copy_from_slice(&flat[at..at + w]);
            l.biases.copy_from_slice(&flat[at + w..at + w + b]);
            at += w + b;
        }
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self.layers.iter().map(|l| DenseLayer::zeros(l.inputs, l.outputs)).collect(),
            readout: self.readout.as_ref().map(|l| DenseLayer::zeros(l.inputs, l.outputs)),
        }
    }
}

fn check_width(expected: usize, got: usize, what: &str) -> Result<(), StabilityError> {
    if expected != got {
        return Err(StabilityError::Shape(format!("{what}: expected width {expected}, got {got}")));
    }
    Ok(())
}

pub fn residual_forward(net: &ResidualNet, x: &[f64]) -> Result<Forward, StabilityError> {
    check_width(net.input_width(), x.len(), "input")?;
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(net.layers.len());
    let mut tanh_values = Vec::with_capacity(net.layers.len());
    for (i, layer) in net.layers.iter().enumerate() {
        let prev: &[f64] = if i == 0 { x } else { &activations[i - 1] };
        let t: Vec<f64> = layer.affine(prev).into_iter().map(f64::tanh).collect();
        let h = if i > 0 && net.residual {
            t.iter().zip(prev).map(|(a, b)| a + b).collect()
        } else {
            t.clone()
        };
        tanh_values.push(t);
        activations.push(h);
    }
    let last = activations.last().expect("non-empty");
    let output = match &net.readout {
        Some(r) => r.affine(last),
        None => last.clone(),
    };
    Ok(Forward {
        output,
        activations,
        tanh_values,
    })
}

/// Gradients of `upstream · output` with respect to every weight and bias.
pub fn residual_backward(net: &ResidualNet, x: &[f64], upstream: &[f64]) -> Result<Gradients, StabilityError> {
    let fwd = residual_forward(net, x)?;
    let mut grads = net.zero_gradients();
    accumulate_backward(net, x, &fwd, upstream, 1.0, &mut grads)?;
    Ok(grads)
}

/// Add `scale * d(upstream · output)/dθ` into `grads`, reusing a forward pass.
pub fn accumulate_backward(
    net: &ResidualNet,
    x: &[f64],
    fwd: &Forward,
    upstream: &[f64],
    scale: f64,
    grads: &mut Gradients,
) -> Result<(), StabilityError> {
    check_width(fwd.output.len(), upstream.len(), "upstream")?;
    let last = fwd.activations.last().expect("non-empty");
    let mut grad_h: Vec<f64> = match (&net.readout, &mut grads.readout) {
        (Some(r), Some(gr)) => {
            for o in 0..r.outputs {
                let g = scale * upstream[o];
                gr.biases[o] += g;
                for i in 0..r.inputs {
                    gr.weights[o * r.inputs + i] += g * last[i];
                }
            }
            (0..r.inputs)
                .map(|i| (0..r.outputs).map(|o| r.weights[o * r.inputs + i] * upstream[o]).sum::<f64>() * scale)
                .collect()
        }
        _ => upstream.iter().map(|u| u * scale).collect(),
    };

    for idx in (0..net.layers.len()).rev() {
        let layer = &net.layers[idx];
        let input: &[f64] = if idx == 0 { x } else { &fwd.activations[idx - 1] };
        let dz: Vec<f64> = grad_h
            .iter()
            .zip(&fwd.tanh_values[idx])
            .map(|(g, t)| g * (1.0 - t * t))
            .collect();
        let gl = &mut grads.layers[idx];
        for o in 0..layer.outputs {
            gl.biases[o] += dz[o];
            for i in 0..layer.inputs {
                gl.weights[o * layer.inputs + i] += dz[o] * input[i];
            }
        }
        if idx == 0 {
            break;
        }
        let mut next: Vec<f64> = (0..layer.inputs)
            .map(|i| (0..layer.outputs).map(|o| layer.weights[o * layer.inputs + i] * dz[o]).sum())
            .collect();
        if net.residual {
            for (n, g) in next.iter_mut().zip(&grad_h) {
                *n += g;
            }
        }
        grad_h = next;
    }
    Ok(())
}
