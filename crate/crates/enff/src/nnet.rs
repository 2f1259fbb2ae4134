//! Forward passes for the three predictor families — feedforward, Elman
//! recurrent, and radial-basis-function networks — plus the analytic MSE
//! gradient used by the backprop benchmark.
//!
//! All parameters live in one flat weight vector so a swarm optimizer can
//! treat every family uniformly. Layouts:
//!
//! * FNN:   `[W_h (h×in, row-major), b_h (h), w_out (h), b_out]`
//! * Elman: `[W_x (h×in), W_c (h×h), b_h (h), w_out (h), b_out]`
//! * RBF:   `[centers (h×in), width codes (h), w_out (h), b_out]`
//!
//! RBF width codes pass through a softplus so any real-valued code yields a
//! strictly positive width.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Fnn,
    Elman,
    Rbf,
}

impl NetworkKind {
    pub fn name(self) -> &'static str {
        match self {
            NetworkKind::Fnn => "fnn",
            NetworkKind::Elman => "elman",
            NetworkKind::Rbf => "rbf",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "fnn" => Ok(NetworkKind::Fnn),
            "elman" => Ok(NetworkKind::Elman),
            "rbf" => Ok(NetworkKind::Rbf),
            other => Err(Error::InvalidConfig {
                message: format!("unknown network kind `{other}`"),
            }),
        }
    }
}

/// Architecture of one predictor: single hidden layer, scalar linear output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkSpec {
    pub kind: NetworkKind,
    pub input_dim: usize,
    pub hidden_units: usize,
}

impl NetworkSpec {
    pub fn new(kind: NetworkKind, input_dim: usize, hidden_units: usize) -> Result<Self> {
        if input_dim == 0 || hidden_units == 0 {
            return Err(Error::InvalidConfig {
                message: "network dimensions must be at least 1".to_string(),
            });
        }
        Ok(Self {
            kind,
            input_dim,
            hidden_units,
        })
    }

    pub fn param_count(&self) -> usize {
        param_count(self)
    }
}

/// Flat parameter count for a spec.
pub fn param_count(spec: &NetworkSpec) -> usize {
    let (i, h) = (spec.input_dim, spec.hidden_units);
    match spec.kind {
        NetworkKind::Fnn => (i + 1) * h + h + 1,
        NetworkKind::Elman => (i + h + 1) * h + h + 1,
        NetworkKind::Rbf => h * i + 2 * h + 1,
    }
}

/// Context-unit values carried between Elman steps; zeroed at sequence start.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmanState {
    pub context: Vec<f64>,
}

impl ElmanState {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        Self {
            context: vec![0.0; spec.hidden_units],
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable ln(1 + e^x); strictly positive for all finite x.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn check_dims(spec: &NetworkSpec, weights: &[f64], input: &[f64]) -> Result<()> {
    if input.len() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim,
            got: input.len(),
            what: "input length",
        });
    }
    let expected = param_count(spec);
    if weights.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: weights.len(),
            what: "weight length",
        });
    }
    Ok(())
}

/// Feedforward pass: linear output over a sigmoid hidden layer.
pub fn fnn_forward(spec: &NetworkSpec, weights: &[f64], input: &[f64]) -> Result<f64> {
    if spec.kind != NetworkKind::Fnn {
        return Err(Error::UnsupportedKind {
            kind: spec.kind.name(),
            operation: "fnn_forward",
        });
    }
    check_dims(spec, weights, input)?;
    Ok(fnn_apply(spec, weights, input))
}

/// Unchecked FNN pass; callers guarantee dimensions.
pub(crate) fn fnn_apply(spec: &NetworkSpec, weights: &[f64], input: &[f64]) -> f64 {
    let (i, h) = (spec.input_dim, spec.hidden_units);
    let (w_h, rest) = weights.split_at(h * i);
    let (b_h, rest) = rest.split_at(h);
    let (w_out, b_out) = rest.split_at(h);
    let mut out = b_out[0];
    for j in 0..h {
        let row = &w_h[j * i..(j + 1) * i];
        let mut a = b_h[j];
        for (w, x) in row.iter().zip(input) {
            a += w * x;
        }
        out += w_out[j] * sigmoid(a);
    }
    out
}

/// One Elman step: the hidden activation feeds back as the next context.
pub fn elman_forward(
    spec: &NetworkSpec,
    weights: &[f64],
    input: &[f64],
    state: &ElmanState,
) -> Result<(f64, ElmanState)> {
    if spec.kind != NetworkKind::Elman {
        return Err(Error::UnsupportedKind {
            kind: spec.kind.name(),
            operation: "elman_forward",
        });
    }
    check_dims(spec, weights, input)?;
    if state.context.len() != spec.hidden_units {
        return Err(Error::DimensionMismatch {
            expected: spec.hidden_units,
            got: state.context.len(),
            what: "state length",
        });
    }
    let mut hidden = vec![0.0; spec.hidden_units];
    let out = elman_apply(spec, weights, input, &state.context, &mut hidden);
    Ok((out, ElmanState { context: hidden }))
}

/// Unchecked Elman step writing the new context into `hidden_out`.
pub(crate) fn elman_apply(
    spec: &NetworkSpec,
    weights: &[f64],
    input: &[f64],
    context: &[f64],
    hidden_out: &mut [f64],
) -> f64 {
    let (i, h) = (spec.input_dim, spec.hidden_units);
    let (w_x, rest) = weights.split_at(h * i);
    let (w_c, rest) = rest.split_at(h * h);
    let (b_h, rest) = rest.split_at(h);
    let (w_out, b_out) = rest.split_at(h);
    for j in 0..h {
        let mut a = b_h[j];
        let x_row = &w_x[j * i..(j + 1) * i];
        for (w, x) in x_row.iter().zip(input) {
            a += w * x;
        }
        let c_row = &w_c[j * h..(j + 1) * h];
        for (w, c) in c_row.iter().zip(context) {
            a += w * c;
        }
        hidden_out[j] = sigmoid(a);
    }
    let mut out = b_out[0];
    for j in 0..h {
        out += w_out[j] * hidden_out[j];
    }
    out
}

/// Gaussian-unit pass: output = b + Σ_j w_j · exp(−‖x − c_j‖² / (2σ_j²)).
pub fn rbf_forward(spec: &NetworkSpec, weights: &[f64], input: &[f64]) -> Result<f64> {
    if spec.kind != NetworkKind::Rbf {
        return Err(Error::UnsupportedKind {
            kind: spec.kind.name(),
            operation: "rbf_forward",
        });
    }
    check_dims(spec, weights, input)?;
    Ok(rbf_apply(spec, weights, input))
}

/// Unchecked RBF pass; callers guarantee dimensions.
pub(crate) fn rbf_apply(spec: &NetworkSpec, weights: &[f64], input: &[f64]) -> f64 {
    let (i, h) = (spec.input_dim, spec.hidden_units);
    let (centers, rest) = weights.split_at(h * i);
    let (width_codes, rest) = rest.split_at(h);
    let (w_out, b_out) = rest.split_at(h);
    let mut out = b_out[0];
    for j in 0..h {
        let center = &centers[j * i..(j + 1) * i];
        let mut dist2 = 0.0;
        for (c, x) in center.iter().zip(input) {
            let d = x - c;
            dist2 += d * d;
        }
        let sigma = softplus(width_codes[j]);
        out += w_out[j] * (-dist2 / (2.0 * sigma * sigma)).exp();
    }
    out
}

/// Exact gradient of the batch MSE `(1/B) Σ (output − target)²` for an FNN,
/// laid out like the weight vector.
pub fn backprop_gradient(
    spec: &NetworkSpec,
    weights: &[f64],
    inputs: &[Vec<f64>],
    targets: &[f64],
) -> Result<Vec<f64>> {
    if spec.kind != NetworkKind::Fnn {
        return Err(Error::UnsupportedKind {
            kind: spec.kind.name(),
            operation: "backprop_gradient",
        });
    }
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if inputs.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    let (i, h) = (spec.input_dim, spec.hidden_units);
    let expected = param_count(spec);
    if weights.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: weights.len(),
            what: "weight length",
        });
    }
    let (w_h, rest) = weights.split_at(h * i);
    let (b_h, rest) = rest.split_at(h);
    let (w_out, b_out) = rest.split_at(h);

    let mut grad = vec![0.0; expected];
    let scale = 2.0 / inputs.len() as f64;
    let mut hidden = vec![0.0; h];
    for (input, target) in inputs.iter().zip(targets) {
        if input.len() != i {
            return Err(Error::DimensionMismatch {
                expected: i,
                got: input.len(),
                what: "input length",
            });
        }
        let mut out = b_out[0];
        for j in 0..h {
            let row = &w_h[j * i..(j + 1) * i];
            let mut a = b_h[j];
            for (w, x) in row.iter().zip(input) {
                a += w * x;
            }
            hidden[j] = sigmoid(a);
            out += w_out[j] * hidden[j];
        }
        let dy = scale * (out - target);
        let (g_wh, g_rest) = grad.split_at_mut(h * i);
        let (g_bh, g_rest) = g_rest.split_at_mut(h);
        let (g_wout, g_bout) = g_rest.split_at_mut(h);
        g_bout[0] += dy;
        for j in 0..h {
            g_wout[j] += dy * hidden[j];
            // dσ/da = σ(1−σ)
            let da = dy * w_out[j] * hidden[j] * (1.0 - hidden[j]);
            g_bh[j] += da;
            let row = &mut g_wh[j * i..(j + 1) * i];
            for (g, x) in row.iter_mut().zip(input) {
                *g += da * x;
            }
        }
    }
    Ok(grad)
}

/// Serialize a trained model as one CSV line:
/// `kind,input_dim,hidden_units,w0,w1,...`.
///
/// Weights are written in shortest round-trip decimal form, so parsing the
/// line back reproduces every bit.
pub fn write_model<W: Write>(spec: &NetworkSpec, weights: &[f64], out: &mut W) -> Result<()> {
    if weights.len() != param_count(spec) {
        return Err(Error::DimensionMismatch {
            expected: param_count(spec),
            got: weights.len(),
            what: "weight length",
        });
    }
    write!(
        out,
        "{},{},{}",
        spec.kind.name(),
        spec.input_dim,
        spec.hidden_units
    )?;
    for w in weights {
        write!(out, ",{w}")?;
    }
    writeln!(out)?;
    Ok(())
}

/// Parse a model line produced by [`write_model`].
pub fn parse_model<R: Read>(source: R) -> Result<(NetworkSpec, Vec<f64>)> {
    let mut reader = BufReader::new(source);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let text = line.trim();
    if text.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut fields = text.split(',');
    let bad = |message: String| Error::MalformedRow { line: 1, message };
    let kind = NetworkKind::parse(fields.next().unwrap_or(""))?;
    let input_dim: usize = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| bad("bad input_dim".to_string()))?;
    let hidden_units: usize = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| bad("bad hidden_units".to_string()))?;
    let spec = NetworkSpec::new(kind, input_dim, hidden_units)?;
    let mut weights = Vec::with_capacity(param_count(&spec));
    for f in fields {
        weights.push(
            f.parse()
                .map_err(|_| bad(format!("bad weight `{f}`")))?,
        );
    }
    if weights.len() != param_count(&spec) {
        return Err(Error::DimensionMismatch {
            expected: param_count(&spec),
            got: weights.len(),
            what: "weight length",
        });
    }
    Ok((spec, weights))
}
