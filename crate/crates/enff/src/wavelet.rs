//! Three-level Mallat multiresolution decomposition of a load series.
//!
//! The decimated transform uses half-sample symmetric boundary extension.
//! Each analysis step keeps `(n + L - 1) / 2` coefficients per band (`L` =
//! filter length), which is exactly `ceil(n / 2)` for Haar and is the
//! smallest count that still lets the synthesis step invert the analysis
//! exactly for longer orthogonal filters. `decompose3` turns the coefficient
//! pyramid into four full-length component series (A3, D3, D2, D1) whose sum
//! reproduces the input, so per-component forecasts can be recombined by
//! plain addition.

use crate::error::{Error, Result};

/// Shipped orthogonal wavelet families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveletFamily {
    Haar,
    /// Four-tap Daubechies filter (two vanishing moments).
    Daubechies4,
}

impl WaveletFamily {
    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::Daubechies4 => "db4",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "haar" => Ok(WaveletFamily::Haar),
            "db4" => Ok(WaveletFamily::Daubechies4),
            other => Err(Error::InvalidConfig {
                message: format!("unknown wavelet family `{other}` (expected haar or db4)"),
            }),
        }
    }
}

/// Quadrature-mirror analysis filter pair.
///
/// The highpass is derived from the lowpass by `g[k] = (-1)^k * h[L-1-k]`,
/// so `sum(h) = sqrt(2)` and `sum(g) = 0` hold by construction.
#[derive(Debug, Clone)]
pub struct WaveletFilterPair {
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletFilterPair {
    pub fn new(family: WaveletFamily) -> Self {
        let h = match family {
            WaveletFamily::Haar => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                vec![s, s]
            }
            WaveletFamily::Daubechies4 => {
                let sqrt3 = 3.0_f64.sqrt();
                let norm = 4.0 * std::f64::consts::SQRT_2;
                vec![
                    (1.0 + sqrt3) / norm,
                    (3.0 + sqrt3) / norm,
                    (3.0 - sqrt3) / norm,
                    (1.0 - sqrt3) / norm,
                ]
            }
        };
        Self::from_lowpass(h)
    }

    fn from_lowpass(lowpass: Vec<f64>) -> Self {
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - k]
            })
            .collect();
        Self { lowpass, highpass }
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }
}

/// Full-length additive components of a three-level decomposition.
///
/// `approx3 + detail3 + detail2 + detail1` reproduces the analyzed signal,
/// and every component has the same length as the input.
#[derive(Debug, Clone)]
pub struct MultiresolutionDecomposition {
    pub approx3: Vec<f64>,
    pub detail3: Vec<f64>,
    pub detail2: Vec<f64>,
    pub detail1: Vec<f64>,
}

/// Identifies one of the four component series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Approx3,
    Detail3,
    Detail2,
    Detail1,
}

/// Component order used everywhere components are enumerated.
pub const COMPONENTS: [Component; 4] = [
    Component::Approx3,
    Component::Detail3,
    Component::Detail2,
    Component::Detail1,
];

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Component::Approx3 => "a3",
            Component::Detail3 => "d3",
            Component::Detail2 => "d2",
            Component::Detail1 => "d1",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "a3" => Ok(Component::Approx3),
            "d3" => Ok(Component::Detail3),
            "d2" => Ok(Component::Detail2),
            "d1" => Ok(Component::Detail1),
            other => Err(Error::InvalidConfig {
                message: format!("unknown wavelet component `{other}`"),
            }),
        }
    }
}

impl MultiresolutionDecomposition {
    pub fn component(&self, which: Component) -> &[f64] {
        match which {
            Component::Approx3 => &self.approx3,
            Component::Detail3 => &self.detail3,
            Component::Detail2 => &self.detail2,
            Component::Detail1 => &self.detail1,
        }
    }

    pub fn len(&self) -> usize {
        self.approx3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.approx3.is_empty()
    }

    /// Pointwise sum of the four components.
    pub fn sum(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.approx3[i] + self.detail3[i] + self.detail2[i] + self.detail1[i])
            .collect()
    }
}

/// Number of analysis coefficients per band for a signal of length `n`.
pub fn coefficient_len(n: usize, filter_len: usize) -> usize {
    (n + filter_len - 1) / 2
}

/// Fold an index into `[0, n)` by half-sample symmetric reflection.
fn reflect(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    loop {
        if i < 0 {
            i = -1 - i;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// One analysis step: correlate the symmetrically extended signal with both
/// filters and keep every second output.
pub fn dwt_pair(signal: &[f64], filters: &WaveletFilterPair) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = signal.len();
    let l = filters.len();
    if n < l {
        return Err(Error::SignalTooShort { needed: l, got: n });
    }
    // Extended buffer: indices -(L-1) .. n+L-2 of the reflected signal.
    let ext = l - 1;
    let mut z = Vec::with_capacity(n + 2 * ext);
    for i in -(ext as i64)..(n + ext) as i64 {
        z.push(signal[reflect(i, n)]);
    }
    let out_len = coefficient_len(n, l);
    let h = filters.lowpass();
    let g = filters.highpass();
    let mut approx = Vec::with_capacity(out_len);
    let mut detail = Vec::with_capacity(out_len);
    for k in 0..out_len {
        // z index of signal position (2k + 1 - j) is (2k + 1 - j) + ext.
        let base = 2 * k + 1 + ext;
        let mut a = 0.0;
        let mut d = 0.0;
        for j in 0..l {
            let v = z[base - j];
            a += h[j] * v;
            d += g[j] * v;
        }
        approx.push(a);
        detail.push(d);
    }
    Ok((approx, detail))
}

/// One synthesis step, the exact inverse of [`dwt_pair`] for coefficient
/// vectors of length `coefficient_len(out_length, L)`.
pub fn idwt_pair(
    approx: &[f64],
    detail: &[f64],
    filters: &WaveletFilterPair,
    out_length: usize,
) -> Result<Vec<f64>> {
    let l = filters.len();
    let expected = coefficient_len(out_length, l);
    if approx.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: approx.len(),
        });
    }
    if detail.len() != approx.len() {
        return Err(Error::LengthMismatch {
            expected: approx.len(),
            got: detail.len(),
        });
    }
    let h = filters.lowpass();
    let g = filters.highpass();
    let mut signal = vec![0.0; out_length];
    for (i, out) in signal.iter_mut().enumerate() {
        // Coefficients k with 0 <= 2k + 1 - i <= L - 1 contribute to sample i.
        let k_min = i / 2;
        let k_max = ((i + l - 2) / 2).min(expected - 1);
        let mut acc = 0.0;
        for k in k_min..=k_max {
            let j = 2 * k + 1 - i;
            acc += approx[k] * h[j] + detail[k] * g[j];
        }
        *out = acc;
    }
    Ok(signal)
}

/// Three-level decomposition into full-length additive components.
///
/// The approximation branch is analyzed three times; each branch is then
/// reconstructed alone back to signal length, so the four outputs sum to the
/// input by linearity of the synthesis step.
pub fn decompose3(signal: &[f64], filters: &WaveletFilterPair) -> Result<MultiresolutionDecomposition> {
    let n = signal.len();
    let l = filters.len();
    if n < 8 * l {
        return Err(Error::SignalTooShort { needed: 8 * l, got: n });
    }
    let (a1, d1) = dwt_pair(signal, filters)?;
    let (a2, d2) = dwt_pair(&a1, filters)?;
    let (a3, d3) = dwt_pair(&a2, filters)?;
    let (n1, n2) = (a1.len(), a2.len());

    let lift =
        |coeffs: &[f64], as_detail: bool, level: usize| -> Result<Vec<f64>> {
            // Reconstruct one branch alone from its level down to full length.
            let lengths = [n, n1, n2];
            let out_len = lengths[level - 1];
            let zeros = vec![0.0; coeffs.len()];
            let mut series = if as_detail {
                idwt_pair(&zeros, coeffs, filters, out_len)?
            } else {
                idwt_pair(coeffs, &zeros, filters, out_len)?
            };
            for lvl in (1..level).rev() {
                let zeros = vec![0.0; series.len()];
                series = idwt_pair(&series, &zeros, filters, lengths[lvl - 1])?;
            }
            Ok(series)
        };

    Ok(MultiresolutionDecomposition {
        approx3: lift(&a3, false, 3)?,
        detail3: lift(&d3, true, 3)?,
        detail2: lift(&d2, true, 2)?,
        detail1: lift(&d1, true, 1)?,
    })
}

/// Write the component series as `timestamp,a3,d3,d2,d1` CSV rows.
pub fn write_components_csv<W: std::io::Write>(
    decomp: &MultiresolutionDecomposition,
    timestamps: &[chrono::NaiveDateTime],
    out: &mut W,
) -> Result<()> {
    if timestamps.len() != decomp.len() {
        return Err(Error::LengthMismatch {
            expected: decomp.len(),
            got: timestamps.len(),
        });
    }
    writeln!(out, "timestamp,a3,d3,d2,d1")?;
    for (i, ts) in timestamps.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            ts.format("%Y-%m-%dT%H:%M:%S"),
            decomp.approx3[i],
            decomp.detail3[i],
            decomp.detail2[i],
            decomp.detail1[i]
        )?;
    }
    Ok(())
}
