use crate::error::{Error, Result};
use crate::retinanet::{LayerName, NetworkParameters};
use crate::stimuli::{encode_for_network, generate_hue_field, hue_jacobian, HueStimulusSpec};
use crate::tensor::{Tape, Tensor};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];
const BATCH: usize = 32;

/// Derivative of a layer's summed response with respect to hue.
///
/// For a single network `mean` holds the derivative itself and `stderr` is
/// zero with `stderr_degenerate` set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HueSensitivityCurve {
    pub layer: LayerName,
    pub hues: Vec<f64>,
    pub mean: Vec<Option<f64>>,
    pub stderr: Vec<Option<f64>>,
    pub undefined: Vec<bool>,
    pub models: usize,
    pub stderr_degenerate: bool,
}

/// Integer hues in `[0, 360)` that are not multiples of 60.
pub fn default_hue_grid() -> Vec<f64> {
    (0..360).filter(|h| h % 60 != 0).map(f64::from).collect()
}

/// True within 0.5° of a sector boundary.
pub fn is_near_kink(hue: f64) -> bool {
    let r = hue.rem_euclid(60.0);
    r <= 0.5 || r >= 59.5
}

pub fn hue_sensitivity(
    params: &NetworkParameters,
    layer: LayerName,
    hues: &[f64],
) -> Result<HueSensitivityCurve> {
    let cfg = &params.config;
    if !cfg.has_layer(layer) {
        return Err(Error::InvalidArgument(format!(
            "layer {layer} is not part of this architecture"
        )));
    }
    let (c, s) = (cfg.input_channels, cfg.input_size);
    let defined: Vec<f64> = hues.iter().copied().filter(|&h| !is_near_kink(h)).collect();
    let mut values = Vec::with_capacity(defined.len());
    for chunk in defined.chunks(BATCH) {
        let images = chunk
            .iter()
            .map(|&h| encode_for_network(&generate_hue_field(&HueStimulusSpec::new(h, s)), c))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Tensor> = images.iter().collect();
        let mut tape = Tape::new();
        let input = tape.leaf(Tensor::stack(&refs)?);
        let net = params.bind(&mut tape, false);
        let acts = net.forward(&mut tape, input, Some(layer))?;
        let total = tape.sum(acts.post[layer.conv_index()]);
        let mut grads = tape.backward(total)?;
        let g = grads
            .take(input)
            .unwrap_or_else(|| Tensor::zeros(&[chunk.len(), c, s, s]));
        let plane = s * s;
        for (n, &h) in chunk.iter().enumerate() {
            let jac = hue_jacobian(h, 1.0, 0.5)?;
            let dinput: Vec<f64> = if c == 3 {
                jac.to_vec()
            } else {
                vec![LUMA.iter().zip(&jac).map(|(w, j)| w * j).sum()]
            };
            let mut v = 0.0;
            for (ch, d) in dinput.iter().enumerate() {
                let start = (n * c + ch) * plane;
                let gsum: f64 = g.data()[start..start + plane].iter().map(|&x| f64::from(x)).sum();
                v += gsum * d;
            }
            values.push(v);
        }
    }
    let mut values = values.into_iter();
    let mean: Vec<Option<f64>> = hues
        .iter()
        .map(|&h| if is_near_kink(h) { None } else { values.next() })
        .collect();
    Ok(HueSensitivityCurve {
        layer,
        hues: hues.to_vec(),
        undefined: hues.iter().map(|&h| is_near_kink(h)).collect(),
        stderr: mean.iter().map(|m| m.map(|_| 0.0)).collect(),
        mean,
        models: 1,
        stderr_degenerate: true,
    })
}

/// Pointwise mean and standard error (sample std over √n) of several curves.
pub fn sensitivity_aggregate(curves: &[HueSensitivityCurve]) -> Result<HueSensitivityCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidArgument("no curves to aggregate".into()))?;
    if curves.iter().any(|c| c.hues != first.hues || c.layer != first.layer) {
        return Err(Error::InvalidArgument("curves have different hue grids or layers".into()));
    }
    let n = curves.len();
    let mut mean = Vec::with_capacity(first.hues.len());
    let mut stderr = Vec::with_capacity(first.hues.len());
    let mut undefined = Vec::with_capacity(first.hues.len());
    for i in 0..first.hues.len() {
        let samples: Option<Vec<f64>> = curves
            .iter()
            .map(|c| if c.undefined[i] { None } else { c.mean[i] })
            .collect();
        match samples {
            Some(xs) => {
                let m = xs.iter().sum::<f64>() / n as f64;
                let se = if n > 1 {
                    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
                    var.sqrt() / (n as f64).sqrt()
                } else {
                    0.0
                };
                mean.push(Some(m));
                stderr.push(Some(se));
                undefined.push(false);
            }
            None => {
                mean.push(None);
                stderr.push(None);
                undefined.push(true);
            }
        }
    }
    Ok(HueSensitivityCurve {
        layer: first.layer,
        hues: first.hues.clone(),
        mean,
        stderr,
        undefined,
        models: n,
        stderr_degenerate: n == 1,
    })
}

impl HueSensitivityCurve {
    /// `hue,mean,stderr,undefined` rows; undefined points leave the values empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("hue,mean,stderr,undefined\n");
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for i in 0..self.hues.len() {
            writeln!(
                out,
                "{},{},{},{}",
                self.hues[i],
                fmt(self.mean[i]),
                fmt(self.stderr[i]),
                self.undefined[i]
            )
            .expect("write to string");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}
