use super::colour::{hsl_to_rgb, hsv_to_rgb, rgb_to_hsv, rgb_to_lab};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

/// Full-field hue stimulus at saturation 1 and lightness 0.5.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HueStimulusSpec {
    pub hue: f64,
    pub saturation: f64,
    pub lightness: f64,
    pub size: usize,
}

impl HueStimulusSpec {
    pub fn new(hue: f64, size: usize) -> Self {
        HueStimulusSpec {
            hue,
            saturation: 1.0,
            lightness: 0.5,
            size,
        }
    }
}

/// Uniform `[3, size, size]` image of the spec's colour.
pub fn generate_hue_field(spec: &HueStimulusSpec) -> Tensor {
    let rgb = hsl_to_rgb(spec.hue, spec.saturation, spec.lightness);
    let plane = spec.size * spec.size;
    Tensor::from_fn(&[3, spec.size, spec.size], |i| rgb[i / plane] as f32)
}

/// The black reference input.
pub fn baseline_input(channels: usize, size: usize) -> Tensor {
    Tensor::zeros(&[channels, size, size])
}

fn rgb_planes(image: &Tensor) -> Result<(usize, usize)> {
    match *image.shape() {
        [3, h, w] => Ok((h, w)),
        _ => Err(Error::Shape(format!(
            "expected an RGB image [3,H,W], got {:?}",
            image.shape()
        ))),
    }
}

fn map_pixels(image: &Tensor, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Tensor> {
    let (h, w) = rgb_planes(image)?;
    let plane = h * w;
    let src = image.data();
    let mut out = vec![0.0f32; src.len()];
    for p in 0..plane {
        let px = [src[p], src[plane + p], src[2 * plane + p]].map(f64::from);
        let mapped = f(px);
        for c in 0..3 {
            out[c * plane + p] = mapped[c] as f32;
        }
    }
    Tensor::new(vec![3, h, w], out)
}

/// Offset every pixel's HSV hue by `degrees`.
pub fn hue_rotate(image: &Tensor, degrees: f64) -> Result<Tensor> {
    map_pixels(image, |rgb| {
        let (h, s, v) = rgb_to_hsv(rgb);
        if s == 0.0 {
            return rgb;
        }
        hsv_to_rgb((h + degrees).rem_euclid(360.0), s, v).map(|c| c.clamp(0.0, 1.0))
    })
}

/// Luma `0.299 R + 0.587 G + 0.114 B` as a single-channel image.
pub fn rgb_to_grey(image: &Tensor) -> Result<Tensor> {
    let (h, w) = rgb_planes(image)?;
    let plane = h * w;
    let d = image.data();
    let grey = (0..plane)
        .map(|p| {
            (0.299 * f64::from(d[p]) + 0.587 * f64::from(d[plane + p]) + 0.114 * f64::from(d[2 * plane + p]))
                as f32
        })
        .collect();
    Tensor::new(vec![1, h, w], grey)
}

/// CIELAB with channels rescaled to `[0,1]`: `L*/100`, `(a*+128)/255`, `(b*+128)/255`.
pub fn rgb_to_cielab(image: &Tensor) -> Result<Tensor> {
    map_pixels(image, |rgb| {
        let [l, a, b] = rgb_to_lab(rgb);
        [l / 100.0, (a + 128.0) / 255.0, (b + 128.0) / 255.0].map(|c| c.clamp(0.0, 1.0))
    })
}

/// All orderings of three channels; index 0 is the identity.
pub const CHANNEL_PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Output channel `i` is input channel `perm[i]`.
pub fn permute_channels(image: &Tensor, perm: [usize; 3]) -> Result<Tensor> {
    let (h, w) = rgb_planes(image)?;
    let plane = h * w;
    let mut out = Vec::with_capacity(image.len());
    for &src in &perm {
        if src > 2 {
            return Err(Error::InvalidArgument(format!("bad channel permutation {perm:?}")));
        }
        out.extend_from_slice(&image.data()[src * plane..(src + 1) * plane]);
    }
    Tensor::new(vec![3, h, w], out)
}

/// Permute the channels by a uniformly drawn permutation; returns the
/// index into [`CHANNEL_PERMUTATIONS`] used.
pub fn channel_shuffle(image: &Tensor, rng: &mut Rng) -> Result<(Tensor, usize)> {
    let k = rng.random_range(0..CHANNEL_PERMUTATIONS.len());
    Ok((permute_channels(image, CHANNEL_PERMUTATIONS[k])?, k))
}

/// Cut the image into `tile × tile` squares and shuffle their positions.
pub fn mosaic_shuffle(image: &Tensor, tile: usize, rng: &mut Rng) -> Result<Tensor> {
    let &[c, h, w] = image.shape() else {
        return Err(Error::Shape(format!("expected [C,H,W], got {:?}", image.shape())));
    };
    if tile == 0 || h % tile != 0 || w % tile != 0 {
        return Err(Error::InvalidArgument(format!(
            "tile size {tile} does not divide a {h}x{w} image"
        )));
    }
    let (rows, cols) = (h / tile, w / tile);
    let mut order: Vec<usize> = (0..rows * cols).collect();
    order.shuffle(rng);
    let src = image.data();
    let mut out = vec![0.0f32; src.len()];
    for (dst_tile, &src_tile) in order.iter().enumerate() {
        let (dr, dc) = (dst_tile / cols, dst_tile % cols);
        let (sr, sc) = (src_tile / cols, src_tile % cols);
        for ch in 0..c {
            for y in 0..tile {
                let s_off = ch * h * w + (sr * tile + y) * w + sc * tile;
                let d_off = ch * h * w + (dr * tile + y) * w + dc * tile;
                out[d_off..d_off + tile].copy_from_slice(&src[s_off..s_off + tile]);
            }
        }
    }
    Tensor::new(vec![c, h, w], out)
}

/// Convert a canonical RGB stimulus to what a network with `channels`
/// inputs consumes: unchanged for 3, luma for 1.
pub fn encode_for_network(rgb: &Tensor, channels: usize) -> Result<Tensor> {
    match channels {
        3 => Ok(rgb.clone()),
        1 => rgb_to_grey(rgb),
        c => Err(Error::InvalidArgument(format!("unsupported input channel count {c}"))),
    }
}
