//! Scalar colour-space conversions in `f64`.

use crate::error::{Error, Result};

pub type Rgb = [f64; 3];

/// HSL to RGB via chroma `C = (1 - |2l - 1|)·s`, `X = C·(1 - |(h/60 mod 2) - 1|)`
/// and offset `m = l - C/2`. `h` is wrapped into `[0, 360)`.
pub fn hsl_to_rgb(h: f64, s: f64, l: f64) -> Rgb {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    chroma_to_rgb(h, c, l - c / 2.0)
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> Rgb {
    let c = v * s;
    chroma_to_rgb(h, c, v - c)
}

fn chroma_to_rgb(h: f64, c: f64, m: f64) -> Rgb {
    let h = h.rem_euclid(360.0);
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

/// Derivative of [`hsl_to_rgb`] with respect to hue, per degree.
///
/// Within a 60° sector only the channel carrying `X` varies, rising with
/// slope `C/60` in even sectors and falling in odd ones. At multiples of
/// 60° the conversion has a kink and an error is returned.
pub fn hue_jacobian(h: f64, s: f64, l: f64) -> Result<Rgb> {
    let h = h.rem_euclid(360.0);
    if h % 60.0 == 0.0 {
        return Err(Error::UndefinedAtKink(h));
    }
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let sector = (h / 60.0) as usize;
    let slope = if sector % 2 == 0 { c / 60.0 } else { -c / 60.0 };
    let channel = match sector {
        0 | 3 => 1,
        1 | 4 => 0,
        _ => 2,
    };
    let mut d = [0.0; 3];
    d[channel] = slope;
    Ok(d)
}

/// RGB to HSV with hue in degrees; achromatic pixels get hue 0.
pub fn rgb_to_hsv(rgb: Rgb) -> (f64, f64, f64) {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h, s, max)
}

const WHITE_D65: [f64; 3] = [0.950_47, 1.0, 1.088_83];

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// sRGB in `[0,1]` to CIE L*a*b* under a D65 white point.
pub fn rgb_to_lab(rgb: Rgb) -> [f64; 3] {
    let [r, g, b] = rgb.map(srgb_to_linear);
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;
    let fx = lab_f(x / WHITE_D65[0]);
    let fy = lab_f(y / WHITE_D65[1]);
    let fz = lab_f(z / WHITE_D65[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}
