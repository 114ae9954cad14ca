use super::probe::TuningCurve;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponencyClass {
    Opponent,
    NonOpponent,
    Unresponsive,
}

impl OpponencyClass {
    pub const ALL: [OpponencyClass; 3] = [
        OpponencyClass::Opponent,
        OpponencyClass::NonOpponent,
        OpponencyClass::Unresponsive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OpponencyClass::Opponent => "opponent",
            OpponencyClass::NonOpponent => "non_opponent",
            OpponencyClass::Unresponsive => "unresponsive",
        }
    }
}

impl fmt::Display for OpponencyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Opponent if some post-activation response exceeds the baseline and
/// another falls below it; unresponsive if every response equals it.
pub fn classify(curve: &TuningCurve) -> OpponencyClass {
    classify_responses(&curve.post, curve.baseline_post)
}

/// [`classify`] on a bare response vector.
pub fn classify_responses(responses: &[f32], baseline: f32) -> OpponencyClass {
    let excited = responses.iter().any(|&r| r > baseline);
    let inhibited = responses.iter().any(|&r| r < baseline);
    match (excited, inhibited) {
        (true, true) => OpponencyClass::Opponent,
        (false, false) => OpponencyClass::Unresponsive,
        _ => OpponencyClass::NonOpponent,
    }
}

pub fn classify_double(spatial: OpponencyClass, colour: OpponencyClass) -> bool {
    spatial == OpponencyClass::Opponent && colour == OpponencyClass::Opponent
}

/// Selected hue plus a flag for curves with no unique extremum
/// (every response equal).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuePick {
    pub hue: f64,
    pub degenerate: bool,
}

fn first_extremum(values: &[f32], better: impl Fn(f32, f32) -> bool) -> (usize, bool) {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if better(v, values[best]) {
            best = i;
        }
    }
    let degenerate = values.iter().all(|&v| v == values[0]);
    (best, degenerate)
}

/// Hue of the largest post-activation response.
pub fn most_excitatory_hue(curve: &TuningCurve) -> Option<HuePick> {
    let (i, degenerate) = first_extremum(&curve.post, |a, b| a > b);
    curve.hue_at(i).map(|hue| HuePick { hue, degenerate })
}

/// Hue of the smallest pre-activation response (post-activation is flat
/// wherever the ReLU clips).
pub fn most_inhibitory_hue(curve: &TuningCurve) -> Option<HuePick> {
    let (i, degenerate) = first_extremum(&curve.pre, |a, b| a < b);
    curve.hue_at(i).map(|hue| HuePick { hue, degenerate })
}

/// Index of the stimulus with the largest post-activation response.
pub fn preferred_stimulus(curve: &TuningCurve) -> usize {
    first_extremum(&curve.post, |a, b| a > b).0
}

/// The six named hue ranges, left-closed; red wraps through 0°.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HueBin {
    Red,
    Yellow,
    Green,
    Cyan,
    Blue,
    Magenta,
}

impl HueBin {
    pub const ALL: [HueBin; 6] = [
        HueBin::Red,
        HueBin::Yellow,
        HueBin::Green,
        HueBin::Cyan,
        HueBin::Blue,
        HueBin::Magenta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HueBin::Red => "red",
            HueBin::Yellow => "yellow",
            HueBin::Green => "green",
            HueBin::Cyan => "cyan",
            HueBin::Blue => "blue",
            HueBin::Magenta => "magenta",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

pub fn hue_bin(h: f64) -> HueBin {
    let h = h.rem_euclid(360.0);
    if !(45.0..315.0).contains(&h) {
        HueBin::Red
    } else if h < 75.0 {
        HueBin::Yellow
    } else if h < 165.0 {
        HueBin::Green
    } else if h < 195.0 {
        HueBin::Cyan
    } else if h < 285.0 {
        HueBin::Blue
    } else {
        HueBin::Magenta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use OpponencyClass::*;

    #[test]
    fn classification_definitions() {
        let b = 0.5;
        assert_eq!(classify_responses(&[b + 1.0, b - 1.0], b), Opponent);
        assert_eq!(classify_responses(&[b, b + 2.0], b), NonOpponent);
        assert_eq!(classify_responses(&[b, b - 0.1], b), NonOpponent);
        assert_eq!(classify_responses(&[b, b, b], b), Unresponsive);
        // exact comparison: one ulp counts
        let up = f32::from_bits(b.to_bits() + 1);
        assert_eq!(classify_responses(&[b, up], b), NonOpponent);
    }

    #[test]
    fn double_is_conjunction() {
        assert!(classify_double(Opponent, Opponent));
        assert!(!classify_double(Opponent, NonOpponent));
        assert!(!classify_double(Unresponsive, Opponent));
    }

    #[test]
    fn hue_bins() {
        assert_eq!(hue_bin(350.0), HueBin::Red);
        assert_eq!(hue_bin(0.0), HueBin::Red);
        assert_eq!(hue_bin(44.9), HueBin::Red);
        assert_eq!(hue_bin(45.0), HueBin::Yellow);
        assert_eq!(hue_bin(75.0), HueBin::Green);
        assert_eq!(hue_bin(170.0), HueBin::Cyan);
        assert_eq!(hue_bin(195.0), HueBin::Blue);
        assert_eq!(hue_bin(285.0), HueBin::Magenta);
        assert_eq!(hue_bin(315.0), HueBin::Red);
    }
}
