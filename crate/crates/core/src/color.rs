//! Dominant color descriptors.
//!
//! Each pixel is converted to HSV and quantized straight to a descriptor
//! (base name plus optional light/dark modifier). The descriptor with the
//! most votes wins; ties go to the lower descriptor index. Quantization:
//!
//! - `v < black_value_max` → black
//! - `v > white_value_min` and `s < white_sat_max` → white
//! - `s < gray_sat_max` → gray
//! - otherwise the hue picks one of 12 bins of 30° centred on 0°, 30°, …,
//!   mapped through `hue_names`; orange/yellow bins darker than
//!   `brown_value_max` become brown.
//!
//! Modifiers: `v < dark_value_max` → dark; `v > light_value_min` and
//! `s < light_sat_max` → light. White and black never carry one.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::scene::{ObjectInstance, RgbImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseColor {
    Red,
    Orange,
    Yellow,
    Green,
    Cyan,
    Blue,
    Purple,
    Pink,
    Brown,
    Gray,
    White,
    Black,
}

impl BaseColor {
    pub const ALL: [Self; 12] = [
        Self::Red,
        Self::Orange,
        Self::Yellow,
        Self::Green,
        Self::Cyan,
        Self::Blue,
        Self::Purple,
        Self::Pink,
        Self::Brown,
        Self::Gray,
        Self::White,
        Self::Black,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Red => "red",
            Self::Orange => "orange",
            Self::Yellow => "yellow",
            Self::Green => "green",
            Self::Cyan => "cyan",
            Self::Blue => "blue",
            Self::Purple => "purple",
            Self::Pink => "pink",
            Self::Brown => "brown",
            Self::Gray => "gray",
            Self::White => "white",
            Self::Black => "black",
        }
    }

    fn takes_modifier(self) -> bool {
        !matches!(self, Self::White | Self::Black)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modifier {
    Light,
    Dark,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColorDescriptor {
    pub base: BaseColor,
    pub modifier: Option<Modifier>,
}

impl ColorDescriptor {
    pub const fn plain(base: BaseColor) -> Self {
        Self {
            base,
            modifier: None,
        }
    }

    /// Dense index: `base * 3 + {none: 0, light: 1, dark: 2}`.
    pub fn index(self) -> usize {
        let m = match self.modifier {
            None => 0,
            Some(Modifier::Light) => 1,
            Some(Modifier::Dark) => 2,
        };
        self.base as usize * 3 + m
    }

    pub fn from_index(i: usize) -> Self {
        let base = BaseColor::ALL[i / 3];
        let modifier = match i % 3 {
            0 => None,
            1 => Some(Modifier::Light),
            _ => Some(Modifier::Dark),
        };
        Self { base, modifier }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        match self.modifier {
            Some(Modifier::Light) => s.push_str("light "),
            Some(Modifier::Dark) => s.push_str("dark "),
            None => {}
        }
        s.push_str(self.base.name());
        s
    }

    /// Every valid descriptor, in index order.
    pub fn all() -> Vec<Self> {
        (0..BaseColor::ALL.len() * 3)
            .map(Self::from_index)
            .filter(|d| d.base.takes_modifier() || d.modifier.is_none())
            .collect()
    }
}

impl fmt::Display for ColorDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColorThresholds {
    pub black_value_max: f64,
    pub white_value_min: f64,
    pub white_sat_max: f64,
    pub gray_sat_max: f64,
    pub light_value_min: f64,
    pub light_sat_max: f64,
    pub dark_value_max: f64,
    pub brown_value_max: f64,
}

impl Default for ColorThresholds {
    fn default() -> Self {
        Self {
            black_value_max: 0.2,
            white_value_min: 0.85,
            white_sat_max: 0.15,
            gray_sat_max: 0.2,
            light_value_min: 0.7,
            light_sat_max: 0.5,
            dark_value_max: 0.4,
            brown_value_max: 0.6,
        }
    }
}

/// Hue-bin names and the achromatic/modifier thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColorTable {
    /// Bin `k` covers hues `[30k − 15°, 30k + 15°)`.
    pub hue_names: [BaseColor; 12],
    pub thresholds: ColorThresholds,
}

impl Default for ColorTable {
    fn default() -> Self {
        use BaseColor::*;
        Self {
            hue_names: [
                Red, Orange, Yellow, Green, Green, Green, Cyan, Blue, Blue, Purple, Purple, Pink,
            ],
            thresholds: ColorThresholds::default(),
        }
    }
}

/// `(hue degrees in [0, 360), saturation, value)`.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let r = f64::from(rgb[0]) / 255.0;
    let g = f64::from(rgb[1]) / 255.0;
    let b = f64::from(rgb[2]) / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * libm::fmod((g - b) / delta + 6.0, 6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let sat = if max == 0.0 { 0.0 } else { delta / max };
    (hue, sat, max)
}

impl ColorTable {
    pub fn hue_bin(hue: f64) -> usize {
        (libm::floor((hue + 15.0) / 30.0) as i64).rem_euclid(12) as usize
    }

    /// Descriptor for a single pixel value.
    pub fn describe(&self, rgb: [u8; 3]) -> ColorDescriptor {
        let t = &self.thresholds;
        let (h, s, v) = rgb_to_hsv(rgb);
        if v < t.black_value_max {
            return ColorDescriptor::plain(BaseColor::Black);
        }
        if v > t.white_value_min && s < t.white_sat_max {
            return ColorDescriptor::plain(BaseColor::White);
        }
        let mut base = if s < t.gray_sat_max {
            BaseColor::Gray
        } else {
            self.hue_names[Self::hue_bin(h)]
        };
        if matches!(base, BaseColor::Orange | BaseColor::Yellow) && v < t.brown_value_max {
            base = BaseColor::Brown;
        }
        let modifier = if v < t.dark_value_max {
            Some(Modifier::Dark)
        } else if v > t.light_value_min && s < t.light_sat_max {
            Some(Modifier::Light)
        } else {
            None
        };
        ColorDescriptor {
            base,
            modifier: modifier.filter(|_| base.takes_modifier()),
        }
    }

    /// Vote count per descriptor index.
    pub fn histogram<I: IntoIterator<Item = [u8; 3]>>(&self, pixels: I) -> [u32; 36] {
        let mut hist = [0u32; 36];
        for rgb in pixels {
            hist[self.describe(rgb).index()] += 1;
        }
        hist
    }

    /// Mode of a histogram; `None` if empty. Ties → lowest index.
    pub fn mode(hist: &[u32; 36]) -> Option<ColorDescriptor> {
        let (best, count) = hist
            .iter()
            .enumerate()
            .fold((0, 0), |(bi, bc), (i, &c)| if c > bc { (i, c) } else { (bi, bc) });
        (count > 0).then(|| ColorDescriptor::from_index(best))
    }
}

/// Dominant color of an instance's pixels in `rgb`.
pub fn dominant_color(rgb: &RgbImage, inst: &ObjectInstance, table: &ColorTable) -> ColorDescriptor {
    let hist = table.histogram(inst.pixels.iter().map(|p| rgb.get(p.x, p.y)));
    ColorTable::mode(&hist).unwrap_or(ColorDescriptor::plain(BaseColor::Gray))
}
