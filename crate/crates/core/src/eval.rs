//! Ground-truth metrics and a seeded synthetic image-pair generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::RasterImage;
use crate::pipeline::ChangeMask;

/// Confusion-matrix summary with "changed" as the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub true_positives: usize,
    /// False alarms.
    pub false_positives: usize,
    /// Missed alarms.
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub total_error_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }
}

/// Ratio with an empty denominator scored as perfect when the matching
/// error count is also zero.
fn ratio_or_perfect(hits: usize, denom: usize, other_errors: usize) -> f64 {
    if denom > 0 {
        hits as f64 / denom as f64
    } else if other_errors == 0 {
        1.0
    } else {
        0.0
    }
}

pub fn compare_masks(pred: &ChangeMask, truth: &ChangeMask) -> Result<Metrics> {
    if pred.dimensions() != truth.dimensions() {
        return Err(Error::dims(pred.dimensions(), truth.dimensions()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &t) in pred.flags().iter().zip(truth.flags()) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let total = tp + fp + fn_ + tn;
    // no predicted positives: precision is perfect only if nothing was missed
    let precision = ratio_or_perfect(tp, tp + fp, fn_);
    let recall = ratio_or_perfect(tp, tp + fn_, fp);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: tn,
        total_error_rate: (fp + fn_) as f64 / total as f64,
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn contains(&self, col: usize, row: usize) -> bool {
        col >= self.x && col < self.x + self.w && row >= self.y && row < self.y + self.h
    }
}

/// Parameters of a synthetic before/after pair: a flat background, a
/// rectangular patch painted into the second image, and independent
/// uniform noise per channel in each image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub patch: Rect,
    pub background_rgb: [u8; 3],
    pub patch_rgb: [u8; 3],
    pub noise_amplitude: u8,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid(format!(
                "image size {}x{} is empty",
                self.width, self.height
            )));
        }
        let p = &self.patch;
        if p.w == 0 || p.h == 0 || p.x + p.w > self.width || p.y + p.h > self.height {
            return Err(Error::invalid(format!(
                "patch {},{},{},{} does not fit a {}x{} image",
                p.x, p.y, p.w, p.h, self.width, self.height
            )));
        }
        Ok(())
    }
}

fn noisy(base: u8, amplitude: i16, rng: &mut ChaCha8Rng) -> u8 {
    if amplitude == 0 {
        return base;
    }
    let offset = rng.random_range(-amplitude..=amplitude);
    (i16::from(base) + offset).clamp(0, 255) as u8
}

/// Generates `(before, after, truth)`. The output is a pure function of
/// `spec`, seed included.
pub fn synth_pair(spec: &SynthSpec) -> Result<(RasterImage, RasterImage, ChangeMask)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let amp = i16::from(spec.noise_amplitude);
    let n = spec.width * spec.height;

    let mut before = Vec::with_capacity(n * 3);
    for _ in 0..n {
        for &c in &spec.background_rgb {
            before.push(noisy(c, amp, &mut rng));
        }
    }

    let mut after = Vec::with_capacity(n * 3);
    let mut truth = Vec::with_capacity(n);
    for row in 0..spec.height {
        for col in 0..spec.width {
            let inside = spec.patch.contains(col, row);
            let base = if inside {
                &spec.patch_rgb
            } else {
                &spec.background_rgb
            };
            for &c in base {
                after.push(noisy(c, amp, &mut rng));
            }
            truth.push(inside);
        }
    }

    Ok((
        RasterImage::from_rgb(spec.width, spec.height, before)?,
        RasterImage::from_rgb(spec.width, spec.height, after)?,
        ChangeMask::new(spec.width, spec.height, truth)?,
    ))
}
