//! End-to-end rough-clustering change detector.
//!
//! For two co-registered images the detector:
//!
//! 1. maps both images to scalars with `R + 2G + 3B`;
//! 2. builds an information system over all pixels whose two attributes are
//!    the binned scalar of each image;
//! 3. partitions pixels by that joint code, picks a candidate changed set
//!    from the absolute scalar difference, and approximates it;
//! 4. records the Pawlak accuracy of the approximation;
//! 5. marks a pixel changed when the rough membership of its class in the
//!    candidate set reaches the threshold;
//! 6. emits the mask, white for changed and black for unchanged.
//!
//! The lower approximation holds pixels that are certainly changed and the
//! boundary holds pixels that are possibly changed.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use image::ImageFormat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{
    self, abs_difference, quantize, transform_to_scalar, RasterImage, ScalarField, MAX_SCALAR,
    SCALAR_LEVELS,
};
use crate::rough::{
    approximate, induce_partition, rough_memberships, ElementSet, InformationSystem, Partition,
    RoughApproximation,
};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_BINS: u32 = 32;

/// Named thresholds matching published example scenes.
pub const THRESHOLD_PRESETS: &[(&str, f64)] = &[
    ("landsat", 0.5),
    ("cell-patch", 0.55),
    ("hall-monitor", 0.52),
    ("satellite-sensitive", 0.3),
    ("multispectral-band", 0.5),
];

pub fn preset_threshold(name: &str) -> Option<f64> {
    THRESHOLD_PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|&(_, t)| t)
}

/// How the scalar-difference cutoff defining the candidate set is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(into = "String", try_from = "String")]
pub enum CandidateRule {
    /// Maximize between-class variance of the difference histogram.
    #[default]
    Otsu,
    /// Ceiling of the mean difference.
    Mean,
    /// A fixed cutoff in `0..=1530`.
    Fixed(u16),
}

impl fmt::Display for CandidateRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateRule::Otsu => f.write_str("otsu"),
            CandidateRule::Mean => f.write_str("mean"),
            CandidateRule::Fixed(t0) => write!(f, "fixed:{t0}"),
        }
    }
}

impl FromStr for CandidateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "otsu" => Ok(CandidateRule::Otsu),
            "mean" => Ok(CandidateRule::Mean),
            other => {
                let value = other
                    .strip_prefix("fixed:")
                    .ok_or_else(|| Error::invalid(format!("unknown candidate rule {other:?}")))?;
                let t0: u16 = value
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad fixed cutoff {value:?}")))?;
                if t0 > MAX_SCALAR {
                    return Err(Error::invalid(format!(
                        "fixed cutoff {t0} exceeds {MAX_SCALAR}"
                    )));
                }
                Ok(CandidateRule::Fixed(t0))
            }
        }
    }
}

impl From<CandidateRule> for String {
    fn from(rule: CandidateRule) -> String {
        rule.to_string()
    }
}

impl TryFrom<String> for CandidateRule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Rough-membership threshold in `[0, 1]`.
    #[serde(rename = "threshold_T")]
    pub threshold: f64,
    /// Bins per image when coding scalars into attributes.
    #[serde(rename = "bins_B")]
    pub bins: u32,
    pub candidate_rule: CandidateRule,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            threshold: DEFAULT_THRESHOLD,
            bins: DEFAULT_BINS,
            candidate_rule: CandidateRule::Otsu,
        }
    }
}

impl DetectionParams {
    pub fn with_threshold(threshold: f64) -> Self {
        DetectionParams {
            threshold,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if self.bins == 0 || self.bins as usize > SCALAR_LEVELS {
            return Err(Error::invalid(format!(
                "bins {} outside 1..={SCALAR_LEVELS}",
                self.bins
            )));
        }
        if let CandidateRule::Fixed(t0) = self.candidate_rule {
            if t0 > MAX_SCALAR {
                return Err(Error::invalid(format!("fixed cutoff {t0} exceeds {MAX_SCALAR}")));
            }
        }
        Ok(())
    }
}

/// Binary change verdict per pixel; `true` means changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeMask {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl ChangeMask {
    pub fn new(width: usize, height: usize, flags: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || flags.len() != width * height {
            return Err(Error::invalid(format!(
                "{} flags for a {width}x{height} mask",
                flags.len()
            )));
        }
        Ok(ChangeMask {
            width,
            height,
            flags,
        })
    }

    pub fn unchanged(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn changed_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn to_set(&self) -> ElementSet {
        ElementSet::from_flags(self.flags.clone())
    }

    /// 8-bit grayscale raster: 255 for changed, 0 for unchanged.
    pub fn to_raster(&self) -> RasterImage {
        let samples = self.flags.iter().map(|&f| if f { 255 } else { 0 }).collect();
        RasterImage::from_gray(self.width, self.height, samples)
            .expect("mask dimensions are validated at construction")
    }
}

/// Summary of one detection run. Serializes to the JSON report schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub global_accuracy: f64,
    pub changed_count: usize,
    pub lower_count: usize,
    pub upper_count: usize,
    pub candidate_t0: u16,
    #[serde(flatten)]
    pub params: DetectionParams,
}

/// Otsu cutoff over the full `0..=1530` histogram: the `t` maximizing the
/// between-class variance of `{v < t}` and `{v >= t}`. When several
/// consecutive cutoffs tie (an empty gap between modes) the middle of the
/// first tied run is returned.
pub fn otsu_cutoff(values: &[u16]) -> u16 {
    let mut hist = vec![0u64; SCALAR_LEVELS];
    for &v in values {
        hist[usize::from(v)] += 1;
    }
    let total = values.len() as f64;
    let total_sum: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();

    let mut below = 0.0;
    let mut below_sum = 0.0;
    let mut best = f64::NEG_INFINITY;
    let (mut run_start, mut run_end) = (1usize, 1usize);
    for t in 1..SCALAR_LEVELS {
        below += hist[t - 1] as f64;
        below_sum += (t - 1) as f64 * hist[t - 1] as f64;
        let above = total - below;
        let variance = if below == 0.0 || above == 0.0 {
            0.0
        } else {
            let mean_below = below_sum / below;
            let mean_above = (total_sum - below_sum) / above;
            below * above * (mean_below - mean_above).powi(2)
        };
        if variance > best {
            best = variance;
            run_start = t;
            run_end = t;
        } else if variance == best && run_end == t - 1 {
            run_end = t;
        }
    }
    (run_start + (run_end - run_start) / 2) as u16
}

/// Resolves the candidate cutoff for `diff` under `rule`. Data-driven rules
/// never resolve below 1, so an all-zero difference yields an empty set.
pub fn resolve_cutoff(diff: &ScalarField, rule: CandidateRule) -> u16 {
    let values = diff.values();
    match rule {
        CandidateRule::Fixed(t0) => t0,
        CandidateRule::Mean => {
            let n = values.len() as u64;
            let sum: u64 = values.iter().map(|&v| u64::from(v)).sum();
            sum.div_ceil(n).max(1) as u16
        }
        CandidateRule::Otsu => {
            let min = values.iter().copied().min().unwrap_or(0);
            let max = values.iter().copied().max().unwrap_or(0);
            if min == max {
                max.max(1)
            } else {
                otsu_cutoff(values)
            }
        }
    }
}

/// Pixels whose scalar difference is at least the resolved cutoff, along
/// with that cutoff.
pub fn candidate_change_set(diff: &ScalarField, rule: CandidateRule) -> (ElementSet, u16) {
    let t0 = resolve_cutoff(diff, rule);
    let flags = diff.values().iter().map(|&v| v >= t0).collect();
    (ElementSet::from_flags(flags), t0)
}

/// Everything computed for one image pair, independent of the final
/// membership threshold. Masks for several thresholds can be drawn from
/// one analysis.
#[derive(Debug, Clone)]
pub struct ChangeAnalysis {
    width: usize,
    height: usize,
    params: DetectionParams,
    partition: Partition,
    candidate_t0: u16,
    approximation: RoughApproximation,
    memberships: Vec<f64>,
}

impl ChangeAnalysis {
    pub fn params(&self) -> &DetectionParams {
        &self.params
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn candidate(&self) -> &ElementSet {
        &self.approximation.target
    }

    pub fn candidate_t0(&self) -> u16 {
        self.candidate_t0
    }

    pub fn approximation(&self) -> &RoughApproximation {
        &self.approximation
    }

    pub fn memberships(&self) -> &[f64] {
        &self.memberships
    }

    pub fn mask(&self, threshold: f64) -> ChangeMask {
        let flags = self.memberships.iter().map(|&m| m >= threshold).collect();
        ChangeMask {
            width: self.width,
            height: self.height,
            flags,
        }
    }

    pub fn report(&self, mask: &ChangeMask, threshold: f64) -> DetectionReport {
        DetectionReport {
            global_accuracy: self.approximation.accuracy,
            changed_count: mask.changed_count(),
            lower_count: self.approximation.lower.count(),
            upper_count: self.approximation.upper.count(),
            candidate_t0: self.candidate_t0,
            params: DetectionParams {
                threshold,
                ..self.params
            },
        }
    }
}

/// Runs every stage up to the per-pixel memberships.
pub fn analyze(img1: &RasterImage, img2: &RasterImage, params: &DetectionParams) -> Result<ChangeAnalysis> {
    params.validate()?;
    if img1.dimensions() != img2.dimensions() {
        return Err(Error::dims(img1.dimensions(), img2.dimensions()));
    }
    let before = transform_to_scalar(img1);
    let after = transform_to_scalar(img2);

    let codes_before = quantize(&before, params.bins)?;
    let codes_after = quantize(&after, params.bins)?;
    let is = InformationSystem::from_columns(
        vec![params.bins, params.bins],
        &[&codes_before, &codes_after],
    )?;
    let partition = induce_partition(&is, &[0, 1])?;

    let diff = abs_difference(&before, &after)?;
    let (candidate, candidate_t0) = candidate_change_set(&diff, params.candidate_rule);
    let approximation = approximate(&partition, &candidate)?;
    let memberships = rough_memberships(&partition, &candidate)?;

    Ok(ChangeAnalysis {
        width: img1.width(),
        height: img1.height(),
        params: *params,
        partition,
        candidate_t0,
        approximation,
        memberships,
    })
}

/// Detects changed pixels between two co-registered images.
///
/// A threshold of 0 is accepted but marks every pixel changed.
pub fn detect_changes(
    img1: &RasterImage,
    img2: &RasterImage,
    params: &DetectionParams,
) -> Result<(ChangeMask, DetectionReport)> {
    let analysis = analyze(img1, img2, params)?;
    if params.threshold == 0.0 {
        log::warn!("threshold 0 marks every pixel as changed");
    }
    let mask = analysis.mask(params.threshold);
    let report = analysis.report(&mask, params.threshold);
    Ok((mask, report))
}

/// Encodes the mask as 8-bit grayscale PNG or PGM (by extension).
pub fn save_mask(mask: &ChangeMask, dest: impl AsRef<Path>) -> Result<()> {
    let dest = dest.as_ref();
    let ext = dest
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let format = match ext.as_deref() {
        Some("pgm" | "pnm") => ImageFormat::Pnm,
        Some("png") => ImageFormat::Png,
        _ => {
            return Err(Error::Format(format!(
                "mask path {} must end in .png or .pgm",
                dest.display()
            )))
        }
    };
    let bytes = imaging::encode_image(&mask.to_raster(), format)?;
    std::fs::write(dest, bytes)?;
    Ok(())
}

/// Reads a mask image; any nonzero sample marks the pixel changed.
pub fn load_mask(src: impl AsRef<Path>) -> Result<ChangeMask> {
    let img = imaging::load_image(src)?;
    let c = img.channels();
    let flags = img
        .samples()
        .chunks_exact(c)
        .map(|px| px.iter().any(|&s| s != 0))
        .collect();
    ChangeMask::new(img.width(), img.height(), flags)
}
