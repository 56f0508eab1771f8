//! Segmentation and localization scores, the McNemar test for paired
//! predictions, speedup, slice filtering, and a quantile-threshold
//! segmenter that stands in for a trained network.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::roi::RoiBox;
use crate::tensor::{quantile, Mask4D, Volume4D};

/// Default minimum label size for a slice to be scored.
pub const MIN_LABEL_PIXELS: usize = 25;

/// Per-voxel agreement between a label and a prediction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn tally(label: &[bool], pred: &[bool]) -> Result<Self> {
        if label.len() != pred.len() {
            return Err(Error::DimMismatch { expected: vec![label.len()], found: vec![pred.len()] });
        }
        let mut c = ConfusionCounts::default();
        c.add(label, pred);
        Ok(c)
    }

    fn add(&mut self, label: &[bool], pred: &[bool]) {
        for (&l, &p) in label.iter().zip(pred) {
            match (l, p) {
                (true, true) => self.tp += 1,
                (false, true) => self.fp += 1,
                (true, false) => self.fn_ += 1,
                (false, false) => self.tn += 1,
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `TP / (TP + FN)`; 1.0 when there is nothing to find.
    pub fn recall(&self) -> f64 {
        let denom = self.tp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            self.tp as f64 / denom as f64
        }
    }

    /// `2 TP / (2 TP + FP + FN)`; 1.0 when both masks are empty.
    pub fn dice(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

fn check_dims(label: &Mask4D, pred: &Mask4D) -> Result<()> {
    if label.dims() != pred.dims() {
        return Err(Error::DimMismatch {
            expected: label.dims().as_array().to_vec(),
            found: pred.dims().as_array().to_vec(),
        });
    }
    Ok(())
}

pub fn confusion(label: &Mask4D, pred: &Mask4D) -> Result<ConfusionCounts> {
    check_dims(label, pred)?;
    ConfusionCounts::tally(label.data(), pred.data())
}

/// Fraction of label voxels covered by the prediction.
pub fn recall(label: &Mask4D, pred: &Mask4D) -> Result<f64> {
    Ok(confusion(label, pred)?.recall())
}

pub fn dice(label: &Mask4D, pred: &Mask4D) -> Result<f64> {
    Ok(confusion(label, pred)?.dice())
}

/// Fraction of label voxels that fall inside the box, over all frames.
pub fn box_recall(label: &Mask4D, b: &RoiBox) -> Result<f64> {
    let d = label.dims();
    if d.spatial() != b.source {
        return Err(Error::DimMismatch { expected: b.source.as_array().to_vec(), found: d.spatial().as_array().to_vec() });
    }
    let (mut inside, mut total) = (0u64, 0u64);
    for t in 0..d.t {
        for z in 0..d.z {
            for y in 0..d.y {
                for x in 0..d.x {
                    if label.get(t, z, y, x) {
                        total += 1;
                        inside += b.contains(z, y, x) as u64;
                    }
                }
            }
        }
    }
    Ok(if total == 0 { 1.0 } else { inside as f64 / total as f64 })
}

/// McNemar's chi-squared with continuity correction, `(|b - c| - 1)^2 / (b + c)`,
/// where `b` and `c` count the two kinds of discordant pairs.
pub fn mcnemar_corrected(b: u64, c: u64) -> Result<f64> {
    if b + c == 0 {
        return Err(Error::InvalidParameter("McNemar test needs at least one discordant pair".into()));
    }
    let diff = (b as f64 - c as f64).abs() - 1.0;
    Ok(diff * diff / (b + c) as f64)
}

/// Discordant pair counts `(b, c)` between a baseline and a candidate
/// prediction: `b` where only the baseline is right, `c` where only the
/// candidate is.
pub fn discordant_pairs(label: &Mask4D, base: &Mask4D, ours: &Mask4D) -> Result<(u64, u64)> {
    check_dims(label, base)?;
    check_dims(label, ours)?;
    Ok(count_discordant(label.data(), base.data(), ours.data(), (0, 0)))
}

/// [`discordant_pairs`] restricted to the given `(t, z)` slices.
pub fn discordant_on_slices(
    label: &Mask4D,
    base: &Mask4D,
    ours: &Mask4D,
    slices: &[(usize, usize)],
) -> Result<(u64, u64)> {
    check_dims(label, base)?;
    check_dims(label, ours)?;
    Ok(slices.iter().fold((0, 0), |acc, &(t, z)| {
        count_discordant(label.slice(t, z), base.slice(t, z), ours.slice(t, z), acc)
    }))
}

fn count_discordant(label: &[bool], base: &[bool], ours: &[bool], (mut b, mut c): (u64, u64)) -> (u64, u64) {
    for ((&l, &p0), &p1) in label.iter().zip(base).zip(ours) {
        match (p0 == l, p1 == l) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    (b, c)
}

pub fn speedup(base_time: f64, ours_time: f64) -> Result<f64> {
    if !(base_time > 0.0 && ours_time > 0.0) {
        return Err(Error::InvalidParameter(format!("times must be > 0, got {base_time} and {ours_time}")));
    }
    Ok(base_time / ours_time)
}

/// `(t, z)` slices whose label has at least `min_pixels` voxels.
pub fn filter_slices(labels: &Mask4D, min_pixels: usize) -> Vec<(usize, usize)> {
    let d = labels.dims();
    (0..d.t)
        .flat_map(|t| (0..d.z).map(move |z| (t, z)))
        .filter(|&(t, z)| labels.slice(t, z).iter().filter(|&&b| b).count() >= min_pixels)
        .collect()
}

/// Confusion counts restricted to the given `(t, z)` slices.
pub fn confusion_on_slices(label: &Mask4D, pred: &Mask4D, slices: &[(usize, usize)]) -> Result<ConfusionCounts> {
    check_dims(label, pred)?;
    let mut c = ConfusionCounts::default();
    for &(t, z) in slices {
        c.add(label.slice(t, z), pred.slice(t, z));
    }
    Ok(c)
}

/// Marks, per `(t, z)` slice, the voxels above the slice's `p`-quantile.
pub fn threshold_segmenter(roi: &Volume4D, p: f64) -> Result<Mask4D> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("segmenter quantile must lie in [0, 1], got {p}")));
    }
    let d = roi.dims();
    let plane = d.y * d.x;
    let slices: Vec<&[f32]> = roi.data().chunks_exact(plane).collect();
    let masks = par::map_collect(&slices, |s| -> Result<Vec<bool>> {
        let q = quantile(s, p)?;
        Ok(s.iter().map(|&v| v > q).collect())
    });
    let mut data = Vec::with_capacity(d.len());
    for m in masks {
        data.extend(m?);
    }
    Mask4D::new(d, data)
}

/// Median wall-clock time of `runs` calls to `f`, plus the last result.
pub fn median_time<R>(runs: usize, mut f: impl FnMut() -> R) -> (Duration, R) {
    assert!(runs > 0);
    let mut times = Vec::with_capacity(runs);
    let mut last = None;
    for _ in 0..runs {
        let start = Instant::now();
        let r = f();
        times.push(start.elapsed());
        last = Some(r);
    }
    times.sort();
    (times[runs / 2], last.expect("at least one run"))
}

/// Scores for one prediction against one label set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub recall: f64,
    pub dice: f64,
    pub counts: ConfusionCounts,
    /// Fraction of label voxels inside the region of interest, when known.
    pub roi_recall: Option<f64>,
    pub mcnemar_chi2: Option<f64>,
    pub base_time: Option<f64>,
    pub ours_time: Option<f64>,
    pub speedup: Option<f64>,
    pub slices_scored: usize,
    pub slices_total: usize,
    pub min_pixels: usize,
    /// The label was empty, so recall fell back to 1.0.
    pub empty_label: bool,
    /// Label and prediction were both empty, so Dice fell back to 1.0.
    pub empty_both: bool,
}

impl EvalReport {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        EvalReport {
            recall: counts.recall(),
            dice: counts.dice(),
            counts,
            roi_recall: None,
            mcnemar_chi2: None,
            base_time: None,
            ours_time: None,
            speedup: None,
            slices_scored: 0,
            slices_total: 0,
            min_pixels: 0,
            empty_label: counts.tp + counts.fn_ == 0,
            empty_both: counts.tp + counts.fn_ + counts.fp == 0,
        }
    }

    /// One `key=value` pair per line; absent optional values print as `na`.
    pub fn to_key_value(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "na".to_string(), |v| format!("{v:.6}"));
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        kv("recall", format!("{:.6}", self.recall));
        kv("dice", format!("{:.6}", self.dice));
        kv("tp", self.counts.tp.to_string());
        kv("fp", self.counts.fp.to_string());
        kv("fn", self.counts.fn_.to_string());
        kv("tn", self.counts.tn.to_string());
        kv("roi_recall", opt(self.roi_recall));
        kv("mcnemar_chi2", opt(self.mcnemar_chi2));
        kv("base_time", opt(self.base_time));
        kv("ours_time", opt(self.ours_time));
        kv("speedup", opt(self.speedup));
        kv("slices_scored", self.slices_scored.to_string());
        kv("slices_total", self.slices_total.to_string());
        kv("min_pixels", self.min_pixels.to_string());
        kv("empty_label", self.empty_label.to_string());
        kv("empty_both", self.empty_both.to_string());
        s
    }
}
