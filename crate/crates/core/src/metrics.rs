//! Distances between spectra and simple peak-shape measurements.

use crate::error::{Error, Result};
use crate::spectrum::{ChannelRange, Spectrum};

fn paired<'a>(a: &'a Spectrum, b: &'a Spectrum, range: ChannelRange) -> Result<(&'a [f64], &'a [f64])> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    range.check_within(a.len())?;
    Ok((a.slice(range), b.slice(range)))
}

/// Sum of squared differences over `range`.
pub fn epsilon_between(a: &Spectrum, b: &Spectrum, range: ChannelRange) -> Result<f64> {
    let (a, b) = paired(a, b, range)?;
    Ok(a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum())
}

/// Root-mean-square difference over `range`.
pub fn rmse(a: &Spectrum, b: &Spectrum, range: ChannelRange) -> Result<f64> {
    Ok((epsilon_between(a, b, range)? / range.channel_count() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakMeasurement {
    /// Index-space position of the apex (add the channel offset for labels).
    pub centroid: f64,
    pub fwhm: f64,
    pub height: f64,
}

/// Measures the highest peak inside `window`.
///
/// The apex comes from a parabola through the maximum and its two
/// neighbours; the width is the distance between the linearly interpolated
/// half-height crossings on either side.
pub fn measure_peak(s: &Spectrum, window: ChannelRange) -> Result<PeakMeasurement> {
    window.check_within(s.len())?;
    let (a, b) = (window.start(), window.end());
    let y = s.counts();
    let no_peak = |reason: &str| Error::NoPeak {
        a,
        b,
        reason: reason.to_string(),
    };

    let mut top = a;
    for i in a..=b {
        if y[i] > y[top] {
            top = i;
        }
    }
    let height = y[top];
    if height.is_nan() || height <= 0.0 {
        return Err(no_peak("window has no positive counts"));
    }
    let plateau_end = (top..=b).take_while(|&i| y[i] == height).last().unwrap_or(top);
    if top == a || plateau_end == b {
        return Err(no_peak("maximum lies on the window edge"));
    }

    let (left, mid, right) = (y[top - 1], height, y[top + 1]);
    let curvature = left - 2.0 * mid + right;
    let centroid = if plateau_end == top && curvature < 0.0 {
        top as f64 + 0.5 * (left - right) / curvature
    } else {
        0.5 * (top + plateau_end) as f64
    };

    let half = 0.5 * height;
    let left_cross = (a..top)
        .rev()
        .find(|&j| y[j] <= half)
        .map(|j| j as f64 + (half - y[j]) / (y[j + 1] - y[j]))
        .ok_or_else(|| no_peak("no half-height crossing left of the maximum"))?;
    let right_cross = (plateau_end + 1..=b)
        .find(|&j| y[j] <= half)
        .map(|j| j as f64 - (half - y[j]) / (y[j - 1] - y[j]))
        .ok_or_else(|| no_peak("no half-height crossing right of the maximum"))?;

    Ok(PeakMeasurement {
        centroid,
        fwhm: right_cross - left_cross,
        height,
    })
}
