//! Dyadic knot refinement and level selection.
//!
//! Level `i` fits the data with `4 * 2^(i-1) + 1` equally spaced knots. Every
//! further level inserts a knot in the middle of each interval, until the
//! spacing would fall below `min_spacing`. For consecutive levels the squared
//! distance between their best-fit curves,
//! `eps_i = sum_x [S_{i+1}(x) - S_i(x)]^2`, is recorded; the output level is
//! chosen from that sequence.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::basis::{make_grid, spacing_at, PhantomMode};
use crate::error::{Error, Result};
use crate::fit::{fit, SplineFit};
use crate::spectrum::{ChannelRange, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// Level with the smallest epsilon; ties go to the coarser level.
    #[default]
    GlobalMin,
    /// First level whose epsilon is below the next one. Falls back to
    /// `GlobalMin` when the sequence never turns upward.
    FirstLocalMin,
    /// A fixed level.
    Fixed(u32),
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionRule::GlobalMin => f.write_str("global-min"),
            SelectionRule::FirstLocalMin => f.write_str("first-local-min"),
            SelectionRule::Fixed(k) => write!(f, "fixed:{k}"),
        }
    }
}

impl FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "global-min" => Ok(SelectionRule::GlobalMin),
            "first-local-min" => Ok(SelectionRule::FirstLocalMin),
            other => other
                .strip_prefix("fixed:")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k >= 1)
                .map(SelectionRule::Fixed)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "unknown selection rule {other:?} (expected global-min, first-local-min or fixed:K)"
                    ))
                }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementConfig {
    pub mode: PhantomMode,
    /// Levels whose knot spacing would drop below this are not fitted.
    pub min_spacing: f64,
    pub max_levels: u32,
    pub rule: SelectionRule,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            mode: PhantomMode::PhantomExtended,
            min_spacing: 1.0,
            max_levels: 16,
            rule: SelectionRule::GlobalMin,
        }
    }
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_spacing.is_finite() && self.min_spacing >= 1.0) {
            return Err(Error::Config(format!(
                "min_spacing must be at least 1 channel, got {}",
                self.min_spacing
            )));
        }
        if self.max_levels < 2 {
            return Err(Error::Config(format!(
                "max_levels must be at least 2, got {}",
                self.max_levels
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub level: u32,
    pub knot_count: usize,
    pub spacing: f64,
    /// Residual sum of squares of this level's fit.
    pub rss: f64,
    /// Squared distance to the next level's fit; `None` on the last level.
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementTrace {
    records: Vec<LevelRecord>,
    fits: Vec<SplineFit>,
    selected_level: Option<u32>,
}

impl RefinementTrace {
    /// A trace without fitted curves, e.g. read back from a trace file.
    /// Only selection works on such a trace.
    pub fn from_records(records: Vec<LevelRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.level as usize != i + 1 {
                return Err(Error::Config(format!(
                    "trace records must be numbered 1, 2, ...; record {} has level {}",
                    i + 1,
                    r.level
                )));
            }
            if let Some(e) = r.epsilon {
                if !(e.is_finite() && e >= 0.0) {
                    return Err(Error::Config(format!("level {}: invalid epsilon {e}", r.level)));
                }
            }
        }
        Ok(Self {
            records,
            fits: Vec::new(),
            selected_level: None,
        })
    }

    pub fn records(&self) -> &[LevelRecord] {
        &self.records
    }

    pub fn fits(&self) -> &[SplineFit] {
        &self.fits
    }

    pub fn fit_at(&self, level: u32) -> Option<&SplineFit> {
        self.fits.get((level as usize).checked_sub(1)?)
    }

    pub fn selected_level(&self) -> Option<u32> {
        self.selected_level
    }

    pub fn selected_record(&self) -> Option<&LevelRecord> {
        self.records.get(self.selected_level? as usize - 1)
    }

    /// Epsilon values in level order (levels `1..L-1`).
    pub fn epsilons(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.epsilon).collect()
    }
}

/// Fits levels `1, 2, ...` over `range` and records rss and epsilon.
///
/// Refinement stops at `config.max_levels`, when the spacing would drop
/// below `config.min_spacing`, or when the next level would have at least as
/// many basis functions as the range has channels.
pub fn run_refinement(spectrum: &Spectrum, range: ChannelRange, config: &RefinementConfig) -> Result<RefinementTrace> {
    config.validate()?;
    range.check_within(spectrum.len())?;

    let mut fits: Vec<SplineFit> = Vec::new();
    for level in 1..=config.max_levels {
        if spacing_at(range, level) < config.min_spacing {
            break;
        }
        let grid = make_grid(range, level, config.mode).map_err(|e| e.at_level(level))?;
        if grid.basis_count() >= range.channel_count() {
            break;
        }
        fits.push(fit(spectrum, &grid).map_err(|e| e.at_level(level))?);
    }
    if fits.len() < 2 {
        return Err(Error::RangeTooNarrow { levels: fits.len() });
    }

    let curves: Vec<Vec<f64>> = fits.iter().map(|f| f.evaluate_on_channels().into_counts()).collect();
    let records = fits
        .iter()
        .enumerate()
        .map(|(i, f)| LevelRecord {
            level: i as u32 + 1,
            knot_count: f.grid().knot_count(),
            spacing: f.grid().spacing(),
            rss: f.rss(),
            epsilon: curves.get(i + 1).map(|next| squared_distance(&curves[i], next)),
        })
        .collect();

    Ok(RefinementTrace {
        records,
        fits,
        selected_level: None,
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Picks a level by `rule`, stores it in the trace and returns it.
pub fn select_level(trace: &mut RefinementTrace, rule: SelectionRule) -> Result<u32> {
    let level = select_from_epsilons(&trace.epsilons(), rule)?;
    trace.selected_level = Some(level);
    Ok(level)
}

/// Level chosen by `rule` from `epsilons[i] = eps_{i+1}`.
pub fn select_from_epsilons(epsilons: &[f64], rule: SelectionRule) -> Result<u32> {
    let global_min = |eps: &[f64]| -> Result<u32> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &e) in eps.iter().enumerate() {
            if best.is_none_or(|(_, b)| e < b) {
                best = Some((i, e));
            }
        }
        best.map(|(i, _)| i as u32 + 1).ok_or(Error::NotEnoughLevels {
            needed: 1,
            available: 0,
        })
    };
    match rule {
        SelectionRule::GlobalMin => global_min(epsilons),
        SelectionRule::FirstLocalMin => {
            if epsilons.len() < 2 {
                return Err(Error::NotEnoughLevels {
                    needed: 2,
                    available: epsilons.len(),
                });
            }
            match epsilons.windows(2).position(|w| w[0] < w[1]) {
                Some(i) => Ok(i as u32 + 1),
                None => global_min(epsilons),
            }
        }
        SelectionRule::Fixed(k) => {
            if k >= 1 && (k as usize) <= epsilons.len() {
                Ok(k)
            } else {
                Err(Error::NotEnoughLevels {
                    needed: k as usize,
                    available: epsilons.len(),
                })
            }
        }
    }
}

/// Full pipeline: refine, select by `config.rule`, and return the input with
/// `range` replaced by the selected level's curve.
pub fn smooth(
    spectrum: &Spectrum,
    range: ChannelRange,
    config: &RefinementConfig,
) -> Result<(Spectrum, RefinementTrace)> {
    let mut trace = run_refinement(spectrum, range, config)?;
    let level = select_level(&mut trace, config.rule)?;
    let curve = trace
        .fit_at(level)
        .expect("selected level has a fit")
        .evaluate_on_channels();
    let mut counts = spectrum.counts().to_vec();
    counts[range.start()..=range.end()].copy_from_slice(curve.counts());
    let out = Spectrum::from_smoothed(counts)?
        .with_channel_offset(spectrum.channel_offset())
        .with_label(spectrum.label());
    Ok((out, trace))
}

pub const TRACE_HEADER: &str = "level,knot_count,spacing,rss,epsilon";

/// Shortest round-trip decimal form, zero-padded to at least 10 significant
/// digits.
pub(crate) fn format_decimal(v: f64) -> String {
    let mut s = format!("{v}");
    let digits = s.trim_start_matches('-').replace('.', "");
    let significant = digits.trim_start_matches('0').len();
    if significant < 10 {
        if !s.contains('.') {
            s.push('.');
        }
        let pad = if significant == 0 { 9 } else { 10 - significant };
        s.extend(std::iter::repeat_n('0', pad));
    }
    s
}

pub fn write_trace_csv(trace: &RefinementTrace, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in trace.records() {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.level,
            r.knot_count,
            format_decimal(r.spacing),
            format_decimal(r.rss),
            r.epsilon.map(format_decimal).unwrap_or_default()
        )?;
    }
    Ok(())
}

pub fn read_trace_csv(input: impl BufRead) -> Result<Vec<LevelRecord>> {
    let bad = |line: usize, message: String| Error::Format {
        location: format!("trace line {line}"),
        message,
    };
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == TRACE_HEADER => {}
        _ => return Err(bad(1, format!("header must be `{TRACE_HEADER}`"))),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| bad(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(bad(i + 1, format!("expected 5 fields, found {}", fields.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(i + 1, format!("{s:?} is not a number")))
        };
        records.push(LevelRecord {
            level: fields[0].parse().map_err(|_| bad(i + 1, "bad level".into()))?,
            knot_count: fields[1].parse().map_err(|_| bad(i + 1, "bad knot count".into()))?,
            spacing: num(fields[2])?,
            rss: num(fields[3])?,
            epsilon: if fields[4].is_empty() {
                None
            } else {
                Some(num(fields[4])?)
            },
        });
    }
    Ok(records)
}
