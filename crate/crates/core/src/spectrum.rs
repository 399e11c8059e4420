//! Channel-indexed count vectors and their plain-text / CSV file forms.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Smallest measured spectrum accepted: enough for five knots spaced at
/// least two channels apart.
pub const MIN_CHANNELS: usize = 16;

/// Smallest admissible width `b - a` of a [`ChannelRange`].
pub const MIN_RANGE_WIDTH: usize = 8;

/// Counts per channel. Index `i` holds channel `channel_offset + i`.
///
/// Measured spectra (built with [`Spectrum::new`] or loaded from disk) are
/// non-negative and at least [`MIN_CHANNELS`] long. Smoothed spectra may
/// carry negative values and are built with [`Spectrum::from_smoothed`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    counts: Vec<f64>,
    channel_offset: i64,
    label: String,
}

impl Spectrum {
    pub fn new(counts: Vec<f64>) -> Result<Self> {
        if counts.len() < MIN_CHANNELS {
            return Err(Error::TooShort {
                len: counts.len(),
                min: MIN_CHANNELS,
            });
        }
        if let Some((i, v)) = counts.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::Format {
                location: format!("channel index {i}"),
                message: format!("count {v} is not a finite non-negative number"),
            });
        }
        Ok(Self {
            counts,
            channel_offset: 0,
            label: String::new(),
        })
    }

    /// Wraps derived data (smoother output). Values need only be finite.
    pub fn from_smoothed(counts: Vec<f64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::TooShort { len: 0, min: 1 });
        }
        if let Some((i, v)) = counts.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Format {
                location: format!("channel index {i}"),
                message: format!("count {v} is not finite"),
            });
        }
        Ok(Self {
            counts,
            channel_offset: 0,
            label: String::new(),
        })
    }

    pub fn with_channel_offset(mut self, offset: i64) -> Self {
        self.channel_offset = offset;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn into_counts(self) -> Vec<f64> {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn channel_offset(&self) -> i64 {
        self.channel_offset
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Range covering every channel of the spectrum.
    ///
    /// # Panics
    /// If the spectrum is shorter than `MIN_RANGE_WIDTH + 1` channels, which
    /// cannot happen for measured spectra.
    pub fn full_range(&self) -> ChannelRange {
        ChannelRange::new(0, self.len() - 1).expect("spectrum too short for a channel range")
    }

    /// Converts labelled channel numbers into an index range of this spectrum.
    pub fn range_for_channels(&self, first: i64, last: i64) -> Result<ChannelRange> {
        let a = first - self.channel_offset;
        let b = last - self.channel_offset;
        if a < 0 || b < 0 {
            return Err(Error::InvalidRange {
                a: first,
                b: last,
                reason: format!("first channel of the spectrum is {}", self.channel_offset),
            });
        }
        let range = ChannelRange::new(a as usize, b as usize)?;
        range.check_within(self.len())?;
        Ok(range)
    }

    pub(crate) fn slice(&self, range: ChannelRange) -> &[f64] {
        &self.counts[range.a..=range.b]
    }
}

/// Inclusive index range `a..=b` within a spectrum, with `b - a >= 8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelRange {
    a: usize,
    b: usize,
}

impl ChannelRange {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a >= b {
            return Err(Error::InvalidRange {
                a: a as i64,
                b: b as i64,
                reason: "lower bound must be below upper bound".into(),
            });
        }
        if b - a < MIN_RANGE_WIDTH {
            return Err(Error::InvalidRange {
                a: a as i64,
                b: b as i64,
                reason: format!("width must be at least {MIN_RANGE_WIDTH} channels"),
            });
        }
        Ok(Self { a, b })
    }

    pub fn start(&self) -> usize {
        self.a
    }

    pub fn end(&self) -> usize {
        self.b
    }

    /// Number of channels in the range, `b - a + 1`.
    pub fn channel_count(&self) -> usize {
        self.b - self.a + 1
    }

    pub fn width(&self) -> usize {
        self.b - self.a
    }

    pub fn check_within(&self, len: usize) -> Result<()> {
        if self.b >= len {
            return Err(Error::RangeMismatch {
                a: self.a,
                b: self.b,
                len,
            });
        }
        Ok(())
    }

    pub fn channels(&self) -> std::ops::RangeInclusive<usize> {
        self.a..=self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumFormat {
    /// One count per line, channel offset 0.
    Plain,
    /// Header `channel,count`, then one row per channel.
    Csv,
}

impl SpectrumFormat {
    /// `.csv` files are CSV; everything else is plain.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => SpectrumFormat::Csv,
            _ => SpectrumFormat::Plain,
        }
    }
}

/// Loads a measured spectrum. Negative, non-finite and non-numeric counts are
/// rejected.
pub fn load_spectrum(path: &Path, format: SpectrumFormat) -> Result<Spectrum> {
    let (counts, offset) = read_counts(path, format, false)?;
    Ok(Spectrum::new(counts)?
        .with_channel_offset(offset)
        .with_label(path.display().to_string()))
}

/// Loads smoother output, which may legitimately contain negative counts.
pub fn load_smoothed(path: &Path, format: SpectrumFormat) -> Result<Spectrum> {
    let (counts, offset) = read_counts(path, format, true)?;
    Ok(Spectrum::from_smoothed(counts)?
        .with_channel_offset(offset)
        .with_label(path.display().to_string()))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_count(field: &str, location: impl Fn() -> String, allow_negative: bool) -> Result<f64> {
    let value: f64 = field.trim().parse().map_err(|_| Error::Format {
        location: location(),
        message: format!("{field:?} is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Format {
            location: location(),
            message: format!("count {field:?} is not finite"),
        });
    }
    if !allow_negative && value < 0.0 {
        return Err(Error::Format {
            location: location(),
            message: format!("negative count {value}"),
        });
    }
    Ok(value)
}

fn read_counts(path: &Path, format: SpectrumFormat, allow_negative: bool) -> Result<(Vec<f64>, i64)> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    match format {
        SpectrumFormat::Plain => read_plain(path, BufReader::new(file), allow_negative),
        SpectrumFormat::Csv => read_csv(path, file, allow_negative),
    }
}

fn read_plain(path: &Path, reader: impl BufRead, allow_negative: bool) -> Result<(Vec<f64>, i64)> {
    let lines: Vec<String> = reader
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| io_error(path, e))?;
    let mut counts = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        // A single trailing blank line is the optional final newline.
        if line.trim().is_empty() && i + 1 == lines.len() {
            break;
        }
        let location = || format!("{}:{}", path.display(), i + 1);
        counts.push(parse_count(line, location, allow_negative)?);
    }
    Ok((counts, 0))
}

fn read_csv(path: &Path, file: File, allow_negative: bool) -> Result<(Vec<f64>, i64)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_error = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => io_error(path, source),
        other => Error::Format {
            location: path.display().to_string(),
            message: format!("{other:?}"),
        },
    };
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.len() != 2 || &headers[0] != "channel" || &headers[1] != "count" {
        return Err(Error::Format {
            location: format!("{}:1", path.display()),
            message: "header must be exactly `channel,count`".into(),
        });
    }

    let mut counts = Vec::new();
    let mut first_channel = 0i64;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = i + 2;
        let location = || format!("{}:{line}", path.display());
        if record.len() != 2 {
            return Err(Error::Format {
                location: location(),
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let channel: i64 = record[0].parse().map_err(|_| Error::Format {
            location: location(),
            message: format!("channel {:?} is not an integer", &record[0]),
        })?;
        if i == 0 {
            first_channel = channel;
        } else if channel != first_channel + i as i64 {
            return Err(Error::Format {
                location: location(),
                message: format!(
                    "channel {channel} breaks the contiguous sequence (expected {})",
                    first_channel + i as i64
                ),
            });
        }
        counts.push(parse_count(&record[1], location, allow_negative)?);
    }
    Ok((counts, first_channel))
}

/// Writes `channel,count` CSV. Counts use the shortest decimal form that
/// parses back to the same `f64`.
pub fn save_spectrum(spectrum: &Spectrum, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut out = BufWriter::new(file);
    write_spectrum_csv(spectrum, &mut out).map_err(|e| io_error(path, e))?;
    out.flush().map_err(|e| io_error(path, e))
}

pub(crate) fn write_spectrum_csv(spectrum: &Spectrum, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "channel,count")?;
    for (i, v) in spectrum.counts().iter().enumerate() {
        writeln!(out, "{},{}", spectrum.channel_offset() + i as i64, v)?;
    }
    Ok(())
}
