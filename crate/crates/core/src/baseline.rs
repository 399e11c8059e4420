//! Iterated weighted-mean smoothing, the classical comparison method.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Odd-length integer-style weights and their common divisor.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    weights: Vec<f64>,
    normalization: f64,
}

impl Kernel {
    pub fn new(weights: Vec<f64>, normalization: f64) -> Result<Self> {
        if weights.len() < 3 || weights.len().is_multiple_of(2) {
            return Err(Error::Config(format!(
                "kernel length must be odd and at least 3, got {}",
                weights.len()
            )));
        }
        if !(normalization.is_finite() && normalization != 0.0) || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config(
                "kernel weights and divisor must be finite, divisor nonzero".into(),
            ));
        }
        Ok(Self { weights, normalization })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_width(&self) -> usize {
        self.weights.len() / 2
    }

    pub fn taps(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w / self.normalization).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelName {
    /// `(1, 2, 1) / 4`
    Wavg3,
    /// `(-3, 12, 17, 12, -3) / 35`, the five-point quadratic/cubic
    /// Savitzky-Golay smoother.
    Wavg5,
}

impl FromStr for KernelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wavg3" => Ok(KernelName::Wavg3),
            "wavg5" => Ok(KernelName::Wavg5),
            other => Err(Error::UnknownKernel(other.to_string())),
        }
    }
}

impl fmt::Display for KernelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelName::Wavg3 => "wavg3",
            KernelName::Wavg5 => "wavg5",
        })
    }
}

impl KernelName {
    pub fn kernel(self) -> Kernel {
        match self {
            KernelName::Wavg3 => Kernel {
                weights: vec![1.0, 2.0, 1.0],
                normalization: 4.0,
            },
            KernelName::Wavg5 => Kernel {
                weights: vec![-3.0, 12.0, 17.0, 12.0, -3.0],
                normalization: 35.0,
            },
        }
    }
}

pub fn builtin_kernel(name: &str) -> Result<Kernel> {
    Ok(name.parse::<KernelName>()?.kernel())
}

/// How channels beyond the spectrum ends are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Boundary {
    /// Half-sample reflection: channel `-1 - k` reads channel `k`, and
    /// channel `m + k` reads `m - 1 - k`. Symmetric kernels then conserve
    /// the total count exactly.
    #[default]
    Mirror,
    /// Channels beyond an end repeat the end channel.
    Clamp,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mirror" => Ok(Boundary::Mirror),
            "clamp" => Ok(Boundary::Clamp),
            other => Err(Error::Config(format!(
                "unknown boundary policy {other:?} (expected mirror or clamp)"
            ))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Mirror => "mirror",
            Boundary::Clamp => "clamp",
        })
    }
}

impl Boundary {
    fn source(self, i: isize, len: usize) -> usize {
        let n = len as isize;
        let j = match self {
            Boundary::Mirror if i < 0 => -1 - i,
            Boundary::Mirror if i >= n => 2 * n - 1 - i,
            Boundary::Clamp => i.clamp(0, n - 1),
            _ => i,
        };
        j as usize
    }
}

#[allow(clippy::needless_range_loop)]
fn convolve_pass(src: &[f64], dst: &mut [f64], taps: &[f64], boundary: Boundary) {
    let n = src.len();
    let half = taps.len() / 2;
    let edge = |i: usize| -> f64 {
        taps.iter()
            .enumerate()
            .map(|(k, t)| t * src[boundary.source(i as isize + k as isize - half as isize, n)])
            .sum()
    };
    for i in 0..half.min(n) {
        dst[i] = edge(i);
    }
    for i in half..n.saturating_sub(half) {
        dst[i] = taps.iter().zip(&src[i - half..=i + half]).map(|(t, v)| t * v).sum();
    }
    for i in n.saturating_sub(half).max(half)..n {
        dst[i] = edge(i);
    }
}

/// Applies the normalised kernel `iterations` times.
pub fn convolve_smooth(spectrum: &Spectrum, kernel: &Kernel, iterations: u32, boundary: Boundary) -> Result<Spectrum> {
    if iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }
    if spectrum.len() < kernel.len() {
        return Err(Error::SpectrumTooShort {
            len: spectrum.len(),
            kernel: kernel.len(),
        });
    }
    let taps = kernel.taps();
    let mut current = spectrum.counts().to_vec();
    let mut next = vec![0.0; current.len()];
    for _ in 0..iterations {
        convolve_pass(&current, &mut next, &taps, boundary);
        std::mem::swap(&mut current, &mut next);
    }
    Ok(Spectrum::from_smoothed(current)?
        .with_channel_offset(spectrum.channel_offset())
        .with_label(spectrum.label()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spectrum(counts: Vec<f64>) -> Spectrum {
        Spectrum::from_smoothed(counts).unwrap()
    }

    #[test]
    fn builtin_weights() {
        assert_eq!(builtin_kernel("wavg3").unwrap().taps(), vec![0.25, 0.5, 0.25]);
        let k5 = builtin_kernel("wavg5").unwrap();
        assert_eq!(k5.weights().iter().sum::<f64>() / k5.normalization(), 1.0);
        assert!(matches!(builtin_kernel("boxcar7"), Err(Error::UnknownKernel(_))));
        assert!(Kernel::new(vec![1.0, 1.0], 2.0).is_err());
        assert!(Kernel::new(vec![1.0], 1.0).is_err());
    }

    #[test]
    fn impulse_response_wavg3() {
        let mut counts = vec![0.0; 20];
        counts[10] = 4.0;
        let out = convolve_smooth(&spectrum(counts), &KernelName::Wavg3.kernel(), 1, Boundary::Mirror).unwrap();
        let mut expected = vec![0.0; 20];
        expected[9] = 1.0;
        expected[10] = 2.0;
        expected[11] = 1.0;
        assert_eq!(out.counts(), expected.as_slice());
    }

    #[test]
    fn constants_are_fixed_points() {
        for name in [KernelName::Wavg3, KernelName::Wavg5] {
            for boundary in [Boundary::Mirror, Boundary::Clamp] {
                let s = spectrum(vec![42.0; 64]);
                let out = convolve_smooth(&s, &name.kernel(), 200, boundary).unwrap();
                for v in out.counts() {
                    assert!((v - 42.0).abs() < 1e-9, "{name} {boundary}: {v}");
                }
            }
        }
    }

    #[test]
    fn wavg5_preserves_interior_cubic() {
        let f = |x: f64| 0.002 * x.powi(3) - 0.3 * x * x + 4.0 * x + 7.0;
        let s = spectrum((0..60).map(|x| f(x as f64)).collect());
        let out = convolve_smooth(&s, &KernelName::Wavg5.kernel(), 1, Boundary::Mirror).unwrap();
        for x in 2..58 {
            assert!((out.counts()[x] - f(x as f64)).abs() <= 1e-9 * (1.0 + f(x as f64).abs()));
        }
    }

    #[test]
    fn mirror_boundary_reads_reflected_channels() {
        let s = spectrum((0..8).map(|x| x as f64).collect());
        let out = convolve_smooth(&s, &KernelName::Wavg3.kernel(), 1, Boundary::Mirror).unwrap();
        // channel -1 reads channel 0; channel 8 reads channel 7.
        assert_eq!(out.counts()[0], 0.25 * 0.0 + 0.5 * 0.0 + 0.25 * 1.0);
        assert_eq!(out.counts()[7], 0.25 * 6.0 + 0.5 * 7.0 + 0.25 * 7.0);
        let out5 = convolve_smooth(&s, &KernelName::Wavg5.kernel(), 1, Boundary::Clamp).unwrap();
        let want = (-3.0 * 0.0 + 12.0 * 0.0 + 17.0 * 0.0 + 12.0 * 1.0 - 3.0 * 2.0) / 35.0;
        assert!((out5.counts()[0] - want).abs() < 1e-15);
    }

    #[test]
    fn short_spectrum_and_zero_iterations() {
        let s = spectrum(vec![1.0; 4]);
        assert!(matches!(
            convolve_smooth(&s, &KernelName::Wavg5.kernel(), 1, Boundary::Mirror),
            Err(Error::SpectrumTooShort { len: 4, kernel: 5 })
        ));
        assert!(convolve_smooth(&s, &KernelName::Wavg3.kernel(), 0, Boundary::Mirror).is_err());
    }

    #[test]
    fn iterations_compose() {
        let s = spectrum((0..40).map(|x| ((x * 7919) % 13) as f64).collect());
        let k = KernelName::Wavg3.kernel();
        let twice = convolve_smooth(&s, &k, 2, Boundary::Mirror).unwrap();
        let once = convolve_smooth(&s, &k, 1, Boundary::Mirror).unwrap();
        let again = convolve_smooth(&once, &k, 1, Boundary::Mirror).unwrap();
        assert_eq!(twice.counts(), again.counts());
    }

    proptest! {
        #[test]
        fn mirror_conserves_mass(
            counts in prop::collection::vec(0.0f64..1e4, 5..200),
            five in any::<bool>(),
            iterations in 1u32..20,
        ) {
            let name = if five { KernelName::Wavg5 } else { KernelName::Wavg3 };
            let s = spectrum(counts);
            let out = convolve_smooth(&s, &name.kernel(), iterations, Boundary::Mirror).unwrap();
            let before: f64 = s.counts().iter().sum();
            let after: f64 = out.counts().iter().sum();
            prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));
        }

        #[test]
        fn interior_shift_equivariance(pos in 10usize..40, shift in 1usize..10, five in any::<bool>()) {
            let name = if five { KernelName::Wavg5 } else { KernelName::Wavg3 };
            let impulse = |p: usize| {
                let mut c = vec![0.0; 80];
                c[p] = 1.0;
                spectrum(c)
            };
            let a = convolve_smooth(&impulse(pos), &name.kernel(), 3, Boundary::Mirror).unwrap();
            let b = convolve_smooth(&impulse(pos + shift), &name.kernel(), 3, Boundary::Mirror).unwrap();
            for x in 0..70 {
                prop_assert!((a.counts()[x] - b.counts()[x + shift]).abs() < 1e-15);
            }
        }

        #[test]
        fn wavg5_reproduces_random_cubics(
            c in prop::collection::vec(-10.0f64..10.0, 4),
            len in 8usize..100,
        ) {
            let f = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x * 1e-2;
            let s = spectrum((0..len).map(|x| f(x as f64)).collect());
            let out = convolve_smooth(&s, &KernelName::Wavg5.kernel(), 1, Boundary::Mirror).unwrap();
            for x in 2..len - 2 {
                let want = f(x as f64);
                prop_assert!((out.counts()[x] - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }
    }
}
