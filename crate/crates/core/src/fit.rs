//! Least-squares spline fit on a fixed knot grid.
//!
//! Each channel touches at most four basis functions, so the normal
//! equations form a symmetric band system with half-bandwidth 3, solved by
//! band Cholesky in `O(m + K)`.

use crate::banded::SymBandMatrix;
use crate::basis::KnotGrid;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Half-bandwidth of the Gram matrix: functions further than three centres
/// apart have disjoint supports.
pub const GRAM_BANDWIDTH: usize = 3;

/// Relative ridge added to the Gram diagonal when the first factorisation fails.
pub const RIDGE_FACTOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SplineFit {
    grid: KnotGrid,
    coeffs: Vec<f64>,
    rss: f64,
}

impl SplineFit {
    /// Builds a spline from explicit coefficients. Its `rss` is 0, i.e. it
    /// is taken as an exact fit of its own samples.
    pub fn from_coeffs(grid: KnotGrid, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.basis_count() {
            return Err(Error::Index {
                index: coeffs.len(),
                count: grid.basis_count(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("spline coefficients must be finite".into()));
        }
        Ok(Self { grid, coeffs, rss: 0.0 })
    }

    pub fn grid(&self) -> &KnotGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Residual sum of squares against the fitted data.
    pub fn rss(&self) -> f64 {
        self.rss
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        let w = self.grid.active_window(x);
        w.values[..w.len]
            .iter()
            .zip(&self.coeffs[w.first..w.first + w.len])
            .map(|(b, c)| b * c)
            .sum()
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let range = self.grid.range();
        let (a, b) = (range.start() as f64, range.end() as f64);
        if !(a..=b).contains(&x) {
            return Err(Error::OutOfRange { x, a, b });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Samples the spline at every integer channel of its range. The result
    /// has `b - a + 1` channels and `channel_offset = a`; values are not
    /// clamped.
    pub fn evaluate_on_channels(&self) -> Spectrum {
        let range = self.grid.range();
        let values: Vec<f64> = range.channels().map(|x| self.eval_unchecked(x as f64)).collect();
        Spectrum::from_smoothed(values)
            .expect("finite coefficients give finite values")
            .with_channel_offset(range.start() as i64)
    }
}

/// Gram matrix `G[j][k] = sum_x phi_j(x) phi_k(x)` and moments
/// `r[j] = sum_x phi_j(x) N(x)` over the integer channels of the grid range.
pub fn normal_equations(spectrum: &Spectrum, grid: &KnotGrid) -> Result<(SymBandMatrix, Vec<f64>)> {
    let range = grid.range();
    range.check_within(spectrum.len())?;
    let n = grid.basis_count();
    let mut gram = SymBandMatrix::zeros(n, GRAM_BANDWIDTH);
    let mut moments = vec![0.0; n];
    for (x, &count) in range.channels().zip(spectrum.slice(range)) {
        let w = grid.active_window(x as f64);
        for p in 0..w.len {
            let (jp, vp) = (w.first + p, w.values[p]);
            moments[jp] += vp * count;
            for q in 0..=p {
                gram.add(jp, w.first + q, vp * w.values[q]);
            }
        }
    }
    Ok((gram, moments))
}

/// Coefficients minimising `sum_x [S(x) - N(x)]^2` over the channels of the
/// grid range.
pub fn fit(spectrum: &Spectrum, grid: &KnotGrid) -> Result<SplineFit> {
    let range = grid.range();
    let channels = range.channel_count();
    let basis_count = grid.basis_count();
    if basis_count >= channels {
        return Err(Error::RankDeficient { basis_count, channels });
    }
    let (mut gram, moments) = normal_equations(spectrum, grid)?;
    let factor = match gram.cholesky() {
        Ok(f) => f,
        Err(_) => {
            let mean_diag = gram.diagonal().sum::<f64>() / basis_count as f64;
            gram.add_to_diagonal(RIDGE_FACTOR * mean_diag);
            gram.cholesky()
                .map_err(|_| Error::RankDeficient { basis_count, channels })?
        }
    };
    let coeffs = factor.solve(&moments);
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::RankDeficient { basis_count, channels });
    }
    let mut fit = SplineFit {
        grid: grid.clone(),
        coeffs,
        rss: 0.0,
    };
    fit.rss = range
        .channels()
        .zip(spectrum.slice(range))
        .map(|(x, &n)| {
            let d = fit.eval_unchecked(x as f64) - n;
            d * d
        })
        .sum();
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{make_grid, PhantomMode};
    use crate::spectrum::ChannelRange;
    use proptest::prelude::*;

    fn grid(a: usize, b: usize, level: u32, mode: PhantomMode) -> KnotGrid {
        make_grid(ChannelRange::new(a, b).unwrap(), level, mode).unwrap()
    }

    fn spectrum_from(f: impl Fn(f64) -> f64, len: usize) -> Spectrum {
        Spectrum::new((0..len).map(|x| f(x as f64)).collect()).unwrap()
    }

    #[test]
    fn single_basis_function_is_recovered() {
        for mode in [PhantomMode::PhantomExtended, PhantomMode::PaperStrict] {
            let g = grid(0, 99, 2, mode);
            let s = spectrum_from(|x| 3.0 * g.basis_value(2, x).unwrap(), 100);
            let f = fit(&s, &g).unwrap();
            for (j, c) in f.coeffs().iter().enumerate() {
                let want = if j == 2 { 3.0 } else { 0.0 };
                assert!((c - want).abs() < 1e-9, "{mode:?} c[{j}] = {c}");
            }
            let energy: f64 = s.counts().iter().map(|v| v * v).sum();
            assert!(f.rss() <= 1e-16 * energy.max(1.0) + 1e-20, "rss {}", f.rss());
        }
    }

    #[test]
    fn constant_is_exact_in_phantom_mode() {
        let c = 37.5;
        let s = spectrum_from(|_| c, 200);
        let g = grid(0, 199, 3, PhantomMode::PhantomExtended);
        let f = fit(&s, &g).unwrap();
        for coef in f.coeffs() {
            assert!((coef - c).abs() < 1e-8, "{coef}");
        }
        assert!(f.rss() <= 1e-10 * 200.0 * c * c);
    }

    #[test]
    fn fit_beats_zero_coefficients() {
        let s = spectrum_from(|x| (x * 0.37).sin().abs() * 50.0 + (x % 7.0), 128);
        for level in 1..=4 {
            let g = grid(0, 127, level, PhantomMode::PhantomExtended);
            let f = fit(&s, &g).unwrap();
            let zero: f64 = s.counts().iter().map(|v| v * v).sum();
            assert!(f.rss() <= zero);
        }
    }

    #[test]
    fn evaluate_checks_range_and_uses_coefficients() {
        let g = grid(10, 74, 1, PhantomMode::PhantomExtended);
        let zero = SplineFit::from_coeffs(g.clone(), vec![0.0; g.basis_count()]).unwrap();
        assert_eq!(zero.evaluate(40.0).unwrap(), 0.0);
        assert!(matches!(zero.evaluate(9.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(zero.evaluate(74.5), Err(Error::OutOfRange { .. })));

        let ones = SplineFit::from_coeffs(g.clone(), vec![1.0; g.basis_count()]).unwrap();
        for i in 0..=640 {
            let x = 10.0 + i as f64 * 0.1;
            assert!((ones.evaluate(x).unwrap() - 1.0).abs() <= 1e-12);
        }

        let mut c = vec![0.0; g.basis_count()];
        c[2] = 1.0;
        let single = SplineFit::from_coeffs(g.clone(), c).unwrap();
        assert!((single.evaluate(g.center(2)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn evaluate_on_channels_shape() {
        let g = grid(5, 40, 1, PhantomMode::PaperStrict);
        let zero = SplineFit::from_coeffs(g.clone(), vec![0.0; g.basis_count()]).unwrap();
        let out = zero.evaluate_on_channels();
        assert_eq!(out.len(), 36);
        assert_eq!(out.channel_offset(), 5);
        assert!(out.counts().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn in_span_data_round_trips_through_channels() {
        let g = grid(0, 255, 3, PhantomMode::PhantomExtended);
        let coeffs: Vec<f64> = (0..g.basis_count())
            .map(|j| 10.0 + (j as f64 * 1.7).sin() * 5.0)
            .collect();
        let model = SplineFit::from_coeffs(g.clone(), coeffs).unwrap();
        let data = Spectrum::new(model.evaluate_on_channels().into_counts()).unwrap();
        let f = fit(&data, &g).unwrap();
        let back = f.evaluate_on_channels();
        for (u, v) in back.counts().iter().zip(data.counts()) {
            assert!((u - v).abs() <= 1e-8);
        }
    }

    #[test]
    fn too_many_basis_functions_is_rank_deficient() {
        // 17 channels at spacing 1 gives 19 phantom-extended functions.
        let s = spectrum_from(|x| x, 17);
        let g = grid(0, 16, 3, PhantomMode::PhantomExtended);
        assert!(matches!(fit(&s, &g), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn range_outside_spectrum_is_mismatch() {
        let s = spectrum_from(|x| x, 32);
        let g = grid(0, 40, 1, PhantomMode::PhantomExtended);
        assert!(matches!(fit(&s, &g), Err(Error::RangeMismatch { .. })));
    }

    #[test]
    fn gram_is_banded_and_symmetric() {
        let s = spectrum_from(|x| x.sqrt(), 300);
        let g = grid(0, 299, 4, PhantomMode::PhantomExtended);
        let (gram, moments) = normal_equations(&s, &g).unwrap();
        assert_eq!(moments.len(), g.basis_count());
        // Independent dense accumulation.
        let n = g.basis_count();
        for j in 0..n {
            for k in 0..n {
                let dense: f64 = (0..300)
                    .map(|x| g.basis_value(j, x as f64).unwrap() * g.basis_value(k, x as f64).unwrap())
                    .sum();
                if j.abs_diff(k) > GRAM_BANDWIDTH {
                    assert_eq!(dense, 0.0);
                    assert_eq!(gram.get(j, k), 0.0);
                } else {
                    assert!((gram.get(j, k) - dense).abs() < 1e-12 * (1.0 + dense));
                    assert_eq!(gram.get(j, k), gram.get(k, j));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn coefficients_are_stationary(
            counts in prop::collection::vec(0.0f64..500.0, 40..160),
            level in 1u32..4,
            strict in any::<bool>(),
            pick in any::<prop::sample::Index>(),
        ) {
            let m = counts.len();
            let mode = if strict { PhantomMode::PaperStrict } else { PhantomMode::PhantomExtended };
            let g = make_grid(ChannelRange::new(0, m - 1).unwrap(), level, mode).unwrap();
            let s = Spectrum::new(counts).unwrap();
            let f = fit(&s, &g).unwrap();
            let j = pick.index(g.basis_count());
            for delta in [1e-3, -1e-3] {
                let mut c = f.coeffs().to_vec();
                c[j] += delta;
                let p = SplineFit::from_coeffs(g.clone(), c).unwrap();
                let rss: f64 = (0..m)
                    .map(|x| (p.evaluate(x as f64).unwrap() - s.counts()[x]).powi(2))
                    .sum();
                prop_assert!(rss >= f.rss() * (1.0 - 1e-12));
            }
        }

        #[test]
        fn stored_rss_and_normal_residual(
            counts in prop::collection::vec(0.0f64..1e4, 64..400),
            level in 1u32..5,
        ) {
            let m = counts.len();
            let range = ChannelRange::new(0, m - 1).unwrap();
            prop_assume!(crate::basis::spacing_at(range, level) >= 2.0);
            let g = make_grid(range, level, PhantomMode::PhantomExtended).unwrap();
            let s = Spectrum::new(counts).unwrap();
            let f = fit(&s, &g).unwrap();
            let direct: f64 = (0..m)
                .map(|x| {
                    let v: f64 = (0..g.basis_count())
                        .map(|j| f.coeffs()[j] * g.basis_value(j, x as f64).unwrap())
                        .sum();
                    (v - s.counts()[x]).powi(2)
                })
                .sum();
            prop_assert!((direct - f.rss()).abs() <= 1e-6 * direct.max(1e-300));
            let (gram, r) = normal_equations(&s, &g).unwrap();
            let gc = gram.mul_vec(f.coeffs());
            let r_inf = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let res = gc.iter().zip(&r).fold(0.0f64, |acc, (u, v)| acc.max((u - v).abs()));
            prop_assert!(res <= 1e-8 * (1.0 + r_inf), "residual {res}");
        }
    }
}
