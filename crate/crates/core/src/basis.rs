//! Uniform cubic B-spline basis on dyadically refined knot grids.

use crate::error::{Error, Result};
use crate::spectrum::ChannelRange;

/// Cardinal cubic B-spline, supported on `(-2, 2)` with `phi(0) = 2/3`.
pub fn phi(x: f64) -> f64 {
    let ax = x.abs();
    if ax >= 2.0 {
        0.0
    } else if ax <= 1.0 {
        0.5 * ax * ax * ax - ax * ax + 2.0 / 3.0
    } else {
        let u = 2.0 - ax;
        u * u * u / 6.0
    }
}

/// First derivative of [`phi`].
pub fn phi_d1(x: f64) -> f64 {
    let ax = x.abs();
    let d = if ax >= 2.0 {
        0.0
    } else if ax <= 1.0 {
        1.5 * ax * ax - 2.0 * ax
    } else {
        let u = 2.0 - ax;
        -0.5 * u * u
    };
    if x < 0.0 {
        -d
    } else {
        d
    }
}

/// Second derivative of [`phi`].
pub fn phi_d2(x: f64) -> f64 {
    let ax = x.abs();
    if ax >= 2.0 {
        0.0
    } else if ax <= 1.0 {
        3.0 * ax - 2.0
    } else {
        2.0 - ax
    }
}

/// Where basis functions are centred relative to the knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum PhantomMode {
    /// One extra centre beyond each end of the range: `K + 2` functions,
    /// which together reproduce constants exactly on `[a, b]`.
    #[default]
    PhantomExtended,
    /// One function per knot: `K` functions. Loses partition of unity near
    /// the range ends.
    PaperStrict,
}

/// Nonzero basis values at one abscissa: `values[k]` belongs to basis
/// function `first + k`, for `k < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveWindow {
    pub first: usize,
    pub values: [f64; 4],
    pub len: usize,
}

/// Equally spaced knots `a = x_0 < ... < x_{K-1} = b` for one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotGrid {
    range: ChannelRange,
    level: u32,
    knots: Vec<f64>,
    spacing: f64,
    mode: PhantomMode,
}

/// Knot count at `level`: 5 at level 1, one midpoint inserted per interval
/// at each further level.
pub fn knot_count_at(level: u32) -> usize {
    4 * (1usize << (level - 1)) + 1
}

/// Knot spacing at `level` for `range`.
pub fn spacing_at(range: ChannelRange, level: u32) -> f64 {
    range.width() as f64 / (4.0 * 2f64.powi(level as i32 - 1))
}

pub fn make_grid(range: ChannelRange, level: u32, mode: PhantomMode) -> Result<KnotGrid> {
    if level == 0 {
        return Err(Error::Config("refinement levels start at 1".into()));
    }
    let spacing = spacing_at(range, level);
    if spacing < 1.0 {
        return Err(Error::SpacingTooFine { level, spacing });
    }
    let count = knot_count_at(level);
    let a = range.start() as f64;
    let mut knots: Vec<f64> = (0..count).map(|j| a + j as f64 * spacing).collect();
    knots[count - 1] = range.end() as f64;
    Ok(KnotGrid {
        range,
        level,
        knots,
        spacing,
        mode,
    })
}

impl KnotGrid {
    pub fn range(&self) -> ChannelRange {
        self.range
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn knot_count(&self) -> usize {
        self.knots.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn mode(&self) -> PhantomMode {
        self.mode
    }

    pub fn basis_count(&self) -> usize {
        match self.mode {
            PhantomMode::PhantomExtended => self.knots.len() + 2,
            PhantomMode::PaperStrict => self.knots.len(),
        }
    }

    /// Centre of basis function `j` (no bounds check).
    pub fn center(&self, j: usize) -> f64 {
        let a = self.range.start() as f64;
        match self.mode {
            PhantomMode::PhantomExtended => a + (j as f64 - 1.0) * self.spacing,
            PhantomMode::PaperStrict => a + j as f64 * self.spacing,
        }
    }

    /// `phi((x - center_j) / h)`.
    pub fn basis_value(&self, j: usize, x: f64) -> Result<f64> {
        if j >= self.basis_count() {
            return Err(Error::Index {
                index: j,
                count: self.basis_count(),
            });
        }
        Ok(phi((x - self.center(j)) / self.spacing))
    }

    /// The (at most four) basis functions whose support contains `x`.
    /// `x` is clamped into `[a, b]`.
    pub fn active_window(&self, x: f64) -> ActiveWindow {
        let a = self.range.start() as f64;
        let last_cell = self.knots.len() - 2;
        let t = ((x - a) / self.spacing).max(0.0);
        let cell = (t.floor() as usize).min(last_cell);
        // Knot indices cell-1 ..= cell+2 carry the support at x.
        let (first_knot, len) = match self.mode {
            PhantomMode::PhantomExtended => (cell as isize - 1, 4),
            PhantomMode::PaperStrict => {
                let lo = (cell as isize - 1).max(0);
                let hi = (cell + 2).min(self.knots.len() - 1) as isize;
                (lo, (hi - lo + 1) as usize)
            }
        };
        let mut values = [0.0; 4];
        for (k, v) in values.iter_mut().enumerate().take(len) {
            *v = phi(t - (first_knot + k as isize) as f64);
        }
        let first = match self.mode {
            PhantomMode::PhantomExtended => (first_knot + 1) as usize,
            PhantomMode::PaperStrict => first_knot as usize,
        };
        ActiveWindow { first, values, len }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn range(a: usize, b: usize) -> ChannelRange {
        ChannelRange::new(a, b).unwrap()
    }

    #[test]
    fn phi_reference_values() {
        assert!((phi(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(phi(2.0), 0.0);
        assert_eq!(phi(-2.0), 0.0);
        assert_eq!(phi(7.5), 0.0);
        assert!((phi(1.5) - 1.0 / 48.0).abs() < 1e-15);
        // Both pieces meet at |x| = 1.
        let inner: f64 = 0.5 - 1.0 + 2.0 / 3.0;
        let outer: f64 = -1.0 / 6.0 + 1.0 - 2.0 + 4.0 / 3.0;
        assert!((inner - 1.0 / 6.0).abs() < 1e-15);
        assert!((outer - 1.0 / 6.0).abs() < 1e-15);
        assert!((phi(1.0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn outer_piece_matches_expanded_polynomial() {
        for i in 0..=100 {
            let x = 1.0 + i as f64 / 100.0;
            let expanded = -x.powi(3) / 6.0 + x * x - 2.0 * x + 4.0 / 3.0;
            assert!((phi(x) - expanded).abs() < 1e-14, "x = {x}");
            assert!((phi(-x) - expanded).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn derivatives_at_knots() {
        assert_eq!(phi_d1(0.0), 0.0);
        for x in [2.0, -2.0] {
            assert_eq!(phi_d1(x), 0.0);
            assert_eq!(phi_d2(x), 0.0);
        }
        assert!((phi_d1(1.0) + 0.5).abs() < 1e-15);
        assert!((phi_d1(-1.0) - 0.5).abs() < 1e-15);
        assert!((phi_d2(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn level_one_grid_on_8192_channels() {
        let g = make_grid(range(0, 8191), 1, PhantomMode::PhantomExtended).unwrap();
        assert_eq!(g.knots(), &[0.0, 2047.75, 4095.5, 6143.25, 8191.0]);
        assert_eq!(g.spacing(), 2047.75);
        assert_eq!(g.basis_count(), 7);
        let strict = make_grid(range(0, 8191), 1, PhantomMode::PaperStrict).unwrap();
        assert_eq!(strict.basis_count(), 5);
    }

    #[test]
    fn level_two_halves_spacing() {
        let g = make_grid(range(0, 8191), 2, PhantomMode::PhantomExtended).unwrap();
        assert_eq!(g.knot_count(), 9);
        assert_eq!(g.spacing(), 1023.875);
        for w in g.knots().windows(2) {
            assert!((w[1] - w[0] - g.spacing()).abs() <= 1e-9 * g.spacing());
        }
    }

    #[test]
    fn too_fine_spacing_rejected() {
        assert!(matches!(
            make_grid(range(0, 100), 8, PhantomMode::PhantomExtended),
            Err(Error::SpacingTooFine { level: 8, .. })
        ));
        assert!(make_grid(range(0, 100), 0, PhantomMode::PhantomExtended).is_err());
    }

    #[test]
    fn basis_value_centering_and_support() {
        let g = make_grid(range(10, 110), 2, PhantomMode::PaperStrict).unwrap();
        let h = g.spacing();
        for j in 0..g.basis_count() {
            let c = g.knots()[j];
            assert!((g.basis_value(j, c).unwrap() - 2.0 / 3.0).abs() < 1e-15);
            assert_eq!(g.basis_value(j, c + 2.0 * h).unwrap(), 0.0);
            assert_eq!(g.basis_value(j, c - 2.5 * h).unwrap(), 0.0);
        }
        assert!(matches!(g.basis_value(g.basis_count(), 50.0), Err(Error::Index { .. })));
    }

    #[test]
    fn phantom_centres_extend_one_knot() {
        let g = make_grid(range(0, 64), 1, PhantomMode::PhantomExtended).unwrap();
        assert_eq!(g.center(0), -16.0);
        assert_eq!(g.center(g.basis_count() - 1), 80.0);
    }

    #[test]
    fn active_window_matches_full_sum() {
        for mode in [PhantomMode::PhantomExtended, PhantomMode::PaperStrict] {
            let g = make_grid(range(3, 203), 3, mode).unwrap();
            for i in 0..=400 {
                let x = 3.0 + i as f64 * 0.5;
                let w = g.active_window(x);
                let mut dense = vec![0.0; g.basis_count()];
                for (k, v) in w.values[..w.len].iter().enumerate() {
                    dense[w.first + k] = *v;
                }
                for (j, d) in dense.iter().enumerate() {
                    let full = g.basis_value(j, x).unwrap();
                    assert!((full - d).abs() < 1e-15, "{mode:?} x={x} j={j}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_phantom() {
        for level in 1..=5 {
            let g = make_grid(range(0, 1000), level, PhantomMode::PhantomExtended).unwrap();
            for i in 0..=2000 {
                let x = i as f64 * 0.5;
                let sum: f64 = (0..g.basis_count()).map(|j| g.basis_value(j, x).unwrap()).sum();
                assert!((sum - 1.0).abs() <= 1e-12, "level {level} x {x}: {sum}");
            }
        }
    }

    #[test]
    fn strict_mode_droops_at_ends() {
        let g = make_grid(range(0, 100), 1, PhantomMode::PaperStrict).unwrap();
        let sum: f64 = (0..g.basis_count()).map(|j| g.basis_value(j, 0.0).unwrap()).sum();
        assert!((sum - 5.0 / 6.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn phi_is_even(x in -5.0f64..5.0) {
            prop_assert_eq!(phi(x), phi(-x));
        }

        #[test]
        fn refinability(x in -3.0f64..3.0) {
            let fine = (phi(2.0 * x - 2.0)
                + 4.0 * phi(2.0 * x - 1.0)
                + 6.0 * phi(2.0 * x)
                + 4.0 * phi(2.0 * x + 1.0)
                + phi(2.0 * x + 2.0)) / 8.0;
            prop_assert!((phi(x) - fine).abs() <= 1e-12);
        }
    }
}
