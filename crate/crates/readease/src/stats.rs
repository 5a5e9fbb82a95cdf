//! Mergeable streaming statistics, histograms, and weighted regression.

use thiserror::Error;

use crate::geo::GeoPoint;

/// Default floor applied to standard errors before inverse-variance
/// weighting, in score units. Prevents a zero-variance group from taking
/// infinite weight.
pub const DEFAULT_SE_FLOOR: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(u64),
    #[error("need at least 2 points with distinct x, got {distinct} distinct among {total}")]
    DegenerateX { distinct: usize, total: usize },
    #[error("invalid bin spec: lo {lo} must be below hi {hi} and width {width} positive")]
    InvalidBins { lo: f64, hi: f64, width: f64 },
    #[error("standard-error floor must be positive, got {0}")]
    InvalidFloor(f64),
}

/// Welford accumulator over a stream of values.
///
/// `m2` is the sum of squared deviations from the running mean. Two
/// accumulators built over disjoint shards can be merged; merging in any
/// order agrees with a single pass to floating-point accuracy, which is what
/// makes the parallel pipeline's results independent of worker count.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds one observation into the accumulator.
    pub fn update(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combines two accumulators as if their streams were concatenated.
    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let na = self.n as f64;
        let nb = other.n as f64;
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.n = n;
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Mean of the observations seen so far; 0.0 when empty.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sum of squared deviations from the mean. Non-negative.
    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Sample variance, `None` for fewer than 2 observations.
    pub fn variance(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.m2 / (self.n - 1) as f64)
    }

    /// Standard error of the mean, `None` for fewer than 2 observations.
    pub fn standard_error(&self) -> Option<f64> {
        self.variance().map(|v| (v / self.n as f64).sqrt())
    }

    /// Mean and standard error; errors for fewer than 2 observations.
    pub fn summarize(&self) -> Result<(f64, f64), StatsError> {
        match self.standard_error() {
            Some(se) => Ok((self.mean, se)),
            None => Err(StatsError::TooFewObservations(self.n)),
        }
    }
}

impl Extend<f64> for RunningStats {
    fn extend<T: IntoIterator<Item = f64>>(&mut self, iter: T) {
        for x in iter {
            self.update(x);
        }
    }
}

/// Half-open binning grid `[lo, hi)` in steps of `width`; the final bin is
/// closed at `hi` so the nominal range is covered exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    lo: f64,
    hi: f64,
    width: f64,
}

enum Slot {
    Under,
    Bin(usize),
    Over,
}

impl BinSpec {
    pub fn new(lo: f64, hi: f64, width: f64) -> Result<Self, StatsError> {
        if !lo.is_finite() || !hi.is_finite() || !width.is_finite() || lo >= hi || width <= 0.0 {
            return Err(StatsError::InvalidBins { lo, hi, width });
        }
        Ok(Self { lo, hi, width })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn n_bins(&self) -> usize {
        ((self.hi - self.lo) / self.width).ceil() as usize
    }

    /// Lower and upper edge of bin `i`; the last bin is clipped to `hi`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let lo = self.lo + i as f64 * self.width;
        let hi = (self.lo + (i + 1) as f64 * self.width).min(self.hi);
        (lo, hi)
    }

    fn slot(&self, x: f64) -> Slot {
        if x < self.lo {
            Slot::Under
        } else if x > self.hi {
            Slot::Over
        } else {
            let i = ((x - self.lo) / self.width).floor() as usize;
            Slot::Bin(i.min(self.n_bins() - 1))
        }
    }
}

/// Counting histogram over a [`BinSpec`], with explicit underflow and
/// overflow counters so every added value is accounted for.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    spec: BinSpec,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
}

impl Histogram {
    pub fn new(spec: BinSpec) -> Self {
        Self {
            counts: vec![0; spec.n_bins()],
            spec,
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn add(&mut self, x: f64) {
        match self.spec.slot(x) {
            Slot::Under => self.underflow += 1,
            Slot::Over => self.overflow += 1,
            Slot::Bin(i) => self.counts[i] += 1,
        }
    }

    /// Adds another histogram built over the identical spec.
    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.spec, other.spec, "histogram specs must match");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    pub fn spec(&self) -> &BinSpec {
        &self.spec
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    /// Total of all bins plus underflow and overflow; equals the number of
    /// values added.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// Builds a histogram over `values` with the given bounds.
pub fn histogram(
    values: impl IntoIterator<Item = f64>,
    lo: f64,
    hi: f64,
    width: f64,
) -> Result<Histogram, StatsError> {
    let mut h = Histogram::new(BinSpec::new(lo, hi, width)?);
    for x in values {
        h.add(x);
    }
    Ok(h)
}

/// Per-group score statistics attached to the group's centroid.
#[derive(Debug, Clone)]
pub struct ZctaAggregate {
    pub zcta_id: String,
    pub stats: RunningStats,
    pub centroid: GeoPoint,
}

/// One regression observation: predictor `x`, response `y`, and the standard
/// error of `y` used for inverse-variance weighting.
#[derive(Debug, Clone, Copy)]
pub struct WlsPoint {
    pub x: f64,
    pub y: f64,
    pub se_y: f64,
}

/// Result of a weighted least-squares line fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedLinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pure inverse-variance standard error of the slope,
    /// `sqrt(1 / sum(w * (x - weighted mean x)^2))`, with no residual
    /// rescaling: the reported `se_y` values are taken at face value.
    pub slope_se: f64,
    /// Number of points fitted.
    pub n_points: usize,
    /// Number of points whose `se_y` was raised to the floor.
    pub n_floored: usize,
}

/// Fits `y = intercept + slope * x` with weights `1 / se_y^2`.
///
/// Standard errors below `se_floor` (including 0 from single-member groups)
/// are raised to the floor before weighting. Requires at least two points
/// with distinct `x`.
pub fn weighted_least_squares(
    points: &[WlsPoint],
    se_floor: f64,
) -> Result<WeightedLinearFit, StatsError> {
    if !se_floor.is_finite() || se_floor <= 0.0 {
        return Err(StatsError::InvalidFloor(se_floor));
    }
    if points.len() < 2 {
        return Err(StatsError::DegenerateX {
            distinct: points.len(),
            total: points.len(),
        });
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    if xs.len() < 2 {
        return Err(StatsError::DegenerateX {
            distinct: xs.len(),
            total: points.len(),
        });
    }

    let mut n_floored = 0usize;
    let weights: Vec<f64> = points
        .iter()
        .map(|p| {
            let se = if p.se_y < se_floor {
                n_floored += 1;
                se_floor
            } else {
                p.se_y
            };
            1.0 / (se * se)
        })
        .collect();

    let sw: f64 = weights.iter().sum();
    let xbar = points
        .iter()
        .zip(&weights)
        .map(|(p, w)| w * p.x)
        .sum::<f64>()
        / sw;
    let ybar = points
        .iter()
        .zip(&weights)
        .map(|(p, w)| w * p.y)
        .sum::<f64>()
        / sw;

    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (p, w) in points.iter().zip(&weights) {
        let dx = p.x - xbar;
        sxx += w * dx * dx;
        sxy += w * dx * (p.y - ybar);
    }

    let slope = sxy / sxx;
    Ok(WeightedLinearFit {
        slope,
        intercept: ybar - slope * xbar,
        slope_se: (1.0 / sxx).sqrt(),
        n_points: points.len(),
        n_floored,
    })
}

/// One row of a binned-median summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianBin {
    pub center: f64,
    pub median: f64,
    pub count: usize,
}

/// Median of `y` per bin of `x` over the percentage domain `[0, 100]`.
///
/// Bins are left-closed right-open with the final bin closed at 100, like
/// [`Histogram`]; x outside the domain is dropped; empty bins are omitted;
/// the median of an even-sized bin is the mean of its two middle values.
pub fn binned_medians(
    points: impl IntoIterator<Item = (f64, f64)>,
    bin_width: f64,
) -> Result<Vec<MedianBin>, StatsError> {
    let spec = BinSpec::new(0.0, 100.0, bin_width)?;
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); spec.n_bins()];
    for (x, y) in points {
        if let Slot::Bin(i) = spec.slot(x) {
            bins[i].push(y);
        }
    }
    Ok(bins
        .into_iter()
        .enumerate()
        .filter(|(_, ys)| !ys.is_empty())
        .map(|(i, mut ys)| {
            ys.sort_by(|a, b| a.total_cmp(b));
            let m = ys.len();
            let median = if m % 2 == 1 {
                ys[m / 2]
            } else {
                (ys[m / 2 - 1] + ys[m / 2]) / 2.0
            };
            MedianBin {
                center: spec.lo() + (i as f64 + 0.5) * spec.width(),
                median,
                count: m,
            }
        })
        .collect())
}

/// Two-dimensional count grid whose axes follow histogram edge conventions.
/// Points outside either axis are dropped and counted in `dropped`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    x_spec: BinSpec,
    y_spec: BinSpec,
    /// Row-major: `counts[xi * y_bins + yi]`.
    counts: Vec<u64>,
    dropped: u64,
}

impl DensityGrid {
    pub fn x_spec(&self) -> &BinSpec {
        &self.x_spec
    }

    pub fn y_spec(&self) -> &BinSpec {
        &self.y_spec
    }

    pub fn count(&self, xi: usize, yi: usize) -> u64 {
        self.counts[xi * self.y_spec.n_bins() + yi]
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// Non-empty cells in (x, y) order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        let ny = self.y_spec.n_bins();
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| (i / ny, i % ny, c))
    }

    /// Counts summed over y per x bin; equals the 1-D x histogram when no
    /// point was dropped.
    pub fn x_marginal(&self) -> Vec<u64> {
        let ny = self.y_spec.n_bins();
        self.counts.chunks(ny).map(|row| row.iter().sum()).collect()
    }

    /// Counts summed over x per y bin.
    pub fn y_marginal(&self) -> Vec<u64> {
        let ny = self.y_spec.n_bins();
        let mut out = vec![0u64; ny];
        for (i, &c) in self.counts.iter().enumerate() {
            out[i % ny] += c;
        }
        out
    }
}

/// Builds a 2-D density grid over `(x, y)` points.
pub fn density_grid(
    points: impl IntoIterator<Item = (f64, f64)>,
    x_spec: BinSpec,
    y_spec: BinSpec,
) -> DensityGrid {
    let mut grid = DensityGrid {
        counts: vec![0; x_spec.n_bins() * y_spec.n_bins()],
        x_spec,
        y_spec,
        dropped: 0,
    };
    for (x, y) in points {
        match (x_spec.slot(x), y_spec.slot(y)) {
            (Slot::Bin(xi), Slot::Bin(yi)) => {
                grid.counts[xi * y_spec.n_bins() + yi] += 1;
            }
            _ => grid.dropped += 1,
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn welford_matches_worked_example() {
        let mut s = RunningStats::new();
        s.extend([10.0, 20.0, 30.0]);
        assert_eq!(s.n(), 3);
        assert_close(s.mean(), 20.0, 1e-12);
        assert_close(s.m2(), 200.0, 1e-12);
        let (mean, se) = s.summarize().unwrap();
        assert_close(mean, 20.0, 1e-12);
        assert_close(se, 5.773502691896258, 1e-12);
    }

    #[test]
    fn summarize_needs_two_observations() {
        let mut s = RunningStats::new();
        assert_eq!(s.summarize(), Err(StatsError::TooFewObservations(0)));
        s.update(1.0);
        assert_eq!(s.summarize(), Err(StatsError::TooFewObservations(1)));
    }

    #[test]
    fn merge_equals_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin() * 50.0).collect();
        let mut whole = RunningStats::new();
        whole.extend(xs.iter().copied());

        let mut a = RunningStats::new();
        let mut b = RunningStats::new();
        a.extend(xs[..37].iter().copied());
        b.extend(xs[37..].iter().copied());
        a.merge(&b);

        assert_eq!(a.n(), whole.n());
        assert_close(a.mean(), whole.mean(), 1e-12 * whole.mean().abs().max(1.0));
        assert_close(a.m2(), whole.m2(), 1e-9 * whole.m2());
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let mut s = RunningStats::new();
        s.extend([1.0, 2.0]);
        let before = s;
        s.merge(&RunningStats::new());
        assert_eq!(s, before);

        let mut e = RunningStats::new();
        e.merge(&before);
        assert_eq!(e, before);
    }

    #[test]
    fn zero_variance_gives_zero_se() {
        let mut s = RunningStats::new();
        s.extend([5.0, 5.0, 5.0]);
        let (_, se) = s.summarize().unwrap();
        assert_eq!(se, 0.0);
    }

    #[test]
    fn histogram_bins_are_left_closed_right_open() {
        let h = histogram([0.0, 1.9999, 2.0, 4.0], 0.0, 6.0, 2.0).unwrap();
        assert_eq!(h.counts(), &[2, 1, 1]);
    }

    #[test]
    fn final_bin_is_closed_at_hi() {
        let h = histogram([6.0], 0.0, 6.0, 2.0).unwrap();
        assert_eq!(h.counts(), &[0, 0, 1]);
        assert_eq!(h.overflow(), 0);
    }

    #[test]
    fn out_of_range_values_hit_under_and_overflow() {
        let h = histogram([-0.001, 6.001], 0.0, 6.0, 2.0).unwrap();
        assert_eq!(h.counts(), &[0, 0, 0]);
        assert_eq!((h.underflow(), h.overflow()), (1, 1));
        assert_eq!(h.total(), 2);
    }

    #[test]
    fn ragged_range_clips_final_bin() {
        let spec = BinSpec::new(0.0, 10.0, 3.0).unwrap();
        assert_eq!(spec.n_bins(), 4);
        assert_eq!(spec.edges(3), (9.0, 10.0));
        let h = histogram([9.5, 10.0], 0.0, 10.0, 3.0).unwrap();
        assert_eq!(h.counts()[3], 2);
    }

    #[test]
    fn invalid_bin_specs_are_rejected() {
        assert!(BinSpec::new(1.0, 1.0, 1.0).is_err());
        assert!(BinSpec::new(2.0, 1.0, 1.0).is_err());
        assert!(BinSpec::new(0.0, 1.0, 0.0).is_err());
        assert!(BinSpec::new(0.0, 1.0, -2.0).is_err());
        assert!(BinSpec::new(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn histogram_merge_adds_counts() {
        let mut a = histogram([0.5, 2.5], 0.0, 6.0, 2.0).unwrap();
        let b = histogram([0.5, -1.0, 7.0], 0.0, 6.0, 2.0).unwrap();
        a.merge(&b);
        assert_eq!(a.counts(), &[2, 1, 0]);
        assert_eq!((a.underflow(), a.overflow()), (1, 1));
        assert_eq!(a.total(), 5);
    }

    #[test]
    fn wls_matches_worked_example() {
        let fit = weighted_least_squares(
            &[
                WlsPoint { x: 0.0, y: 1.0, se_y: 1.0 },
                WlsPoint { x: 1.0, y: 3.0, se_y: 1.0 },
            ],
            DEFAULT_SE_FLOOR,
        )
        .unwrap();
        assert_close(fit.slope, 2.0, 1e-12);
        assert_close(fit.intercept, 1.0, 1e-12);
        // sxx = w * ((0 - 0.5)^2 + (1 - 0.5)^2) = 0.5
        assert_close(fit.slope_se, (1.0f64 / 0.5).sqrt(), 1e-12);
        assert_eq!(fit.n_floored, 0);
    }

    #[test]
    fn wls_recovers_collinear_line_exactly() {
        let points: Vec<WlsPoint> = (0..=20)
            .map(|i| {
                let x = i as f64 * 5.0;
                WlsPoint { x, y: -0.132 * x + 60.0, se_y: 1.0 }
            })
            .collect();
        let fit = weighted_least_squares(&points, DEFAULT_SE_FLOOR).unwrap();
        assert_close(fit.slope, -0.132, 0.132 * 1e-12);
        assert_close(fit.intercept, 60.0, 60.0 * 1e-12);
    }

    #[test]
    fn quadrupled_weights_halve_slope_se() {
        let base: Vec<WlsPoint> = [(0.0, 1.0), (2.0, 1.8), (5.0, 4.2), (9.0, 8.1)]
            .iter()
            .map(|&(x, y)| WlsPoint { x, y, se_y: 2.0 })
            .collect();
        // quartering the variance = quadrupling each weight
        let scaled: Vec<WlsPoint> = base
            .iter()
            .map(|p| WlsPoint { se_y: p.se_y / 2.0, ..*p })
            .collect();
        let f0 = weighted_least_squares(&base, DEFAULT_SE_FLOOR).unwrap();
        let f1 = weighted_least_squares(&scaled, DEFAULT_SE_FLOOR).unwrap();
        assert_close(f1.slope, f0.slope, 1e-12 * f0.slope.abs());
        assert_close(f1.intercept, f0.intercept, 1e-12 * f0.intercept.abs());
        assert_close(f1.slope_se, f0.slope_se / 2.0, 1e-12 * f0.slope_se);
    }

    #[test]
    fn wls_floors_tiny_standard_errors() {
        let fit = weighted_least_squares(
            &[
                WlsPoint { x: 0.0, y: 1.0, se_y: 0.0 },
                WlsPoint { x: 1.0, y: 3.0, se_y: 1e-9 },
                WlsPoint { x: 2.0, y: 5.0, se_y: 1.0 },
            ],
            DEFAULT_SE_FLOOR,
        )
        .unwrap();
        assert_eq!(fit.n_floored, 2);
    }

    #[test]
    fn wls_rejects_degenerate_x() {
        assert_eq!(
            weighted_least_squares(&[], DEFAULT_SE_FLOOR),
            Err(StatsError::DegenerateX { distinct: 0, total: 0 })
        );
        let one = [WlsPoint { x: 1.0, y: 2.0, se_y: 1.0 }];
        assert!(weighted_least_squares(&one, DEFAULT_SE_FLOOR).is_err());
        let same_x = [
            WlsPoint { x: 3.0, y: 2.0, se_y: 1.0 },
            WlsPoint { x: 3.0, y: 4.0, se_y: 1.0 },
        ];
        assert_eq!(
            weighted_least_squares(&same_x, DEFAULT_SE_FLOOR),
            Err(StatsError::DegenerateX { distinct: 1, total: 2 })
        );
    }

    #[test]
    fn medians_use_mean_of_middle_pair_for_even_bins() {
        let bins = binned_medians(
            [(12.0, 1.0), (13.0, 3.0), (14.0, 10.0), (14.9, 2.0), (40.0, 7.0)],
            5.0,
        )
        .unwrap();
        assert_eq!(bins.len(), 2);
        assert_eq!(bins[0].center, 12.5);
        assert_eq!(bins[0].median, 2.5); // mean of 2.0 and 3.0
        assert_eq!(bins[0].count, 4);
        assert_eq!(bins[1], MedianBin { center: 42.5, median: 7.0, count: 1 });
    }

    #[test]
    fn medians_drop_out_of_domain_x_and_keep_100() {
        let bins = binned_medians([(-0.1, 1.0), (100.0, 2.0), (100.1, 3.0)], 5.0).unwrap();
        assert_eq!(bins, vec![MedianBin { center: 97.5, median: 2.0, count: 1 }]);
    }

    #[test]
    fn density_grid_marginals_match_1d_histograms() {
        let pts: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let x = (i * 37 % 101) as f64;
                let y = ((i * 53 % 180) as f64) - 50.0;
                (x, y)
            })
            .collect();
        let xs = BinSpec::new(0.0, 100.0, 5.0).unwrap();
        let ys = BinSpec::new(-50.0, 130.0, 2.0).unwrap();
        let grid = density_grid(pts.iter().copied(), xs, ys);
        assert_eq!(grid.dropped(), 0);

        let hx = histogram(pts.iter().map(|p| p.0), 0.0, 100.0, 5.0).unwrap();
        let hy = histogram(pts.iter().map(|p| p.1), -50.0, 130.0, 2.0).unwrap();
        assert_eq!(grid.x_marginal(), hx.counts());
        assert_eq!(grid.y_marginal(), hy.counts());
    }
}
