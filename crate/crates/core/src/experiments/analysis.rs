//! Curve analysis: fits, pairwise crossings, scaling collapse and peaks.

use serde::{Deserialize, Serialize};

use super::ensemble::EnsembleResult;
use crate::error::{invalid, Error, Result};

/// One probe curve `y(x)` at system size `n`, `x` ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Curve {
    pub fn new(n: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(invalid(format!("curve needs >= 2 matching points, got {} and {}", x.len(), y.len())));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("curve x values must be strictly increasing"));
        }
        Ok(Self { n, x, y })
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let (first, last) = (self.x[0], *self.x.last()?);
        if !(x >= first && x <= last) {
            return None;
        }
        let k = self.x.partition_point(|&v| v <= x).clamp(1, self.x.len() - 1);
        let (x0, x1, y0, y1) = (self.x[k - 1], self.x[k], self.y[k - 1], self.y[k]);
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// Group ensemble means into one curve per system size, against `ratio`.
pub fn curves_from_results(results: &[EnsembleResult]) -> Result<Vec<Curve>> {
    let mut sizes: Vec<usize> = results.iter().map(|r| r.key.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|n| {
            let mut pts: Vec<(f64, f64)> = results.iter().filter(|r| r.key.n == n).map(|r| (r.key.ratio, r.mean)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            Curve::new(n, pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_stderr: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid(format!("fit needs >= 2 matching points, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_stderr = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LinearFit { slope, intercept, r2, slope_stderr })
}

/// `y = c x^beta` fitted in log-log space; returns `(beta, c, r2)`.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(invalid("power-law fit needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok((fit.slope, fit.intercept.exp(), fit.r2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCrossing {
    pub n_a: usize,
    pub n_b: usize,
    pub x: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CrossingResult {
    Found {
        /// Median over size pairs.
        sigma_c: f64,
        /// Half the range of the pairwise estimates.
        spread: f64,
        pairs: Vec<PairCrossing>,
    },
    NoCrossing { pairs: Vec<PairCrossing> },
}

impl CrossingResult {
    pub fn sigma_c(&self) -> Option<f64> {
        match self {
            Self::Found { sigma_c, .. } => Some(*sigma_c),
            Self::NoCrossing { .. } => None,
        }
    }
}

/// Where `b - a` changes sign on `a`'s grid. With several sign changes the
/// one with the largest jump in `b - a` wins, so near-ties do not register.
fn pair_crossing(a: &Curve, b: &Curve) -> Option<f64> {
    let pts: Vec<(f64, f64)> = a
        .x
        .iter()
        .zip(&a.y)
        .filter_map(|(&x, &ya)| Some((x, b.interpolate(x)? - ya)))
        .filter(|(_, d)| d.is_finite())
        .collect();
    let mut best: Option<(f64, f64)> = None;
    for w in pts.windows(2) {
        let ((x0, d0), (x1, d1)) = (w[0], w[1]);
        let x = if d0 == 0.0 {
            x0
        } else if d0.signum() != d1.signum() && d1 != 0.0 {
            x0 - d0 * (x1 - x0) / (d1 - d0)
        } else {
            continue;
        };
        let jump = (d1 - d0).abs();
        if best.is_none_or(|(_, j)| jump > j) {
            best = Some((x, jump));
        }
    }
    best.map(|(x, _)| x)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Pairwise crossings over all size pairs, summarized by their median.
pub fn find_crossing(curves: &[Curve]) -> Result<CrossingResult> {
    if curves.len() < 2 {
        return Err(invalid("need curves for at least two sizes"));
    }
    let mut pairs = Vec::new();
    for (i, a) in curves.iter().enumerate() {
        for b in &curves[i + 1..] {
            pairs.push(PairCrossing { n_a: a.n, n_b: b.n, x: pair_crossing(a, b) });
        }
    }
    let mut found: Vec<f64> = pairs.iter().filter_map(|p| p.x).collect();
    if found.is_empty() {
        return Ok(CrossingResult::NoCrossing { pairs });
    }
    let spread = 0.5 * (found.iter().copied().fold(f64::MIN, f64::max) - found.iter().copied().fold(f64::MAX, f64::min));
    Ok(CrossingResult::Found { sigma_c: median(&mut found), spread, pairs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseSpec {
    pub sigma_c: f64,
    pub mu: f64,
    /// Curves are multiplied by `N^y_exponent` when set.
    #[serde(default)]
    pub y_exponent: Option<f64>,
}

impl CollapseSpec {
    pub fn new(sigma_c: f64, mu: f64, y_exponent: Option<f64>) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(invalid(format!("mu = {mu} must be positive")));
        }
        Ok(Self { sigma_c, mu, y_exponent })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseResult {
    pub collapsed: Vec<Curve>,
    /// Mean over a common grid of the summed squared deviation from the
    /// across-size mean. Infinite when the rescaled curves do not overlap.
    pub quality: f64,
}

pub const COLLAPSE_GRID_POINTS: usize = 64;

pub fn scaling_collapse(curves: &[Curve], spec: &CollapseSpec) -> Result<CollapseResult> {
    let collapsed: Vec<Curve> = curves
        .iter()
        .map(|c| {
            let nf = c.n as f64;
            let scale = nf.powf(spec.mu);
            let y_scale = spec.y_exponent.map_or(1.0, |e| nf.powf(e));
            Curve {
                n: c.n,
                x: c.x.iter().map(|x| (x - spec.sigma_c) * scale).collect(),
                y: c.y.iter().map(|y| y * y_scale).collect(),
            }
        })
        .collect();
    let lo = collapsed.iter().map(|c| c.x[0]).fold(f64::MIN, f64::max);
    let hi = collapsed.iter().map(|c| *c.x.last().expect("nonempty")).fold(f64::MAX, f64::min);
    if collapsed.len() < 2 || !(hi > lo) {
        return Ok(CollapseResult { collapsed, quality: f64::INFINITY });
    }
    let mut total = 0.0;
    for g in 0..COLLAPSE_GRID_POINTS {
        let u = lo + (hi - lo) * g as f64 / (COLLAPSE_GRID_POINTS - 1) as f64;
        let ys: Vec<f64> = collapsed.iter().filter_map(|c| c.interpolate(u)).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        total += ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>();
    }
    Ok(CollapseResult { collapsed, quality: total / COLLAPSE_GRID_POINTS as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseCell {
    pub sigma_c: f64,
    pub mu: f64,
    pub quality: f64,
}

/// Quality score on every `(sigma_c, mu)` cell; the best cell comes first in `best`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseSurface {
    pub cells: Vec<CollapseCell>,
    pub best: CollapseCell,
}

pub fn collapse_scan(curves: &[Curve], sigma_grid: &[f64], mu_grid: &[f64], y_exponent: Option<f64>) -> Result<CollapseSurface> {
    let mut cells = Vec::with_capacity(sigma_grid.len() * mu_grid.len());
    for &sigma_c in sigma_grid {
        for &mu in mu_grid {
            let quality = scaling_collapse(curves, &CollapseSpec::new(sigma_c, mu, y_exponent)?)?.quality;
            cells.push(CollapseCell { sigma_c, mu, quality });
        }
    }
    let best = cells
        .iter()
        .filter(|c| c.quality.is_finite())
        .min_by(|a, b| a.quality.total_cmp(&b.quality))
        .cloned()
        .ok_or_else(|| Error::Degenerate("no grid cell gives overlapping curves".into()))?;
    Ok(CollapseSurface { cells, best })
}

/// Evenly spaced grid `start, start + step, ...` up to `stop` inclusive.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| start + k as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub x: f64,
    pub y: f64,
    /// False when the maximum sits on the first or last grid point.
    pub interior: bool,
}

/// Maximum of a curve, refined by the parabola through its neighbours when interior.
pub fn peak_location(curve: &Curve) -> Peak {
    let (k, &y) = curve
        .y
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap_or((0, &f64::NAN));
    if k == 0 || k + 1 == curve.x.len() {
        return Peak { x: curve.x[k], y, interior: false };
    }
    let (x0, x1, x2) = (curve.x[k - 1], curve.x[k], curve.x[k + 1]);
    let (y0, y2) = (curve.y[k - 1], curve.y[k + 1]);
    let (a, b) = ((x1 - x0) * (y - y2), (x1 - x2) * (y - y0));
    let denom = a - b;
    let x = if denom != 0.0 { (x1 - 0.5 * ((x1 - x0) * a - (x1 - x2) * b) / denom).clamp(x0, x2) } else { x1 };
    Peak { x, y, interior: true }
}
