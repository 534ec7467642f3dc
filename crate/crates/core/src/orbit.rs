//! Picard orbits, orbit diameters, divergence detection and fixed-point iteration.

use serde::Serialize;

use crate::error::{ContractaError, Result};
use crate::map::SelfMap;
use crate::space::{BMetricSpace, Point};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Length of the first prefix examined by [`detect_unbounded`].
pub const INITIAL_WINDOW: usize = 100;

/// x, Tx, …, Tⁿx together with the consecutive distances Δ(Tᵏx, Tᵏ⁺¹x).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Orbit {
    pub base: Point,
    pub points: Vec<Point>,
    pub step_dists: Vec<f64>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn picard(space: &BMetricSpace, map: &SelfMap, x0: &Point, n: usize) -> Result<Orbit> {
    space.domain.check(x0)?;
    let mut points = Vec::with_capacity(n + 1);
    let mut step_dists = Vec::with_capacity(n);
    points.push(*x0);
    for k in 0..n {
        let next = step(map, &points[k], k + 1)?;
        step_dists.push(space.distance_unchecked(&points[k], &next)?);
        points.push(next);
    }
    Ok(Orbit {
        base: *x0,
        points,
        step_dists,
    })
}

// One application of T, with closure failures tagged by orbit position.
fn step(map: &SelfMap, p: &Point, position: usize) -> Result<Point> {
    map.apply(p).map_err(|e| match e {
        ContractaError::Closure { from, value, domain, .. } => ContractaError::Closure {
            index: position,
            from,
            value,
            domain,
        },
        other => other,
    })
}

/// Largest pairwise distance over the computed prefix. The true orbit diameter can
/// only be larger.
pub fn orbit_diameter(space: &BMetricSpace, orbit: &Orbit) -> Result<f64> {
    space.subset_diameter(&orbit.points)
}

/// For each tail start m₀, the diameter of {Tᵐx : m ≥ m₀} within the prefix.
pub fn cauchy_tail_diameters(space: &BMetricSpace, orbit: &Orbit) -> Result<Vec<f64>> {
    let pts = &orbit.points;
    let n = pts.len();
    let mut tails = vec![0.0; n];
    let mut running: f64 = 0.0;
    for i in (0..n).rev() {
        for j in i + 1..n {
            running = running.max(space.distance_unchecked(&pts[i], &pts[j])?);
        }
        tails[i] = running;
    }
    Ok(tails)
}

/// Smallest m₀ with Δ(Tⁿx, Tᵐx) < ε for all n, m ≥ m₀ in the prefix, if the prefix
/// has one short of its last point.
pub fn first_cauchy_index(space: &BMetricSpace, orbit: &Orbit, eps: f64) -> Result<Option<usize>> {
    let tails = cauchy_tail_diameters(space, orbit)?;
    let last = tails.len().saturating_sub(1);
    Ok(tails.iter().position(|&d| d < eps).filter(|&m| m < last))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundedness {
    BoundedSoFar,
    Diverging,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnboundedReport {
    pub verdict: Boundedness,
    /// Set when an enumerated domain ran out of points before all windows were seen.
    pub inconclusive: bool,
    pub threshold: f64,
    /// (prefix length in points, diameter of that prefix)
    pub windows: Vec<(usize, f64)>,
    pub last_diameter: f64,
}

/// Examines prefixes of 100, 200, 400, … points (`window_doublings` doublings).
/// The orbit is called diverging when the last diameter exceeds `threshold` and the
/// diameter grew in every window.
pub fn detect_unbounded(
    space: &BMetricSpace,
    map: &SelfMap,
    x0: &Point,
    threshold: f64,
    window_doublings: usize,
) -> Result<UnboundedReport> {
    detect_unbounded_from(space, map, x0, threshold, window_doublings, INITIAL_WINDOW)
}

pub fn detect_unbounded_from(
    space: &BMetricSpace,
    map: &SelfMap,
    x0: &Point,
    threshold: f64,
    window_doublings: usize,
    initial_len: usize,
) -> Result<UnboundedReport> {
    if !(threshold > 0.0) {
        return Err(ContractaError::argument("detect_unbounded: threshold must be positive"));
    }
    if initial_len == 0 {
        return Err(ContractaError::argument("detect_unbounded: initial window must hold a point"));
    }
    space.domain.check(x0)?;
    let mut points = vec![*x0];
    let mut diameter: f64 = 0.0;
    let mut windows = Vec::new();
    let mut inconclusive = false;

    'windows: for w in 0..=window_doublings {
        let target = initial_len << w;
        while points.len() < target {
            let k = points.len();
            let next = match step(map, &points[k - 1], k) {
                Ok(p) => p,
                Err(ContractaError::Closure { .. }) if space.domain.is_enumerated() => {
                    inconclusive = true;
                    break 'windows;
                }
                Err(e) => return Err(e),
            };
            for p in &points {
                diameter = diameter.max(space.distance_unchecked(p, &next)?);
            }
            points.push(next);
        }
        windows.push((target, diameter));
    }
    if inconclusive {
        windows.push((points.len(), diameter));
    }

    let grew = windows.windows(2).all(|w| w[1].1 > w[0].1);
    let verdict = if diameter > threshold && grew {
        Boundedness::Diverging
    } else {
        Boundedness::BoundedSoFar
    };
    Ok(UnboundedReport {
        verdict,
        inconclusive,
        threshold,
        windows,
        last_diameter: diameter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointStatus {
    Converged,
    MaxIter,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointResult {
    pub status: FixedPointStatus,
    pub point: Option<Point>,
    /// Δ(z, Tz) for the reported point, or for the last iterate when none is reported.
    pub residual: f64,
    pub iterations: usize,
}

/// Iterates until Δ(xₙ, xₙ₊₁) ≤ tol and the candidate z = xₙ₊₁ also has
/// Δ(z, Tz) ≤ tol. A non-finite step distance stops with status `Diverged`.
pub fn solve_fixed_point(
    space: &BMetricSpace,
    map: &SelfMap,
    x0: &Point,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointResult> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(ContractaError::argument("solve_fixed_point needs tol > 0 and max_iter >= 1"));
    }
    space.domain.check(x0)?;
    let mut x = *x0;
    for it in 1..=max_iter {
        let next = step(map, &x, it)?;
        let dist = space.distance_unchecked(&x, &next)?;
        if !dist.is_finite() {
            return Ok(FixedPointResult {
                status: FixedPointStatus::Diverged,
                point: None,
                residual: dist,
                iterations: it,
            });
        }
        if dist <= tol {
            let image = step(map, &next, it + 1)?;
            let residual = space.distance_unchecked(&next, &image)?;
            if residual <= tol {
                return Ok(FixedPointResult {
                    status: FixedPointStatus::Converged,
                    point: Some(next),
                    residual,
                    iterations: it,
                });
            }
        }
        x = next;
    }
    let image = step(map, &x, max_iter + 1)?;
    Ok(FixedPointResult {
        status: FixedPointStatus::MaxIter,
        point: None,
        residual: space.distance_unchecked(&x, &image)?,
        iterations: max_iter,
    })
}
