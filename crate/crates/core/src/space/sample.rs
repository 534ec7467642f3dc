use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Domain, Point};
use crate::error::{ContractaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    Grid,
    Random,
    /// User-supplied points or pairs.
    Explicit,
}

/// How to draw a [`SampleSet`] from a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampler {
    pub strategy: SamplingStrategy,
    pub count: usize,
    pub seed: u64,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            strategy: SamplingStrategy::Grid,
            count: 751,
            seed: 0,
        }
    }
}

impl Sampler {
    pub fn build(&self, domain: &Domain) -> Result<SampleSet> {
        SampleSet::new(domain, self.strategy, self.count, self.seed)
    }
}

/// Indices into [`SampleSet::points`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplePair {
    pub i: usize,
    pub j: usize,
}

/// A deterministic list of point pairs drawn from a domain.
///
/// Grid samples are the full Cartesian product of the grid in row-major order, so
/// pair `(i, j)` sits at position `i * n + j`.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub strategy: SamplingStrategy,
    pub count: usize,
    pub seed: u64,
    pub points: Vec<Point>,
    pub pairs: Vec<SamplePair>,
    // Number of grid intervals, when points[i] is the i-th node of an equispaced grid.
    grid_intervals: Option<usize>,
}

impl SampleSet {
    pub fn new(domain: &Domain, strategy: SamplingStrategy, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(ContractaError::argument("sample count must be >= 1"));
        }
        match strategy {
            SamplingStrategy::Grid => SampleSet::grid(domain, count),
            SamplingStrategy::Random => SampleSet::random(domain, count, seed),
            SamplingStrategy::Explicit => Err(ContractaError::argument(
                "explicit samples are built from points or pairs, not sampled",
            )),
        }
    }

    pub fn grid(domain: &Domain, count: usize) -> Result<Self> {
        let points = domain.grid(count)?;
        let mut set = SampleSet::cartesian(points);
        set.strategy = SamplingStrategy::Grid;
        set.grid_intervals = (!domain.is_enumerated() && count > 1).then_some(count - 1);
        Ok(set)
    }

    /// `count` independent pairs, each coordinate uniform over the domain.
    pub fn random(domain: &Domain, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(ContractaError::argument("sample count must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(2 * count);
        for _ in 0..2 * count {
            let p = match (domain.bounds(), domain.capacity()) {
                (Some((lo, hi)), _) => Point::real(rng.random_range(lo..=hi)),
                (None, Some(n)) => domain.point_at(rng.random_range(0..n))?,
                _ => unreachable!("domain is an interval or enumerated"),
            };
            points.push(p);
        }
        let pairs = (0..count).map(|k| SamplePair { i: 2 * k, j: 2 * k + 1 }).collect();
        Ok(SampleSet {
            strategy: SamplingStrategy::Random,
            count,
            seed,
            points,
            pairs,
            grid_intervals: None,
        })
    }

    /// All ordered pairs of the given points, row-major.
    pub fn cartesian(points: Vec<Point>) -> Self {
        let n = points.len();
        let pairs = (0..n).flat_map(|i| (0..n).map(move |j| SamplePair { i, j })).collect();
        SampleSet {
            strategy: SamplingStrategy::Explicit,
            count: n,
            seed: 0,
            points,
            pairs,
            grid_intervals: None,
        }
    }

    pub fn from_pairs(pairs: &[(Point, Point)]) -> Self {
        let mut points = Vec::with_capacity(2 * pairs.len());
        for (x, y) in pairs {
            points.push(*x);
            points.push(*y);
        }
        SampleSet {
            strategy: SamplingStrategy::Explicit,
            count: pairs.len(),
            seed: 0,
            points,
            pairs: (0..pairs.len()).map(|k| SamplePair { i: 2 * k, j: 2 * k + 1 }).collect(),
            grid_intervals: None,
        }
    }

    /// Appends pairs, keeping the existing order in front.
    pub fn extended(&self, extra: &[(Point, Point)]) -> Self {
        let mut out = self.clone();
        for (x, y) in extra {
            let i = out.points.len();
            out.points.push(*x);
            out.points.push(*y);
            out.pairs.push(SamplePair { i, j: i + 1 });
        }
        out.count = out.pairs.len();
        out
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, k: usize) -> (Point, Point) {
        let SamplePair { i, j } = self.pairs[k];
        (self.points[i], self.points[j])
    }

    pub fn iter_pairs(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.pairs.iter().map(|p| (self.points[p.i], self.points[p.j]))
    }

    /// Resolution at which pair `k` first appears in a hierarchy of coarser
    /// equispaced grids: the larger reduced denominator of its two nodes. Lower is
    /// simpler. Non-grid samples rank all pairs equally.
    pub fn simplicity(&self, k: usize) -> usize {
        match self.grid_intervals {
            None => 1,
            Some(n) => {
                let SamplePair { i, j } = self.pairs[k];
                let den = |i: usize| n / gcd(i, n);
                den(i).max(den(j))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self.strategy {
            SamplingStrategy::Grid => format!("grid of {} points ({} pairs)", self.count, self.pairs.len()),
            SamplingStrategy::Random => format!("{} random pairs, seed {}", self.count, self.seed),
            SamplingStrategy::Explicit => format!("{} explicit pairs", self.pairs.len()),
        }
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_pairs_are_row_major() {
        let d = Domain::interval(0.0, 1.0).unwrap();
        let s = SampleSet::grid(&d, 3).unwrap();
        let values: Vec<f64> = s.points.iter().map(|p| p.value).collect();
        assert_eq!(values, vec![0.0, 0.5, 1.0]);
        assert_eq!(s.len(), 9);
        assert_eq!(s.pair(1), (Point::real(0.0), Point::real(0.5)));
        assert_eq!(s.pair(3), (Point::real(0.5), Point::real(0.0)));
    }

    #[test]
    fn harmonic_grid_takes_leading_points() {
        let d = Domain::harmonic(1000).unwrap();
        let s = SampleSet::grid(&d, 5).unwrap();
        let expected = [1.0, 1.5, 11.0 / 6.0, 25.0 / 12.0, 137.0 / 60.0];
        for (p, e) in s.points.iter().zip(expected) {
            assert!((p.value - e).abs() < 1e-15);
        }
        assert!(SampleSet::grid(&d, 1001).is_err());
    }

    #[test]
    fn random_is_reproducible() {
        let d = Domain::interval(0.0, 1.0).unwrap();
        let a = SampleSet::random(&d, 100, 42).unwrap();
        let b = SampleSet::random(&d, 100, 42).unwrap();
        let bits = |s: &SampleSet| s.iter_pairs().map(|(x, y)| (x.value.to_bits(), y.value.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = SampleSet::random(&d, 100, 43).unwrap();
        assert_ne!(bits(&a), bits(&c));
        assert!(a.iter_pairs().all(|(x, y)| d.contains(&x) && d.contains(&y)));
    }

    #[test]
    fn zero_count_rejected() {
        let d = Domain::interval(0.0, 1.0).unwrap();
        assert!(SampleSet::new(&d, SamplingStrategy::Grid, 0, 0).is_err());
        assert!(SampleSet::new(&d, SamplingStrategy::Random, 0, 0).is_err());
    }

    #[test]
    fn simplicity_prefers_coarse_nodes() {
        let d = Domain::interval(0.0, 0.75).unwrap();
        let s = SampleSet::grid(&d, 751).unwrap();
        // (0.5, 0.75) lives on the 3-interval grid; (0.251, 0.501) only on the full one.
        assert_eq!(s.simplicity(500 * 751 + 750), 3);
        assert_eq!(s.simplicity(251 * 751 + 501), 750);
    }
}
