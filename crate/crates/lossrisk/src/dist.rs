//! Empirical distributions, quantile functions, contamination, and the
//! Levy-Prokhorov distance between step CDFs.
//!
//! Quantile functions come in four kinds. `Empirical` evaluates the order
//! statistic X_(floor(n z) + 1) literally, including at grid points z = k/n.
//! `Tabulated` interpolates a knot grid, piecewise-constant left-continuous
//! by default or linearly on request; a repeated z knot encodes a jump.
//! `FloorTruncated` replaces G with G(z v delta), and `Contaminated` is the
//! quantile of the mixture (1-eps) F + eps delta_z, evaluated through the
//! inner quantile via the band decomposition of the mixture CDF.

use crate::error::{Error, Result};
use crate::piecewise::{self, Piece};

/// Inner quantile level used when a mixture band touches level one exactly;
/// evaluating just below 1 returns the supremum of a step quantile.
const SUP_LEVEL: f64 = 1.0 - 1e-15;

/// Sorted sample of P&L values. Gains are positive, losses negative.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Builds the empirical distribution of `samples`. Ties are preserved.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("empty sample".into()));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample value {bad}")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { samples: sorted })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// F(x) = #{i : x_i <= x} / n.
    pub fn cdf(&self, x: f64) -> f64 {
        let count = self.samples.partition_point(|&s| s <= x);
        count as f64 / self.samples.len() as f64
    }

    /// Left limit F(x-) = #{i : x_i < x} / n.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let count = self.samples.partition_point(|&s| s < x);
        count as f64 / self.samples.len() as f64
    }

    /// X_(floor(n z) + 1) with 1-based order statistics, taken literally at
    /// grid points: z = k/n yields X_(k+1).
    pub fn quantile(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::DomainError(format!(
                "quantile level {z} outside (0,1)"
            )));
        }
        let n = self.samples.len();
        let idx = ((n as f64 * z).floor() as usize).min(n - 1);
        Ok(self.samples[idx])
    }

    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    pub fn max(&self) -> f64 {
        *self.samples.last().unwrap()
    }

    fn distinct_values(&self) -> Vec<f64> {
        let mut vals = self.samples.clone();
        vals.dedup();
        vals
    }
}

/// Interpolation rule for a tabulated quantile grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Piecewise constant, left-continuous: the value on (z_i, z_{i+1}] is
    /// the knot value at z_{i+1}. Matches empirical-quantile semantics.
    ConstantLeft,
    Linear,
}

/// Quantile function given by a knot grid on [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    grid: Vec<(f64, f64)>,
    interpolation: Interpolation,
}

impl Tabulated {
    fn new(grid: Vec<(f64, f64)>, interpolation: Interpolation) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidInput("tabulated grid needs at least two knots".into()));
        }
        if grid.iter().any(|(z, v)| !z.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite tabulated knot".into()));
        }
        if grid[0].0 != 0.0 || grid.last().unwrap().0 != 1.0 {
            return Err(Error::InvalidInput("tabulated grid must span z = 0 to z = 1 exactly".into()));
        }
        for w in grid.windows(2) {
            if w[1].0 < w[0].0 {
                return Err(Error::InvalidInput("tabulated knots not sorted by z".into()));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidInput("tabulated values must be nondecreasing".into()));
            }
        }
        // A z value may repeat once (a jump knot pair) but not twice.
        for w in grid.windows(3) {
            if w[0].0 == w[1].0 && w[1].0 == w[2].0 {
                return Err(Error::InvalidInput(format!(
                    "more than two knots share z = {}",
                    w[0].0
                )));
            }
        }
        Ok(Self { grid, interpolation })
    }

    fn value_at(&self, t: f64) -> f64 {
        // First knot with z >= t; 0 < t < 1 keeps idx in 1..len.
        let idx = self.grid.partition_point(|&(z, _)| z < t);
        match self.interpolation {
            Interpolation::ConstantLeft => self.grid[idx].1,
            Interpolation::Linear => {
                let (z1, v1) = self.grid[idx];
                // Exact knot hits take the knot value; at a jump pair this
                // is the first of the pair, keeping left-continuity.
                if z1 == t {
                    return v1;
                }
                let (z0, v0) = self.grid[idx - 1];
                v0 + (v1 - v0) * (t - z0) / (z1 - z0)
            }
        }
    }

    fn pieces(&self) -> Vec<Piece> {
        let mut out = Vec::new();
        for w in self.grid.windows(2) {
            let (z0, v0) = w[0];
            let (z1, v1) = w[1];
            if z1 > z0 {
                out.push(match self.interpolation {
                    Interpolation::ConstantLeft => Piece { z0, z1, v0: v1, v1 },
                    Interpolation::Linear => Piece { z0, z1, v0, v1 },
                });
            }
        }
        out
    }

    fn loss_clamped(&self) -> Tabulated {
        let mut grid = self.grid.clone();
        if self.interpolation == Interpolation::Linear {
            // Clamping knot values alone would bend a segment that crosses
            // zero, so the crossing becomes an explicit knot first. Values
            // are nondecreasing, hence at most one segment crosses.
            if let Some(i) = (1..grid.len())
                .find(|&i| grid[i - 1].1 < 0.0 && grid[i].1 > 0.0 && grid[i - 1].0 < grid[i].0)
            {
                let (z0, v0) = grid[i - 1];
                let (z1, v1) = grid[i];
                let zc = z0 + (-v0) / (v1 - v0) * (z1 - z0);
                if zc > z0 && zc < z1 {
                    grid.insert(i, (zc, 0.0));
                }
            }
        }
        for knot in &mut grid {
            knot.1 = knot.1.min(0.0);
        }
        Tabulated { grid, interpolation: self.interpolation }
    }
}

/// G(z v delta): constant at G(delta) below the truncation level.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorTruncated {
    inner: Box<QuantileFn>,
    delta: f64,
    floor: f64,
}

impl FloorTruncated {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The cached inner value G(delta).
    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn inner(&self) -> &QuantileFn {
        &self.inner
    }
}

/// Quantile of (1-eps) F + eps delta_z for eps > 0. The inner CDF at z and
/// its left limit are cached at construction; they delimit the band on which
/// the mixture quantile equals z.
#[derive(Debug, Clone, PartialEq)]
pub struct Contaminated {
    inner: Box<QuantileFn>,
    z: f64,
    epsilon: f64,
    f_z: f64,
    f_z_left: f64,
}

impl Contaminated {
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn band(&self) -> (f64, f64) {
        let lo = (1.0 - self.epsilon) * self.f_z_left;
        let hi = self.epsilon + (1.0 - self.epsilon) * self.f_z;
        (lo, hi)
    }
}

/// Dirac contamination: an atom of weight `epsilon` at `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminationSpec {
    pub z: f64,
    pub epsilon: f64,
}

/// A nondecreasing quantile function on (0,1).
#[derive(Debug, Clone, PartialEq)]
pub enum QuantileFn {
    Empirical(EmpiricalDistribution),
    Tabulated(Tabulated),
    FloorTruncated(FloorTruncated),
    Contaminated(Contaminated),
}

impl QuantileFn {
    pub fn empirical(d: EmpiricalDistribution) -> QuantileFn {
        QuantileFn::Empirical(d)
    }

    /// Quantile of the point mass at `c`.
    pub fn constant(c: f64) -> Result<QuantileFn> {
        Self::tabulated(vec![(0.0, c), (1.0, c)], Interpolation::ConstantLeft)
    }

    pub fn tabulated(grid: Vec<(f64, f64)>, interpolation: Interpolation) -> Result<QuantileFn> {
        Ok(QuantileFn::Tabulated(Tabulated::new(grid, interpolation)?))
    }

    /// Wraps `inner` as G(z v delta) with delta in (0,1).
    pub fn floor_truncated(inner: QuantileFn, delta: f64) -> Result<QuantileFn> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::DomainError(format!(
                "truncation level {delta} outside (0,1)"
            )));
        }
        let floor = inner.value(delta)?;
        Ok(QuantileFn::FloorTruncated(FloorTruncated {
            inner: Box::new(inner),
            delta,
            floor,
        }))
    }

    /// Evaluates the quantile at `z` in (0,1).
    pub fn value(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::DomainError(format!(
                "quantile level {z} outside (0,1)"
            )));
        }
        Ok(self.value_inner(z))
    }

    fn value_inner(&self, z: f64) -> f64 {
        match self {
            QuantileFn::Empirical(d) => {
                let n = d.samples.len();
                let idx = ((n as f64 * z).floor() as usize).min(n - 1);
                d.samples[idx]
            }
            QuantileFn::Tabulated(t) => t.value_at(z),
            QuantileFn::FloorTruncated(f) => {
                if z <= f.delta {
                    f.floor
                } else {
                    f.inner.value_inner(z)
                }
            }
            QuantileFn::Contaminated(c) => {
                let (lo, hi) = c.band();
                if z > hi {
                    let s = ((z - c.epsilon) / (1.0 - c.epsilon)).min(SUP_LEVEL);
                    c.inner.value_inner(s)
                } else if z <= lo {
                    let s = (z / (1.0 - c.epsilon)).min(SUP_LEVEL);
                    c.inner.value_inner(s)
                } else {
                    c.z
                }
            }
        }
    }

    /// The quantile function as affine pieces covering [0,1). Values agree
    /// with `value` up to a Lebesgue-null set of piece boundaries.
    pub fn pieces(&self) -> Vec<Piece> {
        match self {
            QuantileFn::Empirical(d) => {
                let n = d.samples.len() as f64;
                d.samples
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| Piece {
                        z0: k as f64 / n,
                        z1: (k + 1) as f64 / n,
                        v0: v,
                        v1: v,
                    })
                    .collect()
            }
            QuantileFn::Tabulated(t) => t.pieces(),
            QuantileFn::FloorTruncated(f) => {
                let mut out = vec![Piece {
                    z0: 0.0,
                    z1: f.delta,
                    v0: f.floor,
                    v1: f.floor,
                }];
                out.extend(f.inner.pieces().iter().filter_map(|p| p.clip(f.delta, 1.0)));
                out
            }
            QuantileFn::Contaminated(c) => {
                let (lo, hi) = c.band();
                let scale = 1.0 - c.epsilon;
                let inner = c.inner.pieces();
                let mut out = Vec::new();
                for p in inner.iter().filter_map(|p| p.clip(0.0, c.f_z_left)) {
                    out.push(Piece {
                        z0: scale * p.z0,
                        z1: scale * p.z1,
                        ..p
                    });
                }
                out.push(Piece { z0: lo, z1: hi, v0: c.z, v1: c.z });
                for p in inner.iter().filter_map(|p| p.clip(c.f_z, 1.0)) {
                    out.push(Piece {
                        z0: c.epsilon + scale * p.z0,
                        z1: c.epsilon + scale * p.z1,
                        ..p
                    });
                }
                out
            }
        }
    }

    /// CDF of the underlying law, recovered as the measure of a sublevel set
    /// of the quantile.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            QuantileFn::Empirical(d) => d.cdf(x),
            _ => piecewise::sublevel_measure(&self.pieces(), x, false),
        }
    }

    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            QuantileFn::Empirical(d) => d.cdf_left(x),
            _ => piecewise::sublevel_measure(&self.pieces(), x, true),
        }
    }

    /// True when the quantile is piecewise constant, so no classical
    /// derivative exists anywhere.
    pub fn is_step(&self) -> bool {
        match self {
            QuantileFn::Empirical(_) => true,
            QuantileFn::Tabulated(t) => t.interpolation == Interpolation::ConstantLeft,
            QuantileFn::FloorTruncated(f) => f.inner.is_step(),
            QuantileFn::Contaminated(c) => c.inner.is_step(),
        }
    }

    /// Quantile of the law shifted by `c` (pointwise G + c).
    pub fn shifted(&self, c: f64) -> QuantileFn {
        match self {
            QuantileFn::Empirical(d) => QuantileFn::Empirical(EmpiricalDistribution {
                samples: d.samples.iter().map(|v| v + c).collect(),
            }),
            QuantileFn::Tabulated(t) => QuantileFn::Tabulated(Tabulated {
                grid: t.grid.iter().map(|&(z, v)| (z, v + c)).collect(),
                interpolation: t.interpolation,
            }),
            QuantileFn::FloorTruncated(f) => QuantileFn::FloorTruncated(FloorTruncated {
                inner: Box::new(f.inner.shifted(c)),
                delta: f.delta,
                floor: f.floor + c,
            }),
            // The band endpoints are CDF levels of the inner law at its atom
            // and shift along with it, so the cached values stay valid.
            QuantileFn::Contaminated(co) => QuantileFn::Contaminated(Contaminated {
                inner: Box::new(co.inner.shifted(c)),
                z: co.z + c,
                epsilon: co.epsilon,
                f_z: co.f_z,
                f_z_left: co.f_z_left,
            }),
        }
    }

    /// Quantile of the law scaled by `lambda > 0` (pointwise lambda G).
    pub fn scaled(&self, lambda: f64) -> Result<QuantileFn> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::DomainError(format!(
                "scale factor {lambda} must be positive and finite"
            )));
        }
        Ok(match self {
            QuantileFn::Empirical(d) => QuantileFn::Empirical(EmpiricalDistribution {
                samples: d.samples.iter().map(|v| v * lambda).collect(),
            }),
            QuantileFn::Tabulated(t) => QuantileFn::Tabulated(Tabulated {
                grid: t.grid.iter().map(|&(z, v)| (z, v * lambda)).collect(),
                interpolation: t.interpolation,
            }),
            QuantileFn::FloorTruncated(f) => QuantileFn::FloorTruncated(FloorTruncated {
                inner: Box::new(f.inner.scaled(lambda)?),
                delta: f.delta,
                floor: f.floor * lambda,
            }),
            QuantileFn::Contaminated(co) => QuantileFn::Contaminated(Contaminated {
                inner: Box::new(co.inner.scaled(lambda)?),
                z: co.z * lambda,
                epsilon: co.epsilon,
                f_z: co.f_z,
                f_z_left: co.f_z_left,
            }),
        })
    }

    /// Quantile of X ^ 0 (pointwise min(G, 0)).
    pub fn loss_clamped(&self) -> QuantileFn {
        match self {
            QuantileFn::Empirical(d) => QuantileFn::Empirical(EmpiricalDistribution {
                samples: d.samples.iter().map(|v| v.min(0.0)).collect(),
            }),
            QuantileFn::Tabulated(t) => QuantileFn::Tabulated(t.loss_clamped()),
            QuantileFn::FloorTruncated(f) => QuantileFn::FloorTruncated(FloorTruncated {
                inner: Box::new(f.inner.loss_clamped()),
                delta: f.delta,
                floor: f.floor.min(0.0),
            }),
            // Keeping the cached band reproduces min(G_eps, 0) pointwise for
            // either sign of the atom; recomputing the band from the clamped
            // inner law would move it.
            QuantileFn::Contaminated(co) => QuantileFn::Contaminated(Contaminated {
                inner: Box::new(co.inner.loss_clamped()),
                z: co.z.min(0.0),
                epsilon: co.epsilon,
                f_z: co.f_z,
                f_z_left: co.f_z_left,
            }),
        }
    }
}

/// Quantile of the mixture (1-eps) F + eps delta_z. With eps = 0 the input
/// is returned unchanged.
pub fn contaminate_quantile(g: &QuantileFn, spec: &ContaminationSpec) -> Result<QuantileFn> {
    if !(spec.epsilon >= 0.0 && spec.epsilon < 1.0) {
        return Err(Error::DomainError(format!(
            "contamination weight {} outside [0,1)",
            spec.epsilon
        )));
    }
    if !spec.z.is_finite() {
        return Err(Error::InvalidInput("contamination atom must be finite".into()));
    }
    if spec.epsilon == 0.0 {
        return Ok(g.clone());
    }
    Ok(QuantileFn::Contaminated(Contaminated {
        inner: Box::new(g.clone()),
        z: spec.z,
        epsilon: spec.epsilon,
        f_z: g.cdf(spec.z),
        f_z_left: g.cdf_left(spec.z),
    }))
}

/// Central difference dG/dz with step 1e-5. Step quantiles have no
/// derivative and are refused.
pub fn derivative_at(g: &QuantileFn, z: f64) -> Result<f64> {
    const H: f64 = 1e-5;
    if g.is_step() {
        return Err(Error::MissingDerivative);
    }
    if !(z - H > 0.0 && z + H < 1.0) {
        return Err(Error::DomainError(format!(
            "derivative stencil around {z} leaves (0,1)"
        )));
    }
    Ok((g.value(z + H)? - g.value(z - H)?) / (2.0 * H))
}

/// Slack absorbing float noise when CDF values are compared at shifted jump
/// points; CDF steps are multiples of 1/n, far above this.
const JUMP_SLACK: f64 = 1e-12;

fn prokhorov_one_sided(a: &EmpiricalDistribution, b: &EmpiricalDistribution, eps: f64) -> bool {
    // sup_x [a(x - eps) - b(x)] over step CDFs is attained at a jump of
    // either term; left limits cover the plateau just before a jump.
    for &x in &a.distinct_values() {
        if a.cdf(x) - eps > b.cdf(x + eps) + JUMP_SLACK {
            return false;
        }
        if a.cdf_left(x) - eps > b.cdf_left(x + eps) + JUMP_SLACK {
            return false;
        }
    }
    for &x in &b.distinct_values() {
        if a.cdf(x - eps) - eps > b.cdf(x) + JUMP_SLACK {
            return false;
        }
        if a.cdf_left(x - eps) - eps > b.cdf_left(x) + JUMP_SLACK {
            return false;
        }
    }
    true
}

/// Levy-Prokhorov distance between two empirical laws, by bisection on the
/// two-sided defining inequalities F1(x-eps) - eps <= F2(x) and vice versa.
/// Returns the certified upper bisection endpoint, within `tol` of the true
/// distance; identical inputs return exactly 0.
pub fn levy_prokhorov(
    f1: &EmpiricalDistribution,
    f2: &EmpiricalDistribution,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::DomainError(format!("tolerance {tol} must be positive")));
    }
    let check = |eps: f64| prokhorov_one_sided(f1, f2, eps) && prokhorov_one_sided(f2, f1, eps);
    if check(0.0) {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let gap = (f1.max() - f2.min()).abs().max((f2.max() - f1.min()).abs());
    let mut hi = 1.0 + gap;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if check(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
