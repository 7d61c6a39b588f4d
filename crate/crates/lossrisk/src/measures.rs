//! The risk measure catalog: representation measures on (0,1), spectral
//! densities, loss utilities, the measure specs, and their evaluators.
//!
//! Every measure here depends on a position only through its loss part
//! X ^ 0 and is normalized so that a sure cash loss of alpha carries risk
//! alpha (spectral densities with total mass below one scale cash and are
//! flagged instead). Evaluation against empirical quantiles is exact
//! piecewise arithmetic, never quadrature.

use crate::dist::QuantileFn;
use crate::error::{Error, Result};
use crate::piecewise::{self, Piece};

/// One piecewise-constant density segment: `height` on [a, b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub height: f64,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn mass(&self) -> f64 {
        self.height * (self.b - self.a)
    }
}

/// A subprobability measure on (0,1): finitely many atoms plus a
/// piecewise-constant density. Total mass at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOn01 {
    atoms: Vec<(f64, f64)>,
    segments: Vec<Segment>,
}

impl MeasureOn01 {
    /// Builds a measure from `atoms` (location, mass) and density
    /// `segments`. Zero-mass atoms and zero-height segments are dropped.
    pub fn new(atoms: Vec<(f64, f64)>, segments: Vec<Segment>) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().filter(|&(_, m)| m != 0.0).collect();
        let mut segments: Vec<Segment> = segments.into_iter().filter(|s| s.height != 0.0).collect();
        for &(z, m) in &atoms {
            if !(z > 0.0 && z < 1.0) || !z.is_finite() {
                return Err(Error::InvalidInput(format!("atom location {z} outside (0,1)")));
            }
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidInput(format!("atom mass {m} must be positive")));
            }
        }
        atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidInput(format!("duplicate atom at {}", w[0].0)));
            }
        }
        for s in &segments {
            if !(s.a >= 0.0 && s.a < s.b && s.b <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "density segment [{}, {}) not inside [0,1]",
                    s.a, s.b
                )));
            }
            if !(s.height > 0.0 && s.height.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "density height {} must be positive",
                    s.height
                )));
            }
        }
        segments.sort_by(|x, y| x.a.total_cmp(&y.a));
        for w in segments.windows(2) {
            if w[1].a < w[0].b {
                return Err(Error::InvalidInput(format!(
                    "density segments [{}, {}) and [{}, {}) overlap",
                    w[0].a, w[0].b, w[1].a, w[1].b
                )));
            }
        }
        let m = Self { atoms, segments };
        if m.total_mass() > 1.0 + 1e-9 {
            return Err(Error::InvalidInput(format!(
                "total mass {} exceeds 1",
                m.total_mass()
            )));
        }
        Ok(m)
    }

    /// Point mass at `z` in (0,1).
    pub fn dirac(z: f64) -> Result<Self> {
        Self::new(vec![(z, 1.0)], vec![])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_mass(&self) -> f64 {
        let atom_mass: f64 = self.atoms.iter().map(|&(_, m)| m).sum();
        let seg_mass: f64 = self.segments.iter().map(Segment::mass).sum();
        atom_mass + seg_mass
    }

    /// Mass of the open interval (0, delta): atoms strictly below plus the
    /// density overlap.
    pub fn mass_below(&self, delta: f64) -> f64 {
        let atom_mass: f64 = self
            .atoms
            .iter()
            .filter(|&&(z, _)| z < delta)
            .map(|&(_, m)| m)
            .sum();
        let seg_mass: f64 = self
            .segments
            .iter()
            .map(|s| s.height * (s.b.min(delta) - s.a).max(0.0))
            .sum();
        atom_mass + seg_mass
    }

    /// Infimum of the support; `None` for the zero measure.
    pub fn inf_support(&self) -> Option<f64> {
        let atom_inf = self.atoms.first().map(|&(z, _)| z);
        let seg_inf = self.segments.first().map(|s| s.a);
        match (atom_inf, seg_inf) {
            (Some(a), Some(s)) => Some(a.min(s)),
            (Some(a), None) => Some(a),
            (None, Some(s)) => Some(s),
            (None, None) => None,
        }
    }

    /// Structural comparison: same atoms and segments within `tol`.
    pub fn approx_eq(&self, other: &MeasureOn01, tol: f64) -> bool {
        self.atoms.len() == other.atoms.len()
            && self.segments.len() == other.segments.len()
            && self
                .atoms
                .iter()
                .zip(&other.atoms)
                .all(|(&(z1, m1), &(z2, m2))| (z1 - z2).abs() <= tol && (m1 - m2).abs() <= tol)
            && self.segments.iter().zip(&other.segments).all(|(s1, s2)| {
                (s1.a - s2.a).abs() <= tol
                    && (s1.b - s2.b).abs() <= tol
                    && (s1.height - s2.height).abs() <= tol
            })
    }
}

/// One representation entry: a measure and its penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyEntry {
    measure: MeasureOn01,
    penalty: f64,
}

impl PenaltyEntry {
    pub fn new(measure: MeasureOn01, penalty: f64) -> Result<Self> {
        if !(penalty >= 0.0 && penalty.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "penalty {penalty} must be finite and nonnegative"
            )));
        }
        Ok(Self { measure, penalty })
    }

    pub fn measure(&self) -> &MeasureOn01 {
        &self.measure
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }
}

/// A finite penalty family: the computable surrogate for the domain of a
/// penalty function in the general representation.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyFamily {
    entries: Vec<PenaltyEntry>,
}

impl PenaltyFamily {
    pub fn new(entries: Vec<PenaltyEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("penalty family must be nonempty".into()));
        }
        Ok(Self { entries })
    }

    /// The family {(dirac(alpha), 0)} representing the alpha-level loss
    /// quantile.
    pub fn var_atom(alpha: f64) -> Result<Self> {
        Self::new(vec![PenaltyEntry::new(MeasureOn01::dirac(alpha)?, 0.0)?])
    }

    /// Single zero-penalty entry carrying the density of `phi`.
    pub fn from_spectral(phi: &SpectralDensity) -> Result<Self> {
        let measure = MeasureOn01::new(vec![], phi.segments())?;
        Self::new(vec![PenaltyEntry::new(measure, 0.0)?])
    }

    pub fn entries(&self) -> &[PenaltyEntry] {
        &self.entries
    }

    /// For each eps in `eps_grid`, reports whether some entry has mass at
    /// least 1 - eps and penalty at most `slack`. Reported, not enforced:
    /// a family failing this scales cash and loses normalization.
    pub fn normalization_surrogate(&self, eps_grid: &[f64], slack: f64) -> Vec<(f64, bool)> {
        eps_grid
            .iter()
            .map(|&eps| {
                let ok = self
                    .entries
                    .iter()
                    .any(|e| e.measure.total_mass() >= 1.0 - eps && e.penalty <= slack);
                (eps, ok)
            })
            .collect()
    }
}

/// Piecewise-constant nonincreasing density on (0,1) with total integral in
/// (0, 1]. Integral exactly 1 marks the normalized class.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    breakpoints: Vec<f64>,
    heights: Vec<f64>,
}

impl SpectralDensity {
    pub fn new(breakpoints: Vec<f64>, heights: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || heights.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidInput(
                "spectral density needs n+1 breakpoints for n heights".into(),
            ));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || heights.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidInput("non-finite spectral density data".into()));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput(
                "spectral breakpoints must span 0 to 1 exactly".into(),
            ));
        }
        for w in breakpoints.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(
                    "spectral breakpoints must be strictly increasing".into(),
                ));
            }
        }
        for &h in &heights {
            if h < 0.0 {
                return Err(Error::InvalidInput(format!("negative spectral height {h}")));
            }
        }
        for w in heights.windows(2) {
            if w[1] > w[0] + 1e-12 {
                return Err(Error::InvalidInput(
                    "spectral heights must be nonincreasing".into(),
                ));
            }
        }
        let d = Self { breakpoints, heights };
        let total = d.integral();
        if !(total > 0.0 && total <= 1.0 + 1e-9) {
            return Err(Error::InvalidInput(format!(
                "spectral density integral {total} outside (0, 1]"
            )));
        }
        Ok(d)
    }

    /// The density (1/beta) on (0, beta), zero above.
    pub fn etl_density(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::DomainError(format!("tail level {beta} outside (0,1]")));
        }
        if beta == 1.0 {
            Self::new(vec![0.0, 1.0], vec![1.0])
        } else {
            Self::new(vec![0.0, beta, 1.0], vec![1.0 / beta, 0.0])
        }
    }

    pub fn integral(&self) -> f64 {
        self.heights
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(h, w)| h * (w[1] - w[0]))
            .sum()
    }

    /// True when the density integrates to 1 (within 1e-9), so cash is
    /// preserved exactly.
    pub fn is_phi(&self) -> bool {
        (self.integral() - 1.0).abs() <= 1e-9
    }

    /// Nonzero segments of the density.
    pub fn segments(&self) -> Vec<Segment> {
        self.heights
            .iter()
            .zip(self.breakpoints.windows(2))
            .filter(|(h, _)| **h > 0.0)
            .map(|(&height, w)| Segment { a: w[0], b: w[1], height })
            .collect()
    }

    /// Integral of the density over (0, delta).
    pub fn integral_below(&self, delta: f64) -> f64 {
        self.segments()
            .iter()
            .map(|s| s.height * (s.b.min(delta) - s.a).max(0.0))
            .sum()
    }

    /// Integral of the density over (delta, 1).
    pub fn integral_above(&self, delta: f64) -> f64 {
        self.segments()
            .iter()
            .map(|s| s.height * (s.b - s.a.max(delta)).max(0.0))
            .sum()
    }
}

/// Utility applied to loss magnitudes: x^p with p >= 1, or e^(beta x) with
/// beta > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossUtility {
    Power { p: f64 },
    Exponential { beta: f64 },
}

/// Exponent bound above which e^x leaves f64 range.
const EXP_OVERFLOW: f64 = 700.0;

impl LossUtility {
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::DomainError(format!("power exponent {p} must be >= 1")));
        }
        Ok(Self::Power { p })
    }

    pub fn exponential(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::DomainError(format!(
                "exponential coefficient {beta} must be positive"
            )));
        }
        Ok(Self::Exponential { beta })
    }

    /// u(x) for x >= 0. Overflow is reported, never saturated.
    pub fn u(&self, x: f64) -> Result<f64> {
        match *self {
            Self::Power { p } => Ok(if p == 1.0 { x } else { x.powf(p) }),
            Self::Exponential { beta } => {
                let arg = beta * x;
                if arg > EXP_OVERFLOW {
                    return Err(Error::Overflow {
                        arg,
                        context: format!("u({x})"),
                    });
                }
                Ok(arg.exp())
            }
        }
    }

    /// Inverse of u on its range.
    pub fn u_inv(&self, y: f64) -> f64 {
        match *self {
            Self::Power { p } => {
                if p == 1.0 {
                    y
                } else {
                    y.powf(1.0 / p)
                }
            }
            Self::Exponential { beta } => y.ln() / beta,
        }
    }

    /// Derivative u'(x) for x >= 0.
    pub fn u_prime(&self, x: f64) -> Result<f64> {
        match *self {
            Self::Power { p } => Ok(if p == 1.0 { 1.0 } else { p * x.powf(p - 1.0) }),
            Self::Exponential { beta } => {
                let arg = beta * x;
                if arg > EXP_OVERFLOW {
                    return Err(Error::Overflow {
                        arg,
                        context: format!("u'({x})"),
                    });
                }
                Ok(beta * arg.exp())
            }
        }
    }
}

/// A risk measure from the catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskMeasureSpec {
    /// Negative loss quantile at level alpha.
    VarLoss { alpha: f64 },
    /// Expected tail loss over the lowest beta quantile levels.
    Etl { beta: f64 },
    Spectral(SpectralDensity),
    /// Loss certainty equivalent under a loss utility.
    LossCe(LossUtility),
    /// Expected loss magnitude.
    PutPremium,
    /// Worst scenario loss; takes raw scenario P&Ls, not a distribution.
    SpanScenarios,
    /// Fenchel-Legendre form over a finite penalty family.
    GeneralFenchel(PenaltyFamily),
    /// Inner measure evaluated on the truncated quantile G(z v delta).
    Truncated { inner: Box<RiskMeasureSpec>, delta: f64 },
    /// Spectral weight renormalized onto (delta, 1); the weight leaves the
    /// admissible density class.
    AltTruncated { phi: SpectralDensity, delta: f64 },
}

impl RiskMeasureSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::VarLoss { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::DomainError(format!("level {alpha} outside (0,1)")));
                }
            }
            Self::Etl { beta } => {
                if !(*beta > 0.0 && *beta <= 1.0) {
                    return Err(Error::DomainError(format!("tail level {beta} outside (0,1]")));
                }
            }
            Self::LossCe(u) => match *u {
                LossUtility::Power { p } => {
                    LossUtility::power(p)?;
                }
                LossUtility::Exponential { beta } => {
                    LossUtility::exponential(beta)?;
                }
            },
            Self::Spectral(_) | Self::PutPremium | Self::SpanScenarios | Self::GeneralFenchel(_) => {}
            Self::Truncated { inner, delta } => {
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(Error::DomainError(format!(
                        "truncation level {delta} outside (0,1)"
                    )));
                }
                if matches!(**inner, Self::Truncated { .. } | Self::AltTruncated { .. }) {
                    return Err(Error::InvalidInput("truncation nesting depth exceeds 1".into()));
                }
                if matches!(**inner, Self::SpanScenarios) {
                    return Err(Error::InvalidInput(
                        "scenario margin has no quantile to truncate".into(),
                    ));
                }
                inner.validate()?;
            }
            Self::AltTruncated { delta, .. } => {
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(Error::DomainError(format!(
                        "truncation level {delta} outside (0,1)"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Input to `eval`: a quantile function, or raw scenario P&Ls for the
/// scenario margin.
#[derive(Clone, Copy)]
pub enum EvalInput<'a> {
    Quantile(&'a QuantileFn),
    Scenarios(&'a [f64]),
}

/// Worst scenario loss: max over scenarios of -min(x, 0).
pub fn eval_span(scenario_pnls: &[f64]) -> Result<f64> {
    if scenario_pnls.is_empty() {
        return Err(Error::InvalidInput("empty scenario list".into()));
    }
    if let Some(bad) = scenario_pnls.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite scenario P&L {bad}")));
    }
    Ok(scenario_pnls
        .iter()
        .map(|&x| -x.min(0.0))
        .fold(0.0, f64::max))
}

fn finite_or_nonintegrable(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonIntegrable(format!("{what} evaluated to {v}")))
    }
}

/// Expected loss magnitude -int_0^1 (G ^ 0) dz.
pub fn eval_put_premium(g: &QuantileFn) -> Result<f64> {
    finite_or_nonintegrable(-piecewise::loss_integral(&g.pieces()), "put premium")
}

/// Expected tail loss -(1/beta) int_0^beta (G ^ 0) dz.
pub fn eval_etl(g: &QuantileFn, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::DomainError(format!("tail level {beta} outside (0,1]")));
    }
    let v = -(1.0 / beta) * piecewise::loss_integral_on(&g.pieces(), 0.0, beta);
    finite_or_nonintegrable(v, "expected tail loss")
}

/// Spectral loss measure -int_0^1 (G ^ 0) phi dz, exact per segment.
pub fn eval_spectral(g: &QuantileFn, phi: &SpectralDensity) -> Result<f64> {
    let pieces = g.pieces();
    let v = -phi
        .segments()
        .iter()
        .map(|s| s.height * piecewise::loss_integral_on(&pieces, s.a, s.b))
        .sum::<f64>();
    finite_or_nonintegrable(v, "spectral loss measure")
}

/// int u(|value ^ 0|) dz over the pieces, closed form per segment. The
/// integrand is evaluated exactly on each affine loss stretch.
fn u_loss_integral(pieces: &[Piece], u: &LossUtility) -> Result<f64> {
    let u0 = u.u(0.0)?;
    let mut total = 0.0;
    for p in pieces {
        let lp = p.loss_part();
        let loss_len = lp.map_or(0.0, |l| l.len());
        total += (p.len() - loss_len) * u0;
        let Some(l) = lp else { continue };
        // Loss magnitude runs linearly from a down to b over length m.
        let (a, b, m) = (-l.v0, -l.v1, l.len());
        if (a - b).abs() <= 1e-12 * (1.0 + a.abs()) {
            total += m * u.u(0.5 * (a + b))?;
            continue;
        }
        total += match *u {
            LossUtility::Power { p } => {
                m * (a.powf(p + 1.0) - b.powf(p + 1.0)) / ((p + 1.0) * (a - b))
            }
            LossUtility::Exponential { beta } => {
                if beta * a > EXP_OVERFLOW {
                    return Err(Error::Overflow {
                        arg: beta * a,
                        context: format!(
                            "segment [{:.6}, {:.6}) with loss magnitude up to {a}",
                            l.z0, l.z1
                        ),
                    });
                }
                m * ((beta * a).exp() - (beta * b).exp()) / (beta * (a - b))
            }
        };
    }
    Ok(total)
}

/// Loss certainty equivalent u^-1(int_0^1 u(|G ^ 0|) dz).
pub fn eval_loss_ce(g: &QuantileFn, u: &LossUtility) -> Result<f64> {
    let total = u_loss_integral(&g.pieces(), u)?;
    finite_or_nonintegrable(u.u_inv(total), "loss certainty equivalent")
}

/// General form -min over entries of { int (G ^ 0) dm + penalty }. Atom
/// terms evaluate G pointwise; density terms integrate exactly.
pub fn eval_general_fenchel(g: &QuantileFn, fam: &PenaltyFamily) -> Result<f64> {
    let pieces = g.pieces();
    let mut best = f64::INFINITY;
    for e in fam.entries() {
        let mut val = e.penalty();
        for &(z, mass) in e.measure().atoms() {
            val += mass * g.value(z)?.min(0.0);
        }
        for s in e.measure().segments() {
            val += s.height * piecewise::loss_integral_on(&pieces, s.a, s.b);
        }
        if !val.is_finite() {
            return Err(Error::NonIntegrable(format!(
                "representation entry evaluated to {val}"
            )));
        }
        best = best.min(val);
    }
    Ok(-best)
}

/// Dispatches a spec to its evaluator. The scenario margin takes scenario
/// P&Ls; every other variant takes a quantile function.
pub fn eval(spec: &RiskMeasureSpec, input: EvalInput) -> Result<f64> {
    spec.validate()?;
    let g = match (spec, input) {
        (RiskMeasureSpec::SpanScenarios, EvalInput::Scenarios(s)) => return eval_span(s),
        (RiskMeasureSpec::SpanScenarios, EvalInput::Quantile(_)) => {
            return Err(Error::InvalidInput(
                "scenario margin takes a scenario list, not a distribution".into(),
            ))
        }
        (_, EvalInput::Scenarios(_)) => {
            return Err(Error::InvalidInput(
                "this measure takes a distribution, not a scenario list".into(),
            ))
        }
        (_, EvalInput::Quantile(g)) => g,
    };
    match spec {
        RiskMeasureSpec::VarLoss { alpha } => Ok(-g.value(*alpha)?.min(0.0)),
        RiskMeasureSpec::Etl { beta } => eval_etl(g, *beta),
        RiskMeasureSpec::Spectral(phi) => eval_spectral(g, phi),
        RiskMeasureSpec::LossCe(u) => eval_loss_ce(g, u),
        RiskMeasureSpec::PutPremium => eval_put_premium(g),
        RiskMeasureSpec::GeneralFenchel(fam) => eval_general_fenchel(g, fam),
        RiskMeasureSpec::Truncated { inner, delta } => {
            let truncated = QuantileFn::floor_truncated(g.clone(), *delta)?;
            eval(inner, EvalInput::Quantile(&truncated))
        }
        RiskMeasureSpec::AltTruncated { phi, delta } => {
            let weight = crate::robustify::alt_truncate(phi, *delta)?;
            let pieces = g.pieces();
            let v = -weight
                .segments()
                .iter()
                .map(|s| s.height * piecewise::loss_integral_on(&pieces, s.a, s.b))
                .sum::<f64>();
            finite_or_nonintegrable(v, "renormalized truncated spectral measure")
        }
        RiskMeasureSpec::SpanScenarios => unreachable!("handled above"),
    }
}

/// Primal L^p loss certainty equivalent next to a brute-force grid maximum
/// of the dual objective -E[(X ^ 0) Y] over nonnegative Y with conjugate
/// norm at most 1. Returns (primal, dual_max).
///
/// Gains force their dual coordinate to zero, so the grid runs over loss
/// coordinates only; the last loss coordinate saturates the norm budget.
/// Cost grows as resolution^(loss_coords - 1).
pub fn holder_dual_check(g: &QuantileFn, p: f64, resolution: usize) -> Result<(f64, f64)> {
    let QuantileFn::Empirical(d) = g else {
        return Err(Error::InvalidInput(
            "dual grid search needs an empirical distribution".into(),
        ));
    };
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::DomainError(format!("exponent {p} must be >= 1")));
    }
    if resolution < 50 {
        return Err(Error::DomainError(format!(
            "grid resolution {resolution} below minimum 50"
        )));
    }
    let n = d.n() as f64;
    let mut support: Vec<(f64, f64)> = Vec::new();
    for &x in d.samples() {
        match support.last_mut() {
            Some((v, w)) if *v == x => *w += 1.0 / n,
            _ => support.push((x, 1.0 / n)),
        }
    }
    if support.len() > 6 {
        return Err(Error::TooLarge(format!(
            "{} distinct atoms exceed the brute-force limit 6",
            support.len()
        )));
    }
    let primal = eval_loss_ce(g, &LossUtility::Power { p })?;
    let losses: Vec<(f64, f64)> = support
        .iter()
        .filter(|&&(v, _)| v < 0.0)
        .map(|&(v, w)| (-v, w))
        .collect();
    if losses.is_empty() {
        return Ok((primal, 0.0));
    }
    let dual_max = if p == 1.0 {
        // Sup norm budget 1: Y = 1 on every loss coordinate is optimal.
        losses.iter().map(|&(a, w)| w * a).sum()
    } else {
        let q = p / (p - 1.0);
        grid_dual_max(&losses, q, resolution)
    };
    Ok((primal, dual_max))
}

fn grid_dual_max(losses: &[(f64, f64)], q: f64, resolution: usize) -> f64 {
    let free = losses.len() - 1;
    // Each free coordinate sweeps [0, (1/w)^(1/q)], the single-coordinate
    // budget cap.
    let caps: Vec<f64> = losses[..free]
        .iter()
        .map(|&(_, w)| (1.0 / w).powf(1.0 / q))
        .collect();
    let (a_last, w_last) = losses[free];
    let mut best = 0.0f64;
    let mut idx = vec![0usize; free];
    loop {
        let mut used = 0.0;
        let mut obj = 0.0;
        for (k, &i) in idx.iter().enumerate() {
            let y = caps[k] * i as f64 / (resolution - 1) as f64;
            let (a, w) = losses[k];
            used += w * y.powf(q);
            obj += w * a * y;
        }
        if used <= 1.0 {
            let y_last = ((1.0 - used).max(0.0) / w_last).powf(1.0 / q);
            best = best.max(obj + w_last * a_last * y_last);
        }
        let mut k = 0;
        loop {
            if k == free {
                return best;
            }
            idx[k] += 1;
            if idx[k] < resolution {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomStatus {
    Pass,
    Fail,
    NotAsserted,
}

#[derive(Debug, Clone)]
pub struct AxiomCheck {
    pub axiom: String,
    pub status: AxiomStatus,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
}

/// True when a sure cash loss of alpha must evaluate to exactly alpha for
/// this spec. Densities with mass below 1 and families without a mass-1
/// zero-penalty entry scale cash instead.
fn normalization_asserted(spec: &RiskMeasureSpec) -> bool {
    match spec {
        RiskMeasureSpec::VarLoss { .. }
        | RiskMeasureSpec::Etl { .. }
        | RiskMeasureSpec::LossCe(_)
        | RiskMeasureSpec::PutPremium
        | RiskMeasureSpec::SpanScenarios => true,
        RiskMeasureSpec::Spectral(phi) => phi.is_phi(),
        RiskMeasureSpec::GeneralFenchel(fam) => fam
            .entries()
            .iter()
            .any(|e| (e.measure().total_mass() - 1.0).abs() <= 1e-9 && e.penalty() <= 1e-9),
        RiskMeasureSpec::Truncated { inner, .. } => normalization_asserted(inner),
        // The renormalized weight integrates to 1 by construction.
        RiskMeasureSpec::AltTruncated { .. } => true,
    }
}

/// True when quantile convexity is a theorem for the variant, so the suite
/// asserts it instead of reporting observations.
fn convexity_asserted(spec: &RiskMeasureSpec) -> bool {
    match spec {
        RiskMeasureSpec::VarLoss { .. } => false,
        RiskMeasureSpec::Truncated { inner, .. } => convexity_asserted(inner),
        _ => true,
    }
}

fn is_loss_ce(spec: &RiskMeasureSpec) -> bool {
    match spec {
        RiskMeasureSpec::LossCe(_) => true,
        RiskMeasureSpec::Truncated { inner, .. } => matches!(**inner, RiskMeasureSpec::LossCe(_)),
        _ => false,
    }
}

fn eval_on_quantile(spec: &RiskMeasureSpec, g: &QuantileFn) -> Result<f64> {
    if matches!(spec, RiskMeasureSpec::SpanScenarios) {
        let QuantileFn::Empirical(d) = g else {
            return Err(Error::InvalidInput(
                "scenario margin checks need empirical inputs".into(),
            ));
        };
        eval(spec, EvalInput::Scenarios(d.samples()))
    } else {
        eval(spec, EvalInput::Quantile(g))
    }
}

/// Checks the defining axioms of a loss-based risk measure on the supplied
/// inputs. Failures are data, not errors; checks that are no theorem for
/// the variant are reported as not asserted.
pub fn axiom_suite(
    spec: &RiskMeasureSpec,
    inputs: &[QuantileFn],
    tol: f64,
) -> Result<AxiomReport> {
    spec.validate()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::DomainError(format!("tolerance {tol} must be positive")));
    }
    let mut checks = Vec::new();

    checks.push(check_normalization(spec, tol)?);
    checks.push(check_monotonicity(spec, inputs, tol)?);
    checks.push(check_loss_dependence(spec, inputs, tol)?);
    checks.push(check_convexity(spec, inputs, tol)?);
    checks.push(check_cash_subadditivity(spec, inputs, tol)?);
    checks.push(check_cash_loss_additivity(spec, inputs, tol)?);

    Ok(AxiomReport { checks })
}

const CASH_LEVELS: [f64; 4] = [0.0, 0.5, 1.0, 10.0];

fn check_normalization(spec: &RiskMeasureSpec, tol: f64) -> Result<AxiomCheck> {
    let axiom = "normalization".to_string();
    if !normalization_asserted(spec) {
        return Ok(AxiomCheck {
            axiom,
            status: AxiomStatus::NotAsserted,
            detail: "representation mass below 1 scales sure cash losses".into(),
        });
    }
    for &alpha in &CASH_LEVELS {
        let rho = if matches!(spec, RiskMeasureSpec::SpanScenarios) {
            eval(spec, EvalInput::Scenarios(&[-alpha]))?
        } else {
            let g = QuantileFn::constant(-alpha)?;
            eval(spec, EvalInput::Quantile(&g))?
        };
        if (rho - alpha).abs() > tol {
            return Ok(AxiomCheck {
                axiom,
                status: AxiomStatus::Fail,
                detail: format!("sure loss {alpha} evaluated to {rho}"),
            });
        }
    }
    Ok(AxiomCheck {
        axiom,
        status: AxiomStatus::Pass,
        detail: format!("cash losses {CASH_LEVELS:?} reproduced within {tol:.0e}"),
    })
}

fn check_monotonicity(spec: &RiskMeasureSpec, inputs: &[QuantileFn], tol: f64) -> Result<AxiomCheck> {
    let axiom = "monotonicity".to_string();
    let mut pairs = 0usize;
    for (i, g) in inputs.iter().enumerate() {
        if matches!(spec, RiskMeasureSpec::SpanScenarios) && !matches!(g, QuantileFn::Empirical(_)) {
            continue;
        }
        let base = eval_on_quantile(spec, g)?;
        let mut dominating = vec![g.shifted(1.0)];
        if let QuantileFn::Empirical(d) = g {
            // Samplewise nonnegative bumps dominate every order statistic.
            let bumped: Vec<f64> = d
                .samples()
                .iter()
                .enumerate()
                .map(|(k, &v)| v + 0.37 * (k % 3) as f64)
                .collect();
            dominating.push(QuantileFn::empirical(
                crate::dist::EmpiricalDistribution::from_samples(&bumped)?,
            ));
        }
        for better in &dominating {
            let rho_better = eval_on_quantile(spec, better)?;
            pairs += 1;
            if rho_better > base + tol {
                return Ok(AxiomCheck {
                    axiom,
                    status: AxiomStatus::Fail,
                    detail: format!(
                        "input #{i}: dominating position has risk {rho_better} > {base}"
                    ),
                });
            }
        }
    }
    Ok(AxiomCheck {
        axiom,
        status: AxiomStatus::Pass,
        detail: format!("{pairs} dominating pairs ordered correctly"),
    })
}

fn check_loss_dependence(
    spec: &RiskMeasureSpec,
    inputs: &[QuantileFn],
    tol: f64,
) -> Result<AxiomCheck> {
    let axiom = "loss_dependence".to_string();
    let mut checked = 0usize;
    for (i, g) in inputs.iter().enumerate() {
        if matches!(spec, RiskMeasureSpec::SpanScenarios) && !matches!(g, QuantileFn::Empirical(_)) {
            continue;
        }
        let rho = eval_on_quantile(spec, g)?;
        let rho_clamped = eval_on_quantile(spec, &g.loss_clamped())?;
        // Clamping an empirical sample is exact, so equality is bitwise
        // there; other kinds get the tolerance.
        let ok = if matches!(g, QuantileFn::Empirical(_)) {
            rho == rho_clamped
        } else {
            (rho - rho_clamped).abs() <= tol
        };
        checked += 1;
        if !ok {
            return Ok(AxiomCheck {
                axiom,
                status: AxiomStatus::Fail,
                detail: format!("input #{i}: rho(G) = {rho} but rho(G ^ 0) = {rho_clamped}"),
            });
        }
    }
    Ok(AxiomCheck {
        axiom,
        status: AxiomStatus::Pass,
        detail: format!("{checked} inputs unchanged under loss clamping"),
    })
}

const MIX_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.75];

fn check_convexity(spec: &RiskMeasureSpec, inputs: &[QuantileFn], tol: f64) -> Result<AxiomCheck> {
    let axiom = "quantile_convexity".to_string();
    if !convexity_asserted(spec) {
        return Ok(AxiomCheck {
            axiom,
            status: AxiomStatus::NotAsserted,
            detail: "quantile mixtures of loss quantiles can cross the level".into(),
        });
    }
    let mut triples = 0usize;
    for (i, g) in inputs.iter().enumerate() {
        let QuantileFn::Empirical(d) = g else { continue };
        let xs = d.samples();
        // Partner with the reflected sample: same size, different shape.
        let partner = crate::dist::EmpiricalDistribution::from_samples(
            &xs.iter().map(|v| -v).collect::<Vec<_>>(),
        )?;
        let ys = partner.samples();
        let rho_x = eval_on_quantile(spec, g)?;
        let rho_y = eval_on_quantile(spec, &QuantileFn::empirical(partner.clone()))?;
        for &lambda in &MIX_WEIGHTS {
            // Order-statistic mixture: the quantile of the mix is the mix
            // of the sorted samples.
            let mixed: Vec<f64> = xs
                .iter()
                .zip(ys)
                .map(|(&x, &y)| lambda * x + (1.0 - lambda) * y)
                .collect();
            let gm = QuantileFn::empirical(crate::dist::EmpiricalDistribution::from_samples(&mixed)?);
            let rho_mix = eval_on_quantile(spec, &gm)?;
            let bound = lambda * rho_x + (1.0 - lambda) * rho_y;
            triples += 1;
            if rho_mix > bound + tol {
                return Ok(AxiomCheck {
                    axiom,
                    status: AxiomStatus::Fail,
                    detail: format!(
                        "input #{i}, lambda = {lambda}: rho(mix) = {rho_mix} > {bound}"
                    ),
                });
            }
        }
    }
    Ok(AxiomCheck {
        axiom,
        status: AxiomStatus::Pass,
        detail: format!("{triples} quantile mixtures below the chord"),
    })
}

const CASH_SHIFTS: [f64; 3] = [0.25, 1.0, 4.0];

fn check_cash_subadditivity(
    spec: &RiskMeasureSpec,
    inputs: &[QuantileFn],
    tol: f64,
) -> Result<AxiomCheck> {
    let axiom = "cash_subadditivity".to_string();
    if !is_loss_ce(spec) {
        return Ok(AxiomCheck {
            axiom,
            status: AxiomStatus::NotAsserted,
            detail: "checked for loss certainty equivalents only".into(),
        });
    }
    for (i, g) in inputs.iter().enumerate() {
        let rho = eval_on_quantile(spec, g)?;
        for &alpha in &CASH_SHIFTS {
            let rho_shifted = eval_on_quantile(spec, &g.shifted(-alpha))?;
            if rho_shifted > rho + alpha + tol {
                return Ok(AxiomCheck {
                    axiom,
                    status: AxiomStatus::Fail,
                    detail: format!(
                        "input #{i}, alpha = {alpha}: rho(G - a) = {rho_shifted} > rho + a = {}",
                        rho + alpha
                    ),
                });
            }
        }
    }
    Ok(AxiomCheck {
        axiom,
        status: AxiomStatus::Pass,
        detail: format!("cash shifts {CASH_SHIFTS:?} raised risk at most additively"),
    })
}

fn check_cash_loss_additivity(
    spec: &RiskMeasureSpec,
    inputs: &[QuantileFn],
    tol: f64,
) -> Result<AxiomCheck> {
    let axiom = "cash_loss_additivity".to_string();
    if !matches!(spec, RiskMeasureSpec::LossCe(_)) {
        return Ok(AxiomCheck {
            axiom,
            status: AxiomStatus::NotAsserted,
            detail: "characterization examined for loss certainty equivalents only".into(),
        });
    }
    let mut checked = 0usize;
    for (i, g) in inputs.iter().enumerate() {
        // The additivity statement quantifies over pure-loss positions.
        let gc = g.loss_clamped();
        let rho = eval_on_quantile(spec, &gc)?;
        for &alpha in &CASH_SHIFTS {
            let lhs = eval_on_quantile(spec, &gc.shifted(-alpha))?;
            let rhs = rho + alpha;
            checked += 1;
            if (lhs - rhs).abs() > tol {
                return Ok(AxiomCheck {
                    axiom,
                    status: AxiomStatus::Fail,
                    detail: format!(
                        "input #{i}, alpha = {alpha}: rho(G - a) = {lhs} but rho(G) + a = {rhs}"
                    ),
                });
            }
        }
    }
    Ok(AxiomCheck {
        axiom,
        status: AxiomStatus::Pass,
        detail: format!("{checked} pure-loss cash shifts exactly additive"),
    })
}
