//! Monte-Carlo laboratory: estimator laws over replicated sampling,
//! qualitative-robustness sweeps in Levy-Prokhorov distance, consistency
//! curves against exact piecewise oracles, and the decidable robustness and
//! Lebesgue condition checks on finite penalty families.

use crate::catalog::parse_measure;
use crate::dist::{
    contaminate_quantile, levy_prokhorov, ContaminationSpec, EmpiricalDistribution,
    Interpolation, QuantileFn,
};
use crate::error::{Error, Result};
use crate::measures::{eval, EvalInput, PenaltyFamily, RiskMeasureSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;

/// Generator recorded in report headers.
pub const RNG_NAME: &str = "chacha8";
/// Replication seed derivation recorded in report headers.
pub const RNG_SPLIT: &str = "splitmix64(seed xor replication_index)";

/// Bisection tolerance for estimator-law distances.
const LP_TOL: f64 = 1e-6;

/// Finalizer-style mix so that nearby replication indices get unrelated
/// stream seeds.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn replication_rng(seed: u64, r: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ r as u64))
}

/// Test base law: a finite mixture of uniform segments and atoms with an
/// exact tabulated quantile function, so every catalog measure evaluates on
/// it in closed form.
#[derive(Debug, Clone)]
pub struct PiecewiseBase {
    segments: Vec<(f64, f64, f64)>,
    atoms: Vec<(f64, f64)>,
    quantile: QuantileFn,
}

impl PiecewiseBase {
    /// Builds the mixture from `(lo, hi, weight)` segments and `(x, weight)`
    /// atoms. Segments must be disjoint, atoms must not fall inside a
    /// segment's interior, and the weights must sum to one.
    pub fn new(segments: Vec<(f64, f64, f64)>, atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi, w) in &segments {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!(
                    "segment [{lo}, {hi}) is not a finite nonempty interval"
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "segment weight {w} must be positive"
                )));
            }
        }
        for &(x, w) in &atoms {
            if !x.is_finite() {
                return Err(Error::InvalidInput(format!("atom at {x} must be finite")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "atom weight {w} must be positive"
                )));
            }
            if segments.iter().any(|&(lo, hi, _)| lo < x && x < hi) {
                return Err(Error::InvalidInput(format!(
                    "atom at {x} lies inside a segment; split the segment instead"
                )));
            }
        }
        let mut segments = segments;
        segments.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in segments.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(Error::InvalidInput(format!(
                    "segments [{}, {}) and [{}, {}) overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in atoms.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidInput(format!(
                    "duplicate atom at {}",
                    pair[0].0
                )));
            }
        }
        let total: f64 = segments.iter().map(|s| s.2).sum::<f64>()
            + atoms.iter().map(|a| a.1).sum::<f64>();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        let quantile = build_quantile(&segments, &atoms)?;
        Ok(Self {
            segments,
            atoms,
            quantile,
        })
    }

    pub fn segments(&self) -> &[(f64, f64, f64)] {
        &self.segments
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Exact quantile function of the mixture.
    pub fn quantile_fn(&self) -> &QuantileFn {
        &self.quantile
    }
}

/// Walks the mixture components in value order, accumulating probability
/// into linear-interpolation knots; atoms become flat pieces, support gaps
/// become knot pairs sharing a grid point.
fn build_quantile(segments: &[(f64, f64, f64)], atoms: &[(f64, f64)]) -> Result<QuantileFn> {
    enum Comp {
        Seg(f64, f64, f64),
        Atom(f64, f64),
    }
    let mut comps: Vec<Comp> = segments
        .iter()
        .map(|&(lo, hi, w)| Comp::Seg(lo, hi, w))
        .chain(atoms.iter().map(|&(x, w)| Comp::Atom(x, w)))
        .collect();
    // An atom at a segment endpoint sorts before the segment it touches.
    comps.sort_by(|a, b| {
        let key = |c: &Comp| match *c {
            Comp::Seg(lo, _, _) => (lo, 1u8),
            Comp::Atom(x, _) => (x, 0u8),
        };
        let (ka, ta) = key(a);
        let (kb, tb) = key(b);
        ka.total_cmp(&kb).then(ta.cmp(&tb))
    });
    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(2 * comps.len() + 2);
    let push = |knots: &mut Vec<(f64, f64)>, knot: (f64, f64)| {
        if knots.last() != Some(&knot) {
            knots.push(knot);
        }
    };
    let mut z = 0.0_f64;
    for comp in &comps {
        match *comp {
            Comp::Seg(lo, hi, w) => {
                push(&mut knots, (z, lo));
                z += w;
                push(&mut knots, (z, hi));
            }
            Comp::Atom(x, w) => {
                push(&mut knots, (z, x));
                z += w;
                push(&mut knots, (z, x));
            }
        }
    }
    // Accumulated weight ends within 1e-9 of one; pin the endpoint so the
    // grid spans (0,1] exactly.
    if let Some(last) = knots.last_mut() {
        last.0 = 1.0;
    }
    QuantileFn::tabulated(knots, Interpolation::Linear)
}

/// Inverse-transform draw through a quantile function; the uniform level is
/// redrawn away from 0 where the quantile is undefined.
fn draw(q: &QuantileFn, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut u: f64 = rng.gen();
    while u <= 0.0 {
        u = rng.gen();
    }
    q.value(u)
}

/// Contamination sweep: the cross product of weights and contamination
/// points.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationSweep {
    pub epsilons: Vec<f64>,
    pub zs: Vec<f64>,
}

/// Monte-Carlo experiment description, usually parsed from a JSON config.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spec: RiskMeasureSpec,
    pub base: PiecewiseBase,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub contamination: Option<ContaminationSweep>,
    pub consistency: Option<Vec<usize>>,
    /// Parsed config document, echoed into reports.
    pub echo: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    spec: Value,
    base: RawBase,
    n: usize,
    replications: usize,
    seed: u64,
    #[serde(default)]
    contamination: Option<RawContamination>,
    #[serde(default)]
    consistency: Option<RawConsistency>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBase {
    #[serde(default)]
    segments: Vec<(f64, f64, f64)>,
    #[serde(default)]
    atoms: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContamination {
    epsilons: Vec<f64>,
    zs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConsistency {
    n_list: Vec<usize>,
}

/// Parses and validates an experiment config document.
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("config schema error: {e}")))?;
    let echo: Value = serde_json::from_str(text).expect("validated just above");
    let spec = parse_measure(&raw.spec, "spec")?;
    let base = PiecewiseBase::new(raw.base.segments, raw.base.atoms)?;
    if raw.n == 0 || raw.replications == 0 {
        return Err(Error::InvalidInput(
            "n and replications must be at least 1".into(),
        ));
    }
    let contamination = match raw.contamination {
        None => None,
        Some(c) => {
            if c.epsilons.is_empty() || c.zs.is_empty() {
                return Err(Error::InvalidInput(
                    "contamination sweep must list at least one epsilon and one z".into(),
                ));
            }
            for &eps in &c.epsilons {
                if !(0.0..1.0).contains(&eps) {
                    return Err(Error::DomainError(format!(
                        "contamination weight {eps} outside [0, 1)"
                    )));
                }
            }
            for &z in &c.zs {
                if !z.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "contamination point {z} must be finite"
                    )));
                }
            }
            Some(ContaminationSweep {
                epsilons: c.epsilons,
                zs: c.zs,
            })
        }
    };
    let consistency = match raw.consistency {
        None => None,
        Some(c) => {
            if c.n_list.is_empty() || c.n_list.contains(&0) {
                return Err(Error::InvalidInput(
                    "consistency n_list must be nonempty with positive sizes".into(),
                ));
            }
            Some(c.n_list)
        }
    };
    if contamination.is_none() && consistency.is_none() {
        return Err(Error::InvalidInput(
            "config needs a contamination or consistency section".into(),
        ));
    }
    Ok(ExperimentConfig {
        spec,
        base,
        n: raw.n,
        replications: raw.replications,
        seed: raw.seed,
        contamination,
        consistency,
        echo,
    })
}

/// Draws `replications` independent n-samples from `sampler`, evaluates the
/// measure on each empirical quantile, and returns the law of the values.
/// Replication r uses the derived stream seed splitmix64(seed xor r); under
/// a fixed seed the result is bit-identical across runs, and two samplers
/// compared under the same seed share uniform draws.
fn law_of(
    spec: &RiskMeasureSpec,
    sampler: &QuantileFn,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    let mut values = Vec::with_capacity(replications);
    let mut first_error: Option<Error> = None;
    for r in 0..replications {
        let mut rng = replication_rng(seed, r);
        let mut rep = || -> Result<f64> {
            let mut samples = Vec::with_capacity(n);
            for _ in 0..n {
                samples.push(draw(sampler, &mut rng)?);
            }
            let emp = QuantileFn::empirical(EmpiricalDistribution::from_samples(&samples)?);
            eval(spec, EvalInput::Quantile(&emp))
        };
        match rep() {
            Ok(v) => values.push(v),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    if values.len() * 10 < replications * 9 {
        let failed = replications - values.len();
        let detail = first_error.expect("at least one replication failed");
        return Err(Error::ExperimentFailed(format!(
            "{failed} of {replications} replications failed; first error: {detail}"
        )));
    }
    EmpiricalDistribution::from_samples(&values)
}

/// Law of the estimator over the configured base sampler.
pub fn estimator_law(cfg: &ExperimentConfig) -> Result<EmpiricalDistribution> {
    law_of(
        &cfg.spec,
        cfg.base.quantile_fn(),
        cfg.n,
        cfg.replications,
        cfg.seed,
    )
}

/// One contamination point of a robustness sweep. Quantile summaries are of
/// the contaminated estimator law.
#[derive(Debug, Clone)]
pub struct RobustnessRow {
    pub z: f64,
    pub epsilon: f64,
    pub d_p: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Distance profile of estimator laws under the contamination sweep.
#[derive(Debug, Clone)]
pub struct RobustnessReport {
    pub base_median: f64,
    pub base_q05: f64,
    pub base_q95: f64,
    pub rows: Vec<RobustnessRow>,
}

fn law_summary(law: &EmpiricalDistribution) -> Result<(f64, f64, f64)> {
    Ok((
        law.quantile(0.5)?,
        law.quantile(0.05)?,
        law.quantile(0.95)?,
    ))
}

/// Sweeps the contamination grid, comparing the perturbed estimator law
/// against the base law replication-by-replication under shared seeds.
pub fn robustness_experiment(cfg: &ExperimentConfig) -> Result<RobustnessReport> {
    let sweep = cfg.contamination.as_ref().ok_or_else(|| {
        Error::InvalidInput("config has no contamination sweep".into())
    })?;
    let base_law = estimator_law(cfg)?;
    let (base_median, base_q05, base_q95) = law_summary(&base_law)?;
    let mut rows = Vec::with_capacity(sweep.epsilons.len() * sweep.zs.len());
    for &epsilon in &sweep.epsilons {
        for &z in &sweep.zs {
            let tilde = contaminate_quantile(
                cfg.base.quantile_fn(),
                &ContaminationSpec { z, epsilon },
            )?;
            let law = law_of(&cfg.spec, &tilde, cfg.n, cfg.replications, cfg.seed)?;
            let d_p = levy_prokhorov(&base_law, &law, LP_TOL)?;
            let (median, q05, q95) = law_summary(&law)?;
            rows.push(RobustnessRow {
                z,
                epsilon,
                d_p,
                median,
                q05,
                q95,
            });
        }
    }
    Ok(RobustnessReport {
        base_median,
        base_q05,
        base_q95,
        rows,
    })
}

/// Median estimation error at one sample size.
#[derive(Debug, Clone)]
pub struct ConsistencyPoint {
    pub n: usize,
    pub median_abs_error: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

/// Median |estimate - exact| per sample size, against the exact value of
/// the measure on the base law's quantile function.
pub fn consistency_curve(
    spec: &RiskMeasureSpec,
    base: &PiecewiseBase,
    n_list: &[usize],
    replications: usize,
    seed: u64,
) -> Result<Vec<ConsistencyPoint>> {
    if n_list.is_empty() || replications == 0 {
        return Err(Error::InvalidInput(
            "consistency curve needs sample sizes and replications".into(),
        ));
    }
    let exact = eval(spec, EvalInput::Quantile(base.quantile_fn()))?;
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(Error::InvalidInput("sample size 0".into()));
        }
        let law = law_of(spec, base.quantile_fn(), n, replications, seed)?;
        let mut errors: Vec<f64> = law.samples().iter().map(|v| (v - exact).abs()).collect();
        errors.sort_by(f64::total_cmp);
        out.push(ConsistencyPoint {
            n,
            median_abs_error: median(&errors),
        });
    }
    Ok(out)
}

/// Outcome of the exact weak-continuity check on a finite penalty family.
#[derive(Debug, Clone)]
pub struct WeakContinuityReport {
    /// Smallest support infimum over the family's measures.
    pub delta_star: f64,
    /// Whether every measure keeps mass away from 0.
    pub robust: bool,
}

/// Decides whether every measure in the family puts zero mass on some
/// interval (0, delta). A measure with no support at all constrains
/// nothing and counts as infimum 1.
pub fn weak_continuity_condition(fam: &PenaltyFamily) -> WeakContinuityReport {
    let delta_star = fam
        .entries()
        .iter()
        .map(|e| e.measure().inf_support().unwrap_or(1.0))
        .fold(1.0_f64, f64::min);
    WeakContinuityReport {
        delta_star,
        robust: delta_star > 0.0,
    }
}

/// Profile of sup over the penalty-capped sub-family of the mass on
/// (0, delta), over a delta grid.
#[derive(Debug, Clone)]
pub struct LebesgueProfile {
    pub points: Vec<(f64, f64)>,
    /// Whether the profile is below 1e-12 at the smallest grid delta.
    pub converges: bool,
    /// True when no entry satisfies the penalty cap, making the sup vacuous.
    pub vacuous: bool,
}

/// Evaluates sup over entries with penalty <= c of the measure's mass on
/// (0, delta) along `delta_grid`.
pub fn lebesgue_condition(
    fam: &PenaltyFamily,
    c: f64,
    delta_grid: &[f64],
) -> Result<LebesgueProfile> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::DomainError(format!(
            "penalty cap {c} must be a finite nonnegative number"
        )));
    }
    if delta_grid.is_empty() {
        return Err(Error::InvalidInput("empty delta grid".into()));
    }
    for pair in delta_grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidInput(
                "delta grid must be strictly increasing".into(),
            ));
        }
    }
    for &d in delta_grid {
        if !(0.0 < d && d < 1.0) {
            return Err(Error::DomainError(format!("delta {d} outside (0, 1)")));
        }
    }
    let capped: Vec<_> = fam
        .entries()
        .iter()
        .filter(|e| e.penalty() <= c)
        .collect();
    let vacuous = capped.is_empty();
    let points: Vec<(f64, f64)> = delta_grid
        .iter()
        .map(|&d| {
            let sup = capped
                .iter()
                .map(|e| e.measure().mass_below(d))
                .fold(0.0_f64, f64::max);
            (d, sup)
        })
        .collect();
    let converges = points[0].1 <= 1e-12;
    Ok(LebesgueProfile {
        points,
        converges,
        vacuous,
    })
}

/// Reads the LOSSRISK_THREADS cap. Execution is sequential either way (so
/// reports never depend on scheduling); the cap is validated and echoed
/// into report headers.
pub fn thread_cap() -> Result<usize> {
    match std::env::var("LOSSRISK_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(1),
        Err(e) => Err(Error::InvalidInput(format!("LOSSRISK_THREADS: {e}"))),
        Ok(s) => match s.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(Error::InvalidInput(format!(
                "LOSSRISK_THREADS must be a positive integer, got {s:?}"
            ))),
        },
    }
}
