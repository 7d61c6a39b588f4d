//! Truncation at the representation level: pushing representation mass
//! below delta onto an atom at delta, truncating penalty families, and the
//! alternative renormalizing truncation.
//!
//! Evaluating a measure on the truncated quantile G(z v delta) is the
//! definitional route and lives in `measures`. This module provides the
//! equivalent representation route and the check that both agree.

use crate::dist::QuantileFn;
use crate::error::{Error, Result};
use crate::measures::{
    eval, eval_general_fenchel, EvalInput, MeasureOn01, PenaltyEntry, PenaltyFamily,
    RiskMeasureSpec, Segment, SpectralDensity,
};

/// Structural tolerance when deciding that two truncated measures are the
/// same element of the family.
const MERGE_TOL: f64 = 1e-12;

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::DomainError(format!(
            "truncation level {delta} outside (0,1)"
        )));
    }
    Ok(())
}

/// Pushes the density mass of `phi` below `delta` onto an atom at `delta`,
/// keeping the density above. Total mass is preserved.
pub fn pi_map(phi: &SpectralDensity, delta: f64) -> Result<MeasureOn01> {
    check_delta(delta)?;
    let atom_mass = phi.integral_below(delta);
    let segments: Vec<Segment> = phi
        .segments()
        .iter()
        .filter(|s| s.b > delta)
        .map(|s| Segment { a: s.a.max(delta), b: s.b, height: s.height })
        .collect();
    MeasureOn01::new(vec![(delta, atom_mass)], segments)
}

/// The same push-forward for a general measure: atoms at or below `delta`
/// and density mass below it merge into the atom at `delta`.
pub fn pi_map_measure(m: &MeasureOn01, delta: f64) -> Result<MeasureOn01> {
    check_delta(delta)?;
    let mut atom_mass = 0.0;
    let mut atoms = Vec::new();
    for &(z, mass) in m.atoms() {
        if z <= delta {
            atom_mass += mass;
        } else {
            atoms.push((z, mass));
        }
    }
    let mut segments = Vec::new();
    for s in m.segments() {
        atom_mass += s.height * (s.b.min(delta) - s.a).max(0.0);
        if s.b > delta {
            segments.push(Segment { a: s.a.max(delta), b: s.b, height: s.height });
        }
    }
    atoms.insert(0, (delta, atom_mass));
    MeasureOn01::new(atoms, segments)
}

/// A penalty family whose every measure has no mass below `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFamily {
    delta: f64,
    family: PenaltyFamily,
}

impl TruncatedFamily {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn family(&self) -> &PenaltyFamily {
        &self.family
    }
}

/// Applies the push-forward entrywise. Entries whose truncated measures
/// coincide merge into one, keeping the smallest penalty: the finite
/// realization of the infimum over the preimage.
pub fn truncate_family(fam: &PenaltyFamily, delta: f64) -> Result<TruncatedFamily> {
    check_delta(delta)?;
    let mut out: Vec<PenaltyEntry> = Vec::new();
    for e in fam.entries() {
        let m = pi_map_measure(e.measure(), delta)?;
        match out.iter_mut().find(|x| x.measure().approx_eq(&m, MERGE_TOL)) {
            Some(existing) => {
                if e.penalty() < existing.penalty() {
                    *existing = PenaltyEntry::new(m, e.penalty())?;
                }
            }
            None => out.push(PenaltyEntry::new(m, e.penalty())?),
        }
    }
    Ok(TruncatedFamily { delta, family: PenaltyFamily::new(out)? })
}

/// The renormalized weight phi restricted to (delta, 1). It integrates to 1
/// but is no admissible density: it vanishes below delta and then jumps up.
#[derive(Debug, Clone, PartialEq)]
pub struct AltWeight {
    segments: Vec<Segment>,
    integral: f64,
    in_psi: bool,
}

impl AltWeight {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// Whether the weight still lies in the admissible nonincreasing class.
    /// False whenever any mass sat below delta.
    pub fn in_psi(&self) -> bool {
        self.in_psi
    }
}

/// phi(z) 1_(delta,1)(z) / int_delta^1 phi.
pub fn alt_truncate(phi: &SpectralDensity, delta: f64) -> Result<AltWeight> {
    check_delta(delta)?;
    let tail = phi.integral_above(delta);
    if tail <= 0.0 {
        return Err(Error::DegenerateInput(format!(
            "no density mass above truncation level {delta}"
        )));
    }
    let segments: Vec<Segment> = phi
        .segments()
        .iter()
        .filter(|s| s.b > delta)
        .map(|s| Segment {
            a: s.a.max(delta),
            b: s.b,
            height: s.height / tail,
        })
        .collect();
    let integral: f64 = segments.iter().map(Segment::mass).sum();
    Ok(AltWeight {
        segments,
        integral,
        in_psi: phi.integral_below(delta) == 0.0,
    })
}

/// Checks that the definitional truncation (inner measure on G(z v delta))
/// agrees with the representation route (atom-plus-density family on the
/// original quantile) within `tol`. The two sides share no evaluation path
/// above the piecewise integration primitive.
pub fn truncated_equals_representation(
    g: &QuantileFn,
    phi: &SpectralDensity,
    delta: f64,
    tol: f64,
) -> Result<bool> {
    let spec = RiskMeasureSpec::Truncated {
        inner: Box::new(RiskMeasureSpec::Spectral(phi.clone())),
        delta,
    };
    let definitional = eval(&spec, EvalInput::Quantile(g))?;
    let fam = truncate_family(&PenaltyFamily::from_spectral(phi)?, delta)?;
    let representation = eval_general_fenchel(g, fam.family())?;
    Ok((definitional - representation).abs() <= tol)
}
