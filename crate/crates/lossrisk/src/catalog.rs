//! Measure catalog: a JSON array of measure descriptions parsed into
//! labeled `RiskMeasureSpec` values for batch evaluation.

use crate::error::{Error, Result};
use crate::measures::{
    LossUtility, MeasureOn01, PenaltyEntry, PenaltyFamily, RiskMeasureSpec, Segment,
    SpectralDensity,
};
use serde_json::Value;

/// Parses a catalog document. Each array element is one measure; an
/// optional "name" field overrides the generated label. Duplicate labels
/// get a "#k" suffix so rows stay addressable.
pub fn parse_catalog(text: &str) -> Result<Vec<(String, RiskMeasureSpec)>> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("catalog parse error: {e}")))?;
    let items = doc
        .as_array()
        .ok_or_else(|| Error::InvalidInput("catalog must be a JSON array".into()))?;
    let mut out: Vec<(String, RiskMeasureSpec)> = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let ctx = format!("catalog[{i}]");
        let spec = parse_spec(item, &ctx)?;
        spec.validate()?;
        let mut label = match item.get("name") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(_) => {
                return Err(Error::InvalidInput(format!(
                    "{ctx}.name: expected nonempty string"
                )))
            }
            None => default_label(&spec),
        };
        let clashes = out.iter().filter(|(l, _)| base_of(l) == label).count();
        if clashes > 0 {
            label = format!("{label}#{}", clashes + 1);
        }
        out.push((label, spec));
    }
    Ok(out)
}

/// Parses a single measure description, as embedded in experiment configs.
/// `ctx` prefixes error messages with the field path.
pub fn parse_measure(value: &Value, ctx: &str) -> Result<RiskMeasureSpec> {
    let spec = parse_spec(value, ctx)?;
    spec.validate()?;
    Ok(spec)
}

fn base_of(label: &str) -> &str {
    match label.rfind('#') {
        Some(k) if label[k + 1..].chars().all(|c| c.is_ascii_digit()) => &label[..k],
        _ => label,
    }
}

/// Generated label for a spec, stable across runs.
pub fn default_label(spec: &RiskMeasureSpec) -> String {
    match spec {
        RiskMeasureSpec::VarLoss { alpha } => format!("var_loss({alpha})"),
        RiskMeasureSpec::Etl { beta } => format!("etl({beta})"),
        RiskMeasureSpec::Spectral(_) => "spectral".into(),
        RiskMeasureSpec::LossCe(LossUtility::Power { p }) => format!("loss_ce(power,{p})"),
        RiskMeasureSpec::LossCe(LossUtility::Exponential { beta }) => {
            format!("loss_ce(exponential,{beta})")
        }
        RiskMeasureSpec::PutPremium => "put_premium".into(),
        RiskMeasureSpec::SpanScenarios => "span".into(),
        RiskMeasureSpec::GeneralFenchel(_) => "general_fenchel".into(),
        RiskMeasureSpec::Truncated { inner, delta } => {
            format!("truncated({},{delta})", default_label(inner))
        }
        RiskMeasureSpec::AltTruncated { delta, .. } => format!("alt_truncated({delta})"),
    }
}

fn parse_spec(value: &Value, ctx: &str) -> Result<RiskMeasureSpec> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::InvalidInput(format!("{ctx}: expected object")))?;
    let variant = obj
        .get("variant")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::InvalidInput(format!("{ctx}.variant: expected string")))?;
    match variant {
        "var_loss" => Ok(RiskMeasureSpec::VarLoss {
            alpha: get_f64(value, "alpha", ctx)?,
        }),
        "etl" => Ok(RiskMeasureSpec::Etl {
            beta: get_f64(value, "beta", ctx)?,
        }),
        "spectral" => Ok(RiskMeasureSpec::Spectral(parse_density(value, ctx)?)),
        "loss_ce" => Ok(RiskMeasureSpec::LossCe(parse_utility(value, ctx)?)),
        "put_premium" => Ok(RiskMeasureSpec::PutPremium),
        "span" => Ok(RiskMeasureSpec::SpanScenarios),
        "general_fenchel" => {
            let entries = get_array(value, "entries", ctx)?;
            let mut parsed = Vec::with_capacity(entries.len());
            for (j, entry) in entries.iter().enumerate() {
                parsed.push(parse_entry(entry, &format!("{ctx}.entries[{j}]"))?);
            }
            Ok(RiskMeasureSpec::GeneralFenchel(PenaltyFamily::new(parsed)?))
        }
        "truncated" => {
            let inner = obj.get("inner").ok_or_else(|| {
                Error::InvalidInput(format!("{ctx}.inner: missing field"))
            })?;
            Ok(RiskMeasureSpec::Truncated {
                inner: Box::new(parse_spec(inner, &format!("{ctx}.inner"))?),
                delta: get_f64(value, "delta", ctx)?,
            })
        }
        "alt_truncated" => Ok(RiskMeasureSpec::AltTruncated {
            phi: parse_density(value, ctx)?,
            delta: get_f64(value, "delta", ctx)?,
        }),
        other => Err(Error::InvalidInput(format!(
            "{ctx}.variant: unknown variant {other:?}"
        ))),
    }
}

fn parse_density(value: &Value, ctx: &str) -> Result<SpectralDensity> {
    let breakpoints = get_f64_array(value, "breakpoints", ctx)?;
    let heights = get_f64_array(value, "heights", ctx)?;
    SpectralDensity::new(breakpoints, heights)
}

fn parse_utility(value: &Value, ctx: &str) -> Result<LossUtility> {
    let kind = value
        .get("utility")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::InvalidInput(format!("{ctx}.utility: expected string")))?;
    match kind {
        "power" => LossUtility::power(get_f64(value, "p", ctx)?),
        "exponential" => LossUtility::exponential(get_f64(value, "beta", ctx)?),
        other => Err(Error::InvalidInput(format!(
            "{ctx}.utility: unknown utility {other:?}"
        ))),
    }
}

fn parse_entry(value: &Value, ctx: &str) -> Result<PenaltyEntry> {
    if !value.is_object() {
        return Err(Error::InvalidInput(format!("{ctx}: expected object")));
    }
    let atoms = match value.get("atoms") {
        None => Vec::new(),
        Some(_) => get_pairs(value, "atoms", ctx)?,
    };
    let segments = match value.get("segments") {
        None => Vec::new(),
        Some(_) => get_triples(value, "segments", ctx)?
            .into_iter()
            .map(|(a, b, height)| Segment { a, b, height })
            .collect(),
    };
    let penalty = get_f64(value, "penalty", ctx)?;
    PenaltyEntry::new(MeasureOn01::new(atoms, segments)?, penalty)
}

fn get_f64(value: &Value, field: &str, ctx: &str) -> Result<f64> {
    value
        .get(field)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::InvalidInput(format!("{ctx}.{field}: expected number")))
}

fn get_array<'a>(value: &'a Value, field: &str, ctx: &str) -> Result<&'a Vec<Value>> {
    value
        .get(field)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidInput(format!("{ctx}.{field}: expected array")))
}

fn get_f64_array(value: &Value, field: &str, ctx: &str) -> Result<Vec<f64>> {
    get_array(value, field, ctx)?
        .iter()
        .enumerate()
        .map(|(j, v)| {
            v.as_f64().ok_or_else(|| {
                Error::InvalidInput(format!("{ctx}.{field}[{j}]: expected number"))
            })
        })
        .collect()
}

fn get_pairs(value: &Value, field: &str, ctx: &str) -> Result<Vec<(f64, f64)>> {
    get_array(value, field, ctx)?
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                Error::InvalidInput(format!("{ctx}.{field}[{j}]: expected [z, mass]"))
            })?;
            match (pair[0].as_f64(), pair[1].as_f64()) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(Error::InvalidInput(format!(
                    "{ctx}.{field}[{j}]: expected numbers"
                ))),
            }
        })
        .collect()
}

fn get_triples(value: &Value, field: &str, ctx: &str) -> Result<Vec<(f64, f64, f64)>> {
    get_array(value, field, ctx)?
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let t = v.as_array().filter(|a| a.len() == 3).ok_or_else(|| {
                Error::InvalidInput(format!("{ctx}.{field}[{j}]: expected [a, b, height]"))
            })?;
            match (t[0].as_f64(), t[1].as_f64(), t[2].as_f64()) {
                (Some(a), Some(b), Some(c)) => Ok((a, b, c)),
                _ => Err(Error::InvalidInput(format!(
                    "{ctx}.{field}[{j}]: expected numbers"
                ))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_variant() {
        let text = r#"[
            {"variant": "var_loss", "alpha": 0.3},
            {"variant": "etl", "beta": 0.05},
            {"variant": "spectral", "breakpoints": [0, 0.2, 1], "heights": [3, 0.5]},
            {"variant": "loss_ce", "utility": "power", "p": 2},
            {"variant": "loss_ce", "utility": "exponential", "beta": 1.0},
            {"variant": "put_premium"},
            {"variant": "span"},
            {"variant": "general_fenchel",
             "entries": [{"atoms": [[0.05, 1.0]], "segments": [], "penalty": 0}]},
            {"variant": "truncated", "delta": 0.01, "inner": {"variant": "etl", "beta": 0.3}},
            {"variant": "alt_truncated", "delta": 0.1,
             "breakpoints": [0, 1], "heights": [1]}
        ]"#;
        let parsed = parse_catalog(text).unwrap();
        assert_eq!(parsed.len(), 10);
        assert_eq!(parsed[0].0, "var_loss(0.3)");
        assert_eq!(parsed[1].0, "etl(0.05)");
        assert_eq!(parsed[3].0, "loss_ce(power,2)");
        assert_eq!(parsed[8].0, "truncated(etl(0.3),0.01)");
        assert_eq!(parsed[9].0, "alt_truncated(0.1)");
    }

    #[test]
    fn name_override_and_collisions() {
        let text = r#"[
            {"variant": "etl", "beta": 0.3, "name": "desk"},
            {"variant": "etl", "beta": 0.3},
            {"variant": "etl", "beta": 0.3}
        ]"#;
        let parsed = parse_catalog(text).unwrap();
        assert_eq!(parsed[0].0, "desk");
        assert_eq!(parsed[1].0, "etl(0.3)");
        assert_eq!(parsed[2].0, "etl(0.3)#2");
    }

    #[test]
    fn errors_name_the_offending_field() {
        let err = parse_catalog(r#"[{"variant": "etl"}]"#).unwrap_err();
        assert!(err.to_string().contains("catalog[0].beta"), "{err}");
        let err = parse_catalog(r#"[{"variant": "warp"}]"#).unwrap_err();
        assert!(err.to_string().contains("unknown variant"), "{err}");
        let err =
            parse_catalog(r#"[{"variant": "general_fenchel", "entries": [{"atoms": [[0.1]]}]}]"#)
                .unwrap_err();
        assert!(err.to_string().contains("entries[0].atoms[0]"), "{err}");
        assert!(parse_catalog("{}").is_err());
        assert!(parse_catalog("not json").is_err());
    }

    #[test]
    fn parameter_validation_applies() {
        let err = parse_catalog(r#"[{"variant": "etl", "beta": 1.5}]"#).unwrap_err();
        assert!(matches!(err, Error::DomainError(_)));
        let err = parse_catalog(
            r#"[{"variant": "truncated", "delta": 0.1,
                 "inner": {"variant": "span"}}]"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }
}
