use anyhow::{bail, Context, Result};

/// Parses `start:end:step` (a point less than half a step past `end` is snapped to it)
/// or a comma-separated list of values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        bail!("empty grid specification");
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!("grid `{spec}` must have the form start:end:step");
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .with_context(|| format!("grid {what} `{s}` is not a number"))?;
            if !v.is_finite() {
                bail!("grid {what} `{s}` is not finite");
            }
            Ok(v)
        };
        let start = parse(parts[0], "start")?;
        let end = parse(parts[1], "end")?;
        let step = parse(parts[2], "step")?;
        if step <= 0.0 {
            bail!("grid step must be positive, got {step}");
        }
        if end < start {
            bail!("grid end {end} is below start {start}");
        }
        let span = (end - start) / step;
        if span > 100_000.0 {
            bail!("grid `{spec}` has more than 100000 points");
        }
        let count = (span + 0.5 - 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| round12((start + i as f64 * step).min(end)))
            .collect())
    } else {
        spec.split(',')
            .map(|s| {
                let v: f64 = s
                    .trim()
                    .parse()
                    .with_context(|| format!("grid value `{s}` is not a number"))?;
                if !v.is_finite() {
                    bail!("grid value `{s}` is not finite");
                }
                Ok(v)
            })
            .collect()
    }
}

/// Comma-separated list of qubit counts, or a `lo-hi` range.
pub fn parse_n_list(spec: &str) -> Result<Vec<usize>> {
    let spec = spec.trim();
    if spec.is_empty() {
        bail!("empty --n list");
    }
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if let Some((lo, hi)) = part.split_once('-') {
            let lo: usize = lo.trim().parse().with_context(|| format!("bad n range `{part}`"))?;
            let hi: usize = hi.trim().parse().with_context(|| format!("bad n range `{part}`"))?;
            if hi < lo {
                bail!("n range `{part}` is empty");
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().with_context(|| format!("bad qubit count `{part}`"))?);
        }
    }
    Ok(out)
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}
