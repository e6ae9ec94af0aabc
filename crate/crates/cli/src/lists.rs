use anyhow::{bail, Context, Result};
use stampede_core::assess::{AssessmentConfig, Method};

/// Comma-separated numbers; `a..b` expands to `a, a+1, ..., b`.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let a: f64 = a
                .trim()
                .parse()
                .with_context(|| format!("bad range start in `{item}`"))?;
            let b: f64 = b.trim().parse().with_context(|| format!("bad range end in `{item}`"))?;
            if !(a.is_finite() && b.is_finite()) || b < a {
                bail!("empty or invalid range `{item}`");
            }
            let mut v = a;
            while v <= b + 1e-9 {
                out.push(v);
                v += 1.0;
            }
        } else {
            out.push(item.parse().with_context(|| format!("not a number: `{item}`"))?);
        }
    }
    if out.is_empty() {
        bail!("empty list");
    }
    Ok(out)
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let a: usize = a
                .trim()
                .parse()
                .with_context(|| format!("bad range start in `{item}`"))?;
            let b: usize = b.trim().parse().with_context(|| format!("bad range end in `{item}`"))?;
            if b < a {
                bail!("empty range `{item}`");
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().with_context(|| format!("not a count: `{item}`"))?);
        }
    }
    if out.is_empty() {
        bail!("empty list");
    }
    Ok(out)
}

/// `method[:R]`, e.g. `pressure:2`, `force`, `density:1.5`. R defaults to 1.
pub fn parse_method(s: &str) -> Result<AssessmentConfig> {
    let (name, radius) = match s.split_once(':') {
        Some((n, r)) => (
            n,
            r.trim()
                .parse::<f64>()
                .with_context(|| format!("bad radius in `{s}`"))?,
        ),
        None => (s, 1.0),
    };
    let method: Method = name.trim().parse()?;
    let cfg = AssessmentConfig::new(method, radius);
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_methods(s: &str) -> Result<Vec<AssessmentConfig>> {
    let out: Vec<_> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(parse_method)
        .collect::<Result<_>>()?;
    if out.is_empty() {
        bail!("no methods given");
    }
    Ok(out)
}

pub const DEFAULT_METHODS: &str = "pressure:1,pressure:2,pressure:3,pressure:4,force,density:1,density:1.5";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_f64_list("0..3").unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(parse_f64_list("0.5, 2,7..8").unwrap(), vec![0.5, 2.0, 7.0, 8.0]);
        assert_eq!(parse_usize_list("1,5..7").unwrap(), vec![1, 5, 6, 7]);
        assert!(parse_f64_list("3..1").is_err());
        assert!(parse_f64_list("").is_err());
        assert!(parse_usize_list("x").is_err());
    }

    #[test]
    fn methods() {
        let m = parse_methods(DEFAULT_METHODS).unwrap();
        let labels: Vec<_> = m.iter().map(|c| c.label()).collect();
        assert_eq!(
            labels,
            [
                "pressure_R1",
                "pressure_R2",
                "pressure_R3",
                "pressure_R4",
                "force",
                "density_R1",
                "density_R1.5"
            ]
        );
        assert!(parse_method("pressure:0").is_err());
        assert!(parse_method("speed:1").is_err());
    }
}
