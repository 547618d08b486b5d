use impactreg_core::oracle::{CovariateLaw, Quadratic};
use impactreg_core::{SandwichFlavor, TestReference};

use crate::error::{CliError, CliResult};

pub fn parse_flavor(s: &str) -> CliResult<SandwichFlavor> {
    match s.to_ascii_lowercase().as_str() {
        "hc0" => Ok(SandwichFlavor::HC0),
        "hc1" => Ok(SandwichFlavor::HC1),
        _ => Err(CliError::data(format!("unknown sandwich flavor `{s}` (hc0, hc1)"))),
    }
}

pub fn parse_reference(s: &str) -> CliResult<TestReference> {
    match s.to_ascii_lowercase().as_str() {
        "t" | "student_t" => Ok(TestReference::StudentT),
        "normal" | "z" => Ok(TestReference::Normal),
        _ => Err(CliError::data(format!("unknown test reference `{s}` (t, normal)"))),
    }
}

fn numbers(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::data(format!("bad number `{p}` in {what}")))
        })
        .collect()
}

/// `normal(mu,sigma)` or `exp(rate)`.
pub fn parse_dist(s: &str) -> CliResult<CovariateLaw> {
    let bad = || CliError::data(format!("cannot parse distribution `{s}`"));
    let s = s.trim();
    let open = s.find('(').ok_or_else(bad)?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let args = numbers(inner, "distribution")?;
    let law = match (&s[..open], args.as_slice()) {
        ("normal", [mean, sd]) => CovariateLaw::Normal { mean: *mean, sd: *sd },
        ("exp", [rate]) => CovariateLaw::Exponential { rate: *rate },
        _ => return Err(bad()),
    };
    law.validate()?;
    Ok(law)
}

/// `quadratic:c0,c1,c2`.
pub fn parse_g(s: &str) -> CliResult<Quadratic> {
    let rest = s
        .trim()
        .strip_prefix("quadratic:")
        .ok_or_else(|| CliError::data(format!("g must look like quadratic:c0,c1,c2, got `{s}`")))?;
    match numbers(rest, "g")?.as_slice() {
        [c0, c1, c2] => Ok(Quadratic { c0: *c0, c1: *c1, c2: *c2 }),
        _ => Err(CliError::data(format!("g needs three coefficients, got `{s}`"))),
    }
}

/// `lo:hi:steps`, with `steps ≥ 2` grid points.
pub fn parse_grid(s: &str) -> CliResult<(f64, f64, usize)> {
    let bad = || CliError::data(format!("grid must look like lo:hi:steps, got `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let steps: usize = steps.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && steps >= 2) {
        return Err(bad());
    }
    Ok((lo, hi, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distributions() {
        assert_eq!(
            parse_dist("normal(-1, 1)").unwrap(),
            CovariateLaw::Normal { mean: -1.0, sd: 1.0 }
        );
        assert_eq!(parse_dist("exp(0.9)").unwrap(), CovariateLaw::Exponential { rate: 0.9 });
        assert!(parse_dist("exp(-1)").is_err());
        assert!(parse_dist("gamma(1,2)").is_err());
        assert!(parse_dist("normal(0,1").is_err());
    }

    #[test]
    fn g_and_grid() {
        assert_eq!(parse_g("quadratic:1,1,1").unwrap(), Quadratic { c0: 1.0, c1: 1.0, c2: 1.0 });
        assert!(parse_g("cubic:1,1,1,1").is_err());
        assert!(parse_g("quadratic:1,1").is_err());
        assert_eq!(parse_grid("-3:3:61").unwrap(), (-3.0, 3.0, 61));
        assert!(parse_grid("3:-3:61").is_err());
        assert!(parse_grid("0:1:1").is_err());
    }
}
