/// Parses `a,b,c` or the inclusive range `lo:step:hi`.
pub fn parse_targets(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, step, hi] = parts[..] else {
            return Err(format!("range must be LO:STEP:HI, got {spec:?}"));
        };
        let (lo, step, hi) = (number(lo)?, number(step)?, number(hi)?);
        if !(step > 0.0) || hi < lo {
            return Err(format!("range {spec:?} needs STEP > 0 and HI >= LO"));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|k| lo + k as f64 * step).collect());
    }
    list(spec)
}

/// Parses a comma-separated list of numbers.
pub fn list(spec: &str) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = spec.split(',').map(number).collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(values)
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not a finite number: {s:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive() {
        let z = parse_targets("1.1:0.05:1.5").unwrap();
        assert_eq!(z.len(), 9);
        assert_eq!(z[0], 1.1);
        assert!((z[8] - 1.5).abs() < 1e-12);
        assert_eq!(parse_targets("2:1:2").unwrap(), vec![2.0]);
    }

    #[test]
    fn lists_and_errors() {
        assert_eq!(parse_targets("1.2, 1.3").unwrap(), vec![1.2, 1.3]);
        assert!(parse_targets("1:0:2").is_err());
        assert!(parse_targets("1:2").is_err());
        assert!(parse_targets("a,b").is_err());
        assert!(parse_targets("nan").is_err());
    }
}
