/// Parses `x`, `x,y,z` or `start:stop:step` (inclusive of `stop`).
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if let Some((start, rest)) = text.split_once(':') {
        let (stop, step) = rest
            .split_once(':')
            .ok_or_else(|| format!("range `{text}` must be start:stop:step"))?;
        let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
        if step <= 0.0 || stop < start {
            return Err(format!("range `{text}` needs step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        if n > 100_000 {
            return Err(format!("range `{text}` has too many points"));
        }
        return Ok((0..=n).map(|i| round12(start + i as f64 * step)).collect());
    }
    let values = text.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
    Ok(values)
}

fn number(tok: &str) -> Result<f64, String> {
    let tok = tok.trim();
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{tok}` is not a number")),
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse_grid("0.2").unwrap(), vec![0.2]);
        assert_eq!(parse_grid("1, 2,5").unwrap(), vec![1.0, 2.0, 5.0]);
        let r = parse_grid("0.1:1.0:0.1").unwrap();
        assert_eq!(r.len(), 10);
        assert_eq!(r[2], 0.3);
        assert_eq!(r[9], 1.0);
    }

    #[test]
    fn rejects() {
        assert!(parse_grid("").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("nan").is_err());
    }
}
