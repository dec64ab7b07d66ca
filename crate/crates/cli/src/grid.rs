//! Parameter grids: comma lists, inclusive ranges `a:b:step`, and repeats.

use anyhow::{bail, Context, Result};

/// Expands every occurrence of a grid flag into one sorted-as-given list.
pub fn floats(flag: &str, raw: &[String]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in raw.iter().flat_map(|r| r.split(',')) {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        out.extend(expand(item).with_context(|| format!("--{flag} {item:?}"))?);
    }
    if out.is_empty() {
        bail!("--{flag}: grid is empty");
    }
    Ok(out)
}

pub fn counts(flag: &str, raw: &[String]) -> Result<Vec<usize>> {
    floats(flag, raw)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                bail!("--{flag}: expected positive integers, got {v}")
            }
        })
        .collect()
}

fn expand(item: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = item.split(':').collect();
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .with_context(|| format!("{s:?} is not a number"))?;
        if !v.is_finite() {
            bail!("{s:?} is not finite");
        }
        Ok(v)
    };
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step <= 0.0 || b < a {
                bail!("range needs start <= stop and a positive step");
            }
            // index-based so that long ranges do not accumulate rounding
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                bail!("range has {count} points");
            }
            Ok((0..count).map(|i| a + i as f64 * step).collect())
        }
        _ => bail!("expected a number or start:stop:step"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn lists_ranges_and_repeats() {
        assert_eq!(floats("t", &strings(&["0.5"])).unwrap(), vec![0.5]);
        assert_eq!(
            floats("t", &strings(&["0,1", "2"])).unwrap(),
            vec![0.0, 1.0, 2.0]
        );
        assert_eq!(
            floats("t", &strings(&["0:1:0.25"])).unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!(floats("t", &strings(&["0.1:0.3:0.1"])).unwrap().len(), 3);
        assert_eq!(counts("n", &strings(&["1:4:1"])).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(floats("t", &[]).is_err());
        assert!(floats("t", &strings(&["x"])).is_err());
        assert!(floats("t", &strings(&["1:0:1"])).is_err());
        assert!(floats("t", &strings(&["0:1:0"])).is_err());
        assert!(floats("t", &strings(&["inf"])).is_err());
        assert!(counts("n", &strings(&["1.5"])).is_err());
        assert!(counts("n", &strings(&["0"])).is_err());
    }
}
