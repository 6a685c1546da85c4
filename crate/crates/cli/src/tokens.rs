//! Numeric and index-set argument tokens.
//!
//! Reals accept plain decimals and the symbolic forms `sqrt6/96`, `9sqrt2/8`,
//! `-3*sqrt(2)`, `1/3`, evaluated in full double precision.

use cdt_core::problem::IndexSet;

/// `[coef][*]sqrt[(]N[)]` or a plain decimal.
fn parse_factor(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty number".into());
    }
    let Some(pos) = s.find("sqrt") else {
        return s.parse::<f64>().map_err(|_| format!("not a number: `{s}`"));
    };
    let coef = s[..pos].trim_end_matches('*').trim();
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| format!("bad coefficient in `{s}`"))?,
    };
    let arg = s[pos + 4..].trim();
    let arg = arg
        .strip_prefix('(')
        .and_then(|a| a.strip_suffix(')'))
        .unwrap_or(arg);
    let radicand = arg.parse::<f64>().map_err(|_| format!("bad radicand in `{s}`"))?;
    if radicand < 0.0 {
        return Err(format!("negative radicand in `{s}`"));
    }
    Ok(coef * radicand.sqrt())
}

pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let den = parse_factor(den)?;
            if den == 0.0 {
                return Err(format!("division by zero in `{s}`"));
            }
            parse_factor(num)? / den
        }
        None => parse_factor(s)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: `{s}`"))
    }
}

/// `1,2`, `{1,2}`, `none`, `{}` or the empty string.
pub fn parse_index_set(s: &str) -> Result<IndexSet, String> {
    let s = s.trim();
    let inner = s.strip_prefix('{').and_then(|t| t.strip_suffix('}')).unwrap_or(s);
    if inner.trim().is_empty() || inner.trim() == "none" {
        return Ok(IndexSet::empty());
    }
    inner
        .split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k),
                _ => Err(format!("bad constraint index `{t}`")),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_reals() {
        assert_eq!(parse_real("sqrt6/96").unwrap(), 6f64.sqrt() / 96.0);
        assert_eq!(parse_real("9sqrt2/8").unwrap(), 9.0 * 2f64.sqrt() / 8.0);
        assert_eq!(parse_real("-3*sqrt(2)").unwrap(), -3.0 * 2f64.sqrt());
        assert_eq!(parse_real("1/4").unwrap(), 0.25);
        assert_eq!(parse_real("-2.5").unwrap(), -2.5);
        assert!(parse_real("sqrt-1").is_err());
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("abc").is_err());
    }

    #[test]
    fn index_sets() {
        assert!(parse_index_set("none").unwrap().is_empty());
        assert!(parse_index_set("{}").unwrap().is_empty());
        let j = parse_index_set("{2, 1}").unwrap();
        assert!(j.contains(1) && j.contains(2) && j.len() == 2);
        assert!(parse_index_set("0").is_err());
        assert!(parse_index_set("x").is_err());
    }
}
