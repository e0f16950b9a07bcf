//! Grammar: `linf` | `l1` | `lp:<p>` | `topk:<k>` | `ordered:<w1>,<w2>,...` |
//! `orlicz:pow:<p>`. `lp:inf` is accepted and folds to `linf`.

use super::{Generator, NormKind};
use crate::error::{Error, Result};

fn expected(pos: usize, what: &str) -> Error {
    Error::Parse {
        pos,
        expected: what.to_string(),
    }
}

fn parse_real(s: &str, pos: usize) -> Result<f64> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| expected(pos, "a real number"))
}

/// Parses a norm family; the dimension is supplied separately.
pub fn parse_norm_kind(input: &str) -> Result<NormKind> {
    let s = input.trim();
    let offset = input.len() - input.trim_start().len();
    let (head, rest) = match s.find(':') {
        Some(i) => (&s[..i], Some((&s[i + 1..], offset + i + 1))),
        None => (s, None),
    };
    let need_arg = |rest: Option<(&str, usize)>, what: &str| -> Result<(String, usize)> {
        match rest {
            Some((r, p)) if !r.is_empty() => Ok((r.to_string(), p)),
            Some((_, p)) => Err(expected(p, what)),
            None => Err(expected(offset + head.len(), &format!("':' followed by {what}"))),
        }
    };
    match head {
        "linf" | "l1" if rest.is_some() => Err(expected(offset + head.len(), "end of input")),
        "linf" => Ok(NormKind::LInf),
        "l1" => Ok(NormKind::Lp(1.0)),
        "lp" => {
            let (arg, p) = need_arg(rest, "p ≥ 1")?;
            let v = parse_real(&arg, p)?;
            if v < 1.0 {
                return Err(expected(p, "p ≥ 1"));
            }
            Ok(if v.is_infinite() { NormKind::LInf } else { NormKind::Lp(v) })
        }
        "topk" => {
            let (arg, p) = need_arg(rest, "a positive integer k")?;
            let k: usize = arg
                .parse()
                .ok()
                .filter(|k| *k >= 1)
                .ok_or_else(|| expected(p, "a positive integer k"))?;
            Ok(NormKind::TopK(k))
        }
        "ordered" => {
            let (arg, p) = need_arg(rest, "comma-separated weights")?;
            let mut weights = Vec::new();
            let mut pos = p;
            for part in arg.split(',') {
                weights.push(parse_real(part.trim(), pos)?);
                pos += part.len() + 1;
            }
            Ok(NormKind::Ordered(weights))
        }
        "orlicz" => {
            let (arg, p) = need_arg(rest, "'pow:<p>'")?;
            let Some(exp) = arg.strip_prefix("pow:") else {
                return Err(expected(p, "'pow:<p>'"));
            };
            let ppos = p + 4;
            if exp.is_empty() {
                return Err(expected(ppos, "p ≥ 1"));
            }
            let v = parse_real(exp, ppos)?;
            if !(v >= 1.0 && v.is_finite()) {
                return Err(expected(ppos, "finite p ≥ 1"));
            }
            Ok(NormKind::Orlicz(Generator::Pow(v)))
        }
        _ => Err(expected(
            offset,
            "one of linf, l1, lp, topk, ordered, orlicz",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_pos(s: &str) -> usize {
        match parse_norm_kind(s) {
            Err(Error::Parse { pos, .. }) => pos,
            other => panic!("expected parse error for {s:?}, got {other:?}"),
        }
    }

    #[test]
    fn accepts_grammar() {
        assert!(matches!(parse_norm_kind("linf").unwrap(), NormKind::LInf));
        assert!(matches!(parse_norm_kind("l1").unwrap(), NormKind::Lp(p) if p == 1.0));
        assert!(matches!(parse_norm_kind("lp:2.5").unwrap(), NormKind::Lp(p) if p == 2.5));
        assert!(matches!(parse_norm_kind("lp:inf").unwrap(), NormKind::LInf));
        assert!(matches!(parse_norm_kind("topk:3").unwrap(), NormKind::TopK(3)));
        match parse_norm_kind("ordered:2,1,0.5").unwrap() {
            NormKind::Ordered(w) => assert_eq!(w, vec![2.0, 1.0, 0.5]),
            _ => unreachable!(),
        }
        assert!(matches!(
            parse_norm_kind("orlicz:pow:3").unwrap(),
            NormKind::Orlicz(Generator::Pow(p)) if p == 3.0
        ));
    }

    #[test]
    fn reports_positions() {
        assert_eq!(err_pos("lq:2"), 0);
        assert_eq!(err_pos("lp:abc"), 3);
        assert_eq!(err_pos("lp"), 2);
        assert_eq!(err_pos("topk:0"), 5);
        assert_eq!(err_pos("ordered:1,x"), 10);
        assert_eq!(err_pos("orlicz:exp:2"), 7);
        assert_eq!(err_pos("orlicz:pow:"), 11);
        assert_eq!(err_pos("linf:3"), 4);
        assert_eq!(err_pos("lp:0.5"), 3);
    }
}
