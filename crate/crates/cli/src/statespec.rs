//! Parsers for state, angle and support arguments.

use polybell_core::bellexpr::SettingMultiset;
use polybell_core::math::C64;
use polybell_core::quantumeval::{AnglePair, StateFamily};
use polybell_core::symstate::{make_dicke, superpose, SymmetricState};

/// `dicke:N:e`, or a weighted sum such as `0.99*dicke:4:1+0.14*dicke:4:4`;
/// the result is normalized.
pub fn parse_state(spec: &str) -> Result<SymmetricState, String> {
    let spec: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    if spec.is_empty() {
        return Err("empty state spec".into());
    }
    let mut terms: Vec<(f64, usize, usize)> = Vec::new();
    let mut rest = spec.as_str();
    while !rest.is_empty() {
        let (sign, body) = match rest.as_bytes()[0] {
            b'+' if !terms.is_empty() => (1.0, &rest[1..]),
            b'-' => (-1.0, &rest[1..]),
            _ if terms.is_empty() => (1.0, rest),
            _ => return Err(format!("expected '+' or '-' before '{rest}'")),
        };
        if body.is_empty() {
            return Err("dangling sign in state spec".into());
        }
        let bytes = body.as_bytes();
        // a sign right after an exponent marker belongs to the number
        let end = (1..bytes.len())
            .find(|&i| {
                matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'*')
            })
            .unwrap_or(bytes.len());
        let (term, tail) = body.split_at(end);
        let (weight, ket) = match term.split_once('*') {
            Some((w, k)) => (
                w.parse::<f64>().map_err(|_| format!("bad weight '{w}'"))?,
                k,
            ),
            None => (1.0, term),
        };
        let (n, e) = parse_dicke(ket)?;
        terms.push((sign * weight, n, e));
        rest = tail;
    }
    let n = terms[0].1;
    if terms.iter().any(|t| t.1 != n) {
        return Err("all kets in a superposition need the same qubit count".into());
    }
    let kets: Vec<SymmetricState> = terms
        .iter()
        .map(|&(_, n, e)| make_dicke(n, e).map_err(|err| err.to_string()))
        .collect::<Result<_, _>>()?;
    let weighted: Vec<(C64, &SymmetricState)> = terms
        .iter()
        .zip(&kets)
        .map(|(t, k)| (C64::new(t.0, 0.0), k))
        .collect();
    superpose(&weighted).map_err(|err| err.to_string())
}

fn parse_dicke(ket: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = ket.split(':').collect();
    match parts.as_slice() {
        ["dicke", n, e] => {
            let n = n
                .parse()
                .map_err(|_| format!("bad qubit count in '{ket}'"))?;
            let e = e
                .parse()
                .map_err(|_| format!("bad excitation count in '{ket}'"))?;
            Ok((n, e))
        }
        _ => Err(format!("expected dicke:N:e, got '{ket}'")),
    }
}

/// `pair:N:e1:e2` for `cos θ |D_N^{e1}⟩ + sin θ |D_N^{e2}⟩`.
pub fn parse_family(spec: &str) -> Result<StateFamily, String> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    match parts.as_slice() {
        ["pair", n, a, b] => {
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| format!("bad number '{s}' in '{spec}'"))
            };
            let (n, first, second) = (num(n)?, num(a)?, num(b)?);
            if first > n || second > n || first == second {
                return Err(format!("invalid Dicke pair in '{spec}'"));
            }
            Ok(StateFamily::DickePair { n, first, second })
        }
        _ => Err(format!("expected pair:N:e1:e2, got '{spec}'")),
    }
}

pub fn parse_angles(spec: &str) -> Result<AnglePair, String> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => {
            let a: f64 = a.parse().map_err(|_| format!("bad angle '{a}'"))?;
            let b: f64 = b.parse().map_err(|_| format!("bad angle '{b}'"))?;
            AnglePair::new(a, b).map_err(|e| e.to_string())
        }
        _ => Err(format!("expected two comma-separated angles, got '{spec}'")),
    }
}

/// `all`, `max-order:K`, or a comma-separated list of setting strings such
/// as `11,22,1112`.
pub fn parse_support(spec: &str, parties: usize) -> Result<Vec<SettingMultiset>, String> {
    let spec = spec.trim();
    if spec == "all" {
        return Ok(SettingMultiset::all_up_to(parties));
    }
    if let Some(k) = spec.strip_prefix("max-order:") {
        let k: usize = k.parse().map_err(|_| format!("bad order '{k}'"))?;
        if k > parties {
            return Err(format!("order {k} exceeds {parties} parties"));
        }
        return Ok(SettingMultiset::all_up_to(k));
    }
    spec.split(',')
        .map(|item| {
            let digits: Vec<u8> = item
                .trim()
                .chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as u8)
                        .ok_or_else(|| format!("bad setting '{c}'"))
                })
                .collect::<Result<_, _>>()?;
            if digits.is_empty() {
                return Err("empty multiset in support".into());
            }
            SettingMultiset::from_settings(&digits).map_err(|e| e.to_string())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn states() {
        let s = parse_state("dicke:4:1").unwrap();
        assert_eq!(s, make_dicke(4, 1).unwrap());
        let s = parse_state("0.6*dicke:3:0 - 0.8*dicke:3:3").unwrap();
        assert!((s.amplitude(0).re - 0.6).abs() < 1e-15 && (s.amplitude(3).re + 0.8).abs() < 1e-15);
        let s = parse_state("3*dicke:2:0+4*dicke:2:2").unwrap();
        assert!((s.amplitude(2).re - 0.8).abs() < 1e-15);
        let s = parse_state("1e-1*dicke:2:0+dicke:2:1").unwrap();
        assert!(s.amplitude(0).re > 0.0);
        for bad in [
            "",
            "dicke:4",
            "ghz:4",
            "dicke:3:4",
            "dicke:3:0+dicke:4:0",
            "x*dicke:2:0",
            "dicke:2:0 dicke:2:1",
            "dicke:2:0+",
        ] {
            assert!(parse_state(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn supports() {
        assert_eq!(parse_support("all", 3).unwrap().len(), 9);
        assert_eq!(parse_support("max-order:2", 5).unwrap().len(), 5);
        let s = parse_support("11, 22,1112", 5).unwrap();
        assert_eq!(s[2], SettingMultiset::new(3, 1));
        assert!(parse_support("13", 3).is_err());
        assert!(parse_support("max-order:4", 3).is_err());
    }

    #[test]
    fn angles_and_families() {
        let a = parse_angles("2.640, 0.986").unwrap();
        assert_eq!((a.phi1, a.phi2), (2.640, 0.986));
        assert!(parse_angles("1").is_err());
        assert!(parse_family("pair:4:1:4").is_ok());
        assert!(parse_family("pair:4:1:1").is_err());
        assert!(parse_family("pair:4:x:1").is_err());
    }
}
