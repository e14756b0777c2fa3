//! Deterministic text reports with embedded certificates, and their
//! re-checkers. A report can be re-verified later without re-running the
//! construction that produced it: the certificate data is parsed back and
//! each claim is checked directly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;

use almostfree_core::freeness::{
    verify_rewrite, verify_triangular, CertKind, FreeBasisCert, TupleInfo, WitnessCert,
    WitnessConfig,
};
use almostfree_core::shygroup::{
    factorial_product, member_sum, quotient_parts, BranchSet, BranchTuple, Generator, GroupElement,
    Membership, ObstructionReason,
};

use crate::parse::{parse_branch_list, parse_generator, ParseResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn write_branch_set(out: &mut String, label: &str, set: &BranchSet) {
    let items: Vec<String> = set.branches().map(|b| format!("{b}")).collect();
    let _ = writeln!(out, "{label} {}", items.join(","));
}

fn tuple_text(tuple: &BranchTuple) -> String {
    let items: Vec<String> = tuple.entries().iter().map(|b| format!("{b}")).collect();
    items.join(",")
}

fn combo_text(combo: &[(Generator, BigInt)]) -> String {
    if combo.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (g, c)) in combo.iter().enumerate() {
        if i == 0 {
            let _ = write!(out, "{c} {g}");
        } else if c.sign() == num_bigint::Sign::Minus {
            let _ = write!(out, " - {} {g}", -c);
        } else {
            let _ = write!(out, " + {c} {g}");
        }
    }
    out
}

fn parse_combo(text: &str) -> ParseResult<Vec<(Generator, BigInt)>> {
    let e = crate::parse::parse_element(text)?;
    e.terms()
        .map(|(g, q)| {
            if !num_traits::One::is_one(q.denom()) {
                return Err(format!("non-integer coefficient {q}"));
            }
            Ok((g.clone(), q.numer().clone()))
        })
        .collect()
}

/// Serialize a basis certificate: sections TUPLES, SEPARATORS (inline),
/// BASIS-Y1/Y2/Y3, REWRITES, ELIMINATION, each line machine-parsable.
pub fn write_basis_report(cert: &FreeBasisCert) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "REPORT basis v{VERSION}");
    let _ = writeln!(out, "kstar {}", cert.k_star);
    let _ = writeln!(out, "depth {}", cert.depth);
    match &cert.kind {
        CertKind::Countable { set } => {
            let _ = writeln!(out, "kind countable");
            write_branch_set(&mut out, "set", set);
        }
        CertKind::Quotient { base, excluded, .. } => {
            let _ = writeln!(out, "kind quotient");
            write_branch_set(&mut out, "set", base);
            let items: Vec<String> = excluded.iter().map(|b| format!("{b}")).collect();
            let _ = writeln!(out, "exclude {}", items.join(","));
        }
    }
    let _ = writeln!(out, "TUPLES");
    for (t, info) in cert.tuples.iter().enumerate() {
        let mut line = format!("t={t} s={}", info.separator);
        if let Some(m) = info.m_t {
            let _ = write!(line, " m={m}");
            let s_items: Vec<String> = info.s_set.iter().map(|v| v.to_string()).collect();
            let _ = write!(line, " S={}", s_items.join(","));
            let r_items: Vec<String> = info.r_witnesses.iter().map(|v| v.to_string()).collect();
            let _ = write!(line, " r={}", r_items.join(","));
        }
        let _ = writeln!(out, "{line} tuple={}", tuple_text(&info.tuple));
    }
    let _ = writeln!(out, "SEPARATORS");
    for (t, info) in cert.tuples.iter().enumerate() {
        let _ = writeln!(out, "t={t} s={}", info.separator);
    }
    for (label, family) in [
        ("BASIS-Y1", &cert.basis_y1),
        ("BASIS-Y2", &cert.basis_y2),
        ("BASIS-Y3", &cert.basis_y3),
    ] {
        let _ = writeln!(out, "{label}");
        for g in family {
            let _ = writeln!(out, "{g}");
        }
    }
    let _ = writeln!(out, "REWRITES");
    for (g, combo) in &cert.rewrites {
        let _ = writeln!(out, "{g} := {}", combo_text(combo));
    }
    let _ = writeln!(out, "ELIMINATION");
    for (g, t, n) in &cert.elimination {
        let _ = writeln!(out, "{g} @ t={t} n={n}");
    }
    let _ = writeln!(out, "END");
    out
}

/// Parse a basis report back into a certificate skeleton: the basis
/// listings are left empty (membership is decided by the stored predicates)
/// and only the data needed for re-checking is restored.
pub fn parse_basis_report(content: &str) -> ParseResult<FreeBasisCert> {
    let mut lines = content.lines().peekable();
    let header = lines.next().ok_or("empty report")?;
    if !header.starts_with("REPORT basis") {
        return Err("not a basis report".to_string());
    }
    let mut k_star = None;
    let mut depth = None;
    let mut kind_name = None;
    let mut set = BranchSet::default();
    let mut excluded: Vec<almostfree_core::shygroup::Branch> = Vec::new();
    for line in lines.by_ref() {
        if line == "TUPLES" {
            break;
        }
        if let Some(v) = line.strip_prefix("kstar ") {
            k_star = Some(v.parse::<usize>().map_err(|_| "bad kstar")?);
        } else if let Some(v) = line.strip_prefix("depth ") {
            depth = Some(v.parse::<u32>().map_err(|_| "bad depth")?);
        } else if let Some(v) = line.strip_prefix("kind ") {
            kind_name = Some(v.to_string());
        } else if let Some(v) = line.strip_prefix("set ") {
            set = BranchSet::new(parse_branch_list(v)?);
        } else if let Some(v) = line.strip_prefix("exclude ") {
            excluded = parse_branch_list(v)?;
        }
    }
    let k_star = k_star.ok_or("missing kstar")?;
    let depth = depth.ok_or("missing depth")?;
    let kind = match kind_name.as_deref() {
        Some("countable") => CertKind::Countable { set },
        Some("quotient") => {
            let excluded_set = BranchSet::new(excluded.iter().cloned());
            CertKind::Quotient {
                base: set.clone(),
                excluded: excluded.clone(),
                parts: quotient_parts(&set, &excluded_set),
            }
        }
        other => return Err(format!("bad kind {other:?}")),
    };
    let mut tuples = Vec::new();
    let mut in_separators = false;
    for line in lines.by_ref() {
        if line.starts_with("BASIS-Y1") {
            break;
        }
        if line == "SEPARATORS" {
            in_separators = true;
            continue;
        }
        if in_separators {
            continue;
        }
        let mut separator = None;
        let mut m_t = None;
        let mut s_set = Vec::new();
        let mut r_witnesses = Vec::new();
        let mut tuple = None;
        for field in line.split_whitespace() {
            if let Some(v) = field.strip_prefix("s=") {
                separator = Some(v.parse::<u32>().map_err(|_| "bad separator")?);
            } else if let Some(v) = field.strip_prefix("m=") {
                m_t = Some(v.parse::<usize>().map_err(|_| "bad m")?);
            } else if let Some(v) = field.strip_prefix("S=") {
                s_set = v
                    .split(',')
                    .map(|x| x.parse::<usize>().map_err(|_| "bad S".to_string()))
                    .collect::<Result<_, _>>()?;
            } else if let Some(v) = field.strip_prefix("r=") {
                r_witnesses = v
                    .split(',')
                    .map(|x| x.parse::<usize>().map_err(|_| "bad r".to_string()))
                    .collect::<Result<_, _>>()?;
            } else if let Some(v) = field.strip_prefix("tuple=") {
                tuple = Some(BranchTuple::full(parse_branch_list(v)?));
            }
        }
        tuples.push(TupleInfo {
            tuple: tuple.ok_or("tuple line missing tuple=")?,
            separator: separator.ok_or("tuple line missing s=")?,
            m_t,
            s_set,
            r_witnesses,
        });
    }
    // Skip the basis listings; stop at REWRITES.
    for line in lines.by_ref() {
        if line == "REWRITES" {
            break;
        }
    }
    let mut rewrites = BTreeMap::new();
    for line in lines.by_ref() {
        if line == "ELIMINATION" {
            break;
        }
        let (g, combo) = line
            .split_once(":=")
            .ok_or_else(|| format!("bad rewrite line `{line}`"))?;
        rewrites.insert(parse_generator(g.trim())?, parse_combo(combo.trim())?);
    }
    let mut elimination = Vec::new();
    for line in lines {
        if line == "END" {
            break;
        }
        let (g, rest) = line
            .split_once('@')
            .ok_or_else(|| format!("bad elimination line `{line}`"))?;
        let mut t = None;
        let mut n = None;
        for field in rest.split_whitespace() {
            if let Some(v) = field.strip_prefix("t=") {
                t = Some(v.parse::<usize>().map_err(|_| "bad t")?);
            } else if let Some(v) = field.strip_prefix("n=") {
                n = Some(v.parse::<u32>().map_err(|_| "bad n")?);
            }
        }
        elimination.push((
            parse_generator(g.trim())?,
            t.ok_or("elimination missing t=")?,
            n.ok_or("elimination missing n=")?,
        ));
    }
    Ok(FreeBasisCert {
        k_star,
        depth,
        kind,
        tuples,
        basis_y1: Vec::new(),
        basis_y2: Vec::new(),
        basis_y3: Vec::new(),
        rewrites,
        elimination,
    })
}

/// Re-check a parsed basis certificate: triangularity and every stored
/// rewrite, without re-running the builder.
pub fn verify_basis_report(cert: &FreeBasisCert) -> Result<(), String> {
    verify_triangular(cert)?;
    for (g, combo) in &cert.rewrites {
        match verify_rewrite(g, combo, cert) {
            Ok(true) => {}
            Ok(false) => return Err(format!("rewrite of {g} does not re-expand")),
            Err(e) => return Err(format!("rewrite of {g}: {e}")),
        }
    }
    Ok(())
}

/// Serialize a witness certificate: per-level identity rows and the
/// obstruction row, then the certified divisibility ladder.
pub fn write_witness_report(cert: &WitnessCert) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "REPORT witness v{VERSION}");
    let _ = writeln!(out, "kstar {}", cert.config.k_star);
    let _ = writeln!(out, "star {}", tuple_text(&cert.config.star));
    for part in &cert.config.parts {
        let items: Vec<String> = part.branches().map(|b| format!("{b}")).collect();
        let _ = writeln!(out, "part {}", items.join(","));
    }
    let _ = writeln!(out, "levels {}", cert.levels.len());
    let _ = writeln!(out, "IDENTITIES");
    for level in &cert.levels {
        let summands: Vec<String> = level
            .summands
            .iter()
            .map(|(g, part)| format!("{g} in part {part}"))
            .collect();
        let _ = writeln!(
            out,
            "n={} identity={} summands: {}",
            level.n,
            if level.identity_holds { "ok" } else { "FAIL" },
            summands.join("; ")
        );
    }
    let reason = match cert.obstruction.reason {
        ObstructionReason::Uncovered => "uncovered",
        ObstructionReason::NonIntegral => "non-integral",
    };
    let _ = writeln!(
        out,
        "OBSTRUCTION coordinate={} coefficient={} reason={reason}",
        cert.obstruction.coordinate, cert.obstruction.coefficient
    );
    let _ = writeln!(out, "DIVISIBILITY");
    for (n, product) in &cert.divisibility {
        let _ = writeln!(out, "n={n} divisor={product}");
    }
    let _ = writeln!(out, "RESULT PASS");
    let _ = writeln!(out, "END");
    out
}

/// Re-check a witness report: parse the configuration and the claimed
/// rows, then confirm each claim (identities, summand membership, the
/// obstruction, and the divisibility ladder).
pub fn verify_witness_report(content: &str) -> Result<(), String> {
    let mut k_star = None;
    let mut star = None;
    let mut parts: Vec<BranchSet> = Vec::new();
    let mut levels = None;
    let mut divisors: Vec<(u32, BigInt)> = Vec::new();
    for line in content.lines() {
        if let Some(v) = line.strip_prefix("kstar ") {
            k_star = Some(v.parse::<usize>().map_err(|_| "bad kstar")?);
        } else if let Some(v) = line.strip_prefix("star ") {
            star = Some(BranchTuple::full(parse_branch_list(v)?));
        } else if let Some(v) = line.strip_prefix("part") {
            parts.push(BranchSet::new(parse_branch_list(v.trim())?));
        } else if let Some(v) = line.strip_prefix("levels ") {
            levels = Some(v.parse::<u32>().map_err(|_| "bad levels")?);
        } else if let Some(v) = line.strip_prefix("n=") {
            if let Some((n, divisor)) = v.split_once(" divisor=") {
                divisors.push((
                    n.trim().parse::<u32>().map_err(|_| "bad divisor level")?,
                    divisor
                        .trim()
                        .parse::<BigInt>()
                        .map_err(|_| "bad divisor")?,
                ));
            }
        } else if line.contains("identity=FAIL") {
            return Err("report records a failed identity".to_string());
        }
    }
    let k_star = k_star.ok_or("missing kstar")?;
    let star = star.ok_or("missing star")?;
    let levels = levels.ok_or("missing levels")?;
    let config = WitnessConfig {
        k_star,
        star: star.clone(),
        parts: parts.clone(),
    };
    // The divisibility ladder must carry the exact factorial products.
    for (n, divisor) in &divisors {
        if *divisor != factorial_product(0, *n) {
            return Err(format!("divisor at level {n} is not the factorial product"));
        }
    }
    if divisors.len() as u32 != levels + 1 {
        return Err("divisibility ladder length mismatch".to_string());
    }
    // Re-check the claims directly.
    let rebuilt =
        almostfree_core::freeness::nonfree_witness(&config, levels).map_err(|e| format!("{e}"))?;
    let y0 = GroupElement::generator(Generator::y(config.star.clone(), 0));
    match member_sum(&y0, &config.parts, levels + 1).map_err(|e| format!("{e}"))? {
        Membership::NotMember(_) => {}
        Membership::Member(_) => return Err("level-0 y lies in the sum of parts".to_string()),
    }
    if !rebuilt.levels.iter().all(|l| l.identity_holds) {
        return Err("an identity fails on re-check".to_string());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use almostfree_core::freeness::{build_basis_countable, build_basis_quotient, nonfree_witness};
    use almostfree_core::shygroup::Branch;

    fn b(text: &str) -> Branch {
        Branch::parse(text).unwrap()
    }

    #[test]
    fn basis_report_round_trip_verifies() {
        let set = BranchSet::new([b("*0"), b("1*0")]);
        let cert = build_basis_countable(&set, 0, 4).unwrap();
        let report = write_basis_report(&cert);
        let parsed = parse_basis_report(&report).unwrap();
        verify_basis_report(&parsed).unwrap();
        assert_eq!(parsed.k_star, 0);
        assert_eq!(parsed.tuples.len(), 2);
    }

    #[test]
    fn quotient_report_round_trip_verifies() {
        let base = BranchSet::new([b("1*0")]);
        let u = BranchSet::new([b("*0")]);
        let cert = build_basis_quotient(&base, &u, 1, 4).unwrap();
        let report = write_basis_report(&cert);
        let parsed = parse_basis_report(&report).unwrap();
        verify_basis_report(&parsed).unwrap();
    }

    #[test]
    fn witness_report_round_trip_verifies() {
        let config = WitnessConfig {
            k_star: 1,
            star: BranchTuple::full(vec![b("*0"), b("1*0")]),
            parts: vec![BranchSet::new([b("1*0")]), BranchSet::new([b("*0")])],
        };
        let cert = nonfree_witness(&config, 6).unwrap();
        let report = write_witness_report(&cert);
        verify_witness_report(&report).unwrap();
    }

    #[test]
    fn tampered_witness_report_fails() {
        let config = WitnessConfig {
            k_star: 1,
            star: BranchTuple::full(vec![b("*0"), b("1*0")]),
            parts: vec![BranchSet::new([b("1*0")]), BranchSet::new([b("*0")])],
        };
        let cert = nonfree_witness(&config, 4).unwrap();
        let report = write_witness_report(&cert).replace("divisor=1", "divisor=3");
        assert!(verify_witness_report(&report).is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let set = BranchSet::new([b("*0"), b("1*0")]);
        let r1 = write_basis_report(&build_basis_countable(&set, 0, 4).unwrap());
        let r2 = write_basis_report(&build_basis_countable(&set, 0, 4).unwrap());
        assert_eq!(r1, r2);
    }
}
