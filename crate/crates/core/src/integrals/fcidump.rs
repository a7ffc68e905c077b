//! FCIDUMP reader and canonical writer.
//!
//! Header: `&FCI NORB=..,NELEC=..,MS2=.., [ORBSYM=..,] [ISYM=..,] &END` (a lone
//! `/` also terminates it). Records are `value i j k l` with 1-based indices:
//! `(ij|kl)` for four nonzero indices, `h_ij` for `i j 0 0`, the core energy
//! for `0 0 0 0`. Records `i 0 0 0` (orbital energies) are skipped.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use super::{eightfold_images, IntegralSet, PermutationalSymmetry};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ParsedFcidump {
    pub integrals: IntegralSet,
    /// Records that overwrote an entry already set by an earlier record.
    pub duplicate_records: usize,
    /// Orbital-energy records (`i 0 0 0`), which carry no Hamiltonian term.
    pub skipped_records: usize,
}

struct Header {
    norb: usize,
    nelec: usize,
    ms2: i32,
    orbsym: Vec<u32>,
}

fn parse_header(text: &str, line: usize) -> Result<Header> {
    let err = |msg: String| Error::Parse { line, msg };
    let body = text.trim_start();
    let body = body
        .strip_prefix("&FCI")
        .or_else(|| body.strip_prefix("&fci"))
        .ok_or_else(|| err("header must start with &FCI".into()))?;
    let body = body.replace("&END", "").replace("&end", "").replace('/', "");

    let mut entries: Vec<(String, Vec<String>)> = Vec::new();
    for token in body.split(|c: char| c == ',' || c.is_whitespace()) {
        if token.is_empty() {
            continue;
        }
        if let Some((key, value)) = token.split_once('=') {
            let mut values = Vec::new();
            if !value.is_empty() {
                values.push(value.to_string());
            }
            entries.push((key.trim().to_ascii_uppercase(), values));
        } else if let Some(last) = entries.last_mut() {
            last.1.push(token.to_string());
        } else {
            return Err(err(format!("unexpected header token '{token}'")));
        }
    }

    let get = |key: &str| entries.iter().find(|(k, _)| k == key).map(|(_, v)| v);
    let int = |key: &str| -> Result<Option<i64>> {
        match get(key) {
            None => Ok(None),
            Some(v) if v.len() == 1 => v[0]
                .parse::<i64>()
                .map(Some)
                .map_err(|_| err(format!("{key} is not an integer: '{}'", v[0]))),
            Some(v) => Err(err(format!("{key} expects one value, got {}", v.len()))),
        }
    };
    if let Some(v) = get("UHF") {
        if v.iter().any(|s| s.to_ascii_uppercase().contains('T')) {
            return Err(err("unrestricted (UHF) integrals are not supported".into()));
        }
    }
    let norb = int("NORB")?.ok_or_else(|| err("header lacks NORB".into()))?;
    let nelec = int("NELEC")?.ok_or_else(|| err("header lacks NELEC".into()))?;
    let ms2 = int("MS2")?.unwrap_or(0);
    if norb <= 0 || nelec < 0 {
        return Err(err(format!("invalid NORB={norb} or NELEC={nelec}")));
    }
    let orbsym = match get("ORBSYM") {
        Some(v) => v
            .iter()
            .map(|s| {
                s.parse::<u32>()
                    .map_err(|_| err(format!("ORBSYM entry '{s}' is not an integer")))
            })
            .collect::<Result<Vec<_>>>()?,
        None => vec![1; norb as usize],
    };
    Ok(Header {
        norb: norb as usize,
        nelec: nelec as usize,
        ms2: ms2 as i32,
        orbsym,
    })
}

fn parse_value(token: &str, line: usize) -> Result<f64> {
    if token.starts_with('(') {
        return Err(Error::Parse {
            line,
            msg: "complex integrals are not supported".into(),
        });
    }
    token
        .replace(['D', 'd'], "E")
        .parse::<f64>()
        .map_err(|_| Error::Parse {
            line,
            msg: format!("non-numeric value '{token}'"),
        })
}

/// Parses an FCIDUMP stream, filling every symmetry-related two-body entry.
pub fn parse_fcidump<R: BufRead>(reader: R) -> Result<ParsedFcidump> {
    let mut lines = reader.lines().enumerate();

    let mut header_text = String::new();
    let mut header_line = 0;
    loop {
        let (idx, line) = lines.next().ok_or(Error::Parse {
            line: header_line + 1,
            msg: "unterminated or missing &FCI header".into(),
        })?;
        let line = line?;
        if header_text.is_empty() {
            if line.trim().is_empty() {
                continue;
            }
            header_line = idx + 1;
        }
        header_text.push_str(&line);
        header_text.push(' ');
        let upper = line.trim().to_ascii_uppercase();
        if upper.contains("&END") || upper == "/" || upper.ends_with('/') {
            break;
        }
    }
    let header = parse_header(&header_text, header_line)?;
    let n = header.norb;

    let mut set = IntegralSet::zeros(n, header.nelec, PermutationalSymmetry::Eightfold);
    set.set_metadata(header.ms2, header.orbsym);
    let mut seen = HashSet::new();
    let mut duplicate_records = 0;
    let mut skipped_records = 0;

    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 'value i j k l', got {} fields", tokens.len()),
            });
        }
        let value = parse_value(tokens[0], lineno)?;
        let mut idx4 = [0usize; 4];
        for (slot, tok) in idx4.iter_mut().zip(&tokens[1..]) {
            let v: usize = tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid orbital index '{tok}'"),
            })?;
            if v > n {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("orbital index {v} exceeds NORB={n}"),
                });
            }
            *slot = v;
        }
        let [i, j, k, l] = idx4;
        let key = match (i, j, k, l) {
            (0, 0, 0, 0) => {
                set.core_energy = value;
                (0, 0, 0, 0)
            }
            (_, 0, 0, 0) => {
                skipped_records += 1;
                continue;
            }
            (i, j, 0, 0) if i > 0 && j > 0 => {
                set.set_one_body(i - 1, j - 1, value);
                (i.max(j), i.min(j), 0, 0)
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                set.set_eri(i - 1, j - 1, k - 1, l - 1, value);
                eightfold_images(i, j, k, l)
                    .into_iter()
                    .max()
                    .expect("eight images")
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("invalid index pattern {i} {j} {k} {l}"),
                })
            }
        };
        if !seen.insert(key) {
            duplicate_records += 1;
        }
    }
    set.validate()?;
    Ok(ParsedFcidump {
        integrals: set,
        duplicate_records,
        skipped_records,
    })
}

/// Convenience wrapper reading a file from disk.
pub fn read_fcidump(path: impl AsRef<std::path::Path>) -> Result<ParsedFcidump> {
    let file = std::fs::File::open(path)?;
    parse_fcidump(std::io::BufReader::new(file))
}

/// Writes the canonical form: one record per symmetry-unique nonzero entry,
/// sorted lexicographically by `(i, j, k, l)`, 17 significant digits.
pub fn write_fcidump<W: Write>(integrals: &IntegralSet, mut out: W) -> Result<()> {
    if integrals.symmetry() != PermutationalSymmetry::Eightfold {
        return Err(Error::InvalidArgument(
            "only eightfold-symmetric integrals can be written as FCIDUMP".into(),
        ));
    }
    let n = integrals.n_spatial();
    let orbsym: Vec<String> = integrals.orbsym().iter().map(|s| s.to_string()).collect();
    writeln!(
        out,
        "&FCI NORB={},NELEC={},MS2={},",
        n,
        integrals.n_electrons(),
        integrals.ms2()
    )?;
    writeln!(out, "  ORBSYM={},", orbsym.join(","))?;
    writeln!(out, "  ISYM=1,")?;
    writeln!(out, "&END")?;

    let mut records: Vec<((usize, usize, usize, usize), f64)> = vec![((0, 0, 0, 0), integrals.core_energy())];
    for i in 1..=n {
        for j in 1..=i {
            let v = integrals.one_body()[(i - 1, j - 1)];
            if v != 0.0 {
                records.push(((i, j, 0, 0), v));
            }
        }
    }
    for i in 1..=n {
        for j in 1..=i {
            for k in 1..=n {
                for l in 1..=k {
                    if (i, j) < (k, l) {
                        continue;
                    }
                    let v = integrals.eri(i - 1, j - 1, k - 1, l - 1);
                    if v != 0.0 {
                        records.push(((i, j, k, l), v));
                    }
                }
            }
        }
    }
    records.sort_by_key(|r| r.0);
    for ((i, j, k, l), v) in records {
        writeln!(out, "{v:24.16e} {i:4} {j:4} {k:4} {l:4}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::random_integral_set;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<ParsedFcidump> {
        parse_fcidump(s.as_bytes())
    }

    const HEADER: &str = "&FCI NORB=2,NELEC=2,MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n&END\n";

    #[test]
    fn record_kinds() {
        let text = format!("{HEADER} 0.5 0 0 0 0\n -1.25 1 1 0 0\n 0.7 1 2 1 2\n");
        let p = parse(&text).unwrap();
        let s = &p.integrals;
        assert_eq!(s.core_energy(), 0.5);
        assert_eq!(s.one_body()[(0, 0)], -1.25);
        for (i, j, k, l) in eightfold_images(0, 1, 0, 1) {
            assert_eq!(s.eri(i, j, k, l), 0.7);
        }
        assert_eq!(s.eri(0, 0, 1, 1), 0.0);
        assert_eq!(p.duplicate_records, 0);
    }

    #[test]
    fn duplicates_are_counted() {
        let text = format!("{HEADER} 0.7 1 2 1 2\n 0.8 2 1 2 1\n 0.1 1 2 0 0\n 0.2 2 1 0 0\n");
        let p = parse(&text).unwrap();
        assert_eq!(p.duplicate_records, 2);
        assert_eq!(p.integrals.eri(0, 1, 0, 1), 0.8);
        assert_eq!(p.integrals.one_body()[(0, 1)], 0.2);
    }

    #[test]
    fn fortran_exponents_and_orbital_energies() {
        let text = format!("{HEADER} 1.5D-01 1 1 1 1\n -0.3 1 0 0 0\n");
        let p = parse(&text).unwrap();
        assert_eq!(p.integrals.eri(0, 0, 0, 0), 0.15);
        assert_eq!(p.skipped_records, 1);
    }

    #[test]
    fn single_line_header_with_slash() {
        let p = parse("&FCI NORB=1, NELEC=2, MS2=0 /\n 1.0 1 1 1 1\n").unwrap();
        assert_eq!(p.integrals.n_spatial(), 1);
        assert_eq!(p.integrals.eri(0, 0, 0, 0), 1.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad_index = format!("{HEADER} 0.5 1 3 0 0\n");
        match parse(&bad_index) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        let bad_value = format!("{HEADER} 0.5 1 1 0 0\n abc 1 1 0 0\n");
        match parse(&bad_value) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 6);
                assert!(msg.contains("non-numeric"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let complex = format!("{HEADER} (0.5,0.1) 1 1 0 0\n");
        assert!(matches!(parse(&complex), Err(Error::Parse { line: 5, .. })));
        assert!(matches!(
            parse("&FCI NELEC=2 &END\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse("0.5 0 0 0 0\n").is_err());
        assert!(parse(&format!("{HEADER} 0.5 1 1 1\n")).is_err());
    }

    #[test]
    fn fourfold_sets_cannot_be_written() {
        let set = crate::integrals::pairing_hamiltonian(&[0.0, 1.0], 0.5).unwrap();
        assert!(write_fcidump(&set, Vec::new()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn serialize_round_trip(n in 1usize..5, seed in 0u64..1000, core in -50.0f64..50.0) {
            let set = random_integral_set(n, 2, seed).with_core_energy(core);
            let mut buf = Vec::new();
            write_fcidump(&set, &mut buf).unwrap();
            let back = parse_fcidump(buf.as_slice()).unwrap();
            prop_assert_eq!(back.duplicate_records, 0);
            prop_assert_eq!(&back.integrals, &set);
            let mut buf2 = Vec::new();
            write_fcidump(&back.integrals, &mut buf2).unwrap();
            prop_assert_eq!(buf, buf2);
        }
    }
}
