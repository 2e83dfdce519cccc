//! Sample files hold one symbol per line, optionally preceded by a
//! `# domain_size=N` comment; histogram files hold `symbol<TAB>count` lines.
//! Without a domain header the domain is `max symbol + 1`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::profiles::{Histogram, SampleSequence, Symbol};

fn domain_header(line: &str) -> Option<Result<usize>> {
    let rest = line.trim().strip_prefix('#')?.trim();
    let value = rest.strip_prefix("domain_size")?.trim_start().strip_prefix('=')?;
    Some(value.trim().parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("bad domain size {:?}", value.trim()),
    }))
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected {what}, found {:?}", s.trim()),
    })
}

pub fn read_samples<R: BufRead>(reader: R) -> Result<SampleSequence> {
    let mut domain = None;
    let mut symbols: Vec<Symbol> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if let Some(d) = domain_header(&line) {
                domain = Some(d?);
                continue;
            }
        }
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        symbols.push(parse_field(t, i + 1, "a non-negative integer symbol")?);
    }
    let domain = domain.unwrap_or_else(|| symbols.iter().max().map_or(0, |&m| m as usize + 1));
    SampleSequence::new(symbols, domain)
}

pub fn read_histogram<R: BufRead>(reader: R) -> Result<Histogram> {
    let mut domain = None;
    let mut counts = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if let Some(d) = domain_header(&line) {
                domain = Some(d?);
                continue;
            }
        }
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (s, c) = t.split_once('\t').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: "expected symbol<TAB>count".into(),
        })?;
        let s: Symbol = parse_field(s, i + 1, "a symbol")?;
        let c: usize = parse_field(c, i + 1, "a count")?;
        counts.push((s, c));
    }
    let domain = domain.unwrap_or_else(|| counts.iter().map(|&(s, _)| s as usize + 1).max().unwrap_or(0));
    Histogram::from_counts(counts, domain)
}

pub fn write_samples<W: Write>(x: &SampleSequence, mut out: W) -> Result<()> {
    writeln!(out, "# domain_size={}", x.domain_size())?;
    for s in x.symbols() {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

pub fn write_histogram<W: Write>(h: &Histogram, mut out: W) -> Result<()> {
    writeln!(out, "# domain_size={}", h.domain_size())?;
    for (s, c) in h.iter() {
        writeln!(out, "{s}\t{c}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_round_trip() {
        let x = SampleSequence::new(vec![3, 0, 0, 7], 10).unwrap();
        let mut buf = Vec::new();
        write_samples(&x, &mut buf).unwrap();
        assert_eq!(read_samples(&buf[..]).unwrap(), x);
    }

    #[test]
    fn domain_defaults_to_max_symbol() {
        let x = read_samples("4\n1\n\n2\n".as_bytes()).unwrap();
        assert_eq!(x.domain_size(), 5);
        assert_eq!(x.symbols(), &[4, 1, 2]);
    }

    #[test]
    fn header_is_enforced() {
        assert!(matches!(
            read_samples("# domain_size=3\n0\n5\n".as_bytes()),
            Err(Error::DomainViolation { symbol: 5, .. })
        ));
        assert!(matches!(read_samples("1\nx\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn histogram_round_trip() {
        let h = read_histogram("# domain_size=9\n0\t4\n8\t1\n".as_bytes()).unwrap();
        assert_eq!(h.total(), 5);
        let mut buf = Vec::new();
        write_histogram(&h, &mut buf).unwrap();
        assert_eq!(read_histogram(&buf[..]).unwrap(), h);
    }
}
