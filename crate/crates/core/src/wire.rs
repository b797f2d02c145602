//! Portable encodings of a [`Sample`].
//!
//! Binary, little-endian:
//!
//! ```text
//! magic "VOPT" | version u16 = 1 | capacity_k u32 | items_seen u64
//! | total_weight_seen f64 | threshold f64 | entry_count u32
//! | entry_count x (key_len u16 | key UTF-8 | original_weight f64 | adjusted_weight f64)
//! ```
//!
//! Text: `#`-prefixed `name=value` header lines for the scalar fields, then
//! one `key<TAB>original_weight<TAB>adjusted_weight` line per entry. Floats
//! are written in shortest round-trip form, so both encodings are lossless.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::item::{Sample, SampleEntry};

pub const MAGIC: &[u8; 4] = b"VOPT";
pub const VERSION: u16 = 1;

pub fn serialize_sample(sample: &Sample) -> Result<Vec<u8>> {
    let capacity = u32::try_from(sample.capacity)
        .map_err(|_| Error::domain("capacity does not fit in u32"))?;
    let count = u32::try_from(sample.entries.len())
        .map_err(|_| Error::domain("entry count does not fit in u32"))?;
    let mut out = Vec::with_capacity(38 + sample.entries.len() * 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&capacity.to_le_bytes());
    out.extend_from_slice(&sample.items_seen.to_le_bytes());
    out.extend_from_slice(&sample.total_weight_seen.to_le_bytes());
    out.extend_from_slice(&sample.threshold.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for e in &sample.entries {
        let len = u16::try_from(e.key.len())
            .map_err(|_| Error::domain(format!("key of {} bytes is too long", e.key.len())))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(e.key.as_bytes());
        out.extend_from_slice(&e.original_weight.to_le_bytes());
        out.extend_from_slice(&e.adjusted_weight.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::parse(
                self.pos,
                format!("truncated input while reading {what}"),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        self.array(what).map(u16::from_le_bytes)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        self.array(what).map(u32::from_le_bytes)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        self.array(what).map(u64::from_le_bytes)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let at = self.pos;
        let v = f64::from_le_bytes(self.array(what)?);
        if !v.is_finite() {
            return Err(Error::parse(at, format!("{what} is not finite")));
        }
        Ok(v)
    }
}

pub fn deserialize_sample(bytes: &[u8]) -> Result<Sample> {
    let mut rd = Reader { buf: bytes, pos: 0 };
    if rd.take(4, "magic")? != MAGIC {
        return Err(Error::parse(0, "bad magic, expected VOPT"));
    }
    let version = rd.u16("version")?;
    if version != VERSION {
        return Err(Error::parse(4, format!("unsupported version {version}")));
    }
    let capacity = rd.u32("capacity")? as usize;
    let items_seen = rd.u64("items_seen")?;
    let total_weight_seen = rd.f64("total_weight_seen")?;
    let threshold = rd.f64("threshold")?;
    let count_at = rd.pos;
    let count = rd.u32("entry_count")? as usize;
    // Each record takes at least 18 bytes; reject absurd counts up front.
    if count > (bytes.len() - rd.pos) / 18 {
        return Err(Error::parse(
            count_at,
            format!("entry_count {count} exceeds the remaining input"),
        ));
    }
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let len = rd.u16("key length")? as usize;
        let at = rd.pos;
        let key = std::str::from_utf8(rd.take(len, "key")?)
            .map_err(|_| Error::parse(at, "key is not valid UTF-8"))?
            .to_owned();
        let original_weight = rd.f64("original_weight")?;
        let adjusted_weight = rd.f64("adjusted_weight")?;
        entries.push(SampleEntry {
            key,
            adjusted_weight,
            original_weight,
        });
    }
    if rd.pos != bytes.len() {
        return Err(Error::parse(
            rd.pos,
            format!("{} trailing bytes after {count} entries", bytes.len() - rd.pos),
        ));
    }
    Ok(Sample::new(
        entries,
        capacity,
        threshold,
        total_weight_seen,
        items_seen,
    ))
}

pub fn to_text(sample: &Sample) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "# varopt sample v{VERSION}");
    let _ = writeln!(out, "# capacity_k={}", sample.capacity);
    let _ = writeln!(out, "# items_seen={}", sample.items_seen);
    let _ = writeln!(out, "# total_weight_seen={}", sample.total_weight_seen);
    let _ = writeln!(out, "# threshold={}", sample.threshold);
    let _ = writeln!(out, "# entry_count={}", sample.entries.len());
    for e in &sample.entries {
        if e.key.contains(['\t', '\n', '\r']) || e.key.starts_with('#') {
            return Err(Error::domain(format!(
                "key {:?} cannot be written in text form",
                e.key
            )));
        }
        let _ = writeln!(out, "{}\t{}\t{}", e.key, e.original_weight, e.adjusted_weight);
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(line: usize, name: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("cannot parse {name} from {v:?}")))
}

fn parse_weight(line: usize, name: &str, v: &str) -> Result<f64> {
    let w: f64 = parse_field(line, name, v)?;
    if !w.is_finite() {
        return Err(Error::parse(line, format!("{name} is not finite")));
    }
    Ok(w)
}

pub fn from_text(text: &str) -> Result<Sample> {
    let mut capacity = None;
    let mut items_seen = None;
    let mut total = None;
    let mut threshold = None;
    let mut declared = None;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(header) = raw.strip_prefix('#') {
            let Some((name, value)) = header.split_once('=') else {
                continue;
            };
            match name.trim() {
                "capacity_k" => capacity = Some(parse_field::<usize>(line, "capacity_k", value)?),
                "items_seen" => items_seen = Some(parse_field::<u64>(line, "items_seen", value)?),
                "total_weight_seen" => total = Some(parse_weight(line, "total_weight_seen", value)?),
                "threshold" => threshold = Some(parse_weight(line, "threshold", value)?),
                "entry_count" => declared = Some(parse_field::<usize>(line, "entry_count", value)?),
                other => {
                    return Err(Error::parse(line, format!("unknown header field `{other}`")))
                }
            }
            continue;
        }
        let mut cols = raw.split('\t');
        let (Some(key), Some(orig), Some(adj), None) =
            (cols.next(), cols.next(), cols.next(), cols.next())
        else {
            return Err(Error::parse(line, "expected key, original_weight, adjusted_weight"));
        };
        entries.push(SampleEntry {
            key: key.to_owned(),
            original_weight: parse_weight(line, "original_weight", orig)?,
            adjusted_weight: parse_weight(line, "adjusted_weight", adj)?,
        });
    }
    let missing = |name: &str| Error::parse(0, format!("missing header field `{name}`"));
    let declared = declared.ok_or_else(|| missing("entry_count"))?;
    if declared != entries.len() {
        return Err(Error::parse(
            0,
            format!("entry_count says {declared} but {} entries follow", entries.len()),
        ));
    }
    Ok(Sample::new(
        entries,
        capacity.ok_or_else(|| missing("capacity_k"))?,
        threshold.ok_or_else(|| missing("threshold"))?,
        total.ok_or_else(|| missing("total_weight_seen"))?,
        items_seen.ok_or_else(|| missing("items_seen"))?,
    ))
}

/// Decodes either encoding, recognizing the binary form by its magic.
pub fn decode(bytes: &[u8]) -> Result<Sample> {
    if bytes.starts_with(MAGIC) {
        deserialize_sample(bytes)
    } else {
        let text = std::str::from_utf8(bytes)
            .map_err(|e| Error::parse(e.valid_up_to(), "input is neither binary nor UTF-8 text"))?;
        from_text(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example() -> Sample {
        Sample::new(
            vec![
                SampleEntry { key: "c".into(), adjusted_weight: 8.0, original_weight: 8.0 },
                SampleEntry { key: "a".into(), adjusted_weight: 2.0, original_weight: 1.0 },
            ],
            2,
            2.0,
            10.0,
            3,
        )
    }

    #[test]
    fn empty_sample_is_header_only() {
        let s = Sample::empty(4);
        let b = serialize_sample(&s).unwrap();
        assert_eq!(b.len(), 4 + 2 + 4 + 8 + 8 + 8 + 4);
        assert_eq!(deserialize_sample(&b).unwrap(), s);
        assert_eq!(from_text(&to_text(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn example_layout() {
        let b = serialize_sample(&example()).unwrap();
        assert_eq!(&b[..4], b"VOPT");
        assert_eq!(u16::from_le_bytes([b[4], b[5]]), 1);
        assert_eq!(f64::from_le_bytes(b[26..34].try_into().unwrap()), 2.0);
        assert_eq!(u32::from_le_bytes(b[34..38].try_into().unwrap()), 2);
        assert_eq!(deserialize_sample(&b).unwrap(), example());
        let text = to_text(&example()).unwrap();
        assert!(text.contains("# threshold=2\n"));
        assert!(text.ends_with("c\t8\t8\n"));
    }

    #[test]
    fn truncation_and_corruption_are_reported() {
        let b = serialize_sample(&example()).unwrap();
        for cut in 0..b.len() {
            assert!(matches!(deserialize_sample(&b[..cut]), Err(Error::Parse { .. })), "cut {cut}");
        }
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(matches!(deserialize_sample(&bad), Err(Error::Parse { position: 0, .. })));
        let mut bad = b.clone();
        bad[4] = 2;
        assert!(matches!(deserialize_sample(&bad), Err(Error::Parse { position: 4, .. })));
        let mut bad = b.clone();
        bad.push(0);
        assert!(deserialize_sample(&bad).is_err());
        let mut bad = b.clone();
        bad[26..34].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(deserialize_sample(&bad), Err(Error::Parse { position: 26, .. })));
    }

    #[test]
    fn text_errors() {
        let t = to_text(&example()).unwrap();
        let short = t.replace("# entry_count=2", "# entry_count=3");
        assert!(from_text(&short).is_err());
        let bad = t.replace("c\t8\t8", "c\t8");
        assert!(matches!(from_text(&bad), Err(Error::Parse { position: 8, .. })));
        let bad = t.replace("# threshold=2\n", "");
        assert!(from_text(&bad).is_err());
        assert!(to_text(&Sample::new(
            vec![SampleEntry { key: "a\tb".into(), adjusted_weight: 1.0, original_weight: 1.0 }],
            1, 0.0, 1.0, 1,
        ))
        .is_err());
    }

    #[test]
    fn decode_detects_format() {
        let s = example();
        assert_eq!(decode(&serialize_sample(&s).unwrap()).unwrap(), s);
        assert_eq!(decode(to_text(&s).unwrap().as_bytes()).unwrap(), s);
    }

    proptest! {
        #[test]
        fn round_trips_bit_exact(
            entries in prop::collection::btree_map("[a-z0-9_]{1,12}", (1e-300f64..1e300, 1e-300f64..1e300), 0..40),
            capacity in 1usize..1000,
            items in 0u64..u64::MAX,
            total in 0.0f64..1e300,
            tau in 0.0f64..1e300,
        ) {
            let s = Sample::new(
                entries.into_iter().map(|(key, (o, a))| SampleEntry { key, original_weight: o, adjusted_weight: a }).collect(),
                capacity, tau, total, items,
            );
            let back = deserialize_sample(&serialize_sample(&s).unwrap()).unwrap();
            prop_assert_eq!(&back, &s);
            for (x, y) in back.entries.iter().zip(&s.entries) {
                prop_assert_eq!(x.adjusted_weight.to_bits(), y.adjusted_weight.to_bits());
            }
            prop_assert_eq!(from_text(&to_text(&s).unwrap()).unwrap(), s);
        }
    }
}
