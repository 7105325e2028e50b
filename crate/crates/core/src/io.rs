//! Files: sampled sets, polynomials and JSON documents.
//!
//! A set file is one JSON header line `{"schedule": .., "seed": .., "range": ..}`
//! followed by the elements, one decimal integer per line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynorm::TrigPolynomial;
use crate::spectra::{RandomSetSample, SelectorSchedule};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SetHeader {
    schema_version: u32,
    schedule: SelectorSchedule,
    seed: u64,
    range: (u64, u64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thinned_from: Option<u64>,
}

pub fn write_set<W: Write>(sample: &RandomSetSample, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let header = SetHeader {
        schema_version: SCHEMA_VERSION,
        schedule: sample.schedule.clone(),
        seed: sample.seed,
        range: sample.range,
        thinned_from: sample.thinned_from,
    };
    serde_json::to_writer(&mut out, &header)?;
    writeln!(out)?;
    for k in &sample.elements {
        writeln!(out, "{k}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_set<R: Read>(input: R) -> Result<RandomSetSample> {
    let mut lines = BufReader::new(input).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Config("set file is empty".into()))??;
    let header: SetHeader = serde_json::from_str(&first)?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported set file schema_version {}",
            header.schema_version
        )));
    }
    let mut elements = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let k: u64 = t
            .parse()
            .map_err(|_| Error::Config(format!("line {}: not an integer: {t:?}", i + 2)))?;
        if k < header.range.0 || k > header.range.1 {
            return Err(Error::Config(format!(
                "line {}: {k} outside the header range",
                i + 2
            )));
        }
        if elements.last().is_some_and(|&p| p >= k) {
            return Err(Error::Config(format!(
                "line {}: elements must be strictly increasing",
                i + 2
            )));
        }
        elements.push(k);
    }
    Ok(RandomSetSample {
        elements,
        seed: header.seed,
        schedule: header.schedule,
        range: header.range,
        thinned_from: header.thinned_from,
    })
}

pub fn save_set(sample: &RandomSetSample, path: &Path) -> Result<()> {
    write_atomic(path, |w| write_set(sample, w))
}

pub fn load_set(path: &Path) -> Result<RandomSetSample> {
    read_set(fs::File::open(path)?)
}

/// Reads either a set file or a plain list of integers (whitespace or comma
/// separated, `#` comments allowed).
pub fn load_integers(path: &Path) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        return Ok(read_set(text.as_bytes())?
            .elements
            .iter()
            .map(|&k| k as i64)
            .collect());
    }
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            out.push(
                tok.parse()
                    .map_err(|_| Error::Config(format!("not an integer: {tok:?}")))?,
            );
        }
    }
    Ok(out)
}

pub fn load_poly(path: &Path) -> Result<TrigPolynomial> {
    load_json(path)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(fs::File::open(
        path,
    )?))?)
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        let mut w = BufWriter::new(w);
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    })
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut fs::File) -> Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp)?;
    f(&mut file)?;
    file.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::sample_set;

    #[test]
    fn set_round_trip() {
        let s = sample_set(&SelectorSchedule::dyadic(1.0).unwrap(), (16, 4096), 9).unwrap();
        let mut buf = Vec::new();
        write_set(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().next().unwrap().contains("\"seed\":9"));
        assert_eq!(read_set(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn rejects_bad_lines() {
        let s = sample_set(&SelectorSchedule::dyadic(1.0).unwrap(), (16, 64), 1).unwrap();
        let mut buf = Vec::new();
        write_set(&s, &mut buf).unwrap();
        buf.extend_from_slice(b"9999\n");
        assert!(read_set(buf.as_slice()).is_err());
    }

    #[test]
    fn plain_integer_lists() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, "1, 2 4\n# comment\n-8\n").unwrap();
        assert_eq!(load_integers(&p).unwrap(), vec![1, 2, 4, -8]);
    }
}
