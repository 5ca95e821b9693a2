//! Little-endian trial container:
//!
//! ```text
//! "EEGT"  u32 version=1  u32 C  u32 N  u32 T
//! f64 × C·N·T   sample (c, n, t) at index (c·N + n)·T + t
//! i8 × T        labels
//! u32 × T       session ids
//! C × (u32 byte length, UTF-8 channel name)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::TrialSet;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EEGT";
const VERSION: u32 = 1;

pub fn write_trials(set: &TrialSet, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_trials_to(set, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_trials_to<W: Write>(set: &TrialSet, out: &mut W) -> Result<()> {
    let (c, n, t) = (set.channels(), set.samples(), set.len());
    let dim = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::invalid(format!("{what} {v} does not fit the format")))
    };
    out.write_all(MAGIC)?;
    for v in [VERSION, dim(c, "channel count")?, dim(n, "sample count")?, dim(t, "trial count")?] {
        out.write_all(&v.to_le_bytes())?;
    }
    let mut row = Vec::with_capacity(t * 8);
    for ch in 0..c {
        for s in 0..n {
            row.clear();
            for trial in set.trials() {
                row.extend_from_slice(&trial[(ch, s)].to_le_bytes());
            }
            out.write_all(&row)?;
        }
    }
    for &l in set.labels() {
        out.write_all(&l.to_le_bytes())?;
    }
    for &s in set.sessions() {
        out.write_all(&s.to_le_bytes())?;
    }
    for name in set.channel_names() {
        out.write_all(&dim(name.len(), "channel name length")?.to_le_bytes())?;
        out.write_all(name.as_bytes())?;
    }
    Ok(())
}

pub fn read_trials(path: impl AsRef<Path>) -> Result<TrialSet> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_trials_from(&mut BufReader::new(file))
        .map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::format(format!(
                    "file truncated while reading {what} at byte {}",
                    self.pos
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn read_trials_from<R: Read>(input: &mut R) -> Result<TrialSet> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(Error::format("not an EEGT file (bad magic)"));
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(Error::format(format!("unsupported EEGT version {version}")));
    }
    let c = cur.u32("channel count")? as usize;
    let n = cur.u32("sample count")? as usize;
    let t = cur.u32("trial count")? as usize;

    let samples = c
        .checked_mul(n)
        .and_then(|v| v.checked_mul(t))
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::format("declared dimensions overflow"))?;
    let data = cur.take(samples, "samples")?;
    let mut trials = vec![DMatrix::zeros(c, n); t];
    for (k, chunk) in data.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        let trial = k % t;
        let cn = k / t;
        trials[trial][(cn / n, cn % n)] = v;
    }
    let labels: Vec<i8> = cur.take(t, "labels")?.iter().map(|&b| b as i8).collect();
    let mut sessions = Vec::with_capacity(t);
    for _ in 0..t {
        sessions.push(cur.u32("session ids")?);
    }
    let mut names = Vec::with_capacity(c);
    for i in 0..c {
        let len = cur.u32("channel name length")? as usize;
        let raw = cur.take(len, "channel name")?;
        names.push(
            String::from_utf8(raw.to_vec())
                .map_err(|_| Error::format(format!("channel name {i} is not UTF-8")))?,
        );
    }
    if cur.pos != bytes.len() {
        return Err(Error::format(format!(
            "{} unexpected trailing bytes",
            bytes.len() - cur.pos
        )));
    }
    TrialSet::new(trials, labels, sessions, names).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::Format(msg),
        other => other,
    })
}
