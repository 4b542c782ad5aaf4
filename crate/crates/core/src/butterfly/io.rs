//! JSON-lines persistence: a header line, then one line per gap record.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{ButterflyConfig, ButterflyDiagram, FluxEntry};
use crate::error::{Error, Result};
use crate::magnetic_algebra::Flux;
use crate::spectrum::GapRecord;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JsonLine {
    Header { version: u32, config_hash: String, config: ButterflyConfig },
    Gap(GapRecord),
    FluxError { p: u64, q: u64, message: String },
}

pub fn write_jsonl<W: Write>(diagram: &ButterflyDiagram, mut w: W) -> Result<()> {
    let mut put = |line: &JsonLine| -> Result<()> {
        serde_json::to_writer(&mut w, line).map_err(|e| Error::Io(e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    };
    put(&JsonLine::Header {
        version: FORMAT_VERSION,
        config_hash: diagram.config_hash.clone(),
        config: diagram.config.clone(),
    })?;
    for e in &diagram.entries {
        for g in &e.gaps {
            put(&JsonLine::Gap(g.clone()))?;
        }
        if let Some(message) = &e.error {
            put(&JsonLine::FluxError { p: e.p, q: e.q, message: message.clone() })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn entry_for<'a>(entries: &'a mut Vec<FluxEntry>, p: u64, q: u64, line: usize) -> Result<&'a mut FluxEntry> {
    let new = match entries.last() {
        Some(e) if e.p == p && e.q == q => false,
        Some(e) if (e.p as u128) * (q as u128) >= (p as u128) * (e.q as u128) => {
            return Err(Error::Parse { line, message: format!("flux {p}/{q} out of order") })
        }
        _ => true,
    };
    if new {
        Flux::new(p, q).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        entries.push(FluxEntry { p, q, gaps: Vec::new(), error: None });
    }
    Ok(entries.last_mut().expect("entry present"))
}

/// Reads a diagram written by [`write_jsonl`]. Blank lines are skipped.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<ButterflyDiagram> {
    let mut header: Option<(String, ButterflyConfig)> = None;
    let mut entries: Vec<FluxEntry> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let n = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JsonLine =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: n, message: e.to_string() })?;
        let bad = |message: String| Error::Parse { line: n, message };
        match parsed {
            JsonLine::Header { version, config_hash, config } => {
                if header.is_some() || !entries.is_empty() {
                    return Err(bad("header must be the first line".into()));
                }
                if version != FORMAT_VERSION {
                    return Err(bad(format!("unsupported version {version}")));
                }
                config.validate().map_err(|e| bad(e.to_string()))?;
                if config.hash() != config_hash {
                    return Err(bad("config hash does not match config".into()));
                }
                header = Some((config_hash, config));
            }
            _ if header.is_none() => return Err(bad("missing header".into())),
            JsonLine::Gap(g) => {
                let e = entry_for(&mut entries, g.p, g.q, n)?;
                if g.j > g.q || g.j != e.gaps.len() as u64 {
                    return Err(bad(format!("gap {} of {}/{} out of sequence", g.j, g.p, g.q)));
                }
                if g.lo.is_nan() || g.hi.is_nan() || g.width.is_nan() || g.lo > g.hi {
                    return Err(bad(format!("gap {} of {}/{} has a bad interval", g.j, g.p, g.q)));
                }
                e.gaps.push(g);
            }
            JsonLine::FluxError { p, q, message } => {
                let e = entry_for(&mut entries, p, q, n)?;
                if e.error.is_some() {
                    return Err(bad(format!("second error for {p}/{q}")));
                }
                e.error = Some(message);
            }
        }
    }
    let (config_hash, config) = header.ok_or(Error::Parse { line: 0, message: "empty input".into() })?;
    for e in &entries {
        if !e.gaps.is_empty() && e.gaps.len() as u64 != e.q + 1 {
            return Err(Error::Parse {
                line: 0,
                message: format!("{}/{} has {} gaps, expected {}", e.p, e.q, e.gaps.len(), e.q + 1),
            });
        }
    }
    Ok(ButterflyDiagram { config, config_hash, entries })
}
