//! CSV reading and writing of survival data.
//!
//! Files have a header `time,status[,group]`. Status is 1 for an observed
//! event and 0 for a censored time. Group values are matched without regard
//! to case: `C`, `control` and `A` denote the control arm; `T`,
//! `treatment` and `B` the treatment arm.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Group, Record, SurvivalDataset};

pub fn parse_group(s: &str) -> Option<Group> {
    match s.trim().to_ascii_lowercase().as_str() {
        "c" | "control" | "a" => Some(Group::Control),
        "t" | "treatment" | "b" => Some(Group::Treatment),
        _ => None,
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<SurvivalDataset> {
    read_csv(File::open(path)?)
}

pub fn read_csv<R: Read>(reader: R) -> Result<SurvivalDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ti), Some(si)) = (col("time"), col("status")) else {
        return Err(Error::Parse {
            line: 1,
            message: "header must contain `time` and `status`".into(),
        });
    };
    let gi = col("group");
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let err = |message: String| Error::Parse { line, message };
        let field = |i: usize, name: &str| -> Result<&str> {
            match row.get(i) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(err(format!("missing {name}"))),
            }
        };
        let time: f64 = field(ti, "time")?
            .parse()
            .map_err(|_| err(format!("invalid time `{}`", &row[ti])))?;
        if !(time > 0.0 && time.is_finite()) {
            return Err(err(format!("time must be positive, got {time}")));
        }
        let event = match field(si, "status")? {
            "1" => true,
            "0" => false,
            other => return Err(err(format!("status must be 0 or 1, got `{other}`"))),
        };
        let group = match gi {
            None => None,
            Some(i) => {
                let g = field(i, "group")?;
                Some(parse_group(g).ok_or_else(|| err(format!("unknown group `{g}`")))?)
            }
        };
        records.push(Record { time, event, group });
    }
    SurvivalDataset::new(records)
}

/// Write with shortest round-trip decimal formatting, so reading the file
/// back reproduces the dataset exactly.
pub fn write_csv<W: Write>(data: &SurvivalDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if data.is_grouped() {
        w.write_record(["time", "status", "group"])?;
    } else {
        w.write_record(["time", "status"])?;
    }
    for r in data.records() {
        let time = r.time.to_string();
        let status = if r.event { "1" } else { "0" };
        match r.group {
            Some(g) => w.write_record([time.as_str(), status, g.label()])?,
            None => w.write_record([time.as_str(), status])?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(data: &SurvivalDataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(data, File::create(path)?)
}
