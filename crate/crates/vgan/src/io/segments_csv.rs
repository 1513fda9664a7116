//! `start,end,label` annotation tables.

use vgan_core::segment::{Interval, SegmentTier};

use crate::{Error, Result};

#[derive(serde::Deserialize)]
struct Row {
    start: f64,
    end: f64,
    label: String,
}

/// Reads a tier named `name`. Rows may come in any order; errors name the
/// file line of the offending row.
pub fn parse_segments_csv(text: &str, name: &str) -> Result<SegmentTier> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["start", "end", "label"] {
        return Err(Error::Parse {
            line: 1,
            msg: "header must be start,end,label".into(),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row: Row = rec.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        if !(row.start.is_finite() && row.end.is_finite() && row.start < row.end) {
            return Err(Error::Parse {
                line,
                msg: format!("row needs start < end, got {} and {}", row.start, row.end),
            });
        }
        rows.push((line, Interval::new(row.start, row.end, row.label)));
    }
    rows.sort_by(|a, b| a.1.start.total_cmp(&b.1.start));
    for w in rows.windows(2) {
        if w[1].1.start < w[0].1.end {
            return Err(Error::Parse {
                line: w[1].0,
                msg: format!("row overlaps the row on line {}", w[0].0),
            });
        }
    }
    Ok(SegmentTier::new(name, rows.into_iter().map(|r| r.1).collect())?)
}

pub fn write_segments_csv(tier: &SegmentTier) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["start", "end", "label"])?;
    for iv in tier.intervals() {
        w.write_record([iv.start.to_string(), iv.end.to_string(), iv.label.clone()])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Format(e.to_string()))?).expect("csv output is utf-8"))
}
