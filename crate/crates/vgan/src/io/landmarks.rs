//! `frame,t,x0,y0,...` landmark tables.

use vgan_core::lip::{LandmarkFrame, LandmarkSequence, LipIndexMap};

use crate::{Error, Result};

/// Reads a landmark table. Without a configured rate the frame rate is
/// `(count - 1) / (t_last - t_first)`.
pub fn read_landmarks_csv(text: &str, map: &LipIndexMap, fps: Option<f64>) -> Result<LandmarkSequence> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let cols = headers.len();
    if cols < 4 || &headers[0] != "frame" || &headers[1] != "t" || (cols - 2) % 2 != 0 {
        return Err(Error::Parse {
            line: 1,
            msg: "header must be frame,t,x0,y0,...,xN,yN".into(),
        });
    }
    for k in 0..(cols - 2) / 2 {
        if headers[2 + 2 * k] != *format!("x{k}") || headers[3 + 2 * k] != *format!("y{k}") {
            return Err(Error::Parse {
                line: 1,
                msg: format!("column {} must be x{k}, then y{k}", 2 + 2 * k),
            });
        }
    }
    let mut frames: Vec<LandmarkFrame> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != cols {
            return Err(Error::Parse {
                line,
                msg: format!("ragged row: {} fields, header has {cols}", rec.len()),
            });
        }
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                line,
                msg: format!("field {} ('{}') is not a finite number", &headers[i], &rec[i]),
            })
        };
        let t = num(1)?;
        if let Some(prev) = frames.last() {
            if t.partial_cmp(&prev.t) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::Parse {
                    line,
                    msg: format!("time {t} not after previous {}", prev.t),
                });
            }
        }
        let points = (0..(cols - 2) / 2)
            .map(|k| Ok((num(2 + 2 * k)?, num(3 + 2 * k)?)))
            .collect::<Result<Vec<_>>>()?;
        frames.push(LandmarkFrame { t, points });
    }
    if frames.len() < 2 {
        return Err(Error::Parse {
            line: 2,
            msg: format!("{} frame(s); velocity features need at least 2", frames.len()),
        });
    }
    let fps = fps.unwrap_or_else(|| (frames.len() - 1) as f64 / (frames[frames.len() - 1].t - frames[0].t));
    Ok(LandmarkSequence::new(fps, frames, map.clone())?)
}

pub fn write_landmarks_csv(seq: &LandmarkSequence) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let n = seq.point_count();
    let mut header = vec!["frame".to_string(), "t".to_string()];
    for k in 0..n {
        header.push(format!("x{k}"));
        header.push(format!("y{k}"));
    }
    w.write_record(&header)?;
    for (i, f) in seq.frames().iter().enumerate() {
        let mut row = vec![i.to_string(), f.t.to_string()];
        for &(x, y) in &f.points {
            row.push(x.to_string());
            row.push(y.to_string());
        }
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Format(e.to_string()))?).expect("csv output is utf-8"))
}
