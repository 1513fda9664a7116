//! Praat TextGrid, long text format, interval tiers.

use std::fmt::Write;

use vgan_core::segment::{Interval, SegmentTier};

use crate::{Error, Result};

/// Parsed tiers plus notes about skipped content.
#[derive(Debug, Clone, PartialEq)]
pub struct TextGrid {
    pub tiers: Vec<SegmentTier>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
struct Entry {
    line: usize,
    key: String,
    value: Value,
}

#[derive(Debug)]
enum Value {
    None,
    Text(String),
    Bare(String),
}

/// Splits the file into `key = value` and `header:` entries. Quoted
/// values may span lines and escape quotes by doubling them.
fn entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    while let Some((no, raw)) = lines.next() {
        let l = raw.trim().trim_start_matches('\u{feff}');
        if l.is_empty() {
            continue;
        }
        let Some(eq) = l.find('=') else {
            out.push(Entry {
                line: no,
                key: l.trim_end_matches(':').trim().to_string(),
                value: Value::None,
            });
            continue;
        };
        let key = l[..eq].trim().to_string();
        let rest = l[eq + 1..].trim_start();
        if let Some(body) = rest.strip_prefix('"') {
            let mut buf = String::new();
            let mut chunk = body.to_string();
            loop {
                let mut closed = None;
                let mut chars = chunk.char_indices().peekable();
                while let Some((i, c)) = chars.next() {
                    if c == '"' {
                        if chars.peek().map(|&(_, n)| n) == Some('"') {
                            buf.push('"');
                            chars.next();
                        } else {
                            closed = Some(i);
                            break;
                        }
                    } else {
                        buf.push(c);
                    }
                }
                if closed.is_some() {
                    break;
                }
                match lines.next() {
                    Some((_, next)) => {
                        buf.push('\n');
                        chunk = next.to_string();
                    }
                    None => {
                        return Err(Error::Parse {
                            line: no,
                            msg: "unterminated string".into(),
                        })
                    }
                }
            }
            out.push(Entry {
                line: no,
                key,
                value: Value::Text(buf),
            });
        } else {
            out.push(Entry {
                line: no,
                key,
                value: Value::Bare(rest.trim().to_string()),
            });
        }
    }
    Ok(out)
}

struct Cursor {
    items: Vec<Entry>,
    pos: usize,
    last_line: usize,
}

impl Cursor {
    fn line(&self) -> usize {
        self.items.get(self.pos).map_or(self.last_line, |e| e.line)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            line: self.line(),
            msg: msg.into(),
        })
    }

    fn peek_key(&self) -> Option<&str> {
        self.items.get(self.pos).map(|e| e.key.as_str())
    }

    fn next(&mut self, key: &str) -> Result<&Entry> {
        match self.items.get(self.pos) {
            Some(e) if e.key == key => {
                self.pos += 1;
                Ok(&self.items[self.pos - 1])
            }
            Some(e) => {
                let found = e.key.clone();
                self.err(format!("expected '{key}', found '{found}'"))
            }
            None => self.err(format!("expected '{key}', found end of file")),
        }
    }

    fn text(&mut self, key: &str) -> Result<String> {
        let line = self.line();
        match &self.next(key)?.value {
            Value::Text(s) => Ok(s.clone()),
            _ => Err(Error::Parse {
                line,
                msg: format!("'{key}' must be a quoted string"),
            }),
        }
    }

    fn number(&mut self, key: &str) -> Result<f64> {
        let line = self.line();
        match &self.next(key)?.value {
            Value::Bare(s) => s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("'{key}' is not a number: {s}"),
            }),
            _ => Err(Error::Parse {
                line,
                msg: format!("'{key}' must be a number"),
            }),
        }
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let line = self.line();
        let v = self.number(key)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("'{key}' must be a non-negative integer"),
            });
        }
        Ok(v as usize)
    }

    fn header(&mut self, prefix: &str, index: usize) -> Result<()> {
        let want = format!("{prefix} [{index}]");
        match self.peek_key() {
            Some(k) if k.replace(' ', "") == want.replace(' ', "") => {
                self.pos += 1;
                Ok(())
            }
            Some(k) => {
                let k = k.to_string();
                self.err(format!("expected '{want}:', found '{k}' (declared count does not match content)"))
            }
            None => self.err(format!("expected '{want}:', found end of file (declared count does not match content)")),
        }
    }
}

/// Parses the long ("ooTextFile") format. Point tiers are skipped with a
/// warning.
pub fn parse_textgrid(text: &str) -> Result<TextGrid> {
    let items = entries(text)?;
    let last_line = text.lines().count();
    let mut c = Cursor {
        items,
        pos: 0,
        last_line,
    };
    if c.text("File type").ok().as_deref() != Some("ooTextFile") {
        return Err(Error::Parse {
            line: 1,
            msg: "malformed header: expected File type = \"ooTextFile\"".into(),
        });
    }
    if c.text("Object class").ok().as_deref() != Some("TextGrid") {
        return Err(Error::Parse {
            line: 2,
            msg: "malformed header: expected Object class = \"TextGrid\"".into(),
        });
    }
    c.number("xmin")?;
    c.number("xmax")?;
    let mut tiers = Vec::new();
    let mut warnings = Vec::new();
    match c.peek_key() {
        Some(k) if k.starts_with("tiers?") => c.pos += 1,
        _ => return c.err("expected 'tiers? <exists>' (short format is not supported)"),
    }
    let n = c.count("size")?;
    c.next("item []")?;
    for k in 1..=n {
        c.header("item", k)?;
        let class = c.text("class")?;
        let tier_line = c.line();
        let name = c.text("name")?;
        c.number("xmin")?;
        c.number("xmax")?;
        match class.as_str() {
            "IntervalTier" => {
                let m = c.count("intervals: size")?;
                let mut ivs = Vec::with_capacity(m);
                for j in 1..=m {
                    c.header("intervals", j)?;
                    let start = c.number("xmin")?;
                    let end = c.number("xmax")?;
                    let label = c.text("text")?;
                    ivs.push(Interval::new(start, end, label));
                }
                let tier = SegmentTier::new(name, ivs).map_err(|e| Error::Parse {
                    line: tier_line,
                    msg: e.to_string(),
                })?;
                tiers.push(tier);
            }
            "TextTier" => {
                let m = c.count("points: size")?;
                for j in 1..=m {
                    c.header("points", j)?;
                    match c.peek_key() {
                        Some("number") => c.number("number")?,
                        _ => c.number("time")?,
                    };
                    c.text("mark")?;
                }
                warnings.push(format!("skipped point tier '{name}'"));
            }
            other => return c.err(format!("unknown tier class '{other}'")),
        }
    }
    if c.pos < c.items.len() {
        return c.err(format!("content after the {n} declared tiers"));
    }
    Ok(TextGrid { tiers, warnings })
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Long-format text for `tiers`. Interval tiers are written as given,
/// without filling gaps.
pub fn serialize_textgrid(tiers: &[SegmentTier]) -> String {
    let bounds = |t: &SegmentTier| {
        let iv = t.intervals();
        (
            iv.first().map_or(0.0, |i| i.start.min(0.0)),
            iv.last().map_or(0.0, |i| i.end),
        )
    };
    let xmin = tiers.iter().map(|t| bounds(t).0).fold(0.0, f64::min);
    let xmax = tiers.iter().map(|t| bounds(t).1).fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(s, "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n");
    let _ = writeln!(s, "xmin = {xmin} \nxmax = {xmax} \ntiers? <exists> \nsize = {} \nitem []: ", tiers.len());
    for (k, t) in tiers.iter().enumerate() {
        let _ = writeln!(s, "    item [{}]:", k + 1);
        let _ = writeln!(s, "        class = \"IntervalTier\" ");
        let _ = writeln!(s, "        name = {} ", quote(t.name()));
        let _ = writeln!(s, "        xmin = {xmin} \n        xmax = {xmax} ");
        let _ = writeln!(s, "        intervals: size = {} ", t.len());
        for (j, iv) in t.intervals().iter().enumerate() {
            let _ = writeln!(s, "        intervals [{}]:", j + 1);
            let _ = writeln!(s, "            xmin = {} ", iv.start);
            let _ = writeln!(s, "            xmax = {} ", iv.end);
            let _ = writeln!(s, "            text = {} ", quote(&iv.label));
        }
    }
    s
}
