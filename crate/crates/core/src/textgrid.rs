//! Praat TextGrid reading and writing.
//!
//! The writer emits the long ("ooTextFile") text format. The reader accepts
//! both long and short text formats: it scans for quoted strings, `<flags>`
//! and free-standing numbers and ignores everything else, which is how both
//! layouts carry the same value stream. UTF-8 and UTF-16 (with BOM) input
//! is accepted. Point tiers are skipped.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TextGridError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("TextGrid is not valid UTF-8/UTF-16 text")]
    Encoding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSegment {
    pub label: String,
    pub start: f64,
    pub end: f64,
}

impl AlignedSegment {
    pub fn new(label: impl Into<String>, start: f64, end: f64) -> Self {
        Self {
            label: label.into(),
            start,
            end,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// A named sequence of labeled intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedTier {
    pub name: String,
    pub segments: Vec<AlignedSegment>,
}

impl AlignedTier {
    pub fn new(name: impl Into<String>, segments: Vec<AlignedSegment>) -> Self {
        Self {
            name: name.into(),
            segments,
        }
    }

    pub fn labels(&self) -> Vec<&str> {
        self.segments.iter().map(|s| s.label.as_str()).collect()
    }

    /// Interior boundary times (segment ends, excluding the last).
    pub fn boundaries(&self) -> Vec<f64> {
        let n = self.segments.len();
        self.segments
            .iter()
            .take(n.saturating_sub(1))
            .map(|s| s.end)
            .collect()
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    /// Segments start at 0, each starts where the previous ended, and the
    /// last ends at `duration`.
    pub fn is_contiguous(&self, duration: f64) -> bool {
        let mut cursor = 0.0;
        for seg in &self.segments {
            if seg.start != cursor || seg.end < seg.start {
                return false;
            }
            cursor = seg.end;
        }
        !self.segments.is_empty() && cursor == duration
    }
}

fn quote(text: &str) -> String {
    format!("\"{}\"", text.replace('"', "\"\""))
}

/// Serialize `tiers` as a long-format TextGrid spanning `[0, duration]`.
///
/// Times are written in the shortest decimal form that reads back as the
/// same `f64`.
pub fn write_textgrid(tiers: &[AlignedTier], duration: f64) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "File type = \"ooTextFile\"");
    let _ = writeln!(w, "Object class = \"TextGrid\"");
    let _ = writeln!(w);
    let _ = writeln!(w, "xmin = 0 ");
    let _ = writeln!(w, "xmax = {duration} ");
    if tiers.is_empty() {
        let _ = writeln!(w, "tiers? <absent> ");
        return out;
    }
    let _ = writeln!(w, "tiers? <exists> ");
    let _ = writeln!(w, "size = {} ", tiers.len());
    let _ = writeln!(w, "item []: ");
    for (i, tier) in tiers.iter().enumerate() {
        let xmin = tier.segments.first().map_or(0.0, |s| s.start.min(0.0));
        let xmax = tier.end().max(duration);
        let _ = writeln!(w, "    item [{}]:", i + 1);
        let _ = writeln!(w, "        class = \"IntervalTier\" ");
        let _ = writeln!(w, "        name = {} ", quote(&tier.name));
        let _ = writeln!(w, "        xmin = {xmin} ");
        let _ = writeln!(w, "        xmax = {xmax} ");
        let _ = writeln!(w, "        intervals: size = {} ", tier.segments.len());
        for (j, seg) in tier.segments.iter().enumerate() {
            let _ = writeln!(w, "        intervals [{}]:", j + 1);
            let _ = writeln!(w, "            xmin = {} ", seg.start);
            let _ = writeln!(w, "            xmax = {} ", seg.end);
            let _ = writeln!(w, "            text = {} ", quote(&seg.label));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Str(String),
    Num(f64),
    Flag(String),
}

struct Tokens {
    items: Vec<(usize, Token)>,
    pos: usize,
    last_line: usize,
}

fn tokenize(text: &str) -> Result<Tokens, TextGridError> {
    let mut items = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() || c == '\u{feff}' => {
                chars.next();
            }
            '!' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '"' => {
                let start = line;
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => {
                            if chars.peek() == Some(&'"') {
                                chars.next();
                                s.push('"');
                            } else {
                                break;
                            }
                        }
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            s.push(c);
                        }
                        None => {
                            return Err(TextGridError::Parse {
                                line: start,
                                message: "unterminated string".into(),
                            })
                        }
                    }
                }
                items.push((start, Token::Str(s)));
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '"' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                if word.starts_with('<') && word.ends_with('>') {
                    items.push((line, Token::Flag(word)));
                } else if let Ok(v) = word.parse::<f64>() {
                    items.push((line, Token::Num(v)));
                }
            }
        }
    }
    Ok(Tokens {
        items,
        pos: 0,
        last_line: line,
    })
}

impl Tokens {
    fn next(&mut self, what: &str) -> Result<(usize, Token), TextGridError> {
        let tok = self
            .items
            .get(self.pos)
            .cloned()
            .ok_or_else(|| TextGridError::Parse {
                line: self.last_line,
                message: format!("unexpected end of file; expected {what}"),
            })?;
        self.pos += 1;
        Ok(tok)
    }

    fn string(&mut self, what: &str) -> Result<String, TextGridError> {
        match self.next(what)? {
            (_, Token::Str(s)) => Ok(s),
            (line, other) => Err(TextGridError::Parse {
                line,
                message: format!("expected {what} string, found {other:?}"),
            }),
        }
    }

    fn number(&mut self, what: &str) -> Result<(usize, f64), TextGridError> {
        match self.next(what)? {
            (line, Token::Num(v)) => Ok((line, v)),
            (line, other) => Err(TextGridError::Parse {
                line,
                message: format!("expected {what}, found {other:?}"),
            }),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize, TextGridError> {
        let (line, v) = self.number(what)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(TextGridError::Parse {
                line,
                message: format!("{what} must be a non-negative integer, found {v}"),
            });
        }
        Ok(v as usize)
    }
}

/// Decode raw bytes (UTF-8, or UTF-16 with a byte-order mark) and parse.
pub fn read_textgrid_bytes(bytes: &[u8]) -> Result<Vec<AlignedTier>, TextGridError> {
    let text = match bytes {
        [0xFF, 0xFE, rest @ ..] => decode_utf16(rest, u16::from_le_bytes)?,
        [0xFE, 0xFF, rest @ ..] => decode_utf16(rest, u16::from_be_bytes)?,
        _ => String::from_utf8(bytes.to_vec()).map_err(|_| TextGridError::Encoding)?,
    };
    read_textgrid(&text)
}

fn decode_utf16(bytes: &[u8], f: fn([u8; 2]) -> u16) -> Result<String, TextGridError> {
    if !bytes.len().is_multiple_of(2) {
        return Err(TextGridError::Encoding);
    }
    let units: Vec<u16> = bytes.chunks_exact(2).map(|c| f([c[0], c[1]])).collect();
    String::from_utf16(&units).map_err(|_| TextGridError::Encoding)
}

/// Parse a long- or short-format text TextGrid. Interval tiers are returned
/// in file order; point tiers are skipped.
pub fn read_textgrid(text: &str) -> Result<Vec<AlignedTier>, TextGridError> {
    let mut toks = tokenize(text)?;
    let file_type = toks.string("file type")?;
    if file_type != "ooTextFile" {
        return Err(TextGridError::Parse {
            line: 1,
            message: format!("unsupported file type {file_type:?}"),
        });
    }
    let class = toks.string("object class")?;
    if class != "TextGrid" {
        return Err(TextGridError::Parse {
            line: 2,
            message: format!("object class is {class:?}, not TextGrid"),
        });
    }
    toks.number("xmin")?;
    toks.number("xmax")?;
    match toks.next("tiers flag")? {
        (_, Token::Flag(f)) if f == "<exists>" => {}
        (_, Token::Flag(f)) if f == "<absent>" => return Ok(Vec::new()),
        (line, other) => {
            return Err(TextGridError::Parse {
                line,
                message: format!("expected <exists> or <absent>, found {other:?}"),
            })
        }
    }
    let size = toks.count("tier count")?;
    let mut tiers = Vec::with_capacity(size);
    for _ in 0..size {
        let class = toks.string("tier class")?;
        let name = toks.string("tier name")?;
        toks.number("tier xmin")?;
        toks.number("tier xmax")?;
        let n = toks.count("item count")?;
        match class.as_str() {
            "IntervalTier" => {
                let mut segments = Vec::with_capacity(n);
                for _ in 0..n {
                    let (_, start) = toks.number("interval xmin")?;
                    let (_, end) = toks.number("interval xmax")?;
                    let label = toks.string("interval text")?;
                    segments.push(AlignedSegment { label, start, end });
                }
                tiers.push(AlignedTier { name, segments });
            }
            "TextTier" => {
                for _ in 0..n {
                    toks.number("point time")?;
                    toks.string("point mark")?;
                }
            }
            other => {
                return Err(TextGridError::Parse {
                    line: toks.items[toks.pos - 1].0,
                    message: format!("unknown tier class {other:?}"),
                })
            }
        }
    }
    Ok(tiers)
}
