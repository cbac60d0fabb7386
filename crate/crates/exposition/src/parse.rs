//! Exposition parser. Tolerant of unknown comments, strict on sample lines.

use thiserror::Error;

use crate::{
    parse_value, ExpositionDocument, FamilyKind, MetricFamily, Sample,
};

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    fn at(line: usize, reason: impl Into<String>) -> Self {
        Self {
            line,
            reason: reason.into(),
        }
    }
}

fn is_name_char(c: char, first: bool) -> bool {
    if first {
        c.is_ascii_alphabetic() || c == '_' || c == ':'
    } else {
        c.is_ascii_alphanumeric() || c == '_' || c == ':'
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if is_name_char(c, true) => {}
        _ => return false,
    }
    chars.all(|c| is_name_char(c, false))
}

struct DocumentBuilder {
    families: Vec<MetricFamily>,
}

impl DocumentBuilder {
    fn family_mut(&mut self, name: &str) -> &mut MetricFamily {
        if let Some(idx) = self.families.iter().position(|f| f.name == name) {
            return &mut self.families[idx];
        }
        self.families.push(MetricFamily::new(name));
        self.families.last_mut().unwrap()
    }

    fn attach_sample(&mut self, sample: Sample) {
        // Exact family name first, then histogram/summary suffix owners,
        // otherwise an implicit untyped family.
        if let Some(idx) = self.families.iter().position(|f| f.name == sample.name) {
            self.families[idx].samples.push(sample);
            return;
        }
        if let Some(idx) = self.families.iter().position(|f| f.owns_sample(&sample.name)) {
            self.families[idx].samples.push(sample);
            return;
        }
        let name = sample.name.clone();
        self.family_mut(&name).samples.push(sample);
    }
}

/// Parses label pairs from the inside of `{...}`. Returns the consumed byte
/// length (including the closing brace) and the pairs, sorted by key.
fn parse_labels(rest: &str, line_no: usize) -> Result<(usize, Vec<(String, String)>), ParseError> {
    let mut labels: Vec<(String, String)> = Vec::new();
    let mut chars = rest.char_indices().peekable();
    loop {
        // Skip whitespace and detect the closing brace or a key.
        while let Some((_, c)) = chars.peek() {
            if *c == ' ' || *c == ',' {
                chars.next();
            } else {
                break;
            }
        }
        match chars.peek() {
            Some((i, '}')) => {
                let end = *i + 1;
                labels.sort_by(|a, b| a.0.cmp(&b.0));
                return Ok((end, labels));
            }
            Some(_) => {}
            None => return Err(ParseError::at(line_no, "unbalanced braces in labels")),
        }
        // Key.
        let key_start = chars.peek().unwrap().0;
        let mut key_end = key_start;
        while let Some((i, c)) = chars.peek() {
            if is_name_char(*c, *i == key_start) {
                key_end = *i + c.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        let key = &rest[key_start..key_end];
        if key.is_empty() {
            return Err(ParseError::at(line_no, "empty label key"));
        }
        match chars.next() {
            Some((_, '=')) => {}
            _ => return Err(ParseError::at(line_no, format!("expected '=' after label key {key:?}"))),
        }
        match chars.next() {
            Some((_, '"')) => {}
            _ => return Err(ParseError::at(line_no, "label value must be quoted")),
        }
        let mut value = String::new();
        loop {
            match chars.next() {
                Some((_, '\\')) => match chars.next() {
                    Some((_, '\\')) => value.push('\\'),
                    Some((_, '"')) => value.push('"'),
                    Some((_, 'n')) => value.push('\n'),
                    Some((_, other)) => {
                        value.push('\\');
                        value.push(other);
                    }
                    None => return Err(ParseError::at(line_no, "dangling escape in label value")),
                },
                Some((_, '"')) => break,
                Some((_, c)) => value.push(c),
                None => return Err(ParseError::at(line_no, "unterminated label value")),
            }
        }
        labels.push((key.to_string(), value));
    }
}

fn parse_sample_line(line: &str, line_no: usize) -> Result<Sample, ParseError> {
    let name_end = line
        .char_indices()
        .take_while(|(i, c)| is_name_char(*c, *i == 0))
        .map(|(i, c)| i + c.len_utf8())
        .last()
        .unwrap_or(0);
    let name = &line[..name_end];
    if !valid_name(name) {
        return Err(ParseError::at(line_no, format!("invalid metric name in {line:?}")));
    }
    let mut rest = &line[name_end..];

    let labels = if let Some(stripped) = rest.strip_prefix('{') {
        let (consumed, labels) = parse_labels(stripped, line_no)?;
        rest = &stripped[consumed..];
        labels
    } else {
        Vec::new()
    };

    let mut tokens = rest.split_whitespace();
    let value_token = tokens
        .next()
        .ok_or_else(|| ParseError::at(line_no, "missing sample value"))?;
    let value = parse_value(value_token)
        .ok_or_else(|| ParseError::at(line_no, format!("bad sample value {value_token:?}")))?;
    let timestamp = match tokens.next() {
        Some(ts) => Some(ts.parse::<i64>().map_err(|_| {
            ParseError::at(line_no, format!("bad sample timestamp {ts:?}"))
        })?),
        None => None,
    };
    if tokens.next().is_some() {
        return Err(ParseError::at(line_no, "trailing tokens after timestamp"));
    }
    Ok(Sample {
        name: name.to_string(),
        labels,
        value,
        timestamp,
    })
}

/// Parses an exposition document. `raw_size_bytes` of the result is the
/// canonical re-encoding length, so a keep-all encode reports ratio zero.
pub fn parse_exposition(input: &str) -> Result<ExpositionDocument, ParseError> {
    let mut builder = DocumentBuilder {
        families: Vec::new(),
    };
    for (idx, raw_line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim_start();
            if let Some(rest) = comment.strip_prefix("HELP ") {
                let mut parts = rest.splitn(2, ' ');
                let name = parts.next().unwrap_or("");
                if valid_name(name) {
                    let help = parts.next().unwrap_or("").to_string();
                    builder.family_mut(name).help = Some(help);
                }
            } else if let Some(rest) = comment.strip_prefix("TYPE ") {
                let mut parts = rest.split_whitespace();
                if let Some(name) = parts.next() {
                    if valid_name(name) {
                        let kind = FamilyKind::parse(parts.next().unwrap_or(""));
                        let family = builder.family_mut(name);
                        family.kind = kind;
                        family.kind_declared = true;
                    }
                }
            }
            // Every other comment line is ignored.
            continue;
        }
        builder.attach_sample(parse_sample_line(line, line_no)?);
    }
    let mut doc = ExpositionDocument {
        families: builder.families,
        raw_size_bytes: 0,
    };
    doc.raw_size_bytes = crate::reduce::encode_exposition(&doc, &crate::ReductionPolicy::keep_all()).len();
    Ok(doc)
}
