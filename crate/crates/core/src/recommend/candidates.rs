use super::RecommendError;

/// A data row that could not be used, with its 1-based starting line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsvParse {
    pub rows: Vec<(String, String)>,
    pub rejected: Vec<RejectedRow>,
}

struct Record {
    line: usize,
    fields: Vec<String>,
    unterminated: bool,
}

/// Split CSV text into records. Quoted fields may span lines and escape
/// quotes by doubling (or with a backslash); whitespace before an opening
/// quote is allowed.
fn split_records(text: &str) -> Vec<Record> {
    let chars: Vec<char> = text.chars().collect();
    let mut records = Vec::new();
    let mut i = 0;
    let mut line = 1;
    while i < chars.len() {
        let start_line = line;
        let mut fields = Vec::new();
        let mut unterminated = false;
        loop {
            // leading blanks
            let mut j = i;
            while j < chars.len() && (chars[j] == ' ' || chars[j] == '\t') {
                j += 1;
            }
            let mut field = String::new();
            if j < chars.len() && chars[j] == '"' {
                i = j + 1;
                loop {
                    match chars.get(i) {
                        None => {
                            unterminated = true;
                            break;
                        }
                        Some('"') if chars.get(i + 1) == Some(&'"') => {
                            field.push('"');
                            i += 2;
                        }
                        Some('\\') if chars.get(i + 1) == Some(&'"') => {
                            field.push('"');
                            i += 2;
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some(&c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            field.push(c);
                            i += 1;
                        }
                    }
                }
                // anything between the closing quote and the separator is kept verbatim
                while let Some(&c) = chars.get(i) {
                    if c == ',' || c == '\n' || c == '\r' {
                        break;
                    }
                    field.push(c);
                    i += 1;
                }
            } else {
                while let Some(&c) = chars.get(i) {
                    if c == ',' || c == '\n' || c == '\r' {
                        break;
                    }
                    field.push(c);
                    i += 1;
                }
            }
            fields.push(field);
            match chars.get(i) {
                Some(',') => {
                    i += 1;
                }
                Some('\r') => {
                    i += 1;
                    if chars.get(i) == Some(&'\n') {
                        i += 1;
                    }
                    line += 1;
                    break;
                }
                Some('\n') => {
                    i += 1;
                    line += 1;
                    break;
                }
                _ => break,
            }
        }
        records.push(Record { line: start_line, fields, unterminated });
    }
    records
}

/// Content of the first fenced block, or the whole text when there is none.
fn strip_fences(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let Some(open) = lines.iter().position(|l| l.trim_start().starts_with("```")) else {
        return text.to_string();
    };
    let close = lines[open + 1..]
        .iter()
        .position(|l| l.trim_start().starts_with("```"))
        .map(|p| open + 1 + p)
        .unwrap_or(lines.len());
    lines[open + 1..close].join("\n")
}

fn is_header(fields: &[String]) -> bool {
    let norm = |s: &str| s.trim().trim_matches('*').trim().to_lowercase();
    fields.len() == 2 && norm(&fields[0]) == "object" && norm(&fields[1]) == "description"
}

/// Longest accepted object name, in characters.
pub const MAX_NAME_CHARS: usize = 100;

/// Drop list numbering, bullets and emphasis around an object name.
fn clean_name(raw: &str) -> &str {
    let mut name = raw.trim();
    let digits = name.len() - name.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 {
        let rest = &name[digits..];
        if let Some(r) = rest.strip_prefix(['.', ')']) {
            if r.starts_with(char::is_whitespace) {
                name = r.trim_start();
            }
        }
    }
    for bullet in ["- ", "* ", "\u{2022} "] {
        if let Some(r) = name.strip_prefix(bullet) {
            name = r.trim_start();
        }
    }
    for mark in ["**", "__", "*", "_", "`"] {
        if let Some(r) = name.strip_prefix(mark).and_then(|r| r.strip_suffix(mark)) {
            name = r.trim();
        }
    }
    name
}

/// Why `name` cannot be an object name, if it cannot.
fn name_problem(name: &str) -> Option<String> {
    if name.contains(['|', '{', '}', '[', ']', '<', '>']) {
        return Some("object name contains table or markup characters".into());
    }
    let n = name.chars().count();
    if n > MAX_NAME_CHARS {
        return Some(format!("object name is {n} characters long"));
    }
    None
}

/// Parse with full diagnostics. Never fails; see [`parse_candidate_csv`].
pub fn parse_candidate_csv_detailed(text: &str) -> CsvParse {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let body = strip_fences(text);
    let records: Vec<Record> =
        split_records(&body).into_iter().filter(|r| r.fields.iter().any(|f| !f.trim().is_empty())).collect();
    // anything before a header row is preamble
    let start = records.iter().position(|r| is_header(&r.fields)).map(|p| p + 1).unwrap_or(0);

    let mut out = CsvParse::default();
    for r in &records[start..] {
        let reject = |reason: String| RejectedRow { line: r.line, reason };
        // a trailing separator leaves empty fields behind
        let mut fields: &[String] = &r.fields;
        while fields.len() > 2 && fields.last().is_some_and(|f| f.trim().is_empty()) {
            fields = &fields[..fields.len() - 1];
        }
        if r.unterminated {
            out.rejected.push(reject("unterminated quoted field".into()));
        } else if fields.len() != 2 {
            out.rejected.push(reject(format!("expected 2 fields, found {}", fields.len())));
        } else if is_header(fields) {
            out.rejected.push(reject("repeated header".into()));
        } else {
            let name = clean_name(&fields[0]);
            let desc = fields[1].trim();
            if name.is_empty() || desc.is_empty() {
                out.rejected.push(reject("empty object name or description".into()));
            } else if let Some(problem) = name_problem(name) {
                out.rejected.push(reject(problem));
            } else {
                out.rows.push((name.to_string(), desc.to_string()));
            }
        }
    }
    out
}

/// Tolerant parse of an `Object,Description` CSV reply.
///
/// Code fences are stripped, a header row (and any prose before it) is
/// skipped, and rows without exactly two fields are dropped. Fails only when
/// no usable row remains.
pub fn parse_candidate_csv(text: &str) -> Result<Vec<(String, String)>, RecommendError> {
    let parsed = parse_candidate_csv_detailed(text);
    if parsed.rows.is_empty() {
        let detail = match parsed.rejected.first() {
            Some(r) => format!("no usable rows (line {}: {})", r.line, r.reason),
            None => "no usable rows".to_string(),
        };
        return Err(RecommendError::MalformedResponse(detail));
    }
    for r in &parsed.rejected {
        log::debug!("candidate csv: skipped line {}: {}", r.line, r.reason);
    }
    Ok(parsed.rows)
}

/// Header plus fully quoted rows; the inverse of [`parse_candidate_csv`].
pub fn serialize_candidates(rows: &[(String, String)]) -> String {
    let q = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
    let mut out = String::from("Object,Description\n");
    for (name, desc) in rows {
        out.push_str(&q(name));
        out.push(',');
        out.push_str(&q(desc));
        out.push('\n');
    }
    out
}
