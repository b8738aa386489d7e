//! Lenient tag-soup tokenizer.
//!
//! Only start tags, their attributes and raw-text element bodies are reported.
//! Comments, doctypes, processing instructions and end tags are skipped. A tag
//! still open at end of input is dropped.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StartTag {
    /// Lowercase tag name.
    pub name: String,
    /// Lowercase attribute names with entity-decoded values, in source order.
    pub attrs: Vec<(String, String)>,
    /// Body text for `script`, `style`, `textarea` and `title`.
    pub raw_text: Option<String>,
}

impl StartTag {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }
}

const RAW_TEXT: &[&str] = &["script", "style", "textarea", "title"];

fn find_ci(hay: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || from >= hay.len() {
        return None;
    }
    hay[from..]
        .windows(needle.len())
        .position(|w| w.eq_ignore_ascii_case(needle))
        .map(|p| p + from)
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    s.replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&apos;", "'")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&")
}

fn is_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | b'\x0c')
}

/// Parses attributes starting at `i` (just after the tag name). Returns the
/// attributes and the index just past `>`, or `None` if input ends first.
fn parse_attrs(html: &str, mut i: usize) -> Option<(Vec<(String, String)>, usize)> {
    let b = html.as_bytes();
    let mut attrs = Vec::new();
    loop {
        while i < b.len() && (is_space(b[i]) || b[i] == b'/') {
            i += 1;
        }
        if i >= b.len() {
            return None;
        }
        if b[i] == b'>' {
            return Some((attrs, i + 1));
        }
        let start = i;
        while i < b.len() && !is_space(b[i]) && !matches!(b[i], b'=' | b'>' | b'/') {
            i += 1;
        }
        let name = html[start..i].to_ascii_lowercase();
        while i < b.len() && is_space(b[i]) {
            i += 1;
        }
        let mut value = String::new();
        if i < b.len() && b[i] == b'=' {
            i += 1;
            while i < b.len() && is_space(b[i]) {
                i += 1;
            }
            if i >= b.len() {
                return None;
            }
            if b[i] == b'"' || b[i] == b'\'' {
                let quote = b[i];
                let vstart = i + 1;
                let end = b[vstart..].iter().position(|&c| c == quote)? + vstart;
                value = decode_entities(&html[vstart..end]);
                i = end + 1;
            } else {
                let vstart = i;
                while i < b.len() && !is_space(b[i]) && b[i] != b'>' {
                    i += 1;
                }
                value = decode_entities(&html[vstart..i]);
            }
        }
        if !name.is_empty() {
            attrs.push((name, value));
        }
    }
}

pub fn scan(html: &str) -> Vec<StartTag> {
    let b = html.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if b[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &b[i..];
        if rest.starts_with(b"<!--") {
            match find_ci(b, i + 4, b"-->") {
                Some(end) => i = end + 3,
                None => break,
            }
            continue;
        }
        if rest.len() > 1 && matches!(rest[1], b'!' | b'?' | b'/') {
            match b[i + 1..].iter().position(|&c| c == b'>') {
                Some(p) => i = i + 1 + p + 1,
                None => break,
            }
            continue;
        }
        if rest.len() < 2 || !rest[1].is_ascii_alphabetic() {
            i += 1;
            continue;
        }
        let name_start = i + 1;
        let mut j = name_start;
        while j < b.len() && (b[j].is_ascii_alphanumeric() || b[j] == b'-' || b[j] == b':') {
            j += 1;
        }
        let name = html[name_start..j].to_ascii_lowercase();
        let Some((attrs, after)) = parse_attrs(html, j) else {
            break;
        };
        i = after;
        let mut raw_text = None;
        if RAW_TEXT.contains(&name.as_str()) {
            let close = format!("</{name}");
            let end = find_ci(b, i, close.as_bytes()).unwrap_or(b.len());
            raw_text = Some(html[i..end].to_string());
            i = match b[end..].iter().position(|&c| c == b'>') {
                Some(p) => end + p + 1,
                None => b.len(),
            };
        }
        out.push(StartTag {
            name,
            attrs,
            raw_text,
        });
    }
    out
}
