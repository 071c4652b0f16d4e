//! Strict markup reader.
//!
//! Accepts the HTML subset watch pages are written in: quoted, unquoted and
//! valueless attributes, void elements, self-closing tags, comments and a
//! doctype. Unlike a browser it refuses to guess: a mismatched or missing
//! close tag is an error that names the byte offset.

use thiserror::Error;

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track", "wbr",
];
const RAW_TEXT: &[&str] = &["script", "style"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed markup at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected end of input inside {0}")]
    UnexpectedEof(&'static str),
    #[error("close tag </{found}> does not match open <{expected}>")]
    MismatchedClose { expected: String, found: String },
    #[error("close tag </{0}> with no open element")]
    UnmatchedClose(String),
    #[error("element <{tag}> opened at byte {opened_at} is never closed")]
    Unclosed { tag: String, opened_at: usize },
    #[error("'<' not followed by a tag name")]
    StrayLessThan,
    #[error("invalid attribute syntax")]
    BadAttribute,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub tag: String,
    pub attrs: Vec<(String, String)>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Byte offset of the opening `<`.
    pub offset: usize,
    /// Text directly inside this element, entities decoded.
    pub text: String,
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn has_attr(&self, name: &str) -> bool {
        self.attr(name).is_some()
    }
}

/// Parsed element tree. Index 0 is a synthetic document root; the rest are
/// in document order.
#[derive(Debug, Clone)]
pub struct Dom {
    nodes: Vec<Element>,
}

impl Dom {
    pub fn parse(src: &str) -> Result<Dom, ParseError> {
        Reader { src, pos: 0 }.run()
    }

    pub fn root(&self) -> &Element {
        &self.nodes[0]
    }

    pub fn get(&self, index: usize) -> &Element {
        &self.nodes[index]
    }

    /// Elements in document order, with their indices.
    pub fn elements(&self) -> impl Iterator<Item = (usize, &Element)> {
        self.nodes.iter().enumerate().skip(1)
    }

    pub fn parent_of(&self, index: usize) -> Option<&Element> {
        self.nodes[index].parent.filter(|p| *p != 0).map(|p| &self.nodes[p])
    }

    pub fn by_id(&self, id: &str) -> Option<&Element> {
        self.elements().map(|(_, e)| e).find(|e| e.attr("id") == Some(id))
    }

    /// Concatenated text of an element and its descendants.
    pub fn text_content(&self, index: usize) -> String {
        let mut out = self.nodes[index].text.clone();
        for &c in &self.nodes[index].children {
            out.push_str(&self.text_content(c));
        }
        out
    }
}

/// Tag name, attributes, and whether the tag closed itself.
type OpenTag = (String, Vec<(String, String)>, bool);

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl Reader<'_> {
    fn err(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { offset, kind }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn run(mut self) -> Result<Dom, ParseError> {
        let mut nodes = vec![Element {
            tag: "#document".into(),
            attrs: Vec::new(),
            parent: None,
            children: Vec::new(),
            offset: 0,
            text: String::new(),
        }];
        let mut stack = vec![0usize];
        while self.pos < self.src.len() {
            let top = *stack.last().unwrap();
            let Some(lt) = self.rest().find('<') else {
                nodes[top].text.push_str(&decode_entities(self.rest()));
                self.pos = self.src.len();
                break;
            };
            if lt > 0 {
                let text = &self.src[self.pos..self.pos + lt];
                nodes[top].text.push_str(&decode_entities(text));
                self.pos += lt;
            }
            let start = self.pos;
            let rest = self.rest();
            if let Some(body) = rest.strip_prefix("<!--") {
                let end = body
                    .find("-->")
                    .ok_or_else(|| self.err(start, ParseErrorKind::UnexpectedEof("comment")))?;
                self.pos += 4 + end + 3;
            } else if rest.starts_with("<!") || rest.starts_with("<?") {
                let end = rest
                    .find('>')
                    .ok_or_else(|| self.err(start, ParseErrorKind::UnexpectedEof("declaration")))?;
                self.pos += end + 1;
            } else if let Some(after) = rest.strip_prefix("</") {
                let end = after
                    .find('>')
                    .ok_or_else(|| self.err(start, ParseErrorKind::UnexpectedEof("close tag")))?;
                let name = after[..end].trim().to_ascii_lowercase();
                if stack.len() == 1 {
                    return Err(self.err(start, ParseErrorKind::UnmatchedClose(name)));
                }
                if nodes[top].tag != name {
                    return Err(self.err(
                        start,
                        ParseErrorKind::MismatchedClose {
                            expected: nodes[top].tag.clone(),
                            found: name,
                        },
                    ));
                }
                stack.pop();
                self.pos += 2 + end + 1;
            } else {
                let (tag, attrs, self_closing) = self.open_tag()?;
                let index = nodes.len();
                nodes[top].children.push(index);
                let is_void = VOID.contains(&tag.as_str());
                let raw = RAW_TEXT.contains(&tag.as_str());
                nodes.push(Element {
                    tag: tag.clone(),
                    attrs,
                    parent: Some(top),
                    children: Vec::new(),
                    offset: start,
                    text: String::new(),
                });
                if raw && !self_closing {
                    let close = format!("</{tag}");
                    let end = self
                        .rest()
                        .to_ascii_lowercase()
                        .find(&close)
                        .ok_or_else(|| self.err(start, ParseErrorKind::UnexpectedEof("raw text element")))?;
                    nodes[index].text.push_str(&self.src[self.pos..self.pos + end]);
                    self.pos += end;
                    stack.push(index);
                } else if !(is_void || self_closing) {
                    stack.push(index);
                }
            }
        }
        if stack.len() > 1 {
            let open = &nodes[*stack.last().unwrap()];
            return Err(self.err(
                self.src.len(),
                ParseErrorKind::Unclosed {
                    tag: open.tag.clone(),
                    opened_at: open.offset,
                },
            ));
        }
        Ok(Dom { nodes })
    }

    /// Reads `<name attr...>` starting at `self.pos`.
    fn open_tag(&mut self) -> Result<OpenTag, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos + 1;
        let name_start = i;
        while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'-' | b'_' | b':')) {
            i += 1;
        }
        if i == name_start || !bytes[name_start].is_ascii_alphabetic() {
            return Err(self.err(start, ParseErrorKind::StrayLessThan));
        }
        let tag = self.src[name_start..i].to_ascii_lowercase();
        let mut attrs: Vec<(String, String)> = Vec::new();
        let eof = |r: &Self| r.err(start, ParseErrorKind::UnexpectedEof("tag"));
        loop {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i >= bytes.len() {
                return Err(eof(self));
            }
            match bytes[i] {
                b'>' => {
                    self.pos = i + 1;
                    return Ok((tag, attrs, false));
                }
                b'/' => {
                    if bytes.get(i + 1) == Some(&b'>') {
                        self.pos = i + 2;
                        return Ok((tag, attrs, true));
                    }
                    return Err(self.err(i, ParseErrorKind::BadAttribute));
                }
                b'"' | b'\'' | b'=' | b'<' => return Err(self.err(i, ParseErrorKind::BadAttribute)),
                _ => {}
            }
            let an_start = i;
            while i < bytes.len()
                && !matches!(
                    bytes[i],
                    b' ' | b'\t' | b'\n' | b'\r' | b'=' | b'>' | b'/' | b'"' | b'\'' | b'<'
                )
            {
                i += 1;
            }
            let name = self.src[an_start..i].to_ascii_lowercase();
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            let mut value = String::new();
            if bytes.get(i) == Some(&b'=') {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                match bytes.get(i) {
                    None => return Err(eof(self)),
                    Some(&q @ (b'"' | b'\'')) => {
                        let close = self.src[i + 1..]
                            .find(q as char)
                            .ok_or_else(|| self.err(i, ParseErrorKind::UnexpectedEof("attribute value")))?;
                        value = decode_entities(&self.src[i + 1..i + 1 + close]);
                        i += close + 2;
                    }
                    Some(_) => {
                        let v_start = i;
                        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                            if matches!(bytes[i], b'"' | b'\'' | b'<' | b'=' | b'`') {
                                return Err(self.err(i, ParseErrorKind::BadAttribute));
                            }
                            i += 1;
                        }
                        value = decode_entities(&self.src[v_start..i]);
                    }
                }
            }
            if !attrs.iter().any(|(k, _)| *k == name) {
                attrs.push((name, value));
            }
        }
    }
}

/// Decodes the named entities used in markup plus numeric references.
/// Unknown entities are left as written.
pub fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest.find(';').filter(|&semi| semi <= 10).and_then(|semi| {
            let ent = &rest[1..semi];
            let c = match ent {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some('\u{a0}'),
                _ => ent
                    .strip_prefix("#x")
                    .or_else(|| ent.strip_prefix("#X"))
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .or_else(|| ent.strip_prefix('#').and_then(|d| d.parse().ok()))
                    .and_then(char::from_u32),
            };
            c.map(|c| (c, semi))
        });
        match decoded {
            Some((c, semi)) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_markup() {
        let dom = Dom::parse(
            "<!DOCTYPE html><html><head><meta charset=\"utf-8\"><title>A &amp; B</title></head>\
             <body><div id=\"x\" data-flag><a href='/watch?v=abcde&amp;t=1'>hi</a><br/></div></body></html>",
        )
        .unwrap();
        let a = dom.elements().find(|(_, e)| e.tag == "a").unwrap();
        assert_eq!(a.1.attr("href"), Some("/watch?v=abcde&t=1"));
        assert_eq!(dom.parent_of(a.0).unwrap().attr("id"), Some("x"));
        assert!(dom.by_id("x").unwrap().has_attr("data-flag"));
        let title = dom.elements().find(|(_, e)| e.tag == "title").unwrap();
        assert_eq!(dom.text_content(title.0), "A & B");
    }

    #[test]
    fn reports_offsets() {
        let src = "<div><span></div>";
        let e = Dom::parse(src).unwrap_err();
        assert_eq!(e.offset, 11);
        assert!(matches!(e.kind, ParseErrorKind::MismatchedClose { .. }));

        let e = Dom::parse("<div><p>text</p>").unwrap_err();
        assert_eq!(e.offset, 16);
        assert_eq!(
            e.kind,
            ParseErrorKind::Unclosed {
                tag: "div".into(),
                opened_at: 0
            }
        );

        let e = Dom::parse("<div>a < b</div>").unwrap_err();
        assert_eq!(e.offset, 7);
        assert_eq!(e.kind, ParseErrorKind::StrayLessThan);

        let e = Dom::parse("</div>").unwrap_err();
        assert_eq!(e.offset, 0);

        let e = Dom::parse("<a href=\"/watch?v=abc").unwrap_err();
        assert_eq!(e.offset, 8);

        let e = Dom::parse("<div><!-- open").unwrap_err();
        assert_eq!(e.offset, 5);
    }

    #[test]
    fn entities() {
        assert_eq!(decode_entities("a&lt;b&gt;c&#39;d&#x41;&bogus;&"), "a<b>c'dA&bogus;&");
    }

    #[test]
    fn raw_text_elements_skip_markup() {
        let dom = Dom::parse("<script>if (a < b) { x = '</div>'; }</script><p>ok</p>").unwrap();
        assert_eq!(dom.elements().count(), 2);
        assert_eq!(dom.get(1).text, "if (a < b) { x = '</div>'; }");
    }
}
