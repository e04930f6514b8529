//! Tolerant tag/attribute lexer.
//!
//! Not an HTML parser: it never builds a tree and never fails. Unterminated
//! tags, quotes and comments simply run to the end of the input.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attr<'a> {
    /// Lowercased.
    pub name: String,
    /// Raw value, entities not decoded. Empty for bare attributes.
    pub value: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tag<'a> {
    /// Lowercased.
    pub name: String,
    pub closing: bool,
    pub self_closing: bool,
    pub attrs: Vec<Attr<'a>>,
    /// False when the input ended before `>`.
    pub terminated: bool,
}

impl Tag<'_> {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|a| a.name == name).map(|a| a.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item<'a> {
    Tag(Tag<'a>),
    Text(&'a str),
    /// Contents of `script`, `style`, `title` or `textarea`.
    RawText { tag: &'static str, text: &'a str },
    Comment(&'a str),
    /// `<!doctype ...>`, `<?xml ...?>` and the like.
    Declaration(&'a str),
}

const RAW_TEXT: [&str; 4] = ["script", "style", "title", "textarea"];

pub fn lex(html: &str) -> Lexer<'_> {
    Lexer {
        src: html,
        pos: 0,
        raw: None,
    }
}

pub struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    raw: Option<&'static str>,
}

impl<'a> Iterator for Lexer<'a> {
    type Item = Item<'a>;

    fn next(&mut self) -> Option<Item<'a>> {
        if self.pos >= self.src.len() {
            return None;
        }
        if let Some(tag) = self.raw.take() {
            let rest = &self.src[self.pos..];
            let end = find_closing(rest, tag).unwrap_or(rest.len());
            self.pos += end;
            if end > 0 {
                return Some(Item::RawText {
                    tag,
                    text: &rest[..end],
                });
            }
        }
        let rest = &self.src[self.pos..];
        let bytes = rest.as_bytes();
        if bytes[0] == b'<' {
            if let Some(body) = rest.strip_prefix("<!--") {
                let (text, used) = match body.find("-->") {
                    Some(i) => (&body[..i], 4 + i + 3),
                    None => (body, rest.len()),
                };
                self.pos += used;
                return Some(Item::Comment(text));
            }
            if rest.starts_with("<!") || rest.starts_with("<?") {
                let used = rest.find('>').map_or(rest.len(), |i| i + 1);
                self.pos += used;
                return Some(Item::Declaration(&rest[..used]));
            }
            if starts_markup(&bytes[1..]) {
                let (tag, used) = lex_tag(rest);
                self.pos += used;
                if !tag.closing && !tag.self_closing {
                    self.raw = RAW_TEXT.iter().copied().find(|t| *t == tag.name);
                }
                return Some(Item::Tag(tag));
            }
        }
        // text up to the next plausible markup
        let end = (1..rest.len())
            .find(|&i| bytes[i] == b'<' && starts_markup(&bytes[i + 1..]))
            .unwrap_or(rest.len());
        self.pos += end;
        Some(Item::Text(&rest[..end]))
    }
}

/// Whether the bytes after a `<` open a tag (comments and declarations
/// were handled before).
fn starts_markup(after: &[u8]) -> bool {
    match after.first() {
        Some(b'/') => after.get(1).is_some_and(u8::is_ascii_alphabetic),
        Some(b'!' | b'?') => true,
        Some(c) => c.is_ascii_alphabetic(),
        None => false,
    }
}

fn find_closing(hay: &str, tag: &str) -> Option<usize> {
    let lower = hay.as_bytes();
    let mut from = 0;
    while let Some(i) = hay[from..].find("</") {
        let at = from + i;
        let name = &lower[at + 2..];
        if name.len() >= tag.len() && name[..tag.len()].eq_ignore_ascii_case(tag.as_bytes()) {
            let boundary = name.get(tag.len()).copied();
            if boundary.is_none_or(|c| c == b'>' || c == b'/' || c.is_ascii_whitespace()) {
                return Some(at);
            }
        }
        from = at + 2;
    }
    None
}

/// Lexes one tag starting at `<`; returns it and the bytes consumed.
fn lex_tag(s: &str) -> (Tag<'_>, usize) {
    let b = s.as_bytes();
    let mut i = 1;
    let closing = b.get(i) == Some(&b'/');
    if closing {
        i += 1;
    }
    let name_start = i;
    while i < b.len() && !b[i].is_ascii_whitespace() && b[i] != b'>' && b[i] != b'/' {
        i += 1;
    }
    let name = s[name_start..i].to_ascii_lowercase();
    let mut attrs = Vec::new();
    let mut self_closing = false;
    loop {
        while i < b.len() && (b[i].is_ascii_whitespace() || b[i] == b'/') {
            self_closing = b[i] == b'/';
            i += 1;
        }
        if i >= b.len() {
            return (tag(name, closing, self_closing, attrs, false), i);
        }
        if b[i] == b'>' {
            return (tag(name, closing, self_closing, attrs, true), i + 1);
        }
        self_closing = false;
        let an = i;
        while i < b.len() && !b[i].is_ascii_whitespace() && !matches!(b[i], b'=' | b'>') {
            i += 1;
        }
        let attr_name = s[an..i].to_ascii_lowercase();
        let mut j = i;
        while j < b.len() && b[j].is_ascii_whitespace() {
            j += 1;
        }
        let mut value = "";
        if b.get(j) == Some(&b'=') {
            j += 1;
            while j < b.len() && b[j].is_ascii_whitespace() {
                j += 1;
            }
            match b.get(j) {
                Some(&q) if q == b'"' || q == b'\'' => {
                    let start = j + 1;
                    let end = s[start..].find(q as char).map_or(s.len(), |k| start + k);
                    value = &s[start..end];
                    i = (end + 1).min(s.len());
                }
                Some(_) => {
                    let start = j;
                    while j < b.len() && !b[j].is_ascii_whitespace() && b[j] != b'>' {
                        j += 1;
                    }
                    value = &s[start..j];
                    i = j;
                }
                None => i = j,
            }
        }
        attrs.push(Attr {
            name: attr_name,
            value,
        });
    }
}

fn tag<'a>(name: String, closing: bool, self_closing: bool, attrs: Vec<Attr<'a>>, terminated: bool) -> Tag<'a> {
    Tag {
        name,
        closing,
        self_closing,
        attrs,
        terminated,
    }
}

pub fn decode_entities(s: &str) -> String {
    html_escape::decode_html_entities(s).into_owned()
}

/// Text of the first `<title>`, entity-decoded and whitespace-collapsed.
pub fn extract_title(html: &str) -> String {
    let mut in_title = false;
    for item in lex(html) {
        match item {
            Item::Tag(t) if t.name == "title" && !t.closing => in_title = true,
            Item::RawText { tag: "title", text } if in_title => return collapse(&decode_entities(text)),
            Item::Tag(t) if t.name == "title" && t.closing && in_title => return String::new(),
            _ => {}
        }
    }
    String::new()
}

pub fn has_tag(html: &str, name: &str) -> bool {
    lex(html).any(|i| matches!(i, Item::Tag(t) if !t.closing && t.name == name))
}

/// Text a browser would render, minus scripts, styles and the title.
pub fn visible_text(html: &str) -> String {
    let mut out = String::new();
    for item in lex(html) {
        match item {
            Item::Text(t) | Item::RawText { tag: "textarea", text: t } => out.push_str(t),
            Item::Tag(_) => out.push(' '),
            _ => {}
        }
    }
    collapse(&decode_entities(&out))
}

pub fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
