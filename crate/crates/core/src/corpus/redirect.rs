use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::html::{self, Item};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Redirect {
    None,
    MetaRefresh,
    ScriptRefresh,
}

impl Redirect {
    pub fn as_str(self) -> &'static str {
        match self {
            Redirect::None => "none",
            Redirect::MetaRefresh => "meta_refresh",
            Redirect::ScriptRefresh => "script_refresh",
        }
    }
}

/// Pages with more visible text than this are not redirect-only.
const MAX_REDIRECT_TEXT: usize = 160;

static LOCATION_CHANGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\blocation\s*(?:\.\s*(?:replace|assign)\s*\(|(?:\.\s*href\s*)?=[^=])").unwrap()
});

static FALLBACK_ANCHOR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)wait\s+a\s+(?:second|sec|moment|minute)|redirect|click\s+here|not\s+forwarded|continue\s+to").unwrap()
});

/// Heuristic: a page whose only job is to send the browser elsewhere.
pub fn detect_redirect(page: &str) -> Redirect {
    if html::visible_text(page).chars().count() > MAX_REDIRECT_TEXT {
        return Redirect::None;
    }
    let mut meta = false;
    let mut script = false;
    let mut anchor = false;
    let mut in_anchor: Option<String> = None;
    for item in html::lex(page) {
        match item {
            Item::Tag(t) if t.name == "meta" && !t.closing => {
                let refresh = t.attr("http-equiv").is_some_and(|v| v.trim().eq_ignore_ascii_case("refresh"));
                let target = t.attr("content").is_some_and(|c| c.to_ascii_lowercase().contains("url="));
                meta |= refresh && target;
            }
            Item::RawText { tag: "script", text } => script |= LOCATION_CHANGE.is_match(text),
            Item::Tag(t) if t.name == "a" && !t.closing && t.attr("href").is_some_and(|h| !h.trim().is_empty()) => {
                in_anchor = Some(String::new());
            }
            Item::Text(s) => {
                if let Some(buf) = in_anchor.as_mut() {
                    buf.push_str(s);
                }
            }
            Item::Tag(t) if t.name == "a" && t.closing => {
                if let Some(text) = in_anchor.take() {
                    anchor |= FALLBACK_ANCHOR.is_match(&html::decode_entities(&text));
                }
            }
            _ => {}
        }
    }
    if let Some(text) = in_anchor {
        anchor |= FALLBACK_ANCHOR.is_match(&text);
    }
    if meta {
        Redirect::MetaRefresh
    } else if script && anchor {
        Redirect::ScriptRefresh
    } else {
        Redirect::None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_refresh() {
        let page = "<meta http-equiv='refresh' content='0; url=https://target.onion/'>";
        assert_eq!(detect_redirect(page), Redirect::MetaRefresh);
        let upper = "<html><head><META HTTP-EQUIV=\"Refresh\" CONTENT=\"0;URL=http://x.onion\"></head><body>Redirecting...</body></html>";
        assert_eq!(detect_redirect(upper), Redirect::MetaRefresh);
        assert_eq!(detect_redirect("<meta http-equiv='refresh' content='30'>"), Redirect::None);
    }

    #[test]
    fn script_refresh() {
        let page = "<script>window.location.replace('http://target.onion/');</script><a href='http://target.onion/'>Wait a second...</a>";
        assert_eq!(detect_redirect(page), Redirect::ScriptRefresh);
        let no_anchor = "<script>window.location.replace('http://target.onion/');</script>";
        assert_eq!(detect_redirect(no_anchor), Redirect::None);
        let assign = "<script>location.href = 'http://t.onion'</script><a href='http://t.onion'>Click here</a>";
        assert_eq!(detect_redirect(assign), Redirect::ScriptRefresh);
        let compare = "<script>if (location == x) {}</script><a href='/'>click here</a>";
        assert_eq!(detect_redirect(compare), Redirect::None);
    }

    #[test]
    fn content_pages_are_not_redirects() {
        assert_eq!(detect_redirect("<p>Shop</p><a href='/a'>A</a> <a href='/b'>B</a>"), Redirect::None);
        let long = format!(
            "<meta http-equiv='refresh' content='5; url=/next'><p>{}</p>",
            "Plenty of real content here. ".repeat(10)
        );
        assert_eq!(detect_redirect(&long), Redirect::None);
        assert_eq!(detect_redirect(""), Redirect::None);
    }
}
