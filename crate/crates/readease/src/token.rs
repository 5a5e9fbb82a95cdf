//! Whitespace tokenization with sigil-aware token classes.
//!
//! Raw tokens are produced by splitting on Unicode whitespace. Class is
//! decided by inspecting the raw token *before* any punctuation stripping:
//! a leading `@` marks a mention, a leading `#` a hashtag (the sigil is
//! dropped from the token text), and a case-insensitive `http` prefix a URL
//! (kept verbatim). Everything else is a word, trimmed of leading and
//! trailing non-alphanumeric characters. Tokens whose text ends up empty are
//! dropped, so tokenization is total: any input yields a (possibly empty)
//! token list.

/// Classification of a raw whitespace-delimited token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenClass {
    Word,
    Mention,
    Url,
    Hashtag,
}

/// A classified token. `text` is never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub class: TokenClass,
}

/// Splits `text` into classified tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for_each_token(text, |class, text| {
        out.push(Token {
            text: text.to_owned(),
            class,
        });
    });
    out
}

/// Zero-allocation tokenization: invokes `f` once per kept token, in order.
/// Scoring uses this directly so the hot path never builds token vectors.
pub(crate) fn for_each_token(text: &str, mut f: impl FnMut(TokenClass, &str)) {
    for raw in text.split_whitespace() {
        let (class, kept) = if let Some(rest) = raw.strip_prefix('@') {
            (TokenClass::Mention, rest)
        } else if let Some(rest) = raw.strip_prefix('#') {
            (TokenClass::Hashtag, rest)
        } else if starts_with_http(raw) {
            (TokenClass::Url, raw)
        } else {
            (
                TokenClass::Word,
                raw.trim_matches(|c: char| !c.is_alphanumeric()),
            )
        };
        if !kept.is_empty() {
            f(class, kept);
        }
    }
}

fn starts_with_http(raw: &str) -> bool {
    raw.len() >= 4 && raw.as_bytes()[..4].eq_ignore_ascii_case(b"http")
}
