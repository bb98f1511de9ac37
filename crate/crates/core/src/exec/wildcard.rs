//! Shared wildcard matcher behind SQL LIKE and its regex rendering.
//!
//! LIKE patterns translate to anchored regexes whose only operators are `.`
//! and `.*` plus backslash-escaped literals; both executors route through
//! the same token form, so a pattern matches identically on either side.
//! Matching is case-sensitive.

#[derive(Debug, Clone, PartialEq)]
pub enum WildcardToken {
    Literal(char),
    /// `_` / `.`
    AnyOne,
    /// `%` / `.*`
    AnyMany,
}

pub fn tokens_from_like(pattern: &str) -> Vec<WildcardToken> {
    pattern
        .chars()
        .map(|c| match c {
            '%' => WildcardToken::AnyMany,
            '_' => WildcardToken::AnyOne,
            c => WildcardToken::Literal(c),
        })
        .collect()
}

/// Decode the regex sublanguage produced by the LIKE conversion. Returns
/// None for regex features outside it.
pub fn tokens_from_regex(pattern: &str) -> Option<Vec<WildcardToken>> {
    let mut out = Vec::new();
    let mut chars = pattern.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                let lit = chars.next()?;
                out.push(WildcardToken::Literal(lit));
            }
            '.' => {
                if chars.peek() == Some(&'*') {
                    chars.next();
                    out.push(WildcardToken::AnyMany);
                } else {
                    out.push(WildcardToken::AnyOne);
                }
            }
            '+' | '*' | '?' | '(' | ')' | '|' | '[' | ']' | '{' | '}' | '^' | '$' => return None,
            c => out.push(WildcardToken::Literal(c)),
        }
    }
    Some(out)
}

pub fn matches(tokens: &[WildcardToken], text: &str) -> bool {
    let chars: Vec<char> = text.chars().collect();
    match_at(tokens, &chars)
}

fn match_at(tokens: &[WildcardToken], text: &[char]) -> bool {
    match tokens.first() {
        None => text.is_empty(),
        Some(WildcardToken::Literal(c)) => {
            text.first() == Some(c) && match_at(&tokens[1..], &text[1..])
        }
        Some(WildcardToken::AnyOne) => !text.is_empty() && match_at(&tokens[1..], &text[1..]),
        Some(WildcardToken::AnyMany) => (0..=text.len())
            .any(|skip| match_at(&tokens[1..], &text[skip..])),
    }
}
