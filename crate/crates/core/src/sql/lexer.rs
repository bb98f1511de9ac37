//! Token stream for the SQL parser. Keywords are recognized
//! case-insensitively by the parser; the lexer only distinguishes token
//! shapes. String literals use single quotes with `''` escaping.

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    /// Bare identifier or keyword.
    Ident(String),
    /// Identifier that was quoted (`"x"`, `` `x` ``, `[x]`); never a keyword.
    QuotedIdent(String),
    Int(i64),
    Float(f64),
    Str(String),
    Symbol(Sym),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sym {
    LParen,
    RParen,
    Comma,
    Dot,
    Star,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Semicolon,
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::Ident(s) | Token::QuotedIdent(s) => format!("`{s}`"),
            Token::Int(i) => format!("`{i}`"),
            Token::Float(f) => format!("`{f}`"),
            Token::Str(s) => format!("'{s}'"),
            Token::Symbol(sym) => format!("`{}`", sym.text()),
        }
    }
}

impl Sym {
    pub fn text(self) -> &'static str {
        match self {
            Sym::LParen => "(",
            Sym::RParen => ")",
            Sym::Comma => ",",
            Sym::Dot => ".",
            Sym::Star => "*",
            Sym::Eq => "=",
            Sym::Ne => "!=",
            Sym::Lt => "<",
            Sym::Le => "<=",
            Sym::Gt => ">",
            Sym::Ge => ">=",
            Sym::Semicolon => ";",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub token: Token,
    pub offset: usize,
}

/// Tokenize. On failure returns the offending byte offset and a message.
pub fn tokenize(text: &str) -> Result<Vec<Spanned>, (usize, String)> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    while i < b.len() {
        let start = i;
        let c = b[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'-' if i + 1 < b.len() && b[i + 1] == b'-' => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    if i >= b.len() {
                        return Err((start, "unterminated string literal".into()));
                    }
                    if b[i] == b'\'' {
                        if i + 1 < b.len() && b[i + 1] == b'\'' {
                            s.push('\'');
                            i += 2;
                            continue;
                        }
                        i += 1;
                        break;
                    }
                    s.push(b[i] as char);
                    i += 1;
                }
                out.push(Spanned {
                    token: Token::Str(s),
                    offset: start,
                });
            }
            b'"' | b'`' => {
                let quote = c;
                let mut s = String::new();
                i += 1;
                while i < b.len() && b[i] != quote {
                    s.push(b[i] as char);
                    i += 1;
                }
                if i >= b.len() {
                    return Err((start, "unterminated quoted identifier".into()));
                }
                i += 1;
                out.push(Spanned {
                    token: Token::QuotedIdent(s),
                    offset: start,
                });
            }
            b'[' => {
                let mut s = String::new();
                i += 1;
                while i < b.len() && b[i] != b']' {
                    s.push(b[i] as char);
                    i += 1;
                }
                if i >= b.len() {
                    return Err((start, "unterminated [identifier]".into()));
                }
                i += 1;
                out.push(Spanned {
                    token: Token::QuotedIdent(s),
                    offset: start,
                });
            }
            b'(' => push_sym(&mut out, Sym::LParen, start, &mut i),
            b')' => push_sym(&mut out, Sym::RParen, start, &mut i),
            b',' => push_sym(&mut out, Sym::Comma, start, &mut i),
            b'.' if !(i + 1 < b.len() && b[i + 1].is_ascii_digit()) => {
                push_sym(&mut out, Sym::Dot, start, &mut i)
            }
            b'*' => push_sym(&mut out, Sym::Star, start, &mut i),
            b';' => push_sym(&mut out, Sym::Semicolon, start, &mut i),
            b'=' => push_sym(&mut out, Sym::Eq, start, &mut i),
            b'!' if i + 1 < b.len() && b[i + 1] == b'=' => {
                i += 1;
                push_sym(&mut out, Sym::Ne, start, &mut i);
            }
            b'<' => {
                if i + 1 < b.len() && b[i + 1] == b'=' {
                    i += 1;
                    push_sym(&mut out, Sym::Le, start, &mut i);
                } else if i + 1 < b.len() && b[i + 1] == b'>' {
                    i += 1;
                    push_sym(&mut out, Sym::Ne, start, &mut i);
                } else {
                    push_sym(&mut out, Sym::Lt, start, &mut i);
                }
            }
            b'>' => {
                if i + 1 < b.len() && b[i + 1] == b'=' {
                    i += 1;
                    push_sym(&mut out, Sym::Ge, start, &mut i);
                } else {
                    push_sym(&mut out, Sym::Gt, start, &mut i);
                }
            }
            _ if c.is_ascii_digit()
                || (c == b'.' && i + 1 < b.len() && b[i + 1].is_ascii_digit())
                || ((c == b'-' || c == b'+') && i + 1 < b.len() && b[i + 1].is_ascii_digit()) =>
            {
                i += 1;
                let mut saw_dot = c == b'.';
                let mut saw_exp = false;
                while i < b.len() {
                    match b[i] {
                        b'0'..=b'9' => i += 1,
                        b'.' if !saw_dot && !saw_exp => {
                            saw_dot = true;
                            i += 1;
                        }
                        b'e' | b'E' if !saw_exp => {
                            saw_exp = true;
                            i += 1;
                            if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
                                i += 1;
                            }
                        }
                        _ => break,
                    }
                }
                let text = &text[start..i];
                let token = if let Ok(v) = text.parse::<i64>() {
                    Token::Int(v)
                } else if let Ok(v) = text.parse::<f64>() {
                    Token::Float(v)
                } else {
                    return Err((start, format!("bad numeric literal `{text}`")));
                };
                out.push(Spanned {
                    token,
                    offset: start,
                });
            }
            _ if c.is_ascii_alphabetic() || c == b'_' => {
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push(Spanned {
                    token: Token::Ident(text[start..i].to_string()),
                    offset: start,
                });
            }
            _ => return Err((start, format!("unexpected character `{}`", c as char))),
        }
    }
    Ok(out)
}

fn push_sym(out: &mut Vec<Spanned>, sym: Sym, start: usize, i: &mut usize) {
    out.push(Spanned {
        token: Token::Symbol(sym),
        offset: start,
    });
    *i += 1;
}
