use super::DslError;

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    End,
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

pub(super) fn tokenize(text: &str) -> Result<Vec<Token>, DslError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = |tok| Token { tok, offset: start };
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => out.push(single(Tok::LParen)),
            b')' => out.push(single(Tok::RParen)),
            b',' => out.push(single(Tok::Comma)),
            b'+' => out.push(single(Tok::Plus)),
            b'-' => out.push(single(Tok::Minus)),
            b'*' => out.push(single(Tok::Star)),
            b'/' => out.push(single(Tok::Slash)),
            b'<' | b'>' | b'=' => {
                let eq_next = bytes.get(i + 1) == Some(&b'=');
                let tok = match (c, eq_next) {
                    (b'<', true) => Tok::Le,
                    (b'<', false) => Tok::Lt,
                    (b'>', true) => Tok::Ge,
                    (b'>', false) => Tok::Gt,
                    (b'=', true) => Tok::EqEq,
                    _ => {
                        return Err(DslError::Syntax {
                            offset: start,
                            message: "single `=`; use `==` for equality".into(),
                        })
                    }
                };
                out.push(single(tok));
                if eq_next {
                    i += 1;
                }
            }
            b'0'..=b'9' | b'.' => {
                i = scan_number(bytes, i);
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| DslError::Syntax {
                    offset: start,
                    message: format!("malformed number `{s}`"),
                })?;
                if !v.is_finite() {
                    return Err(DslError::Syntax {
                        offset: start,
                        message: format!("number `{s}` is not finite"),
                    });
                }
                out.push(Token {
                    tok: Tok::Num(v),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(text[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                return Err(DslError::Syntax {
                    offset: start,
                    message: format!(
                        "unexpected character `{}`",
                        text[start..].chars().next().unwrap_or('?')
                    ),
                })
            }
        }
        i += 1;
    }
    out.push(Token {
        tok: Tok::End,
        offset: text.len(),
    });
    Ok(out)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    let digits = |mut i: usize| {
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        i
    };
    i = digits(i);
    if i < bytes.len() && bytes[i] == b'.' {
        i = digits(i + 1);
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = digits(j);
        }
    }
    i
}
