use super::{Number, SyntaxError};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    LParen,
    RParen,
    Comma,
    Equals,
    /// `:name`, the S-expression named-argument marker.
    Keyword(String),
    Ident(String),
    Text(String),
    Num(Number),
    /// `$name`
    Var(String),
    /// Pattern variables `?x`, `?xs*`, `?_` (pattern mode only).
    Meta(String),
    /// Template builtin head `@name` (pattern mode only).
    Builtin(String),
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    /// Character offsets.
    pub start: usize,
    pub end: usize,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

pub(crate) fn lex(input: &str, pattern_mode: bool) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = input.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;

    let take_ident = |i: &mut usize| -> String {
        let start = *i;
        while *i < chars.len() && ident_char(chars[*i]) {
            *i += 1;
        }
        chars[start..*i].iter().collect()
    };

    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '=' => {
                i += 1;
                Tok::Equals
            }
            '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(SyntaxError::at_offset(i, "closing '\"'")),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            let esc = match chars.get(i + 1) {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some('r') => '\r',
                                _ => return Err(SyntaxError::at_offset(i + 1, "escape sequence")),
                            };
                            s.push(esc);
                            i += 2;
                        }
                        Some(&c) => {
                            s.push(c);
                            i += 1;
                        }
                    }
                }
                Tok::Text(s)
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut decimal = false;
                if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                    decimal = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if chars.get(i).is_some_and(|&c| ident_char(c)) {
                    return Err(SyntaxError::at_offset(i, "delimiter after number"));
                }
                let text: String = chars[start..i].iter().collect();
                let n = if decimal {
                    Number::Decimal(text.parse().map_err(|_| SyntaxError::at_offset(start, "number"))?)
                } else {
                    Number::Int(text.parse().map_err(|_| SyntaxError::at_offset(start, "integer in range"))?)
                };
                Tok::Num(n)
            }
            ':' if chars.get(i + 1).is_some_and(|&c| ident_start(c)) => {
                i += 1;
                Tok::Keyword(take_ident(&mut i))
            }
            '$' if chars.get(i + 1).is_some_and(|&c| ident_start(c)) => {
                i += 1;
                Tok::Var(take_ident(&mut i))
            }
            '?' if pattern_mode => {
                i += 1;
                let name = take_ident(&mut i);
                if name.is_empty() {
                    return Err(SyntaxError::at_offset(i, "pattern variable name"));
                }
                let mut meta = format!("?{name}");
                if chars.get(i) == Some(&'*') {
                    i += 1;
                    meta.push('*');
                }
                Tok::Meta(meta)
            }
            '@' if pattern_mode && chars.get(i + 1).is_some_and(|&c| ident_start(c)) => {
                i += 1;
                Tok::Builtin(take_ident(&mut i))
            }
            c if ident_start(c) => Tok::Ident(take_ident(&mut i)),
            _ => return Err(SyntaxError::at_offset(i, "token")),
        };
        out.push(Token { tok, start, end: i });
    }
    Ok(out)
}
