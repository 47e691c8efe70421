//! Line-oriented tokenizer shared by the `.pact` parser and the event-line reader.

use super::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Number(String),
    /// `@name`, e.g. `@before`.
    At(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Equals,
    Slash,
    Plus,
    /// `-[`
    ArrowOpen,
    /// `]->`
    ArrowClose,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::At(s) => format!("`@{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Plus => "`+`".into(),
            Tok::ArrowOpen => "`-[`".into(),
            Tok::ArrowClose => "`]->`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub message: String,
    pub span: SourceSpan,
}

pub fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Tokenize one line. `line_no` is 1-based; columns in spans are 1-based
/// character positions with an inclusive end. A `#` outside a string starts
/// a comment that runs to the end of the line.
pub fn lex_line(line: &str, line_no: usize) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let span = |a: usize, b: usize| SourceSpan::new(line_no, a + 1, b.max(a) + 1);

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        let start = i;
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '=' => Tok::Equals,
            '/' => Tok::Slash,
            '+' => Tok::Plus,
            '-' if chars.get(i + 1) == Some(&'[') => {
                i += 1;
                Tok::ArrowOpen
            }
            ']' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                i += 2;
                Tok::ArrowClose
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(LexError {
                                message: "unterminated string literal".into(),
                                span: span(start, chars.len().saturating_sub(1)),
                            })
                        }
                        Some('"') => break,
                        Some('\\') => {
                            let esc = match chars.get(i + 1) {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                _ => {
                                    return Err(LexError {
                                        message: "invalid escape sequence in string".into(),
                                        span: span(i, (i + 1).min(chars.len() - 1)),
                                    })
                                }
                            };
                            s.push(esc);
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Str(s)
            }
            '@' => {
                let mut j = i + 1;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                if j == i + 1 {
                    return Err(LexError {
                        message: "expected a qualifier name after `@`".into(),
                        span: span(i, i),
                    });
                }
                let name: String = chars[i + 1..j].iter().collect();
                i = j - 1;
                Tok::At(name)
            }
            c if c.is_ascii_digit()
                || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) =>
            {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                i = j - 1;
                Tok::Number(text)
            }
            c if is_ident_start(c) => {
                let mut j = i + 1;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                i = j - 1;
                Tok::Ident(text)
            }
            other => {
                return Err(LexError {
                    message: format!("unexpected character `{other}`"),
                    span: span(i, i),
                })
            }
        };
        out.push(Token {
            tok,
            span: span(start, i),
        });
        i += 1;
    }
    Ok(out)
}
