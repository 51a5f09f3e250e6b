//! Tokenizer shared by the arithmetic expression and row predicate languages.

use crate::error::{CoreError, Result};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Token {
    Number { value: f64, integral: bool },
    Ident(String),
    Str(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
    True,
    False,
    Is,
    Missing,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |offset: usize, message: &str| CoreError::Syntax {
        offset,
        message: message.to_owned(),
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                }
                Token::Eq
            }
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Token::Ne
            }
            b'<' => match bytes.get(i + 1) {
                Some(b'=') => {
                    i += 1;
                    Token::Le
                }
                Some(b'>') => {
                    i += 1;
                    Token::Ne
                }
                _ => Token::Lt,
            },
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    Token::Ge
                } else {
                    Token::Gt
                }
            }
            b'&' if bytes.get(i + 1) == Some(&b'&') => {
                i += 1;
                Token::And
            }
            b'|' if bytes.get(i + 1) == Some(&b'|') => {
                i += 1;
                Token::Or
            }
            b'\'' | b'"' | b'`' => {
                let quote = c;
                let mut s = String::new();
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => return Err(err(start, "unterminated quote")),
                        Some(&q) if q == quote => {
                            if bytes.get(i + 1) == Some(&quote) {
                                s.push(quote as char);
                                i += 2;
                                continue;
                            }
                            break;
                        }
                        Some(_) => {
                            let ch = src[i..].chars().next().expect("char boundary");
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                if quote == b'\'' {
                    Token::Str(s)
                } else {
                    Token::Ident(s)
                }
            }
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                let mut integral = true;
                while j < bytes.len() {
                    match bytes[j] {
                        b'0'..=b'9' => j += 1,
                        b'.' => {
                            integral = false;
                            j += 1
                        }
                        b'e' | b'E' => {
                            integral = false;
                            j += 1;
                            if matches!(bytes.get(j), Some(b'+' | b'-')) {
                                j += 1;
                            }
                        }
                        _ => break,
                    }
                }
                let text = &src[i..j];
                let value: f64 = text.parse().map_err(|_| err(start, "malformed number"))?;
                i = j - 1;
                Token::Number { value, integral }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let word = &src[i..j];
                i = j - 1;
                match word.to_ascii_lowercase().as_str() {
                    "and" => Token::And,
                    "or" => Token::Or,
                    "not" => Token::Not,
                    "true" => Token::True,
                    "false" => Token::False,
                    "is" => Token::Is,
                    "missing" => Token::Missing,
                    _ => Token::Ident(word.to_owned()),
                }
            }
            _ => return Err(err(start, "unexpected character")),
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

/// Cursor over a token list for the recursive-descent parsers.
pub(crate) struct Tokens {
    toks: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Tokens {
    pub fn new(src: &str) -> Result<Self> {
        Ok(Tokens {
            toks: tokenize(src)?,
            pos: 0,
            end: src.len(),
        })
    }

    pub fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    pub fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    pub fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    pub fn eat(&mut self, tok: &Token) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Token, what: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    pub fn error(&self, message: &str) -> CoreError {
        CoreError::Syntax {
            offset: self.offset(),
            message: message.to_owned(),
        }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}
