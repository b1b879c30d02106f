//! Three-part model formulas: `response ~ mu-part | sigma-part | alpha-part`.

use std::fmt;

use crate::error::{Error, Result};

/// One part of a formula: an optional intercept plus covariate names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaPart {
    pub intercept: bool,
    pub terms: Vec<String>,
}

impl FormulaPart {
    pub fn intercept_only() -> Self {
        Self {
            intercept: true,
            terms: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.intercept && self.terms.is_empty()
    }
}

impl fmt::Display for FormulaPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.intercept, self.terms.is_empty()) {
            (true, true) => f.write_str("1"),
            (false, true) => f.write_str("0"),
            (true, false) => f.write_str(&self.terms.join(" + ")),
            (false, false) => write!(f, "0 + {}", self.terms.join(" + ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaAst {
    pub response: String,
    pub mu: FormulaPart,
    pub sigma: FormulaPart,
    /// Present exactly for zero-adjusted models.
    pub alpha: Option<FormulaPart>,
}

impl FormulaAst {
    /// Every variable the formula refers to, response first, without repeats.
    pub fn variables(&self) -> Vec<String> {
        let mut out = vec![self.response.clone()];
        let parts = [Some(&self.mu), Some(&self.sigma), self.alpha.as_ref()];
        for p in parts.into_iter().flatten() {
            for t in &p.terms {
                if !out.contains(t) {
                    out.push(t.clone());
                }
            }
        }
        out
    }
}

impl fmt::Display for FormulaAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ {} | {}", self.response, self.mu, self.sigma)?;
        if let Some(a) = &self.alpha {
            write!(f, " | {a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Tilde,
    Bar,
    Plus,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Next token and its byte offset.
    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        let Some(c) = self.src[start..].chars().next() else {
            return Ok((Tok::End, start));
        };
        let single = |t: Tok, me: &mut Self| {
            me.pos += 1;
            Ok((t, start))
        };
        match c {
            '~' => single(Tok::Tilde, self),
            '|' => single(Tok::Bar, self),
            '+' => single(Tok::Plus, self),
            c if c.is_ascii_alphabetic() || c == '_' || c == '.' => {
                let len = self.src[start..]
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_' || ch == '.'))
                    .unwrap_or(self.src.len() - start);
                self.pos += len;
                Ok((Tok::Ident(self.src[start..start + len].to_string()), start))
            }
            c if c.is_ascii_digit() => {
                let len = self.src[start..]
                    .find(|ch: char| !ch.is_ascii_digit())
                    .unwrap_or(self.src.len() - start);
                self.pos += len;
                Ok((Tok::Num(self.src[start..start + len].to_string()), start))
            }
            other => Err(Error::Formula {
                offset: start,
                message: format!("unexpected character '{other}'"),
            }),
        }
    }
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Formula {
        offset,
        message: message.into(),
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<()> {
        let (t, at) = self.lex.next()?;
        self.tok = t;
        self.at = at;
        Ok(())
    }

    fn part(&mut self) -> Result<FormulaPart> {
        let mut part = FormulaPart {
            intercept: true,
            terms: Vec::new(),
        };
        let mut saw_zero = false;
        loop {
            match &self.tok {
                Tok::Ident(name) => {
                    if part.terms.contains(name) {
                        return Err(syntax(self.at, format!("duplicate term '{name}'")));
                    }
                    part.terms.push(name.clone());
                }
                Tok::Num(n) if n == "1" => {
                    if saw_zero {
                        return Err(syntax(self.at, "'1' contradicts an earlier '0'"));
                    }
                }
                Tok::Num(n) if n == "0" => {
                    saw_zero = true;
                    part.intercept = false;
                }
                Tok::Num(n) => return Err(syntax(self.at, format!("unexpected number '{n}' (only 0 or 1)"))),
                Tok::End => return Err(syntax(self.at, "expected a term, '1' or '0'")),
                _ => return Err(syntax(self.at, "expected a term, '1' or '0'")),
            }
            self.advance()?;
            if self.tok == Tok::Plus {
                self.advance()?;
            } else {
                return Ok(part);
            }
        }
    }
}

/// Parses `response ~ part ( | part ( | part )? )?`.
pub fn parse_formula(text: &str) -> Result<FormulaAst> {
    let mut p = Parser {
        lex: Lexer { src: text, pos: 0 },
        tok: Tok::End,
        at: 0,
    };
    p.advance()?;
    let Tok::Ident(response) = p.tok.clone() else {
        return Err(syntax(p.at, "expected the response name"));
    };
    p.advance()?;
    if p.tok != Tok::Tilde {
        return Err(syntax(p.at, "expected '~'"));
    }
    p.advance()?;
    let mu = p.part()?;
    let mut sigma = FormulaPart::intercept_only();
    let mut alpha = None;
    if p.tok == Tok::Bar {
        p.advance()?;
        sigma = p.part()?;
        if p.tok == Tok::Bar {
            p.advance()?;
            alpha = Some(p.part()?);
        }
    }
    match p.tok {
        Tok::End => Ok(FormulaAst {
            response,
            mu,
            sigma,
            alpha,
        }),
        Tok::Bar => Err(syntax(p.at, "at most three formula parts are allowed")),
        _ => Err(syntax(p.at, "expected '+', '|' or the end of the formula")),
    }
}
