//! Lexer and recursive-descent parser for terms and term files.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::{compile, Term};
use crate::alphabet::{is_identifier, ActionAlphabet};
use crate::automaton::ProbAutomaton;
use crate::dist::{in_unit_interval, parse_prob, Prob};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Zero,
    One,
    LParen,
    RParen,
    Dot,
    Star,
    Plus,
    PlusProb(Prob),
    Par(BTreeSet<String>),
    Run(BTreeSet<String>),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

/// A piece of source text with the position of its first character.
struct Segment<'a> {
    line: usize,
    col: usize,
    text: &'a str,
}

fn lex(segments: &[Segment<'_>]) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for seg in segments {
        let chars: Vec<char> = seg.text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let (line, col) = (seg.line, seg.col + i);
            let c = chars[i];
            let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line, col });
            match c {
                _ if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '(' => push(&mut out, Tok::LParen),
                ')' => push(&mut out, Tok::RParen),
                '.' => push(&mut out, Tok::Dot),
                '*' => push(&mut out, Tok::Star),
                '0' => push(&mut out, Tok::Zero),
                '1' => push(&mut out, Tok::One),
                '+' => {
                    if chars.get(i + 1) == Some(&'[') {
                        let close = chars[i..]
                            .iter()
                            .position(|c| *c == ']')
                            .ok_or_else(|| Error::syntax(line, col, "unterminated `+[`"))?;
                        let inner: String = chars[i + 2..i + close].iter().collect();
                        let p = parse_prob(&inner).map_err(|e| Error::syntax(line, col + 2, e.to_string()))?;
                        if !in_unit_interval(&p) {
                            return Err(Error::syntax(line, col + 2, format!("probability {inner} is outside [0, 1]")));
                        }
                        push(&mut out, Tok::PlusProb(p));
                        i += close + 1;
                        continue;
                    }
                    push(&mut out, Tok::Plus);
                }
                '|' => {
                    if chars.get(i + 1) != Some(&'|') {
                        return Err(Error::syntax(line, col, "expected `||{...}`"));
                    }
                    let (set, used) = action_set(&chars[i + 2..], line, col + 2)?;
                    push(&mut out, Tok::Par(set));
                    i += 2 + used;
                    continue;
                }
                _ if c.is_alphabetic() || c == '_' => {
                    let len = chars[i..]
                        .iter()
                        .position(|c| !(c.is_alphanumeric() || *c == '_' || *c == '\''))
                        .unwrap_or(chars.len() - i);
                    let word: String = chars[i..i + len].iter().collect();
                    if word == "run" {
                        let (set, used) = action_set(&chars[i + len..], line, col + len)?;
                        push(&mut out, Tok::Run(set));
                        i += len + used;
                    } else {
                        push(&mut out, Tok::Ident(word));
                        i += len;
                    }
                    continue;
                }
                _ => return Err(Error::syntax(line, col, format!("unexpected character `{c}`"))),
            }
            i += 1;
        }
    }
    Ok(out)
}

/// Reads `{a, b}` at the start of `chars`; returns the set and the number of
/// characters consumed.
fn action_set(chars: &[char], line: usize, col: usize) -> Result<(BTreeSet<String>, usize)> {
    if chars.first() != Some(&'{') {
        return Err(Error::syntax(line, col, "expected `{`"));
    }
    let close = chars
        .iter()
        .position(|c| *c == '}')
        .ok_or_else(|| Error::syntax(line, col, "unterminated action set"))?;
    let inner: String = chars[1..close].iter().collect();
    let mut set = BTreeSet::new();
    for name in inner.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
        if !is_identifier(name) {
            return Err(Error::syntax(line, col, format!("`{name}` is not an action name")));
        }
        set.insert(name.to_string());
    }
    Ok((set, close + 1))
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    alphabet: &'a ActionAlphabet,
    defs: &'a [(String, Term)],
    end: (usize, usize),
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens.get(self.pos).map_or(self.end, |t| (t.line, t.col))
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let (line, col) = self.here();
        Error::syntax(line, col, message)
    }

    fn choice(&mut self) -> Result<Term> {
        let mut acc = self.par()?;
        let mut kind: Option<bool> = None;
        loop {
            let probabilistic = match self.peek() {
                Some(Tok::Plus) => false,
                Some(Tok::PlusProb(_)) => true,
                _ => return Ok(acc),
            };
            if kind.is_some_and(|k| k != probabilistic) {
                return Err(self.error("`+` and `+[p]` need parentheses when mixed"));
            }
            kind = Some(probabilistic);
            let tok = self.tokens[self.pos].tok.clone();
            self.pos += 1;
            let rhs = self.par()?;
            acc = match tok {
                Tok::PlusProb(p) => Term::pchoice(acc, p, rhs),
                _ => Term::plus(acc, rhs),
            };
        }
    }

    fn par(&mut self) -> Result<Term> {
        let mut acc = self.seq()?;
        while let Some(Tok::Par(frame)) = self.peek() {
            let frame = frame.clone();
            if let Some(bad) = frame.iter().find(|a| !self.alphabet.is_external(a)) {
                return Err(self.error(format!("frame action `{bad}` is not an external action")));
            }
            self.pos += 1;
            let rhs = self.seq()?;
            acc = Term::Par(Box::new(acc), frame, Box::new(rhs));
        }
        Ok(acc)
    }

    fn seq(&mut self) -> Result<Term> {
        let mut acc = self.postfix()?;
        while let Some(Tok::Dot) = self.peek() {
            self.pos += 1;
            acc = Term::seq(acc, self.postfix()?);
        }
        Ok(acc)
    }

    fn postfix(&mut self) -> Result<Term> {
        let mut t = self.atom()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            t = Term::star(t);
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<Term> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of expression"));
        };
        let t = match tok {
            Tok::Zero => Term::Zero,
            Tok::One => Term::One,
            Tok::Ident(name) => {
                if self.alphabet.contains(&name) {
                    Term::Act(name)
                } else if let Some((_, t)) = self.defs.iter().find(|(n, _)| *n == name) {
                    t.clone()
                } else {
                    return Err(self.error(format!("undeclared action `{name}`")));
                }
            }
            Tok::Run(set) => {
                if set.is_empty() {
                    return Err(self.error("run{} needs at least one action"));
                }
                if let Some(bad) = set.iter().find(|a| !self.alphabet.is_external(a)) {
                    return Err(self.error(format!("run action `{bad}` is not an external action")));
                }
                Term::Run(set)
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.choice()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error("expected `)`"));
                }
                inner
            }
            _ => return Err(self.error("expected a term")),
        };
        self.pos += 1;
        Ok(t)
    }
}

fn parse_segments(segments: &[Segment<'_>], alphabet: &ActionAlphabet, defs: &[(String, Term)]) -> Result<Term> {
    let tokens = lex(segments)?;
    let end = segments
        .last()
        .map_or((1, 1), |s| (s.line, s.col + s.text.chars().count()));
    let mut parser = Parser {
        tokens,
        pos: 0,
        alphabet,
        defs,
        end,
    };
    let t = parser.choice()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error("unexpected token after the end of the term"));
    }
    Ok(t)
}

/// Parses a single term over a declared alphabet.
pub fn parse_term(text: &str, alphabet: &ActionAlphabet) -> Result<Term> {
    let segments: Vec<Segment<'_>> = text
        .lines()
        .enumerate()
        .map(|(i, l)| Segment {
            line: i + 1,
            col: 1,
            text: l,
        })
        .collect();
    parse_segments(&segments, alphabet, &[])
}

/// The contents of a term file: an alphabet and named terms in file order.
#[derive(Debug, Clone)]
pub struct TermFile {
    pub alphabet: Arc<ActionAlphabet>,
    pub defs: Vec<(String, Term)>,
}

impl TermFile {
    pub fn get(&self, name: &str) -> Option<&Term> {
        self.defs.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Parses an expression over this file's alphabet in which earlier
    /// definitions may be named. `line` and `col` locate the text for
    /// diagnostics.
    pub fn parse_expr(&self, text: &str, line: usize, col: usize) -> Result<Term> {
        parse_segments(&[Segment { line, col, text }], &self.alphabet, &self.defs)
    }

    pub fn compile(&self, name: &str) -> Result<ProbAutomaton> {
        let term = self
            .get(name)
            .ok_or_else(|| Error::Scenario(format!("no definition named `{name}`")))?;
        compile(term, &self.alphabet)
    }
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(code, _)| code)
}

/// Parses a term file: `external` / `internal` header lines followed by
/// `def NAME = EXPR` definitions. Indented lines continue the previous
/// definition; `#` starts a comment. A name that is not an action refers to
/// an earlier definition and is replaced by its term.
pub fn parse_file(text: &str) -> Result<TermFile> {
    let mut alphabet = ActionAlphabet::default();
    let mut defs: Vec<(usize, String, Vec<Segment<'_>>)> = Vec::new();
    let mut open = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let code = strip_comment(raw);
        if code.trim().is_empty() {
            continue;
        }
        let indent = code.len() - code.trim_start().len();
        let body = code.trim();
        let (word, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        match word {
            "external" | "internal" => {
                open = false;
                for name in rest.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
                    let added = if word == "external" {
                        alphabet.add_external(name)
                    } else {
                        alphabet.add_internal(name)
                    };
                    added.map_err(|e| Error::syntax(line, indent + 1, e.to_string()))?;
                }
            }
            "def" => {
                let Some((name, expr)) = rest.split_once('=') else {
                    return Err(Error::syntax(line, indent + 1, "expected `def NAME = EXPR`"));
                };
                let name = name.trim();
                if !is_identifier(name) {
                    return Err(Error::syntax(line, indent + 5, format!("`{name}` is not a valid name")));
                }
                if defs.iter().any(|(_, n, _)| n == name) {
                    return Err(Error::syntax(line, indent + 5, format!("`{name}` defined twice")));
                }
                let offset = code.len() - expr.len();
                defs.push((
                    line,
                    name.to_string(),
                    vec![Segment {
                        line,
                        col: code[..offset].chars().count() + 1,
                        text: expr,
                    }],
                ));
                open = true;
            }
            _ if indent > 0 && open => {
                let segs = &mut defs.last_mut().expect("open definition").2;
                segs.push(Segment {
                    line,
                    col: code[..indent].chars().count() + 1,
                    text: body,
                });
            }
            _ => return Err(Error::syntax(line, indent + 1, format!("unexpected `{word}`"))),
        }
    }
    let alphabet = Arc::new(alphabet);
    let mut out = Vec::new();
    for (line, name, segs) in defs {
        if alphabet.contains(&name) {
            return Err(Error::syntax(line, 5, format!("`{name}` is already an action")));
        }
        let term = parse_segments(&segs, &alphabet, &out)?;
        out.push((name, term));
    }
    Ok(TermFile { alphabet, defs: out })
}
