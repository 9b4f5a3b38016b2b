//! Line-oriented rule file format.
//!
//! ```text
//! states: <positive int>
//! start: <state id>                  # exactly one
//! accept: <state id> [<state id>...] # one or more ids, directive may repeat
//! trans: <src> <dst> <input>:<output>
//! ```
//!
//! `<input>` is a printable byte, an escape (`\xNN`, `\t`, `\n`, `\\`, `\:`),
//! a class like `[a-z0-9]` (ranges and singletons), or `~` for ε. `<output>`
//! is a printable byte, an escape, or `~`. A `#` at the start of a line or
//! after whitespace begins a comment; use `\x23` for a literal `#`.

use std::fmt;

use thiserror::Error;

use crate::fst::{Fst, InputLabel, OutputLabel, StateId, SymbolClass, Transition};

/// Parse failure with 1-based line/column position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct RulesetError {
    pub line: usize,
    pub col: usize,
    pub kind: RulesetErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RulesetErrorKind {
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("malformed integer `{0}`")]
    BadInteger(String),
    #[error("{0}")]
    Malformed(&'static str),
    #[error("bad escape sequence")]
    BadEscape,
    #[error("character `{0}` must be escaped here")]
    MustEscape(char),
    #[error("empty symbol class")]
    EmptyClass,
    #[error("class range is inverted")]
    InvertedRange,
    #[error("duplicate `states:` directive")]
    DuplicateStates,
    #[error("duplicate `start:` directive")]
    DuplicateStart,
    #[error("missing `states:` directive")]
    MissingStates,
    #[error("missing `start:` directive")]
    MissingStart,
    #[error("missing `accept:` directive")]
    MissingAccept,
    #[error("state id {id} out of range (state count {count})")]
    StateOutOfRange { id: u32, count: u32 },
    #[error("state count must be positive")]
    ZeroStates,
}

use RulesetErrorKind as Kind;

fn err<T>(line: usize, col: usize, kind: Kind) -> Result<T, RulesetError> {
    Err(RulesetError { line, col, kind })
}

/// Parses rule text into a transducer, checking state ids against the
/// declared count. Directives may appear in any order.
pub fn parse_ruleset(text: &str) -> Result<Fst, RulesetError> {
    let mut states: Option<(u32, usize)> = None;
    let mut start: Option<(u32, usize)> = None;
    // (id, line, col) triples, range-checked once the state count is known
    let mut accepting: Vec<(u32, usize, usize)> = Vec::new();
    let mut transitions: Vec<(Transition, usize)> = Vec::new();
    let mut state_refs: Vec<(u32, usize, usize)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = strip_comment(raw);
        let mut toks = Tokens::new(line, lineno);
        let Some((dir, dir_col)) = toks.next() else { continue };
        match dir {
            "states:" => {
                let (n, col) = toks.expect_int("state count")?;
                if states.is_some() {
                    return err(lineno, dir_col, Kind::DuplicateStates);
                }
                if n == 0 {
                    return err(lineno, col, Kind::ZeroStates);
                }
                states = Some((n, lineno));
            }
            "start:" => {
                let (id, col) = toks.expect_int("state id")?;
                if start.is_some() {
                    return err(lineno, dir_col, Kind::DuplicateStart);
                }
                start = Some((id, lineno));
                state_refs.push((id, lineno, col));
            }
            "accept:" => {
                let mut any = false;
                while let Some((tok, col)) = toks.next() {
                    let id = parse_int(tok, lineno, col)?;
                    accepting.push((id, lineno, col));
                    state_refs.push((id, lineno, col));
                    any = true;
                }
                if !any {
                    return err(lineno, dir_col, Kind::Malformed("accept: needs at least one state id"));
                }
            }
            "trans:" => {
                let (src, scol) = toks.expect_int("source state")?;
                let (dst, dcol) = toks.expect_int("destination state")?;
                let Some((label, lcol)) = toks.next() else {
                    return err(lineno, dir_col, Kind::Malformed("trans: needs <input>:<output> label"));
                };
                toks.expect_end()?;
                let (input, output) = parse_label(label, lineno, lcol)?;
                state_refs.push((src, lineno, scol));
                state_refs.push((dst, lineno, dcol));
                transitions.push((
                    Transition { src: StateId(src), dst: StateId(dst), input, output },
                    lineno,
                ));
            }
            other => return err(lineno, dir_col, Kind::UnknownDirective(other.to_string())),
        }
        if dir != "accept:" && dir != "trans:" {
            toks.expect_end()?;
        }
    }

    let Some((state_count, _)) = states else {
        return err(text.lines().count() + 1, 1, Kind::MissingStates);
    };
    let Some((start_id, _)) = start else {
        return err(text.lines().count() + 1, 1, Kind::MissingStart);
    };
    if accepting.is_empty() {
        return err(text.lines().count() + 1, 1, Kind::MissingAccept);
    }
    for &(id, line, col) in &state_refs {
        if id >= state_count {
            return err(line, col, Kind::StateOutOfRange { id, count: state_count });
        }
    }

    Ok(Fst::new(
        state_count,
        StateId(start_id),
        accepting.into_iter().map(|(id, _, _)| StateId(id)),
        transitions.into_iter().map(|(t, _)| t).collect(),
    ))
}

/// Renders a transducer back into rule text that `parse_ruleset` accepts.
/// Used for counterexample reporting and debug dumps.
pub fn render_ruleset(fst: &Fst) -> String {
    use fmt::Write;
    let mut out = String::new();
    writeln!(out, "states: {}", fst.state_count).unwrap();
    writeln!(out, "start: {}", fst.start).unwrap();
    if !fst.accepting.is_empty() {
        write!(out, "accept:").unwrap();
        for q in &fst.accepting {
            write!(out, " {q}").unwrap();
        }
        out.push('\n');
    }
    for t in &fst.transitions {
        let input = match t.input {
            InputLabel::Epsilon => "~".to_string(),
            InputLabel::Class(c) => render_class(&c),
        };
        let output = match t.output {
            OutputLabel::Epsilon => "~".to_string(),
            OutputLabel::Byte(b) => escape_symbol(b),
        };
        writeln!(out, "trans: {} {} {input}:{output}", t.src, t.dst).unwrap();
    }
    out
}

fn render_class(c: &SymbolClass) -> String {
    if c.len() == 1 {
        return escape_symbol(c.iter().next().unwrap());
    }
    let mut out = String::from("[");
    let mut s = 0u16;
    while s < 256 {
        if c.contains(s as u8) {
            let lo = s as u8;
            while s < 256 && c.contains(s as u8) {
                s += 1;
            }
            let hi = (s - 1) as u8;
            if lo == hi {
                out.push_str(&escape_symbol(lo));
            } else {
                out.push_str(&format!("{}-{}", escape_symbol(lo), escape_symbol(hi)));
            }
        } else {
            s += 1;
        }
    }
    out.push(']');
    out
}

fn escape_symbol(b: u8) -> String {
    match b {
        b'\\' => "\\\\".to_string(),
        b':' => "\\:".to_string(),
        b'\t' => "\\t".to_string(),
        b'\n' => "\\n".to_string(),
        b'~' | b'[' | b']' | b'-' | b'#' => format!("\\x{b:02x}"),
        0x21..=0x7e => (b as char).to_string(),
        _ => format!("\\x{b:02x}"),
    }
}

/// Drops a comment: `#` at line start or after whitespace.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

/// Whitespace-separated tokens with 1-based column positions.
struct Tokens<'a> {
    line: &'a str,
    lineno: usize,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(line: &'a str, lineno: usize) -> Self {
        Tokens { line, lineno, pos: 0 }
    }

    fn next(&mut self) -> Option<(&'a str, usize)> {
        let bytes = self.line.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < bytes.len() && !bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Some((&self.line[start..self.pos], start + 1))
    }

    fn expect_int(&mut self, what: &'static str) -> Result<(u32, usize), RulesetError> {
        match self.next() {
            Some((tok, col)) => Ok((parse_int(tok, self.lineno, col)?, col)),
            None => err(self.lineno, self.pos + 1, Kind::Malformed(what_missing(what))),
        }
    }

    fn expect_end(&mut self) -> Result<(), RulesetError> {
        if let Some((tok, col)) = self.next() {
            let _ = tok;
            return err(self.lineno, col, Kind::Malformed("unexpected trailing token"));
        }
        Ok(())
    }
}

fn what_missing(what: &'static str) -> &'static str {
    match what {
        "state count" => "missing state count",
        "state id" => "missing state id",
        "source state" => "missing source state",
        "destination state" => "missing destination state",
        _ => "missing token",
    }
}

fn parse_int(tok: &str, line: usize, col: usize) -> Result<u32, RulesetError> {
    tok.parse::<u32>()
        .map_err(|_| RulesetError { line, col, kind: Kind::BadInteger(tok.to_string()) })
}

/// Parses `<input>:<output>` from a single whitespace-free token.
fn parse_label(tok: &str, line: usize, col: usize) -> Result<(InputLabel, OutputLabel), RulesetError> {
    let mut cur = Cursor { bytes: tok.as_bytes(), i: 0, line, col };
    let input = if cur.peek() == Some(b'~') {
        cur.i += 1;
        InputLabel::Epsilon
    } else if cur.peek() == Some(b'[') {
        InputLabel::Class(cur.class()?)
    } else {
        InputLabel::Class(SymbolClass::singleton(cur.item()?))
    };
    match cur.peek() {
        Some(b':') => cur.i += 1,
        _ => return err(line, cur.col(), Kind::Malformed("expected `:` between input and output")),
    }
    let output = if cur.peek() == Some(b'~') {
        cur.i += 1;
        OutputLabel::Epsilon
    } else {
        OutputLabel::Byte(cur.item()?)
    };
    if cur.peek().is_some() {
        return err(line, cur.col(), Kind::Malformed("unexpected trailing characters in label"));
    }
    Ok((input, output))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    i: usize,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.i).copied()
    }

    fn col(&self) -> usize {
        self.col + self.i
    }

    /// One symbol: a plain printable byte or an escape.
    fn item(&mut self) -> Result<u8, RulesetError> {
        match self.peek() {
            None => err(self.line, self.col(), Kind::Malformed("missing symbol")),
            Some(b'\\') => self.escape(),
            Some(b @ (b'~' | b'[' | b']' | b':')) => {
                err(self.line, self.col(), Kind::MustEscape(b as char))
            }
            Some(b) if (0x21..=0x7e).contains(&b) => {
                self.i += 1;
                Ok(b)
            }
            Some(_) => err(self.line, self.col(), Kind::Malformed("non-printable byte; use \\xNN")),
        }
    }

    fn escape(&mut self) -> Result<u8, RulesetError> {
        let start = self.col();
        self.i += 1; // consume backslash
        let b = match self.peek() {
            Some(b't') => b'\t',
            Some(b'n') => b'\n',
            Some(b'\\') => b'\\',
            Some(b':') => b':',
            Some(b'x') => {
                self.i += 1;
                let hi = self.hex_digit(start)?;
                let lo = self.hex_digit(start)?;
                return Ok(hi * 16 + lo);
            }
            _ => return err(self.line, start, Kind::BadEscape),
        };
        self.i += 1;
        Ok(b)
    }

    fn hex_digit(&mut self, escape_col: usize) -> Result<u8, RulesetError> {
        let d = match self.peek() {
            Some(b @ b'0'..=b'9') => b - b'0',
            Some(b @ b'a'..=b'f') => b - b'a' + 10,
            Some(b @ b'A'..=b'F') => b - b'A' + 10,
            _ => return err(self.line, escape_col, Kind::BadEscape),
        };
        self.i += 1;
        Ok(d)
    }

    /// `[...]` class body: singletons and `lo-hi` ranges. A `-` first or
    /// last in the class is a literal.
    fn class(&mut self) -> Result<SymbolClass, RulesetError> {
        let open_col = self.col();
        self.i += 1; // consume '['
        let mut cls = SymbolClass::EMPTY;
        let mut pending: Option<u8> = None; // member awaiting possible range
        loop {
            match self.peek() {
                None => return err(self.line, open_col, Kind::Malformed("unterminated class")),
                Some(b']') => {
                    self.i += 1;
                    if let Some(p) = pending {
                        cls.insert(p);
                    }
                    break;
                }
                Some(b'-') if pending.is_some() => {
                    self.i += 1;
                    if self.peek() == Some(b']') {
                        // trailing '-' is a literal
                        cls.insert(pending.take().unwrap());
                        cls.insert(b'-');
                        continue;
                    }
                    let lo = pending.take().unwrap();
                    let hi = self.class_item()?;
                    if lo > hi {
                        return err(self.line, open_col, Kind::InvertedRange);
                    }
                    cls = cls.union(SymbolClass::range(lo, hi));
                }
                Some(b'-') => {
                    self.i += 1;
                    pending = Some(b'-');
                }
                _ => {
                    if let Some(p) = pending.replace(self.class_item()?) {
                        cls.insert(p);
                    }
                }
            }
        }
        if cls.is_empty() {
            return err(self.line, open_col, Kind::EmptyClass);
        }
        Ok(cls)
    }

    /// Class member: like `item` but `:` and `~` are fine inside brackets.
    fn class_item(&mut self) -> Result<u8, RulesetError> {
        match self.peek() {
            None => err(self.line, self.col(), Kind::Malformed("missing symbol")),
            Some(b'\\') => self.escape(),
            Some(b @ (b'[' | b']')) => err(self.line, self.col(), Kind::MustEscape(b as char)),
            Some(b) if (0x21..=0x7e).contains(&b) => {
                self.i += 1;
                Ok(b)
            }
            Some(_) => err(self.line, self.col(), Kind::Malformed("non-printable byte; use \\xNN")),
        }
    }
}
