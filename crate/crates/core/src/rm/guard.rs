use std::fmt;

use super::RmError;
use crate::monitor::TruthAssignment;

/// Boolean condition over atom membership in a truth assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    True,
    Atom(usize),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn eval(&self, sigma: TruthAssignment) -> bool {
        match self {
            Guard::True => true,
            Guard::Atom(i) => sigma.contains(*i),
            Guard::Not(g) => !g.eval(sigma),
            Guard::And(l, r) => l.eval(sigma) && r.eval(sigma),
            Guard::Or(l, r) => l.eval(sigma) || r.eval(sigma),
        }
    }

    /// Atom indices referenced by the guard.
    pub fn atoms(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect(&self, out: &mut Vec<usize>) {
        match self {
            Guard::True => {}
            Guard::Atom(i) => out.push(*i),
            Guard::Not(g) => g.collect(out),
            Guard::And(l, r) | Guard::Or(l, r) => {
                l.collect(out);
                r.collect(out);
            }
        }
    }

    /// Parses `not`/`!`/`¬`, `and`/`&`/`∧`, `or`/`|`/`∨`, `true`, atom
    /// names and parentheses. `and` binds tighter than `or`.
    pub fn parse(text: &str, atoms: &[String]) -> Result<Guard, RmError> {
        let tokens = tokenize(text);
        let mut p = GuardParser {
            tokens: &tokens,
            pos: 0,
            atoms,
            text,
        };
        let g = p.or()?;
        if p.pos != tokens.len() {
            return Err(p.error("end of guard"));
        }
        Ok(g)
    }

    pub fn display<'a>(&'a self, atoms: &'a [String]) -> impl fmt::Display + 'a {
        GuardDisplay { guard: self, atoms }
    }
}

struct GuardDisplay<'a> {
    guard: &'a Guard,
    atoms: &'a [String],
}

impl fmt::Display for GuardDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |g| GuardDisplay {
            guard: g,
            atoms: self.atoms,
        };
        match self.guard {
            Guard::True => f.write_str("true"),
            Guard::Atom(i) => f.write_str(&self.atoms[*i]),
            Guard::Not(g) => write!(f, "not {}", sub(g)),
            Guard::And(l, r) => write!(f, "({} and {})", sub(l), sub(r)),
            Guard::Or(l, r) => write!(f, "({} or {})", sub(l), sub(r)),
        }
    }
}

fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        match c {
            '!' | '¬' => out.push("not".into()),
            '&' | '∧' => out.push("and".into()),
            '|' | '∨' => out.push("or".into()),
            '(' | ')' => out.push(c.to_string()),
            c if c.is_whitespace() => {}
            other => out.push(other.to_string()),
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

struct GuardParser<'a> {
    tokens: &'a [String],
    pos: usize,
    atoms: &'a [String],
    text: &'a str,
}

impl GuardParser<'_> {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(String::as_str)
    }

    fn error(&self, expected: &str) -> RmError {
        RmError::GuardSyntax {
            guard: self.text.to_string(),
            message: match self.peek() {
                Some(tok) => format!("expected {expected}, found `{tok}`"),
                None => format!("expected {expected}, found end of guard"),
            },
        }
    }

    fn or(&mut self) -> Result<Guard, RmError> {
        let mut lhs = self.and()?;
        while self.peek() == Some("or") {
            self.pos += 1;
            lhs = Guard::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Guard, RmError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some("and") {
            self.pos += 1;
            lhs = Guard::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Guard, RmError> {
        match self.peek() {
            Some("not") => {
                self.pos += 1;
                Ok(Guard::Not(Box::new(self.unary()?)))
            }
            Some("true") => {
                self.pos += 1;
                Ok(Guard::True)
            }
            Some("(") => {
                self.pos += 1;
                let g = self.or()?;
                if self.peek() != Some(")") {
                    return Err(self.error("`)`"));
                }
                self.pos += 1;
                Ok(g)
            }
            Some(name) if name.chars().all(|c| c.is_alphanumeric() || c == '_') => {
                let idx = self
                    .atoms
                    .iter()
                    .position(|a| a == name)
                    .ok_or_else(|| RmError::UnknownAtom(name.to_string()))?;
                self.pos += 1;
                Ok(Guard::Atom(idx))
            }
            _ => Err(self.error("atom name, `not`, `true` or `(`")),
        }
    }
}
