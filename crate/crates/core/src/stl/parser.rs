//! Recursive-descent parser for STL formula text.
//!
//! ```text
//! phi   := or ( 'until_[a,b]' or )*
//! or    := and ( 'or' and )*
//! and   := unary ( 'and' unary )*
//! unary := 'not' unary | 'ev_[a,b]' unary | 'alw_[a,b]' unary | 'true'
//!        | '(' phi ')' | arith cmp arith
//! arith := term (('+' | '-') term)*
//! term  := factor ('*' factor)*
//! factor:= number | var | 'abs' '(' arith ')' | '-' factor | '(' arith ')'
//! cmp   := '<' | '<=' | '>' | '>=' | '==' | '!='
//! ```
//!
//! Interval bounds are non-negative integers counted in steps. Binary
//! operators associate to the left. Predicates are normalized to
//! `lhs - rhs ∼ 0`.

use thiserror::Error;

use super::expr::ArithExpr;
use super::formula::{Cmp, Formula, StepInterval};
use super::vars::VarTable;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: expected {}", expected.join(" or "))]
    Syntax {
        position: usize,
        expected: Vec<String>,
    },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("empty interval [{a},{b}]: lower bound exceeds upper bound")]
    EmptyInterval { a: usize, b: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Op(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

const OPS: [&str; 15] = [
    "<=", ">=", "==", "!=", "<", ">", "=", "+", "-", "*", "(", ")", "[", "]", ",",
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                pos: start,
            });
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token {
                tok: Tok::Num(text[start..i].to_string()),
                pos: start,
            });
            continue;
        }
        for op in OPS {
            if text[i..].starts_with(op) {
                out.push(Token {
                    tok: Tok::Op(op),
                    pos: i,
                });
                i += op.len();
                continue 'outer;
            }
        }
        return Err(ParseError::Syntax {
            position: i,
            expected: vec!["a token".into()],
        });
    }
    Ok(out)
}

/// Parses formula text against a variable table.
pub fn parse_formula<T: Scalar>(text: &str, vars: &VarTable<T>) -> Result<Formula<T>, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        vars,
        furthest: None,
    };
    let f = p.formula()?;
    if p.pos < p.tokens.len() {
        return Err(p.syntax(&["end of input", "`and`", "`or`", "`until_[a,b]`"]));
    }
    Ok(f)
}

struct Parser<'a, T> {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    vars: &'a VarTable<T>,
    /// Deepest syntax error seen while backtracking, reported if every
    /// alternative fails.
    furthest: Option<ParseError>,
}

impl<T: Scalar> Parser<'_, T> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.pos)
    }

    fn syntax(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            position: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn remember(&mut self, err: ParseError) {
        let deeper = match (&self.furthest, &err) {
            (None, _) => true,
            (
                Some(ParseError::Syntax { position: old, .. }),
                ParseError::Syntax { position: new, .. },
            ) => new > old,
            _ => false,
        };
        if deeper {
            self.furthest = Some(err);
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &'static str) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.syntax(&[&format!("`{op}`")]))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn formula(&mut self) -> Result<Formula<T>, ParseError> {
        let mut lhs = self.disjunction()?;
        while self.is_keyword("until_") {
            self.pos += 1;
            let iv = self.interval()?;
            let rhs = self.disjunction()?;
            lhs = Formula::until(iv, lhs, rhs);
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula<T>, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.is_keyword("or") {
            self.pos += 1;
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula<T>, ParseError> {
        let mut lhs = self.unary()?;
        while self.is_keyword("and") {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula<T>, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "not" => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Ident(s)) if s == "ev_" => {
                self.pos += 1;
                let iv = self.interval()?;
                Ok(Formula::eventually(iv, self.unary()?))
            }
            Some(Tok::Ident(s)) if s == "alw_" => {
                self.pos += 1;
                let iv = self.interval()?;
                Ok(Formula::always(iv, self.unary()?))
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some(Tok::Op("(")) => {
                let save = self.pos;
                self.pos += 1;
                match self.formula() {
                    Ok(inner) if self.eat_op(")") && !self.at_arith_continuation() => {
                        return Ok(inner);
                    }
                    Ok(_) => {
                        let err = self.syntax(&["`)`"]);
                        self.remember(err);
                    }
                    Err(e) => self.remember(e),
                }
                // Not a parenthesized formula: retry as a predicate whose
                // left operand starts with `(`.
                self.pos = save;
                match self.predicate() {
                    Ok(p) => Ok(p),
                    Err(e) => {
                        self.remember(e);
                        Err(self.furthest.take().expect("error recorded"))
                    }
                }
            }
            None => Err(self.syntax(&["formula"])),
            _ => self.predicate(),
        }
    }

    fn at_arith_continuation(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Op(
                "+" | "-" | "*" | "<" | "<=" | ">" | ">=" | "==" | "!=" | "="
            ))
        )
    }

    fn predicate(&mut self) -> Result<Formula<T>, ParseError> {
        let lhs = self.arith()?;
        let cmp = match self.peek() {
            Some(Tok::Op("<")) => Cmp::Lt,
            Some(Tok::Op("<=")) => Cmp::Le,
            Some(Tok::Op(">")) => Cmp::Gt,
            Some(Tok::Op(">=")) => Cmp::Ge,
            Some(Tok::Op("==" | "=")) => Cmp::Eq,
            Some(Tok::Op("!=")) => Cmp::Ne,
            _ => return Err(self.syntax(&["comparison operator"])),
        };
        self.pos += 1;
        let rhs = self.arith()?;
        Ok(Formula::pred(
            ArithExpr::Sub(Box::new(lhs), Box::new(rhs)),
            cmp,
        ))
    }

    fn arith(&mut self) -> Result<ArithExpr<T>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op("+") {
                let rhs = self.term()?;
                lhs = ArithExpr::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat_op("-") {
                let rhs = self.term()?;
                lhs = ArithExpr::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<ArithExpr<T>, ParseError> {
        let mut lhs = self.factor()?;
        while self.eat_op("*") {
            let rhs = self.factor()?;
            lhs = ArithExpr::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<ArithExpr<T>, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                let v = self.number(&s)?;
                self.pos += 1;
                Ok(ArithExpr::Const(v))
            }
            Some(Tok::Op("-")) => {
                self.pos += 1;
                // Fold the sign into numeric literals so `-0.7` is a constant.
                if let Some(Tok::Num(s)) = self.peek().cloned() {
                    let v = self.number(&s)?;
                    self.pos += 1;
                    return Ok(ArithExpr::Const(-v));
                }
                Ok(ArithExpr::Neg(Box::new(self.factor()?)))
            }
            Some(Tok::Op("(")) => {
                self.pos += 1;
                let e = self.arith()?;
                self.expect_op(")")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) if name == "abs" => {
                self.pos += 1;
                self.expect_op("(")?;
                let e = self.arith()?;
                self.expect_op(")")?;
                Ok(ArithExpr::Abs(Box::new(e)))
            }
            Some(Tok::Ident(name)) if is_reserved(&name) => {
                Err(self.syntax(&["number", "variable", "`(`", "`abs`"]))
            }
            Some(Tok::Ident(name)) => match self.vars.lookup(&name) {
                Some(idx) => {
                    self.pos += 1;
                    Ok(ArithExpr::Var(idx, name))
                }
                None => Err(ParseError::UnknownVariable(name)),
            },
            _ => Err(self.syntax(&["number", "variable", "`(`", "`abs`"])),
        }
    }

    fn number(&self, s: &str) -> Result<T, ParseError> {
        s.parse::<f64>()
            .map(T::lit)
            .map_err(|_| self.syntax(&["number"]))
    }

    fn interval(&mut self) -> Result<StepInterval, ParseError> {
        self.expect_op("[")?;
        let a = self.step_bound()?;
        self.expect_op(",")?;
        let b = self.step_bound()?;
        self.expect_op("]")?;
        StepInterval::new(a, b).ok_or(ParseError::EmptyInterval { a, b })
    }

    fn step_bound(&mut self) -> Result<usize, ParseError> {
        match self.peek() {
            Some(Tok::Num(s)) => match s.parse::<usize>() {
                Ok(v) => {
                    self.pos += 1;
                    Ok(v)
                }
                Err(_) => Err(self.syntax(&["non-negative integer step bound"])),
            },
            _ => Err(self.syntax(&["non-negative integer step bound"])),
        }
    }
}

fn is_reserved(word: &str) -> bool {
    matches!(
        word,
        "not" | "and" | "or" | "true" | "until_" | "ev_" | "alw_"
    )
}
