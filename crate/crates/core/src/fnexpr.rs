//! Arithmetic expressions in one variable `t`, used for parameter functions.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 't' | 'pi' | 'e' | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-2^2`
//! is `-4` and `2^3^2` is `512`. The Unicode signs `−`, `×`, `·` and `÷` are
//! accepted as aliases. Functions: `exp`, `sin`, `cos`, `abs`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => " * ",
            BinOp::Div => " / ",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Abs,
}

impl Func {
    pub const ALL: [Func; 4] = [Func::Exp, Func::Sin, Func::Cos, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

/// Expression tree. Literals produced by the parser are finite and
/// nonnegative; a leading minus is always a [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Const(Constant),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Parser::new(text)?.parse_all()
    }

    /// True when the expression mentions `t`.
    pub fn has_var(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(x) | Expr::Call(_, x) => x.has_var(),
            Expr::Binary(_, l, r) => l.has_var() || r.has_var(),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Num(x) => *x,
            Expr::Var => t,
            Expr::Const(Constant::Pi) => std::f64::consts::PI,
            Expr::Const(Constant::E) => std::f64::consts::E,
            Expr::Neg(x) => -x.eval(t)?,
            Expr::Call(f, x) => f.apply(x.eval(t)?),
            Expr::Binary(op, l, r) => {
                let a = l.eval(t)?;
                let b = r.eval(t)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.eval_error(EvalErrorKind::DivisionByZero));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err(self.eval_error(EvalErrorKind::ZeroToNegativePower));
                        }
                        a.powf(b)
                    }
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.eval_error(EvalErrorKind::NotFinite))
        }
    }

    fn eval_error(&self, kind: EvalErrorKind) -> EvalError {
        EvalError {
            kind,
            subexpression: self.to_string(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::Var | Expr::Const(_) | Expr::Call(..) => 5,
        }
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Canonical text with minimal parentheses; parsing it gives back the same
/// tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Var => f.write_str("t"),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Const(Constant::E) => f.write_str("e"),
            Expr::Neg(x) => {
                f.write_str("-")?;
                write_wrapped(f, x, x.precedence() < 3)
            }
            Expr::Call(func, x) => write!(f, "{}({x})", func.name()),
            Expr::Binary(BinOp::Pow, base, exp) => {
                write_wrapped(f, base, base.precedence() < 5)?;
                f.write_str("^")?;
                write_wrapped(f, exp, exp.precedence() < 3)
            }
            Expr::Binary(op, l, r) => {
                let p = self.precedence();
                write_wrapped(f, l, l.precedence() < p)?;
                f.write_str(op.symbol())?;
                write_wrapped(f, r, r.precedence() <= p)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    Unexpected { found: String, expected: Vec<String> },
    UnknownName(String),
    InvalidNumber(String),
}

/// Syntax error with the 0-based character position where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at position {}: ", self.position)?;
        match &self.kind {
            ParseErrorKind::Empty => f.write_str("empty expression"),
            ParseErrorKind::Unexpected { found, expected } => {
                write!(f, "found {found}, expected one of {}", expected.join(", "))
            }
            ParseErrorKind::UnknownName(name) => write!(
                f,
                "unknown name '{name}' (functions: exp, sin, cos, abs; constants: pi, e; variable: t)"
            ),
            ParseErrorKind::InvalidNumber(text) => write!(f, "invalid number '{text}'"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    ZeroToNegativePower,
    NotFinite,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?} in '{subexpression}'")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub subexpression: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Num(x) => format!("number {x}"),
            Token::Ident(s) => format!("'{s}'"),
            Token::Plus => "'+'".into(),
            Token::Minus => "'-'".into(),
            Token::Star => "'*'".into(),
            Token::Slash => "'/'".into(),
            Token::Caret => "'^'".into(),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let c = chars[pos];
        if c.is_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        let single = match c {
            '+' => Some(Token::Plus),
            '-' | '−' => Some(Token::Minus),
            '*' | '×' | '·' => Some(Token::Star),
            '/' | '÷' => Some(Token::Slash),
            '^' => Some(Token::Caret),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((start, tok));
            pos += 1;
        } else if c.is_ascii_digit() || c == '.' {
            while pos < chars.len() && (chars[pos].is_ascii_digit() || chars[pos] == '.') {
                pos += 1;
            }
            // exponent only when digits follow, so "2e" stays a number and a name
            if pos < chars.len() && (chars[pos] == 'e' || chars[pos] == 'E') {
                let mut look = pos + 1;
                if look < chars.len() && (chars[look] == '+' || chars[look] == '-') {
                    look += 1;
                }
                if look < chars.len() && chars[look].is_ascii_digit() {
                    pos = look;
                    while pos < chars.len() && chars[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
            }
            let literal: String = chars[start..pos].iter().collect();
            let value = literal.parse::<f64>().map_err(|_| ParseError {
                position: start,
                kind: ParseErrorKind::InvalidNumber(literal.clone()),
            })?;
            out.push((start, Token::Num(value)));
        } else if c.is_alphabetic() || c == '_' {
            while pos < chars.len() && (chars[pos].is_alphanumeric() || chars[pos] == '_') {
                pos += 1;
            }
            out.push((start, Token::Ident(chars[start..pos].iter().collect())));
        } else {
            return Err(ParseError {
                position: start,
                kind: ParseErrorKind::Unexpected {
                    found: format!("'{c}'"),
                    expected: atom_expected(),
                },
            });
        }
    }
    out.push((chars.len(), Token::End));
    Ok(out)
}

fn atom_expected() -> Vec<String> {
    ["number", "'t'", "'pi'", "'e'", "function name", "'('", "'-'"]
        .map(String::from)
        .to_vec()
}

fn operator_expected(closing: Option<&str>) -> Vec<String> {
    let mut out: Vec<String> = ["'+'", "'-'", "'*'", "'/'", "'^'"].map(String::from).to_vec();
    out.push(closing.unwrap_or("end of input").to_string());
    out
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    at: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        let tokens = lex(text)?;
        Ok(Self { tokens, at: 0 })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.at].1
    }

    fn position(&self) -> usize {
        self.tokens[self.at].0
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.at].1.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        tok
    }

    fn unexpected(&self, expected: Vec<String>) -> ParseError {
        ParseError {
            position: self.position(),
            kind: ParseErrorKind::Unexpected {
                found: self.peek().describe(),
                expected,
            },
        }
    }

    fn parse_all(mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Token::End {
            return Err(ParseError {
                position: 0,
                kind: ParseErrorKind::Empty,
            });
        }
        let e = self.expr()?;
        if *self.peek() != Token::End {
            return Err(self.unexpected(operator_expected(None)));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinOp::Add,
                Token::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinOp::Mul,
                Token::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Token::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Token::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let position = self.position();
        match self.peek().clone() {
            Token::Num(x) => {
                self.bump();
                Ok(Expr::Num(x))
            }
            Token::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.close_paren()?;
                Ok(inner)
            }
            Token::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "t" => return Ok(Expr::Var),
                    "pi" => return Ok(Expr::Const(Constant::Pi)),
                    "e" => return Ok(Expr::Const(Constant::E)),
                    _ => {}
                }
                let func = Func::ALL
                    .into_iter()
                    .find(|f| f.name() == name)
                    .ok_or(ParseError {
                        position,
                        kind: ParseErrorKind::UnknownName(name.clone()),
                    })?;
                if *self.peek() != Token::LParen {
                    return Err(self.unexpected(vec!["'('".into()]));
                }
                self.bump();
                let arg = self.expr()?;
                self.close_paren()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            _ => Err(self.unexpected(atom_expected())),
        }
    }

    fn close_paren(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Token::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(operator_expected(Some("')'"))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn num(x: f64) -> Box<Expr> {
        Box::new(Expr::Num(x))
    }

    fn eval(text: &str, t: f64) -> f64 {
        Expr::parse(text).unwrap().eval(t).unwrap()
    }

    #[test]
    fn parses_power_of_negation() {
        let e = Expr::parse("3^(-t)").unwrap();
        assert_eq!(
            e,
            Expr::Binary(BinOp::Pow, num(3.0), Box::new(Expr::Neg(Box::new(Expr::Var))))
        );
    }

    #[test]
    fn parses_sum_of_quotients() {
        let e = Expr::parse("1/2 + cos(t)/4").unwrap();
        let expected = Expr::Binary(
            BinOp::Add,
            Box::new(Expr::Binary(BinOp::Div, num(1.0), num(2.0))),
            Box::new(Expr::Binary(
                BinOp::Div,
                Box::new(Expr::Call(Func::Cos, Box::new(Expr::Var))),
                num(4.0),
            )),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn unbalanced_paren_reports_end_position() {
        let err = Expr::parse("exp(-0.5*t").unwrap_err();
        assert_eq!(err.position, 10);
        match err.kind {
            ParseErrorKind::Unexpected { found, expected } => {
                assert_eq!(found, "end of input");
                assert!(expected.contains(&"')'".to_string()));
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed() {
        for (text, position) in [("", 0), ("2 +", 3), ("(1", 2), ("2 3", 2), ("*2", 0), ("1 $ 2", 2)] {
            let err = Expr::parse(text).unwrap_err();
            assert_eq!(err.position, position, "{text:?}: {err}");
        }
        let err = Expr::parse("2 * log(t)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownName("log".into()));
        assert_eq!(err.position, 4);
        assert!(Expr::parse("sin t").is_err());
    }

    #[test]
    fn evaluates() {
        assert!((eval("3^(-t)", 2.0) - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(eval("2^(-t)", 3.0), 0.125);
        assert_eq!(eval("2+3*4", 0.0), 14.0);
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("-2^2", 0.0), -4.0);
        assert_eq!(eval("2 - -3", 0.0), 5.0);
        assert_eq!(eval("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(eval("abs(-t)", 2.5), 2.5);
        assert_eq!(eval("1.5e2 + .5", 0.0), 150.5);
        assert!((eval("cos(pi) + e", 0.0) - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert_eq!(eval("2 × 3 − 1 ÷ 2", 0.0), 5.5);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let err = Expr::parse("1/(t-1)").unwrap().eval(1.0).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);
        assert_eq!(err.subexpression, "1 / (t - 1)");
        let err = Expr::parse("0^(-t)").unwrap().eval(1.0).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::ZeroToNegativePower);
        let err = Expr::parse("(-8)^0.5").unwrap().eval(0.0).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::NotFinite);
    }

    #[test]
    fn format_uses_minimal_parentheses() {
        let cases = [
            ("(1+t)*2", "(1 + t) * 2"),
            ("1+(t*2)", "1 + t * 2"),
            ("1-(2-3)", "1 - (2 - 3)"),
            ("(1-2)-3", "1 - 2 - 3"),
            ("3^(-t)", "3^-t"),
            ("(2^3)^2", "(2^3)^2"),
            ("2^(3^2)", "2^3^2"),
            ("(-2)^2", "(-2)^2"),
            ("-(2^2)", "-2^2"),
            ("-(1+t)", "-(1 + t)"),
            ("exp((t))", "exp(t)"),
            ("2^(t+1)", "2^(t + 1)"),
        ];
        for (input, formatted) in cases {
            assert_eq!(Expr::parse(input).unwrap().to_string(), formatted);
        }
    }

    #[test]
    fn has_var() {
        assert!(Expr::parse("exp(-t)").unwrap().has_var());
        assert!(!Expr::parse("2 * pi").unwrap().has_var());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..10_000).prop_map(|n| Expr::Num(f64::from(n) / 100.0)),
            (0.0f64..1e6).prop_map(Expr::Num),
            Just(Expr::Var),
            Just(Expr::Const(Constant::Pi)),
            Just(Expr::Const(Constant::E)),
        ];
        leaf.prop_recursive(6, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r))),
                (
                    prop_oneof![Just(Func::Exp), Just(Func::Sin), Just(Func::Cos), Just(Func::Abs)],
                    inner
                )
                    .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn format_parse_round_trip(e in arb_expr()) {
            let text = e.to_string();
            let back = Expr::parse(&text).unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn eval_is_deterministic(e in arb_expr(), t in -10.0f64..10.0) {
            let a = e.eval(t);
            let b = e.eval(t);
            match (a, b) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }
}
