//! Arithmetic expression language for scene files.
//!
//! Grammar, whitespace insensitive:
//!
//! ```text
//! expr  := term  (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'pi' | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! `+ - * /` associate left, `^` right and binds above unary minus, so
//! `-x1^2` is `-(x1^2)` and `2^3^2` is `2^(3^2)`. `pi` folds to its value
//! during parsing. Which variable names are in scope depends on the slot a
//! scene puts the expression in; [`Expr::check_vars`] enforces that before
//! any evaluation runs.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Cot,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "cot" => Func::Cot,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Cot => "cot",
        }
    }
}

/// Parse failure, pointing at the byte where the input stopped making sense.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while let Some(t) = lx.next_token()? {
            out.push(t);
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => return Ok(Some((start, self.lex_number()?))),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("identifier bytes are ascii");
                return Ok(Some((start, Tok::Ident(name.to_string()))));
            }
            other => {
                return Err(ParseError {
                    offset: start,
                    message: format!("unexpected character '{}'", other as char),
                })
            }
        };
        self.pos += 1;
        Ok(Some((start, tok)))
    }

    fn lex_number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all; "2e" is "2" then identifier "e".
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("digits are ascii");
        text.parse::<f64>().map(Tok::Num).map_err(|_| ParseError {
            offset: start,
            message: format!("malformed number '{text}'"),
        })
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(o, _)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.at += 1;
            Ok(())
        } else {
            Err(ParseError {
                offset: self.offset(),
                message: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.at += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.at += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError {
                        offset,
                        message: format!("unknown function '{name}'"),
                    })?;
                    self.at += 1;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "')' after function argument")?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if name == "pi" {
                    Ok(Expr::Num(std::f64::consts::PI))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some(_) | None => Err(ParseError {
                offset,
                message: "expected a number, name, or '('".to_string(),
            }),
        }
    }
}

/// Parses one expression. The whole input must be consumed.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = Lexer::tokenize(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: src.len(),
    };
    let e = p.expr()?;
    if p.at < p.toks.len() {
        return Err(ParseError {
            offset: p.offset(),
            message: "unexpected trailing input".to_string(),
        });
    }
    Ok(e)
}

impl Expr {
    /// Rejects variables outside the slot's scope before anything runs.
    pub fn check_vars(&self, allowed: &dyn Fn(&str) -> bool) -> Result<(), String> {
        match self {
            Expr::Num(_) => Ok(()),
            Expr::Var(name) => {
                if allowed(name) {
                    Ok(())
                } else {
                    Err(format!("unknown variable '{name}'"))
                }
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.check_vars(allowed),
            Expr::Bin(_, l, r) => {
                l.check_vars(allowed)?;
                r.check_vars(allowed)
            }
        }
    }

    /// Evaluates with the given variable bindings. Domain violations (zero
    /// divisor, log of a nonpositive value, square root of a negative,
    /// trigonometric poles) and any non-finite result are reported as
    /// errors, never returned as NaN or infinity.
    pub fn eval(&self, vars: &dyn Fn(&str) -> Option<f64>) -> Result<f64, String> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(name) => vars(name).ok_or_else(|| format!("unbound variable '{name}'"))?,
            Expr::Neg(e) => -e.eval(vars)?,
            Expr::Bin(op, l, r) => {
                let a = l.eval(vars)?;
                let b = r.eval(vars)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err("division by zero".to_string());
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(func, arg) => {
                let x = arg.eval(vars)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(format!("log of nonpositive value {x}"));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(format!("square root of negative value {x}"));
                        }
                        x.sqrt()
                    }
                    Func::Cot => {
                        let s = x.sin();
                        if s == 0.0 {
                            return Err(format!("cot pole at {x}"));
                        }
                        x.cos() / s
                    }
                }
            }
        };
        if !v.is_finite() {
            return Err("expression value is not finite".to_string());
        }
        Ok(v)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let mine = self.precedence();
        if mine < min {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_prec(f, mine)
            }
            Expr::Bin(op, l, r) => {
                let (sym, left_min, right_min) = match op {
                    BinOp::Add => ("+", mine, mine + 1),
                    BinOp::Sub => ("-", mine, mine + 1),
                    BinOp::Mul => ("*", mine, mine + 1),
                    BinOp::Div => ("/", mine, mine + 1),
                    // Right associative; the exponent slot admits unary minus.
                    BinOp::Pow => ("^", mine + 1, 3),
                };
                l.fmt_prec(f, left_min)?;
                write!(f, "{sym}")?;
                r.fmt_prec(f, right_min)
            }
            Expr::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.fmt_prec(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    /// Prints with the fewest parentheses that survive a round trip:
    /// `parse(e.to_string())` reconstructs `e` for any parser-produced AST.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}
