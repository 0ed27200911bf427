//! Arithmetic expressions over state variables `x1..xn` and named parameters.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          (right associative)
//! atom    := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `-2^2` therefore parses as `-(2^2)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::{Error, Result};

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
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Min,
    Max,
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Norm2,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Abs,
        Func::Min,
        Func::Max,
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Sqrt,
        Func::Norm2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Norm2 => "norm2",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Accepted argument counts as `(min, max)`.
    pub fn arity(self) -> (usize, usize) {
        match self {
            Func::Min | Func::Max => (2, usize::MAX),
            Func::Norm2 => (1, usize::MAX),
            _ => (1, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based state coordinate, printed as `x{index + 1}`.
    Var(usize),
    Param {
        name: String,
        value: f64,
    },
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        args: Vec<Expr>,
    },
}

fn eval_err(msg: impl Into<String>) -> Error {
    Error::Evaluation(msg.into())
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(eval_err(format!("{what} produced a non-finite value")))
    }
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    /// Largest variable index referenced plus one.
    pub fn min_dim(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Param { .. } => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(e) => e.min_dim(),
            Expr::Binary { lhs, rhs, .. } => lhs.min_dim().max(rhs.min_dim()),
            Expr::Call { args, .. } => args.iter().map(Expr::min_dim).max().unwrap_or(0),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Param { value, .. } => Ok(*value),
            Expr::Var(i) => x
                .get(*i)
                .copied()
                .ok_or_else(|| eval_err(format!("variable x{} is out of range", i + 1))),
            Expr::Neg(e) => Ok(-e.eval(x)?),
            Expr::Binary { op, lhs, rhs } => {
                let a = lhs.eval(x)?;
                let b = rhs.eval(x)?;
                match op {
                    BinOp::Add => finite(a + b, "addition"),
                    BinOp::Sub => finite(a - b, "subtraction"),
                    BinOp::Mul => finite(a * b, "multiplication"),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(eval_err("division by zero"))
                        } else {
                            finite(a / b, "division")
                        }
                    }
                    BinOp::Pow => finite(a.powf(b), "power"),
                }
            }
            Expr::Call { func, args } => {
                let vals = args.iter().map(|a| a.eval(x)).collect::<Result<Vec<_>>>()?;
                apply(*func, &vals)
            }
        }
    }

    /// Value and directional derivative along `dir` (forward-mode).
    pub fn eval_dual(&self, x: &[f64], dir: &[f64]) -> Result<(f64, f64)> {
        match self {
            Expr::Const(c) => Ok((*c, 0.0)),
            Expr::Param { value, .. } => Ok((*value, 0.0)),
            Expr::Var(i) => {
                let v = x
                    .get(*i)
                    .copied()
                    .ok_or_else(|| eval_err(format!("variable x{} is out of range", i + 1)))?;
                Ok((v, dir.get(*i).copied().unwrap_or(0.0)))
            }
            Expr::Neg(e) => {
                let (v, d) = e.eval_dual(x, dir)?;
                Ok((-v, -d))
            }
            Expr::Binary { op, lhs, rhs } => {
                let (a, da) = lhs.eval_dual(x, dir)?;
                let (b, db) = rhs.eval_dual(x, dir)?;
                let (v, d) = match op {
                    BinOp::Add => (a + b, da + db),
                    BinOp::Sub => (a - b, da - db),
                    BinOp::Mul => (a * b, da * b + a * db),
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(eval_err("division by zero"));
                        }
                        (a / b, (da * b - a * db) / (b * b))
                    }
                    BinOp::Pow => {
                        let v = a.powf(b);
                        let mut d = 0.0;
                        if da != 0.0 {
                            d += if b == 0.0 { 0.0 } else { b * a.powf(b - 1.0) * da };
                        }
                        if db != 0.0 {
                            if a <= 0.0 {
                                return Err(eval_err("derivative of a power with nonpositive base"));
                            }
                            d += v * a.ln() * db;
                        }
                        (v, d)
                    }
                };
                Ok((finite(v, "evaluation")?, finite(d, "derivative")?))
            }
            Expr::Call { func, args } => {
                let duals = args
                    .iter()
                    .map(|a| a.eval_dual(x, dir))
                    .collect::<Result<Vec<_>>>()?;
                let vals: Vec<f64> = duals.iter().map(|p| p.0).collect();
                let v = apply(*func, &vals)?;
                let a = duals[0];
                let d = match func {
                    Func::Abs => a.1 * sign(a.0),
                    Func::Exp => v * a.1,
                    Func::Log => a.1 / a.0,
                    Func::Sin => a.0.cos() * a.1,
                    Func::Cos => -a.0.sin() * a.1,
                    Func::Sqrt => {
                        if v == 0.0 {
                            return Err(eval_err("derivative of sqrt at 0"));
                        }
                        a.1 / (2.0 * v)
                    }
                    Func::Min | Func::Max => {
                        let pick = duals
                            .iter()
                            .find(|p| p.0 == v)
                            .map(|p| p.1)
                            .unwrap_or(0.0);
                        pick
                    }
                    Func::Norm2 => {
                        if v == 0.0 {
                            0.0
                        } else {
                            duals.iter().map(|p| p.0 * p.1).sum::<f64>() / v
                        }
                    }
                };
                Ok((v, finite(d, "derivative")?))
            }
        }
    }

    /// Gradient by forward-mode differentiation, one pass per coordinate.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut dir = vec![0.0; x.len()];
        let mut g = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            dir[i] = 1.0;
            g.push(self.eval_dual(x, &dir)?.1);
            dir[i] = 0.0;
        }
        Ok(g)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn apply(func: Func, vals: &[f64]) -> Result<f64> {
    let a = vals[0];
    let v = match func {
        Func::Abs => a.abs(),
        Func::Min => vals.iter().cloned().fold(f64::INFINITY, f64::min),
        Func::Max => vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        Func::Exp => a.exp(),
        Func::Log => {
            if a <= 0.0 {
                return Err(eval_err("log of a nonpositive value"));
            }
            a.ln()
        }
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Sqrt => {
            if a < 0.0 {
                return Err(eval_err("sqrt of a negative value"));
            }
            a.sqrt()
        }
        Func::Norm2 => vals.iter().map(|v| v * v).sum::<f64>().sqrt(),
    };
    finite(v, func.name())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Param { name, .. } => write!(f, "{name}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expr::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        let start_col = column;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| Error::Syntax {
                line,
                column: start_col,
                message: format!("malformed number `{text}`"),
            })?;
            column += i - start;
            out.push(Token {
                tok: Tok::Num(value),
                line,
                column: start_col,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            column += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line,
                column: start_col,
            });
            continue;
        }
        if "+-*/^(),".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                line,
                column: start_col,
            });
            i += 1;
            column += 1;
            continue;
        }
        return Err(Error::Syntax {
            line,
            column,
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
    params: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.pos += 1;
        }
        t
    }

    fn error_at(tok: &Token, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: tok.line,
            column: tok.column,
            message: message.into(),
        }
    }

    fn unexpected(tok: &Token) -> Error {
        match &tok.tok {
            Tok::Eof => Self::error_at(tok, "unexpected end of input"),
            Tok::Num(v) => Self::error_at(tok, format!("unexpected number `{v}`")),
            Tok::Ident(s) => Self::error_at(tok, format!("unexpected identifier `{s}`")),
            Tok::Sym(c) => Self::error_at(tok, format!("unexpected `{c}`")),
        }
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.is_sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(Self::unexpected(self.peek()))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_sym('+') {
                BinOp::Add
            } else if self.is_sym('-') {
                BinOp::Sub
            } else {
                break;
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.is_sym('*') {
                BinOp::Mul
            } else if self.is_sym('/') {
                BinOp::Div
            } else {
                break;
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.is_sym('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.is_sym('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.bump();
        match &tok.tok {
            Tok::Num(v) => Ok(Expr::Const(*v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.is_sym('(') {
                    let func = Func::from_name(name)
                        .ok_or_else(|| Self::error_at(&tok, format!("unknown function `{name}`")))?;
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while self.is_sym(',') {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect_sym(')')?;
                    let (lo, hi) = func.arity();
                    if args.len() < lo || args.len() > hi {
                        return Err(Self::error_at(
                            &tok,
                            format!("`{name}` called with {} argument(s)", args.len()),
                        ));
                    }
                    return Ok(Expr::Call { func, args });
                }
                self.identifier(&tok, name)
            }
            _ => Err(Self::unexpected(&tok)),
        }
    }

    fn identifier(&self, tok: &Token, name: &str) -> Result<Expr> {
        if let Some(v) = self.params.get(name) {
            return Ok(Expr::Param {
                name: name.to_string(),
                value: *v,
            });
        }
        if let Some(idx) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
            if idx >= 1 && idx <= self.dim {
                return Ok(Expr::Var(idx - 1));
            }
            return Err(Self::error_at(
                tok,
                format!("variable `{name}` exceeds dimension {}", self.dim),
            ));
        }
        if name == "pi" {
            return Ok(Expr::Const(std::f64::consts::PI));
        }
        if Func::from_name(name).is_some() {
            return Err(Self::error_at(tok, format!("function `{name}` used without arguments")));
        }
        Err(Self::error_at(tok, format!("unbound identifier `{name}`")))
    }
}

/// Parses `src` with state dimension `dim` and the given parameter bindings.
pub fn parse_expression(src: &str, dim: usize, params: &BTreeMap<String, f64>) -> Result<Expr> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        dim,
        params,
    };
    let e = p.expr()?;
    let next = p.peek();
    if !matches!(next.tok, Tok::Eof) {
        return Err(Parser::unexpected(next));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Result<Expr> {
        parse_expression(src, 3, &BTreeMap::new())
    }

    #[test]
    fn parameterised_field() {
        let params = BTreeMap::from([("R".to_string(), 2.0), ("L".to_string(), 1.0)]);
        let e = parse_expression("-(R/L)*x1", 1, &params).unwrap();
        assert_eq!(e.eval(&[0.5]).unwrap(), -1.0);
    }

    #[test]
    fn abs_and_power() {
        assert_eq!(parse("x1^2 + abs(x2)").unwrap().eval(&[2.0, -3.0, 0.0]).unwrap(), 7.0);
    }

    #[test]
    fn dangling_operator_reports_column() {
        match parse("x1 +") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 5)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("2+3*4^2").unwrap().eval(&[]).unwrap(), 50.0);
        assert_eq!(parse("-2^2").unwrap().eval(&[]).unwrap(), -4.0);
        assert_eq!(parse("2^3^2").unwrap().eval(&[]).unwrap(), 512.0);
        assert_eq!(parse("8/4/2").unwrap().eval(&[]).unwrap(), 1.0);
        assert_eq!(parse("2^-1").unwrap().eval(&[]).unwrap(), 0.5);
        assert_eq!(parse("1e-1 * 10").unwrap().eval(&[]).unwrap(), 1.0);
    }

    #[test]
    fn evaluation_errors_are_explicit() {
        assert!(matches!(parse("1/(x1-x1)").unwrap().eval(&[1.0, 0.0, 0.0]), Err(Error::Evaluation(_))));
        assert!(matches!(parse("log(x1)").unwrap().eval(&[0.0, 0.0, 0.0]), Err(Error::Evaluation(_))));
    }

    #[test]
    fn identifier_errors() {
        assert!(matches!(parse("x4 + 1"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("foo * 2"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("exp(1, 2)"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("min(1)"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("(1 + 2"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn multiline_positions() {
        match parse("1 +\n  * 2") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn forward_mode_gradient() {
        let e = parse("x1^2*x2 + sin(x3) + norm2(x1, x2)").unwrap();
        let x = [1.0, 2.0, 0.5];
        let g = e.gradient(&x).unwrap();
        let n = (5.0f64).sqrt();
        assert!((g[0] - (4.0 + 1.0 / n)).abs() < 1e-14);
        assert!((g[1] - (1.0 + 2.0 / n)).abs() < 1e-14);
        assert!((g[2] - 0.5f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn display_round_trips() {
        let e = parse("-(x1 - 2.5e-3)^2 / max(x2, 1, x3) + cos(pi)").unwrap();
        let again = parse(&e.to_string()).unwrap();
        assert_eq!(e, again);
    }
}
