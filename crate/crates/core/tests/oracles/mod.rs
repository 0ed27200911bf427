//! Independent reference implementations used by the integration and acceptance
//! tests. None of this calls into the library's parser or solvers.

#![allow(dead_code)]

use std::collections::BTreeMap;

use inclusion_core::sysconfig::{BinOp, Expr, Func};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Option<Vec<Tok>> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                i += 1;
                if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
                    i += 1;
                }
                while i < b.len() && (b[i] as char).is_ascii_digit() {
                    i += 1;
                }
            }
            out.push(Tok::Num(src[start..i].parse().ok()?));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Name(src[start..i].to_string()));
        } else {
            out.push(match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                _ => return None,
            });
            i += 1;
        }
    }
    Some(out)
}

#[derive(Debug, Clone)]
enum Stack {
    Op(char),
    /// Unary minus.
    Neg,
    LParen,
    Func(String),
}

#[derive(Debug, Clone)]
enum Rpn {
    Num(f64),
    Op(char),
    Neg,
    Call(String, usize),
}

fn prec(op: &Stack) -> u8 {
    match op {
        Stack::Op('+') | Stack::Op('-') => 1,
        Stack::Op('*') | Stack::Op('/') => 2,
        Stack::Neg => 3,
        Stack::Op('^') => 4,
        _ => 0,
    }
}

fn to_rpn(toks: &[Tok], vars: &[f64], params: &BTreeMap<String, f64>) -> Option<Vec<Rpn>> {
    let mut out = Vec::new();
    let mut stack: Vec<Stack> = Vec::new();
    // argument counters for open calls, parallel to LParen entries
    let mut arity: Vec<Option<usize>> = Vec::new();
    let mut expect_operand = true;
    let mut i = 0;
    while i < toks.len() {
        match &toks[i] {
            Tok::Num(v) => {
                out.push(Rpn::Num(*v));
                expect_operand = false;
            }
            Tok::Name(n) => {
                if matches!(toks.get(i + 1), Some(Tok::LParen)) {
                    stack.push(Stack::Func(n.clone()));
                } else if let Some(k) = n.strip_prefix('x').and_then(|k| k.parse::<usize>().ok()) {
                    out.push(Rpn::Num(*vars.get(k.checked_sub(1)?)?));
                    expect_operand = false;
                } else {
                    out.push(Rpn::Num(*params.get(n)?));
                    expect_operand = false;
                }
            }
            Tok::Op('-') if expect_operand => stack.push(Stack::Neg),
            Tok::Op(c) => {
                if expect_operand {
                    return None;
                }
                let cur = Stack::Op(*c);
                let right = *c == '^';
                while let Some(top) = stack.last() {
                    let pop = match top {
                        Stack::Op(_) | Stack::Neg => {
                            if right {
                                prec(top) > prec(&cur)
                            } else {
                                prec(top) >= prec(&cur)
                            }
                        }
                        _ => false,
                    };
                    if !pop {
                        break;
                    }
                    out.push(match stack.pop()? {
                        Stack::Op(o) => Rpn::Op(o),
                        _ => Rpn::Neg,
                    });
                }
                stack.push(cur);
                expect_operand = true;
            }
            Tok::LParen => {
                let is_call = matches!(stack.last(), Some(Stack::Func(_)));
                stack.push(Stack::LParen);
                arity.push(is_call.then_some(1));
                expect_operand = true;
            }
            Tok::Comma | Tok::RParen => {
                loop {
                    match stack.pop()? {
                        Stack::LParen => break,
                        Stack::Op(o) => out.push(Rpn::Op(o)),
                        Stack::Neg => out.push(Rpn::Neg),
                        Stack::Func(_) => return None,
                    }
                }
                if toks[i] == Tok::Comma {
                    let n = arity.last_mut()?.as_mut()?;
                    *n += 1;
                    stack.push(Stack::LParen);
                    expect_operand = true;
                } else {
                    let count = arity.pop()?;
                    if let Some(n) = count {
                        match stack.pop()? {
                            Stack::Func(f) => out.push(Rpn::Call(f, n)),
                            _ => return None,
                        }
                    }
                    expect_operand = false;
                }
            }
        }
        i += 1;
    }
    while let Some(s) = stack.pop() {
        match s {
            Stack::Op(o) => out.push(Rpn::Op(o)),
            Stack::Neg => out.push(Rpn::Neg),
            _ => return None,
        }
    }
    Some(out)
}

fn ok(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Shunting-yard evaluation of `src`. `None` on syntax or domain errors (division
/// by zero, log of a nonpositive value, sqrt of a negative value, non-finite
/// intermediate results).
pub fn reference_eval(src: &str, vars: &[f64], params: &BTreeMap<String, f64>) -> Option<f64> {
    let rpn = to_rpn(&tokenize(src)?, vars, params)?;
    let mut st: Vec<f64> = Vec::new();
    for item in rpn {
        match item {
            Rpn::Num(v) => st.push(v),
            Rpn::Neg => {
                let a = st.pop()?;
                st.push(-a);
            }
            Rpn::Op(o) => {
                let b = st.pop()?;
                let a = st.pop()?;
                st.push(match o {
                    '+' => ok(a + b)?,
                    '-' => ok(a - b)?,
                    '*' => ok(a * b)?,
                    '/' => {
                        if b == 0.0 {
                            return None;
                        }
                        ok(a / b)?
                    }
                    '^' => ok(a.powf(b))?,
                    _ => return None,
                });
            }
            Rpn::Call(name, n) => {
                if st.len() < n {
                    return None;
                }
                let args = st.split_off(st.len() - n);
                let one = || (n == 1).then(|| args[0]);
                st.push(match name.as_str() {
                    "abs" => one()?.abs(),
                    "exp" => ok(one()?.exp())?,
                    "sin" => one()?.sin(),
                    "cos" => one()?.cos(),
                    "log" => {
                        let a = one()?;
                        if a <= 0.0 {
                            return None;
                        }
                        a.ln()
                    }
                    "sqrt" => {
                        let a = one()?;
                        if a < 0.0 {
                            return None;
                        }
                        a.sqrt()
                    }
                    "min" if n >= 2 => args.iter().cloned().fold(f64::INFINITY, f64::min),
                    "max" if n >= 2 => args.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    "norm2" => ok(args.iter().map(|v| v * v).sum::<f64>().sqrt())?,
                    _ => return None,
                });
            }
        }
    }
    (st.len() == 1).then(|| st[0])
}

const FUNCS: [(&str, usize); 9] = [
    ("abs", 1),
    ("exp", 1),
    ("log", 1),
    ("sin", 1),
    ("cos", 1),
    ("sqrt", 1),
    ("min", 2),
    ("max", 3),
    ("norm2", 2),
];

fn random_number(rng: &mut impl Rng) -> String {
    match rng.gen_range(0..3) {
        0 => rng.gen_range(0..10).to_string(),
        1 => format!("{:.2}", rng.gen_range(0.0..5.0)),
        _ => format!("0.{}", rng.gen_range(1..100)),
    }
}

/// Random source text using only the precedence rules for grouping (parentheses
/// appear sparsely), over variables `x1..x{dim}` and parameters `a`, `b`.
pub fn random_source(rng: &mut impl Rng, depth: usize, dim: usize) -> String {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..4) {
            0 | 1 => format!("x{}", rng.gen_range(1..=dim)),
            2 => random_number(rng),
            _ => if rng.gen_bool(0.5) { "a" } else { "b" }.to_string(),
        };
    }
    match rng.gen_range(0..9) {
        0 => format!("({})", random_source(rng, depth - 1, dim)),
        1 => format!("-{}", random_source(rng, depth - 1, dim)),
        2 => {
            let (name, n) = FUNCS[rng.gen_range(0..FUNCS.len())];
            let args: Vec<String> = (0..n).map(|_| random_source(rng, depth - 1, dim)).collect();
            format!("{name}({})", args.join(", "))
        }
        3 => {
            // keep powers tame: small base, small exponent
            let base = if rng.gen_bool(0.5) {
                format!("x{}", rng.gen_range(1..=dim))
            } else {
                format!("({})", random_source(rng, depth - 1, dim))
            };
            let exp = ["2", "3", "0.5", "-1", "-2", "1.5"][rng.gen_range(0..6)];
            format!("{base}^{exp}")
        }
        _ => {
            let op = ['+', '-', '*', '/', '+'][rng.gen_range(0..5)];
            format!("{} {op} {}", random_source(rng, depth - 1, dim), random_source(rng, depth - 1, dim))
        }
    }
}

/// Random expression tree of depth at most `depth` with nonnegative constants, as
/// produced by the parser.
pub fn random_tree(rng: &mut impl Rng, depth: usize, dim: usize, params: &BTreeMap<String, f64>) -> Expr {
    if depth == 0 || rng.gen_bool(0.15) {
        return match rng.gen_range(0..3) {
            0 => Expr::Var(rng.gen_range(0..dim)),
            1 => Expr::Const((rng.gen_range(0.0..100.0f64) * 1000.0).round() / 1000.0),
            _ => {
                let names: Vec<&String> = params.keys().collect();
                let name = names[rng.gen_range(0..names.len())].clone();
                Expr::Param {
                    value: params[&name],
                    name,
                }
            }
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..4) {
        0 => Expr::Neg(Box::new(random_tree(rng, d, dim, params))),
        1 => {
            let func = Func::ALL[rng.gen_range(0..Func::ALL.len())];
            let (lo, hi) = func.arity();
            let n = rng.gen_range(lo..=hi.min(lo + 2));
            Expr::Call {
                func,
                args: (0..n).map(|_| random_tree(rng, d, dim, params)).collect(),
            }
        }
        _ => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][rng.gen_range(0..5)];
            Expr::binary(op, random_tree(rng, d, dim, params), random_tree(rng, d, dim, params))
        }
    }
}

pub fn depth(e: &Expr) -> usize {
    match e {
        Expr::Const(_) | Expr::Var(_) | Expr::Param { .. } => 0,
        Expr::Neg(a) => 1 + depth(a),
        Expr::Binary { lhs, rhs, .. } => 1 + depth(lhs).max(depth(rhs)),
        Expr::Call { args, .. } => 1 + args.iter().map(depth).max().unwrap_or(0),
    }
}

/// Grid argmin of `φ(y) + (y − x)²/(2λ)` on `[lo, hi]`: a coarse pass at step 1e−3
/// locates the basin, a fine pass at step 1e−6 resolves it. Valid for convex `φ`.
pub fn brute_prox_1d(phi: impl Fn(f64) -> f64, lambda: f64, x: f64, lo: f64, hi: f64) -> f64 {
    let obj = |y: f64| phi(y) + (y - x) * (y - x) / (2.0 * lambda);
    let scan = |a: f64, b: f64, step: f64| {
        let n = ((b - a) / step).ceil() as usize;
        let mut best = (f64::INFINITY, a);
        for k in 0..=n {
            let y = (a + k as f64 * step).min(b);
            let v = obj(y);
            if v < best.0 {
                best = (v, y);
            }
        }
        best.1
    };
    let coarse = scan(lo, hi, 1e-3);
    scan((coarse - 2e-3).max(lo), (coarse + 2e-3).min(hi), 1e-6)
}

/// Semi-implicit step of `ẋ = −x` (f ≡ 0, A = ∂‖·‖²/2), for cross-checking.
pub fn implicit_decay(x0: f64, h: f64, steps: usize) -> f64 {
    x0 / (1.0 + h).powi(steps as i32)
}
