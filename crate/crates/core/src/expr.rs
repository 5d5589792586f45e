//! A tiny arithmetic expression language for component functions.
//!
//! Grammar: `+ - * / ^`, parentheses, numeric literals, `pi`, named
//! variables and the functions `sin cos exp log sqrt`. Expressions are
//! evaluated over any [`Scalar`] (plain floats or jets) and can be
//! differentiated symbolically, which is how target-side derivatives of the
//! map's metric and of the potential are obtained.

use std::fmt;

use crate::error::ParseError;
use crate::jet::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

use Expr::*;

// Simplifying constructors keep symbolic derivatives small.
pub fn num(v: f64) -> Expr {
    Num(v)
}

pub fn var(i: usize) -> Expr {
    Var(i)
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x + y),
        (Num(x), _) if *x == 0.0 => b,
        (_, Num(y)) if *y == 0.0 => a,
        _ => Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x - y),
        (_, Num(y)) if *y == 0.0 => a,
        (Num(x), _) if *x == 0.0 => neg(b),
        _ => Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x * y),
        (Num(x), _) | (_, Num(x)) if *x == 0.0 => Num(0.0),
        (Num(x), _) if *x == 1.0 => b,
        (_, Num(y)) if *y == 1.0 => a,
        _ => Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) if *y != 0.0 => Num(x / y),
        (Num(x), _) if *x == 0.0 => Num(0.0),
        (_, Num(y)) if *y == 1.0 => a,
        _ => Div(Box::new(a), Box::new(b)),
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Num(x) => Num(-x),
        Neg(inner) => *inner,
        other => Neg(Box::new(other)),
    }
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Num(y)) if *y == 0.0 => Num(1.0),
        (_, Num(y)) if *y == 1.0 => a,
        (Num(x), Num(y)) if *x > 0.0 || y.fract() == 0.0 => Num(x.powf(*y)),
        _ => Pow(Box::new(a), Box::new(b)),
    }
}

pub fn call(f: Func, a: Expr) -> Expr {
    Call(f, Box::new(a))
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        add(self, o)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        sub(self, o)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        mul(self, o)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, o: Expr) -> Expr {
        div(self, o)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl Expr {
    /// Parse `src` with variables named by `vars` (index = position).
    pub fn parse(src: &str, vars: &[String]) -> Result<Expr, ParseError> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0, vars };
        let e = p.expr()?;
        match p.peek() {
            Tok { kind: Kind::End, .. } => Ok(e),
            t => Err(ParseError::new(t.line, t.col, format!("unexpected {}", t.kind.describe()))),
        }
    }

    pub fn is_const(&self) -> bool {
        match self {
            Num(_) => true,
            Var(_) => false,
            Neg(a) | Call(_, a) => a.is_const(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.is_const() && b.is_const(),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Num(_) => None,
            Var(i) => Some(*i),
            Neg(a) | Call(_, a) => a.max_var(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Evaluate with `vals[i]` substituted for variable `i`; `one` fixes the
    /// scalar kind when the expression has no variables.
    pub fn eval<S: Scalar>(&self, vals: &[S], one: &S) -> S {
        match self {
            Num(v) => one.lift(*v),
            Var(i) => vals[*i].clone(),
            Neg(a) => a.eval(vals, one).negate(),
            Add(a, b) => a.eval(vals, one).plus(&b.eval(vals, one)),
            Sub(a, b) => a.eval(vals, one).minus(&b.eval(vals, one)),
            Mul(a, b) => a.eval(vals, one).times(&b.eval(vals, one)),
            Div(a, b) => a.eval(vals, one).over(&b.eval(vals, one)),
            Pow(a, b) => {
                let base = a.eval(vals, one);
                if b.is_const() {
                    let p = b.eval(&[] as &[f64], &1.0);
                    if p.fract() == 0.0 && p.abs() <= 64.0 {
                        base.powi(p as i32)
                    } else {
                        base.powf(p)
                    }
                } else {
                    b.eval(vals, one).times(&base.ln()).exp()
                }
            }
            Call(f, a) => {
                let x = a.eval(vals, one);
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        }
    }

    pub fn eval_f64(&self, vals: &[f64]) -> f64 {
        self.eval(vals, &1.0)
    }

    /// Symbolic partial derivative with respect to variable `v`.
    pub fn diff(&self, v: usize) -> Expr {
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == v { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(v)),
            Add(a, b) => add(a.diff(v), b.diff(v)),
            Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Mul(a, b) => add(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v))),
            Div(a, b) => {
                let num_ = sub(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v)));
                div(num_, pow((**b).clone(), Num(2.0)))
            }
            Pow(a, b) => {
                if b.is_const() {
                    let p = b.eval_f64(&[]);
                    mul(mul(Num(p), pow((**a).clone(), Num(p - 1.0))), a.diff(v))
                } else {
                    // d(a^b) = a^b (b' log a + b a'/a)
                    let t = add(
                        mul(b.diff(v), call(Func::Log, (**a).clone())),
                        div(mul((**b).clone(), a.diff(v)), (**a).clone()),
                    );
                    mul(self.clone(), t)
                }
            }
            Call(f, a) => {
                let da = a.diff(v);
                if da == Num(0.0) {
                    return Num(0.0);
                }
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Exp => self.clone(),
                    Func::Log => div(Num(1.0), inner),
                    Func::Sqrt => div(Num(0.5), self.clone()),
                };
                mul(outer, da)
            }
        }
    }

    /// Substitute expressions for variables.
    pub fn subst(&self, with: &[Expr]) -> Expr {
        match self {
            Num(v) => Num(*v),
            Var(i) => with[*i].clone(),
            Neg(a) => neg(a.subst(with)),
            Add(a, b) => add(a.subst(with), b.subst(with)),
            Sub(a, b) => sub(a.subst(with), b.subst(with)),
            Mul(a, b) => mul(a.subst(with), b.subst(with)),
            Div(a, b) => div(a.subst(with), b.subst(with)),
            Pow(a, b) => pow(a.subst(with), b.subst(with)),
            Call(f, a) => call(*f, a.subst(with)),
        }
    }

    /// Render with the given variable names; the output parses back to an
    /// equal tree (up to the simplifying constructors).
    pub fn render(&self, vars: &[String]) -> String {
        Render { e: self, vars }.to_string()
    }
}

struct Render<'a> {
    e: &'a Expr,
    vars: &'a [String],
}

impl fmt::Display for Render<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.e, self.vars, f)
    }
}

fn write_expr(e: &Expr, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Num(v) => {
            if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                write!(f, "(-{:?})", -v)
            } else {
                write!(f, "{v:?}")
            }
        }
        Var(i) => write!(f, "{}", vars[*i]),
        Neg(a) => {
            write!(f, "(-")?;
            write_expr(a, vars, f)?;
            write!(f, ")")
        }
        Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => {
            let op = match e {
                Add(..) => "+",
                Sub(..) => "-",
                Mul(..) => "*",
                Div(..) => "/",
                _ => "^",
            };
            write!(f, "(")?;
            write_expr(a, vars, f)?;
            write!(f, " {op} ")?;
            write_expr(b, vars, f)?;
            write!(f, ")")
        }
        Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, vars, f)?;
            write!(f, ")")
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Kind {
    fn describe(&self) -> String {
        match self {
            Kind::Num(v) => format!("number {v}"),
            Kind::Ident(s) => format!("identifier '{s}'"),
            Kind::Op(c) => format!("'{c}'"),
            Kind::LParen => "'('".into(),
            Kind::RParen => "')'".into(),
            Kind::End => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Tok {
    kind: Kind,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Tok>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
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
            let v: f64 = text
                .parse()
                .map_err(|_| ParseError::new(l0, c0, format!("malformed number '{text}'")))?;
            col += i - start;
            out.push(Tok { kind: Kind::Num(v), line: l0, col: c0 });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Tok { kind: Kind::Ident(chars[start..i].iter().collect()), line: l0, col: c0 });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => Kind::Op(c),
            '(' => Kind::LParen,
            ')' => Kind::RParen,
            _ => return Err(ParseError::new(l0, c0, format!("unexpected character '{c}'"))),
        };
        out.push(Tok { kind, line: l0, col: c0 });
        i += 1;
        col += 1;
    }
    out.push(Tok { kind: Kind::End, line, col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Tok, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(t.line, t.col, msg.into()))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().kind {
                Kind::Op('+') => {
                    self.next();
                    lhs = Add(Box::new(lhs), Box::new(self.term()?));
                }
                Kind::Op('-') => {
                    self.next();
                    lhs = Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().kind {
                Kind::Op('*') => {
                    self.next();
                    lhs = Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Kind::Op('/') => {
                    self.next();
                    lhs = Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().kind {
            Kind::Op('-') => {
                self.next();
                Ok(Neg(Box::new(self.unary()?)))
            }
            Kind::Op('+') => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().kind == Kind::Op('^') {
            self.next();
            let ex = self.unary()?;
            return Ok(Pow(Box::new(base), Box::new(ex)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.next();
        match &t.kind {
            Kind::Num(v) => Ok(Num(*v)),
            Kind::LParen => {
                let e = self.expr()?;
                let close = self.next();
                if close.kind != Kind::RParen {
                    return self.err(&close, format!("expected ')', found {}", close.kind.describe()));
                }
                Ok(e)
            }
            Kind::Ident(name) => {
                if let Some(func) = Func::from_name(name) {
                    let open = self.next();
                    if open.kind != Kind::LParen {
                        return self.err(&open, format!("expected '(' after {name}"));
                    }
                    let arg = self.expr()?;
                    let close = self.next();
                    if close.kind != Kind::RParen {
                        return self.err(&close, format!("expected ')', found {}", close.kind.describe()));
                    }
                    return Ok(Call(func, Box::new(arg)));
                }
                if let Some(i) = self.vars.iter().position(|v| v == name) {
                    return Ok(Var(i));
                }
                if name == "pi" {
                    return Ok(Num(std::f64::consts::PI));
                }
                self.err(&t, format!("unknown identifier '{name}'"))
            }
            other => self.err(&t, format!("unexpected {}", other.describe())),
        }
    }
}
