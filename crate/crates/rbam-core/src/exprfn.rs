//! A small arithmetic expression language (recursive-descent parser plus
//! evaluator) and the `FunctionModel` carrier used by removal operators,
//! decompositions and the CLI.
//!
//! Grammar, with whitespace insignificant:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := unary ('^' factor)?          -- '^' is right-associative
//! unary   := '-'? primary
//! primary := number | ident | call | '(' expr ')'
//! ```
//!
//! Variables are 1-indexed `x1..xd`. Calls are `max`/`min` (binary),
//! `abs`/`exp`/`log` and `relu` (unary); `relu` is a convenience extension
//! for piecewise test functions. Note the grammar makes unary minus bind
//! tighter than `^`, so `-x1^2` parses as `(-x1)^2`.

use crate::coalition::Permutation;
use crate::{Error, Result};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Func {
    Max,
    Min,
    Abs,
    Exp,
    Log,
    Relu,
}

impl Func {
    fn name(&self) -> &'static str {
        match self {
            Func::Max => "max",
            Func::Min => "min",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Relu => "relu",
        }
    }

    fn arity(&self) -> usize {
        match self {
            Func::Max | Func::Min => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "max" => Some(Func::Max),
            "min" => Some(Func::Min),
            "abs" => Some(Func::Abs),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "relu" => Some(Func::Relu),
            _ => None,
        }
    }
}

/// Expression AST; variables are stored 1-indexed.
#[derive(Clone, PartialEq, Debug)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Debug)]
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
    Comma,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while let Some((off, tok)) = lx.next_token()? {
            out.push((off, tok));
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Option<(usize, Tok)>> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let b = self.src[self.pos];
        let tok = match b {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            b'0'..=b'9' => self.lex_number(start)?,
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            other => {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("unexpected character {:?}", other as char),
                })
            }
        };
        Ok(Some((start, tok)))
    }

    fn lex_number(&mut self, start: usize) -> Result<Tok> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos + 1 < self.src.len()
            && self.src[self.pos] == b'.'
            && self.src[self.pos + 1].is_ascii_digit()
        {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let mut probe = self.pos + 1;
            if probe < self.src.len() && (self.src[probe] == b'+' || self.src[probe] == b'-') {
                probe += 1;
            }
            if probe < self.src.len() && self.src[probe].is_ascii_digit() {
                self.pos = probe;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse::<f64>().map(Tok::Num).map_err(|_| Error::Parse {
            offset: start,
            message: format!("bad number literal {text:?}"),
        })
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    end: usize,
    d: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.idx).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(_, t)| t.clone());
        self.idx += 1;
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<()> {
        if self.peek() == Some(want) {
            self.idx += 1;
            Ok(())
        } else {
            Err(Error::Parse {
                offset: self.offset(),
                message: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.idx += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            self.idx += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.idx += 1;
            let exp = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.idx += 1;
            let inner = self.primary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Num(n)) => Ok(Expr::Num(n)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => self.ident(offset, &name),
            _ => Err(Error::Parse {
                offset,
                message: "expected a number, variable, function call or '('".into(),
            }),
        }
    }

    fn ident(&mut self, offset: usize, name: &str) -> Result<Expr> {
        if let Some(idx_text) = name.strip_prefix('x') {
            if !idx_text.is_empty() && idx_text.bytes().all(|b| b.is_ascii_digit()) {
                let idx: usize = idx_text.parse().map_err(|_| Error::Parse {
                    offset,
                    message: format!("bad variable index in {name:?}"),
                })?;
                if idx == 0 || idx > self.d {
                    return Err(Error::Parse {
                        offset,
                        message: format!("variable {name} outside x1..x{}", self.d),
                    });
                }
                return Ok(Expr::Var(idx));
            }
        }
        let Some(func) = Func::from_name(name) else {
            return Err(Error::Parse {
                offset,
                message: format!("unknown identifier {name:?}"),
            });
        };
        self.expect(&Tok::LParen, &format!("'(' after {name}"))?;
        let mut args = vec![self.expr()?];
        while self.peek() == Some(&Tok::Comma) {
            self.idx += 1;
            args.push(self.expr()?);
        }
        self.expect(&Tok::RParen, "')'")?;
        if args.len() != func.arity() {
            return Err(Error::Parse {
                offset,
                message: format!(
                    "{name} expects {} argument(s), got {}",
                    func.arity(),
                    args.len()
                ),
            });
        }
        Ok(Expr::Call(func, args))
    }
}

/// Parses an expression over variables x1..xd.
pub fn parse(source: &str, d: usize) -> Result<Expr> {
    let toks = Lexer::tokens(source)?;
    let mut p = Parser {
        toks,
        idx: 0,
        end: source.len(),
        d,
    };
    let e = p.expr()?;
    if p.idx < p.toks.len() {
        return Err(Error::Parse {
            offset: p.offset(),
            message: "unexpected trailing input".into(),
        });
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Evaluation and printing
// ---------------------------------------------------------------------------

/// Evaluates an expression at a point. Division by zero, log of a
/// nonpositive argument and non-finite intermediate results are errors that
/// report the offending point.
pub fn evaluate(e: &Expr, x: &[f64]) -> Result<f64> {
    let v = eval_node(e, x)?;
    Ok(v)
}

fn eval_node(e: &Expr, x: &[f64]) -> Result<f64> {
    let v = match e {
        Expr::Num(n) => *n,
        Expr::Var(i) => {
            if *i > x.len() {
                return Err(Error::DimensionMismatch(format!(
                    "variable x{i} on a point of length {}",
                    x.len()
                )));
            }
            x[*i - 1]
        }
        Expr::Neg(a) => -eval_node(a, x)?,
        Expr::Bin(op, a, b) => {
            let va = eval_node(a, x)?;
            let vb = eval_node(b, x)?;
            match op {
                BinOp::Add => va + vb,
                BinOp::Sub => va - vb,
                BinOp::Mul => va * vb,
                BinOp::Div => {
                    if vb == 0.0 {
                        return Err(Error::Eval(format!("division by zero at x = {x:?}")));
                    }
                    va / vb
                }
                BinOp::Pow => va.powf(vb),
            }
        }
        Expr::Call(func, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_node(a, x)?);
            }
            match func {
                Func::Max => vals[0].max(vals[1]),
                Func::Min => vals[0].min(vals[1]),
                Func::Abs => vals[0].abs(),
                Func::Exp => vals[0].exp(),
                Func::Log => {
                    if vals[0] <= 0.0 {
                        return Err(Error::Eval(format!(
                            "log of non-positive value {} at x = {x:?}",
                            vals[0]
                        )));
                    }
                    vals[0].ln()
                }
                Func::Relu => vals[0].max(0.0),
            }
        }
    };
    if !v.is_finite() {
        return Err(Error::Eval(format!(
            "non-finite result {v} in {} at x = {x:?}",
            describe(e)
        )));
    }
    Ok(v)
}

fn describe(e: &Expr) -> String {
    match e {
        Expr::Num(_) => "literal".into(),
        Expr::Var(i) => format!("x{i}"),
        Expr::Neg(_) => "negation".into(),
        Expr::Bin(op, _, _) => format!("{op:?}").to_lowercase(),
        Expr::Call(f, _) => f.name().into(),
    }
}

/// Prints an expression; reparsing the output yields a structurally
/// identical AST (for ASTs produced by [`parse`]).
pub fn unparse(e: &Expr) -> String {
    print_expr(e)
}

fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Bin(BinOp::Add, a, b) => format!("{} + {}", print_expr(a), print_term(b)),
        Expr::Bin(BinOp::Sub, a, b) => format!("{} - {}", print_expr(a), print_term(b)),
        _ => print_term(e),
    }
}

fn print_term(e: &Expr) -> String {
    match e {
        Expr::Bin(BinOp::Mul, a, b) => format!("{}*{}", print_term(a), print_factor(b)),
        Expr::Bin(BinOp::Div, a, b) => format!("{}/{}", print_term(a), print_factor(b)),
        _ => print_factor(e),
    }
}

fn print_factor(e: &Expr) -> String {
    match e {
        Expr::Bin(BinOp::Pow, a, b) => format!("{}^{}", print_unary(a), print_factor(b)),
        _ => print_unary(e),
    }
}

fn print_unary(e: &Expr) -> String {
    match e {
        Expr::Neg(a) => format!("-{}", print_primary(a)),
        _ => print_primary(e),
    }
}

fn print_primary(e: &Expr) -> String {
    match e {
        Expr::Num(n) if *n >= 0.0 => format!("{n}"),
        Expr::Var(i) => format!("x{i}"),
        Expr::Call(f, args) => {
            let inner = args.iter().map(print_expr).collect::<Vec<_>>().join(",");
            format!("{}({inner})", f.name())
        }
        other => format!("({})", print_expr(other)),
    }
}

// ---------------------------------------------------------------------------
// FunctionModel
// ---------------------------------------------------------------------------

/// A per-coordinate closed interval, possibly unbounded.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Config(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn unbounded() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

type Evaluator = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

/// An evaluatable function f: X → ℝ over a hyperrectangle domain.
#[derive(Clone)]
pub struct FunctionModel {
    d: usize,
    domain: Vec<Interval>,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for FunctionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionModel")
            .field("d", &self.d)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl FunctionModel {
    /// Wraps an evaluator; the domain defaults to unbounded per coordinate.
    pub fn new<F>(d: usize, eval: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        if d == 0 {
            return Err(Error::Config("function dimension must be >= 1".into()));
        }
        Ok(FunctionModel {
            d,
            domain: vec![Interval::unbounded(); d],
            eval: Arc::new(eval),
        })
    }

    pub fn from_expr(expr: Expr, d: usize) -> Result<Self> {
        FunctionModel::new(d, move |x| evaluate(&expr, x))
    }

    /// Parses an expression over x1..xd into a model.
    pub fn parse(source: &str, d: usize) -> Result<Self> {
        FunctionModel::from_expr(parse(source, d)?, d)
    }

    pub fn constant(d: usize, c: f64) -> Result<Self> {
        FunctionModel::new(d, move |_| Ok(c))
    }

    pub fn zero(d: usize) -> Result<Self> {
        FunctionModel::constant(d, 0.0)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn with_domain(mut self, domain: Vec<Interval>) -> Result<Self> {
        if domain.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "domain of {} intervals for a {}-variable function",
                domain.len(),
                self.d
            )));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "point of length {} for a {}-variable function",
                x.len(),
                self.d
            )));
        }
        (self.eval)(x)
    }

    /// Σ coef·part, evaluated and summed in argument order. The domain is
    /// the per-coordinate intersection of the parts' domains.
    pub fn linear_combination(parts: Vec<(f64, FunctionModel)>) -> Result<Self> {
        let d = parts
            .first()
            .ok_or_else(|| Error::Config("empty linear combination".into()))?
            .1
            .d;
        let mut domain = vec![Interval::unbounded(); d];
        for (_, p) in &parts {
            if p.d != d {
                return Err(Error::DimensionMismatch(
                    "mixed dimensions in linear combination".into(),
                ));
            }
            for (dom, pd) in domain.iter_mut().zip(&p.domain) {
                dom.lo = dom.lo.max(pd.lo);
                dom.hi = dom.hi.min(pd.hi);
            }
        }
        let model = FunctionModel::new(d, move |x| {
            let mut acc = 0.0;
            for (coef, p) in &parts {
                acc += coef * p.evaluate(x)?;
            }
            Ok(acc)
        })?;
        model.with_domain(domain)
    }

    /// The permuted function πf, defined by (πf)(πx) = f(x); concretely
    /// (πf)(y) = f(y_{π⁻¹(1)}, ..., y_{π⁻¹(d)}).
    pub fn permuted(&self, pi: &Permutation) -> Result<Self> {
        if pi.d() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "permutation of [{}] on a {}-variable function",
                pi.d(),
                self.d
            )));
        }
        let inv = pi.inverse();
        let domain: Vec<Interval> = (1..=self.d).map(|i| self.domain[pi.apply(i) - 1]).collect();
        let inner = self.clone();
        let model = FunctionModel::new(self.d, move |y| {
            let x = inv.permute_point(y)?;
            inner.evaluate(&x)
        })?;
        model.with_domain(domain)
    }
}

/// Free-function form of [`FunctionModel::permuted`].
pub fn permuted_function(pi: &Permutation, f: &FunctionModel) -> Result<FunctionModel> {
    f.permuted(pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn precedence_of_plus_and_times() {
        let e = parse("x1 + x2*x3", 3).unwrap();
        let expect = Expr::Bin(
            BinOp::Add,
            Box::new(Expr::Var(1)),
            Box::new(Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Var(2)),
                Box::new(Expr::Var(3)),
            )),
        );
        assert_eq!(e, expect);
    }

    #[test]
    fn call_node() {
        let e = parse("max(x1,x2)", 2).unwrap();
        assert_eq!(e, Expr::Call(Func::Max, vec![Expr::Var(1), Expr::Var(2)]));
    }

    #[test]
    fn syntax_error_carries_byte_offset() {
        match parse("x1 + + x2", 2) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_and_bad_variable() {
        assert!(matches!(parse("y1 + 2", 3), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(parse("x4", 3), Err(Error::Parse { .. })));
        assert!(matches!(parse("x0", 3), Err(Error::Parse { .. })));
        assert!(matches!(parse("max(x1)", 3), Err(Error::Parse { .. })));
        assert!(matches!(parse("abs(x1, x2)", 3), Err(Error::Parse { .. })));
        assert!(matches!(parse("exp", 3), Err(Error::Parse { .. })));
        assert!(matches!(parse("x1 x2", 3), Err(Error::Parse { .. })));
    }

    #[test]
    fn evaluation_examples() {
        let f = FunctionModel::parse("x1+x2+x2*x3", 3).unwrap();
        assert_eq!(f.evaluate(&[3.0, 4.0, 5.0]).unwrap(), 27.0);
        let g = FunctionModel::parse("x1 + x2^2 + x3^3", 3).unwrap();
        assert_eq!(g.evaluate(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        let h = FunctionModel::parse("max(x1,x2)", 2).unwrap();
        assert_eq!(h.evaluate(&[0.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn power_is_right_associative_and_unary_binds_tighter() {
        let f = FunctionModel::parse("2^3^2", 1).unwrap();
        assert_eq!(f.evaluate(&[0.0]).unwrap(), 512.0);
        let g = FunctionModel::parse("-x1^2", 1).unwrap();
        assert_eq!(g.evaluate(&[3.0]).unwrap(), 9.0);
        let h = FunctionModel::parse("-(x1^2)", 1).unwrap();
        assert_eq!(h.evaluate(&[3.0]).unwrap(), -9.0);
    }

    #[test]
    fn numeric_literals() {
        let f = FunctionModel::parse("2.5 + 1e-3 + 2.5e2", 1).unwrap();
        assert_eq!(f.evaluate(&[0.0]).unwrap(), 2.5 + 0.001 + 250.0);
    }

    #[test]
    fn evaluation_errors_report_the_point() {
        let f = FunctionModel::parse("log(x1)", 1).unwrap();
        match f.evaluate(&[-1.0]) {
            Err(Error::Eval(msg)) => assert!(msg.contains("-1") && msg.contains("log")),
            other => panic!("expected eval error, got {other:?}"),
        }
        let g = FunctionModel::parse("x1 / x2", 2).unwrap();
        assert!(matches!(g.evaluate(&[1.0, 0.0]), Err(Error::Eval(_))));
        let h = FunctionModel::parse("x1^x2", 2).unwrap();
        assert!(matches!(h.evaluate(&[0.0, -1.0]), Err(Error::Eval(_))));
        assert!(g.evaluate(&[1.0]).is_err());
    }

    #[test]
    fn relu_extension() {
        let f = FunctionModel::parse("relu(x1 - 1)", 1).unwrap();
        assert_eq!(f.evaluate(&[3.0]).unwrap(), 2.0);
        assert_eq!(f.evaluate(&[0.5]).unwrap(), 0.0);
    }

    #[test]
    fn unparse_reparse_fixpoint() {
        let sources = [
            "x1 + x2*x3",
            "max(x1,x2)",
            "-x1^2 + (x2 - x3)/4",
            "relu(x1 - 0.5)*min(x2, exp(x3))",
            "2^3^2 - abs(-x1)",
            "(x1 + x2)*(x1 - x2)",
            "x1/x2/x3",
            "x1 - (x2 - x3)",
            "log(x1 + 10)",
        ];
        for src in sources {
            let ast = parse(src, 3).unwrap();
            let printed = unparse(&ast);
            let reparsed = parse(&printed, 3).unwrap();
            assert_eq!(reparsed, ast, "fixpoint failed for {src:?} -> {printed:?}");
        }
    }

    #[test]
    fn permuted_function_satisfies_defining_identity() {
        // π=(2,3,1): (πf)(z2,z3,z1) == f(z1,z2,z3) on seeded points.
        let f = FunctionModel::parse("x1 + x2^2 + x3^3", 3).unwrap();
        let pi = Permutation::new(vec![2, 3, 1]).unwrap();
        let pf = f.permuted(&pi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let z: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let px = pi.permute_point(&z).unwrap();
            let lhs = pf.evaluate(&px).unwrap();
            let rhs = f.evaluate(&z).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
        // Concrete pattern: (πf)(a, b, c) = f(c, a, b).
        let got = pf.evaluate(&[0.5, 2.0, 3.0]).unwrap();
        let expect = f.evaluate(&[3.0, 0.5, 2.0]).unwrap();
        assert_eq!(got, expect);
    }

    #[test]
    fn permuted_function_identity_and_involution() {
        let f = FunctionModel::parse("x1*x2 - x3", 3).unwrap();
        let id = Permutation::identity(3).unwrap();
        let swap = Permutation::new(vec![2, 1, 3]).unwrap();
        let twice = f.permuted(&swap).unwrap().permuted(&swap).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            assert_eq!(
                f.permuted(&id).unwrap().evaluate(&x).unwrap(),
                f.evaluate(&x).unwrap()
            );
            assert_eq!(twice.evaluate(&x).unwrap(), f.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn permuted_function_moves_domain() {
        let f = FunctionModel::parse("x1 + x2", 2)
            .unwrap()
            .with_domain(vec![Interval::new(0.0, 1.0).unwrap(), Interval::new(5.0, 6.0).unwrap()])
            .unwrap();
        let swap = Permutation::new(vec![2, 1]).unwrap();
        let pf = f.permuted(&swap).unwrap();
        assert_eq!(pf.domain()[0], Interval::new(5.0, 6.0).unwrap());
        assert_eq!(pf.domain()[1], Interval::new(0.0, 1.0).unwrap());
    }

    #[test]
    fn linear_combination_sums_in_order() {
        let a = FunctionModel::parse("x1", 2).unwrap();
        let b = FunctionModel::parse("x2", 2).unwrap();
        let lc = FunctionModel::linear_combination(vec![(2.0, a), (-3.0, b)]).unwrap();
        assert_eq!(lc.evaluate(&[1.0, 1.0]).unwrap(), -1.0);
    }
}
