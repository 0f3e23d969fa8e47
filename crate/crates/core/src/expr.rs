//! A small real-valued expression language.
//!
//! Every user-supplied function of a problem instance (φ, c, η, w, α, f, g)
//! arrives as a string in this grammar:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?          right-associative
//! atom  := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `exp ln sqrt abs` (unary), `min max pow` (binary).
//! Predefined constants: `e`, `pi` (a declared variable of the same name wins).

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Divisors smaller than this in magnitude are a domain error.
pub const MIN_DIVISOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("function `{name}` at position {pos} takes {expected} argument(s), got {got}")]
    Arity {
        pos: usize,
        name: String,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
    #[error("variable `{0}` is not bound")]
    Unbound(String),
    #[error("expected {expected} argument(s), got {got}")]
    ArgCount { expected: usize, got: usize },
}

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
    Exp,
    Ln,
    Sqrt,
    Abs,
    Min,
    Max,
    Pow,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Syntax tree node. Variables are stored as indices into the owning
/// [`Expr`]'s variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Literal(f64),
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression together with its declared variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
}

impl Expr {
    /// Parses `text`, allowing only the variables in `allowed_vars`.
    pub fn parse(text: &str, allowed_vars: &[&str]) -> Result<Expr, ParseError> {
        let vars: Vec<String> = allowed_vars.iter().map(|s| s.to_string()).collect();
        let tokens = tokenize(text)?;
        let mut p = Parser {
            tokens,
            idx: 0,
            vars: &vars,
            end: text.len(),
        };
        if p.tokens.is_empty() {
            return Err(ParseError::Syntax {
                pos: 0,
                msg: "empty expression".into(),
            });
        }
        let root = p.expr()?;
        if let Some(tok) = p.peek() {
            return Err(ParseError::Syntax {
                pos: tok.pos,
                msg: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(Expr { root, vars })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// True when the variable `name` occurs in the tree.
    pub fn depends_on(&self, name: &str) -> bool {
        match self.vars.iter().position(|v| v == name) {
            Some(idx) => node_uses(&self.root, idx),
            None => false,
        }
    }

    /// Re-declares the variable set, keeping the tree. Fails if the tree uses
    /// a variable absent from `vars`.
    pub fn rebind(&self, vars: &[&str]) -> Result<Expr, ParseError> {
        let mut map = Vec::with_capacity(self.vars.len());
        for (i, name) in self.vars.iter().enumerate() {
            match vars.iter().position(|v| v == name) {
                Some(j) => map.push(Some(j)),
                None if node_uses(&self.root, i) => {
                    return Err(ParseError::UnknownIdentifier {
                        pos: 0,
                        name: name.clone(),
                    })
                }
                None => map.push(None),
            }
        }
        Ok(Expr {
            root: remap(&self.root, &map),
            vars: vars.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// Evaluates with positional arguments in declaration order.
    pub fn eval(&self, args: &[f64]) -> Result<f64, EvalError> {
        if args.len() != self.vars.len() {
            return Err(EvalError::ArgCount {
                expected: self.vars.len(),
                got: args.len(),
            });
        }
        self.eval_node(&self.root, args)
    }

    /// Evaluates with named bindings.
    pub fn eval_named(&self, bindings: &HashMap<&str, f64>) -> Result<f64, EvalError> {
        let args = self
            .vars
            .iter()
            .map(|v| {
                bindings
                    .get(v.as_str())
                    .copied()
                    .ok_or_else(|| EvalError::Unbound(v.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.eval_node(&self.root, &args)
    }

    fn eval_node(&self, node: &Node, args: &[f64]) -> Result<f64, EvalError> {
        match node {
            Node::Literal(v) => Ok(*v),
            Node::Var(i) => Ok(args[*i]),
            Node::Neg(a) => Ok(-self.eval_node(a, args)?),
            Node::Binary(op, a, b) => {
                let x = self.eval_node(a, args)?;
                let y = self.eval_node(b, args)?;
                match op {
                    BinOp::Add => Ok(x + y),
                    BinOp::Sub => Ok(x - y),
                    BinOp::Mul => Ok(x * y),
                    BinOp::Div => {
                        if y.abs() < MIN_DIVISOR {
                            Err(self.domain(node, "division by zero"))
                        } else {
                            Ok(x / y)
                        }
                    }
                    BinOp::Pow => self.pow(node, x, y),
                }
            }
            Node::Call(func, call_args) => {
                let x = self.eval_node(&call_args[0], args)?;
                match func {
                    Func::Exp => Ok(x.exp()),
                    Func::Ln => {
                        if x > 0.0 {
                            Ok(x.ln())
                        } else {
                            Err(self.domain(node, "logarithm of a non-positive value"))
                        }
                    }
                    Func::Sqrt => {
                        if x >= 0.0 {
                            Ok(x.sqrt())
                        } else {
                            Err(self.domain(node, "square root of a negative value"))
                        }
                    }
                    Func::Abs => Ok(x.abs()),
                    Func::Min => Ok(x.min(self.eval_node(&call_args[1], args)?)),
                    Func::Max => Ok(x.max(self.eval_node(&call_args[1], args)?)),
                    Func::Pow => {
                        let y = self.eval_node(&call_args[1], args)?;
                        self.pow(node, x, y)
                    }
                }
            }
        }
    }

    fn pow(&self, node: &Node, x: f64, y: f64) -> Result<f64, EvalError> {
        if x == 0.0 && y < 0.0 {
            return Err(self.domain(node, "zero raised to a negative power"));
        }
        if x < 0.0 && y.fract() != 0.0 {
            return Err(self.domain(node, "negative base with non-integer exponent"));
        }
        Ok(x.powf(y))
    }

    fn domain(&self, node: &Node, reason: &str) -> EvalError {
        EvalError::Domain {
            subexpr: NodeDisplay { node, vars: &self.vars }.to_string(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesised form that re-parses to an identical tree value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        NodeDisplay {
            node: &self.root,
            vars: &self.vars,
        }
        .fmt(f)
    }
}

struct NodeDisplay<'a> {
    node: &'a Node,
    vars: &'a [String],
}

impl fmt::Display for NodeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |node| NodeDisplay { node, vars: self.vars };
        match self.node {
            Node::Literal(v) if *v < 0.0 => write!(f, "(-{:?})", -v),
            Node::Literal(v) => write!(f, "{v:?}"),
            Node::Var(i) => f.write_str(&self.vars[*i]),
            Node::Neg(a) => write!(f, "(-{})", sub(a)),
            Node::Binary(op, a, b) => write!(f, "({} {} {})", sub(a), op.symbol(), sub(b)),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", sub(a))?;
                }
                f.write_str(")")
            }
        }
    }
}

fn node_uses(node: &Node, idx: usize) -> bool {
    match node {
        Node::Literal(_) => false,
        Node::Var(i) => *i == idx,
        Node::Neg(a) => node_uses(a, idx),
        Node::Binary(_, a, b) => node_uses(a, idx) || node_uses(b, idx),
        Node::Call(_, args) => args.iter().any(|a| node_uses(a, idx)),
    }
}

fn remap(node: &Node, map: &[Option<usize>]) -> Node {
    match node {
        Node::Literal(v) => Node::Literal(*v),
        Node::Var(i) => Node::Var(map[*i].expect("used variables are mapped")),
        Node::Neg(a) => Node::Neg(Box::new(remap(a, map))),
        Node::Binary(op, a, b) => Node::Binary(*op, Box::new(remap(a, map)), Box::new(remap(b, map))),
        Node::Call(func, args) => Node::Call(*func, args.iter().map(|a| remap(a, map)).collect()),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Op(c) => format!("operator `{c}`"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let value: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("malformed number `{lit}`"),
            })?;
            if !value.is_finite() {
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: format!("number `{lit}` out of range"),
                });
            }
            out.push(Token {
                kind: TokenKind::Number(value),
                pos: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Ident(text[start..i].to_string()),
                pos: start,
            });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => TokenKind::Op(c),
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ',' => TokenKind::Comma,
            _ => {
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push(Token { kind, pos: start });
        i += c.len_utf8();
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    idx: usize,
    vars: &'a [String],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.idx).cloned();
        self.idx += 1;
        tok
    }

    fn peek_op(&self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c), ..
            }) if ops.contains(c) => Some(*c),
            _ => None,
        }
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        let pos = self.pos();
        match self.next() {
            Some(tok) if tok.kind == kind => Ok(()),
            Some(tok) => Err(ParseError::Syntax {
                pos,
                msg: format!("expected {}, found {}", kind.describe(), tok.kind.describe()),
            }),
            None => Err(ParseError::Syntax {
                pos,
                msg: format!("expected {}, found end of input", kind.describe()),
            }),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek_op(&['+', '-']) {
            self.idx += 1;
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_op(&['*', '/']) {
            self.idx += 1;
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek_op(&['-']).is_some() {
            self.idx += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek_op(&['^']).is_some() {
            self.idx += 1;
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        let Some(tok) = self.next() else {
            return Err(ParseError::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            });
        };
        match tok.kind {
            TokenKind::Number(v) => Ok(Node::Literal(v)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                let is_call = matches!(
                    self.peek(),
                    Some(Token {
                        kind: TokenKind::LParen,
                        ..
                    })
                );
                if is_call {
                    let func = Func::lookup(&name).ok_or_else(|| ParseError::UnknownIdentifier {
                        pos,
                        name: name.clone(),
                    })?;
                    self.idx += 1;
                    let mut args = vec![self.expr()?];
                    while matches!(
                        self.peek(),
                        Some(Token {
                            kind: TokenKind::Comma,
                            ..
                        })
                    ) {
                        self.idx += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(TokenKind::RParen)?;
                    if args.len() != func.arity() {
                        return Err(ParseError::Arity {
                            pos,
                            name,
                            expected: func.arity(),
                            got: args.len(),
                        });
                    }
                    return Ok(Node::Call(func, args));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var(i));
                }
                match name.as_str() {
                    "e" => Ok(Node::Literal(std::f64::consts::E)),
                    "pi" => Ok(Node::Literal(std::f64::consts::PI)),
                    _ => Err(ParseError::UnknownIdentifier { pos, name }),
                }
            }
            other => Err(ParseError::Syntax {
                pos,
                msg: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lit(v: f64) -> Box<Node> {
        Box::new(Node::Literal(v))
    }

    #[test]
    fn precedence_of_sum_and_product() {
        let e = Expr::parse("2*t+1", &["t"]).unwrap();
        let expected = Node::Binary(
            BinOp::Add,
            Box::new(Node::Binary(BinOp::Mul, lit(2.0), Box::new(Node::Var(0)))),
            lit(1.0),
        );
        assert_eq!(e.root(), &expected);
    }

    #[test]
    fn power_node() {
        let e = Expr::parse("t^2", &["t"]).unwrap();
        assert_eq!(e.root(), &Node::Binary(BinOp::Pow, Box::new(Node::Var(0)), lit(2.0)));
    }

    #[test]
    fn power_is_right_associative_and_above_unary_minus() {
        let e = Expr::parse("2^3^2", &[]).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 512.0);
        let e = Expr::parse("-2^2", &[]).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), -4.0);
        let e = Expr::parse("2^-1", &[]).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 0.5);
        let e = Expr::parse("1 - -1", &[]).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 2.0);
    }

    #[test]
    fn truncated_call_reports_position() {
        let err = Expr::parse("exp(", &["t"]).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: 4, .. }), "{err:?}");
    }

    #[test]
    fn rejects_undeclared_variable() {
        let err = Expr::parse("t + s", &["t"]).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                pos: 4,
                name: "s".into()
            }
        );
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(
            Expr::parse("min(t)", &["t"]),
            Err(ParseError::Arity {
                expected: 2,
                got: 1,
                ..
            })
        ));
        assert!(matches!(
            Expr::parse("exp(t, t)", &["t"]),
            Err(ParseError::Arity {
                expected: 1,
                got: 2,
                ..
            })
        ));
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        assert!(Expr::parse("t t", &["t"]).is_err());
        assert!(Expr::parse("(t", &["t"]).is_err());
        assert!(Expr::parse("", &["t"]).is_err());
        assert!(Expr::parse("1e999", &[]).is_err());
    }

    #[test]
    fn basic_evaluation() {
        let e = Expr::parse("t*s", &["t", "s"]).unwrap();
        assert_eq!(e.eval(&[2.0, 3.0]).unwrap(), 6.0);
        let named: HashMap<&str, f64> = [("t", 2.0), ("s", 3.0)].into_iter().collect();
        assert_eq!(e.eval_named(&named).unwrap(), 6.0);
        assert_eq!(Expr::parse("exp(0)", &[]).unwrap().eval(&[]).unwrap(), 1.0);
        assert_eq!(Expr::parse("ln(exp(1))", &[]).unwrap().eval(&[]).unwrap(), 1.0);
        assert_eq!(Expr::parse("ln(e)", &[]).unwrap().eval(&[]).unwrap(), 1.0);
        assert_eq!(
            Expr::parse("max(pi, 3)", &[]).unwrap().eval(&[]).unwrap(),
            std::f64::consts::PI
        );
        assert_eq!(Expr::parse("pow(2, 10)", &[]).unwrap().eval(&[]).unwrap(), 1024.0);
    }

    #[test]
    fn declared_variable_shadows_constant() {
        let e = Expr::parse("e + 1", &["e"]).unwrap();
        assert_eq!(e.eval(&[1.0]).unwrap(), 2.0);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = Expr::parse("1 + ln(x - 1)", &["x"]).unwrap();
        match e.eval(&[1.0]) {
            Err(EvalError::Domain { subexpr, .. }) => assert_eq!(subexpr, "ln((x - 1.0))"),
            other => panic!("unexpected {other:?}"),
        }
        let e = Expr::parse("sqrt(x)", &["x"]).unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(EvalError::Domain { .. })));
        let e = Expr::parse("1/x", &["x"]).unwrap();
        assert!(matches!(e.eval(&[1e-301]), Err(EvalError::Domain { .. })));
        assert_eq!(e.eval(&[2.0]).unwrap(), 0.5);
        let e = Expr::parse("x^0.5", &["x"]).unwrap();
        assert!(matches!(e.eval(&[-4.0]), Err(EvalError::Domain { .. })));
        let e = Expr::parse("x^(-1)", &["x"]).unwrap();
        assert!(matches!(e.eval(&[0.0]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn unbound_and_arg_count() {
        let e = Expr::parse("t*s", &["t", "s"]).unwrap();
        assert!(matches!(e.eval(&[1.0]), Err(EvalError::ArgCount { .. })));
        let named: HashMap<&str, f64> = [("t", 2.0)].into_iter().collect();
        assert_eq!(e.eval_named(&named), Err(EvalError::Unbound("s".into())));
    }

    #[test]
    fn dependency_and_rebind() {
        let e = Expr::parse("1 + s", &["s"]).unwrap();
        assert!(e.depends_on("s"));
        assert!(!e.depends_on("t"));
        let k = e.rebind(&["t", "s"]).unwrap();
        assert!(!k.depends_on("t"));
        assert_eq!(k.eval(&[100.0, 2.0]).unwrap(), 3.0);
        assert!(e.rebind(&["t"]).is_err());
    }

    fn arb_source() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            (0.0f64..10.0).prop_map(|v| format!("{v}")),
            Just("t".to_string()),
            Just("s".to_string()),
            Just("pi".to_string()),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), 0usize..4).prop_map(|(a, b, op)| {
                    let op = ["+", "-", "*", "/"][op];
                    format!("{a} {op} {b}")
                }),
                (inner.clone(), 0u8..4).prop_map(|(a, p)| format!("({a})^{p}")),
                inner.clone().prop_map(|a| format!("-({a})")),
                (inner.clone(), 0usize..4).prop_map(|(a, f)| {
                    let f = ["exp", "abs", "sqrt", "ln"][f];
                    format!("{f}({a})")
                }),
                (inner.clone(), inner, 0usize..3).prop_map(|(a, b, f)| {
                    let f = ["min", "max", "pow"][f];
                    format!("{f}({a}, {b})")
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn printed_form_reparses_to_same_values(src in arb_source(), seed in any::<u64>()) {
            let e = Expr::parse(&src, &["t", "s"]).unwrap();
            let printed = e.to_string();
            let again = Expr::parse(&printed, &["t", "s"]).unwrap();
            let mut state = seed;
            for _ in 0..100 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let t = (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 1.0;
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let s = (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 1.0;
                let a = e.eval(&[t, s]);
                let b = again.eval(&[t, s]);
                match (a, b) {
                    (Ok(x), Ok(y)) => prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan())),
                    (Err(_), Err(_)) => {}
                    (x, y) => prop_assert!(false, "{src}: {x:?} vs {y:?}"),
                }
            }
        }

        #[test]
        fn evaluation_is_pure(src in arb_source(), t in -2.0f64..2.0, s in -2.0f64..2.0) {
            let e = Expr::parse(&src, &["t", "s"]).unwrap();
            let a = e.eval(&[t, s]).map(f64::to_bits);
            let b = e.eval(&[t, s]).map(f64::to_bits);
            prop_assert_eq!(a, b);
        }
    }
}
