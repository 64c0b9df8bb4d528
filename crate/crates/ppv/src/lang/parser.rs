//! Lexer and recursive-descent parser for `.ppv` sources.
//!
//! ```text
//! file   ::= block+ | cmds
//! block  ::= "model" "{" cmds "}" | "guide" "(" ident,* ")" "{" cmds "}"
//! cmds   ::= (stmt (";" stmt)* ";"?)?
//! stmt   ::= "skip" | "{" cmds "}" | x ":=" rhs
//!          | "if" "(" bexpr ")" "{" cmds "}" ("else" ("{" cmds "}" | stmt))?
//!          | "while" "(" bexpr ")" "{" cmds "}"
//!          | ("for" | "plate") x "in" expr ".." expr "{" cmds "}"
//!          | "score" "(" dist "," expr ")" | "score_N" "(" expr "," expr "," expr ")"
//! rhs    ::= "sample" "(" name "," dist ")" | "sample_N" "(" name "," expr "," expr ")" | expr
//! name   ::= string literal "base" or "base_{expr}_{expr}..."
//! ```

use std::fmt;

use thiserror::Error;

use super::ast::{BoolExpr, Command, DistKind, Distribution, NameExpr, Program, RealExpr, Role};
use super::registry::{PrimOp, Registry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("unknown distribution `{0}`")]
    UnknownDistribution(String),
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid random-variable name: {0}")]
    BadName(String),
    #[error("guide contains a score statement")]
    GuideHasScore,
    #[error("guide contains a while loop")]
    GuideHasWhile,
    #[error("plates with subsampling are not supported")]
    SubsamplingUnsupported,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.diagnostics.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

impl ParseError {
    fn single(line: usize, col: usize, kind: DiagnosticKind) -> Self {
        ParseError {
            diagnostics: vec![Diagnostic { line, col, kind }],
        }
    }

    pub fn has(&self, pred: impl Fn(&DiagnosticKind) -> bool) -> bool {
        self.diagnostics.iter().any(|d| pred(&d.kind))
    }
}

/// A parsed source file: at most one model and at most one guide.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceFile {
    pub model: Option<Program>,
    pub guide: Option<Program>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 19] = [
    ":=", "<=", ">=", "&&", "||", "..", ";", ",", "(", ")", "{", "}", "+", "-", "*", "/", "<", ">",
    "!",
];

const KEYWORDS: [&str; 16] = [
    "model", "guide", "skip", "if", "else", "while", "for", "in", "plate", "subsample", "sample",
    "score", "sample_N", "score_N", "true", "false",
];

fn lex(src: &str, line0: usize, col0: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, line0, col0);
    while i < chars.len() {
        let c = chars[i];
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
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
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
            let v: f64 = text.parse().map_err(|_| {
                ParseError::single(tl, tc, DiagnosticKind::Syntax(format!("bad number `{text}`")))
            })?;
            col += i - start;
            out.push(Token { tok: Tok::Num(v), line: tl, col: tc });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                j += 1;
            }
            if j >= chars.len() || chars[j] != '"' {
                return Err(ParseError::single(
                    tl,
                    tc,
                    DiagnosticKind::Syntax("unterminated string".into()),
                ));
            }
            out.push(Token {
                tok: Tok::Str(chars[start..j].iter().collect()),
                line: tl,
                col: tc,
            });
            col += j + 1 - i;
            i = j + 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                out.push(Token { tok: Tok::Sym(s), line: tl, col: tc });
                i += s.len();
                col += s.len();
            }
            None => {
                return Err(ParseError::single(
                    tl,
                    tc,
                    DiagnosticKind::Syntax(format!("unexpected character `{c}`")),
                ))
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser<'r> {
    toks: Vec<Token>,
    pos: usize,
    reg: &'r Registry,
    role: Role,
    /// Non-fatal diagnostics (guide restrictions).
    soft: Vec<Diagnostic>,
}

type PResult<T> = Result<T, ParseError>;

impl<'r> Parser<'r> {
    fn new(toks: Vec<Token>, reg: &'r Registry) -> Self {
        Parser {
            toks,
            pos: 0,
            reg,
            role: Role::Model,
            soft: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, kind: DiagnosticKind) -> PResult<T> {
        let (l, c) = self.here();
        Err(ParseError::single(l, c, kind))
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(v) => format!("number {v}"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expected<T>(&self, what: &str) -> PResult<T> {
        self.err(DiagnosticKind::Syntax(format!(
            "expected {what}, found {}",
            Self::describe(self.peek())
        )))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.expected(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            self.expected(&format!("`{s}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.expected("identifier"),
        }
    }

    // ---- files and blocks ----

    fn file(&mut self) -> PResult<SourceFile> {
        let mut sf = SourceFile::default();
        if !(self.is_kw("model") || self.is_kw("guide")) {
            let body = self.cmds()?;
            if *self.peek() != Tok::Eof {
                return self.expected("`;` or end of input");
            }
            sf.model = Some(Program::model(body));
            return Ok(sf);
        }
        while *self.peek() != Tok::Eof {
            let (l, c) = self.here();
            if self.is_kw("model") {
                self.bump();
                self.role = Role::Model;
                self.expect_sym("{")?;
                let body = self.cmds()?;
                self.expect_sym("}")?;
                if sf.model.is_some() {
                    return Err(ParseError::single(l, c, DiagnosticKind::Syntax("duplicate model block".into())));
                }
                sf.model = Some(Program::model(body));
            } else if self.is_kw("guide") {
                self.bump();
                self.role = Role::Guide;
                self.expect_sym("(")?;
                let mut params = Vec::new();
                if !self.is_sym(")") {
                    params.push(self.ident()?);
                    while self.eat_sym(",") {
                        params.push(self.ident()?);
                    }
                }
                self.expect_sym(")")?;
                self.expect_sym("{")?;
                let body = self.cmds()?;
                self.expect_sym("}")?;
                if sf.guide.is_some() {
                    return Err(ParseError::single(l, c, DiagnosticKind::Syntax("duplicate guide block".into())));
                }
                sf.guide = Some(Program {
                    role: Role::Guide,
                    params,
                    body,
                });
            } else {
                return self.expected("`model` or `guide`");
            }
        }
        Ok(sf)
    }

    fn cmds(&mut self) -> PResult<Command> {
        let mut list = Vec::new();
        loop {
            if self.is_sym("}") || *self.peek() == Tok::Eof {
                break;
            }
            let (c, block_end) = self.stmt()?;
            list.push(c);
            if self.eat_sym(";") {
                continue;
            }
            if block_end && !(self.is_sym("}") || *self.peek() == Tok::Eof) {
                continue;
            }
            break;
        }
        Ok(Command::seq_all(list))
    }

    fn block(&mut self) -> PResult<Command> {
        self.expect_sym("{")?;
        let c = self.cmds()?;
        self.expect_sym("}")?;
        Ok(c)
    }

    /// Parses one statement; the flag tells whether it ended with `}`.
    fn stmt(&mut self) -> PResult<(Command, bool)> {
        let (l, c) = self.here();
        match self.peek().clone() {
            Tok::Sym("{") => Ok((self.block()?, true)),
            Tok::Ident(k) => match k.as_str() {
                "skip" => {
                    self.bump();
                    Ok((Command::Skip, false))
                }
                "if" => Ok((self.if_stmt()?, true)),
                "while" => {
                    self.bump();
                    if self.role == Role::Guide {
                        self.soft.push(Diagnostic { line: l, col: c, kind: DiagnosticKind::GuideHasWhile });
                    }
                    self.expect_sym("(")?;
                    let b = self.bexpr()?;
                    self.expect_sym(")")?;
                    let body = self.block()?;
                    Ok((Command::while_(b, body), true))
                }
                "for" | "plate" => {
                    self.bump();
                    let v = self.ident()?;
                    self.expect_kw("in")?;
                    let lo = self.expr()?;
                    self.expect_sym("..")?;
                    let hi = self.expr()?;
                    if self.is_kw("subsample") {
                        return Err(ParseError::single(l, c, DiagnosticKind::SubsamplingUnsupported));
                    }
                    let body = self.block()?;
                    Ok((Command::For(v, lo, hi, Box::new(body)), true))
                }
                "score" | "score_N" => {
                    self.bump();
                    if self.role == Role::Guide {
                        self.soft.push(Diagnostic { line: l, col: c, kind: DiagnosticKind::GuideHasScore });
                    }
                    self.expect_sym("(")?;
                    let cmd = if k == "score" {
                        let d = self.dist()?;
                        self.expect_sym(",")?;
                        let obs = self.expr()?;
                        Command::Score(d, obs)
                    } else {
                        let obs = self.expr()?;
                        self.expect_sym(",")?;
                        let mu = self.expr()?;
                        self.expect_sym(",")?;
                        let sigma = self.expr()?;
                        Command::Score(Distribution::normal(mu, sigma), obs)
                    };
                    self.expect_sym(")")?;
                    Ok((cmd, false))
                }
                _ => {
                    let x = self.ident()?;
                    self.expect_sym(":=")?;
                    if self.is_kw("sample") || self.is_kw("sample_N") {
                        let sugar = self.is_kw("sample_N");
                        self.bump();
                        self.expect_sym("(")?;
                        let name = self.name()?;
                        self.expect_sym(",")?;
                        let d = if sugar {
                            let mu = self.expr()?;
                            self.expect_sym(",")?;
                            let sigma = self.expr()?;
                            Distribution::normal(mu, sigma)
                        } else {
                            self.dist()?
                        };
                        self.expect_sym(")")?;
                        Ok((Command::Sample(x, name, d), false))
                    } else {
                        Ok((Command::Assign(x, self.expr()?), false))
                    }
                }
            },
            _ => self.expected("statement"),
        }
    }

    fn if_stmt(&mut self) -> PResult<Command> {
        self.expect_kw("if")?;
        self.expect_sym("(")?;
        let b = self.bexpr()?;
        self.expect_sym(")")?;
        let t = self.block()?;
        let e = if self.is_kw("else") {
            self.bump();
            if self.is_kw("if") {
                self.if_stmt()?
            } else {
                self.block()?
            }
        } else {
            Command::Skip
        };
        Ok(Command::if_(b, t, e))
    }

    fn name(&mut self) -> PResult<NameExpr> {
        let (l, c) = self.here();
        let Tok::Str(s) = self.peek().clone() else {
            return self.expected("string literal name");
        };
        self.bump();
        parse_name_literal(&s, l, c + 1, self.reg)
    }

    fn dist(&mut self) -> PResult<Distribution> {
        let (l, c) = self.here();
        let Tok::Ident(n) = self.peek().clone() else {
            return self.expected("distribution");
        };
        let Some(kind) = DistKind::from_name(&n) else {
            return self.err(DiagnosticKind::UnknownDistribution(n));
        };
        self.bump();
        let args = self.call_args()?;
        if args.len() != kind.arity() {
            return Err(ParseError::single(
                l,
                c,
                DiagnosticKind::Arity {
                    name: n,
                    expected: kind.arity(),
                    found: args.len(),
                },
            ));
        }
        Ok(Distribution { kind, args })
    }

    fn call_args(&mut self) -> PResult<Vec<RealExpr>> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            args.push(self.expr()?);
            while self.eat_sym(",") {
                args.push(self.expr()?);
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<RealExpr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_sym("+") {
                PrimOp::Add
            } else if self.is_sym("-") {
                PrimOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.term()?;
            lhs = RealExpr::Prim(op, vec![lhs, rhs]);
        }
    }

    fn term(&mut self) -> PResult<RealExpr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.is_sym("*") {
                PrimOp::Mul
            } else if self.is_sym("/") {
                PrimOp::Div
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = RealExpr::Prim(op, vec![lhs, rhs]);
        }
    }

    fn unary(&mut self) -> PResult<RealExpr> {
        if self.is_sym("-") {
            self.bump();
            if let Tok::Num(v) = *self.peek() {
                self.bump();
                return Ok(RealExpr::Const(-v));
            }
            let e = self.unary()?;
            return Ok(RealExpr::Prim(PrimOp::Neg, vec![e]));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<RealExpr> {
        let (l, c) = self.here();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(RealExpr::Const(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                if *self.peek_at(1) == Tok::Sym("(") {
                    let op = match self.reg.lookup(&name) {
                        Some(op) if op.infix().is_none() && op != PrimOp::Neg => op,
                        _ => return self.err(DiagnosticKind::UnknownPrimitive(name)),
                    };
                    self.bump();
                    let args = self.call_args()?;
                    if args.len() != op.arity() {
                        return Err(ParseError::single(
                            l,
                            c,
                            DiagnosticKind::Arity {
                                name,
                                expected: op.arity(),
                                found: args.len(),
                            },
                        ));
                    }
                    Ok(RealExpr::Prim(op, args))
                } else {
                    self.bump();
                    Ok(RealExpr::Var(name))
                }
            }
            _ => self.expected("expression"),
        }
    }

    fn bexpr(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bconj()?;
        while self.eat_sym("||") {
            let rhs = self.bconj()?;
            lhs = BoolExpr::not(BoolExpr::and(BoolExpr::not(lhs), BoolExpr::not(rhs)));
        }
        Ok(lhs)
    }

    fn bconj(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bunary()?;
        while self.eat_sym("&&") {
            let rhs = self.bunary()?;
            lhs = BoolExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn bunary(&mut self) -> PResult<BoolExpr> {
        if self.eat_sym("!") {
            return Ok(BoolExpr::not(self.bunary()?));
        }
        if self.is_kw("true") {
            self.bump();
            return Ok(BoolExpr::True);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(BoolExpr::not(BoolExpr::True));
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.bump();
            if let Ok(b) = self.bexpr() {
                if self.eat_sym(")") && !self.at_comparison() {
                    return Ok(b);
                }
            }
            self.pos = save;
        }
        let a = self.expr()?;
        let op = match self.peek() {
            Tok::Sym(s @ ("<" | ">" | "<=" | ">=")) => *s,
            _ => return self.expected("comparison operator"),
        };
        self.bump();
        let b = self.expr()?;
        Ok(match op {
            "<" => BoolExpr::Less(a, b),
            ">" => BoolExpr::Less(b, a),
            "<=" => BoolExpr::not(BoolExpr::Less(b, a)),
            _ => BoolExpr::not(BoolExpr::Less(a, b)),
        })
    }

    fn at_comparison(&self) -> bool {
        matches!(self.peek(), Tok::Sym("<" | ">" | "<=" | ">=" | "+" | "-" | "*" | "/"))
    }
}

/// Splits `"x_{i}_{j}"` into base `x` and index expressions `[i, j]`.
fn parse_name_literal(s: &str, line: usize, col: usize, reg: &Registry) -> PResult<NameExpr> {
    let bad = |msg: &str| ParseError::single(line, col, DiagnosticKind::BadName(format!("\"{s}\": {msg}")));
    let Some(first) = s.find('{') else {
        if s.is_empty() || s.contains('}') {
            return Err(bad("empty or unbalanced name"));
        }
        return Ok(NameExpr::literal(s));
    };
    let base = s[..first]
        .strip_suffix('_')
        .filter(|b| !b.is_empty())
        .ok_or_else(|| bad("indices must follow `base_`"))?;
    if base.contains('}') {
        return Err(bad("unbalanced braces"));
    }
    let mut indices = Vec::new();
    let mut rest = &s[first..];
    let mut offset = first;
    loop {
        let close = rest.find('}').ok_or_else(|| bad("unclosed `{`"))?;
        let inner = &rest[1..close];
        if inner.contains('{') {
            return Err(bad("nested braces"));
        }
        let toks = lex(inner, line, col + offset + 1)?;
        let mut p = Parser::new(toks, reg);
        let e = p.expr()?;
        if *p.peek() != Tok::Eof {
            return Err(bad("trailing tokens in index"));
        }
        indices.push(e);
        rest = &rest[close + 1..];
        offset += close + 1;
        if rest.is_empty() {
            break;
        }
        rest = rest.strip_prefix('_').filter(|r| r.starts_with('{')).ok_or_else(|| bad("expected `_{`"))?;
        offset += 1;
    }
    Ok(NameExpr {
        base: base.to_string(),
        indices,
    })
}

fn finish<T>(p: &Parser, value: T) -> PResult<T> {
    if p.soft.is_empty() {
        Ok(value)
    } else {
        Err(ParseError {
            diagnostics: p.soft.clone(),
        })
    }
}

/// Parses a whole source file with an optional model and an optional guide.
pub fn parse_source(src: &str) -> Result<SourceFile, ParseError> {
    parse_source_with(src, Registry::standard())
}

pub fn parse_source_with(src: &str, reg: &Registry) -> Result<SourceFile, ParseError> {
    let mut p = Parser::new(lex(src, 1, 1)?, reg);
    let sf = p.file()?;
    finish(&p, sf)
}

/// Parses a source holding exactly one program. A bare command is a model.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let sf = parse_source(src)?;
    match (sf.model, sf.guide) {
        (Some(m), None) => Ok(m),
        (None, Some(g)) => Ok(g),
        (None, None) => Ok(Program::model(Command::Skip)),
        (Some(_), Some(_)) => Err(ParseError::single(
            1,
            1,
            DiagnosticKind::Syntax("source holds both a model and a guide; use parse_source".into()),
        )),
    }
}

pub fn parse_command(src: &str) -> Result<Command, ParseError> {
    let mut p = Parser::new(lex(src, 1, 1)?, Registry::standard());
    let c = p.cmds()?;
    if *p.peek() != Tok::Eof {
        return p.expected("`;` or end of input");
    }
    Ok(c)
}

pub fn parse_real(src: &str) -> Result<RealExpr, ParseError> {
    let mut p = Parser::new(lex(src, 1, 1)?, Registry::standard());
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.expected("end of expression");
    }
    Ok(e)
}

pub fn parse_bool(src: &str) -> Result<BoolExpr, ParseError> {
    let mut p = Parser::new(lex(src, 1, 1)?, Registry::standard());
    let b = p.bexpr()?;
    if *p.peek() != Tok::Eof {
        return p.expected("end of condition");
    }
    Ok(b)
}
