//! Hand-written lexer and recursive-descent parser for terms, plan
//! libraries, plan bodies and context conditions.

use std::fmt;

use super::plan::check_body_scoping;
use super::{
    is_atom_name, BodyStep, Cond, InternalAction, Literal, Plan, RelOp, Term, Trigger,
    TriggerKind, TriggerSign,
};

/// Syntax (or scoping) error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
    pub message: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        if let Some(m) = &self.message {
            return f.write_str(m);
        }
        match self.expected.as_slice() {
            [] => write!(f, "unexpected {}", self.found),
            [one] => write!(f, "expected {one}, found {}", self.found),
            many => write!(f, "expected one of {}, found {}", many.join(", "), self.found),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Num(f64),
    Str(String),
    Internal(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Semi,
    Colon,
    Amp,
    Bang,
    Query,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    NotEq,
    Eq,
    Arrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Var(s) => format!("variable `{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Internal(s) => format!("internal action `.{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Amp => "&",
            Tok::Bang => "!",
            Tok::Query => "?",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::NotEq => "\\==",
            Tok::Eq => "=",
            Tok::Arrow => "<-",
            _ => "?",
        }
    }

    fn relop(&self) -> Option<RelOp> {
        Some(match self {
            Tok::Lt => RelOp::Lt,
            Tok::Le => RelOp::Le,
            Tok::Gt => RelOp::Gt,
            Tok::Ge => RelOp::Ge,
            Tok::EqEq => RelOp::Eq,
            Tok::NotEq => RelOp::Ne,
            Tok::Eq => RelOp::Unify,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError {
        line,
        column: col,
        expected: vec![],
        found: String::new(),
        message: Some(msg),
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            advance(2, &mut i, &mut col);
            loop {
                match chars.get(i) {
                    None => return Err(err(tl, tc, "unterminated block comment".into())),
                    Some('*') if chars.get(i + 1) == Some(&'/') => {
                        advance(2, &mut i, &mut col);
                        break;
                    }
                    Some('\n') => {
                        i += 1;
                        line += 1;
                        col = 1;
                    }
                    Some(_) => advance(1, &mut i, &mut col),
                }
            }
            continue;
        }
        let peek = chars.get(i + 1).copied();
        let tok = if c.is_ascii_digit() {
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
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let value: f64 = text
                .parse()
                .map_err(|_| err(tl, tc, format!("malformed number `{text}`")))?;
            if !value.is_finite() {
                return Err(err(tl, tc, format!("number `{text}` out of range")));
            }
            out.push(Token { tok: Tok::Num(value), line: tl, col: tc });
            continue;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if c.is_ascii_lowercase() { Tok::Ident(text) } else { Tok::Var(text) };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None => return Err(err(tl, tc, "unterminated string literal".into())),
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = match chars.get(i + 1) {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            _ => return Err(err(line, col, "invalid escape sequence".into())),
                        };
                        s.push(esc);
                        i += 2;
                        col += 2;
                    }
                    Some('\n') => {
                        s.push('\n');
                        i += 1;
                        line += 1;
                        col = 1;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), line: tl, col: tc });
            continue;
        } else if c == '.' && peek.is_some_and(|p| p.is_ascii_alphabetic()) {
            let start = i + 1;
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start + 1;
            out.push(Token { tok: Tok::Internal(text), line: tl, col: tc });
            continue;
        } else {
            let (tok, len) = match (c, peek) {
                ('<', Some('-')) => (Tok::Arrow, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('=', Some('=')) => (Tok::EqEq, 2),
                ('\\', Some('=')) if chars.get(i + 2) == Some(&'=') => (Tok::NotEq, 3),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBrack, 1),
                (']', _) => (Tok::RBrack, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                (';', _) => (Tok::Semi, 1),
                (':', _) => (Tok::Colon, 1),
                ('&', _) => (Tok::Amp, 1),
                ('!', _) => (Tok::Bang, 1),
                ('?', _) => (Tok::Query, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('/', _) => (Tok::Slash, 1),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('=', _) => (Tok::Eq, 1),
                _ => return Err(err(tl, tc, format!("unexpected character `{c}`"))),
            };
            advance(len, &mut i, &mut col);
            tok
        };
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Parser> {
        Ok(Parser { tokens: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError {
            line: t.line,
            column: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
            message: None,
        }
    }

    fn error_msg(&self, at: usize, msg: String) -> ParseError {
        let t = &self.tokens[at];
        ParseError { line: t.line, column: t.col, expected: vec![], found: t.tok.describe(), message: Some(msg) }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{}`", tok.symbol())]))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    fn expr(&mut self) -> PResult<Term> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => "+",
                Tok::Minus => "-",
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Term::Structure(op.into(), vec![lhs, rhs]);
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => "*",
                Tok::Slash => "/",
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Term::Structure(op.into(), vec![lhs, rhs]);
        }
    }

    fn unary(&mut self) -> PResult<Term> {
        if *self.peek() == Tok::Minus {
            self.bump();
            if let Tok::Num(n) = *self.peek() {
                self.bump();
                return Ok(Term::number(-n));
            }
            let inner = self.unary()?;
            return Ok(Term::Structure("-".into(), vec![inner]));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Term::number(n))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Term::Str(s))
            }
            Tok::Var(v) => {
                self.bump();
                Ok(Term::Var(v))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() != Tok::LParen {
                    return Ok(Term::Atom(name));
                }
                let open = self.pos;
                self.bump();
                if *self.peek() == Tok::RParen {
                    return Err(self.error_msg(open, format!("`{name}()` has empty parentheses; write `{name}`")));
                }
                let args = self.args(Tok::RParen)?;
                Ok(Term::Structure(name, args))
            }
            Tok::LBrack => {
                self.bump();
                if *self.peek() == Tok::RBrack {
                    self.bump();
                    return Ok(Term::List(vec![]));
                }
                Ok(Term::List(self.args(Tok::RBrack)?))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            _ => Err(self.error(&["term"])),
        }
    }

    fn args(&mut self, close: Tok) -> PResult<Vec<Term>> {
        let mut args = vec![self.expr()?];
        loop {
            if *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.expr()?);
            } else if *self.peek() == close {
                self.bump();
                return Ok(args);
            } else {
                return Err(self.error(&["`,`", &format!("`{}`", close.symbol())]));
            }
        }
    }

    /// Atom or structure usable as a belief, goal or trigger pattern.
    fn literal_term(&mut self) -> PResult<Term> {
        let at = self.pos;
        let t = self.primary().map_err(|_| self.error(&["atom or structure"]))?;
        if is_literal_head(&t) {
            Ok(t)
        } else {
            Err(self.error_msg(at, format!("expected atom or structure, found `{t}`")))
        }
    }

    /// One context condition; `None` stands for `true`.
    fn condition(&mut self) -> PResult<Option<Cond>> {
        if let (Tok::Ident(kw), Tok::Ident(_)) = (self.peek(), self.peek_at(1)) {
            if kw == "not" {
                self.bump();
                let term = self.literal_term()?;
                return Ok(Some(Cond::Lit(Literal { negated: true, term })));
            }
        }
        let at = self.pos;
        let lhs = self.expr()?;
        if let Some(op) = self.peek().relop() {
            self.bump();
            let rhs = self.expr()?;
            return Ok(Some(Cond::Rel(op, lhs, rhs)));
        }
        match lhs {
            Term::Atom(ref a) if a == "true" => Ok(None),
            Term::Structure(ref f, ref args) if f == "not" && args.len() == 1 && is_literal_head(&args[0]) => {
                Ok(Some(Cond::Lit(Literal { negated: true, term: args[0].clone() })))
            }
            t if is_literal_head(&t) => Ok(Some(Cond::Lit(Literal { negated: false, term: t }))),
            t => Err(self.error_msg(at, format!("`{t}` is not a literal or relational test"))),
        }
    }

    fn context(&mut self) -> PResult<Vec<Cond>> {
        let mut conds = Vec::new();
        loop {
            if let Some(c) = self.condition()? {
                conds.push(c);
            }
            if *self.peek() == Tok::Amp {
                self.bump();
            } else {
                return Ok(conds);
            }
        }
    }

    fn step(&mut self) -> PResult<BodyStep> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(BodyStep::Subgoal(self.literal_term()?))
            }
            Tok::Plus => {
                self.bump();
                Ok(BodyStep::AddBelief(self.literal_term()?))
            }
            Tok::Minus => {
                self.bump();
                Ok(BodyStep::DelBelief(self.literal_term()?))
            }
            Tok::Query => {
                self.bump();
                match self.condition()? {
                    Some(c) => Ok(BodyStep::Test(c)),
                    None => Err(self.error(&["literal"])),
                }
            }
            Tok::Internal(name) => {
                let at = self.pos;
                self.bump();
                let action = InternalAction::from_name(&name).ok_or_else(|| {
                    let known: Vec<String> =
                        InternalAction::ALL.iter().map(|a| format!("`.{}`", a.name())).collect();
                    ParseError {
                        expected: known,
                        ..self.error_msg(at, format!("unknown internal action `.{name}`"))
                    }
                })?;
                let args = if *self.peek() == Tok::LParen {
                    let open = self.pos;
                    self.bump();
                    if *self.peek() == Tok::RParen {
                        return Err(self.error_msg(open, format!("`.{name}()` has empty parentheses")));
                    }
                    self.args(Tok::RParen)?
                } else {
                    vec![]
                };
                Ok(BodyStep::Internal(action, args))
            }
            _ => {
                let lhs = self
                    .expr()
                    .map_err(|_| self.error(&["`!`", "`+`", "`-`", "`?`", "internal action", "relational test"]))?;
                match self.peek().relop() {
                    Some(op) => {
                        self.bump();
                        let rhs = self.expr()?;
                        Ok(BodyStep::Test(Cond::Rel(op, lhs, rhs)))
                    }
                    None => Err(self.error(&["relational operator"])),
                }
            }
        }
    }

    fn body(&mut self) -> PResult<Vec<BodyStep>> {
        if matches!(self.peek(), Tok::Ident(t) if t == "true")
            && matches!(self.peek_at(1), Tok::Dot | Tok::Eof)
        {
            self.bump();
            return Ok(vec![]);
        }
        let mut steps = vec![self.step()?];
        while *self.peek() == Tok::Semi {
            self.bump();
            steps.push(self.step()?);
        }
        Ok(steps)
    }

    fn plan(&mut self) -> PResult<Plan> {
        let start = self.pos;
        let sign = match self.bump() {
            Tok::Plus => TriggerSign::Add,
            Tok::Minus => TriggerSign::Del,
            _ => {
                self.pos = start;
                return Err(self.error(&["`+`", "`-`"]));
            }
        };
        let kind = if *self.peek() == Tok::Bang {
            self.bump();
            TriggerKind::Goal
        } else {
            TriggerKind::Belief
        };
        let pattern = self.literal_term()?;
        let context = if *self.peek() == Tok::Colon {
            self.bump();
            self.context()?
        } else {
            vec![]
        };
        let body = if *self.peek() == Tok::Arrow {
            self.bump();
            self.body()?
        } else {
            vec![]
        };
        if *self.peek() != Tok::Dot {
            let mut expected = vec!["`.`", "`;`"];
            if context.is_empty() && body.is_empty() {
                expected = vec!["`:`", "`<-`", "`.`"];
            }
            return Err(self.error(&expected));
        }
        self.bump();
        let plan = Plan { trigger: Trigger { sign, kind, pattern }, context, body };
        plan.check_scoping().map_err(|m| self.error_msg(start, m))?;
        Ok(plan)
    }
}

fn is_literal_head(t: &Term) -> bool {
    match t {
        Term::Atom(a) => is_atom_name(a),
        Term::Structure(f, _) => is_atom_name(f),
        _ => false,
    }
}

/// Parses a single term (arithmetic expressions included).
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.expr()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a plan library: `.`-terminated plans in source order.
pub fn parse_plan_library(src: &str) -> Result<Vec<Plan>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut plans = Vec::new();
    while *p.peek() != Tok::Eof {
        plans.push(p.plan()?);
    }
    Ok(plans)
}

/// Parses a free-standing plan body such as a command, e.g.
/// `+flag(1); .print("hi")`. A trailing `.` is optional.
pub fn parse_body(src: &str) -> Result<Vec<BodyStep>, ParseError> {
    let mut p = Parser::new(src)?;
    if *p.peek() == Tok::Eof {
        return Err(p.error(&["plan body"]));
    }
    let body = p.body()?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    p.expect_eof()?;
    check_body_scoping(&body, Default::default()).map_err(|m| p.error_msg(0, m))?;
    Ok(body)
}

/// Parses one context condition (literal, `not` literal or relational test).
pub fn parse_condition(src: &str) -> Result<Cond, ParseError> {
    let mut p = Parser::new(src)?;
    let c = p.condition()?;
    p.expect_eof()?;
    c.ok_or_else(|| p.error_msg(0, "`true` is not a condition here".into()))
}
