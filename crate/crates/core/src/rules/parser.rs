use super::*;
use crate::error::RuleError;

const KEYWORDS: &[&str] = &[
    "rule", "distinct", "optional", "where", "entry", "rewrite", "new", "label", "value", "prop", "edge", "del",
    "node", "replace", "with", "each", "xi", "bound", "ell", "contains", "and", "or", "not",
];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    /// `-[`
    EdgeOpen,
    /// `]->`
    EdgeClose,
    Colon,
    Comma,
    OrOr,
    Star,
    PlusPlus,
    PlusEq,
    Cmp(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {}", quote(s)),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::EdgeOpen => "`-[`".into(),
            Tok::EdgeClose => "`]->`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::OrOr => "`||`".into(),
            Tok::Star => "`*`".into(),
            Tok::PlusPlus => "`++`".into(),
            Tok::PlusEq => "`+=`".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> RuleError {
    RuleError::Syntax { line: pos.line, column: pos.column, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, RuleError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            advance!(1);
            continue;
        }
        if c == '#' || (c == '/' && next == Some('/')) {
            while i < chars.len() && chars[i] != '\n' {
                advance!(1);
            }
            continue;
        }
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            '[' => (Tok::LBracket, 1),
            ']' if next == Some('-') && chars.get(i + 2) == Some(&'>') => (Tok::EdgeClose, 3),
            ']' => (Tok::RBracket, 1),
            '-' if next == Some('[') => (Tok::EdgeOpen, 2),
            ':' => (Tok::Colon, 1),
            ',' => (Tok::Comma, 1),
            '|' if next == Some('|') => (Tok::OrOr, 2),
            '*' => (Tok::Star, 1),
            '+' if next == Some('+') => (Tok::PlusPlus, 2),
            '+' if next == Some('=') => (Tok::PlusEq, 2),
            '=' => (Tok::Cmp(CmpOp::Eq), 1),
            '!' if next == Some('=') => (Tok::Cmp(CmpOp::Ne), 2),
            '<' if next == Some('=') => (Tok::Cmp(CmpOp::Le), 2),
            '<' => (Tok::Cmp(CmpOp::Lt), 1),
            '>' if next == Some('=') => (Tok::Cmp(CmpOp::Ge), 2),
            '>' => (Tok::Cmp(CmpOp::Gt), 1),
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => return Err(syntax(pos, "unterminated string literal")),
                        Some('"') => break,
                        Some('\\') => {
                            let esc = match chars.get(j + 1) {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                _ => return Err(syntax(pos, "invalid escape in string literal")),
                            };
                            s.push(esc);
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                (Tok::Str(s), j + 1 - i)
            }
            c if c.is_ascii_digit() || (c == '-' && next.is_some_and(|n| n.is_ascii_digit())) => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                (Tok::Str(chars[i..j].iter().collect()), j - i)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                    j += 1;
                }
                (Tok::Ident(chars[i..j].iter().collect()), j - i)
            }
            other => return Err(syntax(pos, format!("unexpected character `{other}`"))),
        };
        toks.push((tok, pos));
        advance!(len);
    }
    toks.push((Tok::Eof, Pos { line, column: col }));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

type PResult<T> = Result<T, RuleError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        Err(syntax(self.pos(), format!("expected {wanted}, found {}", self.peek().describe())))
    }

    fn expect(&mut self, tok: Tok) -> PResult<Pos> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Pos> {
        if self.is_kw(kw) {
            Ok(self.bump().1)
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("a name"),
        }
    }

    fn var(&mut self) -> PResult<Var> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Var(s))
            }
            Tok::Ident(s) => Err(syntax(self.pos(), format!("`{s}` is a keyword and cannot name a variable"))),
            _ => self.unexpected("a variable"),
        }
    }

    fn var_ref(&mut self) -> PResult<VarRef> {
        let var = self.var()?;
        let each = self.is_kw("each");
        if each {
            self.bump();
        }
        Ok(VarRef { var, each })
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("a string literal"),
        }
    }

    fn ruleset(&mut self) -> PResult<RuleSet> {
        let mut rules = Vec::new();
        while *self.peek() != Tok::Eof {
            rules.push(self.rule()?);
        }
        Ok(RuleSet { rules })
    }

    fn rule(&mut self) -> PResult<Rule> {
        let pos = self.expect_kw("rule")?;
        let name = self.name()?;
        let distinct = self.is_kw("distinct");
        if distinct {
            self.bump();
        }
        self.expect(Tok::LBrace)?;
        let mut atoms = Vec::new();
        while self.is_kw("optional") || *self.peek() == Tok::LParen {
            atoms.push(self.atom()?);
        }
        if atoms.is_empty() {
            return self.unexpected("a match pattern");
        }
        let condition = if self.is_kw("where") {
            self.bump();
            Some(self.cond()?)
        } else {
            None
        };
        let entry_pos = self.expect_kw("entry")?;
        let entry = self.var()?;
        self.expect_kw("rewrite")?;
        let mut ops = Vec::new();
        while *self.peek() != Tok::RBrace {
            ops.push(self.op()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(Rule { name, distinct, pattern: Pattern { atoms, entry, entry_pos }, condition, ops, pos })
    }

    fn atom(&mut self) -> PResult<EdgeAtom> {
        let pos = self.pos();
        let optional = self.is_kw("optional");
        if optional {
            self.bump();
        }
        self.expect(Tok::LParen)?;
        let src = self.var()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::EdgeOpen)?;
        let edge = if matches!(self.peek(), Tok::Ident(_)) {
            let v = self.var()?;
            self.expect(Tok::Colon)?;
            Some(v)
        } else {
            None
        };
        let mut labels = vec![self.string()?];
        while *self.peek() == Tok::OrOr {
            self.bump();
            labels.push(self.string()?);
        }
        self.expect(Tok::EdgeClose)?;
        self.expect(Tok::LParen)?;
        let aggregated = *self.peek() == Tok::Star;
        if aggregated {
            self.bump();
        }
        let dst = self.var()?;
        self.expect(Tok::RParen)?;
        Ok(EdgeAtom { src, edge, labels, dst, optional, aggregated, pos })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut parts = vec![self.expr_atom()?];
        while *self.peek() == Tok::PlusPlus {
            self.bump();
            parts.push(self.expr_atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Concat(parts) })
    }

    fn expr_atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::Ident(f) if f == "xi" || f == "label" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let v = self.var()?;
                self.expect(Tok::RParen)?;
                Ok(if f == "xi" { Expr::Xi(v) } else { Expr::Label(v) })
            }
            Tok::Ident(f) if f == "prop" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let v = self.var()?;
                self.expect(Tok::Comma)?;
                let k = self.string()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Prop(v, k))
            }
            _ => self.unexpected("an expression"),
        }
    }

    fn cond(&mut self) -> PResult<Cond> {
        let mut lhs = self.cond_and()?;
        while self.is_kw("or") {
            self.bump();
            let rhs = self.cond_and()?;
            lhs = Cond::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cond_and(&mut self) -> PResult<Cond> {
        let mut lhs = self.cond_unary()?;
        while self.is_kw("and") {
            self.bump();
            let rhs = self.cond_unary()?;
            lhs = Cond::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cond_unary(&mut self) -> PResult<Cond> {
        if self.is_kw("not") {
            self.bump();
            return Ok(Cond::Not(Box::new(self.cond_unary()?)));
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let c = self.cond()?;
            self.expect(Tok::RParen)?;
            return Ok(c);
        }
        if self.is_kw("bound") {
            self.bump();
            self.expect(Tok::LParen)?;
            let v = self.var()?;
            self.expect(Tok::RParen)?;
            return Ok(Cond::Bound(v));
        }
        if self.is_kw("ell") {
            self.bump();
            self.expect(Tok::LParen)?;
            let v = self.var()?;
            self.expect(Tok::RParen)?;
            self.expect_kw("contains")?;
            let s = self.string()?;
            return Ok(Cond::HasLabel(v, s));
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            _ => return self.unexpected("a comparison operator"),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Cond::Cmp(lhs, op, rhs))
    }

    fn op(&mut self) -> PResult<ProductionOp> {
        let pos = self.pos();
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return self.unexpected("a production or `}`"),
        };
        self.bump();
        let kind = match kw.as_str() {
            "new" => OpKind::NewNode(self.var()?),
            "label" => {
                let t = self.var_ref()?;
                self.expect(Tok::Cmp(CmpOp::Eq))?;
                OpKind::SetLabel(t, self.expr()?)
            }
            "value" => {
                let t = self.var_ref()?;
                self.expect(Tok::PlusEq)?;
                OpKind::AppendXi(t, self.expr()?)
            }
            "prop" => {
                let t = self.var_ref()?;
                self.expect(Tok::LBracket)?;
                let k = self.expr()?;
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Cmp(CmpOp::Eq))?;
                OpKind::SetProp(t, k, self.expr()?)
            }
            "edge" => {
                self.expect(Tok::LParen)?;
                let s = self.var_ref()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::EdgeOpen)?;
                let l = self.expr()?;
                self.expect(Tok::EdgeClose)?;
                self.expect(Tok::LParen)?;
                let d = self.var_ref()?;
                self.expect(Tok::RParen)?;
                OpKind::NewEdge(s, l, d)
            }
            "del" => {
                if self.is_kw("node") {
                    self.bump();
                    OpKind::DelNode(self.var_ref()?)
                } else if self.is_kw("edge") {
                    self.bump();
                    OpKind::DelEdge(self.var_ref()?)
                } else {
                    return self.unexpected("`node` or `edge`");
                }
            }
            "replace" => {
                let old = self.var()?;
                self.expect_kw("with")?;
                OpKind::Replace(old, self.var()?)
            }
            other => return Err(syntax(pos, format!("unknown production `{other}`"))),
        };
        Ok(ProductionOp { kind, pos })
    }
}

/// Parses rule text without checking pattern and production invariants.
pub fn parse_rules_unvalidated(text: &str) -> Result<RuleSet, RuleError> {
    let toks = lex(text)?;
    Parser { toks, at: 0 }.ruleset()
}

/// Parses and validates a rule file.
pub fn parse_rules(text: &str) -> Result<RuleSet, RuleError> {
    let rs = parse_rules_unvalidated(text)?;
    let diags = validate_ruleset(&rs);
    if diags.is_empty() {
        Ok(rs)
    } else {
        Err(RuleError::Invalid(diags))
    }
}
