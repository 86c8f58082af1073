use std::collections::HashMap;
use std::sync::Arc;

use super::lexer::{lex, Tok, Token};
use super::{Diagnostic, SourceModel, Spans};
use crate::model::component::is_symbol_spelling;
use crate::model::value::none_symbol;
use crate::model::{
    Action, Assign, AtomicComponent, BinOp, Clause, ComponentRef, CompoundComponent, Connector,
    ConnectorPort, Expr, Instance, LocPath, Path, Pattern, PortExport, PriorityRule, QPort, Symbol,
    Transition, Type, UnOp, Value, VarDecl,
};

const KEYWORDS: &[&str] = &[
    "as",
    "behavior",
    "component",
    "compound",
    "connector",
    "data",
    "define",
    "do",
    "end",
    "export",
    "false",
    "initial",
    "on",
    "port",
    "priority",
    "provided",
    "range",
    "root",
    "state",
    "to",
    "true",
];

type PResult<T> = Result<T, Diagnostic>;
type Pos = (usize, usize);

struct RawInstance {
    name: String,
    ty: String,
    overrides: Vec<(Path, Value)>,
    at: Pos,
}

struct RawCompound {
    name: String,
    at: Pos,
    instances: Vec<RawInstance>,
    connectors: Vec<Connector>,
    priorities: Vec<PriorityRule>,
    exports: Vec<PortExport>,
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    spans: Spans,
    errors: Vec<Diagnostic>,
}

impl Parser {
    pub(crate) fn new(src: &str) -> PResult<Parser> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            spans: Spans::default(),
            errors: Vec::new(),
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn here(&self) -> Pos {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn err<T>(&self, what: &str) -> PResult<T> {
        let (l, c) = self.here();
        Err(Diagnostic::error(
            "E001",
            l,
            c,
            format!("expected {what}, found {}", self.peek().describe()),
        ))
    }

    pub(crate) fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(&format!("`{kw}`"))
        }
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.err(&t.describe())
        }
    }

    /// Any identifier, keywords included (used after a dot).
    pub(crate) fn any_ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("a name"),
        }
    }

    pub(crate) fn name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("a name"),
        }
    }

    pub(crate) fn path(&mut self) -> PResult<Path> {
        let mut segs = vec![self.name()?];
        while self.eat(&Tok::Dot) {
            segs.push(self.any_ident()?);
        }
        Ok(Path(segs))
    }

    fn qport(&mut self) -> PResult<QPort> {
        let at = self.here();
        let p = self.path()?;
        if p.0.len() < 2 {
            return Err(Diagnostic::error(
                "E001",
                at.0,
                at.1,
                format!("expected a qualified port `instance.port`, found `{p}`"),
            ));
        }
        Ok(QPort {
            instance: p.0[0].clone(),
            port: p.0[1..].join("."),
        })
    }

    fn sep_list<T>(&mut self, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut v = vec![item(self)?];
        while self.eat(&Tok::Comma) {
            v.push(item(self)?);
        }
        Ok(v)
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn int_literal(&mut self, negative: bool) -> PResult<i64> {
        let at = self.here();
        let Tok::Int(n) = self.bump() else {
            return self.err("an integer");
        };
        let v = if negative { -(n as i128) } else { n as i128 };
        i64::try_from(v).map_err(|_| {
            Diagnostic::error("E001", at.0, at.1, format!("integer literal `{v}` out of range"))
        })
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Expr::negate(self.unary()?))
            }
            Tok::Minus => {
                self.bump();
                if matches!(self.peek(), Tok::Int(_)) {
                    Ok(Expr::int(self.int_literal(true)?))
                } else {
                    Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
                }
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(_) => Ok(Expr::int(self.int_literal(false)?)),
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Const(Value::Sym(Symbol::intern(&s))))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Const(Value::Bool(s == "true")))
            }
            Tok::Ident(s)
                if (is_symbol_spelling(&s) || s.contains('-'))
                    && !matches!(self.peek_at(1), Tok::Dot | Tok::At) =>
            {
                self.bump();
                Ok(Expr::Const(Value::Sym(Symbol::intern(&s))))
            }
            Tok::Ident(_) => {
                let p = self.path()?;
                if self.eat(&Tok::At) {
                    let location = self.any_ident()?;
                    Ok(Expr::At(LocPath {
                        instance: p,
                        location,
                    }))
                } else {
                    Ok(Expr::Var(p))
                }
            }
            _ => self.err("an expression"),
        }
    }

    pub(crate) fn literal(&mut self) -> PResult<Value> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                Ok(Value::Int(self.int_literal(true)?))
            }
            Tok::Int(_) => Ok(Value::Int(self.int_literal(false)?)),
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Sym(Symbol::intern(&s)))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Value::Bool(s == "true"))
            }
            Tok::Ident(s) if is_symbol_spelling(&s) || s.contains('-') => {
                self.bump();
                Ok(Value::Sym(Symbol::intern(&s)))
            }
            _ => self.err("a literal value"),
        }
    }

    fn assign(&mut self) -> PResult<Assign> {
        let target = self.path()?;
        self.expect(Tok::Assign)?;
        Ok(Assign::new(target, self.expr()?))
    }

    fn action(&mut self) -> PResult<Action> {
        if !self.eat(&Tok::LBrace) {
            return Ok(vec![self.assign()?]);
        }
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            out.push(self.assign()?);
            if !(self.eat(&Tok::Semi) || self.eat(&Tok::Comma)) {
                self.expect(Tok::RBrace)?;
                break;
            }
        }
        Ok(out)
    }

    // ---- atomic components ----

    fn var_decls(&mut self, comp: &str, out: &mut Vec<VarDecl>) -> PResult<()> {
        let ty = match self.name()?.as_str() {
            "int" => Type::Int,
            "bool" => Type::Bool,
            "sym" => Type::Sym,
            _ => {
                self.pos -= 1;
                return self.err("a type (`int`, `bool` or `sym`)");
            }
        };
        let decls = self.sep_list(|p| {
            let at = p.here();
            let name = p.name()?;
            let init = if p.eat(&Tok::Assign) {
                p.literal()?
            } else {
                match ty {
                    Type::Int => Value::Int(0),
                    Type::Bool => Value::Bool(false),
                    Type::Sym => Value::Sym(none_symbol()),
                }
            };
            let range = if p.eat_kw("range") {
                p.expect(Tok::LBracket)?;
                let neg = p.eat(&Tok::Minus);
                let lo = p.int_literal(neg)?;
                p.expect(Tok::Comma)?;
                let neg = p.eat(&Tok::Minus);
                let hi = p.int_literal(neg)?;
                p.expect(Tok::RBracket)?;
                Some((lo, hi))
            } else {
                None
            };
            Ok((at, VarDecl { name, ty, init, range }))
        })?;
        for (at, d) in decls {
            self.spans.insert(format!("{comp}.{}", d.name), at);
            out.push(d);
        }
        Ok(())
    }

    fn atomic(&mut self) -> PResult<AtomicComponent> {
        let at = self.here();
        self.expect_kw("component")?;
        let name = self.name()?;
        self.spans.insert(name.clone(), at);
        let mut a = AtomicComponent::new(&name, "");
        a.locations.clear();
        loop {
            if self.eat_kw("port") {
                let ps = self.sep_list(|p| p.name())?;
                a.ports.extend(ps);
            } else if self.eat_kw("data") {
                self.var_decls(&name, &mut a.variables)?;
            } else if self.at_kw("behavior") {
                break;
            } else {
                return self.err("`port`, `data` or `behavior`");
            }
        }
        self.expect_kw("behavior")?;
        self.expect_kw("initial")?;
        self.expect_kw("to")?;
        a.initial = self.name()?;
        let mut current: Option<String> = None;
        loop {
            if self.eat_kw("state") {
                let l = self.name()?;
                if !a.locations.contains(&l) {
                    a.locations.push(l.clone());
                }
                current = Some(l);
            } else if self.at_kw("on") {
                let tat = self.here();
                self.bump();
                let Some(from) = current.clone() else {
                    return Err(Diagnostic::error(
                        "E001",
                        tat.0,
                        tat.1,
                        "transition outside a `state` block",
                    ));
                };
                let port = self.name()?;
                let guard = if self.eat_kw("provided") {
                    self.expr()?
                } else {
                    Expr::truth()
                };
                let action = if self.eat_kw("do") {
                    self.action()?
                } else {
                    Vec::new()
                };
                self.expect_kw("to")?;
                let to = self.name()?;
                self.spans
                    .insert(format!("{name}: transition #{}", a.transitions.len()), tat);
                a.transitions.push(Transition {
                    from,
                    port,
                    guard,
                    action,
                    to,
                });
            } else if self.eat_kw("end") {
                break;
            } else {
                return self.err("`state`, `on` or `end`");
            }
        }
        self.expect_kw("end")?;
        Ok(a)
    }

    // ---- connectors and priorities ----

    fn define_items(&mut self) -> PResult<Vec<ConnectorPort>> {
        let mut ports: Vec<ConnectorPort> = Vec::new();
        let mut unit = 0u32;
        loop {
            if self.eat(&Tok::LBracket) {
                let inner = self.sep_list(|p| {
                    let q = p.qport()?;
                    Ok((q, p.eat(&Tok::Prime)))
                })?;
                self.expect(Tok::RBracket)?;
                let outer = self.eat(&Tok::Prime);
                let inner_primed = inner.iter().any(|(_, t)| *t);
                if outer && inner_primed {
                    return self.err("a prime on the group or on its ports, not both");
                }
                if inner_primed {
                    for (port, trigger) in inner {
                        ports.push(ConnectorPort { port, trigger, unit });
                        unit += 1;
                    }
                } else {
                    for (port, _) in inner {
                        ports.push(ConnectorPort {
                            port,
                            trigger: outer,
                            unit,
                        });
                    }
                    unit += 1;
                }
            } else {
                let port = self.qport()?;
                let trigger = self.eat(&Tok::Prime);
                ports.push(ConnectorPort { port, trigger, unit });
                unit += 1;
            }
            if !self.eat(&Tok::Comma) {
                return Ok(ports);
            }
        }
    }

    fn at_connector_export(&self) -> bool {
        self.at_kw("export")
            && matches!(self.peek_at(1), Tok::Ident(s) if s == "port")
            && matches!(self.peek_at(2), Tok::Ident(s) if s == "Port")
            && matches!(self.peek_at(3), Tok::Ident(_))
            && !matches!(self.peek_at(4), Tok::Dot)
    }

    fn connector(&mut self) -> PResult<Connector> {
        let at = self.here();
        self.expect_kw("connector")?;
        let name = self.name()?;
        self.spans.insert(format!("connector {name}"), at);
        self.expect(Tok::LParen)?;
        let header = self.sep_list(|p| p.qport())?;
        self.expect(Tok::RParen)?;
        self.expect_kw("define")?;
        let ports = self.define_items()?;
        let mut h: Vec<&QPort> = header.iter().collect();
        let mut d: Vec<&QPort> = ports.iter().map(|p| &p.port).collect();
        h.sort();
        d.sort();
        if h != d {
            self.errors.push(Diagnostic::error(
                "E006",
                at.0,
                at.1,
                format!("connector {name}: header port list differs from the define list"),
            ));
        }
        let mut clauses = Vec::new();
        while self.eat_kw("on") {
            let qs = self.sep_list(|p| p.qport())?;
            let guard = if self.eat_kw("provided") {
                self.expr()?
            } else {
                Expr::truth()
            };
            let action = if self.eat_kw("do") {
                self.action()?
            } else {
                Vec::new()
            };
            clauses.push(Clause {
                ports: qs,
                guard,
                action,
            });
        }
        let export = if self.at_connector_export() {
            self.bump();
            self.bump();
            self.bump();
            Some(self.name()?)
        } else {
            None
        };
        Ok(Connector {
            name,
            ports,
            clauses,
            export,
        })
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        let p = self.path()?;
        Ok(if p.is_single() {
            Pattern::Connector(p.0[0].clone())
        } else {
            Pattern::Port(QPort {
                instance: p.0[0].clone(),
                port: p.0[1..].join("."),
            })
        })
    }

    fn priority(&mut self) -> PResult<PriorityRule> {
        let at = self.here();
        self.expect_kw("priority")?;
        let name = self.name()?;
        self.spans.insert(format!("priority {name}"), at);
        let low = self.pattern()?;
        self.expect(Tok::Lt)?;
        let high = self.pattern()?;
        let condition = if self.eat_kw("provided") {
            Some(self.expr()?)
        } else {
            None
        };
        Ok(PriorityRule {
            name,
            low,
            high,
            condition,
        })
    }

    // ---- compounds ----

    fn compound(&mut self) -> PResult<RawCompound> {
        let at = self.here();
        self.expect_kw("compound")?;
        let name = self.name()?;
        self.spans.insert(format!("compound {name}"), at);
        let mut c = RawCompound {
            name,
            at,
            instances: Vec::new(),
            connectors: Vec::new(),
            priorities: Vec::new(),
            exports: Vec::new(),
        };
        loop {
            if self.at_kw("component") {
                let iat = self.here();
                self.bump();
                let ty = self.name()?;
                let name = self.name()?;
                self.spans.insert(format!("instance {name}"), iat);
                let mut overrides = Vec::new();
                if self.eat(&Tok::LParen) {
                    overrides = self.sep_list(|p| {
                        let path = p.path()?;
                        p.expect(Tok::Assign)?;
                        Ok((path, p.literal()?))
                    })?;
                    self.expect(Tok::RParen)?;
                }
                c.instances.push(RawInstance {
                    name,
                    ty,
                    overrides,
                    at: iat,
                });
            } else if self.at_kw("connector") {
                c.connectors.push(self.connector()?);
            } else if self.at_kw("priority") {
                c.priorities.push(self.priority()?);
            } else if self.eat_kw("export") {
                self.expect_kw("port")?;
                let target = self.qport()?;
                self.expect_kw("as")?;
                let p = self.path()?;
                c.exports.push(PortExport {
                    name: p.0.join("."),
                    target,
                });
            } else if self.eat_kw("end") {
                return Ok(c);
            } else {
                return self.err("`component`, `connector`, `priority`, `export` or `end`");
            }
        }
    }
}

enum Def {
    Atomic(usize),
    Compound(usize),
}

struct Resolver<'a> {
    raws: &'a [RawCompound],
    defs: HashMap<String, Def>,
    atomics: &'a [Arc<AtomicComponent>],
    built: Vec<Option<Arc<CompoundComponent>>>,
    visiting: Vec<bool>,
    errors: Vec<Diagnostic>,
}

impl Resolver<'_> {
    fn get(&mut self, name: &str, at: Pos) -> Option<ComponentRef> {
        match self.defs.get(name) {
            Some(Def::Atomic(i)) => Some(ComponentRef::Atomic(self.atomics[*i].clone())),
            Some(Def::Compound(i)) => self.build(*i).map(ComponentRef::Compound),
            None => {
                self.errors.push(Diagnostic::error(
                    "E003",
                    at.0,
                    at.1,
                    format!("unresolved component type `{name}`"),
                ));
                None
            }
        }
    }

    fn build(&mut self, i: usize) -> Option<Arc<CompoundComponent>> {
        if let Some(c) = &self.built[i] {
            return Some(c.clone());
        }
        let raws = self.raws;
        let raw = &raws[i];
        if self.visiting[i] {
            self.errors.push(Diagnostic::error(
                "E013",
                raw.at.0,
                raw.at.1,
                format!("component hierarchy is cyclic through `{}`", raw.name),
            ));
            return None;
        }
        self.visiting[i] = true;
        let mut c = CompoundComponent::new(&raw.name);
        let mut ok = true;
        for ri in &raw.instances {
            match self.get(&ri.ty, ri.at) {
                Some(comp) => c.instances.push(Instance {
                    name: ri.name.clone(),
                    component: comp,
                    overrides: ri.overrides.clone(),
                }),
                None => ok = false,
            }
        }
        c.connectors = raw.connectors.clone();
        c.priorities = raw.priorities.clone();
        c.exports = raw.exports.clone();
        self.visiting[i] = false;
        if !ok {
            return None;
        }
        let c = Arc::new(c);
        self.built[i] = Some(c.clone());
        Some(c)
    }
}

/// Parses `src` without running the validator. Syntax errors stop at the
/// first one; definition-level errors (duplicates, unresolved types,
/// header mismatches, cycles) are collected.
pub fn parse_unchecked(src: &str) -> Result<SourceModel, Vec<Diagnostic>> {
    let mut p = Parser::new(src).map_err(|d| vec![d])?;
    let mut atomics: Vec<(Pos, AtomicComponent)> = Vec::new();
    let mut raws: Vec<RawCompound> = Vec::new();
    let mut top_conns = Vec::new();
    let mut top_prios = Vec::new();
    let mut root: Option<(Pos, String)> = None;
    while *p.peek() != Tok::Eof {
        let at = p.here();
        let r: PResult<()> = (|| {
            if p.at_kw("component") {
                let a = p.atomic()?;
                atomics.push((at, a));
            } else if p.at_kw("compound") {
                raws.push(p.compound()?);
            } else if p.at_kw("connector") {
                top_conns.push(p.connector()?);
            } else if p.at_kw("priority") {
                top_prios.push(p.priority()?);
            } else if p.eat_kw("root") {
                root = Some((at, p.name()?));
            } else {
                return p.err("`component`, `compound`, `connector`, `priority` or `root`");
            }
            Ok(())
        })();
        r.map_err(|d| vec![d])?;
    }
    let mut errors = std::mem::take(&mut p.errors);

    let mut defs = HashMap::new();
    let mut dup = |name: &str, at: Pos, def: Def, errors: &mut Vec<Diagnostic>| {
        if defs.contains_key(name) {
            errors.push(Diagnostic::error(
                "E002",
                at.0,
                at.1,
                format!("duplicate component definition `{name}`"),
            ));
        } else {
            defs.insert(name.to_owned(), def);
        }
    };
    for (i, (at, a)) in atomics.iter().enumerate() {
        dup(&a.name, *at, Def::Atomic(i), &mut errors);
    }
    for (i, r) in raws.iter().enumerate() {
        dup(&r.name, r.at, Def::Compound(i), &mut errors);
    }

    let root_name = match &root {
        Some((_, n)) => n.clone(),
        None => match (raws.last(), atomics.last()) {
            (Some(r), _) => r.name.clone(),
            (None, Some((_, a))) => a.name.clone(),
            (None, None) => {
                errors.push(Diagnostic::error("E001", 1, 1, "no component definitions"));
                return Err(errors);
            }
        },
    };
    if !top_conns.is_empty() || !top_prios.is_empty() {
        match raws.iter_mut().find(|r| r.name == root_name) {
            Some(r) => {
                r.connectors.extend(top_conns);
                r.priorities.extend(top_prios);
            }
            None => {
                let (l, c) = root.as_ref().map(|r| r.0).unwrap_or((1, 1));
                errors.push(Diagnostic::error(
                    "E003",
                    l,
                    c,
                    "top-level connectors and priorities need a compound root",
                ));
            }
        }
    }
    if !defs.contains_key(&root_name) {
        let (l, c) = root.as_ref().map(|r| r.0).unwrap_or((1, 1));
        errors.push(Diagnostic::error(
            "E003",
            l,
            c,
            format!("unresolved root `{root_name}`"),
        ));
    }

    let atomics: Vec<Arc<AtomicComponent>> =
        atomics.into_iter().map(|(_, a)| Arc::new(a)).collect();
    let mut res = Resolver {
        raws: &raws,
        defs,
        atomics: &atomics,
        built: vec![None; raws.len()],
        visiting: vec![false; raws.len()],
        errors: Vec::new(),
    };
    for i in 0..raws.len() {
        res.build(i);
    }
    errors.append(&mut res.errors);
    errors.dedup();
    if !errors.is_empty() {
        return Err(errors);
    }
    let compounds = res.built.into_iter().map(|c| c.expect("built")).collect();
    Ok(SourceModel {
        atomics,
        compounds,
        root: root_name,
        spans: p.spans,
    })
}

fn single<T>(src: &str, f: impl FnOnce(&mut Parser) -> PResult<T>) -> Result<T, Diagnostic> {
    let mut p = Parser::new(src)?;
    let v = f(&mut p)?;
    if *p.peek() != Tok::Eof {
        return p.err("end of input");
    }
    if let Some(e) = p.errors.into_iter().next() {
        return Err(e);
    }
    Ok(v)
}

/// Parses a standalone connector definition.
pub fn parse_connector(src: &str) -> Result<Connector, Diagnostic> {
    single(src, |p| p.connector())
}

/// Parses a standalone expression, e.g. a safety property.
pub fn parse_expr(src: &str) -> Result<Expr, Diagnostic> {
    single(src, |p| p.expr())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("a - b - c * 2 < 4 && !d || e").unwrap();
        let v = |s: &str| Expr::Var(Path::single(s));
        let lhs = Expr::bin(
            BinOp::Sub,
            Expr::bin(BinOp::Sub, v("a"), v("b")),
            Expr::bin(BinOp::Mul, v("c"), Expr::int(2)),
        );
        let cmp = Expr::bin(BinOp::Lt, lhs, Expr::int(4));
        let expected = Expr::or(Expr::and(cmp, Expr::negate(v("d"))), v("e"));
        assert_eq!(e, expected);
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(parse_expr("-5").unwrap(), Expr::int(-5));
        assert_eq!(parse_expr("-9223372036854775808").unwrap(), Expr::int(i64::MIN));
        assert!(parse_expr("9223372036854775808").is_err());
        assert_eq!(
            parse_expr("-(5)").unwrap(),
            Expr::Unary(UnOp::Neg, Box::new(Expr::int(5)))
        );
    }

    #[test]
    fn symbols_locations_and_strings() {
        assert_eq!(
            parse_expr("r == MAX-PWR-EXCEEDED").unwrap(),
            Expr::bin(
                BinOp::Eq,
                Expr::Var(Path::single("r")),
                Expr::Const(Value::sym("MAX-PWR-EXCEEDED"))
            )
        );
        assert_eq!(
            parse_expr("ndd.MessageBox@abtI").unwrap(),
            Expr::At(LocPath {
                instance: Path::parse("ndd.MessageBox"),
                location: "abtI".into()
            })
        );
        assert_eq!(
            parse_expr("id = “Marlin”").unwrap(),
            Expr::bin(
                BinOp::Eq,
                Expr::Var(Path::single("id")),
                Expr::Const(Value::sym("Marlin"))
            )
        );
    }

    #[test]
    fn syntax_error_points_at_token() {
        let e = parse_unchecked("component A\n  port p\n  behavior initial to s\n  state s on p to\nend end")
            .unwrap_err();
        assert_eq!(e[0].code, "E001");
        assert_eq!((e[0].line, e[0].col), (5, 1));
    }

    #[test]
    fn primed_group_and_single_primes() {
        let c = parse_connector(
            "connector ModuleSync(execTaskTimer.tick, posterTimer.tick,\n\
             interfaceTimer.tick)\n\
             define [execTaskTimer.tick, posterTimer.tick]',\n\
             interfaceTimer.tick\n\
             export port Port moduleTick",
        )
        .unwrap();
        assert_eq!(c.feasible_masks(), vec![0b011, 0b111]);
        assert_eq!(c.export.as_deref(), Some("moduleTick"));

        let c = parse_connector("connector conn(c1.p1, c2.p2) define [c1.p1', c2.p2]").unwrap();
        assert_eq!(c.feasible_masks(), vec![0b01, 0b11]);
    }

    #[test]
    fn header_mismatch_is_reported() {
        let e = parse_connector("connector c(a.p, b.q) define a.p, c.r").unwrap_err();
        assert_eq!(e.code, "E006");
    }
}
