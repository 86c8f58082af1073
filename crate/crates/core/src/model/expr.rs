//! Guard and action expressions.
//!
//! `Expr` is generic over how variables (`V`) and location tests (`L`) are
//! referenced. Source models use dotted names ([`Path`], [`LocPath`]); the
//! flattened system uses resolved slots ([`Slot`], [`InstLoc`]).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::value::{Type, Value};

/// Dotted name, e.g. `x`, `r.x`, `ndd.stat_GoTo.done`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path(pub Vec<String>);

impl Path {
    pub fn new<S: Into<String>>(segments: impl IntoIterator<Item = S>) -> Path {
        Path(segments.into_iter().map(Into::into).collect())
    }

    pub fn parse(dotted: &str) -> Path {
        Path(dotted.split('.').map(str::to_owned).collect())
    }

    pub fn single(name: &str) -> Path {
        Path(vec![name.to_owned()])
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn is_single(&self) -> bool {
        self.0.len() == 1
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("."))
    }
}

/// `inst@loc` written against a source scope.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocPath {
    pub instance: Path,
    pub location: String,
}

impl fmt::Display for LocPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.instance, self.location)
    }
}

/// Index of a variable in a flattened global valuation.
pub type Slot = usize;

/// Resolved `inst@loc` test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstLoc {
    pub instance: usize,
    pub location: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr<V = Path, L = LocPath> {
    Const(Value),
    Var(V),
    At(L),
    Unary(UnOp, Box<Expr<V, L>>),
    Binary(BinOp, Box<Expr<V, L>>, Box<Expr<V, L>>),
}

/// Expression over resolved slots, as stored in a flattened system.
pub type SlotExpr = Expr<Slot, InstLoc>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("ill-typed operands for `{0}`")]
    IllTyped(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("operator `{op}` expects {expected}, found {found}")]
    Mismatch {
        op: &'static str,
        expected: &'static str,
        found: Type,
    },
    #[error("operands of `{op}` differ in type ({left} vs {right})")]
    OperandKinds { op: &'static str, left: Type, right: Type },
    #[error("location tests are not allowed here")]
    LocationTest,
}

/// Variable lookup used by [`Expr::eval`].
pub trait Env<V, L> {
    fn var(&self, v: &V) -> Option<Value>;
    fn at(&self, l: &L) -> Option<bool>;
}

/// A plain valuation keyed by dotted names; location tests are unbound.
impl Env<Path, LocPath> for HashMap<String, Value> {
    fn var(&self, v: &Path) -> Option<Value> {
        self.get(&v.to_string()).copied()
    }

    fn at(&self, _: &LocPath) -> Option<bool> {
        None
    }
}

impl<V, L> Expr<V, L> {
    pub fn truth() -> Self {
        Expr::Const(Value::Bool(true))
    }

    pub fn int(i: i64) -> Self {
        Expr::Const(Value::Int(i))
    }

    pub fn negate(e: Self) -> Self {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn bin(op: BinOp, l: Self, r: Self) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn and(l: Self, r: Self) -> Self {
        Self::bin(BinOp::And, l, r)
    }

    pub fn or(l: Self, r: Self) -> Self {
        Self::bin(BinOp::Or, l, r)
    }

    /// Conjunction of all items, `true` when empty.
    pub fn all(items: impl IntoIterator<Item = Self>) -> Self {
        items
            .into_iter()
            .reduce(Self::and)
            .unwrap_or_else(Self::truth)
    }

    /// Disjunction of all items, `false` when empty.
    pub fn any(items: impl IntoIterator<Item = Self>) -> Self {
        items
            .into_iter()
            .reduce(Self::or)
            .unwrap_or(Expr::Const(Value::Bool(false)))
    }

    pub fn is_true_const(&self) -> bool {
        matches!(self, Expr::Const(Value::Bool(true)))
    }

    pub fn eval(&self, env: &impl Env<V, L>) -> Result<Value, EvalError>
    where
        V: fmt::Debug,
    {
        match self {
            Expr::Const(v) => Ok(*v),
            Expr::Var(v) => env.var(v).ok_or_else(|| EvalError::Unbound(format!("{v:?}"))),
            Expr::At(l) => env
                .at(l)
                .map(Value::Bool)
                .ok_or_else(|| EvalError::Unbound("location test".into())),
            Expr::Unary(op, e) => {
                let v = e.eval(env)?;
                match (op, v) {
                    (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    (UnOp::Neg, Value::Int(i)) => {
                        i.checked_neg().map(Value::Int).ok_or(EvalError::Overflow)
                    }
                    (UnOp::Not, _) => Err(EvalError::IllTyped("!")),
                    (UnOp::Neg, _) => Err(EvalError::IllTyped("-")),
                }
            }
            Expr::Binary(op, l, r) => {
                // && and || short-circuit.
                match op {
                    BinOp::And | BinOp::Or => {
                        let lv = l.eval(env)?.as_bool().ok_or(EvalError::IllTyped(op.symbol()))?;
                        if (*op == BinOp::And && !lv) || (*op == BinOp::Or && lv) {
                            return Ok(Value::Bool(lv));
                        }
                        let rv = r.eval(env)?.as_bool().ok_or(EvalError::IllTyped(op.symbol()))?;
                        return Ok(Value::Bool(rv));
                    }
                    _ => {}
                }
                let lv = l.eval(env)?;
                let rv = r.eval(env)?;
                apply_binary(*op, lv, rv)
            }
        }
    }

    /// Infers the type, checking operand kinds.
    pub fn type_of(
        &self,
        var_ty: &impl Fn(&V) -> Option<Type>,
        loc_ok: &impl Fn(&L) -> Result<(), TypeError>,
    ) -> Result<Type, TypeError>
    where
        V: fmt::Display,
    {
        match self {
            Expr::Const(v) => Ok(v.ty()),
            Expr::Var(v) => var_ty(v).ok_or_else(|| TypeError::UnknownVariable(v.to_string())),
            Expr::At(l) => loc_ok(l).map(|_| Type::Bool),
            Expr::Unary(op, e) => {
                let t = e.type_of(var_ty, loc_ok)?;
                let (want, sym) = match op {
                    UnOp::Not => (Type::Bool, "!"),
                    UnOp::Neg => (Type::Int, "-"),
                };
                if t != want {
                    return Err(TypeError::Mismatch {
                        op: sym,
                        expected: if want == Type::Int { "int" } else { "bool" },
                        found: t,
                    });
                }
                Ok(want)
            }
            Expr::Binary(op, l, r) => {
                let lt = l.type_of(var_ty, loc_ok)?;
                let rt = r.type_of(var_ty, loc_ok)?;
                let need = |want: Type, t: Type| {
                    if t == want {
                        Ok(())
                    } else {
                        Err(TypeError::Mismatch {
                            op: op.symbol(),
                            expected: if want == Type::Int { "int" } else { "bool" },
                            found: t,
                        })
                    }
                };
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        need(Type::Int, lt)?;
                        need(Type::Int, rt)?;
                        Ok(Type::Int)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        need(Type::Int, lt)?;
                        need(Type::Int, rt)?;
                        Ok(Type::Bool)
                    }
                    BinOp::And | BinOp::Or => {
                        need(Type::Bool, lt)?;
                        need(Type::Bool, rt)?;
                        Ok(Type::Bool)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if lt != rt {
                            return Err(TypeError::OperandKinds {
                                op: op.symbol(),
                                left: lt,
                                right: rt,
                            });
                        }
                        Ok(Type::Bool)
                    }
                }
            }
        }
    }

    /// Rewrites variable and location references, failing on the first error.
    pub fn try_map<V2, L2, E>(
        &self,
        fv: &mut impl FnMut(&V) -> Result<V2, E>,
        fl: &mut impl FnMut(&L) -> Result<L2, E>,
    ) -> Result<Expr<V2, L2>, E> {
        Ok(match self {
            Expr::Const(v) => Expr::Const(*v),
            Expr::Var(v) => Expr::Var(fv(v)?),
            Expr::At(l) => Expr::At(fl(l)?),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.try_map(fv, fl)?)),
            Expr::Binary(op, l, r) => Expr::Binary(
                *op,
                Box::new(l.try_map(fv, fl)?),
                Box::new(r.try_map(fv, fl)?),
            ),
        })
    }

    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a V)) {
        match self {
            Expr::Var(v) => f(v),
            Expr::Unary(_, e) => e.visit_vars(f),
            Expr::Binary(_, l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
            Expr::Const(_) | Expr::At(_) => {}
        }
    }

    pub fn visit_locs<'a>(&'a self, f: &mut impl FnMut(&'a L)) {
        match self {
            Expr::At(l) => f(l),
            Expr::Unary(_, e) => e.visit_locs(f),
            Expr::Binary(_, l, r) => {
                l.visit_locs(f);
                r.visit_locs(f);
            }
            Expr::Const(_) | Expr::Var(_) => {}
        }
    }

    pub fn constants(&self, out: &mut Vec<Value>) {
        match self {
            Expr::Const(v) => out.push(*v),
            Expr::Unary(_, e) => e.constants(out),
            Expr::Binary(_, l, r) => {
                l.constants(out);
                r.constants(out);
            }
            Expr::Var(_) | Expr::At(_) => {}
        }
    }
}

fn apply_binary(op: BinOp, l: Value, r: Value) -> Result<Value, EvalError> {
    use BinOp::*;
    let ints = || match (l, r) {
        (Value::Int(a), Value::Int(b)) => Ok((a, b)),
        _ => Err(EvalError::IllTyped(op.symbol())),
    };
    Ok(match op {
        Add => Value::Int(ints().and_then(|(a, b)| a.checked_add(b).ok_or(EvalError::Overflow))?),
        Sub => Value::Int(ints().and_then(|(a, b)| a.checked_sub(b).ok_or(EvalError::Overflow))?),
        Mul => Value::Int(ints().and_then(|(a, b)| a.checked_mul(b).ok_or(EvalError::Overflow))?),
        Div => {
            let (a, b) = ints()?;
            if b == 0 {
                return Err(EvalError::DivisionByZero);
            }
            Value::Int(a.checked_div(b).ok_or(EvalError::Overflow)?)
        }
        Lt => Value::Bool(ints().map(|(a, b)| a < b)?),
        Le => Value::Bool(ints().map(|(a, b)| a <= b)?),
        Gt => Value::Bool(ints().map(|(a, b)| a > b)?),
        Ge => Value::Bool(ints().map(|(a, b)| a >= b)?),
        Eq | Ne => {
            if l.ty() != r.ty() {
                return Err(EvalError::IllTyped(op.symbol()));
            }
            Value::Bool((l == r) == (op == Eq))
        }
        And | Or => unreachable!("handled by short-circuit path"),
    })
}

/// `target := value`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assign<V = Path, L = LocPath> {
    pub target: V,
    pub value: Expr<V, L>,
}

/// Ordered list of assignments; later ones observe earlier results.
pub type Action<V = Path, L = LocPath> = Vec<Assign<V, L>>;

impl<V, L> Assign<V, L> {
    pub fn new(target: V, value: Expr<V, L>) -> Self {
        Assign { target, value }
    }
}
