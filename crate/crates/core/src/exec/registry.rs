use std::collections::BTreeMap;

use chrono::{NaiveDate, NaiveDateTime};

use crate::calendar::StubDb;
use crate::graph::{DialogueContext, NodeId};
use crate::rewrite::Purity;
use crate::value::{ConstraintValue, EntityId, TypeTag, Value};

use super::ExceptionKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamType {
    Exact(TypeTag),
    Any,
    AnySet,
    AnyConstraint,
}

impl ParamType {
    pub fn accepts(&self, tag: &TypeTag) -> bool {
        match self {
            ParamType::Exact(t) => t == tag,
            ParamType::Any => true,
            ParamType::AnySet => matches!(tag, TypeTag::SetOf(_)),
            ParamType::AnyConstraint => matches!(tag, TypeTag::Constraint(_)),
        }
    }
}

impl std::fmt::Display for ParamType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamType::Exact(t) => write!(f, "{t}"),
            ParamType::Any => f.write_str("any"),
            ParamType::AnySet => f.write_str("SetOf(_)"),
            ParamType::AnyConstraint => f.write_str("Constraint(_)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: ParamType,
    pub optional: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    Pure,
    /// Reads the database; entity results are materialized as db nodes.
    Lookup,
    Write,
}

/// Inserted by the expand phase when `param` receives `from`. The chain is
/// applied innermost first: `[singleton, Event.id]` wraps `x` as
/// `Event.id(singleton(x))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coercion {
    pub param: String,
    pub from: TypeTag,
    pub chain: Vec<String>,
}

/// Argument tags seen by a result-type rule, with literal values where the
/// argument is a literal.
pub struct TypeCtx<'a> {
    pub func: &'a str,
    pub args: &'a [(String, TypeTag, Option<Value>)],
}

impl TypeCtx<'_> {
    pub fn tag(&self, name: &str) -> Option<&TypeTag> {
        self.args.iter().find(|(n, ..)| n == name).map(|(_, t, _)| t)
    }

    pub fn literal(&self, name: &str) -> Option<&Value> {
        self.args.iter().find(|(n, ..)| n == name).and_then(|(.., v)| v.as_ref())
    }

    pub fn variadic_tags(&self) -> impl Iterator<Item = &TypeTag> {
        self.args.iter().filter(|(n, ..)| is_variadic_name(n)).map(|(_, t, _)| t)
    }
}

pub(crate) fn is_variadic_name(name: &str) -> bool {
    name.strip_prefix('c').is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

pub(crate) fn variadic_name(i: usize) -> String {
    format!("c{i}")
}

#[derive(Clone, Copy)]
pub enum ResultRule {
    Fixed(fn() -> TypeTag),
    Custom(fn(&TypeCtx) -> Result<TypeTag, String>),
}

/// What a function implementation raises instead of returning a value.
#[derive(Debug, Clone, PartialEq)]
pub struct Raise {
    pub kind: ExceptionKind,
    pub slot: Option<String>,
    pub prompt: String,
    pub expected: Option<TypeTag>,
}

impl Raise {
    pub fn missing(slot: &str, expected: TypeTag, prompt: impl Into<String>) -> Raise {
        Raise { kind: ExceptionKind::MissingValue, slot: Some(slot.into()), prompt: prompt.into(), expected: Some(expected) }
    }

    pub fn no_match(prompt: impl Into<String>) -> Raise {
        Raise::plain(ExceptionKind::NoMatch, prompt)
    }

    pub fn multiple(prompt: impl Into<String>) -> Raise {
        Raise::plain(ExceptionKind::MultipleMatches, prompt)
    }

    pub fn type_mismatch(prompt: impl Into<String>) -> Raise {
        Raise::plain(ExceptionKind::TypeMismatch, prompt)
    }

    pub fn domain(prompt: impl Into<String>) -> Raise {
        Raise::plain(ExceptionKind::DomainError, prompt)
    }

    fn plain(kind: ExceptionKind, prompt: impl Into<String>) -> Raise {
        Raise { kind, slot: None, prompt: prompt.into(), expected: None }
    }
}

/// Evaluated inputs of one call, keyed by parameter name.
#[derive(Debug, Clone, Default)]
pub struct Args {
    pub values: Vec<(String, Value)>,
}

impl Args {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Variadic inputs in position order.
    pub fn variadic(&self) -> Vec<&Value> {
        let mut vs: Vec<(usize, &Value)> = self
            .values
            .iter()
            .filter(|(n, _)| is_variadic_name(n))
            .map(|(n, v)| (n[1..].parse().unwrap_or(usize::MAX), v))
            .collect();
        vs.sort_by_key(|(i, _)| *i);
        vs.into_iter().map(|(_, v)| v).collect()
    }

    pub fn value(&self, name: &str) -> Result<&Value, Raise> {
        self.get(name).ok_or_else(|| Raise::type_mismatch(format!("missing input '{name}'")))
    }

    pub fn text(&self, name: &str) -> Result<Option<&str>, Raise> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Text(s)) => Ok(Some(s)),
            Some(v) => Err(wrong(name, "Text", v)),
        }
    }

    pub fn int(&self, name: &str) -> Result<Option<i64>, Raise> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Int(i)) => Ok(Some(*i)),
            Some(v) => Err(wrong(name, "Int", v)),
        }
    }

    pub fn boolean(&self, name: &str) -> Result<Option<bool>, Raise> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(v) => Err(wrong(name, "Bool", v)),
        }
    }

    pub fn date(&self, name: &str) -> Result<Option<NaiveDate>, Raise> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Date(d)) => Ok(Some(*d)),
            Some(v) => Err(wrong(name, "Date", v)),
        }
    }

    pub fn datetime(&self, name: &str) -> Result<Option<NaiveDateTime>, Raise> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::DateTime(d)) => Ok(Some(*d)),
            Some(v) => Err(wrong(name, "DateTime", v)),
        }
    }

    pub fn person(&self, name: &str) -> Result<Option<EntityId>, Raise> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Person(p)) => Ok(Some(*p)),
            Some(v) => Err(wrong(name, "Recipient", v)),
        }
    }

    pub fn event(&self, name: &str) -> Result<Option<EntityId>, Raise> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Event(e)) => Ok(Some(*e)),
            Some(v) => Err(wrong(name, "Event", v)),
        }
    }

    pub fn constraint(&self, name: &str) -> Result<Option<&ConstraintValue>, Raise> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Constraint(c)) => Ok(Some(c)),
            Some(v) => Err(wrong(name, "Constraint", v)),
        }
    }

    pub fn set(&self, name: &str) -> Result<Option<&[Value]>, Raise> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Set { items, .. }) => Ok(Some(items)),
            Some(v) => Err(wrong(name, "SetOf", v)),
        }
    }
}

fn wrong(name: &str, want: &str, got: &Value) -> Raise {
    Raise::type_mismatch(format!("input '{name}' should be {want}, got {}", got.type_tag()))
}

/// What an implementation sees of the dialogue while it runs.
pub struct CallEnv<'a> {
    pub ctx: &'a mut DialogueContext,
    pub node: NodeId,
    pub(crate) result_node: Option<NodeId>,
}

impl CallEnv<'_> {
    pub fn db(&self) -> &StubDb {
        &self.ctx.db
    }

    pub fn db_mut(&mut self) -> &mut StubDb {
        &mut self.ctx.db
    }

    pub fn clock(&self) -> NaiveDateTime {
        self.ctx.clock
    }

    pub fn say(&mut self, message: impl Into<String>) {
        self.ctx.messages.push(message.into());
    }

    /// Adds a db node holding `value` and points this call's result edge at it.
    pub fn materialize(&mut self, value: Value) -> NodeId {
        let turn = self.ctx.nodes[&self.node].turn_index;
        let id = self.ctx.add_db_node(value, turn);
        self.result_node = Some(id);
        id
    }

    /// Points this call's result edge at an existing node.
    pub fn point_to(&mut self, id: NodeId) {
        self.result_node = Some(id);
    }
}

pub type ImplFn = fn(&mut CallEnv, &Args) -> Result<Value, Raise>;

#[derive(Clone)]
pub struct FunctionSpec {
    pub name: String,
    pub params: Vec<Param>,
    pub variadic: Option<ParamType>,
    pub result: ResultRule,
    pub effect: Effect,
    pub coercions: Vec<Coercion>,
    pub imp: ImplFn,
}

impl std::fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionSpec")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("variadic", &self.variadic)
            .field("effect", &self.effect)
            .finish_non_exhaustive()
    }
}

impl FunctionSpec {
    pub fn new(name: &str, imp: ImplFn) -> Self {
        FunctionSpec {
            name: name.into(),
            params: Vec::new(),
            variadic: None,
            result: ResultRule::Fixed(|| TypeTag::Unit),
            effect: Effect::Pure,
            coercions: Vec::new(),
            imp,
        }
    }

    pub fn param(mut self, name: &str, ty: ParamType) -> Self {
        self.params.push(Param { name: name.into(), ty, optional: false });
        self
    }

    pub fn exact(self, name: &str, tag: TypeTag) -> Self {
        self.param(name, ParamType::Exact(tag))
    }

    pub fn optional(mut self, name: &str, ty: ParamType) -> Self {
        self.params.push(Param { name: name.into(), ty, optional: true });
        self
    }

    pub fn variadic(mut self, ty: ParamType) -> Self {
        self.variadic = Some(ty);
        self
    }

    pub fn returns(mut self, tag: fn() -> TypeTag) -> Self {
        self.result = ResultRule::Fixed(tag);
        self
    }

    pub fn returns_with(mut self, rule: fn(&TypeCtx) -> Result<TypeTag, String>) -> Self {
        self.result = ResultRule::Custom(rule);
        self
    }

    pub fn effect(mut self, effect: Effect) -> Self {
        self.effect = effect;
        self
    }

    pub fn coerce(mut self, param: &str, from: TypeTag, chain: &[&str]) -> Self {
        self.coercions.push(Coercion {
            param: param.into(),
            from,
            chain: chain.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    pub fn param_type(&self, name: &str) -> Option<&ParamType> {
        match self.params.iter().find(|p| p.name == name) {
            Some(p) => Some(&p.ty),
            None if is_variadic_name(name) => self.variadic.as_ref(),
            None => None,
        }
    }

    pub fn coercion(&self, param: &str, from: &TypeTag) -> Option<&Coercion> {
        let key = if is_variadic_name(param) { "*" } else { param };
        self.coercions.iter().find(|c| (c.param == key || c.param == param) && &c.from == from)
    }

    pub fn result_type(&self, ctx: &TypeCtx) -> Result<TypeTag, String> {
        match self.result {
            ResultRule::Fixed(f) => Ok(f()),
            ResultRule::Custom(f) => f(ctx),
        }
    }

    /// Maps positional arguments to parameter names: declared parameters
    /// first, then `c0`, `c1`, ... for variadic positions.
    pub fn positional_names(&self, count: usize) -> Result<Vec<String>, usize> {
        let fixed = self.params.len();
        if count > fixed && self.variadic.is_none() {
            return Err(fixed);
        }
        Ok((0..count)
            .map(|i| if i < fixed { self.params[i].name.clone() } else { variadic_name(i - fixed) })
            .collect())
    }

    pub fn required_count(&self) -> usize {
        self.params.iter().filter(|p| !p.optional).count()
    }
}

#[derive(Debug, Clone, Default)]
pub struct FunctionRegistry {
    fns: BTreeMap<String, FunctionSpec>,
}

impl FunctionRegistry {
    pub fn new() -> Self {
        FunctionRegistry::default()
    }

    /// Core combinators plus the calendar functions in both vocabularies.
    pub fn standard() -> Self {
        let mut r = FunctionRegistry::new();
        super::builtins::register(&mut r);
        crate::calendar::register(&mut r);
        crate::calendar::register_legacy(&mut r);
        r
    }

    pub fn register(&mut self, spec: FunctionSpec) {
        self.fns.insert(spec.name.clone(), spec);
    }

    pub fn get(&self, name: &str) -> Option<&FunctionSpec> {
        self.fns.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.fns.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fns.keys().map(String::as_str)
    }
}

impl Purity for FunctionRegistry {
    fn is_pure(&self, head: &str) -> bool {
        self.fns.get(head).is_some_and(|f| f.effect != Effect::Write)
    }
}
