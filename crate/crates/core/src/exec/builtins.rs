//! Domain-independent functions: constraint combinators, `singleton`,
//! attribute access, `refer` and sequencing.

use crate::calendar::StubDb;
use crate::value::{ConstraintValue, Predicate, TypeTag, Value};

use super::refer::{noun, refer as refer_node};
use super::registry::{Args, CallEnv, Effect, FunctionRegistry, FunctionSpec, ParamType, Raise, TypeCtx};

/// Conjunction of constraints over one target type.
pub fn and(cs: &[&ConstraintValue]) -> Result<ConstraintValue, Raise> {
    combine(cs, Predicate::And)
}

pub fn or(cs: &[&ConstraintValue]) -> Result<ConstraintValue, Raise> {
    combine(cs, Predicate::Or)
}

pub fn not(c: &ConstraintValue) -> ConstraintValue {
    ConstraintValue::new(c.target.clone(), Predicate::Not(Box::new(c.pred.clone())))
}

fn combine(cs: &[&ConstraintValue], op: fn(Vec<Predicate>) -> Predicate) -> Result<ConstraintValue, Raise> {
    let Some(first) = cs.first() else {
        return Err(Raise::type_mismatch("a constraint combinator needs at least one constraint"));
    };
    if let Some(c) = cs.iter().find(|c| c.target != first.target) {
        return Err(Raise::type_mismatch(format!("cannot combine constraints on {} and {}", first.target, c.target)));
    }
    Ok(ConstraintValue::new(first.target.clone(), op(cs.iter().map(|c| c.pred.clone()).collect())))
}

/// The sole element of a set.
pub fn singleton(elem: &TypeTag, items: &[Value]) -> Result<Value, Raise> {
    match items {
        [one] => Ok(one.clone()),
        [] => Err(Raise::no_match(format!("I couldn't find a matching {}.", noun(elem)))),
        many => Err(Raise::multiple(format!(
            "I found {} matching {}s. Which one do you mean?",
            many.len(),
            noun(elem)
        ))),
    }
}

/// Type of a declared field.
pub fn attr_type(obj: &TypeTag, field: &str) -> Option<TypeTag> {
    Some(match (obj, field) {
        (TypeTag::Event, "id") | (TypeTag::Recipient, "id") => TypeTag::Int,
        (TypeTag::Event, "subject") | (TypeTag::Recipient, "name") => TypeTag::Text,
        (TypeTag::Event, "start") | (TypeTag::Event, "end") => TypeTag::DateTime,
        (TypeTag::Event, "attendees") => TypeTag::set_of(TypeTag::Recipient),
        (TypeTag::Recipient, "manager") => TypeTag::Recipient,
        _ => return None,
    })
}

/// Projects a declared field of an event or person.
pub fn get_attr(obj: &Value, field: &str, db: &StubDb) -> Result<Value, Raise> {
    let unknown = || Raise::domain(format!("{} has no field '{field}'", obj.type_tag()));
    match obj {
        Value::Event(id) => {
            let e = db.event(*id).ok_or_else(|| Raise::no_match(format!("event {id} no longer exists")))?;
            Ok(match field {
                "id" => Value::Int(*id as i64),
                "subject" => Value::Text(e.subject.clone()),
                "start" => Value::DateTime(e.start),
                "end" => Value::DateTime(e.end),
                "attendees" => Value::Set {
                    elem: TypeTag::Recipient,
                    items: e.attendees.iter().map(|p| Value::Person(*p)).collect(),
                },
                _ => return Err(unknown()),
            })
        }
        Value::Person(id) => {
            let p = db.person(*id).ok_or_else(|| Raise::no_match(format!("person {id} does not exist")))?;
            Ok(match field {
                "id" => Value::Int(*id as i64),
                "name" => Value::Text(p.name.clone()),
                "manager" => match p.manager_id {
                    Some(m) => Value::Person(m),
                    None => return Err(Raise::domain(format!("{} has no manager.", p.name))),
                },
                _ => return Err(unknown()),
            })
        }
        _ => Err(unknown()),
    }
}

fn constraints(args: &Args) -> Result<Vec<&ConstraintValue>, Raise> {
    args.variadic()
        .into_iter()
        .map(|v| match v {
            Value::Constraint(c) => Ok(c),
            other => Err(Raise::type_mismatch(format!("expected a constraint, got {}", other.type_tag()))),
        })
        .collect()
}

/// Tag shared by all variadic arguments, of which there must be one or more.
fn common_variadic(t: &TypeCtx, what: &str) -> Result<TypeTag, String> {
    let mut tags = t.variadic_tags();
    let first = tags.next().ok_or_else(|| format!("needs at least one {what}"))?;
    match tags.find(|x| *x != first) {
        Some(other) => Err(format!("cannot combine {first} with {other}")),
        None => Ok(first.clone()),
    }
}

fn combined_constraint(t: &TypeCtx) -> Result<TypeTag, String> {
    common_variadic(t, "constraint")
}

fn last_tag(t: &TypeCtx) -> Result<TypeTag, String> {
    t.variadic_tags().last().cloned().ok_or_else(|| "needs at least one argument".into())
}

fn set_tag(t: &TypeCtx) -> Result<TypeTag, String> {
    common_variadic(t, "element").map(TypeTag::set_of)
}

fn inner_of(t: &TypeCtx, param: &str) -> Result<TypeTag, String> {
    match t.tag(param) {
        Some(TypeTag::Constraint(inner)) | Some(TypeTag::SetOf(inner)) => Ok((**inner).clone()),
        other => Err(format!("cannot take the element type of {other:?}")),
    }
}

fn imp_and(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    and(&constraints(args)?).map(Value::Constraint)
}

fn imp_or(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    or(&constraints(args)?).map(Value::Constraint)
}

fn imp_not(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let c = args.constraint("c")?.expect("required");
    Ok(Value::Constraint(not(c)))
}

fn imp_singleton(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    match args.value("set")? {
        Value::Set { elem, items } => singleton(elem, items),
        other => Err(Raise::type_mismatch(format!("singleton needs a set, got {}", other.type_tag()))),
    }
}

fn imp_get_attr(env: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let field = args.text("field")?.expect("required");
    get_attr(args.value("obj")?, field, env.db())
}

fn imp_refer(env: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let c = args.constraint("c")?.expect("required").clone();
    let turn = env.ctx.nodes[&env.node].turn_index;
    let opts = env.ctx.refer;
    let hit = refer_node(&c, env.ctx, opts, turn)?;
    env.point_to(hit);
    Ok(env.ctx.nodes[&hit].result.clone().expect("refer only returns evaluated nodes"))
}

fn imp_type_constraint(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let name = args.text("type")?.expect("required");
    let tag = TypeTag::parse(name).ok_or_else(|| Raise::domain(format!("unknown type '{name}'")))?;
    Ok(Value::Constraint(ConstraintValue::any(tag)))
}

fn imp_do(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    args.variadic().last().map(|v| (*v).clone()).ok_or_else(|| Raise::type_mismatch("do needs an argument"))
}

fn imp_set_of(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let items: Vec<Value> = args.variadic().into_iter().cloned().collect();
    let elem = items.first().map(Value::type_tag).ok_or_else(|| Raise::type_mismatch("set_of needs an element"))?;
    Ok(Value::Set { elem, items })
}

pub(crate) fn register(r: &mut FunctionRegistry) {
    r.register(FunctionSpec::new("AND", imp_and).variadic(ParamType::AnyConstraint).returns_with(combined_constraint));
    r.register(FunctionSpec::new("OR", imp_or).variadic(ParamType::AnyConstraint).returns_with(combined_constraint));
    r.register(FunctionSpec::new("NOT", imp_not).param("c", ParamType::AnyConstraint).returns_with(|t| {
        Ok(t.tag("c").cloned().expect("required"))
    }));
    r.register(
        FunctionSpec::new("singleton", imp_singleton)
            .param("set", ParamType::AnySet)
            .returns_with(|t| inner_of(t, "set")),
    );
    r.register(
        FunctionSpec::new("get_attr", imp_get_attr)
            .param("obj", ParamType::Any)
            .exact("field", TypeTag::Text)
            .returns_with(|t| {
                let obj = t.tag("obj").expect("required");
                match t.literal("field") {
                    Some(Value::Text(f)) => attr_type(obj, f).ok_or_else(|| format!("{obj} has no field '{f}'")),
                    _ => Err("the field name must be a literal".into()),
                }
            }),
    );
    r.register(
        FunctionSpec::new("refer", imp_refer)
            .param("c", ParamType::AnyConstraint)
            .effect(Effect::Lookup)
            .returns_with(|t| inner_of(t, "c")),
    );
    r.register(
        FunctionSpec::new("type_constraint", imp_type_constraint)
            .exact("type", TypeTag::Text)
            .returns_with(|t| match t.literal("type") {
                Some(Value::Text(name)) => {
                    TypeTag::parse(name).map(TypeTag::constraint).ok_or_else(|| format!("unknown type '{name}'"))
                }
                _ => Err("the type name must be a literal".into()),
            }),
    );
    r.register(FunctionSpec::new("do", imp_do).variadic(ParamType::Any).returns_with(last_tag));
    r.register(FunctionSpec::new("set_of", imp_set_of).variadic(ParamType::Any).returns_with(set_tag));
}
