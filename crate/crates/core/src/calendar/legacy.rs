//! Functions of the original annotation vocabulary, so unsimplified
//! annotations run against the same database.

use crate::exec::{and, or, Args, CallEnv, Effect, FunctionRegistry, FunctionSpec, ParamType, Raise, TypeCtx};
use crate::value::{ConstraintValue, Leaf, Predicate, TypeTag, Value};

use super::functions::{
    apply_explicit, create_commit, create_preflight, create_request, delete_commit, delete_preflight, find_events,
    time_of_day,
};

fn same_as(param: &'static str) -> fn(&TypeCtx) -> Result<TypeTag, String> {
    match param {
        "output" => |t| Ok(t.tag("output").cloned().expect("required")),
        "intension" => |t| Ok(t.tag("intension").cloned().expect("required")),
        "constraint" => |t| Ok(t.tag("constraint").cloned().expect("required")),
        _ => unreachable!("no pass-through for {param}"),
    }
}

fn pass(param: &'static str) -> fn(&mut CallEnv, &Args) -> Result<Value, Raise> {
    match param {
        "output" => |_, a| a.value("output").cloned(),
        "intension" => |_, a| a.value("intension").cloned(),
        "constraint" => |_, a| a.value("constraint").cloned(),
        "response" => |_, a| a.value("response").cloned(),
        "name" => |_, a| a.value("name").cloned(),
        _ => unreachable!("no pass-through for {param}"),
    }
}

/// Re-targets an equality constraint on a field value at events.
fn field_constraint(c: &ConstraintValue, leaf: fn(&Value) -> Option<Leaf>) -> Result<Value, Raise> {
    fn convert(p: &Predicate, leaf: fn(&Value) -> Option<Leaf>) -> Result<Predicate, Raise> {
        Ok(match p {
            Predicate::True => Predicate::True,
            Predicate::Leaf(Leaf::Equals(v)) => Predicate::Leaf(
                leaf(v).ok_or_else(|| Raise::type_mismatch(format!("cannot compare this field with {}", v.type_tag())))?,
            ),
            Predicate::Leaf(l @ Leaf::HasAttendee(_)) => Predicate::Leaf(l.clone()),
            Predicate::Leaf(_) => return Err(Raise::domain("unsupported field constraint")),
            Predicate::And(ps) => Predicate::And(ps.iter().map(|p| convert(p, leaf)).collect::<Result<_, _>>()?),
            Predicate::Or(ps) => Predicate::Or(ps.iter().map(|p| convert(p, leaf)).collect::<Result<_, _>>()?),
            Predicate::Not(p) => Predicate::Not(Box::new(convert(p, leaf)?)),
        })
    }
    Ok(Value::Constraint(ConstraintValue::new(TypeTag::Event, convert(&c.pred, leaf)?)))
}

fn constraint_arg<'a>(args: &'a Args, name: &str) -> Result<&'a ConstraintValue, Raise> {
    args.constraint(name)?.ok_or_else(|| Raise::type_mismatch(format!("missing input '{name}'")))
}

fn imp_recipient_with_name_like(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let base = constraint_arg(args, "constraint")?;
    let name = args.text("name")?.expect("required");
    and(&[base, &ConstraintValue::leaf(Leaf::NameIs(name.to_string()))]).map(Value::Constraint)
}

fn imp_empty_recipient(_: &mut CallEnv, _: &Args) -> Result<Value, Raise> {
    Ok(Value::Constraint(ConstraintValue::any(TypeTag::Recipient)))
}

fn imp_empty_event(_: &mut CallEnv, _: &Args) -> Result<Value, Raise> {
    Ok(Value::Constraint(ConstraintValue::any(TypeTag::Event)))
}

fn imp_delete_preflight(env: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let id = args.int("id")?.expect("required");
    delete_preflight(env.db(), id).map(|_| Value::Int(id))
}

fn imp_delete_commit(env: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let id = delete_preflight(env.db(), args.int("id")?.expect("required"))?;
    delete_commit(env, id)
}

/// Validates completeness and folds explicit arguments into the constraint.
fn imp_create_preflight(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let mut req = create_request(Some(constraint_arg(args, "constraint")?))?;
    apply_explicit(&mut req, args)?;
    create_preflight(&req)?;
    let mut leaves = vec![
        Predicate::Leaf(Leaf::SubjectIs(req.subject.expect("checked"))),
        Predicate::Leaf(Leaf::StartsAt(req.start.expect("checked"))),
    ];
    leaves.extend(req.attendees.iter().map(|p| Predicate::Leaf(Leaf::HasAttendee(*p))));
    Ok(Value::Constraint(ConstraintValue::new(TypeTag::Event, Predicate::And(leaves))))
}

fn imp_create_commit(env: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let req = create_request(Some(constraint_arg(args, "constraint")?))?;
    create_commit(env, &req)
}

fn imp_find_wrapper(env: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    Ok(find_events(env.db(), constraint_arg(args, "constraint")?))
}

fn imp_event_on_date(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let date = args.date("date")?.expect("required");
    let event = constraint_arg(args, "event")?;
    and(&[&ConstraintValue::leaf(Leaf::StartsOn(date)), event]).map(Value::Constraint)
}

fn imp_attendee_list_has(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let p = args.person("recipient")?.expect("required");
    Ok(Value::Constraint(ConstraintValue::new(
        TypeTag::set_of(TypeTag::Recipient),
        Predicate::Leaf(Leaf::HasAttendee(p)),
    )))
}

fn imp_attendees_field(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    field_constraint(constraint_arg(args, "constraint")?, |_| None)
}

fn imp_subject_field(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    field_constraint(constraint_arg(args, "constraint")?, |v| match v {
        Value::Text(s) => Some(Leaf::SubjectIs(s.clone())),
        _ => None,
    })
}

fn imp_start_field(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    field_constraint(constraint_arg(args, "constraint")?, |v| match v {
        Value::DateTime(t) => Some(Leaf::StartsAt(*t)),
        _ => None,
    })
}

fn imp_equal_to(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    Ok(Value::Constraint(ConstraintValue::leaf(Leaf::Equals(Box::new(args.value("value")?.clone())))))
}

fn imp_date_at_time(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let date = args.date("date")?.expect("required");
    match args.value("time")? {
        Value::Time(t) => Ok(Value::DateTime(date.and_time(*t))),
        other => Err(Raise::type_mismatch(format!("expected a time, got {}", other.type_tag()))),
    }
}

fn number_time(args: &Args, pm: bool) -> Result<Value, Raise> {
    let n = args.int("number")?.expect("required");
    time_of_day(n, pm).map(Value::Time)
}

fn imp_and_constraint(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    and(&[constraint_arg(args, "c1")?, constraint_arg(args, "c2")?]).map(Value::Constraint)
}

fn imp_or_constraint(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    or(&[constraint_arg(args, "c1")?, constraint_arg(args, "c2")?]).map(Value::Constraint)
}

fn pair_constraint(t: &TypeCtx) -> Result<TypeTag, String> {
    let (a, b) = (t.tag("c1").expect("required"), t.tag("c2").expect("required"));
    if a == b {
        Ok(a.clone())
    } else {
        Err(format!("cannot combine {a} with {b}"))
    }
}

pub(crate) fn register_legacy(r: &mut FunctionRegistry) {
    use TypeTag::*;
    let ev = || TypeTag::constraint(Event);

    r.register(FunctionSpec::new("Yield", pass("output")).param("output", ParamType::Any).returns_with(same_as("output")));
    r.register(
        FunctionSpec::new("Execute", pass("intension")).param("intension", ParamType::Any).returns_with(same_as("intension")),
    );
    r.register(
        FunctionSpec::new("extensionConstraint", pass("constraint"))
            .param("constraint", ParamType::AnyConstraint)
            .returns_with(same_as("constraint")),
    );
    r.register(
        FunctionSpec::new("RecipientWithNameLike", imp_recipient_with_name_like)
            .exact("constraint", TypeTag::constraint(Recipient))
            .exact("name", Text)
            .returns(|| TypeTag::constraint(Recipient)),
    );
    r.register(FunctionSpec::new("EmptyStructConstraint", imp_empty_recipient).returns(|| TypeTag::constraint(Recipient)));
    r.register(FunctionSpec::new("EventConstraint", imp_empty_event).returns(|| TypeTag::constraint(Event)));
    r.register(FunctionSpec::new("PersonName.apply", pass("name")).exact("name", Text).returns(|| Text));

    r.register(FunctionSpec::new("DeletePreflightEventWrapper", imp_delete_preflight).exact("id", Int).returns(|| Int));
    r.register(
        FunctionSpec::new("DeleteCommitEventWrapper", imp_delete_commit)
            .exact("id", Int)
            .returns(|| Unit)
            .effect(Effect::Write),
    );
    r.register(
        FunctionSpec::new("CreatePreflightEventWrapper", imp_create_preflight)
            .exact("constraint", ev())
            .optional("subject", ParamType::Exact(Text))
            .optional("start", ParamType::Exact(DateTime))
            .returns(|| TypeTag::constraint(Event)),
    );
    r.register(
        FunctionSpec::new("CreateCommitEventWrapper", imp_create_commit)
            .exact("constraint", ev())
            .returns(|| Event)
            .effect(Effect::Write),
    );

    r.register(
        FunctionSpec::new("QueryEventResponse.results", pass("response"))
            .exact("response", TypeTag::set_of(Event))
            .returns(|| TypeTag::set_of(Event)),
    );
    r.register(
        FunctionSpec::new("FindEventWrapperWithDefaults", imp_find_wrapper)
            .exact("constraint", ev())
            .returns(|| TypeTag::set_of(Event))
            .effect(Effect::Lookup),
    );
    r.register(
        FunctionSpec::new("EventOnDate", imp_event_on_date).exact("date", Date).exact("event", ev()).returns(ev),
    );
    r.register(
        FunctionSpec::new("AttendeeListHasRecipient", imp_attendee_list_has)
            .exact("recipient", Recipient)
            .returns(|| TypeTag::constraint(TypeTag::set_of(Recipient))),
    );
    r.register(
        FunctionSpec::new("Event.attendees_", imp_attendees_field)
            .exact("constraint", TypeTag::constraint(TypeTag::set_of(Recipient)))
            .returns(ev),
    );
    r.register(
        FunctionSpec::new("Event.subject_", imp_subject_field).exact("constraint", TypeTag::constraint(Text)).returns(ev),
    );
    r.register(
        FunctionSpec::new("Event.start_", imp_start_field).exact("constraint", TypeTag::constraint(DateTime)).returns(ev),
    );
    r.register(
        FunctionSpec::new("EqualTo", imp_equal_to)
            .param("value", ParamType::Any)
            .returns_with(|t| Ok(TypeTag::constraint(t.tag("value").cloned().expect("required")))),
    );
    r.register(
        FunctionSpec::new("DateAtTimeWithDefaults", imp_date_at_time).exact("date", Date).exact("time", Time).returns(|| DateTime),
    );
    r.register(FunctionSpec::new("NumberAM", |_, a| number_time(a, false)).exact("number", Int).returns(|| Time));
    r.register(FunctionSpec::new("NumberPM", |_, a| number_time(a, true)).exact("number", Int).returns(|| Time));
    r.register(
        FunctionSpec::new("andConstraint", imp_and_constraint)
            .param("c1", ParamType::AnyConstraint)
            .param("c2", ParamType::AnyConstraint)
            .returns_with(pair_constraint),
    );
    r.register(
        FunctionSpec::new("orConstraint", imp_or_constraint)
            .param("c1", ParamType::AnyConstraint)
            .param("c2", ParamType::AnyConstraint)
            .returns_with(pair_constraint),
    );
}
