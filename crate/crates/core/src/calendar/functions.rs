use std::collections::BTreeSet;

use chrono::{Days, NaiveDateTime, NaiveTime, TimeDelta};

use crate::exec::{Args, CallEnv, Effect, FunctionRegistry, FunctionSpec, ParamType, Raise};
use crate::value::{ConstraintValue, EntityId, Leaf, Predicate, TypeTag, Value};

use super::StubDb;

pub(super) fn find_person(db: &StubDb, name: &str) -> Result<Value, Raise> {
    match db.persons_named(name).as_slice() {
        [p] => Ok(Value::Person(p.id)),
        [] => Err(Raise::no_match(format!("I couldn't find anyone named {name}."))),
        many => Err(Raise::multiple(format!("I know {} people named {name}. Which one do you mean?", many.len()))),
    }
}

pub(super) fn manager_of(db: &StubDb, person: EntityId) -> Result<Value, Raise> {
    let p = db.person(person).ok_or_else(|| Raise::no_match(format!("person {person} does not exist")))?;
    p.manager_id.map(Value::Person).ok_or_else(|| Raise::domain(format!("{} has no manager.", p.name)))
}

pub(super) fn find_events(db: &StubDb, c: &ConstraintValue) -> Value {
    Value::Set { elem: TypeTag::Event, items: db.query(&TypeTag::Event, &c.pred) }
}

pub(super) fn delete_preflight(db: &StubDb, id: i64) -> Result<EntityId, Raise> {
    u64::try_from(id)
        .ok()
        .filter(|id| db.event(*id).is_some())
        .ok_or_else(|| Raise::no_match(format!("There is no event with id {id}.")))
}

pub(super) fn delete_commit(env: &mut CallEnv, id: EntityId) -> Result<Value, Raise> {
    let event = env.db_mut().delete_event(id).map_err(|e| Raise::no_match(e.to_string()))?;
    env.say(format!("I deleted \"{}\".", event.subject));
    Ok(Value::Unit)
}

/// Event fields gathered from a constraint and explicit arguments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CreateRequest {
    pub subject: Option<String>,
    pub start: Option<NaiveDateTime>,
    pub end: Option<NaiveDateTime>,
    pub attendees: BTreeSet<EntityId>,
}

/// Reads event fields out of a conjunction of leaf constraints.
pub fn create_request(c: Option<&ConstraintValue>) -> Result<CreateRequest, Raise> {
    fn walk(p: &Predicate, req: &mut CreateRequest) -> Result<(), Raise> {
        match p {
            Predicate::True => Ok(()),
            Predicate::And(ps) => ps.iter().try_for_each(|p| walk(p, req)),
            Predicate::Leaf(Leaf::SubjectIs(s)) => {
                req.subject = Some(s.clone());
                Ok(())
            }
            Predicate::Leaf(Leaf::StartsAt(t)) => {
                req.start = Some(*t);
                Ok(())
            }
            Predicate::Leaf(Leaf::HasAttendee(p)) => {
                req.attendees.insert(*p);
                Ok(())
            }
            Predicate::Leaf(Leaf::StartsOn(_)) => Ok(()),
            other => Err(Raise::domain(format!("I can't create an event described as {other}."))),
        }
    }
    let mut req = CreateRequest::default();
    if let Some(c) = c {
        if c.target != TypeTag::Event {
            return Err(Raise::type_mismatch(format!("expected an event description, got {}", c.target)));
        }
        walk(&c.pred, &mut req)?;
    }
    Ok(req)
}

/// Overrides constraint fields with explicit `subject`, `start`, `end` and
/// `attendees` arguments where given.
pub(super) fn apply_explicit(req: &mut CreateRequest, args: &Args) -> Result<(), Raise> {
    if let Some(s) = args.text("subject")? {
        req.subject = Some(s.to_string());
    }
    if let Some(t) = args.datetime("start")? {
        req.start = Some(t);
    }
    if let Some(t) = args.datetime("end")? {
        req.end = Some(t);
    }
    if let Some(items) = args.set("attendees")? {
        for v in items {
            match v {
                Value::Person(p) => {
                    req.attendees.insert(*p);
                }
                other => return Err(Raise::type_mismatch(format!("attendee should be a person, got {}", other.type_tag()))),
            }
        }
    }
    Ok(())
}

/// Completeness and interval checks before anything is written.
pub(super) fn create_preflight(req: &CreateRequest) -> Result<(String, NaiveDateTime, NaiveDateTime), Raise> {
    let subject = req
        .subject
        .clone()
        .ok_or_else(|| Raise::missing("subject", TypeTag::Text, "What should the event be called?"))?;
    let start = req
        .start
        .ok_or_else(|| Raise::missing("start", TypeTag::DateTime, "When should the event start?"))?;
    let end = req.end.unwrap_or(start + TimeDelta::hours(1));
    if start >= end {
        return Err(Raise::domain("The event has to start before it ends."));
    }
    Ok((subject, start, end))
}

pub(super) fn create_commit(env: &mut CallEnv, req: &CreateRequest) -> Result<Value, Raise> {
    let (subject, start, end) = create_preflight(req)?;
    let id = env
        .db_mut()
        .insert_event(subject.clone(), start, end, req.attendees.clone())
        .map_err(|e| Raise::domain(e.to_string()))?;
    env.say(format!("I created \"{subject}\" at {}.", start.format("%Y-%m-%d %H:%M")));
    Ok(Value::Event(id))
}

fn hour_minute(hour: i64, minute: i64, pm: bool) -> Result<NaiveTime, Raise> {
    let hour = if pm && hour < 12 { hour + 12 } else { hour };
    u32::try_from(hour)
        .ok()
        .zip(u32::try_from(minute).ok())
        .and_then(|(h, m)| NaiveTime::from_hms_opt(h, m, 0))
        .ok_or_else(|| Raise::domain(format!("{hour}:{minute:02} is not a time of day.")))
}

pub(super) fn time_of_day(hour: i64, pm: bool) -> Result<NaiveTime, Raise> {
    hour_minute(hour, 0, pm)
}

fn imp_today(env: &mut CallEnv, _: &Args) -> Result<Value, Raise> {
    Ok(Value::Date(env.clock().date()))
}

fn imp_tomorrow(env: &mut CallEnv, _: &Args) -> Result<Value, Raise> {
    Ok(Value::Date(env.clock().date() + Days::new(1)))
}

fn imp_next_week(env: &mut CallEnv, _: &Args) -> Result<Value, Raise> {
    Ok(Value::Date(env.clock().date() + Days::new(7)))
}

fn imp_add_days(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let date = args.date("date")?.expect("required");
    let days = args.int("days")?.expect("required");
    date.checked_add_signed(TimeDelta::days(days))
        .map(Value::Date)
        .ok_or_else(|| Raise::domain("That date is out of range."))
}

fn imp_at(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let date = args.date("date")?.expect("required");
    let hour = args.int("hour")?.expect("required");
    let minute = args.int("minute")?.unwrap_or(0);
    let pm = args.boolean("pm")?.unwrap_or(false);
    Ok(Value::DateTime(date.and_time(hour_minute(hour, minute, pm)?)))
}

fn imp_find_person(env: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    find_person(env.db(), args.text("name")?.expect("required"))
}

fn imp_find_manager(env: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    manager_of(env.db(), args.person("person")?.expect("required"))
}

fn imp_find_events(env: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    Ok(find_events(env.db(), args.constraint("constraint")?.expect("required")))
}

fn imp_with_attendee(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    Ok(Value::Constraint(ConstraintValue::leaf(Leaf::HasAttendee(args.person("person")?.expect("required")))))
}

fn imp_starts_at(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    Ok(Value::Constraint(ConstraintValue::leaf(Leaf::StartsOn(args.date("date")?.expect("required")))))
}

fn imp_starts_at_time(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    Ok(Value::Constraint(ConstraintValue::leaf(Leaf::StartsAt(args.datetime("time")?.expect("required")))))
}

fn imp_with_subject(_: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let s = args.text("subject")?.expect("required");
    Ok(Value::Constraint(ConstraintValue::leaf(Leaf::SubjectIs(s.to_string()))))
}

fn imp_delete_event(env: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let id = delete_preflight(env.db(), args.int("target")?.expect("required"))?;
    delete_commit(env, id)
}

fn imp_create_event(env: &mut CallEnv, args: &Args) -> Result<Value, Raise> {
    let mut req = create_request(args.constraint("spec")?)?;
    apply_explicit(&mut req, args)?;
    create_commit(env, &req)
}

fn project(field: &'static str) -> fn(&mut CallEnv, &Args) -> Result<Value, Raise> {
    match field {
        "id" => |env, args| crate::exec::get_attr(args.value("obj")?, "id", env.db()),
        "subject" => |env, args| crate::exec::get_attr(args.value("obj")?, "subject", env.db()),
        "start" => |env, args| crate::exec::get_attr(args.value("obj")?, "start", env.db()),
        "name" => |env, args| crate::exec::get_attr(args.value("obj")?, "name", env.db()),
        _ => unreachable!("no projection for {field}"),
    }
}

pub(crate) fn register(r: &mut FunctionRegistry) {
    use TypeTag::*;
    let event_constraint = || TypeTag::constraint(Event);

    r.register(FunctionSpec::new("Today", imp_today).returns(|| Date));
    r.register(FunctionSpec::new("Tomorrow", imp_tomorrow).returns(|| Date));
    r.register(FunctionSpec::new("NextWeek", imp_next_week).returns(|| Date));
    r.register(FunctionSpec::new("add_days", imp_add_days).exact("date", Date).exact("days", Int).returns(|| Date));
    r.register(
        FunctionSpec::new("at", imp_at)
            .exact("date", Date)
            .exact("hour", Int)
            .optional("minute", ParamType::Exact(Int))
            .optional("pm", ParamType::Exact(Bool))
            .returns(|| DateTime),
    );

    r.register(
        FunctionSpec::new("FindPerson", imp_find_person).exact("name", Text).returns(|| Recipient).effect(Effect::Lookup),
    );
    r.register(
        FunctionSpec::new("FindManager", imp_find_manager)
            .exact("person", Recipient)
            .returns(|| Recipient)
            .effect(Effect::Lookup)
            .coerce("person", Text, &["FindPerson"]),
    );
    r.register(
        FunctionSpec::new("FindEvents", imp_find_events)
            .exact("constraint", event_constraint())
            .returns(|| TypeTag::set_of(Event))
            .effect(Effect::Lookup),
    );

    r.register(
        FunctionSpec::new("with_attendee", imp_with_attendee)
            .exact("person", Recipient)
            .returns(|| TypeTag::constraint(Event))
            .coerce("person", Text, &["FindPerson"]),
    );
    r.register(FunctionSpec::new("starts_at", imp_starts_at).exact("date", Date).returns(|| TypeTag::constraint(Event)));
    r.register(
        FunctionSpec::new("starts_at_time", imp_starts_at_time)
            .exact("time", DateTime)
            .returns(|| TypeTag::constraint(Event)),
    );
    r.register(
        FunctionSpec::new("with_subject", imp_with_subject).exact("subject", Text).returns(|| TypeTag::constraint(Event)),
    );

    r.register(
        FunctionSpec::new("DeleteEvent", imp_delete_event)
            .exact("target", Int)
            .returns(|| Unit)
            .effect(Effect::Write)
            .coerce("target", Event, &["Event.id"])
            .coerce("target", TypeTag::set_of(Event), &["singleton", "Event.id"])
            .coerce("target", event_constraint(), &["FindEvents", "singleton", "Event.id"]),
    );
    r.register(
        FunctionSpec::new("CreateEvent", imp_create_event)
            .optional("spec", ParamType::Exact(event_constraint()))
            .optional("subject", ParamType::Exact(Text))
            .optional("start", ParamType::Exact(DateTime))
            .optional("end", ParamType::Exact(DateTime))
            .optional("attendees", ParamType::Exact(TypeTag::set_of(Recipient)))
            .returns(|| Event)
            .effect(Effect::Write)
            .coerce("attendees", Recipient, &["set_of"]),
    );

    r.register(FunctionSpec::new("Event.id", project("id")).exact("obj", Event).returns(|| Int));
    r.register(FunctionSpec::new("Event.subject", project("subject")).exact("obj", Event).returns(|| Text));
    r.register(FunctionSpec::new("Event.start", project("start")).exact("obj", Event).returns(|| DateTime));
    r.register(FunctionSpec::new("Person.name", project("name")).exact("obj", Recipient).returns(|| Text));
}
