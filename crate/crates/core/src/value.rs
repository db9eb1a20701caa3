//! Runtime values, type tags and constraint predicates.

use std::fmt;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::calendar::StubDb;

pub type EntityId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeTag {
    Event,
    Recipient,
    Date,
    Time,
    DateTime,
    Text,
    Int,
    Decimal,
    Bool,
    Constraint(Box<TypeTag>),
    SetOf(Box<TypeTag>),
    Unit,
}

impl TypeTag {
    pub fn constraint(inner: TypeTag) -> TypeTag {
        TypeTag::Constraint(Box::new(inner))
    }

    pub fn set_of(inner: TypeTag) -> TypeTag {
        TypeTag::SetOf(Box::new(inner))
    }

    pub fn parse(s: &str) -> Option<TypeTag> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("Constraint(").and_then(|r| r.strip_suffix(')')) {
            return TypeTag::parse(inner).map(TypeTag::constraint);
        }
        if let Some(inner) = s.strip_prefix("SetOf(").and_then(|r| r.strip_suffix(')')) {
            return TypeTag::parse(inner).map(TypeTag::set_of);
        }
        Some(match s {
            "Event" => TypeTag::Event,
            "Recipient" | "Person" => TypeTag::Recipient,
            "Date" => TypeTag::Date,
            "Time" => TypeTag::Time,
            "DateTime" => TypeTag::DateTime,
            "Text" => TypeTag::Text,
            "Int" => TypeTag::Int,
            "Decimal" => TypeTag::Decimal,
            "Bool" => TypeTag::Bool,
            "Unit" => TypeTag::Unit,
            _ => return None,
        })
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeTag::Constraint(t) => write!(f, "Constraint({t})"),
            TypeTag::SetOf(t) => write!(f, "SetOf({t})"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i64),
    Decimal(f64),
    Text(String),
    Date(NaiveDate),
    Time(NaiveTime),
    DateTime(NaiveDateTime),
    Event(EntityId),
    Person(EntityId),
    Set { elem: TypeTag, items: Vec<Value> },
    Constraint(ConstraintValue),
}

impl Value {
    pub fn type_tag(&self) -> TypeTag {
        match self {
            Value::Unit => TypeTag::Unit,
            Value::Bool(_) => TypeTag::Bool,
            Value::Int(_) => TypeTag::Int,
            Value::Decimal(_) => TypeTag::Decimal,
            Value::Text(_) => TypeTag::Text,
            Value::Date(_) => TypeTag::Date,
            Value::Time(_) => TypeTag::Time,
            Value::DateTime(_) => TypeTag::DateTime,
            Value::Event(_) => TypeTag::Event,
            Value::Person(_) => TypeTag::Recipient,
            Value::Set { elem, .. } => TypeTag::set_of(elem.clone()),
            Value::Constraint(c) => TypeTag::constraint(c.target.clone()),
        }
    }

    /// Equality where constraints compare by extension over the objects in `db`.
    pub fn equivalent(&self, other: &Value, db: &StubDb) -> bool {
        match (self, other) {
            (Value::Constraint(a), Value::Constraint(b)) => a.equivalent(b, db),
            (Value::Set { elem: ea, items: a }, Value::Set { elem: eb, items: b }) => {
                ea == eb && a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.equivalent(y, db))
            }
            _ => self == other,
        }
    }

    /// Short human-readable rendering used in messages and graph labels.
    pub fn render(&self, db: &StubDb) -> String {
        match self {
            Value::Unit => "()".into(),
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::Decimal(d) => format!("{d:?}"),
            Value::Text(s) => format!("{s:?}"),
            Value::Date(d) => d.to_string(),
            Value::Time(t) => t.format("%H:%M").to_string(),
            Value::DateTime(t) => t.format("%Y-%m-%dT%H:%M").to_string(),
            Value::Event(id) => match db.event(*id) {
                Some(e) => format!("Event#{id} {:?}", e.subject),
                None => format!("Event#{id}"),
            },
            Value::Person(id) => match db.person(*id) {
                Some(p) => format!("Person#{id} {}", p.name),
                None => format!("Person#{id}"),
            },
            Value::Set { items, .. } => {
                let inner: Vec<String> = items.iter().map(|v| v.render(db)).collect();
                format!("{{{}}}", inner.join(", "))
            }
            Value::Constraint(c) => format!("Constraint({}): {}", c.target, c.pred),
        }
    }
}

/// A predicate over objects of one type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintValue {
    pub target: TypeTag,
    pub pred: Predicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    True,
    Leaf(Leaf),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Leaf {
    /// Event starts on this date.
    StartsOn(NaiveDate),
    /// Event starts at exactly this instant.
    StartsAt(NaiveDateTime),
    HasAttendee(EntityId),
    /// Case-insensitive subject match.
    SubjectIs(String),
    EventId(EntityId),
    /// Case-insensitive person name match.
    NameIs(String),
    PersonId(EntityId),
    /// Matches scalar values equal to this one.
    Equals(Box<Value>),
}

impl Leaf {
    pub fn target(&self) -> Option<TypeTag> {
        match self {
            Leaf::StartsOn(_) | Leaf::StartsAt(_) | Leaf::HasAttendee(_) | Leaf::SubjectIs(_) | Leaf::EventId(_) => {
                Some(TypeTag::Event)
            }
            Leaf::NameIs(_) | Leaf::PersonId(_) => Some(TypeTag::Recipient),
            Leaf::Equals(v) => Some(v.type_tag()),
        }
    }

    fn holds(&self, obj: &Value, db: &StubDb) -> bool {
        match (self, obj) {
            (Leaf::Equals(v), o) => **v == *o,
            (Leaf::EventId(id), Value::Event(e)) => id == e,
            (Leaf::PersonId(id), Value::Person(p)) => id == p,
            (Leaf::NameIs(n), Value::Person(p)) => db.person(*p).is_some_and(|p| p.name.eq_ignore_ascii_case(n)),
            (leaf, Value::Event(id)) => {
                let Some(e) = db.event(*id) else { return false };
                match leaf {
                    Leaf::StartsOn(d) => e.start.date() == *d,
                    Leaf::StartsAt(t) => e.start == *t,
                    Leaf::HasAttendee(p) => e.attendees.contains(p),
                    Leaf::SubjectIs(s) => e.subject.eq_ignore_ascii_case(s),
                    _ => false,
                }
            }
            _ => false,
        }
    }
}

impl Predicate {
    pub fn holds(&self, obj: &Value, db: &StubDb) -> bool {
        match self {
            Predicate::True => true,
            Predicate::Leaf(l) => l.holds(obj, db),
            Predicate::And(ps) => ps.iter().all(|p| p.holds(obj, db)),
            Predicate::Or(ps) => ps.iter().any(|p| p.holds(obj, db)),
            Predicate::Not(p) => !p.holds(obj, db),
        }
    }
}

impl ConstraintValue {
    pub fn new(target: TypeTag, pred: Predicate) -> Self {
        ConstraintValue { target, pred }
    }

    pub fn any(target: TypeTag) -> Self {
        ConstraintValue { target, pred: Predicate::True }
    }

    pub fn leaf(leaf: Leaf) -> Self {
        let target = leaf.target().expect("leaf has a target");
        ConstraintValue { target, pred: Predicate::Leaf(leaf) }
    }

    /// True when `obj` has the target type and satisfies the predicate.
    pub fn holds(&self, obj: &Value, db: &StubDb) -> bool {
        obj.type_tag() == self.target && self.pred.holds(obj, db)
    }

    /// Same target and the same verdict on every object of that type in `db`.
    pub fn equivalent(&self, other: &ConstraintValue, db: &StubDb) -> bool {
        self.target == other.target
            && db.objects_of(&self.target).iter().all(|o| self.pred.holds(o, db) == other.pred.holds(o, db))
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, op: &str, ps: &[Predicate]| {
            write!(f, "{op}(")?;
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{p}")?;
            }
            f.write_str(")")
        };
        match self {
            Predicate::True => f.write_str("true"),
            Predicate::Leaf(l) => match l {
                Leaf::StartsOn(d) => write!(f, "start.date={d}"),
                Leaf::StartsAt(t) => write!(f, "start={}", t.format("%Y-%m-%dT%H:%M")),
                Leaf::HasAttendee(p) => write!(f, "attendees∋#{p}"),
                Leaf::SubjectIs(s) => write!(f, "subject={s:?}"),
                Leaf::EventId(id) => write!(f, "id={id}"),
                Leaf::NameIs(n) => write!(f, "name={n:?}"),
                Leaf::PersonId(id) => write!(f, "id={id}"),
                Leaf::Equals(v) => write!(f, "={v:?}"),
            },
            Predicate::And(ps) => join(f, "AND", ps),
            Predicate::Or(ps) => join(f, "OR", ps),
            Predicate::Not(p) => write!(f, "NOT({p})"),
        }
    }
}
