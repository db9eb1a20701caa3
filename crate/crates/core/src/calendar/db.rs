use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::value::{EntityId, Predicate, TypeTag, Value};

const BUNDLED_FIXTURE: &str = include_str!("../../assets/data/fixture.json");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Person {
    pub id: EntityId,
    pub name: String,
    pub manager_id: Option<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub id: EntityId,
    pub subject: String,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
    pub attendees: BTreeSet<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FixtureError {
    #[error("cannot read fixture: {0}")]
    Io(String),
    #[error("malformed fixture: {0}")]
    Parse(String),
    #[error("fixture violates integrity: {0}")]
    Integrity(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DbError {
    #[error("no event with id {0}")]
    NoSuchEvent(EntityId),
    #[error("no person with id {0}")]
    NoSuchPerson(EntityId),
    #[error("event must start before it ends")]
    InvalidInterval,
}

/// In-memory people and events. All mutation goes through
/// [`StubDb::insert_event`] and [`StubDb::delete_event`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubDb {
    persons: BTreeMap<EntityId, Person>,
    events: BTreeMap<EntityId, Event>,
    next_id: EntityId,
}

#[derive(Serialize, Deserialize)]
struct FixturePerson {
    id: EntityId,
    name: String,
    manager_id: Option<EntityId>,
}

#[derive(Serialize, Deserialize)]
struct FixtureEvent {
    id: EntityId,
    subject: String,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
    attendees: Vec<EntityId>,
}

#[derive(Serialize, Deserialize)]
struct FixtureDoc {
    persons: Vec<FixturePerson>,
    events: Vec<FixtureEvent>,
}

impl StubDb {
    /// The bundled six-person, five-event fixture.
    pub fn fixture() -> StubDb {
        StubDb::from_json(BUNDLED_FIXTURE).expect("bundled fixture is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<StubDb, FixtureError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| FixtureError::Io(format!("{}: {e}", path.display())))?;
        StubDb::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<StubDb, FixtureError> {
        let doc: FixtureDoc = serde_json::from_str(text).map_err(|e| FixtureError::Parse(e.to_string()))?;
        let mut persons = BTreeMap::new();
        for p in doc.persons {
            let id = p.id;
            if persons.insert(id, Person { id, name: p.name, manager_id: p.manager_id }).is_some() {
                return Err(FixtureError::Integrity(format!("duplicate person id {id}")));
            }
        }
        let mut events = BTreeMap::new();
        for e in doc.events {
            let id = e.id;
            let event = Event {
                id,
                subject: e.subject,
                start: e.start.naive_utc(),
                end: e.end.naive_utc(),
                attendees: e.attendees.into_iter().collect(),
            };
            if events.insert(id, event).is_some() {
                return Err(FixtureError::Integrity(format!("duplicate event id {id}")));
            }
        }
        let next_id = events.keys().last().map_or(1, |k| k + 1);
        let db = StubDb { persons, events, next_id };
        db.check_integrity().map_err(FixtureError::Integrity)?;
        Ok(db)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc = FixtureDoc {
            persons: self
                .persons
                .values()
                .map(|p| FixturePerson { id: p.id, name: p.name.clone(), manager_id: p.manager_id })
                .collect(),
            events: self
                .events
                .values()
                .map(|e| FixtureEvent {
                    id: e.id,
                    subject: e.subject.clone(),
                    start: e.start.and_utc(),
                    end: e.end.and_utc(),
                    attendees: e.attendees.iter().copied().collect(),
                })
                .collect(),
        };
        serde_json::to_value(doc).expect("fixture serializes")
    }

    /// Unknown references, managerial cycles or empty intervals.
    pub fn check_integrity(&self) -> Result<(), String> {
        for p in self.persons.values() {
            if let Some(m) = p.manager_id {
                if !self.persons.contains_key(&m) {
                    return Err(format!("person {} has unknown manager {m}", p.id));
                }
            }
            let mut seen = BTreeSet::from([p.id]);
            let mut cur = p.manager_id;
            while let Some(m) = cur {
                if !seen.insert(m) {
                    return Err(format!("managerial cycle through person {}", p.id));
                }
                cur = self.persons.get(&m).and_then(|q| q.manager_id);
            }
        }
        for e in self.events.values() {
            if e.start >= e.end {
                return Err(format!("event {} does not start before it ends", e.id));
            }
            if let Some(a) = e.attendees.iter().find(|a| !self.persons.contains_key(a)) {
                return Err(format!("event {} has unknown attendee {a}", e.id));
            }
        }
        Ok(())
    }

    pub fn person(&self, id: EntityId) -> Option<&Person> {
        self.persons.get(&id)
    }

    pub fn event(&self, id: EntityId) -> Option<&Event> {
        self.events.get(&id)
    }

    pub fn persons(&self) -> impl Iterator<Item = &Person> {
        self.persons.values()
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.events.values()
    }

    /// Case-insensitive exact name match.
    pub fn persons_named(&self, name: &str) -> Vec<&Person> {
        self.persons.values().filter(|p| p.name.eq_ignore_ascii_case(name)).collect()
    }

    /// Every object of an entity type, as values. Empty for scalar types.
    pub fn objects_of(&self, tag: &TypeTag) -> Vec<Value> {
        match tag {
            TypeTag::Event => self.events.keys().map(|id| Value::Event(*id)).collect(),
            TypeTag::Recipient => self.persons.keys().map(|id| Value::Person(*id)).collect(),
            _ => Vec::new(),
        }
    }

    /// Objects of `tag` satisfying `pred`, in id order.
    pub fn query(&self, tag: &TypeTag, pred: &Predicate) -> Vec<Value> {
        self.objects_of(tag).into_iter().filter(|o| pred.holds(o, self)).collect()
    }

    pub fn insert_event(
        &mut self,
        subject: String,
        start: NaiveDateTime,
        end: NaiveDateTime,
        attendees: BTreeSet<EntityId>,
    ) -> Result<EntityId, DbError> {
        if start >= end {
            return Err(DbError::InvalidInterval);
        }
        if let Some(a) = attendees.iter().find(|a| !self.persons.contains_key(a)) {
            return Err(DbError::NoSuchPerson(*a));
        }
        let id = self.next_id;
        self.next_id += 1;
        self.events.insert(id, Event { id, subject, start, end, attendees });
        Ok(id)
    }

    pub fn delete_event(&mut self, id: EntityId) -> Result<Event, DbError> {
        self.events.remove(&id).ok_or(DbError::NoSuchEvent(id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn at(d: u32, h: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2022, 1, d).unwrap().and_hms_opt(h, 0, 0).unwrap()
    }

    #[test]
    fn fixture_shape() {
        let db = StubDb::fixture();
        assert_eq!(db.persons().count(), 6);
        assert_eq!(db.events().count(), 5);
        let john = db.persons_named("john")[0];
        assert_eq!(db.person(john.manager_id.unwrap()).unwrap().name, "Dana");
        // Exactly one event on the day after the fixture clock includes Dana.
        let tomorrow = NaiveDate::from_ymd_opt(2022, 1, 2).unwrap();
        let hits: Vec<_> = db.events().filter(|e| e.start.date() == tomorrow && e.attendees.contains(&2)).collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].id, 3);
    }

    #[test]
    fn json_round_trip() {
        let db = StubDb::fixture();
        let again = StubDb::from_json(&db.to_json().to_string()).unwrap();
        assert_eq!(db, again);
    }

    #[test]
    fn integrity_violations_are_rejected() {
        let cyc = r#"{"persons":[{"id":1,"name":"A","manager_id":2},{"id":2,"name":"B","manager_id":1}],"events":[]}"#;
        assert!(matches!(StubDb::from_json(cyc), Err(FixtureError::Integrity(_))));
        let bad = r#"{"persons":[],"events":[{"id":1,"subject":"x","start":"2022-01-01T10:00:00Z","end":"2022-01-01T09:00:00Z","attendees":[]}]}"#;
        assert!(matches!(StubDb::from_json(bad), Err(FixtureError::Integrity(_))));
        assert!(matches!(StubDb::from_json("{"), Err(FixtureError::Parse(_))));
    }

    #[test]
    fn insert_and_delete() {
        let mut db = StubDb::fixture();
        let before = db.clone();
        assert_eq!(db.insert_event("x".into(), at(2, 12), at(2, 11), BTreeSet::new()), Err(DbError::InvalidInterval));
        assert_eq!(db.insert_event("x".into(), at(2, 12), at(2, 13), BTreeSet::from([99])), Err(DbError::NoSuchPerson(99)));
        assert_eq!(db, before);
        let id = db.insert_event("x".into(), at(2, 12), at(2, 13), BTreeSet::from([4])).unwrap();
        assert_eq!(id, 6);
        assert_eq!(db.delete_event(id).unwrap().subject, "x");
        assert_eq!(db.delete_event(id), Err(DbError::NoSuchEvent(id)));
        db.check_integrity().unwrap();
    }
}
