//! Calendar domain: the stub database and the functions that use it, in
//! the simplified vocabulary and in the original annotation vocabulary.

mod db;
mod functions;
mod legacy;

pub use db::{DbError, Event, FixtureError, Person, StubDb};
pub use functions::{create_request, CreateRequest};

pub(crate) use functions::register;
pub(crate) use legacy::register_legacy;
