//! Matching activity graphs against streams of operator intervals.

mod engine;
mod event;
mod plan;
mod reference;

pub use engine::{
    Engine, EngineConfig, EngineStats, MatchContext, Mode, Scope, DEFAULT_EXPIRE_S,
    DEFAULT_INSTANCE_CAP,
};
pub use event::{parse_event_line, sort_events, ActivityEvent, Atom, Entity, Operand, ParsedEvent};
pub use plan::{Partial, Plan};
pub use reference::reference_match;
