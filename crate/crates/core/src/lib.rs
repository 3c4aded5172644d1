//! Multi-turn instruction-following evaluation: constraint verification,
//! seeded dialogue scripts, session driving and process-level metrics.

pub mod chat;
pub mod constraint;
pub mod metrics;
pub mod rng;
pub mod script;
pub mod session;
pub mod synthesis;
pub mod text;
