//! Flexible-load scheduling for renewable energy communities.
//!
//! Members own PV, fixed loads and optional flexible devices (battery, EV, water
//! boiler, heat pump). The crate plans their day-ahead schedules either centrally,
//! as one linear program over the whole community, or through an iterative
//! coordination loop in which members only exchange capacity offers and activations
//! with the operator.

pub mod billing;
pub mod decentral;
pub mod devices;
pub mod kor;
pub mod lp;
pub mod planner;
pub mod reporting;
pub mod scenario;
pub mod verify;

pub use kor::Key;
pub use planner::{DaySchedule, PlannerMode};
pub use scenario::{load_scenario, Scenario};
