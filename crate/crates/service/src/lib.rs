//! Render service for the interactive viewer.
//!
//! HTTP: `GET /assets`, `POST /assets/{id}/load` (opens a session),
//! `POST /render` (one-shot). Socket: `/ws/session/{id}` takes JSON edit
//! messages and answers with acks, errors, and frames (a JSON `frame`
//! message followed by a binary PNG). Message schemas are in `PROTOCOL.md`.

pub mod schema;
pub mod server;
pub mod session;

pub use schema::SCHEMA_VERSION;
pub use server::{router, AppState, AssetRegistry};
pub use session::{EditError, Session};
