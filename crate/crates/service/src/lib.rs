//! Live control loop for a hoisim world over a WebSocket.
//!
//! Clients connect to `/ws`, send [`ControlMessage`]s as JSON text frames and
//! receive a [`StateMessage`] after every simulation step. Object display
//! meshes are served at `GET /meshes/<id>`.

pub mod protocol;
mod server;
mod sim;

pub use protocol::{ControlMessage, GraspLabel, MeshPayload, ServerMessage, StateMessage};
pub use server::{serve, spawn, RunningService, ServiceConfig, ServiceError, DEFAULT_PORT, DEFAULT_TICK_HZ};
pub use sim::{mesh_payloads, Simulation};
