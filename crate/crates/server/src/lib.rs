//! The root service: sessions that turn client messages into engine calls
//! and stream rendered results back, over WebSocket or one-shot HTTP.

pub mod http;
pub mod protocol;
pub mod render;
pub mod session;

pub use http::{serve, ServerHandle};
pub use protocol::{ClientMessage, Envelope, ServerMessage, PROTOCOL_VERSION};
pub use render::{render_payload, Payload};
pub use session::{Service, Session};
