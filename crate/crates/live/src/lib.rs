//! Live mode: a human steers the evader against a pursuit policy through a
//! websocket.
//!
//! Wire protocol (JSON text messages, all carrying `"v": 1`):
//!
//! * server → client `{"v":1,"type":"frame","t":..,"agents":[{"x","y","psi"}..],"evader":{"x","y"},"d_cap":..,"q":..,"outcome":"running"|"captured"|"timeout"}`
//! * server → client `{"v":1,"type":"ack","seq":..,"stale":bool,"normalized":bool,"mode":"live"|"paused"|"replay"}`
//! * server → client `{"v":1,"type":"error","message":".."}`
//! * client → server `{"type":"move","dir":[x,y],"seq":n}`, `{"type":"pause"}`
//!   (toggles; `"paused":bool` sets it), `{"type":"reset","seed":n}`

pub mod server;
pub mod session;

pub use server::{spawn, ServerHandle};
pub use session::{replay_log, Command, CommandLog, Mode, Reply, Session, SessionConfig};
