//! Websocket front end. One task owns the [`Session`]; it ticks on a
//! wall-clock interval and drains the command mailbox between ticks.
//! Frames fan out to every connected client over a broadcast channel.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::time::MissedTickBehavior;
use tracing::{info, warn};

use crate::session::{Reply, Session};

type Mail = (String, oneshot::Sender<Reply>);

#[derive(Clone)]
struct Shared {
    frames: broadcast::Sender<String>,
    mailbox: mpsc::Sender<Mail>,
}

/// Handle to a running server.
pub struct ServerHandle {
    pub addr: SocketAddr,
    task: tokio::task::JoinHandle<()>,
}

impl ServerHandle {
    pub fn abort(&self) {
        self.task.abort();
    }

    pub async fn wait(self) {
        let _ = self.task.await;
    }
}

/// Binds `addr` (port 0 picks a free one) and starts serving `/ws`.
/// Finished episodes' command logs go to `log_dir` when given.
pub async fn spawn(addr: SocketAddr, session: Session, log_dir: Option<PathBuf>) -> std::io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (frames, _) = broadcast::channel(64);
    let (mailbox, rx) = mpsc::channel(256);
    let shared = Shared {
        frames: frames.clone(),
        mailbox,
    };
    tokio::spawn(run_session(session, rx, frames, log_dir));

    let app = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/health", get(|| async { "ok" }))
        .with_state(shared);
    let task = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            warn!("server stopped: {e}");
        }
    });
    info!(%addr, "live server listening");
    Ok(ServerHandle { addr, task })
}

async fn run_session(
    mut session: Session,
    mut mailbox: mpsc::Receiver<Mail>,
    frames: broadcast::Sender<String>,
    log_dir: Option<PathBuf>,
) {
    let period = Duration::from_secs_f64(1.0 / session.tick_hz());
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut saved = 0;
    loop {
        tokio::select! {
            _ = interval.tick() => {
                // everything that arrived before this tick applies to it
                while let Ok((text, reply)) = mailbox.try_recv() {
                    let _ = reply.send(session.handle_text(&text));
                }
                match session.tick() {
                    Ok(Some(frame)) => {
                        if let Ok(json) = serde_json::to_string(&frame) {
                            // no subscribers is fine: the game still advances
                            let _ = frames.send(json);
                        }
                    }
                    Ok(None) => {}
                    Err(e) => {
                        warn!("tick failed: {e}");
                        let seed = session.log().seed.wrapping_add(1);
                        session.reset(seed);
                    }
                }
                if let Some(dir) = &log_dir {
                    for log in &session.finished_logs()[saved..] {
                        let path = dir.join(format!("episode-{saved:05}-seed{}.json", log.seed));
                        if let Err(e) = log.save(&path) {
                            warn!("cannot write {}: {e}", path.display());
                        }
                        saved += 1;
                    }
                }
            }
            mail = mailbox.recv() => match mail {
                Some((text, reply)) => { let _ = reply.send(session.handle_text(&text)); }
                None => break,
            }
        }
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(shared): State<Shared>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, shared))
}

async fn client(socket: WebSocket, shared: Shared) {
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = mpsc::channel::<String>(64);
    let writer = tokio::spawn(async move {
        while let Some(text) = out_rx.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });

    let mut frames = shared.frames.subscribe();
    let frame_tx = out_tx.clone();
    let forwarder = tokio::spawn(async move {
        loop {
            match frames.recv().await {
                Ok(f) => {
                    if frame_tx.send(f).await.is_err() {
                        break;
                    }
                }
                // a slow client skips frames rather than stalling the game
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let (tx, rx) = oneshot::channel();
        if shared.mailbox.send((text, tx)).await.is_err() {
            break;
        }
        if let Ok(reply) = rx.await {
            if let Ok(json) = serde_json::to_string(&reply) {
                if out_tx.send(json).await.is_err() {
                    break;
                }
            }
        }
    }
    forwarder.abort();
    drop(out_tx);
    let _ = writer.await;
}
