//! WebSocket front end for [`Session`]s.
//!
//! `GET /ws` upgrades to a game session. Optional query parameters:
//! `session=<u64>` picks the id echoed in every message and
//! `policy=drl|apf` overrides the configured swarm policy. `GET /health`
//! answers `ok`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use tokio::net::TcpListener;
use tokio::time::{interval, MissedTickBehavior};

use archery_core::policy::PolicyKind;

use crate::protocol::{encode, ClientMessage, ServerMessage};
use crate::session::{GameSetup, Session};

#[derive(Clone)]
struct AppState {
    setup: Arc<GameSetup>,
    next_id: Arc<AtomicU64>,
}

pub fn router(setup: Arc<GameSetup>) -> Router {
    let state = AppState {
        setup,
        next_id: Arc::new(AtomicU64::new(1)),
    };
    Router::new()
        .route("/ws", get(upgrade))
        .route("/health", get(|| async { "ok" }))
        .with_state(state)
}

pub async fn serve(listener: TcpListener, setup: Arc<GameSetup>) -> std::io::Result<()> {
    axum::serve(listener, router(setup)).await
}

async fn upgrade(
    ws: WebSocketUpgrade,
    Query(query): Query<HashMap<String, String>>,
    State(state): State<AppState>,
) -> Response {
    ws.on_upgrade(move |socket| run_session(socket, state, query))
}

async fn send_all(socket: &mut WebSocket, msgs: Vec<ServerMessage>) -> bool {
    for m in msgs {
        if socket.send(Message::Text(encode(&m).into())).await.is_err() {
            return false;
        }
    }
    true
}

async fn run_session(mut socket: WebSocket, state: AppState, query: HashMap<String, String>) {
    let mut greeting = Vec::new();
    let id = match query.get("session").map(|s| s.parse::<u64>()) {
        Some(Ok(id)) => id,
        _ => state.next_id.fetch_add(1, Ordering::Relaxed),
    };
    let mut session = Session::new(id, state.setup.clone());
    if let Some(p) = query.get("policy") {
        greeting = match p.parse::<PolicyKind>() {
            Ok(policy) => session.handle(ClientMessage::SetPolicy { policy }),
            Err(e) => vec![session.error_reply(e.to_string())],
        };
    }
    if greeting.is_empty() {
        greeting.push(session.telemetry());
    }
    if !send_all(&mut socket, greeting).await {
        return;
    }

    let hz = state.setup.config.serve.tick_hz;
    let dt = 1.0 / hz;
    let mut ticker = interval(Duration::from_secs_f64(dt));
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    ticker.tick().await;
    loop {
        let out = tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => session.handle_text(text.as_str()),
                Some(Ok(Message::Binary(_))) => vec![session.error_reply("malformed message: binary frames are not supported")],
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => continue,
            },
            _ = ticker.tick() => session.tick(dt),
        };
        if !send_all(&mut socket, out).await {
            break;
        }
    }
}
