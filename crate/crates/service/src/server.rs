use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use hoisim_core::engine::Scene;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;

use crate::protocol::{ControlMessage, MeshPayload, ServerMessage};
use crate::sim::{mesh_payloads, Simulation};

pub const DEFAULT_PORT: u16 = 8793;
pub const DEFAULT_TICK_HZ: f64 = 30.0;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] hoisim_core::Error),
    #[error("server failed: {0}")]
    Serve(#[source] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub scene: Scene,
    pub seed: u64,
    /// Use port 0 to pick a free port.
    pub addr: SocketAddr,
    pub tick_hz: f64,
    /// Where `save_session` writes.
    pub session_dir: PathBuf,
}

impl ServiceConfig {
    pub fn new(scene: Scene) -> ServiceConfig {
        let seed = scene.config.seed;
        ServiceConfig {
            scene,
            seed,
            addr: SocketAddr::from(([127, 0, 0, 1], DEFAULT_PORT)),
            tick_hz: DEFAULT_TICK_HZ,
            session_dir: PathBuf::from("."),
        }
    }
}

/// A request for the simulation loop, with the channel for its reply.
struct Inbound {
    msg: ControlMessage,
    reply: mpsc::UnboundedSender<ServerMessage>,
}

#[derive(Clone)]
struct AppState {
    inbound: mpsc::UnboundedSender<Inbound>,
    states: broadcast::Sender<Arc<str>>,
    meshes: Arc<BTreeMap<u32, MeshPayload>>,
}

/// Handle of a service running in the background.
pub struct RunningService {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    server: JoinHandle<Result<(), ServiceError>>,
    sim: JoinHandle<()>,
}

impl RunningService {
    /// Stops accepting connections; open sockets get a short grace period.
    pub async fn shutdown(mut self) -> Result<(), ServiceError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.sim.abort();
        match tokio::time::timeout(Duration::from_secs(1), &mut self.server).await {
            Ok(joined) => joined.unwrap_or(Ok(())),
            Err(_) => {
                self.server.abort();
                Ok(())
            }
        }
    }

    /// Runs until the server stops.
    pub async fn wait(self) -> Result<(), ServiceError> {
        let result = self.server.await.unwrap_or(Ok(()));
        self.sim.abort();
        result
    }
}

/// Binds, then runs the loop and the HTTP/WebSocket server as tasks.
pub async fn spawn(config: ServiceConfig) -> Result<RunningService, ServiceError> {
    if !(config.tick_hz > 0.0 && config.tick_hz.is_finite()) {
        return Err(hoisim_core::Error::InvalidArgument(format!("tick rate {} must be positive", config.tick_hz)).into());
    }
    let sim = Simulation::new(config.scene.clone(), config.seed, &config.session_dir)?;
    let listener = TcpListener::bind(config.addr).await.map_err(|source| ServiceError::Bind {
        addr: config.addr,
        source,
    })?;
    let addr = listener.local_addr().map_err(ServiceError::Serve)?;
    let (in_tx, in_rx) = mpsc::unbounded_channel();
    let (state_tx, _) = broadcast::channel(64);
    let state = AppState {
        inbound: in_tx,
        states: state_tx.clone(),
        meshes: Arc::new(mesh_payloads(&config.scene)),
    };
    let period = Duration::from_secs_f64(1.0 / config.tick_hz);
    let sim_task = tokio::spawn(run_loop(sim, in_rx, state_tx, period));

    let app = Router::new()
        .route("/ws", get(ws_handler))
        .route("/meshes/{id}", get(mesh_handler))
        .with_state(state);
    let (stop_tx, stop_rx) = oneshot::channel::<()>();
    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = stop_rx.await;
            })
            .await
            .map_err(ServiceError::Serve)
    });
    log::info!("listening on {addr} at {} Hz", config.tick_hz);
    Ok(RunningService {
        addr,
        shutdown: Some(stop_tx),
        server,
        sim: sim_task,
    })
}

/// Runs the service until it fails.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    spawn(config).await?.wait().await
}

async fn run_loop(
    mut sim: Simulation,
    mut inbound: mpsc::UnboundedReceiver<Inbound>,
    states: broadcast::Sender<Arc<str>>,
    period: Duration,
) {
    let mut ticker = tokio::time::interval(period);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            biased;
            Some(req) = inbound.recv() => {
                if let Some(reply) = sim.handle(req.msg) {
                    let _ = req.reply.send(reply);
                }
            }
            _ = ticker.tick() => {
                let msg = ServerMessage::State(sim.tick()).to_json();
                // no subscribers is fine
                let _ = states.send(msg.into());
            }
        }
    }
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| client(socket, state))
}

async fn client(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut states = state.states.subscribe();
    let (reply_tx, mut reply_rx) = mpsc::unbounded_channel::<ServerMessage>();
    loop {
        tokio::select! {
            incoming = stream.next() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(Message::Binary(_))) => {
                        let _ = reply_tx.send(ServerMessage::error("expected a JSON text frame"));
                        continue;
                    }
                    Some(Ok(_)) => continue,
                };
                match ControlMessage::parse(text.as_str()) {
                    Ok(msg) => {
                        if state.inbound.send(Inbound { msg, reply: reply_tx.clone() }).is_err() {
                            break;
                        }
                    }
                    Err(reason) => {
                        let _ = reply_tx.send(ServerMessage::error(reason));
                    }
                }
            }
            Some(reply) = reply_rx.recv() => {
                if sink.send(Message::Text(reply.to_json().into())).await.is_err() {
                    break;
                }
            }
            s = states.recv() => match s {
                Ok(json) => {
                    if sink.send(Message::Text(json.as_ref().into())).await.is_err() {
                        break;
                    }
                }
                // slow client: skip to the newest state
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            },
        }
    }
}

async fn mesh_handler(UrlPath(id): UrlPath<String>, State(state): State<AppState>) -> Response {
    let found = id.parse::<u32>().ok().and_then(|id| state.meshes.get(&id));
    match found {
        Some(m) => Json(m.clone()).into_response(),
        None => (StatusCode::NOT_FOUND, format!("no mesh {id:?}")).into_response(),
    }
}
