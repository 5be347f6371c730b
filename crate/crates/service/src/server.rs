//! HTTP endpoints, the session socket, and the per-session owner task.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use gsrelight::imageio::{encode_pfm, encode_png};
use gsrelight::scene::HeadAsset;
use tokio::sync::mpsc;

use crate::schema::{
    check_version, parse, AssetInfo, AssetList, ErrorBody, ImageFormat, LoadResponse, RenderRequest, ServerMessage,
    SCHEMA_VERSION,
};
use crate::session::{render_spec, EditError, Session};

#[derive(Debug, Clone)]
enum Source {
    File(PathBuf),
    Memory(Arc<HeadAsset>),
}

/// Assets the service may load, by id.
#[derive(Debug, Default)]
pub struct AssetRegistry {
    sources: BTreeMap<String, Source>,
    loaded: Mutex<HashMap<String, Arc<HeadAsset>>>,
}

impl AssetRegistry {
    /// Every `*.gsr` file in `dir`, keyed by file stem.
    pub fn scan(&mut self, dir: &Path) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "gsr") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    self.sources.insert(stem.to_string(), Source::File(path.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn insert_file(&mut self, id: &str, path: PathBuf) {
        self.sources.insert(id.to_string(), Source::File(path));
    }

    pub fn insert(&mut self, id: &str, asset: HeadAsset) {
        self.sources.insert(id.to_string(), Source::Memory(Arc::new(asset)));
    }

    fn cached(&self, id: &str) -> Option<Arc<HeadAsset>> {
        match self.sources.get(id)? {
            Source::Memory(a) => Some(a.clone()),
            Source::File(_) => self.loaded.lock().unwrap().get(id).cloned(),
        }
    }

    pub fn info(&self, id: &str) -> Option<AssetInfo> {
        self.sources.get(id)?;
        let asset = self.cached(id);
        Some(AssetInfo {
            id: id.to_string(),
            loaded: asset.is_some(),
            splats: asset.as_ref().map(|a| a.len()),
            sh_degree: asset.as_ref().map(|a| a.sh_degree()),
        })
    }

    pub fn list(&self) -> Vec<AssetInfo> {
        self.sources.keys().filter_map(|id| self.info(id)).collect()
    }

    /// Load (once) and return the asset.
    pub fn get(&self, id: &str) -> Result<Arc<HeadAsset>, (StatusCode, EditError)> {
        if let Some(a) = self.cached(id) {
            return Ok(a);
        }
        let Some(Source::File(path)) = self.sources.get(id) else {
            return Err((StatusCode::NOT_FOUND, EditError::new("asset", format!("unknown asset {id:?}"))));
        };
        let asset = HeadAsset::load(path)
            .map_err(|e| (StatusCode::UNPROCESSABLE_ENTITY, EditError::new("asset", e.to_string())))?;
        let asset = Arc::new(asset);
        self.loaded.lock().unwrap().insert(id.to_string(), asset.clone());
        Ok(asset)
    }
}

/// What the owner task of a session receives, in arrival order.
#[derive(Debug)]
enum Inbound {
    Text(String),
    /// A socket connected; frames and acks now go to it.
    Attach(mpsc::UnboundedSender<Outbound>),
}

#[derive(Debug)]
enum Outbound {
    Text(String),
    Binary(Vec<u8>),
}

struct Inner {
    assets: AssetRegistry,
    sessions: Mutex<HashMap<String, mpsc::UnboundedSender<Inbound>>>,
    next_session: AtomicU64,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(assets: AssetRegistry) -> Self {
        Self(Arc::new(Inner {
            assets,
            sessions: Mutex::new(HashMap::new()),
            next_session: AtomicU64::new(1),
        }))
    }

    pub fn assets(&self) -> &AssetRegistry {
        &self.0.assets
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/assets", get(list_assets))
        .route("/assets/{id}/load", post(load_asset))
        .route("/render", post(render_once))
        .route("/ws/session/{id}", get(session_socket))
        .with_state(state)
}

fn error_response(status: StatusCode, e: &EditError) -> Response {
    let body = ErrorBody {
        schema_version: SCHEMA_VERSION,
        field: e.field.clone(),
        message: e.message.clone(),
    };
    (status, Json(body)).into_response()
}

async fn list_assets(State(app): State<AppState>) -> Json<AssetList> {
    Json(AssetList {
        schema_version: SCHEMA_VERSION,
        assets: app.assets().list(),
    })
}

async fn load_asset(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let loader = app.clone();
    let key = id.clone();
    let asset = match tokio::task::spawn_blocking(move || loader.assets().get(&key)).await {
        Ok(Ok(a)) => a,
        Ok(Err((status, e))) => return error_response(status, &e),
        Err(e) => return error_response(StatusCode::INTERNAL_SERVER_ERROR, &EditError::new("asset", e.to_string())),
    };
    let session = Session::new(&id, asset);
    let state = session.state().clone();
    let sid = format!("s{}", app.0.next_session.fetch_add(1, Ordering::Relaxed));
    let (tx, rx) = mpsc::unbounded_channel();
    tokio::spawn(owner(session, rx));
    app.0.sessions.lock().unwrap().insert(sid.clone(), tx);
    Json(LoadResponse {
        schema_version: SCHEMA_VERSION,
        session: sid,
        asset: app.assets().info(&id).expect("just loaded"),
        state,
    })
    .into_response()
}

/// Render one fully described frame, outside any session.
async fn render_once(State(app): State<AppState>, body: Bytes) -> Response {
    let text = match std::str::from_utf8(&body) {
        Ok(t) => t,
        Err(_) => return error_response(StatusCode::BAD_REQUEST, &EditError::new("message", "body is not UTF-8")),
    };
    let req: RenderRequest = match parse(text) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, &e),
    };
    if let Err(e) = check_version(req.schema_version) {
        return error_response(StatusCode::BAD_REQUEST, &e);
    }
    let job = move || -> Result<Vec<u8>, (StatusCode, EditError)> {
        let asset = app.assets().get(&req.asset)?;
        let img = render_spec(&asset, &req.camera, &req.light, &req.material, req.seed)
            .map_err(|e| (StatusCode::UNPROCESSABLE_ENTITY, e))?;
        let linear = img.to_linear();
        Ok(match req.format {
            ImageFormat::Png => encode_png(&linear)
                .map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, EditError::new("frame", e.to_string())))?,
            ImageFormat::Pfm => encode_pfm(&linear),
        })
    };
    let format = req.format;
    match tokio::task::spawn_blocking(job).await {
        Ok(Ok(bytes)) => {
            let mime = match format {
                ImageFormat::Png => "image/png",
                ImageFormat::Pfm => "image/x-portable-floatmap",
            };
            ([(header::CONTENT_TYPE, mime)], bytes).into_response()
        }
        Ok(Err((status, e))) => error_response(status, &e),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, &EditError::new("render", e.to_string())),
    }
}

async fn session_socket(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    ws: WebSocketUpgrade,
) -> Response {
    let Some(tx) = app.0.sessions.lock().unwrap().get(&id).cloned() else {
        return error_response(StatusCode::NOT_FOUND, &EditError::new("session", format!("unknown session {id:?}")));
    };
    ws.on_upgrade(move |socket| connection(socket, tx))
}

/// Pump one socket: incoming text goes to the owner queue, owner output
/// goes back out in order.
async fn connection(socket: WebSocket, owner: mpsc::UnboundedSender<Inbound>) {
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = mpsc::unbounded_channel();
    if owner.send(Inbound::Attach(out_tx)).is_err() {
        return;
    }
    let writer = tokio::spawn(async move {
        while let Some(m) = out_rx.recv().await {
            let msg = match m {
                Outbound::Text(t) => Message::Text(t.into()),
                Outbound::Binary(b) => Message::Binary(b.into()),
            };
            if sink.send(msg).await.is_err() {
                break;
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(b) => String::from_utf8_lossy(&b).into_owned(),
            Message::Close(_) => break,
            _ => continue,
        };
        if owner.send(Inbound::Text(text)).is_err() {
            break;
        }
    }
    writer.abort();
}

fn json(m: &ServerMessage) -> Outbound {
    Outbound::Text(serde_json::to_string(m).expect("server messages serialize"))
}

/// Owns one session. Drains everything queued, applies it in order, answers
/// each message, then renders the resulting state once: messages that
/// arrive during a render are coalesced into the next frame.
async fn owner(mut session: Session, mut rx: mpsc::UnboundedReceiver<Inbound>) {
    let mut out: Option<mpsc::UnboundedSender<Outbound>> = None;
    let send = |out: &Option<mpsc::UnboundedSender<Outbound>>, m: Outbound| {
        if let Some(tx) = out {
            let _ = tx.send(m);
        }
    };
    while let Some(first) = rx.recv().await {
        let mut batch = vec![first];
        while let Ok(m) = rx.try_recv() {
            batch.push(m);
        }
        // replies in arrival order; acks learn their frame once the batch is applied
        let mut replies: Vec<Result<u64, ServerMessage>> = Vec::new();
        let mut attached = false;
        for m in batch {
            match m {
                Inbound::Attach(tx) => {
                    out = Some(tx);
                    attached = true;
                }
                Inbound::Text(t) => replies.push(session.apply_text(&t).map_err(|(seq, e)| ServerMessage::error(seq, &e))),
            }
        }
        let frame_seq = session.state().seq;
        let mut changed = false;
        for r in replies {
            let m = match r {
                Ok(seq) => {
                    changed = true;
                    ServerMessage::Ack {
                        schema_version: SCHEMA_VERSION,
                        seq,
                        frame_seq,
                    }
                }
                Err(e) => e,
            };
            send(&out, json(&m));
        }
        if !(changed || attached) {
            continue;
        }
        let job = session.job();
        match tokio::task::spawn_blocking(move || job.run()).await {
            Ok(Ok(frame)) => {
                send(&out, json(&frame.meta));
                send(&out, Outbound::Binary(frame.png));
            }
            Ok(Err(e)) => send(&out, json(&ServerMessage::error(Some(frame_seq), &e))),
            Err(e) => send(&out, json(&ServerMessage::error(Some(frame_seq), &EditError::new("render", e.to_string())))),
        }
    }
}
