use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use gsr_service::schema::{EditMessage, LoadResponse, ServerMessage, StateView};
use gsr_service::{router, AppState, AssetRegistry, Session};
use gsrelight::scene::generate_sphere_asset;
use serde_json::json;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn serve() -> String {
    let mut reg = AssetRegistry::default();
    reg.insert("sphere", generate_sphere_asset(800, 1.0, [0.6, 0.5, 0.45], 0.4, 0).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(AppState::new(reg))).await.unwrap() });
    format!("127.0.0.1:{}", addr.port())
}

/// POST without an HTTP client: the service speaks plain HTTP/1.1.
async fn load(addr: &str, id: &str) -> (u16, String) {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let mut s = TcpStream::connect(addr).await.unwrap();
    let req = format!("POST /assets/{id}/load HTTP/1.1\r\nHost: {addr}\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
    s.write_all(req.as_bytes()).await.unwrap();
    let mut buf = String::new();
    s.read_to_string(&mut buf).await.unwrap();
    let status = buf[9..12].parse().unwrap();
    let body = buf.split("\r\n\r\n").nth(1).unwrap_or("").to_string();
    (status, body)
}

enum Received {
    Json(ServerMessage),
    Png(Vec<u8>),
}

async fn next(ws: &mut Socket) -> Received {
    let msg = tokio::time::timeout(Duration::from_secs(60), ws.next()).await.expect("no reply").unwrap().unwrap();
    match msg {
        Message::Text(t) => Received::Json(serde_json::from_str(&t).unwrap()),
        Message::Binary(b) => Received::Png(b.to_vec()),
        other => panic!("unexpected {other:?}"),
    }
}

/// Next frame: its metadata and PNG, collecting acks and errors seen before.
async fn next_frame(ws: &mut Socket, others: &mut Vec<ServerMessage>) -> (u64, StateView, Vec<u8>) {
    loop {
        match next(ws).await {
            Received::Json(ServerMessage::Frame { seq, state, .. }) => match next(ws).await {
                Received::Png(png) => return (seq, state, png),
                Received::Json(m) => panic!("frame metadata followed by {m:?}"),
            },
            Received::Json(m) => others.push(m),
            Received::Png(_) => panic!("PNG without metadata"),
        }
    }
}

fn edit(seq: u64, edit: serde_json::Value) -> String {
    json!({ "schema_version": 1, "seq": seq, "edit": edit }).to_string()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn session_socket_acks_coalesces_and_echoes_state() {
    let addr = serve().await;
    let (status, body) = load(&addr, "sphere").await;
    assert_eq!(status, 200, "{body}");
    let loaded: LoadResponse = serde_json::from_str(&body).unwrap();
    let (mut ws, _) = connect_async(format!("ws://{addr}/ws/session/{}", loaded.session)).await.unwrap();

    let mut others = Vec::new();
    let (seq0, state0, _) = next_frame(&mut ws, &mut others).await;
    assert_eq!((seq0, &state0), (0, &loaded.state));

    let texts = vec![
        edit(1, json!({ "camera": { "width": 48, "height": 48 } })),
        edit(2, json!({ "light": { "kind": "env", "preset": "sky" } })),
        edit(3, json!({ "material": { "roughness_scale": 5.0 } })),
        edit(4, json!({ "camera": { "azimuth": 40.0 }, "material": { "roughness_scale": 0.5 } })),
        edit(5, json!({ "light": { "kind": "points", "lights": [ { "direction": [1.0, 1.0, 1.0] } ] } })),
        edit(6, json!({ "seed": 2 })),
    ];
    for t in &texts {
        ws.send(Message::Text(t.clone().into())).await.unwrap();
    }

    // replay the same messages on a local session to know what each frame must show
    let asset = Arc::new(generate_sphere_asset(800, 1.0, [0.6, 0.5, 0.45], 0.4, 0).unwrap());
    let mut frames = Vec::new();
    loop {
        let (seq, state, png) = next_frame(&mut ws, &mut others).await;
        frames.push((seq, state, png));
        if seq == 6 {
            break;
        }
    }
    for w in frames.windows(2) {
        assert!(w[0].0 < w[1].0, "frames out of order");
    }
    for (seq, state, png) in &frames {
        let mut local = Session::new("sphere", asset.clone());
        for t in &texts {
            let msg: EditMessage = serde_json::from_str(t).unwrap();
            if msg.seq <= *seq {
                let _ = local.apply(&msg);
            }
        }
        assert_eq!(state, local.state(), "state echoed with frame {seq}");
        assert_eq!(png, &local.render().unwrap().png, "pixels of frame {seq}");
    }
    let last = &frames.last().unwrap().1;
    assert_eq!(last.camera.azimuth, 40.0);
    assert_eq!(last.camera.width, 48);
    assert_eq!(last.material.roughness_scale, 0.5);
    assert_eq!(last.seed, 2);

    let mut acked = Vec::new();
    let mut errors = Vec::new();
    for m in &others {
        match m {
            ServerMessage::Ack { seq, frame_seq, .. } => {
                assert!(frame_seq >= seq);
                assert!(frames.iter().any(|f| f.0 == *frame_seq), "ack points at a sent frame");
                acked.push(*seq);
            }
            ServerMessage::Error { seq, field, .. } => errors.push((*seq, field.clone())),
            ServerMessage::Frame { .. } => unreachable!(),
        }
    }
    assert_eq!(acked, [1, 2, 4, 5, 6]);
    assert_eq!(errors, [(Some(3), "edit.material.roughness_scale".to_string())]);

    // a reconnect sees the current state
    ws.close(None).await.unwrap();
    let (mut ws, _) = connect_async(format!("ws://{addr}/ws/session/{}", loaded.session)).await.unwrap();
    let (seq, state, _) = next_frame(&mut ws, &mut Vec::new()).await;
    assert_eq!(seq, 6);
    assert_eq!(&state, last);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn session_survives_garbage_and_unknown_sessions_are_refused() {
    let addr = serve().await;
    assert!(connect_async(format!("ws://{addr}/ws/session/s99")).await.is_err());
    let (status, body) = load(&addr, "ghost").await;
    assert_eq!(status, 404);
    assert!(body.contains("\"field\":\"asset\""), "{body}");

    let (_, body) = load(&addr, "sphere").await;
    let loaded: LoadResponse = serde_json::from_str(&body).unwrap();
    let (mut ws, _) = connect_async(format!("ws://{addr}/ws/session/{}", loaded.session)).await.unwrap();
    let mut others = Vec::new();
    next_frame(&mut ws, &mut others).await;
    for junk in ["{", "[]", r#"{"schema_version":1,"seq":1}"#, r#"{"schema_version":9,"seq":1,"edit":{}}"#] {
        ws.send(Message::Text(junk.into())).await.unwrap();
    }
    ws.send(Message::Text(edit(1, json!({ "camera": { "width": 16, "height": 16 } })).into())).await.unwrap();
    let (seq, state, _) = next_frame(&mut ws, &mut others).await;
    assert_eq!((seq, state.camera.width), (1, 16));
    let fields: Vec<String> = others
        .iter()
        .filter_map(|m| match m {
            ServerMessage::Error { field, .. } => Some(field.clone()),
            _ => None,
        })
        .collect();
    assert_eq!(fields.len(), 4, "{fields:?}");
    assert!(fields.contains(&"edit".to_string()), "{fields:?}");
    assert!(fields.contains(&"schema_version".to_string()), "{fields:?}");
}
