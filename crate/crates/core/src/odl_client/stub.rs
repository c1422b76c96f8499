use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, PoisonError};
use std::thread::JoinHandle;

use base64::Engine;
use tiny_http::{Header, Response, Server};

use super::schema::CONFIG_PREFIX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedRequest {
    pub method: String,
    pub path: String,
    pub content_type: Option<String>,
    pub authorization: Option<String>,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredFlow {
    pub content_type: Option<String>,
    pub body: String,
}

#[derive(Debug, Default)]
struct StubState {
    requests: Vec<RecordedRequest>,
    datastore: BTreeMap<String, StoredFlow>,
    forced_status: Option<u16>,
}

/// In-process RESTCONF config endpoint for tests. Records every request and
/// keeps a path → document datastore with PUT-replaces / DELETE-removes
/// semantics. Shuts down when dropped.
pub struct RecordingStub {
    server: Arc<Server>,
    addr: SocketAddr,
    state: Arc<Mutex<StubState>>,
    worker: Option<JoinHandle<()>>,
}

impl RecordingStub {
    pub fn start() -> std::io::Result<Self> {
        Self::start_inner(None)
    }

    /// Like [`start`](Self::start) but answers 401 unless the request
    /// carries these basic-auth credentials.
    pub fn with_credentials(user: &str, secret: &str) -> std::io::Result<Self> {
        let token = base64::engine::general_purpose::STANDARD.encode(format!("{user}:{secret}"));
        Self::start_inner(Some(format!("Basic {token}")))
    }

    fn start_inner(expected_auth: Option<String>) -> std::io::Result<Self> {
        let server = Server::http("127.0.0.1:0").map_err(std::io::Error::other)?;
        let addr =
            server.server_addr().to_ip().ok_or_else(|| std::io::Error::other("stub bound to a non-ip address"))?;
        let server = Arc::new(server);
        let state = Arc::new(Mutex::new(StubState::default()));
        let worker = {
            let server = Arc::clone(&server);
            let state = Arc::clone(&state);
            std::thread::spawn(move || {
                for req in server.incoming_requests() {
                    serve(req, &state, expected_auth.as_deref());
                }
            })
        };
        Ok(RecordingStub { server, addr, state, worker: Some(worker) })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.lock().requests.clone()
    }

    pub fn datastore(&self) -> BTreeMap<String, StoredFlow> {
        self.lock().datastore.clone()
    }

    /// Every later request is answered with `status` and leaves the
    /// datastore alone; `None` restores normal behaviour.
    pub fn force_status(&self, status: Option<u16>) {
        self.lock().forced_status = status;
    }

    pub fn clear_requests(&self) {
        self.lock().requests.clear();
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, StubState> {
        self.state.lock().unwrap_or_else(PoisonError::into_inner)
    }
}

impl Drop for RecordingStub {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn header(req: &tiny_http::Request, name: &'static str) -> Option<String> {
    req.headers().iter().find(|h| h.field.equiv(name)).map(|h| h.value.as_str().to_string())
}

fn serve(mut req: tiny_http::Request, state: &Mutex<StubState>, expected_auth: Option<&str>) {
    let mut body = String::new();
    let read_ok = req.as_reader().read_to_string(&mut body).is_ok();
    let recorded = RecordedRequest {
        method: req.method().as_str().to_string(),
        path: req.url().to_string(),
        content_type: header(&req, "Content-Type"),
        authorization: header(&req, "Authorization"),
        body,
    };
    let status = {
        let mut st = state.lock().unwrap_or_else(PoisonError::into_inner);
        st.requests.push(recorded.clone());
        if let Some(s) = st.forced_status {
            s
        } else if !read_ok {
            400
        } else if expected_auth.is_some() && recorded.authorization.as_deref() != expected_auth {
            401
        } else if !recorded.path.starts_with(CONFIG_PREFIX) {
            404
        } else {
            match recorded.method.as_str() {
                "PUT" => {
                    let doc = StoredFlow { content_type: recorded.content_type, body: recorded.body };
                    match st.datastore.insert(recorded.path, doc) {
                        None => 201,
                        Some(_) => 200,
                    }
                }
                "DELETE" => match st.datastore.remove(&recorded.path) {
                    Some(_) => 200,
                    None => 404,
                },
                "GET" => match st.datastore.get(&recorded.path) {
                    Some(doc) => {
                        let mut resp = Response::from_string(doc.body.clone());
                        if let Some(ct) = doc.content_type.as_deref() {
                            if let Ok(h) = Header::from_bytes("Content-Type", ct) {
                                resp = resp.with_header(h);
                            }
                        }
                        drop(st);
                        let _ = req.respond(resp);
                        return;
                    }
                    None => 404,
                },
                _ => 405,
            }
        }
    };
    let _ = req.respond(Response::empty(status));
}
