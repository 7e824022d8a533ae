#![allow(dead_code)]

use std::path::Path;
use std::sync::mpsc;
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use jarvis_core::synth::{generate_corpus, CampaignSpec, Corpus, CorpusSpec, SharedEntity, PROMO_TEMPLATES};
use jarvis_service::{serve, ApiOptions, Backends, Service, ServiceConfig};
use serde_json::Value;

pub fn open(dir: &Path) -> Arc<Service> {
    Arc::new(Service::open(ServiceConfig::new(dir), Backends::mock(256)).unwrap())
}

pub struct TestServer {
    pub base: String,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl TestServer {
    pub fn start(svc: Arc<Service>, opts: ApiOptions) -> Self {
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let (addr_tx, addr_rx) = mpsc::channel();
        let thread = thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                serve(listener, svc, opts, async {
                    let _ = rx.await;
                })
                .await
                .unwrap();
            });
        });
        let addr = addr_rx.recv().unwrap();
        Self {
            base: format!("http://{addr}"),
            shutdown: Some(tx),
            thread: Some(thread),
        }
    }

    pub fn stop(mut self) {
        self.halt();
    }

    fn halt(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            t.join().unwrap();
        }
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        request("GET", &format!("{}{path}", self.base), None, None)
    }

    pub fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        request("POST", &format!("{}{path}", self.base), Some(body.to_string()), None)
    }

    pub fn post_raw(&self, path: &str, body: &str) -> (u16, Value) {
        request("POST", &format!("{}{path}", self.base), Some(body.to_string()), None)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.halt();
    }
}

/// Sends a request and returns the status with the decoded JSON body
/// (`Value::String` holding the raw text when it is not JSON).
pub fn request(method: &str, url: &str, body: Option<String>, token: Option<&str>) -> (u16, Value) {
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let auth = token.map(|t| format!("Bearer {t}"));
    let resp = match (method, body) {
        ("GET", _) => {
            let mut req = agent.get(url);
            if let Some(a) = &auth {
                req = req.header("authorization", a);
            }
            req.call()
        }
        (_, body) => {
            let mut req = agent.post(url).header("content-type", "application/json");
            if let Some(a) = &auth {
                req = req.header("authorization", a);
            }
            req.send(body.unwrap_or_default())
        }
    };
    let mut resp = resp.unwrap();
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().unwrap();
    let value = serde_json::from_str(&text).unwrap_or(Value::String(text));
    (status, value)
}

/// Six colluders sharing a device and an IP, plus genuine background.
pub fn campaign_corpus(n_genuine: usize) -> Corpus {
    generate_corpus(&CorpusSpec {
        n_genuine,
        campaigns: vec![CampaignSpec {
            n_colluders: 6,
            shared_entities: [SharedEntity::Device, SharedEntity::Ip].into_iter().collect(),
            template_text: PROMO_TEMPLATES[2].replace("{item}", "desk lamp"),
            paraphrase_rate: 0.1,
            rare_char_substitution_rate: 0.1,
            time_spread_seconds: 24 * 3600,
            target_item: "item-lamp".into(),
            reuse_image: true,
        }],
        time_horizon_days: 10,
        rng_seed: 5,
    })
    .unwrap()
}

/// Loads a corpus through the HTTP API.
pub fn load_over_http(server: &TestServer, corpus: &Corpus) {
    for r in &corpus.reviews {
        let (status, body) = server.post("/reviews", &serde_json::to_value(r).unwrap());
        assert_eq!(status, 201, "{body}");
    }
    let (status, body) = server.post("/behaviors", &serde_json::to_value(&corpus.behaviors).unwrap());
    assert!(status == 201 || status == 200, "{body}");
}
