//! Test support: a virtual-host HTTP server over the fixture corpus.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Instant;

use dualweb_core::crawler::CrawlConfig;
use dualweb_core::graph::SiteNode;

pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/crawl")
}

/// Hosts with a directory in the corpus, plus `www.` aliases.
pub fn corpus_hosts() -> Vec<String> {
    let mut hosts: Vec<String> = std::fs::read_dir(fixture_root())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    hosts.sort();
    hosts
}

#[derive(Debug, Clone)]
pub struct Hit {
    pub host: String,
    pub path: String,
    pub at: Instant,
}

pub struct FixtureServer {
    pub addr: SocketAddr,
    pub hits: Arc<Mutex<Vec<Hit>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl FixtureServer {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let root = fixture_root();
        let handle = {
            let hits = Arc::clone(&hits);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let root = root.clone();
                    let hits = Arc::clone(&hits);
                    std::thread::spawn(move || serve(stream, &root, &hits));
                }
            })
        };
        FixtureServer {
            addr,
            hits,
            stop,
            handle: Some(handle),
        }
    }

    /// Crawl config with every corpus host routed to this server.
    pub fn config(&self, seeds: &[&str], delay_ms: u64) -> CrawlConfig {
        let mut cfg = CrawlConfig::new(seeds.iter().map(|h| SiteNode::new(*h, "US")).collect());
        cfg.per_host_delay_ms = delay_ms;
        cfg.timeout_ms = 5000;
        cfg.resolve = corpus_hosts()
            .into_iter()
            .flat_map(|h| [format!("www.{h}"), h])
            .map(|h| (h, self.addr.to_string()))
            .collect::<BTreeMap<_, _>>();
        cfg
    }

    pub fn hits(&self) -> Vec<Hit> {
        self.hits.lock().unwrap().clone()
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(mut stream: TcpStream, root: &Path, hits: &Mutex<Vec<Hit>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    let mut host = String::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("host") {
                let value = value.trim();
                host = value.rsplit_once(':').map_or(value, |(h, _)| h).to_ascii_lowercase();
            }
        }
    }
    let target = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let path = target.split('?').next().unwrap_or("/").to_string();
    hits.lock().unwrap().push(Hit {
        host: host.clone(),
        path: path.clone(),
        at: Instant::now(),
    });

    let mut file = root.join(&host).join(path.trim_start_matches('/'));
    if path.ends_with('/') {
        file.push("index.html");
    }
    let inside = !path.contains("..") && !host.is_empty();
    let (status, body, kind) = match std::fs::read(&file) {
        Ok(body) if inside && file.is_file() => {
            let kind = if path.ends_with(".txt") {
                "text/plain"
            } else {
                "text/html; charset=utf-8"
            };
            ("200 OK", body, kind)
        }
        _ => ("404 Not Found", b"not found".to_vec(), "text/plain"),
    };
    let head = format!(
        "HTTP/1.1 {status}\r\nContent-Type: {kind}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    let _ = stream.write_all(head.as_bytes());
    let _ = stream.write_all(&body);
}

pub fn read_expected_edges() -> Vec<(String, String, u64)> {
    let text = std::fs::read_to_string(fixture_root().join("expected_edges.csv")).unwrap();
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string(), f[2].parse().unwrap())
        })
        .collect()
}

pub const FIXTURE_SEEDS: [&str; 5] = ["a.example", "b.example", "c.example", "wiki.example", "es.wiki.example"];
