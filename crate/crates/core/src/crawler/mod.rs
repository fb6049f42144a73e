//! Seed-set crawler: fetches a few pages per seed site, extracts anchors
//! and counts links that resolve to other seeds.
//!
//! Each seed is crawled by one worker at a time; requests to a host are
//! spaced by `per_host_delay_ms` through a shared gate. Results are merged
//! in seed order, so the report does not depend on scheduling.

mod extract;
mod resolve;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::io::Read;
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use url::Url;

pub use extract::{canonical_page, extract_links};
pub use resolve::{resolve_host, HostResolver};

use crate::error::{Error, Result};
use crate::graph::{DirectedCountGraph, NodeSet, SiteNode};

const MAX_BODY_BYTES: u64 = 5 * 1024 * 1024;

fn default_max_pages() -> usize {
    20
}
fn default_max_depth() -> usize {
    1
}
fn default_delay() -> u64 {
    1000
}
fn default_timeout() -> u64 {
    10_000
}
fn default_user_agent() -> String {
    concat!("dualweb-crawler/", env!("CARGO_PKG_VERSION")).to_string()
}
fn default_true() -> bool {
    true
}
fn default_workers() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrawlConfig {
    pub seeds: Vec<SiteNode>,
    #[serde(default = "default_max_pages")]
    pub max_pages_per_site: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    #[serde(default = "default_delay")]
    pub per_host_delay_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default = "default_user_agent")]
    pub user_agent: String,
    #[serde(default = "default_true")]
    pub respect_robots: bool,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Entry pages per seed id; defaults to `http://<first host pattern>/`.
    #[serde(default)]
    pub start_urls: BTreeMap<String, Vec<String>>,
    /// Host to socket-address overrides, like curl's `--resolve`.
    #[serde(default)]
    pub resolve: BTreeMap<String, String>,
}

impl CrawlConfig {
    pub fn new(seeds: Vec<SiteNode>) -> Self {
        CrawlConfig {
            seeds,
            max_pages_per_site: default_max_pages(),
            max_depth: default_max_depth(),
            per_host_delay_ms: default_delay(),
            timeout_ms: default_timeout(),
            user_agent: default_user_agent(),
            respect_robots: true,
            workers: default_workers(),
            start_urls: BTreeMap::new(),
            resolve: BTreeMap::new(),
        }
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingInput(path.to_path_buf()))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn entry_urls(&self, seed: &SiteNode) -> Result<Vec<Url>> {
        let raw = match self.start_urls.get(&seed.id) {
            Some(urls) => urls.clone(),
            None => vec![format!("http://{}/", seed.host_patterns[0])],
        };
        raw.iter()
            .map(|u| Url::parse(u).map_err(|e| Error::InvalidConfig(format!("start url `{u}`: {e}"))))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchFailure {
    pub url: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeCount {
    pub src: String,
    pub dst: String,
    pub count: u64,
}

/// One issued request, for politeness auditing.
#[derive(Debug, Clone)]
pub struct FetchEvent {
    pub host: String,
    pub url: String,
    pub at: Instant,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrawlReport {
    pub fetched: usize,
    pub failed: Vec<FetchFailure>,
    pub skipped_robots: usize,
    /// Seeds with no successfully fetched page.
    pub dropped_sites: Vec<String>,
    pub pages_per_site: BTreeMap<String, usize>,
    pub edges: Vec<EdgeCount>,
    #[serde(skip)]
    pub resolved_edges: DirectedCountGraph,
    #[serde(skip)]
    pub fetch_log: Vec<FetchEvent>,
}

impl CrawlReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Consecutive requests to one host spaced closer than `delay`.
    pub fn politeness_violations(&self, delay: Duration) -> usize {
        let mut by_host: HashMap<&str, Vec<Instant>> = HashMap::new();
        for e in &self.fetch_log {
            by_host.entry(&e.host).or_default().push(e.at);
        }
        by_host
            .values_mut()
            .map(|times| {
                times.sort();
                times.windows(2).filter(|w| w[1] - w[0] < delay).count()
            })
            .sum()
    }
}

/// Serialises requests per host: a caller may issue a request only once
/// the previous one to the same host is at least `delay` old.
struct HostGate {
    delay: Duration,
    next: Mutex<HashMap<String, Instant>>,
    log: Mutex<Vec<FetchEvent>>,
}

impl HostGate {
    fn new(delay: Duration) -> Self {
        HostGate {
            delay,
            next: Mutex::new(HashMap::new()),
            log: Mutex::new(Vec::new()),
        }
    }

    fn acquire(&self, url: &Url) {
        let host = url.host_str().unwrap_or_default().to_string();
        loop {
            let wait = {
                let mut next = self.next.lock().expect("gate poisoned");
                let now = Instant::now();
                match next.get(&host) {
                    Some(&t) if t > now => t - now,
                    _ => {
                        next.insert(host.clone(), now + self.delay);
                        self.log.lock().expect("gate poisoned").push(FetchEvent {
                            host,
                            url: url.to_string(),
                            at: now,
                        });
                        return;
                    }
                }
            };
            std::thread::sleep(wait);
        }
    }
}

enum Fetched {
    Page { final_url: Url, body: String },
    Missing,
}

struct Fetcher {
    agent: ureq::Agent,
    gate: Arc<HostGate>,
}

impl Fetcher {
    fn new(cfg: &CrawlConfig, gate: Arc<HostGate>) -> Result<Self> {
        let mut overrides: HashMap<String, SocketAddr> = HashMap::new();
        for (host, addr) in &cfg.resolve {
            let sock = addr
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("resolve `{host}` -> `{addr}`: {e}")))?;
            overrides.insert(host.to_ascii_lowercase(), sock);
        }
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .user_agent(&cfg.user_agent)
            .resolver(move |netloc: &str| -> std::io::Result<Vec<SocketAddr>> {
                let host = netloc.rsplit_once(':').map_or(netloc, |(h, _)| h);
                match overrides.get(&host.to_ascii_lowercase()) {
                    Some(addr) => Ok(vec![*addr]),
                    None => netloc.to_socket_addrs().map(Iterator::collect),
                }
            })
            .build();
        Ok(Fetcher { agent, gate })
    }

    fn get(&self, url: &Url) -> std::result::Result<Fetched, String> {
        self.gate.acquire(url);
        match self.agent.request_url("GET", url).call() {
            Ok(resp) => {
                let final_url = Url::parse(resp.get_url()).unwrap_or_else(|_| url.clone());
                let mut bytes = Vec::new();
                resp.into_reader()
                    .take(MAX_BODY_BYTES)
                    .read_to_end(&mut bytes)
                    .map_err(|e| format!("read error: {e}"))?;
                Ok(Fetched::Page {
                    final_url,
                    body: String::from_utf8_lossy(&bytes).into_owned(),
                })
            }
            Err(ureq::Error::Status(404 | 410, _)) => Ok(Fetched::Missing),
            Err(ureq::Error::Status(code, _)) => Err(format!("http status {code}")),
            Err(ureq::Error::Transport(t)) => Err(format!("transport error: {t}")),
        }
    }

    fn get_page(&self, url: &Url) -> std::result::Result<(Url, String), String> {
        match self.get(url)? {
            Fetched::Page { final_url, body } => Ok((final_url, body)),
            Fetched::Missing => Err("http status 404".into()),
        }
    }
}

#[derive(Default)]
struct SiteResult {
    fetched: usize,
    failed: Vec<FetchFailure>,
    skipped_robots: usize,
    // (target node, anchors)
    out_links: BTreeMap<usize, u64>,
}

fn robots_for(
    fetcher: &Fetcher,
    cache: &mut HashMap<String, Option<texting_robots::Robot>>,
    url: &Url,
    agent: &str,
) -> bool {
    let origin = url.origin().ascii_serialization();
    let robot = cache.entry(origin.clone()).or_insert_with(|| {
        let robots_url = Url::parse(&format!("{origin}/robots.txt")).ok()?;
        match fetcher.get(&robots_url) {
            Ok(Fetched::Page { body, .. }) => texting_robots::Robot::new(agent, body.as_bytes()).ok(),
            _ => None,
        }
    });
    robot.as_ref().is_none_or(|r| r.allowed(url.as_str()))
}

fn crawl_site(cfg: &CrawlConfig, site: usize, resolver: &HostResolver, fetcher: &Fetcher) -> Result<SiteResult> {
    let seed = &cfg.seeds[site];
    let mut result = SiteResult::default();
    let mut robots = HashMap::new();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for url in cfg.entry_urls(seed)? {
        if seen.insert(canonical_page(&url)) {
            queue.push_back((url, 0usize));
        }
    }
    let mut attempted = 0;
    while let Some((url, depth)) = queue.pop_front() {
        if attempted >= cfg.max_pages_per_site {
            break;
        }
        if cfg.respect_robots && !robots_for(fetcher, &mut robots, &url, &cfg.user_agent) {
            result.skipped_robots += 1;
            continue;
        }
        attempted += 1;
        let (final_url, body) = match fetcher.get_page(&url) {
            Ok(page) => page,
            Err(reason) => {
                result.failed.push(FetchFailure {
                    url: url.to_string(),
                    reason,
                });
                continue;
            }
        };
        result.fetched += 1;
        for link in extract_links(&body, &final_url) {
            match resolver.resolve_url(&link) {
                Some(target) if target != site => *result.out_links.entry(target).or_default() += 1,
                Some(_) if depth < cfg.max_depth && seen.insert(canonical_page(&link)) => {
                    queue.push_back((link, depth + 1));
                }
                _ => {}
            }
        }
    }
    Ok(result)
}

/// Crawls every seed and returns the inter-seed link counts.
pub fn crawl(cfg: &CrawlConfig) -> Result<CrawlReport> {
    if cfg.seeds.is_empty() {
        return Err(Error::InvalidConfig("crawl needs at least one seed".into()));
    }
    let nodes = NodeSet::new(cfg.seeds.clone())?;
    if let Some(s) = nodes.nodes().iter().find(|s| s.host_patterns.is_empty()) {
        return Err(Error::InvalidConfig(format!("seed `{}` has no host pattern", s.id)));
    }
    let resolver = HostResolver::new(&nodes);
    let gate = Arc::new(HostGate::new(Duration::from_millis(cfg.per_host_delay_ms)));
    let fetcher = Fetcher::new(cfg, Arc::clone(&gate))?;

    let n = nodes.len();
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<SiteResult>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.clamp(1, n) {
            scope.spawn(|| loop {
                let site = next.fetch_add(1, Ordering::Relaxed);
                if site >= n {
                    break;
                }
                log::info!("crawling {}", nodes.nodes()[site].id);
                let r = crawl_site(cfg, site, &resolver, &fetcher);
                *slots[site].lock().expect("slot poisoned") = Some(r);
            });
        }
    });

    let mut edges = DirectedCountGraph::empty(nodes.ids())?;
    let mut report = CrawlReport {
        fetched: 0,
        failed: Vec::new(),
        skipped_robots: 0,
        dropped_sites: Vec::new(),
        pages_per_site: BTreeMap::new(),
        edges: Vec::new(),
        resolved_edges: DirectedCountGraph::empty(Vec::new())?,
        fetch_log: Vec::new(),
    };
    for (site, slot) in slots.into_iter().enumerate() {
        let r = slot
            .into_inner()
            .expect("slot poisoned")
            .expect("every site is crawled")?;
        let id = &nodes.nodes()[site].id;
        if r.fetched == 0 {
            log::warn!("no fetchable pages for {id}; dropping");
            report.dropped_sites.push(id.clone());
        }
        report.pages_per_site.insert(id.clone(), r.fetched);
        report.fetched += r.fetched;
        report.skipped_robots += r.skipped_robots;
        report.failed.extend(r.failed);
        for (target, count) in r.out_links {
            edges.add(site, target, count);
        }
    }
    report.failed.sort_by(|a, b| a.url.cmp(&b.url));
    report.edges = edges
        .edges()
        .map(|(i, j, count)| EdgeCount {
            src: edges.nodes()[i].clone(),
            dst: edges.nodes()[j].clone(),
            count,
        })
        .collect();
    report.resolved_edges = edges;
    report.fetch_log = std::mem::take(&mut *gate.log.lock().expect("gate poisoned"));
    Ok(report)
}
