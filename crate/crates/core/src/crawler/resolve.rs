use url::Url;

use crate::graph::NodeSet;

fn strip_www(host: &str) -> &str {
    host.strip_prefix("www.").unwrap_or(host)
}

/// Maps hostnames to nodes by longest host-pattern suffix, so a
/// subdomain node such as `es.wikipedia.org` wins over `wikipedia.org`.
#[derive(Debug, Clone)]
pub struct HostResolver {
    // (pattern, node index), longest pattern first
    patterns: Vec<(String, usize)>,
    ids: Vec<String>,
}

impl HostResolver {
    pub fn new(nodes: &NodeSet) -> Self {
        let mut patterns: Vec<(String, usize)> = nodes
            .nodes()
            .iter()
            .enumerate()
            .flat_map(|(i, n)| {
                n.host_patterns
                    .iter()
                    .map(move |p| (strip_www(&p.trim().to_ascii_lowercase()).to_string(), i))
            })
            .collect();
        // stable: equal-length patterns keep node order
        patterns.sort_by_key(|p| std::cmp::Reverse(p.0.len()));
        HostResolver {
            patterns,
            ids: nodes.ids(),
        }
    }

    pub fn resolve_host(&self, host: &str) -> Option<usize> {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        let host = strip_www(&host);
        self.patterns
            .iter()
            .find(|(p, _)| {
                host == p
                    || (host.len() > p.len()
                        && host.ends_with(p.as_str())
                        && host.as_bytes()[host.len() - p.len() - 1] == b'.')
            })
            .map(|&(_, i)| i)
    }

    pub fn resolve_url(&self, url: &Url) -> Option<usize> {
        url.host_str().and_then(|h| self.resolve_host(h))
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }
}

/// Node id whose host patterns best match the URL's host, if any.
pub fn resolve_host(url: &Url, nodes: &NodeSet) -> Option<String> {
    let resolver = HostResolver::new(nodes);
    resolver.resolve_url(url).map(|i| resolver.id(i).to_string())
}
