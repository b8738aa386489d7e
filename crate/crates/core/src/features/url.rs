use serde::{Deserialize, Serialize};
use url::{Host, Url};

use super::suffix::registrable_domain;
use super::UrlError;

/// Decomposed http(s) URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlParts {
    pub scheme: String,
    /// Lowercase; IPv6 literals keep their brackets.
    pub host: String,
    pub host_is_ip: bool,
    pub registrable_domain: String,
    pub subdomain_count: u32,
    pub path: String,
    pub query: String,
    /// Explicit non-default port.
    pub port: Option<u16>,
}

fn parse_http(raw: &str) -> Result<Url, UrlError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(UrlError::MalformedUrl("empty url".into()));
    }
    let url = Url::parse(raw).map_err(|e| UrlError::MalformedUrl(format!("{raw}: {e}")))?;
    match url.scheme() {
        "http" | "https" => {}
        other => return Err(UrlError::UnsupportedScheme(other.to_string())),
    }
    if url.host().is_none() {
        return Err(UrlError::MalformedUrl(format!("{raw}: missing host")));
    }
    Ok(url)
}

pub fn parse_url(raw: &str) -> Result<UrlParts, UrlError> {
    let url = parse_http(raw)?;
    let (host, host_is_ip) = match url.host() {
        Some(Host::Domain(d)) => (d.trim_end_matches('.').to_ascii_lowercase(), false),
        Some(Host::Ipv4(ip)) => (ip.to_string(), true),
        Some(Host::Ipv6(ip)) => (format!("[{ip}]"), true),
        None => unreachable!("checked in parse_http"),
    };
    let (registrable, subdomain_count) = if host_is_ip {
        (host.clone(), 0)
    } else {
        let reg = registrable_domain(&host);
        let total = host.split('.').filter(|l| !l.is_empty()).count();
        let reg_labels = reg.split('.').filter(|l| !l.is_empty()).count();
        (reg, total.saturating_sub(reg_labels) as u32)
    };
    Ok(UrlParts {
        scheme: url.scheme().to_string(),
        host,
        host_is_ip,
        registrable_domain: registrable,
        subdomain_count,
        path: url.path().to_string(),
        query: url.query().unwrap_or("").to_string(),
        port: url.port(),
    })
}

/// Canonical cache key: lowercase scheme and host, default port dropped, fragment
/// dropped, path and query as serialized by the URL parser.
pub fn canonicalize(raw: &str) -> Result<String, UrlError> {
    let mut url = parse_http(raw)?;
    url.set_fragment(None);
    Ok(url.to_string())
}
