//! Structural page features that signal credential harvesting or deception.

mod obfuscation;
mod scanner;

pub use obfuscation::{script_obfuscation_score, ObfuscationConfig};
pub use scanner::{scan, StartTag};

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::features::registrable_domain;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContentFeatures {
    pub form_count: u32,
    pub password_input_count: u32,
    /// Password inputs plus inputs whose name/id matches a sensitive keyword.
    pub sensitive_input_count: u32,
    pub external_form_actions: u32,
    pub script_count: u32,
    pub external_script_ratio: f64,
    pub iframe_count: u32,
    pub hidden_element_count: u32,
    pub meta_refresh_present: bool,
    pub meta_refresh_cross_origin: bool,
    pub external_link_ratio: f64,
    pub max_script_obfuscation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContentConfig {
    pub sensitive_keywords: Vec<String>,
    pub obfuscation: ObfuscationConfig,
}

impl Default for ContentConfig {
    fn default() -> Self {
        ContentConfig {
            sensitive_keywords: [
                "ssn",
                "social_security",
                "card",
                "cvv",
                "cvc",
                "ccnum",
                "iban",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            obfuscation: ObfuscationConfig::default(),
        }
    }
}

enum Target {
    /// Same site, relative, or a non-navigational scheme.
    Internal,
    External,
}

/// Classifies a link-like attribute value relative to the page's registrable domain.
fn classify(value: &str, page_site: &str) -> Target {
    let v = value.trim();
    let absolute = if v.starts_with("//") {
        format!("http:{v}")
    } else {
        let lower = v.get(..8).unwrap_or(v).to_ascii_lowercase();
        if lower.starts_with("http://") || lower.starts_with("https://") {
            v.to_string()
        } else {
            return Target::Internal;
        }
    };
    match url::Url::parse(&absolute)
        .ok()
        .and_then(|u| u.host_str().map(str::to_string))
    {
        Some(host) => {
            let host = host.trim_start_matches('[').trim_end_matches(']');
            if registrable_domain(host) == page_site {
                Target::Internal
            } else {
                Target::External
            }
        }
        None => Target::Internal,
    }
}

fn hidden_style_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"display:none|visibility:hidden|(?:^|;)(?:width|height):[01](?:px)?(?:;|!|$)")
            .expect("static regex")
    })
}

fn is_hidden(tag: &StartTag) -> bool {
    if let Some(style) = tag.attr("style") {
        let compact: String = style
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        if hidden_style_re().is_match(&compact) {
            return true;
        }
    }
    ["width", "height"].iter().any(|a| {
        tag.attr(a)
            .map(|v| {
                matches!(
                    v.trim().to_ascii_lowercase().as_str(),
                    "0" | "1" | "0px" | "1px"
                )
            })
            .unwrap_or(false)
    })
}

fn refresh_target(content: &str) -> Option<&str> {
    let lower = content.to_ascii_lowercase();
    let pos = lower.find("url=")?;
    let t = content[pos + 4..]
        .trim()
        .trim_matches(|c| c == '\'' || c == '"');
    (!t.is_empty()).then_some(t)
}

fn ratio(num: u32, den: u32) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Counts forms, inputs, scripts, frames, hidden elements, refreshes and links.
///
/// Total over any input; malformed regions are skipped by the scanner.
pub fn analyze_html(html: &str, page_host: &str, config: &ContentConfig) -> ContentFeatures {
    let page_site = registrable_domain(page_host);
    let keywords: Vec<String> = config
        .sensitive_keywords
        .iter()
        .map(|k| k.to_ascii_lowercase())
        .collect();
    let mut f = ContentFeatures::default();
    let mut external_scripts = 0u32;
    let mut links = 0u32;
    let mut external_links = 0u32;

    for tag in scan(html) {
        if is_hidden(&tag) {
            f.hidden_element_count += 1;
        }
        match tag.name.as_str() {
            "form" => {
                f.form_count += 1;
                if let Some(action) = tag.attr("action") {
                    if matches!(classify(action, &page_site), Target::External) {
                        f.external_form_actions += 1;
                    }
                }
            }
            "input" => {
                let is_password = tag
                    .attr("type")
                    .is_some_and(|t| t.trim().eq_ignore_ascii_case("password"));
                let keyword_hit = ["name", "id"].iter().filter_map(|a| tag.attr(a)).any(|v| {
                    let v = v.to_ascii_lowercase();
                    keywords.iter().any(|k| v.contains(k.as_str()))
                });
                if is_password {
                    f.password_input_count += 1;
                }
                if is_password || keyword_hit {
                    f.sensitive_input_count += 1;
                }
            }
            "script" => {
                f.script_count += 1;
                match tag.attr("src") {
                    Some(src) if !src.trim().is_empty() => {
                        if matches!(classify(src, &page_site), Target::External) {
                            external_scripts += 1;
                        }
                    }
                    _ => {}
                }
                if let Some(body) = &tag.raw_text {
                    let s = script_obfuscation_score(body, &config.obfuscation);
                    f.max_script_obfuscation = f.max_script_obfuscation.max(s);
                }
            }
            "iframe" => f.iframe_count += 1,
            "meta" => {
                let is_refresh = tag
                    .attr("http-equiv")
                    .is_some_and(|v| v.trim().eq_ignore_ascii_case("refresh"));
                if is_refresh {
                    f.meta_refresh_present = true;
                    if let Some(target) = tag.attr("content").and_then(refresh_target) {
                        if matches!(classify(target, &page_site), Target::External) {
                            f.meta_refresh_cross_origin = true;
                        }
                    }
                }
            }
            "a" => {
                if let Some(href) = tag.attr("href") {
                    let h = href.trim().to_ascii_lowercase();
                    let skip = h.is_empty()
                        || h.starts_with('#')
                        || ["javascript:", "mailto:", "tel:", "data:"]
                            .iter()
                            .any(|p| h.starts_with(p));
                    if !skip {
                        links += 1;
                        if matches!(classify(href, &page_site), Target::External) {
                            external_links += 1;
                        }
                    }
                }
            }
            _ => {}
        }
    }
    f.external_script_ratio = ratio(external_scripts, f.script_count);
    f.external_link_ratio = ratio(external_links, links);
    f
}
