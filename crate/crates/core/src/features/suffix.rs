use std::collections::HashSet;
use std::sync::OnceLock;

const BUNDLED: &str = include_str!("../../data/public_suffix.dat");

/// Public-suffix rules loaded from the bundled snapshot.
///
/// Matching follows the usual algorithm: the longest matching rule wins, exception
/// rules (`!`) beat wildcards, and an unlisted TLD is treated as a suffix of its own.
#[derive(Debug, Default)]
pub struct PublicSuffixList {
    rules: HashSet<String>,
    wildcards: HashSet<String>,
    exceptions: HashSet<String>,
}

impl PublicSuffixList {
    pub fn parse(text: &str) -> Self {
        let mut list = PublicSuffixList::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            let rule = line.to_ascii_lowercase();
            if let Some(rest) = rule.strip_prefix('!') {
                list.exceptions.insert(rest.to_string());
            } else if let Some(rest) = rule.strip_prefix("*.") {
                list.wildcards.insert(rest.to_string());
            } else {
                list.rules.insert(rule);
            }
        }
        list
    }

    pub fn bundled() -> &'static PublicSuffixList {
        static LIST: OnceLock<PublicSuffixList> = OnceLock::new();
        LIST.get_or_init(|| PublicSuffixList::parse(BUNDLED))
    }

    pub fn len(&self) -> usize {
        self.rules.len() + self.wildcards.len() + self.exceptions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of trailing labels forming the public suffix of `labels`.
    fn suffix_len(&self, labels: &[&str]) -> usize {
        let n = labels.len();
        let mut best = 1;
        for start in (0..n).rev() {
            let candidate = labels[start..].join(".");
            let len = n - start;
            if self.exceptions.contains(&candidate) {
                // An exception makes the name itself registrable.
                return len - 1;
            }
            if self.rules.contains(&candidate) {
                best = best.max(len);
            }
            if start > 0 && self.wildcards.contains(&candidate) {
                best = best.max(len + 1);
            }
        }
        best
    }

    /// The public suffix plus one label. A host that is itself a public suffix is
    /// returned unchanged.
    pub fn registrable_domain(&self, host: &str) -> String {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        let labels: Vec<&str> = host.split('.').filter(|l| !l.is_empty()).collect();
        if labels.len() <= 1 {
            return host;
        }
        let suffix = self.suffix_len(&labels);
        if suffix >= labels.len() {
            return host;
        }
        labels[labels.len() - suffix - 1..].join(".")
    }
}

/// Registrable domain of `host` under the bundled snapshot.
pub fn registrable_domain(host: &str) -> String {
    PublicSuffixList::bundled().registrable_domain(host)
}
