//! URL-side and domain-side feature extraction.

mod domain;
mod lexical;
mod suffix;
mod url;

pub use self::domain::{
    domain_metadata, DomainMetadata, DomainRecord, FixtureProvider, MetadataProvider, NullProvider,
    ProviderError, DEFAULT_YOUNG_DAYS,
};
pub use self::lexical::{
    digit_ratio, lexical_features, shannon_entropy, UrlLexicalFeatures, DEFAULT_SUSPICIOUS_TLDS,
};
pub use self::suffix::{registrable_domain, PublicSuffixList};
pub use self::url::{canonicalize, parse_url, UrlParts};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UrlError {
    #[error("malformed_url: {0}")]
    MalformedUrl(String),
    #[error("unsupported_scheme: {0}")]
    UnsupportedScheme(String),
}

impl UrlError {
    /// Machine-readable code used in API error bodies and CLI messages.
    pub fn code(&self) -> &'static str {
        match self {
            UrlError::MalformedUrl(_) => "malformed_url",
            UrlError::UnsupportedScheme(_) => "unsupported_scheme",
        }
    }
}
