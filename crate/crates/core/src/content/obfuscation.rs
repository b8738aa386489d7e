use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::features::shannon_entropy;

/// Weights and saturation points for [`script_obfuscation_score`].
///
/// ```text
/// score = clip01( w_eval    * [eval( or Function( present]
///               + w_escape  * min(1, escapes_per_char / escape_saturation)
///               + w_concat  * min(1, literal_joins_per_char / concat_saturation)
///               + w_entropy * [len >= entropy_min_len and H(chars) > entropy_threshold] )
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObfuscationConfig {
    pub eval_weight: f64,
    pub escape_weight: f64,
    pub concat_weight: f64,
    pub entropy_weight: f64,
    pub escape_saturation: f64,
    pub concat_saturation: f64,
    pub entropy_threshold: f64,
    pub entropy_min_len: usize,
}

impl Default for ObfuscationConfig {
    fn default() -> Self {
        ObfuscationConfig {
            eval_weight: 0.35,
            escape_weight: 0.25,
            concat_weight: 0.2,
            entropy_weight: 0.2,
            escape_saturation: 0.05,
            concat_saturation: 0.01,
            entropy_threshold: 5.2,
            entropy_min_len: 64,
        }
    }
}

struct Patterns {
    eval: Regex,
    escape: Regex,
    concat: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        eval: Regex::new(r"\beval\s*\(|\bFunction\s*\(").expect("static regex"),
        escape: Regex::new(
            r"\\x[0-9a-fA-F]{2}|\\u[0-9a-fA-F]{4}|\\u\{[0-9a-fA-F]+\}|%u[0-9a-fA-F]{4}",
        )
        .expect("static regex"),
        concat: Regex::new(r#"["'`]\s*\+\s*["'`]"#).expect("static regex"),
    })
}

pub fn script_obfuscation_score(script: &str, cfg: &ObfuscationConfig) -> f64 {
    let len = script.chars().count();
    if len == 0 {
        return 0.0;
    }
    let p = patterns();
    let n = len as f64;
    let eval = if p.eval.is_match(script) { 1.0 } else { 0.0 };
    let escapes = p.escape.find_iter(script).count() as f64 / n;
    let joins = p.concat.find_iter(script).count() as f64 / n;
    let entropy = if len >= cfg.entropy_min_len && shannon_entropy(script) > cfg.entropy_threshold {
        1.0
    } else {
        0.0
    };
    let saturate = |x: f64, at: f64| if at <= 0.0 { 0.0 } else { (x / at).min(1.0) };
    let score = cfg.eval_weight * eval
        + cfg.escape_weight * saturate(escapes, cfg.escape_saturation)
        + cfg.concat_weight * saturate(joins, cfg.concat_saturation)
        + cfg.entropy_weight * entropy;
    score.clamp(0.0, 1.0)
}
