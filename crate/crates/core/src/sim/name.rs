//! Hierarchical content names and the constructors for every message family
//! the protocol uses.

use serde::Serialize;
use std::fmt;

/// A slash-delimited hierarchical name with a nonempty component list.
/// Round-trips through its canonical text form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Name(Vec<String>);

impl Name {
    pub fn new(components: Vec<String>) -> Self {
        assert!(!components.is_empty(), "names need at least one component");
        Self(components)
    }

    pub fn components(&self) -> &[String] {
        &self.0
    }

    /// Parse `/a/b/c`; empty components are rejected.
    pub fn parse(text: &str) -> Option<Self> {
        let trimmed = text.strip_prefix('/')?;
        if trimmed.is_empty() {
            return None;
        }
        let parts: Vec<String> = trimmed.split('/').map(str::to_string).collect();
        if parts.iter().any(String::is_empty) {
            return None;
        }
        Some(Self(parts))
    }

    /// `/ndn/video/<title>/RangeInterest/chunk=<seq>[/nonce=<val>]`
    pub fn range_interest(title: &str, seq: u64, nonce: Option<u64>) -> Self {
        let mut parts = vec![
            "ndn".into(),
            "video".into(),
            title.into(),
            "RangeInterest".into(),
            format!("chunk={seq}"),
        ];
        if let Some(n) = nonce {
            parts.push(format!("nonce={n}"));
        }
        Self(parts)
    }

    /// `/ndn/video/<title>/<res>/chunk=<seq>` where `res` is e.g. `1080p`.
    pub fn video_data(title: &str, res: &str, seq: u64) -> Self {
        Self(vec![
            "ndn".into(),
            "video".into(),
            title.into(),
            res.into(),
            format!("chunk={seq}"),
        ])
    }

    /// `/ndn/opt/report/forwarder=<id>/i=<interval>`
    pub fn opt_report(forwarder: u32, interval: u64) -> Self {
        Self(vec![
            "ndn".into(),
            "opt".into(),
            "report".into(),
            format!("forwarder={forwarder}"),
            format!("i={interval}"),
        ])
    }

    /// `/ndn/opt/config/forwarder=<id>/v=<version>`
    pub fn opt_config(forwarder: u32, version: u64) -> Self {
        Self(vec![
            "ndn".into(),
            "opt".into(),
            "config".into(),
            format!("forwarder={forwarder}"),
            format!("v={version}"),
        ])
    }

    /// `/ndn/comets/state/node/<id>/<var>/<level>/v=<t>`
    pub fn state_exchange(node: u32, var: &str, level: usize, version: u64) -> Self {
        Self(vec![
            "ndn".into(),
            "comets".into(),
            "state".into(),
            "node".into(),
            node.to_string(),
            var.into(),
            level.to_string(),
            format!("v={version}"),
        ])
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "/{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_roundtrip() {
        let names = [
            Name::range_interest("video1", 3, Some(81)),
            Name::range_interest("video1", 0, None),
            Name::video_data("video1", "1080p", 12),
            Name::opt_report(4, 2),
            Name::opt_config(4, 7),
            Name::state_exchange(9, "lambda1", 3, 15),
        ];
        for n in names {
            let text = n.to_string();
            assert_eq!(Name::parse(&text), Some(n.clone()), "{text}");
        }
    }

    #[test]
    fn expected_text_forms() {
        assert_eq!(
            Name::range_interest("t", 5, Some(7)).to_string(),
            "/ndn/video/t/RangeInterest/chunk=5/nonce=7"
        );
        assert_eq!(
            Name::video_data("t", "2160p", 9).to_string(),
            "/ndn/video/t/2160p/chunk=9"
        );
        assert_eq!(
            Name::opt_config(3, 1).to_string(),
            "/ndn/opt/config/forwarder=3/v=1"
        );
        assert_eq!(
            Name::state_exchange(2, "lambda2", 1, 4).to_string(),
            "/ndn/comets/state/node/2/lambda2/1/v=4"
        );
    }

    #[test]
    fn malformed_text_is_rejected() {
        assert_eq!(Name::parse(""), None);
        assert_eq!(Name::parse("/"), None);
        assert_eq!(Name::parse("no-slash"), None);
        assert_eq!(Name::parse("/a//b"), None);
    }
}
