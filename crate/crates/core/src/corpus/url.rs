//! Link-target canonicalization.
//!
//! Rules, applied in order: trim surrounding whitespace, drop the fragment,
//! lowercase scheme and host, drop tracking query parameters, strip trailing
//! slashes from the path. Nothing else is rewritten.

/// Query keys dropped during canonicalization. Any `utm_*` key is dropped too.
pub const TRACKING_PARAMS: &[&str] = &[
    "cmp", "fbclid", "gclid", "dclid", "msclkid", "mc_cid", "mc_eid", "cmpid", "icid", "wpisrc", "wpmm",
];

fn is_tracking(key: &str) -> bool {
    let key = key.to_ascii_lowercase();
    key.starts_with("utm_") || TRACKING_PARAMS.contains(&key.as_str())
}

pub fn canonicalize_url(raw: &str) -> String {
    let s = raw.trim();
    let s = s.split_once('#').map_or(s, |(head, _)| head);
    let (before_query, query) = match s.split_once('?') {
        Some((head, q)) => (head, Some(q)),
        None => (s, None),
    };

    let (scheme, rest) = match before_query.split_once("://") {
        Some((scheme, rest)) => (Some(scheme.to_ascii_lowercase()), rest),
        None => (None, before_query),
    };
    let (host, path) = match scheme {
        Some(_) => match rest.find('/') {
            Some(pos) => (rest[..pos].to_ascii_lowercase(), &rest[pos..]),
            None => (rest.to_ascii_lowercase(), ""),
        },
        None => (String::new(), rest),
    };
    let path = path.trim_end_matches('/');

    let mut out = String::with_capacity(s.len());
    if let Some(scheme) = scheme {
        out.push_str(&scheme);
        out.push_str("://");
        out.push_str(&host);
    }
    out.push_str(path);

    if let Some(q) = query {
        let kept: Vec<&str> = q
            .split('&')
            .filter(|pair| !pair.is_empty())
            .filter(|pair| !is_tracking(pair.split('=').next().unwrap_or("")))
            .collect();
        if !kept.is_empty() {
            out.push('?');
            out.push_str(&kept.join("&"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    // One row per rule, then combinations.
    const FIXTURE: &[(&str, &str)] = &[
        ("https://news.example.com/world/story", "https://news.example.com/world/story"),
        ("  https://news.example.com/a  ", "https://news.example.com/a"),
        ("https://news.example.com/a#comments", "https://news.example.com/a"),
        ("HTTPS://News.Example.COM/World/Story", "https://news.example.com/World/Story"),
        ("https://news.example.com/a?utm_source=tw&utm_medium=social", "https://news.example.com/a"),
        ("https://news.example.com/a?id=7&fbclid=xyz", "https://news.example.com/a?id=7"),
        ("https://news.example.com/a?CMP=share_btn_tw", "https://news.example.com/a"),
        ("https://news.example.com/a?wpisrc=nl&wpmm=1&page=2", "https://news.example.com/a?page=2"),
        ("https://news.example.com/a/", "https://news.example.com/a"),
        ("https://news.example.com/a//", "https://news.example.com/a"),
        ("https://news.example.com/", "https://news.example.com"),
        ("https://news.example.com", "https://news.example.com"),
        ("https://news.example.com/a/?id=7", "https://news.example.com/a?id=7"),
        ("HTTP://Example.com/a/?utm_campaign=x#top", "http://example.com/a"),
        ("/relative/path/", "/relative/path"),
    ];

    #[test]
    fn canonicalization_fixture() {
        for (raw, expected) in FIXTURE {
            assert_eq!(canonicalize_url(raw), *expected, "input {raw:?}");
        }
    }

    #[test]
    fn canonicalization_is_idempotent() {
        for (raw, _) in FIXTURE {
            let once = canonicalize_url(raw);
            assert_eq!(canonicalize_url(&once), once);
        }
    }
}
