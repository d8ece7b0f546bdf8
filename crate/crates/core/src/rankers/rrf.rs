//! Reciprocal rank fusion: `score(d) = sum over lists L containing d of
//! 1 / (k + rank(d, L))`, ranks 1-based. Lists that do not contain `d`
//! contribute nothing.

use std::collections::HashMap;

use crate::ranking::{sort_entries, RankedList, RankerId, Scored};
use crate::time::Timestamp;

use super::RankError;

pub const DEFAULT_RRF_K: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RrfConfig {
    k: f64,
    members: Vec<RankerId>,
}

impl RrfConfig {
    pub fn new(k: f64, members: Vec<RankerId>) -> Result<Self, RankError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(RankError::InvalidRrf(format!("k must be positive, got {k}")));
        }
        if members.is_empty() {
            return Err(RankError::InvalidRrf("no member rankers".into()));
        }
        Ok(Self { k, members })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn members(&self) -> &[RankerId] {
        &self.members
    }
}

/// Fuses `lists` into one list tagged [`RankerId::RrfComposite`].
///
/// Each article's reciprocal-rank terms are summed in ascending order so
/// the fused score does not depend on the order the lists are given in. A
/// list that repeats an article counts only its best rank.
pub fn rrf_fuse<F>(lists: &[RankedList], config: &RrfConfig, published: F) -> Result<RankedList, RankError>
where
    F: Fn(&str) -> Timestamp,
{
    let first = lists.first().ok_or(RankError::EmptyFusion)?;
    let mut terms: HashMap<&str, Vec<f64>> = HashMap::new();
    for list in lists {
        let mut seen = std::collections::HashSet::new();
        for (pos, e) in list.entries.iter().enumerate() {
            if seen.insert(e.article_id.as_str()) {
                terms
                    .entry(e.article_id.as_str())
                    .or_default()
                    .push(1.0 / (config.k + (pos + 1) as f64));
            }
        }
    }
    let mut entries: Vec<Scored> = terms
        .into_iter()
        .map(|(id, mut t)| {
            t.sort_by(f64::total_cmp);
            Scored::new(id, t.iter().sum())
        })
        .collect();
    sort_entries(&mut entries, published);
    Ok(RankedList::new(first.qid.clone(), RankerId::RrfComposite, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rankers::tests::list;

    fn fixed_time(_: &str) -> Timestamp {
        Timestamp::from_secs(0)
    }

    fn cfg() -> RrfConfig {
        RrfConfig::new(DEFAULT_RRF_K, vec![RankerId::Bm25, RankerId::Semantic, RankerId::Recency]).unwrap()
    }

    fn score(l: &RankedList, id: &str) -> f64 {
        l.entries.iter().find(|e| e.article_id == id).unwrap().score
    }

    #[test]
    fn top_of_three_lists() {
        let fused = rrf_fuse(&[list(&["a", "b"]), list(&["a", "c"]), list(&["a"])], &cfg(), fixed_time).unwrap();
        let s = score(&fused, "a");
        assert_eq!(s, 1.0 / 61.0 + 1.0 / 61.0 + 1.0 / 61.0);
        assert!((s - 3.0 / 61.0).abs() <= 2.0 * f64::EPSILON * s);
        assert!((s - 0.049_180_3).abs() < 1e-7);
        assert_eq!(fused.entries[0].article_id, "a");
    }

    #[test]
    fn ranks_two_and_five() {
        let fused = rrf_fuse(&[list(&["x", "d"]), list(&["x", "y", "z", "w", "d"])], &cfg(), fixed_time).unwrap();
        let s = score(&fused, "d");
        assert_eq!(s, 1.0 / 65.0 + 1.0 / 62.0);
        assert!((s - 0.031_513_6).abs() < 1e-7);
    }

    #[test]
    fn absent_articles_contribute_nothing() {
        let fused = rrf_fuse(&[list(&["a", "b"]), list(&["c"])], &cfg(), fixed_time).unwrap();
        assert_eq!(score(&fused, "b"), 1.0 / 62.0);
        assert_eq!(fused.len(), 3);
    }

    #[test]
    fn self_fusion_preserves_order() {
        let l = list(&["e", "b", "d", "a", "c"]);
        let fused = rrf_fuse(&[l.clone(), l.clone()], &cfg(), fixed_time).unwrap();
        assert_eq!(fused.ids().collect::<Vec<_>>(), l.ids().collect::<Vec<_>>());
    }

    #[test]
    fn errors() {
        assert!(matches!(rrf_fuse(&[], &cfg(), fixed_time), Err(RankError::EmptyFusion)));
        assert!(RrfConfig::new(0.0, vec![RankerId::Bm25]).is_err());
        assert!(RrfConfig::new(60.0, vec![]).is_err());
    }
}
