//! Transition records and the growing exploration dataset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `(state, action, next_state)` sample; the atom of the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    #[serde(rename = "s")]
    pub state: Vec<f64>,
    #[serde(rename = "a")]
    pub action: Vec<f64>,
    #[serde(rename = "sp")]
    pub next_state: Vec<f64>,
}

impl Transition {
    pub fn is_finite(&self) -> bool {
        self.state
            .iter()
            .chain(&self.action)
            .chain(&self.next_state)
            .all(|v| v.is_finite())
    }
}

/// Ordered transitions plus the indices where new episodes begin.
/// Boundaries are interior split points: two episodes of five transitions
/// have `records.len() == 10` and `episode_boundaries == [5]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDataset {
    d_s: usize,
    d_a: usize,
    records: Vec<Transition>,
    episode_boundaries: Vec<usize>,
}

impl TransitionDataset {
    pub fn new(d_s: usize, d_a: usize) -> Self {
        Self {
            d_s,
            d_a,
            records: Vec::new(),
            episode_boundaries: Vec::new(),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.d_s
    }

    pub fn action_dim(&self) -> usize {
        self.d_a
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Transition] {
        &self.records
    }

    pub fn episode_boundaries(&self) -> &[usize] {
        &self.episode_boundaries
    }

    fn check(&self, t: &Transition) -> Result<()> {
        if t.state.len() != self.d_s || t.next_state.len() != self.d_s {
            return Err(Error::ShapeMismatch {
                context: "transition state",
                expected: self.d_s,
                got: if t.state.len() != self.d_s {
                    t.state.len()
                } else {
                    t.next_state.len()
                },
            });
        }
        if t.action.len() != self.d_a {
            return Err(Error::ShapeMismatch {
                context: "transition action",
                expected: self.d_a,
                got: t.action.len(),
            });
        }
        if !t.is_finite() {
            return Err(Error::NonFinite {
                context: "transition",
                index: self.records.len(),
            });
        }
        Ok(())
    }

    /// Appends the transitions of one rollout, recording the episode split.
    pub fn append_episode(&mut self, transitions: Vec<Transition>) -> Result<()> {
        for t in &transitions {
            self.check(t)?;
        }
        if !self.records.is_empty() && !transitions.is_empty() {
            self.episode_boundaries.push(self.records.len());
        }
        self.records.extend(transitions);
        Ok(())
    }

    /// Rebuilds a dataset from raw parts (used by the loader).
    pub fn from_parts(
        d_s: usize,
        d_a: usize,
        records: Vec<Transition>,
        episode_boundaries: Vec<usize>,
    ) -> Result<Self> {
        let mut last = 0usize;
        for &b in &episode_boundaries {
            if b <= last && !(last == 0 && b > 0) {
                return Err(Error::InvalidConfig(format!(
                    "episode boundaries must be strictly increasing, got {episode_boundaries:?}"
                )));
            }
            if b >= records.len() {
                return Err(Error::InvalidConfig(format!(
                    "episode boundary {b} out of range for {} records",
                    records.len()
                )));
            }
            last = b;
        }
        let ds = Self {
            d_s,
            d_a,
            records: Vec::new(),
            episode_boundaries,
        };
        let mut ds = ds;
        for t in &records {
            ds.check(t)?;
        }
        ds.records = records;
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: f64) -> Transition {
        Transition {
            state: vec![s, s],
            action: vec![0.0],
            next_state: vec![s + 1.0, s],
        }
    }

    #[test]
    fn boundaries_mark_interior_splits() {
        let mut ds = TransitionDataset::new(2, 1);
        ds.append_episode((0..5).map(|i| t(i as f64)).collect()).unwrap();
        assert!(ds.episode_boundaries().is_empty());
        ds.append_episode((0..5).map(|i| t(i as f64)).collect()).unwrap();
        assert_eq!(ds.len(), 10);
        assert_eq!(ds.episode_boundaries(), &[5]);
    }

    #[test]
    fn dim_mismatch_rejected() {
        let mut ds = TransitionDataset::new(3, 1);
        let r = ds.append_episode(vec![t(0.0)]);
        assert!(matches!(r, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn non_finite_rejected() {
        let mut ds = TransitionDataset::new(2, 1);
        let mut bad = t(0.0);
        bad.next_state[0] = f64::NAN;
        assert!(matches!(
            ds.append_episode(vec![bad]),
            Err(Error::NonFinite { .. })
        ));
    }
}
