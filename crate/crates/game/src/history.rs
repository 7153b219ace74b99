use serde::{Deserialize, Serialize};

/// The sequence of world states observed so far.
///
/// States are stored oldest first; [`StateHistory::recent_first`] yields them
/// in the most-recent-first order used when writing a history as
/// `[s_t, ..., s_1]`. Ordering between histories is lexicographic over the
/// chronological sequence, which is the tie-break used by MAP estimation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateHistory<S> {
    states: Vec<S>,
}

impl<S> StateHistory<S> {
    pub fn new(initial: S) -> Self {
        Self { states: vec![initial] }
    }

    /// Returns `None` for an empty sequence; histories are never empty.
    pub fn from_states(states: Vec<S>) -> Option<Self> {
        if states.is_empty() {
            None
        } else {
            Some(Self { states })
        }
    }

    pub fn push(&mut self, state: S) {
        self.states.push(state);
    }

    pub fn current(&self) -> &S {
        self.states.last().expect("history is never empty")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Oldest first.
    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn recent_first(&self) -> impl Iterator<Item = &S> {
        self.states.iter().rev()
    }

    pub(crate) fn truncate(&mut self, len: usize) {
        debug_assert!(len >= 1);
        self.states.truncate(len);
    }
}
