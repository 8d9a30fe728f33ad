use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::env::Observation;

/// Tabular action values keyed by observation and legal-allocation index.
/// Unseen pairs read as 0, which is optimistic since every return is
/// non-positive. Rows are padded with NaN for actions never written.
#[derive(Debug, Clone, Default)]
pub struct QTable {
    values: HashMap<Observation, Vec<f64>>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, obs: &Observation, action: usize) -> f64 {
        self.stored(obs, action).unwrap_or(0.0)
    }

    /// The written value, or `None` if the pair was never written.
    pub fn stored(&self, obs: &Observation, action: usize) -> Option<f64> {
        self.values
            .get(obs)
            .and_then(|v| v.get(action))
            .copied()
            .filter(|v| !v.is_nan())
    }

    pub fn set(&mut self, obs: &Observation, action: usize, value: f64) {
        let row = match self.values.get_mut(obs) {
            Some(row) => row,
            None => self
                .values
                .entry(obs.clone())
                .or_insert_with(|| Vec::with_capacity(action + 1)),
        };
        if row.len() <= action {
            row.resize(action + 1, f64::NAN);
        }
        row[action] = value;
    }

    /// Largest value over actions `0..legal_count`; 0 when there are none.
    pub fn max_value(&self, obs: &Observation, legal_count: usize) -> f64 {
        if legal_count == 0 {
            return 0.0;
        }
        let row = self.values.get(obs).map_or(&[][..], |v| &v[..]);
        let stored = &row[..row.len().min(legal_count)];
        let best = stored
            .iter()
            .map(|&v| if v.is_nan() { 0.0 } else { v })
            .fold(f64::NEG_INFINITY, f64::max);
        if stored.len() < legal_count {
            best.max(0.0)
        } else {
            best
        }
    }

    /// Index of the largest value in `0..legal_count`, lowest index on ties.
    pub fn argmax(&self, obs: &Observation, legal_count: usize) -> Option<usize> {
        if legal_count == 0 {
            return None;
        }
        let row = self.values.get(obs).map_or(&[][..], |v| &v[..]);
        let mut best = 0;
        let value = |a: usize| row.get(a).copied().filter(|v| !v.is_nan()).unwrap_or(0.0);
        let mut best_value = value(0);
        for a in 1..legal_count {
            let v = value(a);
            if v > best_value {
                best = a;
                best_value = v;
            }
        }
        Some(best)
    }

    /// Number of observations with at least one stored value.
    pub fn observation_count(&self) -> usize {
        self.values.len()
    }

    /// Number of written `(observation, action)` values.
    pub fn len(&self) -> usize {
        self.values
            .values()
            .map(|row| row.iter().filter(|v| !v.is_nan()).count())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// All stored values sorted by observation then action.
    pub fn entries(&self) -> Vec<(Observation, usize, f64)> {
        let mut keys: Vec<&Observation> = self.values.keys().collect();
        keys.sort();
        let mut out = Vec::with_capacity(self.len());
        for k in keys {
            for (a, &v) in self.values[k].iter().enumerate() {
                if !v.is_nan() {
                    out.push((k.clone(), a, v));
                }
            }
        }
        out
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (Observation, usize, f64)>) -> Self {
        let mut q = Self::new();
        for (obs, a, v) in entries {
            q.set(&obs, a, v);
        }
        q
    }
}
