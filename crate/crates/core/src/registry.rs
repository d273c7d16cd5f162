//! Name → strategy lookup shared by the pluggable parts of the analysis
//! (error-budget splitting, early-decoding bound variants).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Anything that can sit in a [`Registry`].
pub trait Named {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str {
        ""
    }
}

/// A set of trait objects keyed by their [`Named::name`].
pub struct Registry<T: ?Sized + Named> {
    entries: BTreeMap<&'static str, Arc<T>>,
    kind: &'static str,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            entries: BTreeMap::new(),
            kind,
        }
    }

    /// Registers `item`, replacing any previous entry with the same name.
    pub fn register(&mut self, item: Arc<T>) -> &mut Self {
        self.entries.insert(item.name(), item);
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries.get(name).cloned().ok_or_else(|| {
            Error::Argument(format!(
                "unknown {} '{name}' (available: {})",
                self.kind,
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<T>> {
        self.entries.values()
    }
}
