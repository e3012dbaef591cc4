//! Name-keyed registries of interchangeable strategies.

use crate::error::{Error, Result};

struct Entry<F: ?Sized> {
    name: &'static str,
    summary: &'static str,
    factory: Box<F>,
}

/// Factories registered under short names, looked up at runtime from CLI
/// flags or configuration. `F` is usually a `dyn Fn(..) -> Result<Box<dyn Trait>>`.
pub struct Registry<F: ?Sized> {
    kind: &'static str,
    entries: Vec<Entry<F>>,
}

impl<F: ?Sized> Registry<F> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any earlier entry.
    pub fn register(&mut self, name: &'static str, summary: &'static str, factory: Box<F>) {
        self.entries.retain(|e| e.name != name);
        self.entries.push(Entry {
            name,
            summary,
            factory,
        });
    }

    pub fn get(&self, name: &str) -> Result<&F> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| e.factory.as_ref())
            .ok_or_else(|| Error::UnknownName {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }

    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|e| (e.name, e.summary)).collect()
    }
}
