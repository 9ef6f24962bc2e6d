//! Extension-function signatures.
//!
//! Level 0 is the base theory; levels 1..=n hold the extension functions
//! introduced by each theory extension in the chain. Arity-0 declarations
//! are legal (constant parameters) and behave as constants that belong to
//! the signature rather than the free-constant pool.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncDecl {
    pub name: String,
    pub arity: usize,
    pub level: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    funcs: BTreeMap<String, FuncDecl>,
    num_levels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SignatureError {
    Duplicate(String),
    ReservedName(String),
}

impl fmt::Display for SignatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignatureError::Duplicate(n) => write!(f, "symbol `{n}` declared twice"),
            SignatureError::ReservedName(n) => write!(f, "symbol name `{n}` is reserved"),
        }
    }
}

impl std::error::Error for SignatureError {}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: &str, arity: usize, level: usize) -> Result<(), SignatureError> {
        if name.starts_with('#') || name == "+" || name == "*" {
            return Err(SignatureError::ReservedName(name.to_string()));
        }
        if self.funcs.contains_key(name) {
            return Err(SignatureError::Duplicate(name.to_string()));
        }
        self.funcs.insert(
            name.to_string(),
            FuncDecl { name: name.to_string(), arity, level },
        );
        self.num_levels = self.num_levels.max(level);
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<&FuncDecl> {
        self.funcs.get(name)
    }

    pub fn is_extension(&self, name: &str) -> bool {
        self.funcs.contains_key(name)
    }

    pub fn level_of(&self, name: &str) -> Option<usize> {
        self.funcs.get(name).map(|d| d.level)
    }

    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn symbols_at(&self, level: usize) -> impl Iterator<Item = &FuncDecl> {
        self.funcs.values().filter(move |d| d.level == level)
    }

    pub fn all(&self) -> impl Iterator<Item = &FuncDecl> {
        self.funcs.values()
    }
}
