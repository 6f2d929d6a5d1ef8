use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

/// A finite ordered set of distinct symbol labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::Validation("alphabet must have at least one symbol".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::Validation(format!("duplicate symbol `{s}` in alphabet")));
            }
        }
        Ok(Self { symbols })
    }

    /// Alphabet labelled `"0"`, `"1"`, ..., `"n-1"`.
    pub fn indexed(n: usize) -> Self {
        assert!(n > 0, "alphabet size must be positive");
        Self {
            symbols: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    pub fn binary() -> Self {
        Self::indexed(2)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Always false; alphabets are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, index: usize) -> Option<&str> {
        self.symbols.get(index).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == label)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }
}

/// Who generates a variable, and whether the other party sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IoType {
    Output,
    DisclosedInput,
    /// A latent input: generated by the other system and never observed.
    UndisclosedInput,
}

impl IoType {
    pub fn is_observable(self) -> bool {
        !matches!(self, IoType::UndisclosedInput)
    }
}

/// Role of a variable in the sequence-level variational problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VpMode {
    Controlled,
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VariableSpec {
    pub name: String,
    pub alphabet: Alphabet,
    pub io_type: IoType,
    pub vp_mode: VpMode,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, alphabet: Alphabet, io_type: IoType, vp_mode: VpMode) -> Self {
        Self {
            name: name.into(),
            alphabet,
            io_type,
            vp_mode,
        }
    }

    /// A disclosed, estimated variable; the common case for plain probability models.
    pub fn input(name: impl Into<String>, alphabet: Alphabet) -> Self {
        Self::new(name, alphabet, IoType::DisclosedInput, VpMode::Estimated)
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }
}

/// A realized prefix `x_1 .. x_t` as symbol indices. The empty history is `ε`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History(Vec<usize>);

impl History {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn push(&mut self, symbol: usize) {
        self.0.push(symbol);
    }

    pub fn extended(&self, symbol: usize) -> Self {
        let mut h = self.clone();
        h.push(symbol);
        h
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for History {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for History {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl From<&[usize]> for History {
    fn from(v: &[usize]) -> Self {
        Self(v.to_vec())
    }
}

impl<const N: usize> From<[usize; N]> for History {
    fn from(v: [usize; N]) -> Self {
        Self(v.to_vec())
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}
