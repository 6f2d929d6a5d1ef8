use crate::error::{Error, Result};
use crate::numeric::{one_hot, validate_distribution};

use super::alphabet::{History, VariableSpec};

/// Upper bound on the number of full sequences a dense model may span.
pub const MAX_SEQUENCES: usize = 1 << 22;

/// Mixed-radix indexing of histories over a fixed sequence of alphabets.
///
/// The first variable is the most significant digit, so the index of
/// `x_{<=t}` is `index(x_{<t}) * |X_t| + x_t` and the children of a prefix
/// occupy one contiguous block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceLayout {
    sizes: Vec<usize>,
    prefix_counts: Vec<usize>,
}

impl SequenceLayout {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        let mut prefix_counts = Vec::with_capacity(sizes.len() + 1);
        let mut count: usize = 1;
        prefix_counts.push(1);
        for &s in &sizes {
            if s == 0 {
                return Err(Error::Validation("alphabet of size zero".into()));
            }
            count = count
                .checked_mul(s)
                .filter(|&c| c <= MAX_SEQUENCES)
                .ok_or_else(|| Error::Capacity {
                    required: sizes.iter().map(|&s| s as u128).product(),
                    limit: MAX_SEQUENCES as u128,
                })?;
            prefix_counts.push(count);
        }
        Ok(Self {
            sizes,
            prefix_counts,
        })
    }

    /// Number of variables.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of distinct histories of length `t`.
    pub fn count(&self, t: usize) -> usize {
        self.prefix_counts[t]
    }

    pub fn num_sequences(&self) -> usize {
        self.prefix_counts[self.sizes.len()]
    }

    /// Index of a prefix; indices must already be valid.
    pub fn index(&self, history: &[usize]) -> usize {
        history
            .iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&x, &s)| acc * s + x)
    }

    /// Inverse of [`SequenceLayout::index`] for prefixes of length `t`.
    pub fn decode(&self, t: usize, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; t];
        for k in (0..t).rev() {
            out[k] = index % self.sizes[k];
            index /= self.sizes[k];
        }
        out
    }

    pub fn check(&self, history: &[usize], names: &[VariableSpec]) -> Result<()> {
        if history.len() > self.sizes.len() {
            return Err(Error::LengthMismatch {
                expected: self.sizes.len(),
                got: history.len(),
            });
        }
        for (t, (&x, &s)) in history.iter().zip(&self.sizes).enumerate() {
            if x >= s {
                return Err(Error::InvalidSymbol {
                    variable: names[t].name.clone(),
                    index: x,
                    size: s,
                });
            }
        }
        Ok(())
    }
}

/// A conditional distribution `P(X_t | x_<t)` stored densely over all histories `x_<t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistTable {
    variable: VariableSpec,
    parent_sizes: Vec<usize>,
    probs: Vec<f64>,
}

impl DistTable {
    /// Builds a table from one probability row per parent history, in layout order.
    pub fn new(variable: VariableSpec, parent_sizes: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let histories: usize = parent_sizes.iter().product();
        if rows.len() != histories {
            return Err(Error::Validation(format!(
                "table for `{}` has {} rows, expected {histories}",
                variable.name,
                rows.len()
            )));
        }
        let size = variable.size();
        let parents = SequenceLayout::new(parent_sizes.clone())?;
        let mut probs = Vec::with_capacity(histories * size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::Validation(format!(
                    "table for `{}` row {i} has {} entries, expected {size}",
                    variable.name,
                    row.len()
                )));
            }
            let ctx = format!(
                "table `{}` row {i} (history {})",
                variable.name,
                History::from(parents.decode(parent_sizes.len(), i))
            );
            probs.extend(validate_distribution(row, &ctx)?);
        }
        Ok(Self {
            variable,
            parent_sizes,
            probs,
        })
    }

    pub(crate) fn from_flat_unchecked(variable: VariableSpec, parent_sizes: Vec<usize>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(
            probs.len(),
            parent_sizes.iter().product::<usize>() * variable.size()
        );
        Self {
            variable,
            parent_sizes,
            probs,
        }
    }

    pub fn variable(&self) -> &VariableSpec {
        &self.variable
    }

    pub fn num_histories(&self) -> usize {
        self.probs.len() / self.variable.size()
    }

    /// Row by parent-history index.
    pub fn row(&self, history_index: usize) -> &[f64] {
        let n = self.variable.size();
        &self.probs[history_index * n..(history_index + 1) * n]
    }

    /// Row for an explicit parent history.
    pub fn get(&self, history: &[usize]) -> Result<&[f64]> {
        if history.len() != self.parent_sizes.len() {
            return Err(Error::LengthMismatch {
                expected: self.parent_sizes.len(),
                got: history.len(),
            });
        }
        let mut idx = 0;
        for (&x, &s) in history.iter().zip(&self.parent_sizes) {
            if x >= s {
                return Err(Error::Validation(format!("history symbol {x} out of range {s}")));
            }
            idx = idx * s + x;
        }
        Ok(self.row(idx))
    }

    pub fn prob(&self, history: &[usize], symbol: usize) -> Result<f64> {
        let row = self.get(history)?;
        row.get(symbol).copied().ok_or_else(|| Error::InvalidSymbol {
            variable: self.variable.name.clone(),
            index: symbol,
            size: row.len(),
        })
    }

    /// `log2 P(x_t | x_<t)`; `-inf` for impossible symbols.
    pub fn log2_prob(&self, history: &[usize], symbol: usize) -> Result<f64> {
        self.prob(history, symbol).map(f64::log2)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.variable.size())
    }

    pub(crate) fn flat(&self) -> &[f64] {
        &self.probs
    }
}

/// An ordered list of typed variables with one conditional table per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalModel {
    variables: Vec<VariableSpec>,
    layout: SequenceLayout,
    tables: Vec<DistTable>,
}

impl CausalModel {
    /// `rows[t][h]` is the distribution of variable `t` after the `h`-th history
    /// of the preceding variables (mixed-radix order, first variable most significant).
    pub fn from_rows(variables: Vec<VariableSpec>, rows: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if rows.len() != variables.len() {
            return Err(Error::Validation(format!(
                "{} tables for {} variables",
                rows.len(),
                variables.len()
            )));
        }
        let layout = SequenceLayout::new(variables.iter().map(VariableSpec::size).collect())?;
        let tables = variables
            .iter()
            .zip(rows)
            .enumerate()
            .map(|(t, (v, r))| DistTable::new(v.clone(), layout.sizes()[..t].to_vec(), r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            variables,
            layout,
            tables,
        })
    }

    /// Builds every conditional by calling `f(t, x_<t)`.
    pub fn from_fn<F>(variables: Vec<VariableSpec>, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[usize]) -> Vec<f64>,
    {
        let layout = SequenceLayout::new(variables.iter().map(VariableSpec::size).collect())?;
        let rows = (0..variables.len())
            .map(|t| {
                (0..layout.count(t))
                    .map(|h| f(t, &layout.decode(t, h)))
                    .collect()
            })
            .collect();
        Self::from_rows(variables, rows)
    }

    pub fn from_tables(variables: Vec<VariableSpec>, tables: Vec<DistTable>) -> Result<Self> {
        let layout = SequenceLayout::new(variables.iter().map(VariableSpec::size).collect())?;
        if tables.len() != variables.len() {
            return Err(Error::Validation("one table per variable required".into()));
        }
        for (t, (v, table)) in variables.iter().zip(&tables).enumerate() {
            if table.variable() != v || table.parent_sizes != layout.sizes()[..t] {
                return Err(Error::StructureMismatch(format!(
                    "table {t} is not conditioned on exactly the variables before `{}`",
                    v.name
                )));
            }
        }
        Ok(Self {
            variables,
            layout,
            tables,
        })
    }

    pub(crate) fn from_flat_unchecked(variables: Vec<VariableSpec>, layout: SequenceLayout, flats: Vec<Vec<f64>>) -> Self {
        let tables = variables
            .iter()
            .zip(flats)
            .enumerate()
            .map(|(t, (v, p))| DistTable::from_flat_unchecked(v.clone(), layout.sizes()[..t].to_vec(), p))
            .collect();
        Self {
            variables,
            layout,
            tables,
        }
    }

    /// Number of variables `T`.
    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn variable(&self, t: usize) -> &VariableSpec {
        &self.variables[t]
    }

    pub fn layout(&self) -> &SequenceLayout {
        &self.layout
    }

    pub fn conditional(&self, t: usize) -> &DistTable {
        &self.tables[t]
    }

    pub fn conditionals(&self) -> &[DistTable] {
        &self.tables
    }

    /// `P(X_t | x_<t)` for a prefix of length `t`; the prefix must be valid.
    pub fn row(&self, history: &[usize]) -> &[f64] {
        let t = history.len();
        self.tables[t].row(self.layout.index(history))
    }

    /// True when both models have identical variable declarations.
    pub fn same_structure(&self, other: &CausalModel) -> bool {
        self.variables == other.variables
    }

    fn check_variable(&self, t: usize, value: usize) -> Result<()> {
        let v = self.variables.get(t).ok_or_else(|| {
            Error::Validation(format!("variable index {t} out of range (T = {})", self.len()))
        })?;
        if value >= v.size() {
            return Err(Error::InvalidSymbol {
                variable: v.name.clone(),
                index: value,
                size: v.size(),
            });
        }
        Ok(())
    }

    /// Product of the conditionals along a full sequence.
    pub fn joint_probability(&self, seq: &[usize]) -> Result<f64> {
        if seq.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: seq.len(),
            });
        }
        self.prefix_probability(seq)
    }

    /// Probability of a prefix of any length `<= T`.
    pub fn prefix_probability(&self, prefix: &[usize]) -> Result<f64> {
        self.layout.check(prefix, &self.variables)?;
        let mut p = 1.0;
        let mut idx = 0;
        for (t, &x) in prefix.iter().enumerate() {
            p *= self.tables[t].row(idx)[x];
            idx = idx * self.layout.sizes()[t] + x;
        }
        Ok(p)
    }

    /// Probabilities of all prefixes of length `t`, in layout order.
    pub fn prefix_masses(&self, t: usize) -> Vec<f64> {
        let mut masses = vec![1.0];
        for s in 0..t {
            let n = self.layout.sizes()[s];
            let table = self.tables[s].flat();
            let mut next = Vec::with_capacity(masses.len() * n);
            for (h, &m) in masses.iter().enumerate() {
                next.extend(table[h * n..(h + 1) * n].iter().map(|&p| m * p));
            }
            masses = next;
        }
        masses
    }

    /// Dense joint over all full sequences, in layout order.
    pub fn joint(&self) -> Vec<f64> {
        self.prefix_masses(self.len())
    }

    /// Exact marginal of `X_t` by enumerating the prefixes up to `t`.
    pub fn marginal(&self, t: usize) -> Result<Vec<f64>> {
        self.check_variable(t, 0)?;
        let n = self.layout.sizes()[t];
        let mut out = vec![0.0; n];
        let masses = self.prefix_masses(t);
        let table = self.tables[t].flat();
        for (h, &m) in masses.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (x, o) in out.iter_mut().enumerate() {
                *o += m * table[h * n + x];
            }
        }
        Ok(out)
    }

    /// Refactorizes a joint over full sequences into causal-order conditionals.
    ///
    /// Histories with zero mass keep the corresponding row of `fallback`.
    pub fn from_joint(fallback: &CausalModel, joint: &[f64]) -> Self {
        let layout = fallback.layout.clone();
        let t_len = layout.len();
        debug_assert_eq!(joint.len(), layout.num_sequences());
        // levels[t] holds the masses of prefixes of length t.
        let mut levels: Vec<Vec<f64>> = vec![Vec::new(); t_len + 1];
        levels[t_len] = joint.to_vec();
        for t in (0..t_len).rev() {
            let n = layout.sizes()[t];
            levels[t] = levels[t + 1].chunks(n).map(|c| c.iter().sum()).collect();
        }
        let mut flats = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let n = layout.sizes()[t];
            let parent = &levels[t];
            let child = &levels[t + 1];
            let fb = fallback.tables[t].flat();
            let mut probs = Vec::with_capacity(child.len());
            for (h, &m) in parent.iter().enumerate() {
                let block = &child[h * n..(h + 1) * n];
                if m > 0.0 {
                    let s: f64 = block.iter().sum();
                    probs.extend(block.iter().map(|&c| c / s));
                } else {
                    probs.extend_from_slice(&fb[h * n..(h + 1) * n]);
                }
            }
            flats.push(probs);
        }
        Self::from_flat_unchecked(fallback.variables.clone(), layout, flats)
    }

    /// Logical update `X_t = value`: the model of `P(. | X_t = value)`.
    pub fn condition(&self, t: usize, value: usize) -> Result<CausalModel> {
        self.check_variable(t, value)?;
        let mut joint = self.joint();
        let n = self.layout.sizes()[t];
        // Digits after t repeat with this stride.
        let stride = self.layout.num_sequences() / self.layout.count(t + 1);
        let mut mass = 0.0;
        for (i, p) in joint.iter_mut().enumerate() {
            if (i / stride) % n == value {
                mass += *p;
            } else {
                *p = 0.0;
            }
        }
        if mass <= 0.0 {
            return Err(Error::ZeroProbability(format!(
                "{} = {}",
                self.variables[t].name,
                self.variables[t].alphabet.symbol(value).unwrap_or("?")
            )));
        }
        for p in &mut joint {
            *p /= mass;
        }
        Ok(Self::from_joint(self, &joint))
    }

    /// Causal update `X_t <- value`: the past keeps its measure, `X_t` becomes a
    /// point mass at `value` for every history, and the future given `x_<=t` is unchanged.
    pub fn intervene(&self, t: usize, value: usize) -> Result<CausalModel> {
        self.check_variable(t, value)?;
        let n = self.layout.sizes()[t];
        let rows = self.layout.count(t);
        let probs = one_hot(n, value).repeat(rows);
        let mut out = self.clone();
        out.tables[t] = DistTable::from_flat_unchecked(self.variables[t].clone(), self.layout.sizes()[..t].to_vec(), probs);
        Ok(out)
    }

    /// Applies several interventions in causal order. A later entry at the same
    /// index replaces an earlier one.
    pub fn intervene_all(&self, interventions: &[(usize, usize)]) -> Result<CausalModel> {
        let mut sorted = interventions.to_vec();
        sorted.sort_by_key(|&(t, _)| t);
        let mut out = self.clone();
        for (t, v) in sorted {
            out = out.intervene(t, v)?;
        }
        Ok(out)
    }

    /// Label form of a prefix, e.g. `"heads,tails"`.
    pub fn format_history(&self, history: &[usize]) -> String {
        if history.is_empty() {
            return "ε".into();
        }
        history
            .iter()
            .enumerate()
            .map(|(t, &x)| {
                self.variables[t]
                    .alphabet
                    .symbol(x)
                    .map(str::to_string)
                    .unwrap_or_else(|| x.to_string())
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}
