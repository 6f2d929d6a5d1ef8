//! Observation filtering and the I/O system induced by a causal model.
//!
//! An agent sees its own outputs as decisions (causal updates), disclosed
//! inputs as measurements (logical updates), and nothing at all of
//! undisclosed inputs.

use crate::error::Result;

use super::alphabet::IoType;
use super::model::CausalModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateKind {
    /// Intervention `X_t <- x_t`.
    Causal,
    /// Conditioning `X_t = x_t`.
    Logical,
}

/// One entry of the filtered observation record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Observation {
    pub variable: usize,
    pub value: usize,
    pub kind: UpdateKind,
}

impl CausalModel {
    /// Filters a realized prefix down to the typed updates the system performs.
    ///
    /// Depends only on the variable types, never on the probabilities.
    pub fn obs(&self, realized: &[usize]) -> Result<Vec<Observation>> {
        self.layout().check(realized, self.variables())?;
        Ok(realized
            .iter()
            .enumerate()
            .filter_map(|(t, &value)| {
                let kind = match self.variable(t).io_type {
                    IoType::Output => UpdateKind::Causal,
                    IoType::DisclosedInput => UpdateKind::Logical,
                    IoType::UndisclosedInput => return None,
                };
                Some(Observation {
                    variable: t,
                    value,
                    kind,
                })
            })
            .collect())
    }

    /// Applies an observation record in order.
    pub fn apply_updates(&self, record: &[Observation]) -> Result<CausalModel> {
        let mut model = self.clone();
        for o in record {
            model = model.apply_update(o)?;
        }
        Ok(model)
    }

    fn apply_update(&self, o: &Observation) -> Result<CausalModel> {
        match o.kind {
            UpdateKind::Causal => self.intervene(o.variable, o.value),
            UpdateKind::Logical => self.condition(o.variable, o.value),
        }
    }

    /// `P(X_t | obs(x_<t))` for a prefix `x_<t` of length `t`.
    pub fn predictive(&self, prefix: &[usize]) -> Result<Vec<f64>> {
        let record = self.obs(prefix)?;
        self.apply_updates(&record)?.marginal(prefix.len())
    }

    /// The I/O system `B(x_t | x_<t) = P(x_t | obs(x_<t))` as a model over plain histories.
    ///
    /// Rows for histories that `B` itself assigns zero probability are copied from
    /// `self`; they carry no weight in the joint.
    pub fn behavior_from_beliefs(&self) -> Result<CausalModel> {
        let layout = self.layout().clone();
        let mut flats: Vec<Vec<f64>> = self.conditionals().iter().map(|t| t.flat().to_vec()).collect();
        self.fill_behavior(self, 0, 0, &mut flats)?;
        Ok(CausalModel::from_flat_unchecked(self.variables().to_vec(), layout, flats))
    }

    fn fill_behavior(&self, belief: &CausalModel, t: usize, prefix_index: usize, flats: &mut [Vec<f64>]) -> Result<()> {
        if t == self.len() {
            return Ok(());
        }
        let n = self.variable(t).size();
        let row = belief.marginal(t)?;
        flats[t][prefix_index * n..(prefix_index + 1) * n].copy_from_slice(&row);
        for (x, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let child = prefix_index * n + x;
            match self.variable(t).io_type {
                IoType::UndisclosedInput => self.fill_behavior(belief, t + 1, child, flats)?,
                IoType::Output => {
                    let next = belief.intervene(t, x)?;
                    self.fill_behavior(&next, t + 1, child, flats)?
                }
                IoType::DisclosedInput => {
                    let next = belief.condition(t, x)?;
                    self.fill_behavior(&next, t + 1, child, flats)?
                }
            }
        }
        Ok(())
    }
}
