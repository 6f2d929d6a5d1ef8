//! The variational principle over typed sequences.
//!
//! Given a reference model `R` and a candidate `P` with the same variables,
//! two auxiliary measures are built one variable at a time: for a controlled
//! variable `G` follows the candidate and the reference side follows `R`; for
//! an estimated variable the roles swap. The candidate is scored by
//!
//! ```text
//! J(P) = sum_seq G(seq) U*(seq) - alpha sum_seq G(seq) log2(G(seq) / Ref(seq))
//! ```
//!
//! where `U*(seq)` is the sum of the per-step target utilities.
//!
//! The candidate may only condition on what the agent observes: its
//! conditional at step `t` is a function of the observable part of `x_<t`
//! (undisclosed inputs removed). [`gvp_solve`] returns the exact maximizer in
//! that class by a single backward sweep.

use std::collections::BTreeMap;

use crate::conjugate::Temperature;
use crate::error::{Error, Result};
use crate::finite_prob::{CausalModel, IoType, SequenceLayout, VariableSpec, VpMode};
use crate::numeric::normalize_log2;

/// Per-step target utilities `U*(x_t | x_<t)`, laid out like the conditionals of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityTable {
    layout: SequenceLayout,
    values: Vec<Vec<f64>>,
}

impl UtilityTable {
    pub fn zeros(variables: &[VariableSpec]) -> Result<Self> {
        Self::from_fn(variables, |t, _| vec![0.0; variables[t].size()])
    }

    pub fn from_fn<F>(variables: &[VariableSpec], mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[usize]) -> Vec<f64>,
    {
        let layout = SequenceLayout::new(variables.iter().map(VariableSpec::size).collect())?;
        let rows = (0..variables.len())
            .map(|t| (0..layout.count(t)).map(|h| f(t, &layout.decode(t, h))).collect())
            .collect();
        Self::from_rows(variables, rows)
    }

    /// `rows[t][h]` holds the utilities of variable `t` after the `h`-th history.
    pub fn from_rows(variables: &[VariableSpec], rows: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let layout = SequenceLayout::new(variables.iter().map(VariableSpec::size).collect())?;
        if rows.len() != variables.len() {
            return Err(Error::Validation(format!(
                "{} utility tables for {} variables",
                rows.len(),
                variables.len()
            )));
        }
        let mut values = Vec::with_capacity(rows.len());
        for (t, table) in rows.into_iter().enumerate() {
            let name = &variables[t].name;
            if table.len() != layout.count(t) {
                return Err(Error::Validation(format!(
                    "utility table `{name}` has {} rows, expected {}",
                    table.len(),
                    layout.count(t)
                )));
            }
            let mut flat = Vec::with_capacity(layout.count(t + 1));
            for (h, row) in table.into_iter().enumerate() {
                if row.len() != variables[t].size() {
                    return Err(Error::Validation(format!(
                        "utility table `{name}` row {h} has {} entries, expected {}",
                        row.len(),
                        variables[t].size()
                    )));
                }
                if let Some(bad) = row.iter().find(|u| !u.is_finite()) {
                    return Err(Error::Validation(format!(
                        "utility table `{name}` row {h}: target utilities must be finite, got {bad}"
                    )));
                }
                flat.extend(row);
            }
            values.push(flat);
        }
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> &SequenceLayout {
        &self.layout
    }

    /// Utilities of variable `t = prefix.len()` after `prefix`.
    pub fn row(&self, prefix: &[usize]) -> &[f64] {
        let t = prefix.len();
        let n = self.layout.sizes()[t];
        let h = self.layout.index(prefix);
        &self.values[t][h * n..(h + 1) * n]
    }

    fn flat(&self, t: usize) -> &[f64] {
        &self.values[t]
    }

    /// Strictly additive sequence utility `sum_t U*(x_t | x_<t)`.
    pub fn sequence_utility(&self, seq: &[usize]) -> f64 {
        (0..seq.len()).map(|t| self.row(&seq[..t])[seq[t]]).sum()
    }
}

/// Reference model, target utilities and temperature. The candidate is supplied per call.
#[derive(Debug, Clone)]
pub struct GvpProblem {
    reference: CausalModel,
    target_utility: UtilityTable,
    alpha: Temperature,
}

/// Expected utility and divergence contributed by one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableTerm {
    pub expected_utility: f64,
    /// `E_G[log2 G_t / Ref_t]` in bits.
    pub divergence_bits: f64,
}

impl GvpProblem {
    /// Utilities of undisclosed inputs must be zero: the agent cannot be rewarded
    /// for a symbol it never sees.
    pub fn new(reference: CausalModel, target_utility: UtilityTable, alpha: Temperature) -> Result<Self> {
        if target_utility.layout() != reference.layout() {
            return Err(Error::StructureMismatch(
                "target utility and reference are over different alphabets".into(),
            ));
        }
        for (t, v) in reference.variables().iter().enumerate() {
            if v.io_type == IoType::UndisclosedInput && target_utility.flat(t).iter().any(|&u| u != 0.0) {
                return Err(Error::Validation(format!(
                    "undisclosed input `{}` has nonzero target utility",
                    v.name
                )));
            }
        }
        Ok(Self {
            reference,
            target_utility,
            alpha,
        })
    }

    pub fn reference(&self) -> &CausalModel {
        &self.reference
    }

    pub fn target_utility(&self) -> &UtilityTable {
        &self.target_utility
    }

    pub fn alpha(&self) -> Temperature {
        self.alpha
    }

    fn check_candidate(&self, candidate: &CausalModel) -> Result<()> {
        if !candidate.same_structure(&self.reference) {
            return Err(Error::StructureMismatch(
                "candidate and reference must share variables, alphabets, io types and vp modes".into(),
            ));
        }
        Ok(())
    }

    /// Builds `(G, R)`: controlled variables take the candidate's conditional in `G`
    /// and the reference's in `R`; estimated variables the other way round.
    pub fn build_auxiliary(&self, candidate: &CausalModel) -> Result<(CausalModel, CausalModel)> {
        self.check_candidate(candidate)?;
        let layout = self.reference.layout().clone();
        let mut g = Vec::with_capacity(layout.len());
        let mut r = Vec::with_capacity(layout.len());
        for (t, v) in self.reference.variables().iter().enumerate() {
            let p = candidate.conditional(t).flat().to_vec();
            let q = self.reference.conditional(t).flat().to_vec();
            match v.vp_mode {
                VpMode::Controlled => {
                    g.push(p);
                    r.push(q);
                }
                VpMode::Estimated => {
                    g.push(q);
                    r.push(p);
                }
            }
        }
        let vars = self.reference.variables().to_vec();
        Ok((
            CausalModel::from_flat_unchecked(vars.clone(), layout.clone(), g),
            CausalModel::from_flat_unchecked(vars, layout, r),
        ))
    }

    /// Sequence-level objective by enumerating every full sequence.
    pub fn objective(&self, candidate: &CausalModel) -> Result<f64> {
        let (g, r) = self.build_auxiliary(candidate)?;
        let layout = g.layout();
        let t_len = layout.len();
        let gj = g.joint();
        let rj = r.joint();
        let alpha = self.alpha.value();
        let mut total = 0.0;
        for (i, (&gp, &rp)) in gj.iter().zip(&rj).enumerate() {
            if gp == 0.0 {
                continue;
            }
            if rp == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            let seq = layout.decode(t_len, i);
            total += gp * (self.target_utility.sequence_utility(&seq) - alpha * (gp / rp).log2());
        }
        Ok(total)
    }

    /// Per-variable decomposition of the objective, computed step by step.
    pub fn objective_terms(&self, candidate: &CausalModel) -> Result<Vec<VariableTerm>> {
        let (g, r) = self.build_auxiliary(candidate)?;
        let layout = g.layout();
        let mut terms = Vec::with_capacity(layout.len());
        for t in 0..layout.len() {
            let n = layout.sizes()[t];
            let masses = g.prefix_masses(t);
            let gt = g.conditional(t).flat();
            let rt = r.conditional(t).flat();
            let ut = self.target_utility.flat(t);
            let mut eu = 0.0;
            let mut div = 0.0;
            for (h, &m) in masses.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                for x in 0..n {
                    let i = h * n + x;
                    if gt[i] == 0.0 {
                        continue;
                    }
                    eu += m * gt[i] * ut[i];
                    div += if rt[i] == 0.0 {
                        f64::INFINITY
                    } else {
                        m * gt[i] * (gt[i] / rt[i]).log2()
                    };
                }
            }
            terms.push(VariableTerm {
                expected_utility: eu,
                divergence_bits: div,
            });
        }
        Ok(terms)
    }

    /// Sum of [`GvpProblem::objective_terms`].
    pub fn objective_from_terms(&self, candidate: &CausalModel) -> Result<f64> {
        let alpha = self.alpha.value();
        Ok(self
            .objective_terms(candidate)?
            .iter()
            .map(|t| {
                if t.divergence_bits == f64::INFINITY {
                    f64::NEG_INFINITY
                } else {
                    t.expected_utility - alpha * t.divergence_bits
                }
            })
            .sum())
    }

    /// Exact maximizer of [`GvpProblem::objective`] over candidates that condition
    /// only on observable history.
    ///
    /// Estimated variables get the predictive distribution obtained by
    /// marginalizing undisclosed variables under the reference; controlled
    /// variables get the soft-max `P(a|k) ∝ 2^{Q(a)/alpha}` with `Q` built from the
    /// backed-up values of the following steps. Histories that no reachable
    /// observable class covers keep the reference conditional.
    pub fn solve(&self) -> Result<GvpSolution> {
        let reference = &self.reference;
        let layout = reference.layout();
        let t_len = layout.len();
        let alpha = self.alpha.value();
        for v in reference.variables() {
            if v.vp_mode == VpMode::Controlled && v.io_type == IoType::UndisclosedInput {
                return Err(Error::Validation(format!(
                    "controlled variable `{}` is not observable by the agent",
                    v.name
                )));
            }
        }

        // Weight of each prefix under the estimated (reference) factors alone.
        let mut est_w: Vec<Vec<f64>> = vec![vec![1.0]];
        for t in 0..t_len {
            let n = layout.sizes()[t];
            let table = reference.conditional(t).flat();
            let estimated = reference.variable(t).vp_mode == VpMode::Estimated;
            let next = est_w[t]
                .iter()
                .enumerate()
                .flat_map(|(h, &w)| (0..n).map(move |x| if estimated { w * table[h * n + x] } else { w }))
                .collect();
            est_w.push(next);
        }

        let mut flats: Vec<Vec<f64>> = reference.conditionals().iter().map(|c| c.flat().to_vec()).collect();
        let mut values_next = vec![0.0; layout.num_sequences()];
        let mut values_by_level = vec![Vec::new(); t_len + 1];

        for t in (0..t_len).rev() {
            let n = layout.sizes()[t];
            let rt = reference.conditional(t).flat();
            let ut = self.target_utility.flat(t);
            let mut values = vec![0.0; layout.count(t)];
            for class in observable_classes(reference.variables(), layout, t) {
                let weight: f64 = class.iter().map(|&h| est_w[t][h]).sum();
                let row: Vec<f64> = if weight > 0.0 {
                    match reference.variable(t).vp_mode {
                        VpMode::Estimated => {
                            let mut row = vec![0.0; n];
                            for &h in &class {
                                let w = est_w[t][h] / weight;
                                for (x, r) in row.iter_mut().enumerate() {
                                    *r += w * rt[h * n + x];
                                }
                            }
                            let s: f64 = row.iter().sum();
                            row.iter().map(|r| r / s).collect()
                        }
                        VpMode::Controlled => {
                            let mut q = vec![0.0; n];
                            for &h in &class {
                                let w = est_w[t][h] / weight;
                                if w == 0.0 {
                                    continue;
                                }
                                for (a, qa) in q.iter_mut().enumerate() {
                                    let i = h * n + a;
                                    *qa += if rt[i] == 0.0 {
                                        f64::NEG_INFINITY
                                    } else {
                                        w * (ut[i] + alpha * rt[i].log2() + values_next[i])
                                    };
                                }
                            }
                            let scaled: Vec<f64> = q.iter().map(|v| v / alpha).collect();
                            normalize_log2(&scaled)?.0
                        }
                    }
                } else {
                    Vec::new()
                };
                for &h in &class {
                    let cond = if row.is_empty() {
                        &rt[h * n..(h + 1) * n]
                    } else {
                        flats[t][h * n..(h + 1) * n].copy_from_slice(&row);
                        &row[..]
                    };
                    values[h] = backed_up_value(reference.variable(t).vp_mode, cond, &rt[h * n..(h + 1) * n], &ut[h * n..(h + 1) * n], &values_next[h * n..(h + 1) * n], alpha);
                }
            }
            values_by_level[t + 1] = std::mem::replace(&mut values_next, values);
        }
        values_by_level[0] = values_next;
        let candidate = CausalModel::from_flat_unchecked(reference.variables().to_vec(), layout.clone(), flats);
        Ok(GvpSolution {
            candidate,
            values: values_by_level,
        })
    }
}

fn backed_up_value(mode: VpMode, candidate: &[f64], reference: &[f64], utility: &[f64], next: &[f64], alpha: f64) -> f64 {
    let (g, r) = match mode {
        VpMode::Controlled => (candidate, reference),
        VpMode::Estimated => (reference, candidate),
    };
    let mut v = 0.0;
    for x in 0..g.len() {
        if g[x] == 0.0 {
            continue;
        }
        if r[x] == 0.0 {
            return f64::NEG_INFINITY;
        }
        v += g[x] * (utility[x] - alpha * (g[x] / r[x]).log2() + next[x]);
    }
    v
}

/// Solved candidate together with the backed-up values `W(x_<t)` of every prefix.
#[derive(Debug, Clone)]
pub struct GvpSolution {
    pub candidate: CausalModel,
    /// `values[t][h]`: optimal expected remaining objective after the `h`-th prefix of length `t`.
    pub values: Vec<Vec<f64>>,
}

impl GvpSolution {
    /// The optimal objective, `W(ε)`.
    pub fn objective(&self) -> f64 {
        self.values[0][0]
    }
}

/// Groups the prefixes of length `t` by their observable part.
///
/// Each group lists prefix indices (in layout order) that an agent cannot tell apart.
pub fn observable_classes(variables: &[VariableSpec], layout: &SequenceLayout, t: usize) -> Vec<Vec<usize>> {
    let visible: Vec<usize> = (0..t).filter(|&s| variables[s].io_type.is_observable()).collect();
    if visible.len() == t {
        return (0..layout.count(t)).map(|h| vec![h]).collect();
    }
    let mut classes: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for h in 0..layout.count(t) {
        let prefix = layout.decode(t, h);
        let key = visible.iter().map(|&s| prefix[s]).collect();
        classes.entry(key).or_default().push(h);
    }
    classes.into_values().collect()
}

/// Convenience wrapper: `(G, R)` for a candidate.
pub fn build_auxiliary(problem: &GvpProblem, candidate: &CausalModel) -> Result<(CausalModel, CausalModel)> {
    problem.build_auxiliary(candidate)
}

/// Convenience wrapper around [`GvpProblem::objective`].
pub fn gvp_objective(problem: &GvpProblem, candidate: &CausalModel) -> Result<f64> {
    problem.objective(candidate)
}

/// Convenience wrapper around [`GvpProblem::solve`], returning the candidate only.
pub fn gvp_solve(problem: &GvpProblem) -> Result<CausalModel> {
    problem.solve().map(|s| s.candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_prob::Alphabet;
    use crate::numeric::{kl_bits, max_abs_diff};
    use crate::transform::{control_solution, free_utility_difference, TransformProblem};

    fn t(a: f64) -> Temperature {
        Temperature::new(a).unwrap()
    }

    fn var(name: &str, io: IoType, mode: VpMode) -> VariableSpec {
        VariableSpec::new(name, Alphabet::binary(), io, mode)
    }

    fn single(mode: VpMode, probs: [f64; 2]) -> CausalModel {
        let io = if mode == VpMode::Controlled { IoType::Output } else { IoType::DisclosedInput };
        CausalModel::from_rows(vec![var("x", io, mode)], vec![vec![probs.to_vec()]]).unwrap()
    }

    #[test]
    fn auxiliary_measures_follow_modes() {
        let reference = single(VpMode::Controlled, [0.3, 0.7]);
        let cand = single(VpMode::Controlled, [0.6, 0.4]);
        let p = GvpProblem::new(reference.clone(), UtilityTable::zeros(reference.variables()).unwrap(), t(1.0)).unwrap();
        let (g, r) = p.build_auxiliary(&cand).unwrap();
        assert_eq!(g, cand);
        assert_eq!(r, reference);

        let reference = single(VpMode::Estimated, [0.3, 0.7]);
        let cand = single(VpMode::Estimated, [0.6, 0.4]);
        let p = GvpProblem::new(reference.clone(), UtilityTable::zeros(reference.variables()).unwrap(), t(1.0)).unwrap();
        let (g, r) = p.build_auxiliary(&cand).unwrap();
        assert_eq!(g, reference);
        assert_eq!(r, cand);

        let (g, r) = p.build_auxiliary(&reference).unwrap();
        assert_eq!(g, r);
    }

    #[test]
    fn auxiliary_rejects_structure_mismatch() {
        let reference = single(VpMode::Estimated, [0.3, 0.7]);
        let other = single(VpMode::Controlled, [0.3, 0.7]);
        let p = GvpProblem::new(reference.clone(), UtilityTable::zeros(reference.variables()).unwrap(), t(1.0)).unwrap();
        assert!(matches!(p.build_auxiliary(&other), Err(Error::StructureMismatch(_))));
    }

    #[test]
    fn objective_examples() {
        let reference = single(VpMode::Controlled, [0.3, 0.7]);
        let zero = UtilityTable::zeros(reference.variables()).unwrap();
        let p = GvpProblem::new(reference.clone(), zero, t(1.0)).unwrap();
        assert_eq!(p.objective(&reference).unwrap(), 0.0);

        // One controlled variable: the single-variable free-utility difference.
        let u = UtilityTable::from_rows(reference.variables(), vec![vec![vec![1.0, -0.5]]]).unwrap();
        let p = GvpProblem::new(reference.clone(), u, t(0.7)).unwrap();
        let cand = single(VpMode::Controlled, [0.8, 0.2]);
        let expect = free_utility_difference(&[0.3, 0.7], &[0.8, 0.2], &[1.0, -0.5], t(0.7));
        assert!((p.objective(&cand).unwrap() - expect).abs() < 1e-12);

        // One estimated variable, zero utility: -alpha KL(reference || candidate).
        let reference = single(VpMode::Estimated, [0.3, 0.7]);
        let zero = UtilityTable::zeros(reference.variables()).unwrap();
        let p = GvpProblem::new(reference.clone(), zero, t(2.0)).unwrap();
        let cand = single(VpMode::Estimated, [0.6, 0.4]);
        let expect = -2.0 * kl_bits(&[0.3, 0.7], &[0.6, 0.4]);
        assert!((p.objective(&cand).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn solve_single_controlled_matches_closed_form() {
        let reference = single(VpMode::Controlled, [0.3, 0.7]);
        let u = UtilityTable::from_rows(reference.variables(), vec![vec![vec![1.0, -0.5]]]).unwrap();
        let p = GvpProblem::new(reference, u, t(0.7)).unwrap();
        let sol = p.solve().unwrap();
        let closed = control_solution(&TransformProblem::new(vec![0.3, 0.7], vec![1.0, -0.5], t(0.7)).unwrap()).unwrap();
        assert!(max_abs_diff(sol.candidate.row(&[]), &closed) < 1e-12);
        assert!((sol.objective() - p.objective(&sol.candidate).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn solve_estimated_without_latents_returns_reference() {
        let vars = vec![
            var("x1", IoType::DisclosedInput, VpMode::Estimated),
            var("x2", IoType::DisclosedInput, VpMode::Estimated),
        ];
        let reference = CausalModel::from_rows(vars.clone(), vec![vec![vec![0.8, 0.2]], vec![vec![0.5, 0.5], vec![0.9, 0.1]]]).unwrap();
        let p = GvpProblem::new(reference.clone(), UtilityTable::zeros(&vars).unwrap(), t(1.0)).unwrap();
        let sol = p.solve().unwrap();
        for (a, b) in sol.candidate.conditionals().iter().zip(reference.conditionals()) {
            assert!(max_abs_diff(a.flat(), b.flat()) < 1e-12);
        }
        assert!(sol.objective().abs() < 1e-12);
    }

    #[test]
    fn solve_estimation_protocol_gives_bayesian_predictive() {
        let vars = vec![
            var("theta", IoType::UndisclosedInput, VpMode::Estimated),
            var("o1", IoType::DisclosedInput, VpMode::Estimated),
            var("o2", IoType::DisclosedInput, VpMode::Estimated),
        ];
        let like = [0.9, 0.1];
        let reference = CausalModel::from_fn(vars.clone(), |t, h| {
            if t == 0 {
                vec![0.5, 0.5]
            } else {
                vec![1.0 - like[h[0]], like[h[0]]]
            }
        })
        .unwrap();
        let p = GvpProblem::new(reference.clone(), UtilityTable::zeros(&vars).unwrap(), t(1.0)).unwrap();
        let sol = p.solve().unwrap();
        let c = &sol.candidate;
        assert_eq!(c.row(&[]), &[0.5, 0.5]);
        for th in 0..2 {
            assert!((c.row(&[th])[1] - 0.5).abs() < 1e-12);
            assert!((c.row(&[th, 1])[1] - 0.82).abs() < 1e-12);
        }
        // Same as the I/O system induced by the belief model.
        let b = reference.behavior_from_beliefs().unwrap();
        for step in 0..3 {
            assert!(max_abs_diff(c.conditional(step).flat(), b.conditional(step).flat()) < 1e-12);
        }
    }

    #[test]
    fn solve_rejects_controlled_latents() {
        let vars = vec![var("z", IoType::UndisclosedInput, VpMode::Controlled)];
        let reference = CausalModel::from_rows(vars.clone(), vec![vec![vec![0.5, 0.5]]]).unwrap();
        let p = GvpProblem::new(reference, UtilityTable::zeros(&vars).unwrap(), t(1.0)).unwrap();
        assert!(p.solve().is_err());
    }

    #[test]
    fn undisclosed_utilities_must_be_zero() {
        let vars = vec![var("z", IoType::UndisclosedInput, VpMode::Estimated)];
        let reference = CausalModel::from_rows(vars.clone(), vec![vec![vec![0.5, 0.5]]]).unwrap();
        let u = UtilityTable::from_rows(&vars, vec![vec![vec![1.0, 0.0]]]).unwrap();
        assert!(GvpProblem::new(reference, u, t(1.0)).is_err());
    }

    #[test]
    fn utility_table_rejects_infinite_entries() {
        let vars = vec![var("x", IoType::Output, VpMode::Controlled)];
        assert!(UtilityTable::from_rows(&vars, vec![vec![vec![f64::NEG_INFINITY, 0.0]]]).is_err());
    }

    #[test]
    fn observable_classes_merge_hidden_values() {
        let vars = vec![
            var("theta", IoType::UndisclosedInput, VpMode::Estimated),
            var("a", IoType::Output, VpMode::Controlled),
        ];
        let layout = SequenceLayout::new(vec![2, 2]).unwrap();
        assert_eq!(observable_classes(&vars, &layout, 1), vec![vec![0, 1]]);
        assert_eq!(observable_classes(&vars, &layout, 2), vec![vec![0, 2], vec![1, 3]]);
    }
}
