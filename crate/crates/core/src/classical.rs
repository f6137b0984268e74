//! Exact classical bounds by enumerating deterministic strategies.
//!
//! A classical system of dimension `d` carries one of at most `d` messages.
//! Each message fixes the receiver's answer to every measurement, so it is
//! a vector in `{-1, +1}^m`. Because the witness is linear, the optimum is
//! attained by a deterministic strategy: pick a set `S` of messages, then
//! let every preparation send its best message from `S`.
//!
//! Message vectors are encoded as integers by reading `-1 -> 0`, `+1 -> 1`
//! as binary with the first measurement as the most significant bit.

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::witness::{Outcome, Witness};

/// Default cap on the number of message subsets examined.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

/// Deterministic responses `v_y = ±1`, one per measurement setting.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MessageVector(Vec<i8>);

impl MessageVector {
    pub fn new(components: Vec<i8>) -> Result<Self> {
        if components.is_empty() {
            return invalid("message vector", "needs at least one component");
        }
        if let Some(bad) = components.iter().find(|&&v| v != 1 && v != -1) {
            return invalid("message vector", format!("component {bad} is not ±1"));
        }
        Ok(MessageVector(components))
    }

    /// Decodes `code` into `m` components, most significant bit first.
    pub fn from_code(code: u64, m: usize) -> Self {
        MessageVector((0..m).map(|y| if (code >> (m - 1 - y)) & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn code(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &v| (acc << 1) | u64::from(v == 1))
    }

    pub fn components(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The deterministic outcome for the 1-based setting `y`.
    pub fn outcome(&self, y: usize) -> Outcome {
        if self.0[y - 1] == 1 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    fn dot<T: Scalar>(&self, row: &[T]) -> T {
        self.0.iter().zip(row).fold(T::zero(), |acc, (&v, &c)| if v == 1 { acc + c } else { acc - c })
    }
}

/// A set of distinct messages and the message each preparation sends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    messages: Vec<MessageVector>,
    assignment: Vec<usize>,
}

impl DeterministicStrategy {
    /// `assignment[x - 1]` indexes into `messages` for preparation `x`.
    pub fn new(messages: Vec<MessageVector>, assignment: Vec<usize>) -> Result<Self> {
        if messages.is_empty() {
            return invalid("strategy", "needs at least one message");
        }
        let m = messages[0].len();
        if messages.iter().any(|v| v.len() != m) {
            return Err(Error::Dimension("messages have different lengths".into()));
        }
        for (i, a) in messages.iter().enumerate() {
            if messages[..i].contains(a) {
                return invalid("strategy", format!("message {:?} listed twice", a.components()));
            }
        }
        if let Some(x) = assignment.iter().position(|&k| k >= messages.len()) {
            return invalid("strategy", format!("preparation {} assigned to a missing message", x + 1));
        }
        Ok(DeterministicStrategy { messages, assignment })
    }

    pub fn messages(&self) -> &[MessageVector] {
        &self.messages
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Message sent by the 1-based preparation `x`.
    pub fn message_for(&self, x: usize) -> &MessageVector {
        &self.messages[self.assignment[x - 1]]
    }

    /// Number of distinct messages actually used.
    pub fn distinct_used(&self) -> usize {
        let mut used: Vec<usize> = self.assignment.clone();
        used.sort_unstable();
        used.dedup();
        used.len()
    }
}

/// Witness value of a deterministic strategy: `offset + Σ_x c_x · v^{a(x)}`.
pub fn strategy_value<T: Scalar>(witness: &Witness<T>, strategy: &DeterministicStrategy) -> Result<T> {
    let scenario = witness.scenario();
    if strategy.assignment.len() != scenario.n_preparations() {
        return Err(Error::Dimension(format!(
            "strategy covers {} preparations, witness has {}",
            strategy.assignment.len(),
            scenario.n_preparations()
        )));
    }
    let m = scenario.n_measurements();
    if strategy.messages[0].len() != m {
        return Err(Error::Dimension(format!(
            "message vectors have length {}, witness has {m} measurements",
            strategy.messages[0].len()
        )));
    }
    let form = witness.expectation_form();
    Ok((1..=scenario.n_preparations()).fold(form.offset, |acc, x| acc + strategy.message_for(x).dot(form.row(x))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalBoundResult<T> {
    pub bound: T,
    pub optimal_strategy: DeterministicStrategy,
    /// Number of message subsets examined.
    pub enumeration_size: u128,
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Lexicographic `k`-subsets of `0..n`.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations { n, current: (k <= n).then(|| (0..k).collect()) }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// Exact classical bound `C_d` with the default enumeration budget.
pub fn classical_bound<T: Scalar>(witness: &Witness<T>, d: usize) -> Result<ClassicalBoundResult<T>> {
    classical_bound_with_budget(witness, d, DEFAULT_ENUMERATION_BUDGET)
}

/// Exact classical bound `C_d`. Among equally good message sets the
/// lexicographically smallest (by code) is returned, and each preparation
/// takes the lowest-coded best message within the set.
pub fn classical_bound_with_budget<T: Scalar>(
    witness: &Witness<T>,
    d: usize,
    budget: u128,
) -> Result<ClassicalBoundResult<T>> {
    if d == 0 {
        return invalid("dimension", "classical dimension must be at least 1");
    }
    let scenario = witness.scenario();
    let m = scenario.n_measurements();
    let n = scenario.n_preparations();
    if m >= 64 {
        return Err(Error::BudgetExceeded { required: u128::MAX, budget });
    }
    let n_codes = 1u128 << m;
    let k = (d as u128).min(n_codes);
    let subsets = binomial(n_codes, k).unwrap_or(u128::MAX);
    if subsets > budget || n_codes > budget {
        return Err(Error::BudgetExceeded { required: subsets.max(n_codes), budget });
    }

    let form = witness.expectation_form();
    let n_codes = n_codes as usize;
    let scores: Vec<Vec<T>> = (1..=n)
        .map(|x| (0..n_codes).map(|code| MessageVector::from_code(code as u64, m).dot(form.row(x))).collect())
        .collect();

    let mut best: Option<(T, Vec<usize>)> = None;
    let mut examined: u128 = 0;
    for subset in Combinations::new(n_codes, k as usize) {
        examined += 1;
        let value = scores.iter().fold(form.offset, |acc, row| {
            let top = subset
                .iter()
                .map(|&c| row[c])
                .fold(None, |m: Option<T>, v| {
                    Some(match m {
                        Some(m) if m >= v => m,
                        _ => v,
                    })
                })
                .expect("subset is non-empty");
            acc + top
        });
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, subset));
        }
    }

    let (bound, subset) = best.expect("at least one subset");
    let assignment = scores
        .iter()
        .map(|row| {
            let mut arg = 0;
            for (i, &c) in subset.iter().enumerate() {
                if row[c] > row[subset[arg]] {
                    arg = i;
                }
            }
            arg
        })
        .collect();
    let messages = subset.iter().map(|&c| MessageVector::from_code(c as u64, m)).collect();
    Ok(ClassicalBoundResult {
        bound,
        optimal_strategy: DeterministicStrategy::new(messages, assignment)?,
        enumeration_size: examined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::chsh_witness;
    use num_rational::Rational64;

    fn mv(v: &[i8]) -> MessageVector {
        MessageVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn encoding_is_msb_first() {
        assert_eq!(mv(&[-1, -1]).code(), 0);
        assert_eq!(mv(&[-1, 1]).code(), 1);
        assert_eq!(mv(&[1, -1]).code(), 2);
        assert_eq!(MessageVector::from_code(2, 2), mv(&[1, -1]));
        assert!(MessageVector::new(vec![1, 0]).is_err());
    }

    #[test]
    fn four_distinct_messages_reach_eight() {
        let w = chsh_witness::<f64>();
        let s =
            DeterministicStrategy::new(vec![mv(&[1, 1]), mv(&[-1, -1]), mv(&[1, -1]), mv(&[-1, 1])], vec![0, 1, 2, 3])
                .unwrap();
        assert_eq!(strategy_value(&w, &s).unwrap(), 8.0);
    }

    #[test]
    fn single_message_gives_zero() {
        let w = chsh_witness::<f64>();
        let s = DeterministicStrategy::new(vec![mv(&[1, 1])], vec![0; 4]).unwrap();
        assert_eq!(strategy_value(&w, &s).unwrap(), 0.0);
    }

    #[test]
    fn three_messages_optimally_assigned_give_six() {
        let w = chsh_witness::<f64>();
        let s = DeterministicStrategy::new(vec![mv(&[1, 1]), mv(&[-1, -1]), mv(&[1, -1])], vec![0, 1, 2, 0]).unwrap();
        assert_eq!(strategy_value(&w, &s).unwrap(), 6.0);
    }

    #[test]
    fn wrong_message_length_is_dimension_error() {
        let w = chsh_witness::<f64>();
        let s = DeterministicStrategy::new(vec![mv(&[1, 1, 1])], vec![0; 4]).unwrap();
        assert!(matches!(strategy_value(&w, &s), Err(Error::Dimension(_))));
    }

    #[test]
    fn chsh_classical_bounds() {
        let w = chsh_witness::<Rational64>();
        let expected = [(1, 0), (2, 4), (3, 6), (4, 8), (7, 8)];
        for (d, c) in expected {
            let r = classical_bound(&w, d).unwrap();
            assert_eq!(r.bound, Rational64::from_integer(c), "d={d}");
            assert_eq!(strategy_value(&w, &r.optimal_strategy).unwrap(), r.bound);
            assert!(r.optimal_strategy.distinct_used() <= d);
        }
        assert_eq!(classical_bound(&w, 2).unwrap().enumeration_size, 6);
        assert_eq!(classical_bound(&w, 4).unwrap().enumeration_size, 1);
    }

    #[test]
    fn tie_break_prefers_smallest_codes() {
        let w = chsh_witness::<f64>();
        let r = classical_bound(&w, 1).unwrap();
        assert_eq!(r.optimal_strategy.messages(), &[mv(&[-1, -1])]);
        let r = classical_bound(&w, 2).unwrap();
        assert_eq!(r.optimal_strategy.messages(), &[mv(&[-1, -1]), mv(&[-1, 1])]);
    }

    #[test]
    fn budget_is_enforced() {
        let s = crate::witness::Scenario::new(2, 5).unwrap();
        let w = Witness::from_fn("w", s, |_, _, o| if o == Outcome::Plus { 1.0 } else { 0.0 }).unwrap();
        assert!(matches!(
            classical_bound_with_budget(&w, 3, 100),
            Err(Error::BudgetExceeded { required: 4960, budget: 100 })
        ));
        assert!(classical_bound_with_budget(&w, 3, 4960).is_ok());
        assert!(classical_bound(&w, 0).is_err());
    }

    #[test]
    fn combinations_are_lexicographic() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(Combinations::new(3, 3).count(), 1);
    }
}
