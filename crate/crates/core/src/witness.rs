//! Prepare-and-measure scenarios, linear witnesses and behaviors.
//!
//! A witness is stored in its general form: one real coefficient
//! `K(x, y, s)` per preparation `x`, measurement `y` and outcome `s = ±1`,
//! and evaluates to `Σ K(x, y, s) P(s|x, y)`. The expectation form
//! `offset + Σ c_xy E_xy` is derived from it on demand.
//!
//! All public accessors take 1-based `x` and `y` labels. Dense tables are
//! row-major in `x`, then `y`.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::scalar::{Real, Scalar};
use crate::textfmt;

/// Binary measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Minus,
    Plus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }
}

/// `N` preparations, `m` binary measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    n_preparations: usize,
    n_measurements: usize,
}

impl Scenario {
    pub fn new(n_preparations: usize, n_measurements: usize) -> Result<Self> {
        if n_preparations == 0 || n_measurements == 0 {
            return invalid("scenario", format!("need N >= 1 and m >= 1, got N={n_preparations}, m={n_measurements}"));
        }
        Ok(Scenario { n_preparations, n_measurements })
    }

    pub fn n_preparations(&self) -> usize {
        self.n_preparations
    }

    pub fn n_measurements(&self) -> usize {
        self.n_measurements
    }

    /// Number of `(x, y)` pairs.
    pub fn n_pairs(&self) -> usize {
        self.n_preparations * self.n_measurements
    }

    /// Row-major index of the 1-based pair `(x, y)`.
    pub fn pair_index(&self, x: usize, y: usize) -> usize {
        assert!(
            (1..=self.n_preparations).contains(&x) && (1..=self.n_measurements).contains(&y),
            "pair ({x}, {y}) outside scenario {}x{}",
            self.n_preparations,
            self.n_measurements
        );
        (x - 1) * self.n_measurements + (y - 1)
    }

    /// All 1-based `(x, y)` pairs in storage order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let m = self.n_measurements;
        (1..=self.n_preparations).flat_map(move |x| (1..=m).map(move |y| (x, y)))
    }

    pub(crate) fn ensure_same(&self, other: &Scenario) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "scenario {}x{} does not match {}x{}",
                self.n_preparations, self.n_measurements, other.n_preparations, other.n_measurements
            )))
        }
    }
}

/// A linear dimension witness in `K(x, y, s)` form.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness<T> {
    name: String,
    scenario: Scenario,
    k_plus: Vec<T>,
    k_minus: Vec<T>,
}

impl<T: Scalar> Witness<T> {
    /// Builds a witness from row-major `K(x, y, +1)` and `K(x, y, -1)` tables.
    pub fn new(name: impl Into<String>, scenario: Scenario, k_plus: Vec<T>, k_minus: Vec<T>) -> Result<Self> {
        let n = scenario.n_pairs();
        if k_plus.len() != n || k_minus.len() != n {
            return Err(Error::Dimension(format!(
                "coefficient tables have {} and {} entries, scenario needs {n}",
                k_plus.len(),
                k_minus.len()
            )));
        }
        if let Some(i) = k_plus.iter().chain(&k_minus).position(|k| !k.finite()) {
            let i = i % n;
            return invalid(
                "witness",
                format!(
                    "non-finite coefficient at ({}, {})",
                    i / scenario.n_measurements() + 1,
                    i % scenario.n_measurements() + 1
                ),
            );
        }
        Ok(Witness { name: name.into(), scenario, k_plus, k_minus })
    }

    /// Builds a witness from a closure over 1-based `(x, y, s)`.
    pub fn from_fn(
        name: impl Into<String>,
        scenario: Scenario,
        mut k: impl FnMut(usize, usize, Outcome) -> T,
    ) -> Result<Self> {
        let k_plus = scenario.pairs().map(|(x, y)| k(x, y, Outcome::Plus)).collect();
        let k_minus = scenario.pairs().map(|(x, y)| k(x, y, Outcome::Minus)).collect();
        Self::new(name, scenario, k_plus, k_minus)
    }

    /// Builds the witness `offset + Σ c_xy E_xy` with `c` given row-major.
    /// The offset is spread evenly over the `K(x, y, ±1)` entries.
    pub fn from_expectation_form(
        name: impl Into<String>,
        scenario: Scenario,
        offset: T,
        coefficients: &[T],
    ) -> Result<Self> {
        if coefficients.len() != scenario.n_pairs() {
            return Err(Error::Dimension(format!(
                "{} expectation coefficients for scenario with {} pairs",
                coefficients.len(),
                scenario.n_pairs()
            )));
        }
        let n_pairs = T::from_usize(scenario.n_pairs()).expect("pair count fits scalar");
        let shift = offset / n_pairs;
        let k_plus = coefficients.iter().map(|&c| c + shift).collect();
        let k_minus = coefficients.iter().map(|&c| shift - c).collect();
        Self::new(name, scenario, k_plus, k_minus)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// `K(x, y, s)` for 1-based `x`, `y`.
    pub fn coefficient(&self, x: usize, y: usize, outcome: Outcome) -> T {
        let i = self.scenario.pair_index(x, y);
        match outcome {
            Outcome::Plus => self.k_plus[i],
            Outcome::Minus => self.k_minus[i],
        }
    }

    /// `Σ K(x, y, s) P(s|x, y)`.
    pub fn evaluate(&self, behavior: &Behavior<T>) -> Result<T> {
        self.scenario.ensure_same(&behavior.scenario)?;
        Ok(self
            .k_plus
            .iter()
            .zip(&self.k_minus)
            .zip(behavior.plus.iter().zip(&behavior.minus))
            .fold(T::zero(), |acc, ((&kp, &km), (&pp, &pm))| acc + kp * pp + km * pm))
    }

    /// Offset and `c_xy = (K(x,y,+1) - K(x,y,-1)) / 2`.
    pub fn expectation_form(&self) -> ExpectationForm<T> {
        let two = T::two();
        let coefficients = self.k_plus.iter().zip(&self.k_minus).map(|(&kp, &km)| (kp - km) / two).collect();
        let offset = self.k_plus.iter().zip(&self.k_minus).fold(T::zero(), |acc, (&kp, &km)| acc + (kp + km) / two);
        ExpectationForm { scenario: self.scenario, offset, coefficients }
    }

    /// Parses the line-oriented witness file format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = textfmt::content_lines(text);
        let (line, tokens) = lines.next().ok_or(Error::Parse { line: 1, message: "empty witness file".into() })?;
        if tokens.first() != Some(&"witness") || tokens.len() < 2 {
            return textfmt::parse_error(line, "expected `witness <name>`");
        }
        let name = tokens[1..].join(" ");
        let (line, tokens) =
            lines.next().ok_or(Error::Parse { line, message: "missing `scenario N m` line".into() })?;
        let (n, m) = textfmt::parse_scenario_line(line, &tokens)?;
        let scenario = Scenario::new(n, m).or_else(|e| textfmt::parse_error(line, e.to_string()))?;
        let table = textfmt::parse_pair_table::<T>(lines, n, m, "x y K_plus K_minus")?;
        let (k_plus, k_minus) = table.into_iter().unzip();
        Self::new(name, scenario, k_plus, k_minus)
    }

    /// Serializes to the witness file format.
    pub fn to_file_string(&self) -> String {
        let mut out = format!(
            "witness {}\nscenario {} {}\n",
            self.name,
            self.scenario.n_preparations(),
            self.scenario.n_measurements()
        );
        for (i, (x, y)) in self.scenario.pairs().enumerate() {
            let _ = writeln!(out, "{x} {y} {} {}", self.k_plus[i], self.k_minus[i]);
        }
        out
    }
}

/// Convenience wrapper around [`Witness::evaluate`].
pub fn evaluate_witness<T: Scalar>(witness: &Witness<T>, behavior: &Behavior<T>) -> Result<T> {
    witness.evaluate(behavior)
}

/// The CHSH-inspired witness
/// `(E11 + E12) - (E21 + E22) + (E31 - E32) - (E41 - E42)`.
pub fn chsh_witness<T: Scalar>() -> Witness<T> {
    let scenario = Scenario::new(4, 2).expect("static scenario");
    let one = T::one();
    let c = [one, one, -one, -one, one, -one, -one, one];
    Witness::from_expectation_form("chsh", scenario, T::zero(), &c).expect("static witness")
}

/// `offset + Σ c_xy E_xy`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationForm<T> {
    scenario: Scenario,
    pub offset: T,
    coefficients: Vec<T>,
}

impl<T: Scalar> ExpectationForm<T> {
    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// `c_xy` for 1-based `x`, `y`.
    pub fn coefficient(&self, x: usize, y: usize) -> T {
        self.coefficients[self.scenario.pair_index(x, y)]
    }

    /// Row `c_x` for the 1-based preparation `x`.
    pub fn row(&self, x: usize) -> &[T] {
        let m = self.scenario.n_measurements();
        &self.coefficients[(x - 1) * m..x * m]
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn evaluate(&self, table: &ExpectationTable<T>) -> Result<T> {
        self.scenario.ensure_same(&table.scenario)?;
        Ok(self.coefficients.iter().zip(&table.values).fold(self.offset, |acc, (&c, &e)| acc + c * e))
    }

    /// `Σ |c_xy| + offset`, the value no behavior can exceed.
    pub fn algebraic_ceiling(&self) -> T {
        self.coefficients.iter().fold(self.offset, |acc, c| acc + c.magnitude())
    }
}

/// Conditional outcome probabilities `P(s|x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior<T> {
    scenario: Scenario,
    plus: Vec<T>,
    minus: Vec<T>,
}

/// Probabilities more than this far from normalized are rejected; anything
/// closer is renormalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

impl<T: Scalar> Behavior<T> {
    /// Builds a behavior from row-major `P(+1|x,y)` and `P(-1|x,y)` tables.
    pub fn new(scenario: Scenario, plus: Vec<T>, minus: Vec<T>) -> Result<Self> {
        let n = scenario.n_pairs();
        if plus.len() != n || minus.len() != n {
            return Err(Error::Dimension(format!(
                "probability tables have {} and {} entries, scenario needs {n}",
                plus.len(),
                minus.len()
            )));
        }
        let tol = T::tolerance(NORMALIZATION_TOLERANCE);
        let (zero, one) = (T::zero(), T::one());
        let mut plus = plus;
        let mut minus = minus;
        for (i, (x, y)) in scenario.pairs().enumerate() {
            let (p, q) = (plus[i], minus[i]);
            if !p.finite() || !q.finite() {
                return invalid("behavior", format!("non-finite probability at ({x}, {y})"));
            }
            if p < zero - tol || q < zero - tol || p > one + tol || q > one + tol {
                return invalid("behavior", format!("probability outside [0, 1] at ({x}, {y})"));
            }
            let sum = p + q;
            if (sum - one).magnitude() > tol {
                return invalid("behavior", format!("P(+1|{x},{y}) + P(-1|{x},{y}) = {sum}, expected 1"));
            }
            let p = if p < zero { zero } else { p };
            let q = if q < zero { zero } else { q };
            let sum = p + q;
            plus[i] = p / sum;
            minus[i] = q / sum;
        }
        Ok(Behavior { scenario, plus, minus })
    }

    /// Builds a behavior from `P(+1|x, y)` alone.
    pub fn from_plus(scenario: Scenario, plus: Vec<T>) -> Result<Self> {
        let minus = plus.iter().map(|&p| T::one() - p).collect();
        Self::new(scenario, plus, minus)
    }

    /// Every outcome equal to `outcome` with certainty.
    pub fn deterministic(scenario: Scenario, outcome: Outcome) -> Self {
        let (p, q) = match outcome {
            Outcome::Plus => (T::one(), T::zero()),
            Outcome::Minus => (T::zero(), T::one()),
        };
        let n = scenario.n_pairs();
        Behavior { scenario, plus: vec![p; n], minus: vec![q; n] }
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let half = T::one() / T::two();
        let n = scenario.n_pairs();
        Behavior { scenario, plus: vec![half; n], minus: vec![half; n] }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// `P(s|x, y)` for 1-based `x`, `y`.
    pub fn probability(&self, x: usize, y: usize, outcome: Outcome) -> T {
        let i = self.scenario.pair_index(x, y);
        match outcome {
            Outcome::Plus => self.plus[i],
            Outcome::Minus => self.minus[i],
        }
    }

    /// `E_xy = P(+1|x, y) - P(-1|x, y)`.
    pub fn expectations(&self) -> ExpectationTable<T> {
        ExpectationTable {
            scenario: self.scenario,
            values: self.plus.iter().zip(&self.minus).map(|(&p, &q)| p - q).collect(),
        }
    }

    /// `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &Behavior<T>, weight: T) -> Result<Self> {
        self.scenario.ensure_same(&other.scenario)?;
        if weight < T::zero() || weight > T::one() {
            return invalid("mixture weight", format!("{weight} outside [0, 1]"));
        }
        let rest = T::one() - weight;
        let blend = |a: &[T], b: &[T]| -> Vec<T> { a.iter().zip(b).map(|(&u, &v)| weight * u + rest * v).collect() };
        Self::new(self.scenario, blend(&self.plus, &other.plus), blend(&self.minus, &other.minus))
    }

    /// Parses `scenario N m` followed by `x y P_plus P_minus` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = textfmt::content_lines(text);
        let (line, tokens) = lines.next().ok_or(Error::Parse { line: 1, message: "empty behavior file".into() })?;
        let (n, m) = textfmt::parse_scenario_line(line, &tokens)?;
        let scenario = Scenario::new(n, m).or_else(|e| textfmt::parse_error(line, e.to_string()))?;
        let table = textfmt::parse_pair_table::<T>(lines, n, m, "x y P_plus P_minus")?;
        let (plus, minus) = table.into_iter().unzip();
        Self::new(scenario, plus, minus)
    }
}

/// Free-function form of [`Behavior::expectations`].
pub fn expectations_from_behavior<T: Scalar>(behavior: &Behavior<T>) -> ExpectationTable<T> {
    behavior.expectations()
}

/// Correlators `E_xy`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationTable<T> {
    scenario: Scenario,
    values: Vec<T>,
}

impl<T: Scalar> ExpectationTable<T> {
    pub fn new(scenario: Scenario, values: Vec<T>) -> Result<Self> {
        if values.len() != scenario.n_pairs() {
            return Err(Error::Dimension(format!(
                "{} expectations for scenario with {} pairs",
                values.len(),
                scenario.n_pairs()
            )));
        }
        let one = T::one();
        if let Some(i) = values.iter().position(|&e| !e.finite() || e > one || e < -one) {
            let m = scenario.n_measurements();
            return invalid(
                "expectation table",
                format!("E_{}{} = {} outside [-1, 1]", i / m + 1, i % m + 1, values[i]),
            );
        }
        Ok(ExpectationTable { scenario, values })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[self.scenario.pair_index(x, y)]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Whether a bound refers to classical messages or quantum systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Classical,
    Quantum,
}

/// Classical and quantum bounds of one witness at one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessBounds<T> {
    pub dimension: usize,
    pub classical_bound: T,
    pub quantum_bound: T,
}

impl<T: Scalar> WitnessBounds<T> {
    /// The bound `λ_d` that applies to the given kind of system.
    pub fn lambda(&self, kind: SystemKind) -> T {
        match kind {
            SystemKind::Classical => self.classical_bound,
            SystemKind::Quantum => self.quantum_bound,
        }
    }
}

/// Closed-form bounds of the CHSH witness. Dimensions of four and above
/// saturate the algebraic maximum of 8.
pub fn chsh_bounds<T: Real>(dimension: usize) -> Result<WitnessBounds<T>> {
    let c = T::constant;
    let (classical_bound, quantum_bound) = match dimension {
        0 => return Err(Error::UnsupportedDimension(0)),
        1 => (c(0.0), c(0.0)),
        2 => (c(4.0), c(4.0) * c(2.0).sqrt()),
        3 => (c(6.0), c(2.0) * (c(1.0) + c(5.0).sqrt())),
        _ => (c(8.0), c(8.0)),
    };
    Ok(WitnessBounds { dimension, classical_bound, quantum_bound })
}
