//! Quantum values of linear witnesses.
//!
//! For binary outcomes the maximum over `d`-dimensional systems is reached
//! with pure states and projective measurements. That makes an alternating
//! (seesaw) search natural:
//!
//! * with measurements fixed, each preparation's best state is a top
//!   eigenvector of `A_x = Σ_{y,s} K(x,y,s) O^y_s`;
//! * with states fixed, each measurement's best `O^y_+` projects onto the
//!   nonnegative eigenspace of `B_y = Σ_x (K(x,y,+1) - K(x,y,-1)) |ψ_x><ψ_x|`.
//!
//! Neither step can lower the witness value, so the search climbs
//! monotonically; its result is a lower bound on `Q_d`. For the CHSH
//! witness the closed-form optima for `d = 2, 3, 4` are provided too.
//!
//! Basis vectors are labelled as kets `|1>, |2>, |0>, |3>` in index order
//! (see [`LOGICAL_LABELS`]), so a qubit lives in the leading two
//! coordinates of a qutrit, and a qutrit in the leading three of a quart.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::classical::{classical_bound, DeterministicStrategy};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix, C};
use crate::scalar::Real;
use crate::seeding;
use crate::witness::{chsh_witness, Behavior, Outcome, Scenario, Witness};

/// Ket label carried by each coordinate index.
pub const LOGICAL_LABELS: [usize; 4] = [1, 2, 0, 3];

/// Coordinate index of the ket `|label>`.
pub fn label_index(label: usize) -> Option<usize> {
    LOGICAL_LABELS.iter().position(|&l| l == label)
}

/// Unit vector in `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T> {
    amplitudes: Vec<C<T>>,
}

impl<T: Real> PureState<T> {
    pub fn new(amplitudes: Vec<C<T>>) -> Result<Self> {
        if amplitudes.is_empty() {
            return invalid("pure state", "empty amplitude vector");
        }
        let n = linalg::norm(&amplitudes);
        if !n.is_finite() || (n * n - T::one()).abs() > T::tol(1e-12) {
            return invalid("pure state", format!("squared norm {} is not 1", n * n));
        }
        Ok(PureState { amplitudes })
    }

    /// Normalizes `amplitudes` first.
    pub fn normalized(amplitudes: &[C<T>]) -> Result<Self> {
        let n = linalg::norm(amplitudes);
        if n == T::zero() || !n.is_finite() {
            return invalid("pure state", "cannot normalize a zero or non-finite vector");
        }
        Self::new(linalg::normalize(amplitudes))
    }

    pub fn from_real(amplitudes: &[T]) -> Result<Self> {
        Self::normalized(&amplitudes.iter().map(|&r| Complex::new(r, T::zero())).collect::<Vec<_>>())
    }

    /// The ket `|label>` in dimension `d`.
    pub fn ket(label: usize, d: usize) -> Result<Self> {
        match label_index(label) {
            Some(i) if i < d => Ok(PureState { amplitudes: linalg::basis(d, i) }),
            _ => invalid("ket", format!("|{label}> is not part of a {d}-dimensional basis")),
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> T {
        linalg::inner(&self.amplitudes, &other.amplitudes).norm_sqr()
    }

    pub fn density(&self) -> CMatrix<T> {
        CMatrix::outer(&self.amplitudes)
    }
}

/// Two-outcome projective measurement, stored as the projector `O_+`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryProjectiveMeasurement<T> {
    projector_plus: CMatrix<T>,
}

impl<T: Real> BinaryProjectiveMeasurement<T> {
    pub fn new(projector_plus: CMatrix<T>) -> Result<Self> {
        if projector_plus.hermitian_defect() > T::tol(1e-12) {
            return invalid("projective measurement", "O_+ is not Hermitian");
        }
        let square = &projector_plus * &projector_plus;
        if square.distance(&projector_plus) > T::tol(1e-10) {
            return invalid("projective measurement", "O_+ is not idempotent");
        }
        let eig = projector_plus.hermitian_eigen();
        let slack = T::tol(1e-10);
        if eig.values.iter().any(|&v| v > T::one() + slack || v < -slack) {
            return invalid("projective measurement", "O_- = 1 - O_+ is not positive semidefinite");
        }
        Ok(BinaryProjectiveMeasurement { projector_plus })
    }

    pub(crate) fn trusted(projector_plus: CMatrix<T>) -> Self {
        BinaryProjectiveMeasurement { projector_plus }
    }

    pub fn dim(&self) -> usize {
        self.projector_plus.dim()
    }

    pub fn projector(&self, outcome: Outcome) -> CMatrix<T> {
        match outcome {
            Outcome::Plus => self.projector_plus.clone(),
            Outcome::Minus => &CMatrix::identity(self.dim()) - &self.projector_plus,
        }
    }

    pub fn projector_plus(&self) -> &CMatrix<T> {
        &self.projector_plus
    }

    /// `O_+ - O_-`.
    pub fn observable(&self) -> CMatrix<T> {
        &self.projector_plus.scale(T::two()) - &CMatrix::identity(self.dim())
    }

    /// Born probability of `+1` on `state`.
    pub fn probability_plus(&self, state: &PureState<T>) -> T {
        self.projector_plus.expectation(state.amplitudes()).re.max(T::zero()).min(T::one())
    }
}

/// Hermitian operator with spectrum in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomicObservable<T> {
    matrix: CMatrix<T>,
    deficiency_vector: Option<Vec<C<T>>>,
}

impl<T: Real> DichotomicObservable<T> {
    /// `1 - 2|m><m|` for a unit vector `m`.
    pub fn from_deficiency_vector(m: Vec<C<T>>) -> Result<Self> {
        let m = PureState::new(m)?.amplitudes;
        let matrix = &CMatrix::identity(m.len()) - &CMatrix::outer(&m).scale(T::two());
        Ok(DichotomicObservable { matrix, deficiency_vector: Some(m) })
    }

    /// Validates the spectrum; records the `-1` eigenvector when that
    /// eigenspace is one-dimensional.
    pub fn from_matrix(matrix: CMatrix<T>) -> Result<Self> {
        if matrix.hermitian_defect() > T::tol(1e-12) {
            return invalid("dichotomic observable", "matrix is not Hermitian");
        }
        let eig = matrix.hermitian_eigen();
        let slack = T::tol(1e-10);
        if eig.values.iter().any(|&v| (v.abs() - T::one()).abs() > slack) {
            return invalid("dichotomic observable", "spectrum is not contained in {-1, +1}");
        }
        let negative: Vec<_> = eig.values.iter().zip(&eig.vectors).filter(|(v, _)| **v < T::zero()).collect();
        let deficiency_vector = (negative.len() == 1).then(|| negative[0].1.clone());
        Ok(DichotomicObservable { matrix, deficiency_vector })
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn deficiency_vector(&self) -> Option<&[C<T>]> {
        self.deficiency_vector.as_deref()
    }

    /// The measurement with `O_+ = (1 + M) / 2`.
    pub fn to_measurement(&self) -> BinaryProjectiveMeasurement<T> {
        let half = T::one() / T::two();
        BinaryProjectiveMeasurement::trusted((&CMatrix::identity(self.matrix.dim()) + &self.matrix).scale(half))
    }
}

/// States, measurements and the witness value they achieve.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumConfig<T> {
    pub dimension: usize,
    pub states: Vec<PureState<T>>,
    pub measurements: Vec<BinaryProjectiveMeasurement<T>>,
    pub value: T,
    /// Measurement angle in radians for CHSH-family configurations.
    pub angle_theta: Option<T>,
}

impl<T: Real> QuantumConfig<T> {
    /// Builds a config and evaluates `witness` on it.
    pub fn evaluated(
        witness: &Witness<T>,
        states: Vec<PureState<T>>,
        measurements: Vec<BinaryProjectiveMeasurement<T>>,
        angle_theta: Option<T>,
    ) -> Result<Self> {
        let dimension = check_dimensions(&states, &measurements)?;
        let behavior = born_behavior(&states, &measurements)?;
        let value = witness.evaluate(&behavior)?;
        Ok(QuantumConfig { dimension, states, measurements, value, angle_theta })
    }

    pub fn behavior(&self) -> Result<Behavior<T>> {
        born_behavior(&self.states, &self.measurements)
    }
}

fn check_dimensions<T: Real>(
    states: &[PureState<T>],
    measurements: &[BinaryProjectiveMeasurement<T>],
) -> Result<usize> {
    let d = states
        .first()
        .map(PureState::dim)
        .or_else(|| measurements.first().map(BinaryProjectiveMeasurement::dim))
        .ok_or_else(|| Error::Dimension("no states or measurements".into()))?;
    if states.iter().any(|s| s.dim() != d) || measurements.iter().any(|m| m.dim() != d) {
        return Err(Error::Dimension(format!("states and measurements must all have dimension {d}")));
    }
    Ok(d)
}

fn born_behavior<T: Real>(
    states: &[PureState<T>],
    measurements: &[BinaryProjectiveMeasurement<T>],
) -> Result<Behavior<T>> {
    check_dimensions(states, measurements)?;
    let scenario = Scenario::new(states.len(), measurements.len())?;
    let plus = states.iter().flat_map(|s| measurements.iter().map(move |m| m.probability_plus(s))).collect();
    Behavior::from_plus(scenario, plus)
}

/// Born-rule behavior `P(s|x,y) = <ψ_x|O^y_s|ψ_x>` after validating every
/// measurement.
pub fn behavior_from_config<T: Real>(config: &QuantumConfig<T>) -> Result<Behavior<T>> {
    for m in &config.measurements {
        BinaryProjectiveMeasurement::new(m.projector_plus.clone())?;
    }
    config.behavior()
}

fn check_theta<T: Real>(theta: T) -> Result<()> {
    let slack = T::tol(1e-12);
    if !(theta >= -slack && theta <= T::constant(std::f64::consts::FRAC_PI_2) + slack) {
        return invalid("angle", format!("theta = {theta} outside [0, pi/2]"));
    }
    Ok(())
}

/// `M_i = 1 - 2|m_i><m_i|` with `|m_{1,2}> = cos(θ/2)|1> ∓ sin(θ/2)|2>`,
/// acting as the identity on the rest of `C^d`.
pub fn chsh_measurement_pair<T: Real>(
    theta: T,
    d: usize,
) -> Result<(DichotomicObservable<T>, DichotomicObservable<T>)> {
    if d < 2 {
        return Err(Error::Dimension(format!("the measurement pair needs d >= 2, got {d}")));
    }
    check_theta(theta)?;
    let half = theta / T::two();
    let (c, s) = (half.cos(), half.sin());
    let vector = |sign: T| {
        let mut v = vec![Complex::new(T::zero(), T::zero()); d];
        v[0] = Complex::new(c, T::zero());
        v[1] = Complex::new(sign * s, T::zero());
        v
    };
    Ok((
        DichotomicObservable::from_deficiency_vector(vector(-T::one()))?,
        DichotomicObservable::from_deficiency_vector(vector(T::one()))?,
    ))
}

fn require_witness_shape<T: Real>(witness: &Witness<T>, states: usize, measurements: usize) -> Result<()> {
    let s = witness.scenario();
    if s.n_preparations() != states || s.n_measurements() != measurements {
        return Err(Error::Dimension(format!(
            "witness scenario {}x{} vs {states} states and {measurements} measurements",
            s.n_preparations(),
            s.n_measurements()
        )));
    }
    Ok(())
}

/// `A_x = Σ_{y,s} K(x,y,s) O^y_s` for every preparation.
fn state_operators<T: Real>(witness: &Witness<T>, measurements: &[BinaryProjectiveMeasurement<T>]) -> Vec<CMatrix<T>> {
    let scenario = witness.scenario();
    let d = measurements[0].dim();
    let identity = CMatrix::identity(d);
    (1..=scenario.n_preparations())
        .map(|x| {
            measurements.iter().enumerate().fold(CMatrix::zeros(d), |acc, (j, m)| {
                let y = j + 1;
                let kp = witness.coefficient(x, y, Outcome::Plus);
                let km = witness.coefficient(x, y, Outcome::Minus);
                let term = &m.projector_plus.scale(kp - km) + &identity.scale(km);
                &acc + &term
            })
        })
        .collect()
}

fn top_eigenvector<T: Real>(a: &CMatrix<T>, support: Option<usize>) -> Vec<C<T>> {
    let d = a.dim();
    match support {
        Some(k) if k < d => {
            let mut v = a.leading_block(k).hermitian_eigen().vectors.swap_remove(0);
            v.resize(d, Complex::new(T::zero(), T::zero()));
            v
        }
        _ => a.hermitian_eigen().vectors.swap_remove(0),
    }
}

/// Best state for each preparation given fixed measurements.
pub fn optimal_states_for_measurements<T: Real>(
    witness: &Witness<T>,
    measurements: &[BinaryProjectiveMeasurement<T>],
) -> Result<Vec<PureState<T>>> {
    optimal_states_in_support(witness, measurements, None)
}

fn optimal_states_in_support<T: Real>(
    witness: &Witness<T>,
    measurements: &[BinaryProjectiveMeasurement<T>],
    support: Option<usize>,
) -> Result<Vec<PureState<T>>> {
    require_witness_shape(witness, witness.scenario().n_preparations(), measurements.len())?;
    check_dimensions(&[], measurements)?;
    state_operators(witness, measurements).iter().map(|a| PureState::normalized(&top_eigenvector(a, support))).collect()
}

/// Best measurement for each setting given fixed states. Zero eigenvalues
/// of `B_y` are assigned to `O_+`.
pub fn optimal_measurements_for_states<T: Real>(
    witness: &Witness<T>,
    states: &[PureState<T>],
) -> Result<Vec<BinaryProjectiveMeasurement<T>>> {
    require_witness_shape(witness, states.len(), witness.scenario().n_measurements())?;
    let d = check_dimensions(states, &[])?;
    let densities: Vec<CMatrix<T>> = states.iter().map(PureState::density).collect();
    Ok((1..=witness.scenario().n_measurements())
        .map(|y| {
            let b = densities.iter().enumerate().fold(CMatrix::zeros(d), |acc, (i, rho)| {
                let x = i + 1;
                let weight = witness.coefficient(x, y, Outcome::Plus) - witness.coefficient(x, y, Outcome::Minus);
                &acc + &rho.scale(weight)
            });
            let tol = T::tol(1e-12) * (T::one() + b.max_abs());
            BinaryProjectiveMeasurement::trusted(b.nonnegative_projector(tol))
        })
        .collect())
}

/// Knobs for [`seesaw_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct SeesawOptions {
    pub restarts: usize,
    /// Stop once a full sweep improves the value by less than this.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    /// Restrict states to the leading `k` basis vectors while measurements
    /// stay unrestricted.
    pub state_support: Option<usize>,
}

pub use crate::seeding::DEFAULT_SEED;

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions { restarts: 50, tolerance: 1e-9, max_sweeps: 500, seed: DEFAULT_SEED, state_support: None }
    }
}

/// One climb from a given starting point.
#[derive(Debug, Clone)]
pub struct SeesawRun<T> {
    pub config: QuantumConfig<T>,
    /// Witness value after every half-step, starting with the first state
    /// step.
    pub history: Vec<T>,
    pub sweeps: usize,
}

/// Best climb over all restarts.
#[derive(Debug, Clone)]
pub struct SeesawResult<T> {
    /// A lower bound on the quantum value.
    pub config: QuantumConfig<T>,
    pub best_restart: usize,
    /// Final value of every restart, in restart order.
    pub restart_values: Vec<T>,
}

/// Random projective measurements: projectors onto Haar-random subspaces of
/// rank uniform in `1..d` (rank 1 when `d = 1`).
pub fn random_measurements<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    count: usize,
) -> Vec<BinaryProjectiveMeasurement<T>> {
    (0..count)
        .map(|_| {
            let rank = if d <= 1 { d } else { rng.random_range(1..d) };
            let span = linalg::haar_orthonormal::<T, R>(rng, d, rank);
            let p = span.iter().fold(CMatrix::zeros(d), |acc, v| &acc + &CMatrix::outer(v));
            BinaryProjectiveMeasurement::trusted(p)
        })
        .collect()
}

/// Alternates state and measurement steps from `initial` measurements.
pub fn seesaw_from<T: Real>(
    witness: &Witness<T>,
    initial: Vec<BinaryProjectiveMeasurement<T>>,
    options: &SeesawOptions,
) -> Result<SeesawRun<T>> {
    let tolerance = T::constant(options.tolerance);
    let mut measurements = initial;
    let mut history = Vec::new();
    let mut states = optimal_states_in_support(witness, &measurements, options.state_support)?;
    let mut value = QuantumConfig::evaluated(witness, states.clone(), measurements.clone(), None)?.value;
    history.push(value);
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let start = value;
        measurements = optimal_measurements_for_states(witness, &states)?;
        value = QuantumConfig::evaluated(witness, states.clone(), measurements.clone(), None)?.value;
        history.push(value);
        states = optimal_states_in_support(witness, &measurements, options.state_support)?;
        value = QuantumConfig::evaluated(witness, states.clone(), measurements.clone(), None)?.value;
        history.push(value);
        if value - start < tolerance || sweeps >= options.max_sweeps {
            break;
        }
    }
    let config = QuantumConfig::evaluated(witness, states, measurements, None)?;
    Ok(SeesawRun { config, history, sweeps })
}

/// Seesaw with default seed and sweep budget.
pub fn seesaw<T: Real>(witness: &Witness<T>, d: usize, restarts: usize, tolerance: f64) -> Result<SeesawResult<T>> {
    seesaw_with(witness, d, &SeesawOptions { restarts, tolerance, ..SeesawOptions::default() })
}

/// Lower bound on the quantum value in dimension `d`, the best of
/// `options.restarts` independent climbs. Ties go to the lowest restart.
pub fn seesaw_with<T: Real>(witness: &Witness<T>, d: usize, options: &SeesawOptions) -> Result<SeesawResult<T>> {
    if d == 0 {
        return invalid("dimension", "quantum dimension must be at least 1");
    }
    if options.restarts == 0 {
        return invalid("restarts", "need at least one restart");
    }
    if options.tolerance.is_nan() || options.tolerance <= 0.0 {
        return invalid("tolerance", format!("{} is not positive", options.tolerance));
    }
    let m = witness.scenario().n_measurements();
    let runs: Vec<Result<SeesawRun<T>>> = (0..options.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeding::substream(options.seed, i);
            let initial = random_measurements::<T, _>(&mut rng, d, m);
            seesaw_from(witness, initial, options)
        })
        .collect();
    let mut best: Option<(usize, QuantumConfig<T>)> = None;
    let mut restart_values = Vec::with_capacity(runs.len());
    for (i, run) in runs.into_iter().enumerate() {
        let run = run?;
        restart_values.push(run.config.value);
        if best.as_ref().is_none_or(|(_, b)| run.config.value > b.value) {
            best = Some((i, run.config));
        }
    }
    let (best_restart, config) = best.expect("at least one restart");
    Ok(SeesawResult { config, best_restart, restart_values })
}

/// CHSH value along the optimal family: `4(cos θ + sin θ)` for qubits and
/// `2 + 2 cos θ + 4 sin θ` for qutrits.
pub fn chsh_quantum_value<T: Real>(theta: T, d: usize) -> Result<T> {
    check_theta(theta)?;
    let c = T::constant;
    match d {
        2 => Ok(c(4.0) * (theta.cos() + theta.sin())),
        3 => Ok(c(2.0) + c(2.0) * theta.cos() + c(4.0) * theta.sin()),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// Orthogonal basis states carrying a deterministic strategy: preparation
/// `x` sends `e_k` for its message `k`, and `O^y_+` projects onto the
/// messages answering `+1` to setting `y`.
pub fn config_from_strategy<T: Real>(
    witness: &Witness<T>,
    strategy: &DeterministicStrategy,
) -> Result<QuantumConfig<T>> {
    let d = strategy.messages().len();
    let m = witness.scenario().n_measurements();
    let states =
        strategy.assignment().iter().map(|&k| PureState::new(linalg::basis(d, k))).collect::<Result<Vec<_>>>()?;
    let measurements = (1..=m)
        .map(|y| {
            let p = strategy
                .messages()
                .iter()
                .enumerate()
                .filter(|(_, v)| v.outcome(y) == Outcome::Plus)
                .fold(CMatrix::zeros(d), |acc, (k, _)| &acc + &CMatrix::outer(&linalg::basis(d, k)));
            BinaryProjectiveMeasurement::trusted(p)
        })
        .collect();
    QuantumConfig::evaluated(witness, states, measurements, None)
}

/// Closed-form optimal CHSH configuration for `d = 2, 3, 4`. The stored
/// value is the closed form; it matches the Born-rule evaluation to
/// rounding.
pub fn chsh_optimal_config<T: Real>(d: usize) -> Result<QuantumConfig<T>> {
    let witness = chsh_witness::<T>();
    let c = T::constant;
    match d {
        2 => {
            let theta = c(std::f64::consts::FRAC_PI_4);
            let (m1, m2) = chsh_measurement_pair(theta, 2)?;
            let s = c(std::f64::consts::FRAC_1_SQRT_2);
            let states = vec![
                PureState::ket(2, 2)?,
                PureState::ket(1, 2)?,
                PureState::from_real(&[s, s])?,
                PureState::from_real(&[s, -s])?,
            ];
            let mut config = QuantumConfig::evaluated(
                &witness,
                states,
                vec![m1.to_measurement(), m2.to_measurement()],
                Some(theta),
            )?;
            config.value = c(4.0) * c(2.0).sqrt();
            Ok(config)
        }
        3 => {
            let theta = c(2.0).atan();
            let (m1, m2) = chsh_measurement_pair(theta, 3)?;
            let measurements = vec![m1.to_measurement(), m2.to_measurement()];
            let states = optimal_states_for_measurements(&witness, &measurements)?;
            let mut config = QuantumConfig::evaluated(&witness, states, measurements, Some(theta))?;
            config.value = c(2.0) * (c(1.0) + c(5.0).sqrt());
            Ok(config)
        }
        4 => {
            let classical = classical_bound(&witness, 4)?;
            config_from_strategy(&witness, &classical.optimal_strategy)
        }
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn spectrum(m: &CMatrix<f64>) -> Vec<f64> {
        m.hermitian_eigen().values
    }

    #[test]
    fn born_rule_examples() {
        let ket1 = PureState::<f64>::ket(1, 2).unwrap();
        let p1 = BinaryProjectiveMeasurement::new(ket1.density()).unwrap();
        assert_eq!(p1.probability_plus(&ket1), 1.0);
        let plus = PureState::from_real(&[1.0, 1.0]).unwrap();
        assert!(close(p1.probability_plus(&plus), 0.5, 1e-15));
    }

    #[test]
    fn projector_validation() {
        let not_idempotent = CMatrix::<f64>::identity(2).scale(0.5);
        assert!(BinaryProjectiveMeasurement::new(not_idempotent).is_err());
        let mut not_hermitian = CMatrix::<f64>::zeros(2);
        not_hermitian[(0, 1)] = Complex::new(1.0, 0.0);
        assert!(BinaryProjectiveMeasurement::new(not_hermitian).is_err());
        assert!(PureState::<f64>::new(vec![Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn measurement_pair_eigenstructure_qubit() {
        let (m1, m2) = chsh_measurement_pair(FRAC_PI_4, 2).unwrap();
        let sum = spectrum(&(m1.matrix() + m2.matrix()));
        let diff = spectrum(&(m1.matrix() - m2.matrix()));
        assert!(close(sum[0], SQRT_2, 1e-12) && close(sum[1], -SQRT_2, 1e-12));
        assert!(close(diff[0], SQRT_2, 1e-12) && close(diff[1], -SQRT_2, 1e-12));
    }

    #[test]
    fn measurement_pair_qutrit_has_plus_two_on_ket_zero() {
        for theta in [0.0, 0.3, 1.1, std::f64::consts::FRAC_PI_2] {
            let (m1, m2) = chsh_measurement_pair(theta, 3).unwrap();
            let sum = m1.matrix() + m2.matrix();
            let zero = PureState::<f64>::ket(0, 3).unwrap();
            let image = sum.apply(zero.amplitudes());
            assert!(close(image[2].re, 2.0, 1e-14));
            assert!(image[0].norm() < 1e-14 && image[1].norm() < 1e-14);
        }
    }

    #[test]
    fn measurement_pair_rejects_bad_inputs() {
        assert!(matches!(chsh_measurement_pair(0.5, 1), Err(Error::Dimension(_))));
        assert!(chsh_measurement_pair(2.0, 2).is_err());
        assert!(chsh_measurement_pair(-0.1, 2).is_err());
    }

    #[test]
    fn observable_round_trip() {
        let (m1, _) = chsh_measurement_pair(0.7, 3).unwrap();
        let rebuilt = DichotomicObservable::from_matrix(m1.to_measurement().observable()).unwrap();
        assert!(rebuilt.matrix().distance(m1.matrix()) < 1e-14);
        let d = rebuilt.deficiency_vector().unwrap();
        let expected = m1.deficiency_vector().unwrap();
        assert!(linalg::inner(d, expected).norm() > 1.0 - 1e-12);
        let not_dichotomic = CMatrix::<f64>::identity(2).scale(0.5);
        assert!(DichotomicObservable::from_matrix(not_dichotomic).is_err());
    }

    #[test]
    fn qubit_optimal_states_from_state_step() {
        let (m1, m2) = chsh_measurement_pair(FRAC_PI_4, 2).unwrap();
        let states =
            optimal_states_for_measurements(&chsh_witness(), &[m1.to_measurement(), m2.to_measurement()]).unwrap();
        assert!(states[0].fidelity(&PureState::ket(2, 2).unwrap()) > 1.0 - 1e-12);
        assert!(states[1].fidelity(&PureState::ket(1, 2).unwrap()) > 1.0 - 1e-12);
        assert!(states[2].fidelity(&PureState::from_real(&[1.0, 1.0]).unwrap()) > 1.0 - 1e-12);
        assert!(states[3].fidelity(&PureState::from_real(&[1.0, -1.0]).unwrap()) > 1.0 - 1e-12);
    }

    #[test]
    fn qutrit_first_state_is_ket_zero() {
        for theta in [0.2, 1.0, 2f64.atan()] {
            let (m1, m2) = chsh_measurement_pair(theta, 3).unwrap();
            let states =
                optimal_states_for_measurements(&chsh_witness(), &[m1.to_measurement(), m2.to_measurement()]).unwrap();
            assert!(states[0].fidelity(&PureState::ket(0, 3).unwrap()) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn measurement_step_recovers_optimum() {
        let config = chsh_optimal_config::<f64>(2).unwrap();
        let w = chsh_witness();
        let ms = optimal_measurements_for_states(&w, &config.states).unwrap();
        let v = QuantumConfig::evaluated(&w, config.states.clone(), ms.clone(), None).unwrap().value;
        assert!(close(v, 4.0 * SQRT_2, 1e-12));
        let (m1, _) = chsh_measurement_pair(FRAC_PI_4, 2).unwrap();
        assert!(ms[0].observable().distance(m1.matrix()) < 1e-12);
    }

    #[test]
    fn degenerate_b_gives_identity_projector() {
        let w = chsh_witness();
        let states = vec![PureState::<f64>::ket(1, 2).unwrap(); 4];
        let ms = optimal_measurements_for_states(&w, &states).unwrap();
        assert!(ms[0].projector_plus().distance(&CMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn optimal_configs() {
        let c2 = chsh_optimal_config::<f64>(2).unwrap();
        assert_eq!(c2.value, 4.0 * SQRT_2);
        assert!(c2.states[0].fidelity(&c2.states[1]) < 1e-30);
        let e = c2.behavior().unwrap().expectations();
        assert!(e.values().iter().all(|v| close(v.abs(), SQRT_2 / 2.0, 1e-12)));
        assert!(close(e.get(1, 1), SQRT_2 / 2.0, 1e-12));

        let c3 = chsh_optimal_config::<f64>(3).unwrap();
        let w = chsh_witness();
        assert!(close(w.evaluate(&c3.behavior().unwrap()).unwrap(), c3.value, 1e-10));
        assert!(close(c3.value, 2.0 * (1.0 + 5f64.sqrt()), 1e-15));

        let c4 = chsh_optimal_config::<f64>(4).unwrap();
        assert_eq!(c4.value, 8.0);
        for i in 0..4 {
            for j in 0..i {
                assert_eq!(c4.states[i].fidelity(&c4.states[j]), 0.0);
            }
        }
        assert!(matches!(chsh_optimal_config::<f64>(5), Err(Error::UnsupportedDimension(5))));
    }

    #[test]
    fn analytic_family_values() {
        assert!(close(chsh_quantum_value(FRAC_PI_4, 2).unwrap(), 4.0 * SQRT_2, 1e-12));
        assert!(close(chsh_quantum_value(2f64.atan(), 3).unwrap(), 2.0 * (1.0 + 5f64.sqrt()), 1e-12));
        assert_eq!(chsh_quantum_value(0.0, 2).unwrap(), 4.0);
        assert!(matches!(chsh_quantum_value(0.1, 4), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn seesaw_in_dimension_one_is_trivial() {
        let r = seesaw(&chsh_witness::<f64>(), 1, 3, 1e-9).unwrap();
        assert!(close(r.config.value, 0.0, 1e-12));
    }

    #[test]
    fn seesaw_is_deterministic_in_seed() {
        let w = chsh_witness::<f64>();
        let opts = SeesawOptions { restarts: 8, seed: 11, ..SeesawOptions::default() };
        let a = seesaw_with(&w, 3, &opts).unwrap();
        let b = seesaw_with(&w, 3, &opts).unwrap();
        assert_eq!(a.restart_values, b.restart_values);
        assert_eq!(a.best_restart, b.best_restart);
    }

    #[test]
    fn seesaw_runs_in_single_precision() {
        let r = seesaw(&chsh_witness::<f32>(), 2, 10, 1e-6).unwrap();
        assert!((r.config.value - 4.0 * std::f32::consts::SQRT_2).abs() < 1e-4);
    }
}
