//! Photonic prepare-and-measure setup.
//!
//! A photon lives in four modes: polarization `H`/`V` in spatial modes `a`
//! and `b`. The logical kets map onto them as
//!
//! | ket   | mode    | detector |
//! |-------|---------|----------|
//! | `|1>` | `V, a`  | D1       |
//! | `|2>` | `H, a`  | D2       |
//! | `|0>` | `H, b`  | D3       |
//! | `|3>` | `V, b`  | D4       |
//!
//! Preparation uses three half-wave plates. The analyser is one half-wave
//! plate at angle `φ` acting on mode `a`, followed by a polarizing beam
//! splitter per spatial mode. An analyser angle `φ` realizes the dichotomic
//! observable `1 - 2|m><m|` with `|m> = cos(2φ)|1> - sin(2φ)|2>`, i.e. the
//! measurement family's angle is `θ = 4φ`.
//!
//! All interface angles are in degrees.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::classical::{classical_bound, DeterministicStrategy};
use crate::error::{invalid, Error, Result};
use crate::linalg::{CMatrix, C};
use crate::quantum::{chsh_optimal_config, label_index, DichotomicObservable, PureState, LOGICAL_LABELS};
use crate::scalar::Real;
use crate::seeding;
use crate::textfmt;
use crate::witness::{chsh_witness, Behavior, Outcome, Scenario};

/// Photon modes in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    HA,
    VA,
    HB,
    VB,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::HA, Mode::VA, Mode::HB, Mode::VB];

    /// The logical ket label this mode encodes.
    pub fn ket_label(self) -> usize {
        match self {
            Mode::VA => 1,
            Mode::HA => 2,
            Mode::VB => 3,
            Mode::HB => 0,
        }
    }

    pub fn from_ket_label(label: usize) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.ket_label() == label)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Real amplitudes over `(H,a), (V,a), (H,b), (V,b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState<T> {
    amplitudes: [T; 4],
}

impl<T: Real> ModeState<T> {
    pub fn new(amplitudes: [T; 4]) -> Result<Self> {
        let norm_sq = amplitudes.iter().fold(T::zero(), |acc, &a| acc + a * a);
        if !norm_sq.is_finite() || (norm_sq - T::one()).abs() > T::tol(1e-12) {
            return invalid("mode state", format!("squared norm {norm_sq} is not 1"));
        }
        Ok(ModeState { amplitudes })
    }

    /// Strips a global phase, then requires every amplitude to be real.
    pub fn from_complex(amplitudes: [C<T>; 4]) -> Result<Self> {
        let lead =
            amplitudes
                .iter()
                .enumerate()
                .fold((0, T::zero()), |(bi, bm), (i, z)| if z.norm() > bm { (i, z.norm()) } else { (bi, bm) });
        if lead.1 == T::zero() {
            return invalid("mode state", "zero vector");
        }
        let rot = amplitudes[lead.0].conj() / lead.1;
        let mut real = [T::zero(); 4];
        for (r, z) in real.iter_mut().zip(amplitudes) {
            let z = z * rot;
            if z.im.abs() > T::tol(1e-10) {
                return Err(Error::UnreachableState(
                    "relative phases between modes cannot be produced by half-wave plates".into(),
                ));
            }
            *r = z.re;
        }
        Self::new(real)
    }

    /// Embeds a logical state of dimension up to four.
    pub fn from_logical(state: &PureState<T>) -> Result<Self> {
        if state.dim() > 4 {
            return Err(Error::Dimension(format!("{}-dimensional state does not fit four modes", state.dim())));
        }
        let mut amps = [Complex::new(T::zero(), T::zero()); 4];
        for (i, &z) in state.amplitudes().iter().enumerate() {
            let mode = Mode::from_ket_label(LOGICAL_LABELS[i]).expect("label has a mode");
            amps[mode.index()] = z;
        }
        Self::from_complex(amps)
    }

    pub fn amplitudes(&self) -> [T; 4] {
        self.amplitudes
    }

    pub fn amplitude(&self, mode: Mode) -> T {
        self.amplitudes[mode.index()]
    }

    /// Amplitude on the logical ket `|label>`.
    pub fn ket_amplitude(&self, label: usize) -> Option<T> {
        Mode::from_ket_label(label).map(|m| self.amplitude(m))
    }
}

/// Orientations of the three preparation half-wave plates, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparationSettings {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

fn check_plate_angle(what: &'static str, angle: f64) -> Result<()> {
    if (0.0..180.0).contains(&angle) {
        Ok(())
    } else {
        invalid(what, format!("{angle} deg outside [0, 180)"))
    }
}

/// Reduces an angle to `[0, 180)` degrees.
pub fn wrap_degrees(angle: f64) -> f64 {
    let w = angle.rem_euclid(180.0);
    if w >= 180.0 {
        0.0
    } else {
        w
    }
}

impl PreparationSettings {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Result<Self> {
        check_plate_angle("theta1", theta1)?;
        check_plate_angle("theta2", theta2)?;
        check_plate_angle("theta3", theta3)?;
        Ok(PreparationSettings { theta1, theta2, theta3 })
    }

    /// Each angle shifted by the given offset and wrapped back into range.
    pub fn perturbed(&self, d1: f64, d2: f64, d3: f64) -> Self {
        PreparationSettings {
            theta1: wrap_degrees(self.theta1 + d1),
            theta2: wrap_degrees(self.theta2 + d2),
            theta3: wrap_degrees(self.theta3 + d3),
        }
    }
}

/// How detector clicks are read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementProtocol {
    Qubit,
    Qutrit,
    Classical,
}

impl MeasurementProtocol {
    pub fn parse(label: &str) -> Result<Self> {
        match label {
            "qubit" => Ok(MeasurementProtocol::Qubit),
            "qutrit" => Ok(MeasurementProtocol::Qutrit),
            "classical" => Ok(MeasurementProtocol::Classical),
            other => invalid("protocol", format!("unknown measurement protocol `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSettings {
    /// Analyser half-wave plate, degrees.
    pub phi: f64,
    pub protocol: MeasurementProtocol,
}

impl MeasurementSettings {
    pub fn new(phi: f64, protocol: MeasurementProtocol) -> Result<Self> {
        check_plate_angle("phi", phi)?;
        Ok(MeasurementSettings { phi, protocol })
    }
}

/// Light source and detector parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    /// Photons per second reaching the analyser.
    pub singles_rate: f64,
    /// Integration time per setting pair, seconds.
    pub duration: f64,
    pub detection_efficiency: f64,
    /// Dark counts per second, per detector.
    pub dark_rate: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        SourceParams { singles_rate: 1.5e5, duration: 30.0, detection_efficiency: 0.55, dark_rate: 400.0 }
    }
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("singles rate", self.singles_rate),
            ("duration", self.duration),
            ("detection efficiency", self.detection_efficiency),
            ("dark rate", self.dark_rate),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return invalid("source parameters", format!("{name} = {v} must be finite and nonnegative"));
            }
        }
        if self.detection_efficiency > 1.0 {
            return invalid("source parameters", "detection efficiency exceeds 1");
        }
        Ok(())
    }

    /// Expected dark counts per detector per setting pair.
    pub fn dark_mean(&self) -> f64 {
        self.dark_rate * self.duration
    }

    /// Expected signal counts for a detector hit with probability `p`.
    pub fn signal_mean(&self, p: f64) -> f64 {
        self.singles_rate * self.duration * self.detection_efficiency * p
    }
}

/// Amplitudes after the three preparation plates:
/// `(sin2θ1 cos2θ3, -sin2θ1 sin2θ3, cos2θ1 cos2θ2, cos2θ1 sin2θ2)`.
pub fn prepare_state<T: Real>(settings: &PreparationSettings) -> ModeState<T> {
    let rad = |deg: f64| T::constant(2.0 * deg.to_radians());
    let (s1, c1) = rad(settings.theta1).sin_cos();
    let (s2, c2) = rad(settings.theta2).sin_cos();
    let (s3, c3) = rad(settings.theta3).sin_cos();
    ModeState { amplitudes: [s1 * c3, -s1 * s3, c1 * c2, c1 * s2] }
}

/// Plate angles reproducing `target` exactly. Free angles (a spatial mode
/// with no amplitude) are returned as 0.
pub fn solve_hwp_angles<T: Real>(target: &ModeState<T>) -> PreparationSettings {
    let [ha, va, hb, vb] = target.amplitudes.map(|a| a.to_f64().expect("finite amplitude"));
    let weight_a = ha.hypot(va);
    let weight_b = hb.hypot(vb);
    let negligible = 1e-15;
    let theta1 = 0.5 * weight_a.atan2(weight_b).to_degrees();
    let theta3 = if weight_a > negligible { 0.5 * (-va).atan2(ha).to_degrees() } else { 0.0 };
    let theta2 = if weight_b > negligible { 0.5 * vb.atan2(hb).to_degrees() } else { 0.0 };
    PreparationSettings { theta1: wrap_degrees(theta1), theta2: wrap_degrees(theta2), theta3: wrap_degrees(theta3) }
}

/// Physical detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Detector {
    D1,
    D2,
    D3,
    D4,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::D1, Detector::D2, Detector::D3, Detector::D4];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Logical ket that always ends up in this detector when the analyser
    /// plate is at 0 degrees.
    pub fn ket_label(self) -> usize {
        LOGICAL_LABELS[self.index()]
    }
}

/// Port amplitudes of the analyser (rows indexed by detector, columns by
/// mode): the plate at `φ` acts on mode `a` as the reflection
/// `[[cos2φ, sin2φ], [sin2φ, -cos2φ]]`; PBS ports are a-V, a-H, b-H, b-V.
fn analyser_rows<T: Real>(phi: f64) -> [[T; 4]; 4] {
    let (s, c) = T::constant(2.0 * phi.to_radians()).sin_cos();
    let z = T::zero();
    let o = T::one();
    [
        [s, -c, z, z], // D1: V after the plate
        [c, s, z, z],  // D2: H after the plate
        [z, z, o, z],  // D3
        [z, z, z, o],  // D4
    ]
}

/// Click probabilities for D1..D4.
pub fn detector_distribution<T: Real>(state: &ModeState<T>, phi: f64) -> [T; 4] {
    analyser_rows::<T>(phi).map(|row| {
        let amp = row.iter().zip(&state.amplitudes).fold(T::zero(), |acc, (&r, &a)| acc + r * a);
        amp * amp
    })
}

/// As [`detector_distribution`], with each beam splitter sending a
/// fraction `leakage` of its light to the wrong port.
pub fn detector_distribution_with_leakage<T: Real>(state: &ModeState<T>, phi: f64, leakage: T) -> [T; 4] {
    let p = detector_distribution(state, phi);
    let keep = T::one() - leakage;
    [
        keep * p[0] + leakage * p[1],
        keep * p[1] + leakage * p[0],
        keep * p[2] + leakage * p[3],
        keep * p[3] + leakage * p[2],
    ]
}

/// What a click in a detector means under a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorRole {
    Outcome(Outcome),
    /// Classical readout: the click identifies this logical ket.
    Identifies(usize),
    Unused,
}

/// Detector meanings for D1..D4.
pub fn outcome_map(protocol: MeasurementProtocol) -> [DetectorRole; 4] {
    use DetectorRole::*;
    match protocol {
        MeasurementProtocol::Qubit => [Outcome(self::Outcome::Minus), Outcome(self::Outcome::Plus), Unused, Unused],
        MeasurementProtocol::Qutrit => {
            [Outcome(self::Outcome::Minus), Outcome(self::Outcome::Plus), Outcome(self::Outcome::Plus), Unused]
        }
        MeasurementProtocol::Classical => Detector::ALL.map(|d| Identifies(d.ket_label())),
    }
}

/// Outcome assigned to each detector for one measurement setting; `None`
/// means the detector's counts are discarded.
pub type OutcomeAssignment = [Option<Outcome>; 4];

/// Readout for one setting of a quantum protocol.
pub fn quantum_assignment(protocol: MeasurementProtocol) -> Result<OutcomeAssignment> {
    if protocol == MeasurementProtocol::Classical {
        return invalid("protocol", "classical readout depends on the response strategy");
    }
    Ok(outcome_map(protocol).map(|r| match r {
        DetectorRole::Outcome(o) => Some(o),
        _ => None,
    }))
}

/// Classical readout for setting `y`: the detector identifying message `k`
/// reports `v^k_y`. Detectors for messages outside the strategy are unused.
pub fn classical_assignment(strategy: &DeterministicStrategy, y: usize) -> OutcomeAssignment {
    outcome_map(MeasurementProtocol::Classical).map(|role| match role {
        DetectorRole::Identifies(label) => {
            let k = label_index(label).expect("known label");
            strategy.messages().get(k).map(|v| v.outcome(y))
        }
        _ => None,
    })
}

/// The dichotomic observable realized by the analyser at `φ` on the leading
/// `dim` logical kets, reading `+1`/`-1` per `assignment`.
pub fn analyser_observable<T: Real>(
    phi: f64,
    assignment: &OutcomeAssignment,
    dim: usize,
) -> Result<DichotomicObservable<T>> {
    if dim == 0 || dim > 4 {
        return Err(Error::Dimension(format!("analyser acts on at most four kets, asked for {dim}")));
    }
    let rows = analyser_rows::<T>(phi);
    let modes: Vec<usize> =
        (0..dim).map(|i| Mode::from_ket_label(LOGICAL_LABELS[i]).expect("label has a mode").index()).collect();
    let mut matrix = CMatrix::zeros(dim);
    for (det, row) in rows.iter().enumerate() {
        let sign = match assignment[det] {
            Some(o) => T::constant(f64::from(o.sign())),
            None => continue,
        };
        for (i, &mi) in modes.iter().enumerate() {
            for (j, &mj) in modes.iter().enumerate() {
                matrix[(i, j)] = matrix[(i, j)] + Complex::new(sign * row[mi] * row[mj], T::zero());
            }
        }
    }
    DichotomicObservable::from_matrix(matrix)
}

/// Counts for each `(x, y)` setting pair and detector. Sampled counts are
/// integers; expected counts from analytic runs may be fractional.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorCounts {
    scenario: Scenario,
    counts: Vec<[f64; 4]>,
}

impl DetectorCounts {
    pub fn new(scenario: Scenario, counts: Vec<[f64; 4]>) -> Result<Self> {
        if counts.len() != scenario.n_pairs() {
            return Err(Error::Dimension(format!(
                "{} count rows for {} setting pairs",
                counts.len(),
                scenario.n_pairs()
            )));
        }
        if counts.iter().flatten().any(|&c| !(c.is_finite() && c >= 0.0)) {
            return invalid("detector counts", "counts must be finite and nonnegative");
        }
        Ok(DetectorCounts { scenario, counts })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// Counts for the 1-based setting pair.
    pub fn get(&self, x: usize, y: usize) -> [f64; 4] {
        self.counts[self.scenario.pair_index(x, y)]
    }

    pub fn rows(&self) -> &[[f64; 4]] {
        &self.counts
    }

    pub fn map_counts(&self, f: impl Fn(f64) -> f64) -> Self {
        DetectorCounts { scenario: self.scenario, counts: self.counts.iter().map(|r| r.map(&f)).collect() }
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        self.map_counts(|c| c * factor)
    }
}

fn poisson_sample<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng)
}

/// Signal plus dark counts for one setting pair:
/// `Poisson(rate · T · p_i · η) + Poisson(R_d · T)` per detector.
pub fn simulate_counts<R: Rng + ?Sized>(
    state: &ModeState<f64>,
    settings: &MeasurementSettings,
    source: &SourceParams,
    rng: &mut R,
) -> [f64; 4] {
    let p = detector_distribution(state, settings.phi);
    p.map(|pi| poisson_sample(rng, source.signal_mean(pi)) + poisson_sample(rng, source.dark_mean()))
}

/// Mean counts for one setting pair.
pub fn expected_counts(state: &ModeState<f64>, phi: f64, source: &SourceParams, leakage: f64) -> [f64; 4] {
    detector_distribution_with_leakage(state, phi, leakage).map(|pi| source.signal_mean(pi) + source.dark_mean())
}

/// Witness-test scenarios of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Bit,
    Qubit,
    Trit,
    Qutrit,
    Quart,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [Protocol::Bit, Protocol::Qubit, Protocol::Trit, Protocol::Qutrit, Protocol::Quart];

    pub fn label(self) -> &'static str {
        match self {
            Protocol::Bit => "bit",
            Protocol::Qubit => "qubit",
            Protocol::Trit => "trit",
            Protocol::Qutrit => "qutrit",
            Protocol::Quart => "quart",
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.label() == label)
            .ok_or_else(|| Error::Validation { what: "protocol", reason: format!("unknown protocol `{label}`") })
    }

    pub fn dimension(self) -> usize {
        match self {
            Protocol::Bit | Protocol::Qubit => 2,
            Protocol::Trit | Protocol::Qutrit => 3,
            Protocol::Quart => 4,
        }
    }

    pub fn measurement_protocol(self) -> MeasurementProtocol {
        match self {
            Protocol::Qubit => MeasurementProtocol::Qubit,
            Protocol::Qutrit => MeasurementProtocol::Qutrit,
            _ => MeasurementProtocol::Classical,
        }
    }

    /// Analyser angles of the optimal quantum tests, rounded to 0.01 deg; the
    /// classical protocols use an idle plate.
    pub fn default_phis(self) -> [f64; 2] {
        match self {
            Protocol::Qubit => [11.25, 78.75],
            Protocol::Qutrit => [15.86, 74.14],
            _ => [0.0, 0.0],
        }
    }
}

/// Settings for every preparation and measurement, plus the readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub protocol: Protocol,
    pub preparations: Vec<PreparationSettings>,
    pub phis: Vec<f64>,
    pub assignments: Vec<OutcomeAssignment>,
}

impl Experiment {
    /// The optimal CHSH test for `protocol`: quantum protocols prepare the
    /// closed-form optimal states, classical ones send the basis ket of the
    /// optimal deterministic strategy's message.
    pub fn chsh_default(protocol: Protocol) -> Result<Self> {
        let d = protocol.dimension();
        let phis = protocol.default_phis().to_vec();
        match protocol.measurement_protocol() {
            MeasurementProtocol::Classical => {
                let strategy = classical_bound(&chsh_witness::<f64>(), d)?.optimal_strategy;
                let preparations = strategy
                    .assignment()
                    .iter()
                    .map(|&k| {
                        let ket = ModeState::from_logical(&PureState::<f64>::ket(LOGICAL_LABELS[k], 4)?)?;
                        Ok(solve_hwp_angles(&ket))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let assignments = (1..=phis.len()).map(|y| classical_assignment(&strategy, y)).collect();
                Ok(Experiment { protocol, preparations, phis, assignments })
            }
            readout => {
                let config = chsh_optimal_config::<f64>(d)?;
                let preparations = config
                    .states
                    .iter()
                    .map(|s| ModeState::from_logical(s).map(|m| solve_hwp_angles(&m)))
                    .collect::<Result<Vec<_>>>()?;
                let assignment = quantum_assignment(readout)?;
                Ok(Experiment { protocol, preparations, phis, assignments: vec![assignment; 2] })
            }
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(self.preparations.len(), self.phis.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.assignments.len() != self.phis.len() {
            return Err(Error::Dimension(format!(
                "{} readouts for {} measurement settings",
                self.assignments.len(),
                self.phis.len()
            )));
        }
        for p in &self.preparations {
            PreparationSettings::new(p.theta1, p.theta2, p.theta3)?;
        }
        for &phi in &self.phis {
            check_plate_angle("phi", phi)?;
        }
        self.scenario().map(|_| ())
    }

    /// Applies overrides from a settings file (`prep x θ1 θ2 θ3`,
    /// `meas y φ`, `#` comments).
    pub fn apply_settings_file(&mut self, text: &str) -> Result<()> {
        for (line, tokens) in textfmt::content_lines(text) {
            let relabel = |e: Error| Error::Parse { line, message: e.to_string() };
            match tokens[0] {
                "prep" => {
                    textfmt::expect_arity(line, &tokens, 5, "prep x theta1 theta2 theta3")?;
                    let x = textfmt::parse_index(line, tokens[1], "x")?;
                    let angles: Vec<f64> = tokens[2..]
                        .iter()
                        .map(|t| textfmt::parse_scalar::<f64>(line, t, "angle"))
                        .collect::<Result<_>>()?;
                    let settings = PreparationSettings::new(angles[0], angles[1], angles[2]).map_err(relabel)?;
                    match self.preparations.get_mut(x.wrapping_sub(1)) {
                        Some(slot) => *slot = settings,
                        None => return textfmt::parse_error(line, format!("no preparation {x}")),
                    }
                }
                "meas" => {
                    textfmt::expect_arity(line, &tokens, 3, "meas y phi")?;
                    let y = textfmt::parse_index(line, tokens[1], "y")?;
                    let phi = textfmt::parse_scalar::<f64>(line, tokens[2], "phi")?;
                    check_plate_angle("phi", phi).map_err(relabel)?;
                    match self.phis.get_mut(y.wrapping_sub(1)) {
                        Some(slot) => *slot = phi,
                        None => return textfmt::parse_error(line, format!("no measurement {y}")),
                    }
                }
                other => return textfmt::parse_error(line, format!("unknown record `{other}`")),
            }
        }
        Ok(())
    }

    /// Serializes the settings in the settings-file format.
    pub fn settings_file_string(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.preparations.iter().enumerate() {
            out.push_str(&format!("prep {} {} {} {}\n", i + 1, p.theta1, p.theta2, p.theta3));
        }
        for (j, phi) in self.phis.iter().enumerate() {
            out.push_str(&format!("meas {} {}\n", j + 1, phi));
        }
        out
    }

    /// Noise-free click probabilities for every setting pair.
    pub fn ideal_distributions(&self, leakage: f64) -> Vec<[f64; 4]> {
        self.preparations
            .iter()
            .flat_map(|p| {
                let state = prepare_state::<f64>(p);
                self.phis.iter().map(move |&phi| detector_distribution_with_leakage(&state, phi, leakage))
            })
            .collect()
    }

    /// Behavior in the infinite-count, noise-free limit.
    pub fn ideal_behavior(&self, leakage: f64) -> Result<Behavior<f64>> {
        let counts = DetectorCounts::new(self.scenario()?, self.ideal_distributions(leakage))?;
        estimate_behavior(&counts, &self.assignments)
    }
}

/// How counts are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// Poisson draws from per-pair substreams of `seed`.
    Poisson { seed: u64 },
    /// Exact expected counts.
    Analytic,
}

/// `P(+1|x,y) = n_+ / (n_+ + n_-)` from mapped detectors only.
pub fn estimate_behavior(counts: &DetectorCounts, assignments: &[OutcomeAssignment]) -> Result<Behavior<f64>> {
    let scenario = counts.scenario();
    if assignments.len() != scenario.n_measurements() {
        return Err(Error::Dimension(format!(
            "{} readouts for {} measurement settings",
            assignments.len(),
            scenario.n_measurements()
        )));
    }
    let mut plus = Vec::with_capacity(scenario.n_pairs());
    let mut minus = Vec::with_capacity(scenario.n_pairs());
    for (x, y) in scenario.pairs() {
        let (n_plus, n_minus) = split_counts(&counts.get(x, y), &assignments[y - 1]);
        let total = n_plus + n_minus;
        if total <= 0.0 {
            return Err(Error::EstimationImpossible { x, y });
        }
        plus.push(n_plus / total);
        minus.push(n_minus / total);
    }
    Behavior::new(scenario, plus, minus)
}

/// Sums of counts mapped to `+1` and `-1`.
pub fn split_counts(row: &[f64; 4], assignment: &OutcomeAssignment) -> (f64, f64) {
    row.iter().zip(assignment).fold((0.0, 0.0), |(p, m), (&n, a)| match a {
        Some(Outcome::Plus) => (p + n, m),
        Some(Outcome::Minus) => (p, m + n),
        None => (p, m),
    })
}

/// Counts and the behavior estimated from them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub counts: DetectorCounts,
    pub behavior: Behavior<f64>,
}

/// Simulates every setting pair. Pair `k` (row-major) draws from substream
/// `k` of the seed, so the result is independent of evaluation order.
pub fn run_experiment(experiment: &Experiment, source: &SourceParams, sampling: Sampling) -> Result<ExperimentRun> {
    experiment.validate()?;
    source.validate()?;
    let scenario = experiment.scenario()?;
    let protocol = experiment.protocol.measurement_protocol();
    let mut rows = Vec::with_capacity(scenario.n_pairs());
    for (x, y) in scenario.pairs() {
        let state = prepare_state::<f64>(&experiment.preparations[x - 1]);
        let phi = experiment.phis[y - 1];
        let row = match sampling {
            Sampling::Analytic => expected_counts(&state, phi, source, 0.0),
            Sampling::Poisson { seed } => {
                let mut rng = seeding::substream(seed, scenario.pair_index(x, y));
                simulate_counts(&state, &MeasurementSettings { phi, protocol }, source, &mut rng)
            }
        };
        rows.push(row);
    }
    let counts = DetectorCounts::new(scenario, rows)?;
    let behavior = estimate_behavior(&counts, &experiment.assignments)?;
    Ok(ExperimentRun { counts, behavior })
}
