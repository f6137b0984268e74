//! Turning detector counts into witness values with error bars.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::photonic::{
    estimate_behavior, split_counts, DetectorCounts, Experiment, ExperimentRun, OutcomeAssignment, Protocol,
    SourceParams,
};
use crate::record::Section;
use crate::seeding;
use crate::witness::{chsh_bounds, Behavior, Outcome, Witness};

/// Standard deviation of the HWP orientation error, degrees. Chosen so the
/// optimal qubit test shows a settings error near 0.12.
pub const DEFAULT_PERTURBATION_DEG: f64 = 2.6;
pub const DEFAULT_PERTURBATION_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub delta_p: f64,
    pub delta_d: f64,
    pub delta_total: f64,
}

impl ErrorBudget {
    /// Combines the two components in quadrature.
    pub fn new(delta_p: f64, delta_d: f64) -> Result<Self> {
        for (name, v) in [("settings error", delta_p), ("counting error", delta_d)] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid("error budget", format!("{name} = {v} must be finite and nonnegative"));
            }
        }
        Ok(ErrorBudget { delta_p, delta_d, delta_total: delta_p.hypot(delta_d) })
    }
}

/// Expected dark counts removed from every detector, clamped at zero.
pub fn dark_correct(counts: &DetectorCounts, source: &SourceParams) -> DetectorCounts {
    let dark = source.dark_mean();
    counts.map_counts(|n| (n - dark).max(0.0))
}

/// First-order Poisson propagation of counting noise into the witness.
///
/// Each mapped detector count `n` has variance `n`. With `N = n_+ + n_-`,
/// `∂P(+|x,y)/∂n_+ = n_-/N²` and `∂P(+|x,y)/∂n_- = -n_+/N²`; the witness
/// depends on `P(+|x,y)` through `K(x,y,+1) - K(x,y,-1)`.
pub fn poisson_error(
    counts: &DetectorCounts,
    witness: &Witness<f64>,
    assignments: &[OutcomeAssignment],
) -> Result<f64> {
    let scenario = counts.scenario();
    scenario.ensure_same(&witness.scenario())?;
    if assignments.len() != scenario.n_measurements() {
        return Err(Error::Dimension(format!(
            "{} readouts for {} measurement settings",
            assignments.len(),
            scenario.n_measurements()
        )));
    }
    let mut variance = 0.0;
    for (x, y) in scenario.pairs() {
        let row = counts.get(x, y);
        let assignment = &assignments[y - 1];
        let (n_plus, n_minus) = split_counts(&row, assignment);
        let total = n_plus + n_minus;
        if total <= 0.0 {
            return Err(Error::PropagationUndefined { x, y });
        }
        let gap = witness.coefficient(x, y, Outcome::Plus) - witness.coefficient(x, y, Outcome::Minus);
        for (&n, a) in row.iter().zip(assignment) {
            let derivative = match a {
                Some(Outcome::Plus) => gap * n_minus / (total * total),
                Some(Outcome::Minus) => -gap * n_plus / (total * total),
                None => continue,
            };
            variance += derivative * derivative * n;
        }
    }
    Ok(variance.sqrt())
}

/// Random HWP misalignment for [`settings_error`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationModel {
    /// Standard deviation of every plate angle, degrees.
    pub scale_deg: f64,
    pub samples: usize,
    /// Fraction of light each beam splitter sends to the wrong port.
    pub leakage: f64,
    pub seed: u64,
}

impl Default for PerturbationModel {
    fn default() -> Self {
        PerturbationModel {
            scale_deg: DEFAULT_PERTURBATION_DEG,
            samples: DEFAULT_PERTURBATION_SAMPLES,
            leakage: 0.0,
            seed: seeding::DEFAULT_SEED,
        }
    }
}

impl PerturbationModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale_deg.is_finite() && self.scale_deg >= 0.0) {
            return invalid("perturbation scale", format!("{} deg", self.scale_deg));
        }
        if self.samples < 2 {
            return invalid("perturbation samples", "need at least two samples for a spread");
        }
        if !(0.0..=1.0).contains(&self.leakage) {
            return invalid("leakage", format!("{} is not a fraction", self.leakage));
        }
        Ok(())
    }
}

/// Witness value of the noise-free experiment with every plate angle
/// jittered by one Gaussian draw.
fn perturbed_value<R: Rng + ?Sized>(
    experiment: &Experiment,
    witness: &Witness<f64>,
    model: &PerturbationModel,
    rng: &mut R,
) -> Result<f64> {
    let mut jitter = || model.scale_deg * rng.sample::<f64, _>(StandardNormal);
    let mut shifted = experiment.clone();
    for p in shifted.preparations.iter_mut() {
        *p = p.perturbed(jitter(), jitter(), jitter());
    }
    for phi in shifted.phis.iter_mut() {
        *phi = crate::photonic::wrap_degrees(*phi + jitter());
    }
    witness.evaluate(&shifted.ideal_behavior(model.leakage)?)
}

/// Sample standard deviation of the witness over random plate
/// misalignments. Sample `i` draws from substream `i` of the seed.
pub fn settings_error(experiment: &Experiment, witness: &Witness<f64>, model: &PerturbationModel) -> Result<f64> {
    model.validate()?;
    experiment.validate()?;
    if model.scale_deg == 0.0 {
        return Ok(0.0);
    }
    let values = (0..model.samples)
        .into_par_iter()
        .map(|i| perturbed_value(experiment, witness, model, &mut seeding::substream(model.seed, i)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(sample_std(&values))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard deviation with the `n - 1` denominator.
pub fn sample_std(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

/// Theoretical optimum of the CHSH test run by each protocol.
pub fn theoretical_value(protocol: Protocol) -> f64 {
    let bounds = chsh_bounds::<f64>(protocol.dimension()).expect("protocol dimensions are supported");
    match protocol {
        Protocol::Qubit | Protocol::Qutrit => bounds.quantum_bound,
        _ => bounds.classical_bound,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub witness_name: String,
    pub protocol: Protocol,
    pub d_th: f64,
    pub d_exp: f64,
    /// Value after dark-count subtraction.
    pub d_exp_corrected: f64,
    pub errors: ErrorBudget,
}

impl ExperimentResult {
    /// Dark counts push every expectation toward zero, so subtracting them
    /// normally raises a positive witness value. Configurations dominated
    /// by negative coefficients can go the other way.
    pub fn correction_raises_value(&self) -> bool {
        self.d_exp_corrected >= self.d_exp
    }

    pub fn label(&self) -> String {
        format!("{}({})", self.witness_name, self.protocol.label())
    }

    pub fn to_section(&self) -> Section {
        Section::new("result")
            .with("witness", &self.witness_name)
            .with("protocol", self.protocol.label())
            .with("d_th", self.d_th)
            .with("d_exp", self.d_exp)
            .with("d_exp_corrected", self.d_exp_corrected)
            .with("delta_p", self.errors.delta_p)
            .with("delta_d", self.errors.delta_d)
            .with("delta_total", self.errors.delta_total)
    }

    pub fn from_section(section: &Section) -> Result<Self> {
        let errors = ErrorBudget::new(section.parse_value("delta_p")?, section.parse_value("delta_d")?)?;
        Ok(ExperimentResult {
            witness_name: section.require("witness")?.to_string(),
            protocol: Protocol::parse(section.require("protocol")?)?,
            d_th: section.parse_value("d_th")?,
            d_exp: section.parse_value("d_exp")?,
            d_exp_corrected: section.parse_value("d_exp_corrected")?,
            errors,
        })
    }
}

pub fn build_result(
    protocol: Protocol,
    raw: &Behavior<f64>,
    corrected: &Behavior<f64>,
    witness: &Witness<f64>,
    errors: ErrorBudget,
) -> Result<ExperimentResult> {
    Ok(ExperimentResult {
        witness_name: witness.name().to_string(),
        protocol,
        d_th: theoretical_value(protocol),
        d_exp: witness.evaluate(raw)?,
        d_exp_corrected: witness.evaluate(corrected)?,
        errors,
    })
}

/// Full analysis of one run: raw and dark-corrected values, counting error
/// from the raw counts, settings error by Monte Carlo.
pub fn analyze_run(
    experiment: &Experiment,
    source: &SourceParams,
    run: &ExperimentRun,
    witness: &Witness<f64>,
    model: &PerturbationModel,
) -> Result<ExperimentResult> {
    let corrected_counts = dark_correct(&run.counts, source);
    let corrected = estimate_behavior(&corrected_counts, &experiment.assignments)?;
    let delta_d = poisson_error(&run.counts, witness, &experiment.assignments)?;
    let delta_p = settings_error(experiment, witness, model)?;
    build_result(experiment.protocol, &run.behavior, &corrected, witness, ErrorBudget::new(delta_p, delta_d)?)
}

/// CHSH bounds in increasing order.
pub fn bound_ladder() -> [(&'static str, f64); 5] {
    let b2 = chsh_bounds::<f64>(2).expect("d = 2");
    let b3 = chsh_bounds::<f64>(3).expect("d = 3");
    [
        ("C_2", b2.classical_bound),
        ("Q_2", b2.quantum_bound),
        ("C_3", b3.classical_bound),
        ("Q_3", b3.quantum_bound),
        ("C_4", 8.0),
    ]
}

/// Slack when comparing a value to a bound, absorbing rounding in values
/// computed at a bound.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExceededBound {
    pub name: &'static str,
    pub bound: f64,
    /// `(value - bound) / sigma`; infinite when `sigma` is zero.
    pub margin_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionCertificate {
    pub witness_value: f64,
    pub sigma: f64,
    pub exceeded_bounds: Vec<ExceededBound>,
    /// Smallest `d` whose classical bound admits the value; `None` above
    /// the algebraic maximum.
    pub minimal_classical_dim: Option<usize>,
    pub minimal_quantum_dim: Option<usize>,
}

fn minimal_dim(value: f64, bound: impl Fn(usize) -> f64) -> Option<usize> {
    (1..=4).find(|&d| bound(d) >= value - BOUND_SLACK)
}

/// Certifies the minimal dimension behind a CHSH value with uncertainty
/// `sigma`.
pub fn certify_value(value: f64, sigma: f64) -> Result<DimensionCertificate> {
    if !value.is_finite() {
        return invalid("witness value", format!("{value} is not finite"));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return invalid("sigma", format!("{sigma} must be finite and nonnegative"));
    }
    let exceeded_bounds = bound_ladder()
        .into_iter()
        .filter(|&(_, b)| value > b + BOUND_SLACK)
        .map(|(name, bound)| ExceededBound {
            name,
            bound,
            margin_sigma: if sigma > 0.0 { (value - bound) / sigma } else { f64::INFINITY },
        })
        .collect();
    let bounds = |d| chsh_bounds::<f64>(d).expect("d in 1..=4");
    Ok(DimensionCertificate {
        witness_value: value,
        sigma,
        exceeded_bounds,
        minimal_classical_dim: minimal_dim(value, |d| bounds(d).classical_bound),
        minimal_quantum_dim: minimal_dim(value, |d| bounds(d).quantum_bound),
    })
}

/// Certification of a result's dark-corrected value.
pub fn certify(result: &ExperimentResult) -> Result<DimensionCertificate> {
    certify_value(result.d_exp_corrected, result.errors.delta_total)
}

impl DimensionCertificate {
    pub fn to_section(&self) -> Section {
        let dim = |d: Option<usize>| d.map_or_else(|| "none".to_string(), |d| d.to_string());
        let mut s = Section::new("certificate")
            .with("value", self.witness_value)
            .with("sigma", self.sigma)
            .with("minimal_classical_dim", dim(self.minimal_classical_dim))
            .with("minimal_quantum_dim", dim(self.minimal_quantum_dim))
            .with("exceeded", self.exceeded_bounds.iter().map(|b| b.name).collect::<Vec<_>>().join(" "));
        for b in &self.exceeded_bounds {
            s.set(&format!("margin_sigma.{}", b.name), b.margin_sigma);
        }
        s
    }
}

/// Min-entropy figures quoted in the literature for CHSH values obtained
/// with qubits.
pub const MIN_ENTROPY_ANCHORS: [(f64, f64); 2] = [(5.51, 0.0595), (5.56, 0.0820)];
/// Quoted secure key rates: raw, and assuming dark counts are not
/// controlled by an adversary.
pub const KEY_RATE_RAW: &str = "5.18%";
pub const KEY_RATE_DARK_COUNT_ASSUMPTION: &str = "6.67%";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MinEntropy {
    /// The value is one of the quoted anchors.
    Cited(f64),
    /// Linear interpolation between the two quoted anchors. Not a bound.
    Interpolated(f64),
    /// No quoted figure covers the value.
    Unavailable,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SdiReference {
    NoCertification { value: f64 },
    Reference { value: f64, min_entropy: MinEntropy },
}

pub const NO_CERTIFICATION: &str = "no certification possible (classical bound not violated)";

/// Looks up quoted semi-device-independent randomness figures for a CHSH
/// value.
pub fn sdi_reference(value: f64) -> Result<SdiReference> {
    if !value.is_finite() {
        return invalid("witness value", format!("{value} is not finite"));
    }
    if value < 4.0 {
        return Ok(SdiReference::NoCertification { value });
    }
    let [(v0, h0), (v1, h1)] = MIN_ENTROPY_ANCHORS;
    let min_entropy = if (value - v0).abs() <= BOUND_SLACK {
        MinEntropy::Cited(h0)
    } else if (value - v1).abs() <= BOUND_SLACK {
        MinEntropy::Cited(h1)
    } else if value > v0 && value < v1 {
        MinEntropy::Interpolated(h0 + (h1 - h0) * (value - v0) / (v1 - v0))
    } else {
        MinEntropy::Unavailable
    };
    Ok(SdiReference::Reference { value, min_entropy })
}

impl SdiReference {
    pub fn to_section(&self) -> Section {
        match *self {
            SdiReference::NoCertification { value } => {
                Section::new("sdi").with("value", value).with("status", NO_CERTIFICATION)
            }
            SdiReference::Reference { value, min_entropy } => {
                let mut s = Section::new("sdi").with("value", value);
                match min_entropy {
                    MinEntropy::Cited(h) => s.set("min_entropy", h).set("min_entropy_kind", "cited"),
                    MinEntropy::Interpolated(h) => s
                        .set("min_entropy", h)
                        .set("min_entropy_kind", "interpolated between cited values, not a derived bound"),
                    MinEntropy::Unavailable => s.set("min_entropy_kind", "unavailable"),
                };
                let anchors = MIN_ENTROPY_ANCHORS.map(|(v, h)| format!("{v}:{h}")).join(" ");
                s.with("cited_anchors", anchors)
                    .with("cited_key_rate_raw", KEY_RATE_RAW)
                    .with("cited_key_rate_dark_count_assumption", KEY_RATE_DARK_COUNT_ASSUMPTION)
            }
        }
    }
}

/// Text table with one row per result: values to two decimals, the
/// counting error to three.
pub fn report_table(results: &[ExperimentResult]) -> String {
    let label_width = results.iter().map(|r| r.label().chars().count()).max().unwrap_or(0).max("bound".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<w$}  {:>6}  {:>6}  {:>7}  {:>6}  {:>6}  {:>6}",
        "bound",
        "D_th",
        "D_exp",
        "D_exp^b",
        "dD_p",
        "dD_d",
        "dD_T",
        w = label_width
    );
    for r in results {
        let _ = writeln!(
            out,
            "{:<w$}  {:>6.2}  {:>6.2}  {:>7.2}  {:>6.2}  {:>6.3}  {:>6.2}",
            r.label(),
            r.d_th,
            r.d_exp,
            r.d_exp_corrected,
            r.errors.delta_p,
            r.errors.delta_d,
            r.errors.delta_total,
            w = label_width
        );
    }
    out
}
