use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dimwitness::analysis::{self, ExperimentResult, MinEntropy, PerturbationModel, SdiReference};
use dimwitness::classical::{classical_bound_with_budget, ClassicalBoundResult, DEFAULT_ENUMERATION_BUDGET};
use dimwitness::linalg::C;
use dimwitness::photonic::{run_experiment, Experiment, Protocol, Sampling, SourceParams};
use dimwitness::quantum::{chsh_optimal_config, seesaw_with, QuantumConfig, SeesawOptions};
use dimwitness::record::{join_numbers, Record, Section};
use dimwitness::scalar::Scalar;
use dimwitness::witness::{chsh_witness, Behavior, Witness};
use dimwitness::{Rational64, Witness64};

/// Overrides the default seed when `--seed` is absent.
const SEED_ENV: &str = "DIMWITNESS_SEED";

#[derive(Parser, Debug)]
#[command(name = "dimwitness", version, about = "Bounds and simulated tests of linear dimension witnesses")]
struct Cli {
    /// Also write a structured result file.
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a witness on a behavior.
    Eval {
        /// Witness file, or `chsh`.
        #[arg(long)]
        witness: String,
        #[arg(long)]
        behavior: PathBuf,
    },
    /// Exact classical bound for d-level messages.
    ClassicalBound {
        #[arg(long)]
        witness: String,
        #[arg(long)]
        dim: usize,
        /// Maximum number of message subsets to enumerate.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
        budget: u128,
    },
    /// Seesaw lower bound on the quantum value in dimension d.
    QuantumBound {
        #[arg(long)]
        witness: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Stop a climb once a sweep gains less than this.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Closed-form optimal CHSH configuration.
    ChshExact {
        #[arg(long)]
        dim: usize,
    },
    /// Simulate a photonic CHSH test.
    Simulate {
        #[arg(long, value_parser = ["bit", "qubit", "trit", "qutrit", "quart"])]
        protocol: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Integration time per setting pair, seconds.
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        /// Detected photons per second.
        #[arg(long, default_value_t = 1.5e5)]
        rate: f64,
        /// Detection efficiency.
        #[arg(long, default_value_t = 0.55)]
        eta: f64,
        /// Dark counts per second per detector.
        #[arg(long, default_value_t = 400.0)]
        dark: f64,
        /// Use expected counts instead of sampling.
        #[arg(long)]
        analytic: bool,
        /// Plate settings overriding the defaults.
        #[arg(long)]
        settings: Option<PathBuf>,
        /// Plate misalignment for the settings error, degrees.
        #[arg(long, default_value_t = analysis::DEFAULT_PERTURBATION_DEG)]
        jitter: f64,
        #[arg(long, default_value_t = analysis::DEFAULT_PERTURBATION_SAMPLES)]
        jitter_samples: usize,
        /// Beam-splitter leakage used in the settings error.
        #[arg(long, default_value_t = 0.0)]
        leakage: f64,
    },
    /// Tabulate result files.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Minimal dimension consistent with a CHSH value.
    Certify {
        #[arg(long, allow_hyphen_values = true)]
        value: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
    },
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<dimwitness::Error> for Failure {
    fn from(e: dimwitness::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

type Outcome = Result<(String, Record), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok((text, record)) => {
            print!("{text}");
            if let Some(path) = &cli.output {
                if let Err(e) = std::fs::write(path, record.to_text()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: &Command) -> Outcome {
    match command {
        Command::Eval { witness, behavior } => eval(witness, behavior),
        Command::ClassicalBound { witness, dim, budget } => classical(witness, *dim, *budget),
        Command::QuantumBound { witness, dim, restarts, seed, tol } => {
            let seed = resolve_seed(*seed)?;
            quantum(witness, *dim, *restarts, seed, *tol)
        }
        Command::ChshExact { dim } => chsh_exact(*dim),
        Command::Simulate {
            protocol,
            seed,
            duration,
            rate,
            eta,
            dark,
            analytic,
            settings,
            jitter,
            jitter_samples,
            leakage,
        } => {
            let seed = resolve_seed(*seed)?;
            let source =
                SourceParams { singles_rate: *rate, duration: *duration, detection_efficiency: *eta, dark_rate: *dark };
            let model =
                PerturbationModel { scale_deg: *jitter, samples: *jitter_samples, leakage: *leakage, seed: seed.value };
            simulate(protocol, seed, source, *analytic, settings.as_deref(), model)
        }
        Command::Report { files } => report(files),
        Command::Certify { value, sigma } => certify(*value, *sigma),
    }
}

struct Seed {
    value: u64,
    from_env: bool,
}

fn resolve_seed(flag: Option<u64>) -> Result<Seed, Failure> {
    if let Some(value) = flag {
        return Ok(Seed { value, from_env: false });
    }
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map(|value| Seed { value, from_env: true })
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={raw} is not an unsigned integer"))),
        Err(_) => Ok(Seed { value: dimwitness::seeding::DEFAULT_SEED, from_env: false }),
    }
}

fn header(command: &str, seed: Option<&Seed>) -> Record {
    let mut record = Record::new();
    record.comment(format!("dimwitness {command}"));
    if let Some(seed) = seed {
        if seed.from_env {
            record.comment(format!("seed {} taken from {SEED_ENV}", seed.value));
        }
    }
    record
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Compute(format!("cannot read {}: {e}", path.display())))
}

fn located(path: &Path, e: dimwitness::Error) -> Failure {
    Failure::Compute(format!("{}: {e}", path.display()))
}

fn load_witness<T: Scalar>(name_or_path: &str) -> Result<Witness<T>, Failure> {
    if name_or_path == "chsh" {
        return Ok(chsh_witness());
    }
    let path = Path::new(name_or_path);
    Witness::parse(&read(path)?).map_err(|e| located(path, e))
}

fn complex_token(z: &C<f64>) -> String {
    format!("{},{}", z.re, z.im)
}

fn complex_list(values: &[C<f64>]) -> String {
    values.iter().map(complex_token).collect::<Vec<_>>().join(" ")
}

fn config_sections(config: &QuantumConfig<f64>) -> Vec<Section> {
    let mut states = Section::new("states");
    for (i, s) in config.states.iter().enumerate() {
        states.set(&(i + 1).to_string(), complex_list(s.amplitudes()));
    }
    let mut projectors = Section::new("projectors");
    for (j, m) in config.measurements.iter().enumerate() {
        let p = m.projector_plus();
        let d = p.dim();
        let entries: Vec<C<f64>> = (0..d * d).map(|k| p[(k / d, k % d)]).collect();
        projectors.set(&(j + 1).to_string(), complex_list(&entries));
    }
    vec![states, projectors]
}

fn eval(witness: &str, behavior: &Path) -> Outcome {
    let w: Witness64 = load_witness(witness)?;
    let b = Behavior::<f64>::parse(&read(behavior)?).map_err(|e| located(behavior, e))?;
    let value = w.evaluate(&b)?;
    let mut record = header("eval", None);
    record.push(Section::new("eval").with("witness", w.name()).with("value", value));
    Ok((format!("witness {} evaluates to {value}\n", w.name()), record))
}

fn classical_section<T: Scalar>(w: &Witness<T>, d: usize, result: &ClassicalBoundResult<T>) -> Section {
    let strategy = &result.optimal_strategy;
    let messages: Vec<String> = strategy
        .messages()
        .iter()
        .map(|v| v.components().iter().map(|c| if *c > 0 { "+" } else { "-" }).collect())
        .collect();
    let assignment: Vec<String> = strategy.assignment().iter().map(|k| (k + 1).to_string()).collect();
    Section::new("classical_bound")
        .with("witness", w.name())
        .with("dimension", d)
        .with("bound", result.bound)
        .with("bound_decimal", result.bound.to_f64().unwrap_or(f64::NAN))
        .with("enumeration_size", result.enumeration_size)
        .with("messages", messages.join(" "))
        .with("assignment", assignment.join(" "))
}

fn classical(witness: &str, d: usize, budget: u128) -> Outcome {
    // Exact arithmetic whenever the coefficients are plain decimals.
    let section = match load_witness::<Rational64>(witness) {
        Ok(w) => classical_section(&w, d, &classical_bound_with_budget(&w, d, budget)?),
        Err(_) => {
            let w: Witness64 = load_witness(witness)?;
            classical_section(&w, d, &classical_bound_with_budget(&w, d, budget)?)
        }
    };
    let text = format!(
        "classical bound C_{d} = {}\nmessages: {}\nassignment: {}\n",
        section.get("bound").unwrap_or_default(),
        section.get("messages").unwrap_or_default(),
        section.get("assignment").unwrap_or_default()
    );
    let mut record = header("classical-bound", None);
    record.push(section);
    Ok((text, record))
}

fn quantum(witness: &str, d: usize, restarts: usize, seed: Seed, tol: f64) -> Outcome {
    let w: Witness64 = load_witness(witness)?;
    if restarts == 0 {
        return Err(Failure::Usage("--restarts must be at least 1".into()));
    }
    let options = SeesawOptions { restarts, tolerance: tol, seed: seed.value, ..SeesawOptions::default() };
    let result = seesaw_with(&w, d, &options)?;
    let value = result.config.value;
    let mut record = header("quantum-bound", Some(&seed));
    record.push(
        Section::new("quantum_bound")
            .with("witness", w.name())
            .with("dimension", d)
            .with("restarts", restarts)
            .with("seed", seed.value)
            .with("tolerance", tol)
            .with("value", value)
            .with("best_restart", result.best_restart + 1),
    );
    for s in config_sections(&result.config) {
        record.push(s);
    }
    let text = format!("seesaw lower bound Q_{d} >= {value} (best of {restarts} restarts, seed {})\n", seed.value);
    Ok((text, record))
}

fn chsh_exact(d: usize) -> Outcome {
    let config = chsh_optimal_config::<f64>(d)?;
    let mut section = Section::new("chsh_exact").with("dimension", d).with("value", config.value);
    let mut text = format!("CHSH optimum in dimension {d}: {}\n", config.value);
    if let Some(theta) = config.angle_theta {
        section.set("theta", theta).set("theta_deg", theta.to_degrees());
        text.push_str(&format!("theta = {theta} rad ({} deg)\n", theta.to_degrees()));
    }
    for (i, s) in config.states.iter().enumerate() {
        text.push_str(&format!("psi_{} = {}\n", i + 1, complex_list(s.amplitudes())));
    }
    let mut record = header("chsh-exact", None);
    record.push(section);
    for s in config_sections(&config) {
        record.push(s);
    }
    Ok((text, record))
}

fn simulate(
    protocol: &str,
    seed: Seed,
    source: SourceParams,
    analytic: bool,
    settings: Option<&Path>,
    model: PerturbationModel,
) -> Outcome {
    let protocol = Protocol::parse(protocol).map_err(|e| Failure::Usage(e.to_string()))?;
    source.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    model.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let mut experiment = Experiment::chsh_default(protocol)?;
    if let Some(path) = settings {
        experiment.apply_settings_file(&read(path)?).map_err(|e| located(path, e))?;
    }
    let sampling = if analytic { Sampling::Analytic } else { Sampling::Poisson { seed: seed.value } };
    let run = run_experiment(&experiment, &source, sampling)?;
    let witness = chsh_witness::<f64>();
    let result = analysis::analyze_run(&experiment, &source, &run, &witness, &model)?;

    let mut record = header("simulate", Some(&seed));
    record.push(
        Section::new("run")
            .with("protocol", protocol.label())
            .with("sampling", if analytic { "analytic" } else { "poisson" })
            .with("seed", seed.value)
            .with("duration", source.duration)
            .with("rate", source.singles_rate)
            .with("eta", source.detection_efficiency)
            .with("dark", source.dark_rate)
            .with("jitter_deg", model.scale_deg)
            .with("jitter_samples", model.samples)
            .with("leakage", model.leakage),
    );
    let mut plates = Section::new("settings");
    for (i, p) in experiment.preparations.iter().enumerate() {
        plates.set(&format!("prep.{}", i + 1), join_numbers(&[p.theta1, p.theta2, p.theta3]));
    }
    for (j, phi) in experiment.phis.iter().enumerate() {
        plates.set(&format!("meas.{}", j + 1), phi);
    }
    record.push(plates);
    let mut counts = Section::new("counts");
    for (x, y) in run.counts.scenario().pairs() {
        counts.set(&format!("{x}.{y}"), join_numbers(&run.counts.get(x, y)));
    }
    record.push(counts);
    record.push(result.to_section());
    Ok((analysis::report_table(std::slice::from_ref(&result)), record))
}

fn report(files: &[PathBuf]) -> Outcome {
    let mut results = Vec::new();
    for path in files {
        let parsed = Record::parse(&read(path)?).map_err(|e| located(path, e))?;
        for section in parsed.sections_named("result") {
            results.push(ExperimentResult::from_section(section).map_err(|e| located(path, e))?);
        }
    }
    let mut record = header("report", None);
    for r in &results {
        record.push(r.to_section());
    }
    Ok((analysis::report_table(&results), record))
}

fn certify(value: f64, sigma: f64) -> Outcome {
    let certificate = analysis::certify_value(value, sigma).map_err(|e| Failure::Usage(e.to_string()))?;
    let sdi = analysis::sdi_reference(value)?;
    let dim = |d: Option<usize>| d.map_or_else(|| "none (above the algebraic maximum)".to_string(), |d| d.to_string());
    let mut text = format!(
        "value {value} +/- {sigma}\nminimal classical dimension: {}\nminimal quantum dimension: {}\n",
        dim(certificate.minimal_classical_dim),
        dim(certificate.minimal_quantum_dim)
    );
    for b in &certificate.exceeded_bounds {
        text.push_str(&format!("exceeds {} = {:.4} by {:.2} sigma\n", b.name, b.bound, b.margin_sigma));
    }
    match sdi {
        SdiReference::NoCertification { .. } => text.push_str(&format!("{}\n", analysis::NO_CERTIFICATION)),
        SdiReference::Reference { min_entropy, .. } => match min_entropy {
            MinEntropy::Cited(h) => text.push_str(&format!("min-entropy (cited): {h}\n")),
            MinEntropy::Interpolated(h) => {
                text.push_str(&format!("min-entropy (interpolated between cited values): {h}\n"))
            }
            MinEntropy::Unavailable => {}
        },
    }
    let mut record = header("certify", None);
    record.push(certificate.to_section());
    record.push(sdi.to_section());
    Ok((text, record))
}
