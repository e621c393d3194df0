//! Command-line front end: `factorize`, `transform` and `verify` over a JSON
//! config, each producing a JSON report and an exit status.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::cdkernel::verify_reproducing;
use crate::config::{Config, ConfigError, FieldKind, Problem};
use crate::error::Error;
use crate::gaussborel::{verify_biorthogonality, Factorization};
use crate::moments::SpecStructure;
use crate::report::{biorthogonality_json, block_json, envelope, poly_json, reproducing_json};
use crate::scalar::{Rational, Scalar};
use crate::uvarov::{coupling_matrix, oracle_transform, transform_structured, verify_uvarov, TransformResult};

/// Random block combinations per degree in the reproducing check.
const REPRODUCING_TRIALS: usize = 3;
const REPRODUCING_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    ParseError = 1,
    Breakdown = 2,
    CouplingSingular = 3,
    CheckFailed = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::ParseError => "error",
            Self::Breakdown => "breakdown",
            Self::CouplingSingular => "coupling_singular",
            Self::CheckFailed => "check_failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub exit: ExitStatus,
}

impl Outcome {
    fn new(mut map: Map<String, Value>, exit: ExitStatus) -> Self {
        map.insert("status".into(), json!(exit.label()));
        Self {
            report: Value::Object(map),
            exit,
        }
    }

    fn error(message: impl Into<String>) -> Self {
        let mut map = Map::new();
        map.insert("schema_version".into(), json!(crate::config::SCHEMA_VERSION));
        map.insert("error".into(), json!(message.into()));
        Self::new(map, ExitStatus::ParseError)
    }

    /// Pretty JSON with a trailing newline.
    pub fn render(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.report).expect("reports serialize");
        text.push('\n');
        text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Factorize,
    Transform { with_oracle: bool },
    Verify,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Degree for `transform`; `n_max` for the other commands.
    pub degree: Option<usize>,
    /// Float-mode pivot tolerance.
    pub tolerance: Option<f64>,
}

/// Parses `text` as a config and runs `command` on it.
pub fn run(text: &str, command: Command, overrides: &Overrides) -> Outcome {
    match Config::from_json_str(text) {
        Ok(config) => run_config(&config, command, overrides),
        Err(e) => Outcome::error(e.to_string()),
    }
}

/// Runs `command` on an already parsed config.
pub fn run_config(config: &Config, command: Command, overrides: &Overrides) -> Outcome {
    match config.field_kind() {
        Ok(FieldKind::Rational) => run_typed::<Rational>(config, command, overrides),
        Ok(FieldKind::Float64) => run_typed::<f64>(config, command, overrides),
        Err(e) => Outcome::error(e.to_string()),
    }
}

fn run_typed<T: Scalar>(config: &Config, command: Command, overrides: &Overrides) -> Outcome {
    let mut problem = match config.build::<T>() {
        Ok(p) => p,
        Err(e) => return Outcome::error(e.to_string()),
    };
    if let Some(tol) = overrides.tolerance {
        problem.tol.pivot = tol;
    }
    let result = match command {
        Command::Factorize => {
            let n_max = overrides.degree.unwrap_or(problem.n_max);
            cmd_factorize(&problem, n_max)
        }
        Command::Transform { with_oracle } => {
            let n = overrides.degree.unwrap_or(problem.n_max);
            cmd_transform(&problem, n, with_oracle)
        }
        Command::Verify => {
            let n_max = overrides.degree.unwrap_or(problem.n_max);
            cmd_verify(&problem, n_max)
        }
    };
    result.unwrap_or_else(|e| Outcome::error(e.to_string()))
}

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Math(#[from] Error),
}

type CmdResult = Result<Outcome, CommandError>;

fn breakdown_json(degree: usize, stage: &str) -> Value {
    json!({ "degree": degree, "stage": stage })
}

/// Factorizes as far as possible; `Some(k)` on breakdown at degree `k`.
fn factorize_partial<T: Scalar>(problem: &Problem<T>, n_max: usize) -> Result<(Factorization<T>, Option<usize>), Error> {
    let mut f = Factorization::empty(problem.source.clone(), problem.tol);
    match f.extend_to(n_max) {
        Ok(()) => Ok((f, None)),
        Err(Error::Breakdown { degree }) => Ok((f, Some(degree))),
        Err(e) => Err(e),
    }
}

/// All `H_n`, both families and the biorthogonality and reproducing checks.
pub fn cmd_factorize<T: Scalar>(problem: &Problem<T>, n_max: usize) -> CmdResult {
    let (f, breakdown) = factorize_partial(problem, n_max)?;
    let mut map = envelope::<T>("factorize", problem.p);
    map.insert("n_max".into(), json!(n_max));
    map.insert(
        "breakdown".into(),
        breakdown.map_or(Value::Null, |k| breakdown_json(k, "source")),
    );
    let mut degrees = Vec::with_capacity(f.degrees());
    for n in 0..f.degrees() {
        degrees.push(json!({
            "n": n,
            "h": block_json(f.h(n)?),
            "p1": poly_json(&f.polynomial1(n)?),
            "p2": poly_json(&f.polynomial2(n)?),
        }));
    }
    map.insert("degrees".into(), Value::Array(degrees));

    let bio = verify_biorthogonality(&f)?;
    let mut rng = ChaCha8Rng::seed_from_u64(REPRODUCING_SEED);
    let reproducing = (0..f.degrees())
        .map(|n| verify_reproducing(&f, n, REPRODUCING_TRIALS, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let checks_ok = bio.passed() && reproducing.iter().all(|r| r.passed());
    map.insert(
        "checks".into(),
        json!({
            "biorthogonality": biorthogonality_json(&bio),
            "reproducing": reproducing_json(&reproducing),
        }),
    );
    let exit = if breakdown.is_some() {
        ExitStatus::Breakdown
    } else if !checks_ok {
        ExitStatus::CheckFailed
    } else {
        ExitStatus::Ok
    };
    Ok(Outcome::new(map, exit))
}

fn structure_name<T>(structure: &SpecStructure<T>) -> &'static str {
    match structure {
        SpecStructure::General => "general",
        SpecStructure::DiagonalHankel { .. } => "diagonal",
        SpecStructure::DiscreteX { .. } => "discrete_x",
    }
}

fn result_json<T: Scalar>(tr: &TransformResult<T>) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("p1_hat".into(), poly_json(&tr.p1_hat));
    map.insert("p2_hat".into(), poly_json(&tr.p2_hat));
    map.insert("h_hat".into(), block_json(&tr.h_hat));
    map
}

/// `P̂1_n`, `P̂2_n`, `Ĥ_n` and the coupling status, optionally compared with
/// refactorization.
pub fn cmd_transform<T: Scalar>(problem: &Problem<T>, n: usize, with_oracle: bool) -> CmdResult {
    let spec = problem.require_spec()?;
    let mut map = envelope::<T>("transform", problem.p);
    map.insert("n".into(), json!(n));
    map.insert("structure".into(), json!(structure_name(spec.structure())));

    let (f, breakdown) = factorize_partial(problem, n)?;
    if let Some(k) = breakdown {
        map.insert("breakdown".into(), breakdown_json(k, "source"));
        return Ok(Outcome::new(map, ExitStatus::Breakdown));
    }

    let coupling = coupling_matrix(&f, &spec, n)?;
    let theorem = transform_structured(&f, &spec, n);
    let singular = matches!(theorem, Err(Error::CouplingSingular { .. }));
    map.insert(
        "coupling".into(),
        json!({
            "size": coupling.rows(),
            "determinant": coupling.det().to_json(),
            "singular": singular,
        }),
    );
    let theorem = match theorem {
        Ok(tr) => Some(tr),
        Err(Error::CouplingSingular { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    map.insert(
        "result".into(),
        theorem.as_ref().map_or(Value::Null, |tr| Value::Object(result_json(tr))),
    );

    let mut oracle_breakdown = None;
    let mut agrees = true;
    if with_oracle {
        let oracle = match oracle_transform(problem.source.clone(), spec.clone(), n, problem.tol) {
            Ok(or) => {
                let mut obj = result_json(&or);
                if let Some(tr) = &theorem {
                    agrees = tr.agrees_with(&or, &problem.tol);
                    obj.insert("agrees".into(), json!(agrees));
                    obj.insert("relative_difference".into(), json!(tr.relative_difference(&or)));
                }
                Value::Object(obj)
            }
            Err(Error::Breakdown { degree }) => {
                oracle_breakdown = Some(degree);
                json!({ "breakdown": breakdown_json(degree, "perturbed") })
            }
            Err(e) => return Err(e.into()),
        };
        map.insert("oracle".into(), oracle);
    }

    let exit = if oracle_breakdown.is_some() {
        ExitStatus::Breakdown
    } else if singular {
        ExitStatus::CouplingSingular
    } else if !agrees {
        ExitStatus::CheckFailed
    } else {
        ExitStatus::Ok
    };
    Ok(Outcome::new(map, exit))
}

/// Theorem-vs-oracle and structural checks for every degree up to `n_max`.
pub fn cmd_verify<T: Scalar>(problem: &Problem<T>, n_max: usize) -> CmdResult {
    let spec = problem.require_spec()?;
    let mut map = envelope::<T>("verify", problem.p);
    map.insert("n_max".into(), json!(n_max));
    map.insert("structure".into(), json!(structure_name(spec.structure())));

    let report = match verify_uvarov(problem.source.clone(), spec.clone(), n_max, problem.tol) {
        Ok(r) => r,
        Err(Error::Breakdown { degree }) => {
            map.insert("breakdown".into(), breakdown_json(degree, "source"));
            return Ok(Outcome::new(map, ExitStatus::Breakdown));
        }
        Err(e) => return Err(e.into()),
    };

    map.insert(
        "breakdown".into(),
        report
            .oracle_breakdown
            .map_or(Value::Null, |k| breakdown_json(k, "perturbed")),
    );
    map.insert("coupling_singular".into(), json!(report.coupling_singular_degrees()));
    map.insert("checks_run".into(), json!(report.check_count()));
    map.insert("passed".into(), json!(report.passed()));

    let f = crate::gaussborel::factorize(problem.source.clone(), n_max, problem.tol)?;
    let degrees: Vec<Value> = report
        .degrees
        .iter()
        .map(|d| {
            let mut obj = Map::new();
            obj.insert("n".into(), json!(d.n));
            obj.insert("h".into(), f.h(d.n).map_or(Value::Null, block_json));
            let coupling_det = d.theorem.as_ref().ok().and_then(|tr| tr.coupling_det.as_ref());
            match &d.theorem {
                Ok(tr) => {
                    obj.extend(result_json(tr));
                }
                Err(e) => {
                    obj.insert("error".into(), json!(e.to_string()));
                }
            }
            obj.insert("coupling_singular".into(), json!(d.coupling_singular()));
            obj.insert(
                "coupling_determinant".into(),
                coupling_det.map_or(Value::Null, Scalar::to_json),
            );
            obj.insert("oracle_compared".into(), json!(d.oracle.is_some()));
            let checks: Map<String, Value> = d
                .checks
                .iter()
                .map(|c| (c.check.name().to_string(), json!(c.passed)))
                .collect();
            obj.insert("checks".into(), Value::Object(checks));
            Value::Object(obj)
        })
        .collect();
    map.insert("degrees".into(), Value::Array(degrees));

    let exit = if report.oracle_breakdown.is_some() {
        ExitStatus::Breakdown
    } else if !report.coupling_singular_degrees().is_empty() {
        ExitStatus::CouplingSingular
    } else if !report.passed() {
        ExitStatus::CheckFailed
    } else {
        ExitStatus::Ok
    };
    Ok(Outcome::new(map, exit))
}

#[derive(Debug, Parser)]
#[command(name = "uvarov", version, about = "Matrix biorthogonal polynomials and Uvarov perturbations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Factorize the moment matrix and check biorthogonality.
    Factorize(CommonArgs),
    /// Perturbed polynomials and pivot at one degree.
    Transform {
        #[command(flatten)]
        common: CommonArgs,
        /// Also refactorize the perturbed moments and compare.
        #[arg(long)]
        with_oracle: bool,
    },
    /// Check the perturbation formulas against refactorization up to n_max.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON problem description.
    #[arg(long)]
    pub config: PathBuf,
    /// Degree for `transform`; overrides n_max for the other commands.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Report destination; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Float-mode pivot tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

impl CliCommand {
    pub fn parts(&self) -> (Command, &CommonArgs) {
        match self {
            Self::Factorize(c) => (Command::Factorize, c),
            Self::Transform { common, with_oracle } => (
                Command::Transform {
                    with_oracle: *with_oracle,
                },
                common,
            ),
            Self::Verify(c) => (Command::Verify, c),
        }
    }
}

/// Reads the config, runs the command and writes the report.
pub fn execute(cli: &Cli) -> ExitStatus {
    let (command, args) = cli.command.parts();
    let outcome = match std::fs::read_to_string(&args.config) {
        Ok(text) => run(
            &text,
            command,
            &Overrides {
                degree: args.degree,
                tolerance: args.tolerance,
            },
        ),
        Err(e) => Outcome::error(format!("cannot read {}: {e}", args.config.display())),
    };
    if let Some(message) = outcome.report.get("error").and_then(Value::as_str) {
        eprintln!("error: {message}");
    }
    let text = outcome.render();
    match &args.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitStatus::ParseError;
            }
        }
        None => print!("{text}"),
    }
    outcome.exit
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEBESGUE: &str = r#"{"schema_version": 1, "field": "rational", "p": 1, "n_max": 2,
        "source": {"type": "lebesgue", "a": "-1", "b": "1", "weight": [["1"]]}"#;

    fn with_mass(point: &str, mass: &str) -> String {
        format!(
            r#"{LEBESGUE}, "perturbation": {{"type": "diagonal", "points": ["{point}"], "mults": [1],
                "masses": [[[["{mass}"]]]]}}}}"#
        )
    }

    #[test]
    fn factorize_lists_legendre_pivots() {
        let out = run(&format!("{LEBESGUE}}}"), Command::Factorize, &Overrides::default());
        assert_eq!(out.exit, ExitStatus::Ok, "{}", out.render());
        let hs: Vec<_> = out.report["degrees"]
            .as_array()
            .unwrap()
            .iter()
            .map(|d| d["h"][0][0].as_str().unwrap().to_string())
            .collect();
        assert_eq!(hs, ["2/1", "2/3", "8/45"]);
    }

    #[test]
    fn transform_mass_at_one() {
        let out = run(
            &with_mass("1", "1"),
            Command::Transform { with_oracle: true },
            &Overrides {
                degree: Some(1),
                ..Default::default()
            },
        );
        assert_eq!(out.exit, ExitStatus::Ok);
        assert_eq!(out.report["result"]["p1_hat"], json!([[["-1/3"]], [["1/1"]]]));
        assert_eq!(out.report["result"]["h_hat"], json!([["4/3"]]));
        assert_eq!(out.report["oracle"]["agrees"], json!(true));
    }

    #[test]
    fn transform_requires_perturbation() {
        let out = run(
            &format!("{LEBESGUE}}}"),
            Command::Transform { with_oracle: false },
            &Overrides::default(),
        );
        assert_eq!(out.exit, ExitStatus::ParseError);
        assert_eq!(out.report["error"], json!("perturbation required"));
    }

    #[test]
    fn verify_exit_codes() {
        let ok = run(&with_mass("1", "1"), Command::Verify, &Overrides::default());
        assert_eq!(ok.exit, ExitStatus::Ok, "{}", ok.render());
        let broken = run(&with_mass("0", "-2"), Command::Verify, &Overrides::default());
        assert_eq!(broken.exit, ExitStatus::Breakdown);
        assert_eq!(broken.report["breakdown"]["degree"], json!(0));
        let zero = run(&with_mass("0", "0"), Command::Verify, &Overrides::default());
        assert_eq!(zero.exit, ExitStatus::Ok);
    }

    #[test]
    fn coupling_singular_transform_exits_three() {
        // 1 + m K_1(1, 1) = 1 + 2m vanishes at m = −1/2
        let out = run(
            &with_mass("1", "-1/2"),
            Command::Transform { with_oracle: false },
            &Overrides::default(),
        );
        assert_eq!(out.exit, ExitStatus::CouplingSingular, "{}", out.render());
        assert_eq!(out.report["coupling"]["determinant"], json!("0/1"));
        assert_eq!(out.report["result"], Value::Null);
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run(&with_mass("1/2", "3"), Command::Verify, &Overrides::default()).render();
        let b = run(&with_mass("1/2", "3"), Command::Verify, &Overrides::default()).render();
        assert_eq!(a, b);
    }
}
