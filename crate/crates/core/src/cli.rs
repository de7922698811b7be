//! Command line front end: `dicelab <subcommand> [flags] [--format json|csv|text]`.
//!
//! Exit codes: 0 on success, 1 when a module reports a domain error (the
//! error is printed as a JSON object on stdout), 2 on usage errors.

use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::enumeration::{count_intransitive, rate_report, SearchConfig, DEFAULT_BUDGET};
use crate::gaussian::{
    build_sigma, determinant, null_vector, orthant_probability, structured_gamma, CovarianceSpec,
};
use crate::laws::{
    check_blowup_constraint, coefficient_set, model_moments, parse_law_list, Law, ModelConfig,
    Prob,
};
use crate::montecarlo::{clt_diagnostics, estimate_intransitivity, estimate_uniform_word_ratio};
use crate::serde_big;
use crate::words::{
    concat, dice_from_word, dual_word, extend_faces, extend_letter, is_intransitive, is_neutral,
    q_membership, special_word, victories, word_from_dice, DiceCollection, Word,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Words up to this many letters print densely unless `--rle` is given.
pub const PRINT_DENSE_LIMIT: u64 = 4096;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{kind}: {message}")]
    Domain { kind: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain { .. } => 1,
        }
    }

    fn domain(kind: &str, e: impl std::fmt::Display) -> Self {
        CliError::Domain {
            kind: kind.to_string(),
            message: e.to_string(),
        }
    }

    fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, PartialEq, Parser, Serialize)]
#[command(name = "dicelab", version, about = "Intransitive dice: words, counts, laws and simulation")]
pub struct CommandRequest {
    #[arg(long, value_enum, global = true, default_value = "json")]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructOp {
    Dual,
    Concat,
    Neutral,
    ExtendLetter,
    ExtendFaces,
    Special,
    QMember,
    FromDice,
    ToDice,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
pub enum Command {
    /// Victory counts and intransitivity of a word or dice collection.
    Check {
        /// Dense (`ABCCA`) or run-length (`A^3 B^2`) word.
        word: Option<String>,
        /// JSON array of face lists, or a file holding one.
        #[arg(long)]
        dice: Option<String>,
        #[arg(long)]
        letters: Option<usize>,
    },
    /// Exact count of intransitive words with `faces` of each letter.
    Enumerate {
        #[arg(long)]
        letters: usize,
        /// One face count, or a comma list for a rate table.
        #[arg(long, value_delimiter = ',', required = true)]
        faces: Vec<u32>,
        #[arg(long)]
        workers: Option<usize>,
        /// Node budget; defaults to DICELAB_BUDGET or 1e10.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Word constructions.
    Construct {
        #[arg(long, value_enum)]
        op: ConstructOp,
        #[arg(long)]
        word: Option<String>,
        /// Second operand of `concat`.
        #[arg(long)]
        other: Option<String>,
        #[arg(long)]
        letters: Option<usize>,
        /// Index of the special word.
        #[arg(long, default_value_t = 1)]
        k: u64,
        #[arg(long)]
        dice: Option<String>,
        #[arg(long, conflicts_with = "rle")]
        dense: bool,
        #[arg(long)]
        rle: bool,
    },
    /// Coefficient octets, and moments when face counts are given.
    Coeffs {
        #[arg(long, required_unless_present = "dice")]
        laws: Option<String>,
        /// Blow-up laws from a JSON face file; also checks the p = 1/2 constraint.
        #[arg(long, conflicts_with = "laws")]
        dice: Option<String>,
        #[arg(long, value_delimiter = ',')]
        faces: Option<Vec<u64>>,
    },
    /// Covariance matrix, determinant and kernel.
    Sigma {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "gamma")]
        f: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gamma: Option<Vec<f64>>,
    },
    /// Monte Carlo orthant probability of the Gaussian limit.
    Orthant {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "gamma")]
        f: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gamma: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        threshold: f64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Probability that random dice are intransitive.
    Simulate {
        #[arg(long, required_unless_present = "words")]
        laws: Option<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        faces: Vec<u64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        /// Shuffle uniform words instead of drawing faces.
        #[arg(long, requires = "letters")]
        words: bool,
        #[arg(long)]
        letters: Option<usize>,
    },
    /// Empirical correlations of the normalized victory counts.
    Clt {
        #[arg(long)]
        laws: String,
        #[arg(long, value_delimiter = ',', required = true)]
        faces: Vec<u64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandReport {
    pub request: CommandRequest,
    pub payload: Value,
    pub version: &'static str,
    pub wall_seconds: f64,
}

/// Parses `argv` (program name first) and checks every word, law and dice
/// argument, so malformed input is a usage error.
pub fn parse<I, T>(argv: I) -> Result<CommandRequest, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let req = CommandRequest::try_parse_from(argv).map_err(|e| CliError::Usage(e.render().to_string()))?;
    validate(&req.command)?;
    Ok(req)
}

fn validate(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Check { word, dice, letters } => {
            match (word, dice) {
                (Some(w), None) => {
                    parse_word(w, *letters)?;
                }
                (None, Some(d)) => {
                    read_dice(d)?;
                }
                _ => return Err(CliError::usage("check needs exactly one of WORD or --dice")),
            }
        }
        Command::Enumerate { faces, .. } if faces.is_empty() => {
            return Err(CliError::usage("--faces needs at least one value"))
        }
        Command::Construct { op, word, other, letters, dice, .. } => {
            let need_word = !matches!(op, ConstructOp::Special | ConstructOp::FromDice);
            if need_word {
                let w = word.as_ref().ok_or_else(|| CliError::usage("--word is required"))?;
                parse_word(w, *letters)?;
            }
            if *op == ConstructOp::Concat {
                let o = other.as_ref().ok_or_else(|| CliError::usage("--other is required"))?;
                parse_word(o, *letters)?;
            }
            if *op == ConstructOp::Special && letters.is_none() {
                return Err(CliError::usage("--letters is required"));
            }
            if *op == ConstructOp::FromDice {
                read_dice(dice.as_deref().ok_or_else(|| CliError::usage("--dice is required"))?)?;
            }
        }
        Command::Coeffs { laws, dice, .. } => {
            if let Some(l) = laws {
                parse_law_list(l).map_err(CliError::usage)?;
            }
            if let Some(d) = dice {
                read_faces(d)?;
            }
        }
        Command::Sigma { f, gamma } | Command::Orthant { f, gamma, .. } => {
            if f.is_none() == gamma.is_none() {
                return Err(CliError::usage("give exactly one of --f or --gamma"));
            }
        }
        Command::Simulate { laws, words, .. } => {
            if !words {
                parse_law_list(laws.as_deref().unwrap_or_default()).map_err(CliError::usage)?;
            }
        }
        Command::Clt { laws, .. } => {
            parse_law_list(laws).map_err(CliError::usage)?;
        }
        _ => {}
    }
    Ok(())
}

fn parse_word(text: &str, letters: Option<usize>) -> Result<Word, CliError> {
    Word::parse(text, letters).map_err(CliError::usage)
}

fn json_or_file(arg: &str) -> Result<String, CliError> {
    if arg.trim_start().starts_with('[') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::usage(format!("{arg}: {e}")))
    }
}

fn read_dice(arg: &str) -> Result<DiceCollection, CliError> {
    DiceCollection::from_json(&json_or_file(arg)?).map_err(CliError::usage)
}

fn read_faces(arg: &str) -> Result<Vec<Vec<f64>>, CliError> {
    serde_json::from_str(&json_or_file(arg)?).map_err(CliError::usage)
}

fn default_workers(w: Option<usize>) -> usize {
    w.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn budget(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var("DICELAB_BUDGET") {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|b| *b >= 0.0)
            .map(|b| b as u64)
            .ok_or_else(|| CliError::usage(format!("DICELAB_BUDGET={v} is not a number"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn model(laws: &str, faces: &[u64]) -> Result<ModelConfig, CliError> {
    let mut laws = parse_law_list(laws).map_err(CliError::usage)?;
    if laws.len() == 1 && faces.len() > 1 {
        laws = vec![laws[0].clone(); faces.len()];
    }
    if laws.len() != faces.len() {
        return Err(CliError::usage(format!(
            "{} laws for {} dice",
            laws.len(),
            faces.len()
        )));
    }
    ModelConfig::from_sizes(faces, laws).map_err(|e| CliError::domain("InvalidModel", e))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn word_text(w: &Word, dense: bool, rle: bool) -> Result<String, CliError> {
    let small = w.len().to_u64().is_some_and(|n| n <= PRINT_DENSE_LIMIT);
    let r = if rle || (!dense && !small) {
        w.to_rle_string()
    } else {
        w.to_dense_string()
    };
    r.map_err(|e| CliError::domain("Word", e))
}

fn word_payload(w: &Word, dense: bool, rle: bool) -> Result<Value, CliError> {
    let v = victories(w);
    let rows: Vec<Vec<Value>> = v
        .rows()
        .iter()
        .map(|r| r.iter().map(serde_big::to_json).collect())
        .collect();
    Ok(json!({
        "word": word_text(w, dense, rle)?,
        "letters": w.letters(),
        "length": serde_big::to_json(&w.len()),
        "runs": w.runs().len(),
        "multiplicities": w.multiplicities().iter().map(serde_big::to_json).collect::<Vec<_>>(),
        "N": rows,
        "intransitive": is_intransitive(w),
    }))
}

fn prob_strings(v: &[Prob]) -> Value {
    Value::Array(v.iter().map(|p| Value::String(p.to_string())).collect())
}

fn spec_from(f: &Option<Vec<f64>>, gamma: &Option<Vec<f64>>) -> Result<CovarianceSpec, CliError> {
    let r = match (f, gamma) {
        (Some(f), _) => structured_gamma(f),
        (_, Some(g)) => CovarianceSpec::new(g.clone()),
        _ => return Err(CliError::usage("give exactly one of --f or --gamma")),
    };
    r.map_err(|e| CliError::domain("InvalidSpec", e))
}

/// Runs the request and wraps the module report.
pub fn execute(request: &CommandRequest) -> Result<CommandReport, CliError> {
    let start = Instant::now();
    let payload = match &request.command {
        Command::Check { word, dice, letters } => {
            let w = match (word, dice) {
                (Some(w), _) => parse_word(w, *letters)?,
                (_, Some(d)) => word_from_dice(&read_dice(d)?),
                _ => return Err(CliError::usage("check needs exactly one of WORD or --dice")),
            };
            word_payload(&w, false, false)?
        }
        Command::Enumerate { letters, faces, workers, budget: b } => {
            let cfg = SearchConfig {
                workers: default_workers(*workers),
                budget: budget(*b)?,
            };
            let err = |e| CliError::domain("Enumeration", e);
            if faces.len() == 1 {
                to_value(&count_intransitive(*letters, faces[0], cfg).map_err(err)?)
            } else {
                let rows = rate_report(*letters, faces, cfg)
                    .into_iter()
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(err)?;
                to_value(&rows)
            }
        }
        Command::Construct { op, word, other, letters, k, dice, dense, rle } => {
            let err = |e| CliError::domain("Word", e);
            let w = || parse_word(word.as_deref().unwrap_or_default(), *letters);
            let out = |x: Word| word_payload(&x, *dense, *rle);
            match op {
                ConstructOp::Dual => out(dual_word(&w()?))?,
                ConstructOp::Concat => {
                    let o = parse_word(other.as_deref().unwrap_or_default(), *letters)?;
                    out(concat(&w()?, &o).map_err(err)?)?
                }
                ConstructOp::Neutral => json!({ "neutral": is_neutral(&w()?).map_err(err)? }),
                ConstructOp::ExtendLetter => out(extend_letter(&w()?).map_err(err)?)?,
                ConstructOp::ExtendFaces => out(extend_faces(&w()?).map_err(err)?)?,
                ConstructOp::Special => {
                    let l = letters.ok_or_else(|| CliError::usage("--letters is required"))?;
                    out(special_word(l, *k).map_err(err)?)?
                }
                ConstructOp::QMember => json!({ "q_member": q_membership(&w()?).map_err(err)? }),
                ConstructOp::FromDice => {
                    out(word_from_dice(&read_dice(dice.as_deref().unwrap_or_default())?))?
                }
                ConstructOp::ToDice => to_value(&dice_from_word(&w()?).map_err(err)?),
            }
        }
        Command::Coeffs { laws, dice, faces } => {
            let err = |e| CliError::domain("Law", e);
            let (law_list, faces_json): (Vec<Law>, Option<Vec<Vec<f64>>>) = match (laws, dice) {
                (Some(l), _) => {
                    let mut list = parse_law_list(l).map_err(CliError::usage)?;
                    if let (1, Some(n)) = (list.len(), faces) {
                        list = vec![list[0].clone(); n.len().max(2)];
                    }
                    (list, None)
                }
                (_, Some(d)) => {
                    let f = read_faces(d)?;
                    (crate::laws::blow_up_laws(&f).map_err(err)?, Some(f))
                }
                _ => return Err(CliError::usage("give --laws or --dice")),
            };
            let c = coefficient_set(&law_list).map_err(err)?;
            let mut out = Map::new();
            out.insert("coefficients".into(), to_value(&c));
            if c.is_exact() {
                out.insert(
                    "exact".into(),
                    json!({
                        "p": prob_strings(&c.p), "q": prob_strings(&c.q),
                        "r": prob_strings(&c.r), "s": prob_strings(&c.s),
                        "p_eq": prob_strings(&c.p_eq), "q_eq": prob_strings(&c.q_eq),
                        "r_eq": prob_strings(&c.r_eq), "s_eq": prob_strings(&c.s_eq),
                    }),
                );
            }
            if let Some(f) = &faces_json {
                if f.windows(2).all(|w| w[0].len() == w[1].len()) {
                    match check_blowup_constraint(f) {
                        Ok(b) => {
                            out.insert("blowup_constraint".into(), to_value(&b));
                        }
                        Err(e) => {
                            out.insert("blowup_constraint".into(), json!({ "skipped": e.to_string() }));
                        }
                    }
                }
            }
            if let Some(n) = faces {
                let sizes = if n.len() == 1 { vec![n[0]; law_list.len()] } else { n.clone() };
                if sizes.len() != law_list.len() {
                    return Err(CliError::usage(format!(
                        "{} laws for {} dice",
                        law_list.len(),
                        sizes.len()
                    )));
                }
                let cfg = ModelConfig::from_sizes(&sizes, law_list).map_err(err)?;
                out.insert("moments".into(), to_value(&model_moments(&cfg).map_err(err)?));
            }
            Value::Object(out)
        }
        Command::Sigma { f, gamma } => {
            let spec = spec_from(f, gamma)?;
            let det = determinant(&spec);
            let nv = null_vector(&spec);
            json!({
                "gamma": spec.gamma(),
                "sigma": build_sigma(&spec),
                "det_expansion": det.value_expansion,
                "det_lu": det.value_lu,
                "det_agreement": det.agreement,
                "null_vector": nv.vector,
                "zero_eigenvalue_residual": nv.zero_eigenvalue_residual,
                "strictly_positive": nv.strictly_positive,
                "P_sequence": nv.p_sequence,
            })
        }
        Command::Orthant { f, gamma, samples, seed, threshold, workers } => {
            let spec = spec_from(f, gamma)?;
            let est = orthant_probability(&spec, *threshold, *samples, *seed, default_workers(*workers))
                .map_err(|e| CliError::domain("Gaussian", e))?;
            to_value(&est)
        }
        Command::Simulate { laws, faces, trials, seed, workers, words, letters } => {
            let err = |e| CliError::domain("Simulation", e);
            let w = default_workers(*workers);
            if *words {
                let l = letters.ok_or_else(|| CliError::usage("--letters is required"))?;
                if faces.len() != 1 {
                    return Err(CliError::usage("--words takes a single face count"));
                }
                to_value(&estimate_uniform_word_ratio(l, faces[0], *trials, *seed, w).map_err(err)?)
            } else {
                let cfg = model(laws.as_deref().unwrap_or_default(), faces)?;
                to_value(&estimate_intransitivity(&cfg, *trials, *seed, w).map_err(err)?)
            }
        }
        Command::Clt { laws, faces, trials, seed, workers } => {
            let cfg = model(laws, faces)?;
            to_value(
                &clt_diagnostics(&cfg, *trials, *seed, default_workers(*workers))
                    .map_err(|e| CliError::domain("Simulation", e))?,
            )
        }
    };
    Ok(CommandReport {
        request: request.clone(),
        payload,
        version: VERSION,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Flattens nested objects and arrays into `a.b.0`-style keys.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render(report: &CommandReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let v = json!({
                "command": to_value(&report.request.command),
                "payload": report.payload,
                "version": report.version,
                "wall_seconds": report.wall_seconds,
            });
            serde_json::to_string_pretty(&v).unwrap()
        }
        OutputFormat::Csv => {
            // an array payload is one row per element
            let rows: Vec<&Value> = match &report.payload {
                Value::Array(a) => a.iter().collect(),
                v => vec![v],
            };
            let flat: Vec<Vec<(String, String)>> = rows
                .iter()
                .map(|r| {
                    let mut out = Vec::new();
                    flatten("", r, &mut out);
                    out
                })
                .collect();
            let mut text = String::new();
            if let Some(first) = flat.first() {
                let header: Vec<String> = first.iter().map(|(k, _)| csv_field(k)).collect();
                text.push_str(&header.join(","));
                text.push('\n');
            }
            for row in &flat {
                let vals: Vec<String> = row.iter().map(|(_, v)| csv_field(v)).collect();
                text.push_str(&vals.join(","));
                text.push('\n');
            }
            text
        }
        OutputFormat::Text => {
            let mut out = Vec::new();
            flatten("", &report.payload, &mut out);
            let width = out.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            out.iter()
                .map(|(k, v)| format!("{k:width$}  {v}\n"))
                .collect()
        }
    }
}

fn error_json(e: &CliError) -> String {
    let (kind, message) = match e {
        CliError::Usage(m) => ("Usage".to_string(), m.clone()),
        CliError::Domain { kind, message } => (kind.clone(), message.clone()),
    };
    serde_json::to_string_pretty(&json!({ "error": { "kind": kind, "message": message } })).unwrap()
}

/// Everything the binary needs: exit code, stdout and stderr text.
pub fn run<I, T>(argv: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let req = match CommandRequest::try_parse_from(&argv) {
        Ok(r) => r,
        Err(e) => {
            let text = e.render().to_string();
            // --help and --version are not errors
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    (0, text, String::new())
                }
                _ => (2, String::new(), text),
            };
        }
    };
    if let Err(e) = validate(&req.command) {
        return (e.exit_code(), String::new(), format!("error: {e}\n"));
    }
    match execute(&req) {
        Ok(report) => {
            let mut text = render(&report, req.format);
            if !text.ends_with('\n') {
                text.push('\n');
            }
            (0, text, String::new())
        }
        Err(e) => (e.exit_code(), error_json(&e) + "\n", format!("error: {e}\n")),
    }
}
