use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use ewit_core::grid::format_value;
use ewit_core::quantum::{full_grid, make_state, sample_grid};
use ewit_core::sdp::norm_scale;
use ewit_core::{
    classify as classify_set, emit_grid, enumerate_orbits, k_separable_lambda_max, make_witness_pair, ne_multipartite,
    ne_solve, parse_grid, CoefficientMatrix, CorrelatorGrid, GridFormat, MeasurementSet, MultipartiteOptions,
    ObservableSum, SolverOptions, SpiOptions, StateFamily, StateFamilyParams, Verdict,
};

use crate::angle::PiFraction;
use crate::{Family, Format, InputArgs, SolverArgs, StateArgs};

pub struct Output {
    pub text: String,
    pub code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, code: 0 }
    }
}

const QUBITS: (usize, usize) = (2, 2);

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn envelope(command: &str, input_digest: String, result: Value) -> String {
    let doc = json!({
        "command": command,
        "input_digest": input_digest,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).context("reading stdin")?;
        Ok(buf)
    } else {
        std::fs::read(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn grid_format(input: &InputArgs) -> GridFormat {
    match input.format {
        Some(Format::Csv) => GridFormat::Csv,
        Some(Format::Json) => GridFormat::Json,
        None if input.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => GridFormat::Csv,
        None => GridFormat::Json,
    }
}

/// The grid together with the digest of its canonical JSON form.
fn read_grid(input: &InputArgs) -> Result<(CorrelatorGrid, String)> {
    let bytes = read_bytes(&input.input)?;
    let grid = parse_grid(&bytes, grid_format(input))?;
    let d = digest(emit_grid(&grid, GridFormat::Json).as_bytes());
    Ok((grid, d))
}

fn measurement_set(spec: Option<&str>, grid: &CorrelatorGrid) -> Result<MeasurementSet> {
    Ok(match spec {
        Some(s) => MeasurementSet::parse(s, grid.dims())?,
        None => grid.support(),
    })
}

fn solver_options(s: SolverArgs) -> SolverOptions {
    SolverOptions {
        tol: s.tol,
        max_iter: s.max_iter,
        ..SolverOptions::default()
    }
}

fn family(f: Family) -> StateFamily {
    match f {
        Family::Chi1 => StateFamily::Chi1,
        Family::Chi3 => StateFamily::Chi3,
        Family::PsiTheta => StateFamily::PsiTheta,
        Family::Bell => StateFamily::Bell,
    }
}

fn check_state_args(state: &StateArgs) -> Result<()> {
    match (state.shots, state.seed) {
        (Some(0), _) => bail!("--shots must be positive"),
        (Some(_), None) => bail!("--seed is required when sampling with --shots"),
        _ => {}
    }
    if !(0.0..=1.0).contains(&state.noise) {
        bail!("--noise must lie in [0, 1], got {}", state.noise);
    }
    Ok(())
}

/// Correlators of the requested state; `stream` offsets the seed so that
/// sweep rows draw independent samples.
fn state_grid(state: &StateArgs, theta: PiFraction, stream: u64) -> Result<CorrelatorGrid> {
    let mut rho = make_state(StateFamilyParams {
        family: family(state.family),
        theta: theta.radians(),
    })?;
    if state.noise > 0.0 {
        rho = rho.depolarize(state.noise)?;
    }
    Ok(match (state.shots, state.seed) {
        (Some(shots), Some(seed)) => sample_grid(&rho, shots, seed.wrapping_add(stream))?,
        _ => full_grid(&rho)?,
    })
}

fn state_json(state: &StateArgs) -> Value {
    json!({
        "family": family(state.family).to_string(),
        "noise": state.noise,
        "shots": state.shots,
        "seed": state.seed,
    })
}

pub fn verify(input: &InputArgs, set: Option<&str>, solver: SolverArgs) -> Result<Output> {
    let (grid, input_digest) = read_grid(input)?;
    let set = measurement_set(set, &grid)?;
    let class = if grid.is_qubit() { Some(classify_set(&set)?) } else { None };
    let line = class.as_ref().is_some_and(|c| c.tag.is_line());
    let measured = set.pairs().iter().all(|&p| grid.get(p).is_some());
    let mut result = if line && !measured {
        json!({ "ne": null })
    } else {
        let r = ne_solve(&grid, Some(&set), &solver_options(solver))?;
        let w = r.witness()?;
        let mut v = r.to_json();
        v["witness"] = w.report(&w.evaluate(&grid)?);
        v
    };
    let verdict = match result["verdict"].as_str() {
        Some("entangled") if !line => Verdict::Entangled,
        _ => Verdict::Undetected,
    };
    result["set"] = json!(set.labels(grid.dims()));
    if let Some(c) = &class {
        result["class"] = c.to_json();
    }
    if line {
        result["note"] = json!("line pattern cannot detect entanglement");
    }
    result["verdict"] = json!(verdict.as_str());
    Ok(Output {
        text: envelope("verify", input_digest, result),
        code: if verdict == Verdict::Entangled { 0 } else { 1 },
    })
}

struct Row {
    theta: PiFraction,
    ne: f64,
    verdict: Verdict,
}

pub fn sweep(
    state: &StateArgs,
    from: PiFraction,
    to: PiFraction,
    steps: usize,
    set: &str,
    format: Format,
    solver: SolverArgs,
) -> Result<Output> {
    check_state_args(state)?;
    if steps < 2 {
        bail!("--steps must be at least 2, got {steps}");
    }
    let set = MeasurementSet::parse(set, QUBITS)?;
    let opts = solver_options(solver);
    let mut rows = PiFraction::linspace(from, to, steps)
        .into_par_iter()
        .enumerate()
        .map(|(k, theta)| -> Result<Row> {
            let g = state_grid(state, theta, k as u64)?;
            let r = ne_solve(&g, Some(&set), &opts)?;
            Ok(Row {
                theta,
                ne: r.value,
                verdict: r.verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.theta);

    let text = match format {
        Format::Csv => {
            let mut out = String::from("theta,ne,verdict\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{}\n",
                    format_value(r.theta.radians()),
                    format_value(r.ne),
                    r.verdict.as_str()
                ));
            }
            out
        }
        Format::Json => {
            let mut params = state_json(state);
            params["from"] = json!(from.to_string());
            params["to"] = json!(to.to_string());
            params["steps"] = json!(steps);
            params["set"] = json!(set.labels(QUBITS));
            params["tol"] = json!(opts.tol);
            params["max_iter"] = json!(opts.max_iter);
            let d = digest(params.to_string().as_bytes());
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "theta": r.theta.radians(),
                        "theta_pi": r.theta.to_string(),
                        "ne": r.ne,
                        "verdict": r.verdict.as_str(),
                    })
                })
                .collect();
            params["rows"] = json!(rows);
            envelope("sweep", d, params)
        }
    };
    Ok(Output::ok(text))
}

pub fn simulate(state: &StateArgs, theta: PiFraction, format: Format) -> Result<Output> {
    check_state_args(state)?;
    let g = state_grid(state, theta, 0)?;
    let f = match format {
        Format::Json => GridFormat::Json,
        Format::Csv => GridFormat::Csv,
    };
    Ok(Output::ok(emit_grid(&g, f)))
}

pub fn classify(set: &str) -> Result<Output> {
    let set = MeasurementSet::parse(set, QUBITS)?;
    let labels = set.sorted().labels(QUBITS);
    let mut result = classify_set(&set)?.to_json();
    result["set"] = json!(set.labels(QUBITS));
    Ok(Output::ok(envelope("classify", digest(labels.join(",").as_bytes()), result)))
}

pub fn orbit(k: usize) -> Result<Output> {
    let orbits = enumerate_orbits(k)?;
    let listed: Vec<Value> = orbits
        .iter()
        .map(|o| {
            let mut v = o.class.to_json();
            v["size"] = json!(o.members.len());
            v["members"] = json!(o.members.iter().map(|m| m.labels(QUBITS)).collect::<Vec<_>>());
            v
        })
        .collect();
    let result = json!({
        "k": k,
        "orbit_count": orbits.len(),
        "sizes": orbits.iter().map(|o| o.members.len()).collect::<Vec<_>>(),
        "orbits": listed,
    });
    Ok(Output::ok(envelope("orbit", digest(format!("k={k}").as_bytes()), result)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Term {
    paulis: String,
    coeff: Option<f64>,
    estimate: Option<f64>,
}

fn parse_partition(spec: &str) -> Result<Vec<Vec<usize>>> {
    spec.split('|')
        .map(|block| {
            block
                .split(',')
                .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad party index {p:?}")))
                .collect()
        })
        .collect()
}

pub fn spi(input: &Path, partition: Option<&str>, ne: bool, seed: u64) -> Result<Output> {
    let bytes = read_bytes(input)?;
    let terms: Vec<Term> = serde_json::from_slice(&bytes).context("observable must be a JSON list of {coeff, paulis}")?;
    if terms.is_empty() {
        bail!("observable has no terms");
    }
    let spi_opts = SpiOptions {
        seed,
        ..SpiOptions::default()
    };
    let result = if ne {
        if partition.is_some() {
            bail!("--partition is not supported together with --ne");
        }
        let labels: Vec<&str> = terms.iter().map(|t| t.paulis.as_str()).collect();
        let estimates = terms
            .iter()
            .map(|t| t.estimate.with_context(|| format!("term {} has no estimate", t.paulis)))
            .collect::<Result<Vec<_>>>()?;
        let opts = MultipartiteOptions {
            seed,
            spi: spi_opts,
            ..MultipartiteOptions::default()
        };
        ne_multipartite(&labels, &estimates, &opts)?.to_json()
    } else {
        let pairs = terms
            .iter()
            .map(|t| {
                t.coeff
                    .map(|c| (c, t.paulis.as_str()))
                    .with_context(|| format!("term {} has no coeff", t.paulis))
            })
            .collect::<Result<Vec<_>>>()?;
        let obs = ObservableSum::from_pauli_strings(&pairs)?;
        let parts = match partition {
            Some(p) => parse_partition(p)?,
            None => (0..obs.parties()).map(|p| vec![p]).collect(),
        };
        k_separable_lambda_max(&obs, &parts, &spi_opts)?.to_json()
    };
    Ok(Output::ok(envelope("spi", digest(&bytes), result)))
}

fn parse_coeffs(spec: &str) -> Result<Vec<(String, f64)>> {
    spec.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').with_context(|| format!("expected LABEL=VALUE, got {kv:?}"))?;
            let v: f64 = v.trim().parse().with_context(|| format!("bad coefficient {v:?}"))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

pub fn witness(input: &InputArgs, set: Option<&str>, coeffs: Option<&str>, solver: SolverArgs) -> Result<Output> {
    let (grid, input_digest) = read_grid(input)?;
    let dims = grid.dims();
    let result = match coeffs {
        Some(spec) => {
            if set.is_some() {
                bail!("--set and --coeffs are mutually exclusive");
            }
            let entries = parse_coeffs(spec)?;
            let refs: Vec<(&str, f64)> = entries.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            let c = CoefficientMatrix::from_labels(dims, &refs)?;
            let w = make_witness_pair(&c)?;
            let s = c.dot(&grid)?;
            let mut v = w.report(&w.evaluate(&grid)?);
            v["ne"] = json!(s.abs() * norm_scale(dims) / c.operator_norm());
            v
        }
        None => {
            let set = measurement_set(set, &grid)?;
            let r = ne_solve(&grid, Some(&set), &solver_options(solver))?;
            let w = r.witness()?;
            let mut v = w.report(&w.evaluate(&grid)?);
            v["ne"] = json!(r.value);
            v["set"] = json!(set.labels(dims));
            v["sign_branch"] = json!(r.sign_branch.symbol());
            v
        }
    };
    Ok(Output::ok(envelope("witness", input_digest, result)))
}
