use std::path::Path;

use lsl_core::combinatorics::{
    hasse_dot, mobius_table, order_leq, weight_table_csv, MAX_MOBIUS_N, MAX_POSET_N,
};
use lsl_core::lagrangian::frame_from_unitary;
use lsl_core::matrix::matrix_from_json;
use lsl_core::morse::{
    flow, flow_limit_frame_tol, morse_value, trajectory_csv, tunnelling_exists, tunnelling_witness,
    Direction, FlowSpec,
};
use lsl_core::ring::{betti_ranks, poincare_polynomial, products_csv};
use lsl_core::sampling::{random_unitary, rng_for};
use lsl_core::spectral::{
    crossings_through, det_winding, maslov_index, shifted_diagonal_loop, UnitaryLoop,
};
use lsl_core::verify::{run_suites, VerifyConfig, SUITES};
use lsl_core::{Error, LagrangianFrame, SubsetIndex, UnitaryMatrix};
use serde::Serialize;

use crate::output::{print, write_files};
use crate::{Cli, Command, Common, FlowArgs, Format, MaslovArgs, TunnelArgs, VerifyArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Input(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::OutOfRange { .. } | Error::UnknownSuite(_) => CliError::Usage(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn run(cli: &Cli) -> CliResult<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Poset => cmd_poset(c),
        Command::Ring => cmd_ring(c),
        Command::Flow(a) => cmd_flow(c, a),
        Command::Tunnel(a) => cmd_tunnel(c, a),
        Command::Maslov(a) => cmd_maslov(c, a),
        Command::Verify(a) => cmd_verify(c, a),
    }
}

fn format_or(c: &Common, default: Format, allowed: &[Format], command: &str) -> CliResult<Format> {
    let f = c.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Usage(
            format!("{command} does not support --format {f:?}").to_lowercase(),
        ))
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes") + "\n"
}

fn emit(c: &Common, stdout: &str, files: &[(&str, String)]) -> CliResult<()> {
    if let Some(dir) = &c.out {
        write_files(dir, files)?;
    }
    print(stdout);
    Ok(())
}

fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// `"1,3"`, `"{1,3}"`, `""` or `"{}"`.
pub fn parse_subset(text: &str, n: usize) -> CliResult<SubsetIndex> {
    let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
    let members = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad subset element {s:?}")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    SubsetIndex::new(n, &members).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_spec(c: &Common, n: usize) -> CliResult<FlowSpec> {
    FlowSpec::parse(&c.spec, n).map_err(|e| CliError::Input(e.to_string()))
}

// ---------------------------------------------------------------------------

fn cmd_poset(c: &Common) -> CliResult<()> {
    let n = c.n();
    if n > MAX_POSET_N {
        return Err(CliError::Usage(format!(
            "poset needs n <= {MAX_POSET_N}, got {n}"
        )));
    }
    let format = format_or(c, Format::Dot, &[Format::Dot, Format::Csv], "poset")?;
    let dot = hasse_dot(n)?;
    let weights = weight_table_csv(n)?;
    let mut files = vec![("hasse.dot", dot.clone()), ("weights.csv", weights.clone())];
    if n <= MAX_MOBIUS_N {
        files.push(("mobius.csv", mobius_table(n)?.to_csv()));
    } else if c.out.is_some() {
        eprintln!("lsl: skipping mobius.csv, needs n <= {MAX_MOBIUS_N}");
    }
    let stdout = if format == Format::Dot { dot } else { weights };
    emit(c, &stdout, &files)
}

#[derive(Serialize)]
struct RingRecord {
    n: usize,
    betti: Vec<u64>,
    poincare: Vec<u64>,
}

fn cmd_ring(c: &Common) -> CliResult<()> {
    let n = c.n();
    let format = format_or(c, Format::Json, &[Format::Json, Format::Csv], "ring")?;
    let record = json(&RingRecord {
        n,
        betti: betti_ranks(n)?,
        poincare: poincare_polynomial(n)?,
    });
    let products = if n <= 5 { Some(products_csv(n)?) } else { None };
    if format == Format::Csv && products.is_none() {
        return Err(CliError::Usage(format!(
            "product table needs n <= 5, got {n}"
        )));
    }
    let mut files = vec![("betti.json", record.clone())];
    if let Some(p) = &products {
        files.push(("products.csv", p.clone()));
    }
    let stdout = match format {
        Format::Csv => products.expect("checked above"),
        _ => record,
    };
    emit(c, &stdout, &files)
}

#[derive(Serialize)]
struct FlowRecord {
    n: usize,
    spec: FlowSpec,
    seed: Option<u64>,
    backward: Vec<usize>,
    forward: Vec<usize>,
    morse_initial: f64,
    morse_final: f64,
    tmax: f64,
    tunnelling_exists: bool,
}

fn cmd_flow(c: &Common, a: &FlowArgs) -> CliResult<()> {
    let format = format_or(c, Format::Json, &[Format::Json, Format::Csv], "flow")?;
    let tol = c.tolerances();
    let s = match &a.input {
        Some(path) => {
            let m = matrix_from_json(&read_input(path)?)?;
            let s = UnitaryMatrix::with_tol(m, tol.unit)?;
            if c.n.is_some_and(|n| n as usize != s.n()) {
                return Err(CliError::Input(format!(
                    "--n {} does not match the {}x{} input",
                    c.n(),
                    s.n(),
                    s.n()
                )));
            }
            s
        }
        None => random_unitary(&mut rng_for(c.seed, 0), c.n()),
    };
    let n = s.n();
    let spec = parse_spec(c, n)?;
    let alpha_max = spec.alpha()[n - 1];
    if c.tmax * alpha_max > lsl_core::morse::FLOW_HORIZON {
        return Err(CliError::Input(format!(
            "--tmax {} exceeds the flow horizon {} / alpha_n",
            c.tmax,
            lsl_core::morse::FLOW_HORIZON
        )));
    }
    let frame = frame_from_unitary(&s);
    let backward = flow_limit_frame_tol(&frame, &spec, Direction::Backward, &tol)?.limit;
    let forward = flow_limit_frame_tol(&frame, &spec, Direction::Forward, &tol)?.limit;
    let steps = a.steps as usize;
    let times: Vec<f64> = (0..steps)
        .map(|k| c.tmax * k as f64 / (steps - 1) as f64)
        .collect();
    let trajectory = trajectory_csv(&s, &spec, &times, &[backward, forward])?;
    let record = FlowRecord {
        n,
        spec: spec.clone(),
        seed: a.random.then_some(c.seed),
        backward: backward.members(),
        forward: forward.members(),
        morse_initial: morse_value(&spec, &s)?,
        morse_final: morse_value(&spec, &flow(&s, c.tmax, &spec)?)?,
        tmax: c.tmax,
        tunnelling_exists: tunnelling_exists(backward, forward)?,
    };
    let record_json = json(&record);
    let stdout = if format == Format::Csv {
        trajectory.clone()
    } else {
        record_json.clone()
    };
    emit(
        c,
        &stdout,
        &[("trajectory.csv", trajectory), ("flow.json", record_json)],
    )?;
    if !record.tunnelling_exists {
        return Err(CliError::Verify(format!(
            "no tunnelling from {backward} to {forward}"
        )));
    }
    if a.random && (!backward.is_empty() || forward != SubsetIndex::full(n)?) {
        return Err(CliError::Verify(format!(
            "random start should run from {{}} to the full set, got {backward} to {forward}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct TunnelRecord {
    m: Vec<usize>,
    k: Vec<usize>,
    order_leq: bool,
    found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<LagrangianFrame>,
}

const MAX_TUNNEL_TABLE_N: usize = 4;

fn cmd_tunnel(c: &Common, a: &TunnelArgs) -> CliResult<()> {
    let n = c.n();
    let format = format_or(c, Format::Json, &[Format::Json, Format::Csv], "tunnel")?;
    let spec = parse_spec(c, n)?;
    let pairs: Vec<(SubsetIndex, SubsetIndex)> = match (&a.from, &a.to) {
        (Some(m), Some(k)) => vec![(parse_subset(m, n)?, parse_subset(k, n)?)],
        _ => {
            if n > MAX_TUNNEL_TABLE_N {
                return Err(CliError::Usage(format!(
                    "the full tunnelling table needs n <= {MAX_TUNNEL_TABLE_N}; pass --from and --to"
                )));
            }
            let all: Vec<SubsetIndex> = lsl_core::combinatorics::all_subsets(n)?.collect();
            all.iter()
                .flat_map(|m| all.iter().map(move |k| (*m, *k)))
                .collect()
        }
    };
    let single = pairs.len() == 1;
    let records = lsl_core::par::map_slice(&pairs, |(m, k)| -> lsl_core::Result<TunnelRecord> {
        let w = tunnelling_witness(*m, *k, &spec, c.seed, c.budget)?;
        Ok(TunnelRecord {
            m: m.members(),
            k: k.members(),
            order_leq: order_leq(k, m)?,
            found: w.is_some(),
            witness: if single { w } else { None },
        })
    })
    .into_iter()
    .collect::<lsl_core::Result<Vec<_>>>()?;
    let mismatches = records.iter().filter(|r| r.found != r.order_leq).count();
    let body = match format {
        Format::Csv => {
            let mut out = String::from("M,K,order_leq,found\n");
            for r in &records {
                out.push_str(&format!(
                    "\"{:?}\",\"{:?}\",{},{}\n",
                    r.m, r.k, r.order_leq, r.found
                ));
            }
            out
        }
        _ if single => json(&records[0]),
        _ => json(&records),
    };
    let name = if format == Format::Csv {
        "tunnel.csv"
    } else {
        "tunnel.json"
    };
    emit(c, &body, &[(name, body.clone())])?;
    if mismatches > 0 {
        return Err(CliError::Verify(format!(
            "{mismatches} pairs disagree with the order"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct MaslovRecord {
    n: usize,
    samples: usize,
    det_winding: i64,
    maslov_index: i64,
    crossings_at_minus_one: Option<i64>,
}

fn cmd_maslov(c: &Common, a: &MaslovArgs) -> CliResult<()> {
    format_or(c, Format::Json, &[Format::Json], "maslov")?;
    let lp: UnitaryLoop = match (&a.input, &a.windings) {
        (Some(path), _) => {
            serde_json::from_str(&read_input(path)?).map_err(|e| CliError::Input(e.to_string()))?
        }
        (None, Some(w)) => {
            let windings = w
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<i32>()
                        .map_err(|_| CliError::Usage(format!("bad winding {s:?}")))
                })
                .collect::<CliResult<Vec<_>>>()?;
            shifted_diagonal_loop(&windings, a.samples as usize)?
        }
        (None, None) => unreachable!("clap requires one of --input and --windings"),
    };
    let record = MaslovRecord {
        n: lp.n(),
        samples: lp.samples().len(),
        det_winding: det_winding(&lp)?,
        maslov_index: maslov_index(&lp)?,
        crossings_at_minus_one: crossings_through(&lp, lsl_core::matrix::ONE * -1.0).ok(),
    };
    let body = json(&record);
    emit(c, &body, &[("maslov.json", body.clone())])?;
    if record.maslov_index != record.det_winding {
        return Err(CliError::Verify(format!(
            "maslov index {} differs from determinant winding {}",
            record.maslov_index, record.det_winding
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    n: usize,
    samples: usize,
    spec: String,
    suites: Vec<lsl_core::verify::SuiteReport>,
}

fn cmd_verify(c: &Common, a: &VerifyArgs) -> CliResult<()> {
    format_or(c, Format::Json, &[Format::Json], "verify")?;
    if let Some(s) = &a.suite {
        if !SUITES.contains(&s.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown suite {s:?}; known: {}",
                SUITES.join(", ")
            )));
        }
    }
    let n = c.n();
    let spec = if c.spec == "default" {
        None
    } else {
        Some(parse_spec(c, n)?)
    };
    let cfg = VerifyConfig {
        n,
        seed: c.seed,
        samples: a.samples,
        spec,
        tol: c.tolerances(),
        budget: c.budget,
        flip_epsilon: a.inject_sign_flip,
        ..VerifyConfig::default()
    };
    let suites = run_suites(&cfg, a.suite.as_deref())?;
    let failing: Vec<String> = suites
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.suite.clone())
        .collect();
    let body = json(&VerifyReport {
        seed: c.seed,
        n,
        samples: a.samples,
        spec: c.spec.clone(),
        suites,
    });
    emit(c, &body, &[("verify.json", body.clone())])?;
    if !failing.is_empty() {
        return Err(CliError::Verify(format!(
            "failing suites: {}",
            failing.join(", ")
        )));
    }
    Ok(())
}
