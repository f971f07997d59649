//! Property suites that cross-check the geometric and combinatorial sides.
//! Every suite is deterministic for a fixed configuration: cases draw from
//! their own seeded stream, run through [`crate::par`], and are sorted by id
//! before aggregation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{all_subsets, order_leq, order_leq_with, OrderStrategy, SubsetIndex};
use crate::error::{Error, Result};
use crate::lagrangian::{
    arnold_coords_of_unitary, arnold_coords_tol, chart_margin, frame_from_arnold,
    frame_from_unitary, subspace_distance,
};
use crate::matrix::{max_abs, CMatrix, Tolerances, UnitaryMatrix};
use crate::morse::{
    borel_sample_with, classify_stable_tol, classify_unstable_frame, classify_unstable_tol,
    critical_unitary, flow, flow_limit, flow_vector_field, hessian_finite_difference, hessian_form,
    hessian_negative_count, morse_value, stratum_sample, tunnelling_witness, Direction, FlowSpec,
    DEFAULT_WITNESS_BUDGET,
};
use crate::par::map_indexed;
use crate::ring::{
    basis_class, betti_ranks, cup_with, decompose_with, pairing_values_with, pairing_with,
    poincare_polynomial, unit, ShuffleSign, SignRule,
};
use crate::sampling::{random_hermitian, random_unitary, rng_for, SampleRng};
use crate::spectral::{
    crossings_through, det_winding, maslov_index, random_loop, shifted_diagonal_loop, UnitaryLoop,
};

/// Suite names in run order.
pub const SUITES: &[&str] = &[
    "order",
    "self-index",
    "hessian",
    "flow",
    "classification",
    "arnold",
    "ring",
    "pairing-unimodularity",
    "betti",
    "tunnelling",
    "borel",
    "maslov",
];

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    /// Largest ambient size; each suite also applies its own cap.
    pub n: usize,
    pub seed: u64,
    /// Random cases per ambient size (per critical point for the Hessian).
    pub samples: usize,
    /// Flow eigenvalues used at size `n`; other sizes use the default.
    pub spec: Option<FlowSpec>,
    pub tol: Tolerances,
    pub budget: usize,
    /// Intervals per sampled loop.
    pub loop_samples: usize,
    /// Test hook: replace the shuffle sign by one with `ε({1}, {1}^c)` negated.
    pub flip_epsilon: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n: 2,
            seed: 0,
            samples: 20,
            spec: None,
            tol: Tolerances::default(),
            budget: DEFAULT_WITNESS_BUDGET,
            loop_samples: 1000,
            flip_epsilon: false,
        }
    }
}

impl VerifyConfig {
    fn spec_for(&self, n: usize) -> FlowSpec {
        match &self.spec {
            Some(s) if s.n() == n => s.clone(),
            _ => FlowSpec::default_for(n),
        }
    }

    fn sizes(&self, lo: usize, cap: usize) -> std::ops::RangeInclusive<usize> {
        lo..=self.n.min(cap)
    }

    fn rng(&self, suite: u64, n: usize, case: usize) -> SampleRng {
        rng_for(self.seed, (suite << 56) | ((n as u64) << 40) | case as u64)
    }

    fn sign_rule(&self) -> Box<dyn SignRule> {
        if self.flip_epsilon {
            Box::new(FlippedSign)
        } else {
            Box::new(ShuffleSign)
        }
    }
}

/// The shuffle sign with `ε({1}, {1}^c)` negated.
pub struct FlippedSign;

impl SignRule for FlippedSign {
    fn sign(&self, i: &SubsetIndex, j: &SubsetIndex) -> i64 {
        let s = ShuffleSign.sign(i, j);
        if i.bits() == 1 && *j == i.complement() {
            -s
        } else {
            s
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    /// Numerically undecidable (e.g. spectral gap in the guard band).
    Excluded,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub outcome: Outcome,
    pub error: f64,
}

impl CaseResult {
    fn check(id: String, ok: bool, error: f64) -> Self {
        CaseResult {
            id,
            outcome: if ok { Outcome::Pass } else { Outcome::Fail },
            error,
        }
    }

    fn within(id: String, error: f64, tol: f64) -> Self {
        Self::check(id, error.is_finite() && error <= tol, error)
    }

    fn failed(id: String) -> Self {
        Self::check(id, false, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: usize,
    pub failures: usize,
    pub excluded: usize,
    pub max_error: f64,
    /// Ids of failing cases, at most ten.
    pub failed_cases: Vec<String>,
}

impl SuiteReport {
    /// Passing means no failures and at most 1% excluded cases.
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.excluded * 100 <= self.cases
    }
}

/// Aggregate case results; ordering of the input does not matter.
pub fn aggregate(suite: &str, mut cases: Vec<CaseResult>) -> SuiteReport {
    cases.sort_by(|a, b| a.id.cmp(&b.id));
    let failed: Vec<&CaseResult> = cases
        .iter()
        .filter(|c| c.outcome == Outcome::Fail)
        .collect();
    SuiteReport {
        suite: suite.to_string(),
        cases: cases.len(),
        failures: failed.len(),
        excluded: cases
            .iter()
            .filter(|c| c.outcome == Outcome::Excluded)
            .count(),
        max_error: cases
            .iter()
            .filter(|c| c.outcome != Outcome::Excluded && c.error.is_finite())
            .map(|c| c.error)
            .fold(0.0, f64::max),
        failed_cases: failed.iter().take(10).map(|c| c.id.clone()).collect(),
    }
}

pub fn run_suite(name: &str, cfg: &VerifyConfig) -> Result<SuiteReport> {
    if cfg.n == 0 {
        return Err(Error::OutOfRange {
            what: "n",
            value: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    let cases = match name {
        "order" => order_cases(cfg)?,
        "self-index" => self_index_cases(cfg)?,
        "hessian" => hessian_cases(cfg)?,
        "flow" => flow_cases(cfg)?,
        "classification" => classification_cases(cfg)?,
        "arnold" => arnold_cases(cfg)?,
        "ring" => ring_cases(cfg)?,
        "pairing-unimodularity" => pairing_cases(cfg)?,
        "betti" => betti_cases(cfg)?,
        "tunnelling" => tunnelling_cases(cfg)?,
        "borel" => borel_cases(cfg)?,
        "maslov" => maslov_cases(cfg)?,
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    Ok(aggregate(name, cases))
}

/// Run the named suite, or all of them in [`SUITES`] order.
pub fn run_suites(cfg: &VerifyConfig, only: Option<&str>) -> Result<Vec<SuiteReport>> {
    match only {
        Some(name) => Ok(vec![run_suite(name, cfg)?]),
        None => SUITES.iter().map(|s| run_suite(s, cfg)).collect(),
    }
}

fn subsets(n: usize) -> Result<Vec<SubsetIndex>> {
    Ok(all_subsets(n)?.collect())
}

fn flatten(v: Vec<Result<Vec<CaseResult>>>) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    for r in v {
        out.extend(r?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Combinatorics

fn order_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    for n in cfg.sizes(1, 8) {
        let all = subsets(n)?;
        let rows = map_indexed(all.len(), |a| -> Result<CaseResult> {
            let j = all[a];
            let mut ok = true;
            for k in &all {
                let nu = order_leq_with(&j, k, OrderStrategy::Nu)?;
                let tail = order_leq_with(&j, k, OrderStrategy::TailCount)?;
                let comp = order_leq_with(&j, k, OrderStrategy::Complement)?;
                ok &= nu == tail && tail == comp;
            }
            Ok(CaseResult::check(format!("n{n}/J{:05}", j.bits()), ok, 0.0))
        });
        out.extend(rows.into_iter().collect::<Result<Vec<_>>>()?);
    }
    Ok(out)
}

fn self_index_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    for n in cfg.sizes(1, 6) {
        let spec = FlowSpec::default_for(n);
        for i in subsets(n)? {
            let f0 = morse_value(&spec, &critical_unitary(i))?;
            let err = (f0 + (n * n) as f64 / 2.0 - i.weight() as f64).abs();
            out.push(CaseResult::within(
                format!("n{n}/I{:03}", i.bits()),
                err,
                1e-12,
            ));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Morse theory

fn hessian_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let mut jobs = Vec::new();
    for n in cfg.sizes(1, 4) {
        for i in subsets(n)? {
            jobs.push((n, i));
        }
    }
    let rows = map_indexed(jobs.len(), |j| -> Result<Vec<CaseResult>> {
        let (n, i) = jobs[j];
        let spec = cfg.spec_for(n);
        let tag = format!("n{n}/I{:02}", i.bits());
        let mut out = vec![CaseResult::check(
            format!("{tag}/index"),
            hessian_negative_count(i, &spec)? as u64 == i.weight(),
            0.0,
        )];
        for k in 0..cfg.samples {
            let mut rng = cfg.rng(3, n, (i.bits() as usize) << 20 | k);
            let z = random_hermitian(&mut rng, n, 1.0);
            let exact = hessian_form(i, &spec, &z)?;
            let fd = hessian_finite_difference(i, &spec, &z, 1e-2)?;
            let rel = (exact - fd).abs() / exact.abs().max(1e-3);
            out.push(CaseResult::within(format!("{tag}/z{k:04}"), rel, 1e-5));
        }
        Ok(out)
    });
    flatten(rows)
}

/// Classical fourth-order Runge–Kutta for `dS/dt = A − SAS`, returning the
/// state at each of `checkpoints` (ascending, non-negative, multiples of `h`
/// up to rounding).
pub fn rk4_flow(
    s: &UnitaryMatrix,
    spec: &FlowSpec,
    h: f64,
    checkpoints: &[f64],
) -> Result<Vec<CMatrix>> {
    let a = spec.a_matrix();
    let field = |m: &CMatrix| &a - m * &a * m;
    let two = Complex64::new(2.0, 0.0);
    let half = Complex64::new(h / 2.0, 0.0);
    let step = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let mut m = s.as_matrix().clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &target in checkpoints {
        let steps = ((target - t) / h).round() as usize;
        for _ in 0..steps {
            let k1 = field(&m);
            let k2 = field(&(&m + &k1 * half));
            let k3 = field(&(&m + &k2 * half));
            let k4 = field(&(&m + &k3 * step));
            m += (k1 + (k2 + k3) * two + k4) * sixth;
        }
        t += steps as f64 * h;
        out.push(m.clone());
    }
    Ok(out)
}

fn flow_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    for n in cfg.sizes(1, 4) {
        let spec = cfg.spec_for(n);
        let rows = map_indexed(cfg.samples, |k| -> Result<Vec<CaseResult>> {
            let mut rng = cfg.rng(4, n, k);
            let s = random_unitary(&mut rng, n);
            let times = [0.5, 1.0, 1.5, 2.0];
            let ode = rk4_flow(&s, &spec, 1e-3, &times)?;
            let mut ode_err: f64 = 0.0;
            for (t, m) in times.iter().zip(&ode) {
                ode_err = ode_err.max(max_abs(&(flow(&s, *t, &spec)?.into_inner() - m)));
            }
            let (a, b) = (
                4.0 * rng.random::<f64>() - 2.0,
                4.0 * rng.random::<f64>() - 2.0,
            );
            let two = flow(&flow(&s, a, &spec)?, b, &spec)?;
            let one = flow(&s, a + b, &spec)?;
            let group_err = max_abs(&(two.into_inner() - one.as_matrix()));
            let v = flow_vector_field(&s, &spec)?;
            let rate = (spec.a_matrix() * &v).trace().re;
            Ok(vec![
                CaseResult::within(format!("n{n}/s{k:04}/ode"), ode_err, 1e-6),
                CaseResult::within(format!("n{n}/s{k:04}/group"), group_err, 1e-8),
                CaseResult::check(format!("n{n}/s{k:04}/ascent"), rate >= 0.0, 0.0),
            ])
        });
        out.extend(flatten(rows)?);
    }
    Ok(out)
}

fn classification_case(
    s: &UnitaryMatrix,
    spec: &FlowSpec,
    tol: &Tolerances,
    id: String,
) -> CaseResult {
    let outcome = (|| -> Result<bool> {
        let back = flow_limit(s, spec, Direction::Backward)?;
        let fwd = flow_limit(s, spec, Direction::Forward)?;
        Ok(back == classify_unstable_tol(s, tol)? && fwd == classify_stable_tol(s, tol)?)
    })();
    match outcome {
        Ok(ok) => CaseResult::check(id, ok, 0.0),
        Err(Error::SpectralGap) | Err(Error::LimitNotResolved) => CaseResult {
            id,
            outcome: Outcome::Excluded,
            error: 0.0,
        },
        Err(_) => CaseResult::failed(id),
    }
}

/// A quarter of the cases (at least one) lie on strata with one or two
/// kernel directions; the rest are Haar samples.
fn classification_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    for n in cfg.sizes(1, 4) {
        let spec = cfg.spec_for(n);
        let on_strata = (cfg.samples / 4).max(1).min(cfg.samples);
        let small: Vec<SubsetIndex> = subsets(n)?
            .into_iter()
            .filter(|i| matches!(i.len(), 1 | 2))
            .collect();
        out.extend(map_indexed(cfg.samples, |k| {
            let mut rng = cfg.rng(5, n, k);
            let s = if k < on_strata {
                let i = small[rng.random_range(0..small.len())];
                stratum_sample(&mut rng, i)
            } else {
                random_unitary(&mut rng, n)
            };
            classification_case(&s, &spec, &cfg.tol, format!("n{n}/s{k:04}"))
        }));
    }
    Ok(out)
}

fn arnold_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let mut jobs = Vec::new();
    for n in cfg.sizes(1, 4) {
        for i in subsets(n)? {
            jobs.push((n, i));
        }
    }
    let rows = map_indexed(jobs.len(), |j| -> Result<Vec<CaseResult>> {
        let (n, i) = jobs[j];
        let mut out = Vec::new();
        for k in 0..cfg.samples {
            let mut rng = cfg.rng(6, n, (i.bits() as usize) << 20 | k);
            let id = format!("n{n}/I{:02}/s{k:04}", i.bits());
            // coordinates → frame → coordinates
            let t = random_hermitian(&mut rng, n, 2.0);
            let back = arnold_coords_tol(&frame_from_arnold(i, &t)?, i, &cfg.tol)?;
            out.push(CaseResult::within(
                format!("{id}/coords"),
                max_abs(&(back.as_matrix() - t.as_matrix())),
                1e-8,
            ));
            // unitary → coordinates → frame, on a unitary well inside the chart
            let s = loop {
                let s = random_unitary(&mut rng, n);
                if chart_margin(&frame_from_unitary(&s), i)? > 1e-2 {
                    break s;
                }
            };
            let coords = arnold_coords_of_unitary(&s, i, &cfg.tol)?;
            let dist = subspace_distance(
                frame_from_arnold(i, &coords)?.as_matrix(),
                frame_from_unitary(&s).as_matrix(),
            );
            out.push(CaseResult::within(format!("{id}/frame"), dist, 1e-8));
        }
        Ok(out)
    });
    flatten(rows)
}

fn tunnelling_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let mut jobs = Vec::new();
    for n in cfg.sizes(1, 3) {
        let all = subsets(n)?;
        for m in &all {
            for k in &all {
                jobs.push((n, *m, *k));
            }
        }
    }
    let rows = map_indexed(jobs.len(), |j| -> Result<CaseResult> {
        let (n, m, k) = jobs[j];
        let found = tunnelling_witness(m, k, &cfg.spec_for(n), cfg.seed, cfg.budget)?.is_some();
        Ok(CaseResult::check(
            format!("n{n}/M{:02}/K{:02}", m.bits(), k.bits()),
            found == order_leq(&k, &m)?,
            0.0,
        ))
    });
    rows.into_iter().collect()
}

/// Random frames, half of them on a random unstable stratum, keep their
/// stratum under random Borel elements.
fn borel_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    for n in cfg.sizes(1, 4) {
        let all = subsets(n)?;
        let rows = map_indexed(cfg.samples, |k| -> Result<CaseResult> {
            let mut rng = cfg.rng(11, n, k);
            let s = if k % 2 == 0 {
                let i = all[rng.random_range(0..all.len())];
                stratum_sample(&mut rng, i)
            } else {
                random_unitary(&mut rng, n)
            };
            let f = frame_from_unitary(&s);
            let t = borel_sample_with(&mut rng, n);
            let id = format!("n{n}/s{k:04}");
            Ok(
                match (
                    classify_unstable_frame(&f),
                    f.transform(&t).and_then(|g| classify_unstable_frame(&g)),
                ) {
                    (Ok(a), Ok(b)) => CaseResult::check(id, a == b, 0.0),
                    (Err(Error::SpectralGap), _) | (_, Err(Error::SpectralGap)) => CaseResult {
                        id,
                        outcome: Outcome::Excluded,
                        error: 0.0,
                    },
                    _ => CaseResult::failed(id),
                },
            )
        });
        out.extend(rows.into_iter().collect::<Result<Vec<_>>>()?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Ring

fn ring_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let rule = cfg.sign_rule();
    let mut out = Vec::new();
    for n in cfg.sizes(1, 8) {
        let all = subsets(n)?;
        let rows = map_indexed(all.len(), |a| -> Result<Vec<CaseResult>> {
            let i = all[a];
            let tag = format!("n{n}/I{:03}", i.bits());
            let mut acc = unit(n)?;
            for m in i.members() {
                acc = cup_with(
                    &acc,
                    &basis_class(SubsetIndex::new(n, &[m])?),
                    rule.as_ref(),
                )?;
            }
            let mut rows = vec![CaseResult::check(
                format!("{tag}/product"),
                acc == basis_class(i),
                0.0,
            )];
            if n <= 6 {
                let k = i.weight();
                let values = pairing_values_with(&basis_class(i), k, rule.as_ref())?;
                let back = decompose_with(&values, n, k, rule.as_ref())?;
                rows.push(CaseResult::check(
                    format!("{tag}/decompose"),
                    back == basis_class(i),
                    0.0,
                ));
            }
            Ok(rows)
        });
        out.extend(flatten(rows)?);
    }
    Ok(out)
}

/// Sign of the permutation listing `first` then `second`, by cycle counting.
fn permutation_sign(first: &[usize], second: &[usize]) -> i64 {
    let seq: Vec<usize> = first.iter().chain(second).copied().collect();
    let mut sorted = seq.clone();
    sorted.sort_unstable();
    let perm: Vec<usize> = seq
        .iter()
        .map(|v| sorted.binary_search(v).expect("present"))
        .collect();
    let mut seen = vec![false; perm.len()];
    let mut cycles = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut p = start;
        while !seen[p] {
            seen[p] = true;
            p = perm[p];
        }
    }
    if (perm.len() - cycles).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// The complementary-degree pairing matrix is a signed permutation matrix
/// with signs given by an independent permutation-signature oracle.
fn pairing_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let rule = cfg.sign_rule();
    let mut out = Vec::new();
    for n in cfg.sizes(1, 8) {
        let all = subsets(n)?;
        let mut by_weight: BTreeMap<u64, Vec<SubsetIndex>> = BTreeMap::new();
        for i in &all {
            by_weight.entry(i.weight()).or_default().push(*i);
        }
        let top = (n * n) as u64;
        let rows = map_indexed(all.len(), |a| -> Result<CaseResult> {
            let i = all[a];
            let partners = by_weight
                .get(&(top - i.weight()))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            let mut nonzero = 0;
            let mut ok = true;
            for j in partners {
                let p = pairing_with(&basis_class(i), &basis_class(*j), rule.as_ref())?;
                if p != 0 {
                    nonzero += 1;
                }
                let want = if *j == i.complement() {
                    permutation_sign(&i.members(), &j.members())
                } else {
                    0
                };
                ok &= p == want;
            }
            Ok(CaseResult::check(
                format!("n{n}/I{:03}", i.bits()),
                ok && nonzero == 1,
                0.0,
            ))
        });
        out.extend(rows.into_iter().collect::<Result<Vec<_>>>()?);
    }
    Ok(out)
}

fn betti_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    for n in cfg.sizes(1, 12) {
        let ranks = betti_ranks(n)?;
        let poly = poincare_polynomial(n)?;
        let symmetric = (0..ranks.len()).all(|k| ranks[k] == ranks[ranks.len() - 1 - k]);
        let total = ranks.iter().sum::<u64>() == 1u64 << n;
        out.push(CaseResult::check(
            format!("n{n:02}"),
            ranks == poly && symmetric && total,
            0.0,
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Spectral flow

fn loop_case(lp: &UnitaryLoop, want: i64, id: String) -> CaseResult {
    let counts = (|| -> Result<(i64, i64, i64)> {
        Ok((
            maslov_index(lp)?,
            det_winding(lp)?,
            crossings_through(lp, Complex64::new(-1.0, 0.0))?,
        ))
    })();
    match counts {
        Ok((m, d, r)) => {
            CaseResult::check(id, m == d && d == want && r == want, (m - d).abs() as f64)
        }
        Err(Error::NonGenericLoop) => CaseResult {
            id,
            outcome: Outcome::Excluded,
            error: 0.0,
        },
        Err(_) => CaseResult::failed(id),
    }
}

fn maslov_cases(cfg: &VerifyConfig) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    for n in cfg.sizes(1, 4) {
        let rows = map_indexed(cfg.samples, |k| -> Result<CaseResult> {
            let mut rng = cfg.rng(12, n, k);
            let (lp, wind) = random_loop(&mut rng, n, cfg.loop_samples)?;
            Ok(loop_case(&lp, wind, format!("n{n}/s{k:04}")))
        });
        out.extend(rows.into_iter().collect::<Result<Vec<_>>>()?);
        for m in [0, 1, 2, -1] {
            let mut windings = vec![0; n];
            windings[0] = m;
            let lp = shifted_diagonal_loop(&windings, cfg.loop_samples.max(64))?;
            out.push(loop_case(&lp, m as i64, format!("n{n}/diag{m:+}")));
        }
    }
    Ok(out)
}
