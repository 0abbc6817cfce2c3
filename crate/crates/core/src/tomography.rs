//! Simulated detector tomography with mutually unbiased probe states.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::RngCore;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::trial_rng;
use crate::hilbert::TwoQubitState;
use crate::linalg::{c, cr, herm_eig, identity, kron, paulis, psd_power, ComplexMatrix, ComplexVector};
use crate::povm::{Outcome, Povm};

pub const MAX_ITERATIONS: usize = 100_000;
pub const STEP_TOL: f64 = 1e-10;
pub const COMPLETENESS_TOL: f64 = 1e-6;
const LL_CHECK_EVERY: usize = 100;
const LL_SLACK: f64 = 1e-9;
const ZERO_TRACE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ProbeSet {
    states: Vec<TwoQubitState>,
    basis_size: usize,
}

impl ProbeSet {
    pub fn states(&self) -> &[TwoQubitState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn basis(&self, k: usize) -> &[TwoQubitState] {
        &self.states[k * self.basis_size..(k + 1) * self.basis_size]
    }

    /// Keeps the first `n` bases only (all of them if `n` is larger).
    pub fn truncated(&self, n: usize) -> ProbeSet {
        let n = n.min(self.states.len() / self.basis_size);
        ProbeSet {
            states: self.states[..n * self.basis_size].to_vec(),
            basis_size: self.basis_size,
        }
    }

    fn projectors(&self) -> Vec<ComplexMatrix> {
        self.states.iter().map(|s| s.density()).collect()
    }
}

fn pauli(s: &str) -> ComplexMatrix {
    let [x, y, z] = paulis();
    let one = |ch: char| match ch {
        'I' => identity(2),
        'X' => x.clone(),
        'Y' => y.clone(),
        _ => z.clone(),
    };
    let mut ch = s.chars();
    kron(&one(ch.next().unwrap()), &one(ch.next().unwrap()))
}

// Classes of three commuting two-qubit Paulis; their joint eigenbases form
// the complete MUB set in dimension 4 (equivalent to the GF(4) construction).
const CLASSES: [[&str; 2]; 4] = [["XI", "IX"], ["YI", "IY"], ["XY", "YZ"], ["YX", "ZY"]];

fn fix_phase(v: &mut ComplexVector) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-8).copied() {
        let ph = z.conj() / z.norm();
        *v *= ph;
    }
}

pub fn build_mub_probes() -> ProbeSet {
    let mut states: Vec<TwoQubitState> = (0..4).map(TwoQubitState::basis).collect();
    for [a, b] in CLASSES {
        let m = pauli(a) + pauli(b).scale(2.0);
        let (_, vecs) = herm_eig(&m).expect("Pauli sum is Hermitian");
        for k in 0..4 {
            let mut v: ComplexVector = vecs.column(k).into_owned();
            fix_phase(&mut v);
            states.push(TwoQubitState::normalized(v).expect("eigenvector"));
        }
    }
    ProbeSet { states, basis_size: 4 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountMatrix {
    pub labels: Vec<Outcome>,
    pub counts: Vec<Vec<u64>>,
    pub shots_per_state: u64,
}

#[derive(Serialize, Deserialize)]
struct CountRow {
    probe_index: usize,
    outcome_label: Outcome,
    count: u64,
}

impl CountMatrix {
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        let n = self.shots_per_state as f64;
        self.counts.iter().map(|r| r.iter().map(|&k| k as f64 / n).collect()).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for (j, row) in self.counts.iter().enumerate() {
            for (l, &count) in self.labels.iter().zip(row) {
                wr.serialize(CountRow { probe_index: j, outcome_label: l.clone(), count })?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rows: Vec<CountRow> = Vec::new();
        for rec in csv::Reader::from_reader(r).deserialize() {
            rows.push(rec?);
        }
        let mut labels: Vec<Outcome> = Vec::new();
        for row in &rows {
            if !labels.contains(&row.outcome_label) {
                labels.push(row.outcome_label.clone());
            }
        }
        let n = rows.iter().map(|r| r.probe_index + 1).max().unwrap_or(0);
        let mut counts = vec![vec![0u64; labels.len()]; n];
        for row in rows {
            let l = labels.iter().position(|x| *x == row.outcome_label).unwrap();
            counts[row.probe_index][l] = row.count;
        }
        let shots = counts.first().map_or(0, |r| r.iter().sum());
        if counts.iter().any(|r| r.iter().sum::<u64>() != shots) {
            return Err(Error::Invalid("count rows have different totals".into()));
        }
        Ok(CountMatrix { labels, counts, shots_per_state: shots })
    }
}

fn born_row(povm: &Povm, rho: &ComplexMatrix) -> Vec<f64> {
    let p: Vec<f64> = povm.probabilities(rho).into_iter().map(|x| x.max(0.0)).collect();
    let s: f64 = p.iter().sum();
    p.into_iter().map(|x| x / s).collect()
}

/// Multinomial shot noise, one ChaCha stream per probe.
pub fn simulate_counts(povm: &Povm, probes: &ProbeSet, shots: u64, seed: u64) -> Result<CountMatrix> {
    let mut counts = Vec::with_capacity(probes.len());
    for (j, rho) in probes.projectors().iter().enumerate() {
        let p = born_row(povm, rho);
        let mut rng = trial_rng(seed, j as u64);
        let (mut left, mut mass) = (shots, 1.0);
        let mut row = vec![0u64; p.len()];
        for (l, &pl) in p.iter().enumerate() {
            if left == 0 {
                break;
            }
            let k = if l + 1 == p.len() || pl >= mass {
                left
            } else {
                let q = (pl / mass).clamp(0.0, 1.0);
                Binomial::new(left, q)
                    .map_err(|e| Error::Invalid(e.to_string()))?
                    .sample(&mut rng)
            };
            row[l] = k;
            left -= k;
            mass -= pl;
        }
        counts.push(row);
    }
    Ok(CountMatrix { labels: povm.labels().to_vec(), counts, shots_per_state: shots })
}

/// Exact Born frequencies, the noiseless limit of `simulate_counts`.
pub fn exact_frequencies(povm: &Povm, probes: &ProbeSet) -> Vec<Vec<f64>> {
    probes.projectors().iter().map(|rho| born_row(povm, rho)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    /// Rank of the probe frame on 4×4 Hermitian operators (16 when complete).
    pub rank: usize,
    pub condition_number: f64,
    pub informationally_complete: bool,
}

pub fn frame_diagnostics(probes: &ProbeSet) -> FrameDiagnostics {
    // ⟨ψ|Π|ψ⟩ as a real functional of the 16 real parameters of Π
    let mut basis = Vec::new();
    for i in 0..4 {
        for j in i..4 {
            let mut m = ComplexMatrix::zeros(4, 4);
            m[(i, j)] = cr(1.0);
            m[(j, i)] = cr(1.0);
            basis.push(m);
            if i != j {
                let mut m = ComplexMatrix::zeros(4, 4);
                m[(i, j)] = c(0.0, -1.0);
                m[(j, i)] = c(0.0, 1.0);
                basis.push(m);
            }
        }
    }
    let rows = probes.projectors();
    let a = DMatrix::from_fn(rows.len(), basis.len(), |r, k| (&rows[r] * &basis[k]).trace().re);
    let sv = a.singular_values();
    let max = sv.max();
    let rank = sv.iter().filter(|&&s| s > 1e-10 * max.max(1.0)).count();
    let min = if rank == basis.len() { sv.min() } else { 0.0 };
    FrameDiagnostics {
        rank,
        condition_number: if min > 0.0 { max / min } else { f64::INFINITY },
        informationally_complete: rank == basis.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub per_element: Vec<f64>,
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    #[serde(with = "povm_json")]
    pub povm: Povm,
    pub iterations: usize,
    pub final_step_delta: f64,
    pub converged: bool,
    pub log_likelihood: f64,
    /// Log-likelihood never dropped between the periodic checks.
    pub monotone: bool,
    pub completeness_error: f64,
    pub diagnostics: FrameDiagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<FidelityReport>,
}

mod povm_json {
    use super::Povm;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(p: &Povm, s: S) -> Result<S::Ok, S::Error> {
        p.to_json().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Povm, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        Povm::from_json(&v).map_err(serde::de::Error::custom)
    }
}

impl ReconstructionResult {
    pub fn with_reference(mut self, ideal: &Povm) -> Result<Self> {
        self.fidelity = Some(povm_fidelity(&self.povm, ideal)?);
        Ok(self)
    }

    pub fn overall_fidelity(&self) -> Option<f64> {
        self.fidelity.as_ref().map(|f| f.overall)
    }
}

fn log_likelihood(freqs: &[Vec<f64>], probs: &[Vec<f64>]) -> f64 {
    let mut ll = 0.0;
    for (fr, pr) in freqs.iter().zip(probs) {
        for (&f, &p) in fr.iter().zip(pr) {
            if f > 0.0 {
                ll += f * p.max(f64::MIN_POSITIVE).ln();
            }
        }
    }
    ll
}

fn probabilities(elements: &[ComplexMatrix], rhos: &[ComplexMatrix]) -> Vec<Vec<f64>> {
    rhos.iter()
        .map(|r| elements.iter().map(|e| (e * r).trace().re).collect())
        .collect()
}

pub fn reconstruct_povm(counts: &CountMatrix, probes: &ProbeSet) -> Result<ReconstructionResult> {
    if counts.shots_per_state == 0 {
        return Err(Error::ZeroShots);
    }
    reconstruct_from_frequencies(&counts.frequencies(), &counts.labels, probes)
}

/// Lagrange-normalized fixed point Πℓ ← λ^{−1/2} Rℓ Πℓ Rℓ λ^{−1/2}, starting
/// from Πℓ = 𝟙/L.
pub fn reconstruct_from_frequencies(
    freqs: &[Vec<f64>],
    labels: &[Outcome],
    probes: &ProbeSet,
) -> Result<ReconstructionResult> {
    if freqs.len() != probes.len() || freqs.iter().any(|r| r.len() != labels.len()) {
        return Err(Error::Dimension(format!(
            "{} count rows for {} probes and {} labels",
            freqs.len(),
            probes.len(),
            labels.len()
        )));
    }
    let rhos = probes.projectors();
    let l = labels.len();
    let mut pi: Vec<ComplexMatrix> = vec![identity(4).scale(1.0 / l as f64); l];
    let mut probs = probabilities(&pi, &rhos);
    let mut ll_prev = log_likelihood(freqs, &probs);
    let mut monotone = true;
    let mut delta = f64::INFINITY;
    let mut it = 0;
    while it < MAX_ITERATIONS {
        it += 1;
        let rpr: Vec<ComplexMatrix> = (0..l)
            .map(|k| {
                let mut r = ComplexMatrix::zeros(4, 4);
                for (j, rho) in rhos.iter().enumerate() {
                    if freqs[j][k] > 0.0 && probs[j][k] > 0.0 {
                        r += rho.scale(freqs[j][k] / probs[j][k]);
                    }
                }
                &r * &pi[k] * &r
            })
            .collect();
        let lambda = rpr.iter().fold(ComplexMatrix::zeros(4, 4), |a, b| a + b);
        let s = psd_power(&lambda, -0.5)?;
        let next: Vec<ComplexMatrix> = rpr
            .iter()
            .map(|m| {
                let n = &s * m * &s;
                (&n + n.adjoint()).scale(0.5)
            })
            .collect();
        delta = next
            .iter()
            .zip(&pi)
            .flat_map(|(a, b)| (a - b).iter().map(|z| z.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        pi = next;
        probs = probabilities(&pi, &rhos);
        if it % LL_CHECK_EVERY == 0 {
            let ll = log_likelihood(freqs, &probs);
            if ll < ll_prev - LL_SLACK * ll_prev.abs().max(1.0) {
                monotone = false;
            }
            ll_prev = ll;
        }
        if delta < STEP_TOL {
            break;
        }
    }
    let completeness = crate::linalg::frobenius(&(pi.iter().fold(ComplexMatrix::zeros(4, 4), |a, b| a + b) - identity(4)));
    let povm = Povm::with_tolerance(pi, labels.to_vec(), COMPLETENESS_TOL)?;
    Ok(ReconstructionResult {
        iterations: it,
        final_step_delta: delta,
        converged: delta < STEP_TOL,
        log_likelihood: log_likelihood(freqs, &probs),
        monotone,
        completeness_error: completeness,
        diagnostics: frame_diagnostics(probes),
        fidelity: None,
        povm,
    })
}

/// (Tr√(√a b √a))² on trace-normalized operators.
pub fn element_fidelity(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let (ta, tb) = (a.trace().re, b.trace().re);
    if ta < ZERO_TRACE || tb < ZERO_TRACE {
        return Ok(if ta < ZERO_TRACE && tb < ZERO_TRACE { 1.0 } else { 0.0 });
    }
    let (a, b) = (a.scale(1.0 / ta), b.scale(1.0 / tb));
    let sa = psd_power(&a, 0.5)?;
    let m = &sa * b * &sa;
    let root = psd_power(&((&m + m.adjoint()).scale(0.5)), 0.5)?;
    Ok(root.trace().re.powi(2).min(1.0))
}

/// Per-element fidelities and their average weighted by Tr Bℓ / 4.
pub fn povm_fidelity(reconstructed: &Povm, ideal: &Povm) -> Result<FidelityReport> {
    if reconstructed.labels() != ideal.labels() {
        return Err(Error::Invalid("POVM labels differ".into()));
    }
    let dim = ideal.dim() as f64;
    let mut per_element = Vec::new();
    let mut overall = 0.0;
    for (a, b) in reconstructed.elements().iter().zip(ideal.elements()) {
        let f = element_fidelity(a, b)?;
        overall += b.trace().re / dim * f;
        per_element.push(f);
    }
    Ok(FidelityReport { per_element, overall })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyRun {
    pub shots: u64,
    pub repetitions: usize,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub overall_fidelities: Vec<f64>,
    pub mean_overall_fidelity: f64,
    pub std_overall_fidelity: f64,
    pub results: Vec<ReconstructionResult>,
}

/// Seed of repetition `r`, drawn from its own stream.
pub fn repetition_seed(seed: u64, r: usize) -> u64 {
    trial_rng(seed ^ 0x746f_6d6f, r as u64).next_u64()
}

/// Repeated simulate-and-reconstruct against a ground-truth POVM.
pub fn run_repetitions(truth: &Povm, shots: u64, repetitions: usize, seed: u64) -> Result<TomographyRun> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    if repetitions == 0 {
        return Err(Error::Invalid("repetitions must be at least 1".into()));
    }
    let probes = build_mub_probes();
    let seeds: Vec<u64> = (0..repetitions).map(|r| repetition_seed(seed, r)).collect();
    let results = seeds
        .par_iter()
        .map(|&s| {
            let counts = simulate_counts(truth, &probes, shots, s)?;
            reconstruct_povm(&counts, &probes)?.with_reference(truth)
        })
        .collect::<Result<Vec<_>>>()?;
    let f: Vec<f64> = results.iter().map(|r| r.overall_fidelity().unwrap()).collect();
    let n = f.len() as f64;
    let mean = f.iter().sum::<f64>() / n;
    let std = if f.len() > 1 {
        (f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(TomographyRun {
        shots,
        repetitions,
        seed,
        seeds,
        overall_fidelities: f,
        mean_overall_fidelity: mean,
        std_overall_fidelity: std,
        results,
    })
}
