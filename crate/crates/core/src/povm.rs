//! The abstention POVM family, score operators and exact game values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    build_input_state, direction_tetrahedron, singlet_projector, triplet_projector, two_qubit_rotation,
    Bell, Direction, InputStateSpec, TetraIndex,
};
use crate::linalg::{
    cr, from_pairs, frobenius, herm_eig, identity, projector, psd_power, to_pairs, ComplexMatrix, ComplexVector,
};

pub const COMPLETENESS_TOL: f64 = 1e-9;
pub const F_MAX: f64 = 0.788_675_134_594_812_9; // (3 + √3)/6
pub const DELTA_MAX: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Fidelity,
    #[serde(rename = "likelihood")]
    MaxLikelihood,
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreKind::Fidelity => "fidelity",
            ScoreKind::MaxLikelihood => "likelihood",
        })
    }
}

impl FromStr for ScoreKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fidelity" | "f" => Ok(ScoreKind::Fidelity),
            "likelihood" | "delta" | "ml" => Ok(ScoreKind::MaxLikelihood),
            _ => Err(Error::Invalid(format!("unknown score kind '{s}'"))),
        }
    }
}

/// Outcome label. Serialized as "n1".."n4", "abstain", or a free name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Outcome {
    Dir(TetraIndex),
    Abstain,
    Named(String),
}

impl Outcome {
    pub fn standard() -> Vec<Outcome> {
        let mut v: Vec<Outcome> = TetraIndex::all().into_iter().map(Outcome::Dir).collect();
        v.push(Outcome::Abstain);
        v
    }

    pub fn is_abstain(&self) -> bool {
        matches!(self, Outcome::Abstain)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Dir(i) => write!(f, "n{}", i.get()),
            Outcome::Abstain => f.write_str("abstain"),
            Outcome::Named(s) => f.write_str(s),
        }
    }
}

impl From<Outcome> for String {
    fn from(o: Outcome) -> String {
        o.to_string()
    }
}

impl From<String> for Outcome {
    fn from(s: String) -> Outcome {
        match s.as_str() {
            "abstain" => Outcome::Abstain,
            "n1" | "n2" | "n3" | "n4" => Outcome::Dir(TetraIndex::new(s.as_bytes()[1] - b'0').unwrap()),
            _ => Outcome::Named(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
    labels: Vec<Outcome>,
}

#[derive(Serialize, Deserialize)]
struct PovmJson {
    labels: Vec<Outcome>,
    elements: Vec<Vec<Vec<[f64; 2]>>>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>, labels: Vec<Outcome>) -> Result<Self> {
        Self::with_tolerance(elements, labels, COMPLETENESS_TOL)
    }

    /// Checks PSD and completeness against `tol`.
    pub fn with_tolerance(elements: Vec<ComplexMatrix>, labels: Vec<Outcome>, tol: f64) -> Result<Self> {
        if elements.len() != labels.len() || elements.is_empty() {
            return Err(Error::Dimension(format!(
                "{} elements for {} labels",
                elements.len(),
                labels.len()
            )));
        }
        let d = elements[0].nrows();
        let mut sum = ComplexMatrix::zeros(d, d);
        for e in &elements {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::Dimension("POVM elements of different sizes".into()));
            }
            let (vals, _) = herm_eig(e)?;
            if vals[0] < -tol.max(1e-10) {
                return Err(Error::NotPsd(vals[0]));
            }
            sum += e;
        }
        let dev = frobenius(&(sum - identity(d)));
        if dev > tol {
            return Err(Error::Incomplete(dev));
        }
        Ok(Povm { elements, labels })
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[Outcome] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn element(&self, label: &Outcome) -> Option<&ComplexMatrix> {
        self.labels.iter().position(|l| l == label).map(|i| &self.elements[i])
    }

    /// Born probabilities Tr[Πℓ ρ] in label order.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.elements.iter().map(|e| (e * rho).trace().re).collect()
    }

    pub fn completeness_error(&self) -> f64 {
        let d = self.dim();
        let sum = self.elements.iter().fold(ComplexMatrix::zeros(d, d), |a, e| a + e);
        frobenius(&(sum - identity(d)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(PovmJson {
            labels: self.labels.clone(),
            elements: self.elements.iter().map(to_pairs).collect(),
        })
        .expect("plain data serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let p: PovmJson = serde_json::from_value(v.clone())?;
        let elements = p.elements.iter().map(|e| from_pairs(e)).collect::<Result<Vec<_>>>()?;
        Self::with_tolerance(elements, p.labels, 1e-6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbstentionParams {
    pub lambda_bar_0: f64,
    pub lambda_bar_1: f64,
}

impl AbstentionParams {
    pub fn new(lambda_bar_0: f64, lambda_bar_1: f64) -> Result<Self> {
        for (name, v) in [("lambda_bar_0", lambda_bar_0), ("lambda_bar_1", lambda_bar_1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(AbstentionParams { lambda_bar_0, lambda_bar_1 })
    }

    pub fn none() -> Self {
        AbstentionParams { lambda_bar_0: 1.0, lambda_bar_1: 1.0 }
    }

    /// Π̄_abst = λ̄₀𝟙_{H₀} + λ̄₁𝟙_{H₁}, the complement of the abstention element.
    pub fn acceptance_operator(&self) -> ComplexMatrix {
        singlet_projector().scale(self.lambda_bar_0) + triplet_projector().scale(self.lambda_bar_1)
    }
}

/// |Φᵢ⟩ = (√λ̄₀/2) U_{n̂ᵢ}|ψ⁻⟩ + (√(3λ̄₁)/2) U_{n̂ᵢ}|ψ⁺⟩.
pub fn direction_vector(p: &AbstentionParams, i: TetraIndex) -> ComplexVector {
    let u = two_qubit_rotation(&i.direction());
    let seed = Bell::PsiMinus.vector().scale(p.lambda_bar_0.sqrt() / 2.0)
        + Bell::PsiPlus.vector().scale((3.0 * p.lambda_bar_1).sqrt() / 2.0);
    u * seed
}

pub fn build_abstention_povm(p: &AbstentionParams) -> Result<Povm> {
    let mut elements: Vec<ComplexMatrix> = TetraIndex::all()
        .into_iter()
        .map(|i| projector(&direction_vector(p, i)))
        .collect();
    elements.push(identity(4) - p.acceptance_operator());
    Povm::new(elements, Outcome::standard())
}

pub fn ejm() -> Povm {
    build_abstention_povm(&AbstentionParams::none()).expect("EJM is complete")
}

pub fn score_value(kind: ScoreKind, n: &Direction, n_hat: &Direction) -> Result<f64> {
    match kind {
        ScoreKind::Fidelity => Ok(0.5 * (1.0 + n.dot(n_hat))),
        ScoreKind::MaxLikelihood => {
            let a = TetraIndex::of(n, 1e-9).ok_or(Error::NotTetrahedral)?;
            let b = TetraIndex::of(n_hat, 1e-9).ok_or(Error::NotTetrahedral)?;
            Ok(if a == b { DELTA_MAX } else { 0.0 })
        }
    }
}

/// F_δ = Ψ_z; F_f is the closed form in the Bell basis mapped back to the
/// computational basis.
pub fn score_operator(kind: ScoreKind, spec: &InputStateSpec) -> ComplexMatrix {
    let psi = build_input_state(spec);
    match kind {
        ScoreKind::MaxLikelihood => psi.density(),
        ScoreKind::Fidelity => {
            let c0 = cr(spec.c0);
            let c1 = cr(spec.c1());
            let (al, be, ga) = (spec.alpha(), spec.beta(), spec.gamma());
            let mut m = ComplexMatrix::zeros(4, 4);
            m[(0, 0)] = cr(spec.c0 * spec.c0 / 2.0);
            for k in 1..4 {
                m[(k, k)] = cr(spec.c1() * spec.c1() / 6.0);
            }
            let mut x = ComplexMatrix::zeros(4, 4);
            x[(0, 1)] = c0 * c1.conj() * be.conj();
            let t = al * ga.conj() * (c1.norm_sqr() / 2.0);
            x[(2, 3)] = t;
            x[(3, 2)] = t;
            m += (&x + x.adjoint()).scale(1.0 / 6.0);
            let b = crate::hilbert::bell_basis();
            &b * m * b.adjoint()
        }
    }
}

/// Input ensemble used for exact values and the Monte Carlo game.
pub fn input_ensemble(kind: ScoreKind) -> Vec<Direction> {
    match kind {
        ScoreKind::MaxLikelihood => direction_tetrahedron().to_vec(),
        ScoreKind::Fidelity => Direction::six_axes().to_vec(),
    }
}

/// Directions attached to the outcome labels, `None` for abstention.
pub fn outcome_direction(o: &Outcome) -> Option<Direction> {
    match o {
        Outcome::Dir(i) => Some(i.direction()),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameValue {
    pub s_av: f64,
    pub q_bar: f64,
}

pub fn exact_game_value(p: &Povm, spec: &InputStateSpec, kind: ScoreKind) -> Result<GameValue> {
    let psi_z = build_input_state(spec).density();
    let ens = input_ensemble(kind);
    let (mut q, mut s) = (0.0, 0.0);
    for n in &ens {
        let u = two_qubit_rotation(n);
        let rho = &u * &psi_z * u.adjoint();
        for (e, l) in p.elements().iter().zip(p.labels()) {
            if let Some(nh) = outcome_direction(l) {
                let pr = (e * &rho).trace().re;
                q += pr;
                s += score_value(kind, n, &nh)? * pr;
            }
        }
    }
    let q = q / ens.len() as f64;
    if q < 1e-12 {
        return Err(Error::AlwaysAbstains);
    }
    Ok(GameValue {
        s_av: s / ens.len() as f64 / q,
        q_bar: q,
    })
}

/// Conjugates the direction elements by Π̄_abst^{−1/2}; the returned POVM is
/// completed by the projector outside the support.
pub fn rescale_povm(p: &Povm, abst: &AbstentionParams) -> Result<Povm> {
    let acc = abst.acceptance_operator();
    let s = psd_power(&acc, -0.5)?;
    let supp = psd_power(&acc, 0.0)?;
    let out_of = identity(4) - &supp;
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    for (e, l) in p.elements().iter().zip(p.labels()) {
        if l.is_abstain() {
            continue;
        }
        let leak = frobenius(&(e - &supp * e * &supp));
        if leak > 1e-9 {
            return Err(Error::OutsideSupport(leak));
        }
        elements.push(&s * e * &s);
        labels.push(l.clone());
    }
    elements.push(out_of);
    labels.push(Outcome::Abstain);
    Povm::new(elements, labels)
}
