//! Discrete-time quantum walk with wave-plate coins.
//!
//! The walker lives on an integer lattice with a two-level coin (H = 0, V = 1).
//! One step applies the site coins and then the conditional translation
//! |x,H⟩ → |x+1,H⟩, |x,V⟩ → |x−1,V⟩. The two-qubit input is embedded as
//! |1,H⟩ = |00⟩, |1,V⟩ = |01⟩, |−1,H⟩ = |10⟩, |−1,V⟩ = |11⟩.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cr, from_pairs, frobenius, is_unitary, to_pairs, ComplexMatrix, ComplexVector};
use crate::povm::{Outcome, Povm, ScoreKind};

pub const UNITARY_TOL: f64 = 1e-10;
pub const LEAK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Coin {
    H,
    V,
}

impl Coin {
    pub fn index(self) -> usize {
        match self {
            Coin::H => 0,
            Coin::V => 1,
        }
    }
}

impl fmt::Display for Coin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coin::H => "H",
            Coin::V => "V",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlateKind {
    #[serde(rename = "HWP")]
    Hwp,
    #[serde(rename = "QWP")]
    Qwp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePlate {
    pub kind: PlateKind,
    pub angle_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl WavePlate {
    pub fn hwp(angle_deg: f64) -> Self {
        WavePlate { kind: PlateKind::Hwp, angle_deg, label: None }
    }

    pub fn qwp(angle_deg: f64) -> Self {
        WavePlate { kind: PlateKind::Qwp, angle_deg, label: None }
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }
}

/// HWP(θ) = [[cos2θ, sin2θ], [sin2θ, −cos2θ]];
/// QWP(θ) = [[cos²θ + i sin²θ, (1−i) sinθ cosθ], [(1−i) sinθ cosθ, sin²θ + i cos²θ]].
pub fn jones_matrix(p: &WavePlate) -> ComplexMatrix {
    let t = p.angle_deg.to_radians();
    match p.kind {
        PlateKind::Hwp => {
            let (s, co) = (2.0 * t).sin_cos();
            ComplexMatrix::from_row_slice(2, 2, &[cr(co), cr(s), cr(s), cr(-co)])
        }
        PlateKind::Qwp => {
            let (s, co) = t.sin_cos();
            let off = c(1.0, -1.0) * (s * co);
            ComplexMatrix::from_row_slice(
                2,
                2,
                &[c(co * co, s * s), off, off, c(s * s, co * co)],
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoinOp {
    /// Applied in listed order.
    Plates(Vec<WavePlate>),
    Unitary(ComplexMatrix),
}

impl CoinOp {
    pub fn matrix(&self) -> ComplexMatrix {
        match self {
            CoinOp::Plates(ps) => ps
                .iter()
                .fold(ComplexMatrix::identity(2, 2), |m, p| jones_matrix(p) * m),
            CoinOp::Unitary(u) => u.clone(),
        }
    }

    pub fn plates(&self) -> &[WavePlate] {
        match self {
            CoinOp::Plates(ps) => ps,
            CoinOp::Unitary(_) => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WalkStep {
    pub coins: BTreeMap<i32, CoinOp>,
}

impl WalkStep {
    pub fn with(mut self, x: i32, op: CoinOp) -> Self {
        self.coins.insert(x, op);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkProgram {
    pub name: String,
    pub steps: Vec<WalkStep>,
    /// Walker positions carrying the walker qubit values 0 and 1.
    pub input_positions: [i32; 2],
    pub readout_map: BTreeMap<i32, Outcome>,
    pub meta: ProgramMeta,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProgramMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ScoreKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_bar_0: Option<f64>,
    /// Tabulated plate angles keyed by label, for reference.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub plate_table: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

// ---- file format ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramFile {
    #[serde(default)]
    name: String,
    #[serde(default)]
    meta: ProgramMeta,
    #[serde(default = "default_inputs")]
    input_positions: [i32; 2],
    readout_map: BTreeMap<String, Outcome>,
    steps: Vec<Vec<CoinEntry>>,
}

fn default_inputs() -> [i32; 2] {
    [1, -1]
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoinEntry {
    position: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plates: Option<Vec<WavePlate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unitary: Option<Vec<Vec<[f64; 2]>>>,
}

impl WalkProgram {
    pub fn new(steps: Vec<WalkStep>, readout_map: BTreeMap<i32, Outcome>) -> Result<Self> {
        let p = WalkProgram {
            name: String::new(),
            steps,
            input_positions: [1, -1],
            readout_map,
            meta: ProgramMeta::default(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Lattice half-width allocated for this program.
    pub fn half_width(&self) -> i32 {
        let inputs = self.input_positions.iter().map(|x| x.abs()).max().unwrap_or(1);
        inputs + self.steps.len() as i32 + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_positions[0] == self.input_positions[1] {
            return Err(Error::Invalid("input positions must differ".into()));
        }
        let w = self.half_width();
        for (t, s) in self.steps.iter().enumerate() {
            for (&x, op) in &s.coins {
                if x.abs() > w {
                    return Err(Error::Invalid(format!("step {}: coin position {x} outside lattice ±{w}", t + 1)));
                }
                let m = op.matrix();
                if m.nrows() != 2 || m.ncols() != 2 || !is_unitary(&m, UNITARY_TOL) {
                    return Err(Error::Invalid(format!("step {}: coin at position {x} is not a 2x2 unitary", t + 1)));
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: ProgramFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let mut readout_map = BTreeMap::new();
        for (k, v) in f.readout_map {
            let x: i32 = k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("readout_map: key '{k}' is not an integer position")))?;
            readout_map.insert(x, v);
        }
        let mut steps = Vec::new();
        for (t, entries) in f.steps.into_iter().enumerate() {
            let mut step = WalkStep::default();
            for (j, e) in entries.into_iter().enumerate() {
                let ctx = format!("steps[{t}][{j}] (position {})", e.position);
                let op = match (e.plates, e.unitary) {
                    (Some(p), None) => CoinOp::Plates(p),
                    (None, Some(u)) => CoinOp::Unitary(
                        from_pairs(&u).map_err(|err| Error::Parse(format!("{ctx}: unitary: {err}")))?,
                    ),
                    _ => return Err(Error::Parse(format!("{ctx}: exactly one of 'plates' or 'unitary' required"))),
                };
                if step.coins.insert(e.position, op).is_some() {
                    return Err(Error::Parse(format!("{ctx}: duplicate position")));
                }
            }
            steps.push(step);
        }
        let p = WalkProgram {
            name: f.name,
            steps,
            input_positions: f.input_positions,
            readout_map,
            meta: f.meta,
        };
        p.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(p)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json_str(&s).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_json_string(&self) -> String {
        let f = ProgramFile {
            name: self.name.clone(),
            meta: self.meta.clone(),
            input_positions: self.input_positions,
            readout_map: self.readout_map.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            steps: self
                .steps
                .iter()
                .map(|s| {
                    s.coins
                        .iter()
                        .map(|(&x, op)| match op {
                            CoinOp::Plates(p) => CoinEntry { position: x, plates: Some(p.clone()), unitary: None },
                            CoinOp::Unitary(u) => CoinEntry { position: x, plates: None, unitary: Some(to_pairs(u)) },
                        })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&f).expect("plain data serializes")
    }

    /// Every wave plate with its (step, position), steps counted from 1.
    pub fn plates(&self) -> Vec<(usize, i32, &WavePlate)> {
        let mut out = Vec::new();
        for (t, s) in self.steps.iter().enumerate() {
            for (&x, op) in &s.coins {
                for p in op.plates() {
                    out.push((t + 1, x, p));
                }
            }
        }
        out
    }

    pub fn plate(&self, label: &str) -> Option<&WavePlate> {
        self.plates().into_iter().map(|(_, _, p)| p).find(|p| p.label.as_deref() == Some(label))
    }
}

// ---- lattice fields ----

/// Amplitudes over (position, coin), one column per tracked input.
#[derive(Debug, Clone, PartialEq)]
struct Field<const K: usize> {
    lo: i32,
    data: Vec<[[Complex64; K]; 2]>,
}

impl<const K: usize> Field<K> {
    fn zeros(half_width: i32) -> Self {
        Field {
            lo: -half_width,
            data: vec![[[cr(0.0); K]; 2]; (2 * half_width + 1) as usize],
        }
    }

    fn hi(&self) -> i32 {
        self.lo + self.data.len() as i32 - 1
    }

    fn idx(&self, x: i32) -> Option<usize> {
        if x < self.lo || x > self.hi() {
            None
        } else {
            Some((x - self.lo) as usize)
        }
    }

    fn apply_coins(&mut self, step: &WalkStep) -> Result<()> {
        for (&x, op) in &step.coins {
            let i = self.idx(x).ok_or(Error::LatticeOverflow(x))?;
            let m = op.matrix();
            let [h, v] = self.data[i];
            for k in 0..K {
                self.data[i][0][k] = m[(0, 0)] * h[k] + m[(0, 1)] * v[k];
                self.data[i][1][k] = m[(1, 0)] * h[k] + m[(1, 1)] * v[k];
            }
        }
        Ok(())
    }

    fn translate(&self) -> Result<Self> {
        let mut out = Field { lo: self.lo, data: vec![[[cr(0.0); K]; 2]; self.data.len()] };
        let n = self.data.len();
        let nz = |a: &[Complex64; K]| a.iter().any(|z| z.norm_sqr() > 0.0);
        if nz(&self.data[n - 1][0]) {
            return Err(Error::LatticeOverflow(self.hi() + 1));
        }
        if nz(&self.data[0][1]) {
            return Err(Error::LatticeOverflow(self.lo - 1));
        }
        for i in 0..n {
            if i + 1 < n {
                out.data[i + 1][0] = self.data[i][0];
            }
            if i > 0 {
                out.data[i - 1][1] = self.data[i][1];
            }
        }
        Ok(out)
    }

    fn step(&self, step: &WalkStep) -> Result<Self> {
        let mut f = self.clone();
        f.apply_coins(step)?;
        f.translate()
    }
}

/// A single walk state.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    field: Field<1>,
}

impl WalkState {
    pub fn zeros(half_width: i32) -> Self {
        WalkState { field: Field::zeros(half_width) }
    }

    /// a|p₀,H⟩ + b|p₀,V⟩ + c|p₁,H⟩ + d|p₁,V⟩ on a lattice sized for `prog`.
    pub fn embed(prog: &WalkProgram, amps: [Complex64; 4]) -> Self {
        let mut s = Self::zeros(prog.half_width());
        let [p0, p1] = prog.input_positions;
        s.set(p0, Coin::H, amps[0]);
        s.set(p0, Coin::V, amps[1]);
        s.set(p1, Coin::H, amps[2]);
        s.set(p1, Coin::V, amps[3]);
        s
    }

    pub fn get(&self, x: i32, coin: Coin) -> Complex64 {
        self.field.idx(x).map_or(cr(0.0), |i| self.field.data[i][coin.index()][0])
    }

    pub fn set(&mut self, x: i32, coin: Coin, a: Complex64) {
        let i = self.field.idx(x).expect("position inside lattice");
        self.field.data[i][coin.index()][0] = a;
    }

    pub fn norm(&self) -> f64 {
        self.field.data.iter().flat_map(|s| s.iter()).map(|a| a[0].norm_sqr()).sum::<f64>().sqrt()
    }

    /// Nonzero amplitudes in position order.
    pub fn amplitudes(&self) -> Vec<(i32, Coin, Complex64)> {
        let mut out = Vec::new();
        for (i, s) in self.field.data.iter().enumerate() {
            for coin in [Coin::H, Coin::V] {
                let a = s[coin.index()][0];
                if a.norm_sqr() > 1e-24 {
                    out.push((self.field.lo + i as i32, coin, a));
                }
            }
        }
        out
    }

    /// Probability of finding the walker at each occupied position.
    pub fn position_distribution(&self) -> BTreeMap<i32, f64> {
        let mut out = BTreeMap::new();
        for (x, _, a) in self.amplitudes() {
            *out.entry(x).or_insert(0.0) += a.norm_sqr();
        }
        out
    }

    pub fn translate(&self) -> Result<Self> {
        Ok(WalkState { field: self.field.translate()? })
    }
}

/// Conditional translation T.
pub fn translate(s: &WalkState) -> Result<WalkState> {
    s.translate()
}

pub fn run_program(prog: &WalkProgram, input: &WalkState) -> Result<WalkState> {
    Ok(run_program_steps(prog, input)?.pop().expect("at least the input"))
}

/// States after t = 0, 1, …, n steps.
pub fn run_program_steps(prog: &WalkProgram, input: &WalkState) -> Result<Vec<WalkState>> {
    let mut f = input.field.clone();
    let mut out = vec![WalkState { field: f.clone() }];
    for s in &prog.steps {
        f = f.step(s)?;
        out.push(WalkState { field: f.clone() });
    }
    Ok(out)
}

/// Mode amplitudes as linear functionals of the input coefficients (a, b, c, d).
pub type ModeTable = BTreeMap<(i32, Coin), [Complex64; 4]>;

fn basis_field(prog: &WalkProgram) -> Field<4> {
    let mut f = Field::<4>::zeros(prog.half_width());
    let [p0, p1] = prog.input_positions;
    let i0 = f.idx(p0).expect("input inside lattice");
    let i1 = f.idx(p1).expect("input inside lattice");
    f.data[i0][0][0] = cr(1.0);
    f.data[i0][1][1] = cr(1.0);
    f.data[i1][0][2] = cr(1.0);
    f.data[i1][1][3] = cr(1.0);
    f
}

fn table_of(f: &Field<4>) -> ModeTable {
    let mut t = ModeTable::new();
    for (i, s) in f.data.iter().enumerate() {
        for coin in [Coin::H, Coin::V] {
            let v = s[coin.index()];
            if v.iter().any(|z| z.norm_sqr() > 1e-24) {
                t.insert((f.lo + i as i32, coin), v);
            }
        }
    }
    t
}

/// Symbolic evolution for t = 0..=n.
pub fn trajectory(prog: &WalkProgram) -> Result<Vec<ModeTable>> {
    let mut f = basis_field(prog);
    let mut out = vec![table_of(&f)];
    for s in &prog.steps {
        f = f.step(s)?;
        out.push(table_of(&f));
    }
    Ok(out)
}

/// Πℓ = M†PℓM restricted to the embedded input space.
pub fn extract_povm(prog: &WalkProgram) -> Result<Povm> {
    let finals = trajectory(prog)?.pop().expect("non-empty trajectory");
    let mut labels: Vec<Outcome> = Vec::new();
    for l in prog.readout_map.values().rev() {
        if !labels.contains(l) {
            labels.push(l.clone());
        }
    }
    let mut elements = vec![ComplexMatrix::zeros(4, 4); labels.len()];
    let mut leaks = Vec::new();
    for ((x, _), row) in &finals {
        // amplitude = Σ row_k ψ_k, so Π = conj(row) conj(row)†
        let v = ComplexVector::from_iterator(4, row.iter().map(|z| z.conj()));
        match prog.readout_map.get(x) {
            Some(l) => {
                let k = labels.iter().position(|m| m == l).expect("label listed");
                elements[k] += &v * v.adjoint();
            }
            None => {
                if v.norm_squared() > 1e-12 && !leaks.contains(x) {
                    leaks.push(*x);
                }
            }
        }
    }
    let sum = elements.iter().fold(ComplexMatrix::zeros(4, 4), |a, e| a + e);
    if frobenius(&(sum - ComplexMatrix::identity(4, 4))) > LEAK_TOL {
        return Err(Error::Leak(leaks));
    }
    Povm::with_tolerance(elements, labels, LEAK_TOL)
}

/// Full step-product unitary on a periodic lattice of the given half-width.
pub fn full_unitary(prog: &WalkProgram, half_width: i32) -> ComplexMatrix {
    let l = (2 * half_width + 1) as usize;
    let dim = 2 * l;
    let idx = |x: i32, coin: usize| (((x + half_width).rem_euclid(l as i32)) as usize) * 2 + coin;
    let mut total = ComplexMatrix::identity(dim, dim);
    for s in &prog.steps {
        let mut cm = ComplexMatrix::identity(dim, dim);
        for (&x, op) in &s.coins {
            let m = op.matrix();
            for a in 0..2 {
                for b in 0..2 {
                    cm[(idx(x, a), idx(x, b))] = m[(a, b)];
                }
            }
        }
        let mut t = ComplexMatrix::zeros(dim, dim);
        for x in -half_width..=half_width {
            t[(idx(x + 1, 0), idx(x, 0))] = cr(1.0);
            t[(idx(x - 1, 1), idx(x, 1))] = cr(1.0);
        }
        total = t * cm * total;
    }
    total
}

/// The two-step SWAP sub-circuit: an empty coin step, then HWPs at 45°, 0°, 45°
/// on positions 2, 0, −2. Translations follow both steps. On the embedded
/// qubits this is (I⊗NOT)·SWAP with a −1 on the |01⟩ column.
pub fn swap_structure() -> [WalkStep; 2] {
    [
        WalkStep::default(),
        WalkStep::default()
            .with(2, CoinOp::Plates(vec![WavePlate::hwp(45.0)]))
            .with(0, CoinOp::Plates(vec![WavePlate::hwp(0.0)]))
            .with(-2, CoinOp::Plates(vec![WavePlate::hwp(45.0)])),
    ]
}

/// Runs the SWAP sub-circuit on a state supported on the four modes at ±1.
pub fn apply_swap_structure(s: &WalkState) -> Result<WalkState> {
    for (x, coin, a) in s.amplitudes() {
        if x != 1 && x != -1 {
            return Err(Error::OutsideModes(format!("|{x},{coin}⟩ carries {a}")));
        }
    }
    let [a, b] = swap_structure();
    let f = s.field.step(&a)?.step(&b)?;
    Ok(WalkState { field: f })
}

/// Effective 4×4 matrix of a program whose output stays on the input modes.
pub fn embedded_unitary(prog: &WalkProgram) -> Result<ComplexMatrix> {
    let fin = trajectory(prog)?.pop().expect("non-empty");
    let [p0, p1] = prog.input_positions;
    let modes = [(p0, Coin::H), (p0, Coin::V), (p1, Coin::H), (p1, Coin::V)];
    let mut u = ComplexMatrix::zeros(4, 4);
    for (key, row) in &fin {
        let r = modes
            .iter()
            .position(|m| m == key)
            .ok_or_else(|| Error::OutsideModes(format!("|{},{}⟩", key.0, key.1)))?;
        for k in 0..4 {
            u[(r, k)] = row[k];
        }
    }
    Ok(u)
}

pub mod golden;
pub mod reference;

pub use reference::{load_reference_program, tabulated_row, tabulated_rows, TabulatedRow};
