//! Two-qubit space, Bell decomposition, directions and SU(2) rotations.
//!
//! Computational basis order is |00⟩, |01⟩, |10⟩, |11⟩. Bell order is
//! (ψ⁻, ψ⁺, φ⁺, φ⁻) so the singlet block H₀ comes first.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cr, kron, paulis, projector, ComplexMatrix, ComplexVector};

pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Direction {
    pub const PLUS_X: Direction = Direction { x: 1.0, y: 0.0, z: 0.0 };
    pub const MINUS_X: Direction = Direction { x: -1.0, y: 0.0, z: 0.0 };
    pub const PLUS_Y: Direction = Direction { x: 0.0, y: 1.0, z: 0.0 };
    pub const MINUS_Y: Direction = Direction { x: 0.0, y: -1.0, z: 0.0 };
    pub const PLUS_Z: Direction = Direction { x: 0.0, y: 0.0, z: 1.0 };
    pub const MINUS_Z: Direction = Direction { x: 0.0, y: 0.0, z: -1.0 };

    /// Checked constructor; the input must already be a unit vector.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let d = Direction { x, y, z };
        if (d.norm() - 1.0).abs() > NORM_TOL {
            return Err(Error::Invalid(format!("direction ({x}, {y}, {z}) is not unit")));
        }
        Ok(d)
    }

    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Invalid("zero direction".into()));
        }
        Ok(Direction { x: x / n, y: y / n, z: z / n })
    }

    /// Polar angle from +z and azimuth, radians.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Direction {
            x: theta.sin() * phi.cos(),
            y: theta.sin() * phi.sin(),
            z: theta.cos(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, o: &Direction) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn six_axes() -> [Direction; 6] {
        [
            Self::PLUS_X,
            Self::MINUS_X,
            Self::PLUS_Y,
            Self::MINUS_Y,
            Self::PLUS_Z,
            Self::MINUS_Z,
        ]
    }
}

/// Index 1..=4 into the tetrahedron table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TetraIndex(u8);

impl TetraIndex {
    pub fn new(i: u8) -> Result<Self> {
        if (1..=4).contains(&i) {
            Ok(TetraIndex(i))
        } else {
            Err(Error::Invalid(format!("tetrahedral index {i} outside 1..=4")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn direction(self) -> Direction {
        direction_tetrahedron()[(self.0 - 1) as usize]
    }

    pub fn all() -> [TetraIndex; 4] {
        [TetraIndex(1), TetraIndex(2), TetraIndex(3), TetraIndex(4)]
    }

    /// Matches a direction against the table within `tol`.
    pub fn of(n: &Direction, tol: f64) -> Option<TetraIndex> {
        direction_tetrahedron()
            .iter()
            .position(|d| (d.x - n.x).abs() < tol && (d.y - n.y).abs() < tol && (d.z - n.z).abs() < tol)
            .map(|i| TetraIndex(i as u8 + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bell {
    PsiMinus,
    PsiPlus,
    PhiPlus,
    PhiMinus,
}

impl Bell {
    pub const ORDER: [Bell; 4] = [Bell::PsiMinus, Bell::PsiPlus, Bell::PhiPlus, Bell::PhiMinus];

    pub fn vector(self) -> ComplexVector {
        let s = FRAC_1_SQRT_2;
        let v = match self {
            Bell::PsiMinus => [0.0, s, -s, 0.0],
            Bell::PsiPlus => [0.0, s, s, 0.0],
            Bell::PhiPlus => [s, 0.0, 0.0, s],
            Bell::PhiMinus => [s, 0.0, 0.0, -s],
        };
        ComplexVector::from_iterator(4, v.iter().map(|&x| cr(x)))
    }
}

/// Columns are the Bell vectors in `Bell::ORDER`.
pub fn bell_basis() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for (k, b) in Bell::ORDER.iter().enumerate() {
        m.set_column(k, &b.vector());
    }
    m
}

/// Projector on the singlet space H₀.
pub fn singlet_projector() -> ComplexMatrix {
    projector(&Bell::PsiMinus.vector())
}

/// Projector on the triplet space H₁.
pub fn triplet_projector() -> ComplexMatrix {
    ComplexMatrix::identity(4, 4) - singlet_projector()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    amplitudes: ComplexVector,
}

impl TwoQubitState {
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.len() != 4 {
            return Err(Error::Dimension(format!("two-qubit state of dim {}", amplitudes.len())));
        }
        if (amplitudes.norm() - 1.0).abs() > NORM_TOL {
            return Err(Error::Invalid(format!("state norm {} is not 1", amplitudes.norm())));
        }
        Ok(TwoQubitState { amplitudes })
    }

    /// Normalizes the input first.
    pub fn normalized(amplitudes: ComplexVector) -> Result<Self> {
        let n = amplitudes.norm();
        if n == 0.0 {
            return Err(Error::Invalid("zero state".into()));
        }
        Self::new(amplitudes.unscale(n))
    }

    pub fn basis(i: usize) -> Self {
        let mut v = ComplexVector::zeros(4);
        v[i] = cr(1.0);
        TwoQubitState { amplitudes: v }
    }

    pub fn bell(b: Bell) -> Self {
        TwoQubitState { amplitudes: b.vector() }
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// Coefficients on (ψ⁻, ψ⁺, φ⁺, φ⁻).
    pub fn bell_coefficients(&self) -> ComplexVector {
        bell_basis().adjoint() * &self.amplitudes
    }

    pub fn from_bell_coefficients(coeffs: &ComplexVector) -> Result<Self> {
        Self::new(bell_basis() * coeffs)
    }

    pub fn density(&self) -> ComplexMatrix {
        projector(&self.amplitudes)
    }

    /// Bloch vector ⟨σ⃗ ⊗ I⟩ of the first qubit.
    pub fn bloch_first(&self) -> [f64; 3] {
        let id = ComplexMatrix::identity(2, 2);
        let v = &self.amplitudes;
        let mut out = [0.0; 3];
        for (k, s) in paulis().iter().enumerate() {
            out[k] = (v.adjoint() * kron(s, &id) * v)[(0, 0)].re;
        }
        out
    }
}

/// c₀|ψ⁻⟩ + c₁|ψ^sym⟩ with |ψ^sym⟩ = α|φ⁺⟩ + β|ψ⁺⟩ + γ|φ⁻⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputStateSpec {
    pub c0: f64,
    /// (α, β, γ)
    pub psi_sym: [Complex64; 3],
}

impl InputStateSpec {
    pub fn new(c0: f64, psi_sym: [Complex64; 3]) -> Result<Self> {
        if !(0.0..=1.0).contains(&c0) {
            return Err(Error::Invalid(format!("c0 = {c0} outside [0, 1]")));
        }
        let n = psi_sym.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::Invalid(format!("psi_sym norm {n} is not 1")));
        }
        Ok(InputStateSpec { c0, psi_sym })
    }

    /// The family used throughout: |ψ^sym⟩ = |ψ⁺⟩.
    pub fn psi_plus(c0: f64) -> Result<Self> {
        Self::new(c0, [cr(0.0), cr(1.0), cr(0.0)])
    }

    pub fn c1(&self) -> f64 {
        (1.0 - self.c0 * self.c0).max(0.0).sqrt()
    }

    pub fn alpha(&self) -> Complex64 {
        self.psi_sym[0]
    }

    pub fn beta(&self) -> Complex64 {
        self.psi_sym[1]
    }

    pub fn gamma(&self) -> Complex64 {
        self.psi_sym[2]
    }
}

pub fn build_input_state(spec: &InputStateSpec) -> TwoQubitState {
    let c1 = spec.c1();
    let coeffs = ComplexVector::from_vec(vec![
        cr(spec.c0),
        spec.beta() * c1,
        spec.alpha() * c1,
        spec.gamma() * c1,
    ]);
    TwoQubitState::from_bell_coefficients(&coeffs).expect("validated spec gives a unit state")
}

/// u_n = exp(−iθ/2 m⃗·σ⃗), m⃗ = ẑ×n normalized, θ the angle between ẑ and n.
/// For n = −z the axis is ŷ.
pub fn su2_rotation(n: &Direction) -> ComplexMatrix {
    let theta = n.z.clamp(-1.0, 1.0).acos();
    let rho = (n.x * n.x + n.y * n.y).sqrt();
    let (mx, my) = if rho < 1e-15 {
        if n.z > 0.0 {
            return ComplexMatrix::identity(2, 2);
        }
        (0.0, 1.0)
    } else {
        (-n.y / rho, n.x / rho)
    };
    let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let [sx, sy, _] = paulis();
    let ms = sx.scale(mx) + sy.scale(my);
    ComplexMatrix::identity(2, 2).scale(ch) - ms * c(0.0, sh)
}

/// U_n = u_n ⊗ u_n.
pub fn two_qubit_rotation(n: &Direction) -> ComplexMatrix {
    let u = su2_rotation(n);
    kron(&u, &u)
}

pub fn rotate_two_qubit(n: &Direction, s: &TwoQubitState) -> TwoQubitState {
    TwoQubitState {
        amplitudes: two_qubit_rotation(n) * &s.amplitudes,
    }
}

pub fn rotated_bell(n: &Direction, which: Bell) -> TwoQubitState {
    rotate_two_qubit(n, &TwoQubitState::bell(which))
}

/// Bloch vectors of the four tetrahedron kets |n̂₁⟩ = |0⟩ and
/// |n̂ₖ⟩ ∝ |0⟩ + e^{iφₖ}√2|1⟩ (up to phase), φₖ = 0°, 120°, 240°.
pub fn direction_tetrahedron() -> [Direction; 4] {
    let r = 2.0 * 2f64.sqrt() / 3.0;
    let mk = |phi: f64| Direction {
        x: r * phi.cos(),
        y: r * phi.sin(),
        z: -1.0 / 3.0,
    };
    [
        Direction::PLUS_Z,
        mk(0.0),
        mk(2.0 * PI / 3.0),
        mk(4.0 * PI / 3.0),
    ]
}

/// Qubit kets with the tetrahedron Bloch vectors.
pub fn tetrahedron_kets() -> [ComplexVector; 4] {
    let s = 1.0 / 3f64.sqrt();
    let r2 = 2f64.sqrt();
    let i = c(0.0, 1.0);
    let ket = |a: Complex64, b: Complex64| ComplexVector::from_vec(vec![a, b]);
    [
        ket(cr(1.0), cr(0.0)),
        ket(i * s, i * s * r2),
        ket(i * s, i * s * r2 * Complex64::from_polar(1.0, 2.0 * PI / 3.0)),
        ket(-i * s, i * s * r2 * Complex64::from_polar(1.0, PI / 3.0)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, is_unitary};

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        frobenius(&(a - b)) < tol
    }

    fn qubit_bloch(k: &ComplexVector) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (j, s) in paulis().iter().enumerate() {
            out[j] = (k.adjoint() * s * k)[(0, 0)].re;
        }
        out
    }

    #[test]
    fn su2_fixed_cases() {
        assert!(close(&su2_rotation(&Direction::PLUS_Z), &ComplexMatrix::identity(2, 2), 1e-15));
        let m = su2_rotation(&Direction::MINUS_Z);
        let e = ComplexMatrix::from_row_slice(2, 2, &[cr(0.0), cr(-1.0), cr(1.0), cr(0.0)]);
        assert!(close(&m, &e, 1e-15));
        let [sx, _, sz] = paulis();
        let u = su2_rotation(&Direction::PLUS_X);
        assert!(close(&(&u * &sz * u.adjoint()), &sx, 1e-10));
    }

    #[test]
    fn build_input_examples() {
        let s = build_input_state(&InputStateSpec::psi_plus(1.0).unwrap());
        assert!((s.amplitudes() - Bell::PsiMinus.vector()).norm() < 1e-15);
        let s = build_input_state(&InputStateSpec::psi_plus(FRAC_1_SQRT_2).unwrap());
        assert!((s.amplitudes() - TwoQubitState::basis(1).amplitudes()).norm() < 1e-12);
        let b = build_input_state(&InputStateSpec::psi_plus(0.5).unwrap()).bell_coefficients();
        assert!((b[0].re - 0.5).abs() < 1e-12 && (b[1].re - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn tetrahedron_matches_kets() {
        let dirs = direction_tetrahedron();
        for (d, k) in dirs.iter().zip(tetrahedron_kets().iter()) {
            let b = qubit_bloch(k);
            assert!((b[0] - d.x).abs() < 1e-12 && (b[1] - d.y).abs() < 1e-12 && (b[2] - d.z).abs() < 1e-12);
        }
        assert!((dirs[1].x - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-15);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((dirs[i].dot(&dirs[j]) + 1.0 / 3.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rotate_basis_state_bloch() {
        let n = direction_tetrahedron()[1];
        let s = rotate_two_qubit(&n, &TwoQubitState::basis(1));
        let b = s.bloch_first();
        assert!((b[0] - n.x).abs() < 1e-9 && (b[1] - n.y).abs() < 1e-9 && (b[2] - n.z).abs() < 1e-9);
    }

    #[test]
    fn rotated_bell_overlaps() {
        let dirs = direction_tetrahedron();
        for i in 0..4 {
            let a = rotated_bell(&dirs[i], Bell::PsiMinus);
            assert!((a.amplitudes() - Bell::PsiMinus.vector()).norm() < 1e-10);
            for j in 0..4 {
                if i != j {
                    let p = rotated_bell(&dirs[i], Bell::PsiPlus);
                    let q = rotated_bell(&dirs[j], Bell::PsiPlus);
                    let o = p.amplitudes().dotc(q.amplitudes());
                    assert!((o - cr(-1.0 / 3.0)).norm() < 1e-10);
                }
            }
        }
        let p = rotated_bell(&Direction::PLUS_Z, Bell::PsiPlus);
        assert!((p.amplitudes() - Bell::PsiPlus.vector()).norm() < 1e-15);
    }

    #[test]
    fn bell_basis_unitary() {
        assert!(is_unitary(&bell_basis(), 1e-12));
        let s = TwoQubitState::basis(2);
        let back = TwoQubitState::from_bell_coefficients(&s.bell_coefficients()).unwrap();
        assert!((back.amplitudes() - s.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn tetra_index_bounds() {
        assert!(TetraIndex::new(0).is_err());
        assert!(TetraIndex::new(5).is_err());
        assert_eq!(TetraIndex::of(&direction_tetrahedron()[2], 1e-9).unwrap().get(), 3);
        assert!(TetraIndex::of(&Direction::PLUS_X, 1e-9).is_none());
    }
}
