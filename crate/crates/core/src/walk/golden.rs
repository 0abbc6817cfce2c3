//! Symbolic checkpoints of the c0 = 0.6 likelihood walk.

use num_complex::Complex64;

use crate::linalg::{c, cr};
use crate::povm::ScoreKind;

use super::{Coin, ModeTable};

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub t: usize,
    pub modes: Vec<((i32, Coin), [Complex64; 4])>,
}

fn r(a: f64, b: f64, cc: f64, d: f64) -> [Complex64; 4] {
    [cr(a), cr(b), cr(cc), cr(d)]
}

/// After H1, H2 and the SWAP structure. Identical for every tabulated row.
pub fn t2() -> Checkpoint {
    Checkpoint {
        t: 2,
        modes: vec![
            ((1, Coin::H), r(0.0, 0.0, 1.0, 0.0)),
            ((1, Coin::V), r(0.0, 1.0, 0.0, 0.0)),
            ((-1, Coin::H), r(0.0, 0.0, 0.0, -1.0)),
            ((-1, Coin::V), r(-1.0, 0.0, 0.0, 0.0)),
        ],
    }
}

pub fn t3() -> Checkpoint {
    Checkpoint {
        t: 3,
        modes: vec![
            ((2, Coin::H), r(0.0, 0.933, 0.359, 0.0)),
            ((0, Coin::H), r(-0.707, 0.0, 0.0, 0.707)),
            ((0, Coin::V), r(0.0, -0.359, 0.933, 0.0)),
            ((-2, Coin::V), r(-0.707, 0.0, 0.0, -0.707)),
        ],
    }
}

pub fn t9() -> Checkpoint {
    let i = c(0.0, 1.0);
    Checkpoint {
        t: 9,
        modes: vec![
            ((8, Coin::H), r(0.0, 0.885, 0.34, 0.0)),
            ((6, Coin::H), r(-0.577, 0.068, -0.476, 0.577)),
            ((2, Coin::H), [c(0.5, 0.289), i * 0.068, i * -0.476, c(0.5, -0.289)]),
            ((0, Coin::H), [c(-0.289, -0.5), cr(-0.068), cr(0.476), c(0.289, -0.5)]),
            ((-2, Coin::V), [cr(0.0), i * -0.451, i * 0.451, cr(0.0)]),
        ],
    }
}

/// Ideal readout amplitudes ⟨Φℓ|Ψ₀⟩ as functionals of (a, b, c, d), in the
/// order x = 8, 6, 2, 0 and the abstention weight 0.204 on |b − c|².
pub fn ideal_readout() -> ([[Complex64; 4]; 4], f64) {
    (
        [
            r(0.0, 0.885, 0.34, 0.0),
            r(-0.577, 0.068, -0.476, 0.577),
            [c(0.289, -0.5), cr(0.068), cr(-0.476), c(-0.289, -0.5)],
            [c(0.289, 0.5), cr(0.068), cr(-0.476), c(-0.289, 0.5)],
        ],
        0.204,
    )
}

/// Checkpoints that apply to a given reference program.
pub fn checkpoints_for(kind: ScoreKind, c0: f64) -> Vec<Checkpoint> {
    if kind == ScoreKind::MaxLikelihood && (c0 - 0.6).abs() < 5e-5 {
        vec![t2(), t3(), t9()]
    } else {
        vec![t2()]
    }
}

/// Largest coefficient error between a trajectory table and a checkpoint.
/// Modes missing on either side count as zero.
pub fn checkpoint_error(table: &ModeTable, cp: &Checkpoint) -> f64 {
    let zero = [cr(0.0); 4];
    let mut err: f64 = 0.0;
    for (key, want) in &cp.modes {
        let got = table.get(key).unwrap_or(&zero);
        for k in 0..4 {
            err = err.max((got[k] - want[k]).norm());
        }
    }
    for (key, got) in table {
        if !cp.modes.iter().any(|(k, _)| k == key) {
            err = err.max(got.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    err
}
