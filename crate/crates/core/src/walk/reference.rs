//! Shipped reference programs and their tabulated parameters.

use crate::error::{Error, Result};
use crate::povm::ScoreKind;

use super::WalkProgram;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabulatedRow {
    pub kind: ScoreKind,
    pub c0: f64,
    pub lambda_bar_0: f64,
    /// H4, H6, H7, H9, H11, H13, H14 in degrees.
    pub angles: [f64; 7],
}

pub const VARIABLE_LABELS: [&str; 7] = ["H4", "H6", "H7", "H9", "H11", "H13", "H14"];

/// Plates with the same angle in every row.
pub const FIXED_PLATES: [(&str, f64); 11] = [
    ("H1", 0.0),
    ("H2", 45.0),
    ("H3", 67.5),
    ("H5", 45.0),
    ("H8", 0.0),
    ("H10", 45.0),
    ("H12", 135.0),
    ("Q1", 0.0),
    ("Q2", 0.0),
    ("Q3", 0.0),
    ("Q4", 0.0),
];

const ML: ScoreKind = ScoreKind::MaxLikelihood;
const FI: ScoreKind = ScoreKind::Fidelity;

static ROWS: [TabulatedRow; 10] = [
    TabulatedRow { kind: ML, c0: 0.5, lambda_bar_0: 1.0, angles: [37.5, -17.6322, 0.0, 0.0, 90.0, 67.5, 135.0] },
    TabulatedRow { kind: ML, c0: 0.6, lambda_bar_0: 0.5926, angles: [34.4812, -14.9358, 9.3055, -9.8396, 76.5853, 63.7945, 154.832] },
    TabulatedRow { kind: ML, c0: 0.7, lambda_bar_0: 0.3469, angles: [31.8908, -12.2404, 11.9161, -13.107, 72.5750, 60.2494, 161.9564] },
    TabulatedRow { kind: ML, c0: 0.8, lambda_bar_0: 0.1875, angles: [29.5181, -9.4659, 13.3941, -15.1616, 70.2017, 56.7066, 167.1705] },
    TabulatedRow { kind: ML, c0: 0.9, lambda_bar_0: 0.0782, angles: [27.0854, -6.3509, 14.3445, -16.5887, 68.6211, 52.8111, 81.8811] },
    TabulatedRow { kind: FI, c0: 0.7071, lambda_bar_0: 1.0, angles: [37.5, -17.6322, 0.0, 0.0, 90.0, 67.5, 135.0] },
    TabulatedRow { kind: FI, c0: 0.7571, lambda_bar_0: 0.7446, angles: [35.7409, -16.1181, 7.3188, -7.5701, 79.5303, 65.3951, 150.1793] },
    TabulatedRow { kind: FI, c0: 0.8071, lambda_bar_0: 0.5351, angles: [33.9481, -14.4101, 9.9664, -10.6312, 75.5878, 63.0929, 156.4935] },
    TabulatedRow { kind: FI, c0: 0.8571, lambda_bar_0: 0.3612, angles: [32.0684, -12.4365, 11.7771, -12.9225, 72.7939, 60.5034, 161.5285] },
    TabulatedRow { kind: FI, c0: 0.9071, lambda_bar_0: 0.2153, angles: [29.9985, -10.0501, 13.1451, -14.8025, 70.6083, 57.4457, 166.1771] },
];

static FILES: [&str; 10] = [
    include_str!("../../programs/likelihood_0.5.json"),
    include_str!("../../programs/likelihood_0.6.json"),
    include_str!("../../programs/likelihood_0.7.json"),
    include_str!("../../programs/likelihood_0.8.json"),
    include_str!("../../programs/likelihood_0.9.json"),
    include_str!("../../programs/fidelity_0.7071.json"),
    include_str!("../../programs/fidelity_0.7571.json"),
    include_str!("../../programs/fidelity_0.8071.json"),
    include_str!("../../programs/fidelity_0.8571.json"),
    include_str!("../../programs/fidelity_0.9071.json"),
];

pub fn tabulated_rows() -> &'static [TabulatedRow] {
    &ROWS
}

fn row_index(kind: ScoreKind, c0: f64) -> Option<usize> {
    ROWS.iter().position(|r| r.kind == kind && (r.c0 - c0).abs() < 5e-5)
}

pub fn tabulated_row(kind: ScoreKind, c0: f64) -> Result<TabulatedRow> {
    row_index(kind, c0)
        .map(|i| ROWS[i])
        .ok_or_else(|| Error::Untabulated { kind: kind.to_string(), c0 })
}

pub fn load_reference_program(kind: ScoreKind, c0: f64) -> Result<WalkProgram> {
    let i = row_index(kind, c0).ok_or_else(|| Error::Untabulated { kind: kind.to_string(), c0 })?;
    WalkProgram::from_json_str(FILES[i])
}
