//! Regression of the published worked examples: the Werner and W-state
//! coefficient tables, the closed-form witness values and their zero
//! crossings.
//!
//! Two places need care when comparing against the printed tables.
//!
//! * The two-qubit tables are printed with outcome labels 2 and 3 exchanged
//!   relative to the correction unitaries `m₂ = σz`, `m₃ = σx` used
//!   everywhere else. The groups themselves agree; only the labels move, so
//!   each printed group is checked under the exchanged labels.
//! * Two of the four tripartite slices (x₃ = 1 and x₃ = 3) cannot be produced
//!   by any decomposition of the witness, because the decomposition in a
//!   complete basis is unique and the printed slices do not reconstruct it.
//!   Those slices are checked against the re-derived values, with the printed
//!   numbers kept alongside in the report.

use serde::Serialize;

use crate::error::Result;
use crate::protocol::{ideal_table, mdiew_value};
use crate::qcore::BellOutcome;
use crate::states::{w_state_noise, werner};
use crate::witness::{outcome_coefficients, AncillaBasis, OutcomeCoefficientTable, Witness};

pub const REPRODUCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: Vec<f64>,
    pub computed: Vec<f64>,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub printed: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, expected: Vec<f64>, computed: Vec<f64>) -> Self {
        let max_abs_diff = if expected.len() == computed.len() {
            expected
                .iter()
                .zip(&computed)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        Self {
            name: name.into(),
            expected,
            computed,
            max_abs_diff,
            tolerance: REPRODUCE_TOL,
            passed: max_abs_diff <= REPRODUCE_TOL,
            printed: None,
            note: None,
        }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ReproduceReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReproduceOptions {
    /// Added to the Werner coefficient β^{1,1}_{1,1} before any check runs.
    pub perturbation: f64,
}

const T: f64 = 2.0 / 3.0;

pub type Slice = [[f64; 4]; 4];

/// Printed two-qubit tables (rows s, columns t) with their printed outcome
/// groups.
pub const WERNER_TABLES: [(Slice, [(usize, usize); 4]); 4] = [
    (
        [
            [4., -1., -1., -1.],
            [-1., 1., 0., 0.],
            [-1., 0., 1., 0.],
            [-1., 0., 0., 1.],
        ],
        [(1, 1), (2, 2), (3, 3), (4, 4)],
    ),
    (
        [
            [0., -1., 1., 1.],
            [-1., 1., 0., 0.],
            [1., 0., -1., 0.],
            [1., 0., 0., -1.],
        ],
        [(1, 2), (2, 1), (3, 4), (4, 3)],
    ),
    (
        [
            [0., 1., 1., -1.],
            [1., -1., 0., 0.],
            [1., 0., -1., 0.],
            [-1., 0., 0., 1.],
        ],
        [(1, 3), (2, 4), (3, 1), (4, 2)],
    ),
    (
        [
            [0., 1., -1., 1.],
            [1., -1., 0., 0.],
            [-1., 0., 1., 0.],
            [1., 0., 0., -1.],
        ],
        [(1, 4), (3, 2), (2, 3), (4, 1)],
    ),
];

/// Printed tripartite slices at outcome (1,1,1), α = 2/3, indexed by x₃.
pub const W_STATE_PRINTED: [[[f64; 4]; 4]; 4] = [
    [
        [4. / 9., 0., 0., 0.],
        [0., 0., 0., T],
        [0., 0., 0., -T],
        [0., T, -T, -T],
    ],
    [
        [0., 0., 0., T],
        [0., 0., 0., -T],
        [0., 0., 0., 0.],
        [T, -T, 0., 0.],
    ],
    [
        [0., 0., 0., -T],
        [0., 0., 0., 0.],
        [0., 0., 0., T],
        [-T, 0., T, 0.],
    ],
    [
        [-4. / 3., T, T, -T],
        [T, -T, 0., 0.],
        [T, 0., -T, 0.],
        [-T, 0., 0., 1.],
    ],
];

/// Re-derived slices for x₃ = 1 and x₃ = 3.
pub const W_STATE_CORRECTED: [(usize, [[f64; 4]; 4]); 2] = [
    (
        0,
        [
            [16. / 3., 0., 0., -4. / 3.],
            [0., 0., 0., T],
            [0., 0., 0., T],
            [-4. / 3., T, T, -T],
        ],
    ),
    (
        2,
        [
            [0., 0., 0., T],
            [0., 0., 0., 0.],
            [0., 0., 0., -T],
            [T, 0., -T, 0.],
        ],
    ),
];

/// The printed labels exchange 2 and 3.
pub fn printed_label_to_outcome(label: usize) -> BellOutcome {
    let mapped = match label {
        2 => 3,
        3 => 2,
        l => l,
    };
    BellOutcome::from_label(mapped).expect("printed labels are 1..=4")
}

fn flatten(m: &[[f64; 4]; 4]) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

fn werner_checks(coeffs: &OutcomeCoefficientTable) -> Vec<Check> {
    let mut checks = Vec::new();
    for (table, group) in &WERNER_TABLES {
        for &(i, j) in group {
            let outcome = [printed_label_to_outcome(i), printed_label_to_outcome(j)];
            let computed = flatten(&coeffs.get(&outcome).slice(&[]));
            let mut check = Check::new(format!("werner beta^({i},{j})"), flatten(table), computed);
            if i == 2 || i == 3 || j == 2 || j == 3 {
                check = check.with_note(&format!(
                    "printed labels 2 and 3 exchanged: computed at outcome ({},{})",
                    outcome[0].label(),
                    outcome[1].label()
                ));
            }
            checks.push(check);
        }
    }
    checks
}

fn w_state_checks(coeffs: &OutcomeCoefficientTable) -> Vec<Check> {
    let one = [BellOutcome::PhiPlus; 3];
    let beta = coeffs.get(&one);
    let mut checks = vec![Check::new(
        "w-state outcome count",
        vec![64.0],
        vec![coeffs.len() as f64],
    )];
    for (x3, printed) in W_STATE_PRINTED.iter().enumerate() {
        let computed = flatten(&beta.slice(&[x3]));
        let name = format!("w-state beta^(1,1,1)_(x1,x2,{})", x3 + 1);
        let check = match W_STATE_CORRECTED.iter().find(|(k, _)| *k == x3) {
            Some((_, corrected)) => {
                let mut c = Check::new(name, flatten(corrected), computed).with_note(
                    "printed slice does not reconstruct the witness; compared with the re-derived slice",
                );
                c.printed = Some(flatten(printed));
                c
            }
            None => Check::new(name, flatten(printed), computed),
        };
        checks.push(check);
    }
    checks
}

pub fn run_reproduce(options: ReproduceOptions) -> Result<ReproduceReport> {
    let basis2 = AncillaBasis::default_basis(2);
    let basis3 = AncillaBasis::default_basis(3);
    let mut werner_coeffs = outcome_coefficients(&Witness::werner(), &basis2)?;
    werner_coeffs
        .get_mut(&[BellOutcome::PhiPlus; 2])
        .values_mut()[0] += options.perturbation;

    let mut checks = werner_checks(&werner_coeffs);

    for p in [0.0, 1.0 / 3.0, 0.5, 0.9, 1.0] {
        let value = mdiew_value(&ideal_table(&werner(p)?, &basis2)?, &werner_coeffs)?;
        checks.push(Check::new(
            format!("werner I(p={p}) = 1-3p"),
            vec![1.0 - 3.0 * p],
            vec![value],
        ));
    }
    let at_zero = mdiew_value(&ideal_table(&werner(1.0 / 3.0)?, &basis2)?, &werner_coeffs)?;
    checks.push(Check::new("werner zero at p=1/3", vec![0.0], vec![at_zero]));

    for (alpha, zero, zero_label) in [
        (2.0 / 3.0, 13.0 / 21.0, "13/21"),
        (4.0 / 9.0, 23.0 / 63.0, "23/63"),
    ] {
        let coeffs = outcome_coefficients(&Witness::w_state(alpha)?, &basis3)?;
        if alpha == 2.0 / 3.0 {
            checks.extend(w_state_checks(&coeffs));
        }
        let threshold = (8.0 * alpha - 1.0) / 7.0;
        for p in [0.0, 0.25, 0.5, threshold, 0.75, 1.0] {
            let value = mdiew_value(&ideal_table(&w_state_noise(p)?, &basis3)?, &coeffs)?;
            checks.push(Check::new(
                format!("w-state I(alpha={alpha:.6}, p={p:.6}) = 8alpha-1-7p"),
                vec![8.0 * alpha - 1.0 - 7.0 * p],
                vec![value],
            ));
        }
        let at_zero = mdiew_value(&ideal_table(&w_state_noise(zero)?, &basis3)?, &coeffs)?;
        checks.push(Check::new(
            format!("w-state zero at p={zero_label} (alpha={alpha:.6})"),
            vec![0.0],
            vec![at_zero],
        ));
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(ReproduceReport { checks, passed })
}
