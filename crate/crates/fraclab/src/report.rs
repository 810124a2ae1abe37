//! Solver and scan reports, plus their CSV renderings.

use crate::grid::ScalarField;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Linear,
    Monotone,
    FixedPoint,
    Reaction,
    Newton,
}

/// Ledger of one solver run.
///
/// `residual_history` records the sup-norm update per iterate (the quantity
/// the stopping rule watches), so `converged` implies its last entry is at or
/// below the configured tolerance. `equation_residual` is the sup-norm
/// residual of the discrete equation at the final iterate.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub scheme: Scheme,
    pub converged: bool,
    /// Why a run ended without convergence: "max-iter", "schedule-exhausted",
    /// "ball-exit" or "blowup".
    pub reason: Option<String>,
    pub iterates_outer: usize,
    pub iterates_inner: usize,
    pub tolerance: f64,
    pub residual_history: Vec<f64>,
    /// Weighted-ball functional per iterate (fixed-point scheme only).
    pub ball_history: Vec<f64>,
    /// Worst signed ordering breach observed per outer step (monotone and
    /// reaction schemes).
    pub violation_history: Vec<f64>,
    /// Worst ordering breach over the whole run; 0 when the expected
    /// monotonicity held exactly.
    pub monotone_violation: f64,
    /// Weighted gradient norm of the iterate per outer step.
    pub norm_ledger: Vec<f64>,
    pub equation_residual: f64,
    /// ∫ g·u dx per outer step (reaction scheme only).
    pub reaction_mass: Vec<f64>,
    /// Ball radius l^{1/(2s)} used for the membership test (fixed-point).
    pub ball_radius: Option<f64>,
    /// The alternative bookkeeping radius l^{1/p}, logged alongside.
    pub ball_radius_alt: Option<f64>,
    /// Which of the two radii is the smaller (binding) one.
    pub ball_binding: Option<String>,
    pub final_field: ScalarField,
}

impl SolveReport {
    pub fn new(scheme: Scheme, tolerance: f64, final_field: ScalarField) -> Self {
        SolveReport {
            scheme,
            converged: false,
            reason: None,
            iterates_outer: 0,
            iterates_inner: 0,
            tolerance,
            residual_history: Vec::new(),
            ball_history: Vec::new(),
            violation_history: Vec::new(),
            monotone_violation: 0.0,
            norm_ledger: Vec::new(),
            equation_residual: 0.0,
            reaction_mass: Vec::new(),
            ball_radius: None,
            ball_radius_alt: None,
            ball_binding: None,
            final_field,
        }
    }

    /// Residual history as CSV (columns: iter, residual, ball_norm, violation).
    pub fn history_csv(&self) -> String {
        let mut out = String::from("iter,residual,ball_norm,violation\n");
        let rows = self
            .residual_history
            .len()
            .max(self.ball_history.len())
            .max(self.violation_history.len());
        for i in 0..rows {
            let cell = |v: Option<&f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                i,
                cell(self.residual_history.get(i)),
                cell(self.ball_history.get(i)),
                cell(self.violation_history.get(i)),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Converging => write!(f, "converging"),
            Verdict::Diverging => write!(f, "diverging"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// One scan experiment: a swept parameter, an observable measured per sweep
/// value across grid refinements, and a refinement-ratio verdict per sweep
/// value.
#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub kind: String,
    pub parameter_grid: Vec<f64>,
    /// Refinement axis: grid sizes for refinement scans, mollifier widths
    /// for the concentration scan.
    pub refinements: Vec<f64>,
    /// observables[k][r] = measurement for sweep value k at refinement r.
    pub observables: Vec<Vec<f64>>,
    pub verdicts: Vec<Verdict>,
    /// Power-law slope of the observable where a rate is identifiable
    /// (log2 of the last refinement ratio; ~0 for log-type divergence).
    pub fit_exponent: Vec<Option<f64>>,
    /// First swept value whose verdict is diverging, if any.
    pub empirical_threshold: Option<f64>,
    /// The matching prediction from the exponent table, when one exists.
    pub predicted_threshold: Option<f64>,
    /// Secondary observable (same layout as `observables`), e.g. the
    /// solution-norm surrogate next to the nonexistence integrand.
    pub secondary: Option<Vec<Vec<f64>>>,
    pub notes: Vec<String>,
}

impl ScanResult {
    /// CSV rendering (columns: sweep_value, refinement, observable, verdict).
    pub fn csv(&self) -> String {
        let mut out = String::from("sweep_value,refinement,observable,verdict\n");
        for (k, &p) in self.parameter_grid.iter().enumerate() {
            for (r, &n) in self.refinements.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{:.17e},{}\n",
                    p, n, self.observables[k][r], self.verdicts[k]
                ));
            }
        }
        out
    }
}
