//! Central finite-difference gradient checking.
//!
//! The numerical side only ever evaluates forward values, so it is an
//! independent oracle for every backward closure in [`crate::autodiff`].

use crate::autodiff::{Graph, Var};
use crate::tensor::Tensor;

/// Worst discrepancy found by [`check_gradients`].
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_input: usize,
    pub worst_element: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Relative error with an absolute floor so that two near-zero gradients
/// compare as equal.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Compare reverse-mode gradients of the scalar produced by `build` against
/// central differences with step `step`, for every element of every input.
pub fn check_gradients<F>(inputs: &[Tensor], step: f64, build: F) -> GradCheckReport
where
    F: Fn(&mut Graph, &[Var]) -> Var,
{
    let mut graph = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| graph.variable(t.clone())).collect();
    let loss = build(&mut graph, &vars);
    let grads = graph.backward(loss);

    let eval = |perturbed: &[Tensor]| {
        let mut g = Graph::new();
        let vs: Vec<Var> = perturbed.iter().map(|t| g.constant(t.clone())).collect();
        let out = build(&mut g, &vs);
        g.value(out).item()
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_input: 0,
        worst_element: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (i, input) in inputs.iter().enumerate() {
        let analytic = grads.get_or_zeros(vars[i], input);
        for e in 0..input.len() {
            let orig = input.data()[e];
            work[i].data_mut()[e] = orig + step;
            let plus = eval(&work);
            work[i].data_mut()[e] = orig - step;
            let minus = eval(&work);
            work[i].data_mut()[e] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic.data()[e];
            let err = relative_error(a, numeric);
            report.checked += 1;
            if err > report.max_rel_error {
                report = GradCheckReport {
                    max_rel_error: err,
                    worst_input: i,
                    worst_element: e,
                    analytic: a,
                    numeric,
                    checked: report.checked,
                };
            }
        }
    }
    report
}
