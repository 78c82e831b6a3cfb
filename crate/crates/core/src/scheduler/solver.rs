//! Thin layer over the `microlp` simplex / branch-and-bound solver.

use std::time::Duration;

use microlp::{Problem, SolutionStatus, TerminationReason};

use crate::error::{Error, Result};

pub(crate) enum Outcome {
    /// Variable values in creation order.
    Solved(Vec<f64>),
    Infeasible,
}

/// Solves `problem` and insists on a proven optimum.
pub(crate) fn solve(problem: &Problem, time_limit: Option<Duration>) -> Result<Outcome> {
    let mut opts = microlp::SolveOptions::default();
    opts.time_limit = time_limit;
    let outcome = match problem.solve_with(opts) {
        Ok(o) => o,
        Err(microlp::Error::Infeasible) => return Ok(Outcome::Infeasible),
        Err(e) => return Err(Error::Solver(e.to_string())),
    };
    let solution = match outcome.into_solution() {
        Ok(s) => s,
        Err(interrupted) => {
            return Err(match interrupted.termination_reason() {
                TerminationReason::TimeLimit | TerminationReason::NodeLimit => Error::Timeout {
                    gap: interrupted.stats().gap,
                },
                other => Error::Solver(format!("solve interrupted: {other:?}")),
            })
        }
    };
    if solution.status() != SolutionStatus::Optimal {
        return Err(Error::Timeout {
            gap: solution.gap(),
        });
    }
    Ok(Outcome::Solved(solution.iter().map(|(_, v)| v).collect()))
}
