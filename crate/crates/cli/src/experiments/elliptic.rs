use std::fmt::Write as _;

use fpme_core::elliptic::*;
use serde::{Deserialize, Serialize};

use super::{model, Experiment};
use crate::artifacts::{Artifacts, Outcome};
use crate::config::{ExperimentKind, RunConfig};
use crate::error::CliError;

pub struct SolveElliptic;

/// JSON sidecar written next to `w.bin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticSidecar {
    pub alpha: f64,
    pub gamma: f64,
    pub s: f64,
    pub m: f64,
    pub kernel: String,
    pub c_hat: f64,
    pub c_bar: f64,
    pub iterations: usize,
    pub residual: f64,
    pub kappa_hat: Option<f64>,
    pub kappa_expected: Option<f64>,
    pub branch_agreement: f64,
    pub very_weak_residual: f64,
}

pub fn problem(cfg: &RunConfig) -> Result<EllipticProblem, CliError> {
    Ok(EllipticProblem::with_kernel(
        model(cfg)?,
        cfg.elliptic.alpha,
        &cfg.elliptic.kernel,
    )?)
}

impl Experiment for SolveElliptic {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::SolveElliptic
    }

    fn describe(&self) -> &'static str {
        "Picard iteration from above and below for w = G(ρ w^α)"
    }

    fn run(&self, cfg: &RunConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
        let pb = problem(cfg)?;
        let e = &cfg.elliptic;
        let ctl = IterationControl {
            tol: e.tol,
            max_iterations: e.max_iterations,
            keep_iterates: false,
        };
        let above = solve_from_above(&pb, ctl)?;
        let below = solve_from_below(&pb, ctl, None)?;
        let w = &above.w;
        let agreement = w.zip_map(&below.w, |a, b| (a - b).abs())?.max() / w.sup_norm();
        let bound = pb.potential_bound(w);
        let l = cfg.grid.half_extent;
        let fit = decay_fit(w, &pb, [0.75 * l, l]).ok();
        let vw = very_weak_residual(w, &pb, &default_test_bank(l))?;

        let sidecar = EllipticSidecar {
            alpha: pb.alpha(),
            gamma: cfg.model.gamma,
            s: cfg.model.s,
            m: cfg.model.m,
            kernel: pb.kernel_name().into(),
            c_hat: pb.c_hat(),
            c_bar: pb.c_bar(),
            iterations: above.iterations,
            residual: above.final_residual(),
            kappa_hat: fit.map(|f| f.kappa_hat),
            kappa_expected: fit.and_then(|f| f.expected),
            branch_agreement: agreement,
            very_weak_residual: vw,
        };
        out.field("w", w, cfg.model.s)?;
        out.json("w.json", "field-sidecar", &sidecar)?;
        let mut csv = String::from("iteration,residual_above,residual_below\n");
        for k in 0..above.residuals.len().max(below.residuals.len()) {
            let cell = |r: &[f64]| r.get(k).map_or(String::new(), |v| format!("{v:e}"));
            let _ = writeln!(csv, "{},{},{}", k + 1, cell(&above.residuals), cell(&below.residuals));
        }
        out.text("iterations.csv", "plot-csv", &csv)?;

        let limit = cfg.thresholds.branch_agreement * e.tol;
        if cfg.params().is_elliptic_uniqueness_grade() && agreement > limit {
            return Err(CliError::Invariant(format!(
                "branches from above and below differ by {agreement:e} (limit {limit:e})"
            )));
        }
        if bound > pb.c_bar() * (1.0 + 1e-12) {
            return Err(CliError::Invariant(format!(
                "w exceeds C̄ (I*ρ): ratio {bound} > C̄ = {}",
                pb.c_bar()
            )));
        }
        Ok(Outcome::new(
            true,
            format!(
                "{} iterations, branch gap {agreement:.2e}, very-weak residual {vw:.3e}",
                above.iterations
            ),
        )
        .metric("iterations_above", above.iterations)
        .metric("iterations_below", below.iterations)
        .metric("branch_agreement", agreement)
        .metric("potential_ratio", bound)
        .metric("c_bar", pb.c_bar())
        .metric("very_weak_residual", vw)
        .metric("kappa_hat", sidecar.kappa_hat))
    }
}
