use std::fmt::Write as _;

use fpme_core::elliptic::TestBump;
use fpme_core::grid::{Field, Grid, MIN_POINTS_PER_AXIS};
use fpme_core::operators::{check_inverse_identity, cross_validate, laplacian_backend};

use super::Experiment;
use crate::artifacts::{Artifacts, Outcome};
use crate::config::{ExperimentKind, RunConfig};
use crate::error::CliError;

pub struct ValidateOperators;

fn test_fields(g: Grid) -> [(&'static str, Field); 3] {
    let bump = TestBump {
        center: [2.0, 0.0],
        radius: 3.0,
    };
    [
        ("gaussian", Field::radial(g, |r| (-r * r).exp())),
        (
            "shifted_gaussian",
            Field::from_fn(g, |[x, y]| (-((x - 3.0).powi(2) + y * y) / 4.0).exp()),
        ),
        ("bump", Field::from_fn(g, |x| bump.eval(x, g.dim()))),
    ]
}

impl Experiment for ValidateOperators {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::ValidateOperators
    }

    fn describe(&self) -> &'static str {
        "inverse identity and spectral/quadrature agreement at n/2 and n"
    }

    fn run(&self, cfg: &RunConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
        let (n, l, s, d) = (cfg.grid.n, cfg.grid.half_extent, cfg.model.s, cfg.model.d);
        let levels: Vec<usize> = [n / 2, n].into_iter().filter(|&k| k >= MIN_POINTS_PER_AXIS).collect();
        let mut table =
            String::from("n,h,inverse_residual,refinement_ratio,cross_gaussian,cross_shifted_gaussian,cross_bump\n");
        let (mut inverse, mut cross, mut prev, mut ratio) = (0.0, 0.0f64, None, None);
        for k in levels {
            let g = Grid::new(d, k, l)?;
            inverse = check_inverse_identity(&Field::radial(g, |r| (-r * r).exp()), s)?;
            ratio = prev.map(|p: f64| p / inverse);
            prev = Some(inverse);
            let q = laplacian_backend("quadrature", g, s)?;
            let sp = laplacian_backend("spectral", g, s)?;
            let gaps = test_fields(g)
                .iter()
                .map(|(_, f)| cross_validate(q.as_ref(), sp.as_ref(), f))
                .collect::<Result<Vec<f64>, _>>()?;
            cross = gaps.iter().copied().fold(0.0, f64::max);
            let _ = writeln!(
                table,
                "{k},{:e},{inverse:e},{},{:e},{:e},{:e}",
                g.spacing(),
                ratio.map_or(String::new(), |r| format!("{r:e}")),
                gaps[0],
                gaps[1],
                gaps[2]
            );
        }
        out.text("residuals.csv", "plot-csv", &table)?;
        let th = &cfg.thresholds;
        let pass = inverse <= th.inverse_residual && cross <= th.cross_validation;
        Ok(Outcome::new(
            pass,
            format!("inverse residual {inverse:.3e}, worst cross-validation gap {cross:.3e}"),
        )
        .metric("inverse_residual", inverse)
        .metric("refinement_ratio", ratio)
        .metric("cross_validation", cross))
    }
}
