use confsurf::{ComplexField, Cplx, Error, RationalFn, Result};
use serde::Deserialize;

use super::GridSpec;
use crate::check::Out;

pub const CHECKS: &[&str] = &["pminus_error", "hilbert_error", "derivative_error"];

fn c(re: f64, im: f64) -> Cplx {
    Cplx::new(re, im)
}

fn pole(p: Cplx, order: u32, coeff: Cplx) -> RationalFn {
    RationalFn::pole(p, order, coeff).expect("pole off the axis")
}

/// Ten test functions, poles at least 0.5 from the axis on both sides and
/// orders up to four.
pub fn default_battery() -> Vec<RationalFn> {
    vec![
        pole(c(0.0, 0.5), 1, c(1.0, 0.0)),
        pole(c(0.0, -0.5), 1, c(1.0, 0.0)),
        pole(c(1.0, 0.5), 2, c(0.3, -0.2)),
        pole(c(-2.0, -0.7), 2, c(0.0, 0.5)),
        pole(c(0.0, 0.5), 1, c(1.0, 0.0)).add(&pole(c(0.0, -0.5), 1, c(-1.0, 0.0))),
        pole(c(3.0, 1.0), 3, c(0.2, 0.0)),
        pole(c(-1.0, 0.5), 1, c(0.4, 0.1)).add(&pole(c(2.0, -1.5), 2, c(0.3, 0.0))),
        pole(c(0.2, -0.6), 3, c(0.1, -0.1)),
        pole(c(4.0, 2.0), 1, c(1.0, 0.0))
            .add(&pole(c(-4.0, -2.0), 1, c(1.0, 0.0)))
            .add(&pole(c(0.0, 0.8), 2, c(0.0, 0.2))),
        pole(c(-0.3, 0.5), 4, c(0.05, 0.0)),
    ]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub grid: GridSpec,
    pub functions: Vec<RationalFn>,
}

impl Default for Params {
    fn default() -> Self {
        // the order-four pole at height 0.5 needs 16384 points to reach 1e-11
        Self {
            grid: GridSpec {
                n: 16384,
                length: 64.0 * 2.0 * std::f64::consts::PI,
            },
            functions: default_battery(),
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        if self.functions.is_empty() {
            return Err(Error::Config("functions is empty".into()));
        }
        Ok(())
    }

    pub fn run(&self, out: &mut Out) -> Result<()> {
        out.stage("spectral", "project_minus");
        let grid = self.grid.build()?;
        let l = grid.length();
        let mut csv = String::from("index,pminus_error,hilbert_error,derivative_error\n");
        let mut worst = [0.0f64; 3];
        for (k, f) in self.functions.iter().enumerate() {
            let field = ComplexField::from_rational(&grid, f);
            let (pm, hi, de) = (field.project_minus(), field.hilbert(), field.deriv());
            let df = f.derivative();
            let mut err = [0.0f64; 3];
            for j in 0..grid.n() {
                let w = c(grid.u(j), 0.0);
                let exact_pm = f.eval_periodic_pminus(w, l);
                // Ĥ = -i(2P⁻ - 1)
                let exact_hi = -Cplx::i() * (exact_pm * 2.0 - f.eval_periodic(w, l));
                err[0] = err[0].max((pm.samples()[j] - exact_pm).norm());
                err[1] = err[1].max((hi.samples()[j] - exact_hi).norm());
                err[2] = err[2].max((de.samples()[j] - df.eval_periodic(w, l)).norm());
            }
            for (w, e) in worst.iter_mut().zip(err) {
                *w = w.max(e);
            }
            csv.push_str(&format!("{k},{}", crate::check::row(&err)));
        }
        out.file("oracle.csv", csv);
        out.below("pminus_error", worst[0], 1e-8, "max|P- f - oracle| over the battery");
        out.stage("spectral", "hilbert");
        out.below("hilbert_error", worst[1], 1e-8, "max|H f - oracle| over the battery");
        out.stage("spectral", "deriv");
        out.below("derivative_error", worst[2], 1e-8, "max|f' - oracle| over the battery");
        Ok(())
    }
}
