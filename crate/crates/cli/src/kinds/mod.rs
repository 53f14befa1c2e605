//! Scenario kinds: typed parameters, validation and runners.

use std::path::Path;

use confsurf::spectral::{DEFAULT_LENGTH, DEFAULT_POINTS};
use confsurf::{Grid, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::check::Out;

pub mod bifurcation;
pub mod exact_family;
pub mod invariant_audit;
pub mod narrow_cut;
pub mod oracle;
pub mod selfsimilar;
pub mod simulate;

/// Periodic box `n` points over length `length`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: DEFAULT_POINTS,
            length: DEFAULT_LENGTH,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.n, self.length)
    }
}

#[derive(Debug, Clone)]
pub enum Params {
    Simulate(simulate::Params),
    ExactFamily(exact_family::Params),
    NarrowCut(narrow_cut::Params),
    BifurcationSweep(bifurcation::Params),
    InvariantAudit(invariant_audit::Params),
    SelfsimilarCheck(selfsimilar::Params),
    OracleTest(oracle::Params),
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        match self {
            Params::Simulate(p) => p.validate(),
            Params::ExactFamily(p) => p.validate(),
            Params::NarrowCut(p) => p.validate(),
            Params::BifurcationSweep(p) => p.validate(),
            Params::InvariantAudit(p) => p.validate(),
            Params::SelfsimilarCheck(p) => p.validate(),
            Params::OracleTest(p) => p.validate(),
        }
    }

    pub fn run(&self, out: &mut Out, threads: usize) -> Result<()> {
        match self {
            Params::Simulate(p) => p.run(out),
            Params::ExactFamily(p) => p.run(out),
            Params::NarrowCut(p) => p.run(out, threads),
            Params::BifurcationSweep(p) => p.run(out),
            Params::InvariantAudit(p) => p.run(out, threads),
            Params::SelfsimilarCheck(p) => p.run(out),
            Params::OracleTest(p) => p.run(out),
        }
    }
}

pub struct KindInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// Names of the checks the kind can emit; tolerance overrides must use these.
    pub checks: &'static [&'static str],
    pub parse: fn(Value, &Path) -> std::result::Result<Params, String>,
}

fn typed<T: DeserializeOwned>(v: Value) -> std::result::Result<T, String> {
    // an absent parameter block means "all defaults"
    let v = if v.is_null() { Value::Object(Default::default()) } else { v };
    serde_json::from_value(v).map_err(|e| format!("parameters: {e}"))
}

pub const KINDS: &[KindInfo] = &[
    KindInfo {
        name: "simulate",
        summary: "run the pseudospectral solver from rational or CSV initial data",
        checks: simulate::CHECKS,
        parse: |v, base| typed::<simulate::Params>(v).map(|p| Params::Simulate(p.resolved(base))),
    },
    KindInfo {
        name: "exact_family",
        summary: "compressed-fluid family: exactness battery, solver comparison, inverse-time series order",
        checks: exact_family::CHECKS,
        parse: |v, _| typed(v).map(Params::ExactFamily),
    },
    KindInfo {
        name: "narrow_cut",
        summary: "Hopf solution residuals and the narrow-cut convergence table",
        checks: narrow_cut::CHECKS,
        parse: |v, base| typed::<narrow_cut::Params>(v).map(|p| Params::NarrowCut(p.resolved(base))),
    },
    KindInfo {
        name: "bifurcation_sweep",
        summary: "classify the pole family over a range of pole heights and locate the flip",
        checks: bifurcation::CHECKS,
        parse: |v, _| typed(v).map(Params::BifurcationSweep),
    },
    KindInfo {
        name: "invariant_audit",
        summary: "track zeros of R and contour integrals through a solver run",
        checks: invariant_audit::CHECKS,
        parse: |v, _| typed(v).map(Params::InvariantAudit),
    },
    KindInfo {
        name: "selfsimilar_check",
        summary: "compressed-fluid anchor, self-similar profile residuals and gravity exponents",
        checks: selfsimilar::CHECKS,
        parse: |v, _| typed(v).map(Params::SelfsimilarCheck),
    },
    KindInfo {
        name: "oracle_test",
        summary: "spectral projector, Hilbert transform and derivative against rational oracles",
        checks: oracle::CHECKS,
        parse: |v, _| typed(v).map(Params::OracleTest),
    },
];
