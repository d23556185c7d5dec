use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::baselines::{
    bicgstab_solve, cgnr_solve, cgw_solve, full_gcr_solve, gencg_solve, gmres_solve, hwl_solve, trunc_gcr_solve,
};
use crate::error::{Error, Result};
use crate::mrs3::mrs3_solve;
use crate::operators::SssOperator;
use crate::report::{SolveOptions, SolveReport};

/// Restart length of the `gmres3` entry.
pub const GMRES_RESTART: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Mrs3,
    Cgw,
    GenCg,
    TruncGcr,
    FullGcr,
    Hwl,
    Cgnr,
    Gmres,
    Gmres3,
    BiCgStab,
}

impl SolverKind {
    pub const ALL: [SolverKind; 10] = [
        SolverKind::Mrs3,
        SolverKind::Cgw,
        SolverKind::GenCg,
        SolverKind::TruncGcr,
        SolverKind::FullGcr,
        SolverKind::Hwl,
        SolverKind::Cgnr,
        SolverKind::Gmres,
        SolverKind::Gmres3,
        SolverKind::BiCgStab,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Mrs3 => "mrs3",
            SolverKind::Cgw => "cgw",
            SolverKind::GenCg => "gencg",
            SolverKind::TruncGcr => "trunc-gcr",
            SolverKind::FullGcr => "full-gcr",
            SolverKind::Hwl => "hwl",
            SolverKind::Cgnr => "cgnr",
            SolverKind::Gmres => "gmres",
            SolverKind::Gmres3 => "gmres3",
            SolverKind::BiCgStab => "bicgstab",
        }
    }

    /// Why this solver cannot run on `a`, if it cannot.
    pub fn precondition(self, a: &SssOperator, x0: &[f64]) -> Option<String> {
        match self {
            SolverKind::Cgw | SolverKind::GenCg if a.alpha() == 0.0 => {
                Some(format!("{} requires a nonzero shift", self.name()))
            }
            SolverKind::GenCg if x0.iter().any(|&v| v != 0.0) => Some("gencg starts from x0 = 0".into()),
            SolverKind::Hwl if a.alpha() != 0.0 => Some("hwl applies to pure skew systems (alpha = 0)".into()),
            _ => None,
        }
    }

    pub fn solve(self, a: &SssOperator, b: &[f64], x0: &[f64], opts: SolveOptions) -> Result<SolveReport> {
        if let Some(why) = self.precondition(a, x0) {
            return Err(Error::InvalidInput(why));
        }
        match self {
            SolverKind::Mrs3 => mrs3_solve(a, b, x0, opts),
            SolverKind::Cgw => cgw_solve(a, b, x0, opts),
            SolverKind::GenCg => gencg_solve(a, b, opts),
            SolverKind::TruncGcr => trunc_gcr_solve(a, b, x0, opts),
            SolverKind::FullGcr => full_gcr_solve(a, b, x0, opts),
            SolverKind::Hwl => hwl_solve(a.skew(), b, x0, opts),
            SolverKind::Cgnr => cgnr_solve(a, b, x0, opts),
            SolverKind::Gmres => gmres_solve(a, b, x0, opts, None),
            SolverKind::Gmres3 => gmres_solve(a, b, x0, opts, Some(GMRES_RESTART)),
            SolverKind::BiCgStab => bicgstab_solve(a, b, x0, opts),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        SolverKind::ALL.into_iter().find(|k| k.name() == key).ok_or_else(|| {
            let known: Vec<_> = SolverKind::ALL.iter().map(|k| k.name()).collect();
            Error::InvalidInput(format!("unknown solver {s:?} (known: {})", known.join(", ")))
        })
    }
}

impl Serialize for SolverKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Parses a comma-separated solver list; repeated names are dropped.
pub fn parse_solver_list(list: &str) -> Result<Vec<SolverKind>> {
    let mut out: Vec<SolverKind> = Vec::new();
    for name in list.split(',').filter(|s| !s.trim().is_empty()) {
        let kind: SolverKind = name.parse()?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no solver given".into()));
    }
    Ok(out)
}
