//! D- and I-criterion scores, the analytic moment matrix, and efficiencies.
//!
//! Both criteria are minimized. A design whose information matrix is
//! numerically singular scores `+inf` with the `singular` flag set; scoring
//! never fails.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DesignMatrix, SecondOrderModel};

/// `det(F'F) <= SINGULAR_DET_RATIO * N^p` marks a design singular.
pub const SINGULAR_DET_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CriterionKind {
    D,
    I,
}

impl CriterionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CriterionKind::D => "D",
            CriterionKind::I => "I",
        }
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" | "d" => Ok(CriterionKind::D),
            "I" | "i" => Ok(CriterionKind::I),
            other => Err(Error::InvalidConfig(format!("unknown criterion {other:?}"))),
        }
    }
}

/// A criterion score. Lower is better for both kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionValue {
    kind: CriterionKind,
    value: f64,
    singular: bool,
}

impl CriterionValue {
    pub fn finite(kind: CriterionKind, value: f64) -> Self {
        Self {
            kind,
            value,
            singular: false,
        }
    }

    pub fn singular(kind: CriterionKind) -> Self {
        Self {
            kind,
            value: f64::INFINITY,
            singular: true,
        }
    }

    pub fn kind(&self) -> CriterionKind {
        self.kind
    }

    /// Score, `+inf` when singular.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }
}

impl fmt::Display for CriterionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.singular {
            write!(f, "{}=singular", self.kind)
        } else {
            write!(f, "{}={}", self.kind, self.value)
        }
    }
}

/// `W = ∫ f(x) f(x)' dx` over `[-1, 1]^K`, plus the region volume.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    k: usize,
    w: DMatrix<f64>,
    volume: f64,
}

/// `∫_{-1}^{1} t^d dt`.
fn unit_moment(d: u32) -> f64 {
    if d % 2 == 1 {
        0.0
    } else {
        2.0 / (d as f64 + 1.0)
    }
}

impl MomentMatrix {
    pub fn new(model: &SecondOrderModel) -> Self {
        let k = model.factors();
        let exps: Vec<Vec<u32>> = model.terms().iter().map(|t| t.exponents(k)).collect();
        let p = exps.len();
        let w = DMatrix::from_fn(p, p, |a, b| {
            exps[a]
                .iter()
                .zip(&exps[b])
                .map(|(ea, eb)| unit_moment(ea + eb))
                .product()
        });
        Self {
            k,
            w,
            volume: 2f64.powi(k as i32),
        }
    }

    pub fn factors(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }
}

struct Factorized {
    chol: Cholesky<f64, Dyn>,
    points: usize,
}

fn factorize(design: &DesignMatrix, model: &SecondOrderModel) -> Option<Factorized> {
    let f = model.build_model_matrix(design).ok()?;
    let n = design.points();
    let p = model.num_params();
    let chol = Cholesky::new(f.information_matrix())?;
    let ln_det: f64 = 2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>();
    let ln_threshold = SINGULAR_DET_RATIO.ln() + p as f64 * (n as f64).ln();
    if !ln_det.is_finite() || ln_det <= ln_threshold {
        return None;
    }
    Some(Factorized { chol, points: n })
}

/// `N^p / det(F'F)`, taken from the Cholesky factor without inverting.
pub fn d_score(design: &DesignMatrix, model: &SecondOrderModel) -> CriterionValue {
    let Some(fac) = factorize(design, model) else {
        return CriterionValue::singular(CriterionKind::D);
    };
    let p = model.num_params() as i32;
    let det = fac.chol.determinant();
    let value = (fac.points as f64).powi(p) / det;
    if value.is_finite() {
        CriterionValue::finite(CriterionKind::D, value)
    } else {
        CriterionValue::singular(CriterionKind::D)
    }
}

/// `(N / V) tr{(F'F)^{-1} W}`, solving against the columns of `W`.
pub fn iv_score(
    design: &DesignMatrix,
    model: &SecondOrderModel,
    moments: &MomentMatrix,
) -> CriterionValue {
    if moments.factors() != model.factors() {
        return CriterionValue::singular(CriterionKind::I);
    }
    let Some(fac) = factorize(design, model) else {
        return CriterionValue::singular(CriterionKind::I);
    };
    let trace = fac.chol.solve(&moments.w).trace();
    let value = fac.points as f64 / moments.volume * trace;
    if value.is_finite() && value >= 0.0 {
        CriterionValue::finite(CriterionKind::I, value)
    } else {
        CriterionValue::singular(CriterionKind::I)
    }
}

/// Scaled prediction variance `N f(x)'(F'F)^{-1} f(x)`.
pub fn spv(x: &[f64], design: &DesignMatrix, model: &SecondOrderModel) -> Result<f64> {
    let f = DVector::from_vec(model.expand_point(x)?);
    if design.factors() != model.factors() {
        return Err(Error::DimensionMismatch {
            expected: model.factors(),
            actual: design.factors(),
        });
    }
    let fac = factorize(design, model).ok_or(Error::Singular)?;
    let sol = fac.chol.solve(&f);
    Ok(fac.points as f64 * f.dot(&sol))
}

/// Relative efficiency of design 1 against design 2, in percent.
///
/// Above 100 means design 1 is better. D uses the `1/p` power, I the plain ratio.
pub fn relative_efficiency(
    kind: CriterionKind,
    value1: CriterionValue,
    value2: CriterionValue,
    p: usize,
) -> Result<f64> {
    for v in [value1, value2] {
        if v.is_singular() {
            return Err(Error::InvalidCriterionValue("singular design".into()));
        }
        if !(v.value() > 0.0 && v.value().is_finite()) {
            return Err(Error::InvalidCriterionValue(format!(
                "expected a positive finite score, got {}",
                v.value()
            )));
        }
    }
    if p == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let ratio = value2.value() / value1.value();
    Ok(match kind {
        CriterionKind::D => 100.0 * ratio.powf(1.0 / p as f64),
        CriterionKind::I => 100.0 * ratio,
    })
}

/// A ready-to-use objective: scores designs under one criterion for a fixed `K`.
///
/// The moment matrix is built once and shared, so clones are cheap.
#[derive(Debug, Clone)]
pub struct Criterion {
    kind: CriterionKind,
    model: SecondOrderModel,
    moments: Option<Arc<MomentMatrix>>,
}

impl Criterion {
    pub fn new(kind: CriterionKind, k: usize) -> Result<Self> {
        let model = SecondOrderModel::new(k)?;
        let moments = match kind {
            CriterionKind::D => None,
            CriterionKind::I => Some(Arc::new(MomentMatrix::new(&model))),
        };
        Ok(Self {
            kind,
            model,
            moments,
        })
    }

    pub fn kind(&self) -> CriterionKind {
        self.kind
    }

    pub fn model(&self) -> &SecondOrderModel {
        &self.model
    }

    pub fn evaluate(&self, design: &DesignMatrix) -> CriterionValue {
        match &self.moments {
            None => d_score(design, &self.model),
            Some(w) => iv_score(design, &self.model, w),
        }
    }
}
