//! Problem data: parameters, toughness, loading and initial conditions.

mod conditions;
mod initial;
mod loading;
mod toughness;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DebondError, Result};

pub use conditions::{check_conditions, ConditionFlags};
pub use initial::{DisplacementSpec, InitialData, RegularityFlags, VelocitySpec};
pub use loading::{running_max_w_squared, LoadingProfile};
pub use toughness::{ToughnessKind, ToughnessModel};

/// Default toughness domain cap in units of `ell0`.
pub const X_MAX_FACTOR: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimParams {
    pub epsilon: f64,
    pub nu: f64,
    pub ell0: f64,
    pub t_end: f64,
    pub ds: f64,
    pub x_max: f64,
}

impl SimParams {
    pub fn new(epsilon: f64, nu: f64, ell0: f64, t_end: f64, ds: f64) -> Result<Self> {
        Self::with_cap(epsilon, nu, ell0, t_end, ds, X_MAX_FACTOR * ell0)
    }

    pub fn with_cap(
        epsilon: f64,
        nu: f64,
        ell0: f64,
        t_end: f64,
        ds: f64,
        x_max: f64,
    ) -> Result<Self> {
        let positive = |v: f64, p: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(DebondError::validation(p, "must be positive and finite"))
            }
        };
        positive(epsilon, "/epsilon")?;
        positive(ell0, "/ell0")?;
        positive(t_end, "/t_end")?;
        positive(ds, "/ds")?;
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(DebondError::validation("/nu", "must be nonnegative"));
        }
        let limit = epsilon * ell0 / 8.0;
        if ds > limit * (1.0 + 1e-12) {
            return Err(DebondError::validation(
                "/ds",
                format!("ds = {ds} exceeds eps*ell0/8 = {limit}"),
            ));
        }
        if !(x_max > ell0) {
            return Err(DebondError::validation("/x_max", "must exceed ell0"));
        }
        Ok(Self {
            epsilon,
            nu,
            ell0,
            t_end,
            ds,
            x_max,
        })
    }

    /// Number of time steps to cover `[0, t_end]`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.ds - 1e-9).ceil() as usize
    }
}

/// Raw problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub epsilon: f64,
    pub nu: f64,
    pub ell0: f64,
    pub t_end: f64,
    pub ds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    pub toughness: ToughnessKind,
    pub loading: LoadingProfile,
    pub u0: DisplacementSpec,
    #[serde(default)]
    pub u1: VelocitySpec,
}

/// Validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub params: SimParams,
    pub toughness: ToughnessModel,
    pub loading: LoadingProfile,
    pub init: InitialData,
}

impl Problem {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        let x_max = spec.x_max.unwrap_or(X_MAX_FACTOR * spec.ell0);
        let params =
            SimParams::with_cap(spec.epsilon, spec.nu, spec.ell0, spec.t_end, spec.ds, x_max)?;
        let toughness =
            ToughnessModel::new(spec.toughness.clone(), spec.ell0, x_max, "/toughness")?;
        spec.loading.validate("/loading")?;
        let loading = spec.loading.clone();
        let init = InitialData::new(&spec.u0, &spec.u1, loading.w(0.0), spec.ell0)?;
        Ok(Self {
            spec,
            params,
            toughness,
            loading,
            init,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: ProblemSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let pointer = if path == "." {
                String::new()
            } else {
                format!("/{}", path.replace('.', "/").replace(['[', ']'], ""))
            };
            DebondError::validation(pointer, e.inner().to_string())
        })?;
        Self::new(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Same data with other `epsilon`, `nu`, `ds` or `t_end`.
    pub fn with(&self, f: impl FnOnce(&mut ProblemSpec)) -> Result<Self> {
        let mut spec = self.spec.clone();
        f(&mut spec);
        Self::new(spec)
    }

    pub fn conditions(&self) -> ConditionFlags {
        check_conditions(
            &self.toughness,
            &self.loading,
            self.params.t_end,
            self.params.ds,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EQ: &str = r#"{
        "epsilon": 0.1, "nu": 1.0, "ell0": 1.0, "t_end": 2.0, "ds": 0.001,
        "toughness": {"kind": "constant", "value": 0.5},
        "loading": {"kind": "constant", "value": 0.9},
        "u0": {"kind": "affine"},
        "u1": {"kind": "zero"}
    }"#;

    #[test]
    fn parses_equilibrium() {
        let p = Problem::from_json_str(EQ).unwrap();
        assert_eq!(p.params.x_max, 64.0);
        assert_eq!(p.params.steps(), 2000);
        assert!(p.conditions().k3);
    }

    #[test]
    fn ds_bound() {
        let err = SimParams::new(0.1, 1.0, 1.0, 2.0, 0.02).unwrap_err();
        assert!(matches!(err, DebondError::Validation { ref pointer, .. } if pointer == "/ds"));
        assert!(SimParams::new(0.1, 1.0, 1.0, 2.0, 0.0125).is_ok());
        assert!(SimParams::new(0.1, -1.0, 1.0, 2.0, 0.001).is_err());
    }

    #[test]
    fn pointer_for_type_errors() {
        let bad = EQ.replace(r#""value": 0.5"#, r#""value": "x""#);
        match Problem::from_json_str(&bad).unwrap_err() {
            // internally tagged enums are buffered, so the path stops at the object
            DebondError::Validation { pointer, .. } => assert_eq!(pointer, "/toughness"),
            e => panic!("{e}"),
        }
        let bad = EQ.replace(r#""ds": 0.001"#, r#""ds": -0.001"#);
        match Problem::from_json_str(&bad).unwrap_err() {
            DebondError::Validation { pointer, .. } => assert_eq!(pointer, "/ds"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn roundtrip_spec() {
        let p = Problem::from_json_str(EQ).unwrap();
        let text = serde_json::to_string(&p.spec).unwrap();
        let q = Problem::from_json_str(&text).unwrap();
        assert_eq!(p.spec, q.spec);
    }
}
