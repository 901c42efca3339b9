use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{HamiltonianError, Table1Op};

/// Sign convention of the propagator `exp(i·sign·H·t)`. `Positive` is the
/// default; `Negative` is the usual Schrödinger convention `exp(-iHt)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum TimeSign {
    #[default]
    Positive,
    Negative,
}

impl TimeSign {
    pub fn value(self) -> f64 {
        match self {
            TimeSign::Positive => 1.0,
            TimeSign::Negative => -1.0,
        }
    }
}

impl TryFrom<i64> for TimeSign {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(TimeSign::Positive),
            -1 => Ok(TimeSign::Negative),
            other => Err(format!("time_sign must be +1 or -1, got {other}")),
        }
    }
}

impl From<TimeSign> for i64 {
    fn from(s: TimeSign) -> i64 {
        match s {
            TimeSign::Positive => 1,
            TimeSign::Negative => -1,
        }
    }
}

/// Interaction family of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InteractionKind {
    /// `Σ S_i · S_{i+1}`
    #[serde(rename = "heisenberg")]
    Heisenberg,
    /// `Σ (S_i·S_{i+1} + (S_i·S_{i+1})²) / 2`
    #[serde(rename = "heisenberg_squared_mix")]
    HeisenbergSquaredMix,
    /// Uniform nearest-neighbour sum of one of the tabulated two-site forms.
    #[serde(rename = "O1")]
    O1,
    #[serde(rename = "O2")]
    O2,
    #[serde(rename = "O3")]
    O3,
    #[serde(rename = "O4")]
    O4,
    #[serde(rename = "O5")]
    O5,
    /// Two-band hopping plus `B·Sz + C·Sz²` fields.
    #[serde(rename = "engineered")]
    Engineered,
}

impl InteractionKind {
    pub fn table1(self) -> Option<Table1Op> {
        match self {
            InteractionKind::O1 => Some(Table1Op::O1),
            InteractionKind::O2 => Some(Table1Op::O2),
            InteractionKind::O3 => Some(Table1Op::O3),
            InteractionKind::O4 => Some(Table1Op::O4),
            InteractionKind::O5 => Some(Table1Op::O5),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InteractionKind::Heisenberg => "heisenberg",
            InteractionKind::HeisenbergSquaredMix => "heisenberg_squared_mix",
            InteractionKind::O1 => "O1",
            InteractionKind::O2 => "O2",
            InteractionKind::O3 => "O3",
            InteractionKind::O4 => "O4",
            InteractionKind::O5 => "O5",
            InteractionKind::Engineered => "engineered",
        }
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InteractionKind {
    type Err = HamiltonianError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| HamiltonianError::UnknownKind(s.to_string()))
    }
}

/// Declarative description of a chain; the single input to Hamiltonian
/// construction.
///
/// JSON form: `{"n": 4, "kind": "engineered", "a": [..], "b": [..],
/// "B": [..], "C": [..], "time_sign": 1}`. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub n: usize,
    pub kind: InteractionKind,
    /// Up-band couplings, `n - 1` entries.
    #[serde(default)]
    pub a: Vec<f64>,
    /// Down-band couplings, `n - 1` entries.
    #[serde(default)]
    pub b: Vec<f64>,
    /// Linear fields, `n` entries.
    #[serde(rename = "B", default)]
    pub field_linear: Vec<f64>,
    /// Quadratic fields, `n` entries.
    #[serde(rename = "C", default)]
    pub field_quadratic: Vec<f64>,
    #[serde(default)]
    pub time_sign: TimeSign,
}

impl ChainSpec {
    /// Uniform chain of a parameter-free interaction kind.
    pub fn uniform(kind: InteractionKind, n: usize) -> Self {
        Self {
            n,
            kind,
            a: Vec::new(),
            b: Vec::new(),
            field_linear: Vec::new(),
            field_quadratic: Vec::new(),
            time_sign: TimeSign::Positive,
        }
    }

    pub fn engineered(
        a: Vec<f64>,
        b: Vec<f64>,
        field_linear: Vec<f64>,
        field_quadratic: Vec<f64>,
    ) -> Result<Self, HamiltonianError> {
        let spec = Self {
            n: field_linear.len(),
            kind: InteractionKind::Engineered,
            a,
            b,
            field_linear,
            field_quadratic,
            time_sign: TimeSign::Positive,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_time_sign(mut self, sign: TimeSign) -> Self {
        self.time_sign = sign;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, HamiltonianError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: ChainSpec =
            serde_path_to_error::deserialize(de).map_err(|e| HamiltonianError::Schema {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialises")
    }

    pub fn validate(&self) -> Result<(), HamiltonianError> {
        if self.n < 2 {
            return Err(HamiltonianError::InvalidSpec {
                field: "n".into(),
                message: format!("chain length must be at least 2, got {}", self.n),
            });
        }
        let required = self.kind == InteractionKind::Engineered;
        let lists: [(&str, &[f64], usize); 4] = [
            ("a", &self.a, self.n - 1),
            ("b", &self.b, self.n - 1),
            ("B", &self.field_linear, self.n),
            ("C", &self.field_quadratic, self.n),
        ];
        for (field, values, len) in lists {
            let ok = values.len() == len || (!required && values.is_empty());
            if !ok {
                return Err(HamiltonianError::InvalidSpec {
                    field: field.into(),
                    message: format!("expected {len} entries, found {}", values.len()),
                });
            }
            if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
                return Err(HamiltonianError::InvalidSpec {
                    field: format!("{field}[{pos}]"),
                    message: "value is not finite".into(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_engineered_spec() {
        let text = r#"{"n": 2, "kind": "engineered", "a": [0.5], "b": [0.5], "B": [0, 0], "C": [1, 1], "time_sign": -1}"#;
        let spec = ChainSpec::from_json(text).unwrap();
        assert_eq!(spec.kind, InteractionKind::Engineered);
        assert_eq!(spec.field_quadratic, vec![1.0, 1.0]);
        assert_eq!(spec.time_sign, TimeSign::Negative);
        let again = ChainSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn time_sign_defaults_positive() {
        let spec = ChainSpec::from_json(r#"{"n": 3, "kind": "heisenberg_squared_mix"}"#).unwrap();
        assert_eq!(spec.time_sign, TimeSign::Positive);
        assert!(spec.a.is_empty());
    }

    #[test]
    fn rejects_unknown_fields_with_path() {
        let err =
            ChainSpec::from_json(r#"{"n": 3, "kind": "heisenberg", "extra": 1}"#).unwrap_err();
        assert!(matches!(err, HamiltonianError::Schema { .. }), "{err}");
        let err =
            ChainSpec::from_json(r#"{"n": 3, "kind": "heisenberg", "time_sign": 2}"#).unwrap_err();
        match err {
            HamiltonianError::Schema { path, .. } => assert_eq!(path, "time_sign"),
            other => panic!("unexpected {other}"),
        }
        let err =
            ChainSpec::from_json(r#"{"n": 2, "kind": "engineered", "a": ["x"]}"#).unwrap_err();
        match err {
            HamiltonianError::Schema { path, .. } => assert_eq!(path, "a[0]"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_bad_lengths() {
        let err = ChainSpec::from_json(
            r#"{"n": 3, "kind": "engineered", "a": [1, 1], "b": [1], "B": [0,0,0], "C": [0,0,0]}"#,
        )
        .unwrap_err();
        match err {
            HamiltonianError::InvalidSpec { field, .. } => assert_eq!(field, "b"),
            other => panic!("unexpected {other}"),
        }
        assert!(ChainSpec::from_json(r#"{"n": 1, "kind": "heisenberg"}"#).is_err());
        assert!(ChainSpec::from_json(r#"{"n": 3, "kind": "O2", "a": [1]}"#).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in [
            InteractionKind::Heisenberg,
            InteractionKind::HeisenbergSquaredMix,
            InteractionKind::O1,
            InteractionKind::O5,
            InteractionKind::Engineered,
        ] {
            assert_eq!(kind.name().parse::<InteractionKind>().unwrap(), kind);
        }
        assert!("xx".parse::<InteractionKind>().is_err());
    }
}
