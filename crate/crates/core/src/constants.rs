//! Witnessed constant estimates.
//!
//! A [`ConstantReport`] keeps the inputs that produced its best ratio so the
//! ratio can be recomputed later from nothing but the report and an oracle.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Result;
use crate::greedy::{quasi_greedy_apply, sign_average, SignMode};
use crate::norms::{lp_norm, NormOracle};
use crate::vector::{FiniteVector, Functional};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstantName {
    /// sup ‖a⊗b‖ / (‖a‖‖b‖)
    #[serde(rename = "K_upper")]
    KUpper,
    /// sup ‖a‖‖b‖ / ‖a⊗b‖
    #[serde(rename = "K_lower")]
    KLower,
    /// sup (‖a‖ⁿ / ‖aⁿ‖)^{1/n}
    #[serde(rename = "K_tilde")]
    KTilde,
    /// democracy: sup Φ(|A|) / λ(A)
    #[serde(rename = "Delta")]
    Delta,
    /// constant-coefficient unconditionality
    #[serde(rename = "C_ccu")]
    CCcu,
    /// quasi-greedy constant
    #[serde(rename = "A_qg")]
    AQg,
    /// lower ℓ1 constant of a coordinate subset
    #[serde(rename = "c_elton")]
    CElton,
    /// normalized sign average
    #[serde(rename = "delta_signavg")]
    DeltaSignavg,
    /// sup ‖a‖ / ‖a‖_p
    #[serde(rename = "K_upper_p")]
    UpperP,
    /// sup ‖f‖_* / ‖f‖_q
    #[serde(rename = "K_dual_q")]
    DualQ,
    /// sup ‖shifted a‖ / ‖a‖
    #[serde(rename = "K_shift")]
    ShiftForward,
    /// sup ‖a‖ / ‖shifted a‖
    #[serde(rename = "K_shift_inv")]
    ShiftBackward,
    /// sup ‖Σaᵢ(e_{2i}−e_{2i−1})‖ / ‖a‖
    #[serde(rename = "K_diff")]
    DifferenceUpper,
    /// sup ‖a‖ / ‖Σaᵢ(e_{2i}−e_{2i−1})‖
    #[serde(rename = "K_diff_inv")]
    DifferenceLower,
}

impl ConstantName {
    pub fn label(self) -> &'static str {
        match self {
            Self::KUpper => "K_upper",
            Self::KLower => "K_lower",
            Self::KTilde => "K_tilde",
            Self::Delta => "Delta",
            Self::CCcu => "C_ccu",
            Self::AQg => "A_qg",
            Self::CElton => "c_elton",
            Self::DeltaSignavg => "delta_signavg",
            Self::UpperP => "K_upper_p",
            Self::DualQ => "K_dual_q",
            Self::ShiftForward => "K_shift",
            Self::ShiftBackward => "K_shift_inv",
            Self::DifferenceUpper => "K_diff",
            Self::DifferenceLower => "K_diff_inv",
        }
    }
}

/// An exponent in `[1, ∞]`; serialized as a number, or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent(pub f64);

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Exponent(v)),
            Raw::Text(t) if t == "inf" => Ok(Exponent(f64::INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad exponent `{t}`"))),
        }
    }
}

/// The inputs behind a ratio, tagged by how the ratio is computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessInput {
    /// ‖a⊗b‖ / (‖a‖‖b‖)
    TensorUpper { a: FiniteVector, b: FiniteVector },
    /// ‖a‖‖b‖ / ‖a⊗b‖
    TensorLower { a: FiniteVector, b: FiniteVector },
    /// (‖a‖ⁿ / ‖aⁿ‖)^{1/n}
    Power { a: FiniteVector, n: u32 },
    /// ‖num‖ / ‖den‖
    NormRatio {
        num: FiniteVector,
        den: FiniteVector,
    },
    /// max(‖x‖/‖y‖, ‖y‖/‖x‖)
    TwoSided { x: FiniteVector, y: FiniteVector },
    /// ‖𝒢_δ(x)‖ / ‖x‖
    Threshold { x: FiniteVector, delta: f64 },
    /// ‖a‖ / ‖a‖_p
    LpComparison { a: FiniteVector, p: Exponent },
    /// f(x) / (‖x‖ · ‖f‖_q)
    DualPairing {
        f: Functional,
        x: FiniteVector,
        q: Exponent,
    },
    /// exhaustive average of ‖Σ±eᵢ‖ over i ≤ n, divided by n
    SignAverage { n: usize },
}

impl WitnessInput {
    pub fn evaluate(&self, o: &NormOracle) -> Result<f64> {
        Ok(match self {
            Self::TensorUpper { a, b } => o.norm(&a.tensor(b))? / (o.norm(a)? * o.norm(b)?),
            Self::TensorLower { a, b } => o.norm(a)? * o.norm(b)? / o.norm(&a.tensor(b))?,
            Self::Power { a, n } => {
                let na = o.norm(a)?;
                (na.powi(*n as i32) / o.norm(&a.power(*n)?)?).powf(1.0 / *n as f64)
            }
            Self::NormRatio { num, den } => o.norm(num)? / o.norm(den)?,
            Self::TwoSided { x, y } => {
                let r = o.norm(x)? / o.norm(y)?;
                r.max(1.0 / r)
            }
            Self::Threshold { x, delta } => o.norm(&quasi_greedy_apply(x, *delta))? / o.norm(x)?,
            Self::LpComparison { a, p } => o.norm(a)? / lp_norm(a.as_slice(), p.0),
            Self::DualPairing { f, x, q } => f.pair(x) / (o.norm(x)? * lp_norm(f.as_slice(), q.0)),
            Self::SignAverage { n } => {
                sign_average(o, *n, SignMode::Exhaustive, 0, 0)?.mean / *n as f64
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub ratio: f64,
    #[serde(flatten)]
    pub input: WitnessInput,
}

impl Witness {
    pub fn new(ratio: f64, input: WitnessInput) -> Self {
        Self { ratio, input }
    }

    /// Evaluates `input` and records the result.
    pub fn evaluate(o: &NormOracle, input: WitnessInput) -> Result<Self> {
        Ok(Self {
            ratio: input.evaluate(o)?,
            input,
        })
    }

    pub fn replay(&self, o: &NormOracle) -> Result<f64> {
        self.input.evaluate(o)
    }

    /// Recomputed ratio agrees with the recorded one to `tol` (relative
    /// above 1).
    pub fn reproduces(&self, o: &NormOracle, tol: f64) -> Result<bool> {
        let r = self.replay(o)?;
        Ok((r - self.ratio).abs() <= tol * self.ratio.abs().max(1.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub name: ConstantName,
    /// Largest ratio actually evaluated on a witness.
    pub certified_lower: f64,
    pub estimate: f64,
    /// Best witness first.
    pub witnesses: Vec<Witness>,
    pub samples: usize,
    pub seed: u64,
}

impl ConstantReport {
    pub fn replays(&self, o: &NormOracle, tol: f64) -> Result<bool> {
        for w in &self.witnesses {
            if !w.reproduces(o, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Running maximum over witnesses. Ties keep the earlier one so the result
/// does not depend on evaluation order once inputs are indexed.
#[derive(Clone, Debug)]
pub(crate) struct BestWitness {
    best: Option<Witness>,
    pub samples: usize,
}

impl BestWitness {
    pub fn new() -> Self {
        Self {
            best: None,
            samples: 0,
        }
    }

    pub fn offer(&mut self, w: Witness) {
        self.samples += 1;
        if !w.ratio.is_finite() {
            return;
        }
        match &self.best {
            Some(b) if b.ratio >= w.ratio => {}
            _ => self.best = Some(w),
        }
    }

    pub fn offer_input(&mut self, o: &NormOracle, input: WitnessInput) -> Result<()> {
        self.offer(Witness::evaluate(o, input)?);
        Ok(())
    }

    pub fn into_report(self, name: ConstantName, seed: u64) -> ConstantReport {
        let certified = self.best.as_ref().map_or(0.0, |w| w.ratio);
        ConstantReport {
            name,
            certified_lower: certified,
            estimate: certified,
            witnesses: self.best.into_iter().collect(),
            samples: self.samples,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::parse_space;

    #[test]
    fn witness_json_round_trip() {
        let w = Witness::new(
            2.0,
            WitnessInput::DualPairing {
                f: Functional::new(vec![1.0, -1.0]),
                x: FiniteVector::new(vec![1.0, 0.5]),
                q: Exponent(f64::INFINITY),
            },
        );
        let text = serde_json::to_string(&w).unwrap();
        assert!(text.contains("\"kind\":\"dual_pairing\""));
        assert!(text.contains("\"inf\""));
        let back: Witness = serde_json::from_str(&text).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn replay_matches() {
        let o = NormOracle::new(parse_space("summing").unwrap());
        let input = WitnessInput::TwoSided {
            x: FiniteVector::new(vec![1., -1., 1., -1.]),
            y: FiniteVector::indicator(4),
        };
        let w = Witness::evaluate(&o, input).unwrap();
        assert_eq!(w.ratio, 4.0);
        assert!(w.reproduces(&o, 1e-12).unwrap());
        let forged = Witness::new(3.0, w.input.clone());
        assert!(!forged.reproduces(&o, 1e-9).unwrap());
    }

    #[test]
    fn names_serialize_as_labels() {
        for n in [
            ConstantName::KUpper,
            ConstantName::CCcu,
            ConstantName::DeltaSignavg,
        ] {
            assert_eq!(
                serde_json::to_string(&n).unwrap(),
                format!("\"{}\"", n.label())
            );
        }
    }

    #[test]
    fn best_keeps_first_of_ties() {
        let mut b = BestWitness::new();
        let a = FiniteVector::unit(1).unwrap();
        b.offer(Witness::new(
            1.0,
            WitnessInput::NormRatio {
                num: a.clone(),
                den: a.clone(),
            },
        ));
        b.offer(Witness::new(
            1.0,
            WitnessInput::TwoSided {
                x: a.clone(),
                y: a.clone(),
            },
        ));
        b.offer(Witness::new(
            f64::NAN,
            WitnessInput::NormRatio {
                num: a.clone(),
                den: a,
            },
        ));
        let r = b.into_report(ConstantName::Delta, 0);
        assert_eq!(r.samples, 3);
        assert!(matches!(
            r.witnesses[0].input,
            WitnessInput::NormRatio { .. }
        ));
    }
}
