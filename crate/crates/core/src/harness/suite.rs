//! Runs every check for one space and condenses the evidence into a
//! classification hint.

use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{
    conjugate_or_one, difference_basis_check, dual_q_estimate_check, ell1_average_slope,
    elton_subset_search, fit_exponent, k_ratio_stats, lambda_grid, power_condition_profile,
    power_constant, shift_equivalence, upper_p_estimate_check, EltonResult, EquivalenceReport,
    ExponentFit, SlopeEntry,
};
use crate::constants::ConstantReport;
use crate::error::{Error, Result};
use crate::greedy::{
    bidemocracy_profile, ccu_constant, democracy_constant, quasi_greedy_constant, Bracket, Budgets,
    FundamentalTable, SignMode, TableOptions, DEFAULT_SIGN_CAP, DEFAULT_SUBSET_CAP, DEFAULT_TRIALS,
};
use crate::norms::{DualOptions, NormOracle};
use crate::sampler::Sampler;
use crate::space::SpaceDescriptor;
use crate::vector::FiniteVector;

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance for "equals 1" and "constant" in the decision rules.
const FORCED_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub window: usize,
    pub trials: usize,
    pub subset_cap: u64,
    pub sign_cap: u64,
    pub seed: u64,
    pub sampler: Sampler,
    /// `K_upper·K_lower` above this (with growth) rules out the tensor
    /// inequality.
    pub threshold: f64,
    pub democracy_window: usize,
    pub ccu_n: usize,
    pub elton_n: usize,
    pub elton_c: f64,
    pub grid_max: usize,
    pub power_n_max: u32,
    pub shift_m: usize,
    /// Sampled functionals in the dual comparison.
    pub dual_functionals: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            window: 32,
            trials: DEFAULT_TRIALS,
            subset_cap: DEFAULT_SUBSET_CAP as u64,
            sign_cap: DEFAULT_SIGN_CAP,
            seed: 0,
            sampler: Sampler::default(),
            threshold: 3.0,
            democracy_window: 12,
            ccu_n: 12,
            elton_n: 8,
            elton_c: 0.5,
            grid_max: 8,
            power_n_max: 5,
            shift_m: 1,
            dual_functionals: 64,
        }
    }
}

impl SuiteConfig {
    pub fn budgets(&self) -> Budgets {
        Budgets {
            subset_cap: self.subset_cap as u128,
            sign_cap: self.sign_cap,
            trials: self.trials,
            ..Budgets::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Ok,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedBracket {
    pub label: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: CheckStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<ConstantReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub brackets: Vec<NamedBracket>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl CheckRecord {
    fn ok(name: &str, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            status: CheckStatus::Ok,
            reason: None,
            seed,
            constants: Vec::new(),
            brackets: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    fn skipped(name: &str, seed: u64, err: &Error) -> Self {
        Self {
            status: CheckStatus::Skipped,
            reason: Some(err.to_string()),
            ..Self::ok(name, seed)
        }
    }

    pub fn constant(&self, label: &str) -> Option<&ConstantReport> {
        self.constants.iter().find(|c| c.name.label() == label)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub input: FiniteVector,
    pub ratios: Vec<f64>,
}

/// Numeric tables, also emitted as CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    pub fundamental: Option<FundamentalTable>,
    pub bidemocracy: Option<Vec<Bracket>>,
    pub ell1_average_slope: Option<Vec<SlopeEntry>>,
    pub lambda_grid: Option<Vec<Vec<f64>>>,
    pub power_condition: Option<Vec<PowerRow>>,
    /// `max(r, 1/r)` with `r = λ(n²)/λ(n)²`, for `n = 1, 2, ...`.
    pub indicator_squares: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Classification {
    ConsistentWithC0,
    ConsistentWithLp(f64),
    InconsistentWithTensorBound,
    Inconclusive,
}

impl Classification {
    /// `lp` matches any exponent; the full text matches exactly.
    pub fn matches(&self, query: &str) -> bool {
        let q = query.trim();
        let text = self.to_string();
        if q == text {
            return true;
        }
        match self {
            Self::ConsistentWithC0 => matches!(q, "c0" | "consistent-with-c0"),
            Self::ConsistentWithLp(p) => {
                q == "lp"
                    || q == "consistent-with-lp"
                    || q.strip_prefix("lp:p=")
                        .or_else(|| q.strip_prefix("lp(").and_then(|r| r.strip_suffix(')')))
                        .and_then(|v| v.parse::<f64>().ok())
                        .is_some_and(|v| (v - p).abs() <= 0.05)
            }
            Self::InconsistentWithTensorBound => {
                matches!(q, "inconsistent" | "inconsistent-with-(2)")
            }
            Self::Inconclusive => q == "inconclusive",
        }
    }
}

fn format_exponent(p: f64) -> String {
    let s = format!("{p:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConsistentWithC0 => write!(f, "consistent-with-c0"),
            Self::ConsistentWithLp(p) => write!(f, "consistent-with-lp({})", format_exponent(*p)),
            Self::InconsistentWithTensorBound => write!(f, "inconsistent-with-(2)"),
            Self::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

impl FromStr for Classification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "consistent-with-c0" => Self::ConsistentWithC0,
            "inconsistent-with-(2)" => Self::InconsistentWithTensorBound,
            "inconclusive" => Self::Inconclusive,
            _ => {
                let p = s
                    .strip_prefix("consistent-with-lp(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse {
                        text: s.to_string(),
                        reason: "unknown classification".into(),
                    })?;
                Self::ConsistentWithLp(p)
            }
        })
    }
}

impl Serialize for Classification {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Classification {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    /// Canonical descriptor text.
    pub space: String,
    pub descriptor: SpaceDescriptor,
    pub seed: u64,
    pub config: SuiteConfig,
    pub classification_hint: Classification,
    /// Which rule produced the hint.
    pub rationale: String,
    /// Sorted by name.
    pub checks: Vec<CheckRecord>,
    pub profiles: Profiles,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: Option<u64>,
}

impl SuiteReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn without_timestamp(&self) -> Self {
        Self {
            timestamp: None,
            ..self.clone()
        }
    }
}

/// Per-check seed from the master seed and the check name.
pub fn derive_seed(master: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn bracket(label: &str, b: &Bracket) -> NamedBracket {
    NamedBracket {
        label: label.to_string(),
        lower: b.lower,
        upper: b.upper,
    }
}

fn equivalence_record(name: &str, seed: u64, r: EquivalenceReport) -> CheckRecord {
    let mut rec = CheckRecord::ok(name, seed);
    rec.details = serde_json::json!({
        "identity_holds": r.identity_holds,
        "identity_checked": r.identity_checked,
    });
    rec.constants = vec![r.forward, r.backward];
    rec
}

fn near_one(x: f64) -> bool {
    (x - 1.0).abs() <= FORCED_TOL
}

struct Evidence {
    forced_ones: bool,
    p_hat: Option<f64>,
    lambda_constant: bool,
    tensor_product: Option<f64>,
    family_grows: bool,
}

fn classify(e: &Evidence, threshold: f64) -> (Classification, String) {
    if e.forced_ones {
        if let Some(p) = e.p_hat {
            return (
                Classification::ConsistentWithLp(p),
                "tensor ratios, lambda grid and power profiles all equal 1 and the exponent fit is finite".into(),
            );
        }
    }
    if e.lambda_constant {
        return (
            Classification::ConsistentWithC0,
            "lambda is constant on the window".into(),
        );
    }
    if let Some(k) = e.tensor_product {
        if k > threshold && e.family_grows {
            return (
                Classification::InconsistentWithTensorBound,
                format!(
                    "certified K_upper*K_lower = {k} exceeds {threshold} and grows along the indicator-square family"
                ),
            );
        }
    }
    (
        Classification::Inconclusive,
        "no decision rule applies".into(),
    )
}

/// Runs every check. Budget or window violations turn a check into a
/// `skipped` record; the suite itself only fails on an invalid descriptor.
pub fn run_suite(space: &SpaceDescriptor, config: &SuiteConfig) -> Result<SuiteReport> {
    space.validate()?;
    let o = NormOracle::new(*space);
    let budgets = config.budgets();
    let seed_of = |name: &str| derive_seed(config.seed, name);
    let mut checks: Vec<CheckRecord> = Vec::new();
    let mut profiles = Profiles::default();
    let dual = DualOptions {
        restarts: 8,
        max_sweeps: 60,
        ..DualOptions::default()
    };

    let mut run = |name: &str, f: &mut dyn FnMut(u64) -> Result<CheckRecord>| {
        let seed = seed_of(name);
        let rec = f(seed).unwrap_or_else(|e| CheckRecord::skipped(name, seed, &e));
        checks.push(rec);
    };

    // fundamental function table, bidemocracy and the exponent fit
    let mut table: Option<FundamentalTable> = None;
    run("fundamental_table", &mut |seed| {
        let opts = TableOptions {
            budgets,
            seed,
            ..TableOptions::default()
        };
        let t = FundamentalTable::compute(&o, config.window, &opts)?;
        let mut rec = CheckRecord::ok("fundamental_table", seed);
        let last = t.entries.last().expect("window >= 1");
        rec.brackets = vec![
            bracket("lambda_star(N)", &last.lambda_star),
            bracket("phi_star(N)", &last.phi_star),
            bracket(
                "phi(N)",
                &Bracket {
                    lower: last.phi,
                    upper: last.phi_upper,
                },
            ),
        ];
        rec.details = serde_json::json!({
            "window": t.window,
            "exhaustive_entries": t.entries.iter().filter(|e| e.phi_mode == crate::greedy::Mode::Exhaustive).count(),
        });
        table = Some(t);
        Ok(rec)
    });
    let mut fit: Option<ExponentFit> = None;
    run("fit_exponent", &mut |seed| {
        let lam: Vec<f64> = match &table {
            Some(t) => t.lambda(),
            None => (1..=config.window)
                .map(|n| o.norm(&FiniteVector::indicator(n)))
                .collect::<Result<_>>()?,
        };
        let f = fit_exponent(&lam)?;
        let mut rec = CheckRecord::ok("fit_exponent", seed);
        rec.details = serde_json::to_value(&f).expect("fit serializes");
        fit = Some(f);
        Ok(rec)
    });
    run("bidemocracy", &mut |seed| {
        let t = table
            .as_ref()
            .ok_or_else(|| Error::Invalid("no fundamental table".into()))?;
        let prof = bidemocracy_profile(t);
        let mut rec = CheckRecord::ok("bidemocracy", seed);
        let worst = prof.iter().fold(
            Bracket {
                lower: 1.0,
                upper: 1.0,
            },
            |a, b| Bracket {
                lower: a.lower.max(b.lower),
                upper: a.upper.max(b.upper),
            },
        );
        rec.brackets = vec![bracket("max_n phi(n)phi_star(n)/n", &worst)];
        profiles.bidemocracy = Some(prof);
        Ok(rec)
    });
    profiles.fundamental = table.clone();

    // tensor inequality and its consequences
    run("k_ratio", &mut |seed| {
        let (u, l) = k_ratio_stats(&o, &config.sampler, config.trials, seed)?;
        let mut rec = CheckRecord::ok("k_ratio", seed);
        rec.details = serde_json::json!({ "product": u.certified_lower * l.certified_lower });
        rec.constants = vec![u, l];
        Ok(rec)
    });
    run("lambda_grid", &mut |seed| {
        let g = lambda_grid(&o, config.grid_max, config.grid_max)?;
        let mut rec = CheckRecord::ok("lambda_grid", seed);
        let (lo, hi) = g
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        rec.brackets = vec![NamedBracket {
            label: "lambda(mn)/(lambda(m)lambda(n))".into(),
            lower: lo,
            upper: hi,
        }];
        profiles.lambda_grid = Some(g);
        Ok(rec)
    });
    run("power_condition", &mut |seed| {
        let inputs: Vec<FiniteVector> = vec![
            FiniteVector::indicator(2),
            FiniteVector::indicator(3),
            FiniteVector::new(vec![1.0, -1.0]),
            FiniteVector::new(vec![1.0, 0.5, 0.25]),
            FiniteVector::new(vec![1.0, 0.9, 0.81]),
        ];
        let mut rows = Vec::new();
        for a in &inputs {
            let mut n_max = config.power_n_max;
            while n_max > 1 && (a.len() as f64).powi(n_max as i32) > o.window_cap as f64 {
                n_max -= 1;
            }
            rows.push(PowerRow {
                input: a.clone(),
                ratios: power_condition_profile(&o, a, n_max)?,
            });
        }
        let k = power_constant(&o, &inputs, config.power_n_max, seed)?;
        let mut rec = CheckRecord::ok("power_condition", seed);
        rec.constants = vec![k];
        profiles.power_condition = Some(rows);
        Ok(rec)
    });
    let squares: Vec<f64> = (1..=8usize)
        .take_while(|n| n * n <= o.window_cap)
        .map(|n| {
            let ln = o.norm(&FiniteVector::indicator(n))?;
            let lnn = o.norm(&FiniteVector::indicator(n * n))?;
            let r = lnn / (ln * ln);
            Ok(r.max(1.0 / r))
        })
        .collect::<Result<_>>()
        .unwrap_or_default();
    profiles.indicator_squares = Some(squares.clone());

    // greedy-basis constants
    run("democracy", &mut |seed| {
        let r = democracy_constant(
            &o,
            config.democracy_window.min(config.window),
            &budgets,
            seed,
        )?;
        let mut rec = CheckRecord::ok("democracy", seed);
        rec.constants = vec![r];
        Ok(rec)
    });
    run("ccu", &mut |seed| {
        let n = config.ccu_n.min(config.window);
        let exhaustive =
            n <= crate::greedy::MAX_EXHAUSTIVE_SIGNS && (1u64 << (n - 1)) <= config.sign_cap;
        let mode = if exhaustive {
            SignMode::Exhaustive
        } else {
            SignMode::MonteCarlo
        };
        let r = ccu_constant(&o, n, mode, config.trials, seed)?;
        let mut rec = CheckRecord::ok("ccu", seed);
        rec.details = serde_json::json!({ "n": n, "mode": mode });
        rec.constants = vec![r];
        Ok(rec)
    });
    run("quasi_greedy", &mut |seed| {
        let r = quasi_greedy_constant(&o, &config.sampler, config.trials, seed)?;
        let mut rec = CheckRecord::ok("quasi_greedy", seed);
        rec.constants = vec![r];
        Ok(rec)
    });
    run("ell1_average_slope", &mut |seed| {
        let v = ell1_average_slope(&o, config.window, &budgets, seed)?;
        let mut rec = CheckRecord::ok("ell1_average_slope", seed);
        let last = v.last().expect("window >= 1");
        rec.details = serde_json::json!({ "last_n": last.n, "last_value": last.value });
        profiles.ell1_average_slope = Some(v);
        Ok(rec)
    });
    run("elton", &mut |seed| {
        let r: EltonResult =
            elton_subset_search(&o, config.elton_n.min(config.window), config.elton_c, &dual)?;
        let mut rec = CheckRecord::ok("elton", seed);
        rec.details = serde_json::to_value(&r).expect("elton result serializes");
        Ok(rec)
    });

    // comparisons with the fitted exponent
    let p_fit = fit.as_ref().map(|f| f.p_hat.0);
    run("upper_p_estimate", &mut |seed| {
        let p = p_fit.ok_or_else(|| Error::Invalid("no exponent fit".into()))?;
        let p = if p.is_finite() {
            p.max(1.0)
        } else {
            f64::INFINITY
        };
        let r = upper_p_estimate_check(&o, p, &config.sampler, config.trials, seed)?;
        let mut rec = CheckRecord::ok("upper_p_estimate", seed);
        rec.details = serde_json::json!({ "p": crate::constants::Exponent(p) });
        rec.constants = vec![r];
        Ok(rec)
    });
    run("dual_q_estimate", &mut |seed| {
        let p = p_fit.ok_or_else(|| Error::Invalid("no exponent fit".into()))?;
        let q = conjugate_or_one(p.max(1.0));
        let r =
            dual_q_estimate_check(&o, q, &config.sampler, config.dual_functionals, seed, &dual)?;
        let mut rec = CheckRecord::ok("dual_q_estimate", seed);
        rec.details = serde_json::json!({ "q": crate::constants::Exponent(q) });
        rec.constants = vec![r];
        Ok(rec)
    });

    // block identities
    run("shift_equivalence", &mut |seed| {
        let n = (config.window / (config.shift_m + 1)).clamp(1, 8);
        let r = shift_equivalence(
            &o,
            config.shift_m,
            n,
            &config.sampler,
            config.trials.min(500),
            seed,
        )?;
        Ok(equivalence_record("shift_equivalence", seed, r))
    });
    run("difference_basis", &mut |seed| {
        let r = difference_basis_check(&o, &config.sampler, config.trials.min(500), seed)?;
        Ok(equivalence_record("difference_basis", seed, r))
    });

    checks.sort_by(|a, b| a.name.cmp(&b.name));

    let ok = |name: &str| {
        checks
            .iter()
            .find(|c| c.name == name && c.status == CheckStatus::Ok)
    };
    let k_ratio = ok("k_ratio");
    let tensor_ones =
        k_ratio.is_some_and(|c| c.constants.iter().all(|k| near_one(k.certified_lower)));
    let grid_ones = ok("lambda_grid").is_some()
        && profiles
            .lambda_grid
            .as_ref()
            .is_some_and(|g| g.iter().flatten().all(|&v| near_one(v)));
    let power_ones = ok("power_condition").is_some()
        && profiles
            .power_condition
            .as_ref()
            .is_some_and(|rows| rows.iter().flat_map(|r| &r.ratios).all(|&v| near_one(v)));
    let lam = profiles.fundamental.as_ref().map(|t| t.lambda());
    let lambda_constant = lam
        .as_ref()
        .is_some_and(|l| l.iter().all(|&v| (v - l[0]).abs() <= FORCED_TOL));
    let tensor_product = k_ratio.and_then(|c| {
        let u = c.constant("K_upper")?.certified_lower;
        let l = c.constant("K_lower")?.certified_lower;
        Some(u * l)
    });
    let family_grows = squares.len() >= 2
        && squares[squares.len() - 1] > squares[1.min(squares.len() - 1)] * (1.0 + FORCED_TOL);
    let evidence = Evidence {
        forced_ones: tensor_ones && grid_ones && power_ones,
        p_hat: p_fit.filter(|p| p.is_finite()),
        lambda_constant,
        tensor_product,
        family_grows,
    };
    let (hint, rationale) = classify(&evidence, config.threshold);

    Ok(SuiteReport {
        schema_version: SCHEMA_VERSION,
        space: space.to_string(),
        descriptor: *space,
        seed: config.seed,
        config: config.clone(),
        classification_hint: hint,
        rationale,
        checks,
        profiles,
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs()),
    })
}
