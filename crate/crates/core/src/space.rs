//! Space descriptors and their text form.
//!
//! Grammar: `family [":" key "=" value {"," key "=" value}]` with families
//! `lp | c0 | lorentz | tsirelson | tp | summing` and keys `p`, `theta`, `s`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_LORENTZ_S: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lp,
    C0,
    /// Lorentz sequence space `d(w, p)` with weights `w_i = i^{-s}`.
    Lorentz,
    Tsirelson,
    /// `p`-convexified Tsirelson space.
    PConvexTsirelson,
    /// Summing basis norm `sup_n |Σ_{i≤n} a_i|`.
    Summing,
}

impl Family {
    pub fn keyword(self) -> &'static str {
        match self {
            Family::Lp => "lp",
            Family::C0 => "c0",
            Family::Lorentz => "lorentz",
            Family::Tsirelson => "tsirelson",
            Family::PConvexTsirelson => "tp",
            Family::Summing => "summing",
        }
    }

    fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            Family::Lp => &["p"],
            Family::C0 | Family::Summing => &[],
            Family::Lorentz => &["p", "s"],
            Family::Tsirelson => &["theta"],
            Family::PConvexTsirelson => &["p", "theta"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub family: Family,
    /// Exponent for `lp`, `lorentz` and `tp`; 1 where unused.
    pub p: f64,
    /// Tsirelson scaling factor in `(0, 1)`.
    pub theta: f64,
    /// Lorentz weight exponent.
    pub s: f64,
}

impl SpaceDescriptor {
    pub fn lp(p: f64) -> Result<Self> {
        Self::build(Family::Lp, p, DEFAULT_THETA, DEFAULT_LORENTZ_S)
    }

    pub fn c0() -> Self {
        Self::raw(Family::C0)
    }

    pub fn summing() -> Self {
        Self::raw(Family::Summing)
    }

    pub fn lorentz(p: f64, s: f64) -> Result<Self> {
        Self::build(Family::Lorentz, p, DEFAULT_THETA, s)
    }

    pub fn tsirelson(theta: f64) -> Result<Self> {
        Self::build(Family::Tsirelson, 1.0, theta, DEFAULT_LORENTZ_S)
    }

    pub fn pconvex_tsirelson(p: f64, theta: f64) -> Result<Self> {
        Self::build(Family::PConvexTsirelson, p, theta, DEFAULT_LORENTZ_S)
    }

    fn raw(family: Family) -> Self {
        Self {
            family,
            p: 1.0,
            theta: DEFAULT_THETA,
            s: DEFAULT_LORENTZ_S,
        }
    }

    fn build(family: Family, p: f64, theta: f64, s: f64) -> Result<Self> {
        let d = Self {
            family,
            p,
            theta,
            s,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::InvalidParam {
                name: "p",
                value: self.p,
                reason: "must be a finite real >= 1",
            });
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParam {
                name: "theta",
                value: self.theta,
                reason: "must lie in (0, 1)",
            });
        }
        if !(self.s.is_finite() && self.s >= 0.0) {
            return Err(Error::InvalidParam {
                name: "s",
                value: self.s,
                reason: "must be a finite real >= 0",
            });
        }
        Ok(())
    }

    /// Hölder conjugate of `p` (`∞` for `p = 1`).
    pub fn conjugate(&self) -> f64 {
        conjugate_exponent(self.p)
    }

    /// Lorentz weight `w_i`, 1-based.
    pub fn weight(&self, i: usize) -> f64 {
        (i as f64).powf(-self.s)
    }
}

pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family.keyword())?;
        match self.family {
            Family::Lp => write!(f, ":p={}", self.p),
            Family::C0 | Family::Summing => Ok(()),
            Family::Lorentz => write!(f, ":p={},s={}", self.p, self.s),
            Family::Tsirelson => write!(f, ":theta={}", self.theta),
            Family::PConvexTsirelson => write!(f, ":p={},theta={}", self.p, self.theta),
        }
    }
}

impl FromStr for SpaceDescriptor {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        parse_space(text)
    }
}

pub fn parse_space(text: &str) -> Result<SpaceDescriptor> {
    let err = |reason: String| Error::Parse {
        text: text.to_string(),
        reason,
    };
    let trimmed = text.trim();
    let (name, params) = match trimmed.split_once(':') {
        Some((name, params)) => (name.trim(), Some(params)),
        None => (trimmed, None),
    };
    let family = match name {
        "lp" => Family::Lp,
        "c0" => Family::C0,
        "lorentz" => Family::Lorentz,
        "tsirelson" => Family::Tsirelson,
        "tp" => Family::PConvexTsirelson,
        "summing" => Family::Summing,
        other => return Err(err(format!("unknown family `{other}`"))),
    };
    let mut desc = SpaceDescriptor::raw(family);
    let mut seen: Vec<&str> = Vec::new();
    if let Some(params) = params {
        for pair in params.split(',') {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{}`", pair.trim())))?;
            let key = key.trim();
            let value = value.trim();
            if !family.allowed_keys().contains(&key) {
                return Err(err(format!("key `{key}` is not valid for `{name}`")));
            }
            if seen.contains(&key) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            seen.push(key);
            let x: f64 = value
                .parse()
                .map_err(|_| err(format!("`{value}` is not a number")))?;
            match key {
                "p" => desc.p = x,
                "theta" => desc.theta = x,
                "s" => desc.s = x,
                _ => unreachable!(),
            }
        }
    }
    if matches!(family, Family::Lp | Family::PConvexTsirelson) && !seen.contains(&"p") {
        return Err(err(format!("`{name}` requires p")));
    }
    desc.validate()?;
    Ok(desc)
}
