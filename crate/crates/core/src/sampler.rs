//! Random test vectors.
//!
//! Grammar: `kind [ "(" value ")" ] [ ":" key "=" value {"," key "=" value} ]`
//! with kinds `gaussian`, `rademacher_sparse(k)`, `geometric(r)` and
//! `indicator_random`. The optional `len` key bounds the vector length
//! (default 8). `rademacher_sparse:k=3` and `geometric:r=0.5` are accepted too.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::FiniteVector;

pub const DEFAULT_SAMPLE_LEN: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    Gaussian,
    RademacherSparse { k: usize },
    Geometric { r: f64 },
    IndicatorRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    #[serde(flatten)]
    pub kind: SamplerKind,
    pub max_len: usize,
}

impl Default for Sampler {
    fn default() -> Self {
        Self {
            kind: SamplerKind::Gaussian,
            max_len: DEFAULT_SAMPLE_LEN,
        }
    }
}

impl Sampler {
    pub fn new(kind: SamplerKind, max_len: usize) -> Self {
        Self { kind, max_len }
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    /// A nonzero vector of trimmed length at most `max_len`.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> FiniteVector {
        let len = rng.gen_range(1..=self.max_len.max(1));
        self.sample_len(rng, len)
    }

    /// A vector of trimmed length exactly `len` (the last coefficient is
    /// nonzero).
    pub fn sample_len(&self, rng: &mut ChaCha8Rng, len: usize) -> FiniteVector {
        assert!(len >= 1);
        loop {
            let mut c = self.raw(rng, len);
            if c[len - 1] == 0.0 {
                c[len - 1] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            }
            let v = FiniteVector::new(c);
            if v.len() == len {
                return v;
            }
        }
    }

    fn raw(&self, rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        let sign = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        match self.kind {
            SamplerKind::Gaussian => (0..len).map(|_| rng.sample(StandardNormal)).collect(),
            SamplerKind::RademacherSparse { k } => {
                let mut c = vec![0.0; len];
                for i in index::sample(rng, len, k.min(len)).into_iter() {
                    c[i] = sign(rng);
                }
                c
            }
            SamplerKind::Geometric { r } => {
                let mut w = 1.0;
                (0..len)
                    .map(|_| {
                        let v = sign(rng) * w;
                        w *= r;
                        v
                    })
                    .collect()
            }
            SamplerKind::IndicatorRandom => (0..len)
                .map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 })
                .collect(),
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SamplerKind::Gaussian => write!(f, "gaussian")?,
            SamplerKind::RademacherSparse { k } => write!(f, "rademacher_sparse({k})")?,
            SamplerKind::Geometric { r } => write!(f, "geometric({r})")?,
            SamplerKind::IndicatorRandom => write!(f, "indicator_random")?,
        }
        write!(f, ":len={}", self.max_len)
    }
}

impl FromStr for Sampler {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        parse_sampler(text)
    }
}

pub fn parse_sampler(text: &str) -> Result<Sampler> {
    let err = |reason: String| Error::Parse {
        text: text.to_string(),
        reason,
    };
    let t = text.trim();
    let (head, params) = match t.split_once(':') {
        Some((h, p)) => (h.trim(), Some(p)),
        None => (t, None),
    };
    let (name, arg) = match head.split_once('(') {
        Some((n, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| err("unclosed `(`".into()))?;
            (n.trim(), Some(inner.trim()))
        }
        None => (head, None),
    };
    let mut len = DEFAULT_SAMPLE_LEN;
    let mut k: Option<usize> = None;
    let mut r: Option<f64> = None;
    let parse_k = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| err(format!("`{s}` is not a count")))
    };
    let parse_r = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| err(format!("`{s}` is not a number")))
    };
    if let Some(a) = arg {
        match name {
            "rademacher_sparse" => k = Some(parse_k(a)?),
            "geometric" => r = Some(parse_r(a)?),
            _ => return Err(err(format!("`{name}` takes no argument"))),
        }
    }
    if let Some(params) = params {
        for pair in params.split(',') {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{}`", pair.trim())))?;
            match (key.trim(), name) {
                ("len", _) => len = parse_k(value.trim())?,
                ("k", "rademacher_sparse") => k = Some(parse_k(value.trim())?),
                ("r", "geometric") => r = Some(parse_r(value.trim())?),
                (key, _) => return Err(err(format!("unknown key `{key}` for `{name}`"))),
            }
        }
    }
    if len == 0 {
        return Err(err("len must be positive".into()));
    }
    let kind = match name {
        "gaussian" => SamplerKind::Gaussian,
        "indicator_random" => SamplerKind::IndicatorRandom,
        "rademacher_sparse" => {
            let k = k.ok_or_else(|| err("rademacher_sparse needs k".into()))?;
            if k == 0 {
                return Err(err("k must be positive".into()));
            }
            SamplerKind::RademacherSparse { k }
        }
        "geometric" => {
            let r = r.ok_or_else(|| err("geometric needs r".into()))?;
            if !(r > 0.0 && r <= 1.0) {
                return Err(err("r must lie in (0, 1]".into()));
            }
            SamplerKind::Geometric { r }
        }
        other => return Err(err(format!("unknown sampler `{other}`"))),
    };
    Ok(Sampler { kind, max_len: len })
}
