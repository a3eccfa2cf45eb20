//! Named analytic signals and sample tables used for boundary data, forcing
//! and initial profiles.
//!
//! Tags: `zero`, `const:c`, `ramp:a` (a·s), `exp:a,r` (a·e^{-rs}),
//! `gauss:a,c,w` (a·e^{-w(s-c)²}), `sin:a,w` (a·sin(ws)),
//! `bump:a,c,w` (a·(s-c)²e^{-w(s-c)²}).

use anyhow::{anyhow, bail, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum Tag {
    Zero,
    Const(f64),
    Ramp(f64),
    Exp { a: f64, r: f64 },
    Gauss { a: f64, c: f64, w: f64 },
    Sin { a: f64, w: f64 },
    Bump { a: f64, c: f64, w: f64 },
}

impl Tag {
    pub fn parse(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), a),
            None => (s.trim(), ""),
        };
        let nums: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| anyhow!("bad number {v:?} in signal {s:?}")))
                .collect::<Result<_>>()?
        };
        if nums.iter().any(|v| !v.is_finite()) {
            bail!("non-finite argument in signal {s:?}");
        }
        let want = |n: usize| -> Result<()> {
            if nums.len() != n {
                bail!("signal {name:?} takes {n} argument(s), got {}", nums.len());
            }
            Ok(())
        };
        Ok(match name {
            "zero" => {
                want(0)?;
                Tag::Zero
            }
            "const" => {
                want(1)?;
                Tag::Const(nums[0])
            }
            "ramp" => {
                want(1)?;
                Tag::Ramp(nums[0])
            }
            "exp" => {
                want(2)?;
                Tag::Exp { a: nums[0], r: nums[1] }
            }
            "gauss" => {
                want(3)?;
                Tag::Gauss { a: nums[0], c: nums[1], w: nums[2] }
            }
            "sin" => {
                want(2)?;
                Tag::Sin { a: nums[0], w: nums[1] }
            }
            "bump" => {
                want(3)?;
                Tag::Bump { a: nums[0], c: nums[1], w: nums[2] }
            }
            other => bail!("unknown signal {other:?}"),
        })
    }

    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Tag::Zero => 0.0,
            Tag::Const(c) => c,
            Tag::Ramp(a) => a * s,
            Tag::Exp { a, r } => a * (-r * s).exp(),
            Tag::Gauss { a, c, w } => a * (-w * (s - c).powi(2)).exp(),
            Tag::Sin { a, w } => a * (w * s).sin(),
            Tag::Bump { a, c, w } => a * (s - c).powi(2) * (-w * (s - c).powi(2)).exp(),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            Tag::Zero | Tag::Const(_) => 0.0,
            Tag::Ramp(a) => a,
            Tag::Exp { a, r } => -a * r * (-r * s).exp(),
            Tag::Gauss { a, c, w } => -2.0 * w * (s - c) * a * (-w * (s - c).powi(2)).exp(),
            Tag::Sin { a, w } => a * w * (w * s).cos(),
            Tag::Bump { a, c, w } => {
                let d = s - c;
                a * (2.0 * d - 2.0 * w * d.powi(3)) * (-w * d * d).exp()
            }
        }
    }
}

/// A signal given either as a tag or as uniformly spaced samples
/// (linear between samples, constant beyond the ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalSpec {
    Tag(String),
    Table {
        #[serde(default)]
        start: f64,
        step: f64,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub enum Signal {
    Tag(Tag),
    Table { start: f64, step: f64, values: Vec<f64> },
}

impl SignalSpec {
    pub fn build(&self) -> Result<Signal> {
        match self {
            SignalSpec::Tag(s) => Ok(Signal::Tag(Tag::parse(s)?)),
            SignalSpec::Table { start, step, values } => {
                if !(*step > 0.0) || values.len() < 2 {
                    bail!("a sample table needs a positive step and at least two values");
                }
                if values.iter().any(|v| !v.is_finite()) || !start.is_finite() {
                    bail!("a sample table contains non-finite values");
                }
                Ok(Signal::Table { start: *start, step: *step, values: values.clone() })
            }
        }
    }
}

impl Signal {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Signal::Tag(t) => t.value(s),
            Signal::Table { start, step, values } => {
                let u = ((s - start) / step).max(0.0);
                let i = u.floor() as usize;
                if i + 1 >= values.len() {
                    return values[values.len() - 1];
                }
                let w = u - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }
}

/// f(t, x) as `zero`, a single tag in t, or a product of a tag in t and a
/// tag in x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ForcingSpec {
    Tag(String),
    Product { t: SignalSpec, x: SignalSpec },
}

impl Default for ForcingSpec {
    fn default() -> Self {
        ForcingSpec::Tag("zero".into())
    }
}

impl ForcingSpec {
    pub fn build(&self) -> Result<(Signal, Signal)> {
        match self {
            ForcingSpec::Tag(s) => Ok((Signal::Tag(Tag::parse(s)?), Signal::Tag(Tag::Const(1.0)))),
            ForcingSpec::Product { t, x } => Ok((t.build()?, x.build()?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tags() {
        assert_eq!(Tag::parse("zero").unwrap(), Tag::Zero);
        assert_eq!(Tag::parse("gauss:1, 3,2").unwrap(), Tag::Gauss { a: 1.0, c: 3.0, w: 2.0 });
        assert!(Tag::parse("gauss:1,2").is_err());
        assert!(Tag::parse("wobble:1").is_err());
        assert!(Tag::parse("const:x").is_err());
    }

    #[test]
    fn derivatives_match_differences() {
        for s in ["ramp:2", "exp:1.5,0.7", "gauss:1,3,2", "sin:0.5,3", "bump:1,1,0.5", "const:4"] {
            let t = Tag::parse(s).unwrap();
            for x in [0.0, 0.3, 1.7, 3.2] {
                let h = 1e-5;
                let fd = (t.value(x + h) - t.value(x - h)) / (2.0 * h);
                assert!((fd - t.derivative(x)).abs() < 1e-8, "{s} at {x}");
            }
        }
    }

    #[test]
    fn tables_interpolate() {
        let spec: SignalSpec = serde_json::from_str(r#"{"step": 0.5, "values": [0, 1, 4]}"#).unwrap();
        let s = spec.build().unwrap();
        assert_eq!(s.value(0.25), 0.5);
        assert_eq!(s.value(0.75), 2.5);
        assert_eq!(s.value(9.0), 4.0);
        let f: ForcingSpec = serde_json::from_str(r#"{"t": "exp:1,1", "x": "const:2"}"#).unwrap();
        let (a, b) = f.build().unwrap();
        assert_eq!(a.value(0.0) * b.value(5.0), 2.0);
    }
}
