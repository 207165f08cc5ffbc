//! The Banach-limit functional on almost-convergent sequences and the
//! topology-compact state it induces on diagonal observables.
//!
//! Sequences are a finite prefix followed by either a repeating period or a
//! tail converging to a known limit. Every Banach limit agrees on this class,
//! so the value is well defined; outside it the toolkit offers nothing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Tail {
    /// The values repeat forever.
    Periodic { values: Vec<f64> },
    /// The sequence converges to `limit`. For elementwise arithmetic the tail
    /// is taken to be the constant `limit`; the approach path never affects
    /// the Banach limit.
    Convergent { limit: f64 },
}

impl Tail {
    fn validate(&self) -> Result<()> {
        match self {
            Tail::Periodic { values } => {
                if values.is_empty() {
                    return Err(Error::Empty("period"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("period"));
                }
            }
            Tail::Convergent { limit } => {
                if !limit.is_finite() {
                    return Err(Error::NonFinite("limit"));
                }
            }
        }
        Ok(())
    }

    fn period(&self) -> usize {
        match self {
            Tail::Periodic { values } => values.len(),
            Tail::Convergent { .. } => 1,
        }
    }

    /// `j`-th element of the tail (0-based, counted from the end of the prefix).
    fn element(&self, j: usize) -> f64 {
        match self {
            Tail::Periodic { values } => values[j % values.len()],
            Tail::Convergent { limit } => *limit,
        }
    }
}

impl FromStr for Tail {
    type Err = Error;

    /// `periodic:v1,v2,...` or `convergent:c`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, payload) =
            s.split_once(':').ok_or_else(|| Error::Parse(format!("tail {s:?}: expected `kind:payload`")))?;
        let tail = match kind.trim() {
            "periodic" => Tail::Periodic { values: parse_list(payload)? },
            "convergent" => Tail::Convergent { limit: parse_number(payload)? },
            other => return Err(Error::Parse(format!("unknown tail kind {other:?}"))),
        };
        tail.validate()?;
        Ok(tail)
    }
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tail::Periodic { values } => {
                let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "periodic:{}", parts.join(","))
            }
            Tail::Convergent { limit } => write!(f, "convergent:{limit}"),
        }
    }
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

/// Comma-separated reals; the empty string is the empty list.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_number).collect()
}

/// A bounded real sequence: `prefix` then `tail`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlmostConvergentSequence {
    pub prefix: Vec<f64>,
    pub tail: Tail,
}

impl AlmostConvergentSequence {
    pub fn new(prefix: Vec<f64>, tail: Tail) -> Result<Self> {
        if prefix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prefix"));
        }
        tail.validate()?;
        Ok(AlmostConvergentSequence { prefix, tail })
    }

    pub fn periodic(prefix: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(prefix, Tail::Periodic { values })
    }

    pub fn convergent(prefix: Vec<f64>, limit: f64) -> Result<Self> {
        Self::new(prefix, Tail::Convergent { limit })
    }

    /// The constant sequence `(1, 1, ...)`.
    pub fn ones() -> Self {
        AlmostConvergentSequence { prefix: Vec::new(), tail: Tail::Convergent { limit: 1.0 } }
    }

    /// Element `n` (0-based).
    pub fn element(&self, n: usize) -> f64 {
        match self.prefix.get(n) {
            Some(&v) => v,
            None => self.tail.element(n - self.prefix.len()),
        }
    }

    /// The first `n` elements.
    pub fn terms(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.element(i)).collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        let tail_ok = match &self.tail {
            Tail::Periodic { values } => values.iter().all(|&v| v >= 0.0),
            Tail::Convergent { limit } => *limit >= 0.0,
        };
        tail_ok && self.prefix.iter().all(|&v| v >= 0.0)
    }

    /// Elementwise `a·x + b·y`, represented exactly.
    pub fn linear_combination(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        let start = x.prefix.len().max(y.prefix.len());
        let prefix = (0..start).map(|n| a * x.element(n) + b * y.element(n)).collect();
        let tail = match (&x.tail, &y.tail) {
            (Tail::Convergent { limit: cx }, Tail::Convergent { limit: cy }) => {
                Tail::Convergent { limit: a * cx + b * cy }
            }
            _ => {
                let period = lcm(x.tail.period(), y.tail.period());
                let values = (start..start + period).map(|n| a * x.element(n) + b * y.element(n)).collect();
                Tail::Periodic { values }
            }
        };
        AlmostConvergentSequence { prefix, tail }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// The common value of every Banach limit: the period mean for periodic
/// tails, the limit for convergent ones. The prefix never matters.
pub fn banach_limit(x: &AlmostConvergentSequence) -> f64 {
    match &x.tail {
        Tail::Periodic { values } => values.iter().sum::<f64>() / values.len() as f64,
        Tail::Convergent { limit } => *limit,
    }
}

/// `(Sx)_1 = 0`, `(Sx)_{n+1} = x_n`.
pub fn shift(x: &AlmostConvergentSequence) -> AlmostConvergentSequence {
    let mut prefix = Vec::with_capacity(x.prefix.len() + 1);
    prefix.push(0.0);
    prefix.extend_from_slice(&x.prefix);
    AlmostConvergentSequence { prefix, tail: x.tail.clone() }
}

/// A diagonal observable over a countable world, given by its eigenvalue
/// sequence. The world is only named; the desk model never materializes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceObservable {
    pub world: String,
    pub eigenvalues: AlmostConvergentSequence,
}

impl SequenceObservable {
    pub fn new(world: impl Into<String>, eigenvalues: AlmostConvergentSequence) -> Self {
        SequenceObservable { world: world.into(), eigenvalues }
    }
}

/// `ω_L(O) = L((λ_n))`.
pub fn topo_state_expectation(obs: &SequenceObservable) -> f64 {
    banach_limit(&obs.eigenvalues)
}

/// True for the representable compact observables: eigenvalues tending to 0.
pub fn annihilates_compact(obs: &SequenceObservable) -> bool {
    matches!(obs.eigenvalues.tail, Tail::Convergent { limit } if limit == 0.0) && topo_state_expectation(obs) == 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_examples() {
        let x = AlmostConvergentSequence::convergent(vec![9.0, -4.0], 3.0).unwrap();
        assert_eq!(banach_limit(&x), 3.0);
        let x = AlmostConvergentSequence::periodic(vec![], vec![0.0, 1.0]).unwrap();
        assert_eq!(banach_limit(&x), 0.5);
        let x = AlmostConvergentSequence::periodic(vec![100.0, -100.0], vec![2.0, 4.0, 6.0]).unwrap();
        assert_eq!(banach_limit(&x), 4.0);
    }

    #[test]
    fn alternating_sequence_forced_to_half() {
        // L(x) + L(Sx) = L(1,1,...) for x = (0,1,0,1,...), and L(Sx) = L(x).
        let x = AlmostConvergentSequence::periodic(vec![], vec![0.0, 1.0]).unwrap();
        let sum = AlmostConvergentSequence::linear_combination(1.0, &x, 1.0, &shift(&x));
        assert_eq!(sum.terms(5), vec![0.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(banach_limit(&sum), 1.0);
        assert_eq!(banach_limit(&x), banach_limit(&shift(&x)));
    }

    #[test]
    fn shift_examples() {
        let x = AlmostConvergentSequence::periodic(vec![], vec![0.0, 1.0]).unwrap();
        let s = shift(&x);
        assert_eq!(s.prefix, vec![0.0]);
        assert_eq!(s.tail, x.tail);
        let mut y = x.clone();
        for _ in 0..10 {
            y = shift(&y);
            assert_eq!(banach_limit(&y), banach_limit(&x));
        }
        assert_eq!(y.prefix.len(), 10);
    }

    #[test]
    fn topo_state_examples() {
        assert_eq!(topo_state_expectation(&SequenceObservable::new("W", AlmostConvergentSequence::ones())), 1.0);
        let compact = SequenceObservable::new("W", AlmostConvergentSequence::convergent(vec![1.0, 0.5], 0.0).unwrap());
        assert_eq!(topo_state_expectation(&compact), 0.0);
        let alt = SequenceObservable::new("W", AlmostConvergentSequence::periodic(vec![], vec![1.0, -1.0]).unwrap());
        assert_eq!(topo_state_expectation(&alt), 0.0);
    }

    #[test]
    fn compact_annihilation_examples() {
        let c0 = SequenceObservable::new("W", AlmostConvergentSequence::convergent(vec![], 0.0).unwrap());
        assert!(annihilates_compact(&c0));
        let finite_rank =
            SequenceObservable::new("W", AlmostConvergentSequence::convergent(vec![5.0, 3.0], 0.0).unwrap());
        assert!(annihilates_compact(&finite_rank));
        assert_eq!(topo_state_expectation(&finite_rank), 0.0);
        let ones = SequenceObservable::new("W", AlmostConvergentSequence::periodic(vec![], vec![1.0]).unwrap());
        assert!(!annihilates_compact(&ones));
        // Zero period mean is not enough: the eigenvalues must tend to zero.
        let alt = SequenceObservable::new("W", AlmostConvergentSequence::periodic(vec![], vec![1.0, -1.0]).unwrap());
        assert!(!annihilates_compact(&alt));
    }

    #[test]
    fn tail_parsing() {
        assert_eq!("periodic:2,4,6".parse::<Tail>().unwrap(), Tail::Periodic { values: vec![2.0, 4.0, 6.0] });
        assert_eq!("convergent:-1.5".parse::<Tail>().unwrap(), Tail::Convergent { limit: -1.5 });
        assert!("periodic:".parse::<Tail>().is_err());
        assert!("sawtooth:1".parse::<Tail>().is_err());
        assert!("convergent:abc".parse::<Tail>().is_err());
        assert!("convergent:inf".parse::<Tail>().is_err());
        let t: Tail = "periodic:0.1,2".parse().unwrap();
        assert_eq!(t.to_string().parse::<Tail>().unwrap(), t);
    }

    #[test]
    fn invalid_representations() {
        assert!(AlmostConvergentSequence::periodic(vec![], vec![]).is_err());
        assert!(AlmostConvergentSequence::convergent(vec![f64::NAN], 0.0).is_err());
    }

    #[test]
    fn json_form_is_tagged() {
        let x = AlmostConvergentSequence::periodic(vec![1.0], vec![2.0, 3.0]).unwrap();
        let text = serde_json::to_string(&x).unwrap();
        assert_eq!(text, r#"{"prefix":[1.0],"tail":{"kind":"periodic","values":[2.0,3.0]}}"#);
        assert_eq!(serde_json::from_str::<AlmostConvergentSequence>(&text).unwrap(), x);
    }
}
