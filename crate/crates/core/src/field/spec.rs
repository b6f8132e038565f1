//! Field specifications and their textual syntax.
//!
//! ```text
//! p_laplacian(p=4)
//! separable(f=power(p=4), g=wavy(a=0.5))
//! mollify(modify(g0_cubic, M=2), eps=0.05)
//! ```

use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Default number of quadrature nodes per polar axis for mollification.
pub const DEFAULT_KERNEL_ORDER: usize = 8;

/// One-dimensional convex profile used by separable fields; the variant stores the
/// parameters of the derivative `f'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile1d {
    /// `f'(t) = a t`.
    Linear { a: f64 },
    /// `f'(t) = |t|^(p-2) t`.
    Power { p: f64 },
    /// `f'(t) = t + a sin t`.
    Wavy { a: f64 },
}

impl Profile1d {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Profile1d::Linear { a } if !(a > 0.0 && a.is_finite()) => {
                Err(Error::InvalidParameter(format!("linear profile needs a > 0, got {a}")))
            }
            Profile1d::Power { p } if !(p > 1.0 && p.is_finite()) => {
                Err(Error::InvalidParameter(format!("power profile needs p > 1, got {p}")))
            }
            Profile1d::Wavy { a } if !(a.abs() <= 1.0) => {
                Err(Error::InvalidParameter(format!("wavy profile needs |a| <= 1, got {a}")))
            }
            _ => Ok(()),
        }
    }

    /// `f'(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Profile1d::Linear { a } => a * t,
            Profile1d::Power { p } => {
                if t == 0.0 {
                    0.0
                } else {
                    t.abs().powf(p - 2.0) * t
                }
            }
            Profile1d::Wavy { a } => t + a * t.sin(),
        }
    }

    /// `f''(t)`, capped at `1e12` where it is infinite.
    pub fn second_derivative(&self, t: f64) -> f64 {
        match *self {
            Profile1d::Linear { a } => a,
            Profile1d::Power { p } => {
                if t == 0.0 {
                    if p > 2.0 {
                        0.0
                    } else if p == 2.0 {
                        1.0
                    } else {
                        1e12
                    }
                } else {
                    ((p - 1.0) * t.abs().powf(p - 2.0)).min(1e12)
                }
            }
            Profile1d::Wavy { a } => 1.0 + a * t.cos(),
        }
    }

    /// The convex primitive `f(t)`, normalized by `f(0) = 0`.
    pub fn potential(&self, t: f64) -> f64 {
        match *self {
            Profile1d::Linear { a } => 0.5 * a * t * t,
            Profile1d::Power { p } => t.abs().powf(p) / p,
            Profile1d::Wavy { a } => 0.5 * t * t + a * (1.0 - t.cos()),
        }
    }
}

impl fmt::Display for Profile1d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile1d::Linear { a } => write!(f, "linear(a={a})"),
            Profile1d::Power { p } => write!(f, "power(p={p})"),
            Profile1d::Wavy { a } => write!(f, "wavy(a={a})"),
        }
    }
}

/// One step of a transform chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Transform {
    /// `xi -> i G^{-1}(-i xi)`.
    Dual,
    /// Modification at infinity outside `B_M`.
    Modify { radius: f64 },
    /// Mollification plus `eps * xi`.
    Mollify { eps: f64, order: usize },
}

impl Transform {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Transform::Dual => Ok(()),
            Transform::Modify { radius } if !(radius > 0.0 && radius.is_finite()) => {
                Err(Error::InvalidParameter(format!("modify needs M > 0, got {radius}")))
            }
            Transform::Mollify { eps, .. } if !(eps > 0.0 && eps < 1.0) => {
                Err(Error::InvalidParameter(format!("mollify needs eps in (0, 1), got {eps}")))
            }
            Transform::Mollify { order, .. } if order == 0 || order > 64 => {
                Err(Error::InvalidParameter(format!("mollify order must be in 1..=64, got {order}")))
            }
            _ => Ok(()),
        }
    }
}

/// A catalog field or a transform chain applied to one.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Identity,
    PLaplacian { p: f64 },
    RotationalGm { m: f64 },
    G0Cubic,
    Separable { f: Profile1d, g: Profile1d },
    PathologicalSin,
    CounterexampleS6,
    Composite { base: Box<FieldSpec>, chain: Vec<Transform> },
}

impl FieldSpec {
    /// Catalog fields without transforms, with representative parameters.
    pub fn catalog() -> Vec<FieldSpec> {
        vec![
            FieldSpec::Identity,
            FieldSpec::PLaplacian { p: 4.0 },
            FieldSpec::PLaplacian { p: 1.5 },
            FieldSpec::RotationalGm { m: 0.5 },
            FieldSpec::G0Cubic,
            FieldSpec::Separable { f: Profile1d::Power { p: 4.0 }, g: Profile1d::Wavy { a: 0.5 } },
            FieldSpec::PathologicalSin,
            FieldSpec::CounterexampleS6,
        ]
    }

    /// Applies `t` after the transforms already present.
    pub fn then(self, t: Transform) -> FieldSpec {
        match self {
            FieldSpec::Composite { base, mut chain } => {
                chain.push(t);
                FieldSpec::Composite { base, chain }
            }
            other => FieldSpec::Composite { base: Box::new(other), chain: vec![t] },
        }
    }

    pub fn dual(self) -> FieldSpec {
        self.then(Transform::Dual)
    }

    pub fn modify(self, radius: f64) -> FieldSpec {
        self.then(Transform::Modify { radius })
    }

    pub fn mollify(self, eps: f64) -> FieldSpec {
        self.then(Transform::Mollify { eps, order: DEFAULT_KERNEL_ORDER })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FieldSpec::PLaplacian { p } if !(*p > 1.0 && p.is_finite()) => {
                Err(Error::InvalidParameter(format!("p_laplacian needs p > 1, got {p}")))
            }
            FieldSpec::RotationalGm { m } if !(m.abs() <= 0.5) => {
                Err(Error::InvalidParameter(format!("rotational_gm needs |m| <= 1/2, got {m}")))
            }
            FieldSpec::Separable { f, g } => {
                f.validate()?;
                g.validate()
            }
            FieldSpec::Composite { base, chain } => {
                if matches!(**base, FieldSpec::Composite { .. }) {
                    return Err(Error::InvalidParameter("nested composite base".into()));
                }
                base.validate()?;
                chain.iter().try_for_each(Transform::validate)
            }
            _ => Ok(()),
        }
    }

    /// Human readable label; identical to the textual syntax.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Identity => write!(f, "identity"),
            FieldSpec::PLaplacian { p } => write!(f, "p_laplacian(p={p})"),
            FieldSpec::RotationalGm { m } => write!(f, "rotational_gm(m={m})"),
            FieldSpec::G0Cubic => write!(f, "g0_cubic"),
            FieldSpec::Separable { f: a, g: b } => write!(f, "separable(f={a}, g={b})"),
            FieldSpec::PathologicalSin => write!(f, "pathological_sin"),
            FieldSpec::CounterexampleS6 => write!(f, "counterexample_s6"),
            FieldSpec::Composite { base, chain } => {
                let mut text = base.to_string();
                for t in chain {
                    text = match t {
                        Transform::Dual => format!("dual({text})"),
                        Transform::Modify { radius } => format!("modify({text}, M={radius})"),
                        Transform::Mollify { eps, order } if *order == DEFAULT_KERNEL_ORDER => {
                            format!("mollify({text}, eps={eps})")
                        }
                        Transform::Mollify { eps, order } => {
                            format!("mollify({text}, eps={eps}, order={order})")
                        }
                    };
                }
                f.write_str(&text)
            }
        }
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s.as_bytes(), pos: 0 };
        let node = p.node()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        let spec = field_from_node(&node)?;
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for FieldSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug)]
enum Arg {
    Num(f64),
    Node(Node),
}

#[derive(Debug)]
struct Node {
    name: String,
    positional: Vec<Arg>,
    named: Vec<(String, Arg)>,
}

impl Node {
    fn take_num(&self, key: &str, position: Option<usize>) -> Result<Option<f64>> {
        if let Some((_, arg)) = self.named.iter().find(|(k, _)| k == key) {
            return match arg {
                Arg::Num(v) => Ok(Some(*v)),
                Arg::Node(_) => Err(Error::Parse(format!("{}: '{key}' must be a number", self.name))),
            };
        }
        if let Some(i) = position {
            if let Some(Arg::Num(v)) = self.positional.get(i) {
                return Ok(Some(*v));
            }
        }
        Ok(None)
    }

    fn require_num(&self, key: &str, position: Option<usize>) -> Result<f64> {
        self.take_num(key, position)?
            .ok_or_else(|| Error::Parse(format!("{}: missing parameter '{key}'", self.name)))
    }

    fn check_keys(&self, allowed: &[&str], max_positional: usize) -> Result<()> {
        if let Some((k, _)) = self.named.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::Parse(format!("{}: unknown parameter '{k}'", self.name)));
        }
        if self.positional.len() > max_positional {
            return Err(Error::Parse(format!("{}: too many arguments", self.name)));
        }
        Ok(())
    }

    fn child(&self, key: &str, position: usize) -> Result<&Node> {
        let arg = self
            .named
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, a)| a)
            .or_else(|| self.positional.get(position));
        match arg {
            Some(Arg::Node(n)) => Ok(n),
            _ => Err(Error::Parse(format!("{}: missing field argument '{key}'", self.name))),
        }
    }
}

fn profile_from_node(node: &Node) -> Result<Profile1d> {
    let profile = match node.name.as_str() {
        "linear" => {
            node.check_keys(&["a"], 1)?;
            Profile1d::Linear { a: node.take_num("a", Some(0))?.unwrap_or(1.0) }
        }
        "power" => {
            node.check_keys(&["p"], 1)?;
            Profile1d::Power { p: node.require_num("p", Some(0))? }
        }
        "wavy" => {
            node.check_keys(&["a"], 1)?;
            Profile1d::Wavy { a: node.require_num("a", Some(0))? }
        }
        other => return Err(Error::Parse(format!("unknown profile '{other}'"))),
    };
    profile.validate()?;
    Ok(profile)
}

fn field_from_node(node: &Node) -> Result<FieldSpec> {
    let spec = match node.name.as_str() {
        "identity" => {
            node.check_keys(&[], 0)?;
            FieldSpec::Identity
        }
        "p_laplacian" => {
            node.check_keys(&["p"], 1)?;
            FieldSpec::PLaplacian { p: node.require_num("p", Some(0))? }
        }
        "rotational_gm" => {
            node.check_keys(&["m"], 1)?;
            FieldSpec::RotationalGm { m: node.require_num("m", Some(0))? }
        }
        "g0_cubic" => {
            node.check_keys(&[], 0)?;
            FieldSpec::G0Cubic
        }
        "separable" => {
            node.check_keys(&["f", "g"], 2)?;
            FieldSpec::Separable {
                f: profile_from_node(node.child("f", 0)?)?,
                g: profile_from_node(node.child("g", 1)?)?,
            }
        }
        "pathological_sin" => {
            node.check_keys(&[], 0)?;
            FieldSpec::PathologicalSin
        }
        "counterexample_s6" => {
            node.check_keys(&[], 0)?;
            FieldSpec::CounterexampleS6
        }
        "dual" => {
            node.check_keys(&["field"], 1)?;
            field_from_node(node.child("field", 0)?)?.then(Transform::Dual)
        }
        "modify" => {
            node.check_keys(&["field", "M"], 2)?;
            let radius = node.require_num("M", Some(1))?;
            field_from_node(node.child("field", 0)?)?.then(Transform::Modify { radius })
        }
        "mollify" => {
            node.check_keys(&["field", "eps", "order"], 3)?;
            let eps = node.require_num("eps", Some(1))?;
            let order = node.take_num("order", Some(2))?.unwrap_or(DEFAULT_KERNEL_ORDER as f64);
            if order.fract() != 0.0 || order < 1.0 {
                return Err(Error::Parse(format!("mollify: order must be a positive integer, got {order}")));
            }
            field_from_node(node.child("field", 0)?)?.then(Transform::Mollify { eps, order: order as usize })
        }
        other => return Err(Error::Parse(format!("unknown field '{other}'"))),
    };
    Ok(spec)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos || self.src[start].is_ascii_digit() {
            return Err(self.error("expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<f64> {
        let first = self.scalar()?;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let den = self.scalar()?;
            return Ok(first / den);
        }
        Ok(first)
    }

    fn scalar(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let sign_ok = (c == b'-' || c == b'+')
                && (self.pos == start || matches!(self.src[self.pos - 1], b'e' | b'E'));
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || sign_ok {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.error(&format!("invalid number '{text}'")))
    }

    fn arg(&mut self) -> Result<Arg> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'-' || c == b'+' || c == b'.' => Ok(Arg::Num(self.number()?)),
            Some(_) => Ok(Arg::Node(self.node()?)),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn node(&mut self) -> Result<Node> {
        let name = self.ident()?;
        let mut node = Node { name, positional: Vec::new(), named: Vec::new() };
        if self.peek() != Some(b'(') {
            return Ok(node);
        }
        self.pos += 1;
        if self.peek() == Some(b')') {
            self.pos += 1;
            return Ok(node);
        }
        loop {
            let save = self.pos;
            let named = match self.peek() {
                Some(c) if c.is_ascii_alphabetic() => {
                    let key = self.ident()?;
                    if self.peek() == Some(b'=') {
                        self.pos += 1;
                        Some(key)
                    } else {
                        self.pos = save;
                        None
                    }
                }
                _ => None,
            };
            let value = self.arg()?;
            match named {
                Some(key) => {
                    if node.named.iter().any(|(k, _)| *k == key) {
                        return Err(self.error(&format!("duplicate parameter '{key}'")));
                    }
                    node.named.push((key, value));
                }
                None if node.named.is_empty() => node.positional.push(value),
                None => return Err(self.error("positional argument after named argument")),
            }
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    return Ok(node);
                }
                _ => return Err(self.error("expected ',' or ')'")),
            }
        }
    }
}
