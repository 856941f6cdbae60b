//! Textual group descriptors.
//!
//! Grammar (suffix optional, defaults to `@counting`):
//!
//! ```text
//! cyclic:N | product:SPEC+SPEC[+...] | dihedral:N | symmetric:N
//! z:R | z2:R | circle:N | r:H:B | affine:HU:RU:HB:RB
//! ```
//! followed by `@counting` or `@probability`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LtpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HaarNormalization {
    /// Unit mass per atom on discrete models, Lebesgue cell volume on grids.
    Counting,
    /// Total mass one; only meaningful on compact (finite) models.
    Probability,
}

impl fmt::Display for HaarNormalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HaarNormalization::Counting => f.write_str("counting"),
            HaarNormalization::Probability => f.write_str("probability"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupShape {
    Cyclic(usize),
    Product(Vec<GroupShape>),
    /// Symmetries of the regular N-gon, order 2N.
    Dihedral(usize),
    Symmetric(usize),
    /// Integer lattice of dimension `dim` truncated to the box `[-radius, radius]^dim`.
    Lattice { dim: usize, radius: usize },
    /// The circle sampled at the N-th roots of unity.
    Circle(usize),
    RealLine { step: f64, radius: f64 },
    /// ax+b group on the log-grid `u = ln a`.
    Affine {
        u_step: f64,
        u_radius: f64,
        b_step: f64,
        b_radius: f64,
    },
}

impl GroupShape {
    pub fn is_finite(&self) -> bool {
        match self {
            GroupShape::Cyclic(_)
            | GroupShape::Dihedral(_)
            | GroupShape::Symmetric(_)
            | GroupShape::Circle(_) => true,
            GroupShape::Product(parts) => parts.iter().all(GroupShape::is_finite),
            _ => false,
        }
    }
}

impl fmt::Display for GroupShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupShape::Cyclic(n) => write!(f, "cyclic:{n}"),
            GroupShape::Product(parts) => {
                f.write_str("product:")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            GroupShape::Dihedral(n) => write!(f, "dihedral:{n}"),
            GroupShape::Symmetric(n) => write!(f, "symmetric:{n}"),
            GroupShape::Lattice { dim: 1, radius } => write!(f, "z:{radius}"),
            GroupShape::Lattice { radius, .. } => write!(f, "z2:{radius}"),
            GroupShape::Circle(n) => write!(f, "circle:{n}"),
            GroupShape::RealLine { step, radius } => write!(f, "r:{step}:{radius}"),
            GroupShape::Affine {
                u_step,
                u_radius,
                b_step,
                b_radius,
            } => write!(f, "affine:{u_step}:{u_radius}:{b_step}:{b_radius}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub shape: GroupShape,
    pub normalization: HaarNormalization,
}

impl GroupSpec {
    pub fn new(shape: GroupShape, normalization: HaarNormalization) -> Self {
        GroupSpec {
            shape,
            normalization,
        }
    }

    pub fn counting(shape: GroupShape) -> Self {
        Self::new(shape, HaarNormalization::Counting)
    }

    pub fn probability(shape: GroupShape) -> Self {
        Self::new(shape, HaarNormalization::Probability)
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.shape, self.normalization)
    }
}

impl FromStr for GroupSpec {
    type Err = LtpError;

    fn from_str(input: &str) -> Result<Self> {
        let text = input.trim();
        let (body, normalization) = match text.rsplit_once('@') {
            Some((body, "counting")) => (body, HaarNormalization::Counting),
            Some((body, "probability")) => (body, HaarNormalization::Probability),
            Some((_, other)) => {
                return Err(LtpError::parse(
                    input,
                    format!("unknown normalization `{other}`"),
                ))
            }
            None => (text, HaarNormalization::Counting),
        };
        let shape = parse_shape(input, body, true)?;
        if normalization == HaarNormalization::Probability && !shape.is_finite() {
            return Err(LtpError::parse(
                input,
                "probability normalization requires a finite (compact) model",
            ));
        }
        Ok(GroupSpec {
            shape,
            normalization,
        })
    }
}

fn parse_shape(input: &str, body: &str, allow_product: bool) -> Result<GroupShape> {
    let (head, rest) = body
        .split_once(':')
        .ok_or_else(|| LtpError::parse(input, format!("`{body}` has no `:` arguments")))?;
    match head {
        "product" => {
            if !allow_product {
                return Err(LtpError::parse(input, "nested products are not supported"));
            }
            let parts = rest
                .split('+')
                .map(|p| parse_shape(input, p, false))
                .collect::<Result<Vec<_>>>()?;
            if parts.len() < 2 {
                return Err(LtpError::parse(input, "a product needs at least two factors"));
            }
            if let Some(bad) = parts.iter().find(|p| !p.is_finite()) {
                return Err(LtpError::parse(
                    input,
                    format!("product factors must be finite, got `{bad}`"),
                ));
            }
            Ok(GroupShape::Product(parts))
        }
        "cyclic" => Ok(GroupShape::Cyclic(positive_int(input, rest)?)),
        "dihedral" => Ok(GroupShape::Dihedral(positive_int(input, rest)?)),
        "symmetric" => Ok(GroupShape::Symmetric(positive_int(input, rest)?)),
        "circle" => Ok(GroupShape::Circle(positive_int(input, rest)?)),
        "z" => Ok(GroupShape::Lattice {
            dim: 1,
            radius: positive_int(input, rest)?,
        }),
        "z2" => Ok(GroupShape::Lattice {
            dim: 2,
            radius: positive_int(input, rest)?,
        }),
        "r" => {
            let v = positive_reals(input, rest, 2)?;
            Ok(GroupShape::RealLine {
                step: v[0],
                radius: v[1],
            })
        }
        "affine" => {
            let v = positive_reals(input, rest, 4)?;
            Ok(GroupShape::Affine {
                u_step: v[0],
                u_radius: v[1],
                b_step: v[2],
                b_radius: v[3],
            })
        }
        other => Err(LtpError::parse(input, format!("unknown constructor `{other}`"))),
    }
}

fn positive_int(input: &str, text: &str) -> Result<usize> {
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| LtpError::parse(input, format!("`{text}` is not a positive integer")))?;
    if n == 0 {
        return Err(LtpError::parse(input, "sizes must be positive"));
    }
    Ok(n)
}

fn positive_reals(input: &str, text: &str, count: usize) -> Result<Vec<f64>> {
    let values = text
        .split(':')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| LtpError::parse(input, format!("`{t}` is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != count {
        return Err(LtpError::parse(
            input,
            format!("expected {count} numeric arguments, got {}", values.len()),
        ));
    }
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(LtpError::parse(
            input,
            format!("steps and radii must be positive, got {bad}"),
        ));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_forms() {
        let cases = [
            ("cyclic:4", "cyclic:4@counting"),
            ("cyclic:8@probability", "cyclic:8@probability"),
            ("product:cyclic:2+cyclic:12", "product:cyclic:2+cyclic:12@counting"),
            ("dihedral:4", "dihedral:4@counting"),
            ("symmetric:4@probability", "symmetric:4@probability"),
            ("z:64@counting", "z:64@counting"),
            ("z2:10", "z2:10@counting"),
            ("circle:8@probability", "circle:8@probability"),
            ("r:0.1:3", "r:0.1:3@counting"),
            ("affine:0.25:2:0.25:4", "affine:0.25:2:0.25:4@counting"),
        ];
        for (text, canonical) in cases {
            let spec: GroupSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), canonical);
            let again: GroupSpec = canonical.parse().unwrap();
            assert_eq!(again, spec);
        }
    }

    #[test]
    fn rejects_bad_sizes_and_forms() {
        for bad in [
            "cyclic:0",
            "cyclic:-3",
            "cyclic",
            "z:0",
            "r:0:1",
            "r:-0.1:1",
            "affine:0.25:2:0.25",
            "cyclic:4@haar",
            "torus:3",
            "product:cyclic:2",
            "product:cyclic:2+z:3",
            "z:4@probability",
        ] {
            assert!(bad.parse::<GroupSpec>().is_err(), "{bad} should not parse");
        }
    }
}
