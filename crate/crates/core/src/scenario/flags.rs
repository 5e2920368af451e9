//! Binary per-timestep indicators, written as 0/1 numbers.

use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserializer, Serializer};
use std::fmt;

pub fn serialize<S: Serializer>(flags: &[bool], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(flags.iter().map(|&b| u8::from(b)))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
    d.deserialize_seq(FlagsVisitor)
}

struct FlagsVisitor;

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum Flag {
    Bool(bool),
    Num(f64),
}

impl<'de> Visitor<'de> for FlagsVisitor {
    type Value = Vec<bool>;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("an array of 0/1 indicators")
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<bool>, A::Error> {
        let mut out = Vec::with_capacity(seq.size_hint().unwrap_or(0));
        while let Some(flag) = seq.next_element::<Flag>()? {
            out.push(match flag {
                Flag::Bool(b) => b,
                Flag::Num(0.0) => false,
                Flag::Num(1.0) => true,
                Flag::Num(x) => {
                    return Err(de::Error::custom(format!("indicator must be 0 or 1, got {x}")))
                }
            });
        }
        Ok(out)
    }
}
