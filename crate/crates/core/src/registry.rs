//! Name lookup shared by the protocol, method and metric registries.

use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) fn valid_names<T: Display>(all: &[T]) -> String {
    all.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Splits a comma separated list, expanding `all` to `expansion` and
/// dropping repeats (first occurrence wins).
pub(crate) fn parse_list<T>(spec: &str, expansion: &[T]) -> Result<Vec<T>>
where
    T: FromStr<Err = Error> + PartialEq + Copy,
{
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(Error::Usage(format!("empty entry in list '{spec}'")));
        }
        let items = if part.eq_ignore_ascii_case("all") {
            expansion.to_vec()
        } else {
            vec![part.parse()?]
        };
        for item in items {
            if !out.contains(&item) {
                out.push(item);
            }
        }
    }
    Ok(out)
}
