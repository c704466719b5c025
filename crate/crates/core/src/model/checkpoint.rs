//! Plain-text checkpoint.
//!
//! ```text
//! cxnet-checkpoint 1
//! config <key>=<value>          one line per config key
//! param <idx>.<kind>.<name> <real|complex> <d0>x<d1>...
//! re <values...>
//! im <values...>                complex tensors only
//! end
//! ```
//!
//! Values use the shortest representation that parses back to the same `f64`,
//! so a save/load round trip is bit-exact.

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::network::{build, Layer, Model};
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "cxnet-checkpoint 1";

fn join(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s
}

fn dims(shape: &[usize]) -> String {
    shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

enum Slot<'a> {
    Real(&'a mut [f64]),
    Complex(&'a mut [f64], &'a mut [f64]),
}

/// `(name, shape, storage)` for every parameter tensor in order.
fn slots(model: &mut Model) -> Vec<(String, Vec<usize>, Slot<'_>)> {
    let mut out = Vec::new();
    for (i, layer) in model.layers.iter_mut().enumerate() {
        let kind = layer.kind();
        match layer {
            Layer::ComplexConv(l) => {
                for (name, t) in [("kernels", &mut l.kernels), ("biases", &mut l.biases)] {
                    let shape = t.shape().to_vec();
                    let (re, im) = t.parts_mut();
                    out.push((format!("{i}.{kind}.{name}"), shape, Slot::Complex(re, im)));
                }
            }
            Layer::Conv(l) => {
                out.push((format!("{i}.{kind}.weights"), l.weights.shape().to_vec(), Slot::Real(l.weights.data_mut())));
                out.push((format!("{i}.{kind}.biases"), l.biases.shape().to_vec(), Slot::Real(l.biases.data_mut())));
            }
            Layer::Dense(l) => {
                out.push((format!("{i}.{kind}.weights"), l.weights.shape().to_vec(), Slot::Real(l.weights.data_mut())));
                out.push((format!("{i}.{kind}.biases"), l.biases.shape().to_vec(), Slot::Real(l.biases.data_mut())));
            }
            _ => {}
        }
    }
    out
}

pub fn to_text(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    for (k, v) in model.config.to_kv() {
        let _ = writeln!(out, "config {k}={v}");
    }
    let mut copy = model.clone();
    for (name, shape, slot) in slots(&mut copy) {
        match slot {
            Slot::Real(re) => {
                let _ = writeln!(out, "param {name} real {}", dims(&shape));
                let _ = writeln!(out, "re {}", join(re));
            }
            Slot::Complex(re, im) => {
                let _ = writeln!(out, "param {name} complex {}", dims(&shape));
                let _ = writeln!(out, "re {}", join(re));
                let _ = writeln!(out, "im {}", join(im));
            }
        }
    }
    out.push_str("end\n");
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_values(line_no: usize, line: &str, tag: &str, dst: &mut [f64]) -> Result<()> {
    let rest = line
        .strip_prefix(tag)
        .ok_or_else(|| parse_err(line_no, format!("expected a '{}' row", tag.trim())))?;
    let mut n = 0;
    for (slot, tok) in dst.iter_mut().zip(rest.split_ascii_whitespace()) {
        *slot = tok
            .parse()
            .map_err(|_| parse_err(line_no, format!("'{tok}' is not a number")))?;
        n += 1;
    }
    if n != dst.len() || rest.split_ascii_whitespace().count() != dst.len() {
        return Err(parse_err(line_no, format!("expected {} values", dst.len())));
    }
    Ok(())
}

pub fn from_text(text: &str) -> Result<Model> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(parse_err(1, "missing checkpoint header")),
    }
    let mut kv = Vec::new();
    let mut pending = None;
    for (no, line) in lines.by_ref() {
        if let Some(rest) = line.strip_prefix("config ") {
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| parse_err(no, "config line needs key=value"))?;
            kv.push((k.to_string(), v.to_string()));
        } else {
            pending = Some((no, line));
            break;
        }
    }
    let mut config = ModelConfig::hybrid(2, 2);
    let unknown = config.apply_kv(kv.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    if let Some(k) = unknown.first() {
        return Err(parse_err(0, format!("unknown config key '{k}'")));
    }
    let mut model = build(&config)?;
    let mut lines = pending.into_iter().chain(lines);
    for (name, shape, slot) in slots(&mut model) {
        let (no, header) = lines.next().ok_or_else(|| parse_err(0, "truncated checkpoint"))?;
        let kind = if matches!(slot, Slot::Real(_)) { "real" } else { "complex" };
        let expected = format!("param {name} {kind} {}", dims(&shape));
        if header != expected {
            return Err(parse_err(no, format!("expected '{expected}', found '{header}'")));
        }
        match slot {
            Slot::Real(re) => {
                let (no, l) = lines.next().ok_or_else(|| parse_err(no + 1, "truncated checkpoint"))?;
                parse_values(no, l, "re ", re)?;
            }
            Slot::Complex(re, im) => {
                let (no, l) = lines.next().ok_or_else(|| parse_err(no + 1, "truncated checkpoint"))?;
                parse_values(no, l, "re ", re)?;
                let (no, l) = lines.next().ok_or_else(|| parse_err(no + 1, "truncated checkpoint"))?;
                parse_values(no, l, "im ", im)?;
            }
        }
    }
    match lines.next() {
        Some((_, "end")) => Ok(model),
        Some((no, l)) => Err(parse_err(no, format!("expected 'end', found '{l}'"))),
        None => Err(parse_err(0, "missing 'end'")),
    }
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::InputEncoding;

    #[test]
    fn round_trip_is_exact() {
        for cfg in [
            ModelConfig::hybrid(40, 3),
            ModelConfig::baseline(InputEncoding::ReImTwoChannel, 40, 2),
        ] {
            let model = build(&cfg).unwrap();
            let back = from_text(&to_text(&model)).unwrap();
            assert_eq!(back, model);
        }
    }

    #[test]
    fn rejects_corruption() {
        let model = build(&ModelConfig::hybrid(40, 3)).unwrap();
        let text = to_text(&model);
        assert!(from_text(&text.replacen("param 0.cconv.kernels complex 8x1x2", "param 0.cconv.kernels complex 8x1x3", 1)).is_err());
        assert!(from_text(&text.replace("\nend\n", "\n")).is_err());
        assert!(from_text("nonsense").is_err());
    }
}
