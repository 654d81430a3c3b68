//! Layer-list network descriptions.
//!
//! One layer per line, whitespace separated, `#` starts a comment:
//!
//! ```text
//! conv u_w u_h c_i k_w k_h c_o
//! fc n_i n_o
//! nonlinear <label>
//! ```

use std::fmt;
use std::path::Path;

use gala_core::ConvShape;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    Conv { u_w: usize, u_h: usize, c_i: usize, k_w: usize, k_h: usize, c_o: usize },
    Fc { n_i: usize, n_o: usize },
    Nonlinear { label: String },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::Fc { .. } => "fc",
            LayerSpec::Nonlinear { .. } => "nonlinear",
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, LayerSpec::Nonlinear { .. })
    }

    pub fn conv_shape(&self, n: usize) -> Option<ConvShape> {
        match *self {
            LayerSpec::Conv { u_w, u_h, c_i, k_w, k_h, c_o } => Some(ConvShape { u_w, u_h, c_i, c_o, k_w, k_h, n }),
            _ => None,
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv { u_w, u_h, c_i, k_w, k_h, c_o } => {
                write!(f, "conv {u_w}x{u_h}@{c_i} {k_w}x{k_h}@{c_o}")
            }
            LayerSpec::Fc { n_i, n_o } => write!(f, "fc {n_i}->{n_o}"),
            LayerSpec::Nonlinear { label } => write!(f, "{label}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn numbers<const N: usize>(fields: &[&str], line: usize, what: &str) -> Result<[usize; N], ParseError> {
    if fields.len() != N {
        return Err(ParseError {
            line,
            message: format!("'{what}' takes {N} integers, found {}", fields.len()),
        });
    }
    let mut out = [0usize; N];
    for (slot, field) in out.iter_mut().zip(fields) {
        *slot = field.parse().map_err(|_| ParseError {
            line,
            message: format!("'{field}' is not a non-negative integer"),
        })?;
        if *slot == 0 {
            return Err(ParseError { line, message: format!("'{what}' dimensions must be positive") });
        }
    }
    Ok(out)
}

pub fn parse_network(text: &str) -> Result<Vec<LayerSpec>, ParseError> {
    let mut layers = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        let Some((&kind, rest)) = fields.split_first() else {
            continue;
        };
        let layer = match kind {
            "conv" => {
                let [u_w, u_h, c_i, k_w, k_h, c_o] = numbers::<6>(rest, line, kind)?;
                if k_w % 2 == 0 || k_h % 2 == 0 {
                    return Err(ParseError { line, message: format!("kernel {k_w}x{k_h} must be odd") });
                }
                LayerSpec::Conv { u_w, u_h, c_i, k_w, k_h, c_o }
            }
            "fc" => {
                let [n_i, n_o] = numbers::<2>(rest, line, kind)?;
                LayerSpec::Fc { n_i, n_o }
            }
            "nonlinear" => match rest {
                [label] => LayerSpec::Nonlinear { label: (*label).to_owned() },
                _ => {
                    return Err(ParseError { line, message: "'nonlinear' takes exactly one label".into() });
                }
            },
            other => return Err(ParseError { line, message: format!("unknown layer kind '{other}'") }),
        };
        layers.push(layer);
    }
    Ok(layers)
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read network {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
}

pub fn load_network(path: &Path) -> Result<Vec<LayerSpec>, LoadError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: shown.clone(), source })?;
    parse_network(&text).map_err(|source| LoadError::Parse { path: shown, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_comments() {
        assert_eq!(parse_network("").unwrap(), vec![]);
        assert_eq!(parse_network("# nothing\n\n   # here\n").unwrap(), vec![]);
    }

    #[test]
    fn one_of_each() {
        let text = "conv 16 16 128 3 3 128  # block\nfc 512 10\nnonlinear relu\n";
        assert_eq!(
            parse_network(text).unwrap(),
            vec![
                LayerSpec::Conv { u_w: 16, u_h: 16, c_i: 128, k_w: 3, k_h: 3, c_o: 128 },
                LayerSpec::Fc { n_i: 512, n_o: 10 },
                LayerSpec::Nonlinear { label: "relu".into() },
            ]
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("fc 1 2\npool 2\n", 2, "unknown layer kind"),
            ("\n\nconv 1 2 3\n", 3, "takes 6 integers"),
            ("fc 12 x\n", 1, "not a non-negative integer"),
            ("fc 12 0\n", 1, "positive"),
            ("conv 8 8 1 2 3 1\n", 1, "odd"),
            ("nonlinear\n", 1, "one label"),
        ];
        for (text, line, needle) in cases {
            let err = parse_network(text).unwrap_err();
            assert_eq!(err.line, line, "{text:?}");
            assert!(err.message.contains(needle), "{}", err.message);
        }
    }

    #[test]
    fn display_forms() {
        let l = LayerSpec::Conv { u_w: 16, u_h: 16, c_i: 128, k_w: 1, k_h: 1, c_o: 128 };
        assert_eq!(l.to_string(), "conv 16x16@128 1x1@128");
        assert_eq!(l.conv_shape(2048).unwrap().c_n(), 8);
        assert_eq!(LayerSpec::Fc { n_i: 784, n_o: 128 }.to_string(), "fc 784->128");
    }
}
