//! LHV mixture files: one `weight labels` pair per line, `#` comments.
//!
//! ```text
//! # weight  θ1 θ1' θ2 θ2'
//! 0.5       PPPP
//! 0.25      PFPF
//! 0.25      FPUU
//! ```
//!
//! Labels are `P` (pass), `F` (fail), `U` (undetected).

use std::path::Path;

use chbell_core::{LhvMixture, LhvStrategy};

use crate::error::{CliError, Result};

pub fn load_mixture(path: &Path) -> Result<LhvMixture> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read LHV mixture {}: {e}", path.display())))?;
    parse_mixture(&text)
}

pub fn parse_mixture(text: &str) -> Result<LhvMixture> {
    let mut components = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(weight), Some(labels), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(CliError::invalid(format!(
                "mixture line {}: expected `weight labels`",
                lineno + 1
            )));
        };
        let weight: f64 = weight
            .parse()
            .map_err(|_| CliError::invalid(format!("mixture line {}: bad weight `{weight}`", lineno + 1)))?;
        let strategy = LhvStrategy::parse(labels)
            .map_err(|e| CliError::invalid(format!("mixture line {}: {e}", lineno + 1)))?;
        components.push((weight, strategy));
    }
    Ok(LhvMixture::new(components)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_weights_and_labels() {
        let m = parse_mixture("# comment\n0.5 PPPP\n0.25 pfpf\n0.25 FPUU # efficiency form\n").unwrap();
        assert_eq!(m.components().len(), 3);
        assert_eq!(m.components()[1].1.to_string(), "PFPF");
    }

    #[test]
    fn rejects_bad_mixtures() {
        assert_eq!(parse_mixture("").unwrap_err().exit_code(), 2);
        assert_eq!(parse_mixture("0.5 PPPP").unwrap_err().exit_code(), 2);
        assert_eq!(parse_mixture("x PPPP").unwrap_err().exit_code(), 2);
        assert_eq!(parse_mixture("1 PPXP").unwrap_err().exit_code(), 2);
        assert_eq!(parse_mixture("1 PPPP extra").unwrap_err().exit_code(), 2);
    }
}
