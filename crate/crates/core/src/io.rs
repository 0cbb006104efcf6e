//! JSON input and output for generators and sampled loops.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chain::Generator;
use crate::error::{Error, Result};
use crate::soup::LoopSoup;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub states: Vec<String>,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
}

impl GeneratorSpec {
    pub fn of(g: &Generator) -> Self {
        let n = g.n();
        GeneratorSpec {
            states: g.labels().to_vec(),
            l: (0..n).map(|x| (0..n).map(|y| g.rate(x, y)).collect()).collect(),
        }
    }

    pub fn build(&self) -> Result<Generator> {
        let n = self.states.len();
        if self.l.len() != n {
            return Err(Error::ParseError(format!("{} states but {} matrix rows", n, self.l.len())));
        }
        if let Some((i, row)) = self.l.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::ParseError(format!("row {i} (state `{}`) has {} entries, expected {n}", self.states[i], row.len())));
        }
        Generator::new(self.states.clone(), &self.l).map_err(|e| Error::ValidationError(e.to_string()))
    }
}

pub fn parse_generator(text: &str) -> Result<Generator> {
    let spec: GeneratorSpec = serde_json::from_str(text)
        .map_err(|e| Error::ParseError(format!("line {} column {}: {e}", e.line(), e.column())))?;
    spec.build()
}

pub fn load_generator(path: &Path) -> Result<Generator> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ParseError(format!("{}: {e}", path.display())))?;
    parse_generator(&text).map_err(|e| match e {
        Error::ParseError(m) => Error::ParseError(format!("{}: {m}", path.display())),
        Error::ValidationError(m) => Error::ValidationError(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn generator_to_json(g: &Generator) -> Value {
    serde_json::to_value(GeneratorSpec::of(g)).expect("plain data")
}

/// Soup as JSON: non-trivial loops as `[[label, hold], ..]` plus the trivial
/// occupation per state.
pub fn soup_to_json(soup: &LoopSoup, labels: &[String]) -> Value {
    json!({
        "alpha": soup.alpha,
        "seed": soup.seed,
        "replica": soup.replica,
        "loops": soup.loops.iter().map(|l| l.to_json(labels)).collect::<Vec<_>>(),
        "trivial_occupation": labels.iter().cloned().zip(soup.trivial_occupation.iter().map(|&t| json!(t))).collect::<serde_json::Map<String, Value>>(),
    })
}
