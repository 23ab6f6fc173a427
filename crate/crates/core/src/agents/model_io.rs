//! Versioned plain-text model files.
//!
//! ```text
//! shoplab-model 1
//! algo ppo
//! net policy 25 64 64 6
//! <coefficients, space separated>
//! net value 25 64 64 1
//! <coefficients>
//! norm <count>
//! <feature means>
//! <feature variances>
//! end
//! ```
//!
//! Only PPO models carry the `norm` block. Coefficients use Rust's shortest
//! round-trip formatting, so a save/load cycle is bitwise lossless.

use std::fmt::Write as _;
use std::path::Path;

use super::dqn::DqnAgent;
use super::mlp::Mlp;
use super::normalize::ObsNormalizer;
use super::ppo::PpoAgent;
use crate::env::EnvState;
use crate::error::{Error, Result};
use crate::policy::{Policy, PolicyRng};

const MAGIC: &str = "shoplab-model";
const VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Ppo(PpoAgent),
    Dqn(DqnAgent),
}

impl TrainedModel {
    pub fn algo(&self) -> &'static str {
        match self {
            TrainedModel::Ppo(_) => "ppo",
            TrainedModel::Dqn(_) => "dqn",
        }
    }

    fn nets(&self) -> Vec<(&'static str, &Mlp)> {
        match self {
            TrainedModel::Ppo(a) => vec![("policy", &a.policy), ("value", &a.value)],
            TrainedModel::Dqn(a) => vec![("q", &a.q)],
        }
    }

    /// Observation length the model expects.
    pub fn input_dim(&self) -> usize {
        self.nets()[0].1.input_dim()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {VERSION}\nalgo {}\n", self.algo());
        for (name, net) in self.nets() {
            let dims: Vec<String> = net.dims().iter().map(usize::to_string).collect();
            writeln!(out, "net {name} {}", dims.join(" ")).expect("write to string");
            let coefs: Vec<String> = net.params().iter().map(f64::to_string).collect();
            out.push_str(&coefs.join(" "));
            out.push('\n');
        }
        if let TrainedModel::Ppo(agent) = self {
            let n = &agent.normalizer;
            writeln!(out, "norm {}", n.count()).expect("write to string");
            for row in [n.mean(), n.var()] {
                let values: Vec<String> = row.iter().map(f64::to_string).collect();
                out.push_str(&values.join(" "));
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let malformed = |line: usize, reason: String| Error::Malformed {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let truncated = |what: &str| Error::ModelTruncated(format!("{}: {what}", path.display()));
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

        let (_, header) = lines.next().ok_or_else(|| truncated("empty file"))?;
        match header.split_once(' ') {
            Some((MAGIC, VERSION)) => {}
            Some((MAGIC, other)) => {
                return Err(Error::ModelVersion {
                    found: other.to_string(),
                    expected: VERSION.to_string(),
                })
            }
            _ => return Err(malformed(1, format!("expected `{MAGIC} {VERSION}` header"))),
        }
        let (n, algo_line) = lines.next().ok_or_else(|| truncated("missing algo line"))?;
        let algo = algo_line
            .strip_prefix("algo ")
            .ok_or_else(|| malformed(n, "expected `algo <name>`".into()))?;
        let names: &[&str] = match algo {
            "ppo" => &["policy", "value"],
            "dqn" => &["q"],
            other => return Err(malformed(n, format!("unknown algo `{other}`"))),
        };

        let mut nets = Vec::with_capacity(names.len());
        for &name in names {
            let (n, spec) = lines
                .next()
                .ok_or_else(|| truncated(&format!("missing net `{name}`")))?;
            let mut fields = spec.split_whitespace();
            if fields.next() != Some("net") || fields.next() != Some(name) {
                return Err(malformed(n, format!("expected `net {name} <dims>`")));
            }
            let dims = fields
                .map(str::parse::<usize>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| malformed(n, format!("bad dimension: {e}")))?;
            let expected = Mlp::zeros(&dims).map_err(|e| malformed(n, e.to_string()))?.num_params();
            let (n, coef_line) = lines
                .next()
                .ok_or_else(|| truncated(&format!("missing coefficients of `{name}`")))?;
            let coefs = coef_line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| malformed(n, format!("bad coefficient: {e}")))?;
            if coefs.len() < expected {
                return Err(truncated(&format!(
                    "net `{name}` has {} of {expected} coefficients",
                    coefs.len()
                )));
            }
            nets.push(Mlp::from_params(&dims, coefs).map_err(|e| malformed(n, e.to_string()))?);
        }
        let normalizer = if algo == "ppo" {
            let obs_dim = nets[0].input_dim();
            let (n, head) = lines.next().ok_or_else(|| truncated("missing `norm` block"))?;
            let count = head
                .strip_prefix("norm ")
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| malformed(n, "expected `norm <count>`".into()))?;
            let mut rows = Vec::with_capacity(2);
            for what in ["means", "variances"] {
                let (n, line) = lines
                    .next()
                    .ok_or_else(|| truncated(&format!("missing normalizer {what}")))?;
                let row = line
                    .split_whitespace()
                    .map(str::parse::<f64>)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| malformed(n, format!("bad normalizer value: {e}")))?;
                if row.len() < obs_dim {
                    return Err(truncated(&format!(
                        "normalizer {what} has {} of {obs_dim} values",
                        row.len()
                    )));
                }
                if row.len() > obs_dim {
                    return Err(malformed(n, format!("expected {obs_dim} normalizer {what}")));
                }
                rows.push(row);
            }
            let var = rows.pop().expect("two rows");
            let mean = rows.pop().expect("two rows");
            Some(
                ObsNormalizer::from_parts(count, mean, var)
                    .ok_or_else(|| malformed(n, "invalid normalizer statistics".into()))?,
            )
        } else {
            None
        };
        match lines.next() {
            Some((_, "end")) => {}
            Some((n, other)) => return Err(malformed(n, format!("expected `end`, found `{other}`"))),
            None => return Err(truncated("missing `end` marker")),
        }
        let mut nets = nets.into_iter();
        let mut next = || nets.next().expect("one net per name");
        Ok(match normalizer {
            Some(normalizer) => TrainedModel::Ppo(PpoAgent {
                policy: next(),
                value: next(),
                normalizer,
            }),
            None => TrainedModel::Dqn(DqnAgent { q: next() }),
        })
    }
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_text()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrainedModel::from_text(&text, path)
}

impl Policy for TrainedModel {
    fn name(&self) -> String {
        self.algo().to_string()
    }

    fn select(
        &mut self,
        state: &EnvState,
        observation: &[f64],
        mask: &[bool],
        rng: &mut PolicyRng,
    ) -> Result<usize> {
        match self {
            TrainedModel::Ppo(a) => a.select(state, observation, mask, rng),
            TrainedModel::Dqn(a) => a.select(state, observation, mask, rng),
        }
    }
}
