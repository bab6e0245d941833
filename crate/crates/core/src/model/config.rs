use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numcore::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Tanh,
    LeakyRelu(f64),
    Identity,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::Tanh => tape.tanh(x),
            Activation::LeakyRelu(s) => tape.leaky_relu(x, s),
            Activation::Identity => x,
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::LeakyRelu(s) => {
                if x > 0.0 {
                    x
                } else {
                    s * x
                }
            }
            Activation::Identity => x,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Tanh => f.write_str("tanh"),
            Activation::LeakyRelu(s) => write!(f, "leaky_relu:{s}"),
            Activation::Identity => f.write_str("identity"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            "leaky_relu" => Ok(Activation::LeakyRelu(0.2)),
            _ => {
                if let Some(slope) = s.strip_prefix("leaky_relu:") {
                    let v: f64 = slope
                        .parse()
                        .map_err(|_| Error::Config(format!("bad leaky_relu slope '{slope}'")))?;
                    Ok(Activation::LeakyRelu(v))
                } else {
                    Err(Error::Config(format!("unknown activation '{s}'")))
                }
            }
        }
    }
}

/// How layer outputs are pooled into one vector per subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMode {
    /// Mean of the center's rows across layers.
    Literal,
    /// Mean of every entity's rows across layers.
    EntityMean,
}

impl fmt::Display for PoolMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolMode::Literal => "literal",
            PoolMode::EntityMean => "entity-mean",
        })
    }
}

impl FromStr for PoolMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(PoolMode::Literal),
            "entity-mean" => Ok(PoolMode::EntityMean),
            _ => Err(Error::Config(format!("unknown pool mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub dim: usize,
    pub layers: usize,
    /// Number of subgraphs fused per step.
    pub samplers: usize,
    pub pool: PoolMode,
    /// Nonlinearity on the attention scores.
    pub attn_act: Activation,
    /// Nonlinearity on the aggregated neighbor messages.
    pub agg_act: Activation,
    pub fuse_act: Activation,
    /// Nodes without in-subgraph neighbors attend to themselves.
    pub self_loop_fallback: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 128,
            layers: 3,
            samplers: 2,
            pool: PoolMode::Literal,
            attn_act: Activation::LeakyRelu(0.2),
            agg_act: Activation::Tanh,
            fuse_act: Activation::Tanh,
            self_loop_fallback: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.layers == 0 || self.samplers == 0 {
            return Err(Error::Config(format!(
                "dim, layers and samplers must be positive (got {}, {}, {})",
                self.dim, self.layers, self.samplers
            )));
        }
        Ok(())
    }
}
