use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// A configuration invariant does not hold.
    #[error("{0}")]
    Invalid(String),
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("cannot read config {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlacementError {
    #[error("max_uavs exceeded: {required} UAVs required, cap is {cap}")]
    MaxUavsExceeded { required: usize, cap: usize },
    #[error("no active UAV")]
    NoActiveUav,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RoutingError {
    #[error("no root designated")]
    NoRoot,
    #[error("unreachable node {0}")]
    Unreachable(usize),
    #[error("no live UAV")]
    NoLiveUav,
}

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("received power undefined at distance {0}")]
    NonPositiveDistance(f64),
}

#[derive(Debug, Error)]
pub enum GridParseError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("grid is empty")]
    Empty,
    #[error("grid is not a complete lattice: {0}")]
    NotRectangular(String),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("at tick {tick}")]
    AtTick {
        tick: u64,
        #[source]
        source: Box<SimError>,
    },
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Grid(#[from] GridParseError),
}

impl SimError {
    pub fn at_tick(self, tick: u64) -> SimError {
        SimError::AtTick {
            tick,
            source: Box::new(self),
        }
    }
}
