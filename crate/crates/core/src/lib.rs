//! Discrete-time simulator of an SDN-assisted UAV base-station network over a
//! circular venue.
//!
//! Users sit in the ring `[R' - R, R' + R]` around the venue center. The ring
//! is cut into equal angular sectors, each sector gets enough UAVs for its
//! demand, and a root UAV near the ground controller aggregates all traffic.
//! Every tick the simulator updates traffic, adapts placement, applies
//! congestion feedback when the fleet is capped, and routes relay traffic to
//! the root over a shortest-path tree.

pub mod config;
pub mod error;
pub mod model;
pub mod output;
pub mod placement;
pub mod radio;
pub mod routing;
pub mod sectorization;
pub mod sim;
pub mod traffic;
pub mod traffic_units;

pub use config::{MaxUavs, RateRange, SimConfig};
pub use error::{ConfigError, GridParseError, PlacementError, RadioError, RoutingError, SimError};
pub use model::{init_scenario, ControllerPos, Role, Sector, UavNode, UserDevice};
pub use placement::PlacementState;
pub use radio::SnrGrid;
pub use routing::{RoutingTree, UavGraph};
pub use sim::{run, RunFlags, RunReport, Simulation};
pub use traffic::{FeedbackMessage, TickMetrics};
pub use traffic_units::{ClassRates, Traffic};
