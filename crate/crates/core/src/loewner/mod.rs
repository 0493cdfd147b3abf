//! Chordal Loewner evolution in the upper half-plane.

mod driving;
mod flow;
mod multi;
mod splitting;

pub use driving::{Branch, DrivingSpec, TimeFunction};
pub use flow::{
    coefficient_flow_check, evolve_series, flow, map_f, solve_ode_point, trace_hull, FlowOutcome,
    HullTrace, LoewnerOptions, PointTrajectory, SeriesTrajectory,
};
pub use multi::{
    vector_time_direct, vector_time_reduce, ReducedTime, Segment, SuccessiveSlits, VectorTimeSpec,
};
pub use splitting::{bump, time_splitting_solve, TimeSplitField};
