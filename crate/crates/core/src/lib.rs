pub mod corpus;
pub mod driftstats;
pub mod model;
pub mod pipeline;
pub mod protocols;
pub mod rng;
pub mod synthgen;
pub mod textprep;
pub mod time;
