pub mod analysis;
pub mod feeder;
pub mod formulation;
pub mod milp;
pub mod pipeline;
pub mod profile;
pub mod validation;
