pub mod ad_training;
pub mod cli;
pub mod evaluation;
pub mod forecasters;
pub mod lp;
pub mod numerics;
pub mod policies;
pub mod problems;
pub mod report;
pub mod scenario_search;
pub mod two_stage;
