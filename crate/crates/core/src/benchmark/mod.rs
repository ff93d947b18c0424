//! Benchmark problems, grid runs, data profiles and head-to-head tables.

pub mod grid;
pub mod problems;
pub mod profiles;

pub use grid::{run_grid, run_grid_with_threads, BenchRecord, BudgetScale, GridConfig};
pub use problems::{generate_instance, Family, Instance, ProblemSpec};
pub use profiles::{
    data_profile, head_to_head, head_to_head_csv, profile_csv, profile_panels, proxy_undershoot,
    reference_values, solve_time, DataProfile, HeadToHead, HeadToHeadCell,
};
