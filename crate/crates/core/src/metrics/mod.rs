//! Driving-quality indicators per episode and averaged over runs.

mod logger;
mod report;

pub use logger::{
    aggregate, step_jerk, AggregateReport, EpisodeLogger, EpisodeMetrics, Indicators, Jerk,
};
pub use report::{
    export_report, fmt_value, parse_report_csv, render_report, write_cross_eval,
    write_episodes_csv, CrossEvalCell, ReportFormat,
};
