mod app;
mod commands;
mod config;
mod report;

use std::process::ExitCode;

use tracing_subscriber::filter::LevelFilter;

/// BOUNDARY_BUBBLE_LOG takes a level name: off, error, warn, info, debug, trace.
fn log_level(var: Option<&str>) -> LevelFilter {
    var.and_then(|s| s.trim().parse().ok()).unwrap_or(LevelFilter::WARN)
}

fn main() -> ExitCode {
    let level = log_level(std::env::var("BOUNDARY_BUBBLE_LOG").ok().as_deref());
    tracing_subscriber::fmt().with_max_level(level).with_ansi(false).with_writer(std::io::stderr).init();
    let code = app::run_cli(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_levels() {
        assert_eq!(log_level(None), LevelFilter::WARN);
        assert_eq!(log_level(Some("info")), LevelFilter::INFO);
        assert_eq!(log_level(Some(" TRACE ")), LevelFilter::TRACE);
        assert_eq!(log_level(Some("off")), LevelFilter::OFF);
        assert_eq!(log_level(Some("loud")), LevelFilter::WARN);
    }
}
