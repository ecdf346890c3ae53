use evtrig_core::Trace;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or inconsistent configuration; exit code 2.
    #[error("{}", describe(section, field, msg))]
    Config { section: String, field: String, msg: String },
    /// Event cascade that never settles; exit code 3. Carries the partial trace.
    #[error("Zeno abort: agent {agent} kept firing near t = {t}")]
    Zeno { agent: usize, t: f64, trace: Box<Trace> },
    #[error("i/o error: {0}")]
    Io(String),
}

fn describe(section: &str, field: &str, msg: &str) -> String {
    match (section.is_empty(), field.is_empty()) {
        (true, _) => msg.to_string(),
        (false, true) => format!("[{section}] {msg}"),
        (false, false) => format!("[{section}] {field}: {msg}"),
    }
}

impl CliError {
    pub fn config(section: &str, field: &str, msg: impl Into<String>) -> Self {
        CliError::Config { section: section.into(), field: field.into(), msg: msg.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Zeno { .. } => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
