use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use log::{Level, LevelFilter, Log, Metadata, Record};

/// Writes every record with a timestamp to the run log and echoes
/// info-and-above records to stderr.
struct RunLogger {
    file: Mutex<File>,
}

impl Log for RunLogger {
    fn enabled(&self, metadata: &Metadata) -> bool {
        metadata.level() <= Level::Debug
    }

    fn log(&self, record: &Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let stamp = chrono::Local::now().format("%Y-%m-%dT%H:%M:%S%.3f%:z");
        if let Ok(mut f) = self.file.lock() {
            let _ = writeln!(f, "{stamp} {:<5} {}", record.level(), record.args());
        }
        if record.level() <= Level::Info {
            eprintln!("{}: {}", record.level().as_str().to_lowercase(), record.args());
        }
    }

    fn flush(&self) {
        if let Ok(mut f) = self.file.lock() {
            let _ = f.flush();
        }
    }
}

pub fn init(path: &Path) -> std::io::Result<()> {
    let file = File::create(path)?;
    let logger = RunLogger { file: Mutex::new(file) };
    log::set_boxed_logger(Box::new(logger))
        .map(|()| log::set_max_level(LevelFilter::Debug))
        .map_err(std::io::Error::other)
}
