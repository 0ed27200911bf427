use std::io;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// JSON formatter that prints every float with 17 significant digits.
struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser).expect("reports serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    system: &'a str,
    config_sha256: String,
    overrides: &'a [String],
    outputs: Vec<String>,
    wall_time_s: f64,
    timestamp: u64,
    verdict: &'a str,
}

/// Collects output files of one run and writes the manifest last.
pub struct Run {
    pub dir: PathBuf,
    pub stem: String,
    command: String,
    system: String,
    config_text: String,
    overrides: Vec<String>,
    outputs: Vec<PathBuf>,
    start: Instant,
}

impl Run {
    pub fn new(dir: &Path, command: &str, system: &str, config_text: &str, overrides: &[String]) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Run {
            dir: dir.to_path_buf(),
            stem: format!("{system}-{command}"),
            command: command.into(),
            system: system.into(),
            config_text: config_text.into(),
            overrides: overrides.to_vec(),
            outputs: vec![],
            start: Instant::now(),
        })
    }

    pub fn write(&mut self, suffix: &str, contents: &str) -> io::Result<PathBuf> {
        let path = self.dir.join(format!("{}{suffix}", self.stem));
        std::fs::write(&path, contents)?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    /// File names written so far, in order.
    pub fn outputs(&self) -> impl Iterator<Item = String> + '_ {
        self.outputs
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
    }

    pub fn finish(self, verdict: &str) -> io::Result<PathBuf> {
        let mut hash = Sha256::new();
        hash.update(self.config_text.as_bytes());
        for o in &self.overrides {
            hash.update(b"\n");
            hash.update(o.as_bytes());
        }
        let manifest = Manifest {
            command: &self.command,
            system: &self.system,
            config_sha256: hash.finalize().iter().map(|b| format!("{b:02x}")).collect(),
            overrides: &self.overrides,
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            verdict,
        };
        let path = self.dir.join(format!("{}-manifest.json", self.stem));
        std::fs::write(&path, to_json(&manifest))?;
        Ok(path)
    }
}
