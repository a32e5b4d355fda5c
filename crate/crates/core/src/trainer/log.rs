use std::fmt::Write as _;
use std::path::Path;

use super::TrainError;

pub const LOG_HEADER: &str = "epoch,neg_elbo,jsd,lambda,temperature,wall_time_s";

/// Metrics of one completed epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: u32,
    /// Mean `recon + kl` over the epoch's samples, nats per sample.
    pub neg_elbo: f64,
    /// Mean within-class JSD term over the epoch's samples, nats.
    pub jsd: f64,
    pub lambda: f64,
    pub temperature: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
}

impl TrainingLog {
    pub fn push(&mut self, r: EpochRecord) {
        self.records.push(r);
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn get(&self, epoch: u32) -> Option<&EpochRecord> {
        self.records.iter().find(|r| r.epoch == epoch)
    }

    /// Serializes as CSV. Floats use the shortest representation that
    /// parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(LOG_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epoch, r.neg_elbo, r.jsd, r.lambda, r.temperature, r.wall_time_s
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TrainError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(LOG_HEADER) {
            return Err(TrainError::BadLog("missing or unexpected header".into()));
        }
        let mut log = TrainingLog::default();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(TrainError::BadLog(format!("line {}: expected 6 fields", n + 2)));
            }
            let num = |i: usize| {
                fields[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| TrainError::BadLog(format!("line {}: {e}", n + 2)))
            };
            let epoch = fields[0]
                .trim()
                .parse::<u32>()
                .map_err(|e| TrainError::BadLog(format!("line {}: {e}", n + 2)))?;
            log.push(EpochRecord {
                epoch,
                neg_elbo: num(1)?,
                jsd: num(2)?,
                lambda: num(3)?,
                temperature: num(4)?,
                wall_time_s: num(5)?,
            });
        }
        Ok(log)
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        std::fs::write(path, self.to_csv()).map_err(|source| TrainError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let text = std::fs::read_to_string(path).map_err(|source| TrainError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv(&text)
    }
}
