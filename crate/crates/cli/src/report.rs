use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::schema::JsonMatrix;
use crate::CliError;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Named<T> {
    pub name: String,
    pub value: T,
}

/// Outcome of one run. Field order and number formatting are fixed, so the
/// same inputs, flags and seed always give byte-identical output.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 over the input files, each prefixed with its byte length.
    pub inputs_digest: String,
    pub verdicts: Vec<Named<bool>>,
    pub residuals: Vec<Named<f64>>,
    pub seed: u64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<JsonMatrix>>,
}

impl RunReport {
    pub fn new(command: &str, inputs: &[&[u8]], seed: u64, tolerance: f64) -> Self {
        let mut h = Sha256::new();
        for bytes in inputs {
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(bytes);
        }
        Self {
            command: command.to_string(),
            inputs_digest: hex::encode(h.finalize()),
            verdicts: Vec::new(),
            residuals: Vec::new(),
            seed,
            tolerance,
            rejection: None,
            values: None,
        }
    }

    pub fn verdict(&mut self, name: &str, value: bool) {
        self.verdicts.push(Named {
            name: name.to_string(),
            value,
        });
    }

    /// NaN marks "not applicable" in the library and is left out.
    pub fn residual(&mut self, name: &str, value: f64) {
        if !value.is_nan() {
            self.residuals.push(Named {
                name: name.to_string(),
                value,
            });
        }
    }

    pub fn passed(&self) -> bool {
        self.rejection.is_none() && self.verdicts.iter().all(|v| v.value)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<(), CliError> {
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| CliError::Input(e.to_string()))?;
        writeln!(w).map_err(|e| CliError::Input(e.to_string()))
    }

    /// Rows `section,name,value`; complex entries are written as `[re, im]`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| CliError::Input(e.to_string());
        out.write_record(["section", "name", "value"]).map_err(io)?;
        out.write_record(["command", "command", &self.command])
            .map_err(io)?;
        out.write_record(["inputs_digest", "sha256", &self.inputs_digest])
            .map_err(io)?;
        out.write_record(["seed", "seed", &self.seed.to_string()])
            .map_err(io)?;
        out.write_record(["tolerance", "tolerance", &format!("{:e}", self.tolerance)])
            .map_err(io)?;
        for v in &self.verdicts {
            out.write_record(["verdict", &v.name, &v.value.to_string()])
                .map_err(io)?;
        }
        for r in &self.residuals {
            out.write_record(["residual", &r.name, &format!("{:e}", r.value)])
                .map_err(io)?;
        }
        if let Some(reason) = &self.rejection {
            out.write_record(["rejection", "reason", reason])
                .map_err(io)?;
        }
        if let Some(values) = &self.values {
            write_values_csv(&mut out, values)?;
        }
        out.flush().map_err(|e| CliError::Input(e.to_string()))
    }
}

pub fn write_values_csv<W: Write>(
    out: &mut csv::Writer<W>,
    values: &[JsonMatrix],
) -> Result<(), CliError> {
    for (i, m) in values.iter().enumerate() {
        for (r, row) in m.iter().enumerate() {
            for (c, z) in row.iter().enumerate() {
                out.write_record([
                    "value",
                    &format!("{i}[{r},{c}]"),
                    &format!("[{}, {}]", z[0], z[1]),
                ])
                .map_err(|e| CliError::Input(e.to_string()))?;
            }
        }
    }
    Ok(())
}
