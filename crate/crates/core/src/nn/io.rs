//! Binary parameter files: a little-endian `u64` count followed by that
//! many little-endian `f64` values. The architecture travels in a text
//! sidecar (see the `Display` impl of [`MlpArch`]).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{MlpArch, ParamVector};
use crate::{Error, Result};

pub fn write_params<W: Write>(mut out: W, params: &[f64]) -> Result<()> {
    out.write_all(&(params.len() as u64).to_le_bytes())?;
    for v in params {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_params<R: Read>(mut input: R) -> Result<ParamVector> {
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let len = u64::from_le_bytes(word) as usize;
    let mut values = Vec::with_capacity(len.min(1 << 24));
    for _ in 0..len {
        input.read_exact(&mut word)?;
        values.push(f64::from_le_bytes(word));
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format {
            path: "<params>".into(),
            reason: "trailing bytes after parameter block".into(),
        });
    }
    Ok(ParamVector::new(values))
}

pub fn save_params(path: &Path, params: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + 8 * params.len());
    write_params(&mut buf, params)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ParamVector> {
    let bytes = fs::read(path)?;
    read_params(bytes.as_slice()).map_err(|e| match e {
        Error::Format { reason, .. } => Error::Format {
            path: path.display().to_string(),
            reason,
        },
        Error::Io(io) => Error::Format {
            path: path.display().to_string(),
            reason: io.to_string(),
        },
        other => other,
    })
}

/// Writes `<stem>.bin` and `<stem>.arch` into `dir`.
pub fn save_network(dir: &Path, stem: &str, arch: &MlpArch, params: &[f64]) -> Result<()> {
    save_params(&dir.join(format!("{stem}.bin")), params)?;
    fs::write(dir.join(format!("{stem}.arch")), arch.to_string())?;
    Ok(())
}

pub fn load_network(dir: &Path, stem: &str) -> Result<(MlpArch, ParamVector)> {
    let arch: MlpArch = fs::read_to_string(dir.join(format!("{stem}.arch")))?.parse()?;
    let params = load_params(&dir.join(format!("{stem}.bin")))?;
    if params.len() != arch.param_count() {
        return Err(Error::Format {
            path: dir.join(format!("{stem}.bin")).display().to_string(),
            reason: format!(
                "{} parameters stored, architecture needs {}",
                params.len(),
                arch.param_count()
            ),
        });
    }
    Ok((arch, params))
}
