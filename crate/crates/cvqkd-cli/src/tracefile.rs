//! Bit-exact trace file format.
//!
//! Layout: magic `CVQT`, version u16 LE, kind u8 (0 = modulated, 1 = vacuum,
//! 2 = electronic), complex flag u8, sample rate f64 LE, count u64 LE, then
//! the samples as f32 LE (re/im interleaved when complex). Samples are
//! stored at f32 so files stay half the size of the in-memory traces; the
//! round-trip guarantee is at f32 precision.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use cvqkd::core::{SampledTrace, TraceData, TraceKind};

use crate::CliError;

pub const MAGIC: [u8; 4] = *b"CVQT";
pub const VERSION: u16 = 1;

fn kind_code(kind: TraceKind) -> u8 {
    match kind {
        TraceKind::Modulated => 0,
        TraceKind::Vacuum => 1,
        TraceKind::Electronic => 2,
    }
}

fn kind_from_code(code: u8) -> Result<TraceKind, CliError> {
    match code {
        0 => Ok(TraceKind::Modulated),
        1 => Ok(TraceKind::Vacuum),
        2 => Ok(TraceKind::Electronic),
        other => Err(CliError::usage(format!("trace file: unknown kind code {other}"))),
    }
}

pub fn write_trace(path: &Path, trace: &SampledTrace) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| CliError::io(format!("write {}: {e}", path.display()));

    w.write_all(&MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&[kind_code(trace.kind)]).map_err(io_err)?;
    w.write_all(&[trace.is_complex() as u8]).map_err(io_err)?;
    w.write_all(&trace.sample_rate_hz.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(trace.len() as u64).to_le_bytes()).map_err(io_err)?;
    match &trace.data {
        TraceData::Real(v) => {
            for &x in v {
                w.write_all(&(x as f32).to_le_bytes()).map_err(io_err)?;
            }
        }
        TraceData::Complex(v) => {
            for z in v {
                w.write_all(&(z.re as f32).to_le_bytes()).map_err(io_err)?;
                w.write_all(&(z.im as f32).to_le_bytes()).map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

pub fn read_trace(path: &Path) -> Result<SampledTrace, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::io(format!("cannot open {}: {e}", path.display())))?;
    let mut r = BufReader::new(file);
    let bad = |what: &str| CliError::usage(format!("trace file {}: {what}", path.display()));
    let io_err = |e: std::io::Error| CliError::io(format!("read {}: {e}", path.display()));

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if magic != MAGIC {
        return Err(bad("bad magic bytes"));
    }
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2).map_err(io_err)?;
    let version = u16::from_le_bytes(b2);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1).map_err(io_err)?;
    let kind = kind_from_code(b1[0])?;
    r.read_exact(&mut b1).map_err(io_err)?;
    let complex = match b1[0] {
        0 => false,
        1 => true,
        other => return Err(bad(&format!("bad complex flag {other}"))),
    };
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8).map_err(io_err)?;
    let sample_rate_hz = f64::from_le_bytes(b8);
    r.read_exact(&mut b8).map_err(io_err)?;
    let count = u64::from_le_bytes(b8) as usize;

    let scalars = if complex { 2 * count } else { count };
    let mut raw = vec![0u8; 4 * scalars];
    r.read_exact(&mut raw).map_err(|_| bad("truncated sample data"))?;
    let mut tail = [0u8; 1];
    if r.read(&mut tail).map_err(io_err)? != 0 {
        return Err(bad("trailing bytes after sample data"));
    }
    let vals: Vec<f64> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(if complex {
        let samples: Vec<Complex64> =
            vals.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        SampledTrace::complex(samples, sample_rate_hz, kind)
    } else {
        SampledTrace::real(vals, sample_rate_hz, kind)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("cvqt-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn real_round_trip_is_bit_exact() {
        let samples: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.125 - 6.0).collect();
        let trace = SampledTrace::real(samples.clone(), 2e8, TraceKind::Vacuum);
        let path = tmp("real.cvqt");
        write_trace(&path, &trace).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back.kind, TraceKind::Vacuum);
        assert_eq!(back.sample_rate_hz, 2e8);
        // Values chosen exactly representable at f32, so equality is exact.
        assert_eq!(back.as_real().unwrap(), &samples[..]);
    }

    #[test]
    fn complex_round_trip_preserves_f32_payload() {
        let samples: Vec<Complex64> =
            (0..257).map(|i| Complex64::new(i as f64 * 0.5, -(i as f64) * 0.25)).collect();
        let trace = SampledTrace::complex(samples.clone(), 1e9, TraceKind::Modulated);
        let path = tmp("complex.cvqt");
        write_trace(&path, &trace).unwrap();
        let back = read_trace(&path).unwrap();
        assert!(back.is_complex());
        assert_eq!(back.as_complex().unwrap(), &samples[..]);
        // Two writes of the same trace are byte-identical.
        let path2 = tmp("complex2.cvqt");
        write_trace(&path2, &trace).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn corrupt_headers_rejected() {
        let path = tmp("corrupt.cvqt");
        let trace = SampledTrace::real(vec![1.0, 2.0], 10.0, TraceKind::Electronic);
        write_trace(&path, &trace).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_trace(&path).is_err());

        write_trace(&path, &trace).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 1);
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_trace(&path).is_err());

        write_trace(&path, &trace).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0);
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_trace(&path).is_err());
    }
}
