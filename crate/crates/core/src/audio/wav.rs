//! Minimal RIFF/WAVE reader and writer: PCM 16-bit and IEEE float 32-bit.

use std::io::Write;
use std::path::Path;

use super::AudioBuffer;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Sample encoding of a written WAV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn err(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Wav {
            path: self.path.to_path_buf(),
            offset: offset as u64,
            message: message.into(),
        }
    }

    fn take(&self, offset: usize, len: usize, what: &str) -> Result<&[u8]> {
        self.bytes
            .get(offset..offset + len)
            .ok_or_else(|| self.err(offset, format!("file ends inside {what}")))
    }

    fn u16(&self, offset: usize, what: &str) -> Result<u16> {
        let b = self.take(offset, 2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&self, offset: usize, what: &str) -> Result<u32> {
        let b = self.take(offset, 4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

struct Format {
    channels: u16,
    sample_rate: u32,
    bits: u16,
    float: bool,
}

/// Reads a WAV file, mixing all channels to mono by their mean. 16-bit
/// samples are scaled by `1/32768`.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_wav(&bytes, path)
}

/// Parses an in-memory WAV file; `path` is used for error context only.
pub fn parse_wav(bytes: &[u8], path: &Path) -> Result<AudioBuffer> {
    let r = Reader { path, bytes };
    if r.take(0, 4, "RIFF header")? != b"RIFF" {
        return Err(r.err(0, "missing RIFF signature"));
    }
    if r.take(8, 4, "RIFF header")? != b"WAVE" {
        return Err(r.err(8, "missing WAVE form type"));
    }

    let mut format: Option<Format> = None;
    let mut offset = 12;
    while offset + 8 <= bytes.len() {
        let id = r.take(offset, 4, "chunk header")?;
        let size = r.u32(offset + 4, "chunk header")? as usize;
        let body = offset + 8;
        match id {
            b"fmt " => format = Some(parse_format(&r, body, size)?),
            b"data" => {
                let format = format
                    .as_ref()
                    .ok_or_else(|| r.err(offset, "data chunk before fmt chunk"))?;
                let data = r.take(body, size, "data chunk")?;
                return decode(&r, body, data, format);
            }
            _ => {}
        }
        offset = body + size + (size & 1);
    }
    Err(r.err(bytes.len(), "no data chunk"))
}

fn parse_format(r: &Reader, body: usize, size: usize) -> Result<Format> {
    if size < 16 {
        return Err(r.err(body, format!("fmt chunk is {size} bytes, expected at least 16")));
    }
    let mut tag = r.u16(body, "fmt chunk")?;
    let channels = r.u16(body + 2, "fmt chunk")?;
    let sample_rate = r.u32(body + 4, "fmt chunk")?;
    let bits = r.u16(body + 14, "fmt chunk")?;
    if tag == FORMAT_EXTENSIBLE {
        if size < 40 {
            return Err(r.err(body, "extensible fmt chunk is too short"));
        }
        tag = r.u16(body + 24, "fmt chunk")?;
    }
    let float = match (tag, bits) {
        (FORMAT_PCM, 16) => false,
        (FORMAT_FLOAT, 32) => true,
        _ => {
            return Err(r.err(
                body,
                format!("unsupported encoding (format tag {tag}, {bits} bits); expected 16-bit PCM or 32-bit float"),
            ))
        }
    };
    if !(1..=2).contains(&channels) {
        return Err(r.err(body + 2, format!("{channels} channels; expected 1 or 2")));
    }
    if sample_rate == 0 {
        return Err(r.err(body + 4, "sample rate is zero"));
    }
    Ok(Format {
        channels,
        sample_rate,
        bits,
        float,
    })
}

fn decode(r: &Reader, body: usize, data: &[u8], format: &Format) -> Result<AudioBuffer> {
    let width = format.bits as usize / 8;
    let frame = width * format.channels as usize;
    if data.len() % frame != 0 {
        return Err(r.err(
            body + data.len(),
            format!("data chunk of {} bytes is not a whole number of {frame}-byte frames", data.len()),
        ));
    }
    if data.is_empty() {
        return Err(r.err(body, "data chunk holds zero samples"));
    }
    let sample = |b: &[u8]| -> f64 {
        if format.float {
            f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64
        } else {
            i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0
        }
    };
    let samples = data
        .chunks_exact(frame)
        .map(|f| {
            let sum: f64 = f.chunks_exact(width).map(sample).sum();
            sum / format.channels as f64
        })
        .collect::<Vec<_>>();
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(r.err(body + i * frame, "non-finite sample"));
    }
    AudioBuffer::new(format.sample_rate, samples)
}

/// Writes a mono WAV file. 16-bit output clips to `[-1, 1)`.
pub fn write_wav<W: Write>(mut out: W, buf: &AudioBuffer, encoding: WavEncoding) -> std::io::Result<()> {
    let (tag, bits) = match encoding {
        WavEncoding::Pcm16 => (FORMAT_PCM, 16u16),
        WavEncoding::Float32 => (FORMAT_FLOAT, 32u16),
    };
    let width = bits as u32 / 8;
    let data_len = buf.samples().len() as u32 * width;
    out.write_all(b"RIFF")?;
    out.write_all(&(36 + data_len + (data_len & 1)).to_le_bytes())?;
    out.write_all(b"WAVEfmt ")?;
    out.write_all(&16u32.to_le_bytes())?;
    out.write_all(&tag.to_le_bytes())?;
    out.write_all(&1u16.to_le_bytes())?;
    out.write_all(&buf.sample_rate().to_le_bytes())?;
    out.write_all(&(buf.sample_rate() * width).to_le_bytes())?;
    out.write_all(&(width as u16).to_le_bytes())?;
    out.write_all(&bits.to_le_bytes())?;
    out.write_all(b"data")?;
    out.write_all(&data_len.to_le_bytes())?;
    for &v in buf.samples() {
        match encoding {
            WavEncoding::Pcm16 => {
                let q = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.write_all(&q.to_le_bytes())?;
            }
            WavEncoding::Float32 => out.write_all(&(v as f32).to_le_bytes())?,
        }
    }
    if data_len & 1 == 1 {
        out.write_all(&[0])?;
    }
    Ok(())
}
