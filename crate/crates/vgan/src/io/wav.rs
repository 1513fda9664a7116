//! 16-bit PCM RIFF/WAVE.

use std::path::Path;

use vgan_core::dsp::AudioBuffer;

use crate::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

fn u16_at(b: &[u8], i: usize) -> u16 {
    u16::from_le_bytes([b[i], b[i + 1]])
}

fn u32_at(b: &[u8], i: usize) -> u32 {
    u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]])
}

/// Decodes a PCM16 WAV image. Channel 0 is kept; samples are divided by
/// 32768.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Format("RIFF: missing RIFF/WAVE header".into()));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u32)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let name = String::from_utf8_lossy(id).into_owned();
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        if body + size > bytes.len() {
            return Err(Error::Format(format!(
                "chunk '{name}' truncated: declares {size} bytes, {} present",
                bytes.len() - body
            )));
        }
        let chunk = &bytes[body..body + size];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::Format(format!("chunk 'fmt ' too short ({size} bytes)")));
                }
                let mut tag = u16_at(chunk, 0);
                let channels = u16_at(chunk, 2);
                let rate = u32_at(chunk, 4);
                let bits = u16_at(chunk, 14);
                if tag == FORMAT_EXTENSIBLE && size >= 40 {
                    tag = u16_at(chunk, 24);
                }
                if tag != FORMAT_PCM {
                    return Err(Error::Format(format!("chunk 'fmt ': unsupported encoding tag {tag:#06x}, need PCM")));
                }
                if bits != 16 {
                    return Err(Error::Format(format!("chunk 'fmt ': {bits}-bit samples, need 16")));
                }
                if channels == 0 {
                    return Err(Error::Format("chunk 'fmt ': zero channels".into()));
                }
                fmt = Some((channels, rate));
            }
            b"data" => {
                let (channels, rate) =
                    fmt.ok_or_else(|| Error::Format("chunk 'data' precedes chunk 'fmt '".into()))?;
                let frame = 2 * channels as usize;
                let samples = chunk
                    .chunks_exact(frame)
                    .map(|f| i16::from_le_bytes([f[0], f[1]]) as f64 / 32768.0)
                    .collect();
                return Ok(AudioBuffer::new(samples, rate)?);
            }
            _ => {}
        }
        pos = body + size + (size & 1);
    }
    Err(Error::Format("chunk 'data' not found".into()))
}

/// Mono PCM16 encoding; samples are scaled by 32768, rounded and clipped.
pub fn encode_wav(audio: &AudioBuffer) -> Vec<u8> {
    let data_len = audio.samples().len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&audio.sample_rate().to_le_bytes());
    out.extend_from_slice(&(audio.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in audio.samples() {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn read_wav(path: &Path) -> Result<AudioBuffer> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_wav(path: &Path, audio: &AudioBuffer) -> Result<()> {
    std::fs::write(path, encode_wav(audio)).map_err(|e| Error::io(path, e))
}
